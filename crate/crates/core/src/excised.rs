//! One-level density of the excised orthogonal ensemble: SO(2N) matrices
//! with log Λ(1) > χ.

use crate::charpoly::log_lambda_1_floored;
use crate::haar::{EnsembleKind, SamplerConfig};
use crate::mc::fold_chunks;
use crate::moments::{q_value, sqrt_q, u_factor, v_factor};
use crate::specfun::{barnes_g, sqrt_continued};
use crate::{c, Error, Result, C64};
use std::f64::consts::{LN_2, PI};

pub const RESIDUE_RADIUS: f64 = 0.1;
pub const RESIDUE_POINTS: usize = 256;
const MAX_POINTS: usize = 4096;
const RESIDUE_TOL: f64 = 1e-9;
const BRANCH_TOL: f64 = 1e-6;
pub const MAX_K: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ExcisedConfig {
    pub n: usize,
    pub chi: f64,
    pub bins: usize,
    pub n_samples: usize,
    pub phi_grid: Vec<f64>,
}

impl ExcisedConfig {
    /// Bin centres on (0, π) as the φ grid.
    pub fn with_bins(n: usize, chi: f64, bins: usize, n_samples: usize) -> Self {
        ExcisedConfig {
            n,
            chi,
            bins,
            n_samples,
            phi_grid: bin_centres(bins),
        }
    }
}

pub fn bin_centres(bins: usize) -> Vec<f64> {
    let h = PI / bins as f64;
    (0..bins).map(|i| (i as f64 + 0.5) * h).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    UnitArea,
    RawCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub phi: Vec<f64>,
    pub density: Vec<f64>,
    pub normalization: Normalization,
}

/// Trapezoid rule on the grid with the end values held constant out to 0
/// and π (the midpoint rule when the grid is bin centres).
pub fn curve_area(phi: &[f64], density: &[f64]) -> f64 {
    curve_area_on(phi, density, PI)
}

/// As [`curve_area`] on (0, hi).
pub fn curve_area_on(phi: &[f64], density: &[f64], hi: f64) -> f64 {
    if phi.is_empty() {
        return 0.0;
    }
    let last = phi.len() - 1;
    let mut a = density[0] * phi[0] + density[last] * (hi - phi[last]);
    for i in 0..last {
        a += 0.5 * (density[i] + density[i + 1]) * (phi[i + 1] - phi[i]);
    }
    a
}

impl DensityCurve {
    pub fn unit_area(self) -> Self {
        self.unit_area_on(PI)
    }

    pub fn unit_area_on(mut self, hi: f64) -> Self {
        let a = curve_area_on(&self.phi, &self.density, hi);
        for d in &mut self.density {
            *d /= a;
        }
        self.normalization = Normalization::UnitArea;
        self
    }

    pub fn sup_distance(&self, other: &DensityCurve) -> f64 {
        self.density
            .iter()
            .zip(&other.density)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidueTerm {
    /// −1 for r = 0, k ≥ 0 for r = −(2k+1)/2.
    pub k_index: i32,
    pub values: Vec<C64>,
    pub chi_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcisedStats {
    pub acceptance_rate: f64,
    pub accepted: u64,
    pub total: u64,
    /// Samples whose log Λ(1) hit the floor; never counted as accepted.
    pub floored: u64,
}

/// Histogram of all eigenangles of the SO(2N) samples with log Λ(1) > χ.
pub fn mc_excised_density(cfg: &ExcisedConfig, sampler: &SamplerConfig) -> Result<(DensityCurve, ExcisedStats)> {
    if cfg.n_samples < 10_000 {
        return Err(Error::InvalidArgument("n_samples must be at least 10⁴".into()));
    }
    if cfg.bins < 10 {
        return Err(Error::InvalidArgument("bins must be at least 10".into()));
    }
    let bins = cfg.bins;
    let h = PI / bins as f64;
    let parts = fold_chunks(
        EnsembleKind::SpecialOrthogonalEven,
        cfg.n,
        sampler,
        0,
        cfg.n_samples,
        || (vec![0u64; bins], 0u64, 0u64),
        |acc, s| {
            let (l, floored) = log_lambda_1_floored(s);
            if floored {
                acc.2 += 1;
            } else if l > cfg.chi {
                acc.1 += 1;
                for &t in &s.angles {
                    let b = ((t / h) as usize).min(bins - 1);
                    acc.0[b] += 1;
                }
            }
            Ok(())
        },
    )?;
    let mut counts = vec![0u64; bins];
    let (mut accepted, mut floored) = (0u64, 0u64);
    for (h, a, f) in &parts {
        for (c, x) in counts.iter_mut().zip(h) {
            *c += x;
        }
        accepted += a;
        floored += f;
    }
    if accepted < 100 {
        return Err(Error::TooFewAccepted {
            accepted: accepted as usize,
            needed: 100,
        });
    }
    let curve = DensityCurve {
        phi: bin_centres(bins),
        density: counts.iter().map(|&c| c as f64).collect(),
        normalization: Normalization::RawCount,
    }
    .unit_area();
    let total = cfg.n_samples as u64;
    Ok((
        curve,
        ExcisedStats {
            acceptance_rate: accepted as f64 / total as f64,
            accepted,
            total,
            floored,
        },
    ))
}

/// Full-SO(2N) one-level density (2N−1 + sin((2N−1)φ)/sin φ)/2π.
pub fn r0_density(n: usize, phi: f64) -> f64 {
    let m = (2 * n - 1) as f64;
    let s = phi.sin();
    let ratio = if s.abs() < 1e-8 {
        m * (m * phi).cos() / phi.cos()
    } else {
        (m * phi).sin() / s
    };
    (m + ratio) / (2.0 * PI)
}

/// ∫₀^φ r0_density / N, the distribution function of one eigenangle.
pub fn r0_cdf(n: usize, phi: f64) -> f64 {
    let nf = n as f64;
    let mut s = 2.0 * nf * phi;
    for j in 1..n {
        s += (2.0 * j as f64 * phi).sin() / j as f64;
    }
    s / (2.0 * PI * nf)
}

/// The bracket multiplying 𝒱 e^{−χr}/r: 2N(1 + r(r−1)²/(2N)) + 2𝒰(N, r, iφ).
fn so_bracket(nn: f64, r: C64, phi: f64) -> Result<C64> {
    Ok(2.0 * nn + r * (r - 1.0) * (r - 1.0) + 2.0 * u_factor(nn, r, c(0.0, phi))?)
}

/// e^{−χr}/r · 𝒱(N, r) · (2N(1 + r(r−1)²/(2N)) + 2𝒰(N, r, iφ)).
pub fn excised_integrand(n: usize, chi: f64, r: C64, phi: f64) -> Result<C64> {
    if r.norm() < 1e-12 {
        return Err(Error::Pole("excised integrand at r = 0".into()));
    }
    let nn = n as f64;
    Ok((-chi * r).exp() / r * v_factor(nn, r)? * so_bracket(nn, r, phi)?)
}

/// A circle in the r-plane with 2^{r²/2}G(r+1)√Q(r)/r at its nodes, √Q
/// continued around the loop.
#[derive(Debug, Clone)]
pub struct ResidueCircle {
    pub center: C64,
    pub radius: f64,
    pub closure_residual: f64,
    pub nodes: Vec<C64>,
    shape: Vec<C64>,
}

impl ResidueCircle {
    pub fn new(center: C64, radius: f64, points: usize) -> Result<Self> {
        if points < 16 || points % 2 != 0 {
            return Err(Error::InvalidArgument("circle needs an even point count ≥ 16".into()));
        }
        let nodes: Vec<C64> = (0..points)
            .map(|j| center + C64::from_polar(radius, 2.0 * PI * j as f64 / points as f64))
            .collect();
        let mut q: Vec<C64> = nodes.iter().map(|&r| q_value(r)).collect();
        q.push(q[0]);
        let (mut roots, residual) = sqrt_continued(&q)?;
        if residual > BRANCH_TOL {
            return Err(Error::BranchNotClosed(residual));
        }
        let anchor = sqrt_q(nodes[0])?;
        if (roots[0] + anchor).norm() < (roots[0] - anchor).norm() {
            for x in &mut roots {
                *x = -*x;
            }
        }
        let shape = nodes
            .iter()
            .zip(&roots)
            .map(|(&r, &s)| (r * r / 2.0 * LN_2).exp() * barnes_g(r + 1.0) * s / r)
            .collect();
        Ok(ResidueCircle {
            center,
            radius,
            closure_residual: residual,
            nodes,
            shape,
        })
    }

    /// e^{−χr}𝒱(𝒩, r)/r at the nodes.
    pub fn base(&self, nn: f64, chi: f64) -> Vec<C64> {
        let ln_n = nn.ln();
        self.nodes
            .iter()
            .zip(&self.shape)
            .map(|(&r, &s)| (r * (r - 1.0) / 2.0 * ln_n - chi * r).exp() * s)
            .collect()
    }

    /// (1/2πi)∮ base·bracket dr by the trapezoid rule, with the difference
    /// from the even-node subgrid as error estimate and the largest term as
    /// scale. `bracket` receives the node index and r.
    pub fn residue<B>(&self, base: &[C64], bracket: B) -> Result<Residue>
    where
        B: Fn(usize, C64) -> Result<C64>,
    {
        let p = self.nodes.len();
        let (mut full, mut half, mut scale) = (c(0.0, 0.0), c(0.0, 0.0), 0.0f64);
        for (j, (&r, &b)) in self.nodes.iter().zip(base).enumerate() {
            let t = b * bracket(j, r)? * (r - self.center);
            full += t;
            scale = scale.max(t.norm());
            if j % 2 == 0 {
                half += t;
            }
        }
        let value = full / p as f64;
        let half = half / (p / 2) as f64;
        Ok(Residue {
            value,
            error: (value - half).norm(),
            scale,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residue {
    pub value: C64,
    pub error: f64,
    pub scale: f64,
}

impl Residue {
    /// Relative agreement with the subgrid, or absolute agreement against
    /// the largest term for residues that vanish.
    pub fn settled(&self) -> bool {
        self.error <= RESIDUE_TOL * self.value.norm() || self.error <= 1e-12 * self.scale
    }
}

/// Runs `attempt` with 256, 512, … points until it reports every residue
/// settled.
pub fn with_doubling<T, F>(points: usize, what: &str, attempt: F) -> Result<T>
where
    F: Fn(usize) -> Result<(T, bool)>,
{
    let mut p = points;
    loop {
        let (out, ok) = attempt(p)?;
        if ok {
            return Ok(out);
        }
        p *= 2;
        if p > MAX_POINTS {
            return Err(Error::NonConvergence(format!("{what} not settled with {MAX_POINTS} points")));
        }
    }
}

/// Residues of e^{−χr}𝒱(𝒩, r)B(r, φ)/r at `center` for every φ.
pub fn circle_residues<B>(nn: f64, chi: f64, center: C64, phis: &[f64], points: usize, bracket: B) -> Result<Vec<C64>>
where
    B: Fn(C64, f64) -> Result<C64>,
{
    with_doubling(points, &format!("residue at {center}"), |p| {
        let circle = ResidueCircle::new(center, RESIDUE_RADIUS, p)?;
        let base = circle.base(nn, chi);
        let mut out = Vec::with_capacity(phis.len());
        let mut ok = true;
        for &phi in phis {
            let res = circle.residue(&base, |_, r| bracket(r, phi))?;
            ok &= res.settled();
            out.push(res.value);
        }
        Ok((out, ok))
    })
}

fn half_integer(k: usize) -> C64 {
    c(-(2.0 * k as f64 + 1.0) / 2.0, 0.0)
}

/// Residue at r = −(2k+1)/2 for each φ.
pub fn residue_at(n: usize, chi: f64, phis: &[f64], k: usize, circle_points: usize) -> Result<ResidueTerm> {
    if k > MAX_K {
        return Err(Error::InvalidArgument(format!("k = {k} > {MAX_K}")));
    }
    let nn = n as f64;
    let values = circle_residues(nn, chi, half_integer(k), phis, circle_points, |r, phi| {
        so_bracket(nn, r, phi)
    })?;
    Ok(ResidueTerm {
        k_index: k as i32,
        values,
        chi_factor: ((k as f64 + 0.5) * chi).exp(),
    })
}

/// Circle quadrature of the same integrand around an arbitrary point
/// (r = 0, or negative integers where no residue is expected).
pub fn residue_near(n: usize, chi: f64, phis: &[f64], center: C64, circle_points: usize) -> Result<Vec<C64>> {
    let nn = n as f64;
    circle_residues(nn, chi, center, phis, circle_points, |r, phi| so_bracket(nn, r, phi))
}

/// Closed form of the residue at r = 0: 2N + 2𝒰(N, 0, iφ).
pub fn residue_at_zero(n: usize, phi: f64) -> Result<C64> {
    let nn = n as f64;
    Ok(2.0 * nn + 2.0 * u_factor(nn, c(0.0, 0.0), c(0.0, phi))?)
}

/// (1/2π)·Re[residue at 0 + Σ_{k ≤ k_max} residue at −(2k+1)/2] on the grid.
pub fn excised_density_series(n: usize, chi: f64, phi_grid: &[f64], k_max: usize) -> Result<DensityCurve> {
    let terms = excised_series_terms(n, chi, phi_grid, k_max)?;
    Ok(sum_terms(phi_grid, &terms))
}

/// The r = 0 term (k_index −1) followed by k = 0..=k_max.
pub fn excised_series_terms(n: usize, chi: f64, phi_grid: &[f64], k_max: usize) -> Result<Vec<ResidueTerm>> {
    if k_max > MAX_K {
        return Err(Error::InvalidArgument(format!("k_max = {k_max} > {MAX_K}")));
    }
    let zero = phi_grid
        .iter()
        .map(|&p| residue_at_zero(n, p))
        .collect::<Result<Vec<_>>>()?;
    let mut terms = vec![ResidueTerm {
        k_index: -1,
        values: zero,
        chi_factor: 1.0,
    }];
    for k in 0..=k_max {
        terms.push(residue_at(n, chi, phi_grid, k, RESIDUE_POINTS)?);
    }
    Ok(terms)
}

pub fn sum_terms(phi_grid: &[f64], terms: &[ResidueTerm]) -> DensityCurve {
    let density = (0..phi_grid.len())
        .map(|i| terms.iter().map(|t| t.values[i]).sum::<C64>().re / (2.0 * PI))
        .collect();
    DensityCurve {
        phi: phi_grid.to_vec(),
        density,
        normalization: Normalization::RawCount,
    }
}
