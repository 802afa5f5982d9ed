//! Haar-distributed eigenangles on SO(2N) and USp(2N).
//!
//! The eigenangle density is S_N ∏_{j<k}(cos θ_k − cos θ_j)² on SO(2N) and
//! the same times ∏ sin² θ_j on USp(2N), for θ_j ∈ (0, π).

use crate::{c, Error, Result, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnsembleKind {
    SpecialOrthogonalEven,
    UnitarySymplectic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Dense Gaussian matrix, QR, eigenvalues.
    MatrixQR,
    /// Metropolis chain on the joint eigenangle density.
    JpdfMcmc,
    /// Random Jacobi matrix with Beta-distributed Verblunsky coefficients.
    Tridiagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSample {
    pub n: usize,
    /// Ascending, in (0, π].
    pub angles: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub seed: u64,
    pub method: Method,
    pub mcmc_burn_in: usize,
    pub mcmc_thin: usize,
    /// Thinned draws per chain.
    pub mcmc_chain_len: usize,
    /// Proposal standard deviation; 0.5/N when unset.
    pub mcmc_step: Option<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0,
            method: Method::MatrixQR,
            mcmc_burn_in: 10_000,
            mcmc_thin: 10,
            mcmc_chain_len: 1000,
            mcmc_step: None,
        }
    }
}

impl SamplerConfig {
    pub fn with_method(seed: u64, method: Method) -> Self {
        SamplerConfig {
            seed,
            method,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.mcmc_thin < 1 || self.mcmc_chain_len < 1 {
            return Err(Error::InvalidArgument(
                "mcmc_thin and mcmc_chain_len must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Independent stream for (seed, stream).
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const CHAIN_STREAM: u64 = 1 << 63;
const PAIR_TOL: f64 = 1e-8;

pub fn sample(kind: EnsembleKind, n: usize, cfg: &SamplerConfig, index: u64) -> Result<SpectrumSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    cfg.validate()?;
    match cfg.method {
        Method::MatrixQR => {
            let mut rng = rng_for(cfg.seed, index);
            match kind {
                EnsembleKind::SpecialOrthogonalEven => qr_so(n, &mut rng),
                EnsembleKind::UnitarySymplectic => qr_usp(n, &mut rng),
            }
        }
        Method::Tridiagonal => {
            let mut rng = rng_for(cfg.seed, index);
            Ok(tridiagonal(kind, n, &mut rng))
        }
        Method::JpdfMcmc => {
            let len = cfg.mcmc_chain_len as u64;
            let chain = Chain::new(kind, n, cfg, index / len);
            Ok(chain.run((index % len) as usize + 1).pop().expect("one draw"))
        }
    }
}

pub fn sample_so2n(n: usize, cfg: &SamplerConfig, index: u64) -> Result<SpectrumSample> {
    sample(EnsembleKind::SpecialOrthogonalEven, n, cfg, index)
}

pub fn sample_usp2n(n: usize, cfg: &SamplerConfig, index: u64) -> Result<SpectrumSample> {
    sample(EnsembleKind::UnitarySymplectic, n, cfg, index)
}

/// Samples `start..start+count`, identical to calling [`sample`] per index
/// but running each Metropolis chain only once.
pub fn sample_block(
    kind: EnsembleKind,
    n: usize,
    cfg: &SamplerConfig,
    start: u64,
    count: usize,
) -> Result<Vec<SpectrumSample>> {
    if cfg.method != Method::JpdfMcmc {
        return (start..start + count as u64)
            .map(|i| sample(kind, n, cfg, i))
            .collect();
    }
    cfg.validate()?;
    let len = cfg.mcmc_chain_len as u64;
    let end = start + count as u64;
    let mut out = Vec::with_capacity(count);
    let mut chain_id = start / len;
    while chain_id * len < end {
        let lo = (chain_id * len).max(start);
        let hi = ((chain_id + 1) * len).min(end);
        let draws = Chain::new(kind, n, cfg, chain_id).run((hi - chain_id * len) as usize);
        out.extend(draws.into_iter().skip((lo - chain_id * len) as usize));
        chain_id += 1;
    }
    Ok(out)
}

/// ∏_{j<k}(cos θ_k − cos θ_j)², unnormalised.
pub fn jpdf_density_so(angles: &[f64]) -> f64 {
    let mut p = 1.0;
    for k in 0..angles.len() {
        for j in 0..k {
            let d = angles[k].cos() - angles[j].cos();
            p *= d * d;
        }
    }
    p
}

/// ∏_{j<k}(cos θ_k − cos θ_j)² ∏ sin² θ_j, unnormalised.
pub fn jpdf_density_usp(angles: &[f64]) -> f64 {
    jpdf_density_so(angles) * angles.iter().map(|t| t.sin().powi(2)).product::<f64>()
}

fn angles_from_doubled(mut vals: Vec<f64>, scale: f64) -> Result<SpectrumSample> {
    vals.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    let n = vals.len() / 2;
    let mut angles = Vec::with_capacity(n);
    for p in vals.chunks(2) {
        let gap = (p[1] - p[0]).abs();
        if gap > PAIR_TOL * scale {
            return Err(Error::EigenPairing(gap));
        }
        angles.push(clamp_angle((0.5 * (p[0] + p[1]) / scale).clamp(-1.0, 1.0).acos()));
    }
    angles.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(SpectrumSample { n, angles })
}

fn clamp_angle(t: f64) -> f64 {
    if t < PAIR_TOL {
        t.max(f64::MIN_POSITIVE)
    } else if t > PI - PAIR_TOL {
        PI
    } else {
        t
    }
}

fn qr_so(n: usize, rng: &mut ChaCha8Rng) -> Result<SpectrumSample> {
    let m = 2 * n;
    let g = DMatrix::<f64>::from_fn(m, m, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(m - 1).neg_mut();
    }
    let s = &q + q.transpose();
    angles_from_doubled(s.symmetric_eigenvalues().iter().copied().collect(), 2.0)
}

/// Haar unitary symplectic matrix: quaternionic Gram–Schmidt where column
/// j+N is −Ω·conj(column j), Ω = [[0, I], [−I, 0]].
pub fn haar_usp_matrix(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let m = 2 * n;
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(m);
    for _ in 0..n {
        let mut v: Vec<C64> = (0..m)
            .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        for _ in 0..2 {
            for col in &cols {
                let proj: C64 = col.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, a) in v.iter_mut().zip(col) {
                    *x -= proj * a;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let partner: Vec<C64> = (0..m)
            .map(|i| if i < n { -v[i + n].conj() } else { v[i - n].conj() })
            .collect();
        cols.push(v);
        cols.push(partner);
    }
    // reorder to [A_0..A_{n-1}, B_0..B_{n-1}]
    let order: Vec<usize> = (0..n).map(|j| 2 * j).chain((0..n).map(|j| 2 * j + 1)).collect();
    DMatrix::from_fn(m, m, |i, j| cols[order[j]][i])
}

fn qr_usp(n: usize, rng: &mut ChaCha8Rng) -> Result<SpectrumSample> {
    let u = haar_usp_matrix(n, rng);
    let h = (&u + u.adjoint()).map(|x| x * 0.5);
    angles_from_doubled(h.symmetric_eigenvalues().iter().copied().collect(), 1.0)
}

/// Jacobi-matrix model: eigenvalues 2cos θ_j of a tridiagonal matrix built
/// from independent Beta variates (β = 2). The weight on [−2, 2] has
/// Jacobi parameters (a, b) = (−½, −½) for SO(2N), (½, ½) for USp(2N).
fn tridiagonal(kind: EnsembleKind, n: usize, rng: &mut ChaCha8Rng) -> SpectrumSample {
    let (a, b) = match kind {
        EnsembleKind::SpecialOrthogonalEven => (-0.5, -0.5),
        EnsembleKind::UnitarySymplectic => (0.5, 0.5),
    };
    let nf = n as f64;
    // alpha[k+1] holds α_k for k = −1..=2n−1
    let mut alpha = vec![0.0; 2 * n + 1];
    alpha[0] = -1.0;
    alpha[2 * n] = -1.0;
    for k in 0..(2 * n - 1) {
        let kf = k as f64;
        let (s, t) = if k % 2 == 0 {
            ((2.0 * nf - kf - 2.0) / 2.0 + a + 1.0, (2.0 * nf - kf - 2.0) / 2.0 + b + 1.0)
        } else {
            ((2.0 * nf - kf - 3.0) / 2.0 + a + b + 2.0, (2.0 * nf - kf - 1.0) / 2.0)
        };
        let y: f64 = Beta::new(s, t).expect("positive parameters").sample(rng);
        alpha[k + 1] = 1.0 - 2.0 * y;
    }
    let al = |k: isize| alpha[(k + 1) as usize];
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    for k in 0..n as isize {
        let prev = if k >= 1 { al(2 * k - 2) } else { 0.0 };
        diag[k as usize] = (1.0 - al(2 * k - 1)) * al(2 * k) - (1.0 + al(2 * k - 1)) * prev;
        if (k as usize) < n - 1 {
            let v = (1.0 - al(2 * k - 1)) * (1.0 - al(2 * k) * al(2 * k)) * (1.0 + al(2 * k + 1));
            off[k as usize + 1] = v.max(0.0).sqrt();
        }
    }
    tridiagonal_eigenvalues(&mut diag, &mut off);
    let mut angles: Vec<f64> = diag
        .iter()
        .map(|&l| clamp_angle((0.5 * l).clamp(-1.0, 1.0).acos()))
        .collect();
    angles.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    SpectrumSample { n, angles }
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// subdiagonal `e[1..]` by implicit QL; results overwrite `d`.
pub fn tridiagonal_eigenvalues(d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    if n < 2 {
        return;
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 60, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut cc, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = cc * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                cc = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * cc * b;
                p = s * r;
                d[i + 1] = g + p;
                g = cc * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

struct Chain {
    kind: EnsembleKind,
    theta: Vec<f64>,
    cosines: Vec<f64>,
    rng: ChaCha8Rng,
    step: f64,
    burn_in: usize,
    thin: usize,
}

impl Chain {
    fn new(kind: EnsembleKind, n: usize, cfg: &SamplerConfig, chain_id: u64) -> Self {
        let theta: Vec<f64> = (0..n).map(|j| PI * (j as f64 + 0.5) / n as f64).collect();
        let cosines = theta.iter().map(|t| t.cos()).collect();
        Chain {
            kind,
            theta,
            cosines,
            rng: rng_for(cfg.seed, CHAIN_STREAM | chain_id),
            step: cfg.mcmc_step.unwrap_or(0.5 / n as f64),
            burn_in: cfg.mcmc_burn_in,
            thin: cfg.mcmc_thin,
        }
    }

    fn local_log_density(&self, j: usize, t: f64, ct: f64) -> f64 {
        let mut s = 0.0;
        for (k, &ck) in self.cosines.iter().enumerate() {
            if k != j {
                s += (ct - ck).abs().ln();
            }
        }
        s *= 2.0;
        if self.kind == EnsembleKind::UnitarySymplectic {
            s += 2.0 * t.sin().ln();
        }
        s
    }

    fn sweep(&mut self) {
        let n = self.theta.len();
        for j in 0..n {
            let z: f64 = self.rng.sample(StandardNormal);
            let mut t = self.theta[j] + self.step * z;
            while !(0.0..=PI).contains(&t) {
                t = if t < 0.0 { -t } else { 2.0 * PI - t };
            }
            let ct = t.cos();
            let old = self.local_log_density(j, self.theta[j], self.cosines[j]);
            let new = self.local_log_density(j, t, ct);
            let u: f64 = self.rng.random();
            if u.ln() < new - old {
                self.theta[j] = t;
                self.cosines[j] = ct;
            }
        }
    }

    fn run(mut self, draws: usize) -> Vec<SpectrumSample> {
        for _ in 0..self.burn_in {
            self.sweep();
        }
        let n = self.theta.len();
        let mut out = Vec::with_capacity(draws);
        for _ in 0..draws {
            for _ in 0..self.thin {
                self.sweep();
            }
            let mut angles: Vec<f64> = self.theta.iter().map(|&t| clamp_angle(t)).collect();
            angles.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            out.push(SpectrumSample { n, angles });
        }
        out
    }
}
