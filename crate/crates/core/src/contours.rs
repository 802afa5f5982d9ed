//! Multiple contour integrals on circles: exact finite-N ratio averages,
//! their decomposition by pole, and the 𝓜/𝓙 integrals.
//!
//! All integrands here are products of one-variable factors and pairwise
//! factors, so the tensor trapezoid sum is done on precomputed tables.

use crate::specfun::{xzfun, zfun};
use crate::{c, Error, Result, C64};
use rayon::prelude::*;
use std::f64::consts::PI;

pub const DEFAULT_TOL: f64 = 1e-10;
/// Largest tensor grid (points^K) attempted before giving up.
const MAX_GRID: f64 = 1.2e9;

#[derive(Debug, Clone, PartialEq)]
pub struct NestedContourSpec {
    pub radii: Vec<f64>,
    pub center: C64,
    pub points_per_circle: usize,
}

impl NestedContourSpec {
    pub fn new(radii: Vec<f64>, points_per_circle: usize) -> Result<Self> {
        if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidArgument("radii must be positive".into()));
        }
        if radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("radii must be strictly decreasing".into()));
        }
        if points_per_circle < 64 || points_per_circle % 2 != 0 {
            return Err(Error::InvalidArgument("points_per_circle must be even and ≥ 64".into()));
        }
        Ok(NestedContourSpec {
            radii,
            center: c(0.0, 0.0),
            points_per_circle,
        })
    }

    /// Radii (0.9, 0.7, 0.5)·(2|α| + 0.5), 256 points.
    pub fn default_for(alpha: C64, k: usize) -> Result<Self> {
        let big = 2.0 * alpha.norm() + 0.5;
        let mut radii: Vec<f64> = [0.9, 0.7, 0.5].iter().map(|f| f * big).collect();
        while radii.len() < k {
            let last = *radii.last().unwrap();
            radii.push(last - 0.1 * big);
        }
        radii.truncate(k);
        NestedContourSpec::new(radii, 256)
    }

    fn check_encloses(&self, alpha: C64) -> Result<()> {
        if self.radii.iter().any(|&r| r <= alpha.norm()) {
            return Err(Error::InvalidArgument("every radius must exceed |α|".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PoleSite {
    Zero,
    PlusAlpha,
    MinusAlpha,
}

impl PoleSite {
    pub fn location(self, alpha: C64) -> C64 {
        match self {
            PoleSite::Zero => c(0.0, 0.0),
            PoleSite::PlusAlpha => alpha,
            PoleSite::MinusAlpha => -alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleAssignment {
    pub epsilon: Vec<PoleSite>,
    pub circle_radius: f64,
}

impl PoleAssignment {
    pub fn nonzero_count(&self) -> usize {
        self.epsilon.iter().filter(|e| **e != PoleSite::Zero).count()
    }
}

fn circle_nodes(center: C64, radius: f64, p: usize) -> (Vec<C64>, Vec<C64>) {
    let h = 2.0 * PI / p as f64;
    (0..p)
        .map(|i| {
            let d = C64::from_polar(radius, h * i as f64);
            (center + d, c(0.0, h) * d)
        })
        .unzip()
}

/// Tensor trapezoid sum of ∏_j s(j, w_j) ∏_{j<l} q(w_j, w_l) with p points
/// on each circle, together with the sum of absolute values of the terms.
fn product_sum<S, Q>(circles: &[(C64, f64)], p: usize, single: &S, pair: &Q) -> (C64, f64)
where
    S: Fn(usize, C64) -> C64 + Sync,
    Q: Fn(C64, C64) -> C64 + Sync,
{
    let k = circles.len();
    let nodes: Vec<(Vec<C64>, Vec<C64>)> =
        circles.iter().map(|&(z, r)| circle_nodes(z, r, p)).collect();
    let s: Vec<Vec<C64>> = (0..k)
        .map(|j| {
            nodes[j]
                .0
                .iter()
                .zip(&nodes[j].1)
                .map(|(&w, &dw)| single(j, w) * dw)
                .collect()
        })
        .collect();
    // pair tables, index (j, l) with j < l, entry [a * p + b]
    let mut q: Vec<Vec<Vec<C64>>> = vec![vec![Vec::new(); k]; k];
    for j in 0..k {
        for l in j + 1..k {
            q[j][l] = (0..p * p)
                .into_par_iter()
                .map(|ab| pair(nodes[j].0[ab / p], nodes[l].0[ab % p]))
                .collect();
        }
    }
    fn rec(level: usize, idx: &mut Vec<usize>, pre: C64, s: &[Vec<C64>], q: &[Vec<Vec<C64>>], p: usize) -> (C64, f64) {
        let k = s.len();
        let (mut acc, mut l1) = (c(0.0, 0.0), 0.0);
        for b in 0..p {
            let mut v = pre * s[level][b];
            for (j, &a) in idx.iter().enumerate() {
                v *= q[j][level][a * p + b];
            }
            if level + 1 < k {
                idx.push(b);
                let (x, y) = rec(level + 1, idx, v, s, q, p);
                idx.pop();
                acc += x;
                l1 += y;
            } else {
                acc += v;
                l1 += v.norm();
            }
        }
        (acc, l1)
    }
    let parts: Vec<(C64, f64)> = (0..p)
        .into_par_iter()
        .map(|a| {
            if k == 1 {
                (s[0][a], s[0][a].norm())
            } else {
                let mut idx = vec![a];
                rec(1, &mut idx, s[0][a], &s, &q, p)
            }
        })
        .collect();
    parts.iter().fold((c(0.0, 0.0), 0.0), |(a, b), &(x, y)| (a + x, b + y))
}

/// Doubles the point count until successive grids agree to `tol`
/// (relative), or to rounding level when the integral cancels to ~0.
fn adaptive<F>(k: usize, p0: usize, tol: f64, mut eval: F) -> Result<(C64, f64)>
where
    F: FnMut(usize) -> (C64, f64),
{
    let mut p = p0;
    let mut coarse = eval(p / 2).0;
    loop {
        if (p as f64).powi(k as i32) > MAX_GRID {
            return Err(Error::NonConvergence(format!(
                "contour quadrature did not reach tolerance {tol:e} below {p} points per circle"
            )));
        }
        let (fine, l1) = eval(p);
        let diff = (fine - coarse).norm();
        if diff <= tol * fine.norm() || diff <= 1e-13 * l1 {
            return Ok((fine, l1));
        }
        coarse = fine;
        p *= 2;
    }
}

/// ∮…∮ ∏ s(j, w_j) ∏_{j<l} q(w_j, w_l) dw over the given circles, with
/// point doubling until two successive grids agree to `tol` (relative).
pub fn product_contour_integral<S, Q>(
    circles: &[(C64, f64)],
    points: usize,
    tol: f64,
    single: S,
    pair: Q,
) -> Result<C64>
where
    S: Fn(usize, C64) -> C64 + Sync,
    Q: Fn(C64, C64) -> C64 + Sync,
{
    Ok(adaptive(circles.len(), points, tol, |p| product_sum(circles, p, &single, &pair))?.0)
}

/// Raw ∮…∮ f dw₁…dw_K on the nested circles of `spec` (no (2πi)^{−K}).
pub fn nested_contour_integral<F>(f: F, spec: &NestedContourSpec, tol: f64) -> Result<C64>
where
    F: Fn(&[C64]) -> C64 + Sync,
{
    let k = spec.radii.len();
    let eval = |p: usize| -> (C64, f64) {
        let nodes: Vec<(Vec<C64>, Vec<C64>)> =
            spec.radii.iter().map(|&r| circle_nodes(spec.center, r, p)).collect();
        let total = p.pow(k as u32);
        let parts: Vec<(C64, f64)> = (0..p)
            .into_par_iter()
            .map(|first| {
                let mut acc = (c(0.0, 0.0), 0.0);
                let mut w = vec![c(0.0, 0.0); k];
                for rest in 0..total / p {
                    let mut weight = nodes[0].1[first];
                    w[0] = nodes[0].0[first];
                    let mut m = rest;
                    for j in 1..k {
                        let i = m % p;
                        m /= p;
                        w[j] = nodes[j].0[i];
                        weight *= nodes[j].1[i];
                    }
                        let t = f(&w) * weight;
                    acc.0 += t;
                    acc.1 += t.norm();
                }
                acc
            })
            .collect();
        parts.iter().fold((c(0.0, 0.0), 0.0), |(a, b), &(x, y)| (a + x, b + y))
    };
    Ok(adaptive(k, spec.points_per_circle, tol, eval)?.0)
}

fn ratio_prefactor(n: usize, k: usize, alpha: C64, gamma: C64) -> Result<C64> {
    let sign = if (k * (k - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let mut fact = 1.0;
    for j in 2..=k {
        fact *= j as f64;
    }
    Ok((-(n as f64) * alpha).exp() * sign * 2f64.powi(k as i32) * zfun(2.0 * gamma)?
        / (c(0.0, 2.0 * PI).powi(k as i32) * fact))
}

fn ratio_single(w: C64, n: usize, k: usize, alpha: C64, gamma: C64) -> C64 {
    (n as f64 * w).exp() * w.powi(3 - 2 * k as i32) * (1.0 - (-w - gamma).exp())
        / ((w - alpha) * (w + alpha))
}

fn xz_pair(a: C64, b: C64) -> C64 {
    xzfun(a + b) * (b - a) * (b * b - a * a)
}

fn check_ratio_args(k: usize, gamma: C64) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if gamma.re <= 0.0 {
        return Err(Error::InvalidArgument("Re γ must be positive".into()));
    }
    Ok(())
}

/// Full integrand of the K-fold contour formula for
/// ⟨Λ(1)^{K−1}Λ(e^{−α})/Λ(e^{−γ})⟩, coefficient included.
pub fn ratios_integrand_so(w: &[C64], n: usize, alpha: C64, gamma: C64) -> Result<C64> {
    let k = w.len();
    check_ratio_args(k, gamma)?;
    const HIT: f64 = 1e-12;
    for &x in w {
        if x.norm() < HIT || (x - alpha).norm() < HIT || (x + alpha).norm() < HIT {
            return Err(Error::Pole(format!("integrand pole at w = {x}")));
        }
    }
    let mut v = ratio_prefactor(n, k, alpha, gamma)?;
    for (j, &a) in w.iter().enumerate() {
        v *= ratio_single(a, n, k, alpha, gamma);
        for &b in &w[j + 1..] {
            let s = a + b;
            let m = (s.im / (2.0 * PI)).round();
            if m != 0.0 && (s - c(0.0, 2.0 * PI * m)).norm() < HIT {
                return Err(Error::Pole(format!("z pole at w_j + w_k = {s}")));
            }
            v *= xz_pair(a, b);
        }
    }
    Ok(v)
}

/// Exact finite-N ⟨Λ(1)^{K−1}Λ(e^{−α})/Λ(e^{−γ})⟩ over SO(2N), K ≤ 3.
pub fn ratios_contour_so(
    n: usize,
    k: usize,
    alpha: C64,
    gamma: C64,
    spec: &NestedContourSpec,
) -> Result<C64> {
    check_ratio_args(k, gamma)?;
    if k > 3 {
        return Err(Error::InvalidArgument("ratios quadrature supports K ≤ 3".into()));
    }
    if spec.radii.len() != k {
        return Err(Error::InvalidArgument("need one radius per variable".into()));
    }
    spec.check_encloses(alpha)?;
    let circles: Vec<(C64, f64)> = spec.radii.iter().map(|&r| (spec.center, r)).collect();
    let single = |_: usize, w: C64| ratio_single(w, n, k, alpha, gamma);
    let (raw, l1) = adaptive(k, spec.points_per_circle, DEFAULT_TOL, |p| {
        product_sum(&circles, p, &single, &xz_pair)
    })?;
    // e^{Nw} on large circles cancels down to a much smaller integral
    if l1 * f64::EPSILON > 1e-8 * raw.norm() {
        return Err(Error::NonConvergence(format!(
            "cancellation on the contour loses {:.1} digits; use smaller radii or the pole decomposition",
            (l1 / raw.norm()).log10()
        )));
    }
    Ok(ratio_prefactor(n, k, alpha, gamma)? * raw)
}

/// Every term of the sum over pole assignments ε ∈ {0, α, −α}^K, each a
/// product of small circles around the assigned poles.
pub fn residue_decomposition_so(
    n: usize,
    k: usize,
    alpha: C64,
    gamma: C64,
    circle_radius: f64,
) -> Result<Vec<(PoleAssignment, C64)>> {
    check_ratio_args(k, gamma)?;
    if k > 3 {
        return Err(Error::InvalidArgument("decomposition supports K ≤ 3".into()));
    }
    if !(circle_radius > 0.0 && circle_radius < alpha.norm() / 2.0) {
        return Err(Error::InvalidArgument("circle radius must be below |α|/2".into()));
    }
    let pref = ratio_prefactor(n, k, alpha, gamma)?;
    let sites = [PoleSite::Zero, PoleSite::PlusAlpha, PoleSite::MinusAlpha];
    let mut out = Vec::with_capacity(3usize.pow(k as u32));
    for code in 0..3usize.pow(k as u32) {
        let mut m = code;
        let eps: Vec<PoleSite> = (0..k)
            .map(|_| {
                let s = sites[m % 3];
                m /= 3;
                s
            })
            .rev()
            .collect();
        let circles: Vec<(C64, f64)> =
            eps.iter().map(|e| (e.location(alpha), circle_radius)).collect();
        let raw = product_contour_integral(
            &circles,
            64,
            DEFAULT_TOL,
            |_, w| ratio_single(w, n, k, alpha, gamma),
            xz_pair,
        )?;
        out.push((
            PoleAssignment {
                epsilon: eps,
                circle_radius,
            },
            pref * raw,
        ));
    }
    Ok(out)
}

fn mj_pair(a: C64, b: C64) -> C64 {
    (b * b - a * a) * (b - a)
}

fn check_mj(k: usize) -> Result<()> {
    if !(2..=6).contains(&k) {
        return Err(Error::InvalidArgument("M/J quadrature supports 2 ≤ K ≤ 6".into()));
    }
    Ok(())
}

const MJ_POINTS: usize = 32;
const MJ_TOL: f64 = 1e-11;

/// 𝓜 for the K-th moment: K−1 variables on the unit circle.
pub fn m_integral(k: usize) -> Result<C64> {
    check_mj(k)?;
    let circles = vec![(c(0.0, 0.0), 1.0); k - 1];
    let e = 3 - 2 * k as i32;
    product_contour_integral(&circles, MJ_POINTS, MJ_TOL, |_, w| w.exp() * w.powi(e), mj_pair)
}

/// 𝓙: as 𝓜 with the extra factor Σ w_m, taken as (K−1)·w_1 by symmetry.
pub fn j_integral(k: usize) -> Result<C64> {
    check_mj(k)?;
    let circles = vec![(c(0.0, 0.0), 1.0); k - 1];
    let e = 3 - 2 * k as i32;
    let raw = product_contour_integral(
        &circles,
        MJ_POINTS,
        MJ_TOL,
        |j, w| {
            let base = w.exp() * w.powi(e);
            if j == 0 {
                base * w
            } else {
                base
            }
        },
        mj_pair,
    )?;
    Ok(raw * (k - 1) as f64)
}

/// Exact ⟨Λ(1)^{K−1}⟩ over SO(2N) from its (K−1)-fold contour integral.
pub fn moment_contour_so(n: usize, k: usize) -> Result<C64> {
    if k == 0 || k > 4 {
        return Err(Error::InvalidArgument("moment quadrature supports 1 ≤ K ≤ 4".into()));
    }
    if k == 1 {
        return Ok(c(1.0, 0.0));
    }
    let v = k - 1;
    let sign = if ((k - 1) * (k - 2) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let mut fact = 1.0;
    for j in 2..v + 1 {
        fact *= j as f64;
    }
    let pref = sign * 2f64.powi(v as i32) / (c(0.0, 2.0 * PI).powi(v as i32) * fact);
    let radius = (2.0 * k as f64 / n as f64).clamp(0.05, 1.0);
    let circles = vec![(c(0.0, 0.0), radius); v];
    let e = 3 - 2 * k as i32;
    let nn = n as f64;
    let raw = product_contour_integral(&circles, 64, DEFAULT_TOL, |_, w| (nn * w).exp() * w.powi(e), xz_pair)?;
    Ok(pref * raw)
}
