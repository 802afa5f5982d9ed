//! Exact finite-N averages through the Jacobi ensemble.
//!
//! With x_j = cos θ_j, the weight Λ(1)^r = ∏(2 − 2x_j)^r turns the SO(2N)
//! (resp. USp(2N)) eigenvalue law into a Jacobi ensemble with parameters
//! (a, b) = (r − ½, −½) (resp. (r + ½, ½)). Hence
//!
//!   ⟨Λ(1)^r Σ_j h(θ_j)⟩ = M_r(N) ∫₀^π h(θ) ρ(θ) dθ,
//!
//! where M_r(N) = ⟨Λ(1)^r⟩ is a Selberg integral and ρ is the one-point
//! density K_N(x, x) w(x) of the reweighted ensemble.

use crate::haar::EnsembleKind;
use crate::quad::tanh_sinh;
use crate::specfun::ln_gamma;
use crate::{c, Result, C64};
use std::f64::consts::LN_2;

fn jacobi_params(kind: EnsembleKind, r: C64) -> (C64, C64) {
    match kind {
        EnsembleKind::SpecialOrthogonalEven => (r - 0.5, c(-0.5, 0.0)),
        EnsembleKind::UnitarySymplectic => (r + 0.5, c(0.5, 0.0)),
    }
}

/// ⟨Λ(1)^r⟩ over SO(2N) or USp(2N), Re r > −½.
pub fn exact_moment(kind: EnsembleKind, n: usize, r: C64) -> Result<C64> {
    let nf = n as f64;
    let mut l = 2.0 * nf * r * LN_2;
    for j in 1..=n {
        let jf = j as f64;
        l += match kind {
            EnsembleKind::SpecialOrthogonalEven => {
                ln_gamma(c(nf + jf - 1.0, 0.0))? + ln_gamma(r + jf - 0.5)?
                    - ln_gamma(c(jf - 0.5, 0.0))?
                    - ln_gamma(r + jf + nf - 1.0)?
            }
            EnsembleKind::UnitarySymplectic => {
                ln_gamma(c(1.0 + nf + jf, 0.0))? + ln_gamma(r + 0.5 + jf)?
                    - ln_gamma(c(0.5 + jf, 0.0))?
                    - ln_gamma(r + 1.0 + jf + nf)?
            }
        };
    }
    Ok(l.exp())
}

/// One-point density of the r-reweighted ensemble at θ; integrates to N
/// over (0, π).
pub fn one_point_density(kind: EnsembleKind, n: usize, r: C64, theta: f64) -> Result<C64> {
    let (a, b) = jacobi_params(kind, r);
    let norms = jacobi_norms(a, b, n)?;
    Ok(density_with_norms(a, b, &norms, theta))
}

fn jacobi_norms(a: C64, b: C64, n: usize) -> Result<Vec<C64>> {
    let ab1 = a + b + 1.0;
    let mut h = Vec::with_capacity(n);
    for k in 0..n {
        let kf = k as f64;
        let v = if k == 0 {
            (ab1 * LN_2 + ln_gamma(a + 1.0)? + ln_gamma(b + 1.0)? - ln_gamma(a + b + 2.0)?).exp()
        } else {
            (ab1 * LN_2 + ln_gamma(a + kf + 1.0)? + ln_gamma(b + kf + 1.0)?
                - ln_gamma(a + b + kf + 1.0)?
                - ln_gamma(c(kf + 1.0, 0.0))?)
            .exp()
                / (a + b + 2.0 * kf + 1.0)
        };
        h.push(v);
    }
    Ok(h)
}

fn density_with_norms(a: C64, b: C64, norms: &[C64], theta: f64) -> C64 {
    let x = theta.cos();
    let mut p_prev = c(1.0, 0.0);
    let mut k_sum = p_prev * p_prev / norms[0];
    if norms.len() > 1 {
        let mut p = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0;
        k_sum += p * p / norms[1];
        for (k, hk) in norms.iter().enumerate().skip(2) {
            let kf = k as f64;
            let cc = a + b + 2.0 * kf;
            let num = (cc - 1.0) * (cc * (cc - 2.0) * x + a * a - b * b) * p
                - 2.0 * (a + kf - 1.0) * (b + kf - 1.0) * cc * p_prev;
            let next = num / (2.0 * kf * (a + b + kf) * (cc - 2.0));
            p_prev = p;
            p = next;
            k_sum += p * p / hk;
        }
    }
    let (s, co) = ((0.5 * theta).sin(), (0.5 * theta).cos());
    let w = ((a + b + 1.0) * LN_2 + (2.0 * a + 1.0) * s.ln() + (2.0 * b + 1.0) * co.ln()).exp();
    k_sum * w
}

/// ⟨Λ(1)^r Σ_j h(θ_j)⟩ for a test function h on (0, π).
pub fn exact_linear_statistic<H>(kind: EnsembleKind, n: usize, r: C64, h: H) -> Result<C64>
where
    H: Fn(f64) -> C64,
{
    let (a, b) = jacobi_params(kind, r);
    let norms = jacobi_norms(a, b, n)?;
    let mut acc = c(0.0, 0.0);
    for (t, w) in tanh_sinh(0.0, std::f64::consts::PI, 0.002, 4.0) {
        acc += w * h(t) * density_with_norms(a, b, &norms, t);
    }
    Ok(exact_moment(kind, n, r)? * acc)
}

/// Exact ⟨−e^{−φ} Λ(1)^r Λ′(e^{−φ})/Λ(e^{−φ})⟩ at finite N.
pub fn exact_mixed_moment(kind: EnsembleKind, n: usize, r: C64, phi: C64) -> Result<C64> {
    let s = (-phi).exp();
    exact_linear_statistic(kind, n, r, |t| {
        let e = C64::from_polar(1.0, t);
        s / e / (1.0 - s / e) + s * e / (1.0 - s * e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const SO: EnsembleKind = EnsembleKind::SpecialOrthogonalEven;
    const USP: EnsembleKind = EnsembleKind::UnitarySymplectic;

    #[test]
    fn known_moments() {
        // ⟨Λ(1)⟩ = 2 on SO(2N); ⟨1⟩ = 1
        for n in [1, 3, 10, 100] {
            assert!((exact_moment(SO, n, c(1.0, 0.0)).unwrap() - 2.0).norm() < 1e-11);
            assert!((exact_moment(SO, n, c(0.0, 0.0)).unwrap() - 1.0).norm() < 1e-11);
            assert!((exact_moment(USP, n, c(0.0, 0.0)).unwrap() - 1.0).norm() < 1e-11);
        }
        // SO(2): Λ(1) = 2 − 2cos θ, θ uniform: ⟨Λ(1)²⟩ = 4 + 2 = 6
        assert!((exact_moment(SO, 1, c(2.0, 0.0)).unwrap() - 6.0).norm() < 1e-12);
        // USp(2): density (2/π) sin² θ, ⟨2 − 2cos θ⟩ = 2
        assert!((exact_moment(USP, 1, c(1.0, 0.0)).unwrap() - 2.0).norm() < 1e-12);
    }

    #[test]
    fn density_normalisation() {
        for (kind, r) in [(SO, c(0.0, 0.0)), (SO, c(1.5, 0.7)), (USP, c(2.0, 0.0))] {
            let n = 7;
            let total = exact_linear_statistic(kind, n, r, |_| c(1.0, 0.0)).unwrap()
                / exact_moment(kind, n, r).unwrap();
            assert!((total - n as f64).norm() < 1e-11, "{kind:?} {r}");
        }
        // r = 0 on SO(2N): (2N−1 + sin((2N−1)θ)/sin θ)/2π
        let n = 5;
        for &t in &[0.3, 1.1, 2.9] {
            let rho = one_point_density(SO, n, c(0.0, 0.0), t).unwrap();
            let m = (2 * n - 1) as f64;
            let want = (m + (m * t).sin() / t.sin()) / (2.0 * PI);
            assert!((rho.re - want).abs() < 1e-12 && rho.im.abs() < 1e-14);
        }
    }

    #[test]
    fn so2_mixed_by_direct_quadrature() {
        // N = 1: average of (2 − 2cos θ)^r h(θ) with θ uniform on (0, π)
        let phi = c(0.7, 0.4);
        let r = c(1.3, 0.2);
        let s = (-phi).exp();
        let q = tanh_sinh(0.0, PI, 0.002, 4.0);
        let direct: C64 = q
            .iter()
            .map(|&(t, w)| {
                let e = C64::from_polar(1.0, t);
                let h = s / e / (1.0 - s / e) + s * e / (1.0 - s * e);
                w / PI * (r * (2.0 - 2.0 * t.cos()).ln()).exp() * h
            })
            .sum();
        let exact = exact_mixed_moment(SO, 1, r, phi).unwrap();
        assert!((direct - exact).norm() < 1e-12);
    }
}
