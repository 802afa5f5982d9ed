//! Mixed moments ⟨−e^{−φ} Λ(1)^r Λ′(e^{−φ})/Λ(e^{−φ})⟩ and ratio averages:
//! closed-form predictors and Monte Carlo estimators.

use crate::charpoly::{lambda_at, log_deriv, log_lambda_1};
use crate::haar::{EnsembleKind, SamplerConfig, SpectrumSample};
use crate::mc::{run_mc, run_mc_multi, MCEstimate};
use crate::specfun::{barnes_g, gamma, ln_barnes_g, ln_gamma, recip_gamma, sqrt_continued, zfun};
use crate::{c, Error, Result, C64};
use std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSpec {
    pub ensemble: EnsembleKind,
    pub n: usize,
    pub r: C64,
    pub phi: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionBreakdown {
    pub v_factor: C64,
    pub u_factor: C64,
    pub total: C64,
    pub includes_next_order: bool,
}

const HALF_INTEGER_TOL: f64 = 1e-10;

fn check_poles(r: C64) -> Result<()> {
    if r.im.abs() < HALF_INTEGER_TOL && r.re < 0.0 {
        let k = (-r.re - 0.5).round();
        if k >= 0.0 && (r.re + k + 0.5).abs() < HALF_INTEGER_TOL {
            return Err(Error::Pole(format!("V at r = {}", r.re)));
        }
        let m = (-r.re).round();
        if m >= 1.0 && (r.re + m).abs() < HALF_INTEGER_TOL {
            return Err(Error::Pole(format!("removable point r = {}", r.re)));
        }
    }
    Ok(())
}

/// Q(r) = Γ(2r+1)/(G(2r+1)Γ(r+1)), evaluated directly (no branch choice).
pub fn q_value(r: C64) -> C64 {
    let g = barnes_g(2.0 * r + 1.0);
    let num = gamma(2.0 * r + 1.0).unwrap_or(c(f64::INFINITY, 0.0));
    num * recip_gamma(r + 1.0) / g
}

fn ln_q(r: C64) -> Result<C64> {
    Ok(ln_gamma(2.0 * r + 1.0)? - ln_barnes_g(2.0 * r + 1.0)? - ln_gamma(r + 1.0)?)
}

/// √Q(r) on the branch that is positive for real r > −½, continued to
/// the rest of the plane along a path avoiding the real axis where needed.
pub fn sqrt_q(r: C64) -> Result<C64> {
    check_poles(r)?;
    if r.re > -0.45 {
        return Ok((0.5 * ln_q(r)?).exp());
    }
    let y = if r.im.abs() >= 0.05 { r.im } else { 0.3 };
    let start = c(0.0, y);
    let mut pts = vec![start];
    let mut push_line = |a: C64, b: C64| {
        let steps = ((b - a).norm() / 0.005).ceil().max(1.0) as usize;
        for k in 1..=steps {
            pts.push(a + (b - a) * (k as f64 / steps as f64));
        }
    };
    let corner = c(r.re, y);
    push_line(start, corner);
    push_line(corner, r);
    let mut vals = Vec::with_capacity(pts.len());
    vals.push((ln_q(start)?).exp());
    vals.extend(pts[1..].iter().map(|&p| q_value(p)));
    let anchor = (0.5 * ln_q(start)?).exp();
    let (roots, _) = sqrt_continued(&vals)?;
    let sign = if (roots[0] - anchor).norm() < (roots[0] + anchor).norm() { 1.0 } else { -1.0 };
    Ok(sign * roots[roots.len() - 1])
}

/// 𝒱(N, r) with real N.
pub fn v_factor(nn: f64, r: C64) -> Result<C64> {
    check_poles(r)?;
    let lead = r * (r - 1.0) / 2.0 * nn.ln() + r * r / 2.0 * LN_2;
    if r.re > -0.45 {
        Ok((lead + ln_barnes_g(r + 1.0)? + 0.5 * ln_q(r)?).exp())
    } else {
        Ok(lead.exp() * barnes_g(r + 1.0) * sqrt_q(r)?)
    }
}

pub fn predict_v(n: usize, r: C64) -> Result<C64> {
    v_factor(n as f64, r)
}

/// (z(a)/z(b))^r through principal logarithms of each factor.
pub(crate) fn z_ratio_pow(za: C64, zb: C64, r: C64) -> C64 {
    (r * (za.ln() - zb.ln())).exp()
}

/// 𝒰(N, r, φ) with real N.
pub fn u_factor(nn: f64, r: C64, phi: C64) -> Result<C64> {
    u_factor_with(nn, r, phi, true)
}

/// 𝒰 without the 1/N terms.
pub fn u_factor_leading(nn: f64, r: C64, phi: C64) -> Result<C64> {
    u_factor_with(nn, r, phi, false)
}

fn u_factor_with(nn: f64, r: C64, phi: C64, next_order: bool) -> Result<C64> {
    let (zp, zm) = (zfun(phi)?, zfun(-phi)?);
    let (z2p, z2m) = (zfun(2.0 * phi)?, zfun(-2.0 * phi)?);
    let q = if next_order { r * (r - 1.0) / (2.0 * nn) } else { c(0.0, 0.0) };
    let lead = (r * zm - z2m) * (1.0 + q * (r - 1.0));
    let cross = zp * zm * q;
    let osc = (-2.0 * nn * phi).exp()
        * z2p
        * z_ratio_pow(zm, zp, r)
        * (1.0 + q * (zp - zm + (r - 1.0) / 2.0));
    Ok(lead - cross - osc)
}

pub fn predict_u_so(n: usize, r: C64, phi: C64) -> Result<C64> {
    u_factor(n as f64, r, phi)
}

pub fn predict_mixed_so(n: usize, r: C64, phi: C64) -> Result<PredictionBreakdown> {
    let v = predict_v(n, r)?;
    let u = predict_u_so(n, r, phi)?;
    Ok(PredictionBreakdown {
        v_factor: v,
        u_factor: u,
        total: v * u,
        includes_next_order: true,
    })
}

pub fn predict_mixed_usp(n: usize, r: C64, phi: C64) -> Result<PredictionBreakdown> {
    check_poles(r)?;
    let nn = n as f64;
    let lv = r * (r - 2.0) / 2.0 * LN_2
        + r * (r + 1.0) / 2.0 * nn.ln()
        + ln_barnes_g(r + 1.0)?
        + 0.5 * (ln_gamma(r + 1.0)? - ln_barnes_g(2.0 * r + 1.0)? - ln_gamma(2.0 * r + 1.0)?);
    let v = lv.exp();
    let (zp, zm) = (zfun(phi)?, zfun(-phi)?);
    let (z2p, z2m) = (zfun(2.0 * phi)?, zfun(-2.0 * phi)?);
    let q = r * (r + 1.0) / (2.0 * nn);
    let u = (2.0 * z2p * z2m + r * zm - z2m) * (1.0 + q * (r - 1.0)) - z2p * zp * zm * q
        + (-2.0 * nn * phi).exp()
            * z2p
            * z2m
            * z_ratio_pow(zm, zp, r)
            * (1.0 + q * (zp - zm + (r + 1.0) / 2.0));
    Ok(PredictionBreakdown {
        v_factor: v,
        u_factor: u,
        total: v * u,
        includes_next_order: true,
    })
}

/// Leading plus 1/N approximation of ⟨Λ(1)^r Λ(e^{−α})/Λ(e^{−γ})⟩ on SO(2N).
pub fn predict_ratio_so(n: usize, r: C64, alpha: C64, gamma: C64) -> Result<C64> {
    if (alpha - gamma).norm() < 1e-8 {
        return Err(Error::Guard((alpha - gamma).norm()));
    }
    let nn = n as f64;
    let v = predict_v(n, r)?;
    let (za, zma, zg, zmg) = (zfun(alpha)?, zfun(-alpha)?, zfun(gamma)?, zfun(-gamma)?);
    let z2g = zfun(2.0 * gamma)?;
    let q = r * (r - 1.0) / (2.0 * nn);
    let a = z2g * z_ratio_pow(za, zg, r) / zfun(alpha + gamma)?
        * (1.0 + q * (zma - zmg + (r - 1.0) / 2.0));
    let b = (-2.0 * nn * alpha).exp() * z2g * z_ratio_pow(zma, zg, r) / zfun(gamma - alpha)?
        * (1.0 + q * (za - zmg + (r - 1.0) / 2.0));
    Ok(v * (a + b))
}

pub fn predict_moment_so(n: usize, r: C64) -> Result<C64> {
    Ok(predict_v(n, r)? * (1.0 + r * (r - 1.0) * (r - 1.0) / (2.0 * n as f64)))
}

fn mixed_statistic(s: &SpectrumSample, r: C64, pt: C64) -> Result<Option<C64>> {
    let w = if r == c(0.0, 0.0) {
        c(1.0, 0.0)
    } else {
        match log_lambda_1(s) {
            Ok(l) => (r * l).exp(),
            Err(Error::DegenerateSpectrum { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    };
    Ok(Some(-pt * w * log_deriv(s, pt)?))
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples < 100 {
        return Err(Error::InvalidArgument(format!("n_samples = {n_samples} < 100")));
    }
    Ok(())
}

pub fn mc_mixed_moment(spec: &MomentSpec, n_samples: usize, cfg: &SamplerConfig) -> Result<MCEstimate> {
    check_samples(n_samples)?;
    let pt = (-spec.phi).exp();
    run_mc(spec.ensemble, spec.n, cfg, n_samples, |s| mixed_statistic(s, spec.r, pt))
}

/// Several r values on one set of draws.
pub fn mc_mixed_moments(
    ensemble: EnsembleKind,
    n: usize,
    rs: &[C64],
    phi: C64,
    n_samples: usize,
    cfg: &SamplerConfig,
) -> Result<Vec<MCEstimate>> {
    check_samples(n_samples)?;
    let pt = (-phi).exp();
    run_mc_multi(ensemble, n, cfg, n_samples, rs.len(), |s, out| {
        let ld = -pt * log_deriv(s, pt)?;
        let l = match log_lambda_1(s) {
            Ok(l) => l,
            Err(Error::DegenerateSpectrum { .. }) => return Ok(false),
            Err(e) => return Err(e),
        };
        for (o, &r) in out.iter_mut().zip(rs) {
            *o = (r * l).exp() * ld;
        }
        Ok(true)
    })
}

pub fn mc_ratio_moment(
    ensemble: EnsembleKind,
    n: usize,
    k: u32,
    alpha: C64,
    gamma: C64,
    n_samples: usize,
    cfg: &SamplerConfig,
) -> Result<MCEstimate> {
    check_samples(n_samples)?;
    if k < 1 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if gamma.re <= 0.0 {
        return Err(Error::InvalidArgument("Re γ must be positive".into()));
    }
    let (sa, sg) = ((-alpha).exp(), (-gamma).exp());
    run_mc(ensemble, n, cfg, n_samples, |s| {
        let w = if k == 1 {
            c(1.0, 0.0)
        } else {
            match log_lambda_1(s) {
                Ok(l) => c(((k - 1) as f64 * l).exp(), 0.0),
                Err(Error::DegenerateSpectrum { .. }) => return Ok(None),
                Err(e) => return Err(e),
            }
        };
        Ok(Some(w * lambda_at(s, sa) / lambda_at(s, sg)))
    })
}
