//! Λ(s) = ∏_j (1 − s e^{−iθ_j})(1 − s e^{iθ_j}) and related quantities.

use crate::haar::SpectrumSample;
use crate::{c, Error, Result, C64};

/// Floor returned for log Λ(1) when an angle sits at 0.
pub const LOG_FLOOR: f64 = -700.0;
/// Angles below this count as 0 for log Λ(1).
pub const DEGENERATE_TOL: f64 = 1e-12;
/// Minimum distance between s and an eigenvalue for Λ′/Λ.
pub const NEAR_EIGENVALUE_TOL: f64 = 1e-10;

/// Λ(s), accumulated as a sum of logarithms.
pub fn lambda_at(sample: &SpectrumSample, s: C64) -> C64 {
    let mut acc = c(0.0, 0.0);
    for &t in &sample.angles {
        let e = C64::from_polar(1.0, t);
        let f1 = 1.0 - s * e.conj();
        let f2 = 1.0 - s * e;
        if f1 == c(0.0, 0.0) || f2 == c(0.0, 0.0) {
            return c(0.0, 0.0);
        }
        acc += f1.ln() + f2.ln();
    }
    acc.exp()
}

/// log Λ(1) = Σ log(2 − 2cos θ_j), computed as Σ 2 log(2 sin(θ_j/2)).
pub fn log_lambda_1(sample: &SpectrumSample) -> Result<f64> {
    match log_lambda_1_floored(sample) {
        (v, false) => Ok(v),
        (_, true) => Err(Error::DegenerateSpectrum { floor: LOG_FLOOR }),
    }
}

/// log Λ(1) with the degenerate case floored at [`LOG_FLOOR`]; the flag is
/// set when the floor was used.
pub fn log_lambda_1_floored(sample: &SpectrumSample) -> (f64, bool) {
    let mut s = 0.0;
    for &t in &sample.angles {
        if t < DEGENERATE_TOL {
            return (LOG_FLOOR, true);
        }
        s += 2.0 * (2.0 * (0.5 * t).sin()).ln();
    }
    (s.max(LOG_FLOOR), false)
}

/// Λ′(s)/Λ(s).
pub fn log_deriv(sample: &SpectrumSample, s: C64) -> Result<C64> {
    let mut acc = c(0.0, 0.0);
    for &t in &sample.angles {
        let e = C64::from_polar(1.0, t);
        let ec = e.conj();
        if (s - e).norm() < NEAR_EIGENVALUE_TOL || (s - ec).norm() < NEAR_EIGENVALUE_TOL {
            return Err(Error::NearEigenvalue(NEAR_EIGENVALUE_TOL));
        }
        acc -= ec / (1.0 - s * ec) + e / (1.0 - s * e);
    }
    Ok(acc)
}

/// Λ(1)^r through the real logarithm.
pub fn lambda_pow(sample: &SpectrumSample, r: C64) -> Result<C64> {
    Ok((r * log_lambda_1(sample)?).exp())
}
