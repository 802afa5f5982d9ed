//! Quadratic twists of an elliptic curve: Frobenius traces, the Euler
//! product Ã_E, the mixed-moment prediction and one-level densities of
//! low-lying zeros.

use crate::excised::{with_doubling, DensityCurve, Normalization, ResidueCircle, RESIDUE_POINTS, RESIDUE_RADIUS};
use crate::moments::v_factor;
use crate::specfun::{digamma, gfun, zeta_and_prime, zfun};
use crate::{c, Error, Result, C64};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::path::Path;

pub const DEFAULT_P_MAX: u64 = 1000;
pub const DRIFT_TOL: f64 = 1e-6;
const DERIV_STEP: f64 = 1e-4;
const DERIV_TOL: f64 = 1e-5;
/// Below this |φ| the r = 0 bracket is evaluated by a Cauchy mean.
pub const NEAR_ORIGIN: f64 = 1e-3;
const CAUCHY_RADIUS: f64 = 1e-2;
const CAUCHY_POINTS: usize = 32;
const RESIDUE_PHI_MIN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveConfig {
    /// (a1, a2, a3, a4, a6)
    pub weierstrass: [i64; 5],
    pub conductor_m: u64,
    pub omega_e: i32,
    pub kappa_e: Option<f64>,
    pub bad_primes: Vec<u64>,
}

impl CurveConfig {
    /// E11.a3: y² + y = x³ − x², conductor 11, even sign.
    pub fn e11() -> Self {
        CurveConfig {
            weierstrass: [0, -1, 1, 0, 0],
            conductor_m: 11,
            omega_e: 1,
            kappa_e: None,
            bad_primes: vec![11],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.conductor_m == 0 {
            return Err(Error::InvalidArgument("conductor must be positive".into()));
        }
        if self.omega_e != 1 && self.omega_e != -1 {
            return Err(Error::InvalidArgument("omega_E must be ±1".into()));
        }
        if let Some(k) = self.kappa_e {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::InvalidArgument("kappa_E must be positive".into()));
            }
        }
        for &p in &self.bad_primes {
            if !is_prime(p) || self.conductor_m % p != 0 {
                return Err(Error::InvalidArgument(format!("bad prime {p} does not divide the conductor")));
            }
        }
        Ok(())
    }

    pub fn is_bad(&self, p: u64) -> bool {
        self.bad_primes.contains(&p)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    let n = n as usize;
    if n < 2 {
        return Vec::new();
    }
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            for j in (i * i..=n).step_by(i) {
                sieve[j] = false;
            }
        }
        i += 1;
    }
    (0..=n).filter(|&i| sieve[i]).map(|i| i as u64).collect()
}

/// Projective point count over F_p, point at infinity included.
pub fn count_points_mod_p(curve: &CurveConfig, p: u64) -> Result<u64> {
    if !is_prime(p) || p > 1_000_000 {
        return Err(Error::InvalidArgument(format!("{p} is not a prime ≤ 10⁶")));
    }
    let m = |v: i64| v.rem_euclid(p as i64) as u64;
    let [a1, a2, a3, a4, a6] = curve.weierstrass.map(m);
    let cubic = |x: u64| ((((x + a2) % p) * x % p + a4) % p * x % p + a6) % p;
    if p <= 3 {
        let mut count = 1;
        for x in 0..p {
            for y in 0..p {
                let lhs = (y * y + a1 * x % p * y + a3 * y) % p;
                if lhs == cubic(x) {
                    count += 1;
                }
            }
        }
        return Ok(count);
    }
    // (2y + a1x + a3)² = 4(x³ + a2x² + a4x + a6) + (a1x + a3)²
    let mut square = vec![false; p as usize];
    for y in 0..p {
        square[(y * y % p) as usize] = true;
    }
    let mut count = 1;
    for x in 0..p {
        let s = (a1 * x + a3) % p;
        let f = (4 * cubic(x) + s * s) % p;
        count += if f == 0 {
            1
        } else if square[f as usize] {
            2
        } else {
            0
        };
    }
    Ok(count)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApEntry {
    pub p: u64,
    pub lambda: f64,
    pub bad: bool,
}

/// λ(p) = (p + 1 − N_p)/√p for primes p ≤ p_max.
#[derive(Debug, Clone, PartialEq)]
pub struct ApTable {
    pub p_max: u64,
    entries: Vec<ApEntry>,
}

impl ApTable {
    pub fn build(curve: &CurveConfig, p_max: u64) -> Result<Self> {
        curve.validate()?;
        let entries = primes_up_to(p_max)
            .into_par_iter()
            .map(|p| {
                let np = count_points_mod_p(curve, p)?;
                Ok(ApEntry {
                    p,
                    lambda: (p as f64 + 1.0 - np as f64) / (p as f64).sqrt(),
                    bad: curve.is_bad(p),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ApTable { p_max, entries })
    }

    pub fn entries(&self) -> &[ApEntry] {
        &self.entries
    }

    /// Entries with p ≤ p_max.
    pub fn up_to(&self, p_max: u64) -> &[ApEntry] {
        let end = self.entries.partition_point(|e| e.p <= p_max);
        &self.entries[..end]
    }

    pub fn lambda(&self, p: u64) -> Option<f64> {
        self.entries
            .binary_search_by_key(&p, |e| e.p)
            .ok()
            .map(|i| self.entries[i].lambda)
    }

    /// Good primes where |λ(p)| > 2.
    pub fn hasse_violations(&self) -> Vec<u64> {
        self.entries
            .iter()
            .filter(|e| !e.bad && e.lambda.abs() > 2.0 + 1e-12)
            .map(|e| e.p)
            .collect()
    }

    /// `p,lambda` CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
        w.write_record(["p", "lambda"]).map_err(|e| Error::Io(e.to_string()))?;
        for e in &self.entries {
            w.write_record([e.p.to_string(), e.lambda.to_string()])
                .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, curve: &CurveConfig, p_max: u64) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
        let mut entries = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            let bad = |msg: &str| Error::Parse { line, msg: msg.into() };
            if rec.len() != 2 {
                return Err(bad("expected p,lambda"));
            }
            let p: u64 = rec[0].trim().parse().map_err(|_| bad("bad prime"))?;
            let lambda: f64 = rec[1].trim().parse().map_err(|_| bad("bad lambda"))?;
            if p <= p_max {
                entries.push(ApEntry {
                    p,
                    lambda,
                    bad: curve.is_bad(p),
                });
            }
        }
        let expected = primes_up_to(p_max);
        if entries.len() != expected.len() || entries.iter().zip(&expected).any(|(e, &p)| e.p != p) {
            return Err(Error::Parse {
                line: 0,
                msg: format!("cache does not cover the primes up to {p_max}"),
            });
        }
        Ok(ApTable { p_max, entries })
    }
}

/// log of the local factor of Ã_E(α, γ) = A_E(0, …, 0, α; γ) with r zeros.
fn local_log(e: &ApEntry, alpha: C64, gamma: C64, r: C64) -> C64 {
    let lp = (e.p as f64).ln();
    let pw = |s: C64| (-s * lp).exp();
    let inv = 1.0 / e.p as f64;
    let one = c(1.0, 0.0);
    let mut l = r * (one - pw(1.0 + alpha)).ln() + r * (r - 1.0) / 2.0 * (1.0 - inv).ln()
        + (one - pw(1.0 + 2.0 * gamma)).ln()
        - (one - pw(1.0 + alpha + gamma)).ln()
        - r * (one - pw(1.0 + gamma)).ln();
    let lam = e.lambda;
    let rs = inv.sqrt();
    if e.bad {
        l += (one - lam * pw(0.5 + gamma)).ln() - (one - lam * pw(0.5 + alpha)).ln() - r * (1.0 - lam * rs).ln();
    } else {
        let half = |s: f64| {
            0.5 * (1.0 + s * lam * pw(0.5 + gamma) + pw(1.0 + 2.0 * gamma))
                / (1.0 + s * lam * pw(0.5 + alpha) + pw(1.0 + 2.0 * alpha))
                * (-r * (1.0 + s * lam * rs + inv).ln()).exp()
        };
        l += (half(-1.0) + half(1.0) + inv).ln() - (1.0 + inv).ln();
    }
    l
}

/// Ã_E(α, γ) truncated to p ≤ p_max, no convergence check.
pub fn a_e_tilde_truncated(alpha: C64, gamma: C64, r: C64, table: &ApTable, p_max: u64) -> C64 {
    table
        .up_to(p_max)
        .iter()
        .map(|e| local_log(e, alpha, gamma, r))
        .sum::<C64>()
        .exp()
}

fn check_p_max(table: &ApTable, p_max: u64, need: u64) -> Result<()> {
    if p_max < 100 {
        return Err(Error::InvalidArgument("p_max must be at least 100".into()));
    }
    if table.p_max < need {
        return Err(Error::InvalidArgument(format!("λ table covers p ≤ {} only", table.p_max)));
    }
    Ok(())
}

/// Relative change of Ã_E when p_max is doubled.
pub fn euler_drift(alpha: C64, gamma: C64, r: C64, table: &ApTable, p_max: u64) -> Result<f64> {
    check_p_max(table, p_max, 2 * p_max)?;
    let a = a_e_tilde_truncated(alpha, gamma, r, table, p_max);
    let b = a_e_tilde_truncated(alpha, gamma, r, table, 2 * p_max);
    Ok((b - a).norm() / b.norm())
}

/// Ã_E(α, γ) over p ≤ p_max, rejected when doubling p_max moves it by more
/// than [`DRIFT_TOL`].
pub fn a_e_tilde(alpha: C64, gamma: C64, r: C64, table: &ApTable, p_max: u64) -> Result<C64> {
    if alpha.norm() > 0.5 || gamma.norm() > 0.5 {
        return Err(Error::InvalidArgument("|α|, |γ| must be ≤ 0.5".into()));
    }
    let drift = euler_drift(alpha, gamma, r, table, p_max)?;
    if drift > DRIFT_TOL {
        return Err(Error::NonConvergence(format!(
            "Euler product moves by {drift:.2e} when p_max doubles"
        )));
    }
    Ok(a_e_tilde_truncated(alpha, gamma, r, table, p_max))
}

/// ∂Ã_E/∂α at α = γ = φ: central differences at h and h/2, Richardson
/// combined.
pub fn a_e_tilde_deriv(phi: C64, r: C64, table: &ApTable, p_max: u64) -> Result<C64> {
    let d = |h: f64| {
        (a_e_tilde_truncated(phi + h, phi, r, table, p_max) - a_e_tilde_truncated(phi - h, phi, r, table, p_max))
            / (2.0 * h)
    };
    let (d1, d2) = (d(DERIV_STEP), d(DERIV_STEP / 2.0));
    let rich = (4.0 * d2 - d1) / 3.0;
    if (rich - d2).norm() > DERIV_TOL * rich.norm().max(1.0) {
        return Err(Error::NonConvergence("Richardson estimate of Ã¹ unstable".into()));
    }
    Ok(rich)
}

/// φ-only pieces of the 𝒰 bracket at x (x = iφ on the L-function side).
#[derive(Debug, Clone, Copy)]
pub struct ZetaPart {
    /// ζ′/ζ(1 + x)
    pub ld1: C64,
    /// ζ′/ζ(1 + 2x)
    pub ld2: C64,
    /// ζ(1 + 2x)
    pub z2: C64,
    /// ln ζ(1 − x) − ln ζ(1 + x)
    pub ln_ratio: C64,
    /// Γ(1 − x)/Γ(1 + x)
    pub g: C64,
}

#[derive(Debug, Clone, Copy)]
pub struct EulerPart {
    /// Ã(x, x)
    pub diag: C64,
    /// Ã(−x, x)
    pub refl: C64,
    /// Ã¹(x)
    pub deriv: C64,
}

/// The two families of ingredients: ζ with Ã_E, or z with Ã = 1.
pub trait BracketOps: Sync {
    fn zeta_part(&self, x: C64) -> Result<ZetaPart>;
    fn euler_part(&self, x: C64, r: C64) -> Result<EulerPart>;
}

/// Ã¹ + Ã r ζ′/ζ(1+x) − Ã ζ′/ζ(1+2x) − e^{−2𝒩x} ζ(1+2x) (ζ(1−x)/ζ(1+x))^r Ã(−x, x) g(x)
pub fn combine(nn: f64, r: C64, x: C64, z: &ZetaPart, e: &EulerPart) -> C64 {
    e.deriv + e.diag * r * z.ld1
        - e.diag * z.ld2
        - (-2.0 * nn * x).exp() * z.z2 * (r * z.ln_ratio).exp() * e.refl * z.g
}

pub fn u_bracket<O: BracketOps>(ops: &O, nn: f64, r: C64, x: C64) -> Result<C64> {
    Ok(combine(nn, r, x, &ops.zeta_part(x)?, &ops.euler_part(x, r)?))
}

/// z(x) = 1/(1 − e^{−x}) for ζ(1 + x), unit arithmetic factor: the leading
/// order of the SO(2N) bracket.
pub struct MatrixOps;

impl BracketOps for MatrixOps {
    fn zeta_part(&self, x: C64) -> Result<ZetaPart> {
        Ok(ZetaPart {
            ld1: zfun(-x)?,
            ld2: zfun(-2.0 * x)?,
            z2: zfun(2.0 * x)?,
            ln_ratio: zfun(-x)?.ln() - zfun(x)?.ln(),
            g: c(1.0, 0.0),
        })
    }

    fn euler_part(&self, _x: C64, _r: C64) -> Result<EulerPart> {
        Ok(EulerPart {
            diag: c(1.0, 0.0),
            refl: c(1.0, 0.0),
            deriv: c(0.0, 0.0),
        })
    }
}

pub struct LfunOps<'a> {
    pub table: &'a ApTable,
    pub p_max: u64,
}

impl BracketOps for LfunOps<'_> {
    fn zeta_part(&self, x: C64) -> Result<ZetaPart> {
        let (z1, zp1) = zeta_and_prime(1.0 + x)?;
        let (z2, zp2) = zeta_and_prime(1.0 + 2.0 * x)?;
        let (zm, _) = zeta_and_prime(1.0 - x)?;
        Ok(ZetaPart {
            ld1: zp1 / z1,
            ld2: zp2 / z2,
            z2,
            ln_ratio: zm.ln() - z1.ln(),
            g: gfun(x)?,
        })
    }

    fn euler_part(&self, x: C64, r: C64) -> Result<EulerPart> {
        Ok(EulerPart {
            diag: a_e_tilde_truncated(x, x, r, self.table, self.p_max),
            refl: a_e_tilde_truncated(-x, x, r, self.table, self.p_max),
            deriv: a_e_tilde_deriv(x, r, self.table, self.p_max)?,
        })
    }
}

/// 𝒩_d = log(√M d/2π).
pub fn conductor_log(curve: &CurveConfig, d: u64) -> f64 {
    ((curve.conductor_m as f64).sqrt() * d as f64 / (2.0 * PI)).ln()
}

/// 𝒰_E(𝒩, r, φ); φ enters as iφ.
pub fn u_e(nn: f64, r: C64, phi: C64, table: &ApTable, p_max: u64) -> Result<C64> {
    u_bracket(&LfunOps { table, p_max }, nn, r, c(0.0, 1.0) * phi)
}

/// 𝒱(𝒩_d, r)·𝒰_E(𝒩_d, r, φ) for a single twist d.
pub fn predict_mixed_lfun(d: u64, r: C64, phi: C64, curve: &CurveConfig, table: &ApTable, p_max: u64) -> Result<C64> {
    let nn = conductor_log(curve, d);
    if nn <= 0.0 {
        return Err(Error::InvalidArgument(format!("𝒩_d ≤ 0 for d = {d}")));
    }
    check_p_max(table, p_max, p_max)?;
    Ok(v_factor(nn, r)? * u_e(nn, r, phi, table, p_max)?)
}

/// Kronecker symbol (a/n).
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a.abs() == 1 { 1 } else { 0 };
    }
    let mut result = 1;
    let mut n = n;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let v = n.trailing_zeros();
    if v > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if v % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            result = -result;
        }
        n >>= v;
    }
    // Jacobi symbol for odd n
    let mut a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

fn squarefree(m: u64) -> bool {
    let mut d = 2;
    while d * d <= m {
        if m % (d * d) == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// d ≡ 1 (4) squarefree, or d = 4m with m ≡ 2, 3 (4) squarefree; d > 1.
pub fn is_fundamental_discriminant(d: u64) -> bool {
    if d <= 1 {
        return false;
    }
    match d % 4 {
        1 => squarefree(d),
        0 => matches!((d / 4) % 4, 2 | 3) && squarefree(d / 4),
        _ => false,
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistFamily {
    pub x: f64,
    pub d_list: Vec<u64>,
    pub n_d: Vec<f64>,
}

impl TwistFamily {
    pub fn len(&self) -> usize {
        self.d_list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_list.is_empty()
    }
}

/// Positive fundamental discriminants d ≤ X, coprime to M, with
/// ω_E·(d/−M) = +1.
pub fn twist_family(x: f64, curve: &CurveConfig) -> Result<TwistFamily> {
    if !(x >= 3.0) {
        return Err(Error::InvalidArgument("X must be at least 3".into()));
    }
    curve.validate()?;
    let m = curve.conductor_m;
    let ds: Vec<u64> = (2..=x.floor() as u64)
        .filter(|&d| {
            is_fundamental_discriminant(d)
                && gcd(d, m) == 1
                && curve.omega_e * kronecker(d as i64, -(m as i64)) == 1
        })
        .collect();
    family_from_list(x, ds, curve)
}

/// A family from an explicit d-list, no root-number filtering.
pub fn family_from_list(x: f64, d_list: Vec<u64>, curve: &CurveConfig) -> Result<TwistFamily> {
    let n_d = d_list
        .iter()
        .map(|&d| {
            let n = conductor_log(curve, d);
            if n > 0.0 {
                Ok(n)
            } else {
                Err(Error::InvalidArgument(format!("𝒩_d ≤ 0 for d = {d}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TwistFamily { x, d_list, n_d })
}

fn r0_sum_at<O: BracketOps>(ops: &O, ns: &[f64], phi: C64) -> Result<C64> {
    let x = c(0.0, 1.0) * phi;
    let z = ops.zeta_part(x)?;
    let e = ops.euler_part(x, c(0.0, 0.0))?;
    let psi = digamma(1.0 + x)? + digamma(1.0 - x)?;
    Ok(ns
        .iter()
        .map(|&n| 2.0 * n + psi + 2.0 * combine(n, c(0.0, 0.0), x, &z, &e))
        .sum())
}

/// Σ_d [2𝒩_d + Ψ(1+iφ) + Ψ(1−iφ) + 2𝒰_E(𝒩_d, 0, φ)], through a Cauchy mean
/// on |w − φ| = 10⁻² where the ζ poles cancel.
pub fn r0_family_sum<O: BracketOps>(ops: &O, ns: &[f64], phi: f64) -> Result<C64> {
    if phi.abs() >= NEAR_ORIGIN {
        return r0_sum_at(ops, ns, c(phi, 0.0));
    }
    let mut acc = c(0.0, 0.0);
    for j in 0..CAUCHY_POINTS {
        let w = c(phi, 0.0) + C64::from_polar(CAUCHY_RADIUS, 2.0 * PI * (j as f64 + 0.5) / CAUCHY_POINTS as f64);
        acc += r0_sum_at(ops, ns, w)?;
    }
    Ok(acc / CAUCHY_POINTS as f64)
}

/// (1/2π)·Re of the family sum of the r = 0 bracket.
pub fn r0_density_lfun(family: &TwistFamily, phi_grid: &[f64], table: &ApTable, p_max: u64) -> Result<DensityCurve> {
    check_p_max(table, p_max, p_max)?;
    let ops = LfunOps { table, p_max };
    let density = phi_grid
        .par_iter()
        .map(|&phi| Ok(r0_family_sum(&ops, &family.n_d, phi)?.re / (2.0 * PI)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityCurve {
        phi: phi_grid.to_vec(),
        density,
        normalization: Normalization::RawCount,
    })
}

/// Family sum of the residue at r = −(2k+1)/2 for each φ, with
/// ξ_d = log(κ/√d).
pub fn lfun_residues(family: &TwistFamily, phi_grid: &[f64], table: &ApTable, p_max: u64, kappa: f64, k: usize) -> Result<Vec<C64>> {
    let center = c(-(2.0 * k as f64 + 1.0) / 2.0, 0.0);
    // the 1/x terms of the bracket cancel only at r = 0
    if phi_grid.iter().any(|p| p.abs() < RESIDUE_PHI_MIN) {
        return Err(Error::Pole("L-side residues diverge like 1/φ at φ = 0".into()));
    }
    let ops = LfunOps { table, p_max };
    with_doubling(RESIDUE_POINTS, &format!("L-side residue at {center}"), |points| {
        let circle = ResidueCircle::new(center, RESIDUE_RADIUS, points)?;
        let bases: Vec<Vec<C64>> = family
            .d_list
            .iter()
            .zip(&family.n_d)
            .map(|(&d, &n)| circle.base(n, (kappa / (d as f64).sqrt()).ln()))
            .collect();
        let per_phi = phi_grid
            .par_iter()
            .map(|&phi| {
                let x = c(0.0, phi);
                let z = ops.zeta_part(x)?;
                let psi = digamma(1.0 + x)? + digamma(1.0 - x)?;
                let euler = circle
                    .nodes
                    .iter()
                    .map(|&r| ops.euler_part(x, r))
                    .collect::<Result<Vec<_>>>()?;
                let mut total = c(0.0, 0.0);
                let mut ok = true;
                for (base, &n) in bases.iter().zip(&family.n_d) {
                    let res = circle.residue(base, |j, r| Ok(2.0 * n + psi + 2.0 * combine(n, r, x, &z, &euler[j])))?;
                    ok &= res.settled();
                    total += res.value;
                }
                Ok((total, ok))
            })
            .collect::<Result<Vec<_>>>()?;
        let ok = per_phi.iter().all(|p| p.1);
        Ok((per_phi.into_iter().map(|p| p.0).collect(), ok))
    })
}

/// r = 0 term plus the residues at −½, …, −(2k_max−1)/2, over 2π.
pub fn excised_prediction_lfun(
    family: &TwistFamily,
    phi_grid: &[f64],
    table: &ApTable,
    p_max: u64,
    kappa: f64,
    k_max: usize,
) -> Result<DensityCurve> {
    if k_max > 3 {
        return Err(Error::InvalidArgument("k_max must be ≤ 3".into()));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument("kappa must be positive".into()));
    }
    let mut curve = r0_density_lfun(family, phi_grid, table, p_max)?;
    for k in 0..k_max {
        let res = lfun_residues(family, phi_grid, table, p_max, kappa, k)?;
        for (d, v) in curve.density.iter_mut().zip(&res) {
            *d += v.re / (2.0 * PI);
        }
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroDataset {
    pub records: Vec<(i64, f64)>,
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn record_line(rec: &csv::StringRecord, fallback: usize) -> usize {
    rec.position().map(|p| p.line() as usize).unwrap_or(fallback)
}

/// `d,gamma` lines; `#` lines ignored.
pub fn parse_zero_data(text: &str) -> Result<ZeroDataset> {
    let mut records = Vec::new();
    for (i, rec) in csv_reader(text).records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        let line = record_line(&rec, i + 1);
        let bad = |msg: &str| Error::Parse { line, msg: msg.into() };
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            return Err(bad("expected d,gamma"));
        }
        let d: i64 = rec[0].parse().map_err(|_| bad("bad discriminant"))?;
        let g: f64 = rec[1].parse().map_err(|_| bad("bad ordinate"))?;
        if !g.is_finite() {
            return Err(bad("ordinate not finite"));
        }
        records.push((d, g));
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(ZeroDataset { records })
}

pub fn ingest_zero_data(path: &Path) -> Result<ZeroDataset> {
    parse_zero_data(&std::fs::read_to_string(path)?)
}

/// One integer per line.
pub fn parse_d_list(text: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for (i, rec) in csv_reader(text).records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        let line = record_line(&rec, i + 1);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 1 {
            return Err(Error::Parse { line, msg: "expected one integer".into() });
        }
        out.push(rec[0].parse().map_err(|_| Error::Parse { line, msg: "bad discriminant".into() })?);
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}

/// Unit-area histogram of the ordinates in (0, phi_max].
pub fn zero_histogram(ds: &ZeroDataset, bins: usize, phi_max: f64) -> Result<DensityCurve> {
    if bins == 0 || !(phi_max > 0.0) {
        return Err(Error::InvalidArgument("need bins ≥ 1 and phi_max > 0".into()));
    }
    let h = phi_max / bins as f64;
    let mut counts = vec![0.0; bins];
    let mut any = false;
    for &(_, g) in &ds.records {
        if g > 0.0 && g <= phi_max {
            let b = ((g / h).ceil() as usize).clamp(1, bins) - 1;
            counts[b] += 1.0;
            any = true;
        }
    }
    if !any {
        return Err(Error::EmptyDataset);
    }
    Ok(DensityCurve {
        phi: (0..bins).map(|i| (i as f64 + 0.5) * h).collect(),
        density: counts,
        normalization: Normalization::RawCount,
    }
    .unit_area_on(phi_max))
}
