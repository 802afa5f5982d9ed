//! Exact determinant identities behind the 𝓜 and 𝓙 integrals.

use crate::specfun::{ln_barnes_g, ln_gamma};
use crate::{c, Error, Result, C64};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::f64::consts::PI;

/// coeff·(2πi)^power.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoPiIMultiple {
    pub coeff: BigRational,
    pub power: u32,
}

impl TwoPiIMultiple {
    pub fn to_complex(&self) -> C64 {
        let unit = c(0.0, 2.0 * PI).powi(self.power as i32);
        unit * ratio_to_f64(&self.coeff)
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    // numerator and denominator can both overflow f64 for large k
    let (n, d) = (r.numer(), r.denom());
    let shift = (n.bits() as i64).max(d.bits() as i64) - 1000;
    if shift > 0 {
        let s = shift as usize;
        let n2: f64 = (n >> s).to_f64().unwrap_or(0.0);
        let d2: f64 = (d >> s).to_f64().unwrap_or(f64::INFINITY);
        n2 / d2
    } else {
        n.to_f64().unwrap() / d.to_f64().unwrap()
    }
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// 1/Γ(m) for integer m: 0 at m ≤ 0.
pub fn recip_gamma_int(m: i64) -> BigRational {
    if m <= 0 {
        BigRational::zero()
    } else {
        BigRational::new(BigInt::one(), factorial((m - 1) as u64))
    }
}

/// Determinant by fraction-free (Bareiss) elimination after clearing
/// denominators row by row.
pub fn det_rational(mat: &[Vec<BigRational>]) -> BigRational {
    let n = mat.len();
    if n == 0 {
        return BigRational::one();
    }
    let mut scale = BigInt::one();
    let mut a: Vec<Vec<BigInt>> = mat
        .iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            scale *= &l;
            row.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect()
        })
        .collect();
    let mut sign = 1;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return BigRational::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone() * sign;
    BigRational::new(d, scale)
}

fn check_k(k: usize, max: usize) -> Result<()> {
    if k < 2 || k > max {
        return Err(Error::InvalidArgument(format!("k = {k} outside 2..={max}")));
    }
    Ok(())
}

/// (K−1)×(K−1) matrix with entries 1/Γ(2K−3 − i − 2j).
fn m_matrix(k: usize) -> Vec<Vec<BigRational>> {
    let n = k - 1;
    let kk = k as i64;
    (0..n)
        .map(|i| (0..n).map(|j| recip_gamma_int(2 * kk - 3 - i as i64 - 2 * j as i64)).collect())
        .collect()
}

/// As the 𝓜 matrix, with the last row's argument lowered by one more.
fn j_matrix(k: usize) -> Vec<Vec<BigRational>> {
    let mut m = m_matrix(k);
    let kk = k as i64;
    let last = m.len() - 1;
    m[last] = (0..k - 1).map(|j| recip_gamma_int(kk - 2 - 2 * j as i64)).collect();
    m
}

fn sign_kk(k: usize) -> i64 {
    if ((k - 1) * (k - 2) / 2) % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn m_gamma_det(k: usize) -> Result<TwoPiIMultiple> {
    check_k(k, 40)?;
    let d = det_rational(&m_matrix(k)) * BigRational::from_integer(factorial(k as u64 - 1));
    Ok(TwoPiIMultiple {
        coeff: d,
        power: (k - 1) as u32,
    })
}

pub fn j_gamma_det(k: usize) -> Result<TwoPiIMultiple> {
    check_k(k, 40)?;
    let d = det_rational(&j_matrix(k)) * BigRational::from_integer(factorial(k as u64 - 1));
    Ok(TwoPiIMultiple {
        coeff: d,
        power: (k - 1) as u32,
    })
}

/// (−1)^{(K−1)(K−2)/2}(K−1)!∏_{j=1}^{K−2} 1/(2j−1)!! times (2πi)^{K−1}.
pub fn m_closed_form(k: usize) -> Result<TwoPiIMultiple> {
    check_k(k, 40)?;
    let mut den = BigInt::one();
    for j in 1..=(k as u64).saturating_sub(2) {
        let mut df = BigInt::one();
        let mut m = 2 * j - 1;
        while m > 1 {
            df *= m;
            m -= 2;
        }
        den *= df;
    }
    let num = factorial(k as u64 - 1) * sign_kk(k);
    Ok(TwoPiIMultiple {
        coeff: BigRational::new(num, den),
        power: (k - 1) as u32,
    })
}

/// (−1)^{(K−1)(K−2)/2}(2πi)^{K−1}2^{(K−1)(K−3)/2}G(K)√(Γ(2K−1)Γ(K))/√G(2K−1).
pub fn m_barnes_form(k: usize) -> Result<C64> {
    check_k(k, 20)?;
    let kf = k as f64;
    let lg = |x: f64| ln_gamma(c(x, 0.0)).map(|v| v.re);
    let lb = |x: f64| ln_barnes_g(c(x, 0.0)).map(|v| v.re);
    let l = (kf - 1.0) * (kf - 3.0) / 2.0 * std::f64::consts::LN_2
        + lb(kf)?
        + 0.5 * (lg(2.0 * kf - 1.0)? + lg(kf)? - lb(2.0 * kf - 1.0)?);
    Ok(c(0.0, 2.0 * PI).powi(k as i32 - 1) * (sign_kk(k) as f64 * l.exp()))
}

/// (K−1)(K−2)/2 · det(𝓜 matrix) = det(𝓙 matrix), exactly.
pub fn interesting_det_relation_check(k: usize) -> Result<bool> {
    check_k(k, 20)?;
    let lhs = det_rational(&m_matrix(k))
        * BigRational::from_integer(BigInt::from((k - 1) * (k - 2) / 2));
    Ok(lhs == det_rational(&j_matrix(k)))
}

/// det(rows x⁰, …, x^{n−2}, x^n) = (Σx)·det(rows x⁰, …, x^{n−1}).
pub fn vandermondian_check(x: &[BigRational]) -> Result<bool> {
    let n = x.len();
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one value".into()));
    }
    for i in 0..n {
        if x[i + 1..].contains(&x[i]) {
            return Err(Error::InvalidArgument("values must be distinct".into()));
        }
    }
    let pow = |e: usize| -> Vec<BigRational> {
        x.iter().map(|v| num_traits::pow::pow(v.clone(), e)).collect()
    };
    let vander: Vec<Vec<BigRational>> = (0..n).map(pow).collect();
    let mut gap = vander.clone();
    gap[n - 1] = pow(n);
    let sum: BigRational = x.iter().cloned().sum();
    Ok(det_rational(&gap) == sum * det_rational(&vander))
}

/// The K×K reciprocal-Gamma matrix of the all-at-zero term has a zero last
/// column, hence determinant 0.
pub fn all_zero_det_check(k: usize) -> Result<bool> {
    check_k(k, 40)?;
    let kk = k as i64;
    let mat: Vec<Vec<BigRational>> = (0..k)
        .map(|i| (0..k).map(|j| recip_gamma_int(2 * kk - 3 - i as i64 - 2 * j as i64)).collect())
        .collect();
    let last_col_zero = mat.iter().all(|row| row[k - 1].is_zero());
    Ok(last_col_zero && det_rational(&mat).is_zero())
}

/// Vandermondian identity on `count` seeded tuples of 1–6 distinct
/// rationals p/q, |p| < 50, 1 ≤ q < 12. Returns the number of failures.
pub fn vandermondian_sweep(seed: u64, count: usize) -> Result<usize> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..count {
        let len = rng.random_range(1..=6);
        let mut xs: Vec<BigRational> = Vec::with_capacity(len);
        while xs.len() < len {
            let v = BigRational::new(BigInt::from(rng.random_range(-49i64..50)), BigInt::from(rng.random_range(1i64..12)));
            if !xs.contains(&v) {
                xs.push(v);
            }
        }
        if !vandermondian_check(&xs)? {
            failures += 1;
        }
    }
    Ok(failures)
}

/// Integer-valued rationals, for convenience.
pub fn rationals(xs: &[i64]) -> Vec<BigRational> {
    xs.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect()
}

/// Sign of the rational coefficient, for display.
pub fn coeff_sign(t: &TwoPiIMultiple) -> i32 {
    if t.coeff.is_positive() {
        1
    } else if t.coeff.is_negative() {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contours::{j_integral, m_integral};
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn bareiss_small() {
        let m = vec![
            vec![q(2, 1), q(1, 2), q(0, 1)],
            vec![q(1, 3), q(0, 1), q(4, 1)],
            vec![q(0, 1), q(5, 1), q(1, 1)],
        ];
        // cofactor expansion by hand: 2(0−20) − ½(⅓ − 0) + 0 = −40 − 1/6
        assert_eq!(det_rational(&m), q(-241, 6));
        let singular = vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]];
        assert!(det_rational(&singular).is_zero());
        let pivot = vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]];
        assert_eq!(det_rational(&pivot), q(-1, 1));
    }

    #[test]
    fn m_examples() {
        assert_eq!(m_gamma_det(2).unwrap(), TwoPiIMultiple { coeff: q(1, 1), power: 1 });
        assert_eq!(m_gamma_det(3).unwrap().coeff, q(-2, 1));
        assert_eq!(m_closed_form(2).unwrap().coeff, q(1, 1));
        assert_eq!(m_closed_form(3).unwrap().coeff, q(-2, 1));
        assert_eq!(m_closed_form(5).unwrap().coeff, q(24, 45));
        assert_eq!(m_gamma_det(4).unwrap(), m_closed_form(4).unwrap());
        let b2 = m_barnes_form(2).unwrap();
        assert!((b2 - c(0.0, 2.0 * PI)).norm() < 1e-12);
        let b3 = m_barnes_form(3).unwrap();
        assert!((b3 - (-2.0) * c(0.0, 2.0 * PI).powi(2)).norm() < 1e-11);
        assert!(m_gamma_det(1).is_err() && m_gamma_det(41).is_err());
    }

    #[test]
    fn j_examples() {
        assert_eq!(j_gamma_det(3).unwrap().coeff, q(-2, 1));
        let r = j_gamma_det(6).unwrap().coeff / m_gamma_det(6).unwrap().coeff;
        assert_eq!(r, q(10, 1));
    }

    #[test]
    fn exact_invariants() {
        for k in 2..=12 {
            assert_eq!(m_gamma_det(k).unwrap(), m_closed_form(k).unwrap(), "{k}");
            let j = j_gamma_det(k).unwrap().coeff;
            let m = m_gamma_det(k).unwrap().coeff;
            assert_eq!(j, m * q(((k - 1) * (k - 2) / 2) as i64, 1), "{k}");
            assert!(all_zero_det_check(k).unwrap());
        }
        for k in [3, 4, 10, 20] {
            assert!(interesting_det_relation_check(k).unwrap());
        }
        assert_eq!(m_gamma_det(40).unwrap(), m_closed_form(40).unwrap());
    }

    #[test]
    fn barnes_form_matches_exact() {
        for k in 2..=8 {
            let exact = m_gamma_det(k).unwrap().to_complex();
            let b = m_barnes_form(k).unwrap();
            assert!((b - exact).norm() <= 1e-9 * exact.norm(), "{k}: {b} {exact}");
        }
    }

    #[test]
    fn quadrature_matches_exact() {
        for k in 2..=6 {
            let exact = m_closed_form(k).unwrap().to_complex();
            let m = m_integral(k).unwrap();
            assert!((m - exact).norm() <= 1e-8 * exact.norm(), "M {k}: {m} {exact}");
            let j = j_integral(k).unwrap();
            let jx = j_gamma_det(k).unwrap().to_complex();
            assert!((j - jx).norm() <= 1e-8 * exact.norm(), "J {k}: {j} {jx}");
        }
    }

    #[test]
    fn vandermondian_examples() {
        assert!(vandermondian_check(&rationals(&[1, 2])).unwrap());
        assert!(vandermondian_check(&rationals(&[1, 2, 3])).unwrap());
        assert!(vandermondian_check(&rationals(&[2, 2])).is_err());
    }

    proptest! {
        #[test]
        fn vandermondian_random(xs in proptest::collection::vec((-50i64..50, 1i64..12), 1..=6)) {
            let vals: Vec<BigRational> = xs.iter().map(|&(n, d)| q(n, d)).collect();
            let distinct = (0..vals.len()).all(|i| !vals[i + 1..].contains(&vals[i]));
            prop_assume!(distinct);
            prop_assert!(vandermondian_check(&vals).unwrap());
        }
    }
}
