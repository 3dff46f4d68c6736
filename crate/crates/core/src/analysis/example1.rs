use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Fraction;

/// Utilities of the size-4 group in the one-group-of-four instance with
/// `m - 1` singletons and `k = m + 2`, under IW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Example1 {
    pub m: usize,
    /// All four members request 4: `1 - 1/m`.
    pub u_group_request: f64,
    /// All four members request 2.
    pub u_all_twos: f64,
}

fn check_m(m: usize) -> Result<()> {
    if m < 4 {
        return Err(Error::ParamViolation(format!("m = {m} must be at least 4")));
    }
    Ok(())
}

/// Neumaier-compensated sum.
fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub fn example1_closed_forms(m: usize) -> Result<Example1> {
    check_m(m)?;
    let mf = m as f64;
    let terms = (1..=m).map(|t| {
        let first: f64 = (1..t)
            .map(|i| (mf - i as f64) / (mf + 2.0 - i as f64))
            .product();
        let hit = 2.0 / (mf + 2.0 - t as f64);
        let rest: f64 = (t..m)
            .map(|i| (mf - i as f64) / (mf + 1.5 - i as f64))
            .product();
        first * hit * rest
    });
    Ok(Example1 {
        m,
        u_group_request: 1.0 - 1.0 / mf,
        u_all_twos: 1.0 - compensated_sum(terms),
    })
}

/// The same two values as exact rationals.
pub fn example1_exact(m: usize) -> Result<(BigRational, BigRational)> {
    check_m(m)?;
    let q = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
    let mi = m as i64;
    let mut sum = BigRational::zero();
    for t in 1..=mi {
        let mut term = q(2, mi + 2 - t);
        for i in 1..t {
            term *= q(mi - i, mi + 2 - i);
        }
        for i in t..mi {
            // (m - i) / (m + 3/2 - i) = 2(m - i) / (2m + 3 - 2i)
            term *= q(2 * (mi - i), 2 * mi + 3 - 2 * i);
        }
        sum += term;
    }
    Ok((BigRational::one() - q(1, mi), BigRational::one() - sum))
}

/// Utilization of IW (and GLR) on `m` groups of size `s` with `k = αms`:
/// `(1/α) (1 - prod_{i=0}^{αm-1} (1 - 1/(m - i/s)))`.
pub fn spl_tight_closed_form(m: usize, s: usize, alpha: Fraction) -> Result<f64> {
    if m == 0 || s == 0 {
        return Err(Error::Nonpositive("m and s"));
    }
    let draws = alpha.times_integral(m as u64).ok_or_else(|| {
        Error::ParamViolation(format!("alpha * m = {alpha} * {m} is not integral"))
    })?;
    let a = alpha.value();
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::ParamViolation(format!(
            "alpha = {alpha} must lie in (0, 1)"
        )));
    }
    let (mf, sf) = (m as f64, s as f64);
    let log_prod: f64 = (0..draws)
        .map(|i| (-1.0 / (mf - i as f64 / sf)).ln_1p())
        .sum();
    Ok(-log_prod.exp_m1() / a)
}
