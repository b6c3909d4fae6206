//! Exact rational helpers on top of `num-rational`.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Natural log of a positive big integer, valid far beyond the f64 range.
pub fn ln_bigint(n: &BigInt) -> f64 {
    debug_assert!(n.sign() == Sign::Plus);
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    top.to_f64().expect("finite").ln() + (shift as f64) * std::f64::consts::LN_2
}

/// `ln |x|`; `-inf` for zero.
pub fn ln_abs(x: &Q) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_bigint(&x.numer().abs()) - ln_bigint(&x.denom().abs())
}

/// Nearest f64, computed through logarithms when numerator or denominator overflow.
pub fn to_f64(x: &Q) -> f64 {
    if let Some(v) = x.to_f64() {
        if v.is_finite() && (v != 0.0 || x.is_zero()) {
            return v;
        }
    }
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    sign * ln_abs(x).exp()
}

/// Rising factorial `x (x+1) ... (x+k-1)`.
pub fn rising(x: &Q, k: u32) -> Q {
    let mut acc = Q::one();
    let mut term = x.clone();
    for _ in 0..k {
        acc *= &term;
        term += Q::one();
    }
    acc
}

pub fn binomial_row(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 0..n {
        let next = &row[k] * BigInt::from(n - k) / BigInt::from(k + 1);
        row.push(next);
    }
    row
}

/// `"num/den"` in lowest terms; integers print without a denominator.
pub fn fmt_exact(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}
