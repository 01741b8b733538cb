//! Scalar abstraction shared by every closed form and oracle table.
//!
//! Exact work runs on [`BigRational`]; the same code evaluates in `f64`
//! (or `f32`) when a quick floating answer is wanted.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

pub trait Scalar: Num + Clone + PartialOrd + Neg<Output = Self> + Debug + Send + Sync {
    fn from_int(v: i64) -> Self;

    fn from_big_ratio(num: &BigInt, den: &BigInt) -> Self;

    fn as_f64(&self) -> f64;

    /// `"num/den"` for exact scalars, twelve significant digits otherwise.
    fn render(&self) -> String {
        decimal12(self.as_f64())
    }

    /// `true` when arithmetic in this type is exact.
    const EXACT: bool;

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    fn from_u64(v: u64) -> Self {
        match i64::try_from(v) {
            Ok(v) => Self::from_int(v),
            Err(_) => Self::from_big_ratio(&BigInt::from(v), &BigInt::one()),
        }
    }

    fn powi(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_big_ratio(num: &BigInt, den: &BigInt) -> Self {
        BigRational::new(num.clone(), den.clone())
    }

    fn as_f64(&self) -> f64 {
        big_ratio_to_f64(self.numer(), self.denom())
    }

    fn render(&self) -> String {
        rational_string(self)
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_int(v: i64) -> Self {
                v as $t
            }

            fn from_big_ratio(num: &BigInt, den: &BigInt) -> Self {
                big_ratio_to_f64(num, den) as $t
            }

            fn as_f64(&self) -> f64 {
                *self as f64
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

/// Converts `num/den` to `f64` without reducing the fraction first, so
/// operands with tens of thousands of digits stay cheap.
pub fn big_ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if den.is_zero() {
        return f64::NAN;
    }
    if num.is_zero() {
        return 0.0;
    }
    let negative = num.is_negative() != den.is_negative();
    let (n, d) = (num.abs(), den.abs());
    // Align so the integer quotient carries ~64 significant bits.
    let shift = n.bits() as i64 - d.bits() as i64 - 64;
    let q = if shift >= 0 {
        &n / (&d << shift as usize)
    } else {
        (&n << (-shift) as usize) / &d
    };
    let mut v = q.to_f64().unwrap_or(f64::NAN);
    let mut s = shift;
    while s > 1000 {
        v *= 2f64.powi(1000);
        s -= 1000;
    }
    while s < -1000 {
        v *= 2f64.powi(-1000);
        s += 1000;
    }
    v *= 2f64.powi(s as i32);
    if negative {
        -v
    } else {
        v
    }
}

/// Renders an exact rational as `"num/den"` (integers render as `"num/1"`).
pub fn rational_string(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `"num/den"` or a bare integer.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

/// Twelve significant digits, the decimal rendering used in every report.
pub fn decimal12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if (-5..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.11e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::ratio(n, d)
    }

    #[test]
    fn ratio_is_canonical() {
        let r = q(-144, 1575);
        assert_eq!(rational_string(&r), "-16/175");
    }

    #[test]
    fn parse_roundtrip() {
        assert_eq!(parse_rational("3/10"), Some(q(3, 10)));
        assert_eq!(parse_rational("7"), Some(q(7, 1)));
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn huge_ratio_to_f64() {
        let big = BigInt::from(10).pow(5000);
        let num = &big * BigInt::from(3);
        let den = &big * BigInt::from(7);
        assert!((big_ratio_to_f64(&num, &den) - 3.0 / 7.0).abs() < 1e-15);
        assert!((big_ratio_to_f64(&-num, &den) + 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(big_ratio_to_f64(&BigInt::from(0), &den), 0.0);
    }

    #[test]
    fn f64_scalar_matches_rational() {
        let exact = q(24, 175).as_f64();
        assert!((f64::ratio(24, 175) - exact).abs() < 1e-16);
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal12(0.6), "0.6");
        assert_eq!(decimal12(1.0 / 3.0), "0.333333333333");
        assert_eq!(decimal12(1.5e20), "1.50000000000e20");
    }
}
