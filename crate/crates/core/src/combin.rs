//! Integer combinatorics on arbitrary-precision integers.

use num_bigint::{BigInt, BigUint};
use num_traits::One;

pub fn factorial(k: u64) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * i)
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::default();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Rising factorial `x (x+1) ... (x+s-1)` of a nonnegative integer base.
pub fn rising_uint(x: u64, s: u64) -> BigUint {
    (0..s).fold(BigUint::one(), |acc, i| acc * (x + i))
}

/// `(2k-1)!! = 1 * 3 * ... * (2k-1)`, with `(-1)!! = 1`.
pub fn double_factorial_odd(k: u64) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * (2 * i - 1))
}

pub fn to_int(u: BigUint) -> BigInt {
    BigInt::from(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(factorial(0), BigUint::from(1u32));
        assert_eq!(factorial(5), BigUint::from(120u32));
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(2, 3), BigUint::default());
        assert_eq!(rising_uint(3, 2), BigUint::from(12u32));
        assert_eq!(rising_uint(0, 0), BigUint::from(1u32));
        assert_eq!(rising_uint(0, 2), BigUint::default());
        assert_eq!(double_factorial_odd(3), BigUint::from(15u32));
    }
}
