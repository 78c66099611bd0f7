//! Arbitrary-precision rational scalars and the binomial conventions used
//! throughout the mode calculus.

use num::{BigInt, BigRational, One, Zero};

/// Exact scalar type: reduced fractions with positive denominator.
///
/// `num`'s `Ratio` maintains gcd-reduced form with a positive denominator on
/// every construction, which is exactly the canonical form we rely on for
/// structural equality.
pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn factorial(k: u32) -> Rational {
    let mut acc = BigInt::one();
    for t in 2..=k as u64 {
        acc *= BigInt::from(t);
    }
    BigRational::from_integer(acc)
}

/// Falling factorial `m (m-1) ... (m-k+1)` for arbitrary integer `m`.
pub fn falling(m: i64, k: u32) -> Rational {
    let mut acc = BigInt::one();
    for t in 0..k as i64 {
        acc *= BigInt::from(m - t);
    }
    BigRational::from_integer(acc)
}

/// Binomial coefficient `C(m, j)` extended to arbitrary integer `m` by the
/// falling-factorial convention `m(m-1)...(m-j+1)/j!`.
pub fn binom(m: i64, j: u32) -> Rational {
    falling(m, j) / factorial(j)
}

pub fn is_zero(r: &Rational) -> bool {
    r.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binom_negative_upper_index() {
        // C(-1, j) = (-1)^j
        assert_eq!(binom(-1, 0), rat(1));
        assert_eq!(binom(-1, 1), rat(-1));
        assert_eq!(binom(-1, 2), rat(1));
        assert_eq!(binom(-1, 3), rat(-1));
        // C(-2, 2) = (-2)(-3)/2 = 3
        assert_eq!(binom(-2, 2), rat(3));
    }

    #[test]
    fn binom_ordinary() {
        assert_eq!(binom(4, 2), rat(6));
        assert_eq!(binom(3, 3), rat(1));
        assert_eq!(binom(2, 3), rat(0));
    }

    #[test]
    fn frac_is_reduced() {
        assert_eq!(frac(2, 4), frac(1, 2));
        assert_eq!(frac(1, -2), frac(-1, 2));
    }
}
