//! Coefficient rings shared by the Bell, partition and expansion code.
//!
//! The same recurrences run over exact rationals, over `f64`, and over
//! symbolic polynomials, so they are written against [`Coeff`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;

pub type Q = BigRational;

/// Rational `n/d`.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn factorial(n: usize) -> Q {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    Q::from_integer(acc)
}

/// Binomial coefficient with a rational upper argument, e.g. C(-r/2, k).
pub fn gen_binomial(top: &Q, k: usize) -> Q {
    let mut acc = Q::one();
    for j in 0..k {
        acc = acc * (top - qi(j as i64)) / qi(j as i64 + 1);
    }
    acc
}

pub fn binomial(n: usize, k: usize) -> Q {
    if k > n {
        return Q::zero();
    }
    gen_binomial(&qi(n as i64), k)
}

pub fn q_to_f64(x: &Q) -> f64 {
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // scale both parts down until they fit
            let shift = x.numer().bits().max(x.denom().bits()).saturating_sub(1000);
            let n = (x.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (x.denom() >> shift).to_f64().unwrap_or(1.0);
            n / d
        }
    }
}

/// Operations needed by the generic recurrences.
pub trait Coeff: Clone + Debug + PartialEq {
    fn nil() -> Self;
    fn unit() -> Self;
    fn is_nil(&self) -> bool;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn negate(&self) -> Self;
    fn from_q(x: &Q) -> Self;
    fn scale(&self, x: &Q) -> Self {
        self.times(&Self::from_q(x))
    }
    fn powi(&self, k: u32) -> Self {
        let mut acc = Self::unit();
        for _ in 0..k {
            acc = acc.times(self);
        }
        acc
    }
}

/// A coefficient ring with division, used for cumulant tables.
pub trait Field: Coeff {
    fn divide(&self, o: &Self) -> Self;
    /// Square root, `None` when it cannot be represented exactly.
    fn sqrt_exact(&self) -> Option<Self>;
    fn to_f64(&self) -> f64;
    fn is_positive(&self) -> bool;
}

impl Coeff for f64 {
    fn nil() -> Self {
        0.0
    }
    fn unit() -> Self {
        1.0
    }
    fn is_nil(&self) -> bool {
        *self == 0.0
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negate(&self) -> Self {
        -self
    }
    fn from_q(x: &Q) -> Self {
        q_to_f64(x)
    }
    fn scale(&self, x: &Q) -> Self {
        self * q_to_f64(x)
    }
}

impl Field for f64 {
    fn divide(&self, o: &Self) -> Self {
        self / o
    }
    fn sqrt_exact(&self) -> Option<Self> {
        (*self >= 0.0).then(|| self.sqrt())
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_positive(&self) -> bool {
        *self > 0.0
    }
}

impl Coeff for Q {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negate(&self) -> Self {
        -self
    }
    fn from_q(x: &Q) -> Self {
        x.clone()
    }
    fn scale(&self, x: &Q) -> Self {
        self * x
    }
}

impl Field for Q {
    fn divide(&self, o: &Self) -> Self {
        self / o
    }
    fn sqrt_exact(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = num_integer::Roots::sqrt(self.numer());
        let d = num_integer::Roots::sqrt(self.denom());
        (&n * &n == *self.numer() && &d * &d == *self.denom()).then(|| Q::new(n, d))
    }
    fn to_f64(&self) -> f64 {
        q_to_f64(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_binomial_half_integers() {
        assert_eq!(gen_binomial(&q(-1, 2), 2), q(3, 8));
        assert_eq!(gen_binomial(&q(-3, 2), 1), q(-3, 2));
        assert_eq!(binomial(6, 3), qi(20));
    }

    #[test]
    fn exact_sqrt() {
        assert_eq!(q(9, 4).sqrt_exact(), Some(q(3, 2)));
        assert_eq!(qi(2).sqrt_exact(), None);
    }

    #[test]
    fn huge_rational_to_float() {
        let big = factorial(300) / factorial(299);
        assert_eq!(q_to_f64(&big), 300.0);
        let ratio = factorial(200) / (factorial(200) * qi(4));
        assert_eq!(q_to_f64(&ratio), 0.25);
    }
}
