//! Field-generic scalars.
//!
//! Three realizations share one trait: binary64 reals, binary64 complex, and
//! the exact field Q(√2) built on arbitrary-precision rationals. Exact mode
//! exists so that the algebraic identities of the construction can be checked
//! with zero residual; Q(√2) (rather than bare Q) is required because focal
//! frames carry 1/√2 normalization factors.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

use crate::rng::SplitMix64;

/// A field element usable throughout the linear algebra and geometry layers.
///
/// `conj` is the identity except for complex scalars. `abs` returns a binary64
/// magnitude estimate used for pivoting and residual reporting; exact scalars
/// still perform all arithmetic exactly.
pub trait Scalar: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// True when arithmetic carries no rounding and zero tests are exact.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Inject a binary64 value. Panics for exact scalars, which must never
    /// receive rounded data; float-only algorithms guard on `Self::EXACT`.
    fn from_f64(x: f64) -> Self;

    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    /// Field division; caller guarantees `rhs` is nonzero.
    fn div(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn conj(&self) -> Self;

    /// Magnitude as binary64 (modulus for complex, |approximation| for exact).
    fn abs(&self) -> f64;
    /// Exact zero test (bit-level for floats).
    fn is_zero(&self) -> bool;
    /// Square root when representable in the field. For Q(√2) this succeeds
    /// exactly for elements of the form q² or 2q² with q rational (the only
    /// cases the construction produces); floats take the principal root.
    fn sqrt(&self) -> Option<Self>;
    /// Binary64 approximation (real part for complex scalars).
    fn to_f64(&self) -> f64;

    /// One sample of a standard normal-like distribution in this field.
    /// Exact mode draws a small random rational so the result stays exact.
    fn sample(rng: &mut SplitMix64) -> Self;

    /// A uniformly random-ish unit vector with exactly representable entries.
    /// Float modes normalize Gaussian draws; exact mode maps small random
    /// rationals through the stereographic parametrization of the sphere,
    /// which produces exactly-unit rational vectors.
    fn sample_unit(rng: &mut SplitMix64, n: usize) -> Vec<Self> {
        loop {
            let v: Vec<Self> = (0..n).map(|_| Self::sample(rng)).collect();
            let norm2 = v
                .iter()
                .fold(Self::zero(), |acc, x| acc.add(&x.mul(&x.conj())));
            if norm2.abs() < 1e-6 {
                continue;
            }
            if let Some(norm) = norm2.sqrt() {
                return v.iter().map(|x| x.div(&norm)).collect();
            }
            // exact mode: stereographic projection of t in Q^{n-1}:
            // u = (1-|t|^2, 2t) / (1+|t|^2) is exactly unit.
            let t: Vec<Self> = (0..n - 1).map(|_| Self::sample(rng)).collect();
            let t2 = t
                .iter()
                .fold(Self::zero(), |acc, x| acc.add(&x.mul(x)));
            let denom = Self::one().add(&t2);
            let mut u = Vec::with_capacity(n);
            u.push(Self::one().sub(&t2).div(&denom));
            let two = Self::from_i64(2);
            for ti in &t {
                u.push(two.mul(ti).div(&denom));
            }
            return u;
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn conj(&self) -> Self {
        *self
    }
    fn abs(&self) -> f64 {
        f64::abs(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn sqrt(&self) -> Option<Self> {
        if *self < 0.0 {
            None
        } else {
            Some(f64::sqrt(*self))
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sample(rng: &mut SplitMix64) -> Self {
        rng.normal()
    }
}

/// Binary64 complex scalars (float mode only; the construction never needs
/// exact complex arithmetic).
pub type Cx = num_complex::Complex64;

impl Scalar for Cx {
    const EXACT: bool = false;

    fn zero() -> Self {
        Cx::new(0.0, 0.0)
    }
    fn one() -> Self {
        Cx::new(1.0, 0.0)
    }
    fn from_i64(n: i64) -> Self {
        Cx::new(n as f64, 0.0)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Cx::new(num as f64 / den as f64, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Cx::new(x, 0.0)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn conj(&self) -> Self {
        num_complex::Complex::conj(self)
    }
    fn abs(&self) -> f64 {
        self.norm()
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn sqrt(&self) -> Option<Self> {
        Some(num_complex::Complex::sqrt(*self))
    }
    fn to_f64(&self) -> f64 {
        self.re
    }
    fn sample(rng: &mut SplitMix64) -> Self {
        Cx::new(rng.normal(), rng.normal())
    }
}

/// An element a + b·√2 of the real quadratic field Q(√2), with a, b
/// arbitrary-precision rationals.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Exact {
    pub a: BigRational,
    pub b: BigRational,
}

impl Exact {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        Exact { a, b }
    }

    pub fn from_rational(a: BigRational) -> Self {
        Exact {
            a,
            b: BigRational::zero(),
        }
    }

    /// The element √2.
    pub fn sqrt2() -> Self {
        Exact {
            a: BigRational::zero(),
            b: BigRational::one(),
        }
    }

    /// 1/√2 = √2/2.
    pub fn inv_sqrt2() -> Self {
        Exact {
            a: BigRational::zero(),
            b: BigRational::new(BigInt::from(1), BigInt::from(2)),
        }
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
        if q.is_negative() {
            return None;
        }
        let n = q.numer().sqrt();
        let d = q.denom().sqrt();
        if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
            Some(BigRational::new(n, d))
        } else {
            None
        }
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else if self.a.is_zero() {
            write!(f, "{}*sqrt2", self.b)
        } else {
            write!(f, "{}+{}*sqrt2", self.a, self.b)
        }
    }
}

impl Scalar for Exact {
    const EXACT: bool = true;

    fn zero() -> Self {
        Exact::from_rational(BigRational::zero())
    }
    fn one() -> Self {
        Exact::from_rational(BigRational::one())
    }
    fn from_i64(n: i64) -> Self {
        Exact::from_rational(BigRational::from(BigInt::from(n)))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Exact::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }
    fn from_f64(_x: f64) -> Self {
        panic!("refusing to inject a rounded binary64 value into Q(sqrt2)")
    }
    fn add(&self, rhs: &Self) -> Self {
        Exact::new(&self.a + &rhs.a, &self.b + &rhs.b)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Exact::new(&self.a - &rhs.a, &self.b - &rhs.b)
    }
    fn mul(&self, rhs: &Self) -> Self {
        // (a + b√2)(c + d√2) = (ac + 2bd) + (ad + bc)√2
        let two = BigRational::from(BigInt::from(2));
        Exact::new(
            &self.a * &rhs.a + two * &self.b * &rhs.b,
            &self.a * &rhs.b + &self.b * &rhs.a,
        )
    }
    fn div(&self, rhs: &Self) -> Self {
        // multiply by the conjugate c - d√2 and divide by the norm c² - 2d²
        let two = BigRational::from(BigInt::from(2));
        let norm = &rhs.a * &rhs.a - &two * &rhs.b * &rhs.b;
        assert!(!norm.is_zero(), "division by zero in Q(sqrt2)");
        let conj = Exact::new(rhs.a.clone(), -rhs.b.clone());
        let prod = self.mul(&conj);
        Exact::new(prod.a / &norm, prod.b / &norm)
    }
    fn neg(&self) -> Self {
        Exact::new(-self.a.clone(), -self.b.clone())
    }
    fn conj(&self) -> Self {
        self.clone()
    }
    fn abs(&self) -> f64 {
        Scalar::to_f64(self).abs()
    }
    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
    fn sqrt(&self) -> Option<Self> {
        if self.is_zero() {
            return Some(Self::zero());
        }
        if self.b.is_zero() {
            // √q for perfect-square q, or √(2r²) = r√2 when q/2 is a square
            if let Some(r) = Self::rational_sqrt(&self.a) {
                return Some(Exact::from_rational(r));
            }
            let half = &self.a / BigRational::from(BigInt::from(2));
            if let Some(r) = Self::rational_sqrt(&half) {
                if !r.is_negative() {
                    return Some(Exact::new(BigRational::zero(), r));
                }
            }
            return None;
        }
        // general a + b√2: solve (c + d√2)² = a + b√2, i.e. c² + 2d² = a, 2cd = b.
        // c² is a root of 2t² - 2at + b² = 0: t = (a ± √(a² - 2b²))/2.
        let two = BigRational::from(BigInt::from(2));
        let disc = &self.a * &self.a - &two * &self.b * &self.b;
        let sq = Self::rational_sqrt(&disc)?;
        for sign in [BigRational::one(), -BigRational::one()] {
            let c2 = (&self.a + &sign * &sq) / &two;
            if let Some(c) = Self::rational_sqrt(&c2) {
                if !c.is_zero() {
                    let d = &self.b / (&two * &c);
                    let cand = Exact::new(c, d);
                    if cand.mul(&cand) == *self && Scalar::to_f64(&cand) >= 0.0 {
                        return Some(cand);
                    }
                    let neg = cand.neg();
                    if neg.mul(&neg) == *self && Scalar::to_f64(&neg) >= 0.0 {
                        return Some(neg);
                    }
                }
            }
        }
        None
    }
    fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN) + std::f64::consts::SQRT_2 * self.b.to_f64().unwrap_or(f64::NAN)
    }
    fn sample(rng: &mut SplitMix64) -> Self {
        // small random rational in [-2, 2] with denominator up to 8
        let num = (rng.next_u64() % 33) as i64 - 16;
        let den = (rng.next_u64() % 8) as i64 + 1;
        Exact::from_ratio(num, den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_field_axioms_on_random_elements() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..200 {
            let x = Exact::sample(&mut rng);
            let y = Exact::sample(&mut rng).add(&Exact::sqrt2());
            let z = Exact::sample(&mut rng).mul(&Exact::inv_sqrt2());
            // distributivity and associativity, exactly
            assert_eq!(x.mul(&y.add(&z)), x.mul(&y).add(&x.mul(&z)));
            assert_eq!(x.mul(&y).mul(&z), x.mul(&y.mul(&z)));
            if !y.is_zero() {
                assert_eq!(x.mul(&y).div(&y), x);
            }
        }
    }

    #[test]
    fn sqrt2_squares_to_two() {
        let s = Exact::sqrt2();
        assert_eq!(s.mul(&s), Exact::from_i64(2));
        assert_eq!(Exact::inv_sqrt2().mul(&Exact::sqrt2()), Exact::one());
    }

    #[test]
    fn exact_sqrt_of_structured_elements() {
        // 1/2 = (1/√2)², 9/4 = (3/2)², 8 = (2√2)²
        let half = Exact::from_ratio(1, 2);
        assert_eq!(half.sqrt().unwrap(), Exact::inv_sqrt2());
        assert_eq!(
            Exact::from_ratio(9, 4).sqrt().unwrap(),
            Exact::from_ratio(3, 2)
        );
        let eight = Exact::from_i64(8);
        let r = eight.sqrt().unwrap();
        assert_eq!(r.mul(&r), eight);
        // 3 is not representable
        assert!(Exact::from_i64(3).sqrt().is_none());
    }

    #[test]
    fn exact_unit_vectors_are_exactly_unit() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..10 {
            let v = Exact::sample_unit(&mut rng, 9);
            let n2 = v
                .iter()
                .fold(Exact::zero(), |acc, x| acc.add(&x.mul(x)));
            assert_eq!(n2, Exact::one());
        }
    }

    #[test]
    fn complex_sample_unit_is_normalized() {
        let mut rng = SplitMix64::new(5);
        let v = Cx::sample_unit(&mut rng, 4);
        let n2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        assert!((n2 - 1.0).abs() < 1e-12);
    }
}
