//! Scalar tower: exact rationals, order-2 jets, and a checked f64 backend.
//!
//! All matrix code is generic over [`Scalar`]. Three backends are provided:
//!
//! * [`Rational`] — arbitrary-precision rationals, always reduced, denominator
//!   positive. The workhorse for exact identity checking.
//! * [`Jet2`] — truncated Taylor expansions `c0 + c1*eps + c2*eps^2` with
//!   `eps^3 = 0`, over any base scalar. A jet carries a value together with its
//!   first derivative and half its second derivative along one flow direction,
//!   so time derivatives at t = 0 are computed exactly, not numerically.
//! * [`Float64`] — plain f64 with non-finite values rejected at construction
//!   and a singularity floor on inversion; used to cross-check the exact
//!   backends under rounding.
//!
//! Scalars are commutative; all noncommutativity in the library lives at the
//! matrix level.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

/// |x| below this is treated as zero when inverting or pivoting in f64.
pub const FLOAT_SINGULARITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RingError {
    /// Inversion of an exact zero (or of a jet whose value part is zero).
    DivisionByZero,
    /// A float operation produced or met NaN/inf, or a pivot under the floor.
    NonFinite,
}

impl fmt::Display for RingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingError::DivisionByZero => write!(f, "division by zero"),
            RingError::NonFinite => write!(f, "non-finite or sub-floor float value"),
        }
    }
}

impl std::error::Error for RingError {}

/// Commutative ring element with partial inversion.
///
/// `invertible` must agree with `invert` succeeding. `magnitude` is a rough
/// f64 size used for pivot choice in float elimination and for residual
/// reporting; it has no bearing on exact-backend semantics.
pub trait Scalar: Clone + PartialEq + fmt::Debug + fmt::Display {
    /// True for backends where `==` is an exact identity test.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn invert(&self) -> Result<Self, RingError>;
    fn is_zero(&self) -> bool;
    fn from_int(n: i64) -> Self;

    fn invertible(&self) -> bool {
        !self.is_zero()
    }

    /// Pivot preference: exact backends treat every invertible entry alike.
    fn pivot_weight(&self) -> f64 {
        if self.invertible() {
            1.0
        } else {
            0.0
        }
    }

    /// Approximate size for reports and float tolerances.
    fn magnitude(&self) -> f64;
}

// ---------------------------------------------------------------------------
// Rational
// ---------------------------------------------------------------------------

/// Arbitrary-precision rational, kept reduced with positive denominator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    /// `n/d`. Panics if `d == 0`; intended for literals.
    pub fn new(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn from_big(r: BigRational) -> Self {
        Rational(r)
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    /// Exact halving, used by the jet exponential.
    pub fn halve(&self) -> Self {
        Rational(&self.0 / BigRational::from_integer(BigInt::from(2)))
    }

    pub fn pow_u(&self, k: usize) -> Self {
        let mut acc = Rational::from_int(1);
        for _ in 0..k {
            acc = Scalar::mul(&acc, self);
        }
        acc
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Rational(BigRational::zero())
    }
    fn one() -> Self {
        Rational(BigRational::one())
    }
    fn add(&self, rhs: &Self) -> Self {
        Rational(&self.0 + &rhs.0)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Rational(&self.0 - &rhs.0)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Rational(&self.0 * &rhs.0)
    }
    fn neg(&self) -> Self {
        Rational(-&self.0)
    }
    fn invert(&self) -> Result<Self, RingError> {
        if self.0.is_zero() {
            Err(RingError::DivisionByZero)
        } else {
            Ok(Rational(self.0.recip()))
        }
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn from_int(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }
    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRationalError(pub String);

impl fmt::Display for ParseRationalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid rational literal: {}", self.0)
    }
}

impl std::error::Error for ParseRationalError {}

impl FromStr for Rational {
    type Err = ParseRationalError;

    /// Accepts `p` or `p/q` with optional leading sign, no whitespace.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseRationalError(s.to_string());
        let (num_s, den_s) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let numer = BigInt::from_str(num_s).map_err(|_| bad())?;
        let denom = BigInt::from_str(den_s).map_err(|_| bad())?;
        if denom.is_zero() {
            return Err(bad());
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }
}

impl Serialize for Rational {
    fn serialize<Se: Serializer>(&self, serializer: Se) -> Result<Se::Ok, Se::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

macro_rules! forward_binop {
    ($ty:ty, $trait:ident, $method:ident, $imp:ident) => {
        impl $trait for $ty {
            type Output = $ty;
            fn $method(self, rhs: $ty) -> $ty {
                Scalar::$imp(&self, &rhs)
            }
        }
        impl<'a> $trait<&'a $ty> for &'a $ty {
            type Output = $ty;
            fn $method(self, rhs: &'a $ty) -> $ty {
                Scalar::$imp(self, rhs)
            }
        }
    };
}

forward_binop!(Rational, Add, add, add);
forward_binop!(Rational, Sub, sub, sub);
forward_binop!(Rational, Mul, mul, mul);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Scalar::neg(&self)
    }
}

impl Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        Scalar::mul(&self, &rhs.invert().expect("division by zero"))
    }
}

// ---------------------------------------------------------------------------
// Float64
// ---------------------------------------------------------------------------

/// f64 wrapper; construction rejects NaN/inf, inversion applies the floor.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Float64(pub f64);

impl Float64 {
    pub fn new(v: f64) -> Result<Self, RingError> {
        if v.is_finite() {
            Ok(Float64(v))
        } else {
            Err(RingError::NonFinite)
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Scalar for Float64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Float64(0.0)
    }
    fn one() -> Self {
        Float64(1.0)
    }
    fn add(&self, rhs: &Self) -> Self {
        Float64(self.0 + rhs.0)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Float64(self.0 - rhs.0)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Float64(self.0 * rhs.0)
    }
    fn neg(&self) -> Self {
        Float64(-self.0)
    }
    fn invert(&self) -> Result<Self, RingError> {
        if !self.0.is_finite() || self.0.abs() <= FLOAT_SINGULARITY_FLOOR {
            Err(RingError::NonFinite)
        } else {
            Ok(Float64(1.0 / self.0))
        }
    }
    fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
    fn from_int(n: i64) -> Self {
        Float64(n as f64)
    }
    fn invertible(&self) -> bool {
        self.0.is_finite() && self.0.abs() > FLOAT_SINGULARITY_FLOOR
    }
    fn pivot_weight(&self) -> f64 {
        if self.invertible() {
            self.0.abs()
        } else {
            0.0
        }
    }
    fn magnitude(&self) -> f64 {
        self.0.abs()
    }
}

impl fmt::Display for Float64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

// ---------------------------------------------------------------------------
// Jet2
// ---------------------------------------------------------------------------

/// Order-2 jet `c0 + c1*eps + c2*eps^2` with `eps^3 = 0`.
///
/// `c0` is the value at t = 0, `c1` the first t-derivative, and `c2` half the
/// second t-derivative. One flow direction is active at a time; a second flow
/// is handled by rebuilding the jets with the other direction active.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2<S> {
    pub c0: S,
    pub c1: S,
    pub c2: S,
}

impl<S: Scalar> Jet2<S> {
    pub fn new(c0: S, c1: S, c2: S) -> Self {
        Jet2 { c0, c1, c2 }
    }

    /// Constant jet: no dependence on the flow parameter.
    pub fn constant(c0: S) -> Self {
        Jet2 {
            c0,
            c1: S::zero(),
            c2: S::zero(),
        }
    }

    /// First derivative.
    pub fn d1(&self) -> S {
        self.c1.clone()
    }

    /// Second derivative (`2 * c2`).
    pub fn d2(&self) -> S {
        self.c2.add(&self.c2)
    }
}

impl Jet2<Rational> {
    /// The factor `e^{t c}` truncated at order 2 and based at t = 0:
    /// `1 + c*eps + (c^2/2)*eps^2`.
    pub fn exp_node(c: &Rational) -> Self {
        Jet2 {
            c0: Rational::one(),
            c1: c.clone(),
            c2: Scalar::mul(c, c).halve(),
        }
    }
}

impl Jet2<Float64> {
    pub fn exp_node_f64(c: f64) -> Self {
        Jet2 {
            c0: Float64(1.0),
            c1: Float64(c),
            c2: Float64(c * c / 2.0),
        }
    }
}

impl<S: Scalar> Scalar for Jet2<S> {
    const EXACT: bool = S::EXACT;

    fn zero() -> Self {
        Jet2::constant(S::zero())
    }
    fn one() -> Self {
        Jet2::constant(S::one())
    }
    fn add(&self, rhs: &Self) -> Self {
        Jet2 {
            c0: self.c0.add(&rhs.c0),
            c1: self.c1.add(&rhs.c1),
            c2: self.c2.add(&rhs.c2),
        }
    }
    fn sub(&self, rhs: &Self) -> Self {
        Jet2 {
            c0: self.c0.sub(&rhs.c0),
            c1: self.c1.sub(&rhs.c1),
            c2: self.c2.sub(&rhs.c2),
        }
    }
    fn mul(&self, rhs: &Self) -> Self {
        Jet2 {
            c0: self.c0.mul(&rhs.c0),
            c1: self.c0.mul(&rhs.c1).add(&self.c1.mul(&rhs.c0)),
            c2: self
                .c0
                .mul(&rhs.c2)
                .add(&self.c1.mul(&rhs.c1))
                .add(&self.c2.mul(&rhs.c0)),
        }
    }
    fn neg(&self) -> Self {
        Jet2 {
            c0: self.c0.neg(),
            c1: self.c1.neg(),
            c2: self.c2.neg(),
        }
    }
    fn invert(&self) -> Result<Self, RingError> {
        // (c0 + c1 e + c2 e^2)^-1 = a0 + a1 e + a2 e^2 with
        // a0 = 1/c0, a1 = -c1 a0^2, a2 = (c1^2/c0 - c2) a0^2.
        let a0 = self.c0.invert()?;
        let a0sq = a0.mul(&a0);
        let a1 = self.c1.mul(&a0sq).neg();
        let a2 = self.c1.mul(&self.c1).mul(&a0).sub(&self.c2).mul(&a0sq);
        Ok(Jet2 { c0: a0, c1: a1, c2: a2 })
    }
    fn is_zero(&self) -> bool {
        self.c0.is_zero() && self.c1.is_zero() && self.c2.is_zero()
    }
    fn from_int(n: i64) -> Self {
        Jet2::constant(S::from_int(n))
    }
    fn invertible(&self) -> bool {
        // A jet is a unit exactly when its value part is.
        self.c0.invertible()
    }
    fn pivot_weight(&self) -> f64 {
        self.c0.pivot_weight()
    }
    fn magnitude(&self) -> f64 {
        self.c0
            .magnitude()
            .max(self.c1.magnitude())
            .max(self.c2.magnitude())
    }
}

impl<S: Scalar> fmt::Display for Jet2<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {} eps + {} eps^2", self.c0, self.c1, self.c2)
    }
}

impl<S: Scalar> Add for Jet2<S> {
    type Output = Jet2<S>;
    fn add(self, rhs: Jet2<S>) -> Jet2<S> {
        Scalar::add(&self, &rhs)
    }
}

impl<S: Scalar> Sub for Jet2<S> {
    type Output = Jet2<S>;
    fn sub(self, rhs: Jet2<S>) -> Jet2<S> {
        Scalar::sub(&self, &rhs)
    }
}

impl<S: Scalar> Mul for Jet2<S> {
    type Output = Jet2<S>;
    fn mul(self, rhs: Jet2<S>) -> Jet2<S> {
        Scalar::mul(&self, &rhs)
    }
}

impl<S: Scalar> Neg for Jet2<S> {
    type Output = Jet2<S>;
    fn neg(self) -> Jet2<S> {
        Scalar::neg(&self)
    }
}

// ---------------------------------------------------------------------------
// Base/measure scalar plumbing
// ---------------------------------------------------------------------------

/// Ordered ring a measure can store its raw node data in: exact rationals for
/// native measures, f64 for quadrature discretizations.
pub trait BaseScalar: Scalar + PartialOrd {
    fn from_rational(q: &Rational) -> Self;
    fn is_positive(&self) -> bool;
    fn to_f64(&self) -> f64;
}

impl BaseScalar for Rational {
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
    fn is_positive(&self) -> bool {
        Rational::is_positive(self)
    }
    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
}

impl BaseScalar for Float64 {
    fn from_rational(q: &Rational) -> Self {
        Float64(q.to_f64())
    }
    fn is_positive(&self) -> bool {
        self.0 > 0.0
    }
    fn to_f64(&self) -> f64 {
        self.0
    }
}

/// Backend scalar a moment computation can run in, given measure data over `B`.
///
/// `embed` is the constant embedding of node data; `exp_factor(c)` is the node
/// deformation factor `e^{t c}` based at t = 0 — the identity for non-jet
/// backends (whose arithmetic cannot see the flow), the order-2 exponential
/// jet otherwise.
pub trait MeasureScalar<B: BaseScalar>: Scalar {
    fn embed(b: &B) -> Self;
    fn exp_factor(c: &B) -> Self;
}

impl MeasureScalar<Rational> for Rational {
    fn embed(b: &Rational) -> Self {
        b.clone()
    }
    fn exp_factor(_c: &Rational) -> Self {
        Rational::one()
    }
}

impl MeasureScalar<Rational> for Jet2<Rational> {
    fn embed(b: &Rational) -> Self {
        Jet2::constant(b.clone())
    }
    fn exp_factor(c: &Rational) -> Self {
        Jet2::exp_node(c)
    }
}

impl MeasureScalar<Rational> for Float64 {
    fn embed(b: &Rational) -> Self {
        Float64(b.to_f64())
    }
    fn exp_factor(_c: &Rational) -> Self {
        Float64(1.0)
    }
}

impl MeasureScalar<Rational> for Jet2<Float64> {
    fn embed(b: &Rational) -> Self {
        Jet2::constant(Float64(b.to_f64()))
    }
    fn exp_factor(c: &Rational) -> Self {
        Jet2::exp_node_f64(c.to_f64())
    }
}

impl MeasureScalar<Float64> for Float64 {
    fn embed(b: &Float64) -> Self {
        *b
    }
    fn exp_factor(_c: &Float64) -> Self {
        Float64(1.0)
    }
}

impl MeasureScalar<Float64> for Jet2<Float64> {
    fn embed(b: &Float64) -> Self {
        Jet2::constant(*b)
    }
    fn exp_factor(c: &Float64) -> Self {
        Jet2::exp_node_f64(c.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn rational_parse_and_display() {
        assert_eq!("17/12".parse::<Rational>().unwrap(), q(17, 12));
        assert_eq!("-3/4".parse::<Rational>().unwrap(), q(-3, 4));
        assert_eq!("5".parse::<Rational>().unwrap(), q(5, 1));
        assert_eq!("6/4".parse::<Rational>().unwrap(), q(3, 2));
        assert_eq!("3/-4".parse::<Rational>().unwrap(), q(-3, 4));
        assert_eq!(q(17, 12).to_string(), "17/12");
        assert_eq!(q(5, 1).to_string(), "5");
        assert_eq!(q(-24, 17).to_string(), "-24/17");
        assert!("1/0".parse::<Rational>().is_err());
        assert!("1 / 2".parse::<Rational>().is_err());
        assert!("".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
    }

    #[test]
    fn rational_invert() {
        assert_eq!(q(2, 3).invert().unwrap(), q(3, 2));
        assert_eq!(q(-2, 3).invert().unwrap(), q(-3, 2));
        assert_eq!(
            Rational::zero().invert(),
            Err(RingError::DivisionByZero)
        );
    }

    #[test]
    fn rational_serde_roundtrip() {
        let v = q(-17, 12);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, "\"-17/12\"");
        let back: Rational = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn jet_multiplication_truncates_at_order_three() {
        // (1 + e)(1 + e) = 1 + 2e + e^2; (e + e^2)^2 = e^2 (the e^3, e^4 terms drop)
        let e = Jet2::new(q(0, 1), q(1, 1), q(0, 1));
        let one_plus_e = Scalar::add(&Jet2::one(), &e);
        let sq = Scalar::mul(&one_plus_e, &one_plus_e);
        assert_eq!(sq, Jet2::new(q(1, 1), q(2, 1), q(1, 1)));
        let f = Jet2::new(q(0, 1), q(1, 1), q(1, 1));
        assert_eq!(Scalar::mul(&f, &f), Jet2::new(q(0, 1), q(0, 1), q(1, 1)));
    }

    #[test]
    fn jet_invert_worked_value() {
        // (1 + 1e + 0e^2)^-1 = 1 - 1e + 1e^2
        let x = Jet2::new(q(1, 1), q(1, 1), q(0, 1));
        assert_eq!(
            x.invert().unwrap(),
            Jet2::new(q(1, 1), q(-1, 1), q(1, 1))
        );
        // zero value part is not a unit
        let y = Jet2::new(q(0, 1), q(1, 1), q(0, 1));
        assert_eq!(y.invert(), Err(RingError::DivisionByZero));
        assert!(!y.invertible());
    }

    #[test]
    fn exp_node_values() {
        assert_eq!(
            Jet2::exp_node(&q(3, 1)),
            Jet2::new(q(1, 1), q(3, 1), q(9, 2))
        );
        assert_eq!(Jet2::exp_node(&q(0, 1)), Jet2::one());
        // e^{tx} e^{-tx} = 1 exactly at this truncation order
        let a = Jet2::exp_node(&q(5, 7));
        let b = Jet2::exp_node(&q(-5, 7));
        assert_eq!(Scalar::mul(&a, &b), Jet2::one());
    }

    #[test]
    fn float_checked_construction() {
        assert!(Float64::new(1.5).is_ok());
        assert_eq!(Float64::new(f64::NAN), Err(RingError::NonFinite));
        assert_eq!(Float64::new(f64::INFINITY), Err(RingError::NonFinite));
        assert_eq!(Float64(1e-13).invert(), Err(RingError::NonFinite));
        assert_eq!(Float64(2.0).invert().unwrap(), Float64(0.5));
    }

    #[test]
    fn measure_scalar_exp_factor() {
        let one: Rational = MeasureScalar::<Rational>::exp_factor(&q(7, 1));
        assert_eq!(one, Rational::one());
        let jet: Jet2<Rational> = MeasureScalar::<Rational>::exp_factor(&q(2, 1));
        assert_eq!(jet, Jet2::new(q(1, 1), q(2, 1), q(2, 1)));
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (-40i64..=40, 1i64..=12).prop_map(|(n, d)| Rational::new(n, d))
    }

    fn arb_jet() -> impl Strategy<Value = Jet2<Rational>> {
        (arb_rational(), arb_rational(), arb_rational())
            .prop_map(|(a, b, c)| Jet2::new(a, b, c))
    }

    proptest! {
        #[test]
        fn rational_field_axioms(a in arb_rational(), b in arb_rational(), c in arb_rational()) {
            prop_assert_eq!(Scalar::add(&a, &b), Scalar::add(&b, &a));
            prop_assert_eq!(
                Scalar::mul(&a, &Scalar::add(&b, &c)),
                Scalar::add(&Scalar::mul(&a, &b), &Scalar::mul(&a, &c))
            );
            prop_assert_eq!(
                Scalar::mul(&Scalar::mul(&a, &b), &c),
                Scalar::mul(&a, &Scalar::mul(&b, &c))
            );
            if !a.is_zero() {
                prop_assert_eq!(Scalar::mul(&a, &a.invert().unwrap()), Rational::one());
            }
        }

        #[test]
        fn jet_ring_axioms(a in arb_jet(), b in arb_jet(), c in arb_jet()) {
            prop_assert_eq!(
                Scalar::mul(&Scalar::mul(&a, &b), &c),
                Scalar::mul(&a, &Scalar::mul(&b, &c))
            );
            prop_assert_eq!(
                Scalar::mul(&a, &Scalar::add(&b, &c)),
                Scalar::add(&Scalar::mul(&a, &b), &Scalar::mul(&a, &c))
            );
            prop_assert_eq!(Scalar::mul(&a, &b), Scalar::mul(&b, &a));
            if a.invertible() {
                prop_assert_eq!(Scalar::mul(&a, &a.invert().unwrap()), Jet2::one());
            }
        }

        #[test]
        fn jet_product_rule_matches_symbolic_derivative(a in arb_jet(), b in arb_jet()) {
            // d(ab) = a'b + ab' and d2(ab) = a''b + 2a'b' + ab''
            let p = Scalar::mul(&a, &b);
            prop_assert_eq!(
                p.d1(),
                Scalar::add(&Scalar::mul(&a.d1(), &b.c0), &Scalar::mul(&a.c0, &b.d1()))
            );
            let lhs = p.d2();
            let rhs = Scalar::add(
                &Scalar::add(&Scalar::mul(&a.d2(), &b.c0), &Scalar::mul(&a.c0, &b.d2())),
                &{
                    let cross = Scalar::mul(&a.d1(), &b.d1());
                    Scalar::add(&cross, &cross)
                },
            );
            prop_assert_eq!(lhs, rhs);
        }
    }
}
