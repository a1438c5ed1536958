//! Exact arithmetic and p-adic valuations.
//!
//! Three concrete coefficient rings are supported, all behind the
//! [`CoefficientRing`] trait:
//!
//! * [`LocalizedRationals`]: `Z_(p)`, computed inside `Q`.
//! * [`EisensteinRing`]: `Z_(p)[α]/(α^e - p)`, totally ramified of degree `e`,
//!   computed inside its fraction field.
//! * [`GaloisRing`]: `(Z/p^S)[X]/(f)` with `f mod p` irreducible of degree `k`.
//!
//! Valuations are exact rationals normalized so that `v_p(p) = 1`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::fpoly::FpPoly;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid ring parameters: {0}")]
    InvalidParameters(String),
    #[error("{0} is not invertible in this ring")]
    NotInvertible(String),
    #[error("modulus {0} is not irreducible mod p")]
    ReducibleModulus(String),
    #[error("no default modulus for p = {p}, k = {k}; supply one explicitly")]
    NoDefaultModulus { p: u64, k: u32 },
    #[error("invalid ideal: {0}")]
    InvalidIdeal(String),
    #[error("cannot parse rational {0:?}")]
    ParseRational(String),
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn ensure_prime(p: u64) -> Result<(), ArithError> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(ArithError::NotPrime(p))
    }
}

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_from_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Formats a rational as `"num/den"`, or just `"num"` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational, ArithError> {
    let err = || ArithError::ParseRational(s.to_string());
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(
            BigInt::from_str(s).map_err(|_| err())?,
        )),
    }
}

/// `#[serde(with = "rational_string")]` support: rationals travel as strings.
pub mod rational_string {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = RationalInput::deserialize(d)?;
        raw.into_rational().map_err(serde::de::Error::custom)
    }

    /// Accepts either a JSON integer or a `"num/den"` string.
    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum RationalInput {
        Int(i64),
        Str(String),
    }

    impl RationalInput {
        pub(crate) fn into_rational(self) -> Result<Rational, ArithError> {
            match self {
                RationalInput::Int(n) => Ok(rational_from_int(n)),
                RationalInput::Str(s) => parse_rational(&s),
            }
        }
    }
}

/// Same as [`rational_string`], for vectors.
pub mod rational_vec_string {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format_rational(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<rational_string::RationalInput>::deserialize(d)?;
        raw.into_iter()
            .map(|r| r.into_rational().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// `v_p(n)` for a nonzero integer; `None` for zero.
pub fn vp_integer(n: &BigInt, p: u64) -> Option<u64> {
    if n.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return Some(v);
        }
        n = q;
        v += 1;
    }
}

/// `v_p(n)` for a positive machine integer.
pub fn vp_u64(mut n: u64, p: u64) -> u32 {
    assert!(n > 0, "v_p(0) is infinite");
    let mut v = 0;
    while n.is_multiple_of(p) {
        n /= p;
        v += 1;
    }
    v
}

/// An exact p-adic valuation: a rational number or `+∞` (for zero).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(Rational),
    Infinite,
}

impl Valuation {
    pub fn integer(n: i64) -> Self {
        Valuation::Finite(rational_from_int(n))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Valuation::Infinite)
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Valuation::Finite(r) => Some(r),
            Valuation::Infinite => None,
        }
    }

    /// True iff this valuation is at least `bound`.
    pub fn at_least(&self, bound: &Valuation) -> bool {
        self >= bound
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Infinite, Valuation::Infinite) => Ordering::Equal,
            (Valuation::Infinite, _) => Ordering::Greater,
            (_, Valuation::Infinite) => Ordering::Less,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for Valuation {
    type Output = Valuation;
    fn add(self, rhs: Self) -> Valuation {
        match (self, rhs) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinite,
        }
    }
}

impl From<Option<u64>> for Valuation {
    fn from(v: Option<u64>) -> Self {
        match v {
            Some(v) => Valuation::Finite(Rational::from_integer(BigInt::from(v))),
            None => Valuation::Infinite,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(r) => write!(f, "{}", format_rational(r)),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Valuation {
    type Err = ArithError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "+inf" | "∞" => Ok(Valuation::Infinite),
            other => parse_rational(other).map(Valuation::Finite),
        }
    }
}

impl Serialize for Valuation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Valuation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn vp_rational(r: &Rational, p: u64) -> Valuation {
    if r.is_zero() {
        return Valuation::Infinite;
    }
    let num = vp_integer(r.numer(), p).unwrap_or(0) as i64;
    let den = vp_integer(r.denom(), p).unwrap_or(0) as i64;
    Valuation::integer(num - den)
}

/// A commutative coefficient ring with an exact `p`-adic valuation.
///
/// Rings that are torsion-free `Z_(p)`-algebras compute in `A[1/p]`, so
/// [`from_rational`](CoefficientRing::from_rational) always succeeds there;
/// [`contains`](CoefficientRing::contains) tells whether a value actually
/// lies in `A`.
pub trait CoefficientRing: Clone + fmt::Debug + PartialEq + Send + Sync {
    type Element: Clone + fmt::Debug + PartialEq + Send + Sync;

    fn prime(&self) -> u64;
    fn zero(&self) -> Self::Element;
    fn one(&self) -> Self::Element;
    fn from_integer(&self, n: &BigInt) -> Self::Element;
    fn from_rational(&self, r: &Rational) -> Result<Self::Element, ArithError>;
    fn add(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn sub(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn mul(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn neg(&self, a: &Self::Element) -> Self::Element;
    fn is_zero(&self, a: &Self::Element) -> bool;
    fn valuation(&self, a: &Self::Element) -> Valuation;
    /// Whether `a` lies in the ring proper (not just its localization at p).
    fn contains(&self, a: &Self::Element) -> bool;
    /// The ideal family this ring supports, if any.
    fn ideal_ring(&self) -> Option<IdealRing>;
    fn render(&self, a: &Self::Element) -> String;

    fn from_i64(&self, n: i64) -> Self::Element {
        self.from_integer(&BigInt::from(n))
    }

    fn pow(&self, a: &Self::Element, mut n: u64) -> Self::Element {
        let mut result = self.one();
        let mut base = a.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = self.mul(&result, &base);
            }
            n >>= 1;
            if n > 0 {
                base = self.mul(&base, &base);
            }
        }
        result
    }
}

/// `Z_(p)`: rationals whose denominators are prime to `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalizedRationals {
    p: u64,
}

impl LocalizedRationals {
    pub fn new(p: u64) -> Result<Self, ArithError> {
        ensure_prime(p)?;
        Ok(LocalizedRationals { p })
    }
}

impl CoefficientRing for LocalizedRationals {
    type Element = Rational;

    fn prime(&self) -> u64 {
        self.p
    }
    fn zero(&self) -> Rational {
        Rational::zero()
    }
    fn one(&self) -> Rational {
        Rational::one()
    }
    fn from_integer(&self, n: &BigInt) -> Rational {
        Rational::from_integer(n.clone())
    }
    fn from_rational(&self, r: &Rational) -> Result<Rational, ArithError> {
        Ok(r.clone())
    }
    fn add(&self, a: &Rational, b: &Rational) -> Rational {
        a + b
    }
    fn sub(&self, a: &Rational, b: &Rational) -> Rational {
        a - b
    }
    fn mul(&self, a: &Rational, b: &Rational) -> Rational {
        a * b
    }
    fn neg(&self, a: &Rational) -> Rational {
        -a
    }
    fn is_zero(&self, a: &Rational) -> bool {
        a.is_zero()
    }
    fn valuation(&self, a: &Rational) -> Valuation {
        vp_rational(a, self.p)
    }
    fn contains(&self, a: &Rational) -> bool {
        a.denom() % BigInt::from(self.p) != BigInt::zero()
    }
    fn ideal_ring(&self) -> Option<IdealRing> {
        Some(IdealRing::LocalizedRationals { p: self.p })
    }
    fn render(&self, a: &Rational) -> String {
        format_rational(a)
    }
}

/// An element `Σ c_i α^i` of `Q(α)`, `α^e = p`.
///
/// Elements of the ring `Z_(p)[α]` are those whose coefficients all have
/// denominators prime to `p`; see [`EisensteinElement::is_integral`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EisensteinElement {
    pub p: u64,
    pub e: u32,
    #[serde(with = "rational_vec_string")]
    pub coeffs: Vec<Rational>,
}

impl EisensteinElement {
    pub fn new(p: u64, e: u32, mut coeffs: Vec<Rational>) -> Result<Self, ArithError> {
        if e == 0 {
            return Err(ArithError::InvalidParameters("e must be at least 1".into()));
        }
        if coeffs.len() > e as usize {
            return Err(ArithError::InvalidParameters(format!(
                "{} coefficients given for ramification degree {e}",
                coeffs.len()
            )));
        }
        coeffs.resize(e as usize, Rational::zero());
        Ok(EisensteinElement { p, e, coeffs })
    }

    pub fn zero(p: u64, e: u32) -> Self {
        EisensteinElement {
            p,
            e,
            coeffs: vec![Rational::zero(); e as usize],
        }
    }

    pub fn from_rational(p: u64, e: u32, r: Rational) -> Self {
        let mut x = Self::zero(p, e);
        x.coeffs[0] = r;
        x
    }

    /// The uniformizer `α`.
    pub fn uniformizer(p: u64, e: u32) -> Self {
        let mut x = Self::zero(p, e);
        if e == 1 {
            x.coeffs[0] = Rational::from_integer(BigInt::from(p));
        } else {
            x.coeffs[1] = Rational::one();
        }
        x
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        let p = BigInt::from(self.p);
        self.coeffs.iter().all(|c| !(c.denom() % &p).is_zero())
    }

    /// `min_i (v_p(c_i) + i/e)`.
    pub fn valuation(&self) -> Valuation {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                vp_rational(c, self.p)
                    + Valuation::Finite(Rational::new(BigInt::from(i), BigInt::from(self.e)))
            })
            .min()
            .unwrap_or(Valuation::Infinite)
    }

    fn check_compatible(&self, other: &Self) {
        assert!(
            self.p == other.p && self.e == other.e,
            "Eisenstein elements from different rings"
        );
    }
}

impl Add for &EisensteinElement {
    type Output = EisensteinElement;
    fn add(self, rhs: &EisensteinElement) -> EisensteinElement {
        self.check_compatible(rhs);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        EisensteinElement { p: self.p, e: self.e, coeffs }
    }
}

impl Sub for &EisensteinElement {
    type Output = EisensteinElement;
    fn sub(self, rhs: &EisensteinElement) -> EisensteinElement {
        self.check_compatible(rhs);
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        EisensteinElement { p: self.p, e: self.e, coeffs }
    }
}

impl Neg for &EisensteinElement {
    type Output = EisensteinElement;
    fn neg(self) -> EisensteinElement {
        EisensteinElement {
            p: self.p,
            e: self.e,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &EisensteinElement {
    type Output = EisensteinElement;
    fn mul(self, rhs: &EisensteinElement) -> EisensteinElement {
        self.check_compatible(rhs);
        let e = self.e as usize;
        let p = Rational::from_integer(BigInt::from(self.p));
        let mut out = vec![Rational::zero(); e];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let prod = a * b;
                // α^(i+j) = p α^(i+j-e) once the exponent reaches e
                if i + j >= e {
                    out[i + j - e] += prod * &p;
                } else {
                    out[i + j] += prod;
                }
            }
        }
        EisensteinElement { p: self.p, e: self.e, coeffs: out }
    }
}

impl fmt::Display for EisensteinElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(format_rational).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// `Z_(p)[α]/(α^e - p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EisensteinRing {
    p: u64,
    e: u32,
}

impl EisensteinRing {
    pub fn new(p: u64, e: u32) -> Result<Self, ArithError> {
        ensure_prime(p)?;
        if e == 0 {
            return Err(ArithError::InvalidParameters("e must be at least 1".into()));
        }
        Ok(EisensteinRing { p, e })
    }

    pub fn ramification(&self) -> u32 {
        self.e
    }

    pub fn uniformizer(&self) -> EisensteinElement {
        EisensteinElement::uniformizer(self.p, self.e)
    }

    pub fn element(&self, coeffs: Vec<Rational>) -> Result<EisensteinElement, ArithError> {
        EisensteinElement::new(self.p, self.e, coeffs)
    }
}

impl CoefficientRing for EisensteinRing {
    type Element = EisensteinElement;

    fn prime(&self) -> u64 {
        self.p
    }
    fn zero(&self) -> EisensteinElement {
        EisensteinElement::zero(self.p, self.e)
    }
    fn one(&self) -> EisensteinElement {
        EisensteinElement::from_rational(self.p, self.e, Rational::one())
    }
    fn from_integer(&self, n: &BigInt) -> EisensteinElement {
        EisensteinElement::from_rational(self.p, self.e, Rational::from_integer(n.clone()))
    }
    fn from_rational(&self, r: &Rational) -> Result<EisensteinElement, ArithError> {
        Ok(EisensteinElement::from_rational(self.p, self.e, r.clone()))
    }
    fn add(&self, a: &EisensteinElement, b: &EisensteinElement) -> EisensteinElement {
        a + b
    }
    fn sub(&self, a: &EisensteinElement, b: &EisensteinElement) -> EisensteinElement {
        a - b
    }
    fn mul(&self, a: &EisensteinElement, b: &EisensteinElement) -> EisensteinElement {
        a * b
    }
    fn neg(&self, a: &EisensteinElement) -> EisensteinElement {
        -a
    }
    fn is_zero(&self, a: &EisensteinElement) -> bool {
        a.is_zero()
    }
    fn valuation(&self, a: &EisensteinElement) -> Valuation {
        a.valuation()
    }
    fn contains(&self, a: &EisensteinElement) -> bool {
        a.is_integral()
    }
    fn ideal_ring(&self) -> Option<IdealRing> {
        Some(IdealRing::Eisenstein { p: self.p, e: self.e })
    }
    fn render(&self, a: &EisensteinElement) -> String {
        a.to_string()
    }
}

/// Default monic lifts `X^k + c_{k-1} X^{k-1} + ... + c_0`, given as
/// `[c_0, ..., c_{k-1}]`, irreducible mod `p`.
pub fn default_modulus(p: u64, k: u32) -> Option<Vec<u64>> {
    let table: &[u64] = match (p, k) {
        (2 | 3 | 5 | 7, 1) => &[0],
        (2, 2) => &[1, 1],
        (3, 2) => &[1, 0],
        (5, 2) => &[2, 0],
        (7, 2) => &[1, 0],
        (2, 3) => &[1, 1, 0],
        (3, 3) => &[1, 2, 0],
        (5, 3) | (7, 3) => &[1, 1, 0],
        _ => return None,
    };
    Some(table.to_vec())
}

#[derive(Debug, PartialEq, Eq, Hash)]
struct GaloisRingSpec {
    p: u64,
    precision: u32,
    degree: u32,
    /// `p^precision`
    modulus_int: u64,
    /// low coefficients of the monic modulus polynomial, reduced mod `p^precision`
    modulus_poly: Vec<u64>,
}

/// The Galois ring `GR(p^S, k) = (Z/p^S)[X]/(f)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GaloisRing {
    spec: Arc<GaloisRingSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GaloisRingElement {
    ring: GaloisRing,
    coeffs: Vec<u64>,
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

impl GaloisRing {
    /// `modulus` lists the low coefficients `[c_0, .., c_{k-1}]` of a monic
    /// degree-`k` polynomial; `None` picks the built-in default.
    pub fn new(p: u64, precision: u32, degree: u32, modulus: Option<Vec<u64>>) -> Result<Self, ArithError> {
        ensure_prime(p)?;
        if precision == 0 || degree == 0 {
            return Err(ArithError::InvalidParameters(
                "precision and degree must be at least 1".into(),
            ));
        }
        let modulus_int = (p as u128)
            .checked_pow(precision)
            .filter(|&m| m < (1u128 << 62))
            .ok_or_else(|| ArithError::InvalidParameters(format!("{p}^{precision} is too large")))?
            as u64;
        let poly = match modulus {
            Some(m) => m,
            None => default_modulus(p, degree).ok_or(ArithError::NoDefaultModulus { p, k: degree })?,
        };
        if poly.len() != degree as usize {
            return Err(ArithError::InvalidParameters(format!(
                "modulus needs {degree} low coefficients, got {}",
                poly.len()
            )));
        }
        let mut reduction: Vec<u64> = poly.iter().map(|c| c % p).collect();
        reduction.push(1);
        let reduction = FpPoly::from_coeffs(p, reduction);
        if !reduction.is_irreducible() {
            return Err(ArithError::ReducibleModulus(reduction.to_string()));
        }
        Ok(GaloisRing {
            spec: Arc::new(GaloisRingSpec {
                p,
                precision,
                degree,
                modulus_int,
                modulus_poly: poly.into_iter().map(|c| c % modulus_int).collect(),
            }),
        })
    }

    pub fn precision(&self) -> u32 {
        self.spec.precision
    }

    pub fn degree(&self) -> u32 {
        self.spec.degree
    }

    /// `p^S`.
    pub fn characteristic(&self) -> u64 {
        self.spec.modulus_int
    }

    /// Size `q = p^k` of the residue field.
    pub fn residue_field_size(&self) -> u64 {
        self.spec.p.pow(self.spec.degree)
    }

    pub fn modulus(&self) -> &[u64] {
        &self.spec.modulus_poly
    }

    /// The same modulus taken at a different precision.
    pub fn with_precision(&self, precision: u32) -> Result<GaloisRing, ArithError> {
        GaloisRing::new(
            self.spec.p,
            precision,
            self.spec.degree,
            Some(self.spec.modulus_poly.clone()),
        )
    }

    /// Element from coefficients `[a_0, .., a_{k-1}]` (reduced mod `p^S`).
    pub fn element(&self, coeffs: &[i64]) -> GaloisRingElement {
        assert!(coeffs.len() <= self.spec.degree as usize, "too many coefficients");
        let m = self.spec.modulus_int as i128;
        let mut c: Vec<u64> = coeffs
            .iter()
            .map(|&a| (a as i128).rem_euclid(m) as u64)
            .collect();
        c.resize(self.spec.degree as usize, 0);
        GaloisRingElement { ring: self.clone(), coeffs: c }
    }

    pub fn element_from_u64(&self, coeffs: &[u64]) -> GaloisRingElement {
        assert!(coeffs.len() <= self.spec.degree as usize, "too many coefficients");
        let mut c: Vec<u64> = coeffs.iter().map(|&a| a % self.spec.modulus_int).collect();
        c.resize(self.spec.degree as usize, 0);
        GaloisRingElement { ring: self.clone(), coeffs: c }
    }

    /// All residues `F_q`, as coefficient vectors mod `p`, in lexicographic
    /// order of `(a_{k-1}, .., a_0)`.
    pub fn residue_field_elements(&self) -> Vec<Vec<u64>> {
        let p = self.spec.p;
        let k = self.spec.degree as usize;
        let q = self.residue_field_size();
        (0..q)
            .map(|mut idx| {
                let mut v = vec![0u64; k];
                for slot in v.iter_mut() {
                    *slot = idx % p;
                    idx /= p;
                }
                v
            })
            .collect()
    }

    fn scalar(&self, c: u64) -> GaloisRingElement {
        self.element_from_u64(&[c % self.spec.modulus_int])
    }

    fn inverse_mod_char(&self, n: &BigInt) -> Option<u64> {
        let m = BigInt::from(self.spec.modulus_int);
        let n = n.mod_floor(&m);
        let g = n.extended_gcd(&m);
        if !g.gcd.is_one() {
            return None;
        }
        g.x.mod_floor(&m).to_u64()
    }
}

impl GaloisRingElement {
    pub fn ring(&self) -> &GaloisRing {
        &self.ring
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Image in the residue field `F_q`, as coefficients mod `p`.
    pub fn residue(&self) -> Vec<u64> {
        self.coeffs.iter().map(|c| c % self.ring.spec.p).collect()
    }

    pub fn is_unit(&self) -> bool {
        self.residue().iter().any(|&c| c != 0)
    }

    /// `min_i v_p(a_i)`; `+∞` only for the zero element, so values are below `S`.
    pub fn valuation(&self) -> Valuation {
        self.coeffs
            .iter()
            .filter(|&&c| c != 0)
            .map(|&c| vp_u64(c, self.ring.spec.p) as u64)
            .min()
            .into()
    }

    fn with_coeffs(&self, coeffs: Vec<u64>) -> GaloisRingElement {
        GaloisRingElement { ring: self.ring.clone(), coeffs }
    }

    pub fn pow(&self, mut n: u64) -> GaloisRingElement {
        let mut result = self.ring.scalar(1);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = &result * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Multiplication by an integer scalar.
    pub fn scale(&self, c: u64) -> GaloisRingElement {
        let m = self.ring.spec.modulus_int;
        self.with_coeffs(self.coeffs.iter().map(|&a| mul_mod_u64(a, c % m, m)).collect())
    }

    /// Exact division by `p^j`; `None` unless every coefficient is divisible.
    /// The quotient is only determined mod `p^(S-j)`; it is returned in the
    /// ring of precision `S - j`.
    pub fn divide_by_p_power(&self, j: u32) -> Option<GaloisRingElement> {
        let spec = &self.ring.spec;
        if j >= spec.precision {
            return if self.is_zero() { Some(self.clone()) } else { None };
        }
        let pj = spec.p.pow(j);
        if self.coeffs.iter().any(|c| c % pj != 0) {
            return None;
        }
        let target = self.ring.with_precision(spec.precision - j).ok()?;
        let coeffs: Vec<u64> = self.coeffs.iter().map(|c| c / pj).collect();
        Some(target.element_from_u64(&coeffs))
    }

    /// Reduction to a ring of lower precision with the same modulus.
    pub fn reduce_to(&self, target: &GaloisRing) -> GaloisRingElement {
        assert!(target.spec.p == self.ring.spec.p && target.spec.degree == self.ring.spec.degree);
        target.element_from_u64(&self.coeffs)
    }
}

impl Add for &GaloisRingElement {
    type Output = GaloisRingElement;
    fn add(self, rhs: &GaloisRingElement) -> GaloisRingElement {
        assert_eq!(self.ring, rhs.ring, "Galois ring elements from different rings");
        let m = self.ring.spec.modulus_int;
        self.with_coeffs(self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| (a + b) % m).collect())
    }
}

impl Sub for &GaloisRingElement {
    type Output = GaloisRingElement;
    fn sub(self, rhs: &GaloisRingElement) -> GaloisRingElement {
        assert_eq!(self.ring, rhs.ring, "Galois ring elements from different rings");
        let m = self.ring.spec.modulus_int;
        self.with_coeffs(
            self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| (a + m - b) % m).collect(),
        )
    }
}

impl Neg for &GaloisRingElement {
    type Output = GaloisRingElement;
    fn neg(self) -> GaloisRingElement {
        let m = self.ring.spec.modulus_int;
        self.with_coeffs(self.coeffs.iter().map(|a| (m - a) % m).collect())
    }
}

impl Mul for &GaloisRingElement {
    type Output = GaloisRingElement;
    fn mul(self, rhs: &GaloisRingElement) -> GaloisRingElement {
        assert_eq!(self.ring, rhs.ring, "Galois ring elements from different rings");
        let spec = &self.ring.spec;
        let m = spec.modulus_int;
        let k = spec.degree as usize;
        let mut prod = vec![0u64; 2 * k - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                prod[i + j] = (prod[i + j] + mul_mod_u64(a, b, m)) % m;
            }
        }
        // X^k = -(c_0 + c_1 X + ... + c_{k-1} X^{k-1})
        for top in (k..prod.len()).rev() {
            let lead = prod[top];
            if lead == 0 {
                continue;
            }
            prod[top] = 0;
            for (i, &c) in spec.modulus_poly.iter().enumerate() {
                let idx = top - k + i;
                prod[idx] = (prod[idx] + m - mul_mod_u64(lead, c, m)) % m;
            }
        }
        prod.truncate(k);
        self.with_coeffs(prod)
    }
}

impl fmt::Display for GaloisRingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(u64::to_string).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

impl CoefficientRing for GaloisRing {
    type Element = GaloisRingElement;

    fn prime(&self) -> u64 {
        self.spec.p
    }
    fn zero(&self) -> GaloisRingElement {
        self.scalar(0)
    }
    fn one(&self) -> GaloisRingElement {
        self.scalar(1)
    }
    fn from_integer(&self, n: &BigInt) -> GaloisRingElement {
        let m = BigInt::from(self.spec.modulus_int);
        let r = n.mod_floor(&m).to_u64().expect("reduced value fits");
        self.scalar(r)
    }
    fn from_rational(&self, r: &Rational) -> Result<GaloisRingElement, ArithError> {
        let inv = self
            .inverse_mod_char(r.denom())
            .ok_or_else(|| ArithError::NotInvertible(format_rational(r)))?;
        Ok(self.from_integer(r.numer()).scale(inv))
    }
    fn add(&self, a: &GaloisRingElement, b: &GaloisRingElement) -> GaloisRingElement {
        a + b
    }
    fn sub(&self, a: &GaloisRingElement, b: &GaloisRingElement) -> GaloisRingElement {
        a - b
    }
    fn mul(&self, a: &GaloisRingElement, b: &GaloisRingElement) -> GaloisRingElement {
        a * b
    }
    fn neg(&self, a: &GaloisRingElement) -> GaloisRingElement {
        -a
    }
    fn is_zero(&self, a: &GaloisRingElement) -> bool {
        a.is_zero()
    }
    fn valuation(&self, a: &GaloisRingElement) -> Valuation {
        a.valuation()
    }
    fn contains(&self, a: &GaloisRingElement) -> bool {
        a.ring == *self
    }
    fn ideal_ring(&self) -> Option<IdealRing> {
        None
    }
    fn render(&self, a: &GaloisRingElement) -> String {
        a.to_string()
    }
}

/// The Teichmüller lift of the residue of `x`: the unique `y ≡ x (mod p)`
/// with `y^q = y`, where `q = p^k`.
///
/// Iterating `y ↦ y^q` gains one power of `p` of agreement per step, so
/// `S - 1` steps reach the fixed point; we iterate until it is reached.
pub fn teichmueller(x: &GaloisRingElement) -> GaloisRingElement {
    let q = x.ring.residue_field_size();
    let mut y = x.clone();
    for _ in 0..=x.ring.precision() {
        let next = y.pow(q);
        if next == y {
            return y;
        }
        y = next;
    }
    unreachable!("Teichmüller iteration did not stabilise within S + 1 steps")
}

/// Which valuation ring an [`IdealSpec`] lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "ring")]
pub enum IdealRing {
    LocalizedRationals { p: u64 },
    Eisenstein { p: u64, e: u32 },
}

impl IdealRing {
    pub fn prime(&self) -> u64 {
        match *self {
            IdealRing::LocalizedRationals { p } | IdealRing::Eisenstein { p, .. } => p,
        }
    }

    pub fn ramification(&self) -> u32 {
        match *self {
            IdealRing::LocalizedRationals { .. } => 1,
            IdealRing::Eisenstein { e, .. } => e,
        }
    }
}

/// The ideal of all elements of valuation `≥ c` in a valuation ring.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IdealSpec {
    ring: IdealRing,
    #[serde(with = "rational_string")]
    threshold: Rational,
}

impl IdealSpec {
    /// `c` must be positive and a multiple of `1/e` (an integer for `Z_(p)`).
    pub fn new(ring: IdealRing, threshold: Rational) -> Result<Self, ArithError> {
        ensure_prime(ring.prime())?;
        if ring.ramification() == 0 {
            return Err(ArithError::InvalidIdeal("ramification must be positive".into()));
        }
        if !threshold.is_positive() {
            return Err(ArithError::InvalidIdeal(format!(
                "valuation {} must be positive",
                format_rational(&threshold)
            )));
        }
        let scaled = &threshold * Rational::from_integer(BigInt::from(ring.ramification()));
        if !scaled.is_integer() {
            return Err(ArithError::InvalidIdeal(format!(
                "valuation {} is not a multiple of 1/{}",
                format_rational(&threshold),
                ring.ramification()
            )));
        }
        Ok(IdealSpec { ring, threshold })
    }

    /// `(p^c)` in `Z_(p)`.
    pub fn localized(p: u64, c: u32) -> Result<Self, ArithError> {
        Self::new(
            IdealRing::LocalizedRationals { p },
            Rational::from_integer(BigInt::from(c)),
        )
    }

    /// The maximal ideal of the given valuation ring.
    pub fn maximal(ring: IdealRing) -> Result<Self, ArithError> {
        let c = Rational::new(BigInt::one(), BigInt::from(ring.ramification()));
        Self::new(ring, c)
    }

    pub fn ring(&self) -> IdealRing {
        self.ring
    }

    pub fn prime(&self) -> u64 {
        self.ring.prime()
    }

    pub fn threshold(&self) -> &Rational {
        &self.threshold
    }

    /// Required depth `c + v_p(n)` for the congruence modulo `n·𝔞`
    /// (infinite for `n = 0`).
    pub fn depth_for_multiple(&self, n: u64) -> Valuation {
        if n == 0 {
            return Valuation::Infinite;
        }
        let v = vp_u64(n, self.prime());
        Valuation::Finite(&self.threshold + Rational::from_integer(BigInt::from(v)))
    }

    pub fn contains_valuation(&self, v: &Valuation) -> bool {
        *v >= Valuation::Finite(self.threshold.clone())
    }
}

/// An ideal of a valuation ring is divided-power iff its valuation is at
/// least `1/(p-1)`.
pub fn is_divided_power(ideal: &IdealSpec) -> bool {
    let p = ideal.prime();
    *ideal.threshold() >= Rational::new(BigInt::one(), BigInt::from(p - 1))
}

/// `v_p` of the multinomial coefficient `(Σ parts)! / Π parts_i!`, counted as
/// the total of the carries produced when adding the parts in base `p`.
pub fn multinomial_valuation(parts: &[u64], p: u64) -> u64 {
    let mut digits: Vec<u64> = parts.to_vec();
    let mut carry = 0u64;
    let mut total = 0u64;
    loop {
        if carry == 0 && digits.iter().all(|&d| d == 0) {
            return total;
        }
        let column: u64 = digits.iter().map(|d| d % p).sum::<u64>() + carry;
        carry = column / p;
        total += carry;
        for d in digits.iter_mut() {
            *d /= p;
        }
    }
}

/// Legendre: `v_p(n!) = Σ_i floor(n / p^i)`.
pub fn factorial_valuation(n: u64, p: u64) -> u64 {
    let mut total = 0;
    let mut q = n / p;
    while q > 0 {
        total += q;
        q /= p;
    }
    total
}

/// `v_p(m!) - Σ v_p(r_i!)`: the factorial route to [`multinomial_valuation`].
pub fn multinomial_valuation_legendre(parts: &[u64], p: u64) -> u64 {
    let m: u64 = parts.iter().sum();
    factorial_valuation(m, p) - parts.iter().map(|&r| factorial_valuation(r, p)).sum::<u64>()
}

/// The Möbius function.
pub fn mobius(d: u64) -> i8 {
    assert!(d >= 1, "mobius is defined on positive integers");
    let mut n = d;
    let mut sign = 1i8;
    let mut f = 2u64;
    while f * f <= n {
        if n.is_multiple_of(f) {
            n /= f;
            if n.is_multiple_of(f) {
                return 0;
            }
            sign = -sign;
        }
        f += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// Multinomial coefficient as an exact integer.
pub fn multinomial(parts: &[u64]) -> BigUint {
    let mut total = 0u64;
    let mut acc = BigUint::one();
    for &r in parts {
        for i in 1..=r {
            total += 1;
            acc = acc * BigUint::from(total) / BigUint::from(i);
        }
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        rational(n, d)
    }

    #[test]
    fn valuation_examples() {
        let zp = LocalizedRationals::new(2).unwrap();
        assert_eq!(zp.valuation(&q(12, 1)), Valuation::integer(2));
        assert_eq!(zp.valuation(&q(3, 4)), Valuation::integer(-2));
        assert_eq!(zp.valuation(&q(0, 1)), Valuation::Infinite);

        let ring = EisensteinRing::new(3, 3).unwrap();
        assert_eq!(ring.valuation(&ring.uniformizer()), Valuation::Finite(q(1, 3)));
    }

    #[test]
    fn eisenstein_uniformizer_power_is_p() {
        for (p, e) in [(2u64, 2u32), (3, 3), (5, 2)] {
            let ring = EisensteinRing::new(p, e).unwrap();
            let a = ring.uniformizer();
            assert_eq!(ring.pow(&a, e as u64), ring.from_i64(p as i64));
        }
    }

    #[test]
    fn valuation_display_round_trip() {
        for v in [Valuation::Infinite, Valuation::Finite(q(-7, 3)), Valuation::integer(4)] {
            assert_eq!(v.to_string().parse::<Valuation>().unwrap(), v);
        }
        assert!(Valuation::Infinite > Valuation::integer(1_000_000));
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("-3/4").unwrap(), q(-3, 4));
        assert_eq!(parse_rational("6/4").unwrap(), q(3, 2));
        assert_eq!(parse_rational("5").unwrap(), q(5, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert_eq!(format_rational(&q(3, 2)), "3/2");
        assert_eq!(format_rational(&q(-4, 2)), "-2");
    }

    #[test]
    fn divided_power_examples() {
        for p in [2u64, 3, 5, 7] {
            let ideal = IdealSpec::localized(p, 1).unwrap();
            assert!(is_divided_power(&ideal));
            // e = p: maximal ideal of valuation 1/p is not divided-power
            let m = IdealSpec::maximal(IdealRing::Eisenstein { p, e: p as u32 }).unwrap();
            assert!(!is_divided_power(&m));
            // boundary e = p - 1 is divided-power
            if p > 2 {
                let m = IdealSpec::maximal(IdealRing::Eisenstein { p, e: p as u32 - 1 }).unwrap();
                assert!(is_divided_power(&m));
            }
        }
        let m = IdealSpec::maximal(IdealRing::Eisenstein { p: 3, e: 2 }).unwrap();
        assert_eq!(m.threshold(), &q(1, 2));
        assert!(is_divided_power(&m));
    }

    #[test]
    fn invalid_ideals_rejected() {
        assert!(IdealSpec::new(IdealRing::LocalizedRationals { p: 2 }, q(1, 2)).is_err());
        assert!(IdealSpec::new(IdealRing::LocalizedRationals { p: 2 }, q(0, 1)).is_err());
        assert!(IdealSpec::new(IdealRing::LocalizedRationals { p: 4 }, q(1, 1)).is_err());
        assert!(IdealSpec::new(IdealRing::Eisenstein { p: 3, e: 3 }, q(1, 2)).is_err());
        assert!(IdealSpec::new(IdealRing::Eisenstein { p: 3, e: 3 }, q(2, 3)).is_ok());
    }

    #[test]
    fn multinomial_valuation_examples() {
        assert_eq!(multinomial_valuation(&[2, 2], 2), 1);
        assert_eq!(multinomial_valuation_legendre(&[2, 2], 2), 1);
        for p in [2u64, 3, 5, 7] {
            for k in 1..p {
                assert_eq!(multinomial_valuation(&[k, p - k], p), 1);
            }
            assert_eq!(multinomial_valuation(&[9, 0], p), 0);
        }
    }

    #[test]
    fn mobius_examples() {
        assert_eq!(mobius(1), 1);
        assert_eq!(mobius(6), 1);
        assert_eq!(mobius(12), 0);
        assert_eq!(mobius(30), -1);
        for n in 1..200u64 {
            let s: i64 = (1..=n).filter(|d| n % d == 0).map(|d| mobius(d) as i64).sum();
            assert_eq!(s, (n == 1) as i64, "n = {n}");
        }
    }

    #[test]
    fn multinomial_coefficient_values() {
        assert_eq!(multinomial(&[2, 2]), BigUint::from(6u32));
        assert_eq!(multinomial(&[1, 1, 1]), BigUint::from(6u32));
        assert_eq!(multinomial(&[3, 0]), BigUint::from(1u32));
    }

    #[test]
    fn default_moduli_are_irreducible() {
        for p in [2u64, 3, 5, 7] {
            for k in 1..=3u32 {
                GaloisRing::new(p, 2, k, None).unwrap();
            }
        }
        assert!(matches!(
            GaloisRing::new(2, 2, 2, Some(vec![1, 0])),
            Err(ArithError::ReducibleModulus(_))
        ));
        assert!(matches!(
            GaloisRing::new(11, 1, 2, None),
            Err(ArithError::NoDefaultModulus { .. })
        ));
    }

    #[test]
    fn teichmueller_examples() {
        let ring = GaloisRing::new(5, 3, 1, None).unwrap();
        assert_eq!(teichmueller(&ring.element(&[2])), ring.element(&[57]));
        assert_eq!(teichmueller(&ring.element(&[0])), ring.element(&[0]));
        assert_eq!(teichmueller(&ring.element(&[1])), ring.element(&[1]));
        // any representative of the residue gives the same lift
        assert_eq!(teichmueller(&ring.element(&[7])), ring.element(&[57]));
    }

    #[test]
    fn teichmueller_fixed_and_congruent() {
        for (p, s, k) in [(2u64, 3u32, 2u32), (3, 3, 2), (2, 4, 3), (7, 2, 2)] {
            let ring = GaloisRing::new(p, s, k, None).unwrap();
            let q = ring.residue_field_size();
            for res in ring.residue_field_elements() {
                let x = ring.element_from_u64(&res);
                let t = teichmueller(&x);
                assert_eq!(t.pow(q), t);
                assert_eq!(t.residue(), res);
            }
        }
    }

    #[test]
    fn teichmueller_is_multiplicative() {
        let ring = GaloisRing::new(3, 3, 2, None).unwrap();
        let elems = ring.residue_field_elements();
        for a in &elems {
            for b in &elems {
                let x = ring.element_from_u64(a);
                let y = ring.element_from_u64(b);
                assert_eq!(
                    teichmueller(&(&x * &y)),
                    &teichmueller(&x) * &teichmueller(&y)
                );
            }
        }
    }

    #[test]
    fn galois_units_are_nonzero_residues() {
        let ring = GaloisRing::new(2, 3, 2, None).unwrap();
        let q = ring.residue_field_size();
        for res in ring.residue_field_elements() {
            let x = ring.element_from_u64(&res);
            let unit = res.iter().any(|&c| c != 0);
            assert_eq!(x.is_unit(), unit);
            if unit {
                // x^(q-1) ≡ 1 mod p for units
                assert_eq!(x.pow(q - 1).residue(), ring.one().residue());
            }
        }
    }

    #[test]
    fn galois_from_rational_inverts_prime_to_p_denominators() {
        let ring = GaloisRing::new(3, 2, 1, None).unwrap();
        let half = ring.from_rational(&q(1, 2)).unwrap();
        assert_eq!(&half * &ring.from_i64(2), ring.one());
        assert!(ring.from_rational(&q(1, 3)).is_err());
    }
}
