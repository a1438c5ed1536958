//! Symmetric functions with exact rational coefficients in the elementary
//! (`e_λ`) and power-sum (`p_λ`) bases.
//!
//! `{e_λ}` is an integral basis of `Λ`, so p-integrality is decided in the
//! e-basis. Generator conversions (`e_n` in the p-basis and `p_n` in the
//! e-basis) are computed once per degree and shared through a process-wide
//! cache.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::exact_arith::{
    format_rational, multinomial, rational_string, vp_integer, ArithError, CoefficientRing,
    Rational,
};
use crate::partitions::{
    enumerate_partitions_bounded, p_equivalence_class_bounded, Partition, PartitionError,
    DEFAULT_WEIGHT_BOUND,
};
use crate::poly::{MonicPoly, PolyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymFuncError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("operands are in different bases")]
    BasisMismatch,
    #[error("p_0 is not a symmetric function")]
    PowerSumZero,
    #[error("power polynomial exponent must be at least 1")]
    ZeroExponent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Basis {
    E,
    P,
}

impl Basis {
    pub fn other(self) -> Basis {
        match self {
            Basis::E => Basis::P,
            Basis::P => Basis::E,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Basis::E => "e",
            Basis::P => "p",
        }
    }
}

impl std::str::FromStr for Basis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "e" | "E" => Ok(Basis::E),
            "p" | "P" => Ok(Basis::P),
            other => Err(format!("unknown basis {other:?}; expected e or p")),
        }
    }
}

/// A finite rational combination of `e_λ` or of `p_λ`.
///
/// Zero coefficients are never stored. The empty partition stands for the
/// constant `1` in either basis.
#[derive(Clone, Debug)]
pub struct SymFunc {
    basis: Basis,
    terms: BTreeMap<Partition, Rational>,
}

/// Constants compare equal regardless of the basis tag.
impl PartialEq for SymFunc {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && (self.basis == other.basis || self.is_constant())
    }
}

impl Eq for SymFunc {}

impl SymFunc {
    pub fn zero(basis: Basis) -> Self {
        SymFunc { basis, terms: BTreeMap::new() }
    }

    pub fn one(basis: Basis) -> Self {
        Self::constant(basis, Rational::one())
    }

    pub fn constant(basis: Basis, c: Rational) -> Self {
        Self::term(basis, Partition::empty(), c)
    }

    /// The basis element `b_λ`.
    pub fn basis_element(basis: Basis, lambda: Partition) -> Self {
        Self::term(basis, lambda, Rational::one())
    }

    pub fn term(basis: Basis, lambda: Partition, c: Rational) -> Self {
        let mut f = Self::zero(basis);
        f.add_term(lambda, c);
        f
    }

    pub fn from_terms(basis: Basis, terms: impl IntoIterator<Item = (Partition, Rational)>) -> Self {
        let mut f = Self::zero(basis);
        for (lambda, c) in terms {
            f.add_term(lambda, c);
        }
        f
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn terms(&self) -> &BTreeMap<Partition, Rational> {
        &self.terms
    }

    pub fn coefficient(&self, lambda: &Partition) -> Rational {
        self.terms.get(lambda).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Only a constant term (possibly zero): such values are basis-independent.
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Partition::is_empty)
    }

    pub fn max_weight(&self) -> u32 {
        self.terms.keys().map(Partition::weight).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, lambda: Partition, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(lambda).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    fn unify_basis(&self, other: &SymFunc) -> Result<Basis, SymFuncError> {
        if self.basis == other.basis || other.is_constant() {
            Ok(self.basis)
        } else if self.is_constant() {
            Ok(other.basis)
        } else {
            Err(SymFuncError::BasisMismatch)
        }
    }

    pub fn add(&self, other: &SymFunc) -> Result<SymFunc, SymFuncError> {
        let basis = self.unify_basis(other)?;
        let mut out = SymFunc { basis, terms: self.terms.clone() };
        for (lambda, c) in &other.terms {
            out.add_term(lambda.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SymFunc) -> Result<SymFunc, SymFuncError> {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> SymFunc {
        if c.is_zero() {
            return SymFunc::zero(self.basis);
        }
        SymFunc {
            basis: self.basis,
            terms: self.terms.iter().map(|(l, v)| (l.clone(), v * c)).collect(),
        }
    }

    /// Product; in either basis `b_λ · b_μ = b_{λμ}`.
    pub fn multiply(&self, other: &SymFunc) -> Result<SymFunc, SymFuncError> {
        let basis = self.unify_basis(other)?;
        let mut out = SymFunc::zero(basis);
        for (l1, c1) in &self.terms {
            for (l2, c2) in &other.terms {
                out.add_term(l1.multiply(l2), c1 * c2);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<SymFunc, SymFuncError> {
        let mut out = SymFunc::one(self.basis);
        for _ in 0..k {
            out = out.multiply(self)?;
        }
        Ok(out)
    }

    /// The same symmetric function expressed in `target`.
    pub fn convert(&self, target: Basis) -> Result<SymFunc, SymFuncError> {
        self.convert_bounded(target, DEFAULT_WEIGHT_BOUND)
    }

    pub fn convert_bounded(&self, target: Basis, bound: u32) -> Result<SymFunc, SymFuncError> {
        if target == self.basis {
            return Ok(self.clone());
        }
        let mut out = SymFunc::zero(target);
        for (lambda, c) in &self.terms {
            let mut image = SymFunc::one(target);
            for &part in lambda.parts() {
                image = image.multiply(&generator_image(self.basis, part, bound)?)?;
            }
            for (mu, d) in image.terms {
                out.add_term(mu, d * c);
            }
        }
        Ok(out)
    }

    /// Membership in `Λ_{Z_(p)}`: every e-basis coefficient has a
    /// denominator prime to `p`.
    pub fn is_p_integral(&self, p: u64) -> Result<bool, SymFuncError> {
        let in_e = self.convert(Basis::E)?;
        Ok(in_e
            .terms
            .values()
            .all(|c| vp_integer(c.denom(), p) == Some(0)))
    }

    /// `true` when every coefficient is an integer.
    pub fn has_integer_coefficients(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }
}

impl fmt::Display for SymFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let sym = self.basis.symbol();
        // highest weight first, then descending partitions
        let mut entries: Vec<_> = self.terms.iter().collect();
        entries.sort_by(|a, b| b.0.weight().cmp(&a.0.weight()).then(b.0.cmp(a.0)));
        for (i, (lambda, c)) in entries.into_iter().enumerate() {
            let negative = c.is_negative();
            let magnitude = c.abs();
            match (i, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if lambda.is_empty() {
                write!(f, "{}", format_rational(&magnitude))?;
            } else if magnitude.is_one() {
                write!(f, "{sym}{lambda}")?;
            } else {
                write!(f, "{}*{sym}{lambda}", format_rational(&magnitude))?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    partition: Partition,
    #[serde(with = "rational_string")]
    coefficient: Rational,
}

#[derive(Serialize, Deserialize)]
struct SymFuncRepr {
    basis: Basis,
    terms: Vec<TermRepr>,
}

/// `{"basis": "P", "terms": [{"partition": [1,1], "coefficient": "1/2"}, ...]}`,
/// terms in descending partition order.
impl Serialize for SymFunc {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let terms = self
            .terms
            .iter()
            .rev()
            .map(|(l, c)| TermRepr { partition: l.clone(), coefficient: c.clone() })
            .collect();
        SymFuncRepr { basis: self.basis, terms }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymFunc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = SymFuncRepr::deserialize(d)?;
        Ok(SymFunc::from_terms(
            repr.basis,
            repr.terms.into_iter().map(|t| (t.partition, t.coefficient)),
        ))
    }
}

type GeneratorCache = RwLock<HashMap<(Basis, u32), SymFunc>>;

fn generator_cache() -> &'static GeneratorCache {
    static CACHE: OnceLock<GeneratorCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Image of the generator `b_n` (of basis `from`) in the other basis.
fn generator_image(from: Basis, n: u32, bound: u32) -> Result<SymFunc, SymFuncError> {
    if n > bound {
        return Err(PartitionError::BoundExceeded { weight: n, bound }.into());
    }
    if let Some(hit) = generator_cache().read().expect("cache poisoned").get(&(from, n)) {
        return Ok(hit.clone());
    }
    let image = match from {
        Basis::E => e_in_p_basis_bounded(n, bound)?,
        Basis::P => p_in_e_basis_bounded(n, bound)?,
    };
    generator_cache()
        .write()
        .expect("cache poisoned")
        .insert((from, n), image.clone());
    Ok(image)
}

fn signed_inverse_z(lambda: &Partition) -> Rational {
    let z = BigInt::from(lambda.z());
    Rational::new(BigInt::from(lambda.sign()), z)
}

/// `e_n = Σ_{λ ⊢ n} (-1)^λ p_λ / z_λ`.
pub fn e_in_p_basis(n: u32) -> Result<SymFunc, SymFuncError> {
    e_in_p_basis_bounded(n, DEFAULT_WEIGHT_BOUND)
}

fn e_in_p_basis_bounded(n: u32, bound: u32) -> Result<SymFunc, SymFuncError> {
    let parts = enumerate_partitions_bounded(n, bound)?;
    Ok(SymFunc::from_terms(
        Basis::P,
        parts.into_iter().map(|l| {
            let c = signed_inverse_z(&l);
            (l, c)
        }),
    ))
}

/// `p_n = (-1)^n n Σ_{λ ⊢ n} ((-1)^m / m) · multinomial(m; r_1(λ), r_2(λ), ..) e_λ`,
/// with `m` the number of parts of `λ`.
pub fn p_in_e_basis(n: u32) -> Result<SymFunc, SymFuncError> {
    p_in_e_basis_bounded(n, DEFAULT_WEIGHT_BOUND)
}

fn p_in_e_basis_bounded(n: u32, bound: u32) -> Result<SymFunc, SymFuncError> {
    if n == 0 {
        return Err(SymFuncError::PowerSumZero);
    }
    let parts = enumerate_partitions_bounded(n, bound)?;
    let outer = if n.is_multiple_of(2) { BigInt::from(n) } else { -BigInt::from(n) };
    Ok(SymFunc::from_terms(
        Basis::E,
        parts.into_iter().map(|l| {
            let m = l.len() as u64;
            let counts: Vec<u64> = l.multiplicities().values().map(|&r| r as u64).collect();
            let sign = if m.is_multiple_of(2) { BigInt::one() } else { -BigInt::one() };
            let numer = &outer * sign * BigInt::from(multinomial(&counts));
            (l, Rational::new(numer, BigInt::from(m)))
        }),
    ))
}

/// `g_λ = Σ_{μ ~_p λ} (-1)^μ p_μ / z_μ`, in the p-basis.
pub fn g_lambda(lambda: &Partition, p: u64) -> Result<SymFunc, SymFuncError> {
    let class = p_equivalence_class_bounded(lambda, p, DEFAULT_WEIGHT_BOUND)?;
    Ok(SymFunc::from_terms(
        Basis::P,
        class.into_iter().map(|mu| {
            let c = signed_inverse_z(&mu);
            (mu, c)
        }),
    ))
}

/// `f(Q)`: write `f` in the e-basis and substitute `e_n(Q)`.
pub fn evaluate<R: CoefficientRing>(f: &SymFunc, q: &MonicPoly<R>) -> Result<R::Element, SymFuncError> {
    let ring = q.ring();
    let in_e = f.convert(Basis::E)?;
    let mut total = ring.zero();
    for (lambda, c) in in_e.terms() {
        if lambda.parts().iter().any(|&a| a as usize > q.degree()) {
            continue;
        }
        let mut prod = ring.from_rational(c)?;
        for &a in lambda.parts() {
            prod = ring.mul(&prod, &q.e(a as usize));
        }
        total = ring.add(&total, &prod);
    }
    Ok(total)
}

/// `p_0(Q), .., p_N(Q)` by Newton's identities, with `p_0(Q) = deg Q`:
/// `p_n = -Σ_{i=1}^{min(n-1,d)} a_i p_{n-i} - [n ≤ d] n a_n`,
/// which for `n ≥ d` is the order-`d` recurrence `p_n = -Σ_{i=1}^{d} a_i p_{n-i}`.
pub fn newton_power_sums<R: CoefficientRing>(q: &MonicPoly<R>, up_to: usize) -> Vec<R::Element> {
    let ring = q.ring();
    let a = q.lower_coefficients();
    let d = q.degree();
    let mut sums = Vec::with_capacity(up_to + 1);
    sums.push(ring.from_i64(d as i64));
    for n in 1..=up_to {
        let mut acc = ring.zero();
        for i in 1..=(n - 1).min(d) {
            acc = ring.add(&acc, &ring.mul(&a[i - 1], &sums[n - i]));
        }
        if n <= d {
            acc = ring.add(&acc, &ring.mul(&ring.from_i64(n as i64), &a[n - 1]));
        }
        sums.push(ring.neg(&acc));
    }
    sums
}

pub fn newton_power_sum<R: CoefficientRing>(q: &MonicPoly<R>, n: usize) -> R::Element {
    newton_power_sums(q, n).pop().expect("at least p_0")
}

/// `P_n`: the monic polynomial whose roots are the `n`-th powers of the
/// roots of `Q`, via `e_i(P_n) = Σ_{λ ⊢ i} (-1)^λ p_{nλ}(Q) / z_λ`.
pub fn power_polynomial<R: CoefficientRing>(q: &MonicPoly<R>, n: u32) -> Result<MonicPoly<R>, SymFuncError> {
    if n == 0 {
        return Err(SymFuncError::ZeroExponent);
    }
    let ring = q.ring();
    let d = q.degree();
    let sums = newton_power_sums(q, d * n as usize);
    let mut lower = Vec::with_capacity(d);
    for i in 1..=d {
        let mut e_i = ring.zero();
        for lambda in enumerate_partitions_bounded(i as u32, u32::MAX)? {
            let mut term = ring.from_rational(&signed_inverse_z(&lambda))?;
            for &part in lambda.scaled(n).parts() {
                term = ring.mul(&term, &sums[part as usize]);
            }
            e_i = ring.add(&e_i, &term);
        }
        lower.push(if i % 2 == 0 { e_i } else { ring.neg(&e_i) });
    }
    Ok(MonicPoly::new(ring.clone(), lower)?)
}
