//! Truncated formal power series with rational or symmetric-function
//! coefficients, and the generating functions built from them.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_arith::{ensure_prime, mobius, ArithError, Rational};
use crate::partitions::{Partition, PartitionError, DEFAULT_WEIGHT_BOUND};
use crate::symfunc::{g_lambda, Basis, SymFunc, SymFuncError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("exp needs a zero constant term")]
    ExpConstantTerm,
    #[error("log needs constant term 1")]
    LogConstantTerm,
    #[error("truncation orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("u = {u} must be positive and prime to p = {p}")]
    NotCoprime { u: u32, p: u64 },
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    SymFunc(#[from] SymFuncError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Coefficient domain of a [`TruncatedSeries`]: a commutative Q-algebra.
pub trait SeriesCoeff: Clone + Debug + PartialEq {
    fn zero_value() -> Self;
    fn one_value() -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn scaled(&self, c: &Rational) -> Self;
    fn vanishes(&self) -> bool;
    /// The value as a rational number when it is a constant.
    fn as_constant(&self) -> Option<Rational>;
}

impl SeriesCoeff for Rational {
    fn zero_value() -> Self {
        Zero::zero()
    }
    fn one_value() -> Self {
        One::one()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn scaled(&self, c: &Rational) -> Self {
        self * c
    }
    fn vanishes(&self) -> bool {
        Zero::is_zero(self)
    }
    fn as_constant(&self) -> Option<Rational> {
        Some(self.clone())
    }
}

/// Series over `Λ_Q` keep every non-constant coefficient in one basis;
/// mixing bases inside one series is a programming error and panics.
impl SeriesCoeff for SymFunc {
    fn zero_value() -> Self {
        SymFunc::zero(Basis::P)
    }
    fn one_value() -> Self {
        SymFunc::one(Basis::P)
    }
    fn plus(&self, other: &Self) -> Self {
        SymFunc::add(self, other).expect("series coefficients share a basis")
    }
    fn times(&self, other: &Self) -> Self {
        self.multiply(other).expect("series coefficients share a basis")
    }
    fn scaled(&self, c: &Rational) -> Self {
        SymFunc::scale(self, c)
    }
    fn vanishes(&self) -> bool {
        SymFunc::is_zero(self)
    }
    fn as_constant(&self) -> Option<Rational> {
        self.is_constant().then(|| self.coefficient(&Partition::empty()))
    }
}

/// `c_0 + c_1 t + ... + c_N t^N`, computed modulo `t^{N+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries<C> {
    coeffs: Vec<C>,
}

impl<C: SeriesCoeff> TruncatedSeries<C> {
    pub fn zero(order: usize) -> Self {
        TruncatedSeries { coeffs: vec![C::zero_value(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = C::one_value();
        s
    }

    /// Pads with zeros or truncates `coeffs` to exactly `order + 1` entries.
    pub fn from_coeffs(order: usize, mut coeffs: Vec<C>) -> Self {
        coeffs.resize(order + 1, C::zero_value());
        TruncatedSeries { coeffs }
    }

    /// `c t^k`, or zero when `k > order`.
    pub fn monomial(order: usize, k: usize, c: C) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &C {
        &self.coeffs[k]
    }

    fn check_order(&self, other: &Self) -> Result<(), SeriesError> {
        if self.order() == other.order() {
            Ok(())
        } else {
            Err(SeriesError::OrderMismatch(self.order(), other.order()))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_order(other)?;
        Ok(TruncatedSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.plus(b)).collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_order(other)?;
        let n = self.order();
        let mut out = Self::zero(n);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.vanishes() {
                continue;
            }
            for (j, b) in other.coeffs[..=n - i].iter().enumerate() {
                if !b.vanishes() {
                    out.coeffs[i + j] = out.coeffs[i + j].plus(&a.times(b));
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|a| a.scaled(c)).collect() }
    }

    /// `exp f` from `n g_n = Σ_{k=1}^n k f_k g_{n-k}`.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].vanishes() {
            return Err(SeriesError::ExpConstantTerm);
        }
        let n_max = self.order();
        let mut g = vec![C::one_value()];
        for n in 1..=n_max {
            let mut acc = C::zero_value();
            for k in 1..=n {
                if !self.coeffs[k].vanishes() {
                    let term = self.coeffs[k].times(&g[n - k]).scaled(&Rational::from_integer(k.into()));
                    acc = acc.plus(&term);
                }
            }
            g.push(acc.scaled(&Rational::new(BigInt::one(), BigInt::from(n))));
        }
        Ok(TruncatedSeries { coeffs: g })
    }

    /// `log g` for `g_0 = 1`, from `n f_n = n g_n - Σ_{k=1}^{n-1} k f_k g_{n-k}`.
    pub fn log(&self) -> Result<Self, SeriesError> {
        if self.coeffs[0].as_constant() != Some(Rational::one()) {
            return Err(SeriesError::LogConstantTerm);
        }
        let n_max = self.order();
        let mut f = vec![C::zero_value()];
        for n in 1..=n_max {
            let mut acc = self.coeffs[n].scaled(&Rational::from_integer(n.into()));
            for k in 1..n {
                if !f[k].vanishes() {
                    let term = f[k].times(&self.coeffs[n - k]).scaled(&-Rational::from_integer(k.into()));
                    acc = acc.plus(&term);
                }
            }
            f.push(acc.scaled(&Rational::new(BigInt::one(), BigInt::from(n))));
        }
        Ok(TruncatedSeries { coeffs: f })
    }
}

impl TruncatedSeries<Rational> {
    /// `f(t^d)`, truncated at the same order.
    pub fn substitute_power(&self, d: usize) -> Self {
        let n = self.order();
        let mut out = Self::zero(n);
        for (k, c) in self.coeffs.iter().enumerate() {
            if k * d > n {
                break;
            }
            out.coeffs[k * d] = c.clone();
        }
        out
    }

    /// `(1 - t)^γ = Σ_m binom(γ, m) (-t)^m`, with
    /// `binom(γ, m) = binom(γ, m-1) (γ - m + 1) / m`.
    pub fn binomial(order: usize, gamma: &Rational) -> Self {
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut binom = Rational::one();
        for m in 0..=order {
            if m > 0 {
                let m_q = Rational::from_integer(BigInt::from(m));
                binom = binom * (gamma - &m_q + Rational::one()) / m_q;
            }
            let signed = if m % 2 == 0 { binom.clone() } else { -binom.clone() };
            coeffs.push(signed);
        }
        TruncatedSeries { coeffs }
    }
}

#[derive(Serialize, Deserialize)]
struct RationalSeriesRepr {
    order: usize,
    #[serde(with = "crate::exact_arith::rational_vec_string")]
    coefficients: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct SymFuncSeriesRepr {
    order: usize,
    coefficients: Vec<SymFunc>,
}

impl Serialize for TruncatedSeries<Rational> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RationalSeriesRepr { order: self.order(), coefficients: self.coeffs.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries<Rational> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = RationalSeriesRepr::deserialize(d)?;
        Ok(TruncatedSeries::from_coeffs(r.order, r.coefficients))
    }
}

impl Serialize for TruncatedSeries<SymFunc> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SymFuncSeriesRepr { order: self.order(), coefficients: self.coeffs.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries<SymFunc> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = SymFuncSeriesRepr::deserialize(d)?;
        Ok(TruncatedSeries::from_coeffs(r.order, r.coefficients))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArtinHasseMethod {
    /// `exp(Σ_j z^{p^j} / p^j)`.
    Exponential,
    /// `Π_{p ∤ d} (1 - z^d)^{-μ(d)/d}`.
    Product,
}

/// The Artin-Hasse exponential `F(z)` modulo `z^{N+1}`.
pub fn artin_hasse(p: u64, order: usize, method: ArtinHasseMethod) -> Result<TruncatedSeries<Rational>, SeriesError> {
    ensure_prime(p)?;
    match method {
        ArtinHasseMethod::Exponential => {
            let mut inner = TruncatedSeries::<Rational>::zero(order);
            let mut pj: u64 = 1;
            while pj as usize <= order {
                inner.coeffs[pj as usize] = Rational::new(BigInt::one(), BigInt::from(pj));
                pj *= p;
            }
            inner.exp()
        }
        ArtinHasseMethod::Product => {
            let mut acc = TruncatedSeries::<Rational>::one(order);
            for d in 1..=order as u64 {
                if d % p == 0 {
                    continue;
                }
                let mu = mobius(d);
                if mu == 0 {
                    continue;
                }
                let gamma = Rational::new(BigInt::from(-mu), BigInt::from(d));
                let factor = TruncatedSeries::binomial(order, &gamma).substitute_power(d as usize);
                acc = acc.mul(&factor)?;
            }
            Ok(acc)
        }
    }
}

/// Which indices `s` contribute to `P_S(t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartSet {
    All,
    Only(Vec<u32>),
}

impl PartSet {
    pub fn contains(&self, s: u32) -> bool {
        match self {
            PartSet::All => s >= 1,
            PartSet::Only(v) => v.contains(&s),
        }
    }
}

/// `P_S(t) = Σ_{s ∈ S} (-1)^{s-1} p_s t^s / s`, in the p-basis.
pub fn powersum_gf(set: &PartSet, order: usize) -> Result<TruncatedSeries<SymFunc>, SeriesError> {
    if order > DEFAULT_WEIGHT_BOUND as usize {
        return Err(PartitionError::BoundExceeded { weight: order as u32, bound: DEFAULT_WEIGHT_BOUND }.into());
    }
    let mut out = TruncatedSeries::<SymFunc>::zero(order);
    for s in 1..=order as u32 {
        if set.contains(s) {
            let sign = if s % 2 == 1 { 1 } else { -1 };
            out.coeffs[s as usize] =
                SymFunc::term(Basis::P, Partition::single(s), Rational::new(sign.into(), s.into()));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuMethod {
    /// `g_{(u)^r}` summed over each p-equivalence class.
    ClassSum,
    /// `exp P_S(t)` for `S = {u p^j}`, with the explicit `p = 2` factor
    /// `Σ_k 2^k p_u^k t^{uk} / (u^k k!)` split off.
    ArtinHasse,
}

/// `G_u(t) = Σ_r g_{(u)^r} t^{ur}` modulo `t^{N+1}`.
pub fn g_u_series(u: u32, p: u64, order: usize, method: GuMethod) -> Result<TruncatedSeries<SymFunc>, SeriesError> {
    ensure_prime(p)?;
    if u == 0 || (u as u64).is_multiple_of(p) {
        return Err(SeriesError::NotCoprime { u, p });
    }
    if order > DEFAULT_WEIGHT_BOUND as usize {
        return Err(PartitionError::BoundExceeded { weight: order as u32, bound: DEFAULT_WEIGHT_BOUND }.into());
    }
    match method {
        GuMethod::ClassSum => {
            let mut out = TruncatedSeries::<SymFunc>::zero(order);
            let mut r = 0u32;
            while (u * r) as usize <= order {
                out.coeffs[(u * r) as usize] = g_lambda(&Partition::repeated(u, r), p)?;
                r += 1;
            }
            Ok(out)
        }
        GuMethod::ArtinHasse => {
            let mut parts = vec![];
            let mut s = u as u64;
            while s as usize <= order {
                parts.push(s as u32);
                s *= p;
            }
            if p != 2 {
                return powersum_gf(&PartSet::Only(parts), order)?.exp();
            }
            // For p = 2 every s = u 2^j with j ≥ 1 is even, so
            // P_S(t) = 2 p_u t^u / u - Σ_j p_{u 2^j} t^{u 2^j} / (u 2^j).
            let mut rest = TruncatedSeries::<SymFunc>::zero(order);
            for &s in &parts {
                rest.coeffs[s as usize] =
                    SymFunc::term(Basis::P, Partition::single(s), Rational::new((-1).into(), s.into()));
            }
            let mut correction = TruncatedSeries::<SymFunc>::zero(order);
            let mut k = 0u32;
            let mut coefficient = Rational::one();
            while (u * k) as usize <= order {
                if k > 0 {
                    coefficient *= Rational::new(BigInt::from(2), BigInt::from(u) * BigInt::from(k));
                }
                correction.coeffs[(u * k) as usize] =
                    SymFunc::term(Basis::P, Partition::repeated(u, k), coefficient.clone());
                k += 1;
            }
            Ok(correction.mul(&rest.exp()?)?)
        }
    }
}

/// `Σ_{d | n, p ∤ d} μ(d)`: equals 1 exactly when `n` is a power of `p`.
pub fn prime_to_p_mobius_sum(n: u64, p: u64) -> i64 {
    (1..=n)
        .filter(|d| n.is_multiple_of(*d) && d % p != 0)
        .map(|d| mobius(d) as i64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_arith::{rational, vp_integer};
    use crate::symfunc::e_in_p_basis;

    fn q(n: i64, d: i64) -> Rational {
        rational(n, d)
    }

    fn factorial_inv(k: u64) -> Rational {
        let f: BigInt = (1..=k).map(BigInt::from).product();
        Rational::new(BigInt::one(), f)
    }

    #[test]
    fn exp_log_basics() {
        let n = 8;
        assert_eq!(TruncatedSeries::<Rational>::zero(n).exp().unwrap(), TruncatedSeries::one(n));
        assert_eq!(TruncatedSeries::<Rational>::one(n).log().unwrap(), TruncatedSeries::zero(n));
        let z = TruncatedSeries::monomial(n, 1, q(1, 1));
        let e = z.exp().unwrap();
        for k in 0..=n {
            assert_eq!(e.coeff(k), &factorial_inv(k as u64));
        }
        assert_eq!(TruncatedSeries::<Rational>::one(n).exp(), Err(SeriesError::ExpConstantTerm));
        assert_eq!(TruncatedSeries::<Rational>::zero(n).log(), Err(SeriesError::LogConstantTerm));
    }

    #[test]
    fn log_of_one_minus_t() {
        // log(1 - t) = -Σ t^k / k
        let s = TruncatedSeries::from_coeffs(6, vec![q(1, 1), q(-1, 1)]);
        let l = s.log().unwrap();
        for k in 1..=6 {
            assert_eq!(l.coeff(k), &q(-1, k as i64));
        }
    }

    #[test]
    fn order_mismatch_is_rejected() {
        let a = TruncatedSeries::<Rational>::one(3);
        let b = TruncatedSeries::<Rational>::one(4);
        assert_eq!(a.mul(&b), Err(SeriesError::OrderMismatch(3, 4)));
    }

    #[test]
    fn binomial_series_squares_back() {
        let half = TruncatedSeries::binomial(10, &q(1, 2));
        let sq = half.mul(&half).unwrap();
        assert_eq!(sq, TruncatedSeries::from_coeffs(10, vec![q(1, 1), q(-1, 1)]));
    }

    #[test]
    fn artin_hasse_examples() {
        for p in [2u64, 3, 5, 7] {
            let f = artin_hasse(p, 12, ArtinHasseMethod::Exponential).unwrap();
            for k in 0..p {
                assert_eq!(f.coeff(k as usize), &factorial_inv(k));
            }
        }
        let f3 = artin_hasse(3, 6, ArtinHasseMethod::Exponential).unwrap();
        assert_eq!(f3.coeff(3), &q(1, 2));
        // ((p-1)! + 1) / (p · (p-1)!) at p = 5
        let f5 = artin_hasse(5, 6, ArtinHasseMethod::Product).unwrap();
        assert_eq!(f5.coeff(5), &q(25, 5 * 24));
        for method in [ArtinHasseMethod::Exponential, ArtinHasseMethod::Product] {
            assert_eq!(artin_hasse(2, 5, method).unwrap().coeff(3), &q(2, 3));
        }
    }

    #[test]
    fn artin_hasse_methods_agree_and_are_integral() {
        for p in [2u64, 3, 5] {
            let a = artin_hasse(p, 50, ArtinHasseMethod::Exponential).unwrap();
            let b = artin_hasse(p, 50, ArtinHasseMethod::Product).unwrap();
            assert_eq!(a, b, "p = {p}");
            for c in a.coeffs() {
                assert_eq!(vp_integer(c.denom(), p), Some(0), "p = {p}: {c}");
            }
        }
    }

    #[test]
    fn mobius_sum_detects_prime_powers() {
        for p in [2u64, 3, 5, 7] {
            for n in 1..=500u64 {
                let mut m = n;
                while m % p == 0 {
                    m /= p;
                }
                assert_eq!(prime_to_p_mobius_sum(n, p) == 1, m == 1, "n = {n}, p = {p}");
            }
        }
    }

    #[test]
    fn powersum_gf_examples() {
        assert_eq!(
            powersum_gf(&PartSet::Only(vec![]), 4).unwrap(),
            TruncatedSeries::<SymFunc>::zero(4)
        );
        let s = powersum_gf(&PartSet::Only(vec![1]), 3).unwrap();
        assert_eq!(
            s,
            TruncatedSeries::monomial(3, 1, SymFunc::basis_element(Basis::P, Partition::single(1)))
        );
        let e = powersum_gf(&PartSet::All, 10).unwrap().exp().unwrap();
        for n in 0..=10 {
            assert_eq!(e.coeff(n), &e_in_p_basis(n as u32).unwrap(), "n = {n}");
        }
        assert_eq!(e.log().unwrap(), powersum_gf(&PartSet::All, 10).unwrap());
    }

    #[test]
    fn g_u_examples() {
        let g = g_u_series(1, 2, 4, GuMethod::ArtinHasse).unwrap();
        assert_eq!(g.coeff(0), &SymFunc::one(Basis::P));
        assert_eq!(g.coeff(2), &e_in_p_basis(2).unwrap());
        assert_eq!(g_u_series(3, 3, 4, GuMethod::ClassSum), Err(SeriesError::NotCoprime { u: 3, p: 3 }));
        assert_eq!(g_u_series(0, 3, 4, GuMethod::ClassSum), Err(SeriesError::NotCoprime { u: 0, p: 3 }));
    }

    #[test]
    fn g_u_methods_agree() {
        for (u, p, n) in [(1u32, 2u64, 8usize), (1, 3, 9), (2, 3, 8), (3, 2, 10), (1, 5, 10), (5, 2, 10), (2, 5, 10)] {
            let a = g_u_series(u, p, n, GuMethod::ClassSum).unwrap();
            let b = g_u_series(u, p, n, GuMethod::ArtinHasse).unwrap();
            assert_eq!(a, b, "u = {u}, p = {p}");
            for c in a.coeffs() {
                assert!(c.is_p_integral(p).unwrap());
            }
        }
    }

    #[test]
    fn series_serde_round_trip() {
        let f = artin_hasse(3, 5, ArtinHasseMethod::Exponential).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.starts_with(r#"{"order":5,"coefficients":["1","1","1/2","1/2""#));
        let back: TruncatedSeries<Rational> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
        let g = g_u_series(1, 2, 3, GuMethod::ClassSum).unwrap();
        let back: TruncatedSeries<SymFunc> = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
