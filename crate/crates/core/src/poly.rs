//! Monic polynomials over a [`CoefficientRing`].

use num_bigint::BigInt;
use thiserror::Error;

use crate::exact_arith::{CoefficientRing, LocalizedRationals};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("polynomial has no coefficients")]
    Empty,
    #[error("leading coefficient must be 1")]
    NotMonic,
    #[error("coefficient {0} does not belong to the ring")]
    NotInRing(String),
}

/// `X^d + a_1 X^{d-1} + ... + a_d`, stored as `[a_1, .., a_d]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonicPoly<R: CoefficientRing> {
    ring: R,
    lower: Vec<R::Element>,
}

impl<R: CoefficientRing> MonicPoly<R> {
    /// From the non-leading coefficients `a_1, .., a_d`.
    pub fn new(ring: R, lower: Vec<R::Element>) -> Result<Self, PolyError> {
        if let Some(bad) = lower.iter().find(|a| !ring.contains(a)) {
            return Err(PolyError::NotInRing(ring.render(bad)));
        }
        Ok(MonicPoly { ring, lower })
    }

    /// From all coefficients, leading first; the leading one must be 1.
    pub fn from_full(ring: R, coeffs: Vec<R::Element>) -> Result<Self, PolyError> {
        let mut iter = coeffs.into_iter();
        let lead = iter.next().ok_or(PolyError::Empty)?;
        if lead != ring.one() {
            return Err(PolyError::NotMonic);
        }
        Self::new(ring, iter.collect())
    }

    /// The constant polynomial `1` (degree 0).
    pub fn one(ring: R) -> Self {
        MonicPoly { ring, lower: vec![] }
    }

    /// `X - c`.
    pub fn linear(ring: R, c: &R::Element) -> Self {
        let a1 = ring.neg(c);
        MonicPoly { ring, lower: vec![a1] }
    }

    pub fn ring(&self) -> &R {
        &self.ring
    }

    pub fn degree(&self) -> usize {
        self.lower.len()
    }

    /// `[a_1, .., a_d]`.
    pub fn lower_coefficients(&self) -> &[R::Element] {
        &self.lower
    }

    /// All coefficients, leading `1` first.
    pub fn full_coefficients(&self) -> Vec<R::Element> {
        std::iter::once(self.ring.one()).chain(self.lower.iter().cloned()).collect()
    }

    /// `e_n(P)`: `1` for `n = 0`, `(-1)^n a_n` for `1 ≤ n ≤ d`, `0` beyond.
    pub fn e(&self, n: usize) -> R::Element {
        match n {
            0 => self.ring.one(),
            n if n <= self.degree() => {
                let a = &self.lower[n - 1];
                if n % 2 == 0 {
                    a.clone()
                } else {
                    self.ring.neg(a)
                }
            }
            _ => self.ring.zero(),
        }
    }

    /// Product of two monic polynomials.
    pub fn mul(&self, other: &Self) -> Self {
        let a = self.full_coefficients();
        let b = other.full_coefficients();
        let mut out = vec![self.ring.zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] = self.ring.add(&out[i + j], &self.ring.mul(x, y));
            }
        }
        out.remove(0);
        MonicPoly { ring: self.ring.clone(), lower: out }
    }

    /// `self + extra`, where `extra` has degree below `deg self` and is given
    /// leading-first with exactly `deg self` entries (`X^{d-1}` down to `X^0`).
    pub fn add_lower(&self, extra: &[R::Element]) -> Self {
        assert_eq!(extra.len(), self.degree(), "perturbation must fill the lower coefficients");
        let lower = self
            .lower
            .iter()
            .zip(extra)
            .map(|(a, b)| self.ring.add(a, b))
            .collect();
        MonicPoly { ring: self.ring.clone(), lower }
    }

    /// `X^k · self`.
    pub fn shift(&self, k: usize) -> Self {
        let mut lower = self.lower.clone();
        lower.extend(std::iter::repeat_n(self.ring.zero(), k));
        MonicPoly { ring: self.ring.clone(), lower }
    }

    pub fn render(&self) -> String {
        let parts: Vec<String> = self.full_coefficients().iter().map(|c| self.ring.render(c)).collect();
        format!("[{}]", parts.join(", "))
    }
}

impl MonicPoly<LocalizedRationals> {
    /// Integer polynomial from all coefficients, leading `1` first.
    pub fn from_integers(p: u64, coeffs: &[i64]) -> Result<Self, PolyError> {
        let ring = LocalizedRationals::new(p).map_err(|e| PolyError::NotInRing(e.to_string()))?;
        let elems = coeffs.iter().map(|&c| ring.from_integer(&BigInt::from(c))).collect();
        Self::from_full(ring, elems)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_arith::rational_from_int;

    #[test]
    fn elementary_accessor() {
        let q = MonicPoly::from_integers(2, &[1, 3, 5, 2, 6]).unwrap();
        let vals: Vec<_> = (0..=6).map(|n| q.e(n)).collect();
        let expected: Vec<_> = [1, -3, 5, -2, 6, 0, 0].into_iter().map(rational_from_int).collect();
        assert_eq!(vals, expected);
    }

    #[test]
    fn rejects_non_monic() {
        assert_eq!(MonicPoly::from_integers(2, &[2, 1]), Err(PolyError::NotMonic));
        assert_eq!(MonicPoly::from_integers(2, &[]), Err(PolyError::Empty));
    }

    #[test]
    fn product_matches_hand_expansion() {
        // (X^2 + 2X) (X^2 + X + 3) - (4X - 6) = X^4 + 3X^3 + 5X^2 + 2X + 6
        let p = MonicPoly::from_integers(2, &[1, 1, 3]).unwrap();
        let s = MonicPoly::from_integers(2, &[1, 2, 0]).unwrap();
        let prod = s.mul(&p);
        let ring = *p.ring();
        let q = prod.add_lower(&[0, 0, -4, 6].map(|c| ring.from_i64(c)));
        assert_eq!(q, MonicPoly::from_integers(2, &[1, 3, 5, 2, 6]).unwrap());
    }
}
