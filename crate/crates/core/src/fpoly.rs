//! Dense univariate polynomials over the prime field `F_p`.
//!
//! Coefficients are stored lowest degree first and kept normalized: no
//! trailing zeros, so the zero polynomial has an empty coefficient vector.

use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FpPoly {
    p: u64,
    coeffs: Vec<u64>,
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub(crate) fn inv_mod_prime(a: u64, p: u64) -> u64 {
    assert!(!a.is_multiple_of(p), "zero has no inverse mod {p}");
    let mut result = 1u64;
    let mut base = a % p;
    let mut exp = p - 2;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    result
}

impl FpPoly {
    /// Builds a polynomial from coefficients listed lowest degree first.
    /// Coefficients are reduced mod `p`.
    pub fn from_coeffs(p: u64, coeffs: Vec<u64>) -> Self {
        let mut poly = FpPoly {
            p,
            coeffs: coeffs.into_iter().map(|c| c % p).collect(),
        };
        poly.normalize();
        poly
    }

    /// Builds a polynomial from signed integer coefficients, lowest degree first.
    pub fn from_signed(p: u64, coeffs: &[i64]) -> Self {
        let reduced = coeffs
            .iter()
            .map(|&c| c.rem_euclid(p as i64) as u64)
            .collect();
        Self::from_coeffs(p, reduced)
    }

    pub fn zero(p: u64) -> Self {
        FpPoly { p, coeffs: vec![] }
    }

    pub fn one(p: u64) -> Self {
        Self::constant(p, 1)
    }

    pub fn constant(p: u64, c: u64) -> Self {
        Self::from_coeffs(p, vec![c])
    }

    /// The monomial `X`.
    pub fn x(p: u64) -> Self {
        Self::from_coeffs(p, vec![0, 1])
    }

    /// `X - a`.
    pub fn linear(p: u64, a: u64) -> Self {
        Self::from_coeffs(p, vec![(p - a % p) % p, 1])
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// Coefficients, lowest degree first.
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> u64 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> u64 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    fn normalize(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| (self.coeff(i) + other.coeff(i)) % self.p)
            .collect();
        Self::from_coeffs(self.p, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| (self.coeff(i) + self.p - other.coeff(i)) % self.p)
            .collect();
        Self::from_coeffs(self.p, coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.p);
        }
        let mut out = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = (out[i + j] + mul_mod(a, b, self.p)) % self.p;
            }
        }
        Self::from_coeffs(self.p, out)
    }

    pub fn scale(&self, c: u64) -> Self {
        Self::from_coeffs(
            self.p,
            self.coeffs.iter().map(|&a| mul_mod(a, c % self.p, self.p)).collect(),
        )
    }

    /// Scales to leading coefficient 1. The zero polynomial is returned unchanged.
    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(inv_mod_prime(self.leading(), self.p))
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == 1
    }

    /// Euclidean division. Panics on division by zero.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let p = self.p;
        let dd = divisor.coeffs.len() - 1;
        let lead_inv = inv_mod_prime(divisor.leading(), p);
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Self::zero(p), self.clone());
        }
        let mut quot = vec![0u64; rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            let c = mul_mod(rem[i], lead_inv, p);
            if c == 0 {
                continue;
            }
            quot[i - dd] = c;
            for (j, &b) in divisor.coeffs.iter().enumerate() {
                let idx = i - dd + j;
                rem[idx] = (rem[idx] + p - mul_mod(c, b, p)) % p;
            }
        }
        (Self::from_coeffs(p, quot), Self::from_coeffs(p, rem))
    }

    pub fn rem(&self, divisor: &Self) -> Self {
        self.div_rem(divisor).1
    }

    pub fn divides(&self, other: &Self) -> bool {
        if self.is_zero() {
            return other.is_zero();
        }
        other.rem(self).is_zero()
    }

    /// Monic greatest common divisor (zero only if both inputs are zero).
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `self^exp mod modulus`.
    pub fn pow_mod(&self, mut exp: u128, modulus: &Self) -> Self {
        let mut result = Self::one(self.p).rem(modulus);
        let mut base = self.rem(modulus);
        while exp > 0 {
            if exp & 1 == 1 {
                result = result.mul(&base).rem(modulus);
            }
            base = base.mul(&base).rem(modulus);
            exp >>= 1;
        }
        result
    }

    pub fn eval(&self, x: u64) -> u64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0u64, |acc, &c| (mul_mod(acc, x, self.p) + c) % self.p)
    }

    /// Rabin's irreducibility test for a polynomial of positive degree.
    pub fn is_irreducible(&self) -> bool {
        let Some(k) = self.degree() else {
            return false;
        };
        if k == 0 {
            return false;
        }
        let f = self.monic();
        let p = self.p as u128;
        let x = Self::x(self.p);
        let frob = |times: usize| -> Self {
            let mut y = x.clone();
            for _ in 0..times {
                y = y.pow_mod(p, &f);
            }
            y
        };
        if !frob(k).sub(&x).rem(&f).is_zero() {
            return false;
        }
        prime_divisors(k as u64).into_iter().all(|r| {
            let h = frob(k / r as usize).sub(&x);
            f.gcd(&h).is_one()
        })
    }

    /// Monic irreducible factors with multiplicities, ordered by degree and
    /// then by coefficients. The unit factor is dropped.
    ///
    /// Factors are grouped by degree with `gcd(f, X^{p^d} - X)`; a group of
    /// several degree-`d` factors is split by trial division over all monic
    /// degree-`d` candidates, so `None` is returned when `p^d` exceeds
    /// [`FACTOR_SEARCH_LIMIT`].
    pub fn factor(&self) -> Option<Vec<(FpPoly, u32)>> {
        assert!(!self.is_zero(), "cannot factor the zero polynomial");
        let p = self.p;
        let x = Self::x(p);
        let mut f = self.monic();
        let mut out = Vec::new();
        let mut frob = x.clone();
        let mut d = 1;
        while f.degree().unwrap_or(0) >= 2 * d {
            frob = frob.pow_mod(p as u128, &f);
            let group = f.gcd(&frob.sub(&x));
            if !group.is_one() {
                let pieces = if group.degree() == Some(d) {
                    vec![group]
                } else {
                    split_equal_degree(&group, d)?
                };
                for g in pieces {
                    let mut mult = 0;
                    while g.divides(&f) {
                        f = f.div_rem(&g).0;
                        mult += 1;
                    }
                    out.push((g, mult));
                }
                frob = frob.rem(&f);
            }
            d += 1;
        }
        if f.degree().unwrap_or(0) > 0 {
            out.push((f, 1));
        }
        out.sort_by(|(a, _), (b, _)| a.degree().cmp(&b.degree()).then_with(|| a.coeffs.cmp(&b.coeffs)));
        Some(out)
    }
}

/// Largest candidate count tried when splitting equal-degree factors.
pub const FACTOR_SEARCH_LIMIT: u64 = 1 << 20;

fn split_equal_degree(group: &FpPoly, d: usize) -> Option<Vec<FpPoly>> {
    let p = group.p;
    let count = p.checked_pow(d as u32).filter(|&c| c <= FACTOR_SEARCH_LIMIT)?;
    let mut found = Vec::new();
    let mut rest = group.clone();
    for index in 0..count {
        let mut coeffs = Vec::with_capacity(d + 1);
        let mut i = index;
        for _ in 0..d {
            coeffs.push(i % p);
            i /= p;
        }
        coeffs.push(1);
        let candidate = FpPoly::from_coeffs(p, coeffs);
        if candidate.divides(&rest) {
            rest = rest.div_rem(&candidate).0;
            found.push(candidate);
            if rest.is_one() {
                break;
            }
        }
    }
    Some(found)
}

fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = vec![];
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

impl fmt::Display for FpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (i, c) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => write!(f, "X")?,
                (1, c) => write!(f, "{c}X")?,
                (i, 1) => write!(f, "X^{i}")?,
                (i, c) => write!(f, "{c}X^{i}")?,
            }
        }
        Ok(())
    }
}

/// JSON form: `{"p": 2, "coefficients": [1, 1, 1, 0, 0]}` with coefficients
/// listed from the leading term down to the constant term.
impl Serialize for FpPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("FpPoly", 3)?;
        s.serialize_field("p", &self.p)?;
        let high_first: Vec<u64> = self.coeffs.iter().rev().copied().collect();
        s.serialize_field("coefficients", &high_first)?;
        s.serialize_field("display", &self.to_string())?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for FpPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            p: u64,
            coefficients: Vec<u64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.p < 2 {
            return Err(serde::de::Error::custom("modulus must be at least 2"));
        }
        let low_first = raw.coefficients.into_iter().rev().collect();
        Ok(FpPoly::from_coeffs(raw.p, low_first))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_identity() {
        let a = FpPoly::from_signed(5, &[3, 0, 2, 1, 4]);
        let b = FpPoly::from_signed(5, &[1, 2, 1]);
        let (q, r) = a.div_rem(&b);
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.degree().unwrap_or(0) < 2);
    }

    #[test]
    fn gcd_of_shared_factor() {
        let f = FpPoly::linear(7, 3).mul(&FpPoly::linear(7, 5));
        let g = FpPoly::linear(7, 3).mul(&FpPoly::linear(7, 1));
        assert_eq!(f.gcd(&g), FpPoly::linear(7, 3));
    }

    #[test]
    fn irreducibility_matches_root_search_for_small_degree() {
        for p in [2u64, 3, 5] {
            // all monic cubics: irreducible iff no root
            for c0 in 0..p {
                for c1 in 0..p {
                    for c2 in 0..p {
                        let f = FpPoly::from_coeffs(p, vec![c0, c1, c2, 1]);
                        let has_root = (0..p).any(|x| f.eval(x) == 0);
                        assert_eq!(f.is_irreducible(), !has_root, "{f} over F_{p}");
                    }
                }
            }
        }
    }

    #[test]
    fn factorization_rebuilds_the_polynomial() {
        // X^4 + X^3 + X^2 = X^2 (X^2 + X + 1) over F_2
        let f = FpPoly::from_coeffs(2, vec![0, 0, 1, 1, 1]);
        let factors = f.factor().unwrap();
        assert_eq!(factors, vec![(FpPoly::x(2), 2), (FpPoly::from_coeffs(2, vec![1, 1, 1]), 1)]);
        for p in [2u64, 3, 5] {
            for seed in 0..40u64 {
                let coeffs: Vec<i64> = (0..7).map(|i| ((seed * 31 + i * 17 + seed * i * i) % 11) as i64 - 5).collect();
                let cube = FpPoly::from_signed(p, &coeffs[..3]).add(&FpPoly::from_coeffs(p, vec![0, 0, 0, 1]));
                // include repeated factors on purpose
                let f = FpPoly::from_signed(p, &coeffs).mul(&cube).mul(&cube);
                if f.is_zero() {
                    continue;
                }
                let factors = f.factor().unwrap();
                let product = factors.iter().fold(FpPoly::one(p), |acc, (g, m)| {
                    (0..*m).fold(acc, |a, _| a.mul(g))
                });
                assert_eq!(product, f.monic());
                assert!(factors.iter().all(|(g, _)| g.is_irreducible()));
            }
        }
    }

    #[test]
    fn quartic_product_of_quadratics_is_reducible() {
        let q = FpPoly::from_coeffs(2, vec![1, 1, 1]);
        assert!(q.is_irreducible());
        assert!(!q.mul(&q).is_irreducible());
    }

    #[test]
    fn display_is_readable() {
        let f = FpPoly::from_coeffs(2, vec![0, 0, 1, 1, 1]);
        assert_eq!(f.to_string(), "X^4 + X^3 + X^2");
    }
}
