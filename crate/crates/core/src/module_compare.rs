//! Operators on finite free modules: traces of powers, characteristic
//! polynomials, semisimplification comparison, invariant factors mod `p`,
//! and recovery of eigenvalue multiplicities from traces over a Galois ring.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::exact_arith::{
    ensure_prime, teichmueller, vp_integer, vp_u64, ArithError, CoefficientRing, GaloisRing, GaloisRingElement,
    Valuation,
};
use crate::fpoly::FpPoly;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModuleError {
    #[error("matrix is not square: row {row} has {len} entries, expected {dim}")]
    NotSquare { row: usize, len: usize, dim: usize },
    #[error("range {range} is below rank M1 + rank N2 = {needed}")]
    RangeTooSmall { range: u64, needed: u64 },
    #[error("expected traces for n = 0..={needed}, got {got}")]
    NotEnoughTraces { needed: u64, got: usize },
    #[error("trace {n} is not in the ring GR({p}^{precision}, {degree})")]
    ForeignTrace { n: usize, p: u64, precision: u32, degree: u32 },
    #[error("stage {stage}: trace {n} is not divisible by p^{stage}")]
    NotDivisible { stage: u32, n: u64 },
    #[error("stage {stage}: the character system has no solution in F_p")]
    Inconsistent { stage: u32 },
    #[error("recovered multiplicities do not reproduce trace {n}")]
    ResynthesisMismatch { n: u64 },
    #[error("trace verdict {traces} disagrees with characteristic polynomial verdict {oracle}")]
    OracleDisagreement { traces: bool, oracle: bool },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// A square integer matrix; `0 × 0` is allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerMatrix {
    rows: Vec<Vec<BigInt>>,
}

impl IntegerMatrix {
    pub fn new(rows: Vec<Vec<BigInt>>) -> Result<Self, ModuleError> {
        let dim = rows.len();
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(ModuleError::NotSquare { row, len: r.len(), dim });
        }
        Ok(IntegerMatrix { rows })
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self, ModuleError> {
        Self::new(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    pub fn zero(d: usize) -> Self {
        IntegerMatrix { rows: vec![vec![BigInt::zero(); d]; d] }
    }

    pub fn identity(d: usize) -> Self {
        Self::scalar(d, 1)
    }

    pub fn scalar(d: usize, a: i64) -> Self {
        Self::diagonal(&vec![a; d])
    }

    pub fn diagonal(entries: &[i64]) -> Self {
        let mut m = Self::zero(entries.len());
        for (i, &a) in entries.iter().enumerate() {
            m.rows[i][i] = BigInt::from(a);
        }
        m
    }

    /// Companion matrix of the monic polynomial with integer coefficients
    /// given leading first (the leading 1 included); its characteristic
    /// polynomial is that polynomial.
    pub fn companion(coeffs: &[i64]) -> Self {
        assert_eq!(coeffs.first(), Some(&1), "companion matrix needs a monic polynomial");
        let d = coeffs.len() - 1;
        let mut m = Self::zero(d);
        for i in 1..d {
            m.rows[i][i - 1] = BigInt::one();
        }
        for i in 0..d {
            // column d-1 holds -a_d, .., -a_1 from top to bottom
            m.rows[i][d - 1] = -BigInt::from(coeffs[d - i]);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.dim();
        assert_eq!(d, other.dim(), "dimension mismatch");
        let mut out = Self::zero(d);
        for i in 0..d {
            for k in 0..d {
                let a = &self.rows[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    out.rows[i][j] += a * &other.rows[k][j];
                }
            }
        }
        out
    }

    pub fn trace(&self) -> BigInt {
        (0..self.dim()).map(|i| &self.rows[i][i]).sum()
    }
}

/// JSON form: an array of rows of integers. Entries outside the `i64`
/// range are written as decimal strings.
impl Serialize for IntegerMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<JsonInt>> =
            self.rows.iter().map(|r| r.iter().map(|x| JsonInt(x.clone())).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntegerMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<JsonInt>> = Vec::deserialize(d)?;
        IntegerMatrix::new(rows.into_iter().map(|r| r.into_iter().map(|x| x.0).collect()).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// Arbitrary-precision integer as a JSON number when it fits in `i64`,
/// otherwise as a string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JsonInt(pub BigInt);

impl Serialize for JsonInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) => s.serialize_i64(v),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for JsonInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(JsonInt(BigInt::from(v))),
            Raw::Str(s) => s.trim().parse().map(JsonInt).map_err(serde::de::Error::custom),
        }
    }
}

/// `tr(T^n)` for `n = 0..=N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceProfile {
    pub traces: Vec<JsonInt>,
}

impl TraceProfile {
    pub fn get(&self, n: usize) -> &BigInt {
        &self.traces[n].0
    }
}

pub fn trace_powers(m: &IntegerMatrix, up_to: usize) -> TraceProfile {
    let mut traces = vec![JsonInt(BigInt::from(m.dim()))];
    let mut power = IntegerMatrix::identity(m.dim());
    for _ in 1..=up_to {
        power = power.mul(m);
        traces.push(JsonInt(power.trace()));
    }
    TraceProfile { traces }
}

/// `det(X·I - M)` over the integers by the division-free Samuelson-Berkowitz
/// recursion; coefficients leading first, so the result starts with 1.
pub fn charpoly(m: &IntegerMatrix) -> Vec<BigInt> {
    let n = m.dim();
    let a = &m.rows;
    let mut poly = vec![BigInt::one()];
    for k in (0..n).rev() {
        let size = n - k;
        // column of the Toeplitz factor: 1, -a_kk, -R C, -R A1 C, ..
        let mut column = vec![BigInt::one(), -a[k][k].clone()];
        let mut w: Vec<BigInt> = (k + 1..n).map(|i| a[i][k].clone()).collect();
        for _ in 2..=size {
            let rc: BigInt = (k + 1..n).zip(&w).map(|(j, wj)| &a[k][j] * wj).sum();
            column.push(-rc);
            w = (k + 1..n)
                .map(|i| (k + 1..n).zip(&w).map(|(j, wj)| &a[i][j] * wj).sum())
                .collect();
        }
        let mut next = vec![BigInt::zero(); size + 1];
        for (i, slot) in next.iter_mut().enumerate() {
            for (j, c) in poly.iter().enumerate() {
                if i >= j {
                    *slot += &column[i - j] * c;
                }
            }
        }
        poly = next;
    }
    poly
}

fn reduce_mod(x: &BigInt, p: u64) -> u64 {
    x.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits")
}

/// `det(X·I - M)` reduced mod `p`.
pub fn charpoly_mod_p(m: &IntegerMatrix, p: u64) -> FpPoly {
    let low_first = charpoly(m).iter().rev().map(|c| reduce_mod(c, p)).collect();
    FpPoly::from_coeffs(p, low_first)
}

/// One trace congruence `v_p(δ_n) ≥ 1 + v_p(n)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: u64,
    pub difference: JsonInt,
    pub achieved: Valuation,
    pub required: Valuation,
    pub pass: bool,
}

fn trace_row(n: u64, difference: BigInt, p: u64) -> TraceRow {
    let achieved: Valuation = vp_integer(&difference, p).into();
    let required = if n == 0 {
        Valuation::Infinite
    } else {
        Valuation::integer(1 + vp_u64(n, p) as i64)
    };
    TraceRow { n, pass: achieved >= required, achieved, required, difference: JsonInt(difference) }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SsComparison {
    pub prime: u64,
    pub dimensions: [usize; 2],
    pub rows: Vec<TraceRow>,
    pub charpoly_m: FpPoly,
    pub charpoly_n: FpPoly,
    /// Irreducible factors of the two characteristic polynomials mod `p`,
    /// for reporting; absent when factoring is out of reach.
    pub factors_m: Option<Vec<Factor>>,
    pub factors_n: Option<Vec<Factor>>,
    /// Trace congruences `tr(T^n|M) ≡ tr(T^n|N) mod n p` for `1 ≤ n ≤ d`.
    pub verdict: bool,
    /// Equality of the characteristic polynomials mod `p`.
    pub oracle: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub factor: FpPoly,
    pub multiplicity: u32,
}

fn factor_list(f: &FpPoly) -> Option<Vec<Factor>> {
    let factors = f.factor()?;
    Some(factors.into_iter().map(|(factor, multiplicity)| Factor { factor, multiplicity }).collect())
}

/// Whether `M ⊗ F_p` and `N ⊗ F_p` have isomorphic semisimplifications,
/// decided from traces and cross-checked against characteristic polynomials.
///
/// `(p)` is a divided-power ideal of `Z_(p)`, so the two verdicts must agree;
/// a disagreement is reported as [`ModuleError::OracleDisagreement`].
pub fn ss_isomorphic(m: &IntegerMatrix, n: &IntegerMatrix, p: u64) -> Result<SsComparison, ModuleError> {
    ensure_prime(p)?;
    let charpoly_m = charpoly_mod_p(m, p);
    let charpoly_n = charpoly_mod_p(n, p);
    let oracle = charpoly_m == charpoly_n;
    let (rows, verdict) = if m.dim() != n.dim() {
        (vec![], false)
    } else {
        let d = m.dim();
        let tm = trace_powers(m, d);
        let tn = trace_powers(n, d);
        let rows: Vec<TraceRow> =
            (1..=d).map(|k| trace_row(k as u64, tm.get(k) - tn.get(k), p)).collect();
        let verdict = rows.iter().all(|r| r.pass);
        (rows, verdict)
    };
    if verdict != oracle {
        return Err(ModuleError::OracleDisagreement { traces: verdict, oracle });
    }
    Ok(SsComparison {
        prime: p,
        dimensions: [m.dim(), n.dim()],
        rows,
        factors_m: factor_list(&charpoly_m),
        factors_n: factor_list(&charpoly_n),
        charpoly_m,
        charpoly_n,
        verdict,
        oracle,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualComparison {
    pub prime: u64,
    pub range: u64,
    pub ranks: [usize; 4],
    pub rows: Vec<TraceRow>,
    pub verdict: bool,
    /// First `n` whose congruence fails.
    pub first_failure: Option<u64>,
}

/// Four-term trace congruence
/// `v_p(tr(T^n|M1) - tr(T^n|N1) - tr(T^n|M2) + tr(T^n|N2)) ≥ 1 + v_p(n)`
/// for `0 ≤ n ≤ N`. At `n = 0` it states the rank identity.
///
/// A true verdict means `W_1^ss ≅ W_2^ss` for `W_i = M̄_i / ι_i(N̄_i)`
/// provided the equivariant embeddings `ι_i` exist. Establishing those
/// embeddings is the caller's obligation; [`embedding_possible`] only checks
/// a necessary invariant-factor condition.
pub fn virtual_compare(
    m1: &IntegerMatrix,
    n1: &IntegerMatrix,
    m2: &IntegerMatrix,
    n2: &IntegerMatrix,
    p: u64,
    range: u64,
) -> Result<VirtualComparison, ModuleError> {
    ensure_prime(p)?;
    let needed = (m1.dim() + n2.dim()) as u64;
    if range < needed {
        return Err(ModuleError::RangeTooSmall { range, needed });
    }
    let r = range as usize;
    let [t1, s1, t2, s2] = [m1, n1, m2, n2].map(|m| trace_powers(m, r));
    let rows: Vec<TraceRow> = (0..=r)
        .map(|k| trace_row(k as u64, t1.get(k) - s1.get(k) - t2.get(k) + s2.get(k), p))
        .collect();
    let first_failure = rows.iter().find(|row| !row.pass).map(|row| row.n);
    Ok(VirtualComparison {
        prime: p,
        range,
        ranks: [m1.dim(), n1.dim(), m2.dim(), n2.dim()],
        rows,
        verdict: first_failure.is_none(),
        first_failure,
    })
}

/// Non-unit invariant factors of `X·I - M` over `F_p[X]`, monic, in
/// ascending divisibility order (each divides the next). Their product is
/// `charpoly_mod_p(M)`.
pub fn invariant_factors_mod_p(m: &IntegerMatrix, p: u64) -> Vec<FpPoly> {
    let d = m.dim();
    let mut a: Vec<Vec<FpPoly>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let c = FpPoly::constant(p, (p - reduce_mod(&m.rows[i][j], p)) % p);
                    if i == j {
                        c.add(&FpPoly::x(p))
                    } else {
                        c
                    }
                })
                .collect()
        })
        .collect();
    smith_diagonal(&mut a);
    let mut factors: Vec<FpPoly> = (0..d)
        .map(|i| a[i][i].monic())
        .filter(|f| f.degree().is_some_and(|deg| deg > 0))
        .collect();
    factors.sort_by_key(|f| f.degree());
    factors
}

/// In-place reduction of a square matrix over `F_p[X]` to Smith normal form.
fn smith_diagonal(a: &mut [Vec<FpPoly>]) {
    let d = a.len();
    for t in 0..d {
        loop {
            // pivot: nonzero entry of least degree in the trailing block
            let pivot = (t..d)
                .flat_map(|i| (t..d).map(move |j| (i, j)))
                .filter(|&(i, j)| !a[i][j].is_zero())
                .min_by_key(|&(i, j)| a[i][j].degree());
            let Some((pi, pj)) = pivot else { return };
            a.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            let mut dirty = false;
            for i in t + 1..d {
                if a[i][t].is_zero() {
                    continue;
                }
                let (q, _) = a[i][t].div_rem(&a[t][t]);
                for j in t..d {
                    let sub = q.mul(&a[t][j]);
                    a[i][j] = a[i][j].sub(&sub);
                }
                dirty |= !a[i][t].is_zero();
            }
            for j in t + 1..d {
                if a[t][j].is_zero() {
                    continue;
                }
                let (q, _) = a[t][j].div_rem(&a[t][t]);
                for row in a.iter_mut().skip(t) {
                    let sub = q.mul(&row[t]);
                    row[j] = row[j].sub(&sub);
                }
                dirty |= !a[t][j].is_zero();
            }
            if dirty {
                continue;
            }
            let offending = (t + 1..d)
                .flat_map(|i| (t + 1..d).map(move |j| (i, j)))
                .find(|&(i, j)| !a[t][t].divides(&a[i][j]));
            match offending {
                Some((i, _)) => {
                    for j in t..d {
                        let s = a[t][j].add(&a[i][j]);
                        a[t][j] = s;
                    }
                }
                None => break,
            }
        }
    }
}

/// Necessary condition for an `F_p[T]`-equivariant embedding `N̄ ↪ M̄`: the
/// `i`-th largest invariant factor of `N` divides the `i`-th largest of `M`.
pub fn embedding_possible(n: &IntegerMatrix, m: &IntegerMatrix, p: u64) -> bool {
    let fn_ = invariant_factors_mod_p(n, p);
    let fm = invariant_factors_mod_p(m, p);
    if fn_.len() > fm.len() {
        return false;
    }
    fn_.iter().rev().zip(fm.iter().rev()).all(|(a, b)| a.divides(b))
}

/// Highest trace index read by [`recover_multiplicities`]: `p^{S-1}(q - 1)`.
///
/// Stage `s` reads the traces at `n = p^s·j` for `1 ≤ j ≤ q - 1`, where the
/// characters `x ↦ (x^{p^s})^j` of `F_q^×` form a full, invertible system.
/// The last stage `s = S - 1` therefore needs indices up to `p^{S-1}(q - 1)`.
pub fn trace_range(p: u64, precision: u32, degree: u32) -> u64 {
    p.pow(precision - 1) * (p.pow(degree) - 1)
}

/// Multiplicities `m(x) mod p^S` of the residues `x ∈ F_q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplicityVector {
    pub p: u64,
    pub precision: u32,
    pub degree: u32,
    /// Residue coefficient vector (low degree first) to multiplicity.
    #[serde(with = "multiplicity_entries")]
    pub multiplicities: BTreeMap<Vec<u64>, u64>,
}

mod multiplicity_entries {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Entry {
        residue: Vec<u64>,
        multiplicity: u64,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<Vec<u64>, u64>, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<Entry> =
            m.iter().map(|(r, &k)| Entry { residue: r.clone(), multiplicity: k }).collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Vec<u64>, u64>, D::Error> {
        let entries: Vec<Entry> = Vec::deserialize(d)?;
        Ok(entries.into_iter().map(|e| (e.residue, e.multiplicity)).collect())
    }
}

impl MultiplicityVector {
    /// All-zero multiplicities for every residue of `ring`.
    pub fn zero(ring: &GaloisRing) -> Self {
        MultiplicityVector {
            p: ring.prime(),
            precision: ring.precision(),
            degree: ring.degree(),
            multiplicities: ring.residue_field_elements().into_iter().map(|r| (r, 0)).collect(),
        }
    }

    pub fn get(&self, residue: &[u64]) -> u64 {
        self.multiplicities.get(residue).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.multiplicities.values().sum()
    }
}

impl fmt::Display for MultiplicityVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .multiplicities
            .iter()
            .filter(|(_, &m)| m != 0)
            .map(|(r, m)| format!("{r:?}x{m}"))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// `Σ_x m(x) t(x)^n` for `n = 0..=N`, with `t` the Teichmüller lift and
/// `t(0)^0 = 1`.
pub fn synthesize_traces(ring: &GaloisRing, mult: &MultiplicityVector, up_to: u64) -> Vec<GaloisRingElement> {
    let mut traces = vec![ring.element(&[]); up_to as usize + 1];
    for (residue, &m) in &mult.multiplicities {
        if m == 0 {
            continue;
        }
        let lift = teichmueller(&ring.element_from_u64(residue));
        let mut power = ring.element(&[1]);
        for slot in traces.iter_mut() {
            *slot = &*slot + &power.scale(m);
            power = &power * &lift;
        }
    }
    traces
}

/// Solves `A·x = b` over `F_q` (elements of a precision-1 Galois ring).
fn solve_over_residue_field(
    field: &GaloisRing,
    mut a: Vec<Vec<GaloisRingElement>>,
    mut b: Vec<GaloisRingElement>,
) -> Option<Vec<GaloisRingElement>> {
    let n = b.len();
    let q = field.residue_field_size();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].pow(q - 2);
        for j in col..n {
            a[col][j] = &a[col][j] * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for j in col..n {
                let t = &factor * &a[col][j];
                a[r][j] = &a[r][j] - &t;
            }
            let t = &factor * &b[col];
            b[r] = &b[r] - &t;
        }
    }
    Some(b)
}

/// Recovers `m(x) mod p^S` from `t_n = Σ_x m(x) t(x)^n`, `0 ≤ n ≤ p^{S-1}(q-1)`,
/// one base-`p` digit per stage.
///
/// At stage `s` the contribution of the digits found so far is subtracted,
/// the remainder at `n = p^s·j` is divided by `p^s` and reduced mod `p`,
/// giving `Σ_{x ≠ 0} m_s(x) (x^{p^s})^j` for `1 ≤ j ≤ q - 1`. That
/// Vandermonde system is solved over `F_q`; the digit at `x = 0` comes from
/// `n = 0`. The result is verified by resynthesizing every supplied trace.
pub fn recover_multiplicities(ring: &GaloisRing, traces: &[GaloisRingElement]) -> Result<MultiplicityVector, ModuleError> {
    let p = ring.prime();
    let s_max = ring.precision();
    let k = ring.degree();
    let q = ring.residue_field_size();
    let needed = trace_range(p, s_max, k);
    if (traces.len() as u64) < needed + 1 {
        return Err(ModuleError::NotEnoughTraces { needed, got: traces.len() });
    }
    if let Some(n) = traces.iter().position(|t| t.ring() != ring) {
        return Err(ModuleError::ForeignTrace { n, p, precision: s_max, degree: k });
    }
    let field = ring.with_precision(1)?;
    let residues = ring.residue_field_elements();
    let nonzero: Vec<&Vec<u64>> = residues.iter().filter(|r| r.iter().any(|&c| c != 0)).collect();
    let mut recovered = MultiplicityVector::zero(ring);

    for stage in 0..s_max {
        let ps = p.pow(stage);
        let known = synthesize_traces(ring, &recovered, needed);
        let residual_at = |n: u64| -> Result<GaloisRingElement, ModuleError> {
            let r = &traces[n as usize] - &known[n as usize];
            let reduced = r
                .divide_by_p_power(stage)
                .ok_or(ModuleError::NotDivisible { stage, n })?;
            Ok(reduced.reduce_to(&field))
        };
        // rows j = 1..q-1, columns the nonzero residues
        let matrix: Vec<Vec<GaloisRingElement>> = (1..q)
            .map(|j| {
                nonzero
                    .iter()
                    .map(|x| field.element_from_u64(x).pow(ps).pow(j))
                    .collect()
            })
            .collect();
        let rhs: Vec<GaloisRingElement> =
            (1..q).map(|j| residual_at(ps * j)).collect::<Result<_, _>>()?;
        let solution = solve_over_residue_field(&field, matrix, rhs).ok_or(ModuleError::Inconsistent { stage })?;
        let mut digit_sum = 0u64;
        for (x, value) in nonzero.iter().zip(&solution) {
            let digit = as_prime_field_scalar(value).ok_or(ModuleError::Inconsistent { stage })?;
            digit_sum += digit;
            *recovered.multiplicities.get_mut(*x).expect("residue present") += digit * ps;
        }
        let total = as_prime_field_scalar(&residual_at(0)?).ok_or(ModuleError::Inconsistent { stage })?;
        let zero_digit = (total + p * q - digit_sum % p) % p;
        let zero_key = vec![0u64; k as usize];
        *recovered.multiplicities.get_mut(&zero_key).expect("zero residue present") += zero_digit * ps;
    }

    let check = synthesize_traces(ring, &recovered, traces.len() as u64 - 1);
    if let Some(n) = (0..traces.len()).find(|&n| check[n] != traces[n]) {
        return Err(ModuleError::ResynthesisMismatch { n: n as u64 });
    }
    Ok(recovered)
}

/// The value as an element of `F_p ⊂ F_q`, if it lies there.
fn as_prime_field_scalar(x: &GaloisRingElement) -> Option<u64> {
    let c = x.coeffs();
    c[1..].iter().all(|&v| v == 0).then_some(c[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_arith::LocalizedRationals;
    use crate::poly::MonicPoly;
    use crate::symfunc::newton_power_sums;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn companion_traces_match_table() {
        let m = IntegerMatrix::companion(&[1, 1, 3]);
        let t = trace_powers(&m, 5);
        let got: Vec<BigInt> = t.traces.iter().map(|x| x.0.clone()).collect();
        assert_eq!(got, ints(&[2, -1, -5, 8, 7, -31]));
        let id = trace_powers(&IntegerMatrix::identity(3), 4);
        assert!(id.traces.iter().all(|x| x.0 == BigInt::from(3)));
        let z = trace_powers(&IntegerMatrix::zero(3), 4);
        assert_eq!(z.get(0), &BigInt::from(3));
        assert!(z.traces[1..].iter().all(|x| x.0.is_zero()));
    }

    #[test]
    fn charpoly_examples() {
        assert_eq!(charpoly(&IntegerMatrix::companion(&[1, 3, 5, 2, 6])), ints(&[1, 3, 5, 2, 6]));
        assert_eq!(charpoly(&IntegerMatrix::zero(0)), ints(&[1]));
        assert_eq!(charpoly(&IntegerMatrix::diagonal(&[2, 3])), ints(&[1, -5, 6]));
        let m = IntegerMatrix::from_i64(&[vec![1, 2], vec![3, 4]]).unwrap();
        assert_eq!(charpoly(&m), ints(&[1, -5, -2]));
        let q2 = charpoly_mod_p(&IntegerMatrix::companion(&[1, 3, 5, 2, 6]), 2);
        assert_eq!(q2.to_string(), "X^4 + X^3 + X^2");
    }

    /// `det(x·I - M)` for `x = 0..=d` by cofactor expansion, an independent
    /// oracle for small dimensions.
    fn determinant_values(m: &IntegerMatrix) -> Vec<BigInt> {
        fn det(a: &[Vec<BigInt>]) -> BigInt {
            let n = a.len();
            if n == 0 {
                return BigInt::one();
            }
            let mut total = BigInt::zero();
            for j in 0..n {
                let minor: Vec<Vec<BigInt>> = a[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| v.clone()).collect())
                    .collect();
                let term = &a[0][j] * det(&minor);
                if j % 2 == 0 {
                    total += term;
                } else {
                    total -= term;
                }
            }
            total
        }
        let d = m.dim();
        (0..=d as i64)
            .map(|x| {
                let a: Vec<Vec<BigInt>> = (0..d)
                    .map(|i| {
                        (0..d)
                            .map(|j| {
                                let base = -m.rows[i][j].clone();
                                if i == j {
                                    base + BigInt::from(x)
                                } else {
                                    base
                                }
                            })
                            .collect()
                    })
                    .collect();
                det(&a)
            })
            .collect()
    }

    #[test]
    fn charpoly_matches_determinant_evaluations() {
        let m = IntegerMatrix::from_i64(&[vec![2, -1, 0, 3], vec![1, 0, 4, -2], vec![0, 5, -3, 1], vec![7, 1, 1, 0]]).unwrap();
        let cp = charpoly(&m);
        let values = determinant_values(&m);
        for (x, v) in values.iter().enumerate() {
            let eval = cp.iter().fold(BigInt::zero(), |acc, c| acc * BigInt::from(x) + c);
            assert_eq!(&eval, v);
        }
    }

    #[test]
    fn traces_follow_newton_recurrence() {
        let m = IntegerMatrix::from_i64(&[vec![2, -1, 0], vec![1, 0, 4], vec![0, 5, -3]]).unwrap();
        let cp = charpoly(&m);
        let ring = LocalizedRationals::new(2).unwrap();
        let poly = MonicPoly::from_full(ring, cp.iter().map(|c| ring.from_integer(c)).collect()).unwrap();
        let sums = newton_power_sums(&poly, 12);
        let traces = trace_powers(&m, 12);
        for n in 0..=12 {
            assert_eq!(sums[n], ring.from_integer(traces.get(n)));
        }
    }

    #[test]
    fn ss_examples() {
        for p in [2u64, 3, 5] {
            let d = p as usize;
            let a = IntegerMatrix::scalar(d, 4);
            let b = IntegerMatrix::scalar(d, 4 + p as i64);
            let cmp = ss_isomorphic(&a, &b, p).unwrap();
            assert!(cmp.verdict && cmp.oracle);
        }
        let m = IntegerMatrix::companion(&[1, 3, 5, 2, 6]);
        let same = ss_isomorphic(&m, &m, 2).unwrap();
        assert!(same.verdict);
        let factors = same.factors_m.unwrap();
        assert_eq!(factors.len(), 2);
        assert_eq!((factors[0].factor.to_string(), factors[0].multiplicity), ("X".to_string(), 2));
        let cmp = ss_isomorphic(&IntegerMatrix::identity(2), &IntegerMatrix::diagonal(&[1, 2]), 2).unwrap();
        assert!(!cmp.verdict);
        assert_eq!(cmp.rows[0].achieved, Valuation::integer(0));
        assert!(!ss_isomorphic(&IntegerMatrix::identity(2), &IntegerMatrix::identity(3), 2).unwrap().verdict);
    }

    #[test]
    fn virtual_examples() {
        let m1 = IntegerMatrix::diagonal(&[1, 3]);
        let n1 = IntegerMatrix::diagonal(&[1]);
        let m2 = IntegerMatrix::diagonal(&[1]);
        let n2 = IntegerMatrix::zero(0);
        let res = virtual_compare(&m1, &n1, &m2, &n2, 2, 10).unwrap();
        assert!(res.verdict);
        for row in &res.rows[1..] {
            let expected = BigInt::from(3).pow(row.n as u32) - 1;
            assert_eq!(row.difference.0, expected);
        }
        let bad = virtual_compare(&IntegerMatrix::diagonal(&[1, 2]), &n1, &IntegerMatrix::diagonal(&[3]), &n2, 2, 8).unwrap();
        assert_eq!(bad.first_failure, Some(1));
        assert!(virtual_compare(&m1, &m1, &n1, &n1, 3, 4).unwrap().verdict);
        assert_eq!(
            virtual_compare(&m1, &n1, &m2, &n2, 2, 1),
            Err(ModuleError::RangeTooSmall { range: 1, needed: 2 })
        );
    }

    #[test]
    fn invariant_factor_examples() {
        let f = invariant_factors_mod_p(&IntegerMatrix::companion(&[1, 1, 3]), 5);
        assert_eq!(f, vec![FpPoly::from_signed(5, &[3, 1, 1])]);
        let f = invariant_factors_mod_p(&IntegerMatrix::scalar(3, 2), 5);
        assert_eq!(f, vec![FpPoly::linear(5, 2); 3]);
        let f = invariant_factors_mod_p(&IntegerMatrix::diagonal(&[1, 1, 2]), 3);
        assert_eq!(f, vec![FpPoly::linear(3, 1), FpPoly::linear(3, 1).mul(&FpPoly::linear(3, 2))]);
        assert!(invariant_factors_mod_p(&IntegerMatrix::zero(0), 3).is_empty());
    }

    #[test]
    fn embedding_examples() {
        let big = IntegerMatrix::diagonal(&[1, 1, 2]);
        assert!(embedding_possible(&IntegerMatrix::diagonal(&[1]), &big, 3));
        assert!(embedding_possible(&IntegerMatrix::diagonal(&[1, 1]), &big, 3));
        assert!(!embedding_possible(&IntegerMatrix::diagonal(&[2, 2]), &big, 3));
        assert!(embedding_possible(&IntegerMatrix::zero(0), &big, 3));
    }

    #[test]
    fn trace_range_values() {
        assert_eq!(trace_range(3, 1, 1), 2);
        assert_eq!(trace_range(2, 2, 1), 2);
        assert_eq!(trace_range(3, 3, 2), 72);
    }

    fn mv(ring: &GaloisRing, entries: &[(&[u64], u64)]) -> MultiplicityVector {
        let mut m = MultiplicityVector::zero(ring);
        for (r, k) in entries {
            m.multiplicities.insert(r.to_vec(), *k);
        }
        m
    }

    #[test]
    fn recovery_small_examples() {
        let ring = GaloisRing::new(3, 1, 1, None).unwrap();
        let traces: Vec<_> = [0i64, 1, 0].iter().map(|&t| ring.element(&[t])).collect();
        let got = recover_multiplicities(&ring, &traces).unwrap();
        assert_eq!(got, mv(&ring, &[(&[1], 2), (&[2], 1)]));

        let ring = GaloisRing::new(2, 2, 1, None).unwrap();
        let traces: Vec<_> = [0i64, 3, 3].iter().map(|&t| ring.element(&[t])).collect();
        let got = recover_multiplicities(&ring, &traces).unwrap();
        assert_eq!(got, mv(&ring, &[(&[1], 3), (&[0], 1)]));

        let ring = GaloisRing::new(5, 2, 1, None).unwrap();
        let zeros = vec![ring.element(&[]); trace_range(5, 2, 1) as usize + 1];
        assert_eq!(recover_multiplicities(&ring, &zeros).unwrap(), MultiplicityVector::zero(&ring));
    }

    #[test]
    fn recovery_round_trip_in_extension() {
        let ring = GaloisRing::new(3, 2, 2, None).unwrap();
        let m = mv(&ring, &[(&[0, 1], 4), (&[2, 2], 7), (&[0, 0], 2), (&[1, 0], 1)]);
        let traces = synthesize_traces(&ring, &m, trace_range(3, 2, 2));
        assert_eq!(recover_multiplicities(&ring, &traces).unwrap(), m);
    }

    #[test]
    fn recovery_rejects_bad_traces() {
        let ring = GaloisRing::new(3, 1, 1, None).unwrap();
        let short = vec![ring.element(&[0]); 2];
        assert!(matches!(recover_multiplicities(&ring, &short), Err(ModuleError::NotEnoughTraces { .. })));
        // extra trace inconsistent with the recovered vector
        let mut traces: Vec<_> = [0i64, 1, 0].iter().map(|&t| ring.element(&[t])).collect();
        traces.push(ring.element(&[2]));
        assert!(matches!(recover_multiplicities(&ring, &traces), Err(ModuleError::ResynthesisMismatch { n: 3 })));
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = IntegerMatrix::from_i64(&[vec![1, -2], vec![3, 4]]).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[1,-2],[3,4]]");
        assert_eq!(serde_json::from_str::<IntegerMatrix>(&json).unwrap(), m);
        let empty: IntegerMatrix = serde_json::from_str("[]").unwrap();
        assert_eq!(empty.dim(), 0);
        assert!(serde_json::from_str::<IntegerMatrix>("[[1,2]]").is_err());
    }
}
