//! Elementary versus deep power-sum congruences between monic polynomials.
//!
//! For an ideal `𝔞` of valuation `c` in a valuation ring with residue
//! characteristic `p`, the four conditions compared here are:
//!
//! 1. `e_n(P) ≡ e_n(Q) mod 𝔞` for all `n ≥ 1`;
//! 2. the same for `1 ≤ n ≤ max(deg P, deg Q)`;
//! 3. `p_n(P) ≡ p_n(Q) mod n𝔞` for all `n ≥ 1`;
//! 4. the same for `1 ≤ n ≤ max(deg P, deg Q)`.
//!
//! When `𝔞` is a divided-power ideal the four are equivalent. A report over
//! a range beyond the maximal degree evaluates (1) and (3) on that finite
//! range, which is a redundancy check rather than a proof.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_arith::{
    is_divided_power, rational_from_int, ArithError, CoefficientRing, EisensteinElement,
    EisensteinRing, IdealRing, IdealSpec, LocalizedRationals, Rational, Valuation,
};
use crate::poly::{MonicPoly, PolyError};
use crate::symfunc::newton_power_sums;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CongruenceError {
    #[error("P and Q are defined over different rings")]
    RingMismatch,
    #[error("the ideal lives in {ideal:?} but the polynomials are over {ring:?}")]
    IdealMismatch { ideal: IdealRing, ring: Option<IdealRing> },
    #[error("divided-power ideal but elementary and deep verdicts disagree")]
    TheoremViolation(Box<CongruenceReport>),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// One congruence test at index `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRow {
    pub n: u64,
    pub achieved: Valuation,
    pub required: Valuation,
    pub pass: bool,
}

fn check_compatible<R: CoefficientRing>(
    p: &MonicPoly<R>,
    q: &MonicPoly<R>,
    ideal: &IdealSpec,
) -> Result<(), CongruenceError> {
    if p.ring() != q.ring() {
        return Err(CongruenceError::RingMismatch);
    }
    let ring = p.ring().ideal_ring();
    if ring != Some(ideal.ring()) {
        return Err(CongruenceError::IdealMismatch { ideal: ideal.ring(), ring });
    }
    Ok(())
}

/// `v(e_n(P) - e_n(Q)) ≥ c` for `1 ≤ n ≤ N`.
pub fn check_elementary<R: CoefficientRing>(
    p: &MonicPoly<R>,
    q: &MonicPoly<R>,
    ideal: &IdealSpec,
    range: u64,
) -> Result<Vec<CheckRow>, CongruenceError> {
    check_compatible(p, q, ideal)?;
    let ring = p.ring();
    let required = Valuation::Finite(ideal.threshold().clone());
    Ok((1..=range)
        .map(|n| {
            let diff = ring.sub(&p.e(n as usize), &q.e(n as usize));
            let achieved = ring.valuation(&diff);
            CheckRow { n, pass: achieved >= required, achieved, required: required.clone() }
        })
        .collect())
}

/// `v(p_n(P) - p_n(Q)) ≥ c + v_p(n)` for `1 ≤ n ≤ N`, and from `n = 0`
/// (which demands `deg P = deg Q`) when `include_n0` is set.
pub fn check_deep_powersum<R: CoefficientRing>(
    p: &MonicPoly<R>,
    q: &MonicPoly<R>,
    ideal: &IdealSpec,
    range: u64,
    include_n0: bool,
) -> Result<Vec<CheckRow>, CongruenceError> {
    check_compatible(p, q, ideal)?;
    let ring = p.ring();
    let sp = newton_power_sums(p, range as usize);
    let sq = newton_power_sums(q, range as usize);
    let start = if include_n0 { 0 } else { 1 };
    Ok((start..=range)
        .map(|n| {
            let achieved = ring.valuation(&ring.sub(&sp[n as usize], &sq[n as usize]));
            let required = ideal.depth_for_multiple(n);
            CheckRow { n, pass: achieved >= required, achieved, required }
        })
        .collect())
}

/// One line of the full ledger, mirroring the worked-example table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: u64,
    pub required_depth: Valuation,
    pub e_p: String,
    pub e_q: String,
    pub p_p: String,
    pub p_q: String,
    pub elementary_valuation: Valuation,
    pub powersum_valuation: Valuation,
    pub elementary_pass: bool,
    pub deep_pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditions {
    /// Elementary congruences on the whole report range.
    pub condition_1: bool,
    /// Elementary congruences up to the maximal degree.
    pub condition_2: bool,
    /// Deep power-sum congruences on the whole report range.
    pub condition_3: bool,
    /// Deep power-sum congruences up to the maximal degree.
    pub condition_4: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CongruenceReport {
    pub prime: u64,
    pub ideal: IdealSpec,
    pub divided_power: bool,
    pub degrees: [usize; 2],
    pub max_degree: u64,
    pub range: u64,
    pub include_n0: bool,
    pub rows: Vec<ReportRow>,
    pub conditions: Conditions,
    /// Elementary and deep verdicts agree (on both ranges).
    pub consistent: bool,
}

impl CongruenceReport {
    /// Overall verdict of the theorem: conditions (2) and (4) both hold.
    pub fn verdict(&self) -> bool {
        self.conditions.condition_2 && self.conditions.condition_4
    }

    /// Tab-separated table: `n, c+v_p(n), e_n(P), e_n(Q), p_n(P), p_n(Q), v_p(diff)`.
    pub fn to_tsv(&self) -> String {
        let c = self.ideal.threshold();
        let depth_header = format!("{}+v_{}(n)", crate::exact_arith::format_rational(c), self.prime);
        let mut out = format!(
            "n\t{depth_header}\te_n(P)\te_n(Q)\tp_n(P)\tp_n(Q)\tv_{}(diff)\n",
            self.prime
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.n, r.required_depth, r.e_p, r.e_q, r.p_p, r.p_q, r.powersum_valuation
            ));
        }
        out
    }
}

/// Runs both checks and assembles the ledger for `0 ≤ n ≤ max(range, max deg)`.
///
/// Under a divided-power ideal a disagreement between the elementary and deep
/// verdicts contradicts a proved theorem and is returned as
/// [`CongruenceError::TheoremViolation`].
pub fn theorem_verdict_with_range<R: CoefficientRing>(
    p: &MonicPoly<R>,
    q: &MonicPoly<R>,
    ideal: &IdealSpec,
    range: Option<u64>,
    include_n0: bool,
) -> Result<CongruenceReport, CongruenceError> {
    check_compatible(p, q, ideal)?;
    let ring = p.ring();
    let max_degree = p.degree().max(q.degree()) as u64;
    let range = range.unwrap_or(max_degree).max(max_degree);
    let elementary = check_elementary(p, q, ideal, range)?;
    let deep = check_deep_powersum(p, q, ideal, range, true)?;
    let sp = newton_power_sums(p, range as usize);
    let sq = newton_power_sums(q, range as usize);

    let mut rows = Vec::with_capacity(range as usize + 1);
    for n in 0..=range {
        let (ev, epass) = if n == 0 {
            (Valuation::Infinite, true)
        } else {
            let row = &elementary[n as usize - 1];
            (row.achieved.clone(), row.pass)
        };
        let d = &deep[n as usize];
        rows.push(ReportRow {
            n,
            required_depth: d.required.clone(),
            e_p: ring.render(&p.e(n as usize)),
            e_q: ring.render(&q.e(n as usize)),
            p_p: ring.render(&sp[n as usize]),
            p_q: ring.render(&sq[n as usize]),
            elementary_valuation: ev,
            powersum_valuation: d.achieved.clone(),
            elementary_pass: epass,
            deep_pass: d.pass,
        });
    }

    let first = if include_n0 { 0 } else { 1 };
    let within = |upto: u64, f: fn(&ReportRow) -> bool| {
        rows.iter().filter(|r| r.n >= first && r.n <= upto).all(f)
    };
    let conditions = Conditions {
        condition_1: within(range, |r| r.elementary_pass),
        condition_2: within(max_degree, |r| r.elementary_pass),
        condition_3: within(range, |r| r.deep_pass),
        condition_4: within(max_degree, |r| r.deep_pass),
    };
    let consistent = conditions.condition_2 == conditions.condition_4
        && conditions.condition_1 == conditions.condition_3
        && conditions.condition_1 == conditions.condition_2;
    let report = CongruenceReport {
        prime: ideal.prime(),
        divided_power: is_divided_power(ideal),
        ideal: ideal.clone(),
        degrees: [p.degree(), q.degree()],
        max_degree,
        range,
        include_n0,
        rows,
        conditions,
        consistent,
    };
    if report.divided_power && !report.consistent {
        return Err(CongruenceError::TheoremViolation(Box::new(report)));
    }
    Ok(report)
}

/// [`theorem_verdict_with_range`] on `1 ≤ n ≤ max(deg P, deg Q)`.
pub fn theorem_verdict<R: CoefficientRing>(
    p: &MonicPoly<R>,
    q: &MonicPoly<R>,
    ideal: &IdealSpec,
) -> Result<CongruenceReport, CongruenceError> {
    theorem_verdict_with_range(p, q, ideal, None, false)
}

/// `X² + X + 3` and `X⁴ + 3X³ + 5X² + 2X + 6` over `Z_(2)`.
pub fn worked_example_pair() -> (MonicPoly<LocalizedRationals>, MonicPoly<LocalizedRationals>) {
    (
        MonicPoly::from_integers(2, &[1, 1, 3]).expect("monic"),
        MonicPoly::from_integers(2, &[1, 3, 5, 2, 6]).expect("monic"),
    )
}

/// The worked-example ledger: `p = 2`, `𝔞 = (2)`, `0 ≤ n ≤ 16`.
pub fn worked_example_report() -> Result<CongruenceReport, CongruenceError> {
    let (p, q) = worked_example_pair();
    let ideal = IdealSpec::localized(2, 1)?;
    theorem_verdict_with_range(&p, &q, &ideal, Some(16), false)
}

/// In `Z_(p)[α]/(α^e - p)`: `P = X^e - α X^{e-1}` and `Q = X^e`.
/// With `e = p`, the elementary functions agree mod `𝔪` but
/// `p_p(P) = α^p = p` misses `p𝔪`.
pub fn ramified_elementary_only(p: u64) -> Result<(MonicPoly<EisensteinRing>, MonicPoly<EisensteinRing>), CongruenceError> {
    let ring = EisensteinRing::new(p, p as u32)?;
    let e = p as usize;
    let mut lower = vec![ring.zero(); e];
    lower[0] = ring.neg(&ring.uniformizer());
    let big_p = MonicPoly::new(ring, lower)?;
    let big_q = MonicPoly::new(ring, vec![ring.zero(); e])?;
    Ok((big_p, big_q))
}

/// In `Z_(p)[α]/(α^p - p)`: `P = (X - (α + p - 1))(X + 1)^{p-1}` and `Q = X^p`.
/// The deep congruences hold for `1 ≤ n ≤ p` although `P ≢ Q mod 𝔪`.
pub fn ramified_deep_only(p: u64) -> Result<(MonicPoly<EisensteinRing>, MonicPoly<EisensteinRing>), CongruenceError> {
    let ring = EisensteinRing::new(p, p as u32)?;
    let root = ring.add(&ring.uniformizer(), &ring.from_i64(p as i64 - 1));
    let mut big_p = MonicPoly::linear(ring, &root);
    let minus_one = ring.from_i64(-1);
    for _ in 1..p {
        big_p = big_p.mul(&MonicPoly::linear(ring, &minus_one));
    }
    let big_q = MonicPoly::new(ring, vec![ring.zero(); p as usize])?;
    Ok((big_p, big_q))
}

/// How a random integer pair is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairFamily {
    /// `Q = P + p·R`.
    Perturbation,
    /// `Q = P·S + p·R` with `S` monic.
    MultiplePlusPerturbation,
    /// Independent `P` and `Q`.
    Unrelated,
}

pub const PAIR_FAMILIES: [PairFamily; 3] =
    [PairFamily::Perturbation, PairFamily::MultiplePlusPerturbation, PairFamily::Unrelated];

/// Highest degree produced by [`random_pair`].
pub const RANDOM_MAX_DEGREE: usize = 6;
/// Coefficients of the random building blocks lie in `[-9, 9]`.
pub const RANDOM_COEFF_BOUND: i64 = 9;

fn random_coeffs<G: Rng>(rng: &mut G, len: usize) -> Vec<i64> {
    (0..len).map(|_| rng.gen_range(-RANDOM_COEFF_BOUND..=RANDOM_COEFF_BOUND)).collect()
}

/// Random monic integer polynomial of the given degree, coefficients in `[-9, 9]`.
pub fn random_monic<G: Rng>(rng: &mut G, ring: LocalizedRationals, degree: usize) -> MonicPoly<LocalizedRationals> {
    let lower = random_coeffs(rng, degree).into_iter().map(rational_from_int).collect();
    MonicPoly::new(ring, lower).expect("integers lie in Z_(p)")
}

/// `p·R` added to the lower coefficients, `deg R < deg base`.
fn perturb<G: Rng>(rng: &mut G, base: &MonicPoly<LocalizedRationals>) -> MonicPoly<LocalizedRationals> {
    let p = base.ring().prime() as i64;
    let extra: Vec<Rational> = random_coeffs(rng, base.degree())
        .into_iter()
        .map(|c| rational_from_int(c * p))
        .collect();
    base.add_lower(&extra)
}

/// A random pair of monic integer polynomials of degree at most 6.
///
/// In the multiple family the cofactor `S` is congruent to a power of `X`
/// half the time, so that both verdicts are exercised.
pub fn random_pair<G: Rng>(
    rng: &mut G,
    family: PairFamily,
    p: u64,
) -> Result<(MonicPoly<LocalizedRationals>, MonicPoly<LocalizedRationals>), CongruenceError> {
    let ring = LocalizedRationals::new(p)?;
    Ok(match family {
        PairFamily::Perturbation => {
            let d = rng.gen_range(1..=RANDOM_MAX_DEGREE);
            let big_p = random_monic(rng, ring, d);
            let big_q = perturb(rng, &big_p);
            (big_p, big_q)
        }
        PairFamily::MultiplePlusPerturbation => {
            let d = rng.gen_range(1..=RANDOM_MAX_DEGREE);
            let k = rng.gen_range(0..=RANDOM_MAX_DEGREE - d);
            let big_p = random_monic(rng, ring, d);
            let s = if rng.gen_bool(0.5) {
                let lower = random_coeffs(rng, k)
                    .into_iter()
                    .map(|c| rational_from_int(c * p as i64))
                    .collect();
                MonicPoly::new(ring, lower)?
            } else {
                random_monic(rng, ring, k)
            };
            let big_q = perturb(rng, &big_p.mul(&s));
            (big_p, big_q)
        }
        PairFamily::Unrelated => {
            let d1 = rng.gen_range(1..=RANDOM_MAX_DEGREE);
            let d2 = rng.gen_range(1..=RANDOM_MAX_DEGREE);
            (random_monic(rng, ring, d1), random_monic(rng, ring, d2))
        }
    })
}

/// Random element `Σ c_i α^i` of `Z[α]` with `c_i ∈ [-bound, bound]`.
pub fn random_eisenstein_element<G: Rng>(rng: &mut G, ring: &EisensteinRing, bound: i64) -> EisensteinElement {
    let coeffs = (0..ring.ramification())
        .map(|_| rational_from_int(rng.gen_range(-bound..=bound)))
        .collect();
    ring.element(coeffs).expect("length matches the ramification")
}

/// Tally of a search for pairs separating the conditions in a ramified ring.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RamifiedSearchSummary {
    pub prime: u64,
    pub ramification: u32,
    pub trials: u64,
    pub seed: u64,
    pub extended_range: u64,
    /// Elementary congruences hold, deep ones fail.
    pub elementary_without_deep: u64,
    /// Deep congruences (4) hold, elementary ones fail.
    pub deep_without_elementary: u64,
    /// (4) holds but (3) fails on the extended range.
    pub deep_not_extending: u64,
    /// Up to three witnesses per category, rendered coefficient lists.
    pub witnesses: Vec<RamifiedWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RamifiedWitness {
    pub kind: String,
    pub p_poly: String,
    pub q_poly: String,
}

/// Randomized exploration in `Z_(p)[α]/(α^e - p)` with the maximal ideal.
///
/// `Q` is `X^d` plus a random element of `𝔪` in each lower coefficient, and
/// `P` is either `Q` plus a small random perturbation or independent. Both
/// (4) and (3) on `1 ≤ n ≤ extended_range` are recorded. This only collects
/// examples and makes no claim about the open implications.
pub fn search_ramified(
    p: u64,
    e: u32,
    trials: u64,
    seed: u64,
    extended_range: u64,
) -> Result<RamifiedSearchSummary, CongruenceError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let ring = EisensteinRing::new(p, e)?;
    let ideal = IdealSpec::maximal(IdealRing::Eisenstein { p, e })?;
    let alpha = ring.uniformizer();
    let mut summary = RamifiedSearchSummary {
        prime: p,
        ramification: e,
        trials,
        seed,
        extended_range,
        ..Default::default()
    };
    for _ in 0..trials {
        let d = rng.gen_range(1..=(p as usize + 1));
        let q_lower: Vec<_> = (0..d)
            .map(|_| ring.mul(&alpha, &random_eisenstein_element(&mut rng, &ring, 2)))
            .collect();
        let big_q = MonicPoly::new(ring, q_lower)?;
        let big_p = if rng.gen_bool(0.5) {
            let extra: Vec<_> = (0..d).map(|_| random_eisenstein_element(&mut rng, &ring, 1)).collect();
            big_q.add_lower(&extra)
        } else {
            let lower = (0..d).map(|_| random_eisenstein_element(&mut rng, &ring, 2)).collect();
            MonicPoly::new(ring, lower)?
        };
        let report = theorem_verdict_with_range(&big_p, &big_q, &ideal, Some(extended_range), false)?;
        let c = &report.conditions;
        let mut record = |kind: &str, counter: &mut u64| {
            *counter += 1;
            if summary_witness_count(&summary.witnesses, kind) < 3 {
                summary.witnesses.push(RamifiedWitness {
                    kind: kind.to_string(),
                    p_poly: big_p.render(),
                    q_poly: big_q.render(),
                });
            }
        };
        let mut ewd = 0;
        let mut dwe = 0;
        let mut dne = 0;
        if c.condition_2 && !c.condition_4 {
            record("elementary-without-deep", &mut ewd);
        }
        if c.condition_4 && !c.condition_2 {
            record("deep-without-elementary", &mut dwe);
        }
        if c.condition_4 && !c.condition_3 {
            record("deep-not-extending", &mut dne);
        }
        summary.elementary_without_deep += ewd;
        summary.deep_without_elementary += dwe;
        summary.deep_not_extending += dne;
    }
    Ok(summary)
}

fn summary_witness_count(witnesses: &[RamifiedWitness], kind: &str) -> usize {
    witnesses.iter().filter(|w| w.kind == kind).count()
}
