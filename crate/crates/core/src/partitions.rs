//! Integer partitions, their statistics, and p-equivalence.
//!
//! A *p-splitting* replaces a part `p·u` by `p` copies of `u`; *p-equivalence*
//! is the equivalence relation it generates. Every class contains exactly one
//! *p-deprived* partition (no part divisible by `p`).

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::exact_arith::{factorial, vp_u64};

/// Largest weight accepted by enumeration unless the caller raises it.
pub const DEFAULT_WEIGHT_BOUND: u32 = 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("weight {weight} exceeds the configured bound {bound}")]
    BoundExceeded { weight: u32, bound: u32 },
    #[error("partition parts must be positive")]
    ZeroPart,
    #[error("cannot parse partition {0:?}")]
    Parse(String),
}

/// A partition: parts sorted non-increasing, all positive.
///
/// The derived ordering compares part vectors lexicographically.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn empty() -> Self {
        Partition(vec![])
    }

    /// Builds a partition from parts in any order.
    pub fn new(mut parts: Vec<u32>) -> Result<Self, PartitionError> {
        if parts.contains(&0) {
            return Err(PartitionError::ZeroPart);
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Partition(parts))
    }

    /// Panicking shorthand used with literal parts.
    pub fn of(parts: &[u32]) -> Self {
        Self::new(parts.to_vec()).expect("parts must be positive")
    }

    /// The single-part partition `(n)`, or `∅` for `n = 0`.
    pub fn single(n: u32) -> Self {
        if n == 0 {
            Self::empty()
        } else {
            Partition(vec![n])
        }
    }

    /// `(u)^r`: `r` copies of `u`.
    pub fn repeated(u: u32, r: u32) -> Self {
        assert!(u > 0 || r == 0);
        Partition(vec![u; r as usize])
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `r_a(λ)` for every part value `a` present.
    pub fn multiplicities(&self) -> BTreeMap<u32, u32> {
        let mut out = BTreeMap::new();
        for &a in &self.0 {
            *out.entry(a).or_insert(0) += 1;
        }
        out
    }

    /// `z_λ = Π_a a^{r_a} r_a!`.
    pub fn z(&self) -> BigUint {
        self.multiplicities()
            .into_iter()
            .fold(BigUint::one(), |acc, (a, r)| {
                acc * BigUint::from(a).pow(r) * factorial(r as u64)
            })
    }

    /// Sign of a permutation of cycle type `λ`: `(-1)^{Σ(λ_i - 1)}`.
    pub fn sign(&self) -> i32 {
        let odd = self.0.iter().map(|&a| (a - 1) as u64).sum::<u64>() % 2;
        if odd == 0 {
            1
        } else {
            -1
        }
    }

    /// `min_i v_p(λ_i)`; `None` stands for `+∞` (the empty partition).
    pub fn vp(&self, p: u64) -> Option<u32> {
        self.0.iter().map(|&a| vp_u64(a as u64, p)).min()
    }

    /// Largest `v` with `λ = μ^{p^v}` for some partition `μ` (repetition, not
    /// part scaling): `min_a v_p(r_a(λ))`. `None` stands for `+∞`.
    pub fn power_valuation(&self, p: u64) -> Option<u32> {
        self.multiplicities().values().map(|&r| vp_u64(r as u64, p)).min()
    }

    /// `λμ`: the multiset union of parts.
    pub fn multiply(&self, other: &Partition) -> Partition {
        let mut parts = self.0.clone();
        parts.extend_from_slice(&other.0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition(parts)
    }

    /// `λ^k`; `λ^0 = ∅`.
    pub fn power(&self, k: u32) -> Partition {
        let mut parts = Vec::with_capacity(self.0.len() * k as usize);
        for _ in 0..k {
            parts.extend_from_slice(&self.0);
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition(parts)
    }

    /// Every part multiplied by `n`.
    pub fn scaled(&self, n: u32) -> Partition {
        Partition(self.0.iter().map(|&a| a * n).collect())
    }

    pub fn is_p_deprived(&self, p: u64) -> bool {
        self.0.iter().all(|&a| !(a as u64).is_multiple_of(p))
    }

    pub fn stats(&self, p: u64) -> PartitionStats {
        PartitionStats {
            weight: self.weight(),
            multiplicities: self.multiplicities(),
            z: self.z(),
            sign: self.sign(),
            vp: self.vp(p),
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "()");
        }
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl std::str::FromStr for Partition {
    type Err = PartitionError;

    /// Parses `"3,1,1"`; an empty string (or `"()"`) is `∅`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
        if trimmed.trim().is_empty() {
            return Ok(Partition::empty());
        }
        let parts = trimmed
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|_| PartitionError::Parse(s.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Partition::new(parts)
    }
}

/// Serialized as a decreasing integer array, e.g. `[3,3,1,1]`.
impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let parts = Vec::<u32>::deserialize(d)?;
        Partition::new(parts).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionStats {
    pub weight: u32,
    pub multiplicities: BTreeMap<u32, u32>,
    #[serde(serialize_with = "serialize_biguint")]
    pub z: BigUint,
    pub sign: i32,
    /// `None` encodes `+∞`.
    pub vp: Option<u32>,
}

fn serialize_biguint<S: Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_string())
}

pub fn partition_stats(lambda: &Partition, p: u64) -> PartitionStats {
    lambda.stats(p)
}

fn check_bound(weight: u32, bound: u32) -> Result<(), PartitionError> {
    if weight > bound {
        Err(PartitionError::BoundExceeded { weight, bound })
    } else {
        Ok(())
    }
}

/// All partitions of `n` in lexicographically descending order, e.g.
/// `(4), (3,1), (2,2), (2,1,1), (1,1,1,1)`.
pub fn enumerate_partitions(n: u32) -> Result<Vec<Partition>, PartitionError> {
    enumerate_partitions_bounded(n, DEFAULT_WEIGHT_BOUND)
}

pub fn enumerate_partitions_bounded(n: u32, bound: u32) -> Result<Vec<Partition>, PartitionError> {
    check_bound(n, bound)?;
    let mut out = Vec::new();
    let mut current = Vec::new();
    fill_partitions(n, n, &mut current, &mut out);
    Ok(out)
}

fn fill_partitions(remaining: u32, max_part: u32, current: &mut Vec<u32>, out: &mut Vec<Partition>) {
    if remaining == 0 {
        out.push(Partition(current.clone()));
        return;
    }
    for part in (1..=remaining.min(max_part)).rev() {
        current.push(part);
        fill_partitions(remaining - part, part, current, out);
        current.pop();
    }
}

/// Partitions of `n` whose parts all satisfy `allowed`, descending order.
pub fn enumerate_restricted(
    n: u32,
    bound: u32,
    allowed: impl Fn(u32) -> bool,
) -> Result<Vec<Partition>, PartitionError> {
    check_bound(n, bound)?;
    let parts: Vec<u32> = (1..=n).rev().filter(|&a| allowed(a)).collect();
    let mut out = Vec::new();
    let mut current = Vec::new();
    fill_restricted(n, &parts, &mut current, &mut out);
    Ok(out)
}

fn fill_restricted(remaining: u32, parts: &[u32], current: &mut Vec<u32>, out: &mut Vec<Partition>) {
    if remaining == 0 {
        out.push(Partition(current.clone()));
        return;
    }
    for (i, &part) in parts.iter().enumerate() {
        if part <= remaining {
            current.push(part);
            fill_restricted(remaining - part, &parts[i..], current, out);
            current.pop();
        }
    }
}

/// Replaces each part `u·p^j` (`p ∤ u`) by `p^j` copies of `u`.
pub fn p_deprived_representative(lambda: &Partition, p: u64) -> Partition {
    let mut parts = Vec::with_capacity(lambda.len());
    for &a in lambda.parts() {
        let mut u = a as u64;
        let mut copies = 1u64;
        while u.is_multiple_of(p) {
            u /= p;
            copies *= p;
        }
        parts.extend(std::iter::repeat_n(u as u32, copies as usize));
    }
    parts.sort_unstable_by(|a, b| b.cmp(a));
    Partition(parts)
}

pub fn are_p_equivalent(lambda: &Partition, mu: &Partition, p: u64) -> bool {
    lambda.weight() == mu.weight()
        && p_deprived_representative(lambda, p) == p_deprived_representative(mu, p)
}

/// The p-equivalence class `C_λ`, sorted in descending order.
///
/// Built multiplicatively: for each distinct prime-to-`p` part `u` of the
/// representative, with multiplicity `r`, the class of `(u)^r` is the set of
/// partitions of `u·r` into parts `u·p^j`; `C_λ` is the set of products.
pub fn p_equivalence_class(lambda: &Partition, p: u64) -> Result<Vec<Partition>, PartitionError> {
    p_equivalence_class_bounded(lambda, p, DEFAULT_WEIGHT_BOUND)
}

pub fn p_equivalence_class_bounded(
    lambda: &Partition,
    p: u64,
    bound: u32,
) -> Result<Vec<Partition>, PartitionError> {
    check_bound(lambda.weight(), bound)?;
    let rep = p_deprived_representative(lambda, p);
    let mut products = vec![Partition::empty()];
    for (u, r) in rep.multiplicities() {
        let factors = prime_power_partitions(r, p);
        let mut next = Vec::with_capacity(products.len() * factors.len());
        for base in &products {
            for f in &factors {
                next.push(base.multiply(&f.scaled(u)));
            }
        }
        products = next;
    }
    products.sort_unstable_by(|a, b| b.cmp(a));
    Ok(products)
}

/// Partitions of `r` into powers of `p`.
fn prime_power_partitions(r: u32, p: u64) -> Vec<Partition> {
    let mut powers = vec![];
    let mut pw = 1u64;
    while pw <= r as u64 {
        powers.push(pw as u32);
        pw *= p;
    }
    powers.reverse();
    let mut out = Vec::new();
    let mut current = Vec::new();
    fill_restricted(r, &powers, &mut current, &mut out);
    out
}

/// All p-deprived partitions of `n`, descending.
pub fn p_deprived_partitions(n: u32, p: u64) -> Result<Vec<Partition>, PartitionError> {
    enumerate_restricted(n, DEFAULT_WEIGHT_BOUND, |a| !(a as u64).is_multiple_of(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeSet, HashSet, VecDeque};

    fn count_partitions(n: u32, max: u32) -> u64 {
        if n == 0 {
            return 1;
        }
        (1..=n.min(max)).map(|k| count_partitions(n - k, k)).sum()
    }

    #[test]
    fn stats_examples() {
        let empty = Partition::empty().stats(2);
        assert_eq!(empty.z, BigUint::one());
        assert_eq!(empty.sign, 1);
        assert_eq!(empty.vp, None);

        let s = Partition::of(&[2, 1]).stats(2);
        assert_eq!(s.weight, 3);
        assert_eq!(s.z, BigUint::from(2u32));
        assert_eq!(s.sign, -1);
        assert_eq!(s.vp, Some(0));

        assert_eq!(Partition::of(&[27]).vp(3), Some(3));
        assert_eq!(Partition::of(&[8]).vp(2), Some(3));
    }

    /// Cycle type of a permutation given as an image vector.
    fn cycle_type(perm: &[usize]) -> Partition {
        let mut seen = vec![false; perm.len()];
        let mut parts = vec![];
        for start in 0..perm.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = perm[i];
                len += 1;
            }
            parts.push(len);
        }
        Partition::new(parts).unwrap()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = vec![];
        for perm in permutations(n - 1) {
            for pos in 0..=perm.len() {
                let mut v = perm.clone();
                v.insert(pos, n - 1);
                out.push(v);
            }
        }
        out
    }

    #[test]
    fn z_counts_permutations_of_each_cycle_type() {
        for n in 0..=7u32 {
            let mut counts: BTreeMap<Partition, u64> = BTreeMap::new();
            let perms = permutations(n as usize);
            for perm in &perms {
                *counts.entry(cycle_type(perm)).or_insert(0) += 1;
            }
            let n_fact = factorial(n as u64);
            for lambda in enumerate_partitions(n).unwrap() {
                let z = lambda.z();
                assert_eq!(&n_fact % &z, BigUint::from(0u32));
                assert_eq!(&n_fact / &z, BigUint::from(counts[&lambda]), "{lambda}");
                // sign agrees with the parity of a permutation of that type
                let (perm, _) = perms.iter().map(|p| (p, cycle_type(p))).find(|(_, c)| *c == lambda).unwrap();
                let inversions = (0..perm.len())
                    .flat_map(|i| (i + 1..perm.len()).map(move |j| (i, j)))
                    .filter(|&(i, j)| perm[i] > perm[j])
                    .count();
                assert_eq!(lambda.sign(), if inversions % 2 == 0 { 1 } else { -1 });
            }
        }
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_partitions(0).unwrap(), vec![Partition::empty()]);
        assert_eq!(enumerate_partitions(1).unwrap(), vec![Partition::of(&[1])]);
        let four = enumerate_partitions(4).unwrap();
        assert_eq!(
            four,
            vec![
                Partition::of(&[4]),
                Partition::of(&[3, 1]),
                Partition::of(&[2, 2]),
                Partition::of(&[2, 1, 1]),
                Partition::of(&[1, 1, 1, 1]),
            ]
        );
        for n in 0..=20 {
            let all = enumerate_partitions(n).unwrap();
            assert_eq!(all.len() as u64, count_partitions(n, n));
            let distinct: HashSet<_> = all.iter().collect();
            assert_eq!(distinct.len(), all.len());
            assert!(all.windows(2).all(|w| w[0] > w[1]));
        }
        assert!(matches!(
            enumerate_partitions(41),
            Err(PartitionError::BoundExceeded { weight: 41, bound: 40 })
        ));
        assert!(enumerate_partitions_bounded(41, 45).is_ok());
    }

    #[test]
    fn multiply_and_power() {
        assert_eq!(
            Partition::of(&[3, 1]).multiply(&Partition::of(&[2, 1])),
            Partition::of(&[3, 2, 1, 1])
        );
        assert_eq!(Partition::of(&[2]).power(3), Partition::of(&[2, 2, 2]));
        let l = Partition::of(&[5, 2]);
        assert_eq!(l.multiply(&Partition::empty()), l);
        assert_eq!(l.power(0), Partition::empty());
    }

    #[test]
    fn power_valuation_examples() {
        assert_eq!(Partition::of(&[1, 1]).power_valuation(2), Some(1));
        assert_eq!(Partition::of(&[2]).power_valuation(2), Some(0));
        assert_eq!(Partition::of(&[3, 3, 3, 1, 1, 1]).power_valuation(3), Some(1));
        assert_eq!(Partition::empty().power_valuation(2), None);
    }

    #[test]
    fn sign_multiplicative_and_vp_of_scaling() {
        for a in enumerate_partitions(6).unwrap() {
            for b in enumerate_partitions(5).unwrap() {
                assert_eq!(a.multiply(&b).sign(), a.sign() * b.sign());
            }
            for p in [2u64, 3] {
                for k in 0..3u32 {
                    let pk = p.pow(k) as u32;
                    assert_eq!(a.scaled(pk).vp(p), a.vp(p).map(|v| v + k));
                    let pv = a.power(pk).power_valuation(p);
                    assert_eq!(pv, a.power_valuation(p).map(|v| v + k));
                }
            }
        }
    }

    #[test]
    fn deprived_representative_examples() {
        assert_eq!(
            p_deprived_representative(&Partition::of(&[6, 2]), 2),
            Partition::of(&[3, 3, 1, 1])
        );
        assert_eq!(p_deprived_representative(&Partition::of(&[4]), 2), Partition::of(&[1, 1, 1, 1]));
        let d = Partition::of(&[5, 3, 1]);
        assert_eq!(p_deprived_representative(&d, 2), d);
        for l in enumerate_partitions(12).unwrap() {
            let r = p_deprived_representative(&l, 3);
            assert!(r.is_p_deprived(3));
            assert_eq!(p_deprived_representative(&r, 3), r);
            assert_eq!(r.weight(), l.weight());
        }
    }

    #[test]
    fn class_examples() {
        let class = p_equivalence_class(&Partition::of(&[3, 3, 1, 1]), 2).unwrap();
        let expected: BTreeSet<_> = [vec![6, 2], vec![3, 3, 2], vec![6, 1, 1], vec![3, 3, 1, 1]]
            .into_iter()
            .map(|v| Partition::new(v).unwrap())
            .collect();
        assert_eq!(class.iter().cloned().collect::<BTreeSet<_>>(), expected);
        assert_eq!(class.len(), 4);

        assert_eq!(
            p_equivalence_class(&Partition::of(&[1, 1]), 2).unwrap(),
            vec![Partition::of(&[2]), Partition::of(&[1, 1])]
        );
        assert_eq!(
            p_equivalence_class(&Partition::of(&[2, 1]), 3).unwrap(),
            vec![Partition::of(&[2, 1])]
        );
        assert_eq!(p_equivalence_class(&Partition::empty(), 5).unwrap(), vec![Partition::empty()]);
    }

    #[test]
    fn equivalence_examples() {
        assert!(are_p_equivalent(&Partition::of(&[6, 2]), &Partition::of(&[3, 3, 2]), 2));
        let l = Partition::of(&[4, 4, 1]);
        assert!(are_p_equivalent(&l, &l, 3));
        assert!(!are_p_equivalent(&Partition::of(&[2]), &Partition::of(&[1, 1]), 3));
    }

    #[test]
    fn classes_partition_the_set_of_partitions() {
        for p in [2u64, 3, 5] {
            for n in 0..=15u32 {
                let all: BTreeSet<_> = enumerate_partitions(n).unwrap().into_iter().collect();
                let mut seen = BTreeSet::new();
                for rep in p_deprived_partitions(n, p).unwrap() {
                    for mu in p_equivalence_class(&rep, p).unwrap() {
                        assert!(seen.insert(mu), "classes overlap");
                    }
                }
                assert_eq!(seen, all, "p = {p}, n = {n}");
            }
        }
    }

    /// Closure of single p-splitting moves (and their inverses) by BFS.
    fn bfs_class(lambda: &Partition, p: u64) -> BTreeSet<Partition> {
        let p32 = p as u32;
        let mut seen = BTreeSet::from([lambda.clone()]);
        let mut queue = VecDeque::from([lambda.clone()]);
        while let Some(cur) = queue.pop_front() {
            let mut neighbours = vec![];
            let mults = cur.multiplicities();
            for (&a, &r) in &mults {
                if a % p32 == 0 {
                    // split one part a into p copies of a/p
                    let mut parts = cur.parts().to_vec();
                    let idx = parts.iter().position(|&x| x == a).unwrap();
                    parts.remove(idx);
                    parts.extend(std::iter::repeat_n(a / p32, p as usize));
                    neighbours.push(Partition::new(parts).unwrap());
                }
                if r >= p32 {
                    // merge p copies of a into a single part p·a
                    let mut parts = cur.parts().to_vec();
                    for _ in 0..p {
                        let idx = parts.iter().position(|&x| x == a).unwrap();
                        parts.remove(idx);
                    }
                    parts.push(a * p32);
                    neighbours.push(Partition::new(parts).unwrap());
                }
            }
            for nb in neighbours {
                if seen.insert(nb.clone()) {
                    queue.push_back(nb);
                }
            }
        }
        seen
    }

    #[test]
    fn class_matches_bfs_closure() {
        for p in [2u64, 3, 5] {
            for n in 0..=10u32 {
                for lambda in enumerate_partitions(n).unwrap() {
                    let fast: BTreeSet<_> = p_equivalence_class(&lambda, p).unwrap().into_iter().collect();
                    assert_eq!(fast, bfs_class(&lambda, p), "{lambda}, p = {p}");
                }
            }
        }
    }

    #[test]
    fn odd_prime_classes_share_sign() {
        for p in [3u64, 5, 7] {
            for n in 0..=14 {
                for rep in p_deprived_partitions(n, p).unwrap() {
                    let s = rep.sign();
                    assert!(p_equivalence_class(&rep, p).unwrap().iter().all(|mu| mu.sign() == s));
                }
            }
        }
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("3,1,1".parse::<Partition>().unwrap(), Partition::of(&[3, 1, 1]));
        assert_eq!("1,3".parse::<Partition>().unwrap(), Partition::of(&[3, 1]));
        assert_eq!("".parse::<Partition>().unwrap(), Partition::empty());
        assert!("1,0".parse::<Partition>().is_err());
        assert!("a".parse::<Partition>().is_err());
        assert_eq!(Partition::of(&[3, 1]).to_string(), "(3,1)");
        let json = serde_json::to_string(&Partition::of(&[3, 3, 1, 1])).unwrap();
        assert_eq!(json, "[3,3,1,1]");
        assert!(serde_json::from_str::<Partition>("[0,1]").is_err());
    }
}
