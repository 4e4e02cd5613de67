//! Admissible prime sets: sets whose k-element coefficient sums are
//! pairwise distinct.

use std::collections::{HashMap, HashSet};

use itertools::Itertools;
use serde::Serialize;

use crate::coeffs::CoeffTable;
use crate::error::{Error, Result};
use crate::signs;

/// Default cap on stored subset sums.
pub const DEFAULT_SUM_LIMIT: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certificate {
    BruteForce,
    HashCollision,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AdmissibleSet {
    pub k: usize,
    pub primes: Vec<u64>,
    pub certificate: Certificate,
    /// Largest prime the set was drawn from.
    pub check_bound: u64,
}

impl AdmissibleSet {
    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn contains(&self, p: u64) -> bool {
        self.primes.binary_search(&p).is_ok()
    }
}

/// Two distinct sorted k-tuples with equal coefficient sums.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Collision {
    pub left: Vec<u64>,
    pub right: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RepairWitness {
    pub p: u64,
    pub plus: Vec<u64>,
    pub minus: Vec<u64>,
}

impl RepairWitness {
    /// Re-checks `a(p) = sum a(plus) - sum a(minus)` against the table.
    pub fn verify(&self, table: &CoeffTable) -> Result<bool> {
        let lhs = table.coefficient(self.p)?;
        let mut rhs = num_bigint::BigInt::default();
        for &q in &self.plus {
            rhs += table.coefficient(q)?;
        }
        for &q in &self.minus {
            rhs -= table.coefficient(q)?;
        }
        let disjoint = !self.plus.contains(&self.p) && !self.minus.contains(&self.p);
        Ok(lhs == rhs && disjoint)
    }
}

fn values(table: &CoeffTable, primes: &[u64]) -> Result<Vec<i128>> {
    primes.iter().map(|&p| table.value_i128(p)).collect()
}

fn tuple_sum(vals: &[i128], idx: &[usize]) -> Result<i128> {
    idx.iter()
        .try_fold(0i128, |acc, &i| acc.checked_add(vals[i]))
        .ok_or(Error::Overflow("k-subset sum"))
}

fn check_len(len: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if len < k {
        return Err(Error::Precondition(format!(
            "need at least k = {k} primes, got {len}"
        )));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n.saturating_sub(k));
    (0..k).fold(1u64, |acc, i| {
        acc.saturating_mul((n - i) as u64) / (i as u64 + 1)
    })
}

fn sorted(primes: &[u64]) -> Vec<u64> {
    let mut v = primes.to_vec();
    v.sort_unstable();
    v
}

/// Hash-based admissibility test. `None` means admissible.
pub fn is_admissible(primes: &[u64], k: usize, table: &CoeffTable) -> Result<Option<Collision>> {
    let primes = sorted(primes);
    check_len(primes.len(), k)?;
    let count = binomial(primes.len(), k);
    if count > DEFAULT_SUM_LIMIT {
        return Err(Error::SumLimit {
            limit: DEFAULT_SUM_LIMIT,
            accepted: primes.len(),
        });
    }
    let vals = values(table, &primes)?;
    let mut seen: HashMap<i128, Vec<usize>> = HashMap::with_capacity(count as usize);
    for idx in (0..primes.len()).combinations(k) {
        let sum = tuple_sum(&vals, &idx)?;
        if let Some(prev) = seen.get(&sum) {
            return Ok(Some(Collision {
                left: prev.iter().map(|&i| primes[i]).collect(),
                right: idx.iter().map(|&i| primes[i]).collect(),
            }));
        }
        seen.insert(sum, idx);
    }
    Ok(None)
}

/// Quadratic reference check over all pairs of k-subsets.
pub fn is_admissible_brute(
    primes: &[u64],
    k: usize,
    table: &CoeffTable,
) -> Result<Option<Collision>> {
    let primes = sorted(primes);
    check_len(primes.len(), k)?;
    let vals = values(table, &primes)?;
    let tuples: Vec<Vec<usize>> = (0..primes.len()).combinations(k).collect();
    for (i, x) in tuples.iter().enumerate() {
        for y in &tuples[i + 1..] {
            if tuple_sum(&vals, x)? == tuple_sum(&vals, y)? {
                return Ok(Some(Collision {
                    left: x.iter().map(|&i| primes[i]).collect(),
                    right: y.iter().map(|&i| primes[i]).collect(),
                }));
            }
        }
    }
    Ok(None)
}

/// One prime from each `A_i = P' ∩ [2^{l0 i}, 2^{l0 i + 1}]`, `1 <= i <= 2k`.
pub fn dyadic_construction(table: &CoeffTable, k: usize, l0: u32) -> Result<AdmissibleSet> {
    if k == 0 || l0 == 0 {
        return Err(Error::InvalidArgument("k and l0 must be at least 1".into()));
    }
    let exponent = 2 * k as u64 * l0 as u64 + 1;
    let n_max = table.n_max();
    if exponent >= 64 || (1u64 << exponent) > n_max {
        return Err(Error::DyadicOutOfRange { exponent, n_max });
    }
    let sets = signs::prime_sets(table, n_max)?;
    let mut chosen = Vec::with_capacity(2 * k);
    for i in 1..=2 * k as u32 {
        let lo = 1u64 << (l0 * i);
        let hi = lo << 1;
        let start = sets.p0.partition_point(|&p| p < lo);
        let pick = sets.p0[start..]
            .iter()
            .take_while(|&&p| p <= hi)
            .find(|&&p| sets.is_large(p))
            .copied()
            .ok_or(Error::EmptyInterval { index: i, lo, hi })?;
        chosen.push(pick);
    }
    let magnitudes: Vec<u128> = values(table, &chosen)?
        .iter()
        .map(|v| v.unsigned_abs())
        .collect();
    for (w, pair) in magnitudes.windows(2).enumerate() {
        if pair[0] >= pair[1] {
            return Err(Error::GrowthChain { p: chosen[w + 1] });
        }
    }
    if let Some(c) = is_admissible(&chosen, k, table)? {
        return Err(Error::NotAdmissible(format!(
            "{:?} and {:?} share a coefficient sum",
            c.left, c.right
        )));
    }
    Ok(AdmissibleSet {
        k,
        check_bound: *chosen.last().unwrap(),
        primes: chosen,
        certificate: Certificate::HashCollision,
    })
}

/// Incremental admissible-set builder holding the j-subset sums of the
/// current set for every `j < k`, plus the set of k-subset sums.
#[derive(Debug)]
pub struct GreedyBuilder<'a> {
    table: &'a CoeffTable,
    k: usize,
    limit: u64,
    primes: Vec<u64>,
    levels: Vec<Vec<i128>>,
    k_sums: HashSet<i128>,
    stored: u64,
}

impl<'a> GreedyBuilder<'a> {
    pub fn new(table: &'a CoeffTable, k: usize, limit: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let mut levels = vec![Vec::new(); k];
        levels[0].push(0);
        Ok(GreedyBuilder {
            table,
            k,
            limit,
            primes: Vec::new(),
            levels,
            k_sums: HashSet::new(),
            stored: 1,
        })
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Adds `p` if the set stays admissible. Errors when the sum store
    /// would pass the limit.
    pub fn try_add(&mut self, p: u64) -> Result<bool> {
        let a = self.table.value_i128(p)?;
        let k = self.k;
        let new_k: Vec<i128> = self.levels[k - 1]
            .iter()
            .map(|&s| s.checked_add(a).ok_or(Error::Overflow("k-subset sum")))
            .collect::<Result<_>>()?;
        let mut fresh = HashSet::with_capacity(new_k.len());
        for &s in &new_k {
            if self.k_sums.contains(&s) || !fresh.insert(s) {
                return Ok(false);
            }
        }
        let growth: u64 = (1..k).map(|j| self.levels[j - 1].len() as u64).sum::<u64>()
            + new_k.len() as u64;
        if self.stored + growth > self.limit {
            return Err(Error::SumLimit {
                limit: self.limit,
                accepted: self.primes.len(),
            });
        }
        self.stored += growth;
        self.k_sums.extend(fresh);
        for j in (1..k).rev() {
            let (lower, upper) = self.levels.split_at_mut(j);
            let shifted = lower[j - 1]
                .iter()
                .map(|&s| s.checked_add(a).ok_or(Error::Overflow("subset sum")))
                .collect::<Result<Vec<_>>>()?;
            upper[0].extend(shifted);
        }
        self.primes.push(p);
        Ok(true)
    }

    pub fn into_set(self) -> AdmissibleSet {
        let mut primes = self.primes;
        primes.sort_unstable();
        AdmissibleSet {
            k: self.k,
            check_bound: primes.last().copied().unwrap_or(0),
            primes,
            certificate: Certificate::HashCollision,
        }
    }
}

/// Inclusion-maximal admissible subset of `candidates`, grown in increasing
/// order. If that stalls below `2k` primes the run is reseeded with a
/// geometric spread over the candidate range.
pub fn greedy_maximal(
    candidates: &[u64],
    k: usize,
    table: &CoeffTable,
    limit: u64,
) -> Result<AdmissibleSet> {
    let candidates = sorted(candidates);
    let needed = 2 * k;
    if candidates.len() < needed {
        return Err(Error::TooFewPrimes {
            size: candidates.len(),
            needed,
        });
    }
    let plain = grow(table, k, limit, &[], &candidates)?;
    if plain.len() >= needed {
        return Ok(plain.into_set());
    }
    let seeded = grow(table, k, limit, &spread(&candidates, needed), &candidates)?;
    if seeded.len() >= needed {
        return Ok(seeded.into_set());
    }
    Err(Error::TooFewPrimes {
        size: plain.len().max(seeded.len()),
        needed,
    })
}

fn grow<'a>(
    table: &'a CoeffTable,
    k: usize,
    limit: u64,
    seed: &[u64],
    candidates: &[u64],
) -> Result<GreedyBuilder<'a>> {
    let mut builder = GreedyBuilder::new(table, k, limit)?;
    for &p in seed {
        builder.try_add(p)?;
    }
    for &p in candidates {
        if !seed.contains(&p) {
            builder.try_add(p)?;
        }
    }
    Ok(builder)
}

fn spread(candidates: &[u64], count: usize) -> Vec<u64> {
    let lo = candidates[0] as f64;
    let hi = *candidates.last().unwrap() as f64;
    let mut seed: Vec<u64> = (0..count)
        .map(|i| {
            let target = lo * (hi / lo).powf(i as f64 / count.max(2) as f64);
            let at = candidates.partition_point(|&p| (p as f64) < target);
            candidates[at.min(candidates.len() - 1)]
        })
        .collect();
    seed.dedup();
    seed
}

/// k-subset sums of an admissible set, for repeated repair lookups.
#[derive(Debug)]
pub struct RepairIndex<'a> {
    table: &'a CoeffTable,
    set: AdmissibleSet,
    vals: Vec<i128>,
    k_sums: HashMap<i128, Vec<usize>>,
}

impl<'a> RepairIndex<'a> {
    pub fn new(set: AdmissibleSet, table: &'a CoeffTable, limit: u64) -> Result<Self> {
        check_len(set.len(), set.k)?;
        let count = binomial(set.len(), set.k) + binomial(set.len(), set.k - 1);
        if count > limit {
            return Err(Error::SumLimit {
                limit,
                accepted: set.len(),
            });
        }
        let vals = values(table, &set.primes)?;
        let mut k_sums = HashMap::with_capacity(count as usize);
        for idx in (0..set.len()).combinations(set.k) {
            k_sums.entry(tuple_sum(&vals, &idx)?).or_insert(idx);
        }
        Ok(RepairIndex {
            table,
            set,
            vals,
            k_sums,
        })
    }

    pub fn set(&self) -> &AdmissibleSet {
        &self.set
    }

    /// Finds `a(p) = sum a(plus) - sum a(minus)` with `|plus| = k` and
    /// `|minus| = k - 1`, all drawn from the set.
    pub fn repair(&self, p: u64) -> Result<RepairWitness> {
        if self.set.contains(p) {
            return Err(Error::Precondition(format!(
                "{p} already belongs to the admissible set"
            )));
        }
        let a = self.table.value_i128(p)?;
        let pick = |idx: &[usize]| idx.iter().map(|&i| self.set.primes[i]).collect::<Vec<_>>();
        for minus in (0..self.set.len()).combinations(self.set.k - 1) {
            let target = tuple_sum(&self.vals, &minus)?
                .checked_add(a)
                .ok_or(Error::Overflow("repair target"))?;
            if let Some(plus) = self.k_sums.get(&target) {
                return Ok(RepairWitness {
                    p,
                    plus: pick(plus),
                    minus: pick(&minus),
                });
            }
        }
        Err(Error::NoCollision(p))
    }
}

pub fn repair(p: u64, set: &AdmissibleSet, table: &CoeffTable) -> Result<RepairWitness> {
    RepairIndex::new(set.clone(), table, DEFAULT_SUM_LIMIT)?.repair(p)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CardinalityReport {
    pub size: usize,
    pub m: u64,
    pub k: usize,
    /// `M^{(2k-1)/(2k)}`.
    pub scale: f64,
    pub ratio: f64,
    pub lower_bound_met: bool,
}

pub fn cardinality_report(size: usize, m: u64, k: usize) -> CardinalityReport {
    let exponent = (2 * k - 1) as f64 / (2 * k) as f64;
    let scale = (m as f64).powf(exponent);
    CardinalityReport {
        size,
        m,
        k,
        scale,
        ratio: size as f64 / scale,
        lower_bound_met: size >= 2 * k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{expand_eta_product, NewformDescriptor};

    fn delta(n: u64) -> CoeffTable {
        expand_eta_product(&NewformDescriptor::delta(), n).unwrap()
    }

    fn l11(n: u64) -> CoeffTable {
        expand_eta_product(&NewformDescriptor::level11(), n).unwrap()
    }

    #[test]
    fn single_coefficients() {
        let t = delta(20);
        assert_eq!(is_admissible(&[3, 7], 1, &t).unwrap(), None);
        let l = l11(20);
        // a(2) = a(7) = -2
        let c = is_admissible(&[2, 7], 1, &l).unwrap().unwrap();
        assert_eq!((c.left, c.right), (vec![2], vec![7]));
    }

    #[test]
    fn pair_sums_match_brute_force() {
        let t = delta(20);
        let set = [3, 5, 7, 13];
        assert_eq!(
            is_admissible(&set, 2, &t).unwrap(),
            is_admissible_brute(&set, 2, &t).unwrap()
        );
        assert!(is_admissible(&[3], 2, &t).is_err());
    }

    #[test]
    fn dyadic_for_level11() {
        let t = l11(1024);
        let s = dyadic_construction(&t, 1, 4).unwrap();
        assert_eq!(s.len(), 2);
        assert!((16..=32).contains(&s.primes[0]));
        assert!((256..=512).contains(&s.primes[1]));
    }

    #[test]
    fn dyadic_for_delta_is_out_of_range() {
        let err = dyadic_construction(&delta(100), 6, 18).unwrap_err();
        assert!(matches!(err, Error::DyadicOutOfRange { exponent: 217, .. }));
    }

    #[test]
    fn greedy_is_maximal_and_repairs() {
        let t = l11(1000);
        let p0 = signs::prime_sets(&t, 1000).unwrap().p0;
        let s = greedy_maximal(&p0, 1, &t, DEFAULT_SUM_LIMIT).unwrap();
        assert!(is_admissible(&s.primes, 1, &t).unwrap().is_none());
        let index = RepairIndex::new(s.clone(), &t, DEFAULT_SUM_LIMIT).unwrap();
        for &p in p0.iter().filter(|&&p| !s.contains(p)) {
            let mut ext = s.primes.clone();
            ext.push(p);
            assert!(is_admissible(&ext, 1, &t).unwrap().is_some());
            let w = index.repair(p).unwrap();
            assert!(w.minus.is_empty());
            assert!(w.verify(&t).unwrap());
        }
        assert!(matches!(
            index.repair(s.primes[0]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn greedy_k2_matches_incremental_rule() {
        let t = l11(400);
        let p0 = signs::prime_sets(&t, 400).unwrap().p0;
        let s = greedy_maximal(&p0, 2, &t, DEFAULT_SUM_LIMIT).unwrap();
        assert!(s.len() >= 4);
        assert!(is_admissible_brute(&s.primes, 2, &t).unwrap().is_none());
        let index = RepairIndex::new(s.clone(), &t, DEFAULT_SUM_LIMIT).unwrap();
        for &p in p0.iter().filter(|&&p| !s.contains(p)) {
            let w = index.repair(p).unwrap();
            assert_eq!((w.plus.len(), w.minus.len()), (2, 1));
            assert!(w.verify(&t).unwrap());
        }
    }

    #[test]
    fn exact_candidate_set_is_returned() {
        let t = delta(20);
        let s = greedy_maximal(&[3, 5], 1, &t, DEFAULT_SUM_LIMIT).unwrap();
        assert_eq!(s.primes, vec![3, 5]);
    }

    #[test]
    fn sum_limit_is_enforced() {
        let t = delta(2000);
        let p0 = signs::prime_sets(&t, 2000).unwrap().p0;
        let err = greedy_maximal(&p0, 3, &t, 1000).unwrap_err();
        assert!(matches!(err, Error::SumLimit { limit: 1000, .. }));
    }

    #[test]
    fn cardinality_ratio() {
        let r = cardinality_report(12, 10_000, 6);
        assert!((r.scale - 4641.588833612779).abs() < 1e-6);
        assert!(r.lower_bound_met);
        assert!(!cardinality_report(3, 100, 2).lower_bound_met);
    }
}
