//! Explicit representations `Z = sum_j a(n_j)`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::admissible::{self, AdmissibleSet, RepairIndex, RepairWitness};
use crate::coeffs::CoeffTable;
use crate::error::{Error, Result};
use crate::par;
use crate::primes;
use crate::signs::{self, PrimeSets};
use crate::waring;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Constructive,
    Search,
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Route::Constructive => "constructive",
            Route::Search => "search",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    pub z: i128,
    pub route: Route,
    /// `(n, multiplicity)`, increasing in `n`.
    pub terms: Vec<(u64, u64)>,
    pub ell: u64,
    /// Term-count bound declared by the route.
    pub bound: u64,
    /// Whether the constructive route ran with the default `s0`.
    pub default_s: bool,
}

impl Decomposition {
    fn from_counts(z: i128, route: Route, counts: BTreeMap<u64, u64>, bound: u64, default_s: bool) -> Self {
        let ell = counts.values().sum();
        Decomposition {
            z,
            route,
            terms: counts.into_iter().collect(),
            ell,
            bound,
            default_s,
        }
    }

    pub fn empty(z: i128, route: Route, bound: u64) -> Self {
        Self::from_counts(z, route, BTreeMap::new(), bound, true)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    #[serde(serialize_with = "signs::serialize_display")]
    pub sum: BigInt,
    pub ell: u64,
    pub within_bound: bool,
    pub max_index: u64,
    /// `max n_j / (|Z|^{2/(2k-1)} + 1)`.
    pub max_index_ratio: f64,
}

/// Re-sums the decomposition exactly. Indices beyond the table are
/// evaluated through multiplicativity.
pub fn verify(d: &Decomposition, table: &CoeffTable) -> Result<VerifyReport> {
    let mut sum = BigInt::zero();
    for &(n, mult) in &d.terms {
        sum += table.coefficient(n)? * BigInt::from(mult);
    }
    let expected = BigInt::from(d.z);
    if sum != expected {
        return Err(Error::SumMismatch {
            delta: &sum - &expected,
            expected,
            actual: sum,
        });
    }
    let ell: u64 = d.terms.iter().map(|&(_, m)| m).sum();
    let max_index = d.terms.iter().map(|&(n, _)| n).max().unwrap_or(0);
    let exponent = 2.0 / table.descriptor().hecke_exponent() as f64;
    let scale = (d.z.unsigned_abs() as f64).powf(exponent) + 1.0;
    Ok(VerifyReport {
        sum,
        ell,
        within_bound: ell == d.ell && ell <= d.bound,
        max_index,
        max_index_ratio: max_index as f64 / scale,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CfBound {
    pub c0: u64,
    pub k: u64,
    pub s0: u64,
    pub value: u64,
}

/// `c0 (k s + 3) + k s + 1`.
pub fn cf_formula(c0: u64, k: u64, s: u64) -> Result<u64> {
    let ks = k.checked_mul(s).ok_or(Error::Overflow("k s"))?;
    c0.checked_mul(ks + 3)
        .and_then(|x| x.checked_add(ks + 1))
        .ok_or(Error::Overflow("C(f)"))
}

fn first_negative_c0(table: &CoeffTable) -> Result<(u64, u64)> {
    let sign = signs::first_negative(table)?;
    let c0 = (-sign.a_n_f)
        .to_u64()
        .ok_or(Error::Overflow("-a(n_f)"))?;
    Ok((sign.n_f, c0))
}

pub fn cf_bound(table: &CoeffTable) -> Result<CfBound> {
    let (_, c0) = first_negative_c0(table)?;
    let k = table.descriptor().k() as u64;
    let s0 = waring::hua_constants(table.descriptor().hecke_exponent())?.s0;
    Ok(CfBound {
        c0,
        k,
        s0,
        value: cf_formula(c0, k, s0)?,
    })
}

/// `p^{2k-1} = sum_plus a(p p_i) - sum_minus a(p p_i) - a(p^2)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrimePowerExpansion {
    pub p: u64,
    pub positive: Vec<u64>,
    pub negative: Vec<u64>,
}

impl PrimePowerExpansion {
    pub fn resum(&self, table: &CoeffTable) -> Result<BigInt> {
        let mut total = BigInt::zero();
        for &n in &self.positive {
            total += table.coefficient(n)?;
        }
        for &n in &self.negative {
            total -= table.coefficient(n)?;
        }
        Ok(total)
    }
}

pub fn expand_from_witness(w: &RepairWitness, table: &CoeffTable) -> Result<PrimePowerExpansion> {
    let p = w.p;
    let scale = |q: u64| -> Result<u64> {
        if q.gcd(&p) != 1 {
            return Err(Error::Internal(format!("witness prime {q} shares a factor with {p}")));
        }
        q.checked_mul(p).ok_or(Error::Overflow("index p * p_i"))
    };
    let positive = w.plus.iter().map(|&q| scale(q)).collect::<Result<Vec<_>>>()?;
    let mut negative = w.minus.iter().map(|&q| scale(q)).collect::<Result<Vec<_>>>()?;
    negative.push(p.checked_mul(p).ok_or(Error::Overflow("index p^2"))?);
    let expansion = PrimePowerExpansion {
        p,
        positive,
        negative,
    };
    let target = BigInt::from(p).pow(table.descriptor().hecke_exponent());
    let got = expansion.resum(table)?;
    if got != target {
        return Err(Error::SumMismatch {
            delta: &got - &target,
            expected: target,
            actual: got,
        });
    }
    Ok(expansion)
}

pub fn prime_power_expand(p: u64, set: &AdmissibleSet, table: &CoeffTable) -> Result<PrimePowerExpansion> {
    let witness = admissible::repair(p, set, table)?;
    expand_from_witness(&witness, table)
}

#[derive(Clone, Debug)]
pub struct ConstructiveParams {
    /// Number of prime powers; Hua's `s0` when unset.
    pub s: Option<u32>,
    /// Upper end of `P_0(M)`; the table bound when unset.
    pub m: Option<u64>,
    /// Small-Z threshold; `max a(n) / 4` when unset.
    pub threshold: Option<BigInt>,
    pub node_budget: u64,
    pub sum_limit: u64,
}

impl Default for ConstructiveParams {
    fn default() -> Self {
        ConstructiveParams {
            s: None,
            m: None,
            threshold: None,
            node_budget: waring::DEFAULT_NODE_BUDGET,
            sum_limit: admissible::DEFAULT_SUM_LIMIT,
        }
    }
}

/// State shared across constructive runs: the prime sets, an
/// inclusion-maximal admissible set and its repair index.
#[derive(Debug)]
pub struct ConstructivePipeline<'a> {
    table: &'a CoeffTable,
    n_f: u64,
    c0: u64,
    k: u32,
    e: u32,
    modulus: u64,
    s: u32,
    default_s: bool,
    threshold: BigInt,
    node_budget: u64,
    sets: PrimeSets,
    index: RepairIndex<'a>,
}

impl<'a> ConstructivePipeline<'a> {
    pub fn new(table: &'a CoeffTable, params: &ConstructiveParams) -> Result<Self> {
        let d = table.descriptor();
        let (n_f, c0) = first_negative_c0(table)?;
        let e = d.hecke_exponent();
        let hua = waring::hua_constants(e)?;
        let s0 = u32::try_from(hua.s0).map_err(|_| Error::Overflow("s0"))?;
        let s = params.s.unwrap_or(s0);
        if s < 1 {
            return Err(Error::InvalidArgument("s must be at least 1".into()));
        }
        let m = params.m.unwrap_or(table.n_max()).min(table.n_max());
        let sets = signs::prime_sets(table, m)?;
        let set = admissible::greedy_maximal(&sets.p0, d.k() as usize, table, params.sum_limit)?;
        let index = RepairIndex::new(set, table, params.sum_limit)?;
        let threshold = match &params.threshold {
            Some(t) => t.clone(),
            None => table
                .max_positive()
                .map(|(_, v)| v / 4)
                .unwrap_or_default(),
        };
        Ok(ConstructivePipeline {
            table,
            n_f,
            c0,
            k: d.k(),
            e,
            modulus: hua.modulus,
            s,
            default_s: s == s0,
            threshold,
            node_budget: params.node_budget,
            sets,
            index,
        })
    }

    pub fn admissible_set(&self) -> &AdmissibleSet {
        self.index.set()
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    /// Largest term count the pipeline can produce for any `Z`:
    /// `(C0 + 1) k s + C0 (K - 1) + (C0 - 1) + 1`. With `s = s0` this stays
    /// below `C(f)`.
    pub fn term_bound(&self) -> u64 {
        let (c0, k, s) = (self.c0, self.k as u64, self.s as u64);
        (c0 + 1) * k * s + c0 * (self.modulus - 1) + (c0 - 1) + 1
    }

    /// Indices `n'` with `a(n') >= max(2|z| + 1, |z| + T)`, increasing.
    fn shift_candidates<'b>(&'b self, z: &BigInt) -> impl Iterator<Item = (u64, BigInt)> + 'b {
        let abs = z.abs();
        let need = std::cmp::max(&abs * 2 + 1, &abs + &self.threshold);
        self.table.iter().filter(move |(_, v)| *v >= need)
    }

    pub fn decompose(&self, z: i128) -> Result<Decomposition> {
        let bound = self.term_bound();
        if z == 0 {
            return Ok(Decomposition::empty(0, Route::Constructive, bound));
        }
        let big = BigInt::from(z);
        let mut counts = if big.abs() < self.threshold {
            // Try successive shift indices until the prime-power step succeeds.
            let mut last = None;
            let mut found = None;
            for (n, v) in self.shift_candidates(&big).take(MAX_SHIFT_ATTEMPTS) {
                let shifted = (&big - v).to_i128().ok_or(Error::Overflow("shifted Z"))?;
                match self.core(shifted) {
                    Ok(mut counts) => {
                        *counts.entry(n).or_default() += 1;
                        found = Some(counts);
                        break;
                    }
                    Err(err @ Error::NoWaringSolution { .. }) => last = Some(err),
                    Err(err) => return Err(err),
                }
            }
            match (found, last) {
                (Some(counts), _) => counts,
                (None, Some(err)) => return Err(err),
                (None, None) => {
                    return Err(Error::Precondition(format!(
                        "no coefficient large enough to shift Z = {z}"
                    )))
                }
            }
        } else {
            self.core(z)?
        };
        counts.retain(|_, m| *m > 0);
        let d = Decomposition::from_counts(z, Route::Constructive, counts, bound, self.default_s);
        verify(&d, self.table)?;
        Ok(d)
    }

    /// `z = C0 z0 + r1`, `z0 = z' + r0` with `z' = s (mod K)`, then `z'` as a
    /// signed sum of `s` prime powers, each expanded into coefficients.
    fn core(&self, z: i128) -> Result<BTreeMap<u64, u64>> {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        let c0 = self.c0 as i128;
        let (z0, r1) = z.div_mod_floor(&c0);
        let r0 = (z0 - self.s as i128).rem_euclid(self.modulus as i128);
        let z_prime = z0 - r0;

        if z_prime != 0 {
            let target = z_prime.unsigned_abs();
            let m_eff = (primes::integer_root(target, self.e) as u64).min(self.sets.m);
            let set = self.index.set();
            let pred = |p: u64| p <= m_eff && self.sets.contains(p) && !set.contains(p);
            let solution = waring::find_solution(target, self.s, self.e, &pred, self.node_budget)?
                .ok_or(Error::NoWaringSolution {
                    z: target,
                    s: self.s,
                    e: self.e,
                })?;
            let flip = z_prime < 0;
            for &q in &solution.primes {
                let witness = self.index.repair(q)?;
                let expansion = expand_from_witness(&witness, self.table)?;
                let (pos, neg) = if flip {
                    (&expansion.negative, &expansion.positive)
                } else {
                    (&expansion.positive, &expansion.negative)
                };
                for &n in pos {
                    *counts.entry(n).or_default() += self.c0;
                }
                for &n in neg {
                    if n.gcd(&self.n_f) != 1 {
                        return Err(Error::Internal(format!("index {n} is not coprime to n_f")));
                    }
                    let scaled = n.checked_mul(self.n_f).ok_or(Error::Overflow("n * n_f"))?;
                    *counts.entry(scaled).or_default() += 1;
                }
            }
        }
        *counts.entry(1).or_default() += (c0 * r0 + r1) as u64;
        Ok(counts)
    }
}

/// Shift indices tried for small `|Z|` before giving up.
const MAX_SHIFT_ATTEMPTS: usize = 64;

pub fn decompose_constructive(
    z: i128,
    table: &CoeffTable,
    params: &ConstructiveParams,
) -> Result<Decomposition> {
    ConstructivePipeline::new(table, params)?.decompose(z)
}

/// Default cap on stored triple sums in [`SearchIndex`].
pub const DEFAULT_TRIPLE_BUDGET: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Entry<const D: usize> {
    sum: i128,
    ids: [u32; D],
}

/// Distinct coefficient values (each with its smallest index) and the
/// sorted sums of value pairs and triples.
#[derive(Debug)]
pub struct SearchIndex {
    n_max: u64,
    values: Vec<i128>,
    indices: Vec<u64>,
    singles: Vec<Entry<1>>,
    pairs: Vec<Entry<2>>,
    triples: Vec<Entry<3>>,
    triples_complete: bool,
}

impl SearchIndex {
    pub fn new(table: &CoeffTable, n_max: u64, triple_budget: usize) -> Result<Self> {
        if n_max > table.n_max() {
            return Err(Error::BeyondTable {
                index: n_max,
                n_max: table.n_max(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        let (mut values, mut indices) = (Vec::new(), Vec::new());
        for n in 1..=n_max {
            let v = table.value_i128(n)?;
            if seen.insert(v) {
                values.push(v);
                indices.push(n);
            }
        }
        let u = values.len();
        let mut singles: Vec<Entry<1>> = (0..u)
            .map(|i| Entry {
                sum: values[i],
                ids: [i as u32],
            })
            .collect();
        singles.sort_unstable();

        let rows = par::map_range(0..u, |i| {
            (i..u)
                .map(|j| Entry {
                    sum: values[i] + values[j],
                    ids: [i as u32, j as u32],
                })
                .collect::<Vec<_>>()
        });
        let mut pairs: Vec<Entry<2>> = rows.into_iter().flatten().collect();
        par::sort_unstable(&mut pairs);

        let mut u3 = u;
        while u3 > 0 && multisets3(u3) > triple_budget as u64 {
            u3 -= 1;
        }
        let rows = par::map_range(0..u3, |i| {
            let mut row = Vec::new();
            for j in i..u3 {
                for l in j..u3 {
                    row.push(Entry {
                        sum: values[i] + values[j] + values[l],
                        ids: [i as u32, j as u32, l as u32],
                    });
                }
            }
            row
        });
        let mut triples: Vec<Entry<3>> = rows.into_iter().flatten().collect();
        par::sort_unstable(&mut triples);

        Ok(SearchIndex {
            n_max,
            values,
            indices,
            singles,
            pairs,
            triples,
            triples_complete: u3 == u,
        })
    }

    pub fn distinct_values(&self) -> usize {
        self.values.len()
    }

    /// Whether every triple of values is stored; depths 5 and 6 are
    /// exhaustive only then.
    pub fn triples_complete(&self) -> bool {
        self.triples_complete
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    /// Shortest representation found with at most `ell_max` terms: a core of
    /// up to six values plus padding with `a(1) = 1`.
    pub fn search(&self, z: i128, ell_max: u64) -> Result<Decomposition> {
        if z == 0 {
            return Ok(Decomposition::empty(0, Route::Search, ell_max));
        }
        let zero = [Entry::<0> { sum: 0, ids: [] }];
        let mut best: Option<(u64, usize, i128)> = None;
        let mut consider = |depth: usize, x: Option<i128>| {
            if let Some(x) = x {
                let ell = depth as u64 + (z - x) as u64;
                if best.is_none_or(|(l, d, _)| (ell, depth) < (l, d)) {
                    best = Some((ell, depth, x));
                }
            }
        };
        consider(0, (z >= 0).then_some(0));
        consider(1, best_below(&self.singles, &zero, z));
        consider(2, best_below(&self.pairs, &zero, z));
        consider(3, best_below(&self.singles, &self.pairs, z));
        consider(4, best_below(&self.pairs, &self.pairs, z));
        consider(5, best_below(&self.pairs, &self.triples, z));
        consider(6, best_below(&self.triples, &self.triples, z));
        let (ell, depth, x) = best.ok_or(Error::NotFound { ell_max })?;
        if ell > ell_max {
            return Err(Error::NotFound { ell_max });
        }
        let core = match depth {
            0 => Some(Vec::new()),
            1 => lex_min(&self.singles, &zero, x),
            2 => lex_min(&self.pairs, &zero, x),
            3 => lex_min(&self.singles, &self.pairs, x),
            4 => lex_min(&self.pairs, &self.pairs, x),
            5 => lex_min(&self.pairs, &self.triples, x),
            _ => lex_min(&self.triples, &self.triples, x),
        }
        .ok_or_else(|| Error::Internal("search lost its best sum".into()))?;
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for id in core {
            *counts.entry(self.indices[id as usize]).or_default() += 1;
        }
        let pad = (z - x) as u64;
        if pad > 0 {
            *counts.entry(1).or_default() += pad;
        }
        Ok(Decomposition::from_counts(z, Route::Search, counts, ell_max, true))
    }
}

fn multisets3(u: usize) -> u64 {
    let u = u as u64;
    u * (u + 1) * (u + 2) / 6
}

/// Largest `a + b <= z` over `a` in `left`, `b` in `right`.
fn best_below<const A: usize, const B: usize>(left: &[Entry<A>], right: &[Entry<B>], z: i128) -> Option<i128> {
    let mut best: Option<i128> = None;
    let mut j = right.len();
    for a in left {
        while j > 0 && a.sum + right[j - 1].sum > z {
            j -= 1;
        }
        if j == 0 {
            break;
        }
        let cand = a.sum + right[j - 1].sum;
        if best.is_none_or(|b| cand > b) {
            best = Some(cand);
        }
    }
    best
}

/// Lexicographically smallest sorted index list among all splits summing to
/// exactly `x`. Ids are ordered by smallest index, so comparing ids compares
/// indices.
fn lex_min<const A: usize, const B: usize>(left: &[Entry<A>], right: &[Entry<B>], x: i128) -> Option<Vec<u32>> {
    let mut best: Option<Vec<u32>> = None;
    for a in left {
        let target = x - a.sum;
        let lo = right.partition_point(|b| b.sum < target);
        for b in right[lo..].iter().take_while(|b| b.sum == target) {
            let mut ids: Vec<u32> = a.ids.iter().chain(b.ids.iter()).copied().collect();
            ids.sort_unstable();
            if best.as_ref().is_none_or(|cur| ids < *cur) {
                best = Some(ids);
            }
        }
    }
    best
}

pub fn decompose_search(z: i128, table: &CoeffTable, n_max: u64, ell_max: u64) -> Result<Decomposition> {
    let index = SearchIndex::new(table, n_max, DEFAULT_TRIPLE_BUDGET)?;
    let d = index.search(z, ell_max)?;
    verify(&d, table)?;
    Ok(d)
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
    fn cf_values() {
        assert_eq!(cf_bound(&l11(10)).unwrap().value, 13);
        let d = cf_bound(&delta(10)).unwrap();
        assert_eq!((d.c0, d.k, d.s0), (24, 6, 1978));
        assert_eq!(d.value, 24 * (6 * 1978 + 3) + 6 * 1978 + 1);
        assert_eq!(cf_formula(1, 1, 1).unwrap(), 6);
    }

    #[test]
    fn level11_prime_power() {
        let t = l11(1000);
        let p0 = signs::prime_sets(&t, 1000).unwrap().p0;
        let s = admissible::greedy_maximal(&p0, 1, &t, admissible::DEFAULT_SUM_LIMIT).unwrap();
        let p = p0.iter().copied().find(|&p| !s.contains(p)).unwrap();
        let x = prime_power_expand(p, &s, &t).unwrap();
        assert_eq!((x.positive.len(), x.negative.len()), (1, 1));
        assert_eq!(x.resum(&t).unwrap(), BigInt::from(p));
    }

    #[test]
    fn constructive_level11() {
        let t = l11(20_000);
        let pipeline = ConstructivePipeline::new(&t, &ConstructiveParams::default()).unwrap();
        for z in [30_000i128, 30_001, -30_001, 39_998, 7, -3, 1] {
            let d = pipeline.decompose(z).unwrap();
            let r = verify(&d, &t).unwrap();
            assert!(r.within_bound, "{z}: ell {} bound {}", d.ell, d.bound);
            assert!(d.ell <= 13);
        }
        assert!(pipeline.decompose(0).unwrap().terms.is_empty());
    }

    #[test]
    fn tampered_multiplicity_fails() {
        let t = l11(100);
        let mut d = decompose_search(5, &t, 100, 10).unwrap();
        d.terms[0].1 += 1;
        match verify(&d, &t) {
            Err(Error::SumMismatch { delta, .. }) => {
                assert_eq!(delta, t.coefficient(d.terms[0].0).unwrap())
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn search_small_delta() {
        let t = delta(50);
        let one = decompose_search(1, &t, 50, 5).unwrap();
        assert_eq!(one.terms, vec![(1, 1)]);
        let d = decompose_search(229, &t, 50, 3).unwrap();
        assert!(d.ell <= 3);
        assert!(decompose_search(0, &t, 50, 3).unwrap().terms.is_empty());
        assert!(matches!(
            decompose_search(1_000_000_007, &t, 50, 2),
            Err(Error::NotFound { ell_max: 2 })
        ));
    }
}
