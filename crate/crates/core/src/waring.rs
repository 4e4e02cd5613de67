//! Sums of prime powers: Hua's constants, exact representation counts,
//! explicit solutions and the truncated singular series.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;
use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;
use crate::primes;

/// Cap on `u128` cells held by the counting DP.
pub const DEFAULT_DP_LIMIT: u64 = 50_000_000;
/// Default node budget for [`find_solution`].
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;
/// Default truncation of the singular series.
pub const DEFAULT_Q_MAX: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HuaConstants {
    pub e: u32,
    /// The congruence modulus `K`.
    pub modulus: u64,
    pub s0: u64,
    /// `(4e - 2) ln e + e - 7`, rounded up and clamped to 1. Not used for
    /// solvability.
    pub kw_bound: u64,
}

pub fn hua_constants(e: u32) -> Result<HuaConstants> {
    if e == 0 {
        return Err(Error::InvalidArgument("exponent must be at least 1".into()));
    }
    let mut modulus = 1u64;
    for p in primes::primes_up_to(e as u64 + 1) {
        if !(e as u64).is_multiple_of(p - 1) {
            continue;
        }
        let mut theta = 0;
        let mut rest = e as u64;
        while rest.is_multiple_of(p) {
            rest /= p;
            theta += 1;
        }
        let gamma = if p == 2 && theta > 0 { theta + 2 } else { theta + 1 };
        modulus = modulus
            .checked_mul(p.checked_pow(gamma).ok_or(Error::Overflow("K"))?)
            .ok_or(Error::Overflow("K"))?;
    }
    let ef = e as f64;
    let s0 = if e <= 10 {
        1u64 << e
    } else {
        (2.0 * ef * ef * (2.0 * ef.ln() + ef.ln().ln() + 2.5)).ceil() as u64
    };
    let kw = ((4.0 * ef - 2.0) * ef.ln() + ef - 7.0).ceil();
    Ok(HuaConstants {
        e,
        modulus,
        s0,
        kw_bound: if kw < 1.0 { 1 } else { kw as u64 },
    })
}

/// Which primes may appear in a representation.
pub trait PrimePredicate: Sync {
    fn allows(&self, p: u64) -> bool;
}

impl<F: Fn(u64) -> bool + Sync> PrimePredicate for F {
    fn allows(&self, p: u64) -> bool {
        self(p)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AllPrimes;

impl PrimePredicate for AllPrimes {
    fn allows(&self, _: u64) -> bool {
        true
    }
}

/// Allowed primes with `p^e <= z`, increasing, paired with `p^e`.
fn allowed_powers<P: PrimePredicate + ?Sized>(z: u128, e: u32, pred: &P) -> Result<Vec<(u64, u128)>> {
    let root = primes::integer_root(z, e);
    let root = u64::try_from(root).map_err(|_| Error::Overflow("prime bound"))?;
    Ok(primes::primes_up_to(root)
        .into_iter()
        .filter(|&p| pred.allows(p))
        .filter_map(|p| primes::checked_pow(p as u128, e).map(|pe| (p, pe)))
        .filter(|&(_, pe)| pe <= z)
        .collect())
}

fn binomials(n: usize) -> Vec<Vec<u128>> {
    let mut c = vec![vec![0u128; n + 1]; n + 1];
    for i in 0..=n {
        c[i][0] = 1;
        for j in 1..=i {
            c[i][j] = c[i - 1][j - 1] + c[i - 1][j];
        }
    }
    c
}

/// Number of ordered `s`-tuples of allowed primes with `sum p^e = z`.
///
/// Primes are folded in one at a time with multiplicity `m` and weight
/// `C(t, m)`, which counts orderings of a multiset directly. Only layers up
/// to `ceil(s/2)` are built; the two halves are then convolved at `z`.
pub fn count_representations<P: PrimePredicate + ?Sized>(
    z: u64,
    s: u32,
    e: u32,
    pred: &P,
    dp_limit: u64,
) -> Result<u128> {
    if s == 0 || e == 0 {
        return Err(Error::InvalidArgument("s and e must be at least 1".into()));
    }
    if z == 0 {
        return Ok(0);
    }
    let half = s.div_ceil(2) as usize;
    let width = z as usize + 1;
    let cells = (half as u64 + 1).saturating_mul(width as u64);
    if cells > dp_limit {
        return Err(Error::DpLimit {
            cells,
            limit: dp_limit,
        });
    }
    let binom = binomials(half);
    let mut layers: Vec<Vec<u128>> = vec![vec![0u128; width]; half + 1];
    layers[0][0] = 1;
    let overflow = AtomicBool::new(false);
    for (_, pe) in allowed_powers(z as u128, e, pred)? {
        let w = pe as usize;
        for t in (1..=half).rev() {
            let (lower, upper) = layers.split_at_mut(t);
            let lower = &*lower;
            let row = &binom[t];
            par::for_each_chunk_mut(&mut upper[0], 1 << 14, |start, chunk| {
                for (off, cell) in chunk.iter_mut().enumerate() {
                    let v = start + off;
                    let mut acc = *cell;
                    let mut m = 1;
                    while m <= t && m * w <= v {
                        let term = row[m].checked_mul(lower[t - m][v - m * w]);
                        match term.and_then(|x| acc.checked_add(x)) {
                            Some(next) => acc = next,
                            None => {
                                overflow.store(true, Ordering::Relaxed);
                                break;
                            }
                        }
                        m += 1;
                    }
                    *cell = acc;
                }
            });
        }
    }
    if overflow.load(Ordering::Relaxed) {
        return Err(Error::Overflow("representation count"));
    }
    let a = s as usize - half;
    let (left, right) = (&layers[half], &layers[a]);
    let mut total = 0u128;
    for j in 0..width {
        if left[j] == 0 || right[width - 1 - j] == 0 {
            continue;
        }
        total = left[j]
            .checked_mul(right[width - 1 - j])
            .and_then(|x| total.checked_add(x))
            .ok_or(Error::Overflow("representation count"))?;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WgSolution {
    pub z: u128,
    pub e: u32,
    /// Non-increasing.
    pub primes: Vec<u64>,
}

impl WgSolution {
    pub fn verify<P: PrimePredicate + ?Sized>(&self, pred: &P) -> bool {
        let sum = self
            .primes
            .iter()
            .try_fold(0u128, |acc, &p| {
                primes::checked_pow(p as u128, self.e).and_then(|pe| acc.checked_add(pe))
            });
        sum == Some(self.z) && self.primes.iter().all(|&p| primes::is_prime(p) && pred.allows(p))
    }
}

struct Search<'a> {
    powers: &'a [(u64, u128)],
    budget: u64,
    nodes: u64,
    failed: HashSet<(u128, u32, usize)>,
    picked: Vec<u64>,
}

impl Search<'_> {
    /// Tries to write `rest` as `left` powers with indices `< bound`.
    fn dfs(&mut self, rest: u128, left: u32, bound: usize) -> Option<bool> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return None;
        }
        if left == 0 {
            return Some(rest == 0);
        }
        let smallest = self.powers[0].1;
        if rest < smallest * left as u128 {
            return Some(false);
        }
        let top = bound.min(self.powers.partition_point(|&(_, pe)| pe <= rest));
        if top == 0 || self.powers[top - 1].1.saturating_mul(left as u128) < rest {
            return Some(false);
        }
        if left == 1 {
            let hit = self.powers[..top].binary_search_by(|&(_, pe)| pe.cmp(&rest));
            return Some(match hit {
                Ok(i) => {
                    self.picked.push(self.powers[i].0);
                    true
                }
                Err(_) => false,
            });
        }
        if self.failed.contains(&(rest, left, top)) {
            return Some(false);
        }
        for i in (0..top).rev() {
            let (p, pe) = self.powers[i];
            if pe.saturating_mul(left as u128) < rest {
                break;
            }
            self.picked.push(p);
            match self.dfs(rest - pe, left - 1, i + 1) {
                Some(true) => return Some(true),
                Some(false) => {
                    self.picked.pop();
                }
                None => return None,
            }
        }
        self.failed.insert((rest, left, top));
        Some(false)
    }
}

/// Depth-first search over non-increasing prime sequences, largest power
/// first, with memoized dead ends. `None` after exhausting the node budget
/// or the search space; never a proof of unsolvability.
pub fn find_solution<P: PrimePredicate + ?Sized>(
    z: u128,
    s: u32,
    e: u32,
    pred: &P,
    budget: u64,
) -> Result<Option<WgSolution>> {
    let constants = hua_constants(e)?;
    if s == 0 {
        return Err(Error::InvalidArgument("s must be at least 1".into()));
    }
    if z % constants.modulus as u128 != s as u128 % constants.modulus as u128 {
        log::warn!("Z = {z} is not congruent to s = {s} mod K = {}", constants.modulus);
    }
    let powers = allowed_powers(z, e, pred)?;
    if powers.is_empty() {
        return Ok(None);
    }
    let mut search = Search {
        powers: &powers,
        budget,
        nodes: 0,
        failed: HashSet::new(),
        picked: Vec::with_capacity(s as usize),
    };
    match search.dfs(z, s, powers.len()) {
        Some(true) => Ok(Some(WgSolution {
            z,
            e,
            primes: search.picked,
        })),
        Some(false) => Ok(None),
        None => {
            log::debug!("node budget {budget} exhausted for Z = {z}");
            Ok(None)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularSeriesEstimate {
    pub value: f64,
    pub q_max: u64,
    /// Always `hua-standard`: each term carries the factor `phi(q)^{-s}`.
    pub normalization: &'static str,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn series_term(q: u64, z: u64, s: u32, e: u32) -> f64 {
    let qu = q as usize;
    let mut counts = vec![0u64; qu];
    for l in 0..q {
        if l.gcd(&q) == 1 {
            let r = (0..e).fold(1u128 % q as u128, |acc, _| acc * l as u128 % q as u128);
            counts[r as usize] += 1;
        }
    }
    let support: Vec<(usize, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(r, &c)| (r, c as f64))
        .collect();
    let roots: Vec<Complex64> = (0..qu)
        .map(|j| Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / q as f64))
        .collect();
    let z_mod = (z % q) as usize;
    let mut total = Complex64::new(0.0, 0.0);
    for h in 0..qu {
        if (h as u64).gcd(&q) != 1 {
            continue;
        }
        let sum: Complex64 = support
            .iter()
            .map(|&(r, c)| roots[h * r % qu] * c)
            .sum();
        let phase = roots[(qu - h * z_mod % qu) % qu];
        total += sum.powu(s) * phase;
    }
    let phi = primes::euler_phi(q) as f64;
    total.re / phi.powi(s as i32)
}

/// `sum_{q <= q_max} phi(q)^{-s} sum_{(h,q)=1} S(q,h)^s e(-hz/q)` with
/// `S(q,h) = sum_{(l,q)=1} e(h l^e / q)`.
pub fn singular_series(z: u64, s: u32, e: u32, q_max: u64) -> Result<SingularSeriesEstimate> {
    if q_max == 0 || s == 0 || e == 0 {
        return Err(Error::InvalidArgument("q_max, s and e must be at least 1".into()));
    }
    let q_limit = usize::try_from(q_max).map_err(|_| Error::Overflow("q_max"))?;
    let terms = par::map_range(1..q_limit + 1, |q| series_term(q as u64, z, s, e));
    Ok(SingularSeriesEstimate {
        value: compensated_sum(terms),
        q_max,
        normalization: "hua-standard",
    })
}

/// `S(z) Gamma(1/e)^s / Gamma(s/e) z^{s/e - 1} / ln^s z`.
pub fn hua_main_term(z: u64, s: u32, e: u32, ss: &SingularSeriesEstimate) -> Result<f64> {
    if z < 3 {
        return Err(Error::InvalidArgument("main term needs Z >= 3".into()));
    }
    if ss.value == 0.0 {
        return Ok(0.0);
    }
    let (sf, ef, zf) = (s as f64, e as f64, z as f64);
    let log_factor = sf * libm::lgamma(1.0 / ef) - libm::lgamma(sf / ef)
        + (sf / ef - 1.0) * zf.ln()
        - sf * zf.ln().ln();
    Ok(ss.value * log_factor.exp())
}
