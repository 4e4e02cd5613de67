use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use serde::Serialize;

use super::format::within_deligne;
use super::table::CoeffTable;
use crate::par;
use crate::primes;

/// Multiplicativity is checked exhaustively below this many coprime pairs;
/// beyond it only the smallest left factors are sampled.
const PAIR_BUDGET: u64 = 4_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    Normalization,
    Hecke { p: u64 },
    Multiplicativity { m: u64, n: u64 },
    Deligne { p: u64 },
    DivisorBound { n: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Normalization => write!(f, "a(1) != 1"),
            Violation::Hecke { p } => write!(f, "hecke identity fails at p={p}"),
            Violation::Multiplicativity { m, n } => {
                write!(f, "a({m}*{n}) != a({m}) a({n})")
            }
            Violation::Deligne { p } => write!(f, "deligne bound fails at p={p}"),
            Violation::DivisorBound { n } => write!(f, "divisor bound fails at n={n}"),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct IdentityReport {
    pub violations: Vec<Violation>,
    pub hecke_primes: u64,
    pub coprime_pairs: u64,
    pub deligne_primes: u64,
    pub divisor_indices: u64,
}

impl IdentityReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks normalization, the Hecke identity at `p^2`, multiplicativity,
/// the Deligne bound at primes and the divisor bound at every index.
pub fn check_identities(table: &CoeffTable) -> IdentityReport {
    let mut report = IdentityReport::default();
    if table.get(1) != Some(BigInt::one()) {
        report.violations.push(Violation::Normalization);
    }
    hecke(table, &mut report);
    multiplicativity(table, &mut report);
    deligne(table, &mut report);
    divisor_bound(table, &mut report);
    report
}

fn hecke(table: &CoeffTable, report: &mut IdentityReport) {
    let d = table.descriptor();
    let exponent = d.hecke_exponent();
    for &p in table.primes() {
        if p.saturating_mul(p) > table.n_max() {
            break;
        }
        if d.divides_level(p) {
            continue;
        }
        report.hecke_primes += 1;
        let ap = table.get(p).unwrap();
        let ap2 = table.get(p * p).unwrap();
        if &ap * &ap - ap2 != BigInt::from(p).pow(exponent) {
            report.violations.push(Violation::Hecke { p });
        }
    }
}

fn multiplicativity(table: &CoeffTable, report: &mut IdentityReport) {
    let n_max = table.n_max();
    let mut left_max = 1;
    let mut planned = 0u64;
    for m in 2..=n_max {
        let right = n_max / m;
        if right <= m {
            break;
        }
        planned += right - m;
        if planned > PAIR_BUDGET && left_max > 1 {
            break;
        }
        left_max = m;
    }
    let rows = par::map_range(2..left_max as usize + 1, |m| {
        let m = m as u64;
        let mut bad = Vec::new();
        let mut checked = 0u64;
        for n in m + 1..=n_max / m {
            if m.gcd(&n) != 1 {
                continue;
            }
            checked += 1;
            if !product_matches(table, m, n) {
                bad.push(Violation::Multiplicativity { m, n });
            }
        }
        (checked, bad)
    });
    for (checked, bad) in rows {
        report.coprime_pairs += checked;
        report.violations.extend(bad);
    }
}

fn product_matches(table: &CoeffTable, m: u64, n: u64) -> bool {
    let fast = table
        .get_i128(m)
        .zip(table.get_i128(n))
        .and_then(|(x, y)| x.checked_mul(y))
        .zip(table.get_i128(m * n));
    match fast {
        Some((lhs, rhs)) => lhs == rhs,
        None => table.get(m).unwrap() * table.get(n).unwrap() == table.get(m * n).unwrap(),
    }
}

fn deligne(table: &CoeffTable, report: &mut IdentityReport) {
    let d = table.descriptor();
    let exponent = d.hecke_exponent();
    let candidates: Vec<u64> = table
        .primes()
        .iter()
        .copied()
        .filter(|&p| !d.divides_level(p))
        .collect();
    report.deligne_primes = candidates.len() as u64;
    let bad = par::map_slice(&candidates, |&p| {
        (!within_deligne(p, &table.get(p).unwrap(), exponent)).then_some(p)
    });
    report
        .violations
        .extend(bad.into_iter().flatten().map(|p| Violation::Deligne { p }));
}

fn divisor_bound(table: &CoeffTable, report: &mut IdentityReport) {
    let n_max = table.n_max() as usize;
    let exponent = table.descriptor().hecke_exponent();
    let spf = primes::smallest_factors(n_max);
    let divisors = |mut n: usize| -> u64 {
        let mut count = 1u64;
        while n > 1 {
            let p = spf[n] as usize;
            let mut r = 0;
            while n.is_multiple_of(p) {
                n /= p;
                r += 1;
            }
            count *= r + 1;
        }
        count
    };
    report.divisor_indices = n_max as u64;
    let bad = par::map_range(1..n_max + 1, |n| {
        let a = table.get(n as u64).unwrap();
        let d = BigInt::from(divisors(n));
        let ok = &a * &a <= &d * &d * BigInt::from(n).pow(exponent);
        (!ok).then_some(n as u64)
    });
    report
        .violations
        .extend(bad.into_iter().flatten().map(|n| Violation::DivisorBound { n }));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{expand_eta_product, NewformDescriptor};

    #[test]
    fn clean_tables() {
        let delta = expand_eta_product(&NewformDescriptor::delta(), 2000).unwrap();
        let report = check_identities(&delta);
        assert!(report.is_clean(), "{:?}", report.violations);
        assert_eq!(report.hecke_primes, 14);
        let l11 = expand_eta_product(&NewformDescriptor::level11(), 1000).unwrap();
        assert!(check_identities(&l11).is_clean());
    }

    #[test]
    fn tampered_a4_breaks_hecke() {
        let mut delta = expand_eta_product(&NewformDescriptor::delta(), 50).unwrap();
        delta.set(4, BigInt::from(0));
        let report = check_identities(&delta);
        assert!(report.violations.contains(&Violation::Hecke { p: 2 }));
    }

    #[test]
    fn tampered_prime_breaks_deligne_and_products() {
        let mut delta = expand_eta_product(&NewformDescriptor::delta(), 60).unwrap();
        delta.set(7, BigInt::from(10).pow(9));
        let report = check_identities(&delta);
        assert!(report.violations.contains(&Violation::Deligne { p: 7 }));
        assert!(report
            .violations
            .contains(&Violation::Multiplicativity { m: 2, n: 7 }));
        assert!(report.violations.contains(&Violation::DivisorBound { n: 7 }));
    }
}
