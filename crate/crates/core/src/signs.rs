//! First negative coefficient and the density of large prime coefficients.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;
use serde::Serialize;

use crate::coeffs::CoeffTable;
use crate::error::{Error, Result};
use crate::par;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignReport {
    /// Smallest `n` with `a(n) < 0` and `gcd(n, N) = 1`.
    pub n_f: u64,
    #[serde(serialize_with = "serialize_display")]
    pub a_n_f: BigInt,
    /// `(4 k^2 N)^{3/8}`.
    pub bound_value: f64,
    /// `n_f / bound_value`; the bound's implied constant is unknown, so this
    /// is reported, never judged.
    pub ratio: f64,
}

pub(crate) fn serialize_display<T: std::fmt::Display, S: serde::Serializer>(
    value: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(value)
}

pub fn matomaki_bound(k: u32, level: u64) -> f64 {
    (4.0 * (k as f64).powi(2) * level as f64).powf(3.0 / 8.0)
}

pub fn first_negative(table: &CoeffTable) -> Result<SignReport> {
    let d = table.descriptor();
    let level = d.level();
    for (n, a) in table.iter() {
        if a.is_negative() && n.gcd(&level) == 1 {
            let bound_value = matomaki_bound(d.k(), level);
            return Ok(SignReport {
                n_f: n,
                a_n_f: a,
                bound_value,
                ratio: n as f64 / bound_value,
            });
        }
    }
    Err(Error::NoNegativeCoefficient {
        n_max: table.n_max(),
    })
}

/// Whether `|a(p)| > p^{(2k-1)/2}`, compared as `a(p)^2 > p^{2k-1}`.
pub fn is_large(table: &CoeffTable, p: u64) -> bool {
    let exponent = table.descriptor().hecke_exponent();
    match table.get(p) {
        Some(a) => &a * &a > BigInt::from(p).pow(exponent),
        None => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DensityReport {
    pub t: u64,
    pub count_large: u64,
    pub count_all: u64,
}

impl DensityReport {
    /// The empirical density `count_large / count_all`, undefined on an
    /// empty range.
    pub fn alpha_hat(&self) -> Option<f64> {
        (self.count_all > 0).then(|| self.count_large as f64 / self.count_all as f64)
    }

    pub fn is_empty(&self) -> bool {
        self.count_all == 0
    }
}

/// Counts primes `p <= t`, `p` not dividing the level, with large `|a(p)|`.
pub fn large_coeff_density(table: &CoeffTable, t: u64) -> Result<DensityReport> {
    if t > table.n_max() {
        return Err(Error::BeyondTable {
            index: t,
            n_max: table.n_max(),
        });
    }
    let d = table.descriptor();
    let candidates: Vec<u64> = table
        .primes()
        .iter()
        .copied()
        .take_while(|&p| p <= t)
        .filter(|&p| !d.divides_level(p))
        .collect();
    let flags = par::map_slice(&candidates, |&p| is_large(table, p));
    Ok(DensityReport {
        t,
        count_large: flags.iter().filter(|&&f| f).count() as u64,
        count_all: candidates.len() as u64,
    })
}

/// `P_0(M)`: primes `n_f < p <= M` coprime to the level, with the large
/// coefficient flag for each.
#[derive(Clone, Debug)]
pub struct PrimeSets {
    pub n_f: u64,
    pub m: u64,
    pub p0: Vec<u64>,
    large: Vec<bool>,
}

impl PrimeSets {
    pub fn is_large(&self, p: u64) -> bool {
        self.p0
            .binary_search(&p)
            .map(|i| self.large[i])
            .unwrap_or(false)
    }

    pub fn contains(&self, p: u64) -> bool {
        self.p0.binary_search(&p).is_ok()
    }

    /// `P_0(M)` intersected with the large-coefficient primes.
    pub fn large_primes(&self) -> Vec<u64> {
        self.p0
            .iter()
            .zip(&self.large)
            .filter(|(_, &l)| l)
            .map(|(&p, _)| p)
            .collect()
    }
}

pub fn prime_sets(table: &CoeffTable, m: u64) -> Result<PrimeSets> {
    if m > table.n_max() {
        return Err(Error::BeyondTable {
            index: m,
            n_max: table.n_max(),
        });
    }
    let n_f = first_negative(table)?.n_f;
    Ok(prime_sets_with(table, n_f, m))
}

pub(crate) fn prime_sets_with(table: &CoeffTable, n_f: u64, m: u64) -> PrimeSets {
    let d = table.descriptor();
    let p0: Vec<u64> = table
        .primes()
        .iter()
        .copied()
        .filter(|&p| p > n_f && p <= m && !d.divides_level(p))
        .collect();
    let large = par::map_slice(&p0, |&p| is_large(table, p));
    PrimeSets { n_f, m, p0, large }
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
    fn first_negative_builtins() {
        let r = first_negative(&delta(10)).unwrap();
        assert_eq!(r.n_f, 2);
        assert_eq!(r.a_n_f, BigInt::from(-24));
        assert!((r.bound_value - 144f64.powf(0.375)).abs() < 1e-12);
        assert!((r.bound_value - 6.447).abs() < 1e-3);
        assert_eq!(first_negative(&l11(10)).unwrap().n_f, 2);
    }

    #[test]
    fn no_negative_is_an_error() {
        let mut t = delta(3);
        t.set(2, BigInt::from(24));
        assert!(matches!(
            first_negative(&t),
            Err(Error::NoNegativeCoefficient { n_max: 3 })
        ));
    }

    #[test]
    fn density_small_ranges() {
        let t = delta(10);
        let r = large_coeff_density(&t, 10).unwrap();
        assert_eq!((r.count_large, r.count_all), (0, 4));
        let empty = large_coeff_density(&t, 1).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.alpha_hat(), None);
        assert!(large_coeff_density(&t, 11).is_err());
    }

    #[test]
    fn p0_sets() {
        assert_eq!(prime_sets(&delta(10), 10).unwrap().p0, vec![3, 5, 7]);
        assert_eq!(prime_sets(&l11(13), 13).unwrap().p0, vec![3, 5, 7, 13]);
        assert!(prime_sets(&delta(10), 2).unwrap().p0.is_empty());
    }

    #[test]
    fn n_f_stable_under_extension() {
        let small = first_negative(&l11(20)).unwrap();
        let big = first_negative(&l11(2000)).unwrap();
        assert_eq!(small.n_f, big.n_f);
    }
}
