use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::One;

use super::descriptor::NewformDescriptor;
use super::table::{CoeffTable, Values};
use crate::error::{Error, Result};
use crate::primes;

/// Builds `a(1..=n_max)` from prime coefficients.
///
/// Composite indices use multiplicativity; prime powers use
/// `a(p^{r+1}) = a(p) a(p^r) - p^{2k-1} a(p^{r-1})` for `p` not dividing the
/// level and `a(p^r) = a(p)^r` otherwise.
pub fn hecke_extend(
    descriptor: &NewformDescriptor,
    prime_coefficients: &BTreeMap<u64, BigInt>,
    n_max: u64,
) -> Result<CoeffTable> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let limit = usize::try_from(n_max).map_err(|_| Error::Overflow("n_max"))?;
    let spf = primes::smallest_factors(limit);
    let exponent = descriptor.hecke_exponent();

    let mut a: Vec<BigInt> = vec![BigInt::default(); limit + 1];
    a[1] = BigInt::one();
    for n in 2..=limit {
        let p = spf[n] as usize;
        let mut m = n;
        let mut r = 0u32;
        while m % p == 0 {
            m /= p;
            r += 1;
        }
        a[n] = if m > 1 {
            &a[n / m] * &a[m]
        } else if r == 1 {
            prime_coefficients
                .get(&(p as u64))
                .cloned()
                .ok_or(Error::MissingPrime(p as u64))?
        } else {
            let lower = n / p;
            let step = &a[p] * &a[lower];
            if descriptor.divides_level(p as u64) {
                step
            } else {
                step - BigInt::from(p).pow(exponent) * &a[lower / p]
            }
        };
    }
    Ok(CoeffTable::from_values(descriptor.clone(), Values::from_big(a)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta_primes() -> BTreeMap<u64, BigInt> {
        [(2, -24i64), (3, 252), (5, 4830), (7, -16744)]
            .into_iter()
            .map(|(p, v)| (p, BigInt::from(v)))
            .collect()
    }

    #[test]
    fn delta_small_indices() {
        let t = hecke_extend(&NewformDescriptor::delta(), &delta_primes(), 10).unwrap();
        assert_eq!(t.get_i128(1), Some(1));
        assert_eq!(t.get_i128(4), Some(-1472));
        assert_eq!(t.get_i128(6), Some(-6048));
        assert_eq!(t.get_i128(8), Some(84480));
        assert_eq!(t.get_i128(9), Some(-113_643));
        assert_eq!(t.get_i128(10), Some(-115_920));
    }

    #[test]
    fn missing_prime_is_reported() {
        let err = hecke_extend(&NewformDescriptor::delta(), &delta_primes(), 11).unwrap_err();
        assert!(matches!(err, Error::MissingPrime(11)));
    }

    #[test]
    fn ramified_prime_powers() {
        // 11a: a(11) = 1, so a(121) = 1.
        let mut map: BTreeMap<u64, BigInt> = BTreeMap::new();
        for p in primes::primes_up_to(121) {
            map.insert(p, BigInt::from(if p == 11 { 1 } else { 0 }));
        }
        let t = hecke_extend(&NewformDescriptor::level11(), &map, 121).unwrap();
        assert_eq!(t.get_i128(121), Some(1));
        // a(4) = a(2)^2 - 2 with a(2) = 0
        assert_eq!(t.get_i128(4), Some(-2));
    }
}
