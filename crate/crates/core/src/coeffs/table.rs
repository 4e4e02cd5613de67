use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::descriptor::NewformDescriptor;
use crate::error::{Error, Result};
use crate::primes;

/// Coefficient storage, narrowed to the smallest integer type that holds
/// every entry. Slot 0 is unused and always zero.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Values {
    Small(Vec<i64>),
    Wide(Vec<i128>),
    Big(Vec<BigInt>),
}

impl Values {
    pub(crate) fn len(&self) -> usize {
        match self {
            Values::Small(v) => v.len(),
            Values::Wide(v) => v.len(),
            Values::Big(v) => v.len(),
        }
    }

    pub(crate) fn big(&self, i: usize) -> BigInt {
        match self {
            Values::Small(v) => BigInt::from(v[i]),
            Values::Wide(v) => BigInt::from(v[i]),
            Values::Big(v) => v[i].clone(),
        }
    }

    fn wide(&self, i: usize) -> Option<i128> {
        match self {
            Values::Small(v) => Some(v[i] as i128),
            Values::Wide(v) => Some(v[i]),
            Values::Big(v) => v[i].to_i128(),
        }
    }

    /// Narrows big-integer storage when every value fits.
    pub(crate) fn from_big(values: Vec<BigInt>) -> Self {
        if values.iter().all(|v| v.to_i64().is_some()) {
            Values::Small(values.iter().map(|v| v.to_i64().unwrap()).collect())
        } else if values.iter().all(|v| v.to_i128().is_some()) {
            Values::Wide(values.iter().map(|v| v.to_i128().unwrap()).collect())
        } else {
            Values::Big(values)
        }
    }

    pub(crate) fn into_big(self) -> Vec<BigInt> {
        match self {
            Values::Small(v) => v.into_iter().map(BigInt::from).collect(),
            Values::Wide(v) => v.into_iter().map(BigInt::from).collect(),
            Values::Big(v) => v,
        }
    }

    fn truncated(&self, len: usize) -> Self {
        match self {
            Values::Small(v) => Values::Small(v[..len].to_vec()),
            Values::Wide(v) => Values::Wide(v[..len].to_vec()),
            Values::Big(v) => Values::Big(v[..len].to_vec()),
        }
    }
}

/// Exact Fourier coefficients `a(1), ..., a(n_max)` of one newform.
///
/// Tables are immutable once shared; [`CoeffTable::set`] exists for building
/// deliberately corrupted fixtures.
#[derive(Debug)]
pub struct CoeffTable {
    descriptor: NewformDescriptor,
    values: Values,
    primes: OnceLock<Vec<u64>>,
}

impl Clone for CoeffTable {
    fn clone(&self) -> Self {
        Self {
            descriptor: self.descriptor.clone(),
            values: self.values.clone(),
            primes: OnceLock::new(),
        }
    }
}

impl PartialEq for CoeffTable {
    fn eq(&self, other: &Self) -> bool {
        self.descriptor == other.descriptor
            && self.n_max() == other.n_max()
            && (1..=self.n_max()).all(|n| self.get(n) == other.get(n))
    }
}

impl CoeffTable {
    pub(crate) fn from_values(descriptor: NewformDescriptor, values: Values) -> Self {
        debug_assert!(values.len() >= 2);
        Self {
            descriptor,
            values,
            primes: OnceLock::new(),
        }
    }

    pub fn descriptor(&self) -> &NewformDescriptor {
        &self.descriptor
    }

    pub fn n_max(&self) -> u64 {
        (self.values.len() - 1) as u64
    }

    pub fn get(&self, n: u64) -> Option<BigInt> {
        (n >= 1 && n <= self.n_max()).then(|| self.values.big(n as usize))
    }

    /// `a(n)` as an `i128`, when in range and representable.
    pub fn get_i128(&self, n: u64) -> Option<i128> {
        if n == 0 || n > self.n_max() {
            return None;
        }
        self.values.wide(n as usize)
    }

    pub fn value_i128(&self, n: u64) -> Result<i128> {
        if n == 0 || n > self.n_max() {
            return Err(Error::BeyondTable {
                index: n,
                n_max: self.n_max(),
            });
        }
        self.values
            .wide(n as usize)
            .ok_or(Error::CoefficientTooLarge(n))
    }

    /// Overwrites `a(n)`, widening storage if needed.
    pub fn set(&mut self, n: u64, value: BigInt) {
        assert!(n >= 1 && n <= self.n_max(), "index {n} outside table");
        let i = n as usize;
        match (&mut self.values, value.to_i64(), value.to_i128()) {
            (Values::Small(v), Some(x), _) => v[i] = x,
            (Values::Wide(v), _, Some(x)) => v[i] = x,
            (Values::Big(v), _, _) => v[i] = value,
            _ => {
                let mut all = std::mem::replace(&mut self.values, Values::Small(Vec::new()))
                    .into_big();
                all[i] = value;
                self.values = Values::from_big(all);
            }
        }
    }

    /// The first `m` coefficients as a table of their own.
    pub fn truncate(&self, m: u64) -> CoeffTable {
        let m = m.clamp(1, self.n_max());
        Self::from_values(
            self.descriptor.clone(),
            self.values.truncated(m as usize + 1),
        )
    }

    /// Primes up to `n_max`, computed once.
    pub fn primes(&self) -> &[u64] {
        self.primes.get_or_init(|| primes::primes_up_to(self.n_max()))
    }

    pub fn prime_map(&self) -> BTreeMap<u64, BigInt> {
        self.primes()
            .iter()
            .map(|&p| (p, self.values.big(p as usize)))
            .collect()
    }

    /// Largest positive coefficient and the smallest index attaining it.
    pub fn max_positive(&self) -> Option<(u64, BigInt)> {
        let mut best: Option<(u64, BigInt)> = None;
        for n in 1..=self.n_max() {
            let v = self.values.big(n as usize);
            if v.is_positive() && best.as_ref().is_none_or(|(_, b)| &v > b) {
                best = Some((n, v));
            }
        }
        best
    }

    /// `a(p^r)`, running the Hecke recursion past the end of the table.
    pub fn prime_power(&self, p: u64, r: u32) -> Result<BigInt> {
        if r == 0 {
            return Ok(BigInt::one());
        }
        let ap = self.get(p).ok_or(Error::BeyondTable {
            index: p,
            n_max: self.n_max(),
        })?;
        let ramified = self.descriptor.divides_level(p);
        let hecke = BigInt::from(p).pow(self.descriptor.hecke_exponent());
        let (mut prev, mut cur) = (BigInt::one(), ap.clone());
        let mut pj = p as u128;
        for _ in 2..=r {
            pj = pj.saturating_mul(p as u128);
            let next = if pj <= self.n_max() as u128 {
                self.values.big(pj as usize)
            } else if ramified {
                &cur * &ap
            } else {
                &cur * &ap - &hecke * &prev
            };
            prev = std::mem::replace(&mut cur, next);
        }
        Ok(cur)
    }

    /// `a(n)` for any `n` whose prime factors are covered by the table:
    /// multiplicativity plus the prime-power recursion.
    pub fn coefficient(&self, n: u64) -> Result<BigInt> {
        if n == 0 {
            return Err(Error::InvalidArgument("a(0) is undefined".into()));
        }
        if n <= self.n_max() {
            return Ok(self.values.big(n as usize));
        }
        let mut rest = n;
        let mut acc = BigInt::one();
        for &p in self.primes() {
            if rest <= self.n_max() || p.saturating_mul(p) > rest {
                break;
            }
            if rest.is_multiple_of(p) {
                let mut r = 0;
                while rest.is_multiple_of(p) {
                    rest /= p;
                    r += 1;
                }
                acc *= self.prime_power(p, r)?;
                if acc.is_zero() {
                    return Ok(acc);
                }
            }
        }
        if rest > self.n_max() {
            // Either a prime beyond the table or a product of two such primes.
            return Err(Error::BeyondTable {
                index: rest,
                n_max: self.n_max(),
            });
        }
        Ok(acc * self.values.big(rest as usize))
    }

    /// Iterator over `(n, a(n))` as big integers.
    pub fn iter(&self) -> impl Iterator<Item = (u64, BigInt)> + '_ {
        (1..=self.n_max()).map(|n| (n, self.values.big(n as usize)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_delta() -> CoeffTable {
        // a(1..=6) of Delta
        let v = [0i64, 1, -24, 252, -1472, 4830, -6048];
        CoeffTable::from_values(NewformDescriptor::delta(), Values::Small(v.to_vec()))
    }

    #[test]
    fn lookups() {
        let t = tiny_delta();
        assert_eq!(t.n_max(), 6);
        assert_eq!(t.get(0), None);
        assert_eq!(t.get(7), None);
        assert_eq!(t.get_i128(6), Some(-6048));
        assert!(matches!(t.value_i128(9), Err(Error::BeyondTable { .. })));
    }

    #[test]
    fn set_widens_storage() {
        let mut t = tiny_delta();
        let huge = BigInt::from(i128::MAX) * BigInt::from(4);
        t.set(3, huge.clone());
        assert_eq!(t.get(3), Some(huge));
        assert_eq!(t.get_i128(3), None);
        assert_eq!(t.get(2), Some(BigInt::from(-24)));
    }

    #[test]
    fn beyond_table_via_recursion() {
        let t = tiny_delta();
        // a(8) = a(2) a(4) - 2^11 a(2) = 35328 + 49152 = 84480
        assert_eq!(t.prime_power(2, 3).unwrap(), BigInt::from(84480));
        // a(10) = a(2) a(5)
        assert_eq!(t.coefficient(10).unwrap(), BigInt::from(-115_920));
        assert!(matches!(t.coefficient(7), Err(Error::BeyondTable { .. })));
    }
}
