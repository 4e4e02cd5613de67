//! Prime generation and small-integer arithmetic.

/// All primes `p <= limit`, via a segmented sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let root = integer_sqrt(limit);
    let base = simple_sieve(root);
    let mut out = Vec::with_capacity(estimate_pi(limit));
    out.extend(base.iter().copied());

    const SEGMENT: u64 = 1 << 18;
    let mut low = root + 1;
    let mut mark = vec![false; SEGMENT as usize];
    while low <= limit {
        let high = (low + SEGMENT - 1).min(limit);
        let len = (high - low + 1) as usize;
        mark[..len].fill(false);
        for &p in &base {
            if p * p > high {
                break;
            }
            let mut m = (low.div_ceil(p) * p).max(p * p);
            while m <= high {
                mark[(m - low) as usize] = true;
                m += p;
            }
        }
        out.extend(
            mark[..len]
                .iter()
                .enumerate()
                .filter(|(_, &composite)| !composite)
                .map(|(i, _)| low + i as u64),
        );
        low = high + 1;
    }
    out
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    if n < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn estimate_pi(x: u64) -> usize {
    if x < 10 {
        return 4;
    }
    let xf = x as f64;
    (1.3 * xf / xf.ln()) as usize
}

/// Smallest prime factor of every `n <= limit` (`spf[0] = spf[1] = 0`).
pub fn smallest_factors(limit: usize) -> Vec<u32> {
    let mut spf = vec![0u32; limit + 1];
    for i in 2..=limit {
        if spf[i] == 0 {
            spf[i] = i as u32;
            if let Some(start) = i.checked_mul(i) {
                let mut j = start;
                while j <= limit {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
    }
    spf
}

pub fn integer_sqrt(n: u64) -> u64 {
    integer_root(n as u128, 2) as u64
}

/// `floor(n^(1/e))`.
pub fn integer_root(n: u128, e: u32) -> u128 {
    if e == 0 {
        panic!("zeroth root");
    }
    if e == 1 || n < 2 {
        return n;
    }
    let mut x = (n as f64).powf(1.0 / e as f64) as u128;
    // f64 is only a first guess; settle exactly.
    while x > 0 && checked_pow(x, e).is_none_or(|v| v > n) {
        x -= 1;
    }
    while checked_pow(x + 1, e).is_some_and(|v| v <= n) {
        x += 1;
    }
    x
}

pub fn checked_pow(base: u128, e: u32) -> Option<u128> {
    base.checked_pow(e)
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for a in SMALL {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Prime factorisation by trial division, ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            let mut r = 0;
            while n.is_multiple_of(p) {
                n /= p;
                r += 1;
            }
            out.push((p, r));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn divisor_count(n: u64) -> u64 {
    factorize(n).iter().map(|&(_, r)| r as u64 + 1).product()
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sieve_matches_trial_division() {
        let sieved = primes_up_to(300_000);
        let naive: Vec<u64> = (0..=300_000u64).filter(|&n| is_prime(n)).collect();
        assert_eq!(sieved, naive);
        assert_eq!(primes_up_to(100).len(), 25);
        assert!(primes_up_to(1).is_empty());
        assert_eq!(primes_up_to(2), vec![2]);
    }

    #[test]
    fn spf_and_factorize_agree() {
        let spf = smallest_factors(5000);
        for n in 2..=5000u64 {
            assert_eq!(spf[n as usize] as u64, factorize(n)[0].0);
        }
    }

    #[test]
    fn roots() {
        assert_eq!(integer_root(177_147, 11), 3);
        assert_eq!(integer_root(177_146, 11), 2);
        assert_eq!(integer_root(1_000_000, 3), 100);
        assert_eq!(integer_root(999_999, 3), 99);
        assert_eq!(integer_sqrt(u64::MAX), 4_294_967_295);
    }

    #[test]
    fn miller_rabin_large() {
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751));
        assert!(is_prime(1_000_000_007));
    }

    #[test]
    fn arithmetic_functions() {
        assert_eq!(divisor_count(720), 30);
        assert_eq!(euler_phi(36), 12);
        assert_eq!(euler_phi(1), 1);
    }
}
