//! q-expansions of the builtin eta products.
//!
//! Each Euler factor `prod_n (1 - q^{step n})` is applied as one sparse pass
//! with the pentagonal-number series `sum_m (-1)^m q^{step m(3m-1)/2}`; three
//! equal factors are applied at once with the cube series
//! `sum_m (-1)^m (2m+1) q^{step m(m+1)/2}`.
//!
//! When the divisor bound `|a(n)| <= d(n) n^{(w-1)/2} < 2 n^{w/2}` fits in a
//! machine word, every pass runs in wrapping arithmetic: the result is exact
//! modulo `2^64` or `2^128` and the bound pins down the representative.
//! Otherwise passes move from `i64` to `i128` to big integers as the
//! intermediate coefficients grow.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::descriptor::{CoefficientSource, NewformDescriptor};
use super::table::{CoeffTable, Values};
use crate::error::{Error, Result};
use crate::par;

/// Generalized pentagonal exponents `g <= limit` with sign `(-1)^m`, ascending.
pub fn pentagonal_terms(limit: usize) -> Vec<(usize, bool)> {
    let mut out = vec![(0, false)];
    for m in 1usize.. {
        let odd = m % 2 == 1;
        let g1 = m * (3 * m - 1) / 2;
        if g1 > limit {
            break;
        }
        out.push((g1, odd));
        let g2 = m * (3 * m + 1) / 2;
        if g2 <= limit {
            out.push((g2, odd));
        }
    }
    out
}

/// Triangular exponents `t <= limit` of `prod (1 - q^n)^3` with weight
/// `(-1)^m (2m + 1)`, ascending.
pub fn cube_terms(limit: usize) -> Vec<(usize, i64)> {
    (0usize..)
        .map(|m| (m * (m + 1) / 2, m))
        .take_while(|&(t, _)| t <= limit)
        .map(|(t, m)| {
            let w = 2 * m as i64 + 1;
            (t, if m % 2 == 1 { -w } else { w })
        })
        .collect()
}

fn weighted(terms: Vec<(usize, bool)>) -> Vec<(usize, i64)> {
    terms
        .into_iter()
        .map(|(g, neg)| (g, if neg { -1 } else { 1 }))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pass {
    step: usize,
    cube: bool,
}

/// Euler-factor passes for each builtin.
fn passes(source: &CoefficientSource) -> Option<Vec<Pass>> {
    let steps: &[(usize, usize)] = match source {
        CoefficientSource::Delta => &[(1, 24)],
        CoefficientSource::Level11 => &[(1, 2), (11, 2)],
        CoefficientSource::ApTable(_) => return None,
    };
    let mut out = Vec::new();
    for &(step, count) in steps {
        out.extend(std::iter::repeat_n(Pass { step, cube: true }, count / 3));
        out.extend(std::iter::repeat_n(Pass { step, cube: false }, count % 3));
    }
    Some(out)
}

/// Bits needed to hold every `a(n)`, `n <= n_max`, with sign.
fn final_bits(weight: u32, n_max: u64) -> u64 {
    let b = 64 - n_max.leading_zeros() as u64;
    2 + b * (weight as u64 / 2)
}

/// Coefficients `a(1..=n_max)` of a builtin eta product.
pub fn expand_eta_product(descriptor: &NewformDescriptor, n_max: u64) -> Result<CoeffTable> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let passes = passes(descriptor.source()).ok_or_else(|| {
        Error::InvalidArgument("ap-table forms are ingested with load_newform, not expanded".into())
    })?;
    let len = usize::try_from(n_max)
        .ok()
        .and_then(|n| n.checked_add(1))
        .ok_or(Error::Overflow("n_max"))?;

    // Index i holds the coefficient of q^i; start from the leading q.
    let bits = final_bits(descriptor.weight(), n_max);
    let values = if bits <= 64 {
        let mut series = vec![0i64; len];
        series[1] = 1;
        for pass in passes {
            series = multiply(&series, pass.step, &pass_terms(len, pass));
        }
        Values::Small(series)
    } else if bits <= 128 {
        let mut series = vec![0i128; len];
        series[1] = 1;
        for pass in passes {
            series = multiply(&series, pass.step, &pass_terms(len, pass));
        }
        if series.iter().all(|v| i64::try_from(*v).is_ok()) {
            Values::Small(series.into_iter().map(|v| v as i64).collect())
        } else {
            Values::Wide(series)
        }
    } else {
        let mut series = vec![0i64; len];
        series[1] = 1;
        let mut values = Values::Small(series);
        for pass in passes {
            values = tiered_pass(values, pass);
        }
        values
    };
    Ok(CoeffTable::from_values(descriptor.clone(), values))
}

fn pass_terms(len: usize, pass: Pass) -> Vec<(usize, i64)> {
    let limit = (len - 1) / pass.step;
    if pass.cube {
        cube_terms(limit)
    } else {
        weighted(pentagonal_terms(limit))
    }
}

trait Lane: Clone + Send + Sync {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add_to(&mut self, other: &Self);
    fn sub_from(&mut self, other: &Self);
    fn add_scaled(&mut self, other: &Self, w: u64);
    fn sub_scaled(&mut self, other: &Self, w: u64);

    /// `out[i] += sum_j w[j] inputs[j][i]`.
    fn accumulate(out: &mut [Self], inputs: [&[Self]; 4], weights: [i64; 4]) {
        for (input, &w) in inputs.iter().zip(&weights) {
            for (o, x) in out.iter_mut().zip(input.iter()) {
                apply(o, x, w);
            }
        }
    }
}

macro_rules! wrapping_lane {
    ($t:ty) => {
        impl Lane for $t {
            fn zero() -> Self {
                0
            }
            fn is_zero(&self) -> bool {
                *self == 0
            }
            #[inline(always)]
            fn add_to(&mut self, other: &Self) {
                *self = self.wrapping_add(*other);
            }
            #[inline(always)]
            fn sub_from(&mut self, other: &Self) {
                *self = self.wrapping_sub(*other);
            }
            #[inline(always)]
            fn add_scaled(&mut self, other: &Self, w: u64) {
                *self = self.wrapping_add(other.wrapping_mul(w as $t));
            }
            #[inline(always)]
            fn sub_scaled(&mut self, other: &Self, w: u64) {
                *self = self.wrapping_sub(other.wrapping_mul(w as $t));
            }
            fn accumulate(out: &mut [Self], inputs: [&[Self]; 4], weights: [i64; 4]) {
                let [a, b, c, d] = inputs;
                let n = out.len();
                let (a, b, c, d) = (&a[..n], &b[..n], &c[..n], &d[..n]);
                if weights.iter().all(|w| w.abs() == 1) {
                    let s = weights.map(|w| w < 0);
                    for i in 0..n {
                        let mut acc = out[i];
                        acc = if s[0] { acc.wrapping_sub(a[i]) } else { acc.wrapping_add(a[i]) };
                        acc = if s[1] { acc.wrapping_sub(b[i]) } else { acc.wrapping_add(b[i]) };
                        acc = if s[2] { acc.wrapping_sub(c[i]) } else { acc.wrapping_add(c[i]) };
                        acc = if s[3] { acc.wrapping_sub(d[i]) } else { acc.wrapping_add(d[i]) };
                        out[i] = acc;
                    }
                } else {
                    let w = weights.map(|w| w as $t);
                    for i in 0..n {
                        out[i] = out[i]
                            .wrapping_add(a[i].wrapping_mul(w[0]))
                            .wrapping_add(b[i].wrapping_mul(w[1]))
                            .wrapping_add(c[i].wrapping_mul(w[2]))
                            .wrapping_add(d[i].wrapping_mul(w[3]));
                    }
                }
            }
        }
    };
}

wrapping_lane!(i64);
wrapping_lane!(i128);

impl Lane for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_to(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_from(&mut self, other: &Self) {
        *self -= other;
    }
    fn add_scaled(&mut self, other: &Self, w: u64) {
        *self += other * w;
    }
    fn sub_scaled(&mut self, other: &Self, w: u64) {
        *self -= other * w;
    }
}

#[inline(always)]
fn apply<T: Lane>(dst: &mut T, src: &T, w: i64) {
    match w {
        1 => dst.add_to(src),
        -1 => dst.sub_from(src),
        w if w < 0 => dst.sub_scaled(src, w.unsigned_abs()),
        w => dst.add_scaled(src, w as u64),
    }
}

fn max_bits(values: &Values) -> u64 {
    match values {
        Values::Small(v) => v
            .iter()
            .map(|x| 64 - x.unsigned_abs().leading_zeros() as u64)
            .max()
            .unwrap_or(0),
        Values::Wide(v) => v
            .iter()
            .map(|x| 128 - x.unsigned_abs().leading_zeros() as u64)
            .max()
            .unwrap_or(0),
        Values::Big(v) => v.iter().map(|x| x.abs().bits()).max().unwrap_or(0),
    }
}

/// One pass with the narrowest lane that cannot overflow.
fn tiered_pass(values: Values, pass: Pass) -> Values {
    let terms = pass_terms(values.len(), pass);
    let step = pass.step;
    // |dst| <= |src|_max * sum |w|, plus one bit of sign.
    let total: u64 = terms.iter().map(|&(_, w)| w.unsigned_abs()).sum();
    let need = max_bits(&values) + (64 - total.leading_zeros() as u64) + 1;
    let promoted = match values {
        Values::Small(v) if need <= 64 => return Values::Small(multiply(&v, step, &terms)),
        Values::Small(v) if need <= 128 => Values::Wide(v.into_iter().map(i128::from).collect()),
        Values::Wide(v) if need <= 128 => return Values::Wide(multiply(&v, step, &terms)),
        other => Values::Big(other.into_big()),
    };
    match promoted {
        Values::Wide(v) => Values::Wide(multiply(&v, step, &terms)),
        Values::Big(v) => Values::Big(multiply(&v, step, &terms)),
        Values::Small(_) => unreachable!(),
    }
}

fn multiply<T: Lane>(src: &[T], step: usize, terms: &[(usize, i64)]) -> Vec<T> {
    let len = src.len();
    let nonzero = src.iter().filter(|v| !v.is_zero()).count();
    if nonzero.saturating_mul(8) < len {
        scatter(src, step, terms)
    } else if step == 1 {
        dense(src, terms)
    } else {
        strided(src, step, terms)
    }
}

fn scatter<T: Lane>(src: &[T], step: usize, terms: &[(usize, i64)]) -> Vec<T> {
    let len = src.len();
    let mut dst = vec![T::zero(); len];
    for (i, v) in src.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
        for &(g, w) in terms {
            let j = i + g * step;
            if j >= len {
                break;
            }
            apply(&mut dst[j], v, w);
        }
    }
    dst
}

/// Output chunk sized to stay in L1.
const CHUNK_BYTES: usize = 1 << 15;

fn dense<T: Lane>(src: &[T], terms: &[(usize, i64)]) -> Vec<T> {
    let mut dst = vec![T::zero(); src.len()];
    let chunk = (CHUNK_BYTES / std::mem::size_of::<T>()).max(64);
    par::for_each_chunk_mut(&mut dst, chunk, |start, out| {
        let end = start + out.len();
        // Terms whose window lies fully inside the source go four at a time.
        let full = terms.partition_point(|&(g, _)| g <= start);
        let mut groups = terms[..full].chunks_exact(4);
        for group in &mut groups {
            let inputs = [0, 1, 2, 3].map(|j| &src[start - group[j].0..end - group[j].0]);
            T::accumulate(out, inputs, [0, 1, 2, 3].map(|j| group[j].1));
        }
        let rest = groups.remainder().iter().chain(&terms[full..]);
        for &(g, w) in rest {
            if g >= end {
                break;
            }
            let from = start.max(g);
            let out = &mut out[from - start..];
            let input = &src[from - g..end - g];
            match w {
                1 => out.iter_mut().zip(input).for_each(|(o, x)| o.add_to(x)),
                -1 => out.iter_mut().zip(input).for_each(|(o, x)| o.sub_from(x)),
                w if w < 0 => {
                    let w = w.unsigned_abs();
                    out.iter_mut().zip(input).for_each(|(o, x)| o.sub_scaled(x, w))
                }
                w => {
                    let w = w as u64;
                    out.iter_mut().zip(input).for_each(|(o, x)| o.add_scaled(x, w))
                }
            }
        }
    });
    dst
}

/// A pass by `prod (1 - q^{step n})` only mixes indices within one residue
/// class mod `step`, so each class is processed as a contiguous array.
fn strided<T: Lane>(src: &[T], step: usize, terms: &[(usize, i64)]) -> Vec<T> {
    let classes = par::map_range(0..step, |r| {
        let packed: Vec<T> = src.iter().skip(r).step_by(step).cloned().collect();
        let usable: Vec<(usize, i64)> = terms
            .iter()
            .copied()
            .take_while(|&(g, _)| g < packed.len())
            .collect();
        par::sequential(|| dense(&packed, &usable))
    });
    let mut dst = vec![T::zero(); src.len()];
    for (r, class) in classes.into_iter().enumerate() {
        for (j, v) in class.into_iter().enumerate() {
            dst[r + j * step] = v;
        }
    }
    dst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(t: &CoeffTable) -> Vec<i128> {
        (1..=t.n_max()).map(|n| t.get_i128(n).unwrap()).collect()
    }

    #[test]
    fn pentagonal_prefix() {
        let t = pentagonal_terms(26);
        let g: Vec<usize> = t.iter().map(|x| x.0).collect();
        assert_eq!(g, vec![0, 1, 2, 5, 7, 12, 15, 22, 26]);
        let signs: Vec<bool> = t.iter().map(|x| x.1).collect();
        assert_eq!(
            signs,
            vec![false, true, true, false, false, true, true, false, false]
        );
    }

    #[test]
    fn delta_small_values() {
        let t = expand_eta_product(&NewformDescriptor::delta(), 10).unwrap();
        assert_eq!(
            coeffs(&t),
            vec![1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920]
        );
        let one = expand_eta_product(&NewformDescriptor::delta(), 1).unwrap();
        assert_eq!(coeffs(&one), vec![1]);
    }

    #[test]
    fn level11_small_values() {
        let t = expand_eta_product(&NewformDescriptor::level11(), 10).unwrap();
        assert_eq!(coeffs(&t), vec![1, -2, -1, 2, 1, 2, -2, 0, -2, -2]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(expand_eta_product(&NewformDescriptor::delta(), 0).is_err());
        let file = NewformDescriptor::new(12, 1, CoefficientSource::ApTable("f".into())).unwrap();
        assert!(expand_eta_product(&file, 10).is_err());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let d = NewformDescriptor::level11();
        let a = expand_eta_product(&d, 3000).unwrap();
        let b = par::sequential(|| expand_eta_product(&d, 3000).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn cube_series_is_three_passes() {
        let mut one = vec![0i64; 300];
        one[0] = 1;
        let penta = weighted(pentagonal_terms(299));
        let thrice = (0..3).fold(one.clone(), |acc, _| multiply(&acc, 1, &penta));
        assert_eq!(multiply(&one, 1, &cube_terms(299)), thrice);
    }

    #[test]
    fn tiered_expansion_matches_wrapping() {
        let mut series = vec![0i64; 2001];
        series[1] = 1;
        let mut values = Values::Small(series);
        for pass in passes(&CoefficientSource::Delta).unwrap() {
            values = tiered_pass(values, pass);
        }
        let wrapped = expand_eta_product(&NewformDescriptor::delta(), 2000).unwrap();
        let tiered = values.into_big();
        assert!(wrapped.iter().all(|(n, v)| tiered[n as usize] == v));
    }

    #[test]
    fn big_tier_matches_narrow_tier() {
        let src: Vec<i64> = (0..200).map(|i| (i * 7919 % 113) as i64 - 56).collect();
        let terms = weighted(pentagonal_terms(199));
        let narrow = multiply(&src, 1, &terms);
        let big: Vec<BigInt> = src.iter().map(|&x| BigInt::from(x)).collect();
        let wide = multiply(&big, 1, &terms);
        assert!(narrow.iter().zip(&wide).all(|(a, b)| BigInt::from(*a) == *b));
        let strided_narrow = multiply(&src, 3, &weighted(pentagonal_terms(66)));
        let strided_big = scatter(&big, 3, &weighted(pentagonal_terms(66)));
        assert!(strided_narrow
            .iter()
            .zip(&strided_big)
            .all(|(a, b)| BigInt::from(*a) == *b));
    }
}
