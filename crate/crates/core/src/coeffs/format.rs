//! The line-oriented newform descriptor format.
//!
//! ```text
//! # Ramanujan Delta
//! weight: 12
//! level: 1
//! pmax: 7
//! 2 -24
//! 3 252
//! 5 4830
//! 7 -16744
//! ```

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use num_bigint::BigInt;

use super::descriptor::{CoefficientSource, NewformDescriptor};
use crate::error::{Error, Result};
use crate::primes;

#[derive(Clone, Debug, PartialEq)]
pub struct NewformFile {
    pub descriptor: NewformDescriptor,
    pub pmax: u64,
    pub coefficients: BTreeMap<u64, BigInt>,
}

/// Reads a descriptor file; the descriptor's source records `path`.
pub fn load_newform(path: &Path) -> Result<(NewformDescriptor, BTreeMap<u64, BigInt>)> {
    let text = std::fs::read_to_string(path)?;
    let file = parse_newform(&text, CoefficientSource::ApTable(path.to_path_buf()))?;
    Ok((file.descriptor, file.coefficients))
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_newform(text: &str, source: CoefficientSource) -> Result<NewformFile> {
    let mut weight = None;
    let mut level = None;
    let mut pmax = None;
    let mut coefficients = BTreeMap::new();
    let mut last_prime = 0u64;
    let mut last_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((key, value)) = line.split_once(':') {
            if !coefficients.is_empty() {
                return Err(parse_err(lineno, "header after coefficient lines"));
            }
            let value = value.trim();
            let parsed: u64 = value
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad value {value:?} for {key}")))?;
            let slot = match key.trim() {
                "weight" => &mut weight,
                "level" => &mut level,
                "pmax" => &mut pmax,
                other => return Err(parse_err(lineno, format!("unknown header {other:?}"))),
            };
            if slot.replace(parsed).is_some() {
                return Err(parse_err(lineno, format!("duplicate header {}", key.trim())));
            }
            continue;
        }

        let (Some(w), Some(n), Some(bound)) = (weight, level, pmax) else {
            return Err(parse_err(lineno, "coefficient line before weight/level/pmax"));
        };
        let mut fields = line.split_whitespace();
        let (Some(p_str), Some(v_str), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(lineno, "expected `<p> <a(p)>`"));
        };
        let p: u64 = p_str
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad prime {p_str:?}")))?;
        let value: BigInt = v_str
            .replace('\u{2212}', "-")
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad coefficient {v_str:?}")))?;
        if !primes::is_prime(p) {
            return Err(parse_err(lineno, format!("{p} is not prime")));
        }
        if p <= last_prime {
            return Err(parse_err(lineno, "primes must be strictly increasing"));
        }
        if p > bound {
            return Err(parse_err(lineno, format!("prime {p} exceeds pmax {bound}")));
        }
        let exponent = (w as u32).saturating_sub(1);
        if n % p != 0 && !within_deligne(p, &value, exponent) {
            return Err(Error::DeligneViolation { p, value, exponent });
        }
        last_prime = p;
        coefficients.insert(p, value);
    }

    let weight = weight.ok_or_else(|| parse_err(last_line + 1, "missing weight header"))?;
    let level = level.ok_or_else(|| parse_err(last_line + 1, "missing level header"))?;
    let pmax = pmax.ok_or_else(|| parse_err(last_line + 1, "missing pmax header"))?;
    let weight = u32::try_from(weight).map_err(|_| parse_err(0, "weight out of range"))?;
    let descriptor = NewformDescriptor::new(weight, level, source)?;

    if coefficients.is_empty() {
        return Err(Error::NoPrimes);
    }
    for p in primes::primes_up_to(pmax) {
        if !coefficients.contains_key(&p) {
            return Err(Error::MissingPrime(p));
        }
    }
    Ok(NewformFile {
        descriptor,
        pmax,
        coefficients,
    })
}

/// `a(p)^2 <= 4 p^exponent`, exactly.
pub fn within_deligne(p: u64, ap: &BigInt, exponent: u32) -> bool {
    ap * ap <= BigInt::from(4) * BigInt::from(p).pow(exponent)
}

pub fn write_newform<W: Write>(
    mut out: W,
    descriptor: &NewformDescriptor,
    pmax: u64,
    coefficients: &BTreeMap<u64, BigInt>,
) -> std::io::Result<()> {
    writeln!(out, "# newform {descriptor}")?;
    writeln!(out, "weight: {}", descriptor.weight())?;
    writeln!(out, "level: {}", descriptor.level())?;
    writeln!(out, "pmax: {pmax}")?;
    for (p, v) in coefficients.range(..=pmax) {
        writeln!(out, "{p} {v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src() -> CoefficientSource {
        CoefficientSource::ApTable("mem".into())
    }

    #[test]
    fn parses_delta_header() {
        let f = parse_newform("weight: 12\nlevel: 1\npmax: 2\n2 \u{2212}24\n", src()).unwrap();
        assert_eq!(f.descriptor.weight(), 12);
        assert_eq!(f.coefficients[&2], BigInt::from(-24));
    }

    #[test]
    fn deligne_violation_rejected() {
        let err = parse_newform("weight: 12\nlevel: 1\npmax: 2\n2 100\n", src()).unwrap_err();
        assert!(matches!(err, Error::DeligneViolation { p: 2, .. }));
        // 90^2 = 8100 <= 8192
        assert!(parse_newform("weight: 12\nlevel: 1\npmax: 2\n2 90\n", src()).is_ok());
    }

    #[test]
    fn empty_section_rejected() {
        let err = parse_newform("weight: 12\nlevel: 1\npmax: 10\n# nothing\n", src()).unwrap_err();
        assert!(matches!(err, Error::NoPrimes));
    }

    #[test]
    fn gaps_and_syntax_errors() {
        let gap = parse_newform("weight: 2\nlevel: 11\npmax: 5\n2 -2\n5 1\n", src()).unwrap_err();
        assert!(matches!(gap, Error::MissingPrime(3)));
        let bad = parse_newform("weight: 2\nlevel: 11\npmax: 5\n2 -2\n3 x\n", src()).unwrap_err();
        assert!(matches!(bad, Error::Parse { line: 5, .. }));
        let order = parse_newform("weight: 2\nlevel: 11\npmax: 5\n3 -1\n2 -2\n", src()).unwrap_err();
        assert!(matches!(order, Error::Parse { line: 5, .. }));
        let early = parse_newform("weight: 2\n2 -2\n", src()).unwrap_err();
        assert!(matches!(early, Error::Parse { line: 2, .. }));
        let composite = parse_newform("weight: 2\nlevel: 1\npmax: 5\n4 1\n", src()).unwrap_err();
        assert!(matches!(composite, Error::Parse { line: 4, .. }));
    }

    #[test]
    fn level_primes_skip_deligne() {
        // a(11) outside the bound is tolerated because 11 | N.
        let mut text = String::from("weight: 2\nlevel: 11\npmax: 11\n");
        text.push_str("2 -2\n3 -1\n5 1\n7 -2\n11 9\n");
        assert!(parse_newform(&text, src()).is_ok());
    }

    #[test]
    fn write_then_parse() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(2, BigInt::from(-2));
        coeffs.insert(3, BigInt::from(-1));
        let mut buf = Vec::new();
        write_newform(&mut buf, &NewformDescriptor::level11(), 3, &coeffs).unwrap();
        let parsed = parse_newform(std::str::from_utf8(&buf).unwrap(), src()).unwrap();
        assert_eq!(parsed.coefficients, coeffs);
        assert_eq!(parsed.pmax, 3);
    }
}
