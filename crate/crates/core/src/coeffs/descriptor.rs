use std::fmt;
use std::path::PathBuf;

use crate::error::{Error, Result};

/// Where the coefficients of a newform come from.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CoefficientSource {
    /// Ramanujan's Delta, `q * prod (1 - q^n)^24`.
    Delta,
    /// The weight 2 level 11 form `q * prod (1 - q^n)^2 (1 - q^{11n})^2`.
    Level11,
    /// A table of `a(p)` ingested from disk.
    ApTable(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NewformDescriptor {
    weight: u32,
    level: u64,
    source: CoefficientSource,
}

impl NewformDescriptor {
    pub fn new(weight: u32, level: u64, source: CoefficientSource) -> Result<Self> {
        if weight < 2 || !weight.is_multiple_of(2) {
            return Err(Error::InvalidDescriptor(format!(
                "weight must be even and at least 2, got {weight}"
            )));
        }
        if level == 0 {
            return Err(Error::InvalidDescriptor("level must be positive".into()));
        }
        let forced = match source {
            CoefficientSource::Delta => Some((12, 1)),
            CoefficientSource::Level11 => Some((2, 11)),
            CoefficientSource::ApTable(_) => None,
        };
        if let Some((w, n)) = forced {
            if (weight, level) != (w, n) {
                return Err(Error::InvalidDescriptor(format!(
                    "builtin form requires (weight, level) = ({w}, {n}), got ({weight}, {level})"
                )));
            }
        }
        Ok(Self {
            weight,
            level,
            source,
        })
    }

    pub fn delta() -> Self {
        Self {
            weight: 12,
            level: 1,
            source: CoefficientSource::Delta,
        }
    }

    pub fn level11() -> Self {
        Self {
            weight: 2,
            level: 11,
            source: CoefficientSource::Level11,
        }
    }

    /// The weight `2k`.
    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn source(&self) -> &CoefficientSource {
        &self.source
    }

    /// `k`, half the weight.
    pub fn k(&self) -> u32 {
        self.weight / 2
    }

    /// `2k - 1`: the exponent in the Hecke relation `a(p)^2 - a(p^2) = p^(2k-1)`.
    pub fn hecke_exponent(&self) -> u32 {
        self.weight - 1
    }

    pub fn divides_level(&self, p: u64) -> bool {
        self.level.is_multiple_of(p)
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self.source, CoefficientSource::ApTable(_))
    }
}

impl fmt::Display for NewformDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            CoefficientSource::Delta => write!(f, "delta"),
            CoefficientSource::Level11 => write!(f, "11a"),
            CoefficientSource::ApTable(p) => write!(f, "{}", p.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_force_weight_and_level() {
        assert!(NewformDescriptor::new(12, 1, CoefficientSource::Delta).is_ok());
        assert!(NewformDescriptor::new(12, 2, CoefficientSource::Delta).is_err());
        assert!(NewformDescriptor::new(4, 11, CoefficientSource::Level11).is_err());
        assert_eq!(NewformDescriptor::level11().hecke_exponent(), 1);
        assert_eq!(NewformDescriptor::delta().k(), 6);
    }

    #[test]
    fn weight_and_level_validated() {
        let src = CoefficientSource::ApTable("x".into());
        assert!(NewformDescriptor::new(3, 1, src.clone()).is_err());
        assert!(NewformDescriptor::new(0, 1, src.clone()).is_err());
        assert!(NewformDescriptor::new(4, 0, src.clone()).is_err());
        assert!(NewformDescriptor::new(4, 5, src).is_ok());
    }
}
