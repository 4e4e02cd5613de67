use num_bigint::BigInt;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid newform descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no prime coefficients listed")]
    NoPrimes,

    #[error("prime coverage gap: a({0}) is missing")]
    MissingPrime(u64),

    #[error("a({p}) = {value} violates the Deligne bound a(p)^2 <= 4 p^{exponent}")]
    DeligneViolation { p: u64, value: BigInt, exponent: u32 },

    #[error("index {index} is beyond the coefficient table (n_max = {n_max})")]
    BeyondTable { index: u64, n_max: u64 },

    #[error("coefficient value does not fit in 128 bits at n = {0}")]
    CoefficientTooLarge(u64),

    #[error("no n <= {n_max} with a(n) < 0 and gcd(n, N) = 1; extend the table")]
    NoNegativeCoefficient { n_max: u64 },

    #[error("not admissible: {0}")]
    NotAdmissible(String),

    #[error("dyadic interval A_{index} = [{lo}, {hi}] has no usable prime")]
    EmptyInterval { index: u32, lo: u64, hi: u64 },

    #[error("dyadic construction needs primes up to 2^{exponent}, table stops at {n_max}")]
    DyadicOutOfRange { exponent: u64, n_max: u64 },

    #[error("coefficient growth chain broken at p = {p}")]
    GrowthChain { p: u64 },

    #[error("admissible set stalled at {size} primes, need at least {needed}")]
    TooFewPrimes { size: usize, needed: usize },

    #[error("subset-sum store would exceed {limit} entries after accepting {accepted} primes")]
    SumLimit { limit: u64, accepted: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("no k-subset collision involving p = {0}; the admissible set is not maximal")]
    NoCollision(u64),

    #[error("DP table of {cells} cells exceeds the limit of {limit}")]
    DpLimit { cells: u64, limit: u64 },

    #[error("arithmetic overflow: {0}")]
    Overflow(&'static str),

    #[error("Waring-Goldbach search found no solution for Z = {z} with s = {s}, e = {e}")]
    NoWaringSolution { z: u128, s: u32, e: u32 },

    #[error("decomposition does not re-sum: expected {expected}, got {actual} (delta {delta})")]
    SumMismatch {
        expected: BigInt,
        actual: BigInt,
        delta: BigInt,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("no decomposition with at most {ell_max} terms found")]
    NotFound { ell_max: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Usage-type errors, as opposed to results of a well-posed computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidDescriptor(_) | Error::InvalidArgument(_) | Error::Parse { .. }
        )
    }
}
