//! Exact Fourier coefficients of integer-coefficient newforms.

mod check;
mod descriptor;
mod eta;
mod format;
mod hecke;
mod table;

pub use check::{check_identities, IdentityReport, Violation};
pub use descriptor::{CoefficientSource, NewformDescriptor};
pub use eta::{expand_eta_product, pentagonal_terms};
pub use format::{load_newform, parse_newform, within_deligne, write_newform, NewformFile};
pub use hecke::hecke_extend;
pub use table::CoeffTable;

use crate::error::Result;

/// Builds a table for any descriptor: expansion for builtins, Hecke
/// extension of the ingested prime coefficients otherwise.
pub fn build_table(
    descriptor: &NewformDescriptor,
    prime_coefficients: Option<&std::collections::BTreeMap<u64, num_bigint::BigInt>>,
    n_max: u64,
) -> Result<CoeffTable> {
    match (descriptor.is_builtin(), prime_coefficients) {
        (true, _) => expand_eta_product(descriptor, n_max),
        (false, Some(map)) => hecke_extend(descriptor, map, n_max),
        (false, None) => Err(crate::Error::InvalidArgument(
            "ingested forms need their prime coefficients".into(),
        )),
    }
}
