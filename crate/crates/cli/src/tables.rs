//! Form resolution and the on-disk coefficient cache.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nb_core::coeffs::{
    expand_eta_product, hecke_extend, load_newform, parse_newform, write_newform, CoeffTable,
    CoefficientSource, NewformDescriptor,
};
use num_bigint::BigInt;

/// Primes up to this bound are recomputed from scratch whenever a cached
/// table is loaded.
const SPOT_CHECK_LIMIT: u64 = 2000;

#[derive(Clone, Debug)]
pub enum Form {
    Builtin(NewformDescriptor),
    File {
        descriptor: NewformDescriptor,
        primes: BTreeMap<u64, BigInt>,
    },
}

impl Form {
    pub fn resolve(name: &str) -> Result<Self> {
        match name {
            "delta" => Ok(Form::Builtin(NewformDescriptor::delta())),
            "11a" => Ok(Form::Builtin(NewformDescriptor::level11())),
            path => {
                if !Path::new(path).is_file() {
                    return Err(nb_core::Error::InvalidArgument(format!(
                        "--form {path}: expected delta, 11a or a newform file"
                    ))
                    .into());
                }
                let (descriptor, primes) = load_newform(Path::new(path))
                    .with_context(|| format!("reading newform file {path}"))?;
                Ok(Form::File { descriptor, primes })
            }
        }
    }

    pub fn descriptor(&self) -> &NewformDescriptor {
        match self {
            Form::Builtin(d) => d,
            Form::File { descriptor, .. } => descriptor,
        }
    }

    /// The table `a(1..=n_max)`, through the cache for builtins.
    pub fn table(&self, n_max: u64, cache: Option<&Cache>) -> Result<CoeffTable> {
        match self {
            Form::File { descriptor, primes } => Ok(hecke_extend(descriptor, primes, n_max)?),
            Form::Builtin(d) => {
                if let Some(cache) = cache {
                    if let Some(table) = cache.load(d, n_max)? {
                        return Ok(table);
                    }
                }
                let table = expand_eta_product(d, n_max)?;
                if let Some(cache) = cache {
                    cache.store(&table)?;
                }
                Ok(table)
            }
        }
    }
}

/// Tables keyed by `(form, n_max)`, stored in the ingestion format.
#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: PathBuf) -> Self {
        Cache { dir }
    }

    pub fn path(&self, descriptor: &NewformDescriptor, n_max: u64) -> PathBuf {
        self.dir.join(format!("{descriptor}-{n_max}.nbf"))
    }

    /// A cached table, or `None` when absent or failing the spot check.
    pub fn load(&self, descriptor: &NewformDescriptor, n_max: u64) -> Result<Option<CoeffTable>> {
        let path = self.path(descriptor, n_max);
        let text = match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
        };
        let file = match parse_newform(&text, descriptor.source().clone()) {
            Ok(file) => file,
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
                return Ok(None);
            }
        };
        let shape_ok = file.pmax == n_max
            && file.descriptor.weight() == descriptor.weight()
            && file.descriptor.level() == descriptor.level();
        if !shape_ok || !spot_check(descriptor, &file.coefficients, n_max)? {
            log::warn!("cache entry {} failed its integrity check", path.display());
            return Ok(None);
        }
        log::debug!("loaded {}", path.display());
        Ok(Some(hecke_extend(descriptor, &file.coefficients, n_max)?))
    }

    /// Writes to a temporary file in the cache directory, then renames.
    pub fn store(&self, table: &CoeffTable) -> Result<()> {
        std::fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        let path = self.path(table.descriptor(), table.n_max());
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        {
            let mut out = std::io::BufWriter::new(tmp.as_file_mut());
            write_newform(&mut out, table.descriptor(), table.n_max(), &table.prime_map())?;
            out.flush()?;
        }
        tmp.persist(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

fn spot_check(
    descriptor: &NewformDescriptor,
    primes: &BTreeMap<u64, BigInt>,
    n_max: u64,
) -> Result<bool> {
    if !matches!(
        descriptor.source(),
        CoefficientSource::Delta | CoefficientSource::Level11
    ) {
        return Ok(true);
    }
    let fresh = expand_eta_product(descriptor, n_max.min(SPOT_CHECK_LIMIT))?;
    Ok(fresh
        .primes()
        .iter()
        .all(|p| primes.get(p) == fresh.get(*p).as_ref()))
}
