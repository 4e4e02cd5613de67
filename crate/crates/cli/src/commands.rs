use std::io::Write;

use anyhow::{anyhow, bail, Context, Result};
use nb_core::admissible::{
    cardinality_report, dyadic_construction, greedy_maximal, AdmissibleSet, Certificate,
    RepairIndex, DEFAULT_SUM_LIMIT,
};
use nb_core::coeffs::{check_identities, write_newform, CoeffTable};
use nb_core::decompose::{
    cf_bound, verify, ConstructiveParams, ConstructivePipeline, Decomposition, Route, SearchIndex,
    DEFAULT_TRIPLE_BUDGET,
};
use nb_core::primes::integer_root;
use nb_core::signs::{first_negative, large_coeff_density, prime_sets};
use nb_core::waring::{count_representations, find_solution, hua_main_term, singular_series};
use nb_core::Error;
use serde::Serialize;
use serde_json::json;

use crate::tables::{Cache, Form};
use crate::{
    AdmissibleArgs, Cli, CoeffsArgs, Command, DecomposeArgs, Predicate, RouteArg, SignsArgs,
    WgArgs, WgOp,
};

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    if let Some(threads) = cli.threads {
        nb_core::par::configure_threads(threads).map_err(|e| anyhow!(e))?;
    }
    let ctx = Ctx {
        json: cli.json,
        cache: cli.cache_dir.clone().map(Cache::new),
    };
    match &cli.command {
        Command::Coeffs(args) => ctx.coeffs(args, out),
        Command::Signs(args) => ctx.signs(args, out),
        Command::Admissible(args) => ctx.admissible(args, out),
        Command::Wg { op } => ctx.wg(op, out),
        Command::Decompose(args) => ctx.decompose(args, out),
    }
}

struct Ctx {
    json: bool,
    cache: Option<Cache>,
}

fn usage(message: impl Into<String>) -> anyhow::Error {
    Error::InvalidArgument(message.into()).into()
}

fn emit_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

impl Ctx {
    fn table(&self, form: &Form, n_max: u64) -> Result<CoeffTable> {
        if n_max == 0 {
            return Err(usage("--nmax must be at least 1"));
        }
        form.table(n_max, self.cache.as_ref())
    }

    fn coeffs(&self, args: &CoeffsArgs, out: &mut dyn Write) -> Result<()> {
        let form = Form::resolve(&args.form)?;
        let table = self.table(&form, args.nmax)?;
        let report = args.check.then(|| check_identities(&table));

        if let Some(path) = &args.out {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => std::path::Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            {
                let mut file = std::io::BufWriter::new(tmp.as_file_mut());
                write_newform(&mut file, table.descriptor(), table.n_max(), &table.prime_map())?;
                file.flush()?;
            }
            tmp.persist(path)
                .with_context(|| format!("writing {}", path.display()))?;
        }

        if self.json {
            let coefficients = args
                .out
                .is_none()
                .then(|| table.iter().map(|(_, a)| a.to_string()).collect::<Vec<_>>());
            emit_json(
                out,
                &json!({
                    "form": table.descriptor().to_string(),
                    "n_max": table.n_max(),
                    "coefficients": coefficients,
                    "check": report,
                }),
            )?;
        } else {
            match &args.out {
                None => {
                    for (n, a) in table.iter() {
                        writeln!(out, "{n} {a}")?;
                    }
                }
                Some(path) => writeln!(
                    out,
                    "wrote {} prime coefficients to {}",
                    table.primes().len(),
                    path.display()
                )?,
            }
            if let Some(r) = &report {
                writeln!(out, "violations={}", r.violations.len())?;
                for v in &r.violations {
                    writeln!(out, "violation: {v}")?;
                }
                writeln!(out, "hecke_primes={}", r.hecke_primes)?;
                writeln!(out, "coprime_pairs={}", r.coprime_pairs)?;
                writeln!(out, "deligne_primes={}", r.deligne_primes)?;
                writeln!(out, "divisor_indices={}", r.divisor_indices)?;
            }
        }
        match report {
            Some(r) if !r.is_clean() => bail!("{} identity violations", r.violations.len()),
            _ => Ok(()),
        }
    }

    fn signs(&self, args: &SignsArgs, out: &mut dyn Write) -> Result<()> {
        let form = Form::resolve(&args.form)?;
        let table = self.table(&form, args.nmax)?;
        let sign = first_negative(&table)?;
        let density = args
            .density_at
            .map(|t| large_coeff_density(&table, t))
            .transpose()?;
        if self.json {
            return emit_json(
                out,
                &json!({
                    "form": table.descriptor().to_string(),
                    "sign": sign,
                    "density": density.as_ref().map(|d| json!({
                        "t": d.t,
                        "count_large": d.count_large,
                        "count_all": d.count_all,
                        "alpha_hat": d.alpha_hat(),
                    })),
                }),
            );
        }
        writeln!(
            out,
            "first negative coefficient coprime to the level: a({}) = {}",
            sign.n_f, sign.a_n_f
        )?;
        writeln!(out, "n_f={}", sign.n_f)?;
        writeln!(out, "a_n_f={}", sign.a_n_f)?;
        writeln!(out, "bound={}", sign.bound_value)?;
        writeln!(out, "ratio={}", sign.ratio)?;
        if let Some(d) = density {
            writeln!(
                out,
                "{} of {} primes up to {} have large coefficients",
                d.count_large, d.count_all, d.t
            )?;
            writeln!(out, "t={}", d.t)?;
            writeln!(out, "count_large={}", d.count_large)?;
            writeln!(out, "count_all={}", d.count_all)?;
            match d.alpha_hat() {
                Some(a) => writeln!(out, "alpha_hat={a}")?,
                None => writeln!(out, "alpha_hat=undefined")?,
            }
        }
        Ok(())
    }

    fn admissible(&self, args: &AdmissibleArgs, out: &mut dyn Write) -> Result<()> {
        let form = Form::resolve(&args.form)?;
        let n_max = args.nmax.unwrap_or(args.m);
        if n_max < args.m {
            return Err(usage("--nmax must be at least --M"));
        }
        let table = self.table(&form, n_max)?;
        let k = args.k.unwrap_or(table.descriptor().k() as usize);
        if k == 0 {
            return Err(usage("--k must be at least 1"));
        }
        let set = if args.dyadic {
            let l0 = args.l0.ok_or_else(|| usage("--dyadic needs --l0"))?;
            dyadic_construction(&table, k, l0)?
        } else {
            let sets = prime_sets(&table, args.m)?;
            greedy_maximal(&sets.p0, k, &table, DEFAULT_SUM_LIMIT)?
        };
        let cardinality = cardinality_report(set.len(), args.m, k);
        let repair = match args.repair {
            Some(p) => {
                let witness = RepairIndex::new(set.clone(), &table, DEFAULT_SUM_LIMIT)?.repair(p)?;
                let ok = witness.verify(&table)?;
                Some((witness, ok))
            }
            None => None,
        };

        if self.json {
            return emit_json(
                out,
                &json!({
                    "form": table.descriptor().to_string(),
                    "M": args.m,
                    "set": set,
                    "cardinality": cardinality,
                    "repair": repair.as_ref().map(|(w, ok)| json!({
                        "p": w.p, "plus": w.plus, "minus": w.minus, "verified": ok,
                    })),
                }),
            );
        }
        write_set_header(out, &set, args.m, cardinality.ratio)?;
        for p in &set.primes {
            writeln!(out, "{p}")?;
        }
        if let Some((w, ok)) = repair {
            writeln!(
                out,
                "# repair p={} plus={} minus={} verified={ok}",
                w.p,
                join(&w.plus, ","),
                join(&w.minus, ",")
            )?;
        }
        Ok(())
    }

    fn wg(&self, op: &WgOp, out: &mut dyn Write) -> Result<()> {
        let (name, args) = match op {
            WgOp::Count(a) => ("count", a),
            WgOp::Solve(a) => ("solve", a),
            WgOp::Series(a) => ("series", a),
        };
        if args.s == 0 || args.e == 0 {
            return Err(usage("--s and --e must be at least 1"));
        }
        let allowed = self.allowed_primes(args)?;
        let pred = |p: u64| {
            allowed
                .as_ref()
                .is_none_or(|v| v.binary_search(&p).is_ok())
        };
        let predicate = predicate_name(args.predicate);
        match name {
            "count" => {
                let z = u64::try_from(args.z).map_err(|_| usage("count needs Z < 2^64"))?;
                let count = count_representations(
                    z,
                    args.s,
                    args.e,
                    &pred,
                    nb_core::waring::DEFAULT_DP_LIMIT,
                )?;
                if self.json {
                    return emit_json(
                        out,
                        &json!({"Z": args.z, "s": args.s, "e": args.e, "predicate": predicate, "count": count}),
                    );
                }
                writeln!(out, "Z={} s={} e={} predicate={predicate}", args.z, args.s, args.e)?;
                writeln!(out, "count={count}")?;
                Ok(())
            }
            "solve" => {
                let solution = find_solution(args.z, args.s, args.e, &pred, args.budget)?;
                let verified = solution.as_ref().map(|s| s.verify(&pred));
                if self.json {
                    emit_json(
                        out,
                        &json!({
                            "Z": args.z, "s": args.s, "e": args.e, "predicate": predicate,
                            "primes": solution.as_ref().map(|s| &s.primes),
                            "verified": verified,
                        }),
                    )?;
                } else {
                    writeln!(out, "Z={} s={} e={} predicate={predicate}", args.z, args.s, args.e)?;
                    match &solution {
                        Some(s) => {
                            let terms: Vec<String> = s
                                .primes
                                .iter()
                                .map(|p| if args.e == 1 { p.to_string() } else { format!("{p}^{}", args.e) })
                                .collect();
                            writeln!(out, "found: {} = {}", args.z, terms.join(" + "))?;
                            writeln!(out, "primes={}", join(&s.primes, ","))?;
                            writeln!(out, "verified={}", verified == Some(true))?;
                        }
                        None => writeln!(out, "none")?,
                    }
                }
                match (solution, verified) {
                    (None, _) => bail!("no representation found within {} nodes", args.budget),
                    (Some(_), Some(false)) => bail!("representation failed verification"),
                    _ => Ok(()),
                }
            }
            _ => {
                if args.predicate != Predicate::All {
                    log::warn!("the singular series does not depend on --predicate");
                }
                let z = u64::try_from(args.z).map_err(|_| usage("series needs Z < 2^64"))?;
                let ss = singular_series(z, args.s, args.e, args.qmax)?;
                let main = if z >= 3 {
                    Some(hua_main_term(z, args.s, args.e, &ss)?)
                } else {
                    None
                };
                if self.json {
                    return emit_json(
                        out,
                        &json!({
                            "Z": args.z, "s": args.s, "e": args.e,
                            "singular_series": ss.value, "q_max": ss.q_max,
                            "normalization": ss.normalization, "main_term": main,
                        }),
                    );
                }
                writeln!(out, "Z={} s={} e={}", args.z, args.s, args.e)?;
                writeln!(out, "singular_series={}", ss.value)?;
                writeln!(out, "q_max={}", ss.q_max)?;
                writeln!(out, "normalization={}", ss.normalization)?;
                match main {
                    Some(m) => writeln!(out, "main_term={m}")?,
                    None => writeln!(out, "main_term=undefined")?,
                }
                Ok(())
            }
        }
    }

    /// Sorted allowed primes, or `None` for every prime.
    fn allowed_primes(&self, args: &WgArgs) -> Result<Option<Vec<u64>>> {
        if args.predicate == Predicate::All {
            return Ok(None);
        }
        let name = args
            .form
            .as_deref()
            .ok_or_else(|| usage("--predicate p0 and p0-minus-pprime need --form"))?;
        let form = Form::resolve(name)?;
        let root = u64::try_from(integer_root(args.z, args.e)).unwrap_or(u64::MAX);
        let n_max = args.nmax.unwrap_or(root.max(1000));
        let table = self.table(&form, n_max)?;
        let sets = prime_sets(&table, n_max)?;
        if args.predicate == Predicate::P0 {
            return Ok(Some(sets.p0));
        }
        let k = table.descriptor().k() as usize;
        let s = greedy_maximal(&sets.p0, k, &table, DEFAULT_SUM_LIMIT)?;
        Ok(Some(
            sets.p0.into_iter().filter(|&p| !s.contains(p)).collect(),
        ))
    }

    fn decompose(&self, args: &DecomposeArgs, out: &mut dyn Write) -> Result<()> {
        let form = Form::resolve(&args.form)?;
        let e = form.descriptor().hecke_exponent();
        let n_max = args.nmax.unwrap_or_else(|| match args.route {
            RouteArg::Search => 1000,
            RouteArg::Constructive => {
                let root = integer_root(args.z.unsigned_abs(), e);
                u64::try_from(root / 2 + 100).unwrap_or(u64::MAX).max(2000)
            }
        });
        let table = self.table(&form, n_max)?;
        let route = match args.route {
            RouteArg::Constructive => Route::Constructive,
            RouteArg::Search => Route::Search,
        };
        let decomposition = if args.z == 0 {
            Decomposition::empty(0, route, 0)
        } else {
            match route {
                Route::Constructive => {
                    let params = ConstructiveParams {
                        s: args.s,
                        ..ConstructiveParams::default()
                    };
                    ConstructivePipeline::new(&table, &params)?.decompose(args.z)?
                }
                Route::Search => {
                    let lmax = match args.lmax {
                        Some(l) => l,
                        None => cf_bound(&table).map(|c| c.value).unwrap_or(u64::MAX),
                    };
                    SearchIndex::new(&table, n_max, DEFAULT_TRIPLE_BUDGET)?.search(args.z, lmax)?
                }
            }
        };
        let report = verify(&decomposition, &table);
        let verified = report.is_ok();
        let ratio = report.as_ref().map(|r| r.max_index_ratio).unwrap_or(f64::NAN);

        if self.json {
            emit_json(
                out,
                &DecompositionJson {
                    z: decomposition.z,
                    route: decomposition.route,
                    ell: decomposition.ell,
                    terms: decomposition.terms.iter().map(|&(n, m)| [n, m]).collect(),
                    verified,
                    max_index_ratio: ratio.is_finite().then_some(ratio),
                },
            )?;
        } else {
            writeln!(out, "{}", render_sum(&decomposition))?;
            writeln!(out, "Z={}", decomposition.z)?;
            writeln!(out, "route={}", decomposition.route)?;
            writeln!(out, "ell={}", decomposition.ell)?;
            writeln!(out, "bound={}", decomposition.bound)?;
            writeln!(out, "verified={verified}")?;
            writeln!(out, "max_index_ratio={ratio}")?;
        }
        report.map(|_| ()).map_err(Into::into)
    }
}

/// The documented `decompose --json` schema.
#[derive(Serialize)]
struct DecompositionJson {
    #[serde(rename = "Z")]
    z: i128,
    route: Route,
    ell: u64,
    terms: Vec<[u64; 2]>,
    verified: bool,
    max_index_ratio: Option<f64>,
}

fn render_sum(d: &Decomposition) -> String {
    if d.terms.is_empty() {
        return format!("{} = (empty sum)", d.z);
    }
    let parts: Vec<String> = d
        .terms
        .iter()
        .map(|&(n, m)| if m == 1 { format!("a({n})") } else { format!("{m}*a({n})") })
        .collect();
    format!("{} = {}", d.z, parts.join(" + "))
}

fn write_set_header(out: &mut dyn Write, set: &AdmissibleSet, m: u64, ratio: f64) -> Result<()> {
    let certificate = match set.certificate {
        Certificate::BruteForce => "brute-force",
        Certificate::HashCollision => "hash-collision",
    };
    writeln!(
        out,
        "# admissible k={} M={m} size={} certificate={certificate} check_bound={} ratio={ratio}",
        set.k,
        set.len(),
        set.check_bound
    )?;
    Ok(())
}

fn join(values: &[u64], sep: &str) -> String {
    values
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(sep)
}

fn predicate_name(p: Predicate) -> &'static str {
    match p {
        Predicate::All => "all",
        Predicate::P0 => "p0",
        Predicate::P0MinusPprime => "p0-minus-pprime",
    }
}
