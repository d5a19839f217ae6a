use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};

use weylval::descriptor::OmegaDescriptor;
use weylval::eval::{strongly_abelian_sample, Evaluator, DEFAULT_DEPTH};
use weylval::extension::{extension_count, extension_violations, omega_to_z, resolve_gammas, roundtrip_check};
use weylval::orderings::{enumerate, extend_ordering, sign, OrderingDescriptor};
use weylval::parse::parse;
use weylval::sample::random_element;
use weylval::shadow::shadow_compare;
use weylval::{Error, WeylElement};

#[derive(Parser)]
#[command(name = "weylval", version, about = "Valuations and orderings on the first Weyl algebra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Descriptor JSON file.
    #[arg(long)]
    desc: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
}

#[derive(Args)]
struct Sampling {
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Check the validity conditions of a descriptor.
    Validate(Common),
    /// Value of an element.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        expr: String,
    },
    /// Residue of an element of value zero.
    Residue {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        expr: String,
    },
    /// Sign of an element in a given ordering.
    Sign {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        expr: String,
        /// Ordering as JSON, or a path to a JSON file.
        #[arg(long)]
        ordering: String,
    },
    /// List the compatible orderings.
    Orderings(Common),
    /// Extendability to the Ore extension and the resolved roots.
    ExtendCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        sign_choice: Option<String>,
    },
    /// z-sequence of the extension.
    Convert {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        sign_choice: Option<String>,
    },
    /// Compare the z-valuation with eval on random elements.
    Roundtrip {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, allow_hyphen_values = true)]
        sign_choice: Option<String>,
    },
    /// Check v([a, b]) > v(a) + v(b) on random pairs.
    SampleStronglyAbelian {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Compare eval with the commutative root approximation.
    ShadowCompare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
    },
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

/// A report and whether it counts as success.
struct Outcome {
    report: Json,
    summary: String,
    ok: bool,
}

fn done(report: Json, summary: String) -> Outcome {
    Outcome { report, summary, ok: true }
}

fn load(path: &PathBuf) -> Result<OmegaDescriptor, Failure> {
    let src = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(OmegaDescriptor::from_json(&src)?)
}

fn expr(s: &str) -> Result<WeylElement, Failure> {
    Ok(parse(s)?)
}

fn sign_choice(s: &Option<String>) -> Result<Option<i8>, Failure> {
    match s.as_deref().map(str::trim) {
        None => Ok(None),
        Some("+1" | "1" | "+") => Ok(Some(1)),
        Some("-1" | "-") => Ok(Some(-1)),
        Some(other) => Err(Failure::Usage(format!("--sign-choice must be +1 or -1, got {other:?}"))),
    }
}

fn ordering(s: &str) -> Result<OrderingDescriptor, Failure> {
    let src = if s.trim_start().starts_with('{') {
        s.to_string()
    } else {
        std::fs::read_to_string(s).map_err(|e| Failure::Usage(format!("cannot read {s}: {e}")))?
    };
    Ok(OrderingDescriptor::from_json(&src)?)
}

fn run(cmd: Command) -> Result<Outcome, Failure> {
    match cmd {
        Command::Validate(c) => {
            let d = load(&c.desc)?;
            let depth = if d.finite_len().is_none() { c.depth.min(d.window()) } else { c.depth };
            let v = d.validate(depth);
            let kind = d.group_kind().ok().map(|k| k.name());
            let ok = v.is_empty();
            Ok(Outcome {
                summary: if ok { format!("valid ({})", kind.unwrap_or("?")) } else { format!("{} violation(s)", v.len()) },
                report: json!({"valid": ok, "group_kind": kind, "violations": v}),
                ok,
            })
        }
        Command::Eval { common, expr: e } => {
            let d = load(&common.desc)?;
            let v = Evaluator::new(&d, common.depth)?.eval(&expr(&e)?)?;
            Ok(done(json!({"value": v.to_json(&d.xi_scale)}), format!("v = {}", v.display(&d.xi_scale))))
        }
        Command::Residue { common, expr: e } => {
            let d = load(&common.desc)?;
            let r = Evaluator::new(&d, common.depth)?.residue(&expr(&e)?)?;
            Ok(done(json!({"residue": r.to_string()}), format!("residue = {r}")))
        }
        Command::Sign { common, expr: e, ordering: o } => {
            let d = load(&common.desc)?;
            let s = sign(&d, &ordering(&o)?, &expr(&e)?, common.depth)?;
            Ok(done(json!({"sign": s}), format!("sign = {s:+}")))
        }
        Command::Orderings(c) => {
            let d = load(&c.desc)?;
            let list = enumerate(&d)?;
            let ext: Vec<Json> = list
                .iter()
                .map(|o| match extend_ordering(&d, o) {
                    Ok(e) => json!({"extends": true, "sign_choice": e.sign_choice, "extended": e.ordering}),
                    Err(err) => json!({"extends": false, "reason": err.to_string()}),
                })
                .collect();
            Ok(done(
                json!({"count": list.len(), "orderings": list, "extensions": ext}),
                format!("{} ordering(s)", list.len()),
            ))
        }
        Command::ExtendCheck { common, sign_choice: s } => {
            let d = load(&common.desc)?;
            let v = extension_violations(&d)?;
            if !v.is_empty() {
                return Ok(Outcome {
                    summary: format!("not extendable: {}", v[0]),
                    report: json!({"extendable": false, "violations": v}),
                    ok: false,
                });
            }
            let count = extension_count(&d)?;
            let choices = match (sign_choice(&s)?, count) {
                (Some(c), _) => vec![Some(c)],
                (None, 2) => vec![Some(1), Some(-1)],
                (None, _) => vec![None],
            };
            let resolutions = choices.into_iter().map(|c| resolve_gammas(&d, c)).collect::<Result<Vec<_>, _>>()?;
            Ok(done(
                json!({"extendable": true, "extensions": count, "resolutions": resolutions}),
                format!("extendable, {count} extension(s)"),
            ))
        }
        Command::Convert { common, sign_choice: s } => {
            let d = load(&common.desc)?;
            let g = resolve_gammas(&d, sign_choice(&s)?)?;
            let c = omega_to_z(&d, &g, common.depth)?;
            let entries: Vec<Json> = c.entries.iter().map(|(r, gm)| json!({"r": r.to_string(), "gamma": gm.to_string()})).collect();
            Ok(done(
                json!({
                    "z_sequence": entries,
                    "terminal": c.terminal.as_ref().map(|t| t.to_json(&d.xi_scale)),
                    "trace": c.trace,
                }),
                format!("{} term(s){}", c.entries.len(), if c.terminal.is_some() { " and a terminal value" } else { "" }),
            ))
        }
        Command::Roundtrip { common, sampling, sign_choice: s } => {
            let d = load(&common.desc)?;
            let g = resolve_gammas(&d, sign_choice(&s)?)?;
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(sampling.seed);
            let samples: Vec<WeylElement> = (0..sampling.trials).map(|_| random_element(&mut rng, 3, 4, 4)).collect();
            let rep = roundtrip_check(&d, &g, &samples, common.depth)?;
            let ok = rep.mismatches.is_empty();
            Ok(Outcome { summary: format!("{} checked, {} mismatch(es)", rep.checked, rep.mismatches.len()), report: json!(rep), ok })
        }
        Command::SampleStronglyAbelian { common, sampling } => {
            let d = load(&common.desc)?;
            let rep = strongly_abelian_sample(&Evaluator::new(&d, common.depth)?, sampling.seed, sampling.trials)?;
            let ok = rep.violations.is_empty();
            Ok(Outcome { summary: format!("{} pair(s), {} violation(s)", rep.trials, rep.violations.len()), report: json!(rep), ok })
        }
        Command::ShadowCompare { common, sampling } => {
            let d = load(&common.desc)?;
            let rep = shadow_compare(&d, sampling.seed, sampling.trials, common.depth)?;
            let ok = rep.mismatches.is_empty();
            Ok(Outcome {
                summary: format!("{} trial(s), {} skipped, {} disagreement(s)", rep.trials, rep.skipped, rep.mismatches.len()),
                report: json!(rep),
                ok,
            })
        }
    }
}

fn error_json(e: &Error) -> Json {
    let mut o = json!({"kind": e.kind(), "message": e.to_string()});
    if let Error::Parse { line, column, .. } = e {
        o["line"] = json!(line);
        o["column"] = json!(column);
    }
    json!({ "error": o })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            println!("{}", out.report);
            eprintln!("{}", out.summary);
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Domain(e)) => {
            println!("{}", error_json(&e));
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
    }
}
