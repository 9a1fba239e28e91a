//! Command-line front end: stratum reports, boundary graphs, Euler
//! characteristics, intersection numbers and the evaluation cache.

mod expr;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num::BigRational;
use serde_json::json;
use strata::evaluation_cache::{EvalCache, EvalContext};
use strata::{GeneralisedStratum, PointRef, StrataError};

use crate::expr::ParseError;

#[derive(Parser)]
#[command(name = "strata", version, about = "Tautological calculus on strata of differentials")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    /// Directory holding the evaluation cache; defaults to STRATA_CACHE_DIR or the working directory.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Args)]
struct StratumArgs {
    /// Orders of one component, comma separated; repeat for each component.
    #[arg(long = "sig", required = true, allow_hyphen_values = true, value_parser = parse_sig)]
    sig: Vec<Vec<i32>>,
    /// Poles with a vanishing residue sum, as component:index pairs; repeat for each condition.
    #[arg(long = "res", value_parser = parse_res)]
    res: Vec<Vec<PointRef>>,
}

#[derive(Subcommand)]
enum Command {
    /// Genus, dimension and boundary graph counts.
    Info(StratumArgs),
    /// The two-level graphs without horizontal edges.
    Bics(StratumArgs),
    /// The graphs of a profile.
    Lookup {
        #[command(flatten)]
        stratum: StratumArgs,
        /// BIC indices, comma separated.
        #[arg(long, value_delimiter = ',')]
        profile: Vec<usize>,
        /// Print only this component of the profile.
        #[arg(long)]
        component: Option<usize>,
    },
    /// The orbifold Euler characteristic.
    Euler {
        #[command(flatten)]
        stratum: StratumArgs,
        /// Print a per-profile trace to stderr.
        #[arg(long)]
        verbose: bool,
    },
    /// Integrates an expression in xi, psi(i) and D(p0,...;c).
    Eval {
        #[command(flatten)]
        stratum: StratumArgs,
        #[arg(long)]
        expr: String,
    },
    /// Inspects or transfers the evaluation cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    /// Prints the cached top ξ-powers and ψ-integrals.
    Print,
    /// Merges a file of cache records.
    Import { file: PathBuf },
    /// Writes every cached record to a file.
    Export { file: PathBuf },
}

fn parse_sig(s: &str) -> Result<Vec<i32>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<i32>().map_err(|e| format!("'{t}': {e}")))
        .collect()
}

fn parse_res(s: &str) -> Result<Vec<PointRef>, String> {
    s.split(',')
        .map(|t| {
            let (c, i) = t.trim().split_once(':').ok_or_else(|| format!("'{t}': expected component:index"))?;
            let c = c.parse().map_err(|e| format!("'{t}': {e}"))?;
            let i = i.parse().map_err(|e| format!("'{t}': {e}"))?;
            Ok(PointRef::new(c, i))
        })
        .collect()
}

fn stratum(a: &StratumArgs) -> anyhow::Result<GeneralisedStratum> {
    Ok(GeneralisedStratum::new(a.sig.clone(), a.res.clone())?)
}

fn context(cli: &Cli) -> anyhow::Result<EvalContext> {
    let dir = match &cli.cache_dir {
        Some(d) => d.clone(),
        None => match std::env::var_os("STRATA_CACHE_DIR") {
            Some(d) => PathBuf::from(d),
            None => std::env::current_dir()?,
        },
    };
    Ok(EvalContext::new(EvalCache::open(dir)?))
}

fn value_out(format: Format, v: &BigRational) -> String {
    match format {
        Format::Table => v.to_string(),
        Format::Json => json!({ "value": v.to_string() }).to_string(),
    }
}

fn graphs_json(gs: &[std::sync::Arc<strata::EmbeddedLevelGraph>]) -> anyhow::Result<String> {
    let data: Vec<_> = gs.iter().map(|g| g.lg().to_data()).collect();
    Ok(serde_json::to_string_pretty(&data)?)
}

fn run(cli: &Cli) -> anyhow::Result<String> {
    match &cli.command {
        Command::Info(a) => {
            let x = stratum(a)?;
            Ok(match cli.format {
                Format::Table => x.info().trim_end().to_string(),
                Format::Json => {
                    let counts = x.graph_counts();
                    serde_json::to_string_pretty(&json!({
                        "signature": a.sig,
                        "genera": x.genera(),
                        "dimension": x.dim(),
                        "graph_counts": counts,
                        "total": counts.iter().sum::<usize>(),
                    }))?
                }
            })
        }
        Command::Bics(a) => {
            let x = stratum(a)?;
            match cli.format {
                Format::Table => Ok(x
                    .bics()
                    .iter()
                    .enumerate()
                    .map(|(i, b)| format!("BIC {i}:\n{}", b.explain()))
                    .collect::<Vec<_>>()
                    .join("\n")),
                Format::Json => graphs_json(x.bics()),
            }
        }
        Command::Lookup { stratum: a, profile, component } => {
            let x = stratum(a)?;
            if x.ordered_profile(profile).is_none() {
                return Err(StrataError::UnknownProfile(profile.clone()).into());
            }
            let all = x.lookup(profile)?;
            let gs = match component {
                Some(c) => vec![all.get(*c).cloned().ok_or_else(|| StrataError::UnknownProfile(profile.clone()))?],
                None => all.to_vec(),
            };
            match cli.format {
                Format::Table => Ok(gs
                    .iter()
                    .enumerate()
                    .map(|(i, g)| format!("Component {}:\n{}", component.unwrap_or(i), g.explain()))
                    .collect::<Vec<_>>()
                    .join("\n")),
                Format::Json => graphs_json(&gs),
            }
        }
        Command::Euler { stratum: a, verbose } => {
            let x = stratum(a)?;
            let ctx = context(cli)?;
            let v = if *verbose {
                let (v, trace) = x.euler_characteristic_verbose(&ctx)?;
                eprint!("{trace}");
                v
            } else {
                x.euler_characteristic_with(&ctx)?
            };
            Ok(value_out(cli.format, &v))
        }
        Command::Eval { stratum: a, expr: text } => {
            let e = expr::parse(text)?;
            let x = stratum(a)?;
            let ctx = context(cli)?;
            let class = expr::to_class(&x, &e)?;
            Ok(value_out(cli.format, &x.evaluate_with(&class, &ctx)?))
        }
        Command::Cache { action } => {
            let ctx = context(cli)?;
            match action {
                CacheAction::Print => Ok(match cli.format {
                    Format::Table => format!("{}\n{}", ctx.cache.print_top_xis(), ctx.cache.print_adm_evals()).trim_end().to_string(),
                    Format::Json => ctx.cache.jsonl().trim_end().to_string(),
                }),
                CacheAction::Import { file } => {
                    let n = ctx.cache.import(file).with_context(|| format!("importing {}", file.display()))?;
                    Ok(format!("Imported {n} records."))
                }
                CacheAction::Export { file } => {
                    ctx.cache.export(file)?;
                    Ok(format!("Exported to {}.", file.display()))
                }
            }
        }
    }
}

/// 2 for unusable input, 3 for a missing oracle value, 4 otherwise.
fn exit_code(e: &anyhow::Error) -> u8 {
    if e.chain().any(|c| c.is::<ParseError>()) {
        return 2;
    }
    match e.chain().find_map(|c| c.downcast_ref::<StrataError>()) {
        Some(
            StrataError::MalformedSignature(_)
            | StrataError::EmptySignatureList
            | StrataError::InvalidResidueCondition(_)
            | StrataError::NotAPole(_)
            | StrataError::UnknownLeg(_)
            | StrataError::UnknownProfile(_)
            | StrataError::RedundantCondition
            | StrataError::Disconnected
            | StrataError::FileCorrupt(_)
            | StrataError::Io(_),
        ) => 2,
        Some(StrataError::OracleMiss(_)) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            // A closed pipe downstream is not a failure of the command.
            let _ = writeln!(std::io::stdout(), "{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
