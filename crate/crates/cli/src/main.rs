//! `quatspin`: spinor images of quaternionic skew-hermitian lattices over
//! `Q_2` and their spinor class fields over `Q`.
//!
//! Exit codes: 0 success, 1 mathematical mismatch, 2 usage error, 3 resource
//! abort.

mod reproduce;
mod request;

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use quatspin::padic2::parse_rat;
use quatspin::quatalg::{i_pi, parse_quat, pure_with_norm_class, AlgebraParams, Quat};
use quatspin::spinor_search::tables::WitnessTables;
use quatspin::spinor_search::{default_bound, KStarInstance, Strategy};
use quatspin::{Error, SquareClass2};
use serde_json::{json, Value};

use reproduce::Tier;
use request::{execute, Limits, Request, Status};

const EXIT_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_ABORTED: u8 = 3;

#[derive(Parser)]
#[command(name = "quatspin", version, about = "Spinor norms of quaternionic skew-hermitian lattices over Q_2")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Print scan progress to standard error.
    #[arg(long, global = true)]
    progress: bool,
    /// Worker threads for searches (0 = all cores).
    #[arg(long, env = "QUATSPIN_JOBS", default_value_t = 0, global = true)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Check the k-star conditions for one candidate r.
    KstarCheck {
        /// Pure quaternion: a literal such as `j+ij`, `i_10`, `class:-5`, or
        /// JSON `{"pi","delta","coords"}`.
        #[arg(long)]
        a1: String,
        #[arg(long)]
        t: u32,
        #[arg(long)]
        r: String,
    },
    /// Search [0, 2^u)^4 for the least k-star witness.
    Search {
        #[arg(long)]
        a1: String,
        #[arg(long)]
        t: u32,
        /// Bound exponent u; defaults to t+6, or t+3 with --refined.
        #[arg(long)]
        bound: Option<u32>,
        #[arg(long)]
        refined: bool,
        #[arg(long, value_enum, default_value_t = StrategyArg::Pruned)]
        strategy: StrategyArg,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Re-check the published witness tables.
    VerifyTables {
        /// Witness tables to check instead of the built-in ones.
        #[arg(long)]
        tables: Option<PathBuf>,
    },
    /// H(L) of a lattice from its decomposition data.
    SpinorImage {
        /// Lattice JSON, or a path to one (`-` for standard input).
        #[arg(long)]
        lattice: String,
        /// Also decide a binary lattice by witness search.
        #[arg(long)]
        search: bool,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Spinor class field and number of spinor genera.
    ClassField {
        /// Local image JSON, or a path to one.
        #[arg(long)]
        spec: String,
        /// Primes that may divide a discriminant, e.g. `2,5,7`.
        #[arg(long, value_delimiter = ',', required = true)]
        support: Vec<u64>,
        /// Class and spinor genus coincide (indefinite case).
        #[arg(long)]
        indefinite: bool,
    },
    /// Recompute the published results.
    Reproduce {
        #[arg(long, value_enum, default_value_t = Tier::Fast)]
        tier: Tier,
        #[arg(long)]
        tables: Option<PathBuf>,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Re-run the request stored in a JSON report and compare verdicts.
    Replay {
        /// Report file (`-` for standard input).
        report: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Pruned,
    Flat,
}

#[derive(Args, Clone, Default)]
struct LimitArgs {
    /// Stop after this many evaluations.
    #[arg(long)]
    max_evaluations: Option<u64>,
    /// Stop after this many seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

enum Failure {
    Usage(String),
    Math(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Argument(_) | Error::NotPrime(_) | Error::BoundOutOfRange(_) => {
                Failure::Usage(e.to_string())
            }
            e => Failure::Math(e),
        }
    }
}

fn read_input(arg: &str) -> Result<String, Failure> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        return Ok(arg.to_string());
    }
    if arg == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Usage(format!("reading standard input: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(arg).map_err(|e| Failure::Usage(format!("reading {arg}: {e}")))
}

fn parse_json(s: &str) -> Result<Value, Failure> {
    serde_json::from_str(s).map_err(|e| Failure::Usage(format!("invalid JSON: {e}")))
}

fn parse_element(s: &str) -> Result<Quat, Failure> {
    let params = AlgebraParams::standard();
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| Failure::Usage(format!("invalid quaternion JSON: {e}")));
    }
    if let Some(p) = s.strip_prefix("i_") {
        return Ok(i_pi(&params, &parse_rat(p)?)?.0);
    }
    if let Some(c) = s.strip_prefix("class:") {
        let class: SquareClass2 = c.parse()?;
        return Ok(pure_with_norm_class(&params, class)?);
    }
    Ok(parse_quat(&params, s)?)
}

fn load_tables(path: &Option<PathBuf>) -> Result<WitnessTables, Failure> {
    match path {
        None => Ok(WitnessTables::embedded()),
        Some(p) => {
            let s = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("reading {}: {e}", p.display())))?;
            Ok(WitnessTables::from_json(&s)?)
        }
    }
}

fn limits(cli: &Cli, l: &LimitArgs) -> Limits {
    Limits {
        jobs: cli.jobs,
        progress: cli.progress,
        max_evaluations: l.max_evaluations,
        time_limit: l.time_limit.map(Duration::from_secs_f64),
    }
}

fn build(cli: &Cli) -> Result<(Request, Limits), Failure> {
    let plain = limits(cli, &LimitArgs::default());
    Ok(match &cli.command {
        Command::KstarCheck { a1, t, r } => (
            Request::KstarCheck {
                a1: parse_element(a1)?,
                t: *t,
                r: parse_element(r)?,
            },
            plain,
        ),
        Command::Search { a1, t, bound, refined, strategy, limits: l } => {
            let a1 = parse_element(a1)?;
            let inst = KStarInstance::new(a1.clone(), *t)?;
            let bound = bound.unwrap_or_else(|| default_bound(&inst, *refined));
            let strategy = match strategy {
                StrategyArg::Pruned => Strategy::Pruned,
                StrategyArg::Flat => Strategy::Flat,
            };
            (Request::Search { a1, t: *t, bound, strategy }, limits(cli, l))
        }
        Command::VerifyTables { tables } => (Request::VerifyTables { tables: load_tables(tables)? }, plain),
        Command::SpinorImage { lattice, search, limits: l } => {
            let raw = parse_json(&read_input(lattice)?)?;
            // canonicalize through the descriptor
            let desc = quatspin::LatticeDescriptor::from_json(&raw.to_string())?;
            let lattice = parse_json(&desc.to_json())?;
            (Request::SpinorImage { lattice, search: *search }, limits(cli, l))
        }
        Command::ClassField { spec, support, indefinite } => {
            let raw = read_input(spec)?;
            let spec = quatspin::LocalImageSpec::from_json(&raw)?;
            (
                Request::ClassField {
                    spec: parse_json(&spec.to_json())?,
                    support: support.iter().map(|p| p.to_string()).collect(),
                    indefinite: *indefinite,
                },
                plain,
            )
        }
        Command::Reproduce { tier, tables, limits: l } => (
            Request::Reproduce {
                tier: *tier,
                tables: load_tables(tables)?,
            },
            limits(cli, l),
        ),
        Command::Replay { .. } => unreachable!("handled separately"),
    })
}

fn render_text(v: &Value, prefix: &str, out: &mut String) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                render_text(x, &p, out);
            }
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let items: Vec<String> = a.iter().map(scalar_text).collect();
            out.push_str(&format!("{prefix}: [{}]\n", items.join(", ")));
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                render_text(x, &format!("{prefix}[{i}]"), out);
            }
        }
        x => out.push_str(&format!("{prefix}: {}\n", scalar_text(x))),
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        x => x.to_string(),
    }
}

fn emit(format: Format, report: &Value) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(report).expect("report serializes")),
        Format::Text => {
            let mut out = String::new();
            render_text(report, "", &mut out);
            print!("{out}");
        }
    }
}

fn exit_for(status: Status) -> ExitCode {
    match status {
        Status::Ok => ExitCode::SUCCESS,
        Status::Mismatch => ExitCode::from(EXIT_MISMATCH),
        Status::Aborted => ExitCode::from(EXIT_ABORTED),
    }
}

fn report(req: &Request, resp: &request::Response, elapsed: Duration) -> Value {
    let mut v = serde_json::to_value(req).expect("request serializes");
    v["schema"] = json!(1);
    v["verdict"] = resp.verdict.clone();
    v["citations"] = json!(resp.citations);
    v["timing"] = json!({ "elapsed_ms": elapsed.as_millis().to_string() });
    v
}

fn replay(cli: &Cli, path: &Path) -> Result<ExitCode, Failure> {
    let raw = read_input(&path.to_string_lossy())?;
    let stored = parse_json(&raw)?;
    let req: Request = serde_json::from_value(stored.clone())
        .map_err(|e| Failure::Usage(format!("report has no valid request: {e}")))?;
    let resp = execute(&req, &limits(cli, &LimitArgs::default()))?;
    let same = stored.get("verdict") == Some(&resp.verdict);
    let out = json!({
        "schema": 1,
        "command": "replay",
        "replayed": req.name(),
        "verdict_matches": same,
        "verdict": resp.verdict,
    });
    emit(cli.format, &out);
    Ok(if same { exit_for(resp.status) } else { ExitCode::from(EXIT_MISMATCH) })
}

fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    if let Command::Replay { report } = &cli.command {
        return replay(cli, report);
    }
    let (req, limits) = build(cli)?;
    let start = Instant::now();
    let resp = execute(&req, &limits)?;
    emit(cli.format, &report(&req, &resp, start.elapsed()));
    Ok(exit_for(resp.status))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Math(Error::Aborted { covered, total })) => {
            emit(
                cli.format,
                &json!({ "schema": 1, "status": "aborted", "covered": covered.to_string(), "total": total.to_string() }),
            );
            ExitCode::from(EXIT_ABORTED)
        }
        Err(Failure::Math(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
