use std::io::Read;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use specbound::gen::{self, Kind};
use specbound::json::{operator_to_value, parse_operator, witness_to_value};
use specbound::matcore::Tolerance;
use specbound::selftest::{self, Config, Mode};
use specbound::specnorm::search_blowup_with_hints;

mod report;

#[derive(Debug, Parser)]
#[command(name = "specbound", version, about = "Spectral boundedness of elementary operators on M_n(C)")]
struct Cli {
    #[command(flatten)]
    flags: Flags,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Flags {
    /// Tolerances as rank_rel,scalar_rel,spec_abs.
    #[arg(long, global = true, value_parser = parse_tol, default_value = "1e-10,1e-8,1e-8")]
    tol: Tolerance,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Evaluation budget for the blowup search.
    #[arg(long, global = true, default_value_t = 10_000)]
    budget: usize,

    /// Spectral ratio a witness must reach.
    #[arg(long, global = true, default_value_t = 1e3, allow_negative_numbers = true)]
    threshold: f64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Include wall-clock timings (reports are then no longer reproducible byte for byte).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze an operator file (`-` reads stdin).
    Analyze { path: String },
    /// Search for a blowup witness.
    SearchBlowup { path: String },
    /// Print a generated operator: `gen <kind> <n> [k]`, or `gen random <k> <n>`.
    Gen {
        kind: String,
        #[arg(required = true, num_args = 1..=2)]
        sizes: Vec<usize>,
    },
    /// Run the property suites (quick by default).
    Selftest {
        #[arg(long, conflicts_with = "full")]
        quick: bool,
        #[arg(long)]
        full: bool,
    },
}

fn parse_tol(s: &str) -> Result<Tolerance, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [r, sc, a] = parts[..] else {
        return Err(format!("expected three comma-separated values, got {}", parts.len()));
    };
    if [r, sc, a].iter().any(|t| !t.is_finite() || *t <= 0.0) {
        return Err("tolerances must be positive and finite".into());
    }
    Ok(Tolerance::new(r, sc, a))
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn read_input(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Failure(format!("{path}: {e}")))
}

fn emit(format: Format, value: &Value, text: impl FnOnce() -> String) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value).expect("serializable")),
        Format::Text => print!("{}", text()),
    }
}

fn analyze(flags: &Flags, path: &str) -> Result<(), Failure> {
    let s = parse_operator(&read_input(path)?)?;
    let start = Instant::now();
    let mut r = report::analyze(&s, &flags.tol, flags.seed, flags.budget, flags.threshold);
    if flags.timing {
        r["timing"] = json!({"seconds": start.elapsed().as_secs_f64()});
    }
    emit(flags.format, &r, || report::text(&r));
    Ok(())
}

fn search(flags: &Flags, path: &str) -> Result<(), Failure> {
    let s = parse_operator(&read_input(path)?)?;
    let start = Instant::now();
    let out = search_blowup_with_hints(&s, flags.threshold, flags.budget, flags.seed, &[])?;
    let mut v = match &out.witness {
        Some(w) => {
            let mut v = witness_to_value(w);
            v["found"] = json!(true);
            v
        }
        None => json!({"found": false, "threshold": flags.threshold}),
    };
    v["best_ratio"] = json!(out.best_ratio);
    v["evaluations"] = json!(out.evaluations);
    if flags.timing {
        v["timing"] = json!({"seconds": start.elapsed().as_secs_f64()});
    }
    emit(flags.format, &v, || match &out.witness {
        Some(w) => format!(
            "found: {} construction, {} steps, last ratio {:.6e}\n",
            w.construction.tag(),
            w.xs.len(),
            w.last_ratio()
        ),
        None => format!("none (best ratio {:.6e} after {} evaluations)\n", out.best_ratio, out.evaluations),
    });
    Ok(())
}

fn generate(flags: &Flags, kind: &str, sizes: &[usize]) -> Result<(), Failure> {
    let k = Kind::parse(kind).ok_or_else(|| {
        let names: Vec<&str> = Kind::ALL.iter().map(|k| k.name()).collect();
        Failure(format!("unknown kind `{kind}`; expected one of {}", names.join(", ")))
    })?;
    let (n, terms) = match (k, sizes) {
        (Kind::Random, [k, n]) => (*n, Some(*k)),
        (Kind::Random, [_]) => return Err(Failure("usage: gen random <k> <n>".into())),
        (_, [n]) => (*n, None),
        (_, [n, k]) => (*n, Some(*k)),
        _ => unreachable!("clap enforces one or two sizes"),
    };
    if n < 2 {
        return Err(Failure("requires n ≥ 2".into()));
    }
    let g = gen::generate(k, n, terms, flags.seed)?;
    gen::verify_structure(&g).map_err(|e| Failure(format!("generated operator failed verification: {e}")))?;
    let v = operator_to_value(&g.op);
    emit(flags.format, &v, || serde_json::to_string(&v).expect("serializable") + "\n");
    Ok(())
}

fn run_selftest(flags: &Flags, full: bool) -> Result<bool, Failure> {
    let mode = if full { Mode::Full } else { Mode::Quick };
    let results = selftest::run(&Config { mode, seed: flags.seed, tol: flags.tol });
    let pass = results.iter().all(|r| r.pass());
    match flags.format {
        Format::Json => {
            let v = json!({"pass": pass, "suites": results.iter().map(|r| r.to_json()).collect::<Vec<_>>()});
            println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
        }
        Format::Text => {
            for r in &results {
                println!("{}", r.line());
            }
            let passed = results.iter().filter(|r| r.pass()).count();
            println!("{passed}/{} suites passed", results.len());
        }
    }
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let flags = &cli.flags;
    let result = match &cli.command {
        Command::Analyze { path } => analyze(flags, path).map(|_| true),
        Command::SearchBlowup { path } => search(flags, path).map(|_| true),
        Command::Gen { kind, sizes } => generate(flags, kind, sizes).map(|_| true),
        Command::Selftest { full, .. } => run_selftest(flags, *full),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
