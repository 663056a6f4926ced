use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsoliton::format::export_example;
use qsoliton::library::{build, Params, NAMES};
use qsoliton::runner::{run, ExitStatus, RunConfig, RunOutcome, Target, DEFAULT_RADII, DEFAULT_RMAX};
use qsoliton::sampling::{DEFAULT_SAMPLES, DEFAULT_SEED};
use qsoliton::{Check, Error};

/// Numerical verification of gradient q-solitons.
#[derive(Parser)]
#[command(name = "qsoliton", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run checks on an example or a chart file.
    Verify(VerifyArgs),
    /// List the example library and the available checks.
    List,
    /// Write an example in the chart text format.
    Export {
        name: String,
        /// Example parameter `key=value`; repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Example name (same as --target).
    #[arg(conflicts_with_all = ["target", "chart_file"])]
    name: Option<String>,
    #[arg(long, conflicts_with = "chart_file")]
    target: Option<String>,
    #[arg(long, value_name = "PATH")]
    chart_file: Option<PathBuf>,
    /// Example parameter `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Shorthand for `--param dim=N`.
    #[arg(long)]
    dim: Option<usize>,
    /// Shorthand for `--param lambda=X`.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Comma-separated check names, or `all`.
    #[arg(long, default_value = "all")]
    checks: String,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u32,
    /// Global tolerance `X`, or `check=X` for one check; repeatable.
    #[arg(long, value_name = "[CHECK=]X")]
    tolerance: Vec<String>,
    /// Number of radii in the sublevel-set grid.
    #[arg(long, default_value_t = DEFAULT_RADII)]
    radii: usize,
    /// Largest radius of the sublevel-set grid.
    #[arg(long, default_value_t = DEFAULT_RMAX)]
    rmax: f64,
    /// Exponent for the lower volume check.
    #[arg(long)]
    delta: Option<f64>,
    /// JSON report path; `-` prints the report instead of the summary.
    #[arg(long, value_name = "PATH")]
    out_json: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out_csv_dir: Option<PathBuf>,
}

fn parse_float(text: &str) -> Result<f64, Error> {
    text.trim()
        .parse()
        .map_err(|_| Error::InvalidParam(format!("expected a number, got '{text}'")))
}

fn params_from(pairs: &[String]) -> Result<Params, Error> {
    let mut p = Params::new();
    for pair in pairs {
        p.insert_pair(pair)?;
    }
    Ok(p)
}

fn config_from(args: VerifyArgs) -> Result<RunConfig, Error> {
    let checks = Check::parse_list(&args.checks)?;
    let mut params = params_from(&args.params)?;
    if let Some(n) = args.dim {
        params.insert("dim", n);
    }
    if let Some(l) = args.lambda {
        params.insert("lambda", l);
    }
    let target = match (args.name.or(args.target), args.chart_file) {
        (Some(name), None) => Target::Example { name, params },
        (None, Some(path)) if params == Params::new() => Target::ChartFile(path),
        (None, Some(_)) => return Err(Error::InvalidParam("chart files take no example parameters".into())),
        _ => return Err(Error::InvalidParam("give an example name or --chart-file".into())),
    };
    let mut config = RunConfig::new(target, checks);
    config.check_config.samples = args.samples;
    config.check_config.seed = args.seed;
    let mut overrides = BTreeMap::new();
    for spec in &args.tolerance {
        match spec.split_once('=') {
            Some((name, value)) => {
                overrides.insert(name.trim().parse::<Check>()?, parse_float(value)?);
            }
            None => config.check_config.tolerance = Some(parse_float(spec)?),
        }
    }
    config.tolerances = overrides;
    config.radii = args.radii;
    config.r_max = args.rmax;
    config.delta = args.delta;
    config.out_csv_dir = args.out_csv_dir;
    config.out_json = args.out_json;
    Ok(config)
}

fn print_summary(outcome: &RunOutcome) {
    let r = &outcome.report;
    println!("target {} (seed {}, {} samples)", r.target, r.seed, r.samples);
    for c in &r.reports {
        println!(
            "  {:<22} {:<12} residual_max {:<12.3e} tolerance {:.1e}",
            c.check,
            c.verdict.to_string(),
            c.residual_max,
            c.tolerance
        );
    }
    for m in &r.mismatches {
        println!("  mismatch {}: expected {}, got {}", m.check, m.expected, m.actual);
    }
}

fn verify(args: VerifyArgs) -> Result<ExitStatus, Error> {
    let mut config = config_from(args)?;
    let to_stdout = config.out_json.as_deref() == Some(std::path::Path::new("-"));
    if to_stdout {
        config.out_json = None;
    }
    let outcome = run(&config)?;
    if to_stdout {
        println!("{}", outcome.report.to_json());
    } else {
        print_summary(&outcome);
    }
    Ok(outcome.status)
}

fn list() -> Result<ExitStatus, Error> {
    println!("examples:");
    for name in NAMES {
        println!("  {name}");
    }
    println!("checks:");
    for c in Check::ALL {
        println!("  {c}");
    }
    Ok(ExitStatus::Match)
}

fn export(name: &str, params: &[String], out: Option<PathBuf>) -> Result<ExitStatus, Error> {
    let ex = build(name, &params_from(params)?)?;
    let text = export_example(&ex)?;
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(ExitStatus::Match)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(args) => verify(args),
        Command::List => list(),
        Command::Export { name, params, out } => export(&name, &params, out),
    };
    let status = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitStatus::of_error(&e)
    });
    ExitCode::from(status.code() as u8)
}
