//! Batch execution of checks against an example or a chart file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::check::Check;
use crate::error::{Error, Result};
use crate::format::parse_example;
use crate::library::{build, Example, Params};
use crate::probes;
use crate::report::{CheckReport, Mismatch, RunReport, Verdict, SCHEMA_VERSION};
use crate::verify::{self, CheckConfig};
use crate::volume::{self, Normalization, SublevelProfile};

pub const DEFAULT_RADII: usize = 64;
pub const DEFAULT_RMAX: f64 = 12.0;

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Example { name: String, params: Params },
    ChartFile(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub target: Target,
    pub checks: Vec<Check>,
    pub check_config: CheckConfig,
    /// Per-check tolerance overrides.
    pub tolerances: BTreeMap<Check, f64>,
    pub radii: usize,
    pub r_max: f64,
    /// Lower-volume exponent `δ`; the measured average when `None`.
    pub delta: Option<f64>,
    pub out_json: Option<PathBuf>,
    pub out_csv_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(target: Target, checks: Vec<Check>) -> RunConfig {
        RunConfig {
            target,
            checks,
            check_config: CheckConfig::default(),
            tolerances: BTreeMap::new(),
            radii: DEFAULT_RADII,
            r_max: DEFAULT_RMAX,
            delta: None,
            out_json: None,
            out_csv_dir: None,
        }
    }

    fn config_for(&self, check: Check) -> CheckConfig {
        let mut cfg = self.check_config.clone();
        if let Some(&t) = self.tolerances.get(&check) {
            cfg.tolerance = Some(t);
        }
        cfg
    }
}

/// Process exit status of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Match = 0,
    Mismatch = 1,
    ParseError = 2,
    NumericFailure = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn of_error(e: &Error) -> ExitStatus {
        if e.is_input_error() {
            ExitStatus::ParseError
        } else {
            ExitStatus::NumericFailure
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub status: ExitStatus,
}

/// Loads the target. Chart files without `expect` lines get an empty table,
/// which means every evaluated check must pass.
pub fn load_target(target: &Target) -> Result<Example> {
    match target {
        Target::Example { name, params } => build(name, params),
        Target::ChartFile(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidParam(format!("cannot read {}: {e}", path.display())))?;
            parse_example(&text)
        }
    }
}

/// Checks that disagree with the expected table. Inapplicable results never
/// count; checks without an expectation must pass.
pub fn mismatches(reports: &[CheckReport], expected: &BTreeMap<Check, Verdict>) -> Vec<Mismatch> {
    reports
        .iter()
        .filter(|r| r.verdict != Verdict::Inapplicable)
        .filter_map(|r| {
            let check: Check = r.check.parse().ok()?;
            let want = expected.get(&check).copied().unwrap_or(Verdict::Pass);
            (want != r.verdict).then(|| Mismatch {
                check: r.check.clone(),
                expected: want,
                actual: r.verdict,
            })
        })
        .collect()
}

/// Requested checks plus their prerequisites, in dependency order.
pub fn schedule(checks: &[Check]) -> Vec<Check> {
    let mut wanted: Vec<Check> = checks.to_vec();
    for c in checks {
        wanted.extend_from_slice(c.prerequisites());
    }
    Check::ALL.into_iter().filter(|c| wanted.contains(c)).collect()
}

struct Artifacts {
    profile: Option<SublevelProfile>,
}

fn volume_report(
    check: Check,
    ex: &Example,
    profile: &std::result::Result<SublevelProfile, volume::Inapplicable>,
    config: &RunConfig,
) -> CheckReport {
    let s = &ex.soliton;
    let cfg = config.config_for(check);
    match profile {
        Err(volume::Inapplicable(reason)) => CheckReport::inapplicable(
            check.name(),
            &s.label,
            cfg.tolerance_for(s.regime()),
            s.regime(),
            reason.clone(),
        ),
        Ok(p) => match check {
            Check::Coarea => volume::coarea_identity_check(p, cfg.tolerance),
            Check::UpperVolume => volume::upper_volume_check(p),
            _ => volume::lower_volume_check(p, config.delta),
        },
    }
}

fn evaluate(ex: &Example, config: &RunConfig) -> Result<(Vec<CheckReport>, Artifacts)> {
    let s = &ex.soliton;
    let mut done: BTreeMap<Check, CheckReport> = BTreeMap::new();
    let mut profile = None;
    for check in schedule(&config.checks) {
        let cfg = config.config_for(check);
        let report = match check {
            Check::SolitonResidual => verify::soliton_residual(s, &cfg)?,
            Check::HamiltonScalar => verify::hamilton_scalar(s, &cfg)?.1,
            Check::HamiltonTensor => verify::hamilton_tensor(s, &cfg)?,
            Check::FLambda => verify::f_lambda(s, None, &cfg)?,
            Check::LaplacianTrace => verify::laplacian_trace(s, &cfg)?,
            Check::Rigidity => verify::rigidity(s, &cfg)?,
            Check::TraceBounds => verify::trace_bounds(s, &cfg)?,
            Check::FlatnessHypotheses => verify::flatness_hypotheses(s, &cfg)?,
            Check::CompactIntegral => verify::compact_integral(s, &cfg)?,
            Check::EvolutionIdentities => verify::evolution_identities(s, &cfg)?,
            Check::ShapeOperator => probes::shape_operator_check(s, &cfg)?,
            Check::GrowthBounds => probes::growth_bounds(s, None, &cfg)?,
            Check::LowerBound => probes::lower_bound_probe(s, &cfg)?,
            Check::OmoriYau => probes::omori_yau_conditions(s, &done[&Check::LowerBound], &cfg)?,
            Check::Coarea | Check::UpperVolume | Check::LowerVolume => {
                if profile.is_none() {
                    profile = Some(volume::build_profile(
                        s,
                        config.radii,
                        config.r_max,
                        Normalization::ShiftToZero,
                        &config.check_config,
                    )?);
                }
                volume_report(check, ex, profile.as_ref().expect("profile built"), config)
            }
        };
        done.insert(check, report);
    }
    let reports = config.checks.iter().filter_map(|c| done.remove(c)).collect();
    Ok((
        reports,
        Artifacts {
            profile: profile.and_then(|p| p.ok()),
        },
    ))
}

fn write_samples(path: &Path, report: &CheckReport, coords: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = coords.to_vec();
    header.push("residual".into());
    w.write_record(&header)?;
    for (p, r) in report.points.iter().zip(&report.per_sample) {
        let mut row: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
        row.push(format!("{r:?}"));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_csvs(dir: &Path, ex: &Example, reports: &[CheckReport], art: &Artifacts, config: &RunConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    let coords = ex.chart().coords();
    for r in reports {
        if !r.points.is_empty() && r.points.len() == r.per_sample.len() {
            write_samples(&dir.join(format!("{}_samples.csv", r.check)), r, coords)?;
        }
    }
    if let Some(p) = &art.profile {
        p.write_csv(fs::File::create(dir.join("volume_profile.csv"))?)?;
    }
    if let Some(shape) = reports.iter().find(|r| r.check == Check::ShapeOperator.name()) {
        if let Some(big) = shape.constants.big_lambda {
            let cfg = config.config_for(Check::ShapeOperator);
            for (k, (_, trace)) in probes::shape_traces(&ex.soliton, big, &cfg)?.iter().enumerate() {
                trace.write_csv(fs::File::create(dir.join(format!("shape_trace_{k}.csv")))?, coords)?;
            }
        }
    }
    Ok(())
}

/// Runs the configured checks on an already loaded example.
pub fn run_example(ex: &Example, config: &RunConfig) -> Result<RunOutcome> {
    if config.checks.is_empty() {
        return Err(Error::UnknownCheck("no checks requested".into()));
    }
    let (reports, art) = evaluate(ex, config)?;
    let mismatches = mismatches(&reports, &ex.expected);
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        target: ex.soliton.label.clone(),
        seed: config.check_config.seed,
        samples: config.check_config.samples,
        reports,
        mismatches,
    };
    if let Some(path) = &config.out_json {
        fs::write(path, report.to_json())?;
    }
    if let Some(dir) = &config.out_csv_dir {
        write_csvs(dir, ex, &report.reports, &art, config)?;
    }
    let status = if report.mismatches.is_empty() {
        ExitStatus::Match
    } else {
        ExitStatus::Mismatch
    };
    Ok(RunOutcome { report, status })
}

pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let ex = load_target(&config.target)?;
    run_example(&ex, config)
}
