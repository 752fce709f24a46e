//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage/config/IO error, 2 blow-up, 3 failed
//! verification or convergence target.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::brackets::AffinePoissonForm;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::state::{SeriesManifest, SolutionSeries, DIAGNOSTICS_FILE};
use crate::verify::{
    convergence_study, identity_suite_with, residual_convergence, residual_norms, ConvergenceReport, Oracle,
    SuiteOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BLOW_UP: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

/// Environment variable capping worker threads (0 = automatic).
pub const THREADS_ENV: &str = "AFFINE_STRAND_THREADS";
pub const PLOT_FILE: &str = "plot.gp";

#[derive(Debug, Parser)]
#[command(name = "affine-strand", version, about = "Molecular-strand simulation and verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write snapshots, diagnostics, a manifest and a gnuplot script.
    Simulate(SimulateArgs),
    /// Run the seeded identity suite.
    Verify(VerifyArgs),
    /// Evaluate the weak-form field-equation residual on stored series.
    Residual(ResidualArgs),
    /// Grid-refinement study of a scenario.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Tolerance override, `check.name=value`; repeatable.
    #[arg(long = "tol", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
    #[arg(long, default_value = "identity_report.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    /// Series directory; repeat for a refinement study.
    #[arg(long = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    /// `random:K:SEED` or a JSON file holding an array of forms.
    #[arg(long, default_value = "random:10:42")]
    pub forms: String,
    /// Fit a convergence order per form across the inputs.
    #[arg(long)]
    pub refine: bool,
    #[arg(long, default_value_t = 1.8)]
    pub min_order: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleArg {
    Analytic,
    #[value(name = "self")]
    SelfReference,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, value_enum, default_value_t = OracleArg::SelfReference)]
    pub oracle: OracleArg,
    #[arg(long, default_value_t = 1.7)]
    pub min_order: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_tol(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got '{s}'"))?;
    let v: f64 = value.parse().map_err(|e| format!("bad tolerance '{value}': {e}"))?;
    if !(v >= 0.0) {
        return Err(format!("tolerance must be ≥ 0 (got {v})"));
    }
    Ok((name.to_string(), v))
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Verify(a) => verify(&a),
        Command::Residual(a) => residual(&a),
        Command::Convergence(a) => convergence(&a),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a non-negative integer (got '{value}')")))?;
    if n > 0 {
        // a second initialisation in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn report_error(e: &Error) -> i32 {
    eprintln!("error: {e}");
    EXIT_USAGE
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<String> {
    let json = serde_json::to_string_pretty(value).expect("report serializes");
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, &json).map_err(|e| Error::io(path, e))?;
    Ok(json)
}

/// Outcome of [`simulate_to_dir`].
#[derive(Debug)]
pub struct SimulateOutcome {
    pub manifest: SeriesManifest,
    /// Time of the first non-finite value, when the run blew up.
    pub blow_up: Option<f64>,
}

/// Runs the scenario in `config_path` and writes its outputs into `out`.
pub fn simulate_to_dir(config_path: &Path, out: &Path) -> Result<SimulateOutcome> {
    let (config, text) = ScenarioConfig::load(config_path)?;
    let scenario = config.build()?;
    let (series, blow_up) = match scenario.run() {
        Ok(s) => (s, None),
        Err(Error::BlowUp { t, partial }) => (*partial, Some(t)),
        Err(e) => return Err(e),
    };
    let plot = gnuplot_script(&series);
    let manifest = series.save(out, Some(text), &[(PLOT_FILE.to_string(), plot)])?;
    Ok(SimulateOutcome { manifest, blow_up })
}

/// Gnuplot script plotting the last snapshot's `ρ` components and the
/// energy drift.
pub fn gnuplot_script(series: &SolutionSeries) -> String {
    let last = series.snapshots.len().saturating_sub(1);
    let t = series.snapshots.last().map_or(0.0, |s| s.t);
    let snap = SolutionSeries::snapshot_file_name(last);
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 1000,800\n\
         set output 'plot.png'\n\
         set key autotitle columnhead\n\
         set multiplot layout 2,1\n\
         set title 'rho at t = {t:.6}'\n\
         set xlabel 's'\n\
         plot '{snap}' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines\n\
         set title 'relative energy drift'\n\
         set xlabel 't'\n\
         plot '{DIAGNOSTICS_FILE}' using 1:3 with lines\n\
         unset multiplot\n"
    )
}

fn simulate(a: &SimulateArgs) -> i32 {
    match simulate_to_dir(&a.config, &a.out) {
        Ok(SimulateOutcome { blow_up: None, manifest }) => {
            println!(
                "wrote {} snapshots to {}",
                manifest.snapshots.len(),
                a.out.display()
            );
            EXIT_OK
        }
        Ok(SimulateOutcome { blow_up: Some(t), manifest }) => {
            eprintln!(
                "error: solution blew up at t = {t}; {} snapshots kept in {}",
                manifest.snapshots.len(),
                a.out.display()
            );
            EXIT_BLOW_UP
        }
        Err(e) => report_error(&e),
    }
}

fn verify(a: &VerifyArgs) -> i32 {
    let options = SuiteOptions {
        tolerances: a.tol.iter().cloned().collect::<BTreeMap<_, _>>(),
        ..Default::default()
    };
    let report = match identity_suite_with(a.seed, a.trials as usize, &options) {
        Ok(r) => r,
        Err(e) => return report_error(&e),
    };
    match write_json(&a.out, &report) {
        Ok(json) => println!("{json}"),
        Err(e) => return report_error(&e),
    }
    if report.all_passed {
        EXIT_OK
    } else {
        for c in report.checks.iter().filter(|c| !c.passed) {
            eprintln!("FAILED {}: max error {:e} > {:e}", c.name, c.max_error, c.tolerance);
        }
        EXIT_VERIFY_FAILED
    }
}

/// Parses `random:K:SEED` or reads a JSON array of forms.
pub fn parse_forms(spec: &str) -> Result<Vec<AffinePoissonForm>> {
    if let Some(rest) = spec.strip_prefix("random:") {
        let (k, seed) = rest
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("--forms: expected random:K:SEED, got '{spec}'")))?;
        let k: usize = k.parse().map_err(|_| Error::Config(format!("--forms: bad count '{k}'")))?;
        let seed: u64 = seed.parse().map_err(|_| Error::Config(format!("--forms: bad seed '{seed}'")))?;
        if k == 0 {
            return Err(Error::Config("--forms: need at least one form".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return Ok((0..k).map(|_| AffinePoissonForm::random(&mut rng)).collect());
    }
    let path = Path::new(spec);
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let forms: Vec<AffinePoissonForm> =
        serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()))?;
    for f in &forms {
        f.validate().map_err(|e| Error::malformed(path, e.to_string()))?;
    }
    Ok(forms)
}

#[derive(Debug, Serialize)]
pub struct FormResidual {
    pub index: usize,
    /// One max-norm per input series.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ResidualReport {
    pub inputs: Vec<String>,
    pub resolutions: Vec<usize>,
    pub forms: Vec<FormResidual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<Vec<ConvergenceReport>>,
}

/// Residual norms of `forms` on the series in `dirs`; with `refine`, the
/// series are ordered by resolution and an order is fitted per form.
pub fn residual_study(dirs: &[PathBuf], forms: &[AffinePoissonForm], refine: bool) -> Result<ResidualReport> {
    let mut loaded = Vec::with_capacity(dirs.len());
    for d in dirs {
        let (series, _) = SolutionSeries::load(d)?;
        series
            .require_snapshots(3)
            .map_err(|e| Error::malformed(d.join(crate::state::MANIFEST_FILE), e.to_string()))?;
        loaded.push((d.display().to_string(), series));
    }
    if refine {
        loaded.sort_by_key(|(_, s)| s.grid.n());
    }
    let (inputs, series): (Vec<String>, Vec<SolutionSeries>) = loaded.into_iter().unzip();
    let norms = residual_norms(forms, &series)?;
    let convergence = if refine { Some(residual_convergence(forms, &series)?) } else { None };
    Ok(ResidualReport {
        inputs,
        resolutions: series.iter().map(|s| s.grid.n()).collect(),
        forms: norms
            .into_iter()
            .enumerate()
            .map(|(index, residuals)| FormResidual { index, residuals })
            .collect(),
        convergence,
    })
}

fn residual(a: &ResidualArgs) -> i32 {
    let result = parse_forms(&a.forms).and_then(|forms| residual_study(&a.inputs, &forms, a.refine));
    let report = match result {
        Ok(r) => r,
        Err(e) => return report_error(&e),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(out) = &a.out {
        if let Err(e) = write_json(out, &report) {
            return report_error(&e);
        }
    }
    println!("{json}");
    match &report.convergence {
        Some(reports) if reports.iter().any(|r| !r.order_at_least(a.min_order)) => {
            eprintln!("residual order below {} for at least one form", a.min_order);
            EXIT_VERIFY_FAILED
        }
        _ => EXIT_OK,
    }
}

fn convergence(a: &ConvergenceArgs) -> i32 {
    let oracle = match a.oracle {
        OracleArg::Analytic => Oracle::Analytic,
        OracleArg::SelfReference => Oracle::SelfReference,
    };
    if a.levels < 3 {
        eprintln!("error: levels must be ≥ 3 (got {})", a.levels);
        return EXIT_USAGE;
    }
    let result = ScenarioConfig::load(&a.config).and_then(|(c, _)| convergence_study(&c, a.levels, oracle));
    let report = match result {
        Ok(r) => r,
        Err(Error::BlowUp { t, .. }) => {
            eprintln!("error: solution blew up at t = {t}");
            return EXIT_BLOW_UP;
        }
        Err(e) => return report_error(&e),
    };
    if let Some(out) = &a.out {
        if let Err(e) = write_json(out, &report) {
            return report_error(&e);
        }
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if report.order_at_least(a.min_order) {
        EXIT_OK
    } else {
        eprintln!("observed order {:.3} below {}", report.order, a.min_order);
        EXIT_VERIFY_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tol_parsing() {
        assert_eq!(parse_tol("a.b=1e-3").unwrap(), ("a.b".to_string(), 1e-3));
        assert!(parse_tol("a.b").is_err());
        assert!(parse_tol("a=-1").is_err());
    }

    #[test]
    fn random_forms_are_seeded() {
        let a = parse_forms("random:3:9").unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a, parse_forms("random:3:9").unwrap());
        assert!(parse_forms("random:0:9").is_err());
        assert!(parse_forms("random:x").is_err());
    }

    #[test]
    fn zero_trials_is_usage_error() {
        assert_eq!(main_with_args(["affine-strand", "verify", "--trials", "0"]), EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(main_with_args(["affine-strand", "--help"]), EXIT_OK);
    }
}
