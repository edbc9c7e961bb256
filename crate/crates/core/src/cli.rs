//! Command-line front end. Exit codes: 0 success, 1 runtime or check
//! failure, 2 configuration or usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::detect_sign_change;
use crate::config::{preset, preset_text, Format, RunConfig, ScheduleConfig, PRESET_NAMES};
use crate::error::{Error, Result};
use crate::integrator::{integrate, Trajectory};
use crate::model::{rhs_polar, ModelParams};
use crate::output::{write_atomic, write_json, write_trajectory};
use crate::scenarios::{
    analyze_conveyor, analyze_persistent_current, analyze_small_amplitude, critical_imbalance_analytic,
    critical_imbalance_simulated, linearized_resonance_measured, resonance_report, run_statistics, threshold_report,
    CurrentProbe, ScanReport,
};
use crate::validate::{run_suite_with, PolarRhs, SuiteOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ringbec", version, about = "BEC tunnelling on a ring of potential wells")]
pub struct Cli {
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Trajectory format; overrides `output.format`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Suppress the summary on stdout.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Jsonl => Format::Jsonl,
        }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// TOML configuration file.
    pub config: Option<PathBuf>,
    /// Built-in scenario instead of a file.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
    pub preset: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one configuration and write trajectory, report and config.
    Simulate {
        #[command(flatten)]
        source: Source,
    },
    /// Analytic and simulated self-trapping thresholds.
    ScanThreshold {
        #[command(flatten)]
        source: Source,
        /// Interaction strengths to scan; defaults to the configured one.
        #[arg(long, num_args = 1..)]
        lambda: Vec<f64>,
    },
    /// Measured linear resonance against the closed form.
    Resonance {
        #[command(flatten)]
        source: Source,
        /// Overrides `analysis.lambdas`.
        #[arg(long, num_args = 1..)]
        lambda: Vec<f64>,
    },
    /// Conveyor run with per-transfer fidelities.
    Conveyor {
        #[command(flatten)]
        source: Source,
    },
    /// Invariant suite; exits 1 when any check fails.
    Validate {
        #[arg(long, default_value_t = SuiteOptions::default().horizon)]
        horizon: f64,
        #[arg(long, default_value_t = SuiteOptions::default().random_states)]
        states: usize,
        #[arg(long, default_value_t = SuiteOptions::default().seed)]
        seed: u64,
    },
    /// Print a built-in configuration.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        name: String,
    },
}

/// Report written by `simulate` and `conveyor`.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub software: String,
    pub config_sha256: String,
    pub run: ScanReport,
    pub scenario: Option<ScanReport>,
    pub warnings: Vec<String>,
}

struct Context<'a> {
    out_dir: &'a Path,
    format: Option<Format>,
    quiet: bool,
}

impl Context<'_> {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn load(source: &Source) -> Result<RunConfig> {
    match (&source.config, &source.preset) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
            RunConfig::parse(&text).map_err(|e| match e {
                Error::Config { location, message } => {
                    Error::config(format!("{}: {location}", path.display()), message)
                }
                other => other,
            })
        }
        (None, Some(name)) => preset(name),
        (None, None) => Err(Error::config("command line", "a config file or --preset is required")),
    }
}

fn scenario_report(config: &RunConfig, traj: &Trajectory, params: &ModelParams) -> Result<ScanReport> {
    match &config.schedule {
        ScheduleConfig::Constant { .. } => {
            let diff: Vec<f64> = traj
                .samples
                .iter()
                .map(|s| s.observables.populations[0] - s.observables.populations[1])
                .collect();
            let mut r = ScanReport::new("self-trapping");
            match detect_sign_change(&diff, &traj.times()) {
                Some(t) => {
                    r.measure("first_flip", t, "1/omega_R", "first zero of N_1 - N_2");
                    r.label("sign_persists", "no");
                }
                None => {
                    r.label("sign_persists", "yes");
                }
            }
            Ok(r)
        }
        ScheduleConfig::Resonant { omega, t_stop, .. } => {
            let tau = t_stop.filter(|t| t.is_finite());
            Ok(analyze_small_amplitude(traj, omega.expect("materialized"), tau)?.report(params))
        }
        ScheduleConfig::Cut { link, t_cut, .. } => {
            let probe = CurrentProbe::Cut {
                link: link.expect("materialized") - 1,
                t_cut: t_cut.expect("materialized"),
            };
            Ok(analyze_persistent_current(traj, probe)?.report(params))
        }
        ScheduleConfig::Bottleneck { link, factor, .. } => {
            let probe = CurrentProbe::Bottleneck {
                link: link.expect("materialized") - 1,
                factor: *factor,
            };
            Ok(analyze_persistent_current(traj, probe)?.report(params))
        }
        ScheduleConfig::Conveyor { .. } => {
            Ok(analyze_conveyor(traj, config.analysis.hold.expect("materialized"))?.report(params))
        }
    }
}

fn simulate(ctx: &Context, source: &Source, require_conveyor: bool) -> Result<()> {
    let mut config = load(source)?;
    if require_conveyor && !matches!(config.schedule, ScheduleConfig::Conveyor { .. }) {
        return Err(Error::config(
            "schedule.name",
            "the conveyor command needs a conveyor schedule",
        ));
    }
    if let Some(f) = ctx.format {
        config.output.format = Some(f);
    }
    let config = config.materialize()?;
    let built = config.build()?;
    let mut warnings = Vec::new();
    if built.params.low_atom_warning() {
        let w = format!(
            "fewer than {} atoms per well; the coherent description is doubtful",
            crate::model::MIN_COHERENT_ATOMS
        );
        log::warn!("{w}");
        warnings.push(w);
    }
    let traj = integrate(&built.initial, &built.params, &built.schedule, &built.options)?;
    traj.validate_norm()?;

    let hash = config.hash()?;
    let scenario = match scenario_report(&config, &traj, &built.params) {
        Ok(r) => Some(r),
        Err(e) => {
            let w = format!("scenario analysis skipped: {e}");
            log::warn!("{w}");
            warnings.push(w);
            None
        }
    };
    let report = SimulationReport {
        software: traj.metadata.software.clone(),
        config_sha256: hash.clone(),
        run: run_statistics(&traj),
        scenario,
        warnings,
    };

    fs::create_dir_all(ctx.out_dir).map_err(|e| Error::io(ctx.out_dir, e))?;
    let format = config.output.format.expect("materialized");
    let traj_path = ctx.path(config.output.trajectory.as_deref().expect("materialized"));
    write_trajectory(&traj, &traj_path, format, &hash)?;
    let report_path = ctx.path(config.output.report.as_deref().expect("materialized"));
    write_json(&report, &report_path)?;
    let config_path = ctx.path(config.output.config.as_deref().expect("materialized"));
    write_atomic(&config_path, config.canonical_text()?.as_bytes())?;

    ctx.say(format!(
        "{}: {} samples, norm drift {:.2e}, {} accepted steps",
        config.name.as_deref().unwrap_or("run"),
        traj.len(),
        traj.stats.max_norm_drift,
        traj.stats.accepted_steps
    ));
    if let Some(s) = &report.scenario {
        for m in &s.measurements {
            ctx.say(format!("  {} = {} {}", m.name, m.value, m.unit));
        }
        for (k, v) in &s.labels {
            ctx.say(format!("  {k}: {v}"));
        }
    }
    ctx.say(format!(
        "wrote {}, {}, {}",
        traj_path.display(),
        report_path.display(),
        config_path.display()
    ));
    Ok(())
}

fn scan_threshold(ctx: &Context, source: &Source, lambdas: &[f64]) -> Result<()> {
    let config = load(source)?.materialize()?;
    let base = config.model_params()?;
    let options = config.threshold_options()?;
    let lambdas = if lambdas.is_empty() {
        vec![base.lambda()]
    } else {
        lambdas.to_vec()
    };
    let mut reports = Vec::new();
    for &lambda in &lambdas {
        let params = base.with_lambda(lambda)?;
        let analytic = critical_imbalance_analytic(lambda, params.total_atoms())?;
        let simulated = critical_imbalance_simulated(&params, &options)?;
        let r = threshold_report(&params, &analytic, &simulated);
        ctx.say(format!(
            "Lambda = {lambda}: analytic {:.1} / {:.1}, simulated {} / {}",
            analytic.upper,
            analytic.lower,
            fmt_opt(simulated.confined.value()),
            fmt_opt(simulated.depleted.value())
        ));
        reports.push(r);
    }
    fs::create_dir_all(ctx.out_dir).map_err(|e| Error::io(ctx.out_dir, e))?;
    let path = ctx.path("thresholds.json");
    write_json(&reports, &path)?;
    ctx.say(format!("wrote {}", path.display()));
    Ok(())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_owned(), |v| format!("{v:.1}"))
}

fn resonance(ctx: &Context, source: &Source, lambdas: &[f64]) -> Result<()> {
    let config = load(source)?.materialize()?;
    let base = config.model_params()?;
    let (configured, options) = config.resonance_options()?;
    let lambdas = if lambdas.is_empty() {
        configured
    } else {
        lambdas.to_vec()
    };
    let mut results = Vec::new();
    for &lambda in &lambdas {
        let m = linearized_resonance_measured(&base.with_lambda(lambda)?, &options)?;
        ctx.say(format!(
            "Lambda = {lambda}: measured {:.4} omega_R, formula {}",
            m.measured,
            m.formula
                .map_or_else(|| "n/a".to_owned(), |f| format!("{f:.4} omega_R"))
        ));
        results.push(m);
    }
    let report = resonance_report(&base, &results);
    fs::create_dir_all(ctx.out_dir).map_err(|e| Error::io(ctx.out_dir, e))?;
    let path = ctx.path("resonance.json");
    write_json(&report, &path)?;
    ctx.say(format!("wrote {}", path.display()));
    Ok(())
}

fn validate(ctx: &Context, polar: PolarRhs, options: &SuiteOptions) -> Result<bool> {
    let checks = run_suite_with(polar, options);
    for c in &checks {
        let line = format!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        if c.passed {
            ctx.say(line);
        } else {
            eprintln!("{line}");
        }
    }
    fs::create_dir_all(ctx.out_dir).map_err(|e| Error::io(ctx.out_dir, e))?;
    write_json(&checks, &ctx.path("validation.json"))?;
    Ok(checks.iter().all(|c| c.passed))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, rhs_polar)
}

/// [`run`] with `polar` standing in for the polar right-hand side in `validate`.
pub fn run_with<I, T>(args: I, polar: PolarRhs) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let ctx = Context {
        out_dir: &cli.out_dir,
        format: cli.format.map(Format::from),
        quiet: cli.quiet,
    };
    let outcome = match &cli.command {
        Command::Simulate { source } => simulate(&ctx, source, false).map(|_| true),
        Command::Conveyor { source } => simulate(&ctx, source, true).map(|_| true),
        Command::ScanThreshold { source, lambda } => scan_threshold(&ctx, source, lambda).map(|_| true),
        Command::Resonance { source, lambda } => resonance(&ctx, source, lambda).map(|_| true),
        Command::Validate { horizon, states, seed } => validate(
            &ctx,
            polar,
            &SuiteOptions {
                horizon: *horizon,
                random_states: *states,
                seed: *seed,
            },
        ),
        Command::Preset { name } => preset_text(name).map(|t| {
            print!("{t}");
            true
        }),
    };
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_FAILURE
            }
        }
    }
}
