//! Run configuration: TOML parsing, default materialization, hashing, and
//! conversion into runtime objects.
//!
//! Well and link indices in configuration files count from 1. Link `k`
//! joins wells `k` and `k + 1` (link `n` closes the ring).

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::drives::{resonance_frequency, ConveyorMode, CouplingSchedule, Direction};
use crate::error::{Error, Result};
use crate::integrator::{IntegratorOptions, Method, DEFAULT_TOLERANCE, INITIAL_NORM_TOLERANCE};
use crate::model::{Interaction, ModelParams, RingState};
use crate::scenarios::{ResonanceOptions, ThresholdScanOptions, DEFAULT_K_HIGH_FACTOR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Label carried into reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub params: ParamsConfig,
    pub initial: InitialConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_wells: Option<usize>,
    pub total_atoms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    /// Per-well energy offsets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// `uniform`, `winding(m)`, `single-well(f)` or `seed-imbalance(e)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub populations: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Constant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<f64>,
    },
    Resonant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth: Option<f64>,
        /// Units of `omega_R`; defaults to the closed-form resonance.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<f64>,
        /// `inf` keeps driving.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_stop: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_after: Option<f64>,
    },
    Cut {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        link: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_cut: Option<f64>,
    },
    Bottleneck {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        link: Option<usize>,
        factor: f64,
    },
    Conveyor {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_low: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_high: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start_well: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<DirectionConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_turns: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<ConveyorModeConfig>,
        /// Feedback arming threshold, fraction of `N_T` per `1/omega_R`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        floor: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        timeout: Option<f64>,
        /// Open-loop transfer durations, reused cyclically.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        durations: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionConfig {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConveyorModeConfig {
    Feedback,
    OpenLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodConfig {
    DormandPrince,
    Rk4,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    /// Fixed step for `rk4`, `1/omega_R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Run length, `1/omega_R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Paths are relative to the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    /// Where the materialized configuration is written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Self-trapping sign-persistence horizon, `1/omega_R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Threshold bracket width, fraction of `N_T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Nonlinearities probed by the resonance measurement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonance_duration: Option<f64>,
    /// Conveyor retention window after the last transfer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hold: Option<f64>,
}

/// Parsed initial-state preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Uniform,
    Winding(i64),
    SingleWell(f64),
    SeedImbalance(f64),
}

impl Preset {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::config("initial.preset", format!("{msg}: `{text}`"));
        let t = text.trim();
        if t == "uniform" {
            return Ok(Preset::Uniform);
        }
        let (head, rest) = t.split_once('(').ok_or_else(|| bad("unknown preset"))?;
        let arg = rest
            .strip_suffix(')')
            .ok_or_else(|| bad("missing closing parenthesis"))?
            .trim();
        match head.trim() {
            "winding" => arg
                .parse::<i64>()
                .map(Preset::Winding)
                .map_err(|_| bad("winding number must be an integer")),
            "single-well" => {
                let f: f64 = arg.parse().map_err(|_| bad("malformed number"))?;
                if !(0.0..=1.0).contains(&f) {
                    return Err(bad("fraction must lie in [0, 1]"));
                }
                Ok(Preset::SingleWell(f))
            }
            "seed-imbalance" => {
                let e: f64 = arg.parse().map_err(|_| bad("malformed number"))?;
                if !(e.abs() < 0.5) {
                    return Err(bad("imbalance must be small"));
                }
                Ok(Preset::SeedImbalance(e))
            }
            _ => Err(bad("unknown preset")),
        }
    }

    pub fn canonical(&self) -> String {
        match self {
            Preset::Uniform => "uniform".into(),
            Preset::Winding(m) => format!("winding({m})"),
            Preset::SingleWell(f) => format!("single-well({f})"),
            Preset::SeedImbalance(e) => format!("seed-imbalance({e})"),
        }
    }

    /// Populations and phases for `n` wells holding `total` atoms.
    pub fn polar(&self, n: usize, total: f64) -> (Vec<f64>, Vec<f64>) {
        let mean = total / n as f64;
        match *self {
            Preset::Uniform => (vec![mean; n], vec![0.0; n]),
            Preset::Winding(m) => (
                vec![mean; n],
                (0..n)
                    .map(|i| 2.0 * PI * m as f64 * (i + 1) as f64 / n as f64)
                    .collect(),
            ),
            Preset::SingleWell(f) => {
                let mut pops = vec![(1.0 - f) * total / (n - 1) as f64; n];
                pops[0] = f * total;
                (pops, vec![0.0; n])
            }
            Preset::SeedImbalance(e) => {
                let mut pops = vec![mean - e * total / (n - 1) as f64; n];
                pops[0] = mean + e * total;
                (pops, vec![0.0; n])
            }
        }
    }
}

/// Runtime objects described by a configuration.
#[derive(Debug, Clone)]
pub struct Built {
    pub params: ModelParams,
    pub initial: RingState,
    pub schedule: CouplingSchedule,
    pub options: IntegratorOptions,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, col)
}

fn positive(field: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::config(field, format!("must be a positive number, got {value}")))
    }
}

fn non_negative(field: &str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::config(
            field,
            format!("must be a finite number >= 0, got {value}"),
        ))
    }
}

fn link_index(field: &str, link: usize, n: usize) -> Result<usize> {
    if (1..=n).contains(&link) {
        Ok(link - 1)
    } else {
        Err(Error::config(field, format!("must lie in 1..={n}, got {link}")))
    }
}

pub const DEFAULT_K_TILDE: f64 = 0.5;
pub const DEFAULT_SAMPLE_INTERVAL: f64 = 0.01;
pub const DEFAULT_DURATION: f64 = 10.0;
pub const DEFAULT_RK4_DT: f64 = 1e-3;

impl RunConfig {
    /// Parses and validates configuration text. Errors carry a line and
    /// column for syntax problems or the dotted field path otherwise.
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let (line, col) = line_col(text, span.start);
                    format!("line {line}, column {col}")
                }
                None => "document".to_owned(),
            };
            Error::config(location, e.message().trim().to_owned())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn n_wells(&self) -> usize {
        self.params.n_wells.unwrap_or(4)
    }

    fn validate(&self) -> Result<()> {
        let p = &self.params;
        let n = self.n_wells();
        if n < 3 {
            return Err(Error::config(
                "params.n_wells",
                format!("need at least 3 wells, got {n}"),
            ));
        }
        positive("params.total_atoms", p.total_atoms)?;
        positive("params.k_tilde", p.k_tilde.unwrap_or(DEFAULT_K_TILDE))?;
        match (p.lambda, p.u) {
            (Some(lambda), Some(u)) => {
                let implied = u * p.total_atoms / (2.0 * p.k_tilde.unwrap_or(DEFAULT_K_TILDE));
                return Err(Error::config(
                    "params.lambda, params.u",
                    format!(
                        "conflicting `lambda` = {lambda} and `u` = {u} (u implies lambda = {implied}); specify exactly one"
                    ),
                ));
            }
            (None, None) => {
                return Err(Error::config("params", "missing `lambda` or `u`"));
            }
            (Some(l), None) => {
                non_negative("params.lambda", l)?;
            }
            (None, Some(u)) => {
                non_negative("params.u", u)?;
            }
        }
        if let Some(e0) = &p.e0 {
            if e0.len() != n {
                return Err(Error::config(
                    "params.e0",
                    format!("expected {n} entries, got {}", e0.len()),
                ));
            }
        }

        let init = &self.initial;
        match (&init.preset, &init.populations) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "initial.preset, initial.populations",
                    "give either a preset or explicit populations, not both",
                ))
            }
            (None, None) => return Err(Error::config("initial", "missing `preset` or `populations`")),
            (Some(preset), None) => {
                Preset::parse(preset)?;
                if init.phases.is_some() {
                    return Err(Error::config("initial.phases", "phases are fixed by the preset"));
                }
            }
            (None, Some(pops)) => {
                if pops.len() != n {
                    return Err(Error::config(
                        "initial.populations",
                        format!("expected {n} entries, got {}", pops.len()),
                    ));
                }
                if pops.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                    return Err(Error::config(
                        "initial.populations",
                        "populations must be finite and >= 0",
                    ));
                }
                let sum: f64 = pops.iter().sum();
                if (sum - p.total_atoms).abs() > INITIAL_NORM_TOLERANCE * p.total_atoms {
                    return Err(Error::config(
                        "initial.populations",
                        format!("sum {sum} differs from total_atoms = {}", p.total_atoms),
                    ));
                }
                if let Some(ph) = &init.phases {
                    if ph.len() != n {
                        return Err(Error::config(
                            "initial.phases",
                            format!("expected {n} entries, got {}", ph.len()),
                        ));
                    }
                }
            }
        }

        match &self.schedule {
            ScheduleConfig::Constant { k } => {
                if let Some(k) = k {
                    non_negative("schedule.k", *k)?;
                }
            }
            ScheduleConfig::Resonant {
                depth, t_stop, k_after, ..
            } => {
                if let Some(d) = depth {
                    if !(0.0..=1.0).contains(d) {
                        return Err(Error::config("schedule.depth", format!("must lie in [0, 1], got {d}")));
                    }
                }
                if let Some(t) = t_stop {
                    if !(*t >= 0.0) {
                        return Err(Error::config("schedule.t_stop", "must be >= 0 or inf"));
                    }
                }
                if let Some(k) = k_after {
                    non_negative("schedule.k_after", *k)?;
                }
            }
            ScheduleConfig::Cut { k, link, t_cut } => {
                if let Some(k) = k {
                    non_negative("schedule.k", *k)?;
                }
                if let Some(l) = link {
                    link_index("schedule.link", *l, n)?;
                }
                if let Some(t) = t_cut {
                    if t.is_nan() {
                        return Err(Error::config("schedule.t_cut", "must be a number or inf"));
                    }
                }
            }
            ScheduleConfig::Bottleneck { k, link, factor } => {
                if let Some(k) = k {
                    non_negative("schedule.k", *k)?;
                }
                if let Some(l) = link {
                    link_index("schedule.link", *l, n)?;
                }
                positive("schedule.factor", *factor)?;
            }
            ScheduleConfig::Conveyor {
                k_low,
                k_high,
                start_well,
                mode,
                floor,
                timeout,
                durations,
                ..
            } => {
                if let Some(s) = start_well {
                    link_index("schedule.start_well", *s, n)?;
                }
                let k = p.k_tilde.unwrap_or(DEFAULT_K_TILDE);
                let lo = non_negative("schedule.k_low", k_low.unwrap_or(k))?;
                let hi = non_negative("schedule.k_high", k_high.unwrap_or(DEFAULT_K_HIGH_FACTOR * k))?;
                if hi < lo {
                    return Err(Error::config("schedule.k_high", "must be >= k_low"));
                }
                if let Some(f) = floor {
                    positive("schedule.floor", *f)?;
                }
                if let Some(t) = timeout {
                    positive("schedule.timeout", *t)?;
                }
                let open_loop = *mode == Some(ConveyorModeConfig::OpenLoop);
                match durations {
                    Some(d) if !open_loop => {
                        if !d.is_empty() {
                            return Err(Error::config(
                                "schedule.durations",
                                "only used with mode = \"open-loop\"",
                            ));
                        }
                    }
                    Some(d) => {
                        if d.is_empty() {
                            return Err(Error::config("schedule.durations", "open-loop mode needs durations"));
                        }
                        for x in d {
                            positive("schedule.durations", *x)?;
                        }
                    }
                    None if open_loop => {
                        return Err(Error::config("schedule.durations", "open-loop mode needs durations"));
                    }
                    None => {}
                }
            }
        }

        let i = &self.integrator;
        let method = i.method.unwrap_or(MethodConfig::DormandPrince);
        match method {
            MethodConfig::DormandPrince => {
                if i.dt.is_some() {
                    return Err(Error::config("integrator.dt", "only used with method = \"rk4\""));
                }
                for (field, tol) in [("integrator.abs_tol", i.abs_tol), ("integrator.rel_tol", i.rel_tol)] {
                    if let Some(t) = tol {
                        if !(t > 0.0 && t < 1e-2) {
                            return Err(Error::config(field, format!("must lie in (0, 1e-2), got {t}")));
                        }
                    }
                }
            }
            MethodConfig::Rk4 => {
                if i.abs_tol.is_some() || i.rel_tol.is_some() {
                    return Err(Error::config(
                        "integrator.abs_tol",
                        "tolerances only apply to dormand-prince",
                    ));
                }
                if let Some(dt) = i.dt {
                    positive("integrator.dt", dt)?;
                }
            }
        }
        if let Some(d) = i.duration {
            non_negative("integrator.duration", d)?;
        }
        if let Some(s) = self.output.sample_interval {
            positive("output.sample_interval", s)?;
        }

        let a = &self.analysis;
        if let Some(h) = a.horizon {
            if !(h >= 10.0) {
                return Err(Error::config("analysis.horizon", format!("must be >= 10, got {h}")));
            }
        }
        if let Some(r) = a.resolution {
            if !(r > 0.0 && r < 0.5) {
                return Err(Error::config("analysis.resolution", "must lie in (0, 0.5)"));
            }
        }
        if let Some(g) = a.grid {
            if g < 2 {
                return Err(Error::config("analysis.grid", "need at least 2 points"));
            }
        }
        if let Some(ls) = &a.lambdas {
            for l in ls {
                non_negative("analysis.lambdas", *l)?;
            }
        }
        if let Some(x) = a.perturbation {
            positive("analysis.perturbation", x)?;
        }
        if let Some(x) = a.resonance_duration {
            positive("analysis.resonance_duration", x)?;
        }
        if let Some(x) = a.hold {
            non_negative("analysis.hold", x)?;
        }
        Ok(())
    }

    /// Same configuration with every default written out.
    pub fn materialize(&self) -> Result<Self> {
        self.validate()?;
        let n = self.n_wells();
        let k_tilde = self.params.k_tilde.unwrap_or(DEFAULT_K_TILDE);
        let mut c = self.clone();
        c.name = Some(self.name.clone().unwrap_or_else(|| "run".into()));
        c.params.n_wells = Some(n);
        c.params.k_tilde = Some(k_tilde);
        c.params.e0 = Some(self.params.e0.clone().unwrap_or_else(|| vec![0.0; n]));

        match (&self.initial.preset, &self.initial.populations) {
            (Some(p), _) => c.initial.preset = Some(Preset::parse(p)?.canonical()),
            (None, Some(_)) => c.initial.phases = Some(self.initial.phases.clone().unwrap_or_else(|| vec![0.0; n])),
            (None, None) => unreachable!("validated"),
        }

        let params = self.model_params()?;
        c.schedule = match &self.schedule {
            ScheduleConfig::Constant { k } => ScheduleConfig::Constant {
                k: Some(k.unwrap_or(k_tilde)),
            },
            ScheduleConfig::Resonant {
                depth,
                omega,
                phi,
                t_stop,
                k_after,
            } => ScheduleConfig::Resonant {
                depth: Some(depth.unwrap_or(1.0)),
                omega: Some(match omega {
                    Some(w) => *w,
                    None => resonance_frequency(&params)
                        .map_err(|e| Error::config("schedule.omega", format!("no default: {e}")))?,
                }),
                phi: Some(phi.unwrap_or(0.0)),
                t_stop: Some(t_stop.unwrap_or(f64::INFINITY)),
                k_after: Some(k_after.unwrap_or(k_tilde)),
            },
            ScheduleConfig::Cut { k, link, t_cut } => ScheduleConfig::Cut {
                k: Some(k.unwrap_or(k_tilde)),
                link: Some(link.unwrap_or(n)),
                t_cut: Some(t_cut.unwrap_or(0.5)),
            },
            ScheduleConfig::Bottleneck { k, link, factor } => ScheduleConfig::Bottleneck {
                k: Some(k.unwrap_or(k_tilde)),
                link: Some(link.unwrap_or(1)),
                factor: *factor,
            },
            ScheduleConfig::Conveyor {
                k_low,
                k_high,
                start_well,
                direction,
                n_turns,
                mode,
                floor,
                timeout,
                durations,
            } => {
                let mode = mode.unwrap_or(ConveyorModeConfig::Feedback);
                let (floor, timeout, durations) = match mode {
                    ConveyorModeConfig::Feedback => {
                        let ConveyorMode::Feedback { floor: f0, timeout: t0 } = ConveyorMode::feedback() else {
                            unreachable!()
                        };
                        (Some(floor.unwrap_or(f0)), Some(timeout.unwrap_or(t0)), None)
                    }
                    ConveyorModeConfig::OpenLoop => (None, None, durations.clone()),
                };
                ScheduleConfig::Conveyor {
                    k_low: Some(k_low.unwrap_or(k_tilde)),
                    k_high: Some(k_high.unwrap_or(DEFAULT_K_HIGH_FACTOR * k_tilde)),
                    start_well: Some(start_well.unwrap_or(1)),
                    direction: Some(direction.unwrap_or(DirectionConfig::Forward)),
                    n_turns: Some(n_turns.unwrap_or(2)),
                    mode: Some(mode),
                    floor,
                    timeout,
                    durations,
                }
            }
        };

        let method = self.integrator.method.unwrap_or(MethodConfig::DormandPrince);
        c.integrator = IntegratorConfig {
            method: Some(method),
            abs_tol: (method == MethodConfig::DormandPrince)
                .then(|| self.integrator.abs_tol.unwrap_or(DEFAULT_TOLERANCE)),
            rel_tol: (method == MethodConfig::DormandPrince)
                .then(|| self.integrator.rel_tol.unwrap_or(DEFAULT_TOLERANCE)),
            dt: (method == MethodConfig::Rk4).then(|| self.integrator.dt.unwrap_or(DEFAULT_RK4_DT)),
            duration: Some(self.integrator.duration.unwrap_or(DEFAULT_DURATION)),
        };

        let format = self.output.format.unwrap_or(Format::Csv);
        c.output = OutputConfig {
            sample_interval: Some(self.output.sample_interval.unwrap_or(DEFAULT_SAMPLE_INTERVAL)),
            format: Some(format),
            trajectory: Some(
                self.output
                    .trajectory
                    .clone()
                    .unwrap_or_else(|| format!("trajectory.{}", format.extension())),
            ),
            report: Some(self.output.report.clone().unwrap_or_else(|| "report.json".into())),
            config: Some(self.output.config.clone().unwrap_or_else(|| "config.toml".into())),
        };

        let scan = ThresholdScanOptions::default();
        let res = ResonanceOptions::default();
        c.analysis = AnalysisConfig {
            horizon: Some(self.analysis.horizon.unwrap_or(scan.horizon)),
            resolution: Some(self.analysis.resolution.unwrap_or(scan.resolution)),
            grid: Some(self.analysis.grid.unwrap_or(scan.grid)),
            lambdas: Some(self.analysis.lambdas.clone().unwrap_or_else(|| vec![params.lambda()])),
            perturbation: Some(self.analysis.perturbation.unwrap_or(res.perturbation)),
            resonance_duration: Some(self.analysis.resonance_duration.unwrap_or(res.duration)),
            hold: Some(self.analysis.hold.unwrap_or(20.0)),
        };
        Ok(c)
    }

    /// Canonical TOML text of the materialized configuration.
    pub fn canonical_text(&self) -> Result<String> {
        let m = self.materialize()?;
        toml::to_string(&m).map_err(|e| Error::config("document", format!("cannot serialize: {e}")))
    }

    /// Hex SHA-256 of [`RunConfig::canonical_text`].
    pub fn hash(&self) -> Result<String> {
        let text = self.canonical_text()?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let p = &self.params;
        let n = self.n_wells();
        let interaction = match (p.lambda, p.u) {
            (Some(l), None) => Interaction::Lambda(l),
            (None, Some(u)) => Interaction::U(u),
            _ => return Err(Error::config("params.lambda, params.u", "specify exactly one")),
        };
        ModelParams::with_offsets(
            n,
            p.total_atoms,
            p.k_tilde.unwrap_or(DEFAULT_K_TILDE),
            interaction,
            p.e0.clone().unwrap_or_else(|| vec![0.0; n]),
        )
    }

    /// Builds the runtime objects from the materialized configuration.
    pub fn build(&self) -> Result<Built> {
        let m = self.materialize()?;
        let params = m.model_params()?;
        let n = params.n_wells();
        let total = params.total_atoms();

        let (pops, phases) = match (&m.initial.preset, &m.initial.populations) {
            (Some(preset), _) => Preset::parse(preset)?.polar(n, total),
            (None, Some(pops)) => (pops.clone(), m.initial.phases.clone().unwrap_or_else(|| vec![0.0; n])),
            (None, None) => unreachable!("validated"),
        };
        let initial = RingState::from_polar(&pops, &phases, 0.0)?;

        let schedule = match &m.schedule {
            ScheduleConfig::Constant { k } => CouplingSchedule::constant(n, k.unwrap())?,
            ScheduleConfig::Resonant {
                depth,
                omega,
                phi,
                t_stop,
                k_after,
            } => {
                let s = CouplingSchedule::resonant(&params, depth.unwrap(), omega.unwrap(), phi.unwrap())?;
                let t_stop = t_stop.unwrap();
                if t_stop.is_finite() {
                    s.stop_at(t_stop, k_after.unwrap())?
                } else {
                    s
                }
            }
            ScheduleConfig::Cut { k, link, t_cut } => {
                CouplingSchedule::constant(n, k.unwrap())?.cut_link(link.unwrap() - 1, t_cut.unwrap())?
            }
            ScheduleConfig::Bottleneck { k, link, factor } => {
                CouplingSchedule::constant(n, k.unwrap())?.bottleneck(link.unwrap() - 1, *factor)?
            }
            ScheduleConfig::Conveyor {
                k_low,
                k_high,
                start_well,
                direction,
                n_turns,
                mode,
                floor,
                timeout,
                durations,
            } => {
                let mode = match mode.unwrap() {
                    ConveyorModeConfig::Feedback => ConveyorMode::Feedback {
                        floor: floor.unwrap(),
                        timeout: timeout.unwrap(),
                    },
                    ConveyorModeConfig::OpenLoop => ConveyorMode::OpenLoop {
                        durations: durations.clone().unwrap_or_default(),
                    },
                };
                CouplingSchedule::conveyor(
                    n,
                    k_low.unwrap(),
                    k_high.unwrap(),
                    start_well.unwrap() - 1,
                    match direction.unwrap() {
                        DirectionConfig::Forward => Direction::Forward,
                        DirectionConfig::Backward => Direction::Backward,
                    },
                    n_turns.unwrap(),
                    mode,
                )?
            }
        };

        let i = &m.integrator;
        let method = match i.method.unwrap() {
            MethodConfig::DormandPrince => Method::DormandPrince {
                abs_tol: i.abs_tol.unwrap(),
                rel_tol: i.rel_tol.unwrap(),
            },
            MethodConfig::Rk4 => Method::Rk4 { dt: i.dt.unwrap() },
        };
        let options = IntegratorOptions {
            method,
            sample_interval: m.output.sample_interval.unwrap(),
            max_time: i.duration.unwrap(),
        };
        options.validate()?;
        Ok(Built {
            params,
            initial,
            schedule,
            options,
        })
    }

    /// Threshold-scan settings from the analysis block.
    pub fn threshold_options(&self) -> Result<ThresholdScanOptions> {
        let a = self.materialize()?.analysis;
        Ok(ThresholdScanOptions {
            horizon: a.horizon.unwrap(),
            resolution: a.resolution.unwrap(),
            grid: a.grid.unwrap(),
            ..ThresholdScanOptions::default()
        })
    }

    pub fn resonance_options(&self) -> Result<(Vec<f64>, ResonanceOptions)> {
        let m = self.materialize()?;
        let a = m.analysis;
        Ok((
            a.lambdas.unwrap(),
            ResonanceOptions {
                perturbation: a.perturbation.unwrap(),
                duration: a.resonance_duration.unwrap(),
                sample_interval: m.output.sample_interval.unwrap(),
            },
        ))
    }
}

pub const PRESET_NAMES: [&str; 7] = ["fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "fig5"];

/// Built-in scenario configurations.
pub fn preset(name: &str) -> Result<RunConfig> {
    let base = |lambda: f64, initial: &str, schedule: ScheduleConfig, duration: f64| RunConfig {
        name: Some(name.to_owned()),
        params: ParamsConfig {
            n_wells: Some(4),
            total_atoms: 1e5,
            k_tilde: Some(DEFAULT_K_TILDE),
            lambda: Some(lambda),
            u: None,
            e0: None,
        },
        initial: InitialConfig {
            preset: Some(initial.to_owned()),
            ..InitialConfig::default()
        },
        schedule,
        integrator: IntegratorConfig {
            duration: Some(duration),
            ..IntegratorConfig::default()
        },
        output: OutputConfig::default(),
        analysis: AnalysisConfig::default(),
    };
    let resonant = |t_stop: f64| ScheduleConfig::Resonant {
        depth: Some(1.0),
        omega: None,
        phi: Some(0.0),
        t_stop: Some(t_stop),
        k_after: None,
    };
    let constant = ScheduleConfig::Constant { k: None };
    let config = match name {
        "fig2a" => base(500.0, "seed-imbalance(0.001)", resonant(4.0), 12.0),
        "fig2b" => base(500.0, "seed-imbalance(0.001)", resonant(f64::INFINITY), 40.0),
        "fig3a" => base(
            100.0,
            "winding(1)",
            ScheduleConfig::Cut {
                k: None,
                link: Some(4),
                t_cut: Some(0.5),
            },
            5.0,
        ),
        "fig3b" => base(
            100.0,
            "winding(1)",
            ScheduleConfig::Bottleneck {
                k: None,
                link: Some(1),
                factor: 1.2,
            },
            20.0,
        ),
        "fig4a" => base(100.0, "single-well(0.45)", constant, 20.0),
        "fig4b" => base(100.0, "single-well(0.1)", constant, 20.0),
        "fig5" => base(
            100.0,
            "single-well(0.97)",
            ScheduleConfig::Conveyor {
                k_low: None,
                k_high: None,
                start_well: Some(1),
                direction: Some(DirectionConfig::Forward),
                n_turns: Some(2),
                mode: Some(ConveyorModeConfig::Feedback),
                floor: None,
                timeout: None,
                durations: None,
            },
            30.0,
        ),
        other => {
            return Err(Error::config(
                "preset",
                format!("unknown preset `{other}`; known: {}", PRESET_NAMES.join(", ")),
            ))
        }
    };
    Ok(config)
}

/// Materialized text of a built-in preset, with a leading comment.
pub fn preset_text(name: &str) -> Result<String> {
    let text = preset(name)?.canonical_text()?;
    let mut out = String::new();
    let _ = writeln!(out, "# built-in preset {name}; every default written out");
    out.push_str(&text);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[params]
total_atoms = 1e5
lambda = 100

[initial]
preset = "winding(1)"

[schedule]
name = "constant"
"#;

    #[test]
    fn minimal_config_materializes_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        let m = c.materialize().unwrap();
        assert_eq!(m.params.n_wells, Some(4));
        assert_eq!(m.params.k_tilde, Some(0.5));
        assert_eq!(m.schedule, ScheduleConfig::Constant { k: Some(0.5) });
        assert_eq!(m.integrator.abs_tol, Some(DEFAULT_TOLERANCE));
        assert_eq!(m.output.format, Some(Format::Csv));
        // materialization is a fixed point and round-trips through text
        assert_eq!(m.materialize().unwrap(), m);
        let again = RunConfig::parse(&m.canonical_text().unwrap()).unwrap();
        assert_eq!(again, m);
        assert_eq!(c.hash().unwrap(), again.hash().unwrap());
    }

    #[test]
    fn conflicting_interaction_names_both_keys() {
        let text = MINIMAL.replace("lambda = 100", "lambda = 100\nu = 2e-3");
        let err = RunConfig::parse(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("lambda") && msg.contains("`u`"), "{msg}");
        assert!(err.is_config());
    }

    #[test]
    fn unknown_key_is_an_error_with_line() {
        let text = MINIMAL.replace("lambda = 100", "lambda = 100\nlambdaa = 3");
        let msg = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(msg.contains("line 5"), "{msg}");
        assert!(msg.contains("lambdaa"), "{msg}");
        let text = MINIMAL.replace("name = \"constant\"", "name = \"constant\"\nfactor = 2.0");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn malformed_and_missing_values() {
        let text = MINIMAL.replace("total_atoms = 1e5", "total_atoms = \"many\"");
        let msg = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
        let text = MINIMAL.replace("total_atoms = 1e5\n", "");
        assert!(RunConfig::parse(&text).unwrap_err().to_string().contains("total_atoms"));
        let text = MINIMAL.replace("winding(1)", "spiral(2)");
        assert!(RunConfig::parse(&text)
            .unwrap_err()
            .to_string()
            .contains("initial.preset"));
    }

    #[test]
    fn single_well_preset() {
        let text = MINIMAL.replace("winding(1)", "single-well(0.97)");
        let built = RunConfig::parse(&text).unwrap().build().unwrap();
        let pops = built.initial.populations();
        let expected = [97_000.0, 1_000.0, 1_000.0, 1_000.0];
        for (a, b) in pops.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9 * 1e5);
        }
    }

    #[test]
    fn explicit_populations_must_sum_to_total() {
        let text = MINIMAL.replace("preset = \"winding(1)\"", "populations = [40000, 20000, 20000, 10000]");
        assert!(RunConfig::parse(&text).is_err());
        let text = MINIMAL.replace(
            "preset = \"winding(1)\"",
            "populations = [40000, 20000, 20000, 20000]\nphases = [0, 0.1, 0.2, 0.3]",
        );
        let built = RunConfig::parse(&text).unwrap().build().unwrap();
        assert!((built.initial.phases()[3] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn all_presets_build() {
        for name in PRESET_NAMES {
            let c = preset(name).unwrap();
            let built = c.build().unwrap();
            assert_eq!(built.params.n_wells(), 4);
            let text = c.canonical_text().unwrap();
            assert_eq!(RunConfig::parse(&text).unwrap(), c.materialize().unwrap());
        }
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn resonant_default_frequency_needs_four_wells() {
        let text = r#"
[params]
n_wells = 5
total_atoms = 1e5
lambda = 100
[initial]
preset = "uniform"
[schedule]
name = "resonant"
"#;
        let err = RunConfig::parse(text).unwrap().materialize().unwrap_err();
        assert!(err.to_string().contains("schedule.omega"));
    }
}
