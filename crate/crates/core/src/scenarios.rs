//! Experiment runners for the dynamical regimes of the ring and the
//! self-trapping criterion.
//!
//! Every runner builds its initial state and schedule, integrates, and
//! condenses the trajectory into a typed report. Reports convert to a
//! [`ScanReport`], where each number carries the criterion that produced it.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{crosscorr_lag, dominant_frequency, SpectralEstimate, Window};
use crate::drives::{resonance_frequency, ConveyorMode, CouplingSchedule, Direction};
use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorOptions, Trajectory};
use crate::model::{ModelParams, RingState};

/// A measured number together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub unit: String,
    pub criterion: String,
}

/// Flat, serializable summary of a scenario run or scan.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ScanReport {
    pub scenario: String,
    pub inputs: BTreeMap<String, f64>,
    pub measurements: Vec<Measurement>,
    pub labels: BTreeMap<String, String>,
}

impl ScanReport {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self {
            scenario: scenario.into(),
            ..Self::default()
        }
    }

    pub fn input(&mut self, name: &str, value: f64) -> &mut Self {
        self.inputs.insert(name.to_owned(), value);
        self
    }

    pub fn measure(&mut self, name: &str, value: f64, unit: &str, criterion: &str) -> &mut Self {
        self.measurements.push(Measurement {
            name: name.to_owned(),
            value,
            unit: unit.to_owned(),
            criterion: criterion.to_owned(),
        });
        self
    }

    pub fn label(&mut self, name: &str, value: impl Into<String>) -> &mut Self {
        self.labels.insert(name.to_owned(), value.into());
        self
    }

    /// First measurement called `name`.
    pub fn value(&self, name: &str) -> Option<f64> {
        self.measurements.iter().find(|m| m.name == name).map(|m| m.value)
    }

    /// Appends every measurement and label of `other`, prefixing names.
    pub fn merge(&mut self, prefix: &str, other: &ScanReport) -> &mut Self {
        for m in &other.measurements {
            self.measurements.push(Measurement {
                name: format!("{prefix}{}", m.name),
                ..m.clone()
            });
        }
        for (k, v) in &other.labels {
            self.labels.insert(format!("{prefix}{k}"), v.clone());
        }
        self
    }
}

fn params_inputs(report: &mut ScanReport, params: &ModelParams) {
    report
        .input("n_wells", params.n_wells() as f64)
        .input("total_atoms", params.total_atoms())
        .input("k_tilde", params.k_tilde())
        .input("lambda", params.lambda());
}

fn window_indices(times: &[f64], from: f64, to: f64) -> std::ops::Range<usize> {
    let eps = 1e-9 * (1.0 + to.abs());
    let lo = times.partition_point(|&t| t < from - eps);
    let hi = times.partition_point(|&t| t <= to + eps);
    lo..hi.max(lo)
}

fn nearest_index(times: &[f64], t: f64) -> usize {
    let k = times.partition_point(|&s| s < t);
    if k == 0 {
        0
    } else if k >= times.len() {
        times.len() - 1
    } else if (times[k] - t).abs() < (t - times[k - 1]).abs() {
        k
    } else {
        k - 1
    }
}

// ---------------------------------------------------------------------------
// Self-trapping

/// Initial condition of the self-trapping experiment: `n1` atoms in well 1,
/// the rest shared evenly, all phases equal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfTrapInput {
    pub n1: f64,
    pub lambda: f64,
    pub total_atoms: f64,
}

impl SelfTrapInput {
    pub fn new(n1: f64, lambda: f64, total_atoms: f64) -> Result<Self> {
        if !(total_atoms > 0.0) || !total_atoms.is_finite() {
            return Err(Error::param("total_atoms", "must be positive"));
        }
        if !(0.0..=total_atoms).contains(&n1) {
            return Err(Error::param("n1", format!("must lie in [0, {total_atoms}], got {n1}")));
        }
        Ok(Self {
            n1,
            lambda,
            total_atoms,
        })
    }

    /// Population of each of the other wells.
    pub fn adjacent(&self) -> f64 {
        (self.total_atoms - self.n1) / 3.0
    }

    /// `n = (N1 - N_adj) / N_T = (4 N1 / N_T - 1) / 3`.
    pub fn imbalance(&self) -> f64 {
        (self.n1 - self.adjacent()) / self.total_atoms
    }

    pub fn residual(&self) -> Result<f64> {
        selfconfine_residual(self.imbalance(), self.lambda)
    }
}

/// `n` with `tan(3 sqrt(3) / (4 Lambda |n|)) = pi / 2`; the criterion is
/// undefined for smaller `|n|`.
pub fn domain_edge(lambda: f64) -> f64 {
    3.0 * 3f64.sqrt() / (2.0 * PI * lambda)
}

/// `(2 / 3n) tan(-3 sqrt(3) / (4 Lambda n)) + 1`; positive means the well
/// keeps the sign of its imbalance.
pub fn selfconfine_residual(n: f64, lambda: f64) -> Result<f64> {
    if n == 0.0 {
        return Err(Error::ZeroImbalance);
    }
    if !n.is_finite() || !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::param("n", "imbalance and lambda must be finite, lambda >= 0"));
    }
    let argument = 3.0 * 3f64.sqrt() / (4.0 * lambda * n.abs());
    if !(argument < FRAC_PI_2) {
        return Err(Error::OutOfDomain { argument });
    }
    let angle = -3.0 * 3f64.sqrt() / (4.0 * lambda * n);
    Ok(2.0 / (3.0 * n) * angle.tan() + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticThresholds {
    /// Positive root of the residual.
    pub n_star: f64,
    pub upper: f64,
    pub lower: f64,
}

/// Positive root of [`selfconfine_residual`] by bisection to `|dn| < 1e-8`,
/// mapped back to atom numbers.
pub fn critical_imbalance_analytic(lambda: f64, total_atoms: f64) -> Result<AnalyticThresholds> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    if !(total_atoms > 0.0) {
        return Err(Error::param("total_atoms", "must be positive"));
    }
    // residual -> -inf at the domain edge and is positive for large n
    let mut lo = domain_edge(lambda) * (1.0 + 1e-12);
    let mut hi = 1.0;
    if lo >= hi {
        return Err(Error::RootNotFound(format!(
            "criterion undefined for every n <= 1 at lambda = {lambda}"
        )));
    }
    let f_lo = selfconfine_residual(lo, lambda)?;
    let f_hi = selfconfine_residual(hi, lambda)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::RootNotFound(format!(
            "no sign change of the residual on [{lo}, {hi}] at lambda = {lambda}"
        )));
    }
    while hi - lo >= 1e-8 {
        let mid = 0.5 * (lo + hi);
        if selfconfine_residual(mid, lambda)?.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n_star = 0.5 * (lo + hi);
    Ok(AnalyticThresholds {
        n_star,
        upper: total_atoms * (1.0 + 3.0 * n_star) / 4.0,
        lower: total_atoms * (1.0 - 3.0 * n_star) / 4.0,
    })
}

/// Runs the self-trapping initial condition and reports whether
/// `N1 - N2` keeps its sign over `horizon`.
pub fn sign_persists(params: &ModelParams, n1: f64, horizon: f64, sample_interval: f64) -> Result<bool> {
    let state = selftrap_state(params, n1)?;
    let schedule = CouplingSchedule::constant(params.n_wells(), params.k_tilde())?;
    let options = IntegratorOptions::default()
        .with_max_time(horizon)
        .with_sample_interval(sample_interval);
    let traj = integrate(&state, params, &schedule, &options)?;
    let diff: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| s.observables.populations[0] - s.observables.populations[1])
        .collect();
    let sign = diff[0].signum();
    Ok(diff.iter().all(|d| d.signum() == sign && *d != 0.0))
}

/// `n1` atoms in well 1, the rest split evenly, all phases zero.
pub fn selftrap_state(params: &ModelParams, n1: f64) -> Result<RingState> {
    let n = params.n_wells();
    let total = params.total_atoms();
    if !(0.0..=total).contains(&n1) {
        return Err(Error::param("n1", format!("must lie in [0, {total}], got {n1}")));
    }
    let mut pops = vec![(total - n1) / (n - 1) as f64; n];
    pops[0] = n1;
    RingState::from_polar(&pops, &vec![0.0; n], 0.0)
}

/// Outcome of a threshold search on one side of `N_T / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BranchResult {
    /// Monotone classification; the boundary lies in `[lo, hi]`.
    Point {
        value: f64,
        lo: f64,
        hi: f64,
    },
    /// Classification flips more than once; widest bracket holding every flip.
    Bracket {
        lo: f64,
        hi: f64,
    },
    NotFound,
}

impl BranchResult {
    pub fn value(&self) -> Option<f64> {
        match self {
            BranchResult::Point { value, .. } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdScanOptions {
    /// Sign-persistence horizon, `1/omega_R`.
    pub horizon: f64,
    /// Target bracket width as a fraction of `N_T`.
    pub resolution: f64,
    /// Coarse grid points per branch.
    pub grid: usize,
    pub sample_interval: f64,
}

impl Default for ThresholdScanOptions {
    fn default() -> Self {
        Self {
            horizon: 20.0,
            resolution: 0.005,
            grid: 24,
            sample_interval: 0.005,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulatedThresholds {
    /// Smallest `N1` that stays self-confined.
    pub confined: BranchResult,
    /// Largest `N1` that stays self-depleted.
    pub depleted: BranchResult,
    pub options: ThresholdScanOptions,
    pub evaluations: usize,
}

/// Locates the flip of a classification along ascending `points`, refining
/// a single flip by parallel k-section until the bracket is narrower than
/// `width`. `inside` is the regime that holds above the flip.
fn locate_flip<F>(points: Vec<f64>, width: f64, classify: &F, evaluations: &mut usize) -> Result<BranchResult>
where
    F: Fn(f64) -> Result<bool> + Sync,
{
    let labels: Vec<bool> = points.par_iter().map(|&x| classify(x)).collect::<Result<_>>()?;
    *evaluations += points.len();
    let flips: Vec<usize> = (0..labels.len() - 1).filter(|&k| labels[k] != labels[k + 1]).collect();
    match flips.as_slice() {
        [] => Ok(BranchResult::NotFound),
        [k] => {
            let (mut lo, mut hi) = (points[*k], points[*k + 1]);
            let lo_label = labels[*k];
            while hi - lo > width {
                let inner: Vec<f64> = (1..8).map(|j| lo + (hi - lo) * j as f64 / 8.0).collect();
                let inner_labels: Vec<bool> = inner.par_iter().map(|&x| classify(x)).collect::<Result<_>>()?;
                *evaluations += inner.len();
                let mut grid = vec![lo];
                grid.extend(&inner);
                grid.push(hi);
                let mut all = vec![lo_label];
                all.extend(&inner_labels);
                all.push(!lo_label);
                let sub: Vec<usize> = (0..all.len() - 1).filter(|&j| all[j] != all[j + 1]).collect();
                if sub.len() != 1 {
                    return Ok(BranchResult::Bracket {
                        lo: grid[sub[0]],
                        hi: grid[sub[sub.len() - 1] + 1],
                    });
                }
                lo = grid[sub[0]];
                hi = grid[sub[0] + 1];
            }
            Ok(BranchResult::Point {
                value: 0.5 * (lo + hi),
                lo,
                hi,
            })
        }
        many => Ok(BranchResult::Bracket {
            lo: points[many[0]],
            hi: points[many[many.len() - 1] + 1],
        }),
    }
}

/// Simulated self-confinement and self-depletion boundaries: the initial
/// `N1` at which `N1 - N2` first keeps its sign over the horizon, searched
/// above and below `N_T / n_wells`.
pub fn critical_imbalance_simulated(
    params: &ModelParams,
    options: &ThresholdScanOptions,
) -> Result<SimulatedThresholds> {
    if !(options.horizon >= 10.0) {
        return Err(Error::param(
            "horizon",
            format!("must be >= 10, got {}", options.horizon),
        ));
    }
    if !(options.resolution > 0.0 && options.resolution < 0.5) {
        return Err(Error::param("resolution", "must lie in (0, 0.5)"));
    }
    if options.grid < 2 {
        return Err(Error::param("grid", "need at least 2 points"));
    }
    let total = params.total_atoms();
    let mean = total / params.n_wells() as f64;
    let width = options.resolution * total;
    let classify = |n1: f64| sign_persists(params, n1, options.horizon, options.sample_interval);
    let g = options.grid;
    let mut evaluations = 0;

    let upper: Vec<f64> = (1..=g).map(|k| mean + (total - mean) * k as f64 / g as f64).collect();
    let confined = locate_flip(upper, width, &classify, &mut evaluations)?;
    let lower: Vec<f64> = (0..g).map(|k| mean * k as f64 / g as f64).collect();
    let depleted = locate_flip(lower, width, &classify, &mut evaluations)?;

    Ok(SimulatedThresholds {
        confined,
        depleted,
        options: *options,
        evaluations,
    })
}

/// Analytic and simulated thresholds at one `Lambda`, with the residual of
/// the analytic criterion at the simulated boundaries.
pub fn threshold_report(
    params: &ModelParams,
    analytic: &AnalyticThresholds,
    simulated: &SimulatedThresholds,
) -> ScanReport {
    let total = params.total_atoms();
    let mean = total / params.n_wells() as f64;
    let mut r = ScanReport::new("self-trapping thresholds");
    params_inputs(&mut r, params);
    r.input("horizon", simulated.options.horizon)
        .input("resolution", simulated.options.resolution);
    let bisect = "bisection on the residual, |dn| < 1e-8";
    r.measure("n_star", analytic.n_star, "1", bisect)
        .measure("n_upper", analytic.upper, "atoms", bisect)
        .measure("n_lower", analytic.lower, "atoms", bisect);
    let persist = format!(
        "sign persistence of N1 - N2 over {} / omega_R, bracket <= {} N_T",
        simulated.options.horizon, simulated.options.resolution
    );
    for (name, branch) in [("n_conf", &simulated.confined), ("n_depl", &simulated.depleted)] {
        match branch {
            BranchResult::Point { value, lo, hi } => {
                r.measure(name, *value, "atoms", &persist)
                    .measure(&format!("{name}_lo"), *lo, "atoms", &persist)
                    .measure(&format!("{name}_hi"), *hi, "atoms", &persist);
                let n = (4.0 * value / total - 1.0) / 3.0;
                if let Ok(res) = selfconfine_residual(n, params.lambda()) {
                    r.measure(
                        &format!("{name}_residual"),
                        res,
                        "1",
                        "criterion at the simulated boundary",
                    );
                }
                r.label(name, "point");
            }
            BranchResult::Bracket { lo, hi } => {
                r.measure(&format!("{name}_lo"), *lo, "atoms", &persist).measure(
                    &format!("{name}_hi"),
                    *hi,
                    "atoms",
                    &persist,
                );
                r.label(name, "non-monotone bracket");
            }
            BranchResult::NotFound => {
                r.label(name, "not found");
            }
        }
    }
    if let (Some(conf), Some(depl)) = (simulated.confined.value(), simulated.depleted.value()) {
        let ordered = depl < analytic.lower && analytic.lower < mean && mean < analytic.upper && analytic.upper < conf;
        r.label("ordering", if ordered { "holds" } else { "violated" });
        let distinct = (total - depl) / 3.0 < conf;
        r.label("depletion_distinct", if distinct { "holds" } else { "violated" });
    }
    r.input("evaluations", simulated.evaluations as f64);
    r
}

// ---------------------------------------------------------------------------
// Resonant small-amplitude driving

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallAmplitudeOptions {
    /// Excess in well 1 as a fraction of `N_T`, removed evenly elsewhere.
    pub seed_fraction: f64,
    pub depth: f64,
    /// Drive frequency in `omega_R`; `None` uses [`resonance_frequency`].
    pub omega: Option<f64>,
    pub phi: f64,
    /// End of the modulation; `None` drives for the whole run.
    pub tau_stop: Option<f64>,
    pub duration: f64,
    pub sample_interval: f64,
}

impl Default for SmallAmplitudeOptions {
    fn default() -> Self {
        Self {
            seed_fraction: 1e-3,
            depth: 1.0,
            omega: None,
            phi: 0.0,
            tau_stop: Some(4.0),
            duration: 12.0,
            sample_interval: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallAmplitudeReport {
    pub omega: f64,
    pub tau_stop: Option<f64>,
    /// Largest `|N_i - N_T/n|` at `t = 0`.
    pub initial_deviation: f64,
    pub max_deviation: f64,
    /// `max_deviation / initial_deviation`, over the driven part of the run.
    pub growth_factor: f64,
    /// `sqrt((2/n) sum_i (N_i - N_T/n)^2)` at the stop.
    pub amplitude_at_stop: Option<f64>,
    /// Range of the circulating amplitude over `[tau, 3 tau]` relative to its value at `tau`.
    pub post_stop_ratio: Option<(f64, f64)>,
    /// Oscillation period of well 1 in the analysis window.
    pub period: Option<f64>,
    /// Cross-correlation lag of `(i, i+1)` deviations, `1/omega_R`.
    pub lags: Vec<f64>,
    /// Largest `| |lag| / (period / 4) - 1 |` over adjacent pairs.
    pub quarter_period_error: Option<f64>,
    /// `+1` when well 2 follows well 1, `-1` when it leads.
    pub direction: i64,
    /// Maximum of the circulating amplitude over the run.
    pub beat_amplitude: f64,
    /// Period of the carrier-free envelope, when it has a spectral peak.
    pub beat_period: Option<f64>,
}

/// Seeded uniform state: `N_T/n + s` in well 1, `N_T/n - s/(n-1)` elsewhere.
pub fn seeded_state(params: &ModelParams, seed_fraction: f64) -> Result<RingState> {
    let n = params.n_wells();
    let total = params.total_atoms();
    let excess = seed_fraction * total;
    let mut pops = vec![total / n as f64 - excess / (n - 1) as f64; n];
    pops[0] = total / n as f64 + excess;
    RingState::from_polar(&pops, &vec![0.0; n], 0.0)
}

fn deviations(traj: &Trajectory) -> Vec<Vec<f64>> {
    let n = traj.n_wells();
    let mean = traj.metadata.params.total_atoms() / n as f64;
    (0..n)
        .map(|i| traj.population(i).iter().map(|p| p - mean).collect())
        .collect()
}

fn circulating_amplitude(devs: &[Vec<f64>], k: usize) -> f64 {
    let n = devs.len() as f64;
    ((2.0 / n) * devs.iter().map(|d| d[k] * d[k]).sum::<f64>()).sqrt()
}

fn sliding_max(x: &[f64], half: usize) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half + 1).min(x.len());
            x[lo..hi].iter().copied().fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

pub fn run_small_amplitude(
    params: &ModelParams,
    options: &SmallAmplitudeOptions,
) -> Result<(Trajectory, SmallAmplitudeReport)> {
    let omega = match options.omega {
        Some(w) => w,
        None => resonance_frequency(params)?,
    };
    let mut schedule = CouplingSchedule::resonant(params, options.depth, omega, options.phi)?;
    if let Some(tau) = options.tau_stop {
        schedule = schedule.stop_at(tau, params.k_tilde())?;
    }
    let state = seeded_state(params, options.seed_fraction)?;
    let integ = IntegratorOptions::default()
        .with_max_time(options.duration)
        .with_sample_interval(options.sample_interval);
    let traj = integrate(&state, params, &schedule, &integ)?;
    let report = analyze_small_amplitude(&traj, omega, options.tau_stop)?;
    Ok((traj, report))
}

/// Growth, circulation and beat statistics of a driven run.
pub fn analyze_small_amplitude(traj: &Trajectory, omega: f64, tau_stop: Option<f64>) -> Result<SmallAmplitudeReport> {
    if traj.len() < 2 {
        return Err(Error::TooFewSamples {
            got: traj.len(),
            need: 2,
        });
    }
    let times = traj.times();
    let devs = deviations(traj);
    let n = devs.len();
    let end = times[times.len() - 1];
    let abs_max = |k: usize| devs.iter().map(|d| d[k].abs()).fold(0.0, f64::max);
    let initial_deviation = abs_max(0);
    let driven_end = tau_stop.unwrap_or(end).min(end);
    let driven = window_indices(&times, times[0], driven_end);
    let max_deviation = driven.clone().map(abs_max).fold(0.0, f64::max);
    let amplitude: Vec<f64> = (0..times.len()).map(|k| circulating_amplitude(&devs, k)).collect();

    let (amplitude_at_stop, post_stop_ratio, window) = match tau_stop {
        Some(tau) if tau < end => {
            let k = nearest_index(&times, tau);
            let a0 = amplitude[k];
            let w = window_indices(&times, tau, (3.0 * tau).min(end));
            let (lo, hi) = amplitude[w.clone()]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
                    (lo.min(a / a0), hi.max(a / a0))
                });
            (Some(a0), Some((lo, hi)), w)
        }
        _ => (None, None, 0..times.len()),
    };

    let wt = &times[window.clone()];
    let period = dominant_frequency(wt, &devs[0][window.clone()], Window::Hann)
        .ok()
        .map(|e| 1.0 / e.frequency);
    let dt = traj.metadata.options.sample_interval;
    let mut lags = Vec::new();
    if let Some(p) = period {
        let max_lag = ((0.5 * p / dt).round() as usize).max(1);
        for i in 0..n - 1 {
            let lag = crosscorr_lag(&devs[i][window.clone()], &devs[i + 1][window.clone()], Some(max_lag))?;
            lags.push(lag as f64 * dt);
        }
    }
    let quarter_period_error = period.filter(|_| !lags.is_empty()).map(|p| {
        lags.iter()
            .map(|l| (l.abs() / (0.25 * p) - 1.0).abs())
            .fold(0.0, f64::max)
    });
    let direction = lags.first().map_or(0, |l| {
        if *l > 0.0 {
            1
        } else if *l < 0.0 {
            -1
        } else {
            0
        }
    });

    let beat_amplitude = amplitude.iter().copied().fold(0.0, f64::max);
    let carrier = 2.0 * PI / omega.abs().max(1e-12);
    let half = ((0.5 * carrier / dt).ceil() as usize).max(1);
    let envelope = sliding_max(&amplitude, half);
    let beat_period = dominant_frequency(&times, &envelope, Window::Hann)
        .ok()
        .map(|e| 1.0 / e.frequency);

    Ok(SmallAmplitudeReport {
        omega,
        tau_stop,
        initial_deviation,
        max_deviation,
        growth_factor: max_deviation / initial_deviation,
        amplitude_at_stop,
        post_stop_ratio,
        period,
        lags,
        quarter_period_error,
        direction,
        beat_amplitude,
        beat_period,
    })
}

impl SmallAmplitudeReport {
    pub fn report(&self, params: &ModelParams) -> ScanReport {
        let mut r = ScanReport::new("resonant drive");
        params_inputs(&mut r, params);
        r.input("omega", self.omega);
        if let Some(tau) = self.tau_stop {
            r.input("tau_stop", tau);
        }
        r.measure(
            "initial_deviation",
            self.initial_deviation,
            "atoms",
            "max_i |N_i - N_T/n| at t = 0",
        )
        .measure(
            "max_deviation",
            self.max_deviation,
            "atoms",
            "max_i |N_i - N_T/n| while driven",
        )
        .measure(
            "growth_factor",
            self.growth_factor,
            "1",
            "max_deviation / initial_deviation",
        )
        .measure(
            "beat_amplitude",
            self.beat_amplitude,
            "atoms",
            "max of sqrt((2/n) sum dev^2)",
        );
        if let Some(a) = self.amplitude_at_stop {
            r.measure("amplitude_at_stop", a, "atoms", "sqrt((2/n) sum dev^2) at tau");
        }
        if let Some((lo, hi)) = self.post_stop_ratio {
            r.measure(
                "post_stop_ratio_min",
                lo,
                "1",
                "amplitude / amplitude(tau) on [tau, 3 tau]",
            )
            .measure(
                "post_stop_ratio_max",
                hi,
                "1",
                "amplitude / amplitude(tau) on [tau, 3 tau]",
            );
        }
        if let Some(p) = self.period {
            r.measure("period", p, "1/omega_R", "Hann FFT peak of well 1 deviation");
        }
        for (i, l) in self.lags.iter().enumerate() {
            r.measure(
                &format!("lag_{}_{}", i + 1, i + 2),
                *l,
                "1/omega_R",
                "cross-correlation lag, |lag| <= period / 2",
            );
        }
        if let Some(e) = self.quarter_period_error {
            r.measure("quarter_period_error", e, "1", "max | |lag| / (period/4) - 1 |");
        }
        if let Some(p) = self.beat_period {
            r.measure(
                "beat_period",
                p,
                "1/omega_R",
                "Hann FFT peak of the sliding-max envelope",
            );
        }
        r.measure(
            "direction",
            self.direction as f64,
            "1",
            "sign of lag between wells 1 and 2",
        );
        r.label(
            "direction",
            match self.direction {
                1 => "forward",
                -1 => "backward",
                _ => "none",
            },
        );
        r
    }
}

/// Circulation direction for each drive phase.
pub fn scan_drive_phase(
    params: &ModelParams,
    options: &SmallAmplitudeOptions,
    phis: &[f64],
) -> Result<Vec<(f64, i64)>> {
    phis.par_iter()
        .map(|&phi| {
            let opts = SmallAmplitudeOptions { phi, ..*options };
            run_small_amplitude(params, &opts).map(|(_, r)| (phi, r.direction))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Persistent current

/// What happens to the winding-one flow state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurrentProbe {
    Intact,
    /// Link `link` (joining wells `link` and `link + 1`) set to zero from `t_cut`.
    Cut {
        link: usize,
        t_cut: f64,
    },
    /// Link `link` scaled by `factor` throughout.
    Bottleneck {
        link: usize,
        factor: f64,
    },
}

/// `N_i = N_T / n`, `theta_i = 2 pi m i / n`.
pub fn winding_state(params: &ModelParams, m: i64) -> Result<RingState> {
    let n = params.n_wells();
    let pops = vec![params.total_atoms() / n as f64; n];
    let phases: Vec<f64> = (0..n)
        .map(|i| 2.0 * PI * m as f64 * (i + 1) as f64 / n as f64)
        .collect();
    RingState::from_polar(&pops, &phases, 0.0)
}

pub fn current_schedule(params: &ModelParams, probe: CurrentProbe) -> Result<CouplingSchedule> {
    let base = CouplingSchedule::constant(params.n_wells(), params.k_tilde())?;
    match probe {
        CurrentProbe::Intact => Ok(base),
        CurrentProbe::Cut { link, t_cut } => base.cut_link(link, t_cut),
        CurrentProbe::Bottleneck { link, factor } => base.bottleneck(link, factor),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistentCurrentReport {
    pub probe: CurrentProbe,
    /// `max |N_i / (N_T/n) - 1|` before the cut (whole run otherwise).
    pub flatness: f64,
    /// Winding number is `1` at every sample before the cut.
    pub winding_conserved: bool,
    /// Well feeding the cut link, from the sign of the flow through it.
    pub upstream_well: Option<usize>,
    /// Well with the largest population gain between the cut and the upstream peak.
    pub filling_well: Option<usize>,
    pub peak_time: Option<f64>,
    pub peak_population: Option<f64>,
    /// Upstream population never decreases between the cut and the peak.
    pub rise_monotonic: Option<bool>,
    /// Well observed for the bottleneck oscillation.
    pub probe_well: usize,
    /// Half the peak-to-peak range of the probe well.
    pub oscillation_amplitude: f64,
    pub oscillation_period: Option<f64>,
}

pub fn run_persistent_current(
    params: &ModelParams,
    probe: CurrentProbe,
    duration: f64,
    sample_interval: f64,
) -> Result<(Trajectory, PersistentCurrentReport)> {
    let state = winding_state(params, 1)?;
    let schedule = current_schedule(params, probe)?;
    let options = IntegratorOptions::default()
        .with_max_time(duration)
        .with_sample_interval(sample_interval);
    let traj = integrate(&state, params, &schedule, &options)?;
    let report = analyze_persistent_current(&traj, probe)?;
    Ok((traj, report))
}

pub fn analyze_persistent_current(traj: &Trajectory, probe: CurrentProbe) -> Result<PersistentCurrentReport> {
    if traj.is_empty() {
        return Err(Error::TooFewSamples { got: 0, need: 1 });
    }
    let times = traj.times();
    let n = traj.n_wells();
    let mean = traj.metadata.params.total_atoms() / n as f64;
    let end = times[times.len() - 1];
    let pre_end = match probe {
        CurrentProbe::Cut { t_cut, .. } => t_cut.min(end),
        _ => end,
    };
    let pre = window_indices(&times, times[0], pre_end);
    // the sample at t_cut still has the flow state
    let flatness = traj.samples[pre.clone()]
        .iter()
        .flat_map(|s| s.observables.populations.iter().map(|p| (p / mean - 1.0).abs()))
        .fold(0.0, f64::max);
    let winding_conserved = traj.samples[pre.clone()]
        .iter()
        .all(|s| s.observables.winding == Some(1));

    let mut upstream_well = None;
    let mut filling_well = None;
    let mut peak_time = None;
    let mut peak_population = None;
    let mut rise_monotonic = None;
    if let CurrentProbe::Cut { link, t_cut } = probe {
        if t_cut < end {
            let k_cut = nearest_index(&times, t_cut);
            let flow = traj.samples[k_cut].observables.currents[link];
            let up = if flow >= 0.0 { link } else { (link + 1) % n };
            upstream_well = Some(up);
            let pop = traj.population(up);
            // first local maximum after the cut
            let mut peak = None;
            for k in k_cut + 1..pop.len() - 1 {
                if pop[k] > pop[k - 1] && pop[k] >= pop[k + 1] {
                    peak = Some(k);
                    break;
                }
            }
            let k_end = peak.unwrap_or(pop.len() - 1);
            filling_well = (0..n)
                .map(|i| {
                    let p = traj.population(i);
                    let top = p[k_cut..=k_end].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (i, top - p[k_cut])
                })
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(i, _)| i);
            if let Some(k) = peak {
                peak_time = Some(times[k]);
                peak_population = Some(pop[k]);
                let tol = 1e-9 * mean;
                rise_monotonic = Some(pop[k_cut..=k].windows(2).all(|w| w[1] >= w[0] - tol));
            } else {
                rise_monotonic = Some(false);
            }
        }
    }

    let probe_well = 0;
    let p = traj.population(probe_well);
    let (lo, hi) = p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(*x), hi.max(*x))
    });
    let oscillation_period = match probe {
        CurrentProbe::Bottleneck { .. } => dominant_frequency(&times, &p, Window::Hann)
            .ok()
            .map(|e| 1.0 / e.frequency),
        _ => None,
    };

    Ok(PersistentCurrentReport {
        probe,
        flatness,
        winding_conserved,
        upstream_well,
        filling_well,
        peak_time,
        peak_population,
        rise_monotonic,
        probe_well,
        oscillation_amplitude: 0.5 * (hi - lo),
        oscillation_period,
    })
}

impl PersistentCurrentReport {
    pub fn report(&self, params: &ModelParams) -> ScanReport {
        let mut r = ScanReport::new("persistent current");
        params_inputs(&mut r, params);
        match self.probe {
            CurrentProbe::Intact => {
                r.label("probe", "intact");
            }
            CurrentProbe::Cut { link, t_cut } => {
                r.label("probe", "cut");
                r.input("link", (link + 1) as f64).input("t_cut", t_cut);
            }
            CurrentProbe::Bottleneck { link, factor } => {
                r.label("probe", "bottleneck");
                r.input("link", (link + 1) as f64).input("factor", factor);
            }
        }
        r.measure("flatness", self.flatness, "1", "max |N_i / (N_T/n) - 1| before the cut")
            .label("winding_conserved", self.winding_conserved.to_string());
        if let Some(w) = self.upstream_well {
            r.measure(
                "upstream_well",
                (w + 1) as f64,
                "well",
                "sign of the flow through the cut link",
            );
        }
        if let Some(w) = self.filling_well {
            r.measure(
                "filling_well",
                (w + 1) as f64,
                "well",
                "largest gain between the cut and the upstream peak",
            );
        }
        if let Some(t) = self.peak_time {
            r.measure(
                "peak_time",
                t,
                "1/omega_R",
                "first local maximum of the upstream well after the cut",
            );
        }
        if let Some(p) = self.peak_population {
            r.measure("peak_population", p, "atoms", "upstream well at peak_time");
        }
        if let Some(m) = self.rise_monotonic {
            r.label("rise_monotonic", m.to_string());
        }
        r.measure(
            "oscillation_amplitude",
            self.oscillation_amplitude,
            "atoms",
            "half peak-to-peak of the probe well",
        );
        if let Some(p) = self.oscillation_period {
            r.measure("oscillation_period", p, "1/omega_R", "Hann FFT peak of the probe well");
        }
        r
    }
}

// ---------------------------------------------------------------------------
// Conveyor belt

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConveyorOptions {
    /// Fraction of `N_T` in the start well; the rest is split evenly.
    pub initial_fraction: f64,
    pub n_turns: usize,
    /// Defaults to `k_tilde`.
    pub k_low: Option<f64>,
    /// Defaults to `100 k_tilde`.
    pub k_high: Option<f64>,
    pub start_well: usize,
    pub direction: Direction,
    pub mode: ConveyorMode,
    /// Initial phases; all zero when `None`.
    pub phases: Option<Vec<f64>>,
    /// Time after the last transfer over which retention is checked.
    pub hold: f64,
    pub duration: f64,
    pub sample_interval: f64,
}

pub const DEFAULT_K_HIGH_FACTOR: f64 = 100.0;

impl Default for ConveyorOptions {
    fn default() -> Self {
        Self {
            initial_fraction: 0.97,
            n_turns: 2,
            k_low: None,
            k_high: None,
            start_well: 0,
            direction: Direction::Forward,
            mode: ConveyorMode::feedback(),
            phases: None,
            hold: 20.0,
            duration: 30.0,
            sample_interval: 0.01,
        }
    }
}

impl ConveyorOptions {
    pub fn schedule(&self, params: &ModelParams) -> Result<CouplingSchedule> {
        let k = params.k_tilde();
        CouplingSchedule::conveyor(
            params.n_wells(),
            self.k_low.unwrap_or(k),
            self.k_high.unwrap_or(DEFAULT_K_HIGH_FACTOR * k),
            self.start_well,
            self.direction,
            self.n_turns,
            self.mode.clone(),
        )
    }
}

/// `fraction * N_T` in `well`, the rest split evenly.
pub fn single_well_state(params: &ModelParams, well: usize, fraction: f64, phases: &[f64]) -> Result<RingState> {
    let n = params.n_wells();
    if well >= n {
        return Err(Error::param("start_well", format!("out of range: {well}")));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::param("fraction", format!("must lie in [0, 1], got {fraction}")));
    }
    let total = params.total_atoms();
    let mut pops = vec![(1.0 - fraction) * total / (n - 1) as f64; n];
    pops[well] = fraction * total;
    RingState::from_polar(&pops, phases, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferRecord {
    pub segment: usize,
    pub from: usize,
    pub to: usize,
    pub start: f64,
    pub end: f64,
    /// Destination gain over the segment divided by the source population at its start.
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConveyorReport {
    pub planned: usize,
    pub transfers: Vec<TransferRecord>,
    pub completed_turns: usize,
    pub min_fidelity: Option<f64>,
    /// Time of the last transfer, after which every link is at `k_low`.
    pub stop_time: Option<f64>,
    pub final_well: usize,
    /// Range of the final well's population relative to its value at the stop.
    pub retention: Option<(f64, f64)>,
    /// Length of the retention window actually observed.
    pub retention_window: f64,
}

pub fn run_conveyor(params: &ModelParams, options: &ConveyorOptions) -> Result<(Trajectory, ConveyorReport)> {
    if !(options.initial_fraction >= 0.9 && options.initial_fraction <= 1.0) {
        return Err(Error::param(
            "initial_fraction",
            format!("must lie in [0.9, 1], got {}", options.initial_fraction),
        ));
    }
    let schedule = options.schedule(params)?;
    let phases = options.phases.clone().unwrap_or_else(|| vec![0.0; params.n_wells()]);
    let state = single_well_state(params, options.start_well, options.initial_fraction, &phases)?;
    let integ = IntegratorOptions::default()
        .with_max_time(options.duration)
        .with_sample_interval(options.sample_interval);
    let traj = integrate(&state, params, &schedule, &integ)?;
    let report = analyze_conveyor(&traj, options.hold)?;
    Ok((traj, report))
}

/// Per-transfer fidelities and post-stop retention of a conveyor run.
pub fn analyze_conveyor(traj: &Trajectory, hold: f64) -> Result<ConveyorReport> {
    let CouplingSchedule::Conveyor(conveyor) = &traj.metadata.schedule else {
        return Err(Error::InvalidState(
            "trajectory was not driven by a conveyor schedule".into(),
        ));
    };
    if traj.is_empty() {
        return Err(Error::TooFewSamples { got: 0, need: 1 });
    }
    let initial = traj.metadata.initial.populations();
    let mut transfers = Vec::new();
    let mut start = traj.metadata.initial.time();
    let mut start_pops = initial.clone();
    for ev in &traj.events {
        let from = conveyor.source_well(ev.segment);
        let to = conveyor.destination_well(ev.segment);
        transfers.push(TransferRecord {
            segment: ev.segment,
            from,
            to,
            start,
            end: ev.time,
            fidelity: (ev.populations[to] - start_pops[to]) / start_pops[from],
        });
        start = ev.time;
        start_pops = ev.populations.clone();
    }
    let completed = transfers.len();
    let min_fidelity = transfers.iter().map(|t| t.fidelity).reduce(f64::min);
    let final_well = conveyor.source_well(completed);
    let times = traj.times();
    let end = times[times.len() - 1];
    let stop_time = if completed == conveyor.transfers {
        Some(transfers.last().map_or(times[0], |t| t.end))
    } else {
        None
    };
    let (retention, retention_window) = match stop_time {
        Some(t_stop) if t_stop < end => {
            let reference = traj.population(final_well)[nearest_index(&times, t_stop)];
            let to = (t_stop + hold).min(end);
            let w = window_indices(&times, t_stop, to);
            let range = traj.samples[w]
                .iter()
                .map(|s| s.observables.populations[final_well] / reference)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
            (Some(range), to - t_stop)
        }
        _ => (None, 0.0),
    };
    Ok(ConveyorReport {
        planned: conveyor.transfers,
        completed_turns: completed / conveyor.n_wells,
        transfers,
        min_fidelity,
        stop_time,
        final_well,
        retention,
        retention_window,
    })
}

impl ConveyorReport {
    pub fn report(&self, params: &ModelParams) -> ScanReport {
        let mut r = ScanReport::new("conveyor");
        params_inputs(&mut r, params);
        r.input("planned_transfers", self.planned as f64);
        let fid = "(N_destination gain over the segment) / N_source at the segment start";
        for t in &self.transfers {
            r.measure(&format!("fidelity_{}", t.segment + 1), t.fidelity, "1", fid)
                .measure(
                    &format!("switch_time_{}", t.segment + 1),
                    t.end,
                    "1/omega_R",
                    "flux reversal on the active link",
                );
        }
        if let Some(f) = self.min_fidelity {
            r.measure("min_fidelity", f, "1", fid);
        }
        r.measure("completed_transfers", self.transfers.len() as f64, "1", "switch events")
            .measure(
                "completed_turns",
                self.completed_turns as f64,
                "1",
                "completed transfers / n_wells",
            )
            .measure(
                "final_well",
                (self.final_well + 1) as f64,
                "well",
                "source of the next segment",
            );
        if let Some(t) = self.stop_time {
            r.measure("stop_time", t, "1/omega_R", "last switch");
        }
        if let Some((lo, hi)) = self.retention {
            let c = "final-well population / its value at the stop";
            r.measure("retention_min", lo, "1", c)
                .measure("retention_max", hi, "1", c);
        }
        r.measure(
            "retention_window",
            self.retention_window,
            "1/omega_R",
            "observed time after the stop",
        );
        r
    }
}

// ---------------------------------------------------------------------------
// Linear resonance

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonanceMeasurement {
    pub lambda: f64,
    /// Angular frequency of the dominant peak, units of `omega_R`.
    pub measured: f64,
    /// Closed-form drive frequency, four wells only.
    pub formula: Option<f64>,
    pub relative_error: Option<f64>,
    pub estimate: SpectralEstimate,
    pub perturbation: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonanceOptions {
    /// Single-well excess as a fraction of `N_T`.
    pub perturbation: f64,
    pub duration: f64,
    pub sample_interval: f64,
}

impl Default for ResonanceOptions {
    fn default() -> Self {
        Self {
            perturbation: 1e-4,
            duration: 100.0,
            sample_interval: 0.01,
        }
    }
}

/// Dominant frequency of `N_1(t) - N_T/n` after a small single-well
/// perturbation of the uniform state, without drive.
pub fn linearized_resonance_measured(params: &ModelParams, options: &ResonanceOptions) -> Result<ResonanceMeasurement> {
    let state = seeded_state(params, options.perturbation)?;
    let schedule = CouplingSchedule::constant(params.n_wells(), params.k_tilde())?;
    let integ = IntegratorOptions::default()
        .with_max_time(options.duration)
        .with_sample_interval(options.sample_interval);
    let traj = integrate(&state, params, &schedule, &integ)?;
    let mean = params.total_atoms() / params.n_wells() as f64;
    let series: Vec<f64> = traj.population(0).iter().map(|p| p - mean).collect();
    let estimate = dominant_frequency(&traj.times(), &series, Window::Hann)?;
    let measured = estimate.angular_frequency;
    let formula = resonance_frequency(params).ok();
    Ok(ResonanceMeasurement {
        lambda: params.lambda(),
        measured,
        formula,
        relative_error: formula.map(|f| (measured - f).abs() / f),
        estimate,
        perturbation: options.perturbation,
        duration: options.duration,
    })
}

pub fn resonance_report(params: &ModelParams, results: &[ResonanceMeasurement]) -> ScanReport {
    let mut r = ScanReport::new("linear resonance");
    params_inputs(&mut r, params);
    for m in results {
        let tag = format!("lambda_{}", m.lambda);
        let crit = format!(
            "Hann FFT peak of N_1 - N_T/n, perturbation {} N_T, {} / omega_R, resolution {:.3e} omega_R",
            m.perturbation,
            m.duration,
            2.0 * PI * m.estimate.resolution
        );
        r.measure(&format!("{tag}_measured"), m.measured, "omega_R", &crit);
        if let Some(f) = m.formula {
            r.measure(&format!("{tag}_formula"), f, "omega_R", "sqrt(6 Lambda + 2) / 2");
        }
        if let Some(e) = m.relative_error {
            r.measure(
                &format!("{tag}_relative_error"),
                e,
                "1",
                "|measured - formula| / formula",
            );
        }
    }
    r
}

/// Generic run statistics attached to every simulation report.
pub fn run_statistics(traj: &Trajectory) -> ScanReport {
    let mut r = ScanReport::new("run");
    params_inputs(&mut r, &traj.metadata.params);
    r.input("duration", traj.metadata.options.max_time)
        .input("sample_interval", traj.metadata.options.sample_interval);
    r.measure(
        "norm_drift",
        traj.stats.max_norm_drift,
        "1",
        "max |sum N_i - N_T| / N_T over accepted steps",
    )
    .measure(
        "energy_drift",
        traj.relative_energy_drift(),
        "1",
        "max |H(t) - H(0)| / |H(0)| over samples, meaningful for constant couplings",
    )
    .measure("accepted_steps", traj.stats.accepted_steps as f64, "1", "integrator")
    .measure("rejected_steps", traj.stats.rejected_steps as f64, "1", "integrator")
    .label("schedule", traj.metadata.schedule.describe());
    r
}
