//! Invariant suite run by `ringbec validate`.
//!
//! The polar right-hand side is injected so that a faulty implementation
//! can be checked against the suite.

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{dominant_frequency, Window};
use crate::config::{preset, PRESET_NAMES};
use crate::drives::CouplingSchedule;
use crate::error::Result;
use crate::integrator::{integrate, IntegratorOptions};
use crate::model::{rhs_complex, rhs_polar, Interaction, ModelParams, PolarDerivative, PolarState, RingState};

pub type PolarRhs = fn(&PolarState, &ModelParams, &[f64]) -> Result<PolarDerivative>;

pub const NORM_LIMIT: f64 = 1e-9;
pub const ENERGY_LIMIT: f64 = 1e-8;
pub const POLAR_LIMIT: f64 = 1e-10;
pub const TIME_REVERSAL_LIMIT: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl InvariantCheck {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_owned(),
            passed,
            detail,
        }
    }

    fn failed(name: &str, err: impl std::fmt::Display) -> Self {
        Self::new(name, false, format!("error: {err}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteOptions {
    /// Conservation horizon, `1/omega_R`.
    pub horizon: f64,
    /// Random states in the polar/complex comparison.
    pub random_states: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            horizon: 100.0,
            random_states: 1000,
            seed: 7,
        }
    }
}

fn params(lambda: f64) -> ModelParams {
    ModelParams::new(4, 1e5, 0.5, Interaction::Lambda(lambda)).expect("valid parameters")
}

/// `(dN, dtheta)` obtained from the complex derivative by the chain rule.
pub fn polar_from_complex(psi: &[Complex64], dpsi: &[Complex64]) -> PolarDerivative {
    PolarDerivative {
        populations: psi.iter().zip(dpsi).map(|(a, d)| 2.0 * (a.conj() * d).re).collect(),
        phases: psi
            .iter()
            .zip(dpsi)
            .map(|(a, d)| (a.conj() * d).im / a.norm_sqr())
            .collect(),
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Largest difference relative to the magnitude of each component vector.
pub fn polar_mismatch(a: &PolarDerivative, b: &PolarDerivative) -> f64 {
    let rel = |x: &[f64], y: &[f64]| {
        let diff = x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        diff / max_abs(y).max(f64::MIN_POSITIVE)
    };
    rel(&a.populations, &b.populations).max(rel(&a.phases, &b.phases))
}

/// Polar and transformed complex right-hand sides on random states with every
/// population above `1e-3 N_T`; returns the largest relative mismatch.
pub fn polar_complex_mismatch(polar: PolarRhs, states: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..states {
        let lambda = rng.random_range(0.0..500.0);
        let offsets: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = ModelParams::with_offsets(4, 1e5, 0.5, Interaction::Lambda(lambda), offsets)?;
        let mut pops: Vec<f64> = (0..4).map(|_| rng.random_range(1e-3..1.0)).collect();
        let sum: f64 = pops.iter().sum();
        // rescale keeps every population above 1e-3 N_T
        let floor = 1e-3 * 1e5;
        let free = 1e5 - 4.0 * floor;
        for x in &mut pops {
            *x = floor + free * *x / sum;
        }
        let phases: Vec<f64> = (0..4).map(|_| rng.random_range(-10.0..10.0)).collect();
        let couplings: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
        let state = RingState::from_polar(&pops, &phases, 0.0)?;
        let from_complex = polar_from_complex(state.amplitudes(), &rhs_complex(&state, &p, &couplings)?);
        let direct = polar(&PolarState::new(pops, phases)?, &p, &couplings)?;
        worst = worst.max(polar_mismatch(&direct, &from_complex));
    }
    Ok(worst)
}

fn check_polar(polar: PolarRhs, options: &SuiteOptions) -> InvariantCheck {
    let name = "polar/complex equivalence";
    match polar_complex_mismatch(polar, options.random_states, options.seed) {
        Ok(m) => InvariantCheck::new(
            name,
            m < POLAR_LIMIT,
            format!(
                "max relative mismatch {m:.3e} over {} states (limit {POLAR_LIMIT:e})",
                options.random_states
            ),
        ),
        Err(e) => InvariantCheck::failed(name, e),
    }
}

/// Norm drift of every built-in preset over the horizon.
pub fn number_conservation(options: &SuiteOptions) -> InvariantCheck {
    let name = "number conservation";
    let results: Vec<Result<(String, f64)>> = PRESET_NAMES
        .par_iter()
        .map(|&n| {
            let built = preset(n)?.build()?;
            let opts = IntegratorOptions {
                max_time: options.horizon,
                sample_interval: 0.1,
                ..built.options
            };
            let traj = integrate(&built.initial, &built.params, &built.schedule, &opts)?;
            Ok((n.to_owned(), traj.stats.max_norm_drift.max(traj.sampled_norm_drift())))
        })
        .collect();
    let mut worst = (String::new(), 0.0);
    for r in results {
        match r {
            Ok((n, d)) => {
                if d >= worst.1 {
                    worst = (n, d);
                }
            }
            Err(e) => return InvariantCheck::failed(name, e),
        }
    }
    InvariantCheck::new(
        name,
        worst.1 < NORM_LIMIT,
        format!(
            "max |sum N - N_T| / N_T = {:.3e} ({}) over {} / omega_R",
            worst.1, worst.0, options.horizon
        ),
    )
}

pub fn energy_conservation(options: &SuiteOptions) -> InvariantCheck {
    let name = "energy conservation";
    let cases = ["fig4a", "fig4b"];
    let mut worst: f64 = 0.0;
    for c in cases {
        let run = || -> Result<f64> {
            let built = preset(c)?.build()?;
            let opts = IntegratorOptions {
                max_time: options.horizon,
                sample_interval: 0.1,
                ..built.options
            };
            Ok(integrate(&built.initial, &built.params, &built.schedule, &opts)?.relative_energy_drift())
        };
        match run() {
            Ok(d) => worst = worst.max(d),
            Err(e) => return InvariantCheck::failed(name, e),
        }
    }
    InvariantCheck::new(
        name,
        worst < ENERGY_LIMIT,
        format!(
            "max relative energy drift {worst:.3e} over {} / omega_R",
            options.horizon
        ),
    )
}

fn asymmetric_state() -> RingState {
    RingState::from_polar(&[40_000.0, 25_000.0, 20_000.0, 15_000.0], &[0.0, 0.7, -0.4, 2.0], 0.0).expect("valid state")
}

fn population_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

fn populations(traj: &crate::integrator::Trajectory) -> Vec<Vec<f64>> {
    traj.samples.iter().map(|s| s.observables.populations.clone()).collect()
}

fn check_gauge() -> InvariantCheck {
    let name = "gauge invariance";
    let run = || -> Result<f64> {
        let p = params(100.0);
        let sched = CouplingSchedule::constant(4, 0.5)?.bottleneck(1, 1.3)?;
        let opts = IntegratorOptions::default()
            .with_max_time(2.0)
            .with_sample_interval(0.05);
        let s = asymmetric_state();
        let a = integrate(&s, &p, &sched, &opts)?;
        let b = integrate(&s.gauge_rotated(1.234), &p, &sched, &opts)?;
        Ok(population_gap(&populations(&a), &populations(&b)) / p.total_atoms())
    };
    match run() {
        Ok(g) => InvariantCheck::new(name, g < 1e-8, format!("max population gap {g:.3e} N_T")),
        Err(e) => InvariantCheck::failed(name, e),
    }
}

fn check_cyclic() -> InvariantCheck {
    let name = "cyclic symmetry";
    let run = || -> Result<f64> {
        let p = params(100.0);
        let opts = IntegratorOptions::default()
            .with_max_time(2.0)
            .with_sample_interval(0.05);
        let s = asymmetric_state();
        let base = CouplingSchedule::constant(4, 0.5)?;
        let a = integrate(&s, &p, &base.clone().bottleneck(1, 1.3)?, &opts)?;
        // new well i is old well i + 1, so old link 1 becomes link 0
        let b = integrate(&s.rotated(1), &p, &base.bottleneck(0, 1.3)?, &opts)?;
        let back: Vec<Vec<f64>> = populations(&b)
            .into_iter()
            .map(|mut v| {
                v.rotate_right(1);
                v
            })
            .collect();
        Ok(population_gap(&populations(&a), &back) / p.total_atoms())
    };
    match run() {
        Ok(g) => InvariantCheck::new(name, g < 1e-8, format!("max population gap {g:.3e} N_T")),
        Err(e) => InvariantCheck::failed(name, e),
    }
}

fn check_time_reversal() -> InvariantCheck {
    let name = "time reversal";
    let run = || -> Result<f64> {
        let p = params(100.0);
        let sched = CouplingSchedule::constant(4, 0.5)?.bottleneck(2, 0.8)?;
        let opts = IntegratorOptions::default()
            .with_max_time(1.0)
            .with_sample_interval(1.0);
        let s = asymmetric_state();
        let forward = integrate(&s, &p, &sched, &opts)?.last_state().expect("samples");
        let back = integrate(&forward.conjugated(), &p, &sched, &opts)?
            .last_state()
            .expect("samples")
            .conjugated();
        let gap = s
            .amplitudes()
            .iter()
            .zip(back.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        Ok(gap / p.total_atoms().sqrt())
    };
    // two legs at the default tolerance land near 1e-9
    let limit = TIME_REVERSAL_LIMIT;
    match run() {
        Ok(g) => InvariantCheck::new(
            name,
            g < limit,
            format!("max |psi - psi_0| / sqrt(N_T) = {g:.3e} (limit {limit:e})"),
        ),
        Err(e) => InvariantCheck::failed(name, e),
    }
}

/// Measured frequency of two decoupled pairs against
/// `sqrt(omega_R (omega_R + U N_pair))`.
pub fn decoupled_pair_error(lambda: f64) -> Result<f64> {
    let p = params(lambda);
    let sched = CouplingSchedule::constant(4, 0.5)?.cut_link(1, 0.0)?.cut_link(3, 0.0)?;
    let s = RingState::from_polar(&[25_100.0, 24_900.0, 25_000.0, 25_000.0], &[0.0; 4], 0.0)?;
    let opts = IntegratorOptions::default()
        .with_max_time(100.0)
        .with_sample_interval(0.01);
    let traj = integrate(&s, &p, &sched, &opts)?;
    let series: Vec<f64> = traj.population(0).iter().map(|x| x - 25_000.0).collect();
    let est = dominant_frequency(&traj.times(), &series, Window::Hann)?;
    let w_r = p.omega_r();
    let expected = (w_r * (w_r + p.u() * 0.5 * p.total_atoms())).sqrt() / w_r;
    Ok((est.angular_frequency - expected).abs() / expected)
}

fn check_pair() -> InvariantCheck {
    let name = "decoupled pair frequency";
    match decoupled_pair_error(100.0) {
        Ok(e) => InvariantCheck::new(name, e < 0.01, format!("relative error {e:.3e} (limit 1e-2)")),
        Err(e) => InvariantCheck::failed(name, e),
    }
}

/// Runs every invariant with `polar` standing in for the polar right-hand side.
pub fn run_suite_with(polar: PolarRhs, options: &SuiteOptions) -> Vec<InvariantCheck> {
    vec![
        number_conservation(options),
        energy_conservation(options),
        check_polar(polar, options),
        check_gauge(),
        check_cyclic(),
        check_time_reversal(),
        check_pair(),
    ]
}

pub fn run_suite(options: &SuiteOptions) -> Vec<InvariantCheck> {
    run_suite_with(rhs_polar, options)
}
