//! Coupling schedules `K_i(t)`.
//!
//! Times are in units of `1/omega_R` and drive frequencies in units of
//! `omega_R`. A schedule is an immutable rule; per-run mutable state (the
//! feedback conveyor's segment counter) lives in a [`ScheduleDriver`].
//!
//! Piecewise rules are selected by the start of the current integration
//! step (`piece_time`), while smooth time dependence uses the actual stage
//! time. Integrators never step across a discontinuity, so this gives the
//! right one-sided values on both sides of a cut.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{current_unchecked, ModelParams};

/// Direction of transport around the ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Well `i` to well `i + 1`.
    Forward,
    /// Well `i` to well `i - 1`.
    Backward,
}

impl Direction {
    pub fn sign(self) -> i64 {
        match self {
            Direction::Forward => 1,
            Direction::Backward => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ConveyorMode {
    /// Fixed transfer durations in `1/omega_R`, reused cyclically.
    OpenLoop { durations: Vec<f64> },
    /// Switch when the flux through the active link first returns to zero
    /// after exceeding `floor * N_T * omega_R`.
    Feedback { floor: f64, timeout: f64 },
}

impl ConveyorMode {
    pub fn feedback() -> Self {
        ConveyorMode::Feedback {
            floor: 1e-3,
            timeout: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conveyor {
    pub n_wells: usize,
    pub k_low: f64,
    pub k_high: f64,
    pub start_well: usize,
    pub direction: Direction,
    pub transfers: usize,
    pub mode: ConveyorMode,
}

impl Conveyor {
    /// Well holding the condensate at the start of `segment`.
    pub fn source_well(&self, segment: usize) -> usize {
        let n = self.n_wells as i64;
        (self.start_well as i64 + self.direction.sign() * segment as i64).rem_euclid(n) as usize
    }

    pub fn destination_well(&self, segment: usize) -> usize {
        self.source_well(segment + 1)
    }

    /// Link raised during `segment`.
    pub fn active_link(&self, segment: usize) -> usize {
        let from = self.source_well(segment);
        match self.direction {
            Direction::Forward => from,
            Direction::Backward => (from + self.n_wells - 1) % self.n_wells,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.k_high == self.k_low
    }

    fn open_loop_switch_times(&self) -> Vec<f64> {
        match &self.mode {
            ConveyorMode::OpenLoop { durations } => {
                let mut t = 0.0;
                (0..self.transfers)
                    .map(|k| {
                        t += durations[k % durations.len()];
                        t
                    })
                    .collect()
            }
            ConveyorMode::Feedback { .. } => Vec::new(),
        }
    }

    fn fill(&self, segment: usize, out: &mut [f64]) {
        out.fill(self.k_low);
        if segment < self.transfers {
            out[self.active_link(segment)] = self.k_high;
        }
    }
}

/// Rule producing the coupling vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum CouplingSchedule {
    Constant {
        n_wells: usize,
        k: f64,
    },
    /// `K_i = k_tilde (1 + (-1)^i depth sin(omega t + phi))`, `i` counted from 1.
    Resonant {
        n_wells: usize,
        k_tilde: f64,
        depth: f64,
        omega: f64,
        phi: f64,
    },
    /// `base` before `t_stop`, every link at `k_after` afterwards.
    Stopped {
        base: Box<CouplingSchedule>,
        t_stop: f64,
        k_after: f64,
    },
    CutLink {
        base: Box<CouplingSchedule>,
        link: usize,
        t_cut: f64,
    },
    Bottleneck {
        base: Box<CouplingSchedule>,
        link: usize,
        factor: f64,
    },
    Conveyor(Conveyor),
}

impl CouplingSchedule {
    pub fn constant(n_wells: usize, k: f64) -> Result<Self> {
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::param("k", format!("coupling must be >= 0, got {k}")));
        }
        Ok(CouplingSchedule::Constant { n_wells, k })
    }

    /// Alternating-sign sinusoidal modulation around `params.k_tilde()`;
    /// `omega` is in units of `omega_R`.
    pub fn resonant(params: &ModelParams, depth: f64, omega: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&depth) {
            return Err(Error::param("depth", format!("must lie in [0, 1], got {depth}")));
        }
        if !omega.is_finite() || !phi.is_finite() {
            return Err(Error::param("omega", "drive frequency and phase must be finite"));
        }
        Ok(CouplingSchedule::Resonant {
            n_wells: params.n_wells(),
            k_tilde: params.k_tilde(),
            depth,
            omega,
            phi,
        })
    }

    /// Ends the modulation at `t_stop`, leaving every link at `k_after`.
    pub fn stop_at(self, t_stop: f64, k_after: f64) -> Result<Self> {
        if !(k_after >= 0.0) {
            return Err(Error::param("k_after", "coupling must be >= 0"));
        }
        if t_stop.is_nan() {
            return Err(Error::param("t_stop", "must not be NaN"));
        }
        Ok(CouplingSchedule::Stopped {
            base: Box::new(self),
            t_stop,
            k_after,
        })
    }

    /// Sets link `link` (joining wells `link` and `link + 1`) to zero from `t_cut` on.
    pub fn cut_link(self, link: usize, t_cut: f64) -> Result<Self> {
        self.check_link(link)?;
        if t_cut.is_nan() {
            return Err(Error::param("t_cut", "must not be NaN"));
        }
        Ok(CouplingSchedule::CutLink {
            base: Box::new(self),
            link,
            t_cut,
        })
    }

    pub fn bottleneck(self, link: usize, factor: f64) -> Result<Self> {
        self.check_link(link)?;
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::param("factor", format!("must be positive, got {factor}")));
        }
        Ok(CouplingSchedule::Bottleneck {
            base: Box::new(self),
            link,
            factor,
        })
    }

    /// Conveyor belt: one link at `k_high` at a time, moving the condensate
    /// `n_turns` times around the ring, then every link at `k_low`.
    pub fn conveyor(
        n_wells: usize,
        k_low: f64,
        k_high: f64,
        start_well: usize,
        direction: Direction,
        n_turns: usize,
        mode: ConveyorMode,
    ) -> Result<Self> {
        if !(k_low >= 0.0) || !(k_high >= k_low) || !k_high.is_finite() {
            return Err(Error::param(
                "k_high",
                format!("need 0 <= k_low <= k_high, got k_low = {k_low}, k_high = {k_high}"),
            ));
        }
        if start_well >= n_wells {
            return Err(Error::param("start_well", format!("out of range: {start_well}")));
        }
        match &mode {
            ConveyorMode::OpenLoop { durations } => {
                if durations.is_empty() && n_turns > 0 {
                    return Err(Error::param("durations", "open-loop mode needs durations"));
                }
                if durations.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
                    return Err(Error::param("durations", "durations must be positive"));
                }
            }
            ConveyorMode::Feedback { floor, timeout } => {
                if !(*floor > 0.0) || !(*timeout > 0.0) {
                    return Err(Error::param("floor", "floor and timeout must be positive"));
                }
            }
        }
        if k_high == k_low {
            log::warn!("conveyor with k_high == k_low is a constant schedule");
        }
        Ok(CouplingSchedule::Conveyor(Conveyor {
            n_wells,
            k_low,
            k_high,
            start_well,
            direction,
            transfers: n_turns * n_wells,
            mode,
        }))
    }

    fn check_link(&self, link: usize) -> Result<()> {
        if link >= self.n_wells() {
            return Err(Error::param(
                "link",
                format!("index {link} out of range for {} wells", self.n_wells()),
            ));
        }
        Ok(())
    }

    pub fn n_wells(&self) -> usize {
        match self {
            CouplingSchedule::Constant { n_wells, .. } | CouplingSchedule::Resonant { n_wells, .. } => *n_wells,
            CouplingSchedule::Stopped { base, .. }
            | CouplingSchedule::CutLink { base, .. }
            | CouplingSchedule::Bottleneck { base, .. } => base.n_wells(),
            CouplingSchedule::Conveyor(c) => c.n_wells,
        }
    }

    /// Coupling vector at time `t`. Feedback conveyors report their first
    /// segment here; use a [`ScheduleDriver`] to follow them in time.
    pub fn couplings(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_wells()];
        self.fill(t, t, 0, &mut out);
        out
    }

    fn fill(&self, piece_time: f64, t: f64, feedback_segment: usize, out: &mut [f64]) {
        match self {
            CouplingSchedule::Constant { k, .. } => out.fill(*k),
            CouplingSchedule::Resonant {
                k_tilde,
                depth,
                omega,
                phi,
                ..
            } => {
                let s = depth * (omega * t + phi).sin();
                for (i, k) in out.iter_mut().enumerate() {
                    // wells counted from 1: i = 0 is odd
                    let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
                    *k = k_tilde * (1.0 + sign * s);
                }
            }
            CouplingSchedule::Stopped { base, t_stop, k_after } => {
                if piece_time >= *t_stop {
                    out.fill(*k_after);
                } else {
                    base.fill(piece_time, t, feedback_segment, out);
                }
            }
            CouplingSchedule::CutLink { base, link, t_cut } => {
                base.fill(piece_time, t, feedback_segment, out);
                if piece_time >= *t_cut {
                    out[*link] = 0.0;
                }
            }
            CouplingSchedule::Bottleneck { base, link, factor } => {
                base.fill(piece_time, t, feedback_segment, out);
                out[*link] *= factor;
            }
            CouplingSchedule::Conveyor(c) => {
                let segment = match c.mode {
                    ConveyorMode::OpenLoop { .. } => c
                        .open_loop_switch_times()
                        .iter()
                        .take_while(|&&s| s <= piece_time)
                        .count(),
                    ConveyorMode::Feedback { .. } => feedback_segment,
                };
                c.fill(segment, out);
            }
        }
    }

    /// Times (ascending, finite) at which the coupling vector jumps.
    pub fn discontinuities(&self) -> Vec<f64> {
        let mut times = match self {
            CouplingSchedule::Constant { .. } | CouplingSchedule::Resonant { .. } => Vec::new(),
            CouplingSchedule::Stopped { base, t_stop, .. } => {
                let mut v: Vec<f64> = base.discontinuities().into_iter().filter(|t| t < t_stop).collect();
                v.push(*t_stop);
                v
            }
            CouplingSchedule::CutLink { base, t_cut, .. } => {
                let mut v = base.discontinuities();
                v.push(*t_cut);
                v
            }
            CouplingSchedule::Bottleneck { base, .. } => base.discontinuities(),
            CouplingSchedule::Conveyor(c) => c.open_loop_switch_times(),
        };
        times.retain(|t| t.is_finite());
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    fn conveyor_part(&self) -> Option<&Conveyor> {
        match self {
            CouplingSchedule::Conveyor(c) => Some(c),
            CouplingSchedule::Stopped { base, .. }
            | CouplingSchedule::CutLink { base, .. }
            | CouplingSchedule::Bottleneck { base, .. } => base.conveyor_part(),
            _ => None,
        }
    }

    /// Human-readable one-line description.
    pub fn describe(&self) -> String {
        match self {
            CouplingSchedule::Constant { k, .. } => format!("constant K = {k}"),
            CouplingSchedule::Resonant {
                k_tilde,
                depth,
                omega,
                phi,
                ..
            } => format!("resonant K_i = {k_tilde} (1 + (-1)^i {depth} sin({omega} t + {phi}))"),
            CouplingSchedule::Stopped { base, t_stop, k_after } => {
                format!("{} until t = {t_stop}, then constant {k_after}", base.describe())
            }
            CouplingSchedule::CutLink { base, link, t_cut } => {
                format!("{} with link {} cut at t = {t_cut}", base.describe(), link + 1)
            }
            CouplingSchedule::Bottleneck { base, link, factor } => {
                format!("{} with link {} scaled by {factor}", base.describe(), link + 1)
            }
            CouplingSchedule::Conveyor(c) => format!(
                "conveyor {:?} from well {}, {} transfers, K_low = {}, K_high = {}, {:?}",
                c.direction,
                c.start_well + 1,
                c.transfers,
                c.k_low,
                c.k_high,
                c.mode
            ),
        }
    }

    pub fn driver<'a>(&'a self, params: &ModelParams) -> ScheduleDriver<'a> {
        ScheduleDriver::new(self, params)
    }
}

/// Closed-form linear resonance used for the drive, in units of `omega_R`:
/// `sqrt(3 U N_T k + 2 k^2) / omega_R = sqrt(6 Lambda + 2) / 2`.
/// Only stated for four wells.
pub fn resonance_frequency(params: &ModelParams) -> Result<f64> {
    if params.n_wells() != 4 {
        return Err(Error::FormulaDomain(params.n_wells()));
    }
    let k = params.k_tilde();
    let w = (3.0 * params.u() * params.total_atoms() * k + 2.0 * k * k).sqrt();
    Ok(w / params.omega_r())
}

/// A coupling switch that happened during a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleEvent {
    /// In units of `1/omega_R`.
    pub time: f64,
    /// Index of the transfer that just finished.
    pub segment: usize,
    pub populations: Vec<f64>,
}

#[derive(Debug, Clone)]
struct FeedbackState {
    segment: usize,
    segment_start: f64,
    armed: bool,
    floor: f64,
    timeout: f64,
}

/// Per-run evaluator of a schedule. Holds the feedback state of conveyor
/// schedules and records switch events.
#[derive(Debug, Clone)]
pub struct ScheduleDriver<'a> {
    schedule: &'a CouplingSchedule,
    discontinuities: Vec<f64>,
    feedback: Option<FeedbackState>,
    open_loop: Vec<f64>,
    next_open_loop: usize,
    events: Vec<ScheduleEvent>,
}

impl<'a> ScheduleDriver<'a> {
    fn new(schedule: &'a CouplingSchedule, params: &ModelParams) -> Self {
        let conveyor = schedule.conveyor_part();
        let feedback = conveyor.and_then(|c| match c.mode {
            ConveyorMode::Feedback { floor, timeout } => Some(FeedbackState {
                segment: 0,
                segment_start: 0.0,
                armed: false,
                // currents are per raw time; convert to per 1/omega_R
                floor: floor * params.total_atoms(),
                timeout,
            }),
            ConveyorMode::OpenLoop { .. } => None,
        });
        let open_loop = conveyor.map(|c| c.open_loop_switch_times()).unwrap_or_default();
        Self {
            schedule,
            discontinuities: schedule.discontinuities(),
            feedback,
            open_loop,
            next_open_loop: 0,
            events: Vec::new(),
        }
    }

    pub fn schedule(&self) -> &CouplingSchedule {
        self.schedule
    }

    /// Couplings for a stage at time `t` within a step that started at `piece_time`.
    pub fn couplings(&self, piece_time: f64, t: f64, out: &mut [f64]) {
        let segment = self.feedback.as_ref().map_or(0, |f| f.segment);
        self.schedule.fill(piece_time, t, segment, out);
    }

    /// First known discontinuity strictly after `t`.
    pub fn next_discontinuity(&self, t: f64) -> Option<f64> {
        self.discontinuities.iter().copied().find(|&d| d > t)
    }

    /// Called after each accepted step. Returns `true` when the couplings
    /// switched at `t` so the caller must restart its derivative cache.
    pub fn observe(&mut self, t: f64, psi: &[Complex64], params: &ModelParams) -> Result<bool> {
        if let Some(c) = self.schedule.conveyor_part() {
            if let Some(fb) = self.feedback.as_mut() {
                if fb.segment >= c.transfers {
                    return Ok(false);
                }
                let link = c.active_link(fb.segment);
                let mut k = vec![0.0; psi.len()];
                c.fill(fb.segment, &mut k);
                // flow per 1/omega_R towards the destination well
                let flow = current_unchecked(psi, &k, link) / params.omega_r() * c.direction.sign() as f64;
                if !fb.armed && flow >= fb.floor {
                    fb.armed = true;
                }
                if fb.armed && flow <= 0.0 {
                    self.events.push(ScheduleEvent {
                        time: t,
                        segment: fb.segment,
                        populations: psi.iter().map(|a| a.norm_sqr()).collect(),
                    });
                    fb.segment += 1;
                    fb.segment_start = t;
                    fb.armed = false;
                    return Ok(true);
                }
                if t - fb.segment_start > fb.timeout {
                    return Err(Error::StalledTransfer {
                        segment: fb.segment,
                        started: fb.segment_start,
                        timeout: fb.timeout,
                    });
                }
                return Ok(false);
            }
            let mut switched = false;
            while self.next_open_loop < self.open_loop.len() && t >= self.open_loop[self.next_open_loop] {
                self.events.push(ScheduleEvent {
                    time: t,
                    segment: self.next_open_loop,
                    populations: psi.iter().map(|a| a.norm_sqr()).collect(),
                });
                self.next_open_loop += 1;
                switched = true;
            }
            return Ok(switched);
        }
        Ok(false)
    }

    /// Number of finished conveyor transfers.
    pub fn completed_transfers(&self) -> usize {
        self.events.len()
    }

    pub fn events(&self) -> &[ScheduleEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<ScheduleEvent> {
        self.events
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Interaction;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn params(lambda: f64) -> ModelParams {
        ModelParams::new(4, 1e5, 0.5, Interaction::Lambda(lambda)).unwrap()
    }

    #[test]
    fn constant() {
        let s = CouplingSchedule::constant(4, 0.5).unwrap();
        assert_eq!(s.couplings(0.0), vec![0.5; 4]);
        assert_eq!(s.couplings(17.3), s.couplings(0.0));
        assert!(s.discontinuities().is_empty());
        assert_eq!(CouplingSchedule::constant(4, 0.0).unwrap().couplings(1.0), vec![0.0; 4]);
        assert!(CouplingSchedule::constant(4, -0.1).is_err());
    }

    #[test]
    fn resonant_values() {
        let p = params(500.0);
        let s = CouplingSchedule::resonant(&p, 1.0, 3.0, 0.0).unwrap();
        assert_eq!(s.couplings(0.0), vec![0.5; 4]);
        let s = CouplingSchedule::resonant(&p, 1.0, 3.0, PI / 2.0).unwrap();
        let k = s.couplings(0.0);
        let expected = [0.0, 1.0, 0.0, 1.0];
        for (a, b) in k.iter().zip(expected) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        assert!(CouplingSchedule::resonant(&p, 1.5, 3.0, 0.0).is_err());
        assert!(CouplingSchedule::resonant(&p, -0.1, 3.0, 0.0).is_err());
    }

    #[test]
    fn zero_depth_is_constant() {
        let p = params(500.0);
        let s = CouplingSchedule::resonant(&p, 0.0, 27.4, 0.3).unwrap();
        for t in [0.0, 0.1, 1.7, 33.0] {
            assert_eq!(s.couplings(t), vec![0.5; 4]);
        }
    }

    #[test]
    fn stopped_modulation() {
        let p = params(500.0);
        let s = CouplingSchedule::resonant(&p, 1.0, 27.4, 0.0)
            .unwrap()
            .stop_at(4.0, 0.5)
            .unwrap();
        assert_eq!(s.couplings(4.0), vec![0.5; 4]);
        assert_eq!(s.couplings(10.0), vec![0.5; 4]);
        assert_ne!(s.couplings(3.9), vec![0.5; 4]);
        assert_eq!(s.discontinuities(), vec![4.0]);
    }

    #[test]
    fn resonance_formula() {
        assert_relative_eq!(
            resonance_frequency(&params(500.0)).unwrap(),
            3002f64.sqrt() / 2.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(resonance_frequency(&params(500.0)).unwrap(), 27.3953, epsilon = 1e-4);
        assert_relative_eq!(
            resonance_frequency(&params(0.0)).unwrap(),
            2f64.sqrt() / 2.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(resonance_frequency(&params(100.0)).unwrap(), 12.2678, epsilon = 1e-4);
        let five = ModelParams::new(5, 1e5, 0.5, Interaction::Lambda(1.0)).unwrap();
        assert_eq!(resonance_frequency(&five), Err(Error::FormulaDomain(5)));
    }

    #[test]
    fn cut_link() {
        let base = CouplingSchedule::constant(4, 0.5).unwrap();
        let cut = base.clone().cut_link(3, 0.5).unwrap();
        assert_eq!(cut.couplings(0.49), vec![0.5; 4]);
        assert_eq!(cut.couplings(0.5), vec![0.5, 0.5, 0.5, 0.0]);
        assert_eq!(cut.discontinuities(), vec![0.5]);
        let never = base.clone().cut_link(3, f64::INFINITY).unwrap();
        assert_eq!(never.couplings(1e9), base.couplings(1e9));
        assert!(never.discontinuities().is_empty());
        let twice = cut.clone().cut_link(3, 0.5).unwrap();
        for t in [0.0, 0.5, 3.0] {
            assert_eq!(twice.couplings(t), cut.couplings(t));
        }
        assert!(base.cut_link(4, 1.0).is_err());
    }

    #[test]
    fn bottleneck() {
        let base = CouplingSchedule::constant(4, 0.5).unwrap();
        let b = base.clone().bottleneck(0, 1.2).unwrap();
        assert_eq!(b.couplings(0.0), vec![0.5 * 1.2, 0.5, 0.5, 0.5]);
        assert_eq!(
            base.clone().bottleneck(0, 1.0).unwrap().couplings(2.0),
            base.couplings(2.0)
        );
        assert!(base.clone().bottleneck(0, 0.0).is_err());
        assert!(base.bottleneck(0, -1.0).is_err());
    }

    #[test]
    fn conveyor_open_loop_rotation() {
        let s = CouplingSchedule::conveyor(
            4,
            0.5,
            50.0,
            0,
            Direction::Forward,
            2,
            ConveyorMode::OpenLoop { durations: vec![1.0] },
        )
        .unwrap();
        assert_eq!(s.discontinuities().len(), 8);
        for seg in 0..8 {
            let k = s.couplings(seg as f64 + 0.5);
            let active: Vec<usize> = (0..4).filter(|&i| k[i] == 50.0).collect();
            assert_eq!(active, vec![seg % 4]);
        }
        assert_eq!(s.couplings(8.5), vec![0.5; 4]);

        let back = CouplingSchedule::conveyor(
            4,
            0.5,
            50.0,
            2,
            Direction::Backward,
            1,
            ConveyorMode::OpenLoop { durations: vec![1.0] },
        )
        .unwrap();
        let links: Vec<usize> = (0..4)
            .map(|seg| {
                let k = back.couplings(seg as f64 + 0.5);
                k.iter().position(|&x| x == 50.0).unwrap()
            })
            .collect();
        // wells 2 -> 1 -> 0 -> 3 -> 2 use links 1, 0, 3, 2
        assert_eq!(links, vec![1, 0, 3, 2]);
    }

    #[test]
    fn degenerate_conveyor_is_constant() {
        let s = CouplingSchedule::conveyor(4, 0.5, 0.5, 0, Direction::Forward, 1, ConveyorMode::feedback()).unwrap();
        if let CouplingSchedule::Conveyor(c) = &s {
            assert!(c.is_degenerate());
        }
        assert_eq!(s.couplings(3.0), vec![0.5; 4]);
        assert!(CouplingSchedule::conveyor(4, 1.0, 0.5, 0, Direction::Forward, 1, ConveyorMode::feedback()).is_err());
    }

    #[test]
    fn zero_turn_conveyor_rests_low() {
        let s = CouplingSchedule::conveyor(4, 0.5, 50.0, 0, Direction::Forward, 0, ConveyorMode::feedback()).unwrap();
        assert_eq!(s.couplings(0.0), vec![0.5; 4]);
    }

    #[test]
    fn piece_selection_uses_step_start() {
        let p = params(100.0);
        let s = CouplingSchedule::constant(4, 0.5).unwrap().cut_link(0, 1.0).unwrap();
        let d = s.driver(&p);
        let mut k = [0.0; 4];
        // last stage of the step ending at the cut still sees the uncut link
        d.couplings(0.9, 1.0, &mut k);
        assert_eq!(k[0], 0.5);
        d.couplings(1.0, 1.0, &mut k);
        assert_eq!(k[0], 0.0);
        assert_eq!(d.next_discontinuity(0.2), Some(1.0));
        assert_eq!(d.next_discontinuity(1.0), None);
    }
}
