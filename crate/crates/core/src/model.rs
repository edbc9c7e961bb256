//! State and parameter types for the ring of wells, the coupled-mode
//! equations of motion in complex and polar form, and the derived
//! observables (populations, link currents, energy, winding number).
//!
//! Units: hbar = 1, energies in the same units as `k_tilde`, and the
//! characteristic frequency is `omega_R = 2 * k_tilde`. Right-hand sides
//! are returned per unit of raw time; the integrator rescales them to the
//! `1/omega_R` time axis used everywhere else.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this total atom count the mean-field phase description is
/// questionable; construction still succeeds but a warning is raised.
pub const MIN_COHERENT_ATOMS: f64 = 1e3;

/// How the interaction strength is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interaction {
    /// Dimensionless nonlinearity `U * N_T / (2 * k_tilde)`.
    Lambda(f64),
    /// On-site interaction energy per atom.
    U(f64),
}

/// Validated, fully derived model parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    n_wells: usize,
    total_atoms: f64,
    k_tilde: f64,
    lambda: f64,
    u: f64,
    offsets: Vec<f64>,
    low_atom_warning: bool,
}

impl ModelParams {
    /// Builds parameters with zero well offsets.
    pub fn new(n_wells: usize, total_atoms: f64, k_tilde: f64, interaction: Interaction) -> Result<Self> {
        Self::with_offsets(n_wells, total_atoms, k_tilde, interaction, vec![0.0; n_wells])
    }

    pub fn with_offsets(
        n_wells: usize,
        total_atoms: f64,
        k_tilde: f64,
        interaction: Interaction,
        offsets: Vec<f64>,
    ) -> Result<Self> {
        if n_wells < 3 {
            return Err(Error::RingTooSmall(n_wells));
        }
        if !(k_tilde > 0.0 && k_tilde.is_finite()) {
            return Err(Error::param("k_tilde", format!("must be positive, got {k_tilde}")));
        }
        if !(total_atoms > 0.0 && total_atoms.is_finite()) {
            return Err(Error::param(
                "total_atoms",
                format!("must be positive, got {total_atoms}"),
            ));
        }
        if offsets.len() != n_wells {
            return Err(Error::Dimension {
                what: "well energy offsets",
                expected: n_wells,
                got: offsets.len(),
            });
        }
        if offsets.iter().any(|e| !e.is_finite()) {
            return Err(Error::param("e0", "offsets must be finite"));
        }
        let (lambda, u) = match interaction {
            Interaction::Lambda(lambda) => (lambda, 2.0 * lambda * k_tilde / total_atoms),
            Interaction::U(u) => (u * total_atoms / (2.0 * k_tilde), u),
        };
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::param("lambda", format!("must be finite and >= 0, got {lambda}")));
        }
        let low_atom_warning = total_atoms < MIN_COHERENT_ATOMS;
        if low_atom_warning {
            log::warn!("N_T = {total_atoms} is below ~{MIN_COHERENT_ATOMS}: phase fluctuations are not negligible");
        }
        Ok(Self {
            n_wells,
            total_atoms,
            k_tilde,
            lambda,
            u,
            offsets,
            low_atom_warning,
        })
    }

    pub fn n_wells(&self) -> usize {
        self.n_wells
    }

    pub fn total_atoms(&self) -> f64 {
        self.total_atoms
    }

    pub fn k_tilde(&self) -> f64 {
        self.k_tilde
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    /// Per-well ground-state energy offsets `E_i^0`.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// `omega_R = 2 * k_tilde` (hbar = 1).
    pub fn omega_r(&self) -> f64 {
        2.0 * self.k_tilde
    }

    /// Set when `N_T` is below the coherent-phase bound.
    pub fn low_atom_warning(&self) -> bool {
        self.low_atom_warning
    }

    /// Same model with a different nonlinearity, keeping `N_T` and `k_tilde`.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::with_offsets(
            self.n_wells,
            self.total_atoms,
            self.k_tilde,
            Interaction::Lambda(lambda),
            self.offsets.clone(),
        )
    }

    fn check_couplings(&self, couplings: &[f64]) -> Result<()> {
        if couplings.len() != self.n_wells {
            return Err(Error::Dimension {
                what: "coupling vector",
                expected: self.n_wells,
                got: couplings.len(),
            });
        }
        Ok(())
    }

    fn check_len(&self, what: &'static str, got: usize) -> Result<()> {
        if got != self.n_wells {
            return Err(Error::Dimension {
                what,
                expected: self.n_wells,
                got,
            });
        }
        Ok(())
    }
}

/// Complex amplitude per well, `|psi_i|^2 = N_i`, at a time in units of `1/omega_R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingState {
    amplitudes: Vec<Complex64>,
    time: f64,
}

impl RingState {
    pub fn new(amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        if amplitudes.len() < 3 {
            return Err(Error::RingTooSmall(amplitudes.len()));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !(norm > 0.0) {
            return Err(Error::InvalidState("total population must be positive".into()));
        }
        if !time.is_finite() {
            return Err(Error::InvalidState("non-finite time".into()));
        }
        Ok(Self { amplitudes, time })
    }

    /// `psi_i = sqrt(N_i) * exp(i theta_i)`.
    pub fn from_polar(populations: &[f64], phases: &[f64], time: f64) -> Result<Self> {
        if populations.len() != phases.len() {
            return Err(Error::Dimension {
                what: "phases",
                expected: populations.len(),
                got: phases.len(),
            });
        }
        if populations.iter().any(|&n| !(n >= 0.0) || !n.is_finite()) {
            return Err(Error::InvalidState("populations must be finite and >= 0".into()));
        }
        let amplitudes = populations
            .iter()
            .zip(phases)
            .map(|(&n, &theta)| Complex64::from_polar(n.sqrt(), theta))
            .collect();
        Self::new(amplitudes, time)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn n_wells(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Instantaneous phases in `(-pi, pi]`.
    pub fn phases(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| principal_angle(a.arg())).collect()
    }

    pub fn total(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn to_polar(&self) -> PolarState {
        PolarState {
            populations: self.populations(),
            phases: self.phases(),
        }
    }

    /// Multiplies every amplitude by `exp(i alpha)`.
    pub fn gauge_rotated(&self, alpha: f64) -> Self {
        let factor = Complex64::from_polar(1.0, alpha);
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
            time: self.time,
        }
    }

    /// Well `i` of the result holds well `i + shift` of `self`.
    pub fn rotated(&self, shift: usize) -> Self {
        let mut amplitudes = self.amplitudes.clone();
        amplitudes.rotate_left(shift % self.amplitudes.len());
        Self {
            amplitudes,
            time: self.time,
        }
    }

    pub fn conjugated(&self) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a.conj()).collect(),
            time: self.time,
        }
    }

    pub(crate) fn from_parts_unchecked(amplitudes: Vec<Complex64>, time: f64) -> Self {
        Self { amplitudes, time }
    }
}

/// Populations and phases of every well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    pub populations: Vec<f64>,
    pub phases: Vec<f64>,
}

impl PolarState {
    pub fn new(populations: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if populations.len() != phases.len() {
            return Err(Error::Dimension {
                what: "phases",
                expected: populations.len(),
                got: phases.len(),
            });
        }
        if populations.iter().any(|&n| !(n >= 0.0) || !n.is_finite()) {
            return Err(Error::InvalidState("populations must be finite and >= 0".into()));
        }
        Ok(Self { populations, phases })
    }

    pub fn to_ring(&self, time: f64) -> Result<RingState> {
        RingState::from_polar(&self.populations, &self.phases, time)
    }
}

/// `(dN_i/dt, dtheta_i/dt)` per unit of raw time.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarDerivative {
    pub populations: Vec<f64>,
    pub phases: Vec<f64>,
}

/// Snapshot of derived quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observables {
    pub populations: Vec<f64>,
    /// `theta_{i+1} - theta_i` reduced to `(-pi, pi]`.
    pub relative_phases: Vec<f64>,
    /// Flow from well `i` into well `i + 1`.
    pub currents: Vec<f64>,
    pub energy: f64,
    /// `None` when any well is empty.
    pub winding: Option<i64>,
}

impl Observables {
    pub fn evaluate(state: &RingState, params: &ModelParams, couplings: &[f64]) -> Result<Self> {
        params.check_len("state", state.n_wells())?;
        params.check_couplings(couplings)?;
        Ok(Self::evaluate_unchecked(state.amplitudes(), params, couplings))
    }

    pub(crate) fn evaluate_unchecked(psi: &[Complex64], params: &ModelParams, couplings: &[f64]) -> Self {
        let n = psi.len();
        let relative_phases = (0..n)
            .map(|i| principal_angle((psi[i].conj() * psi[(i + 1) % n]).arg()))
            .collect();
        Self {
            populations: psi.iter().map(|a| a.norm_sqr()).collect(),
            relative_phases,
            currents: currents_unchecked(psi, couplings),
            energy: energy_unchecked(psi, params, couplings),
            winding: winding_unchecked(psi).ok(),
        }
    }
}

/// Reduces an angle to `(-pi, pi]`.
pub fn principal_angle(x: f64) -> f64 {
    let mut r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// `d psi_i / dt = -i [ (E_i + U |psi_i|^2) psi_i - K_i psi_{i+1} - K_{i-1} psi_{i-1} ]`,
/// where `K_i` joins wells `i` and `i + 1` (indices mod `n_wells`).
pub fn rhs_complex(state: &RingState, params: &ModelParams, couplings: &[f64]) -> Result<Vec<Complex64>> {
    params.check_len("state", state.n_wells())?;
    params.check_couplings(couplings)?;
    let mut out = vec![Complex64::new(0.0, 0.0); state.n_wells()];
    rhs_complex_into(state.amplitudes(), params, couplings, &mut out);
    Ok(out)
}

#[inline]
pub(crate) fn rhs_complex_into(psi: &[Complex64], params: &ModelParams, couplings: &[f64], out: &mut [Complex64]) {
    let n = psi.len();
    let u = params.u;
    for i in 0..n {
        let next = (i + 1) % n;
        let prev = (i + n - 1) % n;
        let onsite = params.offsets[i] + u * psi[i].norm_sqr();
        let field = psi[i] * onsite - psi[next] * couplings[i] - psi[prev] * couplings[prev];
        // -i * field
        out[i] = Complex64::new(field.im, -field.re);
    }
}

/// Polar form of the equations of motion. Requires every population to be
/// strictly positive.
///
/// `dN_i/dt = -2 K_i sqrt(N_i N_{i+1}) sin(theta_{i+1} - theta_i)
///            + 2 K_{i-1} sqrt(N_{i-1} N_i) sin(theta_i - theta_{i-1})`
///
/// `dtheta_i/dt = K_i sqrt(N_{i+1}/N_i) cos(theta_{i+1} - theta_i)
///               + K_{i-1} sqrt(N_{i-1}/N_i) cos(theta_i - theta_{i-1}) - U N_i - E_i`
pub fn rhs_polar(state: &PolarState, params: &ModelParams, couplings: &[f64]) -> Result<PolarDerivative> {
    params.check_len("state", state.populations.len())?;
    params.check_couplings(couplings)?;
    if let Some((well, &population)) = state.populations.iter().enumerate().find(|(_, &p)| !(p > 0.0)) {
        return Err(Error::PolarSingularity { well, population });
    }
    let n = params.n_wells;
    let pops = &state.populations;
    let th = &state.phases;
    let mut d_pop = vec![0.0; n];
    let mut d_phase = vec![0.0; n];
    for i in 0..n {
        let next = (i + 1) % n;
        let prev = (i + n - 1) % n;
        let fwd = th[next] - th[i];
        let back = th[i] - th[prev];
        d_pop[i] = -2.0 * couplings[i] * (pops[i] * pops[next]).sqrt() * fwd.sin()
            + 2.0 * couplings[prev] * (pops[prev] * pops[i]).sqrt() * back.sin();
        d_phase[i] = couplings[i] * (pops[next] / pops[i]).sqrt() * fwd.cos()
            + couplings[prev] * (pops[prev] / pops[i]).sqrt() * back.cos()
            - params.u * pops[i]
            - params.offsets[i];
    }
    Ok(PolarDerivative {
        populations: d_pop,
        phases: d_phase,
    })
}

/// Conserved functional generating the complex equations of motion:
/// `H = sum_i [E_i N_i + U N_i^2 / 2] - sum_i 2 K_i Re(conj(psi_i) psi_{i+1})`.
pub fn energy(state: &RingState, params: &ModelParams, couplings: &[f64]) -> Result<f64> {
    params.check_len("state", state.n_wells())?;
    params.check_couplings(couplings)?;
    Ok(energy_unchecked(state.amplitudes(), params, couplings))
}

pub(crate) fn energy_unchecked(psi: &[Complex64], params: &ModelParams, couplings: &[f64]) -> f64 {
    let n = psi.len();
    let mut h = 0.0;
    for i in 0..n {
        let pop = psi[i].norm_sqr();
        h += params.offsets[i] * pop + 0.5 * params.u * pop * pop;
        h -= 2.0 * couplings[i] * (psi[i].conj() * psi[(i + 1) % n]).re;
    }
    h
}

/// Atoms per unit raw time flowing from well `link` into well `link + 1`:
/// `J_i = 2 K_i sqrt(N_i N_{i+1}) sin(theta_{i+1} - theta_i)`, so that
/// `dN_i/dt = J_{i-1} - J_i`.
pub fn link_current(state: &RingState, couplings: &[f64], link: usize) -> Result<f64> {
    let n = state.n_wells();
    if couplings.len() != n {
        return Err(Error::Dimension {
            what: "coupling vector",
            expected: n,
            got: couplings.len(),
        });
    }
    if link >= n {
        return Err(Error::param("link", format!("index {link} out of range for {n} wells")));
    }
    let psi = state.amplitudes();
    Ok(current_unchecked(psi, couplings, link))
}

pub fn link_currents(state: &RingState, couplings: &[f64]) -> Result<Vec<f64>> {
    (0..state.n_wells())
        .map(|i| link_current(state, couplings, i))
        .collect()
}

#[inline]
pub(crate) fn current_unchecked(psi: &[Complex64], couplings: &[f64], link: usize) -> f64 {
    let n = psi.len();
    2.0 * couplings[link] * (psi[link].conj() * psi[(link + 1) % n]).im
}

pub(crate) fn currents_unchecked(psi: &[Complex64], couplings: &[f64]) -> Vec<f64> {
    (0..psi.len()).map(|i| current_unchecked(psi, couplings, i)).collect()
}

/// `(1/2pi) * sum_i principal(theta_{i+1} - theta_i)`, rounded.
pub fn winding_number(state: &RingState) -> Result<i64> {
    winding_unchecked(state.amplitudes())
}

pub(crate) fn winding_unchecked(psi: &[Complex64]) -> Result<i64> {
    if let Some(i) = psi.iter().position(|a| a.norm_sqr() == 0.0) {
        return Err(Error::UndefinedWinding(i));
    }
    let n = psi.len();
    let total: f64 = (0..n)
        .map(|i| principal_angle((psi[i].conj() * psi[(i + 1) % n]).arg()))
        .sum();
    Ok((total / (2.0 * PI)).round() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(lambda: f64) -> ModelParams {
        ModelParams::new(4, 1e5, 0.5, Interaction::Lambda(lambda)).unwrap()
    }

    fn uniform(nt: f64, phases: [f64; 4]) -> RingState {
        RingState::from_polar(&[nt / 4.0; 4], &phases, 0.0).unwrap()
    }

    #[test]
    fn lambda_and_u_are_mutually_derived() {
        let p = params(500.0);
        assert_relative_eq!(p.u(), 5.0e-3, max_relative = 1e-15);
        let q = ModelParams::new(4, 1e5, 0.5, Interaction::U(5e-3)).unwrap();
        assert_relative_eq!(q.lambda(), 500.0, max_relative = 1e-15);
        assert_eq!(p.omega_r(), 1.0);
        assert!(!p.low_atom_warning());
    }

    #[test]
    fn low_atom_count_warns_but_succeeds() {
        let p = ModelParams::new(4, 500.0, 0.5, Interaction::Lambda(100.0)).unwrap();
        assert!(p.low_atom_warning());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(matches!(
            ModelParams::new(4, 1e5, 0.0, Interaction::Lambda(1.0)),
            Err(Error::InvalidParameter { name: "k_tilde", .. })
        ));
        assert!(matches!(
            ModelParams::new(4, -1.0, 0.5, Interaction::Lambda(1.0)),
            Err(Error::InvalidParameter {
                name: "total_atoms",
                ..
            })
        ));
        assert!(matches!(
            ModelParams::new(2, 1e5, 0.5, Interaction::Lambda(1.0)),
            Err(Error::RingTooSmall(2))
        ));
    }

    #[test]
    fn uniform_state_rotates_uniformly() {
        let p = params(100.0);
        let s = uniform(1e5, [0.0; 4]);
        let d = rhs_complex(&s, &p, &[0.5; 4]).unwrap();
        let rate = p.u() * 1e5 / 4.0 - 2.0 * 0.5;
        for (di, psi) in d.iter().zip(s.amplitudes()) {
            let expected = Complex64::new(0.0, -rate) * psi;
            assert_relative_eq!(di.re, expected.re, epsilon = 1e-9);
            assert_relative_eq!(di.im, expected.im, epsilon = 1e-9);
            // population derivative 2 Re(conj(psi) dpsi)
            assert!((psi.conj() * di).re.abs() < 1e-9);
        }
    }

    #[test]
    fn decoupled_single_well() {
        let p = ModelParams::with_offsets(4, 1e5, 0.5, Interaction::Lambda(100.0), vec![0.3, 0.0, 0.0, 0.0]).unwrap();
        let s = RingState::from_polar(&[1e5, 0.0, 0.0, 0.0], &[0.0; 4], 0.0).unwrap();
        let d = rhs_complex(&s, &p, &[0.0; 4]).unwrap();
        let psi = s.amplitudes()[0];
        let expected = Complex64::new(0.0, -(0.3 + p.u() * 1e5)) * psi;
        assert_relative_eq!(d[0].im, expected.im, max_relative = 1e-14);
        assert_eq!(d[0].re, 0.0);
        assert!(d[1..].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn quarter_turn_winding_is_stationary() {
        let p = params(100.0);
        let s = uniform(1e5, [PI / 2.0, PI, 1.5 * PI, 2.0 * PI]);
        let d = rhs_complex(&s, &p, &[0.5; 4]).unwrap();
        for (di, psi) in d.iter().zip(s.amplitudes()) {
            assert!((psi.conj() * di).re.abs() < 1e-9);
        }
        let polar = rhs_polar(&s.to_polar(), &p, &[0.5; 4]).unwrap();
        for (i, (dn, dth)) in polar.populations.iter().zip(&polar.phases).enumerate() {
            assert!(dn.abs() < 1e-9, "well {i}");
            assert_relative_eq!(*dth, -p.u() * 1e5 / 4.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn polar_uniform_in_phase() {
        let p = params(100.0);
        let s = uniform(1e5, [0.0; 4]);
        let d = rhs_polar(&s.to_polar(), &p, &[0.5; 4]).unwrap();
        for (dn, dth) in d.populations.iter().zip(&d.phases) {
            assert_eq!(*dn, 0.0);
            assert_relative_eq!(*dth, 2.0 * 0.5 - p.u() * 1e5 / 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn polar_rejects_empty_wells() {
        let p = params(100.0);
        let s = PolarState::new(vec![1e5, 0.0, 0.0, 0.0], vec![0.0; 4]).unwrap();
        assert!(matches!(
            rhs_polar(&s, &p, &[0.5; 4]),
            Err(Error::PolarSingularity { well: 1, .. })
        ));
    }

    #[test]
    fn coupling_length_is_checked() {
        let p = params(100.0);
        let s = uniform(1e5, [0.0; 4]);
        assert!(matches!(
            rhs_complex(&s, &p, &[0.5; 3]),
            Err(Error::Dimension {
                expected: 4,
                got: 3,
                ..
            })
        ));
    }

    #[test]
    fn energy_closed_forms() {
        let p = params(100.0);
        let single = RingState::from_polar(&[1e5, 0.0, 0.0, 0.0], &[0.0; 4], 0.0).unwrap();
        assert_relative_eq!(
            energy(&single, &p, &[0.0; 4]).unwrap(),
            p.u() * 1e10 / 2.0,
            max_relative = 1e-14
        );
        let s = uniform(1e5, [0.0; 4]);
        assert_relative_eq!(
            energy(&s, &p, &[0.5; 4]).unwrap(),
            p.u() * 1e10 / 8.0 - 2.0 * 0.5 * 1e5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn currents() {
        let s = uniform(1e5, [0.0; 4]);
        assert!(link_currents(&s, &[0.5; 4]).unwrap().iter().all(|j| *j == 0.0));

        let w = uniform(1e5, [PI / 2.0, PI, 1.5 * PI, 2.0 * PI]);
        for j in link_currents(&w, &[0.5; 4]).unwrap() {
            assert_relative_eq!(j, 2.0 * 0.5 * 1e5 / 4.0, max_relative = 1e-12);
        }
        assert!(link_current(&w, &[0.5; 4], 4).is_err());
    }

    #[test]
    fn winding_examples() {
        let flat = uniform(1e5, [0.3; 4]);
        assert_eq!(winding_number(&flat).unwrap(), 0);
        let plus = uniform(1e5, [PI / 2.0, PI, 1.5 * PI, 2.0 * PI]);
        assert_eq!(winding_number(&plus).unwrap(), 1);
        let minus = uniform(1e5, [-PI / 2.0, -PI, -1.5 * PI, -2.0 * PI]);
        assert_eq!(winding_number(&minus).unwrap(), -1);
        let empty = RingState::from_polar(&[1e5, 0.0, 1.0, 1.0], &[0.0; 4], 0.0).unwrap();
        assert_eq!(winding_number(&empty), Err(Error::UndefinedWinding(1)));
    }

    #[test]
    fn principal_branch_includes_pi() {
        assert_eq!(principal_angle(PI), PI);
        assert_eq!(principal_angle(-PI), PI);
        assert_relative_eq!(principal_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn state_invariants() {
        assert!(RingState::new(vec![Complex64::new(0.0, 0.0); 4], 0.0).is_err());
        assert!(RingState::new(vec![Complex64::new(f64::NAN, 0.0); 4], 0.0).is_err());
        assert!(RingState::new(vec![Complex64::new(1.0, 0.0); 2], 0.0).is_err());
    }
}
