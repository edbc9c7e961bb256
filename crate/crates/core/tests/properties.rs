use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use ringbec::analysis::{crosscorr_lag, detect_sign_change, dominant_frequency, Window};
use ringbec::drives::{ConveyorMode, CouplingSchedule, Direction};
use ringbec::integrator::{integrate, IntegratorOptions};
use ringbec::model::{energy, link_currents, rhs_complex, rhs_polar, Interaction, ModelParams, RingState};
use ringbec::validate::{polar_from_complex, polar_mismatch};

const N_T: f64 = 1e5;

fn params(lambda: f64) -> ModelParams {
    ModelParams::new(4, N_T, 0.5, Interaction::Lambda(lambda)).unwrap()
}

/// Four populations summing to `N_T`, each above `1e-3 N_T`.
fn populations() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 4).prop_map(|w| {
        let sum: f64 = w.iter().sum::<f64>() + 1e-12;
        let floor = 1e-3 * N_T;
        w.iter().map(|x| floor + (N_T - 4.0 * floor) * x / sum).collect()
    })
}

fn phases() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-PI..PI, 4)
}

fn couplings() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..2.0, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn population_derivatives_sum_to_zero(n in populations(), th in phases(), k in couplings(), lambda in 0.0f64..500.0) {
        let p = params(lambda);
        let s = RingState::from_polar(&n, &th, 0.0).unwrap();
        let d = polar_from_complex(s.amplitudes(), &rhs_complex(&s, &p, &k).unwrap());
        let total: f64 = d.populations.iter().sum();
        let scale: f64 = d.populations.iter().map(|x| x.abs()).sum::<f64>() + 1.0;
        prop_assert!(total.abs() < 1e-12 * scale);
    }

    #[test]
    fn continuity_through_link_currents(n in populations(), th in phases(), k in couplings()) {
        let p = params(100.0);
        let s = RingState::from_polar(&n, &th, 0.0).unwrap();
        let d = polar_from_complex(s.amplitudes(), &rhs_complex(&s, &p, &k).unwrap());
        let j = link_currents(&s, &k).unwrap();
        for i in 0..4 {
            let expected = j[(i + 3) % 4] - j[i];
            prop_assert!((d.populations[i] - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn polar_form_matches_complex(n in populations(), th in phases(), k in couplings(), lambda in 0.0f64..500.0) {
        let p = params(lambda);
        let s = RingState::from_polar(&n, &th, 0.0).unwrap();
        let direct = rhs_polar(&s.to_polar(), &p, &k).unwrap();
        let via = polar_from_complex(s.amplitudes(), &rhs_complex(&s, &p, &k).unwrap());
        prop_assert!(polar_mismatch(&direct, &via) < 1e-10);
    }

    #[test]
    fn rhs_is_gauge_covariant(n in populations(), th in phases(), k in couplings(), alpha in -PI..PI) {
        let p = params(100.0);
        let s = RingState::from_polar(&n, &th, 0.0).unwrap();
        let rotated = rhs_complex(&s.gauge_rotated(alpha), &p, &k).unwrap();
        let base = rhs_complex(&s, &p, &k).unwrap();
        let phase = Complex64::from_polar(1.0, alpha);
        for (a, b) in rotated.iter().zip(&base) {
            prop_assert!((a - b * phase).norm() <= 1e-9 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn energy_is_gauge_and_rotation_invariant(n in populations(), th in phases(), alpha in -PI..PI, shift in 0usize..4) {
        let p = params(100.0);
        let k = [0.5; 4];
        let s = RingState::from_polar(&n, &th, 0.0).unwrap();
        let h = energy(&s, &p, &k).unwrap();
        prop_assert!((energy(&s.gauge_rotated(alpha), &p, &k).unwrap() - h).abs() <= 1e-9 * h.abs());
        prop_assert!((energy(&s.rotated(shift), &p, &k).unwrap() - h).abs() <= 1e-9 * h.abs());
    }

    #[test]
    fn norm_conserved_over_short_runs(n in populations(), th in phases(), lambda in 0.0f64..300.0, factor in 0.5f64..2.0) {
        let p = params(lambda);
        let s = RingState::from_polar(&n, &th, 0.0).unwrap();
        let sched = CouplingSchedule::constant(4, 0.5).unwrap().bottleneck(2, factor).unwrap();
        let opts = IntegratorOptions::default().with_max_time(1.0).with_sample_interval(0.1);
        let traj = integrate(&s, &p, &sched, &opts).unwrap();
        prop_assert!(traj.stats.max_norm_drift < 1e-10);
        prop_assert!(traj.relative_energy_drift() < 1e-9);
    }

    #[test]
    fn zero_depth_modulation_is_constant(t in 0.0f64..100.0, omega in 0.1f64..50.0, phi in -PI..PI) {
        let p = params(100.0);
        let sched = CouplingSchedule::resonant(&p, 0.0, omega, phi).unwrap();
        prop_assert_eq!(sched.couplings(t), vec![0.5; 4]);
    }

    #[test]
    fn conveyor_links_rotate(start in 0usize..4, backward in any::<bool>(), turns in 1usize..4) {
        let direction = if backward { Direction::Backward } else { Direction::Forward };
        let sched = CouplingSchedule::conveyor(4, 0.5, 50.0, start, direction, turns, ConveyorMode::OpenLoop { durations: vec![1.0] }).unwrap();
        let CouplingSchedule::Conveyor(c) = &sched else { unreachable!() };
        prop_assert_eq!(c.transfers, 4 * turns);
        for seg in 0..c.transfers {
            let expected = if backward { (start + 4 * turns - seg - 1) % 4 } else { (start + seg) % 4 };
            prop_assert_eq!(c.active_link(seg), expected);
            let k = sched.couplings(seg as f64 + 0.5);
            prop_assert_eq!(k.iter().filter(|&&x| x == 50.0).count(), 1);
            prop_assert_eq!(k[expected], 50.0);
        }
        prop_assert_eq!(sched.couplings(c.transfers as f64 + 0.5), vec![0.5; 4]);
    }

    #[test]
    fn sign_change_ignores_positive_scale(offset in -5.0f64..5.0, scale in 1e-3f64..1e3) {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|x| (x - 5.0 - offset).sin()).collect();
        let w: Vec<f64> = v.iter().map(|x| x * scale).collect();
        let (a, b) = (detect_sign_change(&v, &t), detect_sign_change(&w, &t));
        match (a, b) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn crosscorr_is_antisymmetric(a in prop::collection::vec(-1.0f64..1.0, 32), b in prop::collection::vec(-1.0f64..1.0, 32)) {
        let ab = crosscorr_lag(&a, &b, None);
        let ba = crosscorr_lag(&b, &a, None);
        if let (Ok(ab), Ok(ba)) = (ab, ba) {
            prop_assert_eq!(ab, -ba);
        }
    }

    #[test]
    fn single_tone_frequency_within_quarter_bin(f in 0.5f64..20.0, phase in -PI..PI) {
        let t: Vec<f64> = (0..2048).map(|k| k as f64 * 0.01).collect();
        let v: Vec<f64> = t.iter().map(|x| (2.0 * PI * f * x + phase).sin()).collect();
        let est = dominant_frequency(&t, &v, Window::Hann).unwrap();
        prop_assert!((est.frequency - f).abs() < est.resolution / 4.0);
    }
}
