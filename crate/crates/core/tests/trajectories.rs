use approx::assert_relative_eq;
use beatlaser::harness::{
    hermiticity_residual, measured_growth_rate, photon_imag_residual, trajectory_deviation,
};
use beatlaser::{
    coherent_initial_state, duan_variance, propagate_exact, simulate, spectral_summary,
    summarize, total_photon_number, Cx, DriftSystem, DriftSystem32, Method, Moment,
    ModelParams, ModelParams32, ModelParams64, RunSettings, RunSettings64,
};
use proptest::prelude::*;

fn start() -> beatlaser::MomentState64 {
    coherent_initial_state(Cx::new(10.0, 0.0), Cx::new(-10.0, 0.0))
}

fn settings(method: Method) -> RunSettings64 {
    RunSettings {
        t_max: 10.0,
        dt: 1e-3,
        stride: 10,
        method,
    }
}

#[test]
fn rk4_matches_exact_propagation_and_stays_hermitian() {
    let sys = DriftSystem::from_params(&ModelParams64::default()).unwrap();
    let rk = simulate(&sys, &start(), &settings(Method::Rk4)).unwrap();
    let ex = simulate(&sys, &start(), &settings(Method::Exact)).unwrap();
    assert_eq!(rk.times, ex.times);
    assert!(trajectory_deviation(&rk, &ex) < 1e-6);
    assert!(hermiticity_residual(&rk) < 1e-8);
    assert!(photon_imag_residual(&rk) < 1e-8);
}

#[test]
fn decoupled_field_amplitude_is_analytic() {
    let p = ModelParams64 {
        p: 0.0,
        omega_abs: 0.0,
        phi: 0.0,
        ..ModelParams64::default()
    };
    let sys = DriftSystem::from_params(&p).unwrap();
    let a11 = Cx::new(-1.25, 1.25);
    for t in [1.0, 2.0, 5.0] {
        let s = propagate_exact(&sys, &start(), t).unwrap();
        let want = (-(a11 + 0.001) * t).exp() * 10.0;
        assert!(beatlaser::relative_error(s[Moment::M1], want) < 1e-8);
    }
}

#[test]
fn initial_identities() {
    let s = start();
    assert_relative_eq!(duan_variance(&s).unwrap(), 2.0, epsilon = 1e-12);
    assert_relative_eq!(total_photon_number(&s).unwrap(), 200.0, epsilon = 1e-12);
}

#[test]
fn late_time_growth_follows_leading_eigenvalue() {
    let sys = DriftSystem::from_params(&ModelParams64::default()).unwrap();
    let predicted = spectral_summary(&sys).max_real_part;
    let measured = measured_growth_rate(&sys, &start(), 2000.0).unwrap();
    assert_relative_eq!(measured, predicted, max_relative = 0.02);
}

#[test]
fn single_precision_pipeline_runs() {
    let sys = DriftSystem32::from_params(&ModelParams32::default()).unwrap();
    let s0 = coherent_initial_state(Cx::new(10.0f32, 0.0), Cx::new(-10.0, 0.0));
    let run = RunSettings {
        t_max: 2.0f32,
        dt: 1e-2,
        stride: 10,
        method: Method::Rk4,
    };
    let traj = simulate(&sys, &s0, &run).unwrap();
    assert_eq!(traj.len(), 21);
    let summary = summarize(&traj).unwrap();
    assert!((summary.v_min - 2.0).abs() < 1e-3);
    let wide = DriftSystem::from_params(&ModelParams::<f64>::default()).unwrap();
    let reference = propagate_exact(&wide, &start(), 2.0).unwrap();
    let (_, last) = traj.last().unwrap();
    let n32 = last[Moment::N1].re as f64;
    assert!(((n32 - reference[Moment::N1].re) / reference[Moment::N1].re).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Coherent starts never drop below the separability bound: the
    // anomalous moments are source-free and the noise source is PSD.
    #[test]
    fn coherent_starts_stay_separable(
        gamma in 0.5f64..2.0,
        p in 0.0f64..0.9,
        omega_abs in 0.0f64..20.0,
        phi in 0.0f64..std::f64::consts::TAU,
        delta in -10.0f64..10.0,
        a1 in -5.0f64..5.0,
        a2 in -5.0f64..5.0,
    ) {
        let params = ModelParams64 { gamma, p, omega_abs, phi, delta, ..ModelParams64::default() };
        let sys = DriftSystem::from_params(&params).unwrap();
        let s0 = coherent_initial_state(Cx::new(a1, 0.5), Cx::new(a2, -0.5));
        for t in [0.5, 2.0, 5.0] {
            let s = propagate_exact(&sys, &s0, t).unwrap();
            let n = total_photon_number(&s).unwrap();
            prop_assert!(duan_variance(&s).unwrap() >= 2.0 - 1e-9 * (1.0 + n));
        }
    }

    // The normally ordered noise source [[n1, c1d2], [c12d, n2]] is a
    // Hermitian PSD matrix, which is what keeps coherent starts separable.
    #[test]
    fn noise_source_is_positive_semidefinite(
        gamma in 0.5f64..2.0,
        p in 0.0f64..0.9,
        omega_abs in 0.0f64..20.0,
        phi in 0.0f64..std::f64::consts::TAU,
        delta in -10.0f64..10.0,
        gamma_a in 1.0f64..10.0,
    ) {
        let params = ModelParams64 { gamma, p, omega_abs, phi, delta, gamma_a, ..ModelParams64::default() };
        let b = *DriftSystem::from_params(&params).unwrap().inhomogeneity();
        let (d1, d2) = (b[Moment::N1.index()], b[Moment::N2.index()]);
        let off = b[Moment::C1d2.index()];
        prop_assert!(d1.im.abs() < 1e-14 && d2.im.abs() < 1e-14);
        prop_assert_eq!(b[Moment::C12d.index()], off.conj());
        let half_gap = (((d1.re - d2.re) / 2.0).powi(2) + off.norm_sqr()).sqrt();
        let min_eig = (d1.re + d2.re) / 2.0 - half_gap;
        prop_assert!(min_eig >= -1e-12 * (1.0 + d1.re.abs() + d2.re.abs()));
    }

    #[test]
    fn exact_propagation_composes(t1 in 0.0f64..3.0, t2 in 0.0f64..3.0) {
        let sys = DriftSystem::from_params(&ModelParams64::default()).unwrap();
        let direct = propagate_exact(&sys, &start(), t1 + t2).unwrap();
        let mid = propagate_exact(&sys, &start(), t1).unwrap();
        let split = propagate_exact(&sys, &mid, t2).unwrap();
        prop_assert!(direct.relative_deviation(&split) < 1e-11);
    }
}
