use std::f64::consts::PI;

use super::*;
use crate::bath::SpectralDensity;

fn modes(gs: &[(f64, f64)]) -> Vec<BathMode> {
    gs.iter()
        .map(|&(omega, g)| BathMode {
            omega,
            coupling: Complex64::new(g, 0.0),
        })
        .collect()
}

fn small_bath(n_max: usize) -> DiscreteBathSystem {
    DiscreteBathSystem::new(modes(&[(0.7, 0.02), (1.9, 0.03)]), n_max).unwrap()
}

#[test]
fn hamiltonians_are_hermitian() {
    let h = build_hamiltonians(&small_bath(3), 1.0, 0.2).unwrap();
    assert!(hermiticity_defect(&h) < 1e-13);
    assert_eq!(h.lab.nrows(), 32);
}

#[test]
fn size_limits() {
    assert!(DiscreteBathSystem::new(modes(&[(1.0, 0.1); 7]), 1).is_err());
    assert!(DiscreteBathSystem::new(modes(&[(1.0, 0.1)]), 7).is_err());
    assert!(DiscreteBathSystem::new(vec![], 2).is_err());
    assert!(matches!(
        DiscreteBathSystem::new(modes(&[(1.0, 0.1); 6]), 5),
        Err(Error::DimensionTooLarge { .. })
    ));
}

#[test]
fn uncoupled_bath_reproduces_rabi_oscillation() {
    let sys = DiscreteBathSystem::new(modes(&[(1.0, 0.0), (2.0, 0.0)]), 2).unwrap();
    for theta in [0.0, PI / 3.0, PI / 2.0] {
        let state = InitialState::new(theta, 0.4).unwrap();
        let tau = 0.8;
        let ex = exact_survival(tau, 3, &state, &sys, 1.0, 0.3, RateMode::Effective).unwrap();
        let want = isolated_qubit_survival(tau, &state, 1.0, 0.3);
        for s in &ex.survivals {
            assert!((s - want).abs() < 1e-12, "theta {theta}: {s} vs {want}");
        }
        assert!(ex.unitarity_defect < 1e-10);
        assert!(ex.leakage < 1e-30);
    }
}

#[test]
fn excited_state_is_stationary_without_tunneling() {
    let sys = small_bath(4);
    for mode in [RateMode::Effective, RateMode::Modified] {
        let ex = exact_survival(2.5, 4, &InitialState::excited(), &sys, 1.0, 0.0, mode).unwrap();
        assert!(ex.survivals.iter().all(|s| (s - 1.0).abs() < 1e-12));
    }
}

#[test]
fn pure_dephasing_matches_the_zeroth_order_survival() {
    let sys = small_bath(5);
    let state = InitialState::new(PI / 3.0, 0.0).unwrap();
    let params = ModelParams {
        eps: 1.0,
        delta: 0.0,
        bath: sys.density(),
        temp: Temperature::Zero,
        quadrature: QuadratureSpec::default(),
    };
    let model = RateModel::new(&params).unwrap();
    for tau in [0.3, 1.0, 4.0] {
        let ex = exact_survival(tau, 1, &state, &sys, 1.0, 0.0, RateMode::Effective).unwrap();
        let pert = model
            .survival(tau, &state, RateMode::Effective)
            .unwrap()
            .value
            .re;
        assert!(
            (ex.survivals[0] - pert).abs() < 1e-9,
            "tau {tau}: {} vs {pert}",
            ex.survivals[0]
        );
    }
}

#[test]
fn polaron_identity_on_low_occupations() {
    let residuals: Vec<f64> = (2..=4)
        .map(|n| polaron_residual(&small_bath(n), 1.0, 0.1, 1).unwrap())
        .collect();
    assert!(residuals[2] <= 1e-8, "{residuals:?}");
    assert!(residuals.windows(2).all(|w| w[1] < w[0]), "{residuals:?}");
}

#[test]
fn bath_trace_matches_the_w_factor() {
    let sys = DiscreteBathSystem::new(modes(&[(0.6, 0.05), (1.7, 0.08), (3.1, 0.04)]), 6).unwrap();
    for (t1, t2, tau) in [
        (0.3, 0.1, 1.0),
        (1.2, 0.7, 2.0),
        (0.0, 0.0, 0.0),
        (0.4, 1.5, 1.8),
    ] {
        let chk = bath_trace_check(t1, t2, tau, &sys).unwrap();
        assert!(chk.relative_error() < 1e-8, "({t1},{t2},{tau}): {chk:?}");
    }
    let origin = bath_trace_check(0.0, 0.0, 0.0, &sys).unwrap();
    assert!((origin.formula - 1.0).norm() < 1e-14);
}

#[test]
fn truncation_is_flagged() {
    let sys = DiscreteBathSystem::new(modes(&[(0.5, 0.6)]), 2).unwrap();
    let ex = exact_survival(
        1.0,
        1,
        &InitialState::plus(),
        &sys,
        1.0,
        0.1,
        RateMode::Effective,
    )
    .unwrap();
    assert!(ex.flagged());
    assert!(matches!(ex.check(), Err(Error::TruncationLeakage { .. })));
}

#[test]
fn tunneling_correction_scales_as_delta_cubed() {
    let sys = DiscreteBathSystem::from_density(&SpectralDensity::super_ohmic(0.02, 1.0), 3, 8.0, 4)
        .unwrap();
    let state = InitialState::new(PI / 3.0, 0.0).unwrap();
    let fit = delta_scaling(
        1.0,
        &[0.05, 0.025, 0.0125],
        &state,
        &sys,
        1.0,
        RateMode::Effective,
    )
    .unwrap();
    assert!(fit.leakage < LEAKAGE_LIMIT);
    assert!((fit.exponent - 3.0).abs() < 0.3, "{fit:?}");
}

#[test]
fn reference_quadrature() {
    let tri = refine_quadrature(|_, _| c(1.0), Domain::Triangle { tau: 2.0 }, 1e-12).unwrap();
    assert!((tri.value.re - 2.0).abs() < 1e-12);
    let sq = refine_quadrature(
        |a, b| Complex64::new(0.0, a - b).exp(),
        Domain::Square { tau: 1.5 },
        1e-12,
    )
    .unwrap();
    let want = 2.0 * (1.0 - 1.5f64.cos());
    assert!((sq.value.re - want).abs() < 1e-11);
    let line =
        refine_quadrature(|x, _| c(x.sin()), Domain::Interval { a: 0.0, b: PI }, 1e-12).unwrap();
    assert!((line.value.re - 2.0).abs() < 1e-12);
}

#[test]
fn thermal_normalization_matches_the_bath_trace_formula() {
    let sys = DiscreteBathSystem::new(modes(&[(2.0, 0.05), (3.0, 0.08)]), 6).unwrap();
    let beta = 2.0;
    let state = InitialState::plus();
    let direct = thermal_normalization(&state, &sys, 1.0, beta).unwrap();
    let phases = BathPhases::new(
        &sys.density(),
        Temperature::Beta(beta),
        &QuadratureSpec::default(),
    )
    .unwrap();
    let decomp = crate::state::ProjectorDecomposition::new(&state, Temperature::Beta(beta), 1.0);
    let z = crate::state::normalization_z(&decomp, &phases)
        .unwrap()
        .ln_value()
        .unwrap();
    assert!((direct - z).abs() < 1e-6, "{direct} vs {z}");
}
