use std::f64::consts::FRAC_PI_2;

use zenoscope_core::analysis::{
    classify_regimes, critical_angle, find_peak, Behavior, CriticalAngleOptions, Regime,
};
use zenoscope_core::{
    sample_curve, Error, InitialState, ModelParams, QuadratureSpec, RateDefinition, RateMode,
    RateModel, SpectralDensity, TauGrid, Temperature,
};

fn params(g: f64) -> ModelParams {
    ModelParams::super_ohmic(1.0, 0.05, g, 1.0)
}

#[test]
fn weak_coupling_excited_curve_is_pure_zeno() {
    let curve = sample_curve(
        &InitialState::excited(),
        &params(1.0),
        RateMode::Effective,
        &TauGrid::linear(0.05, 5.0, 60),
    )
    .unwrap();
    let seg = classify_regimes(&curve.samples).unwrap();
    assert_eq!(seg.count(Regime::AntiZeno), 0);
    let peak = find_peak(&curve).unwrap();
    assert_eq!(peak.tau_star, 5.0);
    assert!(!peak.refined);
}

#[test]
fn stronger_coupling_develops_an_interior_peak() {
    let curve = sample_curve(
        &InitialState::excited(),
        &params(3.0),
        RateMode::Effective,
        &TauGrid::linear(0.05, 5.0, 60),
    )
    .unwrap();
    let peak = find_peak(&curve).unwrap();
    assert!(peak.refined && peak.tau_star < 5.0);
    assert!(curve.gammas().all(|g| g <= peak.gamma_max * (1.0 + 1e-9)));
    assert_eq!(
        classify_regimes(&curve.samples)
            .unwrap()
            .count(Regime::AntiZeno),
        1
    );
}

#[test]
fn dense_discrete_bath_reproduces_the_continuum() {
    let continuum = params(1.0);
    let mut discrete = continuum.clone();
    discrete.bath = continuum.bath.discretize(400, 40.0).unwrap();
    let state = InitialState::new(0.6, 0.3).unwrap();
    let a = RateModel::new(&continuum).unwrap();
    let b = RateModel::new(&discrete).unwrap();
    for tau in [0.3, 1.0, 2.5] {
        for mode in [RateMode::Effective, RateMode::Modified] {
            let x = a
                .gamma(tau, &state, mode, RateDefinition::LinearInS)
                .unwrap()
                .gamma;
            let y = b
                .gamma(tau, &state, mode, RateDefinition::LinearInS)
                .unwrap()
                .gamma;
            assert!(
                (x - y).abs() <= 1e-4 * x.abs(),
                "tau={tau} {mode:?}: {x} vs {y}"
            );
        }
    }
}

#[test]
fn thermal_rates_approach_zero_temperature() {
    let cold = params(1.0);
    let mut warm = cold.clone();
    warm.temp = Temperature::Beta(200.0);
    let x = RateModel::new(&cold)
        .unwrap()
        .gamma_excited(1.5)
        .unwrap()
        .gamma;
    let y = RateModel::new(&warm)
        .unwrap()
        .gamma_excited(1.5)
        .unwrap()
        .gamma;
    assert!((x - y).abs() <= 1e-6 * x, "{x} vs {y}");
}

#[test]
fn critical_angle_separates_the_two_behaviors() {
    let opts = CriticalAngleOptions {
        grid: TauGrid::log(0.05, 5.0, 80),
        ..Default::default()
    };
    let r = critical_angle(1.0, 3.0, &params(1.0), RateMode::Effective, &opts).unwrap();
    assert!(r.theta_c > 0.0 && r.theta_c < FRAC_PI_2);
    assert!(r.f_bracket.0 < 0.0 && r.f_bracket.1 > 0.0);
    assert_eq!(Behavior::from_difference(r.f_bracket.0), Behavior::ZType);
    assert_eq!(Behavior::from_difference(r.f_bracket.1), Behavior::XType);
}

#[test]
fn invalid_parameters_are_reported() {
    let mut p = params(1.0);
    p.delta = -1.0;
    assert!(matches!(
        RateModel::new(&p),
        Err(Error::InvalidParameter(_))
    ));
    let mut p = params(1.0);
    p.quadrature = QuadratureSpec {
        nodes_1d: 2,
        ..Default::default()
    };
    assert!(RateModel::new(&p).is_err());
    assert!(SpectralDensity::super_ohmic(1.0, 1.0)
        .discretize(0, 8.0)
        .is_err());
    assert!(InitialState::new(4.0, 0.0).is_err());
}
