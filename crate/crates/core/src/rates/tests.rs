use std::f64::consts::PI;

use num_complex::Complex64;

use super::*;

fn params(g: f64) -> ModelParams {
    ModelParams::super_ohmic(1.0, 0.05, g, 1.0)
}

fn taus() -> Vec<f64> {
    (1..=10).map(|k| 0.45 * k as f64).collect()
}

#[test]
fn excited_state_specialization_matches_assembly() {
    for g in [1.0, 3.0] {
        let m = RateModel::new(&params(g)).unwrap();
        for tau in taus() {
            let a = m
                .gamma(
                    tau,
                    &InitialState::excited(),
                    RateMode::Effective,
                    RateDefinition::LinearInS,
                )
                .unwrap();
            let b = m.gamma_excited(tau).unwrap();
            assert!(
                (a.gamma - b.gamma).abs() <= 1e-9,
                "G {g} tau {tau}: {} vs {}",
                a.gamma,
                b.gamma
            );
        }
    }
}

#[test]
fn superposition_matches_explicit_form() {
    for g in [1.0, 2.0] {
        let m = RateModel::new(&params(g)).unwrap();
        for tau in [0.1, 0.7, 2.0, 4.5] {
            let a = m
                .gamma(
                    tau,
                    &InitialState::plus(),
                    RateMode::Effective,
                    RateDefinition::LinearInS,
                )
                .unwrap();
            let b = m.gamma_superposition(tau).unwrap();
            assert!(
                (a.gamma - b.gamma).abs() <= 1e-9,
                "G {g} tau {tau}: {} vs {}",
                a.gamma,
                b.gamma
            );
        }
    }
}

#[test]
fn modified_excited_rate_adds_the_explicit_correction() {
    let m = RateModel::new(&params(2.0)).unwrap();
    let s = InitialState::excited();
    for tau in [0.3, 1.2, 2.5, 4.0] {
        let eff = m
            .gamma(tau, &s, RateMode::Effective, RateDefinition::LinearInS)
            .unwrap();
        let modi = m
            .gamma(tau, &s, RateMode::Modified, RateDefinition::LinearInS)
            .unwrap();
        let corr = m.modification_excited(tau).unwrap();
        assert!((modi.gamma - eff.gamma - corr).abs() <= 1e-9, "tau {tau}");
    }
}

#[test]
fn no_tunneling_means_no_excited_decay() {
    let mut p = params(1.0);
    p.delta = 0.0;
    for tau in [0.5, 2.0] {
        assert_eq!(gamma_excited(tau, &p).unwrap().gamma, 0.0);
        assert_eq!(survival_excited(tau, &p).unwrap(), 1.0);
        let g = gamma_general(tau, &InitialState::excited(), &p).unwrap();
        assert!(g.gamma.abs() < 1e-15);
    }
}

#[test]
fn excited_rate_scales_with_delta_squared() {
    let mut p = params(2.0);
    let a = gamma_excited(1.7, &p).unwrap().gamma;
    p.delta *= 2.0;
    let b = gamma_excited(1.7, &p).unwrap().gamma;
    assert!((b / a - 4.0).abs() < 1e-12);
}

#[test]
fn short_interval_survival_is_near_one() {
    let s = survival_excited(1e-6, &params(1.0)).unwrap();
    assert!((1.0 - 1e-14..=1.0).contains(&s));
}

#[test]
fn pure_dephasing_superposition_is_finite_and_non_negative() {
    let mut p = params(1.0);
    p.delta = 0.0;
    for tau in [0.2, 1.0, 3.0] {
        let r = gamma_superposition(tau, &p).unwrap();
        let l = BathPhases::new(&p.bath, p.temp, &p.quadrature)
            .unwrap()
            .phi_c_conj(tau)
            .unwrap();
        let expect = (1.0 - 0.5 * (1.0 + (Complex64::new(0.0, tau) - l.conj()).exp().re)) / tau;
        assert!(r.gamma.is_finite() && r.gamma >= 0.0);
        assert!((r.gamma - expect).abs() < 1e-14);
    }
}

#[test]
fn assembled_rates_have_no_imaginary_leak() {
    let m = RateModel::new(&params(2.0)).unwrap();
    for (theta, phi) in [(0.0, 0.0), (0.4, 1.0), (PI / 2.0, 0.0), (2.5, 4.0)] {
        let s = InitialState::new(theta, phi).unwrap();
        for mode in [RateMode::Effective, RateMode::Modified] {
            let r = m.gamma(1.3, &s, mode, RateDefinition::LinearInS).unwrap();
            assert!(
                r.imag_residue.abs() <= 1e-12 * r.gamma.abs(),
                "{theta} {mode:?}: {r:?}"
            );
        }
    }
}

#[test]
fn rate_definitions() {
    let m = RateModel::new(&params(1.0)).unwrap();
    let s = InitialState::new(1.0, 0.5).unwrap();
    let lin = m
        .gamma(2.0, &s, RateMode::Effective, RateDefinition::LinearInS)
        .unwrap();
    let log = m
        .gamma(2.0, &s, RateMode::Effective, RateDefinition::LogOfS)
        .unwrap();
    assert_eq!(lin.gamma, (1.0 - lin.survival) / 2.0);
    assert_eq!(log.gamma, -log.survival.ln() / 2.0);
    assert!(log.gamma > lin.gamma);
}

#[test]
fn tunneling_part_of_survival_stays_in_the_perturbative_envelope() {
    let m = RateModel::new(&params(1.0)).unwrap();
    let mut free = params(1.0);
    free.delta = 0.0;
    let f = RateModel::new(&free).unwrap();
    for theta in [0.0, 0.7, PI / 2.0, PI] {
        let s = InitialState::new(theta, 0.0).unwrap();
        for tau in [0.5, 4.0, 10.0] {
            let v = m.survival(tau, &s, RateMode::Effective).unwrap().value.re;
            let v0 = f.survival(tau, &s, RateMode::Effective).unwrap().value.re;
            let dt = 0.05 * tau;
            assert!((v - v0).abs() <= 10.0 * dt * dt, "{theta} {tau}");
            assert!(v > 0.0 && v <= 1.0 + 1e-15);
        }
    }
}

#[test]
fn node_halving_changes_little() {
    let m = RateModel::new(&params(3.0)).unwrap();
    let engine = m.engine(RateMode::Effective);
    let s = InitialState::new(0.9, 0.0).unwrap();
    let w = m.branch_weights(&s);
    for tau in [0.8, 3.0] {
        let n = engine.node_counts(tau, 0);
        let full = engine.snapshot(tau, [true, true], n).unwrap();
        let half = engine
            .snapshot(tau, [true, true], (n.0 / 2, n.1 / 2))
            .unwrap();
        let a = (1.0 - engine.combine(&full, &s, w).unwrap().value.re) / tau;
        let b = (1.0 - engine.combine(&half, &s, w).unwrap().value.re) / tau;
        assert!((a - b).abs() <= 1e-6 * a.abs(), "{a} {b}");
    }
}

#[test]
fn advisory_threshold() {
    let mut p = params(1.0);
    assert!(p.advisory().is_none());
    p.delta = 0.25;
    assert!(p.advisory().is_some());
    p.delta = -1.0;
    assert!(p.validate().is_err());
}

#[test]
fn chain() {
    assert!((survival_chain(0.9, 3) - 0.729).abs() < 1e-15);
    assert_eq!(survival_chain(1.0, 17), 1.0);
    assert_eq!(survival_chain(0.3, 0), 1.0);
    let (s, tau, n) = (0.97_f64, 0.8, 12);
    let gamma = -s.ln() / tau;
    let a = survival_chain(s, n);
    let b = (-gamma * f64::from(n) * tau).exp();
    assert!((a - b).abs() <= 1e-15 * a);
}

#[test]
fn invalid_tau_is_rejected() {
    let m = RateModel::new(&params(1.0)).unwrap();
    assert!(m.gamma_excited(0.0).is_err());
    assert!(m
        .gamma(
            -1.0,
            &InitialState::plus(),
            RateMode::Effective,
            RateDefinition::LinearInS
        )
        .is_err());
}

proptest::proptest! {
    #![proptest_config(proptest::test_runner::Config::with_cases(16))]

    #[test]
    fn survival_is_a_probability(
        g in 0.2f64..3.0,
        theta in 0.0f64..std::f64::consts::PI,
        tau in 0.05f64..4.0,
        modified in proptest::bool::ANY,
    ) {
        let m = RateModel::new(&params(g)).unwrap();
        let mode = if modified { RateMode::Modified } else { RateMode::Effective };
        let s = m.survival(tau, &InitialState::new(theta, 0.0).unwrap(), mode).unwrap();
        proptest::prop_assert!(s.value.re > -1e-9 && s.value.re < 1.0 + 1e-9, "s = {}", s.value);
    }

    #[test]
    fn excited_rate_is_quadratic_in_tunneling(g in 0.2f64..3.0, tau in 0.05f64..4.0, k in 0.25f64..4.0) {
        let base = RateModel::new(&params(g)).unwrap().gamma_excited(tau).unwrap().gamma;
        let mut p = params(g);
        p.delta *= k;
        let scaled = RateModel::new(&p).unwrap().gamma_excited(tau).unwrap().gamma;
        proptest::prop_assert!(base > 0.0);
        proptest::prop_assert!((scaled / base / (k * k) - 1.0).abs() < 1e-12);
    }
}
