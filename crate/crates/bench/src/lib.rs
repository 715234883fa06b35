//! Fixtures shared by the benchmarks.

use zenoscope_core::{InitialState, ModelParams, RateModel};

/// Model used in every timing: ε = 1, Δ = 0.05 and a super-Ohmic bath at G = 2.
pub fn reference_model() -> RateModel {
    RateModel::new(&ModelParams::super_ohmic(1.0, 0.05, 2.0, 1.0))
        .expect("reference parameters are valid")
}

/// Preparation angles from the excited state to the equator.
pub fn reference_states() -> Vec<(&'static str, InitialState)> {
    vec![
        ("excited", InitialState::excited()),
        (
            "theta_pi_4",
            InitialState::new(std::f64::consts::FRAC_PI_4, 0.0).expect("valid angle"),
        ),
        ("plus", InitialState::plus()),
    ]
}
