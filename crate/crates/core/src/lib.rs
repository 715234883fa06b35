//! Measurement-modified decay rates of a qubit coupled to a harmonic bath.
//!
//! The model is the spin-boson Hamiltonian treated in the polaron frame, so
//! the coupling may be strong while the tunneling element stays perturbative.

pub mod analysis;
pub mod bath;
pub mod error;
pub mod oracle;
pub mod quadrature;
pub mod rates;
pub mod state;

pub use analysis::{sample_curve, DecayCurve, Spacing, TauGrid};
pub use bath::{BathMode, BathPhases, SpectralDensity, Temperature};
pub use error::{Error, Result};
pub use quadrature::{Estimate, QuadratureSpec};
pub use rates::{ModelParams, RateDefinition, RateMode, RateModel, RateResult};
pub use state::InitialState;
