//! Built-in parameter sets. All share `ε = ω_c = 1`, `Δ = 0.05`,
//! `s = 2`, zero temperature.

use std::f64::consts::PI;

use zenoscope_core::rates::RateMode;

use crate::config::{ModeChoice, RunConfig, SweepConfig};
use crate::Command;

pub const NAMES: [&str; 8] = [
    "fig1a", "fig1b", "fig2a", "fig2b", "fig3", "fig5a", "fig5b", "fig6",
];

/// A named parameter set and the subcommand that consumes it.
pub struct Preset {
    pub name: &'static str,
    pub command: Command,
    pub config: RunConfig,
}

pub fn preset(name: &str) -> Option<Preset> {
    let name = *NAMES.iter().find(|&&n| n == name)?;
    let mut config = RunConfig::default();
    let curves = |config: &mut RunConfig, theta: f64, mode: ModeChoice| {
        config.state.theta = theta;
        config.mode = mode;
        config.couplings = vec![1.0, 2.0, 3.0];
    };
    let theta_family = |config: &mut RunConfig, mode: RateMode| {
        config.sweep = SweepConfig {
            couplings: Some(vec![1.0]),
            thetas: Some(vec![0.0, PI / 8.0, PI / 4.0, PI / 2.0]),
            phis: Some(vec![0.0]),
            modes: Some(vec![mode]),
        };
    };
    let command = match name {
        "fig1a" => {
            curves(&mut config, 0.0, ModeChoice::Effective);
            Command::Curve
        }
        "fig1b" => {
            curves(&mut config, PI / 2.0, ModeChoice::Effective);
            Command::Curve
        }
        "fig5a" => {
            curves(&mut config, 0.0, ModeChoice::Modified);
            Command::Curve
        }
        "fig5b" => {
            curves(&mut config, PI / 2.0, ModeChoice::Modified);
            Command::Curve
        }
        "fig2a" => {
            theta_family(&mut config, RateMode::Effective);
            Command::Sweep
        }
        "fig2b" => {
            theta_family(&mut config, RateMode::Modified);
            Command::Sweep
        }
        "fig3" => {
            config.mode = ModeChoice::Effective;
            config.output.format = crate::config::Format::Json;
            Command::CriticalAngle
        }
        "fig6" => {
            config.mode = ModeChoice::Modified;
            config.output.format = crate::config::Format::Json;
            Command::CriticalAngle
        }
        _ => unreachable!(),
    };
    Some(Preset {
        name,
        command,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for n in NAMES {
            let p = preset(n).unwrap();
            assert_eq!(p.name, n);
            assert_eq!(p.config.model.delta, 0.05);
            assert_eq!(p.config.model.eps, 1.0);
        }
        assert!(preset("fig4").is_none());
    }
}
