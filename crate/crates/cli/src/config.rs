//! Run settings: defaults, TOML file, then command-line flags. The merged
//! result is written back as `effective-config.toml` and reproduces the run.

use std::path::Path;

use cgnet::noise::JitterMode;
use cgnet::rodeo::{Construction, Evolution, PassSpec, ProtocolConfig, RunMode};
use cgnet::varsub::{AnsatzParams, OverlapMethod};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 20240607;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub seed: u64,
    pub mode: RunMode,
    pub cycles: usize,
    pub noise_p2q: f64,
    pub jitter_eps: Vec<f64>,
    /// Both modes when absent.
    pub jitter_mode: Option<JitterMode>,
    pub system: SystemSettings,
    pub protocol: ProtocolSettings,
    pub varsub: VarsubSettings,
    pub circuit: CircuitSettings,
    pub sweep: SweepSettings,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            mode: RunMode::Sampled,
            cycles: 5,
            noise_p2q: 0.0,
            jitter_eps: vec![0.01, 0.05, 0.1],
            jitter_mode: None,
            system: SystemSettings::default(),
            protocol: ProtocolSettings::default(),
            varsub: VarsubSettings::default(),
            circuit: CircuitSettings::default(),
            sweep: SweepSettings::default(),
        }
    }
}

/// Rodeo target: Hamiltonian text (`coeff letters` per line) and a product state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSettings {
    pub hamiltonian: String,
    pub state: String,
    pub construction: Construction,
    pub evolution: Evolution,
}

impl Default for SystemSettings {
    fn default() -> Self {
        Self {
            hamiltonian: "2.5 XZ\n1.5 ZX\n".into(),
            state: "00".into(),
            construction: Construction::Reversal,
            evolution: Evolution::Exact,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSettings {
    pub passes: [PassSpec; 3],
    pub detect_k: f64,
    pub confirm_k: f64,
    pub final_points: usize,
    pub final_half_width: f64,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        let d = ProtocolConfig::default();
        Self {
            passes: d.passes,
            detect_k: d.detect_k,
            confirm_k: d.confirm_k,
            final_points: d.final_points,
            final_half_width: d.final_half_width,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarsubSettings {
    pub hamiltonian: String,
    pub state: String,
    pub method: OverlapMethod,
    /// Shots per ancilla experiment in sampled mode.
    pub shots: u64,
    pub overlap_threshold: f64,
    pub params: Vec<AnsatzParams>,
}

impl Default for VarsubSettings {
    fn default() -> Self {
        Self {
            hamiltonian: "1 XX\n1 YY\n1 ZZ\n".into(),
            state: "01".into(),
            method: OverlapMethod::Network,
            shots: 4096,
            overlap_threshold: cgnet::varsub::DEFAULT_OVERLAP_THRESHOLD,
            params: vec![AnsatzParams::new(0.0, 0.0, 0.0, 0.0), AnsatzParams::new(0.4, 0.4, 0.4, 0.0)],
        }
    }
}

/// Input of `count` and `transpile`: a built-in name, or circuit text when `text` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitSettings {
    pub builtin: String,
    pub text: Option<String>,
    pub basis: String,
    /// Energy and time of the built-in rodeo cycles.
    pub energy: f64,
    pub time: f64,
    pub chain_n: usize,
    pub chain_sigma: f64,
    pub chain_dt: f64,
}

impl Default for CircuitSettings {
    fn default() -> Self {
        Self {
            builtin: "rodeo_cycle_reversal".into(),
            text: None,
            basis: "ibm".into(),
            energy: 0.5,
            time: 1.0,
            chain_n: 4,
            chain_sigma: 6.0,
            chain_dt: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub sigmas: Vec<f64>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { sigmas: vec![4.0, 14.0, 24.0] }
    }
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("settings serialize to TOML")
    }

    pub fn protocol_config(&self) -> ProtocolConfig {
        let p = &self.protocol;
        ProtocolConfig {
            n_cycles: self.cycles,
            passes: p.passes,
            detect_k: p.detect_k,
            confirm_k: p.confirm_k,
            final_points: p.final_points,
            final_half_width: p.final_half_width,
            mode: self.mode,
            p2q: self.noise_p2q,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut s = Settings { jitter_mode: Some(JitterMode::PerShot), ..Default::default() };
        s.system.evolution = Evolution::Trotter { dt: 0.1 };
        s.circuit.text = Some("qubits 1\nh 0\n".into());
        let back: Settings = toml::from_str(&s.to_toml()).unwrap();
        assert_eq!(back, s);
        let empty: Settings = toml::from_str("").unwrap();
        assert_eq!(empty, Settings::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(toml::from_str::<Settings>("sed = 3").is_err());
        assert!(toml::from_str::<Settings>("[system]\nhamiltonain = \"1 Z\"").is_err());
        assert!(toml::from_str::<Settings>("[[varsub.params]]\nalpha = 1\nbeta = 0\ngamma = 0\ndelta = 0\nepsilon = 2").is_err());
    }
}
