use std::path::PathBuf;

use cgnet::fit::FitError;
use cgnet::noise::NoiseError;
use cgnet::rodeo::RodeoError;
use cgnet::statevec::SimError;
use cgnet::varsub::VarsubError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("no peaks found")]
    NoPeaks,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::NoPeaks => 2,
            Self::Config(_) | Self::Io { .. } => 3,
            Self::Numerical(_) => 4,
        }
    }

    pub fn config(e: impl std::fmt::Display) -> Self {
        Self::Config(e.to_string())
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }
}

fn sim_is_numerical(e: &SimError) -> bool {
    matches!(e, SimError::NotUnitary(_) | SimError::NotNormalized(_) | SimError::ZeroProbability { .. })
}

fn noise_is_numerical(e: &NoiseError) -> bool {
    match e {
        NoiseError::QuadratureNonConvergence { .. } => true,
        NoiseError::Sim(s) => sim_is_numerical(s),
        _ => false,
    }
}

fn classify(numerical: bool, msg: String) -> CliError {
    if numerical {
        CliError::Numerical(msg)
    } else {
        CliError::Config(msg)
    }
}

impl From<RodeoError> for CliError {
    fn from(e: RodeoError) -> Self {
        let numerical = match &e {
            RodeoError::Fit(_) => true,
            RodeoError::Noise(n) => noise_is_numerical(n),
            RodeoError::Sim(s) => sim_is_numerical(s),
            _ => false,
        };
        classify(numerical, e.to_string())
    }
}

impl From<NoiseError> for CliError {
    fn from(e: NoiseError) -> Self {
        classify(noise_is_numerical(&e), e.to_string())
    }
}

impl From<VarsubError> for CliError {
    fn from(e: VarsubError) -> Self {
        let numerical = match &e {
            VarsubError::SingularOverlap { .. } => true,
            VarsubError::Sim(s) => sim_is_numerical(s),
            _ => false,
        };
        classify(numerical, e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        Self::Numerical(e.to_string())
    }
}

macro_rules! config_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Config(e.to_string())
            }
        }
    )*};
}

config_errors!(
    cgnet::pauli::PauliError,
    cgnet::circuit::CircuitError,
    cgnet::transpile::TranspileError
);

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        classify(sim_is_numerical(&e), e.to_string())
    }
}
