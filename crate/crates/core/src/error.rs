use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("eigensolver did not converge: residual {residual:.3e} for state {state}")]
    NotConverged { state: usize, residual: f64 },

    #[error("only {found} bound states found among {computed} computed; request more states")]
    InsufficientStates { found: usize, computed: usize },

    #[error("coupling constant {name} = {value:.3e} is too small to invert")]
    VanishingCoupling { name: &'static str, value: f64 },

    #[error("state is not normalized (norm² = {0:.12})")]
    Unnormalized(f64),

    #[error("integrator failed to reach tolerance {requested:.1e}; achieved {achieved:.3e}")]
    StepSize { requested: f64, achieved: f64 },

    #[error("time step too coarse: ω_d·dt = {ratio:.3} exceeds {limit}; use dt ≤ {suggested_dt:.6}")]
    TimeStepTooLarge {
        ratio: f64,
        limit: f64,
        suggested_dt: f64,
    },

    #[error("imaginary-time evolution did not converge after {steps} steps (energy change {residual:.3e})")]
    GroundStateNotConverged { steps: usize, residual: f64 },

    #[error("grid mismatch: basis has {basis} points, field has {field}")]
    GridMismatch { basis: usize, field: usize },

    #[error("band identification failed: {0}")]
    BandIdentification(String),

    #[error("no tunneling oscillation detected within horizon {horizon:.1}; the tunneling time exceeds {lower_bound:.3e}")]
    NoOscillation { horizon: f64, lower_bound: f64 },

    #[error("lab-unit data missing from configuration")]
    MissingLabData,

    #[error("unknown atomic species `{0}`")]
    UnknownSpecies(String),

    #[error("fit did not converge: {0}")]
    FitFailed(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
