use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("unsupported Gauss rule with {0} points (supported: 1..=20)")]
    UnsupportedQuadrature(usize),

    #[error("inadmissible state {state:?} at {location}")]
    StateSpace { state: Vec<f64>, location: String },

    #[error("right-hand side failed in stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("start-up: {0}")]
    StartUp(String),

    #[error("ill-conditioned interpolation: {0}")]
    Conditioning(String),

    #[error("time {t} outside of [{lo}, {hi}]")]
    Domain { t: f64, lo: f64, hi: f64 },

    #[error("invalid reconstruction: {0}")]
    Reconstruction(String),

    #[error("entropy Hessian not positive definite at {state:?} (smallest eigenvalue {min_eig})")]
    Convexity { state: Vec<f64>, min_eig: f64 },

    #[error("reconstruction leaves the compact box at t={t}, x={x}: {state:?}")]
    AssumptionViolated { t: f64, x: f64, state: Vec<f64> },

    #[error("configuration rejected: {0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: usize) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }
}
