use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid branch: {0}")]
    InvalidBranch(String),

    #[error("mismatched space: expected {expected} points, found {found}")]
    MismatchedSpace { expected: usize, found: usize },

    #[error("unknown point: {0}")]
    UnknownPoint(String),

    #[error("time {t} is not registered on chain {chain}")]
    UnregisteredTime { chain: usize, t: f64 },

    #[error("function is not 1-Lipschitz: |u({x}) - u({y})| exceeds d by {excess}")]
    NotLipschitz { x: usize, y: usize, excess: f64 },

    #[error("infeasible transport problem: masses {mass0} and {mass1} differ")]
    Infeasible { mass0: f64, mass1: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("plan is not optimal: cost exceeds W1 by {gap}")]
    NonOptimal { gap: f64 },

    #[error("plan does not match marginals: {0}")]
    PlanMismatch(String),

    #[error("structural failure on ray {ray:?}: {message}")]
    Structural { ray: Option<usize>, message: String },

    #[error("degenerate ray {ray}: {message}")]
    DegenerateRay { ray: usize, message: String },

    #[error("inconsistent ray data: {0}")]
    Data(String),

    #[error("window outside needle domain: {0}")]
    Window(String),

    #[error("size cap exceeded: {size} > {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
