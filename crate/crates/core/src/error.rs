use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),
    #[error("point outside the unit disk: {0}")]
    OutsideDisk(String),
    #[error("coincident points in Green's function evaluation")]
    Coincident,
    #[error("image singularity: |x conj(y)| = 1")]
    ImageSingularity,
    #[error("nonpositive area {0:.6e} (perturbation too large)")]
    NonpositiveArea(f64),
    #[error("geometric overlap: {0}")]
    Overlap(String),
    #[error("collision: {0}")]
    Collision(String),
    #[error("singular jacobian (condition estimate {0:.3e})")]
    Singular(f64),
    #[error("newton did not converge in {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("line search stalled at residual {0:.3e}")]
    LineSearchStall(f64),
    #[error("continuation failed at parameter {param}: {reason}")]
    Continuation { param: f64, reason: String },
    #[error("extrapolation did not converge: {0}")]
    Extrapolation(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
