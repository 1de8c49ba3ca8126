use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("face {face}: {reason}")]
    InvalidFace { face: usize, reason: String },

    #[error("element {element}: {reason}")]
    InvalidElement { element: usize, reason: String },

    #[error("non-manifold face {face}: referenced by {count} elements")]
    NonManifoldFace { face: usize, count: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("element {element}: negative corner volume {volume:e} at vertex {vertex} (cell not star-shaped)")]
    NotStarShaped {
        element: usize,
        vertex: usize,
        volume: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("matrix not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("solve did not reach tolerance: relative residual {residual:e} > {tolerance:e}")]
    SolveTolerance { residual: f64, tolerance: f64 },

    #[error("zero reference norm in {0}")]
    ZeroNorm(&'static str),

    #[error("mesh file: {0}")]
    MeshFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
