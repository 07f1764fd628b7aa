//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the cmsar library.
#[derive(Debug, Error)]
pub enum Error {
    /// A slow-time value was not strictly positive.
    #[error("slow time must be strictly positive, got {0}")]
    NonPositiveSlowTime(f64),

    /// A point too close to the common midpoint was passed to an
    /// operation that is singular there.
    #[error("point ({x1}, {x2}) is within {tol} of the common midpoint")]
    DegenerateMidpoint { x1: f64, x2: f64, tol: f64 },

    /// The prolate x3 constraint was violated beyond tolerance.
    #[error("prolate triple is inconsistent with the ground plane: |x3| = {residual} > {tol}")]
    ProlateInconsistent { residual: f64, tol: f64 },

    /// Travel time below the minimum bistatic range: the isorange locus
    /// is empty or a point.
    #[error("degenerate isorange ellipse: t = {t} must exceed {t_min}")]
    DegenerateEllipse { t: f64, t_min: f64 },

    /// Invalid grid or acquisition parameters.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Scene/sinogram geometry does not match the acquisition config.
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    /// A scene scatterer lies outside the target grid.
    #[error("scene entry {index} ({kind}) lies outside the grid extents")]
    SceneOutOfBounds { index: usize, kind: &'static str },

    /// Reflection requested on a grid whose extents are not symmetric
    /// about the reflection axis.
    #[error("grid extents are not symmetric about the {axis} axis")]
    AsymmetricGrid { axis: &'static str },

    /// The file does not start with a known magic string.
    #[error("not a CMSAR file: bad magic string")]
    BadMagic,

    /// The file is a CMSAR container of an unsupported version.
    #[error("unsupported CMSAR container version: {found}")]
    VersionMismatch { found: String },

    /// The header line could not be parsed.
    #[error("malformed CMSAR header: {0}")]
    BadHeader(String),

    /// The payload is shorter than the header-declared sample count.
    #[error("truncated payload: header declares {expected} samples, found {got}")]
    Truncated { expected: usize, got: usize },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Scene-spec JSON failure.
    #[error("scene spec: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
