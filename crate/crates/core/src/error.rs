//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An edge with a number of adjacent triangles different from two,
    /// including boundary edges.
    #[error("edge ({0}, {1}) has {2} adjacent triangles, expected exactly 2")]
    NonManifoldEdge(usize, usize, usize),

    /// Two adjacent triangles traverse their shared edge in the same
    /// direction.
    #[error("inconsistent triangle orientation across edge ({0}, {1})")]
    InconsistentOrientation(usize, usize),

    /// Triangle area below the scale-relative degeneracy threshold.
    #[error("triangle {0} is degenerate (area below threshold)")]
    DegenerateTriangle(usize),

    /// Vertex index outside the vertex list.
    #[error("triangle {tri} references vertex {vertex} out of range")]
    IndexOutOfRange { tri: usize, vertex: usize },

    /// Two unit vectors are antipodal (or numerically indistinguishable from
    /// antipodal); the logarithmic map and parallel transport are undefined.
    #[error("antipodal unit vectors: logarithmic map undefined")]
    AntipodalPoints,

    /// Evaluation point does not lie in the requested triangle.
    #[error("point lies outside triangle {0}")]
    PointOutsideTriangle(usize),

    /// Mismatched array sizes between two meshes or fields.
    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    /// Conjugate gradient failed to reach the requested tolerance.
    #[error("conjugate gradient did not converge within {0} iterations (relative residual {1:.3e})")]
    CgNoConvergence(usize, f64),

    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
