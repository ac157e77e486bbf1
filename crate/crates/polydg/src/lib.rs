//! Level-set shape optimization on agglomerated polytopic meshes.
//!
//! The toolkit couples three discretizations on a shared fine triangular mesh
//! of a fixed hold-all domain:
//!
//! - an interior-penalty discontinuous Galerkin solver on coarse polytopic
//!   elements obtained by k-means agglomeration of the fine triangles, used
//!   for the shape-gradient equation and (in the PDE-constrained case) the
//!   Laplace state equation,
//! - an explicit Runge-Kutta dG transport solver on the fine mesh, used to
//!   advance the level-set function,
//! - nodal-averaging recovery to move fields between the two.
//!
//! The fine mesh is locally refined each iteration so that the zero-level set
//! of the (recovered) level-set function is resolved by element boundaries,
//! which makes domain integrals and interface terms exact operations on
//! whole elements.
//!
//! [`optimizer::optimize`] runs the full steepest-descent loop with Armijo
//! backtracking; [`config::RunConfig`] is the JSON-backed front end used by
//! the CLI.

pub mod basis;
pub mod geometry;
pub mod dg;
pub mod elliptic;
pub mod linalg;
pub mod mesh;
pub mod recovery;
pub mod shape;
pub mod transport;
pub mod quadrature;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate triangle {tri} (signed area {area:.3e})")]
    DegenerateTriangle { tri: usize, area: f64 },
    #[error("level-set function changes sign twice along edge {edge}")]
    DoubleSignChange { edge: usize },
    #[error("empty region: {0}")]
    EmptyRegion(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("solver did not converge after {iters} iterations (relative residual {residual:.3e})")]
    SolverDiverged { iters: usize, residual: f64 },
    #[error("singular local system on element {element}")]
    SingularLocalSystem { element: usize },
    #[error("non-finite values detected: {0}")]
    NonFinite(String),
    #[error("moved mesh is tangled (triangle {tri} has signed area {area:.3e}); reduce the step t")]
    TangledMesh { tri: usize, area: f64 },
    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },
    #[error("optimization stopped on a degenerate iterate: {0}")]
    DegenerateIterate(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
