//! Discontinuous Galerkin spaces on simplicial and polytopic meshes, with
//! jump/average algebra and the discontinuity-penalization parameter.

mod faces;
mod space;

pub use faces::{
    face_quadrature, penalty_sigma, scalar_jump_avg, vector_jump_avg, ScalarJumpAvg,
    VectorJumpAvg,
};
pub use space::{DgField, PolySpace, TriSpace};
