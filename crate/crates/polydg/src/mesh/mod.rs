//! Meshes: fine simplicial meshes of the hold-all domain, zero-level-set
//! fitting by local refinement, and agglomeration into polytopic elements.

mod agglomeration;
mod fitting;
mod generate;
mod io;
mod polytopic;
mod simplicial;

pub use agglomeration::{agglomerate, kmeans_lloyd};
pub use fitting::{mark_cut_triangles, refine_to_fit, FittedMesh, Sign};
pub use generate::{disc_mesh, square_mesh, structured_mesh};
pub use io::{read_mesh_text, write_mesh_text};
pub use polytopic::{extract_interior_submesh, FaceKind, PolyFace, PolytopicMesh, Submesh};
pub use simplicial::{Edge, SimplicialMesh};
