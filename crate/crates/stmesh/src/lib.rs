//! Simplicial surface meshes on 2D+t space-time slabs and simplicial
//! hypersurface meshes on 3D+t slabs, generated from analytic moving-boundary
//! scenes and verified against exact closed-form areas and volumes.
//!
//! The pipeline decomposes the time interval into slabs. Each slab carries an
//! initial plane mesh (inherited from the previous slab), an intermediate
//! lateral mesh built by stitching advected boundary vertices, and a
//! re-meshed terminating plane. The three pieces merge into a closed hull of
//! triangles (2D+t, embedded in 3D) or tetrahedra (3D+t, embedded in 4D).

pub mod cdt;
pub mod error;
pub mod geom;
pub mod io;
pub mod pipeline;
pub mod scene;
pub mod slab2d;
pub mod slab3d;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
pub use geom::{MeasureReport, Patch, SimplicialMesh, SpaceTimePoint, VertexTag};
