//! Deterministic serialization: the `.stmesh` exchange format, legacy VTK
//! export, and the JSON scene configuration.

mod config;
mod stmesh_format;
mod vtk;

pub use config::{load_from_config, read_scene_config, ConfigFile, LoadedScene, SceneRun};
pub use stmesh_format::{read_stmesh, write_stmesh, MeshFile};
pub use vtk::{export_vtk, TimeMode};
