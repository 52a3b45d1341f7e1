//! Legacy ASCII VTK unstructured-grid export for inspection in standard
//! viewers. 4D meshes are flattened either by dropping the time coordinate
//! (attached as a point scalar) or by extracting a constant-time cross
//! section.

use crate::error::Result;
use crate::geom::SimplicialMesh;
use std::io::Write;
use std::path::Path;

/// How to map a 4D space-time mesh onto VTK's 3D points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeMode {
    /// Drop the time coordinate and attach it as a point scalar `time`.
    ScalarField,
    /// Keep only cells whose vertices all satisfy |t - t_query| < tol.
    CrossSection { t_query: f64, tol: f64 },
}

pub fn export_vtk<const D: usize>(
    mesh: &SimplicialMesh<D>,
    path: &Path,
    mode: TimeMode,
) -> Result<()> {
    let (points, cells, time): (Vec<[f64; 3]>, Vec<Vec<usize>>, Option<Vec<f64>>) = match D {
        3 => {
            let pts = mesh
                .vertices
                .iter()
                .map(|v| [v.coords[0], v.coords[1], v.coords[2]])
                .collect();
            let cells = mesh.cells.iter().map(|c| c.to_vec()).collect();
            (pts, cells, None)
        }
        4 => match mode {
            TimeMode::ScalarField => {
                let pts = mesh
                    .vertices
                    .iter()
                    .map(|v| [v.coords[0], v.coords[1], v.coords[2]])
                    .collect();
                let cells = mesh.cells.iter().map(|c| c.to_vec()).collect();
                let time = mesh.vertices.iter().map(|v| v.coords[3]).collect();
                (pts, cells, Some(time))
            }
            TimeMode::CrossSection { t_query, tol } => {
                let keep: Vec<&[usize; D]> = mesh
                    .cells
                    .iter()
                    .filter(|c| {
                        c.iter().all(|&v| (mesh.vertices[v].coords[3] - t_query).abs() < tol)
                    })
                    .collect();
                let mut vmap = vec![usize::MAX; mesh.vertices.len()];
                let mut pts = Vec::new();
                let mut cells = Vec::new();
                for c in keep {
                    let mut cc = Vec::with_capacity(D);
                    for &v in c.iter() {
                        if vmap[v] == usize::MAX {
                            vmap[v] = pts.len();
                            let p = &mesh.vertices[v];
                            pts.push([p.coords[0], p.coords[1], p.coords[2]]);
                        }
                        cc.push(vmap[v]);
                    }
                    cells.push(cc);
                }
                (pts, cells, None)
            }
        },
        _ => {
            return Err(crate::error::Error::invalid_mesh(format!(
                "VTK export supports D = 3 or 4, not {D}"
            )))
        }
    };

    let cell_type = match D {
        3 => 5,  // VTK_TRIANGLE
        _ => 10, // VTK_TETRA
    };
    // A 4D cross section holds tetrahedra even though D = 4.
    let verts_per_cell = cells.first().map(|c| c.len()).unwrap_or(D);
    let cell_type = if verts_per_cell == 3 { 5 } else { cell_type };

    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# vtk DataFile Version 3.0")?;
    writeln!(f, "space-time slab mesh")?;
    writeln!(f, "ASCII")?;
    writeln!(f, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(f, "POINTS {} double", points.len())?;
    for p in &points {
        writeln!(f, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2])?;
    }
    let list_len: usize = cells.iter().map(|c| c.len() + 1).sum();
    writeln!(f, "CELLS {} {}", cells.len(), list_len)?;
    for c in &cells {
        write!(f, "{}", c.len())?;
        for v in c {
            write!(f, " {v}")?;
        }
        writeln!(f)?;
    }
    writeln!(f, "CELL_TYPES {}", cells.len())?;
    for _ in &cells {
        writeln!(f, "{cell_type}")?;
    }
    if let Some(time) = time {
        writeln!(f, "POINT_DATA {}", time.len())?;
        writeln!(f, "SCALARS time double 1")?;
        writeln!(f, "LOOKUP_TABLE default")?;
        for t in time {
            writeln!(f, "{t:.16e}")?;
        }
    }
    Ok(())
}
