//! Core simplicial-mesh representation shared by every pipeline stage.
//!
//! Meshes are codimension-1 simplicial complexes embedded in space-time:
//! triangles in 3D (2D+t) or tetrahedra in 4D (3D+t). The embedding dimension
//! `D` is a const parameter; cells always have `D` vertices.

mod closure;
mod measure;
mod merge;

pub use closure::{hull_closure_check, ClosureReport};
pub use measure::{cayley_menger_volume, cell_measure, heron_area, total_measure, MeasureReport};
pub use merge::merge_and_synchronize;

use crate::error::{Error, Result};

/// A vertex in (d spatial + 1 temporal) dimensions; the last coordinate is time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimePoint<const D: usize> {
    pub coords: [f64; D],
}

impl<const D: usize> SpaceTimePoint<D> {
    pub fn new(coords: [f64; D]) -> Self {
        Self { coords }
    }

    pub fn time(&self) -> f64 {
        self.coords[D - 1]
    }

    /// Spatial part (time coordinate dropped).
    pub fn spatial(&self) -> [f64; D] {
        let mut s = self.coords;
        s[D - 1] = 0.0;
        s
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    pub fn sub(&self, other: &Self) -> [f64; D] {
        let mut d = [0.0; D];
        for i in 0..D {
            d[i] = self.coords[i] - other.coords[i];
        }
        d
    }

    pub fn dist(&self, other: &Self) -> f64 {
        norm(&self.sub(other))
    }
}

pub fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        s += a[i] * b[i];
    }
    s
}

pub fn norm<const D: usize>(v: &[f64; D]) -> f64 {
    dot(v, v).sqrt()
}

/// Cross product in 3D.
pub fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Generalized cross product of three vectors in 4D: the vector orthogonal to
/// all three whose magnitude is the 3-volume of the spanned parallelepiped.
pub fn cross4(a: &[f64; 4], b: &[f64; 4], c: &[f64; 4]) -> [f64; 4] {
    let det3 = |c0: usize, c1: usize, c2: usize| -> f64 {
        a[c0] * (b[c1] * c[c2] - b[c2] * c[c1]) - a[c1] * (b[c0] * c[c2] - b[c2] * c[c0])
            + a[c2] * (b[c0] * c[c1] - b[c1] * c[c0])
    };
    [
        det3(1, 2, 3),
        -det3(0, 2, 3),
        det3(0, 1, 3),
        -det3(0, 1, 2),
    ]
}

/// Per-vertex classification: which surface a vertex lies on, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexTag {
    ObjectBoundary,
    BoxBoundary,
    Interior,
}

/// Per-cell patch label: which part of the slab hull a cell belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Patch {
    Initial,
    Intermediate,
    Terminating,
}

/// Simplicial mesh of codimension-1 cells embedded in `D`-dimensional
/// space-time. `D = 3` holds triangles, `D = 4` holds tetrahedra.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialMesh<const D: usize> {
    pub vertices: Vec<SpaceTimePoint<D>>,
    pub cells: Vec<[usize; D]>,
    pub vertex_tag: Vec<VertexTag>,
    pub patch: Vec<Patch>,
}

impl<const D: usize> Default for SimplicialMesh<D> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<const D: usize> SimplicialMesh<D> {
    pub fn empty() -> Self {
        Self { vertices: Vec::new(), cells: Vec::new(), vertex_tag: Vec::new(), patch: Vec::new() }
    }

    pub fn dim_embed(&self) -> usize {
        D
    }

    /// Simplex dimension of the cells (2 for triangles, 3 for tetrahedra).
    pub fn dim_cell(&self) -> usize {
        D - 1
    }

    pub fn push_vertex(&mut self, p: SpaceTimePoint<D>, tag: VertexTag) -> usize {
        self.vertices.push(p);
        self.vertex_tag.push(tag);
        self.vertices.len() - 1
    }

    pub fn push_cell(&mut self, cell: [usize; D], patch: Patch) {
        self.cells.push(cell);
        self.patch.push(patch);
    }

    /// Longest edge of a cell.
    pub fn cell_max_edge(&self, cell: &[usize; D]) -> f64 {
        let mut m = 0.0f64;
        for i in 0..D {
            for j in (i + 1)..D {
                m = m.max(self.vertices[cell[i]].dist(&self.vertices[cell[j]]));
            }
        }
        m
    }

    /// Scale-aware degeneracy tolerance for one cell:
    /// 1e-12 x (longest edge)^dim_cell.
    pub fn degeneracy_tol(&self, cell: &[usize; D]) -> f64 {
        1e-12 * self.cell_max_edge(cell).powi((D - 1) as i32)
    }

    /// Full validity check: index ranges, finite coordinates, no repeated
    /// vertex within a cell, no duplicate cells, positive cell measures.
    pub fn validate(&self) -> Result<()> {
        if self.vertex_tag.len() != self.vertices.len() {
            return Err(Error::invalid_mesh("vertex_tag length mismatch"));
        }
        if self.patch.len() != self.cells.len() {
            return Err(Error::invalid_mesh("patch length mismatch"));
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid_mesh(format!("vertex {i} has non-finite coordinates")));
            }
        }
        let nv = self.vertices.len();
        let mut seen: Vec<[usize; D]> = Vec::with_capacity(self.cells.len());
        for (ci, cell) in self.cells.iter().enumerate() {
            for &v in cell {
                if v >= nv {
                    return Err(Error::invalid_mesh(format!(
                        "cell {ci} references vertex {v} out of range {nv}"
                    )));
                }
            }
            let mut s = *cell;
            s.sort_unstable();
            for k in 1..D {
                if s[k] == s[k - 1] {
                    return Err(Error::invalid_mesh(format!("cell {ci} repeats vertex {}", s[k])));
                }
            }
            seen.push(s);
            let measure = cell_measure(self, cell)?;
            if measure <= self.degeneracy_tol(cell) {
                return Err(Error::invalid_mesh(format!(
                    "cell {ci} has degenerate measure {measure:.3e}"
                )));
            }
        }
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(Error::invalid_mesh(format!("duplicate cell {:?}", w[0])));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri_mesh(pts: &[[f64; 3]], cells: &[[usize; 3]]) -> SimplicialMesh<3> {
        SimplicialMesh {
            vertices: pts.iter().map(|&c| SpaceTimePoint::new(c)).collect(),
            cells: cells.to_vec(),
            vertex_tag: vec![VertexTag::Interior; pts.len()],
            patch: vec![Patch::Initial; cells.len()],
        }
    }

    #[test]
    fn validate_accepts_unit_triangle() {
        let m = tri_mesh(&[[0., 0., 0.], [1., 0., 0.], [0., 1., 0.]], &[[0, 1, 2]]);
        m.validate().unwrap();
        assert_eq!(m.dim_cell(), 2);
    }

    #[test]
    fn validate_rejects_repeated_vertex_in_cell() {
        let m = tri_mesh(&[[0., 0., 0.], [1., 0., 0.], [0., 1., 0.]], &[[0, 1, 1]]);
        assert!(m.validate().is_err());
    }

    #[test]
    fn validate_rejects_duplicate_cells() {
        let m = tri_mesh(&[[0., 0., 0.], [1., 0., 0.], [0., 1., 0.]], &[[0, 1, 2], [2, 0, 1]]);
        assert!(m.validate().is_err());
    }

    #[test]
    fn validate_rejects_degenerate_cell() {
        let m = tri_mesh(&[[0., 0., 0.], [1., 0., 0.], [2., 0., 0.]], &[[0, 1, 2]]);
        assert!(m.validate().is_err());
    }

    #[test]
    fn validate_rejects_out_of_range_index() {
        let m = tri_mesh(&[[0., 0., 0.], [1., 0., 0.], [0., 1., 0.]], &[[0, 1, 5]]);
        assert!(m.validate().is_err());
    }

    #[test]
    fn cross4_is_orthogonal_and_scaled() {
        let a = [1., 0., 0., 0.];
        let b = [0., 1., 0., 0.];
        let c = [0., 0., 1., 0.];
        let n = cross4(&a, &b, &c);
        assert_eq!(norm(&n), 1.0);
        assert_eq!(dot(&n, &a), 0.0);
        assert_eq!(dot(&n, &b), 0.0);
        assert_eq!(dot(&n, &c), 0.0);
    }
}
