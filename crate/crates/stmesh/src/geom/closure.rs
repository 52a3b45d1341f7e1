//! Hull closure: facet census and divergence-theorem watertightness.

use super::measure::tree_sum;
use super::{cross3, cross4, norm, total_measure, SimplicialMesh};
use crate::error::Result;

/// Outcome of [`hull_closure_check`]. `closed` means every codimension-1
/// facet (edge of a triangle mesh, triangle of a tetrahedral mesh) is shared
/// by exactly 2 cells. `net_normal_rel` is the magnitude of the
/// measure-weighted normal sum over a consistent orientation, relative to the
/// total measure; a closed orientable hull satisfies the divergence theorem
/// and drives it to zero.
#[derive(Debug, Clone)]
pub struct ClosureReport {
    pub closed: bool,
    pub orientable: bool,
    pub boundary_facets: Vec<Vec<usize>>,
    pub nonmanifold_facets: Vec<Vec<usize>>,
    pub net_normal_rel: f64,
    pub components: usize,
}

impl ClosureReport {
    pub fn watertight(&self) -> bool {
        self.closed && self.orientable && self.net_normal_rel <= 1e-9
    }
}

/// Parity (+1/-1) of the permutation sorting a small index tuple.
fn sort_parity(tuple: &[usize]) -> i8 {
    let mut inversions = 0;
    for i in 0..tuple.len() {
        for j in (i + 1)..tuple.len() {
            if tuple[i] > tuple[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Measure-weighted normal of a cell in the embedding space, following the
/// cell's vertex order. Magnitude equals the cell measure.
fn cell_normal<const D: usize>(mesh: &SimplicialMesh<D>, cell: &[usize; D]) -> [f64; D] {
    let mut n = [0.0; D];
    match D {
        3 => {
            let e1: [f64; 3] = mesh.vertices[cell[1]].sub(&mesh.vertices[cell[0]])[..3]
                .try_into()
                .unwrap();
            let e2: [f64; 3] = mesh.vertices[cell[2]].sub(&mesh.vertices[cell[0]])[..3]
                .try_into()
                .unwrap();
            let c = cross3(&e1, &e2);
            for i in 0..3 {
                n[i] = c[i] / 2.0;
            }
        }
        4 => {
            let e1: [f64; 4] = mesh.vertices[cell[1]].sub(&mesh.vertices[cell[0]])[..4]
                .try_into()
                .unwrap();
            let e2: [f64; 4] = mesh.vertices[cell[2]].sub(&mesh.vertices[cell[0]])[..4]
                .try_into()
                .unwrap();
            let e3: [f64; 4] = mesh.vertices[cell[3]].sub(&mesh.vertices[cell[0]])[..4]
                .try_into()
                .unwrap();
            let c = cross4(&e1, &e2, &e3);
            for i in 0..4 {
                n[i] = c[i] / 6.0;
            }
        }
        _ => unreachable!("unsupported embedding dimension"),
    }
    n
}

/// Verifies that a merged slab hull is closed and watertight.
pub fn hull_closure_check<const D: usize>(mesh: &SimplicialMesh<D>) -> Result<ClosureReport> {
    let ncells = mesh.cells.len();
    // Census entries: (sorted facet key, cell, dropped local slot).
    let mut entries: Vec<([u32; 3], u32, u8)> = Vec::with_capacity(ncells * D);
    for (ci, cell) in mesh.cells.iter().enumerate() {
        for j in 0..D {
            let mut key = [u32::MAX; 3];
            let mut k = 0;
            for (slot, &v) in cell.iter().enumerate() {
                if slot != j {
                    key[k] = v as u32;
                    k += 1;
                }
            }
            key[..D - 1].sort_unstable();
            entries.push((key, ci as u32, j as u8));
        }
    }
    entries.sort_unstable();

    let mut boundary_facets = Vec::new();
    let mut nonmanifold_facets = Vec::new();
    // Adjacency with a relative-orientation sign per shared facet.
    let mut adjacency: Vec<Vec<(u32, i8)>> = vec![Vec::new(); ncells];

    let facet_sign = |cell_idx: u32, dropped: u8| -> i8 {
        let cell = &mesh.cells[cell_idx as usize];
        let mut tuple = Vec::with_capacity(D - 1);
        for (slot, &v) in cell.iter().enumerate() {
            if slot != dropped as usize {
                tuple.push(v);
            }
        }
        let drop_sign = if dropped % 2 == 0 { 1 } else { -1 };
        drop_sign * sort_parity(&tuple)
    };

    let mut i = 0;
    while i < entries.len() {
        let mut j = i + 1;
        while j < entries.len() && entries[j].0 == entries[i].0 {
            j += 1;
        }
        let group = &entries[i..j];
        match group.len() {
            1 => {
                let key = group[0].0;
                boundary_facets.push(key[..D - 1].iter().map(|&v| v as usize).collect());
            }
            2 => {
                let (ka, ca, ja) = group[0];
                let (_, cb, jb) = group[1];
                let _ = ka;
                let ra = facet_sign(ca, ja);
                let rb = facet_sign(cb, jb);
                // Consistent orientation requires the two induced facet
                // orientations to be opposite: sigma_b = -sigma_a * ra * rb.
                let rel = -ra * rb;
                adjacency[ca as usize].push((cb, rel));
                adjacency[cb as usize].push((ca, rel));
            }
            _ => {
                let key = group[0].0;
                nonmanifold_facets.push(key[..D - 1].iter().map(|&v| v as usize).collect());
            }
        }
        i = j;
    }

    let closed = boundary_facets.is_empty() && nonmanifold_facets.is_empty();

    // Propagate orientation signs across shared facets.
    let mut sigma: Vec<i8> = vec![0; ncells];
    let mut orientable = true;
    let mut components = 0;
    let mut stack = Vec::new();
    for seed in 0..ncells {
        if sigma[seed] != 0 {
            continue;
        }
        components += 1;
        sigma[seed] = 1;
        stack.push(seed);
        while let Some(c) = stack.pop() {
            let sc = sigma[c];
            for &(nb, rel) in &adjacency[c] {
                let want = sc * rel;
                let nb = nb as usize;
                if sigma[nb] == 0 {
                    sigma[nb] = want;
                    stack.push(nb);
                } else if sigma[nb] != want {
                    orientable = false;
                }
            }
        }
    }

    // Net measure-weighted normal under the propagated orientation.
    let mut per_coord: Vec<Vec<f64>> = vec![Vec::with_capacity(ncells); D];
    for (ci, cell) in mesh.cells.iter().enumerate() {
        let n = cell_normal(mesh, cell);
        let s = sigma[ci] as f64;
        for k in 0..D {
            per_coord[k].push(s * n[k]);
        }
    }
    let mut net = [0.0; D];
    for k in 0..D {
        net[k] = tree_sum(&per_coord[k]);
    }
    let total = total_measure(mesh)?.total;
    let net_normal_rel = if total > 0.0 { norm(&net) / total } else { 0.0 };

    Ok(ClosureReport {
        closed,
        orientable,
        boundary_facets,
        nonmanifold_facets,
        net_normal_rel,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Patch, SpaceTimePoint, VertexTag};

    fn pt(x: f64, y: f64, z: f64) -> SpaceTimePoint<3> {
        SpaceTimePoint::new([x, y, z])
    }

    fn tet_boundary() -> SimplicialMesh<3> {
        // Boundary of the tetrahedron (0,0,0),(1,0,0),(0,1,0),(0,0,1),
        // oriented outward.
        SimplicialMesh {
            vertices: vec![pt(0., 0., 0.), pt(1., 0., 0.), pt(0., 1., 0.), pt(0., 0., 1.)],
            cells: vec![[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]],
            vertex_tag: vec![VertexTag::ObjectBoundary; 4],
            patch: vec![Patch::Intermediate; 4],
        }
    }

    #[test]
    fn closed_tet_boundary_is_watertight() {
        let rep = hull_closure_check(&tet_boundary()).unwrap();
        assert!(rep.closed);
        assert!(rep.orientable);
        assert_eq!(rep.components, 1);
        assert!(rep.net_normal_rel < 1e-14, "net normal {}", rep.net_normal_rel);
        assert!(rep.watertight());
    }

    #[test]
    fn missing_triangle_reports_three_boundary_edges() {
        let mut m = tet_boundary();
        m.cells.pop();
        m.patch.pop();
        let rep = hull_closure_check(&m).unwrap();
        assert!(!rep.closed);
        assert_eq!(rep.boundary_facets.len(), 3);
        assert!(rep.nonmanifold_facets.is_empty());
    }

    #[test]
    fn nonmanifold_edge_is_reported() {
        let mut m = tet_boundary();
        // Add a fin triangle reusing the edge (1,2).
        m.vertices.push(pt(2., 2., 2.));
        m.vertex_tag.push(VertexTag::Interior);
        m.cells.push([1, 2, 4]);
        m.patch.push(Patch::Intermediate);
        let rep = hull_closure_check(&m).unwrap();
        assert!(!rep.closed);
        assert!(!rep.nonmanifold_facets.is_empty());
    }
}
