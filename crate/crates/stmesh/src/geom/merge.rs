//! Connectivity synchronization: unify coincident vertices across meshes.

use super::{cell_measure, SimplicialMesh, SpaceTimePoint, VertexTag};
use crate::error::{Error, Result};
use std::collections::HashMap;

fn grid_key<const D: usize>(p: &SpaceTimePoint<D>, tol: f64) -> [i64; D] {
    let mut k = [0i64; D];
    for i in 0..D {
        k[i] = (p.coords[i] / tol).floor() as i64;
    }
    k
}

fn tag_rank(t: VertexTag) -> u8 {
    match t {
        VertexTag::ObjectBoundary => 2,
        VertexTag::BoxBoundary => 1,
        VertexTag::Interior => 0,
    }
}

/// Merges meshes into one, unifying vertices closer than `tol` (Euclidean in
/// space-time) through a spatial hash grid with cell size `tol`. Patch labels
/// are preserved; duplicate cells are dropped. A cell that collapses under
/// merging is a conformity error.
pub fn merge_and_synchronize<const D: usize>(
    meshes: &[&SimplicialMesh<D>],
    tol: f64,
) -> Result<SimplicialMesh<D>> {
    if !(tol > 0.0) {
        return Err(Error::invalid_input("merge tolerance must be positive"));
    }
    let mut out = SimplicialMesh::<D>::empty();
    let mut grid: HashMap<[i64; D], Vec<usize>> = HashMap::new();
    let tol2 = tol * tol;

    // Representative lookup in first-seen scan order: a new vertex is kept
    // only if no earlier representative lies within tol, which makes a second
    // pass with the same tol a no-op.
    let mut neighbor_offsets: Vec<[i64; D]> = Vec::new();
    let mut count = 1usize;
    for _ in 0..D {
        count *= 3;
    }
    for code in 0..count {
        let mut off = [0i64; D];
        let mut c = code;
        for slot in off.iter_mut() {
            *slot = (c % 3) as i64 - 1;
            c /= 3;
        }
        neighbor_offsets.push(off);
    }

    let mut maps: Vec<Vec<usize>> = Vec::with_capacity(meshes.len());
    for mesh in meshes {
        let mut map = Vec::with_capacity(mesh.vertices.len());
        for (v, &tag) in mesh.vertices.iter().zip(&mesh.vertex_tag) {
            let key = grid_key(v, tol);
            let mut found = None;
            'search: for off in &neighbor_offsets {
                let mut k = key;
                for i in 0..D {
                    k[i] += off[i];
                }
                if let Some(bucket) = grid.get(&k) {
                    for &rep in bucket {
                        let d = v.sub(&out.vertices[rep]);
                        if super::dot(&d, &d) <= tol2 {
                            found = Some(rep);
                            break 'search;
                        }
                    }
                }
            }
            let idx = match found {
                Some(rep) => {
                    if tag_rank(tag) > tag_rank(out.vertex_tag[rep]) {
                        out.vertex_tag[rep] = tag;
                    }
                    rep
                }
                None => {
                    let idx = out.push_vertex(*v, tag);
                    grid.entry(key).or_default().push(idx);
                    idx
                }
            };
            map.push(idx);
        }
        maps.push(map);
    }

    let mut seen: HashMap<[usize; D], usize> = HashMap::new();
    let mut collapsed: Vec<String> = Vec::new();
    for (mi, mesh) in meshes.iter().enumerate() {
        for (ci, (cell, &patch)) in mesh.cells.iter().zip(&mesh.patch).enumerate() {
            let mut mapped = [0usize; D];
            for (slot, &v) in mapped.iter_mut().zip(cell.iter()) {
                *slot = maps[mi][v];
            }
            let mut sorted = mapped;
            sorted.sort_unstable();
            let mut repeated = false;
            for k in 1..D {
                if sorted[k] == sorted[k - 1] {
                    repeated = true;
                }
            }
            if repeated {
                collapsed.push(format!("mesh {mi} cell {ci}"));
                continue;
            }
            if seen.contains_key(&sorted) {
                continue;
            }
            let measure = cell_measure(&out, &mapped)?;
            if measure <= out.degeneracy_tol(&mapped) {
                collapsed.push(format!("mesh {mi} cell {ci}"));
                continue;
            }
            seen.insert(sorted, out.cells.len());
            out.push_cell(mapped, patch);
        }
    }
    if !collapsed.is_empty() {
        return Err(Error::Conformity(format!(
            "merge collapsed {} cell(s) to zero measure: {}",
            collapsed.len(),
            collapsed.join(", ")
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Patch;
    use approx::assert_relative_eq;

    fn pt(x: f64, y: f64, t: f64) -> SpaceTimePoint<3> {
        SpaceTimePoint::new([x, y, t])
    }

    fn square_strip(offset: f64) -> SimplicialMesh<3> {
        SimplicialMesh {
            vertices: vec![
                pt(offset, 0., 0.),
                pt(offset + 1., 0., 0.),
                pt(offset + 1., 1., 0.),
                pt(offset, 1., 0.),
            ],
            cells: vec![[0, 1, 2], [0, 2, 3]],
            vertex_tag: vec![VertexTag::Interior; 4],
            patch: vec![Patch::Initial; 2],
        }
    }

    #[test]
    fn shared_boundary_vertices_unify() {
        // Two unit squares sharing the edge x = 1.
        let a = square_strip(0.0);
        let b = square_strip(1.0);
        let merged = merge_and_synchronize(&[&a, &b], 1e-10).unwrap();
        assert_eq!(merged.vertices.len(), 6);
        assert_eq!(merged.cells.len(), 4);
        merged.validate().unwrap();
        // The shared edge (1,0)-(1,1) is incident to exactly 2 triangles.
        let shared: Vec<usize> = merged
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| (v.coords[0] - 1.0).abs() < 1e-12)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(shared.len(), 2);
        let incident = merged
            .cells
            .iter()
            .filter(|c| c.contains(&shared[0]) && c.contains(&shared[1]))
            .count();
        assert_eq!(incident, 2);
        let rep = crate::geom::total_measure(&merged).unwrap();
        assert_relative_eq!(rep.total, 2.0, max_relative = 1e-13);
    }

    #[test]
    fn disjoint_meshes_keep_all_vertices() {
        let a = square_strip(0.0);
        let b = square_strip(5.0);
        let merged = merge_and_synchronize(&[&a, &b], 1e-10).unwrap();
        assert_eq!(merged.vertices.len(), 8);
    }

    #[test]
    fn merge_is_idempotent() {
        let a = square_strip(0.0);
        let b = square_strip(1.0);
        let once = merge_and_synchronize(&[&a, &b], 1e-10).unwrap();
        let twice = merge_and_synchronize(&[&once], 1e-10).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn collapse_is_reported() {
        // A degenerate sliver whose vertices all merge pairwise.
        let m = SimplicialMesh::<3> {
            vertices: vec![pt(0., 0., 0.), pt(1e-14, 0., 0.), pt(0., 1e-14, 0.)],
            cells: vec![[0, 1, 2]],
            vertex_tag: vec![VertexTag::Interior; 3],
            patch: vec![Patch::Initial],
        };
        let err = merge_and_synchronize(&[&m], 1e-10).unwrap_err();
        assert!(matches!(err, Error::Conformity(_)));
    }

    #[test]
    fn rejects_nonpositive_tol() {
        let a = square_strip(0.0);
        assert!(merge_and_synchronize(&[&a], 0.0).is_err());
    }
}
