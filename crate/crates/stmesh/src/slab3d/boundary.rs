//! Boundary-shell extraction from a spatial cap mesh.

use super::hypermesh::CapMesh;
use crate::error::{Error, Result};
use crate::scene::SurfaceOwner;
use std::collections::HashMap;

/// Outward-oriented boundary triangles of a cap, partitioned by owning
/// surface, plus the distinct boundary vertices in first-seen order.
#[derive(Debug, Clone)]
pub struct BoundaryShell {
    pub triangles: Vec<[usize; 3]>,
    pub owner: Vec<SurfaceOwner>,
    pub vertices: Vec<usize>,
}

fn spatial(cap: &CapMesh, v: usize) -> [f64; 3] {
    let c = cap.mesh.vertices[v].coords;
    [c[0], c[1], c[2]]
}

fn signed_vol3(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3], d: &[f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = [d[0] - a[0], d[1] - a[1], d[2] - a[2]];
    u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
}

/// Collects the triangles incident to exactly one tetrahedron, oriented so
/// the normal points away from the adjacent cell's fourth vertex.
pub fn extract_boundary_triangles(cap: &CapMesh) -> Result<BoundaryShell> {
    let mut census: HashMap<[usize; 3], (u32, [usize; 4], usize)> = HashMap::new();
    for (ci, cell) in cap.mesh.cells.iter().enumerate() {
        let _ = ci;
        for k in 0..4 {
            let mut f = [0usize; 3];
            let mut w = 0;
            for (i, &v) in cell.iter().enumerate() {
                if i != k {
                    f[w] = v;
                    w += 1;
                }
            }
            let mut key = f;
            key.sort_unstable();
            match census.get_mut(&key) {
                Some(entry) => {
                    entry.0 += 1;
                }
                None => {
                    census.insert(key, (1, *cell, cell[k]));
                }
            }
        }
    }

    let mut triangles = Vec::new();
    let mut owner = Vec::new();
    // Deterministic order: sort boundary faces by their key.
    let mut boundary: Vec<([usize; 3], [usize; 4], usize)> = Vec::new();
    for (key, (count, cell, opp)) in &census {
        match count {
            1 => boundary.push((*key, *cell, *opp)),
            2 => {}
            n => {
                return Err(Error::invalid_mesh(format!(
                    "face {key:?} is incident to {n} tetrahedra"
                )))
            }
        }
    }
    boundary.sort_unstable_by_key(|(key, _, _)| *key);

    for (key, _cell, opp) in boundary {
        let mut tri = key;
        let vol = signed_vol3(
            &spatial(cap, tri[0]),
            &spatial(cap, tri[1]),
            &spatial(cap, tri[2]),
            &spatial(cap, opp),
        );
        if vol > 0.0 {
            tri.swap(1, 2);
        }
        let tri_owner = classify_owner(cap, &tri)?;
        triangles.push(tri);
        owner.push(tri_owner);
    }

    let mut seen: HashMap<usize, ()> = HashMap::new();
    let mut vertices = Vec::new();
    for tri in &triangles {
        for &v in tri {
            if seen.insert(v, ()).is_none() {
                vertices.push(v);
            }
        }
    }
    Ok(BoundaryShell { triangles, owner, vertices })
}

fn classify_owner(cap: &CapMesh, tri: &[usize; 3]) -> Result<SurfaceOwner> {
    let mut shape: Option<usize> = None;
    let mut all_shape = true;
    for &v in tri {
        match cap.owners[v] {
            Some(SurfaceOwner::Shape(s)) => match shape {
                None => shape = Some(s),
                Some(prev) if prev == s => {}
                Some(prev) => {
                    return Err(Error::invalid_mesh(format!(
                        "boundary triangle {tri:?} spans shapes {prev} and {s}"
                    )))
                }
            },
            Some(SurfaceOwner::Box) => all_shape = false,
            None => {
                return Err(Error::invalid_mesh(format!(
                    "boundary triangle {tri:?} has an interior vertex {v}"
                )))
            }
        }
    }
    match (all_shape, shape) {
        (true, Some(s)) => Ok(SurfaceOwner::Shape(s)),
        (false, Some(s)) => Err(Error::invalid_mesh(format!(
            "boundary triangle {tri:?} mixes box and shape {s} vertices"
        ))),
        _ => Ok(SurfaceOwner::Box),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Patch, SimplicialMesh, SpaceTimePoint, VertexTag};
    use crate::scene::{BoxDomain, MovingScene, MovingShape, RadiusLaw, ShapeKind};

    fn single_tet_cap() -> CapMesh {
        let mesh = SimplicialMesh::<4> {
            vertices: vec![
                SpaceTimePoint::new([0.0, 0.0, 0.0, 0.0]),
                SpaceTimePoint::new([1.0, 0.0, 0.0, 0.0]),
                SpaceTimePoint::new([0.0, 1.0, 0.0, 0.0]),
                SpaceTimePoint::new([0.0, 0.0, 1.0, 0.0]),
            ],
            cells: vec![[0, 1, 2, 3]],
            vertex_tag: vec![VertexTag::BoxBoundary; 4],
            patch: vec![Patch::Initial],
        };
        CapMesh { mesh, owners: vec![Some(SurfaceOwner::Box); 4] }
    }

    #[test]
    fn single_tet_has_four_outward_faces() {
        let cap = single_tet_cap();
        let shell = extract_boundary_triangles(&cap).unwrap();
        assert_eq!(shell.triangles.len(), 4);
        assert_eq!(shell.vertices.len(), 4);
        // Outward: each face normal points away from the centroid.
        let centroid = [0.25, 0.25, 0.25];
        for tri in &shell.triangles {
            let v = signed_vol3(
                &spatial(&cap, tri[0]),
                &spatial(&cap, tri[1]),
                &spatial(&cap, tri[2]),
                &centroid,
            );
            assert!(v < 0.0, "face {tri:?} not outward");
        }
    }

    #[test]
    fn cube_of_six_tets_has_twelve_boundary_faces() {
        let scene =
            MovingScene::new(BoxDomain::new([0.0; 3], [1.0; 3]).unwrap(), vec![], 0.0, 1.0)
                .unwrap();
        let cap = super::super::hypermesh::generate_initial_hypermesh(&scene, 1.0).unwrap();
        assert_eq!(cap.mesh.cells.len(), 6);
        let shell = extract_boundary_triangles(&cap).unwrap();
        assert_eq!(shell.triangles.len(), 12);
        assert!(shell.owner.iter().all(|o| *o == SurfaceOwner::Box));
    }

    #[test]
    fn sphere_in_cube_yields_two_opposite_shells() {
        let scene = MovingScene::new(
            BoxDomain::new([-5.0; 3], [5.0; 3]).unwrap(),
            vec![MovingShape {
                center: [0.0; 3],
                kind: ShapeKind::Sphere(RadiusLaw { r0: 1.0, m: 0.0 }),
            }],
            0.0,
            1.0,
        )
        .unwrap();
        let cap = super::super::hypermesh::generate_initial_hypermesh(&scene, 0.8).unwrap();
        let shell = extract_boundary_triangles(&cap).unwrap();
        let mut box_flux = 0.0;
        let mut sphere_flux = 0.0;
        for (tri, owner) in shell.triangles.iter().zip(&shell.owner) {
            let a = spatial(&cap, tri[0]);
            let b = spatial(&cap, tri[1]);
            let c = spatial(&cap, tri[2]);
            let centroid =
                [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0, (a[2] + b[2] + c[2]) / 3.0];
            // Flux of the radial field through the face.
            let n = [
                (b[1] - a[1]) * (c[2] - a[2]) - (b[2] - a[2]) * (c[1] - a[1]),
                (b[2] - a[2]) * (c[0] - a[0]) - (b[0] - a[0]) * (c[2] - a[2]),
                (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]),
            ];
            let flux = n[0] * centroid[0] + n[1] * centroid[1] + n[2] * centroid[2];
            match owner {
                SurfaceOwner::Box => box_flux += flux,
                SurfaceOwner::Shape(0) => sphere_flux += flux,
                other => panic!("unexpected owner {other:?}"),
            }
        }
        // The outer shell faces outward (positive radial flux), the cavity
        // shell faces into the sphere (negative radial flux).
        assert!(box_flux > 0.0, "box flux {box_flux}");
        assert!(sphere_flux < 0.0, "sphere flux {sphere_flux}");
    }
}
