//! Conforming subdivision of space-time triangular prisms into tetrahedra.
//!
//! A prism connects a boundary triangle at t_n to its advected image at
//! t_np1. Every lateral quadrilateral face is split into four triangles
//! through a shared Steiner point at its centroid, so the triangulation of a
//! face is identical from both incident prisms (and invariant under
//! reflections and rotations of the prism onto itself). The ten-tetrahedron
//! strategy hubs those fans on one face centroid; the fourteen-tetrahedron
//! strategy hubs them on the prism centroid.

use crate::error::{Error, Result};
use crate::geom::{cayley_menger_volume, SpaceTimePoint, VertexTag};
use std::collections::HashMap;

/// Prism subdivision strategy: 10 tetrahedra (three face Steiner points) or
/// 14 tetrahedra (three face Steiner points plus the prism centroid).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitStrategy {
    TenTet,
    FourteenTet,
}

impl SplitStrategy {
    pub fn tets_per_prism(&self) -> usize {
        match self {
            SplitStrategy::TenTet => 10,
            SplitStrategy::FourteenTet => 14,
        }
    }
}

/// Six ordered vertex indices: bottom triangle at t_n, top triangle at
/// t_np1, with top vertex i the trajectory image of bottom vertex i.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangularPrism {
    pub bottom: [usize; 3],
    pub top: [usize; 3],
}

impl TriangularPrism {
    /// Lateral quad j in cyclic order: (b_j, b_{j+1}, t_{j+1}, t_j).
    pub fn quad(&self, j: usize) -> [usize; 4] {
        [
            self.bottom[j],
            self.bottom[(j + 1) % 3],
            self.top[(j + 1) % 3],
            self.top[j],
        ]
    }
}

fn quad_key(quad: [usize; 4]) -> [usize; 4] {
    let mut k = quad;
    k.sort_unstable();
    k
}

/// Shared Steiner vertices: one per lateral quad face (keyed by the sorted
/// corner indices, so both incident prisms agree bit-for-bit), plus one
/// centroid per prism for the fourteen-tetrahedron strategy.
#[derive(Debug, Default)]
pub struct FaceSteinerRegistry {
    face: HashMap<[usize; 4], usize>,
    interior: HashMap<usize, usize>,
}

fn centroid4(vertices: &[SpaceTimePoint<4>], ids: [usize; 4]) -> SpaceTimePoint<4> {
    let mut c = [0.0; 4];
    for id in ids {
        for k in 0..4 {
            c[k] += vertices[id].coords[k] / 4.0;
        }
    }
    SpaceTimePoint::new(c)
}

fn steiner_tag(tags: &[VertexTag], ids: &[usize]) -> VertexTag {
    if ids.iter().all(|&v| tags[v] == VertexTag::ObjectBoundary) {
        VertexTag::ObjectBoundary
    } else if ids.iter().all(|&v| tags[v] == VertexTag::BoxBoundary) {
        VertexTag::BoxBoundary
    } else {
        VertexTag::Interior
    }
}

impl FaceSteinerRegistry {
    /// Two-phase deterministic build: collect every lateral quad key, then
    /// assign Steiner vertex indices in sorted key order.
    pub fn build(
        prisms: &[TriangularPrism],
        vertices: &mut Vec<SpaceTimePoint<4>>,
        tags: &mut Vec<VertexTag>,
    ) -> Self {
        let mut keys: Vec<[usize; 4]> = Vec::with_capacity(prisms.len() * 3);
        for prism in prisms {
            for j in 0..3 {
                keys.push(quad_key(prism.quad(j)));
            }
        }
        keys.sort_unstable();
        keys.dedup();
        let mut face = HashMap::with_capacity(keys.len());
        for key in keys {
            let id = vertices.len();
            vertices.push(centroid4(vertices, key));
            tags.push(steiner_tag(tags, &key));
            face.insert(key, id);
        }
        Self { face, interior: HashMap::new() }
    }

    pub fn face_steiner(&self, quad: [usize; 4]) -> usize {
        self.face[&quad_key(quad)]
    }

    fn interior_steiner(
        &mut self,
        prism_id: usize,
        prism: &TriangularPrism,
        vertices: &mut Vec<SpaceTimePoint<4>>,
        tags: &mut Vec<VertexTag>,
    ) -> usize {
        if let Some(&id) = self.interior.get(&prism_id) {
            return id;
        }
        let mut c = [0.0; 4];
        for &v in prism.bottom.iter().chain(prism.top.iter()) {
            for k in 0..4 {
                c[k] += vertices[v].coords[k] / 6.0;
            }
        }
        let id = vertices.len();
        vertices.push(SpaceTimePoint::new(c));
        tags.push(VertexTag::Interior);
        self.interior.insert(prism_id, id);
        id
    }
}

/// The four triangles of a quad face fanned around its Steiner centroid, in
/// cyclic order. Both prisms incident to the face produce this exact set.
pub fn quad_fan_triangles(quad: [usize; 4], steiner: usize) -> [[usize; 3]; 4] {
    [
        [quad[0], quad[1], steiner],
        [quad[1], quad[2], steiner],
        [quad[2], quad[3], steiner],
        [quad[3], quad[0], steiner],
    ]
}

fn check_degeneracy(
    tets: &[[usize; 4]],
    vertices: &[SpaceTimePoint<4>],
    prism_id: usize,
) -> Result<()> {
    for tet in tets {
        let vol = cayley_menger_volume(
            &vertices[tet[0]],
            &vertices[tet[1]],
            &vertices[tet[2]],
            &vertices[tet[3]],
        )?;
        let mut max_edge = 0.0f64;
        for i in 0..4 {
            for j in (i + 1)..4 {
                max_edge = max_edge.max(vertices[tet[i]].dist(&vertices[tet[j]]));
            }
        }
        if vol <= 1e-12 * max_edge.powi(3) {
            return Err(Error::DegenerateSplit(format!(
                "prism {prism_id} produced a degenerate tetrahedron {tet:?} (volume {vol:.3e})"
            )));
        }
    }
    Ok(())
}

/// Ten-tetrahedron split: the Steiner point of the lateral quad opposite the
/// bottom edge (b0, b1) serves as the apex hub; the other two quads fan
/// around their own centroids toward it.
pub fn split_prism_c(
    prism: &TriangularPrism,
    prism_id: usize,
    registry: &FaceSteinerRegistry,
    vertices: &[SpaceTimePoint<4>],
) -> Result<Vec<[usize; 4]>> {
    let [b0, b1, b2] = prism.bottom;
    let [t0, t1, t2] = prism.top;
    let s0 = registry.face_steiner(prism.quad(0));
    let a = registry.face_steiner(prism.quad(1));
    let s2 = registry.face_steiner(prism.quad(2));
    let tets = vec![
        [b0, b1, b2, a],
        [t0, t1, t2, a],
        [b0, b1, a, s0],
        [b1, t1, a, s0],
        [t0, t1, a, s0],
        [b0, t0, a, s0],
        [b0, b2, a, s2],
        [b2, t2, a, s2],
        [t0, t2, a, s2],
        [b0, t0, a, s2],
    ];
    check_degeneracy(&tets, vertices, prism_id)?;
    Ok(tets)
}

/// Fourteen-tetrahedron split: both triangular caps and all three quad fans
/// connect to a Steiner point at the prism centroid.
pub fn split_prism_e(
    prism: &TriangularPrism,
    prism_id: usize,
    registry: &mut FaceSteinerRegistry,
    vertices: &mut Vec<SpaceTimePoint<4>>,
    tags: &mut Vec<VertexTag>,
) -> Result<Vec<[usize; 4]>> {
    let [b0, b1, b2] = prism.bottom;
    let [t0, t1, t2] = prism.top;
    let g = registry.interior_steiner(prism_id, prism, vertices, tags);
    let mut tets = vec![[b0, b1, b2, g], [t0, t1, t2, g]];
    for j in 0..3 {
        let quad = prism.quad(j);
        let s = registry.face_steiner(quad);
        for tri in quad_fan_triangles(quad, s) {
            tets.push([tri[0], tri[1], tri[2], g]);
        }
    }
    check_degeneracy(&tets, vertices, prism_id)?;
    Ok(tets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// The reference prism: unit right triangle at t = 0 extruded to t = 1.
    fn reference_prism() -> (Vec<SpaceTimePoint<4>>, Vec<VertexTag>, TriangularPrism) {
        let verts = vec![
            SpaceTimePoint::new([0.0, 0.0, 0.0, 0.0]),
            SpaceTimePoint::new([1.0, 0.0, 0.0, 0.0]),
            SpaceTimePoint::new([0.0, 1.0, 0.0, 0.0]),
            SpaceTimePoint::new([0.0, 0.0, 0.0, 1.0]),
            SpaceTimePoint::new([1.0, 0.0, 0.0, 1.0]),
            SpaceTimePoint::new([0.0, 1.0, 0.0, 1.0]),
        ];
        let tags = vec![VertexTag::ObjectBoundary; 6];
        (verts, tags, TriangularPrism { bottom: [0, 1, 2], top: [3, 4, 5] })
    }

    fn total_volume(tets: &[[usize; 4]], verts: &[SpaceTimePoint<4>]) -> f64 {
        tets.iter()
            .map(|t| {
                cayley_menger_volume(&verts[t[0]], &verts[t[1]], &verts[t[2]], &verts[t[3]])
                    .unwrap()
            })
            .sum()
    }

    #[test]
    fn ten_tet_split_reproduces_reference_index_sets() {
        let (mut verts, mut tags, prism) = reference_prism();
        let reg = FaceSteinerRegistry::build(&[prism], &mut verts, &mut tags);
        // Steiner labels in the reference frame: r7 on the quad skipping
        // vertex b0, r8 on the quad under edge (b0, b1), r9 on the remaining
        // quad.
        let r7 = reg.face_steiner(prism.quad(1));
        let r8 = reg.face_steiner(prism.quad(0));
        let r9 = reg.face_steiner(prism.quad(2));
        assert_eq!(verts[r7].coords, [0.5, 0.5, 0.0, 0.5]);
        assert_eq!(verts[r8].coords, [0.5, 0.0, 0.0, 0.5]);
        assert_eq!(verts[r9].coords, [0.0, 0.5, 0.0, 0.5]);

        let tets = split_prism_c(&prism, 0, &reg, &verts).unwrap();
        let expected = vec![
            [0, 1, 2, r7],
            [3, 4, 5, r7],
            [0, 1, r7, r8],
            [1, 4, r7, r8],
            [3, 4, r7, r8],
            [0, 3, r7, r8],
            [0, 2, r7, r9],
            [2, 5, r7, r9],
            [3, 5, r7, r9],
            [0, 3, r7, r9],
        ];
        assert_eq!(tets, expected);
        // Uses nine distinct vertices (no prism centroid).
        let mut used: Vec<usize> = tets.iter().flatten().cloned().collect();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), 9);
        assert_relative_eq!(total_volume(&tets, &verts), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn fourteen_tet_split_partitions_reference_prism() {
        let (mut verts, mut tags, prism) = reference_prism();
        let mut reg = FaceSteinerRegistry::build(&[prism], &mut verts, &mut tags);
        let tets = split_prism_e(&prism, 0, &mut reg, &mut verts, &mut tags).unwrap();
        assert_eq!(tets.len(), 14);
        let g = reg.interior.get(&0).cloned().unwrap();
        assert_eq!(
            verts[g].coords,
            [1.0 / 3.0, 1.0 / 3.0, 0.0, 0.5],
            "prism centroid Steiner point"
        );
        // Caps stay whole and connect to the centroid.
        assert_eq!(tets[0], [0, 1, 2, g]);
        assert_eq!(tets[1], [3, 4, 5, g]);
        // Every other tetrahedron joins one quad-fan triangle to the centroid.
        for tet in &tets[2..] {
            assert_eq!(tet[3], g);
        }
        // Ten distinct vertices: six corners, three face Steiners, centroid.
        let mut used: Vec<usize> = tets.iter().flatten().cloned().collect();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), 10);
        assert_relative_eq!(total_volume(&tets, &verts), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn shared_quad_face_gets_identical_triangles_from_both_prisms() {
        // Two prisms sharing the lateral quad over edge (b1, b2).
        let mut verts = vec![
            SpaceTimePoint::new([0.0, 0.0, 0.0, 0.0]),
            SpaceTimePoint::new([1.0, 0.0, 0.0, 0.0]),
            SpaceTimePoint::new([0.0, 1.0, 0.0, 0.0]),
            SpaceTimePoint::new([1.1, 1.2, 0.0, 0.0]),
            SpaceTimePoint::new([0.0, 0.0, 0.1, 1.0]),
            SpaceTimePoint::new([1.0, 0.1, 0.0, 1.0]),
            SpaceTimePoint::new([0.0, 1.0, -0.1, 1.0]),
            SpaceTimePoint::new([1.2, 1.3, 0.0, 1.0]),
        ];
        let mut tags = vec![VertexTag::ObjectBoundary; 8];
        let p1 = TriangularPrism { bottom: [0, 1, 2], top: [4, 5, 6] };
        let p2 = TriangularPrism { bottom: [2, 1, 3], top: [6, 5, 7] };
        let mut reg = FaceSteinerRegistry::build(&[p1, p2], &mut verts, &mut tags);

        let face_triangles = |tets: &[[usize; 4]], quad: [usize; 4], s: usize| {
            let mut tris: Vec<[usize; 3]> = Vec::new();
            let on_face = |v: usize| quad.contains(&v) || v == s;
            for tet in tets {
                for k in 0..4 {
                    let mut tri: Vec<usize> =
                        tet.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &v)| v).collect();
                    if tri.iter().all(|&v| on_face(v)) && tri.contains(&s) {
                        tri.sort_unstable();
                        tris.push([tri[0], tri[1], tri[2]]);
                    }
                }
            }
            tris.sort_unstable();
            tris.dedup();
            tris
        };

        // The shared quad: edge (1, 2) extruded to (5, 6).
        let shared = [1, 2, 6, 5];
        let s = reg.face_steiner(shared);

        let c1 = split_prism_c(&p1, 0, &reg, &verts).unwrap();
        let c2 = split_prism_c(&p2, 1, &reg, &verts).unwrap();
        let f1 = face_triangles(&c1, shared, s);
        let f2 = face_triangles(&c2, shared, s);
        assert_eq!(f1.len(), 4);
        assert_eq!(f1, f2, "strategy C conformity across the shared quad");

        let e1 = split_prism_e(&p1, 0, &mut reg, &mut verts, &mut tags).unwrap();
        let e2 = split_prism_e(&p2, 1, &mut reg, &mut verts, &mut tags).unwrap();
        let g1 = face_triangles(&e1, shared, s);
        let g2 = face_triangles(&e2, shared, s);
        assert_eq!(g1, g2, "strategy E conformity across the shared quad");
        assert_eq!(f1, g1, "strategies C and E agree on quad-face triangulations");
    }

    #[test]
    fn degenerate_prism_is_rejected() {
        let mut verts = vec![
            SpaceTimePoint::new([0.0, 0.0, 0.0, 0.0]),
            SpaceTimePoint::new([1.0, 0.0, 0.0, 0.0]),
            SpaceTimePoint::new([2.0, 0.0, 0.0, 0.0]), // collinear bottom
            SpaceTimePoint::new([0.0, 0.0, 0.0, 1.0]),
            SpaceTimePoint::new([1.0, 0.0, 0.0, 1.0]),
            SpaceTimePoint::new([2.0, 0.0, 0.0, 1.0]),
        ];
        let mut tags = vec![VertexTag::ObjectBoundary; 6];
        let prism = TriangularPrism { bottom: [0, 1, 2], top: [3, 4, 5] };
        let reg = FaceSteinerRegistry::build(&[prism], &mut verts, &mut tags);
        let err = split_prism_c(&prism, 7, &reg, &verts).unwrap_err();
        match err {
            Error::DegenerateSplit(msg) => assert!(msg.contains("prism 7")),
            other => panic!("expected degenerate-split error, got {other}"),
        }
    }
}
