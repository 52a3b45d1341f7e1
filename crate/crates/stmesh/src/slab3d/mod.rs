//! The 3D+t pipeline: one closed tetrahedral hypersurface hull per space-time
//! slab, built from an initial spatial cap, advected boundary shells,
//! prism-to-tetrahedron subdivision, and a terminating cap.

mod boundary;
pub mod hypermesh;
mod prism;
mod transfer;

pub use boundary::{extract_boundary_triangles, BoundaryShell};
pub use hypermesh::{generate_initial_hypermesh, CapMesh};
pub use prism::{
    quad_fan_triangles, split_prism_c, split_prism_e, FaceSteinerRegistry, SplitStrategy,
    TriangularPrism,
};
pub use transfer::{external_mesher_transfer, topology_transfer};

use crate::error::{Error, Result};
use crate::geom::{
    hull_closure_check, merge_and_synchronize, ClosureReport, Patch, SimplicialMesh,
    SpaceTimePoint, VertexTag,
};
use crate::scene::{MovingScene, SurfaceOwner};
use crate::trajectory::{advect_vertices, TaggedVertex, TrajectoryConfig};
use std::collections::HashMap;

/// One 3D+t slab: the three patch meshes, the merged closed hull, and the
/// terminating cap that seeds the next slab.
#[derive(Debug, Clone)]
pub struct Slab3 {
    pub t_n: f64,
    pub t_np1: f64,
    pub initial: SimplicialMesh<4>,
    pub intermediate: SimplicialMesh<4>,
    pub terminating: SimplicialMesh<4>,
    pub hull: SimplicialMesh<4>,
    pub closure: ClosureReport,
    pub terminating_cap: CapMesh,
}

#[derive(Debug, Clone)]
pub struct SlabConfig3 {
    pub trajectory: TrajectoryConfig,
    pub strategy: SplitStrategy,
    pub merge_tol: f64,
    pub external_mesher: Option<String>,
}

/// Builds one slab from the previous terminating cap: copy the initial cap,
/// advect the boundary shell, stitch prisms over the shell triangles, split
/// them into tetrahedra through the shared Steiner registry, mesh the
/// terminating cap, and merge everything into a closed hull.
pub fn build_slab_3d(
    prev: &CapMesh,
    scene: &MovingScene<3>,
    t_n: f64,
    t_np1: f64,
    cfg: &SlabConfig3,
) -> Result<Slab3> {
    if !(t_np1 > t_n) {
        return Err(Error::Pipeline(format!(
            "slab duration must be positive (t_n = {t_n}, t_np1 = {t_np1})"
        )));
    }
    if let Some(v) = prev.mesh.vertices.first() {
        if (v.time() - t_n).abs() > 1e-9 * (t_np1 - t_n).abs().max(1.0) {
            return Err(Error::Pipeline(format!(
                "previous terminating cap sits at t = {}, expected {t_n}",
                v.time()
            )));
        }
    }

    let mut initial = prev.mesh.clone();
    for p in &mut initial.patch {
        *p = Patch::Initial;
    }

    let shell = extract_boundary_triangles(prev)?;
    let tagged: Vec<TaggedVertex<3>> = shell
        .vertices
        .iter()
        .map(|&v| {
            let c = prev.mesh.vertices[v].coords;
            TaggedVertex {
                position: [c[0], c[1], c[2]],
                owner: prev.owners[v].expect("shell vertices carry owners"),
            }
        })
        .collect();
    let moved = advect_vertices(&tagged, scene, t_n, t_np1, &cfg.trajectory)?;
    let advected: HashMap<usize, [f64; 3]> =
        shell.vertices.iter().cloned().zip(moved).collect();

    let terminating_cap = match &cfg.external_mesher {
        None => topology_transfer(prev, &advected, t_np1)?,
        Some(cmd) => external_mesher_transfer(prev, &advected, t_np1, cmd, cfg.merge_tol)?,
    };
    let terminating = terminating_cap.mesh.clone();

    let intermediate = build_intermediate_3d(prev, &terminating_cap, &shell, cfg.strategy)?;

    let hull = merge_and_synchronize(&[&initial, &intermediate, &terminating], cfg.merge_tol)?;
    let closure = hull_closure_check(&hull)?;
    if !closure.watertight() {
        return Err(Error::Conformity(format!(
            "slab hull [{t_n}, {t_np1}] is not closed: {} boundary, {} non-manifold facets, net normal {:.3e}",
            closure.boundary_facets.len(),
            closure.nonmanifold_facets.len(),
            closure.net_normal_rel
        )));
    }

    Ok(Slab3 {
        t_n,
        t_np1,
        initial,
        intermediate,
        terminating,
        hull,
        closure,
        terminating_cap,
    })
}

/// Stitches prisms between the initial and terminating boundary shells and
/// splits them into tetrahedra. Ring coordinates are copied bit-for-bit from
/// the two caps so merging unifies them exactly.
fn build_intermediate_3d(
    prev: &CapMesh,
    term: &CapMesh,
    shell: &BoundaryShell,
    strategy: SplitStrategy,
) -> Result<SimplicialMesh<4>> {
    let n_ring = shell.vertices.len();
    let mut local: HashMap<usize, usize> = HashMap::with_capacity(n_ring);
    let mut verts: Vec<SpaceTimePoint<4>> = Vec::with_capacity(2 * n_ring);
    let mut tags: Vec<VertexTag> = Vec::with_capacity(2 * n_ring);
    for (i, &v) in shell.vertices.iter().enumerate() {
        local.insert(v, i);
        verts.push(prev.mesh.vertices[v]);
        tags.push(prev.mesh.vertex_tag[v]);
    }
    for &v in &shell.vertices {
        verts.push(term.mesh.vertices[v]);
        tags.push(term.mesh.vertex_tag[v]);
    }

    let prisms: Vec<TriangularPrism> = shell
        .triangles
        .iter()
        .map(|tri| {
            let bottom = [local[&tri[0]], local[&tri[1]], local[&tri[2]]];
            TriangularPrism {
                bottom,
                top: [bottom[0] + n_ring, bottom[1] + n_ring, bottom[2] + n_ring],
            }
        })
        .collect();

    let mut registry = FaceSteinerRegistry::build(&prisms, &mut verts, &mut tags);
    let mut cells: Vec<[usize; 4]> = Vec::with_capacity(prisms.len() * strategy.tets_per_prism());
    for (pid, prism) in prisms.iter().enumerate() {
        let tets = match strategy {
            SplitStrategy::TenTet => split_prism_c(prism, pid, &registry, &verts)?,
            SplitStrategy::FourteenTet => {
                split_prism_e(prism, pid, &mut registry, &mut verts, &mut tags)?
            }
        };
        cells.extend(tets);
    }

    // Conformity audit: both prisms incident to a lateral quad contribute the
    // same four fan triangles.
    let mut fans: HashMap<[usize; 4], Vec<[[usize; 3]; 4]>> = HashMap::new();
    for prism in &prisms {
        for j in 0..3 {
            let quad = prism.quad(j);
            let steiner = registry.face_steiner(quad);
            let mut fan = quad_fan_triangles(quad, steiner);
            for tri in fan.iter_mut() {
                tri.sort_unstable();
            }
            fan.sort_unstable();
            let mut key = quad;
            key.sort_unstable();
            fans.entry(key).or_default().push(fan);
        }
    }
    for (key, list) in &fans {
        if list.len() > 2 {
            return Err(Error::Conformity(format!(
                "lateral quad {key:?} belongs to {} prisms",
                list.len()
            )));
        }
        if list.len() == 2 && list[0] != list[1] {
            return Err(Error::Conformity(format!(
                "lateral quad {key:?} is triangulated differently by its two prisms"
            )));
        }
    }

    let n_cells = cells.len();
    Ok(SimplicialMesh {
        vertices: verts,
        cells,
        vertex_tag: tags,
        patch: vec![Patch::Intermediate; n_cells],
    })
}

/// Prepares an imported cap mesh: checks the time plane and assigns surface
/// owners from the scene (nearest shape for object vertices).
pub fn adopt_imported_cap(mesh: SimplicialMesh<4>, scene: &MovingScene<3>) -> Result<CapMesh> {
    mesh.validate()?;
    let t0 = scene.t0;
    for v in &mesh.vertices {
        if (v.time() - t0).abs() > 1e-9 * (scene.tf - scene.t0).max(1.0) {
            return Err(Error::invalid_input(format!(
                "imported cap vertex at t = {} is off the initial plane t = {t0}",
                v.time()
            )));
        }
    }
    let mut owners = Vec::with_capacity(mesh.vertices.len());
    for (v, tag) in mesh.vertices.iter().zip(&mesh.vertex_tag) {
        let owner = match tag {
            VertexTag::BoxBoundary => Some(SurfaceOwner::Box),
            VertexTag::Interior => None,
            VertexTag::ObjectBoundary => {
                let spatial = [v.coords[0], v.coords[1], v.coords[2]];
                let mut best = (f64::INFINITY, 0usize);
                for (s, shape) in scene.shapes.iter().enumerate() {
                    let f = shape.implicit(&spatial, t0).abs();
                    if f < best.0 {
                        best = (f, s);
                    }
                }
                Some(SurfaceOwner::Shape(best.1))
            }
        };
        owners.push(owner);
    }
    Ok(CapMesh { mesh, owners })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::total_measure;
    use crate::scene::{BoxDomain, MovingShape, RadiusLaw, ShapeKind};
    use approx::assert_relative_eq;

    fn sphere_scene(m: f64) -> MovingScene<3> {
        MovingScene::new(
            BoxDomain::new([-5.0; 3], [5.0; 3]).unwrap(),
            vec![MovingShape {
                center: [0.0; 3],
                kind: ShapeKind::Sphere(RadiusLaw { r0: 1.0, m }),
            }],
            0.0,
            1.0,
        )
        .unwrap()
    }

    fn slab_cfg(strategy: SplitStrategy) -> SlabConfig3 {
        SlabConfig3 {
            trajectory: TrajectoryConfig::default(),
            strategy,
            merge_tol: 1e-10 * 300.0_f64.sqrt(),
            external_mesher: None,
        }
    }

    #[test]
    fn stationary_sphere_slab_hull_is_closed_and_near_exact() {
        let scene = sphere_scene(0.0);
        let cap = generate_initial_hypermesh(&scene, 0.8).unwrap();
        let slab =
            build_slab_3d(&cap, &scene, 0.0, 1.0, &slab_cfg(SplitStrategy::FourteenTet)).unwrap();
        assert!(slab.closure.watertight());
        let exact = 2.0 * (1000.0 - 4.0 / 3.0 * std::f64::consts::PI)
            + (600.0 + 4.0 * std::f64::consts::PI);
        let measured = total_measure(&slab.hull).unwrap().total;
        let rel = (measured - exact).abs() / exact;
        assert!(rel < 0.05, "hull volume {measured} vs exact {exact} (rel {rel})");
    }

    #[test]
    fn strategy_element_counts_match_shell_size() {
        let scene = sphere_scene(0.0);
        let cap = generate_initial_hypermesh(&scene, 1.1).unwrap();
        let shell = extract_boundary_triangles(&cap).unwrap();
        let slab_c =
            build_slab_3d(&cap, &scene, 0.0, 1.0, &slab_cfg(SplitStrategy::TenTet)).unwrap();
        let slab_e =
            build_slab_3d(&cap, &scene, 0.0, 1.0, &slab_cfg(SplitStrategy::FourteenTet)).unwrap();
        assert_eq!(slab_c.intermediate.cells.len(), 10 * shell.triangles.len());
        assert_eq!(slab_e.intermediate.cells.len(), 14 * shell.triangles.len());
        // Both strategies cover the same lateral hypersurface.
        let vc = total_measure(&slab_c.intermediate).unwrap().total;
        let ve = total_measure(&slab_e.intermediate).unwrap().total;
        assert_relative_eq!(vc, ve, max_relative = 1e-12);
    }

    #[test]
    fn expanding_sphere_slabs_conform_across_interfaces() {
        let scene = sphere_scene(0.25);
        let mut cap = generate_initial_hypermesh(&scene, 1.0).unwrap();
        let mut previous_terminating: Option<SimplicialMesh<4>> = None;
        for k in 0..2 {
            let t_n = 0.5 * k as f64;
            let t_np1 = 0.5 * (k + 1) as f64;
            let slab = build_slab_3d(
                &cap,
                &scene,
                t_n,
                t_np1,
                &slab_cfg(SplitStrategy::FourteenTet),
            )
            .unwrap();
            if let Some(prev_term) = previous_terminating.take() {
                let mut initial = slab.initial.clone();
                for p in &mut initial.patch {
                    *p = Patch::Terminating;
                }
                assert_eq!(prev_term, initial, "slab interfaces must be identical");
            }
            previous_terminating = Some(slab.terminating.clone());
            cap = slab.terminating_cap;
        }
    }

    #[test]
    fn imported_cap_adopts_owners() {
        let scene = sphere_scene(0.0);
        let cap = generate_initial_hypermesh(&scene, 1.0).unwrap();
        let adopted = adopt_imported_cap(cap.mesh.clone(), &scene).unwrap();
        assert_eq!(adopted.owners, cap.owners);
    }
}
