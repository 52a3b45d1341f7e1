//! The 2D+t pipeline: one closed triangular surface hull per space-time
//! slab. The initial plane inherits the previous terminating cap, boundary
//! loops are advected along their trajectories, lateral quads are fanned
//! around centroid Steiner points, and the terminating plane is re-meshed by
//! constrained Delaunay triangulation of the advected loops.

use crate::cdt::{refine_to_sizing, triangulate_constrained, PlanarInput, RefineOptions};
use crate::error::{Error, Result};
use crate::geom::{
    cross3, dot, hull_closure_check, merge_and_synchronize, norm, ClosureReport, Patch,
    SimplicialMesh, SpaceTimePoint, VertexTag,
};
use crate::scene::{MovingScene, ShapeKind, SurfaceOwner};
use crate::trajectory::{advect_vertices, TaggedVertex, TrajectoryConfig};
use std::collections::HashMap;

/// Triangle mesh of a constant-time plane plus per-vertex surface owners.
#[derive(Debug, Clone)]
pub struct Cap2 {
    pub mesh: SimplicialMesh<3>,
    pub owners: Vec<Option<SurfaceOwner>>,
}

/// One boundary loop, vertices in domain-on-the-left order.
#[derive(Debug, Clone)]
pub struct BoundaryLoop {
    pub vertices: Vec<usize>,
    pub owner: SurfaceOwner,
}

/// One 2D+t slab with its three patches and the merged closed hull.
#[derive(Debug, Clone)]
pub struct Slab2 {
    pub t_n: f64,
    pub t_np1: f64,
    pub initial: SimplicialMesh<3>,
    pub intermediate: SimplicialMesh<3>,
    pub terminating: SimplicialMesh<3>,
    pub hull: SimplicialMesh<3>,
    pub closure: ClosureReport,
    pub terminating_cap: Cap2,
}

#[derive(Debug, Clone)]
pub struct SlabConfig2 {
    pub trajectory: TrajectoryConfig,
    pub merge_tol: f64,
    pub sizing_box: f64,
    pub sizing_shapes: Vec<f64>,
}

/// Boundary edges of a cap (edges incident to exactly one triangle) chained
/// into loops with the domain on the left, partitioned by owning surface.
pub fn extract_boundary_edges(cap: &Cap2) -> Result<Vec<BoundaryLoop>> {
    let mut census: HashMap<(usize, usize), (u8, (usize, usize))> = HashMap::new();
    for tri in &cap.mesh.cells {
        for i in 0..3 {
            let a = tri[i];
            let b = tri[(i + 1) % 3];
            let key = (a.min(b), a.max(b));
            match census.get_mut(&key) {
                Some(entry) => entry.0 += 1,
                None => {
                    census.insert(key, (1, (a, b)));
                }
            }
        }
    }
    let mut successor: HashMap<usize, usize> = HashMap::new();
    let mut starts: Vec<usize> = Vec::new();
    for (key, (count, directed)) in &census {
        match count {
            1 => {
                // The directed edge as it appears in its counterclockwise
                // triangle keeps the domain on the left.
                if successor.insert(directed.0, directed.1).is_some() {
                    return Err(Error::invalid_mesh(format!(
                        "boundary vertex {} has two outgoing boundary edges",
                        directed.0
                    )));
                }
                starts.push(directed.0);
            }
            2 => {}
            n => {
                return Err(Error::invalid_mesh(format!(
                    "edge {key:?} is incident to {n} triangles"
                )))
            }
        }
    }
    starts.sort_unstable();
    let mut loops = Vec::new();
    let mut visited: HashMap<usize, ()> = HashMap::new();
    for &start in &starts {
        if visited.contains_key(&start) {
            continue;
        }
        let mut cycle = vec![start];
        visited.insert(start, ());
        let mut cur = successor[&start];
        while cur != start {
            visited.insert(cur, ());
            cycle.push(cur);
            cur = *successor.get(&cur).ok_or_else(|| {
                Error::invalid_mesh(format!("boundary loop broken at vertex {cur}"))
            })?;
        }
        let owner = cycle
            .iter()
            .map(|&v| cap.owners[v])
            .try_fold(None, |acc: Option<SurfaceOwner>, o| match (acc, o) {
                (None, Some(o)) => Ok(Some(o)),
                (Some(a), Some(o)) if a == o => Ok(Some(a)),
                _ => Err(Error::invalid_mesh("boundary loop mixes surface owners".to_string())),
            })?
            .ok_or_else(|| Error::invalid_mesh("boundary loop without owners".to_string()))?;
        loops.push(BoundaryLoop { vertices: cycle, owner });
    }
    Ok(loops)
}

/// Discretizes the scene boundaries at time `t`: the box as a closed
/// rectangle loop at spacing ~ sizing_box, each circle as a regular polygon
/// with max(16, ceil(perimeter / sizing)) vertices.
fn scene_loops_2d(
    scene: &MovingScene<2>,
    sizing_box: f64,
    sizing_shapes: &[f64],
    t: f64,
) -> (Vec<[f64; 2]>, Vec<[usize; 2]>, Vec<usize>, Vec<Option<SurfaceOwner>>) {
    let mut points = Vec::new();
    let mut segments = Vec::new();
    let mut tags = Vec::new();
    let mut owners = Vec::new();

    let lower = scene.box_domain.lower;
    let upper = scene.box_domain.upper;
    let corners = [
        [lower[0], lower[1]],
        [upper[0], lower[1]],
        [upper[0], upper[1]],
        [lower[0], upper[1]],
    ];
    let base = points.len();
    for side in 0..4 {
        let a = corners[side];
        let b = corners[(side + 1) % 4];
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let n = (len / sizing_box).ceil().max(1.0) as usize;
        for k in 0..n {
            let t_par = k as f64 / n as f64;
            points.push([a[0] + t_par * (b[0] - a[0]), a[1] + t_par * (b[1] - a[1])]);
            owners.push(Some(SurfaceOwner::Box));
        }
    }
    let n_box = points.len() - base;
    for k in 0..n_box {
        segments.push([base + k, base + (k + 1) % n_box]);
        tags.push(0);
    }

    for (s, shape) in scene.shapes.iter().enumerate() {
        if let ShapeKind::Circle(law) = shape.kind {
            let r = law.radius(t);
            let k = ((2.0 * std::f64::consts::PI * r / sizing_shapes[s]).ceil() as usize).max(16);
            let base = points.len();
            for i in 0..k {
                let ang = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                points.push([
                    shape.center[0] + r * ang.cos(),
                    shape.center[1] + r * ang.sin(),
                ]);
                owners.push(Some(SurfaceOwner::Shape(s)));
            }
            for i in 0..k {
                segments.push([base + i, base + (i + 1) % k]);
                tags.push(s + 1);
            }
        }
    }
    (points, segments, tags, owners)
}

fn planar_to_cap(
    points: &[[f64; 2]],
    point_tag: &[Option<usize>],
    triangles: Vec<[usize; 3]>,
    loop_owners: &[Option<SurfaceOwner>],
    t: f64,
    patch: Patch,
) -> Cap2 {
    let mut mesh = SimplicialMesh::<3>::empty();
    let mut owners = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let owner = if i < loop_owners.len() {
            loop_owners[i]
        } else {
            // Points inserted by refinement on constrained loops carry the
            // loop's region tag; interior insertions carry none.
            match point_tag[i] {
                Some(0) => Some(SurfaceOwner::Box),
                Some(tag) => Some(SurfaceOwner::Shape(tag - 1)),
                None => None,
            }
        };
        let tag = match owner {
            Some(SurfaceOwner::Box) => VertexTag::BoxBoundary,
            Some(SurfaceOwner::Shape(_)) => VertexTag::ObjectBoundary,
            None => VertexTag::Interior,
        };
        mesh.push_vertex(SpaceTimePoint::new([p[0], p[1], t]), tag);
        owners.push(owner);
    }
    for tri in triangles {
        mesh.push_cell(tri, patch);
    }
    Cap2 { mesh, owners }
}

/// Meshes the plane at `t` by constrained Delaunay triangulation of the
/// given loops plus sizing-driven interior refinement. Loop segments are
/// never split, so loop connectivity survives verbatim.
fn triangulate_plane(
    points: Vec<[f64; 2]>,
    segments: Vec<[usize; 2]>,
    tags: Vec<usize>,
    owners: &[Option<SurfaceOwner>],
    holes: Vec<[f64; 2]>,
    sizing_box: f64,
    sizing_shapes: &[f64],
    t: f64,
    patch: Patch,
) -> Result<Cap2> {
    let mut sizing = std::collections::BTreeMap::new();
    sizing.insert(0, sizing_box);
    for (s, h) in sizing_shapes.iter().enumerate() {
        sizing.insert(s + 1, *h);
    }
    let input = PlanarInput { points, segments, segment_tags: tags, holes, sizing };
    let mut cdt = triangulate_constrained(&input)?;
    refine_to_sizing(
        &mut cdt,
        &RefineOptions { allow_segment_split: false, ..Default::default() },
    )?;
    let mesh = cdt.to_mesh();
    if !mesh.warnings.is_empty() {
        return Err(Error::Pipeline(format!(
            "plane triangulation merged duplicate loop points: {}",
            mesh.warnings.join("; ")
        )));
    }
    Ok(planar_to_cap(&mesh.points, &mesh.point_tag, mesh.triangles, owners, t, patch))
}

/// Bootstrap cap at t0 (the ghost slab's terminating plane).
pub fn build_ghost_cap(
    scene: &MovingScene<2>,
    sizing_box: f64,
    sizing_shapes: &[f64],
) -> Result<Cap2> {
    let (points, segments, tags, owners) =
        scene_loops_2d(scene, sizing_box, sizing_shapes, scene.t0);
    let holes = scene.shapes.iter().map(|s| s.center).collect();
    triangulate_plane(
        points,
        segments,
        tags,
        &owners,
        holes,
        sizing_box,
        sizing_shapes,
        scene.t0,
        Patch::Terminating,
    )
}

/// Stitches matched loops at t_n and t_np1 into lateral quads, each split
/// into four triangles through its centroid Steiner point.
pub fn build_intermediate_2d(
    bottom: &[SpaceTimePoint<3>],
    top: &[SpaceTimePoint<3>],
    bottom_tags: &[VertexTag],
    loops: &[BoundaryLoop],
    loop_index_of: &HashMap<usize, usize>,
) -> Result<SimplicialMesh<3>> {
    if bottom.len() != top.len() {
        return Err(Error::Pipeline(format!(
            "loop vertex counts differ: {} at t_n vs {} at t_np1",
            bottom.len(),
            top.len()
        )));
    }
    let n_ring = bottom.len();
    let mut mesh = SimplicialMesh::<3>::empty();
    for (p, tag) in bottom.iter().zip(bottom_tags) {
        mesh.push_vertex(*p, *tag);
    }
    for (p, tag) in top.iter().zip(bottom_tags) {
        mesh.push_vertex(*p, *tag);
    }
    for lp in loops {
        for k in 0..lp.vertices.len() {
            let a = loop_index_of[&lp.vertices[k]];
            let b = loop_index_of[&lp.vertices[(k + 1) % lp.vertices.len()]];
            let quad = [a, b, b + n_ring, a + n_ring];
            let mut centroid = [0.0; 3];
            for &q in &quad {
                for c in 0..3 {
                    centroid[c] += mesh.vertices[q].coords[c] / 4.0;
                }
            }
            let steiner_tag = bottom_tags[a];
            let s = mesh.push_vertex(SpaceTimePoint::new(centroid), steiner_tag);

            // Centroid-fan convexity audit: the four fan triangles must be
            // non-degenerate with consistently oriented normals.
            let mut normals: Vec<[f64; 3]> = Vec::with_capacity(4);
            for i in 0..4 {
                let p0 = mesh.vertices[quad[i]].coords;
                let p1 = mesh.vertices[quad[(i + 1) % 4]].coords;
                let pc = mesh.vertices[s].coords;
                let e1 = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
                let e2 = [pc[0] - p0[0], pc[1] - p0[1], pc[2] - p0[2]];
                let n = cross3(&e1, &e2);
                if norm(&n) == 0.0 {
                    return Err(Error::Pipeline(format!(
                        "degenerate lateral quad at loop vertices ({a}, {b})"
                    )));
                }
                normals.push(n);
            }
            for w in normals.windows(2) {
                if dot(&w[0], &w[1]) <= 0.0 {
                    return Err(Error::Pipeline(format!(
                        "non-convex lateral quad at loop vertices ({a}, {b}); reduce the slab duration"
                    )));
                }
            }
            for i in 0..4 {
                mesh.push_cell([quad[i], quad[(i + 1) % 4], s], Patch::Intermediate);
            }
        }
    }
    Ok(mesh)
}

/// Builds one 2D+t slab from the previous terminating cap.
pub fn build_slab_2d(
    prev: &Cap2,
    scene: &MovingScene<2>,
    t_n: f64,
    t_np1: f64,
    cfg: &SlabConfig2,
) -> Result<Slab2> {
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

    // Step 3: extract and advect the boundary loops.
    let loops = extract_boundary_edges(prev)?;
    let ring: Vec<usize> = loops.iter().flat_map(|lp| lp.vertices.iter().cloned()).collect();
    let mut loop_index_of: HashMap<usize, usize> = HashMap::with_capacity(ring.len());
    for (i, &v) in ring.iter().enumerate() {
        loop_index_of.insert(v, i);
    }
    let tagged: Vec<TaggedVertex<2>> = ring
        .iter()
        .map(|&v| {
            let c = prev.mesh.vertices[v].coords;
            TaggedVertex {
                position: [c[0], c[1]],
                owner: prev.owners[v].expect("loop vertices carry owners"),
            }
        })
        .collect();
    let moved = advect_vertices(&tagged, scene, t_n, t_np1, &cfg.trajectory)?;

    // Step 7: re-mesh the terminating plane from the advected loops.
    let mut segments = Vec::with_capacity(ring.len());
    let mut tags = Vec::with_capacity(ring.len());
    let mut owners_for_cdt: Vec<Option<SurfaceOwner>> = Vec::with_capacity(ring.len());
    {
        let mut offset = 0;
        for lp in &loops {
            let k = lp.vertices.len();
            let tag = match lp.owner {
                SurfaceOwner::Box => 0,
                SurfaceOwner::Shape(s) => s + 1,
            };
            for i in 0..k {
                segments.push([offset + i, offset + (i + 1) % k]);
                tags.push(tag);
                owners_for_cdt.push(Some(lp.owner));
            }
            offset += k;
        }
    }
    let holes = scene.shapes.iter().map(|s| s.center).collect();
    let terminating_cap = triangulate_plane(
        moved.clone(),
        segments,
        tags,
        &owners_for_cdt,
        holes,
        cfg.sizing_box,
        &cfg.sizing_shapes,
        t_np1,
        Patch::Terminating,
    )?;
    let terminating = terminating_cap.mesh.clone();

    // Steps 4-6: lateral quads between matched loops, bit-identical ring
    // coordinates taken from the two caps.
    let bottom: Vec<SpaceTimePoint<3>> = ring.iter().map(|&v| prev.mesh.vertices[v]).collect();
    let top: Vec<SpaceTimePoint<3>> =
        (0..ring.len()).map(|i| terminating_cap.mesh.vertices[i]).collect();
    let bottom_tags: Vec<VertexTag> =
        ring.iter().map(|&v| prev.mesh.vertex_tag[v]).collect();
    let intermediate =
        build_intermediate_2d(&bottom, &top, &bottom_tags, &loops, &loop_index_of)?;

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

    Ok(Slab2 { t_n, t_np1, initial, intermediate, terminating, hull, closure, terminating_cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::total_measure;
    use crate::scene::{BoxDomain, MovingShape, RadiusLaw};
    use approx::assert_relative_eq;

    fn circle_scene(m: f64) -> MovingScene<2> {
        MovingScene::new(
            BoxDomain::new([-5.0, -5.0], [5.0, 5.0]).unwrap(),
            vec![MovingShape {
                center: [0.0, 0.0],
                kind: ShapeKind::Circle(RadiusLaw { r0: 1.0, m }),
            }],
            0.0,
            1.0,
        )
        .unwrap()
    }

    fn square_cap() -> Cap2 {
        let mesh = SimplicialMesh::<3> {
            vertices: vec![
                SpaceTimePoint::new([0.0, 0.0, 0.0]),
                SpaceTimePoint::new([1.0, 0.0, 0.0]),
                SpaceTimePoint::new([1.0, 1.0, 0.0]),
                SpaceTimePoint::new([0.0, 1.0, 0.0]),
            ],
            cells: vec![[0, 1, 2], [0, 2, 3]],
            vertex_tag: vec![VertexTag::BoxBoundary; 4],
            patch: vec![Patch::Initial; 2],
        };
        Cap2 { mesh, owners: vec![Some(SurfaceOwner::Box); 4] }
    }

    #[test]
    fn square_boundary_is_one_ccw_loop() {
        let loops = extract_boundary_edges(&square_cap()).unwrap();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].vertices.len(), 4);
        // Domain on the left means counterclockwise for the outer loop.
        let cap = square_cap();
        let mut area = 0.0;
        let vs = &loops[0].vertices;
        for i in 0..vs.len() {
            let a = cap.mesh.vertices[vs[i]].coords;
            let b = cap.mesh.vertices[vs[(i + 1) % vs.len()]].coords;
            area += 0.5 * (a[0] * b[1] - a[1] * b[0]);
        }
        assert!(area > 0.0, "outer loop signed area {area}");
    }

    #[test]
    fn closed_mesh_has_no_boundary() {
        // Boundary of a tetrahedron: a closed triangle mesh.
        let mesh = SimplicialMesh::<3> {
            vertices: vec![
                SpaceTimePoint::new([0.0, 0.0, 0.0]),
                SpaceTimePoint::new([1.0, 0.0, 0.0]),
                SpaceTimePoint::new([0.0, 1.0, 0.0]),
                SpaceTimePoint::new([0.0, 0.0, 1.0]),
            ],
            cells: vec![[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]],
            vertex_tag: vec![VertexTag::ObjectBoundary; 4],
            patch: vec![Patch::Intermediate; 4],
        };
        let cap = Cap2 { mesh, owners: vec![Some(SurfaceOwner::Shape(0)); 4] };
        assert!(extract_boundary_edges(&cap).unwrap().is_empty());
    }

    #[test]
    fn ghost_cap_has_two_opposite_loops() {
        let scene = circle_scene(0.0);
        let cap = build_ghost_cap(&scene, 1.0, &[0.5]).unwrap();
        cap.mesh.validate().unwrap();
        let loops = extract_boundary_edges(&cap).unwrap();
        assert_eq!(loops.len(), 2);
        let signed_area = |lp: &BoundaryLoop| {
            let mut area = 0.0;
            for i in 0..lp.vertices.len() {
                let a = cap.mesh.vertices[lp.vertices[i]].coords;
                let b = cap.mesh.vertices[lp.vertices[(i + 1) % lp.vertices.len()]].coords;
                area += 0.5 * (a[0] * b[1] - a[1] * b[0]);
            }
            area
        };
        for lp in &loops {
            match lp.owner {
                SurfaceOwner::Box => assert!(signed_area(lp) > 0.0, "outer loop must be ccw"),
                SurfaceOwner::Shape(_) => {
                    assert!(signed_area(lp) < 0.0, "hole loop must be cw");
                    assert!(lp.vertices.len() >= 16);
                }
            }
        }
        // Cap area approximates the square minus the circle.
        let rep = total_measure(&cap.mesh).unwrap();
        let exact = 100.0 - std::f64::consts::PI;
        assert!((rep.total - exact).abs() / exact < 0.01, "cap area {}", rep.total);
    }

    #[test]
    fn static_single_edge_gives_unit_square_fan() {
        let bottom = vec![
            SpaceTimePoint::new([0.0, 0.0, 0.0]),
            SpaceTimePoint::new([1.0, 0.0, 0.0]),
        ];
        let top = vec![
            SpaceTimePoint::new([0.0, 0.0, 1.0]),
            SpaceTimePoint::new([1.0, 0.0, 1.0]),
        ];
        let loops = vec![BoundaryLoop { vertices: vec![0, 1], owner: SurfaceOwner::Box }];
        let mut idx = HashMap::new();
        idx.insert(0, 0);
        idx.insert(1, 1);
        let tags = vec![VertexTag::BoxBoundary; 2];
        let mesh = build_intermediate_2d(&bottom, &top, &tags, &loops, &idx).unwrap();
        // The loop 0 -> 1 -> 0 produces two quads (one per directed edge),
        // both covering the same unit square.
        assert_eq!(mesh.cells.len(), 8);
        let rep = total_measure(&mesh).unwrap();
        assert_relative_eq!(rep.total, 2.0, max_relative = 1e-12);
    }

    fn lateral_object_area(mesh: &SimplicialMesh<3>) -> f64 {
        mesh.cells
            .iter()
            .filter(|cell| {
                cell.iter().all(|&v| mesh.vertex_tag[v] == VertexTag::ObjectBoundary)
            })
            .map(|cell| {
                crate::geom::heron_area(
                    &mesh.vertices[cell[0]],
                    &mesh.vertices[cell[1]],
                    &mesh.vertices[cell[2]],
                )
                .unwrap()
            })
            .sum()
    }

    #[test]
    fn static_circle_lateral_area_matches_polygon_perimeter() {
        let scene = circle_scene(0.0);
        let cfg = SlabConfig2 {
            trajectory: TrajectoryConfig::default(),
            merge_tol: 1e-10 * 200.0_f64.sqrt(),
            sizing_box: 1.0,
            sizing_shapes: vec![2.0 * std::f64::consts::PI / 64.0],
        };
        let cap = build_ghost_cap(&scene, cfg.sizing_box, &cfg.sizing_shapes).unwrap();
        let slab = build_slab_2d(&cap, &scene, 0.0, 1.0, &cfg).unwrap();
        // 64-gon lateral area equals perimeter x dt exactly (planar ruled
        // quads), and lands within 0.2% of 2 pi R dt.
        let loops = extract_boundary_edges(&cap).unwrap();
        let circle_loop = loops.iter().find(|l| l.owner == SurfaceOwner::Shape(0)).unwrap();
        assert_eq!(circle_loop.vertices.len(), 64);
        let mut perimeter = 0.0;
        for i in 0..64 {
            let a = cap.mesh.vertices[circle_loop.vertices[i]];
            let b = cap.mesh.vertices[circle_loop.vertices[(i + 1) % 64]];
            perimeter += a.dist(&b);
        }
        let lateral = lateral_object_area(&slab.intermediate);
        assert_relative_eq!(lateral, perimeter * 1.0, max_relative = 1e-12);
        let exact = 2.0 * std::f64::consts::PI;
        assert!((lateral - exact).abs() / exact < 0.002, "lateral {lateral} vs {exact}");
    }

    #[test]
    fn expanding_circle_lateral_area_approaches_frustum() {
        let scene = circle_scene(0.25);
        let cfg = SlabConfig2 {
            trajectory: TrajectoryConfig::default(),
            merge_tol: 1e-10 * 200.0_f64.sqrt(),
            sizing_box: 1.0,
            sizing_shapes: vec![2.0 * std::f64::consts::PI / 128.0],
        };
        let cap = build_ghost_cap(&scene, cfg.sizing_box, &cfg.sizing_shapes).unwrap();
        let slab = build_slab_2d(&cap, &scene, 0.0, 1.0, &cfg).unwrap();
        let lateral = lateral_object_area(&slab.intermediate);
        // Frustum term of the exact expanding-circle area.
        let exact = std::f64::consts::PI * (1.25 + 1.0) * ((0.25_f64).powi(2) + 1.0).sqrt();
        assert!(
            (lateral - exact).abs() / exact < 0.002,
            "lateral {lateral} vs frustum {exact}"
        );
    }

    #[test]
    fn stationary_circle_slab_hull_area_near_240() {
        let scene = circle_scene(0.0);
        let cfg = SlabConfig2 {
            trajectory: TrajectoryConfig::default(),
            merge_tol: 1e-10 * 200.0_f64.sqrt(),
            sizing_box: 0.7,
            sizing_shapes: vec![0.35],
        };
        let cap = build_ghost_cap(&scene, cfg.sizing_box, &cfg.sizing_shapes).unwrap();
        let slab = build_slab_2d(&cap, &scene, 0.0, 1.0, &cfg).unwrap();
        assert!(slab.closure.watertight());
        let measured = total_measure(&slab.hull).unwrap().total;
        assert!((measured - 240.0).abs() / 240.0 < 0.05, "hull area {measured}");
    }

    #[test]
    fn zero_duration_slab_is_rejected() {
        let scene = circle_scene(0.0);
        let cfg = SlabConfig2 {
            trajectory: TrajectoryConfig::default(),
            merge_tol: 1e-10,
            sizing_box: 1.0,
            sizing_shapes: vec![0.5],
        };
        let cap = build_ghost_cap(&scene, 1.0, &[0.5]).unwrap();
        assert!(build_slab_2d(&cap, &scene, 1.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn expanding_circle_slabs_conform_across_interfaces() {
        let scene = circle_scene(0.25);
        let cfg = SlabConfig2 {
            trajectory: TrajectoryConfig::default(),
            merge_tol: 1e-10 * 200.0_f64.sqrt(),
            sizing_box: 1.0,
            sizing_shapes: vec![0.5],
        };
        let mut cap = build_ghost_cap(&scene, cfg.sizing_box, &cfg.sizing_shapes).unwrap();
        let mut prev_term: Option<SimplicialMesh<3>> = None;
        for k in 0..4 {
            let t_n = 0.25 * k as f64;
            let t_np1 = 0.25 * (k + 1) as f64;
            let slab = build_slab_2d(&cap, &scene, t_n, t_np1, &cfg).unwrap();
            assert!(slab.closure.watertight());
            if let Some(pt) = prev_term.take() {
                let mut initial = slab.initial.clone();
                for p in &mut initial.patch {
                    *p = Patch::Terminating;
                }
                assert_eq!(pt, initial, "slab interfaces must be vertex-identical");
            }
            prev_term = Some(slab.terminating.clone());
            cap = slab.terminating_cap;
        }
    }
}
