//! Initial spatial tetrahedral mesh of the region between the box and the
//! shapes, embedded in 4D space-time at t0.
//!
//! A uniform grid is split into six tetrahedra per cell with the monotone-
//! path template, which is face-conforming across cells. Grid vertices within
//! 0.4 h of a shape surface are warped onto the exact surface; remaining
//! surface crossings are resolved by clipping crossed tetrahedra against the
//! linearized surface, with cut vertices created on crossing edges, shared
//! through an edge registry, and projected onto the exact surface. Face
//! diagonals and interior fans follow lowest-global-index rules so adjacent
//! tetrahedra always agree on shared faces. Warps that produce degenerate
//! tetrahedra are rolled back and the mesh is rebuilt without them.

use crate::error::{Error, Result};
use crate::geom::{SimplicialMesh, SpaceTimePoint, VertexTag};
use crate::scene::{MovingScene, ShapeKind, SurfaceOwner};
use std::collections::HashMap;

/// Spatial cap mesh plus the surface owner of every vertex (None for
/// interior vertices).
#[derive(Debug, Clone)]
pub struct CapMesh {
    pub mesh: SimplicialMesh<4>,
    pub owners: Vec<Option<SurfaceOwner>>,
}

fn signed_vol3(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3], d: &[f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = [d[0] - a[0], d[1] - a[1], d[2] - a[2]];
    (u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0]))
        / 6.0
}

/// Signed distance to a shape's surface at time t (exact for spheres, exact
/// via closest-point projection for ellipsoids, with cheap conservative
/// bounds to skip the projection far from the surface).
fn shape_distance(scene: &MovingScene<3>, s: usize, x: &[f64; 3], t: f64, band: f64) -> f64 {
    let shape = &scene.shapes[s];
    match shape.kind {
        ShapeKind::Sphere(law) => {
            let dx = [x[0] - shape.center[0], x[1] - shape.center[1], x[2] - shape.center[2]];
            (dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2]).sqrt() - law.radius(t)
        }
        ShapeKind::Ellipsoid { semi_axes, .. } => {
            let f = shape.implicit(x, t);
            let smin = semi_axes.iter().cloned().fold(f64::INFINITY, f64::min);
            let rho = (f + 1.0).max(0.0).sqrt();
            let bound = smin * (rho - 1.0);
            if bound.abs() > band {
                return bound;
            }
            match scene.project_to_surface(s, x, t) {
                Ok(p) => {
                    let d = ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2) + (x[2] - p[2]).powi(2))
                        .sqrt();
                    if f < 0.0 {
                        -d
                    } else {
                        d
                    }
                }
                Err(_) => bound,
            }
        }
        ShapeKind::Circle(_) => f64::INFINITY,
    }
}

struct GridSpec {
    n: [usize; 3],
    h: [f64; 3],
    lower: [f64; 3],
}

impl GridSpec {
    fn vertex_id(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + (self.n[0] + 1) * (iy + (self.n[1] + 1) * iz)
    }

    fn vertex_pos(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        [
            self.lower[0] + ix as f64 * self.h[0],
            self.lower[1] + iy as f64 * self.h[1],
            self.lower[2] + iz as f64 * self.h[2],
        ]
    }
}

/// Clip one tetrahedron against the linearized surface, keeping the exterior
/// part. Entirely combinatorial: quad diagonals connect from the
/// lowest-index original vertex and interior fans start at the lowest-index
/// polytope vertex, so shared faces triangulate identically in both incident
/// tetrahedra. Labels: -1 inside, 0 on the surface, +1 outside.
fn clip_tet_exterior(
    tet: [usize; 4],
    labels: [i8; 4],
    mut cut: impl FnMut(usize, usize) -> usize,
) -> Vec<[usize; 4]> {
    let n_in = labels.iter().filter(|&&l| l < 0).count();
    if n_in == 0 {
        return vec![tet];
    }
    if n_in == 4 {
        return Vec::new();
    }
    let label_of = |v: usize| labels[tet.iter().position(|&x| x == v).unwrap()];
    let faces = [
        [tet[0], tet[1], tet[2]],
        [tet[0], tet[1], tet[3]],
        [tet[0], tet[2], tet[3]],
        [tet[1], tet[2], tet[3]],
    ];

    let mut face_triangles: Vec<[usize; 3]> = Vec::new();
    let mut cap_edges: Vec<[usize; 2]> = Vec::new();
    for face in faces {
        // Sutherland-Hodgman clip of the triangle against label >= 0.
        let mut poly: Vec<usize> = Vec::with_capacity(4);
        let mut zero_pts: Vec<usize> = Vec::with_capacity(2);
        let has_in = face.iter().any(|&v| label_of(v) < 0);
        for i in 0..3 {
            let a = face[i];
            let b = face[(i + 1) % 3];
            let la = label_of(a);
            let lb = label_of(b);
            let crossing = la * lb < 0;
            if lb >= 0 {
                if la < 0 && crossing {
                    poly.push(cut(a, b));
                }
                poly.push(b);
            } else if la > 0 && crossing {
                poly.push(cut(a, b));
            }
        }
        if has_in {
            for &v in &face {
                if label_of(v) == 0 {
                    zero_pts.push(v);
                }
            }
            for i in 0..3 {
                let a = face[i];
                let b = face[(i + 1) % 3];
                if label_of(a) * label_of(b) < 0 {
                    zero_pts.push(cut(a, b));
                }
            }
            zero_pts.sort_unstable();
            zero_pts.dedup();
            if zero_pts.len() == 2 {
                cap_edges.push([zero_pts[0], zero_pts[1]]);
            }
        }
        match poly.len() {
            0..=2 => {}
            3 => face_triangles.push([poly[0], poly[1], poly[2]]),
            4 => {
                // The two original (grid) vertices are cyclically adjacent;
                // split from the smaller one toward its opposite corner.
                let orig: Vec<usize> =
                    (0..4).filter(|&i| tet.contains(&poly[i])).map(|i| i).collect();
                debug_assert_eq!(orig.len(), 2);
                let pivot_slot = if poly[orig[0]] < poly[orig[1]] { orig[0] } else { orig[1] };
                let p = poly[pivot_slot];
                let q = poly[(pivot_slot + 1) % 4];
                let r = poly[(pivot_slot + 2) % 4];
                let s = poly[(pivot_slot + 3) % 4];
                face_triangles.push([p, q, r]);
                face_triangles.push([p, r, s]);
            }
            _ => unreachable!("triangle clip yields at most 4 vertices"),
        }
    }

    // Chain the cap edges into a cycle and fan it.
    cap_edges.sort_unstable();
    cap_edges.dedup();
    if cap_edges.len() >= 3 {
        let mut cycle = vec![cap_edges[0][0], cap_edges[0][1]];
        let mut used = vec![false; cap_edges.len()];
        used[0] = true;
        loop {
            let tail = *cycle.last().unwrap();
            let mut advanced = false;
            for (i, e) in cap_edges.iter().enumerate() {
                if used[i] {
                    continue;
                }
                if e[0] == tail || e[1] == tail {
                    let next = if e[0] == tail { e[1] } else { e[0] };
                    used[i] = true;
                    if next != cycle[0] {
                        cycle.push(next);
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
        if cycle.len() >= 3 {
            let apex_slot =
                (0..cycle.len()).min_by_key(|&i| cycle[i]).expect("nonempty cycle");
            for i in 0..cycle.len() {
                let a = cycle[i];
                let b = cycle[(i + 1) % cycle.len()];
                let apex = cycle[apex_slot];
                if a != apex && b != apex {
                    face_triangles.push([apex, a, b]);
                }
            }
        }
    }

    // All kept faces degenerate means the exterior region is
    // lower-dimensional (for example two vertices on the surface and the
    // rest inside); there is nothing to emit.
    let apex = match face_triangles.iter().flatten().min() {
        Some(&a) => a,
        None => return Vec::new(),
    };
    let mut out = Vec::new();
    for tri in &face_triangles {
        if !tri.contains(&apex) {
            out.push([apex, tri[0], tri[1], tri[2]]);
        }
    }
    out
}

/// Generates the initial hypersurface cap: a tetrahedral mesh of the box
/// minus the shapes at time t0, with every boundary-shell vertex exactly on
/// its surface.
pub fn generate_initial_hypermesh(scene: &MovingScene<3>, h_target: f64) -> Result<CapMesh> {
    if !(h_target > 0.0) {
        return Err(Error::invalid_input("grid spacing must be positive"));
    }
    let t0 = scene.t0;
    let lower = scene.box_domain.lower;
    let upper = scene.box_domain.upper;
    let mut n = [0usize; 3];
    let mut h = [0.0f64; 3];
    for k in 0..3 {
        let extent = upper[k] - lower[k];
        n[k] = ((extent / h_target).round() as usize).max(1);
        h[k] = extent / n[k] as f64;
    }
    let grid = GridSpec { n, h, lower };
    let h_max = h[0].max(h[1]).max(h[2]);
    let nv_grid = (n[0] + 1) * (n[1] + 1) * (n[2] + 1);

    let mut rollback: Vec<bool> = vec![false; nv_grid];
    for _attempt in 0..4 {
        match build_once(scene, &grid, h_max, t0, &rollback) {
            BuildOutcome::Done(cap) => return Ok(cap),
            BuildOutcome::RollbackWarps(verts) => {
                for v in verts {
                    rollback[v] = true;
                }
            }
            BuildOutcome::Failed(e) => return Err(e),
        }
    }
    Err(Error::InitialMesh(
        "degenerate tetrahedra persisted after warp rollback".into(),
    ))
}

enum BuildOutcome {
    Done(CapMesh),
    RollbackWarps(Vec<usize>),
    Failed(Error),
}

fn build_once(
    scene: &MovingScene<3>,
    grid: &GridSpec,
    h_max: f64,
    t0: f64,
    rollback: &[bool],
) -> BuildOutcome {
    let n = grid.n;
    let nv_grid = (n[0] + 1) * (n[1] + 1) * (n[2] + 1);
    let band = 2.5 * h_max;
    let warp_band = 0.4 * h_max;

    // Signed distance to the nearest shape and its index, per grid vertex.
    let mut dist: Vec<f64> = vec![f64::INFINITY; nv_grid];
    let mut owner_shape: Vec<u32> = vec![u32::MAX; nv_grid];
    for iz in 0..=n[2] {
        for iy in 0..=n[1] {
            for ix in 0..=n[0] {
                let id = grid.vertex_id(ix, iy, iz);
                let p = grid.vertex_pos(ix, iy, iz);
                for (s, _) in scene.shapes.iter().enumerate() {
                    let d = shape_distance(scene, s, &p, t0, band);
                    if d < dist[id] {
                        dist[id] = d;
                        owner_shape[id] = s as u32;
                    }
                }
            }
        }
    }

    // Warp near-surface vertices onto the exact surface.
    let mut pos: Vec<[f64; 3]> = Vec::with_capacity(nv_grid);
    let mut warped: Vec<bool> = vec![false; nv_grid];
    for iz in 0..=n[2] {
        for iy in 0..=n[1] {
            for ix in 0..=n[0] {
                let id = grid.vertex_id(ix, iy, iz);
                let p = grid.vertex_pos(ix, iy, iz);
                let on_box = ix == 0
                    || ix == n[0]
                    || iy == 0
                    || iy == n[1]
                    || iz == 0
                    || iz == n[2];
                if !on_box && !rollback[id] && dist[id].abs() <= warp_band {
                    match scene.project_to_surface(owner_shape[id] as usize, &p, t0) {
                        Ok(q) => {
                            pos.push(q);
                            warped[id] = true;
                            dist[id] = 0.0;
                        }
                        Err(e) => return BuildOutcome::Failed(e),
                    }
                } else {
                    pos.push(p);
                }
            }
        }
    }

    let label = |id: usize| -> i8 {
        if warped[id] {
            0
        } else if dist[id] < 0.0 {
            -1
        } else {
            1
        }
    };

    // Monotone-path subdivision of each cell; shared cube-face diagonals run
    // min-corner to max-corner in every cell.
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut cut_registry: HashMap<(usize, usize), usize> = HashMap::new();
    let mut cut_positions: Vec<[f64; 3]> = Vec::new();
    let mut cut_owner: Vec<u32> = Vec::new();
    let mut tets: Vec<[usize; 4]> = Vec::new();

    for iz in 0..n[2] {
        for iy in 0..n[1] {
            for ix in 0..n[0] {
                let base = [ix, iy, iz];
                let corner = |mask: [usize; 3]| {
                    grid.vertex_id(base[0] + mask[0], base[1] + mask[1], base[2] + mask[2])
                };
                let v000 = corner([0, 0, 0]);
                let v111 = corner([1, 1, 1]);
                // Quick cell classification to skip the clip machinery away
                // from surfaces.
                let mut all_out = true;
                let mut all_in = true;
                for dz in 0..=1usize {
                    for dy in 0..=1usize {
                        for dx in 0..=1usize {
                            let l = label(corner([dx, dy, dz]));
                            all_out &= l > 0;
                            all_in &= l < 0;
                        }
                    }
                }
                if all_in {
                    continue;
                }
                for perm in PERMS {
                    let mut mask = [0usize; 3];
                    let a0 = v000;
                    mask[perm[0]] = 1;
                    let a1 = corner(mask);
                    mask[perm[1]] = 1;
                    let a2 = corner(mask);
                    let tet = [a0, a1, a2, v111];
                    if all_out {
                        tets.push(tet);
                        continue;
                    }
                    let labels = [label(tet[0]), label(tet[1]), label(tet[2]), label(tet[3])];
                    let pieces = clip_tet_exterior(tet, labels, |a, b| {
                        let key = (a.min(b), a.max(b));
                        if let Some(&id) = cut_registry.get(&key) {
                            return id;
                        }
                        let (out_v, in_v) = if dist[a] > 0.0 { (a, b) } else { (b, a) };
                        let t = dist[out_v] / (dist[out_v] - dist[in_v]);
                        let mut x = [0.0; 3];
                        for k in 0..3 {
                            x[k] = pos[out_v][k] + t * (pos[in_v][k] - pos[out_v][k]);
                        }
                        let s = owner_shape[in_v];
                        let id = nv_grid + cut_positions.len();
                        cut_positions.push(x);
                        cut_owner.push(s);
                        cut_registry.insert(key, id);
                        id
                    });
                    tets.extend(pieces);
                }
            }
        }
    }

    // Project cut vertices onto the exact surface.
    for (i, x) in cut_positions.iter_mut().enumerate() {
        match scene.project_to_surface(cut_owner[i] as usize, x, t0) {
            Ok(q) => *x = q,
            Err(e) => return BuildOutcome::Failed(e),
        }
    }

    // Degeneracy scan; offending warped vertices are rolled back.
    let position = |v: usize| -> [f64; 3] {
        if v < nv_grid {
            pos[v]
        } else {
            cut_positions[v - nv_grid]
        }
    };
    let mut bad_warps: Vec<usize> = Vec::new();
    for tet in &tets {
        let vol = signed_vol3(
            &position(tet[0]),
            &position(tet[1]),
            &position(tet[2]),
            &position(tet[3]),
        );
        let mut max_edge = 0.0f64;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let (a, b) = (position(tet[i]), position(tet[j]));
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2))
                    .sqrt();
                max_edge = max_edge.max(d);
            }
        }
        if vol.abs() <= 1e-12 * max_edge.powi(3) {
            for &v in tet {
                if v < nv_grid && warped[v] {
                    bad_warps.push(v);
                }
            }
        }
    }
    if !bad_warps.is_empty() {
        bad_warps.sort_unstable();
        bad_warps.dedup();
        return BuildOutcome::RollbackWarps(bad_warps);
    }

    // Compact vertices, orient positively, tag, and embed at t0.
    let total_ids = nv_grid + cut_positions.len();
    let mut vmap: Vec<usize> = vec![usize::MAX; total_ids];
    let mut mesh = SimplicialMesh::<4>::empty();
    let mut owners: Vec<Option<SurfaceOwner>> = Vec::new();
    for tet in &mut tets {
        for v in tet.iter_mut() {
            if vmap[*v] == usize::MAX {
                let p = position(*v);
                let (tag, owner) = if *v >= nv_grid {
                    (
                        VertexTag::ObjectBoundary,
                        Some(SurfaceOwner::Shape(cut_owner[*v - nv_grid] as usize)),
                    )
                } else if warped[*v] {
                    (
                        VertexTag::ObjectBoundary,
                        Some(SurfaceOwner::Shape(owner_shape[*v] as usize)),
                    )
                } else {
                    let on_box = (0..3).any(|k| {
                        p[k] <= grid.lower[k] + 1e-12 * h_max
                            || p[k] >= grid.lower[k]
                                + (grid.h[k] * grid.n[k] as f64)
                                - 1e-12 * h_max
                    });
                    if on_box {
                        (VertexTag::BoxBoundary, Some(SurfaceOwner::Box))
                    } else {
                        (VertexTag::Interior, None)
                    }
                };
                vmap[*v] = mesh.push_vertex(SpaceTimePoint::new([p[0], p[1], p[2], t0]), tag);
                owners.push(owner);
            }
            *v = vmap[*v];
        }
        // Positive spatial orientation.
        let p: Vec<[f64; 3]> = tet
            .iter()
            .map(|&v| {
                let c = mesh.vertices[v].coords;
                [c[0], c[1], c[2]]
            })
            .collect();
        if signed_vol3(&p[0], &p[1], &p[2], &p[3]) < 0.0 {
            tet.swap(2, 3);
        }
        mesh.push_cell(*tet, crate::geom::Patch::Initial);
    }

    // A warped vertex can touch the surface tangentially while every
    // incident tetrahedron is kept whole; it is then buried in solid and not
    // part of the boundary shell, so demote it to interior.
    let mut face_census: HashMap<[usize; 3], u8> = HashMap::new();
    for cell in &mesh.cells {
        for k in 0..4 {
            let mut f = [0usize; 3];
            let mut w = 0;
            for (i, &v) in cell.iter().enumerate() {
                if i != k {
                    f[w] = v;
                    w += 1;
                }
            }
            f.sort_unstable();
            *face_census.entry(f).or_insert(0) += 1;
        }
    }
    let mut on_shell = vec![false; mesh.vertices.len()];
    for (face, count) in &face_census {
        if *count == 1 {
            for &v in face {
                on_shell[v] = true;
            }
        }
    }
    for v in 0..mesh.vertices.len() {
        if !on_shell[v] && matches!(owners[v], Some(SurfaceOwner::Shape(_))) {
            mesh.vertex_tag[v] = VertexTag::Interior;
            owners[v] = None;
        }
    }

    if let Err(e) = mesh.validate() {
        return BuildOutcome::Failed(Error::InitialMesh(format!(
            "generated cap failed validation: {e}"
        )));
    }
    BuildOutcome::Done(CapMesh { mesh, owners })
}
