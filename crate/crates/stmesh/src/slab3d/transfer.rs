//! Terminating-hyperplane meshing.
//!
//! The default strategy copies the initial cap's connectivity, moves boundary
//! vertices to their advected positions, and repositions interior vertices by
//! harmonic extension of the boundary displacement (graph-Laplacian Jacobi
//! smoothing with fixed boundary). A zero boundary displacement therefore
//! reproduces the input exactly. The alternative strategy delegates to an
//! external volume mesher through the .stmesh exchange files.

use super::boundary::extract_boundary_triangles;
use super::hypermesh::CapMesh;
use crate::error::{Error, Result};
use crate::geom::{Patch, SimplicialMesh, SpaceTimePoint, VertexTag};
use crate::scene::SurfaceOwner;
use std::collections::HashMap;

const JACOBI_SWEEPS: usize = 200;
const JACOBI_RESIDUAL: f64 = 1e-10;

fn signed_vol3(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3], d: &[f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = [d[0] - a[0], d[1] - a[1], d[2] - a[2]];
    (u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0]))
        / 6.0
}

/// Topology transfer: same connectivity, boundary vertices at `advected`
/// positions, interior vertices smoothed, all time coordinates at t_np1.
pub fn topology_transfer(
    cap: &CapMesh,
    advected: &HashMap<usize, [f64; 3]>,
    t_np1: f64,
) -> Result<CapMesh> {
    let nv = cap.mesh.vertices.len();
    let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); nv];
    for cell in &cap.mesh.cells {
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    neighbors[cell[i]].push(cell[j] as u32);
                }
            }
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
        list.dedup();
    }

    let spatial = |v: usize| -> [f64; 3] {
        let c = cap.mesh.vertices[v].coords;
        [c[0], c[1], c[2]]
    };

    // Boundary displacement; interior starts at zero.
    let mut disp: Vec<[f64; 3]> = vec![[0.0; 3]; nv];
    let mut fixed: Vec<bool> = vec![false; nv];
    for v in 0..nv {
        match cap.mesh.vertex_tag[v] {
            VertexTag::ObjectBoundary => {
                let target = advected.get(&v).ok_or_else(|| {
                    Error::Pipeline(format!("object vertex {v} has no advected position"))
                })?;
                let old = spatial(v);
                disp[v] = [target[0] - old[0], target[1] - old[1], target[2] - old[2]];
                fixed[v] = true;
            }
            VertexTag::BoxBoundary => {
                fixed[v] = true;
            }
            VertexTag::Interior => {}
        }
    }

    let interior: Vec<usize> = (0..nv).filter(|&v| !fixed[v]).collect();
    let mut next = disp.clone();
    for _sweep in 0..JACOBI_SWEEPS {
        let mut max_change = 0.0f64;
        for &v in &interior {
            let mut acc = [0.0; 3];
            let deg = neighbors[v].len().max(1) as f64;
            for &u in &neighbors[v] {
                for k in 0..3 {
                    acc[k] += disp[u as usize][k];
                }
            }
            for k in 0..3 {
                acc[k] /= deg;
                max_change = max_change.max((acc[k] - disp[v][k]).abs());
            }
            next[v] = acc;
        }
        for &v in &interior {
            disp[v] = next[v];
        }
        if max_change < JACOBI_RESIDUAL {
            break;
        }
    }

    let mut out = cap.clone();
    for v in 0..nv {
        let old = spatial(v);
        out.mesh.vertices[v] = SpaceTimePoint::new([
            old[0] + disp[v][0],
            old[1] + disp[v][1],
            old[2] + disp[v][2],
            t_np1,
        ]);
    }
    for p in &mut out.mesh.patch {
        *p = Patch::Terminating;
    }

    // Positivity census: the initial cap is positively oriented, so any
    // non-positive spatial volume means the transfer tangled the mesh.
    let mut inverted = 0usize;
    for cell in &out.mesh.cells {
        let p: Vec<[f64; 3]> = cell
            .iter()
            .map(|&v| {
                let c = out.mesh.vertices[v].coords;
                [c[0], c[1], c[2]]
            })
            .collect();
        let vol = signed_vol3(&p[0], &p[1], &p[2], &p[3]);
        let mut max_edge = 0.0f64;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let d = (0..3)
                    .map(|k| (p[i][k] - p[j][k]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                max_edge = max_edge.max(d);
            }
        }
        if vol <= 1e-12 * max_edge.powi(3) {
            inverted += 1;
        }
    }
    if inverted > 0 {
        return Err(Error::Tangling(format!(
            "{inverted} tetrahedra inverted during topology transfer"
        )));
    }
    Ok(out)
}

/// External-mesher strategy: writes the advected boundary shell as a 3D
/// `.stmesh` (spatial coordinates, dims `3 2`), runs the command template
/// with `{in}`/`{out}` placeholders, reads the resulting tetrahedral mesh
/// (dims `4 3`, any constant time coordinate), re-stamps it to t_np1, and
/// validates that its boundary reproduces the shell.
pub fn external_mesher_transfer(
    cap: &CapMesh,
    advected: &HashMap<usize, [f64; 3]>,
    t_np1: f64,
    command_template: &str,
    merge_tol: f64,
) -> Result<CapMesh> {
    let shell = extract_boundary_triangles(cap)?;
    let dir = std::env::temp_dir().join(format!("stmesh-exchange-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let in_path = dir.join("shell.stmesh");
    let out_path = dir.join("volume.stmesh");

    // Shell in advected coordinates, compact numbering.
    let mut local: HashMap<usize, usize> = HashMap::new();
    let mut shell_mesh = SimplicialMesh::<3>::empty();
    let advected_pos = |v: usize| -> [f64; 3] {
        match (cap.owners[v], advected.get(&v)) {
            (Some(SurfaceOwner::Shape(_)), Some(p)) => *p,
            _ => {
                let c = cap.mesh.vertices[v].coords;
                [c[0], c[1], c[2]]
            }
        }
    };
    for &v in &shell.vertices {
        let p = advected_pos(v);
        let id = shell_mesh.push_vertex(SpaceTimePoint::new(p), cap.mesh.vertex_tag[v]);
        local.insert(v, id);
    }
    for tri in &shell.triangles {
        shell_mesh.push_cell([local[&tri[0]], local[&tri[1]], local[&tri[2]]], Patch::Terminating);
    }
    crate::io::write_stmesh(&shell_mesh, &in_path)?;

    let command = command_template
        .replace("{in}", &in_path.display().to_string())
        .replace("{out}", &out_path.display().to_string());
    let status = std::process::Command::new("sh").arg("-c").arg(&command).status()?;
    if !status.success() {
        return Err(Error::ExternalMesher(format!(
            "command '{command}' exited with {status}"
        )));
    }

    let mut mesh = crate::io::read_stmesh(&out_path)?.expect_tet()?;
    for v in &mut mesh.vertices {
        v.coords[3] = t_np1;
    }
    // Orient positively.
    for cell in &mut mesh.cells {
        let p: Vec<[f64; 3]> = cell
            .iter()
            .map(|&v| {
                let c = mesh.vertices[v].coords;
                [c[0], c[1], c[2]]
            })
            .collect();
        if signed_vol3(&p[0], &p[1], &p[2], &p[3]) < 0.0 {
            cell.swap(2, 3);
        }
    }
    for p in &mut mesh.patch {
        *p = Patch::Terminating;
    }
    mesh.validate()?;

    // Owners by position match against the shell.
    let quant = |x: [f64; 3]| -> [i64; 3] {
        [
            (x[0] / merge_tol).round() as i64,
            (x[1] / merge_tol).round() as i64,
            (x[2] / merge_tol).round() as i64,
        ]
    };
    let mut shell_lookup: HashMap<[i64; 3], usize> = HashMap::new();
    for &v in &shell.vertices {
        shell_lookup.insert(quant(advected_pos(v)), v);
    }
    let mut owners: Vec<Option<SurfaceOwner>> = Vec::with_capacity(mesh.vertices.len());
    for v in &mesh.vertices {
        let p = [v.coords[0], v.coords[1], v.coords[2]];
        owners.push(shell_lookup.get(&quant(p)).and_then(|&sv| cap.owners[sv]));
    }
    let result = CapMesh { mesh, owners };

    // The returned boundary must reproduce the shell triangles.
    let back = extract_boundary_triangles(&result)?;
    if back.triangles.len() != shell.triangles.len() {
        return Err(Error::ExternalMesher(format!(
            "returned mesh has {} boundary triangles, shell has {}",
            back.triangles.len(),
            shell.triangles.len()
        )));
    }
    let tri_key = |m: &SimplicialMesh<4>, tri: &[usize; 3]| -> Vec<[i64; 3]> {
        let mut k: Vec<[i64; 3]> = tri
            .iter()
            .map(|&v| {
                let c = m.vertices[v].coords;
                quant([c[0], c[1], c[2]])
            })
            .collect();
        k.sort_unstable();
        k
    };
    let mut want: Vec<Vec<[i64; 3]>> = shell
        .triangles
        .iter()
        .map(|tri| {
            let mut k: Vec<[i64; 3]> = tri.iter().map(|&v| quant(advected_pos(v))).collect();
            k.sort_unstable();
            k
        })
        .collect();
    let mut got: Vec<Vec<[i64; 3]>> =
        back.triangles.iter().map(|t| tri_key(&result.mesh, t)).collect();
    want.sort_unstable();
    got.sort_unstable();
    if want != got {
        return Err(Error::ExternalMesher(
            "returned mesh boundary does not match the advected shell".into(),
        ));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{BoxDomain, MovingScene, MovingShape, RadiusLaw, ShapeKind};

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

    fn advect_shell(
        cap: &CapMesh,
        scene: &MovingScene<3>,
        t_n: f64,
        t_np1: f64,
    ) -> HashMap<usize, [f64; 3]> {
        let shell = extract_boundary_triangles(cap).unwrap();
        let verts: Vec<crate::trajectory::TaggedVertex<3>> = shell
            .vertices
            .iter()
            .map(|&v| {
                let c = cap.mesh.vertices[v].coords;
                crate::trajectory::TaggedVertex {
                    position: [c[0], c[1], c[2]],
                    owner: cap.owners[v].unwrap(),
                }
            })
            .collect();
        let out = crate::trajectory::advect_vertices(
            &verts,
            scene,
            t_n,
            t_np1,
            &crate::trajectory::TrajectoryConfig::default(),
        )
        .unwrap();
        shell.vertices.iter().cloned().zip(out).collect()
    }

    #[test]
    fn static_scene_transfer_is_identity() {
        let scene = sphere_scene(0.0);
        let cap = super::super::hypermesh::generate_initial_hypermesh(&scene, 0.9).unwrap();
        let advected = advect_shell(&cap, &scene, 0.0, 1.0);
        let out = topology_transfer(&cap, &advected, 1.0).unwrap();
        for (a, b) in cap.mesh.vertices.iter().zip(&out.mesh.vertices) {
            for k in 0..3 {
                assert!(
                    (a.coords[k] - b.coords[k]).abs() < 1e-12,
                    "vertex moved in a static scene"
                );
            }
            assert_eq!(b.coords[3], 1.0);
        }
        assert_eq!(cap.mesh.cells, out.mesh.cells);
    }

    #[test]
    fn expanding_sphere_transfer_keeps_positive_volumes() {
        let scene = sphere_scene(0.25);
        let cap = super::super::hypermesh::generate_initial_hypermesh(&scene, 0.8).unwrap();
        let advected = advect_shell(&cap, &scene, 0.0, 1.0);
        let out = topology_transfer(&cap, &advected, 1.0).unwrap();
        // Boundary vertices on the sphere land exactly on the final radius.
        for (v, owner) in out.mesh.vertices.iter().zip(&out.owners) {
            if let Some(SurfaceOwner::Shape(0)) = owner {
                let r = (v.coords[0].powi(2) + v.coords[1].powi(2) + v.coords[2].powi(2)).sqrt();
                assert!((r - 1.25).abs() < 1e-10, "radius {r}");
            }
        }
        out.mesh.validate().unwrap();
    }

    #[test]
    fn violent_motion_reports_tangling() {
        let scene = sphere_scene(0.25);
        let cap = super::super::hypermesh::generate_initial_hypermesh(&scene, 0.8).unwrap();
        // Artificial displacement: collapse the sphere shell onto a point far
        // outside its cavity, which must invert neighboring tetrahedra.
        let shell = extract_boundary_triangles(&cap).unwrap();
        let mut advected = HashMap::new();
        for &v in &shell.vertices {
            if let Some(SurfaceOwner::Shape(0)) = cap.owners[v] {
                advected.insert(v, [3.9, 3.9, 3.9]);
            }
        }
        match topology_transfer(&cap, &advected, 1.0) {
            Err(Error::Tangling(_)) => {}
            other => panic!("expected tangling, got {other:?}"),
        }
    }

    #[test]
    fn external_mesher_round_trip_via_copy() {
        let scene = sphere_scene(0.0);
        let cap = super::super::hypermesh::generate_initial_hypermesh(&scene, 1.1).unwrap();
        let advected = advect_shell(&cap, &scene, 0.0, 1.0);
        // Produce the expected answer with topology transfer, save it, and
        // let the "external" command copy it into place.
        let expected = topology_transfer(&cap, &advected, 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let canned = dir.path().join("canned.stmesh");
        crate::io::write_stmesh(&expected.mesh, &canned).unwrap();
        let command = format!("cp {} {{out}}", canned.display());
        let out = external_mesher_transfer(&cap, &advected, 1.0, &command, 1e-9).unwrap();
        assert_eq!(out.mesh.cells.len(), expected.mesh.cells.len());
        assert_eq!(out.mesh.vertices.len(), expected.mesh.vertices.len());
    }

    #[test]
    fn external_mesher_failure_is_reported() {
        let scene = sphere_scene(0.0);
        let cap = super::super::hypermesh::generate_initial_hypermesh(&scene, 1.2).unwrap();
        let advected = advect_shell(&cap, &scene, 0.0, 1.0);
        match external_mesher_transfer(&cap, &advected, 1.0, "false", 1e-9) {
            Err(Error::ExternalMesher(_)) => {}
            other => panic!("expected external-mesher error, got {other:?}"),
        }
    }
}
