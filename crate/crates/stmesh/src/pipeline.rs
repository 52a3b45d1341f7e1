//! Scene-level drivers: run every slab of a scene at one refinement level,
//! assemble the whole-domain boundary mesh, and walk refinement ladders with
//! convergence-rate fitting.

use crate::error::{Error, Result};
use crate::geom::{merge_and_synchronize, total_measure, SimplicialMesh};
use crate::io::{export_vtk, write_stmesh, LoadedScene, SceneRun, TimeMode};
use crate::slab2d::{build_ghost_cap, build_slab_2d, SlabConfig2};
use crate::slab3d::{
    adopt_imported_cap, build_slab_3d, generate_initial_hypermesh, SlabConfig3,
};
use crate::verify::{exact_measure, fit_rate, write_ladder_csv, ConvergenceLadder, RateFit};
use std::io::Write;
use std::path::Path;

/// Per-slab record for summaries.
#[derive(Debug, Clone)]
pub struct SlabRecord {
    pub t_n: f64,
    pub t_np1: f64,
    pub hull_cells: usize,
    pub hull_vertices: usize,
    pub hull_measure: f64,
    pub closed: bool,
}

/// Result of one refinement level: the whole-domain boundary mesh (first
/// initial cap, all intermediates, last terminating cap) plus per-slab data.
#[derive(Debug, Clone)]
pub struct LevelResult {
    pub slabs: Vec<SlabRecord>,
    pub domain_cells: usize,
    pub domain_vertices: usize,
    pub domain_measure: f64,
    pub final_cap_measure: f64,
    /// The measure compared against the exact value: the domain boundary for
    /// circle/sphere cases, the final-time cap for ellipsoid cases.
    pub approx: f64,
}

/// Time-slab interfaces for a run at a given refinement scale. An explicit
/// slab count from the config stays fixed across ladder levels; a count
/// derived from h_time refines with the ladder.
fn slab_times(t0: f64, tf: f64, base_slabs: usize, scale_time: f64) -> Vec<f64> {
    let n = ((base_slabs as f64) * scale_time).ceil().max(1.0) as usize;
    (0..=n).map(|k| t0 + (tf - t0) * k as f64 / n as f64).collect()
}

/// Runs every slab of a 2D scene at sizing scale `scale` (target edge
/// lengths divided by `scale`).
pub fn run_level_2d(
    run: &SceneRun<2>,
    scale: f64,
    scale_slabs: bool,
    out: Option<(&Path, usize)>,
) -> Result<LevelResult> {
    let cfg = SlabConfig2 {
        trajectory: run.trajectory,
        merge_tol: run.merge_tol,
        sizing_box: run.sizing_box / scale,
        sizing_shapes: run.sizing_shapes.iter().map(|h| h / scale).collect(),
    };
    let times = slab_times(
        run.scene.t0,
        run.scene.tf,
        run.slabs,
        if scale_slabs { scale } else { 1.0 },
    );
    let mut cap = build_ghost_cap(&run.scene, cfg.sizing_box, &cfg.sizing_shapes)?;
    let mut slabs = Vec::new();
    let mut domain_parts: Vec<SimplicialMesh<3>> = Vec::new();
    let mut final_cap = cap.mesh.clone();
    for k in 0..times.len() - 1 {
        let slab = build_slab_2d(&cap, &run.scene, times[k], times[k + 1], &cfg)?;
        if k == 0 {
            domain_parts.push(slab.initial.clone());
        }
        domain_parts.push(slab.intermediate.clone());
        if k == times.len() - 2 {
            domain_parts.push(slab.terminating.clone());
            final_cap = slab.terminating.clone();
        }
        let rep = total_measure(&slab.hull)?;
        slabs.push(SlabRecord {
            t_n: slab.t_n,
            t_np1: slab.t_np1,
            hull_cells: slab.hull.cells.len(),
            hull_vertices: slab.hull.vertices.len(),
            hull_measure: rep.total,
            closed: slab.closure.watertight(),
        });
        if let Some((dir, level)) = out {
            let base = dir.join(format!("level{level}_slab{k}"));
            write_stmesh(&slab.hull, &base.with_extension("stmesh"))?;
            export_vtk(&slab.hull, &base.with_extension("vtk"), TimeMode::ScalarField)?;
        }
        cap = slab.terminating_cap;
    }
    let refs: Vec<&SimplicialMesh<3>> = domain_parts.iter().collect();
    let domain = merge_and_synchronize(&refs, run.merge_tol)?;
    let closure = crate::geom::hull_closure_check(&domain)?;
    if !closure.watertight() {
        return Err(Error::Conformity(format!(
            "whole-domain boundary mesh is not closed ({} boundary facets)",
            closure.boundary_facets.len()
        )));
    }
    let domain_rep = total_measure(&domain)?;
    let final_rep = total_measure(&final_cap)?;
    if let Some((dir, level)) = out {
        let base = dir.join(format!("level{level}_domain"));
        write_stmesh(&domain, &base.with_extension("stmesh"))?;
        export_vtk(&domain, &base.with_extension("vtk"), TimeMode::ScalarField)?;
    }
    Ok(LevelResult {
        slabs,
        domain_cells: domain.cells.len(),
        domain_vertices: domain.vertices.len(),
        domain_measure: domain_rep.total,
        final_cap_measure: final_rep.total,
        approx: domain_rep.total,
    })
}

/// Runs every slab of a 3D scene at sizing scale `scale`.
pub fn run_level_3d(
    run: &SceneRun<3>,
    scale: f64,
    scale_slabs: bool,
    out: Option<(&Path, usize)>,
) -> Result<LevelResult> {
    let cfg = SlabConfig3 {
        trajectory: run.trajectory,
        strategy: run.strategy,
        merge_tol: run.merge_tol,
        external_mesher: run.external_mesher.clone(),
    };
    let h_min = run
        .sizing_shapes
        .iter()
        .cloned()
        .fold(run.sizing_box, f64::min)
        / scale;
    let mut cap = match &run.initial_mesh {
        Some(path) => {
            if scale != 1.0 {
                return Err(Error::invalid_input(
                    "refinement ladders cannot use an imported initial mesh",
                ));
            }
            adopt_imported_cap(crate::io::read_stmesh(path)?.expect_tet()?, &run.scene)?
        }
        None => generate_initial_hypermesh(&run.scene, h_min)?,
    };
    let times = slab_times(
        run.scene.t0,
        run.scene.tf,
        run.slabs,
        if scale_slabs { scale } else { 1.0 },
    );
    let mut slabs = Vec::new();
    let mut domain_parts: Vec<SimplicialMesh<4>> = Vec::new();
    let mut final_cap = cap.mesh.clone();
    for k in 0..times.len() - 1 {
        let slab = build_slab_3d(&cap, &run.scene, times[k], times[k + 1], &cfg)?;
        if k == 0 {
            domain_parts.push(slab.initial.clone());
        }
        domain_parts.push(slab.intermediate.clone());
        if k == times.len() - 2 {
            domain_parts.push(slab.terminating.clone());
            final_cap = slab.terminating.clone();
        }
        let rep = total_measure(&slab.hull)?;
        slabs.push(SlabRecord {
            t_n: slab.t_n,
            t_np1: slab.t_np1,
            hull_cells: slab.hull.cells.len(),
            hull_vertices: slab.hull.vertices.len(),
            hull_measure: rep.total,
            closed: slab.closure.watertight(),
        });
        if let Some((dir, level)) = out {
            let base = dir.join(format!("level{level}_slab{k}"));
            write_stmesh(&slab.hull, &base.with_extension("stmesh"))?;
            export_vtk(&slab.hull, &base.with_extension("vtk"), TimeMode::ScalarField)?;
        }
        cap = slab.terminating_cap;
    }
    let refs: Vec<&SimplicialMesh<4>> = domain_parts.iter().collect();
    let domain = merge_and_synchronize(&refs, run.merge_tol)?;
    let closure = crate::geom::hull_closure_check(&domain)?;
    if !closure.watertight() {
        return Err(Error::Conformity(format!(
            "whole-domain boundary mesh is not closed ({} boundary facets)",
            closure.boundary_facets.len()
        )));
    }
    let domain_rep = total_measure(&domain)?;
    let final_rep = total_measure(&final_cap)?;
    let approx = match run.case {
        Some(crate::verify::ExactCase::RotatingEllipsoidFinalTime { .. })
        | Some(crate::verify::ExactCase::TandemEllipsoidsFinalTime { .. }) => final_rep.total,
        _ => domain_rep.total,
    };
    if let Some((dir, level)) = out {
        let base = dir.join(format!("level{level}_domain"));
        write_stmesh(&domain, &base.with_extension("stmesh"))?;
        export_vtk(&domain, &base.with_extension("vtk"), TimeMode::ScalarField)?;
    }
    Ok(LevelResult {
        slabs,
        domain_cells: domain.cells.len(),
        domain_vertices: domain.vertices.len(),
        domain_measure: domain_rep.total,
        final_cap_measure: final_rep.total,
        approx,
    })
}

/// Generate command: one full run at the configured sizing, with per-slab
/// mesh files and a summary.
pub fn cmd_generate(loaded: &LoadedScene, out_dir: &Path) -> Result<LevelResult> {
    std::fs::create_dir_all(out_dir)?;
    let result = match loaded {
        LoadedScene::TwoD(run) => run_level_2d(run, 1.0, false, Some((out_dir, 0)))?,
        LoadedScene::ThreeD(run) => run_level_3d(run, 1.0, false, Some((out_dir, 0)))?,
    };
    write_summary(loaded, std::slice::from_ref(&result), out_dir)?;
    Ok(result)
}

/// Convergence command outcome.
#[derive(Debug, Clone)]
pub struct ConvergenceOutcome {
    pub ladder: ConvergenceLadder,
    pub rate: RateFit,
    pub within_band: bool,
    pub band: [f64; 2],
    pub levels: Vec<LevelResult>,
}

/// Convergence command: runs `levels` ladder levels with sizing refined by
/// `factor` per level, writes the ladder CSV, and fits the rate.
pub fn cmd_convergence(
    loaded: &LoadedScene,
    levels: usize,
    factor: f64,
    out_dir: &Path,
    write_meshes: bool,
) -> Result<ConvergenceOutcome> {
    if levels < 3 {
        return Err(Error::invalid_input(
            "convergence needs at least 3 ladder levels",
        ));
    }
    if !(1.25..=2.0).contains(&factor) {
        return Err(Error::invalid_input(
            "refinement factor per level must lie in [1.25, 2.0]",
        ));
    }
    std::fs::create_dir_all(out_dir)?;
    let (case, band, exponent, scale_slabs) = match loaded {
        LoadedScene::TwoD(run) => (
            run.case,
            run.rate_band.unwrap_or([1.7, 2.3]),
            -0.5,
            true,
        ),
        LoadedScene::ThreeD(run) => {
            let scale_slabs = run.case.map_or(true, |c| {
                !matches!(
                    c,
                    crate::verify::ExactCase::RotatingEllipsoidFinalTime { .. }
                        | crate::verify::ExactCase::TandemEllipsoidsFinalTime { .. }
                )
            });
            (run.case, run.rate_band.unwrap_or([1.6, 2.4]), -1.0 / 3.0, scale_slabs)
        }
    };
    let case = case.ok_or_else(|| {
        Error::invalid_input(
            "convergence requires a scene with a closed-form exact measure (cube box, supported shape set)",
        )
    })?;
    let exact = exact_measure(&case);

    let mut ladder = ConvergenceLadder::new(exponent);
    let mut results = Vec::new();
    for level in 0..levels {
        let scale = factor.powi(level as i32);
        let out = if write_meshes { Some((out_dir, level)) } else { None };
        let result = match loaded {
            LoadedScene::TwoD(run) => run_level_2d(run, scale, scale_slabs, out),
            LoadedScene::ThreeD(run) => run_level_3d(run, scale, scale_slabs, out),
        };
        let result = match result {
            Ok(r) => r,
            Err(e) => {
                // Partial ladder is still written for diagnosis.
                write_ladder_csv(&ladder, &out_dir.join("ladder.csv"))?;
                return Err(Error::Pipeline(format!("ladder level {level} failed: {e}")));
            }
        };
        ladder.push(result.domain_cells, result.domain_vertices, result.approx, exact);
        results.push(result);
    }
    write_ladder_csv(&ladder, &out_dir.join("ladder.csv"))?;
    let rate = fit_rate(&ladder)?;
    let within_band = match rate {
        RateFit::Fitted { rate, .. } => rate >= band[0] && rate <= band[1],
        RateFit::ExactToPrecision => true,
    };
    write_summary(loaded, &results, out_dir)?;
    Ok(ConvergenceOutcome { ladder, rate, within_band, band, levels: results })
}

fn write_summary(loaded: &LoadedScene, levels: &[LevelResult], out_dir: &Path) -> Result<()> {
    let mut json = String::from("{\n  \"levels\": [\n");
    for (i, lv) in levels.iter().enumerate() {
        json.push_str(&format!(
            "    {{ \"level\": {i}, \"domain_cells\": {}, \"domain_vertices\": {}, \"domain_measure\": {:.17e}, \"final_cap_measure\": {:.17e}, \"slabs\": [\n",
            lv.domain_cells, lv.domain_vertices, lv.domain_measure, lv.final_cap_measure
        ));
        for (k, s) in lv.slabs.iter().enumerate() {
            json.push_str(&format!(
                "      {{ \"slab\": {k}, \"t_n\": {:.17e}, \"t_np1\": {:.17e}, \"cells\": {}, \"vertices\": {}, \"measure\": {:.17e}, \"closed\": {} }}{}\n",
                s.t_n,
                s.t_np1,
                s.hull_cells,
                s.hull_vertices,
                s.hull_measure,
                s.closed,
                if k + 1 < lv.slabs.len() { "," } else { "" }
            ));
        }
        json.push_str(&format!(
            "    ] }}{}\n",
            if i + 1 < levels.len() { "," } else { "" }
        ));
    }
    json.push_str("  ]\n}\n");
    let mut f = std::fs::File::create(out_dir.join("summary.json"))?;
    f.write_all(json.as_bytes())?;
    let _ = loaded;
    Ok(())
}

/// Split-demo command: the reference prism split both ways, written as
/// meshes for inspection and golden-file testing.
pub fn cmd_split_demo(out_dir: &Path) -> Result<()> {
    use crate::geom::{Patch, SpaceTimePoint, VertexTag};
    use crate::slab3d::{
        split_prism_c, split_prism_e, FaceSteinerRegistry, TriangularPrism,
    };
    std::fs::create_dir_all(out_dir)?;
    let base_vertices = vec![
        SpaceTimePoint::new([0.0, 0.0, 0.0, 0.0]),
        SpaceTimePoint::new([1.0, 0.0, 0.0, 0.0]),
        SpaceTimePoint::new([0.0, 1.0, 0.0, 0.0]),
        SpaceTimePoint::new([0.0, 0.0, 0.0, 1.0]),
        SpaceTimePoint::new([1.0, 0.0, 0.0, 1.0]),
        SpaceTimePoint::new([0.0, 1.0, 0.0, 1.0]),
    ];
    let prism = TriangularPrism { bottom: [0, 1, 2], top: [3, 4, 5] };

    for (name, fourteen) in [("prism_split_C", false), ("prism_split_E", true)] {
        let mut verts = base_vertices.clone();
        let mut tags = vec![VertexTag::ObjectBoundary; 6];
        let mut registry = FaceSteinerRegistry::build(&[prism], &mut verts, &mut tags);
        let tets = if fourteen {
            split_prism_e(&prism, 0, &mut registry, &mut verts, &mut tags)?
        } else {
            split_prism_c(&prism, 0, &registry, &verts)?
        };
        // Compact to used vertices.
        let mut vmap = vec![usize::MAX; verts.len()];
        let mut mesh = SimplicialMesh::<4>::empty();
        let mut cells = Vec::new();
        for tet in &tets {
            let mut cell = [0usize; 4];
            for (slot, &v) in cell.iter_mut().zip(tet.iter()) {
                if vmap[v] == usize::MAX {
                    vmap[v] = mesh.push_vertex(verts[v], tags[v]);
                }
                *slot = vmap[v];
            }
            cells.push(cell);
        }
        for cell in cells {
            mesh.push_cell(cell, Patch::Intermediate);
        }
        write_stmesh(&mesh, &out_dir.join(format!("{name}.stmesh")))?;
        export_vtk(&mesh, &out_dir.join(format!("{name}.vtk")), TimeMode::ScalarField)?;
    }
    Ok(())
}
