//! Batch front-end: scene config in, per-slab meshes, summaries, and
//! convergence ladders out.
//!
//! Exit codes: 0 success, 1 validation/config error, 2 pipeline or geometry
//! failure, 3 convergence rate outside the configured band.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use stmesh::io::{read_scene_config, LoadedScene};
use stmesh::pipeline;
use stmesh::verify::RateFit;

#[derive(Parser)]
#[command(name = "stmesh", version, about = "Space-time surface and hypersurface mesher")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker-thread cap for parallel reductions.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SceneArgs {
    /// Scene configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the prism split strategy (C = 10 tets, E = 14 tets).
    #[arg(long)]
    strategy: Option<String>,
    /// Override the trajectory substep count M.
    #[arg(long)]
    substeps: Option<usize>,
    /// Override the deterministic seed recorded in outputs.
    #[arg(long)]
    seed: Option<u64>,
    /// External volume-mesher command template with {in} and {out}
    /// placeholders.
    #[arg(long)]
    external_mesher: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline once and write per-slab hulls plus a summary.
    Generate(SceneArgs),
    /// Measure a .stmesh file (total and per-patch).
    Measure {
        /// Mesh file to measure.
        mesh: PathBuf,
    },
    /// Validate a .stmesh file and check hull closure.
    Verify {
        /// Mesh file to verify.
        mesh: PathBuf,
    },
    /// Run a refinement ladder and fit the convergence rate.
    Convergence {
        #[command(flatten)]
        scene: SceneArgs,
        /// Number of ladder levels.
        #[arg(long)]
        levels: Option<usize>,
        /// Sizing refinement factor per level (in [1.25, 2.0]).
        #[arg(long)]
        factor: Option<f64>,
        /// Also write per-level mesh files.
        #[arg(long)]
        write_meshes: bool,
    },
    /// Write the reference prism and both splits as mesh files.
    SplitDemo {
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn apply_overrides(loaded: &mut LoadedScene, args: &SceneArgs) -> Result<(), stmesh::Error> {
    let strategy = match args.strategy.as_deref() {
        None => None,
        Some("C") => Some(stmesh::slab3d::SplitStrategy::TenTet),
        Some("E") => Some(stmesh::slab3d::SplitStrategy::FourteenTet),
        Some(other) => {
            return Err(stmesh::Error::invalid_input(format!(
                "unknown strategy '{other}'; use C or E"
            )))
        }
    };
    match loaded {
        LoadedScene::TwoD(run) => {
            if let Some(m) = args.substeps {
                run.trajectory.substeps = m.max(1);
            }
            if let Some(s) = args.seed {
                run.seed = s;
            }
            if args.external_mesher.is_some() {
                return Err(stmesh::Error::invalid_input(
                    "an external mesher applies only to 3D scenes",
                ));
            }
        }
        LoadedScene::ThreeD(run) => {
            if let Some(st) = strategy {
                run.strategy = st;
            }
            if let Some(m) = args.substeps {
                run.trajectory.substeps = m.max(1);
            }
            if let Some(s) = args.seed {
                run.seed = s;
            }
            if args.external_mesher.is_some() {
                run.external_mesher = args.external_mesher.clone();
            }
        }
    }
    Ok(())
}

fn run() -> Result<i32, stmesh::Error> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Reductions are fixed-shape trees, so the thread count never
        // changes results.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    match cli.command {
        Command::Generate(args) => {
            let mut loaded = read_scene_config(&args.config)?;
            apply_overrides(&mut loaded, &args)?;
            let result = pipeline::cmd_generate(&loaded, &args.out)?;
            println!("slab      t_n        t_np1      cells      vertices   measure          closed");
            for (k, s) in result.slabs.iter().enumerate() {
                println!(
                    "{k:<9} {:<10.4} {:<10.4} {:<10} {:<10} {:<16.8} {}",
                    s.t_n, s.t_np1, s.hull_cells, s.hull_vertices, s.hull_measure, s.closed
                );
            }
            println!(
                "domain boundary: {} cells, {} vertices, measure {:.10}",
                result.domain_cells, result.domain_vertices, result.domain_measure
            );
            println!("final-plane measure: {:.10}", result.final_cap_measure);
            Ok(0)
        }
        Command::Measure { mesh } => {
            let rep = match stmesh::io::read_stmesh(&mesh)? {
                stmesh::io::MeshFile::Tri(m) => stmesh::geom::total_measure(&m)?,
                stmesh::io::MeshFile::Tet(m) => stmesh::geom::total_measure(&m)?,
            };
            println!("cells: {}", rep.cell_count);
            println!("vertices: {}", rep.vertex_count);
            println!("total: {:.17e}", rep.total);
            for (patch, m) in rep.per_patch {
                println!("{patch:?}: {m:.17e}");
            }
            Ok(0)
        }
        Command::Verify { mesh } => {
            let report = match stmesh::io::read_stmesh(&mesh)? {
                stmesh::io::MeshFile::Tri(m) => {
                    m.validate()?;
                    stmesh::geom::hull_closure_check(&m)?
                }
                stmesh::io::MeshFile::Tet(m) => {
                    m.validate()?;
                    stmesh::geom::hull_closure_check(&m)?
                }
            };
            println!("closed: {}", report.closed);
            println!("orientable: {}", report.orientable);
            println!("components: {}", report.components);
            println!("boundary facets: {}", report.boundary_facets.len());
            println!("non-manifold facets: {}", report.nonmanifold_facets.len());
            println!("net normal (relative): {:.3e}", report.net_normal_rel);
            if report.watertight() {
                println!("watertight: true");
                Ok(0)
            } else {
                println!("watertight: false");
                Ok(2)
            }
        }
        Command::Convergence { scene, levels, factor, write_meshes } => {
            let mut loaded = read_scene_config(&scene.config)?;
            apply_overrides(&mut loaded, &scene)?;
            let (default_levels, default_factor) = match &loaded {
                LoadedScene::TwoD(r) => (r.ladder_levels, r.ladder_factor),
                LoadedScene::ThreeD(r) => (r.ladder_levels, r.ladder_factor),
            };
            let levels = levels.unwrap_or(default_levels);
            let factor = factor.unwrap_or(default_factor);
            let outcome =
                pipeline::cmd_convergence(&loaded, levels, factor, &scene.out, write_meshes)?;
            println!("level  elements     vertices     spacing        error");
            for (i, e) in outcome.ladder.entries.iter().enumerate() {
                println!(
                    "{i:<6} {:<12} {:<12} {:<14.6e} {:.6e}",
                    e.element_count, e.vertex_count, e.spacing_proxy, e.error
                );
            }
            match outcome.rate {
                RateFit::Fitted { rate, residual } => {
                    println!(
                        "fitted rate: {rate:.4} (residual {residual:.2e}, band [{}, {}])",
                        outcome.band[0], outcome.band[1]
                    );
                }
                RateFit::ExactToPrecision => {
                    println!("errors vanish to working precision; no rate to fit");
                }
            }
            if outcome.within_band {
                Ok(0)
            } else {
                Ok(3)
            }
        }
        Command::SplitDemo { out } => {
            pipeline::cmd_split_demo(&out)?;
            println!("wrote prism_split_C and prism_split_E to {}", out.display());
            Ok(0)
        }
    }
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
