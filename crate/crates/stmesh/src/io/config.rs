//! JSON scene configuration: box bounds, shapes with motion laws, time
//! slabbing, per-region sizing, trajectory parameters, split strategy, and
//! the refinement-ladder plan.

use crate::error::{Error, Result};
use crate::scene::{BoxDomain, MovingScene, MovingShape, RadiusLaw, ShapeKind};
use crate::slab3d::SplitStrategy;
use crate::trajectory::TrajectoryConfig;
use crate::verify::ExactCase;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(rename = "box")]
    pub box_bounds: BoxCfg,
    pub shapes: Vec<ShapeCfg>,
    pub time: TimeCfg,
    pub sizing: SizingCfg,
    #[serde(default)]
    pub trajectory: TrajCfg,
    #[serde(default)]
    pub strategy: Option<String>,
    #[serde(default)]
    pub merge_tol_rel: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub ladder: Option<LadderCfg>,
    #[serde(default)]
    pub rate_band: Option<[f64; 2]>,
    #[serde(default)]
    pub initial_mesh: Option<PathBuf>,
    #[serde(default)]
    pub external_mesher: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxCfg {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeCfg {
    Circle { center: [f64; 2], radius0: f64, #[serde(default)] growth_rate: f64 },
    Sphere { center: [f64; 3], radius0: f64, #[serde(default)] growth_rate: f64 },
    Ellipsoid { center: [f64; 3], semi_axes: [f64; 3], angular_velocity: [f64; 3] },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeCfg {
    pub start: f64,
    pub end: f64,
    #[serde(default)]
    pub h_time: Option<f64>,
    #[serde(default)]
    pub slabs: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizingCfg {
    /// Target edge length near the box boundary.
    #[serde(rename = "box")]
    pub box_h: f64,
    /// Target edge length near each shape, one entry per shape.
    pub shapes: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajCfg {
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default)]
    pub project_each_substep: bool,
}

fn default_substeps() -> usize {
    32
}

impl Default for TrajCfg {
    fn default() -> Self {
        Self { substeps: 32, project_each_substep: false }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderCfg {
    pub levels: usize,
    pub factor: f64,
}

/// A validated scene plus everything the pipeline needs to run it.
#[derive(Debug, Clone)]
pub struct SceneRun<const N: usize> {
    pub scene: MovingScene<N>,
    pub sizing_box: f64,
    pub sizing_shapes: Vec<f64>,
    pub slabs: usize,
    pub trajectory: TrajectoryConfig,
    pub strategy: SplitStrategy,
    pub merge_tol: f64,
    pub seed: u64,
    pub ladder_levels: usize,
    pub ladder_factor: f64,
    pub rate_band: Option<[f64; 2]>,
    pub initial_mesh: Option<PathBuf>,
    pub external_mesher: Option<String>,
    pub case: Option<ExactCase>,
}

#[derive(Debug, Clone)]
pub enum LoadedScene {
    TwoD(SceneRun<2>),
    ThreeD(SceneRun<3>),
}

impl LoadedScene {
    pub fn ladder_levels(&self) -> usize {
        match self {
            LoadedScene::TwoD(r) => r.ladder_levels,
            LoadedScene::ThreeD(r) => r.ladder_levels,
        }
    }
}

fn cfg_err(path: &str, msg: impl Into<String>) -> Error {
    Error::config(path, msg.into())
}

pub fn read_scene_config(path: &Path) -> Result<LoadedScene> {
    let text = std::fs::read_to_string(path)?;
    let cfg: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| Error::config("/", format!("JSON schema violation: {e}")))?;
    load_from_config(cfg)
}

pub fn load_from_config(cfg: ConfigFile) -> Result<LoadedScene> {
    let dim = cfg.box_bounds.lower.len();
    if dim != cfg.box_bounds.upper.len() {
        return Err(cfg_err("/box", "lower and upper must have the same length"));
    }
    if dim != 2 && dim != 3 {
        return Err(cfg_err("/box/lower", "box must be 2D or 3D"));
    }
    if cfg.shapes.is_empty() {
        return Err(cfg_err("/shapes", "at least one shape is required"));
    }
    if cfg.sizing.box_h <= 0.0 {
        return Err(cfg_err("/sizing/box", "sizing must be positive"));
    }
    if cfg.sizing.shapes.len() != cfg.shapes.len() {
        return Err(cfg_err("/sizing/shapes", "one sizing entry per shape is required"));
    }
    for (i, h) in cfg.sizing.shapes.iter().enumerate() {
        if *h <= 0.0 {
            return Err(cfg_err(&format!("/sizing/shapes/{i}"), "sizing must be positive"));
        }
    }
    if !(cfg.time.end > cfg.time.start) {
        return Err(cfg_err("/time/end", "time.end must exceed time.start"));
    }
    let duration = cfg.time.end - cfg.time.start;
    let slabs = match (cfg.time.h_time, cfg.time.slabs) {
        (Some(h), None) => {
            if h <= 0.0 {
                return Err(cfg_err("/time/h_time", "h_time must be positive"));
            }
            (duration / h).ceil() as usize
        }
        (None, Some(s)) => {
            if s == 0 {
                return Err(cfg_err("/time/slabs", "slab count must be at least 1"));
            }
            s
        }
        _ => {
            return Err(cfg_err("/time", "exactly one of h_time or slabs must be given"));
        }
    };
    let strategy = match cfg.strategy.as_deref() {
        None | Some("E") => SplitStrategy::FourteenTet,
        Some("C") => SplitStrategy::TenTet,
        Some(other) => {
            return Err(cfg_err("/strategy", format!("unknown strategy '{other}'; use C or E")))
        }
    };
    if let Some(l) = &cfg.ladder {
        if l.levels < 1 {
            return Err(cfg_err("/ladder/levels", "at least one level"));
        }
        if !(1.05..=4.0).contains(&l.factor) {
            return Err(cfg_err("/ladder/factor", "refinement factor must be in [1.05, 4]"));
        }
    }
    if let Some(band) = cfg.rate_band {
        if !(band[0] < band[1]) {
            return Err(cfg_err("/rate_band", "band must satisfy lo < hi"));
        }
    }
    let trajectory = TrajectoryConfig {
        substeps: cfg.trajectory.substeps.max(1),
        project_each_substep: cfg.trajectory.project_each_substep,
        terminal_projection: true,
    };
    let (ladder_levels, ladder_factor) = match &cfg.ladder {
        Some(l) => (l.levels, l.factor),
        None => (4, 1.5),
    };

    if dim == 2 {
        let lower = [cfg.box_bounds.lower[0], cfg.box_bounds.lower[1]];
        let upper = [cfg.box_bounds.upper[0], cfg.box_bounds.upper[1]];
        let box_domain = BoxDomain::new(lower, upper)
            .map_err(|e| cfg_err("/box", e.to_string()))?;
        let mut shapes = Vec::new();
        for (i, s) in cfg.shapes.iter().enumerate() {
            match s {
                ShapeCfg::Circle { center, radius0, growth_rate } => {
                    if *radius0 <= 0.0 {
                        return Err(cfg_err(&format!("/shapes/{i}/radius0"), "must be positive"));
                    }
                    shapes.push(MovingShape {
                        center: *center,
                        kind: ShapeKind::Circle(RadiusLaw { r0: *radius0, m: *growth_rate }),
                    });
                }
                _ => {
                    return Err(cfg_err(&format!("/shapes/{i}"), "2D box requires circle shapes"))
                }
            }
        }
        let scene = MovingScene::new(box_domain, shapes, cfg.time.start, cfg.time.end)
            .map_err(|e| cfg_err("/shapes", e.to_string()))?;
        let merge_tol = cfg.merge_tol_rel.unwrap_or(1e-10) * box_domain.diagonal();
        let case = infer_case_2d(&scene);
        Ok(LoadedScene::TwoD(SceneRun {
            scene,
            sizing_box: cfg.sizing.box_h,
            sizing_shapes: cfg.sizing.shapes,
            slabs,
            trajectory,
            strategy,
            merge_tol,
            seed: cfg.seed.unwrap_or(0),
            ladder_levels,
            ladder_factor,
            rate_band: cfg.rate_band,
            initial_mesh: cfg.initial_mesh,
            external_mesher: cfg.external_mesher,
            case,
        }))
    } else {
        let lower = [cfg.box_bounds.lower[0], cfg.box_bounds.lower[1], cfg.box_bounds.lower[2]];
        let upper = [cfg.box_bounds.upper[0], cfg.box_bounds.upper[1], cfg.box_bounds.upper[2]];
        let box_domain = BoxDomain::new(lower, upper)
            .map_err(|e| cfg_err("/box", e.to_string()))?;
        let mut shapes = Vec::new();
        for (i, s) in cfg.shapes.iter().enumerate() {
            match s {
                ShapeCfg::Sphere { center, radius0, growth_rate } => {
                    if *radius0 <= 0.0 {
                        return Err(cfg_err(&format!("/shapes/{i}/radius0"), "must be positive"));
                    }
                    shapes.push(MovingShape {
                        center: *center,
                        kind: ShapeKind::Sphere(RadiusLaw { r0: *radius0, m: *growth_rate }),
                    });
                }
                ShapeCfg::Ellipsoid { center, semi_axes, angular_velocity } => {
                    if semi_axes.iter().any(|&a| a <= 0.0) {
                        return Err(cfg_err(
                            &format!("/shapes/{i}/semi_axes"),
                            "must be positive",
                        ));
                    }
                    shapes.push(MovingShape {
                        center: *center,
                        kind: ShapeKind::Ellipsoid {
                            semi_axes: *semi_axes,
                            angular_velocity: *angular_velocity,
                        },
                    });
                }
                ShapeCfg::Circle { .. } => {
                    return Err(cfg_err(&format!("/shapes/{i}"), "3D box cannot hold circles"))
                }
            }
        }
        let scene = MovingScene::new(box_domain, shapes, cfg.time.start, cfg.time.end)
            .map_err(|e| cfg_err("/shapes", e.to_string()))?;
        let merge_tol = cfg.merge_tol_rel.unwrap_or(1e-10) * box_domain.diagonal();
        let case = infer_case_3d(&scene);
        Ok(LoadedScene::ThreeD(SceneRun {
            scene,
            sizing_box: cfg.sizing.box_h,
            sizing_shapes: cfg.sizing.shapes,
            slabs,
            trajectory,
            strategy,
            merge_tol,
            seed: cfg.seed.unwrap_or(0),
            ladder_levels,
            ladder_factor,
            rate_band: cfg.rate_band,
            initial_mesh: cfg.initial_mesh,
            external_mesher: cfg.external_mesher,
            case,
        }))
    }
}

fn box_edge<const N: usize>(b: &BoxDomain<N>) -> Option<f64> {
    let l = b.upper[0] - b.lower[0];
    for i in 1..N {
        if ((b.upper[i] - b.lower[i]) - l).abs() > 1e-12 * l {
            return None;
        }
    }
    Some(l)
}

fn infer_case_2d(scene: &MovingScene<2>) -> Option<ExactCase> {
    let l = box_edge(&scene.box_domain)?;
    if scene.shapes.len() != 1 {
        return None;
    }
    match scene.shapes[0].kind {
        ShapeKind::Circle(law) if law.m == 0.0 => {
            Some(ExactCase::StationaryCircle { l, r: law.r0, t0: scene.t0, tf: scene.tf })
        }
        ShapeKind::Circle(law) => Some(ExactCase::ExpandingCircle {
            l,
            r0: law.r0,
            m: law.m,
            t0: scene.t0,
            tf: scene.tf,
        }),
        _ => None,
    }
}

fn infer_case_3d(scene: &MovingScene<3>) -> Option<ExactCase> {
    let l = box_edge(&scene.box_domain)?;
    match scene.shapes.len() {
        1 => match scene.shapes[0].kind {
            ShapeKind::Sphere(law) if law.m == 0.0 => {
                Some(ExactCase::StationarySphere { l, r: law.r0, t0: scene.t0, tf: scene.tf })
            }
            ShapeKind::Sphere(law) => Some(ExactCase::ExpandingSphere {
                l,
                r0: law.r0,
                m: law.m,
                t0: scene.t0,
                tf: scene.tf,
            }),
            ShapeKind::Ellipsoid { semi_axes, .. } => {
                Some(ExactCase::RotatingEllipsoidFinalTime { l, semi_axes })
            }
            _ => None,
        },
        2 => {
            let axes = |k: &ShapeKind| match k {
                ShapeKind::Ellipsoid { semi_axes, .. } => Some(*semi_axes),
                _ => None,
            };
            let a1 = axes(&scene.shapes[0].kind)?;
            let a2 = axes(&scene.shapes[1].kind)?;
            Some(ExactCase::TandemEllipsoidsFinalTime { l, semi_axes_1: a1, semi_axes_2: a2 })
        }
        _ => None,
    }
}
