//! Boundary-vertex advection through one time slab by explicit substepped
//! forward Euler integration of dx/dt = v, with terminal projection onto the
//! exact surface.

use crate::error::{Error, Result};
use crate::scene::{MovingScene, SurfaceOwner};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    /// Substeps per slab; the substep size is (t_np1 - t_n) / substeps.
    pub substeps: usize,
    pub project_each_substep: bool,
    pub terminal_projection: bool,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self { substeps: 32, project_each_substep: false, terminal_projection: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedVertex<const N: usize> {
    pub position: [f64; N],
    pub owner: SurfaceOwner,
}

/// Advects tagged boundary vertices from t_n to t_np1. Box vertices are
/// returned unchanged; object vertices are stepped `substeps` times and then
/// projected onto their owning surface at t_np1. Output order matches input
/// order, so edge/triangle connectivity carries over unchanged.
pub fn advect_vertices<const N: usize>(
    verts: &[TaggedVertex<N>],
    scene: &MovingScene<N>,
    t_n: f64,
    t_np1: f64,
    cfg: &TrajectoryConfig,
) -> Result<Vec<[f64; N]>> {
    if !(t_np1 > t_n) {
        return Err(Error::Pipeline(format!(
            "slab duration must be positive (t_n = {t_n}, t_np1 = {t_np1})"
        )));
    }
    if cfg.substeps == 0 {
        return Err(Error::invalid_input("trajectory substeps must be >= 1"));
    }
    let m = cfg.substeps;
    let dt_sub = (t_np1 - t_n) / m as f64;
    let mut out = Vec::with_capacity(verts.len());
    for (vi, v) in verts.iter().enumerate() {
        match v.owner {
            SurfaceOwner::Box => out.push(v.position),
            SurfaceOwner::Shape(s) => {
                let mut x = v.position;
                for k in 0..m {
                    let t = t_n + k as f64 * dt_sub;
                    let vel = scene.boundary_velocity(s, &x, t)?;
                    for i in 0..N {
                        x[i] += dt_sub * vel[i];
                    }
                    if cfg.project_each_substep {
                        x = scene.project_to_surface(s, &x, t + dt_sub)?;
                    }
                }
                if cfg.terminal_projection {
                    x = scene.project_to_surface(s, &x, t_np1)?;
                }
                if !scene.box_domain.contains(&x, 0.0) {
                    return Err(Error::OutOfDomain(format!(
                        "advected vertex {vi} at {x:?} left the box"
                    )));
                }
                out.push(x);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{BoxDomain, MovingShape, RadiusLaw, ShapeKind};
    use approx::assert_relative_eq;

    fn circle_scene(m: f64) -> MovingScene<2> {
        MovingScene::new(
            BoxDomain::new([-5.0, -5.0], [5.0, 5.0]).unwrap(),
            vec![MovingShape { center: [0.0, 0.0], kind: ShapeKind::Circle(RadiusLaw { r0: 1.0, m }) }],
            0.0,
            1.0,
        )
        .unwrap()
    }

    fn ellipsoid_scene() -> MovingScene<3> {
        MovingScene::new(
            BoxDomain::new([-8.0; 3], [8.0; 3]).unwrap(),
            vec![MovingShape {
                center: [0.0; 3],
                kind: ShapeKind::Ellipsoid {
                    semi_axes: [1.0, 3.0, 2.0],
                    angular_velocity: [0.0, 0.0, std::f64::consts::FRAC_PI_2],
                },
            }],
            0.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn static_circle_vertex_is_unchanged() {
        let scene = circle_scene(0.0);
        for m in [1, 4, 32] {
            let cfg = TrajectoryConfig { substeps: m, ..Default::default() };
            let verts = [TaggedVertex { position: [0.6, 0.8], owner: SurfaceOwner::Shape(0) }];
            let out = advect_vertices(&verts, &scene, 0.0, 1.0, &cfg).unwrap();
            assert_relative_eq!(out[0][0], 0.6, max_relative = 1e-13);
            assert_relative_eq!(out[0][1], 0.8, max_relative = 1e-13);
        }
    }

    #[test]
    fn box_vertices_are_fixed() {
        let scene = circle_scene(0.25);
        let verts = [TaggedVertex { position: [5.0, 1.0], owner: SurfaceOwner::Box }];
        let out = advect_vertices(&verts, &scene, 0.0, 1.0, &TrajectoryConfig::default()).unwrap();
        assert_eq!(out[0], [5.0, 1.0]);
    }

    #[test]
    fn expanding_circle_lands_on_final_radius() {
        // R0 = 1, m = 0.25 over [0,1]: final radius exactly 1.25.
        let scene = circle_scene(0.25);
        let verts = [TaggedVertex { position: [1.0, 0.0], owner: SurfaceOwner::Shape(0) }];
        let out = advect_vertices(&verts, &scene, 0.0, 1.0, &TrajectoryConfig::default()).unwrap();
        let r = (out[0][0].powi(2) + out[0][1].powi(2)).sqrt();
        assert_relative_eq!(r, 1.25, max_relative = 1e-14);
    }

    #[test]
    fn zero_duration_slab_is_rejected() {
        let scene = circle_scene(0.0);
        let verts = [TaggedVertex { position: [1.0, 0.0], owner: SurfaceOwner::Shape(0) }];
        assert!(advect_vertices(&verts, &scene, 1.0, 1.0, &TrajectoryConfig::default()).is_err());
    }

    #[test]
    fn output_order_matches_input_order() {
        let scene = circle_scene(0.25);
        let verts: Vec<TaggedVertex<2>> = (0..16)
            .map(|k| {
                let ang = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
                TaggedVertex { position: [ang.cos(), ang.sin()], owner: SurfaceOwner::Shape(0) }
            })
            .collect();
        let out = advect_vertices(&verts, &scene, 0.0, 1.0, &TrajectoryConfig::default()).unwrap();
        assert_eq!(out.len(), verts.len());
        for (inp, outp) in verts.iter().zip(&out) {
            // Radial expansion preserves the angle.
            let a_in = inp.position[1].atan2(inp.position[0]);
            let a_out = outp[1].atan2(outp[0]);
            assert_relative_eq!(a_in, a_out, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_endpoint_matches_exact_rotation_oracle() {
        let scene = ellipsoid_scene();
        let cfg = TrajectoryConfig { substeps: 1024, ..Default::default() };
        let verts = [TaggedVertex { position: [1.0, 0.0, 0.0], owner: SurfaceOwner::Shape(0) }];
        let out = advect_vertices(&verts, &scene, 0.0, 1.0, &cfg).unwrap();
        // Exact rigid rotation by pi/2 about z carries (1,0,0) to (0,1,0).
        let err = ((out[0][0] - 0.0).powi(2) + (out[0][1] - 1.0).powi(2) + out[0][2].powi(2)).sqrt();
        assert!(err < 1e-3, "post-projection error {err}");
    }

    #[test]
    fn pre_projection_euler_error_is_first_order() {
        let scene = ellipsoid_scene();
        let exact = [0.0, 1.0, 0.0];
        let mut errors = Vec::new();
        let mut m = 32;
        while m <= 1024 {
            let cfg = TrajectoryConfig {
                substeps: m,
                project_each_substep: false,
                terminal_projection: false,
            };
            let verts = [TaggedVertex { position: [1.0, 0.0, 0.0], owner: SurfaceOwner::Shape(0) }];
            let out = advect_vertices(&verts, &scene, 0.0, 1.0, &cfg).unwrap();
            let err = ((out[0][0] - exact[0]).powi(2)
                + (out[0][1] - exact[1]).powi(2)
                + (out[0][2] - exact[2]).powi(2))
            .sqrt();
            errors.push(err);
            m *= 2;
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.8..=2.2).contains(&ratio), "halving ratio {ratio}");
        }
    }

    #[test]
    fn terminal_projection_puts_vertices_on_surface() {
        let scene = ellipsoid_scene();
        let shape = &scene.shapes[0];
        let start = scene.project_to_surface(0, &[0.7, 1.9, 0.9], 0.0).unwrap();
        let verts = [TaggedVertex { position: start, owner: SurfaceOwner::Shape(0) }];
        let out = advect_vertices(&verts, &scene, 0.0, 1.0, &TrajectoryConfig::default()).unwrap();
        assert!(shape.implicit(&out[0], 1.0).abs() < 1e-10);
    }
}
