//! Exact analytic measures for the supported scenes, error computation, and
//! convergence-rate fitting over refinement ladders.

use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

/// The closed-form verification cases. Lengths and times are in the scene's
/// units; `l` is the box edge length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactCase {
    /// Static circle: two square-with-hole caps plus box and circle tubes.
    StationaryCircle { l: f64, r: f64, t0: f64, tf: f64 },
    /// Circle with R(t) = r0 + m t; the lateral tube is a conical frustum.
    ExpandingCircle { l: f64, r0: f64, m: f64, t0: f64, tf: f64 },
    /// Static sphere: two cube-with-cavity caps plus lateral hypersurfaces.
    StationarySphere { l: f64, r: f64, t0: f64, tf: f64 },
    /// Sphere with R(t) = r0 + m t.
    ExpandingSphere { l: f64, r0: f64, m: f64, t0: f64, tf: f64 },
    /// Spatial volume of the final-time cap: box minus one ellipsoid.
    RotatingEllipsoidFinalTime { l: f64, semi_axes: [f64; 3] },
    /// Spatial volume of the final-time cap: box minus two ellipsoids.
    TandemEllipsoidsFinalTime { l: f64, semi_axes_1: [f64; 3], semi_axes_2: [f64; 3] },
}

impl ExactCase {
    /// Spacing-proxy exponent for ladders built on this case: element count
    /// to the -1/2 power for surface meshes, -1/3 for hypersurface meshes.
    pub fn spacing_exponent(&self) -> f64 {
        match self {
            ExactCase::StationaryCircle { .. } | ExactCase::ExpandingCircle { .. } => -0.5,
            _ => -1.0 / 3.0,
        }
    }
}

/// Evaluates the closed-form exact measure for a case.
pub fn exact_measure(case: &ExactCase) -> f64 {
    use std::f64::consts::PI;
    match *case {
        ExactCase::StationaryCircle { l, r, t0, tf } => {
            2.0 * (l * l - PI * r * r) + (4.0 * l + 2.0 * PI * r) * (tf - t0)
        }
        ExactCase::ExpandingCircle { l, r0, m, t0, tf } => {
            let ri = r0 + m * t0;
            let rf = r0 + m * tf;
            let dt = tf - t0;
            2.0 * l * l - PI * (rf * rf + ri * ri)
                + 4.0 * l * dt
                + PI * (rf + ri) * ((rf - ri).powi(2) + dt * dt).sqrt()
        }
        ExactCase::StationarySphere { l, r, t0, tf } => {
            2.0 * (l.powi(3) - 4.0 / 3.0 * PI * r.powi(3))
                + (6.0 * l * l + 4.0 * PI * r * r) * (tf - t0)
        }
        ExactCase::ExpandingSphere { l, r0, m, t0, tf } => {
            let ri = r0 + m * t0;
            let rf = r0 + m * tf;
            let dt = tf - t0;
            // (rf^3 - ri^3)/(rf - ri) in its factored form, which removes the
            // rf = ri singularity algebraically.
            let ratio = rf * rf + rf * ri + ri * ri;
            2.0 * l.powi(3) - 4.0 / 3.0 * PI * (rf.powi(3) + ri.powi(3))
                + 6.0 * l * l * dt
                + 4.0 / 3.0 * PI * ratio * ((rf - ri).powi(2) + dt * dt).sqrt()
        }
        ExactCase::RotatingEllipsoidFinalTime { l, semi_axes } => {
            l.powi(3) - 4.0 / 3.0 * PI * semi_axes[0] * semi_axes[1] * semi_axes[2]
        }
        ExactCase::TandemEllipsoidsFinalTime { l, semi_axes_1, semi_axes_2 } => {
            l.powi(3)
                - 4.0 / 3.0
                    * PI
                    * (semi_axes_1[0] * semi_axes_1[1] * semi_axes_1[2]
                        + semi_axes_2[0] * semi_axes_2[1] * semi_axes_2[2])
        }
    }
}

/// Absolute measure error.
pub fn measure_error(exact: f64, approx: f64) -> f64 {
    (exact - approx).abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderEntry {
    pub element_count: usize,
    pub vertex_count: usize,
    pub spacing_proxy: f64,
    pub approx: f64,
    pub exact: f64,
    pub error: f64,
}

/// Refinement ladder: entries ordered coarse to fine (descending proxy).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLadder {
    pub entries: Vec<LadderEntry>,
    pub spacing_exponent: f64,
}

impl ConvergenceLadder {
    pub fn new(spacing_exponent: f64) -> Self {
        Self { entries: Vec::new(), spacing_exponent }
    }

    pub fn push(&mut self, element_count: usize, vertex_count: usize, approx: f64, exact: f64) {
        self.entries.push(LadderEntry {
            element_count,
            vertex_count,
            spacing_proxy: (element_count as f64).powf(self.spacing_exponent),
            approx,
            exact,
            error: measure_error(exact, approx),
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateFit {
    Fitted { rate: f64, residual: f64 },
    /// At least one ladder error is exactly zero: the mesh reproduces the
    /// exact measure to working precision and no rate is defined.
    ExactToPrecision,
}

/// Least-squares slope of log(error) against log(spacing proxy) over all
/// ladder points.
pub fn fit_rate(ladder: &ConvergenceLadder) -> Result<RateFit> {
    if ladder.entries.len() < 3 {
        return Err(Error::invalid_input("rate fitting needs at least 3 ladder entries"));
    }
    for w in ladder.entries.windows(2) {
        if w[1].spacing_proxy >= w[0].spacing_proxy {
            return Err(Error::invalid_input(
                "ladder entries must be sorted by descending spacing proxy",
            ));
        }
    }
    if ladder.entries.iter().any(|e| e.error == 0.0) {
        return Ok(RateFit::ExactToPrecision);
    }
    let xs: Vec<f64> = ladder.entries.iter().map(|e| e.spacing_proxy.ln()).collect();
    let ys: Vec<f64> = ladder.entries.iter().map(|e| e.error.ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - xbar) * (y - ybar);
        sxx += (x - xbar) * (x - xbar);
    }
    let rate = sxy / sxx;
    let intercept = ybar - rate * xbar;
    let mut ss = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let pred = intercept + rate * x;
        ss += (y - pred) * (y - pred);
    }
    Ok(RateFit::Fitted { rate, residual: (ss / n).sqrt() })
}

/// Writes the ladder as CSV with one row per mesh.
pub fn write_ladder_csv(ladder: &ConvergenceLadder, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "mesh_index,elements,vertices,spacing_proxy,approx,exact,error")?;
    for (i, e) in ladder.entries.iter().enumerate() {
        writeln!(
            f,
            "{},{},{},{:.17e},{:.17e},{:.17e},{:.17e}",
            i + 1,
            e.element_count,
            e.vertex_count,
            e.spacing_proxy,
            e.approx,
            e.exact,
            e.error
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stationary_circle_is_240() {
        let v = exact_measure(&ExactCase::StationaryCircle { l: 10.0, r: 1.0, t0: 0.0, tf: 1.0 });
        assert_relative_eq!(v, 240.0, max_relative = 1e-14);
    }

    #[test]
    fn stationary_sphere_value() {
        let v = exact_measure(&ExactCase::StationarySphere { l: 10.0, r: 1.0, t0: 0.0, tf: 1.0 });
        assert_relative_eq!(v, 2604.1887902047865, max_relative = 1e-14);
    }

    #[test]
    fn expanding_circle_value() {
        let v = exact_measure(&ExactCase::ExpandingCircle {
            l: 10.0,
            r0: 1.0,
            m: 0.25,
            t0: 0.0,
            tf: 1.0,
        });
        assert_relative_eq!(v, 239.23579789334721, max_relative = 1e-14);
    }

    #[test]
    fn expanding_sphere_value() {
        let v = exact_measure(&ExactCase::ExpandingSphere {
            l: 10.0,
            r0: 1.0,
            m: 0.25,
            t0: 0.0,
            tf: 1.0,
        });
        assert_relative_eq!(v, 2604.091233487914, max_relative = 1e-14);
    }

    #[test]
    fn rotating_ellipsoid_value() {
        let v = exact_measure(&ExactCase::RotatingEllipsoidFinalTime {
            l: 16.0,
            semi_axes: [1.0, 3.0, 2.0],
        });
        assert_relative_eq!(v, 4070.8672587712817, max_relative = 1e-14);
    }

    #[test]
    fn tandem_ellipsoids_value() {
        let v = exact_measure(&ExactCase::TandemEllipsoidsFinalTime {
            l: 20.0,
            semi_axes_1: [1.0, 3.0, 2.0],
            semi_axes_2: [3.0, 1.0, 2.0],
        });
        assert_relative_eq!(v, 7949.7345175425635, max_relative = 1e-14);
    }

    #[test]
    fn expanding_with_zero_growth_matches_stationary() {
        let a = exact_measure(&ExactCase::ExpandingCircle {
            l: 10.0,
            r0: 1.0,
            m: 0.0,
            t0: 0.0,
            tf: 1.0,
        });
        let b = exact_measure(&ExactCase::StationaryCircle { l: 10.0, r: 1.0, t0: 0.0, tf: 1.0 });
        assert_relative_eq!(a, b, max_relative = 1e-14);
        let c = exact_measure(&ExactCase::ExpandingSphere {
            l: 10.0,
            r0: 1.0,
            m: 0.0,
            t0: 0.0,
            tf: 1.0,
        });
        let d = exact_measure(&ExactCase::StationarySphere { l: 10.0, r: 1.0, t0: 0.0, tf: 1.0 });
        assert_relative_eq!(c, d, max_relative = 1e-14);
    }

    #[test]
    fn exact_measure_is_continuous_in_params() {
        let cases = |r0: f64| {
            vec![
                ExactCase::StationaryCircle { l: 10.0, r: r0, t0: 0.0, tf: 1.0 },
                ExactCase::ExpandingCircle { l: 10.0, r0, m: 0.25, t0: 0.0, tf: 1.0 },
                ExactCase::StationarySphere { l: 10.0, r: r0, t0: 0.0, tf: 1.0 },
                ExactCase::ExpandingSphere { l: 10.0, r0, m: 0.25, t0: 0.0, tf: 1.0 },
            ]
        };
        for (a, b) in cases(1.0).iter().zip(cases(1.0 + 1e-9).iter()) {
            let delta = (exact_measure(a) - exact_measure(b)).abs();
            assert!(delta < 1e-6, "perturbation response {delta}");
        }
    }

    #[test]
    fn measure_error_examples() {
        assert_eq!(measure_error(240.0, 240.0), 0.0);
        assert_eq!(measure_error(240.0, 239.0), 1.0);
    }

    #[test]
    fn synthetic_geometric_ladder_fits_rate_two() {
        let mut ladder = ConvergenceLadder::new(-0.5);
        ladder.push(100, 60, 1.0 - 1e-2, 1.0);
        ladder.push(400, 220, 1.0 - 2.5e-3, 1.0);
        ladder.push(1600, 840, 1.0 - 6.25e-4, 1.0);
        match fit_rate(&ladder).unwrap() {
            RateFit::Fitted { rate, residual } => {
                assert_relative_eq!(rate, 2.0, max_relative = 1e-12);
                assert!(residual < 1e-12);
            }
            RateFit::ExactToPrecision => panic!("expected a fitted rate"),
        }
    }

    #[test]
    fn constant_errors_fit_rate_zero() {
        let mut ladder = ConvergenceLadder::new(-0.5);
        ladder.push(100, 60, 2.0, 1.0);
        ladder.push(400, 220, 2.0, 1.0);
        ladder.push(1600, 840, 2.0, 1.0);
        match fit_rate(&ladder).unwrap() {
            RateFit::Fitted { rate, .. } => assert!(rate.abs() < 1e-12),
            RateFit::ExactToPrecision => panic!("expected a fitted rate"),
        }
    }

    #[test]
    fn zero_error_reports_exact_to_precision() {
        let mut ladder = ConvergenceLadder::new(-0.5);
        ladder.push(100, 60, 1.0, 1.0);
        ladder.push(400, 220, 1.0 - 1e-3, 1.0);
        ladder.push(1600, 840, 1.0 - 1e-4, 1.0);
        assert_eq!(fit_rate(&ladder).unwrap(), RateFit::ExactToPrecision);
    }

    #[test]
    fn too_few_entries_is_an_error() {
        let mut ladder = ConvergenceLadder::new(-0.5);
        ladder.push(100, 60, 0.9, 1.0);
        ladder.push(400, 220, 0.99, 1.0);
        assert!(fit_rate(&ladder).is_err());
    }
}
