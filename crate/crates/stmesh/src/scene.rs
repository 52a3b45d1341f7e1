//! Analytic moving-boundary scenes: a stationary box containing circles,
//! spheres, or rotating ellipsoids, with exact boundary velocities, signed
//! classification, and closest-point projection onto the moving surfaces.

use crate::error::{Error, Result};

/// Axis-aligned box domain, the stationary outer boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain<const N: usize> {
    pub lower: [f64; N],
    pub upper: [f64; N],
}

impl<const N: usize> BoxDomain<N> {
    pub fn new(lower: [f64; N], upper: [f64; N]) -> Result<Self> {
        for i in 0..N {
            if !(lower[i] < upper[i]) {
                return Err(Error::invalid_input(format!(
                    "box bounds must satisfy lower < upper on axis {i}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn diagonal(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            s += (self.upper[i] - self.lower[i]).powi(2);
        }
        s.sqrt()
    }

    pub fn contains(&self, x: &[f64; N], margin: f64) -> bool {
        (0..N).all(|i| x[i] >= self.lower[i] + margin && x[i] <= self.upper[i] - margin)
    }
}

/// Linear radius law R(t) = R0 + m t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusLaw {
    pub r0: f64,
    pub m: f64,
}

impl RadiusLaw {
    pub fn radius(&self, t: f64) -> f64 {
        self.r0 + self.m * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeKind {
    /// Circle in 2D with a linear radius law.
    Circle(RadiusLaw),
    /// Sphere in 3D with a linear radius law.
    Sphere(RadiusLaw),
    /// Rigidly rotating ellipsoid in 3D with fixed semi-axes.
    Ellipsoid { semi_axes: [f64; 3], angular_velocity: [f64; 3] },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovingShape<const N: usize> {
    pub center: [f64; N],
    pub kind: ShapeKind,
}

/// Rodrigues rotation of `v` around unit axis `k` by angle `theta`.
fn rotate3(v: [f64; 3], k: [f64; 3], theta: f64) -> [f64; 3] {
    let (s, c) = theta.sin_cos();
    let kxv = [
        k[1] * v[2] - k[2] * v[1],
        k[2] * v[0] - k[0] * v[2],
        k[0] * v[1] - k[1] * v[0],
    ];
    let kdv = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = v[i] * c + kxv[i] * s + k[i] * kdv * (1.0 - c);
    }
    out
}

impl<const N: usize> MovingShape<N> {
    /// World -> body frame at time t (inverse rotation for ellipsoids).
    fn to_body(&self, x: &[f64; N], t: f64) -> [f64; N] {
        let mut rel = [0.0; N];
        for i in 0..N {
            rel[i] = x[i] - self.center[i];
        }
        if let ShapeKind::Ellipsoid { angular_velocity, .. } = self.kind {
            let w = norm_n(&angular_velocity);
            if w > 0.0 && N == 3 {
                let axis = [
                    angular_velocity[0] / w,
                    angular_velocity[1] / w,
                    angular_velocity[2] / w,
                ];
                let r3 = rotate3([rel[0], rel[1], rel[2]], axis, -w * t);
                for i in 0..3 {
                    rel[i] = r3[i];
                }
            }
        }
        rel
    }

    /// Body -> world frame at time t.
    fn to_world(&self, y: &[f64; N], t: f64) -> [f64; N] {
        let mut out = *y;
        if let ShapeKind::Ellipsoid { angular_velocity, .. } = self.kind {
            let w = norm_n(&angular_velocity);
            if w > 0.0 && N == 3 {
                let axis = [
                    angular_velocity[0] / w,
                    angular_velocity[1] / w,
                    angular_velocity[2] / w,
                ];
                let r3 = rotate3([out[0], out[1], out[2]], axis, w * t);
                for i in 0..3 {
                    out[i] = r3[i];
                }
            }
        }
        for i in 0..N {
            out[i] += self.center[i];
        }
        out
    }

    /// Implicit surface value at world point x, time t: zero on the surface,
    /// negative inside. For circles/spheres this is the signed distance; for
    /// ellipsoids it is the body-frame quadric value.
    pub fn implicit(&self, x: &[f64; N], t: f64) -> f64 {
        let rel = self.to_body(x, t);
        match self.kind {
            ShapeKind::Circle(law) | ShapeKind::Sphere(law) => norm_n(&rel) - law.radius(t),
            ShapeKind::Ellipsoid { semi_axes, .. } => {
                let mut f = -1.0;
                for i in 0..3.min(N) {
                    f += (rel[i] / semi_axes[i]).powi(2);
                }
                f
            }
        }
    }

    /// Smallest geometric feature size (used for projection trust regions).
    pub fn min_feature(&self, t0: f64, tf: f64) -> f64 {
        match self.kind {
            ShapeKind::Circle(law) | ShapeKind::Sphere(law) => {
                law.radius(t0).min(law.radius(tf))
            }
            ShapeKind::Ellipsoid { semi_axes, .. } => {
                semi_axes.iter().cloned().fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Deterministic surface sample points at time t (validation only).
    fn surface_samples(&self, t: f64) -> Vec<[f64; N]> {
        let mut out = Vec::new();
        match self.kind {
            ShapeKind::Circle(law) => {
                let r = law.radius(t);
                for k in 0..64 {
                    let ang = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
                    let mut p = [0.0; N];
                    p[0] = r * ang.cos();
                    p[1] = r * ang.sin();
                    out.push(self.to_world(&p, t));
                }
            }
            ShapeKind::Sphere(law) => {
                let r = law.radius(t);
                for dir in fibonacci_directions(128) {
                    let mut p = [0.0; N];
                    for i in 0..3.min(N) {
                        p[i] = r * dir[i];
                    }
                    out.push(self.to_world(&p, t));
                }
            }
            ShapeKind::Ellipsoid { semi_axes, .. } => {
                for dir in fibonacci_directions(128) {
                    let mut p = [0.0; N];
                    for i in 0..3.min(N) {
                        p[i] = semi_axes[i] * dir[i];
                    }
                    out.push(self.to_world(&p, t));
                }
                // Axis tips, where pairwise clearances are usually tightest.
                for i in 0..3.min(N) {
                    for sgn in [-1.0, 1.0] {
                        let mut p = [0.0; N];
                        p[i] = sgn * semi_axes[i];
                        out.push(self.to_world(&p, t));
                    }
                }
            }
        }
        out
    }
}

fn norm_n<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn fibonacci_directions(n: usize) -> Vec<[f64; 3]> {
    let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = 2.0 * std::f64::consts::PI * (i as f64) / golden;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Box plus moving shapes over a time interval.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingScene<const N: usize> {
    pub box_domain: BoxDomain<N>,
    pub shapes: Vec<MovingShape<N>>,
    pub t0: f64,
    pub tf: f64,
}

/// Which surface owns a boundary vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceOwner {
    Box,
    Shape(usize),
}

/// Active box-face constraints at a boundary point: (axis, at_upper, value).
#[derive(Debug, Clone, PartialEq)]
pub struct FaceConstraint {
    pub axis: usize,
    pub at_upper: bool,
    pub value: f64,
}

impl<const N: usize> MovingScene<N> {
    pub fn new(
        box_domain: BoxDomain<N>,
        shapes: Vec<MovingShape<N>>,
        t0: f64,
        tf: f64,
    ) -> Result<Self> {
        if !(tf > t0) {
            return Err(Error::invalid_input("time interval must satisfy tf > t0"));
        }
        let scene = Self { box_domain, shapes, t0, tf };
        scene.validate()?;
        Ok(scene)
    }

    /// Shape invariants plus sampled disjointness/containment at 64 times.
    pub fn validate(&self) -> Result<()> {
        for (si, shape) in self.shapes.iter().enumerate() {
            match shape.kind {
                ShapeKind::Circle(law) | ShapeKind::Sphere(law) => {
                    if law.r0 <= 0.0 {
                        return Err(Error::invalid_input(format!("shape {si}: R0 must be > 0")));
                    }
                    if law.radius(self.t0) <= 0.0 || law.radius(self.tf) <= 0.0 {
                        return Err(Error::invalid_input(format!(
                            "shape {si}: R(t) must stay positive over [t0, tf]"
                        )));
                    }
                    if matches!(shape.kind, ShapeKind::Circle(_)) && N != 2 {
                        return Err(Error::invalid_input("circle shapes require a 2D scene"));
                    }
                    if matches!(shape.kind, ShapeKind::Sphere(_)) && N != 3 {
                        return Err(Error::invalid_input("sphere shapes require a 3D scene"));
                    }
                }
                ShapeKind::Ellipsoid { semi_axes, .. } => {
                    if semi_axes.iter().any(|&s| s <= 0.0) {
                        return Err(Error::invalid_input(format!(
                            "shape {si}: semi-axes must be positive"
                        )));
                    }
                    if N != 3 {
                        return Err(Error::invalid_input("ellipsoid shapes require a 3D scene"));
                    }
                }
            }
        }
        for step in 0..=63 {
            let t = self.t0 + (self.tf - self.t0) * step as f64 / 63.0;
            for (si, shape) in self.shapes.iter().enumerate() {
                for p in shape.surface_samples(t) {
                    if !self.box_domain.contains(&p, 0.0) {
                        return Err(Error::invalid_input(format!(
                            "shape {si} leaves the box at t = {t}"
                        )));
                    }
                    for (sj, other) in self.shapes.iter().enumerate() {
                        if si != sj && other.implicit(&p, t) <= 0.0 {
                            return Err(Error::invalid_input(format!(
                                "shapes {si} and {sj} intersect at t = {t}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Velocity of the indexed shape's boundary at point x, time t.
    pub fn boundary_velocity(&self, shape_index: usize, x: &[f64; N], t: f64) -> Result<[f64; N]> {
        let shape = &self.shapes[shape_index];
        match shape.kind {
            ShapeKind::Circle(law) | ShapeKind::Sphere(law) => {
                let mut rel = [0.0; N];
                for i in 0..N {
                    rel[i] = x[i] - shape.center[i];
                }
                let r = norm_n(&rel);
                if law.m == 0.0 {
                    return Ok([0.0; N]);
                }
                if r == 0.0 {
                    return Err(Error::invalid_input(
                        "boundary_velocity: point coincides with the shape center",
                    ));
                }
                let mut v = [0.0; N];
                for i in 0..N {
                    v[i] = law.m * rel[i] / r;
                }
                Ok(v)
            }
            ShapeKind::Ellipsoid { angular_velocity, .. } => {
                let mut v = [0.0; N];
                if N == 3 {
                    let rel = [
                        x[0] - shape.center[0],
                        x[1] - shape.center[1],
                        x[2] - shape.center[2],
                    ];
                    let w = angular_velocity;
                    let c = [
                        w[1] * rel[2] - w[2] * rel[1],
                        w[2] * rel[0] - w[0] * rel[2],
                        w[0] * rel[1] - w[1] * rel[0],
                    ];
                    for i in 0..3 {
                        v[i] = c[i];
                    }
                }
                let _ = t;
                Ok(v)
            }
        }
    }

    /// Projects x onto the indexed shape's surface at time t.
    pub fn project_to_surface(&self, shape_index: usize, x: &[f64; N], t: f64) -> Result<[f64; N]> {
        let shape = &self.shapes[shape_index];
        match shape.kind {
            ShapeKind::Circle(law) | ShapeKind::Sphere(law) => {
                let mut rel = [0.0; N];
                for i in 0..N {
                    rel[i] = x[i] - shape.center[i];
                }
                let r = norm_n(&rel);
                if r == 0.0 {
                    return Err(Error::Projection(
                        "cannot project the shape center onto its surface".into(),
                    ));
                }
                let scale = law.radius(t) / r;
                let mut out = [0.0; N];
                for i in 0..N {
                    out[i] = shape.center[i] + rel[i] * scale;
                }
                Ok(out)
            }
            ShapeKind::Ellipsoid { semi_axes, .. } => {
                let p = shape.to_body(x, t);
                if norm_n(&p) == 0.0 {
                    return Err(Error::Projection(
                        "cannot project the shape center onto its surface".into(),
                    ));
                }
                let y = ellipsoid_closest_point(&[p[0], p[1], p[2]], &semi_axes)?;
                let mut yn = [0.0; N];
                for i in 0..3.min(N) {
                    yn[i] = y[i];
                }
                Ok(shape.to_world(&yn, t))
            }
        }
    }

    /// Active box-face equations for a point on the box boundary.
    pub fn box_face_constraint(&self, x: &[f64; N]) -> Result<Vec<FaceConstraint>> {
        let tol = 1e-9 * self.box_domain.diagonal();
        let mut active = Vec::new();
        for axis in 0..N {
            if (x[axis] - self.box_domain.lower[axis]).abs() <= tol {
                active.push(FaceConstraint { axis, at_upper: false, value: self.box_domain.lower[axis] });
            }
            if (x[axis] - self.box_domain.upper[axis]).abs() <= tol {
                active.push(FaceConstraint { axis, at_upper: true, value: self.box_domain.upper[axis] });
            }
        }
        if active.is_empty() {
            return Err(Error::invalid_input("point is not on any box face"));
        }
        Ok(active)
    }
}

/// Closest point on the axis-aligned ellipsoid sum((y_i/s_i)^2) = 1 to a
/// body-frame point p, via Newton iteration with a bisection safeguard on the
/// single Lagrange multiplier.
fn ellipsoid_closest_point(p: &[f64; 3], s: &[f64; 3]) -> Result<[f64; 3]> {
    let g = |lambda: f64| -> f64 {
        let mut acc = -1.0;
        for i in 0..3 {
            let term = s[i] * p[i] / (s[i] * s[i] + lambda);
            acc += term * term;
        }
        acc
    };
    let dg = |lambda: f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            let d = s[i] * s[i] + lambda;
            acc += -2.0 * (s[i] * p[i]).powi(2) / (d * d * d);
        }
        acc
    };
    let s2min = s.iter().map(|v| v * v).fold(f64::INFINITY, f64::min);
    // g is strictly decreasing on (-s2min, inf); bracket the root.
    let mut lo = -s2min * 0.5;
    while g(lo) < 0.0 {
        lo = -s2min + (lo + s2min) * 0.25;
        if lo + s2min < 1e-300 {
            return Err(Error::Projection("ellipsoid projection bracket failure".into()));
        }
    }
    let mut hi = s2min.max(1.0);
    while g(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Projection("ellipsoid projection bracket failure".into()));
        }
    }
    let mut lambda = if g(0.0) > 0.0 { hi.min(s2min) } else { 0.5 * (lo + hi) };
    for _ in 0..100 {
        let val = g(lambda);
        if val > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let step = val / dg(lambda);
        let mut next = lambda - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - lambda).abs() <= 1e-12 * (1.0 + lambda.abs()) && val.abs() <= 1e-12 {
            lambda = next;
            let mut y = [0.0; 3];
            for i in 0..3 {
                y[i] = s[i] * s[i] * p[i] / (s[i] * s[i] + lambda);
            }
            return Ok(y);
        }
        lambda = next;
    }
    Err(Error::Projection("ellipsoid projection did not converge in 100 iterations".into()))
}
