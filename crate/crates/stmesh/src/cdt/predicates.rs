//! Orientation and in-circle predicates with an adaptive double-double
//! fallback. The fast paths evaluate in plain f64 with forward error bounds;
//! when a result is smaller than its bound, the determinant is re-evaluated
//! in double-double arithmetic (~106 bits), which is ample for desk-scale,
//! well-separated inputs.

const EPS: f64 = f64::EPSILON / 2.0;
const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1

/// Double-double value: hi + lo with |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn two_diff(a: f64, b: f64) -> (f64, f64) {
    let d = a - b;
    let bb = a - d;
    let err = (a - (d + bb)) + (bb - b);
    (d, err)
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = SPLITTER * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ahi, alo) = split(a);
    let (bhi, blo) = split(b);
    let err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo;
    (p, err)
}

impl Dd {
    #[inline]
    pub fn from(a: f64) -> Self {
        Dd { hi: a, lo: 0.0 }
    }

    #[inline]
    pub fn from_diff(a: f64, b: f64) -> Self {
        let (hi, lo) = two_diff(a, b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = fast_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(Dd { hi: -other.hi, lo: -other.lo })
    }

    #[inline]
    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_product(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = fast_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Positive if c lies to the left of the directed line a -> b, negative to
/// the right, zero (to double-double resolution) when collinear.
pub fn orient2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let detleft = (a[0] - c[0]) * (b[1] - c[1]);
    let detright = (a[1] - c[1]) * (b[0] - c[0]);
    let det = detleft - detright;
    let detsum = detleft.abs() + detright.abs();
    let errbound = (3.0 * EPS + 16.0 * EPS * EPS) * detsum;
    if det > errbound || -det > errbound {
        return det;
    }
    orient2d_dd(a, b, c)
}

fn orient2d_dd(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let acx = Dd::from_diff(a[0], c[0]);
    let acy = Dd::from_diff(a[1], c[1]);
    let bcx = Dd::from_diff(b[0], c[0]);
    let bcy = Dd::from_diff(b[1], c[1]);
    acx.mul(bcy).sub(acy.mul(bcx)).value()
}

/// Positive if d lies strictly inside the circumcircle of the
/// counterclockwise triangle (a, b, c), negative outside.
pub fn incircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let adx = a[0] - d[0];
    let ady = a[1] - d[1];
    let bdx = b[0] - d[0];
    let bdy = b[1] - d[1];
    let cdx = c[0] - d[0];
    let cdy = c[1] - d[1];

    let bdxcdy = bdx * cdy;
    let cdxbdy = cdx * bdy;
    let alift = adx * adx + ady * ady;

    let cdxady = cdx * ady;
    let adxcdy = adx * cdy;
    let blift = bdx * bdx + bdy * bdy;

    let adxbdy = adx * bdy;
    let bdxady = bdx * ady;
    let clift = cdx * cdx + cdy * cdy;

    let det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);

    let permanent = (bdxcdy.abs() + cdxbdy.abs()) * alift
        + (cdxady.abs() + adxcdy.abs()) * blift
        + (adxbdy.abs() + bdxady.abs()) * clift;
    let errbound = (10.0 * EPS + 96.0 * EPS * EPS) * permanent;
    if det > errbound || -det > errbound {
        return det;
    }
    incircle_dd(a, b, c, d)
}

fn incircle_dd(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let adx = Dd::from_diff(a[0], d[0]);
    let ady = Dd::from_diff(a[1], d[1]);
    let bdx = Dd::from_diff(b[0], d[0]);
    let bdy = Dd::from_diff(b[1], d[1]);
    let cdx = Dd::from_diff(c[0], d[0]);
    let cdy = Dd::from_diff(c[1], d[1]);

    let alift = adx.mul(adx).add(ady.mul(ady));
    let blift = bdx.mul(bdx).add(bdy.mul(bdy));
    let clift = cdx.mul(cdx).add(cdy.mul(cdy));

    let bcd = bdx.mul(cdy).sub(cdx.mul(bdy));
    let cad = cdx.mul(ady).sub(adx.mul(cdy));
    let abd = adx.mul(bdy).sub(bdx.mul(ady));

    alift.mul(bcd).add(blift.mul(cad)).add(clift.mul(abd)).value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orient_basic() {
        assert!(orient2d([0., 0.], [1., 0.], [0., 1.]) > 0.0);
        assert!(orient2d([0., 0.], [1., 0.], [0., -1.]) < 0.0);
        assert_eq!(orient2d([0., 0.], [1., 0.], [2., 0.]), 0.0);
    }

    #[test]
    fn orient_near_collinear_is_sign_stable() {
        // Points nearly collinear; the f64 fast path is inconclusive here.
        let a = [0.5, 0.5];
        let b = [12.0, 12.0];
        for k in 0..100 {
            let t = 0.5 + k as f64 * 1e-17;
            let c = [t, t];
            let s1 = orient2d(a, b, c);
            let s2 = orient2d(a, b, c);
            assert_eq!(s1, s2);
        }
    }

    #[test]
    fn incircle_basic() {
        let a = [0., 0.];
        let b = [1., 0.];
        let c = [0., 1.];
        assert!(incircle(a, b, c, [0.5, 0.5]) > 0.0, "circumcenter is strictly inside");
        assert!(incircle(a, b, c, [0.25, 0.25]) > 0.0);
        assert!(incircle(a, b, c, [2., 2.]) < 0.0);
    }

    #[test]
    fn incircle_cocircular_is_zero() {
        // Four exactly representable cocircular points.
        let v = incircle([1., 0.], [0., 1.], [-1., 0.], [0., -1.]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn incircle_tiny_perturbation_detected() {
        let eps = 1e-14;
        let inside = incircle([1., 0.], [0., 1.], [-1., 0.], [0., -1. + eps]);
        let outside = incircle([1., 0.], [0., 1.], [-1., 0.], [0., -1. - eps]);
        assert!(inside > 0.0);
        assert!(outside < 0.0);
    }

    #[test]
    fn dd_product_is_exact_for_representable_cases() {
        let a = Dd::from_diff(1.0 + 1e-16, 1e-16);
        let b = Dd::from(3.0);
        let p = a.mul(b);
        assert!((p.value() - 3.0).abs() < 1e-15);
    }
}
