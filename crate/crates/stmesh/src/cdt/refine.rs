//! Ruppert-style sizing and quality refinement: circumcenters of oversized or
//! skinny triangles are inserted; circumcenters that would encroach a
//! constrained segment split the segment at its midpoint instead (when
//! splitting is allowed).

use super::{Cdt, InteriorInsert};
use crate::error::{Error, Result};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct RefineOptions {
    /// Allow encroached constrained segments to be split at midpoints. The
    /// slab pipeline disables this so boundary loops survive verbatim.
    pub allow_segment_split: bool,
    /// Quality threshold; 20 degrees sits below Ruppert's 20.7 degree limit.
    pub min_angle_deg: f64,
    /// Non-termination guard.
    pub max_insertions: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { allow_segment_split: true, min_angle_deg: 20.0, max_insertions: 10_000_000 }
    }
}

fn circumcenter(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Option<[f64; 2]> {
    let ex = b[0] - a[0];
    let ey = b[1] - a[1];
    let fx = c[0] - a[0];
    let fy = c[1] - a[1];
    let e2 = ex * ex + ey * ey;
    let f2 = fx * fx + fy * fy;
    let det = 2.0 * (ex * fy - ey * fx);
    if det == 0.0 {
        return None;
    }
    let ux = a[0] + (fy * e2 - ey * f2) / det;
    let uy = a[1] + (ex * f2 - fx * e2) / det;
    if ux.is_finite() && uy.is_finite() {
        Some([ux, uy])
    } else {
        None
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

struct Badness {
    bad: bool,
}

fn assess(cdt: &Cdt, t: u32, cos_threshold: f64) -> Badness {
    let v = cdt.tri_vertices(t);
    let p = [cdt.point(v[0]), cdt.point(v[1]), cdt.point(v[2])];
    // Edge opposite vertex i.
    let l = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
    let longest = l[0].max(l[1]).max(l[2]);
    let centroid = [
        (p[0][0] + p[1][0] + p[2][0]) / 3.0,
        (p[0][1] + p[1][1] + p[2][1]) / 3.0,
    ];
    if longest > cdt.local_h(centroid) {
        return Badness { bad: true };
    }
    // Smallest angle has the largest cosine.
    let mut max_cos = -1.0f64;
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        let denom = 2.0 * l[j] * l[k];
        if denom == 0.0 {
            return Badness { bad: true };
        }
        let cos_i = (l[j] * l[j] + l[k] * l[k] - l[i] * l[i]) / denom;
        max_cos = max_cos.max(cos_i);
    }
    Badness { bad: max_cos > cos_threshold }
}

/// True if `x` lies strictly inside the diametral circle of (a, b).
fn encroaches(a: [f64; 2], b: [f64; 2], x: [f64; 2]) -> bool {
    (a[0] - x[0]) * (b[0] - x[0]) + (a[1] - x[1]) * (b[1] - x[1]) < 0.0
}

pub(crate) fn refine(cdt: &mut Cdt, opts: &RefineOptions) -> Result<()> {
    if !cdt.classified {
        return Err(Error::Refinement("refine called before classification".into()));
    }
    let cos_threshold = opts.min_angle_deg.to_radians().cos();
    let mut insertions = 0usize;
    let mut queue: VecDeque<u32> = VecDeque::new();

    if opts.allow_segment_split {
        condition_segments(cdt, &mut insertions, opts, &mut queue)?;
    }

    for t in cdt.live_domain_tris() {
        queue.push_back(t);
    }

    while let Some(t) = queue.pop_front() {
        if !cdt.is_live_domain(t) {
            continue;
        }
        if !assess(cdt, t, cos_threshold).bad {
            continue;
        }
        let v = cdt.tri_vertices(t);
        let cc = match circumcenter(cdt.point(v[0]), cdt.point(v[1]), cdt.point(v[2])) {
            Some(cc) => cc,
            None => continue,
        };
        match cdt.try_insert_interior(cc, t)? {
            InteriorInsert::Inserted(created) => {
                insertions += 1;
                for c in created {
                    queue.push_back(c);
                }
            }
            InteriorInsert::Blocked(a, b) | InteriorInsert::Encroaches(a, b) => {
                if opts.allow_segment_split {
                    let (_, created) = cdt.split_constrained_edge(a, b)?;
                    insertions += 1;
                    for c in created {
                        queue.push_back(c);
                    }
                    queue.push_back(t);
                }
                // With splitting disabled the triangle is left as is; the
                // boundary loops are owned by the caller.
            }
            InteriorInsert::OutsideDomain | InteriorInsert::DuplicatePoint => {}
        }
        if insertions > opts.max_insertions {
            return Err(Error::Refinement(format!(
                "refinement exceeded {} insertions",
                opts.max_insertions
            )));
        }
    }
    Ok(())
}

/// Ruppert's initial conditioning: split constrained segments encroached by
/// the apex vertices of their flanking triangles.
fn condition_segments(
    cdt: &mut Cdt,
    insertions: &mut usize,
    opts: &RefineOptions,
    queue: &mut VecDeque<u32>,
) -> Result<()> {
    let mut pending: VecDeque<(u32, u32)> = {
        let mut edges: Vec<(u32, u32)> = cdt.constrained.iter().cloned().collect();
        edges.sort_unstable();
        edges.into()
    };
    while let Some((a, b)) = pending.pop_front() {
        if !cdt.constrained.contains(&(a, b)) {
            continue;
        }
        let pa = cdt.point(a);
        let pb = cdt.point(b);
        let mut encroached = false;
        // Apexes of the flanking triangles witness encroachment.
        if let Some(t) = cdt.fan_find(a, |tri| tri.v.contains(&b)) {
            let mut check_apex = |tid: u32| {
                if !cdt.is_live_domain(tid) {
                    return;
                }
                let v = cdt.tri_vertices(tid);
                if let Some(&apex) = v.iter().find(|&&x| x != a && x != b) {
                    if encroaches(pa, pb, cdt.point(apex)) {
                        encroached = true;
                    }
                }
            };
            check_apex(t);
            let nb = neighbor_across(cdt, t, a, b);
            if nb != u32::MAX {
                check_apex(nb);
            }
        }
        if encroached {
            let (_, created) = cdt.split_constrained_edge(a, b)?;
            *insertions += 1;
            if *insertions > opts.max_insertions {
                return Err(Error::Refinement("segment conditioning diverged".into()));
            }
            for c in created {
                queue.push_back(c);
            }
            let m = cdt.pts.len() as u32 - 1;
            pending.push_back(super::key(a, m));
            pending.push_back(super::key(m, b));
        }
    }
    Ok(())
}

fn neighbor_across(cdt: &Cdt, t: u32, a: u32, b: u32) -> u32 {
    let tri = &cdt.tris[t as usize];
    for i in 0..3 {
        let ea = tri.v[(i + 1) % 3];
        let eb = tri.v[(i + 2) % 3];
        if (ea == a && eb == b) || (ea == b && eb == a) {
            return tri.n[i];
        }
    }
    u32::MAX
}
