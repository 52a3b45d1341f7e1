//! Planar constrained Delaunay triangulation with hole removal and
//! sizing-driven refinement.
//!
//! Construction is incremental Bowyer-Watson insertion inside a super
//! triangle, followed by segment recovery through cavity retriangulation of
//! the two pseudo-polygons flanking each missing segment, then flood-fill
//! removal of the outside region and of hole-seeded regions.

pub mod predicates;
mod refine;

pub use refine::RefineOptions;

use crate::error::{Error, Result};
use predicates::{incircle, orient2d};
use std::collections::{BTreeMap, HashMap, HashSet};

const NONE: u32 = u32::MAX;

/// Input to the triangulator: points, constrained segments forming closed
/// loops, hole seeds, and a per-region-tag sizing map.
#[derive(Debug, Clone, Default)]
pub struct PlanarInput {
    pub points: Vec<[f64; 2]>,
    pub segments: Vec<[usize; 2]>,
    /// Region tag per segment, indexing into `sizing`.
    pub segment_tags: Vec<usize>,
    pub holes: Vec<[f64; 2]>,
    /// Target edge length per region tag.
    pub sizing: BTreeMap<usize, f64>,
}

impl PlanarInput {
    /// Plain-text dump, one entity per line, for reproducing failures.
    pub fn to_debug_string(&self) -> String {
        let mut s = String::from("planar-input 1\n");
        for p in &self.points {
            s.push_str(&format!("point {:.17e} {:.17e}\n", p[0], p[1]));
        }
        for (seg, tag) in self.segments.iter().zip(&self.segment_tags) {
            s.push_str(&format!("segment {} {} {}\n", seg[0], seg[1], tag));
        }
        for h in &self.holes {
            s.push_str(&format!("hole {:.17e} {:.17e}\n", h[0], h[1]));
        }
        for (tag, h) in &self.sizing {
            s.push_str(&format!("sizing {} {:.17e}\n", tag, h));
        }
        s
    }

    pub fn from_debug_string(text: &str) -> Result<Self> {
        let mut input = PlanarInput::default();
        for (ln, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            let head = match it.next() {
                Some(h) => h,
                None => continue,
            };
            let parse = |tok: Option<&str>| -> Result<f64> {
                tok.ok_or_else(|| Error::Parse { line: ln + 1, msg: "missing field".into() })?
                    .parse()
                    .map_err(|e| Error::Parse { line: ln + 1, msg: format!("{e}") })
            };
            match head {
                "planar-input" => {}
                "point" => input.points.push([parse(it.next())?, parse(it.next())?]),
                "segment" => {
                    input.segments.push([parse(it.next())? as usize, parse(it.next())? as usize]);
                    input.segment_tags.push(parse(it.next())? as usize);
                }
                "hole" => input.holes.push([parse(it.next())?, parse(it.next())?]),
                "sizing" => {
                    input.sizing.insert(parse(it.next())? as usize, parse(it.next())?);
                }
                other => {
                    return Err(Error::Parse {
                        line: ln + 1,
                        msg: format!("unknown record '{other}'"),
                    })
                }
            }
        }
        Ok(input)
    }
}

/// Triangulation result in input-point indexing (inserted points appended).
#[derive(Debug, Clone)]
pub struct PlanarMesh {
    pub points: Vec<[f64; 2]>,
    /// Counterclockwise triangles.
    pub triangles: Vec<[usize; 3]>,
    /// Region tag for points on constrained loops, None for free/interior.
    pub point_tag: Vec<Option<usize>>,
    pub constrained_edges: Vec<[usize; 2]>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [u32; 3],
    /// Neighbor across the edge opposite vertex i, or NONE.
    n: [u32; 3],
}

/// Uniform bucket grid over segments, used for sizing-field distance queries
/// and segment intersection validation.
pub(crate) struct SegGrid {
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
    segs: Vec<([f64; 2], [f64; 2], usize)>,
}

fn seg_point_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

impl SegGrid {
    fn build(points: &[[f64; 2]], segments: &[[usize; 2]], tags: &[usize]) -> Option<Self> {
        if segments.is_empty() {
            return None;
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-300);
        let cell = extent / 64.0;
        let nx = ((hi[0] - lo[0]) / cell).ceil() as usize + 1;
        let ny = ((hi[1] - lo[1]) / cell).ceil() as usize + 1;
        let mut grid = SegGrid {
            origin: lo,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
            segs: segments
                .iter()
                .zip(tags)
                .map(|(s, &t)| (points[s[0]], points[s[1]], t))
                .collect(),
        };
        for (si, (a, b, _)) in grid.segs.iter().enumerate() {
            let (c0, c1) = grid.cell_range(a, b);
            for cy in c0[1]..=c1[1] {
                for cx in c0[0]..=c1[0] {
                    grid.buckets[cy * grid.nx + cx].push(si as u32);
                }
            }
        }
        Some(grid)
    }

    fn cell_of(&self, p: &[f64; 2]) -> [usize; 2] {
        let cx = (((p[0] - self.origin[0]) / self.cell).floor() as isize).clamp(0, self.nx as isize - 1);
        let cy = (((p[1] - self.origin[1]) / self.cell).floor() as isize).clamp(0, self.ny as isize - 1);
        [cx as usize, cy as usize]
    }

    fn cell_range(&self, a: &[f64; 2], b: &[f64; 2]) -> ([usize; 2], [usize; 2]) {
        let pa = self.cell_of(a);
        let pb = self.cell_of(b);
        ([pa[0].min(pb[0]), pa[1].min(pb[1])], [pa[0].max(pb[0]), pa[1].max(pb[1])])
    }

    /// Distance from `p` to the nearest segment carrying `tag`, by expanding
    /// ring search.
    fn dist_to_tag(&self, p: [f64; 2], tag: usize) -> f64 {
        let c = self.cell_of(&p);
        let mut best = f64::INFINITY;
        let max_r = self.nx.max(self.ny);
        for r in 0..=max_r {
            if best.is_finite() && best <= (r as f64 - 1.0) * self.cell {
                break;
            }
            let x0 = c[0].saturating_sub(r);
            let x1 = (c[0] + r).min(self.nx - 1);
            let y0 = c[1].saturating_sub(r);
            let y1 = (c[1] + r).min(self.ny - 1);
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    let on_ring = cx == x0 || cx == x1 || cy == y0 || cy == y1;
                    if r > 0 && !on_ring {
                        continue;
                    }
                    for &si in &self.buckets[cy * self.nx + cx] {
                        let (a, b, t) = self.segs[si as usize];
                        if t == tag {
                            best = best.min(seg_point_dist(p, a, b));
                        }
                    }
                }
            }
        }
        best
    }
}

/// Constrained Delaunay triangulation with mutable refinement state.
pub struct Cdt {
    pts: Vec<[f64; 2]>,
    point_tag: Vec<Option<usize>>,
    tris: Vec<Tri>,
    alive: Vec<bool>,
    domain: Vec<bool>,
    free: Vec<u32>,
    vert_tri: Vec<u32>,
    constrained: HashSet<(u32, u32)>,
    /// Constrained edge -> owning input segment.
    owner: HashMap<(u32, u32), u32>,
    /// Current sub-segment chain per input segment.
    seg_chains: Vec<Vec<[u32; 2]>>,
    sizing: BTreeMap<usize, f64>,
    grid: Option<SegGrid>,
    warnings: Vec<String>,
    last: u32,
    stamp: Vec<u32>,
    cur_stamp: u32,
    diameter: f64,
    classified: bool,
    holes: Vec<[f64; 2]>,
}

fn key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Builds the constrained Delaunay triangulation of the input: all input
/// segments appear as edges, hole regions and the outside are removed, and
/// every non-constrained interior edge satisfies the empty-circumcircle
/// property.
pub fn triangulate_constrained(input: &PlanarInput) -> Result<Cdt> {
    Cdt::new(input)
}

/// Ruppert-style refinement toward the input sizing map; see
/// [`RefineOptions`].
pub fn refine_to_sizing(cdt: &mut Cdt, opts: &RefineOptions) -> Result<()> {
    refine::refine(cdt, opts)
}

impl Cdt {
    fn new(input: &PlanarInput) -> Result<Self> {
        if input.points.len() < 3 {
            return Err(Error::invalid_input("triangulation needs at least 3 points"));
        }
        if input.segments.len() != input.segment_tags.len() {
            return Err(Error::invalid_input("segment_tags length must match segments"));
        }
        for (h, _) in input.sizing.iter() {
            let _ = h;
        }
        for p in &input.points {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::invalid_input("non-finite input point"));
            }
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &input.points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-300);
        let diameter = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt().max(1e-300);

        // Deduplicate points closer than 1e-12 (absolute, desk-scale inputs).
        let mut warnings = Vec::new();
        let mut canon: Vec<usize> = Vec::with_capacity(input.points.len());
        let mut kept: Vec<[f64; 2]> = Vec::new();
        let mut kept_of_input: Vec<usize> = Vec::new();
        {
            let merge_tol = 1e-12;
            let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
            for (i, p) in input.points.iter().enumerate() {
                let kx = (p[0] / merge_tol).floor() as i64;
                let ky = (p[1] / merge_tol).floor() as i64;
                let mut found = None;
                'scan: for dx in -1..=1 {
                    for dy in -1..=1 {
                        if let Some(bucket) = grid.get(&(kx + dx, ky + dy)) {
                            for &j in bucket {
                                let q = kept[j];
                                if (p[0] - q[0]).hypot(p[1] - q[1]) <= merge_tol {
                                    found = Some(j);
                                    break 'scan;
                                }
                            }
                        }
                    }
                }
                match found {
                    Some(j) => {
                        warnings.push(format!("input point {i} merged with earlier duplicate"));
                        canon.push(j);
                    }
                    None => {
                        let j = kept.len();
                        kept.push(*p);
                        kept_of_input.push(i);
                        grid.entry((kx, ky)).or_default().push(j);
                        canon.push(j);
                    }
                }
            }
        }

        // Remap segments to deduplicated indices and validate loop structure.
        let mut segments: Vec<[usize; 2]> = Vec::with_capacity(input.segments.len());
        for (si, seg) in input.segments.iter().enumerate() {
            if seg[0] >= input.points.len() || seg[1] >= input.points.len() {
                return Err(Error::invalid_input(format!("segment {si} index out of range")));
            }
            let a = canon[seg[0]];
            let b = canon[seg[1]];
            if a == b {
                return Err(Error::invalid_input(format!("segment {si} is degenerate")));
            }
            segments.push([a, b]);
        }
        if !segments.is_empty() {
            let mut degree: HashMap<usize, usize> = HashMap::new();
            for seg in &segments {
                *degree.entry(seg[0]).or_insert(0) += 1;
                *degree.entry(seg[1]).or_insert(0) += 1;
            }
            for (v, d) in degree {
                if d != 2 {
                    return Err(Error::invalid_input(format!(
                        "constraint vertex {v} has degree {d}; segments must form closed loops"
                    )));
                }
            }
        }
        let grid = SegGrid::build(&kept, &segments, &input.segment_tags);
        if let Some(g) = &grid {
            validate_no_intersections(g, &segments, &kept)?;
        }

        // Super triangle enclosing everything by a wide margin.
        let cx = 0.5 * (lo[0] + hi[0]);
        let cy = 0.5 * (lo[1] + hi[1]);
        let k = 64.0 * extent;
        let sv = [[cx - k, cy - 0.7 * k], [cx + k, cy - 0.7 * k], [cx, cy + k]];

        let mut cdt = Cdt {
            pts: Vec::with_capacity(kept.len() + 3),
            point_tag: Vec::with_capacity(kept.len() + 3),
            tris: Vec::with_capacity(2 * kept.len() + 16),
            alive: Vec::new(),
            domain: Vec::new(),
            free: Vec::new(),
            vert_tri: Vec::new(),
            constrained: HashSet::new(),
            owner: HashMap::new(),
            seg_chains: vec![Vec::new(); segments.len()],
            sizing: input.sizing.clone(),
            grid,
            warnings,
            last: 0,
            stamp: Vec::new(),
            cur_stamp: 0,
            diameter,
            classified: false,
            holes: input.holes.clone(),
        };
        for p in sv {
            cdt.pts.push(p);
            cdt.point_tag.push(None);
            cdt.vert_tri.push(0);
        }
        cdt.push_tri([0, 1, 2], [NONE, NONE, NONE]);

        // Tags for loop endpoints.
        let mut tag_of_kept: Vec<Option<usize>> = vec![None; kept.len()];
        for (seg, &tag) in segments.iter().zip(&input.segment_tags) {
            tag_of_kept[seg[0]] = Some(tag);
            tag_of_kept[seg[1]] = Some(tag);
        }

        for (j, p) in kept.iter().enumerate() {
            let hint = cdt.last;
            let vid = cdt.insert_point(*p, tag_of_kept[j], hint)?;
            debug_assert_eq!(vid as usize, j + 3);
        }

        for (si, seg) in segments.iter().enumerate() {
            let a = (seg[0] + 3) as u32;
            let b = (seg[1] + 3) as u32;
            cdt.recover_segment(a, b, si as u32)?;
        }
        let _ = kept_of_input;
        cdt.classify()?;
        Ok(cdt)
    }

    fn push_tri(&mut self, v: [u32; 3], n: [u32; 3]) -> u32 {
        let id = match self.free.pop() {
            Some(id) => {
                self.tris[id as usize] = Tri { v, n };
                self.alive[id as usize] = true;
                self.domain[id as usize] = true;
                id
            }
            None => {
                self.tris.push(Tri { v, n });
                self.alive.push(true);
                self.domain.push(true);
                self.stamp.push(0);
                (self.tris.len() - 1) as u32
            }
        };
        for &vv in &v {
            self.vert_tri[vv as usize] = id;
        }
        id
    }

    fn kill_tri(&mut self, t: u32) {
        self.alive[t as usize] = false;
        self.free.push(t);
    }

    pub(crate) fn point(&self, v: u32) -> [f64; 2] {
        self.pts[v as usize]
    }

    pub(crate) fn is_constrained(&self, a: u32, b: u32) -> bool {
        self.constrained.contains(&key(a, b))
    }

    /// Walks from `hint` to the triangle containing `p`. When
    /// `block_constrained` is set, refuses to cross constrained edges and
    /// reports the blocking edge instead.
    fn locate(&self, p: [f64; 2], hint: u32, block_constrained: bool) -> Result<LocateResult> {
        let mut t = if (hint as usize) < self.tris.len() && self.alive[hint as usize] {
            hint
        } else {
            match self.alive.iter().position(|&a| a) {
                Some(i) => i as u32,
                None => return Err(Error::Refinement("triangulation has no live triangles".into())),
            }
        };
        let mut from = NONE;
        let max_steps = 4 * self.tris.len() + 64;
        for _ in 0..max_steps {
            let tri = self.tris[t as usize];
            let mut moved = false;
            for i in 0..3 {
                let nb = tri.n[i];
                if nb == from && from != NONE {
                    continue;
                }
                let a = tri.v[(i + 1) % 3];
                let b = tri.v[(i + 2) % 3];
                if orient2d(self.point(a), self.point(b), p) < 0.0 {
                    if block_constrained && self.is_constrained(a, b) {
                        return Ok(LocateResult::Blocked(a, b));
                    }
                    if nb == NONE {
                        return Err(Error::Refinement("point located outside the hull".into()));
                    }
                    from = t;
                    t = nb;
                    moved = true;
                    break;
                }
            }
            if !moved {
                return Ok(LocateResult::InTriangle(t));
            }
        }
        Err(Error::Refinement("point location did not terminate".into()))
    }

    /// Grows the Bowyer-Watson cavity of `p` from the containing triangle,
    /// never crossing constrained edges. Returns cavity triangle ids.
    fn grow_cavity(&mut self, p: [f64; 2], t0: u32) -> Vec<u32> {
        self.cur_stamp += 1;
        let stamp = self.cur_stamp;
        let mut cavity = vec![t0];
        self.stamp[t0 as usize] = stamp;
        let mut head = 0;
        while head < cavity.len() {
            let t = cavity[head];
            head += 1;
            let tri = self.tris[t as usize];
            for i in 0..3 {
                let nb = tri.n[i];
                if nb == NONE || self.stamp[nb as usize] == stamp {
                    continue;
                }
                let a = tri.v[(i + 1) % 3];
                let b = tri.v[(i + 2) % 3];
                if self.is_constrained(a, b) {
                    continue;
                }
                let nv = self.tris[nb as usize].v;
                if incircle(self.point(nv[0]), self.point(nv[1]), self.point(nv[2]), p) > 0.0 {
                    self.stamp[nb as usize] = stamp;
                    cavity.push(nb);
                }
            }
        }
        cavity
    }

    /// Replaces the cavity with a fan around the new point. Returns the new
    /// vertex id and the ids of the new triangles.
    fn fill_cavity(
        &mut self,
        p: [f64; 2],
        tag: Option<usize>,
        cavity: &[u32],
    ) -> (u32, Vec<u32>) {
        let stamp = self.cur_stamp;
        // Boundary edges (a, b, outer, outer_slot), directed with the cavity
        // on the left.
        let mut boundary: Vec<(u32, u32, u32, u8)> = Vec::with_capacity(cavity.len() + 2);
        for &t in cavity {
            let tri = self.tris[t as usize];
            for i in 0..3 {
                let nb = tri.n[i];
                if nb != NONE && self.stamp[nb as usize] == stamp {
                    continue;
                }
                let a = tri.v[(i + 1) % 3];
                let b = tri.v[(i + 2) % 3];
                let mut outer_slot = 0u8;
                if nb != NONE {
                    let nbt = self.tris[nb as usize];
                    for j in 0..3 {
                        if nbt.n[j] == t {
                            outer_slot = j as u8;
                        }
                    }
                }
                boundary.push((a, b, nb, outer_slot));
            }
        }
        for &t in cavity {
            self.kill_tri(t);
        }
        let v = self.pts.len() as u32;
        self.pts.push(p);
        self.point_tag.push(tag);
        self.vert_tri.push(0);

        let mut created = Vec::with_capacity(boundary.len());
        // Ring linking: map boundary vertex -> (new tri, slot) awaiting its
        // partner across the spoke edge.
        let mut ring: HashMap<u32, (u32, u8)> = HashMap::with_capacity(boundary.len());
        for &(a, b, outer, outer_slot) in &boundary {
            let id = self.push_tri([v, a, b], [outer, NONE, NONE]);
            created.push(id);
            if outer != NONE {
                self.tris[outer as usize].n[outer_slot as usize] = id;
            }
            // Spoke (v, a): shared with the tri whose boundary edge ends at a.
            match ring.remove(&a) {
                Some((other, slot)) => {
                    self.tris[id as usize].n[2] = other;
                    self.tris[other as usize].n[slot as usize] = id;
                }
                None => {
                    ring.insert(a, (id, 2));
                }
            }
            // Spoke (b, v): shared with the tri whose boundary edge starts at b.
            match ring.remove(&b) {
                Some((other, slot)) => {
                    self.tris[id as usize].n[1] = other;
                    self.tris[other as usize].n[slot as usize] = id;
                }
                None => {
                    ring.insert(b, (id, 1));
                }
            }
        }
        debug_assert!(ring.is_empty(), "cavity boundary must close");
        self.last = *created.last().unwrap();
        (v, created)
    }

    fn insert_point(&mut self, p: [f64; 2], tag: Option<usize>, hint: u32) -> Result<u32> {
        let t0 = match self.locate(p, hint, false)? {
            LocateResult::InTriangle(t) => t,
            LocateResult::Blocked(..) => unreachable!("unblocked locate"),
        };
        let cavity = self.grow_cavity(p, t0);
        let (v, _) = self.fill_cavity(p, tag, &cavity);
        Ok(v)
    }

    /// Point insertion during refinement: blocked walks and encroachment are
    /// reported to the caller instead of being applied.
    pub(crate) fn try_insert_interior(
        &mut self,
        p: [f64; 2],
        hint: u32,
    ) -> Result<InteriorInsert> {
        let t0 = match self.locate(p, hint, true)? {
            LocateResult::InTriangle(t) => t,
            LocateResult::Blocked(a, b) => return Ok(InteriorInsert::Blocked(a, b)),
        };
        if !self.domain[t0 as usize] {
            return Ok(InteriorInsert::OutsideDomain);
        }
        let cavity = self.grow_cavity(p, t0);
        // Encroachment scan over constrained edges bounding the cavity.
        for &t in &cavity {
            let tri = self.tris[t as usize];
            for i in 0..3 {
                let a = tri.v[(i + 1) % 3];
                let b = tri.v[(i + 2) % 3];
                if self.is_constrained(a, b) {
                    let pa = self.point(a);
                    let pb = self.point(b);
                    let d = (pa[0] - p[0]) * (pb[0] - p[0]) + (pa[1] - p[1]) * (pb[1] - p[1]);
                    if d < 0.0 {
                        return Ok(InteriorInsert::Encroaches(a, b));
                    }
                }
            }
        }
        // Reject inserts that would land on an existing cavity vertex.
        let guard = 1e-12 * self.diameter;
        for &t in &cavity {
            for &vv in &self.tris[t as usize].v {
                let q = self.point(vv);
                if (q[0] - p[0]).hypot(q[1] - p[1]) <= guard {
                    return Ok(InteriorInsert::DuplicatePoint);
                }
            }
        }
        let (_, created) = self.fill_cavity(p, None, &cavity);
        Ok(InteriorInsert::Inserted(created))
    }

    /// Splits constrained edge (a, b) at its midpoint. The midpoint inherits
    /// the owning input segment's region tag. The insertion cavity spans both
    /// sides of the edge, so the new fan triangles inherit each side's domain
    /// flag from the split edge's flanking triangles.
    pub(crate) fn split_constrained_edge(&mut self, a: u32, b: u32) -> Result<(u32, Vec<u32>)> {
        let k = key(a, b);
        let owner = *self
            .owner
            .get(&k)
            .ok_or_else(|| Error::Refinement("split of a non-constrained edge".into()))?;
        let pa = self.point(a);
        let pb = self.point(b);
        let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];

        // Domain flags of the two sides, keyed by the sign of orient2d
        // against the directed edge (a, b).
        let t1 = self
            .fan_find(a, |tri| tri.v.contains(&b))
            .ok_or_else(|| Error::Refinement("split edge has no incident triangle".into()))?;
        let apex1 = *self.tris[t1 as usize].v.iter().find(|&&v| v != a && v != b).unwrap();
        let side1 = orient2d(pa, pb, self.point(apex1));
        let domain1 = self.domain[t1 as usize];
        let t2 = {
            let tri = &self.tris[t1 as usize];
            let mut nb = NONE;
            for i in 0..3 {
                let ea = tri.v[(i + 1) % 3];
                let eb = tri.v[(i + 2) % 3];
                if (ea == a && eb == b) || (ea == b && eb == a) {
                    nb = tri.n[i];
                }
            }
            nb
        };
        let domain2 = if t2 != NONE { self.domain[t2 as usize] } else { domain1 };

        self.constrained.remove(&k);
        self.owner.remove(&k);
        let t0 = match self.locate(mid, t1, false)? {
            LocateResult::InTriangle(t) => t,
            LocateResult::Blocked(..) => unreachable!(),
        };
        let cavity = self.grow_cavity(mid, t0);
        let tag = self.point_tag[a as usize].or(self.point_tag[b as usize]);
        let (m, created) = self.fill_cavity(mid, tag, &cavity);
        for &t in &created {
            let tri = self.tris[t as usize];
            let mut flag = domain1;
            for &v in &tri.v {
                if v == m || v == a || v == b {
                    continue;
                }
                let o = orient2d(pa, pb, self.point(v));
                if o != 0.0 {
                    flag = if (o > 0.0) == (side1 > 0.0) { domain1 } else { domain2 };
                    break;
                }
            }
            self.domain[t as usize] = flag;
        }
        for pair in [key(a, m), key(m, b)] {
            self.constrained.insert(pair);
            self.owner.insert(pair, owner);
        }
        let chain = &mut self.seg_chains[owner as usize];
        if let Some(pos) = chain.iter().position(|e| key(e[0], e[1]) == k) {
            chain.splice(pos..=pos, [[a, m], [m, b]]);
        }
        Ok((m, created))
    }

    /// True if (a, b) is an edge of some live triangle.
    fn edge_exists(&self, a: u32, b: u32) -> bool {
        self.fan_find(a, |tri| tri.v.contains(&b)).is_some()
    }

    /// Rotates around vertex `a` until `pred` matches a fan triangle.
    fn fan_find(&self, a: u32, pred: impl Fn(&Tri) -> bool) -> Option<u32> {
        let start = self.vert_tri[a as usize];
        let mut t = start;
        let mut steps = 0;
        loop {
            let tri = &self.tris[t as usize];
            if pred(tri) {
                return Some(t);
            }
            let k = tri.v.iter().position(|&v| v == a).expect("fan anchor");
            let next = tri.n[(k + 1) % 3];
            if next == NONE {
                return None;
            }
            t = next;
            steps += 1;
            if t == start || steps > self.tris.len() {
                return None;
            }
        }
    }

    /// Makes segment (a, b) an edge via cavity retriangulation of the two
    /// pseudo-polygons flanking it, then marks it constrained.
    fn recover_segment(&mut self, a: u32, b: u32, seg_index: u32) -> Result<()> {
        if !self.edge_exists(a, b) {
            self.carve_segment(a, b)?;
        }
        let k = key(a, b);
        self.constrained.insert(k);
        self.owner.insert(k, seg_index);
        self.seg_chains[seg_index as usize] = vec![[a, b]];
        Ok(())
    }

    fn carve_segment(&mut self, a: u32, b: u32) -> Result<()> {
        let pa = self.point(a);
        let pb = self.point(b);
        // Starting triangle: fan of a whose opposite edge properly crosses.
        let start = self
            .fan_find(a, |tri| {
                let k = tri.v.iter().position(|&v| v == a).unwrap();
                let u = tri.v[(k + 1) % 3];
                let w = tri.v[(k + 2) % 3];
                orient2d(pa, pb, self.point(u)) > 0.0
                    && orient2d(pa, pb, self.point(w)) < 0.0
                    && orient2d(self.point(u), self.point(w), pa) > 0.0
                    && orient2d(self.point(u), self.point(w), pb) < 0.0
            })
            .ok_or_else(|| {
                Error::invalid_input(format!(
                    "segment recovery failed: a constraint vertex lies on segment ({a}, {b})"
                ))
            })?;

        let tri = self.tris[start as usize];
        let kpos = tri.v.iter().position(|&v| v == a).unwrap();
        let mut upper = vec![tri.v[(kpos + 1) % 3]];
        let mut lower = vec![tri.v[(kpos + 2) % 3]];
        let mut cavity = vec![start];
        let (mut u, mut w) = (upper[0], lower[0]);
        let mut cur = start;
        loop {
            if self.is_constrained(u, w) {
                return Err(Error::invalid_input(format!(
                    "segment ({a}, {b}) crosses constrained edge ({u}, {w})"
                )));
            }
            let tri = self.tris[cur as usize];
            let slot = (0..3)
                .find(|&i| {
                    let ea = tri.v[(i + 1) % 3];
                    let eb = tri.v[(i + 2) % 3];
                    (ea == u && eb == w) || (ea == w && eb == u)
                })
                .expect("crossing edge in current triangle");
            let next = tri.n[slot];
            debug_assert_ne!(next, NONE);
            cavity.push(next);
            let ntri = self.tris[next as usize];
            let x = *ntri.v.iter().find(|&&v| v != u && v != w).unwrap();
            if x == b {
                break;
            }
            let side = orient2d(pa, pb, self.point(x));
            if side > 0.0 {
                upper.push(x);
                u = x;
            } else if side < 0.0 {
                lower.push(x);
                w = x;
            } else {
                return Err(Error::invalid_input(format!(
                    "vertex {x} lies exactly on constraint segment ({a}, {b})"
                )));
            }
            cur = next;
        }

        // Cavity boundary edges with their outer neighbors, keyed by sorted
        // endpoint pair.
        self.cur_stamp += 1;
        let stamp = self.cur_stamp;
        for &t in &cavity {
            self.stamp[t as usize] = stamp;
        }
        let mut border: HashMap<(u32, u32), (u32, u8)> = HashMap::new();
        for &t in &cavity {
            let tri = self.tris[t as usize];
            for i in 0..3 {
                let nb = tri.n[i];
                if nb != NONE && self.stamp[nb as usize] == stamp {
                    continue;
                }
                let ea = tri.v[(i + 1) % 3];
                let eb = tri.v[(i + 2) % 3];
                let mut outer_slot = 0u8;
                if nb != NONE {
                    let nbt = self.tris[nb as usize];
                    for j in 0..3 {
                        if nbt.n[j] == t {
                            outer_slot = j as u8;
                        }
                    }
                }
                border.insert(key(ea, eb), (nb, outer_slot));
            }
        }
        for &t in &cavity {
            self.kill_tri(t);
        }

        let mut new_tris: Vec<u32> = Vec::new();
        self.fill_pseudo_polygon(a, b, &upper, &mut new_tris);
        let lower_rev: Vec<u32> = lower.iter().rev().cloned().collect();
        self.fill_pseudo_polygon(b, a, &lower_rev, &mut new_tris);

        // Stitch all new triangles to each other and to the border.
        let mut open: HashMap<(u32, u32), (u32, u8)> = HashMap::new();
        for &t in &new_tris {
            let tri = self.tris[t as usize];
            for i in 0..3 {
                let ea = tri.v[(i + 1) % 3];
                let eb = tri.v[(i + 2) % 3];
                let kk = key(ea, eb);
                if let Some(&(outer, outer_slot)) = border.get(&kk) {
                    self.tris[t as usize].n[i] = outer;
                    if outer != NONE {
                        self.tris[outer as usize].n[outer_slot as usize] = t;
                    }
                } else if let Some((other, oslot)) = open.remove(&kk) {
                    self.tris[t as usize].n[i] = other;
                    self.tris[other as usize].n[oslot as usize] = t;
                } else {
                    open.insert(kk, (t, i as u8));
                }
            }
        }
        debug_assert!(open.is_empty(), "pseudo-polygon stitching left open edges");
        self.last = *new_tris.last().unwrap();
        Ok(())
    }

    /// Triangulates the pseudo-polygon above directed edge (from -> to) whose
    /// intermediate chain vertices all lie strictly left of it.
    fn fill_pseudo_polygon(&mut self, from: u32, to: u32, chain: &[u32], out: &mut Vec<u32>) {
        if chain.is_empty() {
            return;
        }
        let mut c_idx = 0;
        for j in 1..chain.len() {
            let cc = self.point(chain[c_idx]);
            if incircle(self.point(from), self.point(to), cc, self.point(chain[j])) > 0.0 {
                c_idx = j;
            }
        }
        let c = chain[c_idx];
        self.fill_pseudo_polygon(from, c, &chain[..c_idx], out);
        self.fill_pseudo_polygon(c, to, &chain[c_idx + 1..], out);
        let id = self.push_tri([from, to, c], [NONE, NONE, NONE]);
        out.push(id);
    }

    /// Removes the outside region (flood fill from the super vertices) and
    /// hole regions (flood fill from each hole seed), never crossing
    /// constrained edges.
    fn classify(&mut self) -> Result<()> {
        let mut kill = vec![false; self.tris.len()];
        let mut stack: Vec<u32> = Vec::new();
        for (t, tri) in self.tris.iter().enumerate() {
            if self.alive[t] && tri.v.iter().any(|&v| v < 3) && !kill[t] {
                kill[t] = true;
                stack.push(t as u32);
            }
        }
        // Without constraints the domain is the convex hull: only triangles
        // touching the super vertices are outside, and there is nothing for a
        // flood to stop at.
        if !self.constrained.is_empty() {
            self.flood(&mut kill, &mut stack);
        }
        let holes = self.holes.clone();
        for seed in holes {
            let t0 = match self.locate(seed, self.last, false)? {
                LocateResult::InTriangle(t) => t,
                LocateResult::Blocked(..) => unreachable!(),
            };
            if !kill[t0 as usize] {
                kill[t0 as usize] = true;
                stack.push(t0);
                self.flood(&mut kill, &mut stack);
            }
        }
        for (t, k) in kill.iter().enumerate() {
            if *k && self.alive[t] {
                self.domain[t] = false;
            }
        }
        self.classified = true;
        Ok(())
    }

    fn flood(&self, kill: &mut [bool], stack: &mut Vec<u32>) {
        while let Some(t) = stack.pop() {
            let tri = self.tris[t as usize];
            for i in 0..3 {
                let nb = tri.n[i];
                if nb == NONE || kill[nb as usize] || !self.alive[nb as usize] {
                    continue;
                }
                let a = tri.v[(i + 1) % 3];
                let b = tri.v[(i + 2) % 3];
                if self.is_constrained(a, b) {
                    continue;
                }
                kill[nb as usize] = true;
                stack.push(nb);
            }
        }
    }

    pub(crate) fn live_domain_tris(&self) -> Vec<u32> {
        (0..self.tris.len() as u32)
            .filter(|&t| self.alive[t as usize] && self.domain[t as usize])
            .collect()
    }

    pub(crate) fn tri_vertices(&self, t: u32) -> [u32; 3] {
        self.tris[t as usize].v
    }

    pub(crate) fn is_live_domain(&self, t: u32) -> bool {
        (t as usize) < self.tris.len() && self.alive[t as usize] && self.domain[t as usize]
    }

    /// Local sizing target at a point: single-tag sizing is constant;
    /// multi-tag sizing interpolates by inverse distance to each tagged loop.
    pub(crate) fn local_h(&self, p: [f64; 2]) -> f64 {
        if self.sizing.is_empty() {
            return f64::INFINITY;
        }
        if self.sizing.len() == 1 {
            return *self.sizing.values().next().unwrap();
        }
        let grid = match &self.grid {
            Some(g) => g,
            None => return *self.sizing.values().next().unwrap(),
        };
        let delta = 1e-9 * self.diameter;
        let mut wsum = 0.0;
        let mut hsum = 0.0;
        for (&tag, &h) in &self.sizing {
            let d = grid.dist_to_tag(p, tag);
            if !d.is_finite() {
                continue;
            }
            let w = 1.0 / (d + delta);
            wsum += w;
            hsum += w * h;
        }
        if wsum > 0.0 {
            hsum / wsum
        } else {
            *self.sizing.values().next().unwrap()
        }
    }

    /// Maximum in-circle violation over non-constrained interior edges
    /// (test oracle; returns a signed predicate value, positive = violation).
    pub fn max_delaunay_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for t in self.live_domain_tris() {
            let tri = self.tris[t as usize];
            for i in 0..3 {
                let nb = tri.n[i];
                if nb == NONE || !self.is_live_domain(nb) {
                    continue;
                }
                let a = tri.v[(i + 1) % 3];
                let b = tri.v[(i + 2) % 3];
                if self.is_constrained(a, b) {
                    continue;
                }
                let opp = *self.tris[nb as usize]
                    .v
                    .iter()
                    .find(|&&v| v != a && v != b)
                    .unwrap();
                let val = incircle(
                    self.point(tri.v[0]),
                    self.point(tri.v[1]),
                    self.point(tri.v[2]),
                    self.point(opp),
                );
                // Normalize by the scale of the configuration.
                let scale = self.diameter.powi(4).max(1e-300);
                worst = worst.max(val / scale);
            }
        }
        worst
    }

    /// Structural invariants: live triangles are counterclockwise and
    /// adjacency is reciprocal over the shared edge (test support).
    pub fn debug_validate(&self) -> Result<()> {
        for (t, tri) in self.tris.iter().enumerate() {
            if !self.alive[t] {
                continue;
            }
            let o = orient2d(
                self.point(tri.v[0]),
                self.point(tri.v[1]),
                self.point(tri.v[2]),
            );
            if o <= 0.0 {
                return Err(Error::Refinement(format!(
                    "triangle {t} {:?} is not counterclockwise (orient {o})",
                    tri.v
                )));
            }
            for i in 0..3 {
                let nb = tri.n[i];
                if nb == NONE {
                    continue;
                }
                if !self.alive[nb as usize] {
                    return Err(Error::Refinement(format!("triangle {t} points at dead {nb}")));
                }
                let a = tri.v[(i + 1) % 3];
                let b = tri.v[(i + 2) % 3];
                let back = &self.tris[nb as usize];
                let mut reciprocal = false;
                for j in 0..3 {
                    let na = back.v[(j + 1) % 3];
                    let nbv = back.v[(j + 2) % 3];
                    if back.n[j] == t as u32 && ((na == a && nbv == b) || (na == b && nbv == a)) {
                        reciprocal = true;
                    }
                }
                if !reciprocal {
                    return Err(Error::Refinement(format!(
                        "adjacency between {t} and {nb} is not reciprocal over ({a}, {b})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Compacts the triangulation into a [`PlanarMesh`], dropping the super
    /// vertices; input points keep their (deduplicated) order.
    pub fn to_mesh(&self) -> PlanarMesh {
        let points: Vec<[f64; 2]> = self.pts[3..].to_vec();
        let point_tag: Vec<Option<usize>> = self.point_tag[3..].to_vec();
        let mut triangles = Vec::new();
        for t in self.live_domain_tris() {
            let v = self.tris[t as usize].v;
            debug_assert!(v.iter().all(|&x| x >= 3), "super vertex in domain triangle");
            triangles.push([v[0] as usize - 3, v[1] as usize - 3, v[2] as usize - 3]);
        }
        let mut constrained_edges: Vec<[usize; 2]> = self
            .constrained
            .iter()
            .map(|&(a, b)| [a as usize - 3, b as usize - 3])
            .collect();
        constrained_edges.sort_unstable();
        PlanarMesh {
            points,
            triangles,
            point_tag,
            constrained_edges,
            warnings: self.warnings.clone(),
        }
    }

    /// Current sub-segment chains per input segment, in output indexing.
    pub fn segment_chains(&self) -> Vec<Vec<[usize; 2]>> {
        self.seg_chains
            .iter()
            .map(|chain| chain.iter().map(|e| [e[0] as usize - 3, e[1] as usize - 3]).collect())
            .collect()
    }
}

pub(crate) enum LocateResult {
    InTriangle(u32),
    Blocked(u32, u32),
}

pub(crate) enum InteriorInsert {
    Inserted(Vec<u32>),
    Blocked(u32, u32),
    Encroaches(u32, u32),
    OutsideDomain,
    DuplicatePoint,
}

fn validate_no_intersections(
    grid: &SegGrid,
    segments: &[[usize; 2]],
    points: &[[f64; 2]],
) -> Result<()> {
    for (si, seg) in segments.iter().enumerate() {
        let a = points[seg[0]];
        let b = points[seg[1]];
        let (c0, c1) = grid.cell_range(&a, &b);
        let mut candidates: Vec<u32> = Vec::new();
        for cy in c0[1]..=c1[1] {
            for cx in c0[0]..=c1[0] {
                candidates.extend_from_slice(&grid.buckets[cy * grid.nx + cx]);
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        for &sj in &candidates {
            let sj = sj as usize;
            if sj <= si {
                continue;
            }
            let other = segments[sj];
            if other.contains(&seg[0]) || other.contains(&seg[1]) {
                continue;
            }
            let c = points[other[0]];
            let d = points[other[1]];
            let o1 = orient2d(a, b, c);
            let o2 = orient2d(a, b, d);
            let o3 = orient2d(c, d, a);
            let o4 = orient2d(c, d, b);
            let crosses = ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
                && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0));
            let touches = (o1 == 0.0 && between(a, b, c))
                || (o2 == 0.0 && between(a, b, d))
                || (o3 == 0.0 && between(c, d, a))
                || (o4 == 0.0 && between(c, d, b));
            if crosses || touches {
                return Err(Error::invalid_input(format!(
                    "constraint segments {si} and {sj} intersect"
                )));
            }
        }
    }
    Ok(())
}

fn between(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    let lo0 = a[0].min(b[0]);
    let hi0 = a[0].max(b[0]);
    let lo1 = a[1].min(b[1]);
    let hi1 = a[1].max(b[1]);
    p[0] >= lo0 && p[0] <= hi0 && p[1] >= lo1 && p[1] <= hi1 && (p != a && p != b)
}
