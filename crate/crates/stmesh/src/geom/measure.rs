//! Simplex measures: Heron areas for triangles, Cayley-Menger volumes for
//! tetrahedra, and mesh totals with a deterministic pairwise reduction.

use super::{Patch, SimplicialMesh, SpaceTimePoint};
use crate::error::{Error, Result};

/// Triangle area from edge lengths via Heron's formula. Valid in any
/// embedding dimension. Tiny negative radicands from rounding near
/// degenerate triangles (>= -1e-14 * s^4) clamp to zero.
pub fn heron_area<const D: usize>(
    p: &SpaceTimePoint<D>,
    q: &SpaceTimePoint<D>,
    r: &SpaceTimePoint<D>,
) -> Result<f64> {
    if !(p.is_finite() && q.is_finite() && r.is_finite()) {
        return Err(Error::invalid_input("heron_area: non-finite coordinates"));
    }
    let a = q.dist(r);
    let b = p.dist(r);
    let c = p.dist(q);
    let s = 0.5 * (a + b + c);
    let radicand = s * (s - a) * (s - b) * (s - c);
    if radicand < 0.0 {
        return Ok(0.0);
    }
    Ok(radicand.sqrt())
}

fn det5(mut m: [[f64; 5]; 5]) -> f64 {
    // Gaussian elimination with partial pivoting.
    let mut det = 1.0;
    for col in 0..5 {
        let mut piv = col;
        for row in (col + 1)..5 {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for row in (col + 1)..5 {
            let f = m[row][col] / m[col][col];
            for k in col..5 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    det
}

/// Tetrahedron volume from squared pairwise distances via the Cayley-Menger
/// determinant, sqrt(det/288). Valid in any embedding dimension. Tiny
/// negative determinants near degenerate tetrahedra clamp to zero.
pub fn cayley_menger_volume<const D: usize>(
    a: &SpaceTimePoint<D>,
    b: &SpaceTimePoint<D>,
    c: &SpaceTimePoint<D>,
    e: &SpaceTimePoint<D>,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && c.is_finite() && e.is_finite()) {
        return Err(Error::invalid_input("cayley_menger_volume: non-finite coordinates"));
    }
    let d2 = |x: &SpaceTimePoint<D>, y: &SpaceTimePoint<D>| {
        let v = x.sub(y);
        super::dot(&v, &v)
    };
    let (dab, dac, dae) = (d2(a, b), d2(a, c), d2(a, e));
    let (dbc, dbe, dce) = (d2(b, c), d2(b, e), d2(c, e));
    let theta = [
        [0.0, 1.0, 1.0, 1.0, 1.0],
        [1.0, 0.0, dab, dac, dae],
        [1.0, dab, 0.0, dbc, dbe],
        [1.0, dac, dbc, 0.0, dce],
        [1.0, dae, dbe, dce, 0.0],
    ];
    let det = det5(theta);
    if det < 0.0 {
        return Ok(0.0);
    }
    Ok((det / 288.0).sqrt())
}

/// Measure of one cell: Heron area when `D == 3`, Cayley-Menger volume when
/// `D == 4`.
pub fn cell_measure<const D: usize>(mesh: &SimplicialMesh<D>, cell: &[usize; D]) -> Result<f64> {
    match D {
        3 => heron_area(
            &mesh.vertices[cell[0]],
            &mesh.vertices[cell[1]],
            &mesh.vertices[cell[2]],
        ),
        4 => cayley_menger_volume(
            &mesh.vertices[cell[0]],
            &mesh.vertices[cell[1]],
            &mesh.vertices[cell[2]],
            &mesh.vertices[cell[3]],
        ),
        _ => Err(Error::invalid_mesh(format!("unsupported embedding dimension {D}"))),
    }
}

/// Total and per-patch measure of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub total: f64,
    pub per_patch: [(Patch, f64); 3],
    pub cell_count: usize,
    pub vertex_count: usize,
}

impl MeasureReport {
    pub fn patch(&self, p: Patch) -> f64 {
        self.per_patch.iter().find(|(q, _)| *q == p).map(|(_, m)| *m).unwrap_or(0.0)
    }
}

/// Pairwise tree reduction: the summation order is a fixed binary tree over
/// the slice, so results are bit-identical across runs and thread counts.
pub fn tree_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    let (lo, hi) = xs.split_at(mid);
    if xs.len() >= 65_536 {
        let (a, b) = rayon::join(|| tree_sum(lo), || tree_sum(hi));
        a + b
    } else {
        tree_sum(lo) + tree_sum(hi)
    }
}

/// Sums cell measures over the whole mesh with a per-patch breakdown.
pub fn total_measure<const D: usize>(mesh: &SimplicialMesh<D>) -> Result<MeasureReport> {
    let mut by_patch: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (cell, patch) in mesh.cells.iter().zip(&mesh.patch) {
        let m = cell_measure(mesh, cell)?;
        let slot = match patch {
            Patch::Initial => 0,
            Patch::Intermediate => 1,
            Patch::Terminating => 2,
        };
        by_patch[slot].push(m);
    }
    let sums = [tree_sum(&by_patch[0]), tree_sum(&by_patch[1]), tree_sum(&by_patch[2])];
    Ok(MeasureReport {
        total: sums[0] + sums[1] + sums[2],
        per_patch: [
            (Patch::Initial, sums[0]),
            (Patch::Intermediate, sums[1]),
            (Patch::Terminating, sums[2]),
        ],
        cell_count: mesh.cells.len(),
        vertex_count: mesh.vertices.len(),
    })
}
