//! Brute-force reference answers for nesting queries.
//!
//! Everything here works directly on the loop polygons with exact integer
//! ray casting and ignores the precomputed forest, parents, and cell maps, so
//! it can serve as an independent check of the scanline machinery. The cost
//! is a full pass over every loop per query; keep disks small.

use super::{Loop, LoopConfiguration};
use crate::lattice::GeometryKind;

impl GeometryKind {
    /// Scaled integer coordinates of a cell center, in the polygon vertex
    /// system.
    pub fn cell_to_scaled(self, cell: (i32, i32)) -> [i32; 2] {
        match self {
            GeometryKind::TriangularSite => [2 * cell.0 + cell.1, 3 * cell.1],
            GeometryKind::SquareFk => [4 * cell.0, 4 * cell.1],
        }
    }
}

/// Exact point-in-polygon test in scaled integer coordinates. Cell centers
/// are never incident to polygon edges in either geometry, so the half-open
/// crossing rule below is unambiguous for them.
pub fn contains_scaled(lp: &Loop, p: [i32; 2]) -> bool {
    let (px, py) = (i64::from(p[0]), i64::from(p[1]));
    let v = &lp.vertices;
    let mut inside = false;
    for k in 0..v.len() {
        let a = v[k];
        let b = v[(k + 1) % v.len()];
        let (ax, ay) = (i64::from(a[0]), i64::from(a[1]));
        let (bx, by) = (i64::from(b[0]), i64::from(b[1]));
        if (ay > py) != (by > py) {
            // The edge crosses the horizontal through p; it lies strictly
            // right of p iff num/(by-ay) > 0.
            let num = (ax - px) * (by - ay) + (bx - ax) * (py - ay);
            if (by > ay && num > 0) || (by < ay && num < 0) {
                inside = !inside;
            }
        }
    }
    inside
}

/// Number of loops whose interior contains the cell center.
pub fn depth_at(cfg: &LoopConfiguration, cell: (i32, i32)) -> u32 {
    let p = cfg.geometry().cell_to_scaled(cell);
    cfg.loops.iter().filter(|l| contains_scaled(l, p)).count() as u32
}

/// Loops containing the cell center, outermost (largest area) first.
pub fn chain_at(cfg: &LoopConfiguration, cell: (i32, i32)) -> Vec<u32> {
    let p = cfg.geometry().cell_to_scaled(cell);
    let mut chain: Vec<(i64, u32)> = cfg
        .loops
        .iter()
        .enumerate()
        .filter(|(_, l)| contains_scaled(l, p))
        .map(|(i, l)| (-l.signed_area2().abs(), i as u32))
        .collect();
    chain.sort_unstable();
    chain.into_iter().map(|(_, i)| i).collect()
}

/// Number of loops surrounding both cell centers.
pub fn co_nesting_at(cfg: &LoopConfiguration, a: (i32, i32), b: (i32, i32)) -> u32 {
    let pa = cfg.geometry().cell_to_scaled(a);
    let pb = cfg.geometry().cell_to_scaled(b);
    cfg.loops
        .iter()
        .filter(|l| contains_scaled(l, pa) && contains_scaled(l, pb))
        .count() as u32
}

/// All disk cells whose centers lie within `radius` lattice units of the
/// point (zx, zy), given in lattice units.
pub fn cells_within(
    cfg: &LoopConfiguration,
    zx: f64,
    zy: f64,
    radius: f64,
) -> Vec<(i32, i32)> {
    let geometry = cfg.geometry();
    let r2 = radius * radius;
    cfg.grid()
        .iter_cells()
        .filter_map(|(a, b, _)| {
            let (cx, cy) = geometry.cell_to_lattice((a, b));
            let (dx, dy) = (cx - zx, cy - zy);
            (dx * dx + dy * dy <= r2).then_some((a, b))
        })
        .collect()
}

/// Number of loops surrounding the whole lattice ball around (zx, zy): the
/// loops containing every disk-cell center within `radius` of the point and
/// the host cell center itself.
pub fn ball_count_at(cfg: &LoopConfiguration, zx: f64, zy: f64, radius: f64) -> u32 {
    let geometry = cfg.geometry();
    let host = geometry.cell_at(zx, zy);
    let mut cells = cells_within(cfg, zx, zy, radius);
    if !cells.contains(&host) {
        cells.push(host);
    }
    let points: Vec<[i32; 2]> = cells.iter().map(|&c| geometry.cell_to_scaled(c)).collect();
    cfg.loops
        .iter()
        .filter(|l| points.iter().all(|&p| contains_scaled(l, p)))
        .count() as u32
}

/// First indices (1-based, along the chain from outermost inward) of a loop
/// meeting the closed ball of `radius` around (zx, zy), and of a loop
/// contained in it. Either is absent when no chain loop qualifies.
pub fn hitting_indices_at(
    cfg: &LoopConfiguration,
    zx: f64,
    zy: f64,
    radius: f64,
) -> (Option<u32>, Option<u32>) {
    let geometry = cfg.geometry();
    let host = geometry.cell_at(zx, zy);
    let chain = chain_at(cfg, host);
    let r2 = radius * radius;
    let mut j_meet = None;
    let mut j_inside = None;
    for (k, &l) in chain.iter().enumerate() {
        let lp = &cfg.loops[l as usize];
        if j_meet.is_none() && lp.min_dist2(geometry, zx, zy) <= r2 {
            j_meet = Some(k as u32 + 1);
        }
        if j_inside.is_none() && lp.max_dist2(geometry, zx, zy) <= r2 {
            j_inside = Some(k as u32 + 1);
        }
        if j_meet.is_some() && j_inside.is_some() {
            break;
        }
    }
    (j_meet, j_inside)
}
