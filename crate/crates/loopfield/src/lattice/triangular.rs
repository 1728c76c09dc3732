//! Triangular-lattice disk: site indexing, percolation sampling and interface
//! tracing on the hexagonal dual.
//!
//! Cells are triangular-lattice sites in axial coordinates (q, r) with
//! Cartesian center (q + r/2, r*sqrt(3)/2) at unit spacing. All dual-lattice
//! geometry is kept in scaled integer coordinates
//!     X = 2q + r,   Y = 3r        (cell centers),
//! under which Cartesian position is (X/2, Y*sqrt(3)/6) and the six corners of
//! the hexagonal cell around (q, r) are
//!     S  = (X,   Y-2)   SE = (X+1, Y-1)   NE = (X+1, Y+1)
//!     N  = (X,   Y+2)   NW = (X-1, Y+1)   SW = (X-1, Y-1).
//! Corner Y values are never congruent to 0 mod 3, so cell-center scanlines
//! (Y = 3r) meet loop polygons only across their vertical edges: exact integer
//! parity counting with no degenerate crossings.
//!
//! At every hexagonal vertex exactly three cells meet, so the interface edge
//! set (hexagon edges separating an open cell from a closed one) has vertex
//! degree 0 or 2 and decomposes uniquely into vertex-disjoint cycles.

use rand::Rng;

use crate::loops::Loop;

/// Neighbor offsets indexed by edge direction. Edge k of a cell (connecting
/// corner k to corner k+1 counterclockwise) faces `NEIGHBOR[k]`.
const NEIGHBOR: [(i32, i32); 6] = [(1, -1), (1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1)];

/// Corner k of the hexagon around center (X, Y), in the scaled coordinates.
fn corner(x: i32, y: i32, k: usize) -> [i32; 2] {
    match k {
        0 => [x, y - 2],
        1 => [x + 1, y - 1],
        2 => [x + 1, y + 1],
        3 => [x, y + 2],
        4 => [x - 1, y + 1],
        5 => [x - 1, y - 1],
        _ => unreachable!(),
    }
}

/// Row-indexed storage for the set of cells within a Euclidean radius of the
/// origin. Membership is exact: (2q + r)^2 + 3 r^2 <= 4 R^2.
#[derive(Debug, Clone)]
pub struct TriDisk {
    pub radius: u32,
    r_min: i32,
    /// Per row r: inclusive q range and offset into the flat cell array.
    rows: Vec<(i32, i32, usize)>,
    n_cells: usize,
}

fn isqrt(v: i64) -> i64 {
    if v < 0 {
        return -1;
    }
    let mut x = (v as f64).sqrt() as i64;
    while x * x > v {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= v {
        x += 1;
    }
    x
}

impl TriDisk {
    pub fn new(radius: u32) -> Self {
        let rr = 4 * i64::from(radius) * i64::from(radius);
        let r_max = isqrt(rr / 3) as i32;
        let mut rows = Vec::with_capacity((2 * r_max + 1) as usize);
        let mut offset = 0usize;
        for r in -r_max..=r_max {
            let m = isqrt(rr - 3 * i64::from(r) * i64::from(r)) as i32;
            // |2q + r| <= m
            let q_lo = (-m - r).div_euclid(2) + if (-m - r).rem_euclid(2) != 0 { 1 } else { 0 };
            let q_hi = (m - r).div_euclid(2);
            debug_assert!(q_lo <= q_hi);
            rows.push((q_lo, q_hi, offset));
            offset += (q_hi - q_lo + 1) as usize;
        }
        TriDisk {
            radius,
            r_min: -r_max,
            rows,
            n_cells: offset,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn contains(&self, q: i32, r: i32) -> bool {
        let rr = 4 * i64::from(self.radius) * i64::from(self.radius);
        let x = i64::from(2 * q + r);
        x * x + 3 * i64::from(r) * i64::from(r) <= rr
    }

    pub fn index(&self, q: i32, r: i32) -> Option<usize> {
        let row = (r - self.r_min) as usize;
        let &(q_lo, q_hi, offset) = self.rows.get(row)?;
        if q < q_lo || q > q_hi {
            return None;
        }
        let idx = offset + (q - q_lo) as usize;
        self.contains(q, r).then_some(idx)
    }

    /// Iterate all cells as (q, r, index), row-major.
    pub fn iter_cells(&self) -> impl Iterator<Item = (i32, i32, usize)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(i, &(q_lo, q_hi, offset))| {
            let r = self.r_min + i as i32;
            (q_lo..=q_hi).map(move |q| (q, r, offset + (q - q_lo) as usize))
        })
    }

    pub fn row_range(&self) -> (i32, i32) {
        (self.r_min, self.r_min + self.rows.len() as i32 - 1)
    }

    pub fn row_span(&self, r: i32) -> Option<(i32, i32, usize)> {
        let row = usize::try_from(r - self.r_min).ok()?;
        self.rows.get(row).copied()
    }
}

/// Open/closed site states on a triangular disk. Everything outside the disk
/// is closed.
#[derive(Debug, Clone)]
pub struct TriStates {
    pub disk: TriDisk,
    pub open: Vec<bool>,
}

impl TriStates {
    pub fn sample(radius: u32, p: f64, rng: &mut impl Rng) -> Self {
        let disk = TriDisk::new(radius);
        let open = (0..disk.n_cells()).map(|_| rng.random::<f64>() < p).collect();
        TriStates { disk, open }
    }

    #[inline]
    pub fn is_open(&self, q: i32, r: i32) -> bool {
        self.disk.index(q, r).map(|i| self.open[i]).unwrap_or(false)
    }

    pub fn open_fraction(&self) -> f64 {
        self.open.iter().filter(|&&b| b).count() as f64 / self.open.len() as f64
    }
}

/// Trace every interface loop of the configuration. Each loop is returned as
/// the cyclic corner sequence of its hexagon-edge cycle, in the direction that
/// keeps its constant-state side on the left; callers canonicalize
/// orientation afterwards. Also returns the total interface edge count.
pub fn trace_interfaces(states: &TriStates) -> (Vec<Loop>, u64) {
    // Visited flags live on a padded disk so that canonical edge owners just
    // outside the sampling disk still have storage.
    let pad = TriDisk::new(states.disk.radius + 2);
    let mut visited = vec![false; pad.n_cells() * 3];
    let mut loops = Vec::new();
    let mut edge_count = 0u64;

    // Canonical undirected form of edge k of cell (q, r): direction in 0..3.
    let canon = |q: i32, r: i32, k: usize| -> (i32, i32, usize) {
        if k < 3 {
            (q, r, k)
        } else {
            let (dq, dr) = NEIGHBOR[k];
            (q + dq, r + dr, k - 3)
        }
    };

    for (q, r, _) in pad.iter_cells() {
        for k in 0..3usize {
            let (dq, dr) = NEIGHBOR[k];
            let (nq, nr) = (q + dq, r + dr);
            let a = states.is_open(q, r);
            let b = states.is_open(nq, nr);
            if a == b {
                continue;
            }
            let vidx = pad.index(q, r).expect("pad covers all interface owners") * 3 + k;
            if visited[vidx] {
                continue;
            }
            // Walk the cycle through (q, r, k), keeping the left cell's state
            // fixed. Starting from whichever side the scan found first.
            let mut verts: Vec<[i32; 2]> = Vec::new();
            let (mut cq, mut cr, mut ck) = (q, r, k);
            loop {
                let (oq, or, ok) = canon(cq, cr, ck);
                let o_idx = pad.index(oq, or).expect("interface edges stay inside pad") * 3 + ok;
                debug_assert!(!visited[o_idx]);
                visited[o_idx] = true;
                edge_count += 1;
                verts.push(corner(2 * cq + cr, 3 * cr, ck));
                // Continue past corner ck+1. The third cell at that corner is
                // the neighbor across edge ck+1.
                let k1 = (ck + 1) % 6;
                let (dq1, dr1) = NEIGHBOR[k1];
                let (tq, tr) = (cq + dq1, cr + dr1);
                let same = states.is_open(tq, tr) == states.is_open(cq, cr);
                if same {
                    // Interface turns onto the edge between the two opposite
                    // cells; re-anchor on the third cell, which shares the
                    // left state.
                    cq = tq;
                    cr = tr;
                    ck = (ck + 5) % 6;
                } else {
                    ck = k1;
                }
                if (cq, cr, ck) == (q, r, k) {
                    break;
                }
            }
            loops.push(Loop { vertices: verts });
        }
    }
    (loops, edge_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;

    #[test]
    fn disk_sizes_are_plausible() {
        // Cell density on the unit-spacing triangular lattice is 2/sqrt(3)
        // per unit area.
        for radius in [8u32, 32, 64] {
            let disk = TriDisk::new(radius);
            let expect = std::f64::consts::PI * f64::from(radius * radius) * 2.0 / 3f64.sqrt();
            let got = disk.n_cells() as f64;
            assert!((got - expect).abs() < 8.0 * f64::from(radius), "{got} vs {expect}");
        }
    }

    #[test]
    fn index_roundtrip() {
        let disk = TriDisk::new(9);
        let mut seen = vec![false; disk.n_cells()];
        for (q, r, idx) in disk.iter_cells() {
            assert_eq!(disk.index(q, r), Some(idx));
            assert!(!seen[idx]);
            seen[idx] = true;
        }
        assert!(seen.iter().all(|&s| s));
        assert_eq!(disk.index(100, 0), None);
    }

    #[test]
    fn single_open_site_yields_one_hexagon() {
        let disk = TriDisk::new(6);
        let mut states = TriStates {
            open: vec![false; disk.n_cells()],
            disk,
        };
        let center = states.disk.index(0, 0).unwrap();
        states.open[center] = true;
        let (loops, edges) = trace_interfaces(&states);
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].vertices.len(), 6);
        assert_eq!(edges, 6);
    }

    #[test]
    fn all_closed_yields_no_loops() {
        let disk = TriDisk::new(6);
        let states = TriStates {
            open: vec![false; disk.n_cells()],
            disk,
        };
        let (loops, edges) = trace_interfaces(&states);
        assert!(loops.is_empty());
        assert_eq!(edges, 0);
    }

    #[test]
    fn interface_parity_edge_count_matches_loop_lengths() {
        let mut rng = rng_from_seed(11);
        let states = TriStates::sample(16, 0.5, &mut rng);
        let (loops, edges) = trace_interfaces(&states);
        let total: u64 = loops.iter().map(|l| l.vertices.len() as u64).sum();
        assert_eq!(total, edges);
        // Direct count of interface edges for cross-validation: each
        // unordered adjacent pair with differing states, counted once.
        let mut direct = 0u64;
        let pad = TriDisk::new(states.disk.radius + 2);
        for (q, r, _) in pad.iter_cells() {
            for k in 0..3 {
                let (dq, dr) = NEIGHBOR[k];
                if states.is_open(q, r) != states.is_open(q + dq, r + dr) {
                    direct += 1;
                }
            }
        }
        assert_eq!(direct, edges);
    }
}
