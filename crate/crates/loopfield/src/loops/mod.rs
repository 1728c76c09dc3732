//! Loop polygons and their nesting forest.
//!
//! Interface tracing hands this module a bag of closed integer polygons that
//! are pairwise vertex-disjoint and non-crossing. Canonicalization makes the
//! representation unique (counterclockwise orientation, started at the
//! lexicographically smallest vertex, loops sorted by start vertex), so two
//! runs with the same seed produce byte-identical configurations.
//!
//! The nesting forest is built with one scan per lattice row. Walking a row
//! from left to right and toggling each loop as its crossings pass keeps, at
//! every abscissa, exactly the loops whose interior contains that point; for
//! non-crossing curves the active set is totally ordered by containment and
//! behaves as a stack. Two facts make this exact on the integer lattice:
//! crossings of cell-center rows happen at isolated vertices or vertical
//! edges with odd-even parity separation from cell abscissas (no ties), and a
//! loop's parent must dip strictly below its lowest vertex, so parents always
//! sort before children.

pub mod io;
pub mod oracle;

use serde::{Deserialize, Serialize};

use crate::lattice::fk::FkDisk;
use crate::lattice::triangular::TriDisk;
use crate::lattice::{GeometryKind, LatticeSpec, SiteConfiguration};
use crate::{Error, Result};

/// A closed polygon on the scaled integer lattice of its geometry. Vertices
/// are listed in order along the curve; the edge from the last vertex back to
/// the first is implied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Loop {
    pub vertices: Vec<[i32; 2]>,
}

impl Loop {
    /// Twice the signed area (counterclockwise positive).
    pub fn signed_area2(&self) -> i64 {
        let v = &self.vertices;
        let mut acc = 0i64;
        for k in 0..v.len() {
            let a = v[k];
            let b = v[(k + 1) % v.len()];
            acc += i64::from(a[0]) * i64::from(b[1]) - i64::from(b[0]) * i64::from(a[1]);
        }
        acc
    }

    /// Rotate to start at the lexicographically smallest (y, x) vertex and
    /// orient counterclockwise.
    pub fn canonicalize(&mut self) {
        if self.signed_area2() < 0 {
            self.vertices.reverse();
        }
        let start = self
            .vertices
            .iter()
            .enumerate()
            .min_by_key(|(_, v)| (v[1], v[0]))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.vertices.rotate_left(start);
    }

    /// Identifying vertex of a canonicalized loop.
    pub fn key(&self) -> [i32; 2] {
        self.vertices[0]
    }

    /// Minimum squared Euclidean distance from a point to the polygon curve,
    /// in lattice units, given the geometry's integer-to-Cartesian mapping.
    pub fn min_dist2(&self, geometry: GeometryKind, px: f64, py: f64) -> f64 {
        let mut best = f64::INFINITY;
        let n = self.vertices.len();
        for k in 0..n {
            let (ax, ay) = geometry.vertex_to_lattice(self.vertices[k]);
            let (bx, by) = geometry.vertex_to_lattice(self.vertices[(k + 1) % n]);
            let (ex, ey) = (bx - ax, by - ay);
            let len2 = ex * ex + ey * ey;
            let t = if len2 > 0.0 {
                (((px - ax) * ex + (py - ay) * ey) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let (dx, dy) = (px - (ax + t * ex), py - (ay + t * ey));
            best = best.min(dx * dx + dy * dy);
        }
        best
    }

    /// Maximum squared Euclidean distance from a point to the polygon curve
    /// (attained at a vertex), in lattice units.
    pub fn max_dist2(&self, geometry: GeometryKind, px: f64, py: f64) -> f64 {
        let mut best = 0f64;
        for v in &self.vertices {
            let (ax, ay) = geometry.vertex_to_lattice(*v);
            let (dx, dy) = (px - ax, py - ay);
            best = best.max(dx * dx + dy * dy);
        }
        best
    }
}

impl GeometryKind {
    /// Map a polygon vertex from scaled integer coordinates to Cartesian
    /// lattice units.
    pub fn vertex_to_lattice(self, v: [i32; 2]) -> (f64, f64) {
        match self {
            GeometryKind::TriangularSite => {
                (f64::from(v[0]) * 0.5, f64::from(v[1]) * (3f64.sqrt() / 6.0))
            }
            GeometryKind::SquareFk => (f64::from(v[0]) * 0.25, f64::from(v[1]) * 0.25),
        }
    }

    /// Map a cell id to its center in Cartesian lattice units.
    pub fn cell_to_lattice(self, cell: (i32, i32)) -> (f64, f64) {
        match self {
            GeometryKind::TriangularSite => {
                let (q, r) = cell;
                (f64::from(q) + f64::from(r) * 0.5, f64::from(r) * (3f64.sqrt() / 2.0))
            }
            GeometryKind::SquareFk => (f64::from(cell.0), f64::from(cell.1)),
        }
    }

    /// Cell whose center is nearest to a Cartesian lattice point.
    pub fn cell_at(self, x: f64, y: f64) -> (i32, i32) {
        match self {
            GeometryKind::TriangularSite => {
                // Cube-coordinate rounding on the triangular lattice.
                let rf = y * 2.0 / 3f64.sqrt();
                let qf = x - y / 3f64.sqrt();
                let sf = -qf - rf;
                let (mut q, mut r, s) = (qf.round(), rf.round(), sf.round());
                let (dq, dr, ds) = ((q - qf).abs(), (r - rf).abs(), (s - sf).abs());
                if dq > dr && dq > ds {
                    q = -r - s;
                } else if dr > ds {
                    r = -q - s;
                }
                (q as i32, r as i32)
            }
            GeometryKind::SquareFk => (x.round() as i32, y.round() as i32),
        }
    }

    /// Integer scanline coordinates of a cell: (row, abscissa) in the scaled
    /// system shared with polygon vertices.
    fn cell_scan_coords(self, cell: (i32, i32)) -> (i32, i32) {
        match self {
            GeometryKind::TriangularSite => (cell.1, 2 * cell.0 + cell.1),
            GeometryKind::SquareFk => (cell.1, 4 * cell.0),
        }
    }
}

/// Row-indexed disk of cells for either geometry.
#[derive(Debug, Clone)]
pub enum CellGrid {
    Tri(TriDisk),
    Fk(FkDisk),
}

impl CellGrid {
    pub fn new(geometry: GeometryKind, radius: u32) -> Self {
        match geometry {
            GeometryKind::TriangularSite => CellGrid::Tri(TriDisk::new(radius)),
            GeometryKind::SquareFk => CellGrid::Fk(FkDisk::new(radius)),
        }
    }

    pub fn n_cells(&self) -> usize {
        match self {
            CellGrid::Tri(d) => d.n_cells(),
            CellGrid::Fk(d) => d.n_sites(),
        }
    }

    pub fn index(&self, cell: (i32, i32)) -> Option<usize> {
        match self {
            CellGrid::Tri(d) => d.index(cell.0, cell.1),
            CellGrid::Fk(d) => d.index(cell.0, cell.1),
        }
    }

    pub fn contains(&self, cell: (i32, i32)) -> bool {
        match self {
            CellGrid::Tri(d) => d.contains(cell.0, cell.1),
            CellGrid::Fk(d) => d.contains(cell.0, cell.1),
        }
    }

    pub fn iter_cells(&self) -> Box<dyn Iterator<Item = (i32, i32, usize)> + '_> {
        match self {
            CellGrid::Tri(d) => Box::new(d.iter_cells()),
            CellGrid::Fk(d) => Box::new(d.iter_sites()),
        }
    }

    pub fn row_range(&self) -> (i32, i32) {
        match self {
            CellGrid::Tri(d) => d.row_range(),
            CellGrid::Fk(d) => d.row_range(),
        }
    }

    /// Cells of one row as (first coordinate range, base index).
    pub fn row_span(&self, row: i32) -> Option<(i32, i32, usize)> {
        match self {
            CellGrid::Tri(d) => d.row_span(row),
            CellGrid::Fk(d) => d.row_span(row),
        }
    }
}

/// A traced, canonicalized loop ensemble with its nesting forest.
#[derive(Debug, Clone)]
pub struct LoopConfiguration {
    pub spec: LatticeSpec,
    pub seed: u64,
    pub sweeps: u32,
    pub autocorr_time: Option<f64>,
    pub warnings: Vec<String>,
    /// Exterior micro-loops discarded during tracing (medial geometry only).
    pub dropped_exterior: u64,
    /// Total interface edge count of the traced configuration.
    pub interface_edges: u64,
    /// Canonical loops, sorted by start vertex; parents precede children.
    pub loops: Vec<Loop>,
    /// Directly surrounding loop of each loop, if any.
    pub parent: Vec<Option<u32>>,
    /// Nesting depth of each loop; outermost loops have depth 1.
    pub depth: Vec<u32>,
    /// Innermost loop surrounding each cell center, if any.
    cell_loop: Vec<u32>,
    grid: CellGrid,
}

const NO_LOOP: u32 = u32::MAX;

impl LoopConfiguration {
    pub fn geometry(&self) -> GeometryKind {
        self.spec.geometry
    }

    pub fn radius(&self) -> u32 {
        self.spec.radius
    }

    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn n_loops(&self) -> usize {
        self.loops.len()
    }

    /// Innermost loop whose interior contains the given cell center.
    pub fn cell_loop(&self, cell: (i32, i32)) -> Option<u32> {
        let idx = self.grid.index(cell)?;
        let l = self.cell_loop[idx];
        (l != NO_LOOP).then_some(l)
    }

    /// Number of loops surrounding the given cell center.
    pub fn cell_depth(&self, cell: (i32, i32)) -> u32 {
        self.cell_loop(cell).map(|l| self.depth[l as usize]).unwrap_or(0)
    }

    /// Loops surrounding a cell, outermost first.
    pub fn chain(&self, cell: (i32, i32)) -> Vec<u32> {
        let mut out = Vec::new();
        let mut cur = self.cell_loop(cell);
        while let Some(l) = cur {
            out.push(l);
            cur = self.parent[l as usize];
        }
        out.reverse();
        out
    }

    /// Walk from a loop to the root, innermost first, including the loop.
    pub fn ancestors(&self, mut l: u32) -> impl Iterator<Item = u32> + '_ {
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let cur = l;
            match self.parent[cur as usize] {
                Some(p) => l = p,
                None => done = true,
            }
            Some(cur)
        })
    }
}

/// Crossing events of one loop with the cell-center scanlines of its
/// geometry, as (row, abscissa) pairs.
fn crossing_events(lp: &Loop, geometry: GeometryKind, out: &mut Vec<(i32, i32)>) {
    let v = &lp.vertices;
    match geometry {
        GeometryKind::TriangularSite => {
            for k in 0..v.len() {
                let a = v[k];
                let b = v[(k + 1) % v.len()];
                if a[0] == b[0] {
                    let mid = (a[1] + b[1]) / 2;
                    debug_assert_eq!((a[1] - b[1]).abs(), 2);
                    debug_assert_eq!(mid.rem_euclid(3), 0);
                    out.push((mid.div_euclid(3), a[0]));
                }
            }
        }
        GeometryKind::SquareFk => {
            for a in v {
                if a[1].rem_euclid(4) == 0 {
                    out.push((a[1].div_euclid(4), a[0]));
                }
            }
        }
    }
}

/// Assemble raw traced loops into a canonical configuration with parents,
/// depths, and the cell-to-loop map.
pub fn build_configuration(
    raw: Vec<Loop>,
    config: &SiteConfiguration,
    dropped_exterior: u64,
    interface_edges: u64,
) -> Result<LoopConfiguration> {
    assemble(
        config.spec,
        config.seed,
        config.sweeps,
        config.autocorr_time,
        config.warnings.clone(),
        dropped_exterior,
        interface_edges,
        raw,
    )
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble(
    spec: LatticeSpec,
    seed: u64,
    sweeps: u32,
    autocorr_time: Option<f64>,
    warnings: Vec<String>,
    dropped_exterior: u64,
    interface_edges: u64,
    mut raw: Vec<Loop>,
) -> Result<LoopConfiguration> {
    let geometry = spec.geometry;
    for lp in &mut raw {
        if lp.vertices.len() < 3 {
            return Err(Error::Format("loop with fewer than 3 vertices".into()));
        }
        lp.canonicalize();
    }
    raw.sort_by_key(|l| {
        let v = l.key();
        (v[1], v[0])
    });

    let grid = CellGrid::new(geometry, spec.radius);
    let (parent, cell_loop) = build_forest(&raw, geometry, &grid)?;
    let mut depth = vec![0u32; raw.len()];
    for l in 0..raw.len() {
        depth[l] = match parent[l] {
            Some(p) => {
                debug_assert!((p as usize) < l);
                depth[p as usize] + 1
            }
            None => 1,
        };
    }

    Ok(LoopConfiguration {
        spec,
        seed,
        sweeps,
        autocorr_time,
        warnings,
        dropped_exterior,
        interface_edges,
        loops: raw,
        parent,
        depth,
        cell_loop,
        grid,
    })
}

/// Row scans: compute each loop's direct parent and each cell's innermost
/// surrounding loop.
fn build_forest(
    loops: &[Loop],
    geometry: GeometryKind,
    grid: &CellGrid,
) -> Result<(Vec<Option<u32>>, Vec<u32>)> {
    let mut parent = vec![None; loops.len()];
    let mut cell_loop = vec![NO_LOOP; grid.n_cells()];
    if loops.is_empty() {
        return Ok((parent, cell_loop));
    }

    // Bucket crossing events by row.
    let mut events: Vec<(i32, i32)> = Vec::new();
    let (mut row_lo, mut row_hi) = (i32::MAX, i32::MIN);
    let mut per_loop: Vec<(u32, i32, i32)> = Vec::new();
    for (l, lp) in loops.iter().enumerate() {
        events.clear();
        crossing_events(lp, geometry, &mut events);
        if events.is_empty() {
            return Err(Error::Domain(
                "traced a loop with no scanline crossings".into(),
            ));
        }
        for &(row, x) in &events {
            row_lo = row_lo.min(row);
            row_hi = row_hi.max(row);
            per_loop.push((l as u32, row, x));
        }
    }
    let n_rows = (row_hi - row_lo + 1) as usize;
    let mut rows: Vec<Vec<(i32, u32)>> = vec![Vec::new(); n_rows];
    for &(l, row, x) in &per_loop {
        rows[(row - row_lo) as usize].push((x, l));
    }

    let mut seen = vec![false; loops.len()];
    let mut stack: Vec<u32> = Vec::new();
    for (offset, row_events) in rows.iter_mut().enumerate() {
        let row = row_lo + offset as i32;
        row_events.sort_unstable();
        stack.clear();
        let span = grid.row_span(row);
        let mut cursor = span.map(|(lo, _, _)| lo);
        for &(x, l) in row_events.iter() {
            // Assign cells strictly left of this crossing to the innermost
            // loop currently open.
            if let (Some((lo, hi, base)), Some(next)) = (span, cursor.as_mut()) {
                while *next <= hi && geometry.cell_scan_coords((*next, row)).1 < x {
                    if let Some(&top) = stack.last() {
                        cell_loop[base + (*next - lo) as usize] = top;
                    }
                    *next += 1;
                }
            }
            if stack.last() == Some(&l) {
                stack.pop();
            } else {
                if !seen[l as usize] {
                    seen[l as usize] = true;
                    parent[l as usize] = stack.last().copied();
                } else {
                    debug_assert_eq!(parent[l as usize], stack.last().copied());
                }
                stack.push(l);
            }
        }
        if !stack.is_empty() {
            return Err(Error::Domain("unbalanced scanline crossings".into()));
        }
        // Cells right of the last crossing are outside every loop.
    }
    Ok((parent, cell_loop))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{sample_loops, sample_percolation, LatticeSpec};

    #[test]
    fn canonicalization_is_rotation_and_orientation_invariant() {
        let verts = vec![[0, -2], [1, -1], [1, 1], [0, 2], [-1, 1], [-1, -1]];
        let mut a = Loop { vertices: verts.clone() };
        let mut b = Loop {
            vertices: verts.iter().rev().copied().collect(),
        };
        let mut c = Loop {
            vertices: {
                let mut v = verts.clone();
                v.rotate_left(3);
                v
            },
        };
        a.canonicalize();
        b.canonicalize();
        c.canonicalize();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.key(), [0, -2]);
        assert!(a.signed_area2() > 0);
    }

    #[test]
    fn forest_orders_parents_before_children() {
        let spec = LatticeSpec::critical_percolation(24).unwrap();
        let cfg = sample_loops(&spec, 7, None).unwrap();
        for l in 0..cfg.n_loops() {
            if let Some(p) = cfg.parent[l] {
                assert!((p as usize) < l);
                assert_eq!(cfg.depth[l], cfg.depth[p as usize] + 1);
            } else {
                assert_eq!(cfg.depth[l], 1);
            }
        }
    }

    #[test]
    fn single_hexagon_surrounds_exactly_its_cell() {
        // A configuration with one open cell at the origin produces one loop
        // of depth 1 whose interior holds only that cell center.
        let spec = LatticeSpec::critical_percolation(6).unwrap();
        let mut site = sample_percolation(&spec, 0).unwrap();
        if let crate::lattice::SiteStates::Tri(t) = &mut site.states {
            t.open.iter_mut().for_each(|s| *s = false);
            let idx = t.disk.index(0, 0).unwrap();
            t.open[idx] = true;
        }
        let cfg = crate::lattice::extract_loops(&site).unwrap();
        assert_eq!(cfg.n_loops(), 1);
        assert_eq!(cfg.cell_loop((0, 0)), Some(0));
        assert_eq!(cfg.cell_depth((0, 0)), 1);
        for (q, r, _) in match cfg.grid() {
            CellGrid::Tri(d) => d.iter_cells(),
            _ => unreachable!(),
        } {
            if (q, r) != (0, 0) {
                assert_eq!(cfg.cell_depth((q, r)), 0, "cell ({q},{r})");
            }
        }
    }

    #[test]
    fn forest_matches_containment_oracle_on_small_disks() {
        for seed in 0..4u64 {
            let spec = LatticeSpec::critical_percolation(10).unwrap();
            let cfg = sample_loops(&spec, seed, None).unwrap();
            for (q, r, _) in cfg.grid().iter_cells() {
                let got = cfg.cell_depth((q, r));
                let want = oracle::depth_at(&cfg, (q, r));
                assert_eq!(got, want, "seed {seed} cell ({q},{r})");
            }
        }
    }

    #[test]
    fn fk_forest_matches_containment_oracle() {
        for seed in 0..3u64 {
            let spec = LatticeSpec::critical_fk(8, 2).unwrap();
            let cfg = sample_loops(&spec, seed, Some(32)).unwrap();
            for (i, j, _) in cfg.grid().iter_cells() {
                let got = cfg.cell_depth((i, j));
                let want = oracle::depth_at(&cfg, (i, j));
                assert_eq!(got, want, "seed {seed} site ({i},{j})");
            }
        }
    }

    #[test]
    fn cell_at_inverts_cell_centers() {
        for geometry in [GeometryKind::TriangularSite, GeometryKind::SquareFk] {
            for cell in [(0, 0), (3, -2), (-4, 1), (2, 5)] {
                let (x, y) = geometry.cell_to_lattice(cell);
                assert_eq!(geometry.cell_at(x, y), cell);
            }
        }
    }
}
