//! Nesting observables of a loop configuration.
//!
//! All counting reduces to the containment forest. The loops surrounding a
//! cell form a chain (its ancestors, outermost first), and the loops
//! surrounding a whole lattice ball are the common prefix of the chains of
//! its cells: a loop surrounds the ball iff it surrounds every cell center in
//! it, and chains of nearby cells agree exactly up to their deepest common
//! ancestor. Ball counts therefore come from one pass over the ball's cells,
//! taking the minimum chain-prefix length against the host cell's marked
//! chain; a whole ladder of radii shares a single distance-sorted pass.
//!
//! Query points are snapped to the nearest cell center, and ball membership
//! uses exact integer squared distances between centers, so counts have no
//! floating-point boundary ambiguity.

use serde::{Deserialize, Serialize};

use crate::lattice::GeometryKind;
use crate::loops::LoopConfiguration;
use crate::{Error, Result};

impl GeometryKind {
    /// Integer squared center distance between two cells, scaled by
    /// `dist2_scale()` to stay exact.
    pub fn cell_dist2_scaled(self, a: (i32, i32), b: (i32, i32)) -> i64 {
        match self {
            GeometryKind::TriangularSite => {
                let x = i64::from(2 * (a.0 - b.0) + (a.1 - b.1));
                let y = 3 * i64::from(a.1 - b.1);
                3 * x * x + y * y
            }
            GeometryKind::SquareFk => {
                let dx = i64::from(a.0 - b.0);
                let dy = i64::from(a.1 - b.1);
                dx * dx + dy * dy
            }
        }
    }

    /// Factor relating scaled integer squared distances to squared lattice
    /// units.
    pub fn dist2_scale(self) -> f64 {
        match self {
            GeometryKind::TriangularSite => 12.0,
            GeometryKind::SquareFk => 1.0,
        }
    }
}

/// Nesting depth of every cell of the disk: the number of loops surrounding
/// its center.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NestingDepthGrid {
    pub geometry: GeometryKind,
    pub radius: u32,
    /// Depth per cell, in the grid's row-major cell order.
    pub values: Vec<u32>,
}

/// Depth of every cell center.
pub fn nesting_depth(cfg: &LoopConfiguration) -> NestingDepthGrid {
    let mut values = vec![0u32; cfg.grid().n_cells()];
    for (a, b, idx) in cfg.grid().iter_cells() {
        values[idx] = cfg.cell_depth((a, b));
    }
    NestingDepthGrid {
        geometry: cfg.geometry(),
        radius: cfg.radius(),
        values,
    }
}

/// Cell offsets around an anchor, sorted by exact center distance. Built
/// once per (geometry, maximum radius) and shared by every ball scan.
#[derive(Debug, Clone)]
pub struct BallOffsets {
    geometry: GeometryKind,
    max_d2s: i64,
    /// (da, db, scaled squared distance), ascending by distance.
    offsets: Vec<(i32, i32, i64)>,
}

impl BallOffsets {
    pub fn new(geometry: GeometryKind, max_radius_lattice: f64) -> Self {
        let max_d2s = (geometry.dist2_scale() * max_radius_lattice * max_radius_lattice).ceil()
            as i64;
        let mut offsets = Vec::new();
        match geometry {
            GeometryKind::TriangularSite => {
                // 3(2dq+dr)^2 + 9dr^2 <= max_d2s
                let dr_max = ((max_d2s as f64 / 9.0).sqrt()).floor() as i32 + 1;
                for dr in -dr_max..=dr_max {
                    let rem = max_d2s - 9 * i64::from(dr) * i64::from(dr);
                    if rem < 0 {
                        continue;
                    }
                    let m = ((rem as f64 / 3.0).sqrt()).floor() as i32 + 1;
                    for x in -m..=m {
                        // x = 2dq + dr must match dr's parity.
                        if (x - dr).rem_euclid(2) != 0 {
                            continue;
                        }
                        let d2s = 3 * i64::from(x) * i64::from(x)
                            + 9 * i64::from(dr) * i64::from(dr);
                        if d2s <= max_d2s {
                            offsets.push(((x - dr) / 2, dr, d2s));
                        }
                    }
                }
            }
            GeometryKind::SquareFk => {
                let d_max = (max_d2s as f64).sqrt().floor() as i32 + 1;
                for dj in -d_max..=d_max {
                    for di in -d_max..=d_max {
                        let d2s = i64::from(di) * i64::from(di) + i64::from(dj) * i64::from(dj);
                        if d2s <= max_d2s {
                            offsets.push((di, dj, d2s));
                        }
                    }
                }
            }
        }
        offsets.sort_unstable_by_key(|&(da, db, d)| (d, db, da));
        BallOffsets {
            geometry,
            max_d2s,
            offsets,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Reusable workspace for chain-prefix queries against a marked host chain.
#[derive(Debug, Default)]
pub struct ChainScanner {
    stamp: Vec<u32>,
    pos: Vec<u32>,
    epoch: u32,
}

impl ChainScanner {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure(&mut self, n_loops: usize) {
        if self.stamp.len() < n_loops {
            self.stamp.resize(n_loops, 0);
            self.pos.resize(n_loops, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    /// Mark the chain of `host` and return its length.
    pub fn mark_chain(&mut self, cfg: &LoopConfiguration, host: (i32, i32)) -> u32 {
        self.ensure(cfg.n_loops());
        let chain = cfg.chain(host);
        for (k, &l) in chain.iter().enumerate() {
            self.stamp[l as usize] = self.epoch;
            self.pos[l as usize] = k as u32 + 1;
        }
        chain.len() as u32
    }

    /// Length of the longest common chain prefix between the marked host and
    /// the given cell: the depth of their deepest common surrounding loop.
    pub fn prefix(&self, cfg: &LoopConfiguration, cell: (i32, i32)) -> u32 {
        let mut cur = cfg.cell_loop(cell);
        while let Some(l) = cur {
            if self.stamp[l as usize] == self.epoch {
                return self.pos[l as usize];
            }
            cur = cfg.parent[l as usize];
        }
        0
    }
}

/// Counts of loops surrounding each lattice ball of a radius ladder centered
/// on `host`. `thresholds_scaled` must be ascending, in the geometry's scaled
/// squared-distance units; the scanner must already hold the host's chain.
/// Cells outside the disk never constrain the count and are skipped; callers
/// enforce the domain condition that keeps balls inside the disk.
pub fn ball_counts_scan(
    cfg: &LoopConfiguration,
    scanner: &ChainScanner,
    host: (i32, i32),
    host_chain_len: u32,
    offsets: &BallOffsets,
    thresholds_scaled: &[f64],
) -> Vec<u32> {
    debug_assert_eq!(offsets.geometry, cfg.geometry());
    debug_assert!(thresholds_scaled.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(thresholds_scaled
        .last()
        .map(|&t| t <= offsets.max_d2s as f64)
        .unwrap_or(true));
    let mut out = Vec::with_capacity(thresholds_scaled.len());
    let mut run_min = host_chain_len;
    let mut level = 0usize;
    for &(da, db, d2s) in &offsets.offsets {
        let d = d2s as f64;
        while level < thresholds_scaled.len() && d > thresholds_scaled[level] {
            out.push(run_min);
            level += 1;
        }
        if level == thresholds_scaled.len() || run_min == 0 {
            break;
        }
        let cell = (host.0 + da, host.1 + db);
        if cfg.grid().contains(cell) {
            run_min = run_min.min(scanner.prefix(cfg, cell));
        }
    }
    while out.len() < thresholds_scaled.len() {
        out.push(run_min);
    }
    out
}

fn snap_and_validate(cfg: &LoopConfiguration, z: (f64, f64), eps: f64) -> Result<(i32, i32)> {
    if !(eps > 0.0) {
        return Err(Error::Argument("ball radius must be positive".into()));
    }
    let radius = f64::from(cfg.radius());
    let host = cfg.geometry().cell_at(z.0 * radius, z.1 * radius);
    let d2s = cfg.geometry().cell_dist2_scaled(host, (0, 0)) as f64;
    let host_norm = (d2s / cfg.geometry().dist2_scale()).sqrt() / radius;
    if host_norm + eps > 1.0 + 1e-9 {
        return Err(Error::Argument(format!(
            "ball must stay inside the unit disk: |z| + eps = {:.4}",
            host_norm + eps
        )));
    }
    if cfg.grid().index(host).is_none() {
        return Err(Error::Argument("query point lies outside the sampled disk".into()));
    }
    Ok(host)
}

/// Number of loops surrounding the closed lattice ball of radius `eps`
/// (disk units) around z (disk units). The ball always includes the host
/// cell, so as eps shrinks below the lattice spacing the count becomes the
/// host's nesting depth.
pub fn count_surrounding_ball(cfg: &LoopConfiguration, z: (f64, f64), eps: f64) -> Result<u32> {
    let host = snap_and_validate(cfg, z, eps)?;
    let r_lat = eps * f64::from(cfg.radius());
    let offsets = BallOffsets::new(cfg.geometry(), r_lat);
    let mut scanner = ChainScanner::new();
    let len = scanner.mark_chain(cfg, host);
    let thr = cfg.geometry().dist2_scale() * r_lat * r_lat;
    Ok(ball_counts_scan(cfg, &scanner, host, len, &offsets, &[thr])[0])
}

/// Number of loops surrounding both points (snapped to cell centers).
pub fn co_nesting_count(cfg: &LoopConfiguration, z: (f64, f64), w: (f64, f64)) -> Result<u32> {
    let radius = f64::from(cfg.radius());
    let a = cfg.geometry().cell_at(z.0 * radius, z.1 * radius);
    let b = cfg.geometry().cell_at(w.0 * radius, w.1 * radius);
    if a == b {
        return Err(Error::Argument(
            "co-nesting needs two distinct cells; the points snap together".into(),
        ));
    }
    if cfg.grid().index(a).is_none() || cfg.grid().index(b).is_none() {
        return Err(Error::Argument("query points must lie in the sampled disk".into()));
    }
    Ok(co_nesting_cells(cfg, a, b))
}

/// Co-nesting count for two distinct cells.
pub fn co_nesting_cells(cfg: &LoopConfiguration, a: (i32, i32), b: (i32, i32)) -> u32 {
    let chain_a = cfg.chain(a);
    // The common prefix of the two chains, walked from b's innermost loop up.
    let mut cur = cfg.cell_loop(b);
    while let Some(l) = cur {
        if let Some(k) = chain_a.iter().position(|&c| c == l) {
            return k as u32 + 1;
        }
        cur = cfg.parent[l as usize];
    }
    0
}

/// First chain indices around z: of a loop meeting the closed ball of radius
/// `r`, and of a loop contained in it (1-based along the chain from the
/// outside). `None` marks that no surrounding loop qualifies.
pub fn hitting_indices(
    cfg: &LoopConfiguration,
    z: (f64, f64),
    r: f64,
) -> Result<(Option<u32>, Option<u32>)> {
    let host = snap_and_validate(cfg, z, r)?;
    let radius = f64::from(cfg.radius());
    let (zx, zy) = cfg.geometry().cell_to_lattice(host);
    Ok(hitting_indices_lattice(cfg, host, zx, zy, r * radius))
}

/// As `hitting_indices`, in lattice units with a pre-snapped host cell.
pub fn hitting_indices_lattice(
    cfg: &LoopConfiguration,
    host: (i32, i32),
    zx: f64,
    zy: f64,
    r_lat: f64,
) -> (Option<u32>, Option<u32>) {
    let chain = cfg.chain(host);
    let geometry = cfg.geometry();
    let r2 = r_lat * r_lat;
    // Distances to chain loops shrink monotonically inward, so the first
    // qualifying index is a partition point.
    let first = |dist2: &dyn Fn(u32) -> f64| -> Option<u32> {
        let k = chain.partition_point(|&l| dist2(l) > r2);
        (k < chain.len()).then_some(k as u32 + 1)
    };
    let j_meet = first(&|l| cfg.loops[l as usize].min_dist2(geometry, zx, zy));
    let j_inside = first(&|l| cfg.loops[l as usize].max_dist2(geometry, zx, zy));
    (j_meet, j_inside)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{sample_loops, LatticeSpec};
    use crate::loops::oracle;

    fn cfg_for(seed: u64) -> LoopConfiguration {
        let spec = LatticeSpec::critical_percolation(12).unwrap();
        sample_loops(&spec, seed, None).unwrap()
    }

    #[test]
    fn depth_grid_matches_cell_depths() {
        let cfg = cfg_for(3);
        let grid = nesting_depth(&cfg);
        for (a, b, idx) in cfg.grid().iter_cells() {
            assert_eq!(grid.values[idx], cfg.cell_depth((a, b)));
        }
    }

    #[test]
    fn ball_counts_match_oracle() {
        for seed in 0..5u64 {
            let cfg = cfg_for(seed);
            let radius = f64::from(cfg.radius());
            for (zx, zy) in [(0.0, 0.0), (0.21, -0.13), (-0.3, 0.22)] {
                for eps in [0.1, 0.25, 0.4] {
                    let got = count_surrounding_ball(&cfg, (zx, zy), eps).unwrap();
                    let host = cfg.geometry().cell_at(zx * radius, zy * radius);
                    let (hx, hy) = cfg.geometry().cell_to_lattice(host);
                    let want = oracle::ball_count_at(&cfg, hx, hy, eps * radius);
                    assert_eq!(got, want, "seed {seed} z ({zx},{zy}) eps {eps}");
                }
            }
        }
    }

    #[test]
    fn ball_count_at_tiny_radius_is_host_depth() {
        let cfg = cfg_for(9);
        let got = count_surrounding_ball(&cfg, (0.1, 0.1), 1e-4).unwrap();
        let radius = f64::from(cfg.radius());
        let host = cfg.geometry().cell_at(0.1 * radius, 0.1 * radius);
        assert_eq!(got, cfg.cell_depth(host));
    }

    #[test]
    fn co_nesting_matches_oracle() {
        for seed in 0..5u64 {
            let cfg = cfg_for(seed);
            let pairs = [((0.0, 0.0), (0.4, 0.1)), ((0.2, 0.2), (-0.2, -0.1))];
            for (z, w) in pairs {
                let got = co_nesting_count(&cfg, z, w).unwrap();
                let radius = f64::from(cfg.radius());
                let a = cfg.geometry().cell_at(z.0 * radius, z.1 * radius);
                let b = cfg.geometry().cell_at(w.0 * radius, w.1 * radius);
                assert_eq!(got, oracle::co_nesting_at(&cfg, a, b), "seed {seed}");
            }
        }
    }

    #[test]
    fn hitting_indices_match_oracle_and_chain_bounds() {
        for seed in 0..5u64 {
            let cfg = cfg_for(seed);
            let radius = f64::from(cfg.radius());
            for r in [0.2, 0.35] {
                let z = (0.05, -0.04);
                let (meet, inside) = hitting_indices(&cfg, z, r).unwrap();
                let host = cfg.geometry().cell_at(z.0 * radius, z.1 * radius);
                let (hx, hy) = cfg.geometry().cell_to_lattice(host);
                let (om, oi) = oracle::hitting_indices_at(&cfg, hx, hy, r * radius);
                assert_eq!(meet, om, "seed {seed} r {r}");
                assert_eq!(inside, oi, "seed {seed} r {r}");
                if let (Some(m), Some(i)) = (meet, inside) {
                    assert!(m <= i);
                }
            }
        }
    }

    #[test]
    fn domain_violations_are_rejected() {
        let cfg = cfg_for(1);
        assert!(count_surrounding_ball(&cfg, (0.9, 0.0), 0.3).is_err());
        assert!(count_surrounding_ball(&cfg, (0.0, 0.0), 0.0).is_err());
        assert!(co_nesting_count(&cfg, (0.0, 0.0), (0.01, 0.0)).is_err());
    }
}
