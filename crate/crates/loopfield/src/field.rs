//! Nesting fields: weighted ball sums and step sums over loop chains.
//!
//! Each loop of a configuration carries an i.i.d. weight drawn from a chosen
//! law. The weighted field at scale eps sums the weights of all loops
//! surrounding the lattice ball B(z, eps); the step field at rank n sums the
//! weights of the first n loops of z's chain, outermost first. Both reduce to
//! prefix sums along the host cell's chain, so a configuration is scanned
//! once per evaluation point regardless of how many scales are requested.
//!
//! Weights are keyed by the loop's canonical start vertex and a weight-stream
//! seed, not by loop index, so the same loop receives the same weight no
//! matter which other loops exist, and weighted and step fields built from
//! the same (configuration, seed) pair see identical weights.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::lattice::{sample, GeometryKind, LatticeSpec};
use crate::loops::LoopConfiguration;
use crate::seeding::{derive_seed, mix64, rng_from_seed};
use crate::stats::MeanVar;
use crate::topology::{ball_counts_scan, BallOffsets, ChainScanner};
use crate::{Error, Result};

/// Weight law attached to loops. All options have finite moments of every
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuLaw {
    /// Constant weight 1: the field counts loops.
    Unit,
    /// Symmetric signs: +1 or -1 with equal probability.
    SignedBernoulli,
    /// Standard normal weights.
    Gaussian,
}

impl MuLaw {
    pub fn mean(self) -> f64 {
        match self {
            MuLaw::Unit => 1.0,
            _ => 0.0,
        }
    }

    pub fn variance(self) -> f64 {
        match self {
            MuLaw::Unit => 0.0,
            _ => 1.0,
        }
    }

    pub fn is_centered(self) -> bool {
        self.mean() == 0.0
    }

    pub fn label(self) -> &'static str {
        match self {
            MuLaw::Unit => "unit",
            MuLaw::SignedBernoulli => "bern",
            MuLaw::Gaussian => "gauss",
        }
    }
}

impl FromStr for MuLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(MuLaw::Unit),
            "bern" | "signed" => Ok(MuLaw::SignedBernoulli),
            "gauss" | "gaussian" => Ok(MuLaw::Gaussian),
            other => Err(Error::config(
                "mu",
                format!("unknown weight law {other:?}; expected unit, bern, or gauss"),
            )),
        }
    }
}

impl fmt::Display for MuLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Weight of the loop with canonical start vertex `key` under stream
/// `xi_seed`.
pub fn loop_weight(mu: MuLaw, xi_seed: u64, key: [i32; 2]) -> f64 {
    match mu {
        MuLaw::Unit => 1.0,
        _ => {
            let packed = ((key[0] as u32 as u64) << 32) | (key[1] as u32 as u64);
            let mut rng = rng_from_seed(mix64(xi_seed, packed));
            match mu {
                MuLaw::SignedBernoulli => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
                MuLaw::Gaussian => rng.sample(StandardNormal),
                MuLaw::Unit => unreachable!(),
            }
        }
    }
}

/// Weights of every loop in the configuration.
pub fn loop_weights(cfg: &LoopConfiguration, mu: MuLaw, xi_seed: u64) -> Vec<f64> {
    cfg.loops
        .iter()
        .map(|l| loop_weight(mu, xi_seed, l.key()))
        .collect()
}

/// Regular evaluation grid: points at integer multiples of a lattice spacing
/// inside a centered square window, snapped to cell centers.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    /// Half side of the window, in disk units (fraction of the disk radius).
    pub half_width: f64,
    /// Spacing between neighboring grid points, in lattice units.
    pub spacing_lattice: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width <= 1.0) {
            return Err(Error::config("grid.half_width", "must lie in (0, 1]"));
        }
        if !(self.spacing_lattice >= 1.0) {
            return Err(Error::config(
                "grid.spacing_lattice",
                "must be at least one lattice unit",
            ));
        }
        Ok(())
    }
}

/// A snapped evaluation point: host cell and its center in disk units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub cell: (i32, i32),
    pub x: f64,
    pub y: f64,
}

/// Build the evaluation grid for a geometry and disk radius.
pub fn build_grid(geometry: GeometryKind, radius: u32, spec: &GridSpec) -> Result<Vec<GridPoint>> {
    spec.validate()?;
    let r = f64::from(radius);
    let half_lat = spec.half_width * r;
    let k_max = (half_lat / spec.spacing_lattice).floor() as i64;
    let mut cells: Vec<(i32, i32)> = Vec::new();
    for ky in -k_max..=k_max {
        for kx in -k_max..=k_max {
            let (x, y) = (kx as f64 * spec.spacing_lattice, ky as f64 * spec.spacing_lattice);
            cells.push(geometry.cell_at(x, y));
        }
    }
    cells.sort_unstable_by_key(|&(a, b)| (b, a));
    cells.dedup();
    let points = cells
        .into_iter()
        .map(|cell| {
            let (x, y) = geometry.cell_to_lattice(cell);
            GridPoint {
                cell,
                x: x / r,
                y: y / r,
            }
        })
        .collect();
    Ok(points)
}

/// Sampled field values: one value per (point, scale) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSample {
    pub geometry: GeometryKind,
    pub radius: u32,
    pub config_seed: u64,
    pub mu: MuLaw,
    pub xi_seed: u64,
    pub points: Vec<GridPoint>,
    /// Ball radii in disk units, ascending. Step fields store the rank ladder
    /// instead and leave this empty.
    pub eps: Vec<f64>,
    /// Step-count ladder for step fields; empty for weighted fields.
    pub ranks: Vec<u32>,
    /// Raw sums, point-major: `values[p * n_scales + s]`.
    pub values: Vec<f64>,
    /// Centered values, when a centering is available.
    pub centered: Option<Vec<f64>>,
}

impl FieldSample {
    pub fn n_scales(&self) -> usize {
        if self.ranks.is_empty() {
            self.eps.len()
        } else {
            self.ranks.len()
        }
    }

    pub fn value(&self, point: usize, scale: usize) -> f64 {
        self.values[point * self.n_scales() + scale]
    }
}

/// Calibration table: Monte Carlo estimate of the mean raw field per (point,
/// scale), used to center fields whose weight law is not already centered.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanTable {
    pub spec: LatticeSpec,
    pub mu: MuLaw,
    pub points: Vec<GridPoint>,
    pub eps: Vec<f64>,
    pub replicas: u32,
    /// Point-major means and standard errors, like `FieldSample::values`.
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

fn validate_eps(
    geometry: GeometryKind,
    radius: u32,
    points: &[GridPoint],
    eps: &[f64],
) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::Argument("need at least one ball radius".into()));
    }
    if eps.windows(2).any(|w| w[0] >= w[1]) || eps[0] <= 0.0 {
        return Err(Error::Argument(
            "ball radii must be positive and strictly ascending".into(),
        ));
    }
    let eps_max = *eps.last().unwrap();
    for p in points {
        let d2s = geometry.cell_dist2_scaled(p.cell, (0, 0)) as f64;
        let norm = (d2s / geometry.dist2_scale()).sqrt() / f64::from(radius);
        if norm + eps_max > 1.0 + 1e-9 {
            return Err(Error::Argument(format!(
                "ball of radius {eps_max} around grid point ({:.3}, {:.3}) leaves the disk",
                p.x, p.y
            )));
        }
    }
    Ok(())
}

/// Shared scan machinery: per point, the ball counts for each eps and the
/// chain prefix-sum table of weights.
pub struct FieldScanner {
    offsets: BallOffsets,
    scanner: ChainScanner,
    thresholds: Vec<f64>,
    prefix: Vec<f64>,
}

impl FieldScanner {
    pub fn new(cfg: &LoopConfiguration, eps: &[f64]) -> Self {
        let r = f64::from(cfg.radius());
        let geometry = cfg.geometry();
        let eps_max = eps.last().copied().unwrap_or(0.0);
        let offsets = BallOffsets::new(geometry, eps_max * r);
        let thresholds = eps
            .iter()
            .map(|&e| {
                let lat = e * r;
                geometry.dist2_scale() * lat * lat
            })
            .collect();
        FieldScanner {
            offsets,
            scanner: ChainScanner::new(),
            thresholds,
            prefix: Vec::new(),
        }
    }

    /// Ball counts (per eps, ascending) and the weight prefix-sum table of
    /// the host chain; `prefix[k]` sums the outermost k chain weights.
    pub fn scan(
        &mut self,
        cfg: &LoopConfiguration,
        weights: &[f64],
        host: (i32, i32),
    ) -> (Vec<u32>, &[f64]) {
        let chain = cfg.chain(host);
        let len = self.scanner.mark_chain(cfg, host);
        self.prefix.clear();
        self.prefix.push(0.0);
        let mut acc = 0.0;
        for &l in &chain {
            acc += weights[l as usize];
            self.prefix.push(acc);
        }
        let counts = ball_counts_scan(cfg, &self.scanner, host, len, &self.offsets, &self.thresholds);
        (counts, &self.prefix)
    }
}

/// Weighted nesting field on a grid: for each point and each eps, the sum of
/// weights of loops surrounding the lattice ball B(z, eps). Centered values
/// are included for centered laws (analytically zero mean) or when a
/// matching calibration table is supplied.
pub fn weighted_field(
    cfg: &LoopConfiguration,
    mu: MuLaw,
    xi_seed: u64,
    eps: &[f64],
    points: &[GridPoint],
    mean: Option<&MeanTable>,
) -> Result<FieldSample> {
    validate_eps(cfg.geometry(), cfg.radius(), points, eps)?;
    let weights = loop_weights(cfg, mu, xi_seed);
    let mut scanner = FieldScanner::new(cfg, eps);
    let mut values = Vec::with_capacity(points.len() * eps.len());
    for p in points {
        let (counts, prefix) = scanner.scan(cfg, &weights, p.cell);
        for &c in &counts {
            values.push(prefix[c as usize]);
        }
    }
    let centered = if mu.is_centered() {
        Some(values.clone())
    } else if let Some(table) = mean {
        if table.mu != mu
            || table.eps.len() != eps.len()
            || table.eps.iter().zip(eps).any(|(a, b)| (a - b).abs() > 1e-12)
            || table.points.len() != points.len()
            || table.points.iter().zip(points).any(|(a, b)| a.cell != b.cell)
        {
            return Err(Error::Calibration(
                "mean table does not match the requested grid and scales".into(),
            ));
        }
        Some(values.iter().zip(&table.mean).map(|(v, m)| v - m).collect())
    } else {
        None
    };
    Ok(FieldSample {
        geometry: cfg.geometry(),
        radius: cfg.radius(),
        config_seed: cfg.seed,
        mu,
        xi_seed,
        points: points.to_vec(),
        eps: eps.to_vec(),
        ranks: Vec::new(),
        values,
        centered,
    })
}

/// Step nesting field on a grid: for each point and each rank n, the sum of
/// the weights of the first min(n, depth) loops of the point's chain,
/// outermost first. Requires a centered weight law.
pub fn step_field(
    cfg: &LoopConfiguration,
    mu: MuLaw,
    xi_seed: u64,
    ranks: &[u32],
    points: &[GridPoint],
) -> Result<FieldSample> {
    if !mu.is_centered() {
        return Err(Error::Argument(
            "step fields need a centered weight law; use bern or gauss".into(),
        ));
    }
    if ranks.is_empty() {
        return Err(Error::Argument("need at least one rank".into()));
    }
    let weights = loop_weights(cfg, mu, xi_seed);
    let mut values = Vec::with_capacity(points.len() * ranks.len());
    for p in points {
        let chain = cfg.chain(p.cell);
        let mut prefix = Vec::with_capacity(chain.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &l in &chain {
            acc += weights[l as usize];
            prefix.push(acc);
        }
        for &n in ranks {
            values.push(prefix[(n as usize).min(chain.len())]);
        }
    }
    let centered = Some(values.clone());
    Ok(FieldSample {
        geometry: cfg.geometry(),
        radius: cfg.radius(),
        config_seed: cfg.seed,
        mu,
        xi_seed,
        points: points.to_vec(),
        eps: Vec::new(),
        ranks: ranks.to_vec(),
        values,
        centered,
    })
}

/// Estimate E[S_z(eps)] per (point, eps) over independent configurations and
/// weight streams, for centering fields with uncentered laws.
pub fn calibrate_mean(
    spec: &LatticeSpec,
    mu: MuLaw,
    eps: &[f64],
    points: &[GridPoint],
    replicas: u32,
    base_seed: u64,
) -> Result<MeanTable> {
    if replicas < 2 {
        return Err(Error::Argument("calibration needs at least 2 replicas".into()));
    }
    validate_eps(spec.geometry, spec.radius, points, eps)?;
    let mut acc: Vec<MeanVar> = vec![MeanVar::new(); points.len() * eps.len()];
    for rep in 0..replicas {
        let cfg_seed = derive_seed(base_seed, "calibrate-config", u64::from(rep));
        let xi_seed = derive_seed(base_seed, "calibrate-weights", u64::from(rep));
        let cfg = crate::lattice::extract_loops(&sample(spec, cfg_seed, None)?)?;
        let sample = weighted_field(&cfg, mu, xi_seed, eps, points, None)?;
        for (slot, &v) in sample.values.iter().enumerate() {
            acc[slot].push(v);
        }
    }
    Ok(MeanTable {
        spec: *spec,
        mu,
        points: points.to_vec(),
        eps: eps.to_vec(),
        replicas,
        mean: acc.iter().map(|m| m.mean()).collect(),
        se: acc.iter().map(|m| m.standard_error()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::sample_loops;
    use crate::loops::oracle;

    fn small_cfg(seed: u64) -> LoopConfiguration {
        let spec = LatticeSpec::critical_percolation(16).unwrap();
        sample_loops(&spec, seed, None).unwrap()
    }

    #[test]
    fn weights_are_keyed_and_reproducible() {
        let cfg = small_cfg(4);
        let w1 = loop_weights(&cfg, MuLaw::Gaussian, 7);
        let w2 = loop_weights(&cfg, MuLaw::Gaussian, 7);
        let w3 = loop_weights(&cfg, MuLaw::Gaussian, 8);
        assert_eq!(w1, w2);
        assert_ne!(w1, w3);
        let signs = loop_weights(&cfg, MuLaw::SignedBernoulli, 7);
        assert!(signs.iter().all(|&s| s == 1.0 || s == -1.0));
        let frac = signs.iter().filter(|&&s| s > 0.0).count() as f64 / signs.len() as f64;
        assert!((frac - 0.5).abs() < 0.2, "sign fraction {frac}");
    }

    #[test]
    fn unit_weighted_field_equals_ball_counts() {
        let cfg = small_cfg(2);
        let grid = build_grid(
            cfg.geometry(),
            cfg.radius(),
            &GridSpec {
                half_width: 0.4,
                spacing_lattice: 4.0,
            },
        )
        .unwrap();
        let eps = [0.125, 0.25, 0.5];
        let sample = weighted_field(&cfg, MuLaw::Unit, 0, &eps, &grid, None).unwrap();
        let r = f64::from(cfg.radius());
        for (pi, p) in grid.iter().enumerate() {
            let (zx, zy) = cfg.geometry().cell_to_lattice(p.cell);
            for (si, &e) in eps.iter().enumerate() {
                let want = oracle::ball_count_at(&cfg, zx, zy, e * r) as f64;
                assert_eq!(sample.value(pi, si), want, "point {pi} eps {e}");
            }
        }
        // Counts shrink as balls grow.
        for pi in 0..grid.len() {
            assert!(sample.value(pi, 0) >= sample.value(pi, 1));
            assert!(sample.value(pi, 1) >= sample.value(pi, 2));
        }
    }

    #[test]
    fn step_field_saturates_at_full_chain() {
        let cfg = small_cfg(6);
        let grid = build_grid(
            cfg.geometry(),
            cfg.radius(),
            &GridSpec {
                half_width: 0.3,
                spacing_lattice: 6.0,
            },
        )
        .unwrap();
        let sample = step_field(&cfg, MuLaw::SignedBernoulli, 11, &[1, 3, 1000, 2000], &grid).unwrap();
        for pi in 0..grid.len() {
            assert_eq!(sample.value(pi, 2), sample.value(pi, 3));
        }
        assert!(step_field(&cfg, MuLaw::Unit, 0, &[1], &grid).is_err());
    }

    #[test]
    fn weighted_and_step_fields_share_weights_at_saturation() {
        // With a ball radius below the lattice spacing the weighted field
        // sums the whole chain, like a step field with a huge rank.
        let cfg = small_cfg(8);
        let grid = build_grid(
            cfg.geometry(),
            cfg.radius(),
            &GridSpec {
                half_width: 0.3,
                spacing_lattice: 5.0,
            },
        )
        .unwrap();
        let eps = [0.4 / f64::from(cfg.radius())];
        let weighted = weighted_field(&cfg, MuLaw::SignedBernoulli, 3, &eps, &grid, None).unwrap();
        let step = step_field(&cfg, MuLaw::SignedBernoulli, 3, &[100000], &grid).unwrap();
        for pi in 0..grid.len() {
            assert_eq!(weighted.value(pi, 0), step.value(pi, 0), "point {pi}");
        }
    }

    #[test]
    fn grid_points_snap_inside_disk() {
        let grid = build_grid(
            GeometryKind::TriangularSite,
            32,
            &GridSpec {
                half_width: 0.5,
                spacing_lattice: 3.0,
            },
        )
        .unwrap();
        assert!(!grid.is_empty());
        for p in &grid {
            assert!(p.x.abs() <= 0.52 && p.y.abs() <= 0.52);
        }
        // No duplicate cells.
        let mut cells: Vec<_> = grid.iter().map(|p| p.cell).collect();
        cells.sort_unstable();
        cells.dedup();
        assert_eq!(cells.len(), grid.len());
    }

    #[test]
    fn calibration_centers_the_unit_field() {
        let spec = LatticeSpec::critical_percolation(12).unwrap();
        let grid = build_grid(
            spec.geometry,
            spec.radius,
            &GridSpec {
                half_width: 0.2,
                spacing_lattice: 4.0,
            },
        )
        .unwrap();
        let eps = [0.2, 0.4];
        let table = calibrate_mean(&spec, MuLaw::Unit, &eps, &grid, 64, 99).unwrap();
        let cfg = sample_loops(&spec, 12345, None).unwrap();
        let sample = weighted_field(&cfg, MuLaw::Unit, 0, &eps, &grid, Some(&table)).unwrap();
        let centered = sample.centered.as_ref().unwrap();
        assert_eq!(centered.len(), sample.values.len());
        // Centering is a pure shift by the table.
        for (slot, &v) in sample.values.iter().enumerate() {
            assert!((centered[slot] - (v - table.mean[slot])).abs() < 1e-12);
        }
    }
}
