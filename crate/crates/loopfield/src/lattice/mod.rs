//! Lattice disks and their loop ensembles.
//!
//! Two microscopic models produce the loop configurations studied by the
//! rest of the crate: independent site percolation on the triangular lattice
//! (interfaces on the hexagonal dual) and the q-state random-cluster model on
//! the square lattice (interfaces on the medial lattice). Both are sampled on
//! a Euclidean disk of a given radius in lattice units, with closed boundary
//! conditions outside the disk.

pub mod fk;
pub mod triangular;

use serde::{Deserialize, Serialize};

use crate::loops::{build_configuration, Loop, LoopConfiguration};
use crate::seeding::rng_from_seed;
use crate::stats::integrated_autocorr_time;
use crate::{Error, Result};

/// Default Swendsen-Wang equilibration budget before the recorded sweep.
pub const DEFAULT_SWEEPS: u32 = 256;

/// Which microscopic model the disk carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    /// Site percolation on the triangular lattice; loops on the hexagonal dual.
    TriangularSite,
    /// Random-cluster bonds on the square lattice; loops on the medial lattice.
    SquareFk,
}

impl GeometryKind {
    pub fn label(self) -> &'static str {
        match self {
            GeometryKind::TriangularSite => "triangular-site",
            GeometryKind::SquareFk => "square-fk",
        }
    }
}

/// Full description of a lattice ensemble: geometry, disk radius in lattice
/// units, and model parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub geometry: GeometryKind,
    /// Disk radius in lattice units; cells with centers within this Euclidean
    /// distance of the origin belong to the disk.
    pub radius: u32,
    /// Open probability (site percolation) or bond density (random cluster).
    pub p: f64,
    /// Cluster weight; 1 for percolation-type models, 2 for Ising.
    pub q: u32,
}

impl LatticeSpec {
    /// Critical site percolation on the triangular lattice.
    pub fn critical_percolation(radius: u32) -> Result<Self> {
        let spec = LatticeSpec {
            geometry: GeometryKind::TriangularSite,
            radius,
            p: 0.5,
            q: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Self-dual random-cluster model on the square lattice.
    pub fn critical_fk(radius: u32, q: u32) -> Result<Self> {
        let spec = LatticeSpec {
            geometry: GeometryKind::SquareFk,
            radius,
            p: fk::critical_density(f64::from(q)),
            q,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius < 4 {
            return Err(Error::config("model.radius", "must be at least 4 lattice units"));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::config("model.p", "must lie strictly between 0 and 1"));
        }
        if self.q == 0 || self.q > 8 {
            return Err(Error::config("model.q", "must lie in 1..=8"));
        }
        if self.geometry == GeometryKind::TriangularSite && self.q != 1 {
            return Err(Error::config("model.q", "site percolation requires q = 1"));
        }
        Ok(())
    }
}

/// Geometry-specific cell states.
#[derive(Debug, Clone)]
pub enum SiteStates {
    Tri(triangular::TriStates),
    Fk(fk::FkStates),
}

/// A sampled microscopic configuration together with its provenance.
#[derive(Debug, Clone)]
pub struct SiteConfiguration {
    pub spec: LatticeSpec,
    pub seed: u64,
    /// Markov chain sweeps used (1 for direct sampling).
    pub sweeps: u32,
    pub states: SiteStates,
    /// Integrated autocorrelation time of the open-bond series, when the
    /// sweep budget was long enough to estimate one.
    pub autocorr_time: Option<f64>,
    pub warnings: Vec<String>,
}

/// Draw a site-percolation configuration. Each cell of the disk is open
/// independently with probability `spec.p`; the draw is a pure function of
/// the seed.
pub fn sample_percolation(spec: &LatticeSpec, seed: u64) -> Result<SiteConfiguration> {
    spec.validate()?;
    if spec.geometry != GeometryKind::TriangularSite {
        return Err(Error::Argument(
            "direct sampling applies to the triangular-site geometry".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let states = triangular::TriStates::sample(spec.radius, spec.p, &mut rng);
    Ok(SiteConfiguration {
        spec: *spec,
        seed,
        sweeps: 1,
        states: SiteStates::Tri(states),
        autocorr_time: None,
        warnings: Vec::new(),
    })
}

/// Run a Swendsen-Wang chain for the random-cluster model and keep the final
/// bond configuration. Deterministic in (seed, sweeps). A sweep budget below
/// the default is allowed but flagged in `warnings`.
pub fn sample_fk_ising(spec: &LatticeSpec, seed: u64, sweeps: u32) -> Result<SiteConfiguration> {
    spec.validate()?;
    if spec.geometry != GeometryKind::SquareFk {
        return Err(Error::Argument(
            "cluster sampling applies to the square-fk geometry".into(),
        ));
    }
    if sweeps == 0 {
        return Err(Error::Argument("sweeps must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let (states, energy) = fk::swendsen_wang(spec.radius, spec.q, spec.p, sweeps, &mut rng);
    let mut warnings = Vec::new();
    if sweeps < DEFAULT_SWEEPS {
        warnings.push(format!(
            "sweep budget {sweeps} is below the default {DEFAULT_SWEEPS}; the chain may not be equilibrated"
        ));
    }
    let autocorr_time = if sweeps >= 64 {
        // Skip the first quarter as burn-in for the estimate.
        let tail = &energy[(sweeps as usize) / 4..];
        Some(integrated_autocorr_time(tail, 6.0))
    } else {
        None
    };
    if let Some(tau) = autocorr_time {
        if (sweeps as f64) < 20.0 * tau {
            warnings.push(format!(
                "sweep budget {sweeps} is under 20 autocorrelation times (tau = {tau:.1})"
            ));
        }
    }
    Ok(SiteConfiguration {
        spec: *spec,
        seed,
        sweeps,
        states: SiteStates::Fk(states),
        autocorr_time,
        warnings,
    })
}

/// Sample from the spec with the model's natural sampler.
pub fn sample(spec: &LatticeSpec, seed: u64, sweeps: Option<u32>) -> Result<SiteConfiguration> {
    match spec.geometry {
        GeometryKind::TriangularSite => {
            if let Some(s) = sweeps {
                if s != 1 {
                    return Err(Error::Argument(
                        "sweeps do not apply to directly sampled percolation".into(),
                    ));
                }
            }
            sample_percolation(spec, seed)
        }
        GeometryKind::SquareFk => sample_fk_ising(spec, seed, sweeps.unwrap_or(DEFAULT_SWEEPS)),
    }
}

/// Trace all interface loops of a configuration and assemble them into a
/// nesting forest.
pub fn extract_loops(config: &SiteConfiguration) -> Result<LoopConfiguration> {
    let (raw, dropped, interface_edges): (Vec<Loop>, u64, u64) = match &config.states {
        SiteStates::Tri(states) => {
            let (loops, edges) = triangular::trace_interfaces(states);
            (loops, 0, edges)
        }
        SiteStates::Fk(states) => {
            let trace = fk::trace_fk_interfaces(states);
            (trace.loops, trace.dropped, trace.arcs)
        }
    };
    build_configuration(raw, config, dropped, interface_edges)
}

/// Convenience: sample and extract in one step.
pub fn sample_loops(spec: &LatticeSpec, seed: u64, sweeps: Option<u32>) -> Result<LoopConfiguration> {
    extract_loops(&sample(spec, seed, sweeps)?)
}

/// Open-bond (or open-site) density, used by equilibration diagnostics.
pub fn occupation_fraction(config: &SiteConfiguration) -> f64 {
    match &config.states {
        SiteStates::Tri(t) => t.open_fraction(),
        SiteStates::Fk(f) => {
            let mut eligible = 0u64;
            for (i, j, _) in f.disk.iter_sites() {
                eligible += u64::from(f.disk.contains(i + 1, j));
                eligible += u64::from(f.disk.contains(i, j + 1));
            }
            f.open_bond_count() as f64 / eligible.max(1) as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation_rejects_bad_fields() {
        assert!(LatticeSpec::critical_percolation(2).is_err());
        let mut spec = LatticeSpec::critical_percolation(8).unwrap();
        spec.p = 1.0;
        assert!(spec.validate().is_err());
        spec.p = 0.5;
        spec.q = 3;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn percolation_sampling_is_seed_deterministic() {
        let spec = LatticeSpec::critical_percolation(16).unwrap();
        let a = sample_percolation(&spec, 42).unwrap();
        let b = sample_percolation(&spec, 42).unwrap();
        let c = sample_percolation(&spec, 43).unwrap();
        match (&a.states, &b.states, &c.states) {
            (SiteStates::Tri(x), SiteStates::Tri(y), SiteStates::Tri(z)) => {
                assert_eq!(x.open, y.open);
                assert_ne!(x.open, z.open);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn fk_low_sweep_budget_is_flagged() {
        let spec = LatticeSpec::critical_fk(8, 2).unwrap();
        let cfg = sample_fk_ising(&spec, 1, 4).unwrap();
        assert!(!cfg.warnings.is_empty());
        let cfg = sample_fk_ising(&spec, 1, DEFAULT_SWEEPS).unwrap();
        assert!(cfg.warnings.iter().all(|w| !w.contains("below the default")));
    }

    #[test]
    fn critical_density_matches_self_duality() {
        assert!((fk::critical_density(1.0) - 0.5).abs() < 1e-15);
        let p2 = fk::critical_density(2.0);
        assert!((p2 - 2f64.sqrt() / (1.0 + 2f64.sqrt())).abs() < 1e-15);
    }
}
