//! Renewal walks with positive increments: first passage, overshoot, and
//! passage-time moments.
//!
//! A walk S_n = X_1 + ... + X_n with i.i.d. positive increments crosses
//! level x at tau_x = min{n >= 0 : S_n > x}. When the increment law has
//! exponential moments up to a rate lambda0, the crossing behaves like a
//! clock: E[(m tau_x)^j] = x^j + O((x + 1)^(j-1)) with m = E[X_1], and the
//! overshoot S_{tau_x} - x has a tail bounded by a multiple of
//! exp(-lambda0 alpha) uniformly in x. Nested loop chains fit this frame
//! with log conformal radius as the walk, which is how ball-visit counts of
//! a loop ensemble inherit renewal asymptotics; 1 / E[X_1] plays the role
//! of the typical nesting rate.

pub mod coupling;
pub mod ssw;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::seeding::rng_for;
use crate::stats::{linear_fit, ln_gamma, wilson_interval, LinearFit, MeanVar};
use crate::{Error, Result};
use ssw::SswTable;

/// Increment law of a renewal walk. All variants are supported on the
/// positive half line and have finite mean.
#[derive(Debug, Clone)]
pub enum IncrementDistribution {
    /// Exponential with the given rate; mean 1/rate.
    Exponential { rate: f64 },
    /// Gamma with shape and rate; mean shape/rate.
    Gamma { shape: f64, rate: f64 },
    /// Log conformal radius decrement of a nested loop ensemble.
    SswCle { kappa: f64, table: Arc<SswTable> },
    /// Resampling from a fixed pool of observed increments.
    Empirical { samples: Arc<Vec<f64>> },
}

impl IncrementDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Argument(format!("rate must be positive, got {rate}")));
        }
        Ok(IncrementDistribution::Exponential { rate })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
            return Err(Error::Argument(format!(
                "shape and rate must be positive, got {shape} and {rate}"
            )));
        }
        Ok(IncrementDistribution::Gamma { shape, rate })
    }

    pub fn ssw_cle(kappa: f64) -> Result<Self> {
        let table = ssw::shared_table(kappa)?;
        Ok(IncrementDistribution::SswCle { kappa, table })
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Argument("empirical pool is empty".into()));
        }
        if samples.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::Argument(
                "empirical increments must be positive and finite".into(),
            ));
        }
        Ok(IncrementDistribution::Empirical {
            samples: Arc::new(samples),
        })
    }

    /// Compact form for manifests and file names.
    pub fn label(&self) -> String {
        match self {
            IncrementDistribution::Exponential { rate } => format!("exp:{rate}"),
            IncrementDistribution::Gamma { shape, rate } => format!("gamma:{shape}:{rate}"),
            IncrementDistribution::SswCle { kappa, .. } => format!("ssw:{kappa}"),
            IncrementDistribution::Empirical { samples } => {
                format!("empirical:{}", samples.len())
            }
        }
    }

    /// Divergence point of the moment generating function.
    pub fn lambda0(&self) -> f64 {
        match self {
            IncrementDistribution::Exponential { rate } => *rate,
            IncrementDistribution::Gamma { rate, .. } => *rate,
            IncrementDistribution::SswCle { kappa, .. } => ssw::lambda0(*kappa),
            IncrementDistribution::Empirical { .. } => f64::INFINITY,
        }
    }

    /// Log moment generating function, finite for lambda below `lambda0`.
    pub fn log_mgf(&self, lambda: f64) -> Result<f64> {
        if lambda >= self.lambda0() {
            return Err(Error::Domain(format!(
                "lambda = {lambda} at or beyond the divergence point {}",
                self.lambda0()
            )));
        }
        match self {
            IncrementDistribution::Exponential { rate } => Ok((rate / (rate - lambda)).ln()),
            IncrementDistribution::Gamma { shape, rate } => {
                Ok(shape * (rate / (rate - lambda)).ln())
            }
            IncrementDistribution::SswCle { kappa, .. } => ssw::log_mgf(*kappa, lambda),
            IncrementDistribution::Empirical { samples } => {
                // Shifted log-sum-exp keeps large lambda stable.
                let m = samples
                    .iter()
                    .map(|&x| lambda * x)
                    .fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = samples.iter().map(|&x| (lambda * x - m).exp()).sum();
                Ok(m + (s / samples.len() as f64).ln())
            }
        }
    }

    /// Mean increment, the derivative of the log moment generating function
    /// at zero. The tabulated law is differentiated numerically with a
    /// five-point stencil; closed forms cover the rest.
    pub fn log_mgf_derivative_at_zero(&self) -> Result<f64> {
        match self {
            IncrementDistribution::Exponential { rate } => Ok(1.0 / rate),
            IncrementDistribution::Gamma { shape, rate } => Ok(shape / rate),
            IncrementDistribution::Empirical { samples } => {
                Ok(samples.iter().sum::<f64>() / samples.len() as f64)
            }
            IncrementDistribution::SswCle { .. } => {
                let h = (self.lambda0() / 16.0).min(1e-3);
                let l = |v: f64| self.log_mgf(v);
                Ok((8.0 * (l(h)? - l(-h)?) - (l(2.0 * h)? - l(-2.0 * h)?)) / (12.0 * h))
            }
        }
    }

    /// Reciprocal mean increment: the number of loops a chain typically
    /// inserts per unit of log scale.
    pub fn typical_nesting_constant(&self) -> Result<f64> {
        Ok(1.0 / self.log_mgf_derivative_at_zero()?)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            IncrementDistribution::Exponential { rate } => {
                rand_distr::Exp::new(*rate).unwrap().sample(rng)
            }
            IncrementDistribution::Gamma { shape, rate } => {
                rand_distr::Gamma::new(*shape, 1.0 / rate).unwrap().sample(rng)
            }
            IncrementDistribution::SswCle { table, .. } => table.sample(rng),
            IncrementDistribution::Empirical { samples } => {
                samples[rng.random_range(0..samples.len())]
            }
        }
    }

    /// Density at x, needed by the coupling constructions.
    pub fn density(&self, x: f64) -> Result<f64> {
        match self {
            IncrementDistribution::Exponential { rate } => {
                Ok(if x < 0.0 { 0.0 } else { rate * (-rate * x).exp() })
            }
            IncrementDistribution::Gamma { shape, rate } => Ok(if x <= 0.0 {
                0.0
            } else {
                (shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(*shape)).exp()
            }),
            IncrementDistribution::SswCle { table, .. } => Ok(table.density(x)),
            IncrementDistribution::Empirical { .. } => Err(Error::UnsupportedDistribution(
                "empirical pools have no density; couplings need exp, gamma, or ssw".into(),
            )),
        }
    }
}

impl fmt::Display for IncrementDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for IncrementDistribution {
    type Err = Error;

    /// Parses `exp[:RATE]`, `gamma:SHAPE[:RATE]`, and `ssw:KAPPA`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| -> Result<f64> {
            p.parse::<f64>()
                .map_err(|_| Error::config("dist", format!("bad numeric parameter {p:?} in {s:?}")))
        };
        match parts.as_slice() {
            ["exp"] => IncrementDistribution::exponential(1.0),
            ["exp", r] => IncrementDistribution::exponential(num(r)?),
            ["gamma", k] => IncrementDistribution::gamma(num(k)?, 1.0),
            ["gamma", k, r] => IncrementDistribution::gamma(num(k)?, num(r)?),
            ["ssw", k] => IncrementDistribution::ssw_cle(num(k)?),
            _ => Err(Error::config(
                "dist",
                format!("unknown distribution {s:?}; expected exp[:RATE], gamma:SHAPE[:RATE], or ssw:KAPPA"),
            )),
        }
    }
}

/// Outcome of running a walk until it first exceeds a level.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FirstPassage {
    /// Number of increments consumed: min{n >= 0 : S_n > x}.
    pub tau: u64,
    /// S_tau - x, nonnegative.
    pub overshoot: f64,
    /// S_tau itself.
    pub final_sum: f64,
}

/// Walk a fresh path until the partial sum first exceeds `x`. Levels below
/// zero are crossed immediately by S_0 = 0.
pub fn first_passage(
    dist: &IncrementDistribution,
    x: f64,
    rng: &mut impl Rng,
) -> FirstPassage {
    let mut s = 0.0;
    let mut n = 0u64;
    while s <= x {
        s += dist.sample(rng);
        n += 1;
    }
    FirstPassage {
        tau: n,
        overshoot: s - x,
        final_sum: s,
    }
}

/// Independent first passages with per-path derived seeds.
pub fn passage_ensemble(
    dist: &IncrementDistribution,
    x: f64,
    paths: u32,
    base_seed: u64,
) -> Vec<FirstPassage> {
    (0..paths)
        .map(|i| {
            let mut rng = rng_for(base_seed, "passage", u64::from(i));
            first_passage(dist, x, &mut rng)
        })
        .collect()
}

/// Binomial estimate of P[overshoot >= alpha] with a Wilson band.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailBound {
    pub alpha: f64,
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: u64,
}

pub fn overshoot_tail_bound(overshoots: &[f64], alpha: f64, z: f64) -> Result<TailBound> {
    if overshoots.is_empty() {
        return Err(Error::InsufficientData("no overshoots supplied".into()));
    }
    let n = overshoots.len() as u64;
    let k = overshoots.iter().filter(|&&v| v >= alpha).count() as u64;
    let (lo, hi) = wilson_interval(k, n, z);
    Ok(TailBound {
        alpha,
        p_hat: k as f64 / n as f64,
        lo,
        hi,
        n,
    })
}

/// Scaled passage-time moment at one level.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TauMomentPoint {
    pub x: f64,
    /// Monte Carlo mean of (m tau_x)^j.
    pub scaled_moment: f64,
    pub se: f64,
    /// scaled_moment - x^j; the remainder the theory bounds by (x+1)^(j-1).
    pub residual: f64,
}

/// Moment profile across levels, with the fitted growth exponent of the
/// remainder against log(1 + x).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TauMomentProfile {
    pub j: u32,
    pub mean_increment: f64,
    pub points: Vec<TauMomentPoint>,
    /// Least squares slope of log|residual| on log(1 + x), over points whose
    /// residual clears three standard errors. None when fewer than three
    /// points qualify.
    pub exponent: Option<LinearFit>,
}

pub fn tau_moment_profile(
    dist: &IncrementDistribution,
    j: u32,
    xs: &[f64],
    paths: u32,
    base_seed: u64,
) -> Result<TauMomentProfile> {
    if j == 0 {
        return Err(Error::Argument("moment order must be at least 1".into()));
    }
    if xs.is_empty() || xs.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Argument("levels must be positive and finite".into()));
    }
    if paths < 16 {
        return Err(Error::InsufficientData(
            "need at least 16 paths per level".into(),
        ));
    }
    let m = dist.log_mgf_derivative_at_zero()?;
    let mut points = Vec::with_capacity(xs.len());
    for (xi, &x) in xs.iter().enumerate() {
        let mut acc = MeanVar::new();
        for p in 0..paths {
            let mut rng = rng_for(
                base_seed,
                "tau-moment",
                (xi as u64) << 32 | u64::from(p),
            );
            let fp = first_passage(dist, x, &mut rng);
            acc.push((m * fp.tau as f64).powi(j as i32));
        }
        points.push(TauMomentPoint {
            x,
            scaled_moment: acc.mean(),
            se: acc.standard_error(),
            residual: acc.mean() - x.powi(j as i32),
        });
    }
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for p in &points {
        if p.residual.abs() > 3.0 * p.se {
            lx.push((1.0 + p.x).ln());
            ly.push(p.residual.abs().ln());
        }
    }
    let exponent = if lx.len() >= 3 {
        Some(linear_fit(&lx, &ly))
    } else {
        None
    };
    Ok(TauMomentProfile {
        j,
        mean_increment: m,
        points,
        exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;
    use crate::stats::{ks_critical, ks_statistic};

    #[test]
    fn passage_times_of_the_unit_exponential_are_shifted_poisson() {
        // Arrivals in [0, x] are Poisson(x), so tau - 1 has mean and
        // variance x.
        let dist = IncrementDistribution::exponential(1.0).unwrap();
        let x = 10.0;
        let paths = passage_ensemble(&dist, x, 4000, 21);
        let mut acc = MeanVar::new();
        for p in &paths {
            acc.push(p.tau as f64);
        }
        assert!((acc.mean() - (x + 1.0)).abs() < 0.25, "mean {}", acc.mean());
        assert!((acc.variance() - x).abs() < 1.0, "var {}", acc.variance());
        // Levels below zero are crossed by the empty walk.
        let mut rng = rng_from_seed(0);
        let fp = first_passage(&dist, -1.0, &mut rng);
        assert_eq!(fp.tau, 0);
        assert_eq!(fp.final_sum, 0.0);
        assert_eq!(fp.overshoot, 1.0);
    }

    #[test]
    fn exponential_overshoot_is_memoryless() {
        let dist = IncrementDistribution::exponential(1.0).unwrap();
        let mut overshoots: Vec<f64> = passage_ensemble(&dist, 7.5, 3000, 5)
            .iter()
            .map(|p| p.overshoot)
            .collect();
        let d = ks_statistic(&mut overshoots, |v| 1.0 - (-v).exp());
        assert!(d < ks_critical(0.01, 3000), "ks = {d}");
        // Tail estimate brackets the exact exponential tail.
        let bound = overshoot_tail_bound(&overshoots, 1.0, 2.576).unwrap();
        let exact = (-1.0f64).exp();
        assert!(bound.lo <= exact && exact <= bound.hi);
    }

    #[test]
    fn second_moment_of_the_scaled_passage_time() {
        // For unit exponential increments E[tau^2] = x^2 + 3x + 1.
        let dist = IncrementDistribution::exponential(1.0).unwrap();
        let x = 10.0;
        let mut acc = MeanVar::new();
        for p in passage_ensemble(&dist, x, 30_000, 9) {
            let t = p.tau as f64;
            acc.push(t * t);
        }
        let expected = x * x + 3.0 * x + 1.0;
        assert!(
            (acc.mean() - expected).abs() < 5.0 * acc.standard_error(),
            "E[tau^2] = {} vs {expected}",
            acc.mean()
        );
    }

    #[test]
    fn residual_growth_exponent_stays_one_order_below() {
        // Exact residual for j = 2 is 3x + 1, so the slope against
        // log(1 + x) sits near 1, comfortably below j = 2.
        let dist = IncrementDistribution::exponential(1.0).unwrap();
        let profile =
            tau_moment_profile(&dist, 2, &[5.0, 10.0, 20.0, 40.0, 80.0], 20_000, 33).unwrap();
        let fit = profile.exponent.expect("residuals should be resolved");
        assert!(
            fit.slope > 0.85 && fit.slope < 1.25,
            "slope {}",
            fit.slope
        );
        for p in &profile.points {
            let predicted = 3.0 * p.x + 1.0;
            assert!(
                (p.residual - predicted).abs() < 6.0 * p.se + 0.02 * predicted,
                "residual {} vs {predicted} at x = {}",
                p.residual,
                p.x
            );
        }
    }

    #[test]
    fn gamma_cumulants_match_closed_forms() {
        let dist = IncrementDistribution::gamma(2.0, 1.0).unwrap();
        assert!((dist.log_mgf_derivative_at_zero().unwrap() - 2.0).abs() < 1e-12);
        assert!((dist.typical_nesting_constant().unwrap() - 0.5).abs() < 1e-12);
        // Numeric differentiation of the log MGF agrees.
        let h = 1e-4;
        let l = |v: f64| dist.log_mgf(v).unwrap();
        let numeric = (8.0 * (l(h) - l(-h)) - (l(2.0 * h) - l(-2.0 * h))) / (12.0 * h);
        assert!((numeric - 2.0).abs() < 1e-8, "numeric {numeric}");
        // Density integrates to roughly one over a wide interval.
        let mut mass = 0.0;
        let steps = 4000;
        for i in 0..steps {
            let x = (i as f64 + 0.5) * 30.0 / steps as f64;
            mass += dist.density(x).unwrap() * 30.0 / steps as f64;
        }
        assert!((mass - 1.0).abs() < 1e-6, "gamma mass {mass}");
        assert!(dist.log_mgf(1.0).is_err());
        assert!(dist.log_mgf(0.999).is_ok());
    }

    #[test]
    fn empirical_pools_resample_their_support() {
        let pool = vec![1.0, 2.0, 3.0];
        let dist = IncrementDistribution::empirical(pool.clone()).unwrap();
        assert!((dist.log_mgf_derivative_at_zero().unwrap() - 2.0).abs() < 1e-12);
        let mut rng = rng_from_seed(1);
        for _ in 0..50 {
            let v = dist.sample(&mut rng);
            assert!(pool.contains(&v));
        }
        assert!(dist.density(1.0).is_err());
        assert!(dist.log_mgf(5.0).unwrap().is_finite());
        assert!(IncrementDistribution::empirical(vec![]).is_err());
        assert!(IncrementDistribution::empirical(vec![1.0, -2.0]).is_err());
    }

    #[test]
    fn distribution_strings_round_trip() {
        let d: IncrementDistribution = "exp:2".parse().unwrap();
        assert_eq!(d.label(), "exp:2");
        let d: IncrementDistribution = "gamma:2:3".parse().unwrap();
        assert_eq!(d.label(), "gamma:2:3");
        let d: IncrementDistribution = "exp".parse().unwrap();
        assert_eq!(d.label(), "exp:1");
        assert!("gauss:1".parse::<IncrementDistribution>().is_err());
        assert!("exp:zero".parse::<IncrementDistribution>().is_err());
        assert!("ssw:9".parse::<IncrementDistribution>().is_err());
    }
}
