//! Couplings of renewal walks.
//!
//! Two walks with the same increment law but different starting heights can
//! be run jointly so that they meet exactly and then move in lockstep. The
//! one-step building block is a maximal coupling of an increment with its
//! shift: the pair lands on the same height with the largest probability any
//! joint law allows, namely one minus the total variation distance between
//! the increment law and its translate. Chaining these attempts whenever the
//! walks are within a threshold of each other, and letting the laggard walk
//! freely otherwise, makes the probability that the walks cross a level `m`
//! without having met decay exponentially in `m`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::stats::median;
use crate::{Error, Result};

use super::{first_passage, IncrementDistribution};

/// Hard ceiling on sampling attempts inside one residual rejection loop and
/// on total steps of a joint walk.
const STEP_BUDGET: u64 = 10_000_000;

/// One maximally coupled step for walks separated by `gap > 0`.
#[derive(Debug, Clone, Copy)]
pub struct MaximalStep {
    /// Increment given to the walker ahead.
    pub leader_inc: f64,
    /// Increment given to the walker behind.
    pub laggard_inc: f64,
    /// Whether the pair landed together (laggard_inc = leader_inc + gap).
    pub coupled: bool,
}

/// Couple an increment X with its shift by `gap` so that
/// P[laggard lands on leader] = 1 - TV(law, law shifted by gap), while both
/// marginals stay exactly the increment law.
///
/// Draw Y for the leader; accept the diagonal with probability
/// min(1, f(Y + gap) / f(Y)), handing the laggard Y + gap. On rejection the
/// laggard draws from the residual by proposing X from the law and accepting
/// when a uniform variate clears min(1, f(X - gap) / f(X)). Both accept
/// probabilities use density ratios only, so any law with a density works.
pub fn maximal_step(
    dist: &IncrementDistribution,
    gap: f64,
    rng: &mut impl Rng,
) -> Result<MaximalStep> {
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(Error::Argument(format!(
            "gap must be positive and finite, got {gap}"
        )));
    }
    let y = dist.sample(rng);
    let fy = dist.density(y)?;
    let fy_shift = dist.density(y + gap)?;
    let coupled = fy > 0.0 && rng.random::<f64>() < (fy_shift / fy).min(1.0);
    if coupled {
        return Ok(MaximalStep {
            leader_inc: y,
            laggard_inc: y + gap,
            coupled: true,
        });
    }
    for _ in 0..STEP_BUDGET {
        let x = dist.sample(rng);
        let fx = dist.density(x)?;
        if fx <= 0.0 {
            continue;
        }
        let back = dist.density(x - gap)?;
        if rng.random::<f64>() >= (back / fx).min(1.0) {
            return Ok(MaximalStep {
                leader_inc: y,
                laggard_inc: x,
                coupled: false,
            });
        }
    }
    Err(Error::Calibration(
        "residual rejection stalled; the shifted laws are nearly identical".into(),
    ))
}

/// Total variation distance between an exponential law and its shift:
/// 1 - exp(-rate |shift|). Reference value for coupling tests.
pub fn tv_shift_exponential(rate: f64, shift: f64) -> f64 {
    1.0 - (-rate * shift.abs()).exp()
}

/// Joint trajectory of two renewal walks run to a common level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingOutcome {
    /// Both walks exceeded the level at bit-identical heights.
    pub crossed_equal: bool,
    /// Height at which the walks first met, when they did.
    pub coalesced_at: Option<f64>,
    pub final_a: f64,
    pub final_b: f64,
    /// Every increment consumed by each walk, in order.
    pub increments_a: Vec<f64>,
    pub increments_b: Vec<f64>,
    /// Threshold below which gaps triggered coupling attempts.
    pub theta: f64,
    /// Number of maximal-coupling attempts made.
    pub coupling_attempts: u64,
}

/// Threshold for coupling attempts: half the median overshoot of a pilot
/// ensemble, so a catch-up step lands within the threshold about half the
/// time.
pub fn default_theta(dist: &IncrementDistribution, rng: &mut impl Rng) -> Result<f64> {
    let mean = dist.log_mgf_derivative_at_zero()?;
    let x = 30.0 * mean;
    let mut overshoots = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        overshoots.push(first_passage(dist, x, rng).overshoot);
    }
    let theta = median(&overshoots) / 2.0;
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::Calibration(format!(
            "pilot overshoots gave a degenerate threshold {theta}"
        )));
    }
    Ok(theta)
}

/// Run two walks from `start_a` and `start_b` until both exceed `level`,
/// coupling them so they meet exactly when possible.
///
/// While both walks are at or below the level: if they sit at the same
/// height they consume shared increments; if their gap exceeds `theta` only
/// the laggard steps; otherwise the pair takes a maximally coupled step, and
/// on success both heights are set to the same value, after which they never
/// separate. If either walk crosses the level before the pair meets, the
/// remaining walk finishes with independent increments. Each walk's
/// increment sequence is i.i.d. from the law in every phase.
pub fn coalescing_coupling(
    dist: &IncrementDistribution,
    start_a: f64,
    start_b: f64,
    level: f64,
    theta: Option<f64>,
    rng: &mut impl Rng,
) -> Result<CouplingOutcome> {
    if !(start_a.is_finite() && start_b.is_finite() && level.is_finite()) {
        return Err(Error::Argument("heights and level must be finite".into()));
    }
    let theta = match theta {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => {
            return Err(Error::Argument(format!(
                "theta must be positive and finite, got {t}"
            )))
        }
        None => default_theta(dist, rng)?,
    };

    let mut ha = start_a;
    let mut hb = start_b;
    let mut inc_a = Vec::new();
    let mut inc_b = Vec::new();
    let mut coalesced_at = if ha == hb { Some(ha) } else { None };
    let mut attempts = 0u64;
    let mut steps = 0u64;

    while coalesced_at.is_none() && ha <= level && hb <= level {
        steps += 1;
        if steps > STEP_BUDGET {
            return Err(Error::Calibration(
                "joint walk exhausted its step budget before crossing".into(),
            ));
        }
        let gap = (ha - hb).abs();
        if gap > theta {
            // Catch-up phase: only the laggard moves.
            let x = dist.sample(rng);
            if ha < hb {
                ha += x;
                inc_a.push(x);
            } else {
                hb += x;
                inc_b.push(x);
            }
            continue;
        }
        attempts += 1;
        let step = maximal_step(dist, gap, rng)?;
        let (leader, laggard) = if ha < hb { (hb, ha) } else { (ha, hb) };
        if step.coupled {
            // Land both walks on the same float so later comparisons are
            // exact.
            let met = leader + step.leader_inc;
            let (la, lb) = if ha < hb {
                (met - ha, step.leader_inc)
            } else {
                (step.leader_inc, met - hb)
            };
            inc_a.push(la);
            inc_b.push(lb);
            ha = met;
            hb = met;
            coalesced_at = Some(met);
        } else {
            let new_leader = leader + step.leader_inc;
            let new_laggard = laggard + step.laggard_inc;
            if ha < hb {
                ha = new_laggard;
                hb = new_leader;
                inc_a.push(step.laggard_inc);
                inc_b.push(step.leader_inc);
            } else {
                ha = new_leader;
                hb = new_laggard;
                inc_a.push(step.leader_inc);
                inc_b.push(step.laggard_inc);
            }
        }
    }

    if coalesced_at.is_some() {
        // Shared increments keep the heights bit-identical.
        while ha <= level {
            steps += 1;
            if steps > STEP_BUDGET {
                return Err(Error::Calibration(
                    "joint walk exhausted its step budget before crossing".into(),
                ));
            }
            let x = dist.sample(rng);
            ha += x;
            hb = ha;
            inc_a.push(x);
            inc_b.push(x);
        }
    } else {
        // One walk crossed first; the other finishes on its own.
        while ha <= level {
            let x = dist.sample(rng);
            ha += x;
            inc_a.push(x);
        }
        while hb <= level {
            let x = dist.sample(rng);
            hb += x;
            inc_b.push(x);
        }
    }

    Ok(CouplingOutcome {
        crossed_equal: ha == hb,
        coalesced_at,
        final_a: ha,
        final_b: hb,
        increments_a: inc_a,
        increments_b: inc_b,
        theta,
        coupling_attempts: attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;
    use crate::stats::{ks_critical, ks_statistic, wilson_interval};

    #[test]
    fn maximal_step_hits_the_total_variation_bound() {
        let dist = IncrementDistribution::exponential(1.0).unwrap();
        let gap = 0.7;
        let mut rng = rng_from_seed(101);
        let n = 20_000u64;
        let mut coupled = 0u64;
        let mut laggard: Vec<f64> = Vec::with_capacity(n as usize);
        let mut leader: Vec<f64> = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let s = maximal_step(&dist, gap, &mut rng).unwrap();
            if s.coupled {
                coupled += 1;
                assert!((s.laggard_inc - (s.leader_inc + gap)).abs() < 1e-12);
            }
            laggard.push(s.laggard_inc);
            leader.push(s.leader_inc);
        }
        let expected = 1.0 - tv_shift_exponential(1.0, gap);
        let (lo, hi) = wilson_interval(coupled, n, 3.29);
        assert!(
            lo <= expected && expected <= hi,
            "coupled fraction {} vs {expected}",
            coupled as f64 / n as f64
        );
        // Both marginals must stay exactly exponential; the laggard mixes
        // diagonal and residual draws, which is where errors would show.
        let cdf = |v: f64| 1.0 - (-v).exp();
        let d_lag = ks_statistic(&mut laggard, cdf);
        let d_led = ks_statistic(&mut leader, cdf);
        let crit = ks_critical(0.01, n as usize);
        assert!(d_lag < crit, "laggard marginal off: ks = {d_lag}");
        assert!(d_led < crit, "leader marginal off: ks = {d_led}");
    }

    #[test]
    fn rejects_degenerate_gaps_and_laws() {
        let dist = IncrementDistribution::exponential(1.0).unwrap();
        let mut rng = rng_from_seed(0);
        assert!(maximal_step(&dist, 0.0, &mut rng).is_err());
        assert!(maximal_step(&dist, -1.0, &mut rng).is_err());
        let pool = IncrementDistribution::empirical(vec![1.0, 2.0]).unwrap();
        assert!(maximal_step(&pool, 0.5, &mut rng).is_err());
    }

    #[test]
    fn walks_meet_before_a_distant_level() {
        let dist = IncrementDistribution::exponential(1.0).unwrap();
        let mut rng = rng_from_seed(7);
        let theta = default_theta(&dist, &mut rng).unwrap();
        assert!(theta > 0.0 && theta < 10.0);
        let mut met = 0;
        let reps = 150;
        for _ in 0..reps {
            let out =
                coalescing_coupling(&dist, 0.0, 0.5, 40.0, Some(theta), &mut rng).unwrap();
            assert!(out.final_a > 40.0 && out.final_b > 40.0);
            if out.crossed_equal {
                met += 1;
                assert_eq!(out.final_a, out.final_b);
                assert!(out.coalesced_at.is_some());
            }
        }
        assert!(met >= reps - 5, "only {met} of {reps} couplings met");
    }

    #[test]
    fn equal_starts_stay_glued() {
        let dist = IncrementDistribution::exponential(1.0).unwrap();
        let mut rng = rng_from_seed(3);
        let out = coalescing_coupling(&dist, 1.0, 1.0, 20.0, Some(0.3), &mut rng).unwrap();
        assert!(out.crossed_equal);
        assert_eq!(out.coalesced_at, Some(1.0));
        assert_eq!(out.increments_a, out.increments_b);
        assert_eq!(out.coupling_attempts, 0);
    }

    #[test]
    fn joint_walks_are_reproducible() {
        let dist = IncrementDistribution::gamma(2.0, 1.0).unwrap();
        let run = |seed: u64| {
            let mut rng = rng_from_seed(seed);
            coalescing_coupling(&dist, 0.0, 1.0, 30.0, Some(0.5), &mut rng).unwrap()
        };
        let a = run(11);
        let b = run(11);
        assert_eq!(a.increments_a, b.increments_a);
        assert_eq!(a.increments_b, b.increments_b);
        assert_eq!(a.crossed_equal, b.crossed_equal);
        let c = run(12);
        assert!(a.increments_a != c.increments_a);
    }
}
