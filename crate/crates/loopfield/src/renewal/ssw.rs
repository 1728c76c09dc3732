//! Log conformal radius decrements of nested conformal loop ensembles.
//!
//! When successive nested loops of a conformal loop ensemble with parameter
//! kappa surround a fixed point, the decrements of log conformal radius
//! between one loop and the next form an i.i.d. positive sequence. Its
//! common law has the explicit moment generating function
//!
//! ```text
//! E[exp(lambda T)] = -cos(4 pi/kappa) / cos(pi sqrt((1 - 4/kappa)^2 + 8 lambda/kappa))
//! ```
//!
//! finite exactly for lambda < lambda0(kappa) = 1 - 2/kappa - 3 kappa/32; at
//! lambda0 the square root reaches 1/2 and the denominator vanishes. For
//! arguments where the radicand is negative the cosine continues to a
//! hyperbolic cosine.
//!
//! No closed-form density or quantile is available, so sampling goes through
//! Fourier inversion of the characteristic function: the density is
//! tabulated on a graded grid, integrated to a distribution table, and
//! sampled by inverse transform. The characteristic function decays like
//! exp(-pi sqrt(4 t/kappa)), so truncating the inversion integral leaves a
//! negligible tail, and the trapezoid rule applied to a Fourier kernel is
//! alias-limited rather than oscillation-limited: its error is the density
//! aliased by the period 2 pi / dt, which the exponential tail of the law
//! suppresses entirely for the grid used here.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use rustfft::num_complex::Complex64;

use crate::{Error, Result};

/// Growth rate bound of the moment generating function: E[exp(lambda T)] is
/// finite iff lambda < lambda0(kappa).
pub fn lambda0(kappa: f64) -> f64 {
    1.0 - 2.0 / kappa - 3.0 * kappa / 32.0
}

/// The nesting law is defined for kappa in the open interval (8/3, 8).
pub fn validate_kappa(kappa: f64) -> Result<()> {
    if kappa.is_finite() && kappa > 8.0 / 3.0 && kappa < 8.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "kappa = {kappa} outside the simple-loop range (8/3, 8)"
        )))
    }
}

/// Log moment generating function of the decrement law.
pub fn log_mgf(kappa: f64, lambda: f64) -> Result<f64> {
    validate_kappa(kappa)?;
    if lambda >= lambda0(kappa) {
        return Err(Error::Domain(format!(
            "lambda = {lambda} at or beyond the divergence point {}",
            lambda0(kappa)
        )));
    }
    let a = 1.0 - 4.0 / kappa;
    let arg = a * a + 8.0 * lambda / kappa;
    let denom = if arg >= 0.0 {
        (PI * arg.sqrt()).cos()
    } else {
        (PI * (-arg).sqrt()).cosh()
    };
    let num = -(4.0 * PI / kappa).cos();
    Ok((num / denom).ln())
}

/// Mean decrement, differentiating the closed form by hand:
/// E[T] = (4 pi / kappa) tan(pi |a|) / |a| with a = 1 - 4/kappa, continued
/// through the removable singularity at kappa = 4 where the value is pi^2.
/// Used to size the tabulation grid; cross-checked against numeric
/// differentiation of `log_mgf` in the tests.
pub(crate) fn mean_closed_form(kappa: f64) -> f64 {
    let a = (1.0 - 4.0 / kappa).abs();
    if a < 1e-8 {
        4.0 * PI * PI / kappa
    } else {
        (4.0 * PI / kappa) * (PI * a).tan() / a
    }
}

/// Characteristic function E[exp(i t T)], analytic continuation of the
/// moment generating function to lambda = i t.
fn phi(kappa: f64, t: f64) -> Complex64 {
    let a = 1.0 - 4.0 / kappa;
    let w = Complex64::new(a * a, 8.0 * t / kappa);
    let num = Complex64::new(-(4.0 * PI / kappa).cos(), 0.0);
    num / (PI * w.sqrt()).cos()
}

/// Truncation point of the inversion integral; |phi| there is below 1e-9
/// for every kappa the table builder accepts.
const T_MAX: f64 = 100.0;
/// Frequency step; aliases the density by period 2 pi / DT ~ 1256, far past
/// the tabulated support.
const DT: f64 = 0.005;
/// Spatial step in the bulk of the law.
const DENSE_STEP: f64 = 0.01;
/// Spatial step in the exponential tail.
const COARSE_STEP: f64 = 0.1;
/// Building a sampling table needs a healthy tail rate: very small lambda0
/// (kappa close to either endpoint) would push the support past the alias
/// period.
const MIN_LAMBDA0: f64 = 0.03;

/// Tabulated density and distribution function of the decrement law,
/// supporting interpolation and inverse-transform sampling.
#[derive(Debug)]
pub struct SswTable {
    kappa: f64,
    xs: Vec<f64>,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
    /// Mass of the raw inverted density before normalization; its distance
    /// from 1 measures the inversion error.
    pub raw_mass: f64,
}

fn density_from_phi(phis: &[Complex64], x: f64) -> f64 {
    let rot = Complex64::from_polar(1.0, -DT * x);
    let mut z = Complex64::new(1.0, 0.0);
    let mut acc = 0.0;
    let last = phis.len() - 1;
    for (k, p) in phis.iter().enumerate() {
        if k % 2048 == 0 {
            // Resync the rotation phase; repeated multiplication drifts.
            z = Complex64::from_polar(1.0, -DT * x * k as f64);
        }
        let term = (p * z).re;
        acc += if k == 0 || k == last { 0.5 * term } else { term };
        z *= rot;
    }
    (DT / PI) * acc
}

impl SswTable {
    pub fn build(kappa: f64) -> Result<SswTable> {
        validate_kappa(kappa)?;
        let l0 = lambda0(kappa);
        if l0 < MIN_LAMBDA0 {
            return Err(Error::Calibration(format!(
                "kappa = {kappa} has tail rate {l0:.4}, too slow for tabulated sampling"
            )));
        }
        let mean = mean_closed_form(kappa);
        let dense_end = (2.0 * mean).max(20.0);
        let x_max = mean + 30.0 / l0;

        let n_t = (T_MAX / DT).round() as usize;
        let phis: Vec<Complex64> = (0..=n_t).map(|k| phi(kappa, k as f64 * DT)).collect();

        let mut xs = Vec::new();
        let n_dense = (dense_end / DENSE_STEP).ceil() as usize;
        for i in 0..=n_dense {
            xs.push(i as f64 * DENSE_STEP);
        }
        let coarse_start = *xs.last().unwrap();
        let n_coarse = ((x_max - coarse_start) / COARSE_STEP).ceil() as usize;
        for i in 1..=n_coarse {
            xs.push(coarse_start + i as f64 * COARSE_STEP);
        }

        let mut pdf: Vec<f64> = xs.iter().map(|&x| density_from_phi(&phis, x)).collect();
        if pdf.iter().any(|&v| v < -1e-6) {
            return Err(Error::Calibration(
                "Fourier inversion produced significantly negative density values".into(),
            ));
        }
        for v in &mut pdf {
            *v = v.max(0.0);
        }

        let mut cdf = Vec::with_capacity(xs.len());
        cdf.push(0.0);
        for i in 1..xs.len() {
            let cell = 0.5 * (pdf[i - 1] + pdf[i]) * (xs[i] - xs[i - 1]);
            cdf.push(cdf[i - 1] + cell);
        }
        let raw_mass = *cdf.last().unwrap();
        if (raw_mass - 1.0).abs() > 1e-4 {
            return Err(Error::Calibration(format!(
                "inverted density integrates to {raw_mass:.8}, expected 1"
            )));
        }
        for v in &mut pdf {
            *v /= raw_mass;
        }
        for v in &mut cdf {
            *v /= raw_mass;
        }
        *cdf.last_mut().unwrap() = 1.0;

        Ok(SswTable {
            kappa,
            xs,
            pdf,
            cdf,
            raw_mass,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Interpolated density; zero outside the tabulated support. The
    /// truncation at the far end discards mass below 1e-10.
    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 || x > *self.xs.last().unwrap() {
            return 0.0;
        }
        let i = self.xs.partition_point(|&g| g < x);
        if i == 0 {
            return self.pdf[0];
        }
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let w = (x - x0) / (x1 - x0);
        self.pdf[i - 1] * (1.0 - w) + self.pdf[i] * w
    }

    /// Inverse of the tabulated distribution function.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c < u);
        if i == 0 {
            return self.xs[0];
        }
        if i >= self.cdf.len() {
            return *self.xs.last().unwrap();
        }
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        if c1 <= c0 {
            return self.xs[i];
        }
        let w = (u - c0) / (c1 - c0);
        self.xs[i - 1] * (1.0 - w) + self.xs[i] * w
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Mean of the tabulated law, a diagnostic against the closed form.
    pub fn mean_tabulated(&self) -> f64 {
        let mut acc = 0.0;
        for i in 1..self.xs.len() {
            let cell = 0.5 * (self.xs[i - 1] * self.pdf[i - 1] + self.xs[i] * self.pdf[i]);
            acc += cell * (self.xs[i] - self.xs[i - 1]);
        }
        acc
    }
}

/// Process-wide table cache: tables cost a second or so to build and are
/// immutable, so every consumer of the same kappa shares one.
pub fn shared_table(kappa: f64) -> Result<Arc<SswTable>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<SswTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = kappa.to_bits();
    if let Some(t) = cache.lock().unwrap().get(&key) {
        return Ok(Arc::clone(t));
    }
    let table = Arc::new(SswTable::build(kappa)?);
    cache
        .lock()
        .unwrap()
        .entry(key)
        .or_insert_with(|| Arc::clone(&table));
    Ok(table)
}
