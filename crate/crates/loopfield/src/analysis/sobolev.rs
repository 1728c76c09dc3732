//! Periodic Sobolev norms of gridded fields.
//!
//! A field sampled on an n x n periodic grid over a window of side L is
//! expanded in discrete Fourier modes. With hat(h)(k) the normalized DFT
//! coefficient (so that a constant field c has hat(h)(0) = c), the Sobolev
//! H^s norm used here is
//!
//! ```text
//!     ||h||_{H^s}^2 = sum_k <k>^{2s} |hat(h)(k)|^2,   <k> = (1 + |k|^2)^(1/2),
//! ```
//!
//! with k running over integer frequencies wrapped to (-n/2, n/2]. For s = 0
//! this is Parseval's identity: the mean square of the grid values. Negative
//! s damps high modes, which is what makes the norm a useful Cauchy
//! diagnostic for fields that converge only as distributions: differences
//! concentrated at fine scales carry high frequencies and are crushed by
//! <k>^{2s}, so a distributional Cauchy sequence shows geometric decay.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// DFT coefficients of an n x n periodic grid, normalized so a constant
/// field c has coefficient c at frequency zero.
#[derive(Debug, Clone)]
pub struct SpectralField {
    n: usize,
    coeffs: Vec<Complex64>,
}

/// Wrap a row-major index to the signed integer frequency in (-n/2, n/2].
fn wrap_mode(i: usize, n: usize) -> i64 {
    let i = i as i64;
    let n = n as i64;
    if i <= n / 2 {
        i
    } else {
        i - n
    }
}

fn fft_2d(data: &mut [Complex64], n: usize) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for row in data.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = data[i * n + j];
        }
        fft.process_with_scratch(&mut col, &mut scratch);
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
}

impl SpectralField {
    /// Transform a real field given in row-major order on an n x n grid.
    pub fn from_grid(values: &[f64], n: usize) -> Result<Self> {
        let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::from_complex_grid(complex, n)
    }

    /// Transform a complex field given in row-major order on an n x n grid.
    pub fn from_complex_grid(mut values: Vec<Complex64>, n: usize) -> Result<Self> {
        if n == 0 || values.len() != n * n {
            return Err(Error::Argument(format!(
                "grid length {} does not match {n} x {n}",
                values.len()
            )));
        }
        if values.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Argument("grid holds non-finite values".into()));
        }
        fft_2d(&mut values, n);
        let norm = 1.0 / (n as f64 * n as f64);
        for c in &mut values {
            *c *= norm;
        }
        Ok(SpectralField { n, coeffs: values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Coefficient at wrapped integer frequency (kx, ky); zero outside the
    /// resolved band.
    pub fn coefficient(&self, kx: i64, ky: i64) -> Complex64 {
        let n = self.n as i64;
        let lo = -(n - 1) / 2;
        let hi = n / 2;
        if kx < lo || kx > hi || ky < lo || ky > hi {
            return Complex64::new(0.0, 0.0);
        }
        let ix = kx.rem_euclid(n) as usize;
        let iy = ky.rem_euclid(n) as usize;
        self.coeffs[iy * self.n + ix]
    }

    /// Sobolev H^s norm truncated to modes with max(|kx|, |ky|) <= cutoff.
    pub fn norm(&self, s: f64, cutoff: u32) -> f64 {
        let mut total = 0.0;
        for iy in 0..self.n {
            let ky = wrap_mode(iy, self.n);
            if ky.unsigned_abs() > u64::from(cutoff) {
                continue;
            }
            for ix in 0..self.n {
                let kx = wrap_mode(ix, self.n);
                if kx.unsigned_abs() > u64::from(cutoff) {
                    continue;
                }
                let mag2 = self.coeffs[iy * self.n + ix].norm_sqr();
                let bracket2 = 1.0 + (kx * kx + ky * ky) as f64;
                total += bracket2.powf(s) * mag2;
            }
        }
        total.sqrt()
    }

    /// Full-band H^s norm (every resolved mode).
    pub fn norm_full(&self, s: f64) -> f64 {
        self.norm(s, self.n as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;
    use rand::Rng;
    use std::f64::consts::TAU;

    #[test]
    fn constant_field_norm_is_its_magnitude() {
        let n = 16;
        let grid = vec![2.5; n * n];
        let f = SpectralField::from_grid(&grid, n).unwrap();
        for s in [-2.1, -1.0, 0.0, 1.0] {
            assert!((f.norm(s, 8) - 2.5).abs() < 1e-12, "s = {s}");
        }
        assert!((f.coefficient(0, 0).re - 2.5).abs() < 1e-12);
        assert!(f.coefficient(3, -2).norm() < 1e-12);
    }

    #[test]
    fn single_mode_norm_is_bracket_power() {
        // h(x) = exp(2 pi i (k . x)/n) has a single unit coefficient at k,
        // so ||h||_{H^s} = (1 + |k|^2)^(s/2) exactly.
        let n = 32;
        let (kx, ky) = (3i64, -5i64);
        let mut grid = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                let phase = TAU * (kx as f64 * ix as f64 + ky as f64 * iy as f64) / n as f64;
                grid.push(Complex64::new(phase.cos(), phase.sin()));
            }
        }
        let f = SpectralField::from_complex_grid(grid, n).unwrap();
        let c = f.coefficient(kx, ky);
        assert!((c.re - 1.0).abs() < 1e-10 && c.im.abs() < 1e-10);
        for s in [-2.1, -0.5, 0.0, 1.3] {
            let want = (1.0 + (kx * kx + ky * ky) as f64).powf(s / 2.0);
            let got = f.norm_full(s);
            assert!((got - want).abs() < 1e-10, "s = {s}: got {got}, want {want}");
        }
    }

    #[test]
    fn parseval_at_s_zero() {
        let n = 24;
        let mut rng = rng_from_seed(99);
        let grid: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = SpectralField::from_grid(&grid, n).unwrap();
        let mean_sq = grid.iter().map(|v| v * v).sum::<f64>() / (n * n) as f64;
        assert!((f.norm_full(0.0) - mean_sq.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn real_fields_have_conjugate_symmetric_spectra() {
        let n = 16;
        let mut rng = rng_from_seed(5);
        let grid: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = SpectralField::from_grid(&grid, n).unwrap();
        for ky in -7..=7i64 {
            for kx in -7..=7i64 {
                let a = f.coefficient(kx, ky);
                let b = f.coefficient(-kx, -ky).conj();
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn norm_monotone_in_s() {
        let n = 16;
        let mut rng = rng_from_seed(314);
        for _ in 0..100 {
            let grid: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = SpectralField::from_grid(&grid, n).unwrap();
            let mut prev = f.norm(-3.0, 8);
            for s in [-2.1, -1.0, 0.0, 0.5] {
                let cur = f.norm(s, 8);
                assert!(cur >= prev - 1e-12, "norm not monotone at s = {s}");
                prev = cur;
            }
        }
    }

    #[test]
    fn linear_scaling() {
        let n = 16;
        let mut rng = rng_from_seed(8);
        let grid: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tripled: Vec<f64> = grid.iter().map(|v| 3.0 * v).collect();
        let a = SpectralField::from_grid(&grid, n).unwrap();
        let b = SpectralField::from_grid(&tripled, n).unwrap();
        let (na, nb) = (a.norm(-2.1, 8), b.norm(-2.1, 8));
        assert!((nb - 3.0 * na).abs() < 1e-10 * nb.max(1.0));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SpectralField::from_grid(&[1.0; 5], 2).is_err());
        assert!(SpectralField::from_grid(&[1.0, f64::NAN, 0.0, 0.0], 2).is_err());
        assert!(SpectralField::from_grid(&[], 0).is_err());
    }
}
