//! Green's function of the unit disk and conformal-radius bounds.
//!
//! The Dirichlet Green's function of the unit disk is
//!
//! ```text
//!     G(u, v) = (1 / 2 pi) * log( |1 - conj(u) v| / |u - v| ),
//! ```
//!
//! positive on the open disk because
//!
//! ```text
//!     |1 - conj(u) v|^2 - |u - v|^2 = (1 - |u|^2)(1 - |v|^2) > 0,
//! ```
//! and vanishing as either argument approaches the boundary. For nesting
//! statistics the relevant comparison scale at z is the conformal radius
//! CR(z, D) = 1 - |z|^2 of the disk, squeezed between the distance to the
//! boundary and four times that distance by the Koebe quarter theorem.

use crate::{Error, Result};

/// Dirichlet Green's function of the unit disk at interior points u, v.
pub fn greens_disk(u: (f64, f64), v: (f64, f64)) -> Result<f64> {
    let nu2 = u.0 * u.0 + u.1 * u.1;
    let nv2 = v.0 * v.0 + v.1 * v.1;
    if !(nu2 < 1.0 && nv2 < 1.0) || !nu2.is_finite() || !nv2.is_finite() {
        return Err(Error::Domain(format!(
            "greens_disk needs interior points; got |u| = {:.6}, |v| = {:.6}",
            nu2.sqrt(),
            nv2.sqrt()
        )));
    }
    let dx = u.0 - v.0;
    let dy = u.1 - v.1;
    let diff2 = dx * dx + dy * dy;
    if diff2 == 0.0 {
        return Err(Error::Singularity(format!(
            "greens_disk diverges on the diagonal; got u = v = ({}, {})",
            u.0, u.1
        )));
    }
    // 1 - conj(u) v, in components.
    let mx = 1.0 - (u.0 * v.0 + u.1 * v.1);
    let my = u.1 * v.0 - u.0 * v.1;
    let mob2 = mx * mx + my * my;
    Ok((mob2 / diff2).ln() / (4.0 * std::f64::consts::PI))
}

/// Distance to the boundary, conformal radius 1 - |z|^2, and the Koebe upper
/// bound 4 (1 - |z|) at an interior point of the unit disk.
pub fn koebe_bounds(z: (f64, f64)) -> Result<(f64, f64, f64)> {
    let n2 = z.0 * z.0 + z.1 * z.1;
    if !(n2 < 1.0) || !n2.is_finite() {
        return Err(Error::Domain(format!(
            "koebe_bounds needs an interior point; got |z| = {:.6}",
            n2.sqrt()
        )));
    }
    let dist = 1.0 - n2.sqrt();
    Ok((dist, 1.0 - n2, 4.0 * dist))
}
