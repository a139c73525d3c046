//! Phase-and-shift change of unknown that removes the second-derivative
//! term:
//!
//! ```text
//!     v(ξ, τ) = e^{i d₂ ξ + i d₃ τ} w(ξ − d₁ τ, τ)
//! ```
//!
//! turns `i v_τ + γ v_ξξ + i χ v_ξξξ = κ|v|²v` into
//! `w_s + χ w_yyy + i κ |w|² w = 0`. Offered as post-processing on sampled
//! fields together with discrete residuals of both equations.

use num_complex::Complex64;

use crate::domain::PhysicalField;
use crate::error::GaugeError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeConstants {
    /// Coordinate drift speed.
    pub d1: f64,
    /// Spatial phase rate.
    pub d2: f64,
    /// Temporal phase rate.
    pub d3: f64,
}

pub fn gauge_constants(gamma: f64, chi: f64) -> Result<GaugeConstants, GaugeError> {
    if chi == 0.0 || !chi.is_finite() || !gamma.is_finite() {
        return Err(GaugeError::Degenerate);
    }
    Ok(GaugeConstants {
        d1: gamma * gamma / (3.0 * chi),
        d2: gamma / (3.0 * chi),
        d3: -2.0 * gamma.powi(3) / (27.0 * chi * chi),
    })
}

/// Coefficients of `w`, `w_y` and `w_yy` left after substituting the
/// change of unknown with constants `c` (each multiplied by the common
/// exponential). All three vanish for the constants of [`gauge_constants`].
pub fn leftover_coefficients(gamma: f64, chi: f64, c: &GaugeConstants) -> [Complex64; 3] {
    let i = Complex64::I;
    [
        Complex64::from(-c.d3 - gamma * c.d2 * c.d2 + chi * c.d2.powi(3)),
        i * (-c.d1 + 2.0 * gamma * c.d2 - 3.0 * chi * c.d2 * c.d2),
        Complex64::from(gamma - 3.0 * chi * c.d2),
    ]
}

fn check_shape(f: &PhysicalField) -> Result<(), GaugeError> {
    if f.xi.len() != f.values.len() {
        return Err(GaugeError::Shape {
            xi: f.xi.len(),
            values: f.values.len(),
        });
    }
    Ok(())
}

/// `v → w`: shift coordinates by `−d₁τ` and strip the phase.
pub fn gauge_forward(v: &PhysicalField, gamma: f64, chi: f64, tau: f64) -> Result<PhysicalField, GaugeError> {
    check_shape(v)?;
    let c = gauge_constants(gamma, chi)?;
    let (xi, values) = v
        .xi
        .iter()
        .zip(&v.values)
        .map(|(&x, &z)| (x - c.d1 * tau, z * Complex64::from_polar(1.0, -(c.d2 * x + c.d3 * tau))))
        .unzip();
    Ok(PhysicalField { xi, values })
}

/// `w → v`, the exact inverse of [`gauge_forward`].
pub fn gauge_inverse(w: &PhysicalField, gamma: f64, chi: f64, tau: f64) -> Result<PhysicalField, GaugeError> {
    check_shape(w)?;
    let c = gauge_constants(gamma, chi)?;
    let (xi, values) = w
        .xi
        .iter()
        .zip(&w.values)
        .map(|(&y, &z)| {
            let x = y + c.d1 * tau;
            (x, z * Complex64::from_polar(1.0, c.d2 * x + c.d3 * tau))
        })
        .unzip();
    Ok(PhysicalField { xi, values })
}

/// Restricts uniformly sampled time levels to the nodes they share.
///
/// Every level must have the spacing of the first one and be offset from
/// it by a whole number of cells. Returns the shared coordinates and one
/// value row per level.
pub fn align_on_common_grid(levels: &[PhysicalField]) -> Result<(Vec<f64>, Vec<Vec<Complex64>>), GaugeError> {
    let Some(first) = levels.first() else {
        return Ok((Vec::new(), Vec::new()));
    };
    for f in levels {
        check_shape(f)?;
    }
    if first.xi.len() < 2 {
        return Err(GaugeError::Misaligned { level: 0 });
    }
    let dx = first.xi[1] - first.xi[0];
    let mut offsets = Vec::with_capacity(levels.len());
    for (k, f) in levels.iter().enumerate() {
        let shift = (f.xi[0] - first.xi[0]) / dx;
        let whole = shift.round();
        let spacing_ok = f.xi.len() < 2 || ((f.xi[1] - f.xi[0]) - dx).abs() <= 1e-9 * dx.abs();
        if (shift - whole).abs() > 1e-6 || !spacing_ok {
            return Err(GaugeError::Misaligned { level: k });
        }
        offsets.push(whole as i64);
    }
    let start = *offsets.iter().max().unwrap();
    let end = levels
        .iter()
        .zip(&offsets)
        .map(|(f, o)| o + f.xi.len() as i64 - 1)
        .min()
        .unwrap();
    if end < start {
        return Ok((Vec::new(), vec![Vec::new(); levels.len()]));
    }
    let rows = levels
        .iter()
        .zip(&offsets)
        .map(|(f, o)| f.values[(start - o) as usize..=(end - o) as usize].to_vec())
        .collect();
    let base = (start - offsets[0]) as usize;
    Ok((first.xi[base..=(end - offsets[0]) as usize].to_vec(), rows))
}

/// RMS over interior time levels of `‖∂ₜw + a·D²w + b·D³w + iκ|w|²w‖`,
/// with a centred time difference and the spatial norm over nodes at
/// least two cells from either end.
fn space_time_residual(window: &[Vec<Complex64>], second: Complex64, third: f64, kappa: f64, dx: f64, dt: f64) -> f64 {
    if window.len() < 3 {
        return 0.0;
    }
    let n = window[0].len();
    if n < 5 {
        return 0.0;
    }
    let i = Complex64::I;
    let mut total = 0.0;
    for k in 1..window.len() - 1 {
        let (prev, cur, next) = (&window[k - 1], &window[k], &window[k + 1]);
        let mut level = 0.0;
        for j in 2..n - 2 {
            let dt_w = (next[j] - prev[j]) / (2.0 * dt);
            let d2 = (cur[j + 1] - 2.0 * cur[j] + cur[j - 1]) / (dx * dx);
            let d3 = (cur[j + 2] - 2.0 * cur[j + 1] + 2.0 * cur[j - 1] - cur[j - 2]) / (2.0 * dx.powi(3));
            let r = dt_w + second * d2 + third * d3 + i * kappa * cur[j].norm_sqr() * cur[j];
            level += r.norm_sqr();
        }
        total += dx * level;
    }
    (total / (window.len() - 2) as f64).sqrt()
}

/// Discrete residual of `w_s + χ w_yyy + iκ|w|²w = 0` on a uniform
/// space-time window (rows are time levels).
pub fn kdv_form_residual(window: &[Vec<Complex64>], chi: f64, kappa: f64, dx: f64, dt: f64) -> f64 {
    space_time_residual(window, Complex64::ZERO, chi, kappa, dx, dt)
}

/// Discrete residual of `v_τ − iγ v_ξξ + χ v_ξξξ + iκ|v|²v = 0`, the
/// original equation, on the same stencils as [`kdv_form_residual`].
pub fn hnls_residual(window: &[Vec<Complex64>], gamma: f64, chi: f64, kappa: f64, dx: f64, dt: f64) -> f64 {
    space_time_residual(window, -Complex64::I * gamma, chi, kappa, dx, dt)
}
