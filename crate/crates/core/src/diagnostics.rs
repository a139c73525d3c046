//! Discrete norms, weighted energies, the per-step balance residual and a
//! decay monitor.
//!
//! All norms use the grid inner product `(a, b) = dx·Σ a_j conj(b_j)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSlice;
use crate::grid::{central_difference, forward_difference};

/// Diagnostics of one time level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2: f64,
    /// Discrete H¹ norm, `sqrt(‖u‖² + ‖D⁺u‖²)`.
    pub h1: f64,
    /// `⟨eˣ, |u|²⟩`
    pub weighted_exp: f64,
    /// `⟨1 + 4x − x³, |u|²⟩`
    pub weighted_q: f64,
    pub conservation_residual: f64,
    pub picard_iters: usize,
}

impl DiagnosticsRecord {
    pub fn measure(t: f64, u: &[Complex64], dx: f64, conservation_residual: f64, picard_iters: usize) -> Self {
        DiagnosticsRecord {
            t,
            l2: discrete_l2(u, dx),
            h1: discrete_h1(u, dx),
            weighted_exp: weighted_norm(u, dx, Weight::Exp),
            weighted_q: weighted_norm(u, dx, Weight::Cubic),
            conservation_residual,
            picard_iters,
        }
    }

    /// `l2² ≤ weighted_exp ≤ e·l2²` and `l2² ≤ weighted_q ≤ 4·l2²`.
    pub fn sandwich_holds(&self, rel_tol: f64) -> bool {
        let l2sq = self.l2 * self.l2;
        let slack = rel_tol * l2sq;
        self.l2 >= 0.0
            && self.h1 >= self.l2 * (1.0 - rel_tol)
            && self.weighted_exp >= l2sq - slack
            && self.weighted_exp <= std::f64::consts::E * l2sq + slack
            && self.weighted_q >= l2sq - slack
            && self.weighted_q <= 4.0 * l2sq + slack
    }
}

/// `sqrt(dx·Σ|u_j|²)`
pub fn discrete_l2(u: &[Complex64], dx: f64) -> f64 {
    (dx * u.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

/// `sqrt(‖u‖² + ‖D⁺u‖²)`
pub fn discrete_h1(u: &[Complex64], dx: f64) -> f64 {
    let l2 = discrete_l2(u, dx);
    let grad = discrete_l2(&forward_difference(u, dx), dx);
    (l2 * l2 + grad * grad).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    /// `eˣ`
    Exp,
    /// `q(x) = 1 + 4x − x³`
    Cubic,
}

impl Weight {
    pub fn at(&self, x: f64) -> f64 {
        match self {
            Weight::Exp => x.exp(),
            Weight::Cubic => 1.0 + 4.0 * x - x * x * x,
        }
    }
}

/// `dx·Σ w(x_j)|u_j|²` with `x_j = j·dx`.
pub fn weighted_norm(u: &[Complex64], dx: f64, weight: Weight) -> f64 {
    dx * u
        .iter()
        .enumerate()
        .map(|(j, z)| weight.at(j as f64 * dx) * z.norm_sqr())
        .sum::<f64>()
}

/// `Re (a, b)` with the grid inner product.
pub fn real_inner(a: &[Complex64], b: &[Complex64], dx: f64) -> f64 {
    dx * a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum::<f64>()
}

/// `|(‖uⁿ⁺¹‖² − ‖uⁿ‖²)/(2Δt) + Re(L∘D uⁿ, w)|`
///
/// Zero (to the fixed-point tolerance) for every accepted step of the
/// homogeneous problem; a forcing term adds `Re(J, w)` that is not
/// accounted for here.
pub fn conservation_residual(
    u_n: &[Complex64],
    u_next: &[Complex64],
    w_mid: &[Complex64],
    coeffs: &CoefficientSlice,
    dx: f64,
    dt: f64,
) -> f64 {
    let before = discrete_l2(u_n, dx).powi(2);
    let after = discrete_l2(u_next, dx).powi(2);
    let du = central_difference(u_n, dx);
    let advected: Vec<Complex64> = du.iter().zip(&coeffs.advection).map(|(d, l)| d * *l).collect();
    ((after - before) / (2.0 * dt) + real_inner(&advected, w_mid, dx)).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayReport {
    /// Whether `weighted_q` never increases after the burn-in.
    pub is_monotone_decreasing: bool,
    /// Least-squares slope of `ln(l2²)` against `t`.
    pub fitted_rate: f64,
    pub samples_used: usize,
}

/// Fraction of records discarded before fitting.
pub const DECAY_BURN_IN: f64 = 0.1;

/// Observational fit of exponential decay; never a pass/fail verdict.
/// Returns `None` for fewer than 10 records.
pub fn decay_monitor(records: &[DiagnosticsRecord]) -> Option<DecayReport> {
    if records.len() < 10 {
        return None;
    }
    let skip = (records.len() as f64 * DECAY_BURN_IN).floor() as usize;
    let kept = &records[skip..];
    let is_monotone_decreasing = kept.windows(2).all(|w| w[1].weighted_q <= w[0].weighted_q);

    let pts: Vec<(f64, f64)> = kept
        .iter()
        .filter(|r| r.l2 > 0.0)
        .map(|r| (r.t, (r.l2 * r.l2).ln()))
        .collect();
    let fitted_rate = if pts.len() < 2 {
        0.0
    } else {
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        if sxx > 0.0 {
            sxy / sxx
        } else {
            0.0
        }
    };
    Some(DecayReport {
        is_monotone_decreasing,
        fitted_rate,
        samples_used: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn l2_by_hand() {
        assert_eq!(discrete_l2(&[Complex64::ZERO; 5], 0.1), 0.0);
        assert_eq!(discrete_l2(&[c(0.0), c(1.0), c(0.0)], 0.5), 0.5f64.sqrt());
    }

    /// Riemann sums of |√2 sech ξ|² on [−20, 20] approach ∫ 2 sech² = 4 tanh 20.
    #[test]
    fn l2_converges_to_continuum_norm() {
        let exact = (4.0 * 20f64.tanh()).sqrt();
        let mut last = f64::INFINITY;
        for m in [50, 100, 200, 400] {
            let h = 40.0 / m as f64;
            let u: Vec<Complex64> = (0..=m).map(|j| c(2f64.sqrt() / (-20.0 + j as f64 * h).cosh())).collect();
            let err = (discrete_l2(&u, h) - exact).abs();
            assert!(err < last || err < 1e-12);
            last = err;
        }
        assert!(last < 1e-10, "{last}");
    }

    #[test]
    fn h1_of_zero_and_of_a_plateau() {
        assert_eq!(discrete_h1(&[Complex64::ZERO; 7], 0.2), 0.0);
        // plateau of ones with the pinned zeros: jumps only at both ends
        let g = GridSpec::new(10).unwrap();
        let mut u = vec![c(1.0); g.len()];
        u[0] = Complex64::ZERO;
        u[9] = Complex64::ZERO;
        u[10] = Complex64::ZERO;
        let dx = g.dx();
        let l2sq = dx * 8.0;
        let gradsq = dx * 2.0 / (dx * dx);
        assert!((discrete_h1(&u, dx) - (l2sq + gradsq).sqrt()).abs() < 1e-12);
    }

    /// ∫₀¹ (sin πx)² + (π cos πx)² dx = (1 + π²)/2
    #[test]
    fn h1_converges_for_smooth_data() {
        let exact = ((1.0 + std::f64::consts::PI.powi(2)) / 2.0).sqrt();
        let errs: Vec<f64> = [100, 200, 400]
            .iter()
            .map(|&m| {
                let dx = 1.0 / m as f64;
                let u: Vec<Complex64> = (0..m).map(|j| c((std::f64::consts::PI * j as f64 * dx).sin())).collect();
                (discrete_h1(&u, dx) - exact).abs()
            })
            .collect();
        assert!(errs[2] < errs[1] && errs[1] < errs[0]);
        assert!(errs[2] < 1e-3);
    }

    #[test]
    fn weighted_by_hand() {
        assert_eq!(weighted_norm(&[Complex64::ZERO; 3], 0.5, Weight::Cubic), 0.0);
        let v = weighted_norm(&[c(0.0), c(1.0), c(0.0)], 0.5, Weight::Cubic);
        assert!((v - 1.4375).abs() < 1e-15);
    }

    #[test]
    fn conservation_residual_of_zero_state() {
        let g = GridSpec::new(8).unwrap();
        let coeffs = crate::coefficients::evaluate_coefficients(&crate::domain::MovingDomain::fixed(0.0, 1.0, 1.0).unwrap(), 0.0, &g).unwrap();
        let z = vec![Complex64::ZERO; g.len()];
        assert_eq!(conservation_residual(&z, &z, &z, &coeffs, g.dx(), 0.1), 0.0);
    }

    fn records_from(f: impl Fn(f64) -> f64, n: usize) -> Vec<DiagnosticsRecord> {
        (0..n)
            .map(|k| {
                let t = 0.1 * k as f64;
                let l2 = f(t);
                DiagnosticsRecord {
                    t,
                    l2,
                    h1: l2,
                    weighted_exp: l2 * l2,
                    weighted_q: l2 * l2,
                    conservation_residual: 0.0,
                    picard_iters: 0,
                }
            })
            .collect()
    }

    #[test]
    fn decay_of_constant_sequence() {
        let r = decay_monitor(&records_from(|_| 2.0, 50)).unwrap();
        assert!(r.fitted_rate.abs() < 1e-12);
        assert!(r.is_monotone_decreasing);
    }

    #[test]
    fn decay_of_exact_exponential() {
        let r = decay_monitor(&records_from(|t| (-0.5 * t).exp(), 50)).unwrap();
        assert!((r.fitted_rate + 1.0).abs() < 1e-6, "{}", r.fitted_rate);
        assert!(r.is_monotone_decreasing);
        assert_eq!(r.samples_used, 45);
    }

    #[test]
    fn decay_needs_ten_records() {
        assert!(decay_monitor(&records_from(|_| 1.0, 9)).is_none());
    }

    #[test]
    fn sandwich_on_random_vectors() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..200 {
            let m = rng.random_range(8..60);
            let dx = 1.0 / m as f64;
            let u: Vec<Complex64> = (0..=m)
                .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
                .collect();
            let r = DiagnosticsRecord::measure(0.0, &u, dx, 0.0, 0);
            assert!(r.sandwich_holds(1e-12), "{r:?}");
        }
    }
}
