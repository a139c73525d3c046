//! Crank–Nicolson step with Picard resolution of the cubic term.
//!
//! One step solves, for `w = (uⁿ⁺¹ + uⁿ)/2`,
//!
//! ```text
//!     A uⁿ⁺¹ = [Id − (χΔt/2)p³D³ + i(γΔt/2)p²D²] uⁿ − Δt L∘(D uⁿ) − iκΔt |w|²w + Δt J
//!     A      =  Id + (χΔt/2)p³D³ − i(γΔt/2)p²D²
//! ```
//!
//! by the fixed-point sweep `A uᵖ = b((uᵖ⁻¹ + uⁿ)/2)` starting from
//! `u¹ = uⁿ`. The sweep stops when `‖uᵖ − uᵖ⁻¹‖₂ < δ̂` and aborts as soon as
//! the correction stops shrinking.
//!
//! Rows `0`, `M−1` and `M` of the system are replaced by identity rows with
//! zero right-hand side, so every iterate lies in the constrained space and
//! the interior equations hold exactly.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::banded::BandedLu;
use crate::coefficients::{evaluate_coefficients, CoefficientSlice};
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::domain::{MovingDomain, PhysicalField};
use crate::error::{DomainError, IntegrateError, StepError};
use crate::grid::{BandedMatrix, DifferenceOperators, GridSpec, StateVector};

pub const DEFAULT_DELTA_HAT: f64 = 1e-14;
pub const DEFAULT_MAX_PICARD: usize = 100;

/// Constants of `i v_τ + γ v_ξξ + i χ v_ξξξ = κ |v|² v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Equation {
    pub gamma: f64,
    pub chi: f64,
    /// Sign (and scale) of the cubic term, `κ`.
    #[serde(default = "unit")]
    pub nonlinearity: f64,
}

fn unit() -> f64 {
    1.0
}

impl Equation {
    pub fn new(gamma: f64, chi: f64) -> Self {
        Equation {
            gamma,
            chi,
            nonlinearity: 1.0,
        }
    }

    pub fn with_nonlinearity(mut self, kappa: f64) -> Self {
        self.nonlinearity = kappa;
        self
    }
}

/// Time at which the width-dependent coefficients of step `n` are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CoeffTime {
    #[default]
    #[serde(rename = "tn")]
    AtTn,
    #[serde(rename = "midpoint")]
    AtMidpoint,
}

impl CoeffTime {
    pub fn as_str(&self) -> &'static str {
        match self {
            CoeffTime::AtTn => "tn",
            CoeffTime::AtMidpoint => "midpoint",
        }
    }
}

impl std::str::FromStr for CoeffTime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tn" => Ok(CoeffTime::AtTn),
            "midpoint" => Ok(CoeffTime::AtMidpoint),
            other => Err(format!("unknown coefficient time `{other}` (expected `tn` or `midpoint`)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub equation: Equation,
    pub dt: f64,
    pub delta_hat: f64,
    pub max_picard: usize,
    pub coeff_time: CoeffTime,
}

impl SchemeConfig {
    pub fn new(equation: Equation, dt: f64) -> Self {
        SchemeConfig {
            equation,
            dt,
            delta_hat: DEFAULT_DELTA_HAT,
            max_picard: DEFAULT_MAX_PICARD,
            coeff_time: CoeffTime::AtTn,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let e = &self.equation;
        if !(e.gamma.is_finite() && e.chi.is_finite() && e.nonlinearity.is_finite()) {
            return Err("equation constants must be finite".into());
        }
        if !(self.dt > 0.0 && self.dt < 1.0) {
            return Err(format!("dt must lie in (0, 1), got {}", self.dt));
        }
        if !(self.delta_hat > 0.0) {
            return Err(format!("delta_hat must be positive, got {}", self.delta_hat));
        }
        if self.max_picard < 2 {
            return Err(format!("max_picard must be at least 2, got {}", self.max_picard));
        }
        Ok(())
    }
}

/// Outcome of one Picard sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Index of the accepted iterate (the initial guess is iterate 1).
    pub iterations: usize,
    /// Last ratio of successive corrections; 0 when fewer than two
    /// corrections were computed.
    pub final_contraction_ratio: f64,
    /// Size of the last correction.
    pub residual: f64,
}

/// `J(x, t)` on the computational interval.
pub type Forcing = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

/// `A = Id + (χΔt/2)p³D³ − i(γΔt/2)p²D²`, pentadiagonal of order `M+1`.
pub fn assemble_left_matrix(cfg: &SchemeConfig, coeffs: &CoefficientSlice, ops: &DifferenceOperators) -> BandedMatrix<Complex64> {
    combine(cfg, coeffs, ops, 1.0)
}

/// `Id − (χΔt/2)p³D³ + i(γΔt/2)p²D²` when `sign = −1`, the left matrix
/// when `sign = +1`.
fn combine(cfg: &SchemeConfig, coeffs: &CoefficientSlice, ops: &DifferenceOperators, sign: f64) -> BandedMatrix<Complex64> {
    let half = 0.5 * cfg.dt;
    let third = sign * cfg.equation.chi * half * coeffs.third_order_scale();
    let second = Complex64::new(0.0, -sign * cfg.equation.gamma * half * coeffs.second_order_scale());
    let n = ops.third.order();
    let mut a = BandedMatrix::zeros(n, 2, 2);
    for i in 0..n {
        for j in ops.third.row_span(i) {
            let mut v = Complex64::new(third * ops.third.get(i, j), 0.0) + second * ops.second.get(i, j);
            if i == j {
                v += 1.0;
            }
            a.set(i, j, v);
        }
    }
    a
}

/// The part of the right-hand side that does not depend on the iterate:
/// `[Id − (χΔt/2)p³D³ + i(γΔt/2)p²D²]uⁿ − Δt L∘(D uⁿ) + Δt J`.
fn linear_rhs(
    cfg: &SchemeConfig,
    coeffs: &CoefficientSlice,
    ops: &DifferenceOperators,
    u_n: &[Complex64],
    forcing: Option<&[Complex64]>,
) -> Vec<Complex64> {
    let explicit = combine(cfg, coeffs, ops, -1.0);
    let mut b = explicit.matvec(u_n);
    let du = ops.first.matvec(u_n);
    for (j, bj) in b.iter_mut().enumerate() {
        *bj -= cfg.dt * coeffs.advection[j] * du[j];
    }
    if let Some(f) = forcing {
        for (bj, fj) in b.iter_mut().zip(f) {
            *bj += cfg.dt * fj;
        }
    }
    b
}

fn add_cubic(cfg: &SchemeConfig, b: &mut [Complex64], w: &[Complex64]) {
    let factor = Complex64::new(0.0, -cfg.equation.nonlinearity * cfg.dt);
    for (bj, wj) in b.iter_mut().zip(w) {
        *bj += factor * wj.norm_sqr() * wj;
    }
}

/// Full right-hand side for a given midpoint value `w`.
pub fn assemble_right_side(
    cfg: &SchemeConfig,
    coeffs: &CoefficientSlice,
    ops: &DifferenceOperators,
    u_n: &StateVector,
    w: &[Complex64],
    forcing: Option<&[Complex64]>,
) -> Vec<Complex64> {
    let mut b = linear_rhs(cfg, coeffs, ops, u_n.values(), forcing);
    add_cubic(cfg, &mut b, w);
    b
}

fn pin_rows(a: &mut BandedMatrix<Complex64>, grid: &GridSpec) {
    for i in grid.pinned() {
        for j in a.row_span(i) {
            a.set(i, j, if i == j { Complex64::ONE } else { Complex64::ZERO });
        }
    }
}

fn pin_values(v: &mut [Complex64], grid: &GridSpec) {
    for i in grid.pinned() {
        v[i] = Complex64::ZERO;
    }
}

/// Result of one accepted step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: StateVector,
    pub report: StepReport,
    /// Coefficients used by the step.
    pub coefficients: CoefficientSlice,
}

/// Advances states on a fixed grid and domain.
#[derive(Clone)]
pub struct Stepper {
    cfg: SchemeConfig,
    domain: MovingDomain,
    grid: GridSpec,
    ops: DifferenceOperators,
    forcing: Option<Forcing>,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper")
            .field("cfg", &self.cfg)
            .field("domain", &self.domain)
            .field("grid", &self.grid)
            .field("forcing", &self.forcing.is_some())
            .finish()
    }
}

impl Stepper {
    pub fn new(cfg: SchemeConfig, domain: MovingDomain, grid: GridSpec) -> Self {
        Stepper {
            cfg,
            domain,
            grid,
            ops: DifferenceOperators::new(&grid),
            forcing: None,
        }
    }

    pub fn with_forcing(mut self, forcing: Option<Forcing>) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn operators(&self) -> &DifferenceOperators {
        &self.ops
    }

    pub fn coefficients_for_step(&self, t_n: f64) -> Result<CoefficientSlice, DomainError> {
        let t = match self.cfg.coeff_time {
            CoeffTime::AtTn => t_n,
            CoeffTime::AtMidpoint => t_n + 0.5 * self.cfg.dt,
        };
        evaluate_coefficients(&self.domain, t, &self.grid)
    }

    fn forcing_samples(&self, t_n: f64) -> Option<Vec<Complex64>> {
        let f = self.forcing.as_ref()?;
        let t_next = t_n + self.cfg.dt;
        let mut v: Vec<Complex64> = self.grid.nodes().map(|x| 0.5 * (f(x, t_n) + f(x, t_next))).collect();
        pin_values(&mut v, &self.grid);
        Some(v)
    }

    /// One time step from `u_n` at `t_n`.
    pub fn step(&self, u_n: &StateVector, t_n: f64) -> Result<StepOutcome, StepError> {
        let coeffs = self.coefficients_for_step(t_n)?;
        let mut a = assemble_left_matrix(&self.cfg, &coeffs, &self.ops);
        pin_rows(&mut a, &self.grid);
        let lu = BandedLu::factor(&a)?;

        let forcing = self.forcing_samples(t_n);
        let mut base = linear_rhs(&self.cfg, &coeffs, &self.ops, u_n.values(), forcing.as_deref());
        pin_values(&mut base, &self.grid);

        let dx = self.grid.dx();
        let un = u_n.values();
        let mut prev = un.to_vec();
        let mut prev_correction: Option<f64> = None;
        let mut ratio = 0.0;
        let mut w = vec![Complex64::ZERO; un.len()];
        let mut b = vec![Complex64::ZERO; un.len()];

        for p in 2..=self.cfg.max_picard {
            for j in 0..un.len() {
                w[j] = 0.5 * (prev[j] + un[j]);
            }
            b.copy_from_slice(&base);
            add_cubic(&self.cfg, &mut b, &w);
            pin_values(&mut b, &self.grid);
            lu.solve_in_place(&mut b)?;
            pin_values(&mut b, &self.grid);

            let correction = (dx * b.iter().zip(&prev).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>()).sqrt();
            std::mem::swap(&mut prev, &mut b);

            if correction < self.cfg.delta_hat {
                return Ok(StepOutcome {
                    state: StateVector::project(prev).expect("length checked by caller"),
                    report: StepReport {
                        iterations: p,
                        final_contraction_ratio: ratio,
                        residual: correction,
                    },
                    coefficients: coeffs,
                });
            }
            if let Some(last) = prev_correction {
                ratio = correction / last;
                if ratio >= 1.0 {
                    return Err(StepError::ContractionFailure { iteration: p, ratio });
                }
            }
            prev_correction = Some(correction);
        }
        Err(StepError::MaxPicardExceeded {
            max: self.cfg.max_picard,
            last_correction: prev_correction.unwrap_or(f64::NAN),
        })
    }
}

/// Everything needed to run one integration.
#[derive(Clone)]
pub struct Problem {
    pub domain: MovingDomain,
    pub grid: GridSpec,
    pub initial: StateVector,
    pub steps: usize,
    pub forcing: Option<Forcing>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("domain", &self.domain)
            .field("grid", &self.grid)
            .field("steps", &self.steps)
            .field("forcing", &self.forcing.is_some())
            .finish_non_exhaustive()
    }
}

/// Per-step hook. `step` is 0 for the initial state.
pub trait StepObserver {
    fn observe(&mut self, step: usize, t: f64, state: &StateVector, report: Option<&StepReport>);
}

impl StepObserver for () {
    fn observe(&mut self, _: usize, _: f64, _: &StateVector, _: Option<&StepReport>) {}
}

impl<F: FnMut(usize, f64, &StateVector, Option<&StepReport>)> StepObserver for F {
    fn observe(&mut self, step: usize, t: f64, state: &StateVector, report: Option<&StepReport>) {
        self(step, t, state, report)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub final_state: StateVector,
    pub final_time: f64,
    /// One record per time level, `steps + 1` in total.
    pub records: Vec<DiagnosticsRecord>,
    pub reports: Vec<StepReport>,
}

/// Runs `problem.steps` steps of size `cfg.dt` from `t = 0`.
pub fn integrate(problem: &Problem, cfg: &SchemeConfig, observer: &mut dyn StepObserver) -> Result<Trajectory, IntegrateError> {
    let fail = |step: usize, t: f64, source: StepError, records: Vec<DiagnosticsRecord>| IntegrateError {
        step,
        t,
        source,
        records,
    };
    let grid = problem.grid;
    if let Err(e) = problem.initial.check_len(&grid) {
        return Err(fail(0, 0.0, StepError::Domain(DomainError::Invalid(e.to_string())), Vec::new()));
    }
    let stepper = Stepper::new(*cfg, problem.domain, grid).with_forcing(problem.forcing.clone());
    let dx = grid.dx();

    let mut u = problem.initial.clone();
    let mut records = Vec::with_capacity(problem.steps + 1);
    let mut reports = Vec::with_capacity(problem.steps);
    records.push(DiagnosticsRecord::measure(0.0, u.values(), dx, 0.0, 0));
    observer.observe(0, 0.0, &u, None);

    let mut t = 0.0;
    for n in 0..problem.steps {
        let t_n = n as f64 * cfg.dt;
        let outcome = match stepper.step(&u, t_n) {
            Ok(o) => o,
            Err(e) => return Err(fail(n + 1, t_n, e, records)),
        };
        t = (n + 1) as f64 * cfg.dt;
        let w: Vec<Complex64> = u
            .values()
            .iter()
            .zip(outcome.state.values())
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let balance = diagnostics::conservation_residual(u.values(), outcome.state.values(), &w, &outcome.coefficients, dx, cfg.dt);
        u = outcome.state;
        records.push(DiagnosticsRecord::measure(t, u.values(), dx, balance, outcome.report.iterations));
        observer.observe(n + 1, t, &u, Some(&outcome.report));
        reports.push(outcome.report);
    }
    Ok(Trajectory {
        final_state: u,
        final_time: t,
        records,
        reports,
    })
}

/// Physical coordinates of the grid at time `t`; values are carried over
/// unchanged.
pub fn map_to_physical(u: &StateVector, domain: &MovingDomain, t: f64) -> Result<PhysicalField, DomainError> {
    let s = domain.eval(t)?;
    let n = u.len();
    let dx = 1.0 / (n - 1) as f64;
    let xi = (0..n).map(|j| s.alpha + s.width() * (j as f64 * dx)).collect();
    Ok(PhysicalField {
        xi,
        values: u.values().to_vec(),
    })
}
