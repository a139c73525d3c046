//! Independent reference computations: dense Gaussian elimination and an
//! explicit four-stage Runge–Kutta method of lines for the transformed
//! equation. The integrator reuses the difference matrices but none of the
//! Crank–Nicolson machinery.

use num_complex::Complex64;

use crate::coefficients::evaluate_coefficients;
use crate::diagnostics::{discrete_l2, real_inner};
use crate::error::{OracleError, SolveError};
use crate::grid::{DifferenceOperators, GridSpec, StateVector};
use crate::stepper::{Equation, Problem};

/// Limit on the balance-corrected L² drift of a reference run.
pub const DRIFT_LIMIT: f64 = 1e-6;

/// Gaussian elimination with partial pivoting on a dense matrix.
pub fn dense_solve<T>(a: &[Vec<T>], b: &[Complex64]) -> Result<Vec<Complex64>, SolveError>
where
    T: Copy + Into<Complex64>,
{
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(SolveError::DimensionMismatch { order: a.len(), len: n });
    }
    let mut m: Vec<Vec<Complex64>> = a.iter().map(|r| r.iter().map(|&v| v.into()).collect()).collect();
    let mut x = b.to_vec();
    let scale = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].norm().total_cmp(&m[j][k].norm()))
            .unwrap();
        if !(m[p][k].norm() > 1e-14 * scale) {
            return Err(SolveError::Singular { column: k });
        }
        m.swap(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f == Complex64::ZERO {
                continue;
            }
            for j in k..n {
                let v = m[k][j];
                m[i][j] -= f * v;
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= m[i][j] * x[j];
        }
        x[i] = acc / m[i][i];
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub fine_m: usize,
    pub fine_dt: f64,
}

impl OracleConfig {
    pub const STAGES: usize = 4;

    /// Step size inside the RK4 stability region for the given problem,
    /// from a Gershgorin bound on the linear operator plus the cubic term
    /// at amplitude `max_amplitude`.
    pub fn stable_dt(equation: &Equation, grid: &GridSpec, max_p: f64, max_advection: f64, max_amplitude: f64) -> f64 {
        let dx = grid.dx();
        let radius = equation.gamma.abs() * max_p.powi(2) * 4.0 / (dx * dx)
            + equation.chi.abs() * max_p.powi(3) * 3.0 / dx.powi(3)
            + max_advection.abs() / dx
            + equation.nonlinearity.abs() * max_amplitude.powi(2);
        // RK4 reaches 2.83 on the imaginary axis; keep a margin
        0.5 * 2.8 / radius.max(1e-300)
    }
}

/// Snapshots of a reference run at the requested step indices.
#[derive(Debug, Clone)]
pub struct ReferenceRun {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub grid: GridSpec,
    /// Balance-corrected relative L² drift over the run.
    pub drift: f64,
}

struct Rhs<'a> {
    equation: &'a Equation,
    ops: &'a DifferenceOperators,
    problem: &'a Problem,
    grid: GridSpec,
}

impl Rhs<'_> {
    /// `u_t = iγp²D²u − χp³D³u − L∘Du − iκ|u|²u + J`, pinned.
    fn eval(&self, t: f64, u: &[Complex64]) -> Result<Vec<Complex64>, OracleError> {
        let c = evaluate_coefficients(&self.problem.domain, t, &self.grid)?;
        let d1 = self.ops.first.matvec(u);
        let d2 = self.ops.second.matvec(u);
        let d3 = self.ops.third.matvec(u);
        let e = self.equation;
        let i = Complex64::I;
        let mut out: Vec<Complex64> = (0..u.len())
            .map(|j| {
                i * e.gamma * c.second_order_scale() * d2[j] - e.chi * c.third_order_scale() * d3[j] - c.advection[j] * d1[j]
                    - i * e.nonlinearity * u[j].norm_sqr() * u[j]
            })
            .collect();
        if let Some(f) = &self.problem.forcing {
            for (j, x) in self.grid.nodes().enumerate() {
                out[j] += f(x, t);
            }
        }
        for k in self.grid.pinned() {
            out[k] = Complex64::ZERO;
        }
        Ok(out)
    }

    /// `d‖u‖²/dt` predicted by the advection and forcing terms.
    fn balance(&self, t: f64, u: &[Complex64]) -> Result<f64, OracleError> {
        let c = evaluate_coefficients(&self.problem.domain, t, &self.grid)?;
        let dx = self.grid.dx();
        let d1 = self.ops.first.matvec(u);
        let adv: Vec<Complex64> = d1.iter().zip(&c.advection).map(|(d, l)| d * *l).collect();
        let mut rate = -2.0 * real_inner(&adv, u, dx);
        if let Some(f) = &self.problem.forcing {
            let mut j: Vec<Complex64> = self.grid.nodes().map(|x| f(x, t)).collect();
            for k in self.grid.pinned() {
                j[k] = Complex64::ZERO;
            }
            rate += 2.0 * real_inner(&j, u, dx);
        }
        Ok(rate)
    }
}

/// Integrates `problem` (on its own grid) with RK4 at `fine_dt` for
/// `total_time`, recording the state at each time in `at`.
///
/// `problem.grid` is taken as the fine grid; `cfg.fine_m` must match it.
pub fn reference_integrate(
    problem: &Problem,
    equation: &Equation,
    cfg: &OracleConfig,
    total_time: f64,
    at: &[f64],
) -> Result<ReferenceRun, OracleError> {
    let grid = problem.grid;
    if grid.m() != cfg.fine_m {
        return Err(OracleError::Config(format!(
            "problem grid has M = {} but fine_m = {}",
            grid.m(),
            cfg.fine_m
        )));
    }
    if !(cfg.fine_dt > 0.0) || !(total_time >= 0.0) {
        return Err(OracleError::Config("fine_dt must be positive and total_time non-negative".into()));
    }
    let ops = DifferenceOperators::new(&grid);
    let rhs = Rhs {
        equation,
        ops: &ops,
        problem,
        grid,
    };
    let dx = grid.dx();
    let steps = (total_time / cfg.fine_dt).ceil() as usize;
    let dt = if steps == 0 { 0.0 } else { total_time / steps as f64 };
    let mut targets: Vec<(usize, f64)> = at.iter().map(|&t| ((t / dt.max(f64::MIN_POSITIVE)).round() as usize, t)).collect();
    targets.sort_by_key(|p| p.0);

    let mut u = problem.initial.values().to_vec();
    let norm0 = discrete_l2(&u, dx).powi(2);
    let mut expected = norm0;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut next_target = 0;
    let mut record = |n: usize, u: &[Complex64], times: &mut Vec<f64>, states: &mut Vec<StateVector>| {
        while next_target < targets.len() && targets[next_target].0 == n {
            times.push(n as f64 * dt);
            states.push(StateVector::project(u.to_vec()).expect("grid sized"));
            next_target += 1;
        }
    };
    record(0, &u, &mut times, &mut states);

    let mut rate_prev = rhs.balance(0.0, &u)?;
    let mut tmp = vec![Complex64::ZERO; u.len()];
    for n in 0..steps {
        let t = n as f64 * dt;
        let k1 = rhs.eval(t, &u)?;
        for j in 0..u.len() {
            tmp[j] = u[j] + 0.5 * dt * k1[j];
        }
        let k2 = rhs.eval(t + 0.5 * dt, &tmp)?;
        for j in 0..u.len() {
            tmp[j] = u[j] + 0.5 * dt * k2[j];
        }
        let k3 = rhs.eval(t + 0.5 * dt, &tmp)?;
        for j in 0..u.len() {
            tmp[j] = u[j] + dt * k3[j];
        }
        let k4 = rhs.eval(t + dt, &tmp)?;
        for j in 0..u.len() {
            u[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(OracleError::NonFinite { t: t + dt });
        }
        let rate_next = rhs.balance(t + dt, &u)?;
        expected += 0.5 * dt * (rate_prev + rate_next);
        rate_prev = rate_next;
        record(n + 1, &u, &mut times, &mut states);
    }

    let actual = discrete_l2(&u, dx).powi(2);
    let drift = if norm0 > 0.0 { (actual - expected).abs() / norm0 } else { actual };
    if drift > DRIFT_LIMIT {
        return Err(OracleError::Drift { drift, limit: DRIFT_LIMIT });
    }
    Ok(ReferenceRun {
        times,
        states,
        grid,
        drift,
    })
}
