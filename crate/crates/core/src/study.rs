//! Drivers built on [`integrate`]: admissibility-checked runs, the
//! refinement study that measures convergence orders, and the sweep of the
//! L² drop over a family of domains.

use serde::Serialize;

use crate::diagnostics::{discrete_l2, DiagnosticsRecord};
use crate::domain::{DomainCheck, DEFAULT_VALIDATION_SAMPLES};
use crate::error::{ConfigError, Error};
use crate::grid::StateVector;
use crate::oracle::{reference_integrate, OracleConfig};
use crate::par::map_jobs;
use crate::scenario::{ConvergenceSpec, ReferenceKind, Scenario};
use crate::stepper::{integrate, Problem, SchemeConfig, StepObserver, Trajectory};

/// Checks the domain over the whole horizon, then integrates.
pub fn checked_integrate(problem: &Problem, cfg: &SchemeConfig, observer: &mut dyn StepObserver) -> Result<Trajectory, Error> {
    if let DomainCheck::Violation { t, width } = problem.domain.validate(DEFAULT_VALIDATION_SAMPLES) {
        return Err(Error::Violation { t, width });
    }
    Ok(integrate(problem, cfg, observer)?)
}

/// `max_n (‖u⁰‖ − ‖uⁿ‖)`: the deepest drop of the norm below its initial
/// value; zero when the norm never falls.
pub fn delta_l2(records: &[DiagnosticsRecord]) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    records.iter().map(|r| first.l2 - r.l2).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub m: usize,
    pub dx: f64,
    pub dt: f64,
    /// Final-time discrete L² distance to the reference.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub reference: ReferenceKind,
    pub reference_m: usize,
    pub space: Vec<Level>,
    pub time: Vec<Level>,
    pub observed_space_order: f64,
    pub observed_time_order: f64,
}

/// Least-squares slope of `ln(error)` against `ln(step)`.
pub fn fitted_order(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(h, e)| *h > 0.0 && *e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Discrete L² distance between a coarse state and every `factor`-th node
/// of a fine one.
pub fn restricted_distance(coarse: &StateVector, fine: &StateVector, factor: usize) -> f64 {
    let diff: Vec<_> = coarse
        .values()
        .iter()
        .enumerate()
        .map(|(j, z)| z - fine.values()[j * factor])
        .collect();
    discrete_l2(&diff, 1.0 / (coarse.len() - 1) as f64)
}

#[derive(Debug, Clone, Copy)]
enum Job {
    Scheme { m: usize, dt: f64 },
    Oracle { m: usize, fine_dt: f64 },
}

impl Job {
    fn label(&self) -> String {
        match *self {
            Job::Scheme { m, dt } => format!("level M = {m}, dt = {dt}"),
            Job::Oracle { m, fine_dt } => format!("reference M = {m}, dt = {fine_dt}"),
        }
    }

    fn run(&self, scenario: &Scenario, base: &SchemeConfig) -> Result<StateVector, Error> {
        match *self {
            Job::Scheme { m, dt } => {
                let problem = scenario.problem(m, dt)?;
                let cfg = SchemeConfig { dt, ..*base };
                Ok(checked_integrate(&problem, &cfg, &mut ())?.final_state)
            }
            Job::Oracle { m, fine_dt } => {
                let problem = scenario.problem(m, scenario.scheme.dt)?;
                let horizon = scenario.domain.horizon;
                let run = reference_integrate(&problem, &base.equation, &OracleConfig { fine_m: m, fine_dt }, horizon, &[horizon])?;
                Ok(run.states.into_iter().next().expect("final snapshot requested"))
            }
        }
    }
}

/// Space study at fixed `space_dt` over `space_levels`, time study at fixed
/// `time_m` over `time_levels`, each against its own reference. Independent
/// integrations run on up to `jobs` threads.
pub fn convergence_study(scenario: &Scenario, base: &SchemeConfig, spec: &ConvergenceSpec, jobs: usize) -> Result<ConvergenceReport, Error> {
    let finest = *spec.space_levels.iter().max().expect("validated non-empty");
    let reference_m = spec.refine * finest;
    if let Some(m) = spec.space_levels.iter().find(|&&m| !reference_m.is_multiple_of(m)) {
        return Err(ConfigError::invalid("convergence.space_levels", format!("M = {m} does not divide the reference M = {reference_m}")).into());
    }
    let smallest_dt = spec.time_levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let (space_ref, time_ref) = match spec.reference {
        ReferenceKind::SelfRefined => (
            Job::Scheme {
                m: reference_m,
                dt: spec.space_dt,
            },
            Job::Scheme {
                m: spec.time_m,
                dt: smallest_dt / spec.refine as f64,
            },
        ),
        ReferenceKind::Oracle => {
            let fine_dt = spec.oracle_dt.expect("validated");
            (Job::Oracle { m: reference_m, fine_dt }, Job::Oracle { m: spec.time_m, fine_dt })
        }
    };
    let mut jobs_list = vec![space_ref, time_ref];
    jobs_list.extend(spec.space_levels.iter().map(|&m| Job::Scheme { m, dt: spec.space_dt }));
    jobs_list.extend(spec.time_levels.iter().map(|&dt| Job::Scheme { m: spec.time_m, dt }));

    let results = map_jobs(&jobs_list, jobs, |job| job.run(scenario, base).map_err(|e| e.within(job.label())));
    let mut states = Vec::with_capacity(results.len());
    for r in results {
        states.push(r?);
    }

    let ns = spec.space_levels.len();
    let space: Vec<Level> = spec
        .space_levels
        .iter()
        .zip(&states[2..2 + ns])
        .map(|(&m, u)| Level {
            m,
            dx: 1.0 / m as f64,
            dt: spec.space_dt,
            error: restricted_distance(u, &states[0], reference_m / m),
        })
        .collect();
    let time: Vec<Level> = spec
        .time_levels
        .iter()
        .zip(&states[2 + ns..])
        .map(|(&dt, u)| Level {
            m: spec.time_m,
            dx: 1.0 / spec.time_m as f64,
            dt,
            error: restricted_distance(u, &states[1], 1),
        })
        .collect();
    Ok(ConvergenceReport {
        reference: spec.reference,
        reference_m,
        observed_space_order: fitted_order(&space.iter().map(|l| (l.dx, l.error)).collect::<Vec<_>>()),
        observed_time_order: fitted_order(&time.iter().map(|l| (l.dt, l.error)).collect::<Vec<_>>()),
        space,
        time,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub x0: f64,
    pub xf: f64,
    pub length: f64,
    pub delta_l2: f64,
}

/// One run per row of the scenario's sweep at the scenario's resolution.
/// Also returns each row's diagnostics.
pub fn delta_l2_sweep(scenario: &Scenario, base: &SchemeConfig, jobs: usize) -> Result<Vec<(SweepRow, Vec<DiagnosticsRecord>)>, Error> {
    let rows = scenario.sweep_rows()?;
    let results = map_jobs(&rows, jobs, |(x0, xf, row)| {
        let run = || -> Result<_, Error> {
            let problem = row.default_problem()?;
            let traj = checked_integrate(&problem, base, &mut ())?;
            Ok((
                SweepRow {
                    x0: *x0,
                    xf: *xf,
                    length: xf - x0,
                    delta_l2: delta_l2(&traj.records),
                },
                traj.records,
            ))
        };
        run().map_err(|e| e.within(format!("sweep row x0 = {x0}, xf = {xf}")))
    });
    results.into_iter().collect()
}
