//! Exit-gate suite. Prints one PASS/FAIL line per criterion and fails the
//! test target when any criterion fails.
//!
//! Run alone with `cargo test -p hnls-cli --test acceptance`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use hnls_core::diagnostics::DiagnosticsRecord;
use hnls_core::gauge::{align_on_common_grid, gauge_constants, gauge_forward, gauge_inverse, hnls_residual, kdv_form_residual};
use hnls_core::grid::{first_derivative, second_derivative, third_derivative};
use hnls_core::scenario::InitialCondition;
use hnls_core::stepper::{integrate, map_to_physical, StepObserver, StepReport};
use hnls_core::study::{convergence_study, delta_l2_sweep};
use hnls_core::{BandedMatrix, BoundaryProfile, GridSpec, PhysicalField, Scenario, StateVector};
use num_complex::Complex64;

// Operators
const OPERATOR_SIZES: [usize; 3] = [8, 50, 200];
const CUBIC_REL_TOL: f64 = 1e-12;
const REFINEMENT: [usize; 4] = [50, 100, 200, 400];
const OPERATOR_ORDER: (f64, f64) = (1.8, 2.2);
// Conservation and balance
const FIXED_STEP_REL_TOL: f64 = 1e-10;
const BALANCE_REL_TOL: f64 = 1e-8;
// Convergence orders
const SPACE_ORDER: (f64, f64) = (1.7, 2.3);
const TIME_ORDER: (f64, f64) = (0.7, 1.3);
// Picard
const MAX_ITERATIONS: usize = 30;
const CONTRACTION_EXIT: i32 = 3;
// Gauge
const GAUGE_ROUND_TRIP_TOL: f64 = 1e-13;
const GAUGE_RESIDUAL_FACTOR: f64 = 10.0;
// Domain-length sweep
const TABLE_DELTA: [f64; 4] = [0.87353, 0.71152, 0.52033, 0.41055];
const TABLE_BAND: f64 = 0.25;
// Norm curve
const FLAT_REL_TOL: f64 = 0.01;
/// Envelope widths between the pulse centre and the boundary at first contact.
const CONTACT_WIDTHS: f64 = 10.0;
// Properties
const SANDWICH_REL_TOL: f64 = 1e-12;

const SHIPPED: [&str; 6] = ["case1", "case2", "case3", "fixed_soliton", "translating", "converge"];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }
}

type Check = Result<Verdict, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

fn scenario(name: &str) -> Result<Scenario, String> {
    Scenario::load(config(name)).map_err(|e| format!("{name}: {e}"))
}

fn hnls() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hnls"))
}

/// Per-run facts gathered while stepping.
#[derive(Default)]
struct Watch {
    closed: bool,
    reports: Vec<StepReport>,
    steps: usize,
}

impl StepObserver for Watch {
    fn observe(&mut self, _: usize, _: f64, state: &StateVector, report: Option<&StepReport>) {
        self.closed &= state.is_in_space();
        self.steps += 1;
        if let Some(r) = report {
            self.reports.push(*r);
        }
    }
}

struct ShippedRun {
    name: &'static str,
    records: Vec<DiagnosticsRecord>,
    watch: Watch,
}

fn run_shipped(name: &'static str) -> Result<ShippedRun, String> {
    let s = scenario(name)?;
    let problem = s.default_problem().map_err(|e| e.to_string())?;
    let mut watch = Watch {
        closed: true,
        ..Watch::default()
    };
    let traj = integrate(&problem, &s.scheme_config(), &mut watch).map_err(|e| format!("{name}: {e}"))?;
    Ok(ShippedRun {
        name,
        records: traj.records,
        watch,
    })
}

fn max_interior_error(op: &BandedMatrix<f64>, grid: &GridSpec, f: impl Fn(f64) -> f64, exact: impl Fn(f64) -> f64, margin: usize) -> f64 {
    let u: Vec<f64> = grid.nodes().map(&f).collect();
    let du = op.matvec(&u);
    (margin..grid.len() - margin)
        .map(|j| (du[j] - exact(grid.node(j))).abs())
        .fold(0.0, f64::max)
}

fn criterion_1() -> Check {
    let mut notes = Vec::new();
    let mut pass = true;
    for m in OPERATOR_SIZES {
        let g = GridSpec::new(m).map_err(|e| e.to_string())?;
        let (d1, d2, d3) = (first_derivative(&g), second_derivative(&g), third_derivative(&g));
        for i in 0..g.len() {
            for j in 0..g.len() {
                pass &= d1.get(i, j) == -d1.get(j, i);
                pass &= d2.get(i, j) == d2.get(j, i);
                pass &= d3.get(i, j) == -d3.get(j, i);
            }
        }
    }
    notes.push(format!("entrywise symmetry for M in {OPERATOR_SIZES:?}: {pass}"));

    // Error relative to the size of the terms the stencil sums, which is
    // where the rounding of an exact formula lives.
    let cubic = |x: f64| 2.0 * x * x * x - x * x + 0.5 * x - 0.25;
    let mut worst: f64 = 0.0;
    for m in OPERATOR_SIZES {
        let g = GridSpec::new(m).map_err(|e| e.to_string())?;
        let d3 = third_derivative(&g);
        let u: Vec<f64> = g.nodes().map(cubic).collect();
        let du = d3.matvec(&u);
        for (j, dj) in du.iter().enumerate().take(g.len() - 2).skip(2) {
            let scale: f64 = d3.row_span(j).map(|k| (d3.get(j, k) * u[k]).abs()).sum();
            worst = worst.max((dj - 12.0).abs() / scale.max(12.0));
        }
    }
    pass &= worst <= CUBIC_REL_TOL;
    notes.push(format!("cubic rel. err {worst:.1e}"));

    type Exact = fn(f64) -> f64;
    type Build = fn(&GridSpec) -> BandedMatrix<f64>;
    let pi = std::f64::consts::PI;
    let cases: [(&str, Build, Exact, usize); 3] = [
        ("D", first_derivative, |x| std::f64::consts::PI * (std::f64::consts::PI * x).cos(), 1),
        ("D2", second_derivative, |x| -(std::f64::consts::PI.powi(2)) * (std::f64::consts::PI * x).sin(), 1),
        ("D3", third_derivative, |x| -(std::f64::consts::PI.powi(3)) * (std::f64::consts::PI * x).cos(), 2),
    ];
    for (label, build, exact, margin) in cases {
        let errs: Vec<f64> = REFINEMENT
            .iter()
            .map(|&m| {
                let g = GridSpec::new(m).unwrap();
                max_interior_error(&build(&g), &g, |x| (pi * x).sin(), exact, margin)
            })
            .collect();
        let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let ok = orders.iter().all(|p| (OPERATOR_ORDER.0..=OPERATOR_ORDER.1).contains(p));
        pass &= ok;
        notes.push(format!("{label} orders {}", fmt_list(&orders, 3)));
    }
    Ok(Verdict::new(pass, notes.join("; ")))
}

fn fmt_list(v: &[f64], digits: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.digits$}")).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn step_changes(records: &[DiagnosticsRecord]) -> f64 {
    records
        .windows(2)
        .map(|w| (w[1].l2.powi(2) - w[0].l2.powi(2)).abs() / w[0].l2.powi(2))
        .fold(0.0, f64::max)
}

fn find<'a>(runs: &'a [ShippedRun], name: &str) -> Result<&'a ShippedRun, String> {
    runs.iter().find(|r| r.name == name).ok_or_else(|| format!("{name} did not run"))
}

fn criterion_2(runs: &[ShippedRun]) -> Check {
    let run = find(runs, "fixed_soliton")?;
    let s = scenario("fixed_soliton")?;
    let setup_ok = s.grid.m == 200 && s.scheme.dt == 1e-3 && run.records.len() == 501 && s.equation.chi == 0.1 && s.equation.gamma == 1.0 && s.scheme.delta_hat == 1e-14;
    let worst = step_changes(&run.records);
    Ok(Verdict::new(
        setup_ok && worst <= FIXED_STEP_REL_TOL,
        format!("max per-step |d(l2^2)|/l2^2 = {worst:.2e} over {} steps (limit {FIXED_STEP_REL_TOL:.0e})", run.records.len() - 1),
    ))
}

fn criterion_3(runs: &[ShippedRun]) -> Check {
    let run = find(runs, "translating")?;
    let s = scenario("translating")?;
    let d = s.moving_domain().map_err(|e| e.to_string())?;
    let widths: Vec<f64> = run.records.iter().map(|r| d.eval(r.t).map(|b| b.width())).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let translating = widths.iter().all(|w| (w - widths[0]).abs() < 1e-12) && s.grid.m == 200 && s.scheme.dt == 1e-3;
    let worst = run
        .records
        .windows(2)
        .map(|w| w[1].conservation_residual / w[0].l2.powi(2))
        .fold(0.0, f64::max);
    Ok(Verdict::new(
        translating && worst <= BALANCE_REL_TOL,
        format!("max relative balance residual {worst:.2e} over {} steps (limit {BALANCE_REL_TOL:.0e})", run.records.len() - 1),
    ))
}

fn criterion_4() -> Check {
    let s = scenario("converge")?;
    let spec = s.convergence.clone().ok_or("converge.toml has no [convergence] section")?;
    let fixed = matches!(s.domain.alpha, BoundaryProfile::Constant { .. }) && matches!(s.domain.beta, BoundaryProfile::Constant { .. });
    let report = convergence_study(&s, &s.scheme_config(), &spec, 0).map_err(|e| e.to_string())?;
    let space = report.observed_space_order;
    let time = report.observed_time_order;
    let errs = |levels: &[hnls_core::study::Level]| levels.iter().map(|l| l.error).collect::<Vec<_>>();
    Ok(Verdict::new(
        fixed
            && spec.reference == hnls_core::scenario::ReferenceKind::Oracle
            && (SPACE_ORDER.0..=SPACE_ORDER.1).contains(&space)
            && (TIME_ORDER.0..=TIME_ORDER.1).contains(&time),
        format!(
            "space order {space:.3} (want {SPACE_ORDER:?}), time order {time:.3} (want {TIME_ORDER:?}); space errors {}, time errors {}",
            fmt_sci(&errs(&report.space)),
            fmt_sci(&errs(&report.time))
        ),
    ))
}

fn criterion_5(runs: &[ShippedRun]) -> Check {
    let mut notes = Vec::new();
    let mut pass = true;
    for run in runs {
        let iters = run.watch.reports.iter().map(|r| r.iterations).max().unwrap_or(0);
        let ratio = run.watch.reports.iter().map(|r| r.final_contraction_ratio).fold(0.0, f64::max);
        pass &= iters <= MAX_ITERATIONS && ratio < 1.0;
        notes.push(format!("{} {iters} it / ratio {ratio:.1e}", run.name));
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let status = hnls()
        .args(["run", config("oversized").to_str().unwrap(), "--out-dir"])
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?
        .status;
    let code = status.code();
    pass &= code == Some(CONTRACTION_EXIT);
    notes.push(format!("oversized step exit code {code:?}"));
    Ok(Verdict::new(pass, notes.join("; ")))
}

fn gauge_scenario(m: usize, levels: usize, dt: f64) -> Result<Scenario, String> {
    let text = format!(
        r#"
name = "gauge"
[equation]
gamma = 3.0
chi = 1.0
nonlinearity = 1.0
[domain]
horizon = {}
alpha = {{ kind = "constant", value = -20.0 }}
beta = {{ kind = "constant", value = 20.0 }}
[grid]
m = {m}
[scheme]
dt = {dt}
[initial]
kind = "sech_soliton"
amplitude = 1.0
center = 0.0
width = 1.0
"#,
        dt * levels as f64
    );
    Scenario::from_toml_str(&text).map_err(|e| e.to_string())
}

fn criterion_6() -> Check {
    let c = gauge_constants(3.0, 1.0).map_err(|e| e.to_string())?;
    let exact = c.d1 == 3.0 && c.d2 == 1.0 && c.d3 == -2.0;

    // The shift d1·dt is exactly one cell, so every level lands on the
    // same lattice.
    let (m, levels) = (2000, 12);
    let dxi = 40.0 / m as f64;
    let dt = dxi / c.d1;
    let s = gauge_scenario(m, levels, dt)?;
    let problem = s.default_problem().map_err(|e| e.to_string())?;
    let domain = problem.domain;
    let mut fields: Vec<PhysicalField> = Vec::new();
    let mut error = None;
    let mut grab = |n: usize, _: f64, u: &StateVector, _: Option<&StepReport>| match map_to_physical(u, &domain, n as f64 * dt) {
        Ok(f) => fields.push(f),
        Err(e) => error = Some(e),
    };
    integrate(&problem, &s.scheme_config(), &mut grab).map_err(|e| e.to_string())?;
    if let Some(e) = error {
        return Err(e.to_string());
    }

    let mut round_trip: f64 = 0.0;
    let mut transformed = Vec::with_capacity(fields.len());
    for (n, f) in fields.iter().enumerate() {
        let tau = n as f64 * dt;
        let w = gauge_forward(f, 3.0, 1.0, tau).map_err(|e| e.to_string())?;
        let back = gauge_inverse(&w, 3.0, 1.0, tau).map_err(|e| e.to_string())?;
        for (a, b) in back.values.iter().zip(&f.values) {
            round_trip = round_trip.max((a - b).norm());
        }
        for (a, b) in back.xi.iter().zip(&f.xi) {
            round_trip = round_trip.max((a - b).abs());
        }
        transformed.push(w);
    }
    let original: Vec<Vec<Complex64>> = fields.iter().map(|f| f.values.clone()).collect();
    let base = hnls_residual(&original, 3.0, 1.0, 1.0, dxi, dt);
    let (_, window) = align_on_common_grid(&transformed).map_err(|e| e.to_string())?;
    let kdv = kdv_form_residual(&window, 1.0, 1.0, dxi, dt);
    Ok(Verdict::new(
        exact && round_trip <= GAUGE_ROUND_TRIP_TOL && kdv <= GAUGE_RESIDUAL_FACTOR * base,
        format!(
            "constants ({}, {}, {}); round trip {round_trip:.1e}; KdV-form residual {kdv:.3e} vs original {base:.3e} (ratio {:.2}, limit {GAUGE_RESIDUAL_FACTOR})",
            c.d1,
            c.d2,
            c.d3,
            kdv / base
        ),
    ))
}

fn criterion_7() -> Check {
    let s = scenario("case2")?;
    let rows = delta_l2_sweep(&s, &s.scheme_config(), 0).map_err(|e| e.to_string())?;
    let deltas: Vec<f64> = rows.iter().map(|(r, _)| r.delta_l2).collect();
    let lengths: Vec<f64> = rows.iter().map(|(r, _)| r.length).collect();
    let increasing_length = lengths.windows(2).all(|w| w[1] > w[0]);
    let monotone = deltas.windows(2).all(|w| w[1] < w[0]);
    let within: Vec<String> = deltas
        .iter()
        .zip(TABLE_DELTA)
        .map(|(d, t)| {
            let rel = d / t - 1.0;
            format!("{d:.3e} vs {t} ({:+.0}%{})", 100.0 * rel, if rel.abs() <= TABLE_BAND { "" } else { ", outside band" })
        })
        .collect();
    Ok(Verdict::new(
        rows.len() == TABLE_DELTA.len() && increasing_length && monotone,
        format!(
            "lengths {lengths:?}; strictly decreasing: {monotone}; reported only: {}",
            within.join(", ")
        ),
    ))
}

fn read_norms(path: &Path) -> Result<(Scenario, Vec<Vec<f64>>), String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let meta = text
        .lines()
        .find_map(|l| l.strip_prefix("# metadata "))
        .ok_or("norms.csv carries no metadata line")?;
    let meta: serde_json::Value = serde_json::from_str(meta).map_err(|e| e.to_string())?;
    let s: Scenario = serde_json::from_value(meta["scenario"].clone()).map_err(|e| e.to_string())?;
    let rows = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse::<f64>().map_err(|e| e.to_string())).collect())
        .collect::<Result<_, _>>()?;
    Ok((s, rows))
}

fn criterion_8() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = hnls()
        .args(["run", config("case1").to_str().unwrap(), "--out-dir"])
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Ok(Verdict::new(false, format!("case1 run failed: {}", String::from_utf8_lossy(&out.stderr))));
    }
    let (s, rows) = read_norms(&dir.path().join("norms.csv"))?;
    let InitialCondition::SechSoliton(pulse) = s.initial else {
        return Err("case1 is not a single soliton".into());
    };
    let domain = s.moving_domain().map_err(|e| e.to_string())?;
    let first_edge = pulse.center - CONTACT_WIDTHS * pulse.width;
    let mut contact = None;
    let mut physical = Vec::with_capacity(rows.len());
    for r in &rows {
        let b = domain.eval(r[0]).map_err(|e| e.to_string())?;
        if contact.is_none() && b.alpha >= first_edge {
            contact = Some(physical.len());
        }
        // norms are taken over [0, 1]; the physical norm carries the width
        physical.push(r[1] * b.width().sqrt());
    }
    let split = contact.unwrap_or(rows.len());
    let p0 = physical[0];
    let drift = physical[..split].iter().map(|p| (p / p0 - 1.0).abs()).fold(0.0, f64::max);
    let flat = drift <= FLAT_REL_TOL;
    let falling = match contact {
        Some(k) => physical.last().copied().unwrap_or(p0) < physical[k],
        None => true,
    };
    let h1_finite = rows.iter().all(|r| r[2].is_finite());
    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[1]), hi.max(r[1])));
    let contact_note = match contact {
        Some(k) => format!("boundary reaches the pulse at t = {}", rows[k][0]),
        None => format!("boundary never reaches the pulse before t = {}", rows.last().map_or(0.0, |r| r[0])),
    };
    Ok(Verdict::new(
        flat && falling && h1_finite,
        format!(
            "{contact_note}; physical l2 drift before contact {drift:.2e} (limit {FLAT_REL_TOL}); decreasing after: {falling}; H1 finite: {h1_finite}; grid l2 column spans [{lo:.4}, {hi:.4}]"
        ),
    ))
}

fn criterion_9(runs: &[ShippedRun]) -> Check {
    let sandwich = runs.iter().all(|r| r.records.iter().all(|rec| rec.sandwich_holds(SANDWICH_REL_TOL)));
    let closed = runs.iter().all(|r| r.watch.closed && r.watch.steps == r.records.len());
    let mut identical = true;
    let mut compared = 0;
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    for d in &dirs {
        let ok = hnls()
            .args(["run", config("fixed_soliton").to_str().unwrap(), "--out-dir"])
            .arg(d.path())
            .output()
            .map_err(|e| e.to_string())?
            .status
            .success();
        identical &= ok;
    }
    for entry in std::fs::read_dir(dirs[0].path()).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let a = std::fs::read(&path).map_err(|e| e.to_string())?;
            let b = std::fs::read(dirs[1].path().join(path.file_name().unwrap())).map_err(|e| e.to_string())?;
            identical &= a == b;
            compared += 1;
        }
    }
    identical &= compared > 0;
    Ok(Verdict::new(
        sandwich && closed && identical,
        format!("sandwich bounds: {sandwich}; constrained space after every step: {closed}; {compared} CSV files byte-identical across reruns: {identical}"),
    ))
}

fn main() {
    let started = Instant::now();
    let shipped: Vec<Result<ShippedRun, String>> = SHIPPED.iter().map(|n| run_shipped(n)).collect();
    let setup_error = shipped.iter().find_map(|r| r.as_ref().err().cloned());
    let runs: Vec<ShippedRun> = shipped.into_iter().filter_map(Result::ok).collect();
    let with_runs = |f: fn(&[ShippedRun]) -> Check| -> Check {
        match &setup_error {
            Some(e) => Err(format!("shipped scenario failed: {e}")),
            None => f(&runs),
        }
    };

    let criteria: Vec<Criterion> = vec![
        ("operator correctness", Box::new(criterion_1)),
        ("fixed-domain L2 conservation", Box::new(|| with_runs(criterion_2))),
        ("moving-domain balance", Box::new(|| with_runs(criterion_3))),
        ("convergence orders", Box::new(criterion_4)),
        ("Picard loop behaviour", Box::new(|| with_runs(criterion_5))),
        ("gauge transform", Box::new(criterion_6)),
        ("domain-length sweep", Box::new(criterion_7)),
        ("case 1 norm curves", Box::new(criterion_8)),
        ("property suite", Box::new(|| with_runs(criterion_9))),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let verdict = check().unwrap_or_else(|e| Verdict::new(false, format!("error: {e}")));
        println!(
            "criterion {} {:<30} {} ({:.1}s) {}",
            k + 1,
            name,
            if verdict.pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            verdict.detail
        );
        if !verdict.pass {
            failed.push(k + 1);
        }
    }
    println!("acceptance finished in {:.1}s", started.elapsed().as_secs_f64());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
