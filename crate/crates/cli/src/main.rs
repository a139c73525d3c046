//! `hnls`: batch driver for the moving-domain solver.
//!
//! ```text
//! hnls run <config>       one integration: norms.csv, snapshots, run.json
//! hnls sweep <config>     domain-length sweep: sweep.csv plus per-row norms
//! hnls converge <config>  refinement study: convergence.json
//! hnls validate <config>  parse, resolve and check the domain; print the result
//! ```
//!
//! Exit codes: 0 ok, 2 configuration error, 3 Picard map not contracting,
//! 4 Picard iteration limit, 5 domain violation, 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use hnls_core::domain::DEFAULT_VALIDATION_SAMPLES;
use hnls_core::error::{ConfigError, IntegrateError, StepError};
use hnls_core::output::{self, RunMetadata, RunSummary};
use hnls_core::stepper::{map_to_physical, StepObserver, StepReport};
use hnls_core::study::{checked_integrate, convergence_study, delta_l2_sweep, SweepRow};
use hnls_core::{CoeffTime, DomainCheck, DomainError, Error, MovingDomain, PhysicalField, Scenario, StateVector};

#[derive(Parser, Debug)]
#[command(name = "hnls", version, about = "Moving-domain higher-order NLS solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one scenario.
    Run { config: PathBuf },
    /// Run every row of the scenario's `[sweep]` section.
    Sweep { config: PathBuf },
    /// Measure space and time convergence orders from `[convergence]`.
    Converge { config: PathBuf },
    /// Check a scenario without running it.
    Validate { config: PathBuf },
}

#[derive(Args, Debug)]
struct Flags {
    /// Directory for output files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for sweep and convergence runs (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Sample time of the width-dependent coefficients.
    #[arg(long, global = true, value_parser = parse_coeff_time)]
    coeff_time: Option<CoeffTime>,
    /// Picard stopping tolerance.
    #[arg(long, global = true)]
    delta_hat: Option<f64>,
    /// Picard iteration limit.
    #[arg(long, global = true)]
    max_picard: Option<usize>,
}

fn parse_coeff_time(s: &str) -> Result<CoeffTime, String> {
    s.parse()
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Grid(_) => 2,
        Error::Domain(_) | Error::Violation { .. } => 5,
        Error::Level { source, .. } => exit_code(source),
        Error::Integrate(ie) => match ie.source {
            StepError::ContractionFailure { .. } => 3,
            StepError::MaxPicardExceeded { .. } => 4,
            StepError::Domain(_) => 5,
            StepError::Solve(_) => 1,
        },
        Error::Oracle(_) | Error::Io { .. } => 1,
    }
}

fn integrate_error(e: &Error) -> Option<&IntegrateError> {
    match e {
        Error::Integrate(ie) => Some(ie),
        Error::Level { source, .. } => integrate_error(source),
        _ => None,
    }
}

fn report(e: &Error) {
    let mut msg = format!("error: {e}");
    let mut src = std::error::Error::source(e);
    while let Some(s) = src {
        let cause = s.to_string();
        // most wrappers already quote their cause
        if !msg.contains(&cause) {
            msg.push_str(&format!("\n  caused by: {cause}"));
        }
        src = s.source();
    }
    eprintln!("{msg}");
}

fn load(path: &Path, flags: &Flags) -> Result<Scenario, Error> {
    let mut s = Scenario::load(path)?;
    if let Some(c) = flags.coeff_time {
        s.scheme.coeff_time = c;
    }
    if let Some(d) = flags.delta_hat {
        s.scheme.delta_hat = d;
    }
    if let Some(m) = flags.max_picard {
        s.scheme.max_picard = m;
    }
    s.resolve()?;
    Ok(s)
}

/// Collects the states requested as snapshots while the run advances.
struct Snapshots {
    domain: MovingDomain,
    dt: f64,
    /// `(step index, requested time)`
    wanted: Vec<(usize, f64)>,
    taken: Vec<(f64, PhysicalField)>,
    error: Option<DomainError>,
}

impl StepObserver for Snapshots {
    fn observe(&mut self, step: usize, _t: f64, state: &StateVector, _: Option<&StepReport>) {
        for &(k, t) in &self.wanted {
            if k == step {
                match map_to_physical(state, &self.domain, step as f64 * self.dt) {
                    Ok(f) => self.taken.push((t, f)),
                    Err(e) => self.error = Some(e),
                }
            }
        }
    }
}

fn snapshot_name(index: usize, t: f64) -> String {
    format!("snapshot_{index:02}_t{t}.csv")
}

struct Outcome {
    files: Vec<String>,
    failure: Option<Error>,
}

fn run(s: &Scenario, out: &Path) -> Result<Outcome, Error> {
    let meta = RunMetadata::new("run", s);
    let problem = s.default_problem()?;
    let cfg = s.scheme_config();
    let mut snaps = Snapshots {
        domain: problem.domain,
        dt: cfg.dt,
        wanted: s.output.snapshots.iter().map(|&t| ((t / cfg.dt).round() as usize, t)).collect(),
        taken: Vec::new(),
        error: None,
    };
    let result = checked_integrate(&problem, &cfg, &mut snaps);
    if let Some(e) = snaps.error {
        return Err(e.into());
    }
    let mut files = Vec::new();
    let (records, failure) = match result {
        Ok(traj) => (traj.records, None),
        Err(e) => match integrate_error(&e) {
            Some(ie) => (ie.records.clone(), Some(e)),
            None => return Err(e),
        },
    };
    if s.output.norms_csv {
        output::write_norms_csv(&out.join("norms.csv"), &meta, &records)?;
        files.push("norms.csv".to_string());
    }
    for (i, (t, field)) in snaps.taken.iter().enumerate() {
        let name = snapshot_name(i, *t);
        output::write_snapshot(&out.join(&name), &meta, *t, field)?;
        files.push(name);
    }
    if failure.is_none() {
        let last = records.last().expect("initial record");
        let iters = records.iter().map(|r| r.picard_iters).max().unwrap_or(0);
        println!(
            "{}: {} steps to t = {}, l2 {} -> {}, max Picard iterations {}",
            s.name,
            records.len() - 1,
            last.t,
            output::fmt_float(records[0].l2),
            output::fmt_float(last.l2),
            iters
        );
    }
    Ok(Outcome { files, failure })
}

fn sweep(s: &Scenario, out: &Path, jobs: usize) -> Result<Outcome, Error> {
    let meta = RunMetadata::new("sweep", s);
    let rows = delta_l2_sweep(s, &s.scheme_config(), jobs)?;
    let mut files = Vec::new();
    for (row, records) in &rows {
        let name = format!("norms_xf{}.csv", row.xf);
        output::write_norms_csv(&out.join(&name), &meta, records)?;
        files.push(name);
    }
    let table: Vec<SweepRow> = rows.into_iter().map(|(r, _)| r).collect();
    output::write_sweep_table(&out.join("sweep.csv"), &meta, &table)?;
    files.push("sweep.csv".to_string());
    println!("{:>10} {:>10} {:>10} {:>24}", "x0", "xf", "xf-x0", "delta_l2");
    for r in &table {
        println!("{:>10} {:>10} {:>10} {:>24}", r.x0, r.xf, r.length, output::fmt_float(r.delta_l2));
    }
    Ok(Outcome { files, failure: None })
}

fn converge(s: &Scenario, out: &Path, jobs: usize) -> Result<Outcome, Error> {
    let spec = s
        .convergence
        .as_ref()
        .ok_or_else(|| ConfigError::invalid("convergence", "section missing"))?;
    let meta = RunMetadata::new("converge", s);
    let report = convergence_study(s, &s.scheme_config(), spec, jobs)?;
    output::write_convergence_report(&out.join("convergence.json"), &meta, &report)?;
    println!(
        "observed orders: space {:.4}, time {:.4}",
        report.observed_space_order, report.observed_time_order
    );
    Ok(Outcome {
        files: vec!["convergence.json".to_string()],
        failure: None,
    })
}

fn validate(s: &Scenario) -> Result<(), Error> {
    let domain = s.moving_domain()?;
    if let DomainCheck::Violation { t, width } = domain.validate(DEFAULT_VALIDATION_SAMPLES) {
        return Err(Error::Violation { t, width });
    }
    print!("{}", s.to_toml_string());
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let started = Instant::now();
    let (mode, path) = match &cli.command {
        Command::Run { config } => ("run", config),
        Command::Sweep { config } => ("sweep", config),
        Command::Converge { config } => ("converge", config),
        Command::Validate { config } => ("validate", config),
    };
    let s = load(path, &cli.flags)?;
    let out = cli.flags.out_dir.as_path();
    let outcome = match mode {
        "run" => run(&s, out),
        "sweep" => sweep(&s, out, cli.flags.jobs),
        "converge" => converge(&s, out, cli.flags.jobs),
        _ => return validate(&s),
    };
    let (files, failure) = match outcome {
        Ok(o) => (o.files, o.failure),
        Err(e) => (Vec::new(), Some(e)),
    };
    let summary = RunSummary {
        status: if failure.is_some() { "failed" } else { "ok" }.to_string(),
        exit_code: failure.as_ref().map_or(0, |e| exit_code(e) as i32),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        failed_step: failure.as_ref().and_then(integrate_error).map(|ie| ie.step),
        error: failure.as_ref().map(ToString::to_string),
        files,
    };
    output::write_run_summary(&out.join("run.json"), &RunMetadata::new(mode, &s), &summary)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(exit_code(&e))
        }
    }
}
