//! Scenario files: equation, moving domain, grid, scheme parameters,
//! initial data and requested outputs, parsed strictly from TOML.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{BoundaryProfile, MovingDomain};
use crate::error::ConfigError;
use crate::grid::{GridSpec, StateVector};
use crate::stepper::{CoeffTime, Equation, Forcing, Problem, SchemeConfig, DEFAULT_DELTA_HAT, DEFAULT_MAX_PICARD};

/// Width bounds used when a scenario omits them, as multiples of the
/// initial width.
pub const DEFAULT_LOWER_WIDTH_FACTOR: f64 = 0.1;
pub const DEFAULT_UPPER_WIDTH_FACTOR: f64 = 10.0;

/// `amplitude · sech((ξ − center)/width) · e^{i(wavenumber·ξ + phase)}`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SechPulse {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub wavenumber: f64,
    #[serde(default)]
    pub phase: f64,
}

impl SechPulse {
    pub fn at(&self, xi: f64) -> Complex64 {
        let envelope = self.amplitude / ((xi - self.center) / self.width).cosh();
        Complex64::from_polar(envelope, self.wavenumber * xi + self.phase)
    }
}

/// Initial data in physical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    SechSoliton(SechPulse),
    TwoSoliton { first: SechPulse, second: SechPulse },
    Gaussian(GaussianPulse),
    Zero,
}

/// `amplitude · exp(−((ξ − center)/width)²) · e^{i(wavenumber·ξ + phase)}`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPulse {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub wavenumber: f64,
    #[serde(default)]
    pub phase: f64,
}

impl InitialCondition {
    pub fn at(&self, xi: f64) -> Complex64 {
        match self {
            InitialCondition::SechSoliton(p) => p.at(xi),
            InitialCondition::TwoSoliton { first, second } => first.at(xi) + second.at(xi),
            InitialCondition::Gaussian(g) => {
                let r = (xi - g.center) / g.width;
                Complex64::from_polar(g.amplitude * (-r * r).exp(), g.wavenumber * xi + g.phase)
            }
            InitialCondition::Zero => Complex64::ZERO,
        }
    }

    fn check(&self) -> Result<(), ConfigError> {
        let widths: Vec<f64> = match self {
            InitialCondition::SechSoliton(p) => vec![p.width],
            InitialCondition::TwoSoliton { first, second } => vec![first.width, second.width],
            InitialCondition::Gaussian(g) => vec![g.width],
            InitialCondition::Zero => vec![],
        };
        if widths.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(ConfigError::invalid("initial.width", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Source term in computational coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    /// `amplitude · sin(mode·π·x)`, constant in time.
    SineMode { amplitude: f64, mode: f64 },
}

impl ForcingSpec {
    pub fn build(&self) -> Forcing {
        match *self {
            ForcingSpec::SineMode { amplitude, mode } => {
                Arc::new(move |x: f64, _t: f64| Complex64::new(amplitude * (mode * std::f64::consts::PI * x).sin(), 0.0))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// Final time.
    pub horizon: f64,
    pub alpha: BoundaryProfile,
    pub beta: BoundaryProfile,
    /// Lower width bound; defaults to a tenth of the initial width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    /// Upper width bound; defaults to ten times the initial width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub m: usize,
}

fn default_delta_hat() -> f64 {
    DEFAULT_DELTA_HAT
}

fn default_max_picard() -> usize {
    DEFAULT_MAX_PICARD
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub dt: f64,
    #[serde(default = "default_delta_hat")]
    pub delta_hat: f64,
    #[serde(default = "default_max_picard")]
    pub max_picard: usize,
    #[serde(default)]
    pub coeff_time: CoeffTime,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "yes")]
    pub norms_csv: bool,
    /// Times at which to write physical-coordinate snapshots.
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            norms_csv: true,
            snapshots: Vec::new(),
        }
    }
}

/// Family of runs whose left endpoint starts at `x0`, moves linearly to
/// `turn_position` at `turn_time` and returns, and whose right profile is
/// the scenario's with its offset replaced by each `xf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub x0: f64,
    pub xf: Vec<f64>,
    pub turn_time: f64,
    pub turn_position: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Same scheme on a grid refined by `refine`.
    #[default]
    SelfRefined,
    /// Explicit reference integrator.
    Oracle,
}

fn default_refine() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    /// Interval counts of the space study.
    pub space_levels: Vec<usize>,
    /// Step size shared by all space levels.
    pub space_dt: f64,
    /// Step sizes of the time study.
    pub time_levels: Vec<f64>,
    /// Interval count shared by all time levels.
    pub time_m: usize,
    #[serde(default)]
    pub reference: ReferenceKind,
    #[serde(default = "default_refine")]
    pub refine: usize,
    /// Step of the explicit reference; required with `reference = "oracle"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_dt: Option<f64>,
}

/// A validated scenario. Serialises back to the file format with all
/// defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub equation: Equation,
    pub domain: DomainSpec,
    pub grid: GridSection,
    pub scheme: SchemeSection,
    pub initial: InitialCondition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<ForcingSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSpec>,
}

/// Steps of size `dt` that land on `horizon`.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize, ConfigError> {
    let steps = (horizon / dt).round();
    if steps < 1.0 || (steps * dt - horizon).abs() > 1e-9 * horizon.max(1.0) {
        return Err(ConfigError::invalid("scheme.dt", format!("dt = {dt} does not divide the horizon {horizon}")));
    }
    Ok(steps as usize)
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        s.resolve()?;
        Ok(s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    /// Fills defaults and checks every field.
    pub fn resolve(&mut self) -> Result<(), ConfigError> {
        let d = &mut self.domain;
        if !(d.horizon > 0.0 && d.horizon.is_finite()) {
            return Err(ConfigError::invalid("domain.horizon", "must be positive"));
        }
        let w0 = d.beta.value(0.0) - d.alpha.value(0.0);
        if !(w0 > 0.0) {
            return Err(ConfigError::invalid("domain", format!("initial width {w0} is not positive")));
        }
        d.alpha0.get_or_insert(DEFAULT_LOWER_WIDTH_FACTOR * w0);
        d.beta0.get_or_insert(DEFAULT_UPPER_WIDTH_FACTOR * w0);
        self.moving_domain()?;
        GridSpec::new(self.grid.m).map_err(|e| ConfigError::invalid("grid.m", e.to_string()))?;
        self.scheme_config().validate().map_err(|r| ConfigError::invalid("scheme", r))?;
        step_count(self.domain.horizon, self.scheme.dt)?;
        for (name, v) in [("equation.gamma", self.equation.gamma), ("equation.chi", self.equation.chi), ("equation.nonlinearity", self.equation.nonlinearity)] {
            if !v.is_finite() {
                return Err(ConfigError::invalid(name, "must be finite"));
            }
        }
        self.initial.check()?;
        if self.output.snapshots.iter().any(|t| !(*t >= 0.0 && *t <= self.domain.horizon)) {
            return Err(ConfigError::invalid("output.snapshots", "times must lie in [0, horizon]"));
        }
        if let Some(sw) = &self.sweep {
            if sw.xf.is_empty() {
                return Err(ConfigError::invalid("sweep.xf", "needs at least one value"));
            }
            if !(sw.turn_time > 0.0) {
                return Err(ConfigError::invalid("sweep.turn_time", "must be positive"));
            }
            if !matches!(self.domain.beta, BoundaryProfile::Sinusoidal { .. } | BoundaryProfile::Constant { .. }) {
                return Err(ConfigError::invalid("domain.beta", "sweeps need a constant or sinusoidal right profile"));
            }
        }
        if let Some(c) = &self.convergence {
            if c.space_levels.len() < 2 || c.time_levels.len() < 2 {
                return Err(ConfigError::invalid("convergence", "need at least two space and two time levels"));
            }
            if c.refine < 2 {
                return Err(ConfigError::invalid("convergence.refine", "must be at least 2"));
            }
            if c.reference == ReferenceKind::Oracle && c.oracle_dt.is_none() {
                return Err(ConfigError::invalid("convergence.oracle_dt", "required for the oracle reference"));
            }
            for &m in &c.space_levels {
                GridSpec::new(m).map_err(|e| ConfigError::invalid("convergence.space_levels", e.to_string()))?;
            }
            GridSpec::new(c.time_m).map_err(|e| ConfigError::invalid("convergence.time_m", e.to_string()))?;
            step_count(self.domain.horizon, c.space_dt)?;
            for &dt in &c.time_levels {
                step_count(self.domain.horizon, dt)?;
            }
        }
        Ok(())
    }

    pub fn moving_domain(&self) -> Result<MovingDomain, ConfigError> {
        let d = &self.domain;
        let w0 = d.beta.value(0.0) - d.alpha.value(0.0);
        MovingDomain::new(
            d.alpha,
            d.beta,
            d.alpha0.unwrap_or(DEFAULT_LOWER_WIDTH_FACTOR * w0),
            d.beta0.unwrap_or(DEFAULT_UPPER_WIDTH_FACTOR * w0),
            d.horizon,
        )
        .map_err(|e| ConfigError::invalid("domain", e.to_string()))
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            equation: self.equation,
            dt: self.scheme.dt,
            delta_hat: self.scheme.delta_hat,
            max_picard: self.scheme.max_picard,
            coeff_time: self.scheme.coeff_time,
        }
    }

    /// Initial data transported to the computational grid with `m`
    /// intervals; the pinned entries are zeroed.
    pub fn initial_state(&self, m: usize) -> Result<StateVector, ConfigError> {
        let grid = GridSpec::new(m).map_err(|e| ConfigError::invalid("grid.m", e.to_string()))?;
        let (a, b) = (self.domain.alpha.value(0.0), self.domain.beta.value(0.0));
        let u = StateVector::sample(&grid, |x| self.initial.at(a + (b - a) * x));
        if u.values().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(ConfigError::invalid("initial", "initial condition is not finite at every node"));
        }
        Ok(u)
    }

    /// Integration problem at resolution `(m, dt)` over the full horizon.
    pub fn problem(&self, m: usize, dt: f64) -> Result<Problem, ConfigError> {
        Ok(Problem {
            domain: self.moving_domain()?,
            grid: GridSpec::new(m).map_err(|e| ConfigError::invalid("grid.m", e.to_string()))?,
            initial: self.initial_state(m)?,
            steps: step_count(self.domain.horizon, dt)?,
            forcing: self.forcing.as_ref().map(ForcingSpec::build),
        })
    }

    /// The problem at the scenario's own resolution.
    pub fn default_problem(&self) -> Result<Problem, ConfigError> {
        self.problem(self.grid.m, self.scheme.dt)
    }

    /// One scenario per sweep row, with the domain replaced by the row's
    /// endpoints. Width bounds are recomputed from each row's initial width.
    pub fn sweep_rows(&self) -> Result<Vec<(f64, f64, Scenario)>, ConfigError> {
        let sw = self.sweep.as_ref().ok_or_else(|| ConfigError::invalid("sweep", "section missing"))?;
        sw.xf
            .iter()
            .map(|&xf| {
                let mut s = self.clone();
                s.name = format!("{}_xf{}", self.name, xf);
                s.sweep = None;
                s.convergence = None;
                s.domain.alpha = BoundaryProfile::PiecewiseAbsolute {
                    slope: (sw.x0 - sw.turn_position) / sw.turn_time,
                    kink: sw.turn_time,
                    offset: sw.turn_position,
                };
                s.domain.beta = match self.domain.beta {
                    BoundaryProfile::Sinusoidal { amplitude, omega, .. } => BoundaryProfile::Sinusoidal {
                        offset: xf,
                        amplitude,
                        omega,
                    },
                    _ => BoundaryProfile::Constant { value: xf },
                };
                s.domain.alpha0 = None;
                s.domain.beta0 = None;
                s.resolve()?;
                Ok((sw.x0, xf, s))
            })
            .collect()
    }
}
