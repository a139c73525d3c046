//! Moving endpoints and the map between the physical interval
//! `[α(τ), β(τ)]` and the computational interval `[0, 1]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::DomainError;

/// Default number of samples used by [`MovingDomain::validate`].
pub const DEFAULT_VALIDATION_SAMPLES: usize = 10_000;

/// A closed family of endpoint trajectories with analytic derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryProfile {
    /// `value`
    Constant { value: f64 },
    /// `slope·τ + intercept`
    Linear { slope: f64, intercept: f64 },
    /// `offset + amplitude·sin(omega·τ)`
    Sinusoidal {
        offset: f64,
        amplitude: f64,
        omega: f64,
    },
    /// `slope·|τ − kink| + offset`
    PiecewiseAbsolute { slope: f64, kink: f64, offset: f64 },
}

impl BoundaryProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            BoundaryProfile::Constant { value } => value,
            BoundaryProfile::Linear { slope, intercept } => slope * t + intercept,
            BoundaryProfile::Sinusoidal {
                offset,
                amplitude,
                omega,
            } => offset + amplitude * (omega * t).sin(),
            BoundaryProfile::PiecewiseAbsolute {
                slope,
                kink,
                offset,
            } => slope * (t - kink).abs() + offset,
        }
    }

    /// Time derivative. At the kink of a piecewise-absolute profile the
    /// right-sided derivative is returned.
    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            BoundaryProfile::Constant { .. } => 0.0,
            BoundaryProfile::Linear { slope, .. } => slope,
            BoundaryProfile::Sinusoidal {
                amplitude, omega, ..
            } => amplitude * omega * (omega * t).cos(),
            BoundaryProfile::PiecewiseAbsolute { slope, kink, .. } => {
                if t >= kink {
                    slope
                } else {
                    -slope
                }
            }
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            BoundaryProfile::Constant { value } => value.is_finite(),
            BoundaryProfile::Linear { slope, intercept } => slope.is_finite() && intercept.is_finite(),
            BoundaryProfile::Sinusoidal {
                offset,
                amplitude,
                omega,
            } => offset.is_finite() && amplitude.is_finite() && omega.is_finite(),
            BoundaryProfile::PiecewiseAbsolute {
                slope,
                kink,
                offset,
            } => slope.is_finite() && kink.is_finite() && offset.is_finite(),
        }
    }
}

/// Endpoint positions and velocities at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryState {
    pub alpha: f64,
    pub beta: f64,
    pub dalpha: f64,
    pub dbeta: f64,
}

impl BoundaryState {
    pub fn width(&self) -> f64 {
        self.beta - self.alpha
    }
}

/// Outcome of the admissibility check `alpha0 ≤ β(τ) − α(τ) ≤ beta0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainCheck {
    Ok,
    Violation { t: f64, width: f64 },
}

impl DomainCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, DomainCheck::Ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovingDomain {
    pub alpha: BoundaryProfile,
    pub beta: BoundaryProfile,
    /// Lower bound on the width.
    pub alpha0: f64,
    /// Upper bound on the width.
    pub beta0: f64,
    pub horizon: f64,
}

impl MovingDomain {
    pub fn new(
        alpha: BoundaryProfile,
        beta: BoundaryProfile,
        alpha0: f64,
        beta0: f64,
        horizon: f64,
    ) -> Result<Self, DomainError> {
        let domain = MovingDomain {
            alpha,
            beta,
            alpha0,
            beta0,
            horizon,
        };
        domain.check_parameters()?;
        Ok(domain)
    }

    /// Fixed interval `[left, right]` on `[0, horizon]`.
    pub fn fixed(left: f64, right: f64, horizon: f64) -> Result<Self, DomainError> {
        let width = right - left;
        MovingDomain::new(
            BoundaryProfile::Constant { value: left },
            BoundaryProfile::Constant { value: right },
            0.5 * width,
            2.0 * width,
            horizon,
        )
    }

    pub fn check_parameters(&self) -> Result<(), DomainError> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(DomainError::Invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(DomainError::Invalid(format!("alpha0 must be positive, got {}", self.alpha0)));
        }
        if !(self.beta0 >= self.alpha0 && self.beta0.is_finite()) {
            return Err(DomainError::Invalid(format!(
                "beta0 must be finite and at least alpha0, got {}",
                self.beta0
            )));
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(DomainError::Invalid("boundary profile has a non-finite parameter".into()));
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<(), DomainError> {
        // step times n·dt may overshoot the horizon by rounding
        let slack = 1e-9 * self.horizon.max(1.0);
        if t.is_nan() || t < -slack || t > self.horizon + slack {
            return Err(DomainError::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<BoundaryState, DomainError> {
        self.check_time(t)?;
        Ok(BoundaryState {
            alpha: self.alpha.value(t),
            beta: self.beta.value(t),
            dalpha: self.alpha.derivative(t),
            dbeta: self.beta.derivative(t),
        })
    }

    /// Checks the width bounds on `samples` equally spaced times in
    /// `[0, horizon]` and reports the first violation.
    pub fn validate(&self, samples: usize) -> DomainCheck {
        let samples = samples.max(2);
        let step = self.horizon / (samples - 1) as f64;
        for k in 0..samples {
            let t = if k + 1 == samples { self.horizon } else { k as f64 * step };
            let width = self.beta.value(t) - self.alpha.value(t);
            if !(width >= self.alpha0 && width <= self.beta0) {
                return DomainCheck::Violation { t, width };
            }
        }
        DomainCheck::Ok
    }

    /// `x = (ξ − α(t)) / (β(t) − α(t))`
    pub fn physical_to_computational(&self, xi: f64, t: f64) -> Result<f64, DomainError> {
        let s = self.eval(t)?;
        let width = s.width();
        if width <= 0.0 {
            return Err(DomainError::SingularWidth { t, width });
        }
        let slack = 1e-12 * width;
        if !(xi >= s.alpha - slack && xi <= s.beta + slack) {
            return Err(DomainError::OutsideInterval {
                xi,
                t,
                alpha: s.alpha,
                beta: s.beta,
            });
        }
        Ok((xi - s.alpha) / width)
    }

    /// `ξ = α(t) + (β(t) − α(t))·x`
    pub fn computational_to_physical(&self, x: f64, t: f64) -> Result<f64, DomainError> {
        let s = self.eval(t)?;
        Ok(s.alpha + s.width() * x)
    }
}

/// A complex field sampled at physical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    pub xi: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl PhysicalField {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}
