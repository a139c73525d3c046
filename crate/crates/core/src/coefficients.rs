//! Coefficients of the equation after mapping the moving interval onto
//! `[0, 1]`:
//!
//! ```text
//!     u_t − iγ p² u_xx + χ p³ u_xxx + L(x,t) u_x + iκ|u|²u = 0
//! ```
//!
//! with `p = 1/(β − α)` and `L(x,t) = −α′p + x·(ln p)′`.

use crate::domain::MovingDomain;
use crate::error::DomainError;
use crate::grid::GridSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSlice {
    pub t: f64,
    /// Inverse width `1/(β − α)`.
    pub p: f64,
    /// `(ln p)′ = −(β′ − α′)·p`
    pub log_rate: f64,
    /// Advection field `L(x_j, t)` at every node.
    pub advection: Vec<f64>,
}

impl CoefficientSlice {
    /// Scale of the third-derivative term, `p³`.
    pub fn third_order_scale(&self) -> f64 {
        self.p * self.p * self.p
    }

    /// Scale of the second-derivative term, `p²`.
    pub fn second_order_scale(&self) -> f64 {
        self.p * self.p
    }
}

pub fn evaluate_coefficients(domain: &MovingDomain, t: f64, grid: &GridSpec) -> Result<CoefficientSlice, DomainError> {
    let s = domain.eval(t)?;
    let width = s.width();
    if !(width > 0.0) {
        return Err(DomainError::SingularWidth { t, width });
    }
    let p = 1.0 / width;
    let log_rate = -(s.dbeta - s.dalpha) * p;
    let drift = -s.dalpha * p;
    let advection = grid.nodes().map(|x| drift + x * log_rate).collect();
    Ok(CoefficientSlice {
        t,
        p,
        log_rate,
        advection,
    })
}
