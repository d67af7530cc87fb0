//! Backtracking Armijo search shared by every line-search method.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SublevelError};
use crate::problems::Objective;

/// Armijo parameters; `alpha = 0.001`, `beta = 0.7` are the defaults used
/// throughout the benchmark experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchConfig {
    pub alpha: f64,
    pub beta: f64,
    pub t_init: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        LineSearchConfig {
            alpha: 0.001,
            beta: 0.7,
            t_init: 1.0,
            max_backtracks: 100,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(SublevelError::InvalidConfig(format!(
                "alpha must lie in (0, 0.5), got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(SublevelError::InvalidConfig(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if self.t_init <= 0.0 || !self.t_init.is_finite() {
            return Err(SublevelError::InvalidConfig(format!(
                "t_init must be positive, got {}",
                self.t_init
            )));
        }
        Ok(())
    }
}

/// Largest `t` in `{t_init * beta^j}` with
/// `f(x + t d) <= f(x) + alpha t g'd`. A trial point outside the objective
/// domain counts as a failed condition and shrinks `t`; this is how the
/// barrier objective rejects infeasible steps.
///
/// The condition is evaluated on per-sample differences
/// (`Objective::line_probe`), so progress keeps resolving even when the
/// decrease is far below the float granularity of `|f|`, and each trial
/// costs `O(m)` instead of a full evaluation.
///
/// Requires a descent direction (`g'd < 0`). Returns `(t, f(x + t d))`.
pub fn armijo(
    obj: &Objective,
    x: &DVector<f64>,
    d: &DVector<f64>,
    g: &DVector<f64>,
    f_x: f64,
    cfg: &LineSearchConfig,
) -> Result<(f64, f64)> {
    let slope = g.dot(d);
    if slope >= 0.0 {
        return Err(SublevelError::NotDescentDirection(slope));
    }
    let probe = obj.line_probe(x, d)?;
    let mut t = cfg.t_init;
    for _ in 0..=cfg.max_backtracks {
        match probe.delta(t) {
            Ok(delta) if delta <= cfg.alpha * t * slope => return Ok((t, f_x + delta)),
            Ok(_)
            | Err(SublevelError::DomainViolation(_))
            | Err(SublevelError::NonFinite(_)) => t *= cfg.beta,
            Err(e) => return Err(e),
        }
    }
    Err(SublevelError::LineSearchFailed(cfg.max_backtracks))
}

/// The theoretical damped step `t = 1/(1 + lambda)` from the convergence
/// proofs, shrunk only as far as domain feasibility requires.
pub fn damped_step(
    obj: &Objective,
    x: &DVector<f64>,
    d: &DVector<f64>,
    f_x: f64,
    decrement: f64,
    cfg: &LineSearchConfig,
) -> Result<(f64, f64)> {
    let probe = obj.line_probe(x, d)?;
    let mut t = 1.0 / (1.0 + decrement);
    for _ in 0..=cfg.max_backtracks {
        match probe.delta(t) {
            Ok(delta) => return Ok((t, f_x + delta)),
            Err(SublevelError::DomainViolation(_)) | Err(SublevelError::NonFinite(_)) => {
                t *= cfg.beta
            }
            Err(e) => return Err(e),
        }
    }
    Err(SublevelError::LineSearchFailed(cfg.max_backtracks))
}
