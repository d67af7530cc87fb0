//! Gradient descent, heavy-ball accelerated descent, and Adam.

use nalgebra::DVector;

use crate::error::{Result, SublevelError};
use crate::optimizers::line_search::{armijo, LineSearchConfig};
use crate::optimizers::StepEvent;
use crate::problems::Objective;

pub(crate) fn step_gd(
    obj: &Objective,
    x: &DVector<f64>,
    f: f64,
    g: &DVector<f64>,
    ls: &LineSearchConfig,
) -> Result<StepEvent> {
    let d = -g;
    let (t, f_new) = armijo(obj, x, &d, g, f, ls)?;
    Ok(StepEvent::Moved {
        x: x + d * t,
        f: f_new,
        step: t,
        decrement_sq: None,
        sigma_floor: None,
    })
}

/// Heavy-ball extrapolation `y = x_k + momentum (x_k - x_{k-1})` followed by
/// an Armijo gradient step from `y`. With momentum zero this reduces to
/// plain gradient descent.
pub(crate) fn step_agd(
    obj: &Objective,
    x: &DVector<f64>,
    momentum: f64,
    x_prev: &mut Option<DVector<f64>>,
    ls: &LineSearchConfig,
) -> Result<StepEvent> {
    let mut y = match x_prev {
        Some(prev) => x + (x - &*prev) * momentum,
        None => x.clone(),
    };
    // An infeasible look-ahead falls back to the incumbent point.
    let (f_y, g_y) = match (obj.value(&y), obj.gradient(&y)) {
        (Ok(f), Ok(g)) => (f, g),
        (Err(SublevelError::DomainViolation(_)), _)
        | (_, Err(SublevelError::DomainViolation(_))) => {
            y = x.clone();
            (obj.value(&y)?, obj.gradient(&y)?)
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let d = -&g_y;
    let (t, f_new) = armijo(obj, &y, &d, &g_y, f_y, ls)?;
    *x_prev = Some(x.clone());
    Ok(StepEvent::Moved {
        x: &y + d * t,
        f: f_new,
        step: t,
        decrement_sq: None,
        sigma_floor: None,
    })
}

#[derive(Debug, Clone)]
pub(crate) struct AdamState {
    m: DVector<f64>,
    v: DVector<f64>,
    t: usize,
}

impl AdamState {
    pub(crate) fn new(dim: usize) -> Self {
        AdamState {
            m: DVector::zeros(dim),
            v: DVector::zeros(dim),
            t: 0,
        }
    }
}

/// Fixed-step Adam with bias-corrected moments; no line search and no
/// monotonicity guarantee.
#[allow(clippy::too_many_arguments)]
pub(crate) fn step_adam(
    obj: &Objective,
    x: &DVector<f64>,
    g: &DVector<f64>,
    step: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    state: &mut AdamState,
) -> Result<StepEvent> {
    state.t += 1;
    state.m = &state.m * beta1 + g * (1.0 - beta1);
    state.v = &state.v * beta2 + g.component_mul(g) * (1.0 - beta2);
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    let update = DVector::from_fn(x.len(), |i, _| {
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        step * m_hat / (v_hat.sqrt() + epsilon)
    });
    let x_new = x - update;
    let f_new = obj.value(&x_new)?;
    Ok(StepEvent::Moved {
        x: x_new,
        f: f_new,
        step,
        decrement_sq: None,
        sigma_floor: None,
    })
}
