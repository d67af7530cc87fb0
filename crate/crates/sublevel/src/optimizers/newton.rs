//! Exact Newton with Armijo damping and cubic-regularized Newton.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SublevelError};
use crate::optimizers::line_search::{armijo, damped_step, LineSearchConfig};
use crate::optimizers::{StepEvent, StepRule};
use crate::problems::Objective;
use crate::spectral::dense_symmetric_eig;

/// Solves `hess f(x) d = -grad f(x)`; Cholesky fast path, LU fallback.
pub fn newton_direction(obj: &Objective, x: &DVector<f64>) -> Result<DVector<f64>> {
    let g = obj.gradient(x)?;
    let h = obj.dense_hessian(x)?;
    let rhs = -&g;
    if let Some(chol) = h.clone().cholesky() {
        return Ok(chol.solve(&rhs));
    }
    h.lu().solve(&rhs).ok_or(SublevelError::SingularHessian)
}

pub(crate) fn step_newton(
    obj: &Objective,
    x: &DVector<f64>,
    f: f64,
    g: &DVector<f64>,
    eps_exit: f64,
    rule: StepRule,
    ls: &LineSearchConfig,
) -> Result<StepEvent> {
    let d = newton_direction(obj, x)?;
    let dec_sq = -g.dot(&d);
    if dec_sq <= eps_exit {
        return Ok(StepEvent::ExitDecrement {
            decrement_sq: dec_sq,
        });
    }
    let (t, f_new) = match rule {
        StepRule::Armijo => armijo(obj, x, &d, g, f, ls)?,
        StepRule::Damped => damped_step(obj, x, &d, f, dec_sq.sqrt(), ls)?,
    };
    Ok(StepEvent::Moved {
        x: x + d * t,
        f: f_new,
        step: t,
        decrement_sq: Some(dec_sq),
        sigma_floor: None,
    })
}

/// Minimizer of the cubic model
/// `g'd + 1/2 d'Hd + (reg/6)||d||^3`
/// via one eigendecomposition and a scalar root find on the shifted system
/// `(H + theta I) d = -g`, `theta = reg ||d|| / 2`.
pub fn cubic_model_step(h: &DMatrix<f64>, g: &DVector<f64>, reg: f64) -> Result<DVector<f64>> {
    let eig = dense_symmetric_eig(h)?;
    let g_hat = eig.vectors.transpose() * g;
    let lambda_min = eig.values[eig.values.len() - 1];

    let norm_at = |theta: f64| -> f64 {
        let mut s = 0.0;
        for i in 0..g_hat.len() {
            let denom = eig.values[i] + theta;
            s += (g_hat[i] / denom).powi(2);
        }
        s.sqrt()
    };

    // Root of ||d(theta)|| = 2 theta / reg on (max(0, -lambda_min), inf).
    let floor = (-lambda_min).max(0.0);
    let mut lo = floor + 1e-12 * (1.0 + floor);
    // psi(theta) = ||d(theta)|| - 2 theta / reg is decreasing minus
    // increasing, so a sign change brackets the unique root.
    let mut hi = (floor + 1.0).max(reg * g.norm());
    for _ in 0..200 {
        if norm_at(hi) - 2.0 * hi / reg < 0.0 {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm_at(mid) - 2.0 * mid / reg > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let coeffs = DVector::from_fn(g_hat.len(), |i, _| -g_hat[i] / (eig.values[i] + theta));
    Ok(&eig.vectors * coeffs)
}

/// Cubic regularization with a line-search style rule on the regularizer:
/// double on failure, halve after success, accepting on the standard
/// `reg/12 ||d||^3` decrease. The decrease is measured through the
/// line-probe differences; once the model's own predicted decrease falls
/// below float resolution the iteration reports convergence.
pub(crate) fn step_cubic(
    obj: &Objective,
    x: &DVector<f64>,
    f: f64,
    reg: &mut f64,
    max_attempts: usize,
) -> Result<StepEvent> {
    let g = obj.gradient(x)?;
    let h = obj.dense_hessian(x)?;
    for _ in 0..max_attempts {
        let d = cubic_model_step(&h, &g, *reg)?;
        let wanted = *reg / 12.0 * d.norm().powi(3);
        if wanted < 1e-16 * (1.0 + f.abs()) {
            return Ok(StepEvent::ExitDecrement {
                decrement_sq: -g.dot(&d),
            });
        }
        let probe = obj.line_probe(x, &d)?;
        match probe.delta(1.0) {
            Ok(delta) if delta <= -wanted => {
                let accepted = *reg;
                *reg = (*reg * 0.5).max(1e-8);
                return Ok(StepEvent::Moved {
                    x: x + &d,
                    f: f + delta,
                    step: 1.0 / accepted,
                    decrement_sq: None,
                    sigma_floor: None,
                });
            }
            Ok(_)
            | Err(SublevelError::DomainViolation(_))
            | Err(SublevelError::NonFinite(_)) => {
                *reg *= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(SublevelError::LineSearchFailed(max_attempts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::synthetic;
    use approx::assert_relative_eq;

    #[test]
    fn newton_exact_on_quadratic() {
        let obj = synthetic::quadratic_instance(6, 50.0, 3);
        let x = DVector::from_fn(6, |i, _| (i as f64) - 2.0);
        let d = newton_direction(&obj, &x).unwrap();
        // One unit step lands on the unconstrained minimizer H x = c.
        let x_new = &x + &d;
        let g_new = obj.gradient(&x_new).unwrap();
        assert!(g_new.norm() <= 1e-9, "residual {:e}", g_new.norm());
    }

    #[test]
    fn cubic_step_escapes_negative_curvature() {
        // At the trap-side probe the Hessian has a negative eigenvalue; one
        // accepted cubic step must still reduce f.
        let (obj, info) = synthetic::plateau_nls_instance(&synthetic::PlateauParams {
            m: 340,
            n: 60,
            block: 6,
            gateway_rows: 2,
            kappa: 1.0,
            anchor_scale: 0.25,
            guards: 2,
            guard_rows: 3,
            guard_scale: 4.0,
            seed: 2,
        })
        .unwrap();
        let x = info.saddle_point.clone();
        let f = obj.value(&x).unwrap();
        let mut reg = 1.0;
        match step_cubic(&obj, &x, f, &mut reg, 60).unwrap() {
            StepEvent::Moved { f: f_new, .. } => assert!(f_new < f),
            _ => panic!("expected a move"),
        }
    }

    #[test]
    fn cubic_model_matches_newton_for_small_reg_on_convex() {
        let obj = synthetic::quadratic_instance(5, 10.0, 9);
        let x = DVector::from_fn(5, |i, _| 0.5 * (i as f64 + 1.0));
        let h = obj.dense_hessian(&x).unwrap();
        let g = obj.gradient(&x).unwrap();
        let d_cubic = cubic_model_step(&h, &g, 1e-9).unwrap();
        let d_newton = newton_direction(&obj, &x).unwrap();
        assert_relative_eq!(
            (d_cubic - &d_newton).norm() / d_newton.norm(),
            0.0,
            epsilon = 1e-6
        );
    }
}
