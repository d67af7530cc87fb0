//! The coarse-model methods: Sigma (exact reduced solve) and SigmaSVD
//! (floored truncated spectrum of the reduced Hessian).
//!
//! One SigmaSVD iteration: draw a sampling operator, assemble the reduced
//! Hessian `R hess f P`, take its randomized rank-`p` truncated spectrum,
//! floor it per mode, form `d = -P Q_H^{-1} R grad f`, quit if
//! `-<grad f, d>` falls below the exit tolerance, otherwise Armijo-step.
//! Per-iteration cost is `O(nN + pN^2)` plus the `O(mN^2)` reduced-Hessian
//! assembly for data-driven objectives.

use nalgebra::DVector;

use crate::coarse::SamplingOperator;
use crate::error::{Result, SublevelError};
use crate::optimizers::line_search::{armijo, damped_step, LineSearchConfig};
use crate::optimizers::{StepEvent, StepRule};
use crate::problems::Objective;
use crate::spectral::{randomized_tsvd, FloorMode, LowRankInverse, TsvdConfig};

/// `d = -P (R hess f P)^{-1} R grad f` by a dense Cholesky solve of the
/// N-by-N reduced system.
pub fn sigma_direction(
    obj: &Objective,
    x: &DVector<f64>,
    g: &DVector<f64>,
    op: &SamplingOperator,
) -> Result<DVector<f64>> {
    let h_r = obj.reduced_hessian(x, op)?;
    let rg = op.restrict(g)?;
    let chol = h_r
        .cholesky()
        .ok_or(SublevelError::SingularReducedHessian)?;
    let d_coarse = chol.solve(&(-rg));
    op.prolong(&d_coarse)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn step_sigma(
    obj: &Objective,
    x: &DVector<f64>,
    f: f64,
    g: &DVector<f64>,
    op: &SamplingOperator,
    resample_seed: u64,
    eps_exit: f64,
    rule: StepRule,
    ls: &LineSearchConfig,
) -> Result<StepEvent> {
    // A singular reduced Hessian earns one resample before failing.
    let d = match sigma_direction(obj, x, g, op) {
        Ok(d) => d,
        Err(SublevelError::SingularReducedHessian) => {
            let retry =
                crate::coarse::sample_operator(op.fine_dim(), op.coarse_dim(), resample_seed)?;
            sigma_direction(obj, x, g, &retry)?
        }
        Err(e) => return Err(e),
    };
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

/// `d = -P Q_H^{-1} R grad f` with the floored rank-`p` spectrum of the
/// reduced Hessian; returns the direction and the floor.
#[allow(clippy::too_many_arguments)]
pub fn sigmasvd_direction(
    obj: &Objective,
    x: &DVector<f64>,
    g: &DVector<f64>,
    op: &SamplingOperator,
    rank: usize,
    tsvd: &TsvdConfig,
    mode: FloorMode,
    seed: u64,
) -> Result<(DVector<f64>, f64)> {
    let h_r = obj.reduced_hessian(x, op)?;
    let spectrum = randomized_tsvd(&h_r, rank, tsvd, mode, seed)?;
    let floor = spectrum.floor();
    let inv = LowRankInverse::coarse(spectrum, op.clone())?;
    Ok((-inv.apply(g)?, floor))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn step_sigmasvd(
    obj: &Objective,
    x: &DVector<f64>,
    f: f64,
    g: &DVector<f64>,
    op: &SamplingOperator,
    rank: usize,
    tsvd: &TsvdConfig,
    mode: FloorMode,
    seed: u64,
    eps_exit: f64,
    rule: StepRule,
    ls: &LineSearchConfig,
) -> Result<StepEvent> {
    let (d, floor) = sigmasvd_direction(obj, x, g, op, rank, tsvd, mode, seed)?;
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
        sigma_floor: Some(floor),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarse::SamplingOperator;
    use crate::optimizers::newton::newton_direction;
    use crate::problems::{synthetic, Objective};
    use nalgebra::DMatrix;

    #[test]
    fn sigma_with_permutation_is_newton() {
        let obj = synthetic::logistic_instance(100, 12, 1e-3, 1);
        let x = DVector::from_fn(12, |i, _| 0.07 * (i as f64 + 1.0).ln());
        let g = obj.gradient(&x).unwrap();
        // N = n via an explicit permutation operator.
        let op = SamplingOperator::from_indices(12, (0..12).rev().collect()).unwrap();
        let d = sigma_direction(&obj, &x, &g, &op).unwrap();
        let d_newton = newton_direction(&obj, &x).unwrap();
        assert!((d - &d_newton).norm() / d_newton.norm() <= 1e-9);
    }

    #[test]
    fn sigma_on_diagonal_quadratic_is_blockwise_newton() {
        let h = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 2.0, 3.0, 4.0, 5.0]));
        let obj = Objective::quadratic(h, DVector::zeros(5)).unwrap();
        let x = DVector::from_row_slice(&[1.0, 1.0, 1.0, 1.0, 1.0]);
        let g = obj.gradient(&x).unwrap();
        let op = SamplingOperator::from_indices(5, vec![1, 3]).unwrap();
        let d = sigma_direction(&obj, &x, &g, &op).unwrap();
        // Newton-exact on the sampled coordinates, zero elsewhere.
        assert_eq!(d[0], 0.0);
        assert_eq!(d[2], 0.0);
        assert_eq!(d[4], 0.0);
        assert!((d[1] + 1.0).abs() <= 1e-12);
        assert!((d[3] + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sigmasvd_decrement_identity() {
        // lambda_hat^2 = -<grad f, d> down to floating point.
        let obj = synthetic::logistic_instance(400, 100, 1e-3, 8);
        let x = DVector::from_fn(100, |i, _| 0.03 * ((i * 5) as f64).sin());
        let g = obj.gradient(&x).unwrap();
        let op = crate::coarse::sample_operator(100, 50, 9).unwrap();
        let (d, _) = sigmasvd_direction(
            &obj,
            &x,
            &g,
            &op,
            20,
            &TsvdConfig::default(),
            FloorMode::Convex,
            10,
        )
        .unwrap();
        let dec_sq = -g.dot(&d);
        let h_r = obj.reduced_hessian(&x, &op).unwrap();
        let spec =
            randomized_tsvd(&h_r, 20, &TsvdConfig::default(), FloorMode::Convex, 10).unwrap();
        let inv = LowRankInverse::coarse(spec, op.clone()).unwrap();
        let lambda_hat_sq = inv.quadratic_form(&g).unwrap();
        assert!((dec_sq - lambda_hat_sq).abs() <= 1e-12 * (1.0 + lambda_hat_sq));
    }

    #[test]
    fn degenerate_full_space_sigmasvd_is_newton() {
        // N = n (permutation) and p = n - 1 discard nothing.
        let obj = synthetic::logistic_instance(80, 10, 1e-2, 14);
        let x = DVector::from_fn(10, |i, _| 0.1 * (i as f64 - 5.0) / 5.0);
        let g = obj.gradient(&x).unwrap();
        let op = SamplingOperator::from_indices(10, (0..10).collect()).unwrap();
        let (d, _) = sigmasvd_direction(
            &obj,
            &x,
            &g,
            &op,
            9,
            &TsvdConfig::default(),
            FloorMode::Convex,
            5,
        )
        .unwrap();
        let d_newton = newton_direction(&obj, &x).unwrap();
        assert!((d - &d_newton).norm() / d_newton.norm() <= 1e-8);
    }

    #[test]
    fn stationary_point_exits_immediately() {
        let obj = Objective::quadratic(DMatrix::identity(6, 6), DVector::zeros(6)).unwrap();
        let x = DVector::zeros(6);
        let f = obj.value(&x).unwrap();
        let g = obj.gradient(&x).unwrap();
        let op = crate::coarse::sample_operator(6, 3, 2).unwrap();
        let out = step_sigmasvd(
            &obj,
            &x,
            f,
            &g,
            &op,
            2,
            &TsvdConfig::default(),
            FloorMode::Convex,
            3,
            1e-9,
            StepRule::Armijo,
            &Default::default(),
        )
        .unwrap();
        match out {
            StepEvent::ExitDecrement { decrement_sq } => assert_eq!(decrement_sq, 0.0),
            _ => panic!("expected exit at a stationary point"),
        }
    }
}
