//! Full-space low-rank Newton (floored truncated spectrum of the Hessian)
//! and the row-subsampled NewSamp baseline, which floors a subsampled
//! Hessian estimate the same way.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::optimizers::line_search::{armijo, damped_step, LineSearchConfig};
use crate::optimizers::{StepEvent, StepRule};
use crate::problems::Objective;
use crate::spectral::{
    randomized_tsvd, FloorMode, LowRankInverse, TruncatedSpectrum, TsvdConfig,
};

/// Rank-`rank` floored spectrum of the full Hessian at `x`, via the dense
/// matrix when it fits under the cap and matrix-free otherwise.
pub fn full_hessian_spectrum(
    obj: &Objective,
    x: &DVector<f64>,
    rank: usize,
    tsvd: &TsvdConfig,
    mode: FloorMode,
    seed: u64,
) -> Result<TruncatedSpectrum> {
    if obj.dense_hessian_ok() {
        let h = obj.dense_hessian(x)?;
        randomized_tsvd(&h, rank, tsvd, mode, seed)
    } else {
        let op = obj.hessian_operator(x)?;
        randomized_tsvd(&op, rank, tsvd, mode, seed)
    }
}

/// `d = -Q^{-1} grad f(x)` for the full-space floored inverse; returns the
/// direction and the floor eigenvalue.
pub fn low_rank_direction(
    obj: &Objective,
    x: &DVector<f64>,
    g: &DVector<f64>,
    coarse_dim: usize,
    tsvd: &TsvdConfig,
    mode: FloorMode,
    seed: u64,
) -> Result<(DVector<f64>, f64)> {
    let spectrum = full_hessian_spectrum(obj, x, coarse_dim, tsvd, mode, seed)?;
    let floor = spectrum.floor();
    let inv = LowRankInverse::full_space(spectrum);
    Ok((-inv.apply(g)?, floor))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn step_low_rank(
    obj: &Objective,
    x: &DVector<f64>,
    f: f64,
    g: &DVector<f64>,
    coarse_dim: usize,
    tsvd: &TsvdConfig,
    mode: FloorMode,
    seed: u64,
    eps_exit: f64,
    rule: StepRule,
    ls: &LineSearchConfig,
) -> Result<StepEvent> {
    let (d, floor) = low_rank_direction(obj, x, g, coarse_dim, tsvd, mode, seed)?;
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

/// Uniform row subsample without replacement, deterministic for a seed.
pub fn sample_rows(m: usize, count: usize, seed: u64) -> Vec<usize> {
    let count = count.clamp(1, m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (0..m).collect();
    for i in 0..count {
        let j = rng.random_range(i..m);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

/// NewSamp: estimate the Hessian from `sample_rows` uniformly sampled data
/// rows, then apply the identical convex flooring and step as the low-rank
/// Newton method.
#[allow(clippy::too_many_arguments)]
pub(crate) fn step_newsamp(
    obj: &Objective,
    x: &DVector<f64>,
    f: f64,
    g: &DVector<f64>,
    rows: usize,
    rank: usize,
    tsvd: &TsvdConfig,
    seed: u64,
    eps_exit: f64,
    rule: StepRule,
    ls: &LineSearchConfig,
) -> Result<StepEvent> {
    let row_idx = sample_rows(obj.samples(), rows, seed);
    let h_est = obj.subsampled_hessian(x, &row_idx)?;
    let spectrum = randomized_tsvd(&h_est, rank, tsvd, FloorMode::Convex, seed)?;
    let floor = spectrum.floor();
    let inv = LowRankInverse::full_space(spectrum);
    let d = -inv.apply(g)?;
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
    use crate::optimizers::newton::newton_direction;
    use crate::problems::synthetic;

    #[test]
    fn full_rank_floor_matches_newton_direction() {
        let obj = synthetic::logistic_instance(120, 16, 1e-3, 4);
        let x = DVector::from_fn(16, |i, _| 0.1 * ((i as f64) * 0.9).sin());
        let g = obj.gradient(&x).unwrap();
        let (d, _) = low_rank_direction(
            &obj,
            &x,
            &g,
            15,
            &TsvdConfig::default(),
            FloorMode::Convex,
            7,
        )
        .unwrap();
        let d_newton = newton_direction(&obj, &x).unwrap();
        let rel = (&d - &d_newton).norm() / d_newton.norm();
        assert!(rel <= 1e-8, "direction mismatch {rel:e}");
    }

    #[test]
    fn identity_hessian_gives_negative_gradient() {
        let obj = crate::problems::Objective::quadratic(
            nalgebra::DMatrix::identity(10, 10),
            DVector::zeros(10),
        )
        .unwrap();
        let x = DVector::from_fn(10, |i, _| (i as f64) - 4.5);
        let g = obj.gradient(&x).unwrap();
        let (d, floor) = low_rank_direction(
            &obj,
            &x,
            &g,
            4,
            &TsvdConfig::default(),
            FloorMode::Convex,
            1,
        )
        .unwrap();
        assert!((floor - 1.0).abs() <= 1e-9);
        assert!((&d + &g).norm() <= 1e-9);
    }

    #[test]
    fn truncated_mode_descends_at_saddle_probe() {
        let (obj, info) = synthetic::plateau_nls_instance(&synthetic::PlateauParams {
            m: 300,
            n: 50,
            block: 6,
            gateway_rows: 2,
            kappa: 1.0,
            anchor_scale: 0.25,
            guards: 2,
            guard_rows: 3,
            guard_scale: 4.0,
            seed: 11,
        })
        .unwrap();
        let x = info.saddle_point.clone();
        let g = obj.gradient(&x).unwrap();
        assert!(g.norm() > 0.0);
        let (d, _) = low_rank_direction(
            &obj,
            &x,
            &g,
            10,
            &TsvdConfig::default(),
            FloorMode::NonConvexTruncated { nu: 1e-10 },
            3,
        )
        .unwrap();
        assert!(g.dot(&d) < 0.0, "|Q|^{{-1}} must force descent");
    }

    #[test]
    fn newsamp_full_sample_matches_low_rank() {
        let obj = synthetic::logistic_instance(90, 12, 1e-3, 6);
        let x = DVector::from_fn(12, |i, _| 0.05 * i as f64);
        let f = obj.value(&x).unwrap();
        let g = obj.gradient(&x).unwrap();
        let seed = 21;
        let a = step_newsamp(
            &obj,
            &x,
            f,
            &g,
            90,
            6,
            &TsvdConfig::default(),
            seed,
            1e-14,
            StepRule::Armijo,
            &Default::default(),
        )
        .unwrap();
        let b = step_low_rank(
            &obj,
            &x,
            f,
            &g,
            6,
            &TsvdConfig::default(),
            FloorMode::Convex,
            seed,
            1e-14,
            StepRule::Armijo,
            &Default::default(),
        )
        .unwrap();
        match (a, b) {
            (
                StepEvent::Moved { x: xa, .. },
                StepEvent::Moved { x: xb, .. },
            ) => {
                assert!((xa - xb).norm() <= 1e-9);
            }
            _ => panic!("both should move"),
        }
    }

    #[test]
    fn row_sampling_is_deterministic_and_distinct() {
        let a = sample_rows(1000, 300, 5);
        let b = sample_rows(1000, 300, 5);
        assert_eq!(a, b);
        let mut s = a.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 300);
    }

    #[test]
    fn newsamp_descent_monte_carlo() {
        let obj = synthetic::logistic_instance(1000, 20, 1e-3, 30);
        let x = DVector::from_fn(20, |i, _| 0.08 * ((i + 1) as f64).cos());
        let g = obj.gradient(&x).unwrap();
        for seed in 0..50u64 {
            let rows = sample_rows(1000, 300, seed);
            let h = obj.subsampled_hessian(&x, &rows).unwrap();
            let spec =
                randomized_tsvd(&h, 10, &TsvdConfig::default(), FloorMode::Convex, seed).unwrap();
            let inv = LowRankInverse::full_space(spec);
            let d = -inv.apply(&g).unwrap();
            assert!(g.dot(&d) < 0.0, "seed {seed} produced a non-descent direction");
        }
    }
}
