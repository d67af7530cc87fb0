//! Synthetic data generation for the objective suite, including the plateau
//! instance used by the saddle-escape experiments.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SublevelError};
use crate::problems::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticDistribution {
    /// Features i.i.d. standard normal, labels uniform on `[0, 1]`.
    GaussianFeatures,
    /// Same features; uniform labels are strictly positive so the barrier
    /// domain contains the origin.
    LogLinearFeasible,
    /// A flat region around the origin with a deep basin reachable only
    /// through a small block of gateway coordinates; guard patterns keep
    /// the basin closed below a coverage threshold. See [`PlateauParams`].
    PlateauGateway {
        block: usize,
        gateway_rows: usize,
        kappa: f64,
        anchor_scale: f64,
        guards: usize,
        guard_rows: usize,
        guard_scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n: usize,
    pub distribution: SyntheticDistribution,
    pub seed: u64,
}

/// Generates `(features, labels)` for a spec; byte-identical for a fixed
/// seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if spec.m == 0 || spec.n == 0 {
        return Err(SublevelError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.distribution {
        SyntheticDistribution::GaussianFeatures => {
            let a = DMatrix::from_fn(spec.m, spec.n, |_, _| StandardNormal.sample(&mut rng));
            let b = DVector::from_fn(spec.m, |_, _| loop {
                let v: f64 = rng.random();
                if v > 0.0 {
                    break v;
                }
            });
            Ok((a, b))
        }
        SyntheticDistribution::LogLinearFeasible => {
            let a = DMatrix::from_fn(spec.m, spec.n, |_, _| StandardNormal.sample(&mut rng));
            // Uniform labels on [1, 2): the barrier domain then contains a
            // comfortable neighborhood of the origin, where the experiment
            // runs start.
            let b = DVector::from_fn(spec.m, |_, _| {
                let v: f64 = rng.random();
                1.0 + v
            });
            Ok((a, b))
        }
        SyntheticDistribution::PlateauGateway {
            block,
            gateway_rows,
            kappa,
            anchor_scale,
            guards,
            guard_rows,
            guard_scale,
        } => {
            let params = PlateauParams {
                m: spec.m,
                n: spec.n,
                block,
                gateway_rows,
                kappa,
                anchor_scale,
                guards,
                guard_rows,
                guard_scale,
                seed: spec.seed,
            };
            let (obj, _) = plateau_nls_instance(&params)?;
            Ok((obj.features().clone(), obj.labels().clone()))
        }
    }
}

fn gaussian_matrix(m: usize, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(rng))
}

/// Labels in `{-1, +1}` from a planted hyperplane with 10% flips.
fn sign_labels(a: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let n = a.ncols();
    let w = DVector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z / (n as f64).sqrt()
    });
    let scores = a * w;
    DVector::from_fn(a.nrows(), |i, _| {
        let flip: f64 = rng.random();
        let s = if scores[i] >= 0.0 { 1.0 } else { -1.0 };
        if flip < 0.1 {
            -s
        } else {
            s
        }
    })
}

/// Sigmoid least-squares instance on Gaussian data, labels uniform in
/// `[0, 1]`.
pub fn nls_instance(m: usize, n: usize, seed: u64) -> Objective {
    let spec = SyntheticSpec {
        m,
        n,
        distribution: SyntheticDistribution::GaussianFeatures,
        seed,
    };
    let (a, b) = generate_synthetic(&spec).expect("non-empty dims");
    Objective::nonlinear_least_squares(a, b).expect("consistent dims")
}

pub fn logistic_instance(m: usize, n: usize, ridge: f64, seed: u64) -> Objective {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(m, n, &mut rng);
    let b = sign_labels(&a, &mut rng);
    Objective::logistic(a, b, ridge).expect("consistent dims")
}

pub fn svm_instance(m: usize, n: usize, weight: f64, seed: u64) -> Objective {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(m, n, &mut rng);
    let b = sign_labels(&a, &mut rng);
    Objective::svm_hinge2(a, b, weight).expect("consistent dims")
}

pub fn loglinear_instance(m: usize, n: usize, seed: u64) -> Objective {
    let spec = SyntheticSpec {
        m,
        n,
        distribution: SyntheticDistribution::LogLinearFeasible,
        seed,
    };
    let (a, b) = generate_synthetic(&spec).expect("non-empty dims");
    Objective::log_linear(a, b).expect("consistent dims")
}

/// Random strictly convex quadratic with log-spaced eigenvalues in
/// `[1, condition]`.
pub fn quadratic_instance(n: usize, condition: f64, seed: u64) -> Objective {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix(n, n, &mut rng);
    let q = g.qr().q();
    let eigs = DVector::from_fn(n, |i, _| {
        if n == 1 {
            1.0
        } else {
            condition.powf(i as f64 / (n - 1) as f64)
        }
    });
    let h = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
    let c = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    Objective::quadratic(h, c).expect("square")
}

/// Halves `x` until the barrier domain contains it; the origin is always
/// feasible for generated instances.
pub fn shrink_into_domain(obj: &Objective, x: &DVector<f64>) -> DVector<f64> {
    let mut y = x.clone();
    for _ in 0..200 {
        if obj.in_domain(&y) {
            return y;
        }
        y *= 0.5;
    }
    DVector::zeros(x.len())
}

/// Layout of the plateau instance.
///
/// Rows:
/// - `gateway_rows` copies of `(kappa/sqrt(block)) * 1_B` with label 1:
///   the basin lies at large positive gateway argument.
/// - `guards * guard_rows` rows with Gaussian sign patterns on the block
///   (scale `guard_scale/sqrt(block)`) and label 1/2: moving inside the
///   block is free only along directions orthogonal to every guard
///   pattern, so opening the basin needs strictly more than `guards`
///   captured block coordinates.
/// - one anchor row `anchor_scale * e_j` (label 1/2) per coordinate.
/// - inert all-zero rows (label 1/2) padding up to `m`.
///
/// At the origin every sample sits at the sigmoid midpoint, so
/// `f(0) = gateway_rows / (4m)` and the gradient is supported on the
/// gateway block with tiny norm `kappa * gateway_rows / (4m)`: gradient
/// methods crawl for hundreds of iterations, while curvature-rescaled
/// steps amplify the same signal and cross the plateau at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauParams {
    pub m: usize,
    pub n: usize,
    /// Gateway block size.
    pub block: usize,
    pub gateway_rows: usize,
    /// Scale of the gateway rows.
    pub kappa: f64,
    /// Scale of the per-coordinate anchor rows.
    pub anchor_scale: f64,
    /// Number of guard patterns; a subspace must capture at least
    /// `guards + 1` block coordinates to make balanced progress.
    pub guards: usize,
    /// Data rows per guard pattern.
    pub guard_rows: usize,
    pub guard_scale: f64,
    pub seed: u64,
}

impl PlateauParams {
    /// The instance shape used by the saddle-escape experiments at
    /// `m = 2000, n = 500`.
    pub fn escape_default(m: usize, n: usize, seed: u64) -> Self {
        PlateauParams {
            m,
            n,
            block: 16,
            gateway_rows: 2,
            kappa: 1.0,
            anchor_scale: 0.05,
            guards: 3,
            guard_rows: 4,
            guard_scale: 4.0,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlateauInfo {
    /// Coordinates of the gateway block.
    pub block_indices: Vec<usize>,
    /// A trap-side point where the Hessian is indefinite (the origin itself
    /// is provably positive semidefinite for this objective family).
    pub saddle_point: DVector<f64>,
    /// `f(0)`.
    pub plateau_value: f64,
}

/// Builds the plateau objective and its descriptive info.
pub fn plateau_nls_instance(params: &PlateauParams) -> Result<(Objective, PlateauInfo)> {
    let PlateauParams {
        m,
        n,
        block,
        gateway_rows,
        kappa,
        anchor_scale,
        guards,
        guard_rows,
        guard_scale,
        seed,
    } = *params;
    if block == 0 || block > n {
        return Err(SublevelError::InvalidConfig(format!(
            "gateway block {block} must be in [1, n = {n}]"
        )));
    }
    let structured = gateway_rows + guards * guard_rows + n;
    if m < structured {
        return Err(SublevelError::InvalidConfig(format!(
            "need m >= {structured} rows for the structured part, got {m}"
        )));
    }
    if guards >= block {
        return Err(SublevelError::InvalidConfig(format!(
            "guards = {guards} must stay below the block size {block}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..block {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(block);
    let block_indices = pool;

    let mut a = DMatrix::zeros(m, n);
    let mut b = DVector::from_element(m, 0.5);
    let gateway_entry = kappa / (block as f64).sqrt();
    let mut row = 0usize;
    for _ in 0..gateway_rows {
        for &c in &block_indices {
            a[(row, c)] = gateway_entry;
        }
        b[row] = 1.0;
        row += 1;
    }
    let guard_entry = guard_scale / (block as f64).sqrt();
    for _ in 0..guards {
        let pattern: Vec<f64> = (0..block)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z
            })
            .collect();
        for _ in 0..guard_rows {
            for (i, &c) in block_indices.iter().enumerate() {
                a[(row, c)] = guard_entry * pattern[i];
            }
            row += 1;
        }
    }
    for j in 0..n {
        a[(row + j, j)] = anchor_scale;
    }

    // Trap side: gateway argument -2 puts the mismatch term r * phi''
    // above phi'^2, flipping the curvature sign along the block direction,
    // while the guards sit saturated and contribute nothing.
    let s_saddle = 2.0 / (kappa * (block as f64).sqrt());
    let mut saddle_point = DVector::zeros(n);
    for &c in &block_indices {
        saddle_point[c] = -s_saddle;
    }

    let plateau_value = 0.25 * gateway_rows as f64 / m as f64;
    let obj = Objective::nonlinear_least_squares(a, b)?;
    Ok((
        obj,
        PlateauInfo {
            block_indices,
            saddle_point,
            plateau_value,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn plateau_value_and_gradient_shape() {
        let params = PlateauParams {
            m: 260,
            n: 40,
            block: 8,
            gateway_rows: 2,
            kappa: 1.0,
            anchor_scale: 0.2,
            guards: 3,
            guard_rows: 4,
            guard_scale: 4.0,
            seed: 9,
        };
        let (obj, info) = plateau_nls_instance(&params).unwrap();
        let x0 = DVector::zeros(40);
        assert_relative_eq!(obj.value(&x0).unwrap(), info.plateau_value, epsilon = 1e-15);
        let g = obj.gradient(&x0).unwrap();
        for i in 0..40 {
            if info.block_indices.contains(&i) {
                assert!(g[i] != 0.0);
            } else {
                assert_eq!(g[i], 0.0, "gradient must be supported on the block");
            }
        }
        // || grad f(0) || = kappa * gateway_rows / (4 m)
        let expect = params.kappa * params.gateway_rows as f64 / (4.0 * params.m as f64);
        assert_relative_eq!(g.norm(), expect, max_relative = 1e-12);
    }

    #[test]
    fn plateau_rejects_undersized_m() {
        let params = PlateauParams {
            m: 30,
            n: 40,
            block: 4,
            gateway_rows: 2,
            kappa: 1.0,
            anchor_scale: 0.2,
            guards: 2,
            guard_rows: 2,
            guard_scale: 4.0,
            seed: 0,
        };
        assert!(plateau_nls_instance(&params).is_err());
    }
}
