//! Prolongation/restriction by uniform column sampling, the Galerkin coarse
//! model built from the reduced gradient and reduced Hessian, and the
//! coherency checks that certify it.
//!
//! The operator pair is `P` = a set of distinct columns of the identity and
//! `R = P'`, so `restrict` is coordinate selection and `prolong` scatters a
//! coarse vector back into the sampled coordinates. `RP = I` holds exactly
//! and `PR` is an orthogonal projection.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SublevelError};
use crate::problems::Objective;

/// Uniformly sampled coordinate-selection map and its transpose.
///
/// Indices are drawn without replacement by a partial Fisher-Yates shuffle,
/// so for a fixed seed the sample of size `N` is a prefix of the sample of
/// size `N' > N`. Escape-rate sweeps over `N` rely on this nesting to get a
/// per-trial monotone coupling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingOperator {
    fine_dim: usize,
    indices: Vec<usize>,
    seed: u64,
}

/// Draws a fresh operator: `coarse_dim` distinct indices in `[0, n)`,
/// uniform without replacement, deterministic given the seed.
pub fn sample_operator(n: usize, coarse_dim: usize, seed: u64) -> Result<SamplingOperator> {
    if coarse_dim == 0 || coarse_dim >= n {
        return Err(SublevelError::InvalidCoarseDim {
            coarse: coarse_dim,
            fine: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..coarse_dim {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(coarse_dim);
    Ok(SamplingOperator {
        fine_dim: n,
        indices: pool,
        seed,
    })
}

impl SamplingOperator {
    /// Builds an operator from explicit indices; used by tests and the
    /// permutation (`N = n` would be) degenerate cases.
    pub fn from_indices(n: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() || indices.len() > n {
            return Err(SublevelError::InvalidCoarseDim {
                coarse: indices.len(),
                fine: n,
            });
        }
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n || seen[i] {
                return Err(SublevelError::InvalidConfig(format!(
                    "indices must be distinct and in [0, {n}); got {i}"
                )));
            }
            seen[i] = true;
        }
        Ok(SamplingOperator {
            fine_dim: n,
            indices,
            seed: 0,
        })
    }

    pub fn fine_dim(&self) -> usize {
        self.fine_dim
    }

    pub fn coarse_dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `R v`: picks the sampled coordinates in index order.
    pub fn restrict(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.fine_dim {
            return Err(SublevelError::DimensionMismatch {
                expected: self.fine_dim,
                got: v.len(),
            });
        }
        Ok(DVector::from_fn(self.coarse_dim(), |i, _| v[self.indices[i]]))
    }

    /// `P w`: scatters into the sampled coordinates, zeros elsewhere.
    pub fn prolong(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        if w.len() != self.coarse_dim() {
            return Err(SublevelError::DimensionMismatch {
                expected: self.coarse_dim(),
                got: w.len(),
            });
        }
        let mut v = DVector::zeros(self.fine_dim);
        for (i, &s) in self.indices.iter().enumerate() {
            v[s] = w[i];
        }
        Ok(v)
    }

    /// Selects the sampled columns of a matrix (`A P`).
    pub fn select_columns(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if a.ncols() != self.fine_dim {
            return Err(SublevelError::DimensionMismatch {
                expected: self.fine_dim,
                got: a.ncols(),
            });
        }
        let mut out = DMatrix::zeros(a.nrows(), self.coarse_dim());
        for (i, &s) in self.indices.iter().enumerate() {
            out.set_column(i, &a.column(s));
        }
        Ok(out)
    }

    /// The principal submatrix `R H P = H[S, S]`; the dense oracle for
    /// reduced-Hessian checks.
    pub fn principal_submatrix(&self, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if h.nrows() != self.fine_dim || h.ncols() != self.fine_dim {
            return Err(SublevelError::DimensionMismatch {
                expected: self.fine_dim,
                got: h.nrows().max(h.ncols()),
            });
        }
        let n = self.coarse_dim();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            h[(self.indices[i], self.indices[j])]
        }))
    }
}

/// The coarse quadratic model anchored at `x_k`:
/// `F(y) = <R grad, y - y0> + 1/2 <R H P (y - y0), y - y0>`, `y0 = R x_k`.
/// First- and second-order coherency hold by construction.
#[derive(Debug, Clone)]
pub struct GalerkinModel {
    anchor: DVector<f64>,
    y0: DVector<f64>,
    reduced_gradient: DVector<f64>,
    reduced_hessian: DMatrix<f64>,
}

/// Assembles the Galerkin model. The reduced Hessian comes from the
/// objective's structured path (`A_S' D A_S` for GLM-shaped problems), never
/// from the dense Hessian.
pub fn build_galerkin(
    obj: &Objective,
    x: &DVector<f64>,
    op: &SamplingOperator,
) -> Result<GalerkinModel> {
    let gradient = obj.gradient(x)?;
    let reduced_gradient = op.restrict(&gradient)?;
    let reduced_hessian = obj.reduced_hessian(x, op)?;
    Ok(GalerkinModel {
        anchor: x.clone(),
        y0: op.restrict(x)?,
        reduced_gradient,
        reduced_hessian,
    })
}

impl GalerkinModel {
    pub fn anchor(&self) -> &DVector<f64> {
        &self.anchor
    }

    pub fn y0(&self) -> &DVector<f64> {
        &self.y0
    }

    pub fn reduced_gradient(&self) -> &DVector<f64> {
        &self.reduced_gradient
    }

    pub fn reduced_hessian(&self) -> &DMatrix<f64> {
        &self.reduced_hessian
    }

    pub fn coarse_dim(&self) -> usize {
        self.y0.len()
    }

    /// `F(y)`; zero at the anchor.
    pub fn value(&self, y: &DVector<f64>) -> f64 {
        let d = y - &self.y0;
        self.reduced_gradient.dot(&d) + 0.5 * d.dot(&(&self.reduced_hessian * &d))
    }

    /// `grad F(y) = R grad f + R H P (y - y0)`.
    pub fn gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.reduced_gradient + &self.reduced_hessian * (y - &self.y0)
    }
}

/// Residual magnitudes of the two coherency conditions; never fails the
/// check itself, only reports.
#[derive(Debug, Clone, Copy)]
pub struct CoherencyReport {
    /// `|| R grad f(x_k) - grad F(y0) ||_inf`
    pub first_order: f64,
    /// `|| R H P - hess F(y0) ||_max`, with `R H P` taken from the dense
    /// Hessian (test-scale only).
    pub second_order: f64,
}

impl CoherencyReport {
    pub fn holds(&self, tol_first: f64, tol_second: f64) -> bool {
        self.first_order <= tol_first && self.second_order <= tol_second
    }
}

/// Compares the model's stored gradient/Hessian against the restriction of
/// the dense derivatives at the anchor.
pub fn check_coherency(
    model: &GalerkinModel,
    obj: &Objective,
    op: &SamplingOperator,
    x: &DVector<f64>,
) -> Result<CoherencyReport> {
    let reduced_grad = op.restrict(&obj.gradient(x)?)?;
    let model_grad = model.gradient(&model.y0);
    let first_order = (&reduced_grad - &model_grad)
        .iter()
        .fold(0.0f64, |a, r| a.max(r.abs()));

    let dense = obj.dense_hessian(x)?;
    let reduced = op.principal_submatrix(&dense)?;
    let second_order = (&reduced - model.reduced_hessian())
        .iter()
        .fold(0.0f64, |a, r| a.max(r.abs()));

    Ok(CoherencyReport {
        first_order,
        second_order,
    })
}
