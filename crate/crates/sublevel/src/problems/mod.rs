//! The objective suite: non-linear least squares over a sigmoid, the
//! log-linear barrier model, ridge-regularized logistic regression, the
//! squared-hinge SVM primal, and a quadratic sanity adapter.
//!
//! All data-driven objectives have Hessians of the form
//! `A' D(x) A + c I`, and the reduced Hessian `R H P` is assembled as
//! `A_S' D A_S + c I` from the sampled columns without ever forming the
//! full Hessian.

pub mod synthetic;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coarse::SamplingOperator;
use crate::error::{Result, SublevelError};

pub use synthetic::{generate_synthetic, SyntheticDistribution, SyntheticSpec};

/// Which objective an [`Objective`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    /// `(1/m) sum_i (b_i - phi(a_i'x))^2` with the sigmoid `phi`; labels in
    /// `[0, 1]`. Non-convex.
    NonlinearLeastSquares,
    /// `-sum_i log(b_i - a_i'x)`; self-concordant barrier on the domain
    /// `b - Ax > 0`.
    LogLinear,
    /// `(1/m) sum_i log(1 + exp(-b_i a_i'x)) + ridge/2 ||x||^2`; labels in
    /// `{-1, +1}`.
    Logistic { ridge: f64 },
    /// `1/2 ||x||^2 + weight/2 sum_i max(0, 1 - b_i a_i'x)^2`; labels in
    /// `{-1, +1}`. C1 with an almost-everywhere second derivative.
    SvmHinge2 { weight: f64 },
    /// `1/2 x'Hx - c'x`; the sanity adapter used by tests and the
    /// degenerate-case checks.
    Quadratic,
}

impl ObjectiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::NonlinearLeastSquares => "nls",
            ObjectiveKind::LogLinear => "loglinear",
            ObjectiveKind::Logistic { .. } => "logistic",
            ObjectiveKind::SvmHinge2 { .. } => "svm-hinge2",
            ObjectiveKind::Quadratic => "quadratic",
        }
    }
}

/// A differentiable problem over a dense feature matrix, exposing value,
/// gradient, Hessian-vector products, the reduced Hessian, and (below a
/// dimension cap) the dense Hessian. Immutable and safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct Objective {
    kind: ObjectiveKind,
    /// m x n features; for `Quadratic` this is the n x n matrix `H`.
    features: DMatrix<f64>,
    /// length-m labels; for `Quadratic` the linear term `c`.
    labels: DVector<f64>,
    dense_cap: usize,
}

pub const DEFAULT_DENSE_CAP: usize = 2000;

/// Numerically stable sigmoid `1/(1 + e^{-w})`.
pub fn sigmoid(w: f64) -> f64 {
    if w >= 0.0 {
        1.0 / (1.0 + (-w).exp())
    } else {
        let e = w.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^{z})` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl Objective {
    fn new(kind: ObjectiveKind, features: DMatrix<f64>, labels: DVector<f64>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(SublevelError::EmptyDataset);
        }
        if features.nrows() != labels.len() {
            return Err(SublevelError::DimensionMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        if features.iter().chain(labels.iter()).any(|v| !v.is_finite()) {
            return Err(SublevelError::NonFinite("objective data".into()));
        }
        Ok(Objective {
            kind,
            features,
            labels,
            dense_cap: DEFAULT_DENSE_CAP,
        })
    }

    pub fn nonlinear_least_squares(features: DMatrix<f64>, labels: DVector<f64>) -> Result<Self> {
        Self::new(ObjectiveKind::NonlinearLeastSquares, features, labels)
    }

    pub fn log_linear(features: DMatrix<f64>, labels: DVector<f64>) -> Result<Self> {
        Self::new(ObjectiveKind::LogLinear, features, labels)
    }

    pub fn logistic(features: DMatrix<f64>, labels: DVector<f64>, ridge: f64) -> Result<Self> {
        Self::new(ObjectiveKind::Logistic { ridge }, features, labels)
    }

    pub fn svm_hinge2(features: DMatrix<f64>, labels: DVector<f64>, weight: f64) -> Result<Self> {
        Self::new(ObjectiveKind::SvmHinge2 { weight }, features, labels)
    }

    /// Quadratic sanity adapter `1/2 x'Hx - c'x`.
    pub fn quadratic(h: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        if h.nrows() != h.ncols() || h.nrows() != c.len() {
            return Err(SublevelError::DimensionMismatch {
                expected: h.nrows(),
                got: c.len(),
            });
        }
        Self::new(ObjectiveKind::Quadratic, h, c)
    }

    pub fn with_dense_cap(mut self, cap: usize) -> Self {
        self.dense_cap = cap;
        self
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn samples(&self) -> usize {
        match self.kind {
            ObjectiveKind::Quadratic => self.features.nrows(),
            _ => self.features.nrows(),
        }
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    pub fn dense_hessian_ok(&self) -> bool {
        self.dim() <= self.dense_cap
    }

    /// Every kind carries the structure needed for `A_S' D A_S` assembly.
    pub fn reduced_hessian_ok(&self) -> bool {
        true
    }

    pub fn domain_restricted(&self) -> bool {
        matches!(self.kind, ObjectiveKind::LogLinear)
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(SublevelError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `b - Ax`, failing on any non-positive margin. LogLinear only.
    fn barrier_margins(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let u = &self.labels - &self.features * x;
        for (i, ui) in u.iter().enumerate() {
            if *ui <= 0.0 {
                return Err(SublevelError::DomainViolation(format!(
                    "margin {i} is {ui:e} at the requested point"
                )));
            }
        }
        Ok(u)
    }

    pub fn in_domain(&self, x: &DVector<f64>) -> bool {
        match self.kind {
            ObjectiveKind::LogLinear => {
                x.len() == self.dim() && self.barrier_margins(x).is_ok()
            }
            _ => x.len() == self.dim(),
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        let v = match self.kind {
            ObjectiveKind::NonlinearLeastSquares => {
                let w = &self.features * x;
                let m = self.samples() as f64;
                w.iter()
                    .zip(self.labels.iter())
                    .map(|(wi, bi)| {
                        let r = bi - sigmoid(*wi);
                        r * r
                    })
                    .sum::<f64>()
                    / m
            }
            ObjectiveKind::LogLinear => {
                let u = self.barrier_margins(x)?;
                -u.iter().map(|ui| ui.ln()).sum::<f64>()
            }
            ObjectiveKind::Logistic { ridge } => {
                let w = &self.features * x;
                let m = self.samples() as f64;
                let loss = w
                    .iter()
                    .zip(self.labels.iter())
                    .map(|(wi, bi)| softplus(-bi * wi))
                    .sum::<f64>()
                    / m;
                loss + 0.5 * ridge * x.norm_squared()
            }
            ObjectiveKind::SvmHinge2 { weight } => {
                let w = &self.features * x;
                let hinge = w
                    .iter()
                    .zip(self.labels.iter())
                    .map(|(wi, bi)| {
                        let s = 1.0 - bi * wi;
                        if s > 0.0 {
                            s * s
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>();
                0.5 * x.norm_squared() + 0.5 * weight * hinge
            }
            ObjectiveKind::Quadratic => {
                0.5 * x.dot(&(&self.features * x)) - self.labels.dot(x)
            }
        };
        if !v.is_finite() {
            return Err(SublevelError::NonFinite(format!(
                "{} value",
                self.kind.name()
            )));
        }
        Ok(v)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        let g = match self.kind {
            ObjectiveKind::NonlinearLeastSquares => {
                let w = &self.features * x;
                let m = self.samples() as f64;
                let q = DVector::from_fn(w.len(), |i, _| {
                    let phi = sigmoid(w[i]);
                    let dphi = phi * (1.0 - phi);
                    -2.0 / m * (self.labels[i] - phi) * dphi
                });
                self.features.transpose() * q
            }
            ObjectiveKind::LogLinear => {
                let u = self.barrier_margins(x)?;
                let q = u.map(|ui| 1.0 / ui);
                self.features.transpose() * q
            }
            ObjectiveKind::Logistic { ridge } => {
                let w = &self.features * x;
                let m = self.samples() as f64;
                let q = DVector::from_fn(w.len(), |i, _| {
                    let b = self.labels[i];
                    -b * sigmoid(-b * w[i]) / m
                });
                self.features.transpose() * q + x * ridge
            }
            ObjectiveKind::SvmHinge2 { weight } => {
                let w = &self.features * x;
                let q = DVector::from_fn(w.len(), |i, _| {
                    let b = self.labels[i];
                    let s = 1.0 - b * w[i];
                    if s > 0.0 {
                        -weight * b * s
                    } else {
                        0.0
                    }
                });
                x + self.features.transpose() * q
            }
            ObjectiveKind::Quadratic => &self.features * x - &self.labels,
        };
        if g.iter().any(|v| !v.is_finite()) {
            return Err(SublevelError::NonFinite(format!(
                "{} gradient",
                self.kind.name()
            )));
        }
        Ok(g)
    }

    /// Per-sample curvature weights `d` and the ridge shift `c` so that
    /// `hess f(x) = A' diag(d) A + c I`. For the hinge the weights are the
    /// almost-everywhere second derivative, ignoring the measure-zero kink
    /// set; the active set is `{i : 1 - b_i a_i'x > 0}`.
    fn curvature_weights(&self, x: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        match self.kind {
            ObjectiveKind::NonlinearLeastSquares => {
                let w = &self.features * x;
                let m = self.samples() as f64;
                let d = DVector::from_fn(w.len(), |i, _| {
                    let phi = sigmoid(w[i]);
                    let dphi = phi * (1.0 - phi);
                    let d2phi = dphi * (1.0 - 2.0 * phi);
                    2.0 / m * (dphi * dphi - (self.labels[i] - phi) * d2phi)
                });
                Ok((d, 0.0))
            }
            ObjectiveKind::LogLinear => {
                let u = self.barrier_margins(x)?;
                Ok((u.map(|ui| 1.0 / (ui * ui)), 0.0))
            }
            ObjectiveKind::Logistic { ridge } => {
                let w = &self.features * x;
                let m = self.samples() as f64;
                let d = DVector::from_fn(w.len(), |i, _| {
                    let p = sigmoid(self.labels[i] * w[i]);
                    p * (1.0 - p) / m
                });
                Ok((d, ridge))
            }
            ObjectiveKind::SvmHinge2 { weight } => {
                let w = &self.features * x;
                let d = DVector::from_fn(w.len(), |i, _| {
                    if 1.0 - self.labels[i] * w[i] > 0.0 {
                        weight
                    } else {
                        0.0
                    }
                });
                Ok((d, 1.0))
            }
            ObjectiveKind::Quadratic => unreachable!("quadratic handled structurally"),
        }
    }

    pub fn hessian_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        self.check_dim(v)?;
        if let ObjectiveKind::Quadratic = self.kind {
            return Ok(&self.features * v);
        }
        let (d, c) = self.curvature_weights(x)?;
        let av = &self.features * v;
        let weighted = DVector::from_fn(av.len(), |i, _| d[i] * av[i]);
        Ok(self.features.transpose() * weighted + v * c)
    }

    pub fn dense_hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        if !self.dense_hessian_ok() {
            return Err(SublevelError::CapExceeded {
                n: self.dim(),
                cap: self.dense_cap,
            });
        }
        if let ObjectiveKind::Quadratic = self.kind {
            return Ok(self.features.clone());
        }
        let (d, c) = self.curvature_weights(x)?;
        let mut scaled = self.features.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= d[i];
        }
        let mut h = self.features.transpose() * scaled;
        for i in 0..self.dim() {
            h[(i, i)] += c;
        }
        Ok(h)
    }

    /// `R hess f(x) P` assembled from the sampled feature columns in
    /// `O(m N^2)`.
    pub fn reduced_hessian(
        &self,
        x: &DVector<f64>,
        op: &SamplingOperator,
    ) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        if let ObjectiveKind::Quadratic = self.kind {
            return op.principal_submatrix(&self.features);
        }
        let (d, c) = self.curvature_weights(x)?;
        let a_s = op.select_columns(&self.features)?;
        let mut scaled = a_s.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= d[i];
        }
        let mut h = a_s.transpose() * scaled;
        for i in 0..op.coarse_dim() {
            h[(i, i)] += c;
        }
        Ok(h)
    }

    /// Precomputed state for evaluating `f(x + t d) - f(x)` along a fixed
    /// ray in `O(m)` per trial step. Differences are formed per sample, so
    /// line searches keep resolving progress even when it is far below the
    /// floating-point granularity of `|f|` (the barrier objective reaches
    /// `|f| ~ 1e3` while per-step decreases shrink to 1e-14).
    pub fn line_probe(&self, x: &DVector<f64>, d: &DVector<f64>) -> Result<LineProbe<'_>> {
        self.check_dim(x)?;
        self.check_dim(d)?;
        if let ObjectiveKind::Quadratic = self.kind {
            // delta(t) = t g'd + t^2/2 d'Hd, both scalars exact.
            let g = &self.features * x - &self.labels;
            let hd = &self.features * d;
            return Ok(LineProbe {
                obj: self,
                wx: DVector::zeros(0),
                wd: DVector::zeros(0),
                x_dot_d: g.dot(d),
                d_dot_d: d.dot(&hd),
            });
        }
        let wx = &self.features * x;
        let wd = &self.features * d;
        if let ObjectiveKind::LogLinear = self.kind {
            for (i, wxi) in wx.iter().enumerate() {
                if self.labels[i] - wxi <= 0.0 {
                    return Err(SublevelError::DomainViolation(format!(
                        "margin {i} non-positive at the probe anchor"
                    )));
                }
            }
        }
        Ok(LineProbe {
            obj: self,
            wx,
            wd,
            x_dot_d: x.dot(d),
            d_dot_d: d.dot(d),
        })
    }

    /// Matrix-free view of `hess f(x)` with the curvature weights frozen at
    /// `x`; block products cost `O(mn)` per column.
    pub fn hessian_operator(&self, x: &DVector<f64>) -> Result<HessianOperator<'_>> {
        self.check_dim(x)?;
        if let ObjectiveKind::Quadratic = self.kind {
            return Ok(HessianOperator {
                features: &self.features,
                weights: None,
                ridge: 0.0,
            });
        }
        let (d, c) = self.curvature_weights(x)?;
        Ok(HessianOperator {
            features: &self.features,
            weights: Some(d),
            ridge: c,
        })
    }

    /// Hessian estimate from a uniform subsample of data rows, scaled to be
    /// unbiased: `(m/|S|) A_S' D_S A_S + c I` with row-sampled `A_S`. Used
    /// by the subsampled Newton baseline; requires GLM sum structure.
    pub fn subsampled_hessian(&self, x: &DVector<f64>, rows: &[usize]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        if let ObjectiveKind::Quadratic = self.kind {
            return Ok(self.features.clone());
        }
        if rows.is_empty() {
            return Err(SublevelError::InvalidConfig(
                "row subsample must not be empty".into(),
            ));
        }
        if !self.dense_hessian_ok() {
            return Err(SublevelError::CapExceeded {
                n: self.dim(),
                cap: self.dense_cap,
            });
        }
        let (d, c) = self.curvature_weights(x)?;
        let scale = self.samples() as f64 / rows.len() as f64;
        let n = self.dim();
        let mut a_rows = DMatrix::zeros(rows.len(), n);
        let mut scaled = DMatrix::zeros(rows.len(), n);
        for (k, &r) in rows.iter().enumerate() {
            a_rows.set_row(k, &self.features.row(r));
            scaled.set_row(k, &(self.features.row(r) * (d[r] * scale)));
        }
        let mut h = a_rows.transpose() * scaled;
        for i in 0..n {
            h[(i, i)] += c;
        }
        Ok(h)
    }
}

/// See [`Objective::line_probe`].
pub struct LineProbe<'a> {
    obj: &'a Objective,
    /// `A x` — scores/margins at the anchor (empty for the quadratic
    /// adapter, which reduces to two scalars).
    wx: DVector<f64>,
    /// `A d`.
    wd: DVector<f64>,
    /// `x'd`; for the quadratic adapter `g'd`.
    x_dot_d: f64,
    /// `d'd`; for the quadratic adapter `d'Hd`.
    d_dot_d: f64,
}

impl LineProbe<'_> {
    /// `f(x + t d) - f(x)`, exact in the per-sample differences. A trial
    /// point outside the barrier domain reports `DomainViolation`.
    pub fn delta(&self, t: f64) -> Result<f64> {
        let m = self.wx.len();
        let delta = match self.obj.kind {
            ObjectiveKind::NonlinearLeastSquares => {
                let mut s = 0.0;
                for i in 0..m {
                    let b = self.obj.labels[i];
                    let r0 = b - sigmoid(self.wx[i]);
                    let rt = b - sigmoid(self.wx[i] + t * self.wd[i]);
                    s += rt * rt - r0 * r0;
                }
                s / m as f64
            }
            ObjectiveKind::LogLinear => {
                let mut s = 0.0;
                for i in 0..m {
                    let u = self.obj.labels[i] - self.wx[i];
                    let ratio = t * self.wd[i] / u;
                    if ratio >= 1.0 {
                        return Err(SublevelError::DomainViolation(format!(
                            "margin {i} closes at step {t:e}"
                        )));
                    }
                    s -= (-ratio).ln_1p();
                }
                s
            }
            ObjectiveKind::Logistic { ridge } => {
                let mut s = 0.0;
                for i in 0..m {
                    let b = self.obj.labels[i];
                    s += softplus(-b * (self.wx[i] + t * self.wd[i]))
                        - softplus(-b * self.wx[i]);
                }
                s / m as f64 + ridge * (t * self.x_dot_d + 0.5 * t * t * self.d_dot_d)
            }
            ObjectiveKind::SvmHinge2 { weight } => {
                let mut s = 0.0;
                for i in 0..m {
                    let b = self.obj.labels[i];
                    let s0 = (1.0 - b * self.wx[i]).max(0.0);
                    let st = (1.0 - b * (self.wx[i] + t * self.wd[i])).max(0.0);
                    s += st * st - s0 * s0;
                }
                t * self.x_dot_d + 0.5 * t * t * self.d_dot_d + 0.5 * weight * s
            }
            ObjectiveKind::Quadratic => t * self.x_dot_d + 0.5 * t * t * self.d_dot_d,
        };
        if !delta.is_finite() {
            return Err(SublevelError::NonFinite("line probe delta".into()));
        }
        Ok(delta)
    }
}

/// See [`Objective::hessian_operator`].
pub struct HessianOperator<'a> {
    features: &'a DMatrix<f64>,
    weights: Option<DVector<f64>>,
    ridge: f64,
}

impl crate::spectral::SymmetricApply for HessianOperator<'_> {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn apply_block(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.weights {
            None => self.features * block,
            Some(d) => {
                let mut av = self.features * block;
                for (i, mut row) in av.row_iter_mut().enumerate() {
                    row *= d[i];
                }
                self.features.transpose() * av + block * self.ridge
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarse::sample_operator;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn central_diff_gradient(obj: &Objective, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| {
            let h = 1e-6 * (1.0 + x[i].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            (obj.value(&xp).unwrap() - obj.value(&xm).unwrap()) / (2.0 * h)
        })
    }

    fn fd_check(obj: &Objective, x: &DVector<f64>) {
        let g = obj.gradient(x).unwrap();
        let fd = central_diff_gradient(obj, x);
        let denom = g.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let err = (&g - &fd).iter().fold(0.0f64, |a, v| a.max(v.abs())) / denom;
        assert!(err <= 1e-5, "finite-difference mismatch {err:e}");
    }

    #[test]
    fn nls_value_at_origin() {
        let obj = synthetic::nls_instance(40, 6, 3);
        let f = obj.value(&DVector::zeros(6)).unwrap();
        let expect = obj
            .labels()
            .iter()
            .map(|b| (b - 0.5) * (b - 0.5))
            .sum::<f64>()
            / 40.0;
        assert_relative_eq!(f, expect, epsilon = 1e-15);
    }

    #[test]
    fn logistic_value_at_origin_is_log_two() {
        let obj = synthetic::logistic_instance(50, 8, 0.0, 4);
        let f = obj.value(&DVector::zeros(8)).unwrap();
        assert_relative_eq!(f, std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn loglinear_value_with_zero_features() {
        let a = DMatrix::zeros(2, 3);
        let b = DVector::from_row_slice(&[2.0, 2.0]);
        let obj = Objective::log_linear(a, b).unwrap();
        let f = obj.value(&DVector::zeros(3)).unwrap();
        assert_relative_eq!(f, -2.0 * 2.0f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn loglinear_rejects_out_of_domain() {
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        let b = DVector::from_row_slice(&[1.0]);
        let obj = Objective::log_linear(a, b).unwrap();
        assert!(matches!(
            obj.value(&DVector::from_row_slice(&[2.0])),
            Err(SublevelError::DomainViolation(_))
        ));
    }

    #[test]
    fn quadratic_adapter_identity() {
        let obj =
            Objective::quadratic(DMatrix::identity(4, 4), DVector::zeros(4)).unwrap();
        let x = DVector::from_row_slice(&[1.0, -2.0, 0.5, 3.0]);
        let v = DVector::from_row_slice(&[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(obj.gradient(&x).unwrap(), x);
        assert_eq!(obj.hessian_vec(&x, &v).unwrap(), v);
    }

    #[test]
    fn hinge_inactive_region_is_pure_ridge() {
        // One sample with margin strictly satisfied at the probe point.
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let b = DVector::from_row_slice(&[1.0]);
        let obj = Objective::svm_hinge2(a, b, 1e-2).unwrap();
        let x = DVector::from_row_slice(&[5.0, 1.0]);
        assert_eq!(obj.gradient(&x).unwrap(), x);
        let h = obj.dense_hessian(&x).unwrap();
        assert_relative_eq!((h - DMatrix::identity(2, 2)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..4u64 {
            let nls = synthetic::nls_instance(60, 10, seed);
            let logistic = synthetic::logistic_instance(60, 10, 1e-3, seed);
            let svm = synthetic::svm_instance(60, 10, 1e-2, seed);
            let loglin = synthetic::loglinear_instance(80, 10, seed);
            let x = DVector::from_fn(10, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                0.2 * z
            });
            fd_check(&nls, &x);
            fd_check(&logistic, &x);
            fd_check(&svm, &x);
            let x_feasible = synthetic::shrink_into_domain(&loglin, &x);
            fd_check(&loglin, &x_feasible);
        }
    }

    #[test]
    fn hessian_vec_matches_dense() {
        let obj = synthetic::logistic_instance(50, 12, 1e-2, 9);
        let x = DVector::from_fn(12, |i, _| 0.1 * (i as f64).cos());
        let v = DVector::from_fn(12, |i, _| (i as f64 + 1.0).recip());
        let hv = obj.hessian_vec(&x, &v).unwrap();
        let dense = obj.dense_hessian(&x).unwrap();
        assert!((hv - dense * v).norm() <= 1e-8);
    }

    #[test]
    fn reduced_hessian_is_principal_submatrix() {
        for seed in 0..6u64 {
            let obj = synthetic::nls_instance(70, 20, seed);
            let op = sample_operator(20, 7, seed + 100).unwrap();
            let x = DVector::from_fn(20, |i, _| 0.15 * ((i * 7) as f64).sin());
            let reduced = obj.reduced_hessian(&x, &op).unwrap();
            let dense = obj.dense_hessian(&x).unwrap();
            let sub = op.principal_submatrix(&dense).unwrap();
            let err = (&reduced - &sub).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(err <= 1e-10, "principal submatrix mismatch {err:e}");
        }
    }

    #[test]
    fn subsampled_hessian_full_sample_is_exact() {
        let obj = synthetic::logistic_instance(40, 8, 1e-3, 13);
        let x = DVector::from_fn(8, |i, _| 0.05 * i as f64);
        let rows: Vec<usize> = (0..40).collect();
        let sub = obj.subsampled_hessian(&x, &rows).unwrap();
        let dense = obj.dense_hessian(&x).unwrap();
        assert!((sub - dense).norm() <= 1e-10);
    }

    #[test]
    fn convexity_probes() {
        use crate::spectral::dense_symmetric_eig;
        let logistic = synthetic::logistic_instance(80, 12, 1e-3, 21);
        let x = DVector::from_fn(12, |i, _| 0.1 * (i as f64));
        let eig = dense_symmetric_eig(&logistic.dense_hessian(&x).unwrap()).unwrap();
        let min = eig.values[eig.values.len() - 1];
        assert!(min >= 1e-3 * (1.0 - 1e-8), "logistic min eig {min:e}");

        let svm = synthetic::svm_instance(80, 12, 1e-2, 22);
        let eig = dense_symmetric_eig(&svm.dense_hessian(&x).unwrap()).unwrap();
        let min = eig.values[eig.values.len() - 1];
        assert!(min >= 1.0 - 1e-8, "hinge-2 min eig {min:e}");

        let loglin = synthetic::loglinear_instance(60, 10, 23);
        let y = DVector::zeros(10);
        let eig = dense_symmetric_eig(&loglin.dense_hessian(&y).unwrap()).unwrap();
        assert!(eig.values[eig.values.len() - 1] > 0.0);
    }

    #[test]
    fn nls_hessian_indefinite_at_saddle_probe() {
        use crate::spectral::dense_symmetric_eig;
        // The Hessian of the sigmoid least-squares loss at the origin is
        // (2 phi'(0)^2 / m) A'A, which is positive semidefinite for any
        // data; indefiniteness appears away from the origin. The plateau
        // instance carries a designated probe point on its trap side.
        let (obj, info) = synthetic::plateau_nls_instance(&synthetic::PlateauParams {
            m: 450,
            n: 100,
            block: 8,
            gateway_rows: 2,
            kappa: 1.0,
            anchor_scale: 0.25,
            guards: 3,
            guard_rows: 4,
            guard_scale: 4.0,
            seed: 5,
        })
        .unwrap();
        let eig_origin =
            dense_symmetric_eig(&obj.dense_hessian(&DVector::zeros(100)).unwrap()).unwrap();
        assert!(eig_origin.values[99] >= -1e-12, "origin Hessian is PSD");
        let eig = dense_symmetric_eig(&obj.dense_hessian(&info.saddle_point).unwrap()).unwrap();
        assert!(
            eig.values[99] < -1e-9,
            "expected a negative eigenvalue at the saddle probe, got {:e}",
            eig.values[99]
        );
    }

    #[test]
    fn synthetic_generation_is_deterministic() {
        let spec = SyntheticSpec {
            m: 30,
            n: 5,
            distribution: SyntheticDistribution::GaussianFeatures,
            seed: 77,
        };
        let (a1, b1) = generate_synthetic(&spec).unwrap();
        let (a2, b2) = generate_synthetic(&spec).unwrap();
        assert_eq!(a1.as_slice(), a2.as_slice());
        assert_eq!(b1.as_slice(), b2.as_slice());
    }

    #[test]
    fn loglinear_feasible_at_origin() {
        let spec = SyntheticSpec {
            m: 200,
            n: 20,
            distribution: SyntheticDistribution::LogLinearFeasible,
            seed: 3,
        };
        let (_, b) = generate_synthetic(&spec).unwrap();
        assert!(b.iter().all(|bi| *bi > 0.0));
    }

    #[test]
    fn gaussian_column_means_concentrate() {
        let spec = SyntheticSpec {
            m: 10_000,
            n: 1000,
            distribution: SyntheticDistribution::GaussianFeatures,
            seed: 13,
        };
        let (a, _) = generate_synthetic(&spec).unwrap();
        let bound = 4.0 / (spec.m as f64).sqrt();
        for j in 0..spec.n {
            let mean = a.column(j).sum() / spec.m as f64;
            assert!(mean.abs() <= bound, "column {j} mean {mean:e}");
        }
    }
}
