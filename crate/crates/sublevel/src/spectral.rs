//! Symmetric eigendecomposition (dense and randomized), truncated spectra
//! with eigenvalue flooring, and the implicit low-rank inverse operators
//! built from them.
//!
//! A floored spectrum keeps the top `p` eigenpairs of a symmetric matrix and
//! replaces the discarded tail with the `(p+1)`-th eigenvalue, so the
//! resulting inverse
//!
//! ```text
//! Q^{-1} = s^{-1} I + U (S^{-1} - s^{-1} I) U'
//! ```
//!
//! stays well conditioned and is applied matrix-free in `O(dp)` per vector.
//! For non-convex problems the eigenvalues additionally pass through
//! `g(x) = max(|x|, nu)`, which keeps curvature magnitude while forcing
//! positive definiteness.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::coarse::SamplingOperator;
use crate::error::{Result, SublevelError};

/// How the tail of a spectrum is floored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FloorMode {
    /// Keep eigenvalues as-is; requires a strictly positive floor.
    Convex,
    /// Map every kept eigenvalue and the floor through `g(x) = max(|x|, nu)`.
    NonConvexTruncated { nu: f64 },
}

/// Full or partial eigenpairs of a symmetric matrix, eigenvalues in
/// descending order of value, eigenvectors as matching columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }

    /// Dimension of the space the eigenvectors live in.
    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }
}

/// Full eigendecomposition of a symmetric matrix, descending eigenvalue
/// order. The input is symmetrized as `(A + A')/2` first; numerical Hessians
/// are routinely asymmetric at the 1e-14 level.
pub fn dense_symmetric_eig(a: &DMatrix<f64>) -> Result<EigenPairs> {
    if a.nrows() != a.ncols() {
        return Err(SublevelError::InvalidMatrix(format!(
            "expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(SublevelError::InvalidMatrix(
            "matrix contains non-finite entries".into(),
        ));
    }
    let sym = (a + a.transpose()) * 0.5;
    let d = sym.nrows();
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .expect("finite eigenvalues")
    });
    let mut values = DVector::zeros(d);
    let mut vectors = DMatrix::zeros(d, d);
    for (col, &src) in order.iter().enumerate() {
        values[col] = eig.eigenvalues[src];
        vectors.set_column(col, &eig.eigenvectors.column(src));
    }
    Ok(EigenPairs { values, vectors })
}

/// A symmetric linear operator given by its action on blocks of vectors.
pub trait SymmetricApply {
    fn dim(&self) -> usize;
    fn apply_block(&self, block: &DMatrix<f64>) -> DMatrix<f64>;
}

impl SymmetricApply for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_block(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        self * block
    }
}

/// Matrix-free operator backed by a closure.
pub struct ApplyFn<F: Fn(&DMatrix<f64>) -> DMatrix<f64>> {
    dim: usize,
    apply: F,
}

impl<F: Fn(&DMatrix<f64>) -> DMatrix<f64>> ApplyFn<F> {
    pub fn new(dim: usize, apply: F) -> Self {
        ApplyFn { dim, apply }
    }
}

impl<F: Fn(&DMatrix<f64>) -> DMatrix<f64>> SymmetricApply for ApplyFn<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_block(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        (self.apply)(block)
    }
}

/// Knobs for the randomized range finder. The defaults (Gaussian test
/// matrix, oversampling 10, two subspace power iterations) are a standard
/// accuracy/cost trade-off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TsvdConfig {
    pub oversample: usize,
    pub power_iters: usize,
}

impl Default for TsvdConfig {
    fn default() -> Self {
        TsvdConfig {
            oversample: 10,
            power_iters: 2,
        }
    }
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Randomized truncated eigendecomposition of a symmetric operator:
/// computes the `p+1` dominant-magnitude eigenpairs via a seeded Gaussian
/// range finder with subspace power iteration, then floors per `mode`.
///
/// Deterministic for a fixed seed. On matrices with an eigenvalue gap
/// `sigma_p / sigma_{p+1} >= 10` and at least two power iterations the kept
/// eigenvalues match the dense decomposition to 1e-6 relative.
pub fn randomized_tsvd(
    op: &dyn SymmetricApply,
    p: usize,
    cfg: &TsvdConfig,
    mode: FloorMode,
    seed: u64,
) -> Result<TruncatedSpectrum> {
    let d = op.dim();
    if p == 0 || p + 1 > d {
        return Err(SublevelError::RankTooLarge {
            requested: p,
            needed: p + 1,
            available: d,
        });
    }
    let block = (p + 1 + cfg.oversample).min(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(d, block, |_, _| StandardNormal.sample(&mut rng));

    let mut q = orthonormalize(op.apply_block(&omega));
    for _ in 0..cfg.power_iters {
        let z = orthonormalize(op.apply_block(&q));
        q = orthonormalize(op.apply_block(&z));
    }
    let b = {
        let aq = op.apply_block(&q);
        q.transpose() * aq
    };
    let small = dense_symmetric_eig(&b)?;
    let raw = EigenPairs {
        values: small.values,
        vectors: &q * small.vectors,
    };
    floor_spectrum(&raw, p, mode)
}

/// Top-`p` eigenpairs of a symmetric matrix plus the floor eigenvalue
/// `sigma_{p+1}`, already passed through the flooring map of its mode.
#[derive(Debug, Clone)]
pub struct TruncatedSpectrum {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
    floor: f64,
    mode: FloorMode,
}

/// Floors raw eigenpairs at rank `p`.
///
/// Convex mode keeps the `p` largest eigenvalues by value and floors the
/// tail with the `(p+1)`-th; the floor must be strictly positive. Non-convex
/// mode ranks by magnitude (the most informative directions are those of
/// largest curvature magnitude) and stores `g(x) = max(|x|, nu)` of every
/// kept value and of the floor.
pub fn floor_spectrum(raw: &EigenPairs, p: usize, mode: FloorMode) -> Result<TruncatedSpectrum> {
    if p == 0 || raw.len() < p + 1 {
        return Err(SublevelError::RankTooLarge {
            requested: p,
            needed: p + 1,
            available: raw.len(),
        });
    }
    if let FloorMode::NonConvexTruncated { nu } = mode {
        if nu <= 0.0 {
            return Err(SublevelError::InvalidConfig(format!(
                "eigenvalue floor nu must be positive, got {nu}"
            )));
        }
    }
    let mut order: Vec<usize> = (0..raw.len()).collect();
    // Stable sort keeps the underlying decomposition's index order on ties.
    match mode {
        FloorMode::Convex => {
            order.sort_by(|&i, &j| raw.values[j].partial_cmp(&raw.values[i]).unwrap())
        }
        FloorMode::NonConvexTruncated { .. } => order.sort_by(|&i, &j| {
            raw.values[j]
                .abs()
                .partial_cmp(&raw.values[i].abs())
                .unwrap()
        }),
    }

    let d = raw.dim();
    let mut values = DVector::zeros(p);
    let mut vectors = DMatrix::zeros(d, p);
    for (col, &src) in order[..p].iter().enumerate() {
        values[col] = raw.values[src];
        vectors.set_column(col, &raw.vectors.column(src));
    }
    let tail = raw.values[order[p]];

    let (values, floor) = match mode {
        FloorMode::Convex => {
            if tail <= 0.0 {
                return Err(SublevelError::NotPositiveDefinite { floor: tail });
            }
            (values, tail)
        }
        FloorMode::NonConvexTruncated { nu } => {
            (values.map(|x| x.abs().max(nu)), tail.abs().max(nu))
        }
    };

    let spectrum = TruncatedSpectrum {
        vectors,
        values,
        floor,
        mode,
    };
    spectrum.check_orthonormal()?;
    Ok(spectrum)
}

impl TruncatedSpectrum {
    /// Assembles a spectrum from raw parts, checking only orthonormality.
    /// This bypasses the flooring contract; it exists so negative-control
    /// tests can inject deliberately broken floors.
    #[doc(hidden)]
    pub fn from_raw_parts(
        vectors: DMatrix<f64>,
        values: DVector<f64>,
        floor: f64,
        mode: FloorMode,
    ) -> Result<Self> {
        let spectrum = TruncatedSpectrum {
            vectors,
            values,
            floor,
            mode,
        };
        spectrum.check_orthonormal()?;
        Ok(spectrum)
    }

    /// Dimension of the space the spectrum lives in.
    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// The floor eigenvalue `sigma_{p+1}` (post-`g` in non-convex mode).
    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn mode(&self) -> FloorMode {
        self.mode
    }

    fn check_orthonormal(&self) -> Result<()> {
        let gram = self.vectors.transpose() * &self.vectors;
        let p = self.rank();
        let max_dev = (gram - DMatrix::<f64>::identity(p, p))
            .iter()
            .fold(0.0f64, |acc, x| acc.max(x.abs()));
        if max_dev > 1e-9 {
            return Err(SublevelError::InvalidMatrix(format!(
                "eigenvector block lost orthonormality (max deviation {max_dev:e})"
            )));
        }
        Ok(())
    }

    /// `Q^{-1} v` with `Q^{-1} = s^{-1} I + U (S^{-1} - s^{-1} I) U' v`,
    /// applied in this spectrum's own space.
    pub fn apply_inverse_vec(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.apply_diag(v, |s| 1.0 / s)
    }

    /// Forward operator `Q v` (same structure with the eigenvalues
    /// themselves); used by tests probing the spectral bounds of `Q`.
    pub fn apply_vec(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.apply_diag(v, |s| s)
    }

    fn apply_diag(&self, v: &DVector<f64>, f: impl Fn(f64) -> f64) -> Result<DVector<f64>> {
        if v.len() != self.dim() {
            return Err(SublevelError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let f_floor = f(self.floor);
        let ut_v = self.vectors.transpose() * v;
        let scaled = DVector::from_fn(self.rank(), |i, _| (f(self.values[i]) - f_floor) * ut_v[i]);
        Ok(v * f_floor + &self.vectors * scaled)
    }

    /// Dense reconstruction of `Q^{-1}`; an oracle for small dimensions.
    pub fn dense_inverse(&self) -> DMatrix<f64> {
        let d = self.dim();
        let inv_floor = 1.0 / self.floor;
        let mut m = DMatrix::identity(d, d) * inv_floor;
        for i in 0..self.rank() {
            let u = self.vectors.column(i);
            let w = 1.0 / self.values[i] - inv_floor;
            m += (u * u.transpose()) * w;
        }
        m
    }
}

/// Which space a [`LowRankInverse`] acts on.
#[derive(Debug, Clone)]
pub enum Scope {
    /// Acts directly on the fine space.
    FullSpace,
    /// Acts through `P Q_H^{-1} R`: restrict, invert in the coarse space,
    /// prolongate back.
    CoarseSpace(SamplingOperator),
}

/// The implicit inverse operator built from a floored spectrum, applied
/// matrix-free.
#[derive(Debug, Clone)]
pub struct LowRankInverse {
    spectrum: TruncatedSpectrum,
    scope: Scope,
}

impl LowRankInverse {
    pub fn full_space(spectrum: TruncatedSpectrum) -> Self {
        LowRankInverse {
            spectrum,
            scope: Scope::FullSpace,
        }
    }

    pub fn coarse(spectrum: TruncatedSpectrum, op: SamplingOperator) -> Result<Self> {
        if spectrum.dim() != op.coarse_dim() {
            return Err(SublevelError::DimensionMismatch {
                expected: op.coarse_dim(),
                got: spectrum.dim(),
            });
        }
        Ok(LowRankInverse {
            spectrum,
            scope: Scope::CoarseSpace(op),
        })
    }

    pub fn spectrum(&self) -> &TruncatedSpectrum {
        &self.spectrum
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    /// Applies the inverse operator to a fine-space vector.
    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.scope {
            Scope::FullSpace => self.spectrum.apply_inverse_vec(v),
            Scope::CoarseSpace(op) => {
                let w = op.restrict(v)?;
                op.prolong(&self.spectrum.apply_inverse_vec(&w)?)
            }
        }
    }

    /// `v' Q^{-1} v`; the squared approximate decrement when `v` is a
    /// gradient.
    pub fn quadratic_form(&self, v: &DVector<f64>) -> Result<f64> {
        Ok(v.dot(&self.apply(v)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn random_spd(d: usize, eigenvalues: &[f64], seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(d, d, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        });
        let q = g.qr().q();
        let lambda = DMatrix::from_diagonal(&DVector::from_row_slice(eigenvalues));
        &q * lambda * q.transpose()
    }

    #[test]
    fn dense_eig_identity() {
        let pairs = dense_symmetric_eig(&DMatrix::identity(3, 3)).unwrap();
        for i in 0..3 {
            assert_relative_eq!(pairs.values[i], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dense_eig_diagonal_is_sorted() {
        let a = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 3.0, 2.0]));
        let pairs = dense_symmetric_eig(&a).unwrap();
        assert_relative_eq!(pairs.values[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(pairs.values[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(pairs.values[2], 1.0, epsilon = 1e-12);
        // Eigenvectors of a diagonal matrix are signed unit vectors.
        for col in 0..3 {
            let v = pairs.vectors.column(col);
            let max_abs = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            assert_relative_eq!(max_abs, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dense_eig_reconstructs() {
        let a = random_spd(8, &[9.0, 7.5, 4.0, 3.0, 2.0, 1.5, 0.7, 0.2], 42);
        let pairs = dense_symmetric_eig(&a).unwrap();
        let recon = &pairs.vectors
            * DMatrix::from_diagonal(&pairs.values)
            * pairs.vectors.transpose();
        let rel = (&recon - &a).norm() / a.norm();
        assert!(rel <= 1e-12, "reconstruction residual {rel:e}");
    }

    #[test]
    fn dense_eig_rejects_non_finite() {
        let mut a = DMatrix::identity(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(
            dense_symmetric_eig(&a),
            Err(SublevelError::InvalidMatrix(_))
        ));
    }

    #[test]
    fn tsvd_gapped_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_row_slice(&[100.0, 10.0, 1.0, 0.1]));
        let spec =
            randomized_tsvd(&a, 1, &TsvdConfig::default(), FloorMode::Convex, 7).unwrap();
        assert_relative_eq!(spec.values()[0], 100.0, max_relative = 1e-6);
        assert_relative_eq!(spec.floor(), 10.0, max_relative = 1e-6);
    }

    #[test]
    fn tsvd_identity() {
        let a = DMatrix::<f64>::identity(6, 6);
        let spec =
            randomized_tsvd(&a, 3, &TsvdConfig::default(), FloorMode::Convex, 3).unwrap();
        for i in 0..3 {
            assert_relative_eq!(spec.values()[i], 1.0, epsilon = 1e-10);
        }
        assert_relative_eq!(spec.floor(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn tsvd_matches_dense_on_decaying_spectrum() {
        let eigs: Vec<f64> = (0..50).map(|i| 2.0f64.powi(-i)).collect();
        for seed in 0..5u64 {
            let a = random_spd(50, &eigs, 100 + seed);
            let dense = dense_symmetric_eig(&a).unwrap();
            let spec =
                randomized_tsvd(&a, 5, &TsvdConfig::default(), FloorMode::Convex, seed).unwrap();
            for i in 0..5 {
                assert_relative_eq!(spec.values()[i], dense.values[i], max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn tsvd_rank_too_large() {
        let a = DMatrix::<f64>::identity(4, 4);
        assert!(matches!(
            randomized_tsvd(&a, 4, &TsvdConfig::default(), FloorMode::Convex, 0),
            Err(SublevelError::RankTooLarge { .. })
        ));
    }

    #[test]
    fn tsvd_deterministic_for_seed() {
        let a = random_spd(12, &[8.0, 4.0, 2.0, 1.0, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01], 5);
        let s1 = randomized_tsvd(&a, 3, &TsvdConfig::default(), FloorMode::Convex, 11).unwrap();
        let s2 = randomized_tsvd(&a, 3, &TsvdConfig::default(), FloorMode::Convex, 11).unwrap();
        assert_eq!(s1.values().as_slice(), s2.values().as_slice());
        assert_eq!(s1.vectors().as_slice(), s2.vectors().as_slice());
    }

    fn pairs_from_diag(values: &[f64]) -> EigenPairs {
        let d = values.len();
        EigenPairs {
            values: DVector::from_row_slice(values),
            vectors: DMatrix::identity(d, d),
        }
    }

    #[test]
    fn floor_nonconvex_uses_magnitude_and_g() {
        let raw = pairs_from_diag(&[5.0, -3.0, 1e-4]);
        let spec =
            floor_spectrum(&raw, 2, FloorMode::NonConvexTruncated { nu: 1e-10 }).unwrap();
        assert_eq!(spec.values().as_slice(), &[5.0, 3.0]);
        assert_relative_eq!(spec.floor(), 1e-4, epsilon = 1e-18);
    }

    #[test]
    fn floor_convex_keeps_values() {
        let raw = pairs_from_diag(&[4.0, 3.0, 2.0, 1.0]);
        let spec = floor_spectrum(&raw, 2, FloorMode::Convex).unwrap();
        assert_eq!(spec.values().as_slice(), &[4.0, 3.0]);
        assert_eq!(spec.floor(), 2.0);
    }

    #[test]
    fn floor_lifts_tiny_tail_to_nu() {
        let raw = pairs_from_diag(&[1.0, -1e-12]);
        let spec =
            floor_spectrum(&raw, 1, FloorMode::NonConvexTruncated { nu: 1e-10 }).unwrap();
        assert_eq!(spec.floor(), 1e-10);
    }

    #[test]
    fn floor_convex_rejects_nonpositive_tail() {
        let raw = pairs_from_diag(&[2.0, 1.0, -0.5]);
        assert!(matches!(
            floor_spectrum(&raw, 2, FloorMode::Convex),
            Err(SublevelError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn apply_inverse_matches_hand_computation() {
        // H = diag(4, 2, 1), p = 1 convex: floor = 2, kept pair (4, e1).
        let raw = pairs_from_diag(&[4.0, 2.0, 1.0]);
        let spec = floor_spectrum(&raw, 1, FloorMode::Convex).unwrap();
        let v = DVector::from_row_slice(&[1.0, 1.0, 1.0]);
        let out = spec.apply_inverse_vec(&v).unwrap();
        assert_relative_eq!(out[0], 0.25, epsilon = 1e-15);
        assert_relative_eq!(out[1], 0.5, epsilon = 1e-15);
        assert_relative_eq!(out[2], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn apply_inverse_identity_spectrum_is_identity() {
        let raw = pairs_from_diag(&[1.0, 1.0, 1.0, 1.0]);
        let spec = floor_spectrum(&raw, 2, FloorMode::Convex).unwrap();
        let v = DVector::from_row_slice(&[3.0, -1.0, 0.5, 2.0]);
        let out = spec.apply_inverse_vec(&v).unwrap();
        assert_relative_eq!((out - &v).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn full_rank_floor_reproduces_inverse() {
        let d = 9;
        let eigs: Vec<f64> = (0..d).map(|i| 5.0 / (i as f64 + 1.0)).collect();
        let h = random_spd(d, &eigs, 17);
        let pairs = dense_symmetric_eig(&h).unwrap();
        let spec = floor_spectrum(&pairs, d - 1, FloorMode::Convex).unwrap();
        let v = DVector::from_fn(d, |i, _| (i as f64 * 0.37).sin());
        let got = spec.apply_inverse_vec(&v).unwrap();
        let want = h.clone().lu().solve(&v).unwrap();
        assert!((got - &want).norm() / want.norm() <= 1e-10);
    }

    #[test]
    fn apply_matches_dense_reconstruction() {
        let h = random_spd(7, &[6.0, 5.0, 3.0, 2.0, 1.0, 0.5, 0.25], 23);
        let pairs = dense_symmetric_eig(&h).unwrap();
        let spec = floor_spectrum(&pairs, 3, FloorMode::Convex).unwrap();
        let dense = spec.dense_inverse();
        let v = DVector::from_fn(7, |i, _| 1.0 / (i as f64 + 1.0));
        let got = spec.apply_inverse_vec(&v).unwrap();
        let want = &dense * &v;
        assert!((got - &want).norm() / want.norm() <= 1e-12);
    }

    #[test]
    fn convex_operator_spectral_bounds() {
        let h = random_spd(6, &[8.0, 4.0, 2.5, 1.5, 0.9, 0.4], 31);
        let pairs = dense_symmetric_eig(&h).unwrap();
        let spec = floor_spectrum(&pairs, 2, FloorMode::Convex).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let v = DVector::from_fn(6, |_, _| StandardNormal.sample(&mut rng));
            let quad = v.dot(&spec.apply_vec(&v).unwrap());
            let n2 = v.norm_squared();
            assert!(quad >= spec.floor() * n2 - 1e-9);
            assert!(quad <= spec.values()[0] * n2 + 1e-9);
        }
    }

    #[test]
    fn nonconvex_inverse_is_bounded_by_nu() {
        let nu = 1e-10;
        let raw = pairs_from_diag(&[2.0, -1.0, 1e-13, -1e-14]);
        let spec = floor_spectrum(&raw, 2, FloorMode::NonConvexTruncated { nu }).unwrap();
        let v = DVector::from_row_slice(&[1.0, -2.0, 0.5, 0.25]);
        let out = spec.apply_inverse_vec(&v).unwrap();
        assert!(out.norm() <= v.norm() / nu * (1.0 + 1e-12));
    }

    proptest! {
        #[test]
        fn apply_inverse_is_linear(seed in 0u64..200, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let h = random_spd(5, &[5.0, 3.0, 2.0, 1.0, 0.5], seed);
            let pairs = dense_symmetric_eig(&h).unwrap();
            let spec = floor_spectrum(&pairs, 2, FloorMode::Convex).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            let u = DVector::from_fn(5, |_, _| StandardNormal.sample(&mut rng));
            let v = DVector::from_fn(5, |_, _| StandardNormal.sample(&mut rng));
            let lhs = spec.apply_inverse_vec(&(&u * alpha + &v * beta)).unwrap();
            let rhs = spec.apply_inverse_vec(&u).unwrap() * alpha + spec.apply_inverse_vec(&v).unwrap() * beta;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + alpha.abs() + beta.abs()));
        }
    }
}
