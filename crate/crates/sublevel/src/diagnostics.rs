//! Decrements, self-concordance auxiliaries, sub-optimality certificates,
//! and the executable probes behind `verify`.
//!
//! Everything here is diagnostic: none of it gates the optimizers.
//! Inequalities receive a 1e-9 relative slack for floating point.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarse::SamplingOperator;
use crate::error::{Result, SublevelError};
use crate::optimizers::{self, IterationTrace, MethodConfig};
use crate::problems::Objective;
use crate::spectral::{
    dense_symmetric_eig, randomized_tsvd, FloorMode, LowRankInverse, TruncatedSpectrum,
    TsvdConfig,
};

/// Relative slack applied to every theorem inequality.
pub const INEQ_SLACK: f64 = 1e-9;

/// `omega(x) = x - log(1 + x)` on `x >= 0`.
pub fn omega(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(SublevelError::NotApplicable {
            lambda: x,
            reason: "omega needs x >= 0".into(),
        });
    }
    Ok(x - x.ln_1p())
}

/// `omega_*(x) = -x - log(1 - x)` on `0 <= x < 1`.
pub fn omega_star(x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(SublevelError::NotApplicable {
            lambda: x,
            reason: "omega_* needs 0 <= x < 1".into(),
        });
    }
    Ok(-x - (-x).ln_1p())
}

/// Super-linear region threshold of the full-space method:
/// `eta = (3 - sqrt(9 - 4 eps)) / 2`, `eps = min_k sigma_{k,n}/sigma_{k,N+1}`.
pub fn eta_full(epsilon: f64) -> f64 {
    (3.0 - (9.0 - 4.0 * epsilon).sqrt()) / 2.0
}

/// Coarse-method analogue `eta_hat = (3 - sqrt(5 + 4 eps_hat)) / 2` with
/// `eps_hat = sqrt(1 - M_hat^2)`.
pub fn eta_coarse(epsilon_hat: f64) -> f64 {
    (3.0 - (5.0 + 4.0 * epsilon_hat).sqrt()) / 2.0
}

/// Exact Newton decrement `[g' H^{-1} g]^{1/2}` by a dense Cholesky solve.
pub fn newton_decrement(obj: &Objective, x: &DVector<f64>) -> Result<f64> {
    let g = obj.gradient(x)?;
    let h = obj.dense_hessian(x)?;
    let chol = h
        .cholesky()
        .ok_or(SublevelError::NotPositiveDefinite { floor: f64::NAN })?;
    Ok(g.dot(&chol.solve(&g)).max(0.0).sqrt())
}

/// The decrement family at one point, computed through one sampling
/// operator and one floored spectrum of the reduced Hessian.
#[derive(Debug, Clone)]
pub struct DecrementReport {
    /// Exact Newton decrement.
    pub lambda: f64,
    /// Galerkin decrement through the exact reduced solve.
    pub lambda_tilde: f64,
    /// SigmaSVD decrement through the floored reduced spectrum.
    pub lambda_hat: f64,
    /// `sqrt(lambda^2 - lambda_hat^2)`.
    pub e_hat: f64,
    /// `sigma_N / sigma_{p+1}` of the reduced Hessian.
    pub ratio_reduced: f64,
    /// Worst normalized violation of the chain
    /// `sqrt(ratio) lt <= lh <= lt <= l`; non-positive when the chain holds.
    pub chain_violation: f64,
}

/// Computes the decrement family. `spectrum` must be the floored rank-`p`
/// spectrum of `R hess f(x) P` for the same operator.
pub fn approx_decrements(
    obj: &Objective,
    x: &DVector<f64>,
    op: &SamplingOperator,
    spectrum: &TruncatedSpectrum,
) -> Result<DecrementReport> {
    let g = obj.gradient(x)?;
    let lambda = newton_decrement(obj, x)?;

    let h_r = obj.reduced_hessian(x, op)?;
    let rg = op.restrict(&g)?;
    let chol = h_r
        .clone()
        .cholesky()
        .ok_or(SublevelError::SingularReducedHessian)?;
    let lambda_tilde = rg.dot(&chol.solve(&rg)).max(0.0).sqrt();

    let inv = LowRankInverse::coarse(spectrum.clone(), op.clone())?;
    let lambda_hat = inv.quadratic_form(&g)?.max(0.0).sqrt();

    let reduced_eig = dense_symmetric_eig(&h_r)?;
    let sigma_n_small = reduced_eig.values[reduced_eig.values.len() - 1];
    let ratio_reduced = sigma_n_small / spectrum.floor();

    if lambda_hat * lambda_hat > lambda * lambda * (1.0 + 1e-10) {
        return Err(SublevelError::NotApplicable {
            lambda: lambda_hat,
            reason: format!("lambda_hat {lambda_hat} exceeds lambda {lambda}"),
        });
    }
    let e_hat = (lambda * lambda - lambda_hat * lambda_hat).max(0.0).sqrt();

    let slack = INEQ_SLACK * (1.0 + lambda);
    let chain_violation = [
        ratio_reduced.max(0.0).sqrt() * lambda_tilde - lambda_hat,
        lambda_hat - lambda_tilde,
        lambda_tilde - lambda,
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max)
        - slack;

    Ok(DecrementReport {
        lambda,
        lambda_tilde,
        lambda_hat,
        e_hat,
        ratio_reduced,
        chain_violation,
    })
}

/// Full-space floored decrement `lambda_bar` at rank `N`, plus the
/// eigenvalue ratio `sigma_n / sigma_{N+1}` it is sandwiched by.
pub fn full_space_decrement(
    obj: &Objective,
    x: &DVector<f64>,
    coarse_dim: usize,
    tsvd: &TsvdConfig,
    seed: u64,
) -> Result<(f64, f64)> {
    let g = obj.gradient(x)?;
    let spectrum =
        optimizers::full_hessian_spectrum(obj, x, coarse_dim, tsvd, FloorMode::Convex, seed)?;
    let inv = LowRankInverse::full_space(spectrum);
    let lambda_bar = inv.quadratic_form(&g)?.max(0.0).sqrt();
    let eig = dense_symmetric_eig(&obj.dense_hessian(x)?)?;
    let ratio = eig.values[eig.values.len() - 1] / eig.values[coarse_dim];
    Ok((lambda_bar, ratio))
}

/// Normalized gaps of the four identities relating the Newton
/// direction `d`, the coarse direction `d_hat`, and the decrements. Each
/// gap is non-positive (up to slack) when the corresponding statement
/// holds; `identity_gap` is an absolute deviation.
#[derive(Debug, Clone)]
pub struct DirectionGaps {
    /// `| d' H d_hat - lambda_hat^2 |`, normalized.
    pub identity_gap: f64,
    /// `d_hat' H d_hat - lambda_hat^2`, normalized.
    pub bound_gap: f64,
    /// `|| H^{1/2} (d - d_hat) || - e_hat`, normalized.
    pub sqrt_distance_gap: f64,
    /// Worst chain violation from [`approx_decrements`].
    pub chain_violation: f64,
}

/// Evaluates the direction-level identities at one `(problem, operator,
/// spectrum)` triple.
pub fn direction_gaps(
    obj: &Objective,
    x: &DVector<f64>,
    op: &SamplingOperator,
    spectrum: &TruncatedSpectrum,
) -> Result<DirectionGaps> {
    let report = approx_decrements(obj, x, op, spectrum)?;
    let g = obj.gradient(x)?;
    let h = obj.dense_hessian(x)?;
    let d_newton = optimizers::newton_direction(obj, x)?;
    let inv = LowRankInverse::coarse(spectrum.clone(), op.clone())?;
    let d_hat = -inv.apply(&g)?;

    let lh_sq = report.lambda_hat * report.lambda_hat;
    let norm = 1.0 + lh_sq;
    let identity_gap = (d_newton.dot(&(&h * &d_hat)) - lh_sq).abs() / norm;
    let bound_gap = (d_hat.dot(&(&h * &d_hat)) - lh_sq) / norm - INEQ_SLACK;

    let eig = dense_symmetric_eig(&h)?;
    let sqrt_vals = DVector::from_fn(eig.values.len(), |i, _| eig.values[i].max(0.0).sqrt());
    let h_sqrt = &eig.vectors * DMatrix::from_diagonal(&sqrt_vals) * eig.vectors.transpose();
    let dist = (&h_sqrt * (&d_newton - &d_hat)).norm();
    let sqrt_distance_gap = (dist - report.e_hat) / (1.0 + report.e_hat) - INEQ_SLACK;

    Ok(DirectionGaps {
        identity_gap,
        bound_gap,
        sqrt_distance_gap,
        chain_violation: report.chain_violation,
    })
}

/// Sub-optimality sandwich `omega(lambda) <= f - f* <= omega_*(lambda)`,
/// valid for `lambda < 1`. Returns `(lower, upper, holds)` where `holds`
/// allows 1e-8 absolute slack, and additionally enforces
/// `f - f* <= lambda^2` once `lambda <= 0.68`.
pub fn suboptimality_bounds(
    obj: &Objective,
    x: &DVector<f64>,
    f_star: f64,
) -> Result<(f64, f64, bool)> {
    let lambda = newton_decrement(obj, x)?;
    if lambda >= 1.0 {
        return Err(SublevelError::NotApplicable {
            lambda,
            reason: "sandwich needs lambda < 1".into(),
        });
    }
    let gap = obj.value(x)? - f_star;
    let lower = omega(lambda)?;
    let upper = omega_star(lambda)?;
    let slack = 1e-8;
    let mut holds = gap >= lower - slack && gap <= upper + slack;
    if lambda <= 0.68 {
        holds = holds && gap <= lambda * lambda + slack;
    }
    Ok((lower, upper, holds))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseKind {
    /// Threshold `eta` from the eigenvalue-ratio stream.
    FullSpace,
    /// Threshold `eta_hat` from the decrement-ratio surrogate
    /// `M_hat ~ min_k lambda_hat_k / lambda_k`.
    Coarse,
}

/// Classification of a trace into the damped phase and the locally
/// super-linear phase.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseReport {
    pub kind: PhaseKind,
    /// `eps` (full-space ratio) or `eps_hat` (coarse surrogate).
    pub epsilon: f64,
    /// `eta` or `eta_hat`.
    pub threshold: f64,
    /// First iterate with `lambda <= threshold`; `None` when the region is
    /// never entered.
    pub entered_at: Option<usize>,
    /// Every accepted step after entry is the unit step.
    pub unit_steps_after: bool,
    /// `lambda` strictly decreases at every iterate after entry.
    pub strict_decrease_after: bool,
    /// `lambda_{k+1} / lambda_k` after entry.
    pub lambda_ratios: Vec<f64>,
}

/// Classifies a diagnostics-enabled trace. The eigenvalue-ratio stream
/// comes from the trace's diagnostic rows.
pub fn phase_report(trace: &IterationTrace, kind: PhaseKind) -> Result<PhaseReport> {
    let diag = trace.diagnostics.as_ref().ok_or_else(|| {
        SublevelError::InvalidConfig("phase_report needs a diagnostics-enabled trace".into())
    })?;

    let epsilon = match kind {
        PhaseKind::FullSpace => diag
            .iter()
            .filter_map(|r| r.eig_ratio)
            .fold(f64::INFINITY, f64::min),
        PhaseKind::Coarse => {
            let m_hat = diag
                .iter()
                .filter_map(|r| r.decrement_ratio)
                .fold(f64::INFINITY, f64::min);
            if !m_hat.is_finite() {
                f64::INFINITY
            } else {
                (1.0 - (m_hat.min(1.0)).powi(2)).max(0.0).sqrt()
            }
        }
    };
    if !epsilon.is_finite() {
        return Err(SublevelError::InvalidConfig(
            "trace carries no ratio stream for the requested phase kind".into(),
        ));
    }
    let threshold = match kind {
        PhaseKind::FullSpace => eta_full(epsilon.clamp(0.0, 1.0)),
        PhaseKind::Coarse => eta_coarse(epsilon.clamp(0.0, 1.0)),
    };

    let lambdas: Vec<Option<f64>> = diag.iter().map(|r| r.lambda).collect();
    let entered_at = lambdas
        .iter()
        .position(|l| matches!(l, Some(v) if *v <= threshold));

    let mut unit_steps_after = true;
    let mut strict_decrease_after = true;
    let mut lambda_ratios = Vec::new();
    if let Some(start) = entered_at {
        for k in start..trace.rows.len() {
            if let Some(t) = trace.rows[k].step {
                if (t - 1.0).abs() > 1e-12 {
                    unit_steps_after = false;
                }
            }
            if k + 1 < lambdas.len() {
                if let (Some(a), Some(b)) = (lambdas[k], lambdas[k + 1]) {
                    lambda_ratios.push(b / a);
                    if b >= a {
                        strict_decrease_after = false;
                    }
                }
            }
        }
    }

    Ok(PhaseReport {
        kind,
        epsilon,
        threshold,
        entered_at,
        unit_steps_after,
        strict_decrease_after,
        lambda_ratios,
    })
}

/// Success threshold separating the plateau from the minimum basin: the
/// midpoint in log-f between the plateau value and the reference minimum,
/// both clamped at 1e-16.
pub fn log_midpoint_threshold(plateau_f: f64, reference_f: f64) -> f64 {
    let a = plateau_f.max(1e-16);
    let b = reference_f.max(1e-16);
    (0.5 * (a.ln() + b.ln())).exp()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EscapeReport {
    pub trials: usize,
    pub successes: usize,
    pub per_trial: Vec<bool>,
}

impl EscapeReport {
    pub fn probability(&self) -> f64 {
        self.successes as f64 / self.trials.max(1) as f64
    }
}

/// Seed for trial `t` of a Monte-Carlo experiment; the golden-ratio stride
/// keeps trials decorrelated while fully determined by the master seed.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    master ^ (trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Fraction of independent seeded runs that reach `f <= threshold` within
/// the configured budget. Trials fan out across threads; the reduction is
/// in trial order, so thread count never changes the report.
pub fn escape_rate(
    obj: &Objective,
    x0: &DVector<f64>,
    cfg: &MethodConfig,
    trials: usize,
    master_seed: u64,
    threshold: f64,
) -> EscapeReport {
    let per_trial: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut trial_cfg = cfg.clone();
            trial_cfg.seed = trial_seed(master_seed, t);
            let trace = optimizers::run(obj, x0, &trial_cfg);
            trace.rows.iter().any(|row| row.f <= threshold)
        })
        .collect();
    let successes = per_trial.iter().filter(|s| **s).count();
    EscapeReport {
        trials,
        successes,
        per_trial,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeResult {
    pub name: String,
    pub pass: bool,
    pub details: String,
}

/// The executable theorem-probe suite behind `verify`: the decrement chain,
/// the sub-optimality sandwich, the phase classification, the degeneracy
/// chain, and the omega auxiliaries, all on built-in synthetic problems.
pub fn verify_suite() -> Vec<ProbeResult> {
    use crate::problems::synthetic;

    let mut results = Vec::new();

    // Decrement chain + direction identities on logistic instances.
    {
        let mut worst: f64 = f64::NEG_INFINITY;
        let mut pass = true;
        let mut details = String::new();
        for seed in 0..10u64 {
            let obj = synthetic::logistic_instance(150, 40, 1e-3, seed);
            let x = DVector::from_fn(40, |i, _| 0.05 * ((i as f64) + seed as f64).sin());
            let op = match crate::coarse::sample_operator(40, 20, seed ^ 0xC0FFEE) {
                Ok(op) => op,
                Err(e) => {
                    pass = false;
                    details = e.to_string();
                    break;
                }
            };
            let outcome = obj
                .reduced_hessian(&x, &op)
                .and_then(|h_r| {
                    randomized_tsvd(&h_r, 8, &TsvdConfig::default(), FloorMode::Convex, seed)
                })
                .and_then(|spec| direction_gaps(&obj, &x, &op, &spec));
            match outcome {
                Ok(gaps) => {
                    let w = gaps
                        .chain_violation
                        .max(gaps.bound_gap)
                        .max(gaps.sqrt_distance_gap)
                        .max(gaps.identity_gap - 1e-9);
                    worst = worst.max(w);
                    if w > 0.0 {
                        pass = false;
                        details = format!("seed {seed}: violation {w:e}");
                    }
                }
                Err(e) => {
                    pass = false;
                    details = e.to_string();
                }
            }
        }
        if pass {
            details = format!("worst normalized slack {worst:e}");
        }
        results.push(ProbeResult {
            name: "decrement-chain".into(),
            pass,
            details,
        });
    }

    // Sub-optimality sandwich along a Newton trace on the barrier model.
    {
        let obj = synthetic::loglinear_instance(200, 25, 3);
        let x0 = DVector::zeros(25);
        let newton = MethodConfig::new(optimizers::Method::Newton)
            .with_max_iters(200)
            .with_grad_tol(1e-12)
            .with_diagnostics();
        let trace = optimizers::run(&obj, &x0, &newton);
        let f_star = trace.final_f().unwrap_or(f64::INFINITY);
        let mut pass = trace.status == optimizers::RunStatus::Converged;
        let mut details = String::new();
        if !pass {
            details = format!("newton reference did not converge: {:?}", trace.status);
        } else {
            let lr = MethodConfig::new(optimizers::Method::LowRankNewton {
                coarse_dim: 24,
                mode: optimizers::TruncationMode::Convex,
            })
            .with_max_iters(120)
            .with_grad_tol(1e-10)
            .with_diagnostics();
            let lr_trace = optimizers::run(&obj, &x0, &lr);
            let mut checked = 0usize;
            let diag = lr_trace.diagnostics.as_deref().unwrap_or(&[]);
            // Recompute the iterates by replaying the trace values through
            // the sandwich at each diagnostic lambda.
            for row in diag {
                if let Some(lambda) = row.lambda {
                    if lambda < 1.0 {
                        let gap = lr_trace.rows[row.k].f - f_star;
                        let lower = omega(lambda).unwrap_or(f64::INFINITY);
                        let upper = omega_star(lambda).unwrap_or(f64::NEG_INFINITY);
                        checked += 1;
                        if !(gap >= lower - 1e-8 && gap <= upper + 1e-8) {
                            pass = false;
                            details = format!(
                                "iterate {}: gap {gap:e} outside [{lower:e}, {upper:e}]",
                                row.k
                            );
                            break;
                        }
                        if lambda <= 0.68 && gap > lambda * lambda + 1e-8 {
                            pass = false;
                            details =
                                format!("iterate {}: gap {gap:e} above lambda^2", row.k);
                            break;
                        }
                    }
                }
            }
            if pass {
                details = format!("sandwich held at {checked} iterates");
            }
        }
        results.push(ProbeResult {
            name: "suboptimality-sandwich".into(),
            pass,
            details,
        });
    }

    // Phase classification of the full-space method on the barrier model.
    {
        let obj = synthetic::loglinear_instance(300, 40, 7);
        let x0 = DVector::zeros(40);
        let cfg = MethodConfig::new(optimizers::Method::LowRankNewton {
            coarse_dim: 39,
            mode: optimizers::TruncationMode::Convex,
        })
        .with_max_iters(120)
        .with_grad_tol(1e-10)
        .with_diagnostics();
        let trace = optimizers::run(&obj, &x0, &cfg);
        let (pass, details) = match phase_report(&trace, PhaseKind::FullSpace) {
            Ok(report) => {
                let ok = report.entered_at.is_some()
                    && report.unit_steps_after
                    && report.strict_decrease_after;
                (
                    ok,
                    format!(
                        "eta = {:.4}, entered at {:?}, unit steps {}, strict decrease {}",
                        report.threshold,
                        report.entered_at,
                        report.unit_steps_after,
                        report.strict_decrease_after
                    ),
                )
            }
            Err(e) => (false, e.to_string()),
        };
        results.push(ProbeResult {
            name: "phase-report".into(),
            pass,
            details,
        });
    }

    // Degeneracy chain: full-information SigmaSVD and low-rank Newton
    // collapse onto the exact Newton direction.
    {
        let obj = synthetic::logistic_instance(160, 40, 1e-3, 11);
        let x = DVector::from_fn(40, |i, _| 0.08 * ((2 * i + 1) as f64).cos());
        let outcome = (|| -> Result<f64> {
            let g = obj.gradient(&x)?;
            let d_newton = optimizers::newton_direction(&obj, &x)?;
            let op = SamplingOperator::from_indices(40, (0..40).collect())?;
            let (d_svd, _) = optimizers::sigmasvd_direction(
                &obj,
                &x,
                &g,
                &op,
                39,
                &TsvdConfig::default(),
                FloorMode::Convex,
                13,
            )?;
            let (d_lr, _) = optimizers::low_rank_direction(
                &obj,
                &x,
                &g,
                39,
                &TsvdConfig::default(),
                FloorMode::Convex,
                13,
            )?;
            let r1 = (&d_svd - &d_newton).norm() / d_newton.norm();
            let r2 = (&d_lr - &d_newton).norm() / d_newton.norm();
            Ok(r1.max(r2))
        })();
        let (pass, details) = match outcome {
            Ok(worst) => (worst <= 1e-8, format!("worst direction deviation {worst:e}")),
            Err(e) => (false, e.to_string()),
        };
        results.push(ProbeResult {
            name: "degeneracy-chain".into(),
            pass,
            details,
        });
    }

    // Auxiliary function properties on grids.
    {
        let mut pass = true;
        let mut details = String::new();
        // omega(1) = 1 - log 2 exactly.
        let w1 = omega(1.0).unwrap();
        if (w1 - (1.0 - std::f64::consts::LN_2)).abs() > 1e-15 {
            pass = false;
            details = format!("omega(1) = {w1}");
        }
        for i in 0..=680 {
            let x = i as f64 / 1000.0;
            let ws = omega_star(x).unwrap();
            let w = omega(x).unwrap();
            if ws > x * x + 1e-12 || w > ws + 1e-12 || w < -1e-15 {
                pass = false;
                details = format!("auxiliary bound failed at x = {x}");
                break;
            }
        }
        let eta1 = eta_full(1.0);
        if (eta1 - (3.0 - 5.0f64.sqrt()) / 2.0).abs() > 1e-15 {
            pass = false;
            details = format!("eta(1) = {eta1}");
        }
        // eta monotone increasing on (0, 1].
        let mut prev = 0.0;
        for i in 1..=100 {
            let eta = eta_full(i as f64 / 100.0);
            if eta < prev {
                pass = false;
                details = "eta not monotone".into();
                break;
            }
            prev = eta;
        }
        if pass {
            details = "omega/omega_*/eta grid checks passed".into();
        }
        results.push(ProbeResult {
            name: "omega-bounds".into(),
            pass,
            details,
        });
    }

    results
}
