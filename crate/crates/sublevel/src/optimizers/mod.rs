//! The nine benchmark methods and the shared iteration driver.
//!
//! Second-order family: exact Newton, cubic-regularized Newton, NewSamp
//! (row-subsampled Hessian), low-rank Newton (floored full-space spectrum),
//! Sigma (exact coarse solve) and SigmaSVD (floored coarse spectrum).
//! First-order baselines: gradient descent and heavy-ball accelerated
//! descent with Armijo, and fixed-step Adam.
//!
//! Every second-order step computes `dec2 = -<grad f, d>` and quits once it
//! falls to the exit tolerance; in convex mode this equals the squared
//! approximate decrement, which bounds the sub-optimality gap.

mod first_order;
pub mod line_search;
pub mod low_rank;
pub mod multilevel;
pub mod newton;

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::coarse::{sample_operator, SamplingOperator};
use crate::error::{Result, SublevelError};
use crate::problems::Objective;
use crate::spectral::{FloorMode, TsvdConfig};

pub use line_search::{armijo, damped_step, LineSearchConfig};
pub use low_rank::{full_hessian_spectrum, low_rank_direction, sample_rows};
pub use multilevel::{sigma_direction, sigmasvd_direction};
pub use newton::{cubic_model_step, newton_direction};

/// Seed-stream tags: the operator draw at iteration `k` uses `seed ^ k`,
/// and auxiliary draws decorrelate with fixed tags.
const TSVD_TAG: u64 = 0x7453_5644; // "tSVD"
const ROWS_TAG: u64 = 0x726f_7773; // "rows"
const RETRY_TAG: u64 = 0x7265_7472; // "retr"

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationMode {
    /// Spectrum kept as-is; valid only while the floor stays positive.
    Convex,
    /// Eigenvalues pass through `g(x) = max(|x|, nu)`.
    Truncated,
}

impl TruncationMode {
    pub fn floor_mode(&self, nu: f64) -> FloorMode {
        match self {
            TruncationMode::Convex => FloorMode::Convex,
            TruncationMode::Truncated => FloorMode::NonConvexTruncated { nu },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gd,
    Agd {
        momentum: f64,
    },
    Adam {
        step: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    Newton,
    CubicNewton,
    NewSamp {
        sample_rows: usize,
        rank: usize,
    },
    LowRankNewton {
        coarse_dim: usize,
        mode: TruncationMode,
    },
    Sigma {
        coarse_dim: usize,
    },
    SigmaSvd {
        coarse_dim: usize,
        rank: usize,
        mode: TruncationMode,
    },
}

impl Method {
    /// Paper defaults: `t = 1e-3, beta1 = 0.9, beta2 = 0.99, eps = 1e-8`.
    pub fn adam_default() -> Self {
        Method::Adam {
            step: 1e-3,
            beta1: 0.9,
            beta2: 0.99,
            epsilon: 1e-8,
        }
    }

    /// Paper default momentum 0.5.
    pub fn agd_default() -> Self {
        Method::Agd { momentum: 0.5 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Agd { .. } => "agd",
            Method::Adam { .. } => "adam",
            Method::Newton => "newton",
            Method::CubicNewton => "cubic-newton",
            Method::NewSamp { .. } => "newsamp",
            Method::LowRankNewton { .. } => "lowrank-newton",
            Method::Sigma { .. } => "sigma",
            Method::SigmaSvd { .. } => "sigmasvd",
        }
    }

    /// Methods whose Armijo step guarantees a non-increasing objective.
    pub fn is_monotone_descent(&self) -> bool {
        !matches!(self, Method::Agd { .. } | Method::Adam { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    Armijo,
    /// The theoretical damped step `t = 1/(1 + lambda)`; kept for the
    /// theory probes, Armijo is the benchmark default.
    Damped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResamplePolicy {
    /// Fresh sampling operator every iteration (the analysis conditions on
    /// the filtration generated by the draws).
    PerIteration,
    /// One operator per run; the fixed-subspace ablation.
    PerRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: Method,
    /// Eigenvalue floor for the truncated non-convex mode.
    pub nu: f64,
    /// Exit once `-<grad f, d>` falls to this; must lie in `(0, 0.68^2)`.
    pub eps_exit: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub line_search: LineSearchConfig,
    pub step_rule: StepRule,
    pub resample: ResamplePolicy,
    pub tsvd: TsvdConfig,
    /// Optional driver-level stop on the gradient norm.
    pub grad_tol: Option<f64>,
    pub max_seconds: Option<f64>,
    /// Record per-iterate exact decrements and eigenvalue ratios (needs the
    /// dense Hessian; test and report scale only).
    pub diagnostics: bool,
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        MethodConfig {
            method,
            nu: 1e-10,
            eps_exit: 1e-12,
            max_iters: 100,
            seed: 0,
            line_search: LineSearchConfig::default(),
            step_rule: StepRule::Armijo,
            resample: ResamplePolicy::PerIteration,
            tsvd: TsvdConfig::default(),
            grad_tol: None,
            max_seconds: None,
            diagnostics: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }

    pub fn with_grad_tol(mut self, tol: f64) -> Self {
        self.grad_tol = Some(tol);
        self
    }

    pub fn with_diagnostics(mut self) -> Self {
        self.diagnostics = true;
        self
    }

    pub fn validate(&self, obj: &Objective) -> Result<()> {
        let n = obj.dim();
        let m = obj.samples();
        self.line_search.validate()?;
        if !(self.eps_exit > 0.0 && self.eps_exit < 0.68 * 0.68) {
            return Err(SublevelError::InvalidConfig(format!(
                "eps_exit must lie in (0, 0.68^2), got {}",
                self.eps_exit
            )));
        }
        if self.nu <= 0.0 {
            return Err(SublevelError::InvalidConfig(format!(
                "nu must be positive, got {}",
                self.nu
            )));
        }
        match self.method {
            Method::Agd { momentum } => {
                if !(0.0..1.0).contains(&momentum) {
                    return Err(SublevelError::InvalidConfig(format!(
                        "momentum must lie in [0, 1), got {momentum}"
                    )));
                }
            }
            Method::Adam {
                step,
                beta1,
                beta2,
                epsilon,
            } => {
                if step <= 0.0
                    || !(0.0..1.0).contains(&beta1)
                    || !(0.0..1.0).contains(&beta2)
                    || epsilon <= 0.0
                {
                    return Err(SublevelError::InvalidConfig(
                        "adam parameters out of range".into(),
                    ));
                }
            }
            Method::Newton | Method::CubicNewton => {
                if !obj.dense_hessian_ok() {
                    return Err(SublevelError::InvalidConfig(format!(
                        "{} needs the dense Hessian; n = {n} exceeds the cap",
                        self.method.name()
                    )));
                }
            }
            Method::NewSamp { sample_rows, rank } => {
                if sample_rows == 0 || sample_rows > m {
                    return Err(SublevelError::InvalidConfig(format!(
                        "sample_rows must lie in [1, m = {m}], got {sample_rows}"
                    )));
                }
                if rank == 0 || rank + 1 > n {
                    return Err(SublevelError::InvalidConfig(format!(
                        "newsamp rank must satisfy 1 <= p < n = {n}, got {rank}"
                    )));
                }
            }
            Method::LowRankNewton { coarse_dim, .. } => {
                if coarse_dim == 0 || coarse_dim >= n {
                    return Err(SublevelError::InvalidConfig(format!(
                        "coarse_dim must satisfy 1 <= N < n = {n}, got {coarse_dim}"
                    )));
                }
            }
            Method::Sigma { coarse_dim } => {
                if coarse_dim == 0 || coarse_dim >= n {
                    return Err(SublevelError::InvalidConfig(format!(
                        "coarse_dim must satisfy 1 <= N < n = {n}, got {coarse_dim}"
                    )));
                }
            }
            Method::SigmaSvd {
                coarse_dim, rank, ..
            } => {
                if !(rank >= 1 && rank < coarse_dim && coarse_dim < n) {
                    return Err(SublevelError::InvalidConfig(format!(
                        "need 1 <= p < N < n, got p = {rank}, N = {coarse_dim}, n = {n}"
                    )));
                }
            }
            Method::Gd => {}
        }
        Ok(())
    }
}

/// One step's observable outcome.
pub(crate) enum StepEvent {
    /// The decrement exit test fired before any move.
    ExitDecrement { decrement_sq: f64 },
    Moved {
        x: DVector<f64>,
        f: f64,
        step: f64,
        decrement_sq: Option<f64>,
        sigma_floor: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunStatus {
    Converged,
    MaxIters,
    LineSearchFailed,
    DomainError,
    Failed(String),
}

/// One line of the iteration trace: the state at `x_k` plus the decrement,
/// floor, and accepted step of the move out of `x_k` (empty on the final
/// row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub decrement: Option<f64>,
    pub step: Option<f64>,
    pub sigma_floor: Option<f64>,
    pub elapsed_s: f64,
}

/// Per-iterate quantities recorded only in diagnostics mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagRow {
    pub k: usize,
    /// Exact Newton decrement at `x_k`, when the Hessian is positive
    /// definite and dense evaluation is allowed.
    pub lambda: Option<f64>,
    /// `sigma_n / sigma_{N+1}` of the dense Hessian (full-space methods).
    pub eig_ratio: Option<f64>,
    /// `lambda_hat / lambda` for the step taken at `x_k`.
    pub decrement_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationTrace {
    pub rows: Vec<TraceRow>,
    pub status: RunStatus,
    pub diagnostics: Option<Vec<DiagRow>>,
    /// The last iterate reached.
    pub final_x: Vec<f64>,
}

impl IterationTrace {
    pub fn final_f(&self) -> Option<f64> {
        self.rows.last().map(|r| r.f)
    }

    pub fn final_point(&self) -> DVector<f64> {
        DVector::from_vec(self.final_x.clone())
    }

    pub fn final_grad_norm(&self) -> Option<f64> {
        self.rows.last().map(|r| r.grad_norm)
    }

    /// `f` is non-increasing along the trace.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].f <= w[0].f)
    }
}

fn status_of(err: SublevelError) -> RunStatus {
    match err {
        SublevelError::DomainViolation(_) => RunStatus::DomainError,
        SublevelError::LineSearchFailed(_) => RunStatus::LineSearchFailed,
        e => RunStatus::Failed(e.to_string()),
    }
}

enum MethodState {
    Plain,
    Agd { x_prev: Option<DVector<f64>> },
    Adam(first_order::AdamState),
    Cubic { reg: f64 },
    Coarse { fixed_op: Option<SamplingOperator> },
}

/// Runs one method from `x0` until the exit condition, the iteration or
/// time budget, or a failure; never panics and never throws past the
/// driver. Row `k` records the state at `x_k`; `max_iters = 0` yields a
/// single-row trace.
pub fn run(obj: &Objective, x0: &DVector<f64>, cfg: &MethodConfig) -> IterationTrace {
    let started = Instant::now();
    let mut trace = IterationTrace {
        rows: Vec::new(),
        status: RunStatus::MaxIters,
        diagnostics: if cfg.diagnostics { Some(Vec::new()) } else { None },
        final_x: x0.iter().copied().collect(),
    };
    if let Err(e) = cfg.validate(obj) {
        trace.status = RunStatus::Failed(e.to_string());
        return trace;
    }

    let mut x = x0.clone();
    let (mut f, mut g) = match (obj.value(&x), obj.gradient(&x)) {
        (Ok(f), Ok(g)) => (f, g),
        (Err(e), _) | (_, Err(e)) => {
            trace.status = status_of(e);
            return trace;
        }
    };

    let mut state = match cfg.method {
        Method::Agd { .. } => MethodState::Agd { x_prev: None },
        Method::Adam { .. } => MethodState::Adam(first_order::AdamState::new(obj.dim())),
        Method::CubicNewton => MethodState::Cubic { reg: 1.0 },
        Method::Sigma { .. } | Method::SigmaSvd { .. } => {
            MethodState::Coarse { fixed_op: None }
        }
        _ => MethodState::Plain,
    };

    push_row(&mut trace, 0, f, g.norm(), started, cfg, obj, &x);

    for k in 0..cfg.max_iters {
        if let Some(tol) = cfg.grad_tol {
            if g.norm() <= tol {
                trace.status = RunStatus::Converged;
                return trace;
            }
        }
        if let Some(budget) = cfg.max_seconds {
            if started.elapsed().as_secs_f64() >= budget {
                trace.status = RunStatus::MaxIters;
                return trace;
            }
        }

        let event = dispatch(obj, &x, f, &g, cfg, &mut state, k);
        match event {
            Ok(StepEvent::ExitDecrement { decrement_sq }) => {
                if let Some(row) = trace.rows.last_mut() {
                    row.decrement = Some(decrement_sq.max(0.0).sqrt());
                }
                trace.status = RunStatus::Converged;
                return trace;
            }
            Ok(StepEvent::Moved {
                x: x_new,
                f: f_new,
                step,
                decrement_sq,
                sigma_floor,
            }) => {
                let decrement = decrement_sq.map(|d| d.max(0.0).sqrt());
                if let Some(row) = trace.rows.last_mut() {
                    row.decrement = decrement;
                    row.step = Some(step);
                    row.sigma_floor = sigma_floor;
                }
                if let Some(diag) = trace.diagnostics.as_mut() {
                    if let (Some(row), Some(dec)) = (diag.last_mut(), decrement) {
                        row.decrement_ratio = row.lambda.map(|l| dec / l);
                    }
                }
                x = x_new;
                f = f_new;
                trace.final_x = x.iter().copied().collect();
                g = match obj.gradient(&x) {
                    Ok(g) => g,
                    Err(e) => {
                        trace.status = status_of(e);
                        return trace;
                    }
                };
                push_row(&mut trace, k + 1, f, g.norm(), started, cfg, obj, &x);
            }
            Err(e) => {
                trace.status = status_of(e);
                return trace;
            }
        }
    }

    if let Some(tol) = cfg.grad_tol {
        if g.norm() <= tol {
            trace.status = RunStatus::Converged;
        }
    }
    trace
}

#[allow(clippy::too_many_arguments)]
fn push_row(
    trace: &mut IterationTrace,
    k: usize,
    f: f64,
    grad_norm: f64,
    started: Instant,
    cfg: &MethodConfig,
    obj: &Objective,
    x: &DVector<f64>,
) {
    trace.rows.push(TraceRow {
        k,
        f,
        grad_norm,
        decrement: None,
        step: None,
        sigma_floor: None,
        elapsed_s: started.elapsed().as_secs_f64(),
    });
    if let Some(diag) = trace.diagnostics.as_mut() {
        diag.push(diag_row(k, cfg, obj, x));
    }
}

fn diag_row(k: usize, cfg: &MethodConfig, obj: &Objective, x: &DVector<f64>) -> DiagRow {
    let mut row = DiagRow {
        k,
        lambda: None,
        eig_ratio: None,
        decrement_ratio: None,
    };
    if !obj.dense_hessian_ok() {
        return row;
    }
    let (Ok(g), Ok(h)) = (obj.gradient(x), obj.dense_hessian(x)) else {
        return row;
    };
    if let Some(chol) = h.clone().cholesky() {
        row.lambda = Some(g.dot(&chol.solve(&g)).max(0.0).sqrt());
    }
    if let Method::LowRankNewton { coarse_dim, .. } = cfg.method {
        if let Ok(eig) = crate::spectral::dense_symmetric_eig(&h) {
            let n = eig.values.len();
            if coarse_dim < n {
                row.eig_ratio = Some(eig.values[n - 1] / eig.values[coarse_dim]);
            }
        }
    }
    row
}

fn dispatch(
    obj: &Objective,
    x: &DVector<f64>,
    f: f64,
    g: &DVector<f64>,
    cfg: &MethodConfig,
    state: &mut MethodState,
    k: usize,
) -> Result<StepEvent> {
    let iter_seed = cfg.seed ^ k as u64;
    match (cfg.method, state) {
        (Method::Gd, _) => first_order::step_gd(obj, x, f, g, &cfg.line_search),
        (Method::Agd { momentum }, MethodState::Agd { x_prev }) => {
            first_order::step_agd(obj, x, momentum, x_prev, &cfg.line_search)
        }
        (
            Method::Adam {
                step,
                beta1,
                beta2,
                epsilon,
            },
            MethodState::Adam(adam),
        ) => first_order::step_adam(obj, x, g, step, beta1, beta2, epsilon, adam),
        (Method::Newton, _) => newton::step_newton(
            obj,
            x,
            f,
            g,
            cfg.eps_exit,
            cfg.step_rule,
            &cfg.line_search,
        ),
        (Method::CubicNewton, MethodState::Cubic { reg }) => {
            newton::step_cubic(obj, x, f, reg, 60)
        }
        (Method::NewSamp { sample_rows, rank }, _) => low_rank::step_newsamp(
            obj,
            x,
            f,
            g,
            sample_rows,
            rank,
            &cfg.tsvd,
            iter_seed ^ ROWS_TAG,
            cfg.eps_exit,
            cfg.step_rule,
            &cfg.line_search,
        ),
        (Method::LowRankNewton { coarse_dim, mode }, _) => low_rank::step_low_rank(
            obj,
            x,
            f,
            g,
            coarse_dim,
            &cfg.tsvd,
            mode.floor_mode(cfg.nu),
            iter_seed ^ TSVD_TAG,
            cfg.eps_exit,
            cfg.step_rule,
            &cfg.line_search,
        ),
        (Method::Sigma { coarse_dim }, MethodState::Coarse { fixed_op }) => {
            let op = coarse_operator(obj.dim(), coarse_dim, cfg, fixed_op, iter_seed)?;
            multilevel::step_sigma(
                obj,
                x,
                f,
                g,
                &op,
                iter_seed ^ RETRY_TAG,
                cfg.eps_exit,
                cfg.step_rule,
                &cfg.line_search,
            )
        }
        (
            Method::SigmaSvd {
                coarse_dim,
                rank,
                mode,
            },
            MethodState::Coarse { fixed_op },
        ) => {
            let op = coarse_operator(obj.dim(), coarse_dim, cfg, fixed_op, iter_seed)?;
            multilevel::step_sigmasvd(
                obj,
                x,
                f,
                g,
                &op,
                rank,
                &cfg.tsvd,
                mode.floor_mode(cfg.nu),
                iter_seed ^ TSVD_TAG,
                cfg.eps_exit,
                cfg.step_rule,
                &cfg.line_search,
            )
        }
        _ => unreachable!("state initialized per method"),
    }
}

fn coarse_operator(
    n: usize,
    coarse_dim: usize,
    cfg: &MethodConfig,
    fixed_op: &mut Option<SamplingOperator>,
    iter_seed: u64,
) -> Result<SamplingOperator> {
    match cfg.resample {
        ResamplePolicy::PerIteration => sample_operator(n, coarse_dim, iter_seed),
        ResamplePolicy::PerRun => {
            if fixed_op.is_none() {
                *fixed_op = Some(sample_operator(n, coarse_dim, cfg.seed)?);
            }
            Ok(fixed_op.clone().expect("just set"))
        }
    }
}
