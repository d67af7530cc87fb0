//! Config-driven experiment runner: `run` executes a method roster on one
//! problem and persists traces, `escape` sweeps the coarse dimension and
//! tabulates saddle-escape probabilities, `verify` executes the theorem
//! probes. Exit codes: 0 success, 1 probe violation, 2 config error,
//! 3 runtime failure (partial artifacts are preserved).

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use crate::dataio::{
    self, LabelConvention, LoadOptions, PlotAxes, RunArtifact, XAxis, YAxis,
};
use crate::diagnostics;
use crate::error::{Result, SublevelError};
use crate::optimizers::{
    self, LineSearchConfig, Method, MethodConfig, ResamplePolicy, RunStatus, TruncationMode,
};
use crate::problems::{synthetic, Objective};

pub const OUT_DIR_ENV: &str = "SUBLEVEL_OUT";

/// Integer or a fraction of a base dimension written `0.46n` / `0.3m`;
/// fractions round to nearest with ties up.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DimSpec {
    Count(usize),
    Fraction(String),
}

impl DimSpec {
    pub fn resolve(&self, base: usize, unit: char, field: &str) -> Result<usize> {
        match self {
            DimSpec::Count(c) => Ok(*c),
            DimSpec::Fraction(text) => {
                let trimmed = text.trim();
                let Some(number) = trimmed.strip_suffix(unit) else {
                    return Err(SublevelError::InvalidConfig(format!(
                        "field `{field}`: expected `<fraction>{unit}`, got `{text}`"
                    )));
                };
                let frac: f64 = number.trim().parse().map_err(|_| {
                    SublevelError::InvalidConfig(format!(
                        "field `{field}`: invalid fraction `{number}`"
                    ))
                })?;
                if frac <= 0.0 || !frac.is_finite() {
                    return Err(SublevelError::InvalidConfig(format!(
                        "field `{field}`: fraction must be positive"
                    )));
                }
                Ok((frac * base as f64).round() as usize)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: String,
    /// Ridge (logistic) or hinge weight (svm-hinge2).
    pub ell: Option<f64>,
    /// LIBSVM file path; mutually exclusive with synthetic m/n.
    pub dataset: Option<String>,
    pub n_override: Option<usize>,
    pub standardize: Option<bool>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub distribution: Option<String>,
    pub seed: Option<u64>,
    pub condition: Option<f64>,
    pub block: Option<usize>,
    pub gateway_rows: Option<usize>,
    pub kappa: Option<f64>,
    pub anchor_scale: Option<f64>,
    pub guards: Option<usize>,
    pub guard_rows: Option<usize>,
    pub guard_scale: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub x0: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    pub max_iters: Option<usize>,
    pub max_seconds: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
    pub plot_x: Option<String>,
    pub plot_y: Option<String>,
    pub log_y: Option<bool>,
    /// `wall` (default) or `none`; `none` zeroes every timing field so
    /// outputs are byte-reproducible.
    pub timing: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    pub name: String,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub eps_exit: Option<f64>,
    pub nu: Option<f64>,
    pub grad_tol: Option<f64>,
    pub coarse_dim: Option<DimSpec>,
    pub rank: Option<usize>,
    pub mode: Option<String>,
    pub resample: Option<String>,
    pub sample_rows: Option<DimSpec>,
    pub momentum: Option<f64>,
    pub step: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub t_init: Option<f64>,
    pub max_backtracks: Option<usize>,
    pub step_rule: Option<String>,
    pub diagnostics: Option<bool>,
    pub oversample: Option<usize>,
    pub power_iters: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeSection {
    pub trials: usize,
    pub sweep_n: Vec<DimSpec>,
    pub rank: usize,
    pub mode: Option<String>,
    pub resample: Option<String>,
    pub max_iters: Option<usize>,
    pub eps_exit: Option<f64>,
    pub threshold: Option<f64>,
    /// Iteration budget of the cubic-Newton reference run used for the
    /// automatic threshold.
    pub reference_max_iters: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub problem: ProblemSection,
    #[serde(default)]
    pub init: InitSection,
    #[serde(default)]
    pub budget: BudgetSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, rename = "method")]
    pub methods: Vec<MethodSection>,
    pub escape: Option<EscapeSection>,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| SublevelError::InvalidConfig(e.to_string()))
}

pub fn build_objective(p: &ProblemSection) -> Result<Objective> {
    let kind = p.kind.as_str();
    if let Some(path) = &p.dataset {
        let convention = match kind {
            "logistic" | "svm-hinge2" => LabelConvention::SignFromZeroOne,
            "nls" => LabelConvention::ClampUnit,
            _ => LabelConvention::Raw,
        };
        let ds = dataio::load_libsvm(
            path,
            LoadOptions {
                n_override: p.n_override,
                labels: Some(convention),
            },
        )?;
        // Files default to standardized features; synthetic data does not.
        let ds = if p.standardize.unwrap_or(true) {
            dataio::standardize(&ds)
        } else {
            ds
        };
        return objective_of_kind(kind, ds.features, ds.labels, p.ell);
    }

    let m = p
        .m
        .ok_or_else(|| SublevelError::InvalidConfig("field `problem.m` is required".into()))?;
    let n = p
        .n
        .ok_or_else(|| SublevelError::InvalidConfig("field `problem.n` is required".into()))?;
    let seed = p.seed.unwrap_or(0);
    let distribution = p.distribution.as_deref().unwrap_or("gaussian");

    let obj = match (kind, distribution) {
        ("quadratic", _) => synthetic::quadratic_instance(n, p.condition.unwrap_or(100.0), seed),
        ("logistic", "gaussian") => {
            synthetic::logistic_instance(m, n, p.ell.unwrap_or(1e-6), seed)
        }
        ("svm-hinge2", "gaussian") => {
            synthetic::svm_instance(m, n, p.ell.unwrap_or(1e-2), seed)
        }
        ("loglinear", _) => synthetic::loglinear_instance(m, n, seed),
        ("nls", "gaussian") => synthetic::nls_instance(m, n, seed),
        ("nls", "plateau-gateway") => {
            let defaults = synthetic::PlateauParams::escape_default(m, n, seed);
            let params = synthetic::PlateauParams {
                m,
                n,
                block: p.block.unwrap_or(defaults.block),
                gateway_rows: p.gateway_rows.unwrap_or(defaults.gateway_rows),
                kappa: p.kappa.unwrap_or(defaults.kappa),
                anchor_scale: p.anchor_scale.unwrap_or(defaults.anchor_scale),
                guards: p.guards.unwrap_or(defaults.guards),
                guard_rows: p.guard_rows.unwrap_or(defaults.guard_rows),
                guard_scale: p.guard_scale.unwrap_or(defaults.guard_scale),
                seed,
            };
            synthetic::plateau_nls_instance(&params)?.0
        }
        (kind, dist) => {
            return Err(SublevelError::InvalidConfig(format!(
                "field `problem.kind`/`problem.distribution`: unsupported pair `{kind}`/`{dist}`"
            )))
        }
    };
    let obj = if p.standardize.unwrap_or(false) {
        let ds = dataio::Dataset {
            features: obj.features().clone(),
            labels: obj.labels().clone(),
            name: "synthetic".into(),
            source: dataio::DataSource::File("synthetic".into()),
            label_convention: LabelConvention::Raw,
            standardized: false,
        };
        let std = dataio::standardize(&ds);
        objective_of_kind(kind, std.features, std.labels, p.ell)?
    } else {
        obj
    };
    Ok(obj)
}

fn objective_of_kind(
    kind: &str,
    features: nalgebra::DMatrix<f64>,
    labels: DVector<f64>,
    ell: Option<f64>,
) -> Result<Objective> {
    match kind {
        "nls" => Objective::nonlinear_least_squares(features, labels),
        "loglinear" => Objective::log_linear(features, labels),
        "logistic" => Objective::logistic(features, labels, ell.unwrap_or(1e-6)),
        "svm-hinge2" => Objective::svm_hinge2(features, labels, ell.unwrap_or(1e-2)),
        "quadratic" => Objective::quadratic(features, labels),
        other => Err(SublevelError::InvalidConfig(format!(
            "field `problem.kind`: unknown kind `{other}`"
        ))),
    }
}

pub fn build_x0(init: &InitSection, n: usize) -> Result<DVector<f64>> {
    match init.x0.as_deref().unwrap_or("zero") {
        "zero" => Ok(DVector::zeros(n)),
        "gaussian" => {
            let mut rng = ChaCha8Rng::seed_from_u64(init.seed.unwrap_or(0));
            Ok(DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng)))
        }
        other => Err(SublevelError::InvalidConfig(format!(
            "field `init.x0`: unknown policy `{other}` (use `zero` or `gaussian`)"
        ))),
    }
}

fn parse_mode(mode: Option<&str>, field: &str) -> Result<TruncationMode> {
    match mode.unwrap_or("convex") {
        "convex" => Ok(TruncationMode::Convex),
        "truncated" => Ok(TruncationMode::Truncated),
        other => Err(SublevelError::InvalidConfig(format!(
            "field `{field}`: unknown mode `{other}`"
        ))),
    }
}

fn parse_resample(policy: Option<&str>, field: &str) -> Result<ResamplePolicy> {
    match policy.unwrap_or("per-iteration") {
        "per-iteration" => Ok(ResamplePolicy::PerIteration),
        "per-run" => Ok(ResamplePolicy::PerRun),
        other => Err(SublevelError::InvalidConfig(format!(
            "field `{field}`: unknown resample policy `{other}`"
        ))),
    }
}

pub fn build_method(
    spec: &MethodSection,
    obj: &Objective,
    budget: &BudgetSection,
    master_seed: u64,
    index: usize,
) -> Result<MethodConfig> {
    let n = obj.dim();
    let m = obj.samples();
    let need_coarse = |field: &str| -> Result<usize> {
        spec.coarse_dim
            .as_ref()
            .ok_or_else(|| {
                SublevelError::InvalidConfig(format!(
                    "method `{}`: field `{field}` is required",
                    spec.name
                ))
            })?
            .resolve(n, 'n', field)
    };
    let method = match spec.name.as_str() {
        "gd" => Method::Gd,
        "agd" => Method::Agd {
            momentum: spec.momentum.unwrap_or(0.5),
        },
        "adam" => Method::Adam {
            step: spec.step.unwrap_or(1e-3),
            beta1: spec.beta1.unwrap_or(0.9),
            beta2: spec.beta2.unwrap_or(0.99),
            epsilon: spec.epsilon.unwrap_or(1e-8),
        },
        "newton" => Method::Newton,
        "cubic-newton" => Method::CubicNewton,
        "newsamp" => Method::NewSamp {
            sample_rows: spec
                .sample_rows
                .as_ref()
                .ok_or_else(|| {
                    SublevelError::InvalidConfig(format!(
                        "method `{}`: field `sample_rows` is required",
                        spec.name
                    ))
                })?
                .resolve(m, 'm', "sample_rows")?,
            rank: spec.rank.ok_or_else(|| {
                SublevelError::InvalidConfig(format!(
                    "method `{}`: field `rank` is required",
                    spec.name
                ))
            })?,
        },
        "lowrank-newton" => Method::LowRankNewton {
            coarse_dim: need_coarse("coarse_dim")?,
            mode: parse_mode(spec.mode.as_deref(), "mode")?,
        },
        "sigma" => Method::Sigma {
            coarse_dim: need_coarse("coarse_dim")?,
        },
        "sigmasvd" => Method::SigmaSvd {
            coarse_dim: need_coarse("coarse_dim")?,
            rank: spec.rank.ok_or_else(|| {
                SublevelError::InvalidConfig(format!(
                    "method `{}`: field `rank` is required",
                    spec.name
                ))
            })?,
            mode: parse_mode(spec.mode.as_deref(), "mode")?,
        },
        other => {
            return Err(SublevelError::InvalidConfig(format!(
                "field `method.name`: unknown method `{other}`"
            )))
        }
    };

    let mut cfg = MethodConfig::new(method);
    cfg.seed = spec
        .seed
        .unwrap_or_else(|| diagnostics::trial_seed(master_seed, index));
    cfg.max_iters = spec.max_iters.or(budget.max_iters).unwrap_or(100);
    cfg.max_seconds = budget.max_seconds;
    if let Some(eps) = spec.eps_exit {
        cfg.eps_exit = eps;
    }
    if let Some(nu) = spec.nu {
        cfg.nu = nu;
    }
    cfg.grad_tol = spec.grad_tol;
    cfg.resample = parse_resample(spec.resample.as_deref(), "resample")?;
    cfg.diagnostics = spec.diagnostics.unwrap_or(false);
    if let Some(rule) = spec.step_rule.as_deref() {
        cfg.step_rule = match rule {
            "armijo" => optimizers::StepRule::Armijo,
            "damped" => optimizers::StepRule::Damped,
            other => {
                return Err(SublevelError::InvalidConfig(format!(
                    "field `step_rule`: unknown rule `{other}`"
                )))
            }
        };
    }
    let mut ls = LineSearchConfig::default();
    if let Some(a) = spec.alpha {
        ls.alpha = a;
    }
    if let Some(b) = spec.beta {
        ls.beta = b;
    }
    if let Some(t) = spec.t_init {
        ls.t_init = t;
    }
    if let Some(mb) = spec.max_backtracks {
        ls.max_backtracks = mb;
    }
    cfg.line_search = ls;
    if let Some(o) = spec.oversample {
        cfg.tsvd.oversample = o;
    }
    if let Some(p) = spec.power_iters {
        cfg.tsvd.power_iters = p;
    }
    Ok(cfg)
}

fn axes_of(output: &OutputSection) -> Result<PlotAxes> {
    let x = match output.plot_x.as_deref().unwrap_or("iterations") {
        "iterations" => XAxis::Iterations,
        "seconds" => XAxis::Seconds,
        other => {
            return Err(SublevelError::InvalidConfig(format!(
                "field `output.plot_x`: unknown axis `{other}`"
            )))
        }
    };
    let y = match output.plot_y.as_deref().unwrap_or("grad-norm") {
        "grad-norm" => YAxis::GradNorm,
        "f-gap" => YAxis::FGap,
        other => {
            return Err(SublevelError::InvalidConfig(format!(
                "field `output.plot_y`: unknown axis `{other}`"
            )))
        }
    };
    Ok(PlotAxes {
        x,
        y,
        log_y: output.log_y.unwrap_or(true),
    })
}

fn strip_timing(output: &OutputSection) -> Result<bool> {
    match output.timing.as_deref().unwrap_or("wall") {
        "wall" => Ok(false),
        "none" => Ok(true),
        other => Err(SublevelError::InvalidConfig(format!(
            "field `output.timing`: unknown policy `{other}` (use `wall` or `none`)"
        ))),
    }
}

fn resolve_out_dir(output: &OutputSection, overrides: &Overrides) -> PathBuf {
    if let Some(out) = &overrides.out {
        return out.clone();
    }
    if let Some(dir) = &output.dir {
        return PathBuf::from(dir);
    }
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from("out")
}

fn prepare_out_dir(dir: &Path, config_bytes: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| SublevelError::io(dir.display().to_string(), e))?;
    let snapshot = dir.join("config.toml");
    fs::write(&snapshot, config_bytes)
        .map_err(|e| SublevelError::io(snapshot.display().to_string(), e))
}

fn with_thread_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(t) if t > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(|pool| pool.install(f))
            .unwrap_or_else(|_| unreachable!("thread pool construction cannot fail here")),
        _ => f(),
    }
}

/// Reference optimum from a long exact-Newton run (falls back to the best
/// value seen if Newton cannot run at this scale).
fn reference_f_star(obj: &Objective, x0: &DVector<f64>) -> Result<f64> {
    let cfg = MethodConfig::new(Method::Newton)
        .with_max_iters(200)
        .with_grad_tol(1e-14);
    let trace = optimizers::run(obj, x0, &cfg);
    trace
        .final_f()
        .ok_or_else(|| SublevelError::InvalidConfig("reference run produced no trace".into()))
}

/// Executes every method in the roster sequentially, writing one CSV/JSON
/// artifact pair per method plus a combined SVG and the config snapshot.
pub fn cmd_run(config_path: &Path, overrides: &Overrides) -> i32 {
    let text = match fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", config_path.display());
            return 2;
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return 2;
        }
    };
    if let Some(seed) = overrides.seed {
        config.seed = Some(seed);
    }
    if config.methods.is_empty() {
        eprintln!("error: config declares no [[method]] entries");
        return 2;
    }

    let obj = match build_objective(&config.problem) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: problem construction failed: {e}");
            return 2;
        }
    };
    let x0 = match build_x0(&config.init, obj.dim()) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let master_seed = config.seed.unwrap_or(0);
    let axes = match axes_of(&config.output) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let strip = match strip_timing(&config.output) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let mut configs = Vec::new();
    for (i, spec) in config.methods.iter().enumerate() {
        match build_method(spec, &obj, &config.budget, master_seed, i) {
            Ok(cfg) => configs.push((label_for(&config.methods, i), cfg)),
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        }
    }

    let out_dir = resolve_out_dir(&config.output, overrides);
    if let Err(e) = prepare_out_dir(&out_dir, &text) {
        eprintln!("error: {e}");
        return 3;
    }

    let f_star = if matches!(axes.y, YAxis::FGap) {
        match reference_f_star(&obj, &x0) {
            Ok(f) => Some(f),
            Err(e) => {
                eprintln!("error: f-gap plot needs a reference optimum: {e}");
                return 3;
            }
        }
    } else {
        None
    };

    let threads = overrides.threads.or(config.threads);
    let mut artifacts = Vec::new();
    let mut failed_method: Option<String> = None;
    with_thread_pool(threads, || {
        for (label, cfg) in &configs {
            let trace = optimizers::run(&obj, &x0, cfg);
            match &trace.status {
                RunStatus::Failed(reason) => {
                    eprintln!("error: method `{label}` failed: {reason}");
                    failed_method.get_or_insert_with(|| label.clone());
                }
                RunStatus::DomainError => {
                    eprintln!("error: method `{label}` left the objective domain");
                    failed_method.get_or_insert_with(|| label.clone());
                }
                _ => {}
            }
            let mut artifact = RunArtifact::from_trace(
                label.clone(),
                config.problem.kind.clone(),
                cfg,
                &trace,
            );
            artifact.f_star = f_star;
            if strip {
                artifact = artifact.strip_timing();
            }
            artifacts.push(artifact);
        }
    });

    for artifact in &artifacts {
        let csv = out_dir.join(format!("{}.csv", artifact.label));
        let json = out_dir.join(format!("{}.json", artifact.label));
        if let Err(e) = dataio::write_trace_csv(artifact, &csv)
            .and_then(|_| dataio::write_summary_json(artifact, &json))
        {
            eprintln!("error: {e}");
            return 3;
        }
    }
    if let Err(e) = dataio::emit_convergence_svg(&artifacts, axes, out_dir.join("convergence.svg"))
    {
        eprintln!("error: {e}");
        return 3;
    }

    for artifact in &artifacts {
        println!(
            "{}: status {:?}, f = {:?}, |grad| = {:?}, iters = {}",
            artifact.label,
            artifact.status,
            artifact.summary.final_f,
            artifact.summary.final_grad_norm,
            artifact.summary.iterations
        );
    }
    if failed_method.is_some() {
        3
    } else {
        0
    }
}

fn label_for(methods: &[MethodSection], index: usize) -> String {
    let name = &methods[index].name;
    let duplicates = methods.iter().filter(|m| &m.name == name).count();
    if duplicates > 1 {
        let ordinal = methods[..=index]
            .iter()
            .filter(|m| &m.name == name)
            .count();
        format!("{name}-{ordinal}")
    } else {
        name.clone()
    }
}

/// Escape-probability sweep over the coarse dimension, mirroring the
/// escape-rate table layout: one CSV row per `N`. The success threshold is
/// either explicit or the log-midpoint between `f(x0)` and a long
/// cubic-Newton reference run.
pub fn cmd_escape(config_path: &Path, overrides: &Overrides) -> i32 {
    let text = match fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", config_path.display());
            return 2;
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return 2;
        }
    };
    if let Some(seed) = overrides.seed {
        config.seed = Some(seed);
    }
    let Some(escape) = config.escape.clone() else {
        eprintln!("error: config lacks an [escape] section");
        return 2;
    };
    if escape.trials == 0 || escape.sweep_n.is_empty() {
        eprintln!("error: field `escape.trials`/`escape.sweep_n` must be non-empty");
        return 2;
    }

    let obj = match build_objective(&config.problem) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: problem construction failed: {e}");
            return 2;
        }
    };
    let x0 = match build_x0(&config.init, obj.dim()) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let n = obj.dim();
    let mut sweep = Vec::new();
    for (i, spec) in escape.sweep_n.iter().enumerate() {
        match spec.resolve(n, 'n', &format!("escape.sweep_n[{i}]")) {
            Ok(v) if v > escape.rank && v < n => sweep.push(v),
            Ok(v) => {
                eprintln!(
                    "error: escape.sweep_n[{i}] = {v} must satisfy p = {} < N < n = {n}",
                    escape.rank
                );
                return 2;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        }
    }
    let mode = match parse_mode(escape.mode.as_deref(), "escape.mode") {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let resample = match parse_resample(
        escape.resample.as_deref().or(Some("per-run")),
        "escape.resample",
    ) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };

    let out_dir = resolve_out_dir(&config.output, overrides);
    if let Err(e) = prepare_out_dir(&out_dir, &text) {
        eprintln!("error: {e}");
        return 3;
    }

    let plateau_f = match obj.value(&x0) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: f(x0) evaluation failed: {e}");
            return 3;
        }
    };
    let threshold = match escape.threshold {
        Some(t) => t,
        None => {
            let reference = MethodConfig::new(Method::CubicNewton)
                .with_max_iters(escape.reference_max_iters.unwrap_or(200))
                .with_grad_tol(1e-10);
            let trace = optimizers::run(&obj, &x0, &reference);
            let Some(f_ref) = trace.final_f() else {
                eprintln!("error: cubic-Newton reference run produced no iterates");
                return 3;
            };
            diagnostics::log_midpoint_threshold(plateau_f, f_ref)
        }
    };

    let master_seed = config.seed.unwrap_or(0);
    let threads = overrides.threads.or(config.threads);
    let mut rows = Vec::new();
    with_thread_pool(threads, || {
        for &coarse_dim in &sweep {
            let mut cfg = MethodConfig::new(Method::SigmaSvd {
                coarse_dim,
                rank: escape.rank,
                mode,
            });
            cfg.resample = resample;
            cfg.max_iters = escape.max_iters.unwrap_or(40);
            if let Some(eps) = escape.eps_exit {
                cfg.eps_exit = eps;
            }
            cfg.max_seconds = config.budget.max_seconds;
            let report =
                diagnostics::escape_rate(&obj, &x0, &cfg, escape.trials, master_seed, threshold);
            rows.push((coarse_dim, report));
        }
    });

    let mut csv = String::from("N,probability\n");
    for (coarse_dim, report) in &rows {
        csv.push_str(&format!(
            "{},{}\n",
            coarse_dim,
            dataio::format_float(report.probability())
        ));
        println!(
            "N = {:>5}: escape probability {:.2}% ({}/{} trials)",
            coarse_dim,
            report.probability() * 100.0,
            report.successes,
            report.trials
        );
    }
    let table = out_dir.join("escape.csv");
    if let Err(e) = fs::write(&table, csv) {
        eprintln!("error: {}: {e}", table.display());
        return 3;
    }
    println!("threshold = {threshold:e}, table written to {}", table.display());
    0
}

/// Runs the theorem-probe suite; prints one line per probe (or JSON) and
/// exits nonzero on any violation.
pub fn cmd_verify(json: bool) -> i32 {
    let results = diagnostics::verify_suite();
    if json {
        match serde_json::to_string_pretty(&results) {
            Ok(text) => println!("{text}"),
            Err(e) => {
                eprintln!("error: {e}");
                return 3;
            }
        }
    } else {
        for probe in &results {
            println!(
                "[{}] {}: {}",
                if probe.pass { "PASS" } else { "FAIL" },
                probe.name,
                probe.details
            );
        }
    }
    if results.iter().all(|p| p.pass) {
        0
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_fields() {
        let text = "
[problem]
kind = \"logistic\"
m = 10
n = 4
bogus = 1
";
        assert!(parse_config(text).is_err());
    }

    #[test]
    fn fraction_dims_round_ties_up() {
        let spec = DimSpec::Fraction("0.5n".into());
        assert_eq!(spec.resolve(5, 'n', "t").unwrap(), 3); // 2.5 -> 3
        let spec = DimSpec::Fraction("0.46n".into());
        assert_eq!(spec.resolve(500, 'n', "t").unwrap(), 230);
        let spec = DimSpec::Count(7);
        assert_eq!(spec.resolve(500, 'n', "t").unwrap(), 7);
        assert!(DimSpec::Fraction("0.5m".into()).resolve(10, 'n', "t").is_err());
    }

    #[test]
    fn unknown_method_name_is_config_error() {
        let text = "
[problem]
kind = \"logistic\"
m = 20
n = 5

[[method]]
name = \"sgd\"
";
        let config = parse_config(text).unwrap();
        let obj = build_objective(&config.problem).unwrap();
        let err = build_method(&config.methods[0], &obj, &config.budget, 0, 0).unwrap_err();
        assert!(err.to_string().contains("sgd"), "{err}");
    }

    #[test]
    fn x0_policies() {
        let zero = build_x0(&InitSection::default(), 4).unwrap();
        assert_eq!(zero.as_slice(), &[0.0; 4]);
        let g1 = build_x0(
            &InitSection {
                x0: Some("gaussian".into()),
                seed: Some(9),
            },
            4,
        )
        .unwrap();
        let g2 = build_x0(
            &InitSection {
                x0: Some("gaussian".into()),
                seed: Some(9),
            },
            4,
        )
        .unwrap();
        assert_eq!(g1.as_slice(), g2.as_slice());
    }
}
