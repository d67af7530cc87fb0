//! Phase classification of a low-rank Newton trace: the damped phase with
//! guaranteed decrease, and the locally super-linear phase below the
//! eigenvalue-ratio threshold where unit steps are always accepted.
//!
//! Run with: cargo run --release --example phase_transition

use nalgebra::DVector;
use sublevel::diagnostics::{phase_report, PhaseKind};
use sublevel::optimizers::{self, Method, MethodConfig, TruncationMode};
use sublevel::problems::synthetic;

fn main() {
    let obj = synthetic::loglinear_instance(1000, 100, 107);
    let cfg = MethodConfig::new(Method::LowRankNewton {
        coarse_dim: 90,
        mode: TruncationMode::Convex,
    })
    .with_max_iters(100)
    .with_grad_tol(1e-10)
    .with_diagnostics();
    let trace = optimizers::run(&obj, &DVector::zeros(100), &cfg);
    let report = phase_report(&trace, PhaseKind::FullSpace).unwrap();

    println!("low-rank Newton (N = 90) on the barrier model, m = 1000, n = 100");
    println!(
        "eps = min_k sigma_n/sigma_N+1 = {:.4}  =>  eta = {:.4}",
        report.epsilon, report.threshold
    );
    println!("entered the super-linear region at iterate {:?}\n", report.entered_at);

    let diag = trace.diagnostics.as_deref().unwrap();
    println!("  k   lambda        step   phase");
    for row in diag {
        let lambda = match row.lambda {
            Some(l) => l,
            None => continue,
        };
        let phase = if lambda <= report.threshold { "super-linear" } else { "damped" };
        let step = trace.rows[row.k]
            .step
            .map(|t| format!("{t:.3}"))
            .unwrap_or_else(|| "-".into());
        println!("  {:>2}  {lambda:>10.3e}  {step:>6}  {phase}", row.k);
    }
    println!(
        "\nunit steps after entry: {}; strictly decreasing lambda: {}",
        report.unit_steps_after, report.strict_decrease_after
    );
    println!(
        "lambda ratios after entry: {:?}",
        report
            .lambda_ratios
            .iter()
            .map(|r| format!("{r:.3}"))
            .collect::<Vec<_>>()
    );
}
