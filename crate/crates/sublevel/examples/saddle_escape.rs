//! Saddle-plateau escape: gradient methods crawl across a flat region
//! while the truncated coarse Newton step amplifies the same tiny gradient
//! and drops into the basin — when the sampled subspace captures enough of
//! the gateway block.
//!
//! Run with: cargo run --release --example saddle_escape

use nalgebra::DVector;
use sublevel::diagnostics::{escape_rate, log_midpoint_threshold};
use sublevel::optimizers::{self, Method, MethodConfig, ResamplePolicy, TruncationMode};
use sublevel::problems::synthetic::{plateau_nls_instance, PlateauParams};

fn main() {
    let (m, n) = (800, 120);
    let params = PlateauParams::escape_default(m, n, 40);
    let (obj, info) = plateau_nls_instance(&params).unwrap();
    let x0 = DVector::zeros(n);
    let f0 = obj.value(&x0).unwrap();
    println!(
        "plateau instance m = {m}, n = {n}, gateway block {:?}...",
        &info.block_indices[..4]
    );
    println!("f(x0) = {f0:.3e}, |grad(x0)| = {:.3e}", obj.gradient(&x0).unwrap().norm());

    // Success threshold from a cubic-Newton reference run.
    let reference = MethodConfig::new(Method::CubicNewton)
        .with_max_iters(60)
        .with_grad_tol(1e-10);
    let ref_trace = optimizers::run(&obj, &x0, &reference);
    let f_ref = ref_trace.final_f().unwrap();
    let threshold = log_midpoint_threshold(f0, f_ref);
    println!("cubic-Newton reference reaches {f_ref:.3e}; success threshold {threshold:.3e}\n");

    // Gradient descent cannot cross the plateau.
    let gd = optimizers::run(&obj, &x0, &MethodConfig::new(Method::Gd).with_max_iters(500));
    println!(
        "GD after 500 iterations: f = {:.3e} ({:.1}x above threshold)",
        gd.final_f().unwrap(),
        gd.final_f().unwrap() / threshold
    );

    // SigmaSVD with run-fixed subspaces: escape probability grows with the
    // coarse dimension.
    println!("\nSigmaSVD escape probabilities (20 trials each, fixed p = 12):");
    println!("    N    probability");
    for coarse_dim in [18usize, 30, 48, 60] {
        let cfg = MethodConfig {
            resample: ResamplePolicy::PerRun,
            eps_exit: 1e-12,
            max_iters: 30,
            ..MethodConfig::new(Method::SigmaSvd {
                coarse_dim,
                rank: 12,
                mode: TruncationMode::Truncated,
            })
        };
        let report = escape_rate(&obj, &x0, &cfg, 20, 4242, threshold);
        println!(
            "  {coarse_dim:>3}    {:>5.1}%  ({}/{})",
            report.probability() * 100.0,
            report.successes,
            report.trials
        );
    }
}
