//! The coarse SigmaSVD iteration on the self-concordant barrier model:
//! sample a subspace, floor the reduced Hessian's truncated spectrum, step
//! through the prolongated inverse.
//!
//! Run with: cargo run --release --example sigmasvd_coarse

use nalgebra::DVector;
use sublevel::optimizers::{self, Method, MethodConfig, TruncationMode};
use sublevel::problems::synthetic;

fn main() {
    // Desk-scale version of the benchmark shape (N = 0.5n, small p).
    let (m, n) = (2000, 200);
    let obj = synthetic::loglinear_instance(m, n, 42);
    let cfg = MethodConfig {
        eps_exit: 1e-18,
        ..MethodConfig::new(Method::SigmaSvd {
            coarse_dim: 100,
            rank: 30,
            mode: TruncationMode::Convex,
        })
    }
    .with_max_iters(120)
    .with_grad_tol(1e-8)
    .with_seed(5);

    println!("barrier model m = {m}, n = {n}; SigmaSVD N = 100, p = 30");
    let trace = optimizers::run(&obj, &DVector::zeros(n), &cfg);
    for row in trace.rows.iter().step_by(5) {
        println!(
            "k = {:>3}  f = {:>14.6}  |grad| = {:.3e}  decrement = {}  floor = {}",
            row.k,
            row.f,
            row.grad_norm,
            row.decrement
                .map(|d| format!("{d:.3e}"))
                .unwrap_or_else(|| "-".into()),
            row.sigma_floor
                .map(|s| format!("{s:.3e}"))
                .unwrap_or_else(|| "-".into()),
        );
    }
    println!(
        "status {:?} after {} iterations, final |grad| = {:.3e}",
        trace.status,
        trace.rows.len() - 1,
        trace.final_grad_norm().unwrap()
    );
}
