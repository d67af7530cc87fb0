//! The decrement family and its ordering: exact Newton decrement, Galerkin
//! decrement, floored coarse decrement, and the sub-optimality sandwich
//! built from the omega auxiliaries.
//!
//! Run with: cargo run --release --example decrement_diagnostics

use nalgebra::DVector;
use sublevel::coarse::sample_operator;
use sublevel::diagnostics::{
    approx_decrements, omega, omega_star, suboptimality_bounds,
};
use sublevel::optimizers::{self, Method, MethodConfig};
use sublevel::problems::synthetic;
use sublevel::spectral::{randomized_tsvd, FloorMode, TsvdConfig};

fn main() {
    let n = 60;
    let obj = synthetic::logistic_instance(300, n, 1e-3, 3);
    let x = DVector::from_fn(n, |i, _| 0.05 * ((i * 3) as f64).cos());

    println!("decrement chain on a logistic instance (n = {n}, N = 30, p = 10):");
    println!("  sqrt(sN/sp1) * lt  <=  lh  <=  lt  <=  l\n");
    for seed in 0..5u64 {
        let op = sample_operator(n, 30, seed).unwrap();
        let h_r = obj.reduced_hessian(&x, &op).unwrap();
        let spec =
            randomized_tsvd(&h_r, 10, &TsvdConfig::default(), FloorMode::Convex, seed).unwrap();
        let report = approx_decrements(&obj, &x, &op, &spec).unwrap();
        println!(
            "  draw {seed}: {:.6} <= {:.6} <= {:.6} <= {:.6}   (e_hat = {:.4}, chain slack {:+.1e})",
            report.ratio_reduced.sqrt() * report.lambda_tilde,
            report.lambda_hat,
            report.lambda_tilde,
            report.lambda,
            report.e_hat,
            report.chain_violation,
        );
    }

    // omega auxiliaries.
    println!("\nomega auxiliaries:");
    for x in [0.0, 0.25, 0.5, 0.68] {
        println!(
            "  x = {x:.2}: omega = {:.6}, omega_* = {:.6}, x^2 = {:.6}",
            omega(x).unwrap(),
            omega_star(x).unwrap(),
            x * x
        );
    }

    // Sandwich along a Newton trajectory on the barrier model.
    let barrier = synthetic::loglinear_instance(300, 30, 9);
    let x0 = DVector::zeros(30);
    let reference = MethodConfig::new(Method::Newton)
        .with_max_iters(100)
        .with_grad_tol(1e-13);
    let trace = optimizers::run(&barrier, &x0, &reference);
    let f_star = trace.final_f().unwrap();
    println!("\nsub-optimality sandwich on the barrier model (f* = {f_star:.9}):");
    let (lower, upper, holds) = suboptimality_bounds(&barrier, &x0, f_star).unwrap();
    let gap = barrier.value(&x0).unwrap() - f_star;
    println!("  at x0: omega(l) = {lower:.6} <= f - f* = {gap:.6} <= omega_*(l) = {upper:.6}  [{holds}]");
    let x_star = trace.final_point();
    let (lower, upper, holds) = suboptimality_bounds(&barrier, &x_star, f_star).unwrap();
    println!("  at x*: {lower:.2e} <= 0 <= {upper:.2e}  [{holds}]");
}
