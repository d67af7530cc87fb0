//! All nine benchmark methods on one regularized logistic instance, with a
//! combined convergence plot.
//!
//! Run with: cargo run --release --example method_comparison

use nalgebra::DVector;
use sublevel::dataio::{emit_convergence_svg, PlotAxes, RunArtifact, XAxis, YAxis};
use sublevel::optimizers::{self, Method, MethodConfig, TruncationMode};
use sublevel::problems::synthetic;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (m, n) = (1500, 120);
    let obj = synthetic::logistic_instance(m, n, 1e-3, 21);
    let x0 = DVector::zeros(n);

    let roster: Vec<(&str, MethodConfig)> = vec![
        ("gd", MethodConfig::new(Method::Gd)),
        ("agd", MethodConfig::new(Method::agd_default())),
        ("adam", MethodConfig::new(Method::adam_default())),
        ("newton", MethodConfig::new(Method::Newton)),
        ("cubic-newton", MethodConfig::new(Method::CubicNewton)),
        (
            "newsamp",
            MethodConfig::new(Method::NewSamp {
                sample_rows: 450,
                rank: 20,
            }),
        ),
        (
            "lowrank-newton",
            MethodConfig::new(Method::LowRankNewton {
                coarse_dim: 60,
                mode: TruncationMode::Convex,
            }),
        ),
        ("sigma", MethodConfig::new(Method::Sigma { coarse_dim: 60 })),
        (
            "sigmasvd",
            MethodConfig::new(Method::SigmaSvd {
                coarse_dim: 60,
                rank: 20,
                mode: TruncationMode::Convex,
            }),
        ),
    ];

    println!("logistic m = {m}, n = {n}; budget 40 iterations each\n");
    println!("{:<16} {:>10} {:>12} {:>8}", "method", "final f", "|grad|", "iters");
    let mut artifacts = Vec::new();
    for (label, cfg) in roster {
        let cfg = cfg.with_max_iters(40).with_grad_tol(1e-10).with_seed(33);
        let trace = optimizers::run(&obj, &x0, &cfg);
        println!(
            "{:<16} {:>10.6} {:>12.3e} {:>8}",
            label,
            trace.final_f().unwrap(),
            trace.final_grad_norm().unwrap(),
            trace.rows.len() - 1
        );
        artifacts.push(RunArtifact::from_trace(label, "logistic", &cfg, &trace));
    }

    let out = std::env::temp_dir().join("sublevel_method_comparison.svg");
    emit_convergence_svg(
        &artifacts,
        PlotAxes {
            x: XAxis::Iterations,
            y: YAxis::GradNorm,
            log_y: true,
        },
        &out,
    )?;
    println!("\ncombined plot written to {}", out.display());
    Ok(())
}
