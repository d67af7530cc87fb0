//! LIBSVM ingestion to trained model: write a toy file, load it with the
//! classification label convention, standardize, solve with SigmaSVD, and
//! persist the trace as CSV/JSON plus a convergence SVG.
//!
//! Run with: cargo run --release --example libsvm_pipeline

use nalgebra::DVector;
use sublevel::dataio::{
    emit_convergence_svg, load_libsvm, standardize, write_summary_json, write_trace_csv,
    LabelConvention, LoadOptions, PlotAxes, RunArtifact, XAxis, YAxis,
};
use sublevel::optimizers::{self, Method, MethodConfig, TruncationMode};
use sublevel::problems::Objective;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("sublevel_libsvm_demo");
    std::fs::create_dir_all(&dir)?;

    // A small separable two-class problem in LIBSVM text format.
    let path = dir.join("toy.libsvm");
    let mut text = String::new();
    for i in 0..40 {
        let t = i as f64 / 5.0;
        let (label, x1, x2) = if i % 2 == 0 {
            (1, 1.0 + t.sin() * 0.3, 0.8 + t.cos() * 0.2)
        } else {
            (0, -1.2 + t.cos() * 0.3, -0.9 + t.sin() * 0.2)
        };
        text.push_str(&format!("{label} 1:{x1:.4} 3:{x2:.4}\n"));
    }
    std::fs::write(&path, text)?;

    let ds = load_libsvm(
        &path,
        LoadOptions {
            n_override: None,
            labels: Some(LabelConvention::SignFromZeroOne),
        },
    )?;
    println!(
        "loaded {} samples, {} features (absent indices zero-filled), labels remapped to +-1",
        ds.features.nrows(),
        ds.features.ncols()
    );
    let ds = standardize(&ds);
    println!("standardized: column means 0, variances 1 (constant columns zeroed)");

    let obj = Objective::logistic(ds.features.clone(), ds.labels.clone(), 1e-2)?;
    let cfg = MethodConfig::new(Method::SigmaSvd {
        coarse_dim: 2,
        rank: 1,
        mode: TruncationMode::Convex,
    })
    .with_max_iters(60)
    .with_grad_tol(1e-9);
    let trace = optimizers::run(&obj, &DVector::zeros(obj.dim()), &cfg);
    println!(
        "SigmaSVD: status {:?}, final |grad| = {:.3e} in {} iterations",
        trace.status,
        trace.final_grad_norm().unwrap(),
        trace.rows.len() - 1
    );

    let artifact = RunArtifact::from_trace("sigmasvd", "logistic(toy)", &cfg, &trace);
    write_trace_csv(&artifact, dir.join("trace.csv"))?;
    write_summary_json(&artifact, dir.join("summary.json"))?;
    emit_convergence_svg(
        &[artifact],
        PlotAxes {
            x: XAxis::Iterations,
            y: YAxis::GradNorm,
            log_y: true,
        },
        dir.join("convergence.svg"),
    )?;
    println!("artifacts written under {}", dir.display());
    Ok(())
}
