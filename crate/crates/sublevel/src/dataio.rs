//! LIBSVM ingestion, dataset standardization, and persistence of run
//! traces as CSV/JSON plus self-contained convergence SVGs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SublevelError};
use crate::optimizers::{IterationTrace, MethodConfig, RunStatus, TraceRow};

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DataSource {
    File(String),
    Synthetic(crate::problems::SyntheticSpec),
}

/// How raw labels are remapped on load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelConvention {
    /// Leave labels untouched.
    Raw,
    /// `{0, 1} -> {-1, +1}` for the classification objectives; labels
    /// already in `{-1, +1}` pass through.
    SignFromZeroOne,
    /// Clip labels into `[0, 1]` for the sigmoid least-squares objective.
    ClampUnit,
}

impl LabelConvention {
    fn apply(&self, label: f64) -> f64 {
        match self {
            LabelConvention::Raw => label,
            LabelConvention::SignFromZeroOne => {
                if label <= 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
            LabelConvention::ClampUnit => label.clamp(0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: DVector<f64>,
    pub name: String,
    pub source: DataSource,
    pub label_convention: LabelConvention,
    pub standardized: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Force the feature dimension instead of inferring it from the
    /// largest index in the file.
    pub n_override: Option<usize>,
    pub labels: Option<LabelConvention>,
}

/// Parses the LIBSVM text format: one `label (index:value)*` line per
/// sample, 1-based strictly increasing indices within a line. Absent
/// indices are zero-filled. Blank lines are skipped; anything else
/// malformed is a parse error naming line and column.
pub fn load_libsvm(path: impl AsRef<Path>, options: LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| SublevelError::io(path.display().to_string(), e))?;
    let convention = options.labels.unwrap_or(LabelConvention::Raw);

    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in text.lines().enumerate() {
        let line_number = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = tokenize(line);
        let (label_tok, label_col) = tokens
            .next()
            .expect("non-blank line has at least one token");
        let label: f64 = label_tok.parse().map_err(|_| SublevelError::ParseError {
            line: line_number,
            column: label_col,
            message: format!("invalid label `{label_tok}`"),
        })?;
        if !label.is_finite() {
            return Err(SublevelError::ParseError {
                line: line_number,
                column: label_col,
                message: "non-finite label".into(),
            });
        }

        let mut entries: Vec<(usize, f64)> = Vec::new();
        let mut prev_index = 0usize;
        for (tok, col) in tokens {
            let Some((idx_str, val_str)) = tok.split_once(':') else {
                return Err(SublevelError::ParseError {
                    line: line_number,
                    column: col,
                    message: format!("expected index:value, got `{tok}`"),
                });
            };
            let index: usize = idx_str.parse().map_err(|_| SublevelError::ParseError {
                line: line_number,
                column: col,
                message: format!("invalid index `{idx_str}`"),
            })?;
            if index == 0 {
                return Err(SublevelError::ParseError {
                    line: line_number,
                    column: col,
                    message: "indices are 1-based".into(),
                });
            }
            if index <= prev_index {
                return Err(SublevelError::ParseError {
                    line: line_number,
                    column: col,
                    message: format!(
                        "index {index} does not increase (previous {prev_index})"
                    ),
                });
            }
            if let Some(n) = options.n_override {
                if index > n {
                    return Err(SublevelError::ParseError {
                        line: line_number,
                        column: col,
                        message: format!("index {index} exceeds the forced dimension {n}"),
                    });
                }
            }
            let value: f64 = val_str.parse().map_err(|_| SublevelError::ParseError {
                line: line_number,
                column: col + idx_str.len() + 1,
                message: format!("invalid value `{val_str}`"),
            })?;
            if !value.is_finite() {
                return Err(SublevelError::ParseError {
                    line: line_number,
                    column: col + idx_str.len() + 1,
                    message: "non-finite value".into(),
                });
            }
            prev_index = index;
            entries.push((index, value));
        }
        max_index = max_index.max(prev_index);
        labels.push(convention.apply(label));
        rows.push(entries);
    }

    if rows.is_empty() {
        return Err(SublevelError::EmptyDataset);
    }
    let n = options.n_override.unwrap_or(max_index);
    if n == 0 {
        return Err(SublevelError::EmptyDataset);
    }

    let mut features = DMatrix::zeros(rows.len(), n);
    for (i, entries) in rows.iter().enumerate() {
        for &(index, value) in entries {
            features[(i, index - 1)] = value;
        }
    }

    Ok(Dataset {
        features,
        labels: DVector::from_vec(labels),
        name: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into()),
        source: DataSource::File(path.display().to_string()),
        label_convention: convention,
        standardized: false,
    })
}

/// Whitespace tokenizer that tracks 1-based column offsets.
fn tokenize(line: &str) -> impl Iterator<Item = (&str, usize)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((&line[s..i], s + 1));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((&line[s..], s + 1));
    }
    out.into_iter()
}

/// Writes a dataset back in LIBSVM format (used by tests for round-trips).
pub fn write_libsvm(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for i in 0..ds.features.nrows() {
        let _ = write!(text, "{}", format_float(ds.labels[i]));
        for j in 0..ds.features.ncols() {
            let v = ds.features[(i, j)];
            if v != 0.0 {
                let _ = write!(text, " {}:{}", j + 1, format_float(v));
            }
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| SublevelError::io(path.display().to_string(), e))
}

/// Per-column mean 0, variance 1 (population variance); constant columns
/// become zeros. Recorded in the dataset's metadata flag.
pub fn standardize(ds: &Dataset) -> Dataset {
    let m = ds.features.nrows();
    let mut features = ds.features.clone();
    for j in 0..features.ncols() {
        let mean = features.column(j).sum() / m as f64;
        let var = features
            .column(j)
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / m as f64;
        let sd = var.sqrt();
        for i in 0..m {
            features[(i, j)] = if sd > 0.0 {
                (features[(i, j)] - mean) / sd
            } else {
                0.0
            };
        }
    }
    Dataset {
        features,
        labels: ds.labels.clone(),
        name: ds.name.clone(),
        source: ds.source.clone(),
        label_convention: ds.label_convention,
        standardized: true,
    }
}

/// A completed run: the exact configuration, the trace rows, and a summary.
/// Round-trips losslessly through JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunArtifact {
    pub schema: String,
    pub label: String,
    pub problem: String,
    pub method: MethodConfig,
    pub seed: u64,
    /// Reference optimum for gap plots, when known.
    pub f_star: Option<f64>,
    pub rows: Vec<TraceRow>,
    pub status: RunStatus,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunSummary {
    pub final_f: Option<f64>,
    pub final_grad_norm: Option<f64>,
    pub iterations: usize,
    pub total_seconds: f64,
}

pub const ARTIFACT_SCHEMA: &str = "sublevel/1";

impl RunArtifact {
    pub fn from_trace(
        label: impl Into<String>,
        problem: impl Into<String>,
        method: &MethodConfig,
        trace: &IterationTrace,
    ) -> Self {
        RunArtifact {
            schema: ARTIFACT_SCHEMA.into(),
            label: label.into(),
            problem: problem.into(),
            method: method.clone(),
            seed: method.seed,
            f_star: None,
            rows: trace.rows.clone(),
            status: trace.status.clone(),
            summary: RunSummary {
                final_f: trace.final_f(),
                final_grad_norm: trace.final_grad_norm(),
                iterations: trace.rows.len().saturating_sub(1),
                total_seconds: trace.rows.last().map(|r| r.elapsed_s).unwrap_or(0.0),
            },
        }
    }

    /// Zeroes all wall-clock fields so outputs are byte-reproducible;
    /// timing is environment noise, never an acceptance quantity.
    pub fn strip_timing(mut self) -> Self {
        for row in &mut self.rows {
            row.elapsed_s = 0.0;
        }
        self.summary.total_seconds = 0.0;
        self
    }
}

/// 17 significant digits: enough for an exact `f64` round-trip in decimal.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Trace CSV with the fixed header
/// `k,f,grad_norm,decrement,step,sigma_floor,elapsed_s`; optional fields
/// are left empty. An empty trace writes the header only.
pub fn write_trace_csv(artifact: &RunArtifact, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("k,f,grad_norm,decrement,step,sigma_floor,elapsed_s\n");
    for row in &artifact.rows {
        let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.k,
            format_float(row.f),
            format_float(row.grad_norm),
            opt(row.decrement),
            opt(row.step),
            opt(row.sigma_floor),
            format_float(row.elapsed_s),
        );
    }
    fs::write(path, out).map_err(|e| SublevelError::io(path.display().to_string(), e))
}

pub fn write_summary_json(artifact: &RunArtifact, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(artifact).map_err(|e| {
        SublevelError::InvalidConfig(format!("artifact serialization failed: {e}"))
    })?;
    fs::write(path, json + "\n").map_err(|e| SublevelError::io(path.display().to_string(), e))
}

pub fn read_artifact_json(path: impl AsRef<Path>) -> Result<RunArtifact> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| SublevelError::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| SublevelError::ParseError {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XAxis {
    Iterations,
    Seconds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum YAxis {
    /// `f - f*`; requires `f_star` on every artifact.
    FGap,
    GradNorm,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlotAxes {
    pub x: XAxis,
    pub y: YAxis,
    pub log_y: bool,
}

const PALETTE: [&str; 9] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
    "#7f7f7f",
];

/// Self-contained convergence plot: one polyline per artifact plus a
/// legend. With `log_y`, non-positive values clamp at 1e-16 and the clamp
/// is flagged inside the SVG metadata element.
pub fn emit_convergence_svg(
    artifacts: &[RunArtifact],
    axes: PlotAxes,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if artifacts.is_empty() {
        return Err(SublevelError::InvalidConfig(
            "no artifacts to plot".into(),
        ));
    }

    let mut clamped = false;
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for artifact in artifacts {
        let mut points = Vec::new();
        for row in &artifact.rows {
            let x = match axes.x {
                XAxis::Iterations => row.k as f64,
                XAxis::Seconds => row.elapsed_s,
            };
            let mut y = match axes.y {
                YAxis::GradNorm => row.grad_norm,
                YAxis::FGap => {
                    let f_star = artifact.f_star.ok_or_else(|| {
                        SublevelError::InvalidConfig(format!(
                            "artifact `{}` lacks f_star for gap plotting",
                            artifact.label
                        ))
                    })?;
                    row.f - f_star
                }
            };
            if axes.log_y {
                if y < 1e-16 {
                    y = 1e-16;
                    clamped = true;
                }
                y = y.log10();
            }
            points.push((x, y));
        }
        series.push((artifact.label.clone(), points));
    }

    let (width, height, ml, mr, mt, mb) = (760.0, 480.0, 70.0, 160.0, 30.0, 50.0);
    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x_min, mut x_max, mut y_min, mut y_max) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !x_min.is_finite() || x_max <= x_min {
        x_max = x_min + 1.0;
    }
    if !y_min.is_finite() || y_max <= y_min {
        y_max = y_min + 1.0;
    }
    let sx = |x: f64| ml + (x - x_min) / (x_max - x_min) * (width - ml - mr);
    let sy = |y: f64| height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(
        svg,
        "<metadata>sublevel convergence plot; log_y={}; clamped_at_1e-16={}</metadata>",
        axes.log_y, clamped
    );
    let _ = writeln!(svg, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        height - mb,
        width - mr,
        height - mb
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>",
        height - mb
    );
    let x_label = match axes.x {
        XAxis::Iterations => "iterations",
        XAxis::Seconds => "seconds",
    };
    let y_label = match (axes.y, axes.log_y) {
        (YAxis::GradNorm, false) => "gradient norm".to_string(),
        (YAxis::GradNorm, true) => "log10 gradient norm".to_string(),
        (YAxis::FGap, false) => "f - f*".to_string(),
        (YAxis::FGap, true) => "log10(f - f*)".to_string(),
    };
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{x_label}</text>",
        (ml + width - mr) / 2.0,
        height - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{y_label}</text>",
        (mt + height - mb) / 2.0,
        (mt + height - mb) / 2.0
    );
    // Min/max tick labels.
    let _ = writeln!(
        svg,
        "<text x=\"{ml}\" y=\"{}\" font-size=\"11\">{x_min:.3}</text>",
        height - mb + 16.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{x_max:.3}</text>",
        width - mr,
        height - mb + 16.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{y_min:.3}</text>",
        ml - 6.0,
        height - mb
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{y_max:.3}</text>",
        ml - 6.0,
        mt + 4.0
    );

    for (i, (label, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if !coords.is_empty() {
            let _ = writeln!(
                svg,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\" points=\"{}\"/>",
                coords.join(" ")
            );
        }
        let ly = mt + 16.0 * i as f64 + 10.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            width - mr + 8.0,
            width - mr + 28.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{label}</text>",
            width - mr + 34.0,
            ly + 4.0
        );
    }
    let _ = writeln!(svg, "</svg>");
    fs::write(path, svg).map_err(|e| SublevelError::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::Method;
    use proptest::prelude::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn parses_basic_line() {
        let dir = tmp();
        let p = dir.path().join("toy.libsvm");
        std::fs::write(&p, "1 1:0.5 3:2.0\n").unwrap();
        let ds = load_libsvm(&p, LoadOptions::default()).unwrap();
        assert_eq!(ds.features.nrows(), 1);
        assert_eq!(ds.features.ncols(), 3);
        assert_eq!(ds.features[(0, 0)], 0.5);
        assert_eq!(ds.features[(0, 1)], 0.0);
        assert_eq!(ds.features[(0, 2)], 2.0);
        assert_eq!(ds.labels[0], 1.0);
    }

    #[test]
    fn rejects_non_increasing_indices() {
        let dir = tmp();
        let p = dir.path().join("bad.libsvm");
        std::fs::write(&p, "1 3:1 2:1\n").unwrap();
        match load_libsvm(&p, LoadOptions::default()) {
            Err(SublevelError::ParseError { line: 1, .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_index() {
        let dir = tmp();
        let p = dir.path().join("dup.libsvm");
        std::fs::write(&p, "0 2:1 2:3\n").unwrap();
        assert!(matches!(
            load_libsvm(&p, LoadOptions::default()),
            Err(SublevelError::ParseError { .. })
        ));
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let dir = tmp();
        let p = dir.path().join("empty.libsvm");
        std::fs::write(&p, "\n\n").unwrap();
        assert!(matches!(
            load_libsvm(&p, LoadOptions::default()),
            Err(SublevelError::EmptyDataset)
        ));
    }

    #[test]
    fn roundtrip_small_file() {
        let dir = tmp();
        let p = dir.path().join("rt.libsvm");
        std::fs::write(&p, "1 1:0.25 2:-3\n0 3:7.5\n1 1:1e-3\n").unwrap();
        let ds = load_libsvm(&p, LoadOptions::default()).unwrap();
        let p2 = dir.path().join("rt2.libsvm");
        write_libsvm(&ds, &p2).unwrap();
        let ds2 = load_libsvm(&p2, LoadOptions::default()).unwrap();
        assert_eq!(ds.features.as_slice(), ds2.features.as_slice());
        assert_eq!(ds.labels.as_slice(), ds2.labels.as_slice());
    }

    #[test]
    fn label_conventions() {
        let dir = tmp();
        let p = dir.path().join("lbl.libsvm");
        std::fs::write(&p, "0 1:1\n1 1:2\n-1 1:3\n").unwrap();
        let ds = load_libsvm(
            &p,
            LoadOptions {
                labels: Some(LabelConvention::SignFromZeroOne),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(ds.labels.as_slice(), &[-1.0, 1.0, -1.0]);
        let ds = load_libsvm(
            &p,
            LoadOptions {
                labels: Some(LabelConvention::ClampUnit),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(ds.labels.as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn standardize_constant_column_becomes_zero() {
        let ds = Dataset {
            features: DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 4.0, 1.0, 6.0]),
            labels: DVector::zeros(3),
            name: "t".into(),
            source: DataSource::File("t".into()),
            label_convention: LabelConvention::Raw,
            standardized: false,
        };
        let out = standardize(&ds);
        for i in 0..3 {
            assert_eq!(out.features[(i, 0)], 0.0);
        }
        let mean: f64 = out.features.column(1).sum() / 3.0;
        assert!(mean.abs() <= 1e-12);
        let var: f64 = out
            .features
            .column(1)
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            / 3.0;
        assert!((var - 1.0).abs() <= 1e-12);
        // Idempotent up to floating point.
        let again = standardize(&out);
        for (a, b) in out.features.iter().zip(again.features.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    fn empty_artifact() -> RunArtifact {
        RunArtifact {
            schema: ARTIFACT_SCHEMA.into(),
            label: "gd".into(),
            problem: "quadratic".into(),
            method: MethodConfig::new(Method::Gd),
            seed: 0,
            f_star: None,
            rows: vec![],
            status: RunStatus::MaxIters,
            summary: RunSummary {
                final_f: None,
                final_grad_norm: None,
                iterations: 0,
                total_seconds: 0.0,
            },
        }
    }

    #[test]
    fn empty_trace_writes_header_only() {
        let dir = tmp();
        let p = dir.path().join("trace.csv");
        write_trace_csv(&empty_artifact(), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "k,f,grad_norm,decrement,step,sigma_floor,elapsed_s\n");
    }

    #[test]
    fn artifact_json_roundtrip() {
        let dir = tmp();
        let mut artifact = empty_artifact();
        artifact.rows.push(TraceRow {
            k: 0,
            f: 0.123_456_789_123_456_78,
            grad_norm: 1e-300,
            decrement: Some(std::f64::consts::PI),
            step: None,
            sigma_floor: Some(1e-10),
            elapsed_s: 0.25,
        });
        artifact.f_star = Some(-1.0 / 3.0);
        let p = dir.path().join("artifact.json");
        write_summary_json(&artifact, &p).unwrap();
        let back = read_artifact_json(&p).unwrap();
        assert_eq!(artifact, back);
    }

    #[test]
    fn svg_flags_log_clamp() {
        let dir = tmp();
        let mut artifact = empty_artifact();
        for k in 0..3 {
            artifact.rows.push(TraceRow {
                k,
                f: 1.0,
                grad_norm: if k == 2 { 0.0 } else { 1.0 },
                decrement: None,
                step: None,
                sigma_floor: None,
                elapsed_s: k as f64,
            });
        }
        let p = dir.path().join("plot.svg");
        emit_convergence_svg(
            &[artifact],
            PlotAxes {
                x: XAxis::Iterations,
                y: YAxis::GradNorm,
                log_y: true,
            },
            &p,
        )
        .unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("clamped_at_1e-16=true"));
        assert!(text.contains("<polyline"));
    }

    proptest! {
        // Valid random lines always parse into the matrix they encode.
        #[test]
        fn valid_lines_always_parse(rows in proptest::collection::vec(
            proptest::collection::vec((1usize..40, -100.0f64..100.0), 0..8),
            1..12,
        )) {
            let dir = tmp();
            let p = dir.path().join("fuzz.libsvm");
            let mut text = String::new();
            let mut expected: Vec<Vec<(usize, f64)>> = Vec::new();
            for entries in &rows {
                let mut sorted: Vec<(usize, f64)> = entries.clone();
                sorted.sort_by_key(|e| e.0);
                sorted.dedup_by_key(|e| e.0);
                let _ = write!(text, "1");
                for (idx, val) in &sorted {
                    let _ = write!(text, " {}:{}", idx, format_float(*val));
                }
                text.push('\n');
                expected.push(sorted);
            }
            std::fs::write(&p, &text).unwrap();
            let ds = load_libsvm(&p, LoadOptions { n_override: Some(40), labels: None }).unwrap();
            prop_assert_eq!(ds.features.nrows(), expected.len());
            for (i, entries) in expected.iter().enumerate() {
                let mut dense = vec![0.0f64; 40];
                for &(idx, val) in entries {
                    dense[idx - 1] = val;
                }
                for (j, want) in dense.iter().enumerate() {
                    prop_assert_eq!(ds.features[(i, j)], *want);
                }
            }
        }

        // Corrupted tokens yield ParseError, never a silently wrong matrix.
        #[test]
        fn corrupt_lines_always_error(
            idx in 1usize..20,
            corruption in prop_oneof![
                Just("x"), Just("1:abc"), Just("0:1"), Just("-3:1"), Just("2:"), Just(":1"),
            ],
        ) {
            let dir = tmp();
            let p = dir.path().join("bad.libsvm");
            let text = format!("1 {idx}:1.0 {corruption}\n");
            std::fs::write(&p, text).unwrap();
            let r = load_libsvm(&p, LoadOptions::default());
            let is_parse_error = matches!(r, Err(SublevelError::ParseError { .. }));
            prop_assert!(is_parse_error);
        }
    }
}
