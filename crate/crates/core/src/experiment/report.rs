//! Experiment reports and their on-disk forms.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coeffs::PredictedTrace;
use crate::error::{Error, Result};
use crate::measures::{AhlforsBand, DensityEstimate};
use crate::operators::OperatorMetadata;
use crate::orlicz::OrliczNormResult;
use crate::spectral::{
    dixmier_plot_data, weyl_plot_data, write_spectrum_csv, DixmierEstimate, EigenReport, Sign, SolveCheck, WeylFit,
};

use super::config::ExperimentConfig;

pub const SCHEMA_VERSION: u32 = 1;

pub const SUMMARY_FILE: &str = "summary.json";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const MEASURE_FILE: &str = "measure.txt";
pub const TIMINGS_FILE: &str = "timings.json";
pub const FAILED_MARKER: &str = "FAILED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|value − target| ≤ tolerance·|target|`
    Relative,
    /// `|value − target| ≤ tolerance`
    Absolute,
    /// `value ≤ target`
    AtMost,
}

impl Comparison {
    pub fn holds(self, value: f64, target: f64, tolerance: f64) -> bool {
        match self {
            Comparison::Relative => (value - target).abs() <= tolerance * target.abs(),
            Comparison::Absolute => (value - target).abs() <= tolerance,
            Comparison::AtMost => value <= target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub comparison: Comparison,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Verdict {
    pub fn new(name: impl Into<String>, comparison: Comparison, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            comparison,
            value,
            target,
            tolerance,
            passed: comparison.holds(value, target, tolerance),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentSummary {
    pub label: String,
    pub nominal_dim: f64,
    pub atoms: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureSummary {
    pub ambient_dim: usize,
    pub atoms: usize,
    pub total_mass: f64,
    pub components: Vec<ComponentSummary>,
    pub fingerprint: String,
    pub ahlfors: Option<AhlforsBand>,
    pub density: Option<DensityEstimate>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrliczSummary {
    pub luxemburg_psi: Option<OrliczNormResult>,
    pub luxemburg_phi: Option<OrliczNormResult>,
    pub averaged: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictionSummary {
    /// Factor applied to the surface-measure prediction for this route.
    pub route_scale: f64,
    pub printed: Option<PredictedTrace>,
    pub calibrated: Option<PredictedTrace>,
    /// Plateau targets in the selected mode, already route-scaled.
    pub expected_plus: Option<f64>,
    pub expected_minus: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderSummary {
    pub sign: Sign,
    pub window: (usize, usize),
    pub inf: f64,
    pub sup: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivitySummary {
    pub sign: Sign,
    pub cell_scales: Vec<f64>,
    pub plateaus: Vec<f64>,
    pub max_relative_shift: f64,
    /// Set when the shift exceeds 2%.
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    pub size: usize,
    pub positive_count: usize,
    pub negative_count: usize,
    pub norm: f64,
    pub floor: f64,
    pub check: SolveCheck,
    pub operator: OperatorMetadata,
    pub plateau_plus: Option<WeylFit>,
    pub plateau_minus: Option<WeylFit>,
    pub window_plateau_plus: Option<WeylFit>,
    pub window_plateau_minus: Option<WeylFit>,
    pub dixmier_final: f64,
    pub dixmier_signed_final: f64,
    pub order_bounds: Option<OrderSummary>,
    pub sensitivity: Option<SensitivitySummary>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub measure: MeasureSummary,
    pub orlicz: OrliczSummary,
    pub prediction: PredictionSummary,
    pub spectral: SpectralSummary,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    /// Wall-clock seconds per stage; written separately so the summary
    /// stays reproducible.
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
    #[serde(skip)]
    pub eigen: EigenReport,
    #[serde(skip)]
    pub dixmier: Option<DixmierEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Plotdata,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Summary JSON with its schema version.
pub fn summary_json(report: &ExperimentReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn emit_report(report: &ExperimentReport, dir: &Path, formats: &[ReportFormat]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for format in formats {
        match format {
            ReportFormat::Json => {
                let mut f = create(dir, SUMMARY_FILE)?;
                f.write_all(summary_json(report)?.as_bytes())?;
                f.flush()?;
                let timings: serde_json::Map<String, serde_json::Value> =
                    report.timings.iter().map(|(k, v)| (k.clone(), (*v).into())).collect();
                let mut f = create(dir, TIMINGS_FILE)?;
                serde_json::to_writer_pretty(&mut f, &timings)?;
                writeln!(f)?;
                f.flush()?;
            }
            ReportFormat::Csv => {
                let mut f = create(dir, SPECTRUM_FILE)?;
                write_spectrum_csv(&mut f, &report.eigen)?;
                f.flush()?;
            }
            ReportFormat::Plotdata => {
                for sign in [Sign::Plus, Sign::Minus] {
                    if !report.eigen.list(sign).is_empty() {
                        let name = match sign {
                            Sign::Plus => "weyl_plus.dat",
                            Sign::Minus => "weyl_minus.dat",
                        };
                        create(dir, name)?.write_all(weyl_plot_data(&report.eigen, sign).as_bytes())?;
                    }
                }
                if let Some(d) = &report.dixmier {
                    create(dir, "dixmier.dat")?.write_all(dixmier_plot_data(d).as_bytes())?;
                }
            }
        }
    }
    if report.config.output.svg {
        let points: Vec<(f64, f64)> = report
            .eigen
            .positive
            .iter()
            .enumerate()
            .map(|(i, v)| ((i + 1) as f64, (i + 1) as f64 * v))
            .collect();
        create(dir, "weyl_plus.svg")?.write_all(svg_line_plot("k·λ_k", &points).as_bytes())?;
    }
    Ok(())
}

/// Re-derives every verdict from the numbers stored in a summary JSON.
pub fn recheck_verdicts(summary: &serde_json::Value) -> Result<bool> {
    let verdicts: Vec<Verdict> = serde_json::from_value(summary["verdicts"].clone())?;
    let mut all = true;
    for v in &verdicts {
        let holds = v.comparison.holds(v.value, v.target, v.tolerance);
        if holds != v.passed {
            return Err(Error::Parse(format!("verdict `{}` does not follow from its numbers", v.name)));
        }
        all &= holds;
    }
    if summary["passed"].as_bool() != Some(all) {
        return Err(Error::Parse("overall verdict does not follow from the individual verdicts".into()));
    }
    Ok(all)
}

/// Minimal SVG polyline of `points` with a logarithmic x axis.
pub fn svg_line_plot(title: &str, points: &[(f64, f64)]) -> String {
    let (w, h, pad) = (640.0, 400.0, 40.0);
    let pts: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && y.is_finite()).copied().collect();
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{pad}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n"
    );
    if !pts.is_empty() {
        let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0.ln()), b.max(p.0.ln())));
        let (y0, y1) = pts.iter().fold((0.0f64, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
        let sx = |x: f64| pad + (w - 2.0 * pad) * if x1 > x0 { (x.ln() - x0) / (x1 - x0) } else { 0.5 };
        let sy = |y: f64| h - pad - (h - 2.0 * pad) * if y1 > y0 { (y - y0) / (y1 - y0) } else { 0.5 };
        out.push_str(&format!(
            "<line x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n<line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{}\" stroke=\"black\"/>\n",
            h - pad,
            w - pad,
            h - pad,
            h - pad
        ));
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        out.push_str(&format!(
            "<text x=\"4\" y=\"{pad}\" font-family=\"sans-serif\" font-size=\"11\">{y1:.3}</text>\n<text x=\"4\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{y0:.3}</text>\n",
            h - pad
        ));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons() {
        assert!(Comparison::Relative.holds(1.04, 1.0, 0.05));
        assert!(!Comparison::Relative.holds(1.06, 1.0, 0.05));
        assert!(Comparison::Absolute.holds(-0.05, 0.0, 0.1));
        assert!(Comparison::AtMost.holds(9.9, 10.0, 0.0));
        assert!(!Comparison::AtMost.holds(10.1, 10.0, 0.0));
    }

    #[test]
    fn recheck_detects_tampering() {
        let good = serde_json::json!({
            "verdicts": [Verdict::new("a", Comparison::Relative, 1.01, 1.0, 0.05)],
            "passed": true,
        });
        assert!(recheck_verdicts(&good).unwrap());
        let mut bad = good.clone();
        bad["verdicts"][0]["value"] = 2.0.into();
        assert!(recheck_verdicts(&bad).is_err());
    }

    #[test]
    fn svg_is_well_formed() {
        let s = svg_line_plot("t", &[(1.0, 1.0), (10.0, 2.0), (100.0, 1.5)]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<polyline").count(), 1);
    }
}
