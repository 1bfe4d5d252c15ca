use std::fmt;
use std::path::Path;
use std::time::Instant;

use crate::coeffs::{predicted_trace, weyl_ac_coefficient, CoefficientMode, ComponentPrediction, PredictedTrace, SymbolDescriptor};
use crate::error::{Error, Result};
use crate::measures::{ahlfors_constants, density_bounds, nearest_neighbor_distances, write_measure, PointCloudMeasure, SignedDensity};
use crate::operators::{
    assemble_fourier_bs, assemble_log_kernel, assemble_log_potential, assemble_steklov_circle, AssembledOperator,
    DiagonalRule, KernelChoice, LogKernelSpec, Route,
};
use crate::orlicz::{averaged_norm_full, luxemburg_norm, Young};
use crate::spectral::{
    dixmier_of_report, dixmier_signed, eigen_spectrum, order_bounds, weyl_plateau, weyl_plateau_window, EigenReport,
    Sign, WeylFit,
};

use super::config::ExperimentConfig;
use super::report::{
    emit_report, Comparison, ComponentSummary, ExperimentReport, MeasureSummary, OrderSummary, OrliczSummary,
    PredictionSummary, ReportFormat, SensitivitySummary, SpectralSummary, Verdict, FAILED_MARKER, MEASURE_FILE,
    SCHEMA_VERSION,
};

/// Relative plateau shift under a ±5% cell-size change that flags a run.
pub const SENSITIVITY_FLAG: f64 = 0.02;
const SENSITIVITY_SCALES: [f64; 2] = [0.95, 1.05];
/// Dispersion below which Dixmier and plateau must agree.
const DIXMIER_DISPERSION_GATE: f64 = 0.05;

/// A pipeline error tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageFailure {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageFailure {}

impl StageFailure {
    pub fn is_config(&self) -> bool {
        self.stage == "validate" || self.stage == "output" || self.error.is_config()
    }
}

trait Staged<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, StageFailure>;
}

impl<T> Staged<T> for Result<T> {
    fn at(self, stage: &'static str) -> std::result::Result<T, StageFailure> {
        self.map_err(|error| StageFailure { stage, error })
    }
}

struct Clock(Vec<(String, f64)>, Instant);

impl Clock {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.0.push((stage.into(), (now - self.1).as_secs_f64()));
        self.1 = now;
    }
}

/// Runs the configured pipeline and, when `out` is given, writes the measure
/// file, summary JSON, spectrum CSV, plot data and timings there.
///
/// Validation errors leave no output. Later failures leave whatever was
/// written plus a `FAILED` marker naming the stage.
pub fn run_experiment(config: &ExperimentConfig, out: Option<&Path>) -> std::result::Result<ExperimentReport, StageFailure> {
    config.validate().at("validate")?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(Error::from).at("output")?;
        let marker = dir.join(FAILED_MARKER);
        if marker.exists() {
            std::fs::remove_file(marker).map_err(Error::from).at("output")?;
        }
    }
    let result = pipeline(config, out);
    if let (Err(failure), Some(dir)) = (&result, out) {
        // best effort: the original failure is what gets reported
        let _ = std::fs::write(
            dir.join(FAILED_MARKER),
            format!("stage: {}\nerror: {}\n", failure.stage, failure.error),
        );
    }
    result
}

fn pipeline(config: &ExperimentConfig, out: Option<&Path>) -> std::result::Result<ExperimentReport, StageFailure> {
    let mut clock = Clock(Vec::new(), Instant::now());
    let (measure, v) = config.build().at("measure")?;
    if let Some(dir) = out {
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(MEASURE_FILE)).map_err(Error::from).at("output")?);
        write_measure(&mut f, &measure, Some(&v)).at("output")?;
    }
    clock.lap("measure");

    let measure_summary = measure_diagnostics(config, &measure).at("diagnostics")?;
    clock.lap("diagnostics");
    let orlicz = orlicz_summary(&measure, &v);
    clock.lap("orlicz");
    let prediction = prediction_summary(config, &measure, &v).at("prediction")?;
    clock.lap("prediction");

    let op = assemble(config, &measure, &v, None).at("assembly")?;
    clock.lap("assembly");
    let eigen = eigen_spectrum(&op).at("eigensolve")?;
    drop(op);
    clock.lap("eigensolve");

    let (spectral, dixmier) = spectral_summary(config, &measure, &v, &eigen, &prediction).at("analysis")?;
    clock.lap("analysis");
    let verdicts = verdicts(config, &v, &prediction, &spectral).at("analysis")?;
    let passed = verdicts.iter().all(|v| v.passed);

    let mut report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        measure: measure_summary,
        orlicz,
        prediction,
        spectral,
        verdicts,
        passed,
        timings: Vec::new(),
        eigen,
        dixmier: Some(dixmier),
    };
    report.timings = clock.0;
    if let Some(dir) = out {
        emit_report(&report, dir, &[ReportFormat::Json, ReportFormat::Csv, ReportFormat::Plotdata]).at("output")?;
    }
    Ok(report)
}

fn measure_diagnostics(config: &ExperimentConfig, measure: &PointCloudMeasure) -> Result<MeasureSummary> {
    let components: Vec<ComponentSummary> = measure
        .components()
        .iter()
        .map(|c| ComponentSummary {
            label: c.label.clone(),
            nominal_dim: c.nominal_dim,
            atoms: c.range.len(),
            mass: c.range.clone().map(|i| measure.weight(i)).sum(),
        })
        .collect();
    let mut notes = Vec::new();
    let (mut ahlfors, mut density) = (None, None);
    if !config.analysis.diagnostics {
        notes.push("diagnostics disabled".into());
    } else if components.len() != 1 {
        notes.push("regularity diagnostics skipped: several components of different dimension".into());
    } else if measure.len() < 2 {
        notes.push("regularity diagnostics skipped: single atom".into());
    } else {
        let s = components[0].nominal_dim;
        let mut nn: Vec<f64> = nearest_neighbor_distances(measure);
        nn.sort_by(f64::total_cmp);
        // radii from twice the resolution floor up to a quarter diameter
        let r0 = 8.0 * nn[nn.len() / 2];
        let r1 = measure.diameter_bound() / 4.0;
        if r0 < r1 {
            let radii: Vec<f64> = (0..6).map(|j| r0 * (r1 / r0).powf(j as f64 / 5.0)).collect();
            ahlfors = Some(ahlfors_constants(measure, s, &radii, 200, config.seed)?);
            density = Some(density_bounds(measure, s, measure.position(0), &radii)?);
        } else {
            notes.push("regularity diagnostics skipped: resolution too coarse".into());
        }
    }
    Ok(MeasureSummary {
        ambient_dim: measure.ambient_dim(),
        atoms: measure.len(),
        total_mass: measure.total_mass(),
        components,
        fingerprint: measure.fingerprint(),
        ahlfors,
        density,
        notes,
    })
}

fn orlicz_summary(measure: &PointCloudMeasure, v: &SignedDensity) -> OrliczSummary {
    let mut notes = Vec::new();
    let mut keep = |r: Result<_>, name: &str| match r {
        Ok(x) => Some(x),
        Err(e) => {
            notes.push(format!("{name}: {e}"));
            None
        }
    };
    let luxemburg_psi = keep(luxemburg_norm(v, measure, Young::Psi), "luxemburg_psi");
    let luxemburg_phi = keep(luxemburg_norm(v, measure, Young::Phi), "luxemburg_phi");
    let averaged = match averaged_norm_full(v, measure) {
        Ok(x) => Some(x),
        Err(e) => {
            notes.push(format!("averaged: {e}"));
            None
        }
    };
    OrliczSummary {
        luxemburg_psi,
        luxemburg_phi,
        averaged,
        notes,
    }
}

fn log_spec(config: &ExperimentConfig, n: usize) -> Result<LogKernelSpec> {
    let base = match config.operator.kernel.unwrap_or(KernelChoice::PureLog) {
        KernelChoice::PureLog => LogKernelSpec::pure_log(n)?,
        KernelChoice::BesselExactN2 => LogKernelSpec::bessel(),
    };
    let spec = base.with_diagonal(config.operator.diagonal_rule);
    Ok(match config.operator.log_coefficient {
        Some(c) => spec.with_coefficient(c),
        None => spec,
    })
}

fn assemble(
    config: &ExperimentConfig,
    measure: &PointCloudMeasure,
    v: &SignedDensity,
    cell_scale: Option<f64>,
) -> Result<AssembledOperator> {
    let op = &config.operator;
    let budget = op.budget;
    match op.route {
        Route::Fourier => assemble_fourier_bs(
            measure,
            v,
            op.period.expect("validated"),
            op.cutoff.expect("validated"),
            budget,
        ),
        Route::Logkernel => {
            let mut spec = log_spec(config, measure.ambient_dim())?;
            if let Some(s) = cell_scale {
                spec = spec.with_cell_scale(s);
            }
            assemble_log_kernel(measure, v, &spec, budget)
        }
        Route::Logpotential => assemble_log_potential(measure, v, op.diagonal_rule, budget),
        Route::Steklov => assemble_steklov_circle(measure, v, op.cutoff.expect("validated"), op.zero_mode, budget),
    }
}

/// The Steklov form is the order −1 multiplier `|k|^{−1}` on the circle
/// itself, so its coefficient is the one-dimensional `ϖ₁ = 1/π` in both modes.
fn steklov_prediction(measure: &PointCloudMeasure, v: &SignedDensity, mode: CoefficientMode) -> Result<PredictedTrace> {
    let coeff = weyl_ac_coefficient(1)?.value;
    let mut components = Vec::new();
    let (mut a_plus, mut a_minus) = (0.0, 0.0);
    for c in measure.components() {
        if c.nominal_dim != 1.0 {
            return Err(Error::PredictionUnavailable(c.nominal_dim));
        }
        let (mut p, mut m) = (0.0, 0.0);
        for i in c.range.clone() {
            let x = v.values()[i];
            p += measure.weight(i) * x.max(0.0);
            m += measure.weight(i) * (-x).max(0.0);
        }
        a_plus += coeff * p;
        a_minus += coeff * m;
        components.push(ComponentPrediction {
            label: c.label.clone(),
            nominal_dim: 1.0,
            coefficient: coeff,
            mass_plus: p,
            mass_minus: m,
        });
    }
    Ok(PredictedTrace {
        mode,
        a_plus,
        a_minus,
        residue: a_plus - a_minus,
        components,
        approximate_frames: false,
    })
}

fn prediction_summary(config: &ExperimentConfig, measure: &PointCloudMeasure, v: &SignedDensity) -> Result<PredictionSummary> {
    let n = measure.ambient_dim();
    let mut notes = Vec::new();
    let route = config.operator.route;
    // the log-kernel routes carry c_log explicitly; the prediction assumes
    // the natural constant, so a user override rescales it
    let route_scale = match route {
        Route::Fourier | Route::Steklov => 1.0,
        Route::Logkernel => {
            let spec = log_spec(config, n)?;
            let natural = match spec.kernel {
                KernelChoice::PureLog => LogKernelSpec::pure_log(n)?.log_coefficient,
                KernelChoice::BesselExactN2 => LogKernelSpec::bessel().log_coefficient,
            };
            spec.log_coefficient / natural
        }
        Route::Logpotential => 1.0 / LogKernelSpec::pure_log(n)?.log_coefficient,
    };
    let predict = |mode| {
        if route == Route::Steklov {
            steklov_prediction(measure, v, mode)
        } else {
            predicted_trace(measure, v, &SymbolDescriptor::flagship(n), mode)
        }
    };
    let mut traces = Vec::new();
    for mode in [CoefficientMode::Printed, CoefficientMode::Calibrated] {
        match predict(mode) {
            Ok(t) => traces.push(Some(t)),
            Err(e @ Error::PredictionUnavailable(_)) => {
                notes.push(format!("{mode:?}: {e}"));
                traces.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let calibrated = traces.pop().expect("two modes");
    let printed = traces.pop().expect("two modes");
    let selected = match config.analysis.mode {
        CoefficientMode::Printed => &printed,
        CoefficientMode::Calibrated => &calibrated,
    };
    let (expected_plus, expected_minus) = match selected {
        None => (None, None),
        // log r = −(−log r): the potential's spectrum is the negated kernel's
        Some(t) if route == Route::Logpotential => (None, Some(t.a_plus * route_scale)),
        Some(t) => (Some(t.a_plus * route_scale), Some(t.a_minus * route_scale)),
    };
    Ok(PredictionSummary {
        route_scale,
        printed,
        calibrated,
        expected_plus,
        expected_minus,
        notes,
    })
}

fn fits(config: &ExperimentConfig, report: &EigenReport, sign: Sign, notes: &mut Vec<String>) -> (Option<WeylFit>, Option<WeylFit>) {
    if report.list(sign).is_empty() {
        return (None, None);
    }
    let relative = match weyl_plateau(report, sign, config.analysis.window) {
        Ok(f) => Some(f),
        Err(e) => {
            notes.push(format!("plateau {}: {e}", sign.symbol()));
            None
        }
    };
    let window = config.analysis.index_window.and_then(|(a, b)| match weyl_plateau_window(report, sign, a, b) {
        Ok(f) => Some(f),
        Err(e) => {
            notes.push(format!("window plateau {}: {e}", sign.symbol()));
            None
        }
    });
    (relative, window)
}

fn selected_plateau(config: &ExperimentConfig, report: &EigenReport, sign: Sign) -> Result<WeylFit> {
    match config.analysis.index_window {
        Some((a, b)) => weyl_plateau_window(report, sign, a, b),
        None => weyl_plateau(report, sign, config.analysis.window),
    }
}

fn primary_sign(prediction: &PredictionSummary, eigen: &EigenReport) -> Sign {
    match (prediction.expected_plus, prediction.expected_minus) {
        (None | Some(0.0), Some(m)) if m > 0.0 => Sign::Minus,
        (None, None) if eigen.negative.len() > eigen.positive.len() => Sign::Minus,
        _ => Sign::Plus,
    }
}

fn spectral_summary(
    config: &ExperimentConfig,
    measure: &PointCloudMeasure,
    v: &SignedDensity,
    eigen: &EigenReport,
    prediction: &PredictionSummary,
) -> Result<(SpectralSummary, crate::spectral::DixmierEstimate)> {
    let mut notes = Vec::new();
    let (plateau_plus, window_plateau_plus) = fits(config, eigen, Sign::Plus, &mut notes);
    let (plateau_minus, window_plateau_minus) = fits(config, eigen, Sign::Minus, &mut notes);
    let dixmier = dixmier_of_report(eigen)?;
    let dixmier_signed_final = dixmier_signed(eigen)?.final_value;
    let sign = primary_sign(prediction, eigen);
    let order = match config.analysis.order_window {
        Some(w) => {
            let (inf, sup) = order_bounds(eigen, sign, w)?;
            Some(OrderSummary {
                sign,
                window: w,
                inf,
                sup,
                ratio: sup / inf,
            })
        }
        None => None,
    };
    let sensitivity = if config.analysis.sensitivity
        && config.operator.route == Route::Logkernel
        && config.operator.diagonal_rule == DiagonalRule::CellAverage
    {
        let base = selected_plateau(config, eigen, sign)?.plateau;
        let mut plateaus = Vec::new();
        for s in SENSITIVITY_SCALES {
            let op = assemble(config, measure, v, Some(s))?;
            plateaus.push(selected_plateau(config, &eigen_spectrum(&op)?, sign)?.plateau);
        }
        let max_relative_shift = plateaus.iter().map(|p| (p - base).abs() / base).fold(0.0, f64::max);
        Some(SensitivitySummary {
            sign,
            cell_scales: SENSITIVITY_SCALES.to_vec(),
            plateaus,
            max_relative_shift,
            flagged: max_relative_shift > SENSITIVITY_FLAG,
        })
    } else {
        None
    };
    if sensitivity.as_ref().is_some_and(|s| s.flagged) {
        notes.push("plateau moves by more than 2% under a ±5% cell-size change".into());
    }
    Ok((
        SpectralSummary {
            size: eigen.size,
            positive_count: eigen.positive.len(),
            negative_count: eigen.negative.len(),
            norm: eigen.norm,
            floor: eigen.floor,
            check: eigen.check,
            operator: eigen.metadata.clone().expect("solved from an operator"),
            plateau_plus,
            plateau_minus,
            window_plateau_plus,
            window_plateau_minus,
            dixmier_final: dixmier.final_value,
            dixmier_signed_final,
            order_bounds: order,
            sensitivity,
            notes,
        },
        dixmier,
    ))
}

fn verdicts(
    config: &ExperimentConfig,
    v: &SignedDensity,
    prediction: &PredictionSummary,
    spectral: &SpectralSummary,
) -> Result<Vec<Verdict>> {
    let a = &config.analysis;
    let mut out = Vec::new();
    if let Some(tol) = a.plateau_tolerance {
        let targets = [
            (Sign::Plus, prediction.expected_plus, spectral.window_plateau_plus.or(spectral.plateau_plus)),
            (Sign::Minus, prediction.expected_minus, spectral.window_plateau_minus.or(spectral.plateau_minus)),
        ];
        let mut any = false;
        for (sign, target, fit) in targets {
            let Some(target) = target.filter(|t| *t > 0.0) else { continue };
            let fit = if a.index_window.is_some() {
                match sign {
                    Sign::Plus => spectral.window_plateau_plus,
                    Sign::Minus => spectral.window_plateau_minus,
                }
            } else {
                fit
            };
            let fit = fit.ok_or(Error::TooFewEigenvalues {
                needed: crate::spectral::MIN_PLATEAU_EIGENVALUES,
                have: match sign {
                    Sign::Plus => spectral.positive_count,
                    Sign::Minus => spectral.negative_count,
                },
            })?;
            let name = match sign {
                Sign::Plus => "plateau_plus",
                Sign::Minus => "plateau_minus",
            };
            out.push(Verdict::new(name, Comparison::Relative, fit.plateau, target, tol));
            any = true;
        }
        if !any {
            return Err(Error::Config(
                "`plateau_tolerance` is set but no prediction is available for this measure".into(),
            ));
        }
    }
    if let (Some(order), Some(max)) = (&spectral.order_bounds, a.order_ratio_max) {
        out.push(Verdict::new("order_ratio", Comparison::AtMost, order.ratio, max, 0.0));
    }
    if let Some(max) = a.dixmier_signed_max {
        out.push(Verdict::new("dixmier_signed", Comparison::Absolute, spectral.dixmier_signed_final, 0.0, max));
    }
    if let Some(tol) = a.dixmier_agreement {
        if v.is_nonnegative() && config.operator.route != Route::Logpotential {
            if let Some(fit) = spectral.plateau_plus.filter(|f| f.dispersion <= DIXMIER_DISPERSION_GATE) {
                out.push(Verdict::new(
                    "dixmier_vs_plateau",
                    Comparison::Relative,
                    spectral.dixmier_final,
                    fit.plateau,
                    tol,
                ));
            }
        }
    }
    Ok(out)
}
