//! Eigendecomposition and spectral functionals: counting functions, Weyl
//! plateaus, Dixmier sequences, order bounds and spectrum matching.

use std::io::{BufRead, Write};

use faer::{c64, Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{AssembledOperator, OperatorMatrix, OperatorMetadata};

/// Relative floor separating numerical zeros from eigenvalues.
pub const EIGEN_FLOOR: f64 = 1e-14;
/// Largest order for which eigenvectors are computed for residual checks.
pub const RESIDUAL_CHECK_LIMIT: usize = 2048;
pub const MIN_PLATEAU_EIGENVALUES: usize = 40;
pub const DEFAULT_WINDOW: (f64, f64) = (0.05, 0.25);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

/// How the eigensolve was verified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SolveCheck {
    /// Largest `‖Mv − λv‖/‖M‖` over sampled eigenpairs.
    Residual { worst: f64, pairs: usize },
    /// Relative defects of `Σλ = tr M` and `Σλ² = ‖M‖_F²`.
    Moments { trace: f64, frobenius: f64 },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    /// `λ₁⁺ ≥ λ₂⁺ ≥ … > floor`.
    pub positive: Vec<f64>,
    /// `|λ₁⁻| ≥ |λ₂⁻| ≥ … > floor`.
    pub negative: Vec<f64>,
    pub size: usize,
    pub norm: f64,
    pub floor: f64,
    pub check: SolveCheck,
    pub metadata: Option<OperatorMetadata>,
}

impl EigenReport {
    /// Report for an explicit list of eigenvalues.
    pub fn from_values(values: &[f64]) -> Self {
        let norm = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let floor = EIGEN_FLOOR * norm;
        let mut positive: Vec<f64> = values.iter().copied().filter(|v| *v > floor).collect();
        let mut negative: Vec<f64> = values.iter().filter(|v| **v < -floor).map(|v| -v).collect();
        positive.sort_by(|a, b| b.total_cmp(a));
        negative.sort_by(|a, b| b.total_cmp(a));
        Self {
            positive,
            negative,
            size: values.len(),
            norm,
            floor,
            check: SolveCheck::None,
            metadata: None,
        }
    }

    pub fn list(&self, sign: Sign) -> &[f64] {
        match sign {
            Sign::Plus => &self.positive,
            Sign::Minus => &self.negative,
        }
    }

    /// All `|λ|` in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.positive.iter().chain(&self.negative).copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

fn residual_check_real(m: &Mat<f64>) -> Result<(Vec<f64>, f64, usize)> {
    let n = m.nrows();
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let norm = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let u = evd.U();
    let mut worst: f64 = 0.0;
    let picks = sample_indices(n);
    for &k in &picks {
        let mut r2 = 0.0;
        for i in 0..n {
            let mv: f64 = (0..n).map(|j| m[(i, j)] * u[(j, k)]).sum();
            r2 += (mv - values[k] * u[(i, k)]).powi(2);
        }
        worst = worst.max(r2.sqrt() / norm.max(f64::MIN_POSITIVE));
    }
    Ok((values, worst, picks.len()))
}

fn residual_check_complex(m: &Mat<c64>) -> Result<(Vec<f64>, f64, usize)> {
    let n = m.nrows();
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let norm = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let u = evd.U();
    let mut worst: f64 = 0.0;
    let picks = sample_indices(n);
    for &k in &picks {
        let mut r2 = 0.0;
        for i in 0..n {
            let mut mv = c64::new(0.0, 0.0);
            for j in 0..n {
                mv += m[(i, j)] * u[(j, k)];
            }
            r2 += (mv - u[(i, k)] * values[k]).norm_sqr();
        }
        worst = worst.max(r2.sqrt() / norm.max(f64::MIN_POSITIVE));
    }
    Ok((values, worst, picks.len()))
}

/// Five eigenpair indices spread over the spectrum, extremes included.
fn sample_indices(n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..5).map(|t| t * (n - 1) / 4).collect();
    v.dedup();
    v
}

/// Full spectrum of a self-adjoint operator, split by sign above the floor
/// `1e−14·‖M‖`.
///
/// Matrices up to order 2048 are verified by eigenpair residuals
/// `‖Mv − λv‖ ≤ 1e−8‖M‖`; larger ones by the trace and Frobenius moments.
pub fn eigen_spectrum(op: &AssembledOperator) -> Result<EigenReport> {
    let n = op.size();
    let finite = match &op.matrix {
        OperatorMatrix::Real(m) => (0..n).all(|j| (0..n).all(|i| m[(i, j)].is_finite())),
        OperatorMatrix::Complex(m) => (0..n).all(|j| (0..n).all(|i| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite())),
    };
    let frob = op.frobenius_norm();
    let summary = || format!("order {n}, trace {:e}, Frobenius norm {frob:e}", op.trace());
    if !finite {
        return Err(Error::Eigensolver(format!("non-finite matrix entries ({})", summary())));
    }
    let (values, check) = if n <= RESIDUAL_CHECK_LIMIT {
        let (values, worst, pairs) = match &op.matrix {
            OperatorMatrix::Real(m) => residual_check_real(m)?,
            OperatorMatrix::Complex(m) => residual_check_complex(m)?,
        };
        if worst > 1e-8 {
            return Err(Error::Eigensolver(format!("eigenpair residual {worst:e} ({})", summary())));
        }
        (values, SolveCheck::Residual { worst, pairs })
    } else {
        let values = match &op.matrix {
            OperatorMatrix::Real(m) => m.self_adjoint_eigenvalues(Side::Lower),
            OperatorMatrix::Complex(m) => m.self_adjoint_eigenvalues(Side::Lower),
        }
        .map_err(|e| Error::Eigensolver(format!("{e:?} ({})", summary())))?;
        let scale = frob.max(f64::MIN_POSITIVE);
        let trace = (values.iter().sum::<f64>() - op.trace()).abs() / scale;
        let sq: f64 = values.iter().map(|v| v * v).sum();
        let frobenius = (sq.sqrt() - frob).abs() / scale;
        if trace > 1e-8 || frobenius > 1e-8 {
            return Err(Error::Eigensolver(format!(
                "moment check failed: trace defect {trace:e}, Frobenius defect {frobenius:e} ({})",
                summary()
            )));
        }
        (values, SolveCheck::Moments { trace, frobenius })
    };
    let mut report = EigenReport::from_values(&values);
    report.size = n;
    report.check = check;
    report.metadata = Some(op.metadata.clone());
    Ok(report)
}

/// `n_±(λ) = #{k : λ_k^± > λ}`.
pub fn counting(report: &EigenReport, lambda: f64, sign: Sign) -> Result<usize> {
    if !(lambda > 0.0) {
        return Err(Error::NonpositiveThreshold(lambda));
    }
    // lists are descending
    Ok(report.list(sign).partition_point(|&x| x > lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylFit {
    pub window: (usize, usize),
    pub plateau: f64,
    pub dispersion: f64,
    pub count: usize,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median and interquartile spread of `k·λ_k` over `k ∈ [k_min, k_max]` (1-based).
pub fn weyl_plateau_window(report: &EigenReport, sign: Sign, k_min: usize, k_max: usize) -> Result<WeylFit> {
    let list = report.list(sign);
    if k_min < 1 || k_min > k_max || k_max > list.len() {
        return Err(Error::EmptyWindow(k_min, k_max));
    }
    let mut values: Vec<f64> = (k_min..=k_max).map(|k| k as f64 * list[k - 1]).collect();
    values.sort_by(f64::total_cmp);
    let plateau = quantile(&values, 0.5);
    let iqr = quantile(&values, 0.75) - quantile(&values, 0.25);
    Ok(WeylFit {
        window: (k_min, k_max),
        plateau,
        dispersion: if plateau > 0.0 { iqr / plateau } else { f64::INFINITY },
        count: list.len(),
    })
}

/// [`weyl_plateau_window`] over `[⌈f₁n⌉, ⌊f₂n⌋]` where `n` counts the
/// eigenvalues of the requested sign.
pub fn weyl_plateau(report: &EigenReport, sign: Sign, fractions: (f64, f64)) -> Result<WeylFit> {
    let n = report.list(sign).len();
    if n < MIN_PLATEAU_EIGENVALUES {
        return Err(Error::TooFewEigenvalues {
            needed: MIN_PLATEAU_EIGENVALUES,
            have: n,
        });
    }
    let k_min = ((fractions.0 * n as f64).ceil() as usize).max(1);
    let k_max = ((fractions.1 * n as f64).floor() as usize).min(n);
    weyl_plateau_window(report, sign, k_min, k_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DixmierEstimate {
    /// Entry `n−1` holds `(log(n+2))^{−1} Σ_{k≤n} s_k`.
    pub sequence: Vec<f64>,
    pub final_value: f64,
}

pub fn dixmier_sequence(s: &[f64]) -> Result<DixmierEstimate> {
    if s.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut partial = 0.0;
    let sequence: Vec<f64> = s
        .iter()
        .enumerate()
        .map(|(k, v)| {
            partial += v;
            partial / ((k + 3) as f64).ln()
        })
        .collect();
    Ok(DixmierEstimate {
        final_value: *sequence.last().expect("nonempty"),
        sequence,
    })
}

/// Dixmier sequence of the singular values of a report.
pub fn dixmier_of_report(report: &EigenReport) -> Result<DixmierEstimate> {
    dixmier_sequence(&report.singular_values())
}

/// Difference of the positive and negative estimates; the shorter list is
/// padded with zeros.
pub fn dixmier_signed(report: &EigenReport) -> Result<DixmierEstimate> {
    let n = report.positive.len().max(report.negative.len());
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let pad = |v: &[f64]| {
        let mut x = v.to_vec();
        x.resize(n, 0.0);
        x
    };
    let plus = dixmier_sequence(&pad(&report.positive))?;
    let minus = dixmier_sequence(&pad(&report.negative))?;
    let sequence: Vec<f64> = plus.sequence.iter().zip(&minus.sequence).map(|(a, b)| a - b).collect();
    Ok(DixmierEstimate {
        final_value: *sequence.last().expect("nonempty"),
        sequence,
    })
}

/// `(min, max)` of `k·λ_k` over the window (1-based, inclusive).
pub fn order_bounds(report: &EigenReport, sign: Sign, window: (usize, usize)) -> Result<(f64, f64)> {
    let list = report.list(sign);
    let (a, b) = window;
    if a < 1 || a > b || b > list.len() {
        return Err(Error::EmptyWindow(a, b));
    }
    Ok((a..=b)
        .map(|k| k as f64 * list[k - 1])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraMatch {
    pub matched: bool,
    /// `|a_k − b_k| / max(a_k, b_k)` for the compared positive indices.
    pub positive_deviations: Vec<f64>,
    pub negative_deviations: Vec<f64>,
}

fn deviation(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// Elementwise comparison of the `top` leading eigenvalues of each sign.
///
/// Every one of the `top` positive eigenvalues must be present in both
/// reports. Negative indices are compared only while one of the two
/// magnitudes exceeds `rel_tol` times the largest eigenvalue of either
/// report; smaller negatives are treated as discretization noise.
pub fn spectra_match(a: &EigenReport, b: &EigenReport, top: usize, rel_tol: f64) -> SpectraMatch {
    let mut matched = a.positive.len() >= top && b.positive.len() >= top;
    let k = top.min(a.positive.len()).min(b.positive.len());
    let positive_deviations: Vec<f64> = (0..k).map(|i| deviation(a.positive[i], b.positive[i])).collect();
    matched &= positive_deviations.iter().all(|d| *d <= rel_tol);
    let scale = a.norm.max(b.norm);
    let mut negative_deviations = Vec::new();
    for i in 0..top {
        let x = a.negative.get(i).copied().unwrap_or(0.0);
        let y = b.negative.get(i).copied().unwrap_or(0.0);
        if x.max(y) <= rel_tol * scale {
            break;
        }
        negative_deviations.push(deviation(x, y));
    }
    matched &= negative_deviations.iter().all(|d| *d <= rel_tol);
    SpectraMatch {
        matched,
        positive_deviations,
        negative_deviations,
    }
}

/// CSV with columns `index,sign,lambda,k_lambda`; `lambda` is `|λ_k^±|`.
pub fn write_spectrum_csv<W: Write>(out: &mut W, report: &EigenReport) -> Result<()> {
    writeln!(out, "index,sign,lambda,k_lambda")?;
    for sign in [Sign::Plus, Sign::Minus] {
        for (i, v) in report.list(sign).iter().enumerate() {
            let k = i + 1;
            writeln!(out, "{k},{},{v},{}", sign.symbol(), k as f64 * v)?;
        }
    }
    Ok(())
}

/// Parses [`write_spectrum_csv`] output back into a value-only report.
pub fn read_spectrum_csv<R: BufRead>(input: R) -> Result<EigenReport> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty spectrum file".into()))??;
    if header.trim() != "index,sign,lambda,k_lambda" {
        return Err(Error::Parse(format!("unexpected header `{header}`")));
    }
    let mut values = Vec::new();
    for line in lines {
        let line = line?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!("bad row `{line}`")));
        }
        let v: f64 = fields[2].parse().map_err(|_| Error::Parse(format!("bad value `{}`", fields[2])))?;
        match fields[1] {
            "+" => values.push(v),
            "-" => values.push(-v),
            s => return Err(Error::Parse(format!("bad sign `{s}`"))),
        }
    }
    let mut report = EigenReport::from_values(&values);
    // keep every listed value even if it falls under the recomputed floor
    report.positive = values.iter().copied().filter(|v| *v > 0.0).collect();
    report.negative = values.iter().filter(|v| **v < 0.0).map(|v| -v).collect();
    Ok(report)
}

/// Two-column `k k·λ_k` plot data.
pub fn weyl_plot_data(report: &EigenReport, sign: Sign) -> String {
    report
        .list(sign)
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{} {}\n", i + 1, (i + 1) as f64 * v))
        .collect()
}

/// Two-column `n Dixmier_n` plot data.
pub fn dixmier_plot_data(estimate: &DixmierEstimate) -> String {
    estimate
        .sequence
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{} {v}\n", i + 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Route;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn diag(values: &[f64]) -> AssembledOperator {
        let n = values.len();
        AssembledOperator::from_real(Mat::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 }), Route::Logkernel).unwrap()
    }

    fn harmonic(c: f64, n: usize) -> EigenReport {
        EigenReport::from_values(&(1..=n).map(|k| c / k as f64).collect::<Vec<_>>())
    }

    #[test]
    fn spectrum_examples() {
        let r = eigen_spectrum(&diag(&[3.0, 1.0, -2.0])).unwrap();
        assert_eq!(r.positive, vec![3.0, 1.0]);
        assert_eq!(r.negative, vec![2.0]);
        let r = eigen_spectrum(&diag(&[0.0; 4])).unwrap();
        assert!(r.positive.is_empty() && r.negative.is_empty());
        let m = Mat::from_fn(2, 2, |i, j| if i == j { 0.0 } else { 0.5 });
        let r = eigen_spectrum(&AssembledOperator::from_real(m, Route::Logkernel).unwrap()).unwrap();
        assert_relative_eq!(r.positive[0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(r.negative[0], 0.5, max_relative = 1e-15);
        assert!(matches!(r.check, SolveCheck::Residual { .. }));
    }

    #[test]
    fn counting_examples() {
        let r = EigenReport::from_values(&[3.0, 1.0, 0.5]);
        assert_eq!(counting(&r, 0.7, Sign::Plus).unwrap(), 2);
        assert_eq!(counting(&r, 5.0, Sign::Plus).unwrap(), 0);
        assert!(counting(&r, 0.0, Sign::Plus).is_err());
        // drop-policy Steklov spectrum: 1/|k| twice for each k
        let steklov: Vec<f64> = (1..=50).flat_map(|k| [1.0 / k as f64; 2]).collect();
        let r = EigenReport::from_values(&steklov);
        assert_eq!(counting(&r, 0.1, Sign::Plus).unwrap(), 18);
    }

    #[test]
    fn plateau_examples() {
        let fit = weyl_plateau(&harmonic(0.7, 1000), Sign::Plus, DEFAULT_WINDOW).unwrap();
        assert_relative_eq!(fit.plateau, 0.7, max_relative = 1e-14);
        assert!(fit.dispersion < 1e-14);
        assert_eq!(fit.window, (50, 250));
        // k·λ_k = c + 10/k, so the median sits near c + 10/(0.15n): the
        // bias drops below 2% of c = 0.7 only from n ≈ 4800 on
        let perturbed = |n: usize| {
            let seq: Vec<f64> = (1..=n).map(|k| 0.7 / k as f64 + 10.0 / (k * k) as f64).collect();
            weyl_plateau(&EigenReport::from_values(&seq), Sign::Plus, DEFAULT_WINDOW).unwrap()
        };
        let fit = perturbed(500);
        // odd window length 101 puts the median at k = 75
        assert_relative_eq!(fit.plateau, 0.7 + 10.0 / 75.0, max_relative = 1e-12);
        let fit = perturbed(5000);
        assert!((fit.plateau - 0.7).abs() <= 0.02 * 0.7, "{}", fit.plateau);
        assert!(matches!(
            weyl_plateau(&harmonic(1.0, 39), Sign::Plus, DEFAULT_WINDOW),
            Err(Error::TooFewEigenvalues { needed: 40, have: 39 })
        ));
    }

    #[test]
    fn dixmier_examples() {
        // H_n / log(n+2) approaches 1 only logarithmically slowly
        let n = 1_000_000;
        let s: Vec<f64> = (1..=n).map(|k| 1.0 / k as f64).collect();
        let h: f64 = s.iter().rev().sum();
        let d = dixmier_sequence(&s).unwrap();
        assert_relative_eq!(d.final_value, h / ((n + 2) as f64).ln(), max_relative = 1e-12);
        assert_relative_eq!(d.final_value, 1.0418, max_relative = 1e-4);

        let s: Vec<f64> = (1..=10_000).map(|k| 1.0 / (k * k) as f64).collect();
        let d = dixmier_sequence(&s).unwrap();
        assert_relative_eq!(d.final_value, std::f64::consts::PI.powi(2) / 6.0 / 10_002f64.ln(), max_relative = 1e-3);

        let s: Vec<f64> = (1..=n).map(|k| (2.0 + if k % 2 == 0 { 1.0 } else { -1.0 }) / k as f64).collect();
        let d = dixmier_sequence(&s).unwrap();
        assert!((d.final_value - 2.0).abs() <= 0.03 * 2.0, "{}", d.final_value);
        assert!(dixmier_sequence(&[]).is_err());
    }

    #[test]
    fn signed_dixmier_cancels() {
        let vals: Vec<f64> = (1..=100).flat_map(|k| [1.0 / k as f64, -1.0 / k as f64]).collect();
        let d = dixmier_signed(&EigenReport::from_values(&vals)).unwrap();
        assert!(d.final_value.abs() < 1e-14);
    }

    #[test]
    fn order_bounds_examples() {
        let r = harmonic(2.0, 500);
        for w in [(1, 10), (20, 400), (100, 500)] {
            let (lo, hi) = order_bounds(&r, Sign::Plus, w).unwrap();
            assert_relative_eq!(lo, 2.0, max_relative = 1e-14);
            assert_relative_eq!(hi, 2.0, max_relative = 1e-14);
        }
        let wrong = EigenReport::from_values(&(1..=500).map(|k| (k as f64).powf(-1.5)).collect::<Vec<_>>());
        let ratio = |w| {
            let (lo, hi) = order_bounds(&wrong, Sign::Plus, w).unwrap();
            hi / lo
        };
        assert!(ratio((10, 40)) < ratio((10, 160)) && ratio((10, 160)) < ratio((10, 480)));
        assert!(order_bounds(&r, Sign::Plus, (10, 5)).is_err());
        assert!(order_bounds(&r, Sign::Plus, (0, 5)).is_err());
        assert!(order_bounds(&r, Sign::Minus, (1, 1)).is_err());
    }

    #[test]
    fn matching() {
        let a = harmonic(1.0, 100);
        assert!(spectra_match(&a, &a, 30, 0.1).matched);
        let b = harmonic(1.0 / (2.0 * std::f64::consts::PI), 100);
        assert!(!spectra_match(&a, &b, 30, 0.1).matched);
        let short = harmonic(1.0, 10);
        assert!(!spectra_match(&a, &short, 30, 0.1).matched);
    }

    #[test]
    fn csv_round_trip_and_plot_data() {
        let vals: Vec<f64> = (1..=50).map(|k| (-1f64).powi(k) * 0.1f64.powf(k as f64 / 7.0) / 3.0).collect();
        let r = EigenReport::from_values(&vals);
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &r).unwrap();
        let back = read_spectrum_csv(buf.as_slice()).unwrap();
        assert_eq!(back.positive, r.positive);
        assert_eq!(back.negative, r.negative);
        let plot = weyl_plot_data(&harmonic(1.0, 20), Sign::Plus);
        for line in plot.lines() {
            let y: f64 = line.split(' ').nth(1).unwrap().parse().unwrap();
            assert!((y - 1.0).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn counting_is_a_staircase(mut vals in prop::collection::vec(0.001f64..10.0, 1..60), lambda in 0.001f64..10.0) {
            let r = EigenReport::from_values(&vals);
            vals.sort_by(|a, b| b.total_cmp(a));
            let c = counting(&r, lambda, Sign::Plus).unwrap();
            prop_assert_eq!(c, vals.iter().filter(|v| **v > lambda).count());
            if c > 0 { prop_assert!(vals[c - 1] > lambda); }
            if c < vals.len() { prop_assert!(vals[c] <= lambda); }
            prop_assert!(counting(&r, lambda * 1.1, Sign::Plus).unwrap() <= c);
        }

        #[test]
        fn permutation_invariance(entries in prop::collection::vec(-1.0f64..1.0, 64), seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let n = 8;
            let m = Mat::from_fn(n, n, |i, j| entries[i.max(j) * n + i.min(j)]);
            let op = AssembledOperator::from_real(m, Route::Logkernel).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = eigen_spectrum(&op).unwrap();
            let b = eigen_spectrum(&op.permuted(&perm)).unwrap();
            prop_assert_eq!(a.positive.len(), b.positive.len());
            for (x, y) in a.positive.iter().zip(&b.positive).chain(a.negative.iter().zip(&b.negative)) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
        }

        #[test]
        fn harmonic_bounds_window_independent(c in 0.1f64..10.0, a in 1usize..100, w in 0usize..300) {
            let r = harmonic(c, 500);
            let (lo, hi) = order_bounds(&r, Sign::Plus, (a, a + w)).unwrap();
            prop_assert!((lo - c).abs() <= 1e-12 * c && (hi - c).abs() <= 1e-12 * c);
        }
    }
}
