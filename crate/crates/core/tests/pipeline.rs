//! Measures → operators → spectra, checked against structural identities.

mod common;

use singspec::measures::{builtin_measure, read_measure, write_measure, ScenarioParams, SignedDensity};
use singspec::operators::{
    assemble_fourier_bs, assemble_log_kernel, assemble_log_potential, assemble_steklov_circle, DiagonalRule,
    KernelChoice, LogKernelSpec, OperatorMatrix, ZeroMode, DEFAULT_MATRIX_BUDGET,
};
use singspec::orlicz::{luxemburg_norm, Young};
use singspec::spectral::{counting, eigen_spectrum, weyl_plateau, Sign, DEFAULT_WINDOW};

fn circle(atoms: usize) -> (singspec::measures::PointCloudMeasure, SignedDensity) {
    builtin_measure("circle", &ScenarioParams::from_pairs(&[("atoms", atoms as f64)])).unwrap()
}

#[test]
fn every_route_is_hermitian() {
    let (m, v) = builtin_measure("half_signed_circle", &ScenarioParams::from_pairs(&[("atoms", 200.0)])).unwrap();
    let ops = [
        assemble_fourier_bs(&m, &v, 8.0, 6, DEFAULT_MATRIX_BUDGET).unwrap(),
        assemble_log_kernel(&m, &v, &LogKernelSpec::bessel(), DEFAULT_MATRIX_BUDGET).unwrap(),
        assemble_steklov_circle(&m, &v, 30, ZeroMode::Shift, DEFAULT_MATRIX_BUDGET).unwrap(),
        assemble_log_potential(&m, &SignedDensity::constant(200, 1.0), DiagonalRule::CellAverage, DEFAULT_MATRIX_BUDGET)
            .unwrap(),
    ];
    for op in &ops {
        let scale = op.frobenius_norm();
        assert!(op.hermitian_defect() <= 1e-10 * scale, "{:?}", op.metadata.route);
    }
}

#[test]
fn fourier_route_is_positive_semidefinite() {
    let (m, v) = circle(300);
    let op = assemble_fourier_bs(&m, &v, 8.0, 8, DEFAULT_MATRIX_BUDGET).unwrap();
    let OperatorMatrix::Complex(mat) = &op.matrix else { panic!() };
    let eig = mat.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    let max = eig.iter().copied().fold(0.0, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min >= -1e-10 * max, "min {min:e}, max {max:e}");
}

#[test]
fn log_potential_is_negated_unit_log_kernel() {
    let (m, _) = circle(150);
    let v = SignedDensity::new((0..150).map(|i| 1.0 + (i as f64 * 0.1).sin().abs()).collect()).unwrap();
    let unit = LogKernelSpec::pure_log(2).unwrap().with_coefficient(1.0);
    let a = assemble_log_kernel(&m, &v, &unit, DEFAULT_MATRIX_BUDGET).unwrap();
    let b = assemble_log_potential(&m, &v, DiagonalRule::CellAverage, DEFAULT_MATRIX_BUDGET).unwrap();
    let (OperatorMatrix::Real(a), OperatorMatrix::Real(b)) = (&a.matrix, &b.matrix) else { panic!() };
    for i in 0..150 {
        for j in 0..150 {
            assert!((a[(i, j)] + b[(i, j)]).abs() <= 1e-14 * a[(i, j)].abs().max(1.0));
        }
    }
}

#[test]
fn bessel_and_pure_log_share_the_plateau() {
    let (m, v) = circle(800);
    let plateau = |spec: &LogKernelSpec| {
        let op = assemble_log_kernel(&m, &v, spec, DEFAULT_MATRIX_BUDGET).unwrap();
        weyl_plateau(&eigen_spectrum(&op).unwrap(), Sign::Plus, DEFAULT_WINDOW).unwrap().plateau
    };
    let a = plateau(&LogKernelSpec::bessel());
    let b = plateau(&LogKernelSpec::pure_log(2).unwrap());
    assert!((a - b).abs() <= 0.02 * b, "{a} vs {b}");
    // and both sit near the analytic value
    let exact = common::median_k_lambda(&common::circle_log_eigenvalues(800), 40, 200);
    assert!((b - exact).abs() <= 0.05 * exact, "{b} vs {exact}");
}

#[test]
fn positive_counting_follows_the_positive_part() {
    let (m, v) = builtin_measure("half_signed_circle", &ScenarioParams::from_pairs(&[("atoms", 600.0)])).unwrap();
    let spec = LogKernelSpec::bessel();
    let mixed = eigen_spectrum(&assemble_log_kernel(&m, &v, &spec, DEFAULT_MATRIX_BUDGET).unwrap()).unwrap();
    let plus = eigen_spectrum(&assemble_log_kernel(&m, &v.positive_part(), &spec, DEFAULT_MATRIX_BUDGET).unwrap()).unwrap();
    let n = plus.positive.len();
    for f in [0.05, 0.1, 0.15, 0.25] {
        let lambda = plus.positive[(f * n as f64) as usize];
        let a = counting(&mixed, lambda, Sign::Plus).unwrap() as f64;
        let b = counting(&plus, lambda, Sign::Plus).unwrap() as f64;
        assert!((a - b).abs() <= 0.10 * b, "λ = {lambda}: {a} vs {b}");
    }
}

#[test]
fn top_eigenvalue_over_norm_is_refinement_stable() {
    let ratios: Vec<f64> = [250, 500, 1000, 2000]
        .iter()
        .map(|&atoms| {
            let (m, v) = circle(atoms);
            let op = assemble_log_kernel(&m, &v, &LogKernelSpec::bessel(), DEFAULT_MATRIX_BUDGET).unwrap();
            let top = eigen_spectrum(&op).unwrap().positive[0];
            top / luxemburg_norm(&v, &m, Young::Psi).unwrap().value
        })
        .collect();
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(max / min <= 2.0, "{ratios:?}");
}

#[test]
fn catalog_measures_round_trip_through_files() {
    for (name, params) in [
        ("circle_plus_square", vec![("atoms", 50.0), ("square_cells", 8.0)]),
        ("cantor_line", vec![("depth", 5.0)]),
        ("half_signed_circle", vec![("atoms", 31.0)]),
    ] {
        let (m, v) = builtin_measure(name, &ScenarioParams::from_pairs(&params)).unwrap();
        let mut buf = Vec::new();
        write_measure(&mut buf, &m, Some(&v)).unwrap();
        let (back, density) = read_measure(buf.as_slice()).unwrap();
        assert_eq!(back.positions(), m.positions(), "{name}");
        assert_eq!(back.weights(), m.weights(), "{name}");
        assert_eq!(density.unwrap().values(), v.values(), "{name}");
        assert_eq!(back.components().len(), m.components().len(), "{name}");
    }
}

#[test]
fn kernel_choice_is_recorded() {
    let (m, v) = circle(40);
    let op = assemble_log_kernel(&m, &v, &LogKernelSpec::bessel(), 100).unwrap();
    let report = eigen_spectrum(&op).unwrap();
    let meta = report.metadata.unwrap();
    assert_eq!(meta.kernel.unwrap().kernel, KernelChoice::BesselExactN2);
    assert_eq!(meta.measure_fingerprint, m.fingerprint());
}
