use faer::{Mat, Side};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{nearest_neighbor_distances, PointCloudMeasure, SignedDensity};
use crate::special::{bessel_k0, EULER_GAMMA};

use super::{
    check_budget, check_density, AssembledOperator, DiagonalRule, KernelChoice, LogKernelSpec,
    OperatorMatrix, OperatorMetadata, Route,
};

fn coincident_pair(measure: &PointCloudMeasure, i: usize) -> Error {
    let p = measure.position(i);
    let j = (0..measure.len())
        .find(|&j| j != i && measure.position(j) == p)
        .unwrap_or(i);
    Error::CoincidentAtoms(i.min(j), i.max(j))
}

/// Self-interaction values `k_ii` for the given rule.
///
/// The cell-average rule uses the mean of `−log|x|` over a `d`-ball of
/// radius `δᵢ/2`, which is `1/d − log(δᵢ/2)`, with `δᵢ` the nearest-neighbour
/// distance and `d` the nominal dimension of the atom's component. The
/// Bessel kernel adds its smooth part `log 2 − γ` at the origin.
pub fn diagonal_values(measure: &PointCloudMeasure, spec: &LogKernelSpec) -> Result<Vec<f64>> {
    let n = measure.len();
    if spec.diagonal_rule == DiagonalRule::Zero {
        return Ok(vec![0.0; n]);
    }
    if n < 2 {
        return Err(Error::InvalidMeasure(
            "the cell-average diagonal needs at least two atoms".into(),
        ));
    }
    let nn = nearest_neighbor_distances(measure);
    let dims = measure.atom_dims();
    let offset = match spec.kernel {
        KernelChoice::PureLog => 0.0,
        KernelChoice::BesselExactN2 => std::f64::consts::LN_2 - EULER_GAMMA,
    };
    nn.iter()
        .zip(&dims)
        .enumerate()
        .map(|(i, (&delta, &d))| {
            if delta == 0.0 {
                return Err(coincident_pair(measure, i));
            }
            Ok(spec.log_coefficient * (1.0 / d - (spec.cell_scale * delta / 2.0).ln() + offset))
        })
        .collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn symmetric_matrix(n: usize, entry: impl Fn(usize, usize) -> f64 + Sync) -> Mat<f64> {
    let lower: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..=i).map(|j| entry(i, j)).collect())
        .collect();
    Mat::from_fn(n, n, |i, j| if j <= i { lower[i][j] } else { lower[j][i] })
}

fn metadata(route: Route, size: usize, spec: Option<LogKernelSpec>, measure: &PointCloudMeasure) -> OperatorMetadata {
    OperatorMetadata {
        route,
        size,
        torus_period: None,
        cutoff: None,
        kernel: spec,
        zero_mode: None,
        sign_framed: false,
        clipped_eigenvalue: None,
        measure_fingerprint: measure.fingerprint(),
    }
}

/// Nyström matrix of `KK*`: `S_ij = √Dᵢ k(Xᵢ, Xⱼ) √Dⱼ` with `D = w|V|`,
/// returned as `S` when `V ≥ 0` and as `S^{1/2} Σ S^{1/2}`,
/// `Σ = diag(sgn V)`, otherwise.
pub fn assemble_log_kernel(
    measure: &PointCloudMeasure,
    v: &SignedDensity,
    spec: &LogKernelSpec,
    budget: usize,
) -> Result<AssembledOperator> {
    check_density(measure, v)?;
    let n = measure.len();
    check_budget(n, budget)?;
    if !(spec.log_coefficient > 0.0) {
        return Err(Error::InvalidParameter {
            param: "log_coefficient".into(),
            reason: format!("must be positive, got {}", spec.log_coefficient),
        });
    }
    if spec.kernel == KernelChoice::BesselExactN2 && measure.ambient_dim() != 2 {
        return Err(Error::KernelDimension {
            kernel: "bessel_exact_N2",
            required: 2,
            got: measure.ambient_dim(),
        });
    }
    let diag = diagonal_values(measure, spec)?;
    let root: Vec<f64> = (0..n)
        .map(|i| (measure.weight(i) * v.values()[i].abs()).sqrt())
        .collect();
    let c = spec.log_coefficient;
    let kernel = |r: f64| match spec.kernel {
        KernelChoice::PureLog => -c * r.ln(),
        KernelChoice::BesselExactN2 => bessel_k0(r) / (2.0 * std::f64::consts::PI),
    };
    let coincident = std::sync::atomic::AtomicUsize::new(usize::MAX);
    let s = symmetric_matrix(n, |i, j| {
        if i == j {
            return root[i] * diag[i] * root[i];
        }
        let r = dist(measure.position(i), measure.position(j));
        if r == 0.0 {
            coincident.store(i, std::sync::atomic::Ordering::Relaxed);
            return 0.0;
        }
        root[i] * kernel(r) * root[j]
    });
    let bad = coincident.into_inner();
    if bad != usize::MAX {
        return Err(coincident_pair(measure, bad));
    }
    let mut meta = metadata(Route::Logkernel, n, Some(*spec), measure);
    if v.is_nonnegative() {
        return Ok(AssembledOperator {
            matrix: OperatorMatrix::Real(s),
            metadata: meta,
        });
    }

    // S^{1/2} from the eigendecomposition, negative eigenvalues clipped
    let evd = s
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let u = evd.U();
    let lambda = evd.S().column_vector();
    let most_negative = (0..n).map(|k| lambda[k]).fold(0.0, f64::min);
    let scaled = Mat::from_fn(n, n, |i, k| u[(i, k)] * lambda[k].max(0.0).sqrt());
    let half = &scaled * u.transpose();
    let signs: Vec<f64> = v
        .values()
        .iter()
        .map(|&x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 })
        .collect();
    let framed = Mat::from_fn(n, n, |i, j| half[(i, j)] * signs[j]);
    let t = &framed * &half;
    let t = Mat::from_fn(n, n, |i, j| 0.5 * (t[(i, j)] + t[(j, i)]));
    meta.sign_framed = true;
    meta.clipped_eigenvalue = (most_negative < 0.0).then_some(most_negative);
    Ok(AssembledOperator {
        matrix: OperatorMatrix::Real(t),
        metadata: meta,
    })
}

/// `√(wᵢVᵢ) log|Xᵢ−Xⱼ| √(wⱼVⱼ)` for `V ≥ 0`; the diagonal is the negative
/// of the log-kernel diagonal with `c_log = 1`.
pub fn assemble_log_potential(
    measure: &PointCloudMeasure,
    v: &SignedDensity,
    diagonal_rule: DiagonalRule,
    budget: usize,
) -> Result<AssembledOperator> {
    check_density(measure, v)?;
    let n = measure.len();
    check_budget(n, budget)?;
    if let Some(i) = v.values().iter().position(|x| *x < 0.0) {
        return Err(Error::NegativeDensity(i));
    }
    let spec = LogKernelSpec {
        kernel: KernelChoice::PureLog,
        log_coefficient: 1.0,
        diagonal_rule,
        cell_scale: 1.0,
    };
    let diag = diagonal_values(measure, &spec)?;
    let root: Vec<f64> = (0..n).map(|i| (measure.weight(i) * v.values()[i]).sqrt()).collect();
    let coincident = std::sync::atomic::AtomicUsize::new(usize::MAX);
    let m = symmetric_matrix(n, |i, j| {
        if i == j {
            return -root[i] * diag[i] * root[i];
        }
        let r = dist(measure.position(i), measure.position(j));
        if r == 0.0 {
            coincident.store(i, std::sync::atomic::Ordering::Relaxed);
            return 0.0;
        }
        root[i] * r.ln() * root[j]
    });
    let bad = coincident.into_inner();
    if bad != usize::MAX {
        return Err(coincident_pair(measure, bad));
    }
    Ok(AssembledOperator {
        matrix: OperatorMatrix::Real(m),
        metadata: metadata(Route::Logpotential, n, Some(spec), measure),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::DEFAULT_MATRIX_BUDGET;
    use approx::assert_relative_eq;

    fn two_atoms(distance: f64) -> PointCloudMeasure {
        PointCloudMeasure::new(2, vec![0.0, 0.0, distance, 0.0], vec![0.5, 0.5], 1.0, "pair").unwrap()
    }

    fn eigenvalues(op: &AssembledOperator) -> Vec<f64> {
        let OperatorMatrix::Real(m) = &op.matrix else { panic!() };
        let mut e = m.self_adjoint_eigenvalues(Side::Lower).unwrap();
        e.sort_by(f64::total_cmp);
        e
    }

    fn unit_log(rule: DiagonalRule) -> LogKernelSpec {
        LogKernelSpec {
            kernel: KernelChoice::PureLog,
            log_coefficient: 1.0,
            diagonal_rule: rule,
            cell_scale: 1.0,
        }
    }

    #[test]
    fn two_atoms_at_unit_distance() {
        let v = SignedDensity::constant(2, 1.0);
        let spec = LogKernelSpec::pure_log(2).unwrap().with_diagonal(DiagonalRule::Zero);
        let op = assemble_log_kernel(&two_atoms(1.0), &v, &spec, 10).unwrap();
        assert!(eigenvalues(&op).iter().all(|e| e.abs() < 1e-15));
    }

    #[test]
    fn two_atoms_at_inverse_e() {
        let v = SignedDensity::constant(2, 1.0);
        let op = assemble_log_kernel(&two_atoms((-1f64).exp()), &v, &unit_log(DiagonalRule::Zero), 10).unwrap();
        let e = eigenvalues(&op);
        assert_relative_eq!(e[0], -0.5, max_relative = 1e-14);
        assert_relative_eq!(e[1], 0.5, max_relative = 1e-14);
    }

    #[test]
    fn cell_average_diagonal() {
        let m = two_atoms(0.2);
        let d = diagonal_values(&m, &unit_log(DiagonalRule::CellAverage)).unwrap();
        assert_relative_eq!(d[0], 1.0 - (0.1f64).ln(), max_relative = 1e-14);
        // 1-D cell mean of −log|x| over [−h, h]
        let h = 0.1;
        let mean = 2.0 * crate::special::integrate(|x: f64| -x.ln(), 0.0, h, 1e-12, 0.0).unwrap() / (2.0 * h);
        assert_relative_eq!(d[0], mean, max_relative = 1e-8);
        let b = diagonal_values(&m, &LogKernelSpec::bessel()).unwrap();
        let offset = (std::f64::consts::LN_2 - EULER_GAMMA) / (2.0 * std::f64::consts::PI);
        assert_relative_eq!(b[0], d[0] / (2.0 * std::f64::consts::PI) + offset, max_relative = 1e-14);
    }

    #[test]
    fn sign_framing_preserves_nonzero_spectrum() {
        // eigenvalues of S^{1/2}ΣS^{1/2} equal those of ΣS
        let pos = vec![0.0, 0.0, 0.3, 0.1, -0.2, 0.25, 0.1, -0.3];
        let m = PointCloudMeasure::new(2, pos, vec![0.25; 4], 1.0, "four").unwrap();
        let v = SignedDensity::new(vec![1.0, -0.5, 2.0, -1.5]).unwrap();
        let spec = LogKernelSpec::bessel();
        let op = assemble_log_kernel(&m, &v, &spec, 10).unwrap();
        assert!(op.metadata.sign_framed);
        let framed = eigenvalues(&op);
        let plain = assemble_log_kernel(&m, &SignedDensity::new(v.values().iter().map(|x| x.abs()).collect()).unwrap(), &spec, 10).unwrap();
        let OperatorMatrix::Real(s) = &plain.matrix else { panic!() };
        // compare power traces tr((ΣS)^p)
        let sigma: Vec<f64> = v.values().iter().map(|x| x.signum()).collect();
        let ss = Mat::from_fn(4, 4, |i, j| sigma[i] * s[(i, j)]);
        let mut power = ss.clone();
        for p in 1..=4 {
            let tr: f64 = (0..4).map(|i| power[(i, i)]).sum();
            let expect: f64 = framed.iter().map(|e| e.powi(p)).sum();
            assert_relative_eq!(tr, expect, max_relative = 1e-10, epsilon = 1e-14);
            power = &power * &ss;
        }
    }

    #[test]
    fn log_kernel_errors() {
        let m = PointCloudMeasure::new(2, vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0], vec![0.3; 3], 1.0, "dup").unwrap();
        let v = SignedDensity::constant(3, 1.0);
        assert!(matches!(
            assemble_log_kernel(&m, &v, &LogKernelSpec::bessel(), 10),
            Err(Error::CoincidentAtoms(0, 1))
        ));
        assert!(matches!(
            assemble_log_kernel(&m, &v, &LogKernelSpec::bessel().with_diagonal(DiagonalRule::Zero), 10),
            Err(Error::CoincidentAtoms(..))
        ));
        let line = PointCloudMeasure::new(1, vec![0.0, 1.0], vec![0.5; 2], 1.0, "line").unwrap();
        assert!(matches!(
            assemble_log_kernel(&line, &SignedDensity::constant(2, 1.0), &LogKernelSpec::bessel(), 10),
            Err(Error::KernelDimension { .. })
        ));
        assert!(matches!(
            assemble_log_kernel(&line, &SignedDensity::constant(2, 1.0), &LogKernelSpec::pure_log(1).unwrap(), 1),
            Err(Error::MatrixBudget { .. })
        ));
    }

    #[test]
    fn log_potential_basics() {
        let single = PointCloudMeasure::new(2, vec![0.0, 0.0], vec![1.0], 1.0, "atom").unwrap();
        let op = assemble_log_potential(&single, &SignedDensity::constant(1, 2.0), DiagonalRule::Zero, 10).unwrap();
        assert_eq!(op.size(), 1);
        assert_eq!(eigenvalues(&op), vec![0.0]);
        assert!(assemble_log_potential(&single, &SignedDensity::constant(1, 2.0), DiagonalRule::CellAverage, 10).is_err());

        let m = two_atoms(0.3);
        let v = SignedDensity::new(vec![1.0, 3.0]).unwrap();
        let a = eigenvalues(&assemble_log_potential(&m, &v, DiagonalRule::CellAverage, 10).unwrap());
        let b = eigenvalues(&assemble_log_potential(&m, &v.scaled(2.0), DiagonalRule::CellAverage, 10).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(2.0 * x, *y, max_relative = 1e-13);
        }
        assert!(matches!(
            assemble_log_potential(&m, &SignedDensity::new(vec![1.0, -1.0]).unwrap(), DiagonalRule::Zero, 10),
            Err(Error::NegativeDensity(1))
        ));
    }

    #[test]
    fn matrices_are_symmetric() {
        let (m, v) = crate::measures::builtin_measure(
            "half_signed_circle",
            &crate::measures::ScenarioParams::from_pairs(&[("atoms", 60.0)]),
        )
        .unwrap();
        let op = assemble_log_kernel(&m, &v, &LogKernelSpec::bessel(), DEFAULT_MATRIX_BUDGET).unwrap();
        assert!(op.hermitian_defect() <= 1e-15);
    }
}
