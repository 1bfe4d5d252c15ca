//! Dense discretizations of `T = A*PA` and of the related log-kernel,
//! log-potential and Steklov operators.

mod export;
mod fourier;
mod logkernel;
mod steklov;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{PointCloudMeasure, SignedDensity};

pub use export::{read_operator, write_operator, write_operator_sidecar};
pub use fourier::{assemble_fourier_bs, fourier_multiplier};
pub use logkernel::{assemble_log_kernel, assemble_log_potential, diagonal_values};
pub use steklov::assemble_steklov_circle;

/// Largest matrix order any assembler will build unless told otherwise.
pub const DEFAULT_MATRIX_BUDGET: usize = 12_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Fourier,
    Logkernel,
    Logpotential,
    Steklov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    PureLog,
    BesselExactN2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalRule {
    CellAverage,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroMode {
    Drop,
    Shift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogKernelSpec {
    pub kernel: KernelChoice,
    pub log_coefficient: f64,
    pub diagonal_rule: DiagonalRule,
    /// Multiplies the nearest-neighbour cell size in the cell-average rule.
    #[serde(default = "unit_scale")]
    pub cell_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl LogKernelSpec {
    /// `c_log·(−log r)` with `c_log = ω_{N−1}/(2π)^N`.
    pub fn pure_log(n: usize) -> Result<Self> {
        let c = crate::coeffs::sphere_area(n)? / (2.0 * std::f64::consts::PI).powi(n as i32);
        Ok(Self {
            kernel: KernelChoice::PureLog,
            log_coefficient: c,
            diagonal_rule: DiagonalRule::CellAverage,
            cell_scale: 1.0,
        })
    }

    /// `K₀(r)/(2π)`, the kernel of `(1−Δ)^{−1}` in the plane.
    pub fn bessel() -> Self {
        Self {
            kernel: KernelChoice::BesselExactN2,
            log_coefficient: 1.0 / (2.0 * std::f64::consts::PI),
            diagonal_rule: DiagonalRule::CellAverage,
            cell_scale: 1.0,
        }
    }

    pub fn with_diagonal(mut self, rule: DiagonalRule) -> Self {
        self.diagonal_rule = rule;
        self
    }

    pub fn with_coefficient(mut self, c: f64) -> Self {
        self.log_coefficient = c;
        self
    }

    pub fn with_cell_scale(mut self, scale: f64) -> Self {
        self.cell_scale = scale;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorMetadata {
    pub route: Route,
    pub size: usize,
    pub torus_period: Option<f64>,
    pub cutoff: Option<usize>,
    pub kernel: Option<LogKernelSpec>,
    pub zero_mode: Option<ZeroMode>,
    /// True when the matrix is `S^{1/2}ΣS^{1/2}` for a sign-changing `V`.
    pub sign_framed: bool,
    /// Most negative eigenvalue of `S` clipped while forming `S^{1/2}`.
    pub clipped_eigenvalue: Option<f64>,
    pub measure_fingerprint: String,
}

#[derive(Debug, Clone)]
pub enum OperatorMatrix {
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

#[derive(Debug, Clone)]
pub struct AssembledOperator {
    pub matrix: OperatorMatrix,
    pub metadata: OperatorMetadata,
}

impl AssembledOperator {
    pub fn size(&self) -> usize {
        match &self.matrix {
            OperatorMatrix::Real(m) => m.nrows(),
            OperatorMatrix::Complex(m) => m.nrows(),
        }
    }

    /// `max |M − M*|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.size();
        let mut worst: f64 = 0.0;
        match &self.matrix {
            OperatorMatrix::Real(m) => {
                for j in 0..n {
                    for i in j + 1..n {
                        worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
                    }
                }
            }
            OperatorMatrix::Complex(m) => {
                for j in 0..n {
                    for i in j..n {
                        worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
            }
        }
        worst
    }

    /// Frobenius norm, an upper bound for the operator norm.
    pub fn frobenius_norm(&self) -> f64 {
        match &self.matrix {
            OperatorMatrix::Real(m) => m.norm_l2(),
            OperatorMatrix::Complex(m) => m.norm_l2(),
        }
    }

    pub fn trace(&self) -> f64 {
        let n = self.size();
        match &self.matrix {
            OperatorMatrix::Real(m) => (0..n).map(|i| m[(i, i)]).sum(),
            OperatorMatrix::Complex(m) => (0..n).map(|i| m[(i, i)].re).sum(),
        }
    }

    /// Conjugation by the permutation `P e_i = e_{perm[i]}`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.size();
        assert_eq!(perm.len(), n);
        let matrix = match &self.matrix {
            OperatorMatrix::Real(m) => OperatorMatrix::Real(Mat::from_fn(n, n, |i, j| m[(perm[i], perm[j])])),
            OperatorMatrix::Complex(m) => OperatorMatrix::Complex(Mat::from_fn(n, n, |i, j| m[(perm[i], perm[j])])),
        };
        Self {
            matrix,
            metadata: self.metadata.clone(),
        }
    }

    /// Wraps an explicit real symmetric matrix, mostly for tests and tools.
    pub fn from_real(matrix: Mat<f64>, route: Route) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::InvalidParameter {
                param: "matrix".into(),
                reason: "must be square and nonempty".into(),
            });
        }
        let op = Self {
            matrix: OperatorMatrix::Real(matrix),
            metadata: OperatorMetadata {
                route,
                size: n,
                torus_period: None,
                cutoff: None,
                kernel: None,
                zero_mode: None,
                sign_framed: false,
                clipped_eigenvalue: None,
                measure_fingerprint: String::new(),
            },
        };
        check_hermitian(&op)?;
        Ok(op)
    }
}

fn check_budget(requested: usize, budget: usize) -> Result<()> {
    if requested > budget {
        return Err(Error::MatrixBudget { requested, budget });
    }
    Ok(())
}

fn check_density(measure: &PointCloudMeasure, v: &SignedDensity) -> Result<()> {
    if measure.len() != v.len() {
        return Err(Error::DensityLength {
            expected: measure.len(),
            got: v.len(),
        });
    }
    Ok(())
}

fn check_hermitian(op: &AssembledOperator) -> Result<()> {
    let scale = op.frobenius_norm().max(1.0);
    let defect = op.hermitian_defect();
    if !(defect <= 1e-10 * scale) {
        return Err(Error::InvalidParameter {
            param: "matrix".into(),
            reason: format!("not self-adjoint (defect {defect:e})"),
        });
    }
    Ok(())
}
