//! Asymptotic coefficients: sphere areas, the surface coefficient `Z(d, 𝔡)`,
//! the absolutely continuous coefficient `ϖ_N`, the fiber symbol `r_{−d}`,
//! the density `ρ` and predicted traces.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{Frame, PointCloudMeasure, SignedDensity};
use crate::special::{beta, gamma, integrate, integrate_sphere};

const GRAM_TOLERANCE: f64 = 1e-8;
const FIBER_TOLERANCE: f64 = 1e-9;
const PCA_NEIGHBOURS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMode {
    Printed,
    Calibrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    SurfaceZ,
    AcVarpi,
    RhoIntegral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticCoefficient {
    pub d: f64,
    pub codim: f64,
    pub value: f64,
    pub mode: CoefficientMode,
    pub kind: CoefficientKind,
}

/// `ω_{n−1} = 2π^{n/2}/Γ(n/2)`, the area of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::NonpositiveDimension(0.0));
    }
    let h = n as f64 / 2.0;
    Ok(2.0 * PI.powf(h) / gamma(h))
}

/// `ϖ_N = ω_{N−1}/(N(2π)^N)`.
pub fn weyl_ac_coefficient(n: usize) -> Result<AsymptoticCoefficient> {
    let value = sphere_area(n)? / (n as f64 * (2.0 * PI).powi(n as i32));
    Ok(AsymptoticCoefficient {
        d: n as f64,
        codim: 0.0,
        value,
        mode: CoefficientMode::Calibrated,
        kind: CoefficientKind::AcVarpi,
    })
}

/// `Z(d, 𝔡) = ω_{𝔡−1} ω_{d−1} B(d/2, 𝔡/2) / (2d(2π)^p)` with `p = 𝔡`
/// (printed) or `p = d + 𝔡` (calibrated).
pub fn weyl_surface_coefficient(
    d: usize,
    codim: usize,
    mode: CoefficientMode,
) -> Result<AsymptoticCoefficient> {
    if d == 0 || codim == 0 {
        return Err(Error::NonpositiveDimension(d.min(codim) as f64));
    }
    let power = match mode {
        CoefficientMode::Printed => codim,
        CoefficientMode::Calibrated => d + codim,
    };
    let df = d as f64;
    let value = sphere_area(codim)? * sphere_area(d)? * beta(df / 2.0, codim as f64 / 2.0)
        / (2.0 * df * (2.0 * PI).powi(power as i32));
    Ok(AsymptoticCoefficient {
        d: df,
        codim: codim as f64,
        value,
        mode,
        kind: CoefficientKind::SurfaceZ,
    })
}

/// Coefficient used for a component of integer dimension `d` in `R^N`:
/// `ϖ_N` when `d = N` (in both modes), `Z(d, N−d)` otherwise.
pub fn component_coefficient(d: usize, n: usize, mode: CoefficientMode) -> Result<f64> {
    if d == n {
        Ok(weyl_ac_coefficient(n)?.value)
    } else {
        Ok(weyl_surface_coefficient(d, n - d, mode)?.value)
    }
}

pub type SymbolFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Principal symbol `a_{−l}(X, Ξ)` of order `−l = −N/2`.
#[derive(Clone)]
pub struct SymbolDescriptor {
    pub ambient_dim: usize,
    pub order: f64,
    pub evaluate: SymbolFn,
    pub flagship: bool,
}

impl fmt::Debug for SymbolDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolDescriptor")
            .field("ambient_dim", &self.ambient_dim)
            .field("order", &self.order)
            .field("flagship", &self.flagship)
            .finish_non_exhaustive()
    }
}

impl SymbolDescriptor {
    /// `|Ξ|^{−N/2}`.
    pub fn flagship(n: usize) -> Self {
        let l = n as f64 / 2.0;
        Self {
            ambient_dim: n,
            order: -l,
            evaluate: Arc::new(move |_, xi| xi.iter().map(|v| v * v).sum::<f64>().powf(-l / 2.0)),
            flagship: true,
        }
    }

    pub fn new(n: usize, f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            ambient_dim: n,
            order: -(n as f64) / 2.0,
            evaluate: Arc::new(f),
            flagship: false,
        }
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        (self.evaluate)(x, xi)
    }

    /// Largest relative violation of `a(X, 2Ξ) = 2^{−l} a(X, Ξ)` over random
    /// samples in the unit cube.
    pub fn homogeneity_defect(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.ambient_dim;
        let factor = 2f64.powf(self.order);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let xi: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let xi2: Vec<f64> = xi.iter().map(|v| 2.0 * v).collect();
            let a = self.eval(&x, &xi);
            let b = self.eval(&x, &xi2);
            if a != 0.0 {
                worst = worst.max((b - factor * a).abs() / (factor * a).abs());
            }
        }
        worst
    }
}

fn check_basis(tangent: &[Vec<f64>], normal: &[Vec<f64>], n: usize) -> Result<()> {
    let all: Vec<&Vec<f64>> = tangent.iter().chain(normal).collect();
    if all.len() != n || all.iter().any(|v| v.len() != n) {
        return Err(Error::InvalidParameter {
            param: "basis".into(),
            reason: format!("need {n} vectors of length {n}"),
        });
    }
    let mut worst: f64 = 0.0;
    for (i, a) in all.iter().enumerate() {
        for (j, b) in all.iter().enumerate() {
            let dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
            worst = worst.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    if worst > GRAM_TOLERANCE {
        return Err(Error::NotOrthonormal(worst));
    }
    Ok(())
}

fn combine(tangent: &[Vec<f64>], normal: &[Vec<f64>], xi: &[f64], eta: &[f64], n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for (c, b) in xi.iter().zip(tangent).chain(eta.iter().zip(normal)) {
        v.iter_mut().zip(b).for_each(|(a, e)| *a += c * e);
    }
    v
}

/// `r_{−d}(X, ξ) = (2π)^{−𝔡} ∫_{N_X} |a_{−l}(X, ξ + η)|² dη`, in polar
/// coordinates on the normal space with `ρ = |ξ|·s/(1−s)`.
pub fn fiber_symbol_r(
    symbol: &SymbolDescriptor,
    x: &[f64],
    tangent: &[Vec<f64>],
    normal: &[Vec<f64>],
    xi: &[f64],
) -> Result<f64> {
    let n = symbol.ambient_dim;
    check_basis(tangent, normal, n)?;
    let codim = normal.len();
    if codim == 0 {
        return Err(Error::NonpositiveDimension(0.0));
    }
    let scale = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if scale == 0.0 || xi.len() != tangent.len() {
        return Err(Error::InvalidParameter {
            param: "xi".into(),
            reason: "must be a nonzero tangent vector".into(),
        });
    }
    let radial = |omega: &[f64]| -> Result<f64> {
        integrate(
            |s| {
                if s >= 1.0 {
                    return 0.0;
                }
                let rho = scale * s / (1.0 - s);
                let eta: Vec<f64> = omega.iter().map(|o| rho * o).collect();
                let a = symbol.eval(x, &combine(tangent, normal, xi, &eta, n));
                a * a * rho.powi(codim as i32 - 1) * scale / ((1.0 - s) * (1.0 - s))
            },
            0.0,
            1.0,
            FIBER_TOLERANCE,
            0.0,
        )
    };
    let failure = std::cell::RefCell::new(None);
    let total = integrate_sphere(
        codim,
        |omega| match radial(omega) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        FIBER_TOLERANCE,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(total? / (2.0 * PI).powi(codim as i32))
}

/// `ρ(X) = ∫_{|ξ|=1} r_{−d}(X, ξ) dξ` over the unit cosphere of the tangent space.
pub fn rho_density(
    symbol: &SymbolDescriptor,
    x: &[f64],
    tangent: &[Vec<f64>],
    normal: &[Vec<f64>],
) -> Result<f64> {
    let d = tangent.len();
    if d == 0 {
        return Err(Error::NonpositiveDimension(0.0));
    }
    let failure = std::cell::RefCell::new(None);
    let total = integrate_sphere(
        d,
        |omega| match fiber_symbol_r(symbol, x, tangent, normal, omega) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        FIBER_TOLERANCE,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    total
}

/// Tangent frame at atom `i` from the covariance of its nearest neighbours.
pub fn estimate_frame(measure: &PointCloudMeasure, i: usize, d: usize) -> Result<Frame> {
    let n = measure.ambient_dim();
    let p = measure.position(i);
    let mut near: Vec<(f64, usize)> = (0..measure.len())
        .filter(|&j| j != i)
        .map(|j| {
            let q = measure.position(j);
            (p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), j)
        })
        .collect();
    let k = PCA_NEIGHBOURS.min(near.len());
    if k < d {
        return Err(Error::InvalidMeasure("too few atoms to estimate a tangent space".into()));
    }
    near.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
    near.truncate(k);
    let mut mean = vec![0.0; n];
    for &(_, j) in &near {
        mean.iter_mut().zip(measure.position(j)).for_each(|(m, q)| *m += q / k as f64);
    }
    let cov = Mat::<f64>::from_fn(n, n, |a, b| {
        near.iter()
            .map(|&(_, j)| {
                let q = measure.position(j);
                (q[a] - mean[a]) * (q[b] - mean[b])
            })
            .sum()
    });
    let evd = cov
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let u = evd.U();
    // eigenvalues ascend: the last d columns span the tangent space
    let col = |c: usize| (0..n).map(|r| u[(r, c)]).collect::<Vec<f64>>();
    Ok(Frame {
        tangent: (n - d..n).rev().map(col).collect(),
        normal: (0..n - d).map(col).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentPrediction {
    pub label: String,
    pub nominal_dim: f64,
    pub coefficient: f64,
    pub mass_plus: f64,
    pub mass_minus: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictedTrace {
    pub mode: CoefficientMode,
    pub a_plus: f64,
    pub a_minus: f64,
    pub residue: f64,
    pub components: Vec<ComponentPrediction>,
    /// True when some tangent frame had to be estimated from the point cloud.
    pub approximate_frames: bool,
}

fn integer_dim(d: f64) -> Result<usize> {
    if d.fract() != 0.0 || d < 1.0 {
        return Err(Error::PredictionUnavailable(d));
    }
    Ok(d as usize)
}

/// `A_± = Σ_components coeff(d_c) · ∫_c V_± dμ`.
///
/// For the flagship symbol the coefficient is the closed form; otherwise
/// each atom contributes `ρ(Xᵢ)/(d(2π)^d)` (calibrated) or `ρ(Xᵢ)/d`
/// (printed). Full-dimensional components use `∫_{S^{N−1}}|a|²/(N(2π)^N)`.
pub fn predicted_trace(
    measure: &PointCloudMeasure,
    v: &SignedDensity,
    symbol: &SymbolDescriptor,
    mode: CoefficientMode,
) -> Result<PredictedTrace> {
    if v.len() != measure.len() {
        return Err(Error::DensityLength {
            expected: measure.len(),
            got: v.len(),
        });
    }
    let n = measure.ambient_dim();
    if symbol.ambient_dim != n {
        return Err(Error::AmbientMismatch(symbol.ambient_dim, n));
    }
    let mut approximate_frames = false;
    let mut components = Vec::new();
    let (mut a_plus, mut a_minus) = (0.0, 0.0);
    for c in measure.components() {
        let d = integer_dim(c.nominal_dim)?;
        if d > n {
            return Err(Error::DimensionExceedsAmbient {
                dim: c.nominal_dim,
                ambient: n,
            });
        }
        let mut mass_plus = 0.0;
        let mut mass_minus = 0.0;
        let mut weighted_plus = 0.0;
        let mut weighted_minus = 0.0;
        let flagship_coeff = component_coefficient(d, n, mode)?;
        for i in c.range.clone() {
            let w = measure.weight(i);
            let vi = v.values()[i];
            let (p, m) = (w * vi.max(0.0), w * (-vi).max(0.0));
            mass_plus += p;
            mass_minus += m;
            let coeff = if symbol.flagship || (p == 0.0 && m == 0.0) {
                flagship_coeff
            } else {
                let x = measure.position(i);
                let rho_scaled = if d == n {
                    let avg = integrate_sphere(n, |w| symbol.eval(x, w).powi(2), FIBER_TOLERANCE)?;
                    avg / (n as f64 * (2.0 * PI).powi(n as i32))
                } else {
                    let frame = match measure.frames() {
                        Some(f) => f[i].clone(),
                        None => {
                            approximate_frames = true;
                            estimate_frame(measure, i, d)?
                        }
                    };
                    rho_density(symbol, x, &frame.tangent, &frame.normal)?
                        / (d as f64 * (2.0 * PI).powi(d as i32))
                };
                match mode {
                    CoefficientMode::Printed if d < n => rho_scaled * (2.0 * PI).powi(d as i32),
                    _ => rho_scaled,
                }
            };
            weighted_plus += coeff * p;
            weighted_minus += coeff * m;
        }
        a_plus += weighted_plus;
        a_minus += weighted_minus;
        components.push(ComponentPrediction {
            label: c.label.clone(),
            nominal_dim: c.nominal_dim,
            coefficient: if mass_plus + mass_minus > 0.0 {
                (weighted_plus + weighted_minus) / (mass_plus + mass_minus)
            } else {
                flagship_coeff
            },
            mass_plus,
            mass_minus,
        });
    }
    Ok(PredictedTrace {
        mode,
        a_plus,
        a_minus,
        residue: a_plus - a_minus,
        components,
        approximate_frames,
    })
}

/// CSV table `d,codim,printed,calibrated` for `d, 𝔡 ≥ 1`, `d + 𝔡 ≤ max_n`.
pub fn coefficient_table_csv(max_n: usize) -> Result<String> {
    let mut out = String::from("d,codim,printed,calibrated\n");
    for n in 2..=max_n {
        for d in 1..n {
            let p = weyl_surface_coefficient(d, n - d, CoefficientMode::Printed)?.value;
            let c = weyl_surface_coefficient(d, n - d, CoefficientMode::Calibrated)?.value;
            writeln!(out, "{d},{},{p},{c}", n - d).expect("writing to a String");
        }
    }
    Ok(out)
}
