//! The Orlicz pair `Ψ(t) = (1+t)log(1+t) − t`, `Φ(t) = eᵗ − 1 − t`,
//! Luxemburg norms and averaged norms of densities on point clouds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{PointCloudMeasure, SignedDensity};

/// Arguments of `Φ` above this are reported as saturated.
pub const PHI_ARGUMENT_CAP: f64 = 700.0;

const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Young {
    Psi,
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YoungFn {
    Psi,
    Phi,
    PsiInverse,
    PhiInverse,
}

// Both series start at t²; the closed forms cancel badly near 0.
fn psi_raw(t: f64) -> f64 {
    if t < 1e-3 {
        let mut term = t * t;
        let mut sum = 0.0;
        for k in 2..12 {
            let kf = k as f64;
            sum += term / (kf * (kf - 1.0)) * if k % 2 == 0 { 1.0 } else { -1.0 };
            term *= t;
        }
        sum
    } else {
        (1.0 + t) * t.ln_1p() - t
    }
}

fn phi_raw(t: f64) -> f64 {
    if t > PHI_ARGUMENT_CAP {
        f64::INFINITY
    } else if t < 1e-3 {
        let mut term = t * t / 2.0;
        let mut sum = 0.0;
        for k in 2..12 {
            sum += term;
            term *= t / (k + 1) as f64;
        }
        sum
    } else {
        t.exp_m1() - t
    }
}

impl Young {
    /// Unchecked evaluation: `Φ` returns `+∞` past the argument cap.
    fn value(self, t: f64) -> f64 {
        match self {
            Young::Psi => psi_raw(t),
            Young::Phi => phi_raw(t),
        }
    }
}

fn invert(f: impl Fn(f64) -> f64, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while f(hi) < y {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..MAX_ITERATIONS {
        if hi - lo <= 0.5e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn young_eval(which: YoungFn, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::NegativeArgument(t));
    }
    Ok(match which {
        YoungFn::Psi => psi_raw(t),
        YoungFn::Phi => {
            if t > PHI_ARGUMENT_CAP {
                return Err(Error::Saturation(t));
            }
            phi_raw(t)
        }
        YoungFn::PsiInverse => invert(psi_raw, t),
        YoungFn::PhiInverse => {
            if t > phi_raw(PHI_ARGUMENT_CAP) {
                return Err(Error::Saturation(t));
            }
            invert(phi_raw, t)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrliczNormResult {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

fn check_len(values: &SignedDensity, measure: &PointCloudMeasure) -> Result<()> {
    if values.len() != measure.len() {
        return Err(Error::DensityLength {
            expected: measure.len(),
            got: values.len(),
        });
    }
    Ok(())
}

/// Root of a function that is decreasing in `x > 0`, by bisection in
/// `log x`. Returns the root and the number of bisection steps.
fn decreasing_root(f: impl Fn(f64) -> f64, start: f64) -> (f64, usize) {
    let (mut lo, mut hi) = (start, start);
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    while f(lo) <= 0.0 {
        lo *= 0.5;
    }
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    (hi, iterations)
}

/// `inf{ς > 0 : Σ wᵢ F(|Vᵢ|/ς) ≤ 1}`.
pub fn luxemburg_norm(
    values: &SignedDensity,
    measure: &PointCloudMeasure,
    which: Young,
) -> Result<OrliczNormResult> {
    check_len(values, measure)?;
    let atoms: Vec<(f64, f64)> = measure
        .weights()
        .iter()
        .zip(values.values())
        .filter(|(w, v)| **w > 0.0 && **v != 0.0)
        .map(|(w, v)| (*w, v.abs()))
        .collect();
    if atoms.is_empty() {
        return Ok(OrliczNormResult {
            value: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    let modular = |s: f64| atoms.iter().map(|(w, v)| w * which.value(v / s)).sum::<f64>();
    let scale = atoms.iter().map(|a| a.1).fold(0.0, f64::max);
    let (value, iterations) = decreasing_root(|s| modular(s) - 1.0, scale);
    Ok(OrliczNormResult {
        value,
        iterations,
        residual: (modular(value) - 1.0).abs(),
    })
}

/// `sup{Σ_{i∈E} wᵢ|Vᵢ|gᵢ : Σ_{i∈E} wᵢ Φ(gᵢ) ≤ μ(E)}`.
///
/// The maximizer is `gᵢ = log(1 + |Vᵢ|/λ)` with `λ` fixed by making the
/// constraint tight; `Φ(log(1+x)) = x − log(1+x)`.
pub fn averaged_norm(
    values: &SignedDensity,
    measure: &PointCloudMeasure,
    subset: &[usize],
) -> Result<f64> {
    check_len(values, measure)?;
    let mut atoms = Vec::with_capacity(subset.len());
    let mut mass = 0.0;
    for &i in subset {
        if i >= measure.len() {
            return Err(Error::InvalidParameter {
                param: "subset".into(),
                reason: format!("atom index {i} out of range"),
            });
        }
        let w = measure.weight(i);
        mass += w;
        let v = values.values()[i].abs();
        if w > 0.0 && v > 0.0 {
            atoms.push((w, v));
        }
    }
    if mass <= 0.0 || atoms.is_empty() {
        return Ok(0.0);
    }
    let constraint = |lambda: f64| {
        atoms
            .iter()
            .map(|(w, v)| {
                let x = v / lambda;
                w * (x - x.ln_1p())
            })
            .sum::<f64>()
            - mass
    };
    let scale = atoms.iter().map(|a| a.1).fold(0.0, f64::max);
    let (lambda, _) = decreasing_root(constraint, scale);
    Ok(atoms.iter().map(|(w, v)| w * v * (v / lambda).ln_1p()).sum())
}

/// [`averaged_norm`] over every atom.
pub fn averaged_norm_full(values: &SignedDensity, measure: &PointCloudMeasure) -> Result<f64> {
    let all: Vec<usize> = (0..measure.len()).collect();
    averaged_norm(values, measure, &all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn probability(n: usize) -> PointCloudMeasure {
        let pos = (0..n).map(|i| i as f64).collect();
        PointCloudMeasure::new(1, pos, vec![1.0 / n as f64; n], 1.0, "uniform").unwrap()
    }

    fn bisect_increasing(f: impl Fn(f64) -> f64, y: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < y {
                lo = mid
            } else {
                hi = mid
            }
        }
        lo
    }

    #[test]
    fn young_values() {
        assert_eq!(young_eval(YoungFn::Psi, 0.0).unwrap(), 0.0);
        assert_eq!(young_eval(YoungFn::Phi, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            young_eval(YoungFn::Phi, 1.0).unwrap(),
            std::f64::consts::E - 2.0,
            max_relative = 1e-15
        );
        let root = bisect_increasing(|t| (1.0 + t) * (1.0 + t).ln() - t, 1.0);
        let got = young_eval(YoungFn::PsiInverse, 1.0).unwrap();
        assert!((got - root).abs() <= 1e-12);
        let psi_at = young_eval(YoungFn::Psi, got).unwrap();
        assert!((psi_at - 1.0).abs() < 1e-11);
    }

    #[test]
    fn young_small_arguments_are_accurate() {
        for t in [1e-12, 1e-8, 1e-5, 9.9e-4, 1.1e-3] {
            assert_relative_eq!(psi_raw(t), t * t / 2.0 - t.powi(3) / 6.0 + t.powi(4) / 12.0, max_relative = 1e-12);
            assert_relative_eq!(phi_raw(t), t * t / 2.0 + t.powi(3) / 6.0 + t.powi(4) / 24.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn young_errors() {
        assert!(matches!(young_eval(YoungFn::Psi, -1.0), Err(Error::NegativeArgument(_))));
        assert!(matches!(young_eval(YoungFn::Phi, 701.0), Err(Error::Saturation(_))));
        assert!(young_eval(YoungFn::Phi, f64::NAN).is_err());
    }

    #[test]
    fn young_pair_is_convex_and_increasing() {
        for f in [psi_raw, phi_raw] {
            let grid: Vec<f64> = (0..400).map(|i| i as f64 * 0.05).collect();
            for w in grid.windows(3) {
                let (a, b, c) = (f(w[0]), f(w[1]), f(w[2]));
                assert!(b > a && c > b);
                assert!(a + c - 2.0 * b >= -1e-12);
            }
        }
    }

    #[test]
    fn luxemburg_examples() {
        let m = probability(10);
        let zero = SignedDensity::constant(10, 0.0);
        assert_eq!(luxemburg_norm(&zero, &m, Young::Psi).unwrap().value, 0.0);
        let c = 3.0;
        let v = SignedDensity::constant(10, c);
        let t_star = bisect_increasing(psi_raw, 1.0);
        let r = luxemburg_norm(&v, &m, Young::Psi).unwrap();
        assert_relative_eq!(r.value, c / t_star, max_relative = 1e-11);
        assert!(r.residual <= 1e-10);
        let t_phi = bisect_increasing(phi_raw, 1.0);
        let r = luxemburg_norm(&v, &m, Young::Phi).unwrap();
        assert_relative_eq!(r.value, c / t_phi, max_relative = 1e-11);
    }

    #[test]
    fn averaged_examples() {
        let m = probability(20);
        let zero = SignedDensity::constant(20, 0.0);
        assert_eq!(averaged_norm_full(&zero, &m).unwrap(), 0.0);
        let c = -2.5;
        let v = SignedDensity::constant(20, c);
        let subset: Vec<usize> = (0..8).collect();
        let m_e = 8.0 / 20.0;
        let t = bisect_increasing(phi_raw, 1.0);
        assert_relative_eq!(
            averaged_norm(&v, &m, &subset).unwrap(),
            c.abs() * m_e * t,
            max_relative = 1e-10
        );
        assert_eq!(averaged_norm(&v, &m, &[]).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch() {
        let m = probability(3);
        assert!(luxemburg_norm(&SignedDensity::constant(2, 1.0), &m, Young::Psi).is_err());
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (2usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(0.01f64..2.0, n),
                prop::collection::vec(-20.0f64..20.0, n),
                prop::collection::vec(-3.0f64..3.0, n),
            )
        })
    }

    fn build(w: &[f64]) -> PointCloudMeasure {
        let pos = (0..w.len()).map(|i| i as f64).collect();
        PointCloudMeasure::new(1, pos, w.to_vec(), 1.0, "random").unwrap()
    }

    proptest! {
        #[test]
        fn homogeneity((w, v, _) in instance(), t in 0.01f64..100.0) {
            let m = build(&w);
            let v = SignedDensity::new(v).unwrap();
            let tv = v.scaled(t);
            for which in [Young::Psi, Young::Phi] {
                let a = luxemburg_norm(&v, &m, which).unwrap().value;
                let b = luxemburg_norm(&tv, &m, which).unwrap().value;
                prop_assert!((b - t * a).abs() <= 1e-9 * t * a);
            }
            let a = averaged_norm_full(&v, &m).unwrap();
            let b = averaged_norm_full(&tv, &m).unwrap();
            prop_assert!((b - t * a).abs() <= 1e-9 * t * a);
        }

        #[test]
        fn holder_with_constant_two((w, big_v, small_v) in instance()) {
            let m = build(&w);
            let v2: Vec<f64> = small_v.iter().map(|x| x * x).collect();
            let lhs: f64 = w.iter().zip(&v2).zip(&big_v).map(|((w, a), b)| w * a * b).sum::<f64>().abs();
            let a = luxemburg_norm(&SignedDensity::new(v2).unwrap(), &m, Young::Phi).unwrap().value;
            let b = luxemburg_norm(&SignedDensity::new(big_v).unwrap(), &m, Young::Psi).unwrap().value;
            prop_assert!(lhs <= 2.0 * a * b * (1.0 + 1e-12));
        }

        #[test]
        fn averaged_norm_monotone_in_subset((w, v, _) in instance(), cut in 0.0f64..1.0) {
            let m = build(&w);
            let v = SignedDensity::new(v).unwrap();
            let k = ((w.len() as f64) * cut) as usize;
            let small: Vec<usize> = (0..k).collect();
            let mut extended = v.values().to_vec();
            extended[k..].iter_mut().for_each(|x| *x = 0.0);
            let extended = SignedDensity::new(extended).unwrap();
            let a = averaged_norm(&extended, &m, &small).unwrap();
            let b = averaged_norm_full(&extended, &m).unwrap();
            prop_assert!(b >= a * (1.0 - 1e-12));
        }

        #[test]
        fn averaged_and_luxemburg_are_equivalent(v in prop::collection::vec(-10.0f64..10.0, 100)) {
            prop_assume!(v.iter().any(|x| *x != 0.0));
            let w: Vec<f64> = (0..100).map(|i| 0.01 + 0.02 * ((i * 37 % 100) as f64) / 100.0).collect();
            let m = build(&w);
            let mass = m.total_mass();
            let v = SignedDensity::new(v).unwrap();
            let ratio = averaged_norm_full(&v, &m).unwrap()
                / luxemburg_norm(&v, &m, Young::Psi).unwrap().value;
            prop_assert!(ratio >= mass.min(1.0) * (1.0 - 1e-9) && ratio <= (mass + 1.0) * (1.0 + 1e-9), "{ratio}");
        }
    }
}
