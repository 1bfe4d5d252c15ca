use std::f64::consts::PI;

use faer::{c64, Mat};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{PointCloudMeasure, SignedDensity};

use super::{check_budget, check_density, AssembledOperator, OperatorMatrix, OperatorMetadata, Route, ZeroMode};

const CIRCLE_TOLERANCE: f64 = 1e-9;

/// Galerkin matrix of `∫|(𝒟𝒩)^{−1/2}h|² P(dx)` on the unit circle over the
/// modes `1 ≤ |k| ≤ K` (drop) or `|k| ≤ K` with `(|k|+1)^{−1/2}` (shift):
/// `M_{kk'} = b(k)b(k')(2π)^{−1} Σᵢ wᵢVᵢ e^{i(k'−k)θᵢ}`.
pub fn assemble_steklov_circle(
    measure: &PointCloudMeasure,
    v: &SignedDensity,
    cutoff: usize,
    zero_mode: ZeroMode,
    budget: usize,
) -> Result<AssembledOperator> {
    check_density(measure, v)?;
    if measure.ambient_dim() != 2 {
        return Err(Error::AmbientMismatch(measure.ambient_dim(), 2));
    }
    let modes: Vec<i64> = match zero_mode {
        ZeroMode::Drop => (-(cutoff as i64)..=cutoff as i64).filter(|k| *k != 0).collect(),
        ZeroMode::Shift => (-(cutoff as i64)..=cutoff as i64).collect(),
    };
    let size = modes.len();
    check_budget(size, budget)?;
    if size == 0 {
        return Err(Error::InvalidParameter {
            param: "cutoff".into(),
            reason: "no Fourier modes".into(),
        });
    }
    let mut theta = Vec::with_capacity(measure.len());
    for i in 0..measure.len() {
        let p = measure.position(i);
        let norm = p[0].hypot(p[1]);
        if (norm - 1.0).abs() > CIRCLE_TOLERANCE {
            return Err(Error::NotOnUnitCircle { index: i, norm });
        }
        theta.push(p[1].atan2(p[0]));
    }
    let b = |k: i64| match zero_mode {
        ZeroMode::Drop => (k.abs() as f64).powf(-0.5),
        ZeroMode::Shift => (k.abs() as f64 + 1.0).powf(-0.5),
    };
    let span = 2 * cutoff as i64;
    let transform: Vec<c64> = (-span..=span)
        .into_par_iter()
        .map(|m| {
            let mut acc = c64::new(0.0, 0.0);
            for (i, t) in theta.iter().enumerate() {
                let wv = measure.weight(i) * v.values()[i];
                if wv != 0.0 {
                    let a = m as f64 * t;
                    acc += c64::new(a.cos(), a.sin()) * wv;
                }
            }
            acc / (2.0 * PI)
        })
        .collect();
    let mult: Vec<f64> = modes.iter().map(|&k| b(k)).collect();
    let mut matrix = Mat::<c64>::zeros(size, size);
    for j in 0..size {
        for i in j..size {
            let f = transform[(modes[j] - modes[i] + span) as usize] * (mult[i] * mult[j]);
            if i == j {
                matrix[(i, i)] = c64::new(f.re, 0.0);
            } else {
                matrix[(i, j)] = f;
                matrix[(j, i)] = f.conj();
            }
        }
    }
    Ok(AssembledOperator {
        matrix: OperatorMatrix::Complex(matrix),
        metadata: OperatorMetadata {
            route: Route::Steklov,
            size,
            torus_period: None,
            cutoff: Some(cutoff),
            kernel: None,
            zero_mode: Some(zero_mode),
            sign_framed: false,
            clipped_eigenvalue: None,
            measure_fingerprint: measure.fingerprint(),
        },
    })
}
