use std::f64::consts::PI;

use faer::{c64, Mat};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{PointCloudMeasure, SignedDensity};

use super::{check_budget, check_density, AssembledOperator, OperatorMatrix, OperatorMetadata, Route};

const ATOM_BLOCK: usize = 256;

/// `a(ξ) = (1 + (2π|ξ|/L)²)^{−N/4}`.
pub fn fourier_multiplier(xi: &[i64], period: f64) -> f64 {
    let n = xi.len() as f64;
    let k2: f64 = xi.iter().map(|&k| (2.0 * PI * k as f64 / period).powi(2)).sum();
    (1.0 + k2).powf(-n / 4.0)
}

fn frequency(mut index: usize, k: usize, n: usize) -> Vec<i64> {
    let side = 2 * k + 1;
    let mut xi = vec![0i64; n];
    for a in (0..n).rev() {
        xi[a] = (index % side) as i64 - k as i64;
        index /= side;
    }
    xi
}

/// Truncated-Fourier Galerkin matrix of `∫|Au|² P(dX)` on the torus of
/// period `L` over the frequencies `|ξ|_∞ ≤ K`:
/// `M_{ξξ'} = a(ξ)a(ξ')L^{−N} Σᵢ wᵢVᵢ exp(2πi(ξ'−ξ)·Xᵢ/L)`.
pub fn assemble_fourier_bs(
    measure: &PointCloudMeasure,
    v: &SignedDensity,
    period: f64,
    cutoff: usize,
    budget: usize,
) -> Result<AssembledOperator> {
    check_density(measure, v)?;
    let n = measure.ambient_dim();
    let side = 2 * cutoff + 1;
    let size = side
        .checked_pow(n as u32)
        .ok_or(Error::MatrixBudget { requested: usize::MAX, budget })?;
    check_budget(size, budget)?;
    if !(period > 0.0) {
        return Err(Error::InvalidParameter {
            param: "period".into(),
            reason: format!("must be positive, got {period}"),
        });
    }
    let (lo, hi) = measure.bounding_box();
    let extent = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max);
    if extent > period / 2.0 {
        return Err(Error::SupportTooLarge {
            extent,
            half_period: period / 2.0,
        });
    }

    // Σ wᵢVᵢ e^{2πi m·Xᵢ/L} for m ∈ [−2K, 2K]^N, accumulated with
    // separable per-axis phase tables
    let dside = 4 * cutoff + 1;
    let dsize = dside.pow(n as u32);
    let shift = 2 * cutoff as i64;
    let atoms: Vec<usize> = (0..measure.len()).filter(|&i| v.values()[i] != 0.0).collect();
    // fixed-size blocks summed in order keep the result independent of the
    // thread count
    let partials: Vec<Vec<c64>> = atoms
        .par_chunks(ATOM_BLOCK)
        .map(|block| {
            let mut acc = vec![c64::new(0.0, 0.0); dsize];
            let mut phases = vec![c64::new(0.0, 0.0); n * dside];
            for &i in block {
                let x = measure.position(i);
                let wv = measure.weight(i) * v.values()[i];
                for a in 0..n {
                    for (j, m) in (-shift..=shift).enumerate() {
                        let t = 2.0 * PI * m as f64 * x[a] / period;
                        phases[a * dside + j] = c64::new(t.cos(), t.sin());
                    }
                }
                for (idx, slot) in acc.iter_mut().enumerate() {
                    let mut rest = idx;
                    let mut p = c64::new(wv, 0.0);
                    for a in (0..n).rev() {
                        p *= phases[a * dside + rest % dside];
                        rest /= dside;
                    }
                    *slot += p;
                }
            }
            acc
        })
        .collect();
    let mut transform = vec![c64::new(0.0, 0.0); dsize];
    for part in partials {
        transform.iter_mut().zip(part).for_each(|(x, y)| *x += y);
    }

    let freqs: Vec<Vec<i64>> = (0..size).map(|i| frequency(i, cutoff, n)).collect();
    let mult: Vec<f64> = freqs.iter().map(|xi| fourier_multiplier(xi, period)).collect();
    let scale = period.powi(-(n as i32));
    let diff_index = |a: &[i64], b: &[i64]| {
        a.iter()
            .zip(b)
            .fold(0usize, |acc, (x, y)| acc * dside + (y - x + shift) as usize)
    };
    let mut matrix = Mat::<c64>::zeros(size, size);
    for j in 0..size {
        for i in 0..size {
            let f = transform[diff_index(&freqs[i], &freqs[j])];
            matrix[(i, j)] = f * (mult[i] * mult[j] * scale);
        }
    }
    // exact Hermitian symmetry: the transform at −m is the conjugate of m
    for j in 0..size {
        matrix[(j, j)] = c64::new(matrix[(j, j)].re, 0.0);
        for i in j + 1..size {
            let avg = (matrix[(i, j)] + matrix[(j, i)].conj()) * 0.5;
            matrix[(i, j)] = avg;
            matrix[(j, i)] = avg.conj();
        }
    }
    Ok(AssembledOperator {
        matrix: OperatorMatrix::Complex(matrix),
        metadata: OperatorMetadata {
            route: Route::Fourier,
            size,
            torus_period: Some(period),
            cutoff: Some(cutoff),
            kernel: None,
            zero_mode: None,
            sign_framed: false,
            clipped_eigenvalue: None,
            measure_fingerprint: measure.fingerprint(),
        },
    })
}
