//! Surface measure on Lipschitz graphs `y = φ(x)` by the midpoint rule.

use std::fmt;
use std::sync::Arc;

use faer::Mat;

use crate::error::{Error, Result};

use super::{Component, Frame, PointCloudMeasure};

pub type PatchMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Graph patch `{(x, φ(x)) : x ∈ G}` over an axis-aligned box `G ⊂ R^d`.
#[derive(Clone)]
pub struct LipschitzPatch {
    pub param_dim: usize,
    pub codim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cells: Vec<usize>,
    pub map: PatchMap,
    pub lipschitz_estimate: f64,
    /// Ambient axis receiving each of the `d + codim` graph coordinates
    /// (parameters first, then values). Identity by default.
    pub axes: Vec<usize>,
}

impl fmt::Debug for LipschitzPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzPatch")
            .field("param_dim", &self.param_dim)
            .field("codim", &self.codim)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("cells", &self.cells)
            .field("lipschitz_estimate", &self.lipschitz_estimate)
            .field("axes", &self.axes)
            .finish_non_exhaustive()
    }
}

impl LipschitzPatch {
    pub fn new(
        lower: Vec<f64>,
        upper: Vec<f64>,
        cells: Vec<usize>,
        codim: usize,
        lipschitz_estimate: f64,
        map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        let d = lower.len();
        Self {
            param_dim: d,
            codim,
            lower,
            upper,
            cells,
            map: Arc::new(map),
            lipschitz_estimate,
            axes: (0..d + codim).collect(),
        }
    }

    pub fn with_axes(mut self, axes: Vec<usize>) -> Self {
        self.axes = axes;
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.param_dim + self.codim
    }
}

fn orthonormalize(vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        for u in &out {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        out.push(v);
    }
    out
}

/// Midpoint-rule atoms at the cell centres with weight `σ(x_c)·|cell|`, where
/// `σ = det(1 + ∇φᵀ∇φ)^{1/2}` and `∇φ` comes from grid differences (central
/// inside, one-sided on the boundary).
pub fn surface_measure(patch: &LipschitzPatch) -> Result<PointCloudMeasure> {
    let d = patch.param_dim;
    let c = patch.codim;
    let n = patch.ambient_dim();
    if d == 0 || patch.lower.len() != d || patch.upper.len() != d || patch.cells.len() != d {
        return Err(Error::InvalidMeasure("patch box does not match parameter dimension".into()));
    }
    if patch.cells.iter().any(|&k| k < 2) {
        return Err(Error::InvalidParameter {
            param: "cells".into(),
            reason: "need at least 2 cells per axis".into(),
        });
    }
    let mut axes_seen = patch.axes.clone();
    axes_seen.sort_unstable();
    if axes_seen != (0..n).collect::<Vec<_>>() {
        return Err(Error::InvalidMeasure("axes must be a permutation".into()));
    }
    let h: Vec<f64> = (0..d)
        .map(|a| (patch.upper[a] - patch.lower[a]) / patch.cells[a] as f64)
        .collect();
    let cell_volume: f64 = h.iter().product();
    let total: usize = patch.cells.iter().product();

    let multi_index = |mut flat: usize| -> Vec<usize> {
        let mut idx = vec![0; d];
        for a in (0..d).rev() {
            idx[a] = flat % patch.cells[a];
            flat /= patch.cells[a];
        }
        idx
    };
    let flat_index = |idx: &[usize]| idx.iter().zip(&patch.cells).fold(0, |acc, (i, k)| acc * k + i);
    let center = |idx: &[usize]| -> Vec<f64> {
        (0..d)
            .map(|a| patch.lower[a] + (idx[a] as f64 + 0.5) * h[a])
            .collect()
    };

    let mut values = Vec::with_capacity(total * c);
    for flat in 0..total {
        let x = center(&multi_index(flat));
        let y = (patch.map)(&x);
        if y.len() != c {
            return Err(Error::Evaluation(format!(
                "map returned {} values, expected {c}",
                y.len()
            )));
        }
        if let Some(v) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::Evaluation(format!("φ({x:?}) = {v}")));
        }
        values.extend_from_slice(&y);
    }

    let mut positions = Vec::with_capacity(total * n);
    let mut weights = Vec::with_capacity(total);
    let mut frames = Vec::with_capacity(total);
    let mut worst_gradient: f64 = 0.0;
    for flat in 0..total {
        let idx = multi_index(flat);
        // jacobian[b][a] = ∂φ_b / ∂x_a
        let mut jac = vec![vec![0.0; d]; c];
        for a in 0..d {
            let (lo, hi) = (idx[a].saturating_sub(1), (idx[a] + 1).min(patch.cells[a] - 1));
            let mut i_lo = idx.clone();
            i_lo[a] = lo;
            let mut i_hi = idx.clone();
            i_hi[a] = hi;
            let (f_lo, f_hi) = (flat_index(&i_lo), flat_index(&i_hi));
            let span = (hi - lo) as f64 * h[a];
            for b in 0..c {
                jac[b][a] = (values[f_hi * c + b] - values[f_lo * c + b]) / span;
            }
        }
        let grad_norm = jac.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        if !grad_norm.is_finite() {
            return Err(Error::Evaluation("non-finite gradient".into()));
        }
        worst_gradient = worst_gradient.max(grad_norm);

        let metric = Mat::<f64>::from_fn(d, d, |a1, a2| {
            let delta = if a1 == a2 { 1.0 } else { 0.0 };
            delta + (0..c).map(|b| jac[b][a1] * jac[b][a2]).sum::<f64>()
        });
        let sigma = metric.determinant().sqrt();
        weights.push(sigma * cell_volume);

        let x = center(&idx);
        let mut p = vec![0.0; n];
        for a in 0..d {
            p[patch.axes[a]] = x[a];
        }
        for b in 0..c {
            p[patch.axes[d + b]] = values[flat * c + b];
        }
        positions.extend_from_slice(&p);

        let tangent = (0..d)
            .map(|a| {
                let mut t = vec![0.0; n];
                t[patch.axes[a]] = 1.0;
                for b in 0..c {
                    t[patch.axes[d + b]] = jac[b][a];
                }
                t
            })
            .collect();
        let normal = (0..c)
            .map(|b| {
                let mut v = vec![0.0; n];
                for a in 0..d {
                    v[patch.axes[a]] = -jac[b][a];
                }
                v[patch.axes[d + b]] = 1.0;
                v
            })
            .collect();
        frames.push(Frame {
            tangent: orthonormalize(tangent),
            normal: orthonormalize(normal),
        });
    }
    if worst_gradient > patch.lipschitz_estimate * (1.0 + 1e-6) {
        return Err(Error::LipschitzBound {
            observed: worst_gradient,
            estimate: patch.lipschitz_estimate,
        });
    }
    let component = Component {
        range: 0..total,
        nominal_dim: d as f64,
        label: "lipschitz-patch".into(),
    };
    PointCloudMeasure::with_components(n, positions, weights, vec![component])?.with_frames(frames)
}
