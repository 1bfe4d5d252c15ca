//! Discrete approximations of singular measures.
//!
//! A [`PointCloudMeasure`] is a weighted cloud of atoms in `R^N`, split into
//! components that each carry a nominal Hausdorff dimension. All integrals
//! against the measure are weighted sums over atoms.

mod builtin;
mod diagnostics;
mod ifs;
mod io;
mod surface;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use builtin::{builtin_measure, ScenarioParams, BUILTIN_MEASURES};
pub use diagnostics::{
    ahlfors_constants, ball_mass, density_bounds, nearest_neighbor_distances, AhlforsBand,
    DensityEstimate, PREISS_PLACEHOLDER, REGULARITY_THRESHOLD,
};
pub use ifs::{ifs_dimension, ifs_self_similar_measure, Similitude, SimilitudeSystem};
pub use io::{read_measure, write_measure};
pub use surface::{surface_measure, LipschitzPatch, PatchMap};

/// Tangent and normal orthonormal bases at an atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub tangent: Vec<Vec<f64>>,
    pub normal: Vec<Vec<f64>>,
}

/// A contiguous block of atoms sharing a nominal dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub range: Range<usize>,
    pub nominal_dim: f64,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct PointCloudMeasure {
    ambient_dim: usize,
    positions: Vec<f64>,
    weights: Vec<f64>,
    components: Vec<Component>,
    total_mass: f64,
    frames: Option<Vec<Frame>>,
}

impl PointCloudMeasure {
    /// Builds a single-component measure.
    pub fn new(
        ambient_dim: usize,
        positions: Vec<f64>,
        weights: Vec<f64>,
        nominal_dim: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = weights.len();
        let component = Component {
            range: 0..n,
            nominal_dim,
            label: label.into(),
        };
        Self::with_components(ambient_dim, positions, weights, vec![component])
    }

    pub fn with_components(
        ambient_dim: usize,
        positions: Vec<f64>,
        weights: Vec<f64>,
        components: Vec<Component>,
    ) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::InvalidMeasure("ambient dimension must be positive".into()));
        }
        if positions.len() != ambient_dim * weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} coordinates for {} atoms in dimension {}",
                positions.len(),
                weights.len(),
                ambient_dim
            )));
        }
        if let Some(x) = positions.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure(format!("non-finite coordinate {x}")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("invalid weight {w}")));
        }
        let mut next = 0;
        for c in &components {
            if c.range.start != next || c.range.end < c.range.start {
                return Err(Error::InvalidMeasure(
                    "component ranges must partition the atoms".into(),
                ));
            }
            if !(c.nominal_dim > 0.0 && c.nominal_dim <= ambient_dim as f64) {
                return Err(Error::InvalidMeasure(format!(
                    "nominal dimension {} outside (0, {ambient_dim}]",
                    c.nominal_dim
                )));
            }
            next = c.range.end;
        }
        if next != weights.len() {
            return Err(Error::InvalidMeasure(
                "component ranges must partition the atoms".into(),
            ));
        }
        let total_mass = weights.iter().sum();
        Ok(Self {
            ambient_dim,
            positions,
            weights,
            components,
            total_mass,
            frames: None,
        })
    }

    /// Attaches exact per-atom tangent/normal frames.
    pub fn with_frames(mut self, frames: Vec<Frame>) -> Result<Self> {
        if frames.len() != self.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} frames for {} atoms",
                frames.len(),
                self.len()
            )));
        }
        self.frames = Some(frames);
        Ok(self)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn frames(&self) -> Option<&[Frame]> {
        self.frames.as_deref()
    }

    /// Nominal dimension of the component containing atom `i`.
    pub fn nominal_dim_of(&self, i: usize) -> f64 {
        self.components
            .iter()
            .find(|c| c.range.contains(&i))
            .map(|c| c.nominal_dim)
            .expect("atom index out of range")
    }

    /// Per-atom nominal dimensions.
    pub fn atom_dims(&self) -> Vec<f64> {
        let mut dims = vec![0.0; self.len()];
        for c in &self.components {
            dims[c.range.clone()].fill(c.nominal_dim);
        }
        dims
    }

    /// Axis-aligned bounding box as (lower, upper) corners.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.ambient_dim;
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in self.positions.chunks_exact(n) {
            for a in 0..n {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }

    pub fn diameter_bound(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        lo.iter()
            .zip(&hi)
            .map(|(l, h)| (h - l).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Short content hash of positions, weights and component layout.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.ambient_dim as u64).to_le_bytes());
        for x in &self.positions {
            h.update(x.to_le_bytes());
        }
        for w in &self.weights {
            h.update(w.to_le_bytes());
        }
        for c in &self.components {
            h.update((c.range.start as u64).to_le_bytes());
            h.update((c.range.end as u64).to_le_bytes());
            h.update(c.nominal_dim.to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }

    /// Integral of `f` against the measure.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Real density `V` sampled at the atoms of a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedDensity {
    values: Vec<f64>,
}

impl SignedDensity {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure(format!("non-finite density value {v}")));
        }
        Ok(Self { values })
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            values: vec![value; n],
        }
    }

    pub fn for_measure(measure: &PointCloudMeasure, values: Vec<f64>) -> Result<Self> {
        if values.len() != measure.len() {
            return Err(Error::DensityLength {
                expected: measure.len(),
                got: values.len(),
            });
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max(V, 0)`.
    pub fn positive_part(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| v.max(0.0)).collect(),
        }
    }

    /// `max(-V, 0)`.
    pub fn negative_part(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| (-v).max(0.0)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= 0.0)
    }
}

/// Concatenates measures (and their densities) into one multi-component measure.
pub fn union_measure(
    parts: &[(PointCloudMeasure, SignedDensity)],
) -> Result<(PointCloudMeasure, SignedDensity)> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidMeasure("union of zero parts".into()))?;
    let n = first.0.ambient_dim();
    let mut positions = Vec::new();
    let mut weights = Vec::new();
    let mut values = Vec::new();
    let mut components = Vec::new();
    let mut frames: Option<Vec<Frame>> = Some(Vec::new());
    for (m, v) in parts {
        if m.ambient_dim() != n {
            return Err(Error::AmbientMismatch(n, m.ambient_dim()));
        }
        if v.len() != m.len() {
            return Err(Error::DensityLength {
                expected: m.len(),
                got: v.len(),
            });
        }
        let offset = weights.len();
        for c in m.components() {
            components.push(Component {
                range: c.range.start + offset..c.range.end + offset,
                nominal_dim: c.nominal_dim,
                label: c.label.clone(),
            });
        }
        positions.extend_from_slice(m.positions());
        weights.extend_from_slice(m.weights());
        values.extend_from_slice(v.values());
        frames = match (frames, m.frames()) {
            (Some(mut acc), Some(f)) => {
                acc.extend_from_slice(f);
                Some(acc)
            }
            _ => None,
        };
    }
    let mut measure = PointCloudMeasure::with_components(n, positions, weights, components)?;
    if let Some(f) = frames {
        measure = measure.with_frames(f)?;
    }
    Ok((measure, SignedDensity::new(values)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, offset: f64) -> PointCloudMeasure {
        let pos = (0..n)
            .flat_map(|i| [offset + (i as f64 + 0.5) / n as f64, 0.0])
            .collect();
        PointCloudMeasure::new(2, pos, vec![1.0 / n as f64; n], 1.0, "segment").unwrap()
    }

    #[test]
    fn rejects_negative_weights_and_bad_partitions() {
        assert!(PointCloudMeasure::new(1, vec![0.0, 1.0], vec![1.0, -0.5], 1.0, "x").is_err());
        let c = vec![Component {
            range: 0..1,
            nominal_dim: 1.0,
            label: "a".into(),
        }];
        assert!(PointCloudMeasure::with_components(1, vec![0.0, 1.0], vec![1.0, 1.0], c).is_err());
        assert!(PointCloudMeasure::new(1, vec![0.0], vec![1.0], 2.0, "too big").is_err());
    }

    #[test]
    fn union_preserves_mass_and_dims() {
        let a = line(10, 0.0);
        let b = line(30, 5.0);
        let (u, v) = union_measure(&[
            (a.clone(), SignedDensity::constant(10, 1.0)),
            (b.clone(), SignedDensity::constant(30, -2.0)),
        ])
        .unwrap();
        assert_eq!(u.len(), 40);
        assert!((u.total_mass() - a.total_mass() - b.total_mass()).abs() <= 1e-12 * u.total_mass());
        assert_eq!(u.components().len(), 2);
        assert_eq!(u.components()[1].range, 10..40);
        assert_eq!(v.values()[39], -2.0);
    }

    #[test]
    fn union_of_one_part_is_identity() {
        let a = line(7, 0.0);
        let (u, _) = union_measure(&[(a.clone(), SignedDensity::constant(7, 1.0))]).unwrap();
        assert_eq!(u.positions(), a.positions());
        assert_eq!(u.weights(), a.weights());
        assert_eq!(u.fingerprint(), a.fingerprint());
    }

    #[test]
    fn union_rejects_dimension_mismatch() {
        let a = line(3, 0.0);
        let b = PointCloudMeasure::new(3, vec![0.0; 3], vec![1.0], 1.0, "p").unwrap();
        let err = union_measure(&[
            (a, SignedDensity::constant(3, 1.0)),
            (b, SignedDensity::constant(1, 1.0)),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::AmbientMismatch(2, 3)));
    }

    #[test]
    fn density_parts() {
        let v = SignedDensity::new(vec![1.5, -2.0, 0.0]).unwrap();
        assert_eq!(v.positive_part().values(), &[1.5, 0.0, 0.0]);
        assert_eq!(v.negative_part().values(), &[0.0, 2.0, 0.0]);
        assert!(SignedDensity::new(vec![f64::NAN]).is_err());
    }
}
