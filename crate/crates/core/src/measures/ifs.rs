//! Iterated function systems of contractive similitudes and their
//! self-similar measures.

use crate::error::{Error, Result};

use super::PointCloudMeasure;

/// Largest dimension considered when solving the Moran equation.
const DIMENSION_CAP: f64 = 64.0;

/// `x ↦ h·Q·x + b` with `0 < h < 1` and `Q` orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Similitude {
    ratio: f64,
    rotation: Vec<f64>,
    translation: Vec<f64>,
}

impl Similitude {
    /// `rotation` is row-major `N×N`.
    pub fn new(ratio: f64, rotation: Vec<f64>, translation: Vec<f64>) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidRatio(ratio));
        }
        let n = translation.len();
        if n == 0 || rotation.len() != n * n {
            return Err(Error::InvalidMeasure(format!(
                "rotation has {} entries for dimension {n}",
                rotation.len()
            )));
        }
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| rotation[k * n + i] * rotation[k * n + j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        if worst > 1e-10 {
            return Err(Error::NotOrthogonal(worst));
        }
        Ok(Self {
            ratio,
            rotation,
            translation,
        })
    }

    /// Pure scaling plus shift (`Q = I`).
    pub fn scaling(ratio: f64, translation: Vec<f64>) -> Result<Self> {
        let n = translation.len();
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            q[i * n + i] = 1.0;
        }
        Self::new(ratio, q, translation)
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let qx: f64 = (0..n).map(|j| self.rotation[i * n + j] * x[j]).sum();
                self.ratio * qx + self.translation[i]
            })
            .collect()
    }

    /// The unique fixed point, by Banach iteration.
    pub fn fixed_point(&self) -> Vec<f64> {
        let mut x = self.translation.clone();
        loop {
            let next = self.apply(&x);
            let step = next
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let scale = next.iter().map(|v| v.abs()).fold(1.0, f64::max);
            x = next;
            if step <= 1e-16 * scale {
                return x;
            }
        }
    }
}

/// Solves `Σ h_j^d = 1` for the similarity dimension by bisection.
pub fn ifs_dimension(maps: &[Similitude]) -> Result<f64> {
    if maps.len() < 2 {
        return Err(Error::DegenerateSystem(maps.len()));
    }
    for m in maps {
        if !(m.ratio > 0.0 && m.ratio < 1.0) {
            return Err(Error::InvalidRatio(m.ratio));
        }
    }
    let moran = |d: f64| maps.iter().map(|m| m.ratio.powf(d)).sum::<f64>() - 1.0;
    if moran(DIMENSION_CAP) > 0.0 {
        return Err(Error::DimensionExceedsAmbient {
            dim: DIMENSION_CAP,
            ambient: maps[0].dim(),
        });
    }
    let (mut lo, mut hi) = (0.0, DIMENSION_CAP);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if moran(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let d = 0.5 * (lo + hi);
    debug_assert!(moran(d).abs() <= 1e-12);
    Ok(d)
}

#[derive(Debug, Clone)]
pub struct SimilitudeSystem {
    maps: Vec<Similitude>,
    similarity_dim: f64,
}

impl SimilitudeSystem {
    /// The open set condition is assumed, not checked.
    pub fn new(maps: Vec<Similitude>) -> Result<Self> {
        let similarity_dim = ifs_dimension(&maps)?;
        let n = maps[0].dim();
        if maps.iter().any(|m| m.dim() != n) {
            return Err(Error::InvalidMeasure("similitudes act in different dimensions".into()));
        }
        if similarity_dim > n as f64 {
            return Err(Error::DimensionExceedsAmbient {
                dim: similarity_dim,
                ambient: n,
            });
        }
        Ok(Self {
            maps,
            similarity_dim,
        })
    }

    pub fn maps(&self) -> &[Similitude] {
        &self.maps
    }

    pub fn similarity_dim(&self) -> f64 {
        self.similarity_dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.maps[0].dim()
    }

    /// Self-similar probabilities `p_j = h_j^d`.
    pub fn probabilities(&self) -> Vec<f64> {
        let p: Vec<f64> = self
            .maps
            .iter()
            .map(|m| m.ratio.powf(self.similarity_dim))
            .collect();
        let s: f64 = p.iter().sum();
        p.into_iter().map(|x| x / s).collect()
    }
}

/// One atom per word `j_1…j_k`, placed at `S_{j_1}∘…∘S_{j_k}(x_0)` with
/// `x_0` the fixed point of `S_{j_1}`, weighted by `Π p_{j_i}`.
///
/// Words are enumerated in lexicographic order.
pub fn ifs_self_similar_measure(
    system: &SimilitudeSystem,
    depth: usize,
    atom_budget: usize,
) -> Result<PointCloudMeasure> {
    if depth == 0 {
        return Err(Error::InvalidParameter {
            param: "depth".into(),
            reason: "must be at least 1".into(),
        });
    }
    let m = system.maps.len();
    let requested = (m as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    if requested > atom_budget as u128 {
        return Err(Error::AtomBudget {
            requested,
            budget: atom_budget,
        });
    }
    let count = requested as usize;
    let n = system.ambient_dim();
    let probs = system.probabilities();
    let fixed: Vec<Vec<f64>> = system.maps.iter().map(Similitude::fixed_point).collect();
    let mut positions = Vec::with_capacity(count * n);
    let mut weights = Vec::with_capacity(count);
    let mut word = vec![0usize; depth];
    for index in 0..count {
        let mut rest = index;
        for slot in word.iter_mut().rev() {
            *slot = rest % m;
            rest /= m;
        }
        let mut x = fixed[word[0]].clone();
        let mut w = 1.0;
        for &j in word.iter().rev() {
            x = system.maps[j].apply(&x);
            w *= probs[j];
        }
        positions.extend_from_slice(&x);
        weights.push(w);
    }
    PointCloudMeasure::new(n, positions, weights, system.similarity_dim, "self-similar")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cantor() -> SimilitudeSystem {
        SimilitudeSystem::new(vec![
            Similitude::scaling(1.0 / 3.0, vec![0.0]).unwrap(),
            Similitude::scaling(1.0 / 3.0, vec![2.0 / 3.0]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn moran_closed_forms() {
        let s = |h: f64| Similitude::scaling(h, vec![0.0]).unwrap();
        assert_relative_eq!(
            ifs_dimension(&[s(1.0 / 3.0), s(1.0 / 3.0)]).unwrap(),
            2f64.ln() / 3f64.ln(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            ifs_dimension(&[s(0.5), s(0.5), s(0.5)]).unwrap(),
            3f64.ln() / 2f64.ln(),
            max_relative = 1e-14
        );
        let golden = (5f64.sqrt() + 1.0) / 2.0;
        let d = ifs_dimension(&[s(0.5), s(0.25)]).unwrap();
        assert_relative_eq!(d, golden.log2(), max_relative = 1e-14);
        assert!((0.5f64.powf(d) + 0.25f64.powf(d) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn moran_errors() {
        let s = Similitude::scaling(0.5, vec![0.0]).unwrap();
        assert!(matches!(ifs_dimension(&[s]), Err(Error::DegenerateSystem(1))));
        assert!(matches!(
            Similitude::scaling(1.0, vec![0.0]),
            Err(Error::InvalidRatio(_))
        ));
        assert!(Similitude::new(0.5, vec![1.0, 1.0, 0.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn cantor_depth_one_and_eight() {
        let sys = cantor();
        let m = ifs_self_similar_measure(&sys, 1, 1 << 20).unwrap();
        assert_eq!(m.len(), 2);
        for w in m.weights() {
            assert_relative_eq!(*w, 0.5, max_relative = 1e-14);
        }
        let m = ifs_self_similar_measure(&sys, 8, 1 << 20).unwrap();
        assert_eq!(m.len(), 256);
        for (i, w) in m.weights().iter().enumerate() {
            assert_relative_eq!(*w, 2f64.powi(-8), max_relative = 1e-12);
            let x = m.position(i)[0];
            assert!((0.0..=1.0).contains(&x));
        }
        assert!((m.total_mass() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn unequal_ratios_depth_two() {
        let sys = SimilitudeSystem::new(vec![
            Similitude::scaling(0.5, vec![0.0]).unwrap(),
            Similitude::scaling(0.25, vec![0.75]).unwrap(),
        ])
        .unwrap();
        let m = ifs_self_similar_measure(&sys, 2, 100).unwrap();
        // x = 2^-d solves x + x^2 = 1; word weights are products of x and x^2
        let x = (5f64.sqrt() - 1.0) / 2.0;
        let expected = [x * x, x * x * x, x * x * x, x.powi(4)];
        for (w, e) in m.weights().iter().zip(expected) {
            assert_relative_eq!(*w, e, max_relative = 1e-12);
        }
        assert!((m.total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let err = ifs_self_similar_measure(&cantor(), 11, 1000).unwrap_err();
        assert!(matches!(err, Error::AtomBudget { requested: 2048, .. }));
    }

    #[test]
    fn rotated_map_fixed_point() {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let m = Similitude::new(0.5, vec![c, -s, s, c], vec![1.0, -2.0]).unwrap();
        let p = m.fixed_point();
        let q = m.apply(&p);
        assert!((p[0] - q[0]).abs() < 1e-14 && (p[1] - q[1]).abs() < 1e-14);
    }
}
