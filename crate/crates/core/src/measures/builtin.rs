//! Catalog of builtin measures used by the experiments.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

use super::{
    ifs_self_similar_measure, surface_measure, union_measure, Frame, LipschitzPatch,
    PointCloudMeasure, SignedDensity, Similitude, SimilitudeSystem,
};

const IFS_ATOM_BUDGET: usize = 1 << 22;

pub const BUILTIN_MEASURES: &[&str] = &[
    "circle",
    "segment",
    "two_circles",
    "sphere",
    "cantor_line",
    "cantor_circle",
    "sierpinski",
    "half_signed_circle",
    "circle_plus_square",
    "steklov_cantor",
];

/// Named real parameters of a scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioParams(pub BTreeMap<String, f64>);

impl ScenarioParams {
    pub fn from_pairs(pairs: &[(&str, f64)]) -> Self {
        Self(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }

    fn required(&self, scenario: &str, name: &str) -> Result<f64> {
        self.0.get(name).copied().ok_or_else(|| Error::MissingParameter {
            scenario: scenario.into(),
            param: name.into(),
        })
    }

    fn or(&self, name: &str, default: f64) -> f64 {
        self.0.get(name).copied().unwrap_or(default)
    }

    fn count(&self, scenario: &str, name: &str, min: usize) -> Result<usize> {
        let v = self.required(scenario, name)?;
        if v.fract() != 0.0 || v < min as f64 {
            return Err(Error::InvalidParameter {
                param: name.into(),
                reason: format!("expected an integer >= {min}, got {v}"),
            });
        }
        Ok(v as usize)
    }

    fn positive(&self, name: &str, default: f64) -> Result<f64> {
        let v = self.or(name, default);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter {
                param: name.into(),
                reason: format!("expected a positive number, got {v}"),
            });
        }
        Ok(v)
    }
}

fn circle(radius: f64, center: [f64; 2], atoms: usize, label: &str) -> Result<PointCloudMeasure> {
    let mut pos = Vec::with_capacity(2 * atoms);
    let mut frames = Vec::with_capacity(atoms);
    for i in 0..atoms {
        let t = TAU * (i as f64 + 0.5) / atoms as f64;
        let (s, c) = t.sin_cos();
        pos.extend_from_slice(&[center[0] + radius * c, center[1] + radius * s]);
        frames.push(Frame {
            tangent: vec![vec![-s, c]],
            normal: vec![vec![c, s]],
        });
    }
    let w = vec![TAU * radius / atoms as f64; atoms];
    PointCloudMeasure::new(2, pos, w, 1.0, label)?.with_frames(frames)
}

fn segment(length: f64, atoms: usize) -> Result<PointCloudMeasure> {
    let pos = (0..atoms)
        .flat_map(|i| [length * (i as f64 + 0.5) / atoms as f64, 0.0])
        .collect();
    let frames = vec![
        Frame {
            tangent: vec![vec![1.0, 0.0]],
            normal: vec![vec![0.0, 1.0]],
        };
        atoms
    ];
    PointCloudMeasure::new(2, pos, vec![length / atoms as f64; atoms], 1.0, "segment")?.with_frames(frames)
}

/// Fibonacci lattice on the sphere of the given radius, equal-area weights.
fn sphere(radius: f64, atoms: usize) -> Result<PointCloudMeasure> {
    let golden = PI * (1.0 + 5f64.sqrt());
    let mut pos = Vec::with_capacity(3 * atoms);
    let mut frames = Vec::with_capacity(atoms);
    for i in 0..atoms {
        let k = i as f64 + 0.5;
        let z = 1.0 - 2.0 * k / atoms as f64;
        let rho = (1.0 - z * z).sqrt();
        let (s, c) = (golden * k).sin_cos();
        let n = [rho * c, rho * s, z];
        pos.extend(n.iter().map(|v| radius * v));
        // e_phi and e_theta in spherical coordinates
        let e_phi = [-s, c, 0.0];
        let e_theta = [z * c, z * s, -rho];
        frames.push(Frame {
            tangent: vec![e_theta.to_vec(), e_phi.to_vec()],
            normal: vec![n.to_vec()],
        });
    }
    let w = vec![4.0 * PI * radius * radius / atoms as f64; atoms];
    PointCloudMeasure::new(3, pos, w, 2.0, "sphere")?.with_frames(frames)
}

fn middle_third() -> Result<SimilitudeSystem> {
    SimilitudeSystem::new(vec![
        Similitude::scaling(1.0 / 3.0, vec![0.0])?,
        Similitude::scaling(1.0 / 3.0, vec![2.0 / 3.0])?,
    ])
}

fn cantor_line(depth: usize) -> Result<PointCloudMeasure> {
    let line = ifs_self_similar_measure(&middle_third()?, depth, IFS_ATOM_BUDGET)?;
    let pos = line.positions().iter().flat_map(|&x| [x, 0.0]).collect();
    PointCloudMeasure::new(2, pos, line.weights().to_vec(), line.components()[0].nominal_dim, "cantor_line")
}

/// Cantor set of angles `θ = 2π x` on a circle, total mass `mass`.
fn cantor_on_circle(depth: usize, radius: f64, mass: f64, label: &str) -> Result<PointCloudMeasure> {
    let line = ifs_self_similar_measure(&middle_third()?, depth, IFS_ATOM_BUDGET)?;
    let pos = line
        .positions()
        .iter()
        .flat_map(|&x| {
            let (s, c) = (TAU * x).sin_cos();
            [radius * c, radius * s]
        })
        .collect();
    let w = line.weights().iter().map(|w| w * mass).collect();
    PointCloudMeasure::new(2, pos, w, line.components()[0].nominal_dim, label)
}

fn sierpinski(depth: usize) -> Result<PointCloudMeasure> {
    let h = 3f64.sqrt() / 2.0;
    let sys = SimilitudeSystem::new(vec![
        Similitude::scaling(0.5, vec![0.0, 0.0])?,
        Similitude::scaling(0.5, vec![0.5, 0.0])?,
        Similitude::scaling(0.5, vec![0.25, h / 2.0])?,
    ])?;
    ifs_self_similar_measure(&sys, depth, IFS_ATOM_BUDGET)
}

fn square(side: f64, cells: usize) -> Result<PointCloudMeasure> {
    let half = side / 2.0;
    let patch = LipschitzPatch::new(vec![-half, -half], vec![half, half], vec![cells, cells], 0, 0.0, |_| vec![]);
    surface_measure(&patch)
}

/// Builds a catalog measure and its default density (`V ≡ 1` unless the
/// scenario says otherwise).
pub fn builtin_measure(
    name: &str,
    params: &ScenarioParams,
) -> Result<(PointCloudMeasure, SignedDensity)> {
    let ones = |m: PointCloudMeasure| {
        let v = SignedDensity::constant(m.len(), 1.0);
        (m, v)
    };
    match name {
        "circle" => {
            let m = circle(
                params.positive("radius", 1.0)?,
                [params.or("cx", 0.0), params.or("cy", 0.0)],
                params.count(name, "atoms", 3)?,
                "circle",
            )?;
            Ok(ones(m))
        }
        "segment" => Ok(ones(segment(
            params.positive("length", 1.0)?,
            params.count(name, "atoms", 2)?,
        )?)),
        "two_circles" => {
            let r1 = params.positive("r1", 1.0)?;
            let r2 = params.positive("r2", 0.5)?;
            let gap = params.positive("gap", 1.0)?;
            let atoms = params.count(name, "atoms", 6)?;
            let n1 = ((atoms as f64) * r1 / (r1 + r2)).round() as usize;
            let a = circle(r1, [0.0, 0.0], n1, "circle_1")?;
            let b = circle(r2, [r1 + gap + r2, 0.0], atoms - n1, "circle_2")?;
            union_measure(&[ones(a), ones(b)])
        }
        "sphere" => Ok(ones(sphere(
            params.positive("radius", 1.0)?,
            params.count(name, "atoms", 4)?,
        )?)),
        "cantor_line" => Ok(ones(cantor_line(params.count(name, "depth", 1)?)?)),
        "cantor_circle" => Ok(ones(cantor_on_circle(
            params.count(name, "depth", 1)?,
            params.positive("radius", 1.0)?,
            1.0,
            "cantor_circle",
        )?)),
        "steklov_cantor" => Ok(ones(cantor_on_circle(
            params.count(name, "depth", 1)?,
            1.0,
            TAU,
            "steklov_cantor",
        )?)),
        "sierpinski" => Ok(ones(sierpinski(params.count(name, "depth", 1)?)?)),
        "half_signed_circle" => {
            let atoms = params.count(name, "atoms", 2)?;
            let m = circle(params.positive("radius", 1.0)?, [0.0, 0.0], atoms, "half_signed_circle")?;
            let v = (0..atoms)
                .map(|i| if m.position(i)[1] >= 0.0 { 1.0 } else { -1.0 })
                .collect();
            let v = SignedDensity::new(v)?;
            Ok((m, v))
        }
        "circle_plus_square" => {
            let atoms = params.count(name, "atoms", 3)?;
            let cells = params.0.get("square_cells").copied().unwrap_or(60.0);
            if cells.fract() != 0.0 || cells < 2.0 {
                return Err(Error::InvalidParameter {
                    param: "square_cells".into(),
                    reason: format!("expected an integer >= 2, got {cells}"),
                });
            }
            let c = circle(params.positive("radius", 1.0)?, [0.0, 0.0], atoms, "circle")?;
            let s = square(params.positive("side", 1.0)?, cells as usize)?;
            union_measure(&[ones(c), ones(s)])
        }
        other => Err(Error::UnknownScenario(other.into())),
    }
}
