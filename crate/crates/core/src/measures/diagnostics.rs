//! Finite-scale regularity and density diagnostics.
//!
//! Everything here is a proxy evaluated on a finite set of radii. Radii below
//! four times the typical atom spacing are rejected: a point cloud cannot
//! witness behaviour at scales finer than its own resolution.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

use super::PointCloudMeasure;

/// Default bound on `c_upper / c_lower` for calling a measure s-regular.
pub const REGULARITY_THRESHOLD: f64 = 50.0;
/// Stand-in for the (nonconstructive) constant in Preiss' density criterion.
pub const PREISS_PLACEHOLDER: f64 = 10.0;
/// Above this many atoms ball queries go through a uniform grid.
const GRID_THRESHOLD: usize = 100_000;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Uniform bucket grid over atom positions.
struct SpatialGrid<'a> {
    measure: &'a PointCloudMeasure,
    lower: Vec<f64>,
    cell: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl<'a> SpatialGrid<'a> {
    fn new(measure: &'a PointCloudMeasure, cell: f64) -> Self {
        let (lower, _) = measure.bounding_box();
        let mut grid = Self {
            measure,
            lower,
            cell,
            buckets: HashMap::new(),
        };
        for i in 0..measure.len() {
            let key = grid.key(measure.position(i));
            grid.buckets.entry(key).or_default().push(i);
        }
        grid
    }

    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter()
            .zip(&self.lower)
            .map(|(x, l)| ((x - l) / self.cell).floor() as i64)
            .collect()
    }

    /// Calls `visit` for every atom in the cells meeting the cube of
    /// half-width `reach` cells around `p`'s cell.
    fn for_each_near(&self, p: &[f64], reach: i64, mut visit: impl FnMut(usize)) {
        let base = self.key(p);
        let n = base.len();
        let width = (2 * reach + 1) as usize;
        let mut offset = vec![0usize; n];
        'outer: loop {
            let key: Vec<i64> = base
                .iter()
                .zip(&offset)
                .map(|(b, o)| b + *o as i64 - reach)
                .collect();
            if let Some(list) = self.buckets.get(&key) {
                list.iter().for_each(|&i| visit(i));
            }
            for slot in offset.iter_mut() {
                *slot += 1;
                if *slot < width {
                    continue 'outer;
                }
                *slot = 0;
            }
            break;
        }
    }

    fn ball_mass(&self, center: &[f64], radius: f64) -> f64 {
        let r2 = radius * radius;
        let reach = (radius / self.cell).ceil() as i64;
        let mut mass = 0.0;
        self.for_each_near(center, reach, |i| {
            if dist2(self.measure.position(i), center) <= r2 {
                mass += self.measure.weight(i);
            }
        });
        mass
    }
}

/// Sum of weights of atoms within closed distance `radius` of `center`.
pub fn ball_mass(measure: &PointCloudMeasure, center: &[f64], radius: f64) -> f64 {
    let r2 = radius * radius;
    (0..measure.len())
        .filter(|&i| dist2(measure.position(i), center) <= r2)
        .map(|i| measure.weight(i))
        .sum()
}

/// Distance from every atom to its nearest distinct-index neighbour.
///
/// Returns `f64::INFINITY` for a single-atom measure.
pub fn nearest_neighbor_distances(measure: &PointCloudMeasure) -> Vec<f64> {
    let n = measure.len();
    if n < 2 {
        return vec![f64::INFINITY; n];
    }
    if n <= 4096 {
        return (0..n)
            .into_par_iter()
            .map(|i| {
                let p = measure.position(i);
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| dist2(p, measure.position(j)))
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .collect();
    }
    let dim = measure.ambient_dim() as i32;
    let cell = (measure.diameter_bound() / (n as f64).powf(1.0 / dim as f64)).max(1e-300);
    let grid = SpatialGrid::new(measure, cell);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let p = measure.position(i);
            let mut best = f64::INFINITY;
            let mut reach = 1;
            loop {
                grid.for_each_near(p, reach, |j| {
                    if j != i {
                        best = best.min(dist2(p, measure.position(j)));
                    }
                });
                // every atom within reach·cell of p has been seen
                if best.sqrt() <= (reach as f64) * cell {
                    return best.sqrt();
                }
                reach *= 2;
            }
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn resolution_floor(measure: &PointCloudMeasure) -> f64 {
    let nn: Vec<f64> = nearest_neighbor_distances(measure)
        .into_iter()
        .filter(|d| d.is_finite())
        .collect();
    if nn.is_empty() {
        0.0
    } else {
        4.0 * median(nn)
    }
}

fn check_radii(measure: &PointCloudMeasure, radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidParameter {
            param: "radii".into(),
            reason: "empty".into(),
        });
    }
    let floor = resolution_floor(measure);
    for &r in radii {
        if !(r > 0.0) || r < floor {
            return Err(Error::Resolution { radius: r, floor });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct AhlforsBand {
    pub exponent: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub ratio: f64,
    pub threshold: f64,
    pub regular: bool,
    pub samples: usize,
}

/// Minimum and maximum of `μ(B(X, r)) / r^s` over sampled atoms and radii.
///
/// When `sample_count` is at least the atom count every atom is used;
/// otherwise atoms are drawn without replacement from a seeded generator.
pub fn ahlfors_constants(
    measure: &PointCloudMeasure,
    s: f64,
    radii: &[f64],
    sample_count: usize,
    seed: u64,
) -> Result<AhlforsBand> {
    if sample_count == 0 {
        return Err(Error::InvalidParameter {
            param: "sample_count".into(),
            reason: "must be positive".into(),
        });
    }
    check_radii(measure, radii)?;
    let n = measure.len();
    let atoms: Vec<usize> = if sample_count >= n {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = sample(&mut rng, n, sample_count).into_vec();
        v.sort_unstable();
        v
    };
    let grid = (n > GRID_THRESHOLD).then(|| {
        let min_r = radii.iter().copied().fold(f64::INFINITY, f64::min);
        SpatialGrid::new(measure, min_r)
    });
    let (lo, hi) = atoms
        .par_iter()
        .map(|&i| {
            let x = measure.position(i);
            radii.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| {
                let m = match &grid {
                    Some(g) => g.ball_mass(x, r),
                    None => ball_mass(measure, x, r),
                };
                let q = m / r.powf(s);
                (lo.min(q), hi.max(q))
            })
        })
        .reduce(|| (f64::INFINITY, 0.0), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    let ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok(AhlforsBand {
        exponent: s,
        c_lower: lo,
        c_upper: hi,
        ratio,
        threshold: REGULARITY_THRESHOLD,
        regular: ratio <= REGULARITY_THRESHOLD,
        samples: atoms.len(),
    })
}

/// Finite-scale proxies for the lower and upper `s`-densities at a point.
#[derive(Debug, Clone, Serialize)]
pub struct DensityEstimate {
    pub exponent: f64,
    pub lower: f64,
    pub upper: f64,
    pub radii_used: Vec<f64>,
    /// `0 < lower ≤ upper < ∞` on the sampled radii.
    pub positive_finite: bool,
    /// `upper < PREISS_PLACEHOLDER · lower`; heuristic only.
    pub preiss_heuristic: bool,
}

pub fn density_bounds(
    measure: &PointCloudMeasure,
    s: f64,
    center: &[f64],
    radii: &[f64],
) -> Result<DensityEstimate> {
    check_radii(measure, radii)?;
    let ratios: Vec<f64> = radii
        .iter()
        .map(|&r| ball_mass(measure, center, r) / r.powf(s))
        .collect();
    let lower = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = ratios.iter().copied().fold(0.0, f64::max);
    Ok(DensityEstimate {
        exponent: s,
        lower,
        upper,
        radii_used: radii.to_vec(),
        positive_finite: lower > 0.0 && upper.is_finite(),
        preiss_heuristic: upper < PREISS_PLACEHOLDER * lower,
    })
}
