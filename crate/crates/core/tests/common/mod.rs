//! Reference computations shared by the integration tests. Nothing here
//! calls into the library's own formulas.
#![allow(dead_code)]

use std::f64::consts::PI;

pub fn psi(t: f64) -> f64 {
    (1.0 + t) * (1.0 + t).ln() - t
}

pub fn phi(t: f64) -> f64 {
    t.exp() - 1.0 - t
}

/// Exact eigenvalues of `(1/2π)(−log|x−y|)` on the unit circle with arc
/// length: `1/(2|k|)` for each `k ≠ 0`, in descending order.
pub fn circle_log_eigenvalues(count: usize) -> Vec<f64> {
    (1..=count.div_ceil(2))
        .flat_map(|k| [0.5 / k as f64; 2])
        .take(count)
        .collect()
}

/// Median of `k·s_k` over `k ∈ [a, b]`, 1-based.
pub fn median_k_lambda(s: &[f64], a: usize, b: usize) -> f64 {
    let mut v: Vec<f64> = (a..=b).map(|k| k as f64 * s[k - 1]).collect();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// `sup{Σ wᵢaᵢgᵢ : Σ wᵢΦ(gᵢ) ≤ m}` through its dual
/// `inf_{λ>0} λ(m + Σ wᵢΨ(aᵢ/λ))`, minimized by golden-section search in
/// `log λ` (Ψ is the convex conjugate of Φ).
pub fn averaged_norm_dual(w: &[f64], a: &[f64], m: f64) -> f64 {
    let f = |log_l: f64| {
        let l = log_l.exp();
        l * (m + w.iter().zip(a).map(|(wi, ai)| wi * psi(ai / l)).sum::<f64>())
    };
    let amax = a.iter().copied().fold(0.0, f64::max);
    let (mut lo, mut hi) = ((amax * 1e-12).ln(), (amax * 1e6).ln());
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..300 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    f(0.5 * (lo + hi))
}

/// Weighted Euclidean projection of `y` onto `{g ≥ 0 : Σ wᵢΦ(gᵢ) ≤ m}`.
fn project(w: &[f64], y: &[f64], m: f64) -> Vec<f64> {
    let clipped: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
    let load = |g: &[f64]| w.iter().zip(g).map(|(wi, gi)| wi * phi(*gi)).sum::<f64>();
    if load(&clipped) <= m {
        return clipped;
    }
    // KKT: gᵢ + μ(e^{gᵢ} − 1) = yᵢ, solved per coordinate by Newton
    let solve = |mu: f64| -> Vec<f64> {
        clipped
            .iter()
            .map(|&yi| {
                let mut g = (yi / (1.0 + mu)).min(yi);
                for _ in 0..60 {
                    let h = g + mu * g.exp_m1() - yi;
                    let step = h / (1.0 + mu * g.exp());
                    g = (g - step).clamp(0.0, yi);
                    if step.abs() <= 1e-15 * (1.0 + g) {
                        break;
                    }
                }
                g
            })
            .collect()
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while load(&solve(hi)) > m {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if load(&solve(mid)) > m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    solve(hi)
}

/// The same supremum by projected gradient ascent.
pub fn averaged_norm_projected_gradient(w: &[f64], a: &[f64], m: f64) -> f64 {
    let scale = a.iter().copied().fold(0.0, f64::max);
    let step = 4.0 / scale;
    let mut g = vec![0.0; a.len()];
    let objective = |g: &[f64]| w.iter().zip(a).zip(g).map(|((wi, ai), gi)| wi * ai * gi).sum::<f64>();
    let mut last = 0.0;
    for _ in 0..5000 {
        let y: Vec<f64> = g.iter().zip(a).map(|(gi, ai)| gi + step * ai).collect();
        g = project(w, &y, m);
        let value = objective(&g);
        if (value - last).abs() <= 1e-15 * value {
            break;
        }
        last = value;
    }
    objective(&g)
}

/// Root of an increasing function on `[0, ∞)` by bisection.
pub fn increasing_root(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `ω_{n−1} = 2π^{n/2}/Γ(n/2)` for small `n` from the recursion
/// `ω_{n+1} = 2π ω_{n−1}/n`.
pub fn sphere_area_small(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI * sphere_area_small(n - 2) / (n - 2) as f64,
    }
}
