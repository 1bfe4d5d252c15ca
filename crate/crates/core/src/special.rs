//! Special functions and quadrature used by the coefficient and kernel code.

use crate::error::{Error, Result};

pub use statrs::function::beta::beta;
pub use statrs::function::gamma::gamma;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Modified Bessel function of the second kind, order zero.
///
/// Evaluated from `K0(x) = ∫_0^∞ exp(-x cosh t) dt` with the trapezoidal rule,
/// which converges geometrically here because the integrand is analytic and
/// bounded in the strip `|Im t| < π/2`.
pub fn bessel_k0(x: f64) -> f64 {
    assert!(x > 0.0, "K0 is defined for x > 0");
    const STEP: f64 = 0.125;
    // truncate once x (cosh t - 1) exceeds 45, i.e. the tail is below e^-45
    let t_max = (1.0 + 45.0 / x).acosh();
    let steps = (t_max / STEP).ceil() as usize;
    let mut sum = 0.5;
    for k in 1..=steps {
        let t = k as f64 * STEP;
        sum += (-x * (t.cosh() - 1.0)).exp();
    }
    STEP * sum * (-x).exp()
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    const MAX_INTERVALS: usize = 2000;
    let (v, e) = kronrod15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "error estimate {err:e} above tolerance after {MAX_INTERVALS} subintervals"
            )));
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = kronrod15(&f, lo, mid);
        let (v2, e2) = kronrod15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Integral over the unit sphere `S^{m-1} ⊂ R^m` in hyperspherical coordinates.
///
/// `m = 1` is the two-point sphere `{-1, +1}`.
pub fn integrate_sphere<F: Fn(&[f64]) -> f64>(m: usize, f: F, rel_tol: f64) -> Result<f64> {
    assert!(m >= 1);
    sphere_rec(m, &f, &mut Vec::with_capacity(m), 1.0, rel_tol)
}

// `prefix` holds the coordinates fixed so far, `scale` the product of sines.
fn sphere_rec<F: Fn(&[f64]) -> f64>(
    m: usize,
    f: &F,
    prefix: &mut Vec<f64>,
    scale: f64,
    rel_tol: f64,
) -> Result<f64> {
    match m {
        1 => {
            let mut total = 0.0;
            for s in [1.0, -1.0] {
                prefix.push(scale * s);
                total += f(prefix);
                prefix.pop();
            }
            Ok(total)
        }
        2 => {
            let base = prefix.clone();
            integrate(
                |phi| {
                    let mut p = base.clone();
                    p.push(scale * phi.cos());
                    p.push(scale * phi.sin());
                    f(&p)
                },
                0.0,
                std::f64::consts::TAU,
                rel_tol,
                0.0,
            )
        }
        _ => {
            let base = prefix.clone();
            let failure = std::cell::RefCell::new(None);
            let value = integrate(
                |phi| {
                    let mut p = base.clone();
                    p.push(scale * phi.cos());
                    let s = phi.sin();
                    match sphere_rec(m - 1, f, &mut p, scale * s, rel_tol) {
                        Ok(inner) => s.powi(m as i32 - 2) * inner,
                        Err(e) => {
                            failure.borrow_mut().get_or_insert(e);
                            f64::NAN
                        }
                    }
                },
                0.0,
                std::f64::consts::PI,
                rel_tol,
                0.0,
            );
            match failure.into_inner() {
                Some(e) => Err(e),
                None => value,
            }
        }
    }
}
