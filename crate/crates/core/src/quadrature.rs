//! Globally adaptive Gauss-Kronrod (7/15) quadrature, plus a wrapper that
//! integrates spectral densities over frequency bands spanning many decades.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Default relative tolerance for band integrals.
pub const DEFAULT_REL_TOL: f64 = 1e-4;

const MAX_SUBDIVISIONS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    order: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    // Largest error first; ties resolved by creation order so refinement is
    // reproducible.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.order.cmp(&self.order))
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Integration(format!(
                "integrand is {y} at abscissa {x:e}"
            )))
        }
    };
    let fc = eval(center)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = eval(center - dx)? + eval(center + dx)?;
        kron += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    Ok((kron * half, ((kron - gauss) * half).abs()))
}

/// Integrates `f` over the union of `breaks` panels (consecutive pairs), refining
/// the panel with the largest error estimate until the total error drops below
/// `max(rel_tol·|I|, abs_tol)`.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Integral> {
    if breaks.len() < 2 {
        return Err(Error::Integration("need at least one panel".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut order = 0;
    let mut value = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        let (v, e) = kronrod(&f, w[0], w[1])?;
        value += v;
        error += e;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
            order,
        });
        order += 1;
    }
    let mut evaluations = 15 * heap.len();
    let mut subdivisions = 0;
    while error > (rel_tol * value.abs()).max(abs_tol) {
        if subdivisions >= MAX_SUBDIVISIONS {
            return Err(Error::Integration(format!(
                "no convergence after {MAX_SUBDIVISIONS} subdivisions (estimate {value:e} ± {error:e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = kronrod(&f, worst.a, mid)?;
        let (v2, e2) = kronrod(&f, mid, worst.b)?;
        evaluations += 30;
        subdivisions += 1;
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        for (a, b, v, e) in [(worst.a, mid, v1, e1), (mid, worst.b, v2, e2)] {
            heap.push(Panel {
                a,
                b,
                value: v,
                error: e,
                order,
            });
            order += 1;
        }
    }
    // Re-sum to shed accumulated rounding from the running updates.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().map(|p| p.value).sum();
    let error = panels.iter().map(|p| p.error).sum();
    Ok(Integral {
        value,
        error,
        evaluations,
    })
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Integral> {
    integrate_panels(f, &[a, b], rel_tol, 0.0)
}

const LINEAR_BREAK_HZ: f64 = 1e-6;
const TAIL_BREAK_HZ: f64 = 1e12;

/// Integrates a one-sided spectral density over `[f_min, f_max]`.
///
/// The body of the band is integrated in `ln f` with one initial panel per
/// decade. A band starting at 0 Hz gets a linear panel below 1 µHz, and an
/// infinite upper limit is handled with the substitution `f = 1/t`, which
/// requires the density to decay at least as fast as `1/f²`.
pub fn band_power<F: Fn(f64) -> f64>(
    psd: F,
    f_min: f64,
    f_max: f64,
    rel_tol: f64,
) -> Result<Integral> {
    if !(f_min >= 0.0 && f_min.is_finite()) || f_max.is_nan() || f_max <= f_min {
        return Err(Error::InvalidGrid(format!(
            "band [{f_min}, {f_max}] must satisfy 0 <= f_min < f_max"
        )));
    }
    let mut total = Integral {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    let mut add = |part: Integral| {
        total.value += part.value;
        total.error += part.error;
        total.evaluations += part.evaluations;
    };

    let mut lo = f_min;
    if f_min < LINEAR_BREAK_HZ {
        let hi = f_max.min(LINEAR_BREAK_HZ);
        add(integrate(&psd, f_min, hi, rel_tol)?);
        lo = hi;
    }
    let hi = f_max.min(TAIL_BREAK_HZ);
    if hi > lo {
        let (u0, u1) = (lo.ln(), hi.ln());
        let decades = ((hi / lo).log10().ceil() as usize).max(1);
        let breaks: Vec<f64> = (0..=decades)
            .map(|i| u0 + (u1 - u0) * i as f64 / decades as f64)
            .collect();
        add(integrate_panels(
            |u| {
                let f = u.exp();
                psd(f) * f
            },
            &breaks,
            rel_tol,
            0.0,
        )?);
    }
    if f_max > TAIL_BREAK_HZ {
        let t_lo = if f_max.is_infinite() { 0.0 } else { 1.0 / f_max };
        add(integrate(
            |t| {
                let f = 1.0 / t;
                psd(f) * f * f
            },
            t_lo,
            1.0 / TAIL_BREAK_HZ,
            rel_tol,
        )?);
    }
    Ok(total)
}
