use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_len, SamplePath, SynthOrigin};
use crate::error::{check_positive, Error, Result};
use crate::pr_model::PhotoreceptorModel;
use crate::rng::{rng_from_seed, NoiseRng};

/// Exact one-step form `x[k+1] = Φ x[k] + e[k]`, `e ~ N(0, Q_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub dt: f64,
    pub propagator: Matrix2<f64>,
    pub process_covariance: Matrix2<f64>,
    pub stationary_covariance: Matrix2<f64>,
    process_factor: Matrix2<f64>,
    stationary_factor: Matrix2<f64>,
}

/// Lower Cholesky factor of a 2×2 positive semidefinite matrix, clamping
/// round-off negatives to zero.
fn cholesky_psd(m: &Matrix2<f64>) -> Matrix2<f64> {
    let l11 = m[(0, 0)].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { m[(1, 0)] / l11 } else { 0.0 };
    let l22 = (m[(1, 1)] - l21 * l21).max(0.0).sqrt();
    Matrix2::new(l11, 0.0, l21, l22)
}

/// Exact discretisation at timestep `dt`. The process covariance is
/// `P - Φ P Φᵀ` with `P` the continuous stationary covariance, which makes
/// `P` an exact fixed point of the discrete recursion.
pub fn discretize(model: &PhotoreceptorModel, dt: f64) -> Result<Discretization> {
    check_positive("dt", dt)?;
    let np = model.natural_params();
    let limit = 0.1 / np.f_n;
    if dt > limit {
        return Err(Error::TimestepTooLarge {
            dt,
            limit,
            pole: "natural frequency",
            pole_hz: np.f_n,
        });
    }
    let a = model.system_matrices().dynamics;
    let phi = (a * dt).exp();
    let p = model.stationary_covariance()?;
    let mut qd = p - phi * p * phi.transpose();
    qd = 0.5 * (qd + qd.transpose());
    Ok(Discretization {
        dt,
        propagator: phi,
        process_covariance: qd,
        stationary_covariance: p,
        process_factor: cholesky_psd(&qd),
        stationary_factor: cholesky_psd(&p),
    })
}

/// Streams `v_p` of the exact discrete chain, in contrast units (divided by
/// `U_T/κ`), starting from a stationary draw.
#[derive(Debug, Clone)]
pub struct StateSpaceSampler {
    phi: Matrix2<f64>,
    factor: Matrix2<f64>,
    state: Vector2<f64>,
    to_contrast: f64,
    rng: NoiseRng,
}

impl StateSpaceSampler {
    pub fn new(model: &PhotoreceptorModel, dt: f64, seed: u64) -> Result<Self> {
        let disc = discretize(model, dt)?;
        Ok(Self::from_discretization(
            &disc,
            1.0 / model.constants().volts_per_log_unit(),
            seed,
        ))
    }

    pub fn from_discretization(disc: &Discretization, to_contrast: f64, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let w = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        Self {
            phi: disc.propagator,
            factor: disc.process_factor,
            state: disc.stationary_factor * w,
            to_contrast,
            rng,
        }
    }

    pub fn state(&self) -> Vector2<f64> {
        self.state
    }
}

impl Iterator for StateSpaceSampler {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let out = self.state[1] * self.to_contrast;
        let w0: f64 = self.rng.sample(StandardNormal);
        let w1: f64 = self.rng.sample(StandardNormal);
        let (x, l) = (&self.state, &self.factor);
        let p = &self.phi;
        let v_d = p[(0, 0)] * x[0] + p[(0, 1)] * x[1] + l[(0, 0)] * w0;
        let v_p = p[(1, 0)] * x[0] + p[(1, 1)] * x[1] + l[(1, 0)] * w0 + l[(1, 1)] * w1;
        self.state = Vector2::new(v_d, v_p);
        Some(out)
    }
}

pub fn synthesize_path(
    model: &PhotoreceptorModel,
    dt: f64,
    n: usize,
    seed: u64,
) -> Result<SamplePath> {
    check_len(n)?;
    let samples = StateSpaceSampler::new(model, dt, seed)?.take(n).collect();
    SamplePath::new(dt, samples, seed, SynthOrigin::StateSpace)
}
