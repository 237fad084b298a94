use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_len, SamplePath, SynthOrigin};
use crate::error::{check_non_negative, check_positive, Error, Result};
use crate::rng::{rng_from_seed, NoiseRng};

/// First-order low-pass noise: stationary RMS `sigma` (contrast units) and
/// Lorentzian corner `f_3db` (Hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuSpec {
    pub sigma: f64,
    pub f_3db: f64,
}

impl OuSpec {
    pub fn validate(&self) -> Result<()> {
        check_non_negative("sigma", self.sigma)?;
        check_positive("f_3db", self.f_3db)?;
        Ok(())
    }

    /// One-step autocorrelation `exp(-2π f_3db dt)`.
    pub fn decay(&self, dt: f64) -> f64 {
        (-2.0 * PI * self.f_3db * dt).exp()
    }

    /// One-sided Lorentzian PSD `σ² (2/(π f_3db)) / (1 + (f/f_3db)²)`.
    pub fn psd(&self, f: f64) -> f64 {
        let x = f / self.f_3db;
        self.sigma * self.sigma * 2.0 / (PI * self.f_3db) / (1.0 + x * x)
    }
}

/// Streaming exact OU recursion `x[k+1] = a x[k] + σ√(1-a²) w[k]`.
#[derive(Debug, Clone)]
pub struct OuSampler {
    a: f64,
    innovation: f64,
    state: f64,
    rng: NoiseRng,
}

impl OuSampler {
    pub fn new(spec: OuSpec, dt: f64, seed: u64) -> Result<Self> {
        spec.validate()?;
        check_positive("dt", dt)?;
        let limit = 1.0 / (20.0 * spec.f_3db);
        if dt > limit {
            return Err(Error::TimestepTooLarge {
                dt,
                limit,
                pole: "OU corner",
                pole_hz: spec.f_3db,
            });
        }
        let a = spec.decay(dt);
        let mut rng = rng_from_seed(seed);
        let w: f64 = rng.sample(StandardNormal);
        Ok(Self {
            a,
            innovation: spec.sigma * (1.0 - a * a).sqrt(),
            state: spec.sigma * w,
            rng,
        })
    }

    pub fn decay(&self) -> f64 {
        self.a
    }
}

impl Iterator for OuSampler {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let out = self.state;
        let w: f64 = self.rng.sample(StandardNormal);
        self.state = self.a * self.state + self.innovation * w;
        Some(out)
    }
}

pub fn synthesize_ou(spec: OuSpec, dt: f64, n: usize, seed: u64) -> Result<SamplePath> {
    check_len(n)?;
    let samples = OuSampler::new(spec, dt, seed)?.take(n).collect();
    SamplePath::new(dt, samples, seed, SynthOrigin::OrnsteinUhlenbeck)
}
