//! Time-domain synthesis of stationary noise paths.
//!
//! Three synthesisers share the [`SamplePath`] output type:
//!
//! * [`synthesize_path`] runs the exact discretisation of the two-node
//!   photoreceptor SDE (matrix exponential propagator, process covariance from
//!   the stationary Lyapunov solution), so sample moments carry no timestep
//!   bias.
//! * [`synthesize_ou`] is the first-order Ornstein-Uhlenbeck shortcut.
//! * [`synthesize_from_psd`] does random-phase spectral synthesis and serves as
//!   an independent cross-check.
//!
//! The stateful samplers ([`StateSpaceSampler`], [`OuSampler`]) stream samples
//! without storing the path, which is what long event-rate runs use.

mod ou;
mod spectral;
mod state_space;

pub use ou::{synthesize_ou, OuSampler, OuSpec};
pub use spectral::synthesize_from_psd;
pub use state_space::{discretize, synthesize_path, Discretization, StateSpaceSampler};

use crate::error::{check_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthOrigin {
    StateSpace,
    OrnsteinUhlenbeck,
    Spectral,
}

impl SynthOrigin {
    pub fn name(self) -> &'static str {
        match self {
            SynthOrigin::StateSpace => "state-space",
            SynthOrigin::OrnsteinUhlenbeck => "ornstein-uhlenbeck",
            SynthOrigin::Spectral => "spectral",
        }
    }
}

/// Uniformly sampled signal in contrast (log-intensity) units. Sample `k` is
/// taken at `t = k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    dt: f64,
    samples: Vec<f64>,
    seed: u64,
    origin: SynthOrigin,
}

impl SamplePath {
    pub fn new(dt: f64, samples: Vec<f64>, seed: u64, origin: SynthOrigin) -> Result<Self> {
        check_positive("dt", dt)?;
        if samples.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a path needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(k) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::param("samples", format!("sample {k} is not finite")));
        }
        Ok(Self {
            dt,
            samples,
            seed,
            origin,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn origin(&self) -> SynthOrigin {
        self.origin
    }

    /// Simulated span, `len·dt`.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Copy with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

pub(crate) fn check_len(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InsufficientData(format!("n must be >= 2, got {n}")))
    } else {
        Ok(())
    }
}
