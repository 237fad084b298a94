//! Pixel-level noise simulation for dynamic vision sensor (DVS) pixels.
//!
//! The crate is organised around the signal chain of a single pixel:
//!
//! * [`pr_model`] linearises the two-node logarithmic photoreceptor, evaluates
//!   transfer functions and shot-noise spectra, and integrates RMS noise over
//!   a frequency band.
//! * [`synth`] turns those models into sampled time series, either by exact
//!   discretisation of the stochastic state-space system or through a
//!   first-order Ornstein-Uhlenbeck shortcut.
//! * [`event_gen`] runs the DVS change detector (ON/OFF thresholds, reset,
//!   refractory period, leak ramp) over a contrast signal.
//! * [`estimators`] holds Welch PSD estimation, simple path statistics and the
//!   normalised event-rate versus threshold pipeline.
//! * [`sweep`] parses run configurations and executes deterministic parallel
//!   sweeps over operating points, producing CSV tables.

pub mod error;
pub mod estimators;
pub mod event_gen;
pub mod pr_model;
pub mod quadrature;
pub mod rng;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
pub use estimators::{Fig7Point, PsdEstimate, TailFit, Window};
pub use event_gen::{Event, EventGenConfig, EventStream, LeakModel, Polarity};
pub use pr_model::{
    NaturalParams, NoiseSource, NoiseSourceSet, PhotoreceptorModel, PhysicalConstants,
    PixelParams, SpectralResult, StateVector,
};
pub use sweep::{parse_config, Config, RmsRow, SweepRow, SweepSpec};
pub use synth::{OuSpec, SamplePath, SynthOrigin};
