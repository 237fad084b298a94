//! DVS change detection on a contrast signal.
//!
//! The pixel memorises a reference level at each event. An ON event fires when
//! the signal has risen by `theta_on` above the reference, an OFF event when it
//! has fallen by `theta_off`. Firing resets the reference to the current value
//! and starts the refractory period; when the refractory period ends the
//! reference is reset again. Junction and parasitic leakage at the change
//! amplifier input appear as a deterministic upward ramp added to the signal.

use std::io::{self, Write};

use crate::error::{check_non_negative, check_positive, Error, Result};
use crate::pr_model::PhysicalConstants;
use crate::synth::SamplePath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    On,
    Off,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        match self {
            Polarity::On => 1,
            Polarity::Off => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub polarity: Polarity,
}

/// Leakage into the change-amplifier input node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakModel {
    /// Junction leakage of the reset switch (A).
    pub i_leak_dark: f64,
    /// Parasitic photocurrent as a fraction of the photocurrent.
    pub eta_parasitic: f64,
    /// Change-amplifier input capacitance (F).
    pub c_amp_in: f64,
}

impl Default for LeakModel {
    fn default() -> Self {
        // About 0.1 Hz of leak events at theta = 0.2.
        Self {
            i_leak_dark: 6e-18,
            eta_parasitic: 1e-10,
            c_amp_in: 10e-15,
        }
    }
}

impl LeakModel {
    pub fn none() -> Self {
        Self {
            i_leak_dark: 0.0,
            eta_parasitic: 0.0,
            c_amp_in: 10e-15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("i_leak_dark", self.i_leak_dark)?;
        check_non_negative("eta_parasitic", self.eta_parasitic)?;
        check_non_negative("c_amp_in", self.c_amp_in)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventGenConfig {
    pub theta_on: f64,
    pub theta_off: f64,
    pub t_refractory: f64,
    pub max_events_per_step: u32,
    pub leak: LeakModel,
}

impl Default for EventGenConfig {
    fn default() -> Self {
        Self {
            theta_on: 0.2,
            theta_off: 0.2,
            t_refractory: 0.0,
            max_events_per_step: 10,
            leak: LeakModel::default(),
        }
    }
}

impl EventGenConfig {
    pub fn symmetric(theta: f64) -> Self {
        Self {
            theta_on: theta,
            theta_off: theta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("theta_on", self.theta_on)?;
        check_positive("theta_off", self.theta_off)?;
        check_non_negative("t_refractory", self.t_refractory)?;
        if self.max_events_per_step == 0 {
            return Err(Error::param("max_events_per_step", "must be >= 1"));
        }
        self.leak.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub events: Vec<Event>,
    /// Simulated span (s).
    pub duration: f64,
    pub config: EventGenConfig,
}

impl EventStream {
    pub fn count(&self, polarity: Option<Polarity>) -> usize {
        match polarity {
            None => self.events.len(),
            Some(p) => self.events.iter().filter(|e| e.polarity == p).count(),
        }
    }

    /// Writes `t_us,polarity` rows with integer-microsecond timestamps.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t_us,polarity")?;
        for e in &self.events {
            writeln!(out, "{},{}", (e.t * 1e6).round() as i64, e.polarity.sign())?;
        }
        Ok(())
    }
}

/// Leak ramp slope in log-units per second:
/// `(i_leak_dark + eta·i_photo) / (c_amp_in · U_T/κ)`.
pub fn leak_slope(leak: &LeakModel, i_photo: f64, constants: &PhysicalConstants) -> Result<f64> {
    leak.validate()?;
    check_non_negative("i_photo", i_photo)?;
    if leak.c_amp_in == 0.0 {
        return Err(Error::param("c_amp_in", "must be > 0 to define a leak slope"));
    }
    let current = leak.i_leak_dark + leak.eta_parasitic * i_photo;
    Ok(current / (leak.c_amp_in * constants.volts_per_log_unit()))
}

/// Streaming change detector. Feed it composite samples in time order.
#[derive(Debug, Clone)]
pub struct ChangeDetector {
    theta_on: f64,
    theta_off: f64,
    t_refractory: f64,
    max_per_step: u32,
    reference: f64,
    refractory_until: Option<f64>,
}

impl ChangeDetector {
    pub fn new(config: &EventGenConfig, initial: f64) -> Self {
        Self {
            theta_on: config.theta_on,
            theta_off: config.theta_off,
            t_refractory: config.t_refractory,
            max_per_step: config.max_events_per_step,
            reference: initial,
            refractory_until: None,
        }
    }

    pub fn reference(&self) -> f64 {
        self.reference
    }

    /// Processes one sample; returns the polarity and number of events fired
    /// at `t`, if any.
    #[inline]
    pub fn push(&mut self, t: f64, value: f64) -> Option<(Polarity, u32)> {
        if let Some(end) = self.refractory_until {
            if t < end {
                return None;
            }
            self.refractory_until = None;
            self.reference = value;
            return None;
        }
        let d = value - self.reference;
        let (polarity, steps) = if d >= self.theta_on {
            (Polarity::On, d / self.theta_on)
        } else if d <= -self.theta_off {
            (Polarity::Off, -d / self.theta_off)
        } else {
            return None;
        };
        self.reference = value;
        if self.t_refractory > 0.0 {
            self.refractory_until = Some(t + self.t_refractory);
        }
        let count = (steps.floor() as u32).clamp(1, self.max_per_step);
        Some((polarity, count))
    }
}

/// Runs the change detector over `path + leak_slope·t + extra_signal(t)`.
pub fn generate_events(
    path: &SamplePath,
    config: &EventGenConfig,
    leak_slope: f64,
    extra_signal: Option<&dyn Fn(f64) -> f64>,
) -> Result<EventStream> {
    config.validate()?;
    check_non_negative("leak_slope", leak_slope)?;
    let composite = |k: usize| {
        let t = path.time(k);
        let extra = extra_signal.map_or(0.0, |f| f(t));
        (t, path.samples()[k] + leak_slope * t + extra)
    };
    let (_, first) = composite(0);
    let mut detector = ChangeDetector::new(config, first);
    let mut events = Vec::new();
    for k in 1..path.len() {
        let (t, s) = composite(k);
        if let Some((polarity, count)) = detector.push(t, s) {
            events.extend(std::iter::repeat_n(Event { t, polarity }, count as usize));
        }
    }
    Ok(EventStream {
        events,
        duration: path.duration(),
        config: *config,
    })
}

/// Events per second, optionally restricted to one polarity.
pub fn event_rate(stream: &EventStream, polarity: Option<Polarity>) -> Result<f64> {
    if !(stream.duration > 0.0) {
        return Err(Error::param("duration", "event rate needs a positive duration"));
    }
    Ok(stream.count(polarity) as f64 / stream.duration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SynthOrigin;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn path(samples: Vec<f64>, dt: f64) -> SamplePath {
        SamplePath::new(dt, samples, 0, SynthOrigin::Spectral).unwrap()
    }

    fn config(theta: f64) -> EventGenConfig {
        EventGenConfig {
            leak: LeakModel::none(),
            ..EventGenConfig::symmetric(theta)
        }
    }

    #[test]
    fn constant_path_gives_no_events() {
        let s = generate_events(&path(vec![0.3; 1000], 1e-3), &config(0.1), 0.0, None).unwrap();
        assert!(s.events.is_empty());
        assert_eq!(event_rate(&s, None).unwrap(), 0.0);
    }

    #[test]
    fn ramp_produces_evenly_spaced_on_events() {
        let p = path(vec![0.0; 10_000], 1e-3);
        let ramp = |t: f64| t;
        let s = generate_events(&p, &config(0.25), 0.0, Some(&ramp)).unwrap();
        assert!((s.events.len() as i64 - 40).abs() <= 1, "{}", s.events.len());
        assert!(s.events.iter().all(|e| e.polarity == Polarity::On));
        for w in s.events.windows(2) {
            assert!((w[1].t - w[0].t - 0.25).abs() <= 1.5e-3);
        }
        assert!((event_rate(&s, None).unwrap() - 4.0).abs() <= 0.1 + 1e-12);
    }

    #[test]
    fn pure_leak_is_periodic() {
        // λ = 0.02 log-units/s and θ = 0.2 give one event every 10 s.
        let dt = 1e-2;
        let p = path(vec![0.0; 10_050], dt);
        let s = generate_events(&p, &config(0.2), 0.02, None).unwrap();
        assert_eq!(s.events.len(), 10);
        let intervals: Vec<f64> = s.events.windows(2).map(|w| w[1].t - w[0].t).collect();
        for iv in &intervals {
            assert!((iv - 10.0).abs() <= dt + 1e-9, "{iv}");
        }
        let spread = intervals.iter().cloned().fold(f64::MIN, f64::max)
            - intervals.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= dt + 1e-9);
        assert_relative_eq!(event_rate(&s, None).unwrap(), 0.1, max_relative = 0.01);
    }

    #[test]
    fn leak_slope_formula() {
        let k = PhysicalConstants::default();
        let none = LeakModel::none();
        assert_eq!(leak_slope(&none, 1e-9, &k).unwrap(), 0.0);
        let leak = LeakModel {
            i_leak_dark: 1e-18,
            eta_parasitic: 1e-6,
            c_amp_in: 20e-15,
        };
        let l0 = leak_slope(&leak, 0.0, &k).unwrap();
        let l1 = leak_slope(&leak, 1e-12, &k).unwrap();
        let l2 = leak_slope(&leak, 2e-12, &k).unwrap();
        assert_relative_eq!(l2 - l0, 2.0 * (l1 - l0), max_relative = 1e-12);
        assert_relative_eq!(l0, 1e-18 / (20e-15 * 0.025 / 0.7), max_relative = 1e-12);
        let zero_cap = LeakModel { c_amp_in: 0.0, ..leak };
        assert!(leak_slope(&zero_cap, 1e-12, &k).is_err());
    }

    #[test]
    fn default_leak_floor_is_about_a_tenth_of_a_hertz() {
        let k = PhysicalConstants::default();
        let lambda = leak_slope(&LeakModel::default(), 1e-8, &k).unwrap();
        let rate = lambda / 0.2;
        assert!(rate > 0.05 && rate < 0.2, "{rate}");
    }

    #[test]
    fn large_step_emits_capped_multiple_events() {
        let p = path(vec![0.0, 0.35, 0.35, -5.0], 1.0);
        let cfg = EventGenConfig {
            max_events_per_step: 4,
            ..config(0.1)
        };
        let s = generate_events(&p, &cfg, 0.0, None).unwrap();
        assert_eq!(s.count(Some(Polarity::On)), 3);
        assert_eq!(s.count(Some(Polarity::Off)), 4);
        assert!(s.events[..3].iter().all(|e| e.t == 1.0));
    }

    #[test]
    fn refractory_period_blocks_and_resets() {
        // Event at t=1, blocked at t=2, reference reset at t=3 (value 1.0),
        // so t=4 at 1.05 is below threshold and t=5 at 1.2 fires.
        let p = path(vec![0.0, 0.5, 2.0, 1.0, 1.05, 1.2], 1.0);
        let cfg = EventGenConfig {
            t_refractory: 1.5,
            ..config(0.1)
        };
        let s = generate_events(&p, &cfg, 0.0, None).unwrap();
        let times: Vec<f64> = s.events.iter().map(|e| e.t).collect();
        assert_eq!(times.len(), 6);
        assert!(times[..5].iter().all(|&t| t == 1.0));
        assert_eq!(times[5], 5.0);
    }

    #[test]
    fn polarity_rates_partition_total() {
        let samples: Vec<f64> = (0..2000).map(|k| (k as f64 * 0.05).sin()).collect();
        let s = generate_events(&path(samples, 1e-3), &config(0.15), 0.0, None).unwrap();
        let on = event_rate(&s, Some(Polarity::On)).unwrap();
        let off = event_rate(&s, Some(Polarity::Off)).unwrap();
        assert_relative_eq!(on + off, event_rate(&s, None).unwrap());
        assert!(on > 0.0 && off > 0.0);
    }

    #[test]
    fn csv_uses_integer_microseconds() {
        let s = EventStream {
            events: vec![
                Event { t: 1.5e-6, polarity: Polarity::On },
                Event { t: 0.25, polarity: Polarity::Off },
            ],
            duration: 1.0,
            config: EventGenConfig::default(),
        };
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t_us,polarity\n2,1\n250000,-1\n");
    }

    #[test]
    fn rejects_invalid_config() {
        let p = path(vec![0.0; 4], 1.0);
        for cfg in [
            EventGenConfig { theta_on: 0.0, ..config(0.1) },
            EventGenConfig { theta_off: -1.0, ..config(0.1) },
            EventGenConfig { t_refractory: -1.0, ..config(0.1) },
            EventGenConfig { max_events_per_step: 0, ..config(0.1) },
        ] {
            assert!(generate_events(&p, &cfg, 0.0, None).is_err());
        }
        let empty = EventStream { events: vec![], duration: 0.0, config: config(0.1) };
        assert!(event_rate(&empty, None).is_err());
    }

    fn random_walk(steps: Vec<f64>) -> SamplePath {
        let mut acc = 0.0;
        let samples = steps
            .into_iter()
            .map(|s| {
                acc += s;
                acc
            })
            .collect();
        path(samples, 1e-3)
    }

    #[test]
    fn ou_event_count_falls_with_threshold() {
        let path = crate::synth::synthesize_ou(
            crate::synth::OuSpec { sigma: 1.0, f_3db: 100.0 },
            1e-4,
            200_000,
            5,
        )
        .unwrap();
        let counts: Vec<usize> = [0.25, 0.5, 1.0, 2.0]
            .iter()
            .map(|&t| generate_events(&path, &config(t), 0.0, None).unwrap().events.len())
            .collect();
        assert!(counts.windows(2).all(|w| w[1] < w[0]), "{counts:?}");
    }

    proptest! {
        #[test]
        fn firing_steps_monotone_in_threshold_for_rising_paths(
            steps in prop::collection::vec(0.0f64..0.3, 2..400),
            theta in 0.02f64..0.5,
            factor in 1.0f64..3.0,
        ) {
            let p = random_walk(steps);
            let single = |t: f64| EventGenConfig { max_events_per_step: 1, ..config(t) };
            let lo = generate_events(&p, &single(theta), 0.0, None).unwrap().events.len();
            let hi = generate_events(&p, &single(theta * factor), 0.0, None).unwrap().events.len();
            prop_assert!(hi <= lo, "theta {} -> {}, {} -> {}", theta, lo, theta * factor, hi);
        }

        #[test]
        fn negation_swaps_polarities(
            steps in prop::collection::vec(-0.3f64..0.3, 2..400),
            theta in 0.02f64..0.5,
        ) {
            let p = random_walk(steps);
            let neg = p.scaled(-1.0);
            let a = generate_events(&p, &config(theta), 0.0, None).unwrap();
            let b = generate_events(&neg, &config(theta), 0.0, None).unwrap();
            prop_assert_eq!(a.count(Some(Polarity::On)), b.count(Some(Polarity::Off)));
            prop_assert_eq!(a.count(Some(Polarity::Off)), b.count(Some(Polarity::On)));
        }

        #[test]
        fn refractory_bounds_event_count(
            steps in prop::collection::vec(-0.5f64..0.5, 2..400),
            refr_steps in 1usize..20,
        ) {
            let p = random_walk(steps);
            let cfg = EventGenConfig { t_refractory: refr_steps as f64 * 1e-3, ..config(0.05) };
            let s = generate_events(&p, &cfg, 0.0, None).unwrap();
            // Bursts sharing a timestamp count once against the refractory bound.
            let mut bursts: Vec<f64> = s.events.iter().map(|e| e.t).collect();
            bursts.dedup();
            let bound = (p.duration() / cfg.t_refractory).floor() as usize + 1;
            prop_assert!(bursts.len() <= bound);
            prop_assert!(s.events.len() <= bound * cfg.max_events_per_step as usize);
            for w in bursts.windows(2) {
                prop_assert!(w[1] - w[0] >= cfg.t_refractory - 1e-12);
            }
            prop_assert!(s.events.iter().all(|e| e.t <= s.duration));
        }

        #[test]
        fn reference_tracks_every_threshold_crossing(
            steps in prop::collection::vec(-0.2f64..0.2, 2..300),
            theta in 0.05f64..0.4,
        ) {
            // Replaying the detector: every sample that deviates by theta from
            // the reference must fire at that sample.
            let p = random_walk(steps);
            let s = generate_events(&p, &config(theta), 0.0, None).unwrap();
            let x = p.samples();
            let mut reference = x[0];
            let mut fired = 0usize;
            for (k, &v) in x.iter().enumerate().skip(1) {
                let t = p.time(k);
                let here = s.events.iter().filter(|e| e.t == t).count();
                if (v - reference).abs() >= theta {
                    prop_assert!(here >= 1, "missed crossing at sample {}", k);
                    reference = v;
                } else {
                    prop_assert_eq!(here, 0);
                }
                fired += here;
            }
            prop_assert_eq!(fired, s.events.len());
        }
    }
}
