//! Noise event rate of a first-order (OU) pixel versus threshold.
//!
//! Everything is expressed in units of the noise corner: the threshold as
//! `r = θ/σ` and the rate as events per corner-frequency cycle. Each `r`
//! point runs its own OU stream seeded from `(seed, index)`, so points can be
//! evaluated in parallel without changing any result.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{check_positive, Error, Result};
use crate::event_gen::{ChangeDetector, EventGenConfig, LeakModel};
use crate::rng::derive_seed;
use crate::synth::{OuSampler, OuSpec};

/// Largest timestep, in corner-frequency cycles, accepted by [`fig7_curve`].
pub const MAX_DT_CYCLES: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig7Point {
    /// Threshold over RMS noise.
    pub r: f64,
    /// Event rate over corner frequency.
    pub rate_norm: f64,
    /// Poisson standard error of `rate_norm`.
    pub stderr: f64,
    pub n_events: u64,
}

impl Fig7Point {
    fn from_count(r: f64, n_events: u64, cycles: f64) -> Self {
        Self {
            r,
            rate_norm: n_events as f64 / cycles,
            stderr: (n_events as f64).sqrt() / cycles,
            n_events,
        }
    }

    /// Points without events carry rate 0 and are never log-transformed.
    pub fn is_empty(&self) -> bool {
        self.n_events == 0
    }
}

fn threshold_config(r: f64) -> EventGenConfig {
    EventGenConfig {
        t_refractory: 0.0,
        leak: LeakModel::none(),
        ..EventGenConfig::symmetric(r)
    }
}

fn validate(f_3db: f64, r_values: &[f64], duration_cycles: f64, dt_cycles: f64) -> Result<usize> {
    check_positive("f_3db", f_3db)?;
    check_positive("duration_cycles", duration_cycles)?;
    check_positive("dt_cycles", dt_cycles)?;
    if dt_cycles > MAX_DT_CYCLES {
        return Err(Error::param(
            "dt_cycles",
            format!("must be <= {MAX_DT_CYCLES}, got {dt_cycles}"),
        ));
    }
    if r_values.is_empty() {
        return Err(Error::param("r_values", "need at least one threshold"));
    }
    for &r in r_values {
        check_positive("r_values", r)?;
    }
    let n = (duration_cycles / dt_cycles).round() as usize;
    if n < 2 {
        return Err(Error::InsufficientData("duration shorter than two samples".into()));
    }
    Ok(n)
}

/// Counts events of an OU path with σ = 1 against thresholds `θ = r`.
pub fn fig7_curve(
    f_3db: f64,
    r_values: &[f64],
    duration_cycles: f64,
    dt_cycles: f64,
    seed: u64,
) -> Result<Vec<Fig7Point>> {
    let n = validate(f_3db, r_values, duration_cycles, dt_cycles)?;
    let dt = dt_cycles / f_3db;
    let spec = OuSpec { sigma: 1.0, f_3db };
    let cycles = n as f64 * dt_cycles;
    r_values
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut sampler = OuSampler::new(spec, dt, derive_seed(seed, i as u64))?;
            let first = sampler.next().unwrap_or(0.0);
            let mut detector = ChangeDetector::new(&threshold_config(r), first);
            let mut count = 0u64;
            for (k, v) in sampler.take(n - 1).enumerate() {
                if let Some((_, c)) = detector.push((k + 1) as f64 * dt, v) {
                    count += c as u64;
                }
            }
            Ok(Fig7Point::from_count(r, count, cycles))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub r: f64,
    /// At `dt_cycles`.
    pub rate_norm_coarse: f64,
    /// At `dt_cycles/2`.
    pub rate_norm_fine: f64,
    pub n_events_fine: u64,
}

impl ConvergenceRow {
    pub fn relative_change(&self) -> f64 {
        if self.rate_norm_fine == 0.0 {
            if self.rate_norm_coarse == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            (self.rate_norm_coarse - self.rate_norm_fine).abs() / self.rate_norm_fine
        }
    }
}

/// Rate at `dt_cycles` versus `dt_cycles/2` on coupled paths: the coarse
/// path is every other sample of the fine one, which is itself an exact OU
/// chain at the coarse step.
pub fn dt_convergence(
    f_3db: f64,
    r_values: &[f64],
    duration_cycles: f64,
    dt_cycles: f64,
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    let n_coarse = validate(f_3db, r_values, duration_cycles, dt_cycles)?;
    let dt_fine = 0.5 * dt_cycles / f_3db;
    let spec = OuSpec { sigma: 1.0, f_3db };
    let cycles = n_coarse as f64 * dt_cycles;
    r_values
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut sampler = OuSampler::new(spec, dt_fine, derive_seed(seed, i as u64))?;
            let first = sampler.next().unwrap_or(0.0);
            let cfg = threshold_config(r);
            let mut fine = ChangeDetector::new(&cfg, first);
            let mut coarse = ChangeDetector::new(&cfg, first);
            let (mut n_fine, mut n_coarse_events) = (0u64, 0u64);
            for (k, v) in sampler.take(2 * n_coarse - 1).enumerate() {
                let idx = k + 1;
                let t = idx as f64 * dt_fine;
                if let Some((_, c)) = fine.push(t, v) {
                    n_fine += c as u64;
                }
                if idx % 2 == 0 {
                    if let Some((_, c)) = coarse.push(t, v) {
                        n_coarse_events += c as u64;
                    }
                }
            }
            Ok(ConvergenceRow {
                r,
                rate_norm_coarse: n_coarse_events as f64 / cycles,
                rate_norm_fine: n_fine as f64 / cycles,
                n_events_fine: n_fine,
            })
        })
        .collect()
}

/// Fit of `ln(rate_norm) = intercept - decay·r²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailFit {
    pub intercept: f64,
    pub decay: f64,
    /// Weighted coefficient of determination.
    pub goodness: f64,
    pub used: usize,
    /// Thresholds left out of the fit for having fewer than the minimum count.
    pub excluded: Vec<f64>,
}

/// Minimum event count for a point to enter [`tail_fit`].
pub const TAIL_MIN_EVENTS: u64 = 100;

/// Weighted least squares of `ln(rate_norm)` on `r²` over points with
/// `r >= r_min`, weighted by event count.
pub fn tail_fit(points: &[Fig7Point], r_min: f64) -> Result<TailFit> {
    let mut excluded = Vec::new();
    let mut xs = Vec::new();
    for p in points.iter().filter(|p| p.r >= r_min) {
        if p.n_events >= TAIL_MIN_EVENTS {
            xs.push((p.r * p.r, p.rate_norm.ln(), p.n_events as f64));
        } else {
            excluded.push(p.r);
        }
    }
    if xs.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "tail fit needs >= 4 points with r >= {r_min} and >= {TAIL_MIN_EVENTS} events, got {}",
            xs.len()
        )));
    }
    let sw: f64 = xs.iter().map(|p| p.2).sum();
    let mx = xs.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = xs.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xs.iter().map(|p| p.2 * (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("tail fit needs distinct thresholds".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let goodness = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(TailFit {
        intercept,
        decay: -slope,
        goodness,
        used: xs.len(),
        excluded,
    })
}

/// Least-squares slope of `ln(rate_norm)` against `ln r` for `r` in
/// `[r_lo, r_hi]`, skipping empty points.
pub fn power_law_slope(points: &[Fig7Point], r_lo: f64, r_hi: f64) -> Result<f64> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.r >= r_lo && p.r <= r_hi && !p.is_empty())
        .map(|p| (p.r.ln(), p.rate_norm.ln()))
        .collect();
    if xy.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need >= 2 non-empty points in r ∈ [{r_lo}, {r_hi}]"
        )));
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

pub fn write_fig7_csv<W: Write>(points: &[Fig7Point], mut out: W) -> io::Result<()> {
    writeln!(out, "r,rate_norm,stderr,n_events")?;
    for p in points {
        writeln!(out, "{},{},{},{}", p.r, p.rate_norm, p.stderr, p.n_events)?;
    }
    Ok(())
}
