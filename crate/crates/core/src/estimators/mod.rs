//! Estimators applied to synthesised paths and event streams.

mod fig7;

pub use fig7::{
    dt_convergence, fig7_curve, power_law_slope, tail_fit, write_fig7_csv, ConvergenceRow,
    Fig7Point, TailFit, MAX_DT_CYCLES, TAIL_MIN_EVENTS,
};

use std::io::{self, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::synth::SamplePath;

/// Segment taper for Welch averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
    Hamming,
}

impl Window {
    pub fn name(self) -> &'static str {
        match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
            Window::Hamming => "hamming",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "rectangular" | "boxcar" => Some(Window::Rectangular),
            "hann" => Some(Window::Hann),
            "hamming" => Some(Window::Hamming),
            _ => None,
        }
    }

    /// Periodic (DFT-even) coefficients.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        let w = |k: usize| {
            let x = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            match self {
                Window::Rectangular => 1.0,
                Window::Hann => 0.5 - 0.5 * x.cos(),
                Window::Hamming => 0.54 - 0.46 * x.cos(),
            }
        };
        (0..n).map(w).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub freqs: Vec<f64>,
    /// One-sided density in squared input units per Hz.
    pub psd: Vec<f64>,
    pub segment_length: usize,
    pub overlap_fraction: f64,
    pub window: Window,
    pub segments: usize,
}

impl PsdEstimate {
    pub fn resolution(&self) -> f64 {
        self.freqs[1] - self.freqs[0]
    }

    /// `Σ psd·Δf`, the variance implied by the estimate.
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.resolution()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "f_hz,psd")?;
        for (f, p) in self.freqs.iter().zip(&self.psd) {
            writeln!(out, "{f},{p}")?;
        }
        Ok(())
    }

    /// Frequency where the estimate first drops to half of its low-frequency
    /// level (mean of bins 1..=3), log-interpolated between bins after a
    /// three-bin running mean.
    pub fn half_power_frequency(&self) -> Option<f64> {
        if self.psd.len() < 8 {
            return None;
        }
        let level = self.psd[1..=3].iter().sum::<f64>() / 3.0;
        let smooth: Vec<f64> = (1..self.psd.len() - 1)
            .map(|k| (self.psd[k - 1] + self.psd[k] + self.psd[k + 1]) / 3.0)
            .collect();
        let half = 0.5 * level;
        for k in 3..smooth.len() {
            if smooth[k] < half {
                let (f0, f1) = (self.freqs[k], self.freqs[k + 1]);
                let (p0, p1) = (smooth[k - 1], smooth[k]);
                let t = (p0 / half).ln() / (p0 / p1).ln();
                return Some(f0 * (f1 / f0).powf(t));
            }
        }
        None
    }
}

/// Welch estimate: mean-removed, tapered segments averaged as one-sided
/// periodograms.
pub fn welch_psd(
    path: &SamplePath,
    segment_length: usize,
    overlap_fraction: f64,
    window: Window,
) -> Result<PsdEstimate> {
    let x = path.samples();
    if segment_length < 4 {
        return Err(Error::param("segment_length", "must be >= 4"));
    }
    if segment_length > x.len() {
        return Err(Error::InsufficientData(format!(
            "segment length {segment_length} exceeds path length {}",
            x.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::param("overlap_fraction", "must be in [0, 1)"));
    }
    let n = segment_length;
    let step = ((n as f64 * (1.0 - overlap_fraction)).round() as usize).max(1);
    let taper = window.coefficients(n);
    let fs = 1.0 / path.dt();
    let norm = fs * taper.iter().map(|w| w * w).sum::<f64>();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let bins = n / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut segments = 0;
    let mut start = 0;
    while start + n <= x.len() {
        let seg = &x[start..start + n];
        let mean = seg.iter().sum::<f64>() / n as f64;
        for ((b, &v), &w) in buf.iter_mut().zip(seg).zip(&taper) {
            *b = Complex64::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += step;
    }
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
            one_sided * a / (norm * segments as f64)
        })
        .collect();
    Ok(PsdEstimate {
        freqs: (0..bins).map(|k| k as f64 * fs / n as f64).collect(),
        psd,
        segment_length,
        overlap_fraction,
        window,
        segments,
    })
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation about the mean (1/(n-1) normalisation).
pub fn rms(path: &SamplePath) -> Result<f64> {
    let x = path.samples();
    if x.len() < 2 {
        return Err(Error::InsufficientData("rms needs at least 2 samples".into()));
    }
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    Ok((ss / (x.len() - 1) as f64).sqrt())
}

/// Normalised autocovariance at `lag` samples.
pub fn autocorr(path: &SamplePath, lag: usize) -> Result<f64> {
    let x = path.samples();
    if x.len() < lag + 2 {
        return Err(Error::InsufficientData(format!(
            "autocorrelation at lag {lag} needs at least {} samples",
            lag + 2
        )));
    }
    let m = mean(x);
    let var: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    if var == 0.0 {
        return Err(Error::UndefinedRatio("constant path has no autocorrelation"));
    }
    let cov: f64 = x.iter().zip(&x[lag..]).map(|(a, b)| (a - m) * (b - m)).sum();
    Ok(cov / var)
}
