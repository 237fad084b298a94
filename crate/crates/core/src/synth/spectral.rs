use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use super::{check_len, SamplePath, SynthOrigin};
use crate::error::{check_positive, Error, Result};
use crate::rng::rng_from_seed;

/// Linear interpolation of `psd` in `ln f` (linear in `f` on a segment that
/// starts at 0 Hz).
fn interpolate(freqs: &[f64], psd: &[f64], f: f64) -> f64 {
    let i = freqs.partition_point(|&g| g <= f).clamp(1, freqs.len() - 1) - 1;
    let (f0, f1) = (freqs[i], freqs[i + 1]);
    let t = if f0 > 0.0 {
        (f / f0).ln() / (f1 / f0).ln()
    } else {
        (f - f0) / (f1 - f0)
    };
    let t = t.clamp(0.0, 1.0);
    psd[i] + t * (psd[i + 1] - psd[i])
}

/// Random-phase synthesis of a zero-mean path whose periodogram follows the
/// one-sided `psd` on the FFT grid `j/(n·dt)`. The sample variance equals
/// `Σ psd(f_j)·Δf` over the bins exactly.
pub fn synthesize_from_psd(
    freqs: &[f64],
    psd: &[f64],
    dt: f64,
    n: usize,
    seed: u64,
) -> Result<SamplePath> {
    check_len(n)?;
    check_positive("dt", dt)?;
    if freqs.len() < 2 || freqs.len() != psd.len() {
        return Err(Error::InvalidGrid(
            "need at least two frequencies and one PSD value per frequency".into(),
        ));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) || freqs[0] < 0.0 {
        return Err(Error::InvalidGrid("frequencies must be strictly increasing and >= 0".into()));
    }
    if psd.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
        return Err(Error::InvalidGrid("psd values must be finite and >= 0".into()));
    }
    let df = 1.0 / (n as f64 * dt);
    let nyquist = 0.5 / dt;
    let slack = 1e-9;
    if freqs[0] > df * (1.0 + slack) || freqs[freqs.len() - 1] < nyquist * (1.0 - slack) {
        return Err(Error::InvalidGrid(format!(
            "grid [{}, {}] Hz does not cover [{df}, {nyquist}] Hz",
            freqs[0],
            freqs[freqs.len() - 1]
        )));
    }

    let mut rng = rng_from_seed(seed);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    let half = n / 2;
    for j in 1..=half {
        let f = j as f64 * df;
        let s = interpolate(freqs, psd, f.min(freqs[freqs.len() - 1]));
        if j == half && n % 2 == 0 {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            spectrum[j] = Complex64::new(sign * n as f64 * (s * df).sqrt(), 0.0);
        } else {
            let phase = 2.0 * PI * rng.random::<f64>();
            let amp = n as f64 * (0.5 * s * df).sqrt();
            spectrum[j] = Complex64::from_polar(amp, phase);
            spectrum[n - j] = spectrum[j].conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    let samples = spectrum.iter().map(|c| c.re / n as f64).collect();
    SamplePath::new(dt, samples, seed, SynthOrigin::Spectral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_psd_gives_zero_path() {
        let p = synthesize_from_psd(&[0.0, 1e3], &[0.0, 0.0], 1e-3, 256, 1).unwrap();
        assert!(p.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn variance_equals_binned_power() {
        let n = 4096;
        let dt = 1e-3;
        let s0 = 2e-4;
        let p = synthesize_from_psd(&[0.0, 500.0], &[s0, s0], dt, n, 5).unwrap();
        let var = p.samples().iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert_relative_eq!(var, s0 * 500.0, max_relative = 1e-9);
    }

    #[test]
    fn rejects_grid_not_covering_band() {
        assert!(synthesize_from_psd(&[1.0, 100.0], &[1.0, 1.0], 1e-3, 1000, 0).is_err());
        assert!(synthesize_from_psd(&[0.0, 400.0], &[1.0, 1.0], 1e-3, 1000, 0).is_err());
        assert!(synthesize_from_psd(&[0.0, 500.0], &[1.0, -1.0], 1e-3, 1000, 0).is_err());
    }

    #[test]
    fn log_interpolation() {
        let f = [1.0, 100.0];
        let s = [4.0, 2.0];
        assert_relative_eq!(interpolate(&f, &s, 10.0), 3.0);
        assert_relative_eq!(interpolate(&[0.0, 2.0], &[0.0, 2.0], 1.5), 1.5);
    }
}
