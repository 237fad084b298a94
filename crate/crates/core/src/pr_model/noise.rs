use super::PhotoreceptorModel;
use super::PixelParams;
use crate::error::{check_non_negative, Error, Result};
use crate::quadrature::{band_power, DEFAULT_REL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseSource {
    /// Photon and dark-current shot noise of the photodiode.
    Photodiode,
    /// Channel shot noise of the feedback transistor.
    Feedback,
    /// Shot noise of the amplifier input device and its bias transistor.
    Amplifier,
}

impl NoiseSource {
    pub const ALL: [NoiseSource; 3] = [
        NoiseSource::Photodiode,
        NoiseSource::Feedback,
        NoiseSource::Amplifier,
    ];
}

/// One-sided current-noise PSDs (A²/Hz) of the pixel devices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSourceSet {
    pub s_pd: f64,
    pub s_fb: f64,
    pub s_amp: f64,
}

impl NoiseSourceSet {
    /// Full shot noise: `2qI` for the photodiode and the feedback device, and
    /// `2·2qI_pr` for the two devices carrying the amplifier bias.
    pub fn shot(params: &PixelParams) -> Self {
        let q = params.constants.charge;
        let i = params.diode_current();
        Self {
            s_pd: 2.0 * q * i,
            s_fb: 2.0 * q * i,
            s_amp: 2.0 * 2.0 * q * params.i_pr,
        }
    }

    pub fn zero() -> Self {
        Self {
            s_pd: 0.0,
            s_fb: 0.0,
            s_amp: 0.0,
        }
    }

    pub fn get(&self, source: NoiseSource) -> f64 {
        match source {
            NoiseSource::Photodiode => self.s_pd,
            NoiseSource::Feedback => self.s_fb,
            NoiseSource::Amplifier => self.s_amp,
        }
    }

    /// Keeps `source` and silences the rest.
    pub fn only(&self, source: NoiseSource) -> Self {
        let mut out = Self::zero();
        match source {
            NoiseSource::Photodiode => out.s_pd = self.s_pd,
            NoiseSource::Feedback => out.s_fb = self.s_fb,
            NoiseSource::Amplifier => out.s_amp = self.s_amp,
        }
        out
    }

    pub fn is_silent(&self) -> bool {
        self.s_pd == 0.0 && self.s_fb == 0.0 && self.s_amp == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        check_non_negative("s_pd", self.s_pd)?;
        check_non_negative("s_fb", self.s_fb)?;
        check_non_negative("s_amp", self.s_amp)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourcePsds {
    pub photodiode: Vec<f64>,
    pub feedback: Vec<f64>,
    pub amplifier: Vec<f64>,
}

impl SourcePsds {
    pub fn get(&self, source: NoiseSource) -> &[f64] {
        match source {
            NoiseSource::Photodiode => &self.photodiode,
            NoiseSource::Feedback => &self.feedback,
            NoiseSource::Amplifier => &self.amplifier,
        }
    }
}

/// Output-referred noise spectrum sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub freqs: Vec<f64>,
    /// One-sided PSD of `v_p` (V²/Hz).
    pub psd_total: Vec<f64>,
    pub psd_by_source: SourcePsds,
    pub f_min: f64,
    pub f_max: f64,
    /// RMS of `v_p` over `[f_min, f_max]`, when requested.
    pub v_rms: Option<f64>,
}

impl PhotoreceptorModel {
    /// Per-source output PSD at one frequency, `[photodiode, feedback, amplifier]`.
    pub fn psd_components(&self, f: f64) -> Result<[f64; 3]> {
        let g = self.transfer_at(f)?;
        let hin = g.input_node.norm_sqr();
        Ok([
            self.sources.s_pd * hin,
            self.sources.s_fb * hin,
            self.sources.s_amp * g.output_node.norm_sqr(),
        ])
    }

    pub fn psd_at(&self, f: f64) -> Result<f64> {
        Ok(self.psd_components(f)?.iter().sum())
    }

    pub fn output_noise_psd(&self, freqs: &[f64]) -> Result<SpectralResult> {
        validate_grid(freqs)?;
        let mut by = SourcePsds::default();
        let mut total = Vec::with_capacity(freqs.len());
        for &f in freqs {
            let [pd, fb, amp] = self.psd_components(f)?;
            by.photodiode.push(pd);
            by.feedback.push(fb);
            by.amplifier.push(amp);
            total.push(pd + fb + amp);
        }
        Ok(SpectralResult {
            freqs: freqs.to_vec(),
            psd_total: total,
            psd_by_source: by,
            f_min: freqs[0],
            f_max: freqs[freqs.len() - 1],
            v_rms: None,
        })
    }

    /// PSD on `freqs` plus the RMS over `[f_min, f_max]`.
    pub fn spectrum(&self, freqs: &[f64], f_min: f64, f_max: f64) -> Result<SpectralResult> {
        let mut out = self.output_noise_psd(freqs)?;
        out.f_min = f_min;
        out.f_max = f_max;
        out.v_rms = Some(self.rms_noise(f_min, f_max)?);
        Ok(out)
    }

    /// Band power of the output noise due to the sources selected by `mask`.
    fn band_power_of(&self, f_min: f64, f_max: f64, mask: [bool; 3]) -> Result<f64> {
        let integral = band_power(
            |f| match self.psd_components(f) {
                Ok(c) => c.iter().zip(mask).filter(|(_, m)| *m).map(|(v, _)| v).sum(),
                Err(_) => f64::NAN,
            },
            f_min,
            f_max,
            DEFAULT_REL_TOL,
        )?;
        Ok(integral.value)
    }

    /// Mean-square output noise (V²) over the band.
    pub fn noise_power(&self, f_min: f64, f_max: f64) -> Result<f64> {
        self.band_power_of(f_min, f_max, [true; 3])
    }

    pub fn noise_power_of(&self, source: NoiseSource, f_min: f64, f_max: f64) -> Result<f64> {
        let mask = NoiseSource::ALL.map(|s| s == source);
        self.band_power_of(f_min, f_max, mask)
    }

    /// RMS output noise voltage over `[f_min, f_max]` (V).
    pub fn rms_noise(&self, f_min: f64, f_max: f64) -> Result<f64> {
        Ok(self.noise_power(f_min, f_max)?.sqrt())
    }

    /// Fraction of band-integrated output noise power due to photodiode shot
    /// noise.
    pub fn shot_noise_fraction(&self, f_min: f64, f_max: f64) -> Result<f64> {
        let total = self.noise_power(f_min, f_max)?;
        if total <= 0.0 {
            return Err(Error::UndefinedRatio("total output noise power is zero"));
        }
        let pd = self.noise_power_of(NoiseSource::Photodiode, f_min, f_max)?;
        Ok((pd / total).clamp(0.0, 1.0))
    }
}

fn validate_grid(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if freqs.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::InvalidGrid("frequencies must be finite and >= 0".into()));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("frequencies must be strictly increasing".into()));
    }
    Ok(())
}

/// `n_per_decade` log-spaced points from `f_lo` to `f_hi` inclusive.
pub fn log_grid(f_lo: f64, f_hi: f64, n_per_decade: usize) -> Vec<f64> {
    let decades = (f_hi / f_lo).log10();
    let n = ((decades * n_per_decade as f64).round() as usize).max(1);
    (0..=n)
        .map(|i| f_lo * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}
