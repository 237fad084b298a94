//! Linearised two-node photoreceptor model.
//!
//! The photodiode node `v_d` and the amplifier output node `v_p` are small-signal
//! deviations around the operating point fixed by the photocurrent and the
//! amplifier bias `I_pr`. Around that point the node equations are
//!
//! ```text
//! C_in  dv_d/dt = -g_fb v_d + κ g_fb v_p - I c(t) + i_pd + i_fb
//! C_out dv_p/dt = -g_amp v_d - g_o v_p + i_amp
//! ```
//!
//! with `I = I_p + I_dark`, `g_fb = I/U_T`, `g_amp = κ I_pr/U_T` and
//! `g_o = g_amp/A`. `c(t)` is the log-intensity (contrast) input and the `i_*`
//! terms are white shot-noise currents.

mod noise;
mod system;

pub use noise::{log_grid, NoiseSource, NoiseSourceSet, SourcePsds, SpectralResult};
pub use system::{NaturalParams, StateSpace, TransferGains};

use crate::error::{check_finite, check_non_negative, check_positive, Error, Result};

/// Full band used for "unbounded" RMS figures.
pub const FULL_BAND_HZ: (f64, f64) = (1e-3, 1e7);
/// Lower band edge mirroring a 1 s measurement record.
pub const TRUNCATED_F_MIN_HZ: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Elementary charge (C).
    pub charge: f64,
    /// Thermal voltage (V).
    pub thermal_voltage: f64,
    /// Subthreshold slope factor.
    pub kappa: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            charge: 1.602e-19,
            thermal_voltage: 0.025,
            kappa: 0.7,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        check_positive("charge", self.charge)?;
        check_positive("thermal_voltage", self.thermal_voltage)?;
        check_positive("kappa", self.kappa)?;
        if self.kappa > 1.0 {
            return Err(Error::param("kappa", format!("must be <= 1, got {}", self.kappa)));
        }
        Ok(())
    }

    /// Photoreceptor output volts per log-unit of intensity, `U_T/κ`.
    pub fn volts_per_log_unit(&self) -> f64 {
        self.thermal_voltage / self.kappa
    }
}

/// Converts a photoreceptor voltage to temporal contrast (log-units).
pub fn tc_from_voltage(volts: f64, constants: &PhysicalConstants) -> f64 {
    volts / constants.volts_per_log_unit()
}

pub fn voltage_from_tc(log_units: f64, constants: &PhysicalConstants) -> f64 {
    log_units * constants.volts_per_log_unit()
}

/// Operating point and circuit values of one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelParams {
    /// Photocurrent (A).
    pub i_photo: f64,
    /// Photodiode dark current (A).
    pub i_dark: f64,
    /// Photoreceptor amplifier bias current (A).
    pub i_pr: f64,
    /// Photodiode node capacitance (F).
    pub c_in: f64,
    /// Amplifier output node capacitance (F).
    pub c_out: f64,
    /// Amplifier DC voltage gain.
    pub amp_gain: f64,
    pub constants: PhysicalConstants,
}

impl Default for PixelParams {
    fn default() -> Self {
        Self {
            i_photo: 1e-12,
            i_dark: 10e-15,
            i_pr: 1e-10,
            c_in: 100e-15,
            c_out: 100e-15,
            amp_gain: 100.0,
            constants: PhysicalConstants::default(),
        }
    }
}

impl PixelParams {
    pub fn with_photocurrent(mut self, i_photo: f64) -> Self {
        self.i_photo = i_photo;
        self
    }

    pub fn with_bias(mut self, i_pr: f64) -> Self {
        self.i_pr = i_pr;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        check_non_negative("i_photo", self.i_photo)?;
        check_non_negative("i_dark", self.i_dark)?;
        if self.i_photo + self.i_dark <= 0.0 {
            return Err(Error::param("i_photo", "i_photo + i_dark must be > 0"));
        }
        check_positive("i_pr", self.i_pr)?;
        check_positive("c_in", self.c_in)?;
        check_positive("c_out", self.c_out)?;
        check_finite("amp_gain", self.amp_gain)?;
        if self.amp_gain <= 1.0 {
            return Err(Error::param("amp_gain", format!("must be > 1, got {}", self.amp_gain)));
        }
        Ok(())
    }

    /// Total DC current through the photodiode node.
    pub fn diode_current(&self) -> f64 {
        self.i_photo + self.i_dark
    }

    pub fn g_feedback(&self) -> f64 {
        self.diode_current() / self.constants.thermal_voltage
    }

    pub fn g_amp(&self) -> f64 {
        self.constants.kappa * self.i_pr / self.constants.thermal_voltage
    }

    pub fn g_out(&self) -> f64 {
        self.g_amp() / self.amp_gain
    }
}

/// Small-signal node voltages.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector {
    pub v_d: f64,
    pub v_p: f64,
}

/// A validated pixel together with the noise sources injected into it.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotoreceptorModel {
    params: PixelParams,
    sources: NoiseSourceSet,
}

impl PhotoreceptorModel {
    /// Builds the model with every device contributing full shot noise.
    pub fn new(params: PixelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            sources: NoiseSourceSet::shot(&params),
            params,
        })
    }

    pub fn with_sources(mut self, sources: NoiseSourceSet) -> Result<Self> {
        sources.validate()?;
        self.sources = sources;
        Ok(self)
    }

    pub fn params(&self) -> &PixelParams {
        &self.params
    }

    pub fn sources(&self) -> &NoiseSourceSet {
        &self.sources
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.params.constants
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tc_conversion_anchor_values() {
        let k = PhysicalConstants::default();
        assert_abs_diff_eq!(tc_from_voltage(2e-3, &k), 0.056, epsilon = 1e-12);
        assert_abs_diff_eq!(tc_from_voltage(0.7e-3, &k), 0.0196, epsilon = 1e-12);
        assert_eq!(tc_from_voltage(0.0, &k), 0.0);
    }

    #[test]
    fn tc_round_trip() {
        let k = PhysicalConstants {
            kappa: 0.83,
            ..Default::default()
        };
        for v in [1e-6, 3.3e-3, -0.02, 0.5] {
            assert_abs_diff_eq!(voltage_from_tc(tc_from_voltage(v, &k), &k), v, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_invalid_params() {
        let ok = PixelParams::default();
        assert!(ok.validate().is_ok());
        let cases = [
            PixelParams { i_photo: -1e-12, ..ok },
            PixelParams { i_photo: 0.0, i_dark: 0.0, ..ok },
            PixelParams { i_pr: 0.0, ..ok },
            PixelParams { c_in: f64::NAN, ..ok },
            PixelParams { c_out: 0.0, ..ok },
            PixelParams { amp_gain: 1.0, ..ok },
            PixelParams {
                constants: PhysicalConstants { kappa: 1.2, ..Default::default() },
                ..ok
            },
        ];
        for p in cases {
            assert!(PhotoreceptorModel::new(p).is_err(), "{p:?} accepted");
        }
        // Dark current alone keeps the operating point defined.
        assert!(PixelParams { i_photo: 0.0, ..ok }.validate().is_ok());
    }
}
