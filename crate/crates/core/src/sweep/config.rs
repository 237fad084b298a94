//! `key = value` run configuration.
//!
//! Lists are comma separated and `#` starts a comment. Unknown keys are
//! rejected. [`Config::entries`] lists every effective value in a fixed order
//! and is echoed at the top of each CSV; parsing that echo reproduces the
//! configuration exactly.

use crate::error::{Error, Result};
use crate::estimators::Window;
use crate::event_gen::EventGenConfig;
use crate::pr_model::{log_grid, PixelParams};

#[derive(Debug, Clone, PartialEq)]
pub enum PhotoGrid {
    /// `per_decade` log-spaced points from `min` to `max` inclusive.
    Range { min: f64, max: f64, per_decade: usize },
    Values(Vec<f64>),
}

impl PhotoGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            PhotoGrid::Range { min, max, per_decade } => log_grid(*min, *max, *per_decade),
            PhotoGrid::Values(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DurationRule {
    /// `max(1e4 cycles of the slowest pole, 10 s, 10 leak periods)`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub i_photo: PhotoGrid,
    pub i_pr_values: Vec<f64>,
    pub theta_values: Vec<f64>,
    pub f_min_values: Vec<f64>,
    pub f_max: f64,
    pub duration: DurationRule,
    /// Samples per natural-frequency period.
    pub dt_rule: f64,
    pub max_samples: f64,
    pub master_seed: u64,
    /// 0 lets the thread pool decide.
    pub threads: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            i_photo: PhotoGrid::Range {
                min: 1e-14,
                max: 1e-8,
                per_decade: 10,
            },
            i_pr_values: vec![1e-11, 10f64.powf(-10.5), 1e-10],
            theta_values: vec![0.2],
            f_min_values: vec![1e-3, 1.0],
            f_max: 1e7,
            duration: DurationRule::Auto,
            dt_rule: 50.0,
            max_samples: 2e9,
            master_seed: 1,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig7Spec {
    pub f_3db: f64,
    pub r_values: Vec<f64>,
    pub duration_cycles: f64,
    pub dt_cycles: f64,
}

impl Default for Fig7Spec {
    fn default() -> Self {
        Self {
            f_3db: 100.0,
            r_values: vec![0.5, 0.7, 1.0, 1.4, 1.8, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0],
            duration_cycles: 1e5,
            dt_cycles: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdMethod {
    /// Evaluate the model spectrum on a log grid.
    Model,
    /// Welch estimate from a synthesised path.
    Welch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdSpec {
    pub i_photo: f64,
    pub i_pr: f64,
    pub method: PsdMethod,
    pub f_lo: f64,
    pub f_hi: f64,
    pub points_per_decade: usize,
    pub samples: usize,
    pub segment_length: usize,
    pub overlap: f64,
    pub window: Window,
}

impl Default for PsdSpec {
    fn default() -> Self {
        Self {
            i_photo: 1e-12,
            i_pr: 1e-10,
            method: PsdMethod::Model,
            f_lo: 1e-2,
            f_hi: 1e6,
            points_per_decade: 20,
            samples: 1 << 20,
            segment_length: 1 << 14,
            overlap: 0.5,
            window: Window::Hann,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthSource {
    Pixel,
    Ou,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub source: SynthSource,
    pub i_photo: f64,
    pub i_pr: f64,
    pub ou_sigma: f64,
    pub ou_f3db: f64,
    pub samples: usize,
    /// `None` derives the step from `dt_rule`.
    pub dt: Option<f64>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            source: SynthSource::Pixel,
            i_photo: 1e-12,
            i_pr: 1e-10,
            ou_sigma: 1.0,
            ou_f3db: 100.0,
            samples: 100_000,
            dt: None,
        }
    }
}

/// Everything a CLI run needs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub pixel: PixelParams,
    pub events: EventGenConfig,
    pub sweep: SweepSpec,
    pub fig7: Fig7Spec,
    pub psd: PsdSpec,
    pub synth: SynthSpec,
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("expected a number, got `{}`", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a finite number, got `{}`", s.trim()))
    }
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(parse_f64).collect()
}

fn parse_uint(s: &str) -> std::result::Result<u64, String> {
    let t = s.trim();
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    // Accept integral scientific notation such as 1e6.
    match t.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63) => Ok(v as u64),
        _ => Err(format!("expected a non-negative integer, got `{t}`")),
    }
}

impl Config {
    /// Effective configuration as `(key, value)` pairs. `threads` is left out
    /// because it never changes results.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.pixel;
        let e = &self.events;
        let s = &self.sweep;
        let mut out = vec![
            ("kappa", p.constants.kappa.to_string()),
            ("thermal_voltage", p.constants.thermal_voltage.to_string()),
            ("electron_charge", p.constants.charge.to_string()),
            ("i_dark", p.i_dark.to_string()),
            ("c_in", p.c_in.to_string()),
            ("c_out", p.c_out.to_string()),
            ("amp_gain", p.amp_gain.to_string()),
            ("t_refractory", e.t_refractory.to_string()),
            ("max_events_per_step", e.max_events_per_step.to_string()),
            ("i_leak_dark", e.leak.i_leak_dark.to_string()),
            ("eta_parasitic", e.leak.eta_parasitic.to_string()),
            ("c_amp_in", e.leak.c_amp_in.to_string()),
        ];
        match &s.i_photo {
            PhotoGrid::Range { min, max, per_decade } => {
                out.push(("i_photo_min", min.to_string()));
                out.push(("i_photo_max", max.to_string()));
                out.push(("i_photo_per_decade", per_decade.to_string()));
            }
            PhotoGrid::Values(v) => out.push(("i_photo_values", fmt_list(v))),
        }
        out.extend([
            ("i_pr_values", fmt_list(&s.i_pr_values)),
            ("theta_values", fmt_list(&s.theta_values)),
            ("f_min_values", fmt_list(&s.f_min_values)),
            ("f_max", s.f_max.to_string()),
            (
                "duration",
                match s.duration {
                    DurationRule::Auto => "auto".to_string(),
                    DurationRule::Fixed(d) => d.to_string(),
                },
            ),
            ("dt_rule", s.dt_rule.to_string()),
            ("max_samples", s.max_samples.to_string()),
            ("master_seed", s.master_seed.to_string()),
            ("fig7_f3db", self.fig7.f_3db.to_string()),
            ("fig7_r_values", fmt_list(&self.fig7.r_values)),
            ("fig7_duration_cycles", self.fig7.duration_cycles.to_string()),
            ("fig7_dt_cycles", self.fig7.dt_cycles.to_string()),
        ]);
        let q = &self.psd;
        out.extend([
            ("psd_i_photo", q.i_photo.to_string()),
            ("psd_i_pr", q.i_pr.to_string()),
            (
                "psd_method",
                match q.method {
                    PsdMethod::Model => "model",
                    PsdMethod::Welch => "welch",
                }
                .to_string(),
            ),
            ("psd_f_lo", q.f_lo.to_string()),
            ("psd_f_hi", q.f_hi.to_string()),
            ("psd_points_per_decade", q.points_per_decade.to_string()),
            ("psd_samples", q.samples.to_string()),
            ("psd_segment_length", q.segment_length.to_string()),
            ("psd_overlap", q.overlap.to_string()),
            ("psd_window", q.window.name().to_string()),
        ]);
        let y = &self.synth;
        out.extend([
            (
                "synth_source",
                match y.source {
                    SynthSource::Pixel => "pixel",
                    SynthSource::Ou => "ou",
                }
                .to_string(),
            ),
            ("synth_i_photo", y.i_photo.to_string()),
            ("synth_i_pr", y.i_pr.to_string()),
            ("synth_ou_sigma", y.ou_sigma.to_string()),
            ("synth_ou_f3db", y.ou_f3db.to_string()),
            ("synth_samples", y.samples.to_string()),
            ("synth_dt", y.dt.map_or("auto".to_string(), |d| d.to_string())),
        ]);
        out
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        let p = &mut self.pixel;
        let e = &mut self.events;
        let s = &mut self.sweep;
        match key {
            "kappa" => p.constants.kappa = parse_f64(v)?,
            "thermal_voltage" => p.constants.thermal_voltage = parse_f64(v)?,
            "electron_charge" => p.constants.charge = parse_f64(v)?,
            "i_dark" => p.i_dark = parse_f64(v)?,
            "c_in" => p.c_in = parse_f64(v)?,
            "c_out" => p.c_out = parse_f64(v)?,
            "amp_gain" => p.amp_gain = parse_f64(v)?,
            "t_refractory" => e.t_refractory = parse_f64(v)?,
            "max_events_per_step" => {
                e.max_events_per_step =
                    u32::try_from(parse_uint(v)?).map_err(|_| "value too large".to_string())?
            }
            "i_leak_dark" => e.leak.i_leak_dark = parse_f64(v)?,
            "eta_parasitic" => e.leak.eta_parasitic = parse_f64(v)?,
            "c_amp_in" => e.leak.c_amp_in = parse_f64(v)?,
            "i_photo_min" | "i_photo_max" | "i_photo_per_decade" => {
                let (mut min, mut max, mut per) = match s.i_photo {
                    PhotoGrid::Range { min, max, per_decade } => (min, max, per_decade),
                    PhotoGrid::Values(_) => (1e-14, 1e-8, 10),
                };
                match key {
                    "i_photo_min" => min = parse_f64(v)?,
                    "i_photo_max" => max = parse_f64(v)?,
                    _ => per = parse_uint(v)? as usize,
                }
                s.i_photo = PhotoGrid::Range { min, max, per_decade: per };
            }
            "i_photo_values" => s.i_photo = PhotoGrid::Values(parse_list(v)?),
            "i_pr_values" => s.i_pr_values = parse_list(v)?,
            "theta_values" => s.theta_values = parse_list(v)?,
            "f_min_values" => s.f_min_values = parse_list(v)?,
            "f_max" => s.f_max = parse_f64(v)?,
            "duration" => {
                s.duration = if v == "auto" {
                    DurationRule::Auto
                } else {
                    DurationRule::Fixed(parse_f64(v)?)
                }
            }
            "dt_rule" => s.dt_rule = parse_f64(v)?,
            "max_samples" => s.max_samples = parse_f64(v)?,
            "master_seed" => s.master_seed = parse_uint(v)?,
            "threads" => s.threads = parse_uint(v)? as usize,
            "fig7_f3db" => self.fig7.f_3db = parse_f64(v)?,
            "fig7_r_values" => self.fig7.r_values = parse_list(v)?,
            "fig7_duration_cycles" => self.fig7.duration_cycles = parse_f64(v)?,
            "fig7_dt_cycles" => self.fig7.dt_cycles = parse_f64(v)?,
            "psd_i_photo" => self.psd.i_photo = parse_f64(v)?,
            "psd_i_pr" => self.psd.i_pr = parse_f64(v)?,
            "psd_method" => {
                self.psd.method = match v {
                    "model" => PsdMethod::Model,
                    "welch" => PsdMethod::Welch,
                    _ => return Err(format!("expected `model` or `welch`, got `{v}`")),
                }
            }
            "psd_f_lo" => self.psd.f_lo = parse_f64(v)?,
            "psd_f_hi" => self.psd.f_hi = parse_f64(v)?,
            "psd_points_per_decade" => self.psd.points_per_decade = parse_uint(v)? as usize,
            "psd_samples" => self.psd.samples = parse_uint(v)? as usize,
            "psd_segment_length" => self.psd.segment_length = parse_uint(v)? as usize,
            "psd_overlap" => self.psd.overlap = parse_f64(v)?,
            "psd_window" => {
                self.psd.window =
                    Window::from_name(v).ok_or_else(|| format!("unknown window `{v}`"))?
            }
            "synth_source" => {
                self.synth.source = match v {
                    "pixel" => SynthSource::Pixel,
                    "ou" => SynthSource::Ou,
                    _ => return Err(format!("expected `pixel` or `ou`, got `{v}`")),
                }
            }
            "synth_i_photo" => self.synth.i_photo = parse_f64(v)?,
            "synth_i_pr" => self.synth.i_pr = parse_f64(v)?,
            "synth_ou_sigma" => self.synth.ou_sigma = parse_f64(v)?,
            "synth_ou_f3db" => self.synth.ou_f3db = parse_f64(v)?,
            "synth_samples" => self.synth.samples = parse_uint(v)? as usize,
            "synth_dt" => {
                self.synth.dt = if v == "auto" { None } else { Some(parse_f64(v)?) }
            }
            _ => return Err("unknown key".to_string()),
        }
        Ok(())
    }

    /// Checks every invariant; failures name the offending key.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        fn require(ok: bool, key: &'static str, msg: &str) -> std::result::Result<(), (&'static str, String)> {
            if ok { Ok(()) } else { Err((key, msg.to_string())) }
        }
        let wrap = |r: Result<()>| {
            r.map_err(|err| match err {
                Error::InvalidParameter { name, reason } => (name, reason),
                other => ("config", other.to_string()),
            })
        };
        wrap(self.pixel.validate())?;
        wrap(self.events.validate())?;
        let s = &self.sweep;
        match &s.i_photo {
            PhotoGrid::Range { min, max, per_decade } => {
                require(*min > 0.0 && max >= min, "i_photo_min", "need 0 < i_photo_min <= i_photo_max")?;
                require(*per_decade >= 1, "i_photo_per_decade", "must be >= 1")?;
            }
            PhotoGrid::Values(v) => {
                require(!v.is_empty(), "i_photo_values", "must not be empty")?;
                require(v.iter().all(|&x| x >= 0.0), "i_photo_values", "must be >= 0")?;
            }
        }
        require(!s.i_pr_values.is_empty(), "i_pr_values", "must not be empty")?;
        require(s.i_pr_values.iter().all(|&x| x > 0.0), "i_pr_values", "must be > 0")?;
        require(!s.theta_values.is_empty(), "theta_values", "must not be empty")?;
        require(s.theta_values.iter().all(|&x| x > 0.0), "theta_values", "must be > 0")?;
        require(!s.f_min_values.is_empty(), "f_min_values", "must not be empty")?;
        require(
            s.f_min_values.iter().all(|&x| x >= 0.0 && x < s.f_max),
            "f_min_values",
            "need 0 <= f_min < f_max",
        )?;
        if let DurationRule::Fixed(d) = s.duration {
            require(d > 0.0, "duration", "must be > 0")?;
        }
        require(s.dt_rule >= 20.0, "dt_rule", "must be >= 20")?;
        require(s.max_samples >= 2.0, "max_samples", "must be >= 2")?;
        let f = &self.fig7;
        require(f.f_3db > 0.0, "fig7_f3db", "must be > 0")?;
        require(
            !f.r_values.is_empty() && f.r_values.iter().all(|&r| r > 0.0),
            "fig7_r_values",
            "need at least one value, all > 0",
        )?;
        require(f.duration_cycles > 0.0, "fig7_duration_cycles", "must be > 0")?;
        require(
            f.dt_cycles > 0.0 && f.dt_cycles <= crate::estimators::MAX_DT_CYCLES,
            "fig7_dt_cycles",
            "must be in (0, 0.02]",
        )?;
        let q = &self.psd;
        require(q.f_lo > 0.0 && q.f_hi > q.f_lo, "psd_f_lo", "need 0 < psd_f_lo < psd_f_hi")?;
        require(q.points_per_decade >= 1, "psd_points_per_decade", "must be >= 1")?;
        require(q.i_pr > 0.0, "psd_i_pr", "must be > 0")?;
        require(q.i_photo >= 0.0, "psd_i_photo", "must be >= 0")?;
        require((0.0..1.0).contains(&q.overlap), "psd_overlap", "must be in [0, 1)")?;
        require(
            q.segment_length >= 4 && q.segment_length <= q.samples,
            "psd_segment_length",
            "need 4 <= psd_segment_length <= psd_samples",
        )?;
        let y = &self.synth;
        require(y.samples >= 2, "synth_samples", "must be >= 2")?;
        require(y.i_pr > 0.0, "synth_i_pr", "must be > 0")?;
        require(y.i_photo >= 0.0, "synth_i_photo", "must be >= 0")?;
        require(y.ou_sigma >= 0.0, "synth_ou_sigma", "must be >= 0")?;
        require(y.ou_f3db > 0.0, "synth_ou_f3db", "must be > 0")?;
        if let Some(dt) = y.dt {
            require(dt > 0.0, "synth_dt", "must be > 0")?;
        }
        Ok(())
    }
}

/// Parses configuration text on top of the defaults and validates the result.
pub fn parse_config(text: &str) -> Result<Config> {
    let mut cfg = Config::default();
    let mut lines_of: Vec<(&'static str, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            key: line.to_string(),
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        cfg.set(key, value).map_err(|message| Error::Config {
            line: line_no,
            key: key.to_string(),
            message,
        })?;
        if let Some((k, _)) = cfg.entries().into_iter().find(|(k, _)| *k == key) {
            lines_of.push((k, line_no));
        }
    }
    cfg.validate().map_err(|(key, message)| Error::Config {
        line: lines_of
            .iter()
            .rev()
            .find(|(k, _)| *k == key)
            .map_or(0, |(_, l)| *l),
        key: key.to_string(),
        message,
    })?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_valid_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.sweep.i_photo.values().len(), 61);
        let cfg = parse_config("# only a comment\n\n   \n").unwrap();
        assert_eq!(cfg, Config::default());
    }

    #[test]
    fn theta_presets() {
        let cfg = parse_config("theta_values = 0.15, 0.5").unwrap();
        assert_eq!(cfg.sweep.theta_values, vec![0.15, 0.5]);
    }

    #[test]
    fn dt_rule_below_twenty_is_rejected() {
        match parse_config("\ndt_rule = 5") {
            Err(Error::Config { line, key, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(key, "dt_rule");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_and_type_errors_name_key_and_line() {
        match parse_config("kappa = 0.7\nbogus = 1") {
            Err(Error::Config { line: 2, key, message }) => {
                assert_eq!(key, "bogus");
                assert!(message.contains("unknown"));
            }
            other => panic!("{other:?}"),
        }
        match parse_config("master_seed = -3") {
            Err(Error::Config { line: 1, key, .. }) => assert_eq!(key, "master_seed"),
            other => panic!("{other:?}"),
        }
        assert!(parse_config("no equals sign").is_err());
        assert!(parse_config("kappa = 1.5").is_err());
        assert!(parse_config("fig7_dt_cycles = 0.05").is_err());
    }

    #[test]
    fn trailing_comments_and_sci_integers() {
        let cfg = parse_config("synth_samples = 1e6 # one million\nduration = 12.5").unwrap();
        assert_eq!(cfg.synth.samples, 1_000_000);
        assert_eq!(cfg.sweep.duration, DurationRule::Fixed(12.5));
    }

    #[test]
    fn echoed_entries_parse_back_identically() {
        let text = "i_photo_values = 1e-13, 2.5e-12\nc_out = 150e-15\npsd_method = welch\n\
                    synth_source = ou\nsynth_dt = 1e-4\nmaster_seed = 99\npsd_window = hamming";
        let cfg = parse_config(text).unwrap();
        let echo: String = cfg
            .entries()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        assert_eq!(parse_config(&echo).unwrap(), cfg);
        let default_echo: String = Config::default()
            .entries()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        assert_eq!(parse_config(&default_echo).unwrap(), Config::default());
    }

    #[test]
    fn threads_is_not_echoed() {
        let cfg = parse_config("threads = 8").unwrap();
        assert_eq!(cfg.sweep.threads, 8);
        assert!(cfg.entries().iter().all(|(k, _)| *k != "threads"));
    }
}
