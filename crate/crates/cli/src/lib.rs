//! Subcommand implementations for the `dvsnoise` binary.
//!
//! Each command writes one CSV to a writer: `#` provenance lines echoing the
//! effective configuration, then the table.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dvsnoise::estimators::{fig7_curve, welch_psd, write_fig7_csv};
use dvsnoise::event_gen::{generate_events, leak_slope};
use dvsnoise::pr_model::log_grid;
use dvsnoise::sweep::{
    run_rms_sweep, run_sweep, with_threads, write_event_csv, write_provenance, write_rms_csv,
    PsdMethod, SynthSource,
};
use dvsnoise::synth::{synthesize_ou, synthesize_path};
use dvsnoise::{parse_config, Config, EventGenConfig, OuSpec, PhotoreceptorModel, SamplePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Psd,
    RmsSweep,
    EventSweep,
    Fig7,
    Synth,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Psd => "psd",
            Command::RmsSweep => "rms-sweep",
            Command::EventSweep => "event-sweep",
            Command::Fig7 => "fig7",
            Command::Synth => "synth",
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Reads the config file, if any, and applies command-line overrides.
pub fn load_config(o: &Overrides) -> Result<Config> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            parse_config(&text).with_context(|| path.display().to_string())?
        }
        None => Config::default(),
    };
    if let Some(seed) = o.seed {
        cfg.sweep.master_seed = seed;
    }
    if let Some(threads) = o.threads {
        cfg.sweep.threads = threads;
    }
    Ok(cfg)
}

pub fn run<W: Write>(cmd: Command, cfg: &Config, out: W) -> Result<()> {
    match cmd {
        Command::Psd => psd(cfg, out),
        Command::RmsSweep => rms_sweep(cfg, out),
        Command::EventSweep => event_sweep(cfg, out),
        Command::Fig7 => fig7(cfg, out),
        Command::Synth => synth(cfg, out, None::<&mut Vec<u8>>),
    }
}

/// Writes the command output to `path`, creating or truncating it.
pub fn run_to_file(cmd: Command, cfg: &Config, path: &Path) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    run(cmd, cfg, &mut w)?;
    w.flush().with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn psd<W: Write>(cfg: &Config, mut out: W) -> Result<()> {
    let q = &cfg.psd;
    let model = PhotoreceptorModel::new(cfg.pixel.with_photocurrent(q.i_photo).with_bias(q.i_pr))?;
    write_provenance(&mut out, "psd", cfg)?;
    writeln!(out, "# units = V^2/Hz")?;
    match q.method {
        PsdMethod::Model => {
            let spec = model.output_noise_psd(&log_grid(q.f_lo, q.f_hi, q.points_per_decade))?;
            writeln!(out, "f_hz,psd")?;
            for (f, p) in spec.freqs.iter().zip(&spec.psd_total) {
                writeln!(out, "{f:e},{p:e}")?;
            }
        }
        PsdMethod::Welch => {
            let dt = 1.0 / (cfg.sweep.dt_rule * model.natural_params().f_n);
            let path = synthesize_path(&model, dt, q.samples, cfg.sweep.master_seed)?;
            let mut est = welch_psd(&path, q.segment_length, q.overlap, q.window)?;
            let v2 = model.constants().volts_per_log_unit().powi(2);
            est.psd.iter_mut().for_each(|p| *p *= v2);
            writeln!(out, "# dt_s = {dt:e}")?;
            est.write_csv(&mut out)?;
        }
    }
    Ok(())
}

pub fn rms_sweep<W: Write>(cfg: &Config, mut out: W) -> Result<()> {
    let rows = run_rms_sweep(&cfg.sweep, &cfg.pixel)?;
    write_provenance(&mut out, "rms-sweep", cfg)?;
    write_rms_csv(&rows, &mut out)?;
    Ok(())
}

pub fn event_sweep<W: Write>(cfg: &Config, mut out: W) -> Result<()> {
    let rows = run_sweep(&cfg.sweep, &cfg.pixel, &cfg.events)?;
    write_provenance(&mut out, "event-sweep", cfg)?;
    write_event_csv(&rows, &mut out)?;
    Ok(())
}

pub fn fig7<W: Write>(cfg: &Config, mut out: W) -> Result<()> {
    let f = &cfg.fig7;
    let points = with_threads(cfg.sweep.threads, || {
        fig7_curve(f.f_3db, &f.r_values, f.duration_cycles, f.dt_cycles, cfg.sweep.master_seed)
    })??;
    write_provenance(&mut out, "fig7", cfg)?;
    write_fig7_csv(&points, &mut out)?;
    Ok(())
}

fn synth_path(cfg: &Config) -> Result<(SamplePath, f64)> {
    let y = &cfg.synth;
    let seed = cfg.sweep.master_seed;
    Ok(match y.source {
        SynthSource::Pixel => {
            let model =
                PhotoreceptorModel::new(cfg.pixel.with_photocurrent(y.i_photo).with_bias(y.i_pr))?;
            let dt = y
                .dt
                .unwrap_or_else(|| 1.0 / (cfg.sweep.dt_rule * model.natural_params().f_n));
            (synthesize_path(&model, dt, y.samples, seed)?, y.i_photo)
        }
        SynthSource::Ou => {
            let spec = OuSpec { sigma: y.ou_sigma, f_3db: y.ou_f3db };
            let dt = y.dt.unwrap_or_else(|| 1.0 / (cfg.sweep.dt_rule * y.ou_f3db));
            (synthesize_ou(spec, dt, y.samples, seed)?, y.i_photo)
        }
    })
}

/// Writes `t_s,contrast`; with `events`, also the event dump produced at the
/// first configured threshold, leak included.
pub fn synth<W: Write, E: Write>(cfg: &Config, mut out: W, events: Option<E>) -> Result<()> {
    let (path, i_photo) = synth_path(cfg)?;
    write_provenance(&mut out, "synth", cfg)?;
    writeln!(out, "# dt_s = {:e}", path.dt())?;
    writeln!(out, "t_s,contrast")?;
    for (k, v) in path.samples().iter().enumerate() {
        writeln!(out, "{:e},{v:e}", path.time(k))?;
    }
    if let Some(mut ev) = events {
        let theta = cfg.sweep.theta_values[0];
        let gen = EventGenConfig { theta_on: theta, theta_off: theta, ..cfg.events };
        let slope = if gen.leak.c_amp_in > 0.0 {
            leak_slope(&gen.leak, i_photo, &cfg.pixel.constants)?
        } else {
            0.0
        };
        let stream = generate_events(&path, &gen, slope, None)?;
        write_provenance(&mut ev, "synth events", cfg)?;
        stream.write_csv(&mut ev)?;
    }
    Ok(())
}
