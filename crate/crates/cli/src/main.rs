use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dvsnoise_cli::{load_config, run_to_file, synth, Command, Overrides};

/// DVS pixel noise simulator.
#[derive(Parser)]
#[command(name = "dvsnoise", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Output noise PSD from the model or a Welch estimate.
    Psd(Common),
    /// RMS noise, poles and shot fraction over the sweep grid.
    RmsSweep(Common),
    /// Noise, leak and total event rates over the sweep grid.
    EventSweep(Common),
    /// Normalised OU event rate versus threshold.
    Fig7(Common),
    /// Raw noise path in contrast units.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Also write the generated events here.
        #[arg(long)]
        events: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cmd: Cmd) -> anyhow::Result<()> {
    let (command, common, events) = match cmd {
        Cmd::Psd(c) => (Command::Psd, c, None),
        Cmd::RmsSweep(c) => (Command::RmsSweep, c, None),
        Cmd::EventSweep(c) => (Command::EventSweep, c, None),
        Cmd::Fig7(c) => (Command::Fig7, c, None),
        Cmd::Synth { common, events } => (Command::Synth, common, events),
    };
    let cfg = load_config(&Overrides {
        config: common.config,
        seed: common.seed,
        threads: common.threads,
    })?;
    match events {
        None => run_to_file(command, &cfg, &common.out),
        Some(ev_path) => {
            let create = |p: &PathBuf| {
                fs::File::create(p)
                    .map(BufWriter::new)
                    .with_context(|| format!("cannot create {}", p.display()))
            };
            let mut out = create(&common.out)?;
            let mut ev = create(&ev_path)?;
            synth(&cfg, &mut out, Some(&mut ev))?;
            out.flush().context("cannot write output")?;
            ev.flush().context("cannot write events")?;
            Ok(())
        }
    }
}
