use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hnlab_cli::artifact::{RunManifest, StageRecord};
use hnlab_cli::config::ExperimentConfig;
use hnlab_cli::stages::{self, Run};

#[derive(Parser)]
#[command(name = "hnlab", version, about = "Spectra of random non-Hermitian periodic tridiagonal matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write coefficient samples for every size and realization.
    Sample(Common),
    /// Compute spectra and a per-size summary.
    Spectrum(Common),
    /// Estimate (or reuse) the integrated density of states.
    Ids(Common),
    /// Lyapunov exponent by transfer matrices and by the Thouless formula.
    Lyapunov(Common),
    /// Trace the limit curve, its density and the real support.
    Curve(Common),
    /// Run the verification battery; exits with 4 if any check fails.
    Verify(Common),
    /// Compare stored or freshly computed spectra with the limit curve.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the ensemble seed.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

impl Command {
    fn split(&self) -> (&'static str, &Common) {
        match self {
            Command::Sample(c) => ("sample", c),
            Command::Spectrum(c) => ("spectrum", c),
            Command::Ids(c) => ("ids", c),
            Command::Lyapunov(c) => ("lyapunov", c),
            Command::Curve(c) => ("curve", c),
            Command::Verify(c) => ("verify", c),
            Command::Compare(c) => ("compare", c),
        }
    }
}

fn execute(stage: &str, common: &Common) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::load(&common.config)
        .with_context(|| format!("loading {}", common.config.display()))?;
    if let Some(seed) = common.seed_override {
        cfg.ensemble.seed = seed;
    }
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(hnlab::Error::Validation {
                field: "--jobs".into(),
                reason: "must be at least 1".into(),
            }
            .into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let run = Run::new(cfg, out);
    println!("[{stage}] config {} seed {} -> {}", run.stamp.config_hash, run.stamp.seed, run.out.display());
    let config_text = format!("{}{}", run.stamp.header(), run.cfg.to_toml_string());
    hnlab::io::write_text(&run.out.join("config.toml"), &config_text)?;

    let started = Instant::now();
    let result = match stage {
        "sample" => stages::sample(&run),
        "spectrum" => stages::spectra(&run),
        "ids" => stages::ids(&run).map(|(_, w)| w),
        "lyapunov" => stages::lyapunov(&run),
        "curve" => stages::curve(&run).map(|(_, w)| w),
        "verify" => stages::verify(&run),
        "compare" => stages::compare(&run),
        _ => unreachable!("clap restricts stage names"),
    };
    let artifacts = match &result {
        Ok(w) => w.clone(),
        Err(_) => Vec::new(),
    };
    let mut manifest = RunManifest::open(&run.out, &run.stamp);
    manifest.record(StageRecord {
        stage: stage.to_string(),
        artifacts,
        wall_time_s: started.elapsed().as_secs_f64(),
    });
    manifest.save(&run.out)?;
    result.map(|_| ())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, common) = cli.command.split();
    match execute(stage, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(hnlab_cli::exit_code(&err) as u8)
        }
    }
}
