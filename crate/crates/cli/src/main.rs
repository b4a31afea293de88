use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::{read_config, Command, RunConfig, Settings};

/// Trajectory and noise analysis of evenly sampled position time series.
#[derive(Parser)]
#[command(name = "trajnoise", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Generate a synthetic series.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        trajectory: TrajectoryArgs,
        #[command(flatten)]
        sim: SimulateArgs,
    },
    /// Estimate trajectory and noise parameters of one series or a directory.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        trajectory: TrajectoryArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Power spectral density of a series.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        trajectory: TrajectoryArgs,
        #[command(flatten)]
        spectrum: SpectrumArgs,
    },
    /// Write the 60-series synthetic benchmark and its truth manifest.
    Benchmark {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of stations.
        #[arg(long)]
        stations: Option<usize>,
    },
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for multi-series commands.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct NoiseArgs {
    /// wn, pl, fn, rw, ggm, figgm or plwn.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Second index of figgm.
    #[arg(long, allow_hyphen_values = true)]
    kappa2: Option<f64>,
    /// GGM damping, or the coloured fraction of plwn.
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Keep a noise parameter at its given value (kappa, kappa2, phi, sigma).
    #[arg(long, value_delimiter = ',')]
    fix: Vec<String>,
}

#[derive(Args)]
struct TrajectoryArgs {
    /// Polynomial degree.
    #[arg(long)]
    degree: Option<usize>,
    /// Comma-separated periods in years, e.g. 1,0.5.
    #[arg(long)]
    periods: Option<String>,
    /// Comma-separated offset epochs (MJD).
    #[arg(long)]
    offsets: Option<String>,
    /// Reference epoch (MJD) of the polynomial and periodic terms.
    #[arg(long)]
    reference_epoch: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    start_mjd: Option<f64>,
    /// Days.
    #[arg(long)]
    sampling_period: Option<f64>,
    /// Trajectory coefficients, comma-separated, in column order.
    #[arg(long, allow_hyphen_values = true)]
    coefficients: Option<String>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    xatol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Use the Toeplitz solver (stationary approximation).
    #[arg(long)]
    toeplitz: bool,
}

#[derive(Args)]
struct SpectrumArgs {
    /// raw or welch.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    segments: Option<usize>,
    /// hann or rectangular.
    #[arg(long)]
    window: Option<String>,
    /// Fraction of segment overlap.
    #[arg(long)]
    overlap: Option<f64>,
    /// Remove the fitted trajectory first (default true).
    #[arg(long)]
    detrend: Option<bool>,
}

fn set<T: ToString>(s: &mut Settings, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        s.insert(key.to_string(), v.to_string());
    }
}

impl CommonArgs {
    fn settings(&self) -> Result<Settings, trajnoise::Error> {
        let mut s = match &self.config {
            Some(path) => read_config(path)?,
            None => Settings::new(),
        };
        set(&mut s, "input", &self.input.as_ref().map(|p| p.display()));
        set(&mut s, "output", &self.output.as_ref().map(|p| p.display()));
        set(&mut s, "seed", &self.seed);
        set(&mut s, "jobs", &self.jobs);
        Ok(s)
    }
}

impl NoiseArgs {
    fn apply(&self, s: &mut Settings) {
        set(s, "noise", &self.noise);
        set(s, "kappa", &self.kappa);
        set(s, "kappa2", &self.kappa2);
        set(s, "phi", &self.phi);
        set(s, "sigma", &self.sigma);
        if !self.fix.is_empty() {
            s.insert("fix".into(), self.fix.join(","));
        }
    }
}

impl TrajectoryArgs {
    fn apply(&self, s: &mut Settings) {
        set(s, "degree", &self.degree);
        set(s, "periods", &self.periods);
        set(s, "offsets", &self.offsets);
        set(s, "reference_epoch", &self.reference_epoch);
    }
}

fn resolve(cli: Cli) -> Result<RunConfig, trajnoise::Error> {
    let (command, settings) = match cli.command {
        Sub::Simulate {
            common,
            noise,
            trajectory,
            sim,
        } => {
            let mut s = common.settings()?;
            noise.apply(&mut s);
            trajectory.apply(&mut s);
            set(&mut s, "n", &sim.n);
            set(&mut s, "start_mjd", &sim.start_mjd);
            set(&mut s, "sampling_period", &sim.sampling_period);
            set(&mut s, "coefficients", &sim.coefficients);
            (Command::Simulate, s)
        }
        Sub::Fit {
            common,
            noise,
            trajectory,
            fit,
        } => {
            let mut s = common.settings()?;
            noise.apply(&mut s);
            trajectory.apply(&mut s);
            set(&mut s, "xatol", &fit.xatol);
            set(&mut s, "max_iter", &fit.max_iter);
            if fit.toeplitz {
                s.insert("toeplitz".into(), "true".into());
            }
            (Command::Fit, s)
        }
        Sub::Spectrum {
            common,
            trajectory,
            spectrum,
        } => {
            let mut s = common.settings()?;
            trajectory.apply(&mut s);
            set(&mut s, "method", &spectrum.method);
            set(&mut s, "segments", &spectrum.segments);
            set(&mut s, "window", &spectrum.window);
            set(&mut s, "overlap", &spectrum.overlap);
            set(&mut s, "detrend", &spectrum.detrend);
            (Command::Spectrum, s)
        }
        Sub::Benchmark { common, stations } => {
            let mut s = common.settings()?;
            set(&mut s, "stations", &stations);
            (Command::Benchmark, s)
        }
    };
    RunConfig::resolve(command, &settings)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(cli).and_then(|cfg| match cfg.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Fit => commands::fit(&cfg),
        Command::Spectrum => commands::spectrum(&cfg),
        Command::Benchmark => commands::benchmark(&cfg),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
