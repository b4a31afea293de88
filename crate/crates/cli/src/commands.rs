use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use trajnoise::estimator::{mle_fit, FitResult, FitWarning};
use trajnoise::io::{
    format_blocks, format_header, format_number, format_periodogram, read_series, write_atomic,
    write_series,
};
use trajnoise::linalg::{cholesky_lower, cholesky_solve, SquareMatrix};
use trajnoise::noise_kernel::NoiseFilter;
use trajnoise::noise_model::NoiseModelSpec;
use trajnoise::series::TimeSeries;
use trajnoise::spectral::{fit_power_law_psd, periodogram, welch, WelchOptions};
use trajnoise::synthesis::{
    bsg_series, scale_amplitude, synthesize, BsgOptions, BsgTruth, SynthesisRecipe,
    BSG_COMPONENTS, BSG_MANIFEST,
};
use trajnoise::trajectory::{amp_phase, build_design_matrix, ColumnLabel, DesignMatrix};
use trajnoise::{Error, Result};

use crate::config::{RunConfig, SpectrumKind};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONVERGENCE: u8 = 2;
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_IO: u8 = 4;

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_INPUT,
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn require_input(cfg: &RunConfig) -> Result<&Path> {
    cfg.input
        .as_deref()
        .ok_or_else(|| Error::Specification("--input is required".into()))
}

pub fn simulate(cfg: &RunConfig) -> Result<u8> {
    let noise = cfg.noise_model()?;
    let trajectory = cfg.trajectory(cfg.start_mjd);
    trajectory.validate()?;
    let coefficients = if cfg.coefficients.is_empty() {
        vec![0.0; trajectory.num_columns()]
    } else {
        cfg.coefficients.clone()
    };
    let recipe = SynthesisRecipe {
        trajectory,
        coefficients,
        noise,
        n: cfg.n,
        seed: cfg.seed,
        start_mjd: cfg.start_mjd,
        sampling_period: cfg.sampling_period,
    };
    let mut ts = synthesize(&recipe)?;
    ts.metadata = cfg.provenance().into_iter().collect();
    match &cfg.output {
        Some(path) => write_series(path, &ts)?,
        None => print!("{}", trajnoise::io::format_series(&ts)),
    }
    Ok(EXIT_OK)
}

fn label_key(label: &ColumnLabel<f64>) -> String {
    match label {
        ColumnLabel::Power(0) => "intercept".into(),
        ColumnLabel::Power(1) => "trend".into(),
        ColumnLabel::Power(d) => format!("poly{d}"),
        ColumnLabel::Cos { omega } => format!("cos_{}", std::f64::consts::TAU / omega),
        ColumnLabel::Sin { omega } => format!("sin_{}", std::f64::consts::TAU / omega),
        ColumnLabel::Offset { epoch } => format!("offset_{epoch}"),
    }
}

fn label_unit(label: &ColumnLabel<f64>) -> String {
    match label {
        ColumnLabel::Power(0) => "mm".into(),
        ColumnLabel::Power(1) => "mm/yr".into(),
        ColumnLabel::Power(d) => format!("mm/yr^{d}"),
        _ => "mm".into(),
    }
}

fn noise_lines(noise: &NoiseModelSpec<f64>, dt_years: f64, out: &mut String) {
    let mut line = |k: &str, v: f64, unit: &str| {
        let _ = writeln!(out, "{k} = {}{unit}", format_number(v));
    };
    let (filter, sigma, phi_mix) = match *noise {
        NoiseModelSpec::Single(c) => (c.filter, c.sigma, 1.0),
        NoiseModelSpec::Mixed {
            filter,
            sigma,
            phi_mix,
        } => (filter, sigma, phi_mix),
        NoiseModelSpec::Sum(a, b) => {
            line("kappa", a.filter.kappa(), "");
            line("sigma_pl_sample", a.sigma, " mm");
            line("sigma_w", b.sigma, " mm");
            return;
        }
    };
    if !filter.is_white() {
        line("kappa", filter.kappa(), "");
    }
    match filter {
        NoiseFilter::Ggm { phi, .. } => line("phi", phi, ""),
        NoiseFilter::Figgm { kappa2, phi, .. } => {
            line("kappa2", kappa2, "");
            line("phi", phi, "");
        }
        _ => {}
    }
    if let NoiseModelSpec::Mixed { .. } = noise {
        line("phi_mix", phi_mix, "");
    }
    line("sigma", sigma, " mm");
    if !filter.is_white() {
        let kappa = filter.kappa();
        if let Ok((pl, w)) = scale_amplitude(sigma, phi_mix, kappa, dt_years) {
            line("sigma_pl", pl, &format!(" mm/yr^{}", -kappa / 4.0));
            if phi_mix < 1.0 {
                line("sigma_w", w, " mm");
            }
        }
    }
}

fn fit_report(cfg: &RunConfig, input: &Path, ts: &TimeSeries<f64>, fit: &FitResult<f64>, secs: f64) -> String {
    let mut header = cfg.provenance();
    if let Some(v) = header.iter_mut().find(|(k, _)| k == "input") {
        v.1 = input.display().to_string();
    }
    let mut out = format_header(header.iter().map(|(k, v)| (k.as_str(), v.as_str())));
    let name = input.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let _ = writeln!(out, "series = {name}");
    let _ = writeln!(out, "n = {}", ts.len());
    let _ = writeln!(out, "sampling_period = {} d", ts.sampling_period());
    let _ = writeln!(out, "evaluations = {}", fit.evaluations);
    let _ = writeln!(out, "iterations = {}", fit.iterations);
    let _ = writeln!(out, "converged = {}", fit.converged());
    let se = fit.std_errors();
    for (i, label) in fit.labels.iter().enumerate() {
        let _ = writeln!(
            out,
            "{} = {} +/- {} {}",
            label_key(label),
            format_number(fit.x[i]),
            format_number(se[i]),
            label_unit(label)
        );
    }
    for (i, label) in fit.labels.iter().enumerate() {
        if let ColumnLabel::Cos { omega } = label {
            let period = std::f64::consts::TAU / omega;
            let (amp, phase) = amp_phase(fit.x[i], fit.x[i + 1]);
            let _ = writeln!(out, "amplitude_{period} = {} mm", format_number(amp));
            let _ = writeln!(out, "phase_{period} = {} rad", format_number(phase));
        }
    }
    let _ = writeln!(out, "noise = {}", cfg.noise);
    noise_lines(&fit.noise, ts.sampling_period_years(), &mut out);
    let _ = writeln!(out, "ln_likelihood = {}", format_number(fit.ln_likelihood));
    let _ = writeln!(out, "runtime_s = {secs:.3}");
    for w in &fit.warnings {
        let _ = writeln!(out, "warning = {w}");
    }
    out
}

fn fit_one(cfg: &RunConfig, input: &Path, output: Option<&Path>) -> Result<u8> {
    let ts: TimeSeries<f64> = read_series(input)?;
    let trajectory = cfg.trajectory(ts.epochs()[0]);
    let family = cfg.noise_family()?;
    let start = Instant::now();
    let fit = mle_fit(&ts, &trajectory, &family, &cfg.mle_options())?;
    let secs = start.elapsed().as_secs_f64();
    eprintln!(
        "{}: {} minimizer iterations, {} likelihood evaluations",
        input.display(),
        fit.iterations,
        fit.evaluations
    );
    emit(output, &fit_report(cfg, input, &ts, &fit, secs))?;
    Ok(if fit.warnings.contains(&FitWarning::NotConverged) {
        EXIT_CONVERGENCE
    } else {
        EXIT_OK
    })
}

/// Series files of a directory, sorted; hidden files and the benchmark
/// manifest are skipped.
fn series_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })? {
        let entry = entry.map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if path.is_file() && !name.starts_with('.') && name != BSG_MANIFEST {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Specification(format!("worker pool: {e}")))
}

pub fn fit(cfg: &RunConfig) -> Result<u8> {
    let input = require_input(cfg)?;
    if !input.is_dir() {
        return fit_one(cfg, input, cfg.output.as_deref());
    }
    let out_dir = cfg
        .output
        .as_deref()
        .ok_or_else(|| Error::Specification("fitting a directory needs an --output directory".into()))?;
    fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let files = series_files(input)?;
    let codes: Vec<u8> = pool(cfg.jobs)?.install(|| {
        files
            .par_iter()
            .map(|file| {
                let stem = file.file_stem().unwrap_or_default().to_string_lossy();
                let report = out_dir.join(format!("{stem}.fit"));
                fit_one(cfg, file, Some(&report)).unwrap_or_else(|e| {
                    eprintln!("{}: {e}", file.display());
                    exit_code(&e)
                })
            })
            .collect()
    });
    eprintln!("fitted {} series", codes.iter().filter(|&&c| c == EXIT_OK).count());
    Ok(codes.into_iter().max().unwrap_or(EXIT_OK))
}

/// Ordinary least-squares residuals plus the series mean.
fn detrended(design: &DesignMatrix<f64>, y: &[f64]) -> Result<Vec<f64>> {
    let m = design.cols();
    let mut normal = SquareMatrix::zeros(m);
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        for j in 0..=i {
            let v: f64 = design.column(i).iter().zip(design.column(j)).map(|(a, b)| a * b).sum();
            normal.set(i, j, v);
            normal.set(j, i, v);
        }
        rhs[i] = design.column(i).iter().zip(y).map(|(a, b)| a * b).sum();
    }
    let l = cholesky_lower(&normal, 1e-10).map_err(|_| Error::Singularity("detrending normal equations".into()))?;
    let x = cholesky_solve(&l, &rhs);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    // residuals at round-off level are exact fits
    let floor = 8.0 * f64::EPSILON * y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(y.iter()
        .zip(design.apply(&x))
        .map(|(v, f)| {
            let r = v - f;
            if r.abs() <= floor { mean } else { r + mean }
        })
        .collect())
}

pub fn spectrum(cfg: &RunConfig) -> Result<u8> {
    let input = require_input(cfg)?;
    let ts: TimeSeries<f64> = read_series(input)?;
    let values = if cfg.detrend {
        let design = build_design_matrix(&cfg.trajectory(ts.epochs()[0]), &ts.years())?;
        detrended(&design, ts.values())?
    } else {
        ts.values().to_vec()
    };
    let fs = ts.sampling_frequency();
    let pg = match cfg.method {
        SpectrumKind::Raw => periodogram(&values, fs)?,
        SpectrumKind::Welch => {
            let opts = WelchOptions::from_segments(values.len(), cfg.segments, cfg.overlap, cfg.window)?;
            welch(&values, fs, &opts)?
        }
    };
    let mut header = cfg.provenance();
    header.push(("unit".into(), "mm^2/cpy".into()));
    match fit_power_law_psd(&pg) {
        Ok(line) => {
            if line.dropped_bins > 0 {
                eprintln!("warning: {} bins with zero power left out of the slope fit", line.dropped_bins);
            }
            eprintln!("fitted spectral index {:.3}", line.kappa);
            header.push(("fitted_kappa".into(), format_number(line.kappa)));
            header.push(("fitted_p0".into(), format_number(line.p0)));
        }
        Err(e) => eprintln!("no slope fit: {e}"),
    }
    emit(cfg.output.as_deref(), &format_periodogram(&pg, &header))?;
    Ok(EXIT_OK)
}

pub fn benchmark(cfg: &RunConfig) -> Result<u8> {
    let dir = cfg
        .output
        .as_deref()
        .ok_or_else(|| Error::Specification("benchmark needs an --output directory".into()))?;
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let opts = BsgOptions {
        stations: cfg.stations,
        ..BsgOptions::new(cfg.seed)
    };
    let jobs: Vec<(usize, usize)> = (0..opts.stations)
        .flat_map(|s| (0..BSG_COMPONENTS.len()).map(move |c| (s, c)))
        .collect();
    let provenance = cfg.provenance();
    let truths: Vec<BsgTruth> = pool(cfg.jobs)?.install(|| {
        jobs.par_iter()
            .map(|&(s, c)| -> Result<BsgTruth> {
                let (mut ts, truth) = bsg_series(&opts, s, c)?;
                ts.metadata.extend(provenance.iter().cloned());
                write_series(&dir.join(truth.file_name()), &ts)?;
                Ok(truth)
            })
            .collect::<Result<_>>()
    })?;
    let mut manifest = format_header(provenance.iter().map(|(k, v)| (k.as_str(), v.as_str())));
    manifest.push_str(&format_blocks(&truths.iter().map(BsgTruth::to_block).collect::<Vec<_>>()));
    write_atomic(&dir.join(BSG_MANIFEST), manifest.as_bytes())?;
    eprintln!("wrote {} series and {BSG_MANIFEST} to {}", truths.len(), dir.display());
    Ok(EXIT_OK)
}
