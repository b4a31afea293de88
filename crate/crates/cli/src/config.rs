//! Run configuration: defaults, then a `key = value` file, then flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use trajnoise::estimator::{MinimizerOptions, MleOptions, NoiseFamily, NoiseParam};
use trajnoise::io::parse_header_line;
use trajnoise::noise_kernel::NoiseFilter;
use trajnoise::noise_model::{NoiseComponent, NoiseModelSpec};
use trajnoise::series::mjd_to_year;
use trajnoise::spectral::Window;
use trajnoise::trajectory::{BasisTerm, TrajectoryModelSpec};
use trajnoise::{Error, Result, SolverKind};

/// Raw settings before typing. Keys are canonical names.
pub type Settings = BTreeMap<String, String>;

pub const KEYS: &[&str] = &[
    "input",
    "output",
    "noise",
    "kappa",
    "kappa2",
    "phi",
    "sigma",
    "fix",
    "degree",
    "periods",
    "offsets",
    "reference_epoch",
    "coefficients",
    "n",
    "start_mjd",
    "sampling_period",
    "seed",
    "xatol",
    "max_iter",
    "toeplitz",
    "method",
    "segments",
    "overlap",
    "window",
    "detrend",
    "jobs",
    "stations",
];

fn canonical_key(key: &str) -> String {
    key.trim().replace('-', "_").to_ascii_lowercase()
}

/// Reads a config file. `key = value` lines must use known keys; `# key:
/// value` header lines are accepted too (so any output file can serve as a
/// config), with unknown header keys ignored. Numeric data lines are
/// skipped.
pub fn parse_config(text: &str) -> Result<Settings> {
    let mut out = Settings::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some((k, v)) = parse_header_line(line) {
                let k = canonical_key(&k);
                if KEYS.contains(&k.as_str()) && k != "output" {
                    out.insert(k, v);
                }
            }
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                let k = canonical_key(k);
                if !KEYS.contains(&k.as_str()) {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("unknown key '{k}'"),
                    });
                }
                out.insert(k, v.trim().to_string());
            }
            None if line
                .split_whitespace()
                .all(|t| t.parse::<f64>().is_ok()) => {}
            None => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "expected 'key = value'".into(),
                })
            }
        }
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Fit,
    Spectrum,
    Benchmark,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Simulate => "simulate",
            Command::Fit => "fit",
            Command::Spectrum => "spectrum",
            Command::Benchmark => "benchmark",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    White,
    PowerLaw,
    Flicker,
    RandomWalk,
    Ggm,
    Figgm,
    PowerLawWhite,
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "wn" => NoiseKind::White,
            "pl" => NoiseKind::PowerLaw,
            "fn" => NoiseKind::Flicker,
            "rw" => NoiseKind::RandomWalk,
            "ggm" => NoiseKind::Ggm,
            "figgm" => NoiseKind::Figgm,
            "plwn" => NoiseKind::PowerLawWhite,
            other => return Err(Error::Specification(format!("unknown noise model '{other}'"))),
        })
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::White => "wn",
            NoiseKind::PowerLaw => "pl",
            NoiseKind::Flicker => "fn",
            NoiseKind::RandomWalk => "rw",
            NoiseKind::Ggm => "ggm",
            NoiseKind::Figgm => "figgm",
            NoiseKind::PowerLawWhite => "plwn",
        })
    }
}

fn parse_param(s: &str) -> Result<NoiseParam> {
    Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
        "kappa" | "kappa1" => NoiseParam::Kappa,
        "kappa2" => NoiseParam::Kappa2,
        "phi" | "phi_mix" => NoiseParam::Phi,
        "sigma" => NoiseParam::Sigma,
        other => return Err(Error::Specification(format!("unknown noise parameter '{other}'"))),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Raw,
    Welch,
}

/// Fully resolved, typed configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub noise: NoiseKind,
    pub kappa: Option<f64>,
    pub kappa2: Option<f64>,
    /// GGM damping, or the coloured fraction for `plwn`.
    pub phi: Option<f64>,
    pub sigma: Option<f64>,
    pub fix: Vec<NoiseParam>,
    pub degree: usize,
    /// Periods in years.
    pub periods: Vec<f64>,
    /// Offset epochs, MJD.
    pub offsets: Vec<f64>,
    /// MJD; defaults to the first epoch.
    pub reference_epoch: Option<f64>,
    pub coefficients: Vec<f64>,
    pub n: usize,
    pub start_mjd: f64,
    /// Days.
    pub sampling_period: f64,
    pub seed: u64,
    pub xatol: f64,
    pub max_iter: usize,
    pub toeplitz: bool,
    pub method: SpectrumKind,
    pub segments: usize,
    pub overlap: f64,
    pub window: Window,
    pub detrend: bool,
    pub jobs: usize,
    pub stations: usize,
}

fn parse_value<T: FromStr>(settings: &Settings, key: &str) -> Result<Option<T>> {
    match settings.get(key) {
        None => Ok(None),
        Some(v) if v.trim().is_empty() => Ok(None),
        Some(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Specification(format!("invalid value '{v}' for {key}"))),
    }
}

fn parse_list(settings: &Settings, key: &str) -> Result<Vec<f64>> {
    match settings.get(key) {
        None => Ok(Vec::new()),
        Some(v) => v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Specification(format!("invalid number '{s}' in {key}")))
            })
            .collect(),
    }
}

fn parse_bool(settings: &Settings, key: &str, default: bool) -> Result<bool> {
    match settings.get(key).map(|s| s.trim().to_ascii_lowercase()) {
        None => Ok(default),
        Some(v) => match v.as_str() {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            _ => Err(Error::Specification(format!("invalid boolean '{v}' for {key}"))),
        },
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn resolve(command: Command, settings: &Settings) -> Result<Self> {
        let fix = match settings.get("fix") {
            None => Vec::new(),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(parse_param)
                .collect::<Result<_>>()?,
        };
        let default_jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
        let cfg = RunConfig {
            command,
            input: settings.get("input").map(PathBuf::from),
            output: settings.get("output").map(PathBuf::from),
            noise: parse_value(settings, "noise")?.unwrap_or(NoiseKind::PowerLawWhite),
            kappa: parse_value(settings, "kappa")?,
            kappa2: parse_value(settings, "kappa2")?,
            phi: parse_value(settings, "phi")?,
            sigma: parse_value(settings, "sigma")?,
            fix,
            degree: parse_value(settings, "degree")?.unwrap_or(1),
            periods: parse_list(settings, "periods")?,
            offsets: parse_list(settings, "offsets")?,
            reference_epoch: match settings.get("reference_epoch").map(|s| s.trim()) {
                Some("first") => None,
                _ => parse_value(settings, "reference_epoch")?,
            },
            coefficients: parse_list(settings, "coefficients")?,
            n: parse_value(settings, "n")?.unwrap_or(1000),
            start_mjd: parse_value(settings, "start_mjd")?.unwrap_or(51544.0),
            sampling_period: parse_value(settings, "sampling_period")?.unwrap_or(1.0),
            seed: parse_value(settings, "seed")?.unwrap_or(0),
            xatol: parse_value(settings, "xatol")?.unwrap_or(0.01),
            max_iter: parse_value(settings, "max_iter")?.unwrap_or(1000),
            toeplitz: parse_bool(settings, "toeplitz", false)?,
            method: match settings.get("method").map(|s| s.trim().to_ascii_lowercase()) {
                None => SpectrumKind::Welch,
                Some(m) if m == "welch" => SpectrumKind::Welch,
                Some(m) if m == "raw" => SpectrumKind::Raw,
                Some(m) => return Err(Error::Specification(format!("unknown spectrum method '{m}'"))),
            },
            segments: parse_value(settings, "segments")?.unwrap_or(4),
            overlap: parse_value(settings, "overlap")?.unwrap_or(0.5),
            window: parse_value(settings, "window")?.unwrap_or_default(),
            detrend: parse_bool(settings, "detrend", true)?,
            jobs: parse_value(settings, "jobs")?.unwrap_or(default_jobs).max(1),
            stations: parse_value(settings, "stations")?.unwrap_or(trajnoise::synthesis::BSG_STATIONS),
        };
        if !(cfg.xatol > 0.0) {
            return Err(Error::Specification("xatol must be positive".into()));
        }
        if !(cfg.sampling_period > 0.0) {
            return Err(Error::Specification("sampling_period must be positive".into()));
        }
        if cfg.periods.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Specification("periods must be positive".into()));
        }
        Ok(cfg)
    }

    /// The resolved settings relevant to this command, for output headers.
    /// The output path is left out so a header regenerates the same file
    /// anywhere.
    pub fn provenance(&self) -> Vec<(String, String)> {
        let mut p: Vec<(&str, String)> = vec![("command", self.command.to_string())];
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        let trajectory = |p: &mut Vec<(&str, String)>| {
            p.push(("degree", self.degree.to_string()));
            p.push(("periods", join(&self.periods)));
            p.push(("offsets", join(&self.offsets)));
            p.push((
                "reference_epoch",
                self.reference_epoch.map_or_else(|| "first".to_string(), |x| x.to_string()),
            ));
        };
        let noise = |p: &mut Vec<(&str, String)>| {
            p.push(("noise", self.noise.to_string()));
            p.push(("kappa", opt(self.kappa)));
            p.push(("kappa2", opt(self.kappa2)));
            p.push(("phi", opt(self.phi)));
            p.push(("sigma", opt(self.sigma)));
        };
        match self.command {
            Command::Simulate => {
                noise(&mut p);
                trajectory(&mut p);
                p.push(("coefficients", join(&self.coefficients)));
                p.push(("n", self.n.to_string()));
                p.push(("start_mjd", self.start_mjd.to_string()));
                p.push(("sampling_period", self.sampling_period.to_string()));
                p.push(("seed", self.seed.to_string()));
            }
            Command::Fit => {
                p.push(("input", self.input_string()));
                noise(&mut p);
                let fix: Vec<String> = self.fix.iter().map(|f| f.to_string()).collect();
                p.push(("fix", fix.join(",")));
                trajectory(&mut p);
                p.push(("xatol", self.xatol.to_string()));
                p.push(("max_iter", self.max_iter.to_string()));
                p.push(("toeplitz", self.toeplitz.to_string()));
            }
            Command::Spectrum => {
                p.push(("input", self.input_string()));
                p.push(("detrend", self.detrend.to_string()));
                if self.detrend {
                    trajectory(&mut p);
                }
                let method = match self.method {
                    SpectrumKind::Raw => "raw",
                    SpectrumKind::Welch => "welch",
                };
                p.push(("method", method.to_string()));
                if self.method == SpectrumKind::Welch {
                    p.push(("segments", self.segments.to_string()));
                    p.push(("overlap", self.overlap.to_string()));
                    p.push(("window", self.window.to_string()));
                }
            }
            Command::Benchmark => {
                p.push(("seed", self.seed.to_string()));
                p.push(("stations", self.stations.to_string()));
            }
        }
        p.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    fn input_string(&self) -> String {
        self.input
            .as_ref()
            .map_or_else(String::new, |p| p.display().to_string())
    }

    /// Trajectory in decimal years; `first_mjd` is used when no reference
    /// epoch was given.
    pub fn trajectory(&self, first_mjd: f64) -> TrajectoryModelSpec<f64> {
        let mut terms = vec![BasisTerm::Polynomial { degree: self.degree }];
        terms.extend(self.periods.iter().map(|&p| BasisTerm::periodic_with_period(p)));
        terms.extend(self.offsets.iter().map(|&e| BasisTerm::Offset { epoch: mjd_to_year(e) }));
        TrajectoryModelSpec::new(terms, mjd_to_year(self.reference_epoch.unwrap_or(first_mjd)))
    }

    fn filter(&self) -> NoiseFilter<f64> {
        let kappa = self.kappa;
        match self.noise {
            NoiseKind::White => NoiseFilter::White,
            NoiseKind::Flicker => NoiseFilter::Flicker,
            NoiseKind::RandomWalk => NoiseFilter::RandomWalk,
            NoiseKind::PowerLaw | NoiseKind::PowerLawWhite => NoiseFilter::PowerLaw {
                kappa: kappa.unwrap_or(-1.0),
            },
            NoiseKind::Ggm => NoiseFilter::Ggm {
                kappa: kappa.unwrap_or(-1.0),
                phi: self.phi.unwrap_or(0.9),
            },
            NoiseKind::Figgm => NoiseFilter::Figgm {
                kappa1: kappa.unwrap_or(-1.0),
                kappa2: self.kappa2.unwrap_or(-1.0),
                phi: self.phi.unwrap_or(0.9),
            },
        }
    }

    /// Noise model for simulation; unspecified values take defaults.
    pub fn noise_model(&self) -> Result<NoiseModelSpec<f64>> {
        let sigma = self.sigma.unwrap_or(1.0);
        let model = match self.noise {
            NoiseKind::PowerLawWhite => {
                NoiseModelSpec::mixed(self.filter(), sigma, self.phi.unwrap_or(0.5))
            }
            _ => NoiseModelSpec::Single(NoiseComponent::new(self.filter(), sigma)),
        };
        model.validate()?;
        Ok(model)
    }

    /// Family for estimation: parameters are free unless fixed or implied
    /// by the model name.
    pub fn noise_family(&self) -> Result<NoiseFamily<f64>> {
        let start = |v: Option<f64>, d: f64| v.unwrap_or(d);
        let mut free: Vec<NoiseParam> = Vec::new();
        let model = match self.noise {
            NoiseKind::White | NoiseKind::Flicker | NoiseKind::RandomWalk => {
                NoiseModelSpec::Single(NoiseComponent::new(self.filter(), start(self.sigma, 1.0)))
            }
            NoiseKind::PowerLaw => {
                free.push(NoiseParam::Kappa);
                NoiseModelSpec::power_law(start(self.kappa, -0.5), start(self.sigma, 1.0))
            }
            NoiseKind::Ggm => {
                free.extend([NoiseParam::Kappa, NoiseParam::Phi]);
                NoiseModelSpec::ggm(start(self.kappa, -0.5), start(self.phi, 0.9), start(self.sigma, 1.0))
            }
            NoiseKind::Figgm => {
                free.extend([NoiseParam::Kappa, NoiseParam::Kappa2, NoiseParam::Phi]);
                NoiseModelSpec::Single(NoiseComponent::new(
                    NoiseFilter::Figgm {
                        kappa1: start(self.kappa, -0.5),
                        kappa2: start(self.kappa2, -0.5),
                        phi: start(self.phi, 0.9),
                    },
                    start(self.sigma, 1.0),
                ))
            }
            NoiseKind::PowerLawWhite => {
                free.extend([NoiseParam::Kappa, NoiseParam::PhiMix]);
                NoiseModelSpec::mixed(
                    NoiseFilter::PowerLaw {
                        kappa: start(self.kappa, -0.5),
                    },
                    start(self.sigma, 1.0),
                    start(self.phi, 0.5),
                )
            }
        };
        free.push(NoiseParam::Sigma);
        model.validate()?;
        for f in &self.fix {
            // "phi" names the mixing fraction of plwn
            let f = match (f, self.noise) {
                (NoiseParam::Phi, NoiseKind::PowerLawWhite) => NoiseParam::PhiMix,
                (f, _) => *f,
            };
            if !free.contains(&f) {
                return Err(Error::Specification(format!(
                    "parameter {f} is not estimated for noise model {}",
                    self.noise
                )));
            }
            if f == NoiseParam::Sigma && self.sigma.is_none() {
                return Err(Error::Specification("fixing sigma requires a sigma value".into()));
            }
            free.retain(|p| *p != f);
        }
        Ok(NoiseFamily::new(model, free))
    }

    pub fn mle_options(&self) -> MleOptions<f64> {
        let d = MleOptions::<f64>::default();
        MleOptions {
            minimizer: MinimizerOptions {
                xatol: self.xatol,
                max_iter: self.max_iter,
                ..d.minimizer
            },
            solver: if self.toeplitz {
                SolverKind::Toeplitz
            } else {
                SolverKind::Dense
            },
            ..d
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_forms() {
        let s = parse_config("noise = pl\n# kappa: -0.8\n# station: X\n\nseed=4\n55000 1.0\n").unwrap();
        assert_eq!(s["noise"], "pl");
        assert_eq!(s["kappa"], "-0.8");
        assert_eq!(s["seed"], "4");
        assert!(!s.contains_key("station"));
        assert!(matches!(parse_config("bogus = 1"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_config("just words").is_err());
    }

    #[test]
    fn fixing_parameters() {
        let mut s = Settings::new();
        s.insert("noise".into(), "plwn".into());
        s.insert("fix".into(), "kappa".into());
        s.insert("kappa".into(), "-1".into());
        let fam = RunConfig::resolve(Command::Fit, &s).unwrap().noise_family().unwrap();
        assert_eq!(fam.free, vec![NoiseParam::PhiMix, NoiseParam::Sigma]);
        assert_eq!(fam.model.filter().kappa(), -1.0);

        s.insert("fix".into(), "kappa2".into());
        assert!(RunConfig::resolve(Command::Fit, &s).unwrap().noise_family().is_err());
        s.insert("fix".into(), "sigma".into());
        assert!(RunConfig::resolve(Command::Fit, &s).unwrap().noise_family().is_err());
    }

    #[test]
    fn provenance_round_trips() {
        let mut s = Settings::new();
        s.insert("noise".into(), "ggm".into());
        s.insert("phi".into(), "0.8".into());
        s.insert("periods".into(), "1,0.5".into());
        s.insert("coefficients".into(), "1,2,0,0,0,0".into());
        s.insert("output".into(), "x.txt".into());
        let cfg = RunConfig::resolve(Command::Simulate, &s).unwrap();
        let header: String = cfg
            .provenance()
            .iter()
            .map(|(k, v)| format!("# {k}: {v}\n"))
            .collect();
        let again = RunConfig::resolve(Command::Simulate, &parse_config(&header).unwrap()).unwrap();
        assert_eq!(again.provenance(), cfg.provenance());
        assert_eq!(again.output, None);
    }
}
