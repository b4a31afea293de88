//! The benchmark dataset: 20 stations, three components, 5000 daily
//! samples each, trajectory plus flicker and white noise with known truth.

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::io::{format_blocks, write_atomic, write_series, KeyValueBlock};
use crate::noise_kernel::NoiseFilter;
use crate::series::{mjd_to_year, TimeSeries, DAYS_PER_YEAR};
use crate::trajectory::{amp_phase, TrajectoryModelSpec};

use super::{mix_flicker_white, noise_rng, scale_amplitude};

pub const BSG_STATIONS: usize = 20;
pub const BSG_LENGTH: usize = 5000;
pub const BSG_COMPONENTS: [&str; 3] = ["east", "north", "up"];
/// 2000-01-01.
pub const BSG_START_MJD: f64 = 51544.0;
/// `(sigma, phi_mix)` of the horizontal components.
pub const BSG_HORIZONTAL: (f64, f64) = (1.4, 0.6);
pub const BSG_VERTICAL: (f64, f64) = (4.8, 0.7);

const TREND_RANGE: (f64, f64) = (-5.0, 5.0);
const ANNUAL_RANGE: (f64, f64) = (0.5, 3.0);
const SEMI_ANNUAL_RANGE: (f64, f64) = (0.2, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsgOptions {
    pub master_seed: u64,
    pub stations: usize,
    pub length: usize,
    pub start_mjd: f64,
}

impl BsgOptions {
    pub fn new(master_seed: u64) -> Self {
        BsgOptions {
            master_seed,
            stations: BSG_STATIONS,
            length: BSG_LENGTH,
            start_mjd: BSG_START_MJD,
        }
    }
}

/// Truth of one benchmark series.
#[derive(Debug, Clone, PartialEq)]
pub struct BsgTruth {
    pub name: String,
    pub station: String,
    pub component: String,
    pub seed: u64,
    pub n: usize,
    pub start_mjd: f64,
    /// Decimal year the polynomial terms refer to.
    pub reference_epoch: f64,
    /// Trajectory coefficients in [`TrajectoryModelSpec::linear_seasonal`]
    /// order: intercept, trend, annual cos/sin, semi-annual cos/sin.
    pub coefficients: [f64; 6],
    pub sigma: f64,
    pub phi_mix: f64,
    pub kappa: f64,
}

impl BsgTruth {
    pub fn trend(&self) -> f64 {
        self.coefficients[1]
    }

    pub fn trajectory(&self) -> TrajectoryModelSpec<f64> {
        TrajectoryModelSpec::linear_seasonal(self.reference_epoch)
    }

    pub fn file_name(&self) -> String {
        format!("{}.txt", self.name)
    }

    pub fn to_block(&self) -> KeyValueBlock {
        let (annual, annual_phase) = amp_phase(self.coefficients[2], self.coefficients[3]);
        let (semi, semi_phase) = amp_phase(self.coefficients[4], self.coefficients[5]);
        let dt = 1.0 / DAYS_PER_YEAR;
        let (sigma_pl, sigma_w) =
            scale_amplitude(self.sigma, self.phi_mix, self.kappa, dt).expect("valid truth");
        let c = &self.coefficients;
        let pairs: Vec<(&str, String)> = vec![
            ("series", self.name.clone()),
            ("station", self.station.clone()),
            ("component", self.component.clone()),
            ("file", self.file_name()),
            ("seed", self.seed.to_string()),
            ("n", self.n.to_string()),
            ("start_mjd", self.start_mjd.to_string()),
            ("reference_epoch", self.reference_epoch.to_string()),
            ("intercept", c[0].to_string()),
            ("trend", c[1].to_string()),
            ("annual_cos", c[2].to_string()),
            ("annual_sin", c[3].to_string()),
            ("semiannual_cos", c[4].to_string()),
            ("semiannual_sin", c[5].to_string()),
            ("annual_amplitude", annual.to_string()),
            ("annual_phase", annual_phase.to_string()),
            ("semiannual_amplitude", semi.to_string()),
            ("semiannual_phase", semi_phase.to_string()),
            ("noise", "flicker+white".to_string()),
            ("kappa", self.kappa.to_string()),
            ("sigma", self.sigma.to_string()),
            ("phi_mix", self.phi_mix.to_string()),
            ("sigma_pl", sigma_pl.to_string()),
            ("sigma_w", sigma_w.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn from_block(block: &KeyValueBlock) -> Result<Self> {
        let get = |key: &str| -> Result<&str> {
            block
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Format(format!("truth record lacks '{key}'")))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|_| Error::Format(format!("truth field '{key}' is not a number")))
        };
        let int = |key: &str| -> Result<u64> {
            get(key)?
                .parse()
                .map_err(|_| Error::Format(format!("truth field '{key}' is not an integer")))
        };
        Ok(BsgTruth {
            name: get("series")?.to_string(),
            station: get("station")?.to_string(),
            component: get("component")?.to_string(),
            seed: int("seed")?,
            n: int("n")? as usize,
            start_mjd: num("start_mjd")?,
            reference_epoch: num("reference_epoch")?,
            coefficients: [
                num("intercept")?,
                num("trend")?,
                num("annual_cos")?,
                num("annual_sin")?,
                num("semiannual_cos")?,
                num("semiannual_sin")?,
            ],
            sigma: num("sigma")?,
            phi_mix: num("phi_mix")?,
            kappa: num("kappa")?,
        })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one series; depends only on its own indices.
pub fn bsg_series_seed(master_seed: u64, station: usize, component: usize) -> u64 {
    let index = (station as u64) * BSG_COMPONENTS.len() as u64 + component as u64;
    splitmix64(splitmix64(master_seed) ^ splitmix64(index.wrapping_add(1)))
}

/// Generates one benchmark series. `station` is zero-based.
pub fn bsg_series(opts: &BsgOptions, station: usize, component: usize) -> Result<(TimeSeries<f64>, BsgTruth)> {
    if component >= BSG_COMPONENTS.len() {
        return Err(Error::Domain(format!("component index {component} out of range")));
    }
    let seed = bsg_series_seed(opts.master_seed, station, component);
    let mut rng = noise_rng(seed);
    let trend = rng.random_range(TREND_RANGE.0..=TREND_RANGE.1);
    let annual = rng.random_range(ANNUAL_RANGE.0..=ANNUAL_RANGE.1);
    let annual_phase = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let semi = rng.random_range(SEMI_ANNUAL_RANGE.0..=SEMI_ANNUAL_RANGE.1);
    let semi_phase = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let noise_seed: u64 = rng.random();

    let (sigma, phi_mix) = if component == 2 {
        BSG_VERTICAL
    } else {
        BSG_HORIZONTAL
    };
    let n = opts.length;
    let epochs: Vec<f64> = (0..n).map(|i| opts.start_mjd + i as f64).collect();
    let years: Vec<f64> = epochs.iter().map(|&e| mjd_to_year(e)).collect();
    let reference_epoch = mjd_to_year(opts.start_mjd + 0.5 * (n.saturating_sub(1)) as f64);
    let station_name = format!("BSG{:02}", station + 1);
    let truth = BsgTruth {
        name: format!("{station_name}_{}", BSG_COMPONENTS[component]),
        station: station_name,
        component: BSG_COMPONENTS[component].to_string(),
        seed,
        n,
        start_mjd: opts.start_mjd,
        reference_epoch,
        coefficients: [
            0.0,
            trend,
            annual * annual_phase.cos(),
            annual * annual_phase.sin(),
            semi * semi_phase.cos(),
            semi * semi_phase.sin(),
        ],
        sigma,
        phi_mix,
        kappa: NoiseFilter::<f64>::Flicker.kappa(),
    };
    let signal = truth.trajectory().evaluate(&truth.coefficients, &years)?;
    let noise = mix_flicker_white(sigma, phi_mix, n, noise_seed)?;
    let values = signal.iter().zip(&noise).map(|(s, w)| s + w).collect();
    let ts = TimeSeries::new(epochs, values)?
        .with_metadata("station", truth.station.clone())
        .with_metadata("component", truth.component.clone())
        .with_metadata("unit", "mm")
        .with_metadata("seed", seed.to_string());
    Ok((ts, truth))
}

/// Name of the truth manifest inside a benchmark directory.
pub const BSG_MANIFEST: &str = "truth.txt";

/// Writes every series plus the truth manifest to `dir`.
pub fn generate_bsg(dir: &Path, master_seed: u64) -> Result<Vec<BsgTruth>> {
    generate_bsg_with(dir, &BsgOptions::new(master_seed))
}

pub fn generate_bsg_with(dir: &Path, opts: &BsgOptions) -> Result<Vec<BsgTruth>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut truths = Vec::with_capacity(opts.stations * BSG_COMPONENTS.len());
    for station in 0..opts.stations {
        for component in 0..BSG_COMPONENTS.len() {
            let (ts, truth) = bsg_series(opts, station, component)?;
            write_series(&dir.join(truth.file_name()), &ts)?;
            truths.push(truth);
        }
    }
    write_manifest(&dir.join(BSG_MANIFEST), &truths)?;
    Ok(truths)
}

pub fn write_manifest(path: &Path, truths: &[BsgTruth]) -> Result<()> {
    let blocks: Vec<KeyValueBlock> = truths.iter().map(BsgTruth::to_block).collect();
    write_atomic(path, format_blocks(&blocks).as_bytes())
}

pub fn read_manifest(path: &Path) -> Result<Vec<BsgTruth>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    crate::io::parse_blocks(&text)?
        .iter()
        .map(BsgTruth::from_block)
        .collect()
}
