use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Maximum deviation from uniform spacing, in days.
pub const SPACING_TOLERANCE_DAYS: f64 = 1e-6;

pub const DAYS_PER_YEAR: f64 = 365.25;
/// MJD of J2000.0.
pub const MJD_J2000: f64 = 51544.5;

/// Evenly sampled observation series. Epochs are Modified Julian Dates.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    epochs: Vec<T>,
    values: Vec<T>,
    sampling_period: T,
    pub metadata: BTreeMap<String, String>,
}

impl<T: Real> TimeSeries<T> {
    /// Validates strictly increasing, uniformly spaced epochs.
    pub fn new(epochs: Vec<T>, values: Vec<T>) -> Result<Self> {
        if epochs.len() != values.len() {
            return Err(Error::Dimension {
                expected: epochs.len(),
                found: values.len(),
            });
        }
        if epochs.is_empty() {
            return Err(Error::EmptyRequest("empty time series"));
        }
        if let Some(i) = epochs.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Ordering { line: i + 2 });
        }
        let sampling_period = if epochs.len() > 1 {
            epochs[1] - epochs[0]
        } else {
            T::one()
        };
        let tol = T::lit(SPACING_TOLERANCE_DAYS);
        for (i, w) in epochs.windows(2).enumerate() {
            if ((w[1] - w[0]) - sampling_period).abs() > tol {
                return Err(Error::Format(format!(
                    "non-uniform spacing between samples {} and {}",
                    i,
                    i + 1
                )));
            }
        }
        Ok(TimeSeries {
            epochs,
            values,
            sampling_period,
            metadata: BTreeMap::new(),
        })
    }

    /// Daily series starting at `start_mjd`.
    pub fn daily(start_mjd: T, values: Vec<T>) -> Result<Self> {
        let epochs = (0..values.len())
            .map(|i| start_mjd + T::from_usize_lossy(i))
            .collect();
        Self::new(epochs, values)
    }

    pub fn with_metadata(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn epochs(&self) -> &[T] {
        &self.epochs
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Sampling period in days.
    pub fn sampling_period(&self) -> T {
        self.sampling_period
    }

    /// Sampling period in years.
    pub fn sampling_period_years(&self) -> T {
        self.sampling_period / T::lit(DAYS_PER_YEAR)
    }

    /// Sampling frequency in cycles per year.
    pub fn sampling_frequency(&self) -> T {
        T::one() / self.sampling_period_years()
    }

    /// Epochs as decimal years.
    pub fn years(&self) -> Vec<T> {
        self.epochs.iter().map(|&m| mjd_to_year(m)).collect()
    }
}

pub fn mjd_to_year<T: Real>(mjd: T) -> T {
    T::lit(2000.0) + (mjd - T::lit(MJD_J2000)) / T::lit(DAYS_PER_YEAR)
}

pub fn year_to_mjd<T: Real>(year: T) -> T {
    T::lit(MJD_J2000) + (year - T::lit(2000.0)) * T::lit(DAYS_PER_YEAR)
}
