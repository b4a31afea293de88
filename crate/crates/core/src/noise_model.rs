use crate::error::{Error, Result};
use crate::noise_kernel::NoiseFilter;
use crate::scalar::Real;

/// One filtered noise component with its amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseComponent<T> {
    pub filter: NoiseFilter<T>,
    pub sigma: T,
}

impl<T: Real> NoiseComponent<T> {
    pub fn new(filter: NoiseFilter<T>, sigma: T) -> Self {
        NoiseComponent { filter, sigma }
    }

    pub fn white(sigma: T) -> Self {
        Self::new(NoiseFilter::White, sigma)
    }
}

/// Noise model of an observation series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModelSpec<T> {
    Single(NoiseComponent<T>),
    /// Independent components; covariances add.
    Sum(NoiseComponent<T>, NoiseComponent<T>),
    /// `sigma^2 (phi_mix J + (1 - phi_mix) I)`: coloured plus white noise
    /// parametrised by an overall amplitude and a mixing fraction.
    Mixed {
        filter: NoiseFilter<T>,
        sigma: T,
        phi_mix: T,
    },
}

impl<T: Real> NoiseModelSpec<T> {
    pub fn white(sigma: T) -> Self {
        NoiseModelSpec::Single(NoiseComponent::white(sigma))
    }

    pub fn power_law(kappa: T, sigma: T) -> Self {
        NoiseModelSpec::Single(NoiseComponent::new(NoiseFilter::PowerLaw { kappa }, sigma))
    }

    pub fn flicker(sigma: T) -> Self {
        NoiseModelSpec::Single(NoiseComponent::new(NoiseFilter::Flicker, sigma))
    }

    pub fn random_walk(sigma: T) -> Self {
        NoiseModelSpec::Single(NoiseComponent::new(NoiseFilter::RandomWalk, sigma))
    }

    pub fn ggm(kappa: T, phi: T, sigma: T) -> Self {
        NoiseModelSpec::Single(NoiseComponent::new(NoiseFilter::Ggm { kappa, phi }, sigma))
    }

    /// Power-law plus white noise with independent amplitudes.
    pub fn power_law_plus_white(kappa: T, sigma_pl: T, sigma_w: T) -> Self {
        NoiseModelSpec::Sum(
            NoiseComponent::new(NoiseFilter::PowerLaw { kappa }, sigma_pl),
            NoiseComponent::white(sigma_w),
        )
    }

    pub fn mixed(filter: NoiseFilter<T>, sigma: T, phi_mix: T) -> Self {
        NoiseModelSpec::Mixed {
            filter,
            sigma,
            phi_mix,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_sigma = |s: T| {
            if s >= T::zero() && s.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("noise amplitude {s} must be finite and >= 0")))
            }
        };
        match self {
            NoiseModelSpec::Single(c) => {
                c.filter.validate()?;
                check_sigma(c.sigma)
            }
            NoiseModelSpec::Sum(a, b) => {
                a.filter.validate()?;
                b.filter.validate()?;
                check_sigma(a.sigma)?;
                check_sigma(b.sigma)
            }
            NoiseModelSpec::Mixed {
                filter,
                sigma,
                phi_mix,
            } => {
                filter.validate()?;
                check_sigma(*sigma)?;
                if !(*phi_mix >= T::zero() && *phi_mix <= T::one()) {
                    return Err(Error::Domain(format!("mixing fraction {phi_mix} outside [0, 1]")));
                }
                Ok(())
            }
        }
    }

    /// The coloured filter of the model (the first component for sums).
    pub fn filter(&self) -> NoiseFilter<T> {
        match *self {
            NoiseModelSpec::Single(c) => c.filter,
            NoiseModelSpec::Sum(a, _) => a.filter,
            NoiseModelSpec::Mixed { filter, .. } => filter,
        }
    }

    pub fn with_filter(self, filter: NoiseFilter<T>) -> Self {
        match self {
            NoiseModelSpec::Single(c) => NoiseModelSpec::Single(NoiseComponent { filter, ..c }),
            NoiseModelSpec::Sum(a, b) => NoiseModelSpec::Sum(NoiseComponent { filter, ..a }, b),
            NoiseModelSpec::Mixed { sigma, phi_mix, .. } => NoiseModelSpec::Mixed {
                filter,
                sigma,
                phi_mix,
            },
        }
    }

    /// Overall amplitude: the single component's sigma, the mixed-form sigma,
    /// or the root-sum-square of the two component amplitudes.
    pub fn sigma(&self) -> T {
        match *self {
            NoiseModelSpec::Single(c) => c.sigma,
            NoiseModelSpec::Sum(a, b) => (a.sigma * a.sigma + b.sigma * b.sigma).sqrt(),
            NoiseModelSpec::Mixed { sigma, .. } => sigma,
        }
    }

    /// Returns the same model with its overall amplitude replaced.
    pub fn with_sigma(self, sigma: T) -> Self {
        match self {
            NoiseModelSpec::Single(c) => NoiseModelSpec::Single(NoiseComponent { sigma, ..c }),
            NoiseModelSpec::Sum(a, b) => {
                let scale = if self.sigma() > T::zero() {
                    sigma / self.sigma()
                } else {
                    T::zero()
                };
                NoiseModelSpec::Sum(
                    NoiseComponent {
                        sigma: a.sigma * scale,
                        ..a
                    },
                    NoiseComponent {
                        sigma: b.sigma * scale,
                        ..b
                    },
                )
            }
            NoiseModelSpec::Mixed {
                filter, phi_mix, ..
            } => NoiseModelSpec::Mixed {
                filter,
                sigma,
                phi_mix,
            },
        }
    }

    /// Amplitudes of the coloured and white parts: `(sigma_colored, sigma_white)`.
    pub fn component_amplitudes(&self) -> (T, T) {
        match *self {
            NoiseModelSpec::Single(c) if c.filter.is_white() => (T::zero(), c.sigma),
            NoiseModelSpec::Single(c) => (c.sigma, T::zero()),
            NoiseModelSpec::Sum(a, b) => (a.sigma, b.sigma),
            NoiseModelSpec::Mixed { sigma, phi_mix, .. } => {
                (sigma * phi_mix.sqrt(), sigma * (T::one() - phi_mix).sqrt())
            }
        }
    }
}
