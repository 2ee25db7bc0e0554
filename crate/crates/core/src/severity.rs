//! External risk-size distributions.
//!
//! Gamma severities are parameterized by shape and *rate*, so `gamma(5, 1)`
//! has mean 5 and variance 5. Normal severities are not truncated at zero:
//! the closed-form moments downstream use the untruncated mean and variance,
//! and the sampler must agree with them.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::error::{Error, Result};
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Gamma { shape: f64, rate: f64 },
    Normal { mean: f64, variance: f64 },
}

/// Risk-size distribution `X` with cached first two moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeverityModel {
    family: Family,
    mean: f64,
    variance: f64,
}

impl SeverityModel {
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma severity needs positive finite shape and rate, got ({shape}, {rate})"
            )));
        }
        Ok(Self {
            family: Family::Gamma { shape, rate },
            mean: shape / rate,
            variance: shape / (rate * rate),
        })
    }

    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "normal severity needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(Self {
            family: Family::Normal { mean, variance },
            mean,
            variance,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// `(mean, variance)` of the risk size.
    pub fn moments(&self) -> (f64, f64) {
        (self.mean, self.variance)
    }

    /// `P(X > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match self.family {
            Family::Gamma { shape, rate } => special::gamma_q(shape, rate * x),
            Family::Normal { mean, variance } => special::std_normal_sf((x - mean) / variance.sqrt()),
        }
    }

    /// Single draw from the model.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }

    /// Prepared sampler; build once and reuse inside hot loops.
    pub fn sampler(&self) -> SeveritySampler {
        match self.family {
            Family::Gamma { shape, rate } => {
                SeveritySampler::Gamma(Gamma::new(shape, 1.0 / rate).expect("validated at construction"))
            }
            Family::Normal { mean, variance } => {
                SeveritySampler::Normal(Normal::new(mean, variance.sqrt()).expect("validated at construction"))
            }
        }
    }
}

impl fmt::Display for SeverityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Gamma { shape, rate } => write!(f, "gamma({shape}, {rate})"),
            Family::Normal { mean, variance } => write!(f, "normal({mean}, {variance})"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum SeveritySampler {
    Gamma(Gamma<f64>),
    Normal(Normal<f64>),
}

impl Distribution<f64> for SeveritySampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SeveritySampler::Gamma(d) => d.sample(rng),
            SeveritySampler::Normal(d) => d.sample(rng),
        }
    }
}
