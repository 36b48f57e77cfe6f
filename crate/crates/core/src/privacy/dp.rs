//! Seeded noise mechanisms: Laplace for aggregates, randomized response for
//! per-record bits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::PrivacyError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpParams {
    pub epsilon: f64,
    pub sensitivity: f64,
    pub seed: u64,
}

impl DpParams {
    /// Laplace scale `b = sensitivity / epsilon`.
    pub fn scale(&self) -> Result<f64, PrivacyError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(PrivacyError::InvalidEpsilon(self.epsilon));
        }
        if !(self.sensitivity.is_finite() && self.sensitivity >= 0.0) {
            return Err(PrivacyError::InvalidParameter(format!(
                "sensitivity must be finite and non-negative, got {}",
                self.sensitivity
            )));
        }
        let b = self.sensitivity / self.epsilon;
        if !b.is_finite() {
            return Err(PrivacyError::InvalidParameter("noise scale overflows".into()));
        }
        Ok(b)
    }
}

/// Stream of Laplace(0, b) draws by inverse CDF.
#[derive(Debug, Clone)]
pub struct LaplaceNoise {
    scale: f64,
    rng: ChaCha20Rng,
}

impl LaplaceNoise {
    pub fn new(params: &DpParams) -> Result<Self, PrivacyError> {
        Ok(LaplaceNoise {
            scale: params.scale()?,
            rng: ChaCha20Rng::seed_from_u64(params.seed),
        })
    }

    pub fn with_scale(scale: f64, seed: u64) -> Self {
        LaplaceNoise {
            scale,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sample(&mut self) -> f64 {
        // u uniform on the open interval (-1/2, 1/2)
        let u = loop {
            let u = self.rng.random::<f64>() - 0.5;
            if u != -0.5 {
                break u;
            }
        };
        -self.scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
    }
}

impl Iterator for LaplaceNoise {
    type Item = f64;
    fn next(&mut self) -> Option<f64> {
        Some(self.sample())
    }
}

/// `value` plus one Laplace draw at scale sensitivity/epsilon.
pub fn laplace_release(value: f64, params: &DpParams) -> Result<f64, PrivacyError> {
    let mut noise = LaplaceNoise::new(params)?;
    if noise.scale == 0.0 {
        return Ok(value);
    }
    Ok(value + noise.sample())
}

/// Probability that randomized response reports the true bit: e^ε / (1 + e^ε).
pub fn retention_probability(epsilon: f64) -> f64 {
    1.0 / (1.0 + (-epsilon).exp())
}

#[derive(Debug, Clone)]
pub struct RandomizedResponse {
    keep: f64,
    rng: ChaCha20Rng,
}

impl RandomizedResponse {
    pub fn new(epsilon: f64, seed: u64) -> Result<Self, PrivacyError> {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(PrivacyError::InvalidEpsilon(epsilon));
        }
        Ok(RandomizedResponse {
            keep: retention_probability(epsilon),
            rng: ChaCha20Rng::seed_from_u64(seed),
        })
    }

    pub fn retention(&self) -> f64 {
        self.keep
    }

    pub fn respond(&mut self, bit: bool) -> bool {
        if self.rng.random::<f64>() < self.keep {
            bit
        } else {
            !bit
        }
    }
}

pub fn randomized_response(bit: bool, epsilon: f64, seed: u64) -> Result<bool, PrivacyError> {
    Ok(RandomizedResponse::new(epsilon, seed)?.respond(bit))
}

/// Unbiased estimate of the true share of ones from the share observed after
/// randomized response. Undefined at ε = 0, where responses carry no signal.
pub fn debias_proportion(observed: f64, epsilon: f64) -> Option<f64> {
    let p = retention_probability(epsilon);
    let denom = 2.0 * p - 1.0;
    (denom > 0.0).then(|| (observed - (1.0 - p)) / denom)
}
