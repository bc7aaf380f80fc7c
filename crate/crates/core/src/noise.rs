//! Communication noise.
//!
//! Every non-self link carries an independent zero-mean perturbation per
//! scalar component. Pushed values are corrupted after the sender applies its
//! weight (`C_ij s_j` travels), so a receiver's push-side noise is the plain
//! sum over its in-links. Pulled values are corrupted in transit and then
//! weighted by the receiver (`R_ij` applies to the noisy `x_j`). Self terms
//! are noiseless.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::mixing::MixingEnsemble;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseDistribution {
    #[default]
    Gaussian,
}

/// Per-link, per-component noise law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseChannel {
    /// Variance of one scalar component on one link.
    pub variance: f64,
    #[serde(default)]
    pub distribution: NoiseDistribution,
}

impl NoiseChannel {
    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::invalid(format!("link variance must be finite and >= 0, got {variance}")));
        }
        Ok(Self {
            variance,
            distribution: NoiseDistribution::Gaussian,
        })
    }

    pub fn noiseless() -> Self {
        Self {
            variance: 0.0,
            distribution: NoiseDistribution::Gaussian,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.variance == 0.0
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// One scalar link perturbation.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.distribution {
            NoiseDistribution::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                z * self.std_dev()
            }
        }
    }
}

/// Noise matrices for one synchronous round.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeDraw {
    /// Push-side aggregate, rows `ε_i`.
    pub epsilon: Mat,
    /// Pull-side aggregate, rows `ξ_i`.
    pub xi: Mat,
}

/// Link structure of a mixing pair, ready for repeated sampling.
#[derive(Debug, Clone)]
pub struct ExchangeNoise {
    p: usize,
    channel: NoiseChannel,
    /// `push_in[i]`: senders `j ≠ i` with `C_ij > 0`.
    push_in: Vec<Vec<usize>>,
    /// `pull_in[i]`: `(j, R_ij)` for `j ≠ i` with `R_ij > 0`.
    pull_in: Vec<Vec<(usize, f64)>>,
}

impl ExchangeNoise {
    pub fn new(mix: &MixingEnsemble, p: usize, channel: NoiseChannel) -> Self {
        Self::from_matrices(&mix.pull, &mix.push, p, channel)
    }

    pub fn from_matrices(pull: &Mat, push: &Mat, p: usize, channel: NoiseChannel) -> Self {
        let n = pull.nrows();
        let push_in = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && push[(i, j)] > 0.0).collect())
            .collect();
        let pull_in = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && pull[(i, j)] > 0.0)
                    .map(|j| (j, pull[(i, j)]))
                    .collect()
            })
            .collect();
        Self {
            p,
            channel,
            push_in,
            pull_in,
        }
    }

    pub fn channel(&self) -> &NoiseChannel {
        &self.channel
    }

    pub fn agents(&self) -> usize {
        self.push_in.len()
    }

    /// Push-side aggregate for a `cols`-wide transmitted quantity.
    pub fn sample_push<R: Rng + ?Sized>(&self, rng: &mut R, cols: usize) -> Mat {
        let n = self.agents();
        let mut out = Mat::zeros(n, cols);
        if self.channel.is_noiseless() {
            return out;
        }
        for (i, senders) in self.push_in.iter().enumerate() {
            for _ in senders {
                for c in 0..cols {
                    out[(i, c)] += self.channel.draw(rng);
                }
            }
        }
        out
    }

    /// Pull-side aggregate `ξ_i = Σ_j R_ij ω_ij`.
    pub fn sample_pull<R: Rng + ?Sized>(&self, rng: &mut R) -> Mat {
        let n = self.agents();
        let mut out = Mat::zeros(n, self.p);
        if self.channel.is_noiseless() {
            return out;
        }
        for (i, senders) in self.pull_in.iter().enumerate() {
            for &(_, w) in senders {
                for c in 0..self.p {
                    out[(i, c)] += w * self.channel.draw(rng);
                }
            }
        }
        out
    }

    /// Push-side then pull-side noise for one round.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ExchangeDraw {
        let epsilon = self.sample_push(rng, self.p);
        let xi = self.sample_pull(rng);
        ExchangeDraw { epsilon, xi }
    }

    /// Per-component variance of `ε_i`.
    pub fn push_component_variance(&self, i: usize) -> f64 {
        self.push_in[i].len() as f64 * self.channel.variance
    }

    /// Per-component variance of `ξ_i`.
    pub fn pull_component_variance(&self, i: usize) -> f64 {
        self.pull_in[i].iter().map(|&(_, w)| w * w).sum::<f64>() * self.channel.variance
    }

    /// `σ_ε² = E‖ε‖²` summed over agents and components.
    pub fn push_variance_bound(&self) -> f64 {
        (0..self.agents())
            .map(|i| self.push_component_variance(i))
            .sum::<f64>()
            * self.p as f64
    }

    /// `σ_ξ² = E‖ξ‖²` summed over agents and components.
    pub fn pull_variance_bound(&self) -> f64 {
        (0..self.agents())
            .map(|i| self.pull_component_variance(i))
            .sum::<f64>()
            * self.p as f64
    }
}

/// One round of exchange noise for the given ensemble.
pub fn sample_exchange_noise<R: Rng + ?Sized>(
    mix: &MixingEnsemble,
    channel: NoiseChannel,
    p: usize,
    rng: &mut R,
) -> ExchangeDraw {
    ExchangeNoise::new(mix, p, channel).sample(rng)
}
