//! Bernoulli arm models.

use crate::error::{Error, Result};

/// Fixed Bernoulli means `μ_1..μ_K` with the derived best mean and gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliArmModel {
    means: Vec<f64>,
    best_mean: f64,
    gaps: Vec<f64>,
}

impl BernoulliArmModel {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::EmptyArmSet);
        }
        for &m in &means {
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::Domain {
                    name: "mean",
                    value: m,
                });
            }
        }
        let best_mean = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gaps = means.iter().map(|&m| best_mean - m).collect();
        Ok(Self {
            means,
            best_mean,
            gaps,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    pub fn best_mean(&self) -> f64 {
        self.best_mean
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    /// Arms with a strictly positive gap.
    pub fn suboptimal_arms(&self) -> impl Iterator<Item = usize> + '_ {
        self.gaps
            .iter()
            .enumerate()
            .filter(|(_, &g)| g > 0.0)
            .map(|(a, _)| a)
    }

    /// `Σ_a Δ_a · pulls[a]`.
    pub fn regret_from_pulls(&self, pulls: &[f64]) -> f64 {
        self.gaps.iter().zip(pulls).map(|(g, n)| g * n).sum()
    }
}
