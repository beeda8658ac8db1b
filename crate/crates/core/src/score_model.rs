//! Per-event Gaussian score models.
//!
//! An event is summarized by the first and second moments of its 18-hole
//! scores. The model distribution is a Gaussian with those moments, sampled
//! and rounded to whole strokes.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::normal_interval;
use crate::rng;

/// Number of Gaussian draws used to build a model distribution.
pub const DEFAULT_MODEL_SAMPLES: usize = 100_000;

/// One player's 18-hole total at one round of one event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundScore {
    pub event_id: String,
    pub player_id: String,
    pub round_index: u32,
    pub date: NaiveDate,
    pub strokes: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventModel {
    pub event_id: String,
    pub mu_s: f64,
    pub sigma_s: f64,
    pub n_scores: usize,
}

/// Fit mean and population standard deviation (divisor N) to an event's scores.
pub fn fit_moments(event_id: impl Into<String>, scores: &[i32]) -> Result<EventModel> {
    if scores.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: scores.len(),
        });
    }
    if let Some(bad) = scores.iter().find(|&&s| s <= 0) {
        return Err(Error::invalid(format!("score must be positive, got {bad}")));
    }
    let n = scores.len() as f64;
    let mu = scores.iter().map(|&s| f64::from(s)).sum::<f64>() / n;
    let var = scores
        .iter()
        .map(|&s| {
            let d = f64::from(s) - mu;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(EventModel {
        event_id: event_id.into(),
        mu_s: mu,
        sigma_s: var.sqrt(),
        n_scores: scores.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub score: i32,
    pub count: u64,
    pub probability: f64,
    /// Poisson estimate: sqrt(count) / total.
    pub uncertainty: f64,
}

/// Integer-binned probability histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    pub bins: Vec<Bin>,
    pub total_count: u64,
}

impl EmpiricalDistribution {
    pub fn probability(&self, score: i32) -> f64 {
        self.bins
            .binary_search_by_key(&score, |b| b.score)
            .map_or(0.0, |i| self.bins[i].probability)
    }
}

pub(crate) fn count_scores(scores: &[i32]) -> BTreeMap<i32, u64> {
    let mut counts = BTreeMap::new();
    for &s in scores {
        *counts.entry(s).or_insert(0u64) += 1;
    }
    counts
}

pub fn empirical_distribution(scores: &[i32]) -> Result<EmpiricalDistribution> {
    if scores.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let total = scores.len() as u64;
    let t = total as f64;
    let bins = count_scores(scores)
        .into_iter()
        .map(|(score, count)| Bin {
            score,
            count,
            probability: count as f64 / t,
            uncertainty: (count as f64).sqrt() / t,
        })
        .collect();
    Ok(EmpiricalDistribution {
        bins,
        total_count: total,
    })
}

/// Rounded-Gaussian model distribution for one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedGaussianModel {
    pub mu: f64,
    pub sigma: f64,
    pub seed: u64,
    pub samples: Vec<i32>,
}

impl DiscretizedGaussianModel {
    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn for_event(model: &EventModel, n_samples: usize, seed: u64) -> Result<Self> {
        sample_model(model.mu_s, model.sigma_s, n_samples, seed)
    }
}

/// Draw `n` Gaussian values and round each half away from zero.
pub(crate) fn draw_rounded<R: Rng + ?Sized>(rng: &mut R, mu: f64, sigma: f64, n: usize) -> Vec<i32> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (mu + sigma * z).round() as i32
        })
        .collect()
}

pub(crate) fn check_gaussian_params(mu: f64, sigma: f64, n: usize) -> Result<()> {
    if !mu.is_finite() {
        return Err(Error::invalid(format!("mean must be finite, got {mu}")));
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::invalid(format!(
            "standard deviation must be finite and non-negative, got {sigma}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    Ok(())
}

pub fn sample_model(mu: f64, sigma: f64, n_samples: usize, seed: u64) -> Result<DiscretizedGaussianModel> {
    check_gaussian_params(mu, sigma, n_samples)?;
    let mut rng = rng::stream(seed, 0);
    Ok(DiscretizedGaussianModel {
        mu,
        sigma,
        seed,
        samples: draw_rounded(&mut rng, mu, sigma, n_samples),
    })
}

/// Analytic mass of the rounded Gaussian at integer `score`:
/// Φ((k + ½ − μ)/σ) − Φ((k − ½ − μ)/σ).
pub fn discretized_pmf(mu: f64, sigma: f64, score: i32) -> Result<f64> {
    if !sigma.is_finite() || sigma <= 0.0 || !mu.is_finite() {
        return Err(Error::invalid(format!(
            "pmf needs finite mean and positive standard deviation, got mu={mu} sigma={sigma}"
        )));
    }
    let k = f64::from(score);
    Ok(normal_interval((k - 0.5 - mu) / sigma, (k + 0.5 - mu) / sigma))
}
