//! Goodness of fit: two-sample Kolmogorov-Smirnov tests, QQ series, and the
//! p-value meta-simulation used to judge a whole season of events.
//!
//! Scores are integers, so ties are the norm. Both empirical CDFs are
//! evaluated at every distinct pooled value; with right-continuous step
//! functions that is exactly where the supremum is attained.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::score_model::{draw_rounded, DiscretizedGaussianModel, EventModel, DEFAULT_MODEL_SAMPLES};

/// Standard deviation of the presentation-only QQ jitter, in strokes.
pub const DITHER_SIGMA: f64 = 0.2;

/// Number of percentile levels in a QQ series (1%..100%).
pub const QQ_LEVELS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d_statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    /// Zero for a one-sample test against an analytic CDF.
    pub n2: usize,
}

fn sorted_finite(sample: &[f64], name: &str) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid(format!("{name} contains NaN")));
    }
    let mut v = sample.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample KS statistic D = sup |F_a(x) - F_b(x)|.
pub fn ks_statistic(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    let a = sorted_finite(sample_a, "sample a")?;
    let b = sorted_finite(sample_b, "sample b")?;
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    // max |i*nb - j*na|, divided once at the end so ties in D are exact.
    let mut best: u128 = 0;
    while i < na && j < nb {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        best = best.max(scaled_gap(i, nb, j, na));
    }
    Ok(best as f64 / (na as f64 * nb as f64))
}

fn scaled_gap(i: usize, nb: usize, j: usize, na: usize) -> u128 {
    let l = i as u128 * nb as u128;
    let r = j as u128 * na as u128;
    l.abs_diff(r)
}

/// Histogram over a contiguous integer range.
struct DenseCounts {
    min: i64,
    counts: Vec<u64>,
    total: usize,
}

impl DenseCounts {
    fn new(values: &[i32]) -> Option<Self> {
        let min = i64::from(*values.iter().min()?);
        let max = i64::from(*values.iter().max()?);
        let mut counts = vec![0u64; (max - min + 1) as usize];
        for &v in values {
            counts[(i64::from(v) - min) as usize] += 1;
        }
        Some(Self {
            min,
            counts,
            total: values.len(),
        })
    }

    fn max(&self) -> i64 {
        self.min + self.counts.len() as i64 - 1
    }

    fn get(&self, v: i64) -> u64 {
        if v < self.min || v > self.max() {
            0
        } else {
            self.counts[(v - self.min) as usize]
        }
    }
}

/// KS statistic for integer samples, computed from histograms.
pub fn ks_statistic_int(sample_a: &[i32], sample_b: &[i32]) -> Result<f64> {
    let a = DenseCounts::new(sample_a).ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
    let b = DenseCounts::new(sample_b).ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
    let (na, nb) = (a.total, b.total);
    if a.counts.len() + b.counts.len() > 1 << 26 {
        let fa: Vec<f64> = sample_a.iter().map(|&v| f64::from(v)).collect();
        let fb: Vec<f64> = sample_b.iter().map(|&v| f64::from(v)).collect();
        return ks_statistic(&fa, &fb);
    }
    let (mut ca, mut cb) = (0usize, 0usize);
    let mut best: u128 = 0;
    for v in a.min.min(b.min)..=a.max().max(b.max()) {
        ca += a.get(v) as usize;
        cb += b.get(v) as usize;
        best = best.max(scaled_gap(ca, nb, cb, na));
    }
    Ok(best as f64 / (na as f64 * nb as f64))
}

/// Kolmogorov tail function Q_KS(λ) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2k²λ²).
///
/// Below λ = 1.18 the alternating series converges slowly, so the
/// equivalent Jacobi-theta form 1 - (√(2π)/λ) Σ exp(-(2k-1)²π²/(8λ²)) is
/// summed instead. Both are truncated once a term drops under 1e-16.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda.is_nan() || lambda <= 0.0 {
        return 1.0;
    }
    let q = if lambda < 1.18 {
        let y = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for k in 1.. {
            let m = f64::from(2 * k - 1);
            let term = (-m * m * y).exp();
            sum += term;
            if term < 1e-16 {
                break;
            }
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum
    } else {
        let mut sum = 0.0;
        let mut sign = 1.0;
        for k in 1.. {
            let kf = f64::from(k);
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += sign * term;
            sign = -sign;
            if term < 1e-16 {
                break;
            }
        }
        2.0 * sum
    };
    q.clamp(0.0, 1.0)
}

fn pvalue_effective(d: f64, ne: f64) -> f64 {
    if d == 0.0 {
        return 1.0;
    }
    let s = ne.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

fn check_d(d: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::invalid(format!("KS statistic must lie in [0, 1], got {d}")));
    }
    Ok(())
}

/// Asymptotic two-sample p-value with effective size n1·n2/(n1+n2).
pub fn ks_pvalue(d: f64, n1: usize, n2: usize) -> Result<f64> {
    check_d(d)?;
    if n1 == 0 || n2 == 0 {
        return Err(Error::invalid("sample sizes must be at least 1"));
    }
    let (a, b) = (n1 as f64, n2 as f64);
    Ok(pvalue_effective(d, a * b / (a + b)))
}

pub fn ks_test(sample_a: &[f64], sample_b: &[f64]) -> Result<KsResult> {
    let d = ks_statistic(sample_a, sample_b)?;
    Ok(KsResult {
        d_statistic: d,
        p_value: ks_pvalue(d, sample_a.len(), sample_b.len())?,
        n1: sample_a.len(),
        n2: sample_b.len(),
    })
}

pub fn ks_test_int(sample_a: &[i32], sample_b: &[i32]) -> Result<KsResult> {
    let d = ks_statistic_int(sample_a, sample_b)?;
    Ok(KsResult {
        d_statistic: d,
        p_value: ks_pvalue(d, sample_a.len(), sample_b.len())?,
        n1: sample_a.len(),
        n2: sample_b.len(),
    })
}

/// One-sample KS test of `sample` against a continuous CDF.
pub fn ks_test_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    let x = sorted_finite(sample, "sample")?;
    let n = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0f64, f64::max)
        .clamp(0.0, 1.0);
    Ok(KsResult {
        d_statistic: d,
        p_value: pvalue_effective(d, n),
        n1: x.len(),
        n2: 0,
    })
}

/// Compare an event's raw scores against its rounded-Gaussian model.
pub fn event_ks_test(scores: &[i32], model: &DiscretizedGaussianModel) -> Result<KsResult> {
    ks_test_int(scores, &model.samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub level: f64,
    pub data_quantile: f64,
    pub model_quantile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqSeries {
    /// Exact quantile pairs at 1%, 2%, ..., 100%.
    pub points: Vec<QqPoint>,
    pub dither_sigma: f64,
    /// Jittered (data, model) coordinates for plotting only.
    pub dithered: Option<Vec<(f64, f64)>>,
}

/// Left-continuous inverse ECDF of a sorted sample at `percent`/100:
/// the smallest value whose ECDF reaches the level.
fn quantile_at_percent(sorted: &[f64], percent: usize) -> f64 {
    let n = sorted.len();
    let rank = (percent * n).div_ceil(100).max(1);
    sorted[rank - 1]
}

/// Left-continuous inverse ECDF at an arbitrary level q in (0, 1].
pub fn inverse_ecdf(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::invalid(format!("quantile level must be in (0, 1], got {q}")));
    }
    let n = sorted.len();
    // Guard against q*n landing a hair above an integer.
    let rank = ((q * n as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(n) - 1])
}

pub fn qq_points(sample_a: &[f64], sample_b: &[f64], dither_seed: Option<u64>) -> Result<QqSeries> {
    let a = sorted_finite(sample_a, "sample a")?;
    let b = sorted_finite(sample_b, "sample b")?;
    let points: Vec<QqPoint> = (1..=QQ_LEVELS)
        .map(|p| QqPoint {
            level: p as f64 / 100.0,
            data_quantile: quantile_at_percent(&a, p),
            model_quantile: quantile_at_percent(&b, p),
        })
        .collect();
    let dithered = dither_seed.map(|seed| {
        let mut rng = rng::stream(seed, 0);
        points
            .iter()
            .map(|p| {
                let dx: f64 = rng.sample(StandardNormal);
                let dy: f64 = rng.sample(StandardNormal);
                (
                    p.data_quantile + DITHER_SIGMA * dx,
                    p.model_quantile + DITHER_SIGMA * dy,
                )
            })
            .collect()
    });
    Ok(QqSeries {
        points,
        dither_sigma: DITHER_SIGMA,
        dithered,
    })
}

pub fn qq_points_int(scores: &[i32], model: &DiscretizedGaussianModel, dither_seed: Option<u64>) -> Result<QqSeries> {
    let a: Vec<f64> = scores.iter().map(|&v| f64::from(v)).collect();
    let b: Vec<f64> = model.samples.iter().map(|&v| f64::from(v)).collect();
    qq_points(&a, &b, dither_seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaSimConfig {
    pub iterations: u32,
    pub model_samples: usize,
    pub seed: u64,
}

impl MetaSimConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            iterations: 100,
            model_samples: DEFAULT_MODEL_SAMPLES,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPValue {
    pub iteration: u32,
    pub event_index: u32,
    pub event_id: String,
    pub d_statistic: f64,
    pub p_value: f64,
}

/// Re-run every event `iterations` times under the Gaussian hypothesis and
/// KS-test each synthetic event against a fresh model of the same moments.
///
/// Each (event, iteration) pair draws from its own stream, so the output is
/// identical under any rayon pool size. Rows are ordered iteration-major.
pub fn simulate_pvalues(event_models: &[EventModel], config: &MetaSimConfig) -> Result<Vec<SimulatedPValue>> {
    if event_models.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if config.iterations == 0 || config.model_samples == 0 {
        return Err(Error::invalid("iterations and model sample count must be at least 1"));
    }
    for m in event_models {
        crate::score_model::check_gaussian_params(m.mu_s, m.sigma_s, m.n_scores)?;
    }
    let n_events = event_models.len();
    let n_events_u32 = u32::try_from(n_events).map_err(|_| Error::invalid("too many events"))?;
    let total = config.iterations as usize * n_events;
    (0..total)
        .into_par_iter()
        .map(|idx| {
            let iteration = (idx / n_events) as u32;
            let event_index = (idx % n_events) as u32;
            debug_assert!(event_index < n_events_u32);
            let model = &event_models[event_index as usize];
            let mut rng = rng::stream(config.seed, rng::grid_stream_id(event_index, iteration));
            let synthetic = draw_rounded(&mut rng, model.mu_s, model.sigma_s, model.n_scores);
            let reference = draw_rounded(&mut rng, model.mu_s, model.sigma_s, config.model_samples);
            let ks = ks_test_int(&synthetic, &reference)?;
            Ok(SimulatedPValue {
                iteration,
                event_index,
                event_id: model.event_id.clone(),
                d_statistic: ks.d_statistic,
                p_value: ks.p_value,
            })
        })
        .collect()
}

/// KS p-values of observed events, each against its own fitted model.
///
/// Event `i` builds its model from stream `i` of `seed` offset into the
/// upper half of the id space, clear of the meta-simulation streams.
pub fn observed_pvalues(events: &[(EventModel, Vec<i32>)], model_samples: usize, seed: u64) -> Result<Vec<KsResult>> {
    events
        .par_iter()
        .enumerate()
        .map(|(i, (model, scores))| {
            crate::score_model::check_gaussian_params(model.mu_s, model.sigma_s, model_samples)?;
            let mut rng = rng::stream(seed, (1 << 63) | i as u64);
            let reference = draw_rounded(&mut rng, model.mu_s, model.sigma_s, model_samples);
            ks_test_int(scores, &reference)
        })
        .collect()
}

/// Flat list of simulated p-values, `events × iterations` long.
pub fn pvalue_distribution_simulation(event_models: &[EventModel], iterations: u32, seed: u64) -> Result<Vec<f64>> {
    let config = MetaSimConfig {
        iterations,
        ..MetaSimConfig::new(seed)
    };
    Ok(simulate_pvalues(event_models, &config)?
        .into_iter()
        .map(|r| r.p_value)
        .collect())
}
