//! Synthetic events and seasons for fixtures, demos and tests.

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data_io::{Dataset, EventInfo, MoneyListEntry};
use crate::error::{Error, Result};
use crate::rng;
use crate::score_model::{check_gaussian_params, draw_rounded, RoundScore};

/// Layout of a synthetic single event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticEvent {
    pub event_id: String,
    pub start_date: NaiveDate,
    /// Consecutive scores are assigned to the same player, this many each.
    pub rounds_per_player: u32,
}

impl Default for SyntheticEvent {
    fn default() -> Self {
        Self {
            event_id: "SYN".into(),
            start_date: NaiveDate::from_ymd_opt(2007, 11, 28).expect("valid date"),
            rounds_per_player: 6,
        }
    }
}

impl SyntheticEvent {
    /// `n_scores` rounded-Gaussian scores, deterministic under `seed`.
    pub fn generate(&self, mu: f64, sigma: f64, n_scores: usize, seed: u64) -> Result<Vec<RoundScore>> {
        check_gaussian_params(mu, sigma, n_scores)?;
        if self.rounds_per_player == 0 {
            return Err(Error::invalid("rounds_per_player must be at least 1"));
        }
        let mut rng = rng::stream(seed, 0);
        let per = self.rounds_per_player as usize;
        draw_rounded(&mut rng, mu, sigma, n_scores)
            .into_iter()
            .enumerate()
            .map(|(i, strokes)| {
                if strokes <= 0 {
                    return Err(Error::invalid(format!("synthetic score {strokes} is not positive")));
                }
                let round = (i % per) as u32 + 1;
                Ok(RoundScore {
                    event_id: self.event_id.clone(),
                    player_id: format!("P{:04}", i / per + 1),
                    round_index: round,
                    date: self.start_date + Days::new(u64::from(round - 1)),
                    strokes,
                })
            })
            .collect()
    }
}

pub fn synth_event(mu: f64, sigma: f64, n_scores: usize, seed: u64) -> Result<Vec<RoundScore>> {
    SyntheticEvent::default().generate(mu, sigma, n_scores, seed)
}

/// Generator for a full synthetic season.
///
/// Player `r` (money rank `r`) has a latent z-offset 0.0023·(r − 125), except
/// rank 1 which gets `star_mu_z`. Each player also drifts linearly through the
/// season by a random amount with standard deviation `trend_sd`. A round
/// score is round(μ_e + σ_e·(offset + drift + ε)), ε ~ N(0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonSpec {
    pub events: u32,
    pub players: u32,
    pub participation: f64,
    pub rounds: u32,
    pub money_slope: f64,
    pub star_mu_z: f64,
    pub trend_sd: f64,
    pub start_date: NaiveDate,
}

impl Default for SeasonSpec {
    fn default() -> Self {
        Self {
            events: 46,
            players: 200,
            participation: 0.7,
            rounds: 4,
            money_slope: 0.0023,
            star_mu_z: -1.05,
            trend_sd: 0.3,
            start_date: NaiveDate::from_ymd_opt(2007, 1, 4).expect("valid date"),
        }
    }
}

pub fn synth_season(spec: &SeasonSpec, seed: u64) -> Result<Dataset> {
    if spec.events == 0 || spec.players < 2 || spec.rounds == 0 {
        return Err(Error::invalid("season needs events, at least two players and rounds"));
    }
    if !(spec.participation > 0.0 && spec.participation <= 1.0) {
        return Err(Error::invalid("participation must lie in (0, 1]"));
    }
    let mut player_rng = rng::stream(seed, u64::MAX);
    let players: Vec<(String, f64, f64)> = (1..=spec.players)
        .map(|r| {
            let offset = if r == 1 {
                spec.star_mu_z
            } else {
                spec.money_slope * (f64::from(r) - 125.0)
            };
            let drift: f64 = spec.trend_sd * player_rng.sample::<f64, _>(StandardNormal);
            (format!("P{r:03}"), offset, drift)
        })
        .collect();

    let mut events = Vec::new();
    let mut rounds = Vec::new();
    let span = f64::from(spec.events.max(2) - 1);
    for e in 0..spec.events {
        let mut rng = rng::stream(seed, u64::from(e));
        let event_id = format!("E{:02}", e + 1);
        let start = spec.start_date + Days::new(7 * u64::from(e));
        let mu_e = 69.5 + 4.0 * rng.random::<f64>();
        let sigma_e = (2.6 + 0.12 * (mu_e - 71.0) + 0.1 * rng.sample::<f64, _>(StandardNormal)).max(1.5);
        let progress = f64::from(e) / span - 0.5;
        for (pid, offset, drift) in &players {
            if !rng.random_bool(spec.participation) {
                continue;
            }
            for round in 1..=spec.rounds {
                let eps: f64 = rng.sample(StandardNormal);
                let strokes = (mu_e + sigma_e * (offset + drift * progress + eps)).round() as i32;
                rounds.push(RoundScore {
                    event_id: event_id.clone(),
                    player_id: pid.clone(),
                    round_index: round,
                    date: start + Days::new(u64::from(round - 1)),
                    strokes: strokes.max(1),
                });
            }
        }
        events.push(EventInfo {
            event_id,
            name: format!("Synthetic Event {}", e + 1),
            start_date: start,
        });
    }
    let money_list = players
        .iter()
        .enumerate()
        .map(|(i, (pid, _, _))| MoneyListEntry {
            rank: i as u32 + 1,
            player_id: pid.clone(),
        })
        .collect();
    Dataset::new(rounds, events, money_list)
}
