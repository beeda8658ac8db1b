//! Z-score analytics.
//!
//! A round's z-score is (strokes − μ_s)/σ_s against the event it was played
//! in. Lower is better: a negative z beat the field average.

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data_io::MoneyListEntry;
use crate::error::{Error, Result};
use crate::regression::{ols, LinearFit};
use crate::score_model::{fit_moments, EventModel, RoundScore};

/// Money-list positions considered by the money-list regression.
pub const MONEY_LIST_MAX_RANK: u32 = 200;

/// Exemption cut used by the most-improved ranking.
pub const DEFAULT_TOP_K_MONEY: u32 = 125;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub player_id: String,
    pub event_id: String,
    pub round_index: u32,
    pub date: NaiveDate,
    pub z: f64,
}

/// Which scores define an event's moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Standardization {
    /// All rounds of an event pooled.
    #[default]
    PooledEvent,
    /// Each round of each event standardized separately.
    PerRound,
}

pub fn round_zscores(event_model: &EventModel, scores: &[RoundScore]) -> Result<Vec<ZScore>> {
    if !event_model.sigma_s.is_finite() || event_model.sigma_s <= 0.0 {
        return Err(Error::DegenerateEvent(format!(
            "event {} has standard deviation {}",
            event_model.event_id, event_model.sigma_s
        )));
    }
    scores
        .iter()
        .map(|s| {
            if s.event_id != event_model.event_id {
                return Err(Error::invalid(format!(
                    "round of event {} standardized against event {}",
                    s.event_id, event_model.event_id
                )));
            }
            Ok(ZScore {
                player_id: s.player_id.clone(),
                event_id: s.event_id.clone(),
                round_index: s.round_index,
                date: s.date,
                z: (f64::from(s.strokes) - event_model.mu_s) / event_model.sigma_s,
            })
        })
        .collect()
}

/// Fit one model per event (sorted by event id).
pub fn fit_event_models(rounds: &[RoundScore]) -> Result<Vec<EventModel>> {
    group_by_event(rounds)
        .into_iter()
        .map(|(id, group)| {
            let strokes: Vec<i32> = group.iter().map(|r| r.strokes).collect();
            fit_moments(id, &strokes)
        })
        .collect()
}

fn group_by_event(rounds: &[RoundScore]) -> BTreeMap<String, Vec<RoundScore>> {
    let mut groups: BTreeMap<String, Vec<RoundScore>> = BTreeMap::new();
    for r in rounds {
        groups.entry(r.event_id.clone()).or_default().push(r.clone());
    }
    groups
}

/// Z-scores for every round of a season, grouped by event id.
pub fn season_zscores(rounds: &[RoundScore], mode: Standardization) -> Result<Vec<ZScore>> {
    let mut out = Vec::with_capacity(rounds.len());
    for (event_id, group) in group_by_event(rounds) {
        match mode {
            Standardization::PooledEvent => {
                let strokes: Vec<i32> = group.iter().map(|r| r.strokes).collect();
                let model = fit_moments(event_id, &strokes)?;
                out.extend(round_zscores(&model, &group)?);
            }
            Standardization::PerRound => {
                let mut by_round: BTreeMap<u32, Vec<RoundScore>> = BTreeMap::new();
                for r in group {
                    by_round.entry(r.round_index).or_default().push(r);
                }
                for rs in by_round.values() {
                    let strokes: Vec<i32> = rs.iter().map(|r| r.strokes).collect();
                    let model = fit_moments(event_id.clone(), &strokes)?;
                    out.extend(round_zscores(&model, rs)?);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerZProfile {
    pub player_id: String,
    /// Chronological: by date, then event id, then round index.
    pub z_series: Vec<ZScore>,
    pub mu_z: f64,
    /// Population standard deviation.
    pub sigma_z: f64,
    /// sigma_z / sqrt(n).
    pub stderr: f64,
    pub n: usize,
}

/// Aggregate a player's z-scores. A single round gives sigma_z = stderr = 0.
pub fn player_aggregate(player_id: impl Into<String>, mut z_series: Vec<ZScore>) -> Result<PlayerZProfile> {
    if z_series.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    z_series.sort_by(|a, b| (a.date, &a.event_id, a.round_index).cmp(&(b.date, &b.event_id, b.round_index)));
    let n = z_series.len();
    let nf = n as f64;
    let mu = z_series.iter().map(|z| z.z).sum::<f64>() / nf;
    let var = z_series.iter().map(|z| (z.z - mu).powi(2)).sum::<f64>() / nf;
    let sigma = var.sqrt();
    Ok(PlayerZProfile {
        player_id: player_id.into(),
        z_series,
        mu_z: mu,
        sigma_z: sigma,
        stderr: sigma / nf.sqrt(),
        n,
    })
}

/// One profile per player, sorted by player id.
pub fn player_profiles(zscores: &[ZScore]) -> Result<Vec<PlayerZProfile>> {
    let mut by_player: BTreeMap<&str, Vec<ZScore>> = BTreeMap::new();
    for z in zscores {
        by_player.entry(&z.player_id).or_default().push(z.clone());
    }
    by_player
        .into_iter()
        .map(|(id, series)| player_aggregate(id, series))
        .collect()
}

/// OLS of σ_s on μ_s across events.
pub fn mu_sigma_regression(event_models: &[EventModel]) -> Result<LinearFit> {
    if event_models.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: event_models.len(),
        });
    }
    let x: Vec<f64> = event_models.iter().map(|m| m.mu_s).collect();
    let y: Vec<f64> = event_models.iter().map(|m| m.sigma_s).collect();
    ols(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedProfile {
    pub money_rank: u32,
    pub profile: PlayerZProfile,
}

/// Attach money-list positions; players off the list are dropped. Sorted by rank.
pub fn rank_profiles(profiles: &[PlayerZProfile], money_list: &[MoneyListEntry]) -> Vec<RankedProfile> {
    let ranks: HashMap<&str, u32> = money_list.iter().map(|e| (e.player_id.as_str(), e.rank)).collect();
    let mut out: Vec<RankedProfile> = profiles
        .iter()
        .filter_map(|p| {
            ranks.get(p.player_id.as_str()).map(|&money_rank| RankedProfile {
                money_rank,
                profile: p.clone(),
            })
        })
        .collect();
    out.sort_by_key(|r| r.money_rank);
    out
}

/// OLS of μ_z on money-list position over ranks 2..=200; rank 1 is excluded.
pub fn money_list_regression(ranked: &[RankedProfile]) -> Result<LinearFit> {
    money_list_regression_upto(ranked, MONEY_LIST_MAX_RANK)
}

pub fn money_list_regression_upto(ranked: &[RankedProfile], max_rank: u32) -> Result<LinearFit> {
    if ranked.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: ranked.len(),
        });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = ranked
        .iter()
        .filter(|r| r.money_rank >= 2 && r.money_rank <= max_rank)
        .map(|r| (f64::from(r.money_rank), r.profile.mu_z))
        .unzip();
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: x.len(),
        });
    }
    ols(&x, &y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    /// Change in z per observed round.
    pub slope: f64,
    pub intercept: f64,
    pub start_value: f64,
    pub end_value: f64,
    pub delta: f64,
}

/// Linear trend of z against chronological observation index 0..n-1.
pub fn trend_fit(profile: &PlayerZProfile) -> Result<TrendFit> {
    let n = profile.z_series.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let y: Vec<f64> = profile.z_series.iter().map(|z| z.z).collect();
    let fit = ols(&x, &y)?;
    let start_value = fit.eval(0.0);
    let end_value = fit.eval((n - 1) as f64);
    Ok(TrendFit {
        slope: fit.slope,
        intercept: fit.intercept,
        start_value,
        end_value,
        delta: end_value - start_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TrendMetric {
    /// Fitted change over the whole season.
    #[default]
    Delta,
    Slope,
}

impl TrendMetric {
    fn key(self, t: &TrendFit) -> f64 {
        match self {
            TrendMetric::Delta => t.delta,
            TrendMetric::Slope => t.slope,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovedPlayer {
    pub player_id: String,
    pub money_rank: u32,
    pub mu_z: f64,
    pub n: usize,
    pub trend: TrendFit,
}

/// Players within the top `top_k_money` ranked by trend, most improved first.
/// Players with fewer than two rounds have no trend and are skipped.
pub fn most_improved(ranked: &[RankedProfile], top_k_money: u32, metric: TrendMetric) -> Result<Vec<ImprovedPlayer>> {
    let mut out = Vec::new();
    for r in ranked.iter().filter(|r| r.money_rank <= top_k_money) {
        if r.profile.n < 2 {
            continue;
        }
        out.push(ImprovedPlayer {
            player_id: r.profile.player_id.clone(),
            money_rank: r.money_rank,
            mu_z: r.profile.mu_z,
            n: r.profile.n,
            trend: trend_fit(&r.profile)?,
        });
    }
    if out.is_empty() {
        return Err(Error::invalid(format!(
            "no player in the top {top_k_money} of the money list has a trend"
        )));
    }
    out.sort_by(|a, b| {
        metric
            .key(&a.trend)
            .total_cmp(&metric.key(&b.trend))
            .then_with(|| a.player_id.cmp(&b.player_id))
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub player_id: String,
    pub money_rank: Option<u32>,
    pub mu_z: f64,
    pub sigma_z: f64,
    pub stderr: f64,
    pub n: usize,
    pub trend_slope: Option<f64>,
    pub trend_delta: Option<f64>,
}

/// All players sorted by μ_z (best first), ties by player id.
pub fn leaderboard(profiles: &[PlayerZProfile], money_list: &[MoneyListEntry]) -> Vec<LeaderboardRow> {
    let ranks: HashMap<&str, u32> = money_list.iter().map(|e| (e.player_id.as_str(), e.rank)).collect();
    let mut rows: Vec<LeaderboardRow> = profiles
        .iter()
        .map(|p| {
            let trend = trend_fit(p).ok();
            LeaderboardRow {
                player_id: p.player_id.clone(),
                money_rank: ranks.get(p.player_id.as_str()).copied(),
                mu_z: p.mu_z,
                sigma_z: p.sigma_z,
                stderr: p.stderr,
                n: p.n,
                trend_slope: trend.map(|t| t.slope),
                trend_delta: trend.map(|t| t.delta),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.mu_z.total_cmp(&b.mu_z).then_with(|| a.player_id.cmp(&b.player_id)));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn date(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2007, 1, 1).unwrap() + chrono::Days::new(u64::from(day))
    }

    fn round(event: &str, player: &str, idx: u32, strokes: i32) -> RoundScore {
        RoundScore {
            event_id: event.into(),
            player_id: player.into(),
            round_index: idx,
            date: date(idx),
            strokes,
        }
    }

    fn zs(values: &[f64]) -> Vec<ZScore> {
        values
            .iter()
            .enumerate()
            .map(|(i, &z)| ZScore {
                player_id: "P".into(),
                event_id: "E".into(),
                round_index: 1,
                date: date(i as u32),
                z,
            })
            .collect()
    }

    #[test]
    fn z_of_mean_and_known_value() {
        let m = EventModel {
            event_id: "E".into(),
            mu_s: 70.8,
            sigma_s: 2.6,
            n_scores: 948,
        };
        let z = round_zscores(&m, &[round("E", "A", 1, 68)]).unwrap();
        assert_abs_diff_eq!(z[0].z, (68.0 - 70.8) / 2.6, epsilon = 1e-15);
        assert_abs_diff_eq!(z[0].z, -1.0769, epsilon = 1e-4);
        let m = EventModel { mu_s: 72.0, ..m };
        assert_eq!(round_zscores(&m, &[round("E", "A", 1, 72)]).unwrap()[0].z, 0.0);
    }

    #[test]
    fn z_errors() {
        let m = EventModel {
            event_id: "E".into(),
            mu_s: 72.0,
            sigma_s: 0.0,
            n_scores: 4,
        };
        assert!(matches!(round_zscores(&m, &[]), Err(Error::DegenerateEvent(_))));
        let m = EventModel { sigma_s: 1.0, ..m };
        assert!(round_zscores(&m, &[round("F", "A", 1, 70)]).is_err());
    }

    #[test]
    fn per_round_mode_standardizes_each_round() {
        let rounds = vec![
            round("E", "A", 1, 70),
            round("E", "B", 1, 72),
            round("E", "A", 2, 60),
            round("E", "B", 2, 80),
        ];
        let z = season_zscores(&rounds, Standardization::PerRound).unwrap();
        assert!(z.iter().all(|z| (z.z.abs() - 1.0).abs() < 1e-15));
        let pooled = season_zscores(&rounds, Standardization::PooledEvent).unwrap();
        assert!(pooled[0].z.abs() < 1.0);
    }

    #[test]
    fn aggregate_cases() {
        let p = player_aggregate("P", zs(&[-0.5, -0.5])).unwrap();
        assert_eq!((p.mu_z, p.sigma_z, p.stderr, p.n), (-0.5, 0.0, 0.0, 2));
        let p = player_aggregate("P", zs(&[0.3])).unwrap();
        assert_eq!((p.sigma_z, p.stderr), (0.0, 0.0));
        assert!(player_aggregate("P", vec![]).is_err());

        let p = player_aggregate("P", zs(&[1.0, -1.0, 0.0, 2.0])).unwrap();
        assert_abs_diff_eq!(p.mu_z, 0.5);
        let sd = (5.0f64 / 4.0).sqrt();
        assert_abs_diff_eq!(p.sigma_z, sd, epsilon = 1e-15);
        assert_abs_diff_eq!(p.stderr, sd / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn aggregate_orders_chronologically() {
        let mut s = zs(&[1.0, 2.0, 3.0]);
        s.reverse();
        let p = player_aggregate("P", s).unwrap();
        let v: Vec<f64> = p.z_series.iter().map(|z| z.z).collect();
        assert_eq!(v, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn mu_sigma_cases() {
        let ev = |mu: f64, sigma: f64| EventModel {
            event_id: "E".into(),
            mu_s: mu,
            sigma_s: sigma,
            n_scores: 100,
        };
        let f = mu_sigma_regression(&[ev(70.0, 2.8), ev(72.0, 2.8), ev(75.0, 2.8)]).unwrap();
        assert_abs_diff_eq!(f.slope, 0.0, epsilon = 1e-15);
        let models: Vec<_> = (0..10)
            .map(|i| {
                let mu = 69.0 + 0.7 * f64::from(i);
                ev(mu, 0.1 * mu)
            })
            .collect();
        assert_abs_diff_eq!(mu_sigma_regression(&models).unwrap().slope, 0.1, epsilon = 1e-12);
        assert!(matches!(
            mu_sigma_regression(&[ev(71.0, 2.0), ev(71.0, 3.0)]),
            Err(Error::DegenerateRegression(_))
        ));
        assert!(mu_sigma_regression(&[ev(71.0, 2.0)]).is_err());
    }

    fn ranked(rank: u32, mu: f64) -> RankedProfile {
        let mut p = player_aggregate(format!("P{rank:03}"), zs(&[mu, mu])).unwrap();
        p.mu_z = mu;
        RankedProfile {
            money_rank: rank,
            profile: p,
        }
    }

    #[test]
    fn money_list_cases() {
        let flat: Vec<_> = (1..=10).map(|r| ranked(r, 0.2)).collect();
        assert_abs_diff_eq!(money_list_regression(&flat).unwrap().slope, 0.0, epsilon = 1e-15);

        let line: Vec<_> = (1..=200).map(|r| ranked(r, 0.0023 * (f64::from(r) - 125.0))).collect();
        let f = money_list_regression(&line).unwrap();
        assert_abs_diff_eq!(f.slope, 0.0023, epsilon = 1e-12);
        assert_eq!(f.n_points, 199);

        assert!(money_list_regression(&line[..2]).is_err());
        let sparse = vec![ranked(1, 0.0), ranked(2, 0.0), ranked(300, 1.0)];
        assert!(money_list_regression(&sparse).is_err());
    }

    #[test]
    fn trend_cases() {
        let p = player_aggregate("P", zs(&[0.4; 6])).unwrap();
        let t = trend_fit(&p).unwrap();
        assert_abs_diff_eq!(t.slope, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.delta, 0.0, epsilon = 1e-15);
        let p = player_aggregate("P", zs(&[0.4])).unwrap();
        assert!(trend_fit(&p).is_err());

        let p = player_aggregate("P", zs(&[1.0, 0.0, 0.5, -1.0])).unwrap();
        let t = trend_fit(&p).unwrap();
        assert_abs_diff_eq!(t.start_value, t.intercept);
        assert_abs_diff_eq!(t.end_value, t.intercept + 3.0 * t.slope, epsilon = 1e-15);
        assert_abs_diff_eq!(t.delta, t.end_value - t.start_value);
    }

    fn trending(id: &str, rank: u32, delta: f64) -> RankedProfile {
        let n = 11;
        let values: Vec<f64> = (0..n).map(|i| delta * f64::from(i) / f64::from(n - 1)).collect();
        let mut series = zs(&values);
        for z in &mut series {
            z.player_id = id.into();
        }
        RankedProfile {
            money_rank: rank,
            profile: player_aggregate(id, series).unwrap(),
        }
    }

    #[test]
    fn most_improved_cases() {
        let players = vec![trending("B", 2, -0.5), trending("A", 3, -1.0), trending("C", 130, -3.0)];
        let r = most_improved(&players, 125, TrendMetric::Delta).unwrap();
        let ids: Vec<_> = r.iter().map(|p| p.player_id.as_str()).collect();
        assert_eq!(ids, ["A", "B"]);
        assert_abs_diff_eq!(r[0].trend.delta, -1.0, epsilon = 1e-12);

        let one = most_improved(&players[..1], 125, TrendMetric::Delta).unwrap();
        assert_eq!(one[0].player_id, "B");
        assert!(most_improved(&players[2..], 125, TrendMetric::Delta).is_err());

        let tie = vec![trending("Z", 5, -1.0), trending("Y", 6, -1.0)];
        let r = most_improved(&tie, 125, TrendMetric::Slope).unwrap();
        assert_eq!(r[0].player_id, "Y");
    }

    #[test]
    fn leaderboard_sorted() {
        let profiles = vec![
            player_aggregate("B", zs(&[0.5, 0.2])).unwrap(),
            player_aggregate("A", zs(&[-1.0])).unwrap(),
            player_aggregate("C", zs(&[0.3, 0.3])).unwrap(),
        ];
        let ml = vec![MoneyListEntry {
            rank: 1,
            player_id: "A".into(),
        }];
        let rows = leaderboard(&profiles, &ml);
        let ids: Vec<_> = rows.iter().map(|r| r.player_id.as_str()).collect();
        assert_eq!(ids, ["A", "C", "B"]);
        assert_eq!(rows[0].money_rank, Some(1));
        assert_eq!(rows[0].trend_delta, None);
        assert!(rows[1].trend_slope.is_some());
    }

    fn event_rounds(strokes: &[i32]) -> Vec<RoundScore> {
        strokes
            .iter()
            .enumerate()
            .map(|(i, &s)| round("E", &format!("P{i}"), 1, s))
            .collect()
    }

    proptest! {
        #[test]
        fn standardization_identity(strokes in proptest::collection::vec(60i32..90, 2..300)) {
            prop_assume!(strokes.iter().any(|&s| s != strokes[0]));
            let z = season_zscores(&event_rounds(&strokes), Standardization::PooledEvent).unwrap();
            let n = z.len() as f64;
            let mean = z.iter().map(|z| z.z).sum::<f64>() / n;
            let sd = (z.iter().map(|z| (z.z - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() < 1e-12);
            prop_assert!((sd - 1.0).abs() < 1e-12);
        }

        #[test]
        fn affine_invariance(strokes in proptest::collection::vec(60i32..90, 2..200), shift in -20i32..20, scale in 1i32..4) {
            prop_assume!(strokes.iter().any(|&s| s != strokes[0]));
            let base = season_zscores(&event_rounds(&strokes), Standardization::PooledEvent).unwrap();
            let moved: Vec<i32> = strokes.iter().map(|&s| 200 + scale * (s - 75) + shift).collect();
            let other = season_zscores(&event_rounds(&moved), Standardization::PooledEvent).unwrap();
            for (a, b) in base.iter().zip(&other) {
                prop_assert!((a.z - b.z).abs() < 1e-12);
            }
        }

        #[test]
        fn trend_recovers_line(a in -2.0f64..2.0, b in -0.1f64..0.1, n in 2usize..120) {
            let values: Vec<f64> = (0..n).map(|i| a + b * i as f64).collect();
            let t = trend_fit(&player_aggregate("P", zs(&values)).unwrap()).unwrap();
            prop_assert!((t.intercept - a).abs() < 1e-10);
            prop_assert!((t.slope - b).abs() < 1e-10);
        }

        #[test]
        fn money_fit_ignores_rank_one(top in -5.0f64..5.0) {
            let mut line: Vec<_> = (1..=60).map(|r| ranked(r, 0.0023 * f64::from(r) + 0.01 * f64::from(r % 3))).collect();
            let base = money_list_regression(&line).unwrap();
            line[0].profile.mu_z = top;
            prop_assert_eq!(money_list_regression(&line).unwrap(), base);
        }

        #[test]
        fn most_improved_permutation_invariant(deltas in proptest::collection::vec(-3i32..3, 1..12), rot in 0usize..12) {
            let players: Vec<_> = deltas.iter().enumerate()
                .map(|(i, &d)| trending(&format!("P{i:02}"), i as u32 + 1, f64::from(d) * 0.5))
                .collect();
            let mut shuffled = players.clone();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let a = most_improved(&players, 125, TrendMetric::Delta).unwrap();
            let b = most_improved(&shuffled, 125, TrendMetric::Delta).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
