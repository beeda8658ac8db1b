//! Monte Carlo simulation of stroke-play tournaments and careers.
//!
//! Players are described by the mean and spread of their per-round z-scores.
//! A tournament draws `rounds` Gaussian z-scores per player; the lowest total
//! wins. A career is a sequence of tournaments for one fictitious player with
//! fixed (μ_z, σ_z) against a fixed field, tallying wins and the longest run
//! of consecutive wins.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

/// Fictitious player's σ_z unless overridden.
pub const DEFAULT_FICTITIOUS_SIGMA_Z: f64 = 0.85;
pub const DEFAULT_ROUNDS: u32 = 4;
pub const DEFAULT_TOURNAMENTS: u32 = 300;
pub const DEFAULT_CAREERS: u32 = 10_000;
pub const DEFAULT_STREAK_K: u32 = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPlayer {
    pub player_id: String,
    pub mu_z: f64,
    pub sigma_z: f64,
}

impl SimPlayer {
    pub fn new(player_id: impl Into<String>, mu_z: f64, sigma_z: f64) -> Result<Self> {
        if !mu_z.is_finite() {
            return Err(Error::invalid(format!("mu_z must be finite, got {mu_z}")));
        }
        if !sigma_z.is_finite() || sigma_z < 0.0 {
            return Err(Error::invalid(format!(
                "sigma_z must be finite and non-negative, got {sigma_z}"
            )));
        }
        Ok(Self {
            player_id: player_id.into(),
            mu_z,
            sigma_z,
        })
    }

    #[inline]
    fn total<R: Rng + ?Sized>(&self, rounds: u32, rng: &mut R) -> f64 {
        let mut t = 0.0;
        for _ in 0..rounds {
            let z: f64 = rng.sample(StandardNormal);
            t += self.mu_z + self.sigma_z * z;
        }
        t
    }
}

/// Synthetic field built from a money-list line μ_z(r) = slope·(r − pivot_rank).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub slope: f64,
    pub pivot_rank: u32,
    pub min_rank: u32,
    pub max_rank: u32,
    /// The best `size` players by μ_z are kept.
    pub size: usize,
    pub sigma_z: f64,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self {
            slope: 0.0023,
            pivot_rank: 125,
            min_rank: 2,
            max_rank: 200,
            size: 155,
            sigma_z: 1.0,
        }
    }
}

impl FieldSpec {
    /// Players sorted best (lowest μ_z) first.
    pub fn build(&self) -> Result<Vec<SimPlayer>> {
        if self.min_rank > self.max_rank {
            return Err(Error::invalid("field rank range is empty"));
        }
        let mut players = (self.min_rank..=self.max_rank)
            .map(|r| {
                let mu = self.slope * (f64::from(r) - f64::from(self.pivot_rank));
                SimPlayer::new(format!("R{r:03}"), mu, self.sigma_z).map(|p| (r, p))
            })
            .collect::<Result<Vec<_>>>()?;
        if self.size == 0 || self.size > players.len() {
            return Err(Error::invalid(format!(
                "field size {} not in 1..={}",
                self.size,
                players.len()
            )));
        }
        players.sort_by(|(ra, a), (rb, b)| a.mu_z.total_cmp(&b.mu_z).then(ra.cmp(rb)));
        players.truncate(self.size);
        Ok(players.into_iter().map(|(_, p)| p).collect())
    }
}

/// Short content hash identifying a field in sweep output.
pub fn field_hash(field: &[SimPlayer]) -> String {
    let mut h = Sha256::new();
    for p in field {
        h.update(p.player_id.as_bytes());
        h.update([0u8]);
        h.update(p.mu_z.to_bits().to_le_bytes());
        h.update(p.sigma_z.to_bits().to_le_bytes());
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn check_field(field: &[SimPlayer]) -> Result<()> {
    if field.is_empty() {
        return Err(Error::invalid("tournament field is empty"));
    }
    for p in field {
        SimPlayer::new(p.player_id.clone(), p.mu_z, p.sigma_z)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentConfig {
    pub field: Vec<SimPlayer>,
    pub rounds: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentOutcome {
    pub winner: usize,
    pub winner_id: String,
    pub totals: Vec<f64>,
    /// Players sharing the lowest total before the playoff.
    pub tied_leaders: usize,
}

/// Play one tournament. Ties for the lead go to a uniform draw among the
/// tied players from the same stream.
pub fn play_tournament<R: Rng + ?Sized>(field: &[SimPlayer], rounds: u32, rng: &mut R) -> Result<TournamentOutcome> {
    check_field(field)?;
    if rounds == 0 {
        return Err(Error::invalid("a tournament needs at least one round"));
    }
    let totals: Vec<f64> = field.iter().map(|p| p.total(rounds, rng)).collect();
    let best = totals.iter().copied().fold(f64::INFINITY, f64::min);
    let leaders: Vec<usize> = (0..totals.len()).filter(|&i| totals[i] == best).collect();
    let winner = if leaders.len() == 1 {
        leaders[0]
    } else {
        leaders[rng.random_range(0..leaders.len())]
    };
    Ok(TournamentOutcome {
        winner,
        winner_id: field[winner].player_id.clone(),
        totals,
        tied_leaders: leaders.len(),
    })
}

pub fn simulate_tournament(config: &TournamentConfig) -> Result<TournamentOutcome> {
    let mut rng = rng::stream(config.seed, 0);
    play_tournament(&config.field, config.rounds, &mut rng)
}

/// Whether `player` wins against `field`. The player's rounds are drawn
/// first and the field is abandoned as soon as someone beats the player.
fn player_wins(player: &SimPlayer, field: &[SimPlayer], rounds: u32, rng: &mut SimRng) -> bool {
    let target = player.total(rounds, rng);
    let mut tied = 0u32;
    for p in field {
        let t = p.total(rounds, rng);
        if t < target {
            return false;
        }
        if t == target {
            tied += 1;
        }
    }
    tied == 0 || rng.random_range(0..=tied) == 0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CareerConfig {
    pub tournaments: u32,
    pub careers: u32,
    pub streak_k: u32,
    pub rounds: u32,
    pub seed: u64,
}

impl CareerConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            tournaments: DEFAULT_TOURNAMENTS,
            careers: DEFAULT_CAREERS,
            streak_k: DEFAULT_STREAK_K,
            rounds: DEFAULT_ROUNDS,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.tournaments == 0 || self.careers == 0 || self.streak_k == 0 || self.rounds == 0 {
            return Err(Error::invalid(
                "tournaments, careers, streak length and rounds must all be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CareerSimResult {
    pub mu_z_fictitious: f64,
    pub sigma_z_fictitious: f64,
    /// Wins per tournament over all simulated careers.
    pub win_probability: f64,
    /// Fraction of careers whose longest win run reached `k`.
    pub prob_streak_ge_k: f64,
    pub k: u32,
    pub tournaments_per_career: u32,
    pub careers: u32,
    pub mc_stderr_win: f64,
    pub mc_stderr_streak: f64,
    pub total_wins: u64,
    pub streak_careers: u64,
}

/// Simulate `config.careers` careers of `fictitious` against `field`.
///
/// Career `c` uses stream `c` of the master seed, and tournament `t` within
/// it starts at block `t` of that stream. Tallies are integers, so the
/// result is identical for any rayon pool size. Reusing the seed across
/// different fictitious μ_z values gives common random numbers: every field
/// draw is shared, which keeps sweeps monotone.
pub fn simulate_career(field: &[SimPlayer], fictitious: &SimPlayer, config: &CareerConfig) -> Result<CareerSimResult> {
    check_field(field)?;
    check_field(std::slice::from_ref(fictitious))?;
    config.validate()?;
    let k = config.streak_k;
    let (total_wins, streak_careers) = (0..config.careers)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(config.seed, u64::from(c));
            let (mut wins, mut run, mut best) = (0u64, 0u32, 0u32);
            for t in 0..config.tournaments {
                rng::seek_block(&mut rng, u64::from(t));
                if player_wins(fictitious, field, config.rounds, &mut rng) {
                    wins += 1;
                    run += 1;
                    best = best.max(run);
                } else {
                    run = 0;
                }
            }
            (wins, u64::from(best >= k))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let trials = f64::from(config.careers) * f64::from(config.tournaments);
    let careers = f64::from(config.careers);
    let p_win = total_wins as f64 / trials;
    let p_streak = streak_careers as f64 / careers;
    Ok(CareerSimResult {
        mu_z_fictitious: fictitious.mu_z,
        sigma_z_fictitious: fictitious.sigma_z,
        win_probability: p_win,
        prob_streak_ge_k: p_streak,
        k,
        tournaments_per_career: config.tournaments,
        careers: config.careers,
        mc_stderr_win: (p_win * (1.0 - p_win) / trials).sqrt(),
        mc_stderr_streak: (p_streak * (1.0 - p_streak) / careers).sqrt(),
        total_wins,
        streak_careers,
    })
}

/// One career simulation per μ_z in `mu_z_grid`, all with the same seed.
pub fn sweep_mu_z(
    field: &[SimPlayer],
    sigma_z_fictitious: f64,
    mu_z_grid: &[f64],
    config: &CareerConfig,
) -> Result<Vec<CareerSimResult>> {
    if mu_z_grid.is_empty() {
        return Err(Error::invalid("mu_z grid is empty"));
    }
    check_field(field)?;
    mu_z_grid
        .iter()
        .map(|&mu| {
            let fictitious = SimPlayer::new("FICTITIOUS", mu, sigma_z_fictitious)?;
            simulate_career(field, &fictitious, config)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identical(m: usize) -> Vec<SimPlayer> {
        (0..m)
            .map(|i| SimPlayer::new(format!("P{i}"), 0.0, 1.0).unwrap())
            .collect()
    }

    #[test]
    fn reconstructed_field_shape() {
        let field = FieldSpec::default().build().unwrap();
        assert_eq!(field.len(), 155);
        assert_eq!(field[0].player_id, "R002");
        assert!((field[0].mu_z - 0.0023 * -123.0).abs() < 1e-15);
        assert_eq!(field[154].player_id, "R156");
        assert!(field.windows(2).all(|w| w[0].mu_z <= w[1].mu_z));
        assert!(field.iter().all(|p| p.sigma_z == 1.0));
        assert_eq!(field_hash(&field), field_hash(&FieldSpec::default().build().unwrap()));
        assert_eq!(field_hash(&field).len(), 16);
        assert_ne!(field_hash(&field), field_hash(&field[1..]));
    }

    #[test]
    fn field_spec_errors() {
        assert!(FieldSpec {
            size: 0,
            ..FieldSpec::default()
        }
        .build()
        .is_err());
        assert!(FieldSpec {
            size: 500,
            ..FieldSpec::default()
        }
        .build()
        .is_err());
        assert!(FieldSpec {
            sigma_z: -1.0,
            ..FieldSpec::default()
        }
        .build()
        .is_err());
        assert!(FieldSpec {
            min_rank: 10,
            max_rank: 5,
            ..FieldSpec::default()
        }
        .build()
        .is_err());
    }

    #[test]
    fn single_player_always_wins() {
        let field = identical(1);
        for seed in 0..20 {
            let cfg = TournamentConfig {
                field: field.clone(),
                rounds: 4,
                seed,
            };
            let out = simulate_tournament(&cfg).unwrap();
            assert_eq!(out.winner, 0);
            assert_eq!(out.totals.len(), 1);
        }
    }

    #[test]
    fn tournament_errors() {
        let mut rng = rng::stream(1, 0);
        assert!(play_tournament(&[], 4, &mut rng).is_err());
        assert!(play_tournament(&identical(2), 0, &mut rng).is_err());
        let bad = vec![SimPlayer {
            player_id: "X".into(),
            mu_z: 0.0,
            sigma_z: -1.0,
        }];
        assert!(play_tournament(&bad, 4, &mut rng).is_err());
    }

    #[test]
    fn ties_resolved_uniformly() {
        // σ = 0 makes every total identical.
        let field: Vec<_> = (0..3)
            .map(|i| SimPlayer::new(format!("P{i}"), 0.5, 0.0).unwrap())
            .collect();
        let mut rng = rng::stream(3, 0);
        let mut counts = [0u32; 3];
        for _ in 0..3000 {
            let out = play_tournament(&field, 4, &mut rng).unwrap();
            assert_eq!(out.tied_leaders, 3);
            counts[out.winner] += 1;
        }
        assert!(counts.iter().all(|&c| (900..=1100).contains(&c)), "{counts:?}");
    }

    #[test]
    fn lowest_total_wins() {
        let field = vec![
            SimPlayer::new("A", 0.0, 1.0).unwrap(),
            SimPlayer::new("B", -100.0, 1.0).unwrap(),
        ];
        let mut rng = rng::stream(9, 0);
        let out = play_tournament(&field, 4, &mut rng).unwrap();
        assert_eq!(out.winner_id, "B");
        let best = out.totals.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(out.totals[out.winner], best);
    }

    #[test]
    fn dominant_player_wins() {
        let mut field = FieldSpec::default().build().unwrap();
        field.push(SimPlayer::new("F", -100.0, 1.0).unwrap());
        let mut rng = rng::stream(5, 0);
        let wins = (0..10_000)
            .filter(|_| play_tournament(&field, 4, &mut rng).unwrap().winner_id == "F")
            .count();
        assert!(wins >= 9999);
    }

    #[test]
    fn two_identical_players_split() {
        let field = identical(2);
        let mut rng = rng::stream(11, 0);
        let n = 10_000;
        let first = (0..n)
            .filter(|_| play_tournament(&field, 4, &mut rng).unwrap().winner == 0)
            .count();
        let p = first as f64 / n as f64;
        assert!((p - 0.5).abs() <= 3.0 * (0.25f64 / n as f64).sqrt(), "{p}");
    }

    #[test]
    fn fast_path_agrees_with_full_tournament() {
        let field = FieldSpec {
            size: 20,
            ..FieldSpec::default()
        }
        .build()
        .unwrap();
        let hero = SimPlayer::new("H", -0.6, 0.85).unwrap();
        let mut full = field.clone();
        full.insert(0, hero.clone());
        let n = 20_000;
        let mut r1 = rng::stream(1, 0);
        let mut r2 = rng::stream(2, 0);
        let a = (0..n)
            .filter(|_| play_tournament(&full, 4, &mut r1).unwrap().winner == 0)
            .count();
        let b = (0..n).filter(|_| player_wins(&hero, &field, 4, &mut r2)).count();
        let (pa, pb) = (a as f64 / n as f64, b as f64 / n as f64);
        let se = (pa * (1.0 - pa) / n as f64 + pb * (1.0 - pb) / n as f64).sqrt();
        assert!((pa - pb).abs() < 4.0 * se, "{pa} vs {pb}");
    }

    #[test]
    fn career_exchangeable_field() {
        let field = identical(9);
        let hero = SimPlayer::new("H", 0.0, 1.0).unwrap();
        let cfg = CareerConfig {
            tournaments: 100,
            careers: 200,
            streak_k: 3,
            rounds: 4,
            seed: 17,
        };
        let r = simulate_career(&field, &hero, &cfg).unwrap();
        let trials = 20_000.0;
        assert!((r.win_probability - 0.1).abs() < 3.0 * (0.1f64 * 0.9 / trials).sqrt());
        assert_eq!(r.total_wins as f64 / trials, r.win_probability);
    }

    #[test]
    fn career_deterministic_across_pools() {
        let field = FieldSpec {
            size: 30,
            ..FieldSpec::default()
        }
        .build()
        .unwrap();
        let hero = SimPlayer::new("H", -1.0, 0.85).unwrap();
        let cfg = CareerConfig {
            tournaments: 50,
            careers: 64,
            streak_k: 3,
            rounds: 4,
            seed: 4,
        };
        let a = simulate_career(&field, &hero, &cfg).unwrap();
        for threads in [1, 2, 5] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let b = pool.install(|| simulate_career(&field, &hero, &cfg).unwrap());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sweep_monotone_under_common_numbers() {
        let field = FieldSpec {
            size: 40,
            ..FieldSpec::default()
        }
        .build()
        .unwrap();
        let cfg = CareerConfig {
            tournaments: 40,
            careers: 100,
            streak_k: 3,
            rounds: 4,
            seed: 8,
        };
        let grid = [-0.2, -0.6, -1.0, -1.4];
        let res = sweep_mu_z(&field, 0.85, &grid, &cfg).unwrap();
        assert_eq!(res.len(), 4);
        for w in res.windows(2) {
            assert!(w[1].total_wins >= w[0].total_wins);
            assert!(w[1].streak_careers >= w[0].streak_careers);
        }
        assert!(res[3].win_probability > res[0].win_probability);
    }

    #[test]
    fn sweep_errors() {
        let cfg = CareerConfig::new(1);
        assert!(sweep_mu_z(&identical(3), 0.85, &[], &cfg).is_err());
        assert!(sweep_mu_z(&[], 0.85, &[0.0], &cfg).is_err());
        let bad = CareerConfig { careers: 0, ..cfg };
        assert!(sweep_mu_z(&identical(3), 0.85, &[0.0], &bad).is_err());
    }
}
