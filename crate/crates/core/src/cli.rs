//! `golfstat` command line.
//!
//! Every analysis stage is a subcommand that writes plot-ready CSV
//! (default for tables) or JSON (default for single results). Commands that
//! draw random numbers take `--seed`; when it is omitted a seed is generated
//! and printed to stderr, and `--manifest` records the exact argument list so
//! `golfstat replay` reproduces the output bit for bit.
//!
//! Exit codes: 0 success, 1 I/O, 2 validation, 3 numeric/domain.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data_io::{self, MoneyListEntry};
use crate::error::{Error, Result};
use crate::gof::{self, MetaSimConfig};
use crate::regression::LinearFit;
use crate::score_model::{self, EventModel, RoundScore, DEFAULT_MODEL_SAMPLES};
use crate::streak::streak_probability_oracle;
use crate::synth::{self, SeasonSpec, SyntheticEvent};
use crate::tournament::{self, CareerConfig, CareerSimResult, FieldSpec, SimPlayer};
use crate::zscore::{self, Standardization, TrendMetric};

pub const THREADS_ENV: &str = "GOLFSTAT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "golfstat",
    version,
    about = "Gaussian golf score modeling, KS validation, z-scores and streak simulation"
)]
pub struct Cli {
    /// Output format (tables default to csv, single results to json).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output here instead of stdout.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,

    /// Write a JSON run manifest here.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct EventArgs {
    #[arg(long)]
    pub rounds: PathBuf,
    #[arg(long)]
    pub event: String,
}

#[derive(Debug, Args, Serialize)]
pub struct SeasonArgs {
    #[arg(long)]
    pub rounds: PathBuf,
    /// Standardize each round separately instead of pooling the event.
    #[arg(long)]
    pub per_round: bool,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Fit an event's mean and standard deviation.
    Fit {
        #[command(flatten)]
        event: EventArgs,
    },
    /// Score histogram with Poisson errors beside the sampled model.
    Dist {
        #[command(flatten)]
        event: EventArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_MODEL_SAMPLES)]
        model_samples: usize,
    },
    /// Two-sample KS test of an event against its model.
    Ks {
        #[command(flatten)]
        event: EventArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_MODEL_SAMPLES)]
        model_samples: usize,
    },
    /// 100-point QQ series of an event against its model.
    Qq {
        #[command(flatten)]
        event: EventArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_MODEL_SAMPLES)]
        model_samples: usize,
        /// Add presentation-only Gaussian jitter (σ = 0.2 strokes).
        #[arg(long)]
        dither: bool,
    },
    /// Per-event moments with σ_s/√N uncertainties.
    Events {
        #[arg(long)]
        rounds: PathBuf,
    },
    /// Simulated p-value distribution for every event in a rounds file.
    Pvalues {
        #[arg(long)]
        rounds: PathBuf,
        #[arg(long, default_value_t = 100)]
        meta_iterations: u32,
        #[arg(long, default_value_t = DEFAULT_MODEL_SAMPLES)]
        model_samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = THREADS_ENV)]
        threads: Option<usize>,
        /// Also write observed per-event KS results here and report the
        /// observed-vs-simulated KS comparison on stderr.
        #[arg(long)]
        observed_out: Option<PathBuf>,
    },
    /// Linear fit of σ_s against μ_s across events.
    MuSigmaFit {
        #[arg(long)]
        rounds: PathBuf,
    },
    /// Per-round z-scores.
    Zscores {
        #[command(flatten)]
        season: SeasonArgs,
    },
    /// Players sorted by mean z-score.
    Leaderboard {
        #[command(flatten)]
        season: SeasonArgs,
        #[arg(long)]
        money_list: Option<PathBuf>,
    },
    /// Most-improved ranking, or one player's chronological series.
    Trend {
        #[command(flatten)]
        season: SeasonArgs,
        #[arg(long)]
        money_list: PathBuf,
        #[arg(long, value_enum, default_value_t = RankBy::Delta)]
        rank_by: RankBy,
        #[arg(long, default_value_t = zscore::DEFAULT_TOP_K_MONEY)]
        top: u32,
        /// Emit this player's z-series and fitted trend instead of the ranking.
        #[arg(long)]
        player: Option<String>,
    },
    /// Linear fit of mean z-score against money-list position (rank 1 excluded).
    MoneyFit {
        #[command(flatten)]
        season: SeasonArgs,
        #[arg(long)]
        money_list: PathBuf,
        #[arg(long, default_value_t = zscore::MONEY_LIST_MAX_RANK)]
        max_rank: u32,
    },
    /// Career sweep over fictitious-player mean z-scores.
    Sim {
        /// "start:stop:step" (inclusive) or a comma-separated list.
        #[arg(long, allow_hyphen_values = true, default_value = "-0.5:-2.5:-0.25")]
        mu_z_grid: String,
        #[arg(long, default_value_t = tournament::DEFAULT_CAREERS)]
        careers: u32,
        #[arg(long, default_value_t = tournament::DEFAULT_TOURNAMENTS)]
        tournaments: u32,
        #[arg(long, default_value_t = tournament::DEFAULT_STREAK_K)]
        streak_k: u32,
        #[arg(long, default_value_t = tournament::DEFAULT_ROUNDS)]
        rounds_per_tournament: u32,
        /// "reconstructed" or a field CSV (player_id,mu_z,sigma_z).
        #[arg(long, default_value = "reconstructed")]
        field_spec: String,
        /// σ_z of the reconstructed field's players.
        #[arg(long, default_value_t = 1.0)]
        field_sigma_z: f64,
        #[arg(long, default_value_t = tournament::DEFAULT_FICTITIOUS_SIGMA_Z)]
        sigma_z_fictitious: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = THREADS_ENV)]
        threads: Option<usize>,
    },
    /// Exact probability of a run of ≥ k wins in n Bernoulli(p) trials.
    Streak {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    /// Synthetic single-event rounds file.
    SynthEvent {
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "SYN")]
        event_id: String,
        #[arg(long, default_value_t = 6)]
        rounds_per_player: u32,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Synthetic season: rounds.csv, events.csv and money_list.csv.
    SynthSeason {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 46)]
        events: u32,
        #[arg(long, default_value_t = 200)]
        players: u32,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-run the command recorded in a manifest.
    Replay { manifest_path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum RankBy {
    Delta,
    Slope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: Option<u64>,
    /// Full argument list with the seed made explicit.
    pub args: Vec<String>,
    pub inputs: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub parameters: serde_json::Value,
    pub notes: BTreeMap<String, String>,
    pub tool_version: String,
}

/// Row of the career sweep output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu_z: f64,
    pub win_probability: f64,
    pub mc_stderr_win: f64,
    pub prob_streak_ge_k: f64,
    pub mc_stderr_streak: f64,
    pub careers: u32,
    pub tournaments: u32,
    pub k: u32,
    pub field_hash: String,
    pub seed: u64,
}

impl SweepRow {
    pub fn new(r: &CareerSimResult, field_hash: &str, seed: u64) -> Self {
        Self {
            mu_z: r.mu_z_fictitious,
            win_probability: r.win_probability,
            mc_stderr_win: r.mc_stderr_win,
            prob_streak_ge_k: r.prob_streak_ge_k,
            mc_stderr_streak: r.mc_stderr_streak,
            careers: r.careers,
            tournaments: r.tournaments_per_career,
            k: r.k,
            field_hash: field_hash.to_string(),
            seed,
        }
    }
}

/// Parse "start:stop:step" (inclusive within 1e-9) or "a,b,c".
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad grid number {s:?}")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::invalid(format!("grid value {s:?} is not finite")))
        }
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step == 0.0 || (stop - start) * step < 0.0 {
                return Err(Error::invalid(format!(
                    "grid step {step} never reaches {stop} from {start}"
                )));
            }
            let span = (stop - start) / step;
            if span > 1e6 {
                return Err(Error::invalid("grid has more than a million points"));
            }
            let count = (span + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        [list] => list.split(',').map(num).collect(),
        _ => Err(Error::invalid(format!(
            "grid {spec:?} is neither start:stop:step nor a list"
        ))),
    }
}

struct Output {
    format: Format,
    path: Option<PathBuf>,
}

impl Output {
    fn sink(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.path {
            Some(p) => Box::new(std::fs::File::create(p).map_err(|source| Error::Io {
                path: p.clone(),
                source,
            })?),
            None => Box::new(std::io::stdout().lock()),
        })
    }

    fn io_err(&self, e: std::io::Error) -> Error {
        Error::Io {
            path: self.path.clone().unwrap_or_else(|| PathBuf::from("<stdout>")),
            source: e,
        }
    }

    fn csv_err(&self, e: csv::Error) -> Error {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => self.io_err(io),
                _ => unreachable!(),
            }
        } else {
            Error::invalid(e.to_string())
        }
    }

    fn rows<T: Serialize>(&self, rows: &[T]) -> Result<()> {
        let mut sink = self.sink()?;
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut sink);
                for r in rows {
                    w.serialize(r).map_err(|e| self.csv_err(e))?;
                }
                w.flush().map_err(|e| self.io_err(e))?;
            }
            Format::Json => {
                serde_json::to_writer_pretty(&mut sink, rows).map_err(|e| Error::invalid(e.to_string()))?;
                writeln!(sink).map_err(|e| self.io_err(e))?;
            }
        }
        sink.flush().map_err(|e| self.io_err(e))
    }

    /// Single result; JSON unless csv was requested, in which case it is a one-row table.
    fn object<T: Serialize>(&self, value: &T) -> Result<()> {
        match self.format {
            Format::Csv => self.rows(std::slice::from_ref(value)),
            Format::Json => {
                let mut sink = self.sink()?;
                serde_json::to_writer_pretty(&mut sink, value).map_err(|e| Error::invalid(e.to_string()))?;
                writeln!(sink).map_err(|e| self.io_err(e))?;
                sink.flush().map_err(|e| self.io_err(e))
            }
        }
    }
}

fn fresh_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_nanos() as u64);
    nanos ^ (u64::from(std::process::id()) << 32)
}

fn event_rounds(args: &EventArgs) -> Result<(EventModel, Vec<RoundScore>)> {
    let rounds: Vec<RoundScore> = data_io::load_rounds(&args.rounds)?
        .into_iter()
        .filter(|r| r.event_id == args.event)
        .collect();
    if rounds.is_empty() {
        return Err(Error::invalid(format!("no rounds for event {}", args.event)));
    }
    let strokes: Vec<i32> = rounds.iter().map(|r| r.strokes).collect();
    Ok((score_model::fit_moments(args.event.clone(), &strokes)?, rounds))
}

fn strokes_of(rounds: &[RoundScore]) -> Vec<i32> {
    rounds.iter().map(|r| r.strokes).collect()
}

fn standardization(season: &SeasonArgs) -> Standardization {
    if season.per_round {
        Standardization::PerRound
    } else {
        Standardization::PooledEvent
    }
}

fn season_profiles(season: &SeasonArgs) -> Result<Vec<zscore::PlayerZProfile>> {
    let rounds = data_io::load_rounds(&season.rounds)?;
    let z = zscore::season_zscores(&rounds, standardization(season))?;
    zscore::player_profiles(&z)
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(0) => Err(Error::invalid("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numeric(format!("cannot start thread pool: {e}")))?
            .install(f),
        None => f(),
    }
}

#[derive(Serialize)]
struct DistRow {
    score: i32,
    count: u64,
    probability: f64,
    uncertainty: f64,
    model_probability: f64,
    analytic_probability: Option<f64>,
}

#[derive(Serialize)]
struct QqRow {
    level: f64,
    data_quantile: f64,
    model_quantile: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    data_dithered: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model_dithered: Option<f64>,
}

#[derive(Serialize)]
struct EventRow {
    event_id: String,
    mu_s: f64,
    sigma_s: f64,
    n_scores: usize,
    mu_s_uncertainty: f64,
}

#[derive(Serialize)]
struct ObservedRow {
    event_id: String,
    n_scores: usize,
    d_statistic: f64,
    p_value: f64,
}

#[derive(Serialize)]
struct MoneyFitReport {
    fit: LinearFit,
    max_rank: u32,
    excluded_player: Option<String>,
    mean_sigma_s: f64,
    strokes_per_50_positions: f64,
}

#[derive(Serialize)]
struct ImprovedRow {
    position: usize,
    player_id: String,
    money_rank: u32,
    mu_z: f64,
    n: usize,
    slope: f64,
    intercept: f64,
    start_value: f64,
    end_value: f64,
    delta: f64,
}

#[derive(Serialize)]
struct SeriesRow {
    index: usize,
    date: chrono::NaiveDate,
    event_id: String,
    round_index: u32,
    z: f64,
    trend: f64,
    mu_z: f64,
}

#[derive(Serialize)]
struct StreakReport {
    p: f64,
    n: usize,
    k: usize,
    probability: f64,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    sigma_z_fictitious: f64,
    field_size: usize,
    field_hash: &'a str,
    assumptions: Vec<&'a str>,
    rows: &'a [SweepRow],
}

/// Outcome of a run: the resolved seed plus manifest extras.
#[derive(Default)]
struct RunInfo {
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    notes: BTreeMap<String, String>,
}

fn resolve(seed: Option<u64>, info: &mut RunInfo) -> u64 {
    let s = seed.unwrap_or_else(|| {
        let s = fresh_seed();
        eprintln!("seed: {s}");
        s
    });
    info.seed = Some(s);
    s
}

fn execute(cli: &Cli, info: &mut RunInfo) -> Result<()> {
    let table = Output {
        format: cli.format.unwrap_or(Format::Csv),
        path: cli.out.clone(),
    };
    let single = Output {
        format: cli.format.unwrap_or(Format::Json),
        path: cli.out.clone(),
    };
    match &cli.command {
        Command::Fit { event } => {
            info.inputs.push(event.rounds.clone());
            let (model, _) = event_rounds(event)?;
            single.object(&model)
        }
        Command::Dist {
            event,
            seed,
            model_samples,
        } => {
            info.inputs.push(event.rounds.clone());
            let seed = resolve(*seed, info);
            let (model, rounds) = event_rounds(event)?;
            let hist = score_model::empirical_distribution(&strokes_of(&rounds))?;
            let sampled = score_model::DiscretizedGaussianModel::for_event(&model, *model_samples, seed)?;
            let model_hist = score_model::empirical_distribution(&sampled.samples)?;
            let lo = hist
                .bins
                .first()
                .map(|b| b.score)
                .into_iter()
                .chain(model_hist.bins.first().map(|b| b.score))
                .min();
            let hi = hist
                .bins
                .last()
                .map(|b| b.score)
                .into_iter()
                .chain(model_hist.bins.last().map(|b| b.score))
                .max();
            let rows: Vec<DistRow> = match (lo, hi) {
                (Some(lo), Some(hi)) => (lo..=hi)
                    .map(|score| {
                        let bin = hist.bins.iter().find(|b| b.score == score);
                        DistRow {
                            score,
                            count: bin.map_or(0, |b| b.count),
                            probability: bin.map_or(0.0, |b| b.probability),
                            uncertainty: bin.map_or(0.0, |b| b.uncertainty),
                            model_probability: model_hist.probability(score),
                            analytic_probability: score_model::discretized_pmf(model.mu_s, model.sigma_s, score).ok(),
                        }
                    })
                    .collect(),
                _ => Vec::new(),
            };
            table.rows(&rows)
        }
        Command::Ks {
            event,
            seed,
            model_samples,
        } => {
            info.inputs.push(event.rounds.clone());
            let seed = resolve(*seed, info);
            let (model, rounds) = event_rounds(event)?;
            let sampled = score_model::DiscretizedGaussianModel::for_event(&model, *model_samples, seed)?;
            single.object(&gof::event_ks_test(&strokes_of(&rounds), &sampled)?)
        }
        Command::Qq {
            event,
            seed,
            model_samples,
            dither,
        } => {
            info.inputs.push(event.rounds.clone());
            let seed = resolve(*seed, info);
            let (model, rounds) = event_rounds(event)?;
            let sampled = score_model::DiscretizedGaussianModel::for_event(&model, *model_samples, seed)?;
            let dither_seed = dither.then(|| seed.wrapping_add(1));
            let qq = gof::qq_points_int(&strokes_of(&rounds), &sampled, dither_seed)?;
            if *dither {
                info.notes.insert(
                    "dither".into(),
                    format!("presentation-only jitter, sigma {} strokes", qq.dither_sigma),
                );
            }
            let rows: Vec<QqRow> = qq
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| QqRow {
                    level: p.level,
                    data_quantile: p.data_quantile,
                    model_quantile: p.model_quantile,
                    data_dithered: qq.dithered.as_ref().map(|d| d[i].0),
                    model_dithered: qq.dithered.as_ref().map(|d| d[i].1),
                })
                .collect();
            table.rows(&rows)
        }
        Command::Events { rounds } => {
            info.inputs.push(rounds.clone());
            let models = zscore::fit_event_models(&data_io::load_rounds(rounds)?)?;
            let rows: Vec<EventRow> = models
                .into_iter()
                .map(|m| EventRow {
                    mu_s_uncertainty: m.sigma_s / (m.n_scores as f64).sqrt(),
                    event_id: m.event_id,
                    mu_s: m.mu_s,
                    sigma_s: m.sigma_s,
                    n_scores: m.n_scores,
                })
                .collect();
            table.rows(&rows)
        }
        Command::Pvalues {
            rounds,
            meta_iterations,
            model_samples,
            seed,
            threads,
            observed_out,
        } => {
            info.inputs.push(rounds.clone());
            let seed = resolve(*seed, info);
            let all = data_io::load_rounds(rounds)?;
            let models = zscore::fit_event_models(&all)?;
            let config = MetaSimConfig {
                iterations: *meta_iterations,
                model_samples: *model_samples,
                seed,
            };
            let sims = with_threads(*threads, || gof::simulate_pvalues(&models, &config))?;
            if let Some(path) = observed_out {
                let events: Vec<(EventModel, Vec<i32>)> = models
                    .iter()
                    .map(|m| {
                        let s: Vec<i32> = all
                            .iter()
                            .filter(|r| r.event_id == m.event_id)
                            .map(|r| r.strokes)
                            .collect();
                        (m.clone(), s)
                    })
                    .collect();
                let observed = with_threads(*threads, || gof::observed_pvalues(&events, *model_samples, seed))?;
                let rows: Vec<ObservedRow> = models
                    .iter()
                    .zip(&observed)
                    .map(|(m, k)| ObservedRow {
                        event_id: m.event_id.clone(),
                        n_scores: m.n_scores,
                        d_statistic: k.d_statistic,
                        p_value: k.p_value,
                    })
                    .collect();
                Output {
                    format: table.format,
                    path: Some(path.clone()),
                }
                .rows(&rows)?;
                let obs: Vec<f64> = observed.iter().map(|k| k.p_value).collect();
                let sim: Vec<f64> = sims.iter().map(|s| s.p_value).collect();
                let meta = gof::ks_test(&obs, &sim)?;
                eprintln!(
                    "observed vs simulated p-values: D = {:.4}, p = {:.4} ({} observed, {} simulated)",
                    meta.d_statistic, meta.p_value, meta.n1, meta.n2
                );
                info.notes.insert("meta_ks_p_value".into(), meta.p_value.to_string());
            }
            table.rows(&sims)
        }
        Command::MuSigmaFit { rounds } => {
            info.inputs.push(rounds.clone());
            let models = zscore::fit_event_models(&data_io::load_rounds(rounds)?)?;
            single.object(&zscore::mu_sigma_regression(&models)?)
        }
        Command::Zscores { season } => {
            info.inputs.push(season.rounds.clone());
            let rounds = data_io::load_rounds(&season.rounds)?;
            table.rows(&zscore::season_zscores(&rounds, standardization(season))?)
        }
        Command::Leaderboard { season, money_list } => {
            info.inputs.push(season.rounds.clone());
            let ml: Vec<MoneyListEntry> = match money_list {
                Some(p) => {
                    info.inputs.push(p.clone());
                    data_io::load_money_list(p)?
                }
                None => Vec::new(),
            };
            table.rows(&zscore::leaderboard(&season_profiles(season)?, &ml))
        }
        Command::Trend {
            season,
            money_list,
            rank_by,
            top,
            player,
        } => {
            info.inputs.extend([season.rounds.clone(), money_list.clone()]);
            let profiles = season_profiles(season)?;
            if let Some(id) = player {
                let p = profiles
                    .iter()
                    .find(|p| &p.player_id == id)
                    .ok_or_else(|| Error::invalid(format!("no rounds for player {id}")))?;
                let t = zscore::trend_fit(p)?;
                let rows: Vec<SeriesRow> = p
                    .z_series
                    .iter()
                    .enumerate()
                    .map(|(i, z)| SeriesRow {
                        index: i,
                        date: z.date,
                        event_id: z.event_id.clone(),
                        round_index: z.round_index,
                        z: z.z,
                        trend: t.intercept + t.slope * i as f64,
                        mu_z: p.mu_z,
                    })
                    .collect();
                return table.rows(&rows);
            }
            let ranked = zscore::rank_profiles(&profiles, &data_io::load_money_list(money_list)?);
            let metric = match rank_by {
                RankBy::Delta => TrendMetric::Delta,
                RankBy::Slope => TrendMetric::Slope,
            };
            let rows: Vec<ImprovedRow> = zscore::most_improved(&ranked, *top, metric)?
                .into_iter()
                .enumerate()
                .map(|(i, p)| ImprovedRow {
                    position: i + 1,
                    player_id: p.player_id,
                    money_rank: p.money_rank,
                    mu_z: p.mu_z,
                    n: p.n,
                    slope: p.trend.slope,
                    intercept: p.trend.intercept,
                    start_value: p.trend.start_value,
                    end_value: p.trend.end_value,
                    delta: p.trend.delta,
                })
                .collect();
            table.rows(&rows)
        }
        Command::MoneyFit {
            season,
            money_list,
            max_rank,
        } => {
            info.inputs.extend([season.rounds.clone(), money_list.clone()]);
            let rounds = data_io::load_rounds(&season.rounds)?;
            let z = zscore::season_zscores(&rounds, standardization(season))?;
            let profiles = zscore::player_profiles(&z)?;
            let ml = data_io::load_money_list(money_list)?;
            let ranked = zscore::rank_profiles(&profiles, &ml);
            let fit = zscore::money_list_regression_upto(&ranked, *max_rank)?;
            let models = zscore::fit_event_models(&rounds)?;
            let mean_sigma_s = models.iter().map(|m| m.sigma_s).sum::<f64>() / models.len() as f64;
            single.object(&MoneyFitReport {
                fit,
                max_rank: *max_rank,
                excluded_player: ml.iter().find(|e| e.rank == 1).map(|e| e.player_id.clone()),
                mean_sigma_s,
                strokes_per_50_positions: fit.slope * 50.0 * mean_sigma_s,
            })
        }
        Command::Sim {
            mu_z_grid,
            careers,
            tournaments,
            streak_k,
            rounds_per_tournament,
            field_spec,
            field_sigma_z,
            sigma_z_fictitious,
            seed,
            threads,
        } => {
            let seed = resolve(*seed, info);
            let grid = parse_grid(mu_z_grid)?;
            let (field, assumptions): (Vec<SimPlayer>, Vec<&str>) = if field_spec == "reconstructed" {
                let spec = FieldSpec {
                    sigma_z: *field_sigma_z,
                    ..FieldSpec::default()
                };
                (
                    spec.build()?,
                    vec![
                        "field: best 155 of money ranks 2..200 with mu_z = 0.0023*(rank-125)",
                        "field sigma_z is not published; configurable via --field-sigma-z",
                        "fictitious sigma_z is not published; configurable via --sigma-z-fictitious",
                    ],
                )
            } else {
                let path = Path::new(field_spec);
                info.inputs.push(path.to_path_buf());
                (
                    data_io::load_field(path)?,
                    vec!["fictitious sigma_z is not published; configurable via --sigma-z-fictitious"],
                )
            };
            let hash = tournament::field_hash(&field);
            info.notes.insert("field_hash".into(), hash.clone());
            info.notes
                .insert("sigma_z_fictitious".into(), sigma_z_fictitious.to_string());
            info.notes.insert("assumptions".into(), assumptions.join("; "));
            let config = CareerConfig {
                tournaments: *tournaments,
                careers: *careers,
                streak_k: *streak_k,
                rounds: *rounds_per_tournament,
                seed,
            };
            let results = with_threads(*threads, || {
                tournament::sweep_mu_z(&field, *sigma_z_fictitious, &grid, &config)
            })?;
            let rows: Vec<SweepRow> = results.iter().map(|r| SweepRow::new(r, &hash, seed)).collect();
            match table.format {
                Format::Csv => table.rows(&rows),
                Format::Json => table.object(&SweepReport {
                    sigma_z_fictitious: *sigma_z_fictitious,
                    field_size: field.len(),
                    field_hash: &hash,
                    assumptions,
                    rows: &rows,
                }),
            }
        }
        Command::Streak { p, n, k } => single.object(&StreakReport {
            p: *p,
            n: *n,
            k: *k,
            probability: streak_probability_oracle(*p, *n, *k)?,
        }),
        Command::SynthEvent {
            mu,
            sigma,
            n,
            event_id,
            rounds_per_player,
            seed,
        } => {
            let seed = resolve(*seed, info);
            let gen = SyntheticEvent {
                event_id: event_id.clone(),
                rounds_per_player: *rounds_per_player,
                ..SyntheticEvent::default()
            };
            let rounds = gen.generate(*mu, *sigma, *n, seed)?;
            let sink = table.sink()?;
            data_io::write_rounds(sink, &rounds)
        }
        Command::SynthSeason {
            out_dir,
            events,
            players,
            seed,
        } => {
            let seed = resolve(*seed, info);
            let spec = SeasonSpec {
                events: *events,
                players: *players,
                ..SeasonSpec::default()
            };
            let ds = synth::synth_season(&spec, seed)?;
            data_io::save_dataset(out_dir, &ds)
        }
        Command::Replay { .. } => unreachable!("replay is resolved before execution"),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Fit { .. } => "fit",
        Command::Dist { .. } => "dist",
        Command::Ks { .. } => "ks",
        Command::Qq { .. } => "qq",
        Command::Events { .. } => "events",
        Command::Pvalues { .. } => "pvalues",
        Command::MuSigmaFit { .. } => "mu-sigma-fit",
        Command::Zscores { .. } => "zscores",
        Command::Leaderboard { .. } => "leaderboard",
        Command::Trend { .. } => "trend",
        Command::MoneyFit { .. } => "money-fit",
        Command::Sim { .. } => "sim",
        Command::Streak { .. } => "streak",
        Command::SynthEvent { .. } => "synth-event",
        Command::SynthSeason { .. } => "synth-season",
        Command::Replay { .. } => "replay",
    }
}

fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line() as u64,
        message: format!("bad manifest: {e}"),
    })
}

/// Parse and run; returns the process exit code.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv).map_err(|e| Error::invalid(e.to_string()))?;
    run_parsed(cli, argv)
}

fn run_parsed(cli: Cli, argv: Vec<OsString>) -> Result<()> {
    if let Command::Replay { manifest_path } = &cli.command {
        let m = read_manifest(manifest_path)?;
        let replayed = Cli::try_parse_from(&m.args).map_err(|e| Error::invalid(e.to_string()))?;
        if matches!(replayed.command, Command::Replay { .. }) {
            return Err(Error::invalid("a manifest cannot replay another manifest"));
        }
        let argv = m.args.iter().map(OsString::from).collect();
        return run_parsed(replayed, argv);
    }
    let mut info = RunInfo::default();
    execute(&cli, &mut info)?;
    if let Some(path) = &cli.manifest {
        let mut args: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        let has_seed = args.iter().any(|a| a == "--seed" || a.starts_with("--seed="));
        if let (Some(seed), false) = (info.seed, has_seed) {
            args.push("--seed".into());
            args.push(seed.to_string());
        }
        let manifest = RunManifest {
            command: command_name(&cli.command).to_string(),
            seed: info.seed,
            args,
            inputs: info.inputs,
            output: cli.out.clone(),
            parameters: serde_json::to_value(&cli.command).unwrap_or(serde_json::Value::Null),
            notes: info.notes,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::invalid(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(())
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run_parsed(cli, argv) {
        Ok(()) => 0,
        Err(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_ranges() {
        let g = parse_grid("-0.5:-2.5:-0.25").unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], -0.5);
        assert!((g[8] + 2.5).abs() < 1e-12);
        assert_eq!(parse_grid("0:1:0.1").unwrap().len(), 11);
        assert_eq!(parse_grid("0.0").unwrap(), vec![0.0]);
        assert_eq!(parse_grid("-1,-1.5").unwrap(), vec![-1.0, -1.5]);
        assert_eq!(parse_grid("1:1:0.5").unwrap(), vec![1.0]);
    }

    #[test]
    fn grid_errors() {
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1:-0.1").is_err());
        assert!(parse_grid("a:1:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("").is_err());
        assert!(parse_grid("0:1e9:1e-3").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
