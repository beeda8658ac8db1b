//! CSV ingestion and validation.
//!
//! Schemas (header row required, columns in this order, UTF-8, ISO-8601 dates):
//!
//! ```text
//! rounds.csv      event_id,player_id,round_index,date,strokes
//! events.csv      event_id,name,start_date
//! money_list.csv  rank,player_id
//! field.csv       player_id,mu_z,sigma_z
//! ```
//!
//! Identifiers are restricted to `[A-Za-z0-9_-]`.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score_model::RoundScore;
use crate::tournament::SimPlayer;

pub const ROUNDS_HEADER: [&str; 5] = ["event_id", "player_id", "round_index", "date", "strokes"];
pub const EVENTS_HEADER: [&str; 3] = ["event_id", "name", "start_date"];
pub const MONEY_LIST_HEADER: [&str; 2] = ["rank", "player_id"];
pub const FIELD_HEADER: [&str; 3] = ["player_id", "mu_z", "sigma_z"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventInfo {
    pub event_id: String,
    pub name: String,
    pub start_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoneyListEntry {
    pub rank: u32,
    pub player_id: String,
}

/// Validated season: rounds, event metadata and money list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rounds: Vec<RoundScore>,
    pub events: Vec<EventInfo>,
    pub money_list: Vec<MoneyListEntry>,
}

impl Dataset {
    pub fn new(rounds: Vec<RoundScore>, events: Vec<EventInfo>, money_list: Vec<MoneyListEntry>) -> Result<Self> {
        let mut known = HashSet::new();
        for e in &events {
            check_id(&e.event_id, "event_id")?;
            if !known.insert(e.event_id.as_str()) {
                return Err(Error::invalid(format!("duplicate event {}", e.event_id)));
            }
        }
        let mut keys = HashSet::new();
        for r in &rounds {
            validate_round(r)?;
            if !known.contains(r.event_id.as_str()) {
                return Err(Error::invalid(format!("round references unknown event {}", r.event_id)));
            }
            if !keys.insert((r.event_id.as_str(), r.player_id.as_str(), r.round_index)) {
                return Err(Error::invalid(format!(
                    "duplicate round ({}, {}, {})",
                    r.event_id, r.player_id, r.round_index
                )));
            }
        }
        validate_money_list(&money_list)?;
        Ok(Self {
            rounds,
            events,
            money_list,
        })
    }

    pub fn load(rounds: impl AsRef<Path>, events: impl AsRef<Path>, money_list: impl AsRef<Path>) -> Result<Self> {
        Self::new(load_rounds(rounds)?, load_events(events)?, load_money_list(money_list)?)
    }

    pub fn rounds_for_event(&self, event_id: &str) -> Vec<RoundScore> {
        self.rounds.iter().filter(|r| r.event_id == event_id).cloned().collect()
    }
}

fn check_id(id: &str, what: &str) -> Result<()> {
    if id.is_empty() || !id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-') {
        return Err(Error::invalid(format!("{what} {id:?} must match [A-Za-z0-9_-]+")));
    }
    Ok(())
}

fn validate_round(r: &RoundScore) -> Result<()> {
    check_id(&r.event_id, "event_id")?;
    check_id(&r.player_id, "player_id")?;
    if r.round_index < 1 {
        return Err(Error::invalid("round_index must be at least 1"));
    }
    if r.strokes <= 0 {
        return Err(Error::invalid(format!("strokes must be positive, got {}", r.strokes)));
    }
    Ok(())
}

fn validate_money_list(entries: &[MoneyListEntry]) -> Result<()> {
    let mut ranks: Vec<u32> = entries.iter().map(|e| e.rank).collect();
    ranks.sort_unstable();
    for (i, &r) in ranks.iter().enumerate() {
        if r as usize != i + 1 {
            return Err(Error::invalid("money-list ranks must be unique and contiguous from 1"));
        }
    }
    let mut players = HashSet::new();
    for e in entries {
        check_id(&e.player_id, "player_id")?;
        if !players.insert(e.player_id.as_str()) {
            return Err(Error::invalid(format!(
                "player {} listed twice on the money list",
                e.player_id
            )));
        }
    }
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Parse {
            line,
            message: format!("read failure: {e}"),
        },
        _ => Error::Parse {
            line,
            message: e.to_string(),
        },
    }
}

/// Iterate records after checking the header row, yielding (line, record).
fn records<R: Read>(reader: R, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let found = rdr.headers().map_err(csv_error)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header {:?}, found {:?}",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    rdr.records()
        .map(|r| {
            let rec = r.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line());
            Ok((line, rec))
        })
        .collect()
}

fn field(rec: &csv::StringRecord, i: usize) -> &str {
    rec.get(i).unwrap_or("").trim()
}

fn parse<T: std::str::FromStr>(line: u64, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let raw = field(rec, i);
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {name} {raw:?}"),
    })
}

fn parse_date(line: u64, rec: &csv::StringRecord, i: usize, name: &str) -> Result<NaiveDate> {
    let raw = field(rec, i);
    NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| Error::Parse {
        line,
        message: format!("invalid {name} {raw:?}, expected YYYY-MM-DD"),
    })
}

fn at_line<T>(line: u64, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Validation(message) => Error::Parse { line, message },
        other => other,
    })
}

pub fn read_rounds<R: Read>(reader: R) -> Result<Vec<RoundScore>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, rec) in records(reader, &ROUNDS_HEADER)? {
        let round = RoundScore {
            event_id: field(&rec, 0).to_string(),
            player_id: field(&rec, 1).to_string(),
            round_index: parse(line, &rec, 2, "round_index")?,
            date: parse_date(line, &rec, 3, "date")?,
            strokes: parse(line, &rec, 4, "strokes")?,
        };
        at_line(line, validate_round(&round))?;
        let key = (round.event_id.clone(), round.player_id.clone(), round.round_index);
        if !seen.insert(key) {
            return Err(Error::DuplicateKey {
                line,
                key: format!("({}, {}, {})", round.event_id, round.player_id, round.round_index),
            });
        }
        out.push(round);
    }
    Ok(out)
}

pub fn load_rounds(path: impl AsRef<Path>) -> Result<Vec<RoundScore>> {
    read_rounds(open(path.as_ref())?)
}

pub fn read_events<R: Read>(reader: R) -> Result<Vec<EventInfo>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, rec) in records(reader, &EVENTS_HEADER)? {
        let ev = EventInfo {
            event_id: field(&rec, 0).to_string(),
            name: field(&rec, 1).to_string(),
            start_date: parse_date(line, &rec, 2, "start_date")?,
        };
        at_line(line, check_id(&ev.event_id, "event_id"))?;
        if !seen.insert(ev.event_id.clone()) {
            return Err(Error::DuplicateKey { line, key: ev.event_id });
        }
        out.push(ev);
    }
    Ok(out)
}

pub fn load_events(path: impl AsRef<Path>) -> Result<Vec<EventInfo>> {
    read_events(open(path.as_ref())?)
}

pub fn read_money_list<R: Read>(reader: R) -> Result<Vec<MoneyListEntry>> {
    let mut ranks = HashMap::new();
    let mut out = Vec::new();
    for (line, rec) in records(reader, &MONEY_LIST_HEADER)? {
        let entry = MoneyListEntry {
            rank: parse(line, &rec, 0, "rank")?,
            player_id: field(&rec, 1).to_string(),
        };
        at_line(line, check_id(&entry.player_id, "player_id"))?;
        if ranks.insert(entry.rank, line).is_some() {
            return Err(Error::DuplicateKey {
                line,
                key: format!("rank {}", entry.rank),
            });
        }
        out.push(entry);
    }
    validate_money_list(&out)?;
    Ok(out)
}

pub fn load_money_list(path: impl AsRef<Path>) -> Result<Vec<MoneyListEntry>> {
    read_money_list(open(path.as_ref())?)
}

pub fn read_field<R: Read>(reader: R) -> Result<Vec<SimPlayer>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, rec) in records(reader, &FIELD_HEADER)? {
        let id = field(&rec, 0).to_string();
        at_line(line, check_id(&id, "player_id"))?;
        let mu: f64 = parse(line, &rec, 1, "mu_z")?;
        let sigma: f64 = parse(line, &rec, 2, "sigma_z")?;
        let player = at_line(line, SimPlayer::new(id.clone(), mu, sigma))?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateKey { line, key: id });
        }
        out.push(player);
    }
    if out.is_empty() {
        return Err(Error::invalid("field file has no players"));
    }
    Ok(out)
}

pub fn load_field(path: impl AsRef<Path>) -> Result<Vec<SimPlayer>> {
    read_field(open(path.as_ref())?)
}

fn write_rows<W: Write>(writer: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Parse {
        line: 0,
        message: format!("write failure: {e}"),
    })
}

pub fn write_rounds<W: Write>(writer: W, rounds: &[RoundScore]) -> Result<()> {
    write_rows(
        writer,
        &ROUNDS_HEADER,
        rounds.iter().map(|r| {
            vec![
                r.event_id.clone(),
                r.player_id.clone(),
                r.round_index.to_string(),
                r.date.format("%Y-%m-%d").to_string(),
                r.strokes.to_string(),
            ]
        }),
    )
}

pub fn write_events<W: Write>(writer: W, events: &[EventInfo]) -> Result<()> {
    write_rows(
        writer,
        &EVENTS_HEADER,
        events.iter().map(|e| {
            vec![
                e.event_id.clone(),
                e.name.clone(),
                e.start_date.format("%Y-%m-%d").to_string(),
            ]
        }),
    )
}

pub fn write_money_list<W: Write>(writer: W, entries: &[MoneyListEntry]) -> Result<()> {
    write_rows(
        writer,
        &MONEY_LIST_HEADER,
        entries.iter().map(|e| vec![e.rank.to_string(), e.player_id.clone()]),
    )
}

pub fn write_field<W: Write>(writer: W, field: &[SimPlayer]) -> Result<()> {
    write_rows(
        writer,
        &FIELD_HEADER,
        field
            .iter()
            .map(|p| vec![p.player_id.clone(), p.mu_z.to_string(), p.sigma_z.to_string()]),
    )
}

/// Write rounds.csv, events.csv and money_list.csv into `dir`.
pub fn save_dataset(dir: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write_rounds(create(&dir.join("rounds.csv"))?, &ds.rounds)?;
    write_events(create(&dir.join("events.csv"))?, &ds.events)?;
    write_money_list(create(&dir.join("money_list.csv"))?, &ds.money_list)
}
