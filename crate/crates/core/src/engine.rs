//! Deterministic Monte-Carlo runner and statistical comparison harness.
//!
//! Trial `i` of a run always draws from a fresh SplitMix64 stream seeded with
//! [`seed_derive`]`(master_seed, i)`, so the full record list is a pure
//! function of `(scenario, master_seed, trials)` — worker count and platform
//! never enter. Trials execute in fixed-size chunks that may be spread over
//! a rayon pool; aggregation is count merging, which is associative, so the
//! chunking is invisible in the output.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{mix64, SplitMix64, GOLDEN_GAMMA};
use crate::scenarios::{exact_distribution, run_trial, Scenario, TrialOutcome};

/// Records are kept in memory up to this many trials; larger runs aggregate
/// counts only (stream records to a sink with [`run_with_sink`]).
pub const RECORD_RETENTION_LIMIT: u64 = 1_000_000;

const CHUNK: u64 = 1 << 16;

/// Derives the per-trial stream seed from the master seed.
///
/// `mix64(master XOR index·0x9E3779B97F4A7C15)` with the SplitMix64
/// finalizer; the odd multiplier makes `index → master XOR index·γ`
/// injective, so consecutive trials can never collide.
pub fn seed_derive(master: u64, index: u64) -> u64 {
    mix64(master ^ index.wrapping_mul(GOLDEN_GAMMA))
}

/// One run of one scenario.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub trials: u64,
    pub master_seed: u64,
    /// Thread count hint; 0 lets the runtime pick. Never affects output.
    pub workers: usize,
}

/// One Monte-Carlo event with its derivation metadata.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub index: u64,
    pub derived_seed: u64,
    pub outcome: TrialOutcome,
}

/// Per-classification tallies against the exact oracle.
#[derive(Debug, Clone)]
pub struct ClassRow {
    pub name: String,
    pub count: u64,
    pub frequency: f64,
    pub exact: f64,
    /// Standard score of the count; `±inf` when an exact-0/1 class is
    /// violated, 0 when it is met.
    pub z: f64,
}

#[derive(Debug, Clone)]
pub struct FrequencyTable {
    pub scenario: String,
    pub master_seed: u64,
    pub trials: u64,
    pub rows: Vec<ClassRow>,
}

impl FrequencyTable {
    /// Builds the table from raw counts, filling the exact column from the
    /// scenario oracle. Row order is the scenario alphabet followed by any
    /// classes observed outside it.
    pub fn from_counts(
        scenario: &Scenario,
        master_seed: u64,
        trials: u64,
        counts: &BTreeMap<String, u64>,
    ) -> Result<Self> {
        let exact = exact_distribution(scenario)?;
        let mut names: Vec<String> = scenario.alphabet.clone();
        for name in counts.keys().chain(exact.keys()) {
            if !names.iter().any(|n| n == name) {
                names.push(name.clone());
            }
        }
        let rows = names
            .into_iter()
            .map(|name| {
                let count = counts.get(&name).copied().unwrap_or(0);
                let p = exact.get(&name).copied().unwrap_or(0.0);
                let z = z_score(count, trials, p);
                ClassRow {
                    frequency: count as f64 / trials as f64,
                    name,
                    count,
                    exact: p,
                    z,
                }
            })
            .collect();
        Ok(Self { scenario: scenario.name.clone(), master_seed, trials, rows })
    }

    pub fn count_of(&self, class: &str) -> u64 {
        self.rows.iter().find(|r| r.name == class).map(|r| r.count).unwrap_or(0)
    }

    pub fn total_count(&self) -> u64 {
        self.rows.iter().map(|r| r.count).sum()
    }
}

fn z_score(count: u64, trials: u64, exact: f64) -> f64 {
    let expected = trials as f64 * exact;
    if exact <= 0.0 || exact >= 1.0 {
        if count as f64 == expected {
            0.0
        } else if count as f64 > expected {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        (count as f64 - expected) / (trials as f64 * exact * (1.0 - exact)).sqrt()
    }
}

#[derive(Debug)]
pub struct RunResult {
    /// In index order; empty when `trials > RECORD_RETENTION_LIMIT`.
    pub records: Vec<TrialRecord>,
    pub table: FrequencyTable,
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))
}

fn run_chunk(cfg: &RunConfig, pool: &rayon::ThreadPool, start: u64, end: u64) -> Result<Vec<TrialRecord>> {
    pool.install(|| {
        (start..end)
            .into_par_iter()
            .map(|index| {
                let derived_seed = seed_derive(cfg.master_seed, index);
                let mut rng = SplitMix64::new(derived_seed);
                run_trial(&cfg.scenario, &mut rng)
                    .map(|outcome| TrialRecord { index, derived_seed, outcome })
            })
            .collect()
    })
}

/// Runs every trial, retaining records in memory when the run is small
/// enough. The record list and table are bit-identical for any `workers`.
pub fn run(cfg: &RunConfig) -> Result<RunResult> {
    if cfg.trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".to_string()));
    }
    let pool = thread_pool(cfg.workers)?;
    let retain = cfg.trials <= RECORD_RETENTION_LIMIT;
    let mut records = Vec::with_capacity(if retain { cfg.trials as usize } else { 0 });
    let mut counts = BTreeMap::new();
    let mut start = 0;
    while start < cfg.trials {
        let end = (start + CHUNK).min(cfg.trials);
        let chunk = run_chunk(cfg, &pool, start, end)?;
        for record in &chunk {
            *counts.entry(record.outcome.classification.clone()).or_insert(0) += 1;
        }
        if retain {
            records.extend(chunk);
        }
        start = end;
    }
    let table = FrequencyTable::from_counts(&cfg.scenario, cfg.master_seed, cfg.trials, &counts)?;
    Ok(RunResult { records, table })
}

/// Errors from a streaming run.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// CSV header of a record dump.
pub const RECORD_CSV_HEADER: &str = "index,seed,classification,events";

/// One record as a dump line: events are `time:detector:label` triples
/// joined by `;`.
pub fn record_csv_line(record: &TrialRecord) -> String {
    let events = record
        .outcome
        .events
        .iter()
        .map(|e| format!("{}:{}:{}", e.time, e.detector, e.label))
        .collect::<Vec<_>>()
        .join(";");
    format!(
        "{},{},{},{}",
        record.index, record.derived_seed, record.outcome.classification, events
    )
}

/// Runs every trial while streaming the record dump to `sink`; memory use
/// stays bounded regardless of trial count.
pub fn run_with_sink(
    cfg: &RunConfig,
    sink: &mut dyn Write,
) -> std::result::Result<FrequencyTable, RunError> {
    if cfg.trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".to_string()).into());
    }
    let pool = thread_pool(cfg.workers)?;
    let mut counts = BTreeMap::new();
    writeln!(sink, "{RECORD_CSV_HEADER}")?;
    let mut start = 0;
    while start < cfg.trials {
        let end = (start + CHUNK).min(cfg.trials);
        for record in run_chunk(cfg, &pool, start, end)? {
            *counts.entry(record.outcome.classification.clone()).or_insert(0) += 1;
            writeln!(sink, "{}", record_csv_line(&record))?;
        }
        start = end;
    }
    Ok(FrequencyTable::from_counts(&cfg.scenario, cfg.master_seed, cfg.trials, &counts)?)
}

/// Verdict of one classification under the binomial bound.
#[derive(Debug, Clone)]
pub struct ClassVerdict {
    pub name: String,
    pub pass: bool,
    /// `|count − trials·exact|`.
    pub deviation: f64,
    /// `sigma·√(trials·exact·(1−exact))`; 0 for exact-0/1 classes.
    pub bound: f64,
}

/// Per class: pass iff `|count − trials·exact| ≤ sigma·√(trials·exact·(1−exact))`.
/// Classes with exact probability 0 or 1 must match their count exactly.
pub fn compare(table: &FrequencyTable, sigma: f64) -> Vec<ClassVerdict> {
    table
        .rows
        .iter()
        .map(|row| {
            let expected = table.trials as f64 * row.exact;
            let deviation = (row.count as f64 - expected).abs();
            let (bound, pass) = if row.exact <= 0.0 || row.exact >= 1.0 {
                (0.0, row.count as f64 == expected)
            } else {
                let bound = sigma * (table.trials as f64 * row.exact * (1.0 - row.exact)).sqrt();
                (bound, deviation <= bound)
            };
            ClassVerdict { name: row.name.clone(), pass, deviation, bound }
        })
        .collect()
}

/// Pearson statistic of observed counts against the uniform law, with the
/// degrees of freedom (`bins − 1`).
pub fn chi_square_uniform(counts: &[u64]) -> Result<(f64, usize)> {
    if counts.len() < 2 {
        return Err(Error::EmptyInput("chi-square needs at least 2 bins"));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyInput("chi-square needs at least one observation"));
    }
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum();
    Ok((statistic, counts.len() - 1))
}

/// Upper critical values of the chi-square law at significance 0.001,
/// degrees of freedom 1 through 30.
const CHI2_CRIT_001: [f64; 30] = [
    10.828, 13.816, 16.266, 18.467, 20.515, 22.458, 24.322, 26.124, 27.877, 29.588, 31.264,
    32.909, 34.528, 36.123, 37.697, 39.252, 40.790, 42.312, 43.820, 45.315, 46.797, 48.268,
    49.728, 51.179, 52.620, 54.052, 55.476, 56.892, 58.301, 59.703,
];

/// Critical value for rejecting uniformity at significance 0.001. Tabulated
/// up to 30 degrees of freedom, Wilson-Hilferty approximation beyond.
pub fn chi_square_critical_001(degrees: usize) -> Result<f64> {
    match degrees {
        0 => Err(Error::EmptyInput("zero degrees of freedom")),
        d if d <= CHI2_CRIT_001.len() => Ok(CHI2_CRIT_001[d - 1]),
        d => {
            let k = d as f64;
            let z = 3.090_232_306_167_813; // 99.9th percentile of the normal law
            let base = 1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt();
            Ok(k * base.powi(3))
        }
    }
}
