//! Rejection-rate experiments: repeat (generate → test) over seeded trials.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{generate, ScenarioSpec};
use crate::error::{Error, Result};
use crate::kv::{split_top_level, KvFile};
use crate::model::{Method, StatFamily};
use crate::multiplier::run_tests;
use crate::rng::trial_seed;
use crate::sphere::discretize;

/// Default direction count for `d` (8 in the plane, 32 beyond).
pub fn default_m(d: usize) -> usize {
    match d {
        1 => 1,
        2 => 8,
        _ => 32,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Its seed is the base seed; trial `r` uses `seed XOR r`.
    pub scenario: ScenarioSpec,
    pub stats: Vec<(StatFamily, Method)>,
    pub trials: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub m: usize,
}

impl ExperimentSpec {
    pub fn new(
        scenario: ScenarioSpec,
        stats: Vec<(StatFamily, Method)>,
        trials: usize,
        replicates: usize,
        alpha: f64,
    ) -> Result<Self> {
        let m = default_m(scenario.d());
        let spec = Self {
            scenario,
            stats,
            trials,
            replicates,
            alpha,
            m,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_m(mut self, m: usize) -> Result<Self> {
        self.m = m;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trial count R must be at least 1".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidN);
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::OutOfRange {
                what: "alpha",
                value: self.alpha,
            });
        }
        if self.m == 0 {
            return Err(Error::InvalidM);
        }
        if self.scenario.d() > 1 && self.stats.iter().any(|(_, m)| *m == Method::Sim) {
            return Err(Error::SimRequiresUnivariate {
                d: self.scenario.d(),
            });
        }
        Ok(())
    }

    /// Parses an experiment file: the scenario keys plus
    /// `stats` (e.g. `S_max:check, T_mean:sim`, default `S_max:check`),
    /// `trials`/`R` (default 100), `replicates`/`N` (default 1000),
    /// `alpha` (default 0.05) and `m` (default by dimension).
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KvFile::parse(text)?;
        let scenario = ScenarioSpec::from_kv(&kv)?;
        let stats = kv
            .get_with(&["stats"], parse_stat_list)?
            .unwrap_or_else(|| {
                vec![(
                    StatFamily::new(crate::model::Family::S, crate::model::Combiner::Max),
                    Method::Check,
                )]
            });
        let trials = kv.get(&["trials", "R"])?.unwrap_or(100);
        let replicates = kv.get(&["replicates", "N"])?.unwrap_or(1000);
        let alpha = kv.get(&["alpha"])?.unwrap_or(0.05);
        let m = kv.get(&["m"])?.unwrap_or_else(|| default_m(scenario.d()));
        kv.reject_unused()?;
        let spec = Self {
            scenario,
            stats,
            trials,
            replicates,
            alpha,
            m,
        };
        spec.validate().map_err(|e| Error::Spec {
            line: 0,
            key: "experiment".into(),
            message: e.to_string(),
        })?;
        Ok(spec)
    }
}

/// `S_max:check, T_mean:sim` → pairs. An omitted method means `check`.
pub fn parse_stat_list(v: &str) -> std::result::Result<Vec<(StatFamily, Method)>, String> {
    split_top_level(v)
        .iter()
        .map(|item| {
            let (stat, method) = match item.rsplit_once(':') {
                Some((s, m)) if m.parse::<Method>().is_ok() => (s, m.parse().unwrap()),
                _ => (item.as_str(), Method::Check),
            };
            let stat: StatFamily = stat.parse().map_err(|e| format!("'{item}': {e}"))?;
            Ok((stat, method))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub stat: StatFamily,
    pub method: Method,
    /// `100 × rejections / R`.
    pub rejection_pct: f64,
    /// Monte Carlo standard error of `rejection_pct`, in percentage points:
    /// `100 √(p̂(1 − p̂)/R)`.
    pub mc_se: f64,
    /// Wall time spent on this method's replicates, summed over trials.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentResult {
    pub fn get(&self, stat: StatFamily, method: Method) -> Option<&ExperimentRow> {
        self.rows
            .iter()
            .find(|r| r.stat == stat && r.method == method)
    }

    /// Zeroes the timing column so results compare and print deterministically.
    pub fn without_timing(mut self) -> Self {
        self.rows.iter_mut().for_each(|r| r.seconds = 0.0);
        self
    }
}

struct TrialOutcome {
    /// Rejection flags in `spec.stats` order.
    rejected: Vec<bool>,
    time_per_method: Vec<(Method, Duration)>,
}

fn methods_in(spec: &ExperimentSpec) -> Vec<Method> {
    let mut methods: Vec<Method> = spec.stats.iter().map(|(_, m)| *m).collect();
    methods.sort_unstable();
    methods.dedup();
    methods
}

fn run_trial(spec: &ExperimentSpec, methods: &[Method], dirs: Option<&crate::model::DirectionSet>, r: usize) -> Result<TrialOutcome> {
    let seed = trial_seed(spec.scenario.seed, r as u64);
    let sample = generate(&spec.scenario.with_seed(seed));
    let mut rejected = vec![false; spec.stats.len()];
    let mut time_per_method = Vec::with_capacity(methods.len());
    for &method in methods {
        let idx: Vec<usize> = (0..spec.stats.len())
            .filter(|&i| spec.stats[i].1 == method)
            .collect();
        let stats: Vec<StatFamily> = idx.iter().map(|&i| spec.stats[i].0).collect();
        let start = Instant::now();
        let reports = run_tests(&sample, &stats, method, spec.replicates, dirs, seed)?;
        time_per_method.push((method, start.elapsed()));
        for (&i, rep) in idx.iter().zip(&reports) {
            rejected[i] = rep.p_value <= spec.alpha;
        }
    }
    Ok(TrialOutcome {
        rejected,
        time_per_method,
    })
}

/// Runs all trials (in parallel over `r`) and tabulates rejection rates.
///
/// A trial rejects when its p-value is at most `alpha`. Results other than
/// `seconds` do not depend on the number of worker threads.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let methods = methods_in(spec);
    let needs_dirs = spec.stats.iter().any(|(s, _)| s.family.uses_half_spaces());
    let dirs = if needs_dirs {
        Some(discretize(spec.scenario.d(), spec.m)?)
    } else {
        None
    };
    let outcomes: Vec<TrialOutcome> = (0..spec.trials)
        .into_par_iter()
        .map(|r| run_trial(spec, &methods, dirs.as_ref(), r))
        .collect::<Result<_>>()?;

    let trials = spec.trials as f64;
    let rows = spec
        .stats
        .iter()
        .enumerate()
        .map(|(i, &(stat, method))| {
            let hits = outcomes.iter().filter(|o| o.rejected[i]).count();
            let p = hits as f64 / trials;
            let seconds = outcomes
                .iter()
                .flat_map(|o| &o.time_per_method)
                .filter(|(m, _)| *m == method)
                .map(|(_, d)| d.as_secs_f64())
                .sum();
            ExperimentRow {
                stat,
                method,
                rejection_pct: 100.0 * p,
                mc_se: 100.0 * (p * (1.0 - p) / trials).sqrt(),
                seconds,
            }
        })
        .collect();
    Ok(ExperimentResult { rows })
}

/// Formats with 17 significant digits in positional notation, which
/// round-trips every finite `f64` exactly.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (16 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub const TABLE_HEADER: [&str; 5] = ["stat", "method", "rejection_pct", "mc_se", "seconds"];

/// Writes the result as CSV with a header row and one row per `(stat, method)`.
pub fn emit_table<W: Write>(result: &ExperimentResult, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for row in &result.rows {
        w.write_record([
            row.stat.to_string(),
            row.method.to_string(),
            format_f64(row.rejection_pct),
            format_f64(row.mc_se),
            format_f64(row.seconds),
        ])?;
    }
    w.flush()
}

/// Reads a table written by [`emit_table`].
pub fn parse_table<R: std::io::Read>(input: R) -> Result<ExperimentResult> {
    let mut rd = csv::Reader::from_reader(input);
    let bad = |msg: String| Error::InvalidParameter(format!("malformed result table: {msg}"));
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != TABLE_HEADER.len() {
            return Err(bad(format!("expected {} fields", TABLE_HEADER.len())));
        }
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| bad(e.to_string()));
        rows.push(ExperimentRow {
            stat: rec[0].parse()?,
            method: rec[1].parse()?,
            rejection_pct: num(2)?,
            mc_se: num(3)?,
            seconds: num(4)?,
        });
    }
    Ok(ExperimentResult { rows })
}
