//! Rule generation: candidate enumeration, ruleset-granular task scheduling
//! and the combinatorial count formulas.
//!
//! Step 1 builds one ruleset per feature. Step `l > 1` builds `R{s ∪ {i}}`
//! from a surviving length-`(l-1)` ruleset `R{s}` and the surviving
//! length-1 ruleset `R{i}`, only for `i > max(s)`, so every signature is
//! produced by exactly one task. Pairs where either side is empty are never
//! scheduled. Steps are separated by a barrier.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::activation::ActivationVector;
use crate::cache::{ActivationCache, CacheEntry};
use crate::data::{Bin, DiscretizedDataset};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::fitting::{criterion_by_name, CriterionSpec, Fitter, GateStats, Thresholds};
use crate::io::write_rules_csv;
use crate::rule::{evaluate_condition, Condition, Rule, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalMode {
    Full,
    Half,
}

impl FromStr for IntervalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(IntervalMode::Full),
            "half" => Ok(IntervalMode::Half),
            other => Err(Error::Config(format!("unknown interval_mode {other:?}"))),
        }
    }
}

/// Candidate `[bmin, bmax]` intervals for one feature, in enumeration order.
pub fn intervals(m_n: usize, mode: IntervalMode) -> Vec<(Bin, Bin)> {
    if m_n < 2 {
        return Vec::new();
    }
    let top = (m_n - 1) as Bin;
    match mode {
        IntervalMode::Full => {
            let mut out = Vec::new();
            for lo in 0..=top {
                for hi in lo..=top {
                    if !(lo == 0 && hi == top) {
                        out.push((lo, hi));
                    }
                }
            }
            out
        }
        IntervalMode::Half => {
            let mut out: Vec<(Bin, Bin)> = (0..top).map(|hi| (0, hi)).collect();
            out.extend((1..=top).map(|lo| (lo, top)));
            out
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthCount {
    pub length: usize,
    pub rules_per_ruleset: u128,
    pub rulesets: u128,
    pub rules: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleCounts {
    pub lengths: Vec<LengthCount>,
    pub total: u128,
}

fn overflow() -> Error {
    Error::InvalidArgument("rule count overflows 128 bits".into())
}

/// Upper-bound candidate counts per rule length.
pub fn count_rules(d: usize, m_n: usize, l_max: usize, mode: IntervalMode) -> Result<RuleCounts> {
    if d < 1 {
        return Err(Error::InvalidArgument("d must be >= 1".into()));
    }
    if m_n < 2 {
        return Err(Error::InvalidArgument("m_n must be >= 2".into()));
    }
    if l_max < 1 {
        return Err(Error::InvalidArgument("l_max must be >= 1".into()));
    }
    let m = m_n as u128;
    let per_feature = match mode {
        IntervalMode::Full => m * (m + 1) / 2 - 1,
        IntervalMode::Half => 2 * (m - 1),
    };
    let d = d as u128;
    let mut lengths = Vec::with_capacity(l_max);
    let mut rulesets: u128 = 1;
    let mut per_ruleset: u128 = 1;
    let mut total: u128 = 0;
    for l in 1..=l_max as u128 {
        // C(d, l) = C(d, l-1) * (d - l + 1) / l, exact at every step
        rulesets = if l > d {
            0
        } else {
            rulesets.checked_mul(d - l + 1).ok_or_else(overflow)? / l
        };
        per_ruleset = per_ruleset.checked_mul(per_feature).ok_or_else(overflow)?;
        let rules = per_ruleset.checked_mul(rulesets).ok_or_else(overflow)?;
        total = total.checked_add(rules).ok_or_else(overflow)?;
        lengths.push(LengthCount {
            length: l as usize,
            rules_per_ruleset: per_ruleset,
            rulesets,
            rules,
        });
    }
    Ok(RuleCounts { lengths, total })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub m_n: usize,
    pub l_max: usize,
    pub interval_mode: IntervalMode,
    pub thresholds: Thresholds,
    pub criterion_name: String,
    pub criterion: CriterionSpec,
    pub workers: usize,
    pub cache_dir: PathBuf,
    pub keep_cache: bool,
    pub no_prune: bool,
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l_max < 1 {
            return Err(Error::InvalidArgument("l_max must be >= 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::InvalidArgument("workers must be >= 1".into()));
        }
        if self.m_n < 2 {
            return Err(Error::InvalidArgument(
                "m_n must be >= 2 to generate rules".into(),
            ));
        }
        self.thresholds.validate()
    }
}

/// Descriptor of one ruleset-building task.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TaskSpec {
    pub signature: Vec<usize>,
    /// Signature of the length-(l-1) source; empty at step 1.
    pub left: Vec<usize>,
    /// Feature of the length-1 source.
    pub right: usize,
}

impl TaskSpec {
    pub fn single(feature: usize) -> Self {
        TaskSpec {
            signature: vec![feature],
            left: Vec::new(),
            right: feature,
        }
    }
}

pub fn signature_label(sig: &[usize]) -> String {
    sig.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(";")
}

/// Tasks for the next step, in lexicographic signature order. `left` are the
/// non-empty rulesets of the previous step; `singles` the features whose
/// length-1 ruleset is non-empty.
pub fn schedule_step(left: &[Vec<usize>], singles: &[usize]) -> Vec<TaskSpec> {
    let mut tasks = Vec::new();
    for sig in left {
        let Some(&max) = sig.last() else { continue };
        for &i in singles.iter().filter(|&&i| i > max) {
            let mut signature = sig.clone();
            signature.push(i);
            tasks.push(TaskSpec {
                signature,
                left: sig.clone(),
                right: i,
            });
        }
    }
    tasks.sort();
    tasks
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskTiming {
    pub signature: Vec<usize>,
    pub length: usize,
    /// Seconds since the start of the run.
    pub started: f64,
    pub seconds: f64,
    pub candidates: u64,
    pub survivors: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthReport {
    pub length: usize,
    pub tasks: usize,
    pub nonempty_rulesets: usize,
    pub candidates: u64,
    pub survivors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationReport {
    pub lengths: Vec<LengthReport>,
    pub tasks: Vec<TaskTiming>,
    pub stats: GateStats,
    pub total_seconds: f64,
    pub csv_path: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Generation {
    /// Non-empty rulesets, step by step, each step in signature order.
    pub rulesets: Vec<RuleSet>,
    pub report: GenerationReport,
}

impl Generation {
    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.rulesets.iter().flat_map(|rs| rs.rules.iter())
    }

    pub fn into_rules(self) -> Vec<Rule> {
        self.rulesets.into_iter().flat_map(|rs| rs.rules).collect()
    }
}

/// Output of one task before the coordinator merges it.
#[derive(Debug)]
pub struct TaskOutput {
    pub ruleset: RuleSet,
    pub entries: Vec<CacheEntry>,
    pub stats: GateStats,
}

/// Read-only state every task sees.
pub struct RuleFactory<'a> {
    dd: &'a DiscretizedDataset,
    fitter: &'a Fitter<'a>,
    cache: &'a ActivationCache,
    mode: IntervalMode,
}

impl<'a> RuleFactory<'a> {
    pub fn new(
        dd: &'a DiscretizedDataset,
        fitter: &'a Fitter<'a>,
        cache: &'a ActivationCache,
        mode: IntervalMode,
    ) -> Self {
        RuleFactory {
            dd,
            fitter,
            cache,
            mode,
        }
    }

    /// Fits every candidate interval on feature `i`; caches survivors.
    pub fn generate_length1(&self, i: usize) -> Result<TaskOutput> {
        if i >= self.dd.d() {
            return Err(Error::InvalidArgument(format!(
                "feature {i} out of range for {} features",
                self.dd.d()
            )));
        }
        let m_n = self.dd.m_n();
        let mut stats = GateStats::default();
        let mut rules = Vec::new();
        let mut entries = Vec::new();
        for (lo, hi) in intervals(m_n, self.mode) {
            let cond = Condition::single(i, lo, hi, m_n)?;
            let act = evaluate_condition(&cond, self.dd)?;
            if let Some(rule) = self.fitter.fit(&cond, &act, &mut stats)? {
                entries.push(self.cache.store(&cond, &act)?);
                rules.push(rule);
            }
        }
        Ok(TaskOutput {
            ruleset: RuleSet::new(vec![i], rules)?,
            entries,
            stats,
        })
    }

    /// Crosses every rule of `left` with every surviving rule of `right`
    /// (a length-1 ruleset on a feature above `max(left.signature)`).
    pub fn combine_rulesets(&self, left: &RuleSet, right: &RuleSet) -> Result<TaskOutput> {
        let &[i] = right.signature.as_slice() else {
            return Err(Error::InvalidArgument(format!(
                "right ruleset must have length 1, got {:?}",
                right.signature
            )));
        };
        if left.signature.last().is_some_and(|&max| i <= max) || left.signature.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "feature {i} must exceed every feature of {:?}",
                left.signature
            )));
        }
        let mut signature = left.signature.clone();
        signature.push(i);
        let mut stats = GateStats::default();
        let mut rules = Vec::new();
        let mut entries = Vec::new();
        if left.is_empty() || right.is_empty() {
            return Ok(TaskOutput {
                ruleset: RuleSet::new(signature, rules)?,
                entries,
                stats,
            });
        }
        let m_n = self.dd.m_n();
        let right_acts: Vec<ActivationVector> = right
            .rules
            .iter()
            .map(|r| self.cache.load(&r.condition))
            .collect::<Result<_>>()?;
        for lrule in &left.rules {
            let left_act = self.cache.load(&lrule.condition)?;
            for (rrule, right_act) in right.rules.iter().zip(&right_acts) {
                let cond = lrule.condition.extended(
                    i,
                    rrule.condition.bmins()[0],
                    rrule.condition.bmaxs()[0],
                    m_n,
                )?;
                let act = left_act.and(right_act)?;
                if let Some(rule) = self.fitter.fit(&cond, &act, &mut stats)? {
                    entries.push(self.cache.store(&cond, &act)?);
                    rules.push(rule);
                }
            }
        }
        Ok(TaskOutput {
            ruleset: RuleSet::new(signature, rules)?,
            entries,
            stats,
        })
    }
}

fn run_task<F>(spec: &TaskSpec, t0: Instant, f: F) -> Result<(TaskOutput, TaskTiming)>
where
    F: FnOnce() -> Result<TaskOutput>,
{
    let started = t0.elapsed().as_secs_f64();
    let clock = Instant::now();
    let label = || signature_label(&spec.signature);
    let out = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(out)) => out,
        Ok(Err(e)) => {
            return Err(Error::Task {
                signature: label(),
                message: e.to_string(),
            })
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "worker panicked".into());
            return Err(Error::Task {
                signature: label(),
                message,
            });
        }
    };
    let timing = TaskTiming {
        signature: spec.signature.clone(),
        length: spec.signature.len(),
        started,
        seconds: clock.elapsed().as_secs_f64(),
        candidates: out.stats.candidates,
        survivors: out.ruleset.len(),
    };
    Ok((out, timing))
}

/// Runs every step up to `l_max` and returns the surviving rules.
pub fn generate_all(dd: &DiscretizedDataset, y: &[f64], cfg: &GenerationConfig) -> Result<Generation> {
    cfg.validate()?;
    if dd.m_n() != cfg.m_n {
        return Err(Error::InvalidArgument(format!(
            "dataset discretized with m_n = {}, config has {}",
            dd.m_n(),
            cfg.m_n
        )));
    }
    if y.len() != dd.n() {
        return Err(Error::Shape(format!(
            "target has {} values, index has {}",
            y.len(),
            dd.n()
        )));
    }
    let exec = Executor::new(cfg.workers)?;
    let dates = dd.index().date_layout();
    cfg.criterion.validate(dates.n_dates())?;
    let criterion = criterion_by_name(&cfg.criterion_name, cfg.criterion.window)?;
    let fitter = Fitter::new(
        y,
        &dates,
        criterion.as_ref(),
        cfg.thresholds,
        cfg.criterion.objective,
        cfg.no_prune,
    )?;
    let cache = ActivationCache::open(&cfg.cache_dir)?;
    let factory = RuleFactory::new(dd, &fitter, &cache, cfg.interval_mode);

    let t0 = Instant::now();
    let mut entries: Vec<CacheEntry> = Vec::new();
    let mut timings = Vec::new();
    let mut lengths = Vec::new();
    let mut stats = GateStats::default();
    let mut kept: Vec<RuleSet> = Vec::new();

    let result = (|| -> Result<()> {
        let step1: Vec<TaskSpec> = (0..dd.d()).map(TaskSpec::single).collect();
        let outputs = exec.map(&step1, |spec| {
            run_task(spec, t0, || factory.generate_length1(spec.right))
        });
        let mut singles: BTreeMap<usize, RuleSet> = BTreeMap::new();
        let mut prev: BTreeMap<Vec<usize>, RuleSet> = BTreeMap::new();
        let mut report = LengthReport {
            length: 1,
            tasks: step1.len(),
            nonempty_rulesets: 0,
            candidates: 0,
            survivors: 0,
        };
        for out in outputs {
            let (out, timing) = out?;
            merge(&mut report, &mut stats, &mut entries, &out);
            timings.push(timing);
            if !out.ruleset.is_empty() {
                kept.push(out.ruleset.clone());
                prev.insert(out.ruleset.signature.clone(), out.ruleset.clone());
                singles.insert(out.ruleset.signature[0], out.ruleset);
            }
        }
        lengths.push(report);
        cache.write_manifest(&entries)?;

        let single_features: Vec<usize> = singles.keys().copied().collect();
        for l in 2..=cfg.l_max {
            let left: Vec<Vec<usize>> = prev.keys().cloned().collect();
            let tasks = schedule_step(&left, &single_features);
            let outputs = exec.map(&tasks, |spec| {
                run_task(spec, t0, || {
                    factory.combine_rulesets(&prev[&spec.left], &singles[&spec.right])
                })
            });
            let mut report = LengthReport {
                length: l,
                tasks: tasks.len(),
                nonempty_rulesets: 0,
                candidates: 0,
                survivors: 0,
            };
            let mut next = BTreeMap::new();
            for out in outputs {
                let (out, timing) = out?;
                merge(&mut report, &mut stats, &mut entries, &out);
                timings.push(timing);
                if !out.ruleset.is_empty() {
                    kept.push(out.ruleset.clone());
                    next.insert(out.ruleset.signature.clone(), out.ruleset);
                }
            }
            lengths.push(report);
            cache.write_manifest(&entries)?;
            prev = next;
        }
        Ok(())
    })();

    if !cfg.keep_cache {
        let cleared = cache.clear(&entries);
        result?;
        cleared?;
    } else {
        result?;
    }

    Ok(Generation {
        rulesets: kept,
        report: GenerationReport {
            lengths,
            tasks: timings,
            stats,
            total_seconds: t0.elapsed().as_secs_f64(),
            csv_path: None,
        },
    })
}

fn merge(report: &mut LengthReport, stats: &mut GateStats, entries: &mut Vec<CacheEntry>, out: &TaskOutput) {
    report.candidates += out.stats.candidates;
    report.survivors += out.ruleset.len();
    if !out.ruleset.is_empty() {
        report.nonempty_rulesets += 1;
    }
    *stats += out.stats;
    entries.extend(out.entries.iter().cloned());
}

/// Runs [`generate_all`] and writes the surviving rules to `out`.
pub fn generate_to_csv(
    dd: &DiscretizedDataset,
    y: &[f64],
    cfg: &GenerationConfig,
    out: &Path,
) -> Result<Generation> {
    let mut generation = generate_all(dd, y, cfg)?;
    let rules: Vec<Rule> = generation.rules().cloned().collect();
    write_rules_csv(out, &rules, dd.feature_names())?;
    generation.report.csv_path = Some(out.to_path_buf());
    Ok(generation)
}

pub fn write_timings_csv(path: &Path, timings: &[TaskTiming]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record([
        "signature",
        "length",
        "started",
        "seconds",
        "candidates",
        "survivors",
    ])
    .map_err(|e| Error::csv(path, e))?;
    for t in timings {
        w.write_record([
            signature_label(&t.signature),
            t.length.to_string(),
            t.started.to_string(),
            t.seconds.to_string(),
            t.candidates.to_string(),
            t.survivors.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Task durations (seconds) of a timings file, in file order.
pub fn read_timings_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    let col = headers
        .iter()
        .position(|h| h == "seconds")
        .ok_or_else(|| Error::Parse {
            path: path.into(),
            record: 0,
            message: "no seconds column".into(),
        })?;
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let v: f64 = rec
            .get(col)
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(|_| Error::Parse {
                path: path.into(),
                record: k + 1,
                message: "bad seconds value".into(),
            })?;
        out.push(v);
    }
    Ok(out)
}
