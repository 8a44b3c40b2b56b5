#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use rulemine::data::{discretize, BinEdges, DiscretizedDataset};
use rulemine::generation::GenerationConfig;
use rulemine::synth::synthetic_dataset;
use rulemine::{Config, Rule};

/// Seeded synthetic panel, globally discretized.
pub fn fixture(
    n_dates: usize,
    n_stocks: usize,
    d: usize,
    m_n: usize,
    seed: u64,
) -> (DiscretizedDataset, Vec<f64>) {
    let ds = synthetic_dataset(n_dates, n_stocks, d, seed).unwrap();
    let dd = discretize(&ds, &BinEdges::fit(&ds, m_n).unwrap()).unwrap();
    (dd, ds.y().to_vec())
}

pub fn gen_config(m_n: usize, l_max: usize, workers: usize, cache: &Path) -> GenerationConfig {
    Config {
        m_n,
        l_max,
        workers,
        window: 5,
        cache_dir: cache.to_path_buf(),
        ..Config::default()
    }
    .generation()
}

pub type Key = (Vec<usize>, Vec<u16>, Vec<u16>);

pub fn key(rule: &Rule) -> Key {
    let c = &rule.condition;
    (c.features().to_vec(), c.bmins().to_vec(), c.bmaxs().to_vec())
}

pub fn by_key<'a>(rules: impl IntoIterator<Item = &'a Rule>) -> BTreeMap<Key, Rule> {
    rules.into_iter().map(|r| (key(r), r.clone())).collect()
}

/// Every non-trivial contiguous bin interval.
pub fn full_intervals(m_n: usize) -> Vec<(u16, u16)> {
    let top = (m_n - 1) as u16;
    let mut out = Vec::new();
    for a in 0..=top {
        for b in a..=top {
            if (a, b) != (0, top) {
                out.push((a, b));
            }
        }
    }
    out
}

/// All valid conditions with length <= 2, built without the library's
/// enumeration code.
pub fn exhaustive_conditions(d: usize, m_n: usize) -> Vec<Key> {
    let iv = full_intervals(m_n);
    let mut out = Vec::new();
    for j in 0..d {
        for &(a, b) in &iv {
            out.push((vec![j], vec![a], vec![b]));
        }
    }
    for j in 0..d {
        for k in j + 1..d {
            for &(a, b) in &iv {
                for &(c, e) in &iv {
                    out.push((vec![j, k], vec![a, c], vec![b, e]));
                }
            }
        }
    }
    out
}

/// Row mask of a condition by direct comparison.
pub fn mask(dd: &DiscretizedDataset, cond: &Key) -> Vec<bool> {
    (0..dd.n())
        .map(|i| {
            cond.0
                .iter()
                .zip(cond.1.iter().zip(&cond.2))
                .all(|(&j, (&lo, &hi))| (lo..=hi).contains(&dd.bins(j)[i]))
        })
        .collect()
}

pub fn sorted_body(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().skip(1).map(str::to_string).collect::<Vec<_>>();
    lines.sort();
    lines
}
