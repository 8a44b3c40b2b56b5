//! Seeded synthetic panels for tests, benches and demos.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Dataset, IndexEntry, PanelIndex};
use crate::error::Result;

/// `n` consecutive weekdays starting at 2020-01-01.
pub fn business_days(n: usize) -> Vec<NaiveDate> {
    let mut day = NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(day);
        }
        day = day + Days::new(1);
    }
    out
}

/// Uniform features `X[0]..X[d-1]`; the target responds to the first three
/// features plus Gaussian noise, so thresholds leave a non-trivial survivor
/// set.
pub fn synthetic_dataset(n_dates: usize, n_stocks: usize, d: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.01).expect("positive sd");
    let dates = business_days(n_dates);
    let mut entries = Vec::with_capacity(n_dates * n_stocks);
    for s in 0..n_stocks {
        for &date in &dates {
            entries.push(IndexEntry::new(date, format!("S{s:03}")));
        }
    }
    let n = entries.len();
    let features: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..n).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let at = |j: usize, i: usize| features.get(j).map_or(0.5, |col| col[i]);
    let y = (0..n)
        .map(|i| {
            0.04 * (at(0, i) - 0.5) + 0.02 * f64::from(u8::from(at(1, i) > 0.6))
                - 0.015 * f64::from(u8::from(at(2, i) < 0.3))
                + noise.sample(&mut rng)
        })
        .collect();
    let names = (0..d).map(|j| format!("X[{j}]")).collect();
    Dataset::new(PanelIndex::new(entries)?, y, names, features)
}
