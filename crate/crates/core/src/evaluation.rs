//! Ruleset evaluation: aggregated predictions, monthly top-k equal-weight
//! portfolios and their cumulative daily return.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use crate::data::{read_panel, DiscretizedDataset, IndexEntry, PanelIndex};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::rule::Rule;
use crate::selection::activations;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPanel {
    pub index: PanelIndex,
    /// `None` where no rule is active.
    pub values: Vec<Option<f64>>,
}

/// Mean conclusion of the rules active at each index entry.
pub fn aggregate_predictions(
    rules: &[Rule],
    dd: &DiscretizedDataset,
    exec: &Executor,
) -> Result<PredictionPanel> {
    if rules.is_empty() {
        return Err(Error::InvalidArgument("cannot aggregate an empty ruleset".into()));
    }
    let acts = activations(rules, dd, exec)?;
    let mut sums = vec![0.0; dd.n()];
    let mut counts = vec![0usize; dd.n()];
    for (rule, act) in rules.iter().zip(&acts) {
        for i in act.iter_ones() {
            sums[i] += rule.prediction;
            counts[i] += 1;
        }
    }
    let values = sums
        .into_iter()
        .zip(counts)
        .map(|(s, c)| (c > 0).then(|| s / c as f64))
        .collect();
    Ok(PredictionPanel {
        index: dd.index().clone(),
        values,
    })
}

pub fn write_predictions(panel: &PredictionPanel, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["Date", "Stock", "prediction"])
        .map_err(|e| Error::csv(path, e))?;
    for (e, v) in panel.index.entries().iter().zip(&panel.values) {
        let cell = v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([e.date.to_string(), e.stock.clone(), cell])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<PredictionPanel> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut rows: Vec<(IndexEntry, Option<f64>)> = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let err = |message: String| Error::Parse {
            path: path.into(),
            record: k + 1,
            message,
        };
        if rec.len() != 3 {
            return Err(err("expected Date,Stock,prediction".into()));
        }
        let date = crate::data::parse_date(&rec[0]).ok_or_else(|| err(format!("bad date {:?}", &rec[0])))?;
        let cell = rec[2].trim();
        let value = if cell.is_empty() {
            None
        } else {
            Some(
                cell.parse::<f64>()
                    .map_err(|_| err(format!("bad prediction {cell:?}")))?,
            )
        };
        rows.push((IndexEntry::new(date, rec[1].trim()), value));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let (entries, values): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(PredictionPanel {
        index: PanelIndex::new(entries)?,
        values,
    })
}

/// Equal-weight holdings from one rebalance date until the next.
#[derive(Debug, Clone, PartialEq)]
pub struct Holding {
    pub date: NaiveDate,
    pub stocks: Vec<String>,
}

impl Holding {
    pub fn weight(&self) -> f64 {
        if self.stocks.is_empty() {
            0.0
        } else {
            1.0 / self.stocks.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSeries {
    pub holdings: Vec<Holding>,
}

/// First index date of each calendar month.
pub fn rebalance_dates(index: &PanelIndex) -> Vec<NaiveDate> {
    let mut firsts: BTreeMap<(i32, u32), NaiveDate> = BTreeMap::new();
    for e in index.entries() {
        let key = (e.date.year(), e.date.month());
        firsts
            .entry(key)
            .and_modify(|d| *d = (*d).min(e.date))
            .or_insert(e.date);
    }
    firsts.into_values().collect()
}

/// On each month's first date, holds the `k` stocks with the highest
/// prediction that day. Ties go to the smaller stock identifier; stocks
/// without a prediction are never held.
pub fn build_portfolios(panel: &PredictionPanel, k: usize) -> Result<PortfolioSeries> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let mut by_date: HashMap<NaiveDate, Vec<(&str, f64)>> = HashMap::new();
    for (e, v) in panel.index.entries().iter().zip(&panel.values) {
        if let Some(v) = v {
            by_date.entry(e.date).or_default().push((e.stock.as_str(), *v));
        }
    }
    let holdings = rebalance_dates(&panel.index)
        .into_iter()
        .map(|date| {
            let mut ranked = by_date.remove(&date).unwrap_or_default();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            Holding {
                date,
                stocks: ranked.into_iter().take(k).map(|(s, _)| s.to_string()).collect(),
            }
        })
        .collect();
    Ok(PortfolioSeries { holdings })
}

/// Realized returns keyed by (date, stock).
#[derive(Debug, Clone, Default)]
pub struct ReturnsPanel {
    values: HashMap<(NaiveDate, String), f64>,
    dates: Vec<NaiveDate>,
}

impl ReturnsPanel {
    pub fn new(rows: impl IntoIterator<Item = (NaiveDate, String, f64)>) -> Self {
        let mut values = HashMap::new();
        for (d, s, v) in rows {
            values.insert((d, s), v);
        }
        let mut dates: Vec<NaiveDate> = values.keys().map(|k| k.0).collect();
        dates.sort();
        dates.dedup();
        ReturnsPanel { values, dates }
    }

    /// Reads a single-value-column panel file.
    pub fn load(path: &Path) -> Result<Self> {
        let table = read_panel(path)?;
        if table.names.len() != 1 {
            return Err(Error::Parse {
                path: path.into(),
                record: 0,
                message: "returns file must have exactly one value column".into(),
            });
        }
        let col = &table.columns[0];
        Ok(Self::new(
            table
                .entries
                .into_iter()
                .zip(col)
                .map(|(e, &v)| (e.date, e.stock, v)),
        ))
    }

    pub fn get(&self, date: NaiveDate, stock: &str) -> Option<f64> {
        self.values.get(&(date, stock.to_string())).copied()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }
}

/// Per-day portfolio return (mean over held stocks) and its running
/// cumulation, from the first rebalance date on. Additive by default;
/// `compound` links returns geometrically.
pub fn cumulative_return(
    series: &PortfolioSeries,
    returns: &ReturnsPanel,
    compound: bool,
) -> Result<Vec<(NaiveDate, f64)>> {
    let Some(first) = series.holdings.first() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let mut current = 0usize;
    let mut acc = if compound { 1.0 } else { 0.0 };
    for &day in returns.dates().iter().filter(|&&d| d >= first.date) {
        while current + 1 < series.holdings.len() && series.holdings[current + 1].date <= day {
            current += 1;
        }
        let holding = &series.holdings[current];
        let mut daily = 0.0;
        for stock in &holding.stocks {
            let r = returns.get(day, stock).ok_or_else(|| Error::MissingReturn {
                date: day.to_string(),
                stock: stock.clone(),
            })?;
            daily += r;
        }
        if !holding.stocks.is_empty() {
            daily /= holding.stocks.len() as f64;
        }
        if compound {
            acc *= 1.0 + daily;
            out.push((day, acc - 1.0));
        } else {
            acc += daily;
            out.push((day, acc));
        }
    }
    Ok(out)
}

pub fn write_cumulative(series: &[(NaiveDate, f64)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["Date", "cumulative_return"])
        .map_err(|e| Error::csv(path, e))?;
    for (d, v) in series {
        w.write_record([d.to_string(), v.to_string()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_holdings(series: &PortfolioSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["Date", "Stock", "weight"])
        .map_err(|e| Error::csv(path, e))?;
    for h in &series.holdings {
        for s in &h.stocks {
            w.write_record([h.date.to_string(), s.clone(), h.weight().to_string()])
                .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
