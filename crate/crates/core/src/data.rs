//! Panel data: the (date, stock) index, raw feature/target values, quantile
//! bin edges and the discretized feature matrix.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::exec;

/// Bin index of a discretized value.
pub type Bin = u16;

/// One (date, stock) point. Ordering is by stock, then date.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexEntry {
    pub stock: String,
    pub date: NaiveDate,
}

impl IndexEntry {
    pub fn new(date: NaiveDate, stock: impl Into<String>) -> Self {
        IndexEntry {
            stock: stock.into(),
            date,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelIndex {
    entries: Vec<IndexEntry>,
}

impl PanelIndex {
    /// Builds an index from entries already in (stock, date) order.
    pub fn new(entries: Vec<IndexEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Shape("panel index must hold at least one entry".into()));
        }
        for pair in entries.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::InvalidArgument(format!(
                    "duplicate index entry ({}, {})",
                    pair[1].date, pair[1].stock
                )));
            }
            if pair[0] > pair[1] {
                return Err(Error::InvalidArgument(format!(
                    "index not sorted by (stock, date) at ({}, {})",
                    pair[1].date, pair[1].stock
                )));
            }
        }
        Ok(PanelIndex { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> &IndexEntry {
        &self.entries[i]
    }

    pub fn date_layout(&self) -> DateLayout {
        let dates: Vec<NaiveDate> = self
            .entries
            .iter()
            .map(|e| e.date)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let date_of = self
            .entries
            .iter()
            .map(|e| dates.binary_search(&e.date).expect("date present") as u32)
            .collect();
        DateLayout { dates, date_of }
    }
}

/// Maps every index entry to the rank of its date among the distinct dates.
#[derive(Debug, Clone)]
pub struct DateLayout {
    dates: Vec<NaiveDate>,
    date_of: Vec<u32>,
}

impl DateLayout {
    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn date_rank(&self, i: usize) -> usize {
        self.date_of[i] as usize
    }

    pub fn len(&self) -> usize {
        self.date_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.date_of.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    index: PanelIndex,
    y: Vec<f64>,
    feature_names: Vec<String>,
    features: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        index: PanelIndex,
        y: Vec<f64>,
        feature_names: Vec<String>,
        features: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = index.len();
        if y.len() != n {
            return Err(Error::Shape(format!(
                "target has {} values, index has {n}",
                y.len()
            )));
        }
        if feature_names.len() != features.len() {
            return Err(Error::Shape(format!(
                "{} feature names for {} feature vectors",
                feature_names.len(),
                features.len()
            )));
        }
        check_unique_names(&feature_names)?;
        for (name, col) in feature_names.iter().zip(&features) {
            if col.len() != n {
                return Err(Error::Shape(format!(
                    "feature {name} has {} values, index has {n}",
                    col.len()
                )));
            }
        }
        Ok(Dataset {
            index,
            y,
            feature_names,
            features,
        })
    }

    pub fn index(&self) -> &PanelIndex {
        &self.index
    }

    pub fn n(&self) -> usize {
        self.index.len()
    }

    pub fn d(&self) -> usize {
        self.features.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature(&self, j: usize) -> &[f64] {
        &self.features[j]
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }
}

fn check_unique_names(names: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(Error::Shape(format!("duplicate feature name {name}")));
        }
    }
    Ok(())
}

/// Raw contents of a `Date,Stock,<value columns>` file, rows in (stock, date) order.
#[derive(Debug, Clone)]
pub struct PanelTable {
    pub names: Vec<String>,
    pub entries: Vec<IndexEntry>,
    /// Column-major values: `columns[j][i]` is column `j` of row `i`.
    pub columns: Vec<Vec<f64>>,
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

/// Reads a panel CSV. Missing or non-numeric values are errors.
pub fn read_panel(path: &Path) -> Result<PanelTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.len() < 3
        || !headers[0].trim().eq_ignore_ascii_case("date")
        || !headers[1].trim().eq_ignore_ascii_case("stock")
    {
        return Err(Error::Parse {
            path: path.into(),
            record: 0,
            message: "header must be Date,Stock,<value columns>".into(),
        });
    }
    let names: Vec<String> = headers.iter().skip(2).map(|h| h.trim().to_string()).collect();
    check_unique_names(&names)?;

    let mut rows: Vec<(IndexEntry, Vec<f64>)> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let parse_err = |message: String| Error::Parse {
            path: path.into(),
            record: r + 1,
            message,
        };
        if record.len() != headers.len() {
            return Err(parse_err(format!(
                "expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        let date = parse_date(&record[0])
            .ok_or_else(|| parse_err(format!("invalid ISO-8601 date {:?}", &record[0])))?;
        let stock = record[1].trim().to_string();
        let mut values = Vec::with_capacity(names.len());
        for (j, cell) in record.iter().skip(2).enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(parse_err(format!("missing value in column {}", names[j])));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(format!("non-numeric value {cell:?} in column {}", names[j])))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite value in column {}", names[j])));
            }
            values.push(v);
        }
        rows.push((IndexEntry::new(date, stock), values));
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.into(),
            record: 0,
            message: "no data rows".into(),
        });
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    for pair in rows.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::DuplicateIndex {
                path: path.into(),
                date: pair[1].0.date.to_string(),
                stock: pair[1].0.stock.clone(),
            });
        }
    }
    let mut columns = vec![Vec::with_capacity(rows.len()); names.len()];
    let mut entries = Vec::with_capacity(rows.len());
    for (entry, values) in rows {
        entries.push(entry);
        for (col, v) in columns.iter_mut().zip(values) {
            col.push(v);
        }
    }
    Ok(PanelTable {
        names,
        entries,
        columns,
    })
}

/// Checks that two sorted entry lists are identical, naming the first
/// point present in one but not the other.
pub fn align_entries(left: &[IndexEntry], right: &[IndexEntry], right_label: &str) -> Result<()> {
    let (mut i, mut j) = (0, 0);
    while i < left.len() || j < right.len() {
        match (left.get(i), right.get(j)) {
            (Some(a), Some(b)) if a == b => {
                i += 1;
                j += 1;
            }
            (Some(a), Some(b)) if a < b => return Err(missing_in(a, right_label)),
            (Some(_), Some(b)) => return Err(extra_in(b, right_label)),
            (Some(a), None) => return Err(missing_in(a, right_label)),
            (None, Some(b)) => return Err(extra_in(b, right_label)),
            (None, None) => unreachable!(),
        }
    }
    Ok(())
}

fn missing_in(e: &IndexEntry, label: &str) -> Error {
    Error::IndexMismatch {
        date: e.date.to_string(),
        stock: e.stock.clone(),
        detail: format!("missing from {label}"),
    }
}

fn extra_in(e: &IndexEntry, label: &str) -> Error {
    Error::IndexMismatch {
        date: e.date.to_string(),
        stock: e.stock.clone(),
        detail: format!("present only in {label}"),
    }
}

/// Loads a target file (one value column) and a features file sharing its index.
pub fn load_dataset(target_path: &Path, features_path: &Path) -> Result<Dataset> {
    let target = read_panel(target_path)?;
    if target.names.len() != 1 {
        return Err(Error::Parse {
            path: target_path.into(),
            record: 0,
            message: format!(
                "target file must have one value column, found {}",
                target.names.len()
            ),
        });
    }
    let features = read_panel(features_path)?;
    align_entries(&target.entries, &features.entries, "features file")?;
    let index = PanelIndex::new(target.entries)?;
    let y = target.columns.into_iter().next().expect("one column");
    Dataset::new(index, y, features.names, features.columns)
}

/// Per-feature cut points; `cuts[j]` holds `m_n - 1` non-decreasing values.
#[derive(Debug, Clone, PartialEq)]
pub struct BinEdges {
    m_n: usize,
    cuts: Vec<Vec<f64>>,
}

impl BinEdges {
    pub fn new(m_n: usize, cuts: Vec<Vec<f64>>) -> Result<Self> {
        check_bin_count(m_n)?;
        for (j, c) in cuts.iter().enumerate() {
            if c.len() != m_n - 1 {
                return Err(Error::Shape(format!(
                    "feature {j} has {} cut points, expected {}",
                    c.len(),
                    m_n - 1
                )));
            }
            if c.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Shape(format!("cut points of feature {j} are not sorted")));
            }
        }
        Ok(BinEdges { m_n, cuts })
    }

    /// Global empirical-quantile edges for every feature of `ds`.
    pub fn fit(ds: &Dataset, m_n: usize) -> Result<Self> {
        let cuts = exec::map_global(ds.features(), |col| compute_bin_edges(col, m_n))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        BinEdges::new(m_n, cuts)
    }

    pub fn m_n(&self) -> usize {
        self.m_n
    }

    pub fn cuts(&self) -> &[Vec<f64>] {
        &self.cuts
    }

    pub fn d(&self) -> usize {
        self.cuts.len()
    }
}

fn check_bin_count(m_n: usize) -> Result<()> {
    if m_n < 1 {
        return Err(Error::InvalidArgument("m_n must be >= 1".into()));
    }
    if m_n > Bin::MAX as usize + 1 {
        return Err(Error::InvalidArgument(format!(
            "m_n must be <= {}",
            Bin::MAX as usize + 1
        )));
    }
    Ok(())
}

/// Inverted-CDF empirical quantiles at levels `k / m_n`, `k = 1..m_n-1`:
/// the `ceil(k n / m_n)`-th order statistic.
pub fn compute_bin_edges(values: &[f64], m_n: usize) -> Result<Vec<f64>> {
    check_bin_count(m_n)?;
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot compute bin edges of an empty vector".into(),
        ));
    }
    let n = values.len();
    if n < m_n {
        return Err(Error::InvalidArgument(format!(
            "{n} values is fewer than {m_n} bins"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((1..m_n)
        .map(|k| {
            let rank = (k * n).div_ceil(m_n);
            sorted[rank - 1]
        })
        .collect())
}

/// Number of cut points strictly below `v`.
#[inline]
pub fn bin_of(v: f64, cuts: &[f64]) -> Bin {
    cuts.partition_point(|&c| c < v) as Bin
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedDataset {
    index: PanelIndex,
    feature_names: Vec<String>,
    bins: Vec<Vec<Bin>>,
    m_n: usize,
}

impl DiscretizedDataset {
    pub fn new(
        index: PanelIndex,
        feature_names: Vec<String>,
        bins: Vec<Vec<Bin>>,
        m_n: usize,
    ) -> Result<Self> {
        check_bin_count(m_n)?;
        check_unique_names(&feature_names)?;
        if feature_names.len() != bins.len() {
            return Err(Error::Shape(
                "feature names and bin columns differ in count".into(),
            ));
        }
        for (name, col) in feature_names.iter().zip(&bins) {
            if col.len() != index.len() {
                return Err(Error::Shape(format!("feature {name} has wrong length")));
            }
            if let Some(b) = col.iter().find(|&&b| b as usize >= m_n) {
                return Err(Error::Shape(format!("feature {name} has bin {b} >= m_n = {m_n}")));
            }
        }
        Ok(DiscretizedDataset {
            index,
            feature_names,
            bins,
            m_n,
        })
    }

    pub fn index(&self) -> &PanelIndex {
        &self.index
    }

    pub fn n(&self) -> usize {
        self.index.len()
    }

    pub fn d(&self) -> usize {
        self.bins.len()
    }

    pub fn m_n(&self) -> usize {
        self.m_n
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn bins(&self, j: usize) -> &[Bin] {
        &self.bins[j]
    }

    pub fn all_bins(&self) -> &[Vec<Bin>] {
        &self.bins
    }
}

/// Maps every value to the number of cut points strictly below it.
pub fn discretize(ds: &Dataset, edges: &BinEdges) -> Result<DiscretizedDataset> {
    if edges.d() != ds.d() {
        return Err(Error::Shape(format!(
            "edges cover {} features, dataset has {}",
            edges.d(),
            ds.d()
        )));
    }
    let pairs: Vec<(&Vec<f64>, &Vec<f64>)> = ds.features().iter().zip(edges.cuts()).collect();
    let bins = exec::map_global(&pairs, |(col, cuts)| {
        col.iter().map(|&v| bin_of(v, cuts)).collect::<Vec<Bin>>()
    });
    DiscretizedDataset::new(ds.index().clone(), ds.feature_names().to_vec(), bins, edges.m_n())
}

/// Discretizes each stock with quantiles of its own history.
pub fn discretize_per_stock(ds: &Dataset, m_n: usize) -> Result<DiscretizedDataset> {
    check_bin_count(m_n)?;
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in ds.index().entries().iter().enumerate() {
        groups.entry(e.stock.as_str()).or_default().push(i);
    }
    let columns = exec::map_global(ds.features(), |col| -> Result<Vec<Bin>> {
        let mut out = vec![0 as Bin; col.len()];
        for rows in groups.values() {
            let values: Vec<f64> = rows.iter().map(|&i| col[i]).collect();
            let cuts = compute_bin_edges(&values, m_n)?;
            for (&i, &v) in rows.iter().zip(&values) {
                out[i] = bin_of(v, &cuts);
            }
        }
        Ok(out)
    });
    let bins = columns.into_iter().collect::<Result<Vec<_>>>()?;
    DiscretizedDataset::new(ds.index().clone(), ds.feature_names().to_vec(), bins, m_n)
}

pub fn write_binned(dd: &DiscretizedDataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = vec!["Date".to_string(), "Stock".to_string()];
    header.extend(dd.feature_names().iter().cloned());
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for (i, e) in dd.index().entries().iter().enumerate() {
        let mut row = vec![e.date.to_string(), e.stock.clone()];
        row.extend(dd.all_bins().iter().map(|col| col[i].to_string()));
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`write_binned`].
pub fn read_binned(path: &Path, m_n: usize) -> Result<DiscretizedDataset> {
    let table = read_panel(path)?;
    let mut bins = Vec::with_capacity(table.columns.len());
    for (name, col) in table.names.iter().zip(&table.columns) {
        let mut out = Vec::with_capacity(col.len());
        for &v in col {
            if v.fract() != 0.0 || v < 0.0 || v >= m_n as f64 {
                return Err(Error::Parse {
                    path: path.into(),
                    record: 0,
                    message: format!("column {name} holds {v}, not a bin index below {m_n}"),
                });
            }
            out.push(v as Bin);
        }
        bins.push(out);
    }
    DiscretizedDataset::new(PanelIndex::new(table.entries)?, table.names, bins, m_n)
}

/// Writes a `Date,Stock,<names>` panel file.
pub fn write_panel(path: &Path, index: &PanelIndex, names: &[String], columns: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = vec!["Date".to_string(), "Stock".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for (i, e) in index.entries().iter().enumerate() {
        let mut row = vec![e.date.to_string(), e.stock.clone()];
        row.extend(columns.iter().map(|col| col[i].to_string()));
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_edges(edges: &BinEdges, names: &[String], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = vec!["feature".to_string()];
    header.extend((1..edges.m_n()).map(|k| format!("q{k}")));
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for (name, cuts) in names.iter().zip(edges.cuts()) {
        let mut row = vec![name.clone()];
        row.extend(cuts.iter().map(|c| c.to_string()));
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
