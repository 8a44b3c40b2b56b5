//! Rule CSV files.
//!
//! Columns: `name,names,bmins,bmaxs,cov,pred,crit_mean,crit_min,crit_max,pvalue`.
//! List cells use Python-literal syntax, e.g. `['X[1]', 'X[2]']` and `[3, 0]`.

use std::path::Path;

use crate::data::{Bin, DiscretizedDataset};
use crate::error::{Error, Result};
use crate::rule::{canonical_name, Condition, CriterionSummary, Rule};

pub const RULE_COLUMNS: [&str; 10] = [
    "name",
    "names",
    "bmins",
    "bmaxs",
    "cov",
    "pred",
    "crit_mean",
    "crit_min",
    "crit_max",
    "pvalue",
];

pub fn format_name_list(names: &[&str]) -> String {
    let quoted: Vec<String> = names.iter().map(|n| format!("'{n}'")).collect();
    format!("[{}]", quoted.join(", "))
}

pub fn format_int_list(values: &[Bin]) -> String {
    let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

pub fn parse_name_list(cell: &str) -> std::result::Result<Vec<String>, String> {
    let inner = cell
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| format!("{cell:?} is not a bracketed list"))?;
    let mut out = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        let body = rest
            .strip_prefix('\'')
            .ok_or_else(|| format!("expected quoted name in {cell:?}"))?;
        // a name ends at a quote followed by a separator or the end of the list
        let mut end = None;
        for (pos, _) in body.match_indices('\'') {
            let after = body[pos + 1..].trim_start();
            if after.is_empty() || after.starts_with(',') {
                end = Some(pos);
                break;
            }
        }
        let end = end.ok_or_else(|| format!("unterminated name in {cell:?}"))?;
        out.push(body[..end].to_string());
        rest = body[end + 1..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
            if rest.is_empty() {
                return Err(format!("trailing comma in {cell:?}"));
            }
        }
    }
    Ok(out)
}

pub fn parse_int_list(cell: &str) -> std::result::Result<Vec<Bin>, String> {
    let inner = cell
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| format!("{cell:?} is not a bracketed list"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<Bin>()
                .map_err(|_| format!("bad bin {p:?} in {cell:?}"))
        })
        .collect()
}

/// Writes rules with sequential ordinals starting from 0.
pub fn write_rules_csv(path: &Path, rules: &[Rule], feature_names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(RULE_COLUMNS).map_err(|e| Error::csv(path, e))?;
    for (ordinal, rule) in rules.iter().enumerate() {
        let names: Vec<&str> = rule
            .condition
            .features()
            .iter()
            .map(|&f| {
                feature_names.get(f).map(String::as_str).ok_or_else(|| {
                    Error::Shape(format!(
                        "rule uses feature {f} but only {} names",
                        feature_names.len()
                    ))
                })
            })
            .collect::<Result<_>>()?;
        w.write_record([
            canonical_name(rule, ordinal),
            format_name_list(&names),
            format_int_list(rule.condition.bmins()),
            format_int_list(rule.condition.bmaxs()),
            rule.coverage.to_string(),
            rule.prediction.to_string(),
            rule.criterion.mean.to_string(),
            rule.criterion.min.to_string(),
            rule.criterion.max.to_string(),
            rule.pvalue.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A rule row as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleRow {
    pub name: String,
    pub rule: Rule,
}

/// Reads a rules file, resolving feature names against `dd`.
pub fn read_rules_csv(path: &Path, dd: &DiscretizedDataset) -> Result<Vec<RuleRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != RULE_COLUMNS {
        return Err(Error::Parse {
            path: path.into(),
            record: 0,
            message: format!("expected header {}", RULE_COLUMNS.join(",")),
        });
    }
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let err = |message: String| Error::Parse {
            path: path.into(),
            record: k + 1,
            message,
        };
        let num = |j: usize| -> Result<f64> {
            rec[j].trim().parse::<f64>().map_err(|_| {
                err(format!(
                    "column {} is not a number: {:?}",
                    RULE_COLUMNS[j], &rec[j]
                ))
            })
        };
        let names = parse_name_list(&rec[1]).map_err(&err)?;
        let features = names
            .iter()
            .map(|n| {
                dd.feature_index(n)
                    .ok_or_else(|| err(format!("unknown feature {n:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let bmins = parse_int_list(&rec[2]).map_err(&err)?;
        let bmaxs = parse_int_list(&rec[3]).map_err(&err)?;
        let condition = Condition::new(features, bmins, bmaxs, dd.m_n())?;
        out.push(RuleRow {
            name: rec[0].to_string(),
            rule: Rule {
                condition,
                coverage: num(4)?,
                prediction: num(5)?,
                criterion: CriterionSummary {
                    mean: num(6)?,
                    min: num(7)?,
                    max: num(8)?,
                },
                pvalue: num(9)?,
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_cells_layout() {
        assert_eq!(format_name_list(&["X[1]"]), "['X[1]']");
        assert_eq!(format_name_list(&["X[1]", "X[2]"]), "['X[1]', 'X[2]']");
        assert_eq!(format_int_list(&[3, 0]), "[3, 0]");
        assert_eq!(format_int_list(&[0]), "[0]");
    }

    #[test]
    fn list_cells_parse() {
        assert_eq!(parse_name_list("['X[1]', 'X[2]']").unwrap(), vec!["X[1]", "X[2]"]);
        assert_eq!(parse_name_list("['it's', 'b']").unwrap(), vec!["it's", "b"]);
        assert_eq!(parse_int_list("[3, 0]").unwrap(), vec![3, 0]);
        assert!(parse_name_list("X[1]").is_err());
        assert!(parse_name_list("['a',]").is_err());
        assert!(parse_int_list("[a]").is_err());
    }
}
