//! Conditions (conjunctions of per-feature bin intervals), fitted rules and
//! rulesets.

use std::fmt::Write as _;

use crate::activation::ActivationVector;
use crate::data::{Bin, DiscretizedDataset};
use crate::error::{Error, Result};

/// Conjunction of `bmin <= bin(feature) <= bmax` tests, features ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Condition {
    features: Vec<usize>,
    bmins: Vec<Bin>,
    bmaxs: Vec<Bin>,
}

impl Condition {
    /// Validates and canonicalizes (sorts by feature index).
    pub fn new(features: Vec<usize>, bmins: Vec<Bin>, bmaxs: Vec<Bin>, m_n: usize) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidCondition(
                "condition needs at least one feature".into(),
            ));
        }
        if features.len() != bmins.len() || features.len() != bmaxs.len() {
            return Err(Error::InvalidCondition(format!(
                "{} features, {} bmins, {} bmaxs",
                features.len(),
                bmins.len(),
                bmaxs.len()
            )));
        }
        let mut parts: Vec<(usize, Bin, Bin)> = features
            .into_iter()
            .zip(bmins)
            .zip(bmaxs)
            .map(|((f, lo), hi)| (f, lo, hi))
            .collect();
        parts.sort_unstable();
        for pair in parts.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidCondition(format!(
                    "feature {} appears more than once",
                    pair[0].0
                )));
            }
        }
        for &(f, lo, hi) in &parts {
            check_interval(f, lo, hi, m_n)?;
        }
        Ok(Condition {
            features: parts.iter().map(|p| p.0).collect(),
            bmins: parts.iter().map(|p| p.1).collect(),
            bmaxs: parts.iter().map(|p| p.2).collect(),
        })
    }

    pub fn single(feature: usize, bmin: Bin, bmax: Bin, m_n: usize) -> Result<Self> {
        Self::new(vec![feature], vec![bmin], vec![bmax], m_n)
    }

    /// Appends a test on a feature with a larger index than any already present.
    pub fn extended(&self, feature: usize, bmin: Bin, bmax: Bin, m_n: usize) -> Result<Self> {
        if self.features.last().is_some_and(|&last| feature <= last) {
            return Err(Error::InvalidCondition(format!(
                "feature {feature} must exceed {}",
                self.features.last().unwrap()
            )));
        }
        check_interval(feature, bmin, bmax, m_n)?;
        let mut out = self.clone();
        out.features.push(feature);
        out.bmins.push(bmin);
        out.bmaxs.push(bmax);
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[usize] {
        &self.features
    }

    pub fn bmins(&self) -> &[Bin] {
        &self.bmins
    }

    pub fn bmaxs(&self) -> &[Bin] {
        &self.bmaxs
    }

    /// `f<idx>:<bmin>-<bmax>` parts joined by `;`. Keys the activation cache.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for j in 0..self.len() {
            if j > 0 {
                s.push(';');
            }
            let _ = write!(s, "f{}:{}-{}", self.features[j], self.bmins[j], self.bmaxs[j]);
        }
        s
    }

    pub fn matches_row(&self, dd: &DiscretizedDataset, row: usize) -> bool {
        (0..self.len()).all(|j| {
            let b = dd.bins(self.features[j])[row];
            self.bmins[j] <= b && b <= self.bmaxs[j]
        })
    }

    pub fn evaluate(&self, dd: &DiscretizedDataset) -> Result<ActivationVector> {
        evaluate_condition(self, dd)
    }
}

fn check_interval(feature: usize, bmin: Bin, bmax: Bin, m_n: usize) -> Result<()> {
    if bmin > bmax || bmax as usize >= m_n {
        return Err(Error::InvalidCondition(format!(
            "interval [{bmin}, {bmax}] on feature {feature} outside 0..{m_n}"
        )));
    }
    if bmin == 0 && bmax as usize == m_n - 1 {
        return Err(Error::InvalidCondition(format!(
            "interval [{bmin}, {bmax}] on feature {feature} is the trivial full range"
        )));
    }
    Ok(())
}

pub fn evaluate_condition(cond: &Condition, dd: &DiscretizedDataset) -> Result<ActivationVector> {
    if let Some(&f) = cond.features.iter().find(|&&f| f >= dd.d()) {
        return Err(Error::InvalidCondition(format!(
            "feature index {f} out of range for {} features",
            dd.d()
        )));
    }
    let cols: Vec<(&[Bin], Bin, Bin)> = (0..cond.len())
        .map(|j| (dd.bins(cond.features[j]), cond.bmins[j], cond.bmaxs[j]))
        .collect();
    Ok(ActivationVector::from_predicate(dd.n(), |i| {
        cols.iter().all(|&(col, lo, hi)| lo <= col[i] && col[i] <= hi)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    /// Zero predictions fall on the negative side.
    pub fn of(prediction: f64) -> Self {
        if prediction > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
        }
    }
}

/// Mean, minimum and maximum of a rule's criterion sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl CriterionSummary {
    pub fn of(seq: &[f64]) -> Self {
        if seq.is_empty() {
            return CriterionSummary {
                mean: 0.0,
                min: 0.0,
                max: 0.0,
            };
        }
        CriterionSummary {
            mean: seq.iter().sum::<f64>() / seq.len() as f64,
            min: seq.iter().copied().fold(f64::INFINITY, f64::min),
            max: seq.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub condition: Condition,
    pub prediction: f64,
    pub coverage: f64,
    pub criterion: CriterionSummary,
    pub pvalue: f64,
}

impl Rule {
    pub fn sign(&self) -> Sign {
        Sign::of(self.prediction)
    }

    pub fn len(&self) -> usize {
        self.condition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.condition.is_empty()
    }
}

/// `r_<ordinal>(<length>)<sign>`.
pub fn canonical_name(rule: &Rule, ordinal: usize) -> String {
    format!("r_{ordinal}({}){}", rule.len(), rule.sign().symbol())
}

/// All surviving rules over one feature combination.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub signature: Vec<usize>,
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(signature: Vec<usize>, rules: Vec<Rule>) -> Result<Self> {
        if let Some(r) = rules
            .iter()
            .find(|r| r.condition.features() != signature.as_slice())
        {
            return Err(Error::InvalidCondition(format!(
                "rule {} does not match signature {signature:?}",
                r.condition.canonical()
            )));
        }
        Ok(RuleSet { signature, rules })
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }
}
