//! Rule attributes (prediction, coverage, criterion, significance) and the
//! four-condition acceptance gate.
//!
//! The gate computes attributes lazily and stops at the first failed
//! condition, so a rule rejected on coverage never pays for its criterion,
//! and one rejected on the criterion never pays for its significance test.

use std::cell::Cell;
use std::ops::AddAssign;
use std::str::FromStr;

use crate::activation::ActivationVector;
use crate::data::{DateLayout, PanelIndex};
use crate::error::{Error, Result};
use crate::rule::{Condition, CriterionSummary, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Maximize,
    Minimize,
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "maximize" | "max" => Ok(Objective::Maximize),
            "minimize" | "min" => Ok(Objective::Minimize),
            other => Err(Error::Config(format!("unknown objective {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CriterionSpec {
    /// Rolling window length, in distinct dates.
    pub window: usize,
    pub objective: Objective,
}

impl CriterionSpec {
    pub fn validate(&self, n_dates: usize) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidArgument("criterion window must be >= 1".into()));
        }
        if self.window > n_dates {
            return Err(Error::InvalidArgument(format!(
                "criterion window {} exceeds the {n_dates} distinct dates",
                self.window
            )));
        }
        Ok(())
    }
}

/// A criterion maps a rule's activation to a sequence over rolling windows.
pub trait Criterion: Send + Sync {
    fn name(&self) -> &'static str;

    fn sequence(&self, act: &ActivationVector, y: &[f64], dates: &DateLayout) -> Result<Vec<f64>>;
}

/// Mean target over activated points inside each window of `window`
/// consecutive distinct dates, stride one. Windows without activated
/// points yield 0.
#[derive(Debug, Clone, Copy)]
pub struct RollingMean {
    pub window: usize,
}

impl Criterion for RollingMean {
    fn name(&self) -> &'static str {
        "rolling_mean"
    }

    fn sequence(&self, act: &ActivationVector, y: &[f64], dates: &DateLayout) -> Result<Vec<f64>> {
        let n_dates = dates.n_dates();
        if self.window == 0 || self.window > n_dates {
            return Err(Error::InvalidArgument(format!(
                "criterion window {} exceeds the {n_dates} distinct dates",
                self.window
            )));
        }
        if act.len() != y.len() || act.len() != dates.len() {
            return Err(Error::Shape("activation, target and index lengths differ".into()));
        }
        let mut sums = vec![0.0; n_dates];
        let mut counts = vec![0usize; n_dates];
        for i in act.iter_ones() {
            let t = dates.date_rank(i);
            sums[t] += y[i];
            counts[t] += 1;
        }
        let mut out = Vec::with_capacity(n_dates - self.window + 1);
        let mut sum: f64 = sums[..self.window].iter().sum();
        let mut count: usize = counts[..self.window].iter().sum();
        for start in 0..=(n_dates - self.window) {
            if start > 0 {
                let leaving = start - 1;
                let entering = start + self.window - 1;
                sum += sums[entering] - sums[leaving];
                count = count + counts[entering] - counts[leaving];
            }
            // an empty window resets accumulated rounding
            if count == 0 {
                sum = 0.0;
                out.push(0.0);
            } else {
                out.push(sum / count as f64);
            }
        }
        Ok(out)
    }
}

pub fn criterion_by_name(name: &str, window: usize) -> Result<Box<dyn Criterion>> {
    match name.trim() {
        "rolling_mean" => Ok(Box::new(RollingMean { window })),
        other => Err(Error::Config(format!("unknown criterion {other:?}"))),
    }
}

/// Rolling conditional-mean criterion over the panel's distinct dates.
pub fn criterion_sequence(
    act: &ActivationVector,
    y: &[f64],
    index: &PanelIndex,
    spec: &CriterionSpec,
) -> Result<Vec<f64>> {
    RollingMean { window: spec.window }.sequence(act, y, &index.date_layout())
}

/// Mean of `y` on activated points.
pub fn predict_value(act: &ActivationVector, y: &[f64]) -> Result<f64> {
    if act.len() != y.len() {
        return Err(Error::Shape(format!(
            "activation has {} points, target has {}",
            act.len(),
            y.len()
        )));
    }
    if act.ones() == 0 {
        return Err(Error::NoActivatedPoints);
    }
    let sum: f64 = act.iter_ones().map(|i| y[i]).sum();
    Ok(sum / act.ones() as f64)
}

/// Hoeffding bound on `|mean_activated - mean_global| >= deviation` for
/// `ones` samples in a range of width `range`.
pub fn hoeffding_pvalue(ones: usize, deviation: f64, range: f64) -> f64 {
    if range <= 0.0 || ones == 0 {
        return 1.0;
    }
    let z = deviation / range;
    (2.0 * (-2.0 * ones as f64 * z * z).exp()).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TargetMoments {
    mean: f64,
    range: f64,
}

impl TargetMoments {
    fn of(y: &[f64]) -> Self {
        if y.is_empty() {
            return TargetMoments {
                mean: 0.0,
                range: 0.0,
            };
        }
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        TargetMoments { mean, range: hi - lo }
    }
}

/// p-value of "the rule-conditional mean equals the global mean of y".
pub fn significance_test(act: &ActivationVector, y: &[f64]) -> Result<f64> {
    let moments = TargetMoments::of(y);
    let pred = predict_value(act, y)?;
    Ok(hoeffding_pvalue(
        act.ones(),
        (pred - moments.mean).abs(),
        moments.range,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub cov_min: f64,
    pub k: f64,
    pub alpha: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            cov_min: 0.05,
            k: 0.0,
            alpha: 0.05,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cov_min) {
            return Err(Error::InvalidArgument(format!(
                "cov_min {} not in [0, 1]",
                self.cov_min
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha {} not in (0, 1)",
                self.alpha
            )));
        }
        if !self.k.is_finite() {
            return Err(Error::InvalidArgument("K must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateFailure {
    Coverage,
    CriterionMean,
    CriterionAsymmetry,
    Significance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateVerdict {
    pub failed: Option<GateFailure>,
}

impl GateVerdict {
    pub fn passed(&self) -> bool {
        self.failed.is_none()
    }
}

/// Evaluation counters. Plain integers: each task owns its own copy and the
/// coordinator sums them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GateStats {
    pub candidates: u64,
    pub coverage_evals: u64,
    pub criterion_evals: u64,
    pub significance_evals: u64,
    pub failed_coverage: u64,
    pub failed_criterion_mean: u64,
    pub failed_criterion_asymmetry: u64,
    pub failed_significance: u64,
    pub accepted: u64,
}

impl AddAssign for GateStats {
    fn add_assign(&mut self, o: Self) {
        self.candidates += o.candidates;
        self.coverage_evals += o.coverage_evals;
        self.criterion_evals += o.criterion_evals;
        self.significance_evals += o.significance_evals;
        self.failed_coverage += o.failed_coverage;
        self.failed_criterion_mean += o.failed_criterion_mean;
        self.failed_criterion_asymmetry += o.failed_criterion_asymmetry;
        self.failed_significance += o.failed_significance;
        self.accepted += o.accepted;
    }
}

impl GateStats {
    fn record(&mut self, failure: GateFailure) {
        match failure {
            GateFailure::Coverage => self.failed_coverage += 1,
            GateFailure::CriterionMean => self.failed_criterion_mean += 1,
            GateFailure::CriterionAsymmetry => self.failed_criterion_asymmetry += 1,
            GateFailure::Significance => self.failed_significance += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateOutcome {
    pub verdict: GateVerdict,
    pub criterion: Option<Vec<f64>>,
    pub pvalue: Option<f64>,
}

fn criterion_mean_ok(summary: &CriterionSummary, k: f64, objective: Objective) -> bool {
    match objective {
        Objective::Maximize => summary.mean > k,
        Objective::Minimize => summary.mean < k,
    }
}

fn criterion_asymmetry_ok(summary: &CriterionSummary, objective: Objective) -> bool {
    match objective {
        Objective::Maximize => summary.min.abs() < summary.max.abs(),
        Objective::Minimize => summary.max.abs() < summary.min.abs(),
    }
}

/// Applies the four conditions in order, computing the criterion and
/// p-value only when the preceding conditions hold. NaN fails every test.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn gate_rule<C, P>(
    coverage: f64,
    criterion: C,
    significance: P,
    th: &Thresholds,
    objective: Objective,
    stats: &mut GateStats,
) -> Result<GateOutcome>
where
    C: FnOnce() -> Result<Vec<f64>>,
    P: FnOnce() -> Result<f64>,
{
    let reject = |failure, criterion, pvalue, stats: &mut GateStats| {
        stats.record(failure);
        GateOutcome {
            verdict: GateVerdict {
                failed: Some(failure),
            },
            criterion,
            pvalue,
        }
    };

    stats.coverage_evals += 1;
    if !(coverage > th.cov_min) {
        return Ok(reject(GateFailure::Coverage, None, None, stats));
    }

    stats.criterion_evals += 1;
    let seq = criterion()?;
    let summary = CriterionSummary::of(&seq);
    if !criterion_mean_ok(&summary, th.k, objective) {
        return Ok(reject(GateFailure::CriterionMean, Some(seq), None, stats));
    }
    if !criterion_asymmetry_ok(&summary, objective) {
        return Ok(reject(GateFailure::CriterionAsymmetry, Some(seq), None, stats));
    }

    stats.significance_evals += 1;
    let p = significance()?;
    if !(p <= th.alpha) {
        return Ok(reject(GateFailure::Significance, Some(seq), Some(p), stats));
    }

    stats.accepted += 1;
    Ok(GateOutcome {
        verdict: GateVerdict { failed: None },
        criterion: Some(seq),
        pvalue: Some(p),
    })
}

/// Shared read-only context for fitting rules against one dataset.
pub struct Fitter<'a> {
    y: &'a [f64],
    dates: &'a DateLayout,
    criterion: &'a dyn Criterion,
    thresholds: Thresholds,
    objective: Objective,
    no_prune: bool,
    moments: TargetMoments,
}

impl<'a> Fitter<'a> {
    pub fn new(
        y: &'a [f64],
        dates: &'a DateLayout,
        criterion: &'a dyn Criterion,
        thresholds: Thresholds,
        objective: Objective,
        no_prune: bool,
    ) -> Result<Self> {
        if y.len() != dates.len() {
            return Err(Error::Shape(format!(
                "target has {} values, index has {}",
                y.len(),
                dates.len()
            )));
        }
        thresholds.validate()?;
        Ok(Fitter {
            y,
            dates,
            criterion,
            thresholds,
            objective,
            no_prune,
            moments: TargetMoments::of(y),
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Fits and gates one candidate. Returns the rule if it survives.
    ///
    /// With `no_prune` every candidate with at least one activated point
    /// survives; an empty activation has no prediction and is dropped.
    pub fn fit(
        &self,
        condition: &Condition,
        act: &ActivationVector,
        stats: &mut GateStats,
    ) -> Result<Option<Rule>> {
        stats.candidates += 1;
        let coverage = act.coverage();
        if self.no_prune {
            if act.ones() == 0 {
                stats.coverage_evals += 1;
                stats.failed_coverage += 1;
                return Ok(None);
            }
            stats.coverage_evals += 1;
            stats.criterion_evals += 1;
            stats.significance_evals += 1;
            stats.accepted += 1;
            let prediction = predict_value(act, self.y)?;
            let seq = self.criterion.sequence(act, self.y, self.dates)?;
            return Ok(Some(Rule {
                condition: condition.clone(),
                prediction,
                coverage,
                criterion: CriterionSummary::of(&seq),
                pvalue: self.pvalue(act.ones(), prediction),
            }));
        }

        // Coverage 0 can never exceed cov_min >= 0, so the prediction below
        // always sees at least one activated point.
        let prediction = Cell::new(None);
        let outcome = gate_rule(
            coverage,
            || {
                prediction.set(Some(predict_value(act, self.y)?));
                self.criterion.sequence(act, self.y, self.dates)
            },
            || Ok(self.pvalue(act.ones(), prediction.get().expect("prediction computed"))),
            &self.thresholds,
            self.objective,
            stats,
        )?;
        if !outcome.verdict.passed() {
            return Ok(None);
        }
        Ok(Some(Rule {
            condition: condition.clone(),
            prediction: prediction.get().expect("prediction computed"),
            coverage,
            criterion: CriterionSummary::of(outcome.criterion.as_deref().unwrap_or(&[])),
            pvalue: outcome.pvalue.expect("pvalue computed"),
        }))
    }

    fn pvalue(&self, ones: usize, prediction: f64) -> f64 {
        hoeffding_pvalue(ones, (prediction - self.moments.mean).abs(), self.moments.range)
    }
}
