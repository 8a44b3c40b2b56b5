//! Greedy covering selection.
//!
//! Rules are browsed once, best first. A candidate enters when the share of
//! its activated points already covered by the selected rules is at most
//! `gamma` of its own coverage. Positive and negative predictions are
//! selected independently.

use std::cmp::Ordering;

use crate::activation::ActivationVector;
use crate::data::DiscretizedDataset;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::fitting::Objective;
use crate::rule::{evaluate_condition, Rule, Sign};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    pub gamma: f64,
    pub objective: Objective,
}

impl SelectionConfig {
    pub fn new(gamma: f64, objective: Objective) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidArgument(format!("gamma {gamma} not in (0, 1)")));
        }
        Ok(SelectionConfig { gamma, objective })
    }
}

fn compare(a: &Rule, b: &Rule, objective: Objective) -> Ordering {
    let by_crit = match objective {
        Objective::Maximize => b.criterion.mean.total_cmp(&a.criterion.mean),
        Objective::Minimize => a.criterion.mean.total_cmp(&b.criterion.mean),
    };
    by_crit
        .then_with(|| b.coverage.total_cmp(&a.coverage))
        .then_with(|| a.condition.canonical().cmp(&b.condition.canonical()))
}

/// Positions of `rules` from best to worst: criterion mean, then higher
/// coverage, then condition string.
pub fn sort_order(rules: &[Rule], objective: Objective) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rules.len()).collect();
    order.sort_by(|&i, &j| compare(&rules[i], &rules[j], objective));
    order
}

pub fn sort_by_crit(mut rules: Vec<Rule>, objective: Objective) -> Vec<Rule> {
    rules.sort_by(|a, b| compare(a, b, objective));
    rules
}

/// Single covering scan over already sorted activations; returns the
/// positions of the selected entries.
pub fn covering_scan(activations: &[ActivationVector], gamma: f64) -> Result<Vec<usize>> {
    let Some(first) = activations.first() else {
        return Ok(Vec::new());
    };
    let n = first.len();
    let mut union = ActivationVector::zeros(n);
    let mut selected = Vec::new();
    for (k, act) in activations.iter().enumerate() {
        let overlap = act.and_count(&union)? as f64 / n as f64;
        if overlap <= gamma * act.coverage() {
            union.union_in_place(act)?;
            selected.push(k);
        }
    }
    Ok(selected)
}

pub fn activations(
    rules: &[Rule],
    dd: &DiscretizedDataset,
    exec: &Executor,
) -> Result<Vec<ActivationVector>> {
    exec.map(rules, |r| evaluate_condition(&r.condition, dd))
        .into_iter()
        .collect()
}

/// Selects from `rules`, which must already be sorted best first.
pub fn select(rules: &[Rule], dd: &DiscretizedDataset, gamma: f64, exec: &Executor) -> Result<Vec<Rule>> {
    SelectionConfig::new(gamma, Objective::Maximize)?;
    let acts = activations(rules, dd, exec)?;
    Ok(covering_scan(&acts, gamma)?
        .into_iter()
        .map(|k| rules[k].clone())
        .collect())
}

/// Sorts and selects positive and negative rules separately, positives first.
pub fn select_signed(
    rules: &[Rule],
    dd: &DiscretizedDataset,
    cfg: &SelectionConfig,
    exec: &Executor,
) -> Result<Vec<Rule>> {
    SelectionConfig::new(cfg.gamma, cfg.objective)?;
    let (pos, neg): (Vec<Rule>, Vec<Rule>) = rules.iter().cloned().partition(|r| r.sign() == Sign::Positive);
    let pos = sort_by_crit(pos, cfg.objective);
    let neg = sort_by_crit(neg, cfg.objective);
    // activations are re-evaluated in parallel; the two scans share nothing
    let pos_acts = activations(&pos, dd, exec)?;
    let neg_acts = activations(&neg, dd, exec)?;
    let (pos_sel, neg_sel) = exec.join(
        || covering_scan(&pos_acts, cfg.gamma),
        || covering_scan(&neg_acts, cfg.gamma),
    );
    let mut out: Vec<Rule> = pos_sel?.into_iter().map(|k| pos[k].clone()).collect();
    out.extend(neg_sel?.into_iter().map(|k| neg[k].clone()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::{Condition, CriterionSummary};

    fn rule(feature: usize, mean: f64, coverage: f64) -> Rule {
        Rule {
            condition: Condition::single(feature, 0, 0, 3).unwrap(),
            prediction: 0.1,
            coverage,
            criterion: CriterionSummary {
                mean,
                min: mean,
                max: mean,
            },
            pvalue: 0.01,
        }
    }

    #[test]
    fn sort_examples() {
        let rules = vec![rule(0, 0.1, 0.2), rule(1, 0.5, 0.2), rule(2, 0.3, 0.2)];
        assert_eq!(sort_order(&rules, Objective::Maximize), vec![1, 2, 0]);
        assert_eq!(sort_order(&rules, Objective::Minimize), vec![0, 2, 1]);

        let tied = vec![rule(0, 0.2, 0.1), rule(1, 0.2, 0.3)];
        assert_eq!(sort_order(&tied, Objective::Maximize), vec![1, 0]);

        let full = vec![rule(5, 0.2, 0.3), rule(1, 0.2, 0.3), rule(3, 0.2, 0.3)];
        let order = sort_order(&full, Objective::Maximize);
        assert_eq!(order, vec![1, 2, 0]);
        assert_eq!(order, sort_order(&full, Objective::Maximize));
    }

    fn av(bits: &[u8]) -> ActivationVector {
        ActivationVector::from_bools(&bits.iter().map(|&b| b == 1).collect::<Vec<_>>())
    }

    #[test]
    fn covering_examples() {
        assert_eq!(covering_scan(&[av(&[0, 1, 1, 0])], 0.5).unwrap(), vec![0]);
        let a = av(&[1, 1, 0, 0]);
        assert_eq!(covering_scan(&[a.clone(), a], 0.5).unwrap(), vec![0]);
        // half overlap passes at gamma 0.5 (<=), fails just below
        let acts = [av(&[1, 1, 0, 0]), av(&[0, 1, 1, 0])];
        assert_eq!(covering_scan(&acts, 0.5).unwrap(), vec![0, 1]);
        assert_eq!(covering_scan(&acts, 0.49).unwrap(), vec![0]);
        assert!(covering_scan(&[], 0.5).unwrap().is_empty());
    }

    #[test]
    fn empty_activation_always_enters() {
        // zero coverage gives 0 <= 0
        let acts = [av(&[1, 1]), av(&[0, 0])];
        assert_eq!(covering_scan(&acts, 0.1).unwrap(), vec![0, 1]);
    }

    #[test]
    fn gamma_validation() {
        assert!(SelectionConfig::new(0.0, Objective::Maximize).is_err());
        assert!(SelectionConfig::new(1.0, Objective::Maximize).is_err());
        assert!(SelectionConfig::new(0.3, Objective::Maximize).is_ok());
    }
}
