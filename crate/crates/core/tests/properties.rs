use proptest::prelude::*;

use rulemine::data::{bin_of, compute_bin_edges, DiscretizedDataset, IndexEntry, PanelIndex};
use rulemine::evaluation::{aggregate_predictions, build_portfolios, PredictionPanel};
use rulemine::fitting::{hoeffding_pvalue, predict_value};
use rulemine::rule::CriterionSummary;
use rulemine::scaling::{amdahl_time, fit_amdahl};
use rulemine::selection::covering_scan;
use rulemine::synth::business_days;
use rulemine::workload::simulate_schedule;
use rulemine::{ActivationVector, Condition, Executor, Rule};

/// `n_dates x n_stocks` index, stock-major.
fn index(n_dates: usize, n_stocks: usize) -> PanelIndex {
    let days = business_days(n_dates);
    let mut entries = Vec::new();
    for s in 0..n_stocks {
        for &d in &days {
            entries.push(IndexEntry::new(d, format!("S{s:02}")));
        }
    }
    PanelIndex::new(entries).unwrap()
}

fn binned(
    m_n: usize,
    d: usize,
    n_dates: usize,
    n_stocks: usize,
) -> impl Strategy<Value = DiscretizedDataset> {
    let n = n_dates * n_stocks;
    prop::collection::vec(prop::collection::vec(0..m_n as u16, n), d).prop_map(move |bins| {
        let names = (0..d).map(|j| format!("X[{j}]")).collect();
        DiscretizedDataset::new(index(n_dates, n_stocks), names, bins, m_n).unwrap()
    })
}

fn interval(m_n: usize) -> impl Strategy<Value = (u16, u16)> {
    let top = (m_n - 1) as u16;
    (0..=top, 0..=top)
        .prop_map(|(a, b)| (a.min(b), a.max(b)))
        .prop_filter("trivial interval", move |&(a, b)| (a, b) != (0, top))
}

fn rule(cond: Condition, prediction: f64) -> Rule {
    Rule {
        condition: cond,
        prediction,
        coverage: 0.0,
        criterion: CriterionSummary {
            mean: 0.0,
            min: 0.0,
            max: 0.0,
        },
        pvalue: 1.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn equal_mass_on_distinct_values(
        set in prop::collection::btree_set(-100_000i64..100_000, 60),
        m_n in prop::sample::select(vec![2usize, 3, 4, 5, 6]),
        seed in any::<u64>(),
    ) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut values: Vec<f64> = set.into_iter().map(|v| v as f64 / 7.0).collect();
        values.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let cuts = compute_bin_edges(&values, m_n).unwrap();
        let mut counts = vec![0usize; m_n];
        for &v in &values {
            counts[bin_of(v, &cuts) as usize] += 1;
        }
        if 60 % m_n == 0 {
            prop_assert!(counts.iter().all(|&c| c == 60 / m_n), "{counts:?}");
        } else {
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "{counts:?}");
        }
    }

    #[test]
    fn bins_are_monotone(
        values in prop::collection::vec(-1e6f64..1e6, 5..200),
        m_n in 2usize..6,
        a in -1e6f64..1e6,
        b in -1e6f64..1e6,
    ) {
        prop_assume!(values.len() >= m_n);
        let cuts = compute_bin_edges(&values, m_n).unwrap();
        prop_assert!(cuts.windows(2).all(|w| w[0] <= w[1]));
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(bin_of(lo, &cuts) <= bin_of(hi, &cuts));
        prop_assert!((bin_of(hi, &cuts) as usize) < m_n);
    }

    #[test]
    fn conjunction_is_and_of_parts(
        dd in binned(4, 3, 6, 5),
        i0 in interval(4),
        i1 in interval(4),
    ) {
        let a = Condition::single(0, i0.0, i0.1, 4).unwrap();
        let b = Condition::single(2, i1.0, i1.1, 4).unwrap();
        let ab = a.extended(2, i1.0, i1.1, 4).unwrap();
        let folded = a.evaluate(&dd).unwrap().and(&b.evaluate(&dd).unwrap()).unwrap();
        let direct = ab.evaluate(&dd).unwrap();
        prop_assert_eq!(&folded, &direct);
        let count = (0..dd.n()).filter(|&r| ab.matches_row(&dd, r)).count();
        prop_assert_eq!(direct.ones(), count);
        // extending a condition can only shrink its coverage
        prop_assert!(direct.coverage() <= a.evaluate(&dd).unwrap().coverage());
    }

    #[test]
    fn activation_bytes_round_trip(bits in prop::collection::vec(any::<bool>(), 0..300)) {
        let v = ActivationVector::from_bools(&bits);
        prop_assert_eq!(v.ones(), bits.iter().filter(|&&b| b).count());
        prop_assert_eq!(ActivationVector::from_bytes(&v.to_bytes()).unwrap(), v.clone());
        prop_assert_eq!(v.to_bools(), bits);
    }

    #[test]
    fn prediction_is_affine_equivariant(
        y in prop::collection::vec(-1.0f64..1.0, 1..100),
        mask_seed in any::<u64>(),
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
    ) {
        let n = y.len();
        let mut act = ActivationVector::from_predicate(n, |i| (mask_seed >> (i % 64)) & 1 == 1);
        if act.ones() == 0 {
            act = ActivationVector::full(n);
        }
        let t: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        let lhs = predict_value(&act, &t).unwrap();
        let rhs = a * predict_value(&act, &y).unwrap() + b;
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn pvalue_bounded_and_decreasing_in_support(
        ones in 1usize..10_000,
        dev in 0.0f64..2.0,
        range in 0.01f64..5.0,
    ) {
        let p = hoeffding_pvalue(ones, dev, range);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(hoeffding_pvalue(ones + 1, dev, range) <= p);
    }

    #[test]
    fn makespan_bounds_and_monotone(
        tasks in prop::collection::vec(0.0f64..100.0, 1..80),
        w in 1usize..40,
    ) {
        let m = simulate_schedule(&tasks, w).unwrap();
        let max = tasks.iter().copied().fold(0.0, f64::max);
        let sum: f64 = tasks.iter().sum();
        prop_assert!(m + 1e-9 >= max);
        prop_assert!(m + 1e-9 >= sum / w as f64);
        prop_assert!(m <= sum / w as f64 + max + 1e-9);
        prop_assert!(simulate_schedule(&tasks, w + 1).unwrap() <= m + 1e-9);
    }

    #[test]
    fn amdahl_fit_recovers_parameters(t1 in 0.5f64..1000.0, p in 0.0f64..=1.0) {
        let pts: Vec<(usize, f64)> = [1, 2, 4, 8, 16, 32].iter().map(|&c| (c, amdahl_time(t1, p, c as f64))).collect();
        let fit = fit_amdahl(&pts).unwrap();
        prop_assert!((fit.t1 - t1).abs() <= 1e-6 * t1, "{fit:?} vs t1={t1}");
        prop_assert!((fit.p - p).abs() <= 1e-6 * p.max(1e-3), "{fit:?} vs p={p}");
    }

    #[test]
    fn covering_scan_replays(
        masks in prop::collection::vec(prop::collection::vec(any::<bool>(), 64), 1..30),
        gamma in 0.01f64..0.99,
    ) {
        let acts: Vec<ActivationVector> = masks.iter().map(|m| ActivationVector::from_bools(m)).collect();
        let selected = covering_scan(&acts, gamma).unwrap();
        let mut union = vec![false; 64];
        for (k, m) in masks.iter().enumerate() {
            let ones = m.iter().filter(|&&b| b).count() as f64 / 64.0;
            let overlap = m.iter().zip(&union).filter(|(a, b)| **a && **b).count() as f64 / 64.0;
            let admit = overlap <= gamma * ones;
            prop_assert_eq!(admit, selected.contains(&k));
            if admit {
                for (u, &b) in union.iter_mut().zip(m) {
                    *u |= b;
                }
            }
        }
    }

    #[test]
    fn ranking_ignores_a_common_shift(
        values in prop::collection::vec(prop::option::of(-1.0f64..1.0), 60),
        shift in -10.0f64..10.0,
        k in 1usize..6,
    ) {
        let idx = index(6, 10);
        let base = PredictionPanel { index: idx.clone(), values: values.clone() };
        let shifted = PredictionPanel {
            index: idx,
            values: values.iter().map(|v| v.map(|x| x + shift)).collect(),
        };
        let a = build_portfolios(&base, k).unwrap();
        let b = build_portfolios(&shifted, k).unwrap();
        // ties created by rounding would be legitimate reorderings
        let distinct = {
            let mut v: Vec<f64> = values.iter().flatten().copied().collect();
            v.sort_by(f64::total_cmp);
            v.windows(2).all(|w| (w[1] - w[0]).abs() > 1e-9)
        };
        prop_assume!(distinct);
        prop_assert_eq!(&a, &b);
        for h in &a.holdings {
            if !h.stocks.is_empty() {
                prop_assert!((h.weight() * h.stocks.len() as f64 - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn aggregation_within_rule_bounds(
        dd in binned(3, 2, 4, 5),
        specs in prop::collection::vec((0usize..2, interval(3), -1.0f64..1.0), 1..8),
    ) {
        let rules: Vec<Rule> = specs
            .iter()
            .map(|&(j, (a, b), p)| rule(Condition::single(j, a, b, 3).unwrap(), p))
            .collect();
        let panel = aggregate_predictions(&rules, &dd, &Executor::sequential()).unwrap();
        let acts: Vec<_> = rules.iter().map(|r| r.condition.evaluate(&dd).unwrap()).collect();
        for (i, v) in panel.values.iter().enumerate() {
            let active: Vec<f64> = rules.iter().zip(&acts).filter(|(_, a)| a.get(i)).map(|(r, _)| r.prediction).collect();
            match v {
                None => prop_assert!(active.is_empty()),
                Some(x) => {
                    let lo = active.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = active.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(lo - 1e-12 <= *x && *x <= hi + 1e-12);
                }
            }
        }
    }
}
