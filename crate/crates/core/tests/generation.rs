mod common;

use std::collections::BTreeSet;

use common::*;
use rulemine::cache::{ActivationCache, MANIFEST};
use rulemine::fitting::{significance_test, Objective};
use rulemine::generation::{generate_all, generate_to_csv, IntervalMode};
use rulemine::Condition;

#[test]
fn no_prune_matches_exhaustive_enumeration() {
    let (dd, y) = fixture(20, 10, 4, 3, 11);
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = gen_config(3, 2, 2, tmp.path());
    cfg.no_prune = true;
    let got = by_key(generate_all(&dd, &y, &cfg).unwrap().rules());

    let mut expected = 0;
    for cond in exhaustive_conditions(4, 3) {
        let m = mask(&dd, &cond);
        let ones = m.iter().filter(|&&b| b).count();
        if ones == 0 {
            assert!(!got.contains_key(&cond), "empty condition survived: {cond:?}");
            continue;
        }
        expected += 1;
        let rule = got.get(&cond).unwrap_or_else(|| panic!("missing {cond:?}"));
        let pred: f64 = y.iter().zip(&m).filter(|p| *p.1).map(|p| p.0).sum::<f64>() / ones as f64;
        assert_eq!(rule.coverage, ones as f64 / dd.n() as f64);
        assert!((rule.prediction - pred).abs() <= 1e-12 * pred.abs().max(1e-300));
    }
    assert_eq!(got.len(), expected);
}

#[test]
fn half_interval_mode_only_anchored_ranges() {
    let (dd, y) = fixture(20, 10, 3, 4, 5);
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = gen_config(4, 2, 1, tmp.path());
    cfg.no_prune = true;
    cfg.interval_mode = IntervalMode::Half;
    let g = generate_all(&dd, &y, &cfg).unwrap();
    // every interval touches bin 0 or bin 3
    for r in g.rules() {
        for (&lo, &hi) in r.condition.bmins().iter().zip(r.condition.bmaxs()) {
            assert!(lo == 0 || hi == 3);
        }
    }
    assert_eq!(g.report.lengths[0].candidates, 3 * 6);
    assert_eq!(g.report.lengths[1].candidates, 3 * 36);
}

#[test]
fn length_three_matches_reference_evaluation() {
    let (dd, y) = fixture(20, 10, 4, 3, 3);
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = gen_config(3, 3, 4, tmp.path());
    cfg.no_prune = true;
    let g = generate_all(&dd, &y, &cfg).unwrap();
    let three: Vec<_> = g.rules().filter(|r| r.len() == 3).collect();
    assert!(!three.is_empty());
    for r in &three {
        let m = mask(&dd, &key(r));
        let ones = m.iter().filter(|&&b| b).count();
        assert!(ones > 0);
        assert_eq!(r.coverage, ones as f64 / dd.n() as f64);
    }
    // every non-empty length-3 condition has a non-empty length-2 prefix,
    // so nothing is lost by extending survivors only
    let iv = full_intervals(3);
    let mut nonempty = 0;
    for f in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
        for a in &iv {
            for b in &iv {
                for c in &iv {
                    let cond = (f.to_vec(), vec![a.0, b.0, c.0], vec![a.1, b.1, c.1]);
                    if mask(&dd, &cond).contains(&true) {
                        nonempty += 1;
                    }
                }
            }
        }
    }
    assert_eq!(three.len(), nonempty);
}

#[test]
fn dedup_registry_each_signature_once() {
    let (dd, y) = fixture(30, 10, 5, 3, 8);
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = gen_config(3, 3, 3, tmp.path());
    cfg.no_prune = true;
    let g = generate_all(&dd, &y, &cfg).unwrap();
    let mut seen = BTreeSet::new();
    for t in &g.report.tasks {
        assert!(t.signature.windows(2).all(|w| w[0] < w[1]), "{:?}", t.signature);
        assert!(seen.insert(t.signature.clone()), "duplicate {:?}", t.signature);
    }
    // 5 + C(5,2) + C(5,3) when nothing is pruned
    assert_eq!(seen.len(), 5 + 10 + 10);
}

#[test]
fn steps_are_separated_by_a_barrier() {
    let (dd, y) = fixture(30, 20, 5, 4, 2);
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = gen_config(4, 3, 4, tmp.path());
    cfg.thresholds.cov_min = 0.01;
    let g = generate_all(&dd, &y, &cfg).unwrap();
    for l in 2..=3 {
        let prev_end = g
            .report
            .tasks
            .iter()
            .filter(|t| t.length == l - 1)
            .map(|t| t.started + t.seconds)
            .fold(0.0, f64::max);
        for t in g.report.tasks.iter().filter(|t| t.length == l) {
            assert!(
                t.started + 1e-9 >= prev_end,
                "task {:?} began before step {} ended",
                t.signature,
                l - 1
            );
        }
    }
}

#[test]
fn output_independent_of_worker_count() {
    let (dd, y) = fixture(40, 20, 6, 5, 4);
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in [1, 2, 8] {
        let mut cfg = gen_config(5, 2, workers, &tmp.path().join(format!("c{workers}")));
        cfg.thresholds.cov_min = 0.02;
        let out = tmp.path().join(format!("rules-{workers}.csv"));
        generate_to_csv(&dd, &y, &cfg, &out).unwrap();
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn pruned_survivors_pass_every_gate() {
    let (dd, y) = fixture(40, 20, 5, 5, 9);
    let tmp = tempfile::tempdir().unwrap();
    let cfg = gen_config(5, 2, 2, &tmp.path().join("a"));
    let pruned = generate_all(&dd, &y, &cfg).unwrap();
    let mut open = cfg.clone();
    open.no_prune = true;
    open.cache_dir = tmp.path().join("b");
    let all = by_key(generate_all(&dd, &y, &open).unwrap().rules());
    let th = cfg.thresholds;
    assert!(pruned.rules().count() > 0);
    for r in pruned.rules() {
        assert_eq!(all.get(&key(r)), Some(r), "survivor differs from unpruned fit");
        assert!(r.coverage > th.cov_min);
        assert!(r.criterion.mean > th.k);
        assert!(r.criterion.min.abs() < r.criterion.max.abs());
        assert!(r.pvalue <= th.alpha);
        let act = r.condition.evaluate(&dd).unwrap();
        assert!((significance_test(&act, &y).unwrap() - r.pvalue).abs() < 1e-15);
    }
}

#[test]
fn minimize_mirrors_the_gate() {
    let (dd, y) = fixture(40, 20, 4, 5, 12);
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = gen_config(5, 2, 2, tmp.path());
    cfg.criterion.objective = Objective::Minimize;
    let g = generate_all(&dd, &y, &cfg).unwrap();
    assert!(g.rules().count() > 0);
    for r in g.rules() {
        assert!(r.criterion.mean < 0.0);
        assert!(r.criterion.max.abs() < r.criterion.min.abs());
    }
}

#[test]
fn cache_cleared_unless_kept() {
    let (dd, y) = fixture(20, 10, 3, 3, 1);
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("cache");
    let mut cfg = gen_config(3, 2, 2, &dir);
    cfg.no_prune = true;
    generate_all(&dd, &y, &cfg).unwrap();
    assert!(!dir.exists());

    cfg.keep_cache = true;
    let g = generate_all(&dd, &y, &cfg).unwrap();
    assert!(dir.join(MANIFEST).exists());
    let cache = ActivationCache::open(&dir).unwrap();
    let manifest = cache.read_manifest().unwrap();
    assert_eq!(manifest.len(), g.rules().count());
    let r = g.rules().next().unwrap();
    let cond = Condition::new(
        r.condition.features().to_vec(),
        r.condition.bmins().to_vec(),
        r.condition.bmaxs().to_vec(),
        3,
    )
    .unwrap();
    assert_eq!(cache.load(&cond).unwrap(), r.condition.evaluate(&dd).unwrap());
}

#[test]
fn config_mismatch_is_rejected() {
    let (dd, y) = fixture(20, 10, 3, 3, 1);
    let tmp = tempfile::tempdir().unwrap();
    let cfg = gen_config(5, 2, 1, tmp.path());
    assert!(generate_all(&dd, &y, &cfg).is_err());
    let cfg = gen_config(3, 2, 1, tmp.path());
    assert!(generate_all(&dd, &y[1..], &cfg).is_err());
    let mut cfg = gen_config(3, 2, 0, tmp.path());
    cfg.workers = 0;
    assert!(generate_all(&dd, &y, &cfg).is_err());
}
