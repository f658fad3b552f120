//! Brute-force oracle equivalence for the ranking metrics and the t-test,
//! plus the metric invariants.

use autodiff::rng::{uniform_f64, uniform_in};
use evalkit::{aupr, auroc, paired_t_test_one_tailed, recall_at_fdr, student_t_upper_tail};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// O(n^2) pair-counting auROC: concordant pairs plus half the ties.
fn auroc_pair_oracle(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut concordant = 0.0f64;
    let mut pairs = 0.0f64;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                concordant += 1.0;
            } else if scores[i] == scores[j] {
                concordant += 0.5;
            }
        }
    }
    if pairs == 0.0 {
        None
    } else {
        Some(concordant / pairs)
    }
}

/// Rank-by-rank average-precision oracle over score-descending order.
fn aupr_oracle(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let p = labels.iter().filter(|l| **l).count();
    if p == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|a, b| scores[*b].partial_cmp(&scores[*a]).unwrap());
    let mut tp = 0usize;
    let mut total = 0.0f64;
    for (rank0, idx) in order.iter().enumerate() {
        if labels[*idx] {
            tp += 1;
            total += tp as f64 / (rank0 + 1) as f64;
        }
    }
    Some(total / p as f64)
}

/// Exhaustive threshold enumeration for recall at an FDR budget.
fn recall_at_fdr_oracle(scores: &[f64], labels: &[bool], fdr: f64) -> Option<f64> {
    let p = labels.iter().filter(|l| **l).count();
    if p == 0 {
        return None;
    }
    let mut best: f64 = 0.0;
    for &threshold in scores {
        let mut tp = 0usize;
        let mut predicted = 0usize;
        for (s, l) in scores.iter().zip(labels) {
            if *s >= threshold {
                predicted += 1;
                if *l {
                    tp += 1;
                }
            }
        }
        if predicted > 0 {
            let precision = tp as f64 / predicted as f64;
            let recall = tp as f64 / p as f64;
            if precision >= 1.0 - fdr {
                best = best.max(recall);
            }
        }
    }
    Some(best)
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize, distinct: bool) -> (Vec<f64>, Vec<bool>) {
    let scores: Vec<f64> = if distinct {
        // spread scores so no two collide
        let mut s: Vec<f64> = (0..n).map(|i| i as f64 + uniform_in(rng, 0.0, 0.5)).collect();
        autodiff::rng::shuffle(rng, &mut s);
        s
    } else {
        // coarse grid forces plenty of ties
        (0..n).map(|_| (uniform_f64(rng) * 8.0).floor() / 8.0).collect()
    };
    let labels: Vec<bool> = (0..n).map(|_| uniform_f64(rng) < 0.4).collect();
    (scores, labels)
}

#[test]
fn auroc_matches_the_pair_counting_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let mut compared = 0;
    for trial in 0..200 {
        let n = 2 + (trial * 7) % 199;
        let (scores, labels) = random_instance(&mut rng, n, trial % 2 == 0);
        let fast = auroc(&scores, &labels);
        let slow = auroc_pair_oracle(&scores, &labels);
        match (fast, slow) {
            (Some(a), Some(b)) => {
                assert!((a - b).abs() < 1e-9, "trial {trial}: {a} vs {b}");
                compared += 1;
            }
            (None, None) => {}
            other => panic!("trial {trial}: defined-ness mismatch {other:?}"),
        }
    }
    assert!(compared > 150, "only {compared} defined instances");
}

#[test]
fn aupr_matches_the_rank_oracle_exactly_on_distinct_scores() {
    let mut rng = ChaCha8Rng::seed_from_u64(502);
    for trial in 0..200 {
        let n = 2 + (trial * 5) % 199;
        let (scores, labels) = random_instance(&mut rng, n, true);
        match (aupr(&scores, &labels), aupr_oracle(&scores, &labels)) {
            (Some(a), Some(b)) => assert_eq!(a, b, "trial {trial}"),
            (None, None) => {}
            other => panic!("trial {trial}: {other:?}"),
        }
    }
}

#[test]
fn recall_at_fdr_matches_threshold_enumeration_exactly_on_distinct_scores() {
    let mut rng = ChaCha8Rng::seed_from_u64(503);
    for trial in 0..200 {
        let n = 2 + (trial * 3) % 199;
        let (scores, labels) = random_instance(&mut rng, n, true);
        let fdr = [0.1, 0.25, 0.5, 0.75][trial % 4];
        match (
            recall_at_fdr(&scores, &labels, fdr),
            recall_at_fdr_oracle(&scores, &labels, fdr),
        ) {
            (Some(a), Some(b)) => assert_eq!(a, b, "trial {trial} fdr {fdr}"),
            (None, None) => {}
            other => panic!("trial {trial}: {other:?}"),
        }
    }
}

#[test]
fn auroc_is_invariant_under_monotone_transforms() {
    let mut rng = ChaCha8Rng::seed_from_u64(504);
    for _ in 0..50 {
        let (scores, labels) = random_instance(&mut rng, 60, true);
        let transformed: Vec<f64> = scores.iter().map(|s| (s / 10.0).exp()).collect();
        let a = auroc(&scores, &labels);
        let b = auroc(&transformed, &labels);
        match (a, b) {
            (Some(x), Some(y)) => assert!((x - y).abs() < 1e-12),
            (None, None) => {}
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn auroc_of_negated_scores_complements() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for _ in 0..50 {
        let (scores, labels) = random_instance(&mut rng, 40, true);
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        if let (Some(a), Some(b)) = (auroc(&scores, &labels), auroc(&negated, &labels)) {
            assert!((a + b - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn recall_never_rises_as_the_fdr_budget_shrinks() {
    let mut rng = ChaCha8Rng::seed_from_u64(506);
    for _ in 0..50 {
        let (scores, labels) = random_instance(&mut rng, 50, false);
        if labels.iter().all(|l| !l) {
            continue;
        }
        let budgets = [0.9, 0.7, 0.5, 0.3, 0.1];
        let recalls: Vec<f64> = budgets
            .iter()
            .map(|f| recall_at_fdr(&scores, &labels, *f).unwrap())
            .collect();
        for pair in recalls.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "{recalls:?}");
        }
    }
}

/// Simpson integration of the Student-t density: the heavy upper tail is
/// avoided by integrating the body `[0, t]` and using symmetry.
fn t_upper_tail_by_integration(t: f64, nu: f64) -> f64 {
    let ln_norm = ln_gamma_local((nu + 1.0) / 2.0) - ln_gamma_local(nu / 2.0)
        - 0.5 * (nu * std::f64::consts::PI).ln();
    let pdf = |x: f64| (ln_norm - (nu + 1.0) / 2.0 * (1.0 + x * x / nu).ln()).exp();
    let n = 1_000_000;
    let h = t / n as f64;
    let mut acc = pdf(0.0) + pdf(t);
    for i in 1..n {
        let x = i as f64 * h;
        acc += pdf(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 - acc * h / 3.0
}

fn ln_gamma_local(x: f64) -> f64 {
    // Stirling series with enough shifts for small arguments
    let mut x = x;
    let mut shift = 0.0f64;
    while x < 10.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    shift
        + (x - 0.5) * x.ln()
        - x
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv / 12.0 - inv * inv2 / 360.0 + inv * inv2 * inv2 / 1260.0
}

#[test]
fn t_tail_probability_matches_numerical_integration() {
    for (t, nu) in [(3.4641, 2.0), (1.0, 5.0), (2.5, 10.0), (0.3, 3.0)] {
        let closed = student_t_upper_tail(t, nu);
        let integrated = t_upper_tail_by_integration(t, nu);
        assert!(
            (closed - integrated).abs() < 1e-6,
            "t={t} nu={nu}: {closed} vs {integrated}"
        );
    }
    // the worked example: d = (1, 2, 3)
    let r = paired_t_test_one_tailed(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
    assert!((r.t - 3.4641).abs() < 1e-3);
    assert!((r.p - 0.0371).abs() < 1e-3);
}
