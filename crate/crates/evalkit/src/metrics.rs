//! Threshold-free ranking metrics. Labels with a single class are undefined
//! and return `None`, to be excluded from aggregation.

/// Area under the ROC curve via the rank-sum (Mann-Whitney) statistic: the
/// probability a random positive outranks a random negative, with ties
/// counting one half.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|a, b| scores[*a].partial_cmp(&scores[*b]).expect("finite scores"));

    // average ranks across tied scores (1-based)
    let mut rank_sum_positive = 0.0f64;
    let mut at = 0;
    while at < order.len() {
        let mut end = at + 1;
        while end < order.len() && scores[order[end]] == scores[order[at]] {
            end += 1;
        }
        let avg_rank = (at + 1 + end) as f64 / 2.0;
        for &idx in &order[at..end] {
            if labels[idx] {
                rank_sum_positive += avg_rank;
            }
        }
        at = end;
    }
    let p = positives as f64;
    let n = negatives as f64;
    let u = rank_sum_positive - p * (p + 1.0) / 2.0;
    Some(u / (p * n))
}

/// Area under the precision-recall curve as average precision: the mean of
/// precision-at-rank over positives, ranks taken in score-descending order
/// with ties kept in stable input order.
pub fn aupr(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let positives = labels.iter().filter(|l| **l).count();
    if positives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|a, b| scores[*b].partial_cmp(&scores[*a]).expect("finite scores"));

    let mut true_positives = 0usize;
    let mut precision_sum = 0.0f64;
    for (rank0, &idx) in order.iter().enumerate() {
        if labels[idx] {
            true_positives += 1;
            precision_sum += true_positives as f64 / (rank0 + 1) as f64;
        }
    }
    Some(precision_sum / positives as f64)
}

/// Maximum recall over all observed-score thresholds whose precision is at
/// least `1 - fdr`; zero when no threshold qualifies. A threshold predicts
/// positive for every score greater than or equal to it.
pub fn recall_at_fdr(scores: &[f64], labels: &[bool], fdr: f64) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let positives = labels.iter().filter(|l| **l).count();
    if positives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|a, b| scores[*b].partial_cmp(&scores[*a]).expect("finite scores"));

    let precision_floor = 1.0 - fdr;
    let mut best_recall = 0.0f64;
    let mut true_positives = 0usize;
    let mut at = 0;
    while at < order.len() {
        // advance over the whole tied-score group: a threshold includes every
        // item scoring at least the group's score
        let mut end = at + 1;
        while end < order.len() && scores[order[end]] == scores[order[at]] {
            end += 1;
        }
        for &idx in &order[at..end] {
            if labels[idx] {
                true_positives += 1;
            }
        }
        let precision = true_positives as f64 / end as f64;
        let recall = true_positives as f64 / positives as f64;
        if precision >= precision_floor && recall > best_recall {
            best_recall = recall;
        }
        at = end;
    }
    Some(best_recall)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auroc_ranking_extremes() {
        assert_eq!(auroc(&[0.9, 0.1], &[true, false]), Some(1.0));
        assert_eq!(auroc(&[0.1, 0.9], &[true, false]), Some(0.0));
        assert_eq!(auroc(&[0.5, 0.5], &[true, false]), Some(0.5));
    }

    #[test]
    fn auroc_single_class_is_undefined() {
        assert_eq!(auroc(&[0.4, 0.6], &[true, true]), None);
        assert_eq!(auroc(&[0.4, 0.6], &[false, false]), None);
    }

    #[test]
    fn aupr_examples() {
        assert_eq!(aupr(&[0.2, 0.9], &[true, true]), Some(1.0));
        let v = aupr(&[0.9, 0.8, 0.7], &[true, false, true]).unwrap();
        assert!((v - 5.0 / 6.0).abs() < 1e-12);
        // perfect ranking of any mix
        assert_eq!(aupr(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]), Some(1.0));
        assert_eq!(aupr(&[0.9], &[false]), None);
    }

    #[test]
    fn recall_at_fdr_examples() {
        let v = recall_at_fdr(&[0.9, 0.8, 0.7], &[true, false, true], 0.5).unwrap();
        assert_eq!(v, 1.0);
        // the single positive ranks last: only the full set reaches it, at
        // precision exactly one half
        let v = recall_at_fdr(&[0.9, 0.1], &[false, true], 0.5).unwrap();
        assert_eq!(v, 1.0);
        let v = recall_at_fdr(&[0.9, 0.1], &[true, false], 0.5).unwrap();
        assert_eq!(v, 1.0);
        // nothing qualifies at a strict floor
        let v = recall_at_fdr(&[0.9, 0.8], &[false, true], 0.1).unwrap();
        assert_eq!(v, 0.0);
    }
}
