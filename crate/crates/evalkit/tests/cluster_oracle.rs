//! The incremental average-linkage implementation must reproduce a naive
//! from-scratch agglomerative oracle, and stay stable under row permutation.

use autodiff::rng::normal_f64;
use autodiff::Tensor;
use evalkit::cluster_prototypes;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cosine_distance(u: &[f64], v: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    1.0 - dot / (nu.sqrt().max(1e-12) * nv.sqrt().max(1e-12))
}

/// Naive agglomerative clustering that recomputes every cluster-pair
/// distance from scratch as the mean over all cross-pair leaf distances.
fn naive_average_linkage(rows: &[Vec<f64>]) -> Vec<(usize, usize, f64, usize)> {
    let n = rows.len();
    let mut leaf_dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            leaf_dist[i][j] = cosine_distance(&rows[i], &rows[j]);
        }
    }
    // clusters: (id, members)
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    let mut next_id = n;
    while clusters.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let (ida, ma) = &clusters[i];
                let (idb, mb) = &clusters[j];
                let mut total = 0.0;
                for a in ma {
                    for b in mb {
                        total += leaf_dist[*a][*b];
                    }
                }
                let d = total / (ma.len() * mb.len()) as f64;
                let (lo, hi) = (*ida.min(idb), *ida.max(idb));
                let better = match best {
                    None => true,
                    Some((bd, ba, bb)) => d < bd || (d == bd && (lo, hi) < (ba, bb)),
                };
                if better {
                    best = Some((d, lo, hi));
                }
            }
        }
        let (d, lo, hi) = best.unwrap();
        let pos_a = clusters.iter().position(|(id, _)| *id == lo).unwrap();
        let pos_b = clusters.iter().position(|(id, _)| *id == hi).unwrap();
        let mut merged = clusters[pos_a].1.clone();
        merged.extend(clusters[pos_b].1.clone());
        clusters.retain(|(id, _)| *id != lo && *id != hi);
        clusters.push((next_id, merged));
        merges.push((lo, hi, d, next_id));
        next_id += 1;
    }
    merges
}

fn random_bank(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| normal_f64(rng)).collect())
        .collect()
}

#[test]
fn merge_sequence_matches_the_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(601);
    for trial in 0..20 {
        let rows = random_bank(&mut rng, 6, 4);
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let bank = Tensor::new(vec![6, 4], flat, false).unwrap();
        let dendrogram = cluster_prototypes(&bank).unwrap();
        let oracle = naive_average_linkage(&rows);
        assert_eq!(dendrogram.merges.len(), oracle.len());
        for (m, (a, b, h, id)) in dendrogram.merges.iter().zip(&oracle) {
            assert_eq!((m.a, m.b, m.id), (*a, *b, *id), "trial {trial}");
            // incremental and from-scratch averages agree up to rounding
            assert!((m.height - h).abs() < 1e-9, "trial {trial}: {} vs {h}", m.height);
        }
    }
}

#[test]
fn permuting_rows_preserves_the_height_multiset() {
    let mut rng = ChaCha8Rng::seed_from_u64(602);
    let rows = random_bank(&mut rng, 7, 5);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let bank = Tensor::new(vec![7, 5], flat, false).unwrap();
    let base = cluster_prototypes(&bank).unwrap();

    let perm = [3usize, 0, 6, 1, 5, 2, 4];
    let permuted_flat: Vec<f64> = perm.iter().flat_map(|i| rows[*i].clone()).collect();
    let permuted = Tensor::new(vec![7, 5], permuted_flat, false).unwrap();
    let shuffled = cluster_prototypes(&permuted).unwrap();

    let mut h1: Vec<f64> = base.merges.iter().map(|m| m.height).collect();
    let mut h2: Vec<f64> = shuffled.merges.iter().map(|m| m.height).collect();
    h1.sort_by(|a, b| a.partial_cmp(b).unwrap());
    h2.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, b) in h1.iter().zip(&h2) {
        assert!((a - b).abs() < 1e-9);
    }
}
