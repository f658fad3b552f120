//! Agglomerative clustering of prototype vectors: cosine distance, average
//! linkage, deterministic lexicographic tie-breaks, and a k-cluster cut.

use std::collections::HashMap;

use autodiff::{Element, Tensor};

use crate::error::EvalError;

/// One merge step: clusters `a` and `b` (leaf ids below the leaf count,
/// merged ids above) join at `height` into cluster `id`.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub id: usize,
}

/// Stepwise dendrogram over `leaves` prototypes: exactly `leaves - 1` merges
/// with non-decreasing heights under average linkage.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Serializes as one `a<TAB>b<TAB>height<TAB>new_id` line per merge.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for m in &self.merges {
            out.push_str(&format!("{}\t{}\t{:.6}\t{}\n", m.a, m.b, m.height, m.id));
        }
        out
    }

    /// Cuts the tree to `k` clusters and maps every leaf to a cluster index
    /// in `0..k`, numbered by each cluster's smallest leaf.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>, EvalError> {
        if k == 0 || k > self.leaves {
            return Err(EvalError::Input(format!(
                "cannot cut {} leaves into {k} clusters",
                self.leaves
            )));
        }
        let mut parent: Vec<usize> = (0..self.leaves + self.merges.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for merge in &self.merges[..self.leaves - k] {
            let ra = find(&mut parent, merge.a);
            let rb = find(&mut parent, merge.b);
            parent[ra] = merge.id;
            parent[rb] = merge.id;
        }
        // group leaves by root, then number clusters by smallest member
        let mut by_root: HashMap<usize, Vec<usize>> = HashMap::new();
        for leaf in 0..self.leaves {
            by_root.entry(find(&mut parent, leaf)).or_default().push(leaf);
        }
        let mut clusters: Vec<Vec<usize>> = by_root.into_values().collect();
        clusters.sort_by_key(|members| members[0]);
        let mut map = vec![0usize; self.leaves];
        for (index, members) in clusters.iter().enumerate() {
            for leaf in members {
                map[*leaf] = index;
            }
        }
        Ok(map)
    }
}

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

/// Average-linkage agglomerative clustering on `1 - cosine` distances.
/// Distance ties break toward the lexicographically smallest id pair.
pub fn cluster_prototypes<F: Element>(bank: &Tensor<F>) -> Result<Dendrogram, EvalError> {
    let shape = bank.shape();
    if shape.len() != 2 {
        return Err(EvalError::Input(format!("prototype bank must be a matrix, got {shape:?}")));
    }
    let (rows, cols) = (shape[0], shape[1]);
    if rows < 2 {
        return Err(EvalError::Input("clustering needs at least two prototypes".into()));
    }
    let values: Vec<f64> = bank.values().iter().map(|v| v.to_f64_c()).collect();
    let row = |i: usize| &values[i * cols..(i + 1) * cols];

    // active cluster ids with sizes; pairwise distances keyed (low, high)
    let mut active: Vec<usize> = (0..rows).collect();
    let mut size: HashMap<usize, f64> = active.iter().map(|i| (*i, 1.0)).collect();
    let mut dist: HashMap<(usize, usize), f64> = HashMap::new();
    for i in 0..rows {
        for j in i + 1..rows {
            dist.insert((i, j), cosine_distance(row(i), row(j)));
        }
    }

    let mut merges = Vec::with_capacity(rows - 1);
    let mut next_id = rows;
    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let key = (a.min(b), a.max(b));
                let d = dist[&key];
                let better = match best {
                    None => true,
                    Some((bd, ba, bb)) => d < bd || (d == bd && (key.0, key.1) < (ba, bb)),
                };
                if better {
                    best = Some((d, key.0, key.1));
                }
            }
        }
        let (height, a, b) = best.expect("at least one active pair");

        // average linkage over the two merged member counts
        let (sa, sb) = (size[&a], size[&b]);
        let merged_size = sa + sb;
        let mut new_dists: Vec<(usize, f64)> = Vec::new();
        for &other in &active {
            if other == a || other == b {
                continue;
            }
            let da = dist[&(a.min(other), a.max(other))];
            let db = dist[&(b.min(other), b.max(other))];
            new_dists.push((other, (sa * da + sb * db) / merged_size));
        }
        active.retain(|c| *c != a && *c != b);
        for &other in &active {
            dist.remove(&(a.min(other), a.max(other)));
            dist.remove(&(b.min(other), b.max(other)));
        }
        dist.remove(&(a, b));
        for (other, d) in new_dists {
            dist.insert((other.min(next_id), other.max(next_id)), d);
        }
        size.insert(next_id, merged_size);
        active.push(next_id);
        merges.push(Merge {
            a,
            b,
            height,
            id: next_id,
        });
        next_id += 1;
    }
    Ok(Dendrogram {
        leaves: rows,
        merges,
    })
}

/// Fraction of planted co-binding pairs whose members share a cluster in the
/// given label-to-cluster map. Defined as 1 when no group has a pair.
pub fn pair_recovery_score(cluster_map: &[usize], planted_groups: &[Vec<usize>]) -> f64 {
    let mut pairs = 0usize;
    let mut recovered = 0usize;
    for group in planted_groups {
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                pairs += 1;
                if cluster_map[*a] == cluster_map[*b] {
                    recovered += 1;
                }
            }
        }
    }
    if pairs == 0 {
        1.0
    } else {
        recovered as f64 / pairs as f64
    }
}
