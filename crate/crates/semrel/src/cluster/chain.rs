//! Bounded-memory clustering paths for inputs too large for the dense
//! pairwise matrix.
//!
//! Average linkage uses a nearest-neighbor chain over per-cluster sums of
//! unit-normalized vectors: the mean pairwise cosine distance between two
//! clusters equals `1 − (S_a · S_b) / (|a||b|)` where `S` is the sum of
//! unit member vectors, so cluster distances are computable in O(D)
//! without any stored matrix. Single linkage uses a Prim spanning tree
//! with the same O(n·D) footprint. Both run in O(n²·D) time and produce
//! the same flat partition as the dense path whenever merge distances are
//! distinct (real embedding data; exact ties there are measure-zero).

use rayon::prelude::*;

use super::{canonicalize, Cluster, ClusterError};
use crate::embedding::TermVector;

fn unit_vectors(vectors: &[TermVector]) -> Result<Vec<Vec<f64>>, ClusterError> {
    if vectors.len() < 2 {
        return Err(ClusterError::TooFewVectors(vectors.len()));
    }
    let dim = vectors[0].vector.len();
    let mut out = Vec::with_capacity(vectors.len());
    for tv in vectors {
        if tv.vector.len() != dim {
            return Err(ClusterError::DimensionMismatch {
                term: tv.term.clone(),
                got: tv.vector.len(),
                expected: dim,
            });
        }
        let norm: f64 = tv.vector.iter().map(|&v| f64::from(v) * f64::from(v)).sum();
        if norm == 0.0 {
            return Err(ClusterError::ZeroNorm(tv.term.clone()));
        }
        let norm = norm.sqrt();
        out.push(tv.vector.iter().map(|&v| f64::from(v) / norm).collect());
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_threshold(threshold: f64) -> Result<(), ClusterError> {
    if threshold > 0.0 && threshold <= 2.0 {
        Ok(())
    } else {
        Err(ClusterError::InvalidThreshold(threshold))
    }
}

/// Replay recorded merge steps below the threshold into a flat partition
/// over original slots. Steps are sorted by distance first, which is the
/// dendrogram threshold cut.
fn cut_steps(n: usize, mut steps: Vec<(usize, usize, f64)>, threshold: f64) -> Vec<Vec<usize>> {
    steps.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (a, b, d) in steps {
        if d >= threshold {
            break;
        }
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi] = lo;
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let root = find(&mut parent, i);
        groups[root].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Average-linkage clustering via the nearest-neighbor-chain algorithm.
/// Peak memory is O(n·D); no pairwise matrix is materialized.
pub fn nnchain_partition(
    vectors: &[TermVector],
    threshold: f64,
) -> Result<Vec<Cluster>, ClusterError> {
    check_threshold(threshold)?;
    let units = unit_vectors(vectors)?;
    let n = units.len();

    // Per-cluster state: sum of unit member vectors and member count.
    // A merge folds the larger slot into the smaller one.
    let mut sums: Vec<Vec<f64>> = units;
    let mut sizes: Vec<usize> = vec![1; n];
    let mut active: Vec<bool> = vec![true; n];
    let mut steps: Vec<(usize, usize, f64)> = Vec::with_capacity(n - 1);
    let mut chain: Vec<usize> = Vec::new();
    let mut remaining = n;

    let cluster_distance = |sums: &[Vec<f64>], sizes: &[usize], a: usize, b: usize| -> f64 {
        1.0 - dot(&sums[a], &sums[b]) / (sizes[a] * sizes[b]) as f64
    };

    while remaining > 1 {
        if chain.is_empty() {
            let start = active
                .iter()
                .position(|&a| a)
                .expect("remaining > 1 implies an active slot");
            chain.push(start);
        }
        loop {
            let tip = *chain.last().unwrap();
            let prev = if chain.len() >= 2 {
                Some(chain[chain.len() - 2])
            } else {
                None
            };
            // Nearest active neighbor of the chain tip. Ties prefer the
            // chain predecessor (guarantees termination), then the lowest
            // slot id. The key tuple makes the parallel reduction
            // order-independent.
            let nearest = (0..n)
                .into_par_iter()
                .filter(|&j| active[j] && j != tip)
                .map(|j| {
                    let d = cluster_distance(&sums, &sizes, tip, j);
                    ((d, prev != Some(j), j), j)
                })
                .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"))
                .map(|(_, j)| j)
                .expect("remaining > 1 implies a neighbor");

            if Some(nearest) == prev {
                let d = cluster_distance(&sums, &sizes, tip, nearest);
                let (lo, hi) = if tip < nearest {
                    (tip, nearest)
                } else {
                    (nearest, tip)
                };
                let moved = std::mem::take(&mut sums[hi]);
                for (acc, v) in sums[lo].iter_mut().zip(moved) {
                    *acc += v;
                }
                sizes[lo] += sizes[hi];
                active[hi] = false;
                steps.push((lo, hi, d));
                chain.pop();
                chain.pop();
                remaining -= 1;
                break;
            }
            chain.push(nearest);
        }
    }

    let terms: Vec<String> = vectors.iter().map(|tv| tv.term.clone()).collect();
    Ok(canonicalize(cut_steps(n, steps, threshold), &terms))
}

/// Single-linkage clustering via Prim's minimum spanning tree. The flat
/// cut at `threshold` equals the connected components of the graph whose
/// edges are pairwise distances below the threshold, so this path is
/// exact even under ties.
pub fn mst_partition(vectors: &[TermVector], threshold: f64) -> Result<Vec<Cluster>, ClusterError> {
    check_threshold(threshold)?;
    let units = unit_vectors(vectors)?;
    let n = units.len();

    let mut in_tree = vec![false; n];
    let mut best_dist = vec![f64::INFINITY; n];
    let mut best_from = vec![0usize; n];
    let mut steps: Vec<(usize, usize, f64)> = Vec::with_capacity(n - 1);

    let mut current = 0usize;
    in_tree[0] = true;
    for _ in 1..n {
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = 1.0 - dot(&units[current], &units[j]);
            if d < best_dist[j] {
                best_dist[j] = d;
                best_from[j] = current;
            }
        }
        let mut next = None;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let better = match next {
                None => true,
                Some(k) => (best_dist[j], j) < (best_dist[k], k),
            };
            if better {
                next = Some(j);
            }
        }
        let next = next.expect("a vertex remains outside the tree");
        steps.push((best_from[next], next, best_dist[next]));
        in_tree[next] = true;
        current = next;
    }

    let terms: Vec<String> = vectors.iter().map(|tv| tv.term.clone()).collect();
    Ok(canonicalize(cut_steps(n, steps, threshold), &terms))
}
