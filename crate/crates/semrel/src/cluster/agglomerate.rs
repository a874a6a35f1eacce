//! Exact agglomerative merging over a dense pairwise matrix.

use super::{canonicalize, condensed_index, Cluster, ClusterError, DistanceMatrix, Linkage};

/// Bottom-up agglomerative clustering with a threshold cut.
///
/// Repeatedly merges the pair of clusters with the minimal linkage
/// distance while that distance is below `threshold`, then returns the
/// resulting partition including singletons.
///
/// Cluster identity during merging: initial clusters carry ids `0..n` in
/// input order, and a merge keeps the smaller id. Ties on the merge
/// distance are broken by the lexicographically lowest
/// `(smaller id, larger id)` pair, which makes the procedure fully
/// deterministic.
#[allow(clippy::needless_range_loop)] // index loops pair several slot arrays
pub fn agglomerate(
    matrix: &DistanceMatrix,
    threshold: f64,
    linkage: Linkage,
) -> Result<Vec<Cluster>, ClusterError> {
    if !(threshold > 0.0 && threshold <= 2.0) {
        return Err(ClusterError::InvalidThreshold(threshold));
    }
    let n = matrix.len();
    if n < 2 {
        let groups = (0..n).map(|i| vec![i]).collect();
        return Ok(canonicalize(groups, matrix.terms()));
    }

    // Working cluster-to-cluster distances, updated in place by the
    // Lance-Williams recurrence as clusters merge into the smaller slot.
    let mut dist = matrix.values.clone();
    let get = |dist: &[f64], a: usize, b: usize| -> f64 {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        dist[condensed_index(n, a, b)]
    };
    let set = |dist: &mut [f64], a: usize, b: usize, v: f64| {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        dist[condensed_index(n, a, b)] = v;
    };

    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut groups: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();

    // Cached row minimum for each active slot i: the best (distance, j)
    // over active j > i, smallest j on ties. Merges can only raise true
    // row minima (every linkage here maps two old distances to a value no
    // smaller than their minimum), so a cached entry is a lower bound and
    // gets re-verified before it is allowed to trigger a merge.
    let recompute_row = |dist: &[f64], active: &[bool], i: usize| -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for j in i + 1..n {
            if !active[j] {
                continue;
            }
            let d = get(dist, i, j);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, j));
            }
        }
        best
    };

    let mut cand: Vec<Option<(f64, usize)>> =
        (0..n).map(|i| recompute_row(&dist, &active, i)).collect();
    let mut remaining = n;

    while remaining > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            if let Some((d, j)) = cand[i] {
                let better = match best {
                    None => true,
                    Some((bd, bi, bj)) => (d, i, j) < (bd, bi, bj),
                };
                if better {
                    best = Some((d, i, j));
                }
            }
        }
        let Some((d, i, j)) = best else { break };

        let fresh = recompute_row(&dist, &active, i);
        if fresh != cand[i] {
            cand[i] = fresh;
            continue;
        }
        if d >= threshold {
            break;
        }

        // Merge j into i (i < j by construction of the row candidates).
        for x in 0..n {
            if !active[x] || x == i || x == j {
                continue;
            }
            let dix = get(&dist, i, x);
            let djx = get(&dist, j, x);
            let merged = match linkage {
                Linkage::Average => {
                    (size[i] as f64 * dix + size[j] as f64 * djx) / (size[i] + size[j]) as f64
                }
                Linkage::Complete => dix.max(djx),
                Linkage::Single => dix.min(djx),
            };
            set(&mut dist, i, x, merged);
        }
        size[i] += size[j];
        active[j] = false;
        let moved = std::mem::take(&mut groups[j]);
        groups[i].extend(moved);
        remaining -= 1;
        cand[i] = recompute_row(&dist, &active, i);
    }

    let groups: Vec<Vec<usize>> = groups
        .into_iter()
        .zip(&active)
        .filter_map(|(g, &a)| a.then_some(g))
        .collect();
    Ok(canonicalize(groups, matrix.terms()))
}

#[cfg(test)]
mod tests {
    use super::super::{pairwise_distances, tests::tv};
    use super::*;

    #[test]
    fn tie_break_prefers_lowest_id_pair() {
        // Four copies of the same vector: every pairwise distance is 0.
        // The stated tie-break merges (0,1) first, then (0,2), then (0,3),
        // so any positive threshold yields one cluster in input order.
        let vectors = [
            tv("a", &[1.0, 0.0]),
            tv("b", &[1.0, 0.0]),
            tv("c", &[1.0, 0.0]),
            tv("d", &[1.0, 0.0]),
        ];
        let m = pairwise_distances(&vectors).unwrap();
        let clusters = agglomerate(&m, 0.1, Linkage::Average).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].members, vec!["a", "b", "c", "d"]);
    }

    #[test]
    fn linkage_criteria_differ_on_chained_points() {
        // Three points on an arc: a-b close, b-c close, a-c far. With a
        // threshold between the near and far distances, single linkage
        // chains all three while complete linkage cannot.
        let vectors = [
            tv("a", &[1.0, 0.0]),
            tv("b", &[0.92, 0.39]),
            tv("c", &[0.71, 0.71]),
        ];
        let m = pairwise_distances(&vectors).unwrap();
        let d_ab = m.get(0, 1);
        let d_ac = m.get(0, 2);
        assert!(d_ab < d_ac && m.get(1, 2) < d_ac);
        let cut = d_ac - 1e-6;

        let single = agglomerate(&m, cut, Linkage::Single).unwrap();
        assert_eq!(single.len(), 1);
        let complete = agglomerate(&m, cut, Linkage::Complete).unwrap();
        assert!(complete.len() > 1);
    }

    #[test]
    fn partition_covers_all_terms_exactly_once() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let n = rng.gen_range(2..12);
            let vectors: Vec<_> = (0..n)
                .map(|i| {
                    let v: Vec<f32> = (0..4).map(|_| rng.gen_range(-1.0..1.0f32)).collect();
                    tv(&format!("t{}", i), &v)
                })
                .collect();
            if vectors.iter().any(|t| t.vector.iter().all(|&x| x == 0.0)) {
                continue;
            }
            let m = pairwise_distances(&vectors).unwrap();
            let threshold = rng.gen_range(0.05..2.0);
            let clusters = agglomerate(&m, threshold, Linkage::Average).unwrap();
            let mut seen: Vec<&str> = clusters
                .iter()
                .flat_map(|c| c.members.iter().map(String::as_str))
                .collect();
            seen.sort_unstable();
            let mut expected: Vec<String> = (0..n).map(|i| format!("t{}", i)).collect();
            expected.sort_unstable();
            assert_eq!(seen, expected, "trial {}", trial);
        }
    }
}
