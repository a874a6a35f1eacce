//! Semantic clustering: pairwise cosine distances and agglomerative
//! merging with a distance-threshold cut.
//!
//! Two compute strategies sit behind one entry point,
//! [`cluster_term_vectors`]: a dense pairwise matrix for inputs up to a
//! configurable term-count cap, and bounded-memory paths above it (a
//! nearest-neighbor chain for average linkage, a minimum spanning tree for
//! single linkage). Both produce the same flat partition on inputs with
//! distinct merge distances.

mod agglomerate;
mod chain;

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{cosine_distance, TermVector};

pub use agglomerate::agglomerate;
pub use chain::{mst_partition, nnchain_partition};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("need at least two vectors to cluster, got {0}")]
    TooFewVectors(usize),
    #[error("vector for term {term:?} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        term: String,
        got: usize,
        expected: usize,
    },
    #[error("vector for term {0:?} has zero norm")]
    ZeroNorm(String),
    #[error("threshold {0} out of range: must be in (0, 2]")]
    InvalidThreshold(f64),
    #[error(
        "{n} terms exceed the dense-matrix cap of {cap} and complete linkage \
         has no bounded-memory path; raise the cap or use average/single linkage"
    )]
    DenseCapExceeded { n: usize, cap: usize },
}

#[derive(Debug, Error)]
pub enum ClusterIoError {
    #[error("line {line}: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Linkage criterion: how the distance between two clusters is derived
/// from their members' pairwise distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Average,
    Complete,
    Single,
}

impl std::str::FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Linkage, String> {
        match s {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            other => Err(format!(
                "unknown linkage {:?}: expected average, complete or single",
                other
            )),
        }
    }
}

/// Symmetric pairwise distance matrix, stored condensed (upper triangle).
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    /// Row-major upper triangle, `n * (n-1) / 2` entries.
    values: Vec<f64>,
    terms: Vec<String>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Distance between observations `i` and `j`; zero on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.values[condensed_index(self.n, i, j)]
    }
}

fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// One flat cluster: an id plus its member terms in input order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: u64,
    pub members: Vec<String>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn validate_vectors(vectors: &[TermVector]) -> Result<usize, ClusterError> {
    if vectors.len() < 2 {
        return Err(ClusterError::TooFewVectors(vectors.len()));
    }
    let dim = vectors[0].vector.len();
    for tv in vectors {
        if tv.vector.len() != dim {
            return Err(ClusterError::DimensionMismatch {
                term: tv.term.clone(),
                got: tv.vector.len(),
                expected: dim,
            });
        }
        if tv.vector.iter().all(|&v| v == 0.0) {
            return Err(ClusterError::ZeroNorm(tv.term.clone()));
        }
    }
    Ok(dim)
}

/// Compute the full pairwise cosine-distance matrix. Rows are computed in
/// parallel; every entry is an independent function of its two inputs, so
/// the result does not depend on the worker count.
pub fn pairwise_distances(vectors: &[TermVector]) -> Result<DistanceMatrix, ClusterError> {
    validate_vectors(vectors)?;
    let n = vectors.len();
    let rows: Vec<Vec<f64>> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    cosine_distance(&vectors[i].vector, &vectors[j].vector)
                        .expect("validated vectors")
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(n * (n - 1) / 2);
    for row in rows {
        values.extend(row);
    }
    Ok(DistanceMatrix {
        n,
        values,
        terms: vectors.iter().map(|tv| tv.term.clone()).collect(),
    })
}

/// Turn a partition over input indices into canonical clusters: members in
/// input order, clusters ordered by their first member, ids reassigned
/// sequentially. Input order is what downstream prompt rendering sees, so
/// canonical form keeps every compute path byte-compatible.
fn canonicalize(mut groups: Vec<Vec<usize>>, terms: &[String]) -> Vec<Cluster> {
    for group in &mut groups {
        group.sort_unstable();
    }
    groups.retain(|g| !g.is_empty());
    groups.sort_by_key(|g| g[0]);
    groups
        .into_iter()
        .enumerate()
        .map(|(id, group)| Cluster {
            id: id as u64,
            members: group.iter().map(|&i| terms[i].clone()).collect(),
        })
        .collect()
}

/// Clustering parameters for the high-level entry point.
#[derive(Debug, Clone)]
pub struct ClusterParams {
    pub threshold: f64,
    pub linkage: Linkage,
    /// Largest term count for which the dense pairwise matrix is built.
    pub dense_matrix_cap: usize,
}

impl Default for ClusterParams {
    fn default() -> ClusterParams {
        ClusterParams {
            threshold: 0.4,
            linkage: Linkage::Average,
            dense_matrix_cap: 8_000,
        }
    }
}

/// Cluster term vectors with a threshold cut, choosing the compute
/// strategy by input size.
pub fn cluster_term_vectors(
    vectors: &[TermVector],
    params: &ClusterParams,
) -> Result<Vec<Cluster>, ClusterError> {
    if !(params.threshold > 0.0 && params.threshold <= 2.0) {
        return Err(ClusterError::InvalidThreshold(params.threshold));
    }
    if vectors.len() <= params.dense_matrix_cap {
        let matrix = pairwise_distances(vectors)?;
        return agglomerate(&matrix, params.threshold, params.linkage);
    }
    match params.linkage {
        Linkage::Average => nnchain_partition(vectors, params.threshold),
        Linkage::Single => mst_partition(vectors, params.threshold),
        Linkage::Complete => Err(ClusterError::DenseCapExceeded {
            n: vectors.len(),
            cap: params.dense_matrix_cap,
        }),
    }
}

/// Counters reported by [`filter_clusters`].
#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct FilterStats {
    pub dropped_clusters: usize,
    pub dropped_terms: usize,
    pub split_clusters: usize,
    pub retained_clusters: usize,
    pub retained_terms: usize,
}

/// Drop clusters below `min_size` and split clusters above
/// `max_prompt_size` into contiguous chunks, preserving member order.
/// Surviving clusters are re-numbered sequentially.
pub fn filter_clusters(
    clusters: &[Cluster],
    min_size: usize,
    max_prompt_size: usize,
) -> (Vec<Cluster>, FilterStats) {
    debug_assert!(min_size >= 2, "min_size below 2 admits singleton clusters");
    let mut out = Vec::new();
    let mut stats = FilterStats::default();
    for cluster in clusters {
        if cluster.len() < min_size {
            stats.dropped_clusters += 1;
            stats.dropped_terms += cluster.len();
            continue;
        }
        if cluster.len() > max_prompt_size {
            stats.split_clusters += 1;
            for chunk in cluster.members.chunks(max_prompt_size) {
                out.push(chunk.to_vec());
            }
        } else {
            out.push(cluster.members.clone());
        }
    }
    let clusters: Vec<Cluster> = out
        .into_iter()
        .enumerate()
        .map(|(id, members)| Cluster {
            id: id as u64,
            members,
        })
        .collect();
    stats.retained_clusters = clusters.len();
    stats.retained_terms = clusters.iter().map(Cluster::len).sum();
    (clusters, stats)
}

/// Write clusters as JSONL, one `{"id": .., "members": [..]}` per line.
pub fn write_clusters_file<W: Write>(clusters: &[Cluster], mut writer: W) -> std::io::Result<()> {
    for cluster in clusters {
        serde_json::to_writer(&mut writer, cluster)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_clusters_file<R: BufRead>(reader: R) -> Result<Vec<Cluster>, ClusterIoError> {
    let mut clusters = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cluster: Cluster =
            serde_json::from_str(&line).map_err(|source| ClusterIoError::Malformed {
                line: idx + 1,
                source,
            })?;
        clusters.push(cluster);
    }
    Ok(clusters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Provenance;

    pub(crate) fn tv(term: &str, vector: &[f32]) -> TermVector {
        TermVector {
            term: term.to_string(),
            vector: vector.to_vec(),
            provenance: Provenance::Direct,
        }
    }

    fn members(clusters: &[Cluster]) -> Vec<Vec<&str>> {
        clusters
            .iter()
            .map(|c| c.members.iter().map(String::as_str).collect())
            .collect()
    }

    #[test]
    fn pairwise_orthogonal_pair() {
        let m = pairwise_distances(&[tv("a", &[1.0, 0.0]), tv("b", &[0.0, 1.0])]).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(1, 0), 1.0);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn pairwise_duplicates_are_zero() {
        let m = pairwise_distances(&[tv("a", &[1.0, 0.0]), tv("b", &[1.0, 0.0])]).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn pairwise_matches_scalar_loop_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let vectors: Vec<TermVector> = (0..5)
            .map(|i| {
                let v: Vec<f32> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
                tv(&format!("t{}", i), &v)
            })
            .collect();
        let m = pairwise_distances(&vectors).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                // Scalar double loop, independent of the kernel.
                let (u, v) = (&vectors[i].vector, &vectors[j].vector);
                let mut dot = 0f64;
                let mut nu = 0f64;
                let mut nv = 0f64;
                for k in 0..u.len() {
                    dot += u[k] as f64 * v[k] as f64;
                    nu += u[k] as f64 * u[k] as f64;
                    nv += v[k] as f64 * v[k] as f64;
                }
                let expected = if i == j {
                    0.0
                } else {
                    1.0 - dot / (nu.sqrt() * nv.sqrt())
                };
                assert!((m.get(i, j) - expected).abs() < 1e-9, "({}, {})", i, j);
            }
        }
    }

    #[test]
    fn pairwise_rejects_zero_norm_naming_term() {
        let err = pairwise_distances(&[tv("ok", &[1.0]), tv("bad", &[0.0])]).unwrap_err();
        assert!(matches!(err, ClusterError::ZeroNorm(term) if term == "bad"));
    }

    #[test]
    fn pairwise_rejects_dimension_mismatch_naming_term() {
        let err = pairwise_distances(&[tv("ok", &[1.0, 0.0]), tv("short", &[1.0])]).unwrap_err();
        assert!(matches!(err, ClusterError::DimensionMismatch { term, .. } if term == "short"));
    }

    #[test]
    fn threshold_cut_separates_far_point() {
        // Near-parallel pair plus an orthogonal point: d(0,1) ≈ 0.005,
        // d(·,2) ≈ 1, so a 0.4 cut yields {{0,1},{2}}.
        let vectors = [
            tv("a", &[1.0, 0.0]),
            tv("b", &[0.99, 0.14]),
            tv("c", &[0.0, 1.0]),
        ];
        let m = pairwise_distances(&vectors).unwrap();
        let clusters = agglomerate(&m, 0.4, Linkage::Average).unwrap();
        assert_eq!(members(&clusters), vec![vec!["a", "b"], vec!["c"]]);
    }

    #[test]
    fn tiny_threshold_keeps_singletons() {
        let vectors = [
            tv("a", &[1.0, 0.0]),
            tv("b", &[0.9, 0.4]),
            tv("c", &[0.0, 1.0]),
        ];
        let m = pairwise_distances(&vectors).unwrap();
        let clusters = agglomerate(&m, 1e-9, Linkage::Average).unwrap();
        assert_eq!(clusters.len(), 3);
    }

    #[test]
    fn full_threshold_merges_everything() {
        let vectors = [
            tv("a", &[1.0, 0.0]),
            tv("b", &[0.9, 0.4]),
            tv("c", &[0.0, 1.0]),
        ];
        let m = pairwise_distances(&vectors).unwrap();
        let clusters = agglomerate(&m, 2.0, Linkage::Average).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].members, vec!["a", "b", "c"]);
    }

    #[test]
    fn invalid_threshold_is_config_error() {
        let m = pairwise_distances(&[tv("a", &[1.0, 0.0]), tv("b", &[0.0, 1.0])]).unwrap();
        assert!(matches!(
            agglomerate(&m, 0.0, Linkage::Average),
            Err(ClusterError::InvalidThreshold(_))
        ));
        assert!(matches!(
            agglomerate(&m, 2.5, Linkage::Average),
            Err(ClusterError::InvalidThreshold(_))
        ));
    }

    #[test]
    fn filter_drops_small_and_splits_large() {
        let clusters = vec![
            Cluster {
                id: 0,
                members: vec!["a".into()],
            },
            Cluster {
                id: 1,
                members: vec!["b".into(), "c".into()],
            },
        ];
        let (kept, stats) = filter_clusters(&clusters, 2, 50);
        assert_eq!(members(&kept), vec![vec!["b", "c"]]);
        assert_eq!(stats.dropped_clusters, 1);
        assert_eq!(stats.dropped_terms, 1);

        let big = Cluster {
            id: 0,
            members: (0..120).map(|i| format!("m{:03}", i)).collect(),
        };
        let (kept, stats) = filter_clusters(std::slice::from_ref(&big), 2, 50);
        assert_eq!(stats.split_clusters, 1);
        let sizes: Vec<usize> = kept.iter().map(Cluster::len).collect();
        assert_eq!(sizes, vec![50, 50, 20]);
        // Chunking preserves member order.
        let rejoined: Vec<String> = kept.iter().flat_map(|c| c.members.clone()).collect();
        assert_eq!(rejoined, big.members);
        assert_eq!(kept.iter().map(|c| c.id).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn filter_empty_input_is_identity() {
        let (kept, stats) = filter_clusters(&[], 2, 50);
        assert!(kept.is_empty());
        assert_eq!(stats, FilterStats::default());
    }

    #[test]
    fn clusters_file_round_trips() {
        let clusters = vec![
            Cluster {
                id: 0,
                members: vec!["sözleşme".into(), "mukavele".into()],
            },
            Cluster {
                id: 1,
                members: vec!["banka".into(), "sigorta".into(), "finans".into()],
            },
        ];
        let mut buf = Vec::new();
        write_clusters_file(&clusters, &mut buf).unwrap();
        let back = read_clusters_file(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, clusters);
    }

    #[test]
    fn clusters_file_read_reports_line() {
        let err = read_clusters_file(std::io::Cursor::new(
            "{\"id\":0,\"members\":[\"a\"]}\nnope\n",
        ))
        .unwrap_err();
        assert!(matches!(err, ClusterIoError::Malformed { line: 2, .. }));
    }
}
