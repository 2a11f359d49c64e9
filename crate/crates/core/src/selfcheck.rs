//! Randomized equivalence suites pitting the streaming engine against the
//! brute-force references: incremental cliques vs batch enumeration, the
//! streamed simplex multiset vs batch construction, and interleaved
//! persistence vs full-matrix reduction. All randomness is seeded; a failure
//! carries a reproducible counterexample dump.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cliques::{CliqueRegistry, RetentionPolicy};
use crate::oracle::{barcode_bruteforce, bron_kerbosch, rips_batch, DenseGraph};
use crate::points::{PointCloud, PointMetric};
use crate::reduction::PersistenceState;
use crate::simplex::{Edge, Interval, SimplexEntry, VertexId};

/// Outcome of one suite: trials run, and the first counterexample if any.
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub trials: u64,
    pub failure: Option<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Runs all three suites with the same seed.
pub fn run_all(seed: u64, trials: u64) -> Vec<SuiteResult> {
    vec![
        clique_suite(seed, trials, RetentionPolicy::SubsetOfNew),
        stream_suite(seed, trials),
        barcode_suite(seed, trials),
    ]
}

/// Random graphs (n <= 12), random edge permutation, every prefix: the
/// incremental registry's clique set must equal batch enumeration on the
/// prefix graph.
pub fn clique_suite(seed: u64, trials: u64, policy: RetentionPolicy) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failure = None;
    'trials: for trial in 0..trials {
        let n = rng.random_range(2..=12u32);
        let density: f64 = rng.random_range(0.2..0.9);
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.random_bool(density) {
                    edges.push((a, b));
                }
            }
        }
        edges.shuffle(&mut rng);

        let mut registry = match CliqueRegistry::new(n, 8) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(format!("trial {trial}: registry init failed: {e}"));
                break;
            }
        };
        let mut graph = DenseGraph::new(n as usize);
        for (step, &(a, b)) in edges.iter().enumerate() {
            let edge = Edge::new(VertexId(a), VertexId(b), step as f64);
            if let Err(e) = registry.process_edge_with(&edge, policy) {
                failure = Some(format!(
                    "trial {trial}, edge {step} ({a},{b}): process_edge failed: {e}\n\
                     n={n} edges={edges:?}"
                ));
                break 'trials;
            }
            graph.add_edge(a as usize, b as usize);
            let expected = bron_kerbosch(&graph);
            let got = registry.clique_set();
            if got != expected {
                failure = Some(format!(
                    "trial {trial}: clique sets diverge after edge {step} ({a},{b})\n\
                     n={n} edge order={edges:?}\n\
                     incremental={got:?}\nbatch      ={expected:?}"
                ));
                break 'trials;
            }
        }
    }
    SuiteResult {
        name: "clique",
        trials,
        failure,
    }
}

/// Generates a cloud and feeds its distance-sorted edges through the
/// registry; used by the stream and barcode suites and by tests.
pub fn streamed_simplices(
    cloud: &PointCloud,
    metric: PointMetric,
    epsilon: f64,
    max_dim: usize,
) -> Result<Vec<SimplexEntry>, String> {
    let n = cloud.point_count();
    let mut edges: Vec<Edge> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = metric.distance(cloud.point(i), cloud.point(j));
            if d <= epsilon {
                edges.push(Edge::new(VertexId(i as u32), VertexId(j as u32), d));
            }
        }
    }
    edges.sort_unstable();

    let mut registry =
        CliqueRegistry::new(n as u32, max_dim).map_err(|e| e.to_string())?;
    let mut out: Vec<SimplexEntry> = (0..n)
        .map(|v| SimplexEntry::vertex(VertexId(v as u32)))
        .collect();
    for edge in &edges {
        let batch = registry.process_edge(edge).map_err(|e| e.to_string())?;
        out.extend(batch);
    }
    Ok(out)
}

/// Random clouds (n <= 20, d in {2,3}, max_dim in {2,3}): the streamed
/// simplex multiset (with filtration values) must equal batch construction
/// exactly.
pub fn stream_suite(seed: u64, trials: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut failure = None;
    for trial in 0..trials {
        let n = rng.random_range(4..=20usize);
        let d = rng.random_range(2..=3usize);
        let max_dim = rng.random_range(2..=3usize);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
            .collect();
        let cloud = PointCloud::from_rows(rows.clone()).unwrap();
        let epsilon = if rng.random_bool(0.2) {
            f64::INFINITY
        } else {
            rng.random_range(0.2..0.8)
        };

        let streamed = match streamed_simplices(&cloud, PointMetric::Euclidean, epsilon, max_dim) {
            Ok(s) => s,
            Err(e) => {
                failure = Some(format!("trial {trial}: streaming failed: {e}\npoints={rows:?}"));
                break;
            }
        };
        let mut streamed_sorted = streamed;
        streamed_sorted.sort_unstable();
        let batch = rips_batch(&cloud, PointMetric::Euclidean, epsilon, max_dim);
        if streamed_sorted != batch {
            let mut msg = String::new();
            let _ = writeln!(
                msg,
                "trial {trial}: streamed complex diverges from batch (n={n}, d={d}, \
                 max_dim={max_dim}, epsilon={epsilon})"
            );
            let _ = writeln!(msg, "points={rows:?}");
            let streamed_set: BTreeSet<&SimplexEntry> = streamed_sorted.iter().collect();
            let batch_set: BTreeSet<&SimplexEntry> = batch.iter().collect();
            for s in streamed_set.difference(&batch_set) {
                let _ = writeln!(msg, "streamed only: {s}");
            }
            for s in batch_set.difference(&streamed_set) {
                let _ = writeln!(msg, "batch only: {s}");
            }
            failure = Some(msg);
            break;
        }
    }
    SuiteResult {
        name: "stream",
        trials,
        failure,
    }
}

/// Feeds a stream through the interleaved reduction and returns closed plus
/// open intervals, truncated to dimensions below max_dim.
pub fn interleaved_barcode(
    stream: Vec<SimplexEntry>,
    max_dim: usize,
) -> Result<Vec<Interval>, String> {
    let mut state = PersistenceState::new(max_dim);
    let mut intervals = Vec::new();
    for simplex in stream {
        if let Some(interval) = state.add_simplex(simplex).map_err(|e| e.to_string())? {
            intervals.push(interval);
        }
    }
    intervals.extend(state.open_intervals());
    intervals.sort_unstable();
    Ok(intervals)
}

/// Random clouds (n <= 25, max_dim <= 3): closed + open intervals from the
/// interleaved engine must equal full-matrix reduction bit for bit.
pub fn barcode_suite(seed: u64, trials: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut failure = None;
    for trial in 0..trials {
        let n = rng.random_range(4..=25usize);
        let d = rng.random_range(2..=3usize);
        let max_dim = rng.random_range(2..=3usize);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
            .collect();
        let cloud = PointCloud::from_rows(rows.clone()).unwrap();
        // Keep the oracle's full matrix at test scale.
        let mut epsilon = rng.random_range(0.3..1.0);
        let mut batch = rips_batch(&cloud, PointMetric::Euclidean, epsilon, max_dim);
        while batch.len() > 5000 {
            epsilon *= 0.8;
            batch = rips_batch(&cloud, PointMetric::Euclidean, epsilon, max_dim);
        }

        let streamed =
            match streamed_simplices(&cloud, PointMetric::Euclidean, epsilon, max_dim) {
                Ok(s) => s,
                Err(e) => {
                    failure =
                        Some(format!("trial {trial}: streaming failed: {e}\npoints={rows:?}"));
                    break;
                }
            };
        let engine = match interleaved_barcode(streamed, max_dim) {
            Ok(iv) => iv,
            Err(e) => {
                failure = Some(format!("trial {trial}: reduction failed: {e}\npoints={rows:?}"));
                break;
            }
        };
        let mut expected = match barcode_bruteforce(&batch) {
            Ok(iv) => iv,
            Err(e) => {
                failure = Some(format!("trial {trial}: oracle failed: {e}\npoints={rows:?}"));
                break;
            }
        };
        expected.retain(|iv| iv.dimension < max_dim);
        expected.sort_unstable();
        if engine != expected {
            let mut msg = String::new();
            let _ = writeln!(
                msg,
                "trial {trial}: barcodes diverge (n={n}, d={d}, max_dim={max_dim}, \
                 epsilon={epsilon})"
            );
            let _ = writeln!(msg, "points={rows:?}");
            let _ = writeln!(msg, "engine ({} intervals): {engine:?}", engine.len());
            let _ = writeln!(msg, "oracle ({} intervals): {expected:?}", expected.len());
            failure = Some(msg);
            break;
        }
    }
    SuiteResult {
        name: "barcode",
        trials,
        failure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suites_pass() {
        for result in run_all(42, 8) {
            assert!(
                result.passed(),
                "suite {} failed:\n{}",
                result.name,
                result.failure.unwrap()
            );
        }
    }

    #[test]
    fn clique_suite_catches_the_near_subset_retention_rule() {
        // The over-eager retention variant must be caught, with a
        // counterexample, within a modest number of trials.
        let result = clique_suite(42, 60, RetentionPolicy::DropNearSubsets);
        assert!(!result.passed(), "broken retention rule went undetected");
        let dump = result.failure.unwrap();
        assert!(dump.contains("diverge") || dump.contains("failed"));
    }
}
