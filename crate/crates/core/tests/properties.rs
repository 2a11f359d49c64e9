//! Cross-module invariants: checkpoint replay determinism, extension
//! equivalence, the Euler-characteristic identity, and open-interval reads
//! at stream prefixes checked against the batch oracle.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::tempdir;

use sph_core::checkpoint::{edge_file_fingerprint, parse_checkpoint, write_checkpoint};
use sph_core::edgefile::compute_edges;
use sph_core::extsort::external_sort_edges;
use sph_core::intervals::read_intervals;
use sph_core::oracle::{barcode_bruteforce, rips_batch};
use sph_core::points::{EdgeSource, PointCloud, PointMetric};
use sph_core::reduction::PersistenceState;
use sph_core::selfcheck::streamed_simplices;
use sph_core::session::{Session, SessionConfig};
use sph_core::simplex::Interval;

fn circle_cloud(n: usize) -> PointCloud {
    let rows = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            vec![theta.cos(), theta.sin()]
        })
        .collect();
    PointCloud::from_rows(rows).unwrap()
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize, d: usize) -> PointCloud {
    let rows = (0..n)
        .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
        .collect();
    PointCloud::from_rows(rows).unwrap()
}

fn build_sorted_edges(dir: &Path, cloud: &PointCloud, max_epsilon: f64) -> PathBuf {
    let unsorted = dir.join("edges.unsorted");
    let sorted = dir.join("edges.sph");
    let source = EdgeSource::Points {
        cloud: cloud.clone(),
        metric: PointMetric::Euclidean,
    };
    let ef = compute_edges(&source, max_epsilon, &unsorted).unwrap();
    external_sort_edges(&ef, &sorted, 64 * 1024 * 1024).unwrap();
    sorted
}

/// Writing a checkpoint, advancing, writing another, then restoring the
/// first and replaying reproduces the second file byte for byte.
#[test]
fn checkpoint_replay_reproduces_later_checkpoint_bytes() {
    let dir = tempdir().unwrap();
    let cloud = circle_cloud(8);
    let edges = build_sorted_edges(dir.path(), &cloud, 2.1);
    let intervals = dir.path().join("iv.sphi");
    let ck_a = dir.path().join("a.sphc");
    let ck_b = dir.path().join("b.sphc");

    let mut session = Session::start(
        &edges,
        8,
        2,
        &intervals,
        SessionConfig::default(),
    )
    .unwrap();
    session.run(2.1, Some(10), None).unwrap();
    session.checkpoint_to(&ck_a).unwrap();
    session.run(2.1, Some(5), None).unwrap();
    session.checkpoint_to(&ck_b).unwrap();
    drop(session);

    let replay_iv = dir.path().join("replay.sphi");
    std::fs::copy(&intervals, &replay_iv).unwrap();
    let ck_b_replayed = dir.path().join("b2.sphc");
    let mut session = Session::resume(
        &ck_a,
        &edges,
        &replay_iv,
        SessionConfig::default(),
    )
    .unwrap();
    session.run(2.1, Some(5), None).unwrap();
    session.checkpoint_to(&ck_b_replayed).unwrap();

    assert_eq!(
        std::fs::read(&ck_b).unwrap(),
        std::fs::read(&ck_b_replayed).unwrap()
    );
}

/// Restoring a checkpoint taken after the worked-example graph yields the
/// identical registry clique set.
#[test]
fn checkpoint_round_trip_preserves_registry_cliques() {
    use sph_core::cliques::CliqueRegistry;
    use sph_core::simplex::{Edge, VertexId};

    let dir = tempdir().unwrap();
    let cloud = circle_cloud(4); // any edge file works as a fingerprint anchor
    let edges = build_sorted_edges(dir.path(), &cloud, 3.0);
    let fp = edge_file_fingerprint(&edges).unwrap();

    let mut registry = CliqueRegistry::new(7, 4).unwrap();
    let mut state = PersistenceState::new(4);
    for v in 0..7 {
        state
            .add_simplex(sph_core::simplex::SimplexEntry::vertex(VertexId(v)))
            .unwrap();
    }
    let edges_10: [(u32, u32); 10] = [
        (0, 1),
        (0, 2),
        (1, 2),
        (0, 5),
        (1, 5),
        (2, 5),
        (0, 6),
        (1, 6),
        (2, 6),
        (3, 4),
    ];
    for (step, (a, b)) in edges_10.iter().enumerate() {
        let edge = Edge::new(VertexId(*a), VertexId(*b), step as f64);
        for s in registry.process_edge(&edge).unwrap() {
            state.add_simplex(s).unwrap();
        }
    }

    let ck = dir.path().join("ten.sphc");
    write_checkpoint(&ck, &fp, 16, 9.0, 10, &registry, &state).unwrap();
    let restored = parse_checkpoint(&ck).unwrap();
    assert_eq!(restored.registry.clique_set(), registry.clique_set());
    assert_eq!(restored.state.consumed_len(), state.consumed_len());
    assert_eq!(restored.state.closed_count(), state.closed_count());
    assert_eq!(restored.state.betti_numbers(), state.betti_numbers());
}

/// A run stopped at eps1 and resumed to eps2 produces the same interval file
/// as a fresh run straight to eps2 (same edge file, generated to the larger
/// cutoff).
#[test]
fn extension_equals_fresh_run() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..5 {
        let dir = tempdir().unwrap();
        let n = rng.random_range(6..=12usize);
        let cloud = random_cloud(&mut rng, n, 2);
        let edges = build_sorted_edges(dir.path(), &cloud, f64::INFINITY);
        let eps1 = rng.random_range(0.2..0.5);
        let eps2 = rng.random_range(0.8..1.2);

        let fresh = dir.path().join("fresh.sphi");
        let mut session = Session::start(
            &edges,
            n as u32,
            2,
            &fresh,
            SessionConfig::default(),
        )
        .unwrap();
        session.run(eps2, None, None).unwrap();
        session.finalize().unwrap();

        let staged = dir.path().join("staged.sphi");
        let ck = dir.path().join("staged.sphc");
        let config = SessionConfig {
            checkpoint_path: Some(ck.clone()),
            ..SessionConfig::default()
        };
        let mut session =
            Session::start(&edges, n as u32, 2, &staged, config).unwrap();
        session.run(eps1, None, None).unwrap();
        session.finalize().unwrap();

        let mut session = Session::resume(
            &ck,
            &edges,
            &staged,
            SessionConfig::default(),
        )
        .unwrap();
        session.run(eps2, None, None).unwrap();
        session.finalize().unwrap();

        assert_eq!(
            std::fs::read(&fresh).unwrap(),
            std::fs::read(&staged).unwrap(),
            "extension run differs from fresh run (n={n}, eps1={eps1}, eps2={eps2})"
        );
    }
}

/// At every prefix of a stream whose skeleton cap exceeds any clique size,
/// the alternating sum of simplex counts equals the alternating sum of open
/// classes.
#[test]
fn euler_characteristic_matches_at_every_prefix() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..10 {
        let n = rng.random_range(3..=9usize);
        let cloud = random_cloud(&mut rng, n, 2);
        let epsilon = rng.random_range(0.3..1.5);
        // Cap above any possible clique: nothing is truncated.
        let max_dim = n;
        let stream =
            streamed_simplices(&cloud, PointMetric::Euclidean, epsilon, max_dim).unwrap();
        let mut state = PersistenceState::new(max_dim);
        let mut simplex_counts = vec![0i64; max_dim + 1];
        for simplex in stream {
            simplex_counts[simplex.dimension()] += 1;
            state.add_simplex(simplex).unwrap();
            let complex_euler: i64 = simplex_counts
                .iter()
                .enumerate()
                .map(|(dim, &count)| if dim % 2 == 0 { count } else { -count })
                .sum();
            let betti_euler: i64 = state
                .betti_numbers()
                .iter()
                .enumerate()
                .map(|(dim, &count)| {
                    let count = count as i64;
                    if dim % 2 == 0 {
                        count
                    } else {
                        -count
                    }
                })
                .sum();
            assert_eq!(complex_euler, betti_euler);
        }
    }
}

/// Consuming the circle stream up to just above the nearest-neighbour
/// distance leaves exactly one open H0 and one open H1 class, matching the
/// oracle's reduction of the same prefix.
#[test]
fn circle_prefix_open_intervals_match_oracle() {
    let cloud = circle_cloud(8);
    let nearest = 2.0 * (std::f64::consts::PI / 8.0).sin();
    let epsilon = nearest * 1.01;
    let max_dim = 2;

    let stream = streamed_simplices(&cloud, PointMetric::Euclidean, epsilon, max_dim).unwrap();
    let mut state = PersistenceState::new(max_dim);
    for simplex in stream {
        state.add_simplex(simplex).unwrap();
    }
    let open = state.open_intervals();
    assert_eq!(open.len(), 2);
    assert_eq!(open[0].dimension, 0);
    assert_eq!(open[1].dimension, 1);

    let batch = rips_batch(&cloud, PointMetric::Euclidean, epsilon, max_dim);
    let oracle_open: Vec<Interval> = barcode_bruteforce(&batch)
        .unwrap()
        .into_iter()
        .filter(|iv| iv.is_open() && iv.dimension < max_dim)
        .collect();
    assert_eq!(open, oracle_open);
}

/// Betti numbers at half the diameter agree with ranks computed by the
/// full-matrix oracle.
#[test]
fn circle_betti_at_half_diameter_matches_oracle() {
    let cloud = circle_cloud(8);
    let epsilon = 1.0; // diameter / 2
    let max_dim = 2;
    let stream = streamed_simplices(&cloud, PointMetric::Euclidean, epsilon, max_dim).unwrap();
    let mut state = PersistenceState::new(max_dim);
    for simplex in stream {
        state.add_simplex(simplex).unwrap();
    }
    let batch = rips_batch(&cloud, PointMetric::Euclidean, epsilon, max_dim);
    let oracle = barcode_bruteforce(&batch).unwrap();
    let mut oracle_betti = vec![0usize; max_dim];
    for iv in oracle {
        if iv.is_open() && iv.dimension < max_dim {
            oracle_betti[iv.dimension] += 1;
        }
    }
    assert_eq!(state.betti_numbers(), oracle_betti);
}

/// The spilled interval file of a finished run lists every closed interval
/// in closure order followed by the opens sorted by (dimension, birth).
#[test]
fn interval_file_layout_is_closed_then_open() {
    let dir = tempdir().unwrap();
    let cloud = circle_cloud(8);
    let edges = build_sorted_edges(dir.path(), &cloud, 2.1);
    let intervals_path = dir.path().join("iv.sphi");
    let mut session = Session::start(
        &edges,
        8,
        2,
        &intervals_path,
        SessionConfig::default(),
    )
    .unwrap();
    session.run(2.1, None, None).unwrap();
    let summary = session.finalize().unwrap();

    let intervals = read_intervals(&intervals_path).unwrap();
    assert_eq!(intervals.len() as u64, summary.interval_records);
    let closed = summary.closed_count as usize;
    assert!(intervals[..closed].iter().all(|iv| !iv.is_open()));
    assert!(intervals[closed..].iter().all(|iv| iv.is_open()));
    let opens = &intervals[closed..];
    for pair in opens.windows(2) {
        assert!(
            (pair[0].dimension, pair[0].birth) <= (pair[1].dimension, pair[1].birth)
        );
    }
}
