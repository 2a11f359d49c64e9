//! The streaming pipeline: read the sorted edge file one edge at a time,
//! update the clique registry, feed the emitted simplices straight into the
//! persistence reduction, and spill each closed interval to disk. At most
//! one edge's emission batch is alive outside the persistence table.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use thiserror::Error;

use crate::checkpoint::{
    edge_file_fingerprint, read_checkpoint, write_checkpoint, CheckpointError,
};
use crate::cliques::{CliqueError, CliqueRegistry};
use crate::edgefile::{EdgeCursor, EdgeFileError};
use crate::intervals::{IntervalFileError, IntervalWriter};
use crate::reduction::{CascadeStats, PersistenceError, PersistenceState};
use crate::simplex::{live_simplex_entries, Interval, SimplexEntry, VertexId};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    EdgeFile(#[from] EdgeFileError),
    #[error(transparent)]
    Clique(#[from] CliqueError),
    #[error(transparent)]
    Persistence(#[from] PersistenceError),
    #[error(transparent)]
    Intervals(#[from] IntervalFileError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("representative sidecar I/O: {0}")]
    Sidecar(std::io::Error),
    #[error("session already finalized")]
    AlreadyFinalized,
}

#[derive(Debug, Clone, Default)]
pub struct SessionConfig {
    pub checkpoint_path: Option<PathBuf>,
    pub checkpoint_every: Option<u64>,
    pub keep_representatives: bool,
}

/// Why a `run` call returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    EndOfStream,
    StoppedAtEpsilon,
    EdgeBudgetExhausted,
    Interrupted,
}

/// End-of-run report, also the source of the CLI summary.
#[derive(Debug, Clone)]
pub struct Summary {
    pub n: u32,
    pub max_dim: usize,
    pub edges_processed: u64,
    pub last_epsilon: f64,
    pub simplices_consumed: u64,
    pub closed_count: u64,
    pub closed_by_dim: Vec<u64>,
    pub zero_length_closed: u64,
    pub open_by_dim: Vec<usize>,
    pub longest_by_dim: Vec<Option<Interval>>,
    pub interval_records: u64,
    pub registry_cliques: usize,
    pub peak_registry: usize,
    pub max_batch: usize,
    pub peak_live_entries: i64,
    pub cascade_stats: CascadeStats,
}

pub struct Session {
    registry: CliqueRegistry,
    state: PersistenceState,
    cursor: EdgeCursor,
    spill: Option<IntervalWriter>,
    sidecar: Option<BufWriter<File>>,
    fingerprint: [u8; 32],
    config: SessionConfig,
    edges_processed: u64,
    last_epsilon: f64,
    closed_by_dim: Vec<u64>,
    zero_length_closed: u64,
    longest_by_dim: Vec<Option<Interval>>,
    peak_registry: usize,
    max_batch: usize,
    peak_live_entries: i64,
}

impl Session {
    /// Fresh session over a sorted edge file: seeds the registry with the n
    /// singletons and feeds the n vertex simplices (filtration 0) before any
    /// edge is read.
    pub fn start(
        edge_file: &Path,
        n: u32,
        max_dim: usize,
        intervals: &Path,
        config: SessionConfig,
    ) -> Result<Session, SessionError> {
        let fingerprint = edge_file_fingerprint(edge_file)?;
        let cursor = EdgeCursor::open(edge_file)?;
        let registry = CliqueRegistry::new(n, max_dim)?;
        let mut state = PersistenceState::new(max_dim);
        let spill = IntervalWriter::create(intervals)?;
        let sidecar = Self::open_sidecar(&config, intervals, false)?;
        for v in 0..n {
            let closed = state.add_simplex(SimplexEntry::vertex(VertexId(v)))?;
            debug_assert!(closed.is_none(), "a vertex cannot close an interval");
        }
        let mut session = Session {
            registry,
            state,
            cursor,
            spill: Some(spill),
            sidecar,
            fingerprint,
            config,
            edges_processed: 0,
            last_epsilon: 0.0,
            closed_by_dim: vec![0; max_dim],
            zero_length_closed: 0,
            longest_by_dim: vec![None; max_dim],
            peak_registry: n as usize,
            max_batch: 0,
            peak_live_entries: 0,
        };
        session.sample_live();
        Ok(session)
    }

    /// Restores a checkpointed session. The interval file is truncated back
    /// to the checkpoint's closed-interval count, so replaying the remaining
    /// edges reproduces the uninterrupted file byte for byte.
    pub fn resume(
        checkpoint: &Path,
        edge_file: &Path,
        intervals: &Path,
        config: SessionConfig,
    ) -> Result<Session, SessionError> {
        let ck = read_checkpoint(checkpoint, edge_file)?;
        let cursor = EdgeCursor::open_at(edge_file, ck.cursor_offset)?;
        let spill = IntervalWriter::resume(intervals, ck.state.closed_count())?;
        let sidecar = Self::open_sidecar(&config, intervals, true)?;
        let max_dim = ck.state.max_dim();
        let mut session = Session {
            registry: ck.registry,
            state: ck.state,
            cursor,
            spill: Some(spill),
            sidecar,
            fingerprint: ck.fingerprint,
            config,
            edges_processed: ck.edges_processed,
            last_epsilon: ck.last_epsilon,
            closed_by_dim: vec![0; max_dim],
            zero_length_closed: 0,
            longest_by_dim: vec![None; max_dim],
            peak_registry: 0,
            max_batch: 0,
            peak_live_entries: 0,
        };
        session.peak_registry = session.registry.clique_count();
        session.sample_live();
        Ok(session)
    }

    fn open_sidecar(
        config: &SessionConfig,
        intervals: &Path,
        append: bool,
    ) -> Result<Option<BufWriter<File>>, SessionError> {
        if !config.keep_representatives {
            return Ok(None);
        }
        let mut path = intervals.as_os_str().to_owned();
        path.push(".reps");
        let file = if append {
            std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(PathBuf::from(&path))
        } else {
            File::create(PathBuf::from(&path))
        }
        .map_err(SessionError::Sidecar)?;
        Ok(Some(BufWriter::new(file)))
    }

    pub fn vertex_count(&self) -> u32 {
        self.registry.vertex_count()
    }

    pub fn max_dim(&self) -> usize {
        self.state.max_dim()
    }

    pub fn edges_processed(&self) -> u64 {
        self.edges_processed
    }

    pub fn last_epsilon(&self) -> f64 {
        self.last_epsilon
    }

    pub fn state(&self) -> &PersistenceState {
        &self.state
    }

    pub fn registry(&self) -> &CliqueRegistry {
        &self.registry
    }

    fn sample_live(&mut self) {
        let outside = live_simplex_entries() - self.state.consumed_len() as i64;
        self.peak_live_entries = self.peak_live_entries.max(outside);
    }

    /// Processes edges until the stream ends, the next edge exceeds
    /// `stop_epsilon`, the optional edge budget is used up, or the interrupt
    /// flag is raised. An edge whose length exceeds `stop_epsilon` stays
    /// unconsumed, so checkpoints taken here resume exactly at it.
    pub fn run(
        &mut self,
        stop_epsilon: f64,
        max_edges: Option<u64>,
        interrupt: Option<&AtomicBool>,
    ) -> Result<RunOutcome, SessionError> {
        let mut processed_here = 0u64;
        loop {
            if let Some(flag) = interrupt {
                if flag.load(Ordering::Relaxed) {
                    if self.config.checkpoint_path.is_some() {
                        self.checkpoint_now()?;
                    }
                    return Ok(RunOutcome::Interrupted);
                }
            }
            if let Some(budget) = max_edges {
                if processed_here >= budget {
                    return Ok(RunOutcome::EdgeBudgetExhausted);
                }
            }
            let Some(edge) = self.cursor.peek()? else {
                return Ok(RunOutcome::EndOfStream);
            };
            if edge.length > stop_epsilon {
                return Ok(RunOutcome::StoppedAtEpsilon);
            }
            let edge = self.cursor.next_edge()?.expect("peeked edge");

            let batch = self.registry.process_edge(&edge)?;
            self.max_batch = self.max_batch.max(batch.len());
            self.sample_live();
            for simplex in batch {
                if let Some(interval) = self.state.add_simplex(simplex)? {
                    self.record_closed(interval)?;
                }
                self.sample_live();
            }
            self.peak_registry = self.peak_registry.max(self.registry.clique_count());
            self.edges_processed += 1;
            self.last_epsilon = edge.length;
            processed_here += 1;

            if let (Some(every), Some(_)) =
                (self.config.checkpoint_every, self.config.checkpoint_path.as_ref())
            {
                if every > 0 && self.edges_processed % every == 0 {
                    self.checkpoint_now()?;
                }
            }
        }
    }

    fn record_closed(&mut self, interval: Interval) -> Result<(), SessionError> {
        let spill = self.spill.as_mut().ok_or(SessionError::AlreadyFinalized)?;
        spill.append(&interval)?;
        self.closed_by_dim[interval.dimension] += 1;
        if interval.length() == 0.0 {
            self.zero_length_closed += 1;
        }
        Self::note_longest(&mut self.longest_by_dim, interval);
        if let Some(out) = self.sidecar.as_mut() {
            let (birth_index, _) = self.state.last_pairing().expect("just paired");
            let cycle = self
                .state
                .representative(birth_index)
                .expect("cascade stored at pairing");
            write!(out, "{} {} {} :", interval.dimension, interval.birth, interval.death)
                .map_err(SessionError::Sidecar)?;
            for simplex in cycle {
                write!(out, " {simplex}").map_err(SessionError::Sidecar)?;
            }
            writeln!(out).map_err(SessionError::Sidecar)?;
        }
        Ok(())
    }

    fn note_longest(longest: &mut [Option<Interval>], interval: Interval) {
        let slot = &mut longest[interval.dimension];
        let longer = match slot {
            None => true,
            Some(current) => interval.length() > current.length(),
        };
        if longer {
            *slot = Some(interval);
        }
    }

    /// Writes a checkpoint at the current quiescent point (between edges).
    /// The spill is flushed first so the file holds every interval the
    /// checkpoint's closed count refers to.
    pub fn checkpoint_now(&mut self) -> Result<(), SessionError> {
        let path = self
            .config
            .checkpoint_path
            .clone()
            .expect("checkpoint path configured");
        self.checkpoint_to(&path)
    }

    pub fn checkpoint_to(&mut self, path: &Path) -> Result<(), SessionError> {
        if let Some(spill) = self.spill.as_mut() {
            spill.flush()?;
        }
        if let Some(out) = self.sidecar.as_mut() {
            out.flush().map_err(SessionError::Sidecar)?;
        }
        write_checkpoint(
            path,
            &self.fingerprint,
            self.cursor.byte_offset(),
            self.last_epsilon,
            self.edges_processed,
            &self.registry,
            &self.state,
        )?;
        Ok(())
    }

    /// Appends the open intervals (death = +inf), backfills the spill
    /// header, writes a final checkpoint when one is configured, and
    /// reports the run.
    pub fn finalize(&mut self) -> Result<Summary, SessionError> {
        let spill = self.spill.take().ok_or(SessionError::AlreadyFinalized)?;
        let open = self.state.open_intervals();
        for interval in &open {
            Self::note_longest(&mut self.longest_by_dim, *interval);
        }
        let interval_records = spill.finalize(&open)?;
        if let Some(out) = self.sidecar.as_mut() {
            out.flush().map_err(SessionError::Sidecar)?;
        }
        if self.config.checkpoint_path.is_some() {
            self.checkpoint_now()?;
        }
        let max_dim = self.state.max_dim();
        let mut open_by_dim = vec![0usize; max_dim];
        for interval in &open {
            open_by_dim[interval.dimension] += 1;
        }
        Ok(Summary {
            n: self.registry.vertex_count(),
            max_dim,
            edges_processed: self.edges_processed,
            last_epsilon: self.last_epsilon,
            simplices_consumed: self.state.consumed_len() as u64,
            closed_count: self.state.closed_count(),
            closed_by_dim: self.closed_by_dim.clone(),
            zero_length_closed: self.zero_length_closed,
            open_by_dim,
            longest_by_dim: self.longest_by_dim.clone(),
            interval_records,
            registry_cliques: self.registry.clique_count(),
            peak_registry: self.peak_registry,
            max_batch: self.max_batch,
            peak_live_entries: self.peak_live_entries,
            cascade_stats: self.state.cascade_stats(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edgefile::compute_edges;
    use crate::extsort::external_sort_edges;
    use crate::points::{EdgeSource, PointCloud, PointMetric};
    use tempfile::tempdir;

    fn circle_cloud(n: usize) -> PointCloud {
        let rows = (0..n)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect();
        PointCloud::from_rows(rows).unwrap()
    }

    fn sorted_circle_edges(dir: &Path, n: usize, max_epsilon: f64) -> PathBuf {
        let unsorted = dir.join("unsorted.sph");
        let sorted = dir.join("edges.sph");
        let source = EdgeSource::Points {
            cloud: circle_cloud(n),
            metric: PointMetric::Euclidean,
        };
        let ef = compute_edges(&source, max_epsilon, &unsorted).unwrap();
        external_sort_edges(&ef, &sorted, 64 * 1024 * 1024).unwrap();
        sorted
    }

    #[test]
    fn circle_run_reaches_known_topology() {
        let dir = tempdir().unwrap();
        let edges = sorted_circle_edges(dir.path(), 8, 2.1);
        let intervals = dir.path().join("iv.sphi");
        let mut session =
            Session::start(&edges, 8, 2, &intervals, SessionConfig::default()).unwrap();
        let outcome = session.run(2.1, None, None).unwrap();
        assert_eq!(outcome, RunOutcome::EndOfStream);
        let summary = session.finalize().unwrap();
        assert_eq!(summary.open_by_dim, vec![1, 0]);
        assert_eq!(summary.edges_processed, 28);
        assert_eq!(
            summary.simplices_consumed,
            8 + 28 + 56 // vertices, edges, triangles of K8
        );
        // A second finalize is an error.
        assert!(matches!(
            session.finalize(),
            Err(SessionError::AlreadyFinalized)
        ));
    }

    #[test]
    fn stop_epsilon_zero_keeps_all_components_open() {
        let dir = tempdir().unwrap();
        let edges = sorted_circle_edges(dir.path(), 6, 2.1);
        let intervals = dir.path().join("iv.sphi");
        let mut session =
            Session::start(&edges, 6, 2, &intervals, SessionConfig::default()).unwrap();
        let outcome = session.run(0.0, None, None).unwrap();
        assert_eq!(outcome, RunOutcome::StoppedAtEpsilon);
        let summary = session.finalize().unwrap();
        assert_eq!(summary.edges_processed, 0);
        assert_eq!(summary.open_by_dim, vec![6, 0]);
        let got = crate::intervals::read_intervals(&intervals).unwrap();
        assert_eq!(got.len(), 6);
        assert!(got.iter().all(|iv| iv.is_open() && iv.dimension == 0));
    }

    #[test]
    fn interrupt_flag_checkpoints_and_stops() {
        let dir = tempdir().unwrap();
        let edges = sorted_circle_edges(dir.path(), 8, 2.1);
        let intervals = dir.path().join("iv.sphi");
        let ck = dir.path().join("ck.sphc");
        let config = SessionConfig {
            checkpoint_path: Some(ck.clone()),
            ..SessionConfig::default()
        };
        let mut session = Session::start(&edges, 8, 2, &intervals, config).unwrap();
        let flag = AtomicBool::new(true);
        let outcome = session.run(2.1, None, Some(&flag)).unwrap();
        assert_eq!(outcome, RunOutcome::Interrupted);
        assert!(ck.exists());
    }

    #[test]
    fn edge_budget_pauses_the_run() {
        let dir = tempdir().unwrap();
        let edges = sorted_circle_edges(dir.path(), 8, 2.1);
        let intervals = dir.path().join("iv.sphi");
        let mut session =
            Session::start(&edges, 8, 2, &intervals, SessionConfig::default()).unwrap();
        assert_eq!(
            session.run(2.1, Some(10), None).unwrap(),
            RunOutcome::EdgeBudgetExhausted
        );
        assert_eq!(session.edges_processed(), 10);
        assert_eq!(
            session.run(2.1, None, None).unwrap(),
            RunOutcome::EndOfStream
        );
        assert_eq!(session.edges_processed(), 28);
    }

    #[test]
    fn representatives_sidecar_is_written() {
        let dir = tempdir().unwrap();
        let edges = sorted_circle_edges(dir.path(), 8, 2.1);
        let intervals = dir.path().join("iv.sphi");
        let config = SessionConfig {
            keep_representatives: true,
            ..SessionConfig::default()
        };
        let mut session = Session::start(&edges, 8, 2, &intervals, config).unwrap();
        session.run(2.1, None, None).unwrap();
        session.finalize().unwrap();
        let sidecar = dir.path().join("iv.sphi.reps");
        let text = std::fs::read_to_string(&sidecar).unwrap();
        assert!(!text.is_empty());
        assert!(text.lines().all(|l| l.contains(':')));
    }
}
