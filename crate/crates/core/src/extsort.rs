//! External merge sort for edge files: bounded in-memory runs written to
//! temporary files, then a k-way merge. Output bytes are independent of the
//! memory budget because ties between identical records are broken by run
//! index, and identical records are interchangeable.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt};

use crate::edgefile::{
    write_record, EdgeCursor, EdgeFile, EdgeFileError, EdgeWriter, EDGE_RECORD_LEN,
};
use crate::simplex::{Edge, VertexId};

/// Smallest accepted budget: one run buffer of 256 records.
pub const MIN_SORT_BUDGET: usize = 256 * EDGE_RECORD_LEN as usize;

#[derive(Debug)]
pub struct SortOutcome {
    pub edge_file: EdgeFile,
    pub runs: usize,
}

struct RunReader {
    reader: BufReader<File>,
    remaining: u64,
}

impl RunReader {
    fn next(&mut self) -> Result<Option<Edge>, EdgeFileError> {
        if self.remaining == 0 {
            return Ok(None);
        }
        let length = self.reader.read_f64::<LittleEndian>()?;
        let source = self.reader.read_u32::<LittleEndian>()?;
        let target = self.reader.read_u32::<LittleEndian>()?;
        self.remaining -= 1;
        Ok(Some(Edge {
            source: VertexId(source),
            target: VertexId(target),
            length,
        }))
    }
}

/// Sorts `input` into `out` under `memory_budget` bytes of record buffer,
/// ascending by (length, source, target). The record multiset is preserved.
pub fn external_sort_edges(
    input: &EdgeFile,
    out: &Path,
    memory_budget: usize,
) -> Result<SortOutcome, EdgeFileError> {
    if memory_budget < MIN_SORT_BUDGET {
        return Err(EdgeFileError::BudgetTooSmall {
            budget: memory_budget,
            minimum: MIN_SORT_BUDGET,
        });
    }
    let run_capacity = memory_budget / EDGE_RECORD_LEN as usize;
    let tmp_dir = out.parent().map(Path::to_path_buf).unwrap_or_default();

    let mut cursor = EdgeCursor::open(&input.path)?;
    let mut runs: Vec<RunReader> = Vec::new();
    let mut buf: Vec<Edge> = Vec::new();
    loop {
        buf.clear();
        while buf.len() < run_capacity {
            match cursor.next_edge()? {
                Some(e) => buf.push(e),
                None => break,
            }
        }
        if buf.is_empty() {
            break;
        }
        buf.sort_unstable();
        let mut file = if tmp_dir.as_os_str().is_empty() {
            tempfile::tempfile()?
        } else {
            tempfile::tempfile_in(&tmp_dir)?
        };
        {
            let mut w = BufWriter::new(&mut file);
            for e in &buf {
                write_record(&mut w, e)?;
            }
            w.flush()?;
        }
        file.seek(SeekFrom::Start(0))?;
        runs.push(RunReader {
            reader: BufReader::new(file),
            remaining: buf.len() as u64,
        });
    }

    let mut writer = EdgeWriter::create(out, input.max_epsilon)?;
    let mut heap: BinaryHeap<Reverse<(Edge, usize)>> = BinaryHeap::with_capacity(runs.len());
    for (i, run) in runs.iter_mut().enumerate() {
        if let Some(e) = run.next()? {
            heap.push(Reverse((e, i)));
        }
    }
    let mut written = 0u64;
    while let Some(Reverse((e, i))) = heap.pop() {
        writer.push(&e)?;
        written += 1;
        if let Some(next) = runs[i].next()? {
            heap.push(Reverse((next, i)));
        }
    }
    let edge_file = writer.finish()?;
    if written != input.record_count {
        return Err(EdgeFileError::SizeMismatch {
            records: input.record_count,
            expected: input.record_count,
            found: written,
        });
    }
    Ok(SortOutcome {
        edge_file,
        runs: runs.len().max(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edgefile::EdgeWriter;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    fn write_edges(path: &Path, edges: &[Edge]) -> EdgeFile {
        let mut w = EdgeWriter::create(path, f64::INFINITY).unwrap();
        for e in edges {
            w.push(e).unwrap();
        }
        w.finish().unwrap()
    }

    fn read_all(path: &Path) -> Vec<Edge> {
        let mut cur = EdgeCursor::open(path).unwrap();
        let mut out = Vec::new();
        while let Some(e) = cur.next_edge().unwrap() {
            out.push(e);
        }
        out
    }

    fn random_edges(seed: u64, count: usize) -> Vec<Edge> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let a: u32 = rng.random_range(0..1000);
                let b: u32 = rng.random_range(0..1000);
                let (a, b) = if a == b { (a, b + 1) } else { (a, b) };
                Edge::new(VertexId(a.min(b)), VertexId(a.max(b)), rng.random::<f64>())
            })
            .collect()
    }

    #[test]
    fn sorted_input_is_unchanged() {
        let dir = tempdir().unwrap();
        let input = dir.path().join("in.sph");
        let output = dir.path().join("out.sph");
        let edges = vec![
            Edge::new(VertexId(0), VertexId(1), 1.0),
            Edge::new(VertexId(0), VertexId(2), 2.0),
            Edge::new(VertexId(1), VertexId(2), 3.0),
        ];
        let ef = write_edges(&input, &edges);
        external_sort_edges(&ef, &output, MIN_SORT_BUDGET).unwrap();
        assert_eq!(std::fs::read(&input).unwrap(), std::fs::read(&output).unwrap());
    }

    #[test]
    fn reversed_input_is_sorted() {
        let dir = tempdir().unwrap();
        let input = dir.path().join("in.sph");
        let output = dir.path().join("out.sph");
        let edges = vec![
            Edge::new(VertexId(1), VertexId(2), 3.0),
            Edge::new(VertexId(0), VertexId(2), 2.0),
            Edge::new(VertexId(0), VertexId(1), 1.0),
        ];
        let ef = write_edges(&input, &edges);
        external_sort_edges(&ef, &output, MIN_SORT_BUDGET).unwrap();
        let mut expected = edges.clone();
        expected.sort_unstable();
        assert_eq!(read_all(&output), expected);
    }

    #[test]
    fn multi_run_sort_matches_in_memory_oracle() {
        let dir = tempdir().unwrap();
        let input = dir.path().join("in.sph");
        let output = dir.path().join("out.sph");
        let edges = random_edges(7, 10_000);
        let ef = write_edges(&input, &edges);
        // Budget of 256 records forces ceil(10000/256) = 40 runs.
        let outcome = external_sort_edges(&ef, &output, MIN_SORT_BUDGET).unwrap();
        assert!(outcome.runs >= 4, "expected >= 4 runs, got {}", outcome.runs);
        let mut expected = edges.clone();
        expected.sort_unstable();
        assert_eq!(read_all(&output), expected);
    }

    #[test]
    fn output_bytes_do_not_depend_on_budget() {
        let dir = tempdir().unwrap();
        let input = dir.path().join("in.sph");
        let edges = random_edges(11, 3_000);
        let ef = write_edges(&input, &edges);
        let out_a = dir.path().join("a.sph");
        let out_b = dir.path().join("b.sph");
        external_sort_edges(&ef, &out_a, MIN_SORT_BUDGET).unwrap();
        external_sort_edges(&ef, &out_b, 64 * 1024 * 1024).unwrap();
        assert_eq!(std::fs::read(&out_a).unwrap(), std::fs::read(&out_b).unwrap());
    }

    #[test]
    fn empty_input_sorts_to_empty_output() {
        let dir = tempdir().unwrap();
        let input = dir.path().join("in.sph");
        let output = dir.path().join("out.sph");
        let ef = write_edges(&input, &[]);
        let outcome = external_sort_edges(&ef, &output, MIN_SORT_BUDGET).unwrap();
        assert_eq!(outcome.edge_file.record_count, 0);
        assert!(read_all(&output).is_empty());
    }

    #[test]
    fn undersized_budget_is_rejected() {
        let dir = tempdir().unwrap();
        let input = dir.path().join("in.sph");
        let output = dir.path().join("out.sph");
        let ef = write_edges(&input, &[]);
        assert!(matches!(
            external_sort_edges(&ef, &output, MIN_SORT_BUDGET - 1),
            Err(EdgeFileError::BudgetTooSmall { .. })
        ));
    }
}
