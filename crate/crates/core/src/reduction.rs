//! Incremental persistence over Z/2: consumes simplices in filtration order
//! and maintains a table of marked simplices, pairings, and cascades from
//! which finished and still-open intervals can be read at any time.
//!
//! Insertion reduces the new simplex's boundary against stored cascades.
//! An empty reduced boundary marks the simplex (a class is born); otherwise
//! the youngest remaining term is paired with it and the closed interval is
//! handed back to the caller for spilling. Closed intervals are never kept
//! here; cascades of paired simplices are, since later reductions need them.

use std::collections::HashMap;

use thiserror::Error;

use crate::simplex::{Interval, SimplexEntry, VertexId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PersistenceError {
    #[error("filtration went backwards: {offered} after {highest}")]
    OrderViolation { highest: String, offered: String },
    #[error("simplex {0} was already consumed")]
    DuplicateSimplex(String),
    #[error("facet {facet} of {simplex} has not been consumed (stream order violation)")]
    MissingFacet { simplex: String, facet: String },
}

/// Z/2 chain as a strictly ascending set of stream indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Chain {
    indices: Vec<usize>,
}

impl Chain {
    pub fn from_sorted(indices: Vec<usize>) -> Chain {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Chain { indices }
    }

    pub fn singleton(index: usize) -> Chain {
        Chain {
            indices: vec![index],
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Maximum stream index in the chain.
    pub fn youngest(&self) -> Option<usize> {
        self.indices.last().copied()
    }

    /// Symmetric difference (addition over Z/2).
    pub fn xor(&mut self, other: &Chain) {
        let mut out = Vec::with_capacity(self.indices.len() + other.indices.len());
        let (a, b) = (&self.indices, &other.indices);
        let (mut ia, mut ib) = (0, 0);
        while ia < a.len() && ib < b.len() {
            match a[ia].cmp(&b[ib]) {
                std::cmp::Ordering::Less => {
                    out.push(a[ia]);
                    ia += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[ib]);
                    ib += 1;
                }
                std::cmp::Ordering::Equal => {
                    ia += 1;
                    ib += 1;
                }
            }
        }
        out.extend_from_slice(&a[ia..]);
        out.extend_from_slice(&b[ib..]);
        self.indices = out;
    }
}

#[derive(Debug, Clone)]
struct ConsumedEntry {
    simplex: SimplexEntry,
    marked: bool,
}

/// Aggregate cascade sizes, reported as diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct CascadeStats {
    pub count: usize,
    pub total_len: usize,
    pub max_len: usize,
}

impl CascadeStats {
    pub fn mean_len(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.total_len as f64 / self.count as f64
        }
    }
}

/// The reduction state over everything consumed so far.
#[derive(Debug, Clone)]
pub struct PersistenceState {
    max_dim: usize,
    entries: Vec<ConsumedEntry>,
    index_of: HashMap<Vec<VertexId>, usize>,
    cascades: HashMap<usize, Chain>,
    pairings: HashMap<usize, usize>,
    closed_count: u64,
    highest_filtration: f64,
    last_pairing: Option<(usize, usize)>,
}

impl PersistenceState {
    pub fn new(max_dim: usize) -> PersistenceState {
        PersistenceState {
            max_dim,
            entries: Vec::new(),
            index_of: HashMap::new(),
            cascades: HashMap::new(),
            pairings: HashMap::new(),
            closed_count: 0,
            highest_filtration: f64::NEG_INFINITY,
            last_pairing: None,
        }
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn consumed_len(&self) -> usize {
        self.entries.len()
    }

    pub fn closed_count(&self) -> u64 {
        self.closed_count
    }

    pub fn marked_count(&self) -> usize {
        self.entries.iter().filter(|e| e.marked).count()
    }

    pub fn is_marked(&self, index: usize) -> bool {
        self.entries[index].marked
    }

    pub fn simplex_at(&self, index: usize) -> &SimplexEntry {
        &self.entries[index].simplex
    }

    pub fn cascade(&self, index: usize) -> Option<&Chain> {
        self.cascades.get(&index)
    }

    /// The (birth index, death index) pair recorded by the most recent
    /// closing insertion, if any.
    pub fn last_pairing(&self) -> Option<(usize, usize)> {
        self.last_pairing
    }

    /// Resolves the cascade stored at a paired marked simplex into its
    /// member simplices: a representative cycle of the class born there.
    pub fn representative(&self, birth_index: usize) -> Option<Vec<&SimplexEntry>> {
        let chain = self.cascades.get(&birth_index)?;
        Some(
            chain
                .indices()
                .iter()
                .map(|&i| &self.entries[i].simplex)
                .collect(),
        )
    }

    pub fn cascade_stats(&self) -> CascadeStats {
        let mut stats = CascadeStats::default();
        for chain in self.cascades.values() {
            stats.count += 1;
            stats.total_len += chain.len();
            stats.max_len = stats.max_len.max(chain.len());
        }
        stats
    }

    /// Boundary of `s` resolved to stream indices; empty for vertices.
    /// Every facet must already be consumed.
    pub fn boundary(&self, s: &SimplexEntry) -> Result<Chain, PersistenceError> {
        if s.dimension() == 0 {
            return Ok(Chain::default());
        }
        let verts = s.vertices();
        let mut indices = Vec::with_capacity(verts.len());
        let mut facet = Vec::with_capacity(verts.len() - 1);
        for skip in 0..verts.len() {
            facet.clear();
            facet.extend(
                verts
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v),
            );
            match self.index_of.get(&facet) {
                Some(&idx) => indices.push(idx),
                None => {
                    return Err(PersistenceError::MissingFacet {
                        simplex: s.to_string(),
                        facet: format!("{facet:?}"),
                    })
                }
            }
        }
        indices.sort_unstable();
        Ok(Chain::from_sorted(indices))
    }

    /// Consumes one simplex. Returns the interval it closes, if any.
    pub fn add_simplex(&mut self, s: SimplexEntry) -> Result<Option<Interval>, PersistenceError> {
        let filt = s.filtration();
        if filt < self.highest_filtration {
            return Err(PersistenceError::OrderViolation {
                highest: self.highest_filtration.to_string(),
                offered: s.to_string(),
            });
        }
        if self.index_of.contains_key(s.vertices()) {
            return Err(PersistenceError::DuplicateSimplex(s.to_string()));
        }

        let mut chain = self.boundary(&s)?;
        // Unmarked terms died as killers; they carry no class and are
        // dropped before reduction.
        chain = Chain::from_sorted(
            chain
                .indices()
                .iter()
                .copied()
                .filter(|&i| self.entries[i].marked)
                .collect(),
        );
        loop {
            let Some(youngest) = chain.youngest() else {
                break;
            };
            if self.pairings.contains_key(&youngest) {
                let cascade = &self.cascades[&youngest];
                chain.xor(cascade);
            } else {
                break;
            }
        }

        let index = self.entries.len();
        self.highest_filtration = filt;
        if chain.is_empty() {
            self.index_of.insert(s.vertices().to_vec(), index);
            self.entries.push(ConsumedEntry {
                simplex: s,
                marked: true,
            });
            self.cascades.insert(index, Chain::singleton(index));
            Ok(None)
        } else {
            let birth = chain.youngest().expect("non-empty chain");
            self.pairings.insert(birth, index);
            self.cascades.insert(birth, chain);
            self.last_pairing = Some((birth, index));
            let birth_entry = &self.entries[birth];
            let interval = Interval::closed(
                birth_entry.simplex.dimension(),
                birth_entry.simplex.filtration(),
                filt,
            );
            self.index_of.insert(s.vertices().to_vec(), index);
            self.entries.push(ConsumedEntry {
                simplex: s,
                marked: false,
            });
            self.closed_count += 1;
            Ok(Some(interval))
        }
    }

    /// Open intervals: one per marked, unpaired simplex of dimension below
    /// max_dim, sorted by (dimension, birth). Dimension-max_dim classes are
    /// skeleton-truncation artifacts and are not reported.
    pub fn open_intervals(&self) -> Vec<Interval> {
        let mut out: Vec<Interval> = self
            .entries
            .iter()
            .enumerate()
            .filter(|(i, e)| {
                e.marked && !self.pairings.contains_key(i) && e.simplex.dimension() < self.max_dim
            })
            .map(|(_, e)| Interval::open(e.simplex.dimension(), e.simplex.filtration()))
            .collect();
        out.sort_by(|a, b| {
            a.dimension
                .cmp(&b.dimension)
                .then_with(|| a.birth.total_cmp(&b.birth))
        });
        out
    }

    /// Open-interval counts per dimension, 0 through max_dim - 1.
    pub fn betti_numbers(&self) -> Vec<usize> {
        let mut betti = vec![0usize; self.max_dim];
        for (i, e) in self.entries.iter().enumerate() {
            if e.marked && !self.pairings.contains_key(&i) {
                let dim = e.simplex.dimension();
                if dim < self.max_dim {
                    betti[dim] += 1;
                }
            }
        }
        betti
    }

    // Checkpoint support: canonical decomposition and its inverse.

    pub(crate) fn snapshot_entries(&self) -> impl Iterator<Item = (&SimplexEntry, bool)> {
        self.entries.iter().map(|e| (&e.simplex, e.marked))
    }

    pub(crate) fn snapshot_pairings(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self.pairings.iter().map(|(&b, &d)| (b, d)).collect();
        out.sort_unstable();
        out
    }

    pub(crate) fn snapshot_cascades(&self) -> Vec<(usize, &Chain)> {
        let mut out: Vec<(usize, &Chain)> =
            self.cascades.iter().map(|(&i, c)| (i, c)).collect();
        out.sort_unstable_by_key(|(i, _)| *i);
        out
    }

    pub(crate) fn from_parts(
        max_dim: usize,
        entries: Vec<(SimplexEntry, bool)>,
        pairings: Vec<(usize, usize)>,
        cascades: Vec<(usize, Chain)>,
        closed_count: u64,
    ) -> Result<PersistenceState, String> {
        let len = entries.len();
        let mut index_of = HashMap::with_capacity(len);
        let mut stored = Vec::with_capacity(len);
        let mut highest = f64::NEG_INFINITY;
        for (i, (simplex, marked)) in entries.into_iter().enumerate() {
            if simplex.filtration() < highest {
                return Err("entries not in filtration order".into());
            }
            highest = simplex.filtration();
            if index_of.insert(simplex.vertices().to_vec(), i).is_some() {
                return Err("duplicate simplex in entries".into());
            }
            stored.push(ConsumedEntry { simplex, marked });
        }
        let mut pairing_map = HashMap::with_capacity(pairings.len());
        for (birth, death) in pairings {
            if birth >= len || death >= len || birth >= death {
                return Err("pairing indices out of range".into());
            }
            if pairing_map.insert(birth, death).is_some() {
                return Err("duplicate pairing".into());
            }
        }
        let mut cascade_map = HashMap::with_capacity(cascades.len());
        for (idx, chain) in cascades {
            if idx >= len || chain.youngest().is_some_and(|y| y >= len) {
                return Err("cascade indices out of range".into());
            }
            if cascade_map.insert(idx, chain).is_some() {
                return Err("duplicate cascade".into());
            }
        }
        Ok(PersistenceState {
            max_dim,
            entries: stored,
            index_of,
            cascades: cascade_map,
            pairings: pairing_map,
            closed_count,
            highest_filtration: highest,
            last_pairing: None,
        })
    }
}
