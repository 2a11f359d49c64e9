//! Maximal-clique registry for the growing neighbourhood graph.
//!
//! Per inserted edge (s, t): intersect the maximal cliques containing s with
//! those containing t, keep the maximal intersections, adjoin {s, t} to get
//! the new maximal cliques, drop previous cliques now contained in a new one,
//! and emit every simplex the edge introduces (each one contains both s and
//! t) up to the skeleton cap.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use itertools::Itertools;
use thiserror::Error;

use crate::simplex::{
    sorted_difference_len, sorted_subset, Clique, Edge, SimplexEntry, VertexId,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CliqueError {
    #[error("edge ({0}, {1}) is already in the graph")]
    DuplicateEdge(VertexId, VertexId),
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("vertex {0} out of range for {1} vertices")]
    VertexOutOfRange(VertexId, u32),
    #[error("registry needs at least one vertex")]
    NoVertices,
    #[error("skeleton cap must be at least 1")]
    ZeroSkeleton,
}

/// How `process_edge` decides which previous maximal cliques to drop.
///
/// `SubsetOfNew` removes exactly the cliques contained in a new one, which is
/// the rule maximality requires. `DropNearSubsets` also removes cliques whose
/// difference from some new clique has a single vertex; it over-removes and
/// exists only so the selfcheck suite can demonstrate that the equivalence
/// tests catch it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RetentionPolicy {
    #[default]
    SubsetOfNew,
    DropNearSubsets,
}

pub type CliqueId = usize;

/// All maximal cliques of the graph built so far, indexed by vertex.
#[derive(Debug, Clone)]
pub struct CliqueRegistry {
    n: u32,
    max_dim: usize,
    cliques: HashMap<CliqueId, Clique>,
    by_vertex: Vec<HashSet<CliqueId>>,
    next_id: CliqueId,
}

impl CliqueRegistry {
    /// Fresh registry holding the n singleton cliques.
    pub fn new(n: u32, max_dim: usize) -> Result<CliqueRegistry, CliqueError> {
        if n == 0 {
            return Err(CliqueError::NoVertices);
        }
        if max_dim == 0 {
            return Err(CliqueError::ZeroSkeleton);
        }
        let mut reg = CliqueRegistry {
            n,
            max_dim,
            cliques: HashMap::with_capacity(n as usize),
            by_vertex: vec![HashSet::new(); n as usize],
            next_id: 0,
        };
        for v in 0..n {
            reg.insert_clique(Clique::singleton(VertexId(v)));
        }
        Ok(reg)
    }

    /// Rebuilds a registry from deserialized cliques.
    pub fn from_parts(
        n: u32,
        max_dim: usize,
        cliques: Vec<Clique>,
    ) -> Result<CliqueRegistry, CliqueError> {
        if n == 0 {
            return Err(CliqueError::NoVertices);
        }
        if max_dim == 0 {
            return Err(CliqueError::ZeroSkeleton);
        }
        let mut reg = CliqueRegistry {
            n,
            max_dim,
            cliques: HashMap::with_capacity(cliques.len()),
            by_vertex: vec![HashSet::new(); n as usize],
            next_id: 0,
        };
        for cl in cliques {
            if let Some(&v) = cl.vertices().iter().find(|v| v.0 >= n) {
                return Err(CliqueError::VertexOutOfRange(v, n));
            }
            reg.insert_clique(cl);
        }
        Ok(reg)
    }

    pub fn vertex_count(&self) -> u32 {
        self.n
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn clique_count(&self) -> usize {
        self.cliques.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Clique> {
        self.cliques.values()
    }

    /// Canonical snapshot of the clique set, for comparisons and hashing.
    pub fn clique_set(&self) -> BTreeSet<Vec<VertexId>> {
        self.cliques
            .values()
            .map(|c| c.vertices().to_vec())
            .collect()
    }

    /// Cliques sorted lexicographically; the checkpoint serialization order.
    pub fn canonical_cliques(&self) -> Vec<&Clique> {
        let mut out: Vec<&Clique> = self.cliques.values().collect();
        out.sort();
        out
    }

    /// Clique-size histogram (size -> count).
    pub fn size_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for c in self.cliques.values() {
            *hist.entry(c.vertex_count()).or_insert(0) += 1;
        }
        hist
    }

    /// The maximal cliques containing `v`, sorted; never empty.
    pub fn cliques_containing(&self, v: VertexId) -> Result<Vec<&Clique>, CliqueError> {
        if v.0 >= self.n {
            return Err(CliqueError::VertexOutOfRange(v, self.n));
        }
        let mut out: Vec<&Clique> = self.by_vertex[v.0 as usize]
            .iter()
            .map(|id| &self.cliques[id])
            .collect();
        out.sort();
        Ok(out)
    }

    /// True iff (a, b) is an edge of the graph processed so far: some
    /// maximal clique contains both endpoints.
    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        if a.0 >= self.n || b.0 >= self.n || a == b {
            return false;
        }
        let (small, big) = {
            let sa = &self.by_vertex[a.0 as usize];
            let sb = &self.by_vertex[b.0 as usize];
            if sa.len() <= sb.len() {
                (sa, sb)
            } else {
                (sb, sa)
            }
        };
        small.iter().any(|id| big.contains(id))
    }

    fn insert_clique(&mut self, cl: Clique) -> CliqueId {
        let id = self.next_id;
        self.next_id += 1;
        for v in cl.vertices() {
            self.by_vertex[v.0 as usize].insert(id);
        }
        self.cliques.insert(id, cl);
        id
    }

    fn remove_clique(&mut self, id: CliqueId) {
        if let Some(cl) = self.cliques.remove(&id) {
            for v in cl.vertices() {
                self.by_vertex[v.0 as usize].remove(&id);
            }
        }
    }

    pub fn process_edge(&mut self, e: &Edge) -> Result<Vec<SimplexEntry>, CliqueError> {
        self.process_edge_with(e, RetentionPolicy::SubsetOfNew)
    }

    /// Inserts the edge, updates the registry in place, and returns the
    /// simplices the edge introduces (dimension <= max_dim), each with
    /// filtration = e.length, sorted by stream order.
    pub fn process_edge_with(
        &mut self,
        e: &Edge,
        policy: RetentionPolicy,
    ) -> Result<Vec<SimplexEntry>, CliqueError> {
        let (s, t) = (e.source, e.target);
        if s == t {
            return Err(CliqueError::SelfLoop(s));
        }
        for v in [s, t] {
            if v.0 >= self.n {
                return Err(CliqueError::VertexOutOfRange(v, self.n));
            }
        }
        if self.has_edge(s, t) {
            return Err(CliqueError::DuplicateEdge(s, t));
        }

        let s_ids: Vec<CliqueId> = self.by_vertex[s.0 as usize].iter().copied().collect();
        let t_ids: Vec<CliqueId> = self.by_vertex[t.0 as usize].iter().copied().collect();

        // Every pairwise intersection lies inside the common neighbourhood
        // of s and t (its members are adjacent to both endpoints), so
        // cliques are restricted to it before pairing. Restriction collapses
        // many cliques to the same footprint, which keeps the pair count
        // small on dense graphs without changing the intersection set.
        let common = {
            let neighbours = |v: VertexId, ids: &[CliqueId]| -> HashSet<VertexId> {
                let mut out = HashSet::new();
                for id in ids {
                    out.extend(self.cliques[id].vertices().iter().copied());
                }
                out.remove(&v);
                out
            };
            let ns = neighbours(s, &s_ids);
            let nt = neighbours(t, &t_ids);
            let mut common: Vec<VertexId> = ns.intersection(&nt).copied().collect();
            common.sort_unstable();
            common
        };
        let restrict = |ids: &[CliqueId]| -> Vec<Vec<VertexId>> {
            let mut seen: HashSet<Vec<VertexId>> = HashSet::new();
            for id in ids {
                seen.insert(crate::simplex::sorted_intersection(
                    self.cliques[id].vertices(),
                    &common,
                ));
            }
            seen.into_iter().collect()
        };
        let s_parts = restrict(&s_ids);
        let t_parts = restrict(&t_ids);
        let mut intersections: HashSet<Vec<VertexId>> =
            HashSet::with_capacity(s_parts.len() * t_parts.len());
        for sp in &s_parts {
            for tp in &t_parts {
                intersections.insert(crate::simplex::sorted_intersection(sp, tp));
            }
        }
        let max_intersections = maximal_filter(intersections.into_iter().collect());

        let new_cliques: Vec<Clique> = max_intersections
            .iter()
            .map(|base| Clique::from_sorted_unchecked(with_pair(base, s, t)))
            .collect();

        match policy {
            RetentionPolicy::SubsetOfNew => {
                // Only cliques touching s or t can be contained in a new one.
                let mut candidates: Vec<CliqueId> = s_ids;
                candidates.extend(t_ids);
                for id in candidates {
                    let subsumed = new_cliques
                        .iter()
                        .any(|ncl| self.cliques[&id].is_subset_of(ncl));
                    if subsumed {
                        self.remove_clique(id);
                    }
                }
            }
            RetentionPolicy::DropNearSubsets => {
                let ids: Vec<CliqueId> = self.cliques.keys().copied().collect();
                for id in ids {
                    let min_diff = new_cliques
                        .iter()
                        .map(|ncl| {
                            sorted_difference_len(self.cliques[&id].vertices(), ncl.vertices())
                        })
                        .min()
                        .unwrap_or(usize::MAX);
                    if min_diff <= 1 {
                        self.remove_clique(id);
                    }
                }
            }
        }

        for ncl in &new_cliques {
            self.insert_clique(ncl.clone());
        }

        // Every new simplex is S ∪ {s, t} for S inside a maximal
        // intersection; |S| <= max_dim - 1 keeps dimension <= max_dim.
        let cap = self.max_dim - 1;
        let mut seen: HashSet<Vec<VertexId>> = HashSet::new();
        let mut batch: Vec<SimplexEntry> = Vec::new();
        for base in &max_intersections {
            let limit = cap.min(base.len());
            for r in 0..=limit {
                for combo in base.iter().copied().combinations(r) {
                    let verts = with_pair(&combo, s, t);
                    if seen.insert(verts.clone()) {
                        batch.push(SimplexEntry::new(verts, e.length));
                    }
                }
            }
        }
        batch.sort_unstable();
        Ok(batch)
    }
}

/// Sorted insertion of {s, t} into a sorted vertex list that contains
/// neither endpoint.
fn with_pair(base: &[VertexId], s: VertexId, t: VertexId) -> Vec<VertexId> {
    let mut out = Vec::with_capacity(base.len() + 2);
    out.extend_from_slice(base);
    let pos = out.binary_search(&s).unwrap_err();
    out.insert(pos, s);
    let pos = out.binary_search(&t).unwrap_err();
    out.insert(pos, t);
    out
}

/// Keeps exactly the sets not strictly contained in another; duplicates
/// collapse to one. Input sets must be sorted; empty sets are allowed.
pub fn maximal_filter(mut sets: Vec<Vec<VertexId>>) -> Vec<Vec<VertexId>> {
    sets.sort_unstable();
    sets.dedup();
    // Longest first: a set can only be contained in an earlier (longer) one.
    sets.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    let mut kept: Vec<Vec<VertexId>> = Vec::new();
    'outer: for set in sets {
        for k in &kept {
            if sorted_subset(&set, k) {
                continue 'outer;
            }
        }
        kept.push(set);
    }
    kept
}
