//! Core vocabulary: vertices, edges, cliques, simplices, persistence
//! intervals, and the global simplex ordering used by the reduction stream.

use std::cell::Cell;
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

/// Dense 0-based vertex index into the input point set.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Violation of a structural invariant in deserialized or caller-built data.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum InvariantViolation {
    #[error("clique must be non-empty")]
    EmptyClique,
    #[error("simplex must be non-empty")]
    EmptySimplex,
    #[error("vertex list must be strictly increasing")]
    UnsortedVertices,
    #[error("filtration value is NaN")]
    NanFiltration,
}

pub(crate) fn strictly_sorted(vertices: &[VertexId]) -> bool {
    vertices.windows(2).all(|w| w[0] < w[1])
}

/// `a` is a (not necessarily strict) subset of `b`; both strictly sorted.
pub fn sorted_subset(a: &[VertexId], b: &[VertexId]) -> bool {
    if a.len() > b.len() {
        return false;
    }
    let mut ib = 0;
    for &va in a {
        while ib < b.len() && b[ib] < va {
            ib += 1;
        }
        if ib == b.len() || b[ib] != va {
            return false;
        }
        ib += 1;
    }
    true
}

/// Intersection of two strictly sorted vertex lists.
pub fn sorted_intersection(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut ia, mut ib) = (0, 0);
    while ia < a.len() && ib < b.len() {
        match a[ia].cmp(&b[ib]) {
            Ordering::Less => ia += 1,
            Ordering::Greater => ib += 1,
            Ordering::Equal => {
                out.push(a[ia]);
                ia += 1;
                ib += 1;
            }
        }
    }
    out
}

/// Size of `a \ b`; both strictly sorted.
pub fn sorted_difference_len(a: &[VertexId], b: &[VertexId]) -> usize {
    let mut count = 0;
    let mut ib = 0;
    for &va in a {
        while ib < b.len() && b[ib] < va {
            ib += 1;
        }
        if ib == b.len() || b[ib] != va {
            count += 1;
        }
    }
    count
}

/// Undirected weighted edge, canonically oriented `source < target`.
#[derive(Clone, Copy, Debug)]
pub struct Edge {
    pub source: VertexId,
    pub target: VertexId,
    pub length: f64,
}

impl Edge {
    /// Canonicalizing constructor; panics on self-loops (rejected upstream).
    pub fn new(a: VertexId, b: VertexId, length: f64) -> Edge {
        assert!(a != b, "self-loop edge on vertex {a}");
        let (source, target) = if a < b { (a, b) } else { (b, a) };
        Edge {
            source,
            target,
            length,
        }
    }

    /// File order: ascending (length, source, target). Lengths compare by
    /// IEEE-754 total order, so ties are broken deterministically.
    pub fn file_order(&self, other: &Edge) -> Ordering {
        self.length
            .total_cmp(&other.length)
            .then(self.source.cmp(&other.source))
            .then(self.target.cmp(&other.target))
    }
}

impl PartialEq for Edge {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
            && self.target == other.target
            && self.length.to_bits() == other.length.to_bits()
    }
}

impl Eq for Edge {}

impl Hash for Edge {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.source.hash(state);
        self.target.hash(state);
        self.length.to_bits().hash(state);
    }
}

impl PartialOrd for Edge {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Edge {
    fn cmp(&self, other: &Self) -> Ordering {
        self.file_order(other)
    }
}

/// Non-empty, strictly increasing vertex list; the unit of the
/// maximal-clique registry.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Clique {
    vertices: Vec<VertexId>,
}

impl Clique {
    pub fn singleton(v: VertexId) -> Clique {
        Clique { vertices: vec![v] }
    }

    /// Validating constructor for untrusted (deserialized) data.
    pub fn from_sorted(vertices: Vec<VertexId>) -> Result<Clique, InvariantViolation> {
        if vertices.is_empty() {
            return Err(InvariantViolation::EmptyClique);
        }
        if !strictly_sorted(&vertices) {
            return Err(InvariantViolation::UnsortedVertices);
        }
        Ok(Clique { vertices })
    }

    pub(crate) fn from_sorted_unchecked(vertices: Vec<VertexId>) -> Clique {
        debug_assert!(!vertices.is_empty() && strictly_sorted(&vertices));
        Clique { vertices }
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn is_subset_of(&self, other: &Clique) -> bool {
        sorted_subset(&self.vertices, &other.vertices)
    }

    pub fn intersection(&self, other: &Clique) -> Vec<VertexId> {
        sorted_intersection(&self.vertices, &other.vertices)
    }
}

impl fmt::Display for Clique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

thread_local! {
    static LIVE_ENTRIES: Cell<i64> = const { Cell::new(0) };
}

/// Number of `SimplexEntry` values currently alive on this thread.
///
/// The streaming pipeline uses this to verify that at most one edge's
/// emission batch lives outside the persistence table at any time.
pub fn live_simplex_entries() -> i64 {
    LIVE_ENTRIES.with(|c| c.get())
}

/// A simplex together with the filtration value at which it enters the
/// complex (the length of its longest edge, 0 for vertices).
#[derive(Debug)]
pub struct SimplexEntry {
    vertices: Vec<VertexId>,
    filtration: f64,
}

impl SimplexEntry {
    /// Panics if `vertices` is empty or not strictly increasing, or if the
    /// filtration is NaN. Producers build simplices sorted; a violation here
    /// is a bug, not an input error.
    pub fn new(vertices: Vec<VertexId>, filtration: f64) -> SimplexEntry {
        assert!(!vertices.is_empty(), "empty simplex");
        assert!(
            strictly_sorted(&vertices),
            "simplex vertices not strictly sorted: {vertices:?}"
        );
        assert!(!filtration.is_nan(), "NaN filtration");
        LIVE_ENTRIES.with(|c| c.set(c.get() + 1));
        SimplexEntry {
            vertices,
            filtration,
        }
    }

    /// Non-panicking constructor for deserialized data.
    pub fn try_new(
        vertices: Vec<VertexId>,
        filtration: f64,
    ) -> Result<SimplexEntry, InvariantViolation> {
        if vertices.is_empty() {
            return Err(InvariantViolation::EmptySimplex);
        }
        if !strictly_sorted(&vertices) {
            return Err(InvariantViolation::UnsortedVertices);
        }
        if filtration.is_nan() {
            return Err(InvariantViolation::NanFiltration);
        }
        Ok(SimplexEntry::new(vertices, filtration))
    }

    /// 0-simplex at filtration 0.
    pub fn vertex(v: VertexId) -> SimplexEntry {
        SimplexEntry::new(vec![v], 0.0)
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn filtration(&self) -> f64 {
        self.filtration
    }

    pub fn dimension(&self) -> usize {
        self.vertices.len() - 1
    }
}

impl Clone for SimplexEntry {
    fn clone(&self) -> Self {
        LIVE_ENTRIES.with(|c| c.set(c.get() + 1));
        SimplexEntry {
            vertices: self.vertices.clone(),
            filtration: self.filtration,
        }
    }
}

impl Drop for SimplexEntry {
    fn drop(&mut self) {
        LIVE_ENTRIES.with(|c| c.set(c.get() - 1));
    }
}

impl PartialEq for SimplexEntry {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.filtration.to_bits() == other.filtration.to_bits()
    }
}

impl Eq for SimplexEntry {}

impl Hash for SimplexEntry {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.vertices.hash(state);
        self.filtration.to_bits().hash(state);
    }
}

impl fmt::Display for SimplexEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]@{}", self.filtration)
    }
}

/// Total stream order: (filtration, dimension, lexicographic vertices).
/// Every facet of a simplex sorts strictly before it.
pub fn simplex_order(a: &SimplexEntry, b: &SimplexEntry) -> Ordering {
    a.filtration
        .total_cmp(&b.filtration)
        .then_with(|| a.vertices.len().cmp(&b.vertices.len()))
        .then_with(|| a.vertices.cmp(&b.vertices))
}

impl PartialOrd for SimplexEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimplexEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        simplex_order(self, other)
    }
}

/// A persistence interval; `death` is `f64::INFINITY` while the class is
/// still open. Zero-length intervals (birth == death) are recorded, not
/// suppressed; readers may filter them.
#[derive(Clone, Copy, Debug)]
pub struct Interval {
    pub dimension: usize,
    pub birth: f64,
    pub death: f64,
}

impl Interval {
    pub fn closed(dimension: usize, birth: f64, death: f64) -> Interval {
        debug_assert!(birth <= death, "interval born after death");
        Interval {
            dimension,
            birth,
            death,
        }
    }

    pub fn open(dimension: usize, birth: f64) -> Interval {
        Interval {
            dimension,
            birth,
            death: f64::INFINITY,
        }
    }

    pub fn is_open(&self) -> bool {
        self.death == f64::INFINITY
    }

    pub fn length(&self) -> f64 {
        self.death - self.birth
    }

    /// Canonical report order: (dimension, birth, death).
    pub fn report_order(&self, other: &Interval) -> Ordering {
        self.dimension
            .cmp(&other.dimension)
            .then_with(|| self.birth.total_cmp(&other.birth))
            .then_with(|| self.death.total_cmp(&other.death))
    }
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension
            && self.birth.to_bits() == other.birth.to_bits()
            && self.death.to_bits() == other.death.to_bits()
    }
}

impl Eq for Interval {}

impl Hash for Interval {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.dimension.hash(state);
        self.birth.to_bits().hash(state);
        self.death.to_bits().hash(state);
    }
}

impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.report_order(other)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_open() {
            write!(f, "H{} [{}, inf)", self.dimension, self.birth)
        } else {
            write!(f, "H{} [{}, {})", self.dimension, self.birth, self.death)
        }
    }
}
