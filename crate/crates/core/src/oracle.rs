//! Independent brute-force references used by tests and the selfcheck
//! command: batch maximal-clique enumeration, batch complex construction,
//! and full boundary-matrix reduction. They share only the core vocabulary
//! with the streaming engine; any divergence between the two is a bug in
//! one of them, never something to reconcile automatically.
//!
//! These are exponential-time at test scale by design.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::points::{PointCloud, PointMetric};
use crate::simplex::{Interval, SimplexEntry, VertexId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("stream not in filtration order at position {0}")]
    StreamOrder(usize),
    #[error("facet of stream entry {0} missing")]
    MissingFacet(usize),
}

/// Small dense undirected graph, adjacency-matrix backed.
#[derive(Debug, Clone)]
pub struct DenseGraph {
    n: usize,
    adjacency: Vec<bool>,
}

impl DenseGraph {
    pub fn new(n: usize) -> DenseGraph {
        DenseGraph {
            n,
            adjacency: vec![false; n * n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> DenseGraph {
        let mut g = DenseGraph::new(n);
        for &(a, b) in edges {
            g.add_edge(a as usize, b as usize);
        }
        g
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a != b && a < self.n && b < self.n);
        self.adjacency[a * self.n + b] = true;
        self.adjacency[b * self.n + a] = true;
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a * self.n + b]
    }

    fn neighbours(&self, v: usize) -> BTreeSet<usize> {
        (0..self.n).filter(|&u| self.has_edge(v, u)).collect()
    }
}

/// All maximal cliques of `g`, as canonically sorted vertex lists.
pub fn bron_kerbosch(g: &DenseGraph) -> BTreeSet<Vec<VertexId>> {
    debug_assert!(g.vertex_count() <= 32, "oracle is meant for test scale");
    let mut found = BTreeSet::new();
    let p: BTreeSet<usize> = (0..g.vertex_count()).collect();
    let mut r = Vec::new();
    let mut x = BTreeSet::new();
    expand(g, &mut r, p, &mut x, &mut found);
    found
}

fn expand(
    g: &DenseGraph,
    r: &mut Vec<usize>,
    mut p: BTreeSet<usize>,
    x: &mut BTreeSet<usize>,
    found: &mut BTreeSet<Vec<VertexId>>,
) {
    if p.is_empty() && x.is_empty() {
        let mut clique: Vec<VertexId> = r.iter().map(|&v| VertexId(v as u32)).collect();
        clique.sort_unstable();
        found.insert(clique);
        return;
    }
    // Pivot on the vertex with most neighbours in P.
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| p.iter().filter(|&&v| g.has_edge(u, v)).count());
    let candidates: Vec<usize> = match pivot {
        Some(u) => p.iter().copied().filter(|&v| !g.has_edge(u, v)).collect(),
        None => p.iter().copied().collect(),
    };
    for v in candidates {
        let nv = g.neighbours(v);
        r.push(v);
        let p_next: BTreeSet<usize> = p.intersection(&nv).copied().collect();
        let mut x_next: BTreeSet<usize> = x.intersection(&nv).copied().collect();
        expand(g, r, p_next, &mut x_next, found);
        r.pop();
        p.remove(&v);
        x.insert(v);
    }
}

/// Batch construction of the filtered clique complex: every clique of the
/// epsilon-neighbourhood graph with at most max_dim + 1 vertices, filtration
/// equal to its longest internal edge, sorted by stream order.
pub fn rips_batch(
    cloud: &PointCloud,
    metric: PointMetric,
    epsilon: f64,
    max_dim: usize,
) -> Vec<SimplexEntry> {
    let n = cloud.point_count();
    debug_assert!(n <= 64, "oracle is meant for test scale");
    // Own distance evaluation, kept to the same operation order as the
    // streaming pipeline so filtration values agree bit for bit.
    let dist = |i: usize, j: usize| -> f64 {
        let (a, b) = (cloud.point(i), cloud.point(j));
        match metric {
            PointMetric::Euclidean => {
                let mut acc = 0.0;
                for k in 0..a.len() {
                    let d = a[k] - b[k];
                    acc += d * d;
                }
                acc.sqrt()
            }
            PointMetric::Manhattan => {
                let mut acc = 0.0;
                for k in 0..a.len() {
                    acc += (a[k] - b[k]).abs();
                }
                acc
            }
        }
    };
    let mut d = vec![0.0; n * n];
    let mut adjacent = vec![false; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = dist(i, j);
            d[i * n + j] = dij;
            d[j * n + i] = dij;
            let close = dij <= epsilon;
            adjacent[i * n + j] = close;
            adjacent[j * n + i] = close;
        }
    }

    let mut out = Vec::new();
    let mut prefix: Vec<usize> = Vec::new();
    fn grow(
        n: usize,
        adjacent: &[bool],
        d: &[f64],
        max_vertices: usize,
        prefix: &mut Vec<usize>,
        filtration: f64,
        first_candidate: usize,
        out: &mut Vec<SimplexEntry>,
    ) {
        for v in first_candidate..n {
            if !prefix.iter().all(|&u| adjacent[u * n + v]) {
                continue;
            }
            let mut filt = filtration;
            for &u in prefix.iter() {
                filt = filt.max(d[u * n + v]);
            }
            prefix.push(v);
            out.push(SimplexEntry::new(
                prefix.iter().map(|&u| VertexId(u as u32)).collect(),
                filt,
            ));
            if prefix.len() < max_vertices {
                grow(n, adjacent, d, max_vertices, prefix, filt, v + 1, out);
            }
            prefix.pop();
        }
    }
    grow(n, &adjacent, &d, max_dim + 1, &mut prefix, 0.0, 0, &mut out);
    out.sort_unstable();
    out
}

/// Textbook full boundary-matrix column reduction over Z/2: no marking, no
/// cascades; every reduced column is kept. Reports intervals for every
/// dimension present in the stream, open ones with death = +inf.
pub fn barcode_bruteforce(stream: &[SimplexEntry]) -> Result<Vec<Interval>, OracleError> {
    use std::collections::HashMap;

    let mut index_of: HashMap<&[VertexId], usize> = HashMap::with_capacity(stream.len());
    for (j, s) in stream.iter().enumerate() {
        if j > 0 && crate::simplex::simplex_order(&stream[j - 1], s) != std::cmp::Ordering::Less {
            return Err(OracleError::StreamOrder(j));
        }
        index_of.insert(s.vertices(), j);
    }

    let mut columns: Vec<Option<Vec<usize>>> = vec![None; stream.len()];
    let mut low_to_col: HashMap<usize, usize> = HashMap::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut cycle_col: Vec<bool> = vec![false; stream.len()];

    for (j, s) in stream.iter().enumerate() {
        let mut col: Vec<usize> = Vec::new();
        if s.dimension() > 0 {
            let verts = s.vertices();
            for skip in 0..verts.len() {
                let facet: Vec<VertexId> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                let &idx = index_of
                    .get(facet.as_slice())
                    .ok_or(OracleError::MissingFacet(j))?;
                col.push(idx);
            }
            col.sort_unstable();
        }
        loop {
            let Some(&low) = col.last() else { break };
            let Some(&k) = low_to_col.get(&low) else {
                break;
            };
            let other = columns[k].as_ref().expect("reduced column stored");
            col = xor_sorted(&col, other);
        }
        if let Some(&low) = col.last() {
            low_to_col.insert(low, j);
            pairs.push((low, j));
            columns[j] = Some(col);
        } else {
            cycle_col[j] = true;
        }
    }

    let mut intervals = Vec::new();
    for &(birth, death) in &pairs {
        intervals.push(Interval::closed(
            stream[birth].dimension(),
            stream[birth].filtration(),
            stream[death].filtration(),
        ));
    }
    for (j, s) in stream.iter().enumerate() {
        if cycle_col[j] && !low_to_col.contains_key(&j) {
            intervals.push(Interval::open(s.dimension(), s.filtration()));
        }
    }
    intervals.sort_unstable();
    Ok(intervals)
}

fn xor_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
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
    out
}
