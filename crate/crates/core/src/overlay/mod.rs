//! Overlay graphs used by the protocols.
//!
//! The protocols communicate only along the edges of a few fixed overlay
//! graphs that every node can compute from `(n, t)` and a shared seed:
//!
//! * a regular expander `G` for flooding and local probing,
//! * a regular expander `H` for spreading a common value,
//! * a family `G_i` of denser graphs used in inquiry phases.
//!
//! Regular expanders are sampled with the pairing model and kept only when
//! the measured second eigenvalue certifies them as near-Ramanujan. When the
//! requested degree reaches `n - 1` the complete graph is used instead.

mod gi;
mod params;
mod props;
mod random_regular;
mod spectral;
mod text;

pub use gi::{build_gi_graph, check_external_neighbors, GiGraph, GiMode};
pub use params::{ceil_log2, DeltaVariant, GraphParams};
pub use props::{
    check_expansion, compactness_check, dense_neighborhood_exists, edges_between, mixing_check,
    survival_subset,
};
pub use spectral::{eigen_lambda, DENSE_EIGEN_LIMIT, POWER_ITERATION_TOLERANCE};

use std::fmt;

use thiserror::Error;

/// Errors raised while building or checking overlay graphs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OverlayError {
    #[error("no {degree}-regular graph on {node_count} vertices: node_count * degree is odd")]
    ParityError { node_count: usize, degree: usize },
    #[error("invalid graph parameters: {0}")]
    InvalidParameters(String),
    #[error("no certified graph after {retries} attempts (best lambda {best_lambda:.4}, bound {bound:.4})")]
    CertificationFailed {
        retries: usize,
        best_lambda: f64,
        bound: f64,
    },
    #[error("vertex sets overlap")]
    OverlapError,
    #[error("set size {size} is too large for a graph on {node_count} vertices")]
    SizeError { size: usize, node_count: usize },
    #[error("malformed graph text at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// How the spectral quality of a graph was established.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Certificate {
    /// `lambda <= 2 * sqrt(d - 1) * (1 + slack)` was verified.
    CertifiedRamanujan(f64),
    /// The complete graph, used when the requested degree is at least `n - 1`.
    CompleteFallback,
    /// No spectral guarantee (e.g. Bernoulli phase graphs).
    UncertifiedRandom,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        !matches!(self, Certificate::UncertifiedRandom)
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::CertifiedRamanujan(slack) => write!(f, "ramanujan:{slack}"),
            Certificate::CompleteFallback => f.write_str("complete"),
            Certificate::UncertifiedRandom => f.write_str("uncertified"),
        }
    }
}

/// Ramanujan bound `2 * sqrt(d - 1)`.
pub fn ramanujan_bound(degree: usize) -> f64 {
    2.0 * ((degree.max(1) - 1) as f64).sqrt()
}

/// An undirected simple graph on vertices `0..node_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayGraph {
    node_count: usize,
    degree: usize,
    adjacency: Vec<Vec<usize>>,
    lambda: f64,
    certificate: Certificate,
}

impl OverlayGraph {
    /// Builds a graph from neighbor lists, computing `lambda`.
    ///
    /// Lists are sorted and checked for symmetry, self-loops and duplicates.
    /// `degree` is recorded as the maximum degree.
    pub fn from_adjacency(
        adjacency: Vec<Vec<usize>>,
        certificate: Certificate,
    ) -> Result<Self, OverlayError> {
        let mut graph = Self::from_parts_unchecked(adjacency, 0.0, certificate)?;
        graph.lambda = eigen_lambda(&graph);
        Ok(graph)
    }

    /// Builds a graph from an undirected edge list.
    pub fn from_edges(
        node_count: usize,
        edges: &[(usize, usize)],
        certificate: Certificate,
    ) -> Result<Self, OverlayError> {
        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(OverlayError::InvalidParameters(format!(
                    "edge ({u}, {v}) outside 0..{node_count}"
                )));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Self::from_adjacency(adjacency, certificate)
    }

    pub(crate) fn from_parts_unchecked(
        mut adjacency: Vec<Vec<usize>>,
        lambda: f64,
        certificate: Certificate,
    ) -> Result<Self, OverlayError> {
        let node_count = adjacency.len();
        for (v, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(OverlayError::InvalidParameters(format!(
                    "duplicate edge at vertex {v}"
                )));
            }
            if list.binary_search(&v).is_ok() {
                return Err(OverlayError::InvalidParameters(format!("self-loop at vertex {v}")));
            }
            if list.last().is_some_and(|&w| w >= node_count) {
                return Err(OverlayError::InvalidParameters(format!(
                    "vertex {v} has a neighbor outside the graph"
                )));
            }
        }
        for (v, list) in adjacency.iter().enumerate() {
            for &w in list {
                if adjacency[w].binary_search(&v).is_err() {
                    return Err(OverlayError::InvalidParameters(format!(
                        "edge {v}-{w} is not symmetric"
                    )));
                }
            }
        }
        let degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self {
            node_count,
            degree,
            adjacency,
            lambda,
            certificate,
        })
    }

    /// The complete graph `K_m`.
    pub fn complete(node_count: usize) -> Self {
        let adjacency = (0..node_count)
            .map(|v| (0..node_count).filter(|&w| w != v).collect())
            .collect();
        Self {
            node_count,
            degree: node_count.saturating_sub(1),
            adjacency,
            lambda: if node_count > 1 { 1.0 } else { 0.0 },
            certificate: Certificate::CompleteFallback,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Maximum vertex degree (the regular degree for regular graphs).
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn min_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn certificate(&self) -> Certificate {
        self.certificate
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_regular(&self) -> bool {
        self.adjacency.iter().all(|l| l.len() == self.degree)
    }

    pub fn is_complete(&self) -> bool {
        self.adjacency
            .iter()
            .all(|l| l.len() + 1 == self.node_count)
    }

    /// Undirected edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, l)| l.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }
}

/// Samples a `degree`-regular graph on `node_count` vertices and certifies
/// `lambda <= 2 * sqrt(degree - 1) * (1 + slack)`.
///
/// Requests with `degree >= node_count - 1` return the complete graph.
/// Attempt `k` uses a generator seeded from `(seed, k)`, so the result is a
/// pure function of the arguments.
pub fn build_regular_expander(
    node_count: usize,
    degree: usize,
    slack: f64,
    seed: u64,
    max_retries: usize,
) -> Result<OverlayGraph, OverlayError> {
    if node_count == 0 {
        return Err(OverlayError::InvalidParameters("node_count must be positive".into()));
    }
    if degree == 0 {
        return Err(OverlayError::InvalidParameters("degree must be positive".into()));
    }
    if !(slack >= 0.0) {
        return Err(OverlayError::InvalidParameters(format!("slack {slack} is negative")));
    }
    if degree + 1 >= node_count {
        return Ok(OverlayGraph::complete(node_count));
    }
    if (node_count * degree) % 2 == 1 {
        return Err(OverlayError::ParityError { node_count, degree });
    }
    let bound = ramanujan_bound(degree) * (1.0 + slack);
    let mut best_lambda = f64::INFINITY;
    for attempt in 0..max_retries.max(1) {
        let attempt_seed = crate::seed::mix(seed, attempt as u64);
        let adjacency = random_regular::sample(node_count, degree, attempt_seed);
        let mut graph = OverlayGraph::from_parts_unchecked(
            adjacency,
            0.0,
            Certificate::CertifiedRamanujan(slack),
        )?;
        let lambda = eigen_lambda(&graph);
        if lambda <= bound {
            graph.lambda = lambda;
            return Ok(graph);
        }
        best_lambda = best_lambda.min(lambda);
    }
    Err(OverlayError::CertificationFailed {
        retries: max_retries,
        best_lambda,
        bound,
    })
}

/// Nearest degree `<= requested` (but at least 1) for which a regular graph on
/// `node_count` vertices exists; the complete graph when `requested >= n - 1`.
pub fn feasible_degree(node_count: usize, requested: usize) -> usize {
    let top = node_count.saturating_sub(1);
    let d = requested.clamp(1, top.max(1));
    if d >= top || (node_count * d).is_multiple_of(2) {
        d
    } else if d > 1 {
        d - 1
    } else {
        d + 1
    }
}
