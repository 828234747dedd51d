//! Shared protocol parameters and overlay construction.

use thiserror::Error;

use crate::overlay::{
    build_regular_expander, compactness_check, feasible_degree, DeltaVariant, GraphParams,
    OverlayError, OverlayGraph,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Overlay(#[from] OverlayError),
    #[error("no overlay passed the compactness check after {0} attempts")]
    Compactness(usize),
}

/// How the probing overlays are sized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GraphMode {
    /// Degrees from the analytical formulas; at simulation scale these exceed the
    /// graph order and the complete graph is used.
    #[default]
    Faithful,
    /// Constant-degree certified expanders with optional overrides.
    Scaled {
        degree: Option<usize>,
        delta: Option<f64>,
        gamma: Option<u64>,
    },
}

impl GraphMode {
    pub fn scaled() -> Self {
        GraphMode::Scaled { degree: None, delta: None, gamma: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub n: usize,
    pub t: usize,
    pub mode: GraphMode,
    pub delta_variant: DeltaVariant,
    /// Seed for overlay construction; shared by all nodes.
    pub graph_seed: u64,
}

/// Degree of the flooding graph `H` and of scaled probing graphs.
pub const SCALED_DEGREE: usize = 8;
/// Spectral slack used for every certified overlay.
pub const SLACK: f64 = 0.1;
const MAX_RETRIES: usize = 100;
const COMPACTNESS_TRIALS: usize = 100;

/// A probing overlay with its local-probing parameters.
#[derive(Debug, Clone)]
pub struct ProbeGraph {
    pub graph: OverlayGraph,
    pub delta: f64,
    pub gamma: u64,
}

impl ProtocolConfig {
    pub fn new(n: usize, t: usize) -> Self {
        Self {
            n,
            t,
            mode: GraphMode::Faithful,
            delta_variant: DeltaVariant::default(),
            graph_seed: 0,
        }
    }

    pub fn with_mode(mut self, mode: GraphMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_graph_seed(mut self, seed: u64) -> Self {
        self.graph_seed = seed;
        self
    }

    /// `1 <= t < n / 5`.
    pub fn require_few(&self) -> Result<(), ConfigError> {
        if self.t == 0 {
            return Err(ConfigError::Precondition("t >= 1 required (little nodes)".into()));
        }
        if 5 * self.t >= self.n {
            return Err(ConfigError::Precondition("t < n/5 required".into()));
        }
        Ok(())
    }

    /// `t < n`.
    pub fn require_many(&self) -> Result<(), ConfigError> {
        if self.t >= self.n {
            return Err(ConfigError::Precondition("t < n required".into()));
        }
        Ok(())
    }

    /// Builds a certified expander and re-draws it until it passes the
    /// compactness spot-check at `delta`.
    pub(crate) fn certified(&self, order: usize, degree: usize, delta: f64, stream: u64) -> Result<OverlayGraph, ConfigError> {
        let degree = feasible_degree(order, degree);
        for attempt in 0..MAX_RETRIES as u64 {
            let seed = crate::seed::mix(crate::seed::mix(self.graph_seed, stream), attempt);
            let g = build_regular_expander(order, degree, SLACK, seed, MAX_RETRIES)?;
            let params = GraphParams::from_formula(order, g.degree() as f64, self.delta_variant);
            let size = (params.ell.ceil() as usize).min(order);
            if compactness_check(&g, size, delta.min(g.min_degree() as f64), COMPACTNESS_TRIALS, seed) {
                return Ok(g);
            }
        }
        Err(ConfigError::Compactness(MAX_RETRIES))
    }

    /// Probing overlay on `order` vertices against `faults` crashes.
    ///
    /// Faithful mode uses the formula degree `requested`; when it reaches
    /// `order - 1` the complete graph is used and `delta` is clipped to
    /// `order - 1 - faults`, the fewest messages a live node can receive.
    pub(crate) fn probe_graph(&self, order: usize, requested: f64, faults: usize, stream: u64) -> Result<ProbeGraph, ConfigError> {
        let default_gamma = 2 + crate::overlay::ceil_log2(order) as u64;
        match self.mode {
            GraphMode::Faithful => {
                let formula = self.delta_variant.delta(requested).max(0.0);
                if requested >= order.saturating_sub(1) as f64 {
                    let cap = order.saturating_sub(1 + faults) as f64;
                    Ok(ProbeGraph {
                        graph: OverlayGraph::complete(order),
                        delta: formula.min(cap),
                        gamma: default_gamma,
                    })
                } else {
                    let degree = requested as usize;
                    let delta = formula.min(degree as f64);
                    let graph = self.certified(order, degree, delta, stream)?;
                    Ok(ProbeGraph { delta: delta.min(graph.min_degree() as f64), graph, gamma: default_gamma })
                }
            }
            GraphMode::Scaled { degree, delta, gamma } => {
                let d = degree.unwrap_or(SCALED_DEGREE).min(order.saturating_sub(1)).max(1);
                let formula = self.delta_variant.delta(d as f64).max(0.0);
                let delta = delta.unwrap_or(formula);
                let graph = if d + 1 >= order {
                    OverlayGraph::complete(order)
                } else {
                    self.certified(order, d, delta, stream)?
                };
                Ok(ProbeGraph {
                    delta: delta.min(graph.min_degree() as f64),
                    graph,
                    gamma: gamma.unwrap_or(default_gamma),
                })
            }
        }
    }

    /// The constant-degree flooding graph `H` on all `n` nodes.
    pub(crate) fn flood_graph(&self, stream: u64) -> Result<OverlayGraph, ConfigError> {
        let d = match self.mode {
            GraphMode::Scaled { degree: Some(d), .. } => d,
            _ => SCALED_DEGREE,
        };
        let d = d.min(self.n.saturating_sub(1)).max(1);
        if d + 1 >= self.n {
            return Ok(OverlayGraph::complete(self.n));
        }
        let delta = self.delta_variant.delta(d as f64).max(0.0);
        self.certified(self.n, d, delta, stream)
    }
}
