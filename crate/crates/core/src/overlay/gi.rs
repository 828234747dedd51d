//! Phase graphs `G_i` for inquiry phases.

use fixedbitset::FixedBitSet;
use rand::seq::index;
use rand::Rng;

use super::props::for_each_subset;
use super::{build_regular_expander, feasible_degree, random_regular, Certificate, OverlayGraph};

/// Which family a phase graph belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GiMode {
    /// Bernoulli union graph with `b_i = 10 * 2^i`.
    Scv,
    /// Regular graph of degree `ceil(64 / (3 (1 - alpha) (1 + 3 alpha))) * 2^i`.
    ManyCrashes { alpha: f64 },
}

/// A phase graph together with the parameters it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct GiGraph {
    pub base: OverlayGraph,
    pub phase_index: u32,
    pub mode: GiMode,
    /// `b_i` in SCV mode.
    pub bernoulli_numerator: Option<u64>,
    /// Requested degree before clipping, in Many-Crashes mode.
    pub target_degree: Option<usize>,
}

impl GiMode {
    /// Base degree `ceil(64 / (3 (1 - alpha) (1 + 3 alpha)))` of the Many-Crashes family.
    pub fn many_crashes_unit(alpha: f64) -> usize {
        (64.0 / (3.0 * (1.0 - alpha) * (1.0 + 3.0 * alpha))).ceil() as usize
    }
}

fn saturating_pow2(i: u32) -> u64 {
    1u64.checked_shl(i).unwrap_or(u64::MAX)
}

/// Builds `G_i` on `node_count` vertices. Deterministic given `seed`.
///
/// # Panics
///
/// If `phase_index == 0` or `alpha` lies outside `[0, 1)`.
pub fn build_gi_graph(node_count: usize, phase_index: u32, mode: GiMode, seed: u64) -> GiGraph {
    assert!(phase_index >= 1, "phase index starts at 1");
    let n = node_count;
    match mode {
        GiMode::Scv => {
            let b = saturating_pow2(phase_index).saturating_mul(10);
            let base = if b >= n as u64 {
                OverlayGraph::complete(n)
            } else {
                let p = b as f64 / n as f64;
                let mut rng = crate::seed::rng(seed, u64::from(phase_index));
                let mut adjacency = vec![Vec::new(); n];
                for u in 0..n {
                    for v in 0..n {
                        if u != v && rng.gen_bool(p) {
                            adjacency[u].push(v);
                            adjacency[v].push(u);
                        }
                    }
                }
                for list in &mut adjacency {
                    list.sort_unstable();
                    list.dedup();
                }
                OverlayGraph::from_adjacency(adjacency, Certificate::UncertifiedRandom)
                    .expect("union of choices is a simple graph")
            };
            GiGraph {
                base,
                phase_index,
                mode,
                bernoulli_numerator: Some(b),
                target_degree: None,
            }
        }
        GiMode::ManyCrashes { alpha } => {
            assert!((0.0..1.0).contains(&alpha), "alpha must lie in [0, 1)");
            let unit = GiMode::many_crashes_unit(alpha);
            let target = (unit as u64).saturating_mul(saturating_pow2(phase_index));
            let target = usize::try_from(target).unwrap_or(usize::MAX);
            let degree = feasible_degree(n, target.min(n.saturating_sub(1)));
            let graph_seed = crate::seed::mix(seed, u64::from(phase_index));
            let base = if n <= 1 {
                OverlayGraph::complete(n)
            } else {
                build_regular_expander(n, degree, 0.1, graph_seed, 20).unwrap_or_else(|_| {
                    let adjacency = random_regular::sample(n, degree, graph_seed);
                    OverlayGraph::from_adjacency(adjacency, Certificate::UncertifiedRandom)
                        .expect("sampler yields simple graphs")
                })
            };
            GiGraph {
                base,
                phase_index,
                mode,
                bernoulli_numerator: None,
                target_degree: Some(target),
            }
        }
    }
}

fn external_neighbors(g: &OverlayGraph, set: &[usize]) -> usize {
    let n = g.node_count();
    let mut inside = FixedBitSet::with_capacity(n);
    for &v in set {
        inside.insert(v);
    }
    let mut outside = FixedBitSet::with_capacity(n);
    for &v in set {
        for &w in g.neighbors(v) {
            if !inside.contains(w) {
                outside.insert(w);
            }
        }
    }
    outside.count_ones(..)
}

/// Whether vertex sets of size `set_size` have at least `required` neighbors
/// outside the set. Exhaustive for at most 20 vertices, otherwise checked on
/// `trials` random sets.
pub fn check_external_neighbors(
    g: &GiGraph,
    set_size: usize,
    required: usize,
    trials: usize,
    seed: u64,
) -> bool {
    let n = g.base.node_count();
    let set_size = set_size.min(n);
    if n <= 20 {
        let mut ok = true;
        for_each_subset(n, set_size, &mut |s| {
            ok = ok && external_neighbors(&g.base, s) >= required;
        });
        return ok;
    }
    let mut rng = crate::seed::rng(seed, 0xE87);
    (0..trials).all(|_| {
        let set = index::sample(&mut rng, n, set_size).into_vec();
        external_neighbors(&g.base, &set) >= required
    })
}
