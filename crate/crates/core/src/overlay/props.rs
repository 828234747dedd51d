//! Combinatorial properties of overlay graphs and their direct checks.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use rand::seq::index;

use super::{OverlayError, OverlayGraph};

fn as_bitset(n: usize, set: &[usize]) -> FixedBitSet {
    let mut bits = FixedBitSet::with_capacity(n);
    for &v in set {
        bits.insert(v);
    }
    bits
}

/// Number of edges with one endpoint in `a` and the other in `b`, by enumeration.
pub fn edges_between(g: &OverlayGraph, a: &[usize], b: &[usize]) -> usize {
    let in_b = as_bitset(g.node_count(), b);
    a.iter()
        .map(|&u| g.neighbors(u).iter().filter(|&&w| in_b.contains(w)).count())
        .sum()
}

/// Checks `|e(A, B) - d |A| |B| / n| <= lambda sqrt(|A| |B|)` with the stored lambda.
pub fn mixing_check(g: &OverlayGraph, a: &[usize], b: &[usize]) -> Result<bool, OverlayError> {
    let in_a = as_bitset(g.node_count(), a);
    if b.iter().any(|&v| in_a.contains(v)) {
        return Err(OverlayError::OverlapError);
    }
    let e = edges_between(g, a, b) as f64;
    let (sa, sb) = (a.len() as f64, b.len() as f64);
    let expected = g.degree() as f64 * sa * sb / g.node_count() as f64;
    // A small absolute tolerance absorbs eigen-solver rounding.
    Ok((e - expected).abs() <= g.lambda() * (sa * sb).sqrt() + 1e-9)
}

/// Largest `delta`-survival subset of `b`: iterates
/// `F(Y) = Y + {v in B \ Y : v has fewer than delta neighbors in B \ Y}` from
/// the empty set to its fixed point `B*` and returns `B \ B*`, sorted.
pub fn survival_subset(g: &OverlayGraph, b: &[usize], delta: f64) -> Vec<usize> {
    let n = g.node_count();
    let mut inside = as_bitset(n, b);
    let mut count: Vec<usize> = (0..n)
        .map(|v| {
            if inside.contains(v) {
                g.neighbors(v).iter().filter(|&&w| inside.contains(w)).count()
            } else {
                0
            }
        })
        .collect();
    loop {
        // One application of F: every deficient vertex is peeled simultaneously,
        // swept in ascending index order.
        let peeled: Vec<usize> = inside.ones().filter(|&v| (count[v] as f64) < delta).collect();
        if peeled.is_empty() {
            break;
        }
        for &v in &peeled {
            inside.set(v, false);
        }
        for &v in &peeled {
            for &w in g.neighbors(v) {
                if inside.contains(w) {
                    count[w] -= 1;
                }
            }
        }
    }
    inside.ones().collect()
}

/// Spot-check of compactness: for `trials` random sets `B` of `set_size`
/// vertices, the largest `delta`-survival subset keeps at least `ceil(3|B|/4)`.
pub fn compactness_check(g: &OverlayGraph, set_size: usize, delta: f64, trials: usize, seed: u64) -> bool {
    let n = g.node_count();
    let size = set_size.min(n);
    let need = (3 * size).div_ceil(4);
    let mut rng = crate::seed::rng(seed, 0xC0C);
    (0..trials).all(|_| {
        let b = index::sample(&mut rng, n, size).into_vec();
        survival_subset(g, &b, delta).len() >= need
    })
}

/// Breadth-first distances from `v` within the subgraph induced by `alive`.
pub(crate) fn distances_within(g: &OverlayGraph, v: usize, alive: &FixedBitSet) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.node_count()];
    if !alive.contains(v) {
        return dist;
    }
    dist[v] = Some(0);
    let mut queue = VecDeque::from([v]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for &w in g.neighbors(u) {
            if alive.contains(w) && dist[w].is_none() {
                dist[w] = Some(du + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Whether some `S` with `v in S`, contained in the radius-`gamma` ball of `v`
/// in the subgraph induced by `alive`, gives every member within radius
/// `gamma - 1` at least `delta` neighbors in `S`.
///
/// Computed exactly: the valid sets are closed under union, so peeling the
/// full ball down to its largest valid subset decides the question.
pub fn dense_neighborhood_exists(
    g: &OverlayGraph,
    v: usize,
    gamma: usize,
    delta: f64,
    alive: &[usize],
) -> bool {
    let alive = as_bitset(g.node_count(), alive);
    if !alive.contains(v) {
        return false;
    }
    let dist = distances_within(g, v, &alive);
    let radius = |u: usize| dist[u].filter(|&d| d <= gamma);
    let mut inside = FixedBitSet::with_capacity(g.node_count());
    for u in 0..g.node_count() {
        if radius(u).is_some() {
            inside.insert(u);
        }
    }
    loop {
        let peeled: Vec<usize> = inside
            .ones()
            .filter(|&u| radius(u).is_some_and(|d| d < gamma))
            .filter(|&u| {
                let k = g.neighbors(u).iter().filter(|&&w| inside.contains(w)).count();
                (k as f64) < delta
            })
            .collect();
        if peeled.is_empty() {
            break;
        }
        for u in peeled {
            inside.set(u, false);
        }
    }
    inside.contains(v)
}

/// Verifies that disjoint `ell`-sets are joined by an edge: exhaustively for
/// graphs of at most 20 vertices, otherwise on `trials` random pairs.
pub fn check_expansion(
    g: &OverlayGraph,
    ell: usize,
    trials: usize,
    seed: u64,
) -> Result<bool, OverlayError> {
    let n = g.node_count();
    if 2 * ell > n {
        return Err(OverlayError::SizeError { size: 2 * ell, node_count: n });
    }
    if ell == 0 {
        return Ok(true);
    }
    // Disjoint ell-sets A, B with no edge exist iff some ell-set A leaves at
    // least ell vertices outside A and its neighborhood.
    let escapes = |a: &[usize]| {
        let mut covered = as_bitset(n, a);
        for &u in a {
            for &w in g.neighbors(u) {
                covered.insert(w);
            }
        }
        n - covered.count_ones(..) >= ell
    };
    if n <= 20 {
        let mut found = false;
        for_each_subset(n, ell, &mut |a| {
            if !found && escapes(a) {
                found = true;
            }
        });
        return Ok(!found);
    }
    let mut rng = crate::seed::rng(seed, 0x5EED);
    for _ in 0..trials {
        let picked = index::sample(&mut rng, n, 2 * ell).into_vec();
        let (a, b) = picked.split_at(ell);
        if edges_between(g, a, b) == 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
pub(crate) fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::overlay::{build_regular_expander, Certificate};

    fn path(n: usize) -> OverlayGraph {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        OverlayGraph::from_edges(n, &edges, Certificate::UncertifiedRandom).unwrap()
    }

    #[test]
    fn mixing_on_k6() {
        let k6 = OverlayGraph::complete(6);
        assert_eq!(edges_between(&k6, &[0, 1], &[2, 3]), 4);
        assert!(mixing_check(&k6, &[0, 1], &[2, 3]).unwrap());
        assert_eq!(mixing_check(&k6, &[0], &[0]), Err(OverlayError::OverlapError));
    }

    #[test]
    fn survival_on_complete_graph() {
        let k6 = OverlayGraph::complete(6);
        let all: Vec<usize> = (0..6).collect();
        assert_eq!(survival_subset(&k6, &all, 5.0), all);
        assert!(survival_subset(&k6, &[0, 1, 2], 3.0).is_empty());
        assert_eq!(survival_subset(&k6, &[0, 1, 2], 2.0), vec![0, 1, 2]);
    }

    #[test]
    fn survival_peels_a_path_completely() {
        let p = path(8);
        let all: Vec<usize> = (0..8).collect();
        assert!(survival_subset(&p, &all, 2.0).is_empty());
        assert_eq!(survival_subset(&p, &all, 1.0), all);
    }

    #[test]
    fn dense_neighborhood_basics() {
        let k6 = OverlayGraph::complete(6);
        let all: Vec<usize> = (0..6).collect();
        assert!(dense_neighborhood_exists(&k6, 0, 1, 5.0, &all));
        assert!(!dense_neighborhood_exists(&k6, 0, 1, 5.0, &[0, 1, 2, 3, 4]));
        let p = path(8);
        let all: Vec<usize> = (0..8).collect();
        assert!(dense_neighborhood_exists(&p, 0, 3, 0.0, &all));
        let dense: Vec<usize> = (0..8)
            .filter(|&v| dense_neighborhood_exists(&p, v, 2, 2.0, &all))
            .collect();
        assert_eq!(dense, vec![2, 3, 4, 5]);
    }

    #[test]
    fn expansion_examples() {
        assert!(check_expansion(&OverlayGraph::complete(8), 2, 10, 0).unwrap());
        let mut edges = Vec::new();
        for base in [0, 4] {
            for u in 0..4 {
                for v in (u + 1)..4 {
                    edges.push((base + u, base + v));
                }
            }
        }
        let two_k4 = OverlayGraph::from_edges(8, &edges, Certificate::UncertifiedRandom).unwrap();
        assert!(!check_expansion(&two_k4, 4, 10, 0).unwrap());
        assert!(matches!(
            check_expansion(&two_k4, 5, 10, 0),
            Err(OverlayError::SizeError { .. })
        ));
        let g = build_regular_expander(128, 12, 0.1, 11, 100).unwrap();
        let ell = (4.0 * 128.0 * 12f64.powf(-1.0 / 8.0)).ceil() as usize;
        // ell exceeds n / 2 at this size; the largest checkable size is n / 2.
        let ell = ell.min(64);
        assert!(check_expansion(&g, ell, 500, 3).unwrap());
    }

    #[test]
    fn compactness_on_small_graphs() {
        assert!(compactness_check(&OverlayGraph::complete(10), 8, 7.0, 20, 0));
        assert!(!compactness_check(&path(10), 8, 2.0, 20, 0));
    }

    #[test]
    fn subsets_enumerated() {
        let mut count = 0;
        for_each_subset(6, 3, &mut |_| count += 1);
        assert_eq!(count, 20);
    }
}
