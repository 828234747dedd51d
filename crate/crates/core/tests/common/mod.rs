//! Brute-force oracles shared by the overlay tests and the acceptance run.
#![allow(dead_code)]

use expanderquorum::overlay::{Certificate, OverlayGraph};
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Removes deficient vertices one at a time (lowest id first) until none is
/// left; the surviving set is the largest `delta`-survival subset of `b`.
pub fn greedy_peel(g: &OverlayGraph, b: &[usize], delta: f64) -> Vec<usize> {
    let mut inside = vec![false; g.node_count()];
    for &v in b {
        inside[v] = true;
    }
    loop {
        let deficient = (0..g.node_count()).find(|&v| {
            inside[v] && (g.neighbors(v).iter().filter(|&&w| inside[w]).count() as f64) < delta
        });
        match deficient {
            Some(v) => inside[v] = false,
            None => break,
        }
    }
    (0..g.node_count()).filter(|&v| inside[v]).collect()
}

/// BFS distances from `v` inside `alive`.
fn distances(g: &OverlayGraph, v: usize, alive: &[bool]) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.node_count()];
    dist[v] = Some(0);
    let mut frontier = vec![v];
    let mut d = 0;
    while !frontier.is_empty() {
        d += 1;
        let mut next = Vec::new();
        for u in frontier {
            for &w in g.neighbors(u) {
                if alive[w] && dist[w].is_none() {
                    dist[w] = Some(d);
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    dist
}

/// Tries every subset `S` of the radius-`gamma` ball around `v` (in the graph
/// induced by `alive`) that contains `v`.
pub fn dense_neighborhood_brute(g: &OverlayGraph, v: usize, gamma: usize, delta: f64, alive: &[usize]) -> bool {
    let mut is_alive = vec![false; g.node_count()];
    for &u in alive {
        is_alive[u] = true;
    }
    if !is_alive[v] {
        return false;
    }
    let dist = distances(g, v, &is_alive);
    let ball: Vec<usize> = (0..g.node_count()).filter(|&u| u != v && dist[u].is_some_and(|d| d <= gamma)).collect();
    assert!(ball.len() < 24, "ball too large for brute force");
    (0u32..1 << ball.len()).any(|mask| {
        let mut s = vec![false; g.node_count()];
        s[v] = true;
        for (k, &u) in ball.iter().enumerate() {
            s[u] = mask >> k & 1 == 1;
        }
        (0..g.node_count()).filter(|&u| s[u] && dist[u].is_some_and(|d| d < gamma)).all(|u| {
            (g.neighbors(u).iter().filter(|&&w| s[w]).count() as f64) >= delta
        })
    })
}

/// Erdos-Renyi graph with edge probability `p`.
pub fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> OverlayGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    OverlayGraph::from_edges(n, &edges, Certificate::UncertifiedRandom).expect("simple graph")
}

pub fn random_subset(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut s = index::sample(rng, n, k.min(n)).into_vec();
    s.sort_unstable();
    s
}
