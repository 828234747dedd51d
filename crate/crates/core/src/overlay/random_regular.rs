use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;

/// Samples a uniform-ish simple `degree`-regular graph with the pairing model,
/// re-pairing only the stubs that formed loops or parallel edges. Dense
/// requests are built as complements of sparse ones.
pub(super) fn sample(node_count: usize, degree: usize, seed: u64) -> Vec<Vec<usize>> {
    let complement = 2 * degree > node_count - 1;
    let sparse_degree = if complement {
        node_count - 1 - degree
    } else {
        degree
    };
    let mut rng = crate::seed::rng(seed, 0);
    let edges = loop {
        if let Some(edges) = try_pairing(node_count, sparse_degree, &mut rng) {
            break edges;
        }
    };
    let mut adjacency = vec![Vec::new(); node_count];
    if complement {
        for u in 0..node_count {
            for v in (u + 1)..node_count {
                if !edges.contains(&(u, v)) {
                    adjacency[u].push(v);
                    adjacency[v].push(u);
                }
            }
        }
    } else {
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
    }
    adjacency
}

fn try_pairing(
    node_count: usize,
    degree: usize,
    rng: &mut impl rand::Rng,
) -> Option<BTreeSet<(usize, usize)>> {
    let mut edges = BTreeSet::new();
    let mut stubs: Vec<usize> = (0..node_count)
        .flat_map(|v| std::iter::repeat_n(v, degree))
        .collect();
    while !stubs.is_empty() {
        let mut leftover: BTreeMap<usize, usize> = BTreeMap::new();
        stubs.shuffle(rng);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a != b && !edges.contains(&(a, b)) {
                edges.insert((a, b));
            } else {
                *leftover.entry(a).or_default() += 1;
                *leftover.entry(b).or_default() += 1;
            }
        }
        if !can_progress(&edges, &leftover) {
            return None;
        }
        stubs = leftover
            .iter()
            .flat_map(|(&v, &k)| std::iter::repeat_n(v, k))
            .collect();
    }
    Some(edges)
}

fn can_progress(edges: &BTreeSet<(usize, usize)>, leftover: &BTreeMap<usize, usize>) -> bool {
    if leftover.is_empty() {
        return true;
    }
    let nodes: Vec<usize> = leftover.keys().copied().collect();
    nodes.iter().enumerate().any(|(i, &a)| {
        nodes[i + 1..]
            .iter()
            .any(|&b| !edges.contains(&(a, b)))
    })
}
