use crate::simnet::NodeId;

/// A proper edge coloring: edges sharing an endpoint get distinct colors,
/// so each color class is a matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeColoring {
    colors: usize,
    /// `partner[v][c]` is the other endpoint of `v`'s color-`c` edge.
    partner: Vec<Vec<Option<NodeId>>>,
}

/// Misra-Gries coloring with at most `max_degree + 1` colors. Edges are
/// processed in lexicographic order, so the result is deterministic.
pub fn edge_coloring(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> EdgeColoring {
    let mut list: Vec<(NodeId, NodeId)> = edges
        .into_iter()
        .filter(|&(u, v)| u != v)
        .map(|(u, v)| (u.min(v), u.max(v)))
        .collect();
    list.sort_unstable();
    list.dedup();
    let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for &(u, v) in &list {
        adj[u].push(v);
        adj[v].push(u);
    }
    let palette = adj.iter().map(Vec::len).max().map_or(0, |d| d + 1);
    let mut mg = MisraGries { partner: vec![vec![None; palette]; n] };
    for &(u, v) in &list {
        mg.color_edge(&adj[u], u, v);
    }
    let colors = (0..palette).filter(|&c| mg.partner.iter().any(|p| p[c].is_some())).count();
    debug_assert!((0..colors).all(|c| mg.partner.iter().any(|p| p[c].is_some())));
    EdgeColoring { colors, partner: mg.partner.into_iter().map(|mut p| { p.truncate(colors); p }).collect() }
}

struct MisraGries {
    partner: Vec<Vec<Option<NodeId>>>,
}

impl MisraGries {
    fn free(&self, v: NodeId, c: usize) -> bool {
        self.partner[v][c].is_none()
    }

    fn first_free(&self, v: NodeId) -> usize {
        self.partner[v].iter().position(Option::is_none).expect("palette exceeds degree")
    }

    fn color(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.partner[u].iter().position(|&p| p == Some(v))
    }

    fn set(&mut self, u: NodeId, v: NodeId, c: usize) {
        self.partner[u][c] = Some(v);
        self.partner[v][c] = Some(u);
    }

    fn unset(&mut self, u: NodeId, v: NodeId, c: usize) {
        self.partner[u][c] = None;
        self.partner[v][c] = None;
    }

    fn color_edge(&mut self, neighbors: &[NodeId], u: NodeId, v: NodeId) {
        // Maximal fan of u starting at v.
        let mut fan = vec![v];
        loop {
            let last = *fan.last().expect("non-empty fan");
            let next = neighbors.iter().copied().find(|&x| {
                !fan.contains(&x) && self.color(u, x).is_some_and(|c| self.free(last, c))
            });
            match next {
                Some(x) => fan.push(x),
                None => break,
            }
        }
        let c = self.first_free(u);
        let d = self.first_free(*fan.last().expect("non-empty fan"));
        // Invert the path from u alternating colors d and c.
        if c != d {
            let mut path = Vec::new();
            let (mut cur, mut col) = (u, d);
            while let Some(next) = self.partner[cur][col] {
                path.push((cur, next, col));
                cur = next;
                col = if col == d { c } else { d };
            }
            for &(a, b, col) in &path {
                self.unset(a, b, col);
            }
            for &(a, b, col) in &path {
                self.set(a, b, if col == d { c } else { d });
            }
        }
        // The longest fan prefix ending at a vertex where d is free.
        let mut w = 0;
        for i in 0..fan.len() {
            if i > 0 && !self.color(u, fan[i]).is_some_and(|col| self.free(fan[i - 1], col)) {
                break;
            }
            if self.free(fan[i], d) {
                w = i;
                break;
            }
        }
        for j in 0..w {
            let col = self.color(u, fan[j + 1]).expect("fan edge colored");
            self.unset(u, fan[j + 1], col);
            self.set(u, fan[j], col);
        }
        self.set(u, fan[w], d);
    }
}

impl EdgeColoring {
    pub fn colors(&self) -> usize {
        self.colors
    }

    pub fn partner(&self, v: NodeId, color: usize) -> Option<NodeId> {
        self.partner.get(v).and_then(|p| p.get(color).copied().flatten())
    }

    pub fn color_of(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.partner.get(u)?.iter().position(|&p| p == Some(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coloring_is_proper_and_symmetric() {
        let edges: Vec<(usize, usize)> = (0..6).flat_map(|u| (u + 1..6).map(move |v| (u, v))).collect();
        let c = edge_coloring(6, edges.clone());
        assert!(c.colors() >= 5 && c.colors() <= 6);
        for &(u, v) in &edges {
            let k = c.color_of(u, v).unwrap();
            assert_eq!(c.partner(v, k), Some(u));
        }
    }

    #[test]
    fn empty_graph_has_no_colors() {
        assert_eq!(edge_coloring(3, []).colors(), 0);
    }
}
