use serde::{Deserialize, Serialize};

use super::OverlayGraph;

/// Which form of the survival threshold `delta(d)` to use.
///
/// `Minus1` is `(d^{7/8} - d^{5/8}) / 2`; `Minus2` is `(d^{7/8} - 2 d^{5/8}) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DeltaVariant {
    #[default]
    Minus1,
    Minus2,
}

impl DeltaVariant {
    pub fn delta(self, degree: f64) -> f64 {
        let high = degree.powf(7.0 / 8.0);
        let low = degree.powf(5.0 / 8.0);
        match self {
            DeltaVariant::Minus1 => 0.5 * (high - low),
            DeltaVariant::Minus2 => 0.5 * (high - 2.0 * low),
        }
    }
}

/// Local-probing parameters derived from an overlay graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    /// `4 n d^{-1/8}`.
    pub ell: f64,
    /// Survival threshold; a probing node pauses on fewer than `delta` messages.
    pub delta: f64,
    /// Local probing duration `2 + ceil(lg n)`.
    pub gamma: usize,
    pub delta_formula_variant: DeltaVariant,
}

impl GraphParams {
    /// Parameters for a graph of order `node_count` and degree `degree`, without clipping.
    pub fn from_formula(node_count: usize, degree: f64, variant: DeltaVariant) -> Self {
        Self {
            ell: 4.0 * node_count as f64 * degree.powf(-1.0 / 8.0),
            delta: variant.delta(degree).max(0.0),
            gamma: 2 + ceil_log2(node_count),
            delta_formula_variant: variant,
        }
    }

    /// Parameters for the instantiated graph `g`, with `delta` clipped to the
    /// minimum degree of `g` so that a fault-free graph can be survived.
    pub fn for_graph(g: &OverlayGraph, variant: DeltaVariant) -> Self {
        let mut params = Self::from_formula(g.node_count(), g.degree() as f64, variant);
        params.delta = params.delta.min(g.min_degree() as f64);
        params
    }

    /// `ceil(n d^{-1/8})`, the compactness slack: at most this many vertices of a
    /// large set are peeled away.
    pub fn peel_allowance(node_count: usize, degree: f64) -> usize {
        (node_count as f64 * degree.powf(-1.0 / 8.0)).ceil() as usize
    }
}

/// `ceil(log2(x))` for `x >= 1`; 0 for `x <= 1`.
pub fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_log2_values() {
        let expected = [(0, 0), (1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (95, 7), (128, 7), (129, 8)];
        for (x, l) in expected {
            assert_eq!(ceil_log2(x), l, "x={x}");
        }
    }

    #[test]
    fn formula_values_at_five_to_the_eighth() {
        // d = 5^8: d^{7/8} = 5^7 = 78125 and d^{5/8} = 5^5 = 3125.
        let d = 5f64.powi(8);
        assert!((DeltaVariant::Minus1.delta(d) - 37_500.0).abs() < 1e-6);
        assert!((DeltaVariant::Minus2.delta(d) - 35_937.5).abs() < 1e-6);
        // ell(5t, 5^8) = 4 * 5t / 5 = 4t.
        let p = GraphParams::from_formula(95, d, DeltaVariant::Minus1);
        assert!((p.ell - 76.0).abs() < 1e-9);
        assert_eq!(p.gamma, 2 + 7);
    }

    #[test]
    fn clipping_to_min_degree() {
        let g = OverlayGraph::complete(10);
        let p = GraphParams::for_graph(&g, DeltaVariant::Minus1);
        assert!(p.delta <= 9.0);
        let raw = DeltaVariant::Minus1.delta(9.0);
        assert!((p.delta - raw).abs() < 1e-12);
    }
}
