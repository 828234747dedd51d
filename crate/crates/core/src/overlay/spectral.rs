use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::OverlayGraph;

/// Largest order for which the full symmetric eigendecomposition is used.
pub const DENSE_EIGEN_LIMIT: usize = 2048;

/// Convergence tolerance of the power iteration used above the dense limit.
pub const POWER_ITERATION_TOLERANCE: f64 = 1e-6;

const POWER_ITERATION_MAX_STEPS: usize = 20_000;

/// `max(|lambda_2|, |lambda_n|)`: the largest absolute adjacency eigenvalue once
/// the principal eigenvalue is removed.
///
/// Exact (dense decomposition) up to [`DENSE_EIGEN_LIMIT`] vertices; above it
/// the value comes from power iteration with deflation of the principal
/// eigenvector, converged to [`POWER_ITERATION_TOLERANCE`].
pub fn eigen_lambda(g: &OverlayGraph) -> f64 {
    let n = g.node_count();
    if n <= 1 {
        return 0.0;
    }
    if n <= DENSE_EIGEN_LIMIT {
        dense_lambda(g)
    } else {
        iterative_lambda(g)
    }
}

fn dense_lambda(g: &OverlayGraph) -> f64 {
    let n = g.node_count();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (u, v) in g.edges() {
        a[(u, v)] = 1.0;
        a[(v, u)] = 1.0;
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig[1].abs().max(eig[n - 1].abs())
}

fn multiply(g: &OverlayGraph, x: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        g.node_count(),
        (0..g.node_count()).map(|v| g.neighbors(v).iter().map(|&w| x[w]).sum()),
    )
}

/// Dominant eigenpair of `g` shifted by `shift * I`, minus the projection onto
/// `deflate` (if given).
fn power_iteration(
    g: &OverlayGraph,
    shift: f64,
    deflate: Option<(&DVector<f64>, f64)>,
) -> (f64, DVector<f64>) {
    let n = g.node_count();
    let mut x = DVector::from_iterator(n, (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0));
    x /= x.norm();
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATION_MAX_STEPS {
        let mut y = multiply(g, &x) + &x * shift;
        if let Some((v, value)) = deflate {
            let p = v.dot(&x);
            y -= v * (p * (value + shift));
        }
        let next = x.dot(&y);
        let norm = y.norm();
        if norm == 0.0 {
            return (0.0, x);
        }
        y /= norm;
        let converged = (next - estimate).abs() < POWER_ITERATION_TOLERANCE;
        estimate = next;
        x = y;
        if converged {
            break;
        }
    }
    (estimate - shift, x)
}

fn iterative_lambda(g: &OverlayGraph) -> f64 {
    let d = g.degree() as f64;
    // Shifting by d makes the spectrum nonnegative so the top eigenvalue dominates.
    let (top, v1) = power_iteration(g, d, None);
    // Largest remaining eigenvalue, then the most negative one via a reflected shift.
    let (second, _) = power_iteration(g, d, Some((&v1, top)));
    let (lowest, _) = negated_power_iteration(g, d, &v1);
    second.abs().max(lowest.abs())
}

fn negated_power_iteration(
    g: &OverlayGraph,
    d: f64,
    v1: &DVector<f64>,
) -> (f64, DVector<f64>) {
    let n = g.node_count();
    let mut x = DVector::from_iterator(n, (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -0.5 }));
    x -= v1 * v1.dot(&x);
    x /= x.norm();
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATION_MAX_STEPS {
        // (d I - A) restricted to the complement of v1.
        let mut y = &x * d - multiply(g, &x);
        y -= v1 * v1.dot(&y);
        let next = x.dot(&y);
        let norm = y.norm();
        if norm == 0.0 {
            break;
        }
        y /= norm;
        let converged = (next - estimate).abs() < POWER_ITERATION_TOLERANCE;
        estimate = next;
        x = y;
        if converged {
            break;
        }
    }
    (d - estimate, x)
}
