//! Small shared quadrature helpers: Gauss-Legendre rules via Golub-Welsch
//! and composite panel integration.

use nalgebra::DMatrix;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    // Golub-Welsch: symmetric tridiagonal Jacobi matrix.
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4.0 * (k as f64) * (k as f64) - 1.0) as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = j.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], 2.0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    (
        pairs.iter().map(|p| p.0).collect(),
        pairs.iter().map(|p| p.1).collect(),
    )
}

/// Gauss-Legendre nodes/weights scaled to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| v * half).collect(),
    )
}

/// Composite Gauss-Legendre panels over [a, b].
pub fn panel_nodes(order: usize, panels: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(order * panels);
    let mut ws = Vec::with_capacity(order * panels);
    let step = (b - a) / panels as f64;
    for p in 0..panels {
        let (x, w) = gauss_legendre_on(order, a + p as f64 * step, a + (p + 1) as f64 * step);
        xs.extend(x);
        ws.extend(w);
    }
    (xs, ws)
}
