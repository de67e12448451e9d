#![allow(dead_code)]

use fraclap::kernel::KernelWeights;
use fraclap::lattice::{make_steiner_domain, LatticeDomain, Window};
use nalgebra::{DMatrix, SymmetricEigen};

/// Interval `(-1, 1)` with `n` nodes.
pub fn interval(n: usize) -> LatticeDomain<f64> {
    let w = Window::centered(1, 2.0 / n as f64, [n, 1]).unwrap();
    make_steiner_domain(|_| 1.0, w).unwrap()
}

/// Stadium in the box `[-1.5, 1.5] x [-1, 1]` with spacing 1/16 (48 x 32 nodes).
pub fn stadium() -> LatticeDomain<f64> {
    let w = Window::from_box(2, 1.0 / 16.0, &[[-1.5, 1.5], [-1.0, 1.0]]).unwrap();
    make_steiner_domain(|y: f64| 0.5 + (1.0 - y * y).max(0.0).sqrt(), w).unwrap()
}

/// Dense eigen decomposition of the quadratic form `[u]_2^2 / (h^N sum u^2)`
/// on the nodes of `domain`, assembled directly from pair weights.
/// Returns ascending eigenvalues and the matching eigenvectors on the window.
pub fn dense_spectrum(domain: &LatticeDomain<f64>, k: &KernelWeights<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let active = domain.active_indices();
    let n = k.window().len();
    let m = active.len();
    let vol = k.window().cell_volume();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (r, &i) in active.iter().enumerate() {
        // every node of the window (and beyond) carries zero, so it only
        // contributes to the diagonal
        let mut diag = k.kappa()[i];
        for j in 0..n {
            if j != i {
                diag += k.weight(i, j);
            }
        }
        a[(r, r)] = 2.0 * diag / vol;
        for (c, &j) in active.iter().enumerate() {
            if c != r {
                a[(r, c)] = -2.0 * k.weight(i, j) / vol;
            }
        }
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].partial_cmp(&eig.eigenvalues[y]).unwrap());
    let values = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    let vectors = order
        .iter()
        .map(|&c| {
            let mut full = vec![0.0; n];
            for (r, &i) in active.iter().enumerate() {
                full[i] = eig.eigenvectors[(r, c)];
            }
            full
        })
        .collect();
    (values, vectors)
}
