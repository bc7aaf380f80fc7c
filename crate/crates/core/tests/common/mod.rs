//! Independent reference implementations for the integration tests.
//!
//! None of these call into the crate's numerical routines; they are deliberately
//! naive so that agreement means something.

#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{Complex, DMatrix, DVector};
use rpushpull::harness::ExperimentConfig;
use rpushpull::topology::DirectedGraph;

/// Gaussian elimination with partial pivoting on plain vectors.
pub fn gauss_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)]).chain(std::iter::once(b[i])).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..=n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    (0..n).map(|i| m[i][n] / m[i][i]).collect()
}

/// Left Perron vector of a row-stochastic `r`: solves `(Rᵀ − I)u = 0` with
/// the last equation replaced by `Σu = n`.
pub fn left_perron(r: &DMatrix<f64>) -> Vec<f64> {
    let n = r.nrows();
    let mut a = r.transpose() - DMatrix::identity(n, n);
    let mut b = DVector::zeros(n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    b[n - 1] = n as f64;
    gauss_solve(&a, &b)
}

/// Right Perron vector of a column-stochastic `c`.
pub fn right_perron(c: &DMatrix<f64>) -> Vec<f64> {
    left_perron(&c.transpose())
}

/// Characteristic polynomial coefficients `[1, c₁, …, cₙ]` of
/// `det(λI − M)` by the Faddeev–LeVerrier recursion.
pub fn char_poly(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut coeffs = vec![1.0];
    let mut mk = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        let prev = *coeffs.last().unwrap();
        mk = m * &mk + DMatrix::identity(n, n) * prev;
        let am = m * &mk;
        coeffs.push(-am.trace() / k as f64);
    }
    coeffs
}

/// All roots of a monic polynomial by Durand–Kerner, then Newton polish.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex<f64>> {
    let n = coeffs.len() - 1;
    let eval = |z: Complex<f64>| coeffs.iter().fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c);
    let deriv = |z: Complex<f64>| {
        coeffs[..n]
            .iter()
            .enumerate()
            .fold(Complex::new(0.0, 0.0), |acc, (i, &c)| acc * z + c * (n - i) as f64)
    };
    let radius = 1.0 + coeffs[1..].iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let seed = Complex::new(0.4, 0.9);
    let mut z: Vec<Complex<f64>> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let mut den = Complex::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let d = deriv(*zi);
            if d.norm() > 1e-300 {
                *zi -= eval(*zi) / d;
            }
        }
    }
    z
}

pub fn spectral_radius_oracle(m: &DMatrix<f64>) -> f64 {
    poly_roots(&char_poly(m)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Roots by Warshall transitive closure: `r` is a root iff it reaches all.
pub fn closure_roots(g: &DirectedGraph) -> Vec<usize> {
    let n = g.node_count();
    let mut reach = vec![vec![false; n]; n];
    for (from, to) in g.edges() {
        reach[from][to] = true;
    }
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    (0..n).filter(|&r| reach[r].iter().all(|&b| b)).collect()
}

/// `(1/n) Σ_i Σ_j (x_ij − x*_j)²` by explicit loops.
pub fn naive_metric(x: &DMatrix<f64>, x_star: &DVector<f64>) -> f64 {
    let mut total = 0.0;
    for i in 0..x.nrows() {
        let mut row = 0.0;
        for j in 0..x.ncols() {
            let d = x[(i, j)] - x_star[j];
            row += d * d;
        }
        total += row;
    }
    total / x.nrows() as f64
}

/// The 15-agent, 10-dimensional ridge experiment with the given noise level.
pub fn reference_setup(sigma_link2: f64, trials: usize, iterations: usize) -> ExperimentConfig {
    ExperimentConfig {
        sigma_link2,
        trials,
        iterations,
        ..ExperimentConfig::default()
    }
}
