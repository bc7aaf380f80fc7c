//! Local objectives.
//!
//! Every agent `i` owns `f_i: ℝᵖ → ℝ`, assumed `μ`-strongly convex with an
//! `L`-Lipschitz gradient. The network minimizes `(1/n) Σ f_i`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Contract the engines and the theory module rely on.
pub trait Objective: Send + Sync {
    fn agents(&self) -> usize;
    fn dim(&self) -> usize;
    /// Strong-convexity modulus shared by every `f_i`.
    fn mu(&self) -> f64;
    /// Gradient Lipschitz constant shared by every `f_i`.
    fn lipschitz(&self) -> f64;
    fn local_value(&self, i: usize, x: &[f64]) -> Result<f64>;
    fn local_gradient(&self, i: usize, x: &[f64]) -> Result<Vec<f64>>;

    /// Rows `∇f_i(x_i)` for an `n×p` matrix of local iterates.
    fn stacked_gradient(&self, x: &Mat) -> Result<Mat> {
        check_iterates(self.agents(), self.dim(), x)?;
        let mut g = Mat::zeros(x.nrows(), x.ncols());
        for i in 0..x.nrows() {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            let gi = self.local_gradient(i, &row)?;
            for (j, v) in gi.into_iter().enumerate() {
                g[(i, j)] = v;
            }
        }
        Ok(g)
    }
}

pub(crate) fn check_iterates(n: usize, p: usize, x: &Mat) -> Result<()> {
    if x.shape() != (n, p) {
        return Err(Error::ShapeMismatch {
            what: "iterate matrix",
            expected: (n, p),
            got: x.shape(),
        });
    }
    Ok(())
}

/// Per-agent ridge regression: `f_i(x) = (u_iᵀx − v_i)² + ρ‖x‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeProblem {
    /// Row `i` is `u_i`.
    pub features: DMatrix<f64>,
    pub outputs: DVector<f64>,
    /// Ground-truth parameters used to generate `outputs`, when known.
    pub x_tilde: Option<DMatrix<f64>>,
    pub rho: f64,
    pub seed: Option<u64>,
    x_star: DVector<f64>,
    mu: f64,
    lipschitz: f64,
}

impl RidgeProblem {
    pub fn from_data(features: DMatrix<f64>, outputs: DVector<f64>, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::invalid(format!("ridge penalty must be positive, got {rho}")));
        }
        let (n, p) = features.shape();
        if n == 0 || p == 0 {
            return Err(Error::invalid("ridge problem needs n >= 1 and p >= 1"));
        }
        if outputs.len() != n {
            return Err(Error::ShapeMismatch {
                what: "ridge outputs",
                expected: (n, 1),
                got: (outputs.len(), 1),
            });
        }
        let max_sq = features
            .row_iter()
            .map(|r| r.norm_squared())
            .fold(0.0, f64::max);
        let mut prob = Self {
            features,
            outputs,
            x_tilde: None,
            rho,
            seed: None,
            x_star: DVector::zeros(p),
            mu: 2.0 * rho,
            lipschitz: 2.0 * (max_sq + rho),
        };
        prob.x_star = prob.analytic_optimum()?;
        Ok(prob)
    }

    /// Minimizer of `(1/n) Σ f_i`: `(Σ u_i u_iᵀ + nρI)⁻¹ Σ u_i v_i`.
    pub fn analytic_optimum(&self) -> Result<DVector<f64>> {
        let (n, p) = self.features.shape();
        let gram = self.features.transpose() * &self.features
            + DMatrix::identity(p, p) * (n as f64 * self.rho);
        let rhs = self.features.transpose() * &self.outputs;
        let chol = gram.cholesky().ok_or(Error::NumericalFailure {
            what: "ridge normal equations are not positive definite".into(),
            residual: f64::NAN,
        })?;
        Ok(chol.solve(&rhs))
    }

    /// Cached minimizer.
    pub fn x_star(&self) -> &DVector<f64> {
        &self.x_star
    }

    /// Global objective `(1/n) Σ f_i(x)`.
    pub fn global_value(&self, x: &[f64]) -> Result<f64> {
        let n = self.agents();
        let mut total = 0.0;
        for i in 0..n {
            total += self.local_value(i, x)?;
        }
        Ok(total / n as f64)
    }

    fn check_point(&self, i: usize, x: &[f64]) -> Result<()> {
        if i >= self.agents() {
            return Err(Error::IndexOutOfRange {
                index: i,
                agents: self.agents(),
            });
        }
        if x.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                what: "ridge point",
                expected: (self.dim(), 1),
                got: (x.len(), 1),
            });
        }
        Ok(())
    }

    fn residual(&self, i: usize, x: &[f64]) -> f64 {
        self.features
            .row(i)
            .iter()
            .zip(x)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            - self.outputs[i]
    }

    pub fn to_file(&self) -> ProblemFile {
        let rows = |m: &DMatrix<f64>| m.row_iter().map(|r| r.iter().copied().collect()).collect();
        ProblemFile {
            n: self.agents(),
            p: self.dim(),
            rho: self.rho,
            seed: self.seed,
            features: rows(&self.features),
            outputs: self.outputs.iter().copied().collect(),
            x_tilde: self.x_tilde.as_ref().map(rows),
        }
    }

    pub fn from_file(file: &ProblemFile) -> Result<Self> {
        let matrix = |rows: &[Vec<f64>], what: &'static str| -> Result<DMatrix<f64>> {
            if rows.len() != file.n || rows.iter().any(|r| r.len() != file.p) {
                return Err(Error::ShapeMismatch {
                    what,
                    expected: (file.n, file.p),
                    got: (rows.len(), rows.first().map_or(0, Vec::len)),
                });
            }
            Ok(DMatrix::from_fn(file.n, file.p, |i, j| rows[i][j]))
        };
        let mut prob = Self::from_data(
            matrix(&file.features, "problem features")?,
            DVector::from_vec(file.outputs.clone()),
            file.rho,
        )?;
        prob.x_tilde = file
            .x_tilde
            .as_deref()
            .map(|rows| matrix(rows, "problem x_tilde"))
            .transpose()?;
        prob.seed = file.seed;
        Ok(prob)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file(&serde_json::from_str(&text)?)
    }
}

impl Objective for RidgeProblem {
    fn agents(&self) -> usize {
        self.features.nrows()
    }

    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn mu(&self) -> f64 {
        self.mu
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn local_value(&self, i: usize, x: &[f64]) -> Result<f64> {
        self.check_point(i, x)?;
        let r = self.residual(i, x);
        Ok(r * r + self.rho * x.iter().map(|a| a * a).sum::<f64>())
    }

    fn local_gradient(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(i, x)?;
        let r = self.residual(i, x);
        Ok(self
            .features
            .row(i)
            .iter()
            .zip(x)
            .map(|(u, xj)| 2.0 * u * r + 2.0 * self.rho * xj)
            .collect())
    }

    fn stacked_gradient(&self, x: &Mat) -> Result<Mat> {
        check_iterates(self.agents(), self.dim(), x)?;
        let resid = self.features.component_mul(x).column_sum() - &self.outputs;
        let mut g = x * (2.0 * self.rho);
        for (j, mut col) in g.column_iter_mut().enumerate() {
            col += self.features.column(j).component_mul(&resid) * 2.0;
        }
        Ok(g)
    }
}

/// Ridge instance with `u_i ~ U[-1,1]ᵖ`, `x̃_i = (10·i/(n−1))·1`,
/// `v_i = u_iᵀx̃_i + ε_i`, `ε_i ~ N(0, 25)`.
pub fn make_ridge(n: usize, p: usize, rho: f64, seed: u64) -> Result<RidgeProblem> {
    if n == 0 || p == 0 {
        return Err(Error::invalid(format!("ridge problem needs n, p >= 1, got n={n}, p={p}")));
    }
    if !(rho > 0.0) {
        return Err(Error::invalid(format!("ridge penalty must be positive, got {rho}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..=1.0));
    // A lone agent sits at the origin of the segment.
    let spacing = if n > 1 { 10.0 / (n - 1) as f64 } else { 0.0 };
    let x_tilde = DMatrix::from_fn(n, p, |i, _| spacing * i as f64);
    let noise = Normal::new(0.0, 5.0).expect("fixed positive std");
    let outputs = DVector::from_fn(n, |i, _| {
        features.row(i).dot(&x_tilde.row(i)) + noise.sample(&mut rng)
    });
    let mut prob = RidgeProblem::from_data(features, outputs, rho)?;
    prob.x_tilde = Some(x_tilde);
    prob.seed = Some(seed);
    Ok(prob)
}

/// On-disk form of a [`RidgeProblem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub seed: Option<u64>,
    pub features: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
    pub x_tilde: Option<Vec<Vec<f64>>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(u: f64, v: f64, rho: f64) -> RidgeProblem {
        RidgeProblem::from_data(DMatrix::from_element(1, 1, u), DVector::from_element(1, v), rho).unwrap()
    }

    #[test]
    fn reference_instance_constants() {
        let prob = make_ridge(15, 10, 0.01, 3).unwrap();
        assert!((prob.mu() - 0.02).abs() < 1e-15);
        assert!(prob.mu() <= prob.lipschitz());
        assert_eq!(prob.agents(), 15);
        assert_eq!(prob.dim(), 10);
        let xt = prob.x_tilde.as_ref().unwrap();
        assert_eq!(xt[(0, 0)], 0.0);
        assert!((xt[(14, 9)] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_feature_is_pure_penalty() {
        let prob = scalar(0.0, 2.5, 1.0);
        assert_eq!(prob.x_star()[0], 0.0);
        assert!((prob.local_value(0, &[3.0]).unwrap() - (2.5f64.powi(2) + 9.0)).abs() < 1e-12);
    }

    #[test]
    fn scalar_optimum_by_hand() {
        let prob = scalar(1.0, 3.0, 1.0);
        assert!((prob.x_star()[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn tiny_penalty_gradient() {
        let prob = scalar(1.0, 0.0, 1e-30);
        let g = prob.local_gradient(0, &[1.0]).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn average_gradient_vanishes_at_optimum() {
        let prob = make_ridge(15, 10, 0.01, 8).unwrap();
        let xs: Vec<f64> = prob.x_star().iter().copied().collect();
        let mut avg = vec![0.0; 10];
        for i in 0..15 {
            for (a, g) in avg.iter_mut().zip(prob.local_gradient(i, &xs).unwrap()) {
                *a += g / 15.0;
            }
        }
        assert!(avg.iter().all(|a| a.abs() < 1e-10), "{avg:?}");
    }

    #[test]
    fn stacked_gradient_matches_rows() {
        let prob = make_ridge(6, 3, 0.1, 1).unwrap();
        let x = DMatrix::from_fn(6, 3, |i, j| (i as f64 - j as f64) * 0.3);
        let fast = prob.stacked_gradient(&x).unwrap();
        for i in 0..6 {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            let slow = prob.local_gradient(i, &row).unwrap();
            for j in 0..3 {
                assert!((fast[(i, j)] - slow[j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn errors() {
        assert!(make_ridge(3, 2, 0.0, 1).is_err());
        assert!(make_ridge(0, 2, 1.0, 1).is_err());
        let prob = make_ridge(3, 2, 1.0, 1).unwrap();
        assert!(matches!(
            prob.local_gradient(3, &[0.0, 0.0]),
            Err(Error::IndexOutOfRange { index: 3, agents: 3 })
        ));
        assert!(prob.local_gradient(0, &[0.0]).is_err());
        assert!(prob.stacked_gradient(&Mat::zeros(2, 2)).is_err());
    }

    #[test]
    fn deterministic_per_seed_and_json_replay() {
        let a = make_ridge(5, 4, 0.5, 77).unwrap();
        assert_eq!(a, make_ridge(5, 4, 0.5, 77).unwrap());
        assert_ne!(a, make_ridge(5, 4, 0.5, 78).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prob.json");
        a.save_json(&path).unwrap();
        let b = RidgeProblem::load_json(&path).unwrap();
        assert_eq!(a, b);
    }
}
