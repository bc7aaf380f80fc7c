//! Pull/push weight matrices and the quantities derived from them.
//!
//! `R` (pull) is row-stochastic and mixes decision variables; `C` (push) is
//! column-stochastic and mixes gradient trackers. The lazy blends
//! `R_η = (1-η)I + ηR` and `C_γ = (1-γ)I + γC` are what the engines use.
//! The Perron vectors `u` (left, of `R`) and `v` (right, of `C`) are
//! normalized to sum to `n`.
//!
//! Each blend gets a weighted Euclidean norm `‖x‖_T = ‖T x‖₂` in which the
//! consensus-error operator contracts by `τ < 1`; see [`contraction_transform`].

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::topology::{assumption3_holds, DirectedGraph};

pub const STOCHASTIC_TOL: f64 = 1e-12;
pub const PERRON_TOL: f64 = 1e-12;
pub const PERRON_MAX_ITERS: usize = 100_000;
pub const DEFAULT_SLACK: f64 = 0.01;
/// Eigenvector transforms worse conditioned than this fall back to the Stein route.
const EIGENBASIS_MAX_COND: f64 = 1e8;

/// `R_ij = 1/(|in(i)|+1)` for each in-neighbor `j ≠ i`, remainder on the diagonal.
pub fn build_pull_matrix(g: &DirectedGraph) -> Mat {
    let n = g.node_count();
    let mut r = Mat::zeros(n, n);
    for i in 0..n {
        let w = 1.0 / (g.in_degree(i) + 1) as f64;
        let mut off = 0.0;
        for &j in g.in_neighbors(i).iter().filter(|&&j| j != i) {
            r[(i, j)] = w;
            off += w;
        }
        r[(i, i)] = 1.0 - off;
    }
    r
}

/// `C_li = 1/(|out(i)|+1)` for each out-neighbor `l ≠ i`, remainder on the diagonal.
pub fn build_push_matrix(g: &DirectedGraph) -> Mat {
    let n = g.node_count();
    let mut c = Mat::zeros(n, n);
    for i in 0..n {
        let w = 1.0 / (g.out_degree(i) + 1) as f64;
        let mut off = 0.0;
        for &l in g.out_neighbors(i).iter().filter(|&&l| l != i) {
            c[(l, i)] = w;
            off += w;
        }
        c[(i, i)] = 1.0 - off;
    }
    c
}

/// `(1-θ)I + θM` for `θ ∈ (0, 1]`.
pub fn lazy_blend(m: &Mat, theta: f64) -> Result<Mat> {
    linalg::check_square(m, "lazy_blend")?;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::invalid(format!("blend weight must lie in (0, 1], got {theta}")));
    }
    let n = m.nrows();
    Ok(Mat::identity(n, n) * (1.0 - theta) + m * theta)
}

/// Graph with an edge `j -> i` whenever `m_ij > 0`.
pub fn induced_graph(m: &Mat) -> Result<DirectedGraph> {
    let n = m.nrows();
    let edges = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && m[(i, j)] > 0.0)
        .map(|(i, j)| (j, i));
    DirectedGraph::from_edges(n, edges)
}

/// Power iteration `x ← M x`, rescaled to `1ᵀx = n` each step, until
/// `‖Mx − x‖∞ ≤ PERRON_TOL·max(1, ‖x‖∞)`.
pub fn perron_fixed_point(m: &Mat, start: &DVector<f64>) -> Result<DVector<f64>> {
    let n = m.nrows() as f64;
    let mut x = rescale_sum(start.clone(), n)?;
    let mut residual = f64::INFINITY;
    for _ in 0..PERRON_MAX_ITERS {
        let next = m * &x;
        residual = (&next - &x).amax();
        x = rescale_sum(next, n)?;
        if residual <= PERRON_TOL * x.amax().max(1.0) {
            return clamp_nonnegative(x);
        }
    }
    Err(Error::NumericalFailure {
        what: "Perron power iteration hit its iteration cap".into(),
        residual,
    })
}

fn rescale_sum(x: DVector<f64>, target: f64) -> Result<DVector<f64>> {
    let s = x.sum();
    if !s.is_finite() || s.abs() < f64::MIN_POSITIVE {
        return Err(Error::NumericalFailure {
            what: "Perron iterate lost its mass".into(),
            residual: s,
        });
    }
    Ok(x * (target / s))
}

fn clamp_nonnegative(mut x: DVector<f64>) -> Result<DVector<f64>> {
    for xi in x.iter_mut() {
        if *xi < 0.0 {
            if *xi < -1e-12 {
                return Err(Error::AssumptionViolation(format!(
                    "Perron vector has negative entry {xi:e}"
                )));
            }
            *xi = 0.0;
        }
    }
    Ok(x)
}

/// `u` with `uᵀR = uᵀ, uᵀ1 = n` and `v` with `Cv = v, 1ᵀv = n`.
pub fn perron_vectors(r: &Mat, c: &Mat) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = r.nrows();
    perron_vectors_from(r, c, &linalg::ones(n), &linalg::ones(n))
}

/// As [`perron_vectors`] with explicit power-iteration starting points.
pub fn perron_vectors_from(
    r: &Mat,
    c: &Mat,
    u0: &DVector<f64>,
    v0: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let u = perron_fixed_point(&r.transpose(), u0)?;
    let v = perron_fixed_point(c, v0)?;
    // Power iteration leaves ~1e-12 residue where the true entry is zero.
    if u.dot(&v) <= 1e-8 * r.nrows() as f64 {
        return Err(Error::AssumptionViolation(format!(
            "uᵀv = {:e}: pull and push graphs share no spanning-tree root",
            u.dot(&v)
        )));
    }
    Ok((u, v))
}

/// Which side the rank-one Perron projection sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `W = M − 1wᵀ/n` (pull matrices).
    Row,
    /// `W = M − w1ᵀ/n` (push matrices).
    Column,
}

/// How a contraction transform was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformMethod {
    /// Real form of the inverse eigenvector matrix of `W`.
    Eigenbasis,
    /// Square root of the Stein-equation solution `P − AᵀPA = I`, `A = W/τ`.
    Stein,
}

/// A contraction norm `‖x‖ = ‖T x‖₂` for the consensus-error operator `W`.
#[derive(Debug, Clone)]
pub struct Contraction {
    pub transform: Mat,
    pub transform_inv: Mat,
    /// Certified factor: `‖T W T⁻¹‖₂ ≤ tau`.
    pub tau: f64,
    /// `ρ(W)`.
    pub spectral_radius: f64,
    /// Measured `‖T W T⁻¹‖₂`.
    pub achieved: f64,
    pub method: TransformMethod,
}

impl Contraction {
    /// `‖M‖ = ‖T M T⁻¹‖₂`.
    pub fn matrix_norm(&self, m: &Mat) -> f64 {
        linalg::op_norm2(&(&self.transform * m * &self.transform_inv))
    }

    pub fn vector_norm(&self, x: &DVector<f64>) -> f64 {
        (&self.transform * x).norm()
    }
}

/// `W` for a blended matrix and its Perron vector.
pub fn consensus_operator(blend: &Mat, w: &DVector<f64>, side: Side) -> Mat {
    let n = blend.nrows();
    let ones = linalg::ones(n);
    let proj = match side {
        Side::Row => &ones * w.transpose(),
        Side::Column => w * ones.transpose(),
    };
    blend - proj / n as f64
}

/// Builds `T` and `τ` with `‖T W x‖₂ ≤ τ ‖T x‖₂` for all `x`, where
/// `τ = ρ(W) + slack·(1 − ρ(W))`, and `T` scaled so its smallest singular
/// value is exactly 1.
///
/// The eigenvector route gives `‖TWT⁻¹‖₂ = ρ(W)` when `W` is diagonalizable
/// with a well-conditioned basis. Otherwise `T = P^{1/2}` where `P` solves the
/// Stein equation for `W/τ`; then `‖TWT⁻¹‖₂ < τ`.
pub fn contraction_transform(
    blend: &Mat,
    w: &DVector<f64>,
    side: Side,
    slack: f64,
) -> Result<Contraction> {
    linalg::check_square(blend, "contraction_transform")?;
    if !(slack > 0.0 && slack <= 1.0) {
        return Err(Error::invalid(format!("slack must lie in (0, 1], got {slack}")));
    }
    let op = consensus_operator(blend, w, side);
    let rho = linalg::spectral_radius(&op)?;
    if rho >= 1.0 - 1e-12 {
        return Err(Error::AssumptionViolation(format!(
            "consensus operator has spectral radius {rho} >= 1"
        )));
    }
    let tau = rho + slack * (1.0 - rho);

    if let Some(c) = eigen_transform(&op, rho, tau) {
        return Ok(c);
    }
    let c = stein_transform(&op, rho, tau)?;
    Ok(c)
}

fn finish(transform: Mat, op: &Mat, rho: f64, tau: f64, method: TransformMethod) -> Option<Contraction> {
    let smin = linalg::min_singular(&transform);
    if !(smin > 0.0) || !smin.is_finite() {
        return None;
    }
    let transform = transform / smin;
    let transform_inv = transform.clone().try_inverse()?;
    let achieved = linalg::op_norm2(&(&transform * op * &transform_inv));
    (achieved <= tau).then_some(Contraction {
        transform,
        transform_inv,
        tau,
        spectral_radius: rho,
        achieved,
        method,
    })
}

fn eigen_transform(op: &Mat, rho: f64, tau: f64) -> Option<Contraction> {
    let basis = linalg::eigenbasis(op)?;
    let inv = basis.try_inverse()?;
    let t = linalg::realify_transform(&inv);
    if linalg::condition_number(&t) > EIGENBASIS_MAX_COND {
        return None;
    }
    finish(t, op, rho, tau, TransformMethod::Eigenbasis)
}

fn stein_transform(op: &Mat, rho: f64, tau: f64) -> Result<Contraction> {
    let n = op.nrows();
    // Smith doubling: P = Σ_k (Aᵀ)^k A^k with A = W/τ, ρ(A) < 1.
    let mut a = if tau > 0.0 { op / tau } else { Mat::zeros(n, n) };
    let mut p = Mat::identity(n, n);
    for _ in 0..100 {
        let step = a.transpose() * &p * &a;
        let done = step.amax() <= f64::EPSILON * p.amax();
        p += step;
        a = &a * &a;
        if done || a.amax() == 0.0 {
            let t = linalg::sym_sqrt(&p);
            return finish(t, op, rho, tau, TransformMethod::Stein).ok_or(Error::NumericalFailure {
                what: "Stein transform failed to certify the contraction factor".into(),
                residual: tau,
            });
        }
    }
    Err(Error::NumericalFailure {
        what: "Stein doubling iteration did not converge".into(),
        residual: a.amax(),
    })
}

/// Norm-equivalence constants between `‖·‖_R`, `‖·‖_C` and `‖·‖₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equivalence {
    /// `‖x‖_C ≤ δ_CR ‖x‖_R`
    pub delta_cr: f64,
    /// `‖x‖_C ≤ δ_C2 ‖x‖₂`
    pub delta_c2: f64,
    /// `‖x‖_R ≤ δ_RC ‖x‖_C`
    pub delta_rc: f64,
    /// `‖x‖_R ≤ δ_R2 ‖x‖₂`
    pub delta_r2: f64,
}

pub fn equivalence_constants(r_t: &Mat, c_t: &Mat) -> Result<Equivalence> {
    let inv = |m: &Mat, name: &str| {
        linalg::check_square(m, "equivalence_constants")?;
        if linalg::min_singular(m) <= f64::EPSILON * linalg::op_norm2(m) {
            return Err(Error::invalid(format!("{name} transform is singular")));
        }
        m.clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid(format!("{name} transform is singular")))
    };
    let r_inv = inv(r_t, "pull")?;
    let c_inv = inv(c_t, "push")?;
    Ok(Equivalence {
        delta_cr: linalg::op_norm2(&(c_t * r_inv)),
        delta_c2: linalg::op_norm2(c_t),
        delta_rc: linalg::op_norm2(&(r_t * c_inv)),
        delta_r2: linalg::op_norm2(r_t),
    })
}

/// Everything derived from a pull/push matrix pair and the blend weights.
#[derive(Debug, Clone)]
pub struct MixingEnsemble {
    pub pull: Mat,
    pub push: Mat,
    pub eta: f64,
    pub gamma: f64,
    pub pull_blend: Mat,
    pub push_blend: Mat,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub pull_norm: Contraction,
    pub push_norm: Contraction,
    pub equivalence: Equivalence,
    pub slack: f64,
}

impl MixingEnsemble {
    /// Builds `R` from `pull_graph` and `C` from `push_graph` with the
    /// in/out-degree rules, then derives the rest.
    pub fn from_graphs(
        pull_graph: &DirectedGraph,
        push_graph: &DirectedGraph,
        eta: f64,
        gamma: f64,
        slack: f64,
    ) -> Result<Self> {
        let check = assumption3_holds(pull_graph, push_graph)?;
        if !check.holds {
            return Err(Error::AssumptionViolation(check.diagnostic()));
        }
        Self::from_matrices(build_pull_matrix(pull_graph), build_push_matrix(push_graph), eta, gamma, slack)
    }

    pub fn from_matrices(pull: Mat, push: Mat, eta: f64, gamma: f64, slack: f64) -> Result<Self> {
        validate_pair(&pull, &push)?;
        let pull_blend = lazy_blend(&pull, eta)?;
        let push_blend = lazy_blend(&push, gamma)?;
        let (u, v) = perron_vectors(&pull, &push)?;
        let pull_norm = contraction_transform(&pull_blend, &u, Side::Row, slack)?;
        let push_norm = contraction_transform(&push_blend, &v, Side::Column, slack)?;
        let equivalence = equivalence_constants(&pull_norm.transform, &push_norm.transform)?;
        Ok(Self {
            pull,
            push,
            eta,
            gamma,
            pull_blend,
            push_blend,
            u,
            v,
            pull_norm,
            push_norm,
            equivalence,
            slack,
        })
    }

    pub fn agents(&self) -> usize {
        self.pull.nrows()
    }

    pub fn tau_r(&self) -> f64 {
        self.pull_norm.tau
    }

    pub fn tau_c(&self) -> f64 {
        self.push_norm.tau
    }

    pub fn summary(&self) -> EnsembleSummary {
        EnsembleSummary {
            n: self.agents(),
            eta: self.eta,
            gamma: self.gamma,
            slack: self.slack,
            tau_r: self.tau_r(),
            tau_c: self.tau_c(),
            rho_r: self.pull_norm.spectral_radius,
            rho_c: self.push_norm.spectral_radius,
            pull_method: self.pull_norm.method,
            push_method: self.push_norm.method,
            u: self.u.iter().copied().collect(),
            v: self.v.iter().copied().collect(),
            u_dot_v: self.u.dot(&self.v),
            equivalence: self.equivalence,
        }
    }
}

fn validate_pair(r: &Mat, c: &Mat) -> Result<()> {
    linalg::check_square(r, "pull matrix")?;
    linalg::check_square(c, "push matrix")?;
    if r.shape() != c.shape() {
        return Err(Error::ShapeMismatch {
            what: "push matrix",
            expected: r.shape(),
            got: c.shape(),
        });
    }
    let n = r.nrows();
    for (name, m) in [("pull", r), ("push", c)] {
        if m.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::AssumptionViolation(format!("{name} matrix has a negative or non-finite entry")));
        }
        if (0..n).any(|i| m[(i, i)] <= 0.0) {
            return Err(Error::AssumptionViolation(format!("{name} matrix has a non-positive diagonal entry")));
        }
    }
    for i in 0..n {
        let row = r.row(i).sum();
        if (row - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::AssumptionViolation(format!("pull matrix row {i} sums to {row}")));
        }
        let col = c.column(i).sum();
        if (col - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::AssumptionViolation(format!("push matrix column {i} sums to {col}")));
        }
    }
    let check = assumption3_holds(&induced_graph(r)?, &induced_graph(c)?)?;
    if !check.holds {
        return Err(Error::AssumptionViolation(check.diagnostic()));
    }
    Ok(())
}

/// JSON-friendly digest of a [`MixingEnsemble`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n: usize,
    pub eta: f64,
    pub gamma: f64,
    pub slack: f64,
    pub tau_r: f64,
    pub tau_c: f64,
    pub rho_r: f64,
    pub rho_c: f64,
    pub pull_method: TransformMethod,
    pub push_method: TransformMethod,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub u_dot_v: f64,
    pub equivalence: Equivalence,
}

/// Writes a matrix as headerless CSV, one row per line.
pub fn write_matrix_csv(path: &Path, m: &Mat) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            line: 0,
            message: format!("{other:?}"),
        },
    })?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|x| x.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{generate_ring_plus_random, RingKind};

    fn two_node() -> DirectedGraph {
        DirectedGraph::from_edges(2, [(0, 1)]).unwrap()
    }

    fn mat(rows: usize, data: &[f64]) -> Mat {
        Mat::from_row_slice(rows, data.len() / rows, data)
    }

    #[test]
    fn pull_and_push_weights_on_two_nodes() {
        let g = two_node();
        assert_eq!(build_pull_matrix(&g), mat(2, &[1.0, 0.0, 0.5, 0.5]));
        assert_eq!(build_push_matrix(&g), mat(2, &[0.5, 0.0, 0.5, 1.0]));
    }

    #[test]
    fn complete_digraph_gives_uniform_weights() {
        let g = generate_ring_plus_random(3, 1.0, 0, RingKind::Directed).unwrap();
        for m in [build_pull_matrix(&g), build_push_matrix(&g)] {
            assert!(m.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn generated_weights_are_stochastic() {
        let g = generate_ring_plus_random(15, 0.3, 9, RingKind::Directed).unwrap();
        let r = build_pull_matrix(&g);
        let c = build_push_matrix(&g);
        for i in 0..15 {
            assert!((r.row(i).sum() - 1.0).abs() < STOCHASTIC_TOL);
            assert!((c.column(i).sum() - 1.0).abs() < STOCHASTIC_TOL);
            assert!(r[(i, i)] > 0.0 && c[(i, i)] > 0.0);
        }
    }

    #[test]
    fn blend_cases() {
        let c = mat(2, &[0.5, 0.0, 0.5, 1.0]);
        assert_eq!(lazy_blend(&c, 1.0).unwrap(), c);
        let swap = mat(2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(lazy_blend(&swap, 0.5).unwrap(), mat(2, &[0.5, 0.5, 0.5, 0.5]));
        assert!(lazy_blend(&c, 0.0).is_err());
        assert!(lazy_blend(&c, 1.2).is_err());
    }

    #[test]
    fn slow_blend_on_generated_graph() {
        let g = generate_ring_plus_random(15, 0.3, 2, RingKind::Directed).unwrap();
        let r = build_pull_matrix(&g);
        let b = lazy_blend(&r, 0.01).unwrap();
        for i in 0..15 {
            assert!(b[(i, i)] >= 0.99);
            assert!((b.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn perron_small_cases() {
        let r = mat(2, &[1.0, 0.0, 0.5, 0.5]);
        let c = mat(2, &[0.5, 0.0, 0.5, 1.0]);
        let u = perron_fixed_point(&r.transpose(), &linalg::ones(2)).unwrap();
        let v = perron_fixed_point(&c, &linalg::ones(2)).unwrap();
        assert!((u - DVector::from_vec(vec![2.0, 0.0])).amax() < 1e-10);
        assert!((v - DVector::from_vec(vec![0.0, 2.0])).amax() < 1e-10);
        // This pair has no common root, so uᵀv = 0.
        assert!(matches!(perron_vectors(&r, &c), Err(Error::AssumptionViolation(_))));

        let uniform = Mat::from_element(4, 4, 0.25);
        let (u, v) = perron_vectors(&uniform, &uniform).unwrap();
        assert!((u - linalg::ones(4)).amax() < 1e-12);
        assert!((v - linalg::ones(4)).amax() < 1e-12);
    }

    #[test]
    fn perron_reports_cap() {
        // Period-2 permutation never settles.
        let p = mat(2, &[0.0, 1.0, 1.0, 0.0]);
        let start = DVector::from_vec(vec![1.0, 3.0]);
        assert!(matches!(
            perron_fixed_point(&p, &start),
            Err(Error::NumericalFailure { .. })
        ));
    }

    #[test]
    fn zero_operator_contracts_trivially() {
        let blend = Mat::from_element(3, 3, 1.0 / 3.0);
        let c = contraction_transform(&blend, &linalg::ones(3), Side::Row, 0.01).unwrap();
        assert!(c.tau <= 0.01 + 1e-15);
        assert_eq!(c.spectral_radius, 0.0);
    }

    #[test]
    fn two_node_contraction() {
        let r = mat(2, &[1.0, 0.0, 0.5, 0.5]);
        let u = DVector::from_vec(vec![2.0, 0.0]);
        let slack = 0.1;
        let c = contraction_transform(&r, &u, Side::Row, slack).unwrap();
        assert!((c.spectral_radius - 0.5).abs() < 1e-12);
        assert!(c.tau > 0.5 && c.tau <= 0.5 + slack / 2.0 + 1e-15);
        assert!(c.achieved <= c.tau);
        assert!(linalg::min_singular(&c.transform) >= 1.0 - 1e-12);
    }

    #[test]
    fn defective_operator_uses_stein() {
        // W = [[0.5, 1], [0, 0.5]] is a Jordan block; with w = 0 the
        // projection vanishes and W is the blend itself.
        let blend = mat(2, &[0.5, 1.0, 0.0, 0.5]);
        let zero = DVector::zeros(2);
        let c = contraction_transform(&blend, &zero, Side::Row, 0.05).unwrap();
        assert_eq!(c.method, TransformMethod::Stein);
        assert!(c.achieved < c.tau);
    }

    #[test]
    fn non_contracting_operator_rejected() {
        let blend = Mat::identity(2, 2);
        let zero = DVector::zeros(2);
        assert!(matches!(
            contraction_transform(&blend, &zero, Side::Row, 0.01),
            Err(Error::AssumptionViolation(_))
        ));
        assert!(contraction_transform(&blend, &zero, Side::Row, 0.0).is_err());
    }

    #[test]
    fn equivalence_of_scaled_identities() {
        let i3 = Mat::identity(3, 3);
        let e = equivalence_constants(&i3, &i3).unwrap();
        for d in [e.delta_cr, e.delta_c2, e.delta_rc, e.delta_r2] {
            assert!((d - 1.0).abs() < 1e-14);
        }
        let e = equivalence_constants(&(&i3 * 2.0), &i3).unwrap();
        assert!((e.delta_cr - 0.5).abs() < 1e-14);
        assert!((e.delta_rc - 2.0).abs() < 1e-14);
        assert!(equivalence_constants(&Mat::zeros(3, 3), &i3).is_err());
    }

    #[test]
    fn ensemble_rejects_bad_matrices() {
        let r = mat(2, &[0.9, 0.2, 0.5, 0.5]);
        let c = mat(2, &[0.5, 0.5, 0.5, 0.5]);
        assert!(MixingEnsemble::from_matrices(r, c.clone(), 0.5, 0.5, 0.01).is_err());
        let zero_diag = mat(2, &[0.0, 1.0, 0.5, 0.5]);
        assert!(MixingEnsemble::from_matrices(zero_diag, c, 0.5, 0.5, 0.01).is_err());
    }

    #[test]
    fn matrix_csv_export() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_matrix_csv(&path, &mat(2, &[1.0, 0.0, 0.5, 0.5])).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "1,0\n0.5,0.5\n");
        assert!(write_matrix_csv(&dir.path().join("no/such/dir.csv"), &Mat::zeros(1, 1)).is_err());
    }
}
