//! Convergence certificate for R-Push-Pull.
//!
//! The expected optimality gap `E‖x̄ − x*‖²`, consensus error
//! `E‖X − 1x̄‖_R²` and tracking error `E‖Y − v ȳ‖_C²` obey a componentwise
//! linear recursion `e' ≤ A e + B`. When `ρ(A) < 1` the errors converge
//! linearly into the ball `(I − A)⁻¹ B`.
//!
//! Constants are indexed 1..=14 as `c(k)`; `‖·‖_R`, `‖·‖_C` are the contraction
//! norms carried by the [`MixingEnsemble`].

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
pub use crate::linalg::spectral_radius;
use crate::mixing::MixingEnsemble;
use crate::objective::Objective;

/// The fourteen problem/network constants of the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants(pub [f64; 14]);

impl Constants {
    /// One-based access, `c(1)` through `c(14)`.
    pub fn c(&self, k: usize) -> f64 {
        self.0[k - 1]
    }
}

/// Scalars the constants are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantInputs {
    pub n: usize,
    pub mu: f64,
    pub lipschitz: f64,
    pub u_dot_v: f64,
    pub u_norm2: f64,
    pub v_norm2: f64,
    pub tau_r: f64,
    pub tau_c: f64,
    /// `‖I − 1uᵀ/n‖_R`
    pub pull_proj_norm: f64,
    /// `‖I − v1ᵀ/n‖_C`
    pub push_proj_norm: f64,
    /// `‖v‖_R`
    pub v_norm_r: f64,
    /// `‖R̃ (I − 1uᵀ/n)‖₂`
    pub pull_proj_transformed: f64,
    /// `‖R_η − I‖₂`
    pub pull_blend_gap: f64,
    pub delta_rc: f64,
    pub delta_c2: f64,
}

impl ConstantInputs {
    pub fn gather(mix: &MixingEnsemble, prob: &dyn Objective) -> Result<Self> {
        let n = mix.agents();
        if prob.agents() != n {
            return Err(Error::ShapeMismatch {
                what: "objective agents",
                expected: (n, prob.dim()),
                got: (prob.agents(), prob.dim()),
            });
        }
        let nf = n as f64;
        let ones = linalg::ones(n);
        let pull_proj = Mat::identity(n, n) - &ones * mix.u.transpose() / nf;
        let push_proj = Mat::identity(n, n) - &mix.v * ones.transpose() / nf;
        Ok(Self {
            n,
            mu: prob.mu(),
            lipschitz: prob.lipschitz(),
            u_dot_v: mix.u.dot(&mix.v),
            u_norm2: mix.u.norm_squared(),
            v_norm2: mix.v.norm_squared(),
            tau_r: mix.tau_r(),
            tau_c: mix.tau_c(),
            pull_proj_norm: mix.pull_norm.matrix_norm(&pull_proj),
            push_proj_norm: mix.push_norm.matrix_norm(&push_proj),
            v_norm_r: mix.pull_norm.vector_norm(&mix.v),
            pull_proj_transformed: linalg::op_norm2(&(&mix.pull_norm.transform * &pull_proj)),
            pull_blend_gap: linalg::op_norm2(&(&mix.pull_blend - Mat::identity(n, n))),
            delta_rc: mix.equivalence.delta_rc,
            delta_c2: mix.equivalence.delta_c2,
        })
    }
}

pub fn compute_constants(mix: &MixingEnsemble, prob: &dyn Objective) -> Result<Constants> {
    constants_from(&ConstantInputs::gather(mix, prob)?)
}

pub fn constants_from(k: &ConstantInputs) -> Result<Constants> {
    for (name, tau) in [("tau_R", k.tau_r), ("tau_C", k.tau_c)] {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::AssumptionViolation(format!("{name} = {tau} is not in [0, 1)")));
        }
    }
    if !(k.mu > 0.0) || !(k.lipschitz >= k.mu) {
        return Err(Error::invalid(format!("need 0 < mu <= L, got mu = {}, L = {}", k.mu, k.lipschitz)));
    }
    if !(k.u_dot_v > 0.0) {
        return Err(Error::AssumptionViolation(format!("u·v = {} must be positive", k.u_dot_v)));
    }
    let n = k.n as f64;
    let (mu, l) = (k.mu, k.lipschitz);
    let l2 = l * l;

    let c1 = 2.0 * k.u_dot_v * l2 / (mu * n * n);
    let c2 = 2.0 * k.u_norm2 / (k.u_dot_v * mu * n);
    let c3 = k.u_dot_v.powi(2) / n.powi(4);
    let c4 = k.u_norm2 / (n * n);

    let kr = 4.0 * k.pull_proj_norm.powi(2) / (1.0 - k.tau_r.powi(2));
    let vr2 = k.v_norm_r.powi(2);
    let c5 = kr * l2 * vr2;
    let c6 = 2.0 * kr * l2 * vr2 / n;
    let c7 = kr * k.delta_rc;
    let c8 = kr * vr2 / n;
    let c9 = k.pull_proj_transformed.powi(2);

    let kc = k.push_proj_norm.powi(2) * k.delta_c2.powi(2) / (1.0 - k.tau_c.powi(2));
    let c10 = 6.0 * kc * k.v_norm2 * l2 * l2;
    let c11 = 2.0 * kc * (3.0 * l2 * k.pull_blend_gap.powi(2) + 6.0 * l2 * k.v_norm2 / n);
    let c12 = 6.0 * kc * l2;
    let c13 = 2.0 * kc * (3.0 * k.v_norm2 / n + 4.0);
    let c14 = 2.0 * kc * l2;

    let c = Constants([c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12, c13, c14]);
    if let Some(i) = c.0.iter().position(|x| !x.is_finite()) {
        return Err(Error::NumericalFailure {
            what: format!("constant c{} is not finite", i + 1),
            residual: c.0[i],
        });
    }
    Ok(c)
}

/// Coefficients of the quartic `d₁α⁴ + d₂α² − d₃ < 0` that keeps
/// `det(I − A)` above half the product of the diagonal gaps.
///
/// Uses `1 − a₁₁ = α uᵀv μ / n`, so the `μ uᵀv` terms carry `1/n`.
pub fn d_coefficients(c: &Constants, mu: f64, u_dot_v: f64, n: usize, tau_r: f64, tau_c: f64) -> [f64; 3] {
    let n = n as f64;
    let gr = 1.0 - tau_r * tau_r;
    let gc = 1.0 - tau_c * tau_c;
    let d1 = c.c(1) * c.c(7) * c.c(10);
    let d2 = c.c(2) * c.c(5) * c.c(11)
        + 0.5 * gr * c.c(2) * c.c(10)
        + mu * u_dot_v / n * c.c(7) * c.c(11)
        + 0.5 * gc * c.c(1) * c.c(5);
    let d3 = mu * u_dot_v * gr * gc / (18.0 * n);
    [d1, d2, d3]
}

/// The three-branch stepsize bound.
pub fn stepsize_bound(c: &Constants, d: &[f64; 3], tau_r: f64, tau_c: f64) -> f64 {
    stepsize_branches(c, d, tau_r, tau_c).into_iter().fold(f64::INFINITY, f64::min)
}

pub fn stepsize_branches(c: &Constants, d: &[f64; 3], tau_r: f64, tau_c: f64) -> [f64; 3] {
    let [d1, d2, d3] = *d;
    [
        ((1.0 - tau_r * tau_r) / (6.0 * c.c(6))).sqrt(),
        ((1.0 - tau_c * tau_c) / (6.0 * c.c(12))).sqrt(),
        (2.0 * d3 / (d2 + (d2 * d2 + 4.0 * d1 * d3).sqrt())).sqrt(),
    ]
}

/// Largest `α` with `α uᵀv / n ≤ 1/(μ + L)`.
pub fn effective_stepsize_cap(mu: f64, lipschitz: f64, u_dot_v: f64, n: usize) -> f64 {
    n as f64 / ((mu + lipschitz) * u_dot_v)
}

/// Everything `assemble_system` needs besides the constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemInputs {
    pub alpha: f64,
    pub gamma: f64,
    pub eta: f64,
    /// `σ_ε²`
    pub sigma_eps2: f64,
    /// `σ_ξ²`
    pub sigma_xi2: f64,
    pub mu: f64,
    pub lipschitz: f64,
    pub tau_r: f64,
    pub tau_c: f64,
    pub alpha_tilde: f64,
}

pub fn assemble_system(c: &Constants, s: &SystemInputs) -> Result<(Matrix3<f64>, Vector3<f64>)> {
    if !(s.alpha_tilde > 0.0) {
        return Err(Error::Precondition(format!("effective stepsize {} must be positive", s.alpha_tilde)));
    }
    let cap = 1.0 / (s.mu + s.lipschitz);
    if s.alpha_tilde > cap {
        return Err(Error::Precondition(format!(
            "effective stepsize {:e} exceeds 1/(mu + L) = {cap:e}",
            s.alpha_tilde
        )));
    }
    let a = s.alpha;
    let a2 = a * a;
    let m = Matrix3::new(
        1.0 - s.alpha_tilde * s.mu,
        c.c(1) * a,
        c.c(2) * a,
        c.c(5) * a2,
        0.5 * (1.0 + s.tau_r * s.tau_r) + c.c(6) * a2,
        c.c(7) * a2,
        c.c(10) * a2,
        c.c(11),
        0.5 * (1.0 + s.tau_c * s.tau_c) + c.c(12) * a2,
    );
    let push = s.gamma * s.gamma * s.sigma_eps2;
    let pull = s.eta * s.eta * s.sigma_xi2;
    let b = Vector3::new(c.c(3) * a2, c.c(8) * a2, c.c(13)) * push + Vector3::new(c.c(4), c.c(9), c.c(14)) * pull;
    Ok((m, b))
}

pub fn spectral_radius3(a: &Matrix3<f64>) -> Result<f64> {
    spectral_radius(&Mat::from_iterator(3, 3, a.iter().copied()))
}

/// `([(I − A)⁻¹B]₁, [(I − A)⁻¹B]₂)`.
pub fn error_bounds(a: &Matrix3<f64>, b: &Vector3<f64>) -> Result<(f64, f64)> {
    let rho = spectral_radius3(a)?;
    if rho >= 1.0 {
        return Err(Error::Precondition(format!("rho(A) = {rho} is not below 1")));
    }
    let gap = Matrix3::identity() - a;
    let x = gap.lu().solve(b).ok_or_else(|| Error::NumericalFailure {
        what: "I - A is singular".into(),
        residual: rho,
    })?;
    Ok((x[0], x[1]))
}

/// Precomputed constants for one ensemble/objective/noise combination.
#[derive(Debug, Clone)]
pub struct Theory {
    pub inputs: ConstantInputs,
    pub constants: Constants,
    pub d: [f64; 3],
    pub gamma: f64,
    pub eta: f64,
    pub sigma_eps2: f64,
    pub sigma_xi2: f64,
    pub slack: f64,
}

impl Theory {
    pub fn new(mix: &MixingEnsemble, prob: &dyn Objective, sigma_eps2: f64, sigma_xi2: f64) -> Result<Self> {
        let inputs = ConstantInputs::gather(mix, prob)?;
        let constants = constants_from(&inputs)?;
        let d = d_coefficients(&constants, inputs.mu, inputs.u_dot_v, inputs.n, inputs.tau_r, inputs.tau_c);
        Ok(Self {
            inputs,
            constants,
            d,
            gamma: mix.gamma,
            eta: mix.eta,
            sigma_eps2,
            sigma_xi2,
            slack: mix.slack,
        })
    }

    pub fn branches(&self) -> [f64; 3] {
        stepsize_branches(&self.constants, &self.d, self.inputs.tau_r, self.inputs.tau_c)
    }

    pub fn effective_cap(&self) -> f64 {
        let k = &self.inputs;
        effective_stepsize_cap(k.mu, k.lipschitz, k.u_dot_v, k.n)
    }

    /// Three-branch bound, further capped so the effective stepsize stays
    /// within `1/(μ + L)`.
    pub fn alpha_max(&self) -> f64 {
        let three = stepsize_bound(&self.constants, &self.d, self.inputs.tau_r, self.inputs.tau_c);
        three.min(self.effective_cap())
    }

    pub fn alpha_tilde(&self, alpha: f64) -> f64 {
        alpha * self.inputs.u_dot_v / self.inputs.n as f64
    }

    pub fn system_inputs(&self, alpha: f64) -> SystemInputs {
        SystemInputs {
            alpha,
            gamma: self.gamma,
            eta: self.eta,
            sigma_eps2: self.sigma_eps2,
            sigma_xi2: self.sigma_xi2,
            mu: self.inputs.mu,
            lipschitz: self.inputs.lipschitz,
            tau_r: self.inputs.tau_r,
            tau_c: self.inputs.tau_c,
            alpha_tilde: self.alpha_tilde(alpha),
        }
    }

    pub fn system(&self, alpha: f64) -> Result<(Matrix3<f64>, Vector3<f64>)> {
        assemble_system(&self.constants, &self.system_inputs(alpha))
    }

    /// Full report at stepsize `alpha`. Bounds are present only when
    /// `ρ(A) < 1`.
    pub fn bundle(&self, alpha: f64) -> Result<TheoryBundle> {
        let (a, b) = self.system(alpha)?;
        let rho_a = spectral_radius3(&a)?;
        let bounds = if rho_a < 1.0 { Some(error_bounds(&a, &b)?) } else { None };
        let alpha_max = self.alpha_max();
        Ok(TheoryBundle {
            alpha,
            alpha_tilde: self.alpha_tilde(alpha),
            inputs: self.inputs,
            sigma_eps2: self.sigma_eps2,
            sigma_xi2: self.sigma_xi2,
            gamma: self.gamma,
            eta: self.eta,
            slack: self.slack,
            c: self.constants.0,
            d: self.d,
            a: rows(&a),
            b: [b[0], b[1], b[2]],
            rho_a,
            alpha_max,
            alpha_max_branches: self.branches(),
            effective_stepsize_cap: self.effective_cap(),
            certified: alpha <= alpha_max,
            bound_opt: bounds.map(|x| x.0),
            bound_consensus: bounds.map(|x| x.1),
        })
    }
}

fn rows(a: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|i| [a[(i, 0)], a[(i, 1)], a[(i, 2)]])
}

/// Serializable snapshot of the certificate at one stepsize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryBundle {
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub inputs: ConstantInputs,
    pub sigma_eps2: f64,
    pub sigma_xi2: f64,
    pub gamma: f64,
    pub eta: f64,
    /// Contraction slack the norms were built with.
    pub slack: f64,
    pub c: [f64; 14],
    pub d: [f64; 3],
    /// Row-major.
    pub a: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub rho_a: f64,
    pub alpha_max: f64,
    pub alpha_max_branches: [f64; 3],
    pub effective_stepsize_cap: f64,
    /// `alpha <= alpha_max`.
    pub certified: bool,
    pub bound_opt: Option<f64>,
    pub bound_consensus: Option<f64>,
}

impl TheoryBundle {
    pub fn a_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.a[i][j])
    }
}
