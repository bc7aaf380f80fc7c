//! Synchronous iteration engines.
//!
//! All three methods share the blended mixing matrices `R_η` (pull) and `C_γ`
//! (push) and the same link-noise model. In matrix form, with `∇F(X)` the
//! stacked local gradients:
//!
//! R-Push-Pull
//! ```text
//! S' = C_γ S + γ ε + ∇F(X)
//! X' = R_η X + η ξ − α (S' − S)
//! ```
//! Push-Pull
//! ```text
//! X' = R_η X + η ξ − α Y
//! Y' = C_γ Y + ∇F(X') − ∇F(X) + γ ε
//! ```
//! Push-DIGing (push-sum with gradient tracking)
//! ```text
//! W' = C_γ (W − α Y) + γ ε_w
//! z' = C_γ z          (+ γ ε_z when push weights are noisy)
//! X' = diag(z')⁻¹ W'
//! Y' = C_γ Y + ∇F(X') − ∇F(X) + γ ε_y
//! ```
//!
//! R-Push-Pull's tracker increment `S' − S` always sums to the summed
//! (noisy) gradient, whatever `S` started at; Push-Pull's `Y` only tracks the
//! gradient sum if it starts there and no noise enters.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::mixing::MixingEnsemble;
use crate::noise::ExchangeNoise;
use crate::objective::{check_iterates, Objective};

/// Push-sum weights smaller than this abort a Push-DIGing trial.
pub const PUSH_SUM_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmKind {
    #[serde(rename = "r-push-pull")]
    RPushPull,
    #[serde(rename = "push-pull")]
    PushPull,
    #[serde(rename = "push-diging")]
    PushDiging,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 3] = [Self::RPushPull, Self::PushPull, Self::PushDiging];

    pub fn name(self) -> &'static str {
        match self {
            Self::RPushPull => "r-push-pull",
            Self::PushPull => "push-pull",
            Self::PushDiging => "push-diging",
        }
    }

    /// Stable label for seed derivation; never reuse a value.
    pub fn stream_id(self) -> u64 {
        match self {
            Self::RPushPull => 1,
            Self::PushPull => 2,
            Self::PushDiging => 3,
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown algorithm `{s}` (expected r-push-pull, push-pull or push-diging)")))
    }
}

/// Method-specific auxiliary iterates.
#[derive(Debug, Clone, PartialEq)]
pub enum Tracker {
    Robust {
        s: Mat,
        /// `S_k` and `∇F(X_k)` from before the last step, so that
        /// `y_k = S_{k+1} − S_k` can be inspected.
        prev_s: Option<Mat>,
        prev_grad: Option<Mat>,
        /// Push-side noise injected by the last step.
        last_epsilon: Option<Mat>,
    },
    PushPull {
        y: Mat,
    },
    PushDiging {
        y: Mat,
        w: Mat,
        z: DVector<f64>,
    },
}

/// Iterates of one engine at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmState {
    pub k: usize,
    pub alpha: f64,
    /// Rows `x_{i,k}`.
    pub x: Mat,
    /// Cached `∇F(X_k)`.
    pub grad: Mat,
    pub tracker: Tracker,
}

impl AlgorithmState {
    pub fn kind(&self) -> AlgorithmKind {
        match self.tracker {
            Tracker::Robust { .. } => AlgorithmKind::RPushPull,
            Tracker::PushPull { .. } => AlgorithmKind::PushPull,
            Tracker::PushDiging { .. } => AlgorithmKind::PushDiging,
        }
    }

    /// Default initialization for `kind`: `S₀ = 0` or `Y₀ = ∇F(X₀)`.
    pub fn init(kind: AlgorithmKind, x0: Mat, alpha: f64, prob: &dyn Objective) -> Result<Self> {
        match kind {
            AlgorithmKind::RPushPull => {
                let s0 = Mat::zeros(x0.nrows(), x0.ncols());
                rpushpull_init(x0, s0, alpha, prob)
            }
            AlgorithmKind::PushPull => pushpull_init(x0, None, alpha, prob),
            AlgorithmKind::PushDiging => pushdiging_init(x0, None, alpha, prob),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("stepsize must be positive and finite, got {alpha}")));
    }
    Ok(())
}

fn check_same_shape(x0: &Mat, other: &Mat, what: &'static str) -> Result<()> {
    if x0.shape() != other.shape() {
        return Err(Error::ShapeMismatch {
            what,
            expected: x0.shape(),
            got: other.shape(),
        });
    }
    Ok(())
}

/// R-Push-Pull at `k = 0` from arbitrary `X₀`, `S₀`.
pub fn rpushpull_init(x0: Mat, s0: Mat, alpha: f64, prob: &dyn Objective) -> Result<AlgorithmState> {
    check_alpha(alpha)?;
    check_iterates(prob.agents(), prob.dim(), &x0)?;
    check_same_shape(&x0, &s0, "initial tracker S0")?;
    let grad = prob.stacked_gradient(&x0)?;
    Ok(AlgorithmState {
        k: 0,
        alpha,
        x: x0,
        grad,
        tracker: Tracker::Robust {
            s: s0,
            prev_s: None,
            prev_grad: None,
            last_epsilon: None,
        },
    })
}

/// Push-Pull at `k = 0`; `y0 = None` means `Y₀ = ∇F(X₀)`.
pub fn pushpull_init(x0: Mat, y0: Option<Mat>, alpha: f64, prob: &dyn Objective) -> Result<AlgorithmState> {
    check_alpha(alpha)?;
    check_iterates(prob.agents(), prob.dim(), &x0)?;
    let grad = prob.stacked_gradient(&x0)?;
    let y = match y0 {
        Some(y) => {
            check_same_shape(&x0, &y, "initial tracker Y0")?;
            y
        }
        None => grad.clone(),
    };
    Ok(AlgorithmState {
        k: 0,
        alpha,
        x: x0,
        grad,
        tracker: Tracker::PushPull { y },
    })
}

/// Push-DIGing at `k = 0` with `W₀ = X₀`, `z₀ = 1`; `y0 = None` means `Y₀ = ∇F(X₀)`.
pub fn pushdiging_init(x0: Mat, y0: Option<Mat>, alpha: f64, prob: &dyn Objective) -> Result<AlgorithmState> {
    check_alpha(alpha)?;
    check_iterates(prob.agents(), prob.dim(), &x0)?;
    let grad = prob.stacked_gradient(&x0)?;
    let y = match y0 {
        Some(y) => {
            check_same_shape(&x0, &y, "initial tracker Y0")?;
            y
        }
        None => grad.clone(),
    };
    let n = x0.nrows();
    Ok(AlgorithmState {
        k: 0,
        alpha,
        x: x0.clone(),
        grad,
        tracker: Tracker::PushDiging {
            y,
            w: x0,
            z: DVector::from_element(n, 1.0),
        },
    })
}

/// Shared, read-only inputs to a step.
#[derive(Clone, Copy)]
pub struct StepContext<'a> {
    pub mix: &'a MixingEnsemble,
    pub prob: &'a dyn Objective,
    pub noise: &'a ExchangeNoise,
    /// Corrupt the scalar push-sum weights of Push-DIGing as well.
    pub noisy_push_weights: bool,
}

impl<'a> StepContext<'a> {
    pub fn new(mix: &'a MixingEnsemble, prob: &'a dyn Objective, noise: &'a ExchangeNoise) -> Self {
        Self {
            mix,
            prob,
            noise,
            noisy_push_weights: false,
        }
    }
}

fn ensure_finite(k: usize, what: &str, m: &Mat) -> Result<()> {
    if let Some(pos) = m.iter().position(|x| !x.is_finite()) {
        return Err(Error::TrialAbort {
            iteration: k,
            reason: format!("non-finite {what} entry at flat index {pos}"),
        });
    }
    Ok(())
}

fn check_context(state: &AlgorithmState, ctx: &StepContext<'_>) -> Result<()> {
    let n = ctx.mix.agents();
    if state.x.nrows() != n || ctx.prob.agents() != n || ctx.noise.agents() != n {
        return Err(Error::ShapeMismatch {
            what: "step context",
            expected: (n, ctx.prob.dim()),
            got: state.x.shape(),
        });
    }
    Ok(())
}

/// One R-Push-Pull round.
pub fn rpushpull_step<R: Rng + ?Sized>(state: AlgorithmState, ctx: &StepContext<'_>, rng: &mut R) -> Result<AlgorithmState> {
    check_context(&state, ctx)?;
    let AlgorithmState { k, alpha, x, grad, tracker } = state;
    let Tracker::Robust { s, .. } = tracker else {
        return Err(Error::invalid("rpushpull_step needs an R-Push-Pull state"));
    };
    let (gamma, eta) = (ctx.mix.gamma, ctx.mix.eta);
    let draw = ctx.noise.sample(rng);

    let s_next = &ctx.mix.push_blend * &s + &draw.epsilon * gamma + &grad;
    let x_next = &ctx.mix.pull_blend * &x + &draw.xi * eta - (&s_next - &s) * alpha;
    ensure_finite(k + 1, "tracker", &s_next)?;
    ensure_finite(k + 1, "iterate", &x_next)?;
    let grad_next = ctx.prob.stacked_gradient(&x_next)?;
    ensure_finite(k + 1, "gradient", &grad_next)?;

    Ok(AlgorithmState {
        k: k + 1,
        alpha,
        x: x_next,
        grad: grad_next,
        tracker: Tracker::Robust {
            s: s_next,
            prev_s: Some(s),
            prev_grad: Some(grad),
            last_epsilon: Some(draw.epsilon),
        },
    })
}

/// One Push-Pull round.
pub fn pushpull_step<R: Rng + ?Sized>(state: AlgorithmState, ctx: &StepContext<'_>, rng: &mut R) -> Result<AlgorithmState> {
    check_context(&state, ctx)?;
    let AlgorithmState { k, alpha, x, grad, tracker } = state;
    let Tracker::PushPull { y } = tracker else {
        return Err(Error::invalid("pushpull_step needs a Push-Pull state"));
    };
    let (gamma, eta) = (ctx.mix.gamma, ctx.mix.eta);
    let draw = ctx.noise.sample(rng);

    let x_next = &ctx.mix.pull_blend * &x + &draw.xi * eta - &y * alpha;
    ensure_finite(k + 1, "iterate", &x_next)?;
    let grad_next = ctx.prob.stacked_gradient(&x_next)?;
    ensure_finite(k + 1, "gradient", &grad_next)?;
    let y_next = &ctx.mix.push_blend * &y + &grad_next - &grad + &draw.epsilon * gamma;
    ensure_finite(k + 1, "tracker", &y_next)?;

    Ok(AlgorithmState {
        k: k + 1,
        alpha,
        x: x_next,
        grad: grad_next,
        tracker: Tracker::PushPull { y: y_next },
    })
}

/// One Push-DIGing round.
pub fn pushdiging_step<R: Rng + ?Sized>(state: AlgorithmState, ctx: &StepContext<'_>, rng: &mut R) -> Result<AlgorithmState> {
    check_context(&state, ctx)?;
    let AlgorithmState { k, alpha, grad, tracker, .. } = state;
    let Tracker::PushDiging { y, w, z } = tracker else {
        return Err(Error::invalid("pushdiging_step needs a Push-DIGing state"));
    };
    let gamma = ctx.mix.gamma;
    let p = y.ncols();
    let eps_w = ctx.noise.sample_push(rng, p);
    let eps_y = ctx.noise.sample_push(rng, p);

    let w_next = &ctx.mix.push_blend * (&w - &y * alpha) + eps_w * gamma;
    let mut z_next = &ctx.mix.push_blend * &z;
    if ctx.noisy_push_weights {
        z_next += ctx.noise.sample_push(rng, 1).column(0) * gamma;
    }
    if let Some((i, zi)) = z_next
        .iter()
        .enumerate()
        .find(|(_, zi)| !(zi.abs() >= PUSH_SUM_FLOOR))
    {
        return Err(Error::TrialAbort {
            iteration: k + 1,
            reason: format!("push-sum weight of agent {i} collapsed to {zi:e}"),
        });
    }
    let mut x_next = w_next.clone();
    for (i, mut row) in x_next.row_iter_mut().enumerate() {
        row /= z_next[i];
    }
    ensure_finite(k + 1, "iterate", &x_next)?;
    let grad_next = ctx.prob.stacked_gradient(&x_next)?;
    ensure_finite(k + 1, "gradient", &grad_next)?;
    let y_next = &ctx.mix.push_blend * &y + &grad_next - &grad + eps_y * gamma;
    ensure_finite(k + 1, "tracker", &y_next)?;

    Ok(AlgorithmState {
        k: k + 1,
        alpha,
        x: x_next,
        grad: grad_next,
        tracker: Tracker::PushDiging {
            y: y_next,
            w: w_next,
            z: z_next,
        },
    })
}

/// Dispatches on the state's method.
pub fn step<R: Rng + ?Sized>(state: AlgorithmState, ctx: &StepContext<'_>, rng: &mut R) -> Result<AlgorithmState> {
    match state.kind() {
        AlgorithmKind::RPushPull => rpushpull_step(state, ctx, rng),
        AlgorithmKind::PushPull => pushpull_step(state, ctx, rng),
        AlgorithmKind::PushDiging => pushdiging_step(state, ctx, rng),
    }
}

/// `‖1ᵀY_k − 1ᵀ∇F(X_k)‖₂`.
///
/// For R-Push-Pull `Y_k = S_{k+1} − S_k` refers to the step just taken, so the
/// value is `None` before the first step.
pub fn tracking_residual(state: &AlgorithmState) -> Option<f64> {
    let (y, grad) = match &state.tracker {
        Tracker::Robust {
            s,
            prev_s: Some(prev_s),
            prev_grad: Some(prev_grad),
            ..
        } => (s - prev_s, prev_grad.clone()),
        Tracker::Robust { .. } => return None,
        Tracker::PushPull { y } | Tracker::PushDiging { y, .. } => (y.clone(), state.grad.clone()),
    };
    Some((y.row_sum() - grad.row_sum()).norm())
}
