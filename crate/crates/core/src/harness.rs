//! Monte-Carlo experiment runner.
//!
//! One run builds a graph and a ridge problem from the master seed, then
//! executes `trials` independent trials. Within a trial every algorithm starts
//! from the same `X₀` on the same graph and problem; only the noise streams
//! differ, each drawn from its own seed branch. Trials run in parallel and are
//! reduced in trial order, so results do not depend on scheduling.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{self, AlgorithmKind, AlgorithmState, StepContext};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::mixing::{EnsembleSummary, MixingEnsemble, DEFAULT_SLACK};
use crate::noise::{ExchangeNoise, NoiseChannel};
use crate::objective::{make_ridge, Objective, RidgeProblem};
use crate::seed::{self, branch};
use crate::theory::{Theory, TheoryBundle};
use crate::topology::{assumption3_holds, generate_ring_plus_random, DirectedGraph, RingKind, RootCheck};

/// Initial-state overrides. Defaults: `X₀ = 0`, `S₀ = 0`, `Y₀ = ∇F(X₀)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    /// Entries of `X₀` drawn i.i.d. `N(0, x0_std²)` per trial; 0 gives the zero matrix.
    pub x0_std: f64,
    /// Constant fill for R-Push-Pull's `S₀`.
    pub s0_fill: Option<f64>,
    /// Constant fill for the Push-Pull and Push-DIGing `Y₀`.
    pub y0_fill: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub p_add: f64,
    pub ring: RingKind,
    /// Graph seed; derived from `seed` when absent.
    pub graph_seed: Option<u64>,
    /// Edge-list file used for both pull and push graphs instead of the
    /// generated ring.
    pub graph_file: Option<PathBuf>,
    /// Problem-data seed; derived from `seed` when absent.
    pub problem_seed: Option<u64>,
    pub rho: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub eta: f64,
    /// Per-link, per-component noise variance.
    pub sigma_link2: f64,
    pub algorithms: Vec<AlgorithmKind>,
    pub iterations: usize,
    pub trials: usize,
    pub seed: u64,
    /// Contraction-norm slack used by the theory report.
    pub slack: f64,
    pub init: InitConfig,
    /// Also corrupt Push-DIGing's scalar push-sum weights.
    pub noisy_push_weights: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 15,
            p: 10,
            p_add: 0.3,
            ring: RingKind::Directed,
            graph_seed: None,
            graph_file: None,
            problem_seed: None,
            rho: 0.01,
            alpha: 0.01,
            gamma: 0.5,
            eta: 0.01,
            sigma_link2: 0.01,
            algorithms: AlgorithmKind::ALL.to_vec(),
            iterations: 5000,
            trials: 50,
            seed: 0,
            slack: DEFAULT_SLACK,
            init: InitConfig::default(),
            noisy_push_weights: false,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.p == 0 {
            return bad("p must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("algorithm list is empty".into());
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return bad("algorithm list has duplicates".into());
        }
        if !(0.0..=1.0).contains(&self.p_add) {
            return bad(format!("p_add must lie in [0, 1], got {}", self.p_add));
        }
        if !(self.rho > 0.0) {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        for (name, v) in [("gamma", self.gamma), ("eta", self.eta), ("slack", self.slack)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if !(self.sigma_link2 >= 0.0) || !self.sigma_link2.is_finite() {
            return bad(format!("sigma_link2 must be finite and >= 0, got {}", self.sigma_link2));
        }
        if !(self.init.x0_std >= 0.0) || !self.init.x0_std.is_finite() {
            return bad(format!("init.x0_std must be finite and >= 0, got {}", self.init.x0_std));
        }
        Ok(())
    }

    pub fn effective_graph_seed(&self) -> u64 {
        self.graph_seed.unwrap_or_else(|| seed::derive(self.seed, &[branch::GRAPH]))
    }

    pub fn effective_problem_seed(&self) -> u64 {
        self.problem_seed.unwrap_or_else(|| seed::derive(self.seed, &[branch::PROBLEM]))
    }
}

/// `(1/n) Σ_i ‖x_i − x*‖₂²`.
///
/// # Panics
/// If `x_star.len()` differs from the number of columns of `x`.
pub fn mean_square_error_metric(x: &Mat, x_star: &DVector<f64>) -> f64 {
    assert_eq!(x.ncols(), x_star.len(), "iterate width must match x*");
    let n = x.nrows();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = x
        .row_iter()
        .map(|row| row.iter().zip(x_star.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum();
    total / n as f64
}

/// Graph, weights, problem and noise model shared by every trial.
#[derive(Debug, Clone)]
pub struct Setup {
    pub graph: DirectedGraph,
    pub root_check: RootCheck,
    pub mix: MixingEnsemble,
    pub problem: RidgeProblem,
    pub noise: ExchangeNoise,
}

impl Setup {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let graph = match &cfg.graph_file {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let g: DirectedGraph = text.parse()?;
                if g.node_count() != cfg.n {
                    return Err(Error::invalid(format!(
                        "{} has {} nodes but n = {}",
                        path.display(),
                        g.node_count(),
                        cfg.n
                    )));
                }
                g
            }
            None => generate_ring_plus_random(cfg.n, cfg.p_add, cfg.effective_graph_seed(), cfg.ring)?,
        };
        let root_check = assumption3_holds(&graph, &graph)?;
        if !root_check.holds {
            return Err(Error::AssumptionViolation(root_check.diagnostic()));
        }
        let mix = MixingEnsemble::from_graphs(&graph, &graph, cfg.eta, cfg.gamma, cfg.slack)?;
        let problem = make_ridge(cfg.n, cfg.p, cfg.rho, cfg.effective_problem_seed())?;
        let channel = NoiseChannel::gaussian(cfg.sigma_link2)?;
        let noise = ExchangeNoise::new(&mix, cfg.p, channel);
        Ok(Self {
            graph,
            root_check,
            mix,
            problem,
            noise,
        })
    }

    pub fn theory(&self) -> Result<Theory> {
        Theory::new(
            &self.mix,
            &self.problem,
            self.noise.push_variance_bound(),
            self.noise.pull_variance_bound(),
        )
    }
}

/// Certificate evaluated at the configured stepsize and at the certified one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    /// At the run's `alpha`; absent when a hypothesis of the recursion fails there.
    pub at_run_alpha: Option<TheoryBundle>,
    pub at_run_alpha_error: Option<String>,
    /// At `alpha_max`.
    pub at_alpha_max: TheoryBundle,
}

impl TheoryReport {
    pub fn evaluate(setup: &Setup, alpha: f64) -> Result<Self> {
        let theory = setup.theory()?;
        let at_alpha_max = theory.bundle(theory.alpha_max())?;
        let (at_run_alpha, at_run_alpha_error) = match theory.bundle(alpha) {
            Ok(b) => (Some(b), None),
            Err(Error::Precondition(msg)) => (None, Some(msg)),
            Err(e) => return Err(e),
        };
        Ok(Self {
            at_run_alpha,
            at_run_alpha_error,
            at_alpha_max,
        })
    }
}

/// How one (trial, algorithm) pair ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub algorithm: AlgorithmKind,
    /// Iteration at which the trial aborted.
    pub aborted_at: Option<usize>,
    pub abort_reason: Option<String>,
    pub final_error: Option<f64>,
    pub min_error: f64,
    /// Metric after steps `1..=len`; shorter than `iterations` after an abort.
    #[serde(skip)]
    pub series: Vec<f64>,
}

/// Aggregate curve for one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSeries {
    pub algorithm: AlgorithmKind,
    /// Mean over trials still running at each iteration; NaN when none are.
    pub mean: Vec<f64>,
    pub trial_min: Vec<f64>,
    pub trial_max: Vec<f64>,
    pub aborted_trials: usize,
    /// Every trial aborted.
    pub diverged: bool,
}

impl AlgorithmSeries {
    pub fn final_mean(&self) -> f64 {
        *self.mean.last().unwrap_or(&f64::NAN)
    }

    /// Smallest finite mean value.
    pub fn min_mean(&self) -> f64 {
        self.mean.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min)
    }

    /// Average of the mean curve over its last `fraction` of iterations.
    pub fn tail_mean(&self, fraction: f64) -> f64 {
        let len = self.mean.len();
        let take = ((len as f64 * fraction).ceil() as usize).clamp(1, len.max(1));
        let tail = &self.mean[len - take..];
        tail.iter().sum::<f64>() / take as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WallClock {
    pub setup: Duration,
    pub trials: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub mu: f64,
    pub lipschitz: f64,
    pub x_star: Vec<f64>,
    pub initial_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub graph_edges: Vec<(usize, usize)>,
    pub root_check: RootCheck,
    pub ensemble: EnsembleSummary,
    pub problem: ProblemSummary,
    pub sigma_eps2: f64,
    pub sigma_xi2: f64,
    pub theory: TheoryReport,
    pub series: Vec<AlgorithmSeries>,
    pub trials: Vec<TrialRecord>,
    /// Kept out of the JSON so identical seeds give identical files.
    #[serde(skip)]
    pub wall_clock: WallClock,
}

impl RunReport {
    pub fn series_for(&self, kind: AlgorithmKind) -> Option<&AlgorithmSeries> {
        self.series.iter().find(|s| s.algorithm == kind)
    }

    /// True when every algorithm lost every trial.
    pub fn all_aborted(&self) -> bool {
        self.series.iter().all(|s| s.diverged)
    }
}

fn initial_iterate(cfg: &ExperimentConfig, trial: usize) -> Mat {
    if cfg.init.x0_std == 0.0 {
        return Mat::zeros(cfg.n, cfg.p);
    }
    let mut rng = seed::rng_for(cfg.seed, &[branch::TRIAL, trial as u64, branch::INIT]);
    Mat::from_fn(cfg.n, cfg.p, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * cfg.init.x0_std
    })
}

fn initial_state(cfg: &ExperimentConfig, kind: AlgorithmKind, x0: Mat, prob: &dyn Objective) -> Result<AlgorithmState> {
    let fill = |v: f64| Mat::from_element(cfg.n, cfg.p, v);
    match kind {
        AlgorithmKind::RPushPull => {
            let s0 = fill(cfg.init.s0_fill.unwrap_or(0.0));
            algorithms::rpushpull_init(x0, s0, cfg.alpha, prob)
        }
        AlgorithmKind::PushPull => algorithms::pushpull_init(x0, cfg.init.y0_fill.map(fill), cfg.alpha, prob),
        AlgorithmKind::PushDiging => algorithms::pushdiging_init(x0, cfg.init.y0_fill.map(fill), cfg.alpha, prob),
    }
}

fn run_trial(cfg: &ExperimentConfig, setup: &Setup, trial: usize) -> Result<Vec<TrialRecord>> {
    let x0 = initial_iterate(cfg, trial);
    let x_star = setup.problem.x_star();
    let ctx = StepContext {
        noisy_push_weights: cfg.noisy_push_weights,
        ..StepContext::new(&setup.mix, &setup.problem, &setup.noise)
    };
    let mut out = Vec::with_capacity(cfg.algorithms.len());
    for &kind in &cfg.algorithms {
        let mut rng = seed::rng_for(cfg.seed, &[branch::TRIAL, trial as u64, branch::NOISE, kind.stream_id()]);
        let mut state = initial_state(cfg, kind, x0.clone(), &setup.problem)?;
        let mut series = Vec::with_capacity(cfg.iterations);
        let mut abort = None;
        for _ in 0..cfg.iterations {
            match algorithms::step(state, &ctx, &mut rng) {
                Ok(next) => {
                    series.push(mean_square_error_metric(&next.x, x_star));
                    state = next;
                }
                Err(Error::TrialAbort { iteration, reason }) => {
                    abort = Some((iteration, reason));
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let min_error = series.iter().copied().fold(f64::INFINITY, f64::min);
        out.push(TrialRecord {
            trial,
            algorithm: kind,
            final_error: if abort.is_none() { series.last().copied() } else { None },
            aborted_at: abort.as_ref().map(|a| a.0),
            abort_reason: abort.map(|a| a.1),
            min_error,
            series,
        });
    }
    Ok(out)
}

fn aggregate(kind: AlgorithmKind, iterations: usize, records: &[&TrialRecord]) -> AlgorithmSeries {
    let mut mean = vec![f64::NAN; iterations];
    let mut trial_min = vec![f64::NAN; iterations];
    let mut trial_max = vec![f64::NAN; iterations];
    for k in 0..iterations {
        let (mut sum, mut count) = (0.0, 0usize);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        // Summation order is the trial order.
        for r in records {
            if let Some(&e) = r.series.get(k) {
                sum += e;
                count += 1;
                lo = lo.min(e);
                hi = hi.max(e);
            }
        }
        if count > 0 {
            mean[k] = sum / count as f64;
            trial_min[k] = lo;
            trial_max[k] = hi;
        }
    }
    let aborted_trials = records.iter().filter(|r| r.aborted_at.is_some()).count();
    AlgorithmSeries {
        algorithm: kind,
        mean,
        trial_min,
        trial_max,
        aborted_trials,
        diverged: aborted_trials == records.len(),
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let started = Instant::now();
    let setup = Setup::build(cfg)?;
    let theory = TheoryReport::evaluate(&setup, cfg.alpha)?;
    let setup_time = started.elapsed();

    let trial_start = Instant::now();
    let per_trial: Vec<Vec<TrialRecord>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &setup, t))
        .collect::<Result<_>>()?;
    let trial_time = trial_start.elapsed();

    let trials: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let series = cfg
        .algorithms
        .iter()
        .map(|&kind| {
            let recs: Vec<&TrialRecord> = trials.iter().filter(|r| r.algorithm == kind).collect();
            aggregate(kind, cfg.iterations, &recs)
        })
        .collect();

    let x_star = setup.problem.x_star();
    let problem = ProblemSummary {
        mu: setup.problem.mu(),
        lipschitz: setup.problem.lipschitz(),
        x_star: x_star.iter().copied().collect(),
        initial_error: (0..cfg.trials)
            .map(|t| mean_square_error_metric(&initial_iterate(cfg, t), x_star))
            .sum::<f64>()
            / cfg.trials as f64,
    };
    Ok(RunReport {
        config: cfg.clone(),
        graph_edges: setup.graph.edges(),
        root_check: setup.root_check.clone(),
        ensemble: setup.mix.summary(),
        problem,
        sigma_eps2: setup.noise.push_variance_bound(),
        sigma_xi2: setup.noise.pull_variance_bound(),
        theory,
        series,
        trials,
        wall_clock: WallClock {
            setup: setup_time,
            trials: trial_time,
            total: started.elapsed(),
        },
    })
}

/// Files written by [`emit_outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub plots: Vec<PathBuf>,
}

#[derive(Serialize)]
struct CsvRow {
    iteration: usize,
    algorithm: &'static str,
    mean_error: f64,
    trial_min: f64,
    trial_max: f64,
}

/// Writes `errors.csv`, `report.json` and one `<algorithm>.dat` plot file per
/// algorithm into `dir`, creating it if needed.
pub fn emit_outputs(report: &RunReport, dir: &Path) -> Result<OutputPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let csv_path = dir.join("errors.csv");
    let file = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for s in &report.series {
        for k in 0..s.mean.len() {
            w.serialize(CsvRow {
                iteration: k + 1,
                algorithm: s.algorithm.name(),
                mean_error: s.mean[k],
                trial_min: s.trial_min[k],
                trial_max: s.trial_max[k],
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;

    let json_path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;

    let mut plots = Vec::with_capacity(report.series.len());
    for s in &report.series {
        let path = dir.join(format!("{}.dat", s.algorithm.name()));
        let mut body = format!("# iteration mean_error ({})\n", s.algorithm.name());
        for (k, m) in s.mean.iter().enumerate() {
            body.push_str(&format!("{} {}\n", k + 1, m));
        }
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(body.as_bytes()).map_err(|e| Error::io(&path, e))?;
        plots.push(path);
    }
    Ok(OutputPaths {
        csv: csv_path,
        json: json_path,
        plots,
    })
}
