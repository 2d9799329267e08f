//! Experiment harness: trials, convergence bookkeeping, grid search and the
//! rate-versus-condition-number experiments.
//!
//! Determinism contract: every random quantity is drawn from a stream fully
//! determined by `(master_seed, grid_index, trial_index)`, so experiment
//! output is a pure function of the configuration and the master seed,
//! independent of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{fit_line, fit_residual, max_abs_eigenvalue, NumericsError};
use crate::optimizers::{HyperParams, Method, OptimizerError, OptimizerState};
use crate::problems::{MomentMethod, MomentSet, ProblemError, ProblemInstance};
use crate::spectral::{covariance_operator, SpectralError, DIVERGENCE_TOLERANCE};

/// Losses are floored here before logarithms; realizable problems can reach
/// exact zero in floating point.
pub const LOSS_FLOOR: f64 = 1e-300;

/// Trial indices occupy the low 24 bits of a stream id.
const TRIAL_BITS: u32 = 24;
/// Grid indices occupy 40 bits above the trial index.
const GRID_BITS: u32 = 40;

/// Reserved grid index for drawing the target vector w*.
pub const STREAM_W_STAR: u64 = (1 << GRID_BITS) - 1;
/// Reserved grid index base for empirical moment estimation.
pub const STREAM_MOMENTS: u64 = (1 << GRID_BITS) - 2;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("loss trace is empty")]
    EmptyTrace,
    #[error("losses must be positive to compute a rate")]
    NonPositiveLoss,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Deterministic, statistically independent stream for one unit of work.
///
/// Canonical ordering: the stream id is `grid_index * 2^24 + trial_index`,
/// so equal `(master_seed, trial_index, grid_index)` tuples always yield the
/// same stream regardless of construction order or thread schedule.
pub fn seed_stream(master_seed: u64, trial_index: u64, grid_index: u64) -> ChaCha8Rng {
    assert!(trial_index < (1 << TRIAL_BITS), "trial index out of range");
    assert!(grid_index < (1 << GRID_BITS), "grid index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((grid_index << TRIAL_BITS) | trial_index);
    rng
}

/// Outcome of a single optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Sampled (iteration, population loss) pairs; always contains iteration
    /// zero and the last completed iteration.
    pub loss_trace: Vec<(u64, f64)>,
    pub converged: bool,
    pub diverged: bool,
    /// Last finite recorded loss.
    pub final_loss: f64,
    /// `(ln f(w_0) - ln f(w_t)) / t` over the completed span, with losses
    /// floored at [`LOSS_FLOOR`]. Meaningful only for non-diverged trials.
    pub rate: f64,
}

/// Convergence criterion: no divergence, and no recorded loss in the second
/// half of the run exceeds the starting loss.
pub fn converged(result: &TrialResult, start_loss: f64) -> Result<bool, HarnessError> {
    let span = result.loss_trace.last().ok_or(HarnessError::EmptyTrace)?.0;
    if result.diverged {
        return Ok(false);
    }
    Ok(result
        .loss_trace
        .iter()
        .filter(|(it, _)| 2 * it > span)
        .all(|(_, loss)| *loss <= start_loss))
}

/// Empirical decay rate `(ln f0 - ln ft) / t`.
pub fn empirical_rate(f0: f64, ft: f64, t: u64) -> Result<f64, HarnessError> {
    if !(f0 > 0.0) || !(ft > 0.0) {
        return Err(HarnessError::NonPositiveLoss);
    }
    if t == 0 {
        return Err(HarnessError::InvalidConfig("rate needs t >= 1".into()));
    }
    Ok((f0.ln() - ft.ln()) / t as f64)
}

/// Runs one trial from `w_0 = 0`, recording the population loss every
/// `record_every` iterations (endpoints always included). A step that
/// produces any non-finite component marks the trial diverged and stops it;
/// divergence is data, not an error.
pub fn run_trial(
    instance: &ProblemInstance,
    method: Method,
    hp: &HyperParams,
    iterations: u64,
    mut rng: ChaCha8Rng,
    record_every: u64,
) -> TrialResult {
    let d = instance.dimension();
    let w0 = vec![0.0; d];
    let f0 = instance.population_loss(&w0).expect("w0 has instance dimension");
    let mut trace = Vec::with_capacity((iterations / record_every.max(1) + 2) as usize);
    trace.push((0u64, f0));

    let mut state = OptimizerState::init(method, &w0);
    let mut a = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut diverged = false;
    let record_every = record_every.max(1);

    for t in 1..=iterations {
        let b = instance.sample_into(&mut rng, &mut a);
        {
            use crate::optimizers::GradientOracle;
            instance.gradient_into(state.query_point(), &a, b, &mut grad);
        }
        state.apply_step(&grad, hp);
        if state.has_non_finite() {
            diverged = true;
            break;
        }
        if t % record_every == 0 || t == iterations {
            let loss = instance
                .population_loss(state.iterate())
                .expect("state keeps instance dimension");
            if !loss.is_finite() {
                diverged = true;
                break;
            }
            trace.push((t, loss));
        }
    }

    let (span, final_loss) = *trace.last().expect("trace holds iteration zero");
    let rate = if span >= 1 {
        empirical_rate(f0.max(LOSS_FLOOR), final_loss.max(LOSS_FLOOR), span)
            .expect("floored losses are positive")
    } else {
        0.0
    };
    let mut result = TrialResult { loss_trace: trace, converged: false, diverged, final_loss, rate };
    result.converged = converged(&result, f0).expect("trace is non-empty");
    result
}

/// Aggregation rule for the final error of a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregate {
    Mean,
    Median,
}

/// Hyperparameter axes; axes a method does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub learning_rates: Vec<f64>,
    pub momenta: Vec<f64>,
    pub long_steps: Vec<f64>,
    pub advantage_params: Vec<f64>,
}

impl GridSpec {
    /// `n` evenly spaced values covering [0, 1] (endpoints included).
    pub fn closed_unit_axis(n: usize) -> Vec<f64> {
        assert!(n >= 2);
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    /// `n` evenly spaced values covering (0, 1] (zero excluded).
    pub fn open_unit_axis(n: usize) -> Vec<f64> {
        assert!(n >= 1);
        (1..=n).map(|i| i as f64 / n as f64).collect()
    }

    /// The learning-rate x momentum grid used by the trial experiments.
    pub fn momentum_grid(n: usize) -> Self {
        Self {
            learning_rates: Self::closed_unit_axis(n),
            momenta: Self::closed_unit_axis(n),
            long_steps: Vec::new(),
            advantage_params: Vec::new(),
        }
    }

    /// Enumerates hyperparameter cells for a method, in canonical order.
    pub fn cells(&self, method: Method) -> Result<Vec<HyperParams>, HarnessError> {
        let need = |axis: &Vec<f64>, name: &str| {
            if axis.is_empty() {
                Err(HarnessError::InvalidConfig(format!("grid axis '{name}' is empty")))
            } else {
                Ok(())
            }
        };
        need(&self.learning_rates, "learning_rates")?;
        let mut cells = Vec::new();
        match method {
            Method::Sgd => {
                for &lr in &self.learning_rates {
                    cells.push(HyperParams::sgd(lr));
                }
            }
            Method::Hb | Method::Nag => {
                need(&self.momenta, "momenta")?;
                for &lr in &self.learning_rates {
                    for &m in &self.momenta {
                        cells.push(HyperParams::momentum(lr, m));
                    }
                }
            }
            Method::Asgd | Method::AsgdReference => {
                need(&self.long_steps, "long_steps")?;
                need(&self.advantage_params, "advantage_params")?;
                for &lr in &self.learning_rates {
                    for &ls in &self.long_steps {
                        for &xi in &self.advantage_params {
                            cells.push(HyperParams::asgd(lr, ls, xi));
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

/// Aggregated outcome of one grid cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridCell {
    pub hp: HyperParams,
    pub converged_trials: usize,
    pub diverged_trials: usize,
    /// Mean final loss over converged trials; `None` when no trial converged
    /// or the cell's hyperparameters are invalid for the method.
    pub mean_final_loss: Option<f64>,
    pub median_final_loss: Option<f64>,
}

impl GridCell {
    pub fn aggregate(&self, rule: Aggregate) -> Option<f64> {
        match rule {
            Aggregate::Mean => self.mean_final_loss,
            Aggregate::Median => self.median_final_loss,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    /// Index into `cells` of the best cell, or `None` when every cell was
    /// fully divergent (no convergent setting exists on the grid).
    pub best_index: Option<usize>,
    pub cells: Vec<GridCell>,
}

impl GridSearchOutcome {
    pub fn best(&self) -> Option<&GridCell> {
        self.best_index.map(|i| &self.cells[i])
    }
}

/// Runs `n_trials` independent trials per grid cell and selects the cell
/// minimizing the aggregated final loss over converged trials only. Cells
/// with zero converged trials are excluded. Ties break on the hyperparameter
/// values themselves, so the outcome does not depend on enumeration order.
#[allow(clippy::too_many_arguments)]
pub fn grid_search(
    instance: &ProblemInstance,
    method: Method,
    grid: &GridSpec,
    n_trials: usize,
    iterations: u64,
    master_seed: u64,
    grid_index_base: u64,
    aggregate: Aggregate,
    record_every: u64,
) -> Result<GridSearchOutcome, HarnessError> {
    if n_trials == 0 {
        return Err(HarnessError::InvalidConfig("need at least one trial".into()));
    }
    let hps = grid.cells(method)?;
    let cells: Vec<GridCell> = hps
        .into_par_iter()
        .enumerate()
        .map(|(cell_idx, hp)| {
            if hp.validate(method).is_err() {
                return GridCell {
                    hp,
                    converged_trials: 0,
                    diverged_trials: 0,
                    mean_final_loss: None,
                    median_final_loss: None,
                };
            }
            let mut finals: Vec<f64> = Vec::new();
            let mut diverged = 0usize;
            for trial in 0..n_trials {
                let rng = seed_stream(
                    master_seed,
                    trial as u64,
                    grid_index_base + cell_idx as u64,
                );
                let result = run_trial(instance, method, &hp, iterations, rng, record_every);
                if result.diverged {
                    diverged += 1;
                }
                if result.converged {
                    finals.push(result.final_loss);
                }
            }
            let (mean, median) = if finals.is_empty() {
                (None, None)
            } else {
                let mean = finals.iter().sum::<f64>() / finals.len() as f64;
                let mut sorted = finals.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let median = if sorted.len() % 2 == 1 {
                    sorted[sorted.len() / 2]
                } else {
                    0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
                };
                (Some(mean), Some(median))
            };
            GridCell {
                hp,
                converged_trials: finals.len(),
                diverged_trials: diverged,
                mean_final_loss: mean,
                median_final_loss: median,
            }
        })
        .collect();

    let mut best: Option<usize> = None;
    for (i, cell) in cells.iter().enumerate() {
        let Some(value) = cell.aggregate(aggregate) else { continue };
        let better = match best {
            None => true,
            Some(j) => {
                let current = cells[j].aggregate(aggregate).expect("best always has a value");
                let a = (value, cell.hp.delta, cell.hp.alpha, cell.hp.kappa_long, cell.hp.xi);
                let b = (
                    current,
                    cells[j].hp.delta,
                    cells[j].hp.alpha,
                    cells[j].hp.kappa_long,
                    cells[j].hp.xi,
                );
                a.partial_cmp(&b) == Some(std::cmp::Ordering::Less)
            }
        };
        if better {
            best = Some(i);
        }
    }
    Ok(GridSearchOutcome { best_index: best, cells })
}

/// The two synthetic covariate families benchmarked against the condition
/// number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Distribution {
    Discrete,
    Gaussian,
}

impl Distribution {
    pub fn label(&self) -> &'static str {
        match self {
            Distribution::Discrete => "discrete",
            Distribution::Gaussian => "gaussian",
        }
    }

    /// Instance with Hessian condition number `lambda_max/lambda_min` equal
    /// to `condition`.
    pub fn instance(
        &self,
        condition: f64,
        w_star: Vec<f64>,
    ) -> Result<ProblemInstance, HarnessError> {
        let inst = match self {
            Distribution::Discrete => {
                ProblemInstance::two_point_with_condition(condition, w_star)?
            }
            Distribution::Gaussian => ProblemInstance::diagonal_gaussian(condition, w_star)?,
        };
        Ok(inst)
    }

    fn id(&self) -> u64 {
        match self {
            Distribution::Discrete => 0,
            Distribution::Gaussian => 1,
        }
    }
}

/// Reference step size used for SGD and accelerated SGD on each family.
pub fn paper_sgd_delta(distribution: Distribution) -> f64 {
    match distribution {
        Distribution::Discrete => 0.9,
        Distribution::Gaussian => 1.0 / 3.0,
    }
}

/// Accelerated-SGD parameters for an instance with Hessian condition number
/// `condition`: long step 2*condition (discrete) or 3*condition (Gaussian),
/// advantage parameter sqrt(2*condition/3) or sqrt(3*condition/2).
pub fn paper_asgd_hyperparams(distribution: Distribution, condition: f64) -> HyperParams {
    let delta = paper_sgd_delta(distribution);
    match distribution {
        Distribution::Discrete => {
            HyperParams::asgd(delta, 2.0 * condition, (2.0 * condition / 3.0).sqrt())
        }
        Distribution::Gaussian => {
            HyperParams::asgd(delta, 3.0 * condition, (3.0 * condition / 2.0).sqrt())
        }
    }
}

/// Whether rates come from simulated trials or from operator spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    Empirical,
    Spectral,
}

/// Configuration of a rate-versus-condition-number experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub distribution: Distribution,
    /// Target Hessian condition numbers (the x-axis of the slope fit).
    pub condition_numbers: Vec<f64>,
    pub methods: Vec<Method>,
    pub trials: usize,
    /// Iterations per trial are `ceil(iterations_factor * condition)`.
    pub iterations_factor: f64,
    pub master_seed: u64,
    /// Learning-rate x momentum grid searched for HB and NAG in the
    /// empirical experiment.
    pub grid: GridSpec,
    /// Axis resolution of the (0,1] grid minimized over in the spectral
    /// experiment for HB and NAG.
    pub spectral_grid_points: usize,
    pub moment_method: MomentMethod,
    /// Target number of recorded points per trace.
    pub record_points: u64,
    pub aggregate: Aggregate,
}

impl ExperimentConfig {
    pub fn new(distribution: Distribution, condition_numbers: Vec<f64>, master_seed: u64) -> Self {
        Self {
            distribution,
            condition_numbers,
            methods: vec![Method::Sgd, Method::Hb, Method::Nag, Method::Asgd],
            trials: 100,
            iterations_factor: 5.0,
            master_seed,
            grid: GridSpec::momentum_grid(10),
            spectral_grid_points: 50,
            moment_method: MomentMethod::Exact,
            record_points: 1000,
            aggregate: Aggregate::Mean,
        }
    }
}

/// Rate measured for one method at one condition number.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatePoint {
    pub kappa: f64,
    /// Decay rate; `None` when no convergent setting was found.
    pub rate: Option<f64>,
    pub chosen_hp: Option<HyperParams>,
    pub converged_trials: usize,
}

/// Fitted exponent gamma for one method: `ln(1/rate)` regressed on `ln kappa`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeReport {
    pub method: Method,
    pub kappa_values: Vec<f64>,
    pub rates: Vec<f64>,
    pub gamma: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub distribution: Distribution,
    pub w_star: Vec<f64>,
    pub slopes: Vec<SlopeReport>,
    pub points: Vec<(Method, Vec<RatePoint>)>,
}

fn method_id(method: Method) -> u64 {
    match method {
        Method::Sgd => 0,
        Method::Hb => 1,
        Method::Nag => 2,
        Method::Asgd => 3,
        Method::AsgdReference => 4,
    }
}

/// Composite grid index for experiment streams; cells per (method, kappa)
/// pair are limited to 2^22.
fn experiment_grid_index(dist: Distribution, method: Method, kappa_idx: usize, cell: u64) -> u64 {
    assert!(cell < (1 << 22));
    assert!(kappa_idx < (1 << 11));
    (method_id(method) << 34) | (dist.id() << 33) | ((kappa_idx as u64) << 22) | cell
}

fn fit_slope(method: Method, points: &[RatePoint]) -> Result<SlopeReport, HarnessError> {
    let mut xy = Vec::new();
    let mut kappas = Vec::new();
    let mut rates = Vec::new();
    for p in points {
        if let Some(r) = p.rate {
            if r > 0.0 {
                xy.push((p.kappa.ln(), (1.0 / r).ln()));
                kappas.push(p.kappa);
                rates.push(r);
            }
        }
    }
    if xy.len() < 2 {
        return Err(HarnessError::InvalidConfig(format!(
            "method {} produced fewer than two usable rate points",
            method.label()
        )));
    }
    let (gamma, intercept) = fit_line(&xy)?;
    Ok(SlopeReport {
        method,
        kappa_values: kappas,
        rates,
        gamma,
        residual: fit_residual(&xy, gamma, intercept),
    })
}

fn empirical_fixed_hp_point(
    instance: &ProblemInstance,
    method: Method,
    hp: &HyperParams,
    cfg: &ExperimentConfig,
    kappa_idx: usize,
    iterations: u64,
    record_every: u64,
) -> RatePoint {
    let grid_index = experiment_grid_index(cfg.distribution, method, kappa_idx, 0);
    let results: Vec<TrialResult> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let rng = seed_stream(cfg.master_seed, trial as u64, grid_index);
            run_trial(instance, method, hp, iterations, rng, record_every)
        })
        .collect();
    let f0 = instance
        .population_loss(&vec![0.0; instance.dimension()])
        .expect("zero start");
    let converged: Vec<f64> = results
        .iter()
        .filter(|r| r.converged)
        .map(|r| r.final_loss)
        .collect();
    let rate = if converged.is_empty() {
        None
    } else {
        let agg = match cfg.aggregate {
            Aggregate::Mean => converged.iter().sum::<f64>() / converged.len() as f64,
            Aggregate::Median => {
                let mut s = converged.clone();
                s.sort_by(|a, b| a.partial_cmp(b).unwrap());
                if s.len() % 2 == 1 {
                    s[s.len() / 2]
                } else {
                    0.5 * (s[s.len() / 2 - 1] + s[s.len() / 2])
                }
            }
        };
        empirical_rate(f0.max(LOSS_FLOOR), agg.max(LOSS_FLOOR), iterations).ok()
    };
    RatePoint {
        kappa: instance.kappa(),
        rate,
        chosen_hp: Some(*hp),
        converged_trials: converged.len(),
    }
}

fn empirical_point(
    instance: &ProblemInstance,
    method: Method,
    cfg: &ExperimentConfig,
    kappa_idx: usize,
) -> Result<RatePoint, HarnessError> {
    let condition = instance.kappa();
    let iterations = (cfg.iterations_factor * condition).ceil().max(2.0) as u64;
    let record_every = (iterations / cfg.record_points.max(1)).max(1);
    match method {
        Method::Sgd => {
            let hp = HyperParams::sgd(paper_sgd_delta(cfg.distribution));
            Ok(empirical_fixed_hp_point(
                instance, method, &hp, cfg, kappa_idx, iterations, record_every,
            ))
        }
        Method::Asgd | Method::AsgdReference => {
            let hp = paper_asgd_hyperparams(cfg.distribution, condition);
            hp.validate(method)?;
            Ok(empirical_fixed_hp_point(
                instance, method, &hp, cfg, kappa_idx, iterations, record_every,
            ))
        }
        Method::Hb | Method::Nag => {
            let base = experiment_grid_index(cfg.distribution, method, kappa_idx, 0);
            let outcome = grid_search(
                instance,
                method,
                &cfg.grid,
                cfg.trials,
                iterations,
                cfg.master_seed,
                base,
                cfg.aggregate,
                record_every,
            )?;
            let f0 = instance
                .population_loss(&vec![0.0; instance.dimension()])
                .expect("zero start");
            match outcome.best() {
                None => Ok(RatePoint {
                    kappa: condition,
                    rate: None,
                    chosen_hp: None,
                    converged_trials: 0,
                }),
                Some(cell) => {
                    let agg = cell.aggregate(cfg.aggregate).expect("best cell has a value");
                    let rate =
                        empirical_rate(f0.max(LOSS_FLOOR), agg.max(LOSS_FLOOR), iterations).ok();
                    Ok(RatePoint {
                        kappa: condition,
                        rate,
                        chosen_hp: Some(cell.hp),
                        converged_trials: cell.converged_trials,
                    })
                }
            }
        }
    }
}

fn spectral_point(
    instance: &ProblemInstance,
    moments: &MomentSet,
    method: Method,
    cfg: &ExperimentConfig,
) -> Result<RatePoint, HarnessError> {
    let condition = instance.kappa();
    match method {
        Method::Sgd | Method::Asgd => {
            let hp = match method {
                Method::Sgd => HyperParams::sgd(paper_sgd_delta(cfg.distribution)),
                _ => paper_asgd_hyperparams(cfg.distribution, condition),
            };
            hp.validate(method)?;
            let op = covariance_operator(method, &hp, instance, moments)?;
            let lambda = max_abs_eigenvalue(&op.matrix)?;
            let rate = if lambda >= 1.0 - DIVERGENCE_TOLERANCE { None } else { Some(-lambda.ln()) };
            Ok(RatePoint {
                kappa: condition,
                rate,
                chosen_hp: Some(hp),
                converged_trials: 0,
            })
        }
        Method::Hb | Method::Nag => {
            let axis = GridSpec::open_unit_axis(cfg.spectral_grid_points);
            let cells: Vec<HyperParams> = axis
                .iter()
                .flat_map(|&lr| axis.iter().map(move |&m| HyperParams::momentum(lr, m)))
                .collect();
            let evaluated: Vec<Option<f64>> = cells
                .par_iter()
                .map(|hp| {
                    let op = covariance_operator(method, hp, instance, moments).ok()?;
                    let lambda = max_abs_eigenvalue(&op.matrix).ok()?;
                    (lambda < 1.0 - DIVERGENCE_TOLERANCE).then_some(lambda)
                })
                .collect();
            let mut best: Option<(f64, usize)> = None;
            for (i, lambda) in evaluated.iter().enumerate() {
                if let Some(l) = lambda {
                    let better = match best {
                        None => true,
                        Some((cur, j)) => {
                            let a = (*l, cells[i].delta, cells[i].alpha);
                            let b = (cur, cells[j].delta, cells[j].alpha);
                            a.partial_cmp(&b) == Some(std::cmp::Ordering::Less)
                        }
                    };
                    if better {
                        best = Some((*l, i));
                    }
                }
            }
            match best {
                None => Ok(RatePoint {
                    kappa: condition,
                    rate: None,
                    chosen_hp: None,
                    converged_trials: 0,
                }),
                Some((lambda, i)) => Ok(RatePoint {
                    kappa: condition,
                    rate: Some(-lambda.ln()),
                    chosen_hp: Some(cells[i]),
                    converged_trials: 0,
                }),
            }
        }
        Method::AsgdReference => Err(HarnessError::InvalidConfig(
            "spectral analysis covers sgd, hb, nag and asgd".into(),
        )),
    }
}

/// Runs the full rate-versus-condition-number experiment and fits one slope
/// per method.
pub fn rate_vs_kappa_experiment(
    kind: ExperimentKind,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, HarnessError> {
    if cfg.condition_numbers.len() < 2 {
        return Err(HarnessError::InvalidConfig("need at least two condition numbers".into()));
    }
    if cfg.condition_numbers.iter().any(|k| !(*k >= 1.0)) {
        return Err(HarnessError::InvalidConfig("condition numbers must be >= 1".into()));
    }
    let mut w_star_rng = seed_stream(cfg.master_seed, 0, STREAM_W_STAR - cfg.distribution.id());
    let w_star = ProblemInstance::random_w_star(2, &mut w_star_rng);

    let mut points: Vec<(Method, Vec<RatePoint>)> =
        cfg.methods.iter().map(|m| (*m, Vec::new())).collect();
    for (kappa_idx, &condition) in cfg.condition_numbers.iter().enumerate() {
        let instance = cfg.distribution.instance(condition, w_star.clone())?;
        let moments = match kind {
            ExperimentKind::Spectral => {
                let mut rng = seed_stream(
                    cfg.master_seed,
                    kappa_idx as u64,
                    STREAM_MOMENTS - 2 * cfg.distribution.id(),
                );
                Some(instance.fourth_moment_operator(cfg.moment_method, &mut rng)?)
            }
            ExperimentKind::Empirical => None,
        };
        for (method, series) in points.iter_mut() {
            let point = match kind {
                ExperimentKind::Empirical => empirical_point(&instance, *method, cfg, kappa_idx)?,
                ExperimentKind::Spectral => {
                    spectral_point(&instance, moments.as_ref().expect("built above"), *method, cfg)?
                }
            };
            series.push(point);
        }
    }

    let slopes = points
        .iter()
        .map(|(m, series)| fit_slope(*m, series))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentReport { kind, distribution: cfg.distribution, w_star, slopes, points })
}
