//! The outer loop: Bayesian optimization over domain distribution
//! parameters, plus the two non-adaptive baselines.
//!
//! Every stage draws from a seed derived from the run seed and the stage's
//! position (dataset row, loop iteration), so a run can be resumed from its
//! recorded events and finish exactly as an uninterrupted run would.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domains::{DomainDistrParams, DomainParams, DomainSpace};
use crate::error::{Error, Result};
use crate::gp::{map_phi, maximize_acquisition, AcquisitionConfig, BoDataset, GpFitConfig, GpHyperparams, GpModel};
use crate::polopt::{self, BatchRunner, GenerationStats, PolOptConfig, TrainResult};
use crate::rng::{child_rng, derive_seed, tag};
use crate::task::{fixed_domain_returns, RandomizedObjective, Task};

/// A simulator, its randomizable parameters and the policy starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub task: Task,
    pub space: DomainSpace,
    pub theta_init: Vec<f64>,
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        self.task.check_domain(&self.space.nominal())?;
        if self.theta_init.len() != self.task.policy_dim() {
            return Err(Error::DimensionMismatch { expected: self.task.policy_dim(), got: self.theta_init.len() });
        }
        Ok(())
    }
}

/// Stand-in for the physical system: one fixed, hidden parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TargetDomain {
    pub params: DomainParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayrnConfig {
    pub n_init: usize,
    pub n_iter_max: usize,
    /// Target rollouts per evaluation.
    pub n_tau: usize,
    pub j_succ: f64,
    /// End the loop early once the latest target return reaches `j_succ`.
    #[serde(default = "default_true")]
    pub stop_on_success: bool,
    pub polopt: PolOptConfig,
    /// Train every candidate from the same seed, so differences in Ĵ come
    /// from φ rather than from optimizer noise.
    #[serde(default)]
    pub common_train_seed: bool,
    #[serde(default)]
    pub gp: GpFitConfig,
    #[serde(default)]
    pub acquisition: AcquisitionConfig,
}

fn default_true() -> bool {
    true
}

impl BayrnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_init < 2 {
            return Err(Error::invalid("n_init must be >= 2"));
        }
        if self.n_iter_max == 0 {
            return Err(Error::invalid("n_iter_max must be >= 1"));
        }
        if self.n_tau == 0 {
            return Err(Error::invalid("n_tau must be >= 1"));
        }
        if !self.j_succ.is_finite() {
            return Err(Error::invalid("j_succ must be finite"));
        }
        self.polopt.validate()?;
        self.gp.validate()
    }
}

/// Target returns of one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub returns: Vec<f64>,
    pub mean: f64,
}

/// Mean return of `n_tau` rollouts on the target; rollout `k` is seeded by
/// `(seed, EVAL, k)`.
pub fn evaluate_on_target(task: &Task, theta: &[f64], target: &TargetDomain, gamma: f64, n_tau: usize, seed: u64) -> Result<Evaluation> {
    if n_tau == 0 {
        return Err(Error::invalid("n_tau must be >= 1"));
    }
    let returns = fixed_domain_returns(task, theta, &target.params, gamma, seed, n_tau)?;
    let mean = returns.iter().sum::<f64>() / n_tau as f64;
    Ok(Evaluation { returns, mean })
}

/// One trained-and-evaluated point of the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub train_seed: u64,
    pub retried: bool,
    /// Simulated return the optimizer reported.
    pub j_sim: f64,
    /// Mean target return.
    pub j_hat: f64,
    pub target_returns: Vec<f64>,
    pub curve: Vec<GenerationStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum RunEvent {
    InitCandidate {
        index: usize,
        #[serde(flatten)]
        candidate: Candidate,
    },
    BoIteration {
        iteration: usize,
        hyperparams: GpHyperparams,
        #[serde(flatten)]
        candidate: Candidate,
    },
    Final {
        iterations: usize,
        dataset_size: usize,
        success: bool,
        hyperparams: GpHyperparams,
        #[serde(flatten)]
        candidate: Candidate,
    },
}

/// Receives events as they happen, e.g. to checkpoint them.
pub trait RunObserver {
    fn on_event(&mut self, event: &RunEvent) -> Result<()>;
}

/// Discards events.
pub struct NoObserver;

impl RunObserver for NoObserver {
    fn on_event(&mut self, _: &RunEvent) -> Result<()> {
        Ok(())
    }
}

impl<F: FnMut(&RunEvent) -> Result<()>> RunObserver for F {
    fn on_event(&mut self, event: &RunEvent) -> Result<()> {
        self(event)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayrnOutcome {
    pub phi_star: Vec<f64>,
    pub theta_star: Vec<f64>,
    pub j_hat: f64,
    pub iterations: usize,
    pub dataset: BoDataset,
    pub events: Vec<RunEvent>,
}

fn train_on(exp: &Experiment, distr: DomainDistrParams, cfg: &PolOptConfig, seed: u64, runner: &dyn BatchRunner) -> Result<TrainResult> {
    let objective = RandomizedObjective::new(&exp.task, &exp.space, distr, cfg.gamma);
    polopt::train(&objective, &exp.theta_init, cfg, seed, runner)
}

/// Trains with seed `train_seed` on `distr` and evaluates on the target.
#[allow(clippy::too_many_arguments)]
fn candidate(
    exp: &Experiment,
    target: &TargetDomain,
    cfg: &BayrnConfig,
    phi: Vec<f64>,
    distr: DomainDistrParams,
    train_seed: u64,
    eval_seed: u64,
    runner: &dyn BatchRunner,
) -> Result<Candidate> {
    let trained = train_on(exp, distr, &cfg.polopt, train_seed, runner)?;
    let eval = evaluate_on_target(&exp.task, &trained.theta, target, cfg.polopt.gamma, cfg.n_tau, eval_seed)?;
    Ok(Candidate {
        phi,
        theta: trained.theta,
        train_seed: trained.seed,
        retried: trained.retried,
        j_sim: trained.j_sim,
        j_hat: eval.mean,
        target_returns: eval.returns,
        curve: trained.curve,
    })
}

fn train_seed(cfg: &BayrnConfig, seed: u64, row: usize) -> u64 {
    let index = if cfg.common_train_seed { 0 } else { row as u64 };
    derive_seed(seed, tag::TRAIN, index)
}

/// Seed of the target evaluations. Shared by all candidates of a run so
/// their returns differ only through the policies.
pub fn target_eval_seed(seed: u64) -> u64 {
    derive_seed(seed, tag::EVAL, 0)
}

/// Runs the full loop from scratch.
pub fn run_bayrn(
    exp: &Experiment,
    target: &TargetDomain,
    cfg: &BayrnConfig,
    seed: u64,
    runner: &dyn BatchRunner,
    observer: &mut dyn RunObserver,
) -> Result<BayrnOutcome> {
    resume_bayrn(exp, target, cfg, seed, runner, observer, &[])
}

/// Continues a run whose first events are `prior`. Those are trusted and
/// not re-announced to the observer.
pub fn resume_bayrn(
    exp: &Experiment,
    target: &TargetDomain,
    cfg: &BayrnConfig,
    seed: u64,
    runner: &dyn BatchRunner,
    observer: &mut dyn RunObserver,
    prior: &[RunEvent],
) -> Result<BayrnOutcome> {
    cfg.validate()?;
    exp.validate()?;
    exp.task.check_domain(&target.params)?;
    let sbox = &exp.space.search_box;

    let mut events: Vec<RunEvent> = Vec::new();
    let mut dataset = BoDataset::new();
    let mut replay = prior.iter();
    let mut emit = |e: RunEvent, replayed: bool, events: &mut Vec<RunEvent>| -> Result<()> {
        if !replayed {
            observer.on_event(&e)?;
        }
        events.push(e);
        Ok(())
    };

    for i in 0..cfg.n_init {
        let (cand, replayed) = match replay.next() {
            Some(RunEvent::InitCandidate { index, candidate }) if *index == i => (candidate.clone(), true),
            Some(other) => return Err(resume_mismatch("init candidate", i, other)),
            None => {
                let phi = sbox.random_phi(&mut child_rng(seed, tag::INIT_PHI, i as u64));
                let distr = exp.space.distribution(&phi)?;
                let c = candidate(exp, target, cfg, phi, distr, train_seed(cfg, seed, i), target_eval_seed(seed), runner)?;
                (c, false)
            }
        };
        dataset.push(sbox, cand.phi.clone(), cand.j_hat)?;
        emit(RunEvent::InitCandidate { index: i, candidate: cand }, replayed, &mut events)?;
    }

    let mut iterations = 0;
    let mut last_j_hat;
    loop {
        let row = dataset.len();
        let (cand, hyp, replayed) = match replay.next() {
            Some(RunEvent::BoIteration { iteration, hyperparams, candidate }) if *iteration == iterations => {
                (candidate.clone(), hyperparams.clone(), true)
            }
            Some(other) => return Err(resume_mismatch("bo iteration", iterations, other)),
            None => {
                let model = GpModel::fit(&dataset, sbox, &cfg.gp)?;
                let mut acq_rng = child_rng(seed, tag::ACQUISITION, iterations as u64);
                let phi = maximize_acquisition(&model, &cfg.acquisition, &mut acq_rng);
                let distr = exp.space.distribution(&phi)?;
                let c = candidate(exp, target, cfg, phi, distr, train_seed(cfg, seed, row), target_eval_seed(seed), runner)?;
                (c, model.hyperparams().clone(), false)
            }
        };
        dataset.push(sbox, cand.phi.clone(), cand.j_hat)?;
        last_j_hat = cand.j_hat;
        iterations += 1;
        emit(RunEvent::BoIteration { iteration: iterations - 1, hyperparams: hyp, candidate: cand }, replayed, &mut events)?;
        if (cfg.stop_on_success && last_j_hat >= cfg.j_succ) || iterations >= cfg.n_iter_max {
            break;
        }
    }

    let (cand, hyp, replayed) = match replay.next() {
        Some(RunEvent::Final { candidate, hyperparams, .. }) => (candidate.clone(), hyperparams.clone(), true),
        Some(other) => return Err(resume_mismatch("final", 0, other)),
        None => {
            let model = GpModel::fit(&dataset, sbox, &cfg.gp)?;
            let phi = map_phi(&model, &cfg.acquisition, &mut child_rng(seed, tag::FINAL, 0));
            let distr = exp.space.distribution(&phi)?;
            let c = candidate(exp, target, cfg, phi, distr, train_seed(cfg, seed, dataset.len()), target_eval_seed(seed), runner)?;
            (c, model.hyperparams().clone(), false)
        }
    };
    if let Some(extra) = replay.next() {
        return Err(resume_mismatch("end of run", 0, extra));
    }
    let outcome = BayrnOutcome {
        phi_star: cand.phi.clone(),
        theta_star: cand.theta.clone(),
        j_hat: cand.j_hat,
        iterations,
        dataset: dataset.clone(),
        events: Vec::new(),
    };
    emit(
        RunEvent::Final { iterations, dataset_size: dataset.len(), success: last_j_hat >= cfg.j_succ, hyperparams: hyp, candidate: cand },
        replayed,
        &mut events,
    )?;
    Ok(BayrnOutcome { events, ..outcome })
}

fn resume_mismatch(expected: &str, index: usize, got: &RunEvent) -> Error {
    let kind = match got {
        RunEvent::InitCandidate { .. } => "init candidate",
        RunEvent::BoIteration { .. } => "bo iteration",
        RunEvent::Final { .. } => "final",
    };
    Error::invalid(format!("cannot resume: expected {expected} {index}, found {kind} event"))
}

/// Result of a single train-then-evaluate baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineOutcome {
    /// The distribution parameters trained with; `None` for nominal training.
    pub phi: Option<Vec<f64>>,
    pub candidate: Candidate,
}

/// Uniform domain randomization: one φ drawn from Φ, kept for all of training.
pub fn run_udr(exp: &Experiment, target: &TargetDomain, cfg: &BayrnConfig, seed: u64, runner: &dyn BatchRunner) -> Result<BaselineOutcome> {
    cfg.polopt.validate()?;
    exp.validate()?;
    let phi = exp.space.search_box.random_phi(&mut child_rng(seed, tag::UDR_PHI, 0));
    let distr = exp.space.distribution(&phi)?;
    let c = candidate(exp, target, cfg, phi.clone(), distr, derive_seed(seed, tag::TRAIN, 0), target_eval_seed(seed), runner)?;
    Ok(BaselineOutcome { phi: Some(phi), candidate: c })
}

/// Training on the nominal parameters without randomization.
pub fn run_nominal(exp: &Experiment, target: &TargetDomain, cfg: &BayrnConfig, seed: u64, runner: &dyn BatchRunner) -> Result<BaselineOutcome> {
    cfg.polopt.validate()?;
    exp.validate()?;
    let distr = exp.space.nominal_distribution();
    let c = candidate(exp, target, cfg, Vec::new(), distr, derive_seed(seed, tag::TRAIN, 0), target_eval_seed(seed), runner)?;
    Ok(BaselineOutcome { phi: None, candidate: c })
}
