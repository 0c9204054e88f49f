//! Episodic policy optimization in randomized simulation.
//!
//! Two black-box optimizers share one entry point, [`train`]:
//!
//! - **PoWER**: perturb the current θ, keep the whole rollout history, and move
//!   θ to the return-weighted mean of the `n_is` best perturbations.
//! - **CEM**: sample a Gaussian population, refit mean and std to the elite
//!   fraction.
//!
//! Candidate evaluation goes through a [`BatchRunner`], so callers can run a
//! generation in parallel. Every candidate draws from its own seed derived
//! from `(train seed, generation, index)`, which makes parallel and
//! sequential execution produce identical results.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::perturb;
use crate::rng::{child_rng, derive_seed, rng_from_seed, tag, SimRng};

/// Guard added to the PoWER weight normalizer.
pub const POWER_DELTA: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Power,
    Cem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolOptConfig {
    pub algorithm: Algorithm,
    /// Candidates per generation.
    pub n_pop: usize,
    /// PoWER importance samples.
    pub n_is: usize,
    /// Generations.
    pub n_iter: usize,
    /// Initial exploration std.
    pub sigma_init: f64,
    /// Domain draws averaged per candidate.
    pub rollouts_per_candidate: usize,
    /// Temporal discount.
    pub gamma: f64,
    /// CEM elite fraction.
    pub elite_frac: f64,
    /// CEM std floor.
    pub std_floor: f64,
    /// Keep the best candidate seen so far in the CEM elite set.
    #[serde(default = "default_true")]
    pub elitism: bool,
    /// Re-run training once with a fresh seed when the simulated return of
    /// the result falls below this value.
    #[serde(default)]
    pub retrain_below: Option<f64>,
}

fn default_true() -> bool {
    true
}

impl PolOptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pop == 0 {
            return Err(Error::invalid("n_pop must be >= 1"));
        }
        if !(1 <= self.n_is && self.n_is <= self.n_pop) {
            return Err(Error::invalid("n_is must satisfy 1 <= n_is <= n_pop"));
        }
        if !(self.sigma_init > 0.0 && self.sigma_init.is_finite()) {
            return Err(Error::invalid("sigma_init must be > 0"));
        }
        if self.rollouts_per_candidate == 0 {
            return Err(Error::invalid("rollouts_per_candidate must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid("gamma must lie in [0, 1]"));
        }
        if !(self.elite_frac > 0.0 && self.elite_frac <= 1.0) {
            return Err(Error::invalid("elite_frac must lie in (0, 1]"));
        }
        if self.std_floor.is_nan() || self.std_floor < 0.0 {
            return Err(Error::invalid("std_floor must be >= 0"));
        }
        if self.algorithm == Algorithm::Cem && self.n_pop < 2 {
            return Err(Error::invalid("CEM needs a population of at least 2"));
        }
        Ok(())
    }
}

/// Σ_t γᵗ r_t
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    let mut total = 0.0;
    let mut discount = 1.0;
    for r in rewards {
        total += discount * r;
        discount *= gamma;
    }
    total
}

/// Something whose episodes can be scored for a parameter vector.
pub trait EpisodicObjective: Sync {
    fn dim(&self) -> usize;

    /// Return of one episode. All randomness (domain draw, initial state)
    /// must come from `rng`.
    fn episode_return(&self, theta: &[f64], rng: &mut SimRng) -> Result<f64>;
}

/// Mean return over `n` episodes, episode `k` seeded by `(seed, ROLLOUT, k)`.
pub fn mean_return<O: EpisodicObjective + ?Sized>(objective: &O, theta: &[f64], seed: u64, n: usize) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..n {
        total += objective.episode_return(theta, &mut child_rng(seed, tag::ROLLOUT, k as u64))?;
    }
    Ok(total / n as f64)
}

/// Evaluates a batch of candidates; `seeds[i]` seeds candidate `i`.
pub trait BatchRunner {
    fn run(
        &self,
        objective: &dyn EpisodicObjective,
        thetas: &[Vec<f64>],
        seeds: &[u64],
        rollouts: usize,
    ) -> Result<Vec<f64>>;
}

/// Evaluates candidates one after the other.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl BatchRunner for Sequential {
    fn run(
        &self,
        objective: &dyn EpisodicObjective,
        thetas: &[Vec<f64>],
        seeds: &[u64],
        rollouts: usize,
    ) -> Result<Vec<f64>> {
        thetas
            .iter()
            .zip(seeds)
            .map(|(t, &s)| mean_return(objective, t, s, rollouts))
            .collect()
    }
}

/// One evaluated candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub theta: Vec<f64>,
    pub ret: f64,
}

/// Candidates of one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutBatch {
    pub generation: usize,
    pub samples: Vec<Sample>,
}

/// Indices sorted by descending return, ties by ascending index.
fn ranking(returns: impl Iterator<Item = f64>) -> Vec<usize> {
    let r: Vec<f64> = returns.collect();
    let mut idx: Vec<usize> = (0..r.len()).collect();
    idx.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(a.cmp(&b)));
    idx
}

/// PoWER weights over the rollout history relative to `theta`: the `n_is`
/// best rollouts, weighted by their return shifted so the history minimum is
/// not negative. Returns `(index, weight)` pairs whose weights sum to at most 1.
pub fn power_weights(history: &[RolloutBatch], n_is: usize) -> Result<Vec<(usize, usize, f64)>> {
    let flat: Vec<(usize, usize, f64)> = history
        .iter()
        .enumerate()
        .flat_map(|(b, batch)| batch.samples.iter().enumerate().map(move |(i, s)| (b, i, s.ret)))
        .collect();
    if flat.is_empty() {
        return Err(Error::InsufficientData { need: 1, have: 0 });
    }
    if n_is == 0 {
        return Err(Error::invalid("n_is must be >= 1"));
    }
    let min = flat.iter().map(|f| f.2).fold(f64::INFINITY, f64::min);
    let shift = min.min(0.0);
    let order = ranking(flat.iter().map(|f| f.2));
    let elite: Vec<(usize, usize, f64)> =
        order.iter().take(n_is).map(|&k| (flat[k].0, flat[k].1, flat[k].2 - shift)).collect();
    let norm: f64 = elite.iter().map(|e| e.2).sum::<f64>() + POWER_DELTA;
    Ok(elite.into_iter().map(|(b, i, w)| (b, i, w / norm)).collect())
}

/// θ' = θ + Σ_{i∈I} J̃_i ε_i / (Σ_{i∈I} J̃_i + δ), with ε_i = θ_i - θ.
pub fn power_update(theta: &[f64], history: &[RolloutBatch], n_is: usize) -> Result<Vec<f64>> {
    let weights = power_weights(history, n_is)?;
    let mut next = theta.to_vec();
    for (b, i, w) in weights {
        let cand = &history[b].samples[i].theta;
        if cand.len() != theta.len() {
            return Err(Error::DimensionMismatch { expected: theta.len(), got: cand.len() });
        }
        for (n, (c, t)) in next.iter_mut().zip(cand.iter().zip(theta)) {
            *n += w * (c - t);
        }
    }
    Ok(next)
}

/// Mean and per-coordinate std (1/n normalization) of the elite fraction,
/// std floored at `std_floor`.
pub fn cem_update(population: &[Sample], elite_frac: f64, std_floor: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if population.len() < 2 {
        return Err(Error::InsufficientData { need: 2, have: population.len() });
    }
    if !(elite_frac > 0.0 && elite_frac <= 1.0) {
        return Err(Error::invalid("elite_frac must lie in (0, 1]"));
    }
    let n_elite = ((population.len() as f64 * elite_frac).ceil() as usize).clamp(1, population.len());
    let order = ranking(population.iter().map(|s| s.ret));
    let dim = population[0].theta.len();
    let mut mean = vec![0.0; dim];
    for &k in &order[..n_elite] {
        for (m, v) in mean.iter_mut().zip(&population[k].theta) {
            *m += v / n_elite as f64;
        }
    }
    let mut std = vec![0.0; dim];
    for &k in &order[..n_elite] {
        for ((s, v), m) in std.iter_mut().zip(&population[k].theta).zip(&mean) {
            *s += (v - m) * (v - m) / n_elite as f64;
        }
    }
    for s in &mut std {
        *s = s.sqrt().max(std_floor);
    }
    Ok((mean, std))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Best estimated return seen so far (with elitism) or in this generation.
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub theta: Vec<f64>,
    /// Mean simulated return of `theta`.
    pub j_sim: f64,
    pub seed: u64,
    pub curve: Vec<GenerationStats>,
    /// Whether the result comes from the retry run.
    #[serde(default)]
    pub retried: bool,
}

/// Trains from `theta0`; applies the retry rule of `cfg.retrain_below`.
pub fn train(
    objective: &dyn EpisodicObjective,
    theta0: &[f64],
    cfg: &PolOptConfig,
    seed: u64,
    runner: &dyn BatchRunner,
) -> Result<TrainResult> {
    let first = train_once(objective, theta0, cfg, seed, runner)?;
    match cfg.retrain_below {
        Some(threshold) if first.j_sim < threshold => {
            let mut second = train_once(objective, theta0, cfg, derive_seed(seed, tag::RETRY, 0), runner)?;
            second.retried = true;
            if second.j_sim >= first.j_sim {
                Ok(second)
            } else {
                Ok(first)
            }
        }
        _ => Ok(first),
    }
}

/// One training run without the retry rule.
pub fn train_once(
    objective: &dyn EpisodicObjective,
    theta0: &[f64],
    cfg: &PolOptConfig,
    seed: u64,
    runner: &dyn BatchRunner,
) -> Result<TrainResult> {
    cfg.validate()?;
    if theta0.len() != objective.dim() {
        return Err(Error::DimensionMismatch { expected: objective.dim(), got: theta0.len() });
    }
    let rollouts = cfg.rollouts_per_candidate;
    // Reference evaluation of the starting point; also the n_iter = 0 answer.
    let init_seed = derive_seed(seed, tag::GENERATION, u64::MAX);
    let mut best = Sample { theta: theta0.to_vec(), ret: runner.run(objective, &[theta0.to_vec()], &[init_seed], rollouts)?[0] };
    let mut curve = Vec::with_capacity(cfg.n_iter);

    let mut mean = theta0.to_vec();
    let mut std = vec![cfg.sigma_init; theta0.len()];
    let mut history: Vec<RolloutBatch> = Vec::new();

    for g in 0..cfg.n_iter {
        let gen_seed = derive_seed(seed, tag::GENERATION, g as u64);
        let mut noise_rng: SimRng = rng_from_seed(gen_seed);
        let thetas: Vec<Vec<f64>> = (0..cfg.n_pop)
            .map(|_| match cfg.algorithm {
                Algorithm::Power => perturb(&mean, cfg.sigma_init, &mut noise_rng),
                Algorithm::Cem => Ok(mean
                    .iter()
                    .zip(&std)
                    .map(|(m, s)| perturb(&[*m], *s, &mut noise_rng).map(|v| v[0]))
                    .collect::<Result<Vec<f64>>>()?),
            })
            .collect::<Result<_>>()?;
        let seeds: Vec<u64> = (0..cfg.n_pop).map(|i| derive_seed(gen_seed, tag::CANDIDATE, i as u64)).collect();
        let returns = runner.run(objective, &thetas, &seeds, rollouts)?;
        if let Some(bad) = returns.iter().find(|r| !r.is_finite()) {
            return Err(Error::invalid(alloc::format!("non-finite return {bad} in generation {g}")));
        }

        let samples: Vec<Sample> = thetas.into_iter().zip(&returns).map(|(theta, &ret)| Sample { theta, ret }).collect();
        let gen_mean = returns.iter().sum::<f64>() / returns.len() as f64;
        let gen_best = ranking(returns.iter().copied())[0];

        match cfg.algorithm {
            Algorithm::Power => {
                history.push(RolloutBatch { generation: g, samples: samples.clone() });
                mean = power_update(&mean, &history, cfg.n_is)?;
            }
            Algorithm::Cem => {
                let mut pop = samples.clone();
                if cfg.elitism {
                    pop.push(best.clone());
                }
                let (m, s) = cem_update(&pop, cfg.elite_frac, cfg.std_floor)?;
                mean = m;
                std = s;
            }
        }

        let gen_best_sample = &samples[gen_best];
        if gen_best_sample.ret > best.ret {
            best = gen_best_sample.clone();
        }
        curve.push(GenerationStats {
            generation: g,
            best: if cfg.elitism { best.ret } else { gen_best_sample.ret },
            mean: gen_mean,
        });
    }

    // The distribution mean is a candidate too; it is often better than any
    // single noisy sample.
    if cfg.n_iter > 0 {
        let mean_seed = derive_seed(seed, tag::GENERATION, cfg.n_iter as u64);
        let mean_ret = runner.run(objective, &[mean.clone()], &[mean_seed], rollouts)?[0];
        if mean_ret > best.ret {
            best = Sample { theta: mean, ret: mean_ret };
        }
    }

    Ok(TrainResult { theta: best.theta, j_sim: best.ret, seed, curve, retried: false })
}
