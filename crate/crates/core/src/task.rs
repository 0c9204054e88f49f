//! Rollouts of a policy on a simulator instance.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ballcup::{self, BallCupDomainParams, BallCupSettings, BallCupState, CupOutcome};
use crate::domains::{DomainDistrParams, DomainParams, DomainSpace};
use crate::error::{Error, Result};
use crate::furuta::{self, FurutaDomainParams, FurutaSettings};
use crate::policy::{EnergyBalancePolicy, Policy, PolicyKind, RbfPolicy};
use crate::polopt::{discounted_return, EpisodicObjective};
use crate::rng::{derive_seed, rng_from_seed, tag, SimRng};

/// One episode. States and actions are only filled when requested.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Rollout {
    pub rewards: Vec<f64>,
    pub actions: Vec<f64>,
    /// Flattened simulator states, `state_dim` values per step.
    pub states: Vec<f64>,
    pub state_dim: usize,
}

impl Rollout {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn discounted_return(&self, gamma: f64) -> f64 {
        discounted_return(&self.rewards, gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FurutaTask {
    pub settings: FurutaSettings,
    pub policy: EnergyBalancePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallCupTask {
    pub settings: BallCupSettings,
    pub policy: RbfPolicy,
}

/// A simulator together with the policy class trained on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case")]
pub enum Task {
    Furuta(FurutaTask),
    BallCup(BallCupTask),
}

impl Task {
    pub fn policy(&self) -> Policy {
        match self {
            Task::Furuta(t) => Policy::EnergyBalance(t.policy.clone()),
            Task::BallCup(t) => Policy::Rbf(t.policy.clone()),
        }
    }

    pub fn policy_kind(&self) -> PolicyKind {
        self.policy().kind()
    }

    pub fn policy_dim(&self) -> usize {
        self.policy().dim()
    }

    /// Checks that a domain carries everything the simulator needs.
    pub fn check_domain(&self, domain: &DomainParams) -> Result<()> {
        match self {
            Task::Furuta(_) => FurutaDomainParams::from_domain(domain).map(|_| ()),
            Task::BallCup(_) => BallCupDomainParams::from_domain(domain).map(|_| ()),
        }
    }

    pub fn rollout(&self, theta: &[f64], domain: &DomainParams, rng: &mut SimRng, record: bool) -> Result<Rollout> {
        match self {
            Task::Furuta(t) => t.rollout(theta, domain, rng, record),
            Task::BallCup(t) => t.rollout(theta, domain, record),
        }
    }
}

impl FurutaTask {
    pub fn rollout(&self, theta: &[f64], domain: &DomainParams, rng: &mut SimRng, record: bool) -> Result<Rollout> {
        let params = FurutaDomainParams::from_domain(domain)?;
        let set = &self.settings;
        let mut s = furuta::initial_state(rng, set.init_jitter_std);
        let mut out = Rollout { rewards: Vec::with_capacity(set.horizon), state_dim: 4, ..Default::default() };
        for _ in 0..set.horizon {
            let a = set.clamp_action(self.policy.act(&s, theta)?);
            out.rewards.push(furuta::reward(&s, a, &set.q, set.r));
            if record {
                out.actions.push(a);
                out.states.extend_from_slice(&s.to_array());
            }
            s = furuta::step(&s, a, &params, set.dt)?;
        }
        Ok(out)
    }
}

impl BallCupTask {
    /// Per-step reward is the (non-positive) shaping penalty; the ternary
    /// outcome is added at the last step.
    pub fn rollout(&self, theta: &[f64], domain: &DomainParams, record: bool) -> Result<Rollout> {
        self.simulate(theta, domain, record).map(|(r, _)| r)
    }

    /// Ternary outcome alone, without shaping.
    pub fn outcome(&self, theta: &[f64], domain: &DomainParams) -> Result<f64> {
        self.simulate(theta, domain, false).map(|(_, o)| o)
    }

    fn simulate(&self, theta: &[f64], domain: &DomainParams, record: bool) -> Result<(Rollout, f64)> {
        let params = BallCupDomainParams::from_domain(domain)?;
        let set = &self.settings;
        let mut s = BallCupState::hanging(&params);
        let x0 = s.cup_x;
        let mut outcome = CupOutcome::new(set.geometry);
        outcome.observe(&s);
        let mut out = Rollout { rewards: Vec::with_capacity(set.horizon), state_dim: 6, ..Default::default() };
        let horizon_time = set.horizon as f64 * set.dt;
        for t in 0..set.horizon {
            let time = t as f64 * set.dt / horizon_time;
            let u = (self.policy.act(time, theta)? * set.action_scale).clamp(-set.a_max, set.a_max);
            if record {
                out.actions.push(u);
                out.states.extend_from_slice(&[s.cup_x, s.cup_v, s.ball_x, s.ball_y, s.ball_vx, s.ball_vy]);
            }
            s = ballcup::step(&s, u, &params, set, set.dt)?;
            outcome.observe(&s);
            let dx = s.cup_x - x0;
            out.rewards.push(-set.shaping_weight * dx * dx * set.dt);
        }
        let ternary = outcome.reward();
        if let Some(last) = out.rewards.last_mut() {
            *last += ternary;
        }
        Ok((out, ternary))
    }
}

/// The lower-level objective: return of θ in a simulator whose parameters are
/// redrawn from ν(ξ; φ) at every episode reset.
pub struct RandomizedObjective<'a> {
    pub task: &'a Task,
    pub space: &'a DomainSpace,
    pub distribution: DomainDistrParams,
    pub gamma: f64,
}

impl<'a> RandomizedObjective<'a> {
    pub fn new(task: &'a Task, space: &'a DomainSpace, distribution: DomainDistrParams, gamma: f64) -> Self {
        RandomizedObjective { task, space, distribution, gamma }
    }
}

impl EpisodicObjective for RandomizedObjective<'_> {
    fn dim(&self) -> usize {
        self.task.policy_dim()
    }

    fn episode_return(&self, theta: &[f64], rng: &mut SimRng) -> Result<f64> {
        let domain = self.space.sample(&self.distribution, rng)?;
        let ret = self.task.rollout(theta, &domain, rng, false)?.discounted_return(self.gamma);
        if !ret.is_finite() {
            return Err(Error::NumericBlowUp("non-finite return"));
        }
        Ok(ret)
    }
}

/// Returns of `n` rollouts on one fixed domain, rollout `k` seeded by
/// `(seed, EVAL, k)`.
pub fn fixed_domain_returns(task: &Task, theta: &[f64], domain: &DomainParams, gamma: f64, seed: u64, n: usize) -> Result<Vec<f64>> {
    (0..n)
        .map(|k| {
            let mut rng = rng_from_seed(derive_seed(seed, tag::EVAL, k as u64));
            Ok(task.rollout(theta, domain, &mut rng, false)?.discounted_return(gamma))
        })
        .collect()
}
