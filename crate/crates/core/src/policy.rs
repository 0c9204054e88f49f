//! Parameterized policies and exploration noise.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::furuta::{wrap_angle, FurutaState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Rbf,
    EnergyBalance,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Rbf => "rbf",
            PolicyKind::EnergyBalance => "energy_balance",
        }
    }
}

/// Flat parameter vector θ tagged with the policy kind it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub kind: PolicyKind,
    pub values: Vec<f64>,
}

impl PolicyParams {
    pub fn new(kind: PolicyKind, values: Vec<f64>) -> Self {
        PolicyParams { kind, values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Time-indexed policy: normalized Gaussian basis functions over `t/T`.
///
/// Centers are equispaced on `[0, 1]`. The default width makes neighbouring
/// (unnormalized) bases cross at activation 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfPolicy {
    pub n_basis: usize,
    pub n_outputs: usize,
    /// Std of each Gaussian in normalized time.
    pub width: f64,
    pub a_max: f64,
}

impl RbfPolicy {
    pub fn new(n_basis: usize, n_outputs: usize, a_max: f64) -> Result<Self> {
        if n_basis < 2 || n_outputs == 0 {
            return Err(Error::invalid("RBF policy needs >= 2 bases and >= 1 output"));
        }
        let spacing = 1.0 / (n_basis - 1) as f64;
        let width = 0.5 * spacing / (2.0 * core::f64::consts::LN_2).sqrt();
        Ok(RbfPolicy { n_basis, n_outputs, width, a_max })
    }

    pub fn dim(&self) -> usize {
        self.n_basis * self.n_outputs
    }

    pub fn center(&self, i: usize) -> f64 {
        i as f64 / (self.n_basis - 1) as f64
    }

    /// Sum-normalized activations at normalized time `t`.
    pub fn activations(&self, t: f64) -> Vec<f64> {
        let mut act: Vec<f64> = (0..self.n_basis)
            .map(|i| {
                let z = (t - self.center(i)) / self.width;
                (-0.5 * z * z).exp()
            })
            .collect();
        let total: f64 = act.iter().sum();
        if total > 0.0 {
            act.iter_mut().for_each(|a| *a /= total);
        } else {
            // far outside [0, 1] every Gaussian underflows; snap to the nearest end
            let idx = if t < 0.5 { 0 } else { self.n_basis - 1 };
            act[idx] = 1.0;
        }
        act
    }

    /// Unclamped linear readout; `theta` is row-major `[n_outputs][n_basis]`.
    pub fn readout(&self, t: f64, theta: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.dim(), theta.len())?;
        check_dim(self.n_outputs, out.len())?;
        let act = self.activations(t);
        for (o, row) in out.iter_mut().zip(theta.chunks_exact(self.n_basis)) {
            *o = row.iter().zip(&act).map(|(w, a)| w * a).sum();
        }
        Ok(())
    }

    /// First output, clamped to `±a_max`.
    pub fn act(&self, t: f64, theta: &[f64]) -> Result<f64> {
        let mut out = alloc::vec![0.0; self.n_outputs];
        self.readout(t, theta, &mut out)?;
        Ok(out[0].clamp(-self.a_max, self.a_max))
    }
}

/// Energy pumping far from upright, linear state feedback near it.
///
/// θ = `[k_e, E_ref, g_θ, g_α, g_θ̇, g_α̇]`. With `d = wrap(α - π)`:
///
/// - `|d| < switch_angle`: `a = Σ g_i · balance_scale_i · [θ, d, θ̇, α̇]_i`
/// - otherwise: `a = -k_e (E_ref - E) sgn(α̇ cos α) - c_θ θ - c_θ̇ θ̇` with the
///   normalized pendulum energy `E = α̇² / (2 ω²) + 1 - cos α` (2 at upright rest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyBalancePolicy {
    pub a_max: f64,
    pub switch_angle: f64,
    /// Squared small-oscillation frequency ω² of the pendulum used to
    /// normalize its kinetic energy.
    pub energy_omega2: f64,
    /// Fixed arm-centering gains `[c_θ, c_θ̇]` applied while pumping.
    pub centering: [f64; 2],
    /// Per-feature scale of the learnable balance gains.
    pub balance_scale: [f64; 4],
}

impl EnergyBalancePolicy {
    pub const DIM: usize = 6;

    pub fn normalized_energy(&self, s: &FurutaState) -> f64 {
        0.5 * s.alpha_dot * s.alpha_dot / self.energy_omega2 + 1.0 - s.alpha.cos()
    }

    pub fn act(&self, s: &FurutaState, theta: &[f64]) -> Result<f64> {
        check_dim(Self::DIM, theta.len())?;
        let d = wrap_angle(s.alpha - core::f64::consts::PI);
        let a = if d.abs() < self.switch_angle {
            let e = [s.theta, d, s.theta_dot, s.alpha_dot];
            (0..4).map(|i| theta[2 + i] * self.balance_scale[i] * e[i]).sum()
        } else {
            let energy = self.normalized_energy(s);
            let dir = if s.alpha_dot * s.alpha.cos() >= 0.0 { 1.0 } else { -1.0 };
            -theta[0] * (theta[1] - energy) * dir - self.centering[0] * s.theta - self.centering[1] * s.theta_dot
        };
        Ok(a.clamp(-self.a_max, self.a_max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    Rbf(RbfPolicy),
    EnergyBalance(EnergyBalancePolicy),
}

impl Policy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Rbf(_) => PolicyKind::Rbf,
            Policy::EnergyBalance(_) => PolicyKind::EnergyBalance,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Policy::Rbf(p) => p.dim(),
            Policy::EnergyBalance(_) => EnergyBalancePolicy::DIM,
        }
    }

    /// Checks that θ belongs to this policy.
    pub fn check(&self, theta: &PolicyParams) -> Result<()> {
        if theta.kind != self.kind() {
            return Err(Error::invalid(format!(
                "policy kind mismatch: expected {}, got {}",
                self.kind().as_str(),
                theta.kind.as_str()
            )));
        }
        check_dim(self.dim(), theta.dim())?;
        if !theta.is_finite() {
            return Err(Error::invalid("policy parameters must be finite"));
        }
        Ok(())
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// θ + ε with ε ~ N(0, σ² I).
pub fn perturb<R: Rng + ?Sized>(theta: &[f64], sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("exploration std must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(theta.to_vec());
    }
    Ok(theta
        .iter()
        .map(|t| {
            let z: f64 = rng.sample(StandardNormal);
            t + sigma * z
        })
        .collect())
}
