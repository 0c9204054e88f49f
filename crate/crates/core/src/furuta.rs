//! Furuta pendulum (rotary inverted pendulum).
//!
//! State `[θ, α, θ̇, α̇]` with both angles zero when the rotary pole is centered
//! and the pendulum hangs down. The input is a motor voltage; the servo torque
//! follows the back-EMF model `τ = k_m (a - k_m θ̇) / R_m`.
//!
//! The equations of motion are the Lagrangian ones for two uniform rods:
//!
//! ```text
//! M(α) [θ̈, α̈]ᵀ = f(s, τ)
//! M11 = J_r + m_p l_r² + ¼ m_p l_p² sin²α     M12 = ½ m_p l_p l_r cos α
//! M22 = J_p + ¼ m_p l_p²
//! f1  = τ - ½ m_p l_p² sin α cos α θ̇ α̇ + ½ m_p l_p l_r sin α α̇² - d_r θ̇
//! f2  = ¼ m_p l_p² sin α cos α θ̇² - ½ m_p l_p g sin α - d_p α̇
//! ```
//!
//! The 2x2 system is solved with its closed-form inverse.

use core::f64::consts::PI;

use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domains::DomainParams;
use crate::error::{Error, Result};

/// Physical constants of one Furuta pendulum instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FurutaDomainParams {
    /// Pendulum pole mass (kg).
    pub m_p: f64,
    /// Rotary pole mass (kg).
    pub m_r: f64,
    /// Pendulum pole length (m).
    pub l_p: f64,
    /// Rotary pole length (m).
    pub l_r: f64,
    /// Pendulum damping (N·m·s).
    pub d_p: f64,
    /// Rotary damping (N·m·s).
    pub d_r: f64,
    /// Motor constant (N·m/A).
    pub k_m: f64,
    /// Motor resistance (Ω).
    pub r_m: f64,
    /// Gravity (m/s²).
    pub g: f64,
    /// Pendulum pole inertia about its center (kg·m²).
    pub j_p: f64,
    /// Rotary pole inertia about its center (kg·m²).
    pub j_r: f64,
}

impl FurutaDomainParams {
    /// Parameter ids understood by [`FurutaDomainParams::from_domain`].
    pub const IDS: [&'static str; 9] = ["m_p", "m_r", "l_p", "l_r", "d_p", "d_r", "k_m", "R_m", "g"];

    /// Builds the parameters from a sampled domain. Pole inertias default to
    /// uniform rods (`m l² / 12`) unless the domain carries `J_p` / `J_r`.
    pub fn from_domain(domain: &DomainParams) -> Result<Self> {
        let mut p = FurutaDomainParams {
            m_p: domain.require("m_p")?,
            m_r: domain.require("m_r")?,
            l_p: domain.require("l_p")?,
            l_r: domain.require("l_r")?,
            d_p: domain.require("d_p")?,
            d_r: domain.require("d_r")?,
            k_m: domain.require("k_m")?,
            r_m: domain.require("R_m")?,
            g: domain.require("g")?,
            j_p: 0.0,
            j_r: 0.0,
        }
        .with_rod_inertias();
        if let Some(j_p) = domain.get("J_p") {
            p.j_p = j_p;
        }
        if let Some(j_r) = domain.get("J_r") {
            p.j_r = j_r;
        }
        p.validate()?;
        Ok(p)
    }

    /// Recomputes `J_p`, `J_r` for uniform rods.
    pub fn with_rod_inertias(mut self) -> Self {
        self.j_p = self.m_p * self.l_p * self.l_p / 12.0;
        self.j_r = self.m_r * self.l_r * self.l_r / 12.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m_p", self.m_p),
            ("m_r", self.m_r),
            ("l_p", self.l_p),
            ("l_r", self.l_r),
            ("k_m", self.k_m),
            ("R_m", self.r_m),
            ("g", self.g),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(alloc::format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("d_p", self.d_p), ("d_r", self.d_r), ("J_p", self.j_p), ("J_r", self.j_r)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(alloc::format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FurutaState {
    pub theta: f64,
    pub alpha: f64,
    pub theta_dot: f64,
    pub alpha_dot: f64,
}

impl FurutaState {
    pub const fn new(theta: f64, alpha: f64, theta_dot: f64, alpha_dot: f64) -> Self {
        FurutaState { theta, alpha, theta_dot, alpha_dot }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.theta, self.alpha, self.theta_dot, self.alpha_dot]
    }

    pub fn from_array(s: [f64; 4]) -> Self {
        FurutaState::new(s[0], s[1], s[2], s[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// `[sin θ, cos θ, sin α, cos α, θ̇, α̇]`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FurutaObservation(pub [f64; 6]);

/// Episode and reward settings of the swing-up task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FurutaSettings {
    /// Integration step (s).
    pub dt: f64,
    /// Steps per episode.
    pub horizon: usize,
    /// Voltage limit; actions are clamped to `[-a_max, a_max]`.
    pub a_max: f64,
    /// Diagonal of the state-error weight.
    pub q: [f64; 4],
    /// Action weight.
    pub r: f64,
    /// Std of the Gaussian jitter added to the resting initial state.
    #[serde(default)]
    pub init_jitter_std: f64,
}

impl FurutaSettings {
    pub fn clamp_action(&self, a: f64) -> f64 {
        a.clamp(-self.a_max, self.a_max)
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let w = x - two_pi * ((x + PI) / two_pi).floor();
    // rounding can land exactly on +π
    if w >= PI {
        w - two_pi
    } else {
        w
    }
}

/// `sin_cos` after reducing the angle by multiples of the floating-point π,
/// so the equilibria at `0` and `±π` give exactly zero sine.
fn sin_cos_reduced(x: f64) -> (f64, f64) {
    let k = (x / PI).round();
    let (s, c) = (x - k * PI).sin_cos();
    if k % 2.0 == 0.0 {
        (s, c)
    } else {
        (-s, -c)
    }
}

/// Angular accelerations `(θ̈, α̈)` for voltage `a`.
pub fn accel(s: &FurutaState, a: f64, p: &FurutaDomainParams) -> Result<(f64, f64)> {
    if !s.is_finite() || !a.is_finite() {
        return Err(Error::NumericBlowUp("non-finite Furuta state or action"));
    }
    let (sa, ca) = sin_cos_reduced(s.alpha);
    let tau = p.k_m * (a - p.k_m * s.theta_dot) / p.r_m;

    let mp_lp2 = p.m_p * p.l_p * p.l_p;
    let mp_lp_lr = p.m_p * p.l_p * p.l_r;

    let m11 = p.j_r + p.m_p * p.l_r * p.l_r + 0.25 * mp_lp2 * sa * sa;
    let m12 = 0.5 * mp_lp_lr * ca;
    let m22 = p.j_p + 0.25 * mp_lp2;

    let f1 = tau - 0.5 * mp_lp2 * sa * ca * s.theta_dot * s.alpha_dot
        + 0.5 * mp_lp_lr * sa * s.alpha_dot * s.alpha_dot
        - p.d_r * s.theta_dot;
    let f2 = 0.25 * mp_lp2 * sa * ca * s.theta_dot * s.theta_dot
        - 0.5 * p.m_p * p.l_p * p.g * sa
        - p.d_p * s.alpha_dot;

    let det = m11 * m22 - m12 * m12;
    let theta_dd = (m22 * f1 - m12 * f2) / det;
    let alpha_dd = (m11 * f2 - m12 * f1) / det;
    if !(theta_dd.is_finite() && alpha_dd.is_finite()) {
        return Err(Error::NumericBlowUp("non-finite Furuta acceleration"));
    }
    Ok((theta_dd, alpha_dd))
}

fn derivative(s: &FurutaState, a: f64, p: &FurutaDomainParams) -> Result<[f64; 4]> {
    let (tdd, add) = accel(s, a, p)?;
    Ok([s.theta_dot, s.alpha_dot, tdd, add])
}

fn offset(s: &FurutaState, k: &[f64; 4], h: f64) -> FurutaState {
    FurutaState::new(
        s.theta + h * k[0],
        s.alpha + h * k[1],
        s.theta_dot + h * k[2],
        s.alpha_dot + h * k[3],
    )
}

/// One classical RK4 step with the action held constant. Angles are not
/// wrapped.
pub fn step(s: &FurutaState, a: f64, p: &FurutaDomainParams, dt: f64) -> Result<FurutaState> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::invalid(alloc::format!("step size must be >= 0, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(*s);
    }
    let k1 = derivative(s, a, p)?;
    let k2 = derivative(&offset(s, &k1, 0.5 * dt), a, p)?;
    let k3 = derivative(&offset(s, &k2, 0.5 * dt), a, p)?;
    let k4 = derivative(&offset(s, &k3, dt), a, p)?;
    let mut out = s.to_array();
    for (i, v) in out.iter_mut().enumerate() {
        *v += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    let next = FurutaState::from_array(out);
    if !next.is_finite() {
        return Err(Error::NumericBlowUp("non-finite Furuta state after step"));
    }
    Ok(next)
}

/// `exp(-(eᵀQe + a R a))` with `e = [0, π, 0, 0] - s`, angle errors wrapped.
pub fn reward(s: &FurutaState, a: f64, q: &[f64; 4], r: f64) -> f64 {
    let e = [
        wrap_angle(-s.theta),
        wrap_angle(PI - s.alpha),
        -s.theta_dot,
        -s.alpha_dot,
    ];
    let cost: f64 = e.iter().zip(q).map(|(ei, qi)| qi * ei * ei).sum::<f64>() + a * r * a;
    (-cost).exp()
}

pub fn observe(s: &FurutaState) -> FurutaObservation {
    let (st, ct) = s.theta.sin_cos();
    let (sa, ca) = s.alpha.sin_cos();
    FurutaObservation([st, ct, sa, ca, s.theta_dot, s.alpha_dot])
}

/// Resting state (rotary pole centered, pendulum down) plus optional jitter.
pub fn initial_state<R: Rng + ?Sized>(rng: &mut R, jitter_std: f64) -> FurutaState {
    if jitter_std == 0.0 {
        return FurutaState::default();
    }
    let mut s = [0.0; 4];
    for v in &mut s {
        let z: f64 = rng.sample(StandardNormal);
        *v = jitter_std * z;
    }
    FurutaState::from_array(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn nominal() -> FurutaDomainParams {
        FurutaDomainParams {
            m_p: 0.024,
            m_r: 0.095,
            l_p: 0.129,
            l_r: 0.085,
            d_p: 5e-6,
            d_r: 5e-4,
            k_m: 0.042,
            r_m: 8.4,
            g: 9.81,
            j_p: 0.0,
            j_r: 0.0,
        }
        .with_rod_inertias()
    }

    #[test]
    fn equilibria_have_zero_acceleration() {
        let p = nominal();
        assert_eq!(accel(&FurutaState::default(), 0.0, &p).unwrap(), (0.0, 0.0));
        assert_eq!(accel(&FurutaState::new(0.0, PI, 0.0, 0.0), 0.0, &p).unwrap(), (0.0, 0.0));
        assert_eq!(accel(&FurutaState::new(0.0, -PI, 0.0, 0.0), 0.0, &p).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn reduced_sin_cos_matches_libm() {
        for i in -50..50 {
            let x = i as f64 * 0.37;
            let (s, c) = sin_cos_reduced(x);
            assert!((s - x.sin()).abs() < 1e-14 && (c - x.cos()).abs() < 1e-14);
        }
        assert_eq!(sin_cos_reduced(PI), (-0.0, -1.0));
    }

    #[test]
    fn non_finite_state_is_blow_up() {
        let err = accel(&FurutaState::new(f64::NAN, 0.0, 0.0, 0.0), 0.0, &nominal()).unwrap_err();
        assert!(matches!(err, Error::NumericBlowUp(_)));
    }

    #[test]
    fn zero_step_is_identity() {
        let s = FurutaState::new(0.3, 1.0, -2.0, 0.5);
        assert_eq!(step(&s, 3.0, &nominal(), 0.0).unwrap(), s);
        assert!(step(&s, 3.0, &nominal(), -0.1).is_err());
    }

    #[test]
    fn reward_cases() {
        let q = [2e-1, 1.0, 2e-2, 5e-3];
        assert_eq!(reward(&FurutaState::new(0.0, PI, 0.0, 0.0), 0.0, &q, 3e-3), 1.0);
        assert_eq!(reward(&FurutaState::new(0.0, -PI, 0.0, 0.0), 0.0, &q, 3e-3), 1.0);
        let r = reward(&FurutaState::default(), 0.0, &q, 3e-3);
        assert!((r - (-PI * PI).exp()).abs() < 1e-15);
        assert!((r - 5.17e-5).abs() < 1e-7);
    }

    #[test]
    fn wrap_range() {
        for x in [-7.0, -PI, -1.0, 0.0, PI, 3.5, 2.0 * PI, 100.0] {
            let w = wrap_angle(x);
            assert!((-PI..PI).contains(&w), "{x} -> {w}");
            assert!(((x - w) / (2.0 * PI)).round() * 2.0 * PI - (x - w) < 1e-9);
        }
    }

    #[test]
    fn observation_cases() {
        let o = observe(&FurutaState::default()).0;
        assert_eq!(o, [0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        let o = observe(&FurutaState::new(PI / 2.0, PI, 1.0, 2.0)).0;
        let want = [1.0, 0.0, 0.0, -1.0, 1.0, 2.0];
        for (a, b) in o.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn initial_state_jitter() {
        let mut rng = rng_from_seed(3);
        assert_eq!(initial_state(&mut rng, 0.0), FurutaState::default());
        let a = initial_state(&mut rng_from_seed(11), 0.1);
        let b = initial_state(&mut rng_from_seed(11), 0.1);
        assert_eq!(a, b);
        assert_ne!(a, FurutaState::default());
    }

    #[test]
    fn from_domain_derives_inertia() {
        let mut d = DomainParams::new();
        for (k, v) in [
            ("m_p", 0.024),
            ("m_r", 0.095),
            ("l_p", 0.129),
            ("l_r", 0.085),
            ("d_p", 0.0),
            ("d_r", 0.0),
            ("k_m", 0.042),
            ("R_m", 8.4),
            ("g", 9.81),
        ] {
            d.set(k, v);
        }
        let p = FurutaDomainParams::from_domain(&d).unwrap();
        assert_eq!(p.j_p, 0.024 * 0.129 * 0.129 / 12.0);
        assert_eq!(p.j_r, 0.095 * 0.085 * 0.085 / 12.0);
        d.set("J_p", 1e-4);
        assert_eq!(FurutaDomainParams::from_domain(&d).unwrap().j_p, 1e-4);
        d.set("m_p", -1.0);
        assert!(FurutaDomainParams::from_domain(&d).is_err());
    }
}
