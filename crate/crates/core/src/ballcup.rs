//! Planar ball-in-a-cup surrogate.
//!
//! A cup slides along a horizontal rail (1 actuated DoF). A point-mass ball
//! hangs from the center of the cup's bottom plate on an elastic string that
//! only pulls: below its rest length the string is slack and the ball flies
//! freely. The command is a desired cup acceleration; joint damping and a
//! tanh-smoothed stiction act against it.
//!
//! Integration is velocity Verlet, with velocity-dependent forces evaluated at
//! the predicted velocity. It is symplectic for the stiff string and exact for
//! constant acceleration, so free flight follows the projectile parabola.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::domains::DomainParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallCupDomainParams {
    /// String rest length (m).
    pub l_s: f64,
    /// String damping (N·s/m).
    pub d_s: f64,
    /// Ball mass (kg).
    pub m_b: f64,
    /// Joint damping (N·s/m).
    pub d_j: f64,
    /// Joint stiction coefficient.
    pub mu_s: f64,
    /// String stiffness (N/m).
    pub k_s: f64,
    /// Gravity (m/s²).
    pub g: f64,
}

impl BallCupDomainParams {
    pub const IDS: [&'static str; 7] = ["l_s", "d_s", "m_b", "d_j", "mu_s", "k_s", "g"];

    pub fn from_domain(domain: &DomainParams) -> Result<Self> {
        let p = BallCupDomainParams {
            l_s: domain.require("l_s")?,
            d_s: domain.require("d_s")?,
            m_b: domain.require("m_b")?,
            d_j: domain.require("d_j")?,
            mu_s: domain.require("mu_s")?,
            k_s: domain.require("k_s")?,
            g: domain.require("g")?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("l_s", self.l_s), ("m_b", self.m_b), ("k_s", self.k_s), ("g", self.g)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(alloc::format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("d_s", self.d_s), ("d_j", self.d_j), ("mu_s", self.mu_s)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(alloc::format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Distance below the anchor at which the ball hangs at rest.
    pub fn rest_drop(&self) -> f64 {
        self.l_s + self.m_b * self.g / self.k_s
    }
}

/// Cup and rim geometry. The string is anchored at the origin of the cup
/// frame; the opening is at height `rim_height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CupGeometry {
    pub ball_radius: f64,
    pub cup_radius: f64,
    pub rim_height: f64,
}

impl CupGeometry {
    /// Radius of the virtual cylinder the ball center has to enter.
    pub fn inner_radius(&self) -> f64 {
        (self.cup_radius - self.ball_radius).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallCupSettings {
    /// Integration step (s).
    pub dt: f64,
    /// Steps per episode.
    pub horizon: usize,
    /// Policy output -> commanded cup acceleration (m/s² per unit).
    pub action_scale: f64,
    /// Commanded acceleration limit (m/s²).
    pub a_max: f64,
    /// Moving mass of the cup carriage (kg).
    pub cup_mass: f64,
    /// Force scale turning the stiction coefficient into Newtons.
    pub stiction_force: f64,
    /// Velocity width of the tanh-smoothed sign (m/s).
    pub stiction_width: f64,
    pub geometry: CupGeometry,
    /// Weight of the quadratic penalty on cup displacement from its start.
    #[serde(default)]
    pub shaping_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BallCupState {
    pub cup_x: f64,
    pub cup_v: f64,
    pub ball_x: f64,
    pub ball_y: f64,
    pub ball_vx: f64,
    pub ball_vy: f64,
}

impl BallCupState {
    /// Cup at the origin, ball hanging at rest under it.
    pub fn hanging(p: &BallCupDomainParams) -> Self {
        BallCupState { ball_y: -p.rest_drop(), ..Default::default() }
    }

    pub fn is_finite(&self) -> bool {
        [self.cup_x, self.cup_v, self.ball_x, self.ball_y, self.ball_vx, self.ball_vy]
            .iter()
            .all(|v| v.is_finite())
    }

    /// Ball position relative to the string anchor.
    pub fn ball_rel(&self) -> (f64, f64) {
        (self.ball_x - self.cup_x, self.ball_y)
    }
}

/// Returns `(cup accel, ball ax, ball ay)`.
fn accelerations(
    s: &BallCupState,
    u: f64,
    p: &BallCupDomainParams,
    set: &BallCupSettings,
) -> (f64, f64, f64) {
    let friction = p.d_j * s.cup_v + p.mu_s * set.stiction_force * (s.cup_v / set.stiction_width).tanh();
    let cup_a = u - friction / set.cup_mass;

    let (rx, ry) = s.ball_rel();
    let dist = (rx * rx + ry * ry).sqrt();
    let (mut ax, mut ay) = (0.0, -p.g);
    if dist > p.l_s {
        let (nx, ny) = (rx / dist, ry / dist);
        let ext = dist - p.l_s;
        let ext_rate = (s.ball_vx - s.cup_v) * nx + s.ball_vy * ny;
        let tension = (p.k_s * ext + p.d_s * ext_rate).max(0.0);
        ax -= tension * nx / p.m_b;
        ay -= tension * ny / p.m_b;
    }
    (cup_a, ax, ay)
}

/// Advances one step under commanded cup acceleration `u` (already scaled and
/// clamped).
pub fn step(
    s: &BallCupState,
    u: f64,
    p: &BallCupDomainParams,
    set: &BallCupSettings,
    dt: f64,
) -> Result<BallCupState> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::invalid(alloc::format!("step size must be >= 0, got {dt}")));
    }
    if !s.is_finite() || !u.is_finite() {
        return Err(Error::NumericBlowUp("non-finite ball-in-a-cup state or action"));
    }
    if dt == 0.0 {
        return Ok(*s);
    }
    let (c0, x0, y0) = accelerations(s, u, p, set);
    let half_dt2 = 0.5 * dt * dt;
    let predicted = BallCupState {
        cup_x: s.cup_x + s.cup_v * dt + c0 * half_dt2,
        cup_v: s.cup_v + c0 * dt,
        ball_x: s.ball_x + s.ball_vx * dt + x0 * half_dt2,
        ball_y: s.ball_y + s.ball_vy * dt + y0 * half_dt2,
        ball_vx: s.ball_vx + x0 * dt,
        ball_vy: s.ball_vy + y0 * dt,
    };
    let (c1, x1, y1) = accelerations(&predicted, u, p, set);
    let next = BallCupState {
        cup_v: s.cup_v + 0.5 * (c0 + c1) * dt,
        ball_vx: s.ball_vx + 0.5 * (x0 + x1) * dt,
        ball_vy: s.ball_vy + 0.5 * (y0 + y1) * dt,
        ..predicted
    };
    if !next.is_finite() {
        return Err(Error::NumericBlowUp("non-finite ball-in-a-cup state after step"));
    }
    Ok(next)
}

/// Incremental ternary outcome: 1 once the ball center has dropped through
/// the cup opening into the virtual cylinder, 0.5 once it has touched a rim
/// lip, 0 otherwise.
#[derive(Debug, Clone)]
pub struct CupOutcome {
    geometry: CupGeometry,
    prev: Option<(f64, f64)>,
    in_cup: bool,
    rim: bool,
}

impl CupOutcome {
    pub fn new(geometry: CupGeometry) -> Self {
        CupOutcome { geometry, prev: None, in_cup: false, rim: false }
    }

    pub fn observe(&mut self, s: &BallCupState) {
        let g = &self.geometry;
        let (x, y) = s.ball_rel();
        let r_in = g.inner_radius();

        if let Some((px, py)) = self.prev {
            if py >= g.rim_height && y < g.rim_height {
                let t = (py - g.rim_height) / (py - y);
                let x_cross = px + t * (x - px);
                if x_cross.abs() < r_in && y >= 0.0 {
                    self.in_cup = true;
                }
            }
        }

        // Lips of the rim sit at (±cup_radius, rim_height).
        for lip in [-g.cup_radius, g.cup_radius] {
            let (dx, dy) = (x - lip, y - g.rim_height);
            if dx * dx + dy * dy <= g.ball_radius * g.ball_radius {
                self.rim = true;
            }
        }
        self.prev = Some((x, y));
    }

    pub fn in_cup(&self) -> bool {
        self.in_cup
    }

    pub fn hit_rim(&self) -> bool {
        self.rim
    }

    pub fn reward(&self) -> f64 {
        if self.in_cup {
            1.0
        } else if self.rim {
            0.5
        } else {
            0.0
        }
    }
}

/// Ternary reward of a complete trajectory.
pub fn episode_reward(trajectory: &[BallCupState], geometry: &CupGeometry) -> f64 {
    let mut o = CupOutcome::new(*geometry);
    for s in trajectory {
        o.observe(s);
    }
    o.reward()
}
