//! Bouncing ball with a periodic hit action and stochastic dampening.
//!
//! State is `(v, p)`: velocity (m/s, positive upward) and height (m).
//! Free fall is integrated in closed form; impacts with the ground are found
//! exactly by solving the ballistic quadratic.

use serde::{Deserialize, Serialize};

use super::ControlModel;
use crate::grid::{Aabb, Region};

const ACTIONS: [&str; 2] = ["nohit", "hit"];
pub const NOHIT: usize = 0;
pub const HIT: usize = 1;

// Bounces below this speed leave the ball resting on the ground.
const REST_SPEED: f64 = 1e-9;
const MAX_BOUNCES: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BouncingBallParams {
    pub gravity: f64,
    pub mass: f64,
    pub period: f64,
    /// Restitution is `damping_base + damping_span * u`, `u` in `[0, 1]`.
    pub damping_base: f64,
    pub damping_span: f64,
    /// Hitting only has an effect at or above this height.
    pub hit_height: f64,
    /// A hit sets `v <- min(v, 0) - hit_speed`.
    pub hit_speed: f64,
    pub max_speed: f64,
    pub max_height: f64,
    /// Unsafe states: `p <= resting_height` and `|v| <= resting_speed`.
    pub resting_height: f64,
    pub resting_speed: f64,
}

impl Default for BouncingBallParams {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            mass: 1.0,
            period: 0.1,
            damping_base: 0.85,
            damping_span: 0.12,
            hit_height: 4.0,
            hit_speed: 4.0,
            max_speed: 13.0,
            max_height: 8.0,
            resting_height: 0.01,
            resting_speed: 1.0,
        }
    }
}

/// One control period of the ball. Returns `(v, p)`.
pub fn bouncing_ball_step(params: &BouncingBallParams, s: [f64; 2], action: usize, u: f64) -> [f64; 2] {
    let g = params.gravity;
    let [mut v, mut p] = s;
    if action == HIT && p >= params.hit_height {
        v = v.min(0.0) - params.hit_speed;
    }
    let restitution = params.damping_base + params.damping_span * u.clamp(0.0, 1.0);
    let mut remaining = params.period;
    for _ in 0..MAX_BOUNCES {
        // height p + v t - g t^2 / 2 reaches zero at t = (v + sqrt(v^2 + 2gp)) / g
        let impact_speed = (v * v + 2.0 * g * p.max(0.0)).sqrt();
        let t_hit = (v + impact_speed) / g;
        if t_hit >= remaining {
            p += v * remaining - 0.5 * g * remaining * remaining;
            v -= g * remaining;
            return [v, p.max(0.0)];
        }
        remaining -= t_hit;
        v = restitution * impact_speed;
        p = 0.0;
        if v < REST_SPEED {
            return [0.0, 0.0];
        }
    }
    [0.0, 0.0]
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct BouncingBall {
    pub params: BouncingBallParams,
}

impl BouncingBall {
    pub fn new(params: BouncingBallParams) -> Self {
        Self { params }
    }

    /// `m g p + m v^2 / 2`.
    pub fn mechanical_energy(&self, s: &[f64]) -> f64 {
        let m = self.params.mass;
        m * self.params.gravity * s[1] + 0.5 * m * s[0] * s[0]
    }
}

impl ControlModel for BouncingBall {
    fn name(&self) -> &str {
        "bouncing_ball"
    }
    fn dim(&self) -> usize {
        2
    }
    fn bounds(&self) -> Aabb {
        let p = &self.params;
        Aabb::new(vec![-p.max_speed, 0.0], vec![p.max_speed, p.max_height])
    }
    fn actions(&self) -> &[&'static str] {
        &ACTIONS
    }
    fn disturbance_arity(&self) -> usize {
        1
    }
    fn period(&self) -> f64 {
        self.params.period
    }
    fn step_into(&self, s: &[f64], action: usize, u: &[f64], out: &mut [f64]) {
        let r = bouncing_ball_step(&self.params, [s[0], s[1]], action, u[0]);
        out[..2].copy_from_slice(&r);
    }
    fn safety_region(&self) -> Region {
        let p = &self.params;
        Region::complement(Region::ClosedBox {
            lo: vec![-p.resting_speed, f64::NEG_INFINITY],
            hi: vec![p.resting_speed, p.resting_height],
        })
    }
}
