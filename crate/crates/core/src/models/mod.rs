//! Discrete-time control systems `(S, Act, delta)` used by the case studies.
//!
//! Every model is a deterministic successor sampler: nondeterminism is made
//! explicit through a disturbance vector `u` in `[0, 1]^k`, where `k` is the
//! model's disturbance arity. Successors may leave the state box `S`; callers
//! decide what that means.

mod bouncing_ball;
mod cart_pole;
mod oscillator;
mod reward;
mod satellite;

pub use bouncing_ball::{bouncing_ball_step, BouncingBall, BouncingBallParams, HIT, NOHIT};
pub use cart_pole::{cart_pole_derivative, CartPole, CartPoleParams, PoleOnly};
pub use oscillator::{oscillator_step, Oscillator, OscillatorParams};
pub use reward::{CartResetCost, Destination, Direction, HitCost, NoReward, RewardModel};
pub use satellite::{satellite_step, Obstacle, Satellite, SatelliteParams};

use crate::grid::{Aabb, Region};

/// A discrete-time control system with explicit disturbance samples.
pub trait ControlModel: Send + Sync {
    fn name(&self) -> &str;

    /// State dimension.
    fn dim(&self) -> usize;

    /// The state box `S`.
    fn bounds(&self) -> Aabb;

    fn actions(&self) -> &[&'static str];

    /// Number of disturbance components; 0 for deterministic models.
    fn disturbance_arity(&self) -> usize;

    /// Control period in seconds.
    fn period(&self) -> f64;

    /// Writes `delta(s, action, u)` into `out`. `u` has at least
    /// `disturbance_arity()` entries in `[0, 1]`.
    fn step_into(&self, s: &[f64], action: usize, u: &[f64], out: &mut [f64]);

    /// The safe set `phi`.
    fn safety_region(&self) -> Region;

    fn step(&self, s: &[f64], action: usize, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.step_into(s, action, u, &mut out);
        out
    }

    fn is_safe(&self, s: &[f64]) -> bool {
        self.safety_region().contains(s)
    }

    fn action_count(&self) -> usize {
        self.actions().len()
    }
}

/// The built-in models, selectable by name.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Oscillator(Oscillator),
    Satellite(Satellite),
    BouncingBall(BouncingBall),
    CartPole(CartPole),
    /// The pole subsystem `(theta, omega)` of the cart-pole, used for synthesis.
    Pole(PoleOnly),
}

impl Model {
    /// The system a shield is synthesized for. Identical to `self` except for
    /// the cart-pole, whose safety property only involves the pole.
    pub fn synthesis_model(&self) -> Model {
        match self {
            Model::CartPole(c) => Model::Pole(c.pole()),
            m => m.clone(),
        }
    }

    /// Number of leading state components a shield observes.
    pub fn shield_dim(&self) -> usize {
        self.synthesis_model().dim()
    }

    fn inner(&self) -> &dyn ControlModel {
        match self {
            Model::Oscillator(m) => m,
            Model::Satellite(m) => m,
            Model::BouncingBall(m) => m,
            Model::CartPole(m) => m,
            Model::Pole(m) => m,
        }
    }
}

impl ControlModel for Model {
    fn name(&self) -> &str {
        self.inner().name()
    }
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn bounds(&self) -> Aabb {
        self.inner().bounds()
    }
    fn actions(&self) -> &[&'static str] {
        self.inner().actions()
    }
    fn disturbance_arity(&self) -> usize {
        self.inner().disturbance_arity()
    }
    fn period(&self) -> f64 {
        self.inner().period()
    }
    fn step_into(&self, s: &[f64], action: usize, u: &[f64], out: &mut [f64]) {
        self.inner().step_into(s, action, u, out)
    }
    fn safety_region(&self) -> Region {
        self.inner().safety_region()
    }
    fn is_safe(&self, s: &[f64]) -> bool {
        self.inner().is_safe(s)
    }
}
