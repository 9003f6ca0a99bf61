//! Secondary objectives of the case studies. Reward models keep episode-local
//! state and are owned by a single episode at a time.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::satellite::Obstacle;
use crate::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

pub trait RewardModel: Send + Sync {
    fn direction(&self) -> Direction;

    /// Start a new episode from `initial`.
    fn reset(&mut self, initial: &[f64], rng: &mut Rng);

    /// Reward (or cost, for minimizing models) of the transition
    /// `s --action--> next`. May rewrite `next`, e.g. to reset the cart.
    fn reward(&mut self, s: &[f64], action: usize, next: &mut [f64], rng: &mut Rng) -> f64;

    /// Episode state the agent observes in addition to the model state.
    fn observation(&self) -> Vec<f64> {
        Vec::new()
    }

    fn clone_box(&self) -> Box<dyn RewardModel>;
}

impl Clone for Box<dyn RewardModel> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Zero reward everywhere.
#[derive(Clone, Debug, Default)]
pub struct NoReward;

impl RewardModel for NoReward {
    fn direction(&self) -> Direction {
        Direction::Maximize
    }
    fn reset(&mut self, _initial: &[f64], _rng: &mut Rng) {}
    fn reward(&mut self, _s: &[f64], _a: usize, _next: &mut [f64], _rng: &mut Rng) -> f64 {
        0.0
    }
    fn clone_box(&self) -> Box<dyn RewardModel> {
        Box::new(self.clone())
    }
}

/// Satellite objective: reach a randomly placed destination disc as often as
/// possible. Reaching it pays 1 and respawns it.
#[derive(Clone, Debug)]
pub struct Destination {
    pub radius: f64,
    pub spawn_radius: f64,
    pub obstacles: Vec<Obstacle>,
    pub position: [f64; 2],
}

impl Destination {
    pub fn new(radius: f64, spawn_radius: f64, obstacles: Vec<Obstacle>) -> Self {
        Self { radius, spawn_radius, obstacles, position: [0.0, 0.0] }
    }

    fn spawn(&mut self, rng: &mut Rng) {
        // uniform over the disc, rejecting points inside obstacles
        for _ in 0..10_000 {
            let r = self.spawn_radius * rng.gen::<f64>().sqrt();
            let a = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let p = [r * a.cos(), r * a.sin()];
            let blocked = self.obstacles.iter().any(|o| {
                (p[0] - o.center[0]).hypot(p[1] - o.center[1]) <= o.radius
            });
            if !blocked {
                self.position = p;
                return;
            }
        }
        self.position = [self.spawn_radius * 0.5, 0.0];
    }
}

impl RewardModel for Destination {
    fn direction(&self) -> Direction {
        Direction::Maximize
    }
    fn reset(&mut self, _initial: &[f64], rng: &mut Rng) {
        self.spawn(rng);
    }
    fn reward(&mut self, _s: &[f64], _a: usize, next: &mut [f64], rng: &mut Rng) -> f64 {
        let d = (next[0] - self.position[0]).hypot(next[1] - self.position[1]);
        if d <= self.radius {
            self.spawn(rng);
            1.0
        } else {
            0.0
        }
    }
    fn observation(&self) -> Vec<f64> {
        self.position.to_vec()
    }
    fn clone_box(&self) -> Box<dyn RewardModel> {
        Box::new(self.clone())
    }
}

/// Bouncing-ball objective: every use of `action` costs 1.
#[derive(Clone, Debug)]
pub struct HitCost {
    pub action: usize,
}

impl RewardModel for HitCost {
    fn direction(&self) -> Direction {
        Direction::Minimize
    }
    fn reset(&mut self, _initial: &[f64], _rng: &mut Rng) {}
    fn reward(&mut self, _s: &[f64], action: usize, _next: &mut [f64], _rng: &mut Rng) -> f64 {
        if action == self.action {
            1.0
        } else {
            0.0
        }
    }
    fn clone_box(&self) -> Box<dyn RewardModel> {
        Box::new(self.clone())
    }
}

/// Cart-pole objective: moving the cart more than `max_offset` from its
/// initial position costs 1 and puts the cart back (position and velocity),
/// leaving the pole untouched.
#[derive(Clone, Debug)]
pub struct CartResetCost {
    pub max_offset: f64,
    origin: [f64; 2],
}

impl CartResetCost {
    pub fn new(max_offset: f64) -> Self {
        Self { max_offset, origin: [0.0, 0.0] }
    }
}

impl RewardModel for CartResetCost {
    fn direction(&self) -> Direction {
        Direction::Minimize
    }
    fn reset(&mut self, initial: &[f64], _rng: &mut Rng) {
        self.origin = [initial[2], initial[3]];
    }
    fn reward(&mut self, _s: &[f64], _a: usize, next: &mut [f64], _rng: &mut Rng) -> f64 {
        if (next[2] - self.origin[0]).abs() > self.max_offset {
            next[2] = self.origin[0];
            next[3] = self.origin[1];
            1.0
        } else {
            0.0
        }
    }
    fn clone_box(&self) -> Box<dyn RewardModel> {
        Box::new(self.clone())
    }
}
