//! Satellite: the oscillator with actions that scale the radius before each
//! rotation, disc obstacles, and a maximum distance from the center.

use serde::{Deserialize, Serialize};

use super::{oscillator_step, ControlModel};
use crate::grid::{Aabb, Region};

const ACTIONS: [&str; 3] = ["ahead", "out", "in"];
const RADIUS_SCALE: [f64; 3] = [1.0, 1.01, 0.99];

/// One step of the satellite: scale the radius by the action's factor, then
/// rotate by `period`. The origin maps to itself.
pub fn satellite_step(s: [f64; 2], action: usize, period: f64) -> [f64; 2] {
    let c = RADIUS_SCALE[action];
    oscillator_step([c * s[0], c * s[1]], period)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SatelliteParams {
    pub period: f64,
    /// Safe states satisfy `|s| <= max_radius`.
    pub max_radius: f64,
    pub half_width: f64,
    pub obstacles: Vec<Obstacle>,
}

impl Default for SatelliteParams {
    fn default() -> Self {
        let mut obstacles = vec![Obstacle { center: [0.0, 0.0], radius: 0.4 }];
        for deg in [45.0f64, 135.0, 225.0, 315.0] {
            let a = deg.to_radians();
            obstacles.push(Obstacle { center: [1.2 * a.cos(), 1.2 * a.sin()], radius: 0.3 });
        }
        Self { period: 0.05, max_radius: 2.0, half_width: 2.0, obstacles }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Satellite {
    pub params: SatelliteParams,
}

impl Satellite {
    pub fn new(params: SatelliteParams) -> Self {
        Self { params }
    }

    pub fn obstacle_region(&self) -> Region {
        Region::union(
            self.params
                .obstacles
                .iter()
                .map(|o| Region::disc(o.center.to_vec(), o.radius))
                .collect(),
        )
    }
}

impl ControlModel for Satellite {
    fn name(&self) -> &str {
        "satellite"
    }
    fn dim(&self) -> usize {
        2
    }
    fn bounds(&self) -> Aabb {
        let w = self.params.half_width;
        Aabb::new(vec![-w, -w], vec![w, w])
    }
    fn actions(&self) -> &[&'static str] {
        &ACTIONS
    }
    fn disturbance_arity(&self) -> usize {
        0
    }
    fn period(&self) -> f64 {
        self.params.period
    }
    fn step_into(&self, s: &[f64], action: usize, _u: &[f64], out: &mut [f64]) {
        let r = satellite_step([s[0], s[1]], action, self.params.period);
        out[..2].copy_from_slice(&r);
    }
    fn safety_region(&self) -> Region {
        Region::intersection(vec![
            Region::disc(vec![0.0, 0.0], self.params.max_radius),
            Region::complement(self.obstacle_region()),
        ])
    }
}
