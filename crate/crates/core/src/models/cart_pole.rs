//! Cart-pole: an inverted pendulum on a cart pushed left or right with a
//! constant force. State is `(theta, omega, x, v)`.

use serde::{Deserialize, Serialize};

use super::ControlModel;
use crate::grid::{Aabb, Region};

const ACTIONS: [&str; 2] = ["left", "right"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartPoleParams {
    pub gravity: f64,
    pub pole_length: f64,
    pub pole_mass: f64,
    pub cart_mass: f64,
    pub force: f64,
    pub period: f64,
    /// RK4 steps per control period.
    pub substeps: usize,
    /// Safe cone `|theta| <= safe_angle`.
    pub safe_angle: f64,
    /// State box of the pole: `theta` in `[-angle_bound, angle_bound)`,
    /// `omega` in `[-angular_velocity_bound, angular_velocity_bound)`.
    pub angle_bound: f64,
    pub angular_velocity_bound: f64,
    pub position_bound: f64,
    pub velocity_bound: f64,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            pole_length: 0.5,
            pole_mass: 0.1,
            cart_mass: 1.0,
            force: 10.0,
            period: 0.02,
            substeps: 1,
            safe_angle: 0.2095,
            angle_bound: 0.2095,
            angular_velocity_bound: 3.0,
            position_bound: 5.0,
            velocity_bound: 10.0,
        }
    }
}

/// Time derivative of `(theta, omega, x, v)` under horizontal force `force`.
pub fn cart_pole_derivative(p: &CartPoleParams, s: &[f64; 4], force: f64) -> [f64; 4] {
    let [theta, omega, _, v] = *s;
    let (sin, cos) = theta.sin_cos();
    let total = p.cart_mass + p.pole_mass;
    let pml = p.pole_mass * p.pole_length;
    let omega_dot = (p.gravity * sin + cos * ((-force - pml * omega * omega * sin) / total))
        / (p.pole_length * (4.0 / 3.0 - p.pole_mass * cos * cos / total));
    let v_dot = (force + pml * (omega * omega * sin - omega_dot * cos)) / total;
    [omega, omega_dot, v, v_dot]
}

fn rk4(p: &CartPoleParams, s: [f64; 4], force: f64, h: f64) -> [f64; 4] {
    let add = |a: &[f64; 4], k: &[f64; 4], c: f64| -> [f64; 4] {
        [a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2], a[3] + c * k[3]]
    };
    let k1 = cart_pole_derivative(p, &s, force);
    let k2 = cart_pole_derivative(p, &add(&s, &k1, 0.5 * h), force);
    let k3 = cart_pole_derivative(p, &add(&s, &k2, 0.5 * h), force);
    let k4 = cart_pole_derivative(p, &add(&s, &k3, h), force);
    let mut out = s;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CartPole {
    pub params: CartPoleParams,
}

impl CartPole {
    pub fn new(params: CartPoleParams) -> Self {
        Self { params }
    }

    /// Integrate one control period with an arbitrary force.
    pub fn integrate(&self, s: [f64; 4], force: f64) -> [f64; 4] {
        let n = self.params.substeps.max(1);
        let h = self.params.period / n as f64;
        (0..n).fold(s, |acc, _| rk4(&self.params, acc, force, h))
    }

    pub fn force_of(&self, action: usize) -> f64 {
        if action == 0 {
            -self.params.force
        } else {
            self.params.force
        }
    }

    pub fn pole(&self) -> PoleOnly {
        PoleOnly { cart: self.clone() }
    }
}

impl ControlModel for CartPole {
    fn name(&self) -> &str {
        "cart_pole"
    }
    fn dim(&self) -> usize {
        4
    }
    fn bounds(&self) -> Aabb {
        let p = &self.params;
        Aabb::new(
            vec![-p.angle_bound, -p.angular_velocity_bound, -p.position_bound, -p.velocity_bound],
            vec![p.angle_bound, p.angular_velocity_bound, p.position_bound, p.velocity_bound],
        )
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
        let r = self.integrate([s[0], s[1], s[2], s[3]], self.force_of(action));
        out[..4].copy_from_slice(&r);
    }
    fn safety_region(&self) -> Region {
        let a = self.params.safe_angle;
        let inf = f64::INFINITY;
        Region::ClosedBox { lo: vec![-a, -inf, -inf, -inf], hi: vec![a, inf, inf, inf] }
    }
}

/// The `(theta, omega)` subsystem. The pole dynamics do not depend on the
/// cart's position or velocity, so this is an exact projection.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PoleOnly {
    pub cart: CartPole,
}

impl ControlModel for PoleOnly {
    fn name(&self) -> &str {
        "cart_pole"
    }
    fn dim(&self) -> usize {
        2
    }
    fn bounds(&self) -> Aabb {
        let p = &self.cart.params;
        Aabb::new(
            vec![-p.angle_bound, -p.angular_velocity_bound],
            vec![p.angle_bound, p.angular_velocity_bound],
        )
    }
    fn actions(&self) -> &[&'static str] {
        &ACTIONS
    }
    fn disturbance_arity(&self) -> usize {
        0
    }
    fn period(&self) -> f64 {
        self.cart.params.period
    }
    fn step_into(&self, s: &[f64], action: usize, _u: &[f64], out: &mut [f64]) {
        let r = self.cart.integrate([s[0], s[1], 0.0, 0.0], self.cart.force_of(action));
        out[0] = r[0];
        out[1] = r[1];
    }
    fn safety_region(&self) -> Region {
        let a = self.cart.params.safe_angle;
        Region::ClosedBox { lo: vec![-a, f64::NEG_INFINITY], hi: vec![a, f64::INFINITY] }
    }
}
