//! Harmonic oscillator `s' = A s`, `A = [[0, 1], [-1, 0]]`, with a single
//! dummy action and a disc-shaped obstacle at the origin.

use serde::{Deserialize, Serialize};

use super::ControlModel;
use crate::grid::{Aabb, Region};

/// `e^{At} s`, i.e. a clockwise rotation of `s` by `t` radians.
pub fn oscillator_step(s: [f64; 2], t: f64) -> [f64; 2] {
    let (sin, cos) = t.sin_cos();
    [cos * s[0] + sin * s[1], -sin * s[0] + cos * s[1]]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillatorParams {
    pub period: f64,
    pub obstacle_radius: f64,
    pub half_width: f64,
}

impl Default for OscillatorParams {
    fn default() -> Self {
        Self { period: 1.2, obstacle_radius: 0.4, half_width: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Oscillator {
    pub params: OscillatorParams,
}

impl Oscillator {
    pub fn new(params: OscillatorParams) -> Self {
        Self { params }
    }
}

impl ControlModel for Oscillator {
    fn name(&self) -> &str {
        "oscillator"
    }
    fn dim(&self) -> usize {
        2
    }
    fn bounds(&self) -> Aabb {
        let w = self.params.half_width;
        Aabb::new(vec![-w, -w], vec![w, w])
    }
    fn actions(&self) -> &[&'static str] {
        &["a"]
    }
    fn disturbance_arity(&self) -> usize {
        0
    }
    fn period(&self) -> f64 {
        self.params.period
    }
    fn step_into(&self, s: &[f64], _action: usize, _u: &[f64], out: &mut [f64]) {
        let r = oscillator_step([s[0], s[1]], self.params.period);
        out[..2].copy_from_slice(&r);
    }
    fn safety_region(&self) -> Region {
        Region::complement(Region::disc(vec![0.0, 0.0], self.params.obstacle_radius))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_rounded_matrix() {
        let [x, y] = oscillator_step([1.0, 0.0], 1.2);
        assert!((x - 0.362).abs() < 1e-3, "{x}");
        assert!((y + 0.932).abs() < 1e-3, "{y}");
        assert_eq!((x * 100.0).round() / 100.0, 0.36);
        assert_eq!((y * 100.0).round() / 100.0, -0.93);
        let [x, y] = oscillator_step([0.0, 1.0], 1.2);
        assert_eq!((x * 100.0).round() / 100.0, 0.93);
        assert_eq!((y * 100.0).round() / 100.0, 0.36);
    }

    #[test]
    fn origin_is_fixed() {
        for t in [0.0, 1.2, -3.0, 100.0] {
            assert_eq!(oscillator_step([0.0, 0.0], t), [0.0, 0.0]);
        }
    }

    #[test]
    fn ignores_disturbance() {
        let m = Oscillator::default();
        assert_eq!(m.step(&[0.3, 1.1], 0, &[]), m.step(&[0.3, 1.1], 0, &[0.7]));
    }

    proptest::proptest! {
        #[test]
        fn rotation_preserves_norm(x in -2.0..2.0f64, y in -2.0..2.0f64, t in -10.0..10.0f64) {
            let [a, b] = oscillator_step([x, y], t);
            proptest::prop_assert!((a.hypot(b) - x.hypot(y)).abs() < 1e-12);
        }
    }
}
