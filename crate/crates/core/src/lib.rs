//! Safety shields for discrete-time control systems over grid abstractions,
//! synthesized in transformed state spaces.
//!
//! The pipeline: a [`models::ControlModel`] and a [`transform::Transform`]
//! `f: S -> T` induce a sampled transition system over a grid on `T`
//! ([`synthesis::compute_transitions`]); its greatest fixpoint yields the
//! most permissive [`shield::Strategy`], which [`learn`] uses to filter the
//! actions of a Q-learning agent.

pub mod error;
pub mod grid;
pub mod learn;
pub mod models;
pub mod shield;
pub mod synthesis;
pub mod transform;

pub use error::{GridError, LearnError, ShieldError, SynthesisError, TransformError};
pub use grid::{Aabb, Axis, CellIndex, Containment, GridSpec, Region};
pub use transform::{Transform, TransformKind};

/// Random generator used for every seeded stream in the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Derive an independent stream seed from a base seed and a tuple of indices.
pub fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    // splitmix64 over the sequence
    let mut x = seed ^ 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        x = x.wrapping_add(p).wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x = z ^ (z >> 31);
    }
    x
}
