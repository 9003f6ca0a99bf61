//! Shielded tabular Q-learning.
//!
//! An episode starts from a sampled initial state and runs for a fixed number
//! of control periods. Each step the agent proposes an action, the shield (if
//! any) replaces it by an allowed one, the model moves on with a fresh
//! disturbance sample and the reward model scores the transition. Leaving
//! the safe set, or reaching a state the shield has no allowed action for,
//! counts as a violation and ends the episode.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng as _, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LearnError, ShieldError};
use crate::grid::{Aabb, GridSpec};
use crate::models::{CartResetCost, ControlModel, Destination, Direction, HitCost, Model, NoReward, RewardModel, HIT};
use crate::shield::io::{self, FileHeader, Reader};
use crate::shield::{filter_mask, Strategy};
use crate::transform::{Transform, TransformKind};
use crate::{mix_seed, Rng};

pub const QTABLE_MAGIC: &[u8; 4] = b"SHQT";

// Attempts at drawing an initial state before giving up.
const MAX_START_TRIES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the training episodes over which epsilon decays linearly.
    pub epsilon_decay: f64,
    pub q_init: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self { alpha: 0.1, gamma: 0.97, epsilon_start: 1.0, epsilon_end: 0.05, epsilon_decay: 0.7, q_init: 0.0 }
    }
}

impl LearnConfig {
    pub fn epsilon(&self, episode: usize, episodes: usize) -> f64 {
        let span = self.epsilon_decay * episodes as f64;
        let frac = if span > 0.0 { (episode as f64 / span).min(1.0) } else { 1.0 };
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// The space the agent observes.
#[derive(Clone, Debug, PartialEq)]
pub enum Space {
    S,
    /// Observe `f(s)` on the leading coordinates, the rest unchanged.
    T(Transform),
}

impl Space {
    pub fn name(&self) -> &'static str {
        match self {
            Space::S => "S",
            Space::T(_) => "T",
        }
    }

    /// Observation of the model part of a state. Where `f` is undefined the
    /// leading coordinates fall back to the lower corner of `T`.
    pub fn observe(&self, s: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match self {
            Space::S => out.extend_from_slice(s),
            Space::T(tr) => {
                let d = tr.codomain().dim();
                out.resize(d, 0.0);
                if !tr.forward_into(s, out) {
                    out.copy_from_slice(&tr.codomain().lo);
                }
                out.extend_from_slice(&s[tr.dim().min(s.len())..]);
            }
        }
    }

    /// Box of the model part of the observations.
    pub fn bounds(&self, model: &dyn ControlModel) -> Aabb {
        let b = model.bounds();
        match self {
            Space::S => b,
            Space::T(tr) => {
                let c = tr.codomain();
                let d = tr.dim().min(b.dim());
                let mut lo = c.lo.clone();
                let mut hi = c.hi.clone();
                lo.extend_from_slice(&b.lo[d..]);
                hi.extend_from_slice(&b.hi[d..]);
                Aabb::new(lo, hi)
            }
        }
    }
}

/// Distribution of episode start states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Fixed { state: Vec<f64> },
    /// Uniform in `center +- half_width` per component.
    Jitter { center: Vec<f64>, half_width: f64 },
    /// Uniform angle and radius in `[r_min, r_max]` around the origin of the
    /// first two components, redrawn until the state is safe.
    Annulus { r_min: f64, r_max: f64 },
}

impl InitialState {
    pub fn default_for(model: &Model) -> Self {
        match model {
            Model::BouncingBall(_) => InitialState::Fixed { state: vec![0.0, 7.0] },
            Model::Satellite(_) => InitialState::Annulus { r_min: 1.0, r_max: 1.5 },
            Model::CartPole(_) => InitialState::Jitter { center: vec![0.0; 4], half_width: 0.05 },
            Model::Pole(_) => InitialState::Jitter { center: vec![0.0; 2], half_width: 0.05 },
            Model::Oscillator(_) => InitialState::Annulus { r_min: 1.0, r_max: 1.5 },
        }
    }

    pub fn sample(&self, model: &dyn ControlModel, rng: &mut Rng) -> Vec<f64> {
        match self {
            InitialState::Fixed { state } => state.clone(),
            InitialState::Jitter { center, half_width } => {
                center.iter().map(|&c| c + half_width * (2.0 * rng.gen::<f64>() - 1.0)).collect()
            }
            InitialState::Annulus { r_min, r_max } => {
                let mut s = vec![0.0; model.dim()];
                for _ in 0..MAX_START_TRIES {
                    let r = r_min + (r_max - r_min) * rng.gen::<f64>();
                    let a = rng.gen_range(-PI..PI);
                    s[0] = r * a.cos();
                    s[1] = r * a.sin();
                    if model.is_safe(&s) {
                        break;
                    }
                }
                s
            }
        }
    }
}

/// Episode length in seconds of model time.
pub fn default_horizon(model: &Model) -> f64 {
    match model {
        Model::CartPole(_) | Model::Pole(_) => 10.0,
        _ => 120.0,
    }
}

pub fn horizon_steps(model: &dyn ControlModel, seconds: f64) -> usize {
    (seconds / model.period()).round().max(0.0) as usize
}

/// The secondary objective of each case study.
pub fn default_reward(model: &Model) -> Box<dyn RewardModel> {
    match model {
        Model::BouncingBall(_) => Box::new(HitCost { action: HIT }),
        Model::Satellite(m) => Box::new(Destination::new(0.3, m.params.max_radius, m.params.obstacles.clone())),
        Model::CartPole(_) | Model::Pole(_) => Box::new(CartResetCost::new(2.4)),
        Model::Oscillator(_) => Box::new(NoReward),
    }
}

/// Observation grid with `counts[i]` cells on axis `i`: the model part spans
/// `space.bounds(model)`, extra reward observations (the satellite's
/// destination) span `extra`.
pub fn observation_grid(
    model: &dyn ControlModel,
    space: &Space,
    extra: &[(f64, f64)],
    counts: &[usize],
) -> Result<GridSpec, LearnError> {
    let b = space.bounds(model);
    let mut bounds: Vec<(f64, f64)> = b.lo.iter().zip(&b.hi).map(|(&l, &h)| (l, h)).collect();
    bounds.extend_from_slice(extra);
    if bounds.len() != counts.len() {
        return Err(LearnError::Invalid(format!(
            "observation has {} components, {} cell counts given",
            bounds.len(),
            counts.len()
        )));
    }
    Ok(GridSpec::uniform(&bounds, counts)?)
}

/// Observation grid with per-model cell counts.
pub fn default_observation_grid(model: &Model, space: &Space) -> Result<GridSpec, LearnError> {
    match model {
        Model::BouncingBall(_) => observation_grid(model, space, &[], &[24, 24]),
        Model::Satellite(m) => {
            let r = m.params.max_radius;
            observation_grid(model, space, &[(-r, r), (-r, r)], &[16, 16, 6, 6])
        }
        Model::CartPole(_) => observation_grid(model, space, &[], &[12, 12, 4, 4]),
        Model::Pole(_) | Model::Oscillator(_) => observation_grid(model, space, &[], &[16, 16]),
    }
}

/// Action values over an observation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    grid: GridSpec,
    actions: Vec<String>,
    space: Space,
    config: LearnConfig,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(grid: GridSpec, actions: Vec<String>, space: Space, config: LearnConfig) -> Result<Self, LearnError> {
        if actions.is_empty() || actions.len() > 8 {
            return Err(LearnError::Invalid(format!("{} actions", actions.len())));
        }
        let values = vec![config.q_init; grid.cell_count() * actions.len()];
        Ok(Self { grid, actions, space, config, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn config(&self) -> &LearnConfig {
        &self.config
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    /// Cell of an observation, clamping each component into the grid.
    pub fn cell(&self, obs: &[f64]) -> usize {
        self.grid.axes().iter().zip(obs).fold(0, |acc, (a, &x)| {
            let k = ((x - a.low) / a.diameter()).floor();
            let k = if k.is_nan() { 0 } else { (k.max(0.0) as usize).min(a.count - 1) };
            acc * a.count + k
        })
    }

    pub fn q(&self, cell: usize, action: usize) -> f64 {
        self.values[cell * self.actions.len() + action]
    }

    pub fn row(&self, cell: usize) -> &[f64] {
        let n = self.actions.len();
        &self.values[cell * n..(cell + 1) * n]
    }

    /// Highest-valued action of `mask`, lowest index on ties.
    pub fn best_in(&self, cell: usize, mask: u8) -> Option<usize> {
        let row = self.row(cell);
        (0..row.len()).filter(|&a| mask & (1 << a) != 0).fold(None, |best, a| match best {
            Some(b) if row[b] >= row[a] => Some(b),
            _ => Some(a),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        let header = FileHeader {
            grid: self.grid.clone(),
            actions: self.actions.clone(),
            transform: Transform::identity_transform(self.grid.bounds()),
        };
        io::write_header(&mut buf, QTABLE_MAGIC, &header);
        match &self.space {
            Space::S => buf.push(0),
            Space::T(tr) => {
                buf.push(1);
                let mut params = tr.kind().params();
                for (l, h) in tr.domain().lo.iter().zip(&tr.domain().hi) {
                    params.extend([*l, *h]);
                }
                buf.extend_from_slice(&tr.kind().tag().to_le_bytes());
                buf.extend_from_slice(&(tr.dim() as u32).to_le_bytes());
                buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
                params.iter().for_each(|p| buf.extend_from_slice(&p.to_le_bytes()));
            }
        }
        let c = &self.config;
        for x in [c.alpha, c.gamma, c.epsilon_start, c.epsilon_end, c.epsilon_decay, c.q_init] {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        self.values.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ShieldError> {
        let mut r = Reader::new(bytes);
        let h = io::read_header(&mut r, QTABLE_MAGIC)?;
        let space = match r.u8()? {
            0 => Space::S,
            1 => {
                let tag = r.u32()?;
                let dim = r.u32()? as usize;
                let n = r.u32()? as usize;
                if dim == 0 || dim > 8 || n < 2 * dim || n > 2 * dim + 64 {
                    return Err(ShieldError::Corrupt("bad observation transform".into()));
                }
                let params = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
                let (kp, dom) = params.split_at(n - 2 * dim);
                let domain = Aabb::new((0..dim).map(|i| dom[2 * i]).collect(), (0..dim).map(|i| dom[2 * i + 1]).collect());
                let kind = TransformKind::from_tag(tag, kp).map_err(|e| ShieldError::Corrupt(e.to_string()))?;
                Space::T(Transform::new(kind, domain).map_err(|e| ShieldError::Corrupt(e.to_string()))?)
            }
            k => return Err(ShieldError::Corrupt(format!("unknown space {k}"))),
        };
        let config = LearnConfig {
            alpha: r.f64()?,
            gamma: r.f64()?,
            epsilon_start: r.f64()?,
            epsilon_end: r.f64()?,
            epsilon_decay: r.f64()?,
            q_init: r.f64()?,
        };
        let body = r.rest();
        let n = h.grid.cell_count() * h.actions.len();
        if body.len() != 8 * n {
            return Err(ShieldError::Corrupt(format!("body holds {} bytes, expected {}", body.len(), 8 * n)));
        }
        let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        if h.actions.is_empty() {
            return Err(ShieldError::Corrupt("no actions".into()));
        }
        Ok(Self { grid: h.grid, actions: h.actions, space, config, values })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ShieldError> {
        let bytes = std::fs::read(path.as_ref())
            .map_err(|e| ShieldError::Corrupt(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_bytes(&bytes)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub episode: usize,
    /// Sum of the raw rewards (costs, for minimizing objectives).
    pub ret: f64,
    pub violations: u32,
    pub steps: usize,
    pub seed: u64,
    /// No controllable start state was found; the episode did not run.
    pub uncontrollable_start: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub episodes: Vec<EpisodeResult>,
}

impl Evaluation {
    pub fn mean_return(&self) -> f64 {
        let run: Vec<_> = self.episodes.iter().filter(|e| !e.uncontrollable_start).collect();
        if run.is_empty() {
            0.0
        } else {
            run.iter().map(|e| e.ret).sum::<f64>() / run.len() as f64
        }
    }

    pub fn total_violations(&self) -> u64 {
        self.episodes.iter().map(|e| e.violations as u64).sum()
    }

    pub fn uncontrollable_starts(&self) -> usize {
        self.episodes.iter().filter(|e| e.uncontrollable_start).count()
    }

    pub fn total_steps(&self) -> usize {
        self.episodes.iter().map(|e| e.steps).sum()
    }
}

/// Everything an episode needs apart from the agent.
#[derive(Clone, Copy)]
pub struct Task<'a> {
    pub model: &'a dyn ControlModel,
    pub reward: &'a dyn RewardModel,
    pub shield: Option<&'a Strategy>,
    pub initial: &'a InitialState,
    /// Episode length in control periods.
    pub horizon: usize,
}

impl<'a> Task<'a> {
    fn all_actions(&self) -> u8 {
        let n = self.model.action_count();
        if n >= 8 {
            u8::MAX
        } else {
            (1u8 << n) - 1
        }
    }

    // Allowed actions in `s`; `None` when the shield has no answer.
    fn allowed(&self, s: &[f64]) -> Option<u8> {
        match self.shield {
            None => Some(self.all_actions()),
            Some(st) => st.allowed_in_s(s).ok().filter(|&m| m != 0),
        }
    }

    fn start(&self, rng: &mut Rng) -> Result<(Vec<f64>, u8), LearnError> {
        let tries = if self.shield.is_some() { MAX_START_TRIES } else { 1 };
        for _ in 0..tries {
            let s = self.initial.sample(self.model, rng);
            if s.len() != self.model.dim() {
                return Err(LearnError::Invalid(format!(
                    "initial state has {} components, model has {}",
                    s.len(),
                    self.model.dim()
                )));
            }
            if let Some(m) = self.allowed(&s) {
                return Ok((s, m));
            }
        }
        Err(LearnError::UncontrollableStart)
    }
}

/// Chooses actions and optionally learns from transitions.
trait Agent {
    fn act(&mut self, obs: &[f64], allowed: u8, rng: &mut Rng) -> usize;

    fn update(&mut self, _obs: &[f64], _action: usize, _reward: f64, _next: Option<(&[f64], u8)>) {}
}

struct Learner<'q> {
    table: &'q mut QTable,
    epsilon: f64,
}

impl Agent for Learner<'_> {
    fn act(&mut self, obs: &[f64], allowed: u8, rng: &mut Rng) -> usize {
        if rng.gen::<f64>() < self.epsilon {
            random_in(allowed, rng)
        } else {
            self.table.best_in(self.table.cell(obs), allowed).expect("nonempty mask")
        }
    }

    fn update(&mut self, obs: &[f64], action: usize, reward: f64, next: Option<(&[f64], u8)>) {
        let t = &mut *self.table;
        let target = reward
            + match next {
                Some((o, m)) => {
                    let c = t.cell(o);
                    t.config.gamma * t.q(c, t.best_in(c, m).expect("nonempty mask"))
                }
                None => 0.0,
            };
        let i = t.cell(obs) * t.actions.len() + action;
        t.values[i] += t.config.alpha * (target - t.values[i]);
    }
}

/// How actions are chosen during evaluation. Proposals are filtered through
/// the shield, if any.
#[derive(Clone, Copy, Debug)]
pub enum Policy<'a> {
    Greedy(&'a QTable),
    Random,
}

struct Fixed<'a>(Policy<'a>, u8);

impl Agent for Fixed<'_> {
    fn act(&mut self, obs: &[f64], allowed: u8, rng: &mut Rng) -> usize {
        let proposed = match self.0 {
            Policy::Greedy(q) => q.best_in(q.cell(obs), self.1).expect("nonempty mask"),
            Policy::Random => random_in(self.1, rng),
        };
        filter_mask(allowed, proposed).expect("nonempty mask")
    }
}

fn random_in(mask: u8, rng: &mut Rng) -> usize {
    let k = rng.gen_range(0..mask.count_ones());
    crate::shield::mask_actions(mask).nth(k as usize).expect("k < popcount")
}

fn run_episode(
    task: &Task<'_>,
    space: &Space,
    episode: usize,
    seed: u64,
    agent: &mut dyn Agent,
) -> Result<EpisodeResult, LearnError> {
    let mut rng = Rng::seed_from_u64(seed);
    let mut result = EpisodeResult { episode, ret: 0.0, violations: 0, steps: 0, seed, uncontrollable_start: false };
    let (mut s, mut allowed) = task.start(&mut rng)?;
    let mut reward = task.reward.clone_box();
    reward.reset(&s, &mut rng);
    let sign = match reward.direction() {
        Direction::Maximize => 1.0,
        Direction::Minimize => -1.0,
    };
    let k = task.model.disturbance_arity();
    let mut u = vec![0.0; k];
    let mut next = vec![0.0; s.len()];
    let (mut obs, mut next_obs) = (Vec::new(), Vec::new());
    let observe = |s: &[f64], r: &dyn RewardModel, out: &mut Vec<f64>| {
        space.observe(s, out);
        out.extend(r.observation());
    };
    observe(&s, reward.as_ref(), &mut obs);
    for _ in 0..task.horizon {
        let a = agent.act(&obs, allowed, &mut rng);
        u.iter_mut().for_each(|x| *x = rng.gen());
        task.model.step_into(&s, a, &u, &mut next);
        let r = reward.reward(&s, a, &mut next, &mut rng);
        result.ret += r;
        result.steps += 1;
        let next_allowed = if task.model.is_safe(&next) { task.allowed(&next) } else { None };
        match next_allowed {
            None => {
                result.violations += 1;
                agent.update(&obs, a, sign * r, None);
                break;
            }
            Some(m) => {
                observe(&next, reward.as_ref(), &mut next_obs);
                agent.update(&obs, a, sign * r, Some((&next_obs, m)));
                std::mem::swap(&mut s, &mut next);
                std::mem::swap(&mut obs, &mut next_obs);
                allowed = m;
            }
        }
    }
    Ok(result)
}

/// Trains a Q-table from `table`'s current values for `episodes` episodes.
/// Episode `i` draws from the stream `mix_seed(seed, [i])`.
pub fn train(
    task: &Task<'_>,
    table: &mut QTable,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeResult>, LearnError> {
    if table.action_count() != task.model.action_count() {
        return Err(LearnError::Invalid("Q-table and model disagree on the actions".into()));
    }
    let space = table.space.clone();
    let mut out = Vec::with_capacity(episodes);
    for i in 0..episodes {
        let epsilon = table.config.epsilon(i, episodes);
        let mut agent = Learner { table: &mut *table, epsilon };
        out.push(run_episode(task, &space, i, mix_seed(seed, &[i as u64]), &mut agent)?);
    }
    Ok(out)
}

/// Runs `episodes` independent episodes in parallel. Episodes without a
/// controllable start are reported, not run.
pub fn evaluate(task: &Task<'_>, policy: Policy<'_>, episodes: usize, seed: u64) -> Result<Evaluation, LearnError> {
    let space = match policy {
        Policy::Greedy(q) => {
            if q.action_count() != task.model.action_count() {
                return Err(LearnError::Invalid("Q-table and model disagree on the actions".into()));
            }
            q.space.clone()
        }
        Policy::Random => Space::S,
    };
    let all = task.all_actions();
    let results: Result<Vec<_>, LearnError> = (0..episodes)
        .into_par_iter()
        .map(|i| {
            let s = mix_seed(seed, &[i as u64]);
            match run_episode(task, &space, i, s, &mut Fixed(policy, all)) {
                Err(LearnError::UncontrollableStart) => Ok(EpisodeResult {
                    episode: i,
                    ret: 0.0,
                    violations: 0,
                    steps: 0,
                    seed: s,
                    uncontrollable_start: true,
                }),
                r => r,
            }
        })
        .collect();
    Ok(Evaluation { episodes: results? })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    /// `actions[i]` leads from `states[i]` to `states[i + 1]`.
    pub actions: Vec<usize>,
    pub unsafe_flags: Vec<bool>,
}

/// Uniformly random actions for `steps` periods. Runs through unsafe states.
pub fn random_rollout(model: &dyn ControlModel, initial: &InitialState, steps: usize, seed: u64) -> Trajectory {
    let mut rng = Rng::seed_from_u64(seed);
    let mut s = initial.sample(model, &mut rng);
    let mut u = vec![0.0; model.disturbance_arity()];
    let mut t = Trajectory { states: Vec::with_capacity(steps + 1), actions: Vec::with_capacity(steps), unsafe_flags: Vec::new() };
    t.unsafe_flags.push(!model.is_safe(&s));
    t.states.push(s.clone());
    for _ in 0..steps {
        let a = rng.gen_range(0..model.action_count());
        u.iter_mut().for_each(|x| *x = rng.gen());
        s = model.step(&s, a, &u);
        t.actions.push(a);
        t.unsafe_flags.push(!model.is_safe(&s));
        t.states.push(s.clone());
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Region;
    use crate::models::{BouncingBall, Oscillator, Satellite, NOHIT};
    use crate::shield::tests::polar_shield;

    // Two cells {0, 1} on [0, 1); every action flips the cell.
    struct Flip;

    impl ControlModel for Flip {
        fn name(&self) -> &str {
            "flip"
        }
        fn dim(&self) -> usize {
            1
        }
        fn bounds(&self) -> Aabb {
            Aabb::new(vec![0.0], vec![1.0])
        }
        fn actions(&self) -> &[&'static str] {
            &["a", "b"]
        }
        fn disturbance_arity(&self) -> usize {
            0
        }
        fn period(&self) -> f64 {
            1.0
        }
        fn step_into(&self, s: &[f64], _a: usize, _u: &[f64], out: &mut [f64]) {
            out[0] = 1.0 - s[0];
        }
        fn safety_region(&self) -> Region {
            Region::everything()
        }
    }

    // r(s, a) = a + 2 [s >= 0.5]
    #[derive(Clone)]
    struct Table;

    impl RewardModel for Table {
        fn direction(&self) -> Direction {
            Direction::Maximize
        }
        fn reset(&mut self, _initial: &[f64], _rng: &mut Rng) {}
        fn reward(&mut self, s: &[f64], a: usize, _next: &mut [f64], _rng: &mut Rng) -> f64 {
            a as f64 + if s[0] >= 0.5 { 2.0 } else { 0.0 }
        }
        fn clone_box(&self) -> Box<dyn RewardModel> {
            Box::new(self.clone())
        }
    }

    fn flip_table(cfg: LearnConfig) -> QTable {
        let g = GridSpec::uniform(&[(0.0, 1.0)], &[2]).unwrap();
        QTable::new(g, vec!["a".into(), "b".into()], Space::S, cfg).unwrap()
    }

    #[test]
    fn myopic_q_converges_to_immediate_reward() {
        let cfg = LearnConfig { gamma: 0.0, epsilon_start: 1.0, epsilon_end: 1.0, ..LearnConfig::default() };
        let mut q = flip_table(cfg);
        let init = InitialState::Fixed { state: vec![0.25] };
        let task = Task { model: &Flip, reward: &Table, shield: None, initial: &init, horizon: 10 };
        train(&task, &mut q, 200, 3).unwrap();
        for (cell, a, r) in [(0, 0, 0.0), (0, 1, 1.0), (1, 0, 2.0), (1, 1, 3.0)] {
            assert!((q.q(cell, a) - r).abs() < 1e-6, "Q({cell}, {a}) = {}", q.q(cell, a));
        }
    }

    #[test]
    fn discounted_q_matches_bellman_fixpoint() {
        // Q(s, a) = r(s, a) + g max Q(1 - s, .), so with V0 = 1 + g V1 and
        // V1 = 3 + g V0: V0 = (1 + 3g) / (1 - g^2)
        let g = 0.5;
        let cfg = LearnConfig { gamma: g, epsilon_start: 1.0, epsilon_end: 1.0, ..LearnConfig::default() };
        let mut q = flip_table(cfg);
        let init = InitialState::Fixed { state: vec![0.25] };
        let task = Task { model: &Flip, reward: &Table, shield: None, initial: &init, horizon: 20 };
        train(&task, &mut q, 500, 3).unwrap();
        let v0 = (1.0 + 3.0 * g) / (1.0 - g * g);
        let v1 = 3.0 + g * v0;
        assert!((q.q(0, 1) - v0).abs() < 1e-3);
        assert!((q.q(1, 1) - v1).abs() < 1e-3);
        assert!((q.q(0, 0) - (g * v1)).abs() < 1e-3);
    }

    #[test]
    fn zero_episodes_leave_initial_values() {
        let cfg = LearnConfig { q_init: 0.5, ..LearnConfig::default() };
        let mut q = flip_table(cfg);
        let init = InitialState::Fixed { state: vec![0.25] };
        let task = Task { model: &Flip, reward: &Table, shield: None, initial: &init, horizon: 10 };
        assert!(train(&task, &mut q, 0, 0).unwrap().is_empty());
        assert!(q.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn epsilon_schedule() {
        let c = LearnConfig::default();
        assert_eq!(c.epsilon(0, 100), 1.0);
        assert!((c.epsilon(35, 100) - 0.525).abs() < 1e-12);
        assert!((c.epsilon(70, 100) - 0.05).abs() < 1e-12);
        assert!((c.epsilon(99, 100) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn cells_are_clamped() {
        let g = GridSpec::uniform(&[(0.0, 1.0), (-1.0, 1.0)], &[4, 2]).unwrap();
        let q = QTable::new(g, vec!["a".into()], Space::S, LearnConfig::default()).unwrap();
        assert_eq!(q.cell(&[0.3, 0.5]), 3);
        assert_eq!(q.cell(&[-5.0, -7.0]), 0);
        assert_eq!(q.cell(&[9.0, 9.0]), 7);
        assert_eq!(q.cell(&[f64::NAN, 0.0]), 1);
    }

    #[test]
    fn horizon_zero_is_empty() {
        let m = Model::BouncingBall(BouncingBall::default());
        let init = InitialState::default_for(&m);
        let r = default_reward(&m);
        let task = Task { model: &m, reward: r.as_ref(), shield: None, initial: &init, horizon: 0 };
        let ev = evaluate(&task, Policy::Random, 5, 0).unwrap();
        assert_eq!(ev.mean_return(), 0.0);
        assert_eq!(ev.total_violations(), 0);
        assert_eq!(ev.total_steps(), 0);
    }

    #[test]
    fn nohit_ball_comes_to_rest() {
        // never hitting, the ball loses energy until it rests on the ground
        let m = Model::BouncingBall(BouncingBall::default());
        let init = InitialState::default_for(&m);
        let task = Task { model: &m, reward: &NoReward, shield: None, initial: &init, horizon: 1200 };
        let g = default_observation_grid(&m, &Space::S).unwrap();
        let mut q = QTable::new(g, vec!["nohit".into(), "hit".into()], Space::S, LearnConfig::default()).unwrap();
        // make nohit greedy everywhere
        for c in 0..q.grid().cell_count() {
            q.values[c * 2 + NOHIT] = 1.0;
        }
        let ev = evaluate(&task, Policy::Greedy(&q), 3, 0).unwrap();
        assert_eq!(ev.total_violations(), 3);
        assert!(ev.episodes.iter().all(|e| e.steps < 1200 && e.ret == 0.0));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let m = Model::Satellite(Satellite::default());
        let init = InitialState::default_for(&m);
        let r = default_reward(&m);
        let task = Task { model: &m, reward: r.as_ref(), shield: None, initial: &init, horizon: 300 };
        let a = evaluate(&task, Policy::Random, 16, 9).unwrap();
        let b = evaluate(&task, Policy::Random, 16, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shielded_oscillator_never_violates() {
        let st = polar_shield();
        let m = Model::Oscillator(Oscillator::default());
        let init = InitialState::Annulus { r_min: 0.5, r_max: 2.0 };
        let task = Task { model: &m, reward: &NoReward, shield: Some(&st), initial: &init, horizon: 100 };
        let ev = evaluate(&task, Policy::Random, 50, 1).unwrap();
        assert_eq!(ev.total_violations(), 0);
        assert_eq!(ev.uncontrollable_starts(), 0);
        assert_eq!(ev.total_steps(), 5000);
    }

    #[test]
    fn uncontrollable_start_is_reported() {
        let st = polar_shield();
        let m = Model::Oscillator(Oscillator::default());
        // radius below 0.5 lies in the uncontrollable bottom row of T
        let init = InitialState::Fixed { state: vec![0.1, 0.1] };
        let task = Task { model: &m, reward: &NoReward, shield: Some(&st), initial: &init, horizon: 10 };
        let ev = evaluate(&task, Policy::Random, 2, 0).unwrap();
        assert_eq!(ev.uncontrollable_starts(), 2);
        let g = default_observation_grid(&m, &Space::S).unwrap();
        let mut q = QTable::new(g, vec!["none".into()], Space::S, LearnConfig::default()).unwrap();
        assert!(matches!(train(&task, &mut q, 1, 0), Err(LearnError::UncontrollableStart)));
    }

    #[test]
    fn observation_in_t() {
        let tr = Transform::polar_transform(Aabb::new(vec![-2.0, -2.0], vec![2.0, 2.0]), 2.0).unwrap();
        let sp = Space::T(tr);
        let mut o = Vec::new();
        sp.observe(&[0.0, 1.5], &mut o);
        assert!((o[0] - PI / 2.0).abs() < 1e-12 && (o[1] - 1.5).abs() < 1e-12);
        sp.observe(&[0.0, 0.0], &mut o);
        assert_eq!(o, vec![-PI, 0.0]);
        let m = Model::Satellite(Satellite::default());
        assert_eq!(default_observation_grid(&m, &sp).unwrap().dim(), 4);
    }

    #[test]
    fn qtable_round_trip() {
        let tr = Transform::energy_transform(Aabb::new(vec![-13.0, 0.0], vec![13.0, 8.0]), 1.0, 9.81, 100.0).unwrap();
        for space in [Space::S, Space::T(tr)] {
            let m = Model::BouncingBall(BouncingBall::default());
            let g = default_observation_grid(&m, &space).unwrap();
            let mut q = QTable::new(g, vec!["nohit".into(), "hit".into()], space, LearnConfig::default()).unwrap();
            q.values.iter_mut().enumerate().for_each(|(i, v)| *v = i as f64 * 0.25 - 3.0);
            let bytes = q.to_bytes();
            assert_eq!(&bytes[..4], QTABLE_MAGIC);
            assert_eq!(QTable::from_bytes(&bytes).unwrap(), q);
            assert!(matches!(QTable::from_bytes(&bytes[..bytes.len() - 3]), Err(ShieldError::Corrupt(_))));
        }
    }

    #[test]
    fn rollouts() {
        let m = Satellite::default();
        let init = InitialState::Annulus { r_min: 1.0, r_max: 1.5 };
        let t = random_rollout(&m, &init, 1, 4);
        assert_eq!((t.states.len(), t.actions.len(), t.unsafe_flags.len()), (2, 1, 2));
        let a = random_rollout(&m, &init, 20_000, 0);
        assert_eq!(a, random_rollout(&m, &init, 20_000, 0));
        assert!(a.unsafe_flags.iter().any(|&f| f));
        assert!(!a.unsafe_flags[0]);
    }
}
