//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use gridshield::grid::Region;
use gridshield::learn::*;
use gridshield::models::*;
use gridshield::shield::{mask_actions, DecisionTree, Strategy};
use gridshield::synthesis::*;
use gridshield::transform::transformed_successor;
use gridshield::{mix_seed, GridSpec, Rng, Transform};
use proptest::prelude::{any, prop_assert, prop_assert_eq, Just};
use proptest::strategy::Strategy as _;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng as _, SeedableRng};

const SMALL_RUNTIME: Duration = Duration::from_secs(1);
const BALL_T_RUNTIME: Duration = Duration::from_secs(60);
const SUITE_RUNTIME: Duration = Duration::from_secs(300);
const SINGLE_STEP_CHECKS: usize = 10_000;
const SOUNDNESS_EPISODES: usize = 1000;
const MIN_HORIZON_PERIODS: usize = 100;
const MIN_COMPRESSION: usize = 5;
const MIN_S_CELL_FACTOR: usize = 100;
const SATELLITE_T_MAX_CELLS: usize = 30_000;
const TRAIN_EPISODES: usize = 150;
const EVAL_EPISODES: usize = 100;
const BASELINE_EPISODES: usize = 1000;
const PROPERTY_CASES: u32 = 256;
const SEED: u64 = 0;

const POLE_OFFSET: [f64; 4] = [0.0, -4.5508, 0.0, -141.6953];

struct Synth {
    strategy: Strategy,
    init: SafeSet,
    fixpoint: SafeSet,
    stats: FixpointStats,
    elapsed: Duration,
}

fn synthesize(model: &dyn ControlModel, tr: Transform, grid: GridSpec) -> Synth {
    let t0 = Instant::now();
    let tt = compute_transitions(model, &tr, &grid, &SamplingConfig::default()).unwrap();
    let init = initial_safe(&grid, &tr, &model.safety_region());
    let (fixpoint, stats) = gridshield::synthesis::fixpoint(&tt, &init);
    let masks = most_permissive(&tt, &fixpoint);
    let elapsed = t0.elapsed();
    let names = model.actions().iter().map(|s| s.to_string()).collect();
    let strategy = Strategy::new(grid, masks, names, tr).unwrap();
    Synth { strategy, init, fixpoint, stats, elapsed }
}

fn grid(bounds: &[(f64, f64)], counts: &[usize]) -> GridSpec {
    GridSpec::uniform(bounds, counts).unwrap()
}

struct Report {
    lines: Vec<(usize, bool, String)>,
}

impl Report {
    fn record(&mut self, n: usize, pass: bool, detail: String) {
        println!("criterion {n}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((n, pass, detail));
    }
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

struct Shields {
    ball_t: Synth,
    ball_s: Synth,
    sat_t: Synth,
    sat_s: Synth,
    pole_t: Synth,
    pole_s: Synth,
}

fn ball() -> Model {
    Model::BouncingBall(BouncingBall::default())
}

fn ball_energy() -> Transform {
    Transform::energy_transform(ball().bounds(), 1.0, 9.81, 100.0).unwrap()
}

fn satellite() -> Model {
    Model::Satellite(Satellite::default())
}

fn cart_pole() -> Model {
    Model::CartPole(CartPole::default())
}

fn pole_box() -> [(f64, f64); 2] {
    let p = CartPoleParams::default();
    [(-p.angle_bound, p.angle_bound), (-p.angular_velocity_bound, p.angular_velocity_bound)]
}

fn criterion_1(r: &mut Report) {
    let m = Oscillator::default();
    let s = synthesize(&m, Transform::identity_transform(m.bounds()), grid(&[(-2.0, 2.0), (-2.0, 2.0)], &[4, 4]));
    let pass = s.fixpoint.is_empty() && s.elapsed < SMALL_RUNTIME;
    r.record(
        1,
        pass,
        format!(
            "oscillator identity 4x4: initial {} cells, fixpoint {} cells, {:.3}s (limit {}s)",
            s.init.len(),
            s.fixpoint.len(),
            s.elapsed.as_secs_f64(),
            SMALL_RUNTIME.as_secs()
        ),
    );
}

fn criterion_2(r: &mut Report) {
    let m = Oscillator::default();
    let tr = Transform::polar_transform(m.bounds(), 2.0).unwrap();
    let s = synthesize(&m, tr, grid(&[(-PI, PI), (0.0, 2.0)], &[4, 4]));
    let unsafe_cells: Vec<usize> = (0..16).filter(|&c| !s.fixpoint.contains(c)).collect();
    let bottom_row: Vec<usize> = (0..4).map(|i| i * 4).collect();
    let pass = s.fixpoint == s.init && unsafe_cells == bottom_row && s.elapsed < SMALL_RUNTIME;
    r.record(
        2,
        pass,
        format!(
            "oscillator polar 4x4: fixpoint equals initial marking: {}, unsafe cells {:?} (bottom row {:?}), {} sweeps, {:.3}s",
            yes(s.fixpoint == s.init),
            unsafe_cells,
            bottom_row,
            s.stats.sweeps,
            s.elapsed.as_secs_f64()
        ),
    );
}

fn criterion_3(r: &mut Report, sh: &Shields) {
    let m = ball();
    let t_small = synthesize(&m, ball_energy(), grid(&[(0.0, 100.0), (-13.0, 13.0)], &[26, 25]));
    let t_cells = t_small.strategy.grid().cell_count();
    let s = &sh.ball_s;
    let s_cells = s.strategy.grid().cell_count();
    let t_ok = !t_small.strategy.is_empty() && t_small.elapsed < BALL_T_RUNTIME;
    let s_ok = !s.strategy.is_empty() && s_cells >= MIN_S_CELL_FACTOR * t_cells && s.elapsed > t_small.elapsed;
    // context for the failure analysis: a finer T grid and milder damping
    let mild = BouncingBall::new(BouncingBallParams { damping_base: 0.88, damping_span: 0.06, ..Default::default() });
    let t_mild = synthesize(&mild, ball_energy(), grid(&[(0.0, 100.0), (-13.0, 13.0)], &[26, 25]));
    r.record(
        3,
        t_ok && s_ok,
        format!(
            "ball T 26x25: controllable {}/{} in {:.3}s (limit {}s); ball S {}x{}: controllable {}/{} in {:.3}s, >= {}x T cells: {}, slower than T: {} \
             [info: T 52x50 controllable {}/{}; T 26x25 with damping 0.88+0.06u controllable {}]",
            t_small.strategy.controllable_count(),
            t_cells,
            t_small.elapsed.as_secs_f64(),
            BALL_T_RUNTIME.as_secs(),
            s.strategy.grid().counts()[0],
            s.strategy.grid().counts()[1],
            s.strategy.controllable_count(),
            s_cells,
            s.elapsed.as_secs_f64(),
            MIN_S_CELL_FACTOR,
            yes(s_cells >= MIN_S_CELL_FACTOR * t_cells),
            yes(s.elapsed > t_small.elapsed),
            sh.ball_t.strategy.controllable_count(),
            sh.ball_t.strategy.grid().cell_count(),
            t_mild.strategy.controllable_count(),
        ),
    );
}

fn criterion_4(r: &mut Report, sh: &Shields) {
    let t = &sh.sat_t;
    let g = t.strategy.grid();
    let (nt, nr) = (g.counts()[0], g.counts()[1]);
    let out = Satellite::default().actions().iter().position(|&a| a == "out").unwrap();
    // the literal top row touches r = 2; its cells are never marked safe
    // because their preimage boxes reach past the disc, so the check runs on
    // the outermost controllable cell of every angular column instead
    let top_row = (0..nt).filter(|&i| t.strategy.masks()[i * nr + nr - 1] != 0).count();
    let rim: Vec<u8> = (0..nt)
        .filter_map(|i| (0..nr).rev().map(|j| t.strategy.masks()[i * nr + j]).find(|&m| m != 0))
        .collect();
    let rim_ok = !rim.is_empty() && rim.iter().all(|m| m & (1 << out) == 0);
    let s = &sh.sat_s;
    let pass = g.cell_count() <= SATELLITE_T_MAX_CELLS
        && !t.strategy.is_empty()
        && rim_ok
        && !s.strategy.is_empty()
        && s.elapsed > t.elapsed;
    r.record(
        4,
        pass,
        format!(
            "satellite T {nt}x{nr} ({} cells, limit {}): controllable {} in {:.3}s; outermost controllable cell of {} columns forbids out: {} ({} controllable cells in the top row); \
             S 420x420: controllable {} in {:.3}s, slower than T: {}",
            g.cell_count(),
            SATELLITE_T_MAX_CELLS,
            t.strategy.controllable_count(),
            t.elapsed.as_secs_f64(),
            rim.len(),
            yes(rim_ok),
            top_row,
            s.strategy.controllable_count(),
            s.elapsed.as_secs_f64(),
            yes(s.elapsed > t.elapsed)
        ),
    );
}

fn criterion_5(r: &mut Report, sh: &Shields) {
    let pole = cart_pole().synthesis_model();
    let g = grid(&pole_box(), &[20, 20]);
    let tr = Transform::identity_transform(pole.bounds());
    let tt = compute_transitions(&pole, &tr, &g, &SamplingConfig::default()).unwrap();
    let init = initial_safe(&g, &tr, &pole.safety_region());
    let k3 = bounded_fixpoint(&tt, &init, 3);
    let full = gridshield::synthesis::fixpoint(&tt, &init).0;
    let fit = extract_boundaries(&g, &k3).and_then(|b| {
        let pts: Vec<(f64, f64)> = b.iter().map(|e| (e.x, e.mid)).collect();
        fit_polynomial(&pts, &[1, 3])
    });
    let (c1, c3) = match &fit {
        Ok(c) => (c[0], c[1]),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let poly = &sh.pole_t;
    let pass = !k3.is_empty() && c1 < 0.0 && c3 < 0.0 && !poly.strategy.is_empty();
    r.record(
        5,
        pass,
        format!(
            "cart-pole identity 20x20: k=3 marking {} cells (full fixpoint {}); fit c1 = {c1:.4} (< 0: {}), c3 = {c3:.4} (< 0: {}); \
             poly-offset 20x20 with the reference coefficients: controllable {}",
            k3.len(),
            full.len(),
            yes(c1 < 0.0),
            yes(c3 < 0.0),
            poly.strategy.controllable_count()
        ),
    );
}

// One random step from a random point of a controllable cell under a random
// allowed action; true if the successor is safe and controllable.
fn single_step_ok(st: &Strategy, model: &dyn ControlModel, cells: &[usize], rng: &mut Rng) -> Option<bool> {
    let c = cells[rng.gen_range(0..cells.len())];
    let b = st.grid().linear_cell_box(c);
    let t: Vec<f64> = b.lo.iter().zip(&b.hi).map(|(&l, &h)| l + (h - l) * rng.gen::<f64>()).collect();
    let pre = st.transform().preimage(&t);
    if pre.is_empty() {
        return None;
    }
    let s = &pre[rng.gen_range(0..pre.len())];
    let mask = match st.allowed_in_s(s) {
        Ok(m) if m != 0 => m,
        _ => return None,
    };
    let acts: Vec<usize> = mask_actions(mask).collect();
    let a = acts[rng.gen_range(0..acts.len())];
    let u: Vec<f64> = (0..model.disturbance_arity()).map(|_| rng.gen()).collect();
    let next = model.step(s, a, &u);
    Some(model.is_safe(&next) && matches!(st.allowed_in_s(&next), Ok(m) if m != 0))
}

fn criterion_6(r: &mut Report, sh: &Shields) {
    let cases: [(&str, Model, &Synth); 3] =
        [("ball", ball(), &sh.ball_t), ("satellite", satellite(), &sh.sat_t), ("cart-pole", cart_pole(), &sh.pole_t)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, (name, model, s)) in cases.iter().enumerate() {
        let st = &s.strategy;
        let synth_model = model.synthesis_model();
        let cells: Vec<usize> = (0..st.grid().cell_count()).filter(|&c| st.masks()[c] != 0).collect();
        let mut rng = Rng::seed_from_u64(mix_seed(SEED, &[6, k as u64]));
        let (mut done, mut failed, mut draws) = (0, 0, 0);
        while done < SINGLE_STEP_CHECKS && draws < 100 * SINGLE_STEP_CHECKS {
            draws += 1;
            if let Some(ok) = single_step_ok(st, &synth_model, &cells, &mut rng) {
                done += 1;
                failed += usize::from(!ok);
            }
        }
        let init = InitialState::default_for(model);
        let reward = default_reward(model);
        let horizon = horizon_steps(model, default_horizon(model)).max(MIN_HORIZON_PERIODS);
        let task = Task { model, reward: reward.as_ref(), shield: Some(st), initial: &init, horizon };
        let ev = evaluate(&task, Policy::Random, SOUNDNESS_EPISODES, mix_seed(SEED, &[6, 100 + k as u64])).unwrap();
        let ok = done == SINGLE_STEP_CHECKS
            && failed == 0
            && ev.total_violations() == 0
            && ev.uncontrollable_starts() == 0;
        pass &= ok;
        parts.push(format!(
            "{name}: {failed}/{done} single-step failures, {} episodes x {horizon} periods: {} violations, {} uncontrollable starts",
            SOUNDNESS_EPISODES,
            ev.total_violations(),
            ev.uncontrollable_starts()
        ));
    }
    r.record(6, pass, parts.join("; "));
}

fn criterion_7(r: &mut Report, sh: &Shields) {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, s) in [("ball", &sh.ball_t), ("satellite", &sh.sat_t), ("cart-pole", &sh.pole_t)] {
        let tree = DecisionTree::from_strategy(&s.strategy);
        let exact = tree.verify(&s.strategy).is_ok();
        let cells = s.strategy.grid().cell_count();
        let small = tree.node_count() * MIN_COMPRESSION <= cells;
        pass &= exact && small;
        parts.push(format!(
            "{name}: {cells} cells -> {} nodes ({:.1}x), equivalent: {}",
            tree.node_count(),
            cells as f64 / tree.node_count() as f64,
            yes(exact)
        ));
    }
    r.record(7, pass, format!("{} (required >= {MIN_COMPRESSION}x)", parts.join("; ")));
}

#[derive(Debug, PartialEq)]
struct Cell {
    train_violations: u64,
    eval_violations: u64,
    eval_return: f64,
    uncontrollable_starts: usize,
}

fn learning_matrix(model: &Model, s_shield: &Strategy, t_shield: &Strategy, seed: u64) -> Vec<(String, Cell)> {
    let init = InitialState::default_for(model);
    let reward = default_reward(model);
    let horizon = horizon_steps(model, default_horizon(model));
    let spaces = [Space::S, Space::T(t_shield.transform().clone())];
    let shields: [(&str, Option<&Strategy>); 3] = [("none", None), ("S-shield", Some(s_shield)), ("T-shield", Some(t_shield))];
    let mut out = Vec::new();
    for (i, space) in spaces.iter().enumerate() {
        for (j, (sname, shield)) in shields.iter().enumerate() {
            let task = Task { model, reward: reward.as_ref(), shield: *shield, initial: &init, horizon };
            let g = default_observation_grid(model, space).unwrap();
            let names = model.actions().iter().map(|s| s.to_string()).collect();
            let mut q = QTable::new(g, names, space.clone(), LearnConfig::default()).unwrap();
            let cell_seed = mix_seed(seed, &[i as u64, j as u64]);
            let train_res = train(&task, &mut q, TRAIN_EPISODES, cell_seed).unwrap();
            let ev = evaluate(&task, Policy::Greedy(&q), EVAL_EPISODES, mix_seed(cell_seed, &[1])).unwrap();
            out.push((
                format!("learn in {} / {sname}", space.name()),
                Cell {
                    train_violations: train_res.iter().map(|e| e.violations as u64).sum(),
                    eval_violations: ev.total_violations(),
                    eval_return: ev.mean_return(),
                    uncontrollable_starts: ev.uncontrollable_starts(),
                },
            ));
        }
    }
    out
}

fn criterion_8(r: &mut Report, sh: &Shields) {
    let mut pass = true;
    let mut parts = Vec::new();
    let cases: [(&str, Model, &Synth, &Synth); 3] = [
        ("ball", ball(), &sh.ball_s, &sh.ball_t),
        ("satellite", satellite(), &sh.sat_s, &sh.sat_t),
        ("cart-pole", cart_pole(), &sh.pole_s, &sh.pole_t),
    ];
    for (name, model, s, t) in cases {
        let a = learning_matrix(&model, &s.strategy, &t.strategy, SEED);
        let b = learning_matrix(&model, &s.strategy, &t.strategy, SEED);
        let deterministic = a == b;
        let shielded_safe = a
            .iter()
            .filter(|(k, _)| !k.ends_with("none"))
            .all(|(_, c)| c.train_violations == 0 && c.eval_violations == 0 && c.uncontrollable_starts == 0);
        pass &= deterministic && shielded_safe;
        println!("  {name} matrix (deterministic: {}):", yes(deterministic));
        for (k, c) in &a {
            println!(
                "    {k:<22} return {:>10.3}  train violations {:>4}  eval violations {:>4}",
                c.eval_return, c.train_violations, c.eval_violations
            );
        }
        parts.push(format!("{name}: deterministic {}, shielded cells violation-free {}", yes(deterministic), yes(shielded_safe)));
    }
    let m = ball();
    let init = InitialState::default_for(&m);
    let reward = default_reward(&m);
    let task = Task { model: &m, reward: reward.as_ref(), shield: None, initial: &init, horizon: horizon_steps(&m, 120.0) };
    let base = evaluate(&task, Policy::Random, BASELINE_EPISODES, SEED).unwrap();
    pass &= base.total_violations() > 0;
    parts.push(format!(
        "random unshielded ball baseline ({BASELINE_EPISODES} episodes of 120 s, seed {SEED}): {} violations",
        base.total_violations()
    ));
    r.record(8, pass, parts.join("; "));
}

fn runner() -> TestRunner {
    TestRunner::new_with_rng(
        Config { cases: PROPERTY_CASES, failure_persistence: None, ..Config::default() },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn random_table(cells: usize, actions: usize, lists: Vec<Vec<(Vec<u32>, bool)>>) -> TransitionTable {
    let flat = lists.into_iter().flatten().map(|(v, e)| (v.into_iter().map(|x| x % cells as u32).collect(), e));
    TransitionTable::from_lists(cells, actions, flat.collect())
}

fn table_strategy() -> impl proptest::strategy::Strategy<Value = (TransitionTable, Vec<bool>, Vec<bool>, Vec<usize>)> {
    (2usize..24, 1usize..4).prop_flat_map(|(n, k)| {
        let lists = proptest::collection::vec(
            proptest::collection::vec((proptest::collection::vec(0u32..64, 0..4), proptest::bool::weighted(0.1)), k),
            n,
        );
        (
            lists,
            proptest::collection::vec(any::<bool>(), n),
            proptest::collection::vec(any::<bool>(), n),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
            .prop_map(move |(l, a, b, order)| (random_table(n, k, l), a, b, order))
    })
}

fn criterion_9(r: &mut Report) {
    let t0 = Instant::now();
    let mut results: Vec<(&str, Result<(), String>)> = Vec::new();
    let g = grid(&[(-2.0, 2.0), (-1.0, 3.0)], &[7, 5]);

    let partition = runner().run(&(-2.0..2.0f64, -1.0..3.0f64), |(x, y)| {
        let c = g.linear_cell_of(&[x, y]).unwrap();
        prop_assert!(g.linear_cell_box(c).contains(&[x, y]));
        let others = (0..g.cell_count()).filter(|&d| g.linear_cell_box(d).contains(&[x, y])).count();
        prop_assert_eq!(others, 1);
        Ok(())
    });
    results.push(("grid partition", partition.map_err(|e| e.to_string())));

    let duality = runner().run(&(-2.0..2.0f64, -1.0..3.0f64, 0.1..2.5f64), |(cx, cy, rad)| {
        let phi = Region::disc(vec![cx, cy], rad);
        let inner = g.inner_cells(&phi);
        let outer_neg = g.outer_cells(&Region::complement(phi.clone()));
        prop_assert_eq!(inner.len() + outer_neg.len(), g.cell_count());
        prop_assert!(inner.iter().all(|c| !outer_neg.contains(c)));
        prop_assert!(inner.iter().all(|c| g.outer_cells(&phi).contains(c)));
        Ok(())
    });
    results.push(("inner/outer duality", duality.map_err(|e| e.to_string())));

    let fixpoints = runner().run(&table_strategy(), |(tt, a, b, order)| {
        let small = SafeSet::from_bits(a.iter().zip(&b).map(|(x, y)| *x && *y).collect());
        let big = SafeSet::from_bits(a.clone());
        let (fs, _) = gridshield::synthesis::fixpoint(&tt, &small);
        let (fb, _) = gridshield::synthesis::fixpoint(&tt, &big);
        prop_assert!(fs.is_subset(&fb));
        prop_assert_eq!(fixpoint_ordered(&tt, &big, &order), fb);
        Ok(())
    });
    results.push(("fixpoint monotonicity and sweep order", fixpoints.map_err(|e| e.to_string())));

    let polar = Transform::polar_transform(Oscillator::default().bounds(), 2.0).unwrap();
    let energy = ball_energy();
    let poly = Transform::poly_offset_transform(cart_pole().synthesis_model().bounds(), POLE_OFFSET.to_vec()).unwrap();
    let trips = runner().run(&(0.0..1.0f64, 0.0..1.0f64, 0usize..3), |(u, v, k)| {
        let tr = [&polar, &energy, &poly][k];
        let d = tr.domain();
        let s = [d.lo[0] + u * (d.hi[0] - d.lo[0]), d.lo[1] + v * (d.hi[1] - d.lo[1])];
        if let Ok(t) = tr.forward(&s) {
            let pre = tr.preimage(&t);
            prop_assert!(pre.iter().any(|p| (p[0] - s[0]).abs() < 1e-7 && (p[1] - s[1]).abs() < 1e-7), "{:?} -> {:?} -> {:?}", s, t, pre);
        }
        Ok(())
    });
    results.push(("transform round trips", trips.map_err(|e| e.to_string())));

    let bm = BouncingBall::default();
    let eq4 = runner().run(&(-13.0..13.0f64, 0.0..8.0f64, 0.0..1.0f64, 0usize..2), |(v, p, u, a)| {
        let s = [v, p];
        let t = energy.forward(&s).unwrap();
        let direct = energy.forward(&bm.step(&s, a, &[u]));
        let via = transformed_successor(&bm, &energy, &t, a, &[vec![u]]);
        if let Ok(d) = direct {
            prop_assert!(via.iter().any(|x| (x[0] - d[0]).abs() < 1e-6 && (x[1] - d[1]).abs() < 1e-6));
        }
        Ok(())
    });
    results.push(("transformed successor consistency", eq4.map_err(|e| e.to_string())));

    let conservation = runner().run(&(0.0..3.0f64, 5.0..8.0f64, 0.0..1.0f64), |(v, p, u)| {
        let next = bm.step(&[v, p], NOHIT, &[u]);
        prop_assert!((bm.mechanical_energy(&next) - bm.mechanical_energy(&[v, p])).abs() < 1e-9);
        Ok(())
    });
    results.push(("free-fall energy conservation", conservation.map_err(|e| e.to_string())));

    let sat_g = grid(&[(-PI, PI), (0.0, 2.0)], &[6, 5]);
    let sat_tr = Transform::polar_transform(Satellite::default().bounds(), 2.0).unwrap();
    let io = runner().run(&proptest::collection::vec(0u8..8, 30), |masks| {
        let names = vec!["ahead".to_string(), "out".into(), "in".into()];
        let st = Strategy::new(sat_g.clone(), masks, names, sat_tr.clone()).unwrap();
        let bytes = st.to_bytes();
        let back = Strategy::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
        prop_assert_eq!(&back, &st);
        let tree = DecisionTree::from_strategy(&st);
        let tb = tree.to_bytes();
        prop_assert_eq!(DecisionTree::from_bytes(&tb).unwrap().to_bytes(), tb);
        Ok(())
    });
    results.push(("save/load bit-exactness", io.map_err(|e| e.to_string())));

    let elapsed = t0.elapsed();
    let failed: Vec<String> = results.iter().filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}"))).collect();
    let pass = failed.is_empty() && elapsed < SUITE_RUNTIME;
    r.record(
        9,
        pass,
        format!(
            "{} property suites x {PROPERTY_CASES} cases, {} failed{}, {:.2}s (limit {}s)",
            results.len(),
            failed.len(),
            if failed.is_empty() { String::new() } else { format!(" ({})", failed.join("; ")) },
            elapsed.as_secs_f64(),
            SUITE_RUNTIME.as_secs()
        ),
    );
}

#[test]
fn acceptance_criteria() {
    let ballm = ball();
    let sat = satellite();
    let pole = cart_pole().synthesis_model();
    let shields = Shields {
        ball_t: synthesize(&ballm, ball_energy(), grid(&[(0.0, 100.0), (-13.0, 13.0)], &[52, 50])),
        ball_s: synthesize(&ballm, Transform::identity_transform(ballm.bounds()), grid(&[(-13.0, 13.0), (0.0, 8.0)], &[260, 250])),
        sat_t: synthesize(&sat, Transform::polar_transform(sat.bounds(), 2.0).unwrap(), grid(&[(-PI, PI), (0.0, 2.0)], &[100, 300])),
        sat_s: synthesize(&sat, Transform::identity_transform(sat.bounds()), grid(&[(-2.0, 2.0), (-2.0, 2.0)], &[420, 420])),
        pole_t: synthesize(
            &pole,
            Transform::poly_offset_transform(pole.bounds(), POLE_OFFSET.to_vec()).unwrap(),
            grid(&pole_box(), &[20, 20]),
        ),
        pole_s: synthesize(&pole, Transform::identity_transform(pole.bounds()), grid(&pole_box(), &[30, 30])),
    };
    let mut r = Report { lines: Vec::new() };
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r, &shields);
    criterion_4(&mut r, &shields);
    criterion_5(&mut r, &shields);
    criterion_6(&mut r, &shields);
    criterion_7(&mut r, &shields);
    criterion_8(&mut r, &shields);
    criterion_9(&mut r);
    let failed: Vec<usize> = r.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    println!("acceptance: {}/{} criteria pass", r.lines.len() - failed.len(), r.lines.len());
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
