use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gridshield::learn::{
    default_horizon, default_observation_grid, default_reward, evaluate, horizon_steps, observation_grid,
    random_rollout, train, EpisodeResult, InitialState, Policy, QTable, Space, Task, QTABLE_MAGIC,
};
use gridshield::models::{ControlModel, Model};
use gridshield::shield::{DecisionTree, Strategy, SHIELD_MAGIC, TREE_MAGIC};
use gridshield::synthesis::{
    bounded_fixpoint, compute_transitions, extract_boundaries, fit_polynomial, fixpoint, initial_safe, most_permissive,
    FixpointStats, SafeSet,
};
use gridshield::{mix_seed, GridSpec, ShieldError, SynthesisError, Transform};

use crate::config::{show_box, PolicyName, RunConfig, SpaceName, SynthesisMode};
use crate::{heatmap, CliError};

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn create_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => {
            fs::create_dir_all(p).map_err(|e| runtime(format!("{}: {e}", p.display())))
        }
        _ => Ok(()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    create_parent(path)?;
    fs::write(path, bytes).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    create_parent(path)?;
    csv::Writer::from_path(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn finish(w: csv::Writer<fs::File>, path: &Path) -> Result<(), CliError> {
    w.into_inner()
        .map_err(|e| runtime(format!("{}: {e}", path.display())))?
        .flush()
        .map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn stat(key: &str, value: impl std::fmt::Display) {
    println!("{key}={value}");
}

/// Loads a shield file named by a config field or on the command line.
fn load_shield(field: &str, path: &Path) -> Result<Strategy, CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!("{field}: file not found: {}", path.display())));
    }
    Strategy::load(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn action_names(model: &dyn ControlModel) -> Vec<String> {
    model.actions().iter().map(|s| s.to_string()).collect()
}

struct Abstraction {
    model: Model,
    transform: Transform,
    grid: GridSpec,
    init: SafeSet,
    table: gridshield::synthesis::TransitionTable,
}

fn abstraction(cfg: &RunConfig) -> Result<Abstraction, CliError> {
    let model = cfg.model()?.synthesis_model();
    let transform = cfg.transform(&model)?;
    let grid = cfg.grid(&transform)?;
    let table = compute_transitions(&model, &transform, &grid, &cfg.sampling()).map_err(|e| match e {
        SynthesisError::ConfigMismatch => CliError::Config(format!(
            "grid.axes: grid box {} does not match transform codomain {}",
            show_box(&grid.bounds()),
            show_box(transform.codomain())
        )),
        e => runtime(e),
    })?;
    let init = initial_safe(&grid, &transform, &model.safety_region());
    Ok(Abstraction { model, transform, grid, init, table })
}

pub fn synth(cfg: &RunConfig) -> Result<(), CliError> {
    let t0 = Instant::now();
    let a = abstraction(cfg)?;
    let (safe, stats) = match cfg.synthesis.mode {
        SynthesisMode::Fixpoint => fixpoint(&a.table, &a.init),
        SynthesisMode::Bounded => {
            let safe = bounded_fixpoint(&a.table, &a.init, cfg.synthesis.k);
            let removed = a.init.len() - safe.len();
            (safe, FixpointStats { sweeps: cfg.synthesis.k, removed })
        }
    };
    let masks = most_permissive(&a.table, &safe);
    let elapsed = t0.elapsed();
    let st = Strategy::new(a.grid, masks, action_names(&a.model), a.transform).map_err(runtime)?;
    let path = cfg.output(&cfg.outputs.shield);
    write_file(&path, &st.to_bytes())?;

    stat("model", a.model.name());
    stat("transform", st.transform().kind().name());
    stat("cells", st.grid().cell_count());
    stat("initial_safe", a.init.len());
    stat("controllable", st.controllable_count());
    stat("sweeps", stats.sweeps);
    stat("removed", stats.removed);
    stat("synthesis_seconds", format!("{:.3}", elapsed.as_secs_f64()));
    stat("shield", path.display());
    if st.is_empty() {
        return Err(CliError::Empty("controllable set empty".into()));
    }
    Ok(())
}

pub fn fit(cfg: &RunConfig) -> Result<(), CliError> {
    let a = abstraction(cfg)?;
    let k = cfg.synthesis.k;
    let marking = bounded_fixpoint(&a.table, &a.init, k);
    let boundaries = extract_boundaries(&a.grid, &marking).map_err(|e| match e {
        SynthesisError::NotTwoDimensional => CliError::Config(format!("grid.axes: {e}")),
        SynthesisError::Degenerate => CliError::Empty(format!("degenerate marking after {k} steps: {e}")),
        e => runtime(e),
    })?;
    let points: Vec<(f64, f64)> = boundaries.iter().map(|b| (b.x, b.mid)).collect();
    let powers = &cfg.synthesis.fit_powers;
    let coefficients = fit_polynomial(&points, powers).map_err(|e| match e {
        SynthesisError::SingularFit => CliError::Empty(format!("degenerate fit: {e}")),
        e => runtime(e),
    })?;

    let path = cfg.output(&cfg.outputs.boundary);
    let mut w = csv_writer(&path)?;
    w.write_record(["x", "upper", "lower", "mid"]).map_err(runtime)?;
    for b in &boundaries {
        w.write_record([b.x, b.upper, b.lower, b.mid].map(|v| v.to_string())).map_err(runtime)?;
    }
    finish(w, &path)?;

    stat("k", k);
    stat("marked", marking.len());
    stat("columns", boundaries.len());
    for (p, c) in powers.iter().zip(&coefficients) {
        stat(&format!("c{p}"), c);
    }
    stat("boundary", path.display());
    Ok(())
}

pub fn tree(shield: &Path, out: &Path) -> Result<(), CliError> {
    let st = load_shield("shield", shield)?;
    let tree = DecisionTree::from_strategy(&st);
    tree.verify(&st).map_err(|e| runtime(format!("tree check failed, nothing written: {e}")))?;
    write_file(out, &tree.to_bytes())?;
    let (cells, nodes) = (st.grid().cell_count(), tree.node_count());
    stat("cells", cells);
    stat("nodes", nodes);
    stat("leaves", tree.leaf_count());
    stat("depth", tree.depth());
    stat("compression", format!("{:.2}", cells as f64 / nodes as f64));
    stat("tree", out.display());
    Ok(())
}

/// Per-episode CSV rows: learning space, shield label, phase and results.
struct EpisodeLog {
    w: csv::Writer<fs::File>,
    path: PathBuf,
}

impl EpisodeLog {
    fn create(path: PathBuf) -> Result<Self, CliError> {
        let mut w = csv_writer(&path)?;
        w.write_record([
            "space",
            "shield",
            "phase",
            "episode",
            "seed",
            "return",
            "violations",
            "steps",
            "uncontrollable_start",
        ])
        .map_err(runtime)?;
        Ok(Self { w, path })
    }

    fn rows(&mut self, space: &str, shield: &str, phase: &str, eps: &[EpisodeResult]) -> Result<(), CliError> {
        for e in eps {
            self.w
                .write_record([
                    space.to_string(),
                    shield.to_string(),
                    phase.to_string(),
                    e.episode.to_string(),
                    e.seed.to_string(),
                    e.ret.to_string(),
                    e.violations.to_string(),
                    e.steps.to_string(),
                    e.uncontrollable_start.to_string(),
                ])
                .map_err(runtime)?;
        }
        Ok(())
    }

    fn close(self) -> Result<(), CliError> {
        finish(self.w, &self.path)
    }
}

/// Learning inputs shared by `learn` and `eval`.
struct Setup {
    model: Model,
    initial: InitialState,
    horizon: usize,
}

fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let model = cfg.model()?;
    let l = &cfg.learning;
    let initial = l.initial.clone().unwrap_or_else(|| InitialState::default_for(&model));
    let seconds = l.horizon_seconds.unwrap_or_else(|| default_horizon(&model));
    if !(seconds >= 0.0) {
        return Err(CliError::Config("learning.horizon_seconds: must be nonnegative".into()));
    }
    Ok(Setup { horizon: horizon_steps(&model, seconds), model, initial })
}

fn check_shield(field: &str, st: &Strategy, model: &Model) -> Result<(), CliError> {
    if st.actions() != action_names(model).as_slice() {
        return Err(CliError::Config(format!(
            "{field}: shield actions {:?} do not match model `{}` actions {:?}",
            st.actions(),
            model.name(),
            model.actions()
        )));
    }
    if st.transform().dim() != model.shield_dim() {
        return Err(CliError::Config(format!(
            "{field}: shield is {}-dimensional, model `{}` needs {}",
            st.transform().dim(),
            model.name(),
            model.shield_dim()
        )));
    }
    Ok(())
}

fn shield_input(cfg: &RunConfig, field: &str, name: &Option<PathBuf>, model: &Model) -> Result<Option<Strategy>, CliError> {
    match name {
        None => Ok(None),
        Some(n) => {
            let path = cfg.input(field, n)?;
            let st = load_shield(field, &path)?;
            check_shield(field, &st, model)?;
            Ok(Some(st))
        }
    }
}

fn space(cfg: &RunConfig, model: &Model, which: SpaceName) -> Result<Space, CliError> {
    Ok(match which {
        SpaceName::S => Space::S,
        SpaceName::T => Space::T(cfg.transform(model)?),
    })
}

fn q_table(cfg: &RunConfig, model: &Model, space: Space) -> Result<QTable, CliError> {
    let grid = match &cfg.learning.observation_counts {
        None => default_observation_grid(model, &space),
        Some(counts) => {
            let extra = match model {
                Model::Satellite(m) => {
                    let r = m.params.max_radius;
                    vec![(-r, r), (-r, r)]
                }
                _ => vec![],
            };
            observation_grid(model, &space, &extra, counts)
        }
    }
    .map_err(|e| CliError::Config(format!("learning.observation_counts: {e}")))?;
    QTable::new(grid, action_names(model), space, cfg.learning.hyperparameters.clone())
        .map_err(|e| CliError::Config(format!("learning: {e}")))
}

struct CellResult {
    space: &'static str,
    shield: &'static str,
    train: Vec<EpisodeResult>,
    eval: gridshield::learn::Evaluation,
    table: QTable,
}

fn run_cell(
    cfg: &RunConfig,
    s: &Setup,
    space: Space,
    shield: Option<&Strategy>,
    shield_name: &'static str,
    seed: u64,
) -> Result<CellResult, CliError> {
    let reward = default_reward(&s.model);
    let task = Task { model: &s.model, reward: reward.as_ref(), shield, initial: &s.initial, horizon: s.horizon };
    let space_name = space.name();
    let mut table = q_table(cfg, &s.model, space)?;
    let l = &cfg.learning;
    let train_res = train(&task, &mut table, l.episodes, mix_seed(seed, &[0])).map_err(runtime)?;
    let eval = evaluate(&task, Policy::Greedy(&table), l.eval_episodes, mix_seed(seed, &[1])).map_err(runtime)?;
    Ok(CellResult { space: space_name, shield: shield_name, train: train_res, eval, table })
}

fn summary(c: &CellResult) {
    println!(
        "space={} shield={} train_violations={} eval_violations={} eval_mean_return={} uncontrollable_starts={}",
        c.space,
        c.shield,
        c.train.iter().map(|e| e.violations as u64).sum::<u64>(),
        c.eval.total_violations(),
        c.eval.mean_return(),
        c.eval.uncontrollable_starts()
    );
}

pub fn learn(cfg: &RunConfig) -> Result<(), CliError> {
    let s = setup(cfg)?;
    let l = &cfg.learning;
    if l.matrix {
        let need = |field: &str, v: &Option<PathBuf>| {
            v.clone().ok_or_else(|| CliError::Config(format!("learning.{field}: required when learning.matrix = true")))
        };
        let s_shield = shield_input(cfg, "learning.s_shield", &Some(need("s_shield", &l.s_shield)?), &s.model)?;
        let t_shield = shield_input(cfg, "learning.t_shield", &Some(need("t_shield", &l.t_shield)?), &s.model)?;
        let spaces = [SpaceName::S, SpaceName::T];
        let shields: [(&'static str, Option<&Strategy>); 3] =
            [("none", None), ("S-shield", s_shield.as_ref()), ("T-shield", t_shield.as_ref())];
        let mut log = EpisodeLog::create(cfg.output(&cfg.outputs.episodes))?;
        let mpath = cfg.output(&cfg.outputs.matrix);
        let mut m = csv_writer(&mpath)?;
        m.write_record(["space", "shield", "train_violations", "eval_violations", "eval_mean_return", "uncontrollable_starts"])
            .map_err(runtime)?;
        for (i, which) in spaces.iter().enumerate() {
            for (j, (name, shield)) in shields.iter().enumerate() {
                let c = run_cell(cfg, &s, space(cfg, &s.model, *which)?, *shield, name, mix_seed(cfg.seed, &[i as u64, j as u64]))?;
                log.rows(c.space, c.shield, "train", &c.train)?;
                log.rows(c.space, c.shield, "eval", &c.eval.episodes)?;
                m.write_record([
                    c.space.to_string(),
                    c.shield.to_string(),
                    c.train.iter().map(|e| e.violations as u64).sum::<u64>().to_string(),
                    c.eval.total_violations().to_string(),
                    c.eval.mean_return().to_string(),
                    c.eval.uncontrollable_starts().to_string(),
                ])
                .map_err(runtime)?;
                summary(&c);
            }
        }
        log.close()?;
        finish(m, &mpath)?;
        stat("episodes", cfg.output(&cfg.outputs.episodes).display());
        stat("matrix", mpath.display());
        return Ok(());
    }

    let shield = shield_input(cfg, "learning.shield", &l.shield, &s.model)?;
    let shield_name = if shield.is_some() { "shield" } else { "none" };
    let c = run_cell(cfg, &s, space(cfg, &s.model, l.space)?, shield.as_ref(), shield_name, cfg.seed)?;
    let mut log = EpisodeLog::create(cfg.output(&cfg.outputs.episodes))?;
    log.rows(c.space, c.shield, "train", &c.train)?;
    log.rows(c.space, c.shield, "eval", &c.eval.episodes)?;
    log.close()?;
    let qpath = cfg.output(&cfg.outputs.qtable);
    write_file(&qpath, &c.table.to_bytes())?;
    summary(&c);
    stat("episodes", cfg.output(&cfg.outputs.episodes).display());
    stat("qtable", qpath.display());
    Ok(())
}

pub fn eval(cfg: &RunConfig) -> Result<(), CliError> {
    let s = setup(cfg)?;
    let l = &cfg.learning;
    let table = match l.policy {
        PolicyName::Greedy => {
            let path = cfg.input("outputs.qtable", &cfg.outputs.qtable)?;
            let q = QTable::load(&path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            if q.actions() != action_names(&s.model).as_slice() {
                return Err(CliError::Config(format!(
                    "outputs.qtable: Q-table actions {:?} do not match model `{}`",
                    q.actions(),
                    s.model.name()
                )));
            }
            Some(q)
        }
        PolicyName::Random => None,
    };
    let shield = shield_input(cfg, "learning.shield", &l.shield, &s.model)?;
    let reward = default_reward(&s.model);
    let task = Task { model: &s.model, reward: reward.as_ref(), shield: shield.as_ref(), initial: &s.initial, horizon: s.horizon };
    let (policy, space_name) = match &table {
        Some(q) => (Policy::Greedy(q), q.space().name()),
        None => (Policy::Random, "S"),
    };
    let ev = evaluate(&task, policy, l.eval_episodes, mix_seed(cfg.seed, &[1])).map_err(runtime)?;
    let path = cfg.output(&cfg.outputs.evaluation);
    let mut log = EpisodeLog::create(path.clone())?;
    let shield_name = if shield.is_some() { "shield" } else { "none" };
    log.rows(space_name, shield_name, "eval", &ev.episodes)?;
    log.close()?;
    stat("episodes", ev.episodes.len());
    stat("violations", ev.total_violations());
    stat("mean_return", ev.mean_return());
    stat("uncontrollable_starts", ev.uncontrollable_starts());
    stat("evaluation", path.display());
    Ok(())
}

pub fn rollout(cfg: &RunConfig) -> Result<(), CliError> {
    let s = setup(cfg)?;
    let traj = random_rollout(&s.model, &s.initial, cfg.rollout.steps, cfg.seed);
    let path = cfg.output(&cfg.outputs.rollout);
    let mut w = csv_writer(&path)?;
    let mut header = vec!["step".to_string(), "action".to_string(), "unsafe".to_string()];
    header.extend((0..s.model.dim()).map(|i| format!("s{i}")));
    w.write_record(&header).map_err(runtime)?;
    for (i, st) in traj.states.iter().enumerate() {
        let action = traj.actions.get(i).map(|&a| s.model.actions()[a].to_string()).unwrap_or_default();
        let mut row = vec![i.to_string(), action, traj.unsafe_flags[i].to_string()];
        row.extend(st.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(runtime)?;
    }
    finish(w, &path)?;
    stat("steps", traj.actions.len());
    stat("unsafe_states", traj.unsafe_flags.iter().filter(|&&u| u).count());
    stat("rollout", path.display());
    Ok(())
}

pub fn heatmap(shield: &Path, out: &Path, project: Option<[usize; 2]>) -> Result<(), CliError> {
    let st = load_shield("shield", shield)?;
    if st.grid().dim() != 2 {
        return Err(CliError::Config(format!(
            "{}: heatmaps need a 2-dimensional shield, this one has {} dimensions",
            shield.display(),
            st.grid().dim()
        )));
    }
    if let Some(r) = project {
        if r[0] == 0 || r[1] == 0 {
            return Err(CliError::Config("heatmap.resolution: must be positive".into()));
        }
    }
    let svg = heatmap::render(&st, project);
    write_file(out, svg.as_bytes())?;
    let colors: std::collections::BTreeSet<u8> = st.masks().iter().copied().collect();
    stat("cells", st.grid().cell_count());
    stat("masks", colors.len());
    stat("heatmap", out.display());
    Ok(())
}

pub fn info(path: &Path) -> Result<(), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let bad = |e: ShieldError| runtime(format!("{}: {e}", path.display()));
    let magic = bytes.get(..4).unwrap_or(&[]);
    let header = if magic == SHIELD_MAGIC {
        let st = Strategy::from_bytes(&bytes).map_err(bad)?;
        stat("kind", "shield");
        stat("controllable", st.controllable_count());
        st.header()
    } else if magic == TREE_MAGIC {
        let t = DecisionTree::from_bytes(&bytes).map_err(bad)?;
        stat("kind", "tree");
        stat("nodes", t.node_count());
        stat("leaves", t.leaf_count());
        stat("depth", t.depth());
        t.header().clone()
    } else if magic == QTABLE_MAGIC {
        let q = QTable::from_bytes(&bytes).map_err(bad)?;
        stat("kind", "qtable");
        stat("space", q.space().name());
        if let Space::T(tr) = q.space() {
            stat("space_transform", tr.kind().name());
        }
        stat("cells", q.grid().cell_count());
        stat("actions", q.actions().join(","));
        return Ok(());
    } else {
        return Err(runtime(format!("{}: not a shield, tree or Q-table file", path.display())));
    };
    stat("cells", header.grid.cell_count());
    stat("grid", show_box(&header.grid.bounds()));
    stat("counts", header.grid.counts().iter().map(|c| c.to_string()).collect::<Vec<_>>().join("x"));
    stat("actions", header.actions.join(","));
    stat("transform", header.transform.kind().name());
    let params: Vec<String> = header.transform.kind().params().iter().map(|p| p.to_string()).collect();
    stat("transform_params", params.join(","));
    stat("domain", show_box(header.transform.domain()));
    Ok(())
}
