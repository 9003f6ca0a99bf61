//! Run configuration: one TOML file drives every subcommand.

use std::path::{Path, PathBuf};

use gridshield::learn::{InitialState, LearnConfig};
use gridshield::models::{
    BouncingBall, BouncingBallParams, CartPole, CartPoleParams, ControlModel, Model, Oscillator, OscillatorParams,
    Satellite, SatelliteParams,
};
use gridshield::synthesis::SamplingConfig;
use gridshield::{Aabb, Axis, GridSpec, Transform, TransformKind};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub model: ModelSection,
    #[serde(default)]
    pub transform: TransformSection,
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub synthesis: SynthesisSection,
    #[serde(default)]
    pub learning: LearningSection,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub heatmap: HeatmapSection,
    #[serde(default)]
    pub rollout: RolloutSection,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from(".")
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: String,
    #[serde(default)]
    pub params: Option<toml::Table>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformSection {
    #[default]
    Identity,
    Polar {
        r_max: f64,
        #[serde(default = "default_origin_eps")]
        origin_eps: f64,
    },
    /// Mass and gravity default to the bouncing ball's.
    Energy { mass: Option<f64>, gravity: Option<f64>, energy_max: f64 },
    PolyOffset { coefficients: Vec<f64> },
}

fn default_origin_eps() -> f64 {
    1e-9
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub axes: Vec<Axis>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub per_axis: usize,
    pub random_disturbances: usize,
    pub fallback_per_axis: usize,
    /// Defaults to the global seed.
    pub seed: Option<u64>,
}

impl Default for SamplingSection {
    fn default() -> Self {
        let d = SamplingConfig::default();
        Self {
            per_axis: d.per_axis,
            random_disturbances: d.random_disturbances,
            fallback_per_axis: d.fallback_per_axis,
            seed: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisMode {
    #[default]
    Fixpoint,
    Bounded,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisSection {
    pub mode: SynthesisMode,
    pub k: usize,
    pub fit_powers: Vec<i32>,
}

impl Default for SynthesisSection {
    fn default() -> Self {
        Self { mode: SynthesisMode::Fixpoint, k: 3, fit_powers: vec![1, 3] }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
pub enum SpaceName {
    #[default]
    S,
    T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    #[default]
    Greedy,
    Random,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningSection {
    pub episodes: usize,
    pub eval_episodes: usize,
    pub horizon_seconds: Option<f64>,
    pub space: SpaceName,
    pub shield: Option<PathBuf>,
    pub matrix: bool,
    pub s_shield: Option<PathBuf>,
    pub t_shield: Option<PathBuf>,
    pub observation_counts: Option<Vec<usize>>,
    pub initial: Option<InitialState>,
    pub policy: PolicyName,
    pub hyperparameters: LearnConfig,
}

impl Default for LearningSection {
    fn default() -> Self {
        Self {
            episodes: 150,
            eval_episodes: 100,
            horizon_seconds: None,
            space: SpaceName::S,
            shield: None,
            matrix: false,
            s_shield: None,
            t_shield: None,
            observation_counts: None,
            initial: None,
            policy: PolicyName::Greedy,
            hyperparameters: LearnConfig::default(),
        }
    }
}

/// File names, relative ones resolved against `out_dir`.
#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub shield: PathBuf,
    pub tree: PathBuf,
    pub boundary: PathBuf,
    pub episodes: PathBuf,
    pub evaluation: PathBuf,
    pub matrix: PathBuf,
    pub qtable: PathBuf,
    pub rollout: PathBuf,
    pub heatmap: PathBuf,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            shield: "shield.bin".into(),
            tree: "tree.bin".into(),
            boundary: "boundary.csv".into(),
            episodes: "episodes.csv".into(),
            evaluation: "evaluation.csv".into(),
            matrix: "matrix.csv".into(),
            qtable: "qtable.bin".into(),
            rollout: "rollout.csv".into(),
            heatmap: "heatmap.svg".into(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapSection {
    pub back_projection: bool,
    /// Pixels per axis of the back-projection onto `S`.
    pub resolution: [usize; 2],
}

impl Default for HeatmapSection {
    fn default() -> Self {
        Self { back_projection: false, resolution: [200, 200] }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutSection {
    pub steps: usize,
}

impl Default for RolloutSection {
    fn default() -> Self {
        Self { steps: 200 }
    }
}

fn config_error(path: impl std::fmt::Display, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

fn parse_at<T: DeserializeOwned>(prefix: &str, value: toml::Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let full = match (prefix.is_empty(), path == ".") {
            (true, _) => path,
            (false, true) => prefix.to_string(),
            (false, false) => format!("{prefix}.{path}"),
        };
        config_error(full, e.inner().message())
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path).map_err(|e| config_error(path.display(), e))?;
        Self::parse(&raw).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn parse(raw: &str) -> Result<Self, CliError> {
        let table: toml::Table = raw.parse().map_err(|e: toml::de::Error| config_error("syntax", e.to_string().trim_end()))?;
        let cfg: RunConfig = parse_at("", toml::Value::Table(table))?;
        cfg.model()?;
        Ok(cfg)
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let params = toml::Value::Table(self.model.params.clone().unwrap_or_default());
        Ok(match self.model.kind.as_str() {
            "oscillator" => Model::Oscillator(Oscillator::new(typed::<OscillatorParams>(params)?)),
            "satellite" => Model::Satellite(Satellite::new(typed::<SatelliteParams>(params)?)),
            "bouncing_ball" => Model::BouncingBall(BouncingBall::new(typed::<BouncingBallParams>(params)?)),
            "cart_pole" => Model::CartPole(CartPole::new(typed::<CartPoleParams>(params)?)),
            other => {
                return Err(config_error(
                    "model.kind",
                    format!("unknown model `{other}`, expected one of oscillator, satellite, bouncing_ball, cart_pole"),
                ))
            }
        })
    }

    /// The transform over the state box of the synthesis model.
    pub fn transform(&self, model: &Model) -> Result<Transform, CliError> {
        let domain = model.synthesis_model().bounds();
        let kind = match &self.transform {
            TransformSection::Identity => TransformKind::Identity,
            TransformSection::Polar { r_max, origin_eps } => TransformKind::Polar { r_max: *r_max, origin_eps: *origin_eps },
            TransformSection::Energy { mass, gravity, energy_max } => {
                let ball = BouncingBallParams::default();
                let (m, g) = match model {
                    Model::BouncingBall(b) => (b.params.mass, b.params.gravity),
                    _ => (ball.mass, ball.gravity),
                };
                TransformKind::Energy { mass: mass.unwrap_or(m), gravity: gravity.unwrap_or(g), energy_max: *energy_max }
            }
            TransformSection::PolyOffset { coefficients } => TransformKind::PolyOffset { coefficients: coefficients.clone() },
        };
        Transform::new(kind, domain).map_err(|e| config_error("transform", e))
    }

    /// The synthesis grid, checked against the transform codomain.
    pub fn grid(&self, transform: &Transform) -> Result<GridSpec, CliError> {
        let section = self.grid.as_ref().ok_or_else(|| config_error("grid", "missing section"))?;
        let grid = GridSpec::new(section.axes.clone()).map_err(|e| config_error("grid.axes", e))?;
        let codomain = transform.codomain();
        if grid.dim() != codomain.dim() {
            return Err(config_error(
                "grid.axes",
                format!("{} axes given, transform codomain has {} dimensions", grid.dim(), codomain.dim()),
            ));
        }
        if !grid.bounds().approx_eq(codomain, 1e-9) {
            return Err(config_error(
                "grid.axes",
                format!("grid box {} does not match transform codomain {}", show_box(&grid.bounds()), show_box(codomain)),
            ));
        }
        Ok(grid)
    }

    pub fn sampling(&self) -> SamplingConfig {
        let s = &self.sampling;
        SamplingConfig {
            per_axis: s.per_axis,
            random_disturbances: s.random_disturbances,
            fallback_per_axis: s.fallback_per_axis,
            seed: s.seed.unwrap_or(self.seed),
        }
    }

    pub fn output(&self, name: &Path) -> PathBuf {
        resolve(&self.out_dir, name)
    }

    /// An input file named in the config; must exist.
    pub fn input(&self, field: &str, name: &Path) -> Result<PathBuf, CliError> {
        let p = resolve(&self.out_dir, name);
        if !p.is_file() {
            return Err(config_error(field, format!("file not found: {}", p.display())));
        }
        Ok(p)
    }
}

fn typed<T: DeserializeOwned>(v: toml::Value) -> Result<T, CliError> {
    parse_at("model.params", v)
}

fn resolve(dir: &Path, name: &Path) -> PathBuf {
    if name.is_absolute() {
        name.to_path_buf()
    } else {
        dir.join(name)
    }
}

pub fn show_box(b: &Aabb) -> String {
    let parts: Vec<String> = b.lo.iter().zip(&b.hi).map(|(l, h)| format!("[{l}, {h})")).collect();
    parts.join(" x ")
}
