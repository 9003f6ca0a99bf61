use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("point lies outside the grid bounds")]
    OutOfBounds,
    #[error("cell index is not valid for this grid")]
    InvalidIndex,
    #[error("point has {got} coordinates, grid has {expected} dimensions")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid grid: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("transform is undefined at this point")]
    Undefined,
    #[error("invalid transform parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("grid box does not match the transform codomain")]
    ConfigMismatch,
    #[error("no column of the marking contains a marked cell")]
    Degenerate,
    #[error("normal matrix of the polynomial fit is singular")]
    SingularFit,
    #[error("boundary extraction needs a two-dimensional grid")]
    NotTwoDimensional,
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShieldError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("no action is allowed in this state")]
    Uncontrollable,
    #[error("unsupported file version or magic")]
    VersionMismatch,
    #[error("corrupt shield file: {0}")]
    Corrupt(String),
    #[error("shield has {0} actions; at most 8 are supported")]
    TooManyActions(usize),
    #[error("decision tree disagrees with the strategy at cell {0}")]
    TreeMismatch(usize),
}

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("initial state is outside the shield's controllable set")]
    UncontrollableStart,
    #[error(transparent)]
    Shield(#[from] ShieldError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid learning setup: {0}")]
    Invalid(String),
}
