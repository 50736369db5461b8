use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounds: players = {n}, max coalition size = {k} (need 1 <= k <= n)")]
    InvalidBounds { n: usize, k: usize },

    #[error("diagram of size {diagram} cannot allocate {players} players")]
    SizeMismatch { diagram: usize, players: usize },

    #[error("malformed coalition structure `{0}`")]
    MalformedStructure(String),

    #[error("structure {structure} is not valid for {n} players with max coalition size {k}")]
    StructureOutOfBounds { structure: String, n: usize, k: usize },

    #[error("unknown player {0}")]
    UnknownPlayer(usize),

    #[error("player {player} has an empty label set at structure {structure}")]
    EmptyLabels { player: usize, structure: String },

    #[error("player {player} declares label `{label}` twice at structure {structure}")]
    DuplicateLabel { player: usize, structure: String, label: String },

    #[error("label `{label}` is not declared for player {player} at structure {structure}")]
    UndeclaredLabel { player: usize, structure: String, label: String },

    #[error("player {0} has no choices")]
    NoChoices(usize),

    #[error("payoff row for {structure} has {found} entries, expected {expected}")]
    PayoffArity { structure: String, expected: usize, found: usize },

    #[error("duplicate payoff row for {structure} at profile ({profile})")]
    DuplicatePayoff { structure: String, profile: String },

    #[error("no payoff row for implementable structure {structure} at profile ({profile})")]
    MissingPayoff { structure: String, profile: String },

    #[error("mechanism `{mechanism}` maps profile {profile} to {structure}, which has no payoff row")]
    ImageUncovered { mechanism: String, structure: String, profile: String },

    #[error("player {player}: label `{label}` chosen at {from} has no image in {to}")]
    ProjectionUndefined { player: usize, label: String, from: String, to: String },

    #[error("mechanism `{mechanism}` is not defined on choice profile {profile}")]
    MechanismNotTotal { mechanism: String, profile: String },

    #[error("mechanism `{mechanism}` produced an invalid outcome: {reason}")]
    InvalidOutcome { mechanism: String, reason: String },

    #[error("structure {0} is not implementable by the mechanism")]
    StructureNotImplementable(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid mixed strategy for player {player}: {reason}")]
    InvalidMixture { player: usize, reason: String },

    #[error("replicator dynamics needs an interior starting point (player {0} has a zero weight)")]
    InvalidInit(usize),

    #[error("{profiles} choice profiles exceed the desk-scale limit of {limit}")]
    ScaleExceeded { profiles: u128, limit: u128 },

    #[error("numeric solver did not converge: {0}")]
    NumericNonconvergence(String),

    #[error("no equilibrium stored for K = {0}")]
    MissingEquilibrium(usize),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("count overflow for n = {n}, k = {k}")]
    CountOverflow { n: usize, k: usize },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("{path}: {message}")]
    Spec { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn spec(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Spec { path: path.into(), message: message.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
