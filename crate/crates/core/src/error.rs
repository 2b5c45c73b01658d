use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("interior required: node {0:?} touches the lattice boundary")]
    InteriorRequired(Vec<usize>),
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),
    #[error("region outside lattice: {0}")]
    RegionOutsideLattice(String),
    #[error("alignment required: {0}")]
    AlignmentRequired(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("singular separation: |y - x| = {separation:e} is below the floor {floor:e}")]
    SingularSeparation { separation: f64, floor: f64 },
    #[error("epsilons must be strictly descending")]
    NotDescending,
    #[error("subset violation: {0}")]
    SubsetViolation(String),
    #[error("node {0:?} is not in the set")]
    NotInSet(Vec<usize>),
    #[error("barrier certification failed: {0}")]
    BarrierCondition(String),
    #[error("solver did not converge after {iterations} iterations (last residual {last:e})")]
    NonConvergence { iterations: usize, last: f64, history: Vec<f64> },
    #[error("uncertified corpus member {0}")]
    Uncertified(String),
    #[error("stale certification for corpus member {0}: value hash changed")]
    StaleCertification(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
