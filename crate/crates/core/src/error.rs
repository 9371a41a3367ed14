use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared across the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("site count must be at least 2, got {0}")]
    TooFewSites(usize),

    #[error("local dimension must be at least 2, got {0}")]
    BadLocalDim(usize),

    #[error("amplitude vector has length {got}, expected {expected}")]
    AmplitudeLength { expected: usize, got: usize },

    #[error("state is not normalized: squared norm {0}")]
    NotNormalized(f64),

    #[error("{needed} amplitudes exceed the budget of {cap} (raise ENTORDER_MAX_AMPLITUDES)")]
    BudgetExceeded { needed: u128, cap: usize },

    #[error("cut {cut} out of range 1..={max}")]
    CutOutOfRange { cut: usize, max: usize },

    #[error("site {site} out of range 1..={max}")]
    SiteOutOfRange { site: usize, max: usize },

    #[error("invalid site subset: {0}")]
    BadSubset(String),

    #[error("subsets overlap at site {0}")]
    OverlappingSubsets(usize),

    #[error("sites {0} and {1} must differ")]
    EqualSites(usize, usize),

    #[error("local vector at site {0} has zero norm")]
    ZeroLocalVector(usize),

    #[error("local vector at site {site} has length {got}, expected {expected}")]
    LocalVectorLength { site: usize, expected: usize, got: usize },

    #[error("coefficient columns are not orthonormal (max deviation {0:.3e})")]
    NonOrthonormalColumns(f64),

    #[error("particle count {n} invalid for {l} orbitals")]
    BadParticleCount { n: usize, l: usize },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("L = {l} exceeds the dense diagonalization budget of {max}")]
    DiagonalizationBudget { l: usize, max: usize },

    #[error("bond dimension must be at least 1")]
    BadBondDimension,

    #[error("`{0}` is not a permutation of 1..={1}")]
    BadPermutation(String, usize),

    #[error("fermionic reordering requires d = 2, got d = {0}")]
    FermionicNeedsQubits(usize),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix trace {0} is not 1 within tolerance")]
    BadTrace(f64),

    #[error("matrix has negative eigenvalue {0:.3e}")]
    NotPositiveSemidefinite(f64),

    #[error("spectrum entry {0:.3e} is negative beyond tolerance")]
    NegativeSpectrumEntry(f64),

    #[error("spectrum sums to {0}, expected 1 within 1e-6")]
    SpectrumNotNormalized(f64),

    #[error("alpha must be nonnegative, got {0}")]
    NegativeAlpha(f64),

    #[error("alpha = {0} is not admissible here")]
    UnsupportedAlpha(f64),

    #[error("mutual information I_{{{i},{j}}} = {value:.3e} is negative beyond tolerance")]
    NegativeQmi { i: usize, j: usize, value: f64 },

    #[error("cost functions require alpha = 1 mutual information, got alpha = {0}")]
    AlphaMismatch(f64),

    #[error("lengths disagree: {0}")]
    LengthMismatch(String),

    #[error("weight c_j undefined for j = {0} (needs j >= 2)")]
    WeightUndefined(usize),

    #[error("delta = {delta} out of range 1..={max} for j = {j}")]
    DeltaOutOfRange { j: usize, delta: usize, max: usize },

    #[error("block [{0}, {1}] is not a valid range of at least two sites")]
    BadBlock(usize, usize),

    #[error("L must be a power of two of at least 4, got {0}")]
    NotPowerOfTwo(usize),

    #[error("exhaustive search capped at L = {cap}, got L = {l}")]
    ExhaustiveCap { l: usize, cap: usize },

    #[error("invalid search configuration: {0}")]
    BadSearchConfig(String),

    #[error("state was not produced by the Slater generator")]
    NotSlaterState,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}
