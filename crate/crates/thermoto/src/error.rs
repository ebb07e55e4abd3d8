//! Error type shared across the crate. Variants carry the violating magnitudes so
//! failed validations are diagnosable without re-running them.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("need at least two energy levels, got {0}")]
    TooFewLevels(usize),
    #[error("energies must be finite")]
    NonFiniteEnergy,
    #[error("energies must be sorted ascending (position {0} decreases)")]
    UnsortedEnergies(usize),
    #[error("inverse temperature must be finite and non-negative, got {0}")]
    InvalidBeta(f64),
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix is not Hermitian: max asymmetry {0:.3e}")]
    NotHermitian(f64),
    #[error("trace deviates from 1 by {0:.3e}")]
    InvalidTrace(f64),
    #[error("matrix is not positive semidefinite: min eigenvalue {0:.3e}")]
    NotPsd(f64),
    #[error("population {index} is {value:.6e}, outside [0, 1]")]
    PopulationOutOfRange { index: usize, value: f64 },
    #[error("populations sum to {0}, expected 1")]
    PopulationSum(f64),
    #[error("free energy undefined at infinite temperature (beta = 0)")]
    InfiniteTemperature,
    #[error("partition sums differ: {0} vs {1}; curves must share Hamiltonian and beta")]
    MismatchedPartition(f64, f64),
    #[error("transition matrix row {row} sums to {sum}")]
    RowSum { row: usize, sum: f64 },
    #[error("transition matrix entry ({i},{j}) = {value:.6e} outside [0, 1]")]
    TransitionEntry { i: usize, j: usize, value: f64 },
    #[error("not Gibbs-stochastic: column {col} deviates by {deviation:.3e}")]
    NotGibbsStochastic { col: usize, deviation: f64 },
    #[error("diagonal transition {p} -> {q} is infeasible under thermal operations")]
    InfeasibleDiagonal { p: f64, q: f64 },
    #[error("input diagonal equals the Gibbs diagonal: transition matrix is not unique")]
    GibbsDiagonalInput,
    #[error("damping matrix positivity violated: min eigenvalue {0:.3e}")]
    DmpViolation(f64),
    #[error("Bohr spectrum is degenerate: transition frequencies collide within {0:.1e}")]
    DegenerateBohr(f64),
    #[error("channels act on different systems and cannot be composed")]
    MismatchedSystems,
    #[error("energy gaps are incommensurate: residual {0:.3e} against the candidate spacing")]
    IncommensurateGaps(f64),
    #[error("e^(beta*eps) = {0} is not a positive integer; exact geometric bath impossible")]
    NonIntegerRatio(f64),
    #[error("bath needs at least {needed} rungs, got {got}")]
    BathTooSmall { needed: usize, got: usize },
    #[error("bath validity window is empty for these parameters")]
    EmptyWindow,
    #[error("total dimension {0} exceeds the cap {1}")]
    DimensionCap(usize, usize),
    #[error("block {block} is not unitary: deviation {deviation:.3e}")]
    NotUnitary { block: usize, deviation: f64 },
    #[error("staircase construction requires p(1->1) <= p(0->0), got {p11} > {p00}")]
    RegimeViolation { p00: f64, p11: f64 },
    #[error("bath degeneracies are not geometric with a constant integer ratio")]
    NotGeometric,
    #[error("parameter {name} = {value} outside its domain {domain}")]
    ParameterDomain { name: &'static str, value: f64, domain: &'static str },
    #[error("semigroup form requires 2*T1 >= T2, got T1 = {t1}, T2 = {t2}")]
    SemigroupViolation { t1: f64, t2: f64 },
    #[error("epsilon = {epsilon} exceeds the admissible maximum {max:.6}")]
    EpsilonTooLarge { epsilon: f64, max: f64 },
    #[error("unitary does not realize the exact cycle: p({i}->{j}) = {got:.12}, expected {want:.12}")]
    NotExactCycle { i: usize, j: usize, got: f64, want: f64 },
    #[error("dense verification capped at dimension {cap}, layout has {dim}")]
    DenseCap { dim: usize, cap: usize },
    #[error("{0}")]
    InvalidInput(String),
}
