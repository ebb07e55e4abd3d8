//! Numerical tolerances. These are part of the contract: tests pin behavior against
//! them, so changing one is an interface change, not a tuning knob.

/// Hermiticity: max |m_ij - conj(m_ji)| accepted when validating states.
pub const HERMITICITY: f64 = 1e-10;
/// Trace deviation |tr - 1| accepted when validating states.
pub const TRACE: f64 = 1e-10;
/// Eigenvalue floor for positive-semidefiniteness checks.
pub const PSD: f64 = 1e-9;
/// Gap below which two Bohr transition frequencies count as degenerate.
pub const BOHR_GAP: f64 = 1e-9;
/// Slack in thermo-majorization curve dominance comparisons.
pub const CURVE: f64 = 1e-9;
/// |p(1+E) - E| below this means the input diagonal sits on the Gibbs point.
pub const SINGULAR: f64 = 1e-9;
/// Coherence feasibility slack: |target| <= kappa * |input| + this.
pub const COHERENCE: f64 = 1e-9;
/// Row sums and Gibbs-stochasticity of transition matrices.
pub const STOCHASTIC: f64 = 1e-10;
/// Slack on individual transition-probability entries before they count as out of range.
pub const ENTRY: f64 = 1e-12;
/// Gibbs fixed point of a constructed channel.
pub const GIBBS_FIXED: f64 = 1e-10;
/// Covariance check over sampled states and times.
pub const COVARIANCE: f64 = 1e-9;
/// Per-block unitarity of block unitaries.
pub const UNITARITY: f64 = 1e-10;
/// Distance to {0, 1} accepted for no-go singular values.
pub const SV_UNIT: f64 = 1e-8;
/// Strict Cauchy-Schwarz gap required by the no-go check.
pub const NOGO_GAP: f64 = 1e-8;
/// Interior transition-matrix match required before the no-go argument applies.
pub const EXACT_CYCLE: f64 = 1e-10;
/// Interior transition-matrix match accepted by the conjecture search.
pub const SEARCH_G: f64 = 1e-6;
/// Kraus completeness: max entry of |sum K^dag K - I|.
pub const KRAUS: f64 = 1e-9;
/// Eigenvalues of the Choi matrix below this are dropped when extracting Kraus operators.
pub const KRAUS_EIG: f64 = 1e-12;
/// Total-dimension cap on finite-bath layouts.
pub const DIM_CAP: usize = 1 << 14;
/// Cap on dense full-space verification paths.
pub const DENSE_CAP: usize = 4096;
