//! Feasibility of energy-diagonal state transitions under thermal channels, with
//! exact coherence-damping bounds and a microscopic finite-bath simulator.
//!
//! The crate answers three escalating questions about a d-level system coupled to
//! a heat bath at inverse temperature beta:
//!
//! * Can populations p reach populations q at all? `majorization` builds the
//!   thermal ordering curve and decides dominance; for qubits the answer splits
//!   into four exact regimes.
//! * How much off-diagonal coherence survives any channel realizing a given
//!   population flow? `coherence` packages the damping-matrix positivity test and
//!   the closed-form qubit optimum kappa = sqrt(p00 p11), and `channel` constructs
//!   an explicit channel for any admissible (flow, damping) pair.
//! * Which of these bounds do actual bath couplings attain? `bath` builds
//!   finite ladder baths, measures the channel induced by any energy-conserving
//!   block unitary, and realizes the qubit optimum with an explicit staircase
//!   coupling; `quasicycle` does the same for a three-level cycle where an exact
//!   obstruction keeps every realization strictly below the damping bound.
//!
//! Numerical work is data-parallel through `par` when the default `parallel`
//! feature is on, and runs sequentially (same results, same order) without it.

pub mod bath;
pub mod channel;
pub mod coherence;
pub mod error;
pub mod linalg;
pub mod majorization;
pub mod par;
pub mod quasicycle;
pub mod state;
pub mod tol;

pub use bath::{
    build_bath, enumerate_blocks, induced_channel, simulate_staircase, BathMode, BathSpec,
    BlockUnitary, EnergyBlockLayout, SimulationReport,
};
pub use channel::EtoChannel;
pub use coherence::{
    damping_matrix, dmp_check, minor_bound, qubit_full_feasible, qubit_kappa, t2_kappa,
    DampingFactors, DampingMatrix, DmpVerdict, QubitKappa, TransitionMatrix,
};
pub use error::{Error, Result};
pub use majorization::{
    build_curve, curve_dominates, qubit_diagonal_feasible, QubitCase, ThermoCurve,
};
pub use quasicycle::{
    brute_cycle_unitary, conjecture_search, nogo_check, perturbed_probs, quasicycle_probs,
    NogoReport, QuasiCycleSpec, SearchReport,
};
pub use state::{
    free_energy, gibbs_populations, gibbs_state, DensityMatrix, Hamiltonian, InverseTemperature,
};
