//! Three-level cycle channels. Forbidding the transitions 2->2, 2->1, 1->0 and
//! 0->2 leaves a Gibbs-stochastic channel no freedom: population must climb the
//! ladder one gap at a time and fall from the top in a single step, and every
//! remaining probability is pinned by the row sums and the fixed point. This module
//! builds that pinned matrix and its unique epsilon-perturbed family, realizes the
//! exact cycle microscopically as a permutation block unitary, verifies the
//! singular-value obstruction that keeps every exact realization strictly below the
//! damping minor bound, and runs a seeded stochastic search probing whether the
//! obstruction survives perturbation. The search produces numerical evidence only;
//! it proves nothing either way.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bath::{induced_channel, sub_block, BathSpec, BlockUnitary, EnergyBlockLayout};
use crate::coherence::TransitionMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::par;
use crate::state::{Hamiltonian, InverseTemperature};
use crate::tol;

/// Three ascending levels 0 < E1 < E2 with E2 - E1 = de21 and E2 - E0 = de20,
/// plus an optional perturbation strength for the relaxed cycle.
#[derive(Debug, Clone, Copy)]
pub struct QuasiCycleSpec {
    de21: f64,
    de20: f64,
    beta: InverseTemperature,
    epsilon: f64,
}

impl QuasiCycleSpec {
    /// Requires 0 < de21 < de20 and 0 <= epsilon <= epsilon_max (the largest value
    /// keeping every perturbed entry a probability).
    pub fn new(de21: f64, de20: f64, beta: InverseTemperature, epsilon: f64) -> Result<Self> {
        if !de21.is_finite() || de21 <= 0.0 {
            return Err(Error::ParameterDomain {
                name: "de21",
                value: de21,
                domain: "(0, de20)",
            });
        }
        if !de20.is_finite() || de20 <= de21 {
            return Err(Error::ParameterDomain {
                name: "de20",
                value: de20,
                domain: "(de21, inf)",
            });
        }
        let spec = Self {
            de21,
            de20,
            beta,
            epsilon: 0.0,
        };
        let max = spec.epsilon_max();
        if !epsilon.is_finite() || epsilon < 0.0 || epsilon > max {
            return Err(Error::EpsilonTooLarge { epsilon, max });
        }
        Ok(Self { epsilon, ..spec })
    }

    /// The unperturbed cycle.
    pub fn exact(de21: f64, de20: f64, beta: InverseTemperature) -> Result<Self> {
        Self::new(de21, de20, beta, 0.0)
    }

    pub fn de21(&self) -> f64 {
        self.de21
    }

    pub fn de20(&self) -> f64 {
        self.de20
    }

    /// Gap between the two lower levels, de20 - de21.
    pub fn de10(&self) -> f64 {
        self.de20 - self.de21
    }

    pub fn beta(&self) -> InverseTemperature {
        self.beta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn hamiltonian(&self) -> Hamiltonian {
        Hamiltonian::new(&[0.0, self.de10(), self.de20]).expect("gaps validated at construction")
    }

    fn w21(&self) -> f64 {
        (-self.beta.value() * self.de21).exp()
    }

    fn w20(&self) -> f64 {
        (-self.beta.value() * self.de20).exp()
    }

    fn w10(&self) -> f64 {
        (-self.beta.value() * self.de10()).exp()
    }

    /// Largest admissible perturbation: the binding constraints are p(2->0) >= 0,
    /// p(1->2) >= 0, p(1->1) <= 1, p(0->1) >= 0 and p(0->0) >= 0.
    pub fn epsilon_max(&self) -> f64 {
        let (w21, w20, w10) = (self.w21(), self.w20(), self.w10());
        let mut m = 0.5_f64;
        m = m.min(w20 / (w20 + 1.0));
        m = m.min(w21 / (1.0 / w10 - 1.0 + w21));
        m = m.min(w20 / (2.0 * w20 + 1.0 - w10));
        if w10 > 2.0 * w20 {
            m = m.min((1.0 - w20) / (w10 - 2.0 * w20));
        }
        m
    }
}

/// The pinned exact-cycle matrix, levels ascending. Requires epsilon = 0; the
/// perturbed family lives in `perturbed_probs`.
pub fn quasicycle_probs(spec: &QuasiCycleSpec) -> Result<TransitionMatrix> {
    if spec.epsilon != 0.0 {
        return Err(Error::ParameterDomain {
            name: "epsilon",
            value: spec.epsilon,
            domain: "exactly 0 for the exact cycle",
        });
    }
    let (w21, w20) = (spec.w21(), spec.w20());
    let m = DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0 - w20,
            w20,
            0.0, //
            0.0,
            1.0 - w21,
            w21, //
            1.0,
            0.0,
            0.0,
        ],
    );
    TransitionMatrix::new(m, &spec.hamiltonian(), spec.beta)
}

/// The unique Gibbs-stochastic relaxation of the cycle with all four forbidden
/// probabilities set to epsilon. Fixing p(2->2) = p(2->1) = p(1->0) = p(0->2) =
/// epsilon forces p(2->0) by its row sum and the remaining four entries by the row
/// sums and the fixed-point condition. At epsilon = 0 this is the exact cycle.
pub fn perturbed_probs(spec: &QuasiCycleSpec) -> Result<TransitionMatrix> {
    let (w21, w20, w10) = (spec.w21(), spec.w20(), spec.w10());
    let eps = spec.epsilon;
    let p12 = w21 * (1.0 - eps) - eps / w10;
    let p11 = (1.0 - w21) * (1.0 - eps) + eps / w10;
    let p01 = w20 * (1.0 - 2.0 * eps) + (w10 - 1.0) * eps;
    let p00 = 1.0 - w20 * (1.0 - 2.0 * eps) - w10 * eps;
    let m = DMatrix::from_row_slice(
        3,
        3,
        &[
            p00,
            p01,
            eps, //
            eps,
            p11,
            p12, //
            1.0 - 2.0 * eps,
            eps,
            eps,
        ],
    );
    TransitionMatrix::new(m, &spec.hamiltonian(), spec.beta)
}

/// The same matrix with both indices reversed, for comparing against sources that
/// list levels from highest to lowest energy.
pub fn reversed_level_order(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m.nrows();
    DMatrix::from_fn(d, d, |i, j| m[(d - 1 - i, d - 1 - j)])
}

/// Sharp bound on |tr(W X V Y)| over all unitary W, V: the dot product of the two
/// descending singular-value lists.
pub fn vonneumann_trace_bound(x: &CMat, y: &CMat) -> Result<f64> {
    if x.nrows() != x.ncols() || y.nrows() != y.ncols() {
        return Err(Error::NotSquare {
            rows: x.nrows().max(y.nrows()),
            cols: x.ncols().max(y.ncols()),
        });
    }
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.nrows(),
        });
    }
    let sx = linalg::singular_values(x);
    let sy = linalg::singular_values(y);
    Ok(sx.iter().zip(sy.iter()).map(|(a, b)| a * b).sum())
}

/// Maximizes |tr(W X V Y)| over unitaries by alternating exact polar updates: with
/// V fixed, the optimal W is the adjoint of the unitary polar factor of X V Y, and
/// symmetrically. Each step is an exact coordinate maximization, so the value is
/// non-decreasing and converges to the singular-value bound for generic inputs.
pub fn maximize_trace_product(x: &CMat, y: &CMat, iterations: usize, seed: u64) -> Result<f64> {
    if x.nrows() != x.ncols() || y.nrows() != y.ncols() || x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.nrows(),
        });
    }
    let n = x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = linalg::haar_unitary(n, &mut rng);
    let mut w = CMat::identity(n, n);
    for _ in 0..iterations {
        let m = x * &v * y;
        let svd = m.svd(true, true);
        let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
        w = vt.adjoint() * u.adjoint();
        let m2 = y * &w * x;
        let svd2 = m2.svd(true, true);
        let (u2, vt2) = (svd2.u.expect("requested"), svd2.v_t.expect("requested"));
        v = vt2.adjoint() * u2.adjoint();
    }
    Ok((&w * x * &v * y).trace().norm())
}

/// Exact-cycle realization as a direct sum of permutation matrices: in every
/// interior block the whole top-level segment drops to the bottom segment, an
/// equal-sized slice of the middle segment rises to the top, a matching slice of
/// the bottom segment rises to the middle, and the remaining slots stay put. On an
/// exact geometric bath the slice ratios reproduce the pinned probabilities with no
/// rounding at all. Boundary and out-of-window blocks stay identity.
pub fn brute_cycle_unitary(
    spec: &QuasiCycleSpec,
    layout: &EnergyBlockLayout,
    bath: &BathSpec,
) -> Result<BlockUnitary> {
    if layout.system_dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: layout.system_dim(),
        });
    }
    let h = spec.hamiltonian();
    for (j, &e) in h.levels().iter().enumerate() {
        let from_layout = layout.level_rungs()[j] as f64 * bath.epsilon();
        if (e - from_layout).abs() > 1e-9 * (1.0 + e.abs()) {
            return Err(Error::MismatchedSystems);
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let mut blocks = Vec::with_capacity(layout.n_blocks());
    for b in layout.blocks() {
        if !b.interior() {
            blocks.push(CMat::identity(b.dim, b.dim));
            continue;
        }
        let seg2 = b.segment_for_level(2).expect("interior block");
        let seg1 = b.segment_for_level(1).expect("interior block");
        let seg0 = b.segment_for_level(0).expect("interior block");
        let (s2, s1, s0) = (seg2.dim, seg1.dim, seg0.dim);
        if s2 > s1 || s1 > s0 {
            return Err(Error::InvalidInput(format!(
                "block {} has segment dimensions ({s2}, {s1}, {s0}) not nondecreasing toward lower levels",
                b.index
            )));
        }
        let mut m = CMat::zeros(b.dim, b.dim);
        for k in 0..s2 {
            m[(seg0.offset + k, seg2.offset + k)] = one;
            m[(seg2.offset + k, seg1.offset + k)] = one;
            m[(seg1.offset + k, seg0.offset + k)] = one;
        }
        for k in s2..s1 {
            m[(seg1.offset + k, seg1.offset + k)] = one;
        }
        for k in s2..s0 {
            m[(seg0.offset + k, seg0.offset + k)] = one;
        }
        blocks.push(m);
    }
    BlockUnitary::from_blocks(blocks, layout)
}

/// One interior block pair in the saturation obstruction: the stay sub-blocks
/// u00 (at the lower block) and u11 (one rung up) with the achieved cross trace,
/// its Cauchy-Schwarz ceiling and the shortfall.
#[derive(Debug, Clone)]
pub struct PairGap {
    /// Index of the block carrying the level-0 segment of the pair.
    pub block: usize,
    pub c_abs: f64,
    pub bound: f64,
    pub gap: f64,
}

/// Evidence that a given exact-cycle realization cannot saturate the damping minor
/// bound: the forbidden sub-blocks vanish, the stay sub-blocks are partial
/// isometries (singular values 0 or 1), and their unit-value counts differ, so the
/// cross trace falls short of the Cauchy-Schwarz ceiling in every block pair.
#[derive(Debug, Clone)]
pub struct NogoReport {
    /// Largest entry magnitude over all forbidden sub-blocks of interior blocks.
    pub zero_block_max: f64,
    /// Largest distance of any stay sub-block singular value from {0, 1}.
    pub sv_unit_deviation_max: f64,
    pub pair_gaps: Vec<PairGap>,
    pub min_gap: f64,
    pub alpha01_interior: f64,
    pub minor_bound_01: f64,
}

impl NogoReport {
    /// True only if some block pair actually reaches its Cauchy-Schwarz ceiling.
    pub fn saturation_possible(&self) -> bool {
        self.min_gap <= tol::NOGO_GAP
    }
}

/// Checks that `u` realizes the exact cycle on interior blocks and measures the
/// saturation obstruction. Errors with the first deviating probability when the
/// realization is not exact.
pub fn nogo_check(
    u: &BlockUnitary,
    layout: &EnergyBlockLayout,
    bath: &BathSpec,
    spec: &QuasiCycleSpec,
) -> Result<NogoReport> {
    let want = quasicycle_probs(spec)?;
    let h = spec.hamiltonian();
    let ic = induced_channel(u, layout, bath, &h)?;
    for i in 0..3 {
        for j in 0..3 {
            let got = ic.g_interior[(i, j)];
            if (got - want.prob(i, j)).abs() > tol::EXACT_CYCLE {
                return Err(Error::NotExactCycle {
                    i,
                    j,
                    got,
                    want: want.prob(i, j),
                });
            }
        }
    }
    let mut zero_block_max = 0.0_f64;
    let mut sv_max = 0.0_f64;
    for b in layout.blocks() {
        if !b.interior() {
            continue;
        }
        for (src, tgt) in [(2usize, 2usize), (2, 1), (1, 0), (0, 2)] {
            if let Some(s) = sub_block(u, layout, b.index, tgt, src) {
                zero_block_max = zero_block_max.max(linalg::max_abs(&s));
            }
        }
        for lvl in [0usize, 1] {
            if let Some(s) = sub_block(u, layout, b.index, lvl, lvl) {
                for sv in linalg::singular_values(&s) {
                    sv_max = sv_max.max(sv.min((sv - 1.0).abs()));
                }
            }
        }
    }
    let n1 = layout.level_rungs()[1];
    let mut pair_gaps = Vec::new();
    for m in 0..bath.n_rungs() {
        let (t0, t1) = (m, m + n1);
        if t1 >= layout.n_blocks() || !layout.block(t0).interior() || !layout.block(t1).interior()
        {
            continue;
        }
        let u00 = sub_block(u, layout, t0, 0, 0).expect("interior block");
        let u11 = sub_block(u, layout, t1, 1, 1).expect("interior block");
        let c: Complex64 = u11
            .iter()
            .zip(u00.iter())
            .map(|(b, a)| b.conj() * a)
            .sum();
        let bound = (u00.norm_squared() * u11.norm_squared()).sqrt();
        let c_abs = c.norm();
        pair_gaps.push(PairGap {
            block: m,
            c_abs,
            bound,
            gap: bound - c_abs,
        });
    }
    if pair_gaps.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let min_gap = pair_gaps.iter().map(|p| p.gap).fold(f64::INFINITY, f64::min);
    Ok(NogoReport {
        zero_block_max,
        sv_unit_deviation_max: sv_max,
        pair_gaps,
        min_gap,
        alpha01_interior: ic.alpha_interior[(0, 1)].norm(),
        minor_bound_01: (ic.g_interior[(0, 0)] * ic.g_interior[(1, 1)]).sqrt(),
    })
}

/// Outcome of the stochastic saturation probe. `best_alpha` is None when no visited
/// unitary reproduced the target probabilities within the search tolerance, which
/// is a distinct result from a measured gap.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub best_alpha: Option<f64>,
    /// Minor bound sqrt(p(0->0) p(1->1)) of the target matrix.
    pub bound: f64,
    /// bound - best_alpha, when a feasible unitary was found.
    pub gap: Option<f64>,
    /// Largest entry mismatch against the target at the reported configuration;
    /// for an infeasible run, the closest approach seen.
    pub g_mismatch: f64,
    pub evaluations: u64,
    pub restarts: usize,
    /// (evaluation index within the winning restart, best alpha so far); empty for
    /// infeasible runs. Non-decreasing in the second component.
    pub trace: Vec<(u64, f64)>,
}

struct RestartOutcome {
    best_alpha: Option<f64>,
    mismatch_at_best: f64,
    min_mismatch: f64,
    evaluations: u64,
    trace: Vec<(u64, f64)>,
}

/// Seeded random-restart hill climb over block unitaries, maximizing the measured
/// interior |alpha_01| subject to reproducing the (possibly perturbed) cycle
/// probabilities within a fixed tolerance. Restarts run in parallel from streams
/// derived from the master seed; ties break toward the lower restart index, so the
/// report is identical across runs and thread counts. Starts from the permutation
/// realization, which is feasible for epsilon = 0; for epsilon > 0 the first phase
/// descends on the probability mismatch and may exhaust the budget without ever
/// matching, reported as `best_alpha: None`.
pub fn conjecture_search(
    spec: &QuasiCycleSpec,
    layout: &EnergyBlockLayout,
    bath: &BathSpec,
    budget: u64,
    seed: u64,
) -> Result<SearchReport> {
    let h = spec.hamiltonian();
    let target = perturbed_probs(spec)?;
    let start = brute_cycle_unitary(spec, layout, bath)?;
    let bound = (target.stay(0) * target.stay(1)).sqrt();
    let interior: Vec<usize> = layout
        .blocks()
        .iter()
        .filter(|b| b.interior())
        .map(|b| b.index)
        .collect();
    // fail early on structural problems so the parallel restarts cannot
    induced_channel(&start, layout, bath, &h)?;
    let restarts = 4usize;
    let per_budget = (budget / restarts as u64).max(1);

    let eval = |u: &BlockUnitary| -> (f64, f64, f64) {
        let ic = induced_channel(u, layout, bath, &h).expect("layout validated before search");
        let mut mismatch = 0.0_f64;
        let mut ss = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                let d = ic.g_interior[(i, j)] - target.prob(i, j);
                mismatch = mismatch.max(d.abs());
                ss += d * d;
            }
        }
        (mismatch, ss, ic.alpha_interior[(0, 1)].norm())
    };

    let outcomes: Vec<RestartOutcome> = par::map_range(restarts, |r| {
        let stream = seed ^ ((r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        let mut u = start.clone();
        let (start_mm, mut cur_ss, mut cur_alpha) = eval(&u);
        let mut evals: u64 = 1;
        let mut feasible = start_mm <= tol::SEARCH_G;
        let mut best_alpha = feasible.then_some(cur_alpha);
        let mut mismatch_at_best = start_mm;
        let mut min_mismatch = start_mm;
        let mut trace = Vec::new();
        if feasible {
            trace.push((evals, cur_alpha));
        }
        while evals < per_budget {
            let t = interior[rng.random_range(0..interior.len())];
            let amp = if feasible { 0.15 } else { 0.5 };
            let mv = random_cross_segment_move(layout, t, amp, &mut rng);
            let saved = apply_givens(u.block_mut(t), &mv);
            let (mm, ss, alpha) = eval(&u);
            evals += 1;
            min_mismatch = min_mismatch.min(mm);
            let accept = if feasible {
                mm <= tol::SEARCH_G && alpha > cur_alpha
            } else {
                ss < cur_ss || mm <= tol::SEARCH_G
            };
            if accept {
                cur_ss = ss;
                cur_alpha = alpha;
                if mm <= tol::SEARCH_G {
                    feasible = true;
                    if best_alpha.is_none_or(|b| alpha > b) {
                        best_alpha = Some(alpha);
                        mismatch_at_best = mm;
                        trace.push((evals, alpha));
                    }
                }
            } else {
                restore_givens(u.block_mut(t), &mv, saved);
            }
        }
        RestartOutcome {
            best_alpha,
            mismatch_at_best,
            min_mismatch,
            evaluations: evals,
            trace,
        }
    });

    let evaluations: u64 = outcomes.iter().map(|o| o.evaluations).sum();
    let mut winner = 0usize;
    for (r, o) in outcomes.iter().enumerate().skip(1) {
        let better = match (o.best_alpha, outcomes[winner].best_alpha) {
            (Some(a), Some(b)) => a > b,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => o.min_mismatch < outcomes[winner].min_mismatch,
        };
        if better {
            winner = r;
        }
    }
    let w = &outcomes[winner];
    Ok(SearchReport {
        best_alpha: w.best_alpha,
        bound,
        gap: w.best_alpha.map(|a| bound - a),
        g_mismatch: if w.best_alpha.is_some() {
            w.mismatch_at_best
        } else {
            outcomes
                .iter()
                .map(|o| o.min_mismatch)
                .fold(f64::INFINITY, f64::min)
        },
        evaluations,
        restarts,
        trace: w.trace.clone(),
    })
}

struct GivensMove {
    left: bool,
    a: usize,
    b: usize,
    cos: f64,
    sin: f64,
    phase: Complex64,
}

/// Plane rotation mixing one slot of one segment with one slot of another, acting
/// on rows (moves mass between target levels) or columns (between source levels).
/// Rotations inside a single segment cannot change any measured probability, so
/// moves always cross segments.
fn random_cross_segment_move(
    layout: &EnergyBlockLayout,
    t: usize,
    amp: f64,
    rng: &mut ChaCha8Rng,
) -> GivensMove {
    let b = layout.block(t);
    let n = b.segments.len();
    let ia = rng.random_range(0..n);
    let mut ib = rng.random_range(0..n - 1);
    if ib >= ia {
        ib += 1;
    }
    let sa = &b.segments[ia];
    let sb = &b.segments[ib];
    let theta = amp * rng.random::<f64>();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    GivensMove {
        left: rng.random::<bool>(),
        a: sa.offset + rng.random_range(0..sa.dim),
        b: sb.offset + rng.random_range(0..sb.dim),
        cos: theta.cos(),
        sin: theta.sin(),
        phase: Complex64::from_polar(1.0, phi),
    }
}

type SavedPair = (Vec<Complex64>, Vec<Complex64>);

/// Applies the rotation in place and returns the overwritten row or column pair so
/// a rejected move can be undone exactly.
fn apply_givens(m: &mut CMat, mv: &GivensMove) -> SavedPair {
    let (c, s, ph) = (mv.cos, mv.sin, mv.phase);
    if mv.left {
        let ra: Vec<Complex64> = (0..m.ncols()).map(|j| m[(mv.a, j)]).collect();
        let rb: Vec<Complex64> = (0..m.ncols()).map(|j| m[(mv.b, j)]).collect();
        for j in 0..m.ncols() {
            m[(mv.a, j)] = ra[j] * c + rb[j] * ph * s;
            m[(mv.b, j)] = -ra[j] * ph.conj() * s + rb[j] * c;
        }
        (ra, rb)
    } else {
        let ca: Vec<Complex64> = (0..m.nrows()).map(|i| m[(i, mv.a)]).collect();
        let cb: Vec<Complex64> = (0..m.nrows()).map(|i| m[(i, mv.b)]).collect();
        for i in 0..m.nrows() {
            m[(i, mv.a)] = ca[i] * c - cb[i] * ph.conj() * s;
            m[(i, mv.b)] = ca[i] * ph * s + cb[i] * c;
        }
        (ca, cb)
    }
}

fn restore_givens(m: &mut CMat, mv: &GivensMove, saved: SavedPair) {
    let (va, vb) = saved;
    if mv.left {
        for j in 0..m.ncols() {
            m[(mv.a, j)] = va[j];
            m[(mv.b, j)] = vb[j];
        }
    } else {
        for i in 0..m.nrows() {
            m[(i, mv.a)] = va[i];
            m[(i, mv.b)] = vb[i];
        }
    }
}
