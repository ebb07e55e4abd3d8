//! Coherence damping bounds. A covariant channel on a nondegenerate Bohr spectrum
//! acts on populations through a Gibbs-stochastic transition matrix G and multiplies
//! each off-diagonal element by a damping factor alpha_ij. Complete positivity is
//! equivalent to positivity of the damping matrix (diagonal p(i->i), off-diagonal
//! alpha_ij) together with nonnegativity of every p(i->j), which caps each |alpha_ij|
//! by the minor bound sqrt(p(i->i) p(j->j)).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::state::{gibbs_populations, Hamiltonian, InverseTemperature};
use crate::tol;

/// Row-stochastic and Gibbs-stochastic transition matrix. Entry (i, j) is the
/// probability p(i -> j). Validated at construction against a Hamiltonian and
/// inverse temperature; both checks use absolute slack 1e-10.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    g: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn new(g: DMatrix<f64>, h: &Hamiltonian, beta: InverseTemperature) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::NotSquare {
                rows: g.nrows(),
                cols: g.ncols(),
            });
        }
        let d = g.nrows();
        if d != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                actual: d,
            });
        }
        let mut g = g;
        for i in 0..d {
            for j in 0..d {
                let v = g[(i, j)];
                if !v.is_finite() || !(-tol::ENTRY..=1.0 + tol::ENTRY).contains(&v) {
                    return Err(Error::TransitionEntry { i, j, value: v });
                }
                g[(i, j)] = v.clamp(0.0, 1.0);
            }
        }
        for i in 0..d {
            let sum: f64 = g.row(i).iter().sum();
            if (sum - 1.0).abs() > tol::STOCHASTIC {
                return Err(Error::RowSum { row: i, sum });
            }
        }
        let pi = gibbs_populations(h, beta);
        for j in 0..d {
            let fixed: f64 = (0..d).map(|i| pi[i] * g[(i, j)]).sum();
            let deviation = (fixed - pi[j]).abs();
            if deviation > tol::STOCHASTIC {
                return Err(Error::NotGibbsStochastic { col: j, deviation });
            }
        }
        Ok(Self { g })
    }

    /// Identity matrix (no population transfer). Gibbs-stochastic for every (h, beta).
    pub fn identity(d: usize) -> Self {
        Self {
            g: DMatrix::identity(d, d),
        }
    }

    /// Full thermalization: every row is the Gibbs distribution.
    pub fn thermalizer(h: &Hamiltonian, beta: InverseTemperature) -> Self {
        let pi = gibbs_populations(h, beta);
        let d = h.dim();
        Self {
            g: DMatrix::from_fn(d, d, |_, j| pi[j]),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// p(i -> j).
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.g[(i, j)]
    }

    /// p(i -> i).
    pub fn stay(&self, i: usize) -> f64 {
        self.g[(i, i)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }
}

/// Off-diagonal damping factors alpha_ij with the Hermitian pairing
/// alpha_ji = conj(alpha_ij). The diagonal is unused and stored as zero.
#[derive(Debug, Clone)]
pub struct DampingFactors {
    a: CMat,
}

impl DampingFactors {
    pub fn new(a: CMat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let d = a.nrows();
        let mut asym = 0.0_f64;
        for i in 0..d {
            for j in (i + 1)..d {
                asym = asym.max((a[(i, j)] - a[(j, i)].conj()).norm());
            }
        }
        if asym > tol::HERMITICITY {
            return Err(Error::NotHermitian(asym));
        }
        let mut a = a;
        for i in 0..d {
            a[(i, i)] = Complex64::new(0.0, 0.0);
        }
        Ok(Self { a })
    }

    /// Every off-diagonal factor equal to the real value `v`.
    pub fn uniform(d: usize, v: f64) -> Self {
        let a = CMat::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(v, 0.0)
            }
        });
        Self { a }
    }

    /// All factors zero (full decoherence).
    pub fn zeros(d: usize) -> Self {
        Self::uniform(d, 0.0)
    }

    /// All factors one (coherence untouched).
    pub fn ones(d: usize) -> Self {
        Self::uniform(d, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn factor(&self, i: usize, j: usize) -> Complex64 {
        self.a[(i, j)]
    }

    pub fn matrix(&self) -> &CMat {
        &self.a
    }
}

/// The matrix whose positivity decides complete positivity: diagonal p(i->i),
/// off-diagonal alpha_ij.
#[derive(Debug, Clone)]
pub struct DampingMatrix {
    m: CMat,
}

impl DampingMatrix {
    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.m)
    }
}

pub fn damping_matrix(g: &TransitionMatrix, a: &DampingFactors) -> Result<DampingMatrix> {
    if g.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            actual: a.dim(),
        });
    }
    let d = g.dim();
    let m = CMat::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(g.stay(i), 0.0)
        } else {
            a.factor(i, j)
        }
    });
    Ok(DampingMatrix { m })
}

/// Outcome of the damping-matrix positivity check. A violation carries the most
/// negative eigenvalue and its eigenvector as a witness.
#[derive(Debug, Clone)]
pub enum DmpVerdict {
    Satisfied {
        min_eigenvalue: f64,
    },
    Violated {
        min_eigenvalue: f64,
        witness: Vec<Complex64>,
    },
}

impl DmpVerdict {
    pub fn satisfied(&self) -> bool {
        matches!(self, DmpVerdict::Satisfied { .. })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            DmpVerdict::Satisfied { min_eigenvalue } => *min_eigenvalue,
            DmpVerdict::Violated { min_eigenvalue, .. } => *min_eigenvalue,
        }
    }
}

/// Positive semidefiniteness of the damping matrix, eigenvalue floor -1e-9.
pub fn dmp_check(m: &DampingMatrix) -> DmpVerdict {
    let (vals, vecs) = linalg::hermitian_eigen(&m.m);
    let min_eigenvalue = vals[0];
    if min_eigenvalue >= -tol::PSD {
        DmpVerdict::Satisfied { min_eigenvalue }
    } else {
        DmpVerdict::Violated {
            min_eigenvalue,
            witness: vecs.column(0).iter().copied().collect(),
        }
    }
}

/// Pairwise cap sqrt(p(i->i) p(j->j)) on |alpha_ij| from the 2x2 principal minors.
/// Necessary for every dimension, sufficient only for qubits.
pub fn minor_bound(g: &TransitionMatrix) -> DMatrix<f64> {
    let d = g.dim();
    DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            g.stay(i)
        } else {
            (g.stay(i) * g.stay(j)).sqrt()
        }
    })
}

/// Maximal damping factor for a feasible diagonal qubit transition, plus the flag for
/// the singular case where the input sits on the Gibbs point and every transition
/// matrix fixing it works (kappa = 1 there).
#[derive(Debug, Clone, Copy)]
pub struct QubitKappa {
    pub kappa: f64,
    pub gibbs_diagonal: bool,
}

fn qubit_domain_check(p: f64, q: f64, de: f64) -> Result<()> {
    if de <= 0.0 || !de.is_finite() {
        return Err(Error::ParameterDomain {
            name: "de",
            value: de,
            domain: "(0, inf)",
        });
    }
    for (name, v) in [("p", p), ("q", q)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::ParameterDomain {
                name,
                value: v,
                domain: "[0, 1]",
            });
        }
    }
    Ok(())
}

/// Distance of the ground population from the Gibbs point, as the signed quantity
/// p - (1-p) e^{beta dE} whose zero is the Gibbs state. Inputs within 1e-9 of zero
/// are singular: the transition matrix is not pinned down by (p, q) there.
fn gibbs_gap(p: f64, e: f64) -> f64 {
    p - (1.0 - p) * e
}

/// The two stay probabilities of the unique transition matrix sending ground
/// population p to q, in the nonsingular case. e = e^{beta dE}.
fn qubit_stay_probs(p: f64, q: f64, e: f64) -> (f64, f64) {
    let denom = gibbs_gap(p, e);
    let p00 = (q - (1.0 - p) * e) / denom;
    let p11 = (p - (1.0 - q) * e) / denom;
    (p00, p11)
}

/// The unique Gibbs-stochastic transition matrix realizing the feasible diagonal
/// qubit transition p -> q. Errors on the singular Gibbs-diagonal input (where the
/// matrix is not unique) and on infeasible (p, q).
pub fn qubit_transition_probs(
    p: f64,
    q: f64,
    beta: InverseTemperature,
    de: f64,
) -> Result<TransitionMatrix> {
    qubit_domain_check(p, q, de)?;
    let e = (beta.value() * de).exp();
    if gibbs_gap(p, e).abs() < tol::SINGULAR * (1.0 + e) {
        return Err(Error::GibbsDiagonalInput);
    }
    let (p00, p11) = qubit_stay_probs(p, q, e);
    for v in [p00, p11] {
        if !(-tol::ENTRY..=1.0 + tol::ENTRY).contains(&v) {
            return Err(Error::InfeasibleDiagonal { p, q });
        }
    }
    let g = DMatrix::from_row_slice(2, 2, &[p00, 1.0 - p00, 1.0 - p11, p11]);
    let h = Hamiltonian::qubit(de)?;
    TransitionMatrix::new(g, &h, beta)
}

/// Maximal |alpha_01| over thermal operations realizing the diagonal transition
/// p -> q: the minor bound sqrt(p(0->0) p(1->1)) of the unique transition matrix.
/// On the singular Gibbs-diagonal input the identity realizes the transition, so
/// kappa = 1 with the flag set; a target away from the Gibbs point is then infeasible.
pub fn qubit_kappa(p: f64, q: f64, beta: InverseTemperature, de: f64) -> Result<QubitKappa> {
    qubit_domain_check(p, q, de)?;
    let e = (beta.value() * de).exp();
    let scale = 1.0 + e;
    if gibbs_gap(p, e).abs() < tol::SINGULAR * scale {
        if gibbs_gap(q, e).abs() < tol::SINGULAR * scale {
            return Ok(QubitKappa {
                kappa: 1.0,
                gibbs_diagonal: true,
            });
        }
        return Err(Error::InfeasibleDiagonal { p, q });
    }
    let (p00, p11) = qubit_stay_probs(p, q, e);
    for v in [p00, p11] {
        if !(-tol::ENTRY..=1.0 + tol::ENTRY).contains(&v) {
            return Err(Error::InfeasibleDiagonal { p, q });
        }
    }
    // sqrt(p00 p11) computed from the raw numerators so that p == q gives exactly 1:
    // both numerators then equal the shared denominator.
    let num = ((q - (1.0 - p) * e) * (p - (1.0 - q) * e)).max(0.0);
    let kappa = num.sqrt() / gibbs_gap(p, e).abs();
    Ok(QubitKappa {
        kappa: kappa.min(1.0),
        gibbs_diagonal: false,
    })
}

/// How much of the feasibility verdict is decided: for qubits the kappa bound is
/// tight, in higher dimensions only a necessary condition is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sufficiency {
    QubitExact,
    NecessaryOnly,
}

impl Sufficiency {
    pub fn label(self) -> &'static str {
        match self {
            Sufficiency::QubitExact => "exact",
            Sufficiency::NecessaryOnly => "necessary-only",
        }
    }
}

/// Full qubit verdict: diagonal classifier plus the coherence bound
/// |sigma_01| <= kappa |rho_01| with slack 1e-9.
#[derive(Debug, Clone)]
pub struct QubitTransitionReport {
    pub feasible: bool,
    pub case: crate::majorization::QubitCase,
    /// None when the diagonal part is already infeasible.
    pub kappa: Option<f64>,
    pub gibbs_diagonal: bool,
    /// |rho_01| kappa, the largest reachable coherence magnitude.
    pub available: Option<f64>,
    /// |sigma_01|.
    pub required: f64,
    pub sufficiency: Sufficiency,
}

pub fn qubit_full_feasible(
    rho: &crate::state::DensityMatrix,
    sigma: &crate::state::DensityMatrix,
    beta: InverseTemperature,
    de: f64,
) -> Result<QubitTransitionReport> {
    for s in [rho, sigma] {
        if s.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: s.dim(),
            });
        }
    }
    let p = rho.entry(0, 0).re;
    let q = sigma.entry(0, 0).re;
    let verdict = crate::majorization::qubit_diagonal_feasible(p, q, beta, de)?;
    let required = sigma.entry(0, 1).norm();
    if !verdict.feasible {
        return Ok(QubitTransitionReport {
            feasible: false,
            case: verdict.case,
            kappa: None,
            gibbs_diagonal: false,
            available: None,
            required,
            sufficiency: Sufficiency::QubitExact,
        });
    }
    let k = qubit_kappa(p, q, beta, de)?;
    let available = rho.entry(0, 1).norm() * k.kappa;
    Ok(QubitTransitionReport {
        feasible: required <= available + tol::COHERENCE,
        case: verdict.case,
        kappa: Some(k.kappa),
        gibbs_diagonal: k.gibbs_diagonal,
        available: Some(available),
        required,
        sufficiency: Sufficiency::QubitExact,
    })
}

/// Damping factor of the optimal-coherence relaxation map at time t: with
/// E = e^{-t/T2} and ground population p0,
/// kappa(t) = sqrt(E + p0 (1 - p0) (1 - E)^2).
/// This grouping evaluates to exactly 1 at t = 0.
pub fn t2_kappa(p0: f64, t: f64, t2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::ParameterDomain {
            name: "p0",
            value: p0,
            domain: "[0, 1]",
        });
    }
    if t < 0.0 || !t.is_finite() {
        return Err(Error::ParameterDomain {
            name: "t",
            value: t,
            domain: "[0, inf)",
        });
    }
    if t2 <= 0.0 || !t2.is_finite() {
        return Err(Error::ParameterDomain {
            name: "t2",
            value: t2,
            domain: "(0, inf)",
        });
    }
    let e = (-t / t2).exp();
    let s = 1.0 - e;
    Ok((e + p0 * (1.0 - p0) * s * s).sqrt())
}

/// Which damping profile a relaxation map carries: the plain exponential e^{-t/T1},
/// or the largest factor complete positivity allows for its population flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaviesForm {
    ExponentialCoherence,
    OptimalCoherence,
}

/// Qubit relaxation map toward the thermal state with ground population p0, as a
/// covariant channel. Populations relax with rate 1/T2: p(0->1) = (1 - E) (1 - p0),
/// p(1->0) = (1 - E) p0 with E = e^{-t/T2}. The damping factor is e^{-t/T1} for the
/// exponential form (requires 2 T1 >= T2) or the minor bound for the optimal form.
pub fn davies_qubit_map(
    p0: f64,
    t: f64,
    t1: f64,
    t2: f64,
    form: DaviesForm,
) -> Result<crate::channel::EtoChannel> {
    if !(0.5..1.0).contains(&p0) {
        return Err(Error::ParameterDomain {
            name: "p0",
            value: p0,
            domain: "[0.5, 1)",
        });
    }
    if t < 0.0 || !t.is_finite() {
        return Err(Error::ParameterDomain {
            name: "t",
            value: t,
            domain: "[0, inf)",
        });
    }
    for (name, v) in [("t1", t1), ("t2", t2)] {
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::ParameterDomain {
                name,
                value: v,
                domain: "(0, inf)",
            });
        }
    }
    if 2.0 * t1 < t2 {
        return Err(Error::SemigroupViolation { t1, t2 });
    }
    let p1 = 1.0 - p0;
    // thermal state with ground population p0 on the unit-gap qubit
    let beta = InverseTemperature::new((p0 / p1).ln())?;
    let h = Hamiltonian::qubit(1.0)?;
    let e = (-t / t2).exp();
    let g = DMatrix::from_row_slice(
        2,
        2,
        &[
            1.0 - (1.0 - e) * p1,
            (1.0 - e) * p1,
            (1.0 - e) * p0,
            1.0 - (1.0 - e) * p0,
        ],
    );
    let g = TransitionMatrix::new(g, &h, beta)?;
    let alpha = match form {
        DaviesForm::ExponentialCoherence => (-t / t1).exp(),
        DaviesForm::OptimalCoherence => (g.stay(0) * g.stay(1)).sqrt(),
    };
    let a = DampingFactors::uniform(2, alpha);
    crate::channel::EtoChannel::new(g, a, h, beta)
}
