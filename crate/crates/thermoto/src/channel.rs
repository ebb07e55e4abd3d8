//! Covariant channels parametrized by (transition matrix, damping factors). On a
//! nondegenerate Bohr spectrum such a channel acts as
//!   rho_ii -> sum_j p(j->i) rho_jj  on populations,
//!   rho_ij -> alpha_ij rho_ij       on each coherence,
//! and is completely positive iff its Choi matrix is positive semidefinite, which
//! reduces to the damping-matrix check plus nonnegative transition probabilities.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coherence::{DampingFactors, DampingMatrix, TransitionMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::state::{bohr_spectrum, DensityMatrix, Hamiltonian, InverseTemperature};
use crate::tol;

/// Validated covariant channel. Construction proves complete positivity (Choi
/// positivity), trace preservation (row-stochastic G) and Gibbs preservation
/// (Gibbs-stochastic G); `apply` therefore never produces an invalid state.
#[derive(Debug, Clone)]
pub struct EtoChannel {
    g: TransitionMatrix,
    a: DampingFactors,
    h: Hamiltonian,
    beta: InverseTemperature,
    choi: CMat,
}

/// Choi matrix (id (x) channel acting on the unnormalized maximally entangled
/// projector, trace d): diagonal entries p(i->k) at (i d + k), off-diagonal
/// alpha_ij at (i d + i, j d + j).
fn assemble_choi(g: &TransitionMatrix, a: &DampingFactors) -> CMat {
    let d = g.dim();
    let mut c = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for k in 0..d {
            c[(i * d + k, i * d + k)] = Complex64::new(g.prob(i, k), 0.0);
        }
    }
    for i in 0..d {
        for j in 0..d {
            if i != j {
                // factor(j, i) = conj(factor(i, j)), so the result is Hermitian
                c[(i * d + i, j * d + j)] = a.factor(i, j);
            }
        }
    }
    c
}

impl EtoChannel {
    pub fn new(
        g: TransitionMatrix,
        a: DampingFactors,
        h: Hamiltonian,
        beta: InverseTemperature,
    ) -> Result<Self> {
        let d = h.dim();
        if g.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: g.dim(),
            });
        }
        if a.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: a.dim(),
            });
        }
        let spectrum = bohr_spectrum(&h);
        if !spectrum.nondegenerate() {
            return Err(Error::DegenerateBohr(tol::BOHR_GAP));
        }
        // revalidate G against this (h, beta); the caller may have built it elsewhere
        let g = TransitionMatrix::new(g.matrix().clone(), &h, beta)?;
        let choi = assemble_choi(&g, &a);
        let min_eig = linalg::min_eigenvalue(&choi);
        if min_eig < -tol::PSD {
            return Err(Error::DmpViolation(min_eig));
        }
        Ok(Self {
            g,
            a,
            h,
            beta,
            choi,
        })
    }

    /// Channel that leaves every state untouched.
    pub fn identity(h: Hamiltonian, beta: InverseTemperature) -> Result<Self> {
        let d = h.dim();
        Self::new(
            TransitionMatrix::identity(d),
            DampingFactors::ones(d),
            h,
            beta,
        )
    }

    /// Channel that replaces every state by the Gibbs state.
    pub fn thermalizer(h: Hamiltonian, beta: InverseTemperature) -> Result<Self> {
        let d = h.dim();
        let g = TransitionMatrix::thermalizer(&h, beta);
        Self::new(g, DampingFactors::zeros(d), h, beta)
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn transitions(&self) -> &TransitionMatrix {
        &self.g
    }

    pub fn damping(&self) -> &DampingFactors {
        &self.a
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.h
    }

    pub fn beta(&self) -> InverseTemperature {
        self.beta
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    pub fn damping_matrix(&self) -> DampingMatrix {
        crate::coherence::damping_matrix(&self.g, &self.a).expect("dims fixed at construction")
    }

    /// Raw linear action on an arbitrary matrix.
    pub fn apply_matrix(&self, m: &CMat) -> CMat {
        let d = self.dim();
        debug_assert_eq!(m.nrows(), d);
        CMat::from_fn(d, d, |i, j| {
            if i == j {
                let p: f64 = (0..d).map(|k| self.g.prob(k, i) * m[(k, k)].re).sum();
                let ip: f64 = (0..d).map(|k| self.g.prob(k, i) * m[(k, k)].im).sum();
                Complex64::new(p, ip)
            } else {
                self.a.factor(i, j) * m[(i, j)]
            }
        })
    }

    /// Applies the channel to a state; the output is re-validated.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: rho.dim(),
            });
        }
        DensityMatrix::new(self.apply_matrix(rho.matrix()))
    }

    /// Composition: `second` runs after `first` (apply(compose) = second . first).
    /// Transition matrices multiply, damping factors multiply entrywise. Both
    /// channels must live on the same Hamiltonian and temperature.
    pub fn compose(first: &Self, second: &Self) -> Result<Self> {
        if first.h != second.h || first.beta != second.beta {
            return Err(Error::MismatchedSystems);
        }
        let d = first.dim();
        // row convention: (G_f G_s)[i][k] = sum_j p_f(i->j) p_s(j->k)
        let g = first.g.matrix() * second.g.matrix();
        let a = CMat::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(0.0, 0.0)
            } else {
                first.a.factor(i, j) * second.a.factor(i, j)
            }
        });
        Self::new(
            TransitionMatrix::new(g, &first.h, first.beta)?,
            DampingFactors::new(a)?,
            first.h.clone(),
            first.beta,
        )
    }

    /// Kraus operators from the eigendecomposition of the Choi matrix; eigenvalues
    /// below 1e-12 are dropped. Completeness sum K^dag K = I holds to 1e-9.
    pub fn kraus(&self) -> Vec<CMat> {
        let d = self.dim();
        let (vals, vecs) = linalg::hermitian_eigen(&self.choi);
        let mut ops = Vec::new();
        for (m, &lambda) in vals.iter().enumerate() {
            if lambda <= tol::KRAUS_EIG {
                continue;
            }
            let s = lambda.sqrt();
            let col = vecs.column(m);
            // column index i is the input, row index k the output: Choi row i d + k
            ops.push(CMat::from_fn(d, d, |k, i| col[i * d + k] * s));
        }
        ops
    }

    /// Checks commutation with the free evolution e^{-i H t} on seeded random states
    /// and times; true when the worst deviation stays within 1e-9.
    pub fn verify_covariance(&self, samples: usize, seed: u64) -> bool {
        covariance_violation(|m| self.apply_matrix(m), &self.h, samples, seed) <= tol::COVARIANCE
    }
}

/// Worst-case deviation of apply(U_t rho U_t^dag) from U_t apply(rho) U_t^dag over
/// seeded random full-rank states and times t in [0, 10], with U_t = e^{-i H t}.
/// Generic over the action so unconstructible (non-covariant) maps are testable.
pub fn covariance_violation<F>(apply: F, h: &Hamiltonian, samples: usize, seed: u64) -> f64
where
    F: Fn(&CMat) -> CMat,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = h.dim();
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let rho = linalg::random_density(d, &mut rng);
        let t: f64 = rand::Rng::random_range(&mut rng, 0.0..10.0);
        let phases: Vec<Complex64> = h
            .levels()
            .iter()
            .map(|e| Complex64::from_polar(1.0, -e * t))
            .collect();
        let rotated = CMat::from_fn(d, d, |i, j| phases[i] * rho[(i, j)] * phases[j].conj());
        let lhs = apply(&rotated);
        let out = apply(&rho);
        let rhs = CMat::from_fn(d, d, |i, j| phases[i] * out[(i, j)] * phases[j].conj());
        worst = worst.max(linalg::max_abs_diff(&lhs, &rhs));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::{dmp_check, qubit_kappa, qubit_transition_probs};
    use crate::state::{free_energy, gibbs_state};

    fn ln2_beta() -> InverseTemperature {
        InverseTemperature::new(2.0_f64.ln()).unwrap()
    }

    fn cooling_channel() -> EtoChannel {
        let beta = ln2_beta();
        let h = Hamiltonian::qubit(1.0).unwrap();
        let g = qubit_transition_probs(0.9, 0.8, beta, 1.0).unwrap();
        let kappa = qubit_kappa(0.9, 0.8, beta, 1.0).unwrap().kappa;
        EtoChannel::new(g, DampingFactors::uniform(2, kappa), h, beta).unwrap()
    }

    #[test]
    fn construction_rejects_excess_damping() {
        let beta = ln2_beta();
        let h = Hamiltonian::qubit(1.0).unwrap();
        let g = qubit_transition_probs(0.9, 0.8, beta, 1.0).unwrap();
        let kappa = qubit_kappa(0.9, 0.8, beta, 1.0).unwrap().kappa;
        let r = EtoChannel::new(g, DampingFactors::uniform(2, kappa + 0.01), h, beta);
        match r {
            Err(Error::DmpViolation(min)) => assert!(min < -1e-5),
            other => panic!("expected DmpViolation, got {other:?}"),
        }
    }

    #[test]
    fn construction_rejects_degenerate_bohr_spectra() {
        let h = Hamiltonian::new(&[0.0, 1.0, 2.0]).unwrap();
        let beta = InverseTemperature::new(1.0).unwrap();
        let r = EtoChannel::identity(h, beta);
        assert!(matches!(r, Err(Error::DegenerateBohr(_))));
    }

    #[test]
    fn choi_matches_damping_route_for_qubits() {
        let ch = cooling_channel();
        // Choi eigenvalues = damping-matrix eigenvalues plus the off-diagonal jump rates
        let mut expected = linalg::hermitian_eigenvalues(ch.damping_matrix().matrix());
        expected.push(ch.transitions().prob(0, 1));
        expected.push(ch.transitions().prob(1, 0));
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = linalg::hermitian_eigenvalues(ch.choi());
        assert_eq!(got.len(), expected.len());
        for (g, e) in got.iter().zip(expected.iter()) {
            assert!((g - e).abs() < 1e-12);
        }
        // trace d, unnormalized convention
        assert!((ch.choi().trace().re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn apply_moves_populations_and_damps_coherence() {
        let ch = cooling_channel();
        let kappa = qubit_kappa(0.9, 0.8, ln2_beta(), 1.0).unwrap().kappa;
        let chi = Complex64::new(0.05, 0.21);
        let rho = DensityMatrix::qubit(0.9, chi).unwrap();
        let out = ch.apply(&rho).unwrap();
        assert!((out.entry(0, 0).re - 0.8).abs() < 1e-12);
        assert!((out.entry(0, 1) - chi * kappa).norm() < 1e-12);
        // exact Hermiticity and trace
        assert_eq!(out.entry(1, 0), out.entry(0, 1).conj());
        assert!((out.matrix().trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gibbs_state_is_fixed() {
        let ch = cooling_channel();
        let tau = gibbs_state(ch.hamiltonian(), ch.beta());
        let out = ch.apply(&tau).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), tau.matrix()) < tol::GIBBS_FIXED);
    }

    #[test]
    fn identity_channel_is_identity() {
        let h = Hamiltonian::qubit(1.0).unwrap();
        let ch = EtoChannel::identity(h, ln2_beta()).unwrap();
        let rho = DensityMatrix::qubit(0.3, Complex64::new(0.1, -0.2)).unwrap();
        let out = ch.apply(&rho).unwrap();
        assert_eq!(linalg::max_abs_diff(out.matrix(), rho.matrix()), 0.0);
        // rank-one Choi: exactly one Kraus operator, the identity
        let ks = ch.kraus();
        assert_eq!(ks.len(), 1);
        let eye = CMat::identity(2, 2);
        // global phase is free in a Kraus operator
        let phase = ks[0][(0, 0)] / ks[0][(0, 0)].norm();
        let fixed = ks[0].map(|z| z / phase);
        assert!(linalg::max_abs_diff(&fixed, &eye) < 1e-10);
    }

    #[test]
    fn kraus_completeness_and_action_agree() {
        let ch = cooling_channel();
        let ks = ch.kraus();
        let d = ch.dim();
        let mut sum = CMat::zeros(d, d);
        for k in &ks {
            sum += k.adjoint() * k;
        }
        assert!(linalg::max_abs_diff(&sum, &CMat::identity(d, d)) < tol::KRAUS);
        // Kraus action reproduces apply
        let rho = DensityMatrix::qubit(0.62, Complex64::new(0.11, 0.07)).unwrap();
        let mut out = CMat::zeros(d, d);
        for k in &ks {
            out += k * rho.matrix() * k.adjoint();
        }
        assert!(linalg::max_abs_diff(&out, ch.apply(&rho).unwrap().matrix()) < 1e-12);
    }

    #[test]
    fn kraus_action_keeps_the_damping_phase() {
        // complex damping factor of maximal modulus; the Kraus route must rotate
        // the coherence the same way as the direct action, not the conjugate way
        let beta = ln2_beta();
        let h = Hamiltonian::qubit(1.0).unwrap();
        let g = qubit_transition_probs(0.9, 0.8, beta, 1.0).unwrap();
        let kappa = qubit_kappa(0.9, 0.8, beta, 1.0).unwrap().kappa;
        let alpha = Complex64::from_polar(kappa, 0.7);
        let mut am = CMat::zeros(2, 2);
        am[(0, 1)] = alpha;
        am[(1, 0)] = alpha.conj();
        let ch = EtoChannel::new(g, DampingFactors::new(am).unwrap(), h, beta).unwrap();
        let rho = DensityMatrix::qubit(0.9, Complex64::new(0.08, 0.13)).unwrap();
        let direct = ch.apply(&rho).unwrap();
        assert!((direct.entry(0, 1) - alpha * rho.entry(0, 1)).norm() < 1e-12);
        let mut via_kraus = CMat::zeros(2, 2);
        for k in ch.kraus() {
            via_kraus += &k * rho.matrix() * k.adjoint();
        }
        assert!(linalg::max_abs_diff(&via_kraus, direct.matrix()) < 1e-10);
    }

    #[test]
    fn cooling_channel_needs_three_kraus_operators() {
        // damping block contributes one unit eigenvector, both jump rates are
        // nonzero: rank 3, not 2
        let ch = cooling_channel();
        assert_eq!(ch.kraus().len(), 3);
    }

    #[test]
    fn compose_multiplies_both_parts() {
        let beta = ln2_beta();
        let h = Hamiltonian::qubit(1.0).unwrap();
        // half thermalization twice = three-quarter thermalization
        let half = partial_thermalizer(&h, beta, 0.5);
        let threequarter = partial_thermalizer(&h, beta, 0.75);
        let twice = EtoChannel::compose(&half, &half).unwrap();
        assert!(
            linalg::max_abs_diff(
                &CMat::from_fn(2, 2, |i, j| Complex64::new(
                    twice.transitions().prob(i, j),
                    0.0
                )),
                &CMat::from_fn(2, 2, |i, j| Complex64::new(
                    threequarter.transitions().prob(i, j),
                    0.0
                ))
            ) < 1e-12
        );
        assert!((twice.damping().factor(0, 1).re - 0.25).abs() < 1e-12);
        // compose order: apply(compose(f, s)) = s(f(rho))
        let rho = DensityMatrix::qubit(0.95, Complex64::new(0.1, 0.0)).unwrap();
        let ch2 = cooling_channel();
        let seq = ch2.apply(&half.apply(&rho).unwrap()).unwrap();
        let comp = EtoChannel::compose(&half, &ch2).unwrap().apply(&rho).unwrap();
        assert!(linalg::max_abs_diff(seq.matrix(), comp.matrix()) < 1e-12);
    }

    fn partial_thermalizer(h: &Hamiltonian, beta: InverseTemperature, lambda: f64) -> EtoChannel {
        let d = h.dim();
        let pi = crate::state::gibbs_populations(h, beta);
        let g = nalgebra::DMatrix::from_fn(d, d, |i, j| {
            lambda * pi[j] + if i == j { 1.0 - lambda } else { 0.0 }
        });
        EtoChannel::new(
            TransitionMatrix::new(g, h, beta).unwrap(),
            DampingFactors::uniform(d, 1.0 - lambda),
            h.clone(),
            beta,
        )
        .unwrap()
    }

    #[test]
    fn compose_rejects_mismatched_systems() {
        let beta = ln2_beta();
        let a = EtoChannel::identity(Hamiltonian::qubit(1.0).unwrap(), beta).unwrap();
        let b = EtoChannel::identity(Hamiltonian::qubit(2.0).unwrap(), beta).unwrap();
        assert!(matches!(
            EtoChannel::compose(&a, &b),
            Err(Error::MismatchedSystems)
        ));
    }

    #[test]
    fn built_channels_are_covariant_and_violations_are_caught() {
        let ch = cooling_channel();
        assert!(ch.verify_covariance(50, 1234));
        // a hand-built map that copies a coherence across frequencies is not covariant
        let h = Hamiltonian::qubit(1.0).unwrap();
        let bad = |m: &CMat| {
            let mut out = m.clone();
            out[(0, 1)] = m[(1, 0)];
            out[(1, 0)] = m[(0, 1)];
            out
        };
        assert!(covariance_violation(bad, &h, 50, 1234) > 1e-3);
    }

    #[test]
    fn free_energy_never_increases_along_channels() {
        let beta = ln2_beta();
        let h = Hamiltonian::qubit(1.0).unwrap();
        let ch = cooling_channel();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let rho = DensityMatrix::new(linalg::random_density(2, &mut rng)).unwrap();
            let out = ch.apply(&rho).unwrap();
            let before = free_energy(&rho, &h, beta).unwrap();
            let after = free_energy(&out, &h, beta).unwrap();
            assert!(after <= before + 1e-10);
        }
    }

    #[test]
    fn dmp_verdict_matches_choi_verdict_for_qubits() {
        // scan damping factors around the bound; both routes must agree
        let beta = ln2_beta();
        let h = Hamiltonian::qubit(1.0).unwrap();
        let g = qubit_transition_probs(0.85, 0.75, beta, 1.0).unwrap();
        for i in 0..40 {
            let alpha = i as f64 * 0.025;
            let a = DampingFactors::uniform(2, alpha);
            let by_dmp = dmp_check(&crate::coherence::damping_matrix(&g, &a).unwrap()).satisfied();
            let by_choi = EtoChannel::new(g.clone(), a, h.clone(), beta).is_ok();
            assert_eq!(by_dmp, by_choi, "alpha = {alpha}");
        }
    }
}
