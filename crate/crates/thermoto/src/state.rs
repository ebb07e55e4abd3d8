//! System-side primitives: diagonal Hamiltonians, Bohr spectra, validated density
//! matrices, Gibbs states, entropy and free energy.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::tol;

/// Diagonal Hamiltonian with energies sorted ascending. Energies are shifted at
/// construction so the ground level sits at zero; the original ground energy is kept
/// as `offset`. Input must already be nondecreasing: silently permuting levels would
/// break the index correspondence with population vectors supplied alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    levels: Vec<f64>,
    offset: f64,
}

impl Hamiltonian {
    pub fn new(levels: &[f64]) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::TooFewLevels(levels.len()));
        }
        if levels.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFiniteEnergy);
        }
        for (k, pair) in levels.windows(2).enumerate() {
            if pair[1] < pair[0] {
                return Err(Error::UnsortedEnergies(k + 1));
            }
        }
        let offset = levels[0];
        let levels = levels.iter().map(|e| e - offset).collect();
        Ok(Self { levels, offset })
    }

    /// Qubit with gap `de > 0`.
    pub fn qubit(de: f64) -> Result<Self> {
        if de <= 0.0 || !de.is_finite() {
            return Err(Error::ParameterDomain {
                name: "de",
                value: de,
                domain: "(0, inf)",
            });
        }
        Self::new(&[0.0, de])
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    /// Shifted energies, ascending, with `levels()[0] == 0`.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> f64 {
        self.levels[i]
    }

    /// E_j - E_i.
    pub fn gap(&self, i: usize, j: usize) -> f64 {
        self.levels[j] - self.levels[i]
    }

    /// Ground energy of the original, unshifted input.
    pub fn offset(&self) -> f64 {
        self.offset
    }
}

/// Inverse temperature, finite and >= 0 (zero means infinite temperature).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseTemperature(f64);

impl InverseTemperature {
    pub fn new(beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidBeta(beta));
        }
        Ok(Self(beta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Positive transition frequencies E_j - E_i (i < j), sorted ascending, plus the
/// flag deciding whether covariant channels on this Hamiltonian damp each coherence
/// independently: that needs all levels distinct and all frequencies distinct.
#[derive(Debug, Clone)]
pub struct BohrSpectrum {
    frequencies: Vec<f64>,
    nondegenerate: bool,
}

impl BohrSpectrum {
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn nondegenerate(&self) -> bool {
        self.nondegenerate
    }
}

pub fn bohr_spectrum(h: &Hamiltonian) -> BohrSpectrum {
    let d = h.dim();
    let mut frequencies = Vec::with_capacity(d * (d - 1) / 2);
    for i in 0..d {
        for j in (i + 1)..d {
            frequencies.push(h.gap(i, j));
        }
    }
    frequencies.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut nondegenerate = frequencies.iter().all(|w| *w > tol::BOHR_GAP);
    for pair in frequencies.windows(2) {
        if pair[1] - pair[0] <= tol::BOHR_GAP {
            nondegenerate = false;
        }
    }
    BohrSpectrum {
        frequencies,
        nondegenerate,
    }
}

/// Validated density matrix: square, Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    m: CMat,
}

/// Validates and wraps a raw matrix. Tolerances: hermiticity 1e-10, trace 1e-10,
/// eigenvalue floor -1e-9.
pub fn assert_state(m: CMat) -> Result<DensityMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let d = m.nrows();
    if d == 0 {
        return Err(Error::TooFewLevels(0));
    }
    let mut asym = 0.0_f64;
    for i in 0..d {
        for j in i..d {
            asym = asym.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if asym > tol::HERMITICITY {
        return Err(Error::NotHermitian(asym));
    }
    let tr_dev = (m.trace().re - 1.0).abs();
    if tr_dev > tol::TRACE {
        return Err(Error::InvalidTrace(tr_dev));
    }
    let min_eig = linalg::min_eigenvalue(&m);
    if min_eig < -tol::PSD {
        return Err(Error::NotPsd(min_eig));
    }
    Ok(DensityMatrix { m })
}

impl DensityMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        assert_state(m)
    }

    /// Diagonal state from a population vector.
    pub fn from_populations(p: &[f64]) -> Result<Self> {
        for (index, &value) in p.iter().enumerate() {
            if !(-tol::ENTRY..=1.0 + tol::ENTRY).contains(&value) || !value.is_finite() {
                return Err(Error::PopulationOutOfRange { index, value });
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > tol::TRACE {
            return Err(Error::PopulationSum(sum));
        }
        let d = p.len();
        let m = CMat::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(p[i].clamp(0.0, 1.0), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        assert_state(m)
    }

    /// Qubit with ground population `p` and off-diagonal element `chi` at (0, 1).
    pub fn qubit(p: f64, chi: Complex64) -> Result<Self> {
        let m = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => Complex64::new(p, 0.0),
            (1, 1) => Complex64::new(1.0 - p, 0.0),
            (0, 1) => chi,
            _ => chi.conj(),
        });
        assert_state(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    /// Real parts of the diagonal.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }
}

/// Thermal state exp(-beta H)/Z as a diagonal density matrix.
pub fn gibbs_state(h: &Hamiltonian, beta: InverseTemperature) -> DensityMatrix {
    let p = gibbs_populations(h, beta);
    DensityMatrix::from_populations(&p).expect("Gibbs populations form a state")
}

/// Normalized Boltzmann weights e^{-beta E_i} / Z.
pub fn gibbs_populations(h: &Hamiltonian, beta: InverseTemperature) -> Vec<f64> {
    let w: Vec<f64> = h.levels().iter().map(|e| (-beta.value() * e).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

/// Partition sum over the shifted spectrum.
pub fn partition_sum(h: &Hamiltonian, beta: InverseTemperature) -> f64 {
    h.levels().iter().map(|e| (-beta.value() * e).exp()).sum()
}

/// Von Neumann entropy -tr(rho ln rho) in nats. Eigenvalues below 1e-300 contribute
/// zero, matching the x ln x -> 0 limit.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    linalg::hermitian_eigenvalues(rho.matrix())
        .into_iter()
        .filter(|lambda| *lambda > 1e-300)
        .map(|lambda| -lambda * lambda.ln())
        .sum()
}

/// Free energy tr(H rho) - S(rho)/beta against the shifted spectrum. The constant
/// offset tr(rho) * E_ground drops out of every feasibility comparison, so it is not
/// added back. Undefined at beta = 0.
pub fn free_energy(rho: &DensityMatrix, h: &Hamiltonian, beta: InverseTemperature) -> Result<f64> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            actual: rho.dim(),
        });
    }
    if beta.value() == 0.0 {
        return Err(Error::InfiniteTemperature);
    }
    let energy: f64 = h
        .levels()
        .iter()
        .enumerate()
        .map(|(i, e)| e * rho.entry(i, i).re)
        .sum();
    Ok(energy - von_neumann_entropy(rho) / beta.value())
}
