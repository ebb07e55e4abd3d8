//! On-disk JSON formats and the conversions between them and library types.
//!
//! Two file shapes exist: a state file `{ "energies", "beta", "rho": {"re", "im"} }`
//! and a channel file `{ "G", "alpha": {"re", "im"}, "energies", "beta" }`. Every
//! matrix is row-major; the `im` part may be omitted on input and defaults to zero,
//! but is always written on output so files round-trip byte-identically. Serde
//! serializes struct fields in declaration order and prints floats in shortest
//! round-trip form, which together make the emitted JSON deterministic.

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thermoto::linalg::CMat;
use thermoto::{DampingFactors, DensityMatrix, EtoChannel, Hamiltonian, InverseTemperature, TransitionMatrix};

/// A complex matrix as parallel real and imaginary parts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexMatrix {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl ComplexMatrix {
    pub fn to_cmat(&self) -> Result<CMat> {
        let d = self.re.len();
        if d == 0 {
            bail!("matrix field 're' is empty");
        }
        for (i, row) in self.re.iter().enumerate() {
            if row.len() != d {
                bail!("matrix row {i} has {} entries, expected {d}", row.len());
            }
        }
        if let Some(im) = &self.im {
            if im.len() != d || im.iter().any(|row| row.len() != d) {
                bail!("imaginary part does not match the {d}x{d} real part");
            }
        }
        let mut m = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let re = self.re[i][j];
                let im = self.im.as_ref().map_or(0.0, |rows| rows[i][j]);
                if !re.is_finite() || !im.is_finite() {
                    bail!("matrix entry ({i}, {j}) is not finite");
                }
                m[(i, j)] = Complex64::new(re, im);
            }
        }
        Ok(m)
    }

    pub fn from_cmat(m: &CMat) -> Self {
        let d = m.nrows();
        let part = |f: fn(&Complex64) -> f64| {
            (0..d)
                .map(|i| (0..d).map(|j| f(&m[(i, j)])).collect())
                .collect::<Vec<Vec<f64>>>()
        };
        ComplexMatrix {
            re: part(|z| z.re),
            im: Some(part(|z| z.im)),
        }
    }
}

/// A density matrix together with the system it lives on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub energies: Vec<f64>,
    pub beta: f64,
    pub rho: ComplexMatrix,
}

impl StateFile {
    pub fn into_parts(self) -> Result<(Hamiltonian, InverseTemperature, DensityMatrix)> {
        let h = Hamiltonian::new(&self.energies)?;
        let beta = InverseTemperature::new(self.beta)?;
        let rho = DensityMatrix::new(self.rho.to_cmat()?)?;
        if rho.dim() != h.dim() {
            bail!(
                "state is {}x{} but lists {} energies",
                rho.dim(),
                rho.dim(),
                h.dim()
            );
        }
        Ok((h, beta, rho))
    }

    pub fn from_parts(h: &Hamiltonian, beta: InverseTemperature, rho: &DensityMatrix) -> Self {
        StateFile {
            energies: h.levels().to_vec(),
            beta: beta.value(),
            rho: ComplexMatrix::from_cmat(rho.matrix()),
        }
    }
}

/// A covariant channel: stochastic transition part and damping factors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    #[serde(rename = "G")]
    pub g: Vec<Vec<f64>>,
    pub alpha: ComplexMatrix,
    pub energies: Vec<f64>,
    pub beta: f64,
}

impl ChannelFile {
    pub fn into_channel(self) -> Result<EtoChannel> {
        let h = Hamiltonian::new(&self.energies)?;
        let beta = InverseTemperature::new(self.beta)?;
        let d = self.g.len();
        if d == 0 || self.g.iter().any(|row| row.len() != d) {
            bail!("field 'G' must be a square matrix");
        }
        let mut g = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                g[(i, j)] = self.g[i][j];
            }
        }
        let g = TransitionMatrix::new(g, &h, beta)?;
        let a = DampingFactors::new(self.alpha.to_cmat()?)?;
        Ok(EtoChannel::new(g, a, h, beta)?)
    }

    pub fn from_channel(ch: &EtoChannel) -> Self {
        let d = ch.dim();
        let g = (0..d)
            .map(|i| (0..d).map(|j| ch.transitions().prob(i, j)).collect())
            .collect();
        ChannelFile {
            g,
            alpha: ComplexMatrix::from_cmat(ch.damping().matrix()),
            energies: ch.hamiltonian().levels().to_vec(),
            beta: ch.beta().value(),
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

/// Writes text to stdout, surfacing write failures (a closed pipe included) as
/// errors instead of panics; main exits quietly when the reader went away.
pub fn emit_text(text: &str) -> Result<()> {
    use std::io::Write;
    std::io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

/// Prints a report as pretty JSON on stdout with a trailing newline.
pub fn emit_json<T: Serialize>(value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit_text(&text)
}
