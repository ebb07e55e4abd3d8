//! Thermo-majorization: the beta ordering, piecewise-linear majorization curves,
//! curve dominance, and the closed-form qubit classifier for diagonal transitions.
//!
//! For diagonal (energy-incoherent) states, a transition is feasible under thermal
//! operations iff the source curve lies nowhere below the target curve. Both curves
//! must be built against the same Hamiltonian and inverse temperature; comparing
//! mismatched partition sums is an error, not a false.

use crate::error::{Error, Result};
use crate::state::{Hamiltonian, InverseTemperature};
use crate::tol;

/// Populations rearranged into beta order: descending p_i e^{beta E_i}, ties broken
/// by ascending energy so the ordering is deterministic.
#[derive(Debug, Clone)]
pub struct BetaOrderedSpectrum {
    /// (population, boltzmann weight e^{-beta E}) in beta order.
    entries: Vec<(f64, f64)>,
    /// Original index of each ordered entry.
    permutation: Vec<usize>,
    z: f64,
}

impl BetaOrderedSpectrum {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// (population, weight) at ordered position k.
    pub fn entry(&self, k: usize) -> (f64, f64) {
        self.entries[k]
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn partition_sum(&self) -> f64 {
        self.z
    }
}

/// Sorts populations into beta order against (h, beta).
///
/// The comparison p_i e^{beta E_i} >= p_j e^{beta E_j} is evaluated as
/// p_i w_j >= p_j w_i with w = e^{-beta E}, which cannot overflow since w <= 1.
pub fn beta_order(
    populations: &[f64],
    h: &Hamiltonian,
    beta: InverseTemperature,
) -> Result<BetaOrderedSpectrum> {
    if populations.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            actual: populations.len(),
        });
    }
    for (index, &value) in populations.iter().enumerate() {
        if !(-tol::ENTRY..=1.0 + tol::ENTRY).contains(&value) || !value.is_finite() {
            return Err(Error::PopulationOutOfRange { index, value });
        }
    }
    let sum: f64 = populations.iter().sum();
    if (sum - 1.0).abs() > tol::TRACE {
        return Err(Error::PopulationSum(sum));
    }
    let p: Vec<f64> = populations.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let w: Vec<f64> = h.levels().iter().map(|e| (-beta.value() * e).exp()).collect();
    let mut permutation: Vec<usize> = (0..p.len()).collect();
    permutation.sort_by(|&a, &b| {
        // descending key p/w, cross-multiplied; ties by ascending energy, and the
        // input is energy-sorted so index order settles them
        let lhs = p[a] * w[b];
        let rhs = p[b] * w[a];
        rhs.partial_cmp(&lhs).unwrap().then(a.cmp(&b))
    });
    let entries = permutation.iter().map(|&i| (p[i], w[i])).collect();
    let z = w.iter().sum();
    Ok(BetaOrderedSpectrum {
        entries,
        permutation,
        z,
    })
}

/// Piecewise-linear concave majorization curve from (0, 0) to (Z, 1). Breakpoint k
/// accumulates the k largest-ratio levels: x = sum of weights, y = sum of populations.
#[derive(Debug, Clone)]
pub struct ThermoCurve {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl ThermoCurve {
    pub fn partition_sum(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// Breakpoints including both endpoints.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.xs.iter().copied().zip(self.ys.iter().copied()).collect()
    }

    /// Linear interpolation; x is clamped to [0, Z].
    pub fn eval(&self, x: f64) -> f64 {
        let z = self.partition_sum();
        let x = x.clamp(0.0, z);
        // first breakpoint at or beyond x
        let hi = self.xs.partition_point(|&bx| bx < x);
        if hi == 0 {
            return self.ys[0];
        }
        let (x0, y0) = (self.xs[hi - 1], self.ys[hi - 1]);
        let (x1, y1) = (self.xs[hi], self.ys[hi]);
        if x1 == x0 {
            return y1.max(y0);
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Two-column CSV with an x,y header, one breakpoint per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for (x, y) in self.points() {
            out.push_str(&format!("{x},{y}\n"));
        }
        out
    }
}

/// Builds the majorization curve of a beta-ordered spectrum. Heights are cumulative
/// sums normalized by the total population so the terminal point is exactly (Z, 1).
pub fn build_curve(spectrum: &BetaOrderedSpectrum) -> ThermoCurve {
    let n = spectrum.len();
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    xs.push(0.0);
    ys.push(0.0);
    let total: f64 = (0..n).map(|k| spectrum.entry(k).0).sum();
    let mut cx = 0.0;
    let mut cy = 0.0;
    for k in 0..n {
        let (p, w) = spectrum.entry(k);
        cx += w;
        cy += p;
        xs.push(cx);
        ys.push(cy / total);
    }
    ThermoCurve { xs, ys }
}

/// True when `upper` lies nowhere below `lower`, checked at the union of both
/// breakpoint sets (sufficient for piecewise-linear curves) with slack 1e-9.
/// Mismatched partition sums mean the curves live over different (H, beta) and
/// cannot be compared.
pub fn curve_dominates(upper: &ThermoCurve, lower: &ThermoCurve) -> Result<bool> {
    let zu = upper.partition_sum();
    let zl = lower.partition_sum();
    if (zu - zl).abs() > tol::CURVE * zu.abs().max(1.0) {
        return Err(Error::MismatchedPartition(zu, zl));
    }
    let mut ok = true;
    for &x in upper.xs.iter().chain(lower.xs.iter()) {
        if upper.eval(x) < lower.eval(x) - tol::CURVE {
            ok = false;
            break;
        }
    }
    Ok(ok)
}

/// Which side of the thermal point each endpoint of a qubit transition sits on.
/// Ground populations at or above the Gibbs ground population r = 1/(1 + e^{-beta dE})
/// are "cold" (the beta order keeps the ground level first); below r they are "hot".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitCase {
    /// Both cold: feasible iff p >= q.
    BothCold,
    /// Both hot: feasible iff p <= q.
    BothHot,
    /// Cold source, hot target: feasible iff p e^{-beta dE} >= 1 - q.
    ColdToHot,
    /// Hot source, cold target: feasible iff p e^{-beta dE} <= 1 - q.
    HotToCold,
}

impl QubitCase {
    pub fn label(self) -> &'static str {
        match self {
            QubitCase::BothCold => "both-cold",
            QubitCase::BothHot => "both-hot",
            QubitCase::ColdToHot => "cold-to-hot",
            QubitCase::HotToCold => "hot-to-cold",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QubitDiagonalVerdict {
    pub feasible: bool,
    pub case: QubitCase,
}

/// Closed-form feasibility of the diagonal qubit transition p -> q (ground
/// populations) at inverse temperature beta and gap dE. Exact comparisons, no slack:
/// this classifier is the reference the curve construction is tested against.
pub fn qubit_diagonal_feasible(
    p: f64,
    q: f64,
    beta: InverseTemperature,
    de: f64,
) -> Result<QubitDiagonalVerdict> {
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
    let w = (-beta.value() * de).exp();
    let r = 1.0 / (1.0 + w);
    let (case, feasible) = match (p >= r, q >= r) {
        (true, true) => (QubitCase::BothCold, p >= q),
        (false, false) => (QubitCase::BothHot, p <= q),
        (true, false) => (QubitCase::ColdToHot, p * w >= 1.0 - q),
        (false, true) => (QubitCase::HotToCold, p * w <= 1.0 - q),
    };
    Ok(QubitDiagonalVerdict { feasible, case })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::gibbs_populations;

    fn curve_for(p: &[f64], h: &Hamiltonian, beta: InverseTemperature) -> ThermoCurve {
        build_curve(&beta_order(p, h, beta).unwrap())
    }

    #[test]
    fn beta_order_sorts_by_rescaled_population() {
        // weights (1, 1/2, 1/4); populations (0.2, 0.5, 0.3) rescale to (0.2, 1.0, 1.2)
        let h = Hamiltonian::new(&[0.0, 1.0, 2.0]).unwrap();
        let beta = InverseTemperature::new(2.0_f64.ln()).unwrap();
        let s = beta_order(&[0.2, 0.5, 0.3], &h, beta).unwrap();
        assert_eq!(s.permutation(), &[2, 1, 0]);
        assert!((s.partition_sum() - 1.75).abs() < 1e-15);
    }

    #[test]
    fn beta_order_breaks_ties_by_energy() {
        // Gibbs populations rescale to a constant, so the order must fall back to energy
        let h = Hamiltonian::new(&[0.0, 0.7, 1.3]).unwrap();
        let beta = InverseTemperature::new(1.1).unwrap();
        let g = gibbs_populations(&h, beta);
        let s = beta_order(&g, &h, beta).unwrap();
        assert_eq!(s.permutation(), &[0, 1, 2]);
    }

    #[test]
    fn beta_order_validates_input() {
        let h = Hamiltonian::new(&[0.0, 1.0]).unwrap();
        let beta = InverseTemperature::new(1.0).unwrap();
        assert!(matches!(
            beta_order(&[0.5, 0.5, 0.0], &h, beta),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            beta_order(&[0.4, 0.4], &h, beta),
            Err(Error::PopulationSum(_))
        ));
        assert!(matches!(
            beta_order(&[1.2, -0.2], &h, beta),
            Err(Error::PopulationOutOfRange { .. })
        ));
    }

    #[test]
    fn curve_endpoints_and_concavity() {
        let h = Hamiltonian::new(&[0.0, 0.4, 1.9]).unwrap();
        let beta = InverseTemperature::new(0.8).unwrap();
        let c = curve_for(&[0.1, 0.6, 0.3], &h, beta);
        let pts = c.points();
        assert_eq!(pts[0], (0.0, 0.0));
        let (zx, zy) = *pts.last().unwrap();
        assert!((zx - c.partition_sum()).abs() == 0.0);
        assert_eq!(zy, 1.0);
        // slopes non-increasing
        let mut prev_slope = f64::INFINITY;
        for pair in pts.windows(2) {
            let slope = (pair[1].1 - pair[0].1) / (pair[1].0 - pair[0].0);
            assert!(slope <= prev_slope + 1e-12);
            prev_slope = slope;
        }
    }

    #[test]
    fn eval_interpolates_and_clamps() {
        let h = Hamiltonian::new(&[0.0, 1.0]).unwrap();
        let beta = InverseTemperature::new(0.0).unwrap();
        // maximally mixed at beta = 0: straight line from (0,0) to (2,1)
        let c = curve_for(&[0.5, 0.5], &h, beta);
        assert!((c.eval(1.0) - 0.5).abs() < 1e-15);
        assert_eq!(c.eval(-5.0), 0.0);
        assert_eq!(c.eval(99.0), 1.0);
    }

    #[test]
    fn gibbs_curve_is_the_diagonal_and_is_dominated() {
        let h = Hamiltonian::new(&[0.0, 0.9, 2.2]).unwrap();
        let beta = InverseTemperature::new(1.3).unwrap();
        let tau = curve_for(&gibbs_populations(&h, beta), &h, beta);
        let z = tau.partition_sum();
        for k in 0..=10 {
            let x = z * k as f64 / 10.0;
            assert!((tau.eval(x) - x / z).abs() < 1e-12);
        }
        // every state's curve dominates the Gibbs curve
        for p in [[1.0, 0.0, 0.0], [0.2, 0.3, 0.5], [0.1, 0.8, 0.1]] {
            let c = curve_for(&p, &h, beta);
            assert!(curve_dominates(&c, &tau).unwrap());
        }
    }

    #[test]
    fn dominance_is_reflexive_and_transitive_on_samples() {
        let h = Hamiltonian::new(&[0.0, 0.5, 1.0]).unwrap();
        let beta = InverseTemperature::new(0.7).unwrap();
        let states = [
            [0.7, 0.2, 0.1],
            [0.5, 0.3, 0.2],
            [0.4, 0.35, 0.25],
            [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        ];
        let curves: Vec<ThermoCurve> = states.iter().map(|p| curve_for(p, &h, beta)).collect();
        for c in &curves {
            assert!(curve_dominates(c, c).unwrap());
        }
        for a in &curves {
            for b in &curves {
                for c in &curves {
                    let ab = curve_dominates(a, b).unwrap();
                    let bc = curve_dominates(b, c).unwrap();
                    if ab && bc {
                        assert!(curve_dominates(a, c).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn mismatched_partition_sums_error() {
        let beta = InverseTemperature::new(1.0).unwrap();
        let h1 = Hamiltonian::new(&[0.0, 1.0]).unwrap();
        let h2 = Hamiltonian::new(&[0.0, 2.0]).unwrap();
        let c1 = curve_for(&[0.6, 0.4], &h1, beta);
        let c2 = curve_for(&[0.6, 0.4], &h2, beta);
        assert!(matches!(
            curve_dominates(&c1, &c2),
            Err(Error::MismatchedPartition(_, _))
        ));
    }

    #[test]
    fn qubit_classifier_known_points() {
        let beta = InverseTemperature::new(1.0).unwrap();
        let de = 2.0_f64.ln(); // e^{beta dE} = 2, r = 2/3
        // cooling toward Gibbs from above is feasible, heating above the start is not
        assert!(qubit_diagonal_feasible(0.9, 0.8, beta, de).unwrap().feasible);
        assert!(!qubit_diagonal_feasible(0.8, 0.9, beta, de).unwrap().feasible);
        // population inversion decay: hot stays hot
        let v = qubit_diagonal_feasible(0.1, 0.4, beta, de).unwrap();
        assert_eq!(v.case, QubitCase::BothHot);
        assert!(v.feasible);
        // crossing the thermal point: p = 0.7 reaches exactly down to 1 - 0.7/2 = 0.65
        let v = qubit_diagonal_feasible(0.7, 0.65, beta, de).unwrap();
        assert_eq!(v.case, QubitCase::ColdToHot);
        assert!(v.feasible);
        assert!(!qubit_diagonal_feasible(0.7, 0.6, beta, de).unwrap().feasible);
        // excited pure state can be dumped all the way to the ground state
        let v = qubit_diagonal_feasible(0.0, 1.0, beta, de).unwrap();
        assert_eq!(v.case, QubitCase::HotToCold);
        assert!(v.feasible);
    }

    #[test]
    fn qubit_classifier_rejects_bad_domain() {
        let beta = InverseTemperature::new(1.0).unwrap();
        assert!(qubit_diagonal_feasible(1.2, 0.5, beta, 1.0).is_err());
        assert!(qubit_diagonal_feasible(0.5, 0.5, beta, 0.0).is_err());
    }

    #[test]
    fn classifier_agrees_with_curves_on_a_grid() {
        // denser grids run in the acceptance suite; this is a fast smoke version
        let beta = InverseTemperature::new(1.0).unwrap();
        let de = 0.9;
        let h = Hamiltonian::new(&[0.0, de]).unwrap();
        for ip in 0..=20 {
            for iq in 0..=20 {
                let p = ip as f64 / 20.0;
                let q = iq as f64 / 20.0;
                let fp = curve_for(&[p, 1.0 - p], &h, beta);
                let fq = curve_for(&[q, 1.0 - q], &h, beta);
                let by_curve = curve_dominates(&fp, &fq).unwrap();
                let by_case = qubit_diagonal_feasible(p, q, beta, de).unwrap().feasible;
                assert_eq!(by_curve, by_case, "p = {p}, q = {q}");
            }
        }
    }

    #[test]
    fn csv_round_trips_breakpoints() {
        let h = Hamiltonian::new(&[0.0, 1.0]).unwrap();
        let beta = InverseTemperature::new(1.0).unwrap();
        let c = curve_for(&[0.75, 0.25], &h, beta);
        let csv = c.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,y"));
        let parsed: Vec<(f64, f64)> = lines
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        assert_eq!(parsed, c.points());
    }
}
