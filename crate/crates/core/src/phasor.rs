//! Sinusoidal steady-state (phasor) Kron reduction.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::network::ValidatedNetwork;
use crate::numerics::{self, NumericsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhasorError {
    #[error("angular frequency must be positive, got {0}")]
    InvalidFrequency(f64),
    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Amplitude and phase of `|x| cos(ωt + θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phasor {
    magnitude: f64,
    phase: f64,
}

impl Phasor {
    /// Negative magnitudes are folded into the phase; the phase lands in `(-π, π]`.
    pub fn new(magnitude: f64, phase: f64) -> Self {
        Self::from_complex(Complex64::from_polar(magnitude, phase))
    }

    pub fn from_degrees(magnitude: f64, phase_deg: f64) -> Self {
        Self::new(magnitude, phase_deg.to_radians())
    }

    pub fn from_complex(z: Complex64) -> Self {
        let magnitude = z.norm();
        let phase = if magnitude == 0.0 { 0.0 } else { normalize_phase(z.arg()) };
        Phasor { magnitude, phase }
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    /// Radians in `(-π, π]`.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }
}

pub fn normalize_phase(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Nodal admittance `Y = B (R + jωL)^{-1} B^T`, rows boundary-first.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    pub y: DMatrix<Complex64>,
    pub omega: f64,
    pub n_boundary: usize,
}

impl AdmittanceMatrix {
    pub fn n_interior(&self) -> usize {
        self.y.nrows() - self.n_boundary
    }

    pub fn y11(&self) -> DMatrix<Complex64> {
        self.y.view((0, 0), (self.n_boundary, self.n_boundary)).into_owned()
    }

    pub fn y10(&self) -> DMatrix<Complex64> {
        self.y.view((0, self.n_boundary), (self.n_boundary, self.n_interior())).into_owned()
    }

    pub fn y00(&self) -> DMatrix<Complex64> {
        let n0 = self.n_interior();
        self.y.view((self.n_boundary, self.n_boundary), (n0, n0)).into_owned()
    }
}

pub fn admittance(network: &ValidatedNetwork, omega: f64) -> Result<AdmittanceMatrix, PhasorError> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(PhasorError::InvalidFrequency(omega));
    }
    let n = network.n_nodes();
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    // stamping edge by edge is B diag(1/z) B^T without forming B
    for e in network.edges() {
        let g = Complex64::new(e.r, omega * e.l).inv();
        y[(e.tail, e.tail)] += g;
        y[(e.head, e.head)] += g;
        y[(e.tail, e.head)] -= g;
        y[(e.head, e.tail)] -= g;
    }
    Ok(AdmittanceMatrix {
        y,
        omega,
        n_boundary: network.n_boundary(),
    })
}

/// Sufficient conditions for an invertible interior block:
/// `c1` all resistances positive, `c2` all inductances positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvertibilityConditions {
    pub c1: bool,
    pub c2: bool,
}

impl InvertibilityConditions {
    pub fn any(&self) -> bool {
        self.c1 || self.c2
    }
}

pub fn check_interior_invertibility(network: &ValidatedNetwork) -> InvertibilityConditions {
    InvertibilityConditions {
        c1: network.edges().iter().all(|e| e.r > 0.0),
        c2: network.edges().iter().all(|e| e.l > 0.0),
    }
}

/// Kron-reduced admittance and the map recovering interior voltages from boundary ones.
#[derive(Debug, Clone, PartialEq)]
pub struct KronReduction {
    /// `Y11 - Y10 Y00^{-1} Y10^T`.
    pub yr: DMatrix<Complex64>,
    /// `-Y00^{-1} Y10^T`.
    pub recovery: DMatrix<Complex64>,
}

pub fn kron_reduce(y: &AdmittanceMatrix) -> Result<KronReduction, PhasorError> {
    let nb = y.n_boundary;
    let n0 = y.n_interior();
    if n0 == 0 {
        return Ok(KronReduction {
            yr: y.y.clone(),
            recovery: DMatrix::zeros(0, nb),
        });
    }
    let y00_inv = numerics::checked_inverse(&y.y00())?;
    let y01 = y.y.view((nb, 0), (n0, nb)).into_owned();
    let recovery = -(y00_inv * y01);
    let yr = y.y11() + y.y10() * &recovery;
    Ok(KronReduction { yr, recovery })
}

pub fn phasor_solve_complex(yr: &DMatrix<Complex64>, v1: &DVector<Complex64>) -> Result<DVector<Complex64>, PhasorError> {
    if yr.ncols() != v1.len() {
        return Err(PhasorError::DimensionMismatch {
            expected: yr.ncols(),
            got: v1.len(),
        });
    }
    Ok(yr * v1)
}

/// Boundary current phasors `Yr v1`.
pub fn phasor_solve(yr: &DMatrix<Complex64>, v1: &[Phasor]) -> Result<Vec<Phasor>, PhasorError> {
    let v = DVector::from_iterator(v1.len(), v1.iter().map(Phasor::to_complex));
    Ok(phasor_solve_complex(yr, &v)?.iter().copied().map(Phasor::from_complex).collect())
}

/// Interior voltage phasors from boundary ones.
pub fn recover_interior(kron: &KronReduction, v1: &[Phasor]) -> Result<Vec<Phasor>, PhasorError> {
    if kron.recovery.ncols() != v1.len() {
        return Err(PhasorError::DimensionMismatch {
            expected: kron.recovery.ncols(),
            got: v1.len(),
        });
    }
    let v = DVector::from_iterator(v1.len(), v1.iter().map(Phasor::to_complex));
    Ok((&kron.recovery * v).iter().copied().map(Phasor::from_complex).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{validate, Edge, Network};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn wye(r: [f64; 3], l: [f64; 3]) -> ValidatedNetwork {
        validate(&Network {
            nodes: ["1", "2", "3", "4"].map(String::from).to_vec(),
            boundary: ["1", "2", "3"].map(String::from).to_vec(),
            edges: (0..3)
                .map(|k| Edge::new(format!("{}", k + 1), format!("{}", k + 1), "4", r[k], l[k]))
                .collect(),
        })
        .unwrap()
    }

    fn net_b(r: [f64; 2], l: [f64; 2]) -> ValidatedNetwork {
        validate(&Network {
            nodes: ["1", "2", "3"].map(String::from).to_vec(),
            boundary: ["1", "2"].map(String::from).to_vec(),
            edges: vec![Edge::new("e1", "1", "3", r[0], l[0]), Edge::new("e2", "3", "2", r[1], l[1])],
        })
        .unwrap()
    }

    #[test]
    fn phasor_normalizes_phase() {
        let p = Phasor::new(2.0, 3.0 * PI);
        assert!((p.phase() - PI).abs() < 1e-12);
        let p = Phasor::new(-1.0, 0.0);
        assert!((p.magnitude() - 1.0).abs() < 1e-15 && (p.phase() - PI).abs() < 1e-15);
        assert_eq!(Phasor::new(0.0, 1.0).phase(), 0.0);
        assert!((normalize_phase(-PI) - PI).abs() < 1e-15);
    }

    #[test]
    fn admittance_of_single_edge() {
        let net = validate(&Network {
            nodes: vec!["1".into(), "2".into()],
            boundary: vec!["1".into(), "2".into()],
            edges: vec![Edge::new("e", "1", "2", 1.0, 1.0)],
        })
        .unwrap();
        let y = admittance(&net, 1.0).unwrap();
        let g = c(0.5, -0.5);
        assert!((y.y[(0, 0)] - g).norm() < 1e-15);
        assert!((y.y[(0, 1)] + g).norm() < 1e-15);
        assert!((y.y[(1, 1)] - g).norm() < 1e-15);
        assert!(matches!(admittance(&net, 0.0), Err(PhasorError::InvalidFrequency(_))));
    }

    #[test]
    fn admittance_is_laplacian_of_branch_admittances() {
        let net = net_b([0.3, 0.8], [0.5, 0.2]);
        let omega = 2.0;
        let y = admittance(&net, omega).unwrap();
        let y1 = c(0.3, omega * 0.5).inv();
        let y2 = c(0.8, omega * 0.2).inv();
        // rows: 1, 2, 3 (interior)
        let expected = DMatrix::from_row_slice(3, 3, &[y1, c(0.0, 0.0), -y1, c(0.0, 0.0), y2, -y2, -y1, -y2, y1 + y2]);
        assert!(numerics::max_abs_complex(&(y.y.clone() - expected)) < 1e-15);
        for row in y.y.row_iter() {
            assert!(row.sum().norm() < 1e-12);
        }
        assert!(numerics::max_abs_complex(&(y.y.clone() - y.y.transpose())) == 0.0);
    }

    #[test]
    fn purely_inductive_admittance_is_scaled_inductance_laplacian() {
        let net = wye([0.0; 3], [0.5, 0.7, 0.9]);
        let omega = 3.0;
        let y = admittance(&net, omega).unwrap();
        let b = net.incidence().to_real();
        let l_inv = DMatrix::from_diagonal(&net.inductances().map(|l| 1.0 / l));
        let lt = (&b * l_inv * b.transpose()).map(|x| c(x, 0.0) / c(0.0, omega));
        assert!(numerics::max_abs_complex(&(y.y - lt)) < 1e-14);
    }

    #[test]
    fn invertibility_conditions() {
        let net = wye([0.98, 0.99, 0.58], [0.55, 0.64, 0.77]);
        assert_eq!(check_interior_invertibility(&net), InvertibilityConditions { c1: true, c2: true });
        let net = wye([0.0, 0.99, 0.58], [0.55, 0.64, 0.77]);
        let cond = check_interior_invertibility(&net);
        assert_eq!(cond, InvertibilityConditions { c1: false, c2: true });
        assert!(kron_reduce(&admittance(&net, 1.0).unwrap()).is_ok());
    }

    #[test]
    fn balanced_wye_reduces_to_delta_of_three_z() {
        let net = wye([1.0; 3], [2.0; 3]);
        let omega = 1.7;
        let z = c(1.0, 2.0 * omega);
        let kr = kron_reduce(&admittance(&net, omega).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!((kr.yr[(i, j)] + (z * 3.0).inv()).norm() < 1e-14);
                }
            }
        }
        let v1 = [Phasor::new(1.0, 0.0), Phasor::new(0.0, 0.0), Phasor::new(0.0, 0.0)];
        let i1 = phasor_solve(&kr.yr, &v1).unwrap();
        let expected = [z.inv() * (2.0 / 3.0), -z.inv() / 3.0, -z.inv() / 3.0];
        for (got, want) in i1.iter().zip(expected) {
            assert!((got.to_complex() - want).norm() < 1e-14);
        }
        // interior voltage of a balanced wye is the mean of the boundary voltages
        let v0 = recover_interior(&kr, &v1).unwrap();
        assert!((v0[0].to_complex() - c(1.0 / 3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn series_path_reduces_to_series_impedance() {
        let net = net_b([0.3, 0.8], [0.5, 0.2]);
        let omega = 2.0;
        let z = c(0.3 + 0.8, omega * (0.5 + 0.2));
        let kr = kron_reduce(&admittance(&net, omega).unwrap()).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[z.inv(), -z.inv(), -z.inv(), z.inv()]);
        assert!(numerics::max_abs_complex(&(kr.yr - expected)) < 1e-14);
    }

    #[test]
    fn no_interior_nodes_is_identity() {
        let net = validate(&Network {
            nodes: vec!["1".into(), "2".into()],
            boundary: vec!["1".into(), "2".into()],
            edges: vec![Edge::new("e", "1", "2", 1.0, 1.0)],
        })
        .unwrap();
        let y = admittance(&net, 1.0).unwrap();
        let kr = kron_reduce(&y).unwrap();
        assert_eq!(kr.yr, y.y);
        assert_eq!(kr.recovery.shape(), (0, 2));
    }

    #[test]
    fn equal_boundary_voltages_drive_no_current() {
        let net = wye([0.98, 0.99, 0.58], [0.55, 0.64, 0.77]);
        let kr = kron_reduce(&admittance(&net, 9.0).unwrap()).unwrap();
        let v1 = vec![Phasor::from_degrees(5.0, 40.0); 3];
        for i in phasor_solve(&kr.yr, &v1).unwrap() {
            assert!(i.magnitude() < 1e-12);
        }
        assert!(matches!(
            phasor_solve(&kr.yr, &v1[..2]),
            Err(PhasorError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }
}
