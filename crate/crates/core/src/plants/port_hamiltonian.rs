//! First-order port-Hamiltonian operators in one spatial variable
//! (`dx/dt = P1 d/dz (H x) + P0 H x`) and their boundary port algebra.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{FunnelError, Result};

type Density = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
pub struct PortHamiltonianSpec {
    pub d: usize,
    pub p1: DMatrix<f64>,
    pub p0: DMatrix<f64>,
    /// Hamiltonian density `z -> H(z)`.
    pub hamiltonian: Density,
    pub wb: DMatrix<f64>,
    pub wc: DMatrix<f64>,
    pub interval: (f64, f64),
}

impl fmt::Debug for PortHamiltonianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PortHamiltonianSpec")
            .field("d", &self.d)
            .field("p1", &self.p1)
            .field("p0", &self.p0)
            .field("wb", &self.wb)
            .field("wc", &self.wc)
            .field("interval", &self.interval)
            .finish_non_exhaustive()
    }
}

/// Spectral bounds `m I <= H(z) <= M I` observed on the mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Boundary flow and effort `(f; e) = R0 ((Hx)(b); (Hx)(a))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPortValues {
    pub f_boundary: Vec<f64>,
    pub e_boundary: Vec<f64>,
}

impl BoundaryPortValues {
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(
            2 * self.f_boundary.len(),
            self.f_boundary.iter().chain(&self.e_boundary).copied(),
        )
    }
}

const SYMMETRY_TOL: f64 = 1e-12;

fn sym_eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    (m - m.transpose()).amax() <= SYMMETRY_TOL * scale
}

impl PortHamiltonianSpec {
    /// Validates the structure conditions and samples `H` at `samples`
    /// points of the interval.
    pub fn validate(&self, samples: usize) -> Result<HamiltonianBounds> {
        let d = self.d;
        let shape_ok = self.p1.shape() == (d, d)
            && self.p0.shape() == (d, d)
            && self.wb.shape() == (d, 2 * d)
            && self.wc.shape() == (d, 2 * d);
        if !shape_ok {
            return Err(FunnelError::config("port-Hamiltonian matrices have inconsistent shapes"));
        }
        if !is_symmetric(&self.p1) {
            return Err(FunnelError::config("P1 must be symmetric"));
        }
        if self.p1.determinant().abs() < 1e-14 {
            return Err(FunnelError::config("P1 must be invertible"));
        }
        let (_, p0_top) = sym_eigen_range(&(&self.p0 + self.p0.transpose()));
        if p0_top > SYMMETRY_TOL * self.p0.amax().max(1.0) {
            return Err(FunnelError::config("P0 + P0^T must be negative semidefinite"));
        }
        if self.w().determinant().abs() < 1e-14 {
            return Err(FunnelError::config("W = [WB; WC] must be invertible"));
        }
        let (a, b) = self.interval;
        if !(a < b) {
            return Err(FunnelError::config("interval must satisfy a < b"));
        }
        let mut bounds = HamiltonianBounds {
            lower: f64::INFINITY,
            upper: f64::NEG_INFINITY,
        };
        let samples = samples.max(2);
        for k in 0..samples {
            let z = a + (b - a) * k as f64 / (samples - 1) as f64;
            let h = (self.hamiltonian)(z);
            if h.shape() != (d, d) || !is_symmetric(&h) {
                return Err(FunnelError::config(format!("H({z}) must be a symmetric {d}x{d} matrix")));
            }
            let (lo, hi) = sym_eigen_range(&h);
            bounds.lower = bounds.lower.min(lo);
            bounds.upper = bounds.upper.max(hi);
        }
        if !(bounds.lower > 0.0) {
            return Err(FunnelError::config("H must be uniformly positive definite"));
        }
        Ok(bounds)
    }

    pub fn w(&self) -> DMatrix<f64> {
        let d = self.d;
        let mut w = DMatrix::zeros(2 * d, 2 * d);
        w.view_mut((0, 0), (d, 2 * d)).copy_from(&self.wb);
        w.view_mut((d, 0), (d, 2 * d)).copy_from(&self.wc);
        w
    }

    /// `R0 = 2^{-1/2} [[P1, -P1], [I, I]]`.
    pub fn r0(&self) -> DMatrix<f64> {
        let d = self.d;
        let mut r = DMatrix::zeros(2 * d, 2 * d);
        r.view_mut((0, 0), (d, d)).copy_from(&self.p1);
        r.view_mut((0, d), (d, d)).copy_from(&(-&self.p1));
        r.view_mut((d, 0), (d, d)).fill_with_identity();
        r.view_mut((d, d), (d, d)).fill_with_identity();
        r * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn flow_effort(&self, hx_a: &[f64], hx_b: &[f64]) -> BoundaryPortValues {
        let d = self.d;
        let traces = DVector::from_iterator(2 * d, hx_b.iter().chain(hx_a).copied());
        let fe = self.r0() * traces;
        BoundaryPortValues {
            f_boundary: fe.rows(0, d).iter().copied().collect(),
            e_boundary: fe.rows(d, d).iter().copied().collect(),
        }
    }

    /// Boundary input `W_B (f; e)` and output `W_C (f; e)` for the traces of `H x`.
    pub fn boundary_io(&self, hx_a: &[f64], hx_b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let fe = self.flow_effort(hx_a, hx_b).stacked();
        let u = &self.wb * &fe;
        let y = &self.wc * &fe;
        (u.iter().copied().collect(), y.iter().copied().collect())
    }

    /// `alpha = -mu m / (2M)` with `mu = -lambda_max(P0 + P0^T)`, or 0 when
    /// the interior dissipation is not strict.
    pub fn passivity_alpha(&self, bounds: HamiltonianBounds) -> f64 {
        let (_, top) = sym_eigen_range(&(&self.p0 + self.p0.transpose()));
        let mu = -top;
        if mu > 0.0 {
            -mu * bounds.lower / (2.0 * bounds.upper)
        } else {
            0.0
        }
    }
}

pub fn boundary_flow_effort(spec: &PortHamiltonianSpec, hx_a: &[f64], hx_b: &[f64]) -> BoundaryPortValues {
    spec.flow_effort(hx_a, hx_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plants::transmission_line::{line_port_hamiltonian, LineParameters};

    #[test]
    fn zero_traces_give_zero_ports() {
        let spec = line_port_hamiltonian(&LineParameters::reference_line());
        let v = boundary_flow_effort(&spec, &[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(v.f_boundary, vec![0.0, 0.0]);
        assert_eq!(v.e_boundary, vec![0.0, 0.0]);
    }

    #[test]
    fn line_flow_effort_by_hand() {
        let spec = line_port_hamiltonian(&LineParameters::reference_line());
        let (ia, va, ib, vb) = (0.3, -1.2, 0.7, 2.5);
        let v = boundary_flow_effort(&spec, &[ia, va], &[ib, vb]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expect_f = [s * (va - vb), s * (ia - ib)];
        let expect_e = [s * (ia + ib), s * (va + vb)];
        for k in 0..2 {
            assert!((v.f_boundary[k] - expect_f[k]).abs() < 1e-15);
            assert!((v.e_boundary[k] - expect_e[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn flow_effort_is_linear() {
        let spec = line_port_hamiltonian(&LineParameters::reference_line());
        let a = [0.4, -0.2];
        let b = [1.1, 0.9];
        let c = -3.7;
        let base = boundary_flow_effort(&spec, &a, &b).stacked();
        let scaled = boundary_flow_effort(&spec, &[c * a[0], c * a[1]], &[c * b[0], c * b[1]]).stacked();
        assert!((scaled - base * c).amax() < 1e-14);
    }

    #[test]
    fn structure_checks() {
        let params = LineParameters::reference_line();
        let good = line_port_hamiltonian(&params);
        let bounds = good.validate(16).unwrap();
        assert_eq!(bounds.lower, 1.0 / params.inductance);
        assert!((bounds.upper - 1.0 / params.capacitance).abs() < 1e-6);

        let mut bad = good.clone();
        bad.p1[(0, 1)] = 3.0;
        assert!(bad.validate(4).is_err());

        let mut bad = good.clone();
        bad.p0[(1, 1)] = 1.0;
        assert!(bad.validate(4).is_err());

        let mut bad = good.clone();
        bad.wc = bad.wb.clone();
        assert!(bad.validate(4).is_err());

        let mut bad = good;
        bad.hamiltonian = Arc::new(|_| DMatrix::from_diagonal_element(2, 2, -1.0));
        assert!(bad.validate(4).is_err());
    }
}
