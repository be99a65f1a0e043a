//! P1 finite elements on the uniform mesh `x_i = i / n` of `[0, 1]`.
//!
//! Every integral below is evaluated elementwise in closed form. Products of
//! two hat functions are quadratic and the trilinear integrand `w v z'` is
//! quadratic times a constant slope, so no quadrature error is introduced.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Tridiagonal};

/// Coefficients of a member of the P1 space on the hat basis `{φ_i}`.
///
/// Coefficient `i` is the nodal value at `x_i`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodalVector(pub Vec<f64>);

impl NodalVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }
}

impl Deref for NodalVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for NodalVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for NodalVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FemSpace {
    num_intervals: usize,
}

/// Matrices and vectors of the penalized weak formulation on the hat basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssembledForms {
    /// `⟨φ_j, φ_i⟩`
    pub mass: Tridiagonal,
    /// `a(φ_j, φ_i) = ∫ φ_j' φ_i'`
    pub stiffness: Tridiagonal,
    /// Penalty constant `P`; `B(φ_j, φ_i)` is `P` at `(0, 0)` and `(n, n)`, zero elsewhere.
    pub penalty: f64,
    /// `β₀(φ_i) = P φ_i(0)`
    pub beta0: Vec<f64>,
    /// `β₁(φ_i) = P φ_i(1)`
    pub beta1: Vec<f64>,
    /// `∫ φ_i`
    pub hat_integrals: Vec<f64>,
}

impl AssembledForms {
    pub fn boundary_penalty(&self) -> Tridiagonal {
        let n = self.mass.dim();
        let mut b = Tridiagonal::zeros(n);
        b.diag[0] = self.penalty;
        b.diag[n - 1] = self.penalty;
        b
    }

    /// Mass matrix restricted to the interior nodes (the space of functions vanishing at 0 and 1).
    pub fn interior_mass(&self) -> Tridiagonal {
        self.mass.submatrix(1, self.mass.dim() - 1)
    }

    pub fn interior_stiffness(&self) -> Tridiagonal {
        self.stiffness.submatrix(1, self.stiffness.dim() - 1)
    }

    /// `B(w, v)`
    pub fn boundary_form(&self, w: &[f64], v: &[f64]) -> f64 {
        let n = w.len() - 1;
        self.penalty * (w[0] * v[0] + w[n] * v[n])
    }
}

impl FemSpace {
    pub fn new(num_intervals: usize) -> Result<Self> {
        if num_intervals < 2 {
            return Err(Error::InvalidMesh { num_intervals });
        }
        Ok(Self { num_intervals })
    }

    pub fn num_intervals(&self) -> usize {
        self.num_intervals
    }

    /// Number of hat functions, `n + 1`.
    pub fn dim(&self) -> usize {
        self.num_intervals + 1
    }

    pub fn mesh_width(&self) -> f64 {
        1.0 / self.num_intervals as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.num_intervals as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim()).map(|i| self.node(i))
    }

    pub fn zeros(&self) -> NodalVector {
        NodalVector::zeros(self.dim())
    }

    pub fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() })
        }
    }

    /// Nodal interpolant `π(f)`.
    pub fn interpolate(&self, f: impl Fn(f64) -> f64) -> NodalVector {
        NodalVector(self.nodes().map(f).collect())
    }

    pub fn assemble(&self, penalty: f64) -> AssembledForms {
        let n = self.dim();
        let h = self.mesh_width();
        let mut mass = Tridiagonal::zeros(n);
        let mut stiffness = Tridiagonal::zeros(n);
        for e in 0..self.num_intervals {
            let (a, b) = (e, e + 1);
            mass.add(a, a, h / 3.0);
            mass.add(b, b, h / 3.0);
            mass.add(a, b, h / 6.0);
            mass.add(b, a, h / 6.0);
            stiffness.add(a, a, 1.0 / h);
            stiffness.add(b, b, 1.0 / h);
            stiffness.add(a, b, -1.0 / h);
            stiffness.add(b, a, -1.0 / h);
        }
        let mut beta0 = vec![0.0; n];
        let mut beta1 = vec![0.0; n];
        beta0[0] = penalty;
        beta1[n - 1] = penalty;
        let mut hat_integrals = vec![h; n];
        hat_integrals[0] = h / 2.0;
        hat_integrals[n - 1] = h / 2.0;
        AssembledForms { mass, stiffness, penalty, beta0, beta1, hat_integrals }
    }

    /// `c(w, v, z) = -½ ∫ w v z'`.
    pub fn trilinear(&self, w: &[f64], v: &[f64], z: &[f64]) -> Result<f64> {
        self.check(w)?;
        self.check(v)?;
        self.check(z)?;
        Ok(trilinear(w, v, z))
    }

    /// The vector `(c(w, v, φ_i))_i`.
    pub fn trilinear_load(&self, w: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for e in 0..self.num_intervals {
            let q = element_product(w[e], w[e + 1], v[e], v[e + 1]);
            out[e] += q / 12.0;
            out[e + 1] -= q / 12.0;
        }
        out
    }

    /// Matrix of `c(w, φ_j, φ_i)` (row `i`, column `j`) for a fixed first argument `w`.
    pub fn convection_matrix(&self, w: &[f64]) -> Tridiagonal {
        let mut c = Tridiagonal::zeros(self.dim());
        for e in 0..self.num_intervals {
            let (a, b) = (e, e + 1);
            let qa = 2.0 * w[a] + w[b];
            let qb = w[a] + 2.0 * w[b];
            // z = φ_a has slope -1/h, z = φ_b slope +1/h on this element.
            c.add(a, a, qa / 12.0);
            c.add(a, b, qb / 12.0);
            c.add(b, a, -qa / 12.0);
            c.add(b, b, -qb / 12.0);
        }
        c
    }

    /// Third-order tensor `T[(p * nv + q) * nz + r] = c(ws[p], vs[q], zs[r])`.
    pub fn trilinear_tensor(&self, ws: &[&[f64]], vs: &[&[f64]], zs: &[&[f64]]) -> Vec<f64> {
        let (nw, nv, nz) = (ws.len(), vs.len(), zs.len());
        let mut t = vec![0.0; nw * nv * nz];
        let mut dz = vec![0.0; nz];
        for e in 0..self.num_intervals {
            for (r, z) in zs.iter().enumerate() {
                dz[r] = z[e + 1] - z[e];
            }
            for (p, w) in ws.iter().enumerate() {
                for (q, v) in vs.iter().enumerate() {
                    let s = -element_product(w[e], w[e + 1], v[e], v[e + 1]) / 12.0;
                    if s == 0.0 {
                        continue;
                    }
                    let base = (p * nv + q) * nz;
                    for r in 0..nz {
                        t[base + r] += s * dz[r];
                    }
                }
            }
        }
        t
    }

    /// `‖v‖ = (∫ v²)^{1/2}`
    pub fn l2_norm(&self, forms: &AssembledForms, v: &[f64]) -> f64 {
        libm::sqrt(forms.mass.bilinear(v, v).max(0.0))
    }

    /// `⟨w, v⟩`
    pub fn inner(&self, forms: &AssembledForms, w: &[f64], v: &[f64]) -> f64 {
        dot(w, &forms.mass.mul_vec(v))
    }
}

/// `(h/6)⁻¹ ∫_e w v` on one element, times 1: `2 w_a v_a + w_a v_b + w_b v_a + 2 w_b v_b`.
#[inline]
fn element_product(wa: f64, wb: f64, va: f64, vb: f64) -> f64 {
    2.0 * wa * va + wa * vb + wb * va + 2.0 * wb * vb
}

/// `c(w, v, z)` without conformance checks.
pub(crate) fn trilinear(w: &[f64], v: &[f64], z: &[f64]) -> f64 {
    let mut s = 0.0;
    for e in 0..w.len() - 1 {
        s += (z[e + 1] - z[e]) * element_product(w[e], w[e + 1], v[e], v[e + 1]);
    }
    -s / 12.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hat(space: &FemSpace, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; space.dim()];
        v[i] = 1.0;
        v
    }

    #[test]
    fn build_space_examples() {
        let s = FemSpace::new(2).unwrap();
        assert_eq!(s.nodes().collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert_eq!(s.mesh_width(), 0.5);
        let s = FemSpace::new(40).unwrap();
        assert_eq!(s.dim(), 41);
        assert_relative_eq!(s.mesh_width(), 0.025);
        assert_eq!(FemSpace::new(0), Err(Error::InvalidMesh { num_intervals: 0 }));
        assert!(FemSpace::new(1).is_err());
    }

    #[test]
    fn assembled_entries() {
        let s = FemSpace::new(8).unwrap();
        let h = s.mesh_width();
        let f = s.assemble(1e7);
        assert_relative_eq!(f.mass.get(3, 3), 2.0 * h / 3.0, epsilon = 1e-15);
        assert_relative_eq!(f.mass.get(3, 4), h / 6.0, epsilon = 1e-15);
        assert_relative_eq!(f.mass.get(0, 0), h / 3.0, epsilon = 1e-15);
        assert_relative_eq!(f.stiffness.get(3, 4), -1.0 / h, epsilon = 1e-12);
        assert_relative_eq!(f.stiffness.get(3, 3), 2.0 / h, epsilon = 1e-12);
        let b = f.boundary_penalty();
        assert_eq!(b.get(0, 0), 1e7);
        assert_eq!(b.get(8, 8), 1e7);
        assert_eq!(b.diag.iter().filter(|x| **x != 0.0).count(), 2);
        let ones = vec![1.0; 9];
        assert!(f.stiffness.mul_vec(&ones).iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn trilinear_examples() {
        for n in [2, 5, 40] {
            let s = FemSpace::new(n).unwrap();
            let p0 = hat(&s, 0);
            assert_relative_eq!(s.trilinear(&p0, &p0, &p0).unwrap(), 1.0 / 6.0, epsilon = 1e-14);
            let p1 = hat(&s, 1);
            assert!(s.trilinear(&p1, &p1, &p1).unwrap().abs() < 1e-14);
        }
        let s = FemSpace::new(3).unwrap();
        assert!(matches!(
            s.trilinear(&[1.0; 4], &[1.0; 3], &[1.0; 4]),
            Err(Error::DimensionMismatch { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn interpolation_and_norms() {
        let s = FemSpace::new(2).unwrap();
        let f = s.assemble(1.0);
        assert_eq!(s.interpolate(|_| 1.0).0, vec![1.0; 3]);
        let v = s.interpolate(|x| libm::sin(3.0 * x));
        assert_eq!(v.0, vec![0.0, libm::sin(1.5), libm::sin(3.0)]);
        assert_eq!(s.l2_norm(&f, &s.zeros()), 0.0);
        assert_relative_eq!(s.l2_norm(&f, &[1.0; 3]), 1.0, epsilon = 1e-15);
        assert_relative_eq!(s.l2_norm(&f, &[0.0, 1.0, 0.0]), libm::sqrt(1.0 / 3.0), epsilon = 1e-15);
    }

    #[test]
    fn convection_matrix_matches_pointwise_form() {
        let s = FemSpace::new(6).unwrap();
        let w: Vec<f64> = (0..7).map(|i| 0.3 * i as f64 - 1.0 + libm::sin(i as f64)).collect();
        let c = s.convection_matrix(&w);
        for i in 0..7 {
            for j in 0..7 {
                let direct = trilinear(&w, &hat(&s, j), &hat(&s, i));
                assert_relative_eq!(c.get(i, j), direct, epsilon = 1e-14);
            }
        }
        let load = s.trilinear_load(&w, &w);
        for i in 0..7 {
            assert_relative_eq!(load[i], trilinear(&w, &w, &hat(&s, i)), epsilon = 1e-14);
        }
    }
}
