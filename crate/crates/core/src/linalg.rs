//! Banded and small dense linear algebra used by the solvers.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    libm::sqrt(dot(x, x))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Square tridiagonal matrix in band layout.
///
/// `lower[i]` is entry `(i + 1, i)`, `upper[i]` is entry `(i, i + 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n);
        t.diag.iter_mut().for_each(|d| *d = 1.0);
        t
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i == j + 1 {
            self.lower[j]
        } else if j == i + 1 {
            self.upper[i]
        } else {
            0.0
        }
    }

    /// Adds `value` to entry `(i, j)`, which must lie in the band.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        if i == j {
            self.diag[i] += value;
        } else if i == j + 1 {
            self.lower[j] += value;
        } else if j == i + 1 {
            self.upper[i] += value;
        } else {
            panic!("entry ({i}, {j}) outside tridiagonal band");
        }
    }

    /// `self + alpha * other`
    pub fn add_scaled(&self, alpha: f64, other: &Tridiagonal) -> Tridiagonal {
        let comb = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + alpha * y).collect();
        Tridiagonal {
            lower: comb(&self.lower, &other.lower),
            diag: comb(&self.diag, &other.diag),
            upper: comb(&self.upper, &other.upper),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Tridiagonal {
        let s = |a: &[f64]| a.iter().map(|x| alpha * x).collect();
        Tridiagonal { lower: s(&self.lower), diag: s(&self.diag), upper: s(&self.upper) }
    }

    pub fn transpose(&self) -> Tridiagonal {
        Tridiagonal { lower: self.upper.clone(), diag: self.diag.clone(), upper: self.lower.clone() }
    }

    /// Principal submatrix on rows/columns `start..end`.
    pub fn submatrix(&self, start: usize, end: usize) -> Tridiagonal {
        Tridiagonal {
            lower: self.lower[start..end - 1].to_vec(),
            diag: self.diag[start..end].to_vec(),
            upper: self.upper[start..end - 1].to_vec(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.lower[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.upper[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Thomas algorithm (LU without pivoting), O(n).
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: rhs.len() });
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        check_pivot(pivot, 0)?;
        if n > 1 {
            c[0] = self.upper[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i - 1] * c[i - 1];
            check_pivot(pivot, i)?;
            if i + 1 < n {
                c[i] = self.upper[i] / pivot;
            }
            d[i] = (rhs[i] - self.lower[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// Cholesky factor `L` (lower bidiagonal) of a symmetric positive definite matrix.
    pub fn cholesky(&self) -> Result<Bidiagonal> {
        let n = self.dim();
        let mut diag = vec![0.0; n];
        let mut sub = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut d = self.diag[i];
            if i > 0 {
                sub[i - 1] = self.lower[i - 1] / diag[i - 1];
                d -= sub[i - 1] * sub[i - 1];
            }
            if !(d > 0.0) {
                return Err(Error::SingularSystem { row: i });
            }
            diag[i] = libm::sqrt(d);
        }
        Ok(Bidiagonal { diag, sub })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }
}

fn check_pivot(p: f64, row: usize) -> Result<()> {
    if p == 0.0 || !p.is_finite() {
        Err(Error::SingularSystem { row })
    } else {
        Ok(())
    }
}

/// Lower bidiagonal matrix: `diag[i]` at `(i, i)`, `sub[i]` at `(i + 1, i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bidiagonal {
    pub diag: Vec<f64>,
    pub sub: Vec<f64>,
}

impl Bidiagonal {
    /// `Lᵀ x`
    pub fn mul_transpose(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i + 1 < n {
                    s += self.sub[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `Lᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut x = b.to_vec();
        x[n - 1] /= self.diag[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - self.sub[i] * x[i + 1]) / self.diag[i];
        }
        x
    }
}

/// Extreme eigenpair of the symmetric pencil `A v = λ M v`, `M` positive definite.
#[derive(Clone, Debug)]
pub struct PencilEigen {
    pub value: f64,
    /// Normalized so that `vᵀ M v = 1`.
    pub vector: Vec<f64>,
}

/// Number of eigenvalues of `A - λ M` below zero (Sylvester inertia of the LDLᵀ pivots).
pub fn count_eigenvalues_below(a: &Tridiagonal, m: &Tridiagonal, lambda: f64, scale: f64) -> usize {
    let n = a.dim();
    let tiny = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let mut count = 0;
    let mut d = a.diag[0] - lambda * m.diag[0];
    for i in 0..n {
        if i > 0 {
            let off = a.lower[i - 1] - lambda * m.lower[i - 1];
            d = (a.diag[i] - lambda * m.diag[i]) - off * off / d;
        }
        if d == 0.0 {
            d = -tiny;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenpair of the symmetric tridiagonal pencil `(A, M)`.
///
/// Bisection on the inertia count brackets the eigenvalue, then inverse
/// iteration with a shift just below it recovers the eigenvector, and the
/// returned value is its Rayleigh quotient.
pub fn smallest_pencil_eigen(a: &Tridiagonal, m: &Tridiagonal) -> Result<PencilEigen> {
    let n = a.dim();
    if m.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.dim() });
    }
    // Gershgorin lower bound on the spectrum of M.
    let m_low = (0..n)
        .map(|i| {
            let mut s = m.diag[i];
            if i > 0 {
                s -= m.lower[i - 1].abs();
            }
            if i + 1 < n {
                s -= m.upper[i].abs();
            }
            s
        })
        .fold(f64::INFINITY, f64::min);
    if !(m_low > 0.0) {
        return Err(Error::Eigen("mass matrix is not diagonally dominant".into()));
    }
    let a_norm = a.norm_inf();
    let radius = a_norm / m_low * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    let scale = a_norm + radius * m.norm_inf();

    let (mut lo, mut hi) = (-radius, radius);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_eigenvalues_below(a, m, mid, scale) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
    }

    // Inverse iteration on the positive definite matrix A - σM, σ < λ_min.
    let shift = lo - 1e-9 * radius.max(1.0);
    let shifted = a.add_scaled(-shift, m);
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * libm::sin(1.7 * i as f64 + 0.3)).collect();
    normalize_in(m, &mut x);
    for _ in 0..6 {
        let rhs = m.mul_vec(&x);
        x = shifted.solve(&rhs)?;
        normalize_in(m, &mut x);
    }
    let value = a.bilinear(&x, &x) / m.bilinear(&x, &x);
    if !value.is_finite() {
        return Err(Error::Eigen("non-finite Rayleigh quotient".into()));
    }
    Ok(PencilEigen { value, vector: x })
}

/// Largest eigenpair of the pencil `(A, M)`.
pub fn largest_pencil_eigen(a: &Tridiagonal, m: &Tridiagonal) -> Result<PencilEigen> {
    let mut e = smallest_pencil_eigen(&a.scaled(-1.0), m)?;
    e.value = -e.value;
    Ok(e)
}

fn normalize_in(m: &Tridiagonal, x: &mut [f64]) {
    let nrm = libm::sqrt(m.bilinear(x, x));
    x.iter_mut().for_each(|v| *v /= nrm);
}

/// Solves a small dense system with partial-pivoting LU. `None` when singular.
pub fn dense_solve(matrix: DMatrix<f64>, rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let b = DVector::from_vec(rhs);
    let x = matrix.lu().solve(&b)?;
    if x.iter().all(|v| v.is_finite()) {
        Some(x.as_slice()[..n].to_vec())
    } else {
        None
    }
}
