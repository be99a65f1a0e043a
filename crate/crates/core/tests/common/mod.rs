#![allow(dead_code)]

use burgers_rb::params::{make_parameter_point, FreeCoordinates, FrequencyStructure, Interval, ParameterPoint, ParameterRanges};
use burgers_rb::ProblemConfig;
use nalgebra::{DMatrix, DVector};

pub fn table1_freq() -> FrequencyStructure {
    FrequencyStructure { b0: vec![1.0], b1: vec![1.0], u0: vec![3.0], f_time: vec![2.0], f_space: vec![2.0] }
}

pub fn table1_ranges() -> ParameterRanges {
    ParameterRanges {
        nu: Interval::new(0.8, 1.2),
        amp_b0: vec![Interval::new(0.9, 1.2)],
        amp_b1: vec![Interval::new(0.9, 1.2)],
        f_mean: Interval::new(0.0, 2.0),
        amp_f: vec![Interval::new(0.7, 1.3)],
        u0_mean: Interval::new(0.0, 1.0),
        amp_u0: vec![Interval::new(1.1, 3.0)],
    }
}

pub fn table1(n: usize, dt: f64, horizon: f64) -> ProblemConfig {
    ProblemConfig::new(n, dt, horizon, table1_freq(), table1_ranges())
}

/// Dense `M_ij = ∫ φ_j φ_i` on a uniform mesh.
pub fn dense_mass(n: usize) -> DMatrix<f64> {
    let h = 1.0 / n as f64;
    let mut m = DMatrix::zeros(n + 1, n + 1);
    for e in 0..n {
        m[(e, e)] += h / 3.0;
        m[(e + 1, e + 1)] += h / 3.0;
        m[(e, e + 1)] += h / 6.0;
        m[(e + 1, e)] += h / 6.0;
    }
    m
}

pub fn dense_stiffness(n: usize) -> DMatrix<f64> {
    let h = 1.0 / n as f64;
    let mut a = DMatrix::zeros(n + 1, n + 1);
    for e in 0..n {
        a[(e, e)] += 1.0 / h;
        a[(e + 1, e + 1)] += 1.0 / h;
        a[(e, e + 1)] -= 1.0 / h;
        a[(e + 1, e)] -= 1.0 / h;
    }
    a
}

/// `−½ ∫ w v z′` by Simpson's rule on each element (exact: `w v` is quadratic, `z′` constant).
pub fn trilinear_simpson(w: &[f64], v: &[f64], z: &[f64]) -> f64 {
    let n = w.len() - 1;
    let h = 1.0 / n as f64;
    let mut s = 0.0;
    for e in 0..n {
        let dz = (z[e + 1] - z[e]) / h;
        let wm = 0.5 * (w[e] + w[e + 1]);
        let vm = 0.5 * (v[e] + v[e + 1]);
        let q = h / 6.0 * (w[e] * v[e] + 4.0 * wm * vm + w[e + 1] * v[e + 1]);
        s += q * dz;
    }
    -0.5 * s
}

pub fn hat(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    v[i] = 1.0;
    v
}

/// Interior block `[1, n)` of a dense matrix.
pub fn interior(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d = m.nrows() - 2;
    m.view((1, 1), (d, d)).into_owned()
}

/// Eigenvalues of the symmetric pencil `(A, M)` via `L⁻¹ A L⁻ᵀ`, ascending.
pub fn pencil_eigenvalues(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Vec<f64> {
    let l = m.clone().cholesky().expect("mass is SPD").l();
    let li = l.clone().try_inverse().unwrap();
    let s = &li * a * li.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let mut ev: Vec<f64> = s.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn to_dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Single-point configuration: `ν` fixed, unit amplitudes, `u0m = 1`, `A^{u0} = 2`.
pub fn fixed_point(n: usize, dt: f64, nu: f64) -> (ProblemConfig, ParameterPoint) {
    let mut c = table1(n, dt, 2.0);
    c.ranges.nu = Interval::point(nu);
    let raw = FreeCoordinates { nu, amp_b0: vec![1.0], amp_b1: vec![1.0], f_mean: 1.0, amp_f: vec![1.0], u0_mean: 1.0, amp_u0: vec![2.0] };
    let mu = make_parameter_point(&raw, &c.freq, &c.ranges).unwrap();
    (c, mu)
}

pub fn params_set_1() -> (ProblemConfig, ParameterPoint) {
    fixed_point(40, 0.02, 1.0)
}

pub fn params_set_2() -> (ProblemConfig, ParameterPoint) {
    fixed_point(40, 0.002, 0.1)
}
