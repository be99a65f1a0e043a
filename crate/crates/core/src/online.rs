//! Reduced solve. Everything reachable from [`OnlineModel`] is sized by the
//! basis size `N` or by the frequency structure, never by the mesh.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::certify::{build_initial_gram, build_residual_gram, InitialErrorGram, ResidualGram};
use crate::config::ProblemConfig;
use crate::error::{Error, Result};
use crate::fem::{AssembledForms, FemSpace};
use crate::linalg::{axpy, dense_solve, dot};
use crate::offline::{precompute_offline, OfflineTensors, ReducedBasis};
use crate::params::{DataFunctions, FrequencyStructure, ParameterPoint};
use crate::scm::ScmData;

/// Time stepping and solver settings the online phase needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineHeader {
    pub dt: f64,
    pub num_steps: usize,
    pub penalty: f64,
    pub newton_tol: f64,
    pub newton_cap: usize,
    pub freq: FrequencyStructure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineModel {
    pub header: OnlineHeader,
    pub tensors: OfflineTensors,
    pub initial_gram: InitialErrorGram,
    pub residual_gram: ResidualGram,
    pub scm: Option<ScmData>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedTrajectory {
    /// Coefficients of `ũ⁰ ..= ũ^𝒯` on the reduced basis.
    pub states: Vec<Vec<f64>>,
    pub newton_iterations: Vec<usize>,
}

impl OnlineModel {
    /// Runs the offline precomputation for `basis`. SCM data is attached separately.
    pub fn build(basis: &ReducedBasis, space: &FemSpace, forms: &AssembledForms, config: &ProblemConfig, scm: Option<ScmData>) -> Result<Self> {
        let tensors = precompute_offline(basis, space, forms, &config.freq)?;
        Ok(Self {
            header: OnlineHeader {
                dt: config.dt,
                num_steps: config.num_steps(),
                penalty: config.penalty,
                newton_tol: config.newton_tol,
                newton_cap: config.newton_cap,
                freq: config.freq.clone(),
            },
            tensors,
            initial_gram: build_initial_gram(basis, space, forms, &config.freq),
            residual_gram: build_residual_gram(basis, space, forms, &config.freq)?,
            scm,
        })
    }

    pub fn size(&self) -> usize {
        self.tensors.size
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.header.dt
    }

    /// Length of the longest array stored in the model. It depends on `N` and
    /// on the frequency structure only.
    pub fn footprint(&self) -> usize {
        let t = &self.tensors;
        let b = &t.boundary;
        let mut lens = vec![
            t.red_mass.len(),
            t.red_stiff.len(),
            t.red_bpen.len(),
            t.red_tri.len(),
            t.red_beta0.len(),
            t.red_beta1.len(),
            t.zeta_left.len(),
            t.zeta_right.len(),
            t.red_int.len(),
            t.proj_one.len(),
            b.psi_00.tri.len(),
            b.left.tri.len(),
            b.right.tri.len(),
            b.left.mass.len(),
            b.left.fsin.len(),
            self.initial_gram.matrix.len(),
            self.residual_gram.matrix.len(),
        ];
        lens.extend(t.red_fsin.iter().map(Vec::len));
        lens.extend(t.proj_u0sin.iter().map(Vec::len));
        if let Some(scm) = &self.scm {
            lens.push(scm.sigma_min.len());
            lens.push(scm.constraints.len());
            lens.extend(scm.constraints.iter().map(|c| c.y_star.len() + c.coords.len() + c.objective.len()));
        }
        lens.into_iter().max().unwrap_or(0)
    }

    pub fn check_parameter(&self, mu: &ParameterPoint) -> Result<()> {
        mu.check_structure(&self.header.freq)?;
        if !(mu.nu > 0.0) {
            return Err(Error::InvalidViscosity(mu.nu));
        }
        Ok(())
    }

    /// `ũ⁰ = u0m π̃(𝟏) + Σ_l A^{u0}_l π̃(π(sin(ω^{u0}_l ·)))`
    pub fn reduced_initial(&self, mu: &ParameterPoint) -> Result<Vec<f64>> {
        self.check_parameter(mu)?;
        let mut c: Vec<f64> = self.tensors.proj_one.iter().map(|v| mu.u0_mean * v).collect();
        for (a, p) in mu.amp_u0.iter().zip(&self.tensors.proj_u0sin) {
            crate::linalg::axpy(*a, p, &mut c);
        }
        Ok(c)
    }

    /// `ℓ_π(ζ_i, t_k)`
    pub fn assemble_load(&self, mu: &ParameterPoint, k: usize) -> Vec<f64> {
        let d = DataFunctions::new(mu, &self.header.freq);
        let mut out: Vec<f64> = self.tensors.red_int.iter().map(|v| mu.f_mean * v).collect();
        for (w, f) in d.source_weights(self.time(k)).iter().zip(&self.tensors.red_fsin) {
            crate::linalg::axpy(*w, f, &mut out);
        }
        out
    }

    /// `m/Δt + νK + B`, row-major. Constant over a trajectory.
    fn linear_part(&self, nu: f64) -> Vec<f64> {
        let t = &self.tensors;
        let inv_dt = 1.0 / self.header.dt;
        (0..t.red_mass.len()).map(|p| t.red_mass[p] * inv_dt + nu * t.red_stiff[p] + t.red_bpen[p]).collect()
    }

    /// `ℓ_π(ζ_i, t_k) + b₀(t_k) β₀(ζ_i) + b₁(t_k) β₁(ζ_i) + (m ũ^{k-1})_i / Δt`
    fn step_rhs(&self, mu: &ParameterPoint, k: usize, prev: &[f64]) -> Vec<f64> {
        let n = self.size();
        let t = &self.tensors;
        let d = DataFunctions::new(mu, &self.header.freq);
        let time = self.time(k);
        let (b0, b1) = (d.b0(time), d.b1(time));
        let mut r = self.assemble_load(mu, k);
        let inv_dt = 1.0 / self.header.dt;
        for i in 0..n {
            r[i] += b0 * t.red_beta0[i] + b1 * t.red_beta1[i] + inv_dt * dot(&t.red_mass[i * n..(i + 1) * n], prev);
        }
        r
    }

    /// Newton matrix into `l`; `conv` is scratch of length `N²`.
    fn jacobian_into(&self, linear: &[f64], guess: &[f64], l: &mut [f64], conv: &mut [f64]) {
        let n = self.size();
        let nn = n * n;
        // Slab j' of the tensor is c(ζ_j', ζ_j, ζ_i) stored column-major in (i, j).
        conv.fill(0.0);
        for (slab, g) in self.tensors.red_tri.chunks_exact(nn).zip(guess) {
            if *g != 0.0 {
                axpy(2.0 * g, slab, conv);
            }
        }
        for (i, row) in l.chunks_exact_mut(n).enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = linear[i * n + j] + conv[j * n + i];
            }
        }
    }

    /// Residual from the Newton matrix `l` at `guess`: the quadratic term is
    /// half the convection part of `l` applied to `guess`.
    fn residual_from_jacobian(linear: &[f64], l: &[f64], rhs: &[f64], guess: &[f64], r: &mut [f64]) {
        let n = guess.len();
        for i in 0..n {
            let (lin, jac) = (&linear[i * n..(i + 1) * n], &l[i * n..(i + 1) * n]);
            r[i] = lin.iter().zip(jac).zip(guess).map(|((a, b), g)| 0.5 * (a + b) * g).sum::<f64>() - rhs[i];
        }
    }

    /// Reduced Newton matrix `m/Δt + 2 Σ_{j'} g_{j'} c(ζ_{j'}, ζ_j, ζ_i) + ν K + B`, row-major in `(i, j)`.
    pub fn newton_matrix(&self, guess: &[f64], nu: f64) -> Vec<f64> {
        let nn = self.size() * self.size();
        let mut l = vec![0.0; nn];
        self.jacobian_into(&self.linear_part(nu), guess, &mut l, &mut vec![0.0; nn]);
        l
    }

    /// Reduced residual of step `k` in every `ζ_i`.
    pub fn residual(&self, guess: &[f64], prev: &[f64], mu: &ParameterPoint, k: usize) -> Vec<f64> {
        let n = self.size();
        let linear = self.linear_part(mu.nu);
        let mut l = vec![0.0; n * n];
        self.jacobian_into(&linear, guess, &mut l, &mut vec![0.0; n * n]);
        let mut r = vec![0.0; n];
        Self::residual_from_jacobian(&linear, &l, &self.step_rhs(mu, k, prev), guess, &mut r);
        r
    }

    /// Newton increment `δ` at step `k`.
    pub fn online_newton_step(&self, mu: &ParameterPoint, guess: &[f64], prev: &[f64], k: usize) -> Result<Vec<f64>> {
        let n = self.size();
        if guess.len() != n || prev.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: guess.len().min(prev.len()) });
        }
        let l = self.newton_matrix(guess, mu.nu);
        let rhs: Vec<f64> = self.residual(guess, prev, mu, k).into_iter().map(|v| -v).collect();
        dense_solve(DMatrix::from_row_slice(n, n, &l), rhs).ok_or(Error::NewtonBreakdown { step: k })
    }

    pub fn solve_reduced(&self, mu: &ParameterPoint) -> Result<ReducedTrajectory> {
        let u0 = self.reduced_initial(mu)?;
        let linear = self.linear_part(mu.nu);
        let steps = self.header.num_steps;
        let mut states = Vec::with_capacity(steps + 1);
        let mut iterations = Vec::with_capacity(steps);
        states.push(u0);
        for k in 1..=steps {
            let (g, it) = self.newton_loop(&linear, mu, &states[k - 1], k)?;
            iterations.push(it);
            states.push(g);
        }
        Ok(ReducedTrajectory { states, newton_iterations: iterations })
    }

    /// Newton iteration of one step, warm-started from `prev`.
    pub fn solve_step(&self, mu: &ParameterPoint, prev: &[f64], k: usize) -> Result<(Vec<f64>, usize)> {
        self.check_parameter(mu)?;
        if prev.len() != self.size() {
            return Err(Error::DimensionMismatch { expected: self.size(), found: prev.len() });
        }
        self.newton_loop(&self.linear_part(mu.nu), mu, prev, k)
    }

    fn newton_loop(&self, linear: &[f64], mu: &ParameterPoint, prev: &[f64], k: usize) -> Result<(Vec<f64>, usize)> {
        let n = self.size();
        let rhs = self.step_rhs(mu, k, prev);
        let mut g = prev.to_vec();
        let mut l = vec![0.0; n * n];
        let mut conv = vec![0.0; n * n];
        let mut r = vec![0.0; n];
        for it in 1..=self.header.newton_cap {
            self.jacobian_into(linear, &g, &mut l, &mut conv);
            Self::residual_from_jacobian(linear, &l, &rhs, &g, &mut r);
            if !solve_small(&mut l, &mut r) {
                return Err(Error::NewtonBreakdown { step: k });
            }
            for (x, d) in g.iter_mut().zip(&r) {
                *x -= d;
            }
            if !g.iter().all(|v| v.is_finite()) {
                return Err(Error::NewtonBreakdown { step: k });
            }
            if dot(&r, &r) <= self.header.newton_tol {
                return Ok((g, it));
            }
        }
        Err(Error::NonConvergence { step: k, iterations: self.header.newton_cap })
    }

    /// `(ũ(0), ũ(1))` from the stored boundary values of the basis.
    pub fn boundary_values(&self, coeffs: &[f64]) -> (f64, f64) {
        (dot(coeffs, &self.tensors.zeta_left), dot(coeffs, &self.tensors.zeta_right))
    }
}

/// In-place Gaussian elimination with partial pivoting on a row-major `n × n`
/// system; the solution overwrites `b`.
fn solve_small(a: &mut [f64], b: &mut [f64]) -> bool {
    let n = b.len();
    for c in 0..n {
        let mut p = c;
        for r in c + 1..n {
            if a[r * n + c].abs() > a[p * n + c].abs() {
                p = r;
            }
        }
        let piv = a[p * n + c];
        if !(piv.abs() > 0.0) || !piv.is_finite() {
            return false;
        }
        if p != c {
            let (top, bottom) = a.split_at_mut(p * n);
            top[c * n..(c + 1) * n].swap_with_slice(&mut bottom[..n]);
            b.swap(p, c);
        }
        let (top, bottom) = a.split_at_mut((c + 1) * n);
        let prow = &top[c * n + c..];
        for (k, row) in bottom.chunks_exact_mut(n).enumerate() {
            let f = row[c] / piv;
            if f != 0.0 {
                for (v, pv) in row[c..].iter_mut().zip(prow) {
                    *v -= f * pv;
                }
                b[c + 1 + k] -= f * b[c];
            }
        }
    }
    for c in (0..n).rev() {
        let row = &a[c * n..(c + 1) * n];
        let s = b[c] - dot(&row[c + 1..], &b[c + 1..]);
        b[c] = s / row[c];
    }
    b.iter().all(|v| v.is_finite())
}
