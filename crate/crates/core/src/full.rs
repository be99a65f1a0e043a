//! Full-order reference solver: backward Euler in time, Newton on each step,
//! Thomas solves for the tridiagonal Newton systems.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::{ProblemConfig, TimeGrid};
use crate::error::{Error, Result};
use crate::fem::{AssembledForms, FemSpace, NodalVector};
use crate::linalg::{dot, Tridiagonal};
use crate::params::{DataFunctions, ParameterPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullTrajectory {
    /// `u⁰ ..= u^𝒯`
    pub states: Vec<NodalVector>,
    /// Newton iterations used at steps `1..=𝒯`.
    pub newton_iterations: Vec<usize>,
}

/// Precomputed operators for one [`ProblemConfig`].
#[derive(Clone, Debug)]
pub struct FullSolver {
    config: ProblemConfig,
    grid: TimeGrid,
    space: FemSpace,
    forms: AssembledForms,
    /// `M π(sin(ω^{fS}_p ·))`, i.e. `∫ π(sin(ω_p ·)) φ_i`.
    source_modes: Vec<Vec<f64>>,
}

impl FullSolver {
    pub fn new(config: &ProblemConfig) -> Result<Self> {
        config.validate()?;
        let space = FemSpace::new(config.num_intervals)?;
        let forms = space.assemble(config.penalty);
        let source_modes = config
            .freq
            .f_space
            .iter()
            .map(|&w| forms.mass.mul_vec(&space.interpolate(|x| libm::sin(w * x))))
            .collect();
        Ok(Self { config: config.clone(), grid: config.time_grid()?, space, forms, source_modes })
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.config
    }

    pub fn space(&self) -> &FemSpace {
        &self.space
    }

    pub fn forms(&self) -> &AssembledForms {
        &self.forms
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `u⁰ = π(u₀)`
    pub fn initial_state(&self, mu: &ParameterPoint) -> NodalVector {
        let d = DataFunctions::new(mu, &self.config.freq);
        self.space.interpolate(|x| d.u0(x))
    }

    /// Right-hand side `ℓ_π(φ_i, t) + b₀(t) β₀(φ_i) + b₁(t) β₁(φ_i)`.
    pub fn load(&self, mu: &ParameterPoint, t: f64) -> Vec<f64> {
        let d = DataFunctions::new(mu, &self.config.freq);
        let mut out: Vec<f64> = self.forms.hat_integrals.iter().map(|v| mu.f_mean * v).collect();
        for (w, mode) in d.source_weights(t).iter().zip(&self.source_modes) {
            crate::linalg::axpy(*w, mode, &mut out);
        }
        let n = out.len() - 1;
        out[0] += d.b0(t) * self.forms.penalty;
        out[n] += d.b1(t) * self.forms.penalty;
        out
    }

    /// Newton matrix `M/Δt + νA + B + 2C(g)` with `C(g)_{ij} = c(g, φ_j, φ_i)`.
    pub fn linearized_matrix(&self, guess: &[f64], nu: f64) -> Tridiagonal {
        let mut j = self.forms.mass.scaled(1.0 / self.grid.dt).add_scaled(nu, &self.forms.stiffness);
        let n = j.dim();
        j.diag[0] += self.forms.penalty;
        j.diag[n - 1] += self.forms.penalty;
        j.add_scaled(2.0, &self.space.convection_matrix(guess))
    }

    /// Nonlinear residual of one backward Euler step tested against every `φ_i`.
    pub fn residual(&self, g: &[f64], prev: &[f64], mu: &ParameterPoint, t: f64) -> Vec<f64> {
        let diff: Vec<f64> = g.iter().zip(prev).map(|(a, b)| (a - b) / self.grid.dt).collect();
        let mut r = self.forms.mass.mul_vec(&diff);
        let conv = self.space.trilinear_load(g, g);
        let diffusion = self.forms.stiffness.mul_vec(g);
        let load = self.load(mu, t);
        let n = r.len() - 1;
        for i in 0..=n {
            r[i] += conv[i] + mu.nu * diffusion[i] - load[i];
        }
        r[0] += self.forms.penalty * g[0];
        r[n] += self.forms.penalty * g[n];
        r
    }

    /// One Newton increment at step `k` around `guess`.
    pub fn newton_step(&self, guess: &[f64], prev: &[f64], mu: &ParameterPoint, k: usize) -> Result<(NodalVector, NodalVector)> {
        self.space.check(guess)?;
        self.space.check(prev)?;
        let t = self.grid.time(k);
        let rhs: Vec<f64> = self.residual(guess, prev, mu, t).into_iter().map(|v| -v).collect();
        let delta = self
            .linearized_matrix(guess, mu.nu)
            .solve(&rhs)
            .map_err(|_| Error::NewtonBreakdown { step: k })?;
        let next: Vec<f64> = guess.iter().zip(&delta).map(|(g, d)| g + d).collect();
        Ok((NodalVector(delta), NodalVector(next)))
    }

    pub fn solve(&self, mu: &ParameterPoint) -> Result<FullTrajectory> {
        mu.check_structure(&self.config.freq)?;
        if !(mu.nu > 0.0) {
            return Err(Error::InvalidViscosity(mu.nu));
        }
        let steps = self.grid.num_steps;
        let mut states = Vec::with_capacity(steps + 1);
        let mut iterations = Vec::with_capacity(steps);
        states.push(self.initial_state(mu));
        for k in 1..=steps {
            let prev = &states[k - 1];
            let mut g = prev.clone();
            let mut converged = None;
            for it in 1..=self.config.newton_cap {
                let (delta, next) = self.newton_step(&g, prev, mu, k)?;
                g = next;
                if !g.iter().all(|v| v.is_finite()) {
                    return Err(Error::NewtonBreakdown { step: k });
                }
                if dot(&delta, &delta) <= self.config.newton_tol {
                    converged = Some(it);
                    break;
                }
            }
            let it = converged.ok_or(Error::NonConvergence { step: k, iterations: self.config.newton_cap })?;
            iterations.push(it);
            states.push(g);
        }
        Ok(FullTrajectory { states, newton_iterations: iterations })
    }

    /// `sup_k max(|u^k(0) - b₀(t_k)|, |u^k(1) - b₁(t_k)|)`
    pub fn boundary_error_indicator(&self, traj: &FullTrajectory, mu: &ParameterPoint) -> f64 {
        let d = DataFunctions::new(mu, &self.config.freq);
        traj.states
            .iter()
            .enumerate()
            .map(|(k, u)| {
                let t = self.grid.time(k);
                let n = u.len() - 1;
                (u[0] - d.b0(t)).abs().max((u[n] - d.b1(t)).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Convenience wrapper around [`FullSolver::solve`].
pub fn solve_full(config: &ProblemConfig, mu: &ParameterPoint) -> Result<FullTrajectory> {
    FullSolver::new(config)?.solve(mu)
}
