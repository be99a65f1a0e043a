//! Successive constraints bounds `C_inf ≤ C_k(μ) ≤ C_sup` for the stability constant
//!
//! ```text
//! C_k(μ) = inf_{v ∈ X₀, ‖v‖ = 1} 2 c(ũ^k, v, v) + ν a(v, v)
//! ```

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{AssembledForms, FemSpace};
use crate::linalg::{dot, largest_pencil_eigen, smallest_pencil_eigen, PencilEigen, Tridiagonal};
use crate::offline::ReducedBasis;
use crate::online::OnlineModel;
use crate::params::ParameterPoint;
use crate::simplex::{simplex_solve_parts, WarmSimplex};

/// Relative slack applied to the LP box and constraint right-hand sides so
/// that rounding in the eigensolves cannot cut off the true feasible points.
pub const ROUNDING_GUARD: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScmConstraint {
    pub step: usize,
    /// Coordinates of `μ'` in [`ParameterPoint::coordinates`] order.
    pub coords: Vec<f64>,
    /// Coefficients `(2u^{k'}_1(μ'), …, 2u^{k'}_N(μ'), ν')` of `𝒥(μ', k', ·)`.
    pub objective: Vec<f64>,
    /// `C_{k'}(μ')`
    pub value: f64,
    pub y_star: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScmData {
    pub sigma_min: Vec<f64>,
    pub sigma_max: Vec<f64>,
    pub constraints: Vec<ScmConstraint>,
    pub nearest_count: usize,
    /// Coordinate spans of the parameter domain, used by the metric.
    pub spans: Vec<f64>,
    pub num_steps: usize,
}

/// `Σ_i ((μ^i − μ'^i)/span_i)² + ((k − k')/𝒯)²`; zero spans contribute nothing.
pub fn metric_distance(c1: &[f64], k1: usize, c2: &[f64], k2: usize, spans: &[f64], num_steps: usize) -> f64 {
    let mut d = 0.0;
    for ((a, b), s) in c1.iter().zip(c2).zip(spans) {
        if *s != 0.0 {
            let q = (a - b) / s;
            d += q * q;
        }
    }
    let q = (k1 as f64 - k2 as f64) / num_steps as f64;
    d + q * q
}

/// Per-trajectory state for [`ScmData::lower_along`].
#[derive(Clone, Debug)]
pub struct TrajectoryQuery {
    param: Vec<f64>,
    warm: WarmSimplex,
}

fn objective(coeffs: &[f64], nu: f64) -> Vec<f64> {
    let mut o: Vec<f64> = coeffs.iter().map(|u| 2.0 * u).collect();
    o.push(nu);
    o
}

fn guard(v: f64) -> f64 {
    ROUNDING_GUARD * (1.0 + v.abs())
}

impl ScmData {
    pub fn basis_size(&self) -> usize {
        self.sigma_min.len() - 1
    }

    /// Indices of the `M` stored constraints closest to `(μ, k)`, ties by index,
    /// returned in increasing order.
    pub fn nearest(&self, coords: &[f64], k: usize) -> Vec<usize> {
        self.nearest_from(&self.parameter_distances(coords), k)
    }

    /// Parameter part of [`metric_distance`] to every stored constraint.
    pub fn parameter_distances(&self, coords: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|c| metric_distance(coords, 0, &c.coords, 0, &self.spans, self.num_steps)).collect()
    }

    fn nearest_from(&self, param: &[f64], k: usize) -> Vec<usize> {
        let mut idx: Vec<(f64, usize)> = self
            .constraints
            .iter()
            .zip(param)
            .enumerate()
            .map(|(i, (c, d))| {
                let q = (k as f64 - c.step as f64) / self.num_steps as f64;
                (d + q * q, i)
            })
            .collect();
        if idx.len() > self.nearest_count {
            idx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            idx.truncate(self.nearest_count);
        }
        let mut out: Vec<usize> = idx.into_iter().map(|(_, i)| i).collect();
        out.sort_unstable();
        out
    }

    /// Lower bound: the LP over the box `[σ_min, σ_max]` cut by the nearest constraints.
    pub fn lower(&self, coords: &[f64], nu: f64, k: usize, coeffs: &[f64]) -> Result<f64> {
        self.lower_with(None, &self.nearest(coords, k), nu, coeffs)
    }

    /// [`ScmData::lower`] for successive steps of one trajectory at fixed `μ`.
    pub fn lower_along(&self, query: &mut TrajectoryQuery, nu: f64, k: usize, coeffs: &[f64]) -> Result<f64> {
        let nearest = self.nearest_from(&query.param, k);
        self.lower_with(Some(&mut query.warm), &nearest, nu, coeffs)
    }

    pub fn trajectory_query(&self, coords: &[f64]) -> TrajectoryQuery {
        TrajectoryQuery { param: self.parameter_distances(coords), warm: WarmSimplex::new() }
    }

    fn lower_with(&self, warm: Option<&mut WarmSimplex>, nearest: &[usize], nu: f64, coeffs: &[f64]) -> Result<f64> {
        let n = self.basis_size();
        if coeffs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: coeffs.len() });
        }
        let obj = objective(coeffs, nu);
        let mut warm = warm;
        if let Some(sol) = warm.as_mut().and_then(|w| w.resolve(nearest, &obj)) {
            return Ok(sol.value);
        }
        let lower: Vec<f64> = self.sigma_min.iter().map(|v| v - guard(*v)).collect();
        let upper: Vec<f64> = self.sigma_max.iter().map(|v| v + guard(*v)).collect();
        let rows: Vec<&[f64]> = nearest.iter().map(|&i| self.constraints[i].objective.as_slice()).collect();
        let rhs: Vec<f64> = nearest.iter().map(|&i| self.constraints[i].value - guard(self.constraints[i].value)).collect();
        let solved = match warm {
            Some(w) => w.solve(nearest, &obj, &lower, &upper, &rows, &rhs),
            None => simplex_solve_parts(&obj, &lower, &upper, &rows, &rhs),
        };
        match solved {
            Ok(s) => Ok(s.value),
            Err(Error::Infeasible) => Err(Error::ScmCorrupted("lower-bound LP is infeasible".into())),
            Err(e) => Err(e),
        }
    }

    /// Upper bound: the smallest `𝒥(μ, k, y*)` over the stored minimizers.
    pub fn upper(&self, nu: f64, coeffs: &[f64]) -> Result<f64> {
        if self.constraints.is_empty() {
            return Err(Error::EmptyConstraintSet);
        }
        let o = objective(coeffs, nu);
        Ok(self.constraints.iter().map(|c| dot(&o, &c.y_star)).fold(f64::INFINITY, f64::min))
    }

    /// `1 − exp(C_inf − C_sup)`
    pub fn sharpness(&self, coords: &[f64], nu: f64, k: usize, coeffs: &[f64]) -> Result<f64> {
        let lo = self.lower(coords, nu, k, coeffs)?;
        let hi = self.upper(nu, coeffs)?;
        Ok(1.0 - libm::exp(lo - hi))
    }
}

fn symmetric_part(c: &Tridiagonal) -> Tridiagonal {
    c.add_scaled(1.0, &c.transpose()).scaled(0.5)
}

fn interior(t: &Tridiagonal) -> Tridiagonal {
    t.submatrix(1, t.dim() - 1)
}

/// Extreme values of `c(ζ_i, v, v)` and of `a(v, v)` over unit `v ∈ X₀`.
pub fn sigma_bounds(basis: &ReducedBasis, space: &FemSpace, forms: &AssembledForms) -> Result<(Vec<f64>, Vec<f64>)> {
    let m0 = forms.interior_mass();
    let mut lo = Vec::with_capacity(basis.size() + 1);
    let mut hi = Vec::with_capacity(basis.size() + 1);
    for z in &basis.vectors {
        let s = interior(&symmetric_part(&space.convection_matrix(z)));
        lo.push(smallest_pencil_eigen(&s, &m0)?.value);
        hi.push(largest_pencil_eigen(&s, &m0)?.value);
    }
    let a0 = forms.interior_stiffness();
    lo.push(smallest_pencil_eigen(&a0, &m0)?.value);
    hi.push(largest_pencil_eigen(&a0, &m0)?.value);
    Ok((lo, hi))
}

/// Smallest eigenpair of `ν a + c(ũ, ·, ·) + c(ũ, ·, ·)ᵀ` on `X₀` against the mass.
/// The returned vector is extended by zeros to the full nodal layout.
pub fn exact_stability_pair(space: &FemSpace, forms: &AssembledForms, u: &[f64], nu: f64) -> Result<PencilEigen> {
    space.check(u)?;
    let c = space.convection_matrix(u);
    let psi = forms.stiffness.scaled(nu).add_scaled(1.0, &c).add_scaled(1.0, &c.transpose());
    let mut e = smallest_pencil_eigen(&interior(&psi), &forms.interior_mass())?;
    let mut full = vec![0.0; space.dim()];
    full[1..space.num_intervals()].copy_from_slice(&e.vector);
    e.vector = full;
    Ok(e)
}

pub fn exact_stability(space: &FemSpace, forms: &AssembledForms, u: &[f64], nu: f64) -> Result<f64> {
    Ok(exact_stability_pair(space, forms, u, nu)?.value)
}

/// `y_j = c(ζ_j, w, w)`, `y_{N+1} = a(w, w)`.
pub fn y_of(basis: &ReducedBasis, forms: &AssembledForms, w: &[f64]) -> Vec<f64> {
    let mut y: Vec<f64> = basis.vectors.iter().map(|z| crate::fem::trilinear(z, w, w)).collect();
    y.push(forms.stiffness.bilinear(w, w));
    y
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScmOptions {
    /// `M`
    pub nearest_count: usize,
    /// Maximal `#𝒞`.
    pub max_constraints: usize,
    /// Stop once the largest sharpness indicator falls below this value.
    pub tolerance: f64,
}

impl Default for ScmOptions {
    fn default() -> Self {
        Self { nearest_count: 10, max_constraints: 10, tolerance: 0.0 }
    }
}

/// Greedy constraint selection over `candidates × {1..𝒯}`.
///
/// Returns the trained data and the indicator at each selected point just before selection.
pub fn scm_train(
    model: &OnlineModel,
    basis: &ReducedBasis,
    space: &FemSpace,
    forms: &AssembledForms,
    candidates: &[ParameterPoint],
    spans: Vec<f64>,
    options: ScmOptions,
) -> Result<(ScmData, Vec<f64>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig { key: "scm.candidates".into(), reason: "empty candidate sample".into() });
    }
    let (sigma_min, sigma_max) = sigma_bounds(basis, space, forms)?;
    let num_steps = model.header.num_steps;
    let trajectories: Vec<Vec<Vec<f64>>> = candidates.iter().map(|mu| model.solve_reduced(mu).map(|t| t.states)).collect::<Result<_>>()?;
    let coords: Vec<Vec<f64>> = candidates.iter().map(|mu| mu.coordinates()).collect();
    let mut data = ScmData { sigma_min, sigma_max, constraints: Vec::new(), nearest_count: options.nearest_count, spans, num_steps };

    let add = |data: &mut ScmData, s: usize, k: usize| -> Result<()> {
        let coeffs = &trajectories[s][k];
        let u = basis.reconstruct(coeffs);
        let nu = candidates[s].nu;
        let e = exact_stability_pair(space, forms, &u, nu)?;
        data.constraints.push(ScmConstraint {
            step: k,
            coords: coords[s].clone(),
            objective: objective(coeffs, nu),
            value: e.value,
            y_star: y_of(basis, forms, &e.vector),
        });
        Ok(())
    };

    let mut picked = Vec::new();
    if options.max_constraints == 0 {
        return Ok((data, picked));
    }
    add(&mut data, 0, 1)?;
    picked.push(f64::NAN);
    while data.constraints.len() < options.max_constraints {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for s in 0..candidates.len() {
            let mut query = data.trajectory_query(&coords[s]);
            for k in 1..=num_steps {
                let coeffs = &trajectories[s][k];
                let nu = candidates[s].nu;
                let v = 1.0 - libm::exp(data.lower_along(&mut query, nu, k, coeffs)? - data.upper(nu, coeffs)?);
                if v > best.0 {
                    best = (v, s, k);
                }
            }
        }
        if best.0 < options.tolerance || best.0 <= 0.0 {
            break;
        }
        add(&mut data, best.1, best.2)?;
        picked.push(best.0);
    }
    Ok((data, picked))
}
