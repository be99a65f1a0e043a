//! A posteriori `L²` error bound for the reduced trajectory.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{AssembledForms, FemSpace, NodalVector};
use crate::linalg::{axpy, dot, norm2};
use crate::offline::{initial_modes, BoundaryResidual, ReducedBasis};
use crate::online::{OnlineModel, ReducedTrajectory};
use crate::params::{DataFunctions, FrequencyStructure, ParameterPoint};

/// Gram matrix `H` of the projection residuals of `𝟏` and `π(sin(ω^{u0}_l ·))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialErrorGram {
    pub dim: usize,
    pub matrix: Vec<f64>,
}

fn projection_residual(basis: &ReducedBasis, forms: &AssembledForms, v: &[f64]) -> Vec<f64> {
    let mv = forms.mass.mul_vec(v);
    let mut r = v.to_vec();
    for z in &basis.vectors {
        axpy(-dot(z, &mv), z, &mut r);
    }
    r
}

pub fn build_initial_gram(basis: &ReducedBasis, space: &FemSpace, forms: &AssembledForms, freq: &FrequencyStructure) -> InitialErrorGram {
    let res: Vec<Vec<f64>> = initial_modes(space, freq).iter().map(|m| projection_residual(basis, forms, m)).collect();
    let dim = res.len();
    let mut matrix = vec![0.0; dim * dim];
    for a in 0..dim {
        let ma = forms.mass.mul_vec(&res[a]);
        for b in 0..dim {
            matrix[a * dim + b] = dot(&ma, &res[b]);
        }
    }
    InitialErrorGram { dim, matrix }
}

fn quadratic_norm(matrix: &[f64], x: &[f64]) -> f64 {
    // Symmetric: diagonal plus twice the strict upper triangle.
    let n = x.len();
    let mut s = 0.0;
    for a in 0..n {
        let row = &matrix[a * n..(a + 1) * n];
        s += x[a] * (0.5 * row[a] * x[a] + dot(&row[a + 1..], &x[a + 1..]));
    }
    s *= 2.0;
    libm::sqrt(s.max(0.0))
}

/// `‖e₀‖ = (𝐞₀ᵀ H 𝐞₀)^{1/2}` with `𝐞₀ = (u0m, A^{u0}_1, …)`.
pub fn initial_error_norm(gram: &InitialErrorGram, mu: &ParameterPoint) -> Result<f64> {
    if mu.amp_u0.len() + 1 != gram.dim {
        return Err(Error::DimensionMismatch { expected: gram.dim, found: mu.amp_u0.len() + 1 });
    }
    let mut e0 = vec![mu.u0_mean];
    e0.extend_from_slice(&mu.amp_u0);
    Ok(quadratic_norm(&gram.matrix, &e0))
}

/// Gram matrix `G` of the Riesz representers on `X₀`, ordered as
/// `Γ^{int}, Γ^{fS}_p, Γ^{⟨⟩}_j, Γ^c_{j,j'} (j ≤ j', row-major), Γ^a_j`.
/// For `j < j'` the convection entry is `Γ^c_{j,j'} + Γ^c_{j',j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualGram {
    pub num_sources: usize,
    pub basis_size: usize,
    pub dim: usize,
    pub matrix: Vec<f64>,
}

/// Interior values of the functionals whose Riesz representers make up `G`.
pub fn residual_functionals(basis: &ReducedBasis, space: &FemSpace, forms: &AssembledForms, freq: &FrequencyStructure) -> Vec<Vec<f64>> {
    let last = space.num_intervals();
    let interior = |v: Vec<f64>| v[1..last].to_vec();
    let mut out = Vec::new();
    out.push(interior(forms.hat_integrals.clone()));
    for &w in &freq.f_space {
        out.push(interior(forms.mass.mul_vec(&space.interpolate(|x| libm::sin(w * x)))));
    }
    for z in &basis.vectors {
        out.push(interior(forms.mass.mul_vec(z)));
    }
    for (j, zj) in basis.vectors.iter().enumerate() {
        for zjp in &basis.vectors[j..] {
            let mut c = space.trilinear_load(zj, zjp);
            if !core::ptr::eq(zj, zjp) {
                axpy(1.0, &space.trilinear_load(zjp, zj), &mut c);
            }
            out.push(interior(c));
        }
    }
    for z in &basis.vectors {
        out.push(interior(forms.stiffness.mul_vec(z)));
    }
    out
}

pub fn build_residual_gram(basis: &ReducedBasis, space: &FemSpace, forms: &AssembledForms, freq: &FrequencyStructure) -> Result<ResidualGram> {
    let m0 = forms.interior_mass();
    let functionals = residual_functionals(basis, space, forms, freq);
    let reps: Vec<Vec<f64>> = functionals.iter().map(|f| m0.solve(f)).collect::<Result<_>>()?;
    let dim = reps.len();
    let mut matrix = vec![0.0; dim * dim];
    for a in 0..dim {
        for b in a..dim {
            let g = dot(&reps[a], &functionals[b]);
            matrix[a * dim + b] = g;
            matrix[b * dim + a] = g;
        }
    }
    Ok(ResidualGram { num_sources: freq.f_space.len(), basis_size: basis.size(), dim, matrix })
}

/// Coefficients `𝝆_k` of the Riesz representer of the residual.
pub fn residual_coefficients(model: &OnlineModel, mu: &ParameterPoint, k: usize, uk: &[f64], ukm1: &[f64]) -> Vec<f64> {
    let d = DataFunctions::new(mu, &model.header.freq);
    let dt = model.header.dt;
    let mut rho = Vec::with_capacity(model.residual_gram.dim);
    rho.push(mu.f_mean);
    rho.extend(d.source_weights(model.time(k)));
    rho.extend(uk.iter().zip(ukm1).map(|(a, b)| -(a - b) / dt));
    for (j, a) in uk.iter().enumerate() {
        for b in &uk[j..] {
            rho.push(-a * b);
        }
    }
    rho.extend(uk.iter().map(|a| -mu.nu * a));
    rho
}

/// `‖r_k‖₀ = (𝝆_kᵀ G 𝝆_k)^{1/2}`
pub fn residual_zero_norm(model: &OnlineModel, mu: &ParameterPoint, k: usize, uk: &[f64], ukm1: &[f64]) -> f64 {
    let rho = residual_coefficients(model, mu, k, uk, ukm1);
    quadratic_norm(&model.residual_gram.matrix, &rho)
}

/// Lower and upper bounds on the stability constant at one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityPair {
    pub c_inf: f64,
    pub c_sup: f64,
}

/// All ingredients of the bound at one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub step: usize,
    pub eps: f64,
    pub c_inf: f64,
    pub c_sup: f64,
    pub a_inf: f64,
    pub a_sup: f64,
    pub b_sup: f64,
    pub gamma_sup: f64,
    pub d_sup: f64,
    pub r_norm: f64,
    pub eta: f64,
    pub sigma_sup: f64,
    pub f: f64,
    pub e_left: f64,
    pub e_right: f64,
}

/// `r(φ_w) - P e(w)`: the boundary residual with the penalty part removed.
fn boundary_residual_rest(br: &BoundaryResidual, model: &OnlineModel, mu: &ParameterPoint, k: usize, uk: &[f64], ukm1: &[f64]) -> f64 {
    let d = DataFunctions::new(mu, &model.header.freq);
    let n = uk.len();
    let mut r = mu.f_mean * br.hat_integral + dot(&d.source_weights(model.time(k)), &br.fsin);
    for j in 0..n {
        r -= (uk[j] - ukm1[j]) / model.header.dt * br.mass[j];
        r -= mu.nu * uk[j] * br.stiff[j];
        r -= uk[j] * dot(&br.tri[j * n..(j + 1) * n], uk);
    }
    r
}

/// One step of the certified bound, given `ε_{k-1}` and stability bounds.
#[allow(clippy::too_many_arguments)]
pub fn certified_bound_step(
    model: &OnlineModel,
    mu: &ParameterPoint,
    k: usize,
    eps_prev: f64,
    uk: &[f64],
    ukm1: &[f64],
    stab: StabilityPair,
) -> Result<BoundState> {
    let dt = model.header.dt;
    let StabilityPair { c_inf, c_sup } = stab;
    let a_inf = 1.0 / dt + c_inf;
    if !(a_inf > 0.0) {
        return Err(Error::CertificationUnavailable { step: k, a_inf });
    }
    let a_sup = 1.0 / dt + c_sup;
    let aux = &model.tensors.boundary;
    let d = DataFunctions::new(mu, &model.header.freq);
    let t = model.time(k);
    let (ul, ur) = model.boundary_values(uk);
    let e_left = d.b0(t) - ul;
    let e_right = d.b1(t) - ur;
    let nu = mu.nu;

    let eta = (e_left.abs() + e_right.abs()) * aux.hat_norm;
    let f = aux.continuity
        * (e_left.abs() * (aux.psi_10.psi(uk, nu) + aux.psi_01.psi(uk, nu)).abs()
            + e_right.abs() * (aux.psi_mn.psi(uk, nu) + aux.psi_nm.psi(uk, nu)).abs());
    let sigma_sup = 2.0 * eta * c_sup.abs().max(c_inf.abs());
    let r_norm = residual_zero_norm(model, mu, k, uk, ukm1);
    let b_sup = eps_prev / dt + sigma_sup + f + r_norm;

    // e(w) r(φ_w) - P e(w)² = e(w) (r(φ_w) - P e(w)) under the truth hypothesis.
    let rest_left = boundary_residual_rest(&aux.left, model, mu, k, uk, ukm1);
    let rest_right = boundary_residual_rest(&aux.right, model, mu, k, uk, ukm1);
    let gamma_sup = -e_left * e_left * aux.psi_00.psi(uk, nu) - e_right * e_right * aux.psi_nn.psi(uk, nu) - c_inf * eta * eta
        + eta * f
        + eta * r_norm
        + e_left * rest_left
        + e_right * rest_right
        + (e_right * e_right * e_right - e_left * e_left * e_left) / 6.0;

    let d_sup = if gamma_sup >= 0.0 { b_sup * b_sup + 4.0 * a_sup * gamma_sup } else { b_sup * b_sup + 4.0 * a_inf * gamma_sup };
    let eps = if d_sup >= 0.0 { (b_sup + libm::sqrt(d_sup)) / (2.0 * a_inf) } else { b_sup / a_inf };
    Ok(BoundState { step: k, eps, c_inf, c_sup, a_inf, a_sup, b_sup, gamma_sup, d_sup, r_norm, eta, sigma_sup, f, e_left, e_right })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedSolution {
    pub trajectory: ReducedTrajectory,
    /// `‖e₀‖`
    pub eps0: f64,
    /// `ε₀ ..= ε_𝒯`
    pub bounds: Vec<f64>,
    /// Ingredients at steps `1..=𝒯`.
    pub steps: Vec<BoundState>,
}

impl CertifiedSolution {
    /// `ε_k / ‖ũ^k‖` for `k = 1..=𝒯`.
    pub fn relative_bounds(&self) -> Vec<f64> {
        self.bounds[1..].iter().zip(&self.trajectory.states[1..]).map(|(e, u)| e / norm2(u)).collect()
    }
}

/// Runs the bound recursion along `traj`, seeded with `ε₀ = ‖e₀‖`, using
/// `stability(k, coefficients)` for the stability bounds.
pub fn certify_with(
    model: &OnlineModel,
    mu: &ParameterPoint,
    traj: ReducedTrajectory,
    stability: &mut dyn FnMut(usize, &[f64]) -> Result<StabilityPair>,
) -> Result<CertifiedSolution> {
    let eps0 = initial_error_norm(&model.initial_gram, mu)?;
    let mut bounds = Vec::with_capacity(traj.states.len());
    let mut steps = Vec::with_capacity(traj.states.len().saturating_sub(1));
    bounds.push(eps0);
    for k in 1..traj.states.len() {
        let stab = stability(k, &traj.states[k])?;
        let b = certified_bound_step(model, mu, k, bounds[k - 1], &traj.states[k], &traj.states[k - 1], stab)?;
        bounds.push(b.eps);
        steps.push(b);
    }
    Ok(CertifiedSolution { trajectory: traj, eps0, bounds, steps })
}

/// Local indicators: `‖e₀‖` at `k = 0`, then the one-step bound with
/// `ε_{k-1} = 0`. Steps where `1/Δt + C_inf ≤ 0` get `+∞`.
pub fn local_bounds(
    model: &OnlineModel,
    mu: &ParameterPoint,
    traj: &ReducedTrajectory,
    stability: &mut dyn FnMut(usize, &[f64]) -> Result<StabilityPair>,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(traj.states.len());
    out.push(initial_error_norm(&model.initial_gram, mu)?);
    for k in 1..traj.states.len() {
        let stab = stability(k, &traj.states[k])?;
        match certified_bound_step(model, mu, k, 0.0, &traj.states[k], &traj.states[k - 1], stab) {
            Ok(b) => out.push(b.eps),
            Err(Error::CertificationUnavailable { .. }) => out.push(f64::INFINITY),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Reduced solve plus certification with the model's SCM bounds.
pub fn certify_trajectory(model: &OnlineModel, mu: &ParameterPoint) -> Result<CertifiedSolution> {
    let scm = model.scm.as_ref().ok_or(Error::MissingScm)?;
    let traj = model.solve_reduced(mu)?;
    let coords = mu.coordinates();
    let mut query = scm.trajectory_query(&coords);
    let mut stability = |k: usize, coeffs: &[f64]| -> Result<StabilityPair> {
        Ok(StabilityPair { c_inf: scm.lower_along(&mut query, mu.nu, k, coeffs)?, c_sup: scm.upper(mu.nu, coeffs)? })
    };
    certify_with(model, mu, traj, &mut stability)
}

/// Full-space `‖π(u₀) − π̃(π(u₀))‖`, used as a cross-check of [`initial_error_norm`].
pub fn initial_error_direct(basis: &ReducedBasis, space: &FemSpace, forms: &AssembledForms, mu: &ParameterPoint, freq: &FrequencyStructure) -> f64 {
    let d = DataFunctions::new(mu, freq);
    let u0: NodalVector = space.interpolate(|x| d.u0(x));
    let r = projection_residual(basis, forms, &u0);
    space.l2_norm(forms, &r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_inputs_give_zero_bound() {
        let space = FemSpace::new(6).unwrap();
        let forms = space.assemble(1e7);
        let freq = FrequencyStructure::default();
        let z = crate::offline::orthonormalize_against(&[], &space.interpolate(|_| 1.0), &forms.mass).unwrap();
        let basis = ReducedBasis { vectors: vec![z], enriched_count: 1 };
        let ranges = crate::params::ParameterRanges {
            nu: crate::Interval::point(1.0),
            amp_b0: vec![],
            amp_b1: vec![],
            f_mean: crate::Interval::point(0.0),
            amp_f: vec![],
            u0_mean: crate::Interval::point(0.0),
            amp_u0: vec![],
        };
        let cfg = crate::ProblemConfig::new(6, 0.1, 0.2, freq.clone(), ranges);
        let model = OnlineModel::build(&basis, &space, &forms, &cfg, None).unwrap();
        let mu = ParameterPoint { nu: 1.0, b0_mean: 0.0, amp_b0: vec![], b1_mean: 0.0, amp_b1: vec![], f_mean: 0.0, amp_f: vec![], u0_mean: 0.0, amp_u0: vec![] };
        let b = certified_bound_step(&model, &mu, 1, 0.0, &[0.0], &[0.0], StabilityPair { c_inf: 1.0, c_sup: 2.0 }).unwrap();
        assert_eq!(b.eps, 0.0);
        assert_eq!(b.b_sup, 0.0);
        assert!(b.gamma_sup <= 0.0);
        assert!(model.initial_gram.matrix.iter().all(|v| v.abs() < 1e-24));
        let err = certified_bound_step(&model, &mu, 1, 0.0, &[0.0], &[0.0], StabilityPair { c_inf: -20.0, c_sup: 2.0 });
        assert!(matches!(err, Err(Error::CertificationUnavailable { step: 1, .. })));
    }
}
