//! Basis construction and the parameter-independent reduced tensors.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certify::{local_bounds, StabilityPair};
use crate::config::ProblemConfig;
use crate::error::{Error, Result};
use crate::fem::{AssembledForms, FemSpace, NodalVector};
use crate::full::{FullSolver, FullTrajectory};
use crate::linalg::{axpy, dot, Tridiagonal};
use crate::online::OnlineModel;
use crate::params::{FrequencyStructure, ParameterPoint};
use crate::scm::exact_stability;

/// Relative threshold under which a vector is treated as linearly dependent.
pub const DEPENDENCE_TOL: f64 = 1e-10;

/// Full-order states of several parameter points, one column per `(μ, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSet {
    /// Column `s (𝒯 + 1) + k` holds `u^k(μ_s)`.
    pub columns: Vec<NodalVector>,
    pub sample: Vec<ParameterPoint>,
    pub states_per_sample: usize,
}

impl SnapshotSet {
    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, sample: usize, k: usize) -> &NodalVector {
        &self.columns[sample * self.states_per_sample + k]
    }
}

pub fn build_snapshots(sample: &[ParameterPoint], config: &ProblemConfig) -> Result<SnapshotSet> {
    if sample.is_empty() {
        return Err(Error::InvalidConfig { key: "rb.snapshots".into(), reason: "empty parameter sample".into() });
    }
    let solver = FullSolver::new(config)?;
    let mut columns = Vec::new();
    for (s, mu) in sample.iter().enumerate() {
        let traj = solver.solve(mu).map_err(|e| Error::Snapshot { sample: s, source: alloc::boxed::Box::new(e) })?;
        columns.extend(traj.states);
    }
    Ok(SnapshotSet { columns, sample: sample.to_vec(), states_per_sample: config.num_steps() + 1 })
}

/// `L²`-orthonormal reduced basis `ζ₁ … ζ_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedBasis {
    pub vectors: Vec<NodalVector>,
    /// Number of leading vectors that came from initial-data enrichment.
    pub enriched_count: usize,
}

impl ReducedBasis {
    pub fn size(&self) -> usize {
        self.vectors.len()
    }

    /// `Σ_j c_j ζ_j` as a nodal vector. This is the only mesh-sized operation on reduced states.
    pub fn reconstruct(&self, coeffs: &[f64]) -> NodalVector {
        let mut out = vec![0.0; self.vectors.first().map_or(0, |v| v.len())];
        for (c, z) in coeffs.iter().zip(&self.vectors) {
            axpy(*c, z, &mut out);
        }
        NodalVector(out)
    }

    /// Matrix of `⟨ζ_i, ζ_j⟩`, row-major.
    pub fn gram(&self, forms: &AssembledForms) -> Vec<f64> {
        let n = self.size();
        let mz: Vec<Vec<f64>> = self.vectors.iter().map(|z| forms.mass.mul_vec(z)).collect();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = dot(&self.vectors[i], &mz[j]);
            }
        }
        g
    }
}

/// Orthogonalizes `v` against `basis` in the mass inner product (two passes)
/// and normalizes it. Returns `None` if the remainder is below
/// `DEPENDENCE_TOL` relative to the norm of `v`.
pub fn orthonormalize_against(basis: &[NodalVector], v: &[f64], mass: &Tridiagonal) -> Option<NodalVector> {
    let original = libm::sqrt(mass.bilinear(v, v).max(0.0));
    if !(original > 0.0) || !original.is_finite() {
        return None;
    }
    let mut w = v.to_vec();
    for _ in 0..2 {
        let mw = mass.mul_vec(&w);
        for z in basis {
            let c = dot(z, &mw);
            axpy(-c, z, &mut w);
        }
    }
    let nrm = libm::sqrt(mass.bilinear(&w, &w).max(0.0));
    if nrm <= DEPENDENCE_TOL * original {
        return None;
    }
    w.iter_mut().for_each(|x| *x /= nrm);
    Some(NodalVector(w))
}

/// Singular values of `Lᵀ X` (so that their squares are the eigenvalues of
/// `XᵀΩX`) together with the corresponding `Ω`-orthonormal left vectors
/// `L⁻ᵀ U_i`, sorted by decreasing singular value.
pub fn pod_modes(snapshots: &SnapshotSet, forms: &AssembledForms) -> Result<(Vec<f64>, Vec<NodalVector>)> {
    let rows = forms.mass.dim();
    let cols = snapshots.num_columns();
    for c in &snapshots.columns {
        if c.len() != rows {
            return Err(Error::DimensionMismatch { expected: rows, found: c.len() });
        }
    }
    let chol = forms.mass.cholesky()?;
    let mut y = DMatrix::<f64>::zeros(rows, cols);
    for (j, c) in snapshots.columns.iter().enumerate() {
        let lc = chol.mul_transpose(c);
        for i in 0..rows {
            y[(i, j)] = lc[i];
        }
    }
    // The thin SVD of the transpose keeps the computation at (𝒩+1) singular triplets.
    let svd = y.transpose().svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Eigen("SVD did not return singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let mut values = Vec::with_capacity(order.len());
    let mut modes = Vec::with_capacity(order.len());
    for &i in &order {
        values.push(svd.singular_values[i]);
        let u: Vec<f64> = (0..rows).map(|r| v_t[(i, r)]).collect();
        modes.push(NodalVector(chol.solve_transpose(&u)));
    }
    Ok((values, modes))
}

/// Leading eigenvalues of the snapshot correlation matrix `XᵀΩX`.
pub fn pod_spectrum(snapshots: &SnapshotSet, forms: &AssembledForms) -> Result<Vec<f64>> {
    Ok(pod_modes(snapshots, forms)?.0.into_iter().map(|s| s * s).collect())
}

pub fn pod_basis(snapshots: &SnapshotSet, forms: &AssembledForms, n: usize) -> Result<ReducedBasis> {
    if n == 0 {
        return Err(Error::InvalidConfig { key: "rb.N".into(), reason: "basis size must be at least 1".into() });
    }
    let (values, modes) = pod_modes(snapshots, forms)?;
    let top = values.first().copied().unwrap_or(0.0);
    let available = if top > 0.0 { values.iter().take_while(|&&s| s > top * 1e-12).count() } else { 0 };
    if available < n {
        return Err(Error::RankDeficient { requested: n, available });
    }
    let mut vectors: Vec<NodalVector> = Vec::with_capacity(n);
    for m in modes.into_iter().take(n) {
        let z = orthonormalize_against(&vectors, &m, &forms.mass).ok_or(Error::RankDeficient { requested: n, available: vectors.len() })?;
        vectors.push(z);
    }
    Ok(ReducedBasis { vectors, enriched_count: 0 })
}

/// `[𝟏, π(sin(ω^{u0}_1 ·)), …]`
pub fn initial_modes(space: &FemSpace, freq: &FrequencyStructure) -> Vec<NodalVector> {
    let mut v = vec![space.interpolate(|_| 1.0)];
    v.extend(freq.u0.iter().map(|&w| space.interpolate(|x| libm::sin(w * x))));
    v
}

/// Prepends the initial-data modes and re-orthonormalizes the whole family.
/// Modes that already lie in the span are skipped.
pub fn enrich_with_initial_modes(basis: &ReducedBasis, space: &FemSpace, forms: &AssembledForms, freq: &FrequencyStructure) -> ReducedBasis {
    let mut vectors: Vec<NodalVector> = Vec::new();
    let mut enriched = 0;
    for m in initial_modes(space, freq) {
        if let Some(z) = orthonormalize_against(&vectors, &m, &forms.mass) {
            vectors.push(z);
            enriched += 1;
        }
    }
    for b in &basis.vectors {
        if let Some(z) = orthonormalize_against(&vectors, b, &forms.mass) {
            vectors.push(z);
        }
    }
    ReducedBasis { vectors, enriched_count: enriched }
}

/// `ψ`-ingredients `c(ζ_j, φ_a, φ_b)` (per `j`) and `a(φ_a, φ_b)` for one hat pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HatPair {
    pub tri: Vec<f64>,
    pub stiff: f64,
}

impl HatPair {
    /// `ψ(φ_a, φ_b) = 2 c(ũ, φ_a, φ_b) + ν a(φ_a, φ_b)`
    pub fn psi(&self, coeffs: &[f64], nu: f64) -> f64 {
        2.0 * dot(coeffs, &self.tri) + nu * self.stiff
    }
}

/// Terms of `r(φ_w)` for a boundary hat, without the penalty part `P e(w)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryResidual {
    /// `∫ φ_w`
    pub hat_integral: f64,
    /// `∫ π(sin(ω^{fS}_p ·)) φ_w`
    pub fsin: Vec<f64>,
    /// `⟨ζ_j, φ_w⟩`
    pub mass: Vec<f64>,
    /// `c(ζ_j, ζ_{j'}, φ_w)`, row-major in `(j, j')`.
    pub tri: Vec<f64>,
    /// `a(ζ_j, φ_w)`
    pub stiff: Vec<f64>,
}

/// Boundary ingredients of the error bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAux {
    pub psi_00: HatPair,
    pub psi_10: HatPair,
    pub psi_01: HatPair,
    pub psi_nn: HatPair,
    pub psi_mn: HatPair,
    pub psi_nm: HatPair,
    pub left: BoundaryResidual,
    pub right: BoundaryResidual,
    /// `‖φ₀‖ = ‖φ_𝒩‖`
    pub hat_norm: f64,
    /// `sup_{v ∈ X₀, ‖v‖ = 1} v(x₁)`
    pub continuity: f64,
}

/// Parameter-independent reduced quantities. Dense `N×N` arrays are row-major
/// with the test-function index `i` first: `red_mass[i * N + j] = ⟨ζ_j, ζ_i⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfflineTensors {
    pub size: usize,
    pub red_mass: Vec<f64>,
    pub red_stiff: Vec<f64>,
    pub red_bpen: Vec<f64>,
    /// `red_tri[(j' N + j) N + i] = c(ζ_{j'}, ζ_j, ζ_i)`
    pub red_tri: Vec<f64>,
    pub red_beta0: Vec<f64>,
    pub red_beta1: Vec<f64>,
    /// `ζ_j(0)` and `ζ_j(1)`.
    pub zeta_left: Vec<f64>,
    pub zeta_right: Vec<f64>,
    pub red_int: Vec<f64>,
    /// `red_fsin[p][i] = ∫ π(sin(ω^{fS}_p ·)) ζ_i`
    pub red_fsin: Vec<Vec<f64>>,
    /// Coefficients of `π̃(𝟏)`.
    pub proj_one: Vec<f64>,
    /// Coefficients of `π̃(π(sin(ω^{u0}_l ·)))`.
    pub proj_u0sin: Vec<Vec<f64>>,
    pub boundary: BoundaryAux,
}

/// `sup_{v ∈ X₀, ‖v‖=1} v(x₁) = (e₁ᵀ M₀⁻¹ e₁)^{1/2}`.
pub fn continuity_constant(forms: &AssembledForms) -> Result<f64> {
    let m0 = forms.interior_mass();
    let mut e1 = vec![0.0; m0.dim()];
    e1[0] = 1.0;
    let x = m0.solve(&e1)?;
    Ok(libm::sqrt(x[0]))
}

pub fn precompute_offline(basis: &ReducedBasis, space: &FemSpace, forms: &AssembledForms, freq: &FrequencyStructure) -> Result<OfflineTensors> {
    let n = basis.size();
    for z in &basis.vectors {
        space.check(z)?;
    }
    let last = space.num_intervals();
    let zs: Vec<&[f64]> = basis.vectors.iter().map(|v| &v[..]).collect();
    let mz: Vec<Vec<f64>> = zs.iter().map(|z| forms.mass.mul_vec(z)).collect();
    let az: Vec<Vec<f64>> = zs.iter().map(|z| forms.stiffness.mul_vec(z)).collect();
    let p = forms.penalty;

    let mut red_mass = vec![0.0; n * n];
    let mut red_stiff = vec![0.0; n * n];
    let mut red_bpen = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            red_mass[i * n + j] = dot(zs[i], &mz[j]);
            red_stiff[i * n + j] = dot(zs[i], &az[j]);
            red_bpen[i * n + j] = p * (zs[i][0] * zs[j][0] + zs[i][last] * zs[j][last]);
        }
    }
    let red_tri = space.trilinear_tensor(&zs, &zs, &zs);
    let zeta_left: Vec<f64> = zs.iter().map(|z| z[0]).collect();
    let zeta_right: Vec<f64> = zs.iter().map(|z| z[last]).collect();
    let red_int: Vec<f64> = zs.iter().map(|z| dot(z, &forms.hat_integrals)).collect();

    let fsin_full: Vec<Vec<f64>> = freq.f_space.iter().map(|&w| forms.mass.mul_vec(&space.interpolate(|x| libm::sin(w * x)))).collect();
    let red_fsin: Vec<Vec<f64>> = fsin_full.iter().map(|f| zs.iter().map(|z| dot(z, f)).collect()).collect();

    let proj = |v: &[f64]| -> Vec<f64> {
        let mv = forms.mass.mul_vec(v);
        zs.iter().map(|z| dot(z, &mv)).collect()
    };
    let modes = initial_modes(space, freq);
    let proj_one = proj(&modes[0]);
    let proj_u0sin = modes[1..].iter().map(|m| proj(m)).collect();

    let conv: Vec<Tridiagonal> = zs.iter().map(|z| space.convection_matrix(z)).collect();
    let pair = |a: usize, b: usize| HatPair {
        tri: conv.iter().map(|c| c.get(b, a)).collect(),
        stiff: forms.stiffness.get(a, b),
    };
    let boundary_residual = |w: usize| {
        let mut hat = vec![0.0; space.dim()];
        hat[w] = 1.0;
        let tri = space.trilinear_tensor(&zs, &zs, &[&hat]);
        BoundaryResidual {
            hat_integral: forms.hat_integrals[w],
            fsin: fsin_full.iter().map(|f| f[w]).collect(),
            mass: mz.iter().map(|v| v[w]).collect(),
            tri,
            stiff: az.iter().map(|v| v[w]).collect(),
        }
    };
    let boundary = BoundaryAux {
        psi_00: pair(0, 0),
        psi_10: pair(1, 0),
        psi_01: pair(0, 1),
        psi_nn: pair(last, last),
        psi_mn: pair(last - 1, last),
        psi_nm: pair(last, last - 1),
        left: boundary_residual(0),
        right: boundary_residual(last),
        hat_norm: libm::sqrt(space.mesh_width() / 3.0),
        continuity: continuity_constant(forms)?,
    };

    Ok(OfflineTensors {
        size: n,
        red_mass,
        red_stiff,
        red_bpen,
        red_tri,
        red_beta0: zeta_left.iter().map(|v| p * v).collect(),
        red_beta1: zeta_right.iter().map(|v| p * v).collect(),
        zeta_left,
        zeta_right,
        red_int,
        red_fsin,
        proj_one,
        proj_u0sin,
        boundary,
    })
}

/// Greedy selection over `candidates × {0..𝒯}` driven by the local error
/// indicator (the certified bound with `ε_{k-1} = 0` and the exact stability
/// constant). Starts from `initial` when given, otherwise from a random
/// snapshot, and grows the basis to `n` vectors.
pub fn greedy_basis(candidates: &[ParameterPoint], n: usize, config: &ProblemConfig, initial: Option<ReducedBasis>) -> Result<ReducedBasis> {
    Ok(greedy_basis_traced(candidates, n, config, initial)?.0)
}

/// One greedy iteration: the chosen `(sample index, k)` and the maximal indicator.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyStep {
    pub sample: usize,
    pub step: usize,
    pub indicator: f64,
}

pub fn greedy_basis_traced(
    candidates: &[ParameterPoint],
    n: usize,
    config: &ProblemConfig,
    initial: Option<ReducedBasis>,
) -> Result<(ReducedBasis, Vec<GreedyStep>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig { key: "rb.candidates".into(), reason: "empty candidate sample".into() });
    }
    if n == 0 {
        return Err(Error::InvalidConfig { key: "rb.N".into(), reason: "basis size must be at least 1".into() });
    }
    let solver = FullSolver::new(config)?;
    let space = *solver.space();
    let forms = solver.forms().clone();
    let steps = config.num_steps();
    let mut cache: Vec<Option<FullTrajectory>> = vec![None; candidates.len()];
    let snapshot = |s: usize, k: usize, cache: &mut Vec<Option<FullTrajectory>>| -> Result<NodalVector> {
        if cache[s].is_none() {
            let t = solver.solve(&candidates[s]).map_err(|e| Error::Snapshot { sample: s, source: alloc::boxed::Box::new(e) })?;
            cache[s] = Some(t);
        }
        Ok(cache[s].as_ref().unwrap().states[k].clone())
    };

    let mut basis = initial.unwrap_or(ReducedBasis { vectors: Vec::new(), enriched_count: 0 });
    let mut trace = Vec::new();
    if basis.vectors.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let s = rng.gen_range(0..candidates.len());
        let k = rng.gen_range(0..=steps);
        let u = snapshot(s, k, &mut cache)?;
        let z = orthonormalize_against(&[], &u, &forms.mass).ok_or(Error::Stagnation { achieved: 0 })?;
        basis.vectors.push(z);
        trace.push(GreedyStep { sample: s, step: k, indicator: f64::NAN });
    }

    while basis.size() < n {
        let model = OnlineModel::build(&basis, &space, &forms, config, None)?;
        let mut best = GreedyStep { sample: 0, step: 0, indicator: f64::NEG_INFINITY };
        for (s, mu) in candidates.iter().enumerate() {
            let indicators = local_indicators(&model, &basis, &space, &forms, mu)?;
            for (k, &v) in indicators.iter().enumerate() {
                if v > best.indicator {
                    best = GreedyStep { sample: s, step: k, indicator: v };
                }
            }
        }
        let u = snapshot(best.sample, best.step, &mut cache)?;
        match orthonormalize_against(&basis.vectors, &u, &forms.mass) {
            Some(z) => basis.vectors.push(z),
            None => return Err(Error::Stagnation { achieved: basis.size() }),
        }
        trace.push(best);
    }
    Ok((basis, trace))
}

/// Local indicator at every `k = 0..=𝒯`: `‖e₀‖` at `k = 0`, the one-step bound
/// with `ε_{k-1} = 0` and exact stability constants afterwards. Steps where
/// the bound is unavailable (`1/Δt + C_k ≤ 0`) get `+∞`.
pub fn local_indicators(model: &OnlineModel, basis: &ReducedBasis, space: &FemSpace, forms: &AssembledForms, mu: &ParameterPoint) -> Result<Vec<f64>> {
    let traj = model.solve_reduced(mu)?;
    let mut stability = |_k: usize, coeffs: &[f64]| -> Result<StabilityPair> {
        let u = basis.reconstruct(coeffs);
        let c = exact_stability(space, forms, &u, mu.nu)?;
        Ok(StabilityPair { c_inf: c, c_sup: c })
    };
    local_bounds(model, mu, &traj, &mut stability)
}
