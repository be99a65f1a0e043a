//! Config files, model files, CSV output and the experiment drivers behind
//! the `burgers-rb` binary.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use burgers_rb::certify::{certify_trajectory, residual_zero_norm, CertifiedSolution};
use burgers_rb::config::{DEFAULT_NEWTON_CAP, DEFAULT_NEWTON_TOL, DEFAULT_PENALTY};
use burgers_rb::full::{FullSolver, FullTrajectory};
use burgers_rb::model::{build_basis, build_model, build_online, BasisMethod, BuildOptions, ReducedModel, MODEL_FORMAT_VERSION};
use burgers_rb::offline::ReducedBasis;
use burgers_rb::params::{make_parameter_point, sample_parameters, FreeCoordinates};
use burgers_rb::scm::{exact_stability, ScmOptions};
use burgers_rb::{FemSpace, FrequencyStructure, ParameterPoint, ParameterRanges, ProblemConfig};

pub const MODEL_FORMAT: &str = "burgers-rb-model";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub num_intervals: usize,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_cap")]
    pub newton_cap: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_penalty() -> f64 {
    DEFAULT_PENALTY
}
fn default_newton_tol() -> f64 {
    DEFAULT_NEWTON_TOL
}
fn default_newton_cap() -> usize {
    DEFAULT_NEWTON_CAP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbSection {
    #[serde(default = "default_method")]
    pub method: BasisMethod,
    #[serde(rename = "N", default = "default_size")]
    pub size: usize,
    #[serde(default)]
    pub enrich: bool,
    /// Snapshot parameters for POD, candidates for greedy.
    #[serde(default = "default_sample")]
    pub sample_size: usize,
}

fn default_method() -> BasisMethod {
    BasisMethod::Pod
}
fn default_size() -> usize {
    5
}
fn default_sample() -> usize {
    10
}

impl Default for RbSection {
    fn default() -> Self {
        Self { method: default_method(), size: default_size(), enrich: false, sample_size: default_sample() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScmSection {
    #[serde(default = "default_nearest")]
    pub nearest_count: usize,
    #[serde(default = "default_nearest")]
    pub max_constraints: usize,
    #[serde(default)]
    pub tolerance: f64,
    #[serde(default = "default_scm_sample")]
    pub sample_size: usize,
}

fn default_nearest() -> usize {
    10
}
fn default_scm_sample() -> usize {
    20
}

impl Default for ScmSection {
    fn default() -> Self {
        Self { nearest_count: default_nearest(), max_constraints: default_nearest(), tolerance: 0.0, sample_size: default_scm_sample() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSection {
    #[serde(default = "default_n_min")]
    pub n_min: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_eval")]
    pub eval_samples: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
}

fn default_n_min() -> usize {
    2
}
fn default_n_max() -> usize {
    10
}
fn default_eval() -> usize {
    100
}
fn default_reps() -> usize {
    5
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self { n_min: default_n_min(), n_max: default_n_max(), eval_samples: default_eval(), reps: default_reps() }
    }
}

/// Contents of a TOML config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub frequencies: FrequencyStructure,
    pub ranges: ParameterRanges,
    #[serde(default)]
    pub rb: RbSection,
    #[serde(default)]
    pub scm: ScmSection,
    #[serde(default)]
    pub benchmark: BenchmarkSection,
    /// Free coordinates of the point used by `full-solve`, `online-solve` and `scm-report`.
    pub point: Option<FreeCoordinates>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: FileConfig = toml::from_str(text)?;
        cfg.problem_config().validate()?;
        if cfg.benchmark.n_min == 0 || cfg.benchmark.n_min > cfg.benchmark.n_max {
            bail!("benchmark.n_min must satisfy 1 <= n_min <= n_max");
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn problem_config(&self) -> ProblemConfig {
        let p = &self.problem;
        ProblemConfig {
            penalty: p.penalty,
            newton_tol: p.newton_tol,
            newton_cap: p.newton_cap,
            seed: p.seed,
            ..ProblemConfig::new(p.num_intervals, p.dt, p.horizon, self.frequencies.clone(), self.ranges.clone())
        }
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            method: self.rb.method,
            size: self.rb.size,
            enrich: self.rb.enrich,
            sample_size: self.rb.sample_size,
            scm: ScmOptions { nearest_count: self.scm.nearest_count, max_constraints: self.scm.max_constraints, tolerance: self.scm.tolerance },
            scm_sample_size: self.scm.sample_size,
        }
    }

    pub fn point(&self) -> Result<ParameterPoint> {
        let raw = self.point.as_ref().context("config has no [point] section")?;
        Ok(make_parameter_point(raw, &self.frequencies, &self.ranges)?)
    }
}

/// Command-line overrides of `[rb]` and `problem.seed`.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub basis: Option<BasisMethod>,
    pub enrich: bool,
    pub size: Option<usize>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut FileConfig) {
        if let Some(m) = self.basis {
            cfg.rb.method = m;
        }
        if self.enrich {
            cfg.rb.enrich = true;
        }
        if let Some(n) = self.size {
            cfg.rb.size = n;
        }
        if let Some(s) = self.seed {
            cfg.problem.seed = s;
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    model: ReducedModel,
}

pub fn save_model(model: &ReducedModel, path: &Path) -> Result<()> {
    let file = ModelFile { format: MODEL_FORMAT.into(), model: model.clone() };
    fs::write(path, serde_json::to_vec(&file)?).with_context(|| format!("writing {}", path.display()))
}

pub fn load_model(path: &Path) -> Result<ReducedModel> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ModelFile = serde_json::from_slice(&bytes).with_context(|| format!("parsing model {}", path.display()))?;
    if file.format != MODEL_FORMAT {
        bail!("{} is not a model file (format {:?})", path.display(), file.format);
    }
    if file.model.version != MODEL_FORMAT_VERSION {
        bail!("model format version {} is not supported (expected {MODEL_FORMAT_VERSION})", file.model.version);
    }
    Ok(file.model)
}

/// Rejects a model whose problem setup differs from `config`.
pub fn check_compatible(model: &ReducedModel, config: &ProblemConfig) -> Result<()> {
    let m = &model.config;
    if m.freq != config.freq {
        return Err(burgers_rb::Error::Incompatible("frequency structure of the model differs from the config".into()).into());
    }
    if m.num_intervals != config.num_intervals || m.dt != config.dt || m.horizon != config.horizon || m.penalty != config.penalty {
        return Err(burgers_rb::Error::Incompatible("mesh, time grid or penalty of the model differs from the config".into()).into());
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn row(values: impl IntoIterator<Item = f64>) -> Vec<String> {
    values.into_iter().map(|v| format!("{v:e}")).collect()
}

/// `t,x0..xN`
pub fn write_full_csv(path: &Path, traj: &FullTrajectory, dt: f64) -> Result<()> {
    let mut w = csv_writer(path)?;
    let n = traj.states[0].len();
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (k, u) in traj.states.iter().enumerate() {
        w.write_record(row(std::iter::once(k as f64 * dt).chain(u.iter().copied())))?;
    }
    w.flush()?;
    Ok(())
}

/// `t,coeff_1..coeff_N,bound`
pub fn write_online_csv(path: &Path, cert: &CertifiedSolution, dt: f64) -> Result<()> {
    let mut w = csv_writer(path)?;
    let n = cert.trajectory.states[0].len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|j| format!("coeff_{j}")));
    header.push("bound".into());
    w.write_record(&header)?;
    for (k, c) in cert.trajectory.states.iter().enumerate() {
        w.write_record(row(std::iter::once(k as f64 * dt).chain(c.iter().copied()).chain(std::iter::once(cert.bounds[k]))))?;
    }
    w.flush()?;
    Ok(())
}

/// Per-step certification diagnostics next to the true error.
#[derive(Clone, Debug, PartialEq)]
pub struct CertificationRow {
    pub k: usize,
    pub t: f64,
    pub eps: f64,
    pub actual_error: f64,
    pub c_inf: f64,
    pub c_sup: f64,
    pub r_norm: f64,
}

pub fn certification_rows(model: &ReducedModel, mu: &ParameterPoint, cert: &CertifiedSolution, full: &FullTrajectory) -> Result<Vec<CertificationRow>> {
    let space = FemSpace::new(model.config.num_intervals)?;
    let forms = space.assemble(model.config.penalty);
    let mut out = Vec::with_capacity(full.states.len());
    for (k, u) in full.states.iter().enumerate() {
        let red = model.basis.reconstruct(&cert.trajectory.states[k]);
        let diff: Vec<f64> = u.iter().zip(red.iter()).map(|(a, b)| a - b).collect();
        let (c_inf, c_sup, r_norm) = match k {
            0 => (f64::NAN, f64::NAN, f64::NAN),
            _ => {
                let s = &cert.steps[k - 1];
                let r = residual_zero_norm(&model.online, mu, k, &cert.trajectory.states[k], &cert.trajectory.states[k - 1]);
                (s.c_inf, s.c_sup, r)
            }
        };
        out.push(CertificationRow { k, t: model.online.time(k), eps: cert.bounds[k], actual_error: space.l2_norm(&forms, &diff), c_inf, c_sup, r_norm });
    }
    Ok(out)
}

/// `k,t,eps_k,actual_error,C_inf,C_sup,r_norm`
pub fn write_certification_csv(path: &Path, rows: &[CertificationRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["k", "t", "eps_k", "actual_error", "C_inf", "C_sup", "r_norm"])?;
    for r in rows {
        let mut rec = vec![r.k.to_string()];
        rec.extend(row([r.t, r.eps, r.actual_error, r.c_inf, r.c_sup, r.r_norm]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScmRow {
    pub k: usize,
    pub c_exact: f64,
    pub c_inf: f64,
    pub c_sup: f64,
}

pub fn scm_rows(model: &ReducedModel, mu: &ParameterPoint) -> Result<Vec<ScmRow>> {
    let scm = model.online.scm.as_ref().ok_or(burgers_rb::Error::MissingScm)?;
    let space = FemSpace::new(model.config.num_intervals)?;
    let forms = space.assemble(model.config.penalty);
    let traj = model.online.solve_reduced(mu)?;
    let coords = mu.coordinates();
    let mut query = scm.trajectory_query(&coords);
    let mut out = Vec::with_capacity(traj.states.len());
    for k in 1..traj.states.len() {
        let c = &traj.states[k];
        out.push(ScmRow {
            k,
            c_exact: exact_stability(&space, &forms, &model.basis.reconstruct(c), mu.nu)?,
            c_inf: scm.lower_along(&mut query, mu.nu, k, c)?,
            c_sup: scm.upper(mu.nu, c)?,
        });
    }
    Ok(out)
}

/// `k,C_exact,C_inf,C_sup`
pub fn write_scm_csv(path: &Path, rows: &[ScmRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["k", "C_exact", "C_inf", "C_sup"])?;
    for r in rows {
        let mut rec = vec![r.k.to_string()];
        rec.extend(row([r.c_exact, r.c_inf, r.c_sup]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Median of `reps` interleaved timings of `a` and `b`, in seconds.
pub fn interleaved_medians(reps: usize, mut a: impl FnMut(), mut b: impl FnMut()) -> (f64, f64) {
    let reps = reps.max(1);
    let (mut ta, mut tb) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
    for _ in 0..reps {
        let t = Instant::now();
        a();
        ta.push(t.elapsed().as_secs_f64());
        let t = Instant::now();
        b();
        tb.push(t.elapsed().as_secs_f64());
    }
    (median(&mut ta), median(&mut tb))
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkRow {
    #[serde(rename = "N")]
    pub size: usize,
    pub max_rel_bound: f64,
    pub mean_rel_bound: f64,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub offline_s: f64,
    pub online_s: f64,
    pub full_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkReport {
    pub method: BasisMethod,
    pub basis_s: f64,
    pub rows: Vec<BenchmarkRow>,
}

/// N-sweep over prefixes of one basis of size `n_max`. The evaluation sample
/// (seed + 2) and its full trajectories are shared by every row.
pub fn run_benchmark(cfg: &FileConfig) -> Result<BenchmarkReport> {
    let config = cfg.problem_config();
    let bench = &cfg.benchmark;
    let mut options = cfg.build_options();
    options.size = bench.n_max;
    let t = Instant::now();
    let basis = build_basis(&config, &options)?;
    let basis_s = t.elapsed().as_secs_f64();

    let sample = sample_parameters(&config.ranges, &config.freq, bench.eval_samples.max(1), config.seed.wrapping_add(2))?;
    let solver = FullSolver::new(&config)?;
    let fulls: Vec<FullTrajectory> = sample.iter().map(|mu| solver.solve(mu)).collect::<burgers_rb::Result<_>>()?;
    let space = *solver.space();
    let forms = solver.forms().clone();

    let mut rows = Vec::new();
    for n in bench.n_min..=bench.n_max.min(basis.size()) {
        let prefix = ReducedBasis { vectors: basis.vectors[..n].to_vec(), enriched_count: basis.enriched_count.min(n) };
        let t = Instant::now();
        let online = build_online(&config, &options, &prefix)?;
        let offline_s = basis_s + t.elapsed().as_secs_f64();

        let (mut max_b, mut sum_b, mut max_e, mut sum_e, mut count) = (0.0f64, 0.0, 0.0f64, 0.0, 0usize);
        for (mu, full) in sample.iter().zip(&fulls) {
            let cert = certify_trajectory(&online, mu)?;
            for k in 1..full.states.len() {
                let red = prefix.reconstruct(&cert.trajectory.states[k]);
                let norm = space.l2_norm(&forms, &red);
                let diff: Vec<f64> = full.states[k].iter().zip(red.iter()).map(|(a, b)| a - b).collect();
                let (rb, re) = (cert.bounds[k] / norm, space.l2_norm(&forms, &diff) / norm);
                max_b = max_b.max(rb);
                max_e = max_e.max(re);
                sum_b += rb;
                sum_e += re;
                count += 1;
            }
        }
        let mu = &sample[0];
        let (online_s, full_s) = interleaved_medians(
            bench.reps.max(5),
            || {
                certify_trajectory(&online, mu).expect("certified solve succeeded above");
            },
            || {
                solver.solve(mu).expect("full solve succeeded above");
            },
        );
        let c = count.max(1) as f64;
        rows.push(BenchmarkRow { size: n, max_rel_bound: max_b, mean_rel_bound: sum_b / c, max_rel_error: max_e, mean_rel_error: sum_e / c, offline_s, online_s, full_s });
    }
    Ok(BenchmarkReport { method: options.method, basis_s, rows })
}

pub fn write_benchmark_csv(path: &Path, report: &BenchmarkReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in &report.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn offline_build(cfg: &FileConfig) -> Result<ReducedModel> {
    Ok(build_model(&cfg.problem_config(), &cfg.build_options())?)
}

/// Full solve of the `[point]`; returns the trajectory and `ε_b`.
pub fn full_solve(cfg: &FileConfig) -> Result<(FullTrajectory, f64)> {
    let solver = FullSolver::new(&cfg.problem_config())?;
    let mu = cfg.point()?;
    let traj = solver.solve(&mu)?;
    let eb = solver.boundary_error_indicator(&traj, &mu);
    Ok((traj, eb))
}

pub fn online_solve(cfg: &FileConfig, model: &ReducedModel) -> Result<CertifiedSolution> {
    check_compatible(model, &cfg.problem_config())?;
    let mu = cfg.point()?;
    Ok(model.certify(&mu)?)
}
