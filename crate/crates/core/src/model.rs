//! End-to-end offline build of a [`ReducedModel`].

use serde::{Deserialize, Serialize};

use crate::certify::{certify_trajectory, CertifiedSolution};
use crate::config::ProblemConfig;
use crate::error::{Error, Result};
use crate::fem::FemSpace;
use crate::offline::{build_snapshots, enrich_with_initial_modes, greedy_basis, pod_basis, ReducedBasis};
use crate::online::OnlineModel;
use crate::params::{sample_parameters, ParameterPoint};
use crate::scm::{scm_train, ScmOptions};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisMethod {
    Pod,
    Greedy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub method: BasisMethod,
    /// Final basis size, including enrichment modes.
    pub size: usize,
    pub enrich: bool,
    /// `S` for POD, `#Ξ` for greedy.
    pub sample_size: usize,
    pub scm: ScmOptions,
    /// Number of parameter points in the SCM training set.
    pub scm_sample_size: usize,
}

impl BuildOptions {
    pub fn pod(size: usize, snapshots: usize) -> Self {
        Self { method: BasisMethod::Pod, size, enrich: false, sample_size: snapshots, scm: ScmOptions::default(), scm_sample_size: 20 }
    }

    pub fn greedy(size: usize, candidates: usize) -> Self {
        Self { method: BasisMethod::Greedy, size, enrich: false, sample_size: candidates, scm: ScmOptions::default(), scm_sample_size: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedModel {
    pub version: u32,
    pub config: ProblemConfig,
    pub options: BuildOptions,
    pub basis: ReducedBasis,
    pub online: OnlineModel,
}

impl ReducedModel {
    pub fn certify(&self, mu: &ParameterPoint) -> Result<CertifiedSolution> {
        certify_trajectory(&self.online, mu)
    }
}

/// Builds the basis prescribed by `options`, without SCM.
pub fn build_basis(config: &ProblemConfig, options: &BuildOptions) -> Result<ReducedBasis> {
    config.validate()?;
    let space = FemSpace::new(config.num_intervals)?;
    let forms = space.assemble(config.penalty);
    let enrichment = 1 + config.freq.u0.len();
    let sample = sample_parameters(&config.ranges, &config.freq, options.sample_size.max(1), config.seed)?;
    match options.method {
        BasisMethod::Pod => {
            let modes = if options.enrich { options.size.saturating_sub(enrichment) } else { options.size };
            let raw = if modes == 0 {
                ReducedBasis { vectors: alloc::vec::Vec::new(), enriched_count: 0 }
            } else {
                pod_basis(&build_snapshots(&sample, config)?, &forms, modes)?
            };
            if options.enrich {
                Ok(enrich_with_initial_modes(&raw, &space, &forms, &config.freq))
            } else if raw.vectors.is_empty() {
                Err(Error::InvalidConfig { key: "rb.N".into(), reason: "basis size must be at least 1".into() })
            } else {
                Ok(raw)
            }
        }
        BasisMethod::Greedy => {
            let initial = options.enrich.then(|| {
                let empty = ReducedBasis { vectors: alloc::vec::Vec::new(), enriched_count: 0 };
                enrich_with_initial_modes(&empty, &space, &forms, &config.freq)
            });
            let start = initial.as_ref().map_or(0, |b| b.size());
            if start >= options.size {
                return Ok(initial.unwrap());
            }
            greedy_basis(&sample, options.size, config, initial)
        }
    }
}

/// Offline phase: basis, reduced tensors, Gram matrices and SCM data.
pub fn build_model(config: &ProblemConfig, options: &BuildOptions) -> Result<ReducedModel> {
    let basis = build_basis(config, options)?;
    let online = build_online(config, options, &basis)?;
    Ok(ReducedModel { version: MODEL_FORMAT_VERSION, config: config.clone(), options: options.clone(), basis, online })
}

/// Offline tensors and SCM training for a given basis.
pub fn build_online(config: &ProblemConfig, options: &BuildOptions, basis: &ReducedBasis) -> Result<OnlineModel> {
    let space = FemSpace::new(config.num_intervals)?;
    let forms = space.assemble(config.penalty);
    let mut online = OnlineModel::build(basis, &space, &forms, config, None)?;
    let scm_sample = sample_parameters(&config.ranges, &config.freq, options.scm_sample_size.max(1), config.seed.wrapping_add(1))?;
    let spans = config.ranges.coordinate_spans(&config.freq);
    let (scm, _) = scm_train(&online, basis, &space, &forms, &scm_sample, spans, options.scm)?;
    online.scm = Some(scm);
    Ok(online)
}
