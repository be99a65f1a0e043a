//! Certified reduced-basis solutions of the 1D viscous Burgers equation.
//!
//! The crate is `no_std` (it needs `alloc`). It contains:
//!
//! * [`fem`]: P1 finite elements on a uniform mesh of `[0, 1]`, the bilinear and
//!   trilinear forms of the penalized weak formulation and the nodal interpolant.
//! * [`params`]: the sine-series parametrization of viscosity, source, initial
//!   and boundary data, with the compatibility constraints.
//! * [`full`]: the full-order backward Euler / Newton / Thomas reference solver.
//! * [`offline`]: snapshot generation, POD and greedy basis selection, enrichment
//!   by initial-data modes and the parameter-independent reduced tensors.
//! * [`online`]: the reduced Newton solve whose cost does not depend on the mesh.
//! * [`certify`]: the a posteriori L² error bound and its Riesz/Gram machinery.
//! * [`scm`]: successive constraints bounds for the stability constant.
//! * [`model`]: glue that builds a complete [`model::ReducedModel`].
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod certify;
pub mod config;
pub mod error;
pub mod fem;
pub mod full;
pub mod linalg;
pub mod model;
pub mod offline;
pub mod online;
pub mod params;
pub mod scm;
pub mod simplex;

pub use config::{ProblemConfig, TimeGrid};
pub use error::{Error, Result};
pub use fem::{AssembledForms, FemSpace, NodalVector};
pub use params::{FrequencyStructure, Interval, ParameterPoint, ParameterRanges};
