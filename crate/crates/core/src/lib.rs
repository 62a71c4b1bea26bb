//! Analysis toolkit for disaggregated annotation datasets.
//!
//! The pipeline runs in stages, each of which is usable on its own:
//!
//! 1. [`corpus`] — ingest, validate, filter, harmonize, and split datasets
//!    of per-annotator ordinal labels.
//! 2. [`lexfeat`] — item-level linguistic and lexicon features, token
//!    normalization, and column standardization.
//! 3. [`select`] — correlation-threshold feature retention plus
//!    single-linkage clustering of the correlated remainder.
//! 4. [`design`] — fixed-effect encoding (treatment / orthogonal polynomial
//!    contrasts) with pairwise and cross-level interactions, and random-effect
//!    group indices.
//! 5. [`hsmlm`] — the Gaussian cross-classified multilevel regression with
//!    regularized horseshoe priors, sampled with NUTS.
//! 6. [`posterior`] — effect summaries, survivor detection, and interaction
//!    prediction grids.
//! 7. [`simcheck`] — synthetic-data generation, recovery reports, and
//!    simulation-based calibration of the sampler.

pub mod corpus;
pub mod design;
pub mod error;
pub mod hsmlm;
pub mod lexfeat;
pub mod math;
pub mod posterior;
pub mod select;
pub mod simcheck;

pub use error::{Error, Result};
