//! Toolkit for modeling how the public perceives science in the media.
//!
//! The crate is organized around the perception pipeline:
//!
//! - [`catalog`]: the 25 rateable statements and the 12 perception dimensions
//!   they measure.
//! - [`corpus`]: document cleaning, balanced batch sampling, synthetic
//!   annotation corpora, and JSONL persistence.
//! - [`aggregate`]: Likert ratings to per-annotator and per-article perception
//!   profiles, plus paired-comparison ranking scores.
//! - [`reliability`]: Krippendorff's and Cronbach's alpha.
//! - [`perceiver`]: the multi-task statement scorer (train, evaluate, persist,
//!   predict).
//! - [`stats`]: OLS, random-intercept mixed models, VIF pruning.
//! - [`analysis`]: the perception-outcome and engagement studies and the
//!   engagement predictor used for framing previews.

pub mod aggregate;
pub mod analysis;
pub mod catalog;
pub mod corpus;
pub mod demo;
mod error;
pub mod perceiver;
pub mod reliability;
pub mod stats;

pub use catalog::{default_catalog, DimensionId, Statement, StatementCatalog};
pub use error::{Error, Result};
