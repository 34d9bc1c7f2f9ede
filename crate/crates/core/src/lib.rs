//! Interpretable, sentence-level propaganda technique detection.
//!
//! The pipeline runs in stages that hand off through files:
//!
//! 1. [`corpus`] turns span-annotated articles into one labelled record per sentence.
//! 2. [`providers`] wraps the external models (sentence encoder, stance, syntax,
//!    sentiment, document scorer) behind narrow traits, with offline reference
//!    backends and a JSON-lines remote protocol.
//! 3. [`features`] assembles the interpretable feature families per sentence.
//! 4. [`analysis`] measures feature/technique association with the mixed
//!    continuous-Bernoulli covariance.
//! 5. [`model`] trains RBF-kernel SVMs ([`svm`] holds the solver), runs grid search
//!    and ablations.
//! 6. [`eval`] scores predictions and renders result tables.
//! 7. [`explain`] produces per-sentence explanations.
//!
//! Data-parallel loops go through [`exec::Exec`], which uses rayon when the
//! `parallel` feature is enabled and falls back to sequential iteration otherwise.

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod exec;
pub mod explain;
pub mod features;
pub mod model;
pub mod providers;
pub mod svm;
mod text;

pub use error::{Error, Result};
