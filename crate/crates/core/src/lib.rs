//! Galton–Watson branching analysis for a two-parameter perturbed-Poisson
//! offspring family.
//!
//! The offspring law `JM(λ, μ)` (0 < μ < λ) interpolates between a
//! Bernoulli law as μ → 0 and Poisson(λ) as μ → λ. This crate provides:
//!
//! - [`offspring`]: probability mass, generating function, moments, and
//!   seeded sampling for the Janardan, Poisson, and Bernoulli laws;
//! - [`branching`]: criticality classification, extinction probabilities
//!   and per-generation curves, extinction-time distributions, and
//!   population-path simulation;
//! - [`estimation`]: frequency-table ingestion, closed-form
//!   repeated-moment estimators, log-likelihood and score evaluation;
//! - [`report`]: canonical result tables and figure data with CSV, JSON,
//!   display-text, and SVG emission.
//!
//! All randomness flows through [`offspring::replication_rng`], which maps a
//! `(seed, stream)` pair to an independent deterministic generator, so every
//! sampling and simulation entry point is reproducible byte-for-byte.
//!
//! # Example
//!
//! ```
//! use janardan::offspring::OffspringModel;
//! use janardan::branching::{classify, extinction_probability, CriticalityClass};
//!
//! let model = OffspringModel::janardan(2.0, 1.0)?;
//! assert_eq!(classify(&model).class, CriticalityClass::Supercritical);
//! let q = extinction_probability(&model, 1e-12)?;
//! assert!((q - 0.306058).abs() < 1e-5);
//! # Ok::<(), janardan::Error>(())
//! ```

pub mod branching;
pub mod error;
pub mod estimation;
pub mod offspring;
pub mod report;

pub use error::{Error, Result};
