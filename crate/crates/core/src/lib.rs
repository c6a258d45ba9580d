//! Adaptive exploration-ratio control for budgeted fraud inspection.
//!
//! Each week a batch of declarations arrives and only a fixed share of it can
//! be inspected. A supervised scorer picks likely frauds (exploitation) while
//! a uniform sample hunts for patterns the scorer has not seen
//! (exploration). The [`controller`] sets the split between the two from an
//! adversarial bandit over candidate ratios and an optimal-transport drift
//! score, and the [`simulator`] replays the loop over a labeled stream.

pub mod bandit;
pub mod config;
pub mod controller;
pub mod datagen;
pub mod drift;
pub mod embed;
pub mod error;
pub mod metrics;
pub mod rng;
pub mod simulator;
pub mod strategies;
pub mod types;

pub use config::SimConfig;
pub use controller::{Controller, Method, RatioDecision};
pub use error::{Error, Result};
pub use types::{Declaration, DeclarationFields, InspectionOutcome, LabelGate, WeekBatch};
