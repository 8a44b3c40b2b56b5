//! Rule induction over a date x stock panel.
//!
//! Features are discretized into quantile bins, conjunctions of bin
//! intervals are enumerated length by length, each candidate is gated on
//! coverage, criterion and significance, and a covering scan selects a
//! compact, weakly overlapping subset. Predictions from the selected rules
//! drive a top-k long-only portfolio backtest.

pub mod activation;
pub mod cache;
pub mod config;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod fitting;
pub mod generation;
pub mod io;
pub mod rule;
pub mod scaling;
pub mod selection;
pub mod synth;
pub mod workload;

pub use activation::ActivationVector;
pub use config::Config;
pub use data::{Dataset, DiscretizedDataset, PanelIndex};
pub use error::{Error, Result};
pub use exec::Executor;
pub use rule::{Condition, Rule, RuleSet, Sign};
