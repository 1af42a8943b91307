//! Gradient-based multi-objective optimization for multi-task learning.
//!
//! * [`moo`]: dominance, non-dominated filtering, hypervolume and ΔST.
//! * [`autodiff`]: reverse-mode differentiation, shared-trunk networks, Adam
//!   and learning-rate schedules.
//! * [`problems`]: a synthetic two-task "merged glyph" image dataset and an
//!   analytic bi-objective problem with a known Pareto front.
//! * [`solvers`]: Single Task, fixed-weight scalarization, MGDA, COSMOS-style
//!   preference conditioning, a hypernetwork and a simplified PMTL.
//! * [`hpo`]: random and grid search over learning rate, weight decay and scheduler.
//! * [`harness`]: multi-seed runs, the capacity ablation and reports.

pub mod autodiff;
pub mod cli;
pub mod error;
pub mod harness;
pub mod hpo;
pub mod moo;
pub mod problems;
pub mod seeds;
pub mod solvers;

pub use error::{Error, Result};
