//! Independent oracles and verification harnesses.

mod order;
mod study;
mod suite;
mod wave;

pub use order::{estimate_order, ConvergenceReport, ORDER_TOLERANCE};
pub use study::{analytic_pure_string, convergence_study, residual_convergence, residual_norms, Oracle};
pub use suite::{identity_suite, identity_suite_with, CheckResult, IdentityReport, SuiteOptions, CHECK_NAMES};
pub use wave::{standing_wave, wave_oracle, WaveSolution};
