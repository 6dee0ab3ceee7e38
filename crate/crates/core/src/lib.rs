//! Comparator-adaptive online learning with switching costs.
//!
//! The core primitive is a switching-adjusted potential function: a convex
//! solution of the backward heat equation whose discrete spatial derivative,
//! evaluated at a running gradient statistic, yields predictions whose
//! augmented regret (ordinary regret plus a weighted movement penalty) is
//! optimal against every comparator simultaneously.
//!
//! Built on top of it:
//!
//! - [`scalar`] — one-dimensional learners: the potential learner, a
//!   coin-betting baseline, and constrained / doubling / gradient-adaptive
//!   wrappers.
//! - [`vector`] — coordinate-wise learners for `R^d` under L1 switching
//!   costs, and an experts (simplex) learner obtained through a constrained
//!   domain reduction.
//! - [`harness`] — adversaries, episode replay, augmented-regret accounting,
//!   closed-form evaluation of every regret bound, and grid sweeps that
//!   verify the underlying inequalities numerically.
//! - [`portfolio`] — synthetic market generators, CSV price ingestion, and a
//!   backtester charging per-share transaction costs.
//! - [`cli`] — the command-line front end (`verify`, `simulate`,
//!   `backtest-synthetic`, `backtest-csv`).

pub mod cli;
pub mod harness;
pub mod portfolio;
pub mod potential;
pub mod scalar;
pub mod vector;

pub use potential::{LearnerConfig, PotentialPoint};
