//! Conservative exploration for tabular reinforcement learning.
//!
//! The crate provides:
//!
//! - [`mdp`]: finite MDPs, policies, exact gain/bias and finite-horizon evaluation,
//!   and the exact forward-propagation oracle for expected cumulative reward;
//! - [`confidence`]: visit statistics and the Hoeffding (L1) and simplified
//!   Bernstein (elementwise) confidence sets;
//! - [`evi`]: extended Bellman operators and extended value iteration;
//! - [`ucrl`]: UCRL2 and its conservative variant CUCRL2 (average reward);
//! - [`ucbvi`]: UCB-VI and its conservative variant CUCB-VI (finite horizon);
//! - [`envs`]: inventory control and a 3x4 gridworld;
//! - [`harness`]: seeded Monte Carlo runner with regret and exact violation tracking;
//! - [`config`] and [`output`]: experiment configuration and result serialization.

pub mod confidence;
pub mod config;
pub mod envs;
pub mod error;
pub mod evi;
pub mod harness;
pub mod mdp;
pub mod output;
pub mod trace;
pub mod ucbvi;
pub mod ucrl;

pub use error::{Error, Result};
