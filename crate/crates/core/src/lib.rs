//! Cooperative multi-agent stochastic bandits with heavy-tailed rewards.
//!
//! Agents on a communication graph pull arms of a shared bandit and exchange
//! rewards either by message passing (each message travels `gamma` hops, one
//! hop per round) or by running-consensus averaging. The crate provides the
//! graph machinery, reward models, robust mean estimators, the decision
//! policies and a synchronous-round simulator producing group regret traces.

pub mod estimators;
pub mod graph;
pub mod policies;
mod quadrature;
pub mod rewards;
pub mod simulator;

pub use estimators::{EstimatorKind, RateParams};
pub use graph::Graph;
pub use policies::PolicyKind;
pub use rewards::{BanditInstance, RewardDistribution};
pub use simulator::{run, RegretTrace, SimConfig};
