//! Simulation and analysis toolkit for distributed stochastic multi-armed
//! bandits where `M` players share a global arm set and exchange their
//! reward histories only at scheduled communication rounds.
//!
//! The crate is organised bottom-up:
//!
//! * [`arms`], [`divergence`], [`exploration`]: Bernoulli arm models, the
//!   Bernoulli KL calculus and the exploration functions used by the indices.
//! * [`schedule`]: communication sets, `ℓ(t)`, counting function and density.
//! * [`policy`]: per-player views and the UCB / KL-UCB / DKLUCB index rules.
//! * [`sim`]: round-based engine, merging, Monte Carlo aggregation.
//! * [`analysis`]: asymptotic bound constants and empirical comparisons.
//! * [`config`], [`experiment`]: the text config format and the runner used
//!   by the `dbandit` binary.

pub mod analysis;
pub mod arms;
pub mod config;
pub mod divergence;
pub mod error;
pub mod experiment;
pub mod exploration;
pub mod policy;
pub mod schedule;
pub mod sim;

pub use arms::BernoulliArmModel;
pub use error::{Error, Result};
pub use exploration::ExplorationFunction;
pub use policy::{PlayerView, PolicyRule, PolicySpec};
pub use schedule::{CommunicationSchedule, Density};
pub use sim::{RunAggregate, RunConfig};
