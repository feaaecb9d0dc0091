//! Contextual combinatorial bandits with submodular rewards under matroid
//! constraints, solved by regression oracles plus non-oblivious local search.

pub mod bandit;
pub mod config;
pub mod error;
pub mod experiment;
pub mod igw;
pub mod local_search;
pub mod matroid;
pub mod oracle;
pub mod rng;
pub mod set;
pub mod set_function;
pub mod t_operator;
pub mod testkit;

pub use error::{Error, Result};
pub use set::ElementSet;
