//! Partitioned Markov decision processes for automated intrusion response.
//!
//! A system is described by a component topology, an action set with
//! probabilistic effects, a termination condition and reward weights. The
//! crate decomposes it into independent partitions (one per component type),
//! simulates each as a small MDP, and trains agents with value iteration,
//! tabular Q-learning or deep Q-learning.

pub mod dsl;
pub mod env;
pub mod model;
pub mod nn;
pub mod solvers;
pub mod harness;

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    pub mod configuration {}
    #[doc = include_str!("../../../book/src/environments.md")]
    pub mod environments {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    pub mod solvers {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
