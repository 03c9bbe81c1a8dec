//! Algorithmic core of the WebRL lab.
//!
//! Everything in this crate is pure computation over owned data: the
//! synthetic web environment and its BFS oracle, the linear softmax policy,
//! the logistic critic and outcome reward model, the policy-update rules,
//! the success-only replay buffer, and the curriculum generator. The crate
//! needs `alloc` but not `std`; IO, configuration files, threading and the
//! phase driver live in `webrl-lab`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod critic;
pub mod curriculum;
mod error;
pub mod learner;
pub mod math;
pub mod model;
pub mod orm;
pub mod replay;
pub mod rng;
pub mod rollout;
pub mod synthweb;

pub use error::{Error, Result};
