//! Finite-state controller synthesis for POMDPs via parametric Markov chains.
//!
//! A POMDP together with a memory bound `k` is translated into a pMC whose
//! instantiations are exactly the `k`-node controllers. The crate offers the
//! translations, exact and float model checking, closed forms by state
//! elimination, interval bounds over parameter regions and search.

pub mod analysis;
pub mod error;
pub mod fsc;
pub mod models;
pub mod par;
pub mod synthesis;
pub mod transforms;

pub use error::{Error, Result};
