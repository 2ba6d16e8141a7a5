//! Log-linear and Metropolis learning on finite potential games: exact
//! chain construction, stationary and hitting-time analysis, cycle
//! decomposition, and a sensor-coverage game family.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod coverage;
pub mod cycles;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod game;
pub mod simulate;

pub use dynamics::{build_transition_model, Kernel, TransitionModel};
pub use error::{Error, Result};
pub use game::{ActionProfile, Game, ProfileSpace, TableGame};
