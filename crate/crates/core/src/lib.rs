//! Spin-dependent detection-time statistics and the spin POVMs that could
//! (or could not) produce them.
//!
//! * [`spin`]: directions, spinors, and effects in the Pauli basis.
//! * [`distributions`]: binned time distributions, TV distance, and
//!   direction-indexed families.
//! * [`povm`]: time-binned spin POVMs and their predicted families.
//! * [`checks`]: antipodal, axial, chiral and inversion conditions, and the
//!   `delta / 4` approximation bound.
//! * [`fit`]: best worst-case spin-POVM approximation of a family.
//! * [`bohm`]: Bohmian first-arrival times for a free spin-1/2 packet.
//! * [`cli`]: the `arrival-povm` command-line pipeline.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bohm;
pub mod checks;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod fit;
pub mod povm;
pub mod spin;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/spin.md")]
    pub struct Spin;
    #[doc = include_str!("../../../book/src/distributions.md")]
    pub struct Distributions;
    #[doc = include_str!("../../../book/src/povms.md")]
    pub struct Povms;
    #[doc = include_str!("../../../book/src/checks.md")]
    pub struct Checks;
    #[doc = include_str!("../../../book/src/fitting.md")]
    pub struct Fitting;
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub struct Simulation;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
