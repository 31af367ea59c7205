//! Fully online matching: exact water-filling and Ranking engines, primal-dual
//! certificate checks, and the adversarial instance families that pin their
//! competitive ratios at `2 - sqrt(2)` and `Ω ≈ 0.5671`.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the command
//! line front end and parallel sweeps live in the `fomatch` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod constants;
pub mod error;
pub mod gain;
pub mod generalized;
pub mod generate;
pub mod instance;
pub mod math;
pub mod opt;
pub mod pair_gain;
pub mod ranking;
pub mod ranking_hardness;
pub mod special;
pub mod waterfill;
pub mod wf_hardness;

pub use error::{Error, Result};
pub use gain::{GainFunction, LinearGain, RankingGain};
pub use instance::{Event, EventKind, Instance, VertexId};
pub use opt::{opt_bipartite, opt_fractional_general, OptValue};
pub use ranking::{run_ranking, IntegralOutcome, RankVector, VertexStatus};
pub use waterfill::{achieved_ratio, certify_duals, pour, run_waterfill, CertReport, FractionalOutcome};
