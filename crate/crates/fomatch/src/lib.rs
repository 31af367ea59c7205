//! File formats, parallel Monte Carlo, the verification suite and the
//! `fomatch` command line tool, built on `fomatch_core`.

pub mod checks;
pub mod cli;
pub mod format;
pub mod meta;
pub mod parallel;
pub mod sweep;
