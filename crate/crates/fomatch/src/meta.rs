use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WallClock {
    pub started_unix_s: f64,
    pub elapsed_s: f64,
}

/// Provenance attached to every emitted artifact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub command: String,
    pub seed: u64,
    pub version: &'static str,
    pub wall_clock: WallClock,
}

/// Captures the start time of a command.
pub struct Stopwatch {
    command: String,
    seed: u64,
    started: SystemTime,
    clock: Instant,
}

impl Stopwatch {
    pub fn start(command: &str, seed: u64) -> Self {
        Stopwatch { command: command.to_owned(), seed, started: SystemTime::now(), clock: Instant::now() }
    }

    pub fn metadata(&self) -> Metadata {
        let started_unix_s = self.started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        Metadata {
            command: self.command.clone(),
            seed: self.seed,
            version: VERSION,
            wall_clock: WallClock { started_unix_s, elapsed_s: self.clock.elapsed().as_secs_f64() },
        }
    }

    /// The reproducible part of the metadata as a comment line.
    pub fn stable_comment(&self) -> String {
        format!("command={} seed={} version={}", self.command, self.seed, VERSION)
    }

    /// Full metadata as a comment line for text artifacts.
    pub fn comment(&self) -> String {
        let m = self.metadata();
        format!("{} started_unix_s={:.3} elapsed_s={:.6}", self.stable_comment(), m.wall_clock.started_unix_s, m.wall_clock.elapsed_s)
    }
}

/// A JSON artifact: metadata plus a payload flattened beside it.
#[derive(Serialize)]
pub struct Artifact<'a, T: Serialize> {
    pub meta: Metadata,
    #[serde(flatten)]
    pub data: &'a T,
}
