//! Continuous water-filling with dual tracking.
//!
//! At a vertex's deadline its remaining mass is poured onto the available
//! neighbors with the lowest water-levels, raising the lowest group together.
//! The pour is solved in closed form (sort and prefix sums) and the dual
//! increments integrate the gain function exactly:
//! raising `v` from `a` to `b` adds `G(b) - G(a)` to `α_v` and the remainder
//! of `b - a` to the pouring vertex.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gain::GainFunction;
use crate::instance::{Instance, VertexId};
use crate::opt::{opt_bipartite, opt_fractional_general};

/// One neighbor raised by a pour, in terms of the input slice position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Raise {
    pub index: usize,
    pub from: f64,
    pub to: f64,
}

/// Pours `capacity` units onto neighbors at the given water-levels.
///
/// The lowest levels rise together until the capacity is spent or every level
/// reaches one, so the poured mass is `min(capacity, Σ(1 - level))` and all
/// raised neighbors end at the same waterline. Only neighbors that actually
/// rise are returned, ordered by input position.
pub fn pour(levels: &[f64], capacity: f64) -> Result<Vec<Raise>> {
    if !(0.0..=1.0).contains(&capacity) {
        return Err(Error::CapacityOutOfRange(capacity));
    }
    if let Some(&bad) = levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::LevelOutOfRange(bad));
    }
    let waterline = waterline(levels, capacity);
    Ok(levels.iter().enumerate().filter(|(_, &l)| l < waterline).map(|(index, &from)| Raise { index, from, to: waterline }).collect())
}

/// Final level of the raised group. Callers ensure the inputs are in range.
fn waterline(levels: &[f64], capacity: f64) -> f64 {
    if levels.is_empty() || capacity <= 0.0 {
        return levels.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
    }
    let room: f64 = levels.iter().map(|l| 1.0 - l).sum();
    if capacity >= room {
        return 1.0;
    }
    let mut sorted = levels.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut prefix = 0.0;
    for j in 0..sorted.len() {
        prefix += sorted[j];
        let count = (j + 1) as f64;
        let line = (capacity + prefix) / count;
        let next = sorted.get(j + 1).copied().unwrap_or(1.0);
        if line <= next {
            return line.min(1.0);
        }
    }
    1.0
}

/// A pour performed at `active`'s deadline.
#[derive(Clone, Debug, PartialEq)]
pub struct PourRecord {
    pub active: VertexId,
    /// Water-level of `active` when its deadline is reached.
    pub passive_level: f64,
    /// Available neighbors at the deadline and their levels before the pour.
    pub available: Vec<(VertexId, f64)>,
    /// Common level of the raised neighbors after the pour.
    pub waterline: f64,
    /// Level of `active` after the pour.
    pub final_level: f64,
}

/// Result of a water-filling run. Vectors are indexed by vertex id, except
/// `edge_fraction` which follows the instance's edge order.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalOutcome {
    pub edge_fraction: Vec<f64>,
    pub level: Vec<f64>,
    pub passive: Vec<f64>,
    pub alpha: Vec<f64>,
    pub pours: Vec<PourRecord>,
}

impl FractionalOutcome {
    /// `Σ x_uv`.
    pub fn primal(&self) -> f64 {
        self.edge_fraction.iter().sum()
    }

    /// `Σ α_u`.
    pub fn dual(&self) -> f64 {
        self.alpha.iter().sum()
    }

    fn matches(&self, instance: &Instance) -> bool {
        let n = instance.vertex_count();
        self.edge_fraction.len() == instance.edge_count() && self.level.len() == n && self.passive.len() == n && self.alpha.len() == n
    }
}

/// Water-filling runner. [`run_waterfill`] is the common entry point; the
/// builder lets large runs skip the pour log.
pub struct WaterFilling<G> {
    gain: G,
    log_pours: bool,
}

impl<G: GainFunction> WaterFilling<G> {
    pub fn new(gain: G) -> Self {
        WaterFilling { gain, log_pours: true }
    }

    pub fn log_pours(mut self, on: bool) -> Self {
        self.log_pours = on;
        self
    }

    pub fn run(&self, instance: &Instance) -> FractionalOutcome {
        let n = instance.vertex_count();
        let mut level = vec![0.0f64; n];
        let mut passive = vec![0.0f64; n];
        let mut alpha = vec![0.0f64; n];
        let mut edge_fraction = vec![0.0f64; instance.edge_count()];
        let mut pours = Vec::new();
        let mut levels_buf = Vec::new();

        for u in instance.deadline_order() {
            let ui = u.index();
            passive[ui] = level[ui];
            let available = instance.available_neighbors(u);
            let capacity = (1.0 - level[ui]).clamp(0.0, 1.0);
            if available.is_empty() {
                continue;
            }
            levels_buf.clear();
            levels_buf.extend(available.iter().map(|nb| level[nb.vertex.index()]));
            let line = waterline(&levels_buf, capacity);
            if self.log_pours {
                pours.push(PourRecord {
                    active: u,
                    passive_level: passive[ui],
                    available: available.iter().zip(&levels_buf).map(|(nb, &l)| (nb.vertex, l)).collect(),
                    waterline: line,
                    final_level: 0.0,
                });
            }
            for (nb, &from) in available.iter().zip(&levels_buf) {
                if from >= line {
                    continue;
                }
                let vi = nb.vertex.index();
                let amount = line - from;
                let to_passive = self.gain.integral_between(from, line);
                edge_fraction[nb.edge as usize] += amount;
                level[vi] = line;
                level[ui] += amount;
                alpha[vi] += to_passive;
                alpha[ui] += amount - to_passive;
            }
            if let Some(rec) = pours.last_mut().filter(|r| r.active == u) {
                rec.final_level = level[ui];
            }
        }
        FractionalOutcome { edge_fraction, level, passive, alpha, pours }
    }
}

/// Runs water-filling with the given gain and records every pour.
pub fn run_waterfill<G: GainFunction>(instance: &Instance, gain: G) -> FractionalOutcome {
    WaterFilling::new(gain).run(instance)
}

/// Dual feasibility report.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CertReport {
    pub ratio: f64,
    pub min_edge_sum: f64,
    pub objective_gap: f64,
    /// Edges with `α_u + α_v < ratio - 1e-9`.
    pub violations: Vec<EdgeViolation>,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EdgeViolation {
    pub u: VertexId,
    pub v: VertexId,
    pub sum: f64,
}

pub const CERT_TOLERANCE: f64 = 1e-9;

/// Checks `α_u + α_v >= ratio` on every edge and `Σx = Σα`, both to `1e-9`.
pub fn certify_duals(outcome: &FractionalOutcome, instance: &Instance, ratio: f64) -> Result<CertReport> {
    if !outcome.matches(instance) {
        return Err(Error::MismatchedOutcome);
    }
    let mut min_edge_sum = f64::INFINITY;
    let mut violations = Vec::new();
    for &(u, v) in instance.edges() {
        let sum = outcome.alpha[u.index()] + outcome.alpha[v.index()];
        min_edge_sum = min_edge_sum.min(sum);
        if sum < ratio - CERT_TOLERANCE {
            violations.push(EdgeViolation { u, v, sum });
        }
    }
    let objective_gap = (outcome.primal() - outcome.dual()).abs();
    let pass = violations.is_empty() && objective_gap <= CERT_TOLERANCE;
    Ok(CertReport { ratio, min_edge_sum, objective_gap, violations, pass })
}

/// `Σ x_uv / OPT`, with the integral optimum on bipartite instances and the
/// fractional optimum otherwise.
pub fn achieved_ratio(outcome: &FractionalOutcome, instance: &Instance) -> Result<f64> {
    if !outcome.matches(instance) {
        return Err(Error::MismatchedOutcome);
    }
    let opt = match opt_bipartite(instance) {
        Ok(opt) => opt,
        Err(Error::NotBipartite) => opt_fractional_general(instance),
        Err(e) => return Err(e),
    };
    if opt.halves == 0 {
        return Err(Error::ZeroOpt);
    }
    Ok(outcome.primal() / opt.value())
}
