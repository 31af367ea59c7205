//! Ranking with gain sharing, marginal ranks and the `(τ, γ, θ)` thresholds.
//!
//! The matching produced by Ranking depends only on the relative order of
//! the ranks, so every counterfactual sweep over a single rank evaluates one
//! representative point between consecutive breakpoints.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gain::{GainFunction, RankingGain};
use crate::instance::{Instance, VertexId};
use crate::opt::opt_bipartite;

/// Ranks in `[0, 1)`, one per vertex, with a mask of vertices whose rank is
/// left free for counterfactual queries.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RankVector {
    y: Vec<f64>,
    free: Vec<bool>,
}

impl RankVector {
    /// Validates that ranks lie in `[0, 1)` and are pairwise distinct.
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(Error::InvalidArgument("ranks must lie in [0, 1)"));
        }
        let mut sorted = y.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("ranks must be distinct"));
        }
        let free = vec![false; y.len()];
        Ok(RankVector { y, free })
    }

    /// Uniform ranks on the 2⁻⁵³ grid; colliding draws are regenerated.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut bits: Vec<u64> = (0..n).map(|_| rng.next_u64() >> 11).collect();
        let mut sorted = bits.clone();
        loop {
            sorted.copy_from_slice(&bits);
            sorted.sort_unstable();
            let Some(dup) = sorted.windows(2).find(|w| w[0] == w[1]).map(|w| w[0]) else {
                break;
            };
            let idx = bits.iter().rposition(|&b| b == dup).expect("duplicate is present");
            bits[idx] = rng.next_u64() >> 11;
        }
        let scale = 1.0 / (1u64 << 53) as f64;
        RankVector { y: bits.iter().map(|&b| b as f64 * scale).collect(), free: vec![false; n] }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn get(&self, v: VertexId) -> f64 {
        self.y[v.index()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.y
    }

    /// Overwrites one rank without revalidating distinctness.
    pub fn set(&mut self, v: VertexId, y: f64) {
        self.y[v.index()] = y;
    }

    /// Marks `v`'s rank as free: sweeps ignore its stored value.
    pub fn release(&mut self, v: VertexId) {
        self.free[v.index()] = true;
    }

    pub fn is_free(&self, v: VertexId) -> bool {
        self.free[v.index()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum VertexStatus {
    Unmatched,
    /// Matched at its own deadline.
    Active {
        partner: VertexId,
        partner_rank: f64,
    },
    /// Matched at the partner's deadline.
    Passive {
        partner: VertexId,
        partner_deadline: u64,
    },
}

impl VertexStatus {
    /// Status order: passive beats active beats unmatched; a passive vertex
    /// prefers an earlier-deadline partner, an active one a smaller rank.
    pub fn is_better_than(&self, other: &VertexStatus) -> bool {
        use VertexStatus::*;
        match (self, other) {
            (Passive { partner_deadline: a, .. }, Passive { partner_deadline: b, .. }) => a < b,
            (Passive { .. }, _) => true,
            (Active { partner_rank: a, .. }, Active { partner_rank: b, .. }) => a < b,
            (Active { .. }, Unmatched) => true,
            _ => false,
        }
    }

    pub fn partner(&self) -> Option<VertexId> {
        match *self {
            VertexStatus::Unmatched => None,
            VertexStatus::Active { partner, .. } | VertexStatus::Passive { partner, .. } => Some(partner),
        }
    }

    pub fn is_passive(&self) -> bool {
        matches!(self, VertexStatus::Passive { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IntegralOutcome {
    /// `(active, passive)` in the order the pairs were formed.
    pub matches: Vec<(VertexId, VertexId)>,
    pub status: Vec<VertexStatus>,
    pub alpha: Vec<f64>,
}

impl IntegralOutcome {
    pub fn size(&self) -> usize {
        self.matches.len()
    }

    pub fn dual(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

const NONE: u32 = u32::MAX;

/// Reusable buffers for the Ranking sweep.
#[derive(Clone, Debug, Default)]
pub struct Simulator {
    mate: Vec<u32>,
    active: Vec<bool>,
}

impl Simulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs Ranking with the given ranks on the instance minus `removed`
    /// vertices and returns the matching size.
    pub fn run(&mut self, instance: &Instance, y: &[f64], removed: Option<&[bool]>) -> usize {
        let n = instance.vertex_count();
        self.mate.clear();
        self.mate.resize(n, NONE);
        self.active.clear();
        self.active.resize(n, false);
        let gone = |w: usize| removed.is_some_and(|r| r[w]);
        let mut size = 0;
        for v in instance.deadline_order() {
            let vi = v.index();
            if self.mate[vi] != NONE || gone(vi) {
                continue;
            }
            let mut best = NONE;
            let mut best_rank = f64::INFINITY;
            for nb in instance.available_neighbors(v) {
                let w = nb.vertex.index();
                if self.mate[w] == NONE && y[w] < best_rank && !gone(w) {
                    best = nb.vertex.0;
                    best_rank = y[w];
                }
            }
            if best != NONE {
                self.mate[vi] = best;
                self.mate[best as usize] = v.0;
                self.active[vi] = true;
                size += 1;
            }
        }
        size
    }

    pub fn mate(&self, v: VertexId) -> Option<VertexId> {
        let m = self.mate[v.index()];
        (m != NONE).then_some(VertexId(m))
    }

    pub fn is_active(&self, v: VertexId) -> bool {
        self.active[v.index()]
    }

    pub fn is_passive(&self, v: VertexId) -> bool {
        self.mate[v.index()] != NONE && !self.active[v.index()]
    }

    pub fn status(&self, instance: &Instance, y: &[f64], v: VertexId) -> VertexStatus {
        match self.mate(v) {
            None => VertexStatus::Unmatched,
            Some(partner) if self.is_active(v) => VertexStatus::Active { partner, partner_rank: y[partner.index()] },
            Some(partner) => VertexStatus::Passive { partner, partner_deadline: instance.deadline_step(partner) },
        }
    }
}

fn check_ranks(instance: &Instance, ranks: &RankVector) -> Result<()> {
    if ranks.len() != instance.vertex_count() {
        return Err(Error::RankLength { n: instance.vertex_count(), got: ranks.len() });
    }
    Ok(())
}

/// Ranking with gain sharing under `gain`.
pub fn run_ranking_with<G: GainFunction>(instance: &Instance, ranks: &RankVector, gain: G) -> Result<IntegralOutcome> {
    check_ranks(instance, ranks)?;
    let y = ranks.as_slice();
    let mut sim = Simulator::new();
    sim.run(instance, y, None);
    let status: Vec<VertexStatus> = instance.vertices().map(|v| sim.status(instance, y, v)).collect();
    let mut alpha = vec![0.0; instance.vertex_count()];
    let mut matches = Vec::new();
    for v in instance.deadline_order() {
        if let VertexStatus::Active { partner, partner_rank } = status[v.index()] {
            let share = gain.value(partner_rank);
            alpha[v.index()] = 1.0 - share;
            alpha[partner.index()] = share;
            matches.push((v, partner));
        }
    }
    Ok(IntegralOutcome { matches, status, alpha })
}

/// Ranking with the piecewise Ranking gain.
pub fn run_ranking(instance: &Instance, ranks: &RankVector) -> Result<IntegralOutcome> {
    run_ranking_with(instance, ranks, RankingGain::new())
}

/// Sorted distinct ranks of every vertex outside `skip` and `removed`, framed
/// by the sentinels 0 and 1.
pub(crate) fn breakpoints(y: &[f64], skip: &[VertexId], removed: Option<&[bool]>) -> Vec<f64> {
    let mut b: Vec<f64> =
        y.iter().enumerate().filter(|&(w, _)| !skip.iter().any(|s| s.index() == w) && !removed.is_some_and(|r| r[w])).map(|(_, &r)| r).collect();
    b.push(0.0);
    b.push(1.0);
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Marginal rank of `v` with the other ranks fixed, on the instance minus
/// `removed`.
pub(crate) fn marginal_rank_in(sim: &mut Simulator, instance: &Instance, v: VertexId, y: &mut [f64], removed: Option<&[bool]>) -> f64 {
    let saved = y[v.index()];
    let points = breakpoints(y, &[v], removed);
    let mut theta = 0.0;
    for w in points.windows(2) {
        y[v.index()] = 0.5 * (w[0] + w[1]);
        sim.run(instance, y, removed);
        if sim.is_passive(v) {
            theta = w[1];
        }
    }
    y[v.index()] = saved;
    theta
}

/// Largest `θ` such that `v` is passive when its rank is just below `θ`;
/// `v`'s own stored rank is ignored.
pub fn marginal_rank(instance: &Instance, v: VertexId, ranks: &RankVector) -> Result<f64> {
    check_ranks(instance, ranks)?;
    let mut y = ranks.as_slice().to_vec();
    Ok(marginal_rank_in(&mut Simulator::new(), instance, v, &mut y, None))
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ThetaSample {
    pub y_u: f64,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ThresholdReport {
    pub u: VertexId,
    pub v: VertexId,
    pub tau: f64,
    pub gamma: f64,
    pub theta_samples: Vec<ThetaSample>,
    /// Common value of `θ(y_u)` for `y_u > τ`, if any sample lies there.
    pub theta: Option<f64>,
    pub constancy_pass: bool,
    pub theta_at_least_gamma: bool,
}

/// `τ`, `γ` and the map `y_u ↦ θ(y_u)` for the edge `(u, v)` where `u` has
/// the earlier deadline. Both `u` and `v`'s stored ranks are ignored.
///
/// On bipartite instances a non-constant `θ` above `τ` is an error.
pub fn thresholds(instance: &Instance, u: VertexId, v: VertexId, ranks: &RankVector) -> Result<ThresholdReport> {
    check_ranks(instance, ranks)?;
    if !instance.has_edge(u, v) {
        return Err(Error::NotAnEdge(u, v));
    }
    if instance.deadline_step(u) > instance.deadline_step(v) {
        return Err(Error::InvalidArgument("u must have the earlier deadline"));
    }
    let n = instance.vertex_count();
    let mut sim = Simulator::new();
    let mut y = ranks.as_slice().to_vec();
    let mut removed = vec![false; n];

    removed[v.index()] = true;
    let tau = marginal_rank_in(&mut sim, instance, u, &mut y, Some(&removed));
    removed[v.index()] = false;
    removed[u.index()] = true;
    let gamma = marginal_rank_in(&mut sim, instance, v, &mut y, Some(&removed));

    let points = breakpoints(&y, &[u, v], None);
    let mut samples = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        let y_u = 0.5 * (w[0] + w[1]);
        y[u.index()] = y_u;
        let theta = marginal_rank_in(&mut sim, instance, v, &mut y, None);
        samples.push(ThetaSample { y_u, theta });
    }
    let above: Vec<f64> = samples.iter().filter(|s| s.y_u > tau).map(|s| s.theta).collect();
    let constancy_pass = above.windows(2).all(|w| w[0] == w[1]);
    let theta_at_least_gamma = samples.iter().all(|s| s.theta >= gamma);
    if !constancy_pass && instance.is_bipartite() {
        return Err(Error::ConstancyViolation(u, v));
    }
    Ok(ThresholdReport { u, v, tau, gamma, theta: above.first().copied(), theta_samples: samples, constancy_pass, theta_at_least_gamma })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StatusChange {
    pub vertex: VertexId,
    pub before: VertexStatus,
    pub after: VertexStatus,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Lemma1Report {
    pub removed: VertexId,
    pub neighbors_checked: usize,
    pub violations: Vec<StatusChange>,
}

impl Lemma1Report {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compares every neighbor of `u` between `M(y)` and the run with `u`
/// removed; a neighbor that ends up strictly better is a violation.
pub fn check_lemma1_monotonicity(instance: &Instance, ranks: &RankVector, u: VertexId) -> Result<Lemma1Report> {
    check_ranks(instance, ranks)?;
    if !instance.is_bipartite() {
        return Err(Error::NotBipartite);
    }
    let y = ranks.as_slice();
    let mut with = Simulator::new();
    with.run(instance, y, None);
    let mut removed = vec![false; instance.vertex_count()];
    removed[u.index()] = true;
    let mut without = Simulator::new();
    without.run(instance, y, Some(&removed));
    let mut violations = Vec::new();
    for nb in instance.neighbors(u) {
        let w = nb.vertex;
        let before = with.status(instance, y, w);
        let after = without.status(instance, y, w);
        if after.is_better_than(&before) {
            violations.push(StatusChange { vertex: w, before, after });
        }
    }
    Ok(Lemma1Report { removed: u, neighbors_checked: instance.degree(u), violations })
}

/// One Monte Carlo trial.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub matched: usize,
    pub opt: usize,
    pub ratio: f64,
}

/// The generator for trial `trial`: stream `trial` of the ChaCha8 generator
/// seeded with `seed`, so trials can run in any order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn run_trial(sim: &mut Simulator, instance: &Instance, opt: usize, seed: u64, trial: u64) -> TrialRecord {
    let ranks = RankVector::random(instance.vertex_count(), &mut trial_rng(seed, trial));
    let matched = sim.run(instance, ranks.as_slice(), None);
    TrialRecord { trial, seed, matched, opt, ratio: matched as f64 / opt as f64 }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples<I: IntoIterator<Item = f64>>(values: I) -> Self {
        // Welford keeps the variance accurate when every sample is nearly equal.
        let (mut count, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
        for x in values {
            count += 1;
            let delta = x - mean;
            mean += delta / count as f64;
            m2 += delta * (x - mean);
        }
        let stderr = if count > 1 { libm::sqrt(m2 / (count - 1) as f64 / count as f64) } else { 0.0 };
        Estimate { mean, stderr, samples: count }
    }
}

/// Maximum matching size, used as the denominator of Ranking ratios.
pub fn integral_opt(instance: &Instance) -> Result<usize> {
    let opt = opt_bipartite(instance)?;
    if opt.halves == 0 {
        return Err(Error::ZeroOpt);
    }
    Ok((opt.halves / 2) as usize)
}

/// Mean and standard error of `|M(y)| / OPT` over seeded rank draws.
pub fn estimate_ratio(instance: &Instance, trials: u64, seed: u64) -> Result<Estimate> {
    Ok(estimate_ratio_logged(instance, trials, seed)?.0)
}

pub fn estimate_ratio_logged(instance: &Instance, trials: u64, seed: u64) -> Result<(Estimate, Vec<TrialRecord>)> {
    let opt = integral_opt(instance)?;
    let mut sim = Simulator::new();
    let log: Vec<TrialRecord> = (0..trials).map(|t| run_trial(&mut sim, instance, opt, seed, t)).collect();
    Ok((Estimate::from_samples(log.iter().map(|r| r.ratio)), log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Event;

    fn v(i: u32) -> VertexId {
        VertexId(i)
    }

    fn ordered(n: usize, edges: &[(u32, u32)], order: &[u32]) -> Instance {
        let edges = edges.iter().map(|&(a, b)| (v(a), v(b))).collect();
        let order: Vec<VertexId> = order.iter().map(|&i| v(i)).collect();
        Instance::from_deadline_order(n, edges, &order, None).unwrap()
    }

    #[test]
    fn single_edge_shares_gain() {
        let inst = ordered(2, &[(0, 1)], &[0, 1]);
        let ranks = RankVector::new(vec![0.9, 0.3]).unwrap();
        let out = run_ranking(&inst, &ranks).unwrap();
        let g = RankingGain::new();
        assert_eq!(out.matches, vec![(v(0), v(1))]);
        assert!((out.alpha[1] - g.value(0.3)).abs() < 1e-15);
        assert!((out.alpha[0] + out.alpha[1] - 1.0).abs() < 1e-15);
        assert!(matches!(out.status[1], VertexStatus::Passive { partner, .. } if partner == v(0)));
    }

    #[test]
    fn star_picks_lowest_rank() {
        let inst = ordered(3, &[(0, 1), (0, 2)], &[0, 1, 2]);
        let ranks = RankVector::new(vec![0.5, 0.2, 0.7]).unwrap();
        let out = run_ranking(&inst, &ranks).unwrap();
        assert_eq!(out.matches, vec![(v(0), v(1))]);
        assert_eq!(out.status[2], VertexStatus::Unmatched);
        assert_eq!(out.alpha[2], 0.0);
    }

    #[test]
    fn rank_validation() {
        assert!(RankVector::new(vec![0.1, 0.1]).is_err());
        assert!(RankVector::new(vec![1.0]).is_err());
        let inst = ordered(2, &[(0, 1)], &[0, 1]);
        let short = RankVector::new(vec![0.1]).unwrap();
        assert!(matches!(run_ranking(&inst, &short), Err(Error::RankLength { .. })));
    }

    #[test]
    fn random_ranks_are_distinct_and_seeded() {
        let a = RankVector::random(1000, &mut trial_rng(3, 0));
        let b = RankVector::random(1000, &mut trial_rng(3, 0));
        assert_eq!(a, b);
        assert!(RankVector::new(a.as_slice().to_vec()).is_ok());
        assert_ne!(a, RankVector::random(1000, &mut trial_rng(3, 1)));
    }

    #[test]
    fn marginal_rank_examples() {
        // u—v, u—w with deadlines u, v, w: v is passive iff y_v < y_w.
        let inst = ordered(3, &[(0, 1), (0, 2)], &[0, 1, 2]);
        let ranks = RankVector::new(vec![0.4, 0.0, 0.65]).unwrap();
        assert_eq!(marginal_rank(&inst, v(1), &ranks).unwrap(), 0.65);
        let lonely = ordered(3, &[(0, 2)], &[0, 1, 2]);
        assert_eq!(marginal_rank(&lonely, v(1), &ranks).unwrap(), 0.0);
        // The only neighbor of u reaches its deadline first and must take v.
        let forced = ordered(2, &[(0, 1)], &[0, 1]);
        assert_eq!(marginal_rank(&forced, v(1), &RankVector::new(vec![0.3, 0.9]).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn thresholds_on_the_cherry() {
        let inst = ordered(3, &[(0, 1), (0, 2)], &[0, 1, 2]);
        let ranks = RankVector::new(vec![0.4, 0.1, 0.65]).unwrap();
        let rep = thresholds(&inst, v(0), v(1), &ranks).unwrap();
        assert_eq!(rep.tau, 0.0);
        assert_eq!(rep.gamma, 0.0);
        assert!(rep.theta_samples.iter().all(|s| s.theta == 0.65));
        assert_eq!(rep.theta, Some(0.65));
        assert!(rep.constancy_pass && rep.theta_at_least_gamma);
        assert!(matches!(thresholds(&inst, v(1), v(2), &ranks), Err(Error::NotAnEdge(..))));
        assert!(thresholds(&inst, v(1), v(0), &ranks).is_err());
    }

    #[test]
    fn lemma1_on_single_edge() {
        let inst = ordered(2, &[(0, 1)], &[0, 1]);
        let ranks = RankVector::new(vec![0.3, 0.6]).unwrap();
        let rep = check_lemma1_monotonicity(&inst, &ranks, v(0)).unwrap();
        assert!(rep.pass());
        assert_eq!(rep.neighbors_checked, 1);
        let tri = ordered(3, &[(0, 1), (1, 2), (0, 2)], &[0, 1, 2]);
        let r3 = RankVector::new(vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(check_lemma1_monotonicity(&tri, &r3, v(0)), Err(Error::NotBipartite));
    }

    #[test]
    fn status_order() {
        let p = |d| VertexStatus::Passive { partner: v(0), partner_deadline: d };
        let a = |r| VertexStatus::Active { partner: v(0), partner_rank: r };
        assert!(p(5).is_better_than(&a(0.1)));
        assert!(p(3).is_better_than(&p(5)));
        assert!(a(0.1).is_better_than(&a(0.2)));
        assert!(a(0.9).is_better_than(&VertexStatus::Unmatched));
        assert!(!VertexStatus::Unmatched.is_better_than(&a(0.9)));
        assert!(!p(5).is_better_than(&p(5)));
    }

    #[test]
    fn estimates() {
        let inst = ordered(2, &[(0, 1)], &[0, 1]);
        let est = estimate_ratio(&inst, 100, 1).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
        let empty = Instance::new(1, vec![], vec![Event::arrival(v(0), 0), Event::deadline(v(0), 1)], None).unwrap();
        assert_eq!(estimate_ratio(&empty, 10, 1), Err(Error::ZeroOpt));
        let path = ordered(4, &[(0, 1), (1, 2), (2, 3)], &[1, 2, 0, 3]);
        assert_eq!(estimate_ratio(&path, 500, 9).unwrap(), estimate_ratio(&path, 500, 9).unwrap());
    }
}
