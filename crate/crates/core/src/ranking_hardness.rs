//! Hard instance for Ranking: groups `U_t ∪ V_t` joined by the perfect
//! matching `u_{t,i}—v_{t,i}`, with `U_t` and `U_{t+1}` completely connected.

use alloc::vec::Vec;

pub use crate::constants::omega_fixed_point;
use crate::error::{Error, Result};
use crate::instance::{Instance, VertexId};
use crate::ranking::{trial_rng, Estimate, RankVector, Simulator};
use crate::wf_hardness::MAX_EDGES;

#[derive(Clone, Debug, PartialEq)]
pub struct RankingHardInstance {
    pub k: usize,
    pub m: usize,
    pub instance: Instance,
}

impl RankingHardInstance {
    pub fn u(&self, t: usize, i: usize) -> VertexId {
        VertexId::new((t - 1) * self.k + (i - 1))
    }

    pub fn v(&self, t: usize, i: usize) -> VertexId {
        VertexId::new(self.k * self.m + (t - 1) * self.k + (i - 1))
    }

    /// Groups `t` with `m/4 <= t <= 3m/4`, at least one.
    pub fn bulk_groups(&self) -> core::ops::RangeInclusive<usize> {
        let lo = (self.m / 4).max(1);
        lo..=(3 * self.m / 4).max(lo)
    }
}

/// `u`-deadlines in lexicographic `(t, i)` order, then the `v`s.
pub fn gen_ranking_hard_instance(k: usize, m: usize) -> Result<RankingHardInstance> {
    if k == 0 || m == 0 {
        return Err(Error::InvalidArgument("k and m must be positive"));
    }
    let requested = (k * m) as u64 + (k * k) as u64 * (m as u64 - 1);
    if requested > MAX_EDGES {
        return Err(Error::SizeOverflow { requested, limit: MAX_EDGES });
    }
    let km = k * m;
    let u = |t: usize, i: usize| VertexId::new((t - 1) * k + (i - 1));
    let v = |t: usize, i: usize| VertexId::new(km + (t - 1) * k + (i - 1));
    let mut edges = Vec::with_capacity(requested as usize);
    for t in 1..=m {
        for i in 1..=k {
            edges.push((u(t, i), v(t, i)));
            if t < m {
                edges.extend((1..=k).map(|j| (u(t, i), u(t + 1, j))));
            }
        }
    }
    let order: Vec<VertexId> = (0..2 * km).map(VertexId::new).collect();
    let side = (0..2 * km)
        .map(|x| {
            let even = ((x % km) / k + 1) % 2 == 0;
            if x < km {
                even
            } else {
                !even
            }
        })
        .collect();
    let instance = Instance::from_deadline_order(2 * km, edges, &order, Some(side))?;
    Ok(RankingHardInstance { k, m, instance })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HardTrial {
    pub trial: u64,
    pub matched: usize,
    /// Matched `u` vertices that were active, over the bulk groups.
    pub bulk_active: usize,
}

/// One seeded run. Every matched pair has an active `u` endpoint, so the
/// active `u`s of a group measure that group's share of the matching.
pub fn hard_trial(sim: &mut Simulator, hard: &RankingHardInstance, seed: u64, trial: u64) -> HardTrial {
    let ranks = RankVector::random(hard.instance.vertex_count(), &mut trial_rng(seed, trial));
    let matched = sim.run(&hard.instance, ranks.as_slice(), None);
    let bulk_active = hard.bulk_groups().flat_map(|t| (1..=hard.k).map(move |i| (t, i))).filter(|&(t, i)| sim.is_active(hard.u(t, i))).count();
    HardTrial { trial, matched, bulk_active }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HardRatio {
    pub k: usize,
    pub m: usize,
    pub trials: u64,
    pub seed: u64,
    /// `|M| / km` over all groups.
    pub overall: Estimate,
    /// Active `u`s per group, averaged over the bulk groups.
    pub bulk: Estimate,
}

impl HardRatio {
    pub fn from_trials(hard: &RankingHardInstance, seed: u64, trials: &[HardTrial]) -> Self {
        let opt = (hard.k * hard.m) as f64;
        let bulk_size = (hard.k * hard.bulk_groups().count()) as f64;
        HardRatio {
            k: hard.k,
            m: hard.m,
            trials: trials.len() as u64,
            seed,
            overall: Estimate::from_samples(trials.iter().map(|t| t.matched as f64 / opt)),
            bulk: Estimate::from_samples(trials.iter().map(|t| t.bulk_active as f64 / bulk_size)),
        }
    }
}

/// Monte Carlo ratio of Ranking on the hard instance.
pub fn hard_instance_ratio(k: usize, m: usize, trials: u64, seed: u64) -> Result<HardRatio> {
    let hard = gen_ranking_hard_instance(k, m)?;
    let mut sim = Simulator::new();
    let runs: Vec<HardTrial> = (0..trials).map(|t| hard_trial(&mut sim, &hard, seed, t)).collect();
    Ok(HardRatio::from_trials(&hard, seed, &runs))
}
