//! The adversarial family on which water-filling achieves only `2 - √2`.
//!
//! Vertices come in `m` groups `U_t ∪ V_t` of size `2k`. Inside a group,
//! `u_{t,i}` is joined to every `v_{t,j}` with `j >= i`; across groups,
//! `u_{t,i}` is joined to the first `⌊k·h((i-1)/k)⌋` vertices of `U_{t+1}`.
//! The `u` deadlines come first in lexicographic order, then the `v`s.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gain::GainFunction;
use crate::instance::{Event, EventKind, Instance, VertexId};
use crate::math::integrate;
use crate::special::{floor_scaled, SpecialFunctions};
use crate::waterfill::{achieved_ratio, WaterFilling};

/// Upper bound on the number of edges a generator may emit.
pub const MAX_EDGES: u64 = 40_000_000;

/// Number of `U_{t+1}` neighbors of `u_{t,i}` for `i = 1..=k`.
pub fn h_induced_counts(k: usize) -> Vec<usize> {
    let sf = SpecialFunctions::new();
    (1..=k).map(|i| floor_scaled(k, sf.h((i - 1) as f64 / k as f64).expect("argument in [0, 1)"))).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct WfHardInstance {
    pub k: usize,
    pub m: usize,
    pub instance: Instance,
}

impl WfHardInstance {
    /// `u_{t,i}` with 1-based `t` and `i`.
    pub fn u(&self, t: usize, i: usize) -> VertexId {
        VertexId::new((t - 1) * self.k + (i - 1))
    }

    /// `v_{t,i}` with 1-based `t` and `i`.
    pub fn v(&self, t: usize, i: usize) -> VertexId {
        VertexId::new(self.k * self.m + (t - 1) * self.k + (i - 1))
    }
}

/// Builds the hard instance for water-filling.
pub fn gen_wf_hard_instance(k: usize, m: usize) -> Result<WfHardInstance> {
    if k == 0 || m == 0 {
        return Err(Error::InvalidArgument("k and m must be positive"));
    }
    let counts = h_induced_counts(k);
    let triangle = (k * (k + 1) / 2) as u64 * m as u64;
    let cross = counts.iter().sum::<usize>() as u64 * (m as u64 - 1);
    if triangle + cross > MAX_EDGES {
        return Err(Error::SizeOverflow { requested: triangle + cross, limit: MAX_EDGES });
    }
    let km = k * m;
    let u = |t: usize, i: usize| VertexId::new((t - 1) * k + (i - 1));
    let v = |t: usize, i: usize| VertexId::new(km + (t - 1) * k + (i - 1));
    let mut edges = Vec::with_capacity((triangle + cross) as usize);
    for t in 1..=m {
        for i in 1..=k {
            for j in i..=k {
                edges.push((u(t, i), v(t, j)));
            }
            if t < m {
                for j in 1..=counts[i - 1] {
                    edges.push((u(t, i), u(t + 1, j)));
                }
            }
        }
    }
    let order: Vec<VertexId> = (0..2 * km).map(VertexId::new).collect();
    // One side: U_1, U_3, ... and V_2, V_4, ...
    let side = (0..2 * km)
        .map(|x| {
            let t = (x % km) / k + 1;
            if x < km {
                t % 2 == 0
            } else {
                t % 2 == 1
            }
        })
        .collect();
    let instance = Instance::from_deadline_order(2 * km, edges, &order, Some(side))?;
    Ok(WfHardInstance { k, m, instance })
}

/// Discretized level dynamics `p_{t+1} = M(1 - p_t)` on the hard instance and
/// its fixed point.
#[derive(Clone, Debug, PartialEq)]
pub struct HardnessProfile {
    pub k: usize,
    /// `a_j = 1 / (k - j + 1 + ⌊k·h((j-1)/k)⌋)`.
    pub a: Vec<f64>,
    /// Row `i` of `M` equals `a_j` for `j <= cutoff[i]` and zero beyond.
    pub cutoff: Vec<usize>,
    pub p_star: Vec<f64>,
    pub iterations: usize,
    /// `1 - ‖p*‖₁ / k`.
    pub ratio: f64,
}

impl HardnessProfile {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if j < self.cutoff[i] {
            self.a[j]
        } else {
            0.0
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.a[..self.cutoff[i]].iter().sum()
    }

    /// Dense `k × k` matrix, row-major.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.k).map(|i| (0..self.k).map(|j| self.entry(i, j)).collect()).collect()
    }

    /// `M(1 - p)`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let mut prefix = Vec::with_capacity(self.k + 1);
        prefix.push(0.0);
        for j in 0..self.k {
            prefix.push(prefix[j] + self.a[j] * (1.0 - p[j]));
        }
        self.cutoff.iter().map(|&c| prefix[c]).collect()
    }

    /// `max_j |p*_j - τ(j/k)|`.
    pub fn distance_to_tau(&self) -> f64 {
        let sf = SpecialFunctions::new();
        self.p_star.iter().enumerate().map(|(j, &p)| (p - sf.tau((j + 1) as f64 / self.k as f64).unwrap()).abs()).fold(0.0, f64::max)
    }
}

pub const STATIONARY_TOL: f64 = 1e-12;
const STATIONARY_MAX_ITER: usize = 1_000_000;

/// Builds `M` for block size `k` and iterates from `p_0 = 0` to its fixed
/// point.
pub fn stationary_profile(k: usize) -> Result<HardnessProfile> {
    if k < 2 {
        return Err(Error::InvalidArgument("stationary profile needs k >= 2"));
    }
    let sf = SpecialFunctions::new();
    let counts = h_induced_counts(k);
    let a: Vec<f64> = (1..=k).map(|j| 1.0 / (k - j + 1 + counts[j - 1]) as f64).collect();
    let cutoff: Vec<usize> = (1..=k)
        .map(|i| {
            let x = sf.h_inverse(i as f64 / k as f64).expect("argument in (0, 1]");
            let bound = libm::floor(k as f64 * x + 1.0 + 1e-9);
            bound.clamp(0.0, k as f64) as usize
        })
        .collect();
    let mut profile = HardnessProfile { k, a, cutoff, p_star: vec![0.0; k], iterations: 0, ratio: 0.0 };
    for i in 0..k {
        let sum = profile.row_sum(i);
        if sum >= 1.0 {
            return Err(Error::NonContraction { row: i, sum });
        }
    }
    let mut p = vec![0.0; k];
    for it in 1..=STATIONARY_MAX_ITER {
        let next = profile.apply(&p);
        let diff = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p = next;
        if diff < STATIONARY_TOL {
            profile.iterations = it;
            profile.ratio = 1.0 - p.iter().sum::<f64>() / k as f64;
            profile.p_star = p;
            return Ok(profile);
        }
    }
    Err(Error::NoConvergence)
}

/// Outcome of a numerical identity check.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ResidualReport {
    pub identity: &'static str,
    pub grid: usize,
    pub max_residual: f64,
    /// The integral value for inequality checks.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Lemma3Report {
    pub cumulative: ResidualReport,
    pub tau_integral: ResidualReport,
    pub harmonic_bound: ResidualReport,
}

impl Lemma3Report {
    pub fn pass(&self) -> bool {
        self.cumulative.pass && self.tau_integral.pass && self.harmonic_bound.pass
    }
}

pub const LEMMA3_TOL: f64 = 1e-6;
const QUAD_TOL: f64 = 1e-9;

/// Checks, by adaptive quadrature,
///
/// 1. `∫_0^x (1 - τ(y)) / (1 - y + h(y)) dy = c - τ(x)` on a grid of `x`,
/// 2. `∫_0^1 τ = 1 - c`,
/// 3. `∫_0^1 1 / (1 - y + h(y)) dy < 1`.
pub fn verify_lemma3(grid_size: usize) -> Result<Lemma3Report> {
    if grid_size < 100 {
        return Err(Error::InvalidArgument("grid_size must be at least 100"));
    }
    let sf = SpecialFunctions::new();
    let c = sf.c();
    let tau = |y: f64| sf.tau(y.clamp(0.0, 1.0)).unwrap();
    let h = |y: f64| sf.h(y.clamp(0.0, 1.0)).unwrap();

    let integrand = |y: f64| (1.0 - tau(y)) / (1.0 - y + h(y));
    let mut cumulative = 0.0;
    let mut max_residual = 0.0f64;
    let mut prev = 0.0;
    for j in 0..grid_size {
        let x = j as f64 / (grid_size - 1) as f64;
        if j > 0 {
            cumulative += integrate(integrand, prev, x, QUAD_TOL)?.value;
        }
        max_residual = max_residual.max((cumulative - (c - tau(x))).abs());
        prev = x;
    }
    let first = ResidualReport { identity: "cumulative", grid: grid_size, max_residual, value: None, tolerance: LEMMA3_TOL, pass: max_residual < LEMMA3_TOL };

    let tau_int = integrate(tau, 0.0, 1.0, QUAD_TOL)?.value;
    let residual = (tau_int - (1.0 - c)).abs();
    let second =
        ResidualReport { identity: "tau-integral", grid: 1, max_residual: residual, value: Some(tau_int), tolerance: LEMMA3_TOL, pass: residual < LEMMA3_TOL };

    let harmonic = integrate(|y| 1.0 / (1.0 - y + h(y)), 0.0, 1.0, QUAD_TOL)?.value;
    let third = ResidualReport {
        identity: "harmonic-bound",
        grid: 1,
        max_residual: (harmonic - 1.0).max(0.0),
        value: Some(harmonic),
        tolerance: 0.0,
        pass: harmonic < 1.0,
    };
    Ok(Lemma3Report { cumulative: first, tau_integral: second, harmonic_bound: third })
}

pub const F_ODE_TOL: f64 = 1e-8;

/// Max of `|1 - f(φ) + f(c-φ) + (1-φ) f'(φ)|` over `grid_size` points of
/// `[1e-6, c - 1e-6]`.
pub fn verify_f_ode(grid_size: usize) -> Result<ResidualReport> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument("grid_size must be at least 2"));
    }
    let sf = SpecialFunctions::new();
    let (lo, hi) = (1e-6, sf.c() - 1e-6);
    let mut max_residual = 0.0f64;
    for j in 0..grid_size {
        let phi = lo + (hi - lo) * j as f64 / (grid_size - 1) as f64;
        max_residual = max_residual.max(sf.ode_residual(phi)?.abs());
    }
    Ok(ResidualReport { identity: "f-ode", grid: grid_size, max_residual, value: None, tolerance: F_ODE_TOL, pass: max_residual < F_ODE_TOL })
}

/// Water-filling on the hard instance and the structural facts it should
/// exhibit.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HardRunReport {
    pub k: usize,
    pub m: usize,
    pub primal: f64,
    pub ratio: f64,
    /// Every `u_{t,i}` with `t < m` ends its own deadline at level one.
    pub saturated: bool,
    /// Largest passive level over all `u_{t,i}`.
    pub max_passive: f64,
    /// Largest `|p_{u_{t,i}} + x_{v_{t,i}} - c|` over groups in the middle half.
    pub bulk_pairing_gap: f64,
    /// The same gap restricted to `k/10 <= i <= 9k/10`; the end indices
    /// converge more slowly in `k`.
    pub interior_pairing_gap: f64,
}

const SATURATION_TOL: f64 = 1e-9;

pub fn ratio_on_hard_instance<G: GainFunction>(k: usize, m: usize, gain: G) -> Result<HardRunReport> {
    let hard = gen_wf_hard_instance(k, m)?;
    let outcome = WaterFilling::new(gain).log_pours(false).run(&hard.instance);
    let ratio = achieved_ratio(&outcome, &hard.instance)?;
    let c = SpecialFunctions::new().c();
    // x_u only changes at its own deadline and through pours from U_{t-1},
    // which all happen earlier, so the final level is the post-deadline level.
    let saturated = (1..m).flat_map(|t| (1..=k).map(move |i| (t, i))).all(|(t, i)| outcome.level[hard.u(t, i).index()] >= 1.0 - SATURATION_TOL);
    let max_passive = (1..=m).flat_map(|t| (1..=k).map(move |i| (t, i))).map(|(t, i)| outcome.passive[hard.u(t, i).index()]).fold(0.0, f64::max);
    let (lo, hi) = (m / 4 + 1, (3 * m / 4).max(m / 4 + 1));
    let (inner_lo, inner_hi) = ((k / 10).max(1), (9 * k / 10).max(1));
    let mut gap = 0.0f64;
    let mut inner = 0.0f64;
    for t in lo..=hi.min(m) {
        for i in 1..=k {
            let sum = outcome.passive[hard.u(t, i).index()] + outcome.level[hard.v(t, i).index()];
            let dev = (sum - c).abs();
            gap = gap.max(dev);
            if (inner_lo..=inner_hi).contains(&i) {
                inner = inner.max(dev);
            }
        }
    }
    Ok(HardRunReport { k, m, primal: outcome.primal(), ratio, saturated, max_passive, bulk_pairing_gap: gap, interior_pairing_gap: inner })
}

/// Randomly reassigns vertex identities group by group: walking the deadline
/// order, each vertex not yet labeled gets the next id, then its still
/// unlabeled available neighbors get the following ids in a uniformly random
/// order. Returns the relabeled instance and `map[old] = new`.
pub fn random_relabel(instance: &Instance, seed: u64) -> (Instance, Vec<VertexId>) {
    let n = instance.vertex_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map: Vec<Option<VertexId>> = vec![None; n];
    let mut next = 0usize;
    let mut group = Vec::new();
    for u in instance.deadline_order() {
        if map[u.index()].is_none() {
            map[u.index()] = Some(VertexId::new(next));
            next += 1;
        }
        group.clear();
        group.extend(instance.available_neighbors(u).iter().map(|nb| nb.vertex).filter(|w| map[w.index()].is_none()));
        group.sort_unstable();
        group.shuffle(&mut rng);
        for &w in &group {
            map[w.index()] = Some(VertexId::new(next));
            next += 1;
        }
    }
    let map: Vec<VertexId> = map.into_iter().map(|x| x.expect("every vertex has a deadline")).collect();
    let edges = instance.edges().iter().map(|&(a, b)| (map[a.index()], map[b.index()])).collect();
    let timeline = instance.timeline().iter().map(|e| Event { vertex: map[e.vertex.index()], ..*e }).collect();
    let bipartition = instance.bipartition().map(|side| {
        let mut out = vec![false; n];
        for (old, &s) in side.iter().enumerate() {
            out[map[old].index()] = s;
        }
        out
    });
    let relabeled = Instance::new(n, edges, timeline, bipartition).expect("relabeling preserves validity");
    (relabeled, map)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceItem {
    Edge(VertexId, VertexId),
    Deadline(VertexId),
}

/// Edge-arrival linearization of a vertex-arrival instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeArrivalTrace {
    pub n: usize,
    pub items: Vec<TraceItem>,
}

impl EdgeArrivalTrace {
    pub fn edge_count(&self) -> usize {
        self.items.iter().filter(|x| matches!(x, TraceItem::Edge(..))).count()
    }
}

/// At each deadline, reveals the vertex's edges to its available neighbors
/// (by ascending neighbor id) and then marks the deadline.
pub fn emit_edge_arrival_trace(instance: &Instance) -> EdgeArrivalTrace {
    let mut items = Vec::with_capacity(instance.edge_count() + instance.vertex_count());
    let mut buf = Vec::new();
    for ev in instance.timeline() {
        if ev.kind != EventKind::Deadline {
            continue;
        }
        let u = ev.vertex;
        buf.clear();
        buf.extend(instance.available_neighbors(u).iter().map(|nb| nb.vertex));
        buf.sort_unstable();
        items.extend(buf.iter().map(|&w| TraceItem::Edge(u, w)));
        items.push(TraceItem::Deadline(u));
    }
    EdgeArrivalTrace { n: instance.vertex_count(), items }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::two_minus_sqrt2;
    use crate::gain::linear_gain;
    use crate::opt::opt_bipartite;
    use crate::waterfill::run_waterfill;

    #[test]
    fn k4_m1_is_the_upper_triangle() {
        let hard = gen_wf_hard_instance(4, 1).unwrap();
        assert_eq!(hard.instance.vertex_count(), 8);
        assert_eq!(hard.instance.edge_count(), 10);
        for i in 1..=4 {
            for j in 1..=4 {
                assert_eq!(hard.instance.has_edge(hard.u(1, i), hard.v(1, j)), j >= i);
            }
        }
        assert!(hard.instance.bipartition().is_some());
    }

    #[test]
    fn k4_cross_edges_follow_h() {
        // h(3/4) lies above the fixed point of h, so u_{1,4} still reaches three.
        assert_eq!(h_induced_counts(4), vec![4, 3, 3, 3]);
        let hard = gen_wf_hard_instance(4, 2).unwrap();
        for j in 1..=4 {
            assert!(hard.instance.has_edge(hard.u(1, 1), hard.u(2, j)));
        }
        assert_eq!(hard.instance.edge_count(), 10 * 2 + 13);
    }

    #[test]
    fn available_neighbors_of_u() {
        let (k, m) = (6, 3);
        let hard = gen_wf_hard_instance(k, m).unwrap();
        let counts = h_induced_counts(k);
        for t in 1..m {
            for i in 1..=k {
                let avail = hard.instance.available_neighbors(hard.u(t, i)).len();
                assert_eq!(avail, k - i + 1 + counts[i - 1]);
            }
        }
    }

    #[test]
    fn opt_is_km() {
        for (k, m) in [(1, 1), (3, 2), (5, 4), (8, 3)] {
            let hard = gen_wf_hard_instance(k, m).unwrap();
            assert_eq!(opt_bipartite(&hard.instance).unwrap().halves, 2 * (k * m) as u64);
        }
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(gen_wf_hard_instance(0, 3).is_err());
        assert!(matches!(gen_wf_hard_instance(5000, 5000), Err(Error::SizeOverflow { .. })));
    }

    #[test]
    fn stationary_rows_contract() {
        for k in [10, 100] {
            let prof = stationary_profile(k).unwrap();
            for i in 0..k {
                assert!(prof.row_sum(i) < 1.0);
            }
            let fixed = prof.apply(&prof.p_star);
            for (a, b) in fixed.iter().zip(&prof.p_star) {
                assert!((a - b).abs() < 1e-10);
            }
            assert!(prof.p_star.iter().all(|&p| (0.0..1.0).contains(&p)));
        }
    }

    #[test]
    fn matrix_support_matches_the_graph() {
        // M_{i,j} != 0 iff u_{t,j} is adjacent to u_{t+1,i}.
        for k in [7, 10, 33] {
            let prof = stationary_profile(k).unwrap();
            let counts = h_induced_counts(k);
            for i in 1..=k {
                for j in 1..=k {
                    let adjacent = i <= counts[j - 1];
                    assert_eq!(prof.entry(i - 1, j - 1) != 0.0, adjacent, "k={k} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn stationary_profile_predicts_the_simulation() {
        let (k, m) = (12, 60);
        let prof = stationary_profile(k).unwrap();
        let hard = gen_wf_hard_instance(k, m).unwrap();
        let out = run_waterfill(&hard.instance, linear_gain());
        for i in 1..=k {
            let p = out.passive[hard.u(m - 1, i).index()];
            assert!((p - prof.p_star[i - 1]).abs() < 1e-6, "i={i}: {p} vs {}", prof.p_star[i - 1]);
        }
        assert!(stationary_profile(1).is_err());
    }

    #[test]
    fn small_instance_beats_the_limit() {
        let rep = ratio_on_hard_instance(5, 5, linear_gain()).unwrap();
        assert!(rep.ratio > two_minus_sqrt2());
    }

    #[test]
    fn f_ode_and_lemma3() {
        let ode = verify_f_ode(10_000).unwrap();
        assert!(ode.pass, "{ode:?}");
        let l3 = verify_lemma3(100).unwrap();
        assert!(l3.pass(), "{l3:?}");
        assert_eq!(l3.cumulative.grid, 100);
        assert!(verify_lemma3(10).is_err());
    }

    #[test]
    fn relabel_is_deterministic_and_isomorphic() {
        let hard = gen_wf_hard_instance(4, 3).unwrap();
        let (a, map_a) = random_relabel(&hard.instance, 9);
        let (b, map_b) = random_relabel(&hard.instance, 9);
        assert_eq!(a, b);
        assert_eq!(map_a, map_b);
        let mut seen = map_a.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), hard.instance.vertex_count());
        for &(x, y) in hard.instance.edges() {
            assert!(a.has_edge(map_a[x.index()], map_a[y.index()]));
        }
        assert_eq!(opt_bipartite(&a).unwrap().halves, 24);
        let before = run_waterfill(&hard.instance, linear_gain()).primal();
        let after = run_waterfill(&a, linear_gain()).primal();
        assert!((before - after).abs() < 1e-9);
    }

    #[test]
    fn traces() {
        let single = Instance::from_deadline_order(2, vec![(VertexId(0), VertexId(1))], &[VertexId(1), VertexId(0)], None).unwrap();
        let tr = emit_edge_arrival_trace(&single);
        assert_eq!(tr.items, vec![TraceItem::Edge(VertexId(1), VertexId(0)), TraceItem::Deadline(VertexId(1)), TraceItem::Deadline(VertexId(0))]);

        let hard = gen_wf_hard_instance(2, 1).unwrap();
        let tr = emit_edge_arrival_trace(&hard.instance);
        assert_eq!(tr.edge_count(), 3);
        let (u1, u2) = (hard.u(1, 1), hard.u(1, 2));
        let pos = |x: VertexId| tr.items.iter().position(|it| matches!(it, TraceItem::Edge(a, _) if *a == x)).unwrap();
        let last_u1 = tr.items.iter().rposition(|it| matches!(it, TraceItem::Edge(a, _) if *a == u1)).unwrap();
        assert!(last_u1 < pos(u2));

        let big = gen_wf_hard_instance(5, 4).unwrap();
        assert_eq!(emit_edge_arrival_trace(&big.instance).edge_count(), big.instance.edge_count());
    }
}
