//! Expected gain `E[α_u + α_v]` of one edge over the ranks of its endpoints,
//! and the lower bounds used to certify Ranking.
//!
//! With every other rank fixed, the matching is constant on each cell of the
//! grid spanned by the other ranks (diagonal cells split by `y_u = y_v`), and
//! within a cell each dual is a constant, `g(y_u)`, `g(y_v)` or one minus
//! those. The exact expectation is therefore a sum of closed-form cell
//! integrals of `g`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gain::GainFunction;
use crate::instance::{Instance, VertexId};
use crate::math::integrate;
use crate::ranking::{breakpoints, marginal_rank_in, Estimate, RankVector, Simulator};

/// Largest instance handled by exhaustive integration.
pub const EXHAUSTIVE_LIMIT: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GainMode {
    Exhaustive,
    MonteCarlo { samples: usize, seed: u64 },
}

/// `α_u + α_v = constant + cu·g(y_u) + cv·g(y_v)` on one cell.
#[derive(Clone, Copy, Debug, Default)]
struct Affine {
    constant: f64,
    cu: f64,
    cv: f64,
}

#[derive(Clone, Copy)]
enum Region {
    Rect {
        au: f64,
        bu: f64,
        av: f64,
        bv: f64,
    },
    /// `a <= y_u < y_v <= b`.
    Below {
        a: f64,
        b: f64,
    },
    /// `a <= y_v < y_u <= b`.
    Above {
        a: f64,
        b: f64,
    },
}

/// `∫_a^b g(y)(b - y) dy`.
fn weighted_down<G: GainFunction>(g: &G, a: f64, b: f64) -> f64 {
    g.second_integral(b) - g.second_integral(a) - g.integral(a) * (b - a)
}

/// `∫_a^b g(y)(y - a) dy`.
fn weighted_up<G: GainFunction>(g: &G, a: f64, b: f64) -> f64 {
    g.integral(b) * (b - a) - (g.second_integral(b) - g.second_integral(a))
}

impl Region {
    /// Area, `∫∫ g(y_u)` and `∫∫ g(y_v)` over the region.
    fn moments<G: GainFunction>(&self, g: &G) -> (f64, f64, f64) {
        match *self {
            Region::Rect { au, bu, av, bv } => {
                let (wu, wv) = (bu - au, bv - av);
                (wu * wv, wv * g.integral_between(au, bu), wu * g.integral_between(av, bv))
            }
            Region::Below { a, b } => (0.5 * (b - a) * (b - a), weighted_down(g, a, b), weighted_up(g, a, b)),
            Region::Above { a, b } => (0.5 * (b - a) * (b - a), weighted_up(g, a, b), weighted_down(g, a, b)),
        }
    }

    fn representative(&self) -> (f64, f64) {
        match *self {
            Region::Rect { au, bu, av, bv } => (0.5 * (au + bu), 0.5 * (av + bv)),
            Region::Below { a, b } => (a + (b - a) / 3.0, a + 2.0 * (b - a) / 3.0),
            Region::Above { a, b } => (a + 2.0 * (b - a) / 3.0, a + (b - a) / 3.0),
        }
    }
}

fn regions(points: &[f64]) -> Vec<Region> {
    let cells = points.len() - 1;
    let mut out = Vec::with_capacity(cells * cells + cells);
    for i in 0..cells {
        for j in 0..cells {
            let (au, bu, av, bv) = (points[i], points[i + 1], points[j], points[j + 1]);
            if i == j {
                out.push(Region::Below { a: au, b: bu });
                out.push(Region::Above { a: au, b: bu });
            } else {
                out.push(Region::Rect { au, bu, av, bv });
            }
        }
    }
    out
}

/// Dual of `x` in the current matching, split into the `Affine` form, where
/// `(u, v)` are the two vertices whose ranks vary.
fn dual_terms<G: GainFunction>(sim: &Simulator, g: &G, y: &[f64], x: VertexId, u: VertexId, v: VertexId) -> Affine {
    let Some(partner) = sim.mate(x) else {
        return Affine::default();
    };
    let varying = |w: VertexId, value: f64| {
        if w == u {
            Affine { cu: value, ..Affine::default() }
        } else if w == v {
            Affine { cv: value, ..Affine::default() }
        } else {
            Affine { constant: value * g.value(y[w.index()]), ..Affine::default() }
        }
    };
    if sim.is_active(x) {
        let mut t = varying(partner, -1.0);
        t.constant += 1.0;
        t
    } else {
        varying(x, 1.0)
    }
}

struct PairSetup<'a> {
    instance: &'a Instance,
    u: VertexId,
    v: VertexId,
    y: Vec<f64>,
    sim: Simulator,
}

impl<'a> PairSetup<'a> {
    fn new(instance: &'a Instance, u: VertexId, v: VertexId, ranks: &RankVector) -> Result<Self> {
        if ranks.len() != instance.vertex_count() {
            return Err(Error::RankLength { n: instance.vertex_count(), got: ranks.len() });
        }
        if !instance.has_edge(u, v) {
            return Err(Error::NotAnEdge(u, v));
        }
        Ok(PairSetup { instance, u, v, y: ranks.as_slice().to_vec(), sim: Simulator::new() })
    }

    fn run(&mut self, y_u: f64, y_v: f64) {
        self.y[self.u.index()] = y_u;
        self.y[self.v.index()] = y_v;
        self.sim.run(self.instance, &self.y, None);
    }

    /// `E[α_u·[keep_u] + α_v·[keep_v]]` where `keep` decides per cell from a
    /// representative `(y_u, y_v)`.
    fn integrate<G: GainFunction, K: Fn(f64, f64) -> (bool, bool)>(&mut self, g: &G, keep: K) -> f64 {
        let points = breakpoints(&self.y, &[self.u, self.v], None);
        let mut total = 0.0;
        for region in regions(&points) {
            let (yu, yv) = region.representative();
            let (ku, kv) = keep(yu, yv);
            if !ku && !kv {
                continue;
            }
            self.run(yu, yv);
            let mut f = Affine::default();
            for (x, k) in [(self.u, ku), (self.v, kv)] {
                if k {
                    let t = dual_terms(&self.sim, g, &self.y, x, self.u, self.v);
                    f.constant += t.constant;
                    f.cu += t.cu;
                    f.cv += t.cv;
                }
            }
            let (area, mu, mv) = region.moments(g);
            total += f.constant * area + f.cu * mu + f.cv * mv;
        }
        total
    }

    /// `∫_0^1 (α_u·[keep_u] + α_v·[keep_v](y_v)) dy_v` for a fixed `y_u`.
    fn integrate_v<G: GainFunction, K: Fn(f64) -> (bool, bool)>(&mut self, g: &G, y_u: f64, keep: K) -> f64 {
        self.y[self.u.index()] = y_u;
        let points = breakpoints(&self.y, &[self.v], None);
        let mut total = 0.0;
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let (ku, kv) = keep(mid);
            if !ku && !kv {
                continue;
            }
            self.run(y_u, mid);
            let mut f = Affine::default();
            for (x, k) in [(self.u, ku), (self.v, kv)] {
                if k {
                    let t = dual_terms(&self.sim, g, &self.y, x, self.u, self.v);
                    f.constant += t.constant + t.cu * g.value(y_u);
                    f.cv += t.cv;
                }
            }
            total += f.constant * (b - a) + f.cv * g.integral_between(a, b);
        }
        total
    }
}

/// `E[α_u + α_v]` over uniform `(y_u, y_v)` with all other ranks fixed.
pub fn expected_edge_gain_with<G: GainFunction>(
    instance: &Instance,
    u: VertexId,
    v: VertexId,
    ranks: &RankVector,
    mode: GainMode,
    gain: G,
) -> Result<Estimate> {
    let mut setup = PairSetup::new(instance, u, v, ranks)?;
    match mode {
        GainMode::Exhaustive => {
            if instance.vertex_count() > EXHAUSTIVE_LIMIT {
                return Err(Error::TooLargeForExhaustive { n: instance.vertex_count(), limit: EXHAUSTIVE_LIMIT });
            }
            let mean = setup.integrate(&gain, |_, _| (true, true));
            Ok(Estimate { mean, stderr: 0.0, samples: 0 })
        }
        GainMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("samples must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let others = breakpoints(&setup.y, &[u, v], None);
            let draw = |rng: &mut ChaCha8Rng| loop {
                let r: f64 = rng.gen();
                if others.binary_search_by(|p| p.total_cmp(&r)).is_err() {
                    break r;
                }
            };
            let values: Vec<f64> = (0..samples)
                .map(|_| {
                    let y_u = draw(&mut rng);
                    let y_v = loop {
                        let r = draw(&mut rng);
                        if r != y_u {
                            break r;
                        }
                    };
                    setup.run(y_u, y_v);
                    let mut sum = 0.0;
                    for x in [u, v] {
                        let t = dual_terms(&setup.sim, &gain, &setup.y, x, u, v);
                        sum += t.constant + t.cu * gain.value(y_u) + t.cv * gain.value(y_v);
                    }
                    sum
                })
                .collect();
            Ok(Estimate::from_samples(values))
        }
    }
}

/// [`expected_edge_gain_with`] under the Ranking gain.
pub fn expected_edge_gain(instance: &Instance, u: VertexId, v: VertexId, ranks: &RankVector, mode: GainMode) -> Result<Estimate> {
    expected_edge_gain_with(instance, u, v, ranks, mode, crate::gain::RankingGain::new())
}

/// Every quantity the per-edge Ranking analysis compares, for one edge and
/// one assignment of the other ranks.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EdgeAnalysis {
    pub u: VertexId,
    pub v: VertexId,
    pub tau: f64,
    pub gamma: f64,
    /// `θ(y_u)` for `y_u > τ`; `None` when `τ = 1`.
    pub theta: Option<f64>,
    pub expected_gain: f64,
    /// `E[α_u·1(y_u < τ) + α_v·1(y_v < γ)]`.
    pub lemma5_lhs: f64,
    /// `G(τ) + G(γ)`.
    pub lemma5_rhs: f64,
    /// Smallest `LHS - RHS` of the fixed-`y_u` bound over samples `y_u > τ`.
    pub lemma6_slack: f64,
    /// Smallest `E_{y_v}[α_u + α_v] - (G(θ) + min{1 - g(θ), g(y_u)})` over
    /// samples of `y_u`.
    pub fact1_slack: f64,
    /// The three-threshold lower bound evaluated at the measured thresholds.
    pub lemma7_value: f64,
}

/// `f(τ, γ, θ) = G(τ) + G(γ) + (1-τ)(1 - γ - (1-θ)g(θ)) + γ ∫_τ^1 min{g(y), 1 - g(θ)} dy`.
pub fn three_threshold_bound<G: GainFunction>(gain: &G, tau: f64, gamma: f64, theta: f64) -> Result<f64> {
    let cap = 1.0 - gain.value(theta);
    let tail = clipped_tail(gain, tau, cap)?;
    Ok(gain.integral(tau) + gain.integral(gamma) + (1.0 - tau) * (1.0 - gamma - (1.0 - theta) * gain.value(theta)) + gamma * tail)
}

/// `∫_τ^1 min{g(y), cap} dy`.
fn clipped_tail<G: GainFunction>(gain: &G, tau: f64, cap: f64) -> Result<f64> {
    if tau >= 1.0 {
        return Ok(0.0);
    }
    Ok(integrate(|y| gain.value(y).min(cap), tau, 1.0, 1e-13)?.value)
}

/// Computes thresholds, the exact expected gain and the passive, active and
/// combined gain bounds for the edge `(u, v)`, `u` first.
pub fn analyze_edge<G: GainFunction>(instance: &Instance, u: VertexId, v: VertexId, ranks: &RankVector, gain: G) -> Result<EdgeAnalysis> {
    if instance.vertex_count() > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLargeForExhaustive { n: instance.vertex_count(), limit: EXHAUSTIVE_LIMIT });
    }
    if instance.deadline_step(u) > instance.deadline_step(v) {
        return Err(Error::InvalidArgument("u must have the earlier deadline"));
    }
    let mut setup = PairSetup::new(instance, u, v, ranks)?;
    let n = instance.vertex_count();
    let mut removed = vec![false; n];
    removed[v.index()] = true;
    let tau = marginal_rank_in(&mut setup.sim, instance, u, &mut setup.y, Some(&removed));
    removed[v.index()] = false;
    removed[u.index()] = true;
    let gamma = marginal_rank_in(&mut setup.sim, instance, v, &mut setup.y, Some(&removed));

    let expected_gain = setup.integrate(&gain, |_, _| (true, true));
    let lemma5_lhs = setup.integrate(&gain, |yu, yv| (yu < tau, yv < gamma));
    let lemma5_rhs = gain.integral(tau) + gain.integral(gamma);

    let points = breakpoints(&setup.y, &[u, v], None);
    let mut lemma6_slack = f64::INFINITY;
    let mut fact1_slack = f64::INFINITY;
    let mut theta_above = None;
    for w in points.windows(2) {
        let y_u = 0.5 * (w[0] + w[1]);
        setup.y[u.index()] = y_u;
        let theta = marginal_rank_in(&mut setup.sim, instance, v, &mut setup.y, None);
        let g_theta = gain.value(theta);
        let full = setup.integrate_v(&gain, y_u, |_| (true, true));
        let fact1 = gain.integral(theta) + (1.0 - g_theta).min(gain.value(y_u));
        fact1_slack = fact1_slack.min(full - fact1);
        if y_u > tau {
            theta_above.get_or_insert(theta);
            let lhs = setup.integrate_v(&gain, y_u, |yv| (true, yv > gamma));
            let rhs = 1.0 - gamma - (1.0 - theta) * g_theta + gamma * gain.value(y_u).min(1.0 - g_theta);
            lemma6_slack = lemma6_slack.min(lhs - rhs);
        }
    }
    let lemma7_value = three_threshold_bound(&gain, tau, gamma, theta_above.unwrap_or(1.0))?;
    Ok(EdgeAnalysis { u, v, tau, gamma, theta: theta_above, expected_gain, lemma5_lhs, lemma5_rhs, lemma6_slack, fact1_slack, lemma7_value })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BoundMinimum {
    pub value: f64,
    pub tau: f64,
    pub gamma: f64,
    pub theta: f64,
}

/// Grid of `[0, 1]` with `n` uniform steps plus the extra points, sorted.
fn grid(n: usize, extra: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    g.extend(extra.iter().copied().filter(|x| (0.0..=1.0).contains(x)));
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Minimum of [`three_threshold_bound`] over `τ ∈ [0, 1]` and
/// `0 <= γ <= θ <= 1` on a grid with `n` steps per axis, refined around the
/// `extra` points. With the Ranking gain the minimum is `Ω`.
pub fn lemma7_bound<G: GainFunction>(gain: &G, n: usize, extra: &[f64]) -> Result<BoundMinimum> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid must have at least one step"));
    }
    let pts = grid(n, extra);
    let mut best = BoundMinimum { value: f64::INFINITY, tau: 0.0, gamma: 0.0, theta: 0.0 };
    for &theta in &pts {
        let g_theta = gain.value(theta);
        let cap = 1.0 - g_theta;
        for &tau in &pts {
            // f is G(γ) plus an affine function of γ once τ and θ are fixed.
            let tail = clipped_tail(gain, tau, cap)?;
            let base = gain.integral(tau) + (1.0 - tau) * (1.0 - (1.0 - theta) * g_theta);
            let slope = tail - (1.0 - tau);
            for &gamma in pts.iter().take_while(|&&x| x <= theta) {
                let value = base + gain.integral(gamma) + gamma * slope;
                if value < best.value {
                    best = BoundMinimum { value, tau, gamma, theta };
                }
            }
        }
    }
    Ok(best)
}

/// `∫_0^1 min_θ {G(θ) + min{1 - g(θ), g(y)}} dy` with `θ` on a grid of `n`
/// steps plus `extra`: the single-threshold lower bound averaged over `y_u`.
pub fn fact1_bound<G: GainFunction>(gain: &G, n: usize, extra: &[f64]) -> Result<f64> {
    let thetas: Vec<(f64, f64)> = grid(n, extra).into_iter().map(|t| (gain.integral(t), 1.0 - gain.value(t))).collect();
    let inner = |y: f64| {
        let gy = gain.value(y);
        thetas.iter().map(|&(big, cap)| big + cap.min(gy)).fold(f64::INFINITY, f64::min)
    };
    Ok(integrate(inner, 0.0, 1.0, 1e-10)?.value)
}
