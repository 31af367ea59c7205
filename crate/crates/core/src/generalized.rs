//! `L` interleaved copies of the water-filling hard instance whose arrivals
//! hide, at every `u`-deadline, which available neighbor is which.
//!
//! Copy `l` of layer `t` is the group `U_{t,l} ∪ V_{t,l}`. The cross edges of
//! `U_{t,l}` go to the shifted set `Û_{t+1,l} = {u_{t+1,j,l-k^{t-1}(j-1)}}`,
//! which needs groups with non-positive `l`; those dummy groups are built in
//! full down to `lo_{t+1} = lo_t - k^{t-1}(k-1)`. Deadlines are
//! `D(t,i,l) = k^{t-1} + i·k^t + l·k²`, ties broken by `(t, i, l)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::instance::{Instance, VertexId};
use crate::wf_hardness::h_induced_counts;

/// Cap on `k^m · L`.
pub const MAX_SCALE: u64 = 50_000_000;
/// Cap on the vertex count.
pub const MAX_VERTICES: u64 = 4_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedHardInstance {
    pub k: usize,
    pub m: usize,
    pub copies: usize,
    pub instance: Instance,
    /// `lo[t-1]`: smallest copy index present in layer `t`.
    lo: Vec<i64>,
    /// First vertex id of layer `t - 1`.
    base: Vec<usize>,
}

impl GeneralizedHardInstance {
    fn slot(&self, t: usize, l: i64) -> Option<usize> {
        let lo = *self.lo.get(t.checked_sub(1)?)?;
        if l < lo || l > self.copies as i64 {
            return None;
        }
        Some(self.base[t - 1] + (l - lo) as usize * 2 * self.k)
    }

    /// `u_{t,i,l}` if that group exists.
    pub fn u(&self, t: usize, i: usize, l: i64) -> Option<VertexId> {
        self.slot(t, l).map(|s| VertexId::new(s + i - 1))
    }

    /// `v_{t,i,l}` if that group exists.
    pub fn v(&self, t: usize, i: usize, l: i64) -> Option<VertexId> {
        self.slot(t, l).map(|s| VertexId::new(s + self.k + i - 1))
    }

    pub fn lowest_copy(&self, t: usize) -> i64 {
        self.lo[t - 1]
    }

    /// Vertices in groups with a non-positive copy index.
    pub fn dummy_count(&self) -> usize {
        self.lo.iter().map(|&lo| (1 - lo) as usize * 2 * self.k).sum()
    }

    /// Shift `k^{t-1}(j-1)` of the `j`-th member of `Û_{t+1,l}`.
    fn shift(&self, t: usize, j: usize) -> i64 {
        pow(self.k, t - 1) * (j as i64 - 1)
    }
}

fn pow(k: usize, e: usize) -> i64 {
    (k as i64).pow(e as u32)
}

/// Scaled deadline key `k^{t-1} + i·k^t + l·k²`.
pub fn scaled_deadline(k: usize, t: usize, i: usize, l: i64) -> i64 {
    pow(k, t - 1) + i as i64 * pow(k, t) + l * pow(k, 2)
}

pub fn gen_generalized_hard_instance(k: usize, m: usize, copies: usize) -> Result<GeneralizedHardInstance> {
    if k < 2 || m == 0 || copies == 0 {
        return Err(Error::InvalidArgument("need k >= 2, m >= 1 and L >= 1"));
    }
    let scale = (k as u64).checked_pow(m as u32).and_then(|p| p.checked_mul(copies as u64));
    match scale {
        Some(s) if s <= MAX_SCALE => {}
        other => return Err(Error::SizeOverflow { requested: other.unwrap_or(u64::MAX), limit: MAX_SCALE }),
    }
    let mut lo = vec![1i64; m];
    for t in 1..m {
        lo[t] = lo[t - 1] - pow(k, t - 1) * (k as i64 - 1);
    }
    let mut base = Vec::with_capacity(m);
    let mut n = 0usize;
    for &low in &lo {
        base.push(n);
        n += (copies as i64 - low + 1) as usize * 2 * k;
    }
    if n as u64 > MAX_VERTICES {
        return Err(Error::SizeOverflow { requested: n as u64, limit: MAX_VERTICES });
    }
    let mut g = GeneralizedHardInstance { k, m, copies, instance: Instance::empty(), lo, base };
    let counts = h_induced_counts(k);

    let mut edges = Vec::new();
    let mut u_keys = Vec::new();
    let mut v_keys = Vec::new();
    for t in 1..=m {
        for l in g.lo[t - 1]..=copies as i64 {
            for i in 1..=k {
                let u = g.u(t, i, l).expect("group exists");
                for j in i..=k {
                    edges.push((u, g.v(t, j, l).expect("group exists")));
                }
                if t < m {
                    for j in 1..=counts[i - 1] {
                        let w = g.u(t + 1, j, l - g.shift(t, j)).expect("shifted group exists");
                        edges.push((u, w));
                    }
                }
                u_keys.push((scaled_deadline(k, t, i, l), t, i, l, u));
                v_keys.push((t, l, i, g.v(t, i, l).expect("group exists")));
            }
        }
    }
    u_keys.sort_unstable();
    v_keys.sort_unstable();
    let order: Vec<VertexId> = u_keys.iter().map(|x| x.4).chain(v_keys.iter().map(|x| x.3)).collect();
    let mut side = vec![false; n];
    for t in 1..=m {
        for l in g.lo[t - 1]..=copies as i64 {
            for i in 1..=k {
                side[g.u(t, i, l).unwrap().index()] = t % 2 == 0;
                side[g.v(t, i, l).unwrap().index()] = t % 2 == 1;
            }
        }
    }
    g.instance = Instance::from_deadline_order(n, edges, &order, Some(side))?;
    Ok(g)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GeneralizedReport {
    pub k: usize,
    pub m: usize,
    pub copies: usize,
    pub vertices: usize,
    pub edges: usize,
    pub dummy_count: usize,
    /// `dummy_count / (m·k^{m+1})`.
    pub dummy_budget_ratio: f64,
    /// Non-dummy `u` vertices examined.
    pub checked: usize,
    /// Every available neighbor of every checked `u_{t,i,l}` sees the same
    /// arrived layer-`t` neighbors, namely `u_{t,1..=i,l}`.
    pub indistinguishable: bool,
    /// No `u_{t,j,l}` with `j > i` has arrived by the deadline of `u_{t,i,l}`.
    pub arrivals_hidden: bool,
    /// Checked vertices whose available neighbors have identical arrived
    /// neighborhoods without the layer restriction.
    pub full_neighborhood_matches: usize,
    /// Every member of `Û_{t+1,l}` has a later deadline than all of `U_{t,l}`.
    pub deadline_order: bool,
}

impl GeneralizedReport {
    pub fn pass(&self) -> bool {
        self.indistinguishable && self.arrivals_hidden && self.deadline_order && self.dummy_budget_ratio <= 1.0
    }
}

/// Structural checks on a generated instance.
pub fn check_generalized(g: &GeneralizedHardInstance) -> GeneralizedReport {
    let inst = &g.instance;
    let k = g.k;
    let layer_of = |x: VertexId| -> (usize, bool) {
        let t = g.base.partition_point(|&b| b <= x.index());
        let within = (x.index() - g.base[t - 1]) % (2 * k);
        (t, within < k)
    };
    let mut indistinguishable = true;
    let mut arrivals_hidden = true;
    let mut full_matches = 0;
    let mut checked = 0;
    let mut expected = Vec::new();
    let mut seen = Vec::new();
    let mut full_first: Vec<VertexId> = Vec::new();
    let mut full = Vec::new();
    for t in 1..=g.m {
        for l in 1..=g.copies as i64 {
            for i in 1..=k {
                let u = g.u(t, i, l).expect("non-dummy group exists");
                let d = inst.deadline_step(u);
                checked += 1;
                for j in i + 1..=k {
                    if inst.arrival_step(g.u(t, j, l).unwrap()) < d {
                        arrivals_hidden = false;
                    }
                }
                expected.clear();
                expected.extend((1..=i).map(|j| g.u(t, j, l).unwrap()));
                expected.sort_unstable();
                let mut all_full_equal = true;
                for (idx, nb) in inst.available_neighbors(u).iter().enumerate() {
                    seen.clear();
                    full.clear();
                    for x in inst.neighbors(nb.vertex) {
                        if inst.arrival_step(x.vertex) >= d {
                            continue;
                        }
                        full.push(x.vertex);
                        if layer_of(x.vertex) == (t, true) {
                            seen.push(x.vertex);
                        }
                    }
                    seen.sort_unstable();
                    full.sort_unstable();
                    if seen != expected {
                        indistinguishable = false;
                    }
                    if idx == 0 {
                        full_first.clone_from(&full);
                    } else if full != full_first {
                        all_full_equal = false;
                    }
                }
                if all_full_equal {
                    full_matches += 1;
                }
            }
        }
    }

    let mut deadline_order = true;
    for t in 1..g.m {
        for l in g.lo[t - 1]..=g.copies as i64 {
            let latest = (1..=k).map(|i| inst.deadline_step(g.u(t, i, l).unwrap())).max().unwrap();
            for j in 1..=k {
                let w = g.u(t + 1, j, l - g.shift(t, j)).unwrap();
                if inst.deadline_step(w) <= latest {
                    deadline_order = false;
                }
            }
        }
    }
    let dummy = g.dummy_count();
    let budget = g.m as f64 * libm::pow(k as f64, (g.m + 1) as f64);
    GeneralizedReport {
        k,
        m: g.m,
        copies: g.copies,
        vertices: inst.vertex_count(),
        edges: inst.edge_count(),
        dummy_count: dummy,
        dummy_budget_ratio: dummy as f64 / budget,
        checked,
        indistinguishable,
        arrivals_hidden,
        full_neighborhood_matches: full_matches,
        deadline_order,
    }
}
