//! Fully online matching instances.
//!
//! Every vertex has one arrival and one deadline on a strict total order of
//! steps. An edge may only join two vertices that have both arrived before
//! the earlier of their two deadlines.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn new(index: usize) -> Self {
        VertexId(index as u32)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for VertexId {
    fn from(v: u32) -> Self {
        VertexId(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EventKind {
    Arrival,
    Deadline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Event {
    pub kind: EventKind,
    pub vertex: VertexId,
    /// Position in the global order of events.
    pub step: u64,
}

impl Event {
    pub fn arrival(vertex: VertexId, step: u64) -> Self {
        Event { kind: EventKind::Arrival, vertex, step }
    }

    pub fn deadline(vertex: VertexId, step: u64) -> Self {
        Event { kind: EventKind::Deadline, vertex, step }
    }
}

/// An adjacency entry: the neighbor and the index of the connecting edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Neighbor {
    pub vertex: VertexId,
    pub edge: u32,
}

/// A validated fully online matching instance.
///
/// Immutable after construction. Event steps are renumbered to their
/// positions `0..2n` in the timeline. Edges are stored with `u < v` and sorted,
/// so two instances describing the same problem compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    n: usize,
    edges: Vec<(VertexId, VertexId)>,
    timeline: Vec<Event>,
    bipartition: Option<Vec<bool>>,
    arrival: Vec<u32>,
    deadline: Vec<u32>,
    adj_start: Vec<usize>,
    // Per vertex, neighbors sorted by deadline step; the neighbors whose
    // deadline comes after the vertex's own form the suffix from `forward`.
    adj: Vec<Neighbor>,
    forward: Vec<usize>,
}

/// Validates and builds an instance. See [`Instance::new`].
pub fn build_instance(n: usize, edges: Vec<(VertexId, VertexId)>, timeline: Vec<Event>, bipartition: Option<Vec<bool>>) -> Result<Instance> {
    Instance::new(n, edges, timeline, bipartition)
}

impl Instance {
    /// The instance with no vertices.
    pub fn empty() -> Instance {
        Instance::new(0, Vec::new(), Vec::new(), None).expect("the empty instance is valid")
    }

    /// Validates the raw description and builds the instance.
    ///
    /// `timeline` may be given in any order; it is sorted by `step`, and two
    /// events on the same step are rejected.
    pub fn new(n: usize, mut edges: Vec<(VertexId, VertexId)>, mut timeline: Vec<Event>, bipartition: Option<Vec<bool>>) -> Result<Self> {
        if n > u32::MAX as usize / 2 {
            return Err(Error::SizeOverflow { requested: n as u64, limit: u32::MAX as u64 / 2 });
        }
        for &(u, v) in &edges {
            for w in [u, v] {
                if w.index() >= n {
                    return Err(Error::VertexOutOfRange(w.0 as u64));
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
        }
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].0, w[0].1));
        }
        if edges.len() > u32::MAX as usize {
            return Err(Error::SizeOverflow { requested: edges.len() as u64, limit: u32::MAX as u64 });
        }

        timeline.sort_by_key(|e| e.step);
        if let Some(w) = timeline.windows(2).find(|w| w[0].step == w[1].step) {
            return Err(Error::SimultaneousEvents(w[0].step));
        }
        const UNSET: u32 = u32::MAX;
        let mut arrival = vec![UNSET; n];
        let mut deadline = vec![UNSET; n];
        for (pos, ev) in timeline.iter_mut().enumerate() {
            if ev.vertex.index() >= n {
                return Err(Error::VertexOutOfRange(ev.vertex.0 as u64));
            }
            ev.step = pos as u64;
            let slot = match ev.kind {
                EventKind::Arrival => &mut arrival[ev.vertex.index()],
                EventKind::Deadline => &mut deadline[ev.vertex.index()],
            };
            if *slot != UNSET {
                return Err(Error::DuplicateEvent { vertex: ev.vertex, kind: ev.kind });
            }
            *slot = pos as u32;
        }
        for i in 0..n {
            let vertex = VertexId::new(i);
            if arrival[i] == UNSET {
                return Err(Error::MissingEvent { vertex, kind: EventKind::Arrival });
            }
            if deadline[i] == UNSET {
                return Err(Error::MissingEvent { vertex, kind: EventKind::Deadline });
            }
            if deadline[i] < arrival[i] {
                return Err(Error::DeadlineBeforeArrival(vertex));
            }
        }

        for &(u, v) in &edges {
            let (ui, vi) = (u.index(), v.index());
            if arrival[ui] > deadline[vi] || arrival[vi] > deadline[ui] {
                return Err(Error::FullyOnlineViolation(u, v));
            }
        }

        if let Some(side) = &bipartition {
            if side.len() != n {
                return Err(Error::BipartitionLength { n, got: side.len() });
            }
            if let Some(&(u, v)) = edges.iter().find(|(u, v)| side[u.index()] == side[v.index()]) {
                return Err(Error::BipartitionViolation(u, v));
            }
        }

        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            degree[u.index()] += 1;
            degree[v.index()] += 1;
        }
        let mut adj_start = Vec::with_capacity(n + 1);
        adj_start.push(0);
        for d in &degree {
            adj_start.push(adj_start.last().unwrap() + d);
        }
        let mut fill = adj_start[..n].to_vec();
        let mut adj = vec![Neighbor { vertex: VertexId(0), edge: 0 }; 2 * edges.len()];
        for (e, &(u, v)) in edges.iter().enumerate() {
            adj[fill[u.index()]] = Neighbor { vertex: v, edge: e as u32 };
            fill[u.index()] += 1;
            adj[fill[v.index()]] = Neighbor { vertex: u, edge: e as u32 };
            fill[v.index()] += 1;
        }
        let mut forward = Vec::with_capacity(n);
        for i in 0..n {
            let list = &mut adj[adj_start[i]..adj_start[i + 1]];
            list.sort_unstable_by_key(|nb| deadline[nb.vertex.index()]);
            let split = list.partition_point(|nb| deadline[nb.vertex.index()] < deadline[i]);
            forward.push(adj_start[i] + split);
        }

        Ok(Instance { n, edges, timeline, bipartition, arrival, deadline, adj_start, adj, forward })
    }

    /// Builds an instance from the order in which deadlines are reached.
    ///
    /// Arrivals are synthesized: a vertex arrives immediately before the
    /// earliest deadline among itself and its neighbors. Vertices arriving
    /// before the same deadline are ordered by id.
    pub fn from_deadline_order(n: usize, edges: Vec<(VertexId, VertexId)>, order: &[VertexId], bipartition: Option<Vec<bool>>) -> Result<Self> {
        let timeline = synthesize_timeline(n, &edges, order)?;
        Instance::new(n, edges, timeline, bipartition)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> (VertexId, VertexId) {
        self.edges[index]
    }

    pub fn timeline(&self) -> &[Event] {
        &self.timeline
    }

    pub fn bipartition(&self) -> Option<&[bool]> {
        self.bipartition.as_deref()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.n).map(VertexId::new)
    }

    pub fn arrival_step(&self, v: VertexId) -> u64 {
        self.arrival[v.index()] as u64
    }

    pub fn deadline_step(&self, v: VertexId) -> u64 {
        self.deadline[v.index()] as u64
    }

    /// Vertices in the order their deadlines are reached.
    pub fn deadline_order(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.timeline.iter().filter(|e| e.kind == EventKind::Deadline).map(|e| e.vertex)
    }

    /// All neighbors of `v`, sorted by deadline.
    pub fn neighbors(&self, v: VertexId) -> &[Neighbor] {
        &self.adj[self.adj_start[v.index()]..self.adj_start[v.index() + 1]]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj_start[v.index() + 1] - self.adj_start[v.index()]
    }

    /// Neighbors of `v` whose deadline has not been reached when `v`'s deadline
    /// is, sorted by deadline.
    #[inline]
    pub fn available_neighbors(&self, v: VertexId) -> &[Neighbor] {
        &self.adj[self.forward[v.index()]..self.adj_start[v.index() + 1]]
    }

    /// As [`available_neighbors`](Self::available_neighbors), but checks that
    /// `step` is `v`'s deadline.
    pub fn available_at(&self, v: VertexId, step: u64) -> Result<&[Neighbor]> {
        if self.deadline_step(v) != step {
            return Err(Error::NotAtDeadline(v));
        }
        Ok(self.available_neighbors(v))
    }

    pub fn edge_index(&self, u: VertexId, v: VertexId) -> Option<usize> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.edges.binary_search(&key).ok()
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.edge_index(u, v).is_some()
    }

    /// The stored bipartition, or a two-coloring found by BFS.
    pub fn two_coloring(&self) -> Option<Vec<bool>> {
        if let Some(side) = &self.bipartition {
            return Some(side.clone());
        }
        let mut color: Vec<Option<bool>> = vec![None; self.n];
        let mut queue = VecDeque::new();
        for s in 0..self.n {
            if color[s].is_some() {
                continue;
            }
            color[s] = Some(false);
            queue.push_back(s);
            while let Some(x) = queue.pop_front() {
                let cx = color[x].unwrap();
                for nb in self.neighbors(VertexId::new(x)) {
                    let y = nb.vertex.index();
                    match color[y] {
                        None => {
                            color[y] = Some(!cx);
                            queue.push_back(y);
                        }
                        Some(cy) if cy == cx => return None,
                        Some(_) => {}
                    }
                }
            }
        }
        Some(color.into_iter().map(|c| c.unwrap_or(false)).collect())
    }

    pub fn is_bipartite(&self) -> bool {
        self.two_coloring().is_some()
    }

    /// The instance with the vertices in `removed` deleted and the others
    /// renumbered densely. Returns the map from old ids to new ids.
    pub fn without(&self, removed: &[VertexId]) -> (Instance, Vec<Option<VertexId>>) {
        let mut map = vec![None; self.n];
        let mut next = 0usize;
        for (i, slot) in map.iter_mut().enumerate() {
            if !removed.contains(&VertexId::new(i)) {
                *slot = Some(VertexId::new(next));
                next += 1;
            }
        }
        let edges = self.edges.iter().filter_map(|&(u, v)| Some((map[u.index()]?, map[v.index()]?))).collect();
        let timeline = self.timeline.iter().filter_map(|e| Some(Event { vertex: map[e.vertex.index()]?, ..*e })).collect();
        let bipartition = self.bipartition.as_ref().map(|side| side.iter().enumerate().filter(|(i, _)| map[*i].is_some()).map(|(_, &s)| s).collect());
        let inst = Instance::new(next, edges, timeline, bipartition).expect("removing vertices preserves validity");
        (inst, map)
    }
}

fn synthesize_timeline(n: usize, edges: &[(VertexId, VertexId)], order: &[VertexId]) -> Result<Vec<Event>> {
    const UNSET: usize = usize::MAX;
    let mut pos = vec![UNSET; n];
    for (p, &v) in order.iter().enumerate() {
        if v.index() >= n {
            return Err(Error::VertexOutOfRange(v.0 as u64));
        }
        if pos[v.index()] != UNSET {
            return Err(Error::DuplicateEvent { vertex: v, kind: EventKind::Deadline });
        }
        pos[v.index()] = p;
    }
    if let Some(i) = pos.iter().position(|&p| p == UNSET) {
        return Err(Error::MissingEvent { vertex: VertexId::new(i), kind: EventKind::Deadline });
    }
    let mut earliest = pos.clone();
    for &(u, v) in edges {
        if u.index() >= n || v.index() >= n {
            return Err(Error::VertexOutOfRange(u.0.max(v.0) as u64));
        }
        earliest[u.index()] = earliest[u.index()].min(pos[v.index()]);
        earliest[v.index()] = earliest[v.index()].min(pos[u.index()]);
    }
    // Bucket vertices by the deadline they arrive before; ids stay ascending.
    let mut bucket_start = vec![0usize; n + 1];
    for &e in &earliest {
        bucket_start[e + 1] += 1;
    }
    for p in 0..n {
        bucket_start[p + 1] += bucket_start[p];
    }
    let mut fill = bucket_start.clone();
    let mut by_bucket = vec![VertexId(0); n];
    for (i, &e) in earliest.iter().enumerate() {
        by_bucket[fill[e]] = VertexId::new(i);
        fill[e] += 1;
    }
    let mut timeline = Vec::with_capacity(2 * n);
    for (p, &v) in order.iter().enumerate() {
        for &a in &by_bucket[bucket_start[p]..bucket_start[p + 1]] {
            timeline.push(Event::arrival(a, timeline.len() as u64));
        }
        timeline.push(Event::deadline(v, timeline.len() as u64));
    }
    Ok(timeline)
}
