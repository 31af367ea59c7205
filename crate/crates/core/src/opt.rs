//! Offline optimum: maximum matching on bipartite instances and maximum
//! fractional matching on general graphs.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::instance::{Instance, VertexId};

/// One edge of an optimum witness, carrying `halves / 2` units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WitnessEdge {
    pub u: VertexId,
    pub v: VertexId,
    pub halves: u8,
}

/// An optimum value stored exactly as a multiple of one half.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptValue {
    pub halves: u64,
    pub witness: Vec<WitnessEdge>,
}

impl OptValue {
    pub fn value(&self) -> f64 {
        self.halves as f64 / 2.0
    }

    pub fn is_integral(&self) -> bool {
        self.halves % 2 == 0
    }

    /// Checks the witness against the instance: every witness edge exists,
    /// fractions lie in `{1/2, 1}`, vertex loads are at most one and the
    /// fractions add up to the value.
    pub fn witness_is_feasible(&self, instance: &Instance) -> bool {
        let mut load = vec![0u32; instance.vertex_count()];
        let mut total = 0u64;
        for w in &self.witness {
            if !(1..=2).contains(&w.halves) || !instance.has_edge(w.u, w.v) {
                return false;
            }
            load[w.u.index()] += w.halves as u32;
            load[w.v.index()] += w.halves as u32;
            total += w.halves as u64;
        }
        load.iter().all(|&l| l <= 2) && total == self.halves
    }
}

/// Maximum cardinality matching of a bipartite graph given as left-side
/// adjacency lists (CSR). Returns `mate_left[l] = Some(r)`.
///
/// Hopcroft–Karp with an explicit DFS stack.
pub fn hopcroft_karp(n_left: usize, n_right: usize, start: &[usize], adj: &[u32]) -> Vec<Option<u32>> {
    const FREE: u32 = u32::MAX;
    const INF: u32 = u32::MAX;
    let mut mate_l = vec![FREE; n_left];
    let mut mate_r = vec![FREE; n_right];
    let mut dist = vec![INF; n_left];
    let mut queue = VecDeque::new();
    let mut cursor = vec![0usize; n_left];
    let mut stack: Vec<u32> = Vec::new();

    // Greedy warm start.
    for l in 0..n_left {
        for &r in &adj[start[l]..start[l + 1]] {
            if mate_r[r as usize] == FREE {
                mate_l[l] = r;
                mate_r[r as usize] = l as u32;
                break;
            }
        }
    }

    loop {
        queue.clear();
        for l in 0..n_left {
            if mate_l[l] == FREE {
                dist[l] = 0;
                queue.push_back(l as u32);
            } else {
                dist[l] = INF;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            let l = l as usize;
            for &r in &adj[start[l]..start[l + 1]] {
                let next = mate_r[r as usize];
                if next == FREE {
                    found = true;
                } else if dist[next as usize] == INF {
                    dist[next as usize] = dist[l] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found {
            break;
        }

        cursor.copy_from_slice(&start[..n_left]);
        for root in 0..n_left {
            if mate_l[root] != FREE {
                continue;
            }
            stack.clear();
            stack.push(root as u32);
            // Walk layered alternating paths; on success flip the whole stack.
            while let Some(&top) = stack.last() {
                let l = top as usize;
                if cursor[l] == start[l + 1] {
                    dist[l] = INF;
                    stack.pop();
                    continue;
                }
                let r = adj[cursor[l]];
                cursor[l] += 1;
                let next = mate_r[r as usize];
                if next == FREE {
                    // Augment along the stack, deepest first.
                    let mut r = r;
                    while let Some(l) = stack.pop() {
                        let prev = mate_l[l as usize];
                        mate_l[l as usize] = r;
                        mate_r[r as usize] = l;
                        r = prev;
                    }
                    break;
                } else if dist[next as usize] == dist[l] + 1 {
                    stack.push(next);
                }
            }
        }
    }
    mate_l.into_iter().map(|r| (r != FREE).then_some(r)).collect()
}

/// Maximum matching size of a bipartite instance, with a witness matching.
pub fn opt_bipartite(instance: &Instance) -> Result<OptValue> {
    let side = instance.two_coloring().ok_or(Error::NotBipartite)?;
    let n = instance.vertex_count();
    // Left = vertices with side false, indexed by their vertex id directly.
    let mut start = Vec::with_capacity(n + 1);
    let mut adj = Vec::with_capacity(instance.edge_count());
    start.push(0);
    for v in instance.vertices() {
        if !side[v.index()] {
            adj.extend(instance.neighbors(v).iter().map(|nb| nb.vertex.0));
        }
        start.push(adj.len());
    }
    let mate = hopcroft_karp(n, n, &start, &adj);
    let witness: Vec<WitnessEdge> = mate.iter().enumerate().filter_map(|(l, r)| r.map(|r| ordered(VertexId::new(l), VertexId(r), 2))).collect();
    Ok(OptValue { halves: 2 * witness.len() as u64, witness })
}

/// Maximum fractional matching of any instance.
///
/// Computed as half of a maximum matching in the bipartite double cover
/// (left copy of every vertex joined to the right copy of each neighbor); the
/// witness is half-integral.
pub fn opt_fractional_general(instance: &Instance) -> OptValue {
    let n = instance.vertex_count();
    let mut start = Vec::with_capacity(n + 1);
    let mut adj = Vec::with_capacity(2 * instance.edge_count());
    start.push(0);
    for v in instance.vertices() {
        adj.extend(instance.neighbors(v).iter().map(|nb| nb.vertex.0));
        start.push(adj.len());
    }
    let mate = hopcroft_karp(n, n, &start, &adj);
    let mut halves = vec![0u8; instance.edge_count()];
    let mut total = 0u64;
    for (l, r) in mate.iter().enumerate() {
        if let Some(r) = r {
            let e = instance.edge_index(VertexId::new(l), VertexId(*r)).expect("double cover edge");
            halves[e] += 1;
            total += 1;
        }
    }
    let witness = halves
        .iter()
        .enumerate()
        .filter(|(_, &h)| h > 0)
        .map(|(e, &h)| {
            let (u, v) = instance.edge(e);
            WitnessEdge { u, v, halves: h }
        })
        .collect();
    OptValue { halves: total, witness }
}

fn ordered(a: VertexId, b: VertexId, halves: u8) -> WitnessEdge {
    if a < b {
        WitnessEdge { u: a, v: b, halves }
    } else {
        WitnessEdge { u: b, v: a, halves }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::random_instance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vid(i: u32) -> VertexId {
        VertexId(i)
    }

    fn in_order(n: usize, edges: &[(u32, u32)]) -> Instance {
        let order: Vec<_> = (0..n).map(VertexId::new).collect();
        Instance::from_deadline_order(n, edges.iter().map(|&(a, b)| (vid(a), vid(b))).collect(), &order, None).unwrap()
    }

    #[test]
    fn single_edge() {
        let inst = in_order(2, &[(0, 1)]);
        assert_eq!(opt_bipartite(&inst).unwrap().value(), 1.0);
        assert_eq!(opt_fractional_general(&inst).value(), 1.0);
    }

    #[test]
    fn path_of_three() {
        let inst = in_order(3, &[(0, 1), (1, 2)]);
        let opt = opt_bipartite(&inst).unwrap();
        assert_eq!(opt.value(), 1.0);
        assert!(opt.witness_is_feasible(&inst));
    }

    #[test]
    fn triangle_is_three_halves() {
        let inst = in_order(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(opt_bipartite(&inst).unwrap_err(), Error::NotBipartite);
        let opt = opt_fractional_general(&inst);
        assert_eq!(opt.halves, 3);
        assert!(!opt.is_integral());
        assert!(opt.witness_is_feasible(&inst));
        assert!(opt.witness.iter().all(|w| w.halves == 1));
    }

    #[test]
    fn empty_graph() {
        let inst = in_order(3, &[]);
        assert_eq!(opt_bipartite(&inst).unwrap().halves, 0);
        assert_eq!(opt_fractional_general(&inst).halves, 0);
    }

    // Simple augmenting-path matcher used as an oracle for Hopcroft–Karp.
    fn kuhn(inst: &Instance, side: &[bool]) -> usize {
        fn try_kuhn(v: usize, inst: &Instance, seen: &mut [bool], mate: &mut [Option<usize>]) -> bool {
            for nb in inst.neighbors(VertexId::new(v)) {
                let w = nb.vertex.index();
                if seen[w] {
                    continue;
                }
                seen[w] = true;
                if mate[w].is_none() || try_kuhn(mate[w].unwrap(), inst, seen, mate) {
                    mate[w] = Some(v);
                    return true;
                }
            }
            false
        }
        let n = inst.vertex_count();
        let mut mate = vec![None; n];
        let mut size = 0;
        for (v, &right) in side.iter().enumerate() {
            if !right {
                let mut seen = vec![false; n];
                if try_kuhn(v, inst, &mut seen, &mut mate) {
                    size += 1;
                }
            }
        }
        size
    }

    #[test]
    fn hopcroft_karp_matches_simple_augmenting_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.gen_range(2..=14);
            let p = rng.gen_range(0.1..0.7);
            let inst = random_instance(&mut rng, n, p, true);
            let side = inst.two_coloring().unwrap();
            let opt = opt_bipartite(&inst).unwrap();
            assert!(opt.witness_is_feasible(&inst));
            assert_eq!(opt.halves as usize, 2 * kuhn(&inst, &side));
            // LP integrality on bipartite graphs.
            assert_eq!(opt_fractional_general(&inst).halves, opt.halves);
        }
    }
}
