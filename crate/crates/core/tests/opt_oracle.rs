use fomatch_core::generate::random_instance;
use fomatch_core::{opt_bipartite, opt_fractional_general, Instance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Maximum fractional matching in halves, from the vertex description of the
/// fractional matching polytope: an optimal basic solution is a matching at
/// one plus vertex-disjoint odd cycles at one half. Subset DP over vertices.
fn brute_force_halves(inst: &Instance) -> u64 {
    let n = inst.vertex_count();
    let mut adj = vec![0u32; n];
    for &(u, v) in inst.edges() {
        adj[u.index()] |= 1 << v.index();
        adj[v.index()] |= 1 << u.index();
    }
    let full = 1usize << n;
    // path[mask][v]: a Hamiltonian path of `mask` from its lowest vertex to `v`.
    let mut path = vec![0u32; full];
    for s in 0..n {
        path[1 << s] |= 1 << s;
    }
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        for (v, &nbrs) in adj.iter().enumerate() {
            if path[mask] & (1 << v) == 0 {
                continue;
            }
            let mut next = nbrs as usize & !mask & !((1usize << (low + 1)) - 1);
            while next != 0 {
                let w = next.trailing_zeros() as usize;
                next &= next - 1;
                path[mask | (1 << w)] |= 1 << w;
            }
        }
    }
    let odd_cycle = |mask: usize| -> bool {
        let size = mask.count_ones();
        if size < 3 || size % 2 == 0 {
            return false;
        }
        let low = mask.trailing_zeros() as usize;
        path[mask] & adj[low] != 0
    };

    let mut best = vec![0u64; full];
    for mask in 1..full {
        let v = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << v);
        let mut value = best[rest];
        let mut nb = adj[v] as usize & rest;
        while nb != 0 {
            let w = nb.trailing_zeros() as usize;
            nb &= nb - 1;
            value = value.max(2 + best[rest & !(1 << w)]);
        }
        // Odd cycles through v, over submasks of the remaining vertices.
        let mut sub = rest;
        while sub != 0 {
            let cyc = sub | (1 << v);
            if odd_cycle(cyc) {
                value = value.max(cyc.count_ones() as u64 + best[mask & !cyc]);
            }
            sub = (sub - 1) & rest;
        }
        best[mask] = value;
    }
    best[full - 1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn fractional_opt_matches_polytope_enumeration(seed in any::<u64>(), n in 1usize..=10, p in 0.1f64..0.9) {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), n, p, false);
        let opt = opt_fractional_general(&inst);
        prop_assert_eq!(opt.halves, brute_force_halves(&inst));
        prop_assert!(opt.witness_is_feasible(&inst));
    }

    #[test]
    fn integral_and_fractional_agree_on_bipartite(seed in any::<u64>(), n in 1usize..=10, p in 0.1f64..0.9) {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), n, p, true);
        let int = opt_bipartite(&inst).unwrap();
        let frac = opt_fractional_general(&inst);
        prop_assert!(int.is_integral());
        prop_assert_eq!(int.halves, frac.halves);
        prop_assert_eq!(int.halves, brute_force_halves(&inst));
        prop_assert!(int.witness_is_feasible(&inst));
    }
}

#[test]
fn oracle_sanity() {
    use fomatch_core::VertexId;
    let v = VertexId::new;
    let order = [v(0), v(1), v(2), v(3), v(4)];
    let c5 = Instance::from_deadline_order(5, (0..5).map(|i| (v(i), v((i + 1) % 5))).collect(), &order, None).unwrap();
    assert_eq!(brute_force_halves(&c5), 5);
    let c4 = Instance::from_deadline_order(4, (0..4).map(|i| (v(i), v((i + 1) % 4))).collect(), &order[..4], None).unwrap();
    assert_eq!(brute_force_halves(&c4), 4);
}
