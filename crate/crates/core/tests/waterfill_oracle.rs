use fomatch_core::gain::{linear_gain, GainFunction};
use fomatch_core::generate::random_instance;
use fomatch_core::waterfill::WaterFilling;
use fomatch_core::{certify_duals, pour, run_waterfill};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pours `capacity` in steps of `dx`, always onto the single lowest level
/// below one. Returns the final levels and the gain collected by each
/// neighbor, integrated as a left Riemann sum.
fn discretized_pour(levels: &[f64], capacity: f64, dx: f64, gain: &impl GainFunction) -> (Vec<f64>, Vec<f64>) {
    let mut x = levels.to_vec();
    let mut collected = vec![0.0; x.len()];
    let steps = (capacity / dx).round() as u64;
    for _ in 0..steps {
        let mut best = usize::MAX;
        for (j, &l) in x.iter().enumerate() {
            if l + dx <= 1.0 + 1e-12 && (best == usize::MAX || l < x[best]) {
                best = j;
            }
        }
        if best == usize::MAX {
            break;
        }
        collected[best] += gain.value(x[best]) * dx;
        x[best] += dx;
    }
    (x, collected)
}

#[test]
fn closed_form_pour_matches_discretized_pouring() {
    let gain = linear_gain();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF00D);
    for case in 0..150 {
        let d = rng.gen_range(1..=6);
        // Levels on the dx grid keep the step count exact.
        let levels: Vec<f64> = (0..d).map(|_| rng.gen_range(0..=1_000_000) as f64 * 1e-6).collect();
        let capacity = rng.gen_range(0..=1_000_000) as f64 * 1e-6;
        let raises = pour(&levels, capacity).unwrap();
        let mut closed = levels.clone();
        let mut closed_gain = vec![0.0; d];
        for r in &raises {
            closed[r.index] = r.to;
            closed_gain[r.index] = gain.integral_between(r.from, r.to);
        }
        let (disc, disc_gain) = discretized_pour(&levels, capacity, 1e-6, &gain);
        for j in 0..d {
            assert!((closed[j] - disc[j]).abs() < 1e-4, "case {case}: level {j}: {} vs {}", closed[j], disc[j]);
            assert!((closed_gain[j] - disc_gain[j]).abs() < 1e-4, "case {case}: gain {j}");
        }
    }
}

#[test]
fn pour_edge_cases() {
    assert!(pour(&[], 0.5).unwrap().is_empty());
    assert!(pour(&[0.2, 0.3], 0.0).unwrap().is_empty());
    let r = pour(&[1.0, 1.0], 0.7).unwrap();
    assert!(r.is_empty());
    let r = pour(&[0.0, 0.0], 1.0).unwrap();
    assert_eq!(r.len(), 2);
    assert!((r[0].to - 0.5).abs() < 1e-15);
    assert!(pour(&[0.5], 1.5).is_err());
    assert!(pour(&[1.5], 0.5).is_err());
}

fn instance_strategy() -> impl Strategy<Value = (u64, usize, f64, bool)> {
    (any::<u64>(), 1usize..=12, 0.1f64..0.9, any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn water_filling_invariants((seed, n, p, bipartite) in instance_strategy()) {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), n, p, bipartite);
        let out = run_waterfill(&inst, linear_gain());

        // Levels are the sums of incident edge fractions and stay in [0, 1].
        let mut sums = vec![0.0; n];
        for (e, &(u, v)) in inst.edges().iter().enumerate() {
            prop_assert!(out.edge_fraction[e] >= 0.0);
            sums[u.index()] += out.edge_fraction[e];
            sums[v.index()] += out.edge_fraction[e];
        }
        for (v, &sum) in sums.iter().enumerate() {
            prop_assert!((sum - out.level[v]).abs() < 1e-12);
            prop_assert!(out.level[v] <= 1.0 + 1e-12);
            prop_assert!(out.passive[v] <= out.level[v] + 1e-15);
        }
        // Conservation of the shared gain.
        prop_assert!((out.primal() - out.dual()).abs() < 1e-9);

        // Levels never decrease and every raised neighbor ends at the waterline.
        let mut level = vec![0.0f64; n];
        for rec in &out.pours {
            prop_assert!(rec.passive_level >= level[rec.active.index()] - 1e-15);
            for &(w, before) in &rec.available {
                prop_assert!((before - level[w.index()]).abs() < 1e-12);
                let after = if before < rec.waterline { rec.waterline } else { before };
                prop_assert!(after >= before);
                level[w.index()] = after;
            }
            level[rec.active.index()] = rec.final_level;
        }

        let cert = certify_duals(&out, &inst, fomatch_core::constants::two_minus_sqrt2()).unwrap();
        prop_assert!(cert.pass, "{:?}", cert);
    }

    #[test]
    fn pour_log_is_optional((seed, n, p, bipartite) in instance_strategy()) {
        let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), n, p, bipartite);
        let full = WaterFilling::new(linear_gain()).run(&inst);
        let lean = WaterFilling::new(linear_gain()).log_pours(false).run(&inst);
        prop_assert_eq!(&full.level, &lean.level);
        prop_assert_eq!(&full.alpha, &lean.alpha);
        prop_assert!(lean.pours.is_empty());
    }
}
