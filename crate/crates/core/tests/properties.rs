//! Property tests: incremental bookkeeping against full recounts, the exact
//! triangle counter against brute force, and the algebraic identity chain of
//! the closed forms.

use contactnet::analytic::{
    self, MeasureConvention, PopulationParams, RateParams, SpatialParams,
};
use contactnet::graph::SimpleGraph;
use contactnet::graph_state::{DynamicState, FocusRule};
use contactnet::graph_stats::{count_triangles, summarize};
use contactnet::rng::rng_from_seed;
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Toggle(usize, usize),
    Migrate(usize, usize),
}

fn ops_strategy(n: usize, m: usize) -> impl Strategy<Value = Vec<Op>> {
    let op = prop_oneof![
        (0..n, 0..n).prop_map(|(u, v)| Op::Toggle(u, v)),
        (0..n, 0..m).prop_map(|(v, k)| Op::Migrate(v, k)),
    ];
    proptest::collection::vec(op, 0..250)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bookkeeping_matches_recount_after_any_op_sequence(
        seed in 0u64..1_000_000,
        ops in ops_strategy(15, 4),
    ) {
        let mut rng = rng_from_seed(seed);
        let mut state = DynamicState::new(15, 4, FocusRule::UniformIid, &[], &mut rng).unwrap();
        for op in ops {
            match op {
                Op::Toggle(u, v) if u != v => {
                    let present = state.has_edge(u as u32, v as u32);
                    state.toggle_edge(u as u32, v as u32, !present);
                }
                Op::Toggle(..) => {}
                Op::Migrate(v, k) => state.migrate(v as u32, k as u32),
            }
            prop_assert!(state.check_consistency().is_ok());
        }
    }

    #[test]
    fn triangle_counter_matches_brute_force(
        n in 1usize..=12,
        mask in proptest::collection::vec(any::<bool>(), 66),
    ) {
        let mut edges = Vec::new();
        let mut idx = 0;
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                if mask[idx] {
                    edges.push((u, v));
                }
                idx += 1;
            }
        }
        let graph = SimpleGraph::new(n, edges.clone()).unwrap();
        let set: std::collections::HashSet<_> = edges.iter().copied().collect();
        let mut brute = 0u64;
        for i in 0..n as u32 {
            for j in (i + 1)..n as u32 {
                for k in (j + 1)..n as u32 {
                    if set.contains(&(i, j)) && set.contains(&(i, k)) && set.contains(&(j, k)) {
                        brute += 1;
                    }
                }
            }
        }
        prop_assert_eq!(count_triangles(&graph), brute);

        let s = summarize(&graph, Some(2));
        prop_assert_eq!(s.degree_histogram.iter().sum::<u64>(), n as u64);
        prop_assert!((s.mean_degree - 2.0 * s.edge_count as f64 / n as f64).abs() < 1e-15);
        if n > 1 {
            prop_assert!((s.density - s.mean_degree / (n as f64 - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn analytic_identity_chain(
        rf in 0.05f64..5.0,
        rl in 0.05f64..5.0,
        n in 3usize..30_000,
        p_frac in 0.01f64..1.0,
    ) {
        let rates = RateParams::new(rf, rl, 1.0).unwrap();
        let p = (p_frac * n as f64).max(1.0);
        let pop = PopulationParams::from_local_pop(n, p).unwrap();

        // Exact logit inverts back to the finite-N mean degree.
        let d = analytic::mean_degree_fast(&rates, &pop).unwrap();
        if d < n as f64 - 1.0 {
            let psi_e = analytic::psi_exact(&rates, &pop).unwrap();
            let back = (n as f64 - 1.0) / (1.0 + (-psi_e).exp());
            prop_assert!((back - d).abs() <= 1e-9 * d.max(1.0));
        }

        // Ratio of the limits equals the slow/fast ratio.
        let fast = analytic::mean_degree_fast_limit(&rates, p).unwrap();
        let slow = analytic::slow_mean_degree_limit(&rates, p).unwrap();
        let ratio = analytic::slow_fast_ratio(&rates).unwrap();
        prop_assert!((slow - ratio * fast).abs() <= 1e-12 * fast.max(1.0));

        // The finite-N forms sit below their limits and converge upward.
        prop_assert!(d <= fast * (1.0 + 1e-12));
        let slow_fin = analytic::slow_mean_degree(&rates, &pop).unwrap();
        prop_assert!(slow_fin <= slow * (1.0 + 1e-12));
    }

    #[test]
    fn spatial_decomposition_invariant_to_convention(
        rf in 0.05f64..5.0,
        rl in 0.05f64..5.0,
        big_v in 0.1f64..1e6,
        frac in 1e-6f64..1.0,
    ) {
        let rates = RateParams::new(rf, rl, 0.0).unwrap();
        let spatial = SpatialParams::new(big_v, big_v * frac, None).unwrap();
        let totals: Vec<f64> = MeasureConvention::ALL
            .iter()
            .map(|&c| analytic::spatial_psi(&rates, &spatial, c).unwrap().total())
            .collect();
        prop_assert!((totals[0] - totals[1]).abs() < 1e-12 * totals[0].abs().max(1.0));
        prop_assert!((totals[0] - totals[2]).abs() < 1e-12 * totals[0].abs().max(1.0));
    }
}
