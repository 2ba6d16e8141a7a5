use std::collections::BTreeSet;

use proptest::prelude::*;

use stochlearn::analysis::{gibbs, nash_set, stationary_solve, zero_cost_stats};
use stochlearn::cycles::decompose_model;
use stochlearn::dynamics::build_pair;
use stochlearn::fixtures::random_potential_game;
use stochlearn::game::ProfileSpace;
use stochlearn::simulate::simulate;
use stochlearn::{Kernel, TableGame};

fn game() -> impl Strategy<Value = TableGame> {
    (any::<u64>(), 2usize..=4, 2usize..=3).prop_map(|(seed, p, a)| random_potential_game(seed, p, a))
}

fn temperature() -> impl Strategy<Value = f64> {
    (0.05f64..5.0).prop_map(|t| (t * 1000.0).round() / 1000.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rows_are_stochastic(g in game(), t in temperature()) {
        let (lll, ml) = build_pair(&g, t).unwrap();
        for m in [&lll, &ml] {
            for x in 0..m.len() {
                prop_assert!((m.row_sum(x) - 1.0).abs() < 1e-12);
                prop_assert!(m.stay_probability(x) >= 0.0);
                prop_assert!(m.moves(x).iter().all(|mv| mv.prob > 0.0 && mv.prob <= 1.0));
            }
        }
    }

    #[test]
    fn both_kernels_are_reversible_for_gibbs(g in game(), t in temperature()) {
        let pi = gibbs(&g, t).unwrap().probabilities;
        let (lll, ml) = build_pair(&g, t).unwrap();
        for m in [&lll, &ml] {
            for x in 0..m.len() {
                for mv in m.moves(x) {
                    let y = mv.target;
                    let lhs = pi[x] * m.prob(x, y);
                    let rhs = pi[y] * m.prob(y, x);
                    prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(rhs).max(1e-300), "{} {x}->{y}", m.kernel());
                }
            }
        }
    }

    #[test]
    fn metropolis_cost_is_the_potential_drop(g in game(), t in temperature()) {
        let (_, ml) = build_pair(&g, t).unwrap();
        let phi = ml.potential();
        for x in 0..ml.len() {
            for mv in ml.moves(x) {
                prop_assert_eq!(mv.cost, (phi[x] - phi[mv.target]).max(0.0));
            }
        }
    }

    #[test]
    fn stationary_matches_gibbs(g in game(), t in temperature()) {
        let exact = gibbs(&g, t).unwrap();
        let (lll, ml) = build_pair(&g, t).unwrap();
        for m in [&lll, &ml] {
            prop_assert!(stationary_solve(m).unwrap().total_variation(&exact) < 1e-8);
        }
    }

    #[test]
    fn zero_cost_path_lengths_are_ordered(g in game()) {
        let (lll, ml) = build_pair(&g, 1.0).unwrap();
        let ne = nash_set(&lll).unwrap();
        let zl = zero_cost_stats(&lll, &ne).unwrap();
        let zm = zero_cost_stats(&ml, &ne).unwrap();
        for x in 0..lll.len() {
            prop_assert!(zm.sigma[x] <= zl.sigma[x], "state {x}");
            prop_assert!(zl.xi[x] >= zl.sigma[x]);
            prop_assert!(zm.xi[x] >= zm.sigma[x]);
        }
        for &x in ne.indices() {
            prop_assert_eq!(zl.sigma[x], 0);
            prop_assert_eq!(zm.xi[x], 0);
        }
    }

    #[test]
    fn altitude_is_symmetric_and_bounded_by_potentials(g in game()) {
        let (lll, ml) = build_pair(&g, 1.0).unwrap();
        for m in [&lll, &ml] {
            let h = decompose_model(m).unwrap();
            let alt = h.altitudes().unwrap();
            let phi = m.potential();
            for x in 0..m.len() {
                for y in 0..m.len() {
                    prop_assert_eq!(alt.get(x, y), alt.get(y, x));
                    prop_assert!(alt.get(x, y) <= phi[x].min(phi[y]) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn partitions_refine_upward(g in game(), kernel in prop_oneof![Just(Kernel::LogLinear), Just(Kernel::Metropolis)]) {
        let (lll, ml) = build_pair(&g, 1.0).unwrap();
        let m = if kernel == Kernel::LogLinear { lll } else { ml };
        let h = decompose_model(&m).unwrap();
        prop_assert_eq!(h.partition(h.depth()), vec![(0..m.len()).collect::<Vec<_>>()]);
        for k in 0..=h.depth() {
            let part = h.partition(k);
            let covered: BTreeSet<usize> = part.iter().flatten().copied().collect();
            prop_assert_eq!(covered.len(), m.len());
            prop_assert_eq!(part.iter().map(Vec::len).sum::<usize>(), m.len());
            if k < h.depth() {
                let next = h.partition(k + 1);
                prop_assert!(next.len() < part.len());
                for set in &part {
                    prop_assert!(next.iter().any(|s| set.iter().all(|x| s.contains(x))));
                }
            }
        }
    }

    #[test]
    fn traces_are_reproducible(g in game(), seed in any::<u64>(), kernel in prop_oneof![Just(Kernel::LogLinear), Just(Kernel::Metropolis)]) {
        let a0 = vec![0; g.space().players()];
        let a = simulate(&g, kernel, 0.5, &a0, 200, seed).unwrap();
        let b = simulate(&g, kernel, 0.5, &a0, 200, seed).unwrap();
        prop_assert_eq!(a.to_csv_string(), b.to_csv_string());
    }

    #[test]
    fn profile_index_round_trips(sizes in prop::collection::vec(1usize..5, 1..5), pick in any::<u64>()) {
        let space = ProfileSpace::new(&sizes).unwrap();
        let k = (pick % space.len() as u64) as usize;
        let profile = space.profile(k);
        prop_assert_eq!(space.index(profile.actions()), k);
        prop_assert_eq!(profile.actions()[0], k % sizes[0]);
    }
}
