//! Property tests for the structural invariants: canonical-form closure,
//! counting-route equivalence, monotonicity under constraint removal and
//! variable-subset growth, estimator equivariance, and format round trips.

use proptest::prelude::*;

use phase_lab::color::Graph;
use phase_lab::csp::{
    count_solutions, enumerate_all_nogoods, induced_subproblem, Nogood, Problem,
};
use phase_lab::oracle::brute_force_count;
use phase_lab::stats;

/// A random small problem as (n, d, nogood picks), built by selecting
/// distinct indices into the full nogood universe.
fn small_problem() -> impl Strategy<Value = Problem> {
    (2usize..=6, 2usize..=3)
        .prop_flat_map(|(n, d)| {
            let universe = enumerate_all_nogoods(n, d);
            let max_m = universe.len().min(24);
            proptest::sample::subsequence(universe, 0..=max_m)
                .prop_map(move |nogoods| Problem::new(n, d, nogoods).unwrap())
        })
}

proptest! {
    /// Constructing a problem from any permutation of nogood endpoints
    /// yields an identical nogood set.
    #[test]
    fn canonical_form_closure(p in small_problem(), flips in proptest::collection::vec(any::<bool>(), 24)) {
        let swapped: Vec<Nogood> = p
            .nogoods()
            .iter()
            .zip(flips.iter().chain(std::iter::repeat(&false)))
            .map(|(g, flip)| {
                if *flip {
                    Nogood::new(g.var_j(), g.val_j(), g.var_i(), g.val_i()).unwrap()
                } else {
                    *g
                }
            })
            .collect();
        let rebuilt = Problem::new(p.n(), p.d(), swapped).unwrap();
        prop_assert_eq!(rebuilt, p);
    }

    /// Exhaustive enumeration, backtracking enumeration, and the
    /// is_consistent filter oracle all agree on the solution count.
    #[test]
    fn counting_routes_agree(p in small_problem()) {
        let exhaustive = count_solutions(&p, None);
        let backtrack = count_solutions(&p, Some(u64::MAX));
        prop_assert!(!exhaustive.capped && !backtrack.capped);
        prop_assert_eq!(exhaustive.count, backtrack.count);
        prop_assert_eq!(exhaustive.count, brute_force_count(&p));
    }

    /// Removing any nogood never decreases the solution count.
    #[test]
    fn removal_is_monotone(p in small_problem(), pick in any::<proptest::sample::Index>()) {
        prop_assume!(p.m() > 0);
        let base = count_solutions(&p, None).count;
        let removed = p.with_nogood_removed(pick.index(p.m()));
        prop_assert!(count_solutions(&removed, None).count >= base);
    }

    /// If a subset's induced subproblem is unsolvable, so is every
    /// superset's.
    #[test]
    fn subproblem_monotonicity(p in small_problem(), mask in any::<u8>(), extra in any::<u8>()) {
        let subset: Vec<usize> = (0..p.n()).filter(|v| mask & (1 << v) != 0).collect();
        let superset: Vec<usize> = (0..p.n())
            .filter(|v| (mask | extra) & (1 << v) != 0)
            .collect();
        let sub = induced_subproblem(&p, &subset).unwrap();
        if count_solutions(&sub.problem, Some(1)).count == 0 {
            let sup = induced_subproblem(&p, &superset).unwrap();
            prop_assert_eq!(count_solutions(&sup.problem, Some(1)).count, 0);
        }
    }

    /// Scaling every sample by c > 0 scales the median and both interval
    /// endpoints by c.
    #[test]
    fn median_ci_scale_equivariance(
        samples in proptest::collection::vec(0.0f64..1e6, 1..60),
        c in 0.001f64..1e3,
    ) {
        let (m, lo, hi) = stats::median_with_ci(&samples).unwrap();
        let scaled: Vec<f64> = samples.iter().map(|x| x * c).collect();
        let (m2, lo2, hi2) = stats::median_with_ci(&scaled).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs() + b.abs());
        prop_assert!(close(m2, m * c) && close(lo2, lo * c) && close(hi2, hi * c));
    }

    /// Successes and failures mirror to complementary fractions.
    #[test]
    fn fraction_complement(k in 0u64..500, extra in 0u64..500) {
        let n = k + extra;
        prop_assume!(n > 0);
        let a = stats::fraction_with_ci(k, n).unwrap();
        let b = stats::fraction_with_ci(n - k, n).unwrap();
        prop_assert!((a.f + b.f - 1.0).abs() < 1e-12);
    }

    /// Instance text serialization round-trips.
    #[test]
    fn problem_text_round_trip(p in small_problem()) {
        let text = p.to_text();
        prop_assert_eq!(Problem::from_text(&text).unwrap(), p);
    }

    /// Graph text serialization round-trips.
    #[test]
    fn graph_text_round_trip(
        n in 1usize..12,
        picks in proptest::collection::vec(any::<proptest::sample::Index>(), 0..20),
    ) {
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        let mut chosen: Vec<(usize, usize)> = picks
            .iter()
            .filter(|_| !edges.is_empty())
            .map(|i| edges[i.index(edges.len())])
            .collect();
        chosen.sort_unstable();
        chosen.dedup();
        let g = Graph::new(n, chosen).unwrap();
        let text = g.to_text();
        prop_assert_eq!(Graph::from_text(&text).unwrap(), g);
    }
}
