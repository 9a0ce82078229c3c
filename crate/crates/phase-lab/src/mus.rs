//! Minimal unsolvable subproblems.
//!
//! A variable subset is a minimal unsolvable subproblem (MUS) when its
//! induced subproblem is unsolvable but every proper subset's is solvable.
//! Solvability over subsets is monotone, so the full lattice is computed
//! bottom-up by popcount with superset marking: once a subset is known
//! unsolvable, its supersets never get searched.

use std::collections::BTreeMap;

use crate::csp::{count_solutions, induced_subproblem, Problem};
use crate::error::{Error, Result};
use crate::stats;

/// Hard limit on lattice construction; 2^n entries are stored densely.
pub const MAX_LATTICE_VARS: usize = 20;

/// Solvability of every variable subset of a problem, indexed by bitmask.
#[derive(Debug, Clone)]
pub struct SolvabilityLattice {
    n: usize,
    solvable: Vec<bool>,
}

impl SolvabilityLattice {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_solvable_mask(&self, mask: u32) -> bool {
        self.solvable[mask as usize]
    }

    pub fn entries(&self) -> &[bool] {
        &self.solvable
    }
}

/// Computes induced-subproblem solvability for every subset of variables,
/// with monotone pruning: a subset with an unsolvable immediate subset is
/// marked unsolvable without search.
pub fn build_lattice(problem: &Problem) -> Result<SolvabilityLattice> {
    let n = problem.n();
    if n > MAX_LATTICE_VARS {
        return Err(Error::invalid(format!(
            "lattice construction limited to {MAX_LATTICE_VARS} variables, got {n}"
        )));
    }
    let size = 1usize << n;
    let mut solvable = vec![true; size];

    // masks ordered by popcount so immediate subsets are always resolved
    let mut by_popcount: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    for mask in 0..size as u32 {
        by_popcount[mask.count_ones() as usize].push(mask);
    }

    for masks in &by_popcount {
        for &mask in masks {
            let inherited_unsolvable = (0..n).any(|v| {
                mask & (1 << v) != 0 && !solvable[(mask & !(1 << v)) as usize]
            });
            if inherited_unsolvable {
                solvable[mask as usize] = false;
                continue;
            }
            let vars: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
            let sub = induced_subproblem(problem, &vars)?;
            solvable[mask as usize] = count_solutions(&sub.problem, Some(1)).count >= 1;
        }
    }
    Ok(SolvabilityLattice { n, solvable })
}

/// All minimal unsolvable subproblems of one problem, with size statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MusReport {
    /// Each MUS as a sorted variable list, ordered by (size, variables).
    pub mus_list: Vec<Vec<usize>>,
    pub count: usize,
    /// Smallest MUS size; `None` when the problem is solvable.
    pub smallest_size: Option<usize>,
    pub size_histogram: BTreeMap<usize, usize>,
}

/// Enumerates the minimal elements of the lattice's unsolvable up-set.
pub fn enumerate_mus(problem: &Problem) -> Result<MusReport> {
    let lattice = build_lattice(problem)?;
    let n = lattice.n();
    let mut mus_list: Vec<Vec<usize>> = Vec::new();
    for mask in 0..(1u32 << n) {
        if lattice.is_solvable_mask(mask) {
            continue;
        }
        let minimal = (0..n)
            .filter(|&v| mask & (1 << v) != 0)
            .all(|v| lattice.is_solvable_mask(mask & !(1 << v)));
        if minimal {
            mus_list.push((0..n).filter(|&v| mask & (1 << v) != 0).collect());
        }
    }
    mus_list.sort_by_key(|vars| (vars.len(), vars.clone()));
    let mut size_histogram = BTreeMap::new();
    for vars in &mus_list {
        *size_histogram.entry(vars.len()).or_insert(0) += 1;
    }
    Ok(MusReport {
        count: mus_list.len(),
        smallest_size: mus_list.first().map(Vec::len),
        size_histogram,
        mus_list,
    })
}

/// Per-problem record feeding the sweep statistics.
#[derive(Debug, Clone, Copy)]
pub struct MusProblemRecord {
    pub m: usize,
    pub mus_count: usize,
    pub smallest_size: usize,
    /// Per-problem search cost (median nodes), when available.
    pub cost: Option<f64>,
}

/// Statistics of one nogood-count group.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MusGroupStats {
    pub m: usize,
    pub n_problems: usize,
    pub count_mean: f64,
    pub count_median: f64,
    pub count_min: usize,
    pub count_max: usize,
    pub count_stddev: f64,
    pub smallest_mean: f64,
    pub smallest_median: f64,
    pub smallest_min: usize,
    pub smallest_max: usize,
    pub smallest_stddev: f64,
}

/// Mean cost of the problems sharing one smallest-MUS size.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CostBySize {
    pub size: usize,
    pub n_problems: usize,
    pub mean_cost: f64,
    pub ci: (f64, f64),
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct MusSweepSummary {
    pub groups: Vec<MusGroupStats>,
    /// Only populated when costs were supplied.
    pub cost_by_smallest: Vec<CostBySize>,
    pub cost_size_correlation: Option<f64>,
    pub cost_count_correlation: Option<f64>,
}

/// Groups unsolvable-problem records by nogood count and summarizes MUS
/// count and smallest-MUS size; with costs, adds mean cost per smallest
/// size and the rank correlations between cost and both structure values.
pub fn mus_sweep_stats(records: &[MusProblemRecord]) -> Result<MusSweepSummary> {
    if records.is_empty() {
        return Err(Error::invalid("mus_sweep_stats needs at least one record"));
    }
    if let Some(r) = records.iter().find(|r| r.mus_count == 0) {
        return Err(Error::invalid(format!(
            "record at m = {} is solvable (0 MUSes); sweep expects unsolvable problems",
            r.m
        )));
    }

    let mut by_m: BTreeMap<usize, Vec<&MusProblemRecord>> = BTreeMap::new();
    for r in records {
        by_m.entry(r.m).or_default().push(r);
    }
    let mut groups = Vec::new();
    for (m, rs) in &by_m {
        let counts: Vec<f64> = rs.iter().map(|r| r.mus_count as f64).collect();
        let sizes: Vec<f64> = rs.iter().map(|r| r.smallest_size as f64).collect();
        let c = stats::summarize(&counts)?;
        let s = stats::summarize(&sizes)?;
        groups.push(MusGroupStats {
            m: *m,
            n_problems: rs.len(),
            count_mean: c.mean,
            count_median: c.median,
            count_min: rs.iter().map(|r| r.mus_count).min().unwrap(),
            count_max: rs.iter().map(|r| r.mus_count).max().unwrap(),
            count_stddev: c.stddev,
            smallest_mean: s.mean,
            smallest_median: s.median,
            smallest_min: rs.iter().map(|r| r.smallest_size).min().unwrap(),
            smallest_max: rs.iter().map(|r| r.smallest_size).max().unwrap(),
            smallest_stddev: s.stddev,
        });
    }

    let with_cost: Vec<&MusProblemRecord> =
        records.iter().filter(|r| r.cost.is_some()).collect();
    let mut cost_by_smallest = Vec::new();
    let mut cost_size_correlation = None;
    let mut cost_count_correlation = None;
    if !with_cost.is_empty() {
        let mut by_size: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for r in &with_cost {
            by_size
                .entry(r.smallest_size)
                .or_default()
                .push(r.cost.unwrap());
        }
        for (size, costs) in &by_size {
            let (mean, lo, hi) = stats::mean_with_ci(costs)?;
            cost_by_smallest.push(CostBySize {
                size: *size,
                n_problems: costs.len(),
                mean_cost: mean,
                ci: (lo, hi),
            });
        }
        let costs: Vec<f64> = with_cost.iter().map(|r| r.cost.unwrap()).collect();
        let sizes: Vec<f64> = with_cost.iter().map(|r| r.smallest_size as f64).collect();
        let counts: Vec<f64> = with_cost.iter().map(|r| r.mus_count as f64).collect();
        cost_size_correlation = stats::spearman(&costs, &sizes);
        cost_count_correlation = stats::spearman(&costs, &counts);
    }

    Ok(MusSweepSummary {
        groups,
        cost_by_smallest,
        cost_size_correlation,
        cost_count_correlation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{enumerate_all_nogoods, Nogood};
    use crate::generate::generate_select;
    use crate::oracle::{brute_force_lattice, brute_force_mus};
    use crate::seed::rng_from_seed;

    fn pair_blocked(n: usize, d: usize) -> Problem {
        let mut nogoods = Vec::new();
        for a in 0..d {
            for b in 0..d {
                nogoods.push(Nogood::new(0, a, 1, b).unwrap());
            }
        }
        Problem::new(n, d, nogoods).unwrap()
    }

    #[test]
    fn lattice_free_problem_all_solvable() {
        let p = Problem::new(6, 3, vec![]).unwrap();
        let lat = build_lattice(&p).unwrap();
        assert!(lat.entries().iter().all(|&s| s));
    }

    #[test]
    fn lattice_blocked_pair() {
        // n = 3, 9 nogoods on pair (0, 1): unsolvable subsets are exactly
        // {0,1} and {0,1,2}
        let p = pair_blocked(3, 3);
        let lat = build_lattice(&p).unwrap();
        for mask in 0u32..8 {
            let expect_solvable = mask & 0b11 != 0b11;
            assert_eq!(lat.is_solvable_mask(mask), expect_solvable, "mask {mask:b}");
        }
    }

    #[test]
    fn lattice_full_nogood_set() {
        // full nogood set at n = 4: exactly the subsets of size >= 2 are
        // unsolvable
        let p = Problem::new(4, 3, enumerate_all_nogoods(4, 3)).unwrap();
        let lat = build_lattice(&p).unwrap();
        for mask in 0u32..16 {
            assert_eq!(lat.is_solvable_mask(mask), mask.count_ones() < 2);
        }
    }

    #[test]
    fn lattice_rejects_large_n() {
        let p = Problem::new(21, 2, vec![]).unwrap();
        assert!(build_lattice(&p).is_err());
    }

    #[test]
    fn mus_examples() {
        let solvable = Problem::new(5, 3, vec![]).unwrap();
        let r = enumerate_mus(&solvable).unwrap();
        assert_eq!(r.count, 0);
        assert_eq!(r.smallest_size, None);

        let p = pair_blocked(3, 3);
        let r = enumerate_mus(&p).unwrap();
        assert_eq!(r.mus_list, vec![vec![0, 1]]);
        assert_eq!(r.smallest_size, Some(2));

        // full nogood set at n = 10: one MUS per variable pair
        let p = Problem::new(10, 3, enumerate_all_nogoods(10, 3)).unwrap();
        let r = enumerate_mus(&p).unwrap();
        assert_eq!(r.count, 45);
        assert!(r.mus_list.iter().all(|v| v.len() == 2));
        assert_eq!(r.size_histogram.get(&2), Some(&45));
    }

    #[test]
    fn pruned_lattice_matches_brute_force() {
        let mut rng = rng_from_seed(8);
        let params = crate::csp::ProblemParams::new(8, 3, 75).unwrap();
        let mut checked = 0;
        while checked < 30 {
            let p = generate_select(&params, &mut rng);
            if count_solutions(&p, Some(1)).count != 0 {
                continue;
            }
            checked += 1;
            let lat = build_lattice(&p).unwrap();
            assert_eq!(lat.entries(), &brute_force_lattice(&p)[..]);
            let report = enumerate_mus(&p).unwrap();
            let mut brute = brute_force_mus(&p);
            brute.sort_by_key(|vars| (vars.len(), vars.clone()));
            assert_eq!(report.mus_list, brute);
        }
    }

    #[test]
    fn mus_minimality_and_covering() {
        let mut rng = rng_from_seed(18);
        let params = crate::csp::ProblemParams::new(8, 3, 80).unwrap();
        let mut seen_unsolvable = 0;
        for _ in 0..200 {
            let p = generate_select(&params, &mut rng);
            let report = enumerate_mus(&p).unwrap();
            let unsolvable = count_solutions(&p, Some(1)).count == 0;
            assert_eq!(report.count >= 1, unsolvable);
            if !unsolvable {
                continue;
            }
            seen_unsolvable += 1;
            for mus in &report.mus_list {
                assert!(mus.len() >= 2 && mus.len() <= p.n());
                // unsolvable as a whole, solvable under every single removal
                let sub = induced_subproblem(&p, mus).unwrap();
                assert_eq!(count_solutions(&sub.problem, Some(1)).count, 0);
                for drop in mus {
                    let rest: Vec<usize> =
                        mus.iter().copied().filter(|v| v != drop).collect();
                    let sub = induced_subproblem(&p, &rest).unwrap();
                    assert!(count_solutions(&sub.problem, Some(1)).count >= 1);
                }
            }
            if seen_unsolvable >= 20 {
                break;
            }
        }
        assert!(seen_unsolvable >= 10, "need unsolvable cases to audit");
    }

    #[test]
    fn lattice_monotone() {
        let mut rng = rng_from_seed(28);
        let params = crate::csp::ProblemParams::new(7, 3, 60).unwrap();
        for _ in 0..20 {
            let p = generate_select(&params, &mut rng);
            let lat = build_lattice(&p).unwrap();
            for mask in 0u32..(1 << 7) {
                if !lat.is_solvable_mask(mask) {
                    for v in 0..7 {
                        if mask & (1 << v) == 0 {
                            assert!(
                                !lat.is_solvable_mask(mask | (1 << v)),
                                "superset of unsolvable {mask:b} is solvable"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sweep_stats_groups_and_correlation() {
        let records = vec![
            MusProblemRecord { m: 60, mus_count: 2, smallest_size: 4, cost: Some(100.0) },
            MusProblemRecord { m: 60, mus_count: 3, smallest_size: 5, cost: Some(160.0) },
            MusProblemRecord { m: 60, mus_count: 1, smallest_size: 6, cost: Some(220.0) },
            MusProblemRecord { m: 90, mus_count: 7, smallest_size: 5, cost: Some(140.0) },
        ];
        let summary = mus_sweep_stats(&records).unwrap();
        assert_eq!(summary.groups.len(), 2);
        assert_eq!(summary.groups[0].m, 60);
        assert_eq!(summary.groups[0].n_problems, 3);
        assert_eq!(summary.groups[0].count_min, 1);
        assert_eq!(summary.groups[0].count_max, 3);
        assert_eq!(summary.cost_by_smallest.len(), 3);
        assert!(summary.cost_size_correlation.unwrap() > 0.0);

        assert!(mus_sweep_stats(&[]).is_err());
        let solvable = [MusProblemRecord { m: 1, mus_count: 0, smallest_size: 0, cost: None }];
        assert!(mus_sweep_stats(&solvable).is_err());
    }
}
