//! Independent reference implementations used to cross-check the fast
//! paths. These deliberately share no code with the routines they verify:
//! straight enumeration, no pruning tricks, no heuristics.

use crate::csp::{induced_subproblem, is_consistent, Assignment, Problem};
use crate::color::Graph;

/// Counts solutions by filtering `is_consistent` over all d^n complete
/// assignments. Only usable at small scale.
pub fn brute_force_count(problem: &Problem) -> u64 {
    let n = problem.n();
    let d = problem.d();
    let space = problem
        .params()
        .assignment_space()
        .expect("assignment space overflows u64");
    let mut count = 0;
    let mut values = vec![0usize; n];
    for _ in 0..space {
        let assignment = Assignment::complete(values.clone());
        if is_consistent(problem, &assignment).unwrap() {
            count += 1;
        }
        for v in values.iter_mut() {
            *v += 1;
            if *v < d {
                break;
            }
            *v = 0;
        }
    }
    count
}

/// Solvability of every variable subset by independent per-subset checks,
/// no monotone pruning. Index = subset bitmask.
pub fn brute_force_lattice(problem: &Problem) -> Vec<bool> {
    let n = problem.n();
    assert!(n <= 16, "brute-force lattice limited to n <= 16");
    let mut solvable = Vec::with_capacity(1 << n);
    for mask in 0u32..(1 << n) {
        let vars: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
        let sub = induced_subproblem(problem, &vars).unwrap();
        solvable.push(brute_force_count(&sub.problem) > 0);
    }
    solvable
}

/// Minimal unsolvable variable subsets straight from the brute-force
/// lattice: unsolvable with every one-smaller subset solvable.
pub fn brute_force_mus(problem: &Problem) -> Vec<Vec<usize>> {
    let n = problem.n();
    let lattice = brute_force_lattice(problem);
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if lattice[mask as usize] {
            continue;
        }
        let minimal = (0..n)
            .filter(|&v| mask & (1 << v) != 0)
            .all(|v| lattice[(mask & !(1 << v)) as usize]);
        if minimal {
            out.push((0..n).filter(|&v| mask & (1 << v) != 0).collect());
        }
    }
    out
}

/// Plain depth-first 3-colorability check in node-index order, no
/// heuristic, no symmetry shortcut.
pub fn three_colorable(graph: &Graph) -> bool {
    let n = graph.node_count();
    if n == 0 {
        return true;
    }
    let adj = graph.adjacency();
    let mut colors: Vec<Option<usize>> = vec![None; n];
    fn extend(node: usize, n: usize, adj: &[Vec<usize>], colors: &mut Vec<Option<usize>>) -> bool {
        if node == n {
            return true;
        }
        for c in 0..3 {
            if adj[node].iter().all(|&nb| colors[nb] != Some(c)) {
                colors[node] = Some(c);
                if extend(node + 1, n, adj, colors) {
                    return true;
                }
                colors[node] = None;
            }
        }
        false
    }
    extend(0, n, &adj, &mut colors)
}
