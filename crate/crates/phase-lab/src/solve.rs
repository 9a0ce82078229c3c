//! Instrumented backtracking search over binary CSPs.
//!
//! Both solvers charge one node per value-assignment event, use look-back
//! consistency checks only (no propagation), and draw every random choice
//! from a per-run seed, so any run can be replayed exactly.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::csp::{Assignment, Problem};
use crate::seed::{derive_seed, rng_from_seed};
use crate::stats;

/// How a search run ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchStatus {
    Solution(Assignment),
    Unsolvable,
    /// Stopped at the node cap with the question unresolved.
    Censored,
}

impl SearchStatus {
    pub fn is_solution(&self) -> bool {
        matches!(self, SearchStatus::Solution(_))
    }
    pub fn is_censored(&self) -> bool {
        matches!(self, SearchStatus::Censored)
    }
}

/// Outcome of one instrumented run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    pub nodes: u64,
    pub seed: u64,
}

/// Which search algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Chronological,
    Dynamic,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Chronological => "chronological",
            SolverKind::Dynamic => "dynamic",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chronological" => Ok(SolverKind::Chronological),
            "dynamic" => Ok(SolverKind::Dynamic),
            other => Err(crate::Error::invalid(format!("unknown solver `{other}`"))),
        }
    }
}

pub fn solve(problem: &Problem, kind: SolverKind, seed: u64, node_cap: Option<u64>) -> SearchOutcome {
    match kind {
        SolverKind::Chronological => chronological_backtrack(problem, seed, node_cap),
        SolverKind::Dynamic => dynamic_backtrack(problem, seed, node_cap),
    }
}

/// Depth-first search over one random variable permutation per run, with a
/// fresh random value order each time a variable is entered. A node is
/// counted for every value assignment, including ones that immediately fail
/// the look-back check; backtracking returns to the most recent variable
/// with untried values.
pub fn chronological_backtrack(
    problem: &Problem,
    seed: u64,
    node_cap: Option<u64>,
) -> SearchOutcome {
    let mut rng = rng_from_seed(seed);
    let n = problem.n();
    let d = problem.d();
    if n == 0 {
        return SearchOutcome {
            status: SearchStatus::Solution(Assignment::empty(0)),
            nodes: 0,
            seed,
        };
    }
    let table = crate::csp::ConflictTable::new(problem);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);

    struct Frame {
        values: Vec<usize>,
        next: usize,
    }
    let fresh_frame = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut values: Vec<usize> = (0..d).collect();
        values.shuffle(rng);
        Frame { values, next: 0 }
    };

    let mut assigned: Vec<usize> = vec![0; n];
    let mut stack: Vec<Frame> = vec![fresh_frame(&mut rng)];
    let mut nodes: u64 = 0;
    loop {
        let depth = stack.len() - 1;
        let frame = stack.last_mut().expect("nonempty stack");
        if frame.next == d {
            stack.pop();
            if stack.is_empty() {
                return SearchOutcome {
                    status: SearchStatus::Unsolvable,
                    nodes,
                    seed,
                };
            }
            continue;
        }
        let v = frame.values[frame.next];
        frame.next += 1;

        nodes += 1;
        if node_cap.is_some_and(|cap| nodes >= cap) {
            return SearchOutcome {
                status: SearchStatus::Censored,
                nodes,
                seed,
            };
        }
        let var = perm[depth];
        assigned[var] = v;
        let ok = (0..depth).all(|i| !table.forbidden(var, v, perm[i], assigned[perm[i]]));
        if !ok {
            continue;
        }
        if depth + 1 == n {
            let mut solution = Assignment::empty(n);
            for &var in &perm {
                solution.set(var, assigned[var]);
            }
            return SearchOutcome {
                status: SearchStatus::Solution(solution),
                nodes,
                seed,
            };
        }
        stack.push(fresh_frame(&mut rng));
    }
}

/// Elimination explanation: the set of currently assigned variables whose
/// values rule a value out. An empty set means the value is ruled out
/// unconditionally.
type Explanation = u128;

/// Read-only view of the dynamic backtracking state, for instrumentation.
pub struct DynamicStateView<'a> {
    /// Current value per variable.
    pub values: &'a [Option<usize>],
    /// `eliminations[var][val]`: optional explanation bitmask over variables.
    pub eliminations: &'a [Vec<Option<u128>>],
}

/// Dynamic backtracking: on a value wipeout, only the most recently
/// assigned variable in the union of the eliminating explanations is
/// unassigned; all other assignments are retained.
///
/// Explanations are variable bitmasks, so problems are limited to 128
/// variables.
pub fn dynamic_backtrack(problem: &Problem, seed: u64, node_cap: Option<u64>) -> SearchOutcome {
    dynamic_backtrack_instrumented(problem, seed, node_cap, &mut |_| {})
}

/// [`dynamic_backtrack`] with a state observer invoked after every
/// assignment and every culprit resolution. Used by tests that audit the
/// soundness of the elimination explanations.
pub fn dynamic_backtrack_instrumented(
    problem: &Problem,
    seed: u64,
    node_cap: Option<u64>,
    inspect: &mut dyn FnMut(&DynamicStateView),
) -> SearchOutcome {
    let mut rng = rng_from_seed(seed);
    let n = problem.n();
    let d = problem.d();
    assert!(n <= 128, "dynamic backtracking limited to 128 variables");
    if n == 0 {
        return SearchOutcome {
            status: SearchStatus::Solution(Assignment::empty(0)),
            nodes: 0,
            seed,
        };
    }
    let table = crate::csp::ConflictTable::new(problem);

    let mut values: Vec<Option<usize>> = vec![None; n];
    // assignment order, oldest first
    let mut order: Vec<usize> = Vec::new();
    let mut eliminations: Vec<Vec<Option<Explanation>>> = vec![vec![None; d]; n];
    let mut nodes: u64 = 0;

    loop {
        if order.len() == n {
            let mut solution = Assignment::empty(n);
            for (var, v) in values.iter().enumerate() {
                solution.set(var, v.expect("complete"));
            }
            return SearchOutcome {
                status: SearchStatus::Solution(solution),
                nodes,
                seed,
            };
        }
        // next variable: uniform among unassigned
        let unassigned: Vec<usize> = (0..n).filter(|&v| values[v].is_none()).collect();
        let x = unassigned[rng.random_range(0..unassigned.len())];

        // lazily eliminate values of x that conflict with the current
        // assignment, recording the first conflicting variable as the
        // explanation
        for v in 0..d {
            if eliminations[x][v].is_some() {
                continue;
            }
            for &y in &order {
                if table.forbidden(x, v, y, values[y].expect("assigned")) {
                    eliminations[x][v] = Some(1u128 << y);
                    break;
                }
            }
        }
        let live: Vec<usize> = (0..d).filter(|&v| eliminations[x][v].is_none()).collect();
        if !live.is_empty() {
            let v = live[rng.random_range(0..live.len())];
            nodes += 1;
            if node_cap.is_some_and(|cap| nodes >= cap) {
                return SearchOutcome {
                    status: SearchStatus::Censored,
                    nodes,
                    seed,
                };
            }
            values[x] = Some(v);
            order.push(x);
            inspect(&DynamicStateView {
                values: &values,
                eliminations: &eliminations,
            });
            continue;
        }

        // wipeout: every value of x carries an explanation
        let union: Explanation = (0..d)
            .map(|v| eliminations[x][v].expect("wiped out"))
            .fold(0, |a, b| a | b);
        if union == 0 {
            return SearchOutcome {
                status: SearchStatus::Unsolvable,
                nodes,
                seed,
            };
        }
        // culprit: most recently assigned variable in the union
        let pos = order
            .iter()
            .rposition(|&y| union & (1u128 << y) != 0)
            .expect("explanations reference assigned variables");
        let culprit = order.remove(pos);
        let culprit_value = values[culprit].take().expect("culprit was assigned");
        eliminations[culprit][culprit_value] = Some(union & !(1u128 << culprit));
        // every explanation mentioning the culprit is now stale
        let culprit_bit = 1u128 << culprit;
        for var_elims in eliminations.iter_mut() {
            for e in var_elims.iter_mut() {
                if e.is_some_and(|mask| mask & culprit_bit != 0) {
                    *e = None;
                }
            }
        }
        // the culprit's own new explanation never mentions itself, but the
        // sweep above must not clear explanations on other values of the
        // culprit that reference still-assigned variables; those are kept.
        inspect(&DynamicStateView {
            values: &values,
            eliminations: &eliminations,
        });
    }
}

/// Aggregate applied to the per-run node counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Median,
    Mean,
}

/// The solved-k-times protocol: run `runs` times with seeds derived from
/// `(base_seed, run_index)`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct RunProtocol {
    pub runs: u32,
    pub base_seed: u64,
    pub aggregate: Aggregate,
}

/// All runs of one problem under a protocol, with summary node counts.
#[derive(Debug, Clone)]
pub struct ProtocolOutcome {
    pub raw: Vec<SearchOutcome>,
    pub aggregate_nodes: f64,
    pub median_nodes: f64,
    pub mean_nodes: f64,
    pub min_nodes: u64,
    pub max_nodes: u64,
    pub censored_runs: u32,
}

/// Executes the protocol. Censored runs contribute their node count (the
/// cap) to the aggregates and are reported, never dropped.
pub fn run_protocol(
    problem: &Problem,
    kind: SolverKind,
    protocol: &RunProtocol,
    node_cap: Option<u64>,
) -> ProtocolOutcome {
    assert!(protocol.runs >= 1, "protocol needs at least one run");
    let raw: Vec<SearchOutcome> = (0..protocol.runs)
        .map(|i| {
            let seed = derive_seed(&[protocol.base_seed, u64::from(i)]);
            solve(problem, kind, seed, node_cap)
        })
        .collect();
    let counts: Vec<f64> = raw.iter().map(|o| o.nodes as f64).collect();
    let median_nodes = stats::median(&counts).expect("runs >= 1");
    let mean_nodes = counts.iter().sum::<f64>() / counts.len() as f64;
    let censored_runs = raw.iter().filter(|o| o.status.is_censored()).count() as u32;
    ProtocolOutcome {
        aggregate_nodes: match protocol.aggregate {
            Aggregate::Median => median_nodes,
            Aggregate::Mean => mean_nodes,
        },
        median_nodes,
        mean_nodes,
        min_nodes: raw.iter().map(|o| o.nodes).min().unwrap_or(0),
        max_nodes: raw.iter().map(|o| o.nodes).max().unwrap_or(0),
        censored_runs,
        raw,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{count_solutions, is_consistent, Nogood, Problem};
    use crate::generate::generate_select;
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
    fn free_problem_costs_n_nodes() {
        let p = Problem::new(10, 3, vec![]).unwrap();
        for seed in 0..20 {
            let c = chronological_backtrack(&p, seed, None);
            assert!(c.status.is_solution());
            assert_eq!(c.nodes, 10);
            let d = dynamic_backtrack(&p, seed, None);
            assert!(d.status.is_solution());
            assert_eq!(d.nodes, 10);
        }
    }

    #[test]
    fn chronological_blocked_pair_costs_twelve() {
        // n = 2, d = 3, all 9 nogoods: 3 root values plus 3 failed child
        // tries under each root = 12 assignments, any ordering
        let p = pair_blocked(2, 3);
        for seed in 0..20 {
            let out = chronological_backtrack(&p, seed, None);
            assert_eq!(out.status, SearchStatus::Unsolvable);
            assert_eq!(out.nodes, 12);
        }
    }

    #[test]
    fn dynamic_blocked_pair_unsolvable() {
        let p = pair_blocked(2, 3);
        for seed in 0..20 {
            let out = dynamic_backtrack(&p, seed, None);
            assert_eq!(out.status, SearchStatus::Unsolvable, "seed {seed}");
            assert!(out.nodes >= 3, "at least d nodes, got {}", out.nodes);
        }
    }

    #[test]
    fn solutions_are_sound_and_status_complete() {
        let mut rng = rng_from_seed(1234);
        for trial in 0..400 {
            let m = 20 + (trial % 12) * 10;
            let p = generate_select(&crate::csp::ProblemParams::new(8, 3, m).unwrap(), &mut rng);
            let solvable = count_solutions(&p, Some(1)).count == 1;
            for (kind, seed) in [(SolverKind::Chronological, trial as u64), (SolverKind::Dynamic, trial as u64 + 7)] {
                let out = solve(&p, kind, seed, None);
                match out.status {
                    SearchStatus::Solution(a) => {
                        assert!(solvable, "{kind:?} found a solution in an unsolvable problem");
                        assert!(a.is_complete());
                        assert!(is_consistent(&p, &a).unwrap());
                        assert!(out.nodes >= 8);
                    }
                    SearchStatus::Unsolvable => {
                        assert!(!solvable, "{kind:?} claimed unsolvable on a solvable problem");
                        assert!(out.nodes >= 3);
                    }
                    SearchStatus::Censored => panic!("no cap was set"),
                }
            }
        }
    }

    #[test]
    fn node_cap_censors() {
        let mut rng = rng_from_seed(5);
        let p = loop {
            let p = generate_select(&crate::csp::ProblemParams::new(10, 3, 90).unwrap(), &mut rng);
            if count_solutions(&p, Some(1)).count == 0 {
                break p;
            }
        };
        let out = chronological_backtrack(&p, 0, Some(5));
        assert_eq!(out.status, SearchStatus::Censored);
        assert_eq!(out.nodes, 5);
    }

    #[test]
    fn explanation_soundness_small_problems() {
        // every explanation E on value v of variable x must restrict to an
        // unsolvable subproblem: {x -> v} plus the current values of E
        // admits no completion
        let mut rng = rng_from_seed(99);
        for trial in 0..60 {
            let p = generate_select(&crate::csp::ProblemParams::new(6, 3, 30).unwrap(), &mut rng);
            let mut violations = Vec::new();
            let _ = dynamic_backtrack_instrumented(&p, trial, None, &mut |view| {
                for x in 0..p.n() {
                    for v in 0..p.d() {
                        let Some(mask) = view.eliminations[x][v] else { continue };
                        let mut fixed = vec![None; p.n()];
                        fixed[x] = Some(v);
                        for y in 0..p.n() {
                            if mask & (1 << y) != 0 {
                                assert!(view.values[y].is_some(), "explanation references unassigned var");
                                fixed[y] = view.values[y];
                            }
                        }
                        // exhaustive completion check
                        let free: Vec<usize> =
                            (0..p.n()).filter(|&i| fixed[i].is_none()).collect();
                        let mut any = false;
                        let mut counter = vec![0usize; free.len()];
                        'outer: loop {
                            let mut values = fixed.clone();
                            for (slot, &var) in free.iter().enumerate() {
                                values[var] = Some(counter[slot]);
                            }
                            let asg = crate::csp::Assignment::from_pairs(
                                p.n(),
                                &values
                                    .iter()
                                    .enumerate()
                                    .filter_map(|(i, v)| v.map(|v| (i, v)))
                                    .collect::<Vec<_>>(),
                            );
                            if is_consistent(&p, &asg).unwrap() && asg.is_complete() {
                                any = true;
                                break;
                            }
                            // odometer
                            let mut pos = 0;
                            loop {
                                if pos == free.len() {
                                    break 'outer;
                                }
                                counter[pos] += 1;
                                if counter[pos] < p.d() {
                                    break;
                                }
                                counter[pos] = 0;
                                pos += 1;
                            }
                        }
                        if any {
                            violations.push((x, v, mask));
                        }
                    }
                }
            });
            assert!(violations.is_empty(), "unsound explanations: {violations:?}");
        }
    }

    #[test]
    fn protocol_is_deterministic_and_aggregates() {
        let p = Problem::new(10, 3, vec![]).unwrap();
        let proto = RunProtocol {
            runs: 10,
            base_seed: 77,
            aggregate: Aggregate::Median,
        };
        let a = run_protocol(&p, SolverKind::Dynamic, &proto, None);
        let b = run_protocol(&p, SolverKind::Dynamic, &proto, None);
        assert_eq!(a.raw, b.raw);
        assert_eq!(a.median_nodes, 10.0);
        assert_eq!(a.mean_nodes, 10.0);
        assert_eq!(a.censored_runs, 0);

        let single = RunProtocol {
            runs: 1,
            base_seed: 3,
            aggregate: Aggregate::Median,
        };
        let one = run_protocol(&p, SolverKind::Chronological, &single, None);
        assert_eq!(one.aggregate_nodes, one.raw[0].nodes as f64);
    }

    #[test]
    fn solver_status_matches_oracle_mixed_band() {
        let mut rng = rng_from_seed(2024);
        let mut solvable_seen = false;
        let mut unsolvable_seen = false;
        for trial in 0..200u64 {
            let p = generate_select(&crate::csp::ProblemParams::new(10, 3, 80).unwrap(), &mut rng);
            let oracle = count_solutions(&p, Some(1)).count == 1;
            solvable_seen |= oracle;
            unsolvable_seen |= !oracle;
            assert_eq!(
                dynamic_backtrack(&p, trial, None).status.is_solution(),
                oracle
            );
            assert_eq!(
                chronological_backtrack(&p, trial, None).status.is_solution(),
                oracle
            );
        }
        assert!(solvable_seen && unsolvable_seen, "band should mix statuses");
    }
}
