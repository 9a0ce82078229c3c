//! Problem generation: uniform generate-select with predicates,
//! hill-climbing toward target solvability or solution counts,
//! pre-specified-solution generation, and the homogeneous
//! (equal-nogoods-per-pair) contrast generator.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::csp::{
    count_solutions, enumerate_all_nogoods, is_solvable, Assignment, Nogood, Problem,
    ProblemParams, SolutionCount,
};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Default swap budget for the hill-climbing walks.
pub const DEFAULT_SWAP_BUDGET: u64 = 10_000;

/// Acceptance condition applied to generated problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Any,
    Solvable,
    Unsolvable,
    ExactlyKSolutions(u64),
    AtLeastKSolutions(u64),
}

/// Base generation procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenMethod {
    GenerateSelect,
    HillClimb,
    PrespecifiedSolution,
    Homogeneous,
}

/// Full description of one generation task.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GenSpec {
    pub params: ProblemParams,
    pub predicate: Predicate,
    pub method: GenMethod,
    pub max_attempts: u64,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        ProblemParams::new(self.params.n, self.params.d, self.params.m)?;
        if self.max_attempts == 0 {
            return Err(Error::invalid("max_attempts must be positive"));
        }
        match (self.method, self.predicate) {
            (GenMethod::PrespecifiedSolution, Predicate::Any | Predicate::Solvable) => {}
            (GenMethod::PrespecifiedSolution, _) => {
                return Err(Error::invalid(
                    "prespecified_solution guarantees a solution; predicate must be any or solvable",
                ))
            }
            (GenMethod::HillClimb, Predicate::Solvable | Predicate::Unsolvable) => {}
            (GenMethod::HillClimb, Predicate::ExactlyKSolutions(k)) if k >= 1 => {}
            (GenMethod::HillClimb, _) => {
                return Err(Error::invalid(
                    "hill_climb supports predicates solvable, unsolvable, or exactly_k (k >= 1)",
                ))
            }
            _ => {}
        }
        if self.method == GenMethod::Homogeneous {
            let pairs = self.params.pair_count();
            if pairs == 0 || !(self.params.m as u64).is_multiple_of(pairs) {
                return Err(Error::invalid(format!(
                    "homogeneous generation requires m divisible by C(n,2) = {pairs}"
                )));
            }
        }
        if let Predicate::ExactlyKSolutions(0) = self.predicate {
            // exactly zero solutions is the unsolvable predicate
            return Err(Error::invalid("use predicate unsolvable instead of exactly_k(0)"));
        }
        Ok(())
    }
}

/// A generated problem plus the bookkeeping needed to reproduce frequency
/// observations: candidates examined before acceptance and the solution
/// count when the predicate required computing one.
#[derive(Debug, Clone)]
pub struct GenResult {
    pub problem: Problem,
    pub attempts: u64,
    pub solution_count: Option<SolutionCount>,
}

/// Maps an index in [0, C(n,2) d^2) to a canonical nogood. Pair-major
/// layout; the exact bijection is arbitrary but fixed.
fn index_to_nogood(idx: u64, n: usize, d: usize) -> Nogood {
    let d2 = (d * d) as u64;
    let mut pair = idx / d2;
    let combo = (idx % d2) as usize;
    let mut var_i = 0usize;
    loop {
        let block = (n - 1 - var_i) as u64;
        if pair < block {
            break;
        }
        pair -= block;
        var_i += 1;
    }
    let var_j = var_i + 1 + pair as usize;
    Nogood::new(var_i, combo / d, var_j, combo % d).expect("distinct variables")
}

/// Draws `m` distinct nogoods uniformly without replacement from the full
/// universe.
pub fn generate_select(params: &ProblemParams, rng: &mut ChaCha8Rng) -> Problem {
    let universe = params.max_nogoods();
    let nogoods = rand::seq::index::sample(rng, universe as usize, params.m)
        .into_iter()
        .map(|idx| index_to_nogood(idx as u64, params.n, params.d))
        .collect();
    Problem::new(params.n, params.d, nogoods).expect("sampled nogoods are valid")
}

/// Picks a uniform random complete assignment, then draws `m` distinct
/// nogoods uniformly from those consistent with it. The returned assignment
/// is a solution of the returned problem by construction.
pub fn generate_prespecified_solution(
    params: &ProblemParams,
    rng: &mut ChaCha8Rng,
) -> Result<(Problem, Assignment)> {
    let universe = params.consistent_nogood_universe();
    if params.m as u64 > universe {
        return Err(Error::invalid(format!(
            "m = {} exceeds the {universe} nogoods consistent with a fixed solution",
            params.m
        )));
    }
    let solution: Vec<usize> = (0..params.n).map(|_| rng.random_range(0..params.d)).collect();
    let d = params.d;
    let d2m1 = (d * d - 1) as u64;
    let nogoods = rand::seq::index::sample(rng, universe as usize, params.m)
        .into_iter()
        .map(|raw| {
            let raw = raw as u64;
            let pair = raw / d2m1;
            let combo = (raw % d2m1) as usize;
            // recover (var_i, var_j) from the pair index, then skip the one
            // combo that matches the pre-specified solution
            let full_idx = pair * ((d * d) as u64); // any combo on this pair
            let g = index_to_nogood(full_idx, params.n, d);
            let forbidden = solution[g.var_i()] * d + solution[g.var_j()];
            let combo = if combo >= forbidden { combo + 1 } else { combo };
            Nogood::new(g.var_i(), combo / d, g.var_j(), combo % d).unwrap()
        })
        .collect();
    let problem = Problem::new(params.n, params.d, nogoods)?;
    Ok((problem, Assignment::complete(solution)))
}

/// For every variable pair independently, selects `per_pair` distinct
/// value-pair nogoods uniformly; total m = C(n,2) * per_pair.
pub fn generate_homogeneous(
    n: usize,
    d: usize,
    per_pair: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Problem> {
    if per_pair > d * d {
        return Err(Error::invalid(format!(
            "per_pair = {per_pair} exceeds d^2 = {}",
            d * d
        )));
    }
    let mut nogoods = Vec::new();
    for var_i in 0..n {
        for var_j in var_i + 1..n {
            for combo in rand::seq::index::sample(rng, d * d, per_pair) {
                nogoods.push(Nogood::new(var_i, combo / d, var_j, combo % d).unwrap());
            }
        }
    }
    Problem::new(n, d, nogoods)
}

/// Counts solutions with an adaptive cap: anything at or above `cap` is
/// irrelevant to the caller's argmin.
fn count_up_to(problem: &Problem, cap: Option<u64>) -> SolutionCount {
    count_solutions(problem, cap)
}

/// One removal step of the greedy walks: the present nogood whose removal
/// increases the solution count the least, ties broken uniformly.
/// Returns (index, new count, tied indices).
fn greedy_removal(problem: &Problem, rng: &mut ChaCha8Rng) -> (usize, u64, Vec<usize>) {
    let mut best: Option<u64> = None;
    let mut ties: Vec<usize> = Vec::new();
    for idx in 0..problem.m() {
        let candidate = problem.with_nogood_removed(idx);
        let cap = best.map(|b| b + 1);
        let c = count_up_to(&candidate, cap);
        if c.capped {
            continue; // at least best + 1: not a minimizer
        }
        match best {
            Some(b) if c.count > b => {}
            Some(b) if c.count == b => ties.push(idx),
            _ => {
                best = Some(c.count);
                ties.clear();
                ties.push(idx);
            }
        }
    }
    let chosen = ties[rng.random_range(0..ties.len())];
    (chosen, best.unwrap(), ties)
}

/// One record of a hill-climbing swap, for auditing the greedy choices.
#[derive(Debug, Clone)]
pub struct SwapStep {
    pub removed: Nogood,
    /// Solution count after the removal (the greedy minimum).
    pub removal_count: u64,
    /// All removal candidates tied at the minimum.
    pub removal_ties: Vec<Nogood>,
    pub added: Nogood,
    /// Solution count after the addition.
    pub count_after: u64,
}

/// Result of scanning addition candidates.
enum AdditionChoice {
    /// Candidate giving strictly fewer solutions than the pre-removal count.
    Decrease(Nogood, u64),
    /// No decreaser among the scanned third: the scanned candidate with the
    /// smallest count (the "slightly backwards step").
    Backwards(Nogood, u64),
    /// Nothing admissible at all (only possible with a floor).
    None,
}

/// Scans a uniformly sampled third of the absent nogoods (excluding
/// `skip`, the nogood just removed) for an addition. Accepts the first
/// candidate with `floor <= count < prev_count`; otherwise falls back to
/// the scanned candidate with the smallest count >= floor.
fn scan_addition(
    base: &Problem,
    prev_count: u64,
    floor: u64,
    skip: Nogood,
    rng: &mut ChaCha8Rng,
) -> AdditionChoice {
    let mut absent: Vec<Nogood> = enumerate_all_nogoods(base.n(), base.d())
        .into_iter()
        .filter(|g| *g != skip && !base.contains(g))
        .collect();
    absent.shuffle(rng);
    let scan_len = absent.len().div_ceil(3).max(1).min(absent.len());

    let mut fallback: Option<(u64, Vec<Nogood>)> = None;
    for &cand in &absent[..scan_len] {
        let candidate = base.with_nogood_added(cand);
        let cap = fallback.as_ref().map(|(b, _)| b + 1);
        let c = count_up_to(&candidate, cap);
        if c.capped {
            continue; // at least fallback + 1
        }
        if c.count >= floor && c.count < prev_count {
            return AdditionChoice::Decrease(cand, c.count);
        }
        if c.count < floor {
            continue; // overshoot below the floor: inadmissible
        }
        match &mut fallback {
            Some((b, ties)) if c.count == *b => ties.push(cand),
            Some((b, _)) if c.count > *b => {}
            _ => fallback = Some((c.count, vec![cand])),
        }
    }
    match fallback {
        Some((count, ties)) => {
            let cand = ties[rng.random_range(0..ties.len())];
            AdditionChoice::Backwards(cand, count)
        }
        None => AdditionChoice::None,
    }
}

fn draw_with_solvability(
    params: &ProblemParams,
    rng: &mut ChaCha8Rng,
    want_solvable: bool,
    budget: u64,
) -> Result<Problem> {
    for _ in 0..budget {
        let p = generate_select(params, rng);
        if is_solvable(&p) == want_solvable {
            return Ok(p);
        }
    }
    Err(Error::GenerationExhausted { attempts: budget })
}

/// From a random unsolvable m-nogood problem: remove uniformly random
/// nogoods until solvable, then add back the same number, each chosen
/// uniformly among absent nogoods that keep the problem solvable.
///
/// Restarts with a fresh unsolvable problem when no admissible addition
/// exists; errors after the internal restart budget.
pub fn hill_climb_solvable(params: &ProblemParams, rng: &mut ChaCha8Rng) -> Result<Problem> {
    const RESTARTS: u64 = 1_000;
    for _ in 0..RESTARTS {
        match hill_climb_solvable_once(params, rng)? {
            Some(p) => return Ok(p),
            None => continue,
        }
    }
    Err(Error::GenerationExhausted { attempts: RESTARTS })
}

/// Existence checks shared by the hill-climbing walks. A problem can only
/// be unsolvable with at least d^2 nogoods (each nogood rules out d^(n-2)
/// assignments), and every problem with more than C(n,2)(d^2-1) nogoods
/// has a fully blocked pair and is unsolvable.
fn check_mixed_solvability_possible(params: &ProblemParams) -> Result<()> {
    if (params.m as u64) < (params.d * params.d) as u64 || params.n < 2 {
        return Err(Error::invalid(format!(
            "no unsolvable problem exists with m = {} < d^2 = {}",
            params.m,
            params.d * params.d
        )));
    }
    if params.m as u64 > params.consistent_nogood_universe() {
        return Err(Error::invalid(format!(
            "every problem with m = {} > C(n,2)(d^2-1) = {} is unsolvable",
            params.m,
            params.consistent_nogood_universe()
        )));
    }
    Ok(())
}

/// Single pass of the solvable walk: `Ok(None)` means "no admissible
/// addition, restart".
fn hill_climb_solvable_once(
    params: &ProblemParams,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Problem>> {
    check_mixed_solvability_possible(params)?;
    let mut p = draw_with_solvability(params, rng, false, 1_000_000)?;
    let mut removed = 0usize;
    while !is_solvable(&p) {
        let idx = rng.random_range(0..p.m());
        p = p.with_nogood_removed(idx);
        removed += 1;
    }
    for _ in 0..removed {
        let mut absent: Vec<Nogood> = enumerate_all_nogoods(p.n(), p.d())
            .into_iter()
            .filter(|g| !p.contains(g))
            .collect();
        absent.shuffle(rng);
        let mut placed = false;
        for cand in absent {
            let candidate = p.with_nogood_added(cand);
            if is_solvable(&candidate) {
                p = candidate;
                placed = true;
                break;
            }
        }
        if !placed {
            return Ok(None);
        }
    }
    Ok(Some(p))
}

/// Greedy walk from a random solvable problem down to zero solutions at a
/// fixed nogood count, recording each swap.
///
/// Per iteration: remove the present nogood whose removal increases the
/// count the least, then add an absent nogood giving strictly fewer
/// solutions than before the removal; when none of the sampled third of
/// absent nogoods decreases, add the one that increased the count the
/// least and keep going.
pub fn hill_climb_unsolvable_traced(
    params: &ProblemParams,
    rng: &mut ChaCha8Rng,
    swap_budget: u64,
) -> Result<(Problem, Vec<SwapStep>)> {
    check_mixed_solvability_possible(params)?;
    let mut p = draw_with_solvability(params, rng, true, 1_000_000)?;
    let mut count = count_solutions(&p, None).count;
    let mut steps = Vec::new();
    for _ in 0..swap_budget {
        let prev_count = count;
        let (idx, removal_count, tie_idx) = greedy_removal(&p, rng);
        let removed = p.nogoods()[idx];
        let removal_ties = tie_idx.iter().map(|&i| p.nogoods()[i]).collect();
        let base = p.with_nogood_removed(idx);
        let (added, new_count) = match scan_addition(&base, prev_count, 0, removed, rng) {
            AdditionChoice::Decrease(g, c) | AdditionChoice::Backwards(g, c) => (g, c),
            AdditionChoice::None => unreachable!("floor 0 always admits a candidate"),
        };
        p = base.with_nogood_added(added);
        count = new_count;
        steps.push(SwapStep {
            removed,
            removal_count,
            removal_ties,
            added,
            count_after: count,
        });
        if count == 0 {
            return Ok((p, steps));
        }
    }
    Err(Error::SwapBudgetExhausted { budget: swap_budget })
}

/// [`hill_climb_unsolvable_traced`] without the trace.
pub fn hill_climb_unsolvable(
    params: &ProblemParams,
    rng: &mut ChaCha8Rng,
    swap_budget: u64,
) -> Result<Problem> {
    hill_climb_unsolvable_traced(params, rng, swap_budget).map(|(p, _)| p)
}

/// Same swap structure as the unsolvable walk but with a floor at `k`
/// solutions: swaps until the count is exactly `k`. The start problem must
/// already have at least `k` solutions.
pub fn hill_climb_to_k_solutions(
    start: &Problem,
    k: u64,
    rng: &mut ChaCha8Rng,
    swap_budget: u64,
) -> Result<Problem> {
    if k == 0 {
        return Err(Error::invalid("k must be positive; use hill_climb_unsolvable for k = 0"));
    }
    let mut count = count_solutions(start, None).count;
    if count < k {
        return Err(Error::invalid(format!(
            "start problem has {count} solutions, fewer than k = {k}"
        )));
    }
    if count == k {
        return Ok(start.clone());
    }
    if start.m() == 0 {
        return Err(Error::invalid("cannot swap nogoods on a problem with m = 0"));
    }
    let mut p = start.clone();
    for _ in 0..swap_budget {
        let prev_count = count;
        let (idx, _, _) = greedy_removal(&p, rng);
        let removed = p.nogoods()[idx];
        let base = p.with_nogood_removed(idx);
        let (added, new_count) = match scan_addition(&base, prev_count, k, removed, rng) {
            AdditionChoice::Decrease(g, c) | AdditionChoice::Backwards(g, c) => (g, c),
            // nothing scanned is admissible: re-adding the removed nogood
            // restores the previous count, which is always >= k
            AdditionChoice::None => (removed, prev_count),
        };
        p = base.with_nogood_added(added);
        count = new_count;
        if count == k {
            return Ok(p);
        }
    }
    Err(Error::SwapBudgetExhausted { budget: swap_budget })
}

fn predicate_holds(problem: &Problem, predicate: Predicate) -> (bool, Option<SolutionCount>) {
    match predicate {
        Predicate::Any => (true, None),
        Predicate::Solvable => {
            let c = count_solutions(problem, Some(1));
            (c.count >= 1, Some(c))
        }
        Predicate::Unsolvable => {
            let c = count_solutions(problem, Some(1));
            (c.count == 0, Some(c))
        }
        Predicate::ExactlyKSolutions(k) => {
            let c = count_solutions(problem, Some(k + 1));
            (!c.capped && c.count == k, Some(c))
        }
        Predicate::AtLeastKSolutions(k) => {
            let c = count_solutions(problem, Some(k));
            (c.count == k, Some(c))
        }
    }
}

/// Repeatedly applies the requested base method until the predicate holds or
/// the attempt budget is exhausted. The attempt count is preserved either
/// way: rejection frequencies are measurements.
pub fn generate_with_predicate(spec: &GenSpec) -> Result<GenResult> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let mut attempts: u64 = 0;
    while attempts < spec.max_attempts {
        attempts += 1;
        let candidate: Option<Problem> = match spec.method {
            GenMethod::GenerateSelect => Some(generate_select(&spec.params, &mut rng)),
            GenMethod::PrespecifiedSolution => {
                Some(generate_prespecified_solution(&spec.params, &mut rng)?.0)
            }
            GenMethod::Homogeneous => {
                let per_pair = spec.params.m / spec.params.pair_count() as usize;
                Some(generate_homogeneous(spec.params.n, spec.params.d, per_pair, &mut rng)?)
            }
            GenMethod::HillClimb => match spec.predicate {
                Predicate::Solvable => hill_climb_solvable_once(&spec.params, &mut rng)?,
                Predicate::Unsolvable => {
                    match hill_climb_unsolvable(&spec.params, &mut rng, DEFAULT_SWAP_BUDGET) {
                        Ok(p) => Some(p),
                        Err(Error::SwapBudgetExhausted { .. }) => None,
                        Err(e) => return Err(e),
                    }
                }
                Predicate::ExactlyKSolutions(k) => {
                    // start from a generate-select solvable problem with
                    // at least k solutions, then climb down to exactly k
                    let start = generate_select(&spec.params, &mut rng);
                    if count_solutions(&start, Some(k)).count < k {
                        None
                    } else {
                        match hill_climb_to_k_solutions(&start, k, &mut rng, DEFAULT_SWAP_BUDGET) {
                            Ok(p) => Some(p),
                            Err(Error::SwapBudgetExhausted { .. }) => None,
                            Err(e) => return Err(e),
                        }
                    }
                }
                _ => unreachable!("validated"),
            },
        };
        let Some(problem) = candidate else { continue };
        let (ok, solution_count) = predicate_holds(&problem, spec.predicate);
        if ok {
            return Ok(GenResult {
                problem,
                attempts,
                solution_count,
            });
        }
    }
    Err(Error::GenerationExhausted { attempts })
}
