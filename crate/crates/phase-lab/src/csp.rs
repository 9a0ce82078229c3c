//! Binary-CSP data model, consistency semantics, and exact solution counting.
//!
//! A problem is `n` variables with a uniform domain of `d` values and a set
//! of `m` binary nogoods, each forbidding one (value, value) combination on
//! one variable pair. Searching means finding a complete assignment hitting
//! no nogood.

use std::fmt::Write as _;
use std::path::Path;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Shape of a problem: variable count `n`, domain size `d`, nogood count `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ProblemParams {
    pub n: usize,
    pub d: usize,
    pub m: usize,
}

impl ProblemParams {
    pub fn new(n: usize, d: usize, m: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("domain size d must be at least 1"));
        }
        let p = ProblemParams { n, d, m };
        if (m as u64) > p.max_nogoods() {
            return Err(Error::invalid(format!(
                "m = {m} exceeds the {} possible nogoods for n = {n}, d = {d}",
                p.max_nogoods()
            )));
        }
        Ok(p)
    }

    /// Number of unordered variable pairs, C(n, 2).
    pub fn pair_count(&self) -> u64 {
        let n = self.n as u64;
        n * n.saturating_sub(1) / 2
    }

    /// Size of the full nogood universe, C(n, 2) * d^2.
    pub fn max_nogoods(&self) -> u64 {
        self.pair_count() * (self.d as u64) * (self.d as u64)
    }

    /// Nogoods consistent with any one fixed complete assignment:
    /// C(n, 2) * (d^2 - 1).
    pub fn consistent_nogood_universe(&self) -> u64 {
        self.pair_count() * ((self.d as u64) * (self.d as u64) - 1)
    }

    /// d^n when it fits in a u64.
    pub fn assignment_space(&self) -> Option<u64> {
        let mut acc: u64 = 1;
        for _ in 0..self.n {
            acc = acc.checked_mul(self.d as u64)?;
        }
        Some(acc)
    }
}

/// A forbidden pair of variable-value assignments, kept in canonical form
/// with `var_i < var_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Nogood {
    var_i: usize,
    val_i: usize,
    var_j: usize,
    val_j: usize,
}

impl Nogood {
    /// Builds a canonical nogood, swapping the two (variable, value) pairs
    /// if needed. The two variables must be distinct.
    pub fn new(var_a: usize, val_a: usize, var_b: usize, val_b: usize) -> Result<Self> {
        if var_a == var_b {
            return Err(Error::invalid(format!(
                "nogood endpoints must be distinct variables (got {var_a} twice)"
            )));
        }
        if var_a < var_b {
            Ok(Nogood {
                var_i: var_a,
                val_i: val_a,
                var_j: var_b,
                val_j: val_b,
            })
        } else {
            Ok(Nogood {
                var_i: var_b,
                val_i: val_b,
                var_j: var_a,
                val_j: val_a,
            })
        }
    }

    pub fn var_i(&self) -> usize {
        self.var_i
    }
    pub fn val_i(&self) -> usize {
        self.val_i
    }
    pub fn var_j(&self) -> usize {
        self.var_j
    }
    pub fn val_j(&self) -> usize {
        self.val_j
    }

    fn in_bounds(&self, n: usize, d: usize) -> bool {
        self.var_j < n && self.val_i < d && self.val_j < d
    }
}

/// An immutable binary CSP: params plus a sorted, duplicate-free nogood set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    params: ProblemParams,
    nogoods: Vec<Nogood>,
}

impl Problem {
    /// Builds a problem from any collection of canonical nogoods; sorts,
    /// rejects duplicates and out-of-bounds indices, and sets `m` to the
    /// nogood count.
    pub fn new(n: usize, d: usize, mut nogoods: Vec<Nogood>) -> Result<Self> {
        let params = ProblemParams::new(n, d, nogoods.len())?;
        nogoods.sort_unstable();
        for w in nogoods.windows(2) {
            if w[0] == w[1] {
                return Err(Error::invalid("duplicate nogood"));
            }
        }
        for g in &nogoods {
            if !g.in_bounds(n, d) {
                return Err(Error::invalid(format!(
                    "nogood ({} {} {} {}) out of bounds for n = {n}, d = {d}",
                    g.var_i, g.val_i, g.var_j, g.val_j
                )));
            }
        }
        Ok(Problem { params, nogoods })
    }

    pub fn params(&self) -> ProblemParams {
        self.params
    }
    pub fn n(&self) -> usize {
        self.params.n
    }
    pub fn d(&self) -> usize {
        self.params.d
    }
    pub fn m(&self) -> usize {
        self.params.m
    }
    pub fn nogoods(&self) -> &[Nogood] {
        &self.nogoods
    }

    pub fn contains(&self, g: &Nogood) -> bool {
        self.nogoods.binary_search(g).is_ok()
    }

    /// Clone with the nogood at `idx` (sorted order) removed.
    pub fn with_nogood_removed(&self, idx: usize) -> Problem {
        let mut nogoods = Vec::with_capacity(self.nogoods.len() - 1);
        nogoods.extend_from_slice(&self.nogoods[..idx]);
        nogoods.extend_from_slice(&self.nogoods[idx + 1..]);
        Problem {
            params: ProblemParams {
                m: nogoods.len(),
                ..self.params
            },
            nogoods,
        }
    }

    /// Clone with `g` inserted (must not already be present).
    pub fn with_nogood_added(&self, g: Nogood) -> Problem {
        debug_assert!(g.in_bounds(self.n(), self.d()));
        let pos = match self.nogoods.binary_search(&g) {
            Ok(_) => panic!("nogood already present"),
            Err(pos) => pos,
        };
        let mut nogoods = Vec::with_capacity(self.nogoods.len() + 1);
        nogoods.extend_from_slice(&self.nogoods[..pos]);
        nogoods.push(g);
        nogoods.extend_from_slice(&self.nogoods[pos..]);
        Problem {
            params: ProblemParams {
                m: nogoods.len(),
                ..self.params
            },
            nogoods,
        }
    }

    /// Serializes to the line-oriented instance format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "csp {} {} {}", self.n(), self.d(), self.m());
        for g in &self.nogoods {
            let _ = writeln!(out, "{} {} {} {}", g.var_i, g.val_i, g.var_j, g.val_j);
        }
        out
    }

    /// Parses the instance format, rejecting duplicates, non-canonical or
    /// unsorted nogood lines, and header/count mismatches.
    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_text_named(text, "<string>")
    }

    fn from_text_named(text: &str, name: &str) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: name.to_string(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "csp" {
            return Err(parse_err(1, format!("expected `csp <n> <d> <m>`, got `{header}`")));
        }
        let parse_num = |line: usize, s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| parse_err(line, format!("not a non-negative integer: `{s}`")))
        };
        let n = parse_num(1, fields[1])?;
        let d = parse_num(1, fields[2])?;
        let m = parse_num(1, fields[3])?;

        let mut nogoods: Vec<Nogood> = Vec::with_capacity(m);
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(parse_err(lineno, format!("expected 4 fields, got {}", f.len())));
            }
            let vi = parse_num(lineno, f[0])?;
            let a = parse_num(lineno, f[1])?;
            let vj = parse_num(lineno, f[2])?;
            let b = parse_num(lineno, f[3])?;
            if vi >= vj {
                return Err(parse_err(
                    lineno,
                    format!("non-canonical nogood: requires var_i < var_j, got {vi} {vj}"),
                ));
            }
            let g = Nogood::new(vi, a, vj, b).map_err(|e| parse_err(lineno, e.to_string()))?;
            if !g.in_bounds(n, d) {
                return Err(parse_err(lineno, "nogood out of bounds".into()));
            }
            if let Some(prev) = nogoods.last() {
                if *prev == g {
                    return Err(parse_err(lineno, "duplicate nogood".into()));
                }
                if *prev > g {
                    return Err(parse_err(lineno, "nogoods not in sorted order".into()));
                }
            }
            nogoods.push(g);
        }
        if nogoods.len() != m {
            return Err(parse_err(
                1,
                format!("header declares m = {m} but {} nogood lines found", nogoods.len()),
            ));
        }
        Problem::new(n, d, nogoods)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text_named(&text, &path.display().to_string())
    }
}

/// A (possibly partial) assignment of values to variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Assignment {
            values: vec![None; n],
        }
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut a = Assignment::empty(n);
        for &(var, val) in pairs {
            a.values[var] = Some(val);
        }
        a
    }

    /// A complete assignment from a value-per-variable vector.
    pub fn complete(values: Vec<usize>) -> Self {
        Assignment {
            values: values.into_iter().map(Some).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn get(&self, var: usize) -> Option<usize> {
        self.values.get(var).copied().flatten()
    }
    pub fn set(&mut self, var: usize, val: usize) {
        self.values[var] = Some(val);
    }
    pub fn unset(&mut self, var: usize) {
        self.values[var] = None;
    }
    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }
    pub fn assigned_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

/// Result of a solution count, possibly stopped early at a cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SolutionCount {
    pub count: u64,
    pub capped: bool,
}

/// True iff no nogood has both its (variable, value) pairs present in the
/// assignment. Unassigned variables violate nothing.
pub fn is_consistent(problem: &Problem, assignment: &Assignment) -> Result<bool> {
    if assignment.len() != problem.n() {
        return Err(Error::invalid(format!(
            "assignment covers {} variables, problem has {}",
            assignment.len(),
            problem.n()
        )));
    }
    for (var, val) in assignment.values.iter().enumerate() {
        if let Some(v) = val {
            if *v >= problem.d() {
                return Err(Error::invalid(format!(
                    "value {v} for variable {var} outside domain of size {}",
                    problem.d()
                )));
            }
        }
    }
    Ok(consistent_unchecked(problem, &assignment.values))
}

fn consistent_unchecked(problem: &Problem, values: &[Option<usize>]) -> bool {
    !problem.nogoods.iter().any(|g| {
        values[g.var_i] == Some(g.val_i) && values[g.var_j] == Some(g.val_j)
    })
}

/// Dense conflict lookup used by the counting and search routines:
/// `forbidden(x, a, y, b)` in O(1), symmetric in the two pairs.
pub(crate) struct ConflictTable {
    n: usize,
    d: usize,
    table: Vec<bool>,
    /// For each variable, the sorted list of lower-indexed variables it
    /// shares at least one nogood with.
    earlier: Vec<Vec<usize>>,
}

impl ConflictTable {
    pub fn new(problem: &Problem) -> Self {
        let n = problem.n();
        let d = problem.d();
        let mut table = vec![false; n * n * d * d];
        let mut earlier: Vec<Vec<usize>> = vec![Vec::new(); n];
        for g in problem.nogoods() {
            let (i, a, j, b) = (g.var_i, g.val_i, g.var_j, g.val_j);
            table[((i * n + j) * d + a) * d + b] = true;
            table[((j * n + i) * d + b) * d + a] = true;
            if earlier[j].last() != Some(&i) {
                earlier[j].push(i);
            }
        }
        ConflictTable { n, d, table, earlier }
    }

    #[inline]
    pub fn forbidden(&self, x: usize, a: usize, y: usize, b: usize) -> bool {
        self.table[((x * self.n + y) * self.d + a) * self.d + b]
    }

    /// Lower-indexed variables constrained against `x` (build order is the
    /// sorted nogood list, so each list is sorted and duplicate-free).
    pub fn earlier_constrained(&self, x: usize) -> &[usize] {
        &self.earlier[x]
    }
}

/// Counts complete consistent assignments. With a cap, counting stops as
/// soon as `cap` solutions are seen and the result is flagged `capped`.
///
/// Uncapped counts over at most 10^6 assignments use plain exhaustive
/// enumeration; everything else uses backtracking enumeration (identical
/// results, checked against each other in the test suite).
pub fn count_solutions(problem: &Problem, cap: Option<u64>) -> SolutionCount {
    assert!(cap != Some(0), "cap must be positive");
    match (cap, problem.params().assignment_space()) {
        (None, Some(space)) if space <= 1_000_000 => count_exhaustive(problem, None),
        _ => count_backtrack(problem, cap),
    }
}

/// `count_solutions(problem, cap = 1).count >= 1`.
pub fn is_solvable(problem: &Problem) -> bool {
    count_solutions(problem, Some(1)).count >= 1
}

/// Odometer enumeration of all d^n assignments with a direct nogood scan
/// per assignment. Only sensible for small spaces.
pub(crate) fn count_exhaustive(problem: &Problem, cap: Option<u64>) -> SolutionCount {
    let n = problem.n();
    let d = problem.d();
    let mut values: Vec<Option<usize>> = vec![Some(0); n];
    let mut count = 0u64;
    loop {
        if consistent_unchecked(problem, &values) {
            count += 1;
            if cap == Some(count) {
                return SolutionCount { count, capped: true };
            }
        }
        // advance odometer
        let mut pos = 0;
        loop {
            if pos == n {
                return SolutionCount { count, capped: false };
            }
            let v = values[pos].unwrap() + 1;
            if v < d {
                values[pos] = Some(v);
                break;
            }
            values[pos] = Some(0);
            pos += 1;
        }
    }
}

/// Backtracking enumeration in fixed variable order with look-back checks
/// against earlier constrained variables only.
pub(crate) fn count_backtrack(problem: &Problem, cap: Option<u64>) -> SolutionCount {
    let n = problem.n();
    let d = problem.d();
    if n == 0 {
        // one empty assignment, vacuously consistent
        return SolutionCount { count: 1, capped: cap == Some(1) };
    }
    let table = ConflictTable::new(problem);
    let mut vals = vec![0usize; n]; // vals[k]: next value to try at depth k
    let mut assigned = vec![0usize; n];
    let mut count = 0u64;
    let mut depth = 0usize;
    loop {
        if vals[depth] == d {
            // exhausted this variable
            vals[depth] = 0;
            if depth == 0 {
                return SolutionCount { count, capped: false };
            }
            depth -= 1;
            vals[depth] += 1;
            continue;
        }
        let v = vals[depth];
        let ok = table
            .earlier_constrained(depth)
            .iter()
            .all(|&y| !table.forbidden(depth, v, y, assigned[y]));
        if !ok {
            vals[depth] += 1;
            continue;
        }
        assigned[depth] = v;
        if depth + 1 == n {
            count += 1;
            if cap == Some(count) {
                return SolutionCount { count, capped: true };
            }
            vals[depth] += 1;
        } else {
            depth += 1;
        }
    }
}

fn ln_choose(a: f64, k: f64) -> f64 {
    ln_gamma(a + 1.0) - ln_gamma(k + 1.0) - ln_gamma(a - k + 1.0)
}

/// Log of the survival ratio C(C(n,2)(d^2-1), m) / C(C(n,2) d^2, m).
fn ln_ratio(n: usize, d: usize, m: f64) -> f64 {
    let p = ProblemParams { n, d, m: 0 };
    let full = p.max_nogoods() as f64;
    let consistent = p.consistent_nogood_universe() as f64;
    ln_choose(consistent, m) - ln_choose(full, m)
}

fn ln_expected(n: usize, d: usize, m: f64) -> f64 {
    (n as f64) * (d as f64).ln() + ln_ratio(n, d, m)
}

/// Expected number of solutions of a uniformly drawn m-nogood problem:
/// `d^n * C(C(n,2)(d^2-1), m) / C(C(n,2) d^2, m)`, evaluated in log space.
///
/// Returns exactly 0 when `m` exceeds the consistent-nogood universe.
pub fn expected_solution_count(n: usize, d: usize, m: u64) -> Result<f64> {
    let p = ProblemParams::new(n, d, 0)?;
    if m > p.max_nogoods() {
        return Err(Error::invalid(format!(
            "m = {m} exceeds the {} possible nogoods",
            p.max_nogoods()
        )));
    }
    if m > p.consistent_nogood_universe() {
        return Ok(0.0);
    }
    let dn = (d as f64).powi(n as i32);
    Ok(dn * ln_ratio(n, d, m as f64).exp())
}

/// The real m* at which the expected solution count (binomials continued
/// via the log-gamma function) equals one, located by bisection to 1e-3.
pub fn predicted_crossover(n: usize, d: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("predicted_crossover requires n >= 2"));
    }
    if d < 2 {
        return Err(Error::invalid("predicted_crossover requires d >= 2"));
    }
    let p = ProblemParams { n, d, m: 0 };
    let hi = p.consistent_nogood_universe() as f64;
    if ln_expected(n, d, hi) >= 0.0 {
        return Ok(hi);
    }
    let (mut lo, mut hi) = (0.0f64, hi);
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if ln_expected(n, d, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// All C(n,2) * d^2 canonical nogoods in lexicographic
/// (var_i, val_i, var_j, val_j) order.
pub fn enumerate_all_nogoods(n: usize, d: usize) -> Vec<Nogood> {
    let mut out = Vec::new();
    for var_i in 0..n {
        for val_i in 0..d {
            for var_j in var_i + 1..n {
                for val_j in 0..d {
                    out.push(Nogood {
                        var_i,
                        val_i,
                        var_j,
                        val_j,
                    });
                }
            }
        }
    }
    out
}

/// A subproblem induced by a variable subset, reindexed to 0..k, with the
/// mapping back to the original variable indices.
#[derive(Debug, Clone)]
pub struct InducedSubproblem {
    pub problem: Problem,
    /// `original_vars[new_index] = original_index`, ascending.
    pub original_vars: Vec<usize>,
}

/// Restricts a problem to `vars`, keeping exactly the nogoods with both
/// endpoints inside the subset.
pub fn induced_subproblem(problem: &Problem, vars: &[usize]) -> Result<InducedSubproblem> {
    let mut original: Vec<usize> = vars.to_vec();
    original.sort_unstable();
    original.dedup();
    if let Some(&max) = original.last() {
        if max >= problem.n() {
            return Err(Error::invalid(format!(
                "variable {max} out of range for n = {}",
                problem.n()
            )));
        }
    }
    let mut new_index = vec![usize::MAX; problem.n()];
    for (new, &old) in original.iter().enumerate() {
        new_index[old] = new;
    }
    let nogoods = problem
        .nogoods()
        .iter()
        .filter(|g| new_index[g.var_i] != usize::MAX && new_index[g.var_j] != usize::MAX)
        .map(|g| Nogood {
            var_i: new_index[g.var_i],
            val_i: g.val_i,
            var_j: new_index[g.var_j],
            val_j: g.val_j,
        })
        .collect();
    Ok(InducedSubproblem {
        problem: Problem::new(original.len(), problem.d(), nogoods)?,
        original_vars: original,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(n: usize, d: usize, specs: &[(usize, usize, usize, usize)]) -> Problem {
        let nogoods = specs
            .iter()
            .map(|&(a, b, c, e)| Nogood::new(a, b, c, e).unwrap())
            .collect();
        Problem::new(n, d, nogoods).unwrap()
    }

    #[test]
    fn nogood_canonicalizes() {
        let g = Nogood::new(3, 1, 0, 2).unwrap();
        assert_eq!((g.var_i(), g.val_i(), g.var_j(), g.val_j()), (0, 2, 3, 1));
        assert!(Nogood::new(2, 0, 2, 1).is_err());
    }

    #[test]
    fn problem_rejects_duplicates_and_bounds() {
        let g = Nogood::new(0, 0, 1, 0).unwrap();
        assert!(Problem::new(2, 2, vec![g, g]).is_err());
        let oob = Nogood::new(0, 0, 5, 0).unwrap();
        assert!(Problem::new(2, 2, vec![oob]).is_err());
        let badval = Nogood::new(0, 3, 1, 0).unwrap();
        assert!(Problem::new(2, 2, vec![badval]).is_err());
    }

    #[test]
    fn is_consistent_examples() {
        let p = problem(2, 2, &[(0, 0, 1, 0)]);
        assert!(is_consistent(&p, &Assignment::empty(2)).unwrap());
        assert!(!is_consistent(&p, &Assignment::from_pairs(2, &[(0, 0), (1, 0)])).unwrap());
        assert!(is_consistent(&p, &Assignment::from_pairs(2, &[(0, 0)])).unwrap());
        // out of bounds value is an input error
        assert!(is_consistent(&p, &Assignment::from_pairs(2, &[(0, 7)])).is_err());
    }

    #[test]
    fn count_solutions_examples() {
        let free = problem(10, 3, &[]);
        assert_eq!(count_solutions(&free, None).count, 59049);

        let all4 = problem(
            2,
            2,
            &[(0, 0, 1, 0), (0, 0, 1, 1), (0, 1, 1, 0), (0, 1, 1, 1)],
        );
        assert_eq!(count_solutions(&all4, None).count, 0);

        let three = problem(2, 2, &[(0, 0, 1, 0), (0, 0, 1, 1), (0, 1, 1, 0)]);
        let c = count_solutions(&three, None);
        assert_eq!((c.count, c.capped), (1, false));
    }

    #[test]
    fn count_cap_semantics() {
        let free = problem(10, 3, &[]);
        let c = count_solutions(&free, Some(7));
        assert_eq!((c.count, c.capped), (7, true));
        assert!(is_solvable(&free));
    }

    #[test]
    fn exhaustive_and_backtrack_agree() {
        // both routes, including the n = 0 degenerate case
        let empty = Problem::new(0, 3, vec![]).unwrap();
        assert_eq!(count_exhaustive(&empty, None).count, 1);
        assert_eq!(count_backtrack(&empty, None).count, 1);

        let p = problem(3, 3, &[(0, 0, 1, 0), (1, 1, 2, 2), (0, 2, 2, 0)]);
        assert_eq!(
            count_exhaustive(&p, None).count,
            count_backtrack(&p, None).count
        );
    }

    #[test]
    fn is_solvable_examples() {
        assert!(is_solvable(&problem(10, 3, &[])));
        let full: Vec<Nogood> = enumerate_all_nogoods(3, 2);
        let p = Problem::new(3, 2, full).unwrap();
        assert!(!is_solvable(&p));
        // 9 nogoods covering all value pairs of variables (0, 1), n = 3, d = 3
        let mut pair_nogoods = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                pair_nogoods.push(Nogood::new(0, a, 1, b).unwrap());
            }
        }
        let p = Problem::new(3, 3, pair_nogoods).unwrap();
        assert!(!is_solvable(&p));
    }

    #[test]
    fn expected_solution_count_examples() {
        assert_eq!(expected_solution_count(10, 3, 0).unwrap(), 59049.0);
        assert!(expected_solution_count(10, 3, 82).unwrap() > 1.0);
        assert!(expected_solution_count(10, 3, 83).unwrap() < 1.0);
        assert_eq!(expected_solution_count(10, 3, 405).unwrap(), 0.0);
        assert!(expected_solution_count(10, 3, 406).is_err());
    }

    #[test]
    fn expected_count_strictly_decreasing() {
        let mut prev = expected_solution_count(10, 3, 0).unwrap();
        for m in 1..=360 {
            let e = expected_solution_count(10, 3, m).unwrap();
            assert!(e < prev, "not decreasing at m = {m}: {e} vs {prev}");
            prev = e;
        }
    }

    #[test]
    fn predicted_crossover_examples() {
        let m = predicted_crossover(10, 3).unwrap();
        assert!((m - 82.9).abs() <= 0.1, "crossover {m}");
        assert!(predicted_crossover(2, 1).is_err());
        assert!(predicted_crossover(1, 3).is_err());
        // degenerate smallest admissible case: E(m) = 1 at m = d^2 - 1
        assert!((predicted_crossover(2, 2).unwrap() - 3.0).abs() <= 1e-2);
    }

    #[test]
    fn enumerate_all_nogoods_examples() {
        assert_eq!(enumerate_all_nogoods(10, 3).len(), 405);
        assert_eq!(enumerate_all_nogoods(2, 2).len(), 4);
        assert!(enumerate_all_nogoods(1, 3).is_empty());
        let all = enumerate_all_nogoods(4, 3);
        assert!(all.windows(2).all(|w| w[0] < w[1]), "lexicographic order");
    }

    #[test]
    fn induced_subproblem_examples() {
        let mut pair_nogoods = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                pair_nogoods.push(Nogood::new(0, a, 1, b).unwrap());
            }
        }
        let p = Problem::new(3, 3, pair_nogoods).unwrap();

        let whole = induced_subproblem(&p, &[0, 1, 2]).unwrap();
        assert_eq!(whole.problem, p);

        let empty = induced_subproblem(&p, &[]).unwrap();
        assert_eq!(empty.problem.n(), 0);
        assert_eq!(count_solutions(&empty.problem, None).count, 1);

        let skip = induced_subproblem(&p, &[0, 2]).unwrap();
        assert_eq!(skip.problem.m(), 0);
        assert_eq!(skip.original_vars, vec![0, 2]);

        assert!(induced_subproblem(&p, &[9]).is_err());
    }

    #[test]
    fn text_round_trip_and_rejections() {
        let p = problem(3, 3, &[(1, 2, 2, 0), (0, 0, 1, 0), (0, 2, 2, 1)]);
        let text = p.to_text();
        assert_eq!(Problem::from_text(&text).unwrap(), p);

        // m mismatch
        assert!(Problem::from_text("csp 2 2 1\n").is_err());
        // duplicate
        assert!(Problem::from_text("csp 2 2 2\n0 0 1 0\n0 0 1 0\n").is_err());
        // non-canonical endpoint order
        assert!(Problem::from_text("csp 2 2 1\n1 0 0 0\n").is_err());
        // unsorted lines
        assert!(Problem::from_text("csp 2 2 2\n0 1 1 0\n0 0 1 0\n").is_err());
        // out of bounds
        assert!(Problem::from_text("csp 2 2 1\n0 0 1 5\n").is_err());
    }
}
