//! Random graphs by connectivity and instrumented backtracking 3-coloring
//! with the Brelaz (DSATUR) heuristic.
//!
//! Connectivity gamma is the average degree, 2|E| / n. Each edge converts
//! to d binary nogoods (one per color), so a 100-node graph contributes
//! 150 * gamma nogoods at three colors.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::csp::{Nogood, Problem};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

const COLORS: usize = 3;

/// An undirected simple graph: sorted `u < v` edge list, no duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(node_count: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        for e in edges.iter_mut() {
            if e.0 == e.1 {
                return Err(Error::invalid(format!("self-loop on node {}", e.0)));
            }
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
            if e.1 >= node_count {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) out of range for {node_count} nodes",
                    e.0, e.1
                )));
            }
        }
        edges.sort_unstable();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                return Err(Error::invalid(format!("duplicate edge {:?}", w[0])));
            }
        }
        Ok(Graph { node_count, edges })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Connectivity, i.e. average degree: 2|E| / n.
    pub fn gamma(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.node_count as f64
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    /// Whether the graph is connected (vacuously true for n <= 1).
    pub fn is_connected(&self) -> bool {
        if self.node_count <= 1 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.node_count];
        let mut queue = vec![0usize];
        seen[0] = true;
        let mut visited = 1;
        while let Some(u) = queue.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    visited += 1;
                    queue.push(v);
                }
            }
        }
        visited == self.node_count
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph {} {}", self.node_count, self.edges.len());
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

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
        if fields.len() != 3 || fields[0] != "graph" {
            return Err(parse_err(
                1,
                format!("expected `graph <node_count> <edge_count>`, got `{header}`"),
            ));
        }
        let parse_num = |line: usize, s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| parse_err(line, format!("not a non-negative integer: `{s}`")))
        };
        let node_count = parse_num(1, fields[1])?;
        let edge_count = parse_num(1, fields[2])?;
        let mut edges = Vec::with_capacity(edge_count);
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 {
                return Err(parse_err(lineno, format!("expected 2 fields, got {}", f.len())));
            }
            let u = parse_num(lineno, f[0])?;
            let v = parse_num(lineno, f[1])?;
            if u >= v {
                return Err(parse_err(lineno, format!("edge must satisfy u < v, got {u} {v}")));
            }
            if let Some(&prev) = edges.last() {
                if prev == (u, v) {
                    return Err(parse_err(lineno, "duplicate edge".into()));
                }
                if prev > (u, v) {
                    return Err(parse_err(lineno, "edges not in sorted order".into()));
                }
            }
            edges.push((u, v));
        }
        if edges.len() != edge_count {
            return Err(parse_err(
                1,
                format!("header declares {edge_count} edges but {} found", edges.len()),
            ));
        }
        Graph::new(node_count, edges)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text_named(&text, &path.display().to_string())
    }
}

/// Draws exactly gamma * node_count / 2 distinct edges uniformly without
/// replacement (the G(n, M) model). The implied edge count must be an
/// integer.
pub fn random_graph(node_count: usize, gamma: f64, rng: &mut ChaCha8Rng) -> Result<Graph> {
    if node_count == 0 {
        return Err(Error::invalid("graph needs at least one node"));
    }
    let target = gamma * node_count as f64 / 2.0;
    let edge_count = target.round();
    if (target - edge_count).abs() > 1e-9 || edge_count < 0.0 {
        return Err(Error::invalid(format!(
            "gamma * n / 2 = {target} is not a non-negative integer"
        )));
    }
    let edge_count = edge_count as usize;
    let max_edges = node_count * (node_count - 1) / 2;
    if edge_count > max_edges {
        return Err(Error::invalid(format!(
            "{edge_count} edges exceed the {max_edges} possible"
        )));
    }
    let edges = rand::seq::index::sample(rng, max_edges, edge_count)
        .into_iter()
        .map(|idx| pair_from_index(idx, node_count))
        .collect();
    Graph::new(node_count, edges)
}

/// Maps an index in [0, C(n,2)) to an unordered node pair.
fn pair_from_index(mut idx: usize, n: usize) -> (usize, usize) {
    let mut u = 0usize;
    loop {
        let block = n - 1 - u;
        if idx < block {
            return (u, u + 1 + idx);
        }
        idx -= block;
        u += 1;
    }
}

/// Converts a coloring instance to a binary CSP: each edge (u, v) yields
/// the nogoods {(u, c, v, c) : c in colors}.
pub fn coloring_to_csp(graph: &Graph, colors: usize) -> Problem {
    let mut nogoods = Vec::with_capacity(graph.edge_count() * colors);
    for &(u, v) in graph.edges() {
        for c in 0..colors {
            nogoods.push(Nogood::new(u, c, v, c).expect("u < v"));
        }
    }
    Problem::new(graph.node_count(), colors, nogoods).expect("edges are in bounds")
}

/// How a coloring search ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColoringStatus {
    /// A proper 3-coloring, one color per node.
    Coloring(Vec<usize>),
    Unsolvable,
    Censored,
}

impl ColoringStatus {
    pub fn is_coloring(&self) -> bool {
        matches!(self, ColoringStatus::Coloring(_))
    }
    pub fn is_censored(&self) -> bool {
        matches!(self, ColoringStatus::Censored)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoringOutcome {
    pub status: ColoringStatus,
    pub nodes: u64,
    pub seed: u64,
}

/// One branch decision, recorded for heuristic-conformance audits: the
/// colored assignment at the moment of choice, and the node chosen.
#[derive(Debug, Clone)]
pub struct BranchRecord {
    pub colored: Vec<(usize, usize)>,
    pub chosen: usize,
}

/// Backtracking 3-coloring under the Brelaz heuristic: the next node
/// maximizes (distinctly colored neighbors, uncolored neighbors), remaining
/// ties broken uniformly at random; colors are tried in the fixed order
/// 0, 1, 2 at every node; one node is counted per color placement.
///
/// The colors of the first two nodes assigned are never changed: when their
/// alternatives would be tried the search reports unsolvable instead, since
/// any completion from a changed pair is a color permutation of one already
/// explored.
pub fn brelaz_backtrack(graph: &Graph, seed: u64, node_cap: Option<u64>) -> ColoringOutcome {
    brelaz_backtrack_inner(graph, seed, node_cap, None)
}

/// [`brelaz_backtrack`] that also records every branch decision.
pub fn brelaz_backtrack_traced(
    graph: &Graph,
    seed: u64,
    node_cap: Option<u64>,
) -> (ColoringOutcome, Vec<BranchRecord>) {
    let mut trace = Vec::new();
    let outcome = brelaz_backtrack_inner(graph, seed, node_cap, Some(&mut trace));
    (outcome, trace)
}

fn brelaz_backtrack_inner(
    graph: &Graph,
    seed: u64,
    node_cap: Option<u64>,
    mut trace: Option<&mut Vec<BranchRecord>>,
) -> ColoringOutcome {
    let mut rng = rng_from_seed(seed);
    let n = graph.node_count();
    let adj = graph.adjacency();

    let mut color: Vec<Option<usize>> = vec![None; n];
    // per node: count of neighbors holding each color, and uncolored degree
    let mut neighbor_colors: Vec<[u32; COLORS]> = vec![[0; COLORS]; n];
    let mut uncolored_neighbors: Vec<u32> = adj.iter().map(|a| a.len() as u32).collect();

    struct Frame {
        node: usize,
        assigned: Option<usize>,
        next_color: usize,
    }

    let saturation = |counts: &[u32; COLORS]| counts.iter().filter(|&&c| c > 0).count();

    let choose = |color: &[Option<usize>],
                  neighbor_colors: &[[u32; COLORS]],
                  uncolored_neighbors: &[u32],
                  rng: &mut ChaCha8Rng,
                  trace: &mut Option<&mut Vec<BranchRecord>>|
     -> usize {
        let mut ties: Vec<usize> = Vec::new();
        let mut best_key = (0usize, 0u32);
        for v in 0..color.len() {
            if color[v].is_some() {
                continue;
            }
            let key = (saturation(&neighbor_colors[v]), uncolored_neighbors[v]);
            if ties.is_empty() || key > best_key {
                best_key = key;
                ties.clear();
                ties.push(v);
            } else if key == best_key {
                ties.push(v);
            }
        }
        let chosen = ties[rng.random_range(0..ties.len())];
        if let Some(t) = trace {
            t.push(BranchRecord {
                colored: color
                    .iter()
                    .enumerate()
                    .filter_map(|(v, c)| c.map(|c| (v, c)))
                    .collect(),
                chosen,
            });
        }
        chosen
    };

    if n == 0 {
        return ColoringOutcome {
            status: ColoringStatus::Coloring(Vec::new()),
            nodes: 0,
            seed,
        };
    }

    let mut nodes: u64 = 0;
    let mut stack: Vec<Frame> = vec![Frame {
        node: choose(&color, &neighbor_colors, &uncolored_neighbors, &mut rng, &mut trace),
        assigned: None,
        next_color: 0,
    }];

    loop {
        let depth = stack.len() - 1;
        let frame = stack.last_mut().expect("nonempty");

        // retract the frame's previous color before retrying
        if let Some(c) = frame.assigned.take() {
            color[frame.node] = None;
            for &nb in &adj[frame.node] {
                neighbor_colors[nb][c] -= 1;
                uncolored_neighbors[nb] += 1;
            }
        }

        let mut placed = false;
        while frame.next_color < COLORS {
            let c = frame.next_color;
            frame.next_color += 1;
            if neighbor_colors[frame.node][c] > 0 {
                continue; // conflicts with a colored neighbor
            }
            nodes += 1;
            if node_cap.is_some_and(|cap| nodes >= cap) {
                return ColoringOutcome {
                    status: ColoringStatus::Censored,
                    nodes,
                    seed,
                };
            }
            color[frame.node] = Some(c);
            frame.assigned = Some(c);
            for &nb in &adj[frame.node] {
                neighbor_colors[nb][c] += 1;
                uncolored_neighbors[nb] -= 1;
            }
            placed = true;
            break;
        }

        if placed {
            if stack.len() == n {
                let coloring = color.iter().map(|c| c.expect("complete")).collect();
                return ColoringOutcome {
                    status: ColoringStatus::Coloring(coloring),
                    nodes,
                    seed,
                };
            }
            let next = choose(&color, &neighbor_colors, &uncolored_neighbors, &mut rng, &mut trace);
            stack.push(Frame {
                node: next,
                assigned: None,
                next_color: 0,
            });
            continue;
        }

        // exhausted this node's colors: backtrack
        stack.pop();
        if depth <= 2 {
            // advancing the color of one of the first two assigned nodes
            // (or exhausting the very first) only permutes colors
            return ColoringOutcome {
                status: ColoringStatus::Unsolvable,
                nodes,
                seed,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::count_solutions;
    use crate::oracle::three_colorable;

    fn complete_graph(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Graph::new(n, edges).unwrap()
    }

    #[test]
    fn graph_construction_rules() {
        assert!(Graph::new(3, vec![(0, 0)]).is_err());
        assert!(Graph::new(3, vec![(0, 5)]).is_err());
        assert!(Graph::new(3, vec![(1, 0), (0, 1)]).is_err());
        let g = Graph::new(3, vec![(2, 0), (0, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2)]);
        assert!((g.gamma() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn random_graph_examples() {
        let mut rng = rng_from_seed(1);
        let g = random_graph(100, 4.5, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 225);
        assert_eq!(coloring_to_csp(&g, 3).m(), 675);

        let empty = random_graph(100, 0.0, &mut rng).unwrap();
        assert_eq!(empty.edge_count(), 0);

        assert!(random_graph(3, 0.5, &mut rng).is_err(), "0.75 edges");
        assert!(random_graph(3, 4.0, &mut rng).is_err(), "6 > C(3,2)");
    }

    #[test]
    fn pair_index_is_bijective() {
        let n = 9;
        let mut seen = std::collections::HashSet::new();
        for idx in 0..n * (n - 1) / 2 {
            let (u, v) = pair_from_index(idx, n);
            assert!(u < v && v < n);
            assert!(seen.insert((u, v)));
        }
        assert_eq!(seen.len(), 36);
    }

    #[test]
    fn conversion_examples() {
        let triangle = complete_graph(3);
        let p = coloring_to_csp(&triangle, 3);
        assert_eq!(p.m(), 9);
        assert_eq!(count_solutions(&p, None).count, 6);

        let k4 = complete_graph(4);
        let p = coloring_to_csp(&k4, 3);
        assert_eq!(p.m(), 18);
        assert_eq!(count_solutions(&p, None).count, 0);

        let empty = Graph::new(4, vec![]).unwrap();
        assert_eq!(coloring_to_csp(&empty, 3).m(), 0);
    }

    #[test]
    fn brelaz_k4_unsolvable() {
        for seed in 0..10 {
            let out = brelaz_backtrack(&complete_graph(4), seed, None);
            assert_eq!(out.status, ColoringStatus::Unsolvable);
        }
    }

    #[test]
    fn brelaz_path_picks_middle_first() {
        // path a - b - c: b has the largest degree, so it is chosen first
        // and the whole coloring costs exactly 3 nodes
        let g = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        for seed in 0..10 {
            let (out, trace) = brelaz_backtrack_traced(&g, seed, None);
            assert!(out.status.is_coloring());
            assert_eq!(out.nodes, 3);
            assert_eq!(trace[0].chosen, 1);
        }
    }

    #[test]
    fn brelaz_five_cycle_colorable() {
        let g = Graph::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        for seed in 0..10 {
            let out = brelaz_backtrack(&g, seed, None);
            let ColoringStatus::Coloring(c) = &out.status else {
                panic!("odd cycles are 3-colorable");
            };
            for &(u, v) in g.edges() {
                assert_ne!(c[u], c[v]);
            }
        }
    }

    #[test]
    fn brelaz_matches_oracle_on_random_graphs() {
        let mut rng = rng_from_seed(33);
        for trial in 0..300u64 {
            let gamma = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0][(trial % 6) as usize];
            let g = random_graph(20, gamma, &mut rng).unwrap();
            let expected = three_colorable(&g);
            let out = brelaz_backtrack(&g, trial, None);
            assert_eq!(
                out.status.is_coloring(),
                expected,
                "disagreement at gamma {gamma} trial {trial}"
            );
            if let ColoringStatus::Coloring(c) = &out.status {
                for &(u, v) in g.edges() {
                    assert_ne!(c[u], c[v], "improper coloring");
                }
            }
        }
    }

    #[test]
    fn brelaz_heuristic_conformance() {
        let mut rng = rng_from_seed(44);
        for trial in 0..40u64 {
            let g = random_graph(15, 4.0, &mut rng).unwrap();
            let adj = g.adjacency();
            let (_, trace) = brelaz_backtrack_traced(&g, trial, None);
            for record in &trace {
                let mut colors: Vec<Option<usize>> = vec![None; g.node_count()];
                for &(v, c) in &record.colored {
                    colors[v] = Some(c);
                }
                let key = |v: usize| {
                    let mut distinct = std::collections::HashSet::new();
                    let mut uncolored = 0u32;
                    for &nb in &adj[v] {
                        match colors[nb] {
                            Some(c) => {
                                distinct.insert(c);
                            }
                            None => uncolored += 1,
                        }
                    }
                    (distinct.len(), uncolored)
                };
                let chosen_key = key(record.chosen);
                for v in 0..g.node_count() {
                    if colors[v].is_none() {
                        assert!(
                            key(v) <= chosen_key,
                            "node {v} beats chosen {} at trial {trial}",
                            record.chosen
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn brelaz_agrees_with_csp_solvers_via_conversion() {
        let mut rng = rng_from_seed(55);
        for trial in 0..100u64 {
            let g = random_graph(12, 4.5, &mut rng).unwrap();
            let csp = coloring_to_csp(&g, 3);
            let brelaz = brelaz_backtrack(&g, trial, None).status.is_coloring();
            let solver = crate::solve::dynamic_backtrack(&csp, trial, None)
                .status
                .is_solution();
            assert_eq!(brelaz, solver);
        }
    }

    #[test]
    fn graph_text_round_trip_and_rejections() {
        let g = Graph::new(4, vec![(0, 1), (1, 3), (0, 2)]).unwrap();
        assert_eq!(Graph::from_text(&g.to_text()).unwrap(), g);
        assert!(Graph::from_text("graph 3 1\n").is_err());
        assert!(Graph::from_text("graph 3 2\n0 1\n0 1\n").is_err());
        assert!(Graph::from_text("graph 3 1\n1 0\n").is_err());
        assert!(Graph::from_text("graph 3 2\n0 2\n0 1\n").is_err());
    }

    #[test]
    fn connectivity_check() {
        let path = Graph::new(4, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(path.is_connected());
        let split = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert!(!split.is_connected());
    }
}
