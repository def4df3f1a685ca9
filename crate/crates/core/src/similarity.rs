//! Graph edit distance between flow graphs, its relative form and the
//! derived similarity score.
//!
//! Graphs are compared as directed multigraphs. Nodes match for free when
//! their types agree and their labels agree after normalization; edge labels
//! are ignored. Small problems are solved exactly by best-first search over
//! node assignments, larger ones by a greedy assignment whose induced edit
//! path gives an upper bound.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::graph::FlowGraph;
use crate::ir::{lower, validate, ProcessModel, ValidationReport};

/// Largest `|V1| + |V2|` solved exactly.
pub const EXACT_LIMIT: usize = 12;

/// Edit costs. Substituting a node costs nothing when type and normalized
/// label agree and `node_substitute` otherwise; edge substitution is free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub node_insert: u64,
    pub node_delete: u64,
    pub node_substitute: u64,
    pub edge_insert: u64,
    pub edge_delete: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            node_insert: 1,
            node_delete: 1,
            node_substitute: 1,
            edge_insert: 1,
            edge_delete: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GedResult {
    pub cost: u64,
    pub exact: bool,
    /// Each node of the first graph with its image in the second, if any.
    pub mapping: Vec<(String, Option<String>)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimilarityError {
    #[error("both graphs are empty; relative GED is undefined")]
    BothEmpty,
    #[error("model is invalid: {}", .0.summary())]
    InvalidModel(ValidationReport),
}

/// Lowercases, trims and collapses internal whitespace.
pub fn normalize_label(label: &str) -> String {
    label.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// The flow graph a valid model compiles to.
pub fn to_flow_graph(model: &ProcessModel) -> Result<FlowGraph, SimilarityError> {
    let report = validate(model);
    if !report.ok {
        return Err(SimilarityError::InvalidModel(report));
    }
    Ok(lower(model))
}

/// Index-based view of a flow graph.
struct Compact {
    ids: Vec<String>,
    keys: Vec<usize>,
    /// Edge multiplicities keyed by (source, target).
    edges: HashMap<(usize, usize), u64>,
    incident: Vec<Vec<(usize, usize)>>,
}

fn compact(g: &FlowGraph, interner: &mut HashMap<(String, String), usize>) -> Compact {
    let index: HashMap<&str, usize> = g.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let keys = g
        .nodes
        .iter()
        .map(|n| {
            let next = interner.len();
            *interner.entry((n.kind.clone(), normalize_label(&n.label))).or_insert(next)
        })
        .collect();
    let mut edges: HashMap<(usize, usize), u64> = HashMap::new();
    for e in &g.edges {
        // Edges with unknown endpoints are not part of the graph.
        if let (Some(&s), Some(&t)) = (index.get(e.source.as_str()), index.get(e.target.as_str())) {
            *edges.entry((s, t)).or_default() += 1;
        }
    }
    let mut incident = vec![Vec::new(); g.nodes.len()];
    for &(s, t) in edges.keys() {
        incident[s].push((s, t));
        if s != t {
            incident[t].push((s, t));
        }
    }
    Compact {
        ids: g.nodes.iter().map(|n| n.id.clone()).collect(),
        keys,
        edges,
        incident,
    }
}

impl Compact {
    fn edge_total(&self) -> u64 {
        self.edges.values().sum()
    }
}

struct Problem<'a> {
    a: &'a Compact,
    b: &'a Compact,
    costs: CostModel,
}

impl Problem<'_> {
    fn node_cost(&self, i: usize, j: Option<usize>) -> u64 {
        match j {
            None => self.costs.node_delete,
            Some(j) if self.a.keys[i] == self.b.keys[j] => 0,
            Some(_) => self.costs.node_substitute,
        }
    }

    fn edge_diff(&self, c1: u64, c2: u64) -> u64 {
        if c1 > c2 {
            (c1 - c2) * self.costs.edge_delete
        } else {
            (c2 - c1) * self.costs.edge_insert
        }
    }

    /// Cost added by deciding node `i` (the `i`-th in assignment order) given
    /// the decisions for nodes `0..i`.
    fn step_cost(&self, assigned: &[Option<usize>], i: usize, j: Option<usize>) -> u64 {
        let image = |k: usize| if k == i { j } else { assigned[k] };
        let pair = |s: usize, t: usize| {
            let c1 = self.a.edges.get(&(s, t)).copied().unwrap_or(0);
            let c2 = match (image(s), image(t)) {
                (Some(x), Some(y)) => self.b.edges.get(&(x, y)).copied().unwrap_or(0),
                _ => 0,
            };
            self.edge_diff(c1, c2)
        };
        let mut cost = self.node_cost(i, j) + pair(i, i);
        for k in 0..i {
            cost += pair(i, k) + pair(k, i);
        }
        cost
    }

    /// Insertion cost of every node of `b` left unmapped and of every `b` edge
    /// touching one.
    fn completion_cost(&self, used: &[bool]) -> u64 {
        let nodes = used.iter().filter(|u| !**u).count() as u64 * self.costs.node_insert;
        let edges: u64 = self
            .b
            .edges
            .iter()
            .filter(|((s, t), _)| !used[*s] || !used[*t])
            .map(|(_, c)| c * self.costs.edge_insert)
            .sum();
        nodes + edges
    }

    fn full_cost(&self, assignment: &[Option<usize>]) -> u64 {
        let mut used = vec![false; self.b.ids.len()];
        let mut cost = 0;
        for (i, &j) in assignment.iter().enumerate() {
            cost += self.step_cost(assignment, i, j);
            if let Some(j) = j {
                used[j] = true;
            }
        }
        cost + self.completion_cost(&used)
    }

    /// Admissible lower bound on the cost of deciding nodes `depth..` of `a`
    /// and completing the mapping.
    fn heuristic(&self, depth: usize, used: &[bool]) -> u64 {
        let rest_a = &self.a.keys[depth..];
        let rest_b: Vec<usize> = (0..self.b.ids.len()).filter(|&j| !used[j]).map(|j| self.b.keys[j]).collect();
        let mut counts: HashMap<usize, (usize, usize)> = HashMap::new();
        for &k in rest_a {
            counts.entry(k).or_default().0 += 1;
        }
        for &k in &rest_b {
            counts.entry(k).or_default().1 += 1;
        }
        let common: usize = counts.values().map(|&(x, y)| x.min(y)).sum();
        let node_floor = self
            .costs
            .node_insert
            .min(self.costs.node_delete)
            .min(self.costs.node_substitute);
        let nodes = (rest_a.len().max(rest_b.len()) - common) as u64 * node_floor;

        let open_a: u64 = self
            .a
            .edges
            .iter()
            .filter(|((s, t), _)| *s >= depth || *t >= depth)
            .map(|(_, c)| c)
            .sum();
        let open_b: u64 = self
            .b
            .edges
            .iter()
            .filter(|((s, t), _)| !used[*s] || !used[*t])
            .map(|(_, c)| c)
            .sum();
        let edges = open_a.abs_diff(open_b) * self.costs.edge_insert.min(self.costs.edge_delete);
        nodes + edges
    }

    fn exact(&self) -> (u64, Vec<Option<usize>>) {
        let n1 = self.a.ids.len();
        let n2 = self.b.ids.len();
        struct State {
            assigned: Vec<Option<usize>>,
            used: Vec<bool>,
            g: u64,
            complete: bool,
        }
        let mut states: Vec<State> = vec![State {
            assigned: Vec::new(),
            used: vec![false; n2],
            g: 0,
            complete: false,
        }];
        // (f, tie-break on depth, insertion order) keeps expansion deterministic.
        let mut open = BinaryHeap::new();
        open.push(Reverse((self.heuristic(0, &states[0].used), Reverse(0usize), 0usize)));
        while let Some(Reverse((_, _, id))) = open.pop() {
            if states[id].complete {
                let state = &states[id];
                return (state.g, state.assigned.clone());
            }
            let depth = states[id].assigned.len();
            if depth == n1 {
                let used = states[id].used.clone();
                let g = states[id].g + self.completion_cost(&used);
                let assigned = states[id].assigned.clone();
                states.push(State {
                    assigned,
                    used,
                    g,
                    complete: true,
                });
                open.push(Reverse((g, Reverse(depth + 1), states.len() - 1)));
                continue;
            }
            let candidates: Vec<Option<usize>> = (0..n2)
                .filter(|&j| !states[id].used[j])
                .map(Some)
                .chain(std::iter::once(None))
                .collect();
            for j in candidates {
                let step = self.step_cost(&states[id].assigned, depth, j);
                let mut assigned = states[id].assigned.clone();
                assigned.push(j);
                let mut used = states[id].used.clone();
                if let Some(j) = j {
                    used[j] = true;
                }
                let g = states[id].g + step;
                let f = g + self.heuristic(depth + 1, &used);
                states.push(State {
                    assigned,
                    used,
                    g,
                    complete: false,
                });
                open.push(Reverse((f, Reverse(depth + 1), states.len() - 1)));
            }
        }
        unreachable!("the search space always contains a complete assignment")
    }

    /// Greedy assignment: cheapest pairs first, ties broken by degree
    /// similarity and then by position.
    fn greedy(&self) -> (u64, Vec<Option<usize>>) {
        let degree = |c: &Compact, v: usize| -> (u64, u64) {
            let mut d = (0, 0);
            for &(s, t) in &c.incident[v] {
                let m = c.edges[&(s, t)];
                if s == v {
                    d.0 += m;
                }
                if t == v {
                    d.1 += m;
                }
            }
            d
        };
        let mut pairs = Vec::new();
        for i in 0..self.a.ids.len() {
            let da = degree(self.a, i);
            for j in 0..self.b.ids.len() {
                let db = degree(self.b, j);
                let structural = da.0.abs_diff(db.0) + da.1.abs_diff(db.1);
                pairs.push((self.node_cost(i, Some(j)), structural, i, j));
            }
        }
        pairs.sort_unstable();
        let mut assignment = vec![None; self.a.ids.len()];
        let mut used = vec![false; self.b.ids.len()];
        let pair_limit = self.costs.node_delete + self.costs.node_insert;
        for (cost, _, i, j) in pairs {
            if assignment[i].is_none() && !used[j] && cost <= pair_limit {
                assignment[i] = Some(j);
                used[j] = true;
            }
        }
        (self.full_cost(&assignment), assignment)
    }
}

/// Graph edit distance, exact when `|V1| + |V2| <= EXACT_LIMIT`.
pub fn ged(g1: &FlowGraph, g2: &FlowGraph, costs: &CostModel) -> GedResult {
    ged_with_limit(g1, g2, costs, EXACT_LIMIT)
}

/// As [`ged`] with a custom exactness threshold.
pub fn ged_with_limit(g1: &FlowGraph, g2: &FlowGraph, costs: &CostModel, exact_limit: usize) -> GedResult {
    let mut interner = HashMap::new();
    let a = compact(g1, &mut interner);
    let b = compact(g2, &mut interner);
    let problem = Problem {
        a: &a,
        b: &b,
        costs: *costs,
    };
    let exact = a.ids.len() + b.ids.len() <= exact_limit;
    let (cost, assignment) = if exact { problem.exact() } else { problem.greedy() };
    GedResult {
        cost,
        exact,
        mapping: assignment
            .into_iter()
            .enumerate()
            .map(|(i, j)| (a.ids[i].clone(), j.map(|j| b.ids[j].clone())))
            .collect(),
    }
}

/// Cost of deleting every node and edge of `g`.
pub fn ged_to_empty(g: &FlowGraph, costs: &CostModel) -> u64 {
    let c = compact(g, &mut HashMap::new());
    c.ids.len() as u64 * costs.node_delete + c.edge_total() * costs.edge_delete
}

/// Relative GED and similarity of one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub ged: u64,
    pub exact: bool,
    pub rged: Ratio<u64>,
    pub similarity: Ratio<u64>,
}

pub fn compare(g1: &FlowGraph, g2: &FlowGraph, costs: &CostModel) -> Result<Comparison, SimilarityError> {
    let denominator = ged_to_empty(g1, costs) + ged_to_empty(g2, costs);
    if denominator == 0 {
        return Err(SimilarityError::BothEmpty);
    }
    let result = ged(g1, g2, costs);
    let rged = Ratio::new(result.cost.min(denominator), denominator);
    Ok(Comparison {
        ged: result.cost,
        exact: result.exact,
        rged,
        similarity: Ratio::from_integer(1) - rged,
    })
}

/// GED normalized by the distances of both graphs to the empty graph.
pub fn rged(g1: &FlowGraph, g2: &FlowGraph) -> Result<Ratio<u64>, SimilarityError> {
    compare(g1, g2, &CostModel::default()).map(|c| c.rged)
}

/// One minus the relative GED.
pub fn similarity(g1: &FlowGraph, g2: &FlowGraph) -> Result<Ratio<u64>, SimilarityError> {
    compare(g1, g2, &CostModel::default()).map(|c| c.similarity)
}

pub fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
