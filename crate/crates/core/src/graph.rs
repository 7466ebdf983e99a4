//! Strongly connected components of the transition graph, the condensation
//! DAG, and the comparability order between components.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::Serialize;

use crate::system::MarkovSystem;

/// Tarjan's algorithm over an adjacency list. Components come out in reverse
/// topological order of the condensation.
pub fn strongly_connected(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct State<'a> {
        adj: &'a [Vec<usize>],
        index: usize,
        idx: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        comps: Vec<Vec<usize>>,
    }

    fn visit(v: usize, st: &mut State<'_>) {
        st.idx[v] = Some(st.index);
        st.low[v] = st.index;
        st.index += 1;
        st.stack.push(v);
        st.on_stack[v] = true;
        for &w in &st.adj[v] {
            match st.idx[w] {
                None => {
                    visit(w, st);
                    st.low[v] = st.low[v].min(st.low[w]);
                }
                Some(iw) if st.on_stack[w] => st.low[v] = st.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(st.low[v]) == st.idx[v] {
            let mut comp = Vec::new();
            loop {
                let w = st.stack.pop().expect("tarjan stack underflow");
                st.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            st.comps.push(comp);
        }
    }

    let n = adj.len();
    let mut st = State {
        adj,
        index: 0,
        idx: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        comps: Vec::new(),
    };
    for v in 0..n {
        if st.idx[v].is_none() {
            visit(v, &mut st);
        }
    }
    st.comps
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    /// Sorted, 0-based.
    pub vertices: Vec<usize>,
    /// A singleton without a self-loop: it lies on no cycle and carries a 1×1
    /// null block.
    pub trivial: bool,
}

/// SCC partition of `G`, ordered by smallest vertex.
#[derive(Debug, Clone)]
pub struct SccDecomposition {
    components: Vec<Component>,
    component_of: Vec<usize>,
    condensation_edges: Vec<(usize, usize)>,
    reach: Vec<Vec<bool>>,
    successors: Vec<Vec<usize>>,
}

impl SccDecomposition {
    pub fn new(sys: &MarkovSystem) -> SccDecomposition {
        let adj: Vec<Vec<usize>> = (0..sys.n()).map(|i| sys.successors(i).to_vec()).collect();
        let dec = SccDecomposition::from_adjacency(&adj);
        assert!(
            dec.components.iter().any(|c| c.vertices.len() >= 2),
            "fan-out >= 2 forces a component with at least two vertices"
        );
        dec
    }

    pub fn from_adjacency(adj: &[Vec<usize>]) -> SccDecomposition {
        let n = adj.len();
        let mut comps = strongly_connected(adj);
        comps.sort_by_key(|c| c[0]);
        let mut component_of = vec![0; n];
        for (k, c) in comps.iter().enumerate() {
            for &v in c {
                component_of[v] = k;
            }
        }
        let components: Vec<Component> = comps
            .into_iter()
            .map(|vertices| {
                let trivial = vertices.len() == 1 && !adj[vertices[0]].contains(&vertices[0]);
                Component { vertices, trivial }
            })
            .collect();

        let mut condensation_edges: Vec<(usize, usize)> = Vec::new();
        for (v, outs) in adj.iter().enumerate() {
            for &w in outs {
                let (a, b) = (component_of[v], component_of[w]);
                if a != b {
                    condensation_edges.push((a, b));
                }
            }
        }
        condensation_edges.sort_unstable();
        condensation_edges.dedup();

        let m = components.len();
        let mut dag = vec![Vec::new(); m];
        for &(a, b) in &condensation_edges {
            dag[a].push(b);
        }
        let reach = (0..m)
            .map(|start| {
                let mut seen = vec![false; m];
                let mut stack = vec![start];
                seen[start] = true;
                while let Some(c) = stack.pop() {
                    for &d in &dag[c] {
                        if !seen[d] {
                            seen[d] = true;
                            stack.push(d);
                        }
                    }
                }
                seen
            })
            .collect();

        SccDecomposition {
            components,
            component_of,
            condensation_edges,
            reach,
            successors: adj.to_vec(),
        }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.component_of[v]
    }

    pub fn condensation_edges(&self) -> &[(usize, usize)] {
        &self.condensation_edges
    }

    /// Reflexive-transitive reachability between components.
    pub fn reaches(&self, a: usize, b: usize) -> bool {
        self.reach[a][b]
    }

    /// `H_a ≺ H_b`: a path leads from `H_a` into `H_b`, `a ≠ b`.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        a != b && self.reach[a][b]
    }

    pub fn is_irreducible(&self) -> bool {
        self.components.len() == 1
    }

    /// Components in an order where every condensation edge points forward.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let m = self.components.len();
        let mut indegree = vec![0usize; m];
        for &(_, b) in &self.condensation_edges {
            indegree[b] += 1;
        }
        let mut ready: VecDeque<usize> = (0..m).filter(|&c| indegree[c] == 0).collect();
        let mut order = Vec::with_capacity(m);
        while let Some(c) = ready.pop_front() {
            order.push(c);
            for &(a, b) in &self.condensation_edges {
                if a == c {
                    indegree[b] -= 1;
                    if indegree[b] == 0 {
                        ready.push_back(b);
                    }
                }
            }
        }
        (order.len() == m).then_some(order)
    }

    /// Condensation DAG in DOT syntax, vertices 1-based.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph condensation {\n");
        for (k, c) in self.components.iter().enumerate() {
            let label: Vec<String> = c.vertices.iter().map(|v| (v + 1).to_string()).collect();
            let style = if c.trivial { ", style=dashed" } else { "" };
            let _ = writeln!(out, "  H{} [label=\"{{{}}}\"{}];", k + 1, label.join(","), style);
        }
        for &(a, b) in &self.condensation_edges {
            let _ = writeln!(out, "  H{} -> H{};", a + 1, b + 1);
        }
        out.push_str("}\n");
        out
    }

    /// Shortest path from any vertex of `from` to any vertex of `to`. Ties go
    /// to the lowest vertex index.
    fn witness(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let n = self.component_of.len();
        let mut prev: Vec<Option<usize>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for &v in &self.components[from].vertices {
            seen[v] = true;
            queue.push_back(v);
        }
        while let Some(v) = queue.pop_front() {
            let mut outs = self.successors[v].clone();
            outs.sort_unstable();
            for w in outs {
                if seen[w] {
                    continue;
                }
                seen[w] = true;
                prev[w] = Some(v);
                if self.component_of[w] == to {
                    let mut path = vec![w];
                    let mut cur = w;
                    while let Some(p) = prev[cur] {
                        path.push(p);
                        cur = p;
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(w);
            }
        }
        None
    }

    /// Pairwise relations between the components in `class_m`.
    pub fn comparability(&self, class_m: &[usize]) -> Result<ComparabilityVerdict, GraphError> {
        if class_m.is_empty() {
            return Err(GraphError::EmptyClass);
        }
        if let Some(&bad) = class_m.iter().find(|&&c| c >= self.components.len()) {
            return Err(GraphError::UnknownComponent(bad));
        }
        let mut pairs = Vec::new();
        for (x, &a) in class_m.iter().enumerate() {
            for &b in &class_m[x + 1..] {
                let (relation, witness) = if self.precedes(a, b) {
                    (Relation::FirstPrecedes, self.witness(a, b))
                } else if self.precedes(b, a) {
                    (Relation::SecondPrecedes, self.witness(b, a))
                } else {
                    (Relation::Incomparable, None)
                };
                pairs.push(PairRelation {
                    a,
                    b,
                    relation,
                    witness,
                });
            }
        }
        Ok(ComparabilityVerdict {
            class_m: class_m.to_vec(),
            pairs,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown component index {0}")]
    UnknownComponent(usize),
    #[error("class M must not be empty")]
    EmptyClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Incomparable,
    FirstPrecedes,
    SecondPrecedes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRelation {
    pub a: usize,
    pub b: usize,
    pub relation: Relation,
    /// Path from the earlier component to the later one, 0-based.
    pub witness: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparabilityVerdict {
    pub class_m: Vec<usize>,
    pub pairs: Vec<PairRelation>,
}

impl ComparabilityVerdict {
    pub fn all_incomparable(&self) -> bool {
        self.pairs.iter().all(|p| p.relation == Relation::Incomparable)
    }

    /// `{components, class_m, pairs:[{a,b,relation,witness}]}` with 1-based
    /// vertex and component numbers.
    pub fn to_json(&self, dec: &SccDecomposition) -> serde_json::Value {
        let one_based = |v: &[usize]| v.iter().map(|x| x + 1).collect::<Vec<_>>();
        serde_json::json!({
            "components": dec.components().iter().map(|c| serde_json::json!({
                "vertices": one_based(&c.vertices),
                "trivial": c.trivial,
            })).collect::<Vec<_>>(),
            "class_m": one_based(&self.class_m),
            "pairs": self.pairs.iter().map(|p| serde_json::json!({
                "a": p.a + 1,
                "b": p.b + 1,
                "relation": p.relation,
                "witness": p.witness.as_deref().map(one_based),
            })).collect::<Vec<_>>(),
        })
    }
}
