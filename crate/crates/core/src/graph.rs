//! Directed graphs and their structural analysis: strongly connected
//! components, condensation, sources, the root set, ergodicity, periods,
//! walk-length bounds, and the partitions used by non-uniqueness witnesses.
//!
//! Conventions. A walk has length >= 1, so `v ~> v` requires a cycle through
//! `v`; the SCC relation separately admits `v == w`. All algorithms run on
//! integer vertex indices; labels are cosmetic and only surface in DOT output.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};

/// A finite directed graph with set-semantics edges. Loops are allowed, the
/// null graph (no vertices) is a valid value. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiGraph {
    vertex_count: usize,
    edges: BTreeSet<(usize, usize)>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    labels: Option<Vec<String>>,
}

impl DiGraph {
    pub fn new(vertex_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::InvalidEdge {
                    from: u,
                    to: v,
                    vertex_count,
                });
            }
            set.insert((u, v));
        }
        let mut out_adj = vec![Vec::new(); vertex_count];
        let mut in_adj = vec![Vec::new(); vertex_count];
        for &(u, v) in &set {
            out_adj[u].push(v);
            in_adj[v].push(u);
        }
        for a in in_adj.iter_mut() {
            a.sort_unstable();
        }
        Ok(Self {
            vertex_count,
            edges: set,
            out_adj,
            in_adj,
            labels: None,
        })
    }

    pub fn with_labels(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        labels: Vec<String>,
    ) -> Result<Self> {
        if labels.len() != vertex_count {
            return Err(Error::LabelCountMismatch {
                labels: labels.len(),
                vertex_count,
            });
        }
        let mut g = Self::new(vertex_count, edges)?;
        g.labels = Some(labels);
        Ok(g)
    }

    /// The null graph: no vertices, no edges.
    pub fn null() -> Self {
        Self::new(0, []).expect("null graph is always valid")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u, v))
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    /// Display label of a vertex: the attached label if any, else its index.
    pub fn label(&self, v: usize) -> String {
        match &self.labels {
            Some(ls) => ls[v].clone(),
            None => v.to_string(),
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Vertices reachable from `v` by a walk of length >= 1.
    pub fn reachable_from(&self, v: usize) -> Vec<bool> {
        let mut seen = vec![false; self.vertex_count];
        let mut queue: VecDeque<usize> = self.out_adj[v].iter().copied().collect();
        for &w in &self.out_adj[v] {
            seen[w] = true;
        }
        while let Some(u) = queue.pop_front() {
            for &w in &self.out_adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// True when every ordered pair of distinct vertices is connected by a
    /// walk. A single vertex is irreducible with or without a loop (the SCC
    /// relation admits `v == w`); the null graph is not irreducible.
    pub fn is_irreducible(&self) -> bool {
        if self.vertex_count == 0 {
            return false;
        }
        (0..self.vertex_count).all(|v| {
            let reach = self.reachable_from(v);
            (0..self.vertex_count).all(|w| w == v || reach[w])
        })
    }

    /// Nonempty, irreducible, and aperiodic.
    pub fn is_ergodic(&self) -> bool {
        if self.vertex_count == 0 || !self.is_irreducible() {
            return false;
        }
        let all: Vec<usize> = (0..self.vertex_count).collect();
        matches!(self.period(&all), Ok(1))
    }

    /// Subgraph induced by `vertices` (deduplicated, ascending). Vertex `i` of
    /// the result corresponds to the i-th smallest selected vertex; the
    /// mapping is returned alongside. Labels carry over.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<(DiGraph, Vec<usize>)> {
        let selected: BTreeSet<usize> = vertices.iter().copied().collect();
        for &v in &selected {
            if v >= self.vertex_count {
                return Err(Error::InvalidVertex {
                    vertex: v,
                    vertex_count: self.vertex_count,
                });
            }
        }
        let map: Vec<usize> = selected.into_iter().collect();
        let mut index_of = vec![usize::MAX; self.vertex_count];
        for (new, &old) in map.iter().enumerate() {
            index_of[old] = new;
        }
        let edges = self
            .edges
            .iter()
            .filter(|(u, v)| index_of[*u] != usize::MAX && index_of[*v] != usize::MAX)
            .map(|&(u, v)| (index_of[u], index_of[v]));
        let mut sub = DiGraph::new(map.len(), edges)?;
        if self.labels.is_some() {
            sub.labels = Some(map.iter().map(|&v| self.label(v)).collect());
        }
        Ok((sub, map))
    }

    /// Vertices with empty in-neighborhood (a loop counts as an in-edge).
    pub fn source_set(&self) -> Vec<usize> {
        (0..self.vertex_count)
            .filter(|&v| self.in_adj[v].is_empty())
            .collect()
    }

    fn tarjan_components(&self) -> Vec<Vec<usize>> {
        const UNVISITED: usize = usize::MAX;
        let n = self.vertex_count;
        let mut index = vec![UNVISITED; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut counter = 0usize;
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let mut call: Vec<(usize, usize)> = Vec::new();

        for start in 0..n {
            if index[start] != UNVISITED {
                continue;
            }
            call.push((start, 0));
            while let Some(&(v, child)) = call.last() {
                if child == 0 {
                    index[v] = counter;
                    low[v] = counter;
                    counter += 1;
                    stack.push(v);
                    on_stack[v] = true;
                }
                if child < self.out_adj[v].len() {
                    call.last_mut().expect("frame exists").1 += 1;
                    let w = self.out_adj[v][child];
                    if index[w] == UNVISITED {
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&(parent, _)) = call.last() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().expect("SCC stack underflow");
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        comps.push(comp);
                    }
                }
            }
        }
        // Renumber components by their smallest vertex so the quotient is
        // independent of DFS order.
        comps.sort_by_key(|c| c[0]);
        comps
    }

    /// Strongly connected components and the acyclic quotient graph over them.
    pub fn condensation(&self) -> Condensation {
        let scc_members = self.tarjan_components();
        let mut membership = vec![0usize; self.vertex_count];
        for (i, comp) in scc_members.iter().enumerate() {
            for &v in comp {
                membership[v] = i;
            }
        }
        let quotient_edges: BTreeSet<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(u, v)| (membership[u], membership[v]))
            .filter(|(p, q)| p != q)
            .collect();
        let mut quotient =
            DiGraph::new(scc_members.len(), quotient_edges).expect("quotient indices are in range");
        quotient.labels = Some(
            scc_members
                .iter()
                .map(|comp| {
                    let names: Vec<String> = comp.iter().map(|&v| self.label(v)).collect();
                    format!("{{{}}}", names.join(","))
                })
                .collect(),
        );
        Condensation {
            quotient,
            membership,
            scc_members,
        }
    }

    /// The root of the graph: union of the members of the source SCCs of the
    /// condensation, together with ergodicity diagnostics.
    pub fn root(&self) -> RootReport {
        let cond = self.condensation();
        let sources = cond.quotient.source_set();
        let components: Vec<Vec<usize>> = sources
            .iter()
            .map(|&s| cond.scc_members[s].clone())
            .collect();
        let mut root: Vec<usize> = components.iter().flatten().copied().collect();
        root.sort_unstable();
        let (root_graph, _) = self
            .induced_subgraph(&root)
            .expect("root vertices are in range");
        let period = if components.len() == 1 {
            self.period(&components[0]).ok()
        } else {
            None
        };
        let is_ergodic = components.len() == 1 && period == Some(1);
        RootReport {
            is_irreducible: root_graph.is_irreducible(),
            root,
            components,
            root_graph,
            period,
            is_ergodic,
        }
    }

    /// Checks the computed root against a brute-force search for the smallest
    /// vertex set `S` that (i) reaches every vertex (`w == v` or `w ~> v` for
    /// some `w` in `S`) and (ii) is closed under taking in-neighbors.
    ///
    /// Subsets are enumerated exhaustively, so the graph must have at most
    /// `cap` vertices. [`DEFAULT_ORACLE_CAP`] is the intended cap.
    pub fn verify_root_characterization(&self, cap: usize) -> Result<bool> {
        let p = self.vertex_count;
        if p > cap {
            return Err(Error::OracleCapExceeded {
                vertex_count: p,
                cap,
            });
        }
        let reach: Vec<Vec<bool>> = (0..p).map(|v| self.reachable_from(v)).collect();
        let satisfies = |mask: u32| -> bool {
            // (i) every vertex is covered by some member of S
            for v in 0..p {
                let covered = (0..p)
                    .any(|w| mask & (1 << w) != 0 && (w == v || reach[w][v]));
                if !covered {
                    return false;
                }
            }
            // (ii) closed under in-neighbors
            self.edges
                .iter()
                .all(|&(u, v)| mask & (1 << v) == 0 || mask & (1 << u) != 0)
        };
        let mut candidates: Vec<u32> = (0..1u32 << p).filter(|&m| satisfies(m)).collect();
        candidates.sort_by_key(|m| m.count_ones());
        let smallest = match candidates.first() {
            Some(&m) => m,
            None => return Ok(false),
        };
        let unique_smallest = candidates
            .iter()
            .filter(|m| m.count_ones() == smallest.count_ones())
            .count()
            == 1;
        let contained_in_all = candidates.iter().all(|&m| m & smallest == smallest);
        let root_mask: u32 = self.root().root.iter().fold(0, |acc, &v| acc | (1 << v));
        Ok(unique_smallest && contained_in_all && root_mask == smallest)
    }

    /// The period of an irreducible component: gcd of all its cycle lengths,
    /// computed as the gcd over induced edges (u, v) of level(u) + 1 - level(v)
    /// for BFS levels from an arbitrary component vertex.
    pub fn period(&self, component: &[usize]) -> Result<u64> {
        let (sub, _) = self.induced_subgraph(component)?;
        if sub.vertex_count == 1 && !sub.has_edge(0, 0) {
            return Err(Error::ComponentHasNoCycle);
        }
        if !sub.is_irreducible() {
            return Err(Error::ComponentNotIrreducible);
        }
        let levels = sub.bfs_levels(0);
        let mut g: u64 = 0;
        for (u, v) in sub.edges() {
            let diff = (levels[u] as i64 + 1 - levels[v] as i64).unsigned_abs();
            g = gcd(g, diff);
        }
        debug_assert!(g >= 1, "an irreducible graph has a cycle");
        Ok(g)
    }

    /// Partition of an irreducible component into period classes W_0..W_{c-1}
    /// such that every induced edge steps from W_i to W_{i+1 mod c}.
    pub fn period_partition(&self, component: &[usize]) -> Result<Vec<Vec<usize>>> {
        let c = self.period(component)?;
        let (sub, map) = self.induced_subgraph(component)?;
        let levels = sub.bfs_levels(0);
        let mut classes = vec![Vec::new(); c as usize];
        for (local, &level) in levels.iter().enumerate() {
            classes[(level % c as usize) % c as usize].push(map[local]);
        }
        debug_assert!(sub.edges().all(|(u, v)| {
            (levels[u] + 1) % c as usize == levels[v] % c as usize
        }));
        Ok(classes)
    }

    fn bfs_levels(&self, start: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.vertex_count];
        level[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &w in &self.out_adj[u] {
                if level[w] == usize::MAX {
                    level[w] = level[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        level
    }

    /// Least q0 such that every ordered vertex pair is joined by a walk of
    /// every exact length q >= q0. Requires an ergodic graph; the search is
    /// capped at the classical primitivity bound (p-1)^2 + 1.
    pub fn walk_length_threshold(&self) -> Result<usize> {
        if !self.is_ergodic() {
            return Err(Error::NotErgodic {
                reason: "walk-length threshold needs a nonempty, irreducible, aperiodic graph"
                    .into(),
            });
        }
        let bound = (self.vertex_count - 1) * (self.vertex_count - 1) + 1;
        let adj = BitMatrix::from_graph(self);
        let mut power = adj.clone();
        for q in 1..=bound {
            if power.all_ones() {
                return Ok(q);
            }
            power = power.multiply(&adj);
        }
        if power.all_ones() {
            return Ok(bound);
        }
        Err(Error::WalkThresholdOverflow { bound })
    }

    /// Boolean adjacency power: does a walk of length exactly `q` exist for
    /// every ordered vertex pair? Used to audit [`Self::walk_length_threshold`].
    pub fn all_pairs_walk_of_length(&self, q: usize) -> bool {
        assert!(q >= 1, "walks have length >= 1");
        let adj = BitMatrix::from_graph(self);
        let mut power = adj.clone();
        for _ in 1..q {
            power = power.multiply(&adj);
        }
        power.all_ones()
    }

    /// rank(v) = 0 on the root, otherwise the length of a shortest walk from
    /// any root vertex (multi-source BFS). Empty for the null graph.
    pub fn rank_levels(&self) -> Vec<usize> {
        let root = self.root().root;
        let mut rank = vec![usize::MAX; self.vertex_count];
        let mut queue = VecDeque::new();
        for &v in &root {
            rank[v] = 0;
            queue.push_back(v);
        }
        while let Some(u) = queue.pop_front() {
            for &w in &self.out_adj[u] {
                if rank[w] == usize::MAX {
                    rank[w] = rank[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        debug_assert!(
            rank.iter().all(|&r| r != usize::MAX),
            "every vertex is reachable from the root"
        );
        rank
    }

    /// Two-sided partition (V0, rest) with no crossing edges in either
    /// direction: V0 is the weak closure of an inclusion-maximal successor
    /// set. Only defined when the root has at least two components; the
    /// complement is empty exactly when the graph is weakly connected.
    pub fn succ_prec_partition(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let report = self.root();
        if report.components.len() < 2 {
            return Err(Error::RootConnected);
        }
        let p = self.vertex_count;
        let succ: Vec<Vec<bool>> = (0..p)
            .map(|v| {
                let mut s = self.reachable_from(v);
                s[v] = true;
                s
            })
            .collect();
        let is_subset = |a: &[bool], b: &[bool]| a.iter().zip(b).all(|(&x, &y)| !x || y);
        let v0 = (0..p)
            .find(|&v| {
                (0..p).all(|w| !(is_subset(&succ[v], &succ[w]) && succ[w] != succ[v]))
            })
            .expect("a maximal successor set exists");
        // Close under both edge directions: the weakly connected region of v0.
        let mut side = vec![false; p];
        side[v0] = true;
        let mut queue = VecDeque::from([v0]);
        while let Some(u) = queue.pop_front() {
            for &w in self.out_adj[u].iter().chain(&self.in_adj[u]) {
                if !side[w] {
                    side[w] = true;
                    queue.push_back(w);
                }
            }
        }
        let inside: Vec<usize> = (0..p).filter(|&v| side[v]).collect();
        let outside: Vec<usize> = (0..p).filter(|&v| !side[v]).collect();
        debug_assert!(self
            .edges()
            .all(|(u, v)| side[u] == side[v]));
        Ok((inside, outside))
    }

    /// Graphviz DOT rendering.
    pub fn to_dot(&self, name: &str) -> String {
        self.dot_with_cluster(name, None)
    }

    /// DOT rendering with one vertex set grouped in a labelled cluster.
    pub fn to_dot_grouped(&self, name: &str, group: &[usize], group_label: &str) -> String {
        self.dot_with_cluster(name, Some((group, group_label)))
    }

    fn dot_with_cluster(&self, name: &str, cluster: Option<(&[usize], &str)>) -> String {
        let mut out = String::new();
        out.push_str(&format!("digraph {} {{\n", name));
        let in_cluster = |v: usize| cluster.map_or(false, |(g, _)| g.contains(&v));
        if let Some((group, label)) = cluster {
            out.push_str("  subgraph cluster_root {\n");
            out.push_str(&format!("    label=\"{}\";\n", label));
            out.push_str("    style=filled;\n    color=lightgrey;\n");
            for &v in group {
                out.push_str(&format!("    v{} [label=\"{}\"];\n", v, self.label(v)));
            }
            out.push_str("  }\n");
        }
        for v in 0..self.vertex_count {
            if !in_cluster(v) {
                out.push_str(&format!("  v{} [label=\"{}\"];\n", v, self.label(v)));
            }
        }
        for (u, v) in self.edges() {
            out.push_str(&format!("  v{} -> v{};\n", u, v));
        }
        out.push_str("}\n");
        out
    }
}

/// Default vertex cap for the exhaustive root-characterization search.
pub const DEFAULT_ORACLE_CAP: usize = 12;

/// SCC decomposition of a graph: the acyclic quotient, the vertex-to-class
/// map, and the member sets (sorted, indexed by class).
#[derive(Debug, Clone)]
pub struct Condensation {
    pub quotient: DiGraph,
    pub membership: Vec<usize>,
    pub scc_members: Vec<Vec<usize>>,
}

impl Condensation {
    pub fn to_dot(&self, name: &str) -> String {
        self.quotient.to_dot(name)
    }
}

/// The root set of a graph and its ergodicity diagnostics.
///
/// `root_graph` is the induced subgraph on the root; its vertex `i`
/// corresponds to `root[i]` (the root is sorted ascending). `period` is
/// `None` when the root is disconnected or its single component has no cycle.
#[derive(Debug, Clone)]
pub struct RootReport {
    pub root: Vec<usize>,
    pub components: Vec<Vec<usize>>,
    pub root_graph: DiGraph,
    pub is_irreducible: bool,
    pub period: Option<u64>,
    pub is_ergodic: bool,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Dense boolean matrix with u64-packed rows; just enough for walk counting.
#[derive(Clone)]
struct BitMatrix {
    n: usize,
    rows: Vec<Vec<u64>>,
}

impl BitMatrix {
    fn from_graph(g: &DiGraph) -> Self {
        let n = g.vertex_count();
        let words = n.div_ceil(64);
        let mut rows = vec![vec![0u64; words]; n];
        for (u, v) in g.edges() {
            rows[u][v / 64] |= 1 << (v % 64);
        }
        Self { n, rows }
    }

    fn multiply(&self, other: &Self) -> Self {
        let words = self.n.div_ceil(64);
        let mut rows = vec![vec![0u64; words]; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for k in 0..self.n {
                if row[k / 64] & (1 << (k % 64)) != 0 {
                    for (w, &bits) in rows[i].iter_mut().zip(&other.rows[k]) {
                        *w |= bits;
                    }
                }
            }
        }
        Self { n: self.n, rows }
    }

    fn all_ones(&self) -> bool {
        self.rows.iter().all(|row| {
            (0..self.n).all(|j| row[j / 64] & (1 << (j % 64)) != 0)
        })
    }
}
