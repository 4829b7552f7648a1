//! Simple undirected graphs and the chordal-graph toolkit: perfect
//! elimination orderings, maximal cliques, weighted clique graphs, clique
//! trees, edge classification for maximum-weight spanning trees, leaf
//! cliques and minimal separators.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid edge {0}-{1}")]
    InvalidEdge(usize, usize),
    #[error("graph is not chordal")]
    NotChordal,
    #[error("graph is not connected")]
    Disconnected,
}

/// Simple undirected graph on vertices `0..n`. Neighbor lists are kept sorted.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, edges={:?})", self.n(), self.edges())
    }
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph { adj: vec![Vec::new(); n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v).unwrap();
            }
        }
        g
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        edges.push((0, n - 1));
        Graph::from_edges(n, &edges).unwrap()
    }

    /// Adds an edge; adding an existing edge is a no-op.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        let n = self.n();
        if u == v || u >= n || v >= n {
            return Err(GraphError::InvalidEdge(u, v));
        }
        if let Err(pos) = self.adj[u].binary_search(&v) {
            self.adj[u].insert(pos, v);
            let pos = self.adj[v].binary_search(&u).unwrap_err();
            self.adj[v].insert(pos, u);
        }
        Ok(())
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) {
        if let Ok(pos) = self.adj[u].binary_search(&v) {
            self.adj[u].remove(pos);
            let pos = self.adj[v].binary_search(&u).unwrap();
            self.adj[v].remove(pos);
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.m());
        for u in 0..self.n() {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn is_clique(&self, vs: &[usize]) -> bool {
        vs.iter()
            .enumerate()
            .all(|(i, &u)| vs[i + 1..].iter().all(|&v| self.has_edge(u, v)))
    }

    /// Induced subgraph on `vs` (in the given order). Returns the subgraph and
    /// the map from new indices to old vertices.
    pub fn induced(&self, vs: &[usize]) -> (Graph, Vec<usize>) {
        let mut index = vec![usize::MAX; self.n()];
        for (i, &v) in vs.iter().enumerate() {
            index[v] = i;
        }
        let mut g = Graph::new(vs.len());
        for (i, &v) in vs.iter().enumerate() {
            for &w in &self.adj[v] {
                let j = index[w];
                if j != usize::MAX && i < j {
                    g.add_edge(i, j).unwrap();
                }
            }
        }
        (g, vs.to_vec())
    }

    /// Graph with vertex `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Graph {
        let mut g = Graph::new(self.n());
        for (u, v) in self.edges() {
            g.add_edge(perm[u], perm[v]).unwrap();
        }
        g
    }

    /// Disjoint union; vertices of `other` are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let off = self.n();
        let mut g = Graph::new(off + other.n());
        for (u, v) in self.edges() {
            g.add_edge(u, v).unwrap();
        }
        for (u, v) in other.edges() {
            g.add_edge(u + off, v + off).unwrap();
        }
        g
    }

    /// Component label per vertex, ignoring vertices with `removed[v]`
    /// (those get `usize::MAX`). Returns labels and the component count.
    pub fn components_without(&self, removed: &[bool]) -> (Vec<usize>, usize) {
        let n = self.n();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if removed[s] || comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &w in &self.adj[u] {
                    if !removed[w] && comp[w] == usize::MAX {
                        comp[w] = count;
                        queue.push_back(w);
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }

    /// Connected components as sorted vertex lists, ordered by minimum vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let (comp, count) = self.components_without(&vec![false; self.n()]);
        let mut out = vec![Vec::new(); count];
        for (v, &c) in comp.iter().enumerate() {
            out[c].push(v);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.components().len() == 1
    }

    /// Serializes to the `n m` / `u v` text format.
    pub fn to_text(&self) -> String {
        let edges = self.edges();
        let mut s = format!("{} {}\n", self.n(), edges.len());
        for (u, v) in edges {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    /// Parses the text format: header `n m`, then `m` edge lines `u v` with
    /// `u < v`. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Graph, GraphError> {
        let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
            let l = l.split('#').next().unwrap_or("").trim();
            (!l.is_empty()).then_some((i + 1, l))
        });
        let (hline, header) = lines.next().ok_or(GraphError::Parse {
            line: 0,
            msg: "missing header".into(),
        })?;
        let nums = parse_pair(hline, header)?;
        let (n, m) = nums;
        let mut g = Graph::new(n);
        let mut count = 0;
        for (line, l) in lines {
            let (u, v) = parse_pair(line, l)?;
            if !(u < v && v < n) {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("edge {u} {v} must satisfy 0 <= u < v < {n}"),
                });
            }
            if g.has_edge(u, v) {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("duplicate edge {u} {v}"),
                });
            }
            g.add_edge(u, v).unwrap();
            count += 1;
        }
        if count != m {
            return Err(GraphError::Parse {
                line: hline,
                msg: format!("header announces {m} edges, found {count}"),
            });
        }
        Ok(g)
    }
}

fn parse_pair(line: usize, l: &str) -> Result<(usize, usize), GraphError> {
    let parts: Vec<&str> = l.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(GraphError::Parse {
            line,
            msg: format!("expected two integers, got {l:?}"),
        });
    }
    let p = |s: &str| {
        s.parse::<usize>().map_err(|e| GraphError::Parse {
            line,
            msg: format!("{s:?}: {e}"),
        })
    };
    Ok((p(parts[0])?, p(parts[1])?))
}

impl FromStr for Graph {
    type Err = GraphError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Graph::parse(s)
    }
}

/// A clique of the host graph as a sorted vertex list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clique(pub Vec<usize>);

impl Clique {
    pub fn vertices(&self) -> &[usize] {
        &self.0
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }
}

/// Perfect elimination ordering: each vertex's later neighbors form a clique.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliminationOrdering {
    pub order: Vec<usize>,
}

impl EliminationOrdering {
    /// Checks the perfect-elimination property against `g`.
    pub fn is_valid_for(&self, g: &Graph) -> bool {
        let n = g.n();
        if self.order.len() != n {
            return false;
        }
        let mut pos = vec![usize::MAX; n];
        for (i, &v) in self.order.iter().enumerate() {
            if v >= n || pos[v] != usize::MAX {
                return false;
            }
            pos[v] = i;
        }
        self.order.iter().all(|&v| {
            let later: Vec<usize> = g
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&w| pos[w] > pos[v])
                .collect();
            g.is_clique(&later)
        })
    }
}

/// Maximum cardinality search; the reverse visit order is a perfect
/// elimination ordering exactly when `g` is chordal.
pub fn is_chordal(g: &Graph) -> Option<EliminationOrdering> {
    let n = g.n();
    let mut weight = vec![0usize; n];
    let mut visited = vec![false; n];
    // Buckets of unvisited vertices by weight.
    let mut buckets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n + 1];
    for v in 0..n {
        buckets[0].insert(v);
    }
    let mut top = 0usize;
    let mut visit = Vec::with_capacity(n);
    for _ in 0..n {
        while top > 0 && buckets[top].is_empty() {
            top -= 1;
        }
        let v = *buckets[top].iter().next().expect("unvisited vertex");
        buckets[top].remove(&v);
        visited[v] = true;
        visit.push(v);
        for &w in g.neighbors(v) {
            if !visited[w] {
                buckets[weight[w]].remove(&w);
                weight[w] += 1;
                buckets[weight[w]].insert(w);
                top = top.max(weight[w]);
            }
        }
    }
    visit.reverse();
    let peo = EliminationOrdering { order: visit };
    peo.is_valid_for(g).then_some(peo)
}

pub fn simplicial_vertices(g: &Graph) -> Vec<usize> {
    (0..g.n()).filter(|&v| g.is_clique(g.neighbors(v))).collect()
}

/// All maximal cliques of a chordal graph, sorted lexicographically.
pub fn maximal_cliques(g: &Graph) -> Result<Vec<Clique>, GraphError> {
    let peo = is_chordal(g).ok_or(GraphError::NotChordal)?;
    Ok(cliques_from_peo(g, &peo))
}

pub(crate) fn cliques_from_peo(g: &Graph, peo: &EliminationOrdering) -> Vec<Clique> {
    let n = g.n();
    let mut pos = vec![0; n];
    for (i, &v) in peo.order.iter().enumerate() {
        pos[v] = i;
    }
    let mut cands: Vec<Vec<usize>> = peo
        .order
        .iter()
        .map(|&v| {
            let mut c: Vec<usize> = g
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&w| pos[w] > pos[v])
                .collect();
            c.push(v);
            c.sort_unstable();
            c
        })
        .collect();
    cands.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    cands.dedup();
    // A candidate is maximal iff no kept (larger or equal) clique contains it.
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut kept: Vec<Vec<usize>> = Vec::new();
    for c in cands {
        let first = c[0];
        let contained = holders[first]
            .iter()
            .any(|&k| is_subset(&c, &kept[k]));
        if !contained {
            let id = kept.len();
            for &v in &c {
                holders[v].push(id);
            }
            kept.push(c);
        }
    }
    let mut out: Vec<Clique> = kept.into_iter().map(Clique).collect();
    out.sort();
    out
}

/// `a ⊆ b` for sorted slices.
pub fn is_subset(a: &[usize], b: &[usize]) -> bool {
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

pub fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

pub fn difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_err()).collect()
}

pub fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Maximal cliques with intersection-weighted edges (weight >= 1 only).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedCliqueGraph {
    pub cliques: Vec<Clique>,
    /// `(i, j, weight)` with `i < j`, sorted by `(i, j)`.
    pub edges: Vec<(usize, usize, usize)>,
}

impl WeightedCliqueGraph {
    pub fn from_cliques(cliques: Vec<Clique>, n: usize) -> Self {
        let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, c) in cliques.iter().enumerate() {
            for &v in &c.0 {
                holders[v].push(i);
            }
        }
        let k = cliques.len();
        let mut weight = std::collections::HashMap::new();
        for h in &holders {
            for (a, &i) in h.iter().enumerate() {
                for &j in &h[a + 1..] {
                    *weight.entry((i.min(j), i.max(j))).or_insert(0usize) += 1;
                }
            }
        }
        let mut edges: Vec<_> = weight.into_iter().map(|((i, j), w)| (i, j, w)).collect();
        edges.sort_unstable();
        debug_assert!(edges.iter().all(|&(i, j, _)| i < j && j < k));
        WeightedCliqueGraph { cliques, edges }
    }
}

pub fn weighted_clique_graph(g: &Graph) -> Result<WeightedCliqueGraph, GraphError> {
    Ok(WeightedCliqueGraph::from_cliques(maximal_cliques(g)?, g.n()))
}

/// Spanning tree of the weighted clique graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliqueTree {
    pub cliques: Vec<Clique>,
    pub edges: Vec<(usize, usize, usize)>,
}

impl CliqueTree {
    pub fn weight(&self) -> usize {
        self.edges.iter().map(|e| e.2).sum()
    }

    /// For every vertex, the cliques containing it induce a connected subtree.
    pub fn has_induced_subtree_property(&self, n: usize) -> bool {
        let k = self.cliques.len();
        (0..n).all(|v| {
            let holders: Vec<usize> = (0..k).filter(|&i| self.cliques[i].contains(v)).collect();
            if holders.is_empty() {
                return true;
            }
            // A forest on |holders| nodes is connected iff it has |holders| - 1 edges.
            let inner = self
                .edges
                .iter()
                .filter(|&&(i, j, _)| self.cliques[i].contains(v) && self.cliques[j].contains(v))
                .count();
            inner + 1 == holders.len()
        })
    }
}

pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }
    pub(crate) fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut x = x;
        while self.parent[x] != r {
            let nx = self.parent[x];
            self.parent[x] = r;
            x = nx;
        }
        r
    }
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Maximum-weight spanning tree; ties broken by the lexicographic `(i, j)`
/// order of clique indices.
pub fn clique_tree(g: &Graph) -> Result<CliqueTree, GraphError> {
    let w = weighted_clique_graph(g)?;
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    Ok(max_spanning_tree(&w))
}

pub(crate) fn max_spanning_tree(w: &WeightedCliqueGraph) -> CliqueTree {
    let mut order = w.edges.clone();
    order.sort_by(|a, b| b.2.cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut dsu = Dsu::new(w.cliques.len());
    let mut edges: Vec<_> = order
        .into_iter()
        .filter(|&(i, j, _)| dsu.union(i, j))
        .collect();
    edges.sort_unstable();
    CliqueTree { cliques: w.cliques.clone(), edges }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeClass {
    /// In every maximum-weight spanning tree.
    Indispensable,
    /// In no maximum-weight spanning tree.
    Unnecessary,
    /// In some but not all.
    Optional,
}

/// Classifies every edge of `w` (aligned with `w.edges`).
///
/// An edge of weight `x` lies in some maximum spanning tree iff its ends are
/// disconnected by the strictly heavier edges, and in every one iff it is a
/// bridge of the weight-`x` edges over the heavier components.
pub fn classify_edges(w: &WeightedCliqueGraph) -> Vec<EdgeClass> {
    let k = w.cliques.len();
    let mut idx: Vec<usize> = (0..w.edges.len()).collect();
    idx.sort_by(|&a, &b| w.edges[b].2.cmp(&w.edges[a].2));
    let mut out = vec![EdgeClass::Unnecessary; w.edges.len()];
    let mut dsu = Dsu::new(k);
    let mut start = 0;
    while start < idx.len() {
        let weight = w.edges[idx[start]].2;
        let mut end = start;
        while end < idx.len() && w.edges[idx[end]].2 == weight {
            end += 1;
        }
        let group = &idx[start..end];
        // Contracted multigraph on heavier-components.
        let mut live: Vec<(usize, usize, usize)> = Vec::new();
        for &e in group {
            let (i, j, _) = w.edges[e];
            let (a, b) = (dsu.find(i), dsu.find(j));
            if a != b {
                live.push((a, b, e));
            }
        }
        let bridges = bridges_of(k, &live);
        for (pos, &(_, _, e)) in live.iter().enumerate() {
            out[e] = if bridges[pos] {
                EdgeClass::Indispensable
            } else {
                EdgeClass::Optional
            };
        }
        for &e in group {
            let (i, j, _) = w.edges[e];
            dsu.union(i, j);
        }
        start = end;
    }
    out
}

/// Bridge flags for a multigraph given as `(u, v, tag)` edges on `0..n`.
fn bridges_of(n: usize, edges: &[(usize, usize, usize)]) -> Vec<bool> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (pos, &(u, v, _)) in edges.iter().enumerate() {
        adj[u].push((v, pos));
        adj[v].push((u, pos));
    }
    let mut is_bridge = vec![false; edges.len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX || adj[root].is_empty() {
            continue;
        }
        // Iterative DFS: (vertex, parent edge, next adjacency index).
        let mut stack = vec![(root, usize::MAX, 0usize)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (u, pe, ref mut it)) = stack.last_mut() {
            if *it < adj[u].len() {
                let (w, e) = adj[u][*it];
                *it += 1;
                if e == pe {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, e, 0));
                } else {
                    low[u] = low[u].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        is_bridge[pe] = true;
                    }
                }
            }
        }
    }
    is_bridge
}

/// Articulation points of a simple graph given by adjacency lists.
pub(crate) fn articulation_points(adj: &[Vec<usize>]) -> Vec<bool> {
    let n = adj.len();
    let mut cut = vec![false; n];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        let mut root_children = 0;
        let mut stack = vec![(root, usize::MAX, 0usize)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (u, parent, ref mut it)) = stack.last_mut() {
            if *it < adj[u].len() {
                let w = adj[u][*it];
                *it += 1;
                if w == parent {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    if u == root {
                        root_children += 1;
                    }
                    stack.push((w, u, 0));
                } else {
                    low[u] = low[u].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if p != root && low[u] >= disc[p] {
                        cut[p] = true;
                    }
                }
            }
        }
        cut[root] = root_children > 1;
    }
    cut
}

/// Cliques incident to at most one indispensable edge and not a cut vertex
/// once the unnecessary edges are dropped. Every leaf clique passes; the
/// converse can fail, see [`leaf_clique_indices`].
pub fn leaf_condition_indices(w: &WeightedCliqueGraph) -> Vec<usize> {
    let k = w.cliques.len();
    if k == 1 {
        return vec![0];
    }
    let classes = classify_edges(w);
    let mut indispensable = vec![0usize; k];
    let mut adj = vec![Vec::new(); k];
    for (&(i, j, _), &c) in w.edges.iter().zip(&classes) {
        if c == EdgeClass::Indispensable {
            indispensable[i] += 1;
            indispensable[j] += 1;
        }
        if c != EdgeClass::Unnecessary {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let cut = articulation_points(&adj);
    (0..k).filter(|&i| indispensable[i] <= 1 && !cut[i]).collect()
}

/// Indices of the cliques of `w` that are a leaf of some clique tree.
///
/// `C` is such a leaf iff a maximum spanning tree of the clique graph
/// without `C`, plus the heaviest edge at `C`, reaches the maximum weight.
/// In a clique graph with cliques `{0,1,2,6} {0,1,5,6} {0,1,6,7} {3,4,5,6}
/// {6,8}` the second clique passes [`leaf_condition_indices`] but is a leaf
/// of no clique tree.
pub fn leaf_clique_indices(w: &WeightedCliqueGraph) -> Vec<usize> {
    let k = w.cliques.len();
    if k == 1 {
        return vec![0];
    }
    let mut order = w.edges.clone();
    order.sort_by_key(|e| std::cmp::Reverse(e.2));
    let spanning = |skip: usize| -> Option<usize> {
        let mut dsu = Dsu::new(k);
        let (mut total, mut used) = (0, 0);
        for &(i, j, x) in &order {
            if i != skip && j != skip && dsu.union(i, j) {
                total += x;
                used += 1;
            }
        }
        (used + 2 == k).then_some(total)
    };
    let best: usize = max_spanning_tree(w).weight();
    leaf_condition_indices(w)
        .into_iter()
        .filter(|&c| {
            let heaviest = w.edges.iter().filter(|e| e.0 == c || e.1 == c).map(|e| e.2).max().unwrap_or(0);
            spanning(c).is_some_and(|t| t + heaviest == best)
        })
        .collect()
}

pub fn leaf_cliques(g: &Graph) -> Result<Vec<Clique>, GraphError> {
    let w = weighted_clique_graph(g)?;
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    Ok(leaf_clique_indices(&w)
        .into_iter()
        .map(|i| w.cliques[i].clone())
        .collect())
}

/// A minimal separator, optionally with one component of `G - S` it cuts off.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Separator {
    pub vertices: Vec<usize>,
    pub component: Option<Vec<usize>>,
}

/// All minimal separators of a chordal graph: the intersections of adjacent
/// cliques along a clique tree of each component, deduplicated and sorted.
pub fn minimal_separators(g: &Graph) -> Result<Vec<Separator>, GraphError> {
    let peo = is_chordal(g).ok_or(GraphError::NotChordal)?;
    let cliques = cliques_from_peo(g, &peo);
    let w = WeightedCliqueGraph::from_cliques(cliques, g.n());
    // Maximum spanning forest: one clique tree per component.
    let tree = max_spanning_tree(&w);
    let mut seps: BTreeSet<Vec<usize>> = BTreeSet::new();
    for &(i, j, _) in &tree.edges {
        seps.insert(intersect(&w.cliques[i].0, &w.cliques[j].0));
    }
    Ok(seps
        .into_iter()
        .map(|vertices| Separator { vertices, component: None })
        .collect())
}

/// No path from `A \ Z` to `B \ Z` in `G - Z`; vacuously true when either
/// difference is empty.
pub fn separates(g: &Graph, z: &[usize], a: &[usize], b: &[usize]) -> bool {
    let mut removed = vec![false; g.n()];
    for &v in z {
        removed[v] = true;
    }
    let (comp, _) = g.components_without(&removed);
    separated_by_labels(&comp, &removed, a, b)
}

pub(crate) fn separated_by_labels(comp: &[usize], removed: &[bool], a: &[usize], b: &[usize]) -> bool {
    let ca: BTreeSet<usize> = a.iter().filter(|&&v| !removed[v]).map(|&v| comp[v]).collect();
    !b.iter().any(|&v| !removed[v] && ca.contains(&comp[v]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn claw() -> Graph {
        // center 0
        Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap()
    }

    fn cl(v: &[usize]) -> Clique {
        Clique(v.to_vec())
    }

    #[test]
    fn parse_roundtrip_and_errors() {
        let g = Graph::parse("# a path\n3 2\n0 1\n\n1 2 # tail\n").unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(Graph::parse(&g.to_text()).unwrap(), g);
        assert!(matches!(Graph::parse("3 1\n1 0\n"), Err(GraphError::Parse { line: 2, .. })));
        assert!(Graph::parse("3 2\n0 1\n").is_err());
        assert!(Graph::parse("3 1\n0 5\n").is_err());
        assert!(Graph::parse("").is_err());
        assert!(Graph::parse("2 1\n0 x\n").is_err());
    }

    #[test]
    fn chordality_basics() {
        assert!(is_chordal(&Graph::cycle(4)).is_none());
        let k4 = Graph::complete(4);
        assert!(is_chordal(&k4).unwrap().is_valid_for(&k4));
        assert!(is_chordal(&Graph::new(0)).is_some());
    }

    #[test]
    fn simplicial() {
        assert_eq!(simplicial_vertices(&Graph::path(3)), vec![0, 2]);
        assert_eq!(simplicial_vertices(&Graph::complete(4)), vec![0, 1, 2, 3]);
        assert!(simplicial_vertices(&Graph::cycle(4)).is_empty());
    }

    #[test]
    fn cliques() {
        assert_eq!(maximal_cliques(&Graph::path(3)).unwrap(), vec![cl(&[0, 1]), cl(&[1, 2])]);
        assert_eq!(maximal_cliques(&Graph::complete(4)).unwrap(), vec![cl(&[0, 1, 2, 3])]);
        assert_eq!(
            maximal_cliques(&claw()).unwrap(),
            vec![cl(&[0, 1]), cl(&[0, 2]), cl(&[0, 3])]
        );
        assert_eq!(maximal_cliques(&Graph::cycle(5)), Err(GraphError::NotChordal));
        // isolated vertex is its own clique
        assert_eq!(maximal_cliques(&Graph::new(2)).unwrap(), vec![cl(&[0]), cl(&[1])]);
    }

    #[test]
    fn clique_graph_and_tree() {
        let p4 = Graph::path(4);
        let w = weighted_clique_graph(&p4).unwrap();
        assert_eq!(w.edges, vec![(0, 1, 1), (1, 2, 1)]);
        let w = weighted_clique_graph(&claw()).unwrap();
        assert_eq!(w.edges, vec![(0, 1, 1), (0, 2, 1), (1, 2, 1)]);
        let t = clique_tree(&claw()).unwrap();
        assert_eq!(t.edges, vec![(0, 1, 1), (0, 2, 1)]);
        assert!(t.has_induced_subtree_property(4));
        assert_eq!(clique_tree(&Graph::new(2)), Err(GraphError::Disconnected));
    }

    #[test]
    fn edge_classes() {
        let w = weighted_clique_graph(&Graph::path(4)).unwrap();
        assert_eq!(classify_edges(&w), vec![EdgeClass::Indispensable; 2]);
        let w = weighted_clique_graph(&claw()).unwrap();
        assert_eq!(classify_edges(&w), vec![EdgeClass::Optional; 3]);
        // Two triangles sharing an edge plus a pendant: weight-2 edge is forced.
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 4)]).unwrap();
        let w = weighted_clique_graph(&g).unwrap();
        let classes = classify_edges(&w);
        for (e, c) in w.edges.iter().zip(classes) {
            match e.2 {
                2 => assert_eq!(c, EdgeClass::Indispensable),
                _ => assert_ne!(c, EdgeClass::Unnecessary),
            }
        }
    }

    #[test]
    fn leaves() {
        assert_eq!(leaf_cliques(&Graph::path(4)).unwrap(), vec![cl(&[0, 1]), cl(&[2, 3])]);
        assert_eq!(leaf_cliques(&claw()).unwrap().len(), 3);
        assert_eq!(leaf_cliques(&Graph::complete(3)).unwrap(), vec![cl(&[0, 1, 2])]);
        let g = Graph::from_edges(
            9,
            &[
                (0, 1), (0, 2), (0, 5), (0, 6), (0, 7), (1, 2), (1, 5), (1, 6), (1, 7),
                (2, 6), (3, 4), (3, 5), (3, 6), (4, 5), (4, 6), (5, 6), (6, 7), (6, 8),
            ],
        )
        .unwrap();
        let w = weighted_clique_graph(&g).unwrap();
        let b = w.cliques.iter().position(|c| *c == cl(&[0, 1, 5, 6])).unwrap();
        assert!(leaf_condition_indices(&w).contains(&b));
        assert!(!leaf_clique_indices(&w).contains(&b));
        assert_eq!(leaf_clique_indices(&w).len(), 4);
    }

    #[test]
    fn separators() {
        let s = minimal_separators(&Graph::path(3)).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].vertices, vec![1]);
        assert!(minimal_separators(&Graph::complete(5)).unwrap().is_empty());
        assert!(minimal_separators(&Graph::cycle(4)).is_err());
    }

    #[test]
    fn separation_predicate() {
        assert!(separates(&Graph::path(3), &[1], &[0], &[2]));
        assert!(!separates(&Graph::complete(3), &[0], &[1], &[2]));
        assert!(separates(&Graph::complete(3), &[0, 1], &[0, 1], &[2]));
    }
}
