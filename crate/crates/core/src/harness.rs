//! Brute-force oracles, a random T-graph generator with certificates,
//! certificate verification and relabeling helpers.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{maximal_cliques, Graph};
use crate::perm::{GeneratedGroup, Permutation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("instance too large for brute force: {n} vertices (limit {limit})")]
    TooLarge { n: usize, limit: usize },
}

/// Default vertex limit of the brute-force oracles.
pub const DEFAULT_GUARD: usize = 12;

/// Exhaustive isomorphism search with degree pruning.
pub fn brute_force_isomorphism(g1: &Graph, g2: &Graph) -> Result<Option<Vec<usize>>, HarnessError> {
    brute_force_isomorphism_limit(g1, g2, DEFAULT_GUARD)
}

pub fn brute_force_isomorphism_limit(g1: &Graph, g2: &Graph, limit: usize) -> Result<Option<Vec<usize>>, HarnessError> {
    let n = g1.n().max(g2.n());
    if n > limit {
        return Err(HarnessError::TooLarge { n, limit });
    }
    Ok(brute_isomorphism(g1, g2))
}

/// Unguarded backtracking isomorphism search.
pub fn brute_isomorphism(g1: &Graph, g2: &Graph) -> Option<Vec<usize>> {
    let mut found = None;
    search_maps(g1, g2, &mut |phi| {
        found = Some(phi.to_vec());
        false
    });
    found
}

/// All automorphisms, as image arrays.
pub fn brute_automorphisms(g: &Graph) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    search_maps(g, g, &mut |phi| {
        out.push(phi.to_vec());
        true
    });
    out
}

pub fn brute_force_autgroup(g: &Graph) -> Result<GeneratedGroup, HarnessError> {
    brute_force_autgroup_limit(g, DEFAULT_GUARD)
}

pub fn brute_force_autgroup_limit(g: &Graph, limit: usize) -> Result<GeneratedGroup, HarnessError> {
    if g.n() > limit {
        return Err(HarnessError::TooLarge { n: g.n(), limit });
    }
    let gens: Vec<Permutation> = brute_automorphisms(g)
        .into_iter()
        .map(|p| Permutation::from_images(p).unwrap())
        .collect();
    Ok(GeneratedGroup::new(g.n(), &gens).expect("same domain"))
}

/// Calls `visit` on every isomorphism `g1 -> g2` until it returns false.
fn search_maps(g1: &Graph, g2: &Graph, visit: &mut dyn FnMut(&[usize]) -> bool) {
    let n = g1.n();
    if n != g2.n() || g1.m() != g2.m() {
        return;
    }
    let mut d1: Vec<usize> = (0..n).map(|v| g1.degree(v)).collect();
    let mut d2: Vec<usize> = (0..n).map(|v| g2.degree(v)).collect();
    let (s1, s2) = (d1.clone(), d2.clone());
    d1.sort_unstable();
    d2.sort_unstable();
    if d1 != d2 {
        return;
    }
    // Map vertices in BFS order.
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut q = std::collections::VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            order.push(u);
            for &w in g1.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
    }
    let mut phi = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn rec(
        i: usize,
        order: &[usize],
        g1: &Graph,
        g2: &Graph,
        s1: &[usize],
        s2: &[usize],
        phi: &mut Vec<usize>,
        used: &mut Vec<bool>,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if i == order.len() {
            return visit(phi);
        }
        let u = order[i];
        for w in 0..g2.n() {
            if used[w] || s1[u] != s2[w] {
                continue;
            }
            let ok = order[..i].iter().all(|&x| g1.has_edge(u, x) == g2.has_edge(w, phi[x]));
            if !ok {
                continue;
            }
            phi[u] = w;
            used[w] = true;
            let cont = rec(i + 1, order, g1, g2, s1, s2, phi, used, visit);
            used[w] = false;
            phi[u] = usize::MAX;
            if !cont {
                return false;
            }
        }
        true
    }
    rec(0, &order, g1, g2, &s1, &s2, &mut phi, &mut used, visit);
}

/// Whether `phi` maps `g1` isomorphically onto `g2`.
pub fn is_isomorphism(g1: &Graph, g2: &Graph, phi: &[usize]) -> bool {
    let n = g1.n();
    if g2.n() != n || phi.len() != n || g1.m() != g2.m() {
        return false;
    }
    let mut seen = vec![false; n];
    for &x in phi {
        if x >= n || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    g1.edges().iter().all(|&(u, v)| g2.has_edge(phi[u], phi[v]))
}

/// Subtree models on a host tree; the represented graph is their
/// intersection graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TRepresentation {
    pub tree_edges: Vec<(usize, usize)>,
    pub models: Vec<Vec<usize>>,
}

impl TRepresentation {
    pub fn tree_nodes(&self) -> usize {
        self.tree_edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(1)
    }

    pub fn tree(&self) -> Graph {
        let mut t = Graph::new(self.tree_nodes());
        for &(a, b) in &self.tree_edges {
            let _ = t.add_edge(a, b);
        }
        t
    }

    pub fn intersection_graph(&self) -> Graph {
        let n = self.models.len();
        let sets: Vec<HashSet<usize>> = self.models.iter().map(|m| m.iter().copied().collect()).collect();
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if sets[u].iter().any(|x| sets[v].contains(x)) {
                    g.add_edge(u, v).unwrap();
                }
            }
        }
        g
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Random tree with exactly `d` leaves and no vertex of degree 2.
fn random_leafy_tree(d: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    if d <= 2 {
        return vec![(0, 1)];
    }
    let mut edges: Vec<(usize, usize)> = vec![(0, 1), (0, 2), (0, 3)];
    let mut nodes = 4;
    for _ in 3..d {
        let mut deg = vec![0; nodes];
        for &(a, b) in &edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        let internal: Vec<usize> = (0..nodes).filter(|&x| deg[x] >= 2).collect();
        if rng.random_bool(0.5) {
            let x = internal[rng.random_range(0..internal.len())];
            edges.push((x, nodes));
            nodes += 1;
        } else {
            let e = rng.random_range(0..edges.len());
            let (a, b) = edges.swap_remove(e);
            let mid = nodes;
            edges.extend([(a, mid), (mid, b), (mid, nodes + 1)]);
            nodes += 2;
        }
    }
    edges
}

/// A graph on `n` vertices with a certificate representation on a random
/// subdivision of a random tree with `d` leaves. Deterministic per seed.
pub fn random_t_graph(d: usize, n: usize, seed: u64) -> (Graph, TRepresentation) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((d as u64) << 32) ^ ((n as u64) << 48));
    let base = random_leafy_tree(d, &mut rng);
    let mut next = base.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(1);
    let mut tree_edges = Vec::new();
    for &(a, b) in &base {
        let k = rng.random_range(0..=3);
        let mut prev = a;
        for _ in 0..k {
            tree_edges.push((prev, next));
            prev = next;
            next += 1;
        }
        tree_edges.push((prev, b));
    }
    let nodes = next;
    let mut adj = vec![Vec::new(); nodes];
    for &(a, b) in &tree_edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let max_size = nodes.div_ceil(2).max(1);
    let models: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let size = if rng.random_bool(0.6) {
                rng.random_range(1..=max_size.min(3))
            } else {
                rng.random_range(1..=max_size)
            };
            let start = rng.random_range(0..nodes);
            let mut inside = vec![false; nodes];
            inside[start] = true;
            let mut model = vec![start];
            let mut frontier: Vec<usize> = adj[start].clone();
            while model.len() < size && !frontier.is_empty() {
                let i = rng.random_range(0..frontier.len());
                let x = frontier.swap_remove(i);
                if inside[x] {
                    continue;
                }
                inside[x] = true;
                model.push(x);
                frontier.extend(adj[x].iter().copied().filter(|&y| !inside[y]));
            }
            model.sort_unstable();
            model
        })
        .collect();
    let rep = TRepresentation { tree_edges, models };
    let g = rep.intersection_graph();
    debug_assert!(verify_t_representation(&g, &rep));
    (g, rep)
}

/// Whether `rep` is a valid subtree representation of `g`.
pub fn verify_t_representation(g: &Graph, rep: &TRepresentation) -> bool {
    let t = rep.tree();
    if t.m() + 1 != t.n() || !t.is_connected() || rep.tree_edges.len() != t.m() {
        return false;
    }
    if rep.models.len() != g.n() {
        return false;
    }
    for m in &rep.models {
        if m.is_empty() || m.iter().any(|&x| x >= t.n()) {
            return false;
        }
        let (sub, _) = t.induced(m);
        if !sub.is_connected() {
            return false;
        }
    }
    if rep.intersection_graph() != *g {
        return false;
    }
    // Every maximal clique shares a tree node.
    match maximal_cliques(g) {
        Ok(cliques) => cliques.iter().all(|c| {
            let mut common: HashSet<usize> = rep.models[c.0[0]].iter().copied().collect();
            for &v in &c.0[1..] {
                let s: HashSet<usize> = rep.models[v].iter().copied().collect();
                common.retain(|x| s.contains(x));
            }
            !common.is_empty()
        }),
        Err(_) => false,
    }
}

/// Applies a uniformly random relabeling: vertex `v` becomes `perm(v)`.
pub fn random_relabel(g: &Graph, seed: u64) -> (Graph, Permutation) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images: Vec<usize> = (0..g.n()).collect();
    images.shuffle(&mut rng);
    let p = Permutation::from_images(images).unwrap();
    (g.relabel(p.images()), p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::is_chordal;

    #[test]
    fn brute_examples() {
        let g = Graph::path(4);
        assert!(is_isomorphism(&g, &g, &brute_isomorphism(&g, &g).unwrap()));
        assert!(brute_force_isomorphism(&Graph::path(4), &Graph::cycle(4)).unwrap().is_none());
        assert_eq!(brute_force_autgroup(&Graph::complete(3)).unwrap().order_u64(), 6);
        assert_eq!(brute_force_autgroup(&Graph::path(3)).unwrap().order_u64(), 2);
        let claw = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(brute_force_autgroup(&claw).unwrap().order_u64(), 6);
        assert!(brute_force_autgroup(&Graph::new(13)).is_err());
    }

    #[test]
    fn relabel_is_isomorphism() {
        let (g, _) = random_t_graph(3, 9, 4);
        let (h, p) = random_relabel(&g, 11);
        assert!(is_isomorphism(&g, &h, p.images()));
        let found = brute_isomorphism(&g, &h).unwrap();
        assert!(is_isomorphism(&g, &h, &found));
        let (h2, q) = random_relabel(&h, 12);
        assert!(is_isomorphism(&g, &h2, p.then(&q).images()));
    }

    #[test]
    fn generator_properties() {
        for seed in 0..30 {
            for d in 2..=4 {
                let (g, rep) = random_t_graph(d, 10, seed);
                assert!(verify_t_representation(&g, &rep));
                assert!(is_chordal(&g).is_some());
                assert_eq!(random_t_graph(d, 10, seed), (g.clone(), rep.clone()));
                // leaf count of the host tree
                let t = rep.tree();
                assert_eq!((0..t.n()).filter(|&x| t.degree(x) == 1).count(), d);
                if d == 2 {
                    for comp in g.components() {
                        let (sub, _) = g.induced(&comp);
                        assert!(crate::interval::build_pq_tree(&sub).is_some());
                    }
                }
            }
        }
    }

    #[test]
    fn certificate_rejections() {
        let (g, mut rep) = random_t_graph(3, 6, 2);
        let json = rep.to_json();
        assert_eq!(TRepresentation::from_json(&json).unwrap(), rep);
        let mut extra = g.clone();
        let missing = (0..g.n())
            .flat_map(|u| (u + 1..g.n()).map(move |v| (u, v)))
            .find(|&(u, v)| !g.has_edge(u, v));
        if let Some((u, v)) = missing {
            extra.add_edge(u, v).unwrap();
            assert!(!verify_t_representation(&extra, &rep));
        }
        rep.models[0].clear();
        assert!(!verify_t_representation(&g, &rep));
    }
}
