use std::collections::{BTreeSet, HashSet, VecDeque};

use proptest::prelude::*;
use tgraph::graph::{
    classify_edges, clique_tree, is_chordal, leaf_cliques, maximal_cliques, minimal_separators, weighted_clique_graph,
    EdgeClass, WeightedCliqueGraph,
};
use tgraph::harness::random_t_graph;
use tgraph::Graph;

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        proptest::collection::vec(any::<bool>(), pairs).prop_map(move |bits| {
            let mut g = Graph::new(n);
            let mut it = bits.into_iter();
            for u in 0..n {
                for v in u + 1..n {
                    if it.next().unwrap() {
                        g.add_edge(u, v).unwrap();
                    }
                }
            }
            g
        })
    })
}

/// Largest component of a generator output.
fn arb_connected_chordal(max_n: usize) -> impl Strategy<Value = Graph> {
    (2usize..=4, 1..=max_n, any::<u64>()).prop_map(|(d, n, seed)| {
        let g = random_t_graph(d, n, seed).0;
        let comp = g.components().into_iter().max_by_key(Vec::len).unwrap();
        g.induced(&comp).0
    })
}

fn has_chordless_cycle(g: &Graph) -> bool {
    let n = g.n();
    (0u32..1 << n).filter(|s| s.count_ones() >= 4).any(|mask| {
        let vs: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        let (h, _) = g.induced(&vs);
        h.is_connected() && (0..h.n()).all(|v| h.degree(v) == 2)
    })
}

/// All maximum-weight spanning trees, as edge-index sets.
fn max_spanning_trees(w: &WeightedCliqueGraph) -> Vec<Vec<usize>> {
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    fn go(w: &WeightedCliqueGraph, at: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let k = w.cliques.len();
        if chosen.len() == k - 1 {
            out.push(chosen.clone());
            return;
        }
        if w.edges.len() - at < k - 1 - chosen.len() {
            return;
        }
        let mut p: Vec<usize> = (0..k).collect();
        for &e in chosen.iter() {
            let (a, b) = (find(&mut p, w.edges[e].0), find(&mut p, w.edges[e].1));
            p[a] = b;
        }
        let (i, j, _) = w.edges[at];
        if find(&mut p, i) != find(&mut p, j) {
            chosen.push(at);
            go(w, at + 1, chosen, out);
            chosen.pop();
        }
        go(w, at + 1, chosen, out);
    }
    let mut all = Vec::new();
    if w.cliques.len() == 1 {
        return vec![Vec::new()];
    }
    go(w, 0, &mut Vec::new(), &mut all);
    let weight = |t: &Vec<usize>| t.iter().map(|&e| w.edges[e].2).sum::<usize>();
    let best = all.iter().map(weight).max().unwrap();
    all.into_iter().filter(|t| weight(t) == best).collect()
}

fn tree_path(adj: &[Vec<usize>], u: usize, v: usize) -> Vec<usize> {
    let mut parent = vec![usize::MAX; adj.len()];
    parent[u] = u;
    let mut q = VecDeque::from([u]);
    while let Some(x) = q.pop_front() {
        for &y in &adj[x] {
            if parent[y] == usize::MAX {
                parent[y] = x;
                q.push_back(y);
            }
        }
    }
    let mut path = vec![v];
    while *path.last().unwrap() != u {
        path.push(parent[*path.last().unwrap()]);
    }
    path
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn chordality_matches_chordless_cycle_search(g in arb_graph(10)) {
        let peo = is_chordal(&g);
        prop_assert_eq!(peo.is_some(), !has_chordless_cycle(&g));
        if let Some(o) = peo {
            prop_assert!(o.is_valid_for(&g));
        }
    }

    #[test]
    fn cliques_trees_and_separators(g in arb_connected_chordal(25)) {
        let cliques = maximal_cliques(&g).unwrap();
        prop_assert!(cliques.len() <= g.n());
        let covered: HashSet<usize> = cliques.iter().flat_map(|c| c.0.iter().copied()).collect();
        prop_assert_eq!(covered.len(), g.n());
        prop_assert!(cliques.iter().all(|c| g.is_clique(&c.0)));
        prop_assert!(clique_tree(&g).unwrap().has_induced_subtree_property(g.n()));
        for s in minimal_separators(&g).unwrap() {
            prop_assert!(g.is_clique(&s.vertices));
        }
    }

    #[test]
    fn edge_classes_and_leaves_match_tree_enumeration(g in arb_connected_chordal(10)) {
        let w = weighted_clique_graph(&g).unwrap();
        prop_assume!(w.cliques.len() <= 8 && w.edges.len() <= 16);
        let trees = max_spanning_trees(&w);
        let classes = classify_edges(&w);
        for (e, &c) in classes.iter().enumerate() {
            let hits = trees.iter().filter(|t| t.contains(&e)).count();
            let expected = if hits == trees.len() {
                EdgeClass::Indispensable
            } else if hits == 0 {
                EdgeClass::Unnecessary
            } else {
                EdgeClass::Optional
            };
            prop_assert_eq!(c, expected, "edge {:?}", w.edges[e]);
        }
        let k = w.cliques.len();
        let mut leaves = BTreeSet::new();
        for t in &trees {
            let mut deg = vec![0; k];
            for &e in t {
                deg[w.edges[e].0] += 1;
                deg[w.edges[e].1] += 1;
            }
            leaves.extend((0..k).filter(|&i| deg[i] <= 1).map(|i| w.cliques[i].0.clone()));
        }
        let ours: BTreeSet<Vec<usize>> = leaf_cliques(&g).unwrap().into_iter().map(|c| c.0).collect();
        prop_assert_eq!(ours, leaves);
    }

    #[test]
    fn marked_tree_vertices_lie_on_a_common_path(prufer in proptest::collection::vec(0usize..10, 0..8), seed in any::<u64>()) {
        // Prüfer decoding into a tree on prufer.len() + 2 nodes.
        let n = prufer.len() + 2;
        let code: Vec<usize> = prufer.iter().map(|&x| x % n).collect();
        let mut degree = vec![1; n];
        for &x in &code {
            degree[x] += 1;
        }
        let mut adj = vec![Vec::new(); n];
        for &x in &code {
            let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
            adj[leaf].push(x);
            adj[x].push(leaf);
            degree[leaf] -= 1;
            degree[x] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        adj[rest[0]].push(rest[1]);
        adj[rest[1]].push(rest[0]);
        let d = (0..n).filter(|&v| adj[v].len() == 1).count();
        prop_assume!(n > d);
        // Mark d + 1 vertices chosen by the seed.
        let mut order: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let marked: HashSet<usize> = order[..d + 1].iter().copied().collect();
        let found = (0..n).any(|u| (u..n).any(|v| tree_path(&adj, u, v).iter().filter(|x| marked.contains(x)).count() >= 3));
        prop_assert!(found);
    }

    #[test]
    fn parse_roundtrip(g in arb_graph(12)) {
        prop_assert_eq!(Graph::parse(&g.to_text()).unwrap(), g);
    }
}
