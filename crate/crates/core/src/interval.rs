//! Interval graphs: PQ-trees over maximal cliques, inner vertices, clean
//! subtree reduction with canonical codes, and automorphism/isomorphism
//! computations for interval graphs carrying marked families of cliques.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use crate::graph::{cliques_from_peo, is_chordal, is_subset, Clique, Graph};
use crate::perm::{find_block_swap, GeneratedGroup, PermError, Permutation};
use crate::setfamily::{family_autgroup, induced_ground_bijection, max_antichain_size, SetFamily};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntervalError {
    #[error("host graph is not an interval graph")]
    NotInterval,
    #[error("marked set {set} of family {family} is not a clique")]
    NotAClique { family: usize, set: usize },
    #[error("marked vertex {0} out of range")]
    OutOfRange(usize),
    #[error("tail vertex {0} must have degree 1")]
    BadTail(usize),
    #[error("instance too large for brute force ({0} vertices)")]
    TooLarge(usize),
    #[error(transparent)]
    Group(#[from] PermError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    P,
    Q,
    /// Leaf holding the maximal clique with this index.
    Leaf(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PqNode {
    pub kind: NodeKind,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    pub depth: usize,
}

/// Where a host vertex sits in the tree: the lowest node whose leaves
/// cover all cliques containing it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Attachment {
    Leaf(usize),
    P(usize),
    /// Children `from..=to` of a Q-node.
    Q { node: usize, from: usize, to: usize },
}

impl Attachment {
    pub fn node(&self) -> usize {
        match *self {
            Attachment::Leaf(x) | Attachment::P(x) => x,
            Attachment::Q { node, .. } => node,
        }
    }
}

/// PQ-tree whose leaves are the maximal cliques of an interval graph.
#[derive(Clone, Debug)]
pub struct PQTree {
    pub cliques: Vec<Clique>,
    pub nodes: Vec<PqNode>,
    pub root: usize,
    attach: Vec<Attachment>,
    span: Vec<(usize, usize)>,
    frontier: Vec<usize>,
}

/// Interval graph check plus all interval models, as a PQ-tree. `None` if
/// `g` is not a connected interval graph.
pub fn build_pq_tree(g: &Graph) -> Option<PQTree> {
    if g.n() == 0 || !g.is_connected() {
        return None;
    }
    let peo = is_chordal(g)?;
    let cliques = cliques_from_peo(g, &peo);
    let k = cliques.len();
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); g.n()];
    for (i, c) in cliques.iter().enumerate() {
        for &v in &c.0 {
            holders[v].push(i);
        }
    }
    let mut sets: Vec<Vec<usize>> = holders.iter().filter(|h| h.len() >= 2).cloned().collect();
    sets.sort();
    sets.dedup();

    // Overlap components.
    let overlaps = |a: &[usize], b: &[usize]| {
        let i = crate::graph::intersect(a, b).len();
        i > 0 && i < a.len() && i < b.len()
    };
    let s = sets.len();
    let mut dsu = crate::graph::Dsu::new(s);
    let mut ov: Vec<Vec<usize>> = vec![Vec::new(); s];
    for a in 0..s {
        for b in a + 1..s {
            if overlaps(&sets[a], &sets[b]) {
                dsu.union(a, b);
                ov[a].push(b);
                ov[b].push(a);
            }
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for a in 0..s {
        comps.entry(dsu.find(a)).or_default().push(a);
    }
    // Laminar members: union -> optional ordered blocks.
    let mut members: HashMap<Vec<usize>, Option<Vec<Vec<usize>>>> = HashMap::new();
    for comp in comps.values() {
        let mut union: Vec<usize> = comp.iter().flat_map(|&a| sets[a].iter().copied()).collect();
        union.sort_unstable();
        union.dedup();
        if comp.len() == 1 {
            members.entry(union).or_insert(None);
        } else {
            let blocks = order_component(&sets, comp, &ov, k)?;
            let entry = members.entry(union).or_insert(None);
            if entry.is_some() {
                return None;
            }
            *entry = Some(blocks);
        }
    }
    let universe: Vec<usize> = (0..k).collect();
    members.entry(universe.clone()).or_insert(None);
    let mut laminar: Vec<Vec<usize>> = members.keys().filter(|m| m.len() >= 2).cloned().collect();
    laminar.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));

    let mut b = Builder { members: &members, laminar: &laminar, nodes: Vec::new() };
    let root = b.build(&universe, 0)?;
    let nodes = b.nodes;
    let mut tree = PQTree {
        cliques,
        nodes,
        root,
        attach: Vec::new(),
        span: Vec::new(),
        frontier: Vec::new(),
    };
    tree.index();
    tree.attach = tree.compute_attachments(&holders)?;
    Some(tree)
}

/// Orders the atoms of an overlap-connected family consecutively.
fn order_component(sets: &[Vec<usize>], comp: &[usize], ov: &[Vec<usize>], k: usize) -> Option<Vec<Vec<usize>>> {
    let in_comp: std::collections::HashSet<usize> = comp.iter().copied().collect();
    let mut order = Vec::with_capacity(comp.len());
    let mut seen = std::collections::HashSet::new();
    let mut queue = VecDeque::from([comp[0]]);
    seen.insert(comp[0]);
    while let Some(a) = queue.pop_front() {
        order.push(a);
        for &b in &ov[a] {
            if in_comp.contains(&b) && seen.insert(b) {
                queue.push_back(b);
            }
        }
    }
    let (s0, s1) = (&sets[order[0]], &sets[order[1]]);
    let mut blocks: Vec<Vec<usize>> = vec![
        crate::graph::difference(s0, s1),
        crate::graph::intersect(s0, s1),
        crate::graph::difference(s1, s0),
    ];
    let mut covered = vec![false; k];
    for &x in s0.iter().chain(s1) {
        covered[x] = true;
    }
    for &a in &order[2..] {
        let set = &sets[a];
        let mut inset = vec![false; k];
        for &x in set {
            inset[x] = true;
        }
        let touched: Vec<usize> = (0..blocks.len()).filter(|&b| blocks[b].iter().any(|&x| inset[x])).collect();
        let full = |b: &Vec<usize>| b.iter().all(|&x| inset[x]);
        let (&i, &j) = (touched.first()?, touched.last()?);
        if touched.len() != j - i + 1 || (i + 1..j).any(|b| !full(&blocks[b])) {
            return None;
        }
        let fresh: Vec<usize> = set.iter().copied().filter(|&x| !covered[x]).collect();
        let split = |b: &Vec<usize>| -> (Vec<usize>, Vec<usize>) {
            (b.iter().copied().filter(|&x| inset[x]).collect(), b.iter().copied().filter(|&x| !inset[x]).collect())
        };
        let p = blocks.len();
        if fresh.is_empty() {
            if i == j {
                return None;
            }
            let (inj, outj) = split(&blocks[j]);
            let (ini, outi) = split(&blocks[i]);
            let mut next: Vec<Vec<usize>> = Vec::with_capacity(p + 2);
            next.extend(blocks[..i].iter().cloned());
            if !outi.is_empty() {
                next.push(outi);
            }
            next.push(ini);
            next.extend(blocks[i + 1..j].iter().cloned());
            next.push(inj);
            if !outj.is_empty() {
                next.push(outj);
            }
            next.extend(blocks[j + 1..].iter().cloned());
            blocks = next;
        } else {
            let right = j == p - 1 && (i == j || full(&blocks[j]));
            let left = i == 0 && (i == j || full(&blocks[0]));
            if right == left {
                return None;
            }
            if right {
                let (ini, outi) = split(&blocks[i]);
                let mut next: Vec<Vec<usize>> = blocks[..i].to_vec();
                if !outi.is_empty() {
                    next.push(outi);
                }
                next.push(ini);
                next.extend(blocks[i + 1..].iter().cloned());
                next.push(fresh.clone());
                blocks = next;
            } else {
                let (inj, outj) = split(&blocks[j]);
                let mut next: Vec<Vec<usize>> = vec![fresh.clone()];
                next.extend(blocks[..j].iter().cloned());
                next.push(inj);
                if !outj.is_empty() {
                    next.push(outj);
                }
                next.extend(blocks[j + 1..].iter().cloned());
                blocks = next;
            }
            for &x in &fresh {
                covered[x] = true;
            }
        }
    }
    Some(blocks)
}

struct Builder<'a> {
    members: &'a HashMap<Vec<usize>, Option<Vec<Vec<usize>>>>,
    laminar: &'a [Vec<usize>],
    nodes: Vec<PqNode>,
}

impl Builder<'_> {
    fn push(&mut self, kind: NodeKind, children: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        for &c in &children {
            self.nodes[c].parent = Some(id);
        }
        self.nodes.push(PqNode { kind, children, parent: None, depth });
        id
    }

    /// Node for the element set `set` (sorted).
    fn build(&mut self, set: &[usize], depth: usize) -> Option<usize> {
        if set.len() == 1 {
            return Some(self.push(NodeKind::Leaf(set[0]), Vec::new(), depth));
        }
        match self.members.get(set) {
            Some(Some(blocks)) => {
                // Every laminar member strictly inside must sit in one block.
                for m in self.inner_members(set) {
                    if !blocks.iter().any(|b| is_subset(&m, &sorted(b))) {
                        return None;
                    }
                }
                let mut children = Vec::with_capacity(blocks.len());
                for b in blocks {
                    children.push(self.build(&sorted(b), depth + 1)?);
                }
                Some(self.push(NodeKind::Q, children, depth))
            }
            _ => {
                let mut parts = self.maximal_inside(set);
                let covered: Vec<usize> = parts.iter().flatten().copied().collect();
                for &x in set {
                    if !covered.contains(&x) {
                        parts.push(vec![x]);
                    }
                }
                parts.sort();
                let mut children = Vec::with_capacity(parts.len());
                for p in &parts {
                    children.push(self.build(p, depth + 1)?);
                }
                Some(self.push(NodeKind::P, children, depth))
            }
        }
    }

    fn inner_members(&self, set: &[usize]) -> Vec<Vec<usize>> {
        self.laminar
            .iter()
            .filter(|m| m.len() < set.len() && is_subset(m, set))
            .cloned()
            .collect()
    }

    fn maximal_inside(&self, set: &[usize]) -> Vec<Vec<usize>> {
        let inner = self.inner_members(set);
        let mut out: Vec<Vec<usize>> = Vec::new();
        // `laminar` is sorted by decreasing size: keep those not inside a kept one.
        for m in inner {
            if !out.iter().any(|o| is_subset(&m, o)) {
                out.push(m);
            }
        }
        out
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

impl PQTree {
    fn index(&mut self) {
        let mut frontier = Vec::new();
        let mut span = vec![(0, 0); self.nodes.len()];
        self.walk(self.root, &mut frontier, &mut span);
        self.frontier = frontier;
        self.span = span;
    }

    fn walk(&self, x: usize, frontier: &mut Vec<usize>, span: &mut [(usize, usize)]) {
        let start = frontier.len();
        if let NodeKind::Leaf(c) = self.nodes[x].kind {
            frontier.push(c);
        }
        for &c in &self.nodes[x].children {
            self.walk(c, frontier, span);
        }
        span[x] = (start, frontier.len() - 1);
    }

    fn compute_attachments(&self, holders: &[Vec<usize>]) -> Option<Vec<Attachment>> {
        let k = self.cliques.len();
        let mut pos = vec![0; k];
        let mut leaf_node = vec![0; k];
        for (i, &c) in self.frontier.iter().enumerate() {
            pos[c] = i;
        }
        for (id, node) in self.nodes.iter().enumerate() {
            if let NodeKind::Leaf(c) = node.kind {
                leaf_node[c] = id;
            }
        }
        let mut out = Vec::with_capacity(holders.len());
        for h in holders {
            let lo = h.iter().map(|&c| pos[c]).min()?;
            let hi = h.iter().map(|&c| pos[c]).max()?;
            if hi - lo + 1 != h.len() {
                return None;
            }
            if h.len() == 1 {
                out.push(Attachment::Leaf(leaf_node[h[0]]));
                continue;
            }
            let mut x = leaf_node[self.frontier[lo]];
            while self.span[x].1 < hi {
                x = self.nodes[x].parent?;
            }
            let att = match self.nodes[x].kind {
                NodeKind::P => {
                    if self.span[x] != (lo, hi) {
                        return None;
                    }
                    Attachment::P(x)
                }
                NodeKind::Q => {
                    let ch = &self.nodes[x].children;
                    let from = ch.iter().position(|&c| self.span[c].0 == lo)?;
                    let to = ch.iter().position(|&c| self.span[c].1 == hi)?;
                    Attachment::Q { node: x, from, to }
                }
                NodeKind::Leaf(_) => return None,
            };
            out.push(att);
        }
        Some(out)
    }

    pub fn host_order(&self) -> usize {
        self.attach.len()
    }

    /// Clique indices in left-to-right leaf order.
    pub fn frontier(&self) -> &[usize] {
        &self.frontier
    }

    pub fn attachment(&self, v: usize) -> Attachment {
        self.attach[v]
    }

    pub fn children(&self, x: usize) -> &[usize] {
        &self.nodes[x].children
    }

    pub fn is_leaf(&self, x: usize) -> bool {
        matches!(self.nodes[x].kind, NodeKind::Leaf(_))
    }

    /// Vertices belonging to at least two children of `x` and to nothing
    /// outside `x`; empty for leaves.
    pub fn inner_vertices(&self, x: usize) -> Vec<usize> {
        if self.is_leaf(x) {
            return Vec::new();
        }
        (0..self.attach.len()).filter(|&v| self.attach[v].node() == x).collect()
    }

    /// Vertices with every clique inside the subtree of `x`.
    pub fn exclusive_vertices(&self, x: usize) -> Vec<usize> {
        let (lo, hi) = self.span[x];
        (0..self.attach.len())
            .filter(|&v| {
                let (a, b) = self.span[self.attach[v].node()];
                // Q attachments cover a sub-range of the node span; being
                // under `x` depends only on the attachment node.
                lo <= a && b <= hi
            })
            .collect()
    }

    /// Vertices contained in some clique of the subtree of `x`.
    pub fn covered_vertices(&self, x: usize) -> Vec<usize> {
        let (lo, hi) = self.span[x];
        let mut out: Vec<usize> = self.frontier[lo..=hi].iter().flat_map(|&c| self.cliques[c].0.iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Number of leaf orders reachable by permissible reorderings.
    pub fn permissible_order_count(&self) -> BigUint {
        let mut total = BigUint::one();
        for node in &self.nodes {
            match node.kind {
                NodeKind::P => total *= (1..=node.children.len()).fold(BigUint::one(), |a, x| a * BigUint::from(x)),
                NodeKind::Q => total *= BigUint::from(2u32),
                NodeKind::Leaf(_) => {}
            }
        }
        total
    }

    /// All permissible leaf orders; intended for small trees.
    pub fn permissible_orders(&self) -> Vec<Vec<usize>> {
        self.orders_of(self.root)
    }

    fn orders_of(&self, x: usize) -> Vec<Vec<usize>> {
        let node = &self.nodes[x];
        match node.kind {
            NodeKind::Leaf(c) => vec![vec![c]],
            NodeKind::Q => {
                let fwd = self.concat_orders(&node.children);
                let rev: Vec<usize> = node.children.iter().rev().copied().collect();
                let mut out = fwd;
                out.extend(self.concat_orders(&rev));
                out
            }
            NodeKind::P => {
                let mut out = Vec::new();
                for perm in permutations(&node.children) {
                    out.extend(self.concat_orders(&perm));
                }
                out
            }
        }
    }

    fn concat_orders(&self, children: &[usize]) -> Vec<Vec<usize>> {
        let mut acc: Vec<Vec<usize>> = vec![Vec::new()];
        for &c in children {
            let sub = self.orders_of(c);
            acc = acc
                .iter()
                .flat_map(|a| sub.iter().map(move |s| a.iter().chain(s).copied().collect()))
                .collect();
        }
        acc
    }

    /// Bracketed text form: `P(...)`, `Q(...)`, `L{v1,v2}`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.text_of(self.root, &mut s);
        s
    }

    fn text_of(&self, x: usize, s: &mut String) {
        let node = &self.nodes[x];
        match node.kind {
            NodeKind::Leaf(c) => {
                s.push_str("L{");
                for (i, v) in self.cliques[c].0.iter().enumerate() {
                    if i > 0 {
                        s.push(',');
                    }
                    let _ = write!(s, "{v}");
                }
                s.push('}');
            }
            NodeKind::P | NodeKind::Q => {
                s.push(if node.kind == NodeKind::P { 'P' } else { 'Q' });
                s.push('(');
                for (i, &c) in node.children.iter().enumerate() {
                    if i > 0 {
                        s.push(',');
                    }
                    self.text_of(c, s);
                }
                s.push(')');
            }
        }
    }

    /// Canonical code of the decorated subtree at every node.
    pub fn codes(&self) -> Vec<Code> {
        let mut private = vec![0usize; self.nodes.len()];
        let mut p_att = vec![0usize; self.nodes.len()];
        let mut q_att: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.nodes.len()];
        for a in &self.attach {
            match *a {
                Attachment::Leaf(x) => private[x] += 1,
                Attachment::P(x) => p_att[x] += 1,
                Attachment::Q { node, from, to } => q_att[node].push((from, to)),
            }
        }
        let mut codes: Vec<Option<Code>> = vec![None; self.nodes.len()];
        // Children always have smaller ids than their parent.
        for x in 0..self.nodes.len() {
            let node = &self.nodes[x];
            let ch: Vec<Code> = node.children.iter().map(|&c| codes[c].clone().expect("bottom-up")).collect();
            codes[x] = Some(match node.kind {
                NodeKind::Leaf(_) => Code::Leaf(private[x]),
                NodeKind::P => {
                    let mut ch = ch;
                    ch.sort();
                    Code::P(p_att[x], ch)
                }
                NodeKind::Q => Code::q_canonical(ch, q_att[x].clone()),
            });
        }
        codes.into_iter().map(|c| c.unwrap()).collect()
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Isomorphism-complete code of a subtree decorated with attached vertices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Code {
    /// Number of vertices private to the leaf.
    Leaf(usize),
    /// Attached vertex count and sorted child codes.
    P(usize, Vec<Code>),
    /// Child codes in order and sorted child ranges of attached vertices.
    Q(Vec<Code>, Vec<(usize, usize)>),
}

impl Code {
    fn q_canonical(ch: Vec<Code>, mut ranges: Vec<(usize, usize)>) -> Code {
        let k = ch.len();
        ranges.sort_unstable();
        let mut rch = ch.clone();
        rch.reverse();
        let mut rr: Vec<(usize, usize)> = ranges.iter().map(|&(a, b)| (k - 1 - b, k - 1 - a)).collect();
        rr.sort_unstable();
        let fwd = Code::Q(ch, ranges);
        let rev = Code::Q(rch, rr);
        fwd.min(rev)
    }

    /// Whether the forward orientation of `ch`/`ranges` is the canonical one.
    fn q_forward_is_canonical(ch: &[Code], ranges: &[(usize, usize)]) -> bool {
        let mut r = ranges.to_vec();
        r.sort_unstable();
        Code::q_canonical(ch.to_vec(), r.clone()) == Code::Q(ch.to_vec(), r)
    }

    /// Number of vertices encoded.
    pub fn vertex_count(&self) -> usize {
        match self {
            Code::Leaf(k) => *k,
            Code::P(a, ch) => a + ch.iter().map(Code::vertex_count).sum::<usize>(),
            Code::Q(ch, r) => r.len() + ch.iter().map(Code::vertex_count).sum::<usize>(),
        }
    }
}

/// Rebuilds an interval graph with the decorated structure `code`.
pub fn graph_from_code(code: &Code) -> Graph {
    fn emit(code: &Code, leaves: &mut Vec<Vec<usize>>, next: &mut usize) -> (usize, usize) {
        let start = leaves.len();
        match code {
            Code::Leaf(k) => {
                leaves.push((*next..*next + k).collect());
                *next += k;
            }
            Code::P(a, ch) => {
                for c in ch {
                    emit(c, leaves, next);
                }
                for _ in 0..*a {
                    for l in &mut leaves[start..] {
                        l.push(*next);
                    }
                    *next += 1;
                }
            }
            Code::Q(ch, ranges) => {
                let spans: Vec<(usize, usize)> = ch.iter().map(|c| emit(c, leaves, next)).collect();
                for &(i, j) in ranges {
                    for l in &mut leaves[spans[i].0..=spans[j].1] {
                        l.push(*next);
                    }
                    *next += 1;
                }
            }
        }
        (start, leaves.len() - 1)
    }
    let mut leaves = Vec::new();
    let mut next = 0;
    emit(code, &mut leaves, &mut next);
    let mut g = Graph::new(next);
    for l in &leaves {
        for (i, &u) in l.iter().enumerate() {
            for &v in &l[i + 1..] {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    g
}

/// A maximal clean subtree removed from the tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    /// Parent node, `None` when the whole tree is clean.
    pub parent: Option<usize>,
    /// Position among the parent's children.
    pub position: usize,
    pub node: usize,
    pub code: Code,
}

/// Result of discarding the maximal clean subtrees.
#[derive(Clone, Debug)]
pub struct CleanReduction {
    /// Nodes without a marked vertex exclusive to their subtree.
    pub clean: Vec<bool>,
    /// Nodes that remain after discarding.
    pub kept: Vec<bool>,
    pub annotations: Vec<Annotation>,
    /// Largest number of non-clean nodes at any one depth.
    pub max_dirty_per_depth: usize,
}

/// A node is clean when no marked vertex is exclusive to its subtree. The
/// maximal clean subtrees owning at least one vertex are discarded and
/// recorded as annotations on their parents.
pub fn reduce_clean(tree: &PQTree, marked: &[Vec<usize>]) -> CleanReduction {
    let codes = tree.codes();
    let k = tree.nodes.len();
    let mut dirty = vec![false; k];
    for set in marked {
        for &v in set {
            let mut x = Some(tree.attach[v].node());
            while let Some(y) = x {
                if dirty[y] {
                    break;
                }
                dirty[y] = true;
                x = tree.nodes[y].parent;
            }
        }
    }
    let mut owned = vec![0usize; k];
    for a in &tree.attach {
        owned[a.node()] += 1;
    }
    // Children precede parents.
    for x in 0..k {
        if let Some(p) = tree.nodes[x].parent {
            owned[p] += owned[x];
        }
    }
    let mut kept = vec![true; k];
    let mut annotations = Vec::new();
    for x in (0..k).rev() {
        let node = &tree.nodes[x];
        if node.parent.is_some_and(|p| !kept[p]) {
            kept[x] = false;
            continue;
        }
        if dirty[x] || owned[x] == 0 {
            continue;
        }
        kept[x] = false;
        let (parent, position) = match node.parent {
            None => (None, 0),
            Some(p) => (Some(p), tree.nodes[p].children.iter().position(|&c| c == x).unwrap()),
        };
        annotations.push(Annotation { parent, position, node: x, code: codes[x].clone() });
    }
    annotations.sort_by_key(|a| a.node);
    let mut per_depth: HashMap<usize, usize> = HashMap::new();
    for (x, node) in tree.nodes.iter().enumerate() {
        if dirty[x] {
            *per_depth.entry(node.depth).or_insert(0) += 1;
        }
    }
    let max_dirty_per_depth = per_depth.values().copied().max().unwrap_or(0);
    let t = max_antichain_size(&SetFamily {
        ground: tree.attach.len(),
        sets: marked.iter().map(|s| sorted(s)).collect(),
        annotations: vec![0; marked.len()],
    });
    assert!(max_dirty_per_depth <= t, "non-clean nodes per depth exceed the antichain size");
    CleanReduction { clean: dirty.iter().map(|d| !d).collect(), kept, annotations, max_dirty_per_depth }
}

/// An interval graph with marked families of cliques and an optional tail.
#[derive(Clone, Debug)]
pub struct MarkedIntervalGraph {
    pub host: Graph,
    pub families: Vec<Vec<Vec<usize>>>,
    pub tail: Option<usize>,
    /// Promised bound on the antichain size of all marked sets together.
    pub antichain_bound: Option<usize>,
}

impl MarkedIntervalGraph {
    pub fn new(host: Graph, families: Vec<Vec<Vec<usize>>>, tail: Option<usize>) -> Result<Self, IntervalError> {
        let mut families = families;
        for (fi, fam) in families.iter_mut().enumerate() {
            for (si, set) in fam.iter_mut().enumerate() {
                set.sort_unstable();
                set.dedup();
                if let Some(&v) = set.iter().find(|&&v| v >= host.n()) {
                    return Err(IntervalError::OutOfRange(v));
                }
                if !host.is_clique(set) {
                    return Err(IntervalError::NotAClique { family: fi, set: si });
                }
            }
        }
        if let Some(t) = tail {
            if t >= host.n() || host.degree(t) != 1 {
                return Err(IntervalError::BadTail(t));
            }
        }
        Ok(MarkedIntervalGraph { host, families, tail, antichain_bound: None })
    }

    pub fn with_antichain_bound(mut self, t: usize) -> Self {
        self.antichain_bound = Some(t);
        self
    }

    pub fn marked_count(&self) -> usize {
        self.families.iter().map(Vec::len).sum()
    }

    /// All marked sets, families concatenated in order.
    pub fn marked_sets(&self) -> Vec<Vec<usize>> {
        self.families.iter().flatten().cloned().collect()
    }

    fn check_promise(&self) -> Result<(), IntervalError> {
        if let Some(t) = self.antichain_bound {
            let sets = self.marked_sets();
            let fam = SetFamily { ground: self.host.n(), annotations: vec![0; sets.len()], sets };
            let a = max_antichain_size(&fam);
            if a > t {
                return Err(PermError::IndexBoundExceeded {
                    bound: t as u64,
                    stage: Some(format!("marked antichain of size {a}")),
                }
                .into());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum LabelKey {
    Marked(usize),
    Tail,
    Anchor,
    Node(u8, usize),
    Clean(usize, Code),
}

/// Shares set labels between instances that are compared with each other.
#[derive(Default)]
struct Interner(HashMap<LabelKey, u64>);

impl Interner {
    fn get(&mut self, k: LabelKey) -> u64 {
        let next = self.0.len() as u64;
        *self.0.entry(k).or_insert(next)
    }
}

/// Host prepared for the augmented-family computation.
struct Prepared {
    host: Graph,
    /// Marked sets (families concatenated), then the tail and anchor sets.
    special: Vec<(Vec<usize>, LabelKey)>,
    marked_count: usize,
    tree: PQTree,
    codes: Vec<Code>,
    reduction: CleanReduction,
}

fn prepare(m: &MarkedIntervalGraph) -> Result<Prepared, IntervalError> {
    m.check_promise()?;
    let mut host = m.host.clone();
    // Extra vertex joined to everything when the host is disconnected.
    let mut anchor = None;
    if !host.is_connected() {
        let n = host.n();
        let mut g = Graph::new(n + 1);
        for (u, v) in host.edges() {
            g.add_edge(u, v).unwrap();
        }
        for u in 0..n {
            g.add_edge(u, n).unwrap();
        }
        host = g;
        anchor = Some(n);
    }
    let tree = build_pq_tree(&host).ok_or(IntervalError::NotInterval)?;
    let mut special: Vec<(Vec<usize>, LabelKey)> = Vec::new();
    for (fi, fam) in m.families.iter().enumerate() {
        for s in fam {
            special.push((s.clone(), LabelKey::Marked(fi)));
        }
    }
    let marked_count = special.len();
    if let Some(t) = m.tail {
        special.push((vec![t], LabelKey::Tail));
    }
    if let Some(a) = anchor {
        special.push((vec![a], LabelKey::Anchor));
    }
    let marked: Vec<Vec<usize>> = special.iter().map(|s| s.0.clone()).collect();
    let reduction = reduce_clean(&tree, &marked);
    let codes = tree.codes();
    Ok(Prepared { host, special, marked_count, tree, codes, reduction })
}

impl Prepared {
    /// Sets and labels of the augmented family, plus the clean roots as
    /// `(set index, node)`.
    fn augmented(&self, interner: &mut Interner) -> (Vec<Vec<usize>>, Vec<u64>, Vec<(usize, usize)>) {
        let mut sets = Vec::new();
        let mut labels = Vec::new();
        for (s, key) in &self.special {
            sets.push(s.clone());
            labels.push(interner.get(key.clone()));
        }
        let mut clean_roots = Vec::new();
        for (x, node) in self.tree.nodes.iter().enumerate() {
            if self.reduction.kept[x] {
                let kind = match node.kind {
                    NodeKind::P => 0,
                    NodeKind::Q => 1,
                    NodeKind::Leaf(_) => 2,
                };
                sets.push(self.tree.covered_vertices(x));
                labels.push(interner.get(LabelKey::Node(kind, node.depth)));
            }
        }
        for a in &self.reduction.annotations {
            clean_roots.push((sets.len(), a.node));
            sets.push(self.tree.covered_vertices(a.node));
            labels.push(interner.get(LabelKey::Clean(self.tree.nodes[a.node].depth, a.code.clone())));
        }
        (sets, labels, clean_roots)
    }
}

/// The permutations of all marked sets (families concatenated) induced by
/// host automorphisms that fix the tail and preserve every family.
pub fn marked_action_group(m: &MarkedIntervalGraph) -> Result<GeneratedGroup, IntervalError> {
    let prep = prepare(m)?;
    let mut interner = Interner::default();
    let (sets, labels, _) = prep.augmented(&mut interner);
    let fam = SetFamily { ground: prep.host.n(), sets, annotations: labels };
    let g = family_autgroup(&fam, usize::MAX)?;
    let marked: Vec<usize> = (0..prep.marked_count).collect();
    Ok(g.restrict(&marked)?)
}

/// A witness of marked isomorphism: vertex map `M1 -> M2` and the map of
/// marked set indices (families concatenated).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedWitness {
    pub vertices: Vec<usize>,
    pub sets: Vec<usize>,
}

/// An isomorphism of hosts mapping the tail to the tail and each family
/// of `m1` bijectively onto the same-index family of `m2`.
pub fn marked_isomorphism(m1: &MarkedIntervalGraph, m2: &MarkedIntervalGraph) -> Result<Option<MarkedWitness>, IntervalError> {
    if m1.host.n() != m2.host.n()
        || m1.host.m() != m2.host.m()
        || m1.families.len() != m2.families.len()
        || m1.families.iter().zip(&m2.families).any(|(a, b)| a.len() != b.len())
        || m1.tail.is_some() != m2.tail.is_some()
    {
        return Ok(None);
    }
    let (p1, p2) = (prepare(m1)?, prepare(m2)?);
    if p1.host.n() != p2.host.n() {
        return Ok(None);
    }
    let mut interner = Interner::default();
    let (s1, l1, roots1) = p1.augmented(&mut interner);
    let (s2, l2, roots2) = p2.augmented(&mut interner);
    if s1.len() != s2.len() {
        return Ok(None);
    }
    let k = s1.len();
    let n = p1.host.n();
    let mut sets = s1;
    sets.extend(s2.iter().map(|s| s.iter().map(|&v| v + n).collect::<Vec<_>>()));
    let mut labels = l1;
    labels.extend(l2);
    let fam = SetFamily { ground: 2 * n, sets, annotations: labels };
    let g = family_autgroup(&fam, usize::MAX)?;
    let a: Vec<usize> = (0..k).collect();
    let b: Vec<usize> = (k..2 * k).collect();
    let Some(swap) = find_block_swap(&g, &a, &b) else {
        return Ok(None);
    };
    let zeta = induced_ground_bijection(&fam, &swap).expect("group element preserves the family");
    let mut phi: Vec<usize> = (0..n).map(|v| zeta[v].wrapping_sub(n)).collect();
    debug_assert!(phi.iter().all(|&x| x < n));
    let root_of2: HashMap<usize, usize> = roots2.iter().copied().collect();
    for &(si, node1) in &roots1 {
        let target = swap.apply(si) - k;
        let node2 = *root_of2.get(&target).expect("clean roots map to clean roots");
        let mut pairs = Vec::new();
        match_subtrees(&p1, node1, &p2, node2, &mut pairs);
        for (u, v) in pairs {
            phi[u] = v;
        }
    }
    let sets_map: Vec<usize> = (0..p1.marked_count).map(|i| swap.apply(i) - k).collect();
    // Drop the anchor vertex if one was added.
    let vertices: Vec<usize> = phi[..m1.host.n()].to_vec();
    let w = MarkedWitness { vertices, sets: sets_map };
    if verify_marked_witness(m1, m2, &w) {
        Ok(Some(w))
    } else {
        debug_assert!(false, "marked isomorphism witness failed verification");
        Ok(None)
    }
}

/// Pairs up the exclusive vertices of two subtrees with equal codes.
fn match_subtrees(p1: &Prepared, x1: usize, p2: &Prepared, x2: usize, out: &mut Vec<(usize, usize)>) {
    let (t1, t2) = (&p1.tree, &p2.tree);
    let verts = |t: &PQTree, x: usize| -> Vec<(usize, usize, usize)> {
        let mut v: Vec<(usize, usize, usize)> = (0..t.attach.len())
            .filter(|&v| t.attach[v].node() == x)
            .map(|v| match t.attach[v] {
                Attachment::Q { from, to, .. } => (from, to, v),
                _ => (0, 0, v),
            })
            .collect();
        v.sort_unstable();
        v
    };
    let n1 = &t1.nodes[x1];
    let n2 = &t2.nodes[x2];
    match (n1.kind, n2.kind) {
        (NodeKind::Leaf(_), NodeKind::Leaf(_)) | (NodeKind::P, NodeKind::P) => {
            for (a, b) in verts(t1, x1).into_iter().zip(verts(t2, x2)) {
                out.push((a.2, b.2));
            }
            let mut c1 = n1.children.clone();
            let mut c2 = n2.children.clone();
            c1.sort_by(|&a, &b| p1.codes[a].cmp(&p1.codes[b]));
            c2.sort_by(|&a, &b| p2.codes[a].cmp(&p2.codes[b]));
            for (a, b) in c1.into_iter().zip(c2) {
                match_subtrees(p1, a, p2, b, out);
            }
        }
        (NodeKind::Q, NodeKind::Q) => {
            let k = n1.children.len();
            let fwd = |p: &Prepared, x: usize| {
                let ch: Vec<Code> = p.tree.nodes[x].children.iter().map(|&c| p.codes[c].clone()).collect();
                let r: Vec<(usize, usize)> = verts(&p.tree, x).iter().map(|&(a, b, _)| (a, b)).collect();
                Code::q_forward_is_canonical(&ch, &r)
            };
            let flip = fwd(p1, x1) != fwd(p2, x2);
            let map_pos = |i: usize| if flip { k - 1 - i } else { i };
            let mut v2: Vec<(usize, usize, usize)> = verts(t2, x2)
                .into_iter()
                .map(|(a, b, v)| if flip { (k - 1 - b, k - 1 - a, v) } else { (a, b, v) })
                .collect();
            v2.sort_unstable();
            for (a, b) in verts(t1, x1).into_iter().zip(v2) {
                out.push((a.2, b.2));
            }
            for i in 0..k {
                match_subtrees(p1, n1.children[i], p2, n2.children[map_pos(i)], out);
            }
        }
        _ => unreachable!("equal codes have equal node kinds"),
    }
}

/// Checks that `w` is an isomorphism of the marked structures.
pub fn verify_marked_witness(m1: &MarkedIntervalGraph, m2: &MarkedIntervalGraph, w: &MarkedWitness) -> bool {
    let n = m1.host.n();
    if w.vertices.len() != n || m2.host.n() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &x in &w.vertices {
        if x >= n || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    if m1.host.m() != m2.host.m() || m1.host.edges().iter().any(|&(u, v)| !m2.host.has_edge(w.vertices[u], w.vertices[v])) {
        return false;
    }
    if let (Some(a), Some(b)) = (m1.tail, m2.tail) {
        if w.vertices[a] != b {
            return false;
        }
    }
    let s1 = m1.marked_sets();
    let s2 = m2.marked_sets();
    let fam_of = |m: &MarkedIntervalGraph| -> Vec<usize> {
        m.families.iter().enumerate().flat_map(|(i, f)| std::iter::repeat_n(i, f.len())).collect()
    };
    let (f1, f2) = (fam_of(m1), fam_of(m2));
    if w.sets.len() != s1.len() {
        return false;
    }
    let mut used = vec![false; s2.len()];
    for (i, &j) in w.sets.iter().enumerate() {
        if j >= s2.len() || used[j] || f1[i] != f2[j] {
            return false;
        }
        used[j] = true;
        let img: Vec<usize> = sorted(&s1[i].iter().map(|&v| w.vertices[v]).collect::<Vec<_>>());
        if img != s2[j] {
            return false;
        }
    }
    true
}

/// Default vertex limit for [`brute_marked_autgroup`].
pub const BRUTE_LIMIT: usize = 10;

/// The marked action group by enumerating all host automorphisms.
pub fn brute_marked_autgroup(m: &MarkedIntervalGraph) -> Result<GeneratedGroup, IntervalError> {
    brute_marked_autgroup_limit(m, BRUTE_LIMIT)
}

pub fn brute_marked_autgroup_limit(m: &MarkedIntervalGraph, limit: usize) -> Result<GeneratedGroup, IntervalError> {
    let n = m.host.n();
    if n > limit {
        return Err(IntervalError::TooLarge(n));
    }
    let sets = m.marked_sets();
    let fam: Vec<usize> = m.families.iter().enumerate().flat_map(|(i, f)| std::iter::repeat_n(i, f.len())).collect();
    let k = sets.len();
    let mut gens: Vec<Permutation> = Vec::new();
    for phi in crate::harness::brute_automorphisms(&m.host) {
        if let Some(t) = m.tail {
            if phi[t] != t {
                continue;
            }
        }
        // Match each set to an unused identical image in the same family.
        let mut used = vec![false; k];
        let mut img = vec![0; k];
        let mut ok = true;
        for i in 0..k {
            let target = sorted(&sets[i].iter().map(|&v| phi[v]).collect::<Vec<_>>());
            match (0..k).find(|&j| !used[j] && fam[j] == fam[i] && sets[j] == target) {
                Some(j) => {
                    used[j] = true;
                    img[i] = j;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            gens.push(Permutation::from_images(img).unwrap());
        }
    }
    // Duplicate sets within a family can be exchanged freely.
    for i in 0..k {
        for j in i + 1..k {
            if fam[i] == fam[j] && sets[i] == sets[j] {
                gens.push(Permutation::transposition(k, i, j));
            }
        }
    }
    Ok(GeneratedGroup::new(k, &gens)?)
}
