//! Canonical fragment extraction and level decomposition of T-graphs.
//!
//! Everything here depends only on isomorphism-invariant properties of the
//! input: relabeling the graph relabels the output.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    difference, intersect, is_chordal, is_subset, leaf_clique_indices, union, weighted_clique_graph, Graph,
};
use crate::interval::build_pq_tree;

/// Which failed assertion made the input untreatable for the given `d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub assertion: String,
    pub value: usize,
    pub bound: usize,
    /// Decomposition level (1 = outermost) and recursion depth of the failing call.
    pub level: usize,
    pub depth: usize,
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (value {}, bound {}) at level {}, depth {}",
            self.assertion, self.value, self.bound, self.level, self.depth
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecomposeError {
    #[error("graph is not chordal")]
    NotChordal,
    #[error("not a T-graph with {d} leaves: {evidence}")]
    NotTGraph { d: usize, evidence: Evidence },
    #[error("bad separator: {0}")]
    BadSeparator(String),
}

/// `F` plus its separator, with everything else contracted into `l` and a
/// pendant tail `l'` on `l`.
///
/// Vertex layout: `F` (sorted), then the separator (sorted), then `l`, `l'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Completion {
    pub graph: Graph,
    pub contracted: usize,
    pub tail: usize,
    /// Host vertex of each completion vertex below `contracted`.
    pub origin: Vec<usize>,
    pub fragment_len: usize,
}

impl Completion {
    pub fn separator(&self) -> &[usize] {
        &self.origin[self.fragment_len..]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Simplicial vertices of a leaf clique.
    Simplicial,
    /// Component(s) cut off by a joint separator.
    Separator,
    /// Kept from a recursive call on a completion.
    Recursive,
    /// Component of the interval remainder (innermost level).
    Residual,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub vertices: Vec<usize>,
    pub provenance: Provenance,
    /// Inclusion chain, smallest first.
    pub attachments: Vec<Vec<usize>>,
}

/// Counters of one extraction call, for bound checking.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallStats {
    pub level: usize,
    pub depth: usize,
    pub leaf_cliques: usize,
    pub l0: usize,
    pub l1: usize,
    pub z0: Option<usize>,
    pub outcome: Provenance,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentCollection {
    pub fragments: Vec<Fragment>,
    pub stats: Vec<CallStats>,
}

/// Evaluates the separation relations among a fixed collection of cliques.
struct Relations {
    k: usize,
    words: usize,
    /// `sep[j * k + i]`: bitset of `k` with `Z_j` separating `Z_i` from `Z_k`.
    sep: Vec<Vec<u64>>,
}

impl Relations {
    fn new(g: &Graph, cliques: &[Vec<usize>]) -> Self {
        let k = cliques.len();
        let words = k.div_ceil(64).max(1);
        let mut sep = vec![vec![0u64; words]; k * k];
        let mut removed = vec![false; g.n()];
        for j in 0..k {
            for &v in &cliques[j] {
                removed[v] = true;
            }
            let (comp, _) = g.components_without(&removed);
            let labels: Vec<BTreeSet<usize>> = cliques
                .iter()
                .map(|c| c.iter().filter(|&&v| !removed[v]).map(|&v| comp[v]).collect())
                .collect();
            for i in 0..k {
                if i == j {
                    continue;
                }
                let row = &mut sep[j * k + i];
                for (x, lx) in labels.iter().enumerate() {
                    if x != i && x != j && labels[i].is_disjoint(lx) {
                        row[x / 64] |= 1 << (x % 64);
                    }
                }
            }
            for &v in &cliques[j] {
                removed[v] = false;
            }
        }
        Relations { k, words, sep }
    }

    fn mask(&self, members: &[usize]) -> Vec<u64> {
        let mut m = vec![0u64; self.words];
        for &x in members {
            m[x / 64] |= 1 << (x % 64);
        }
        m
    }

    fn first(&self, row: &[u64], within: &[u64]) -> Option<usize> {
        row.iter().zip(within).enumerate().find_map(|(w, (&a, &b))| {
            let x = a & b;
            (x != 0).then(|| w * 64 + x.trailing_zeros() as usize)
        })
    }

    fn preceq(&self, i: usize, j: usize, within: &[u64]) -> Option<usize> {
        if i == j {
            return None;
        }
        self.first(&self.sep[j * self.k + i], within)
    }

    fn approx(&self, i: usize, j: usize, within: &[u64]) -> bool {
        if i == j {
            return false;
        }
        let both: Vec<u64> = self.sep[j * self.k + i].iter().zip(&self.sep[i * self.k + j]).map(|(a, b)| a & b).collect();
        self.first(&both, within).is_some()
    }
}

/// A witness `k` for `Z_i ⪯ Z_j` within `cliques`, if any.
pub fn clique_preceq(g: &Graph, cliques: &[Vec<usize>], i: usize, j: usize) -> Option<usize> {
    let r = Relations::new(g, cliques);
    let all: Vec<usize> = (0..cliques.len()).collect();
    r.preceq(i, j, &r.mask(&all))
}

/// Whether one common witness gives both `Z_i ⪯ Z_j` and `Z_j ⪯ Z_i`.
pub fn clique_approx(g: &Graph, cliques: &[Vec<usize>], i: usize, j: usize) -> bool {
    let r = Relations::new(g, cliques);
    let all: Vec<usize> = (0..cliques.len()).collect();
    r.approx(i, j, &r.mask(&all))
}

fn neighborhood(g: &Graph, set: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; g.n()];
    for &v in set {
        inside[v] = true;
    }
    let mut out: Vec<usize> = set.iter().flat_map(|&v| g.neighbors(v).iter().copied()).filter(|&u| !inside[u]).collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn build_completion(g: &Graph, f: &[usize], z: &[usize]) -> Completion {
    let mut origin: Vec<usize> = f.to_vec();
    origin.extend_from_slice(z);
    let (h, _) = g.induced(&origin);
    let k = origin.len();
    let mut graph = Graph::new(k + 2);
    for (u, v) in h.edges() {
        graph.add_edge(u, v).expect("in range");
    }
    for zi in f.len()..k {
        graph.add_edge(zi, k).expect("in range");
    }
    graph.add_edge(k, k + 1).expect("in range");
    Completion { graph, contracted: k, tail: k + 1, origin, fragment_len: f.len() }
}

/// Completion of `f` with respect to the separator `z`.
pub fn completion(g: &Graph, f: &[usize], z: &[usize]) -> Result<Completion, DecomposeError> {
    let mut f = f.to_vec();
    f.sort_unstable();
    f.dedup();
    let mut z = z.to_vec();
    z.sort_unstable();
    z.dedup();
    if f.is_empty() {
        return Err(DecomposeError::BadSeparator("empty part".into()));
    }
    if !intersect(&f, &z).is_empty() {
        return Err(DecomposeError::BadSeparator("part meets separator".into()));
    }
    if neighborhood(g, &f) != z {
        return Err(DecomposeError::BadSeparator("separator is not the neighborhood of the part".into()));
    }
    if f.len() + z.len() == g.n() {
        return Err(DecomposeError::BadSeparator("nothing to contract".into()));
    }
    Ok(build_completion(g, &f, &z))
}

/// Completion relative to `N(F)`; the contracted rest may be empty.
pub(crate) fn completion_of(g: &Graph, f: &[usize]) -> Completion {
    let z = neighborhood(g, f);
    build_completion(g, f, &z)
}

/// Distinct nonempty neighborhoods outside `x` of the vertices of `x`, by
/// cardinality.
pub fn attachment_sets(g: &Graph, x: &[usize]) -> Vec<Vec<usize>> {
    let mut inside = vec![false; g.n()];
    for &v in x {
        inside[v] = true;
    }
    let mut sets: Vec<Vec<usize>> = x
        .iter()
        .map(|&v| {
            let mut a: Vec<usize> = g.neighbors(v).iter().copied().filter(|&u| !inside[u]).collect();
            a.sort_unstable();
            a
        })
        .filter(|a| !a.is_empty())
        .collect();
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets.dedup();
    sets
}

fn is_chain(sets: &[Vec<usize>]) -> bool {
    sets.windows(2).all(|w| is_subset(&w[0], &w[1]))
}

pub fn is_interval(g: &Graph) -> bool {
    g.components().iter().all(|c| build_pq_tree(&g.induced(c).0).is_some())
}

struct Ctx {
    d: usize,
    level: usize,
    stats: Vec<CallStats>,
    depth_limit: usize,
}

impl Ctx {
    fn fail(&self, assertion: &str, value: usize, bound: usize, depth: usize) -> DecomposeError {
        DecomposeError::NotTGraph {
            d: self.d,
            evidence: Evidence { assertion: assertion.into(), value, bound, level: self.level, depth },
        }
    }
}

/// Canonical fragment collection of a connected chordal graph.
pub fn extract_fragments(g: &Graph, d: usize) -> Result<FragmentCollection, DecomposeError> {
    extract_fragments_at(g, d, 1)
}

fn extract_fragments_at(g: &Graph, d: usize, level: usize) -> Result<FragmentCollection, DecomposeError> {
    if is_chordal(g).is_none() {
        return Err(DecomposeError::NotChordal);
    }
    if g.n() == 0 || !g.is_connected() {
        return Err(DecomposeError::BadSeparator("input must be connected and nonempty".into()));
    }
    let mut ctx = Ctx { d, level, stats: Vec::new(), depth_limit: g.n() + 1 };
    let found = extract(g, &mut ctx, 0)?;
    let mut fragments: Vec<Fragment> = found
        .into_iter()
        .map(|(vertices, provenance)| {
            let attachments = attachment_sets(g, &vertices);
            Fragment { vertices, provenance, attachments }
        })
        .collect();
    fragments.sort_by(|a, b| a.vertices[0].cmp(&b.vertices[0]));
    Ok(FragmentCollection { fragments, stats: ctx.stats })
}

fn extract(g: &Graph, ctx: &mut Ctx, depth: usize) -> Result<Vec<(Vec<usize>, Provenance)>, DecomposeError> {
    if depth > ctx.depth_limit {
        return Err(ctx.fail("recursion makes progress", depth, ctx.depth_limit, depth));
    }
    let d = ctx.d;
    // Leaf cliques.
    let w = weighted_clique_graph(g).map_err(|_| DecomposeError::NotChordal)?;
    let leaves: Vec<Vec<usize>> = leaf_clique_indices(&w).into_iter().map(|i| w.cliques[i].0.clone()).collect();
    let k = leaves.len();
    let rel = Relations::new(g, &leaves);
    let all: Vec<usize> = (0..k).collect();
    let all_mask = rel.mask(&all);
    // Drop every clique that is strictly above another one.
    let strict = |i: usize, j: usize| rel.preceq(i, j, &all_mask).is_some() && rel.preceq(j, i, &all_mask).is_none();
    let l0: Vec<usize> = (0..k).filter(|&j| !(0..k).any(|i| strict(i, j))).collect();
    let mut stats = CallStats {
        level: ctx.level,
        depth,
        leaf_cliques: k,
        l0: l0.len(),
        l1: 0,
        z0: None,
        outcome: Provenance::Simplicial,
        size: 0,
    };
    if l0.is_empty() {
        ctx.stats.push(stats);
        return Err(ctx.fail("nonempty L0", 0, 1, depth));
    }
    // Cliques not ≈-related to any other one.
    let l0_mask = rel.mask(&l0);
    let l1: Vec<usize> = l0.iter().copied().filter(|&a| !l0.iter().any(|&b| rel.approx(a, b, &l0_mask))).collect();
    stats.l1 = l1.len();
    if !l1.is_empty() {
        stats.size = l1.len();
        ctx.stats.push(stats);
        if l1.len() > d {
            return Err(ctx.fail("|L1| <= d", l1.len(), d, depth));
        }
        return Ok(l1
            .iter()
            .map(|&i| {
                let c = &leaves[i];
                let simp: Vec<usize> = c.iter().copied().filter(|&v| g.degree(v) + 1 == c.len()).collect();
                (simp, Provenance::Simplicial)
            })
            .collect());
    }
    // Inclusion-minimal joint separators.
    let mut joint: BTreeSet<Vec<usize>> = BTreeSet::new();
    for (x, &a) in l0.iter().enumerate() {
        for &b in &l0[x + 1..] {
            if rel.approx(a, b, &l0_mask) {
                let others: Vec<&Vec<usize>> = l0.iter().filter(|&&c| c != a && c != b).map(|&c| &leaves[c]).collect();
                joint.extend(joint_separators(g, &leaves[a], &leaves[b], &others));
            }
        }
    }
    let joint: Vec<Vec<usize>> =
        joint.iter().filter(|z| !joint.iter().any(|y| y != *z && is_subset(y, z))).cloned().collect();
    if joint.is_empty() {
        ctx.stats.push(stats);
        return Err(ctx.fail("joint separators exist", 0, 1, depth));
    }
    // Components touching exactly one joint separator.
    let mut removed = vec![false; g.n()];
    for z in &joint {
        for &v in z {
            removed[v] = true;
        }
    }
    let (comp, count) = g.components_without(&removed);
    let mut comps: Vec<Vec<usize>> = vec![Vec::new(); count];
    for v in 0..g.n() {
        if !removed[v] {
            comps[comp[v]].push(v);
        }
    }
    let mut c0: Vec<(Vec<usize>, usize)> = Vec::new();
    for f in comps {
        let nf = neighborhood(g, &f);
        let touched: Vec<usize> = (0..joint.len()).filter(|&z| !intersect(&nf, &joint[z]).is_empty()).collect();
        if touched.len() == 1 {
            c0.push((f, touched[0]));
        }
    }
    if c0.is_empty() {
        ctx.stats.push(stats);
        return Err(DecomposeError::NotChordal);
    }
    let z0: BTreeSet<usize> = c0.iter().map(|&(_, z)| z).collect();
    stats.z0 = Some(z0.len());
    if z0.len() > d {
        ctx.stats.push(stats);
        return Err(ctx.fail("|Z0| <= d", z0.len(), d, depth));
    }
    // Join the fully adjacent components of each separator.
    let mut c0p: Vec<Vec<usize>> = Vec::new();
    for &z in &z0 {
        let mut full: Vec<&Vec<usize>> = Vec::new();
        for (f, zf) in &c0 {
            if *zf != z {
                continue;
            }
            if f.iter().all(|&v| joint[z].iter().all(|&u| g.has_edge(u, v))) {
                full.push(f);
            } else {
                c0p.push(f.clone());
            }
        }
        let covered: usize = full.iter().map(|f| f.len()).sum();
        if covered + joint[z].len() == g.n() && full.len() > 1 {
            // Nothing would be left to contract: join only the members with
            // an interval completion.
            let mut joined: Vec<usize> = Vec::new();
            for f in full {
                if build_pq_tree(&completion_of(g, f).graph).is_some() {
                    joined = union(&joined, f);
                } else {
                    c0p.push(f.clone());
                }
            }
            if !joined.is_empty() {
                c0p.push(joined);
            }
        } else if !full.is_empty() {
            c0p.push(full.into_iter().fold(Vec::new(), |acc, f| union(&acc, f)));
        }
    }
    c0p.sort();
    let completions: Vec<Completion> = c0p.iter().map(|f| completion_of(g, f)).collect();
    let c1: Vec<usize> = (0..c0p.len()).filter(|&i| build_pq_tree(&completions[i].graph).is_some()).collect();
    // Interval completions form the collection.
    if !c1.is_empty() {
        stats.outcome = Provenance::Separator;
        stats.size = c1.len();
        ctx.stats.push(stats);
        if c1.len() > 2 * d {
            return Err(ctx.fail("s <= 2d", c1.len(), 2 * d, depth));
        }
        return Ok(c1.into_iter().map(|i| (c0p[i].clone(), Provenance::Separator)).collect());
    }
    // Otherwise recurse into every completion.
    stats.outcome = Provenance::Recursive;
    let at = ctx.stats.len();
    ctx.stats.push(stats);
    let mut out = Vec::new();
    for (f, comp) in c0p.iter().zip(&completions) {
        let inner = extract(&comp.graph, ctx, depth + 1)?;
        for (x, _) in inner {
            if x.iter().all(|&v| v < comp.fragment_len) {
                let mut mapped: Vec<usize> = x.iter().map(|&v| comp.origin[v]).collect();
                mapped.sort_unstable();
                debug_assert!(is_subset(&mapped, f));
                out.push((mapped, Provenance::Recursive));
            }
        }
    }
    ctx.stats[at].size = out.len();
    if out.is_empty() || out.len() > 2 * d {
        return Err(ctx.fail("0 < s <= 2d", out.len(), 2 * d, depth));
    }
    Ok(out)
}

/// Inclusion-minimal `Z ⊆ a ∩ b` separating `a Δ b` from `L \ Z` for every
/// `L` in `others`.
fn joint_separators(g: &Graph, a: &[usize], b: &[usize], others: &[&Vec<usize>]) -> Vec<Vec<usize>> {
    let k = intersect(a, b);
    let sym = union(&difference(a, b), &difference(b, a));
    let mut removed = vec![false; g.n()];
    for &v in &k {
        removed[v] = true;
    }
    let (comp, count) = g.components_without(&removed);
    let mut hit = vec![false; count];
    for &v in &sym {
        hit[comp[v]] = true;
    }
    let mut bad = vec![false; count];
    let mut in_other = vec![false; g.n()];
    for l in others {
        for &v in l.iter() {
            in_other[v] = true;
            if !removed[v] {
                bad[comp[v]] = true;
            }
        }
    }
    if (0..count).any(|c| hit[c] && bad[c]) {
        return Vec::new();
    }
    let touches = |r: usize, flags: &[bool]| g.neighbors(r).iter().any(|&u| !removed[u] && flags[comp[u]]);
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    // All of K touching a relevant component.
    candidates.push(k.iter().copied().filter(|&r| touches(r, &hit)).collect());
    // Keep every vertex of K that can join the relevant side harmlessly.
    let keep: Vec<usize> = k.iter().copied().filter(|&r| !in_other[r] && !touches(r, &bad)).collect();
    if keep.iter().any(|&r| touches(r, &hit)) {
        candidates.push(difference(&k, &keep));
    }
    candidates.retain(|z| {
        !z.is_empty()
            && others.iter().all(|l| {
                let target = difference(l, z);
                crate::graph::separates(g, z, &sym, &target)
            })
    });
    candidates.sort();
    candidates.dedup();
    let minimal: Vec<Vec<usize>> = candidates
        .iter()
        .filter(|z| !candidates.iter().any(|y| y != *z && is_subset(y, z)))
        .cloned()
        .collect();
    minimal
}

/// A terminal set: the part of an attachment set of a lower-level fragment
/// that lies in one fragment of a higher level. Levels count from 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TerminalSet {
    pub level: usize,
    pub from_level: usize,
    /// Index of the containing fragment within `level`.
    pub fragment: usize,
    /// Index of the fragment in `from_level` whose attachment set this was.
    pub source: usize,
    /// Position of that attachment set in the source's chain.
    pub chain_index: usize,
    pub vertices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub fragments: Vec<Fragment>,
}

/// One level as sets: fragment vertex sets, and each fragment with its
/// terminal sets.
pub type LevelView = (BTreeSet<Vec<usize>>, BTreeSet<(Vec<usize>, Vec<Vec<usize>>)>);

/// Deserialized values carry no completions or call statistics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Decomposition {
    pub n: usize,
    pub levels: Vec<Level>,
    pub terminal_sets: Vec<TerminalSet>,
    #[serde(skip)]
    pub completions: Vec<Vec<Completion>>,
    #[serde(skip)]
    pub stats: Vec<CallStats>,
}

impl Decomposition {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Terminal sets lying in fragment `f` of level `k` (1-based).
    pub fn terminal_indices(&self, k: usize, f: usize) -> Vec<usize> {
        (0..self.terminal_sets.len())
            .filter(|&i| self.terminal_sets[i].level == k && self.terminal_sets[i].fragment == f)
            .collect()
    }

    /// Level-by-level fragment sets and terminal sets after applying `perm`
    /// to the vertices; for comparisons up to relabeling.
    pub fn relabeled_view(&self, perm: &[usize]) -> Vec<LevelView> {
        let map = |s: &[usize]| {
            let mut t: Vec<usize> = s.iter().map(|&v| perm[v]).collect();
            t.sort_unstable();
            t
        };
        self.levels
            .iter()
            .enumerate()
            .map(|(li, level)| {
                let frags = level.fragments.iter().map(|f| map(&f.vertices)).collect();
                let terms = level
                    .fragments
                    .iter()
                    .enumerate()
                    .map(|(fi, f)| {
                        let mut ts: Vec<Vec<usize>> = self
                            .terminal_indices(li + 1, fi)
                            .into_iter()
                            .map(|t| {
                                let ts = &self.terminal_sets[t];
                                let mut v = map(&ts.vertices);
                                v.insert(0, usize::MAX - ts.from_level);
                                v
                            })
                            .collect();
                        ts.sort();
                        (map(&f.vertices), ts)
                    })
                    .collect();
                (frags, terms)
            })
            .collect()
    }
}

struct Pending {
    from_level: usize,
    source: usize,
    chain_index: usize,
    vertices: Vec<usize>,
}

/// Level decomposition: repeatedly extract fragments from the non-interval
/// components until the remainder is interval; its components form the
/// innermost level.
pub fn canonical_decomposition(g: &Graph, d: usize) -> Result<Decomposition, DecomposeError> {
    if is_chordal(g).is_none() {
        return Err(DecomposeError::NotChordal);
    }
    let n = g.n();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut levels: Vec<Level> = Vec::new();
    let mut completions: Vec<Vec<Completion>> = Vec::new();
    let mut terminal_sets = Vec::new();
    let mut pending: Vec<Pending> = Vec::new();
    let mut stats = Vec::new();
    while !alive.is_empty() {
        let level = levels.len() + 1;
        let (h, map) = g.induced(&alive);
        let comps = h.components();
        let dense: Vec<(Graph, Vec<usize>)> = comps.iter().map(|c| h.induced(c)).collect();
        let flat: Vec<bool> = dense.iter().map(|(c, _)| build_pq_tree(c).is_some()).collect();
        let last = flat.iter().all(|&x| x);
        let mut found: Vec<Fragment> = Vec::new();
        if last {
            for c in &comps {
                let vertices: Vec<usize> = c.iter().map(|&v| map[v]).collect();
                found.push(Fragment { vertices, provenance: Provenance::Residual, attachments: Vec::new() });
            }
        } else {
            for ((cg, cmap), &is_flat) in dense.iter().zip(&flat) {
                if is_flat {
                    continue;
                }
                let coll = extract_fragments_at(cg, d, level)?;
                stats.extend(coll.stats);
                for f in coll.fragments {
                    let vertices: Vec<usize> = f.vertices.iter().map(|&v| map[cmap[v]]).collect();
                    let attachments = f
                        .attachments
                        .iter()
                        .map(|a| {
                            let mut t: Vec<usize> = a.iter().map(|&v| map[cmap[v]]).collect();
                            t.sort_unstable();
                            t
                        })
                        .collect();
                    found.push(Fragment { vertices, provenance: f.provenance, attachments });
                }
            }
        }
        for f in &mut found {
            f.vertices.sort_unstable();
        }
        found.sort_by(|a, b| a.vertices[0].cmp(&b.vertices[0]));
        let fail = |assertion: &str, value: usize, bound: usize| DecomposeError::NotTGraph {
            d,
            evidence: Evidence { assertion: assertion.into(), value, bound, level, depth: 0 },
        };
        if found.is_empty() {
            return Err(fail("level is nonempty", 0, 1));
        }
        if let Some(f) = found.iter().find(|f| !is_chain(&f.attachments)) {
            return Err(fail("attachment sets form a chain", f.attachments.len(), 0));
        }
        // Completions relative to the current residual.
        let mut local = vec![usize::MAX; n];
        for (i, &v) in map.iter().enumerate() {
            local[v] = i;
        }
        let comps_here: Vec<Completion> = found
            .iter()
            .map(|f| {
                let loc: Vec<usize> = f.vertices.iter().map(|&v| local[v]).collect();
                let mut c = completion_of(&h, &loc);
                for o in c.origin.iter_mut() {
                    *o = map[*o];
                }
                c
            })
            .collect();
        // Split inherited terminal sets among the new fragments.
        let mut owner = vec![usize::MAX; n];
        for (fi, f) in found.iter().enumerate() {
            for &v in &f.vertices {
                owner[v] = fi;
            }
        }
        for p in &mut pending {
            let mut by_frag: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
            for &v in &p.vertices {
                if owner[v] != usize::MAX {
                    by_frag.entry(owner[v]).or_default().push(v);
                }
            }
            for (fi, vertices) in by_frag {
                terminal_sets.push(TerminalSet {
                    level,
                    from_level: p.from_level,
                    fragment: fi,
                    source: p.source,
                    chain_index: p.chain_index,
                    vertices,
                });
            }
            p.vertices.retain(|&v| owner[v] == usize::MAX);
        }
        pending.retain(|p| !p.vertices.is_empty());
        for (fi, f) in found.iter().enumerate() {
            for (ci, a) in f.attachments.iter().enumerate() {
                pending.push(Pending { from_level: level, source: fi, chain_index: ci, vertices: a.clone() });
            }
        }
        let before = alive.len();
        alive.retain(|&v| owner[v] == usize::MAX);
        debug_assert!(alive.len() < before);
        levels.push(Level { fragments: found });
        completions.push(comps_here);
        if last {
            break;
        }
    }
    debug_assert!(pending.is_empty());
    terminal_sets.sort_by(|a, b| {
        (a.level, a.fragment, a.from_level, a.source, a.chain_index).cmp(&(b.level, b.fragment, b.from_level, b.source, b.chain_index))
    });
    Ok(Decomposition { n, levels, terminal_sets, completions, stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn claw() -> Graph {
        Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap()
    }

    fn spider() -> Graph {
        // center 0, arms 0-1-2, 0-3-4, 0-5-6
        Graph::from_edges(7, &[(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6)]).unwrap()
    }

    #[test]
    fn relations_on_small_graphs() {
        let p = Graph::path(4);
        let cl = vec![vec![0, 1], vec![1, 2], vec![2, 3]];
        assert_eq!(clique_preceq(&p, &cl, 0, 1), Some(2));
        assert!(!clique_approx(&p, &cl, 0, 1));
        assert_eq!(clique_preceq(&p, &cl, 1, 0), None);
        let c = claw();
        let cl = vec![vec![0, 1], vec![0, 2], vec![0, 3]];
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(clique_preceq(&c, &cl, i, j).is_some());
                    assert!(clique_approx(&c, &cl, i, j));
                }
            }
        }
        assert_eq!(clique_preceq(&c, &cl, 1, 1), None);
    }

    #[test]
    fn extraction_examples() {
        let p5 = Graph::path(5);
        let f = extract_fragments(&p5, 2).unwrap();
        let sets: Vec<Vec<usize>> = f.fragments.iter().map(|x| x.vertices.clone()).collect();
        assert_eq!(sets, vec![vec![0], vec![4]]);
        assert!(f.fragments.iter().all(|x| x.provenance == Provenance::Simplicial));
        assert_eq!(f.fragments[0].attachments, vec![vec![1]]);

        let f = extract_fragments(&claw(), 3).unwrap();
        assert_eq!(f.fragments.len(), 1);
        assert_eq!(f.fragments[0].vertices, vec![1, 2, 3]);
        assert_eq!(f.fragments[0].provenance, Provenance::Separator);
        assert_eq!(f.fragments[0].attachments, vec![vec![0]]);

        let f = extract_fragments(&spider(), 3).unwrap();
        let sets: Vec<Vec<usize>> = f.fragments.iter().map(|x| x.vertices.clone()).collect();
        assert_eq!(sets, vec![vec![2], vec![4], vec![6]]);
    }

    #[test]
    fn stacked_leaf_cliques_form_one_fragment() {
        // Center 0 with arms to 1, 3, 5; each arm ends in two pendant cliques.
        let g = Graph::from_edges(
            10,
            &[(0, 1), (0, 3), (0, 5), (1, 2), (1, 7), (3, 4), (3, 8), (5, 6), (5, 9)],
        )
        .unwrap();
        let f = extract_fragments(&g, 3).unwrap();
        let sets: Vec<Vec<usize>> = f.fragments.iter().map(|x| x.vertices.clone()).collect();
        assert_eq!(sets, vec![vec![2, 7], vec![4, 8], vec![6, 9]]);
        assert!(f.fragments.iter().all(|x| x.provenance == Provenance::Separator));
        assert_eq!(f.stats[0].z0, Some(3));
        // With a single such arm the leaf tips of the plain arms win.
        let g = Graph::from_edges(9, &[(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6), (5, 7), (5, 8)]).unwrap();
        let f = extract_fragments(&g, 3).unwrap();
        let sets: Vec<Vec<usize>> = f.fragments.iter().map(|x| x.vertices.clone()).collect();
        assert_eq!(sets, vec![vec![2], vec![4]]);
    }

    #[test]
    fn completion_shape_and_errors() {
        let p3 = Graph::path(3);
        let c = completion(&p3, &[0], &[1]).unwrap();
        assert_eq!(c.graph.edges(), vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!((c.contracted, c.tail), (2, 3));
        assert_eq!(c.separator(), &[1]);
        assert!(completion(&p3, &[0, 2], &[1]).is_err());
        assert!(completion(&p3, &[0], &[2]).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let dec = canonical_decomposition(&Graph::path(6), 2).unwrap();
        assert_eq!(dec.depth(), 1);
        assert!(dec.terminal_sets.is_empty());
        let dec = canonical_decomposition(&spider(), 3).unwrap();
        assert_eq!(dec.depth(), 2);
        assert_eq!(dec.levels[1].fragments.len(), 1);
        assert_eq!(dec.levels[1].fragments[0].vertices, vec![0, 1, 3, 5]);
        let ts: Vec<Vec<usize>> = dec.terminal_sets.iter().map(|t| t.vertices.clone()).collect();
        assert_eq!(ts, vec![vec![1], vec![3], vec![5]]);
        assert!(dec.terminal_sets.iter().all(|t| t.level == 2 && t.from_level == 1));
        assert!(canonical_decomposition(&Graph::cycle(4), 2).is_err());
        let json = dec.to_json();
        assert!(json.contains("\"terminal_sets\""));
    }

    #[test]
    fn universal_separator_keeps_non_interval_parts_apart() {
        // 14 and 15 are universal; below them hang a three-leaf star and a
        // two-clique chain. Both parts are fully adjacent to {14, 15}.
        let e = [
            (0, 1), (0, 4), (0, 7), (0, 8), (0, 12), (0, 14), (0, 15), (0, 16), (0, 19), (0, 21), (0, 22),
            (0, 24), (0, 25), (1, 7), (1, 11), (1, 12), (1, 14), (1, 15), (1, 19), (1, 22), (1, 23), (1, 24),
            (1, 25), (2, 10), (2, 14), (2, 15), (2, 17), (2, 18), (3, 10), (3, 14), (3, 15), (3, 17), (4, 21),
            (4, 24), (6, 20), (7, 11), (7, 12), (7, 14), (7, 15), (7, 16), (7, 19), (7, 21), (7, 22), (7, 23),
            (7, 24), (7, 25), (8, 22), (9, 15), (9, 20), (9, 25), (10, 14), (10, 15), (10, 17), (10, 18),
            (11, 14), (11, 15), (11, 19), (11, 23), (11, 25), (12, 14), (12, 15), (12, 16), (12, 19), (12, 21),
            (12, 24), (12, 25), (13, 15), (14, 15), (14, 16), (14, 17), (14, 18), (14, 19), (14, 22), (14, 23),
            (14, 24), (14, 25), (15, 16), (15, 17), (15, 18), (15, 19), (15, 20), (15, 22), (15, 23), (15, 24),
            (15, 25), (16, 21), (16, 24), (16, 25), (17, 18), (19, 23), (19, 24), (19, 25), (20, 25), (21, 24),
            (21, 25), (22, 24), (23, 25), (24, 25),
        ];
        let g = Graph::from_edges(26, &e).unwrap();
        let dec = canonical_decomposition(&g, 4).unwrap();
        let third = &dec.levels[2].fragments;
        assert_eq!(third.len(), 1);
        assert_eq!(third[0].vertices, vec![2, 3, 10, 17, 18]);
        assert_eq!(third[0].provenance, Provenance::Separator);
    }

    #[test]
    fn attachment_chain() {
        // Fragment {3,4} under clique {0,1,2}: 3 sees {0,1,2}, 4 sees {0}.
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (1, 2), (3, 0), (3, 1), (3, 2), (4, 0), (3, 4)]).unwrap();
        assert_eq!(attachment_sets(&g, &[3, 4]), vec![vec![0], vec![0, 1, 2]]);
    }
}
