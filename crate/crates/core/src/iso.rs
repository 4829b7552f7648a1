//! Isomorphism of T-graphs through the automorphism group of a combined
//! canonical decomposition.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::decompose::{canonical_decomposition, Completion, DecomposeError, Decomposition, Evidence};
use crate::graph::{is_chordal, Graph};
use crate::harness::is_isomorphism;
use crate::interval::{marked_action_group, marked_isomorphism, IntervalError, MarkedIntervalGraph};
use crate::perm::{build_group, find_block_swap, tower_with_stats, GeneratedGroup, MembershipPredicate, PermError, Permutation};
use crate::setfamily::{max_antichain_size, SetFamily};

/// A point of the action domain: a fragment or a terminal set of one side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Point {
    Fragment { side: usize, level: usize, index: usize },
    Terminal { side: usize, index: usize },
}

/// Decompositions of several graphs on one action domain `X ∪ A`. Points
/// are laid out level by level: fragments, then terminal sets, each ordered
/// by side.
pub struct CombinedDecomposition<'a> {
    pub decs: Vec<&'a Decomposition>,
    pub points: Vec<Point>,
    /// Per level (0-based): fragment points and terminal points.
    pub level_fragments: Vec<Vec<usize>>,
    pub level_terminals: Vec<Vec<usize>>,
    fragment_point: HashMap<(usize, usize, usize), usize>,
    terminal_point: Vec<Vec<usize>>,
}

impl<'a> CombinedDecomposition<'a> {
    pub fn depth(&self) -> usize {
        self.level_fragments.len()
    }

    pub fn domain_size(&self) -> usize {
        self.points.len()
    }

    /// Domain points belonging to side `side`.
    pub fn side_points(&self, side: usize) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&p| match self.points[p] {
                Point::Fragment { side: s, .. } | Point::Terminal { side: s, .. } => s == side,
            })
            .collect()
    }

    pub fn fragment_point(&self, side: usize, level: usize, index: usize) -> usize {
        self.fragment_point[&(side, level, index)]
    }

    pub fn terminal_point(&self, side: usize, index: usize) -> usize {
        self.terminal_point[side][index]
    }

    fn completion(&self, p: usize) -> &Completion {
        match self.points[p] {
            Point::Fragment { side, level, index } => &self.decs[side].completions[level][index],
            Point::Terminal { .. } => panic!("not a fragment point"),
        }
    }

    /// Terminal points inside fragment point `p`, by origin level then index.
    pub fn terminals_of(&self, p: usize) -> Vec<usize> {
        match self.points[p] {
            Point::Fragment { side, level, index } => {
                let dec = self.decs[side];
                let mut idx = dec.terminal_indices(level + 1, index);
                idx.sort_by_key(|&t| (dec.terminal_sets[t].from_level, t));
                idx.into_iter().map(|t| self.terminal_point[side][t]).collect()
            }
            Point::Terminal { .. } => Vec::new(),
        }
    }

    fn terminal(&self, p: usize) -> &crate::decompose::TerminalSet {
        match self.points[p] {
            Point::Terminal { side, index } => &self.decs[side].terminal_sets[index],
            Point::Fragment { .. } => panic!("not a terminal point"),
        }
    }

    /// Fragment point of the attachment set a terminal point came from,
    /// with its position in the attachment chain.
    pub fn origin(&self, p: usize) -> (usize, usize) {
        let side = match self.points[p] {
            Point::Terminal { side, .. } => side,
            Point::Fragment { .. } => panic!("not a terminal point"),
        };
        let t = self.terminal(p);
        (self.fragment_point(side, t.from_level - 1, t.source), t.chain_index)
    }

    /// The completion of fragment point `p` with its terminal sets as marked
    /// families; `singletons` puts every terminal set in its own family,
    /// in the order given.
    fn marked(&self, p: usize, order: Option<&[usize]>) -> Result<MarkedIntervalGraph, IntervalError> {
        let c = self.completion(p);
        let mut local: HashMap<usize, usize> = HashMap::new();
        for (i, &v) in c.origin[..c.fragment_len].iter().enumerate() {
            local.insert(v, i);
        }
        let to_local = |t: usize| -> Vec<usize> { self.terminal(t).vertices.iter().map(|v| local[v]).collect() };
        let families: Vec<Vec<Vec<usize>>> = match order {
            Some(order) => order.iter().map(|&t| vec![to_local(t)]).collect(),
            None => {
                let level = match self.points[p] {
                    Point::Fragment { level, .. } => level,
                    Point::Terminal { .. } => unreachable!(),
                };
                let ts = self.terminals_of(p);
                (1..=level).map(|j| ts.iter().filter(|&&t| self.terminal(t).from_level == j).map(|&t| to_local(t)).collect()).collect()
            }
        };
        MarkedIntervalGraph::new(c.graph.clone(), families, Some(c.tail))
    }
}

/// Merges decompositions level by level; `None` when depths differ.
pub fn combine<'a>(decs: &[&'a Decomposition]) -> Option<CombinedDecomposition<'a>> {
    let depth = decs.first()?.depth();
    if decs.iter().any(|d| d.depth() != depth) {
        return None;
    }
    let mut points = Vec::new();
    let mut level_fragments = vec![Vec::new(); depth];
    let mut level_terminals = vec![Vec::new(); depth];
    let mut fragment_point = HashMap::new();
    let mut terminal_point: Vec<Vec<usize>> = decs.iter().map(|d| vec![usize::MAX; d.terminal_sets.len()]).collect();
    for k in 0..depth {
        for (side, dec) in decs.iter().enumerate() {
            for index in 0..dec.levels[k].fragments.len() {
                fragment_point.insert((side, k, index), points.len());
                level_fragments[k].push(points.len());
                points.push(Point::Fragment { side, level: k, index });
            }
        }
        for (side, dec) in decs.iter().enumerate() {
            for (index, t) in dec.terminal_sets.iter().enumerate() {
                if t.level == k + 1 {
                    terminal_point[side][index] = points.len();
                    level_terminals[k].push(points.len());
                    points.push(Point::Terminal { side, index });
                }
            }
        }
    }
    Some(CombinedDecomposition {
        decs: decs.to_vec(),
        points,
        level_fragments,
        level_terminals,
        fragment_point,
        terminal_point,
    })
}

fn invariant(m: &MarkedIntervalGraph) -> (usize, usize, Vec<usize>, Vec<usize>) {
    let mut deg: Vec<usize> = (0..m.host.n()).map(|v| m.host.degree(v)).collect();
    deg.sort_unstable();
    (m.host.n(), m.host.m(), m.families.iter().map(Vec::len).collect(), deg)
}

/// Generators of `Λ_k` on the whole domain: isomorphism classes of level
/// `k` fragments with witness swaps, plus each fragment's marked group on
/// its terminal sets.
pub fn level_group(cd: &CombinedDecomposition, k: usize) -> Result<Vec<Permutation>, IntervalError> {
    let m = cd.domain_size();
    let frags = &cd.level_fragments[k];
    let marked: Vec<MarkedIntervalGraph> = frags.iter().map(|&p| cd.marked(p, None)).collect::<Result<_, _>>()?;
    let terms: Vec<Vec<usize>> = frags.iter().map(|&p| cd.terminals_of(p)).collect();
    let mut gens = Vec::new();
    for (i, mx) in marked.iter().enumerate() {
        for g in marked_action_group(mx)?.generators() {
            let mut images: Vec<usize> = (0..m).collect();
            for (a, &t) in terms[i].iter().enumerate() {
                images[t] = terms[i][g.apply(a)];
            }
            gens.push(Permutation::from_images(images).expect("permutation"));
        }
    }
    let inv: Vec<_> = marked.iter().map(invariant).collect();
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..frags.len() {
        let mut placed = false;
        for &r in &reps {
            if inv[r] != inv[i] {
                continue;
            }
            if let Some(w) = marked_isomorphism(&marked[r], &marked[i])? {
                let mut images: Vec<usize> = (0..m).collect();
                images[frags[r]] = frags[i];
                images[frags[i]] = frags[r];
                for (a, &b) in w.sets.iter().enumerate() {
                    images[terms[r][a]] = terms[i][b];
                    images[terms[i][b]] = terms[r][a];
                }
                gens.push(Permutation::from_images(images).expect("permutation"));
                placed = true;
                break;
            }
        }
        if !placed {
            reps.push(i);
        }
    }
    Ok(gens)
}

/// Whether `p` carries the attachment sets of level-`i` fragments that lie
/// in level-`j` terminal sets of size `r` to the corresponding ones.
pub fn check_a2(cd: &CombinedDecomposition, p: &Permutation, i: usize, j: usize, r: usize) -> bool {
    stage_points(cd, i, j, r).iter().all(|&a| {
        let (x, c) = cd.origin(a);
        cd.origin(p.apply(a)) == (p.apply(x), c)
    })
}

fn stage_points(cd: &CombinedDecomposition, i: usize, j: usize, r: usize) -> Vec<usize> {
    cd.level_terminals[j]
        .iter()
        .copied()
        .filter(|&a| {
            let t = cd.terminal(a);
            t.from_level == i + 1 && t.vertices.len() == r
        })
        .collect()
}

/// Tower statistics of one group computation.
#[derive(Clone, Debug, Default, Serialize)]
pub struct GroupStats {
    pub stages: usize,
    pub max_index: String,
    pub max_level_size: usize,
    pub max_antichain: usize,
}

fn factorial_saturating(k: usize) -> u64 {
    (1..=k as u64).try_fold(1u64, |a, b| a.checked_mul(b)).unwrap_or(u64::MAX)
}

/// The permutations of `X ∪ A` satisfying both conditions.
pub fn decomposition_autgroup(cd: &CombinedDecomposition) -> Result<(GeneratedGroup, GroupStats), IntervalError> {
    let m = cd.domain_size();
    let mut gens = Vec::new();
    for k in 0..cd.depth() {
        gens.extend(level_group(cd, k)?);
    }
    let g0 = build_group(m, &gens)?;
    let s = cd.level_fragments.iter().map(Vec::len).max().unwrap_or(0);
    let t = cd
        .level_fragments
        .iter()
        .flatten()
        .map(|&p| {
            let sets: Vec<Vec<usize>> = cd.terminals_of(p).iter().map(|&a| cd.terminal(a).vertices.clone()).collect();
            max_antichain_size(&SetFamily { ground: cd.decs.iter().map(|d| d.n).max().unwrap_or(0), annotations: vec![0; sets.len()], sets })
        })
        .max()
        .unwrap_or(0);
    let bound = factorial_saturating(s).saturating_mul(factorial_saturating(s * t.max(1)));
    let mut schedule = Vec::new();
    for i in 0..cd.depth() {
        for j in i + 1..cd.depth() {
            let mut sizes = Vec::new();
            for &a in &cd.level_terminals[j] {
                let ts = cd.terminal(a);
                if ts.from_level == i + 1 {
                    sizes.push(ts.vertices.len());
                }
            }
            sizes.sort_unstable();
            sizes.dedup();
            for r in sizes {
                schedule.push((i, j, r));
            }
        }
    }
    let preds: Vec<MembershipPredicate> = schedule
        .iter()
        .map(|&(i, j, r)| {
            let pts = stage_points(cd, i, j, r);
            let origins: Vec<(usize, usize)> = pts.iter().map(|&a| cd.origin(a)).collect();
            let pts2 = pts.clone();
            let origins2 = origins.clone();
            MembershipPredicate::new(format!("level {} into level {}, size {r}", i + 1, j + 1), bound, move |p: &Permutation| {
                pts.iter().zip(&origins).all(|(&a, &(x, c))| cd.origin(p.apply(a)) == (p.apply(x), c))
            })
            .with_key(move |p: &Permutation| {
                let mut rel: Vec<(usize, usize, usize)> =
                    pts2.iter().zip(&origins2).map(|(&a, &(x, c))| (p.apply(a), p.apply(x), c)).collect();
                rel.sort_unstable();
                rel.into_iter().flat_map(|(a, x, c)| [a as u64, x as u64, c as u64]).collect()
            })
        })
        .collect();
    let (group, stages) = tower_with_stats(&g0, &preds)?;
    let stats = GroupStats {
        stages: stages.len(),
        max_index: stages.iter().map(|s| s.index.clone()).max().unwrap_or_default().to_string(),
        max_level_size: s,
        max_antichain: t,
    };
    Ok((group, stats))
}

/// A vertex automorphism of the disjoint union of the sides whose action on
/// fragments and terminal sets is `p`.
pub fn lift_to_vertices(cd: &CombinedDecomposition, p: &Permutation) -> Result<Option<Vec<usize>>, IntervalError> {
    let offsets: Vec<usize> = cd.decs.iter().scan(0, |acc, d| {
        let o = *acc;
        *acc += d.n;
        Some(o)
    }).collect();
    let total: usize = cd.decs.iter().map(|d| d.n).sum();
    let mut phi = vec![usize::MAX; total];
    for k in 0..cd.depth() {
        for &x in &cd.level_fragments[k] {
            let y = p.apply(x);
            let tx = cd.terminals_of(x);
            let ty: Vec<usize> = tx.iter().map(|&a| p.apply(a)).collect();
            let (mx, my) = (cd.marked(x, Some(&tx))?, cd.marked(y, Some(&ty))?);
            let Some(w) = marked_isomorphism(&mx, &my)? else {
                return Ok(None);
            };
            let (cx, cy) = (cd.completion(x), cd.completion(y));
            let side = |q: usize| match cd.points[q] {
                Point::Fragment { side, .. } | Point::Terminal { side, .. } => side,
            };
            let (ox, oy) = (offsets[side(x)], offsets[side(y)]);
            for i in 0..cx.fragment_len {
                let j = w.vertices[i];
                if j >= cy.fragment_len {
                    return Ok(None);
                }
                phi[ox + cx.origin[i]] = oy + cy.origin[j];
            }
        }
    }
    Ok((phi.iter().all(|&v| v != usize::MAX)).then_some(phi))
}

/// Outcome of an isomorphism test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Vertex `v` of the first graph maps to `witness[v]`.
    Isomorphic(Vec<usize>),
    NotIsomorphic,
    /// Some assertion valid for T-graphs with `d` leaves failed; says
    /// nothing about isomorphism.
    NotTGraph(Evidence),
}

impl Verdict {
    pub fn is_isomorphic(&self) -> Option<bool> {
        match self {
            Verdict::Isomorphic(_) => Some(true),
            Verdict::NotIsomorphic => Some(false),
            Verdict::NotTGraph(_) => None,
        }
    }

    pub fn report(&self, d: usize) -> VerdictReport {
        let (verdict, witness, evidence) = match self {
            Verdict::Isomorphic(w) => ("isomorphic", Some(w.clone()), None),
            Verdict::NotIsomorphic => ("not_isomorphic", None, None),
            Verdict::NotTGraph(e) => ("not_t_graph", None, Some(e.clone())),
        };
        VerdictReport { verdict: verdict.to_string(), witness, evidence, d }
    }
}

/// Serialized form of a [`Verdict`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub verdict: String,
    pub witness: Option<Vec<usize>>,
    pub evidence: Option<Evidence>,
    pub d: usize,
}

fn evidence(assertion: &str, value: usize, bound: usize) -> Evidence {
    Evidence { assertion: assertion.into(), value, bound, level: 0, depth: 0 }
}

fn from_decompose(e: DecomposeError) -> Verdict {
    match e {
        DecomposeError::NotTGraph { evidence, .. } => Verdict::NotTGraph(evidence),
        DecomposeError::NotChordal => Verdict::NotTGraph(evidence("graph is chordal", 0, 1)),
        DecomposeError::BadSeparator(s) => Verdict::NotTGraph(evidence(&format!("separator: {s}"), 0, 0)),
    }
}

fn from_interval(e: IntervalError) -> Verdict {
    match e {
        IntervalError::Group(PermError::IndexBoundExceeded { bound, stage }) => Verdict::NotTGraph(evidence(
            &format!("tower stage index within bound ({})", stage.unwrap_or_default()),
            0,
            bound.min(usize::MAX as u64) as usize,
        )),
        IntervalError::NotInterval => Verdict::NotTGraph(evidence("fragment completion is interval", 0, 1)),
        other => Verdict::NotTGraph(evidence(&format!("fragment structure: {other}"), 0, 0)),
    }
}

/// Decides isomorphism of two T-graphs whose tree has `d` leaves.
pub fn is_isomorphic(g1: &Graph, g2: &Graph, d: usize) -> Verdict {
    if is_chordal(g1).is_none() || is_chordal(g2).is_none() {
        return Verdict::NotTGraph(evidence("graph is chordal", 0, 1));
    }
    let dec1 = match canonical_decomposition(g1, d) {
        Ok(x) => x,
        Err(e) => return from_decompose(e),
    };
    let dec2 = match canonical_decomposition(g2, d) {
        Ok(x) => x,
        Err(e) => return from_decompose(e),
    };
    if g1.n() != g2.n() || g1.m() != g2.m() {
        return Verdict::NotIsomorphic;
    }
    if g1.n() == 0 {
        return Verdict::Isomorphic(Vec::new());
    }
    let Some(cd) = combine(&[&dec1, &dec2]) else {
        return Verdict::NotIsomorphic;
    };
    let group = match decomposition_autgroup(&cd) {
        Ok((g, _)) => g,
        Err(e) => return from_interval(e),
    };
    let Some(swap) = find_block_swap(&group, &cd.side_points(0), &cd.side_points(1)) else {
        return Verdict::NotIsomorphic;
    };
    let phi = match lift_to_vertices(&cd, &swap) {
        Ok(Some(phi)) => phi,
        Ok(None) => panic!("decomposition automorphism without a vertex lift"),
        Err(e) => return from_interval(e),
    };
    let n = g1.n();
    let witness: Vec<usize> = phi[..n].iter().map(|&v| v - n).collect();
    assert!(is_isomorphism(g1, g2, &witness), "lifted witness fails verification");
    Verdict::Isomorphic(witness)
}

/// Tries `d = 2..=d_max` and returns the first verdict that is not
/// [`Verdict::NotTGraph`], with the `d` it was reached at.
pub fn is_isomorphic_upto(g1: &Graph, g2: &Graph, d_max: usize) -> (Verdict, usize) {
    let mut last = (Verdict::NotTGraph(evidence("d_max >= 2", d_max, 2)), d_max);
    for d in 2..=d_max.max(2) {
        let v = is_isomorphic(g1, g2, d);
        if !matches!(v, Verdict::NotTGraph(_)) {
            return (v, d);
        }
        last = (v, d);
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{brute_force_autgroup_limit, random_relabel};

    fn spider() -> Graph {
        Graph::from_edges(7, &[(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6)]).unwrap()
    }

    #[test]
    fn verdict_examples() {
        let s = spider();
        match is_isomorphic(&s, &s, 3) {
            Verdict::Isomorphic(w) => assert!(is_isomorphism(&s, &s, &w)),
            v => panic!("{v:?}"),
        }
        let claw = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(is_isomorphic(&Graph::path(4), &claw, 3), Verdict::NotIsomorphic);
        assert!(matches!(is_isomorphic(&Graph::path(4), &Graph::cycle(4), 3), Verdict::NotTGraph(_)));
        let (r, _) = random_relabel(&s, 5);
        assert!(matches!(is_isomorphic_upto(&s, &r, 4), (Verdict::Isomorphic(_), 2) | (Verdict::Isomorphic(_), 3)));
    }

    #[test]
    fn combine_and_level_groups() {
        let p = Graph::path(3);
        let d1 = canonical_decomposition(&p, 2).unwrap();
        let d2 = canonical_decomposition(&spider(), 3).unwrap();
        assert!(combine(&[&d1, &d2]).is_none());
        let cd = combine(&[&d2, &d2]).unwrap();
        assert_eq!(cd.domain_size(), 2 * (4 + 3));
        // Two isolated vertices: one residual fragment each, swappable.
        let e = canonical_decomposition(&Graph::new(1), 2).unwrap();
        let cd = combine(&[&e, &e]).unwrap();
        let (g, _) = decomposition_autgroup(&cd).unwrap();
        assert_eq!(g.order_u64(), 2);
    }

    #[test]
    fn decomposition_group_of_spider_pair() {
        let s = spider();
        let d = canonical_decomposition(&s, 3).unwrap();
        let cd = combine(&[&d, &d]).unwrap();
        let (g, _) = decomposition_autgroup(&cd).unwrap();
        let aut = brute_force_autgroup_limit(&s.disjoint_union(&s), 14).unwrap();
        assert_eq!(g.order(), aut.order());
        assert!(find_block_swap(&g, &cd.side_points(0), &cd.side_points(1)).is_some());
        let id = Permutation::identity(cd.domain_size());
        for i in 0..cd.depth() {
            for j in i + 1..cd.depth() {
                assert!(check_a2(&cd, &id, i, j, 1));
            }
        }
    }

    #[test]
    fn crossed_attachments_violate_a2() {
        let s = spider();
        let d = canonical_decomposition(&s, 3).unwrap();
        let cd = combine(&[&d]).unwrap();
        // Swap two tips but leave their terminal sets in place.
        let a = cd.fragment_point(0, 0, 0);
        let b = cd.fragment_point(0, 0, 1);
        let p = Permutation::transposition(cd.domain_size(), a, b);
        assert!(!check_a2(&cd, &p, 0, 1, 1));
        let report = Verdict::NotIsomorphic.report(3);
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(json, r#"{"verdict":"not_isomorphic","witness":null,"evidence":null,"d":3}"#);
    }
}
