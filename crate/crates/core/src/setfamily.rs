//! Set families over a finite ground set: cardinality Venn signatures,
//! family automorphisms and their groups when antichains are bounded.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perm::{
    symmetric_on_classes, tower_of_groups, GeneratedGroup, MembershipPredicate, PermError,
    Permutation,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SetFamilyError {
    #[error("set {set} contains {element}, outside the ground set of size {ground}")]
    OutOfGround { set: usize, element: usize, ground: usize },
    #[error("{got} annotations for {sets} sets")]
    AnnotationCount { sets: usize, got: usize },
}

/// A list of subsets of `0..ground`; duplicates are distinct members.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetFamily {
    pub ground: usize,
    pub sets: Vec<Vec<usize>>,
    #[serde(default)]
    pub annotations: Vec<u64>,
}

/// Nonzero Venn cells: membership pattern (sorted set indices) to count.
pub type CellSignature = BTreeMap<Vec<usize>, usize>;

impl SetFamily {
    pub fn new(ground: usize, sets: Vec<Vec<usize>>) -> Result<Self, SetFamilyError> {
        let k = sets.len();
        Self::annotated(ground, sets, vec![0; k])
    }

    /// Member sets are sorted and deduplicated internally.
    pub fn annotated(ground: usize, mut sets: Vec<Vec<usize>>, annotations: Vec<u64>) -> Result<Self, SetFamilyError> {
        if annotations.len() != sets.len() {
            return Err(SetFamilyError::AnnotationCount { sets: sets.len(), got: annotations.len() });
        }
        for (i, s) in sets.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            if let Some(&e) = s.iter().find(|&&e| e >= ground) {
                return Err(SetFamilyError::OutOfGround { set: i, element: e, ground });
            }
        }
        Ok(SetFamily { ground, sets, annotations })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn annotation(&self, i: usize) -> u64 {
        self.annotations.get(i).copied().unwrap_or(0)
    }

    pub fn from_json(s: &str) -> Result<SetFamily, String> {
        let raw: SetFamily = serde_json::from_str(s).map_err(|e| e.to_string())?;
        let ann = if raw.annotations.is_empty() { vec![0; raw.sets.len()] } else { raw.annotations };
        SetFamily::annotated(raw.ground, raw.sets, ann).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    /// Membership pattern of every ground element.
    pub fn patterns(&self) -> Vec<Vec<usize>> {
        let mut pat = vec![Vec::new(); self.ground];
        for (i, s) in self.sets.iter().enumerate() {
            for &z in s {
                pat[z].push(i);
            }
        }
        pat
    }

    /// Family on the disjoint union of the ground sets.
    pub fn disjoint_union(&self, other: &SetFamily) -> SetFamily {
        let mut sets = self.sets.clone();
        sets.extend(other.sets.iter().map(|s| s.iter().map(|&z| z + self.ground).collect()));
        let mut annotations: Vec<u64> = (0..self.len()).map(|i| self.annotation(i)).collect();
        annotations.extend((0..other.len()).map(|i| other.annotation(i)));
        SetFamily { ground: self.ground + other.ground, sets, annotations }
    }
}

pub fn cell_signature(u: &SetFamily) -> CellSignature {
    let mut sig = CellSignature::new();
    for p in u.patterns() {
        *sig.entry(p).or_insert(0) += 1;
    }
    sig
}

fn image_pattern(p: &Permutation, pat: &[usize]) -> Vec<usize> {
    p.image_of_set(pat)
}

/// Whether the set-index permutation `p` preserves annotations and the
/// cardinality Venn diagram.
pub fn is_family_automorphism(u: &SetFamily, p: &Permutation) -> bool {
    if p.len() != u.len() {
        return false;
    }
    if (0..u.len()).any(|i| u.annotation(i) != u.annotation(p.apply(i))) {
        return false;
    }
    let sig = cell_signature(u);
    sig.iter().all(|(pat, &c)| sig.get(&image_pattern(p, pat)) == Some(&c))
}

/// A ground bijection `zeta` with `z in A  <=>  zeta(z) in p(A)`, if `p`
/// is a family automorphism.
pub fn induced_ground_bijection(u: &SetFamily, p: &Permutation) -> Option<Vec<usize>> {
    if !is_family_automorphism(u, p) {
        return None;
    }
    let pats = u.patterns();
    let mut by_pat: HashMap<&[usize], Vec<usize>> = HashMap::new();
    for (z, pat) in pats.iter().enumerate() {
        by_pat.entry(pat).or_default().push(z);
    }
    let mut zeta = vec![0; u.ground];
    for (pat, zs) in &by_pat {
        let img = image_pattern(p, pat);
        let targets = &by_pat[img.as_slice()];
        for (&z, &t) in zs.iter().zip(targets) {
            zeta[z] = t;
        }
    }
    Some(zeta)
}

/// Largest inclusion-incomparable subfamily (duplicates are comparable).
pub fn max_antichain_size(u: &SetFamily) -> usize {
    let k = u.len();
    // i < j in the order iff S_i is a proper subset, or equal with smaller index.
    let below = |i: usize, j: usize| {
        i != j
            && crate::graph::is_subset(&u.sets[i], &u.sets[j])
            && (u.sets[i].len() < u.sets[j].len() || i < j)
    };
    let adj: Vec<Vec<usize>> = (0..k).map(|i| (0..k).filter(|&j| below(i, j)).collect()).collect();
    k - bipartite_matching(k, &adj)
}

fn bipartite_matching(k: usize, adj: &[Vec<usize>]) -> usize {
    fn augment(v: usize, adj: &[Vec<usize>], seen: &mut [bool], mate: &mut [usize]) -> bool {
        for &w in &adj[v] {
            if seen[w] {
                continue;
            }
            seen[w] = true;
            if mate[w] == usize::MAX || augment(mate[w], adj, seen, mate) {
                mate[w] = v;
                return true;
            }
        }
        false
    }
    let mut mate = vec![usize::MAX; k];
    let mut size = 0;
    for v in 0..k {
        let mut seen = vec![false; k];
        if augment(v, adj, &mut seen, &mut mate) {
            size += 1;
        }
    }
    size
}

/// Stable color refinement of the set/element incidence graph. Returns a
/// color per set; equal colors are necessary for being in one orbit.
fn refine_set_colors(u: &SetFamily, initial: &[u64]) -> Vec<usize> {
    let k = u.len();
    let pats = u.patterns();
    let mut set_col: Vec<usize> = dense_ranks(&(0..k).map(|i| (initial[i], u.sets[i].len())).collect::<Vec<_>>());
    let mut elem_col: Vec<usize> = vec![0; u.ground];
    let mut classes = count_distinct(&set_col) + count_distinct(&elem_col);
    loop {
        let esig: Vec<(usize, Vec<usize>)> = (0..u.ground)
            .map(|z| {
                let mut c: Vec<usize> = pats[z].iter().map(|&i| set_col[i]).collect();
                c.sort_unstable();
                (elem_col[z], c)
            })
            .collect();
        elem_col = dense_ranks(&esig);
        let ssig: Vec<(usize, Vec<usize>)> = (0..k)
            .map(|i| {
                let mut c: Vec<usize> = u.sets[i].iter().map(|&z| elem_col[z]).collect();
                c.sort_unstable();
                (set_col[i], c)
            })
            .collect();
        set_col = dense_ranks(&ssig);
        let now = count_distinct(&set_col) + count_distinct(&elem_col);
        if now == classes {
            return set_col;
        }
        classes = now;
    }
}

fn dense_ranks<T: Ord + Clone>(items: &[T]) -> Vec<usize> {
    let mut sorted: Vec<T> = items.to_vec();
    sorted.sort();
    sorted.dedup();
    items.iter().map(|x| sorted.binary_search(x).unwrap()).collect()
}

fn count_distinct(c: &[usize]) -> usize {
    let mut v = c.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Cap on the index of the final Venn stage.
pub const VENN_STAGE_BOUND: u64 = 1_000_000;

fn factorial_saturating(k: usize) -> u64 {
    (1..=k as u64).try_fold(1u64, |acc, x| acc.checked_mul(x)).unwrap_or(u64::MAX)
}

fn u64_of(b: &BigUint) -> u64 {
    u64::try_from(b.clone()).unwrap_or(u64::MAX)
}

/// The automorphism group of `u` acting on member-set indices.
///
/// Identical members (same set and annotation) are collapsed first; the
/// distinct members then go through a tower starting from the symmetric
/// product over color-refinement classes, constrained by pairwise
/// intersection sizes between classes and finally by the full Venn diagram.
pub fn family_autgroup(u: &SetFamily, antichain_bound: usize) -> Result<GeneratedGroup, PermError> {
    let t = max_antichain_size(u);
    if t > antichain_bound {
        return Err(PermError::IndexBoundExceeded {
            bound: antichain_bound as u64,
            stage: Some(format!("antichain of size {t}")),
        });
    }
    let k = u.len();
    // Collapse duplicates.
    let mut rep_of: HashMap<(&[usize], u64), usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..k {
        let key = (u.sets[i].as_slice(), u.annotation(i));
        let r = *rep_of.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[r].push(i);
    }
    let reps: Vec<usize> = groups.iter().map(|g| g[0]).collect();
    let mut sets = Vec::with_capacity(reps.len());
    let mut ann = Vec::with_capacity(reps.len());
    let mut multiplicity_ann = Vec::with_capacity(reps.len());
    for (r, g) in reps.iter().zip(&groups) {
        sets.push(u.sets[*r].clone());
        ann.push(u.annotation(*r));
        multiplicity_ann.push((u.annotation(*r), g.len()));
    }
    let reduced = SetFamily { ground: u.ground, sets, annotations: ann };
    let init = dense_ranks(&multiplicity_ann).into_iter().map(|c| c as u64).collect::<Vec<_>>();
    let rgroup = distinct_autgroup(&reduced, &init)?;

    // Lift: permute duplicate blocks along with their representatives, plus
    // full symmetric groups inside each block.
    let mut gens: Vec<Permutation> = Vec::new();
    for g in rgroup.generators() {
        let mut img = vec![0; k];
        for (r, block) in groups.iter().enumerate() {
            let target = &groups[g.apply(r)];
            for (&x, &y) in block.iter().zip(target) {
                img[x] = y;
            }
        }
        gens.push(Permutation::from_images(img).expect("block lift"));
    }
    let inner = symmetric_on_classes(&groups)?;
    gens.extend_from_slice(inner.generators());
    GeneratedGroup::new(k, &gens)
}

/// Automorphisms of a family without duplicate members; `init` gives the
/// initial set colors.
fn distinct_autgroup(u: &SetFamily, init: &[u64]) -> Result<GeneratedGroup, PermError> {
    let k = u.len();
    let colors = refine_set_colors(u, init);
    let ncol = count_distinct(&colors);
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); ncol];
    for (i, &c) in colors.iter().enumerate() {
        classes[c].push(i);
    }
    let g0 = symmetric_on_classes(&classes)?;

    let inter: Vec<Vec<usize>> = (0..k)
        .map(|i| (0..k).map(|j| crate::graph::intersect(&u.sets[i], &u.sets[j]).len()).collect())
        .collect();
    let mut preds: Vec<MembershipPredicate> = Vec::new();
    for a in 0..ncol {
        for b in a..ncol {
            let (ca, cb) = (&classes[a], &classes[b]);
            if ca.len() == 1 && cb.len() == 1 {
                continue;
            }
            let inter = &inter;
            let structure = move |p: &Permutation| {
                let mut key: Vec<(usize, usize, usize)> = Vec::with_capacity(ca.len() * cb.len());
                for &x in ca {
                    for &y in cb {
                        key.push((p.apply(x), p.apply(y), inter[x][y]));
                    }
                }
                key.sort_unstable();
                key
            };
            let bound = if a == b {
                factorial_saturating(ca.len())
            } else {
                factorial_saturating(ca.len()).saturating_mul(factorial_saturating(cb.len()))
            };
            let test = move |p: &Permutation| {
                ca.iter().all(|&x| cb.iter().all(|&y| inter[x][y] == inter[p.apply(x)][p.apply(y)]))
            };
            preds.push(
                MembershipPredicate::new(format!("intersections {a}x{b}"), bound, test).with_key(move |p| {
                    structure(p).into_iter().flat_map(|(x, y, w)| [x as u64, y as u64, w as u64]).collect()
                }),
            );
        }
    }
    let g1 = tower_of_groups(&g0, &preds)?;
    let sig = cell_signature(u);
    let pats = u.patterns();
    let bound = u64_of(&g1.order()).min(VENN_STAGE_BOUND);
    let venn = MembershipPredicate::new("venn", bound, |p: &Permutation| {
        sig.iter().all(|(pat, &c)| sig.get(&image_pattern(p, pat)) == Some(&c))
    })
    .with_key(|p| {
        let mut imgs: Vec<Vec<usize>> = pats.iter().map(|pat| image_pattern(p, pat)).collect();
        imgs.sort();
        imgs.into_iter().flat_map(|v| v.into_iter().map(|x| x as u64).chain([u64::MAX])).collect()
    });
    #[allow(clippy::let_and_return)]
    let out = tower_of_groups(&g1, &[venn]);
    out
}

/// A family isomorphism `u -> v` on set indices, if one exists.
pub fn family_isomorphism(u: &SetFamily, v: &SetFamily, antichain_bound: usize) -> Result<Option<Permutation>, PermError> {
    if u.len() != v.len() || u.ground != v.ground {
        return Ok(None);
    }
    let both = u.disjoint_union(v);
    let g = family_autgroup(&both, 2 * antichain_bound)?;
    let k = u.len();
    let a: Vec<usize> = (0..k).collect();
    let b: Vec<usize> = (k..2 * k).collect();
    Ok(crate::perm::find_block_swap(&g, &a, &b).map(|w| {
        Permutation::from_images((0..k).map(|i| w.apply(i) - k).collect()).expect("block swap")
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(ground: usize, sets: &[&[usize]]) -> SetFamily {
        SetFamily::new(ground, sets.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    #[test]
    fn signature_examples() {
        let u = fam(3, &[&[0, 1], &[1, 2]]);
        let sig = cell_signature(&u);
        assert_eq!(sig.len(), 3);
        assert_eq!(sig[&vec![0]], 1);
        assert_eq!(sig[&vec![0, 1]], 1);
        assert_eq!(sig[&vec![1]], 1);
        let e = fam(3, &[]);
        assert_eq!(cell_signature(&e)[&vec![]], 3);
    }

    #[test]
    fn automorphism_examples() {
        let swap = Permutation::from_images(vec![1, 0]).unwrap();
        assert!(is_family_automorphism(&fam(2, &[&[0], &[1]]), &swap));
        assert!(!is_family_automorphism(&fam(2, &[&[0], &[0, 1]]), &swap));
        let ann = SetFamily::annotated(2, vec![vec![0], vec![1]], vec![1, 2]).unwrap();
        assert!(!is_family_automorphism(&ann, &swap));
        let zeta = induced_ground_bijection(&fam(2, &[&[0], &[1]]), &swap).unwrap();
        assert_eq!(zeta, vec![1, 0]);
    }

    #[test]
    fn autgroup_examples() {
        let chain = fam(3, &[&[0], &[0, 1], &[0, 1, 2]]);
        assert_eq!(family_autgroup(&chain, 1).unwrap().order_u64(), 1);
        let copies = fam(3, &[&[0, 2], &[0, 2], &[0, 2], &[0, 2]]);
        assert_eq!(family_autgroup(&copies, 1).unwrap().order_u64(), 24);
        let disjoint = fam(4, &[&[0], &[1], &[2], &[3]]);
        assert!(matches!(family_autgroup(&disjoint, 3), Err(PermError::IndexBoundExceeded { .. })));
        assert_eq!(family_autgroup(&disjoint, 4).unwrap().order_u64(), 24);
    }

    #[test]
    fn antichains() {
        assert_eq!(max_antichain_size(&fam(3, &[&[0], &[0, 1], &[0, 1, 2]])), 1);
        assert_eq!(max_antichain_size(&fam(3, &[&[0], &[1], &[2]])), 3);
        assert_eq!(max_antichain_size(&fam(3, &[&[0], &[0]])), 1);
        assert_eq!(max_antichain_size(&fam(3, &[])), 0);
    }

    #[test]
    fn isomorphism_between_families() {
        let u = fam(3, &[&[0, 1], &[1, 2]]);
        let v = fam(3, &[&[2], &[0, 2]]);
        assert!(family_isomorphism(&u, &v, 2).unwrap().is_none());
        let w = fam(3, &[&[0, 2], &[2, 1]]);
        let p = family_isomorphism(&u, &w, 2).unwrap().unwrap();
        assert_eq!(cell_signature(&u).len(), cell_signature(&w).len());
        let both = u.disjoint_union(&w);
        let mut full = vec![0; 4];
        for i in 0..2 {
            full[i] = p.apply(i) + 2;
            full[p.apply(i) + 2] = i;
        }
        assert!(is_family_automorphism(&both, &Permutation::from_images(full).unwrap()));
    }

    #[test]
    fn json_roundtrip() {
        let u = SetFamily::annotated(3, vec![vec![2, 0], vec![1]], vec![5, 6]).unwrap();
        assert_eq!(SetFamily::from_json(&u.to_json()).unwrap(), u);
        let v = SetFamily::from_json(r#"{"ground":2,"sets":[[0],[1]]}"#).unwrap();
        assert_eq!(v.annotations, vec![0, 0]);
        assert!(SetFamily::from_json(r#"{"ground":1,"sets":[[3]]}"#).is_err());
    }
}
