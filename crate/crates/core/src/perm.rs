//! Permutation groups: stabilizer chains built by deterministic
//! Schreier-Sims, subgroup computation by coset enumeration, the
//! tower-of-groups driver and block-swap search.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermError {
    #[error("domain mismatch: expected {expected}, got {got}")]
    DomainMismatch { expected: usize, got: usize },
    #[error("not a permutation: {0}")]
    NotAPermutation(String),
    #[error("domains overlap")]
    DomainOverlap,
    #[error("classes do not partition the domain")]
    NotAPartition,
    #[error("index bound {bound} exceeded{}", .stage.as_ref().map(|s| format!(" in stage {s}")).unwrap_or_default())]
    IndexBoundExceeded { bound: u64, stage: Option<String> },
    #[error("predicate is not closed under composition")]
    NotClosed,
}

/// A bijection of `0..m`, stored as its image array.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    images: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = PermError;
    fn try_from(images: Vec<usize>) -> Result<Self, PermError> {
        Permutation::from_images(images)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.images
    }
}

impl Permutation {
    pub fn identity(m: usize) -> Self {
        Permutation { images: (0..m).collect() }
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self, PermError> {
        let m = images.len();
        let mut seen = vec![false; m];
        for &x in &images {
            if x >= m || seen[x] {
                return Err(PermError::NotAPermutation(format!("{images:?}")));
            }
            seen[x] = true;
        }
        Ok(Permutation { images })
    }

    /// Product of disjoint or overlapping cycles, applied left to right.
    pub fn from_cycles(m: usize, cycles: &[&[usize]]) -> Result<Self, PermError> {
        let mut p = Permutation::identity(m);
        for c in cycles {
            if c.iter().any(|&x| x >= m) {
                return Err(PermError::NotAPermutation(format!("cycle {c:?} on {m} points")));
            }
            let mut q = Permutation::identity(m);
            for (i, &x) in c.iter().enumerate() {
                q.images[x] = c[(i + 1) % c.len()];
            }
            Permutation::from_images(q.images.clone())?;
            p = p.then(&q);
        }
        Ok(p)
    }

    pub fn transposition(m: usize, a: usize, b: usize) -> Self {
        let mut p = Permutation::identity(m);
        p.images.swap(a, b);
        p
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.images.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// `self` first, then `other`: `(self.then(other))(i) = other(self(i))`.
    pub fn then(&self, other: &Permutation) -> Permutation {
        debug_assert_eq!(self.len(), other.len());
        Permutation {
            images: self.images.iter().map(|&x| other.images[x]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &x) in self.images.iter().enumerate() {
            inv[x] = i;
        }
        Permutation { images: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| i == x)
    }

    pub fn first_moved(&self) -> Option<usize> {
        self.images.iter().enumerate().find(|(i, &x)| *i != x).map(|(i, _)| i)
    }

    /// Image of a point set, sorted.
    pub fn image_of_set(&self, set: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = set.iter().map(|&x| self.images[x]).collect();
        out.sort_unstable();
        out
    }

    /// Restriction to the invariant point list `points`, reindexed by position.
    pub fn restrict(&self, points: &[usize]) -> Option<Permutation> {
        let mut pos = HashMap::with_capacity(points.len());
        for (i, &p) in points.iter().enumerate() {
            pos.insert(p, i);
        }
        let images: Option<Vec<usize>> = points.iter().map(|&p| pos.get(&self.images[p]).copied()).collect();
        images.map(|images| Permutation { images })
    }

    /// Embeds into a larger domain at `offset`, fixing everything else.
    pub fn shifted(&self, offset: usize, m: usize) -> Permutation {
        let mut p = Permutation::identity(m);
        for (i, &x) in self.images.iter().enumerate() {
            p.images[offset + i] = offset + x;
        }
        p
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.images.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Permutation {
    type Err = PermError;
    fn from_str(s: &str) -> Result<Self, PermError> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| PermError::NotAPermutation(s.to_string()))?;
        let images = inner
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| PermError::NotAPermutation(s.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Permutation::from_images(images)
    }
}

#[derive(Clone, Debug)]
struct Level {
    base: usize,
    orbit: Vec<usize>,
    /// `trans[k]` maps `base` to `orbit[k]`.
    trans: Vec<Permutation>,
    /// Position of each point in `orbit`, or `usize::MAX`.
    pos: Vec<usize>,
    /// Indices into the strong generating set fixing all earlier base points.
    gens: Vec<usize>,
}

impl Level {
    fn new(base: usize, m: usize) -> Self {
        let mut pos = vec![usize::MAX; m];
        pos[base] = 0;
        Level {
            base,
            orbit: vec![base],
            trans: vec![Permutation::identity(m)],
            pos,
            gens: Vec::new(),
        }
    }

    fn transversal(&self, point: usize) -> Option<&Permutation> {
        match self.pos[point] {
            usize::MAX => None,
            k => Some(&self.trans[k]),
        }
    }
}

/// A permutation group given by generators together with a stabilizer chain.
#[derive(Clone, Debug)]
pub struct GeneratedGroup {
    m: usize,
    gens: Vec<Permutation>,
    strong: Vec<Permutation>,
    levels: Vec<Level>,
}

impl GeneratedGroup {
    pub fn trivial(m: usize) -> Self {
        GeneratedGroup { m, gens: Vec::new(), strong: Vec::new(), levels: Vec::new() }
    }

    /// Builds the group generated by `gens` on `0..m`.
    pub fn new(m: usize, gens: &[Permutation]) -> Result<Self, PermError> {
        Self::with_base_prefix(m, gens, &[])
    }

    /// As [`GeneratedGroup::new`], with the chain's base starting with `prefix`.
    pub fn with_base_prefix(m: usize, gens: &[Permutation], prefix: &[usize]) -> Result<Self, PermError> {
        let mut g = GeneratedGroup::trivial(m);
        for &b in prefix {
            if b >= m {
                return Err(PermError::DomainMismatch { expected: m, got: b + 1 });
            }
            g.levels.push(Level::new(b, m));
        }
        for p in gens {
            if p.len() != m {
                return Err(PermError::DomainMismatch { expected: m, got: p.len() });
            }
            g.insert(p);
        }
        Ok(g)
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.gens
    }

    pub fn base(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.base).collect()
    }

    pub fn order(&self) -> BigUint {
        self.levels.iter().fold(BigUint::one(), |acc, l| acc * BigUint::from(l.orbit.len()))
    }

    pub fn is_trivial(&self) -> bool {
        self.levels.iter().all(|l| l.orbit.len() == 1)
    }

    /// Order as `u64`, saturating.
    pub fn order_u64(&self) -> u64 {
        u64::try_from(self.order()).unwrap_or(u64::MAX)
    }

    /// Sifts `p` from `start`; returns the residue and the level where it stopped.
    fn sift_from(&self, p: &Permutation, start: usize) -> (Permutation, usize) {
        let mut h = p.clone();
        for (i, level) in self.levels.iter().enumerate().skip(start) {
            let x = h.apply(level.base);
            match level.transversal(x) {
                None => return (h, i),
                Some(u) => h = h.then(&u.inverse()),
            }
        }
        (h, self.levels.len())
    }

    pub fn contains(&self, p: &Permutation) -> Result<bool, PermError> {
        if p.len() != self.m {
            return Err(PermError::DomainMismatch { expected: self.m, got: p.len() });
        }
        Ok(self.contains_unchecked(p))
    }

    pub(crate) fn contains_unchecked(&self, p: &Permutation) -> bool {
        let (h, _) = self.sift_from(p, 0);
        h.is_identity()
    }

    fn insert(&mut self, p: &Permutation) {
        let (h, j) = self.sift_from(p, 0);
        if h.is_identity() {
            return;
        }
        self.gens.push(p.clone());
        self.add_strong(h, 0, j);
        self.complete_from(j);
    }

    /// Adds `h` (fixing the bases before `from`) to levels `from..=to`.
    fn add_strong(&mut self, h: Permutation, from: usize, to: usize) {
        if to == self.levels.len() {
            let b = h.first_moved().expect("non-identity residue");
            self.levels.push(Level::new(b, self.m));
        }
        let idx = self.strong.len();
        self.strong.push(h);
        for l in from..=to {
            self.levels[l].gens.push(idx);
            self.extend_orbit(l);
        }
    }

    fn extend_orbit(&mut self, l: usize) {
        let level = &mut self.levels[l];
        let mut k = 0;
        while k < level.orbit.len() {
            let x = level.orbit[k];
            for &gi in &level.gens {
                let s = &self.strong[gi];
                let y = s.apply(x);
                if level.pos[y] == usize::MAX {
                    level.pos[y] = level.orbit.len();
                    level.orbit.push(y);
                    let t = level.trans[k].then(s);
                    level.trans.push(t);
                }
            }
            k += 1;
        }
    }

    /// Restores completeness of levels `0..=top`, assuming deeper ones are complete.
    fn complete_from(&mut self, top: usize) {
        let mut i = top.min(self.levels.len().saturating_sub(1)) as isize;
        // checked[(level, orbit index, generator index)]
        let mut checked: Vec<std::collections::HashSet<(usize, usize)>> = vec![Default::default(); self.levels.len() + 1];
        'outer: while i >= 0 {
            let l = i as usize;
            if checked.len() <= self.levels.len() {
                checked.resize(self.levels.len() + 1, Default::default());
            }
            let level = &self.levels[l];
            let orbit_len = level.orbit.len();
            let gens = level.gens.clone();
            for k in 0..orbit_len {
                for &gi in &gens {
                    if !checked[l].insert((k, gi)) {
                        continue;
                    }
                    let level = &self.levels[l];
                    let s = &self.strong[gi];
                    let u = &level.trans[k];
                    let y = s.apply(level.orbit[k]);
                    let uy = level.transversal(y).expect("orbit closed");
                    let schreier = u.then(s).then(&uy.inverse());
                    let (h, j) = self.sift_from(&schreier, l + 1);
                    if !h.is_identity() {
                        self.add_strong(h, l + 1, j);
                        i = j.min(self.levels.len() - 1) as isize;
                        continue 'outer;
                    }
                }
            }
            i -= 1;
        }
    }

    /// Uniformly random element.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        let mut p = Permutation::identity(self.m);
        for level in self.levels.iter().rev() {
            let k = rng.random_range(0..level.orbit.len());
            p = p.then(&level.trans[k]);
        }
        p
    }

    /// All elements; intended for small groups.
    pub fn elements(&self) -> Vec<Permutation> {
        let mut out = vec![Permutation::identity(self.m)];
        for level in self.levels.iter().rev() {
            let mut next = Vec::with_capacity(out.len() * level.orbit.len());
            for p in &out {
                for t in &level.trans {
                    next.push(p.then(t));
                }
            }
            out = next;
        }
        out
    }

    /// Orbits of the group on `0..m`, each sorted, ordered by minimum point.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        orbits_of(self.m, self.strong.iter())
    }

    /// The group induced on an invariant point list, reindexed by position.
    pub fn restrict(&self, points: &[usize]) -> Result<GeneratedGroup, PermError> {
        let gens = self
            .gens
            .iter()
            .map(|g| g.restrict(points).ok_or(PermError::NotAPartition))
            .collect::<Result<Vec<_>, _>>()?;
        GeneratedGroup::new(points.len(), &gens)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.gens).expect("serializable")
    }

    pub fn from_json(m: usize, s: &str) -> Result<GeneratedGroup, PermError> {
        let gens: Vec<Permutation> =
            serde_json::from_str(s).map_err(|e| PermError::NotAPermutation(e.to_string()))?;
        GeneratedGroup::new(m, &gens)
    }
}

fn orbits_of<'a>(m: usize, gens: impl Iterator<Item = &'a Permutation> + Clone) -> Vec<Vec<usize>> {
    let mut dsu = crate::graph::Dsu::new(m);
    for g in gens {
        for i in 0..m {
            dsu.union(i, g.apply(i));
        }
    }
    let mut by_root: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..m {
        by_root.entry(dsu.find(i)).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = by_root.into_values().collect();
    out.sort();
    out
}

/// Order of the group `⟨gens⟩` on `m` points.
pub fn build_group(m: usize, gens: &[Permutation]) -> Result<GeneratedGroup, PermError> {
    GeneratedGroup::new(m, gens)
}

/// All permutations preserving each class; the classes must partition `0..m`
/// where `m` is the total number of points.
pub fn symmetric_on_classes(classes: &[Vec<usize>]) -> Result<GeneratedGroup, PermError> {
    let m: usize = classes.iter().map(Vec::len).sum();
    let mut seen = vec![false; m];
    for c in classes {
        for &x in c {
            if x >= m || seen[x] {
                return Err(PermError::NotAPartition);
            }
            seen[x] = true;
        }
    }
    let mut g = GeneratedGroup::trivial(m);
    // Strong generators: adjacent transpositions within each class.
    let mut gen_of: Vec<Vec<usize>> = Vec::new();
    for c in classes {
        let mut ids = Vec::new();
        for w in c.windows(2) {
            ids.push(g.strong.len());
            let t = Permutation::transposition(m, w[0], w[1]);
            g.gens.push(t.clone());
            g.strong.push(t);
        }
        gen_of.push(ids);
    }
    for (ci, c) in classes.iter().enumerate() {
        let later: Vec<usize> = gen_of[ci + 1..].iter().flatten().copied().collect();
        for i in 0..c.len().saturating_sub(1) {
            let mut level = Level::new(c[i], m);
            for &x in &c[i + 1..] {
                level.pos[x] = level.orbit.len();
                level.orbit.push(x);
                level.trans.push(Permutation::transposition(m, c[i], x));
            }
            level.gens = gen_of[ci][i..].to_vec();
            level.gens.extend(&later);
            g.levels.push(level);
        }
    }
    Ok(g)
}

/// Direct product on the concatenation of the factors' domains.
pub fn direct_product(groups: &[GeneratedGroup]) -> GeneratedGroup {
    let m: usize = groups.iter().map(|g| g.m).sum();
    let mut out = GeneratedGroup::trivial(m);
    let mut offsets = Vec::new();
    let mut off = 0;
    let mut strong_ranges = Vec::new();
    for g in groups {
        offsets.push(off);
        let start = out.strong.len();
        out.strong.extend(g.strong.iter().map(|s| s.shifted(off, m)));
        out.gens.extend(g.gens.iter().map(|s| s.shifted(off, m)));
        strong_ranges.push((start, out.strong.len()));
        off += g.m;
    }
    for (gi, g) in groups.iter().enumerate() {
        let off = offsets[gi];
        let later_start = strong_ranges[gi].1;
        for level in &g.levels {
            let mut pos = vec![usize::MAX; m];
            for (k, &x) in level.orbit.iter().enumerate() {
                pos[off + x] = k;
            }
            let mut gens: Vec<usize> = level.gens.iter().map(|&i| strong_ranges[gi].0 + i).collect();
            gens.extend(later_start..out.strong.len());
            out.levels.push(Level {
                base: off + level.base,
                orbit: level.orbit.iter().map(|&x| off + x).collect(),
                trans: level.trans.iter().map(|t| t.shifted(off, m)).collect(),
                pos,
                gens,
            });
        }
    }
    out
}

/// A subgroup given by a membership test.
///
/// `bound` caps the index of the accepted subgroup within the group it is
/// applied to. An optional `key` identifies cosets: `key(x) == key(y)` iff
/// `x.then(y^-1)` is accepted.
pub struct MembershipPredicate<'a> {
    pub name: String,
    pub bound: u64,
    test: Box<dyn Fn(&Permutation) -> bool + 'a>,
    key: Option<Box<dyn Fn(&Permutation) -> Vec<u64> + 'a>>,
    /// Number of random closure checks to run; 0 disables them.
    pub closure_samples: usize,
}

impl<'a> MembershipPredicate<'a> {
    pub fn new(name: impl Into<String>, bound: u64, test: impl Fn(&Permutation) -> bool + 'a) -> Self {
        MembershipPredicate {
            name: name.into(),
            bound,
            test: Box::new(test),
            key: None,
            closure_samples: 0,
        }
    }

    pub fn with_key(mut self, key: impl Fn(&Permutation) -> Vec<u64> + 'a) -> Self {
        self.key = Some(Box::new(key));
        self
    }

    pub fn with_closure_samples(mut self, k: usize) -> Self {
        self.closure_samples = k;
        self
    }

    pub fn accepts(&self, p: &Permutation) -> bool {
        (self.test)(p)
    }
}

/// `{p in group : pred(p)}`, found by enumerating its right cosets and
/// sifting Schreier generators.
pub fn fhl_subgroup(group: &GeneratedGroup, pred: &MembershipPredicate) -> Result<GeneratedGroup, PermError> {
    let gens = group.generators();
    if gens.iter().all(|g| pred.accepts(g)) {
        let out = group.clone();
        check_closure(group, &out, pred)?;
        return Ok(out);
    }
    let m = group.m;
    let exceeded = || PermError::IndexBoundExceeded { bound: pred.bound, stage: Some(pred.name.clone()) };
    let mut reps: Vec<Permutation> = vec![Permutation::identity(m)];
    let mut by_key: HashMap<Vec<u64>, usize> = HashMap::new();
    if let Some(key) = &pred.key {
        by_key.insert(key(&reps[0]), 0);
    }
    let mut inv_reps: Vec<Permutation> = vec![Permutation::identity(m)];
    let mut sub = GeneratedGroup::trivial(m);
    let mut k = 0;
    while k < reps.len() {
        for g in gens {
            let x = reps[k].then(g);
            let found = match &pred.key {
                Some(key) => by_key.get(&key(&x)).copied(),
                None => (0..reps.len()).find(|&r| pred.accepts(&x.then(&inv_reps[r]))),
            };
            match found {
                Some(r) => {
                    let s = x.then(&inv_reps[r]);
                    if !s.is_identity() {
                        sub.insert(&s);
                    }
                }
                None => {
                    if reps.len() as u64 >= pred.bound {
                        return Err(exceeded());
                    }
                    if let Some(key) = &pred.key {
                        by_key.insert(key(&x), reps.len());
                    }
                    inv_reps.push(x.inverse());
                    reps.push(x);
                }
            }
        }
        k += 1;
    }
    debug_assert_eq!(sub.order() * BigUint::from(reps.len()), group.order());
    check_closure(group, &sub, pred)?;
    Ok(sub)
}

fn check_closure(group: &GeneratedGroup, sub: &GeneratedGroup, pred: &MembershipPredicate) -> Result<(), PermError> {
    if pred.closure_samples == 0 {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..pred.closure_samples {
        let h = sub.random_element(&mut rng);
        if !pred.accepts(&h) || !pred.accepts(&h.inverse()) {
            return Err(PermError::NotClosed);
        }
        let (x, y) = (group.random_element(&mut rng), group.random_element(&mut rng));
        if pred.accepts(&x) && pred.accepts(&y) && !pred.accepts(&x.then(&y)) {
            return Err(PermError::NotClosed);
        }
    }
    Ok(())
}

/// Per-stage record of a tower run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageIndex {
    pub name: String,
    pub index: BigUint,
    pub bound: u64,
}

/// Applies the predicates in order, each to the previous result.
pub fn tower_of_groups(g0: &GeneratedGroup, preds: &[MembershipPredicate]) -> Result<GeneratedGroup, PermError> {
    tower_with_stats(g0, preds).map(|(g, _)| g)
}

pub fn tower_with_stats(
    g0: &GeneratedGroup,
    preds: &[MembershipPredicate],
) -> Result<(GeneratedGroup, Vec<StageIndex>), PermError> {
    let mut g = g0.clone();
    let mut stats = Vec::with_capacity(preds.len());
    for p in preds {
        let before = g.order();
        let next = fhl_subgroup(&g, p)?;
        let index = before / next.order();
        assert!(index <= BigUint::from(p.bound), "stage {} index above its bound", p.name);
        stats.push(StageIndex { name: p.name.clone(), index, bound: p.bound });
        g = next;
    }
    Ok((g, stats))
}

/// Whether some element maps `a` onto `b` and `b` onto `a`.
pub fn exists_block_swap(group: &GeneratedGroup, a: &[usize], b: &[usize]) -> bool {
    find_block_swap(group, a, b).is_some()
}

/// A group element exchanging the blocks `a` and `b`, if one exists.
pub fn find_block_swap(group: &GeneratedGroup, a: &[usize], b: &[usize]) -> Option<Permutation> {
    if a.len() != b.len() {
        return None;
    }
    let m = group.m;
    let mut side = vec![0u8; m];
    for &x in a {
        side[x] = 1;
    }
    for &x in b {
        side[x] = 2;
    }
    for orbit in group.orbits() {
        let ca = orbit.iter().filter(|&&x| side[x] == 1).count();
        let cb = orbit.iter().filter(|&&x| side[x] == 2).count();
        if ca != cb {
            return None;
        }
    }
    if a.is_empty() {
        return Some(Permutation::identity(m));
    }
    let prefix: Vec<usize> = a.iter().chain(b).copied().collect();
    let chain = GeneratedGroup::with_base_prefix(m, group.generators(), &prefix).expect("same domain");
    let k = prefix.len();
    // Orbits of each prefix stabilizer.
    let level_orbits: Vec<Vec<usize>> = (0..=k)
        .map(|j| {
            let gens = chain.levels.get(j).map(|l| l.gens.clone()).unwrap_or_default();
            let orbits = orbits_of(m, gens.iter().map(|&i| &chain.strong[i]));
            let mut label = vec![0; m];
            for (o, orb) in orbits.iter().enumerate() {
                for &x in orb {
                    label[x] = o;
                }
            }
            label
        })
        .collect();
    let mut used = vec![false; m];
    let mut st = SwapSearch { chain: &chain, side: &side, prefix: &prefix, level_orbits: &level_orbits, used: &mut used };
    st.search(0, Permutation::identity(m))
}

struct SwapSearch<'a> {
    chain: &'a GeneratedGroup,
    side: &'a [u8],
    prefix: &'a [usize],
    level_orbits: &'a [Vec<usize>],
    used: &'a mut Vec<bool>,
}

impl SwapSearch<'_> {
    /// `q` maps the current level's coordinates to actual images.
    fn search(&mut self, j: usize, q: Permutation) -> Option<Permutation> {
        if j == self.prefix.len() {
            // Remaining levels fix the prefix; any completion works.
            return Some(q);
        }
        if !self.feasible(j, &q) {
            return None;
        }
        let level = &self.chain.levels[j];
        debug_assert_eq!(level.base, self.prefix[j]);
        let want = 3 - self.side[level.base];
        for (idx, &z) in level.orbit.iter().enumerate() {
            let img = q.apply(z);
            if self.side[img] != want || self.used[img] {
                continue;
            }
            self.used[img] = true;
            let next = level.trans[idx].then(&q);
            let r = self.search(j + 1, next);
            self.used[img] = false;
            if r.is_some() {
                return r;
            }
        }
        None
    }

    /// Counting condition on the orbits of the stabilizer at level `j`.
    fn feasible(&self, j: usize, q: &Permutation) -> bool {
        let label = &self.level_orbits[j];
        let mut need: HashMap<(usize, u8), isize> = HashMap::new();
        for &x in &self.prefix[j..] {
            *need.entry((label[x], 3 - self.side[x])).or_insert(0) += 1;
        }
        let qinv = q.inverse();
        for img in (0..self.side.len()).filter(|&i| self.side[i] != 0 && !self.used[i]) {
            let y = qinv.apply(img);
            *need.entry((label[y], self.side[img])).or_insert(0) -= 1;
        }
        need.values().all(|&c| c == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn p(m: usize, cycles: &[&[usize]]) -> Permutation {
        Permutation::from_cycles(m, cycles).unwrap()
    }

    fn closure(m: usize, gens: &[Permutation]) -> HashSet<Permutation> {
        let mut set = HashSet::new();
        let mut stack = vec![Permutation::identity(m)];
        set.insert(Permutation::identity(m));
        while let Some(x) = stack.pop() {
            for g in gens {
                let y = x.then(g);
                if set.insert(y.clone()) {
                    stack.push(y);
                }
            }
        }
        set
    }

    #[test]
    fn permutation_basics() {
        let a = p(3, &[&[0, 1]]);
        let b = p(3, &[&[1, 2]]);
        assert_eq!(a.then(&b).images(), &[2, 0, 1]);
        assert!(a.then(&a.inverse()).is_identity());
        let s = a.to_string();
        assert_eq!(s, "[1 0 2]");
        assert_eq!(s.parse::<Permutation>().unwrap(), a);
        assert!("[0 0 1]".parse::<Permutation>().is_err());
        assert!(serde_json::from_str::<Permutation>("[1,1]").is_err());
    }

    #[test]
    fn orders() {
        let s3 = build_group(3, &[p(3, &[&[0, 1]]), p(3, &[&[0, 1, 2]])]).unwrap();
        assert_eq!(s3.order(), BigUint::from(6u32));
        assert_eq!(build_group(4, &[]).unwrap().order(), BigUint::one());
        let c5 = build_group(5, &[p(5, &[&[0, 1, 2, 3, 4]])]).unwrap();
        assert_eq!(c5.order(), BigUint::from(5u32));
        assert!(matches!(build_group(4, &[p(3, &[])]), Err(PermError::DomainMismatch { .. })));
    }

    #[test]
    fn order_matches_closure_on_samples() {
        let m = 7;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let gens: Vec<Permutation> = (0..rng.random_range(0..3))
                .map(|_| {
                    let mut v: Vec<usize> = (0..m).collect();
                    // partial shuffle keeps some small groups
                    for _ in 0..rng.random_range(1..3) {
                        let (i, j) = (rng.random_range(0..m), rng.random_range(0..m));
                        v.swap(i, j);
                    }
                    Permutation::from_images(v).unwrap()
                })
                .collect();
            let g = build_group(m, &gens).unwrap();
            let c = closure(m, &gens);
            assert_eq!(g.order(), BigUint::from(c.len()));
            let elems: HashSet<Permutation> = g.elements().into_iter().collect();
            assert_eq!(elems, c);
        }
    }

    #[test]
    fn membership() {
        let s3 = build_group(3, &[p(3, &[&[0, 1]]), p(3, &[&[0, 1, 2]])]).unwrap();
        assert!(s3.contains(&p(3, &[&[0, 2]])).unwrap());
        let c5 = build_group(5, &[p(5, &[&[0, 1, 2, 3, 4]])]).unwrap();
        assert!(!c5.contains(&p(5, &[&[0, 1]])).unwrap());
        assert!(c5.contains(&p(4, &[])).is_err());
    }

    fn sym(m: usize) -> GeneratedGroup {
        symmetric_on_classes(&[(0..m).collect()]).unwrap()
    }

    fn parity(q: &Permutation) -> bool {
        let mut seen = vec![false; q.len()];
        let mut even = true;
        for i in 0..q.len() {
            if seen[i] {
                continue;
            }
            let mut len = 0;
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                j = q.apply(j);
                len += 1;
            }
            if len % 2 == 0 {
                even = !even;
            }
        }
        even
    }

    #[test]
    fn fhl_examples() {
        let s4 = sym(4);
        let stab = fhl_subgroup(&s4, &MembershipPredicate::new("fix0", 4, |q| q.apply(0) == 0)).unwrap();
        assert_eq!(stab.order_u64(), 6);
        let alt = fhl_subgroup(&s4, &MembershipPredicate::new("even", 2, parity)).unwrap();
        assert_eq!(alt.order_u64(), 12);
        let blocks = [vec![0usize, 1], vec![2, 3], vec![4]];
        let preserves = |q: &Permutation| {
            let mut img: Vec<Vec<usize>> = blocks.iter().map(|b| q.image_of_set(b)).collect();
            img.sort();
            let mut orig = blocks.to_vec();
            orig.sort();
            img == orig
        };
        let s5 = sym(5);
        let sub = fhl_subgroup(&s5, &MembershipPredicate::new("part", 15, preserves)).unwrap();
        let brute = s5.elements().into_iter().filter(|q| preserves(q)).count();
        assert_eq!(sub.order_u64(), brute as u64);
        assert_eq!(brute, 8);
        // keyed variant agrees
        let keyed = MembershipPredicate::new("part", 15, preserves).with_key(|q| {
            let mut img: Vec<Vec<usize>> = blocks.iter().map(|b| q.image_of_set(b)).collect();
            img.sort();
            img.into_iter().flat_map(|b| b.into_iter().map(|x| x as u64).chain([u64::MAX])).collect()
        });
        assert_eq!(fhl_subgroup(&s5, &keyed).unwrap().order_u64(), 8);
        // promise violation
        let r = fhl_subgroup(&s5, &MembershipPredicate::new("fix0", 2, |q| q.apply(0) == 0));
        assert!(matches!(r, Err(PermError::IndexBoundExceeded { .. })));
    }

    #[test]
    fn closure_sampling_detects_bad_predicate() {
        let gens = [p(3, &[&[0, 1]]), p(3, &[&[0, 1, 2]])];
        let s3 = build_group(3, &gens).unwrap();
        let bad = MembershipPredicate::new("bad", 6, |q| q.is_identity() || gens.contains(q)).with_closure_samples(50);
        assert!(matches!(fhl_subgroup(&s3, &bad), Err(PermError::NotClosed)));
        let good = MembershipPredicate::new("fix0", 3, |q| q.apply(0) == 0).with_closure_samples(50);
        assert_eq!(fhl_subgroup(&s3, &good).unwrap().order_u64(), 2);
    }

    #[test]
    fn tower_examples() {
        let s4 = sym(4);
        let preds = [
            MembershipPredicate::new("fix0", 4, |q| q.apply(0) == 0),
            MembershipPredicate::new("fix1", 3, |q| q.apply(1) == 1),
        ];
        let (g, stats) = tower_with_stats(&s4, &preds).unwrap();
        assert_eq!(g.order_u64(), 2);
        assert_eq!(stats[0].index, BigUint::from(4u32));
        assert_eq!(tower_of_groups(&s4, &[]).unwrap().order(), s4.order());
    }

    #[test]
    fn colored_cycle_automorphisms() {
        // 6-cycle colored alternately
        let edges: HashSet<(usize, usize)> = (0..6).map(|i| (i.min((i + 1) % 6), i.max((i + 1) % 6))).collect();
        let g0 = symmetric_on_classes(&[vec![0, 2, 4], vec![1, 3, 5]]).unwrap();
        let keep = |q: &Permutation| {
            edges.iter().all(|&(u, v)| {
                let (a, b) = (q.apply(u), q.apply(v));
                edges.contains(&(a.min(b), a.max(b)))
            })
        };
        let g = tower_of_groups(&g0, &[MembershipPredicate::new("edges", 36, keep)]).unwrap();
        let brute = g0.elements().into_iter().filter(|q| keep(q)).count();
        assert_eq!(g.order_u64(), brute as u64);
        assert_eq!(brute, 6);
    }

    #[test]
    fn products_and_classes() {
        let s2 = sym(2);
        assert_eq!(direct_product(&[s2.clone(), s2.clone()]).order_u64(), 4);
        assert_eq!(direct_product(&[sym(3), GeneratedGroup::trivial(2)]).order_u64(), 6);
        assert_eq!(symmetric_on_classes(&[vec![0], vec![1]]).unwrap().order_u64(), 1);
        let g = symmetric_on_classes(&[vec![0, 1], vec![2, 3, 4]]).unwrap();
        assert_eq!(g.order_u64(), 12);
        assert!(symmetric_on_classes(&[vec![0, 1], vec![1]]).is_err());
        let elems: HashSet<_> = g.elements().into_iter().collect();
        assert_eq!(elems, closure(5, g.generators()));
        let d = direct_product(&[g.clone(), sym(3)]);
        assert!(d.contains(&p(8, &[&[0, 1], &[5, 7]])).unwrap());
        assert!(!d.contains(&p(8, &[&[1, 2]])).unwrap());
    }

    #[test]
    fn block_swaps() {
        let g = build_group(4, &[p(4, &[&[0, 2], &[1, 3]])]).unwrap();
        assert!(exists_block_swap(&g, &[0, 1], &[2, 3]));
        assert!(!exists_block_swap(&GeneratedGroup::trivial(2), &[0], &[1]));
        let s = sym(6);
        let w = find_block_swap(&s, &[0, 1, 2], &[3, 4, 5]).unwrap();
        assert_eq!(w.image_of_set(&[0, 1, 2]), vec![3, 4, 5]);
        let c4 = build_group(4, &[p(4, &[&[0, 1, 2, 3]])]).unwrap();
        assert!(exists_block_swap(&c4, &[0, 1], &[2, 3]));
        assert!(exists_block_swap(&c4, &[0, 2], &[1, 3]));
        // a 3-cycle cannot swap two points
        let c3 = build_group(3, &[p(3, &[&[0, 1, 2]])]).unwrap();
        assert!(!exists_block_swap(&c3, &[0], &[1]));
    }
}
