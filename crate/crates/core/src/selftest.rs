//! Oracle-backed self-test suite. Each criterion compares a library
//! computation against an independent exhaustive computation on seeded
//! random instances and reports the number of mismatches.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use std::collections::HashMap;

use crate::decompose::{canonical_decomposition, is_interval, DecomposeError};
use crate::graph::{maximal_cliques, Graph};
use crate::harness::{brute_automorphisms, brute_force_isomorphism, is_isomorphism, random_relabel, random_t_graph};
use crate::iso::{combine, decomposition_autgroup, is_isomorphic, CombinedDecomposition, Point, Verdict};
use crate::interval::{brute_marked_autgroup, build_pq_tree, marked_action_group, MarkedIntervalGraph};
use crate::perm::{
    build_group, fhl_subgroup, symmetric_on_classes, tower_with_stats, GeneratedGroup, MembershipPredicate,
    Permutation,
};
use crate::setfamily::{cell_signature, family_autgroup, is_family_automorphism, max_antichain_size, SetFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Quick,
    Full,
}

impl Profile {
    /// Scales a full-profile case count.
    fn cases(self, full: usize) -> usize {
        match self {
            Profile::Full => full,
            Profile::Quick => (full / 10).max(5),
        }
    }
}

/// Deliberate corruption used to check that the suite can fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Faults {
    /// Flip one edge of the second graph before handing it to the oracle.
    pub flip_oracle_edge: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub passed: bool,
    pub seconds: f64,
    pub detail: String,
}

impl CriterionReport {
    fn new(id: u8, name: &str, cases: usize, failures: usize, started: Instant, detail: String) -> Self {
        CriterionReport {
            id,
            name: name.to_string(),
            cases,
            failures,
            passed: failures == 0,
            seconds: started.elapsed().as_secs_f64(),
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {} ({}): {} cases, {} failures, {:.2}s{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.cases,
            self.failures,
            self.seconds,
            if self.detail.is_empty() { String::new() } else { format!(" -- {}", self.detail) }
        )
    }
}

/// Runs every criterion.
pub fn run_all(profile: Profile, seed: u64, faults: Faults) -> Vec<CriterionReport> {
    (1..=9).map(|id| run_criterion(id, profile, seed, faults)).collect()
}

pub fn run_criterion(id: u8, profile: Profile, seed: u64, faults: Faults) -> CriterionReport {
    match id {
        2 => canonicity(profile, seed),
        3 => fragment_bounds(profile, seed),
        5 => group_engine(profile, seed),
        6 => set_families(profile, seed),
        7 => interval_pq(profile, seed),
        1 => oracle_equivalence(profile, seed, faults),
        4 => decomposition_group(profile, seed),
        8 => witness_soundness(profile, seed),
        9 => scaling(profile, seed),
        _ => CriterionReport::new(id, "unknown criterion", 0, 1, Instant::now(), String::new()),
    }
}

/// Runs `f`, turning a panic into `None`.
fn guarded<T>(f: impl FnOnce() -> T) -> Option<T> {
    std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).ok()
}

/// A generator output, rejection-sampled towards non-interval graphs when
/// `prefer_hard` is set.
fn corpus_graph(rng: &mut ChaCha8Rng, d: usize, n: usize, prefer_hard: bool) -> Graph {
    let mut g = random_t_graph(d, n, rng.random()).0;
    if prefer_hard && d > 2 {
        for _ in 0..400 {
            if !is_interval(&g) {
                break;
            }
            g = random_t_graph(d, n, rng.random()).0;
        }
    }
    g
}

/// Flips the adjacency of one vertex pair.
fn flip_edge(g: &Graph) -> Graph {
    let mut h = g.clone();
    if g.n() >= 2 {
        if g.has_edge(0, 1) {
            h.remove_edge(0, 1);
        } else {
            h.add_edge(0, 1).unwrap();
        }
    }
    h
}

/// Engine verdicts against exhaustive isomorphism search.
pub fn oracle_equivalence(profile: Profile, seed: u64, faults: Faults) -> CriterionReport {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1);
    let total = profile.cases(600);
    let mut failures = 0;
    let mut iso = 0;
    let mut hard = 0;
    let mut notes = Vec::new();
    for case in 0..total {
        let d = 2 + case % 3;
        let n = rng.random_range(1..=10);
        let g1 = corpus_graph(&mut rng, d, n, case % 4 < 2);
        let g2 = if case % 2 == 0 { random_relabel(&g1, rng.random()).0 } else { corpus_graph(&mut rng, d, n, case % 4 < 2) };
        hard += usize::from(!is_interval(&g1));
        let fixture = if faults.flip_oracle_edge { flip_edge(&g2) } else { g2.clone() };
        let expected = brute_force_isomorphism(&g1, &fixture).expect("within guard").is_some();
        iso += usize::from(expected);
        let verdict = guarded(|| is_isomorphic(&g1, &g2, d));
        let ok = match &verdict {
            Some(Verdict::Isomorphic(w)) => expected && is_isomorphism(&g1, &g2, w),
            Some(Verdict::NotIsomorphic) => !expected,
            _ => false,
        };
        if !ok {
            failures += 1;
            notes.push(format!("case {case} (d={d}, n={n}): {:?}, oracle {expected}", verdict.map(|v| v.report(d).verdict)));
        }
    }
    notes.truncate(5);
    notes.push(format!("{iso} isomorphic pairs, {hard} non-interval first graphs"));
    CriterionReport::new(1, "oracle equivalence", total, failures, started, notes.join("; "))
}

/// Decomposition group against the projection of all automorphisms.
pub fn decomposition_group(profile: Profile, seed: u64) -> CriterionReport {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4);
    let want = profile.cases(80);
    let mut cases = 0;
    let mut failures = 0;
    let mut deep = 0;
    let mut notes = Vec::new();
    let mut attempt = 0;
    while cases < want && attempt < want * 20 {
        attempt += 1;
        let d = rng.random_range(2..=4);
        let graphs: Vec<Graph> = if attempt % 2 == 0 {
            let n = rng.random_range(1..=9);
            vec![corpus_graph(&mut rng, d, n, true)]
        } else {
            let n = rng.random_range(1..=4);
            let g1 = corpus_graph(&mut rng, d, n, false);
            let g2 = if rng.random_bool(0.5) { random_relabel(&g1, rng.random()).0 } else { corpus_graph(&mut rng, d, n, false) };
            vec![g1, g2]
        };
        let mut h = Graph::new(0);
        for g in &graphs {
            h = h.disjoint_union(g);
        }
        let aut = brute_automorphisms(&h);
        if aut.len() > 5000 {
            continue;
        }
        let decs: Vec<_> = graphs.iter().map(|g| canonical_decomposition(g, d)).collect();
        if decs.iter().any(|x| x.is_err()) {
            cases += 1;
            failures += 1;
            notes.push(format!("attempt {attempt}: decomposition failed"));
            continue;
        }
        let decs: Vec<_> = decs.into_iter().map(Result::unwrap).collect();
        let refs: Vec<_> = decs.iter().collect();
        let Some(cd) = combine(&refs) else { continue };
        cases += 1;
        deep += usize::from(cd.depth() > 1);
        let ok = guarded(|| {
            let Ok((group, _)) = decomposition_autgroup(&cd) else { return false };
            let ours: HashSet<Permutation> = group.elements().into_iter().collect();
            match project_all(&cd, &graphs, &aut) {
                Some(theirs) => ours == theirs,
                None => false,
            }
        });
        if ok != Some(true) {
            failures += 1;
            notes.push(format!("attempt {attempt} (d={d}, n={})", h.n()));
        }
    }
    notes.truncate(5);
    notes.push(format!("{deep} instances with more than one level"));
    let short = usize::from(cases < want);
    CriterionReport::new(4, "decomposition group", cases, failures + short, started, notes.join("; "))
}

/// Action of vertex automorphisms on fragments and terminal sets.
fn project_all(cd: &CombinedDecomposition, graphs: &[Graph], aut: &[Vec<usize>]) -> Option<HashSet<Permutation>> {
    let offsets: Vec<usize> = graphs.iter().scan(0, |a, g| {
        let o = *a;
        *a += g.n();
        Some(o)
    }).collect();
    let global = |side: usize, vs: &[usize]| -> Vec<usize> {
        let mut v: Vec<usize> = vs.iter().map(|&x| x + offsets[side]).collect();
        v.sort_unstable();
        v
    };
    let mut frag_key: Vec<Vec<usize>> = vec![Vec::new(); cd.domain_size()];
    let mut by_frag: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
    let mut host_of: Vec<usize> = vec![usize::MAX; cd.domain_size()];
    for (p, point) in cd.points.iter().enumerate() {
        if let Point::Fragment { side, level, index } = *point {
            let vs = global(side, &cd.decs[side].levels[level].fragments[index].vertices);
            by_frag.insert((level, vs.clone()), p);
            frag_key[p] = vs;
            for t in cd.terminals_of(p) {
                host_of[t] = p;
            }
        }
    }
    let mut by_term: HashMap<(Vec<usize>, usize, usize, usize), usize> = HashMap::new();
    let mut term_key: Vec<Vec<usize>> = vec![Vec::new(); cd.domain_size()];
    for (p, point) in cd.points.iter().enumerate() {
        if let Point::Terminal { side, index } = *point {
            let vs = global(side, &cd.decs[side].terminal_sets[index].vertices);
            let (x, c) = cd.origin(p);
            by_term.insert((vs.clone(), host_of[p], x, c), p);
            term_key[p] = vs;
        }
    }
    let mut out = HashSet::new();
    for phi in aut {
        let img = |vs: &[usize]| {
            let mut v: Vec<usize> = vs.iter().map(|&x| phi[x]).collect();
            v.sort_unstable();
            v
        };
        let mut images = vec![0; cd.domain_size()];
        for (p, point) in cd.points.iter().enumerate() {
            if let Point::Fragment { level, .. } = *point {
                images[p] = *by_frag.get(&(level, img(&frag_key[p])))?;
            }
        }
        for (p, point) in cd.points.iter().enumerate() {
            if let Point::Terminal { .. } = *point {
                let (x, c) = cd.origin(p);
                images[p] = *by_term.get(&(img(&term_key[p]), images[host_of[p]], images[x], c))?;
            }
        }
        out.insert(Permutation::from_images(images).ok()?);
    }
    Some(out)
}

/// Every isomorphic verdict carries a verified witness; relabeled copies
/// are never declared non-isomorphic.
pub fn witness_soundness(profile: Profile, seed: u64) -> CriterionReport {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x8);
    let total = profile.cases(150);
    let mut failures = 0;
    let mut notes = Vec::new();
    for case in 0..total {
        let d = rng.random_range(2..=4);
        let n = rng.random_range(1..=60);
        let g1 = corpus_graph(&mut rng, d, n, false);
        let (g2, _) = random_relabel(&g1, rng.random());
        let verdict = guarded(|| is_isomorphic(&g1, &g2, d));
        let ok = matches!(&verdict, Some(Verdict::Isomorphic(w)) if is_isomorphism(&g1, &g2, w));
        if !ok {
            failures += 1;
            notes.push(format!("case {case} (d={d}, n={n}): {:?}", verdict.map(|v| v.report(d).verdict)));
        }
    }
    notes.truncate(5);
    CriterionReport::new(8, "witness soundness", total, failures, started, notes.join("; "))
}

/// Large generator pairs finish within the time budget.
pub fn scaling(profile: Profile, seed: u64) -> CriterionReport {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9);
    let pairs = if profile == Profile::Full { 3 } else { 1 };
    let mut failures = 0;
    let mut notes = Vec::new();
    let mut slowest: f64 = 0.0;
    for case in 0..2 * pairs {
        let g1 = random_t_graph(4, 200, rng.random()).0;
        let g2 = if case % 2 == 0 { random_relabel(&g1, rng.random()).0 } else { random_t_graph(4, 200, rng.random()).0 };
        let t = Instant::now();
        let verdict = guarded(|| is_isomorphic(&g1, &g2, 4));
        let secs = t.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        let ok = match &verdict {
            Some(Verdict::Isomorphic(w)) => is_isomorphism(&g1, &g2, w),
            Some(Verdict::NotIsomorphic) => case % 2 == 1,
            _ => false,
        };
        if !ok || secs >= 60.0 {
            failures += 1;
            notes.push(format!("pair {case}: {:?} in {secs:.1}s", verdict.map(|v| v.report(4).verdict)));
        }
    }
    notes.push(format!("slowest {slowest:.2}s"));
    CriterionReport::new(9, "scaling n=200 d=4", 2 * pairs, failures, started, notes.join("; "))
}

/// Decomposing a relabeled graph gives the relabeled decomposition.
pub fn canonicity(profile: Profile, seed: u64) -> CriterionReport {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2);
    let mut failures = 0;
    let mut notes = Vec::new();
    let total = profile.cases(250);
    for case in 0..total {
        let d = rng.random_range(2..=4);
        let n = rng.random_range(1..=30);
        let (g, _) = random_t_graph(d, n, rng.random());
        let (h, p) = random_relabel(&g, rng.random());
        let ok = match (canonical_decomposition(&g, d), canonical_decomposition(&h, d)) {
            (Ok(a), Ok(b)) => {
                let id: Vec<usize> = (0..h.n()).collect();
                a.relabeled_view(p.images()) == b.relabeled_view(&id)
            }
            _ => false,
        };
        if !ok {
            failures += 1;
            notes.push(format!("case {case} (d={d}, n={n})"));
        }
    }
    notes.truncate(5);
    CriterionReport::new(2, "canonicity", total, failures, started, notes.join("; "))
}

/// Extraction bounds on generator-certified inputs.
pub fn fragment_bounds(profile: Profile, seed: u64) -> CriterionReport {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3);
    let mut failures = 0;
    let mut calls = 0;
    let mut levels = 0;
    let mut notes = Vec::new();
    let total = profile.cases(300);
    for case in 0..total {
        let d = rng.random_range(2..=4);
        let n = rng.random_range(1..=40);
        let (g, _) = random_t_graph(d, n, rng.random());
        match canonical_decomposition(&g, d) {
            Ok(dec) => {
                levels += dec.depth();
                for st in &dec.stats {
                    calls += 1;
                    let z0 = st.z0.unwrap_or(0);
                    if st.l1 > d || z0 > d || st.size > 2 * d || st.size == 0 {
                        failures += 1;
                        notes.push(format!("case {case}: {st:?}"));
                    }
                }
            }
            Err(DecomposeError::NotTGraph { evidence, .. }) => {
                failures += 1;
                notes.push(format!("case {case} (d={d}, n={n}): {evidence}"));
            }
            Err(e) => {
                failures += 1;
                notes.push(format!("case {case}: {e}"));
            }
        }
    }
    notes.truncate(5);
    notes.push(format!("{calls} extraction calls, {levels} levels"));
    CriterionReport::new(3, "fragment bounds", total, failures, started, notes.join("; "))
}

fn closure(m: usize, gens: &[Permutation]) -> Vec<Permutation> {
    let mut set = HashSet::new();
    let id = Permutation::identity(m);
    set.insert(id.clone());
    let mut stack = vec![id];
    while let Some(x) = stack.pop() {
        for g in gens {
            let y = x.then(g);
            if set.insert(y.clone()) {
                stack.push(y);
            }
        }
    }
    set.into_iter().collect()
}

fn random_perm(m: usize, rng: &mut ChaCha8Rng) -> Permutation {
    let mut v: Vec<usize> = (0..m).collect();
    v.shuffle(rng);
    Permutation::from_images(v).unwrap()
}

fn same_elements(g: &GeneratedGroup, expected: &HashSet<Permutation>) -> bool {
    g.order() == num_bigint::BigUint::from(expected.len()) && g.generators().iter().all(|p| expected.contains(p))
}

/// Subgroup computation and the tower driver against exhaustive filtering.
pub fn group_engine(profile: Profile, seed: u64) -> CriterionReport {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5);
    let mut cases = 0;
    let mut failures = 0;
    let mut notes = Vec::new();
    let total = profile.cases(200);
    for case in 0..total {
        let m = rng.random_range(3..=7);
        let gens: Vec<Permutation> = (0..rng.random_range(1..=3)).map(|_| random_perm(m, &mut rng)).collect();
        let group = build_group(m, &gens).unwrap();
        let elements = closure(m, &gens);
        if elements.len() > 10_000 {
            continue;
        }
        cases += 1;
        if group.order() != num_bigint::BigUint::from(elements.len()) {
            failures += 1;
            notes.push(format!("case {case}: order"));
            continue;
        }
        // Stabilizers of a random point and a random set, and a parity test.
        let x = rng.random_range(0..m);
        let set: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.5)).collect();
        let set2 = set.clone();
        let parity = |p: &Permutation| {
            let mut seen = vec![false; p.len()];
            let mut even = true;
            for i in 0..p.len() {
                let mut j = i;
                let mut len = 0;
                while !seen[j] {
                    seen[j] = true;
                    j = p.apply(j);
                    len += 1;
                }
                if len > 0 && len % 2 == 0 {
                    even = !even;
                }
            }
            even
        };
        let preds = [
            MembershipPredicate::new("point", m as u64, move |p| p.apply(x) == x),
            MembershipPredicate::new("set", u64::MAX, move |p| p.image_of_set(&set) == set),
            MembershipPredicate::new("parity", 2, parity),
        ];
        let set_test = |p: &Permutation| p.image_of_set(&set2) == set2;
        let tests: [&dyn Fn(&Permutation) -> bool; 3] = [&|p| p.apply(x) == x, &set_test, &parity];
        let mut filtered: HashSet<Permutation> = elements.iter().cloned().collect();
        for (pred, test) in preds.iter().zip(tests) {
            let single: HashSet<Permutation> = elements.iter().filter(|p| test(p)).cloned().collect();
            match fhl_subgroup(&group, pred) {
                Ok(sub) if same_elements(&sub, &single) => {}
                _ => {
                    failures += 1;
                    notes.push(format!("case {case}: fhl {}", pred.name));
                }
            }
            filtered.retain(|p| test(p));
        }
        match tower_with_stats(&group, &preds) {
            Ok((top, stats)) => {
                if !same_elements(&top, &filtered) || stats.iter().any(|s| s.index > num_bigint::BigUint::from(s.bound)) {
                    failures += 1;
                    notes.push(format!("case {case}: tower"));
                }
            }
            Err(e) => {
                failures += 1;
                notes.push(format!("case {case}: tower error {e}"));
            }
        }
    }
    // Colored graphs with bounded color multiplicity.
    for case in 0..profile.cases(50) {
        let classes_n = rng.random_range(2..=3);
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut next = 0;
        for _ in 0..classes_n {
            let size = rng.random_range(1..=3);
            classes.push((next..next + size).collect());
            next += size;
        }
        let n = next;
        let mut edges = HashSet::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(0.4) {
                    edges.insert((u, v));
                }
            }
        }
        let g0 = symmetric_on_classes(&classes).unwrap();
        let mut preds = Vec::new();
        let edges_ref = &edges;
        for a in 0..classes.len() {
            for b in a..classes.len() {
                let (ca, cb) = (classes[a].clone(), classes[b].clone());
                let fact = |k: usize| (1..=k as u64).product::<u64>();
                let bound = fact(ca.len()) * fact(cb.len());
                preds.push(MembershipPredicate::new(format!("edges {a}-{b}"), bound, move |p: &Permutation| {
                    ca.iter().all(|&u| {
                        cb.iter().all(|&v| {
                            if u == v {
                                return true;
                            }
                            let e = edges_ref.contains(&(u.min(v), u.max(v)));
                            let (x, y) = (p.apply(u), p.apply(v));
                            e == edges_ref.contains(&(x.min(y), x.max(y)))
                        })
                    })
                }));
            }
        }
        cases += 1;
        let keeps = |p: &Permutation| {
            edges.iter().all(|&(u, v)| {
                let (x, y) = (p.apply(u), p.apply(v));
                edges.contains(&(x.min(y), x.max(y)))
            })
        };
        let expected: HashSet<Permutation> = g0.elements().into_iter().filter(|p| keeps(p)).collect();
        match tower_with_stats(&g0, &preds) {
            Ok((top, stats)) if same_elements(&top, &expected) && stats.iter().all(|s| s.index <= num_bigint::BigUint::from(s.bound)) => {}
            _ => {
                failures += 1;
                notes.push(format!("colored case {case}"));
            }
        }
    }
    notes.truncate(5);
    CriterionReport::new(5, "group engine", cases, failures, started, notes.join("; "))
}

fn random_family(rng: &mut ChaCha8Rng, max_sets: usize, max_ground: usize) -> SetFamily {
    let ground = rng.random_range(1..=max_ground);
    let k = rng.random_range(0..=max_sets);
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for _ in 0..k {
        if !sets.is_empty() && rng.random_bool(0.2) {
            let i = rng.random_range(0..sets.len());
            sets.push(sets[i].clone());
        } else {
            sets.push((0..ground).filter(|_| rng.random_bool(0.4)).collect());
        }
    }
    let annotations = (0..k).map(|_| if rng.random_bool(0.2) { 1 } else { 0 }).collect();
    SetFamily::annotated(ground, sets, annotations).unwrap()
}

fn all_perms(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    permute(&mut cur, 0, &mut out);
    out
}

fn permute(v: &mut Vec<usize>, i: usize, out: &mut Vec<Vec<usize>>) {
    if i == v.len() {
        out.push(v.clone());
        return;
    }
    for j in i..v.len() {
        v.swap(i, j);
        permute(v, i + 1, out);
        v.swap(i, j);
    }
}

/// Exhaustive: some ground bijection carries every member `A` to `p(A)`.
fn ground_bijection_exists(u: &SetFamily, p: &Permutation) -> bool {
    if (0..u.len()).any(|i| u.annotation(i) != u.annotation(p.apply(i))) {
        return false;
    }
    let member: Vec<HashSet<usize>> = u.sets.iter().map(|s| s.iter().copied().collect()).collect();
    all_perms(u.ground).into_iter().any(|zeta| {
        (0..u.len()).all(|i| (0..u.ground).all(|z| member[i].contains(&z) == member[p.apply(i)].contains(&zeta[z])))
    })
}

/// Venn cells against direct set arithmetic, automorphism tests against
/// ground-bijection search, and group orders against permutation filters.
pub fn set_families(profile: Profile, seed: u64) -> CriterionReport {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6);
    let mut cases = 0;
    let mut failures = 0;
    let mut notes = Vec::new();
    for case in 0..profile.cases(300) {
        let u = random_family(&mut rng, 4, 6);
        cases += 1;
        // Cell counts for every nonempty subfamily.
        let sig = cell_signature(&u);
        let k = u.len();
        let mut ok = true;
        for mask in 1u32..(1 << k) {
            let inside: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
            let direct = (0..u.ground)
                .filter(|z| {
                    (0..k).all(|i| u.sets[i].contains(z) == inside.contains(&i))
                })
                .count();
            if sig.get(&inside).copied().unwrap_or(0) != direct {
                ok = false;
            }
        }
        for p in all_perms(k) {
            let p = Permutation::from_images(p).unwrap();
            if is_family_automorphism(&u, &p) != ground_bijection_exists(&u, &p) {
                ok = false;
            }
        }
        if !ok {
            failures += 1;
            notes.push(format!("case {case}: venn/automorphism"));
        }
    }
    for case in 0..profile.cases(200) {
        let u = random_family(&mut rng, 6, 6);
        cases += 1;
        let t = max_antichain_size(&u);
        let expected: HashSet<Permutation> = all_perms(u.len())
            .into_iter()
            .map(|p| Permutation::from_images(p).unwrap())
            .filter(|p| is_family_automorphism(&u, p))
            .collect();
        let brute_t = brute_antichain(&u);
        match family_autgroup(&u, t) {
            Ok(g) if same_elements(&g, &expected) && brute_t == t => {}
            other => {
                failures += 1;
                notes.push(format!("case {case}: autgroup {:?}", other.map(|g| g.order())));
            }
        }
    }
    notes.truncate(5);
    CriterionReport::new(6, "set families", cases, failures, started, notes.join("; "))
}

fn brute_antichain(u: &SetFamily) -> usize {
    let k = u.len();
    let comparable = |i: usize, j: usize| {
        crate::graph::is_subset(&u.sets[i], &u.sets[j]) || crate::graph::is_subset(&u.sets[j], &u.sets[i])
    };
    (0u32..(1 << k))
        .filter(|mask| {
            let idx: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
            idx.iter().enumerate().all(|(a, &i)| idx[a + 1..].iter().all(|&j| !comparable(i, j)))
        })
        .map(|mask| mask.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

/// Connected component of a random small T-graph, relabeled to `0..k`.
fn random_connected(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Graph {
    let (g, _) = random_t_graph(d, n, rng.random());
    let comps = g.components();
    let big = comps.iter().max_by_key(|c| c.len()).unwrap();
    g.induced(big).0
}

/// Intersection graph of small random subtrees of a random tree on at most
/// seven nodes; chordal with at most seven maximal cliques.
fn random_subtree_graph(rng: &mut ChaCha8Rng) -> Graph {
    let k = rng.random_range(1..=7);
    let parent: Vec<usize> = (0..k).map(|i| if i == 0 { 0 } else { rng.random_range(0..i) }).collect();
    let mut adj = vec![Vec::new(); k];
    for i in 1..k {
        adj[i].push(parent[i]);
        adj[parent[i]].push(i);
    }
    let mut models: Vec<Vec<usize>> = (1..k).map(|i| vec![i, parent[i]]).collect();
    for x in 0..k {
        if adj[x].len() <= 1 && rng.random_bool(0.7) {
            models.push(vec![x]);
        }
    }
    for _ in 0..rng.random_range(usize::from(k == 1)..=4) {
        let mut model = vec![rng.random_range(0..k)];
        let size = rng.random_range(1..=3);
        while model.len() < size {
            let frontier: Vec<usize> =
                model.iter().flat_map(|&x| adj[x].iter().copied()).filter(|y| !model.contains(y)).collect();
            if frontier.is_empty() {
                break;
            }
            model.push(frontier[rng.random_range(0..frontier.len())]);
        }
        models.push(model);
    }
    let n = models.len();
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if models[u].iter().any(|x| models[v].contains(x)) {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    g
}

/// Every clique order in which each vertex's cliques are consecutive.
pub fn exhaustive_clique_paths(g: &Graph) -> Vec<Vec<usize>> {
    let cliques = maximal_cliques(g).expect("chordal");
    let k = cliques.len();
    let holders: Vec<Vec<usize>> = (0..g.n()).map(|v| (0..k).filter(|&c| cliques[c].contains(v)).collect()).collect();
    all_perms(k)
        .into_iter()
        .filter(|order| {
            let mut pos = vec![0; k];
            for (i, &c) in order.iter().enumerate() {
                pos[c] = i;
            }
            holders.iter().all(|h| {
                let lo = h.iter().map(|&c| pos[c]).min().unwrap();
                let hi = h.iter().map(|&c| pos[c]).max().unwrap();
                hi - lo + 1 == h.len()
            })
        })
        .collect()
}

fn random_marked(rng: &mut ChaCha8Rng, max_n: usize) -> MarkedIntervalGraph {
    let host = loop {
        let n = rng.random_range(1..=max_n);
        let g = random_connected(rng, 2, n);
        if build_pq_tree(&g).is_some() {
            break g;
        }
    };
    let cliques = maximal_cliques(&host).unwrap();
    let fam_count = rng.random_range(1..=2);
    let families: Vec<Vec<Vec<usize>>> = (0..fam_count)
        .map(|_| {
            (0..rng.random_range(0..=3))
                .map(|_| {
                    let c = &cliques[rng.random_range(0..cliques.len())].0;
                    let mut s: Vec<usize> = c.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
                    if s.is_empty() {
                        s.push(c[rng.random_range(0..c.len())]);
                    }
                    s
                })
                .collect()
        })
        .collect();
    let leaves: Vec<usize> = (0..host.n()).filter(|&v| host.degree(v) == 1).collect();
    let tail = if !leaves.is_empty() && rng.random_bool(0.4) { Some(leaves[rng.random_range(0..leaves.len())]) } else { None };
    MarkedIntervalGraph::new(host, families, tail).unwrap()
}

/// PQ-tree presence and order sets against clique-order enumeration, and the
/// marked action group against automorphism enumeration.
pub fn interval_pq(profile: Profile, seed: u64) -> CriterionReport {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7);
    let mut cases = 0;
    let mut failures = 0;
    let mut notes = Vec::new();
    let mut done = 0;
    let mut interval_count = 0;
    while done < profile.cases(200) {
        let g = if done % 2 == 0 {
            let d = rng.random_range(2..=4);
            let n = rng.random_range(1..=10);
            random_connected(&mut rng, d, n)
        } else {
            random_subtree_graph(&mut rng)
        };
        let k = maximal_cliques(&g).unwrap().len();
        if k > 7 {
            continue;
        }
        done += 1;
        cases += 1;
        let paths = exhaustive_clique_paths(&g);
        let tree = build_pq_tree(&g);
        interval_count += usize::from(tree.is_some());
        let ok = match &tree {
            None => paths.is_empty(),
            Some(t) => {
                let mut ours = t.permissible_orders();
                ours.sort();
                let mut theirs = paths.clone();
                theirs.sort();
                !paths.is_empty()
                    && (k > 6 || (ours == theirs && t.permissible_order_count() == num_bigint::BigUint::from(paths.len())))
            }
        };
        if !ok {
            failures += 1;
            notes.push(format!("pq case {done}: {} cliques, tree {}", k, tree.map(|t| t.to_text()).unwrap_or_default()));
        }
    }
    for case in 0..profile.cases(100) {
        let m = random_marked(&mut rng, 9);
        cases += 1;
        let fast = marked_action_group(&m);
        let slow = brute_marked_autgroup(&m).unwrap();
        let expected: HashSet<Permutation> = slow.elements().into_iter().collect();
        match fast {
            Ok(g) if same_elements(&g, &expected) => {}
            other => {
                failures += 1;
                notes.push(format!("marked case {case}: got {:?}, want {}", other.map(|g| g.order()), slow.order()));
            }
        }
    }
    notes.truncate(5);
    notes.push(format!("{interval_count}/{done} corpus graphs interval"));
    CriterionReport::new(7, "interval and PQ-trees", cases, failures, started, notes.join("; "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_library_criteria_pass() {
        for id in [5, 6, 7] {
            let r = run_criterion(id, Profile::Quick, 1, Faults::default());
            assert!(r.passed, "{}", r.line());
        }
    }

    #[test]
    fn quick_engine_criteria_pass() {
        for id in [1, 4, 8] {
            let r = run_criterion(id, Profile::Quick, 3, Faults::default());
            assert!(r.passed, "{}", r.line());
        }
    }

    #[test]
    fn injected_fault_is_detected() {
        let r = run_criterion(1, Profile::Quick, 3, Faults { flip_oracle_edge: true });
        assert!(!r.passed);
        assert!(r.failures > 0);
    }
}
