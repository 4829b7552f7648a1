use std::collections::HashSet;

use num_bigint::BigUint;
use proptest::prelude::*;
use tgraph::graph::maximal_cliques;
use tgraph::harness::random_t_graph;
use tgraph::interval::{build_pq_tree, marked_action_group, MarkedIntervalGraph};
use tgraph::perm::{build_group, fhl_subgroup, tower_with_stats, MembershipPredicate};
use tgraph::selftest::exhaustive_clique_paths;
use tgraph::setfamily::{cell_signature, family_autgroup, is_family_automorphism, SetFamily};
use tgraph::{Graph, Permutation};

fn arb_perm(m: usize) -> impl Strategy<Value = Permutation> {
    Just((0..m).collect::<Vec<usize>>()).prop_shuffle().prop_map(|v| Permutation::from_images(v).unwrap())
}

fn arb_gens() -> impl Strategy<Value = (usize, Vec<Permutation>)> {
    (1usize..=6).prop_flat_map(|m| (Just(m), proptest::collection::vec(arb_perm(m), 0..4)))
}

fn closure(m: usize, gens: &[Permutation]) -> HashSet<Permutation> {
    let mut seen = HashSet::from([Permutation::identity(m)]);
    let mut frontier = vec![Permutation::identity(m)];
    while let Some(p) = frontier.pop() {
        for g in gens {
            let q = p.then(g);
            if seen.insert(q.clone()) {
                frontier.push(q);
            }
        }
    }
    seen
}

fn arb_family() -> impl Strategy<Value = SetFamily> {
    (1usize..=5).prop_flat_map(|ground| {
        proptest::collection::vec(proptest::collection::vec(0..ground, 0..=ground), 1..=5)
            .prop_map(move |sets| SetFamily::new(ground, sets).unwrap())
    })
}

/// A connected interval host with clique families drawn from its maximal
/// cliques (and their sub-cliques).
fn arb_marked() -> impl Strategy<Value = MarkedIntervalGraph> {
    (1usize..=9, any::<u64>(), proptest::collection::vec((0usize..2, 0usize..16, 0u32..8), 0..5)).prop_map(
        |(n, seed, picks)| {
            let g = random_t_graph(2, n, seed).0;
            let comp = g.components().into_iter().max_by_key(Vec::len).unwrap();
            let host = g.induced(&comp).0;
            let cliques = maximal_cliques(&host).unwrap();
            let mut families = vec![Vec::new(), Vec::new()];
            for (fam, c, mask) in picks {
                let clique = &cliques[c % cliques.len()].0;
                let mut set: Vec<usize> =
                    clique.iter().enumerate().filter(|(i, _)| mask >> (i % 3) & 1 == 1).map(|(_, &v)| v).collect();
                if set.is_empty() {
                    set = clique.clone();
                }
                families[fam].push(set);
            }
            MarkedIntervalGraph::new(host, families, None).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn order_matches_closure((m, gens) in arb_gens()) {
        let g = build_group(m, &gens).unwrap();
        let all = closure(m, &gens);
        prop_assert_eq!(g.order(), BigUint::from(all.len()));
        prop_assert!(g.contains(&Permutation::identity(m)).unwrap());
        for p in &gens {
            prop_assert!(g.contains(&p.inverse()).unwrap());
        }
        let elems: HashSet<Permutation> = g.elements().into_iter().collect();
        prop_assert_eq!(elems, all);
    }

    #[test]
    fn fhl_matches_filtering((m, gens) in arb_gens(), point in 0usize..6, set_size in 0usize..4) {
        let g = build_group(m, &gens).unwrap();
        let point = point % m;
        let set: Vec<usize> = (0..set_size.min(m)).collect();
        let stab = MembershipPredicate::new("fix point", m as u64, move |p: &Permutation| p.apply(point) == point)
            .with_key(move |p: &Permutation| vec![p.apply(point) as u64]);
        let setwise = {
            let set = set.clone();
            MembershipPredicate::new("fix set", u64::MAX, move |p: &Permutation| p.image_of_set(&set) == set)
        };
        for pred in [&stab, &setwise] {
            let h = fhl_subgroup(&g, pred).unwrap();
            let ours: HashSet<Permutation> = h.elements().into_iter().collect();
            let want: HashSet<Permutation> = g.elements().into_iter().filter(|p| pred.accepts(p)).collect();
            prop_assert_eq!(ours, want);
        }
        let (top, stages) = tower_with_stats(&g, &[stab, setwise]).unwrap();
        let want = g.elements().into_iter().filter(|p| p.apply(point) == point && p.image_of_set(&set) == set).count();
        prop_assert_eq!(top.order(), BigUint::from(want));
        prop_assert!(stages.iter().all(|s| s.index <= BigUint::from(s.bound)));
    }

    #[test]
    fn cell_signature_is_relabeling_invariant(u in arb_family(), seed in any::<u64>()) {
        let mut v: Vec<usize> = (0..u.ground).collect();
        let mut s = seed;
        for i in (1..v.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            v.swap(i, (s >> 33) as usize % (i + 1));
        }
        let relabeled = SetFamily::new(u.ground, u.sets.iter().map(|a| a.iter().map(|&x| v[x]).collect()).collect()).unwrap();
        prop_assert_eq!(cell_signature(&u), cell_signature(&relabeled));
    }

    #[test]
    fn family_autgroup_is_closed(u in arb_family()) {
        let g = family_autgroup(&u, usize::MAX).unwrap();
        let gens = g.generators();
        for a in gens {
            prop_assert!(is_family_automorphism(&u, a));
            for b in gens {
                prop_assert!(is_family_automorphism(&u, &a.then(b)));
            }
        }
    }

    #[test]
    fn marked_action_preserves_families(m in arb_marked()) {
        let group = marked_action_group(&m).unwrap();
        let sets = m.marked_sets();
        let mut family_of = Vec::new();
        for (f, fam) in m.families.iter().enumerate() {
            family_of.extend(std::iter::repeat_n(f, fam.len()));
        }
        for p in group.elements().into_iter().take(200) {
            for i in 0..sets.len() {
                prop_assert_eq!(family_of[p.apply(i)], family_of[i]);
                prop_assert_eq!(sets[p.apply(i)].len(), sets[i].len());
            }
        }
    }

    #[test]
    fn permissible_orders_are_clique_paths(n in 1usize..=10, seed in any::<u64>()) {
        let g = random_t_graph(2, n, seed).0;
        let comp = g.components().into_iter().max_by_key(Vec::len).unwrap();
        let g: Graph = g.induced(&comp).0;
        prop_assume!(maximal_cliques(&g).unwrap().len() <= 6);
        let tree = build_pq_tree(&g).unwrap();
        let mut ours = tree.permissible_orders();
        let mut want = exhaustive_clique_paths(&g);
        ours.sort();
        want.sort();
        prop_assert_eq!(tree.permissible_order_count(), BigUint::from(want.len()));
        prop_assert_eq!(ours, want);
    }
}
