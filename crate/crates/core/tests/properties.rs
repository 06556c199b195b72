mod common;

use common::*;
use fnp_core::exec::Exec;
use fnp_core::graph::{automorphisms, find_dp_embedding, Embedding, Graph};
use fnp_core::prefs::{pe_set, OccupiedSet, PreferenceKind};
use fnp_core::prove::{prove_existence, ProveOptions};
use fnp_core::rules::{as_table, Rule, RuleTable};
use fnp_core::verify::{removal_violations, verify, verify_pe, FnpVerdict};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Connected graph on `1..=max_n` vertices: a random spanning tree plus a
/// few extra edges.
fn connected_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n)
        .prop_flat_map(|n| {
            let parents = (1..n).map(|i| 0..i).collect::<Vec<_>>();
            let extra = prop::collection::vec((0..n, 0..n), 0..=n);
            (Just(n), parents, extra)
        })
        .prop_map(|(n, parents, extra)| {
            let mut edges: Vec<(usize, usize)> = parents
                .into_iter()
                .enumerate()
                .map(|(i, p)| (p, i + 1))
                .collect();
            for (a, b) in extra {
                let e = (a.min(b), a.max(b));
                if a != b && !edges.iter().any(|&(x, y)| (x.min(y), x.max(y)) == e) {
                    edges.push(e);
                }
            }
            Graph::custom(&edges, Some(n)).unwrap()
        })
}

fn tree(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n)
        .prop_flat_map(|n| (1..n).map(|i| 0..i).collect::<Vec<_>>())
        .prop_map(|parents| {
            let edges: Vec<(usize, usize)> = parents
                .into_iter()
                .enumerate()
                .map(|(i, p)| (p, i + 1))
                .collect();
            Graph::tree(&edges, Some(edges.len() + 1)).unwrap()
        })
}

fn kind() -> impl Strategy<Value = PreferenceKind> {
    prop_oneof![Just(PreferenceKind::Peaked), Just(PreferenceKind::Dipped)]
}

/// Exhaustive injective-map search, no pruning.
fn brute_embeds(pattern: &Graph, host: &Graph) -> bool {
    fn go(p: &Graph, h: &Graph, map: &mut Vec<usize>) -> bool {
        if map.len() == p.n() {
            return Embedding { map: map.clone() }.is_valid(p, h);
        }
        for c in 0..h.n() {
            if !map.contains(&c) {
                map.push(c);
                if go(p, h, map) {
                    return true;
                }
                map.pop();
            }
        }
        false
    }
    go(pattern, host, &mut Vec::new())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn self_embedding_exists_and_identity_is_an_automorphism(g in connected_graph(8)) {
        let e = find_dp_embedding(&g, &g).expect("graph embeds in itself");
        prop_assert!(e.is_valid(&g, &g));
        let identity: Vec<usize> = (0..g.n()).collect();
        let id_map = Embedding { map: identity.clone() };
        prop_assert!(id_map.is_valid(&g, &g));
        prop_assert!(automorphisms(&g).contains(&identity));
    }

    #[test]
    fn embeddings_preserve_distances(p in connected_graph(4), h in connected_graph(6)) {
        let found = find_dp_embedding(&p, &h);
        if let Some(e) = &found {
            prop_assert!(e.is_valid(&p, &h));
            for u in 0..p.n() {
                for w in 0..p.n() {
                    prop_assert_eq!(h.dist(e.map[u], e.map[w]), p.dist(u, w));
                }
            }
        }
        prop_assert_eq!(found.is_some(), brute_embeds(&p, &h));
    }

    #[test]
    fn pe_sets_are_never_empty(g in connected_graph(8), k in kind(), bits in any::<u64>()) {
        let mask = bits & g.full_mask();
        prop_assume!(mask != 0);
        let occ = OccupiedSet::new(mask).unwrap();
        prop_assert!(!pe_set(&g, occ, k).is_empty());
    }

    #[test]
    fn singleton_pe_is_the_agents_favourites(g in connected_graph(7), k in kind(), v in 0usize..7) {
        prop_assume!(v < g.n());
        let pe = pe_set(&g, OccupiedSet::singleton(v), k);
        let best: Vec<usize> = match k {
            PreferenceKind::Peaked => vec![v],
            PreferenceKind::Dipped => {
                let far = (0..g.n()).map(|w| g.dist(v, w)).max().unwrap();
                (0..g.n()).filter(|&w| g.dist(v, w) == far).collect()
            }
        };
        prop_assert_eq!(pe, best);
    }

    #[test]
    fn even_cycle_antipode_swaps_kinds(half in 2usize..=5, bits in any::<u64>()) {
        let k = 2 * half;
        let g = Graph::cycle(k).unwrap();
        let mask = bits & g.full_mask();
        prop_assume!(mask != 0);
        let occ = OccupiedSet::new(mask).unwrap();
        let mut mapped: Vec<usize> = pe_set(&g, occ, PreferenceKind::Peaked)
            .into_iter()
            .map(|v| (v + half) % k)
            .collect();
        mapped.sort_unstable();
        prop_assert_eq!(mapped, pe_set(&g, occ, PreferenceKind::Dipped));
    }

    #[test]
    fn sequential_pareto_is_pareto_efficient(
        g in connected_graph(7),
        k in kind(),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let mut order: Vec<usize> = (0..g.n()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let rule = Rule::sequential_pareto(&g, order, k).unwrap();
        prop_assert!(verify_pe(&g, &rule, k, &Exec::sequential()).unwrap().holds());
    }

    #[test]
    fn target_rule_is_fnp_pe_and_removal_consistent(g in tree(8), t in 0usize..8) {
        prop_assume!(t < g.n());
        let rule = Rule::target(&g, t).unwrap();
        let v = verify(&g, &rule, PreferenceKind::Peaked, &Exec::sequential()).unwrap();
        prop_assert!(v.holds(), "{:?}", v);
        prop_assert!(removal_violations(&g, &rule).unwrap().is_empty());
    }

    #[test]
    fn longest_path_rule_is_fnp_and_picks_a_favourite(g in tree(9)) {
        let rule = Rule::longest_path(&g).unwrap();
        let kind = PreferenceKind::Dipped;
        let v = verify(&g, &rule, kind, &Exec::sequential()).unwrap();
        prop_assert!(v.fnp.holds());
        for occ in OccupiedSet::enumerate(&g) {
            let out = rule.eval(&g, occ);
            prop_assert!(occ.iter().any(|a| (0..g.n()).all(|w| g.dist(a, w) <= g.dist(a, out))));
        }
    }

    #[test]
    fn certificates_validate_and_exec_modes_agree(
        g in connected_graph(6),
        k in kind(),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rule = random_inside_table(&mut rng, &g, k);
        let seq = verify(&g, &rule, k, &Exec::sequential()).unwrap();
        let par = verify(&g, &rule, k, &Exec::parallel(Some(4))).unwrap();
        prop_assert_eq!(&seq, &par);
        if let FnpVerdict::Violated(c) = &seq.fnp {
            prop_assert!(c.is_valid(&g, &rule, k));
            prop_assert!(c.gain(k) > 0);
            prop_assert!(c.to_manipulation().is_profitable(&g, &rule, k));
        }
    }

    #[test]
    fn tables_round_trip_through_json(g in connected_graph(5), k in kind(), seed in any::<u64>()) {
        use fnp_core::rules::RuleSpec;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rule = random_table(&mut rng, &g, k);
        let spec = RuleSpec::from_rule(&rule);
        let text = serde_json::to_string(&spec).unwrap();
        let back: RuleSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.instantiate(&g, k).unwrap(), rule);
    }
}

#[test]
fn removal_property_holds_for_every_witness_on_small_graphs() {
    let graphs = [
        Graph::path(4).unwrap(),
        Graph::star(4).unwrap(),
        Graph::cycle(3).unwrap(),
        Graph::cycle(4).unwrap(),
        Graph::cycle(5).unwrap(),
        Graph::hypergrid(&[2, 3]).unwrap(),
    ];
    for g in graphs {
        let opts = ProveOptions {
            enumerate: Some(2000),
            symmetry_breaking: false,
            ..ProveOptions::default()
        };
        let r = prove_existence(&g, PreferenceKind::Peaked, &opts, &Exec::sequential()).unwrap();
        assert!(!r.solutions.is_empty());
        for t in r.solutions {
            let rule = Rule::Table(t);
            assert!(removal_violations(&g, &rule).unwrap().is_empty());
        }
    }
}

#[test]
fn removal_property_flags_a_non_fnp_rule() {
    // On the path 0-1-2, choose 1 for the full set but 0 once the agent at
    // 2 leaves: the outcome 1 survives the removal yet the choice changes.
    let g = Graph::path(3).unwrap();
    let kind = PreferenceKind::Peaked;
    let base = Rule::sequential_pareto(&g, vec![1, 0, 2], kind).unwrap();
    let table = RuleTable::from_fn(&g, kind, |occ| {
        if occ.bits() == 0b011 {
            0
        } else {
            base.eval(&g, occ)
        }
    })
    .unwrap();
    let rule = Rule::Table(table);
    let full = OccupiedSet::all(&g);
    let violations = removal_violations(&g, &rule).unwrap();
    assert!(violations.contains(&(full, 2)));
    let t = as_table(&g, &rule).unwrap();
    for (occ, v) in violations {
        let rest = occ.without(v).unwrap();
        assert!(rest.contains(t.get(occ)));
        assert_ne!(t.get(rest), t.get(occ));
    }
    assert!(!verify(&g, &rule, kind, &Exec::sequential())
        .unwrap()
        .fnp
        .holds());
}

#[test]
fn random_tables_are_reproducible_from_seed() {
    let g = Graph::cycle(5).unwrap();
    let a = random_table(
        &mut ChaCha8Rng::seed_from_u64(3),
        &g,
        PreferenceKind::Peaked,
    );
    let b = random_table(
        &mut ChaCha8Rng::seed_from_u64(3),
        &g,
        PreferenceKind::Peaked,
    );
    assert_eq!(a, b);
    let Rule::Table(t) = a else { unreachable!() };
    assert_eq!(t.len(), 31);
}
