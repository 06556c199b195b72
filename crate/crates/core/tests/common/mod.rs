#![allow(dead_code)]

use fnp_core::graph::{Graph, GraphSpec};
use fnp_core::prefs::PreferenceKind;
use fnp_core::rules::{Rule, RuleTable};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Uniform random attachment: vertex `i` hangs off a random earlier vertex.
pub fn random_tree_edges(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|i| (rng.gen_range(0..i), i)).collect()
}

pub fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    let edges = random_tree_edges(rng, n);
    Graph::tree(&edges, Some(n)).unwrap()
}

/// Small graphs every oracle comparison runs on.
pub fn small_battery() -> Vec<(String, Graph)> {
    let specs = [
        GraphSpec::Path { m: 2 },
        GraphSpec::Path { m: 4 },
        GraphSpec::Path { m: 5 },
        GraphSpec::Star { n: 4 },
        GraphSpec::Tree {
            edges: vec![(0, 1), (1, 2), (1, 3), (3, 4), (3, 5)],
            n: None,
        },
        GraphSpec::Cycle { k: 3 },
        GraphSpec::Cycle { k: 4 },
        GraphSpec::Cycle { k: 5 },
        GraphSpec::Cycle { k: 6 },
        GraphSpec::Hypergrid { dims: vec![2, 3] },
        GraphSpec::Custom {
            edges: vec![(0, 1), (1, 2), (2, 0), (2, 3)],
            n: None,
        },
    ];
    specs
        .iter()
        .map(|s| (s.name(), s.build().unwrap()))
        .collect()
}

/// Rules that ship for a graph: presets on cycles, target rules (every
/// target) and the longest-path rule on trees, plus a sequential Pareto rule
/// in id order for everything.
pub fn shipped_rules(g: &Graph, kind: PreferenceKind) -> Vec<Rule> {
    let mut out = vec![Rule::sequential_pareto(g, (0..g.n()).collect(), kind).unwrap()];
    if let fnp_core::graph::Family::Cycle(k) = g.family() {
        if *k <= 5 {
            out.push(Rule::preset(&format!("c{k}-{kind}"), g).unwrap());
        }
    }
    if g.is_tree() {
        match kind {
            PreferenceKind::Peaked => out.extend((0..g.n()).map(|t| Rule::target(g, t).unwrap())),
            PreferenceKind::Dipped => out.push(Rule::longest_path(g).unwrap()),
        }
    }
    out
}

/// A table choosing uniformly from the whole vertex set on every occupied
/// set (so not necessarily Pareto efficient).
pub fn random_table(rng: &mut ChaCha8Rng, g: &Graph, kind: PreferenceKind) -> Rule {
    let n = g.n();
    Rule::Table(RuleTable::from_fn(g, kind, |_| rng.gen_range(0..n)).unwrap())
}

/// A random table that picks inside the occupied set, which hits far more
/// near-misses than a uniform choice.
pub fn random_inside_table(rng: &mut ChaCha8Rng, g: &Graph, kind: PreferenceKind) -> Rule {
    Rule::Table(
        RuleTable::from_fn(g, kind, |occ| {
            let v = occ.to_vec();
            v[rng.gen_range(0..v.len())]
        })
        .unwrap(),
    )
}
