//! The fixed instance battery behind the summary table.

use crate::graph::{Graph, GraphSpec};
use crate::prefs::PreferenceKind;

/// Tree on 8 vertices: longest path 0-1-2-4-6-7 with pendants 3 (at 2) and
/// 5 (at 4).
pub fn pendant_tree_spec() -> GraphSpec {
    GraphSpec::Tree {
        edges: vec![(0, 1), (1, 2), (2, 3), (2, 4), (4, 5), (4, 6), (6, 7)],
        n: None,
    }
}

pub fn pendant_tree() -> Graph {
    pendant_tree_spec().build().expect("valid tree")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GraphClass {
    Tree,
    Cycle,
    Hypergrid,
}

impl GraphClass {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphClass::Tree => "tree",
            GraphClass::Cycle => "cycle",
            GraphClass::Hypergrid => "hypergrid",
        }
    }
}

/// What the existence question is known to resolve to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Sat,
    Unsat,
    Open,
}

impl Expected {
    pub fn as_str(self) -> &'static str {
        match self {
            Expected::Sat => "sat",
            Expected::Unsat => "unsat",
            Expected::Open => "open",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: GraphSpec,
    pub class: GraphClass,
    pub kind: PreferenceKind,
    pub expected: Expected,
}

pub fn battery() -> Vec<Instance> {
    use PreferenceKind::*;
    let mut out = Vec::new();
    for kind in PreferenceKind::ALL {
        for spec in [
            GraphSpec::Path { m: 5 },
            GraphSpec::Path { m: 6 },
            GraphSpec::Star { n: 5 },
            pendant_tree_spec(),
        ] {
            out.push(Instance {
                spec,
                class: GraphClass::Tree,
                kind,
                expected: Expected::Sat,
            });
        }
        for k in 3..=7 {
            out.push(Instance {
                spec: GraphSpec::Cycle { k },
                class: GraphClass::Cycle,
                kind,
                expected: if k <= 5 {
                    Expected::Sat
                } else {
                    Expected::Unsat
                },
            });
        }
    }
    for (dims, expected) in [
        (vec![2, 2], Expected::Sat),
        (vec![2, 3], Expected::Sat),
        (vec![2, 4], Expected::Sat),
        (vec![3, 3], Expected::Unsat),
        (vec![2, 2, 2], Expected::Unsat),
    ] {
        out.push(Instance {
            spec: GraphSpec::Hypergrid { dims },
            class: GraphClass::Hypergrid,
            kind: Peaked,
            expected,
        });
    }
    for dims in [vec![2, 3], vec![2, 2, 2]] {
        out.push(Instance {
            spec: GraphSpec::Hypergrid { dims },
            class: GraphClass::Hypergrid,
            kind: Dipped,
            expected: Expected::Open,
        });
    }
    out
}
