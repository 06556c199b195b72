//! Executable facility-location rules. Every rule reads only the occupied
//! set, so all of them ignore duplicate ballots by construction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Family, Graph};
use crate::prefs::{pe_mask, OccupiedSet, PrefTable, PreferenceKind, Profile};

/// Largest graph whose rule table we are willing to materialize.
pub const TABLE_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    /// First vertex of `order` that is Pareto efficient.
    SequentialPareto {
        order: Vec<usize>,
        kind: PreferenceKind,
    },
    /// Point of the minimal subtree spanning the occupied set that is
    /// closest to `target` (trees, peaked).
    Target {
        target: usize,
    },
    /// Unanimity between the endpoints `a`, `b` of a fixed longest path:
    /// `a` if anyone strictly prefers it, else `b` (trees, dipped).
    LongestPath {
        a: usize,
        b: usize,
    },
    Table(RuleTable),
}

impl Rule {
    pub fn sequential_pareto(g: &Graph, order: Vec<usize>, kind: PreferenceKind) -> Result<Rule> {
        let mut seen = 0u64;
        for &v in &order {
            if v >= g.n() || seen >> v & 1 == 1 {
                return Err(Error::BadOrder(g.n()));
            }
            seen |= 1 << v;
        }
        if order.len() != g.n() {
            return Err(Error::BadOrder(g.n()));
        }
        Ok(Rule::SequentialPareto { order, kind })
    }

    pub fn target(g: &Graph, target: usize) -> Result<Rule> {
        if !g.is_tree() {
            return Err(Error::NotATree);
        }
        if target >= g.n() {
            return Err(Error::InvalidVertex {
                vertex: target,
                n: g.n(),
            });
        }
        Ok(Rule::Target { target })
    }

    /// Longest path found by double sweep from vertex 0, ties to the
    /// smallest id; endpoints ordered `a < b`.
    pub fn longest_path(g: &Graph) -> Result<Rule> {
        if !g.is_tree() {
            return Err(Error::NotATree);
        }
        let farthest = |from: usize| {
            (0..g.n())
                .max_by_key(|&v| (g.dist(from, v), std::cmp::Reverse(v)))
                .unwrap_or(from)
        };
        let end0 = farthest(0);
        let end1 = farthest(end0);
        Ok(Rule::LongestPath {
            a: end0.min(end1),
            b: end0.max(end1),
        })
    }

    /// Shipped orderings: `c3`, `c4-peaked`, `c4-dipped`, `c5-peaked`,
    /// `c5-dipped` (an optional `preset:` prefix is accepted).
    pub fn preset(name: &str, g: &Graph) -> Result<Rule> {
        let name = name.strip_prefix("preset:").unwrap_or(name);
        let (k, order, kind): (usize, &[usize], PreferenceKind) = match name {
            "c3" | "c3-peaked" => (3, &[0, 1, 2], PreferenceKind::Peaked),
            "c3-dipped" => (3, &[0, 1, 2], PreferenceKind::Dipped),
            // v1 -> v3 -> v2 -> v4
            "c4-peaked" => (4, &[0, 2, 1, 3], PreferenceKind::Peaked),
            "c4-dipped" => (4, &[0, 2, 1, 3], PreferenceKind::Dipped),
            // v1 -> v2 -> v5 -> v3 -> v4
            "c5-peaked" => (5, &[0, 1, 4, 2, 3], PreferenceKind::Peaked),
            "c5-dipped" => (5, &[0, 1, 4, 2, 3], PreferenceKind::Dipped),
            other => return Err(Error::InvalidSpec(format!("unknown preset `{other}`"))),
        };
        if g.family() != &Family::Cycle(k) {
            return Err(Error::InvalidSpec(format!(
                "preset `{name}` needs the cycle C{k}"
            )));
        }
        Rule::sequential_pareto(g, order.to_vec(), kind)
    }

    pub fn name(&self) -> String {
        match self {
            Rule::SequentialPareto { order, kind } => format!(
                "seq_pareto[{}]({kind})",
                order
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            Rule::Target { target } => format!("target({target})"),
            Rule::LongestPath { a, b } => format!("longest_path({a},{b})"),
            Rule::Table(t) => format!("table({} entries)", t.len()),
        }
    }

    pub fn eval(&self, g: &Graph, occ: OccupiedSet) -> usize {
        match self {
            Rule::SequentialPareto { order, kind } => {
                let pe = pe_mask(g, occ, *kind);
                *order
                    .iter()
                    .find(|&&v| pe >> v & 1 == 1)
                    .expect("Pareto set is never empty")
            }
            Rule::Target { target } => target_point(g, *target, occ),
            Rule::LongestPath { a, b } => {
                if occ.iter().any(|v| g.dist(v, *a) > g.dist(v, *b)) {
                    *a
                } else {
                    *b
                }
            }
            Rule::Table(t) => t.get(occ),
        }
    }

    pub fn eval_profile(&self, g: &Graph, profile: &Profile) -> usize {
        self.eval(g, profile.occupied())
    }
}

/// Deepest common ancestor of `occ` in the tree rooted at `target`, which is
/// the point of the spanning subtree nearest the target.
fn target_point(g: &Graph, target: usize, occ: OccupiedSet) -> usize {
    let on_root_path = |u: usize, y: usize| g.dist(target, u) + g.dist(u, y) == g.dist(target, y);
    (0..g.n())
        .filter(|&u| occ.iter().all(|y| on_root_path(u, y)))
        .max_by_key(|&u| g.dist(target, u))
        .unwrap_or(target)
}

/// Explicit rule: one outcome per non-empty occupied set, indexed by mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RuleTable {
    n: usize,
    kind: PreferenceKind,
    entries: Vec<u8>,
}

impl RuleTable {
    pub fn from_fn<F>(g: &Graph, kind: PreferenceKind, mut f: F) -> Result<RuleTable>
    where
        F: FnMut(OccupiedSet) -> usize,
    {
        check_table_cap(g)?;
        let mut entries = vec![0u8; 1 << g.n()];
        for s in OccupiedSet::enumerate(g) {
            let v = f(s);
            if v >= g.n() {
                return Err(Error::InvalidVertex {
                    vertex: v,
                    n: g.n(),
                });
            }
            entries[s.bits() as usize] = v as u8;
        }
        Ok(RuleTable {
            n: g.n(),
            kind,
            entries,
        })
    }

    /// Builds from raw entries indexed by mask; index 0 is ignored.
    pub fn from_entries(g: &Graph, kind: PreferenceKind, entries: Vec<u8>) -> Result<RuleTable> {
        check_table_cap(g)?;
        if entries.len() != 1 << g.n() {
            return Err(Error::InvalidSpec(format!(
                "table needs {} entries, got {}",
                (1usize << g.n()) - 1,
                entries.len().saturating_sub(1)
            )));
        }
        if let Some(&v) = entries[1..].iter().find(|&&v| v as usize >= g.n()) {
            return Err(Error::InvalidVertex {
                vertex: v as usize,
                n: g.n(),
            });
        }
        Ok(RuleTable {
            n: g.n(),
            kind,
            entries,
        })
    }

    #[inline]
    pub fn get(&self, occ: OccupiedSet) -> usize {
        self.entries[occ.bits() as usize] as usize
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> PreferenceKind {
        self.kind
    }

    /// Number of defined sets, `2^n - 1`.
    pub fn len(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (OccupiedSet, usize)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .skip(1)
            .map(|(m, &v)| (OccupiedSet::new(m as u64).unwrap(), v as usize))
    }

    /// JSON map keyed by `0b`-prefixed masks, vertex 0 in the lowest bit.
    pub fn to_json_entries(&self) -> BTreeMap<String, usize> {
        self.iter()
            .map(|(s, v)| (format!("0b{:0width$b}", s.bits(), width = self.n), v))
            .collect()
    }
}

fn check_table_cap(g: &Graph) -> Result<()> {
    if g.n() > TABLE_CAP {
        Err(Error::GraphTooLarge {
            n: g.n(),
            cap: TABLE_CAP,
        })
    } else {
        Ok(())
    }
}

/// Materializes any rule as an explicit table.
pub fn as_table(g: &Graph, rule: &Rule) -> Result<RuleTable> {
    match rule {
        Rule::Table(t) => Ok(t.clone()),
        Rule::SequentialPareto { order, kind } => {
            let prefs = PrefTable::new(g, *kind);
            RuleTable::from_fn(g, *kind, |s| {
                let pe = prefs.pe_mask(s.bits());
                *order.iter().find(|&&v| pe >> v & 1 == 1).unwrap()
            })
        }
        Rule::Target { .. } => RuleTable::from_fn(g, PreferenceKind::Peaked, |s| rule.eval(g, s)),
        Rule::LongestPath { .. } => {
            RuleTable::from_fn(g, PreferenceKind::Dipped, |s| rule.eval(g, s))
        }
    }
}

/// JSON-facing rule description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RuleSpec {
    SeqPareto {
        order: Vec<usize>,
        kind: PreferenceKind,
    },
    Target {
        target: usize,
    },
    LongestPath,
    Table {
        entries: BTreeMap<String, usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kind: Option<PreferenceKind>,
    },
}

impl RuleSpec {
    /// `default_kind` labels tables that carry no kind of their own.
    pub fn instantiate(&self, g: &Graph, default_kind: PreferenceKind) -> Result<Rule> {
        match self {
            RuleSpec::SeqPareto { order, kind } => Rule::sequential_pareto(g, order.clone(), *kind),
            RuleSpec::Target { target } => Rule::target(g, *target),
            RuleSpec::LongestPath => Rule::longest_path(g),
            RuleSpec::Table { entries, kind } => {
                check_table_cap(g)?;
                let mut raw = vec![u8::MAX; 1 << g.n()];
                raw[0] = 0;
                for (key, &v) in entries {
                    let mask = parse_mask(key)?;
                    let set = OccupiedSet::for_graph(g, mask)?;
                    if v >= g.n() {
                        return Err(Error::InvalidVertex {
                            vertex: v,
                            n: g.n(),
                        });
                    }
                    raw[set.bits() as usize] = v as u8;
                }
                if let Some(missing) = raw.iter().position(|&v| v == u8::MAX) {
                    return Err(Error::IncompleteTable(missing as u64));
                }
                Ok(Rule::Table(RuleTable::from_entries(
                    g,
                    kind.unwrap_or(default_kind),
                    raw,
                )?))
            }
        }
    }

    pub fn from_rule(rule: &Rule) -> RuleSpec {
        match rule {
            Rule::SequentialPareto { order, kind } => RuleSpec::SeqPareto {
                order: order.clone(),
                kind: *kind,
            },
            Rule::Target { target } => RuleSpec::Target { target: *target },
            Rule::LongestPath { .. } => RuleSpec::LongestPath,
            Rule::Table(t) => RuleSpec::Table {
                entries: t.to_json_entries(),
                kind: Some(t.kind()),
            },
        }
    }
}

fn parse_mask(key: &str) -> Result<u64> {
    let bad = || Error::InvalidSpec(format!("bad set key `{key}`"));
    let key = key.trim();
    if let Some(bin) = key.strip_prefix("0b") {
        u64::from_str_radix(bin, 2).map_err(|_| bad())
    } else if let Some(hex) = key.strip_prefix("0x") {
        u64::from_str_radix(hex, 16).map_err(|_| bad())
    } else {
        key.parse().map_err(|_| bad())
    }
}
