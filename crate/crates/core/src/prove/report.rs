//! Runs the instance battery and renders the existence summary as
//! Markdown, TSV or JSON.

use std::fmt::Write as _;
use std::time::Duration;

use serde_json::{json, Value};

use super::instances::{battery, Expected, GraphClass, Instance};
use super::{prove_existence, prove_via_embedding, Propagation, ProveOptions, Reduction, Status};
use crate::error::Result;
use crate::exec::Exec;
use crate::graph::{Embedding, Family, Graph, GraphSpec};
use crate::prefs::{OccupiedSet, PreferenceKind};
use crate::rules::Rule;
use crate::verify::verify;

#[derive(Debug, Clone)]
pub struct TableOptions {
    pub timeout: Duration,
    pub propagation: Propagation,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            timeout: Duration::from_secs(300),
            propagation: Propagation::ForwardChecking,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RuleCheck {
    pub rule: String,
    pub pe: bool,
    pub fnp: bool,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub instance: Instance,
    pub graph: Graph,
    /// Direct exhaustive search.
    pub search: Status,
    pub reduction: Option<(GraphSpec, Embedding)>,
    pub rule_check: Option<RuleCheck>,
    pub nodes: u64,
    pub seconds: f64,
}

impl Cell {
    pub fn name(&self) -> String {
        self.instance.spec.name()
    }

    pub fn kind(&self) -> PreferenceKind {
        self.instance.kind
    }

    /// Combined verdict: search first, then the reduction or a verified
    /// rule when the search ran out of time.
    pub fn status(&self) -> &'static str {
        match &self.search {
            Status::Sat(_) => "sat",
            Status::Unsat => "unsat",
            Status::Timeout(_) if self.reduction.is_some() => "unsat",
            Status::Timeout(_) if self.rule_check.as_ref().is_some_and(|r| r.pe && r.fnp) => "sat",
            Status::Timeout(_) => "timeout",
        }
    }

    pub fn agreement(&self) -> &'static str {
        match self.instance.expected {
            Expected::Open => "new",
            e if e.as_str() == self.status() => "yes",
            _ => "no",
        }
    }

    pub fn matches_expected(&self) -> bool {
        self.agreement() != "no"
    }

    pub fn certificate(&self) -> String {
        let mut parts = Vec::new();
        match &self.search {
            Status::Sat(t) => {
                let root = t.get(OccupiedSet::all(&self.graph));
                parts.push(format!(
                    "witness table ({} sets, f(V)={})",
                    t.len(),
                    self.graph.label(root)
                ));
            }
            Status::Unsat => parts.push("search exhausted".to_string()),
            Status::Timeout(d) => {
                parts.push(format!("search timed out after {:.0}s", d.as_secs_f64()))
            }
        }
        if let Some((pattern, e)) = &self.reduction {
            let image = OccupiedSet::new(e.image_mask()).unwrap();
            parts.push(format!(
                "{} embeds as {}",
                pattern.name(),
                image.display(&self.graph)
            ));
        }
        if let Some(rc) = &self.rule_check {
            let failed: Vec<&str> = [("pe", rc.pe), ("fnp", rc.fnp)]
                .iter()
                .filter(|(_, ok)| !ok)
                .map(|(p, _)| *p)
                .collect();
            if failed.is_empty() {
                parts.push(format!("{} verified", rc.rule));
            } else {
                parts.push(format!("{} violates {}", rc.rule, failed.join(" and ")));
            }
        }
        parts.join("; ")
    }

    fn to_json(&self, timing: bool) -> Value {
        let mut v = json!({
            "graph": self.name(),
            "class": self.instance.class.as_str(),
            "kind": self.kind().as_str(),
            "expected": self.instance.expected.as_str(),
            "status": self.status(),
            "search": self.search.label(),
            "agreement": self.agreement(),
        });
        let obj = v.as_object_mut().unwrap();
        if let Status::Sat(t) = &self.search {
            obj.insert("witness_table".into(), json!(t.to_json_entries()));
        }
        if let Some((pattern, e)) = &self.reduction {
            let map: Vec<&str> = e.map.iter().map(|&h| self.graph.label(h)).collect();
            obj.insert(
                "embedding".into(),
                json!({ "pattern": pattern, "map": map }),
            );
        }
        if let Some(rc) = &self.rule_check {
            obj.insert(
                "rule_check".into(),
                json!({ "rule": rc.rule, "pe": rc.pe, "fnp": rc.fnp }),
            );
        }
        if timing {
            obj.insert("nodes".into(), json!(self.nodes));
            obj.insert("seconds".into(), json!(self.seconds));
        }
        v
    }
}

/// A rule known to work on the instance, if one ships for it.
fn shipped_rule(inst: &Instance, g: &Graph) -> Option<Rule> {
    match (inst.class, g.family(), inst.kind) {
        (GraphClass::Tree, _, PreferenceKind::Peaked) => Rule::target(g, 0).ok(),
        (GraphClass::Tree, _, PreferenceKind::Dipped) => Rule::longest_path(g).ok(),
        (GraphClass::Cycle, Family::Cycle(k), kind) if *k <= 5 => {
            Rule::preset(&format!("c{k}-{kind}"), g).ok()
        }
        _ => None,
    }
}

pub fn run_cell(inst: &Instance, opts: &TableOptions, exec: &Exec) -> Result<Cell> {
    let g = inst.spec.build()?;
    let prove_opts = ProveOptions {
        timeout: Some(opts.timeout),
        propagation: opts.propagation,
        ..ProveOptions::default()
    };
    let result = prove_existence(&g, inst.kind, &prove_opts, exec)?;
    let reduction = if inst.kind == PreferenceKind::Peaked && inst.class != GraphClass::Tree {
        match prove_via_embedding(&g, inst.kind)? {
            Reduction::UnsatByReduction { pattern, embedding } => Some((pattern, embedding)),
            Reduction::Inconclusive => None,
        }
    } else {
        None
    };
    let rule_check = match shipped_rule(inst, &g) {
        Some(rule) => {
            let v = verify(&g, &rule, inst.kind, exec)?;
            Some(RuleCheck {
                rule: rule.name(),
                pe: v.pe.holds(),
                fnp: v.fnp.holds(),
            })
        }
        None => None,
    };
    Ok(Cell {
        instance: inst.clone(),
        graph: g,
        search: result.status,
        reduction,
        rule_check,
        nodes: result.stats.nodes,
        seconds: result.elapsed.as_secs_f64(),
    })
}

#[derive(Debug, Clone)]
pub struct TableReport {
    pub cells: Vec<Cell>,
}

/// Runs the full battery, one cell at a time; a timed-out cell never aborts
/// the run.
pub fn reproduce_table(opts: &TableOptions, exec: &Exec) -> Result<TableReport> {
    let cells = battery()
        .iter()
        .map(|inst| run_cell(inst, opts, exec))
        .collect::<Result<Vec<_>>>()?;
    Ok(TableReport { cells })
}

impl TableReport {
    pub fn all_match(&self) -> bool {
        self.cells.iter().all(Cell::matches_expected)
    }

    pub fn find(&self, name: &str, kind: PreferenceKind) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.name() == name && c.kind() == kind)
    }

    pub fn to_json(&self, timing: bool) -> Value {
        json!({
            "cells": self.cells.iter().map(|c| c.to_json(timing)).collect::<Vec<_>>(),
            "all_match": self.all_match(),
        })
    }

    pub fn to_tsv(&self, timing: bool) -> String {
        let mut out = String::from("graph\tclass\tkind\texpected\tstatus\tagreement\tcertificate");
        if timing {
            out.push_str("\tnodes\tseconds");
        }
        out.push('\n');
        for c in &self.cells {
            let _ = write!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                c.name(),
                c.instance.class.as_str(),
                c.kind(),
                c.instance.expected.as_str(),
                c.status(),
                c.agreement(),
                c.certificate()
            );
            if timing {
                let _ = write!(out, "\t{}\t{:.3}", c.nodes, c.seconds);
            }
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self, timing: bool) -> String {
        let mut out = String::new();
        out.push_str("## Existence of false-name-proof and Pareto efficient rules\n\n");
        out.push_str("| preferences | tree | cycle | hypergrid |\n|---|---|---|---|\n");
        for kind in PreferenceKind::ALL {
            let _ = write!(out, "| single-{kind} |");
            for class in [GraphClass::Tree, GraphClass::Cycle, GraphClass::Hypergrid] {
                let entries: Vec<String> = self
                    .cells
                    .iter()
                    .filter(|c| c.kind() == kind && c.instance.class == class)
                    .map(|c| {
                        let mark = match c.status() {
                            "sat" => "✓",
                            "unsat" => "✗",
                            _ => "?",
                        };
                        let new = if c.instance.expected == Expected::Open {
                            " (new)"
                        } else {
                            ""
                        };
                        format!("{} {mark}{new}", c.name())
                    })
                    .collect();
                let _ = write!(out, " {} |", entries.join(", "));
            }
            out.push('\n');
        }
        out.push_str("\n| graph | kind | expected | computed | agreement | certificate |");
        if timing {
            out.push_str(" nodes | time (s) |");
        }
        out.push_str("\n|---|---|---|---|---|---|");
        if timing {
            out.push_str("---|---|");
        }
        out.push('\n');
        for c in &self.cells {
            let _ = write!(
                out,
                "| {} | {} | {} | {} | {} | {} |",
                c.name(),
                c.kind(),
                c.instance.expected.as_str(),
                c.status(),
                c.agreement(),
                c.certificate()
            );
            if timing {
                let _ = write!(out, " {} | {:.3} |", c.nodes, c.seconds);
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "\nAll known cells reproduced: {}",
            if self.all_match() { "yes" } else { "NO" }
        );
        out
    }
}
