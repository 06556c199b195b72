//! The `fnpw` command-line front end.
//!
//! Exit codes: 0 when the command completed (violations and Unsat are
//! results, not failures), 2 for malformed input.

use std::io::Write;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::{find_dp_embedding, Family, Graph, GraphSpec};
use crate::prefs::{pe_set, OccupiedSet, PreferenceKind};
use crate::prove::report::{reproduce_table, TableOptions};
use crate::prove::{
    prove_existence, prove_via_embedding, Propagation, ProveOptions, Reduction, Status,
};
use crate::rules::{Rule, RuleSpec};
use crate::verify::{
    verify, verify_fnp_bruteforce, Bounds, BruteforceVerdict, FnpVerdict, PeVerdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Md,
    Tsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropagationArg {
    Fc,
    Ac,
}

#[derive(Debug, Parser)]
#[command(
    name = "fnpw",
    version,
    about = "False-name-proof facility location workbench"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Leave out wall-clock times and node counts.
    #[arg(long, global = true)]
    pub no_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check Pareto efficiency and false-name-proofness of a rule.
    Verify(VerifyArgs),
    /// Search for a false-name-proof, Pareto-efficient rule.
    Prove(ProveArgs),
    /// Find a distance-preserving embedding of one graph in another.
    Embed(EmbedArgs),
    /// Run the whole instance battery.
    Table(TableArgs),
    /// Print the Pareto-efficient set of an occupied set.
    Pe(PeArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Graph spec JSON.
    #[arg(long)]
    pub graph: String,
    /// Rule spec JSON or `preset:<name>`.
    #[arg(long)]
    pub rule: String,
    /// Preference kind; defaults to the rule's own.
    #[arg(long)]
    pub kind: Option<PreferenceKind>,
    /// Also run the explicit profile enumeration.
    #[arg(long)]
    pub bruteforce: bool,
    #[arg(long, default_value_t = 3)]
    pub max_agents: usize,
    #[arg(long, default_value_t = 2)]
    pub max_fakes: usize,
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    #[arg(long)]
    pub graph: String,
    #[arg(long)]
    pub kind: PreferenceKind,
    /// Seconds before giving up.
    #[arg(long, default_value_t = 300)]
    pub timeout: u64,
    /// Collect every witness up to this many (small graphs only).
    #[arg(long, num_args = 0..=1, default_missing_value = "1000")]
    pub enumerate: Option<usize>,
    #[arg(long, value_enum, default_value = "fc")]
    pub propagation: PropagationArg,
    /// Disable automorphism symmetry breaking.
    #[arg(long)]
    pub no_symmetry: bool,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub pattern: String,
    #[arg(long)]
    pub host: String,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Per-cell search timeout in seconds.
    #[arg(long, default_value_t = 300)]
    pub timeout: u64,
    #[arg(long, value_enum, default_value = "fc")]
    pub propagation: PropagationArg,
}

#[derive(Debug, Args)]
pub struct PeArgs {
    #[arg(long)]
    pub graph: String,
    /// Occupied vertices: `3,4,5` on cycles, `(1,1),(2,3)` on grids, ids
    /// elsewhere.
    #[arg(long)]
    pub occ: String,
    #[arg(long)]
    pub kind: PreferenceKind,
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            if !text.ends_with('\n') {
                let _ = writeln!(out);
            }
            0
        }
        Err(e) => {
            let _ = writeln!(err, "fnpw: {e}");
            2
        }
    }
}

fn execute(cli: &Cli) -> Result<String> {
    let exec = Exec::parallel(cli.jobs);
    let timing = !cli.no_timing;
    match &cli.command {
        Command::Verify(a) => cmd_verify(a, cli.format, &exec),
        Command::Prove(a) => cmd_prove(a, cli.format, timing, &exec),
        Command::Embed(a) => cmd_embed(a, cli.format),
        Command::Table(a) => {
            let opts = TableOptions {
                timeout: Duration::from_secs(a.timeout),
                propagation: propagation(a.propagation),
            };
            let report = reproduce_table(&opts, &exec)?;
            Ok(match cli.format {
                Format::Json => pretty(&report.to_json(timing)),
                Format::Md => report.to_markdown(timing),
                Format::Tsv => report.to_tsv(timing),
            })
        }
        Command::Pe(a) => cmd_pe(a, cli.format),
    }
}

fn propagation(p: PropagationArg) -> Propagation {
    match p {
        PropagationArg::Fc => Propagation::ForwardChecking,
        PropagationArg::Ac => Propagation::ArcConsistency,
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

pub fn parse_graph(text: &str) -> Result<(GraphSpec, Graph)> {
    let spec: GraphSpec =
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(format!("graph spec: {e}")))?;
    let g = spec.build()?;
    Ok((spec, g))
}

/// `preset:<name>` or a rule spec JSON. The kind falls back to the rule's
/// natural one: its own for sequential Pareto and tables, peaked for target
/// rules, dipped for longest-path rules.
pub fn parse_rule(
    text: &str,
    g: &Graph,
    kind: Option<PreferenceKind>,
) -> Result<(Rule, PreferenceKind)> {
    let text = text.trim();
    let rule = if text.starts_with('{') {
        let spec: RuleSpec = serde_json::from_str(text)
            .map_err(|e| Error::InvalidSpec(format!("rule spec: {e}")))?;
        spec.instantiate(g, kind.unwrap_or(PreferenceKind::Peaked))?
    } else if text.starts_with("preset:") {
        Rule::preset(text, g)?
    } else {
        return Err(Error::InvalidSpec(format!(
            "rule must be JSON or preset:<name>, got `{text}`"
        )));
    };
    let natural = match &rule {
        Rule::SequentialPareto { kind, .. } => *kind,
        Rule::Target { .. } => PreferenceKind::Peaked,
        Rule::LongestPath { .. } => PreferenceKind::Dipped,
        Rule::Table(t) => t.kind(),
    };
    Ok((rule, kind.unwrap_or(natural)))
}

/// Splits an occupied-set argument into vertex tokens. Parenthesised
/// tuples are kept whole; otherwise commas, semicolons and spaces separate.
fn occ_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut depth = 0usize;
    for c in text.chars() {
        match c {
            '(' => {
                depth += 1;
                cur.push(c);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                cur.push(c);
            }
            ',' | ';' | ' ' if depth == 0 => {
                if !cur.trim().is_empty() {
                    tokens.push(cur.trim().to_string());
                }
                cur.clear();
            }
            _ => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        tokens.push(cur.trim().to_string());
    }
    tokens
}

pub fn parse_occ(text: &str, g: &Graph) -> Result<OccupiedSet> {
    let text = text.trim().trim_start_matches('{').trim_end_matches('}');
    let mut bits = 0u64;
    for tok in occ_tokens(text) {
        let v = match g.vertex_by_label(&tok) {
            Some(v) => v,
            None if !matches!(g.family(), Family::Cycle(_) | Family::Hypergrid(_)) => {
                let v: usize = tok
                    .parse()
                    .map_err(|_| Error::InvalidSpec(format!("unknown vertex `{tok}`")))?;
                if v >= g.n() {
                    return Err(Error::InvalidVertex {
                        vertex: v,
                        n: g.n(),
                    });
                }
                v
            }
            None => return Err(Error::InvalidSpec(format!("unknown vertex `{tok}`"))),
        };
        bits |= 1 << v;
    }
    OccupiedSet::for_graph(g, bits)
}

fn cmd_pe(a: &PeArgs, format: Format) -> Result<String> {
    let (spec, g) = parse_graph(&a.graph)?;
    let occ = parse_occ(&a.occ, &g)?;
    let pe = pe_set(&g, occ, a.kind);
    let pe_set_ = OccupiedSet::from_vertices(pe.iter().copied())?;
    let labels = |s: OccupiedSet| s.iter().map(|v| g.label(v).to_string()).collect::<Vec<_>>();
    Ok(match format {
        Format::Json => pretty(&json!({
            "graph": spec.name(),
            "kind": a.kind.as_str(),
            "occ": labels(occ),
            "pe": labels(pe_set_),
        })),
        Format::Md => format!("PE({}) = {}\n", occ.display(&g), pe_set_.display(&g)),
        Format::Tsv => format!("occ\tpe\n{}\t{}\n", occ.display(&g), pe_set_.display(&g)),
    })
}

fn cmd_verify(a: &VerifyArgs, format: Format, exec: &Exec) -> Result<String> {
    let (spec, g) = parse_graph(&a.graph)?;
    let (rule, kind) = parse_rule(&a.rule, &g, a.kind)?;
    let bounds = Bounds {
        max_agents: a.max_agents,
        max_fakes: a.max_fakes,
    };
    let brute = if a.bruteforce {
        Some(verify_fnp_bruteforce(&g, &rule, kind, bounds)?)
    } else {
        None
    };
    let verdict = verify(&g, &rule, kind, exec)?;
    let word = |h: bool| if h { "holds" } else { "violated" };
    Ok(match format {
        Format::Json => {
            let mut v = json!({
                "graph": spec.name(),
                "rule": rule.name(),
                "kind": kind.as_str(),
            });
            let obj = v.as_object_mut().unwrap();
            if let Value::Object(m) = verdict.to_json(&g, kind) {
                obj.extend(m);
            }
            if let Some(b) = &brute {
                obj.insert("bruteforce".into(), brute_json(&g, b, bounds));
            }
            pretty(&v)
        }
        Format::Md | Format::Tsv => {
            let mut s = format!(
                "{} on {} ({kind}): fnp={} pe={}\n",
                rule.name(),
                spec.name(),
                word(verdict.fnp.holds()),
                word(verdict.pe.holds())
            );
            if let PeVerdict::Violated {
                occ,
                outcome,
                dominator,
            } = &verdict.pe
            {
                s.push_str(&format!(
                    "pe counterexample: f({}) = {} is dominated by {}\n",
                    occ.display(&g),
                    g.label(*outcome),
                    g.label(*dominator)
                ));
            }
            if let FnpVerdict::Violated(c) = &verdict.fnp {
                s.push_str(&format!(
                    "fnp counterexample: agent at {} moves f({}) = {} (distance {}) to f({}) = {} (distance {})\n",
                    g.label(c.manipulator),
                    c.before.display(&g),
                    g.label(c.outcome_before),
                    c.dist_before,
                    c.after.display(&g),
                    g.label(c.outcome_after),
                    c.dist_after
                ));
            }
            if let Some(b) = &brute {
                s.push_str(&format!("bruteforce: {}\n", word(b.holds())));
            }
            s
        }
    })
}

fn brute_json(g: &Graph, b: &BruteforceVerdict, bounds: Bounds) -> Value {
    let label = |v: &usize| g.label(*v).to_string();
    let result = match b {
        BruteforceVerdict::Holds => json!("holds"),
        BruteforceVerdict::Violated(m) => json!({
            "truthful": m.truthful.iter().map(label).collect::<Vec<_>>(),
            "agent": m.agent,
            "report": g.label(m.report),
            "fakes": m.fakes.iter().map(label).collect::<Vec<_>>(),
        }),
    };
    json!({
        "max_agents": bounds.max_agents,
        "max_fakes": bounds.max_fakes,
        "result": result,
    })
}

fn cmd_prove(a: &ProveArgs, format: Format, timing: bool, exec: &Exec) -> Result<String> {
    let (spec, g) = parse_graph(&a.graph)?;
    let opts = ProveOptions {
        timeout: Some(Duration::from_secs(a.timeout)),
        symmetry_breaking: !a.no_symmetry,
        propagation: propagation(a.propagation),
        enumerate: a.enumerate,
        ..ProveOptions::default()
    };
    let r = prove_existence(&g, a.kind, &opts, exec)?;
    let reduction = if a.kind == PreferenceKind::Peaked && !r.status.is_sat() {
        match prove_via_embedding(&g, a.kind)? {
            Reduction::UnsatByReduction { pattern, embedding } => Some((pattern, embedding)),
            Reduction::Inconclusive => None,
        }
    } else {
        None
    };
    let status = match (&r.status, &reduction) {
        (Status::Timeout(_), Some(_)) => "unsat",
        (s, _) => s.label(),
    };
    // Hypergrids under dipped preferences have no published answer.
    let new_evidence =
        a.kind == PreferenceKind::Dipped && matches!(g.family(), Family::Hypergrid(_));
    Ok(match format {
        Format::Json => {
            let mut v = json!({
                "graph": spec.name(),
                "kind": a.kind.as_str(),
                "status": status,
            });
            let obj = v.as_object_mut().unwrap();
            if let Status::Sat(t) = &r.status {
                obj.insert("witness_table".into(), json!(t.to_json_entries()));
            }
            if let Some((pattern, e)) = &reduction {
                let map: Vec<&str> = e.map.iter().map(|&h| g.label(h)).collect();
                obj.insert(
                    "embedding".into(),
                    json!({ "pattern": pattern, "map": map }),
                );
            }
            if a.enumerate.is_some() {
                obj.insert("solutions".into(), json!(r.solutions.len()));
                obj.insert("truncated".into(), json!(r.truncated));
                obj.insert(
                    "witnesses".into(),
                    json!(r
                        .solutions
                        .iter()
                        .map(|t| t.to_json_entries())
                        .collect::<Vec<_>>()),
                );
            }
            if new_evidence {
                obj.insert(
                    "note".into(),
                    json!("open case; this result is new evidence"),
                );
            }
            if timing {
                obj.insert("nodes".into(), json!(r.stats.nodes));
                obj.insert("seconds".into(), json!(r.elapsed.as_secs_f64()));
            }
            pretty(&v)
        }
        Format::Md | Format::Tsv => {
            let mut s = format!("{} ({}): {status}\n", spec.name(), a.kind);
            if let Status::Sat(t) = &r.status {
                for (occ, v) in t.iter() {
                    s.push_str(&format!("f({}) = {}\n", occ.display(&g), g.label(v)));
                }
            }
            if let Some((pattern, e)) = &reduction {
                let image = OccupiedSet::new(e.image_mask())?;
                s.push_str(&format!(
                    "{} embeds as {}\n",
                    pattern.name(),
                    image.display(&g)
                ));
            }
            if a.enumerate.is_some() {
                s.push_str(&format!(
                    "witnesses: {}{}\n",
                    r.solutions.len(),
                    if r.truncated { " (truncated)" } else { "" }
                ));
            }
            if new_evidence {
                s.push_str("open case; this result is new evidence\n");
            }
            if timing {
                s.push_str(&format!(
                    "nodes: {}, time: {:.3}s\n",
                    r.stats.nodes,
                    r.elapsed.as_secs_f64()
                ));
            }
            s
        }
    })
}

fn cmd_embed(a: &EmbedArgs, format: Format) -> Result<String> {
    let (pspec, pattern) = parse_graph(&a.pattern)?;
    let (hspec, host) = parse_graph(&a.host)?;
    if pattern.n() > host.n() {
        return Err(Error::InvalidSpec(format!(
            "pattern has {} vertices, host only {}",
            pattern.n(),
            host.n()
        )));
    }
    let found = find_dp_embedding(&pattern, &host);
    Ok(match format {
        Format::Json => {
            let map = found.as_ref().map(|e| {
                (0..pattern.n())
                    .map(|p| (pattern.label(p).to_string(), json!(host.label(e.map[p]))))
                    .collect::<serde_json::Map<_, _>>()
            });
            pretty(&json!({
                "pattern": pspec.name(),
                "host": hspec.name(),
                "found": found.is_some(),
                "embedding": map,
            }))
        }
        Format::Md | Format::Tsv => match &found {
            None => format!("{} does not embed in {}\n", pspec.name(), hspec.name()),
            Some(e) => {
                let mut s = format!("{} embeds in {}\n", pspec.name(), hspec.name());
                for p in 0..pattern.n() {
                    let sep = if format == Format::Tsv { "\t" } else { " -> " };
                    s.push_str(&format!(
                        "{}{sep}{}\n",
                        pattern.label(p),
                        host.label(e.map[p])
                    ));
                }
                s
            }
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occ_tokens_split_at_depth_zero() {
        assert_eq!(occ_tokens("3,4,5"), ["3", "4", "5"]);
        assert_eq!(occ_tokens("(1,1),(2,3)"), ["(1,1)", "(2,3)"]);
        assert_eq!(occ_tokens("v1 v3"), ["v1", "v3"]);
    }

    #[test]
    fn occ_uses_cycle_and_grid_labels() {
        let c5 = Graph::cycle(5).unwrap();
        assert_eq!(parse_occ("3,4,5", &c5).unwrap().bits(), 0b11100);
        assert_eq!(parse_occ("{v1, v2}", &c5).unwrap().bits(), 0b00011);
        assert!(parse_occ("6", &c5).is_err());
        let grid = Graph::hypergrid(&[2, 3]).unwrap();
        assert_eq!(parse_occ("(1,1),(2,3)", &grid).unwrap().bits(), 1 | 1 << 5);
        let path = Graph::path(4).unwrap();
        assert_eq!(parse_occ("0,3", &path).unwrap().bits(), 0b1001);
        assert!(parse_occ("", &path).is_err());
    }

    #[test]
    fn rule_kind_defaults() {
        let t = Graph::path(4).unwrap();
        let (_, k) = parse_rule(r#"{"rule":"longest_path"}"#, &t, None).unwrap();
        assert_eq!(k, PreferenceKind::Dipped);
        let (_, k) = parse_rule(r#"{"rule":"target","target":1}"#, &t, None).unwrap();
        assert_eq!(k, PreferenceKind::Peaked);
        assert!(parse_rule("c5-peaked", &t, None).is_err());
    }
}
