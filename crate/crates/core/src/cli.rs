//! Command-line front end.
//!
//! Summary lines meant for scripting:
//! `ZC: Proved`, `ZC: Proved (nilpotent shortcut)`, `ZC: Unknown (...)`,
//! `PQ: Proved`, `PQ: Proved (solvable shortcut)`, `PQ: Unknown (...)`,
//! `order K: N admissible, M rejected by Wagner test`, `Wagner: pass` / `Wagner: fail (...)`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::chartab::{cyclic_bundle, load_bundle, CharacterTable, TableBundle};
use crate::driver::{
    check_pq_with, check_zc_with, solve_order, trivial_solutions, tuple_from_json, OrderResult, Options,
    Report, Shortcut, SolutionStore, Verdict,
};
use crate::isolve::RedundPolicy;
use crate::sysbuild::PATuple;
use crate::wagner::wagner_check;

/// Environment variable naming the directory of bundled tables.
pub const DATA_DIR_VAR: &str = "HELP_DATA_DIR";

pub fn default_data_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data"))
}

#[derive(Parser, Debug)]
#[command(name = "help", about = "HeLP method checks for torsion units of integral group rings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args, Debug, Clone)]
struct Flags {
    /// Do not use the nilpotent / solvable shortcut theorems
    #[arg(long, global = true)]
    no_shortcuts: bool,
    /// Use only the ordinary character table
    #[arg(long, global = true)]
    no_brauer: bool,
    /// Keep Brauer tables even for primes p where the group is p-solvable
    #[arg(long, global = true)]
    no_fong_swan: bool,
    /// Try aggregated p-constant systems first for orders p*q
    #[arg(long, global = true)]
    p_constant: bool,
    /// Disable redundant-inequality removal
    #[arg(long, global = true)]
    no_redund: bool,
    /// Search node budget per system
    #[arg(long, global = true, value_name = "N")]
    max_nodes: Option<u64>,
    /// Write the solution store and verdict as JSON
    #[arg(long, global = true, value_name = "PATH")]
    json_out: Option<PathBuf>,
    /// Resume from a solution store and write the updated store back
    #[arg(long, global = true, value_name = "PATH")]
    store: Option<PathBuf>,
    /// Write every constructed linear system as text into this directory
    #[arg(long, global = true, value_name = "DIR")]
    dump_systems: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the Zassenhaus Conjecture
    Zc { bundle: String },
    /// Check the Prime Graph Question
    Pq { bundle: String },
    /// Compute admissible partial augmentations for units of one order
    Order { k: u64, bundle: String },
    /// Run the Wagner test on a single tuple
    Wagner {
        k: u64,
        bundle: String,
        #[arg(long, value_name = "FILE")]
        tuple: PathBuf,
    },
    /// Print facts about a table bundle
    Info { bundle: String },
}

impl Flags {
    fn options(&self) -> Options {
        let mut o = Options {
            shortcuts: !self.no_shortcuts,
            use_brauer: !self.no_brauer,
            fong_swan_skip: !self.no_fong_swan,
            p_constant: self.p_constant,
            dump_dir: self.dump_systems.clone(),
            ..Options::default()
        };
        if self.no_redund {
            o.solve.redund = RedundPolicy::Off;
        }
        if let Some(n) = self.max_nodes {
            o.solve.max_nodes = n;
        }
        o
    }
}

/// Resolves a bundle argument: `cyclic:N`, an existing path, or a name
/// relative to the data directory (`.json` may be omitted).
pub fn resolve_bundle(arg: &str) -> Result<TableBundle, String> {
    if let Some(n) = arg.strip_prefix("cyclic:") {
        let n: u64 = n.parse().map_err(|_| format!("bad cyclic group order in {arg:?}"))?;
        if n == 0 {
            return Err("cyclic group order must be positive".into());
        }
        return Ok(cyclic_bundle(n));
    }
    let path = find_bundle(arg).ok_or_else(|| format!("cannot find table bundle {arg:?}"))?;
    load_bundle(&path).map_err(|e| format!("{}: {e}", path.display()))
}

fn find_bundle(arg: &str) -> Option<PathBuf> {
    let mut names = vec![PathBuf::from(arg)];
    if !arg.ends_with(".json") {
        names.push(PathBuf::from(format!("{arg}.json")));
    }
    if let Some(p) = names.iter().find(|p| p.is_file()) {
        return Some(p.clone());
    }
    let mut dirs = Vec::new();
    if let Some(d) = std::env::var_os(DATA_DIR_VAR) {
        dirs.push(PathBuf::from(d));
    }
    dirs.push(default_data_dir());
    for dir in dirs {
        for name in &names {
            let mut candidates = vec![dir.join(name)];
            if let Some(base) = name.file_name() {
                candidates.push(dir.join(base));
            }
            if let Some(p) = candidates.into_iter().find(|p| p.is_file()) {
                return Some(p);
            }
        }
    }
    None
}

fn describe_tuple(t: &PATuple, table: &CharacterTable) -> String {
    let k = t.order;
    let mut parts = Vec::new();
    for (&e, pa) in t.per_divisor.iter().rev() {
        let label = if e == k { "u".to_string() } else { format!("u^{}", k / e) };
        let vals: Vec<String> = pa.entries.iter().map(|(&c, v)| format!("{}={v}", table.classes[c].name)).collect();
        parts.push(format!("{label}: {}", vals.join(" ")));
    }
    parts.join("; ")
}

fn load_store(path: &Path, table: &CharacterTable) -> Result<SolutionStore, String> {
    if !path.exists() {
        return Ok(SolutionStore::new(&table.group_name));
    }
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    SolutionStore::from_json(&v, table).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_json(path: &Path, v: &Value) -> Result<(), String> {
    let text = serde_json::to_string_pretty(v).map_err(|e| e.to_string())?;
    std::fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

fn verdict_line(prefix: &str, v: &Verdict) -> String {
    match v {
        Verdict::Proved(None) => format!("{prefix}: Proved"),
        Verdict::Proved(Some(Shortcut::Nilpotent)) => format!("{prefix}: Proved (nilpotent shortcut)"),
        Verdict::Proved(Some(Shortcut::Solvable)) => format!("{prefix}: Proved (solvable shortcut)"),
        Verdict::Unknown(obs) => {
            let parts: Vec<String> = obs.iter().map(|(k, r)| format!("order {k}: {r}")).collect();
            format!("{prefix}: Unknown ({})", parts.join("; "))
        }
    }
}

fn verdict_json(v: &Verdict) -> Value {
    match v {
        Verdict::Proved(s) => serde_json::json!({
            "status": "proved",
            "shortcut": s.map(|s| match s { Shortcut::Nilpotent => "nilpotent", Shortcut::Solvable => "solvable" }),
        }),
        Verdict::Unknown(obs) => serde_json::json!({
            "status": "unknown",
            "obstructions": obs.iter().map(|(k, r)| serde_json::json!({"order": k, "reason": r.to_string()})).collect::<Vec<_>>(),
        }),
    }
}

struct Outputs<'a> {
    flags: &'a Flags,
    table: &'a CharacterTable,
}

impl Outputs<'_> {
    fn save(&self, store: &SolutionStore, verdict: Option<&Verdict>) -> Result<(), String> {
        let mut v = store.to_json(self.table);
        if let Some(verdict) = verdict {
            v["verdict"] = verdict_json(verdict);
        }
        if let Some(p) = &self.flags.json_out {
            write_json(p, &v)?;
        }
        if let Some(p) = &self.flags.store {
            write_json(p, &store.to_json(self.table))?;
        }
        Ok(())
    }
}

fn order_lines(out: &mut dyn Write, report: &Report, table: &CharacterTable) -> std::io::Result<()> {
    for &k in &report.orders {
        match report.store.result(k) {
            Some(OrderResult::Solved(s)) => {
                let triv = trivial_solutions(table, k);
                let kind = if s.is_empty() {
                    "none".to_string()
                } else if s == triv {
                    format!("{} (trivial only)", s.len())
                } else {
                    format!("{} ({} nontrivial)", s.len(), s.iter().filter(|t| !triv.contains(t)).count())
                };
                writeln!(out, "order {k}: {kind}")?;
            }
            Some(OrderResult::Obstructed(r)) => writeln!(out, "order {k}: {r}")?,
            None => {}
        }
    }
    Ok(())
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, String> {
    let io = |e: std::io::Error| e.to_string();
    let options = cli.flags.options();
    match &cli.command {
        Command::Zc { bundle } | Command::Pq { bundle } => {
            let zc = matches!(cli.command, Command::Zc { .. });
            let b = resolve_bundle(bundle)?;
            let outputs = Outputs { flags: &cli.flags, table: &b.ordinary };
            let store = match &cli.flags.store {
                Some(p) => load_store(p, &b.ordinary)?,
                None => SolutionStore::new(b.group_name()),
            };
            let report = if zc { check_zc_with(&b, &options, store) } else { check_pq_with(&b, &options, store) }
                .map_err(|e| e.to_string())?;
            writeln!(out, "group: {}", b.group_name()).map_err(io)?;
            if !report.orders.is_empty() {
                let list: Vec<String> = report.orders.iter().map(u64::to_string).collect();
                writeln!(out, "orders checked: {}", list.join(" ")).map_err(io)?;
            }
            order_lines(out, &report, &b.ordinary).map_err(io)?;
            writeln!(out, "{}", verdict_line(if zc { "ZC" } else { "PQ" }, &report.verdict)).map_err(io)?;
            outputs.save(&report.store, Some(&report.verdict))?;
            Ok(if report.verdict.is_proved() { 0 } else { 2 })
        }
        Command::Order { k, bundle } => {
            if *k < 2 {
                return Err("order must be at least 2".into());
            }
            let b = resolve_bundle(bundle)?;
            let outputs = Outputs { flags: &cli.flags, table: &b.ordinary };
            let mut store = match &cli.flags.store {
                Some(p) => load_store(p, &b.ordinary)?,
                None => SolutionStore::new(b.group_name()),
            };
            let res = solve_order(&b, *k, &mut store, &options).map_err(|e| e.to_string())?;
            writeln!(out, "group: {}", b.group_name()).map_err(io)?;
            let code = match &res {
                OrderResult::Solved(sols) => {
                    let rejected = store.rejected.get(k).cloned().unwrap_or_default();
                    writeln!(
                        out,
                        "order {k}: {} admissible, {} rejected by Wagner test",
                        sols.len(),
                        rejected.len()
                    )
                    .map_err(io)?;
                    for t in sols {
                        writeln!(out, "  admissible: {}", describe_tuple(t, &b.ordinary)).map_err(io)?;
                    }
                    for t in &rejected {
                        writeln!(out, "  rejected: {}", describe_tuple(t, &b.ordinary)).map_err(io)?;
                    }
                    0
                }
                OrderResult::Obstructed(r) => {
                    writeln!(out, "order {k}: {r}").map_err(io)?;
                    2
                }
            };
            outputs.save(&store, None)?;
            Ok(code)
        }
        Command::Wagner { k, bundle, tuple } => {
            let b = resolve_bundle(bundle)?;
            let text = std::fs::read_to_string(tuple).map_err(|e| format!("{}: {e}", tuple.display()))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", tuple.display()))?;
            let t = tuple_from_json(&v, *k, &b.ordinary).map_err(|e| e.to_string())?;
            match wagner_check(&b.ordinary, &t).map_err(|e| e.to_string())? {
                None => {
                    writeln!(out, "Wagner: pass").map_err(io)?;
                    Ok(0)
                }
                Some(f) => {
                    writeln!(
                        out,
                        "Wagner: fail (p={}, exponent {}, class {}: {} vs {} mod {})",
                        f.prime, f.exponent, b.ordinary.classes[f.class].name, f.lhs, f.rhs, f.prime
                    )
                    .map_err(io)?;
                    Ok(2)
                }
            }
        }
        Command::Info { bundle } => {
            let b = resolve_bundle(bundle)?;
            let t = &b.ordinary;
            let join = |it: &mut dyn Iterator<Item = u64>| it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            writeln!(out, "group: {}", t.group_name).map_err(io)?;
            writeln!(out, "order: {}", t.group_order).map_err(io)?;
            writeln!(out, "classes: {}", t.classes.len()).map_err(io)?;
            writeln!(out, "element orders: {}", join(&mut t.element_orders().into_iter())).map_err(io)?;
            writeln!(out, "exponent: {}", t.exponent()).map_err(io)?;
            writeln!(out, "missing pq orders: {}", join(&mut t.prime_graph_missing_pq().into_iter())).map_err(io)?;
            writeln!(out, "brauer primes: {}", join(&mut b.brauer_primes().into_iter())).map_err(io)?;
            writeln!(out, "solvable: {}", t.is_solvable()).map_err(io)?;
            writeln!(out, "nilpotent: {}", t.is_nilpotent()).map_err(io)?;
            Ok(0)
        }
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("help").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn shortcut_summaries() {
        let (code, out, _) = run_capture(&["pq", "s4"]);
        assert_eq!(code, 0);
        assert!(out.contains("PQ: Proved (solvable shortcut)"));
        let (code, out, _) = run_capture(&["zc", "cyclic:12"]);
        assert_eq!(code, 0);
        assert!(out.contains("ZC: Proved (nilpotent shortcut)"));
    }

    #[test]
    fn errors_exit_one() {
        let (code, _, err) = run_capture(&["zc", "no-such-group"]);
        assert_eq!(code, 1);
        assert!(err.contains("cannot find"));
        let (code, _, _) = run_capture(&["zc", "a5", "--max-nodes", "lots"]);
        assert_eq!(code, 1);
        let (code, _, _) = run_capture(&["frobnicate"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn info_lists_derived_facts() {
        let (code, out, _) = run_capture(&["info", "a5.json"]);
        assert_eq!(code, 0);
        assert!(out.contains("element orders: 1 2 3 5"));
        assert!(out.contains("exponent: 30"));
        assert!(out.contains("missing pq orders: 6 10 15"));
    }
}
