//! Order-by-order search for admissible partial augmentations, bottom-up over
//! the divisor lattice, and the resulting ZC / PQ verdicts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use num_bigint::BigInt;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::chartab::{CharacterTable, TableBundle, TableKind};
use crate::isolve::{solve_all, SolveOptions, SolveOutcome};
use crate::numtheory::{divisors, factorize, prime_divisors};
use crate::sysbuild::{build_system, build_system_p_constant, eps_solution, BuildError, LinSystem, PATuple, PAVector};
use crate::wagner::{wagner_test, WagnerError};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Wagner(#[from] WagnerError),
    #[error("solution store: {0}")]
    Store(String),
    #[error("order {order}: {message}")]
    MuSum { order: u64, message: String },
    #[error("could not write system dump: {0}")]
    Dump(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Options {
    pub shortcuts: bool,
    pub use_brauer: bool,
    /// Skip Brauer tables in characteristics for which the group is p-solvable.
    pub fong_swan_skip: bool,
    /// Try the aggregated system of p-constant rows before the full one (orders p·q).
    pub p_constant: bool,
    pub solve: SolveOptions,
    /// Write each constructed system as text into this directory.
    pub dump_dir: Option<PathBuf>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            shortcuts: true,
            use_brauer: true,
            fong_swan_skip: true,
            p_constant: false,
            solve: SolveOptions::default(),
            dump_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Reason {
    NontrivialSolutions,
    InfiniteSolutionSet,
    NodeBudget,
}

impl Reason {
    fn as_str(self) -> &'static str {
        match self {
            Reason::NontrivialSolutions => "nontrivial solutions",
            Reason::InfiniteSolutionSet => "infinite solution set",
            Reason::NodeBudget => "node budget",
        }
    }

    fn parse(s: &str) -> Option<Reason> {
        [Reason::NontrivialSolutions, Reason::InfiniteSolutionSet, Reason::NodeBudget]
            .into_iter()
            .find(|r| r.as_str() == s)
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shortcut {
    Nilpotent,
    Solvable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrdersToCheck {
    ShortcutProved(Shortcut),
    Orders(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Proved(Option<Shortcut>),
    /// HeLP is inconclusive for the listed orders; this is not a disproof.
    Unknown(Vec<(u64, Reason)>),
}

impl Verdict {
    pub fn is_proved(&self) -> bool {
        matches!(self, Verdict::Proved(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderResult {
    Solved(Vec<PATuple>),
    Obstructed(Reason),
}

/// Admissible tuples per order, plus orders the solver could not settle and
/// the tuples removed by the Wagner test.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolutionStore {
    pub group: String,
    pub solutions: BTreeMap<u64, Vec<PATuple>>,
    pub obstructions: BTreeMap<u64, Reason>,
    pub rejected: BTreeMap<u64, Vec<PATuple>>,
}

impl SolutionStore {
    pub fn new(group: &str) -> SolutionStore {
        SolutionStore { group: group.to_string(), ..SolutionStore::default() }
    }

    pub fn result(&self, k: u64) -> Option<OrderResult> {
        if let Some(s) = self.solutions.get(&k) {
            return Some(OrderResult::Solved(s.clone()));
        }
        self.obstructions.get(&k).map(|&r| OrderResult::Obstructed(r))
    }

    pub fn to_json(&self, table: &CharacterTable) -> Value {
        let tuples = |m: &BTreeMap<u64, Vec<PATuple>>| -> Value {
            let mut out = Map::new();
            for (k, list) in m {
                out.insert(k.to_string(), Value::Array(list.iter().map(|t| tuple_to_json(t, table)).collect()));
            }
            Value::Object(out)
        };
        let obstructions: Map<String, Value> =
            self.obstructions.iter().map(|(k, r)| (k.to_string(), json!(r.as_str()))).collect();
        json!({
            "group": self.group,
            "solutions": tuples(&self.solutions),
            "obstructions": obstructions,
            "wagner_rejected": tuples(&self.rejected),
        })
    }

    pub fn from_json(value: &Value, table: &CharacterTable) -> Result<SolutionStore, DriverError> {
        let err = |m: &str| DriverError::Store(m.to_string());
        let obj = value.as_object().ok_or_else(|| err("top level must be an object"))?;
        let group = obj.get("group").and_then(Value::as_str).ok_or_else(|| err("missing group name"))?;
        if group != table.group_name {
            return Err(DriverError::Store(format!(
                "store is for group {group}, table is for {}",
                table.group_name
            )));
        }
        let read_tuples = |key: &str| -> Result<BTreeMap<u64, Vec<PATuple>>, DriverError> {
            let mut out = BTreeMap::new();
            let Some(m) = obj.get(key) else { return Ok(out) };
            let m = m.as_object().ok_or_else(|| DriverError::Store(format!("{key} must be an object")))?;
            for (k, list) in m {
                let k = parse_order(k)?;
                let list = list.as_array().ok_or_else(|| DriverError::Store(format!("{key}[{k}] must be a list")))?;
                let mut tuples = list.iter().map(|t| tuple_from_json(t, k, table)).collect::<Result<Vec<_>, _>>()?;
                tuples.sort();
                out.insert(k, tuples);
            }
            Ok(out)
        };
        let solutions = read_tuples("solutions")?;
        let rejected = read_tuples("wagner_rejected")?;
        let mut obstructions = BTreeMap::new();
        if let Some(m) = obj.get("obstructions") {
            let m = m.as_object().ok_or_else(|| err("obstructions must be an object"))?;
            for (k, r) in m {
                let reason = r.as_str().and_then(Reason::parse).ok_or_else(|| err("unknown obstruction reason"))?;
                obstructions.insert(parse_order(k)?, reason);
            }
        }
        let store = SolutionStore { group: group.to_string(), solutions, obstructions, rejected };
        store.validate(table)?;
        Ok(store)
    }

    /// Lower orders present for every stored order, and stored tuples complete
    /// and passing the Wagner test.
    pub fn validate(&self, table: &CharacterTable) -> Result<(), DriverError> {
        for (&k, list) in &self.solutions {
            for p in prime_divisors(k) {
                let e = k / p;
                if e > 1 && !self.solutions.contains_key(&e) {
                    return Err(DriverError::Store(format!("order {k} stored without order {e}")));
                }
            }
            for t in list {
                if !t.is_complete() {
                    return Err(DriverError::Store(format!("incomplete tuple stored for order {k}")));
                }
                t.validate(table)?;
                if !wagner_test(table, t)? {
                    return Err(DriverError::Store(format!("stored tuple for order {k} fails the Wagner test")));
                }
            }
        }
        Ok(())
    }
}

fn parse_order(s: &str) -> Result<u64, DriverError> {
    s.parse().map_err(|_| DriverError::Store(format!("bad order key {s:?}")))
}

fn pa_to_json(pa: &PAVector, table: &CharacterTable) -> Value {
    let m: Map<String, Value> = pa.entries.iter().map(|(&c, &v)| (table.classes[c].name.clone(), json!(v))).collect();
    Value::Object(m)
}

pub fn tuple_to_json(t: &PATuple, table: &CharacterTable) -> Value {
    let m: Map<String, Value> = t.per_divisor.iter().map(|(e, pa)| (e.to_string(), pa_to_json(pa, table))).collect();
    Value::Object(m)
}

pub fn tuple_from_json(v: &Value, k: u64, table: &CharacterTable) -> Result<PATuple, DriverError> {
    let obj = v.as_object().ok_or_else(|| DriverError::Store("tuple must be an object".into()))?;
    let mut t = PATuple::empty(k);
    for (e, pa) in obj {
        let e = parse_order(e)?;
        let pa = pa.as_object().ok_or_else(|| DriverError::Store("partial augmentations must be an object".into()))?;
        let mut entries = Vec::new();
        for (name, val) in pa {
            let c = table.class_index(name).ok_or_else(|| DriverError::Store(format!("unknown class {name:?}")))?;
            let v = val.as_i64().ok_or_else(|| DriverError::Store(format!("non-integer value for {name}")))?;
            entries.push((c, v));
        }
        t.per_divisor.insert(e, PAVector::new(e, entries));
    }
    t.validate(table)?;
    Ok(t)
}

/// The tuples of actual group elements of order k.
pub fn trivial_solutions(table: &CharacterTable, k: u64) -> Vec<PATuple> {
    let mut out: Vec<PATuple> = table
        .classes_of_order(k)
        .into_iter()
        .map(|c| {
            let mut t = PATuple::empty(k);
            for e in divisors(k).into_iter().filter(|&e| e > 1) {
                let image = table.class_of_power(c, k / e).expect("power maps validated at load");
                t.per_divisor.insert(e, PAVector::unit(e, image));
            }
            t
        })
        .collect();
    out.sort();
    out
}

pub fn orders_to_check_zc(bundle: &TableBundle, options: &Options) -> OrdersToCheck {
    let t = &bundle.ordinary;
    if options.shortcuts && t.is_nilpotent() {
        return OrdersToCheck::ShortcutProved(Shortcut::Nilpotent);
    }
    if options.shortcuts && t.is_solvable() {
        return OrdersToCheck::Orders(t.element_orders().into_iter().filter(|&o| o > 1).collect());
    }
    OrdersToCheck::Orders(divisors(t.exponent()).into_iter().filter(|&d| d > 1).collect())
}

pub fn orders_to_check_pq(bundle: &TableBundle, options: &Options) -> OrdersToCheck {
    let t = &bundle.ordinary;
    if options.shortcuts && t.is_solvable() {
        return OrdersToCheck::ShortcutProved(Shortcut::Solvable);
    }
    OrdersToCheck::Orders(t.prime_graph_missing_pq().into_iter().collect())
}

pub fn usable_tables(bundle: &TableBundle, k: u64, options: &Options) -> Vec<TableKind> {
    let mut out = vec![TableKind::Ordinary];
    if options.use_brauer {
        let skip = &bundle.ordinary.flags.p_solvable_for;
        for p in bundle.brauer_primes() {
            if k % p != 0 && !(options.fong_swan_skip && skip.contains(&p)) {
                out.push(TableKind::Brauer(p));
            }
        }
    }
    out
}

/// Partial augmentations of u^p and u^q agree wherever both describe the same power of u.
pub fn compatible(a: &PATuple, b: &PATuple) -> bool {
    a.per_divisor.iter().all(|(e, pa)| b.per_divisor.get(e).is_none_or(|pb| pb == pa))
}

/// All compatible ways of choosing one stored tuple for each u^p, merged
/// into tuples for u without their top level; joined in increasing prime order.
fn lower_combinations(k: u64, store: &SolutionStore) -> Vec<PATuple> {
    let mut partial = vec![PATuple::empty(k)];
    for p in prime_divisors(k) {
        let e = k / p;
        if e == 1 {
            continue;
        }
        let options = &store.solutions[&e];
        let mut next = Vec::new();
        for base in &partial {
            for t in options {
                if compatible(base, t) {
                    let mut merged = base.clone();
                    merged.per_divisor.extend(t.per_divisor.iter().map(|(e, pa)| (*e, pa.clone())));
                    next.push(merged);
                }
            }
        }
        partial = next;
    }
    partial
}

fn semiprime(k: u64) -> Option<(u64, u64)> {
    match factorize(k).as_slice() {
        [(p, 1), (q, 1)] => Some((*p, *q)),
        _ => None,
    }
}

fn dump(options: &Options, k: u64, label: &str, index: usize, sys: &LinSystem) -> Result<(), DriverError> {
    if let Some(dir) = &options.dump_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("order{k}_{label}{index}.txt")), sys.to_text())?;
    }
    Ok(())
}

enum Solved {
    Points(Vec<Vec<BigInt>>),
    Stuck(Reason),
}

fn run_solver(sys: &LinSystem, options: &Options) -> Solved {
    match solve_all(sys, &options.solve) {
        SolveOutcome::Finite(v) => Solved::Points(v),
        SolveOutcome::Infinite(_) => Solved::Stuck(Reason::InfiniteSolutionSet),
        SolveOutcome::Aborted(_) => Solved::Stuck(Reason::NodeBudget),
    }
}

/// True if some aggregated p-constant system is already infeasible.
fn p_constant_excludes(
    bundle: &TableBundle,
    k: u64,
    lower: &PATuple,
    tables: &[TableKind],
    options: &Options,
    index: usize,
) -> Result<bool, DriverError> {
    let Some((p, q)) = semiprime(k) else { return Ok(false) };
    for (agg, other) in [(p, q), (q, p)] {
        let sys = match build_system_p_constant(bundle, k, agg, lower.level(other)?, tables) {
            Ok(s) => s,
            Err(BuildError::NoPConstantRows(_) | BuildError::NoClassesOfOrder(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        dump(options, k, &format!("pconst{agg}_"), index, &sys)?;
        if let Solved::Points(v) = run_solver(&sys, options) {
            if v.is_empty() {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Admissible tuples for units of order k; lower orders are solved first.
pub fn solve_order(
    bundle: &TableBundle,
    k: u64,
    store: &mut SolutionStore,
    options: &Options,
) -> Result<OrderResult, DriverError> {
    if let Some(r) = store.result(k) {
        return Ok(r);
    }
    for p in prime_divisors(k) {
        let e = k / p;
        if e == 1 {
            continue;
        }
        if let OrderResult::Obstructed(reason) = solve_order(bundle, e, store, options)? {
            store.obstructions.insert(k, reason);
            return Ok(OrderResult::Obstructed(reason));
        }
    }
    let table = &bundle.ordinary;
    let tables = usable_tables(bundle, k, options);
    let mut accepted = BTreeSet::new();
    let mut rejected = BTreeSet::new();
    for (index, lower) in lower_combinations(k, store).into_iter().enumerate() {
        if options.p_constant && p_constant_excludes(bundle, k, &lower, &tables, options, index)? {
            continue;
        }
        let sys = build_system(bundle, k, &lower, &tables)?;
        dump(options, k, "full", index, &sys)?;
        let points = match run_solver(&sys, options) {
            Solved::Points(v) => v,
            Solved::Stuck(reason) => {
                store.obstructions.insert(k, reason);
                return Ok(OrderResult::Obstructed(reason));
            }
        };
        for x in points {
            sys.check_mu_sums(&x).map_err(|message| DriverError::MuSum { order: k, message })?;
            let tuple = lower.with_top(eps_solution(&sys, k, &x));
            if wagner_test(table, &tuple)? {
                accepted.insert(tuple);
            } else {
                rejected.insert(tuple);
            }
        }
    }
    let accepted: Vec<PATuple> = accepted.into_iter().collect();
    store.solutions.insert(k, accepted.clone());
    if !rejected.is_empty() {
        store.rejected.insert(k, rejected.into_iter().collect());
    }
    Ok(OrderResult::Solved(accepted))
}

#[derive(Debug, Clone)]
pub struct Report {
    pub verdict: Verdict,
    pub orders: Vec<u64>,
    pub store: SolutionStore,
}

pub fn check_zc(bundle: &TableBundle, options: &Options) -> Result<Report, DriverError> {
    check_zc_with(bundle, options, SolutionStore::new(bundle.group_name()))
}

pub fn check_zc_with(bundle: &TableBundle, options: &Options, mut store: SolutionStore) -> Result<Report, DriverError> {
    let orders = match orders_to_check_zc(bundle, options) {
        OrdersToCheck::ShortcutProved(s) => return Ok(Report { verdict: Verdict::Proved(Some(s)), orders: vec![], store }),
        OrdersToCheck::Orders(o) => o,
    };
    let mut obstructions = Vec::new();
    for &k in &orders {
        match solve_order(bundle, k, &mut store, options)? {
            OrderResult::Obstructed(r) => obstructions.push((k, r)),
            OrderResult::Solved(s) => {
                if s != trivial_solutions(&bundle.ordinary, k) {
                    obstructions.push((k, Reason::NontrivialSolutions));
                }
            }
        }
    }
    Ok(finish(orders, obstructions, store))
}

pub fn check_pq(bundle: &TableBundle, options: &Options) -> Result<Report, DriverError> {
    check_pq_with(bundle, options, SolutionStore::new(bundle.group_name()))
}

pub fn check_pq_with(bundle: &TableBundle, options: &Options, mut store: SolutionStore) -> Result<Report, DriverError> {
    let orders = match orders_to_check_pq(bundle, options) {
        OrdersToCheck::ShortcutProved(s) => return Ok(Report { verdict: Verdict::Proved(Some(s)), orders: vec![], store }),
        OrdersToCheck::Orders(o) => o,
    };
    let mut obstructions = Vec::new();
    for &k in &orders {
        match solve_order(bundle, k, &mut store, options)? {
            OrderResult::Obstructed(r) => obstructions.push((k, r)),
            OrderResult::Solved(s) if !s.is_empty() => obstructions.push((k, Reason::NontrivialSolutions)),
            OrderResult::Solved(_) => {}
        }
    }
    Ok(finish(orders, obstructions, store))
}

fn finish(orders: Vec<u64>, obstructions: Vec<(u64, Reason)>, store: SolutionStore) -> Report {
    let verdict = if obstructions.is_empty() { Verdict::Proved(None) } else { Verdict::Unknown(obstructions) };
    Report { verdict, orders, store }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chartab::{cyclic_bundle, cyclic_table};

    #[test]
    fn trivial_solution_examples() {
        let t = cyclic_table(4);
        let triv = trivial_solutions(&t, 4);
        assert_eq!(triv.len(), 2);
        for tuple in &triv {
            assert_eq!(tuple.per_divisor[&2], PAVector::unit(2, 2));
        }
        assert_eq!(trivial_solutions(&cyclic_table(6), 2).len(), 1);
    }

    #[test]
    fn shortcuts_and_orders() {
        let b = cyclic_bundle(12);
        let opts = Options::default();
        assert_eq!(orders_to_check_zc(&b, &opts), OrdersToCheck::ShortcutProved(Shortcut::Nilpotent));
        assert_eq!(orders_to_check_pq(&b, &opts), OrdersToCheck::ShortcutProved(Shortcut::Solvable));
        let off = Options { shortcuts: false, ..Options::default() };
        assert_eq!(orders_to_check_zc(&b, &off), OrdersToCheck::Orders(vec![2, 3, 4, 6, 12]));
        assert_eq!(orders_to_check_pq(&b, &off), OrdersToCheck::Orders(vec![]));
    }

    #[test]
    fn compatibility() {
        let mk = |k: u64, levels: &[(u64, usize)]| PATuple {
            order: k,
            per_divisor: levels.iter().map(|&(e, c)| (e, PAVector::unit(e, c))).collect(),
        };
        assert!(compatible(&mk(3, &[(3, 1)]), &mk(2, &[(2, 5)])));
        assert!(compatible(&mk(6, &[(2, 1), (3, 2), (6, 3)]), &mk(4, &[(2, 1), (4, 4)])));
        assert!(!compatible(&mk(6, &[(2, 1), (3, 2), (6, 3)]), &mk(4, &[(2, 7), (4, 4)])));
    }

    #[test]
    fn cyclic_prime_orders_give_trivial_tuples() {
        for p in [2u64, 3, 5, 7] {
            let b = cyclic_bundle(p);
            let mut store = SolutionStore::new(b.group_name());
            let r = solve_order(&b, p, &mut store, &Options::default()).unwrap();
            assert_eq!(r, OrderResult::Solved(trivial_solutions(&b.ordinary, p)));
            assert_eq!(trivial_solutions(&b.ordinary, p).len() as u64, p - 1);
        }
    }

    #[test]
    fn cyclic_zc_by_computation() {
        let off = Options { shortcuts: false, ..Options::default() };
        for n in [4u64, 6, 8] {
            let b = cyclic_bundle(n);
            let r = check_zc(&b, &off).unwrap();
            assert_eq!(r.verdict, Verdict::Proved(None), "C{n}");
        }
    }

    #[test]
    fn store_json_round_trip() {
        let b = cyclic_bundle(6);
        let off = Options { shortcuts: false, ..Options::default() };
        let r = check_zc(&b, &off).unwrap();
        let v = r.store.to_json(&b.ordinary);
        let back = SolutionStore::from_json(&v, &b.ordinary).unwrap();
        assert_eq!(back, r.store);
        let mut broken = v.clone();
        broken["solutions"].as_object_mut().unwrap().remove("2");
        assert!(SolutionStore::from_json(&broken, &b.ordinary).is_err());
    }
}
