//! Character tables: data model, JSON ingestion with validation, and the
//! internal generator for cyclic groups.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use num_traits::ToPrimitive;
use serde::Deserialize;
use thiserror::Error;

use crate::exactnum::{rat_int, Cyc};
use crate::numtheory::{factorize, gcd, is_prime, lcm, prime_divisors};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("table {table}: field {field}: {message}")]
    Invariant { table: String, field: String, message: String },
    #[error("table {table}: unresolved class reference {name:?}")]
    UnresolvedClass { table: String, name: String },
    #[error("table {table}: missing power map for prime {prime}")]
    MissingPowerMap { table: String, prime: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TableKind {
    Ordinary,
    Brauer(u64),
}

impl std::fmt::Display for TableKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TableKind::Ordinary => write!(f, "ordinary"),
            TableKind::Brauer(p) => write!(f, "brauer({p})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassInfo {
    pub name: String,
    pub element_order: u64,
    pub size: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroupFlags {
    pub is_solvable: Option<bool>,
    pub is_nilpotent: Option<bool>,
    pub p_solvable_for: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct CharacterTable {
    pub group_name: String,
    pub group_order: u64,
    pub kind: TableKind,
    pub classes: Vec<ClassInfo>,
    /// prime → image class index, for every prime dividing the exponent.
    pub power_maps: BTreeMap<u64, Vec<usize>>,
    pub characters: Vec<Vec<Cyc>>,
    pub extra_characters: Vec<Vec<Cyc>>,
    pub flags: GroupFlags,
    /// Position of each class in the ordinary table of the same group.
    pub ordinary_positions: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct TableBundle {
    pub ordinary: CharacterTable,
    pub brauer: Vec<CharacterTable>,
}

impl CharacterTable {
    fn table_label(&self) -> String {
        format!("{} {}", self.group_name, self.kind)
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }

    pub fn identity_class(&self) -> usize {
        self.classes.iter().position(|c| c.element_order == 1).expect("validated table has an identity class")
    }

    /// Class of x^d for x in class `c`.
    pub fn class_of_power(&self, c: usize, d: u64) -> Result<usize, TableError> {
        let mut cur = c;
        for (p, e) in factorize(d) {
            let map = self.power_maps.get(&p).ok_or_else(|| TableError::MissingPowerMap {
                table: self.table_label(),
                prime: p,
            })?;
            for _ in 0..e {
                cur = map[cur];
            }
        }
        Ok(cur)
    }

    /// Non-identity classes whose element order divides `k`, in table order.
    pub fn classes_of_order_dividing(&self, k: u64) -> Vec<usize> {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.element_order != 1 && k % c.element_order == 0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn classes_of_order(&self, k: u64) -> Vec<usize> {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.element_order == k)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn element_orders(&self) -> BTreeSet<u64> {
        self.classes.iter().map(|c| c.element_order).collect()
    }

    pub fn exponent(&self) -> u64 {
        self.classes.iter().fold(1, |acc, c| lcm(acc, c.element_order))
    }

    /// Products p·q of distinct primes that are element orders while p·q is not.
    pub fn prime_graph_missing_pq(&self) -> BTreeSet<u64> {
        let orders = self.element_orders();
        let primes: Vec<u64> = orders.iter().copied().filter(|&o| is_prime(o)).collect();
        let mut out = BTreeSet::new();
        for (i, &p) in primes.iter().enumerate() {
            for &q in &primes[i + 1..] {
                if !orders.contains(&(p * q)) {
                    out.insert(p * q);
                }
            }
        }
        out
    }

    pub fn is_solvable(&self) -> bool {
        self.flags.is_solvable == Some(true) || self.is_nilpotent()
    }

    pub fn is_nilpotent(&self) -> bool {
        self.flags.is_nilpotent == Some(true)
    }

    pub fn degree(row: &[Cyc], identity: usize) -> i64 {
        row[identity]
            .as_rational()
            .and_then(|q| q.to_integer().to_i64())
            .expect("character degree is an integer")
    }

    /// Σ_c |c| a(c) conj(b(c)); equals |G|·δ for irreducible ordinary characters.
    pub fn inner_product_scaled(&self, a: &[Cyc], b: &[Cyc]) -> Cyc {
        self.classes
            .iter()
            .zip(a.iter().zip(b))
            .map(|(c, (x, y))| (x * &y.conj()).scale(&rat_int(c.size as i64)))
            .sum()
    }

    fn invariant(&self, field: impl Into<String>, message: impl Into<String>) -> TableError {
        TableError::Invariant { table: self.table_label(), field: field.into(), message: message.into() }
    }

    fn validate_rows(&self, rows: &[Vec<Cyc>], field: &str) -> Result<(), TableError> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != self.classes.len() {
                return Err(self.invariant(
                    format!("{field}[{i}]"),
                    format!("{} values for {} classes", row.len(), self.classes.len()),
                ));
            }
            for (c, v) in self.classes.iter().zip(row) {
                if c.element_order % v.conductor() != 0 {
                    return Err(self.invariant(
                        format!("{field}[{i}]"),
                        format!("value {v} at class {} lies outside Q(ζ_{})", c.name, c.element_order),
                    ));
                }
            }
        }
        Ok(())
    }

    fn validate_ordinary(&self) -> Result<(), TableError> {
        if self.classes.is_empty() {
            return Err(self.invariant("classes", "empty class list"));
        }
        let mut seen = BTreeSet::new();
        for c in &self.classes {
            if !seen.insert(c.name.as_str()) {
                return Err(self.invariant("classes", format!("duplicate class name {:?}", c.name)));
            }
            if c.element_order == 0 || self.group_order % c.element_order != 0 {
                return Err(self.invariant(
                    format!("classes[{}].order", c.name),
                    format!("{} does not divide |G| = {}", c.element_order, self.group_order),
                ));
            }
            if c.size == 0 {
                return Err(self.invariant(format!("classes[{}].size", c.name), "class size must be positive"));
            }
        }
        let identities: Vec<&ClassInfo> = self.classes.iter().filter(|c| c.element_order == 1).collect();
        if identities.len() != 1 || identities[0].size != 1 {
            return Err(self.invariant("classes", "exactly one identity class of size 1 required"));
        }
        let total: u64 = self.classes.iter().map(|c| c.size).sum();
        if total != self.group_order {
            return Err(self.invariant(
                "classes.size",
                format!("class sizes sum to {total}, group order is {}", self.group_order),
            ));
        }
        for p in prime_divisors(self.exponent()) {
            let map = self.power_maps.get(&p).ok_or_else(|| TableError::MissingPowerMap {
                table: self.table_label(),
                prime: p,
            })?;
            if map.len() != self.classes.len() {
                return Err(self.invariant(format!("power_maps.{p}"), "length differs from class count"));
            }
            for (i, &img) in map.iter().enumerate() {
                let src = &self.classes[i];
                let ok = self
                    .classes
                    .get(img)
                    .is_some_and(|t| t.element_order == src.element_order / gcd(src.element_order, p));
                if !ok {
                    return Err(self.invariant(
                        format!("power_maps.{p}[{i}]"),
                        format!("image of class {} has the wrong element order", src.name),
                    ));
                }
            }
        }
        for &p in self.power_maps.keys() {
            if !is_prime(p) {
                return Err(self.invariant(format!("power_maps.{p}"), "key is not a prime"));
            }
        }
        self.validate_rows(&self.characters, "characters")?;
        self.validate_rows(&self.extra_characters, "extra_characters")?;
        let order = Cyc::from_int(self.group_order as i64);
        for (i, a) in self.characters.iter().enumerate() {
            for (j, b) in self.characters.iter().enumerate().skip(i) {
                let ip = self.inner_product_scaled(a, b);
                let expected = if i == j { order.clone() } else { Cyc::zero() };
                if ip != expected {
                    return Err(self.invariant(
                        format!("characters[{i}],characters[{j}]"),
                        format!("orthogonality fails: scaled inner product {ip}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

impl TableBundle {
    pub fn group_name(&self) -> &str {
        &self.ordinary.group_name
    }

    pub fn brauer_table(&self, p: u64) -> Option<&CharacterTable> {
        self.brauer.iter().find(|t| t.kind == TableKind::Brauer(p))
    }

    pub fn brauer_primes(&self) -> Vec<u64> {
        self.brauer
            .iter()
            .filter_map(|t| match t.kind {
                TableKind::Brauer(p) => Some(p),
                TableKind::Ordinary => None,
            })
            .collect()
    }

    pub fn from_ordinary(ordinary: CharacterTable) -> TableBundle {
        TableBundle { ordinary, brauer: Vec::new() }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleFile {
    group: String,
    order: u64,
    #[serde(default)]
    flags: Option<FlagsFile>,
    ordinary: OrdinaryFile,
    #[serde(default)]
    brauer: Vec<BrauerFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FlagsFile {
    is_solvable: Option<bool>,
    is_nilpotent: Option<bool>,
    #[serde(default)]
    p_solvable_for: Vec<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassFile {
    name: String,
    order: u64,
    size: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OrdinaryFile {
    classes: Vec<ClassFile>,
    #[serde(default)]
    power_maps: BTreeMap<String, Vec<usize>>,
    characters: Vec<Vec<Cyc>>,
    #[serde(default)]
    extra_characters: Vec<Vec<Cyc>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BrauerFile {
    p: u64,
    classes: Vec<String>,
    characters: Vec<Vec<Cyc>>,
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<TableBundle, TableError> {
    let path = path.as_ref();
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| TableError::Io { path: path.display().to_string(), source })?;
    parse_bundle(&text)
}

pub fn load_bundle_from_reader(mut r: impl Read) -> Result<TableBundle, TableError> {
    let mut text = String::new();
    r.read_to_string(&mut text)
        .map_err(|source| TableError::Io { path: "<reader>".into(), source })?;
    parse_bundle(&text)
}

pub fn parse_bundle(text: &str) -> Result<TableBundle, TableError> {
    let file: BundleFile = serde_json::from_str(text)?;
    let flags = file
        .flags
        .map(|f| GroupFlags { is_solvable: f.is_solvable, is_nilpotent: f.is_nilpotent, p_solvable_for: f.p_solvable_for })
        .unwrap_or_default();
    let mut power_maps = BTreeMap::new();
    for (key, map) in file.ordinary.power_maps {
        let p: u64 = key.parse().map_err(|_| TableError::Invariant {
            table: format!("{} ordinary", file.group),
            field: format!("power_maps.{key}"),
            message: "key is not an integer".into(),
        })?;
        power_maps.insert(p, map);
    }
    let classes: Vec<ClassInfo> = file
        .ordinary
        .classes
        .into_iter()
        .map(|c| ClassInfo { name: c.name, element_order: c.order, size: c.size })
        .collect();
    let n = classes.len();
    let ordinary = CharacterTable {
        group_name: file.group.clone(),
        group_order: file.order,
        kind: TableKind::Ordinary,
        classes,
        power_maps,
        characters: file.ordinary.characters,
        extra_characters: file.ordinary.extra_characters,
        flags: flags.clone(),
        ordinary_positions: (0..n).collect(),
    };
    ordinary.validate_ordinary()?;

    let mut brauer = Vec::new();
    let mut primes_seen = BTreeSet::new();
    for b in file.brauer {
        let label = format!("{} brauer({})", file.group, b.p);
        let invariant = |field: &str, message: String| TableError::Invariant {
            table: label.clone(),
            field: field.into(),
            message,
        };
        if !is_prime(b.p) || ordinary.group_order % b.p != 0 {
            return Err(invariant("p", format!("{} is not a prime dividing |G|", b.p)));
        }
        if !primes_seen.insert(b.p) {
            return Err(invariant("p", format!("duplicate Brauer table for {}", b.p)));
        }
        let mut positions = Vec::with_capacity(b.classes.len());
        for name in &b.classes {
            let pos = ordinary
                .class_index(name)
                .ok_or_else(|| TableError::UnresolvedClass { table: label.clone(), name: name.clone() })?;
            positions.push(pos);
        }
        let expected: BTreeSet<usize> = (0..n).filter(|&i| ordinary.classes[i].element_order % b.p != 0).collect();
        let given: BTreeSet<usize> = positions.iter().copied().collect();
        if given != expected || given.len() != positions.len() {
            return Err(invariant("classes", format!("must list exactly the {}-regular classes once each", b.p)));
        }
        let local: HashMap<usize, usize> = positions.iter().enumerate().map(|(i, &o)| (o, i)).collect();
        let power_maps = ordinary
            .power_maps
            .iter()
            .map(|(&p, map)| (p, positions.iter().map(|&o| local[&map[o]]).collect()))
            .collect();
        let table = CharacterTable {
            group_name: file.group.clone(),
            group_order: file.order,
            kind: TableKind::Brauer(b.p),
            classes: positions.iter().map(|&o| ordinary.classes[o].clone()).collect(),
            power_maps,
            characters: b.characters,
            extra_characters: Vec::new(),
            flags: flags.clone(),
            ordinary_positions: positions,
        };
        table.validate_rows(&table.characters, "characters")?;
        brauer.push(table);
    }
    brauer.sort_by_key(|t| t.kind);
    Ok(TableBundle { ordinary, brauer })
}

fn class_letters(mut i: usize) -> String {
    let mut s = Vec::new();
    loop {
        s.push(b'a' + (i % 26) as u8);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    s.reverse();
    String::from_utf8(s).unwrap()
}

/// Ordinary character table of the cyclic group of order n; class `a` holds g^a.
pub fn cyclic_table(n: u64) -> CharacterTable {
    assert!(n >= 1, "cyclic group order must be positive");
    let mut letters_used: BTreeMap<u64, usize> = BTreeMap::new();
    let classes = (0..n)
        .map(|a| {
            let order = n / gcd(a, n);
            let slot = letters_used.entry(order).or_insert(0);
            let name = format!("{order}{}", class_letters(*slot));
            *slot += 1;
            ClassInfo { name, element_order: order, size: 1 }
        })
        .collect();
    let power_maps = prime_divisors(n)
        .into_iter()
        .map(|p| (p, (0..n).map(|a| ((a * p) % n) as usize).collect()))
        .collect();
    let characters = (0..n)
        .map(|j| (0..n).map(|a| Cyc::root_of_unity(n, ((j * a) % n) as i64)).collect())
        .collect();
    CharacterTable {
        group_name: format!("C{n}"),
        group_order: n,
        kind: TableKind::Ordinary,
        classes,
        power_maps,
        characters,
        extra_characters: Vec::new(),
        flags: GroupFlags { is_solvable: Some(true), is_nilpotent: Some(true), p_solvable_for: prime_divisors(n) },
        ordinary_positions: (0..n as usize).collect(),
    }
}

pub fn cyclic_bundle(n: u64) -> TableBundle {
    TableBundle::from_ordinary(cyclic_table(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_small_cases() {
        let t1 = cyclic_table(1);
        assert_eq!(t1.classes.len(), 1);
        assert_eq!(t1.characters, vec![vec![Cyc::one()]]);
        let t2 = cyclic_table(2);
        assert_eq!(t2.characters[1], vec![Cyc::one(), Cyc::from_int(-1)]);
        let t6 = cyclic_table(6);
        assert_eq!(t6.power_maps[&2][1], 2);
        assert_eq!(t6.class_of_power(1, 2).unwrap(), 2);
        assert_eq!(t6.class_of_power(1, 6).unwrap(), 0);
        assert_eq!(t6.class_of_power(4, 1).unwrap(), 4);
        assert_eq!(t6.classes_of_order_dividing(6), vec![1, 2, 3, 4, 5]);
        assert!(t6.classes_of_order_dividing(1).is_empty());
        assert_eq!(t6.element_orders(), [1, 2, 3, 6].into_iter().collect());
        assert_eq!(t6.exponent(), 6);
        assert!(t6.prime_graph_missing_pq().is_empty());
    }

    #[test]
    fn cyclic_tables_are_orthogonal_up_to_24() {
        for n in 1..=24 {
            let t = cyclic_table(n);
            t.validate_ordinary().unwrap_or_else(|e| panic!("C{n}: {e}"));
        }
    }

    #[test]
    fn cyclic_power_maps_commute() {
        let t = cyclic_table(12);
        for c in 0..12 {
            let a = t.class_of_power(t.class_of_power(c, 2).unwrap(), 3).unwrap();
            let b = t.class_of_power(t.class_of_power(c, 3).unwrap(), 2).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn missing_power_map_names_prime() {
        let t = cyclic_table(6);
        match t.class_of_power(1, 5) {
            Err(TableError::MissingPowerMap { prime, .. }) => assert_eq!(prime, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    const TINY: &str = r#"{
        "group": "C2", "order": 2,
        "ordinary": {
            "classes": [{"name": "1a", "order": 1, "size": 1}, {"name": "2a", "order": 2, "size": 1}],
            "power_maps": {"2": [0, 0]},
            "characters": [[1, 1], [1, -1]]
        }
    }"#;

    #[test]
    fn parses_minimal_bundle() {
        let b = parse_bundle(TINY).unwrap();
        assert_eq!(b.ordinary.classes.len(), 2);
        assert!(b.brauer.is_empty());
    }

    #[test]
    fn rejects_bad_class_sizes() {
        let bad = TINY.replace(r#""name": "2a", "order": 2, "size": 1"#, r#""name": "2a", "order": 2, "size": 3"#);
        let err = parse_bundle(&bad).unwrap_err();
        assert!(err.to_string().contains("classes.size"), "{err}");
    }

    #[test]
    fn rejects_non_orthogonal_rows() {
        let bad = TINY.replace("[[1, 1], [1, -1]]", "[[1, 1], [1, 1]]");
        let err = parse_bundle(&bad).unwrap_err();
        assert!(err.to_string().contains("orthogonality"), "{err}");
    }

    #[test]
    fn rejects_wrong_arity_and_bad_power_map() {
        let bad = TINY.replace("[[1, 1], [1, -1]]", "[[1, 1], [1]]");
        assert!(parse_bundle(&bad).is_err());
        let bad = TINY.replace(r#""2": [0, 0]"#, r#""2": [0, 1]"#);
        assert!(parse_bundle(&bad).unwrap_err().to_string().contains("power_maps.2"));
        let bad = TINY.replace(r#""power_maps": {"2": [0, 0]},"#, "");
        assert!(matches!(parse_bundle(&bad), Err(TableError::MissingPowerMap { prime: 2, .. })));
    }

    #[test]
    fn rejects_unknown_fields_and_bad_brauer_refs() {
        let bad = TINY.replace(r#""group": "C2""#, r#""group": "C2", "colour": "red""#);
        assert!(matches!(parse_bundle(&bad), Err(TableError::Schema(_))));
        let with_brauer = TINY.replace(
            r#""characters": [[1, 1], [1, -1]]
        }"#,
            r#""characters": [[1, 1], [1, -1]]
        }, "brauer": [{"p": 2, "classes": ["1b"], "characters": [[1]]}]"#,
        );
        assert!(matches!(parse_bundle(&with_brauer), Err(TableError::UnresolvedClass { .. })));
    }
}
