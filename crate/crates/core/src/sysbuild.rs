//! Translation of the eigenvalue-multiplicity conditions into integer linear
//! systems over the unknown partial augmentations.
//!
//! For a putative torsion unit u of order k, a character ψ and 0 ≤ ℓ < k the
//! multiplicity of ζ_k^ℓ as an eigenvalue of u under ψ is
//!
//! ```text
//! μ_ℓ = (1/k) Σ_{d | k} Tr_{Q(ζ_{k/d})/Q}(ψ(u^d) ζ_{k/d}^{-ℓ})
//! ```
//!
//! The d = 1 term is linear in the partial augmentations ε_x(u); all other
//! terms only involve proper powers of u, whose partial augmentations are
//! known from earlier orders. Each (ψ, ℓ) yields the row
//! `Σ_x Tr(ψ(x)ζ_k^{-ℓ}) ε_x − k μ = −k·a_ℓ` with μ a non-negative integer.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::chartab::{CharacterTable, TableBundle, TableKind};
use crate::exactnum::{Cyc, CycError, Rat};
use crate::numtheory::{divisors, is_prime};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuildError {
    #[error(transparent)]
    Cyc(#[from] CycError),
    #[error("table value is not an algebraic integer ({row}, class {class})")]
    NotAlgebraicInteger { row: CharId, class: usize },
    #[error("row {row} has no value on class {class}")]
    MissingValue { row: CharId, class: usize },
    #[error("partial augmentations for the power of order {0} are missing")]
    MissingLevel(u64),
    #[error("no p-constant rows for p = {0}")]
    NoPConstantRows(u64),
    #[error("no classes of order {0}")]
    NoClassesOfOrder(u64),
    #[error("order {0} is not a product of two distinct primes")]
    NotSemiprime(u64),
    #[error("invalid partial augmentation vector: {0}")]
    InvalidPA(String),
    #[error("malformed system text: {0}")]
    Parse(String),
}

/// Partial augmentations of one unit of order `order`, nonzero entries only.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PAVector {
    pub order: u64,
    pub entries: BTreeMap<usize, i64>,
}

impl PAVector {
    pub fn new(order: u64, entries: impl IntoIterator<Item = (usize, i64)>) -> PAVector {
        let mut map = BTreeMap::new();
        for (c, v) in entries {
            *map.entry(c).or_insert(0) += v;
        }
        map.retain(|_, v| *v != 0);
        PAVector { order, entries: map }
    }

    /// The partial augmentations of a group element in class `class`.
    pub fn unit(order: u64, class: usize) -> PAVector {
        PAVector::new(order, [(class, 1)])
    }

    pub fn get(&self, class: usize) -> i64 {
        self.entries.get(&class).copied().unwrap_or(0)
    }

    pub fn augmentation(&self) -> i64 {
        self.entries.values().sum()
    }

    /// Checks support, the identity class and the augmentation.
    pub fn validate(&self, table: &CharacterTable) -> Result<(), BuildError> {
        let allowed: BTreeSet<usize> = table.classes_of_order_dividing(self.order).into_iter().collect();
        for &c in self.entries.keys() {
            if !allowed.contains(&c) {
                let name = table.classes.get(c).map(|x| x.name.as_str()).unwrap_or("?");
                return Err(BuildError::InvalidPA(format!(
                    "class {name} cannot carry partial augmentation for order {}",
                    self.order
                )));
            }
        }
        if self.augmentation() != 1 {
            return Err(BuildError::InvalidPA(format!(
                "partial augmentations for order {} sum to {}",
                self.order,
                self.augmentation()
            )));
        }
        Ok(())
    }
}

/// Partial augmentations of u and of all its proper powers, keyed by the order
/// e > 1 of the power u^{k/e}.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PATuple {
    pub order: u64,
    pub per_divisor: BTreeMap<u64, PAVector>,
}

impl PATuple {
    pub fn empty(order: u64) -> PATuple {
        PATuple { order, per_divisor: BTreeMap::new() }
    }

    pub fn top(&self) -> Option<&PAVector> {
        self.per_divisor.get(&self.order)
    }

    pub fn level(&self, e: u64) -> Result<&PAVector, BuildError> {
        self.per_divisor.get(&e).ok_or(BuildError::MissingLevel(e))
    }

    /// The same tuple without the entry for u itself.
    pub fn lower(&self) -> PATuple {
        let mut t = self.clone();
        t.per_divisor.remove(&self.order);
        t
    }

    pub fn with_top(&self, pa: PAVector) -> PATuple {
        let mut t = self.clone();
        t.per_divisor.insert(self.order, pa);
        t
    }

    pub fn is_complete(&self) -> bool {
        divisors(self.order)
            .into_iter()
            .filter(|&e| e > 1)
            .all(|e| self.per_divisor.get(&e).is_some_and(|pa| pa.order == e))
    }

    pub fn validate(&self, table: &CharacterTable) -> Result<(), BuildError> {
        for (&e, pa) in &self.per_divisor {
            if pa.order != e || self.order % e != 0 {
                return Err(BuildError::InvalidPA(format!("level {e} does not fit order {}", self.order)));
            }
            pa.validate(table)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CharId {
    pub table: TableKind,
    pub extra: bool,
    pub index: usize,
}

impl fmt::Display for CharId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = match self.table {
            TableKind::Ordinary => "ord".to_string(),
            TableKind::Brauer(p) => format!("b{p}"),
        };
        let x = if self.extra { "x" } else { "" };
        write!(f, "{t}{x}.{}", self.index)
    }
}

impl std::str::FromStr for CharId {
    type Err = BuildError;
    fn from_str(s: &str) -> Result<CharId, BuildError> {
        let bad = || BuildError::Parse(format!("bad character id {s:?}"));
        let (t, idx) = s.split_once('.').ok_or_else(bad)?;
        let index = idx.parse().map_err(|_| bad())?;
        let (t, extra) = match t.strip_suffix('x') {
            Some(rest) => (rest, true),
            None => (t, false),
        };
        let table = match t {
            "ord" => TableKind::Ordinary,
            _ => TableKind::Brauer(t.strip_prefix('b').and_then(|p| p.parse().ok()).ok_or_else(bad)?),
        };
        Ok(CharId { table, extra, index })
    }
}

/// A character (or extra class function) with values aligned to ordinary classes.
#[derive(Debug, Clone)]
pub struct CharRow {
    pub id: CharId,
    pub degree: i64,
    values: Vec<Option<Cyc>>,
}

impl CharRow {
    pub fn from_table(table: &CharacterTable, n_ordinary: usize, index: usize, extra: bool) -> CharRow {
        let src = if extra { &table.extra_characters[index] } else { &table.characters[index] };
        let mut values = vec![None; n_ordinary];
        for (v, &pos) in src.iter().zip(&table.ordinary_positions) {
            values[pos] = Some(v.clone());
        }
        let degree = CharacterTable::degree(src, table.identity_class());
        CharRow { id: CharId { table: table.kind, extra, index }, degree, values }
    }

    pub fn value(&self, class: usize) -> Result<&Cyc, BuildError> {
        self.values
            .get(class)
            .and_then(|v| v.as_ref())
            .ok_or(BuildError::MissingValue { row: self.id, class })
    }
}

/// All character rows of the given tables, including extra class functions.
pub fn collect_rows(bundle: &TableBundle, tables: &[TableKind]) -> Vec<CharRow> {
    let n = bundle.ordinary.classes.len();
    let mut out = Vec::new();
    for kind in tables {
        let table = match kind {
            TableKind::Ordinary => &bundle.ordinary,
            TableKind::Brauer(p) => match bundle.brauer_table(*p) {
                Some(t) => t,
                None => continue,
            },
        };
        out.extend((0..table.characters.len()).map(|i| CharRow::from_table(table, n, i, false)));
        out.extend((0..table.extra_characters.len()).map(|i| CharRow::from_table(table, n, i, true)));
    }
    out
}

/// ψ(u) = Σ_x ε_x(u) ψ(x).
pub fn character_value_at_unit(row: &CharRow, pa: &PAVector) -> Result<Cyc, BuildError> {
    let mut acc = Cyc::zero();
    for (&c, &e) in &pa.entries {
        acc = &acc + &row.value(c)?.scale(&Rat::from_integer(BigInt::from(e)));
    }
    Ok(acc)
}

fn integral(q: Rat, row: CharId, class: usize) -> Result<i64, BuildError> {
    if !q.is_integer() {
        return Err(BuildError::NotAlgebraicInteger { row, class });
    }
    q.to_integer().to_i64().ok_or(BuildError::NotAlgebraicInteger { row, class })
}

/// Tr_{Q(ζ_k)/Q}(ψ(x) ζ_k^{-ℓ}): k times the coefficient of ε_x in the μ_ℓ row.
pub fn mu_coefficient(row: &CharRow, k: u64, ell: u64, class: usize) -> Result<i64, BuildError> {
    let t = row.value(class)?.trace_shifted(k, -(ell as i64))?;
    integral(t, row.id, class)
}

/// k·a_ℓ(u, ψ): the contribution of all proper powers of u to k·μ_ℓ.
pub fn a_term_scaled(row: &CharRow, k: u64, ell: u64, lower: &PATuple) -> Result<i64, BuildError> {
    let values = power_values(row, k, lower)?;
    a_term_from_values(row, k, ell, &values)
}

/// ψ(u^d) for every divisor d > 1 of k, cached per row.
fn power_values(row: &CharRow, k: u64, lower: &PATuple) -> Result<Vec<(u64, Cyc)>, BuildError> {
    divisors(k)
        .into_iter()
        .filter(|&d| d > 1)
        .map(|d| {
            let v = if d == k {
                Cyc::from_int(row.degree)
            } else {
                character_value_at_unit(row, lower.level(k / d)?)?
            };
            Ok((d, v))
        })
        .collect()
}

fn a_term_from_values(row: &CharRow, k: u64, ell: u64, values: &[(u64, Cyc)]) -> Result<i64, BuildError> {
    let mut total = Rat::zero();
    for (d, v) in values {
        total += v.trace_shifted(k / d, -(ell as i64))?;
    }
    integral(total, row.id, 0)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum VarKind {
    Eps { class: usize },
    Mu { character: CharId, ell: u64 },
    Agg { prime: u64 },
    Plain { name: String },
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarKind::Eps { class } => write!(f, "eps:{class}"),
            VarKind::Mu { character, ell } => write!(f, "mu:{character}:{ell}"),
            VarKind::Agg { prime } => write!(f, "agg:{prime}"),
            VarKind::Plain { name } => write!(f, "x:{name}"),
        }
    }
}

impl std::str::FromStr for VarKind {
    type Err = BuildError;
    fn from_str(s: &str) -> Result<VarKind, BuildError> {
        let bad = || BuildError::Parse(format!("bad variable kind {s:?}"));
        let (tag, rest) = s.split_once(':').ok_or_else(bad)?;
        Ok(match tag {
            "eps" => VarKind::Eps { class: rest.parse().map_err(|_| bad())? },
            "agg" => VarKind::Agg { prime: rest.parse().map_err(|_| bad())? },
            "x" => VarKind::Plain { name: rest.to_string() },
            "mu" => {
                let (c, ell) = rest.rsplit_once(':').ok_or_else(bad)?;
                VarKind::Mu { character: c.parse()?, ell: ell.parse().map_err(|_| bad())? }
            }
            _ => return Err(bad()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqRow {
    pub coeffs: Vec<i64>,
    pub rhs: i64,
}

/// μ-variables of one character row, one per ℓ (merged duplicates share a variable).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuGroup {
    pub character: CharId,
    pub degree: i64,
    pub vars: Vec<usize>,
}

/// Integer system: `equalities` hold exactly, variables in `nonneg` are ≥ 0,
/// every variable is an integer.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinSystem {
    pub variables: Vec<VarKind>,
    pub equalities: Vec<EqRow>,
    pub nonneg: BTreeSet<usize>,
    pub multiplicities: Vec<MuGroup>,
}

impl LinSystem {
    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn add_var(&mut self, kind: VarKind, nonneg: bool) -> usize {
        let i = self.variables.len();
        self.variables.push(kind);
        if nonneg {
            self.nonneg.insert(i);
        }
        for row in &mut self.equalities {
            row.coeffs.push(0);
        }
        i
    }

    pub fn add_equality(&mut self, terms: &[(usize, i64)], rhs: i64) {
        let mut coeffs = vec![0; self.variables.len()];
        for &(v, c) in terms {
            coeffs[v] += c;
        }
        self.equalities.push(EqRow { coeffs, rhs });
    }

    pub fn eps_vars(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.variables.iter().enumerate().filter_map(|(i, v)| match v {
            VarKind::Eps { class } => Some((i, *class)),
            _ => None,
        })
    }

    pub fn agg_var(&self) -> Option<(usize, u64)> {
        self.variables.iter().enumerate().find_map(|(i, v)| match v {
            VarKind::Agg { prime } => Some((i, *prime)),
            _ => None,
        })
    }

    /// Exact check of all rows and sign constraints.
    pub fn satisfied_by(&self, x: &[BigInt]) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        let rows_ok = self.equalities.iter().all(|row| {
            let lhs: BigInt = row.coeffs.iter().zip(x).map(|(&c, xi)| BigInt::from(c) * xi).sum();
            lhs == BigInt::from(row.rhs)
        });
        rows_ok && self.nonneg.iter().all(|&i| x[i] >= BigInt::zero())
    }

    /// Σ_ℓ μ_ℓ for every character row, paired with its degree.
    pub fn mu_sums(&self, x: &[BigInt]) -> Vec<(CharId, BigInt, i64)> {
        self.multiplicities
            .iter()
            .map(|g| (g.character, g.vars.iter().map(|&v| x[v].clone()).sum(), g.degree))
            .collect()
    }

    /// Fails on the first character whose multiplicities do not add up to its degree.
    pub fn check_mu_sums(&self, x: &[BigInt]) -> Result<(), String> {
        for (id, sum, deg) in self.mu_sums(x) {
            if sum != BigInt::from(deg) {
                return Err(format!("multiplicities of {id} sum to {sum}, degree is {deg}"));
            }
        }
        Ok(())
    }

    /// Plain-text dump: a `kinds` header, a `nonneg` flag line, then one
    /// `c_0 ... c_{n-1} rhs` line per equality.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("kinds");
        for v in &self.variables {
            s.push(' ');
            s.push_str(&v.to_string());
        }
        s.push_str("\nnonneg");
        for i in 0..self.variables.len() {
            s.push_str(if self.nonneg.contains(&i) { " 1" } else { " 0" });
        }
        s.push('\n');
        for row in &self.equalities {
            let line: Vec<String> = row.coeffs.iter().chain(std::iter::once(&row.rhs)).map(|c| c.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<LinSystem, BuildError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let kinds = lines.next().ok_or_else(|| BuildError::Parse("missing kinds line".into()))?;
        let mut kinds = kinds.split_whitespace();
        if kinds.next() != Some("kinds") {
            return Err(BuildError::Parse("first line must start with 'kinds'".into()));
        }
        let variables: Vec<VarKind> = kinds.map(str::parse).collect::<Result<_, _>>()?;
        let n = variables.len();
        let flags = lines.next().ok_or_else(|| BuildError::Parse("missing nonneg line".into()))?;
        let mut flags = flags.split_whitespace();
        if flags.next() != Some("nonneg") {
            return Err(BuildError::Parse("second line must start with 'nonneg'".into()));
        }
        let flags: Vec<&str> = flags.collect();
        if flags.len() != n {
            return Err(BuildError::Parse(format!("{} nonneg flags for {n} variables", flags.len())));
        }
        let mut nonneg = BTreeSet::new();
        for (i, f) in flags.iter().enumerate() {
            match *f {
                "1" => {
                    nonneg.insert(i);
                }
                "0" => {}
                other => return Err(BuildError::Parse(format!("bad nonneg flag {other:?}"))),
            }
        }
        let mut equalities = Vec::new();
        for line in lines {
            let nums: Vec<i64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| BuildError::Parse(format!("bad integer {t:?}"))))
                .collect::<Result<_, _>>()?;
            if nums.len() != n + 1 {
                return Err(BuildError::Parse(format!("row has {} entries, expected {}", nums.len(), n + 1)));
            }
            equalities.push(EqRow { coeffs: nums[..n].to_vec(), rhs: nums[n] });
        }
        Ok(LinSystem { variables, equalities, nonneg, multiplicities: Vec::new() })
    }
}

/// Row builder that merges (ψ, ℓ) pairs yielding the same constraint.
struct RowCollector {
    sys: LinSystem,
    n_eps: usize,
    k: i64,
    seen: HashMap<(Vec<i64>, i64), usize>,
}

impl RowCollector {
    fn new(k: u64, eps: &[VarKind]) -> RowCollector {
        let mut sys = LinSystem::default();
        for v in eps {
            sys.add_var(v.clone(), false);
        }
        RowCollector { sys, n_eps: eps.len(), k: k as i64, seen: HashMap::new() }
    }

    fn push(&mut self, character: CharId, ell: u64, coeffs: Vec<i64>, a_scaled: i64) -> usize {
        let key = (coeffs, a_scaled);
        if let Some(&v) = self.seen.get(&key) {
            return v;
        }
        let mu = self.sys.add_var(VarKind::Mu { character, ell }, true);
        let mut terms: Vec<(usize, i64)> = key.0.iter().copied().enumerate().collect();
        terms.push((mu, -self.k));
        self.sys.add_equality(&terms, -a_scaled);
        self.seen.insert(key, mu);
        mu
    }

    fn finish(mut self) -> LinSystem {
        let terms: Vec<(usize, i64)> = (0..self.n_eps).map(|i| (i, 1)).collect();
        self.sys.add_equality(&terms, 1);
        self.sys
    }
}

/// Tables whose rows may be used for a unit of order k: the ordinary table and
/// Brauer tables in characteristic not dividing k.
fn admissible(tables: &[TableKind], k: u64) -> Vec<TableKind> {
    tables
        .iter()
        .copied()
        .filter(|t| match t {
            TableKind::Ordinary => true,
            TableKind::Brauer(p) => k % p != 0,
        })
        .collect()
}

/// The HeLP system for u of order k, given the partial augmentations of all
/// proper powers of u in `lower`.
pub fn build_system(
    bundle: &TableBundle,
    k: u64,
    lower: &PATuple,
    tables: &[TableKind],
) -> Result<LinSystem, BuildError> {
    let rows = collect_rows(bundle, &admissible(tables, k));
    build_from_rows(bundle, k, lower, &rows)
}

pub fn build_from_rows(
    bundle: &TableBundle,
    k: u64,
    lower: &PATuple,
    rows: &[CharRow],
) -> Result<LinSystem, BuildError> {
    let eps_classes = bundle.ordinary.classes_of_order_dividing(k);
    let eps: Vec<VarKind> = eps_classes.iter().map(|&class| VarKind::Eps { class }).collect();
    let mut rc = RowCollector::new(k, &eps);
    for row in rows {
        let values = power_values(row, k, lower)?;
        let mut vars = Vec::with_capacity(k as usize);
        for ell in 0..k {
            let coeffs = eps_classes
                .iter()
                .map(|&c| mu_coefficient(row, k, ell, c))
                .collect::<Result<Vec<_>, _>>()?;
            let a = a_term_from_values(row, k, ell, &values)?;
            vars.push(rc.push(row.id, ell, coeffs, a));
        }
        rc.sys.multiplicities.push(MuGroup { character: row.id, degree: row.degree, vars });
    }
    Ok(rc.finish())
}

/// True iff the row takes a single value on all classes of elements of order p.
pub fn is_p_constant(row: &[Cyc], table: &CharacterTable, p: u64) -> bool {
    let mut vals = table.classes_of_order(p).into_iter().map(|c| &row[c]);
    match vals.next() {
        Some(first) => vals.all(|v| v == first),
        None => true,
    }
}

fn row_is_p_constant(row: &CharRow, p_classes: &[usize]) -> bool {
    let mut vals = p_classes.iter().map(|&c| row.value(c).ok());
    match vals.next() {
        Some(first) => vals.all(|v| v == first),
        None => true,
    }
}

/// Variant for k = p·q using only p-constant rows: all ε of order-p classes
/// are replaced by their sum, and ψ(u^q) = ψ(x_p) needs no partial
/// augmentations of u^q. `pa_q` holds the partial augmentations of u^p.
pub fn build_system_p_constant(
    bundle: &TableBundle,
    k: u64,
    p: u64,
    pa_q: &PAVector,
    tables: &[TableKind],
) -> Result<LinSystem, BuildError> {
    if k % p != 0 || !is_prime(p) || !is_prime(k / p) || k / p == p {
        return Err(BuildError::NotSemiprime(k));
    }
    let q = k / p;
    let table = &bundle.ordinary;
    let p_classes = table.classes_of_order(p);
    if p_classes.is_empty() {
        return Err(BuildError::NoClassesOfOrder(p));
    }
    let rows: Vec<CharRow> = collect_rows(bundle, &admissible(tables, k))
        .into_iter()
        .filter(|r| row_is_p_constant(r, &p_classes))
        .collect();
    if rows.is_empty() {
        return Err(BuildError::NoPConstantRows(p));
    }
    let rep = p_classes[0];
    let mut columns: Vec<(VarKind, usize)> = Vec::new();
    for c in table.classes_of_order_dividing(k) {
        if table.classes[c].element_order == p {
            if c == rep {
                columns.push((VarKind::Agg { prime: p }, c));
            }
        } else {
            columns.push((VarKind::Eps { class: c }, c));
        }
    }
    let kinds: Vec<VarKind> = columns.iter().map(|(v, _)| v.clone()).collect();
    let mut rc = RowCollector::new(k, &kinds);
    for row in &rows {
        let values = vec![
            (p, character_value_at_unit(row, pa_q)?),
            (q, row.value(rep)?.clone()),
            (k, Cyc::from_int(row.degree)),
        ];
        let mut vars = Vec::with_capacity(k as usize);
        for ell in 0..k {
            let coeffs = columns
                .iter()
                .map(|&(_, c)| mu_coefficient(row, k, ell, c))
                .collect::<Result<Vec<_>, _>>()?;
            let a = a_term_from_values(row, k, ell, &values)?;
            vars.push(rc.push(row.id, ell, coeffs, a));
        }
        rc.sys.multiplicities.push(MuGroup { character: row.id, degree: row.degree, vars });
    }
    Ok(rc.finish())
}

/// The ε part of a solution vector as a partial augmentation vector of order k.
pub fn eps_solution(sys: &LinSystem, k: u64, x: &[BigInt]) -> PAVector {
    PAVector::new(
        k,
        sys.eps_vars().map(|(i, class)| (class, x[i].to_i64().expect("partial augmentation fits in i64"))),
    )
}
