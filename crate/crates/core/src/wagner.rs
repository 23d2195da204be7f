//! Congruences between the partial augmentations of u and of u^{p^i}.
//!
//! For every prime power p^i dividing o(u) with u^{p^i} ≠ 1:
//! `Σ_{x : x^{p^i} ∼ s} ε_x(u) ≡ ε_s(u^{p^i}) (mod p)` for every class s, and
//! consequently `Σ_{o(x) = p^i} ε_x(u) ≡ 0 (mod p)`.
//! This includes units of prime power order, for exponents below the full one.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::chartab::{CharacterTable, TableError};
use crate::numtheory::factorize;
use crate::sysbuild::PATuple;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WagnerError {
    #[error("tuple of order {order} has no partial augmentations for order {level}")]
    MissingLevel { order: u64, level: u64 },
    #[error("{0}")]
    Table(String),
}

impl From<TableError> for WagnerError {
    fn from(e: TableError) -> Self {
        WagnerError::Table(e.to_string())
    }
}

/// A failed congruence: the classes x with x^{p^i} ∼ `class` carry `lhs`, while
/// the power u^{p^i} has partial augmentation `rhs` on `class`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WagnerViolation {
    pub prime: u64,
    pub exponent: u32,
    pub class: usize,
    pub lhs: i64,
    pub rhs: i64,
}

/// `Ok(None)` if every congruence holds, `Ok(Some(v))` for the first violation.
pub fn wagner_check(table: &CharacterTable, tuple: &PATuple) -> Result<Option<WagnerViolation>, WagnerError> {
    let k = tuple.order;
    let top = tuple.top().ok_or(WagnerError::MissingLevel { order: k, level: k })?;
    for (p, a) in factorize(k) {
        let mut q = 1u64;
        for i in 1..=a {
            q *= p;
            if q == k {
                break;
            }
            let power = tuple
                .per_divisor
                .get(&(k / q))
                .ok_or(WagnerError::MissingLevel { order: k, level: k / q })?;
            let mut lhs: BTreeMap<usize, i64> = BTreeMap::new();
            for (&x, &e) in &top.entries {
                *lhs.entry(table.class_of_power(x, q)?).or_insert(0) += e;
            }
            let mut classes: Vec<usize> = lhs.keys().chain(power.entries.keys()).copied().collect();
            classes.sort_unstable();
            classes.dedup();
            for s in classes {
                let l = lhs.get(&s).copied().unwrap_or(0);
                let r = power.get(s);
                if (l - r).rem_euclid(p as i64) != 0 {
                    return Ok(Some(WagnerViolation { prime: p, exponent: i, class: s, lhs: l, rhs: r }));
                }
            }
            let corollary: i64 = top
                .entries
                .iter()
                .filter(|&(&x, _)| table.classes[x].element_order == q)
                .map(|(_, &e)| e)
                .sum();
            assert!(
                corollary.rem_euclid(p as i64) == 0,
                "classwise congruences hold but the order-{q} sum is {corollary}"
            );
        }
    }
    Ok(None)
}

pub fn wagner_test(table: &CharacterTable, tuple: &PATuple) -> Result<bool, WagnerError> {
    Ok(wagner_check(table, tuple)?.is_none())
}
