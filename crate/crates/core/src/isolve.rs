//! Exact enumeration of the integer points of `{x : Ax = b, x_i ≥ 0 for i ∈ N}`.
//!
//! Equalities are eliminated over Z (`x = x0 + B t`), the sign constraints
//! become inequalities in the free parameters t, and the polytope is walked by
//! depth-first search with LP bounds from an exact simplex.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::sysbuild::LinSystem;

pub type Rat = BigRational;

/// `coeffs · x ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Inequality {
    pub coeffs: Vec<Rat>,
    pub rhs: Rat,
}

impl Inequality {
    pub fn new(coeffs: Vec<Rat>, rhs: Rat) -> Inequality {
        Inequality { coeffs, rhs }
    }

    pub fn from_ints(coeffs: &[i64], rhs: i64) -> Inequality {
        Inequality {
            coeffs: coeffs.iter().map(|&c| Rat::from_integer(c.into())).collect(),
            rhs: Rat::from_integer(rhs.into()),
        }
    }

    fn holds_at(&self, x: &[Rat]) -> bool {
        dot(&self.coeffs, x) <= self.rhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LPOutcome {
    Optimal { value: Rat, point: Vec<Rat> },
    Unbounded,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    /// All integer solutions, sorted lexicographically.
    Finite(Vec<Vec<BigInt>>),
    /// The solution set is unbounded; carries a rational recession direction.
    Infinite(Vec<Rat>),
    /// Search stopped after this many nodes.
    Aborted(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RedundPolicy {
    /// Use the LP redundancy filter only when there are more than 40 inequalities.
    Auto,
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    pub redund: RedundPolicy,
    pub max_nodes: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { redund: RedundPolicy::Auto, max_nodes: 10_000_000 }
    }
}

const REDUND_THRESHOLD: usize = 40;

fn dot(a: &[Rat], x: &[Rat]) -> Rat {
    a.iter().zip(x).fold(Rat::zero(), |acc, (c, v)| acc + c * v)
}

// ---------------------------------------------------------------------------
// Elimination of equalities
// ---------------------------------------------------------------------------

/// Integer parametrization `x = base + Σ_j t_j basis[j]` of the equality
/// lattice, with the sign constraints rewritten over t.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduced {
    pub base: Vec<BigInt>,
    pub basis: Vec<Vec<BigInt>>,
    pub inequalities: Vec<Inequality>,
}

impl Reduced {
    pub fn num_params(&self) -> usize {
        self.basis.len()
    }

    pub fn point(&self, t: &[BigInt]) -> Vec<BigInt> {
        let mut x = self.base.clone();
        for (tj, col) in t.iter().zip(&self.basis) {
            for (xi, bi) in x.iter_mut().zip(col) {
                *xi += tj * bi;
            }
        }
        x
    }

    pub fn direction(&self, r: &[Rat]) -> Vec<Rat> {
        let mut x = vec![Rat::zero(); self.base.len()];
        for (rj, col) in r.iter().zip(&self.basis) {
            for (xi, bi) in x.iter_mut().zip(col) {
                *xi += rj * Rat::from_integer(bi.clone());
            }
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Elimination {
    Reduced(Reduced),
    NoIntegerSolution,
}

pub fn diophantine_eliminate(sys: &LinSystem) -> Elimination {
    let n = sys.num_vars();
    let mut base = vec![BigInt::zero(); n];
    let mut basis: Vec<Vec<BigInt>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    for row in &sys.equalities {
        let a: Vec<BigInt> = row.coeffs.iter().map(|&c| BigInt::from(c)).collect();
        let beta = BigInt::from(row.rhs) - dot_int(&a, &base);
        let mut c: Vec<BigInt> = basis.iter().map(|col| dot_int(&a, col)).collect();
        loop {
            let nz: Vec<usize> = (0..c.len()).filter(|&j| !c[j].is_zero()).collect();
            match nz.len() {
                0 => {
                    if !beta.is_zero() {
                        return Elimination::NoIntegerSolution;
                    }
                    break;
                }
                1 => {
                    let j = nz[0];
                    let (t, r) = beta.div_rem(&c[j]);
                    if !r.is_zero() {
                        return Elimination::NoIntegerSolution;
                    }
                    for (bi, vi) in base.iter_mut().zip(&basis[j]) {
                        *bi += &t * vi;
                    }
                    basis.remove(j);
                    break;
                }
                _ => {
                    let p = *nz.iter().min_by_key(|&&j| c[j].abs()).unwrap();
                    let cp = c[p].clone();
                    for &k in &nz {
                        if k == p {
                            continue;
                        }
                        let q = c[k].div_floor(&cp);
                        c[k] -= &q * &cp;
                        let (src, dst) = pick_two(&mut basis, p, k);
                        for (d, s) in dst.iter_mut().zip(src.iter()) {
                            *d -= &q * s;
                        }
                    }
                }
            }
        }
    }
    lll_reduce(&mut basis);
    let mut inequalities = Vec::new();
    for &i in &sys.nonneg {
        let coeffs: Vec<Rat> = basis.iter().map(|col| Rat::from_integer(-col[i].clone())).collect();
        let rhs = Rat::from_integer(base[i].clone());
        if coeffs.iter().all(Zero::is_zero) && !rhs.is_negative() {
            continue;
        }
        inequalities.push(Inequality { coeffs, rhs });
    }
    Elimination::Reduced(Reduced { base, basis, inequalities })
}

fn dot_int(a: &[BigInt], x: &[BigInt]) -> BigInt {
    a.iter().zip(x).map(|(p, q)| p * q).sum()
}

fn pick_two<T>(v: &mut [T], src: usize, dst: usize) -> (&T, &mut T) {
    assert_ne!(src, dst);
    if src < dst {
        let (l, r) = v.split_at_mut(dst);
        (&l[src], &mut r[0])
    } else {
        let (l, r) = v.split_at_mut(src);
        (&r[0], &mut l[dst])
    }
}

/// LLL reduction (δ = 3/4) of a list of linearly independent integer vectors.
fn lll_reduce(b: &mut [Vec<BigInt>]) {
    let n = b.len();
    if n < 2 {
        return;
    }
    let to_rat = |v: &[BigInt]| -> Vec<Rat> { v.iter().map(|x| Rat::from_integer(x.clone())).collect() };
    let delta = Rat::new(3.into(), 4.into());
    let gram_schmidt = |b: &[Vec<BigInt>]| -> (Vec<Vec<Rat>>, Vec<Vec<Rat>>, Vec<Rat>) {
        let mut bs: Vec<Vec<Rat>> = Vec::with_capacity(n);
        let mut mu = vec![vec![Rat::zero(); n]; n];
        let mut norms = Vec::with_capacity(n);
        for i in 0..n {
            let bi = to_rat(&b[i]);
            let mut v = bi.clone();
            for j in 0..i {
                mu[i][j] = dot(&bi, &bs[j]) / &norms[j];
                for (vk, bk) in v.iter_mut().zip(&bs[j]) {
                    *vk -= &mu[i][j] * bk;
                }
            }
            norms.push(dot(&v, &v));
            bs.push(v);
        }
        (bs, mu, norms)
    };
    let (_, mut mu, mut norms) = gram_schmidt(b);
    let mut k = 1;
    let mut guard = 0u64;
    while k < n {
        guard += 1;
        if guard > 100_000 {
            break;
        }
        for j in (0..k).rev() {
            let q = mu[k][j].round();
            if !q.is_zero() {
                let qi = q.to_integer();
                let (src, dst) = pick_two(b, j, k);
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d -= &qi * s;
                }
                for l in 0..=j {
                    let m = if l == j { Rat::one() } else { mu[j][l].clone() };
                    mu[k][l] = &mu[k][l] - &q * m;
                }
            }
        }
        let lhs = &norms[k];
        let rhs = (&delta - &mu[k][k - 1] * &mu[k][k - 1]) * &norms[k - 1];
        if *lhs >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            let (_, m2, n2) = gram_schmidt(b);
            mu = m2;
            norms = n2;
            k = k.max(2) - 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Exact simplex
// ---------------------------------------------------------------------------

/// Dictionary form: `basic[r] = consts[r] + Σ_c rows[r][c] · nonbasic[c]`.
struct Dictionary {
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    consts: Vec<Rat>,
    rows: Vec<Vec<Rat>>,
    /// Rows whose basic variable is a free (unrestricted) variable.
    free_row: Vec<bool>,
    /// Columns holding a free variable that could not be made basic.
    dead_col: Vec<bool>,
    obj_const: Rat,
    obj: Vec<Rat>,
}

impl Dictionary {
    fn pivot(&mut self, r: usize, c: usize) {
        let a = self.rows[r][c].clone();
        let inv = Rat::one() / &a;
        let entering = self.nonbasic[c];
        let leaving = self.basic[r];
        // Solve row r for the entering variable.
        let mut new_row: Vec<Rat> = self.rows[r].iter().map(|v| -(v * &inv)).collect();
        new_row[c] = inv.clone();
        let new_const = -(&self.consts[r] * &inv);
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c].clone();
            if f.is_zero() {
                continue;
            }
            for (j, v) in new_row.iter().enumerate() {
                if j == c {
                    self.rows[i][j] = &f * v;
                } else if !v.is_zero() {
                    self.rows[i][j] += &f * v;
                }
            }
            self.consts[i] += &f * &new_const;
        }
        let f = self.obj[c].clone();
        if !f.is_zero() {
            for (j, v) in new_row.iter().enumerate() {
                if j == c {
                    self.obj[j] = &f * v;
                } else if !v.is_zero() {
                    self.obj[j] += &f * v;
                }
            }
            self.obj_const += &f * &new_const;
        }
        self.rows[r] = new_row;
        self.consts[r] = new_const;
        self.basic[r] = entering;
        self.nonbasic[c] = leaving;
    }

    /// Maximizes the current objective with Bland's rule.
    /// Returns false if the objective is unbounded.
    fn run(&mut self) -> bool {
        loop {
            let entering = (0..self.nonbasic.len())
                .filter(|&c| !self.dead_col[c] && self.obj[c].is_positive())
                .min_by_key(|&c| self.nonbasic[c]);
            let Some(c) = entering else { return true };
            let mut best: Option<(Rat, usize, usize)> = None;
            for r in 0..self.rows.len() {
                if self.free_row[r] || !self.rows[r][c].is_negative() {
                    continue;
                }
                let ratio = &self.consts[r] / -&self.rows[r][c];
                let better = match &best {
                    None => true,
                    Some((b, _, var)) => ratio < *b || (ratio == *b && self.basic[r] < *var),
                };
                if better {
                    best = Some((ratio, r, self.basic[r]));
                }
            }
            match best {
                None => return false,
                Some((_, r, _)) => self.pivot(r, c),
            }
        }
    }
}

/// Optimizes `objective · x` over `{x ∈ Q^n : coeffs · x ≤ rhs}` with all x free.
pub fn simplex_opt(ineqs: &[Inequality], objective: &[Rat], dir: Direction) -> LPOutcome {
    let n = objective.len();
    let m = ineqs.len();
    // Variables: 0..n are x, n..n+m slacks, n+m the phase-one artificial.
    let mut d = Dictionary {
        basic: (n..n + m).collect(),
        nonbasic: (0..n).collect(),
        consts: ineqs.iter().map(|q| q.rhs.clone()).collect(),
        rows: ineqs.iter().map(|q| q.coeffs.iter().map(|c| -c).collect()).collect(),
        free_row: vec![false; m],
        dead_col: vec![false; n],
        obj_const: Rat::zero(),
        obj: vec![Rat::zero(); n],
    };
    // Bring every free variable into the basis where possible.
    for c in 0..n {
        let r = (0..m).filter(|&r| !d.free_row[r] && !d.rows[r][c].is_zero()).min_by_key(|&r| d.basic[r]);
        match r {
            Some(r) => {
                d.pivot(r, c);
                d.free_row[r] = true;
            }
            None => d.dead_col[c] = true,
        }
    }
    // Phase one.
    let worst = (0..m)
        .filter(|&r| !d.free_row[r] && d.consts[r].is_negative())
        .min_by(|&a, &b| d.consts[a].cmp(&d.consts[b]));
    if let Some(r0) = worst {
        let art = n + m;
        let col = d.nonbasic.len();
        d.nonbasic.push(art);
        d.dead_col.push(false);
        for r in 0..m {
            let v = if d.free_row[r] { Rat::zero() } else { Rat::one() };
            d.rows[r].push(v);
        }
        d.obj = vec![Rat::zero(); col + 1];
        d.obj[col] = -Rat::one();
        d.obj_const = Rat::zero();
        d.pivot(r0, col);
        d.run();
        if d.obj_const.is_negative() {
            return LPOutcome::Infeasible;
        }
        if let Some(r) = d.basic.iter().position(|&v| v == art) {
            let c = (0..d.nonbasic.len()).find(|&c| !d.dead_col[c] && !d.rows[r][c].is_zero());
            match c {
                Some(c) => d.pivot(r, c),
                None => {
                    // The row reads art = 0 identically; drop it.
                    d.basic.remove(r);
                    d.consts.remove(r);
                    d.rows.remove(r);
                    d.free_row.remove(r);
                }
            }
        }
        let c = d.nonbasic.iter().position(|&v| v == art).expect("artificial is nonbasic");
        d.nonbasic.remove(c);
        d.dead_col.remove(c);
        for row in &mut d.rows {
            row.remove(c);
        }
    }
    // Phase two.
    let sign = if dir == Direction::Max { Rat::one() } else { -Rat::one() };
    let cols = d.nonbasic.len();
    d.obj = vec![Rat::zero(); cols];
    d.obj_const = Rat::zero();
    for (j, cj) in objective.iter().enumerate() {
        if cj.is_zero() {
            continue;
        }
        let cj = cj * &sign;
        if let Some(r) = d.basic.iter().position(|&v| v == j) {
            d.obj_const += &cj * &d.consts[r];
            for c in 0..cols {
                let v = &cj * &d.rows[r][c];
                d.obj[c] += v;
            }
        } else {
            let c = d.nonbasic.iter().position(|&v| v == j).unwrap();
            d.obj[c] += cj;
        }
    }
    if (0..cols).any(|c| d.dead_col[c] && !d.obj[c].is_zero()) {
        return LPOutcome::Unbounded;
    }
    if !d.run() {
        return LPOutcome::Unbounded;
    }
    let mut point = vec![Rat::zero(); n];
    for (r, &v) in d.basic.iter().enumerate() {
        if v < n {
            point[v] = d.consts[r].clone();
        }
    }
    LPOutcome::Optimal { value: &d.obj_const * &sign, point }
}

/// Drops duplicates and every inequality implied by the remaining ones.
pub fn remove_redundant(ineqs: &[Inequality]) -> Vec<Inequality> {
    let mut rows: Vec<Inequality> = Vec::new();
    for q in ineqs {
        if !rows.contains(q) {
            rows.push(q.clone());
        }
    }
    let mut i = 0;
    while i < rows.len() {
        let target = rows[i].clone();
        let others: Vec<Inequality> = rows.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, q)| q.clone()).collect();
        let implied = match simplex_opt(&others, &target.coeffs, Direction::Max) {
            LPOutcome::Optimal { value, .. } => value <= target.rhs,
            LPOutcome::Infeasible => true,
            LPOutcome::Unbounded => false,
        };
        if implied {
            rows.remove(i);
        } else {
            i += 1;
        }
    }
    rows
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// Integer inequality `a · t ≤ b` after division by the content of a.
fn normalize_integral(q: &Inequality) -> Option<(Vec<BigInt>, BigInt)> {
    let denom = q.coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let a: Vec<BigInt> = q.coeffs.iter().map(|c| (c * Rat::from_integer(denom.clone())).to_integer()).collect();
    let b = &q.rhs * Rat::from_integer(denom);
    let g = a.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return if b.is_negative() { Some((a, BigInt::from(-1))) } else { None };
    }
    let a: Vec<BigInt> = a.into_iter().map(|x| x / &g).collect();
    let b = (b / Rat::from_integer(g)).floor().to_integer();
    Some((a, b))
}

fn tighten(ineqs: &[Inequality]) -> Vec<Inequality> {
    let mut best: BTreeMap<Vec<BigInt>, BigInt> = BTreeMap::new();
    for q in ineqs {
        if let Some((a, b)) = normalize_integral(q) {
            best.entry(a).and_modify(|v| *v = v.clone().min(b.clone())).or_insert(b);
        }
    }
    best.into_iter()
        .map(|(a, b)| Inequality {
            coeffs: a.into_iter().map(Rat::from_integer).collect(),
            rhs: Rat::from_integer(b),
        })
        .collect()
}

/// Rational recession direction of a nonempty polyhedron that is unbounded in
/// direction `obj`: a maximizer of `obj · r` over `A r ≤ 0, -1 ≤ r ≤ 1`.
fn recession_ray(ineqs: &[Inequality], obj: &[Rat]) -> Vec<Rat> {
    let n = obj.len();
    let mut rows: Vec<Inequality> = ineqs
        .iter()
        .map(|q| Inequality { coeffs: q.coeffs.clone(), rhs: Rat::zero() })
        .collect();
    for j in 0..n {
        let mut e = vec![Rat::zero(); n];
        e[j] = Rat::one();
        rows.push(Inequality { coeffs: e.clone(), rhs: Rat::one() });
        e[j] = -Rat::one();
        rows.push(Inequality { coeffs: e, rhs: Rat::one() });
    }
    match simplex_opt(&rows, obj, Direction::Max) {
        LPOutcome::Optimal { point, .. } => point,
        other => unreachable!("bounded ray LP returned {other:?}"),
    }
}

enum Search {
    Done,
    Budget,
}

struct Enumerator {
    nodes: u64,
    max_nodes: u64,
    found: Vec<Vec<BigInt>>,
}

fn ceil_int(q: &Rat) -> BigInt {
    q.ceil().to_integer()
}

fn floor_int(q: &Rat) -> BigInt {
    q.floor().to_integer()
}

impl Enumerator {
    /// `ineqs` are over the parameters listed in `free`; `fixed` holds the
    /// values already assigned.
    fn search(&mut self, ineqs: Vec<Inequality>, free: Vec<usize>, fixed: &mut Vec<Option<BigInt>>) -> Search {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Search::Budget;
        }
        if free.is_empty() {
            if ineqs.iter().all(|q| !q.rhs.is_negative()) {
                self.found.push(fixed.iter().map(|v| v.clone().expect("all parameters fixed")).collect());
            }
            return Search::Done;
        }
        let nf = free.len();
        let mut best: Option<(usize, BigInt, BigInt)> = None;
        for j in 0..nf {
            let mut e = vec![Rat::zero(); nf];
            e[j] = Rat::one();
            let lo = match simplex_opt(&ineqs, &e, Direction::Min) {
                LPOutcome::Optimal { value, .. } => ceil_int(&value),
                LPOutcome::Infeasible => return Search::Done,
                LPOutcome::Unbounded => unreachable!("search runs on bounded polytopes"),
            };
            let hi = match simplex_opt(&ineqs, &e, Direction::Max) {
                LPOutcome::Optimal { value, .. } => floor_int(&value),
                LPOutcome::Infeasible => return Search::Done,
                LPOutcome::Unbounded => unreachable!("search runs on bounded polytopes"),
            };
            if lo > hi {
                return Search::Done;
            }
            let width = &hi - &lo;
            if best.as_ref().is_none_or(|(_, l, h)| width < h - l) {
                best = Some((j, lo, hi));
            }
        }
        let (j, lo, hi) = best.unwrap();
        let param = free[j];
        let rest: Vec<usize> = free.iter().copied().filter(|&p| p != param).collect();
        let mut v = lo;
        while v <= hi {
            let vr = Rat::from_integer(v.clone());
            let mut sub = Vec::with_capacity(ineqs.len());
            let mut ok = true;
            for q in &ineqs {
                let mut coeffs = q.coeffs.clone();
                let cj = coeffs.remove(j);
                let rhs = &q.rhs - cj * &vr;
                if coeffs.iter().all(Zero::is_zero) {
                    if rhs.is_negative() {
                        ok = false;
                        break;
                    }
                    continue;
                }
                sub.push(Inequality { coeffs, rhs });
            }
            if ok {
                fixed[param] = Some(v.clone());
                if let Search::Budget = self.search(sub, rest.clone(), fixed) {
                    return Search::Budget;
                }
                fixed[param] = None;
            }
            v += 1;
        }
        Search::Done
    }
}

/// All integer solutions of `sys`.
pub fn solve_all(sys: &LinSystem, opts: &SolveOptions) -> SolveOutcome {
    let red = match diophantine_eliminate(sys) {
        Elimination::NoIntegerSolution => return SolveOutcome::Finite(Vec::new()),
        Elimination::Reduced(r) => r,
    };
    let r = red.num_params();
    let mut ineqs = tighten(&red.inequalities);
    if ineqs.iter().any(|q| q.coeffs.iter().all(Zero::is_zero) && q.rhs.is_negative()) {
        return SolveOutcome::Finite(Vec::new());
    }
    let use_redund = match opts.redund {
        RedundPolicy::On => true,
        RedundPolicy::Off => false,
        RedundPolicy::Auto => ineqs.len() > REDUND_THRESHOLD,
    };
    if use_redund {
        ineqs = remove_redundant(&ineqs);
    }
    if r == 0 {
        let x = red.base.clone();
        return SolveOutcome::Finite(if sys.satisfied_by(&x) { vec![x] } else { Vec::new() });
    }
    // Boundedness: the polytope is bounded iff every ±t_j is bounded.
    for j in 0..r {
        for dir in [Direction::Max, Direction::Min] {
            let mut e = vec![Rat::zero(); r];
            e[j] = Rat::one();
            match simplex_opt(&ineqs, &e, dir) {
                LPOutcome::Infeasible => return SolveOutcome::Finite(Vec::new()),
                LPOutcome::Optimal { .. } => {}
                LPOutcome::Unbounded => {
                    if dir == Direction::Min {
                        e[j] = -Rat::one();
                    }
                    let ray = recession_ray(&ineqs, &e);
                    return SolveOutcome::Infinite(red.direction(&ray));
                }
            }
        }
    }
    let mut en = Enumerator { nodes: 0, max_nodes: opts.max_nodes, found: Vec::new() };
    let mut fixed = vec![None; r];
    if let Search::Budget = en.search(ineqs, (0..r).collect(), &mut fixed) {
        return SolveOutcome::Aborted(opts.max_nodes);
    }
    let mut sols: Vec<Vec<BigInt>> = en.found.iter().map(|t| red.point(t)).collect();
    for x in &sols {
        assert!(sys.satisfied_by(x), "solver produced a point that violates the system");
    }
    sols.sort();
    sols.dedup();
    SolveOutcome::Finite(sols)
}

/// Whether a rational point lies in the polyhedron.
pub fn feasible_point(ineqs: &[Inequality], x: &[Rat]) -> bool {
    ineqs.iter().all(|q| q.holds_at(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysbuild::VarKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64) -> Rat {
        Rat::from_integer(n.into())
    }

    fn plain(n: usize, nonneg: &[usize], rows: &[(&[i64], i64)]) -> LinSystem {
        let mut s = LinSystem::default();
        for i in 0..n {
            s.add_var(VarKind::Plain { name: format!("x{i}") }, nonneg.contains(&i));
        }
        for (c, b) in rows {
            let terms: Vec<(usize, i64)> = c.iter().copied().enumerate().collect();
            s.add_equality(&terms, *b);
        }
        s
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn lp_small_examples() {
        // max x + y s.t. x ≤ 2, y ≤ 3, x + y ≤ 4, -x ≤ 0, -y ≤ 0
        let rows = vec![
            Inequality::from_ints(&[1, 0], 2),
            Inequality::from_ints(&[0, 1], 3),
            Inequality::from_ints(&[1, 1], 4),
            Inequality::from_ints(&[-1, 0], 0),
            Inequality::from_ints(&[0, -1], 0),
        ];
        match simplex_opt(&rows, &[q(1), q(1)], Direction::Max) {
            LPOutcome::Optimal { value, point } => {
                assert_eq!(value, q(4));
                assert!(feasible_point(&rows, &point));
            }
            other => panic!("{other:?}"),
        }
        match simplex_opt(&rows, &[q(1), q(-2)], Direction::Min) {
            LPOutcome::Optimal { value, .. } => assert_eq!(value, q(-6)),
            other => panic!("{other:?}"),
        }
        let unb = vec![Inequality::from_ints(&[-1, 0], 0)];
        assert_eq!(simplex_opt(&unb, &[q(1), q(0)], Direction::Max), LPOutcome::Unbounded);
        assert_eq!(simplex_opt(&unb, &[q(0), q(1)], Direction::Max), LPOutcome::Unbounded);
        let inf = vec![Inequality::from_ints(&[1], -1), Inequality::from_ints(&[-1], -1)];
        assert_eq!(simplex_opt(&inf, &[q(1)], Direction::Max), LPOutcome::Infeasible);
        assert!(matches!(simplex_opt(&[], &[q(0)], Direction::Max), LPOutcome::Optimal { .. }));
    }

    #[test]
    fn lp_fractional_optimum() {
        // 2x ≤ 1, x ≥ 0: max x = 1/2
        let rows = vec![Inequality::from_ints(&[2], 1), Inequality::from_ints(&[-1], 0)];
        match simplex_opt(&rows, &[q(1)], Direction::Max) {
            LPOutcome::Optimal { value, .. } => assert_eq!(value, Rat::new(1.into(), 2.into())),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let rows = vec![
            Inequality::from_ints(&[1, 0], 1),
            Inequality::from_ints(&[1, 0], 1),
            Inequality::from_ints(&[1, 0], 5),
            Inequality::from_ints(&[0, 1], 1),
            Inequality::from_ints(&[1, 1], 3),
            Inequality::from_ints(&[-1, -1], 0),
        ];
        let kept = remove_redundant(&rows);
        assert_eq!(kept.len(), 3);
        assert!(!kept.contains(&Inequality::from_ints(&[1, 0], 5)));
        assert!(!kept.contains(&Inequality::from_ints(&[1, 1], 3)));
    }

    #[test]
    fn elimination_detects_lattice_obstruction() {
        let s = plain(2, &[], &[(&[2, 4], 3)]);
        assert_eq!(diophantine_eliminate(&s), Elimination::NoIntegerSolution);
        let s = plain(2, &[], &[(&[2, 4], 6)]);
        let Elimination::Reduced(r) = diophantine_eliminate(&s) else { panic!() };
        assert_eq!(r.num_params(), 1);
        for t in -3..=3 {
            assert!(s.satisfied_by(&r.point(&ints(&[t]))));
        }
    }

    #[test]
    fn simple_systems() {
        // x + y = 3, x, y ≥ 0 → 4 solutions
        let s = plain(2, &[0, 1], &[(&[1, 1], 3)]);
        match solve_all(&s, &SolveOptions::default()) {
            SolveOutcome::Finite(v) => {
                assert_eq!(v, vec![ints(&[0, 3]), ints(&[1, 2]), ints(&[2, 1]), ints(&[3, 0])]);
            }
            o => panic!("{o:?}"),
        }
        // x - y = 0 with x ≥ 0 → infinite
        let s = plain(2, &[0], &[(&[1, -1], 0)]);
        match solve_all(&s, &SolveOptions::default()) {
            SolveOutcome::Infinite(ray) => {
                assert_eq!(ray[0], ray[1]);
                assert!(ray[0].is_positive());
            }
            o => panic!("{o:?}"),
        }
        // 2x = 1 → none
        let s = plain(1, &[], &[(&[2], 1)]);
        assert_eq!(solve_all(&s, &SolveOptions::default()), SolveOutcome::Finite(vec![]));
        // fully determined
        let s = plain(2, &[], &[(&[1, 0], -4), (&[0, 1], 7)]);
        assert_eq!(solve_all(&s, &SolveOptions::default()), SolveOutcome::Finite(vec![ints(&[-4, 7])]));
        // determined but violates sign
        let s = plain(1, &[0], &[(&[1], -1)]);
        assert_eq!(solve_all(&s, &SolveOptions::default()), SolveOutcome::Finite(vec![]));
    }

    #[test]
    fn node_budget_aborts() {
        let s = plain(3, &[0, 1, 2], &[(&[1, 1, 1], 30)]);
        let opts = SolveOptions { max_nodes: 5, ..SolveOptions::default() };
        assert_eq!(solve_all(&s, &opts), SolveOutcome::Aborted(5));
        match solve_all(&s, &SolveOptions::default()) {
            SolveOutcome::Finite(v) => assert_eq!(v.len(), 31 * 32 / 2),
            o => panic!("{o:?}"),
        }
    }

    /// Random system together with a box `-B ≤ x_i ≤ B` imposed through
    /// nonnegative slacks, and the brute-force solution set over the box.
    fn random_boxed(rng: &mut ChaCha8Rng, bound: i64) -> (LinSystem, Vec<Vec<BigInt>>) {
        let n = rng.random_range(1..=4usize);
        let m = rng.random_range(0..=3usize);
        let mut rows: Vec<(Vec<i64>, i64)> = Vec::new();
        // Plant a point so that most systems are feasible.
        let plant: Vec<i64> = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
        for _ in 0..m {
            let c: Vec<i64> = (0..n).map(|_| rng.random_range(-3..=3)).collect();
            let mut b: i64 = c.iter().zip(&plant).map(|(a, x)| a * x).sum();
            if rng.random_bool(0.2) {
                b += rng.random_range(-2..=2);
            }
            rows.push((c, b));
        }
        let sign: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        let mut s = LinSystem::default();
        for i in 0..n {
            s.add_var(VarKind::Plain { name: format!("x{i}") }, sign[i]);
        }
        for (c, b) in &rows {
            let terms: Vec<(usize, i64)> = c.iter().copied().enumerate().collect();
            s.add_equality(&terms, *b);
        }
        for i in 0..n {
            let lo = s.add_var(VarKind::Plain { name: format!("lo{i}") }, true);
            let hi = s.add_var(VarKind::Plain { name: format!("hi{i}") }, true);
            s.add_equality(&[(i, 1), (lo, -1)], -bound);
            s.add_equality(&[(i, 1), (hi, 1)], bound);
        }
        let mut brute = Vec::new();
        let mut x = vec![-bound; n];
        loop {
            let ok_rows = rows.iter().all(|(c, b)| c.iter().zip(&x).map(|(a, v)| a * v).sum::<i64>() == *b);
            let ok_sign = (0..n).all(|i| !sign[i] || x[i] >= 0);
            if ok_rows && ok_sign {
                let mut full = x.clone();
                for &xi in &x {
                    full.push(xi + bound);
                    full.push(bound - xi);
                }
                brute.push(ints(&full));
            }
            let mut i = 0;
            while i < n && x[i] == bound {
                x[i] = -bound;
                i += 1;
            }
            if i == n {
                break;
            }
            x[i] += 1;
        }
        brute.sort();
        (s, brute)
    }

    #[test]
    fn random_systems_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for case in 0..250 {
            let (s, brute) = random_boxed(&mut rng, 6);
            let policy = if case % 2 == 0 { RedundPolicy::On } else { RedundPolicy::Off };
            let got = solve_all(&s, &SolveOptions { redund: policy, ..SolveOptions::default() });
            assert_eq!(got, SolveOutcome::Finite(brute), "case {case}:\n{}", s.to_text());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn row_order_and_sign_do_not_matter(seed in any::<u64>(), flips in prop::collection::vec(any::<bool>(), 16)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (s, _) = random_boxed(&mut rng, 4);
            let base = solve_all(&s, &SolveOptions::default());
            let mut t = s.clone();
            t.equalities.reverse();
            for (row, &f) in t.equalities.iter_mut().zip(flips.iter().cycle()) {
                if f {
                    row.coeffs.iter_mut().for_each(|c| *c = -*c);
                    row.rhs = -row.rhs;
                }
            }
            prop_assert_eq!(solve_all(&t, &SolveOptions::default()), base);
        }

        #[test]
        fn lp_optimum_is_feasible_and_dominates_vertices(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(1..=3usize);
            let mut rows: Vec<Inequality> = (0..rng.random_range(1..=6usize))
                .map(|_| {
                    let c: Vec<i64> = (0..n).map(|_| rng.random_range(-4..=4)).collect();
                    Inequality::from_ints(&c, rng.random_range(-3..=8))
                })
                .collect();
            for j in 0..n {
                let mut e = vec![0; n];
                e[j] = 1;
                rows.push(Inequality::from_ints(&e, 5));
                e[j] = -1;
                rows.push(Inequality::from_ints(&e, 5));
            }
            let obj: Vec<Rat> = (0..n).map(|_| q(rng.random_range(-3..=3))).collect();
            let out = simplex_opt(&rows, &obj, Direction::Max);
            // Integer grid check: no integer feasible point beats the optimum.
            let mut best_int: Option<Rat> = None;
            let mut x = vec![-5i64; n];
            loop {
                let xr: Vec<Rat> = x.iter().map(|&v| q(v)).collect();
                if feasible_point(&rows, &xr) {
                    let v = dot(&obj, &xr);
                    if best_int.as_ref().is_none_or(|b| v > *b) {
                        best_int = Some(v);
                    }
                }
                let mut i = 0;
                while i < n && x[i] == 5 { x[i] = -5; i += 1; }
                if i == n { break; }
                x[i] += 1;
            }
            match out {
                LPOutcome::Optimal { value, point } => {
                    prop_assert!(feasible_point(&rows, &point));
                    prop_assert_eq!(dot(&obj, &point), value.clone());
                    if let Some(b) = best_int { prop_assert!(b <= value); }
                }
                LPOutcome::Infeasible => prop_assert!(best_int.is_none()),
                LPOutcome::Unbounded => prop_assert!(false, "box-bounded LP reported unbounded"),
            }
        }
    }
}
