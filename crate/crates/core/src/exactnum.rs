//! Exact rational and cyclotomic arithmetic.
//!
//! A [`Cyc`] is an element of some cyclotomic field Q(ζ_n). Values are kept in
//! a canonical form: the coefficient vector in the power basis
//! 1, ζ_n, ..., ζ_n^{φ(n)-1} of the *smallest* n whose field contains the
//! value. Two values are equal iff their canonical forms are identical, so
//! `==` is plain data comparison.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::rc::Rc;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::numtheory::{euler_phi, factorize, gcd, lcm, ramanujan_sum};

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CycError {
    #[error("not a Galois automorphism: gcd({j}, {conductor}) != 1")]
    NotGaloisAutomorphism { j: i64, conductor: u64 },
    #[error("value outside stated field: conductor {conductor} does not divide {field}")]
    OutsideField { conductor: u64, field: u64 },
    #[error("invalid cyclotomic encoding: {0}")]
    Encoding(String),
}

/// Exact element of a cyclotomic field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cyc {
    conductor: u64,
    /// Power-basis coordinates over Q(ζ_conductor), length φ(conductor).
    coeffs: Vec<Rat>,
}

thread_local! {
    static CYCLOTOMIC_POLYS: RefCell<HashMap<u64, Rc<Vec<i64>>>> = RefCell::new(HashMap::new());
    static DESCENDERS: RefCell<HashMap<(u64, u64), Rc<Descender>>> = RefCell::new(HashMap::new());
}

/// Coefficients (low degree first) of the n-th cyclotomic polynomial.
fn cyclotomic_poly(n: u64) -> Rc<Vec<i64>> {
    if let Some(p) = CYCLOTOMIC_POLYS.with(|c| c.borrow().get(&n).cloned()) {
        return p;
    }
    // x^n - 1 divided by Φ_d for every proper divisor d.
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in crate::numtheory::divisors(n) {
        if d == n {
            continue;
        }
        let den = cyclotomic_poly(d);
        num = poly_div_exact(&num, &den);
    }
    let rc = Rc::new(num);
    CYCLOTOMIC_POLYS.with(|c| c.borrow_mut().insert(n, rc.clone()));
    rc
}

fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let dn = den.len() - 1;
    let mut rem = num.to_vec();
    let qlen = num.len() - dn;
    let mut q = vec![0i64; qlen];
    for i in (0..qlen).rev() {
        let c = rem[i + dn];
        q[i] = c;
        if c != 0 {
            for (j, &dj) in den.iter().enumerate() {
                rem[i + j] -= c * dj;
            }
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0));
    q
}

/// Reduce a dense exponent vector (exponents taken mod n) modulo Φ_n.
fn reduce_mod_phi(mut dense: Vec<Rat>, n: u64) -> Vec<Rat> {
    let phi = cyclotomic_poly(n);
    let deg = phi.len() - 1;
    for top in (deg..dense.len()).rev() {
        if dense[top].is_zero() {
            continue;
        }
        let c = std::mem::replace(&mut dense[top], Rat::zero());
        for (j, &pj) in phi.iter().enumerate().take(deg) {
            if pj != 0 {
                dense[top - deg + j] -= &c * rat_int(pj);
            }
        }
    }
    dense.truncate(deg);
    dense
}

/// Left inverse of the embedding Q(ζ_m) → Q(ζ_n) for n = p·m, gcd(p, m) = 1.
struct Descender {
    /// Power-basis image of ζ_m^i in Q(ζ_n), for i < φ(m).
    columns: Vec<Vec<Rat>>,
    pivot_rows: Vec<usize>,
    /// Inverse of the square submatrix on `pivot_rows`.
    inverse: Vec<Vec<Rat>>,
}

impl Descender {
    fn new(n: u64, m: u64) -> Self {
        let p = n / m;
        let phi_n = euler_phi(n) as usize;
        let phi_m = euler_phi(m) as usize;
        let columns: Vec<Vec<Rat>> = (0..phi_m)
            .map(|i| {
                let mut dense = vec![Rat::zero(); n as usize];
                dense[(p as usize * i) % n as usize] = Rat::one();
                reduce_mod_phi(dense, n)
            })
            .collect();
        // Greedily pick independent rows of the φ(n) × φ(m) embedding matrix.
        let mut pivot_rows = Vec::with_capacity(phi_m);
        let mut basis: Vec<Vec<Rat>> = Vec::new();
        for r in 0..phi_n {
            let mut v: Vec<Rat> = columns.iter().map(|c| c[r].clone()).collect();
            for (b, &pc) in basis.iter().zip(pivot_cols(&basis).iter()) {
                if !v[pc].is_zero() {
                    let f = &v[pc] / &b[pc];
                    for (vk, bk) in v.iter_mut().zip(b.iter()) {
                        *vk -= &f * bk;
                    }
                }
            }
            if v.iter().any(|x| !x.is_zero()) {
                basis.push(v);
                pivot_rows.push(r);
                if pivot_rows.len() == phi_m {
                    break;
                }
            }
        }
        assert_eq!(pivot_rows.len(), phi_m, "embedding must be injective");
        let square: Vec<Vec<Rat>> = pivot_rows
            .iter()
            .map(|&r| columns.iter().map(|c| c[r].clone()).collect())
            .collect();
        let inverse = invert(square);
        Descender { columns, pivot_rows, inverse }
    }

    fn descend(&self, a: &[Rat]) -> Option<Vec<Rat>> {
        let rhs: Vec<&Rat> = self.pivot_rows.iter().map(|&r| &a[r]).collect();
        let c: Vec<Rat> = self
            .inverse
            .iter()
            .map(|row| row.iter().zip(&rhs).fold(Rat::zero(), |acc, (x, y)| acc + x * *y))
            .collect();
        for (r, ar) in a.iter().enumerate() {
            let v = self
                .columns
                .iter()
                .zip(&c)
                .fold(Rat::zero(), |acc, (col, ci)| acc + &col[r] * ci);
            if &v != ar {
                return None;
            }
        }
        Some(c)
    }
}

fn pivot_cols(basis: &[Vec<Rat>]) -> Vec<usize> {
    basis
        .iter()
        .map(|b| b.iter().position(|x| !x.is_zero()).expect("nonzero basis row"))
        .collect()
}

fn invert(mut m: Vec<Vec<Rat>>) -> Vec<Vec<Rat>> {
    let n = m.len();
    let mut inv: Vec<Vec<Rat>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero()).expect("singular matrix");
        m.swap(col, piv);
        inv.swap(col, piv);
        let f = m[col][col].clone();
        for k in 0..n {
            m[col][k] /= &f;
            inv[col][k] /= &f;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let g = m[r][col].clone();
                for k in 0..n {
                    let a = &g * &m[col][k];
                    m[r][k] -= a;
                    let b = &g * &inv[col][k];
                    inv[r][k] -= b;
                }
            }
        }
    }
    inv
}

fn descender(n: u64, m: u64) -> Rc<Descender> {
    if let Some(d) = DESCENDERS.with(|c| c.borrow().get(&(n, m)).cloned()) {
        return d;
    }
    let d = Rc::new(Descender::new(n, m));
    DESCENDERS.with(|c| c.borrow_mut().insert((n, m), d.clone()));
    d
}

/// Try to write `a ∈ Q(ζ_n)` as an element of Q(ζ_{n/p}).
fn try_descend(a: &[Rat], n: u64, p: u64) -> Option<Vec<Rat>> {
    let m = n / p;
    if m % p == 0 {
        // Φ_n(x) = Φ_m(x^p): membership means only exponents divisible by p occur.
        if a.iter().enumerate().any(|(i, c)| i as u64 % p != 0 && !c.is_zero()) {
            return None;
        }
        Some(a.iter().step_by(p as usize).cloned().collect())
    } else {
        descender(n, m).descend(a)
    }
}

impl Cyc {
    /// Build from power-basis coordinates over Q(ζ_n) and minimize the conductor.
    fn canonical(mut n: u64, mut coeffs: Vec<Rat>) -> Cyc {
        debug_assert_eq!(coeffs.len() as u64, euler_phi(n));
        'outer: loop {
            if n == 1 {
                break;
            }
            for (p, _) in factorize(n) {
                if let Some(c) = try_descend(&coeffs, n, p) {
                    coeffs = c;
                    n /= p;
                    continue 'outer;
                }
            }
            break;
        }
        Cyc { conductor: n, coeffs }
    }

    /// Σ c_i ζ_n^i for arbitrary exponents (taken mod n).
    pub fn from_exponent_coeffs<'a, I>(n: u64, terms: I) -> Cyc
    where
        I: IntoIterator<Item = (i64, &'a Rat)>,
    {
        assert!(n >= 1, "conductor must be positive");
        let mut dense = vec![Rat::zero(); n as usize];
        for (i, c) in terms {
            dense[i.rem_euclid(n as i64) as usize] += c;
        }
        Cyc::canonical(n, reduce_mod_phi(dense, n))
    }

    pub fn zero() -> Cyc {
        Cyc { conductor: 1, coeffs: vec![Rat::zero()] }
    }

    pub fn one() -> Cyc {
        Cyc::from_rat(Rat::one())
    }

    pub fn from_rat(q: Rat) -> Cyc {
        Cyc { conductor: 1, coeffs: vec![q] }
    }

    pub fn from_int(n: i64) -> Cyc {
        Cyc::from_rat(rat_int(n))
    }

    /// ζ_n^i in canonical form.
    pub fn root_of_unity(n: u64, i: i64) -> Cyc {
        let one = Rat::one();
        Cyc::from_exponent_coeffs(n, [(i, &one)])
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    /// Power-basis coordinates over Q(ζ_conductor).
    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.conductor == 1 && self.coeffs[0].is_zero()
    }

    pub fn as_rational(&self) -> Option<Rat> {
        (self.conductor == 1).then(|| self.coeffs[0].clone())
    }

    /// Exponent/coefficient pairs of this value viewed inside Q(ζ_m).
    fn terms_in(&self, m: u64) -> impl Iterator<Item = (u64, &Rat)> {
        let step = m / self.conductor;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (i as u64 * step, c))
    }

    fn dense_in(&self, m: u64) -> Vec<Rat> {
        let mut dense = vec![Rat::zero(); m as usize];
        for (e, c) in self.terms_in(m) {
            dense[e as usize] += c;
        }
        dense
    }

    pub fn scale(&self, q: &Rat) -> Cyc {
        if q.is_zero() {
            return Cyc::zero();
        }
        Cyc { conductor: self.conductor, coeffs: self.coeffs.iter().map(|c| c * q).collect() }
    }

    fn combine(&self, other: &Cyc, negate: bool) -> Cyc {
        let n = lcm(self.conductor, other.conductor);
        let (a, b) = if self.conductor == n && other.conductor == n {
            (self.coeffs.clone(), other.coeffs.clone())
        } else {
            (reduce_mod_phi(self.dense_in(n), n), reduce_mod_phi(other.dense_in(n), n))
        };
        let coeffs = a
            .into_iter()
            .zip(b)
            .map(|(x, y)| if negate { x - y } else { x + y })
            .collect();
        Cyc::canonical(n, coeffs)
    }

    fn product(&self, other: &Cyc) -> Cyc {
        let n = lcm(self.conductor, other.conductor);
        let mut dense = vec![Rat::zero(); n as usize];
        for (ea, ca) in self.terms_in(n) {
            for (eb, cb) in other.terms_in(n) {
                dense[((ea + eb) % n) as usize] += ca * cb;
            }
        }
        Cyc::canonical(n, reduce_mod_phi(dense, n))
    }

    /// Galois conjugate under ζ ↦ ζ^j.
    pub fn galois(&self, j: i64) -> Result<Cyc, CycError> {
        let n = self.conductor;
        if n == 1 {
            return Ok(self.clone());
        }
        let jr = j.rem_euclid(n as i64) as u64;
        if gcd(jr, n) != 1 {
            return Err(CycError::NotGaloisAutomorphism { j, conductor: n });
        }
        let mut dense = vec![Rat::zero(); n as usize];
        for (e, c) in self.terms_in(n) {
            dense[((e * jr) % n) as usize] += c;
        }
        // Automorphisms preserve the minimal field, so no descent is needed.
        Ok(Cyc { conductor: n, coeffs: reduce_mod_phi(dense, n) })
    }

    /// Complex conjugate.
    pub fn conj(&self) -> Cyc {
        self.galois(-1).expect("-1 is always a unit")
    }

    /// Tr_{Q(ζ_m)/Q}(self).
    pub fn trace_to_q(&self, m: u64) -> Result<Rat, CycError> {
        self.trace_shifted(m, 0)
    }

    /// Tr_{Q(ζ_m)/Q}(self · ζ_m^shift), without forming the product.
    pub fn trace_shifted(&self, m: u64, shift: i64) -> Result<Rat, CycError> {
        if m == 0 || m % self.conductor != 0 {
            return Err(CycError::OutsideField { conductor: self.conductor, field: m });
        }
        Ok(self.terms_in(m).fold(Rat::zero(), |acc, (e, c)| {
            acc + c * rat_int(ramanujan_sum(m, e as i64 + shift))
        }))
    }

    /// Exponent/coefficient pairs of the canonical form, nonzero only.
    pub fn encoding_terms(&self) -> Vec<(u64, Rat)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i as u64, c.clone()))
            .collect()
    }
}

impl<'a> Add<&'a Cyc> for &'a Cyc {
    type Output = Cyc;
    fn add(self, rhs: &'a Cyc) -> Cyc {
        self.combine(rhs, false)
    }
}

impl<'a> Sub<&'a Cyc> for &'a Cyc {
    type Output = Cyc;
    fn sub(self, rhs: &'a Cyc) -> Cyc {
        self.combine(rhs, true)
    }
}

impl<'a> Mul<&'a Cyc> for &'a Cyc {
    type Output = Cyc;
    fn mul(self, rhs: &'a Cyc) -> Cyc {
        self.product(rhs)
    }
}

impl Add for Cyc {
    type Output = Cyc;
    fn add(self, rhs: Cyc) -> Cyc {
        self.combine(&rhs, false)
    }
}

impl Mul for Cyc {
    type Output = Cyc;
    fn mul(self, rhs: Cyc) -> Cyc {
        self.product(&rhs)
    }
}

impl Neg for &Cyc {
    type Output = Cyc;
    fn neg(self) -> Cyc {
        Cyc { conductor: self.conductor, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl std::iter::Sum for Cyc {
    fn sum<I: Iterator<Item = Cyc>>(iter: I) -> Cyc {
        iter.fold(Cyc::zero(), |a, b| a + b)
    }
}

impl From<i64> for Cyc {
    fn from(n: i64) -> Cyc {
        Cyc::from_int(n)
    }
}

impl fmt::Debug for Cyc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Cyc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(q) = self.as_rational() {
            return write!(f, "{q}");
        }
        let mut first = true;
        for (i, c) in self.encoding_terms() {
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match (i, a.is_one()) {
                (0, _) => write!(f, "{a}")?,
                (_, true) => write!(f, "E({})^{i}", self.conductor)?,
                (_, false) => write!(f, "{a}*E({})^{i}", self.conductor)?,
            }
        }
        Ok(())
    }
}

/// Parse `"num/den"`, `"num"`.
pub fn parse_rat(s: &str) -> Result<Rat, CycError> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = BigInt::from_str(n).map_err(|e| CycError::Encoding(format!("bad numerator {n:?}: {e}")))?;
    let d = BigInt::from_str(d).map_err(|e| CycError::Encoding(format!("bad denominator {d:?}: {e}")))?;
    if d.is_zero() {
        return Err(CycError::Encoding(format!("zero denominator in {s:?}")));
    }
    Ok(Rat::new(n, d))
}

fn format_rat(q: &Rat) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RatEnc {
    Int(i64),
    Str(String),
}

impl RatEnc {
    fn to_rat(&self) -> Result<Rat, CycError> {
        match self {
            RatEnc::Int(n) => Ok(rat_int(*n)),
            RatEnc::Str(s) => parse_rat(s),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CycObj {
    n: u64,
    coeffs: Vec<(i64, RatEnc)>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CycEnc {
    Int(i64),
    Str(String),
    Obj(CycObj),
}

impl Serialize for Cyc {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let enc = match self.as_rational() {
            Some(q) if q.is_integer() && q.numer().to_i64().is_some() => {
                CycEnc::Int(q.numer().to_i64().unwrap())
            }
            Some(q) => CycEnc::Str(format_rat(&q)),
            None => CycEnc::Obj(CycObj {
                n: self.conductor,
                coeffs: self
                    .encoding_terms()
                    .into_iter()
                    .map(|(i, c)| (i as i64, RatEnc::Str(format_rat(&c))))
                    .collect(),
            }),
        };
        enc.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cyc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Cyc, D::Error> {
        let enc = CycEnc::deserialize(d)?;
        let out = match enc {
            CycEnc::Int(n) => Ok(Cyc::from_int(n)),
            CycEnc::Str(s) => parse_rat(&s).map(Cyc::from_rat),
            CycEnc::Obj(obj) => {
                if obj.n == 0 {
                    Err(CycError::Encoding("conductor must be positive".into()))
                } else {
                    obj.coeffs
                        .iter()
                        .map(|(i, c)| c.to_rat().map(|q| (*i, q)))
                        .collect::<Result<Vec<_>, _>>()
                        .map(|terms| Cyc::from_exponent_coeffs(obj.n, terms.iter().map(|(i, q)| (*i, q))))
                }
            }
        };
        out.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::units_mod;
    use proptest::prelude::*;

    fn z(n: u64, i: i64) -> Cyc {
        Cyc::root_of_unity(n, i)
    }

    #[test]
    fn roots_of_unity_small_cases() {
        assert_eq!(z(1, 0), Cyc::one());
        assert_eq!(z(2, 1), Cyc::from_int(-1));
        assert_eq!(z(4, 2), Cyc::from_int(-1));
        assert_eq!(z(6, 2), z(3, 1));
        assert_eq!(z(6, 1).conductor(), 3);
        assert_eq!(z(12, 3), z(4, 1));
    }

    #[test]
    fn add_and_mul_examples() {
        assert_eq!(&z(3, 1) + &z(3, 2), Cyc::from_int(-1));
        assert_eq!(&z(8, 1) * &z(8, 1), z(4, 1));
        assert_eq!(&Cyc::zero() + &z(5, 1), z(5, 1));
        // i·√2 written two ways
        let a = &z(8, 1) + &z(8, 3);
        let b = &(&z(8, 1) + &z(8, 7)) * &z(4, 1);
        assert_eq!(a, b);
        assert_eq!(&a * &a, Cyc::from_int(-2));
    }

    #[test]
    fn galois_examples() {
        assert_eq!(z(8, 1).galois(3).unwrap(), z(8, 3));
        let a = &z(5, 1) + &z(5, 4);
        assert_eq!(a.galois(2).unwrap(), &z(5, 2) + &z(5, 3));
        let q = Cyc::from_rat(rat(7, 2));
        assert_eq!(q.galois(4).unwrap(), q);
        assert!(matches!(z(8, 1).galois(2), Err(CycError::NotGaloisAutomorphism { .. })));
    }

    #[test]
    fn trace_examples() {
        assert_eq!(z(4, 1).trace_to_q(4).unwrap(), rat_int(0));
        assert_eq!(z(5, 1).trace_to_q(5).unwrap(), rat_int(-1));
        assert_eq!(Cyc::one().trace_to_q(3).unwrap(), rat_int(2));
        assert!(matches!(z(5, 1).trace_to_q(6), Err(CycError::OutsideField { .. })));
    }

    #[test]
    fn as_rational_examples() {
        assert_eq!((&z(3, 1) + &z(3, 2)).as_rational(), Some(rat_int(-1)));
        assert_eq!(z(3, 1).as_rational(), None);
        assert_eq!(Cyc::from_rat(rat(7, 2)).as_rational(), Some(rat(7, 2)));
    }

    #[test]
    fn quadratic_gauss_sum_for_eleven() {
        // Σ over quadratic residues mod 11 equals (-1 + √-11)/2, so b + b̄ = -1 and b·b̄ = 3.
        let b: Cyc = [1, 3, 4, 5, 9].iter().map(|&r| z(11, r)).sum();
        assert_eq!(&b + &b.conj(), Cyc::from_int(-1));
        assert_eq!(&b * &b.conj(), Cyc::from_int(3));
    }

    #[test]
    fn encoding_round_trip_and_shorthand() {
        let v: Cyc = serde_json::from_str(r#"{"n": 5, "coeffs": [[2, "-1"], [3, -1]]}"#).unwrap();
        assert_eq!(v, &Cyc::one() + &(&z(5, 1) + &z(5, 4)));
        let back: Cyc = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
        let h: Cyc = serde_json::from_str(r#""-3/4""#).unwrap();
        assert_eq!(h, Cyc::from_rat(rat(-3, 4)));
        let i: Cyc = serde_json::from_str("5").unwrap();
        assert_eq!(i, Cyc::from_int(5));
        assert!(serde_json::from_str::<Cyc>(r#""1/0""#).is_err());
    }

    /// Independent reference: multiply in Q[x]/(x^n - 1), then map the result
    /// through the canonicalizing constructor.
    fn naive_mul(n: u64, a: &[(i64, i64)], b: &[(i64, i64)]) -> Cyc {
        let mut dense = vec![0i64; n as usize];
        for &(ea, ca) in a {
            for &(eb, cb) in b {
                dense[(ea + eb).rem_euclid(n as i64) as usize] += ca * cb;
            }
        }
        let coeffs: Vec<Rat> = dense.iter().map(|&c| rat_int(c)).collect();
        Cyc::from_exponent_coeffs(n, coeffs.iter().enumerate().map(|(i, c)| (i as i64, c)))
    }

    fn build(n: u64, terms: &[(i64, i64)]) -> Cyc {
        let coeffs: Vec<(i64, Rat)> = terms.iter().map(|&(e, c)| (e, rat_int(c))).collect();
        Cyc::from_exponent_coeffs(n, coeffs.iter().map(|(e, c)| (*e, c)))
    }

    fn explicit_trace(a: &Cyc, m: u64) -> Rat {
        units_mod(m)
            .into_iter()
            .map(|j| a.galois(j as i64).unwrap())
            .sum::<Cyc>()
            .as_rational()
            .expect("trace is rational")
    }

    fn arb_elem() -> impl Strategy<Value = (u64, Vec<(i64, i64)>)> {
        (1u64..=30).prop_flat_map(|n| {
            (Just(n), prop::collection::vec((0..n as i64, -4i64..=4), 0..6))
        })
    }

    /// Conductors dividing 120, so that mixed-conductor products stay small.
    fn arb_small_elem() -> impl Strategy<Value = (u64, Vec<(i64, i64)>)> {
        prop::sample::select(vec![1u64, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 24]).prop_flat_map(|n| {
            (Just(n), prop::collection::vec((0..n as i64, -4i64..=4), 0..5))
        })
    }

    proptest! {
        #[test]
        fn mul_agrees_with_polynomial_oracle((n, a) in arb_elem(), b in prop::collection::vec((0i64..60, -4i64..=4), 0..6)) {
            let b: Vec<(i64, i64)> = b.into_iter().map(|(e, c)| (e % n as i64, c)).collect();
            prop_assert_eq!(&build(n, &a) * &build(n, &b), naive_mul(n, &a, &b));
        }

        #[test]
        fn mul_commutative_associative((n, a) in arb_small_elem(), (m, b) in arb_small_elem(), (l, c) in arb_small_elem()) {
            let (x, y, w) = (build(n, &a), build(m, &b), build(l, &c));
            prop_assert_eq!(&x * &y, &y * &x);
            prop_assert_eq!(&(&x * &y) * &w, &x * &(&y * &w));
            prop_assert_eq!(&(&x + &y) * &w, &(&x * &w) + &(&y * &w));
        }

        #[test]
        fn trace_matches_explicit_galois_sum((n, a) in arb_elem(), mult in 1u64..4) {
            let x = build(n, &a);
            let m = x.conductor() * mult;
            let t = x.trace_to_q(m).unwrap();
            prop_assert_eq!(&t, &explicit_trace(&x, m));
            // Algebraic integers have integral trace.
            prop_assert!(t.is_integer());
        }

        #[test]
        fn trace_is_galois_invariant((n, a) in arb_elem(), j in 1i64..60) {
            let x = build(n, &a);
            let m = x.conductor();
            prop_assume!(gcd(j as u64, m) == 1);
            prop_assert_eq!(x.galois(j).unwrap().trace_to_q(m).unwrap(), x.trace_to_q(m).unwrap());
        }

        #[test]
        fn rational_trace_is_degree_times_value(q in -50i64..50, m in 1u64..40) {
            let x = Cyc::from_int(q);
            prop_assert_eq!(x.trace_to_q(m).unwrap(), rat_int(q * euler_phi(m) as i64));
        }

        #[test]
        fn shifted_trace_matches_product((n, a) in arb_elem(), shift in -40i64..40) {
            let x = build(n, &a);
            let m = x.conductor() * 2;
            let direct = (&x * &Cyc::root_of_unity(m, shift)).trace_to_q(m).unwrap();
            prop_assert_eq!(x.trace_shifted(m, shift).unwrap(), direct);
        }
    }
}
