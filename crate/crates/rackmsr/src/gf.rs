//! Finite fields GF(p^m) with log/antilog tables.
//!
//! Elements are stored as discrete logarithms to the base of a fixed
//! primitive element ξ, so multiplication is index addition and addition
//! goes through a Zech logarithm table.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest field order the tables are built for.
pub const MAX_ORDER: u64 = 1 << 20;

const NO_LOG: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("characteristic {0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {0} exceeds the table cap {MAX_ORDER}")]
    TooLarge(u64),
    #[error("modulus has degree {got}, expected {want}")]
    ModulusDegree { got: usize, want: usize },
    #[error("modulus coefficient {0} is not reduced mod p")]
    ModulusCoefficient(u32),
    #[error("modulus is not monic")]
    NotMonic,
    #[error("modulus is not irreducible over GF({0})")]
    NotIrreducible(u32),
    #[error("modulus is irreducible but not primitive")]
    NotPrimitive,
    #[error("no primitive polynomial of degree {m} over GF({p})")]
    NoPrimitive { p: u32, m: u32 },
    #[error("inverse of zero")]
    InverseOfZero,
    #[error("{u} does not divide q-1 = {qm1}")]
    NotDivisor { u: u64, qm1: u64 },
    #[error("element index {0} out of range")]
    BadIndex(u32),
}

/// A field element: `0` is zero, `i + 1` is ξ^i.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Felt(u32);

impl Felt {
    pub const ZERO: Felt = Felt(0);
    pub const ONE: Felt = Felt(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Discrete log of a nonzero element.
    pub fn log(self) -> Option<u32> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0 - 1)
        }
    }

    pub fn raw(self) -> u32 {
        self.0
    }
}

impl fmt::Debug for Felt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.log() {
            None => write!(f, "0"),
            Some(i) => write!(f, "ξ^{i}"),
        }
    }
}

/// Serializable description of a field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub m: u32,
    /// Coefficients low to high, monic, length m+1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<u32>>,
}

struct Tables {
    p: u32,
    m: u32,
    q: u32,
    modulus: Vec<u32>,
    /// exp[i] = vector form of ξ^i
    exp: Vec<u32>,
    /// log[v] = discrete log of vector form v (NO_LOG for v = 0)
    log: Vec<u32>,
    /// zech[d] = log(1 + ξ^d), NO_LOG when the sum is zero
    zech: Vec<u32>,
    neg_one: u32,
}

/// Shared, immutable field handle. Cloning is cheap.
#[derive(Clone)]
pub struct Field {
    t: Arc<Tables>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{}) mod {:?}", self.t.p, self.t.m, self.t.modulus)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.t, &other.t) || (self.t.p == other.t.p && self.t.modulus == other.t.modulus)
    }
}

impl Eq for Field {}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits `q` as `p^m` when it is a prime power.
pub fn prime_power(q: u64) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while !q.is_multiple_of(p) {
        p += 1;
    }
    let (mut r, mut m) = (q, 0);
    while r % p == 0 {
        r /= p;
        m += 1;
    }
    (r == 1 && is_prime(p)).then_some((p as u32, m))
}

fn to_digits(mut v: u32, p: u32, m: u32) -> Vec<u32> {
    (0..m)
        .map(|_| {
            let d = v % p;
            v /= p;
            d
        })
        .collect()
}

fn from_digits(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// Multiplicative order of x modulo `modulus`, walking at most `limit` steps.
/// Returns the sequence of powers visited when the order is exactly `limit`.
fn power_cycle(p: u32, modulus: &[u32], limit: u32) -> Option<Vec<u32>> {
    let m = modulus.len() - 1;
    let mut cur = vec![0u32; m];
    cur[0] = 1;
    let one = from_digits(&cur, p);
    let mut seq = Vec::with_capacity(limit as usize);
    for step in 0..limit {
        let v = from_digits(&cur, p);
        if step > 0 && (v == one || v == 0) {
            return None;
        }
        seq.push(v);
        // multiply by x and reduce
        let top = cur[m - 1];
        for i in (1..m).rev() {
            cur[i] = cur[i - 1];
        }
        cur[0] = 0;
        if top != 0 {
            for (i, c) in cur.iter_mut().enumerate() {
                *c = (*c + (p - top) * modulus[i] % p) % p;
            }
        }
    }
    (from_digits(&cur, p) == one).then_some(seq)
}

fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let inv_lead = (1..p).find(|&x| x * b[db] % p == 1).unwrap();
    while r.len() > db {
        let lead = *r.last().unwrap();
        if lead != 0 {
            let f = lead * inv_lead % p;
            let shift = r.len() - 1 - db;
            for (i, &c) in b.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - f * c % p) % p;
            }
        }
        r.pop();
    }
    r
}

fn is_irreducible(p: u32, modulus: &[u32]) -> bool {
    let m = modulus.len() - 1;
    for deg in 1..=m / 2 {
        let count = (p as u64).pow(deg as u32);
        for low in 0..count {
            let mut div = to_digits(low as u32, p, deg as u32);
            div.push(1);
            if poly_rem(modulus, &div, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

impl Field {
    /// Builds GF(p^m). Without a modulus, the smallest primitive polynomial is
    /// used (lower coefficients compared as the integer Σ c_i p^i); for m = 1
    /// the modulus is x − g with g the smallest primitive root.
    pub fn new(p: u32, m: u32, modulus: Option<&[u32]>) -> Result<Field, GfError> {
        if !is_prime(p as u64) {
            return Err(GfError::NotPrime(p));
        }
        if m == 0 {
            return Err(GfError::ZeroDegree);
        }
        let q = (p as u64).checked_pow(m).unwrap_or(u64::MAX);
        if q > MAX_ORDER {
            return Err(GfError::TooLarge(q));
        }
        let q = q as u32;
        let (modulus, exp) = match modulus {
            Some(md) => {
                if md.len() != m as usize + 1 {
                    return Err(GfError::ModulusDegree { got: md.len().saturating_sub(1), want: m as usize });
                }
                if let Some(&c) = md.iter().find(|&&c| c >= p) {
                    return Err(GfError::ModulusCoefficient(c));
                }
                if md[m as usize] != 1 {
                    return Err(GfError::NotMonic);
                }
                match power_cycle(p, md, q - 1) {
                    Some(seq) => (md.to_vec(), seq),
                    None if is_irreducible(p, md) => return Err(GfError::NotPrimitive),
                    None => return Err(GfError::NotIrreducible(p)),
                }
            }
            None if m == 1 => {
                let g = (1..p)
                    .find(|&g| {
                        let mut x = 1u64;
                        (1..p - 1).all(|_| {
                            x = x * g as u64 % p as u64;
                            x != 1
                        })
                    })
                    .unwrap_or(1);
                let md = vec![(p - g) % p, 1];
                let seq = power_cycle(p, &md, q - 1).ok_or(GfError::NoPrimitive { p, m })?;
                (md, seq)
            }
            None => {
                let mut found = None;
                for low in 0..q {
                    let mut md = to_digits(low, p, m);
                    md.push(1);
                    if md[0] == 0 {
                        continue;
                    }
                    if let Some(seq) = power_cycle(p, &md, q - 1) {
                        found = Some((md, seq));
                        break;
                    }
                }
                found.ok_or(GfError::NoPrimitive { p, m })?
            }
        };
        let n = q - 1;
        let mut log = vec![NO_LOG; q as usize];
        for (i, &v) in exp.iter().enumerate() {
            log[v as usize] = i as u32;
        }
        let zech = (0..n)
            .map(|d| {
                let mut digits = to_digits(exp[d as usize], p, m);
                digits[0] = (digits[0] + 1) % p;
                log[from_digits(&digits, p) as usize]
            })
            .collect();
        let neg_one = if p == 2 { 0 } else { n / 2 };
        Ok(Field { t: Arc::new(Tables { p, m, q, modulus, exp, log, zech, neg_one }) })
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<Field, GfError> {
        Field::new(spec.p, spec.m, spec.modulus.as_deref())
    }

    pub fn spec(&self) -> FieldSpec {
        FieldSpec { p: self.t.p, m: self.t.m, modulus: Some(self.t.modulus.clone()) }
    }

    pub fn p(&self) -> u32 {
        self.t.p
    }

    pub fn m(&self) -> u32 {
        self.t.m
    }

    pub fn q(&self) -> u32 {
        self.t.q
    }

    pub fn modulus(&self) -> &[u32] {
        &self.t.modulus
    }

    pub fn zero(&self) -> Felt {
        Felt::ZERO
    }

    pub fn one(&self) -> Felt {
        Felt::ONE
    }

    /// The primitive element ξ.
    pub fn xi(&self) -> Felt {
        self.xi_pow(1)
    }

    /// ξ^e for any integer e.
    pub fn xi_pow(&self, e: i64) -> Felt {
        let n = (self.t.q - 1) as i64;
        Felt(e.rem_euclid(n) as u32 + 1)
    }

    /// Polynomial-basis integer Σ c_i p^i of an element.
    pub fn index(&self, a: Felt) -> u32 {
        match a.log() {
            None => 0,
            Some(i) => self.t.exp[i as usize],
        }
    }

    pub fn from_index(&self, v: u32) -> Result<Felt, GfError> {
        if v >= self.t.q {
            return Err(GfError::BadIndex(v));
        }
        Ok(match self.t.log[v as usize] {
            NO_LOG => Felt::ZERO,
            i => Felt(i + 1),
        })
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, v: i64) -> Felt {
        let p = self.t.p as i64;
        self.from_index(v.rem_euclid(p) as u32).expect("prime subfield element")
    }

    pub fn add(&self, a: Felt, b: Felt) -> Felt {
        if a.0 == 0 {
            return b;
        }
        if b.0 == 0 {
            return a;
        }
        let n = self.t.q - 1;
        let (la, lb) = (a.0 - 1, b.0 - 1);
        let d = if lb >= la { lb - la } else { lb + n - la };
        match self.t.zech[d as usize] {
            NO_LOG => Felt::ZERO,
            z => Felt(((la as u64 + z as u64) % n as u64) as u32 + 1),
        }
    }

    pub fn neg(&self, a: Felt) -> Felt {
        self.mul(a, Felt(self.t.neg_one + 1))
    }

    pub fn sub(&self, a: Felt, b: Felt) -> Felt {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Felt, b: Felt) -> Felt {
        if a.0 == 0 || b.0 == 0 {
            return Felt::ZERO;
        }
        let n = self.t.q - 1;
        let s = (a.0 - 1) as u64 + (b.0 - 1) as u64;
        Felt((s % n as u64) as u32 + 1)
    }

    pub fn inv(&self, a: Felt) -> Result<Felt, GfError> {
        match a.log() {
            None => Err(GfError::InverseOfZero),
            Some(i) => Ok(self.xi_pow(-(i as i64))),
        }
    }

    pub fn div(&self, a: Felt, b: Felt) -> Result<Felt, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// a^e; negative exponents invert first.
    pub fn pow(&self, a: Felt, e: i64) -> Result<Felt, GfError> {
        match a.log() {
            None if e > 0 => Ok(Felt::ZERO),
            None if e == 0 => Ok(Felt::ONE),
            None => Err(GfError::InverseOfZero),
            Some(i) => {
                let n = (self.t.q - 1) as i128;
                Ok(self.xi_pow(((i as i128 * e as i128).rem_euclid(n)) as i64))
            }
        }
    }

    /// Multiplicative order of a nonzero element.
    pub fn order(&self, a: Felt) -> Option<u64> {
        let i = a.log()? as u64;
        let n = (self.t.q - 1) as u64;
        Some(n / gcd(i, n))
    }

    /// θ = ξ^((q−1)/u), an element of order exactly u.
    pub fn element_of_order(&self, u: u64) -> Result<Felt, GfError> {
        let n = (self.t.q - 1) as u64;
        if u == 0 || !n.is_multiple_of(u) {
            return Err(GfError::NotDivisor { u, qm1: n });
        }
        Ok(self.xi_pow((n / u) as i64))
    }

    pub fn sum<I: IntoIterator<Item = Felt>>(&self, it: I) -> Felt {
        it.into_iter().fold(Felt::ZERO, |acc, x| self.add(acc, x))
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f27() -> Field {
        Field::new(3, 3, Some(&[1, 2, 0, 1])).unwrap()
    }

    /// Polynomial-basis multiplication, independent of the tables.
    fn slow_mul(f: &Field, a: u32, b: u32) -> u32 {
        let (p, m) = (f.p(), f.m());
        let (da, db) = (to_digits(a, p, m), to_digits(b, p, m));
        let mut prod = vec![0u32; 2 * m as usize - 1];
        for i in 0..m as usize {
            for j in 0..m as usize {
                prod[i + j] = (prod[i + j] + da[i] * db[j]) % p;
            }
        }
        let mut r = poly_rem(&prod, f.modulus(), p);
        r.resize(m as usize, 0);
        from_digits(&r, p)
    }

    fn slow_add(f: &Field, a: u32, b: u32) -> u32 {
        let (p, m) = (f.p(), f.m());
        let s: Vec<u32> = to_digits(a, p, m).iter().zip(to_digits(b, p, m)).map(|(x, y)| (x + y) % p).collect();
        from_digits(&s, p)
    }

    #[test]
    fn f27_from_cubic_modulus() {
        let f = f27();
        assert_eq!(f.q(), 27);
        assert_eq!(f.order(f.xi()), Some(26));
        assert_eq!(f.mul(f.xi(), f.xi_pow(25)), Felt::ONE);
        // ξ³ = −2ξ − 1 = ξ + 2
        assert_eq!(f.index(f.xi_pow(3)), 2 + 3);
    }

    #[test]
    fn default_modulus_for_f27_is_the_same_polynomial() {
        let f = Field::new(3, 3, None).unwrap();
        assert_eq!(f.modulus(), &[1, 2, 0, 1]);
    }

    #[test]
    fn tiny_fields() {
        let f2 = Field::new(2, 1, None).unwrap();
        assert_eq!(f2.xi(), Felt::ONE);
        assert_eq!(f2.order(f2.xi()), Some(1));
        assert_eq!(f2.add(Felt::ONE, Felt::ONE), Felt::ZERO);
        let f7 = Field::new(7, 1, None).unwrap();
        assert_eq!(f7.index(f7.xi()), 3);
    }

    #[test]
    fn f125_default_is_primitive() {
        let f = Field::new(5, 3, None).unwrap();
        let xi = f.xi();
        assert_eq!(f.pow(xi, 124).unwrap(), Felt::ONE);
        for d in [1, 2, 4, 31, 62] {
            assert_ne!(f.pow(xi, d).unwrap(), Felt::ONE);
        }
        let theta = f.element_of_order(2).unwrap();
        assert_eq!(theta, f.xi_pow(62));
        assert_ne!(theta, Felt::ONE);
        assert_eq!(f.mul(theta, theta), Felt::ONE);
    }

    #[test]
    fn bad_moduli_are_named() {
        // x^3 + 1 = (x+1)(x^2-x+1)
        assert_eq!(Field::new(3, 3, Some(&[1, 0, 0, 1])).unwrap_err(), GfError::NotIrreducible(3));
        // x^2 + 1 over GF(3) is irreducible, but x has order 4 < 8
        assert_eq!(Field::new(3, 2, Some(&[1, 0, 1])).unwrap_err(), GfError::NotPrimitive);
        assert_eq!(Field::new(4, 1, None).unwrap_err(), GfError::NotPrime(4));
        assert!(matches!(Field::new(2, 21, None), Err(GfError::TooLarge(_))));
        assert!(matches!(Field::new(3, 3, Some(&[1, 2, 1])), Err(GfError::ModulusDegree { .. })));
    }

    #[test]
    fn minus_one_has_order_two() {
        let f = f27();
        let m1 = f.neg(Felt::ONE);
        assert_eq!(m1, f.element_of_order(2).unwrap());
        assert_eq!(f.mul(m1, m1), Felt::ONE);
        assert_eq!(f.index(m1), 2);
        assert_eq!(f.element_of_order(1).unwrap(), Felt::ONE);
        assert!(f.element_of_order(4).is_err());
    }

    #[test]
    fn tables_agree_with_polynomial_arithmetic() {
        for (p, m) in [(2, 4), (3, 3), (5, 2), (7, 1), (2, 1)] {
            let f = Field::new(p, m, None).unwrap();
            for a in 0..f.q() {
                for b in 0..f.q() {
                    let (x, y) = (f.from_index(a).unwrap(), f.from_index(b).unwrap());
                    assert_eq!(f.index(f.mul(x, y)), slow_mul(&f, a, b));
                    assert_eq!(f.index(f.add(x, y)), slow_add(&f, a, b));
                }
            }
        }
    }

    #[test]
    fn inverse_matches_brute_force() {
        let f = Field::new(2, 8, None).unwrap();
        for a in 1..f.q() {
            let x = f.from_index(a).unwrap();
            let brute = (1..f.q()).find(|&b| slow_mul(&f, a, b) == 1).unwrap();
            assert_eq!(f.index(f.inv(x).unwrap()), brute);
        }
        assert_eq!(f.inv(Felt::ZERO), Err(GfError::InverseOfZero));
    }

    #[test]
    fn negative_powers() {
        let f = f27();
        let x = f.xi_pow(5);
        assert_eq!(f.pow(x, -1).unwrap(), f.inv(x).unwrap());
        assert_eq!(f.mul(f.pow(x, -3).unwrap(), f.pow(x, 3).unwrap()), Felt::ONE);
        assert_eq!(f.pow(Felt::ZERO, 0).unwrap(), Felt::ONE);
        assert!(f.pow(Felt::ZERO, -2).is_err());
    }

    #[test]
    fn prime_power_split() {
        assert_eq!(prime_power(27), Some((3, 3)));
        assert_eq!(prime_power(12), None);
        assert_eq!(prime_power(2), Some((2, 1)));
    }
}
