//! Finite fields `F_{p^m}` with an explicit irreducible modulus.
//!
//! Elements are dense coefficient vectors over `Z/p`, packed into a single
//! integer code `c_0 + c_1 p + ... + c_{m-1} p^{m-1}`. All arithmetic goes
//! through a [`Field`] context; small fields precompute their addition and
//! multiplication tables.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest field order for which full operation tables are built.
const TABLE_LIMIT: u32 = 256;

/// Largest extension field `stable_lines` is willing to scan exhaustively.
pub const MAX_SCAN_ORDER: u64 = 1 << 16;

/// Prime, degree, and monic modulus (coefficients low to high, length `m + 1`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub p: u32,
    pub m: u32,
    pub modulus: Vec<u32>,
}

impl FieldSpec {
    pub fn new(p: u32, m: u32, modulus: Vec<u32>) -> Result<Self> {
        let spec = FieldSpec { p, m, modulus };
        spec.validate()?;
        Ok(spec)
    }

    /// Canonical field of order `p^m`: Conway polynomial when tabulated,
    /// otherwise the lexicographically first monic irreducible.
    pub fn standard(p: u32, m: u32) -> Result<Self> {
        if let Some(modulus) = conway(p, m) {
            return FieldSpec::new(p, m, modulus.to_vec());
        }
        if !is_prime(p) || m == 0 {
            return Err(Error::InvalidField(format!("p={p}, m={m}")));
        }
        let modulus = first_irreducible(p, m as usize)
            .ok_or_else(|| Error::InvalidField(format!("no irreducible of degree {m}")))?;
        FieldSpec::new(p, m, modulus)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.p) {
            return Err(Error::InvalidField(format!("{} is not prime", self.p)));
        }
        if self.m == 0 {
            return Err(Error::InvalidField("degree must be at least 1".into()));
        }
        if self.modulus.len() != self.m as usize + 1 {
            return Err(Error::InvalidField(format!(
                "modulus has {} coefficients, expected {}",
                self.modulus.len(),
                self.m + 1
            )));
        }
        if self.modulus.iter().any(|&c| c >= self.p) {
            return Err(Error::InvalidField("modulus coefficients not reduced mod p".into()));
        }
        if self.modulus[self.m as usize] != 1 {
            return Err(Error::InvalidField("modulus is not monic".into()));
        }
        if !is_irreducible(self.p, &self.modulus) {
            return Err(Error::InvalidField("modulus is reducible".into()));
        }
        Ok(())
    }

    pub fn order(&self) -> u64 {
        (self.p as u64).pow(self.m)
    }
}

/// Conway polynomials for `p in {2,3,5}`, `m <= 4`.
fn conway(p: u32, m: u32) -> Option<&'static [u32]> {
    Some(match (p, m) {
        (2, 1) => &[1, 1],
        (2, 2) => &[1, 1, 1],
        (2, 3) => &[1, 1, 0, 1],
        (2, 4) => &[1, 1, 0, 0, 1],
        (3, 1) => &[1, 1],
        (3, 2) => &[2, 2, 1],
        (3, 3) => &[1, 2, 0, 1],
        (3, 4) => &[2, 0, 0, 2, 1],
        (5, 1) => &[3, 1],
        (5, 2) => &[2, 4, 1],
        (5, 3) => &[3, 3, 0, 1],
        (5, 4) => &[2, 4, 4, 0, 1],
        _ => return None,
    })
}

pub fn is_prime(n: u32) -> bool {
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

// ---------------------------------------------------------------------------
// Polynomials over F_p (coefficients low to high)
// ---------------------------------------------------------------------------

fn trim(poly: &mut Vec<u32>) {
    while poly.last() == Some(&0) {
        poly.pop();
    }
}

/// Remainder of `a` modulo the monic-or-not `b` over F_p.
fn poly_rem(p: u32, a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut r = a.to_vec();
    trim(&mut r);
    let mut b = b.to_vec();
    trim(&mut b);
    let db = b.len() - 1;
    let lead_inv = inv_mod_p(b[db], p);
    while r.len() > db {
        let dr = r.len() - 1;
        let c = (r[dr] as u64 * lead_inv as u64 % p as u64) as u32;
        for (k, &bk) in b.iter().enumerate() {
            let idx = dr - db + k;
            r[idx] = ((r[idx] as u64 + (p - c) as u64 * bk as u64) % p as u64) as u32;
        }
        trim(&mut r);
    }
    r
}

fn inv_mod_p(a: u32, p: u32) -> u32 {
    let mut result = 1u64;
    let mut base = a as u64 % p as u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    result as u32
}

/// Trial division by every monic polynomial of degree `1..=deg/2`.
pub fn is_irreducible(p: u32, poly: &[u32]) -> bool {
    let mut f = poly.to_vec();
    trim(&mut f);
    if f.len() < 2 {
        return false;
    }
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for code in 0..count {
            let mut g = Vec::with_capacity(d + 1);
            let mut c = code;
            for _ in 0..d {
                g.push((c % p as u64) as u32);
                c /= p as u64;
            }
            g.push(1);
            if poly_rem(p, &f, &g).is_empty() {
                return false;
            }
        }
    }
    true
}

fn first_irreducible(p: u32, deg: usize) -> Option<Vec<u32>> {
    let count = (p as u64).checked_pow(deg as u32)?;
    for code in 0..count {
        let mut g = Vec::with_capacity(deg + 1);
        let mut c = code;
        for _ in 0..deg {
            g.push((c % p as u64) as u32);
            c /= p as u64;
        }
        g.push(1);
        if g[0] != 0 && is_irreducible(p, &g) {
            return Some(g);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Field context and elements
// ---------------------------------------------------------------------------

/// An element of a finite field, stored as its packed coefficient code.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FieldElement(pub(crate) u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn code(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Arithmetic context for `F_{p^m}`.
pub struct Field {
    spec: FieldSpec,
    q: u32,
    add_table: Option<Vec<u32>>,
    mul_table: Option<Vec<u32>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{} {:?}", self.spec.p, self.spec.m, self.spec.modulus)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Eq for Field {}

impl Field {
    pub fn new(spec: FieldSpec) -> Result<Arc<Field>> {
        spec.validate()?;
        let q64 = spec.order();
        if q64 > u32::MAX as u64 / 2 {
            return Err(Error::InvalidField("field too large".into()));
        }
        let mut field = Field { q: q64 as u32, spec, add_table: None, mul_table: None };
        if field.q <= TABLE_LIMIT {
            let q = field.q as usize;
            let mut add = vec![0; q * q];
            let mut mul = vec![0; q * q];
            for a in 0..q {
                for b in 0..q {
                    add[a * q + b] = field.add_slow(a as u32, b as u32);
                    mul[a * q + b] = field.mul_slow(a as u32, b as u32);
                }
            }
            field.add_table = Some(add);
            field.mul_table = Some(mul);
        }
        Ok(Arc::new(field))
    }

    pub fn standard(p: u32, m: u32) -> Result<Arc<Field>> {
        Field::new(FieldSpec::standard(p, m)?)
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn p(&self) -> u32 {
        self.spec.p
    }

    pub fn degree(&self) -> u32 {
        self.spec.m
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::ZERO
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::ONE
    }

    /// Rejects codes that cannot belong to this field.
    pub fn check(&self, x: FieldElement) -> Result<FieldElement> {
        if x.0 < self.q {
            Ok(x)
        } else {
            Err(Error::SpecMismatch)
        }
    }

    pub fn from_code(&self, code: u32) -> Result<FieldElement> {
        self.check(FieldElement(code))
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<FieldElement> {
        if coeffs.len() > self.spec.m as usize {
            return Err(Error::SpecMismatch);
        }
        let p = self.spec.p;
        let mut code = 0u32;
        for &c in coeffs.iter().rev() {
            if c >= p {
                return Err(Error::Parse(format!("coefficient {c} not reduced mod {p}")));
            }
            code = code * p + c;
        }
        Ok(FieldElement(code))
    }

    pub fn coeffs(&self, x: FieldElement) -> Vec<u32> {
        let p = self.spec.p;
        let mut c = x.0;
        (0..self.spec.m)
            .map(|_| {
                let d = c % p;
                c /= p;
                d
            })
            .collect()
    }

    /// Image of an integer in the prime field.
    pub fn from_int(&self, n: i64) -> FieldElement {
        FieldElement(n.rem_euclid(self.spec.p as i64) as u32)
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.q).map(FieldElement)
    }

    fn add_slow(&self, a: u32, b: u32) -> u32 {
        let p = self.spec.p;
        let (mut a, mut b) = (a, b);
        let mut out = 0;
        let mut scale = 1;
        for _ in 0..self.spec.m {
            out += ((a % p + b % p) % p) * scale;
            a /= p;
            b /= p;
            scale *= p;
        }
        out
    }

    fn mul_slow(&self, a: u32, b: u32) -> u32 {
        let p = self.spec.p as u64;
        let m = self.spec.m as usize;
        let ca = self.coeffs(FieldElement(a));
        let cb = self.coeffs(FieldElement(b));
        let mut prod = vec![0u64; 2 * m];
        for (i, &x) in ca.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in cb.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p;
            }
        }
        // reduce by the monic modulus from the top down
        for k in (m..2 * m).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            prod[k] = 0;
            for (j, &mj) in self.spec.modulus[..m].iter().enumerate() {
                let idx = k - m + j;
                prod[idx] = (prod[idx] + (p - c) * mj as u64) % p;
            }
        }
        let mut code = 0u64;
        for &c in prod[..m].iter().rev() {
            code = code * p + c;
        }
        code as u32
    }

    #[inline]
    pub fn add(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        match &self.add_table {
            Some(t) => FieldElement(t[(x.0 * self.q + y.0) as usize]),
            None => FieldElement(self.add_slow(x.0, y.0)),
        }
    }

    pub fn neg(&self, x: FieldElement) -> FieldElement {
        let p = self.spec.p;
        let mut c = x.0;
        let mut out = 0;
        let mut scale = 1;
        for _ in 0..self.spec.m {
            out += ((p - c % p) % p) * scale;
            c /= p;
            scale *= p;
        }
        FieldElement(out)
    }

    #[inline]
    pub fn sub(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        self.add(x, self.neg(y))
    }

    #[inline]
    pub fn mul(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        if x.0 == 0 || y.0 == 0 {
            return FieldElement::ZERO;
        }
        match &self.mul_table {
            Some(t) => FieldElement(t[(x.0 * self.q + y.0) as usize]),
            None => FieldElement(self.mul_slow(x.0, y.0)),
        }
    }

    pub fn pow(&self, x: FieldElement, mut e: u64) -> FieldElement {
        let mut result = FieldElement::ONE;
        let mut base = x;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        result
    }

    pub fn inv(&self, x: FieldElement) -> Result<FieldElement> {
        if x.is_zero() {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(x, self.q as u64 - 2))
    }

    pub fn div(&self, x: FieldElement, y: FieldElement) -> Result<FieldElement> {
        Ok(self.mul(x, self.inv(y)?))
    }

    /// `x -> x^p`.
    pub fn frobenius(&self, x: FieldElement) -> FieldElement {
        self.pow(x, self.spec.p as u64)
    }

    /// The generator `t` of the extension over the prime field.
    pub fn generator(&self) -> FieldElement {
        if self.spec.m == 1 {
            // F_p: the class of t is the root of the linear modulus
            self.neg(FieldElement(self.spec.modulus[0]))
        } else {
            FieldElement(self.spec.p)
        }
    }

    /// Field of degree `e` over this one, with an embedding of this field.
    pub fn extension(&self, e: u32) -> Result<Embedding> {
        if e == 0 {
            return Err(Error::InvalidField("extension degree must be positive".into()));
        }
        let big_spec = FieldSpec::standard(self.spec.p, self.spec.m * e)?;
        let big = Field::new(big_spec)?;
        if e == 1 && *big == *self {
            let map = self.elements().collect();
            return Ok(Embedding { big, map });
        }
        // a root of our modulus inside the big field fixes the embedding
        let root = big
            .elements()
            .find(|&r| {
                let mut acc = FieldElement::ZERO;
                for &c in self.spec.modulus.iter().rev() {
                    acc = big.add(big.mul(acc, r), big.from_int(c as i64));
                }
                acc.is_zero()
            })
            .ok_or_else(|| Error::InvalidField("modulus has no root in the extension".into()))?;
        let map = self
            .elements()
            .map(|x| {
                let mut acc = FieldElement::ZERO;
                for &c in self.coeffs(x).iter().rev() {
                    acc = big.add(big.mul(acc, root), big.from_int(c as i64));
                }
                acc
            })
            .collect();
        Ok(Embedding { big, map })
    }

    /// Human-readable rendering in terms of the generator `t`.
    pub fn format(&self, x: FieldElement) -> String {
        if self.spec.m == 1 {
            return x.0.to_string();
        }
        let parts: Vec<String> = self
            .coeffs(x)
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(k, &c)| match (k, c) {
                (0, c) => c.to_string(),
                (1, 1) => "t".into(),
                (1, c) => format!("{c}t"),
                (k, 1) => format!("t^{k}"),
                (k, c) => format!("{c}t^{k}"),
            })
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }
}

/// An embedding of a small field into an extension field.
pub struct Embedding {
    pub big: Arc<Field>,
    map: Vec<FieldElement>,
}

impl Embedding {
    pub fn apply(&self, x: FieldElement) -> FieldElement {
        self.map[x.0 as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f4() -> Arc<Field> {
        Field::new(FieldSpec::new(2, 2, vec![1, 1, 1]).unwrap()).unwrap()
    }

    #[test]
    fn prime_field_arithmetic() {
        let f3 = Field::standard(3, 1).unwrap();
        let two = f3.from_int(2);
        assert_eq!(f3.mul(two, two), f3.one());
        assert_eq!(f3.inv(two).unwrap(), two);
        assert_eq!(f3.inv(f3.zero()), Err(Error::ZeroInverse));
    }

    #[test]
    fn f4_frobenius_and_inverse() {
        let f = f4();
        let t = f.from_coeffs(&[0, 1]).unwrap();
        let t1 = f.from_coeffs(&[1, 1]).unwrap();
        assert_eq!(f.frobenius(t), t1);
        assert_eq!(f.mul(t, t1), f.one());
        assert_eq!(f.inv(t).unwrap(), t1);
        assert_eq!(f.generator(), t);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(FieldSpec::new(4, 1, vec![0, 1]).is_err());
        assert!(FieldSpec::new(2, 2, vec![1, 0, 1]).is_err()); // (t+1)^2
        assert!(FieldSpec::new(2, 2, vec![1, 1]).is_err());
        assert!(FieldSpec::new(3, 1, vec![1, 2]).is_err()); // not monic
    }

    #[test]
    fn spec_mismatch_on_foreign_code() {
        let f = f4();
        assert_eq!(f.check(FieldElement(7)), Err(Error::SpecMismatch));
        assert!(f.from_coeffs(&[1, 0, 1]).is_err());
    }

    #[test]
    fn axioms_on_all_tabulated_fields() {
        for (p, m) in [(2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (3, 3), (3, 4), (5, 1), (5, 2)] {
            let f = Field::standard(p, m).unwrap();
            let q = f.order() as u64;
            for x in f.elements() {
                assert_eq!(f.pow(f.frobenius(x), 1), f.frobenius(x));
                let mut y = x;
                for _ in 0..m {
                    y = f.frobenius(y);
                }
                assert_eq!(y, x, "frobenius^m = id in F_{p}^{m}");
                if !x.is_zero() {
                    assert_eq!(f.mul(x, f.inv(x).unwrap()), f.one());
                    assert_eq!(f.pow(x, q - 1), f.one());
                }
                assert_eq!(f.add(x, f.neg(x)), f.zero());
            }
            let g = f.generator();
            for x in f.elements().step_by(3) {
                let s = f.add(x, g);
                assert_eq!(f.frobenius(s), f.add(f.frobenius(x), f.frobenius(g)));
                assert_eq!(f.mul(x, f.add(g, f.one())), f.add(f.mul(x, g), x));
            }
        }
    }

    #[test]
    fn large_field_without_tables_agrees() {
        let f = Field::standard(3, 6).unwrap();
        let g = f.generator();
        let x = f.pow(g, 100);
        assert_eq!(f.mul(x, f.inv(x).unwrap()), f.one());
        assert_eq!(f.pow(g, f.order() as u64 - 1), f.one());
    }

    #[test]
    fn extension_embeds_subfield() {
        let f = f4();
        let emb = f.extension(2).unwrap();
        assert_eq!(emb.big.order(), 16);
        for x in f.elements() {
            for y in f.elements() {
                let big = &emb.big;
                assert_eq!(emb.apply(f.mul(x, y)), big.mul(emb.apply(x), emb.apply(y)));
                assert_eq!(emb.apply(f.add(x, y)), big.add(emb.apply(x), emb.apply(y)));
            }
        }
    }
}
