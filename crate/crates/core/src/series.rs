//! Laurent polynomials over `F_q` with an optional truncation horizon.
//!
//! An element with horizon `H` stands for `sum c_j u^j + O(u^H)`: every
//! exponent `>= H` is unknown. Exact elements have no horizon. Arithmetic on
//! exact inputs stays exact; only [`Laurent::inv`] introduces a horizon.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{Field, FieldElement};

/// Default relative precision for series inversion.
pub const DEFAULT_PREC: i64 = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Laurent {
    /// Sorted by exponent; no zero coefficients; all exponents below `horizon`.
    terms: Vec<(i64, FieldElement)>,
    horizon: Option<i64>,
}

impl PartialOrd for Laurent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Laurent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.terms.cmp(&other.terms).then(self.horizon.cmp(&other.horizon))
    }
}

impl Laurent {
    pub fn zero() -> Self {
        Laurent::default()
    }

    pub fn one() -> Self {
        Laurent::monomial(FieldElement::ONE, 0)
    }

    /// `c u^e`.
    pub fn monomial(c: FieldElement, e: i64) -> Self {
        if c.is_zero() {
            Laurent::zero()
        } else {
            Laurent { terms: vec![(e, c)], horizon: None }
        }
    }

    /// `u^e`.
    pub fn u_pow(e: i64) -> Self {
        Laurent::monomial(FieldElement::ONE, e)
    }

    pub fn constant(c: FieldElement) -> Self {
        Laurent::monomial(c, 0)
    }

    /// Builds from arbitrary `(exponent, coefficient)` pairs, summing repeats.
    pub fn from_terms(field: &Field, terms: impl IntoIterator<Item = (i64, FieldElement)>) -> Self {
        let mut v: Vec<(i64, FieldElement)> = terms.into_iter().collect();
        v.sort_by_key(|t| t.0);
        let mut out: Vec<(i64, FieldElement)> = Vec::with_capacity(v.len());
        for (e, c) in v {
            match out.last_mut() {
                Some(last) if last.0 == e => last.1 = field.add(last.1, c),
                _ => out.push((e, c)),
            }
        }
        out.retain(|t| !t.1.is_zero());
        Laurent { terms: out, horizon: None }
    }

    pub fn with_horizon(mut self, horizon: Option<i64>) -> Self {
        if let Some(h) = horizon {
            self.terms.retain(|t| t.0 < h);
            self.horizon = Some(self.horizon.map_or(h, |old| old.min(h)));
        }
        self
    }

    pub fn terms(&self) -> &[(i64, FieldElement)] {
        &self.terms
    }

    pub fn horizon(&self) -> Option<i64> {
        self.horizon
    }

    pub fn is_exact(&self) -> bool {
        self.horizon.is_none()
    }

    /// True when the element is known to vanish (exact zero).
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.horizon.is_none()
    }

    /// No known nonzero coefficient.
    pub fn has_no_terms(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: i64) -> FieldElement {
        match self.terms.binary_search_by_key(&e, |t| t.0) {
            Ok(i) => self.terms[i].1,
            Err(_) => FieldElement::ZERO,
        }
    }

    /// Minimal exponent with a nonzero coefficient.
    pub fn val(&self) -> Result<i64> {
        match (self.terms.first(), self.horizon) {
            (Some(t), _) => Ok(t.0),
            (None, None) => Err(Error::ZeroValuation),
            (None, Some(h)) => Err(Error::InsufficientPrecision(format!("all coefficients below u^{h} vanish"))),
        }
    }

    /// Valuation, with `i64::MAX` standing for the exact zero.
    pub fn val_or_max(&self) -> i64 {
        self.terms.first().map_or(i64::MAX, |t| t.0)
    }

    /// Valuation if known, else the horizon (for non-exact-zero elements).
    fn lowest_known(&self) -> i64 {
        self.terms.first().map(|t| t.0).or(self.horizon).unwrap_or(i64::MAX)
    }

    pub fn max_exponent(&self) -> Option<i64> {
        self.terms.last().map(|t| t.0)
    }

    pub fn neg(&self, field: &Field) -> Self {
        Laurent { terms: self.terms.iter().map(|&(e, c)| (e, field.neg(c))).collect(), horizon: self.horizon }
    }

    fn merge(&self, other: &Self, field: &Field, negate: bool) -> Self {
        let horizon = min_opt(self.horizon, other.horizon);
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let a = &self.terms;
        let b = &other.terms;
        let sign = |c: FieldElement| if negate { field.neg(c) } else { c };
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&(ea, ca)), Some(&(eb, cb))) => match ea.cmp(&eb) {
                    Ordering::Less => {
                        i += 1;
                        (ea, ca)
                    }
                    Ordering::Greater => {
                        j += 1;
                        (eb, sign(cb))
                    }
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                        (ea, field.add(ca, sign(cb)))
                    }
                },
                (Some(&t), None) => {
                    i += 1;
                    t
                }
                (None, Some(&(eb, cb))) => {
                    j += 1;
                    (eb, sign(cb))
                }
                (None, None) => unreachable!(),
            };
            if !next.1.is_zero() && horizon.is_none_or(|h| next.0 < h) {
                terms.push(next);
            }
        }
        Laurent { terms, horizon }
    }

    pub fn add(&self, other: &Self, field: &Field) -> Self {
        self.merge(other, field, false)
    }

    pub fn sub(&self, other: &Self, field: &Field) -> Self {
        self.merge(other, field, true)
    }

    pub fn scale(&self, c: FieldElement, field: &Field) -> Self {
        if c.is_zero() {
            return Laurent { terms: vec![], horizon: self.horizon };
        }
        Laurent { terms: self.terms.iter().map(|&(e, x)| (e, field.mul(c, x))).collect(), horizon: self.horizon }
    }

    /// Multiplication by `u^k`.
    pub fn shift(&self, k: i64) -> Self {
        Laurent { terms: self.terms.iter().map(|&(e, c)| (e + k, c)).collect(), horizon: self.horizon.map(|h| h + k) }
    }

    pub fn mul(&self, other: &Self, field: &Field) -> Self {
        if self.is_zero() || other.is_zero() {
            return Laurent::zero();
        }
        // known part of x*y ends where either operand's unknown tail starts
        let horizon =
            min_opt(self.horizon.map(|h| h + other.lowest_known()), other.horizon.map(|h| h + self.lowest_known()));
        let mut prod: Vec<(i64, FieldElement)> = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &(ea, ca) in &self.terms {
            for &(eb, cb) in &other.terms {
                let e = ea + eb;
                if horizon.is_none_or(|h| e < h) {
                    prod.push((e, field.mul(ca, cb)));
                }
            }
        }
        Laurent::from_terms(field, prod).with_horizon(horizon)
    }

    /// The substitution `u -> u^k` (identity on coefficients).
    pub fn substitute_power(&self, k: i64) -> Self {
        Laurent { terms: self.terms.iter().map(|&(e, c)| (e * k, c)).collect(), horizon: self.horizon.map(|h| h * k) }
    }

    /// `phi: u -> u^p`.
    pub fn phi(&self, p: u32) -> Self {
        self.substitute_power(p as i64)
    }

    /// Inverse of [`Laurent::phi`] on exact series supported on `p Z`.
    pub fn unphi(&self, p: u32) -> Option<Self> {
        let p = p as i64;
        if !self.is_exact() || self.terms.iter().any(|t| t.0.rem_euclid(p) != 0) {
            return None;
        }
        Some(Laurent { terms: self.terms.iter().map(|&(e, c)| (e / p, c)).collect(), horizon: None })
    }

    /// Keeps the terms of exponent `< bound` (reduction modulo `u^bound`),
    /// discarding any horizon at or beyond the bound.
    pub fn truncate_below(&self, bound: i64) -> Self {
        let terms: Vec<_> = self.terms.iter().copied().filter(|t| t.0 < bound).collect();
        let horizon = self.horizon.filter(|&h| h < bound);
        Laurent { terms, horizon }
    }

    /// Keeps the terms of exponent `>= bound`.
    pub fn truncate_from(&self, bound: i64) -> Self {
        Laurent { terms: self.terms.iter().copied().filter(|t| t.0 >= bound).collect(), horizon: self.horizon }
    }

    /// Inverse to relative precision `prec`: the result carries horizon
    /// `v(result) + prec` and `x * result` agrees with `1` below `u^prec`.
    pub fn inv(&self, prec: i64, field: &Field) -> Result<Self> {
        if prec < 1 {
            return Err(Error::OutOfRange(format!("precision {prec} < 1")));
        }
        let v = match self.val() {
            Ok(v) => v,
            Err(Error::ZeroValuation) => return Err(Error::ZeroInverse),
            Err(e) => return Err(e),
        };
        if let Some(h) = self.horizon {
            if h - v < prec {
                return Err(Error::InsufficientPrecision(format!("relative precision {} < requested {prec}", h - v)));
            }
        }
        // unit part w = x / u^v, inverted by the standard recurrence
        let w = self.shift(-v);
        let w0_inv = field.inv(w.coeff(0))?;
        let mut out: Vec<FieldElement> = Vec::with_capacity(prec as usize);
        for k in 0..prec {
            let c = if k == 0 {
                w0_inv
            } else {
                let mut acc = FieldElement::ZERO;
                for &(e, we) in w.terms.iter() {
                    if e == 0 {
                        continue;
                    }
                    if e > k {
                        break;
                    }
                    acc = field.add(acc, field.mul(we, out[(k - e) as usize]));
                }
                field.neg(field.mul(acc, w0_inv))
            };
            out.push(c);
        }
        let terms = out.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(k, c)| (k as i64 - v, c)).collect();
        Ok(Laurent { terms, horizon: Some(prec - v) })
    }

    /// Smallest exponent where `self` and `other` differ (exact inputs);
    /// `i64::MAX` when they are equal.
    pub fn first_difference(&self, other: &Self) -> i64 {
        let (a, b) = (&self.terms, &other.terms);
        let mut i = 0;
        loop {
            match (a.get(i), b.get(i)) {
                (None, None) => return i64::MAX,
                (Some(x), None) => return x.0,
                (None, Some(y)) => return y.0,
                (Some(x), Some(y)) => {
                    if x == y {
                        i += 1;
                        continue;
                    }
                    return x.0.min(y.0);
                }
            }
        }
    }

    pub fn to_json(&self, field: &Field) -> LaurentJson {
        LaurentJson { terms: self.terms.iter().map(|&(e, c)| (e, field.coeffs(c))).collect(), horizon: self.horizon }
    }

    pub fn from_json(json: &LaurentJson, field: &Field) -> Result<Self> {
        let mut terms = Vec::with_capacity(json.terms.len());
        for (e, coeffs) in &json.terms {
            terms.push((*e, field.from_coeffs(coeffs)?));
        }
        Ok(Laurent::from_terms(field, terms).with_horizon(json.horizon))
    }

    pub fn display<'a>(&'a self, field: &'a Field) -> LaurentDisplay<'a> {
        LaurentDisplay { x: self, field }
    }
}

fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Serialized form `{"terms": [[exp, [coeffs]], ...], "horizon": H|null}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaurentJson {
    pub terms: Vec<(i64, Vec<u32>)>,
    pub horizon: Option<i64>,
}

pub struct LaurentDisplay<'a> {
    x: &'a Laurent,
    field: &'a Field,
}

impl fmt::Display for LaurentDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for &(e, c) in &self.x.terms {
            let coeff = self.field.format(c);
            let coeff = if coeff.contains('+') { format!("({coeff})") } else { coeff };
            parts.push(match (e, coeff.as_str()) {
                (0, _) => coeff,
                (1, "1") => "u".into(),
                (_, "1") => format!("u^{e}"),
                (1, _) => format!("{coeff}u"),
                _ => format!("{coeff}u^{e}"),
            });
        }
        if let Some(h) = self.x.horizon {
            parts.push(format!("O(u^{h})"));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn poly(f: &Field, terms: &[(i64, i64)]) -> Laurent {
        Laurent::from_terms(f, terms.iter().map(|&(e, c)| (e, f.from_int(c))))
    }

    fn f2() -> Arc<Field> {
        Field::standard(2, 1).unwrap()
    }

    #[test]
    fn char_two_square() {
        let f = f2();
        let x = poly(&f, &[(0, 1), (1, 1)]);
        assert_eq!(x.mul(&x, &f), poly(&f, &[(0, 1), (2, 1)]));
        let y = poly(&f, &[(-1, 1)]);
        assert!(y.add(&y, &f).is_zero());
    }

    #[test]
    fn horizon_shifts_under_multiplication() {
        let f = f2();
        let x = poly(&f, &[(0, 1), (1, 1)]).with_horizon(Some(2));
        let prod = x.mul(&Laurent::u_pow(3), &f);
        assert_eq!(prod, poly(&f, &[(3, 1), (4, 1)]).with_horizon(Some(5)));
    }

    #[test]
    fn inverses() {
        let f = f2();
        let inv = poly(&f, &[(0, 1), (1, 1)]).inv(3, &f).unwrap();
        assert_eq!(inv, poly(&f, &[(0, 1), (1, 1), (2, 1)]).with_horizon(Some(3)));
        let inv = Laurent::u_pow(1).inv(3, &f).unwrap();
        assert_eq!(inv.terms(), &[(-1, FieldElement::ONE)]);
        assert_eq!(inv.horizon(), Some(2));

        // F_3: (2+u)^{-1} = 2 + 2u + O(u^2); multiplying back gives 1 + O(u^2)
        let f3 = Field::standard(3, 1).unwrap();
        let x = poly(&f3, &[(0, 2), (1, 1)]);
        let inv = x.inv(2, &f3).unwrap();
        assert_eq!(inv, poly(&f3, &[(0, 2), (1, 2)]).with_horizon(Some(2)));
        assert_eq!(x.mul(&inv, &f3), Laurent::one().with_horizon(Some(2)));
        assert_eq!(Laurent::zero().inv(3, &f3), Err(Error::ZeroInverse));
    }

    #[test]
    fn insufficient_precision() {
        let f = f2();
        let x = Laurent::zero().with_horizon(Some(3));
        assert!(matches!(x.val(), Err(Error::InsufficientPrecision(_))));
        let y = poly(&f, &[(0, 1)]).with_horizon(Some(2));
        assert!(matches!(y.inv(5, &f), Err(Error::InsufficientPrecision(_))));
    }

    #[test]
    fn valuations_and_phi() {
        let f = f2();
        assert_eq!(poly(&f, &[(2, 1), (5, 1)]).val(), Ok(2));
        assert_eq!(poly(&f, &[(-4, 1)]).val(), Ok(-4));
        assert_eq!(Laurent::zero().val(), Err(Error::ZeroValuation));
        let x = poly(&f, &[(-1, 1), (0, 1), (3, 1)]);
        assert_eq!(x.phi(2), poly(&f, &[(-2, 1), (0, 1), (6, 1)]));
        assert!(Laurent::zero().phi(2).is_zero());
        assert_eq!(x.with_horizon(Some(5)).phi(3).horizon(), Some(15));
    }

    #[test]
    fn json_roundtrip() {
        let f = Field::standard(2, 2).unwrap();
        let t = f.generator();
        let x = Laurent::from_terms(&f, [(-2, t), (3, FieldElement::ONE)]).with_horizon(Some(7));
        let json = x.to_json(&f);
        assert_eq!(serde_json::to_string(&json).unwrap(), r#"{"terms":[[-2,[0,1]],[3,[1,0]]],"horizon":7}"#);
        assert_eq!(Laurent::from_json(&json, &f).unwrap(), x);
    }
}
