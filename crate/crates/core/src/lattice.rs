//! Lattices in `F_q((u))^2` and their homothety classes.
//!
//! A lattice is stored in upper-triangular Hermite form: it is spanned by the
//! columns `(u^a, 0)` and `(f, u^b)` with `f` reduced modulo `u^a`. Its
//! homothety class is the pair `(d, f)` with `d = a - b`: the class of the
//! lattice spanned by `(u^d, 0)` and `(f, 1)`.
//!
//! In these coordinates the tree is easy to navigate. The parent of `(d, f)`
//! is `(d - 1, f mod u^(d-1))` and its other `q` neighbours are
//! `(d + 1, f + c u^d)`, so two classes meet at depth
//! `k = min(d1, d2, v(f1 - f2))` and lie at distance `d1 + d2 - 2k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::Field;
use crate::series::{Laurent, LaurentJson};

/// A 2x2 matrix over `F_q((u))`, row-major. Columns are the generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub e: [Laurent; 4],
}

impl Mat2 {
    pub fn new(m00: Laurent, m01: Laurent, m10: Laurent, m11: Laurent) -> Self {
        Mat2 { e: [m00, m01, m10, m11] }
    }

    pub fn identity() -> Self {
        Mat2::diag_pow(0, 0)
    }

    /// `diag(u^a, u^b)`.
    pub fn diag_pow(a: i64, b: i64) -> Self {
        Mat2::new(Laurent::u_pow(a), Laurent::zero(), Laurent::zero(), Laurent::u_pow(b))
    }

    pub fn get(&self, row: usize, col: usize) -> &Laurent {
        &self.e[2 * row + col]
    }

    pub fn mul(&self, other: &Mat2, field: &Field) -> Mat2 {
        let entry = |r: usize, c: usize| {
            self.get(r, 0).mul(other.get(0, c), field).add(&self.get(r, 1).mul(other.get(1, c), field), field)
        };
        Mat2::new(entry(0, 0), entry(0, 1), entry(1, 0), entry(1, 1))
    }

    pub fn det(&self, field: &Field) -> Laurent {
        self.e[0].mul(&self.e[3], field).sub(&self.e[1].mul(&self.e[2], field), field)
    }

    /// `[[d, -b], [-c, a]]`; equals `det * inverse`.
    pub fn adjugate(&self, field: &Field) -> Mat2 {
        Mat2::new(self.e[3].clone(), self.e[1].neg(field), self.e[2].neg(field), self.e[0].clone())
    }

    /// Entrywise `u -> u^k`.
    pub fn substitute_power(&self, k: i64) -> Mat2 {
        Mat2 { e: self.e.clone().map(|x| x.substitute_power(k)) }
    }

    pub fn phi(&self, p: u32) -> Mat2 {
        self.substitute_power(p as i64)
    }

    pub fn is_identity(&self) -> bool {
        *self == Mat2::identity()
    }

    pub fn column(&self, c: usize) -> (Laurent, Laurent) {
        (self.get(0, c).clone(), self.get(1, c).clone())
    }

    pub fn from_columns(c0: (Laurent, Laurent), c1: (Laurent, Laurent)) -> Self {
        Mat2::new(c0.0, c1.0, c0.1, c1.1)
    }

    pub fn to_json(&self, field: &Field) -> Vec<LaurentJson> {
        self.e.iter().map(|x| x.to_json(field)).collect()
    }

    pub fn from_json(json: &[LaurentJson], field: &Field) -> Result<Self> {
        if json.len() != 4 {
            return Err(Error::Parse(format!("matrix needs 4 entries, got {}", json.len())));
        }
        Ok(Mat2::new(
            Laurent::from_json(&json[0], field)?,
            Laurent::from_json(&json[1], field)?,
            Laurent::from_json(&json[2], field)?,
            Laurent::from_json(&json[3], field)?,
        ))
    }
}

/// An `F_q[[u]]`-lattice in Hermite form `[[u^a, f], [0, u^b]]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lattice {
    pub a: i64,
    pub b: i64,
    /// Exponents `< a`.
    pub f: Laurent,
}

/// Homothety class `(d, f)` of the lattice spanned by `(u^d, 0)`, `(f, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexClass {
    pub d: i64,
    /// Exponents `< d`.
    pub f: Laurent,
}

/// Hermite form of the lattice spanned by the given generators.
pub fn hnf_generators(cols: &[(Laurent, Laurent)], field: &Field) -> Result<Lattice> {
    // e2-projection is u^b O; the pivot is the first generator attaining it
    let mut pivot: Option<(usize, i64)> = None;
    for (k, (_, y)) in cols.iter().enumerate() {
        if y.is_zero() {
            continue;
        }
        let v = y.val()?;
        if pivot.is_none_or(|(_, best)| v < best) {
            pivot = Some((k, v));
        }
    }
    let (piv, b) = pivot.ok_or(Error::SingularMatrix)?;
    // the determinant ideal is generated by the 2x2 minors
    let mut det_val: Option<i64> = None;
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            let minor = cols[i].0.mul(&cols[j].1, field).sub(&cols[j].0.mul(&cols[i].1, field), field);
            if minor.is_zero() {
                continue;
            }
            let v = minor.val()?;
            det_val = Some(det_val.map_or(v, |d: i64| d.min(v)));
        }
    }
    let det_val = det_val.ok_or(Error::SingularMatrix)?;
    let a = det_val - b;
    let (x, y) = &cols[piv];
    let f = if x.is_zero() {
        Laurent::zero()
    } else {
        let vx = x.val()?;
        let prec = a - vx;
        if prec <= 0 {
            Laurent::zero()
        } else {
            let unit_inv = y.shift(-b).inv(prec, field)?;
            x.mul(&unit_inv, field).truncate_below(a)
        }
    };
    if !f.is_exact() {
        return Err(Error::InsufficientPrecision(format!("reduction modulo u^{a} needs more known coefficients")));
    }
    Ok(Lattice { a, b, f })
}

/// Hermite form of the column span of `basis`.
pub fn hnf(basis: &Mat2, field: &Field) -> Result<Lattice> {
    hnf_generators(&[basis.column(0), basis.column(1)], field)
}

/// Smith exponents `(big, small)` of a nonsingular matrix over `F_q[[u]]`.
pub fn smith_exponents(m: &Mat2, field: &Field) -> Result<(i64, i64)> {
    let det = m.det(field);
    if det.is_zero() {
        return Err(Error::SingularMatrix);
    }
    let dv = det.val()?;
    let mut small = i64::MAX;
    for x in &m.e {
        if !x.is_zero() {
            small = small.min(x.val()?);
        }
    }
    Ok((dv - small, small))
}

/// Elementary divisors `(a, b)`, `a >= b`, of `src` with respect to `dst`:
/// the Smith exponents of `dst^{-1} src`, so `a + b = detval(src) - detval(dst)`.
pub fn elementary_divisors(src: &Lattice, dst: &Lattice, field: &Field) -> Result<(i64, i64)> {
    let m = dst.inverse_basis(field).mul(&src.basis(), field);
    smith_exponents(&m, field)
}

impl Lattice {
    pub fn standard() -> Self {
        Lattice { a: 0, b: 0, f: Laurent::zero() }
    }

    pub fn basis(&self) -> Mat2 {
        Mat2::new(Laurent::u_pow(self.a), self.f.clone(), Laurent::zero(), Laurent::u_pow(self.b))
    }

    /// Exact inverse of the Hermite basis.
    pub fn inverse_basis(&self, field: &Field) -> Mat2 {
        Mat2::new(
            Laurent::u_pow(-self.a),
            self.f.neg(field).shift(-self.a - self.b),
            Laurent::zero(),
            Laurent::u_pow(-self.b),
        )
    }

    pub fn det_val(&self) -> i64 {
        self.a + self.b
    }

    pub fn class(&self) -> VertexClass {
        VertexClass { d: self.a - self.b, f: self.f.shift(-self.b) }
    }

    /// `u^k L`.
    pub fn scale(&self, k: i64) -> Lattice {
        Lattice { a: self.a + k, b: self.b + k, f: self.f.shift(k) }
    }

    /// Does the lattice contain the vector `(x, y)`?
    pub fn contains(&self, x: &Laurent, y: &Laurent, field: &Field) -> Result<bool> {
        let inv = self.inverse_basis(field);
        let c0 = inv.get(0, 0).mul(x, field).add(&inv.get(0, 1).mul(y, field), field);
        let c1 = inv.get(1, 1).mul(y, field);
        let integral = |c: &Laurent| c.is_zero() || c.val().is_ok_and(|v| v >= 0);
        Ok(integral(&c0) && integral(&c1))
    }

    pub fn to_json(&self, field: &Field) -> LatticeJson {
        LatticeJson { a: self.a, b: self.b, f: self.f.to_json(field) }
    }

    pub fn from_json(json: &LatticeJson, field: &Field) -> Result<Self> {
        let f = Laurent::from_json(&json.f, field)?;
        if f.max_exponent().is_some_and(|e| e >= json.a) {
            return Err(Error::Parse("lattice f must be reduced modulo u^a".into()));
        }
        Ok(Lattice { a: json.a, b: json.b, f })
    }
}

/// Canonical `(d, f)` form of the homothety class of `L`.
pub fn vertex_canonical(lattice: &Lattice) -> VertexClass {
    lattice.class()
}

impl VertexClass {
    pub fn base() -> Self {
        VertexClass { d: 0, f: Laurent::zero() }
    }

    pub fn new(d: i64, f: Laurent) -> Self {
        let f = f.truncate_below(d);
        VertexClass { d, f }
    }

    /// The lattice in this class with determinant valuation `det_val`.
    pub fn lattice_with_det(&self, det_val: i64) -> Result<Lattice> {
        if (det_val - self.d).rem_euclid(2) != 0 {
            return Err(Error::DetMismatch);
        }
        let j = (det_val - self.d) / 2;
        Ok(Lattice { a: self.d + j, b: j, f: self.f.shift(j) })
    }

    /// Parity of the determinant of every lattice in the class.
    pub fn parity(&self) -> i64 {
        self.d.rem_euclid(2)
    }

    /// Depth at which the paths of `self` and `other` toward the common end meet.
    pub fn meet_depth(&self, other: &VertexClass) -> i64 {
        self.d.min(other.d).min(self.f.first_difference(&other.f))
    }

    pub fn distance(&self, other: &VertexClass) -> i64 {
        self.d + other.d - 2 * self.meet_depth(other)
    }

    /// The neighbour one step toward the common end.
    pub fn parent(&self) -> VertexClass {
        VertexClass { d: self.d - 1, f: self.f.truncate_below(self.d - 1) }
    }

    /// The child `(d + 1, f + c u^d)`.
    pub fn child(&self, c: crate::gf::FieldElement, field: &Field) -> VertexClass {
        VertexClass { d: self.d + 1, f: self.f.add(&Laurent::monomial(c, self.d), field) }
    }

    /// The `q + 1` adjacent classes in sorted order.
    pub fn neighbors(&self, field: &Field) -> Vec<VertexClass> {
        let mut out: Vec<VertexClass> = field.elements().map(|c| self.child(c, field)).collect();
        out.push(self.parent());
        out.sort();
        out
    }

    pub fn lattice_basis(&self) -> Mat2 {
        Mat2::new(Laurent::u_pow(self.d), self.f.clone(), Laurent::zero(), Laurent::one())
    }

    /// Class of `m * L` for any `L` in this class.
    pub fn act(&self, m: &Mat2, field: &Field) -> Result<VertexClass> {
        Ok(hnf(&m.mul(&self.lattice_basis(), field), field)?.class())
    }

    pub fn to_json(&self, field: &Field) -> VertexJson {
        VertexJson { d: self.d, f: self.f.to_json(field) }
    }

    pub fn from_json(json: &VertexJson, field: &Field) -> Result<Self> {
        let f = Laurent::from_json(&json.f, field)?;
        if f.max_exponent().is_some_and(|e| e >= json.d) || !f.is_exact() {
            return Err(Error::Parse("vertex f must be exact and reduced modulo u^d".into()));
        }
        Ok(VertexClass { d: json.d, f })
    }
}

pub fn neighbors(v: &VertexClass, field: &Field) -> Vec<VertexClass> {
    v.neighbors(field)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexJson {
    pub d: i64,
    pub f: LaurentJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeJson {
    pub a: i64,
    pub b: i64,
    pub f: LaurentJson,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldElement;
    use std::sync::Arc;

    fn f2() -> Arc<Field> {
        Field::standard(2, 1).unwrap()
    }

    fn mono(e: i64) -> Laurent {
        Laurent::u_pow(e)
    }

    #[test]
    fn hnf_examples() {
        let f = f2();
        assert_eq!(hnf(&Mat2::identity(), &f).unwrap(), Lattice::standard());
        // columns (0,1) and (u,0): span{u e1, e2}
        let m = Mat2::new(Laurent::zero(), mono(1), mono(0), Laurent::zero());
        assert_eq!(hnf(&m, &f).unwrap(), Lattice { a: 1, b: 0, f: Laurent::zero() });
        let singular = Mat2::new(mono(0), mono(0), mono(1), mono(1));
        assert_eq!(hnf(&singular, &f), Err(Error::SingularMatrix));
    }

    #[test]
    fn hnf_reduces_with_unit_inverse() {
        // span{(1, 1+u), (0, u^3)}: e2-pivot 1+u, f = 1/(1+u) mod u^3
        let f = f2();
        let one_plus_u = Laurent::from_terms(&f, [(0, FieldElement::ONE), (1, FieldElement::ONE)]);
        let m = Mat2::new(mono(0), Laurent::zero(), one_plus_u, mono(3));
        let l = hnf(&m, &f).unwrap();
        assert_eq!((l.a, l.b), (3, 0));
        let expect = Laurent::from_terms(&f, (0..3).map(|e| (e, FieldElement::ONE)));
        assert_eq!(l.f, expect);
    }

    #[test]
    fn divisors_examples() {
        let f = f2();
        let src = hnf(&Mat2::diag_pow(2, -1), &f).unwrap();
        assert_eq!(elementary_divisors(&src, &Lattice::standard(), &f), Ok((2, -1)));
        assert_eq!(elementary_divisors(&Lattice::standard(), &src, &f), Ok((1, -2)));
        let m = Mat2::new(mono(1), mono(0), Laurent::zero(), mono(1));
        let src = hnf(&m, &f).unwrap();
        assert_eq!(elementary_divisors(&src, &Lattice::standard(), &f), Ok((2, 0)));
        assert_eq!(elementary_divisors(&src, &src, &f), Ok((0, 0)));
    }

    #[test]
    fn vertex_canonical_examples() {
        let f = f2();
        assert_eq!(vertex_canonical(&Lattice::standard()), VertexClass::base());
        assert_eq!(vertex_canonical(&Lattice::standard().scale(5)), VertexClass::base());
        let m = Mat2::new(mono(1), mono(-1), Laurent::zero(), mono(0));
        let l = hnf(&m, &f).unwrap();
        assert_eq!(vertex_canonical(&l), VertexClass { d: 1, f: mono(-1) });
    }

    #[test]
    fn base_neighbors_over_f2() {
        let f = f2();
        let nb = VertexClass::base().neighbors(&f);
        let expect = vec![
            VertexClass { d: -1, f: Laurent::zero() },
            VertexClass { d: 1, f: Laurent::zero() },
            VertexClass { d: 1, f: mono(0) },
        ];
        assert_eq!(nb, expect);
        // span{e1, u e2} is the parent class
        let l = hnf(&Mat2::diag_pow(0, 1), &f).unwrap();
        assert_eq!(l.class(), expect[0]);
        for w in &nb {
            assert_eq!(VertexClass::base().distance(w), 1);
        }
    }

    #[test]
    fn lattice_with_det_roundtrip() {
        let v = VertexClass { d: 3, f: mono(-2) };
        let l = v.lattice_with_det(5).unwrap();
        assert_eq!(l.det_val(), 5);
        assert_eq!(l.class(), v);
        assert_eq!(v.lattice_with_det(4), Err(Error::DetMismatch));
    }
}
