//! Étale φ-modules of rank two with `n` factors, their building maps and
//! the unique fixed point of a simple module.
//!
//! Factors are indexed `0..n`. `Φ_i = A_{i+1} ∘ φ` maps factor `i` to factor
//! `i + 1 (mod n)`, so `a[0]` is applied when wrapping from the last factor.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{Embedding, Field, FieldElement};
use crate::lattice::{hnf, Lattice, Mat2, VertexClass};
use crate::series::{Laurent, LaurentJson};
use crate::tree::{dist, int, point_on_geodesic, vertex_dist, BuildingPoint, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiModule {
    pub field: Arc<Field>,
    pub a: Vec<Mat2>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiModuleJson {
    pub p: u32,
    pub m_ext: u32,
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<LaurentJson>>,
}

impl PhiModule {
    pub fn new(field: Arc<Field>, a: Vec<Mat2>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::OutOfRange("a φ-module needs at least one factor".into()));
        }
        for m in &a {
            if m.det(&field).has_no_terms() {
                return Err(Error::SingularMatrix);
            }
        }
        Ok(PhiModule { field, a })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn p(&self) -> u32 {
        self.field.p()
    }

    /// `p^n`, the scaling factor of the full composite.
    pub fn big_n(&self) -> i64 {
        (self.p() as i64).pow(self.n() as u32)
    }

    fn next(&self, i: usize) -> usize {
        (i + 1) % self.n()
    }

    /// `val(det A_{i+1})`, the determinant shift of `Φ_i`.
    pub fn det_shift(&self, i: usize) -> Result<i64> {
        self.a[self.next(i)].det(&self.field).val()
    }

    pub fn phi_apply(&self, i: usize, lattice: &Lattice) -> Result<Lattice> {
        let m = self.a[self.next(i)].mul(&lattice.basis().phi(self.p()), &self.field);
        hnf(&m, &self.field)
    }

    pub fn phibar_vertex(&self, i: usize, v: &VertexClass) -> Result<VertexClass> {
        let m = self.a[self.next(i)].mul(&v.lattice_basis().phi(self.p()), &self.field);
        Ok(hnf(&m, &self.field)?.class())
    }

    pub fn phibar(&self, i: usize, x: &BuildingPoint) -> Result<BuildingPoint> {
        match x {
            BuildingPoint::Vertex(v) => Ok(BuildingPoint::Vertex(self.phibar_vertex(i, v)?)),
            BuildingPoint::Edge { v, w, t } => {
                let fv = self.phibar_vertex(i, v)?;
                let fw = self.phibar_vertex(i, w)?;
                point_on_geodesic(&fv, &fw, *t * int(self.p() as i64))
            }
        }
    }

    /// Matrix `B` with `Φ_{i+k-1} ∘ … ∘ Φ_i = B ∘ φ^k` on factor `i`.
    pub fn composite_matrix(&self, i: usize, k: usize) -> Mat2 {
        let mut m = Mat2::identity();
        for step in 0..k {
            let j = (i + step) % self.n();
            m = self.a[self.next(j)].mul(&m.phi(self.p()), &self.field);
        }
        m
    }

    /// `k` successive building maps starting on factor `i`.
    pub fn phibar_iter(&self, i: usize, k: usize, x: &BuildingPoint) -> Result<BuildingPoint> {
        let mut y = x.clone();
        for step in 0..k {
            y = self.phibar(i + step, &y)?;
        }
        Ok(y)
    }

    pub fn to_json(&self) -> PhiModuleJson {
        PhiModuleJson {
            p: self.p(),
            m_ext: self.field.degree(),
            n: self.n(),
            a: self.a.iter().map(|m| m.to_json(&self.field)).collect(),
        }
    }

    pub fn from_json(json: &PhiModuleJson) -> Result<Self> {
        let field = Field::standard(json.p, json.m_ext)?;
        if json.a.len() != json.n {
            return Err(Error::Parse(format!("expected {} matrices, got {}", json.n, json.a.len())));
        }
        let a = json.a.iter().map(|m| Mat2::from_json(m, &field)).collect::<Result<Vec<_>>>()?;
        PhiModule::new(field, a)
    }

    /// Detects `A_1 = [[0, α u^s], [1, 0]]` with all other factors trivial.
    pub fn standard_form(&self) -> Option<(i64, FieldElement)> {
        if !self.a[1..].iter().all(Mat2::is_identity) {
            return None;
        }
        let m = &self.a[0];
        if !(m.get(0, 0).is_zero() && m.get(1, 1).is_zero() && *m.get(1, 0) == Laurent::one()) {
            return None;
        }
        match m.get(0, 1).terms() {
            [(s, alpha)] if m.get(0, 1).is_exact() => Some((*s, *alpha)),
            _ => None,
        }
    }
}

/// `A_1 = [[0, α u^s], [1, 0]]`, `A_i = 1` otherwise.
pub fn standard_module(p: u32, m_ext: u32, n: usize, s: i64, alpha: FieldElement) -> Result<PhiModule> {
    let field = Field::standard(p, m_ext)?;
    field.check(alpha)?;
    if alpha.is_zero() {
        return Err(Error::OutOfRange("alpha must be nonzero".into()));
    }
    if n == 0 {
        return Err(Error::OutOfRange("n must be at least 1".into()));
    }
    let mut a = vec![Mat2::identity(); n];
    a[0] = Mat2::new(Laurent::zero(), Laurent::monomial(alpha, s), Laurent::one(), Laurent::zero());
    PhiModule::new(field, a)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slope {
    /// The line through `e_1`.
    Infinity,
    /// The line through `f e_1 + e_2`.
    Finite(Laurent),
}

/// A `Φ̃`-stable line of factor 0, defined over the degree-`ext_degree`
/// extension of the coefficient field.
#[derive(Clone, Debug)]
pub struct StableLine {
    pub slope: Slope,
    pub ext_degree: u32,
    pub field: Arc<Field>,
    /// True when the slope solves the stability equation exactly.
    pub exact: bool,
}

#[derive(Clone, Debug)]
pub enum StableLines {
    Found(Vec<StableLine>),
    NotFoundUpToBounds { prec: usize, max_ext: u32 },
}

#[derive(Clone, Debug)]
pub enum Simplicity {
    Simple,
    NotSimple(StableLine),
    UnknownUpToBounds { prec: usize, max_ext: u32 },
}

const MAX_LINES: usize = 4;
const NODE_BUDGET: usize = 200_000;

fn map_series(x: &Laurent, emb: &Embedding) -> Laurent {
    Laurent::from_terms(&emb.big, x.terms().iter().map(|&(e, c)| (e, emb.apply(c)))).with_horizon(x.horizon())
}

struct LineSearch<'a> {
    field: &'a Field,
    b: [Laurent; 4],
    big_n: i64,
    prec: usize,
    nodes: usize,
    found: Vec<(Laurent, bool)>,
}

impl LineSearch<'_> {
    /// `B11 φ̃f + B12 - f (B21 φ̃f + B22)`.
    fn residual(&self, f: &Laurent) -> Laurent {
        let fl = self.field;
        let pf = f.substitute_power(self.big_n);
        let [b11, b12, b21, b22] = &self.b;
        let lhs = b11.mul(&pf, fl).add(b12, fl);
        let rhs = f.mul(&b21.mul(&pf, fl).add(b22, fl), fl);
        lhs.sub(&rhs, fl)
    }

    /// Smallest exponent of the residual touched by the coefficient of `u^(v+k)`.
    fn reach(&self, v: i64, k: i64) -> i64 {
        let [b11, _, b21, b22] = &self.b;
        let n = self.big_n;
        let mut e = i64::MAX;
        if !b11.is_zero() {
            e = e.min(b11.val_or_max() + n * (v + k));
        }
        if !b21.is_zero() {
            e = e.min(b21.val_or_max() + v + n * (v + k)).min(b21.val_or_max() + v + k + n * v);
        }
        if !b22.is_zero() {
            e = e.min(b22.val_or_max() + v + k);
        }
        e
    }

    fn dfs(&mut self, v: i64, k: i64, f: Laurent) -> Result<()> {
        if self.found.len() >= MAX_LINES || self.nodes >= NODE_BUDGET {
            return Ok(());
        }
        for c in self.field.elements() {
            if k == 0 && c.is_zero() {
                continue;
            }
            self.nodes += 1;
            let g = f.add(&Laurent::monomial(c, v + k), self.field);
            let res = self.residual(&g);
            if res.is_zero() {
                self.found.push((g, true));
                continue;
            }
            let bound = self.reach(v, k + 1);
            if let Some(h) = res.horizon() {
                if h < bound {
                    return Err(Error::InsufficientPrecision(format!(
                        "stability residual known below u^{h}, need u^{bound}"
                    )));
                }
            }
            if res.val_or_max() < bound {
                continue;
            }
            if k + 1 >= self.prec as i64 {
                self.found.push((g, false));
                continue;
            }
            self.dfs(v, k + 1, g)?;
            if self.found.len() >= MAX_LINES || self.nodes >= NODE_BUDGET {
                return Ok(());
            }
        }
        Ok(())
    }
}

/// Integer leading exponents `v` for which the Newton polygon of the
/// stability equation allows a slope of valuation `v`.
fn valuation_candidates(b: &[Laurent; 4], big_n: i64) -> Vec<i64> {
    // terms: (constant, coefficient of v)
    let mut terms: Vec<(i64, i64)> = Vec::new();
    let [b11, b12, b21, b22] = b;
    if !b11.has_no_terms() {
        terms.push((b11.val_or_max(), big_n));
    }
    if !b12.has_no_terms() {
        terms.push((b12.val_or_max(), 0));
    }
    if !b21.has_no_terms() {
        terms.push((b21.val_or_max(), big_n + 1));
    }
    if !b22.has_no_terms() {
        terms.push((b22.val_or_max(), 1));
    }
    let mut out = Vec::new();
    for i in 0..terms.len() {
        for j in i + 1..terms.len() {
            let (c1, k1) = terms[i];
            let (c2, k2) = terms[j];
            if k1 == k2 || (c2 - c1) % (k1 - k2) != 0 {
                continue;
            }
            let v = (c2 - c1) / (k1 - k2);
            let m = c1 + k1 * v;
            if terms.iter().all(|&(c, k)| c + k * v >= m) {
                out.push(v);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Searches `Φ̃`-stable lines of factor 0 with slopes known to `prec`
/// coefficients, over extensions of degree at most `max_ext`.
pub fn stable_lines(module: &PhiModule, prec: usize, max_ext: u32) -> Result<StableLines> {
    if prec == 0 || max_ext == 0 {
        return Err(Error::OutOfRange("prec and max_ext must be positive".into()));
    }
    let b = module.composite_matrix(0, module.n());
    let big_n = module.big_n();
    let mut lines = Vec::new();
    if b.get(0, 1).is_zero() {
        lines.push(StableLine {
            slope: Slope::Finite(Laurent::zero()),
            ext_degree: 1,
            field: module.field.clone(),
            exact: true,
        });
    }
    if b.get(1, 0).is_zero() {
        lines.push(StableLine { slope: Slope::Infinity, ext_degree: 1, field: module.field.clone(), exact: true });
    }
    let candidates = valuation_candidates(&b.e, big_n);
    for e in 1..=max_ext {
        if candidates.is_empty() {
            break;
        }
        if (module.field.order() as u64).saturating_pow(e) > crate::gf::MAX_SCAN_ORDER {
            break;
        }
        let emb = module.field.extension(e)?;
        let mapped = b.e.clone().map(|x| map_series(&x, &emb));
        let mut search = LineSearch { field: &emb.big, b: mapped, big_n, prec, nodes: 0, found: Vec::new() };
        for &v in &candidates {
            search.dfs(v, 0, Laurent::zero())?;
        }
        let found_any = !search.found.is_empty();
        for (f, exact) in search.found {
            lines.push(StableLine { slope: Slope::Finite(f), ext_degree: e, field: emb.big.clone(), exact });
        }
        if found_any {
            break;
        }
    }
    if lines.is_empty() {
        Ok(StableLines::NotFoundUpToBounds { prec, max_ext })
    } else {
        Ok(StableLines::Found(lines))
    }
}

pub fn is_simple(module: &PhiModule, prec: usize, max_ext: u32) -> Simplicity {
    if let Some((s, _)) = module.standard_form() {
        if s.rem_euclid(module.big_n() + 1) != 0 {
            return Simplicity::Simple;
        }
    }
    match stable_lines(module, prec, max_ext) {
        Ok(StableLines::Found(mut lines)) => Simplicity::NotSimple(lines.swap_remove(0)),
        _ => Simplicity::UnknownUpToBounds { prec, max_ext },
    }
}

/// The point `P = (P_0, …, P_{n-1})` with `Φ̄_i(P_i) = P_{i+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedPoint {
    pub points: Vec<BuildingPoint>,
}

pub fn fixed_point(module: &PhiModule) -> Result<FixedPoint> {
    let n = module.n();
    let x = VertexClass::base();
    let y = match module.phibar_iter(0, n, &BuildingPoint::Vertex(x.clone()))? {
        BuildingPoint::Vertex(y) => y,
        BuildingPoint::Edge { .. } => unreachable!("vertices map to vertices"),
    };
    let len = vertex_dist(&x, &y);
    let t: Rational = int(len) / int(module.big_n() + 1);
    let mut points = vec![point_on_geodesic(&x, &y, t)?];
    for i in 0..n - 1 {
        points.push(module.phibar(i, &points[i])?);
    }
    let back = module.phibar(n - 1, &points[n - 1])?;
    if back != points[0] {
        return Err(Error::FixedPointInconsistent(format!("Φ̄ moves the candidate by {}", dist(&back, &points[0]))));
    }
    Ok(FixedPoint { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::rat;

    fn one() -> FieldElement {
        FieldElement::ONE
    }

    #[test]
    fn phi_apply_examples() {
        let m = standard_module(2, 1, 1, 1, one()).unwrap();
        let l = m.phi_apply(0, &Lattice::standard()).unwrap();
        assert_eq!(l, Lattice { a: 1, b: 0, f: Laurent::zero() });
        let divs = crate::lattice::elementary_divisors(&l, &Lattice::standard(), &m.field).unwrap();
        assert_eq!(divs, (1, 0));
        let id = PhiModule::new(m.field.clone(), vec![Mat2::identity()]).unwrap();
        assert_eq!(id.phi_apply(0, &Lattice::standard()).unwrap(), Lattice::standard());
        let base = BuildingPoint::Vertex(VertexClass::base());
        assert_eq!(id.phibar(0, &base).unwrap(), base);
    }

    #[test]
    fn standard_composite() {
        let m = standard_module(3, 1, 2, 2, one()).unwrap();
        let b = m.composite_matrix(0, 2);
        // Φ̃(e1) = e2, Φ̃(e2) = α u^s e1
        assert_eq!(b.column(0), (Laurent::zero(), Laurent::one()));
        assert_eq!(b.column(1), (Laurent::u_pow(2), Laurent::zero()));
        assert_eq!(m.standard_form(), Some((2, one())));
    }

    #[test]
    fn fixed_points_of_standard_modules() {
        let m = standard_module(2, 1, 1, 1, one()).unwrap();
        let p = fixed_point(&m).unwrap();
        assert_eq!(
            p.points[0],
            BuildingPoint::Edge { v: VertexClass::base(), w: VertexClass::new(1, Laurent::zero()), t: rat(1, 3) }
        );
        let m = standard_module(3, 1, 1, 2, one()).unwrap();
        let p = fixed_point(&m).unwrap();
        assert_eq!(
            p.points[0],
            BuildingPoint::Edge { v: VertexClass::base(), w: VertexClass::new(1, Laurent::zero()), t: rat(1, 2) }
        );
        let m = standard_module(2, 1, 1, 0, one()).unwrap();
        assert_eq!(fixed_point(&m).unwrap().points[0], BuildingPoint::Vertex(VertexClass::base()));
    }

    #[test]
    fn stable_line_examples() {
        let m = standard_module(2, 1, 1, 3, one()).unwrap();
        match stable_lines(&m, 16, 2).unwrap() {
            StableLines::Found(lines) => {
                let Slope::Finite(f) = &lines[0].slope else { panic!("expected finite slope") };
                assert_eq!(f.val().unwrap(), 1);
                assert!(lines[0].exact);
            }
            other => panic!("expected a line, got {other:?}"),
        }
        let m = standard_module(2, 1, 1, 1, one()).unwrap();
        assert!(matches!(stable_lines(&m, 32, 4).unwrap(), StableLines::NotFoundUpToBounds { .. }));
        assert!(matches!(is_simple(&m, 32, 4), Simplicity::Simple));

        let f = Field::standard(2, 1).unwrap();
        let split = PhiModule::new(f, vec![Mat2::diag_pow(0, 1)]).unwrap();
        let StableLines::Found(lines) = stable_lines(&split, 8, 1).unwrap() else { panic!() };
        assert!(lines.iter().any(|l| l.slope == Slope::Infinity));
        assert!(lines.iter().any(|l| l.slope == Slope::Finite(Laurent::zero())));
        match is_simple(&split, 8, 1) {
            Simplicity::NotSimple(line) => assert_eq!(line.slope, Slope::Finite(Laurent::zero())),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_roundtrip() {
        let m = standard_module(3, 2, 2, 5, FieldElement(4)).unwrap();
        let json = serde_json::to_string(&m.to_json()).unwrap();
        let back: PhiModuleJson = serde_json::from_str(&json).unwrap();
        assert_eq!(PhiModule::from_json(&back).unwrap(), m);
        assert!(serde_json::from_str::<PhiModuleJson>(r#"{"p":2,"m_ext":1,"n":1,"A":[],"x":1}"#).is_err());
    }
}
