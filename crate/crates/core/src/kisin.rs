//! Points of the Kisin variety `C_ν(A)`: tuples of lattices `(𝔐_0, …, 𝔐_{n-1})`
//! with `Φ_{i-1}(φ^* 𝔐_{i-1})` in relative position at most `ν_i` to `𝔐_i`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{Field, FieldSpec};
use crate::lattice::{elementary_divisors, Lattice, LatticeJson, Mat2, VertexClass};
use crate::phimod::{fixed_point, PhiModule};
use crate::series::Laurent;
use crate::tree::{ball, dist, int, BuildingPoint, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(i64, i64)>", into = "Vec<(i64, i64)>")]
pub struct Cochar {
    pairs: Vec<(i64, i64)>,
}

impl TryFrom<Vec<(i64, i64)>> for Cochar {
    type Error = Error;

    fn try_from(pairs: Vec<(i64, i64)>) -> Result<Self> {
        Cochar::new(pairs)
    }
}

impl From<Cochar> for Vec<(i64, i64)> {
    fn from(c: Cochar) -> Self {
        c.pairs
    }
}

impl Cochar {
    pub fn new(pairs: Vec<(i64, i64)>) -> Result<Self> {
        if let Some((a, b)) = pairs.iter().find(|(a, b)| a < b) {
            return Err(Error::OutOfRange(format!("cocharacter pair ({a}, {b}) is not dominant")));
        }
        Ok(Cochar { pairs })
    }

    pub fn pairs(&self) -> &[(i64, i64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn r(&self, i: usize) -> i64 {
        let (a, b) = self.pairs[i];
        a - b
    }

    pub fn m(&self, i: usize) -> i64 {
        let (a, b) = self.pairs[i];
        a + b
    }

    /// Parses `"a,b;a,b;..."`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad cocharacter {text:?}"));
        let pairs = text
            .split(';')
            .map(|part| {
                let (a, b) = part.split_once(',').ok_or_else(bad)?;
                Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
            })
            .collect::<Result<Vec<_>>>()?;
        Cochar::new(pairs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KisinPoint {
    pub lattices: Vec<Lattice>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KisinPointJson {
    pub lattices: Vec<LatticeJson>,
}

impl KisinPoint {
    pub fn classes(&self) -> Vec<VertexClass> {
        self.lattices.iter().map(Lattice::class).collect()
    }

    pub fn to_json(&self, field: &Field) -> KisinPointJson {
        KisinPointJson { lattices: self.lattices.iter().map(|l| l.to_json(field)).collect() }
    }

    pub fn from_json(json: &KisinPointJson, field: &Field) -> Result<Self> {
        let lattices = json.lattices.iter().map(|l| Lattice::from_json(l, field)).collect::<Result<_>>()?;
        Ok(KisinPoint { lattices })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    /// Relative positions `(a_i, b_i)` per factor.
    Member(Vec<(i64, i64)>),
    NotMember(String),
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member(_))
    }
}

fn check_shape(module: &PhiModule, nu: &Cochar) -> Result<()> {
    if nu.len() != module.n() {
        return Err(Error::OutOfRange(format!("ν has {} factors, module has {}", nu.len(), module.n())));
    }
    Ok(())
}

/// Determinant valuations `s_i = val det 𝔐_i` shared by all points, from
/// `s_i = p s_{i-1} + val det A_i - m_i` around the cycle.
pub fn solve_det_classes(module: &PhiModule, nu: &Cochar) -> Result<Vec<i64>> {
    check_shape(module, nu)?;
    let n = module.n();
    let p = module.p() as i64;
    let c: Vec<i64> = (0..n).map(|i| Ok(module.det_shift((i + n - 1) % n)? - nu.m(i))).collect::<Result<_>>()?;
    // s_0 = p^n s_0 + Σ_k p^k c_{-k}
    let mut acc: i128 = 0;
    let mut pk: i128 = 1;
    for k in 0..n {
        acc += pk * c[(n - k) % n] as i128;
        pk *= p as i128;
    }
    let denom = pk - 1;
    if (-acc) % denom != 0 {
        return Err(Error::EmptyDetClass);
    }
    let mut s = vec![(-acc / denom) as i64];
    for i in 1..n {
        s.push(p * s[i - 1] + c[i]);
    }
    Ok(s)
}

/// Membership via the relative position of `Φ_{i-1}(φ^*𝔐_{i-1})` and `𝔐_i`,
/// cross-checked against distances in the tree.
pub fn is_member(module: &PhiModule, nu: &Cochar, x: &KisinPoint) -> Result<Membership> {
    check_shape(module, nu)?;
    let n = module.n();
    if x.lattices.len() != n {
        return Err(Error::OutOfRange(format!("point has {} lattices, expected {n}", x.lattices.len())));
    }
    let mut profile = Vec::with_capacity(n);
    let mut failure = None;
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let image = module.phi_apply(prev, &x.lattices[prev])?;
        let (a, b) = elementary_divisors(&image, &x.lattices[i], &module.field)?;
        let by_divisors = a + b == nu.m(i) && a - b <= nu.r(i);

        let d = image.class().distance(&x.lattices[i].class());
        let det_ok = image.det_val() - x.lattices[i].det_val() == nu.m(i);
        let by_building = det_ok && d <= nu.r(i);
        if by_divisors != by_building || d != a - b {
            return Err(Error::InternalDisagreement(format!("factor {i}: divisors ({a}, {b}) but tree distance {d}")));
        }
        if !by_divisors && failure.is_none() {
            failure = Some(format!("factor {i}: relative position ({a}, {b}) exceeds ν_{i} = {:?}", nu.pairs[i]));
        }
        profile.push((a, b));
    }
    Ok(match failure {
        Some(reason) => Membership::NotMember(reason),
        None => Membership::Member(profile),
    })
}

/// `R_i = Σ_{j<n} p^j r_{i-j} / (p^n - 1)`; every point has `d(𝔐̄_i, P_i) ≤ R_i`.
pub fn radius_bound(module: &PhiModule, nu: &Cochar) -> Result<Vec<Rational>> {
    check_shape(module, nu)?;
    let n = module.n();
    let p = module.p() as i64;
    let denom = module.big_n() - 1;
    Ok((0..n)
        .map(|i| {
            let mut num = 0;
            let mut pj = 1;
            for j in 0..n {
                num += pj * nu.r((i + n - j) % n);
                pj *= p;
            }
            int(num) / int(denom)
        })
        .collect())
}

/// The vertex nearest `p` whose lattices have determinant valuation `s`.
pub fn nearest_q(p: &BuildingPoint, s: i64) -> Result<VertexClass> {
    let parity = s.rem_euclid(2);
    let hits: Vec<&VertexClass> = p.anchors().into_iter().map(|(v, _)| v).filter(|v| v.parity() == parity).collect();
    match hits.as_slice() {
        [v] => Ok((*v).clone()),
        _ => Err(Error::AmbiguousQ(format!("no unique vertex of parity {parity} next to the point"))),
    }
}

/// Base change of the module's coefficients into the field described by `spec`.
pub fn base_change(module: &PhiModule, spec: &FieldSpec) -> Result<PhiModule> {
    if *spec == *module.field.spec() {
        return Ok(module.clone());
    }
    let own = module.field.spec();
    if spec.p != own.p || !spec.m.is_multiple_of(own.m) || *spec != FieldSpec::standard(spec.p, spec.m)? {
        return Err(Error::InvalidField(format!(
            "F_{}^{} is not a standard extension of the module's field",
            spec.p, spec.m
        )));
    }
    let emb = module.field.extension(spec.m / own.m)?;
    let map = |x: &Laurent| {
        Laurent::from_terms(&emb.big, x.terms().iter().map(|&(e, c)| (e, emb.apply(c)))).with_horizon(x.horizon())
    };
    let a = module.a.iter().map(|m| Mat2 { e: m.e.clone().map(|x| map(&x)) }).collect();
    PhiModule::new(emb.big.clone(), a)
}

/// Determinant classes, radius bounds and the fixed point behind an enumeration.
#[derive(Clone, Debug)]
pub struct Frame {
    pub s: Vec<i64>,
    pub radii: Vec<Rational>,
    pub fixed: Vec<BuildingPoint>,
}

pub fn frame(module: &PhiModule, nu: &Cochar) -> Result<Frame> {
    Ok(Frame {
        s: solve_det_classes(module, nu)?,
        radii: radius_bound(module, nu)?,
        fixed: fixed_point(module)?.points,
    })
}

fn candidates(
    center: &BuildingPoint,
    radius: Rational,
    anchor: &BuildingPoint,
    bound: Rational,
    s: i64,
    field: &Field,
) -> Vec<Lattice> {
    ball(center, radius, field)
        .into_iter()
        .filter(|v| v.parity() == s.rem_euclid(2))
        .filter(|v| dist(&BuildingPoint::Vertex(v.clone()), anchor) <= bound)
        .map(|v| v.lattice_with_det(s).expect("parity checked"))
        .collect()
}

/// All points of `C_ν(A)` over the field of `module`, sorted.
pub fn enumerate_points(module: &PhiModule, nu: &Cochar, slack: i64) -> Result<Vec<KisinPoint>> {
    let fr = frame(module, nu)?;
    let n = module.n();
    let field: &Arc<Field> = &module.field;
    let slack = int(slack);
    let seeds = candidates(&fr.fixed[0], fr.radii[0] + slack, &fr.fixed[0], fr.radii[0] + slack, fr.s[0], field);

    let extend = |seed: &Lattice| -> Result<Vec<KisinPoint>> {
        let mut out = Vec::new();
        let mut stack = vec![vec![seed.clone()]];
        while let Some(partial) = stack.pop() {
            let i = partial.len();
            if i == n {
                let point = KisinPoint { lattices: partial };
                if is_member(module, nu, &point)?.is_member() {
                    out.push(point);
                }
                continue;
            }
            let center = BuildingPoint::Vertex(module.phibar_vertex(i - 1, &partial[i - 1].class())?);
            for l in candidates(&center, int(nu.r(i)), &fr.fixed[i], fr.radii[i] + slack, fr.s[i], field) {
                let mut next = partial.clone();
                next.push(l);
                stack.push(next);
            }
        }
        Ok(out)
    };
    let per_seed: Vec<Vec<KisinPoint>> = seeds.par_iter().map(extend).collect::<Result<_>>()?;
    let mut points: Vec<KisinPoint> = per_seed.into_iter().flatten().collect();
    points.sort();
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldElement;
    use crate::phimod::standard_module;
    use crate::tree::rat;

    fn identity_module(p: u32, n: usize) -> PhiModule {
        PhiModule::new(Field::standard(p, 1).unwrap(), vec![Mat2::identity(); n]).unwrap()
    }

    #[test]
    fn det_classes() {
        let m = standard_module(2, 1, 1, 0, FieldElement::ONE).unwrap();
        // det A = -1 has valuation 0
        let nu = Cochar::new(vec![(3, 0)]).unwrap();
        assert_eq!(solve_det_classes(&m, &nu).unwrap(), vec![3]);
        assert_eq!(solve_det_classes(&identity_module(2, 1), &Cochar::new(vec![(0, 0)]).unwrap()).unwrap(), vec![0]);
        let nu = Cochar::new(vec![(3, 0), (9, 0)]).unwrap();
        let s = solve_det_classes(&identity_module(2, 2), &nu).unwrap();
        assert_eq!(s, vec![7, 5]);
        assert_eq!(s[0], 2 * s[1] - 3);
        assert_eq!(s[1], 2 * s[0] - 9);
        let nu = Cochar::new(vec![(1, 0)]).unwrap();
        assert_eq!(solve_det_classes(&identity_module(3, 1), &nu), Err(Error::EmptyDetClass));
    }

    #[test]
    fn membership_examples() {
        let m = identity_module(2, 1);
        let nu = Cochar::new(vec![(0, 0)]).unwrap();
        let base = KisinPoint { lattices: vec![Lattice::standard()] };
        assert_eq!(is_member(&m, &nu, &base).unwrap(), Membership::Member(vec![(0, 0)]));
        let off = KisinPoint { lattices: vec![Lattice { a: 1, b: -1, f: Laurent::zero() }] };
        assert!(!is_member(&m, &nu, &off).unwrap().is_member());
    }

    #[test]
    fn radius_examples() {
        let m = identity_module(2, 1);
        assert_eq!(radius_bound(&m, &Cochar::new(vec![(3, 0)]).unwrap()).unwrap(), vec![int(3)]);
        let m = identity_module(3, 2);
        let nu = Cochar::new(vec![(1, 0), (2, 0)]).unwrap();
        // R_0 = (r_0 + 3 r_1) / 8, R_1 = (r_1 + 3 r_0) / 8
        assert_eq!(radius_bound(&m, &nu).unwrap(), vec![rat(7, 8), rat(5, 8)]);
        let nu = Cochar::new(vec![(1, 1), (0, 0)]).unwrap();
        assert_eq!(radius_bound(&m, &nu).unwrap(), vec![int(0), int(0)]);
    }

    #[test]
    fn nearest_vertex() {
        let v = VertexClass::base();
        let w = VertexClass::new(1, Laurent::zero());
        let p = BuildingPoint::on_edge(v.clone(), w.clone(), rat(1, 3));
        assert_eq!(nearest_q(&p, 0).unwrap(), v);
        assert_eq!(nearest_q(&p, 3).unwrap(), w);
        assert!(nearest_q(&BuildingPoint::Vertex(v), 1).is_err());
    }

    #[test]
    fn cochar_parsing() {
        assert_eq!(Cochar::parse("2,-1; 3,0").unwrap().pairs(), &[(2, -1), (3, 0)]);
        assert!(Cochar::parse("0,1").is_err());
        assert!(Cochar::parse("x").is_err());
        let c: Cochar = serde_json::from_str("[[2,1]]").unwrap();
        assert_eq!(c.r(0), 1);
        assert!(serde_json::from_str::<Cochar>("[[1,2]]").is_err());
    }

    #[test]
    fn identity_enumeration_is_the_fixed_chain() {
        let m = identity_module(2, 1);
        let pts = enumerate_points(&m, &Cochar::new(vec![(0, 0)]).unwrap(), 0).unwrap();
        assert_eq!(pts, vec![KisinPoint { lattices: vec![Lattice::standard()] }]);
    }
}
