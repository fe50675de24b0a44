//! Constructions that connect points of `C_ν(A)`: Schubert-ball reductions,
//! chain fibres, `ℙ¹`-families of lattices, the `𝔐(Q_i)` hubs, and the
//! certificate graph assembled from them.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{Field, FieldElement};
use crate::kisin::{frame, is_member, nearest_q, radius_bound, solve_det_classes, Cochar, Frame, KisinPoint};
use crate::lattice::{hnf_generators, Lattice, Mat2, VertexClass};
use crate::phimod::PhiModule;
use crate::series::Laurent;
use crate::tree::{
    ball, dist, geodesic, int, midpoint, on_geodesic, on_segment, point_between, rat, BuildingPoint, Rational,
};

/// Lattices of determinant valuation `det_class` whose class lies within
/// `radius` of `center`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallDescription {
    pub center: BuildingPoint,
    pub radius: Rational,
    pub det_class: i64,
}

impl BallDescription {
    pub fn contains(&self, v: &VertexClass) -> bool {
        v.parity() == self.det_class.rem_euclid(2)
            && dist(&BuildingPoint::Vertex(v.clone()), &self.center) <= self.radius
    }

    pub fn classes(&self, field: &Field) -> Vec<VertexClass> {
        if self.radius < int(0) {
            return Vec::new();
        }
        ball(&self.center, self.radius, field).into_iter().filter(|v| self.contains(v)).collect()
    }

    pub fn lattices(&self, field: &Field) -> Vec<Lattice> {
        self.classes(field).iter().map(|v| v.lattice_with_det(self.det_class).expect("parity checked")).collect()
    }
}

/// Largest `k ≤ bound` with `k ≡ parity (mod 2)`, if nonnegative.
fn largest_with_parity(bound: Rational, parity: i64) -> Option<i64> {
    let mut k = bound.floor().to_integer();
    if (k - parity).rem_euclid(2) != 0 {
        k -= 1;
    }
    (k >= 0).then_some(k)
}

/// The same lattice set as a ball around a vertex with integral radius, or
/// `None` when the set is empty.
pub fn refine(center: &BuildingPoint, radius: Rational, det_class: i64) -> Option<BallDescription> {
    let parity = det_class.rem_euclid(2);
    let (_, z, k) = center
        .anchors()
        .into_iter()
        .filter_map(|(z, off)| {
            largest_with_parity(radius - off, (parity - z.parity()).rem_euclid(2)).map(|k| (int(k) + off, z, k))
        })
        .max_by(|a, b| a.0.cmp(&b.0))?;
    Some(BallDescription { center: BuildingPoint::Vertex(z.clone()), radius: int(k), det_class })
}

/// Intersection of two balls as a single ball; `None` when `d(x1, x2) > r1 + r2`.
pub fn two_ball_reduce(
    x1: &BuildingPoint,
    r1: Rational,
    x2: &BuildingPoint,
    r2: Rational,
    det_class: i64,
) -> Option<BallDescription> {
    let d = dist(x1, x2);
    if d > r1 + r2 {
        return None;
    }
    let (y, big_r) = if r1 - r2 >= d {
        (x2.clone(), r2)
    } else if r2 - r1 >= d {
        (x1.clone(), r1)
    } else {
        let t = (d + r1 - r2) / int(2);
        (point_between(x1, x2, t).expect("t lies in [0, d]"), (r1 + r2 - d) / int(2))
    };
    Some(refine(&y, big_r, det_class).unwrap_or(BallDescription { center: y, radius: big_r, det_class }))
}

/// Projection of a vertex onto the image of `Φ̄_f`: the preimage of the
/// projected point and the distance `t` moved.
pub fn project_to_image(module: &PhiModule, f: usize, c: &VertexClass) -> Result<(BuildingPoint, i64)> {
    let field = &module.field;
    let p = module.p() as i64;
    let a = &module.a[(f + 1) % module.n()];
    // [A^{-1}] = [adj A] on classes
    let c0 = c.act(&a.adjugate(field), field)?;
    let e0 = c0.f.terms().iter().map(|t| t.0).find(|e| e.rem_euclid(p) != 0);
    let y0 = match e0 {
        Some(e) => VertexClass::new(e, c0.f.truncate_below(e)),
        None => c0.clone(),
    };
    let t = c0.d - y0.d;
    let d0 = y0.d.div_euclid(p);
    let j = y0.d.rem_euclid(p);
    let unphi = |x: &Laurent| x.unphi(module.p()).expect("image series is supported on pZ");
    let base = VertexClass::new(d0, unphi(&y0.f.truncate_below(p * d0)));
    let pre = if j == 0 {
        BuildingPoint::Vertex(base)
    } else {
        BuildingPoint::on_edge(base, VertexClass::new(d0 + 1, unphi(&y0.f)), rat(j, p))
    };
    Ok((pre, t))
}

/// Chain `𝔐_1, …, 𝔐_s` on consecutive factors starting at `start`, with the
/// ends fixed: `radii[k]` bounds slot `k + 2`, `dets[k]` is the determinant
/// valuation of slot `k + 2`.
#[derive(Clone, Debug)]
pub struct ChainProblem {
    pub start: usize,
    pub first: Lattice,
    pub last: Lattice,
    pub radii: Vec<Rational>,
    pub dets: Vec<i64>,
}

impl ChainProblem {
    pub fn slots(&self) -> usize {
        self.radii.len() + 1
    }

    /// Factor carrying slot `k` (1-based).
    pub fn factor(&self, module: &PhiModule, k: usize) -> usize {
        (self.start + k - 1) % module.n()
    }

    pub fn det(&self, k: usize) -> i64 {
        match k {
            1 => self.first.det_val(),
            k if k == self.slots() => self.last.det_val(),
            k => self.dets[k - 2],
        }
    }

    pub fn radius(&self, k: usize) -> Rational {
        self.radii[k - 2]
    }
}

/// The lattices that occur in slot 2 of some chain, as a single ball, by
/// propagating balls backwards from the last slot.
pub fn fiber_reduce(module: &PhiModule, prob: &ChainProblem) -> Result<Option<BallDescription>> {
    let s = prob.slots();
    if s < 3 || prob.dets.len() != s - 2 {
        return Err(Error::OutOfRange(format!("chain needs s >= 3 and s - 2 determinants, got s = {s}")));
    }
    let p = module.p() as i64;
    let mut center = prob.last.class();
    let mut rho = 0i64;
    for k in (2..s).rev() {
        let f = prob.factor(module, k);
        let image_parity = p * prob.det(k) + module.det_shift(f)?;
        let Some(r_eff) = largest_with_parity(prob.radius(k + 1), (prob.det(k + 1) + image_parity).rem_euclid(2))
        else {
            return Ok(None);
        };
        let (pre, t) = project_to_image(module, f, &center)?;
        let bound = rho + r_eff - t;
        if bound < 0 {
            return Ok(None);
        }
        match refine(&pre, int(bound) / int(p), prob.det(k)) {
            Some(b) => {
                center = b.center.as_vertex().expect("refined balls are vertex-centred").clone();
                rho = b.radius.to_integer();
            }
            None => return Ok(None),
        }
    }
    let anchor = module.phibar_vertex(prob.factor(module, 1), &prob.first.class())?;
    Ok(two_ball_reduce(
        &BuildingPoint::Vertex(center),
        int(rho),
        &BuildingPoint::Vertex(anchor),
        prob.radius(2),
        prob.det(2),
    ))
}

type Column = (Laurent, Laurent);

fn comb(a: &Column, c: FieldElement, b: &Column, field: &Field) -> Column {
    (a.0.add(&b.0.scale(c, field), field), a.1.add(&b.1.scale(c, field), field))
}

fn shift(a: &Column, k: i64) -> Column {
    (a.0.shift(k), a.1.shift(k))
}

/// `χ(z) = <w2 + z w1> + u^h S` with `S = <w1, w2>`, and `χ(∞) = <w1> + u^h S`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChiFamily {
    pub w1: Column,
    pub w2: Column,
    pub h: i64,
}

/// Parameters of `ℙ¹(F_q)` in family order: the field elements, then `∞`.
pub fn projective_line(field: &Field) -> Vec<Option<FieldElement>> {
    field.elements().map(Some).chain(std::iter::once(None)).collect()
}

impl ChiFamily {
    /// Family with `χ(0) = n1`, `χ(∞) = n2`.
    pub fn between(n1: &Lattice, n2: &Lattice, field: &Field) -> Result<Self> {
        if n1.det_val() != n2.det_val() {
            return Err(Error::DetMismatch);
        }
        let b1 = n1.basis();
        if n1 == n2 {
            return Ok(ChiFamily { w1: b1.column(0), w2: b1.column(1), h: 0 });
        }
        let b2 = n2.basis();
        let cols = [b1.column(0), b1.column(1), b2.column(0), b2.column(1)];
        let sum = hnf_generators(&cols, field)?.scale(1);
        let outside = |c: &Column| -> Result<bool> { Ok(!sum.contains(&c.0, &c.1, field)?) };
        let pick = |b: &Mat2| -> Result<Column> {
            for k in 0..2 {
                if outside(&b.column(k))? {
                    return Ok(b.column(k));
                }
            }
            Err(Error::InternalDisagreement("lattice lies in u(N1 + N2)".into()))
        };
        let h = n1.class().distance(&n2.class()) / 2;
        Ok(ChiFamily { w1: pick(&b2)?, w2: pick(&b1)?, h })
    }

    pub fn center(&self, field: &Field) -> Result<Lattice> {
        hnf_generators(&[self.w1.clone(), self.w2.clone()], field)
    }

    pub fn member(&self, z: Option<FieldElement>, field: &Field) -> Result<Lattice> {
        match z {
            Some(z) => hnf_generators(&[comb(&self.w2, z, &self.w1, field), shift(&self.w1, self.h)], field),
            None => hnf_generators(&[self.w1.clone(), shift(&self.w2, self.h)], field),
        }
    }

    pub fn members(&self, field: &Field) -> Result<Vec<Lattice>> {
        projective_line(field).into_iter().map(|z| self.member(z, field)).collect()
    }
}

pub fn chi_family(n1: &Lattice, n2: &Lattice, field: &Field) -> Result<Vec<Lattice>> {
    ChiFamily::between(n1, n2, field)?.members(field)
}

/// Module, cocharacter and the derived data the constructions share.
#[derive(Clone, Debug)]
pub struct Context {
    pub module: PhiModule,
    pub nu: Cochar,
    pub frame: Frame,
    pub q: Vec<VertexClass>,
}

impl Context {
    pub fn new(module: PhiModule, nu: Cochar) -> Result<Self> {
        let frame = frame(&module, &nu)?;
        Self::from_frame(module, nu, frame)
    }

    /// Context around a given `Φ̄`-fixed point, for modules without a
    /// standard form.
    pub fn with_fixed(module: PhiModule, nu: Cochar, fixed: Vec<BuildingPoint>) -> Result<Self> {
        for i in 0..module.n() {
            if module.phibar(i, &fixed[i])? != fixed[(i + 1) % module.n()] {
                return Err(Error::FixedPointInconsistent(format!("Φ̄_{i} does not carry P_{i} to the next point")));
            }
        }
        let frame = Frame { s: solve_det_classes(&module, &nu)?, radii: radius_bound(&module, &nu)?, fixed };
        Self::from_frame(module, nu, frame)
    }

    fn from_frame(module: PhiModule, nu: Cochar, frame: Frame) -> Result<Self> {
        let q = frame.fixed.iter().zip(&frame.s).map(|(p, &s)| nearest_q(p, s)).collect::<Result<_>>()?;
        Ok(Context { module, nu, frame, q })
    }

    pub fn n(&self) -> usize {
        self.module.n()
    }

    fn field(&self) -> &Field {
        &self.module.field
    }

    fn prev(&self, i: usize) -> usize {
        (i + self.n() - 1) % self.n()
    }

    /// Is `P_i` on `[𝔐̄_i, Φ̄(𝔐̄_{i-1})]`?
    pub fn is_witness(&self, x: &KisinPoint, i: usize) -> Result<bool> {
        let prev = self.prev(i);
        let image = self.module.phibar_vertex(prev, &x.lattices[prev].class())?;
        Ok(on_geodesic(&self.frame.fixed[i], &x.lattices[i].class(), &image))
    }

    pub fn witness_index(&self, x: &KisinPoint) -> Result<usize> {
        for i in 0..self.n() {
            if self.is_witness(x, i)? {
                return Ok(i);
            }
        }
        Err(Error::NoWitness(format!("no factor has P_i between 𝔐_i and Φ̄(𝔐_(i-1)) for {:?}", x.classes())))
    }

    /// Targets `N` for the family at slot `i` of `x`: same determinant,
    /// within the radius bound, midpoint of `[N̄, 𝔐̄_i]` on `[P_i, 𝔐̄_i]`.
    pub fn targets(&self, x: &KisinPoint, i: usize) -> Vec<Lattice> {
        let m = x.lattices[i].class();
        let s = self.frame.s[i];
        let pi = &self.frame.fixed[i];
        ball(pi, self.frame.radii[i], self.field())
            .into_iter()
            .filter(|v| v.parity() == s.rem_euclid(2) && *v != m)
            .filter(|v| on_segment(&midpoint(&m, v), pi, &BuildingPoint::Vertex(m.clone())))
            .map(|v| v.lattice_with_det(s).expect("parity checked"))
            .collect()
    }

    /// A `ℙ¹(F_q)` of points through `x` moving slot `i` from `𝔐_i` to
    /// `target`, with later slots following along a chain of families.
    pub fn mainstep_family(&self, x: &KisinPoint, i: usize, target: &Lattice) -> Result<Vec<KisinPoint>> {
        let n = self.n();
        let field = self.field();
        let m = &x.lattices[i];
        if target.det_val() != m.det_val() {
            return Err(Error::PreconditionViolated("target has a different determinant".into()));
        }
        if !self.is_witness(x, i)? {
            return Err(Error::PreconditionViolated(format!("factor {i} is not a witness")));
        }
        let y = midpoint(&m.class(), &target.class());
        if !on_segment(&y, &self.frame.fixed[i], &BuildingPoint::Vertex(m.class())) {
            return Err(Error::PreconditionViolated("midpoint is not between P_i and 𝔐_i".into()));
        }
        let params = projective_line(field);
        if target == m {
            return Ok(vec![x.clone(); params.len()]);
        }
        let mut families: Vec<Option<ChiFamily>> = vec![None; n];
        families[i] = Some(ChiFamily::between(m, target, field)?);
        let mut prev = i;
        for step in 1..n {
            let j = (i + step) % n;
            let fam = families[prev].as_ref().expect("previous slot has a family");
            let a = &self.module.a[j];
            let image = |w: &Column| -> Column {
                let col = Mat2::from_columns(w.clone(), (Laurent::zero(), Laurent::zero())).phi(self.module.p());
                a.mul(&col, field).column(0)
            };
            let (b1, b2) = (image(&fam.w1), image(&fam.w2));
            let ph = self.module.p() as i64 * fam.h;
            let big_y = hnf_generators(&[b1.clone(), b2.clone()], field)?.class();
            let mj = x.lattices[j].class();
            let delta = big_y.distance(&mj);
            // every image member is within ph + delta of 𝔐_j
            if ph + delta <= self.nu.r(j) {
                break;
            }
            // in the frame (b1, b2) the images are the classes (ph, z)
            let frame = Mat2::from_columns(b1.clone(), b2.clone());
            let local = mj.act(&frame.adjugate(field), field)?;
            let aligned = local.d == delta && local.f.val_or_max() >= 1;
            if !aligned {
                return Err(Error::PreconditionViolated(format!(
                    "factor {j}: 𝔐_j is not in the direction of the image family"
                )));
            }
            let g = &local.f;
            let w2 = (b1.0.mul(g, field).add(&b2.0, field), b1.1.mul(g, field).add(&b2.1, field));
            families[j] = Some(ChiFamily { w1: b1, w2, h: delta });
            prev = j;
        }
        params
            .into_iter()
            .map(|z| {
                let lattices = (0..n)
                    .map(|k| match &families[k] {
                        Some(fam) => {
                            let class = fam.member(z, field)?.class();
                            class.lattice_with_det(x.lattices[k].det_val())
                        }
                        None => Ok(x.lattices[k].clone()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let point = KisinPoint { lattices };
                if !is_member(&self.module, &self.nu, &point)?.is_member() {
                    return Err(Error::MembershipLost(format!("parameter {z:?} gives {:?}", point.classes())));
                }
                Ok(point)
            })
            .collect()
    }

    /// The tuple `𝔐(Q_i)`: `Q_i` in slot `i`, then greedily as close to `Q_j`
    /// as the bound `r_j` allows.
    pub fn construct_mq(&self, i: usize) -> Result<KisinPoint> {
        let n = self.n();
        let s = &self.frame.s;
        let mut lattices = vec![Lattice::standard(); n];
        lattices[i] = self.q[i].lattice_with_det(s[i])?;
        for step in 1..n {
            let j = (i + step) % n;
            let prev = self.prev(j);
            let g = self.module.phibar_vertex(prev, &lattices[prev].class())?;
            let len = self.q[j].distance(&g);
            let k0 = (len - self.nu.r(j)).max(0);
            let k = k0 + k0.rem_euclid(2);
            if k > len {
                return Err(Error::ConstraintEmpty(format!("factor {j}: no admissible lattice on [Q_j, Φ̄]")));
            }
            let v = geodesic(&self.q[j], &g)[k as usize].clone();
            lattices[j] = v.lattice_with_det(s[j])?;
        }
        Ok(KisinPoint { lattices })
    }

    /// Slot-`k` chain with neighbours fixed, as used by single-slot moves.
    pub fn slot_problem(&self, x: &KisinPoint, k: usize) -> ChainProblem {
        let prev = self.prev(k);
        let next = (k + 1) % self.n();
        ChainProblem {
            start: prev,
            first: x.lattices[prev].clone(),
            last: x.lattices[next].clone(),
            radii: vec![int(self.nu.r(k)), int(self.nu.r(next))],
            dets: vec![self.frame.s[k]],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Single,
    Chi,
    Mq,
}

impl Rule {
    pub fn tag(self) -> &'static str {
        match self {
            Rule::Single => "single",
            Rule::Chi => "chi",
            Rule::Mq => "mq",
        }
    }

    pub fn parse_list(text: &str) -> Result<BTreeSet<Rule>> {
        text.split(',')
            .map(|r| match r.trim() {
                "single" => Ok(Rule::Single),
                "chi" => Ok(Rule::Chi),
                "mq" => Ok(Rule::Mq),
                other => Err(Error::Parse(format!("unknown rule {other:?}"))),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Certificate {
    /// Points differ only in `slot`; both lie in its two-sided Schubert ball.
    Single { slot: usize },
    /// Both points lie on the family from `source` toward `target` in `slot`.
    Chi { source: usize, slot: usize, target: Lattice },
    /// Both points lie in the fibre of `pr_slot` through the hub `𝔐(Q_hub)`.
    Mq { hub: usize, slot: usize },
}

impl Certificate {
    pub fn rule(&self) -> Rule {
        match self {
            Certificate::Single { .. } => Rule::Single,
            Certificate::Chi { .. } => Rule::Chi,
            Certificate::Mq { .. } => Rule::Mq,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub cert: Certificate,
}

#[derive(Clone, Debug)]
pub struct CertGraph {
    pub nodes: Vec<KisinPoint>,
    pub edges: Vec<Edge>,
}

fn index_of(nodes: &[KisinPoint], x: &KisinPoint) -> Result<usize> {
    nodes
        .binary_search(x)
        .map_err(|_| Error::InternalDisagreement(format!("constructed point {:?} is not enumerated", x.classes())))
}

fn push_edge(edges: &mut Vec<Edge>, a: usize, b: usize, cert: Certificate) {
    if a != b {
        edges.push(Edge { a: a.min(b), b: a.max(b), cert });
    }
}

/// Certificate graph on the sorted, member-verified `points`.
pub fn build_graph(ctx: &Context, points: &[KisinPoint], rules: &BTreeSet<Rule>) -> Result<CertGraph> {
    let mut nodes = points.to_vec();
    nodes.sort();
    nodes.dedup();
    let n = ctx.n();
    let mut edges = Vec::new();

    if rules.contains(&Rule::Single) && n >= 2 {
        for k in 0..n {
            let mut groups: BTreeMap<Vec<&Lattice>, Vec<usize>> = BTreeMap::new();
            for (id, x) in nodes.iter().enumerate() {
                let key = x.lattices.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, l)| l).collect();
                groups.entry(key).or_default().push(id);
            }
            for ids in groups.values() {
                for (u, &a) in ids.iter().enumerate() {
                    for &b in &ids[u + 1..] {
                        push_edge(&mut edges, a, b, Certificate::Single { slot: k });
                    }
                }
            }
        }
    }

    if rules.contains(&Rule::Chi) {
        let per_point: Vec<Vec<Edge>> = (0..nodes.len())
            .into_par_iter()
            .map(|source| -> Result<Vec<Edge>> {
                let x = &nodes[source];
                let slot = ctx.witness_index(x)?;
                let mut local = Vec::new();
                for target in ctx.targets(x, slot) {
                    let family = ctx.mainstep_family(x, slot, &target)?;
                    let ids = family.iter().map(|y| index_of(&nodes, y)).collect::<Result<BTreeSet<_>>>()?;
                    let ids: Vec<usize> = ids.into_iter().collect();
                    for (u, &a) in ids.iter().enumerate() {
                        for &b in &ids[u + 1..] {
                            let cert = Certificate::Chi { source, slot, target: target.clone() };
                            push_edge(&mut local, a, b, cert);
                        }
                    }
                }
                Ok(local)
            })
            .collect::<Result<_>>()?;
        edges.extend(per_point.into_iter().flatten());
    }

    if rules.contains(&Rule::Mq) {
        let mut hubs = Vec::new();
        for i in 0..n {
            if let Ok(hub) = ctx.construct_mq(i) {
                if is_member(&ctx.module, &ctx.nu, &hub)?.is_member() {
                    hubs.push((i, index_of(&nodes, &hub)?));
                }
            }
        }
        for &(i, hub) in &hubs {
            for (id, x) in nodes.iter().enumerate() {
                if x.lattices[i] == nodes[hub].lattices[i] {
                    push_edge(&mut edges, id, hub, Certificate::Mq { hub: i, slot: i });
                }
            }
        }
        for &(i, a) in &hubs {
            for &(_, b) in &hubs {
                if let Some(k) = (0..n).find(|&k| nodes[a].lattices[k] == nodes[b].lattices[k]) {
                    push_edge(&mut edges, a, b, Certificate::Mq { hub: i, slot: k });
                }
            }
        }
    }

    edges.sort();
    edges.dedup_by(|e, f| e.a == f.a && e.b == f.b);
    Ok(CertGraph { nodes, edges })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of an undirected graph, each sorted, ordered by first node.
pub fn components_of(nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(nodes);
    for (a, b) in edges {
        uf.union(a, b);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for x in 0..nodes {
        let root = uf.find(x);
        groups.entry(root).or_default().push(x);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

impl CertGraph {
    pub fn components(&self) -> Vec<Vec<usize>> {
        components_of(self.nodes.len(), self.edges.iter().map(|e| (e.a, e.b)))
    }

    /// Components using only the edges of the given rules.
    pub fn components_with(&self, rules: &BTreeSet<Rule>) -> Vec<Vec<usize>> {
        components_of(
            self.nodes.len(),
            self.edges.iter().filter(|e| rules.contains(&e.cert.rule())).map(|e| (e.a, e.b)),
        )
    }

    /// Re-derives every certificate from scratch; returns the failing edges.
    pub fn replay(&self, ctx: &Context) -> Result<Vec<Edge>> {
        let bad = self
            .edges
            .par_iter()
            .map(|e| -> Result<Option<Edge>> { Ok((!self.check_edge(ctx, e)?).then(|| e.clone())) })
            .collect::<Result<Vec<_>>>()?;
        Ok(bad.into_iter().flatten().collect())
    }

    fn check_edge(&self, ctx: &Context, e: &Edge) -> Result<bool> {
        let (x, y) = (&self.nodes[e.a], &self.nodes[e.b]);
        let field = &ctx.module.field;
        match &e.cert {
            Certificate::Single { slot } => {
                let differ: Vec<usize> = (0..ctx.n()).filter(|&k| x.lattices[k] != y.lattices[k]).collect();
                if differ != [*slot] {
                    return Ok(false);
                }
                let prob = ctx.slot_problem(x, *slot);
                Ok(match fiber_reduce(&ctx.module, &prob)? {
                    Some(b) => {
                        !b.classes(field).is_empty()
                            && b.contains(&x.lattices[*slot].class())
                            && b.contains(&y.lattices[*slot].class())
                    }
                    None => false,
                })
            }
            Certificate::Chi { source, slot, target } => {
                let family = ctx.mainstep_family(&self.nodes[*source], *slot, target)?;
                Ok(family.contains(x) && family.contains(y))
            }
            Certificate::Mq { hub, slot } => {
                let h = ctx.construct_mq(*hub)?;
                let member = is_member(&ctx.module, &ctx.nu, &h)?.is_member();
                let through = (*x == h && y.lattices[*slot] == h.lattices[*slot])
                    || (*y == h && x.lattices[*slot] == h.lattices[*slot]);
                Ok(member && through)
            }
        }
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            nodes: (0..self.nodes.len()).collect(),
            edges: self.edges.iter().map(|e| (e.a, e.b, e.cert.rule().tag().to_string())).collect(),
            components: self.components(),
        }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph kisin {\n");
        for id in 0..self.nodes.len() {
            out.push_str(&format!("  {id};\n"));
        }
        for e in &self.edges {
            out.push_str(&format!("  {} -- {} [label=\"{}\"];\n", e.a, e.b, e.cert.rule().tag()));
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize, String)>,
    pub components: Vec<Vec<usize>>,
}
