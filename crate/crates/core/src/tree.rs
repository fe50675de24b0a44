//! Metric geometry of the Bruhat-Tits tree of `PGL_2(F_q((u)))`.
//!
//! Points are vertices or rational points inside an edge. Edges are stored
//! with the smaller endpoint first and the offset measured from it.

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::Field;
use crate::lattice::{VertexClass, VertexJson};

pub type Rational = Ratio<i64>;

pub fn rat(n: i64, d: i64) -> Rational {
    Ratio::new(n, d)
}

pub fn int(n: i64) -> Rational {
    Ratio::from_integer(n)
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Ratio::new(n, d))
        }
        None => Ok(int(s.trim().parse().map_err(|_| bad())?)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BuildingPoint {
    Vertex(VertexClass),
    /// Point at distance `t` (strictly between 0 and 1) from `v` on the edge `v < w`.
    Edge {
        v: VertexClass,
        w: VertexClass,
        t: Rational,
    },
}

impl BuildingPoint {
    /// The point at distance `t` from `a` on the edge `[a, b]`.
    pub fn on_edge(a: VertexClass, b: VertexClass, t: Rational) -> BuildingPoint {
        if t.is_zero() {
            return BuildingPoint::Vertex(a);
        }
        if t.is_one() {
            return BuildingPoint::Vertex(b);
        }
        if a < b {
            BuildingPoint::Edge { v: a, w: b, t }
        } else {
            BuildingPoint::Edge { v: b, w: a, t: Rational::one() - t }
        }
    }

    pub fn is_vertex(&self) -> bool {
        matches!(self, BuildingPoint::Vertex(_))
    }

    pub fn as_vertex(&self) -> Option<&VertexClass> {
        match self {
            BuildingPoint::Vertex(v) => Some(v),
            _ => None,
        }
    }

    /// Endpoints with the distance from this point to each.
    pub fn anchors(&self) -> Vec<(&VertexClass, Rational)> {
        match self {
            BuildingPoint::Vertex(v) => vec![(v, Rational::zero())],
            BuildingPoint::Edge { v, w, t } => vec![(v, *t), (w, Rational::one() - t)],
        }
    }

    pub fn to_json(&self, field: &Field) -> PointJson {
        match self {
            BuildingPoint::Vertex(v) => PointJson::Vertex { vertex: v.to_json(field) },
            BuildingPoint::Edge { v, w, t } => {
                PointJson::Edge { edge: [v.to_json(field), w.to_json(field)], t: format_rational(t) }
            }
        }
    }

    pub fn from_json(json: &PointJson, field: &Field) -> Result<Self> {
        match json {
            PointJson::Vertex { vertex } => Ok(BuildingPoint::Vertex(VertexClass::from_json(vertex, field)?)),
            PointJson::Edge { edge, t } => {
                let a = VertexClass::from_json(&edge[0], field)?;
                let b = VertexClass::from_json(&edge[1], field)?;
                if a.distance(&b) != 1 {
                    return Err(Error::Parse("edge endpoints are not adjacent".into()));
                }
                let t = parse_rational(t)?;
                if t < Rational::zero() || t > Rational::one() {
                    return Err(Error::Parse("edge offset outside [0, 1]".into()));
                }
                Ok(BuildingPoint::on_edge(a, b, t))
            }
        }
    }
}

/// `{"vertex": ...}` or `{"edge": [v, w], "t": "num/den"}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointJson {
    Vertex { vertex: VertexJson },
    Edge { edge: [VertexJson; 2], t: String },
}

/// Distance from a vertex to a point.
fn dist_vertex_point(a: &VertexClass, x: &BuildingPoint) -> Rational {
    x.anchors().into_iter().map(|(e, off)| int(a.distance(e)) + off).min().expect("point has an anchor")
}

pub fn dist(x: &BuildingPoint, y: &BuildingPoint) -> Rational {
    match (x, y) {
        (BuildingPoint::Vertex(a), _) => dist_vertex_point(a, y),
        (_, BuildingPoint::Vertex(b)) => dist_vertex_point(b, x),
        (BuildingPoint::Edge { v, w, t }, BuildingPoint::Edge { v: v2, w: w2, t: t2 }) => {
            if v == v2 && w == w2 {
                return (t - t2).abs();
            }
            x.anchors().into_iter().map(|(e, off)| dist_vertex_point(e, y) + off).min().expect("edge has anchors")
        }
    }
}

pub fn vertex_dist(a: &VertexClass, b: &VertexClass) -> i64 {
    a.distance(b)
}

fn ancestor(v: &VertexClass, depth: i64) -> VertexClass {
    VertexClass { d: depth, f: v.f.truncate_below(depth) }
}

/// The vertex after `v` on the geodesic from `v` to `w` (`v != w`).
pub fn step_toward(v: &VertexClass, w: &VertexClass) -> VertexClass {
    let k = v.meet_depth(w);
    if k < v.d {
        v.parent()
    } else {
        ancestor(w, v.d + 1)
    }
}

/// Vertices of `[v, w]` in order, both ends included.
pub fn geodesic(v: &VertexClass, w: &VertexClass) -> Vec<VertexClass> {
    let k = v.meet_depth(w);
    let mut path: Vec<VertexClass> = (k..=v.d).rev().map(|j| ancestor(v, j)).collect();
    path.extend((k + 1..=w.d).map(|j| ancestor(w, j)));
    path
}

/// The point at distance `t` from `v` along `[v, w]`.
pub fn point_on_geodesic(v: &VertexClass, w: &VertexClass, t: Rational) -> Result<BuildingPoint> {
    let len = v.distance(w);
    if t < Rational::zero() || t > int(len) {
        return Err(Error::OutOfRange(format!("{} not in [0, {len}]", format_rational(&t))));
    }
    let whole = t.floor().to_integer();
    let frac = t - int(whole);
    let path = geodesic(v, w);
    let start = path[whole as usize].clone();
    if frac.is_zero() {
        return Ok(BuildingPoint::Vertex(start));
    }
    Ok(BuildingPoint::on_edge(start, path[whole as usize + 1].clone(), frac))
}

/// Generalised geodesic point: `t` measured from `x` toward the vertex `w`.
pub fn point_toward(x: &BuildingPoint, w: &VertexClass, t: Rational) -> Result<BuildingPoint> {
    let total = dist_vertex_point(w, x);
    if t < Rational::zero() || t > total {
        return Err(Error::OutOfRange(format!("{} beyond segment", format_rational(&t))));
    }
    match x {
        BuildingPoint::Vertex(v) => point_on_geodesic(v, w, t),
        BuildingPoint::Edge { .. } => {
            // leave through the anchor that lies on the way to w
            let (anchor, off) = x
                .anchors()
                .into_iter()
                .find(|(e, off)| int(w.distance(e)) + off == total)
                .expect("some anchor lies on the geodesic");
            if t <= off {
                let other = x.anchors().into_iter().find(|(e, _)| *e != anchor).unwrap().0;
                // offset from the far anchor grows toward `anchor`
                let from_other = Rational::one() - off + t;
                return Ok(BuildingPoint::on_edge(other.clone(), anchor.clone(), from_other));
            }
            point_on_geodesic(anchor, w, t - off)
        }
    }
}

/// The point at distance `t` from `a` along `[a, b]`.
pub fn point_between(a: &BuildingPoint, b: &BuildingPoint, t: Rational) -> Result<BuildingPoint> {
    let total = dist(a, b);
    if t < Rational::zero() || t > total {
        return Err(Error::OutOfRange(format!("{} not in [0, {}]", format_rational(&t), format_rational(&total))));
    }
    match b {
        BuildingPoint::Vertex(w) => point_toward(a, w, t),
        BuildingPoint::Edge { v, w, t: tb } => {
            if let BuildingPoint::Edge { v: va, w: wa, t: ta } = a {
                if va == v && wa == w {
                    let off = if tb >= ta { *ta + t } else { *ta - t };
                    return Ok(BuildingPoint::on_edge(v.clone(), w.clone(), off));
                }
            }
            // enter b's edge through the endpoint facing a
            let (near, far, off) =
                if dist_vertex_point(v, a) + tb == total { (v, w, *tb) } else { (w, v, Rational::one() - tb) };
            let to_near = total - off;
            if t <= to_near {
                point_toward(a, near, t)
            } else {
                Ok(BuildingPoint::on_edge(near.clone(), far.clone(), t - to_near))
            }
        }
    }
}

/// The point of `[v, w]` closest to `x`.
pub fn project_to_segment(x: &BuildingPoint, v: &VertexClass, w: &VertexClass) -> BuildingPoint {
    let dvw = int(v.distance(w));
    let dvx = dist_vertex_point(v, x);
    let dwx = dist_vertex_point(w, x);
    let t = (dvx + dvw - dwx) / int(2);
    point_on_geodesic(v, w, t).expect("Gromov product lies in the segment")
}

pub fn midpoint(v: &VertexClass, w: &VertexClass) -> BuildingPoint {
    point_on_geodesic(v, w, rat(v.distance(w), 2)).expect("midpoint in range")
}

pub fn on_geodesic(x: &BuildingPoint, v: &VertexClass, w: &VertexClass) -> bool {
    dist_vertex_point(v, x) + dist_vertex_point(w, x) == int(v.distance(w))
}

/// Same as [`on_geodesic`] for a segment between arbitrary points.
pub fn on_segment(x: &BuildingPoint, a: &BuildingPoint, b: &BuildingPoint) -> bool {
    dist(a, x) + dist(x, b) == dist(a, b)
}

/// All vertices within `radius` of `center`, in sorted order.
pub fn ball(center: &BuildingPoint, radius: Rational, field: &Field) -> Vec<VertexClass> {
    let mut out = Vec::new();
    for (anchor, off) in center.anchors() {
        let r = radius - off;
        if r < Rational::zero() {
            continue;
        }
        let depth = r.floor().to_integer();
        let mut frontier = vec![(anchor.clone(), None::<VertexClass>)];
        out.push(anchor.clone());
        for _ in 0..depth {
            let mut next = Vec::new();
            for (v, prev) in &frontier {
                for nb in v.neighbors(field) {
                    if prev.as_ref() != Some(&nb) {
                        next.push((nb, Some(v.clone())));
                    }
                }
            }
            out.extend(next.iter().map(|(v, _)| v.clone()));
            frontier = next;
        }
    }
    out.sort();
    out.dedup();
    out.retain(|v| dist_vertex_point(v, center) <= radius);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldElement;
    use crate::series::Laurent;

    fn apt(k: i64) -> VertexClass {
        VertexClass::new(k, Laurent::zero())
    }

    #[test]
    fn distances() {
        let base = apt(0);
        // diag(u^2, u^-1) Λ0 has class d = 3
        assert_eq!(base.distance(&apt(3)), 3);
        let x = BuildingPoint::on_edge(apt(0), apt(1), rat(1, 3));
        assert_eq!(dist(&BuildingPoint::Vertex(base.clone()), &x), rat(1, 3));
        assert_eq!(dist(&x, &x), int(0));
        let y = BuildingPoint::on_edge(apt(1), apt(0), rat(1, 3));
        assert_eq!(dist(&x, &y), rat(1, 3));
    }

    #[test]
    fn geodesics_and_points() {
        let g = geodesic(&apt(0), &apt(2));
        assert_eq!(g, vec![apt(0), apt(1), apt(2)]);
        assert_eq!(geodesic(&apt(4), &apt(4)), vec![apt(4)]);
        assert_eq!(point_on_geodesic(&apt(0), &apt(2), int(0)).unwrap(), BuildingPoint::Vertex(apt(0)));
        assert_eq!(point_on_geodesic(&apt(0), &apt(2), int(2)).unwrap(), BuildingPoint::Vertex(apt(2)));
        assert_eq!(
            point_on_geodesic(&apt(0), &apt(1), rat(1, 3)).unwrap(),
            BuildingPoint::Edge { v: apt(0), w: apt(1), t: rat(1, 3) }
        );
        assert!(point_on_geodesic(&apt(0), &apt(1), int(2)).is_err());
        assert_eq!(midpoint(&apt(0), &apt(2)), BuildingPoint::Vertex(apt(1)));
        assert_eq!(midpoint(&apt(3), &apt(3)), BuildingPoint::Vertex(apt(3)));
    }

    #[test]
    fn geodesic_through_meet() {
        let one = FieldElement::ONE;
        let v = VertexClass::new(2, Laurent::monomial(one, 1));
        let w = VertexClass::new(1, Laurent::monomial(one, -1));
        let path = geodesic(&v, &w);
        assert_eq!(path.len() as i64, v.distance(&w) + 1);
        for pair in path.windows(2) {
            assert_eq!(pair[0].distance(&pair[1]), 1);
        }
        assert_eq!(step_toward(&v, &w), path[1]);
    }

    #[test]
    fn projection_examples() {
        let x = BuildingPoint::on_edge(apt(0), apt(1), rat(1, 2));
        assert_eq!(project_to_segment(&x, &apt(-1), &apt(3)), x);
        assert_eq!(project_to_segment(&x, &apt(5), &apt(5)), BuildingPoint::Vertex(apt(5)));
    }

    #[test]
    fn rational_strings() {
        assert_eq!(parse_rational("2/4").unwrap(), rat(1, 2));
        assert_eq!(format_rational(&rat(2, 4)), "1/2");
        assert_eq!(parse_rational("-3").unwrap(), int(-3));
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn ball_sizes() {
        let f = Field::standard(2, 1).unwrap();
        let b = ball(&BuildingPoint::Vertex(apt(0)), int(2), &f);
        assert_eq!(b.len(), 1 + 3 + 6);
        let e = BuildingPoint::on_edge(apt(0), apt(1), rat(1, 3));
        assert_eq!(ball(&e, int(1), &f).len(), 2);
        assert_eq!(ball(&e, rat(4, 3), &f).len(), 4);
    }
}
