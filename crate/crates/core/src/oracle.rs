//! Brute-force reference computations used to cross-check the fast paths.
//!
//! Nothing here walks the tree: candidates come from Hermite-form windows
//! and membership is decided from the matrix `𝔐_i^{-1} A_i φ(𝔐_{i-1})`.

use std::collections::BTreeSet;

use crate::connect::ChainProblem;
use crate::error::Result;
use crate::gf::Field;
use crate::kisin::{frame, Cochar, KisinPoint};
use crate::lattice::{elementary_divisors, Lattice, VertexClass};
use crate::phimod::PhiModule;
use crate::series::Laurent;
use crate::tree::{int, BuildingPoint, Rational};

/// Every class `(d, f)` with `|d - d_c| ≤ k` agreeing with the centre
/// below `floor((d + d_c - k) / 2)`: a superset of the radius-`k` ball.
pub fn hnf_window(center: &VertexClass, k: i64, field: &Field) -> Vec<VertexClass> {
    let mut out = Vec::new();
    for d in center.d - k..=center.d + k {
        let lo = (d + center.d - k).div_euclid(2);
        let fixed = center.f.truncate_below(lo.min(d));
        let mut fs = vec![fixed];
        for e in lo..d {
            fs = fs
                .into_iter()
                .flat_map(|f| field.elements().map(move |c| (f.clone(), c)))
                .map(|(f, c)| f.add(&Laurent::monomial(c, e), field))
                .collect();
        }
        out.extend(fs.into_iter().map(|f| VertexClass { d, f }));
    }
    out.sort();
    out
}

/// Relative position of `Φ_{i-1}(φ^*src)` and `dst` from the Cartan
/// decomposition of `dst^{-1} A_i φ(src)`: `(val det - min val, min val)`.
pub fn relative_position(module: &PhiModule, i: usize, src: &Lattice, dst: &Lattice) -> Result<(i64, i64)> {
    let field = &module.field;
    let g = dst.inverse_basis(field).mul(&module.a[i].mul(&src.basis().phi(module.p()), field), field);
    let low = g.e.iter().filter(|x| !x.is_zero()).map(|x| x.val()).collect::<Result<Vec<_>>>()?;
    let low = low.into_iter().min().expect("invertible matrix has a nonzero entry");
    let det = g.det(field).val()?;
    Ok((det - low, low))
}

pub fn member(module: &PhiModule, nu: &Cochar, x: &KisinPoint) -> Result<bool> {
    let n = module.n();
    for i in 0..n {
        let prev = (i + n - 1) % n;
        if !slot_ok(module, nu, i, &x.lattices[prev], &x.lattices[i])? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn slot_ok(module: &PhiModule, nu: &Cochar, i: usize, src: &Lattice, dst: &Lattice) -> Result<bool> {
    let (a, b) = relative_position(module, i, src, dst)?;
    Ok(a + b == nu.m(i) && a - b <= nu.r(i))
}

/// Exhaustive scan of windows of radius `ceil(R_i) + 2` around a vertex
/// next to `P_i`; later slots scan the radius-`r_i` window around the image
/// of the previous slot, restricted to their own window.
pub fn window_enumerate(module: &PhiModule, nu: &Cochar) -> Result<Vec<KisinPoint>> {
    let fr = frame(module, nu)?;
    let n = module.n();
    let field = &module.field;
    let windows: Vec<BTreeSet<VertexClass>> = (0..n)
        .map(|i| {
            let center = fr.fixed[i].anchors()[0].0.clone();
            let k = fr.radii[i].ceil().to_integer() + 2;
            hnf_window(&center, k, field).into_iter().filter(|v| v.parity() == fr.s[i].rem_euclid(2)).collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut stack: Vec<Vec<Lattice>> =
        windows[0].iter().map(|v| vec![v.lattice_with_det(fr.s[0]).expect("parity filtered")]).collect();
    while let Some(partial) = stack.pop() {
        let i = partial.len();
        if i == n {
            if slot_ok(module, nu, 0, &partial[n - 1], &partial[0])? {
                out.push(KisinPoint { lattices: partial });
            }
            continue;
        }
        let image = module.phi_apply(i - 1, &partial[i - 1])?.class();
        for v in hnf_window(&image, nu.r(i), field) {
            if !windows[i].contains(&v) {
                continue;
            }
            let l = v.lattice_with_det(fr.s[i])?;
            if slot_ok(module, nu, i, &partial[i - 1], &l)? {
                let mut next = partial.clone();
                next.push(l);
                stack.push(next);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Geodesic by repeatedly stepping to the neighbour closest to `w`.
pub fn geodesic_by_descent(v: &VertexClass, w: &VertexClass, field: &Field) -> Vec<VertexClass> {
    let mut path = vec![v.clone()];
    let mut cur = v.clone();
    while cur != *w {
        cur = cur.neighbors(field).into_iter().min_by_key(|x| x.distance(w)).expect("every vertex has neighbours");
        path.push(cur.clone());
    }
    path
}

/// Class distance `|a - b|` from the elementary divisors of the two lattices.
pub fn class_distance(v: &VertexClass, w: &VertexClass, field: &Field) -> Result<i64> {
    let (a, b) = elementary_divisors(&v.lattice_with_det(v.d)?, &w.lattice_with_det(w.d)?, field)?;
    Ok((a - b).abs())
}

/// Distance from a class to a point on an edge, through the nearer endpoint.
pub fn point_distance(v: &VertexClass, x: &BuildingPoint, field: &Field) -> Result<Rational> {
    let mut best: Option<Rational> = None;
    for (z, off) in x.anchors() {
        let d = int(class_distance(v, z, field)?) + off;
        best = Some(best.map_or(d, |b| b.min(d)));
    }
    Ok(best.expect("a point has an anchor"))
}

/// Classes of parity `det_class` within `r1` of `x1` and `r2` of `x2`,
/// scanned over a Hermite window around `x1`.
pub fn two_ball_scan(
    x1: &BuildingPoint,
    r1: Rational,
    x2: &BuildingPoint,
    r2: Rational,
    det_class: i64,
    field: &Field,
) -> Result<Vec<VertexClass>> {
    let center = x1.anchors()[0].0.clone();
    let k = r1.ceil().to_integer() + 1;
    let mut out = Vec::new();
    for v in hnf_window(&center, k, field) {
        if v.parity() == det_class.rem_euclid(2)
            && point_distance(&v, x1, field)? <= r1
            && point_distance(&v, x2, field)? <= r2
        {
            out.push(v);
        }
    }
    Ok(out)
}

fn chain_step_ok(module: &PhiModule, prob: &ChainProblem, k: usize, src: &Lattice, dst: &Lattice) -> Result<bool> {
    let f = prob.factor(module, k);
    let (a, b) = relative_position(module, f, src, dst)?;
    let m = module.p() as i64 * prob.det(k - 1) + module.det_shift(prob.factor(module, k - 1))? - prob.det(k);
    Ok(a + b == m && a - b <= prob.radius(k).floor().to_integer())
}

/// Every chain `(𝔐_2, …, 𝔐_{s-1})` of the problem, by exhaustive scan of
/// Hermite windows around the images.
pub fn chain_scan(module: &PhiModule, prob: &ChainProblem) -> Result<Vec<Vec<Lattice>>> {
    let s = prob.slots();
    let field = &module.field;
    let mut out = Vec::new();
    let mut stack: Vec<Vec<Lattice>> = vec![vec![prob.first.clone()]];
    while let Some(partial) = stack.pop() {
        let k = partial.len() + 1;
        let prev = partial.last().expect("chain starts with the first lattice");
        if k == s {
            if chain_step_ok(module, prob, k, prev, &prob.last)? {
                out.push(partial[1..].to_vec());
            }
            continue;
        }
        let image = module.phi_apply(prob.factor(module, k - 1), prev)?.class();
        let radius = prob.radius(k).floor().to_integer();
        for v in hnf_window(&image, radius, field) {
            let Ok(l) = v.lattice_with_det(prob.det(k)) else { continue };
            if chain_step_ok(module, prob, k, prev, &l)? {
                let mut next = partial.clone();
                next.push(l);
                stack.push(next);
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldElement;
    use crate::kisin::enumerate_points;
    use crate::phimod::standard_module;
    use crate::tree::ball;
    use crate::tree::BuildingPoint;

    #[test]
    fn window_contains_ball() {
        let f = Field::standard(2, 1).unwrap();
        let c = VertexClass::new(1, Laurent::monomial(FieldElement::ONE, -1));
        let w = hnf_window(&c, 3, &f);
        for v in ball(&BuildingPoint::Vertex(c.clone()), crate::tree::int(3), &f) {
            assert!(w.binary_search(&v).is_ok(), "{v:?} missing");
        }
    }

    #[test]
    fn enumeration_matches_window_scan() {
        let m = standard_module(2, 1, 1, 1, FieldElement::ONE).unwrap();
        for pairs in [vec![(2, -1)], vec![(1, 0)], vec![(2, 1)], vec![(3, 0)]] {
            let nu = Cochar::new(pairs).unwrap();
            let fast = enumerate_points(&m, &nu, 0).unwrap();
            let slow = window_enumerate(&m, &nu).unwrap();
            assert_eq!(fast, slow, "{nu:?}");
        }
    }
}
