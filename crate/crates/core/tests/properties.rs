use std::sync::Arc;

use kisin_core::connect::{chi_family, two_ball_reduce};
use kisin_core::oracle::{class_distance, geodesic_by_descent, two_ball_scan};
use kisin_core::phimod::standard_module;
use kisin_core::tree::{dist, geodesic, int, midpoint, rat, vertex_dist};
use kisin_core::{BuildingPoint, Field, FieldElement, Lattice, Laurent, VertexClass};
use proptest::prelude::*;

fn field(q: u32) -> Arc<Field> {
    match q {
        4 => Field::standard(2, 2).unwrap(),
        8 => Field::standard(2, 3).unwrap(),
        9 => Field::standard(3, 2).unwrap(),
        q => Field::standard(q, 1).unwrap(),
    }
}

fn series(f: &Field, lo: i64, codes: &[u32]) -> Laurent {
    Laurent::from_terms(f, codes.iter().enumerate().map(|(k, &c)| (lo + k as i64, f.from_code(c % f.order()).unwrap())))
}

fn class(f: &Field, d: i64, codes: &[u32]) -> VertexClass {
    VertexClass::new(d, series(f, d - codes.len() as i64, codes))
}

fn codes() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..9, 0..5)
}

proptest! {
    #[test]
    fn field_axioms(q in prop::sample::select(vec![2u32, 3, 4, 5, 8, 9]), a in 0u32..9, b in 0u32..9, c in 0u32..9) {
        let f = field(q);
        let [a, b, c] = [a, b, c].map(|x| f.from_code(x % q).unwrap());
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.add(a, f.neg(a)), f.zero());
        if !a.is_zero() {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
        }
        prop_assert_eq!(f.pow(a, q as u64), a);
    }

    #[test]
    fn series_ring_laws(q in prop::sample::select(vec![2u32, 3, 4]), x in codes(), y in codes(), z in codes(), lo in -3i64..3) {
        let f = field(q);
        let (x, y, z) = (series(&f, lo, &x), series(&f, 0, &y), series(&f, -1, &z));
        prop_assert_eq!(x.mul(&y, &f), y.mul(&x, &f));
        prop_assert_eq!(x.mul(&y, &f).mul(&z, &f), x.mul(&y.mul(&z, &f), &f));
        prop_assert_eq!(x.mul(&y.add(&z, &f), &f), x.mul(&y, &f).add(&x.mul(&z, &f), &f));
        prop_assert_eq!(x.phi(f.p()).mul(&y.phi(f.p()), &f), x.mul(&y, &f).phi(f.p()));
    }

    #[test]
    fn series_inverse(q in prop::sample::select(vec![2u32, 3, 4]), x in codes(), lo in -3i64..3) {
        let f = field(q);
        let x = series(&f, lo, &x);
        prop_assume!(!x.is_zero());
        let prod = x.mul(&x.inv(20, &f).unwrap(), &f);
        // x exact, inverse known to relative precision 20: product is 1 + O(u^20)
        prop_assert!(prod.sub(&Laurent::one(), &f).has_no_terms());
        prop_assert_eq!(prod.horizon(), Some(20));
    }

    #[test]
    fn tree_metric(q in prop::sample::select(vec![2u32, 3]), d1 in -3i64..4, c1 in codes(), d2 in -3i64..4, c2 in codes(), d3 in -3i64..4, c3 in codes()) {
        let f = field(q);
        let (a, b, c) = (class(&f, d1, &c1), class(&f, d2, &c2), class(&f, d3, &c3));
        let ab = vertex_dist(&a, &b);
        prop_assert_eq!(ab, vertex_dist(&b, &a));
        prop_assert_eq!(ab, class_distance(&a, &b, &f).unwrap());
        prop_assert!(ab <= vertex_dist(&a, &c) + vertex_dist(&c, &b));
        prop_assert_eq!((ab - a.parity() - b.parity()).rem_euclid(2), 0);
        let path = geodesic(&a, &b);
        prop_assert_eq!(path.len() as i64, ab + 1);
        prop_assert_eq!(&path, &geodesic_by_descent(&a, &b, &f));
        let m = midpoint(&a, &b);
        let (pa, pb) = (BuildingPoint::Vertex(a), BuildingPoint::Vertex(b));
        prop_assert_eq!(dist(&m, &pa), dist(&m, &pb));
        prop_assert_eq!(dist(&m, &pa) * int(2), int(ab));
    }

    #[test]
    fn frobenius_scales_distance(p in prop::sample::select(vec![2u32, 3]), n in 1usize..4, s in -6i64..7, d1 in -3i64..4, c1 in codes(), d2 in -3i64..4, c2 in codes()) {
        let m = standard_module(p, 1, n, s, FieldElement::ONE).unwrap();
        let f = &m.field;
        let (a, b) = (class(f, d1, &c1), class(f, d2, &c2));
        for i in 0..n {
            let (fa, fb) = (m.phibar_vertex(i, &a).unwrap(), m.phibar_vertex(i, &b).unwrap());
            prop_assert_eq!(vertex_dist(&fa, &fb), p as i64 * vertex_dist(&a, &b));
        }
    }

    #[test]
    fn chi_members_equidistant(q in prop::sample::select(vec![2u32, 3, 4]), d1 in -2i64..3, c1 in codes(), d2 in -2i64..3, c2 in codes(), det in -2i64..3) {
        let f = field(q);
        let (a, b) = (class(&f, d1, &c1), class(&f, d2, &c2));
        prop_assume!(a.parity() == b.parity() && a.parity() == det.rem_euclid(2));
        let (n1, n2) = (a.lattice_with_det(det).unwrap(), b.lattice_with_det(det).unwrap());
        let fam = chi_family(&n1, &n2, &f).unwrap();
        prop_assert_eq!(fam.len(), q as usize + 1);
        prop_assert_eq!(&fam[0], &n1);
        prop_assert_eq!(&fam[q as usize], &n2);
        let y = midpoint(&a, &b);
        let half = int(vertex_dist(&a, &b)) / int(2);
        for l in &fam {
            prop_assert_eq!(l.det_val(), det);
            prop_assert_eq!(dist(&BuildingPoint::Vertex(l.class()), &y), half);
        }
        if n1 != n2 {
            let mut classes: Vec<VertexClass> = fam.iter().map(Lattice::class).collect();
            classes.sort();
            classes.dedup();
            prop_assert_eq!(classes.len(), q as usize + 1);
        }
    }

    #[test]
    fn two_ball_matches_scan(q in prop::sample::select(vec![2u32, 3, 4]), d1 in -2i64..3, c1 in codes(), d2 in -2i64..3, c2 in codes(), r1 in 0i64..5, r2 in 0i64..17, t in 0i64..4, det in -2i64..3) {
        let f = field(q);
        let (a, b) = (class(&f, d1, &c1), class(&f, d2, &c2));
        let x1 = BuildingPoint::Vertex(a);
        let x2 = BuildingPoint::on_edge(b.clone(), b.parent(), rat(t, 4));
        let (r1, r2) = (int(r1), rat(r2, 4));
        let fast = two_ball_reduce(&x1, r1, &x2, r2, det).map(|b| b.classes(&f)).unwrap_or_default();
        prop_assert_eq!(fast, two_ball_scan(&x1, r1, &x2, r2, det, &f).unwrap());
    }
}
