//! Self-contained verification suites. Each recomputes its oracle from scratch
//! and returns the oracle values for the golden store.

use std::sync::Arc;

use kisin_core::connect::{build_graph, chi_family, fiber_reduce, two_ball_reduce, ChainProblem, Context, Rule};
use kisin_core::kisin::{base_change, enumerate_points, is_member, solve_det_classes, Cochar};
use kisin_core::oracle::{self, chain_scan, hnf_window, two_ball_scan, window_enumerate};
use kisin_core::phimod::{fixed_point, standard_module, PhiModule};
use kisin_core::tree::{dist, format_rational, int, midpoint, rat, Rational};
use kisin_core::{BuildingPoint, Field, FieldSpec, Lattice, Laurent, Mat2, VertexClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::commands::apartment_coordinate;

const SCHUBERT_TRIALS: usize = 120;
const FIBER_TRIALS: usize = 60;
const CHI_TRIALS: usize = 100;
const BATTERY_INSTANCES: usize = 20;
const BATTERY_MAX_POINTS: usize = 200;

pub const SUITES: [&str; 5] = ["schubert", "fiber", "chi", "fixpoint", "battery"];

pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    pub failures: Vec<String>,
    pub values: Value,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        CheckResult { name: name.into(), cases: 0, failures: Vec::new(), values: Value::Null }
    }

    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

/// Runs one suite; `battery` runs every other suite and then the variety checks.
pub fn run(name: &str, seed: u64) -> Option<Vec<CheckResult>> {
    Some(match name {
        "schubert" => vec![schubert(seed)],
        "fiber" => vec![fiber(seed)],
        "chi" => vec![chi(seed)],
        "fixpoint" => vec![fixpoint(seed)],
        "battery" => vec![schubert(seed), fiber(seed), chi(seed), fixpoint(seed), varieties(seed)],
        _ => return None,
    })
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
}

fn small_field(q: u32) -> Arc<Field> {
    match q {
        4 => Field::standard(2, 2),
        q => Field::standard(q, 1),
    }
    .expect("small fields are valid")
}

fn random_series(f: &Field, rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Laurent {
    Laurent::from_terms(f, (lo..hi).map(|e| (e, f.from_code(rng.gen_range(0..f.order())).expect("in range"))))
}

fn random_class(f: &Field, rng: &mut ChaCha8Rng) -> VertexClass {
    let d = rng.gen_range(-3..=3);
    VertexClass::new(d, random_series(f, rng, d - 4, d))
}

fn simple_params() -> Vec<(u32, usize, i64)> {
    let mut out = Vec::new();
    for p in [2u32, 3] {
        for n in 1..=3usize {
            let big = (p as i64).pow(n as u32) + 1;
            out.extend((-6..=6).filter(|s| s % big != 0).map(|s| (p, n, s)));
        }
    }
    out
}

fn schubert(seed: u64) -> CheckResult {
    let mut res = CheckResult::new("schubert");
    let mut rng = rng_for(seed, 1);
    let mut sizes = Vec::new();
    for t in 0..SCHUBERT_TRIALS {
        let q = [2u32, 3, 4][rng.gen_range(0..3)];
        let f = small_field(q);
        let a = random_class(&f, &mut rng);
        let b = if rng.gen_bool(0.5) {
            random_class(&f, &mut rng)
        } else {
            a.child(f.from_code(rng.gen_range(0..q)).expect("in range"), &f)
        };
        let x1 = BuildingPoint::Vertex(a);
        let x2 = if rng.gen_bool(0.3) {
            BuildingPoint::on_edge(b.clone(), b.parent(), rat(rng.gen_range(1..4), 4))
        } else {
            BuildingPoint::Vertex(b)
        };
        let (r1, r2) = (int(rng.gen_range(0..=4)), rat(rng.gen_range(0..=16), 4));
        let det = rng.gen_range(-3..=3);
        let scan = match two_ball_scan(&x1, r1, &x2, r2, det, &f) {
            Ok(s) => s,
            Err(e) => {
                res.expect(false, || format!("trial {t}: scan failed: {e}"));
                continue;
            }
        };
        let fast = two_ball_reduce(&x1, r1, &x2, r2, det).map(|b| b.classes(&f)).unwrap_or_default();
        res.expect(scan == fast, || format!("trial {t}: reduce {} vs scan {}", fast.len(), scan.len()));
        sizes.push(scan.len());
    }
    let mut radius_two = Vec::new();
    for q in [2u32, 3, 4] {
        let f = small_field(q);
        let o = BuildingPoint::Vertex(VertexClass::base());
        let count = two_ball_reduce(&o, int(2), &o, int(2), 0).map(|b| b.classes(&f).len()).unwrap_or(0);
        let expected = (q * q + q + 1) as usize;
        res.expect(count == expected, || format!("q={q}: radius-2 ball has {count} classes, expected {expected}"));
        radius_two.push(count);
    }
    res.values = json!({"sizes": sizes, "radius_two": radius_two});
    res
}

fn random_module(f: &Arc<Field>, n: usize, rng: &mut ChaCha8Rng) -> PhiModule {
    loop {
        let a = (0..n).map(|_| Mat2 { e: std::array::from_fn(|_| random_series(f, rng, 0, 3)) }).collect();
        if let Ok(m) = PhiModule::new(f.clone(), a) {
            return m;
        }
    }
}

/// Ends taken from a random admissible walk, so most problems are nonempty.
fn random_chain_problem(rng: &mut ChaCha8Rng) -> (PhiModule, ChainProblem) {
    let f = small_field([2u32, 3][rng.gen_range(0..2)]);
    let n = rng.gen_range(1..=3);
    let module = random_module(&f, n, rng);
    let s = rng.gen_range(3..=4usize);
    let radii: Vec<Rational> = (2..=s).map(|_| int(rng.gen_range(0..=3))).collect();
    let start = rng.gen_range(0..n);
    let first = random_class(&f, rng);
    let mut chain = vec![first.lattice_with_det(first.d).expect("own parity")];
    for k in 2..=s {
        let image = module.phi_apply((start + k - 2) % n, chain.last().expect("nonempty")).expect("invertible").class();
        let r = radii[k - 2].to_integer();
        let near: Vec<VertexClass> =
            hnf_window(&image, r, &f).into_iter().filter(|v| v.distance(&image) <= r).collect();
        let v = near[rng.gen_range(0..near.len())].clone();
        let det = v.d + 2 * rng.gen_range(-1..=1);
        chain.push(v.lattice_with_det(det).expect("same parity"));
    }
    let last = if rng.gen_bool(0.8) {
        chain[s - 1].clone()
    } else {
        let v = random_class(&f, rng);
        v.lattice_with_det(v.d).expect("own parity")
    };
    let dets = chain[1..s - 1].iter().map(Lattice::det_val).collect();
    (module, ChainProblem { start, first: chain[0].clone(), last, radii, dets })
}

fn fiber(seed: u64) -> CheckResult {
    let mut res = CheckResult::new("fiber");
    let mut rng = rng_for(seed, 2);
    let mut sizes = Vec::new();
    for t in 0..FIBER_TRIALS {
        let (module, prob) = random_chain_problem(&mut rng);
        let outcome = chain_scan(&module, &prob).and_then(|chains| {
            let mut second: Vec<Lattice> = chains.iter().map(|c| c[0].clone()).collect();
            second.sort();
            second.dedup();
            let fast = fiber_reduce(&module, &prob)?.map(|b| b.lattices(&module.field)).unwrap_or_default();
            Ok((second, fast))
        });
        match outcome {
            Ok((second, fast)) => {
                res.expect(second == fast, || format!("trial {t}: reduce {} vs scan {}", fast.len(), second.len()));
                sizes.push(second.len());
            }
            Err(e) => res.expect(false, || format!("trial {t}: {e}")),
        }
    }
    res.values = json!({"sizes": sizes});
    res
}

fn chi(seed: u64) -> CheckResult {
    let mut res = CheckResult::new("chi");
    let mut rng = rng_for(seed, 3);
    let mut radii = Vec::new();
    let mut t = 0;
    while t < CHI_TRIALS {
        let q = [2u32, 3, 4][rng.gen_range(0..3)];
        let f = small_field(q);
        let (a, b) = (random_class(&f, &mut rng), random_class(&f, &mut rng));
        if a.parity() != b.parity() {
            continue;
        }
        t += 1;
        let det = a.d + 2 * rng.gen_range(-1..=1);
        let (n1, n2) = (a.lattice_with_det(det).expect("parity"), b.lattice_with_det(det).expect("parity"));
        let fam = match chi_family(&n1, &n2, &f) {
            Ok(fam) => fam,
            Err(e) => {
                res.expect(false, || format!("trial {t}: {e}"));
                continue;
            }
        };
        let y = midpoint(&a, &b);
        let half = int(a.distance(&b)) / int(2);
        res.expect(fam.len() == q as usize + 1, || format!("trial {t}: {} members over F_{q}", fam.len()));
        res.expect(fam.first() == Some(&n1) && fam.last() == Some(&n2), || format!("trial {t}: endpoints"));
        let on_sphere = fam.iter().all(|l| l.det_val() == det && dist(&BuildingPoint::Vertex(l.class()), &y) == half);
        res.expect(on_sphere, || format!("trial {t}: member off the sphere around the midpoint"));
        if n1 != n2 {
            let mut classes: Vec<VertexClass> = fam.iter().map(Lattice::class).collect();
            classes.sort();
            classes.dedup();
            res.expect(classes.len() == q as usize + 1, || format!("trial {t}: repeated classes"));
        }
        radii.push(format_rational(&half));
    }
    res.values = json!({"radii": radii});
    res
}

fn fixpoint(seed: u64) -> CheckResult {
    let mut res = CheckResult::new("fixpoint");
    let mut rng = rng_for(seed, 4);
    let mut offsets = Vec::new();
    for (p, n, s) in simple_params() {
        let q_ext = if p == 2 { rng.gen_range(1..=2) } else { 1 };
        let field = Field::standard(p, q_ext).expect("standard field");
        let alpha = field.from_code(rng.gen_range(1..field.order())).expect("in range");
        let label = format!("p={p} n={n} s={s} alpha={}", alpha.code());
        let module = standard_module(p, q_ext, n, s, alpha).expect("valid parameters");
        let fp = match fixed_point(&module) {
            Ok(fp) => fp,
            Err(e) => {
                res.expect(false, || format!("{label}: {e}"));
                continue;
            }
        };
        let big = (p as i64).pow(n as u32) + 1;
        let at = apartment_coordinate(&fp.points[0]);
        res.expect(at == Some(rat(s, big)), || format!("{label}: first point at {at:?}"));
        let cyclic = (0..n).all(|i| module.phibar(i, &fp.points[i]).ok().as_ref() == Some(&fp.points[(i + 1) % n]));
        res.expect(cyclic, || format!("{label}: not cyclically fixed"));
        res.expect(fp.points.iter().all(|x| !x.is_vertex()), || format!("{label}: a fixed point is a vertex"));
        offsets.push(at.map(|r| format_rational(&r)));
    }
    res.values = json!({"offsets": offsets});
    res
}

fn connected(
    module: &PhiModule,
    nu: &Cochar,
    rules: &std::collections::BTreeSet<Rule>,
) -> kisin_core::Result<(usize, usize)> {
    let points = enumerate_points(module, nu, 0)?;
    let ctx = Context::new(module.clone(), nu.clone())?;
    let graph = build_graph(&ctx, &points, rules)?;
    Ok((graph.components().len(), graph.replay(&ctx)?.len()))
}

/// Seeded instances of standard modules: enumeration against the window
/// oracle, membership against the independent divisor check, witnesses,
/// and certificate-graph connectivity (escalating once to `q²`).
fn varieties(seed: u64) -> CheckResult {
    let mut res = CheckResult::new("battery");
    let mut rng = rng_for(seed, 5);
    let rules = Rule::parse_list("single,chi,mq").expect("known rules");
    let params = simple_params();
    let mut summary = Vec::new();
    let mut attempts = 0;
    while summary.len() < BATTERY_INSTANCES && attempts < 50 * BATTERY_INSTANCES {
        attempts += 1;
        let (p, n, s) = params[rng.gen_range(0..params.len())];
        let module = standard_module(p, 1, n, s, Field::standard(p, 1).expect("prime field").one()).expect("valid");
        let nu = Cochar::new(
            (0..n).map(|_| (rng.gen_range(-2..=2), rng.gen_range(0..=2))).map(|(b, r)| (b + r, b)).collect(),
        )
        .expect("dominant");
        if solve_det_classes(&module, &nu).is_err() {
            continue;
        }
        let label = format!("p={p} n={n} s={s} nu={:?}", nu.pairs());
        let points = match enumerate_points(&module, &nu, 0) {
            Ok(pts) if !pts.is_empty() && pts.len() <= BATTERY_MAX_POINTS => pts,
            Ok(_) => continue,
            Err(e) => {
                res.expect(false, || format!("{label}: enumerate: {e}"));
                continue;
            }
        };
        match window_enumerate(&module, &nu) {
            Ok(oracle) => {
                res.expect(oracle == points, || format!("{label}: {} points vs oracle {}", points.len(), oracle.len()))
            }
            Err(e) => res.expect(false, || format!("{label}: oracle: {e}")),
        }
        let agree = points.iter().all(|x| {
            let fast = is_member(&module, &nu, x).map(|m| m.is_member());
            matches!((fast, oracle::member(&module, &nu, x)), (Ok(true), Ok(true)))
        });
        res.expect(agree, || format!("{label}: membership disagreement"));
        let witnessed = Context::new(module.clone(), nu.clone())
            .map(|ctx| points.iter().all(|x| ctx.witness_index(x).is_ok()))
            .unwrap_or(false);
        res.expect(witnessed, || format!("{label}: point without witness"));
        let mut components = connected(&module, &nu, &rules);
        let mut escalated = false;
        if !matches!(components, Ok((1, 0))) {
            escalated = true;
            components = base_change(&module, &FieldSpec::standard(p, 2).expect("quadratic extension"))
                .and_then(|wider| connected(&wider, &nu, &rules));
        }
        match components {
            Ok((c, bad)) => {
                res.expect(c == 1, || format!("{label}: {c} components"));
                res.expect(bad == 0, || format!("{label}: {bad} edges fail replay"));
            }
            Err(e) => res.expect(false, || format!("{label}: graph: {e}")),
        }
        summary.push(json!({"instance": label, "points": points.len(), "escalated": escalated}));
    }
    res.expect(summary.len() == BATTERY_INSTANCES, || format!("only {} admissible instances", summary.len()));
    res.values = json!({"instances": summary});
    res
}
