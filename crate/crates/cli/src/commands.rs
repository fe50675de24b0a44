//! The query subcommands. Each returns a JSON value; `main` writes it.

use kisin_core::connect::{build_graph, Context};
use kisin_core::kisin::{enumerate_points, is_member, KisinPointJson, Membership};
use kisin_core::oracle::window_enumerate;
use kisin_core::phimod::{fixed_point, is_simple, PhiModule, Simplicity};
use kisin_core::tree::{format_rational, int, PointJson};
use kisin_core::{BuildingPoint, Rational};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{canonical, emit};

/// Signed coordinate on the standard apartment, if the point lies on it.
pub fn apartment_coordinate(x: &BuildingPoint) -> Option<Rational> {
    match x {
        BuildingPoint::Vertex(v) if v.f.is_zero() => Some(int(v.d)),
        BuildingPoint::Edge { v, w, t } if v.f.is_zero() && w.f.is_zero() => Some(int(v.d) + *t * int(w.d - v.d)),
        _ => None,
    }
}

/// Extension degrees searched for a stable line.
const MAX_EXT: u32 = 2;

/// The module, in the form the `module` config key accepts, and its simplicity
/// up to `prec` and `MAX_EXT`.
pub fn standard(cfg: &RunConfig) -> Result<Value, CliError> {
    let module = cfg.module()?;
    let simplicity = match is_simple(&module, cfg.prec(), MAX_EXT) {
        Simplicity::Simple => json!("simple"),
        Simplicity::NotSimple(line) => json!({"not_simple": {"ext_degree": line.ext_degree, "exact": line.exact}}),
        Simplicity::UnknownUpToBounds { prec, max_ext } => json!({"unknown": {"prec": prec, "max_ext": max_ext}}),
    };
    Ok(json!({"module": module.to_json(), "simplicity": simplicity}))
}

pub fn member(cfg: &RunConfig) -> Result<Value, CliError> {
    let module = cfg.module()?;
    let nu = cfg.nu()?;
    let x = cfg.point(&module)?;
    Ok(match is_member(&module, &nu, &x)? {
        Membership::Member(pos) => json!({"member": true, "positions": pos}),
        Membership::NotMember(reason) => json!({"member": false, "reason": reason}),
    })
}

fn points_json(module: &PhiModule, points: &[kisin_core::kisin::KisinPoint]) -> Vec<KisinPointJson> {
    points.iter().map(|x| x.to_json(&module.field)).collect()
}

/// With `verify`, the result must equal the exhaustive window scan.
pub fn enumerate(cfg: &RunConfig, verify: bool) -> Result<Value, CliError> {
    let module = cfg.module()?;
    let nu = cfg.nu()?;
    let points = enumerate_points(&module, &nu, cfg.slack.unwrap_or(0))?;
    let mut out = json!({"count": points.len(), "points": points_json(&module, &points)});
    if verify {
        let oracle = window_enumerate(&module, &nu)?;
        if oracle != points {
            return Err(CliError::Verification(format!(
                "enumeration found {} points, window oracle {}",
                points.len(),
                oracle.len()
            )));
        }
        out["verified"] = json!(true);
    }
    Ok(out)
}

#[derive(Serialize)]
struct FixedPointOut {
    points: Vec<PointJson>,
    /// Apartment coordinate of the first point, "num/den".
    offset: Option<String>,
}

pub fn fixed_point_cmd(cfg: &RunConfig) -> Result<Value, CliError> {
    let module = cfg.module()?;
    let fp = fixed_point(&module)?;
    let out = FixedPointOut {
        points: fp.points.iter().map(|x| x.to_json(&module.field)).collect(),
        offset: apartment_coordinate(&fp.points[0]).map(|r| format_rational(&r)),
    };
    Ok(serde_json::to_value(out).expect("fixed point json"))
}

/// Emits the graph first, then fails if any certificate does not replay.
pub fn graph(cfg: &RunConfig) -> Result<Value, CliError> {
    let module = cfg.module()?;
    let nu = cfg.nu()?;
    let points = enumerate_points(&module, &nu, cfg.slack.unwrap_or(0))?;
    let ctx = Context::new(module.clone(), nu)?;
    let rules = cfg.rules();
    let graph = build_graph(&ctx, &points, &rules)?;
    if let Some(dot) = &cfg.dot {
        emit(&graph.to_dot(), Some(dot))?;
    }
    let failing = graph.replay(&ctx)?;
    let mut out = serde_json::to_value(graph.to_json()).expect("graph json");
    out["points"] = json!(points_json(&module, &graph.nodes));
    out["rules"] = json!(rules.iter().map(|r| r.tag()).collect::<Vec<_>>());
    if !failing.is_empty() {
        emit(&canonical(&out)?, cfg.out.as_deref())?;
        return Err(CliError::Verification(format!("{} edges fail replay", failing.len())));
    }
    Ok(out)
}
