use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kisin_core::kisin::{Cochar, KisinPoint, KisinPointJson};
use kisin_core::oracle::window_enumerate;
use kisin_core::phimod::PhiModule;
use kisin_core::{Field, Mat2};
use serde_json::{json, Value};

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../golden")
}

fn kisin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kisin"))
        .args(args)
        .env("KISIN_GOLDEN_DIR", golden_dir())
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn fixed_point_offset_of_standard_module() {
    let v = json_of(&kisin(&["fixed-point", "--standard", "p=2,n=1,s=1"]));
    assert_eq!(v["offset"], "1/3");
    assert_eq!(v["points"].as_array().unwrap().len(), 1);
    assert_eq!(v["points"][0]["t"], "1/3");
}

#[test]
fn fixed_point_negative_twist() {
    let v = json_of(&kisin(&["fixed-point", "--standard", "p=3,n=2,s=-4"]));
    assert_eq!(v["offset"], "-2/5");
    assert_eq!(v["points"].as_array().unwrap().len(), 2);
}

#[test]
fn identity_enumeration_matches_window_oracle() {
    let field = Field::standard(2, 1).unwrap();
    let module = PhiModule::new(field.clone(), vec![Mat2::identity()]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("identity.json");
    std::fs::write(&cfg, json!({"module": module.to_json(), "nu": [[0, 0]]}).to_string()).unwrap();
    let v = json_of(&kisin(&["enumerate", "--config", cfg.to_str().unwrap()]));

    let oracle = window_enumerate(&module, &Cochar::new(vec![(0, 0)]).unwrap()).unwrap();
    assert_eq!(v["count"], oracle.len());
    let points: Vec<KisinPoint> = v["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| KisinPoint::from_json(&serde_json::from_value::<KisinPointJson>(p.clone()).unwrap(), &field).unwrap())
        .collect();
    assert_eq!(points, oracle);
}

#[test]
fn enumerate_verify_flag() {
    let v = json_of(&kisin(&["enumerate", "--standard", "p=2,n=2,s=1", "--nu", "3,0;2,0", "--verify"]));
    assert_eq!(v["verified"], true);
    assert!(v["count"].as_u64().unwrap() > 0);
}

#[test]
fn check_battery_seed_7() {
    let out = kisin(&["check", "battery", "--seed", "7"]);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{table}\n{}", stderr(&out));
    for suite in ["schubert", "fiber", "chi", "fixpoint", "battery"] {
        let row = table.lines().find(|l| l.starts_with(suite)).unwrap_or_else(|| panic!("no row for {suite}"));
        assert!(row.contains("match") && row.ends_with("PASS"), "{row}");
    }
}

#[test]
fn golden_mismatch_fails_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let run = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_kisin"))
            .args(["check", "fixpoint", "--seed", "3"])
            .args(extra)
            .env("KISIN_GOLDEN_DIR", dir.path())
            .output()
            .unwrap()
    };
    assert!(String::from_utf8_lossy(&run(&[]).stdout).contains("none"));
    assert!(run(&["--regenerate-golden"]).status.success());
    let path = dir.path().join("fixpoint-seed3.json");
    let mut stored: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    stored["values"]["offsets"][0] = json!("7/3");
    std::fs::write(&path, stored.to_string()).unwrap();
    assert_eq!(run(&[]).status.code(), Some(1));
}

#[test]
fn outputs_are_byte_identical() {
    let args = ["graph", "--standard", "p=2,n=3,s=7", "--nu", "5,2;6,3;2,1"];
    let (a, b) = (kisin(&args), kisin(&args));
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let report = |seed: &str| kisin(&["check", "chi", "--seed", seed]).stdout;
    assert_eq!(report("5"), report("5"));
}

#[test]
fn graph_json_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let (out, dot) = (dir.path().join("g.json"), dir.path().join("g.dot"));
    let res = kisin(&[
        "graph",
        "--standard",
        "p=2,n=3,s=7",
        "--nu",
        "5,2;6,3;2,1",
        "--out",
        out.to_str().unwrap(),
        "--dot",
        dot.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let nodes = v["nodes"].as_array().unwrap().len();
    assert_eq!(nodes, v["points"].as_array().unwrap().len());
    assert_eq!(v["components"].as_array().unwrap().len(), 1);
    let tags: std::collections::BTreeSet<&str> =
        v["edges"].as_array().unwrap().iter().map(|e| e[2].as_str().unwrap()).collect();
    assert_eq!(tags, ["chi", "mq", "single"].into_iter().collect());
    let dot = std::fs::read_to_string(&dot).unwrap();
    assert!(dot.starts_with("graph kisin {"));
    assert_eq!(dot.matches(" -- ").count(), v["edges"].as_array().unwrap().len());
}

#[test]
fn member_accepts_enumerated_point() {
    let v = json_of(&kisin(&["enumerate", "--standard", "p=3,n=1,s=1", "--nu", "3,0"]));
    let dir = tempfile::tempdir().unwrap();
    let point = dir.path().join("x.json");
    std::fs::write(&point, v["points"][0].to_string()).unwrap();
    let args = ["member", "--standard", "p=3,n=1,s=1", "--nu", "3,0", "--point", point.to_str().unwrap()];
    let m = json_of(&kisin(&args));
    assert_eq!(m["member"], true);
    assert_eq!(m["positions"], json!([[3, 0]]));
    let m =
        json_of(&kisin(&["member", "--standard", "p=3,n=1,s=1", "--nu", "2,1", "--point", point.to_str().unwrap()]));
    assert_eq!(m["member"], false);
}

#[test]
fn usage_errors_name_the_key() {
    let out = kisin(&["fixed-point", "--standard", "p=2,n=1,s=1,beta=2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("beta"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"standard": {"p": 2, "n": 1, "s": 1}, "precision": 9}"#).unwrap();
    let out = kisin(&["fixed-point", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("precision"));

    let out = kisin(&["graph", "--standard", "p=2,n=1,s=1", "--nu", "1,0", "--rules", "single,magic"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("magic"));

    let out = kisin(&["check", "everything"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("everything"));
}

#[test]
fn field_flag_base_changes() {
    let v = json_of(&kisin(&["standard", "--standard", "p=2,n=1,s=1", "--field", "2,2"]));
    assert_eq!(v["module"]["m_ext"], 2);
    assert_eq!(v["simplicity"], "simple");
    let out = kisin(&["standard", "--standard", "p=2,n=1,s=1", "--field", "3,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("field"));
}
