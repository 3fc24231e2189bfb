use std::process::{Command, Output};

use serde_json::Value;

fn derham(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_derham"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut a = vec!["--format", "json"];
    a.extend_from_slice(args);
    let out = derham(&a);
    let v = serde_json::from_slice(&out.stdout).expect("json on stdout");
    (out.status.code().unwrap(), v)
}

#[test]
fn mesh_info_counts() {
    let out = derham(&["mesh-info", "--kind", "tri", "--nx", "2", "--ny", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("N=8, F=12, P=4, chi=0"), "{s}");

    let (code, v) = json(&["mesh-info", "--kind", "quad", "--nx", "3", "--ny", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["summary"]["counts"]["faces"], 24);
}

#[test]
fn invalid_mesh_exits_2() {
    let out = derham(&["mesh-info", "--kind", "quad", "--nx", "1", "--ny", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nx must be >= 2"));
    let out = derham(&["verify", "--diagram", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    let out = derham(&["verify", "--diagram", "quad-drt", "--k", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn naive_diagram_reproduces_its_deficit() {
    let (code, v) = json(&["verify", "--diagram", "quad-naive-k0", "--nx", "3", "--ny", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v[0]["rank_second"], 17);
    assert_eq!(v[0]["dim_ker_second"], 7);
    assert_eq!(v[0]["report"]["expected_failure"], true);
}

#[test]
fn enriched_quad_kernel() {
    let (code, v) = json(&["verify", "--diagram", "quad-enriched", "--k", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v[0]["dim_ker_second"], 17);
    assert_eq!(v[0]["report"]["schema"], 1);
}

#[test]
fn tri_range_passes() {
    let (code, v) = json(&["verify", "--diagram", "tri-dp", "--k", "0..2", "--workers", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn appendix_and_refcheck() {
    let (code, v) = json(&["appendix", "--nx", "3", "--ny", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["nullity"], 10);

    let (code, v) = json(&["refcheck", "--cell", "tri", "--k", "3", "--samples", "5"]);
    assert_eq!(code, 0);
    let rank = v[0]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "rank")
        .unwrap();
    assert_eq!(rank["computed"], "11");
}

#[test]
fn hodge_random_and_input() {
    let out = derham(&["hodge", "--diagram", "tri-dp", "--k", "1", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));

    let dir = std::env::temp_dir().join(format!("derham-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let field = dir.join("field.json");
    // tri(2x2), k = 0: dP_0² has 16 coefficients
    let coeffs: Vec<Value> = (0..16)
        .map(|i| Value::String(format!("{}/{}", i % 5 - 2, 1 + i % 3)))
        .collect();
    std::fs::write(&field, serde_json::to_string(&coeffs).unwrap()).unwrap();
    let report = dir.join("out.json");
    let (code, v) = json(&[
        "hodge",
        "--diagram",
        "tri-dp",
        "--input",
        field.to_str().unwrap(),
        "--output",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["parts"]["u_curl"].as_array().unwrap().len(), 16);
    assert!(std::fs::read_to_string(&report).unwrap().contains("u_harm"));

    std::fs::write(&field, "[\"1\"]").unwrap();
    let out = derham(&["hodge", "--diagram", "tri-dp", "--input", field.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn audit_passes() {
    let out = derham(&["audit", "--kind", "quad", "--k-max", "1"]);
    assert_eq!(out.status.code(), Some(0));
}
