use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use postsel::format::{from_json, to_json, DiamondJson, MapJson, ReduceJson, ReportJson, TauJson, ToyJson};
use tempfile::TempDir;

fn postsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_postsel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_demo_map(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name);
    let mut full = vec!["demo", "map", "--quiet", "--out", path.to_str().unwrap()];
    full.extend_from_slice(args);
    let o = postsel(&full);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    path.to_str().unwrap().to_owned()
}

fn roundtrip<T>(text: &str)
where
    T: serde::Serialize + for<'de> serde::Deserialize<'de>,
{
    let parsed: T = from_json(text).unwrap();
    let again = to_json(&parsed);
    assert_eq!(again, text);
}

#[test]
fn version_names_release_and_stream() {
    let o = postsel(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("postsel ") && s.contains("rng stream"));
}

#[test]
fn tau_two_copies() {
    let o = postsel(&["tau", "--n", "2", "--d", "2", "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let t: TauJson = from_json(&stdout(&o)).unwrap();
    assert_eq!(t.g, 10);
    let want = [0.3, 0.3, 0.3, 0.1];
    assert_eq!(t.eigs.len(), 4);
    for (a, b) in t.eigs.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    roundtrip::<TauJson>(&stdout(&o));
}

#[test]
fn reduce_example() {
    let o = postsel(&["qkd", "reduce", "--eps", "1", "--n", "3", "--d", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let r: ReduceJson = from_json(&stdout(&o)).unwrap();
    assert_eq!(r.eps_bar, 0.015625);
    roundtrip::<ReduceJson>(&stdout(&o));
}

#[test]
fn floats_carry_seventeen_digits() {
    let o = postsel(&["qkd", "reduce", "--eps", "0.1", "--n", "3", "--d", "2"]);
    let text = stdout(&o);
    assert!(text.contains("1.0000000000000001e-1") || text.contains("1.0000000000000000e-1"), "{text}");
}

#[test]
fn check_twirled_map_holds() {
    let dir = TempDir::new().unwrap();
    let map = write_demo_map(dir.path(), "delta.json", &["--which", "twirled", "--n", "2", "--d", "2", "--seed", "4"]);
    let o = postsel(&["check", "--map", &map, "--n", "2", "--d", "2", "--kind", "strict", "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: ReportJson = from_json(&stdout(&o)).unwrap();
    assert!(r.holds);
    assert_eq!(r.g, 10);
    roundtrip::<ReportJson>(&stdout(&o));
}

#[test]
fn check_transcript_map_holds() {
    let dir = TempDir::new().unwrap();
    let map = write_demo_map(dir.path(), "t.json", &["--which", "transcript", "--n", "2", "--d", "2"]);
    let o = postsel(&["check", "--map", &map, "--n", "2", "--d", "2", "--kind", "transcript", "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn dnorm_of_resets_is_two() {
    let dir = TempDir::new().unwrap();
    let map = write_demo_map(dir.path(), "r.json", &["--which", "resets"]);
    let o = postsel(&["dnorm", "--map", &map, "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let r: DiamondJson = from_json(&stdout(&o)).unwrap();
    assert!((r.value - 2.0).abs() < 1e-6);
    roundtrip::<DiamondJson>(&stdout(&o));
}

#[test]
fn demo_maps_round_trip() {
    let dir = TempDir::new().unwrap();
    let map = write_demo_map(dir.path(), "m.json", &["--which", "id-minus-depol", "--p", "0.5"]);
    roundtrip::<MapJson>(&fs::read_to_string(map).unwrap());
}

#[test]
fn asymmetric_map_is_rejected() {
    let dir = TempDir::new().unwrap();
    let map = write_demo_map(dir.path(), "a.json", &["--which", "asymmetric"]);
    let o = postsel(&["check", "--map", &map, "--n", "2", "--d", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("covarian"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(postsel(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(postsel(&[]).status.code(), Some(2));
    assert_eq!(postsel(&["tau", "--n", "2"]).status.code(), Some(2));
    assert_eq!(postsel(&["--tol", "-1", "tau", "--n", "1", "--d", "2"]).status.code(), Some(2));
    assert_eq!(postsel(&["qkd", "reduce", "--n", "3", "--d", "2"]).status.code(), Some(2));
    assert_eq!(postsel(&["dnorm", "--map", "/nonexistent/map.json"]).status.code(), Some(2));
}

#[test]
fn size_guard_needs_override() {
    let o = postsel(&["tau", "--n", "40", "--d", "3", "--quiet"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_json_reports_path() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"din": 2, "dout": 2, "choi": {"rows": 4, "cols": 4, "dims": [2, 2], "re": [1, 2, "x"], "im": []}}"#,
    )
    .unwrap();
    let o = postsel(&["dnorm", "--map", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("choi.re"), "{}", stderr(&o));
}

#[test]
fn outputs_are_atomic_files() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("tau.json");
    let o = postsel(&["tau", "--n", "1", "--d", "2", "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
    roundtrip::<TauJson>(&fs::read_to_string(out).unwrap());
}

#[test]
fn batch_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = postsel(&["check", "--batch", "5", "--n", "1", "--d", "2", "--seed", "11", "--csv", p.to_str().unwrap(), "--quiet"]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("seed,n,d,lhs,rhs,slack"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn sweep_csv_columns() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("s.csv");
    let o = postsel(&[
        "qkd", "sweep", "--c", "1", "--delta", "0.1", "--d", "2", "--n-min", "10", "--n-max", "100000", "--points", "20", "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("n,exponent,bound,penalty_bits_exact,penalty_bits_bound\n"));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn toy_postselection_json() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("toy.json");
    let o = postsel(&["demo", "toy", "--n", "1", "--mode", "postselection", "--json", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(out).unwrap();
    let t: ToyJson = from_json(&text).unwrap();
    assert!(t.insecure);
    assert_eq!(t.g, Some(16));
    assert_eq!(t.mixture_ok, Some(true));
    roundtrip::<ToyJson>(&text);
}
