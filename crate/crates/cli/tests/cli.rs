use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nb"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("run nb")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

fn key(text: &str, name: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{name}=")).map(str::to_string))
}

#[test]
fn coeffs_with_check_is_clean() {
    let o = nb(&["coeffs", "--form", "delta", "--nmax", "100", "--check"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("1 1"));
    assert_eq!(lines.next(), Some("2 -24"));
    assert_eq!(lines.next(), Some("3 252"));
    assert!(text.contains("11 534612\n"));
    assert_eq!(key(&text, "violations").as_deref(), Some("0"));
}

#[test]
fn zero_decomposes_to_the_empty_sum() {
    let o = nb(&["decompose", "--form", "delta", "--Z", "0", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["Z"], 0);
    assert_eq!(v["ell"], 0);
    assert_eq!(v["terms"], Value::Array(vec![]));
    assert_eq!(v["verified"], true);
}

#[test]
fn goldbach_nine() {
    let o = nb(&["--json", "wg", "solve", "--Z", "9", "--s", "2", "--e", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["primes"], serde_json::json!([7, 2]));
    assert_eq!(v["verified"], true);
}

#[test]
fn unsolvable_search_exits_one() {
    // 11 is not a sum of two primes.
    let o = nb(&["wg", "solve", "--Z", "11", "--s", "2", "--e", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("none"));
}

#[test]
fn wg_count_matches_enumeration() {
    let o = nb(&["--json", "wg", "count", "--Z", "100", "--s", "2", "--e", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let primes: Vec<u64> = (2..100u64)
        .filter(|n| (2..*n).take_while(|d| d * d <= *n).all(|d| n % d != 0))
        .collect();
    let ordered = primes
        .iter()
        .filter(|&&p| primes.contains(&(100 - p)))
        .count();
    assert_eq!(json(&o)["count"], ordered as u64);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(nb(&["decompose", "--form", "delta"]).status.code(), Some(2));
    assert_eq!(nb(&["frobnicate"]).status.code(), Some(2));
    let o = nb(&["wg", "count", "--Z", "10", "--s", "2", "--e", "1", "--predicate", "p0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = nb(&["coeffs", "--form", "no/such/file", "--nmax", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_constructive_route_exits_one() {
    let o = nb(&["decompose", "--form", "delta", "--Z", "77", "--nmax", "100"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[derive(serde::Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
struct DecompositionJson {
    #[serde(rename = "Z")]
    z: i128,
    route: String,
    ell: u64,
    terms: Vec<[u64; 2]>,
    verified: bool,
    max_index_ratio: Option<f64>,
}

#[test]
fn decompose_json_schema_round_trips() {
    for (form, z, route) in [("11a", "-12345", "constructive"), ("delta", "77", "search")] {
        let o = nb(&["decompose", "--form", form, "--Z", z, "--route", route, "--json"]);
        assert_eq!(o.status.code(), Some(0), "{form} {z}");
        let v = json(&o);
        let obj = v.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            ["Z", "ell", "max_index_ratio", "route", "terms", "verified"]
        );
        assert_eq!(v["Z"].to_string(), z);
        assert_eq!(v["route"], route);
        assert_eq!(v["verified"], true);
        let ell: u64 = v["terms"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| t[1].as_u64().unwrap())
            .sum();
        assert_eq!(v["ell"], ell);
        let typed: DecompositionJson = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(serde_json::to_vec(&typed).unwrap(), o.stdout.trim_ascii_end());
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["decompose", "--form", "11a", "--Z", "98765"];
    let a = nb(&args);
    let b = nb(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(key(&text, "verified").as_deref(), Some("true"));
}

#[test]
fn signs_report_key_values() {
    let o = nb(&["signs", "--form", "delta", "--nmax", "1000", "--density-at", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(key(&text, "n_f").as_deref(), Some("2"));
    assert_eq!(key(&text, "a_n_f").as_deref(), Some("-24"));
    assert_eq!(key(&text, "count_all").as_deref(), Some("168"));
    let bound: f64 = key(&text, "bound").unwrap().parse().unwrap();
    assert!((bound - 144f64.powf(0.375)).abs() < 1e-12);
}

#[test]
fn admissible_set_listing_and_repair() {
    let o = nb(&["admissible", "--form", "11a", "--M", "200", "--repair", "197"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# admissible k=1 M=200"));
    let primes: Vec<u64> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.parse().unwrap())
        .collect();
    assert!(primes.windows(2).all(|w| w[0] < w[1]));
    assert!(!primes.contains(&197));
    assert!(text.lines().last().unwrap().ends_with("verified=true"));

    let dyadic = nb(&["admissible", "--form", "11a", "--k", "1", "--M", "1000", "--dyadic", "--l0", "4"]);
    assert_eq!(dyadic.status.code(), Some(0));
    assert!(stdout(&dyadic).ends_with("31\n271\n"));
}

#[test]
fn out_file_reingests_to_the_same_table() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("l11.nbf");
    let file = file.to_str().unwrap();
    let o = nb(&["coeffs", "--form", "11a", "--nmax", "500", "--out", file]);
    assert_eq!(o.status.code(), Some(0));
    let builtin = nb(&["coeffs", "--form", "11a", "--nmax", "500"]);
    let ingested = nb(&["coeffs", "--form", file, "--nmax", "500"]);
    assert_eq!(ingested.status.code(), Some(0));
    assert_eq!(builtin.stdout, ingested.stdout);
}

fn cache_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn cache_round_trip_and_integrity_check() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let args = ["--cache-dir", cache, "coeffs", "--form", "delta", "--nmax", "3000"];

    let fresh = nb(&args);
    assert_eq!(fresh.status.code(), Some(0));
    assert_eq!(cache_files(dir.path()), ["delta-3000.nbf"]);

    let cached = nb(&args);
    assert_eq!(fresh.stdout, cached.stdout);

    // Corrupt a(2); the spot check must reject the entry and recompute.
    let path = dir.path().join("delta-3000.nbf");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replace("\n2 -24\n", "\n2 24\n")).unwrap();
    let repaired = nb(&args);
    assert_eq!(repaired.status.code(), Some(0));
    assert_eq!(fresh.stdout, repaired.stdout);
    assert!(std::fs::read_to_string(&path).unwrap().contains("\n2 -24\n"));
    assert_eq!(cache_files(dir.path()), ["delta-3000.nbf"]);
}
