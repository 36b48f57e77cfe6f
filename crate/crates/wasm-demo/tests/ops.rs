use std::fs;
use std::path::PathBuf;

use bdc_wasm_demo::{assess_csv, laplace_histogram, randomized_response_survey};

fn fixture(name: &str) -> String {
    fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)).unwrap()
}

#[test]
fn histogram_counts_every_draw() {
    let h = laplace_histogram(10.0, 0.5, 1.0, 50_000, 40, 1).unwrap();
    let counts: u64 = h["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts + h["outside"].as_u64().unwrap(), 50_000);
    assert_eq!(h["scale"], 2.0);
    assert!((h["mean"].as_f64().unwrap() - 10.0).abs() < 0.1);
    // P(|X| > 5b) = e^-5
    assert!(h["outside"].as_u64().unwrap() < 50_000 / 100);
    assert_eq!(laplace_histogram(0.0, 1.0, 1.0, 1000, 10, 9).unwrap(), laplace_histogram(0.0, 1.0, 1.0, 1000, 10, 9).unwrap());
}

#[test]
fn histogram_rejects_bad_input() {
    assert!(laplace_histogram(0.0, 0.0, 1.0, 10, 10, 1).is_err());
    assert!(laplace_histogram(0.0, 1.0, -1.0, 10, 10, 1).is_err());
    assert!(laplace_histogram(0.0, 1.0, 1.0, 0, 10, 1).is_err());
    assert!(laplace_histogram(0.0, 1.0, 1.0, 10, 0, 1).is_err());
}

#[test]
fn survey_estimate_tracks_truth() {
    let s = randomized_response_survey(1.0, 0.3, 100_000, 4).unwrap();
    assert!((s["estimate"].as_f64().unwrap() - 0.3).abs() < 0.02);
    let coin = randomized_response_survey(0.0, 0.3, 100_000, 4).unwrap();
    assert!((coin["flip_rate"].as_f64().unwrap() - 0.5).abs() < 0.01);
    assert!(coin["estimate"].is_null());
    assert!(randomized_response_survey(1.0, 1.5, 10, 1).is_err());
}

#[test]
fn assessment_matches_cli_fixture() {
    let roles = "municipio=quasi_identifier\nfaixa_etaria=quasi_identifier";
    let r = assess_csv(&fixture("gate_30pct.csv"), roles, "0.90", "0.30").unwrap();
    assert_eq!(r["decision"], "Reject");
    assert_eq!(r["roles"]["diagnostico"], "sensitive");
    let r = assess_csv(&fixture("gate_30pct.csv"), roles, "0.90", "0.31").unwrap();
    assert_eq!(r["decision"], "Publish");
    assert!(assess_csv("a,b\n1\n", "", "0.9", "0.3").is_err());
    assert!(assess_csv(&fixture("gate_30pct.csv"), "municipio", "0.9", "0.3").is_err());
    assert!(assess_csv(&fixture("gate_30pct.csv"), "", "high", "0.3").is_err());
}
