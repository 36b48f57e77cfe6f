//! Browser bindings for three privacy operations. Each takes plain values
//! and returns a JSON string; failures come back as `{"error": "..."}`.

use bdc_core::privacy::{
    debias_proportion, gate, DpParams, LaplaceNoise, Lexicon, MicrodataTable, RandomizedResponse, RiskThresholds,
    Role,
};
use rust_decimal::Decimal;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_DRAWS: u32 = 1_000_000;
const MAX_BINS: u32 = 200;

fn finish(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

/// Histogram of `draws` noisy releases of `value` with Laplace noise of
/// scale `sensitivity / epsilon`, over `value ± 5b`.
pub fn laplace_histogram(value: f64, epsilon: f64, sensitivity: f64, draws: u32, bins: u32, seed: u64) -> Result<Value, String> {
    if draws == 0 || draws > MAX_DRAWS {
        return Err(format!("draws must be in 1..={MAX_DRAWS}"));
    }
    if bins == 0 || bins > MAX_BINS {
        return Err(format!("bins must be in 1..={MAX_BINS}"));
    }
    let mut noise = LaplaceNoise::new(&DpParams { epsilon, sensitivity, seed }).map_err(|e| e.to_string())?;
    let b = noise.scale();
    let (lo, hi) = (value - 5.0 * b, value + 5.0 * b);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u32; bins as usize];
    let (mut sum, mut sq, mut outside) = (0.0, 0.0, 0u32);
    for _ in 0..draws {
        let x = value + noise.sample();
        sum += x;
        sq += x * x;
        if width > 0.0 && x >= lo && x < hi {
            counts[((x - lo) / width) as usize] += 1;
        } else if width == 0.0 {
            counts[0] += 1;
        } else {
            outside += 1;
        }
    }
    let n = draws as f64;
    let mean = sum / n;
    let variance = if draws > 1 { (sq - n * mean * mean) / (n - 1.0) } else { 0.0 };
    Ok(json!({
        "scale": b,
        "mean": mean,
        "variance": variance,
        "expected_variance": 2.0 * b * b,
        "lo": lo,
        "width": width,
        "counts": counts,
        "outside": outside,
    }))
}

/// Simulates a survey where `true_share` of respondents hold the bit and
/// each answers through randomized response.
pub fn randomized_response_survey(epsilon: f64, true_share: f64, respondents: u32, seed: u64) -> Result<Value, String> {
    if !(0.0..=1.0).contains(&true_share) {
        return Err("true share must be in [0, 1]".into());
    }
    if respondents == 0 || respondents > MAX_DRAWS {
        return Err(format!("respondents must be in 1..={MAX_DRAWS}"));
    }
    let mut rr = RandomizedResponse::new(epsilon, seed).map_err(|e| e.to_string())?;
    let holders = (true_share * respondents as f64).round() as u32;
    let mut yes = 0u32;
    let mut flipped = 0u32;
    for i in 0..respondents {
        let truth = i < holders;
        let answer = rr.respond(truth);
        yes += answer as u32;
        flipped += (answer != truth) as u32;
    }
    let observed = yes as f64 / respondents as f64;
    let estimate = debias_proportion(observed, epsilon);
    Ok(json!({
        "retention": rr.retention(),
        "flip_rate": flipped as f64 / respondents as f64,
        "observed": observed,
        "estimate": estimate,
        "truth": holders as f64 / respondents as f64,
    }))
}

/// Runs the publication gate over CSV text. Column roles come from the
/// built-in sensitive-term lexicon unless `roles` (`column=role` per line)
/// says otherwise.
pub fn assess_csv(csv: &str, roles: &str, attack_prob: &str, pop_fraction: &str) -> Result<Value, String> {
    let lexicon = Lexicon::lgpd_default();
    let mut explicit = Vec::new();
    for line in roles.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (col, role) = line.split_once('=').ok_or_else(|| format!("expected column=role, got `{line}`"))?;
        let role: Role = role.trim().parse()?;
        explicit.push((col.trim().to_string(), role));
    }
    let role_of = |name: &str| {
        explicit
            .iter()
            .find(|(c, _)| c == name)
            .map(|(_, r)| *r)
            .unwrap_or_else(|| lexicon.classify(name))
    };
    let table = MicrodataTable::from_csv(csv.as_bytes(), role_of).map_err(|e| e.to_string())?;
    let decimal = |name: &str, text: &str| text.trim().parse::<Decimal>().map_err(|e| format!("{name}: {e}"));
    let thresholds = RiskThresholds {
        attack_prob: decimal("attack probability", attack_prob)?,
        pop_fraction: decimal("population fraction", pop_fraction)?,
        ..RiskThresholds::default()
    };
    let qi = table.names_with_role(Role::QuasiIdentifier);
    let sensitive = table.names_with_role(Role::Sensitive);
    let report = gate(&table, &qi, &sensitive, &thresholds).map_err(|e| e.to_string())?;
    let mut out = report.to_json();
    out["roles"] = table
        .attributes()
        .iter()
        .map(|a| (a.name.clone(), Value::String(a.role.to_string())))
        .collect::<serde_json::Map<_, _>>()
        .into();
    Ok(out)
}

#[wasm_bindgen(js_name = laplaceHistogram)]
pub fn laplace_histogram_js(value: f64, epsilon: f64, sensitivity: f64, draws: u32, bins: u32, seed: u32) -> String {
    finish(laplace_histogram(value, epsilon, sensitivity, draws, bins, seed as u64))
}

#[wasm_bindgen(js_name = randomizedResponse)]
pub fn randomized_response_js(epsilon: f64, true_share: f64, respondents: u32, seed: u32) -> String {
    finish(randomized_response_survey(epsilon, true_share, respondents, seed as u64))
}

#[wasm_bindgen(js_name = assessCsv)]
pub fn assess_csv_js(csv: &str, roles: &str, attack_prob: &str, pop_fraction: &str) -> String {
    finish(assess_csv(csv, roles, attack_prob, pop_fraction))
}
