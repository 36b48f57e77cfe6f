//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fail.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use bdc_core::etl::{self, IngestStatus, SourceSpec};
use bdc_core::privacy::{
    anonymize_k, check_k_anonymity, check_l_diversity, check_t_closeness, debias_proportion, gate, generalize,
    infer_risk, max_class_distance, reid_risk, Attribute, Decision, GeneralizationHierarchy, LaplaceNoise,
    MicrodataTable, RandomizedResponse, Ratio, RiskThresholds, Role,
};
use bdc_core::stat_store::StatisticalVariable;
use bdc_core::{Commons, NodeId};
use bdc_mixer::{router, spawn, ApiConfig, AppState, RemoteEndpoint};
use common::oracle::{self, Frac};
use common::{fixtures, random_table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;

const ORACLE_TABLES: u64 = 100;
const ORACLE_BUDGET: Duration = Duration::from_secs(30);
const ANON_FIXTURES: u64 = 100;
const DRAWS: usize = 100_000;
const LAPLACE_MEAN_TOL: f64 = 0.02;
const LAPLACE_VAR_REL_TOL: f64 = 0.05;
const RR_FLIP_TOL: f64 = 0.01;
const DEBIAS_TOL: f64 = 0.02;
const FEDERATION_BUDGET: Duration = Duration::from_secs(10);

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn id(s: &str) -> NodeId {
    NodeId::new(s).unwrap()
}

fn same(r: &Ratio, f: Frac) -> bool {
    *r.numer() == f.num && *r.denom() == f.den
}

fn oracle_equivalence() -> Check {
    let started = Instant::now();
    let attacks = ["0.90", "0.5", "1", "0.333", "0"];
    let ts = ["0", "0.2", "0.15", "0.5", "1"];
    let mut comparisons = 0usize;
    for seed in 0..ORACLE_TABLES {
        let rt = random_table(seed);
        let rows = rt.table.rows();
        let qi: Vec<usize> = rt.qi.iter().map(|q| rt.table.column_index(q).unwrap()).collect();
        let attack_text = attacks[seed as usize % attacks.len()];
        let attack = Frac::parse_decimal(attack_text);
        let attack_dec: Decimal = attack_text.parse().unwrap();
        let t_text = ts[seed as usize % ts.len()];

        let lib = reid_risk(&rt.table, &rt.qi, attack_dec).unwrap();
        let want = oracle::reid(rows, &qi);
        let (n, frac) = oracle::at_risk(&want, attack);
        ensure!(
            lib.per_record.iter().zip(&want).all(|(r, f)| same(r, *f)) && lib.at_risk == n && same(&lib.fraction_at_risk, frac),
            "table {seed}: reid_risk differs"
        );
        for k in 1..=5 {
            ensure!(
                check_k_anonymity(&rt.table, &rt.qi, k).unwrap() == oracle::k_anonymous(rows, &qi, k),
                "table {seed}: k-anonymity differs at k={k}"
            );
            comparisons += 1;
        }
        for s in &rt.sensitive {
            let col = rt.table.column_index(s).unwrap();
            let lib = infer_risk(&rt.table, &rt.qi, s, attack_dec).unwrap();
            let want = oracle::infer(rows, &qi, col);
            let (n, frac) = oracle::at_risk(&want, attack);
            ensure!(
                lib.per_record.iter().zip(&want).all(|(r, f)| same(r, *f)) && lib.at_risk == n && same(&lib.fraction_at_risk, frac),
                "table {seed}: infer_risk on {s} differs"
            );
            for l in 1..=3 {
                ensure!(
                    check_l_diversity(&rt.table, &rt.qi, s, l).unwrap() == oracle::l_diverse(rows, &qi, col, l),
                    "table {seed}: l-diversity differs at l={l}"
                );
            }
            ensure!(
                same(&max_class_distance(&rt.table, &rt.qi, s).unwrap(), oracle::max_distance(rows, &qi, col)),
                "table {seed}: class distance differs"
            );
            ensure!(
                check_t_closeness(&rt.table, &rt.qi, s, t_text.parse().unwrap()).unwrap()
                    == oracle::t_close(rows, &qi, col, Frac::parse_decimal(t_text)),
                "table {seed}: t-closeness differs at t={t_text}"
            );
            comparisons += 6;
        }
        comparisons += 1;
    }
    let took = started.elapsed();
    ensure!(took < ORACLE_BUDGET, "took {took:?}");
    Ok(format!("{ORACLE_TABLES} tables, {comparisons} exact comparisons, {took:.1?}"))
}

/// `risky` records sit in classes whose modal diagnosis share is at least
/// 0.9; the rest sit in evenly split classes.
fn gate_table(risky_classes: &[(usize, usize)], mixed: usize) -> MicrodataTable {
    let mut rows = Vec::new();
    let mut class = 0;
    for &(size, modal) in risky_classes {
        for i in 0..size {
            let dx = if i < modal { "J189" } else { "I219" };
            rows.push(vec![format!("m{class}"), "40-59".into(), dx.into()]);
        }
        class += 1;
    }
    let mut left = mixed;
    while left > 0 {
        let size = if left >= 20 { 10 } else { left };
        for i in 0..size {
            let dx = if i % 2 == 0 { "J189" } else { "C509" };
            rows.push(vec![format!("m{class}"), "60+".into(), dx.into()]);
        }
        class += 1;
        left -= size;
    }
    let attrs = [("municipio", Role::QuasiIdentifier), ("faixa_etaria", Role::QuasiIdentifier), ("diagnostico", Role::Sensitive)]
        .map(|(n, r)| Attribute { name: n.into(), role: r })
        .to_vec();
    MicrodataTable::new(attrs, rows).unwrap()
}

fn gate_scenario() -> Check {
    let th = RiskThresholds::default();
    ensure!(
        th.attack_prob == "0.90".parse::<Decimal>().unwrap() && th.pop_fraction == "0.30".parse::<Decimal>().unwrap(),
        "default thresholds are {} / {}",
        th.attack_prob,
        th.pop_fraction
    );
    let qi = ["municipio", "faixa_etaria"];
    let s = ["diagnostico"];
    let decide = |t: &MicrodataTable| gate(t, &qi, &s, &th).unwrap();
    // 30 of 100: one class at exactly 0.9, two homogeneous.
    let at30 = gate_table(&[(10, 9), (10, 10), (10, 10)], 70);
    // 29 of 100.
    let at29 = gate_table(&[(10, 9), (19, 19)], 71);
    let r30 = decide(&at30);
    let r29 = decide(&at29);
    ensure!(at30.len() == 100 && at29.len() == 100, "tables are not 100 rows");
    ensure!(r30.inference[0].at_risk == 30, "30% table has {} at risk", r30.inference[0].at_risk);
    ensure!(r29.inference[0].at_risk == 29, "29% table has {} at risk", r29.inference[0].at_risk);
    ensure!(r30.decision == Decision::Reject, "30% table was {:?}", r30.decision);
    ensure!(r29.decision == Decision::Publish, "29% table was {:?}", r29.decision);

    let o = Command::new(env!("CARGO_BIN_EXE_bdc"))
        .args(["privacy-check", "--input"])
        .arg(fixtures().join("gate_30pct.csv"))
        .arg("--config")
        .arg(fixtures().join("privacy_check.toml"))
        .output()
        .unwrap();
    ensure!(o.status.code() == Some(1), "privacy-check exit {:?}", o.status.code());
    ensure!(String::from_utf8_lossy(&o.stdout).contains("decision\tReject"), "privacy-check did not print Reject");
    Ok("30% -> Reject, 29% -> Publish, CLI exits 1 on Reject".into())
}

/// Pairs of letters, then everything.
fn letter_hierarchy(attr: &str) -> GeneralizationHierarchy {
    let letters = ["a", "b", "c", "d", "e"];
    let pairs: BTreeMap<String, String> = letters
        .iter()
        .map(|l| (l.to_string(), if *l < "c" { "ab" } else { "cde" }.to_string()))
        .collect();
    let top: BTreeMap<String, String> = ["ab", "cde"].iter().map(|v| (v.to_string(), "*".to_string())).collect();
    GeneralizationHierarchy::new(attr, vec![pairs, top])
}

/// Integer quasi-identifiers with band hierarchies.
fn numeric_fixture(seed: u64) -> (MicrodataTable, Vec<GeneralizationHierarchy>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = rng.random_range(1..=3);
    let n = rng.random_range(1..=120);
    let rows: Vec<Vec<String>> = (0..n).map(|_| (0..cols).map(|_| rng.random_range(0..100u32).to_string()).collect()).collect();
    let names: Vec<String> = (0..cols).map(|i| format!("q{i}")).collect();
    let hs = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let values: Vec<&str> = rows.iter().map(|r| r[i].as_str()).collect();
            GeneralizationHierarchy::numeric_bands(name.clone(), values, &[5, 10, 50], true).unwrap()
        })
        .collect();
    let attrs = names.iter().map(|n| Attribute { name: n.clone(), role: Role::QuasiIdentifier }).collect();
    (MicrodataTable::new(attrs, rows).unwrap(), hs)
}

fn anonymization() -> Check {
    let mut fixtures_checked = 0;
    let mut runs = 0;
    for seed in 0..ANON_FIXTURES {
        let rt = random_table(seed);
        let hs: Vec<GeneralizationHierarchy> = rt.qi.iter().map(|q| letter_hierarchy(q)).collect();
        let (nt, nhs) = numeric_fixture(seed);
        let nqi = nt.names_with_role(Role::QuasiIdentifier);
        for (table, qi, hs) in [(&rt.table, &rt.qi, &hs), (&nt, &nqi, &nhs)] {
            for k in [2, 3, 5] {
                let (out, _) = anonymize_k(table, qi, k, hs, qi).unwrap();
                if out.is_empty() {
                    ensure!(table.len() < k, "seed {seed}: k={k} suppressed everything");
                } else {
                    ensure!(check_k_anonymity(&out, qi, k).unwrap().0, "seed {seed}: k={k} not reached");
                }
                runs += 1;
            }
            for h in hs.iter() {
                let mut prev = 0;
                for level in 0..=h.depth() {
                    let t = generalize(table, &h.attribute, h, level).unwrap();
                    let (_, min) = check_k_anonymity(&t, qi, 1).unwrap();
                    ensure!(min >= prev, "seed {seed}: {} level {level} shrank min class {prev} -> {min}", h.attribute);
                    prev = min;
                }
            }
            fixtures_checked += 1;
        }
    }
    Ok(format!("{fixtures_checked} fixtures, {runs} anonymize_k runs"))
}

fn dp_mechanisms() -> Check {
    let draws: Vec<f64> = LaplaceNoise::with_scale(1.0, 7).take(DRAWS).collect();
    let mean = draws.iter().sum::<f64>() / DRAWS as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (DRAWS - 1) as f64;
    ensure!(mean.abs() <= LAPLACE_MEAN_TOL, "Laplace mean {mean}");
    ensure!((var - 2.0).abs() <= 2.0 * LAPLACE_VAR_REL_TOL, "Laplace variance {var}");

    let mut rr = RandomizedResponse::new(0.0, 3).unwrap();
    let flips = (0..DRAWS).filter(|_| !rr.respond(true)).count() as f64 / DRAWS as f64;
    ensure!((flips - 0.5).abs() <= RR_FLIP_TOL, "flip rate {flips}");

    let mut worst: f64 = 0.0;
    for (eps, truth) in [(1.0, 0.3), (0.5, 0.7), (2.0, 0.05), (3.0, 0.5)] {
        let mut rr = RandomizedResponse::new(eps, 17).unwrap();
        let ones = (0..DRAWS).filter(|i| rr.respond((*i as f64) < truth * DRAWS as f64)).count() as f64;
        let est = debias_proportion(ones / DRAWS as f64, eps).unwrap();
        worst = worst.max((est - truth).abs());
    }
    ensure!(worst <= DEBIAS_TOL, "debiasing error {worst}");
    Ok(format!("mean {mean:.4}, var {var:.4}, flip {flips:.4}, debias err {worst:.4}"))
}

fn registry() -> Commons {
    let mut c = Commons::in_memory();
    c.import_registry(fs::File::open(fixtures().join("places.csv")).unwrap()).unwrap();
    c
}

fn spec(name: &str) -> SourceSpec {
    SourceSpec::load(&fixtures().join("specs").join(name)).unwrap()
}

fn all_municipalities(c: &Commons) -> Vec<NodeId> {
    c.graph.nodes().filter(|n| n.as_str().starts_with("mun/")).cloned().collect()
}

fn export_all(c: &Commons) -> Vec<u8> {
    let vars: Vec<NodeId> = c.stats.variables().map(|v| v.id.clone()).collect();
    c.stats.export_csv(&c.graph, &all_municipalities(c), &vars, None).unwrap()
}

fn store_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    ["nodes/nodes.txt", "triples/triples.jsonl", "observations/observations.jsonl", "observations/provenance.jsonl"]
        .iter()
        .map(|f| (f.to_string(), fs::read(root.join(f)).unwrap()))
        .collect()
}

fn idempotence() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut c = Commons::open(dir.path()).unwrap();
    c.import_registry(fs::File::open(fixtures().join("places.csv")).unwrap()).unwrap();
    let mut skipped = 0;
    for name in ["ipeadata_life_expectancy.toml", "ibge_population.toml", "datasus_mortality.toml"] {
        let s = spec(name);
        let first = c.ingest(&s).unwrap();
        ensure!(first.status == IngestStatus::Ingested, "{name}: {:?}", first.status);
        let before = (export_all(&c), store_files(dir.path()));
        let again = c.ingest(&s).unwrap();
        ensure!(again.status == IngestStatus::SkippedUnchanged, "{name}: re-ingest was {:?}", again.status);
        ensure!(before == (export_all(&c), store_files(dir.path())), "{name}: store changed on re-ingest");
        let mut reopened = Commons::open(dir.path()).unwrap();
        ensure!(reopened.ingest(&s).unwrap().status == IngestStatus::SkippedUnchanged, "{name}: not skipped after reopen");
        ensure!(export_all(&reopened) == before.0, "{name}: export differs after reopen");
        skipped += 1;
    }

    // Conservation on every fixture and on shuffled, truncated variants.
    let mut calls = 0;
    for name in ["ipeadata_life_expectancy.toml", "ibge_population.toml"] {
        let s = spec(name);
        let mut table = etl::parse(&etl::fetch(&s).unwrap(), &s.format).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for round in 0..20 {
            if round > 0 {
                let cut = rng.random_range(0..=table.rows.len());
                table.rows.truncate(cut);
                let i = rng.random_range(0..table.rows.len().max(1));
                if i < table.rows.len() {
                    table.rows[i][0] = "bogus".into();
                }
            }
            let mut c = registry();
            for v in &s.variables {
                c.register_variable(v.clone()).ok();
            }
            let (obs, rej) = etl::normalize(&c.graph, &c.stats, &table, &s.mapping, "p").unwrap();
            ensure!(obs.len() + rej.len() == table.rows.len(), "{name} round {round}: {} + {} != {}", obs.len(), rej.len(), table.rows.len());
            calls += 1;
        }
    }
    Ok(format!("{skipped} sources skipped with identical bytes, {calls} normalize calls conserve rows"))
}

/// (entity, year, value) read with a plain JSON parser and the registry file.
fn expected_tuples() -> BTreeSet<(String, String, String)> {
    let codes: Vec<(String, String)> = fs::read_to_string(fixtures().join("places.csv"))
        .unwrap()
        .lines()
        .filter(|l| l.contains(",Municipality,"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[3].to_string(), f[0].to_string())
        })
        .collect();
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(fixtures().join("ipeadata_life_expectancy.json")).unwrap()).unwrap();
    doc["value"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            let code = r["territory"].as_str().unwrap();
            let hits: Vec<&String> = codes.iter().filter(|(c, _)| c.starts_with(code)).map(|(_, id)| id).collect();
            assert_eq!(hits.len(), 1, "{code}");
            let raw = r["value"].to_string();
            let value = if raw.contains('.') { raw.trim_end_matches('0').trim_end_matches('.').to_string() } else { raw };
            (hits[0].clone(), r["date"].as_str().unwrap()[..4].to_string(), value)
        })
        .collect()
}

fn round_trip() -> Check {
    let want = expected_tuples();
    let run = || {
        let mut c = registry();
        assert_eq!(c.ingest(&spec("ipeadata_life_expectancy.toml")).unwrap().status, IngestStatus::Ingested);
        c.stats.export_csv(&c.graph, &all_municipalities(&c), &[id("var/life_expectancy")], None).unwrap()
    };
    let first = run();
    let text = String::from_utf8(first.clone()).unwrap();
    let got: BTreeSet<(String, String, String)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f[2], "var/life_expectancy");
            (f[0].to_string(), f[3].to_string(), f[4].to_string())
        })
        .collect();
    ensure!(text.lines().count() - 1 == want.len(), "export has {} rows, fixture {}", text.lines().count() - 1, want.len());
    ensure!(got == want, "{} tuples differ", got.symmetric_difference(&want).count());
    for _ in 0..3 {
        ensure!(run() == first, "export bytes differ between runs");
    }
    Ok(format!("{} tuples reproduced, 4 byte-identical runs", want.len()))
}

fn privacy_routing() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut c = Commons::open(dir.path()).unwrap();
    c.import_registry(fs::File::open(fixtures().join("places.csv")).unwrap()).unwrap();
    let before = store_files(dir.path());
    let entry = c.ingest(&spec("datasus_mortality_exact_age.toml")).unwrap();
    ensure!(entry.status == IngestStatus::RejectedPrivacy, "status {:?}", entry.status);
    ensure!(entry.counts.observations == 0, "{} observations counted", entry.counts.observations);
    ensure!(c.stats.observation_count() == 0, "{} observations stored", c.stats.observation_count());
    ensure!(store_files(dir.path()) == before, "store files changed");
    let reopened = Commons::open(dir.path()).unwrap();
    let last = reopened.ledger().entries().last().cloned().unwrap();
    ensure!(last.status == IngestStatus::RejectedPrivacy && last.gate.is_some(), "ledger tail is {:?}", last.status);
    Ok("RejectedPrivacy ledgered, zero observations stored".into())
}

fn life_expectancy_var() -> StatisticalVariable {
    StatisticalVariable {
        id: id("var/life_expectancy"),
        name: "Life expectancy at birth".into(),
        unit: Some("years".into()),
        description: None,
    }
}

async fn counted_remote(c: Commons) -> (String, Arc<AtomicUsize>) {
    let hits = Arc::new(AtomicUsize::new(0));
    let h = hits.clone();
    let app = router(AppState::new(c, &ApiConfig::default())).layer(axum::middleware::from_fn(
        move |req: axum::extract::Request, next: axum::middleware::Next| {
            let h = h.clone();
            async move {
                h.fetch_add(1, Ordering::SeqCst);
                next.run(req).await
            }
        },
    ));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await });
    (format!("http://{addr}"), hits)
}

fn remote_config(name: &str, url: &str) -> ApiConfig {
    ApiConfig {
        remotes: vec![RemoteEndpoint { name: name.into(), base_url: url.into() }],
        request_timeout_ms: 2000,
        ..ApiConfig::default()
    }
}

async fn series(base: &str) -> (u16, serde_json::Value) {
    let r = reqwest::get(format!("{base}/api/observations/series?entity=mun/3106200&variable=var/life_expectancy")).await.unwrap();
    (r.status().as_u16(), serde_json::from_slice(&r.bytes().await.unwrap()).unwrap())
}

fn with_data() -> Commons {
    let mut c = registry();
    c.ingest(&spec("ipeadata_life_expectancy.toml")).unwrap();
    c
}

async fn federation() -> Check {
    let started = Instant::now();
    let (remote, hits) = counted_remote(with_data()).await;

    let empty = format!("http://{}", spawn(AppState::new(Commons::in_memory(), &remote_config("peer", &remote)), "127.0.0.1:0").await.unwrap());
    let (s, body) = series(&empty).await;
    let pts = body["points"].as_array().cloned().unwrap_or_default();
    ensure!(s == 200 && pts.len() == 3, "empty local store: status {s}, {} points", pts.len());
    ensure!(pts.iter().all(|p| p["origin"] == "remote:peer"), "points not tagged remote:peer");
    let remote_calls = hits.load(Ordering::SeqCst);
    ensure!(remote_calls == 1, "remote saw {remote_calls} requests");

    let local = format!("http://{}", spawn(AppState::new(with_data(), &remote_config("peer", &remote)), "127.0.0.1:0").await.unwrap());
    let (s, body) = series(&local).await;
    ensure!(s == 200 && body["points"][0]["origin"] == "local", "local hit not served locally");
    ensure!(hits.load(Ordering::SeqCst) == remote_calls, "remote contacted despite local data");

    let closed = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let dead = format!("http://{}", closed.local_addr().unwrap());
    drop(closed);
    let mut c = registry();
    c.register_variable(life_expectancy_var()).unwrap();
    let down = format!("http://{}", spawn(AppState::new(c, &remote_config("down", &dead)), "127.0.0.1:0").await.unwrap());
    let (s, body) = series(&down).await;
    let warned = body["warnings"].as_array().is_some_and(|w| w.iter().any(|m| m.as_str().is_some_and(|m| m.starts_with("remote:down"))));
    ensure!(s == 200 && warned, "unreachable remote: status {s}, body {body}");

    let took = started.elapsed();
    ensure!(took < FEDERATION_BUDGET, "took {took:?}");
    Ok(format!("remote-tagged fallback, zero remote calls on local hit, 200 + warning when down, {took:.1?}"))
}

async fn parity() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut c = Commons::open(dir.path()).unwrap();
    c.import_registry(fs::File::open(fixtures().join("places.csv")).unwrap()).unwrap();
    for s in ["ipeadata_life_expectancy.toml", "ibge_population.toml"] {
        c.ingest(&spec(s)).unwrap();
    }
    let base = format!("http://{}", spawn(AppState::new(c, &ApiConfig::default()), "127.0.0.1:0").await.unwrap());
    let requests = [
        ("mun/3106200,mun/3550308", "var/population,var/life_expectancy", Some("2000"), Some("2010")),
        ("mun/2611606,mun/9999999", "var/population", None, None),
        ("mun/3106200", "var/life_expectancy", Some("2001"), None),
    ];
    for (ents, vars, from, to) in requests {
        let out = dir.path().join("cli.csv");
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_bdc"));
        cmd.args(["export", "--store"]).arg(dir.path()).args(["--entities", ents, "--variables", vars, "--out"]).arg(&out);
        let mut url = format!("{base}/api/download?entities={ents}&variables={vars}");
        if let Some(f) = from {
            cmd.args(["--from", f]);
            url.push_str(&format!("&from={f}"));
        }
        if let Some(t) = to {
            cmd.args(["--to", t]);
            url.push_str(&format!("&to={t}"));
        }
        let status = cmd.status().unwrap();
        ensure!(status.success(), "export exit {status}");
        let body = reqwest::get(&url).await.unwrap().bytes().await.unwrap();
        ensure!(fs::read(&out).unwrap() == body.as_ref(), "bytes differ for {ents} / {vars}");
    }

    let envelopes = [
        ("/api/observations/series?variable=var/population", 400, "missing_param"),
        ("/api/observations/series?entity=mun/3106200&variable=var/nope", 404, "unknown_variable"),
        ("/api/observations/series?entity=mun/0000000&variable=var/population", 404, "unknown_entity"),
        ("/api/observations/series?entity=Bad%20Id&variable=var/population", 400, "invalid_param"),
        ("/api/observations/point?variable=var/population", 400, "missing_param"),
        ("/api/observations/point?entities=mun/3106200&variable=var/population&date=soon", 400, "invalid_param"),
        ("/api/node/state/zz/triples", 404, "unknown_node"),
        ("/api/place/mun/3106200/children?level=State", 400, "invalid_level"),
        ("/api/place/state/mg/children", 400, "missing_param"),
        ("/api/place/resolve", 400, "missing_param"),
        ("/api/place/resolve?name=Atlantis", 404, "not_found"),
        ("/api/variables", 400, "missing_param"),
        ("/api/download?entities=&variables=var/population", 400, "empty_request"),
        ("/api/download?variables=var/population", 400, "missing_param"),
        ("/api/elsewhere", 404, "not_found"),
    ];
    for (path, status, code) in envelopes {
        let r = reqwest::get(format!("{base}{path}")).await.unwrap();
        let got = r.status().as_u16();
        let body: serde_json::Value = serde_json::from_slice(&r.bytes().await.unwrap()).unwrap_or_default();
        let keys: Vec<&str> = body.as_object().map(|o| o.keys().map(String::as_str).collect()).unwrap_or_default();
        ensure!(
            got == status && body["status"] == status && body["code"] == code && keys == ["code", "message", "status"],
            "{path}: got {got} {body}"
        );
    }
    Ok(format!("{} export requests byte-identical, {} error envelopes", requests.len(), envelopes.len()))
}

fn report(name: &str, result: std::thread::Result<Check>) -> bool {
    match result {
        Ok(Ok(detail)) => {
            println!("PASS  {name}  {detail}");
            true
        }
        Ok(Err(why)) => {
            println!("FAIL  {name}  {why}");
            false
        }
        Err(panic) => {
            let why = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            println!("FAIL  {name}  {why}");
            false
        }
    }
}

fn main() {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let sync: [Criterion; 7] = [
        ("privacy-oracle-equivalence", oracle_equivalence),
        ("gate-30-vs-29-percent", gate_scenario),
        ("anonymization-postconditions", anonymization),
        ("dp-mechanisms", dp_mechanisms),
        ("ingest-idempotence-conservation", idempotence),
        ("round-trip-fidelity", round_trip),
        ("privacy-routing", privacy_routing),
    ];
    let mut ok = true;
    for (name, f) in sync {
        ok &= report(name, catch_unwind(f));
    }
    ok &= report("federation", catch_unwind(AssertUnwindSafe(|| rt.block_on(federation()))));
    ok &= report("api-cli-parity", catch_unwind(AssertUnwindSafe(|| rt.block_on(parity()))));
    if !ok {
        std::process::exit(1);
    }
}
