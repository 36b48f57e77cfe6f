mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;

use bdc_core::etl::{self, GenericTable, IngestStatus, SourceSpec};
use bdc_core::stat_store::StatisticalVariable;
use bdc_core::{Commons, NodeId, ObsDate, StatStore};
use common::fixtures;
use proptest::prelude::*;

fn id(s: &str) -> NodeId {
    NodeId::new(s).unwrap()
}

fn ingested() -> Commons {
    let mut c = Commons::in_memory();
    c.import_registry(fs::File::open(fixtures().join("places.csv")).unwrap()).unwrap();
    let s = SourceSpec::load(&fixtures().join("specs/ipeadata_life_expectancy.toml")).unwrap();
    assert_eq!(c.ingest(&s).unwrap().status, IngestStatus::Ingested);
    c
}

/// Strips a plain decimal to its shortest form without a numeric library.
fn canonical(raw: &str) -> String {
    if !raw.contains('.') {
        return raw.to_string();
    }
    let t = raw.trim_end_matches('0').trim_end_matches('.');
    if t.is_empty() || t == "-" {
        "0".into()
    } else {
        t.to_string()
    }
}

/// (entity, year, value) read straight off the fixture text and registry.
fn expected() -> BTreeSet<(String, String, String)> {
    let registry = fs::read_to_string(fixtures().join("places.csv")).unwrap();
    let codes: Vec<(String, String)> = registry
        .lines()
        .skip(1)
        .filter(|l| l.contains(",Municipality,"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[3].to_string(), f[0].to_string())
        })
        .collect();
    let text = fs::read_to_string(fixtures().join("ipeadata_life_expectancy.json")).unwrap();
    let field = |line: &str, key: &str| -> Option<String> {
        let rest = line.trim().strip_prefix(&format!("\"{key}\": "))?;
        Some(rest.trim_end_matches(',').trim_matches('"').to_string())
    };
    let mut out = BTreeSet::new();
    let (mut terr, mut year) = (None, None);
    for line in text.lines() {
        if let Some(t) = field(line, "territory") {
            terr = Some(t);
        } else if let Some(d) = field(line, "date") {
            year = Some(d[..4].to_string());
        } else if let Some(v) = field(line, "value").filter(|_| terr.is_some()) {
            let code = terr.take().unwrap();
            let matches: Vec<&String> = codes.iter().filter(|(c, _)| c.starts_with(&code)).map(|(_, n)| n).collect();
            assert_eq!(matches.len(), 1, "{code}");
            out.insert((matches[0].clone(), year.take().unwrap(), canonical(&v)));
        }
    }
    out
}

#[test]
fn export_reproduces_the_fixture() {
    let c = ingested();
    let muns: Vec<NodeId> = c.graph.nodes().filter(|n| n.as_str().starts_with("mun/")).cloned().collect();
    let csv = c.stats.export_csv(&c.graph, &muns, &[id("var/life_expectancy")], None).unwrap();
    let text = String::from_utf8(csv.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(bdc_core::stat_store::CSV_HEADER));
    let mut rdr = csv::Reader::from_reader(csv.as_slice());
    let got: BTreeSet<(String, String, String)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[3].to_string(), r[4].to_string())
        })
        .collect();
    let want = expected();
    assert_eq!(want.len(), 81);
    assert_eq!(got, want);

    // Same bytes from a second, independent ingest.
    let again = ingested();
    assert_eq!(again.stats.export_csv(&again.graph, &muns, &[id("var/life_expectancy")], None).unwrap(), csv);
}

#[test]
fn golden_export() {
    let c = ingested();
    let entities = [id("mun/3106200"), id("mun/3304557"), id("mun/3550308"), id("mun/9999999"), id("state/mg")];
    let csv = c
        .stats
        .export_csv(
            &c.graph,
            &entities,
            &[id("var/life_expectancy")],
            Some(("2000".parse().unwrap(), "2010".parse().unwrap())),
        )
        .unwrap();
    let path = fixtures().join("golden/export_life_expectancy.csv");
    if std::env::var_os("BDC_UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, &csv).unwrap();
    }
    assert_eq!(String::from_utf8(csv).unwrap(), fs::read_to_string(&path).unwrap());
}

fn registry_store() -> (Commons, StatStore) {
    let mut c = Commons::in_memory();
    c.import_registry(fs::File::open(fixtures().join("places.csv")).unwrap()).unwrap();
    let mut s = StatStore::new();
    s.register_variable(StatisticalVariable {
        id: id("var/x"),
        name: "x".into(),
        unit: None,
        description: None,
    })
    .unwrap();
    (c, s)
}

fn cell() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("3106200".to_string()),
        Just("310620".to_string()),
        Just("9999999".to_string()),
        Just("2201903".to_string()),
        "[0-9]{4}",
        "-?[0-9]{1,4}(\\.[0-9]{1,3})?",
        Just("N/A".to_string()),
        Just(String::new()),
    ]
}

proptest! {
    #[test]
    fn normalize_conserves_rows_and_ignores_order(
        rows in prop::collection::vec(prop::collection::vec(cell(), 3), 0..60),
        perm_seed in any::<u64>(),
    ) {
        let (c, stats) = registry_store();
        let mapping = SourceSpec::from_toml(
            "source_name = \"p\"\n[fetch]\nkind = \"local-file\"\nlocation = \"x\"\n[mapping]\n\
             entity = { kind = \"place_code\", column = \"code\", level = \"Municipality\" }\n\
             variable = \"var/x\"\ndate_column = \"year\"\nvalue_column = \"v\"",
        ).unwrap().mapping;
        let table = GenericTable {
            columns: vec!["code".into(), "year".into(), "v".into()],
            rows: rows.clone(),
            rejects: vec![],
        };
        let (obs, rej) = etl::normalize(&c.graph, &stats, &table, &mapping, "p").unwrap();
        prop_assert_eq!(obs.len() + rej.len(), rows.len());

        let mut shuffled = rows.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            shuffled.swap(i, (perm_seed.wrapping_mul(i as u64 + 7) % (i as u64 + 1)) as usize);
        }
        let table2 = GenericTable { rows: shuffled, ..table };
        let (obs2, _) = etl::normalize(&c.graph, &stats, &table2, &mapping, "p").unwrap();
        let multiset = |v: &[bdc_core::Observation]| {
            let mut m: BTreeMap<String, usize> = BTreeMap::new();
            for o in v {
                *m.entry(format!("{}|{}|{}", o.entity, o.date, o.value)).or_default() += 1;
            }
            m
        };
        prop_assert_eq!(multiset(&obs), multiset(&obs2));
    }

    #[test]
    fn decimal_values_survive_store_and_export(values in prop::collection::vec("-?[0-9]{1,9}(\\.[0-9]{1,6})?", 1..20)) {
        let (c, mut stats) = registry_store();
        stats.register_provenance(bdc_core::Provenance {
            id: "p".into(),
            source_name: "s".into(),
            url: "u".into(),
            import_timestamp: chrono::Utc::now(),
            content_hash: "h".into(),
        });
        for (i, v) in values.iter().enumerate() {
            stats.put_observation(&c.graph, bdc_core::Observation {
                entity: id("mun/3106200"),
                variable: id("var/x"),
                date: ObsDate::year(1900 + i as i32),
                value: etl::parse_value(v, '.').unwrap(),
                unit: None,
                provenance: "p".into(),
            }).unwrap();
        }
        let csv = stats.export_csv(&c.graph, &[id("mun/3106200")], &[id("var/x")], None).unwrap();
        let mut rdr = csv::Reader::from_reader(csv.as_slice());
        let got: Vec<String> = rdr.records().map(|r| r.unwrap()[4].to_string()).collect();
        let want: Vec<String> = values.iter().map(|v| {
            let c = canonical(v);
            let c = if c.starts_with("-") && c[1..].trim_start_matches('0').is_empty() { "0".to_string() } else { c };
            let neg = c.starts_with('-');
            let body = c.trim_start_matches('-').trim_start_matches('0');
            let body = if body.is_empty() || body.starts_with('.') { format!("0{body}") } else { body.to_string() };
            if neg && body != "0" { format!("-{body}") } else { body }
        }).collect();
        prop_assert_eq!(got, want);
    }
}
