#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use bdc_core::privacy::{Attribute, MicrodataTable, Role};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// A random table of up to 200 rows with up to four quasi-identifiers and
/// up to two sensitive columns of at most three values each.
pub struct RandomTable {
    pub table: MicrodataTable,
    pub qi: Vec<String>,
    pub sensitive: Vec<String>,
}

pub fn random_table(seed: u64) -> RandomTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=200);
    let n_qi = rng.random_range(0..=4);
    let n_s = rng.random_range(1..=2);
    let qi_domains: Vec<usize> = (0..n_qi).map(|_| rng.random_range(1..=5)).collect();
    let s_domains: Vec<usize> = (0..n_s).map(|_| rng.random_range(1..=3)).collect();
    let mut attributes = Vec::new();
    for i in 0..n_qi {
        attributes.push(Attribute { name: format!("q{i}"), role: Role::QuasiIdentifier });
    }
    for i in 0..n_s {
        attributes.push(Attribute { name: format!("s{i}"), role: Role::Sensitive });
    }
    let rows = (0..n)
        .map(|_| {
            qi_domains
                .iter()
                .chain(&s_domains)
                .map(|&d| ((b'a' + rng.random_range(0..d) as u8) as char).to_string())
                .collect()
        })
        .collect();
    RandomTable {
        table: MicrodataTable::new(attributes, rows).unwrap(),
        qi: (0..n_qi).map(|i| format!("q{i}")).collect(),
        sensitive: (0..n_s).map(|i| format!("s{i}")).collect(),
    }
}
