//! Brute-force disclosure metrics over plain rows.
//!
//! Everything here is computed record by record with quadratic scans and a
//! hand-rolled fraction type, sharing no code with the library.

use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frac {
    pub num: u128,
    pub den: u128,
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Frac {
    pub fn new(num: u128, den: u128) -> Self {
        assert!(den > 0);
        let g = gcd(num, den).max(1);
        Frac { num: num / g, den: den / g }
    }

    pub fn add(self, o: Frac) -> Frac {
        Frac::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }

    pub fn abs_diff(self, o: Frac) -> Frac {
        let a = self.num * o.den;
        let b = o.num * self.den;
        Frac::new(a.max(b) - a.min(b), self.den * o.den)
    }

    pub fn half(self) -> Frac {
        Frac::new(self.num, self.den * 2)
    }

    /// Parses a plain decimal such as `0.90` without floating point.
    pub fn parse_decimal(s: &str) -> Frac {
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        let den = 10u128.pow(frac.len() as u32);
        let num = int.parse::<u128>().unwrap() * den + if frac.is_empty() { 0 } else { frac.parse::<u128>().unwrap() };
        Frac::new(num, den)
    }
}

impl PartialOrd for Frac {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Frac {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.num * o.den).cmp(&(o.num * self.den))
    }
}

fn same_class(a: &[String], b: &[String], qi: &[usize]) -> bool {
    qi.iter().all(|&c| a[c] == b[c])
}

fn class_of(rows: &[Vec<String>], i: usize, qi: &[usize]) -> Vec<usize> {
    (0..rows.len()).filter(|&j| same_class(&rows[i], &rows[j], qi)).collect()
}

pub fn reid(rows: &[Vec<String>], qi: &[usize]) -> Vec<Frac> {
    (0..rows.len())
        .map(|i| Frac::new(1, class_of(rows, i, qi).len() as u128))
        .collect()
}

pub fn infer(rows: &[Vec<String>], qi: &[usize], s: usize) -> Vec<Frac> {
    (0..rows.len())
        .map(|i| {
            let class = class_of(rows, i, qi);
            let modal = class
                .iter()
                .map(|&j| class.iter().filter(|&&k| rows[k][s] == rows[j][s]).count())
                .max()
                .unwrap();
            Frac::new(modal as u128, class.len() as u128)
        })
        .collect()
}

pub fn at_risk(probs: &[Frac], attack: Frac) -> (usize, Frac) {
    let n = probs.iter().filter(|p| **p >= attack).count();
    (n, Frac::new(n as u128, probs.len() as u128))
}

pub fn k_anonymous(rows: &[Vec<String>], qi: &[usize], k: usize) -> (bool, usize) {
    let min = (0..rows.len()).map(|i| class_of(rows, i, qi).len()).min().unwrap();
    (min >= k, min)
}

pub fn l_diverse(rows: &[Vec<String>], qi: &[usize], s: usize, l: usize) -> bool {
    (0..rows.len()).all(|i| {
        let class = class_of(rows, i, qi);
        let mut seen: Vec<&str> = Vec::new();
        for &j in &class {
            if !seen.contains(&rows[j][s].as_str()) {
                seen.push(&rows[j][s]);
            }
        }
        seen.len() >= l
    })
}

pub fn max_distance(rows: &[Vec<String>], qi: &[usize], s: usize) -> Frac {
    let n = rows.len() as u128;
    let mut domain: Vec<&str> = Vec::new();
    for r in rows {
        if !domain.contains(&r[s].as_str()) {
            domain.push(&r[s]);
        }
    }
    let mut worst = Frac::new(0, 1);
    for i in 0..rows.len() {
        let class = class_of(rows, i, qi);
        let m = class.len() as u128;
        let mut total = Frac::new(0, 1);
        for v in &domain {
            let local = class.iter().filter(|&&j| rows[j][s] == *v).count() as u128;
            let global = rows.iter().filter(|r| r[s] == *v).count() as u128;
            total = total.add(Frac::new(local, m).abs_diff(Frac::new(global, n)));
        }
        worst = worst.max(total.half());
    }
    worst
}

pub fn t_close(rows: &[Vec<String>], qi: &[usize], s: usize, t: Frac) -> bool {
    max_distance(rows, qi, s) <= t
}
