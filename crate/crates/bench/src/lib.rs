//! Inputs shared by the benchmarks.

use lpcop_core::{datasets, ContingencyTable};

/// Deterministic dependent sample of `n` distinct-valued pairs.
pub fn dependent_pairs(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let x = ((i * 7919) % n) as f64;
            let y = x + ((i * 104_729) % n) as f64 * 0.5;
            (x, y)
        })
        .collect()
}

pub fn tables() -> Vec<(&'static str, ContingencyTable)> {
    vec![
        ("hellman", datasets::hellman()),
        ("draft_lottery", datasets::draft_lottery()),
        ("shunter", datasets::shunter()),
    ]
}
