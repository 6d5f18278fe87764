//! Fixtures shared by the criterion benches.

use dtmh_core::{scenario_table, CountTable, McorScenario, ProbTable};

pub fn sleep_active() -> CountTable {
    CountTable::new(vec![
        vec![7, 4, 1, 0],
        vec![11, 5, 2, 2],
        vec![13, 23, 3, 1],
        vec![9, 17, 13, 8],
    ])
    .expect("valid table")
}

/// Independence table for an MCOR scenario with `r` categories.
pub fn mcor_table(r: usize, delta: f64) -> ProbTable {
    let haz = (0..r - 1)
        .map(|i| 0.2 + 0.6 * i as f64 / r as f64)
        .collect();
    scenario_table(&McorScenario::new(haz, delta).expect("valid scenario")).expect("valid table")
}
