//! Bundled reference network and the three load scenarios.
//!
//! `CANONICAL_6` is a reconstruction: six servers whose edge set carries both
//! signaling paths `1-3-5-6` and `1-2-4-6` seen in the reference
//! measurements. Network-level numbers obtained on it are comparable in trend
//! only, not digit for digit.

use crate::model::{ScenarioFile, Topology};

/// Undirected edges of the six-server reference network, 1-based.
pub const CANONICAL_6: [(usize, usize); 8] = [(1, 2), (1, 3), (2, 3), (2, 4), (3, 5), (4, 5), (4, 6), (5, 6)];

pub const SCENARIO1_JSON: &str = include_str!("../fixtures/scenario1.json");
pub const SCENARIO2_JSON: &str = include_str!("../fixtures/scenario2.json");
pub const SCENARIO3_JSON: &str = include_str!("../fixtures/scenario3.json");

/// Requested calls summed over each scenario matrix.
pub const SCENARIO_TOTALS: [f64; 3] = [860.0, 2853.0, 3188.0];

pub fn canonical6() -> Topology {
    Topology::from_edges(6, &CANONICAL_6).expect("canonical topology is valid")
}

/// Scenario file `k` (1, 2 or 3) with the reference coefficients and caps.
pub fn scenario_file(k: usize) -> ScenarioFile {
    let text = match k {
        1 => SCENARIO1_JSON,
        2 => SCENARIO2_JSON,
        3 => SCENARIO3_JSON,
        _ => panic!("no bundled scenario {k}"),
    };
    ScenarioFile::parse(text).expect("bundled scenario parses")
}
