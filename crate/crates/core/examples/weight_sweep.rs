//! Prints the default weight sweep for the three bundled load scenarios.
use lbcac::fixtures::scenario_file;
use lbcac::sweep::{default_cases, run_sweep};

fn main() {
    for k in 1..=3 {
        let scenario = scenario_file(k).into_scenario::<f64>().expect("bundled fixture is valid");
        for row in run_sweep(&scenario, &default_cases()).expect("solver") {
            println!(
                "scenario {k} {} ({}): admitted {:.1}/{:.0} ({:.2}%), cpu {:.3}, mem {:.3}",
                row.label,
                row.weights,
                row.admitted,
                row.demand,
                100.0 * row.admission_rate,
                row.cpu_total,
                row.mem_total
            );
        }
    }
}
