//! Admission/preservation weight sweeps.

use std::thread;

use crate::admission::{solve_admission, AdmissionError};
use crate::model::{ObjectiveWeights, Scenario};

/// A labelled weight pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightCase {
    pub label: String,
    pub weights: ObjectiveWeights<f64>,
}

/// Four-point sweep `gamma/phi` in {0.25, 1, 4, 16} with `phi = 1`, labelled f1..f4.
///
/// The labels are for familiarity with published f1-f4 figures; the
/// weights behind those figures were never published, so these are not them.
pub fn default_cases() -> Vec<WeightCase> {
    [0.25, 1.0, 4.0, 16.0]
        .iter()
        .enumerate()
        .map(|(k, &gamma)| WeightCase {
            label: format!("f{}", k + 1),
            weights: ObjectiveWeights::new(gamma, 1.0).expect("positive weights"),
        })
        .collect()
}

/// Published per-case figures for one load scenario, for side-by-side reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedFigures {
    pub admitted: Option<[u32; 4]>,
    pub serviced: Option<[u32; 4]>,
    pub note: &'static str,
}

pub fn published(scenario: usize) -> PublishedFigures {
    match scenario {
        1 => PublishedFigures {
            admitted: None,
            serviced: None,
            note: "all load admissible in f3/f4; f3 server 1 uses p=19.68201, m=101.3384",
        },
        2 => PublishedFigures {
            admitted: Some([556, 1638, 2710, 2853]),
            serviced: Some([552, 1631, 2704, 2845]),
            note: "f2 admission rate 57.41%",
        },
        3 => PublishedFigures {
            admitted: Some([594, 1815, 2777, 2837]),
            serviced: Some([589, 1806, 2767, 2828]),
            note: "admission rate capped near 89%",
        },
        _ => PublishedFigures { admitted: None, serviced: None, note: "" },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub label: String,
    pub weights: ObjectiveWeights<f64>,
    pub demand: f64,
    pub admitted: f64,
    pub admission_rate: f64,
    pub cpu_total: f64,
    pub mem_total: f64,
    pub objective: f64,
    pub cpu: Vec<f64>,
    pub mem: Vec<f64>,
}

/// Solves `scenario` once per case, in parallel, returning rows in case order.
pub fn run_sweep(scenario: &Scenario<f64>, cases: &[WeightCase]) -> Result<Vec<SweepRow>, AdmissionError> {
    let results: Vec<Result<SweepRow, AdmissionError>> = thread::scope(|scope| {
        let handles: Vec<_> = cases
            .iter()
            .map(|case| {
                scope.spawn(move || {
                    let s = scenario.with_weights(case.weights);
                    let plan = solve_admission(&s)?;
                    let demand = s.demand.total();
                    let admitted = plan.total_admitted();
                    Ok(SweepRow {
                        label: case.label.clone(),
                        weights: case.weights,
                        demand,
                        admitted,
                        admission_rate: if demand > 0.0 { admitted / demand } else { 0.0 },
                        cpu_total: plan.cpu_use.iter().sum(),
                        mem_total: plan.mem_use.iter().sum(),
                        objective: plan.objective,
                        cpu: plan.cpu_use,
                        mem: plan.mem_use,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    results.into_iter().collect()
}

/// Monotonicity of the sweep in `gamma / phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub admitted: bool,
    pub cpu: bool,
    pub mem: bool,
    pub violations: Vec<String>,
}

impl TrendReport {
    pub fn holds(&self) -> bool {
        self.admitted && self.cpu && self.mem
    }
}

/// Checks that admitted calls, CPU and memory never decrease as `gamma/phi` grows.
pub fn check_trend(rows: &[SweepRow], tol: f64) -> TrendReport {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.weights.ratio().total_cmp(&b.weights.ratio()));
    let mut report = TrendReport { admitted: true, cpu: true, mem: true, violations: Vec::new() };
    for w in sorted.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (name, before, after, flag) in [
            ("admitted", a.admitted, b.admitted, &mut report.admitted),
            ("cpu", a.cpu_total, b.cpu_total, &mut report.cpu),
            ("mem", a.mem_total, b.mem_total, &mut report.mem),
        ] {
            if after < before - tol {
                *flag = false;
                report.violations.push(format!("{name} drops from {before} ({}) to {after} ({})", a.label, b.label));
            }
        }
    }
    report
}
