use std::path::Path;
use std::time::Instant;

use lbcac::admission::{build_admission_lp, solve_admission, verify_plan};
use lbcac::flowpaths::{decompose, round_plan};
use lbcac::lp::write_lp;
use lbcac::oracle::{solve_path_lp, DEFAULT_PATH_CAP};
use lbcac::report::{write_plan_dir, PlanSummary};
use lbcac::model::ObjectiveWeights;

use crate::error::{CliError, CliResult};
use crate::load_scenario;

/// Largest gap tolerated between the arc and path optima.
const ORACLE_TOL: f64 = 1e-6;

pub struct PlanOptions {
    pub round: bool,
    pub oracle_check: bool,
    pub max_hops: Option<usize>,
    pub dump_lp: bool,
}

pub fn plan(scenario_path: &Path, out: &Path, weights: &[ObjectiveWeights<f64>], opts: &PlanOptions) -> CliResult {
    let (name, scenario) = load_scenario(scenario_path, weights)?;
    let started = Instant::now();
    let optimum = solve_admission(&scenario)?;
    let elapsed = started.elapsed().as_secs_f64();

    let optimum_loops = decompose(&optimum, &scenario.topology)?.loops.residual_flow;
    let plan = if opts.round { round_plan(&optimum, &scenario)? } else { optimum.clone() };
    let decomposition = decompose(&plan, &scenario.topology)?;
    let report = verify_plan(&plan, &scenario, 1e-6);
    if !report.feasible {
        return Err(CliError::solver(format!("plan violates its constraints by {}", report.max_violation)));
    }

    let summary = PlanSummary::new(&plan, &scenario, opts.round, optimum_loops);
    write_plan_dir(out, &plan, &scenario, &decomposition.paths, &summary)?;
    if opts.dump_lp {
        std::fs::write(out.join("model.lp"), write_lp(&build_admission_lp(&scenario).0))?;
    }

    println!("scenario: {name}");
    println!("weights gamma:phi = {}", scenario.weights);
    println!(
        "admission rate: {:.2}% ({} of {} calls{})",
        100.0 * summary.admission_rate,
        summary.admitted_total,
        summary.demand_total,
        if opts.round { ", rounded down" } else { "" }
    );
    println!("cpu used: {:.4}, memory used: {:.4}", summary.cpu_total, summary.mem_total);
    println!("objective: {:.9}", optimum.objective);
    println!("compute time: {elapsed:.3} s");

    if opts.oracle_check {
        let hops = opts.max_hops.unwrap_or(scenario.n().saturating_sub(1));
        let reference = solve_path_lp(&scenario, hops, DEFAULT_PATH_CAP)?;
        let gap = (reference.objective - optimum.objective).abs();
        println!("oracle: path model objective {:.9} over {} paths, gap {gap:.3e}", reference.objective, reference.path_columns);
        if gap > ORACLE_TOL {
            return Err(CliError::domain(format!("oracle mismatch: gap {gap:.3e} exceeds {ORACLE_TOL:e}")));
        }
    }
    Ok(())
}
