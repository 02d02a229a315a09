use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use lbcac::model::ObjectiveWeights;
use lbcac::report::{write_plan_dir, write_run_log, PlanSummary};
use lbcac::simulator::{run, DemandProcess, SimConfig, SlotRecord};

use crate::error::CliResult;
use crate::load_scenario;

/// Per-slot columns shown in the console table before switching to totals only.
const MAX_TABLE_SLOTS: usize = 8;

pub struct SimOptions {
    pub slots: usize,
    pub seed: u64,
    pub overhead: f64,
    pub hold_on: bool,
    pub spread: Option<f64>,
}

fn write_service(path: &Path, record: &SlotRecord) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "i,j,demanded,admitted,serviced,blocked")?;
    let n = record.n();
    for i in 0..n {
        for j in 0..n {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                i + 1,
                j + 1,
                record.demands.get(i, j),
                record.plan.admitted(i, j),
                record.serviced(i, j),
                record.blocked(i, j)
            )?;
        }
    }
    w.flush()
}

pub fn simulate(scenario_path: &Path, out: &Path, weights: &[ObjectiveWeights<f64>], opts: &SimOptions) -> CliResult {
    let (name, scenario) = load_scenario(scenario_path, weights)?;
    let config = SimConfig {
        num_slots: opts.slots,
        seed: opts.seed,
        overhead_factor: opts.overhead,
        hold_on: opts.hold_on,
        demand: opts.spread.map_or(DemandProcess::Constant, |spread| DemandProcess::Perturbed { spread }),
        ..SimConfig::default()
    };
    let records = run(&scenario, &config)?;

    fs::create_dir_all(out)?;
    write_run_log(BufWriter::new(File::create(out.join("run_log.csv"))?), &records)?;
    for r in &records {
        let dir = out.join("slots").join(format!("slot_{:04}", r.slot_index + 1));
        let slot_scenario = scenario.with_demand(r.demands.clone())?;
        let summary = PlanSummary::new(&r.plan, &slot_scenario, true, 0.0);
        write_plan_dir(&dir, &r.plan, &slot_scenario, &r.paths, &summary)?;
        write_service(&dir.join("service.csv"), r)?;
    }

    println!("scenario: {name}, weights {}, {} slot(s), seed {}", scenario.weights, records.len(), opts.seed);
    let show = records.len() <= MAX_TABLE_SLOTS;
    let mut header = format!("{:<22}", "");
    if show {
        for r in &records {
            header += &format!(" {:>8}", format!("slot {}", r.slot_index + 1));
        }
    }
    header += &format!(" {:>9}", "total");
    println!("{header}");
    let line = |label: &str, f: &dyn Fn(&SlotRecord) -> u64| {
        let mut s = format!("{label:<22}");
        if show {
            for r in &records {
                s += &format!(" {:>8}", f(r));
            }
        }
        s += &format!(" {:>9}", records.iter().map(f).sum::<u64>());
        println!("{s}");
    };
    line("Requests", &|r| r.total_demand());
    line("Admitted by LB-CAC", &|r| r.total_admitted());
    line("Serviced", &|r| r.total_serviced());
    line("Blocked", &|r| r.total_blocked());
    if opts.hold_on {
        line("Held to next slot", &|r| r.queue_len);
    }
    let worst = records.iter().map(|r| r.compute_time).fold(0.0, f64::max);
    println!("slowest plan computation: {worst:.3} s");
    Ok(())
}
