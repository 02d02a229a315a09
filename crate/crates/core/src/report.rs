//! CSV and JSON outputs. Server ids are 1-based everywhere in here.
//!
//! | file            | columns                                          |
//! |-----------------|--------------------------------------------------|
//! | `admitted.csv`  | `i,j,demanded,admitted`                          |
//! | `relay.csv`     | `i,j,k,l,flow` (positive flows only)             |
//! | `resources.csv` | `l,p,P,m,M`                                      |
//! | `paths.csv`     | `origin,destination,path,flow`                   |
//! | `summary.json`  | [`PlanSummary`]                                  |
//! | `run_log.csv`   | one row per slot, `compute_time` last            |

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::flowpaths::SignalingPath;
use crate::model::{AdmissionPlan, Scenario};
use crate::simulator::SlotRecord;
use crate::sweep::SweepRow;

fn csv_err(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::new(io::ErrorKind::InvalidData, format!("{other:?}")),
    }
}

/// Like `csv::Writer::from_writer`, but the header is written up front so
/// empty tables still carry it.
fn headed<W: Write>(w: W, header: &[&str]) -> io::Result<csv::Writer<W>> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header).map_err(csv_err)?;
    Ok(out)
}

fn write_rows<W: Write, R: Serialize>(w: W, rows: impl IntoIterator<Item = R>) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(csv_err)?;
    }
    out.flush()
}

#[derive(Serialize)]
struct AdmittedRow {
    i: usize,
    j: usize,
    demanded: f64,
    admitted: f64,
}

pub fn write_admitted<W: Write>(w: W, plan: &AdmissionPlan<f64>, scenario: &Scenario<f64>) -> io::Result<()> {
    let n = scenario.n();
    write_rows(
        w,
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| AdmittedRow {
            i: i + 1,
            j: j + 1,
            demanded: scenario.demand.get(i, j),
            admitted: plan.admitted(i, j),
        }),
    )
}

#[derive(Serialize)]
struct RelayRow {
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    flow: f64,
}

pub fn write_relay<W: Write>(w: W, plan: &AdmissionPlan<f64>) -> io::Result<()> {
    let mut out = headed(w, &["i", "j", "k", "l", "flow"])?;
    for (key, &flow) in plan.relay.iter().filter(|(_, &f)| f > 0.0) {
        let row = RelayRow { i: key.origin + 1, j: key.dest + 1, k: key.from + 1, l: key.to + 1, flow };
        out.serialize(row).map_err(csv_err)?;
    }
    out.flush()
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct ResourceRow {
    l: usize,
    p: f64,
    P: f64,
    m: f64,
    M: f64,
}

pub fn write_resources<W: Write>(w: W, plan: &AdmissionPlan<f64>, scenario: &Scenario<f64>) -> io::Result<()> {
    write_rows(
        w,
        (0..scenario.n()).map(|l| ResourceRow {
            l: l + 1,
            p: plan.cpu_use[l],
            P: scenario.caps.cpu[l],
            m: plan.mem_use[l],
            M: scenario.caps.mem[l],
        }),
    )
}

#[derive(Serialize)]
struct PathRow {
    origin: usize,
    destination: usize,
    path: String,
    flow: f64,
}

pub fn write_paths<W: Write>(w: W, paths: &[SignalingPath<f64>]) -> io::Result<()> {
    let mut out = headed(w, &["origin", "destination", "path", "flow"])?;
    for p in paths {
        let row = PathRow { origin: p.origin + 1, destination: p.dest + 1, path: p.label(), flow: p.flow };
        out.serialize(row).map_err(csv_err)?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanSummary {
    pub gamma: f64,
    pub phi: f64,
    pub objective: f64,
    pub demand_total: f64,
    pub admitted_total: f64,
    pub admission_rate: f64,
    pub cpu_total: f64,
    pub mem_total: f64,
    pub rounded: bool,
    pub loop_flow: f64,
}

impl PlanSummary {
    pub fn new(plan: &AdmissionPlan<f64>, scenario: &Scenario<f64>, rounded: bool, loop_flow: f64) -> Self {
        let demand_total = scenario.demand.total();
        let admitted_total = plan.total_admitted();
        Self {
            gamma: scenario.weights.gamma,
            phi: scenario.weights.phi,
            objective: plan.objective,
            demand_total,
            admitted_total,
            admission_rate: if demand_total > 0.0 { admitted_total / demand_total } else { 0.0 },
            cpu_total: plan.cpu_use.iter().sum(),
            mem_total: plan.mem_use.iter().sum(),
            rounded,
            loop_flow,
        }
    }
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes the full set of plan files into `dir`, creating it if needed.
pub fn write_plan_dir(
    dir: &Path,
    plan: &AdmissionPlan<f64>,
    scenario: &Scenario<f64>,
    paths: &[SignalingPath<f64>],
    summary: &PlanSummary,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_admitted(create(&dir.join("admitted.csv"))?, plan, scenario)?;
    write_relay(create(&dir.join("relay.csv"))?, plan)?;
    write_resources(create(&dir.join("resources.csv"))?, plan, scenario)?;
    write_paths(create(&dir.join("paths.csv"))?, paths)?;
    let mut f = create(&dir.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut f, summary)?;
    f.write_all(b"\n")?;
    f.flush()
}

#[derive(Serialize)]
struct RunRow {
    slot: usize,
    demanded: u64,
    held_in: u64,
    admitted: u64,
    serviced: u64,
    blocked: u64,
    queue: u64,
    cpu_total: f64,
    mem_total: f64,
    overran: bool,
    compute_time: f64,
}

pub fn write_run_log<W: Write>(w: W, records: &[SlotRecord]) -> io::Result<()> {
    write_rows(
        w,
        records.iter().map(|r| RunRow {
            slot: r.slot_index + 1,
            demanded: r.total_demand(),
            held_in: r.held_in,
            admitted: r.total_admitted(),
            serviced: r.total_serviced(),
            blocked: r.total_blocked(),
            queue: r.queue_len,
            cpu_total: r.cpu_used.iter().sum(),
            mem_total: r.mem_used.iter().sum(),
            overran: r.overran,
            compute_time: r.compute_time,
        }),
    )
}

#[derive(Serialize)]
struct SweepAdmissionRow<'a> {
    scenario: &'a str,
    case: &'a str,
    gamma: f64,
    phi: f64,
    demand: f64,
    admitted: f64,
    admission_rate: f64,
    cpu_total: f64,
    mem_total: f64,
    objective: f64,
}

pub fn write_sweep_admission<W: Write>(w: W, scenario: &str, rows: &[SweepRow]) -> io::Result<()> {
    write_rows(
        w,
        rows.iter().map(|r| SweepAdmissionRow {
            scenario,
            case: &r.label,
            gamma: r.weights.gamma,
            phi: r.weights.phi,
            demand: r.demand,
            admitted: r.admitted,
            admission_rate: r.admission_rate,
            cpu_total: r.cpu_total,
            mem_total: r.mem_total,
            objective: r.objective,
        }),
    )
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct SweepResourceRow<'a> {
    scenario: &'a str,
    case: &'a str,
    gamma: f64,
    phi: f64,
    server: usize,
    p: f64,
    m: f64,
}

pub fn write_sweep_resources<W: Write>(w: W, scenario: &str, rows: &[SweepRow]) -> io::Result<()> {
    write_rows(
        w,
        rows.iter().flat_map(|r| {
            (0..r.cpu.len()).map(move |l| SweepResourceRow {
                scenario,
                case: &r.label,
                gamma: r.weights.gamma,
                phi: r.weights.phi,
                server: l + 1,
                p: r.cpu[l],
                m: r.mem[l],
            })
        }),
    )
}
