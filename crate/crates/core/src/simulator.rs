//! Slot-by-slot replay of the controller duty cycle.
//!
//! Every slot the controller gathers demand (fresh requests plus anything on
//! hold), solves and rounds an admission plan, and pushes it to the servers.
//! Servers then lose a seeded fraction of admitted calls to effects the model
//! does not see (billing, logging and similar extra work), which is what
//! separates "admitted" from "serviced". Calls last a single slot, so all
//! resources are free again when the next slot starts.

use std::collections::{BTreeMap, VecDeque};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::admission::{solve_admission, AdmissionError};
use crate::flowpaths::{aggregate, decompose, recompute_usage, round_plan, FlowError, SignalingPath};
use crate::model::{AdmissionPlan, DemandMatrix, DutyCycleTiming, ModelError, Scenario};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("number of slots must be at least 1")]
    NoSlots,
    #[error("overhead factor must lie in [0, 1]")]
    InvalidOverhead,
    #[error("demand spread must lie in [0, 1]")]
    InvalidSpread,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Admission(#[from] AdmissionError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// How fresh requests are drawn each slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DemandProcess {
    /// The scenario matrix, floored to whole calls.
    Constant,
    /// Each entry scaled by an independent `U[1 - spread, 1 + spread]`, then floored.
    Perturbed { spread: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub timing: DutyCycleTiming,
    pub num_slots: usize,
    pub seed: u64,
    /// Expected fraction of admitted calls that fail on the servers.
    pub overhead_factor: f64,
    /// Re-queue blocked calls for the next slot.
    pub hold_on: bool,
    pub demand: DemandProcess,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            timing: DutyCycleTiming::default_slot(),
            num_slots: 1,
            seed: 0,
            overhead_factor: 0.0,
            hold_on: false,
            demand: DemandProcess::Constant,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot_index: usize,
    /// Observed demand: fresh requests plus calls released from hold.
    pub demands: DemandMatrix<f64>,
    /// Calls that entered this slot from the hold queue.
    pub held_in: u64,
    /// Rounded plan broadcast to the servers.
    pub plan: AdmissionPlan<f64>,
    pub paths: Vec<SignalingPath<f64>>,
    pub serviced: Vec<u64>,
    pub blocked: Vec<u64>,
    pub cpu_used: Vec<f64>,
    pub mem_used: Vec<f64>,
    /// Whether blocked calls of this slot were put on hold.
    pub hold_on: bool,
    /// Calls waiting in the hold queue once the slot closes.
    pub queue_len: u64,
    /// Slot phases with the measured compute time filled in.
    pub timing: DutyCycleTiming,
    /// Compute phase did not fit in the slot budget.
    pub overran: bool,
    pub compute_time: f64,
}

impl SlotRecord {
    pub fn n(&self) -> usize {
        self.demands.n()
    }

    pub fn total_demand(&self) -> u64 {
        self.demands.to_rows().iter().flatten().map(|&v| v as u64).sum()
    }

    pub fn total_admitted(&self) -> u64 {
        self.plan.total_admitted() as u64
    }

    pub fn total_serviced(&self) -> u64 {
        self.serviced.iter().sum()
    }

    pub fn total_blocked(&self) -> u64 {
        self.blocked.iter().sum()
    }

    pub fn serviced(&self, i: usize, j: usize) -> u64 {
        self.serviced[i * self.n() + j]
    }

    pub fn blocked(&self, i: usize, j: usize) -> u64 {
        self.blocked[i * self.n() + j]
    }
}

/// Calls carried into the next slot by `record`.
pub fn hold_on_accounting(record: &SlotRecord) -> u64 {
    if record.hold_on {
        record.total_blocked()
    } else {
        0
    }
}

/// Per-commodity FIFO of held calls, batched by arrival slot.
#[derive(Debug, Default)]
struct HoldQueue {
    batches: BTreeMap<(usize, usize), VecDeque<(usize, u64)>>,
}

impl HoldQueue {
    fn waiting(&self, i: usize, j: usize) -> u64 {
        self.batches.get(&(i, j)).map_or(0, |q| q.iter().map(|b| b.1).sum())
    }

    fn len(&self) -> u64 {
        self.batches.values().flatten().map(|b| b.1).sum()
    }

    /// Serves `served` calls oldest first; the unserved remainder, fresh calls
    /// included, stays queued in arrival order.
    fn settle(&mut self, i: usize, j: usize, slot: usize, fresh: u64, mut served: u64) {
        let q = self.batches.entry((i, j)).or_default();
        if fresh > 0 {
            q.push_back((slot, fresh));
        }
        while served > 0 {
            let Some(front) = q.front_mut() else { break };
            let take = front.1.min(served);
            front.1 -= take;
            served -= take;
            if front.1 == 0 {
                q.pop_front();
            }
        }
    }
}

fn thin<R: Rng>(count: u64, p: f64, rng: &mut R) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    (0..count).filter(|_| rng.gen_bool(p)).count() as u64
}

fn fresh_demand<R: Rng>(scenario: &Scenario<f64>, process: DemandProcess, rng: &mut R) -> Vec<u64> {
    let n = scenario.n();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let base = scenario.demand.get(i, j);
            let v = match process {
                DemandProcess::Constant => base,
                DemandProcess::Perturbed { spread } => base * rng.gen_range(1.0 - spread..=1.0 + spread),
            };
            out.push(v.floor().max(0.0) as u64);
        }
    }
    out
}

/// Runs `config.num_slots` controller slots over `scenario`.
pub fn run(scenario: &Scenario<f64>, config: &SimConfig) -> Result<Vec<SlotRecord>, SimError> {
    if config.num_slots == 0 {
        return Err(SimError::NoSlots);
    }
    if !(0.0..=1.0).contains(&config.overhead_factor) {
        return Err(SimError::InvalidOverhead);
    }
    if let DemandProcess::Perturbed { spread } = config.demand {
        if !(0.0..=1.0).contains(&spread) {
            return Err(SimError::InvalidSpread);
        }
    }
    let n = scenario.n();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut queue = HoldQueue::default();
    let mut records = Vec::with_capacity(config.num_slots);

    for slot in 0..config.num_slots {
        let fresh = fresh_demand(scenario, config.demand, &mut rng);
        let mut observed = DemandMatrix::zeros(n);
        let mut held_in = 0;
        for i in 0..n {
            for j in 0..n {
                let waiting = queue.waiting(i, j);
                held_in += waiting;
                observed.set(i, j, (fresh[i * n + j] + waiting) as f64)?;
            }
        }
        let slot_scenario = scenario.with_demand(observed.clone())?;

        let started = Instant::now();
        let plan = round_plan(&solve_admission(&slot_scenario)?, &slot_scenario)?;
        let compute_time = started.elapsed().as_secs_f64();
        let paths = decompose(&plan, &scenario.topology)?.paths;

        // servers drop a thinned share of every admitted path and local batch
        let mut serviced_paths = Vec::with_capacity(paths.len());
        let mut served = vec![0u64; n * n];
        for p in &paths {
            let admitted = p.flow as u64;
            let ok = admitted - thin(admitted, config.overhead_factor, &mut rng);
            served[p.origin * n + p.dest] += ok;
            if ok > 0 {
                serviced_paths.push(SignalingPath { flow: ok as f64, ..p.clone() });
            }
        }
        let mut serviced_plan = AdmissionPlan::zeros(n);
        for l in 0..n {
            let admitted = plan.admitted(l, l) as u64;
            let ok = admitted - thin(admitted, config.overhead_factor, &mut rng);
            served[l * n + l] = ok;
            serviced_plan.set_admitted(l, l, ok as f64);
        }
        for p in &serviced_paths {
            let c = serviced_plan.admitted(p.origin, p.dest) + p.flow;
            serviced_plan.set_admitted(p.origin, p.dest, c);
        }
        serviced_plan.relay = aggregate(&serviced_paths);
        recompute_usage(&mut serviced_plan, &slot_scenario);

        let mut blocked = vec![0u64; n * n];
        for i in 0..n {
            for j in 0..n {
                let idx = i * n + j;
                let demanded = observed.get(i, j) as u64;
                blocked[idx] = demanded - served[idx];
                if config.hold_on {
                    queue.settle(i, j, slot, fresh[idx], served[idx]);
                }
            }
        }

        let t = config.timing;
        let (timing, overran) = match DutyCycleTiming::with_idle_remainder(t.tau, t.t_gather, compute_time, t.t_notify) {
            Ok(timing) => (timing, false),
            Err(_) => {
                let stretched = t.t_gather + compute_time + t.t_notify;
                (DutyCycleTiming::new(stretched, t.t_gather, compute_time, t.t_notify, 0.0)?, true)
            }
        };
        records.push(SlotRecord {
            slot_index: slot,
            demands: observed,
            held_in,
            plan,
            paths,
            serviced: served,
            blocked,
            cpu_used: serviced_plan.cpu_use,
            mem_used: serviced_plan.mem_use,
            hold_on: config.hold_on,
            queue_len: queue.len(),
            timing,
            overran,
            compute_time,
        });
    }
    Ok(records)
}
