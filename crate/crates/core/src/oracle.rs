//! Exact loop-free reference for the admission optimum.
//!
//! Instead of per-arc relay columns, the path formulation has one column per
//! simple origin-to-destination path. Every arc-flow plan splits into simple
//! paths plus loops, and loops only add resource usage without admitting
//! anything, so dropping them never lowers the objective. The two LPs
//! therefore share an optimum, and this one cannot contain loops by
//! construction. Enumeration is exponential in the worst case, hence the
//! path cap.

use thiserror::Error;

use crate::admission::plan_objective;
use crate::flowpaths::{aggregate, SignalingPath};
use crate::lp::{self, LinearProgram, LpError, LpStatus, Relation, Sense};
use crate::model::{AdmissionPlan, Scenario, Topology};
use crate::scalar::Scalar;

pub const DEFAULT_PATH_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("more than {cap} simple paths; raise the cap or lower max_hops")]
    PathExplosion { cap: usize },
    #[error("path model reported {0:?}")]
    UnexpectedStatus(LpStatus),
    #[error("solver failure: {0}")]
    Solver(#[from] LpError),
}

fn extend_paths(
    topo: &Topology,
    dest: usize,
    max_hops: usize,
    stack: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<usize>>,
    cap: usize,
) -> Result<(), OracleError> {
    let u = *stack.last().expect("path has an origin");
    if u == dest {
        if out.len() >= cap {
            return Err(OracleError::PathExplosion { cap });
        }
        out.push(stack.clone());
        return Ok(());
    }
    if stack.len() > max_hops {
        return Ok(());
    }
    for v in topo.neighbors(u) {
        if !on_path[v] {
            on_path[v] = true;
            stack.push(v);
            extend_paths(topo, dest, max_hops, stack, on_path, out, cap)?;
            stack.pop();
            on_path[v] = false;
        }
    }
    Ok(())
}

/// Simple paths from `i` to `j` with at most `max_hops` arcs, bounded by `cap`.
///
/// Ordered by hop count, then lexicographically.
pub fn enumerate_simple_paths_capped(
    topo: &Topology,
    i: usize,
    j: usize,
    max_hops: usize,
    cap: usize,
) -> Result<Vec<Vec<usize>>, OracleError> {
    let mut out = Vec::new();
    if i == j || max_hops == 0 {
        return Ok(out);
    }
    let mut on_path = vec![false; topo.n()];
    on_path[i] = true;
    extend_paths(topo, j, max_hops, &mut vec![i], &mut on_path, &mut out, cap)?;
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(out)
}

pub fn enumerate_simple_paths(topo: &Topology, i: usize, j: usize, max_hops: usize) -> Vec<Vec<usize>> {
    enumerate_simple_paths_capped(topo, i, j, max_hops, usize::MAX).expect("uncapped enumeration")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSolution<T> {
    pub objective: T,
    /// Paths carrying positive flow.
    pub paths: Vec<SignalingPath<T>>,
    /// Admitted local calls per server.
    pub local: Vec<T>,
    pub cpu_use: Vec<T>,
    pub mem_use: Vec<T>,
    /// Number of path columns in the model.
    pub path_columns: usize,
}

impl<T: Scalar> PathSolution<T> {
    /// Re-expresses the path solution as an arc-flow plan.
    pub fn to_plan(&self, scenario: &Scenario<T>) -> AdmissionPlan<T> {
        let mut plan = AdmissionPlan::zeros(scenario.n());
        for (l, &c) in self.local.iter().enumerate() {
            plan.set_admitted(l, l, c);
        }
        for p in &self.paths {
            let c = plan.admitted(p.origin, p.dest) + p.flow;
            plan.set_admitted(p.origin, p.dest, c);
        }
        plan.relay = aggregate(&self.paths);
        plan.cpu_use = self.cpu_use.clone();
        plan.mem_use = self.mem_use.clone();
        plan.objective = plan_objective(&plan, scenario);
        plan
    }
}

/// Solves the admission problem over explicit simple paths.
pub fn solve_path_lp<T: Scalar>(
    scenario: &Scenario<T>,
    max_hops: usize,
    path_cap: usize,
) -> Result<PathSolution<T>, OracleError> {
    let n = scenario.n();
    let topo = &scenario.topology;
    let c = scenario.coeffs;
    let total_cpu: T = scenario.caps.cpu.iter().copied().sum();
    let total_mem: T = scenario.caps.mem.iter().copied().sum();
    let rate = |w: T, total: T| if total > T::zero() { w / total } else { T::zero() };
    let admit = rate(scenario.weights.gamma, scenario.demand.total());
    let cpu_rate = rate(scenario.weights.phi, total_cpu);
    let mem_rate = rate(scenario.weights.phi, total_mem);

    let mut lp = LinearProgram::new(Sense::Maximize);
    let local: Vec<usize> = (0..n).map(|l| lp.add_var(format!("C_{}_{}", l + 1, l + 1), admit)).collect();
    let cpu: Vec<usize> = (0..n).map(|l| lp.add_var(format!("p_{}", l + 1), -cpu_rate)).collect();
    let mem: Vec<usize> = (0..n).map(|l| lp.add_var(format!("m_{}", l + 1), -mem_rate)).collect();

    // (origin, dest, nodes, column)
    let mut columns: Vec<(usize, usize, Vec<usize>, usize)> = Vec::new();
    let mut budget = path_cap;
    let mut touch: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i == j || scenario.demand.get(i, j) <= T::zero() {
                continue;
            }
            let paths = enumerate_simple_paths_capped(topo, i, j, max_hops, budget)
                .map_err(|_| OracleError::PathExplosion { cap: path_cap })?;
            budget -= paths.len();
            let mut row = Vec::with_capacity(paths.len());
            for nodes in paths {
                let col = lp.add_var(format!("f_{}", crate::flowpaths::dash_label(&nodes)), admit);
                let last = nodes.len() - 1;
                for (pos, &v) in nodes.iter().enumerate() {
                    let weight = if pos == 0 || pos == last { T::one() } else { T::lit(2.0) };
                    touch[v].push((col, weight));
                }
                row.push((col, T::one()));
                columns.push((i, j, nodes, col));
            }
            if !row.is_empty() {
                lp.add_constraint(format!("demand_{}_{}", i + 1, j + 1), row, Relation::Le, scenario.demand.get(i, j))?;
            }
        }
    }
    for l in 0..n {
        lp.add_constraint(format!("local_{}", l + 1), vec![(local[l], T::one())], Relation::Le, scenario.demand.get(l, l))?;
        for (name, own, relayed, var) in [("cpu", c.alpha1, c.alpha2, cpu[l]), ("mem", c.beta1, c.beta2, mem[l])] {
            let mut terms = vec![(local[l], own), (var, -T::one())];
            terms.extend(touch[l].iter().map(|&(col, w)| (col, w * relayed)));
            lp.add_constraint(format!("{name}_{}", l + 1), terms, Relation::Le, T::zero())?;
        }
        lp.add_constraint(format!("cpu_cap_{}", l + 1), vec![(cpu[l], T::one())], Relation::Le, scenario.caps.cpu[l])?;
        lp.add_constraint(format!("mem_cap_{}", l + 1), vec![(mem[l], T::one())], Relation::Le, scenario.caps.mem[l])?;
    }

    let sol = lp::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(OracleError::UnexpectedStatus(sol.status));
    }
    let path_columns = columns.len();
    let paths = columns
        .into_iter()
        .filter(|(_, _, _, col)| sol.x[*col] > T::feas_tol())
        .map(|(origin, dest, nodes, col)| SignalingPath { origin, dest, nodes, flow: sol.x[col] })
        .collect();
    Ok(PathSolution {
        objective: sol.objective_value,
        paths,
        local: local.iter().map(|&v| sol.x[v]).collect(),
        cpu_use: cpu.iter().map(|&v| sol.x[v]).collect(),
        mem_use: mem.iter().map(|&v| sol.x[v]).collect(),
        path_columns,
    })
}
