//! The admission/routing linear program.
//!
//! Columns are the admitted calls `C(i,j)`, relay flows `R(i,j,k,l)` of
//! commodity `i -> j` on arc `k -> l`, and the CPU/memory reservations
//! `p(l)`, `m(l)`. The objective rewards the admitted share of demand and
//! charges the reserved share of capacity:
//!
//! ```text
//! max  gamma * sum C / sum demand  -  phi * (sum p / sum P + sum m / sum M)
//! ```
//!
//! Relay columns only exist for arcs of the topology, for commodities with
//! positive demand, and never for arcs entering the commodity's origin.
//! Local calls never relay. A server pays `alpha2` per unit of flow on each
//! incident arc, so transit servers pay twice and endpoints once.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::lp::{self, LinearProgram, LpError, LpStatus, Relation, Sense};
use crate::model::{AdmissionPlan, RelayKey, Scenario};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdmissionError {
    #[error("admission model reported infeasible")]
    InfeasibleModel,
    #[error("admission model reported unbounded")]
    UnboundedModel,
    #[error("solver failure: {0}")]
    SolverFailure(#[from] LpError),
}

/// Semantic meaning of an LP column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Admitted(usize, usize),
    Relay(RelayKey),
    Cpu(usize),
    Mem(usize),
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Column::Admitted(i, j) => write!(f, "C_{}_{}", i + 1, j + 1),
            Column::Relay(k) => write!(f, "R_{}_{}_{}_{}", k.origin + 1, k.dest + 1, k.from + 1, k.to + 1),
            Column::Cpu(l) => write!(f, "p_{}", l + 1),
            Column::Mem(l) => write!(f, "m_{}", l + 1),
        }
    }
}

/// Bijection between LP columns and model variables.
#[derive(Debug, Clone)]
pub struct VariableIndex {
    n: usize,
    columns: Vec<Column>,
    admitted: Vec<usize>,
    relay: BTreeMap<RelayKey, usize>,
    cpu: Vec<usize>,
    mem: Vec<usize>,
}

impl VariableIndex {
    /// Enumerates the columns for `scenario` in the order the LP uses them.
    pub fn new<T: Scalar>(scenario: &Scenario<T>) -> Self {
        let n = scenario.n();
        let topo = &scenario.topology;
        let mut columns = Vec::new();
        let mut admitted = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                admitted.push(columns.len());
                columns.push(Column::Admitted(i, j));
            }
        }
        let mut relay = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || scenario.demand.get(i, j) <= T::zero() {
                    continue;
                }
                for (k, l) in topo.arcs() {
                    if l == i {
                        continue;
                    }
                    let key = RelayKey::new(i, j, k, l);
                    relay.insert(key, columns.len());
                    columns.push(Column::Relay(key));
                }
            }
        }
        let cpu = (0..n).map(|l| columns.len() + l).collect();
        columns.extend((0..n).map(Column::Cpu));
        let mem = (0..n).map(|l| columns.len() + l).collect();
        columns.extend((0..n).map(Column::Mem));
        Self { n, columns, admitted, relay, cpu, mem }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, col: usize) -> Column {
        self.columns[col]
    }

    pub fn admitted(&self, i: usize, j: usize) -> usize {
        self.admitted[i * self.n + j]
    }

    pub fn relay(&self, key: &RelayKey) -> Option<usize> {
        self.relay.get(key).copied()
    }

    pub fn relay_keys(&self) -> impl Iterator<Item = &RelayKey> {
        self.relay.keys()
    }

    pub fn relay_count(&self) -> usize {
        self.relay.len()
    }

    pub fn cpu(&self, l: usize) -> usize {
        self.cpu[l]
    }

    pub fn mem(&self, l: usize) -> usize {
        self.mem[l]
    }

    /// Relay columns of commodity `(i, j)`.
    fn commodity(&self, i: usize, j: usize) -> impl Iterator<Item = (&RelayKey, &usize)> {
        self.relay.range(RelayKey::new(i, j, 0, 0)..=RelayKey::new(i, j, usize::MAX, usize::MAX))
    }
}

fn ratio<T: Scalar>(weight: T, total: T) -> T {
    if total > T::zero() {
        weight / total
    } else {
        T::zero()
    }
}

/// Objective coefficients `(per admitted call, per CPU unit, per memory unit)`.
fn objective_rates<T: Scalar>(s: &Scenario<T>) -> (T, T, T) {
    let total_cpu: T = s.caps.cpu.iter().copied().sum();
    let total_mem: T = s.caps.mem.iter().copied().sum();
    (
        ratio(s.weights.gamma, s.demand.total()),
        ratio(s.weights.phi, total_cpu),
        ratio(s.weights.phi, total_mem),
    )
}

/// Objective value of `plan` under `scenario`'s weights.
pub fn plan_objective<T: Scalar>(plan: &AdmissionPlan<T>, scenario: &Scenario<T>) -> T {
    let (admit, cpu, mem) = objective_rates(scenario);
    let used_cpu: T = plan.cpu_use.iter().copied().sum();
    let used_mem: T = plan.mem_use.iter().copied().sum();
    admit * plan.total_admitted() - cpu * used_cpu - mem * used_mem
}

/// Materializes the admission LP for `scenario`.
pub fn build_admission_lp<T: Scalar>(scenario: &Scenario<T>) -> (LinearProgram<T>, VariableIndex) {
    let index = VariableIndex::new(scenario);
    let n = scenario.n();
    let c = scenario.coeffs;
    let (admit_rate, cpu_rate, mem_rate) = objective_rates(scenario);

    let mut lp = LinearProgram::new(Sense::Maximize);
    for col in 0..index.len() {
        let column = index.column(col);
        let cost = match column {
            Column::Admitted(..) => admit_rate,
            Column::Relay(_) => T::zero(),
            Column::Cpu(_) => -cpu_rate,
            Column::Mem(_) => -mem_rate,
        };
        lp.add_var(column.to_string(), cost);
    }

    let add = |lp: &mut LinearProgram<T>, name: String, terms: Vec<(usize, T)>, rel, rhs| {
        lp.add_constraint(name, terms, rel, rhs).expect("admission rows reference indexed columns");
    };
    let one = T::one();

    for i in 0..n {
        for j in 0..n {
            let name = format!("I_{}_{}", i + 1, j + 1);
            add(&mut lp, name, vec![(index.admitted(i, j), one)], Relation::Le, scenario.demand.get(i, j));
        }
    }

    for i in 0..n {
        for j in 0..n {
            if i == j || scenario.demand.get(i, j) <= T::zero() {
                continue;
            }
            let mut inflow: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
            let mut outflow: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
            for (key, &col) in index.commodity(i, j) {
                inflow[key.to].push((col, one));
                outflow[key.from].push((col, one));
            }
            for l in (0..n).filter(|&l| l != i && l != j) {
                let mut terms = inflow[l].clone();
                terms.extend(outflow[l].iter().map(|&(col, a)| (col, -a)));
                if !terms.is_empty() {
                    add(&mut lp, format!("II_{}_{}_{}", i + 1, j + 1, l + 1), terms, Relation::Eq, T::zero());
                }
            }
            let mut terms = std::mem::take(&mut inflow[j]);
            terms.push((index.admitted(i, j), -one));
            add(&mut lp, format!("III_{}_{}", i + 1, j + 1), terms, Relation::Eq, T::zero());
            let mut terms = std::mem::take(&mut outflow[i]);
            terms.push((index.admitted(i, j), -one));
            add(&mut lp, format!("IV_{}_{}", i + 1, j + 1), terms, Relation::Eq, T::zero());
        }
    }

    // Every relay column touches exactly two servers.
    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); n];
    for key in index.relay_keys() {
        let col = index.relay(key).expect("key came from the index");
        touching[key.from].push(col);
        touching[key.to].push(col);
    }
    for l in 0..n {
        for (family, local, relayed, var) in [
            ("VII", c.alpha1, c.alpha2, index.cpu(l)),
            ("VIII", c.beta1, c.beta2, index.mem(l)),
        ] {
            let mut terms = vec![(index.admitted(l, l), local)];
            terms.extend(touching[l].iter().map(|&col| (col, relayed)));
            terms.push((var, -one));
            add(&mut lp, format!("{family}_{}", l + 1), terms, Relation::Le, T::zero());
        }
    }
    for l in 0..n {
        add(&mut lp, format!("IX_{}", l + 1), vec![(index.cpu(l), one)], Relation::Le, scenario.caps.cpu[l]);
        add(&mut lp, format!("X_{}", l + 1), vec![(index.mem(l), one)], Relation::Le, scenario.caps.mem[l]);
    }
    (lp, index)
}

/// Reads a plan back out of an optimal column vector.
///
/// Values below the solver's feasibility tolerance are snapped to zero and
/// zero relay entries are dropped.
pub fn extract_plan<T: Scalar>(x: &[T], index: &VariableIndex, scenario: &Scenario<T>) -> AdmissionPlan<T> {
    let n = scenario.n();
    let snap = |v: T| if v < T::feas_tol() { T::zero() } else { v };
    let mut plan = AdmissionPlan::zeros(n);
    for i in 0..n {
        for j in 0..n {
            plan.set_admitted(i, j, snap(x[index.admitted(i, j)]).min(scenario.demand.get(i, j)));
        }
    }
    for key in index.relay_keys() {
        let v = snap(x[index.relay(key).expect("indexed")]);
        if v > T::zero() {
            plan.relay.insert(*key, v);
        }
    }
    for l in 0..n {
        plan.cpu_use[l] = snap(x[index.cpu(l)]).min(scenario.caps.cpu[l]);
        plan.mem_use[l] = snap(x[index.mem(l)]).min(scenario.caps.mem[l]);
    }
    plan.objective = plan_objective(&plan, scenario);
    plan
}

/// Builds and solves the admission LP.
pub fn solve_admission<T: Scalar>(scenario: &Scenario<T>) -> Result<AdmissionPlan<T>, AdmissionError> {
    let (lp, index) = build_admission_lp(scenario);
    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(extract_plan(&sol.x, &index, scenario)),
        LpStatus::Infeasible => Err(AdmissionError::InfeasibleModel),
        LpStatus::Unbounded => Err(AdmissionError::UnboundedModel),
    }
}

/// Constraint groups checked by [`verify_plan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Family {
    /// `0 <= C(i,j) <= demand(i,j)`.
    AdmissionBound,
    /// Transit conservation.
    Conservation,
    /// Inflow at the destination equals admitted calls.
    DestinationInflow,
    /// Outflow at the origin equals admitted calls.
    OriginOutflow,
    /// No relay for local calls.
    LocalRelay,
    /// No flow back into the origin.
    OriginReentry,
    /// Relay flows are nonnegative and sit on topology arcs.
    RelaySupport,
    CpuUsage,
    MemUsage,
    CpuCap,
    MemCap,
}

impl Family {
    pub const ALL: [Family; 11] = [
        Family::AdmissionBound,
        Family::Conservation,
        Family::DestinationInflow,
        Family::OriginOutflow,
        Family::LocalRelay,
        Family::OriginReentry,
        Family::RelaySupport,
        Family::CpuUsage,
        Family::MemUsage,
        Family::CpuCap,
        Family::MemCap,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Family::AdmissionBound => "I",
            Family::Conservation => "II",
            Family::DestinationInflow => "III",
            Family::OriginOutflow => "IV",
            Family::LocalRelay => "V",
            Family::OriginReentry => "VI",
            Family::RelaySupport => "arcs",
            Family::CpuUsage => "VII",
            Family::MemUsage => "VIII",
            Family::CpuCap => "IX",
            Family::MemCap => "X",
        }
    }

    /// Families about resources rather than call and flow counts.
    pub fn is_resource(self) -> bool {
        matches!(self, Family::CpuUsage | Family::MemUsage | Family::CpuCap | Family::MemCap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport<T> {
    /// Largest violation per family, in [`Family::ALL`] order.
    pub violations: Vec<(Family, T)>,
    pub max_violation: T,
    pub feasible: bool,
}

impl<T: Scalar> VerificationReport<T> {
    pub fn violation(&self, family: Family) -> T {
        self.violations.iter().find(|(f, _)| *f == family).map(|&(_, v)| v).unwrap_or_else(T::zero)
    }

    /// Feasibility with separate tolerances for flow families and resource families.
    pub fn feasible_within(&self, flow_tol: T, resource_tol: T) -> bool {
        self.violations
            .iter()
            .all(|&(f, v)| v <= if f.is_resource() { resource_tol } else { flow_tol })
    }
}

/// Measures how far `plan` is from satisfying every constraint family.
pub fn verify_plan<T: Scalar>(plan: &AdmissionPlan<T>, scenario: &Scenario<T>, tol: T) -> VerificationReport<T> {
    let n = scenario.n();
    let mut worst: BTreeMap<Family, T> = Family::ALL.iter().map(|&f| (f, T::zero())).collect();
    let mut bump = |f: Family, v: T| {
        let e = worst.get_mut(&f).expect("all families seeded");
        if v > *e || v.is_nan() {
            *e = v;
        }
    };

    for i in 0..n {
        for j in 0..n {
            let c = plan.admitted(i, j);
            bump(Family::AdmissionBound, c - scenario.demand.get(i, j));
            bump(Family::AdmissionBound, -c);
        }
    }

    let mut inflow = vec![T::zero(); n * n * n];
    let mut outflow = vec![T::zero(); n * n * n];
    let at = |i: usize, j: usize, l: usize| (i * n + j) * n + l;
    for (key, &f) in &plan.relay {
        if key.origin >= n || key.dest >= n || key.from >= n || key.to >= n {
            bump(Family::RelaySupport, f.abs());
            continue;
        }
        bump(Family::RelaySupport, -f);
        if !scenario.topology.linked(key.from, key.to) {
            bump(Family::RelaySupport, f.abs());
        }
        if key.origin == key.dest {
            bump(Family::LocalRelay, f.abs());
        }
        if key.to == key.origin {
            bump(Family::OriginReentry, f.abs());
        }
        inflow[at(key.origin, key.dest, key.to)] += f;
        outflow[at(key.origin, key.dest, key.from)] += f;
    }
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let c = plan.admitted(i, j);
            bump(Family::DestinationInflow, (inflow[at(i, j, j)] - c).abs());
            bump(Family::OriginOutflow, (outflow[at(i, j, i)] - c).abs());
            for l in (0..n).filter(|&l| l != i && l != j) {
                bump(Family::Conservation, (inflow[at(i, j, l)] - outflow[at(i, j, l)]).abs());
            }
        }
    }

    let load = plan.relay_load();
    let c = scenario.coeffs;
    for l in 0..n {
        let local = plan.admitted(l, l);
        bump(Family::CpuUsage, c.alpha1 * local + c.alpha2 * load[l] - plan.cpu_use[l]);
        bump(Family::MemUsage, c.beta1 * local + c.beta2 * load[l] - plan.mem_use[l]);
        bump(Family::CpuCap, plan.cpu_use[l] - scenario.caps.cpu[l]);
        bump(Family::MemCap, plan.mem_use[l] - scenario.caps.mem[l]);
    }

    let violations: Vec<(Family, T)> = worst.into_iter().collect();
    let max_violation = violations.iter().map(|&(_, v)| v).fold(T::zero(), T::max);
    let feasible = violations.iter().all(|&(_, v)| v <= tol);
    VerificationReport { violations, max_violation, feasible }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_scenario, CostCoefficients, DemandMatrix, ObjectiveWeights, ResourceCaps, Topology};

    fn single(demand: f64, gamma: f64, phi: f64) -> Scenario<f64> {
        validate_scenario(
            Topology::from_edges(1, &[]).unwrap(),
            DemandMatrix::from_rows(&[vec![demand]]).unwrap(),
            ResourceCaps::uniform(1, 100.0, 512.0).unwrap(),
            CostCoefficients::reference(),
            ObjectiveWeights::new(gamma, phi).unwrap(),
        )
        .unwrap()
    }

    fn pair(demand12: f64) -> Scenario<f64> {
        validate_scenario(
            Topology::from_edges(2, &[(1, 2)]).unwrap(),
            DemandMatrix::from_rows(&[vec![0.0, demand12], vec![0.0, 0.0]]).unwrap(),
            ResourceCaps::uniform(2, 100.0, 512.0).unwrap(),
            CostCoefficients::reference(),
            ObjectiveWeights::new(1.0, 0.01).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_server_shape() {
        let (lp, index) = build_admission_lp(&single(1000.0, 1.0, 0.0));
        assert_eq!(lp.num_vars(), 3);
        assert_eq!(lp.num_constraints(), 5);
        assert_eq!(index.relay_count(), 0);
    }

    #[test]
    fn pair_has_one_relay_column() {
        let (lp, index) = build_admission_lp(&pair(10.0));
        assert_eq!(index.relay_keys().copied().collect::<Vec<_>>(), vec![RelayKey::new(0, 1, 0, 1)]);
        assert_eq!(lp.num_vars(), 4 + 1 + 2 + 2);
    }

    #[test]
    fn single_server_fits_within_caps() {
        let plan = solve_admission(&single(1000.0, 1.0, 0.0)).unwrap();
        assert!((plan.admitted(0, 0) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn single_server_cpu_binds() {
        let plan = solve_admission(&single(2000.0, 1.0, 0.0)).unwrap();
        let expected = 100.0 / 0.074104;
        assert!((plan.admitted(0, 0) - expected).abs() < 1e-6, "{}", plan.admitted(0, 0));
        assert!(expected < 512.0 / 0.327393);
    }

    #[test]
    fn pure_preservation_admits_nothing() {
        let plan = solve_admission(&single(500.0, 0.0, 1.0)).unwrap();
        assert_eq!(plan.total_admitted(), 0.0);
        assert_eq!(plan.cpu_use, vec![0.0]);
        assert_eq!(plan.mem_use, vec![0.0]);
        assert_eq!(plan.objective, 0.0);
    }

    #[test]
    fn pair_routes_directly() {
        let s = pair(10.0);
        let plan = solve_admission(&s).unwrap();
        assert!((plan.admitted(0, 1) - 10.0).abs() < 1e-9);
        assert!((plan.flow(&RelayKey::new(0, 1, 0, 1)) - 10.0).abs() < 1e-9);
        let report = verify_plan(&plan, &s, 1e-6);
        assert!(report.feasible, "{report:?}");
    }

    #[test]
    fn overadmission_is_reported() {
        let s = single(10.0, 1.0, 1.0);
        let mut plan = solve_admission(&s).unwrap();
        plan.set_admitted(0, 0, 11.0);
        plan.cpu_use[0] = 11.0 * 0.074104;
        plan.mem_use[0] = 11.0 * 0.327393;
        let report = verify_plan(&plan, &s, 1e-6);
        assert!(!report.feasible);
        assert!((report.violation(Family::AdmissionBound) - 1.0).abs() < 1e-12);
        assert_eq!(report.violation(Family::CpuUsage), 0.0);
    }

    #[test]
    fn forbidden_keys_are_reported() {
        let s = pair(10.0);
        let mut plan = solve_admission(&s).unwrap();
        plan.relay.insert(RelayKey::new(0, 1, 1, 0), 2.0);
        let report = verify_plan(&plan, &s, 1e-6);
        assert_eq!(report.violation(Family::OriginReentry), 2.0);
        assert!(!report.feasible);
    }

    #[test]
    fn zero_demand_gives_zero_plan() {
        let plan = solve_admission(&single(0.0, 1.0, 1.0)).unwrap();
        assert_eq!(plan, AdmissionPlan::zeros(1));
    }
}
