//! Signaling paths and routing loops inside relay flows.
//!
//! Each commodity's arc flows are peeled greedily: walk from the origin along
//! positive arcs (lowest next hop first), and every time the walk reaches the
//! destination strip the bottleneck amount off that simple path. A walk that
//! returns to a node already on it has found a loop; the loop is cancelled
//! and reported. Loops through the origin are source loops, all others are
//! non-source loops.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::admission::plan_objective;
use crate::model::{AdmissionPlan, RelayKey, Scenario, Topology};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("negative relay flow {flow} on R({}, {}, {}, {})", .key.origin + 1, .key.dest + 1, .key.from + 1, .key.to + 1)]
    NegativeFlow { key: RelayKey, flow: f64 },
    #[error("relay flow of commodity ({}, {}) is not conserved at server {}", .origin + 1, .dest + 1, .node + 1)]
    Unbalanced { origin: usize, dest: usize, node: usize },
    #[error("relay flow of commodity ({}, {}) uses missing link {}-{}", .origin + 1, .dest + 1, .from + 1, .to + 1)]
    MissingLink { origin: usize, dest: usize, from: usize, to: usize },
    #[error("plan carries {flow} units of loop flow; inspect the loop report first")]
    UndecomposableResidual { flow: f64 },
}

/// Share of one commodity's admitted calls routed along one server sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalingPath<T> {
    pub origin: usize,
    pub dest: usize,
    /// Servers from origin to destination, 0-based.
    pub nodes: Vec<usize>,
    pub flow: T,
}

impl<T> SignalingPath<T> {
    /// `1-3-5-6` style label with 1-based ids.
    pub fn label(&self) -> String {
        dash_label(&self.nodes)
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }
}

pub(crate) fn dash_label(nodes: &[usize]) -> String {
    nodes.iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join("-")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopKind {
    /// The loop passes through the commodity's origin.
    Source,
    NonSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingLoop<T> {
    pub origin: usize,
    pub dest: usize,
    /// Closed node sequence, first node repeated at the end.
    pub nodes: Vec<usize>,
    pub flow: T,
    pub kind: LoopKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopReport<T> {
    pub source_loops: Vec<RoutingLoop<T>>,
    pub non_source_loops: Vec<RoutingLoop<T>>,
    /// Flow carried by loops, i.e. not part of any origin-to-destination path.
    pub residual_flow: T,
}

impl<T: Scalar> Default for LoopReport<T> {
    fn default() -> Self {
        Self { source_loops: Vec::new(), non_source_loops: Vec::new(), residual_flow: T::zero() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    pub paths: Vec<SignalingPath<T>>,
    pub loops: LoopReport<T>,
}

impl<T: Scalar> Decomposition<T> {
    pub fn commodity_paths(&self, i: usize, j: usize) -> impl Iterator<Item = &SignalingPath<T>> {
        self.paths.iter().filter(move |p| p.origin == i && p.dest == j)
    }
}

/// Leftover imbalance below this is numerical dust and is discarded.
fn dust<T: Scalar>() -> T {
    T::feas_tol() * T::lit(100.0)
}

struct CommodityFlows<T> {
    origin: usize,
    dest: usize,
    arcs: BTreeMap<(usize, usize), T>,
}

impl<T: Scalar> CommodityFlows<T> {
    fn next_hop(&self, u: usize) -> Option<usize> {
        self.arcs
            .range((u, 0)..=(u, usize::MAX))
            .find(|(_, &f)| f > T::feas_tol())
            .map(|(&(_, v), _)| v)
    }

    fn out_flow(&self, u: usize) -> T {
        self.arcs.range((u, 0)..=(u, usize::MAX)).map(|(_, &f)| f).filter(|&f| f > T::feas_tol()).sum()
    }

    fn strip(&mut self, nodes: &[usize]) -> T {
        let amount = nodes.windows(2).map(|w| self.arcs[&(w[0], w[1])]).fold(T::infinity(), T::min);
        for w in nodes.windows(2) {
            let f = self.arcs.get_mut(&(w[0], w[1])).expect("walked arc exists");
            *f -= amount;
        }
        amount
    }

    /// Walks from `start` until it reaches the destination (when `to_dest`) or
    /// closes a loop. Loops found on the way are cancelled and recorded.
    fn walk(&mut self, start: usize, to_dest: bool, out: &mut Decomposition<T>) -> Result<bool, FlowError> {
        let mut stack = vec![start];
        loop {
            let u = *stack.last().expect("walk stack never empty");
            if to_dest && u == self.dest && stack.len() > 1 {
                let flow = self.strip(&stack);
                out.paths.push(SignalingPath { origin: self.origin, dest: self.dest, nodes: stack, flow });
                return Ok(true);
            }
            let Some(v) = self.next_hop(u) else {
                if stack.len() > 1 && self.strip(&stack) <= dust() {
                    return Ok(false);
                }
                return Err(FlowError::Unbalanced { origin: self.origin, dest: self.dest, node: u });
            };
            if let Some(pos) = stack.iter().position(|&w| w == v) {
                let mut nodes = stack[pos..].to_vec();
                nodes.push(v);
                let flow = self.strip(&nodes);
                let kind = if nodes.contains(&self.origin) { LoopKind::Source } else { LoopKind::NonSource };
                out.loops.residual_flow += flow;
                let l = RoutingLoop { origin: self.origin, dest: self.dest, nodes, flow, kind };
                match kind {
                    LoopKind::Source => out.loops.source_loops.push(l),
                    LoopKind::NonSource => out.loops.non_source_loops.push(l),
                }
                if !to_dest {
                    return Ok(true);
                }
                stack.truncate(pos + 1);
            } else {
                stack.push(v);
            }
        }
    }

    fn decompose(mut self, out: &mut Decomposition<T>) -> Result<(), FlowError> {
        while self.out_flow(self.origin) > T::feas_tol() {
            self.walk(self.origin, true, out)?;
        }
        while let Some(start) = self.arcs.iter().find(|(_, &f)| f > T::feas_tol()).map(|(&(k, _), _)| k) {
            self.walk(start, false, out)?;
        }
        Ok(())
    }
}

/// Splits every commodity's relay flow into signaling paths and loops.
pub fn decompose<T: Scalar>(plan: &AdmissionPlan<T>, topology: &Topology) -> Result<Decomposition<T>, FlowError> {
    let mut out = Decomposition { paths: Vec::new(), loops: LoopReport::default() };
    let mut by_commodity: BTreeMap<(usize, usize), BTreeMap<(usize, usize), T>> = BTreeMap::new();
    for (key, &f) in &plan.relay {
        if f < T::zero() {
            return Err(FlowError::NegativeFlow { key: *key, flow: f.as_f64() });
        }
        if key.from >= topology.n() || key.to >= topology.n() || !topology.linked(key.from, key.to) {
            return Err(FlowError::MissingLink { origin: key.origin, dest: key.dest, from: key.from, to: key.to });
        }
        by_commodity.entry((key.origin, key.dest)).or_default().insert((key.from, key.to), f);
    }
    for ((origin, dest), arcs) in by_commodity {
        CommodityFlows { origin, dest, arcs }.decompose(&mut out)?;
    }
    Ok(out)
}

/// Sums path flows back onto arcs.
pub fn aggregate<T: Scalar>(paths: &[SignalingPath<T>]) -> BTreeMap<RelayKey, T> {
    let mut relay = BTreeMap::new();
    for p in paths {
        for (k, l) in p.arcs() {
            *relay.entry(RelayKey::new(p.origin, p.dest, k, l)).or_insert_with(T::zero) += p.flow;
        }
    }
    relay
}

/// Slack used when flooring, so values like 10.9999999999 from the solver become 11.
fn floor_calls<T: Scalar>(v: T) -> T {
    (v + T::feas_tol()).floor().max(T::zero())
}

/// Recomputes resource usage and the objective from calls and flows.
pub fn recompute_usage<T: Scalar>(plan: &mut AdmissionPlan<T>, scenario: &Scenario<T>) {
    let load = plan.relay_load();
    let c = scenario.coeffs;
    for l in 0..plan.n() {
        let local = plan.admitted(l, l);
        plan.cpu_use[l] = c.alpha1 * local + c.alpha2 * load[l];
        plan.mem_use[l] = c.beta1 * local + c.beta2 * load[l];
    }
    plan.objective = plan_objective(plan, scenario);
}

/// Integer plan obtained by flooring every signaling path.
///
/// Each path is floored on its own and the result re-aggregated, so flow
/// conservation survives; admitted calls become the sum of the floored paths
/// and every resource figure can only go down.
pub fn round_plan<T: Scalar>(plan: &AdmissionPlan<T>, scenario: &Scenario<T>) -> Result<AdmissionPlan<T>, FlowError> {
    let dec = decompose(plan, &scenario.topology)?;
    if dec.loops.residual_flow > T::lit(1e-6) {
        return Err(FlowError::UndecomposableResidual { flow: dec.loops.residual_flow.as_f64() });
    }
    let floored: Vec<SignalingPath<T>> = dec
        .paths
        .into_iter()
        .map(|p| SignalingPath { flow: floor_calls(p.flow), ..p })
        .filter(|p| p.flow > T::zero())
        .collect();

    let n = plan.n();
    let mut out = AdmissionPlan::zeros(n);
    for l in 0..n {
        out.set_admitted(l, l, floor_calls(plan.admitted(l, l)));
    }
    for p in &floored {
        let c = out.admitted(p.origin, p.dest) + p.flow;
        out.set_admitted(p.origin, p.dest, c);
    }
    out.relay = aggregate(&floored);
    recompute_usage(&mut out, scenario);
    Ok(out)
}

/// Floors each arc flow and admitted count independently.
///
/// Kept as the baseline that [`round_plan`] improves on: arc-wise flooring
/// can break conservation (two 5.6 inflows against one 11.2 outflow floor to
/// 10 in and 11 out).
pub fn floor_per_arc<T: Scalar>(plan: &AdmissionPlan<T>, scenario: &Scenario<T>) -> AdmissionPlan<T> {
    let mut out = plan.clone();
    for i in 0..plan.n() {
        for j in 0..plan.n() {
            out.set_admitted(i, j, floor_calls(plan.admitted(i, j)));
        }
    }
    for f in out.relay.values_mut() {
        *f = floor_calls(*f);
    }
    recompute_usage(&mut out, scenario);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admission::{verify_plan, Family};
    use crate::fixtures::canonical6;
    use crate::model::{validate_scenario, CostCoefficients, DemandMatrix, ObjectiveWeights, ResourceCaps};

    type Flow = ((usize, usize, usize, usize), f64);

    fn plan_with(n: usize, flows: &[Flow]) -> AdmissionPlan<f64> {
        let mut plan = AdmissionPlan::zeros(n);
        for &((i, j, k, l), f) in flows {
            plan.relay.insert(RelayKey::new(i - 1, j - 1, k - 1, l - 1), f);
        }
        plan
    }

    fn fig9_flows() -> Vec<Flow> {
        vec![
            ((1, 6, 1, 3), 11.2),
            ((1, 6, 3, 5), 11.2),
            ((1, 6, 5, 6), 11.2),
            ((1, 6, 1, 2), 16.3),
            ((1, 6, 2, 4), 16.3),
            ((1, 6, 4, 6), 16.3),
        ]
    }

    fn canonical_scenario(demand16: f64) -> Scenario<f64> {
        let mut d = DemandMatrix::zeros(6);
        d.set(0, 5, demand16).unwrap();
        validate_scenario(
            canonical6(),
            d,
            ResourceCaps::uniform(6, 100.0, 512.0).unwrap(),
            CostCoefficients::reference(),
            ObjectiveWeights::new(16.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn two_signaling_paths() {
        let dec = decompose(&plan_with(6, &fig9_flows()), &canonical6()).unwrap();
        let got: Vec<(String, f64)> = dec.paths.iter().map(|p| (p.label(), p.flow)).collect();
        assert_eq!(got, vec![("1-2-4-6".to_string(), 16.3), ("1-3-5-6".to_string(), 11.2)]);
        assert_eq!(dec.loops, LoopReport::default());
    }

    #[test]
    fn direct_arc() {
        let topo = Topology::from_edges(2, &[(1, 2)]).unwrap();
        let dec = decompose(&plan_with(2, &[((1, 2, 1, 2), 5.0)]), &topo).unwrap();
        assert_eq!(dec.paths.len(), 1);
        assert_eq!(dec.paths[0].nodes, vec![0, 1]);
        assert_eq!(dec.paths[0].flow, 5.0);
    }

    #[test]
    fn injected_non_source_loop() {
        let mut flows = fig9_flows();
        flows[1].1 += 2.0; // 3 -> 5
        flows.push(((1, 6, 5, 3), 2.0));
        let dec = decompose(&plan_with(6, &flows), &canonical6()).unwrap();
        let labels: Vec<String> = dec.paths.iter().map(SignalingPath::label).collect();
        assert_eq!(labels, vec!["1-2-4-6", "1-3-5-6"]);
        assert!((dec.paths[1].flow - 11.2).abs() < 1e-12);
        assert!(dec.loops.source_loops.is_empty());
        assert_eq!(dec.loops.non_source_loops.len(), 1);
        assert_eq!(dec.loops.non_source_loops[0].nodes, vec![2, 4, 2]);
        assert!((dec.loops.residual_flow - 2.0).abs() < 1e-12);
    }

    #[test]
    fn loop_through_origin_is_source_loop() {
        let topo = Topology::from_edges(3, &[(1, 2), (2, 3)]).unwrap();
        let flows = [((1, 3, 1, 2), 4.0), ((1, 3, 2, 3), 3.0), ((1, 3, 2, 1), 1.0)];
        let dec = decompose(&plan_with(3, &flows), &topo).unwrap();
        assert_eq!(dec.paths[0].nodes, vec![0, 1, 2]);
        assert_eq!(dec.loops.source_loops.len(), 1);
        assert_eq!(dec.loops.source_loops[0].nodes, vec![0, 1, 0]);
        assert_eq!(dec.loops.residual_flow, 1.0);
    }

    #[test]
    fn negative_and_unbalanced_flows() {
        let topo = Topology::from_edges(2, &[(1, 2)]).unwrap();
        assert!(matches!(
            decompose(&plan_with(2, &[((1, 2, 1, 2), -1.0)]), &topo),
            Err(FlowError::NegativeFlow { .. })
        ));
        let topo3 = Topology::from_edges(3, &[(1, 2), (2, 3)]).unwrap();
        assert_eq!(
            decompose(&plan_with(3, &[((1, 3, 1, 2), 1.0)]), &topo3),
            Err(FlowError::Unbalanced { origin: 0, dest: 2, node: 1 })
        );
    }

    #[test]
    fn rounding_floors_each_path() {
        let s = canonical_scenario(65.0);
        let mut plan = plan_with(6, &fig9_flows());
        plan.set_admitted(0, 5, 27.5);
        recompute_usage(&mut plan, &s);
        assert!(verify_plan(&plan, &s, 1e-9).feasible);
        let rounded = round_plan(&plan, &s).unwrap();
        assert_eq!(rounded.admitted(0, 5), 27.0);
        assert_eq!(rounded.flow(&RelayKey::new(0, 5, 0, 2)), 11.0);
        assert_eq!(rounded.flow(&RelayKey::new(0, 5, 0, 1)), 16.0);
        assert!(rounded.is_integral());
        assert!(verify_plan(&rounded, &s, 0.0).feasible);
    }

    #[test]
    fn rounding_keeps_integer_plans() {
        let s = canonical_scenario(65.0);
        let mut plan = plan_with(6, &[((1, 6, 1, 2), 7.0), ((1, 6, 2, 4), 7.0), ((1, 6, 4, 6), 7.0)]);
        plan.set_admitted(0, 5, 7.0);
        recompute_usage(&mut plan, &s);
        assert_eq!(round_plan(&plan, &s).unwrap(), plan);
    }

    #[test]
    fn rounding_rejects_loops() {
        let s = canonical_scenario(65.0);
        let mut flows = fig9_flows();
        flows[1].1 += 2.0;
        flows.push(((1, 6, 5, 3), 2.0));
        let plan = plan_with(6, &flows);
        assert!(matches!(round_plan(&plan, &s), Err(FlowError::UndecomposableResidual { .. })));
    }

    #[test]
    fn arc_flooring_breaks_conservation() {
        // commodity 1 -> 4 enters server 3 on two arcs of 5.6 and leaves on one of 11.2
        let topo = Topology::from_edges(4, &[(1, 2), (1, 3), (2, 3), (3, 4)]).unwrap();
        let mut d = DemandMatrix::zeros(4);
        d.set(0, 3, 20.0).unwrap();
        let s = validate_scenario(
            topo,
            d,
            ResourceCaps::uniform(4, 100.0, 512.0).unwrap(),
            CostCoefficients::reference(),
            ObjectiveWeights::new(1.0, 1.0).unwrap(),
        )
        .unwrap();
        let mut plan = plan_with(4, &[((1, 4, 1, 3), 5.6), ((1, 4, 1, 2), 5.6), ((1, 4, 2, 3), 5.6), ((1, 4, 3, 4), 11.2)]);
        plan.set_admitted(0, 3, 11.2);
        recompute_usage(&mut plan, &s);
        assert!(verify_plan(&plan, &s, 1e-9).feasible);

        let naive = floor_per_arc(&plan, &s);
        let report = verify_plan(&naive, &s, 0.0);
        assert!(!report.feasible);
        assert_eq!(report.violation(Family::Conservation), 1.0);

        let rounded = round_plan(&plan, &s).unwrap();
        assert!(verify_plan(&rounded, &s, 0.0).feasible);
        assert_eq!(rounded.admitted(0, 3), 10.0);
    }

    #[test]
    fn local_only_rounding_recomputes_usage() {
        let s = validate_scenario(
            Topology::from_edges(1, &[]).unwrap(),
            DemandMatrix::from_rows(&[vec![2000.0]]).unwrap(),
            ResourceCaps::uniform(1, 100.0, 512.0).unwrap(),
            CostCoefficients::reference(),
            ObjectiveWeights::new(1.0, 0.0).unwrap(),
        )
        .unwrap();
        let plan = crate::admission::solve_admission(&s).unwrap();
        let rounded = round_plan(&plan, &s).unwrap();
        assert_eq!(rounded.admitted(0, 0), 1349.0);
        assert_eq!(rounded.cpu_use[0], 0.074104 * 1349.0);
        assert_eq!(rounded.mem_use[0], 0.327393 * 1349.0);
    }
}
