use lbcac::admission::{build_admission_lp, solve_admission, verify_plan, VariableIndex};
use lbcac::fixtures::{canonical6, scenario_file};
use lbcac::flowpaths::decompose;
use lbcac::instances::{random_scenario, InstanceSpec};
use lbcac::model::{CostCoefficients, DemandMatrix, ObjectiveWeights, ResourceCaps, Scenario, Topology};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = Scenario<f64>> {
    (any::<u64>(), 0u64..1000).prop_map(|(seed, idx)| random_scenario(&InstanceSpec::default(), seed, idx))
}

fn single(demand: f64, cpu: f64, mem: f64) -> Scenario<f64> {
    lbcac::model::validate_scenario(
        Topology::from_edges(1, &[]).unwrap(),
        DemandMatrix::from_rows(&[vec![demand]]).unwrap(),
        ResourceCaps::new(vec![cpu], vec![mem]).unwrap(),
        CostCoefficients::reference(),
        ObjectiveWeights::new(1.0, 0.01).unwrap(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn admitted_and_usage_grow_with_gamma(s in instance(), bump in 1.0..20.0f64) {
        let lo = solve_admission(&s).unwrap();
        let w = ObjectiveWeights::new(s.weights.gamma * bump, s.weights.phi).unwrap();
        let hi = solve_admission(&s.with_weights(w)).unwrap();
        let sum = |v: &[f64]| v.iter().sum::<f64>();
        prop_assert!(hi.total_admitted() >= lo.total_admitted() - 1e-6);
        prop_assert!(sum(&hi.cpu_use) >= sum(&lo.cpu_use) - 1e-6);
        prop_assert!(sum(&hi.mem_use) >= sum(&lo.mem_use) - 1e-6);
    }

    // The admission term is normalised by total demand, so larger demand at the
    // same gamma makes each call worth less. Holding the per-call reward fixed,
    // the larger feasible set can only help.
    #[test]
    fn larger_demand_never_hurts_at_fixed_call_reward(s in instance(), extra in prop::collection::vec(0.0..20.0f64, 25)) {
        let n = s.n();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| s.demand.get(i, j) + extra[i * 5 + j]).collect()).collect();
        let bigger = DemandMatrix::from_rows(&rows).unwrap();
        prop_assume!(s.demand.total() > 0.0);
        let gamma = s.weights.gamma * bigger.total() / s.demand.total();
        let grown = s.with_demand(bigger).unwrap().with_weights(ObjectiveWeights::new(gamma, s.weights.phi).unwrap());
        let base = solve_admission(&s).unwrap().objective;
        let after = solve_admission(&grown).unwrap().objective;
        prop_assert!(after >= base - 1e-9, "{after} < {base}");
    }

    #[test]
    fn objective_is_normalised(s in instance()) {
        let plan = solve_admission(&s).unwrap();
        prop_assert!(plan.objective >= -2.0 * s.weights.phi - 1e-9);
        prop_assert!(plan.objective <= s.weights.gamma + 1e-9);
    }

    #[test]
    fn optimum_verifies_and_is_loop_free(s in instance()) {
        let plan = solve_admission(&s).unwrap();
        let report = verify_plan(&plan, &s, 1e-6);
        prop_assert!(report.feasible, "{:?}", report.violations);
        let d = decompose(&plan, &s.topology).unwrap();
        prop_assert!(d.loops.residual_flow <= 1e-6);
    }

    #[test]
    fn zero_demand_gives_zero_plan(s in instance()) {
        let z = s.with_demand(DemandMatrix::zeros(s.n())).unwrap();
        let plan = solve_admission(&z).unwrap();
        prop_assert_eq!(plan.total_admitted(), 0.0);
        prop_assert!(plan.relay.values().all(|&f| f == 0.0));
        prop_assert!(plan.cpu_use.iter().chain(&plan.mem_use).all(|&u| u == 0.0));
        prop_assert_eq!(plan.objective, 0.0);
    }

    #[test]
    fn single_server_closed_form(d in 0.0..500.0f64, cpu in 1.0..100.0f64, mem in 1.0..512.0f64) {
        let s = single(d, cpu, mem);
        let plan = solve_admission(&s).unwrap();
        let c = CostCoefficients::<f64>::reference();
        // one column: admit up to the tightest cap iff a call earns more than it costs
        let reward = s.weights.gamma / d;
        let cost = s.weights.phi * (c.alpha1 / cpu + c.beta1 / mem);
        prop_assume!((reward - cost).abs() > 1e-9);
        let expected = if reward > cost { d.min(cpu / c.alpha1).min(mem / c.beta1) } else { 0.0 };
        prop_assert!((plan.admitted(0, 0) - expected).abs() <= 1e-6);
    }
}

/// Relay columns on the six-server fixture: every arc of the topology, for each
/// of the 30 commodities, except arcs entering the commodity's origin.
#[test]
fn canonical_relay_column_count() {
    let s = scenario_file(3).into_scenario::<f64>().unwrap();
    assert_eq!(s.topology, canonical6());
    let index = VariableIndex::new(&s);
    assert_eq!(index.relay_count(), 400);
    let (lp, _) = build_admission_lp(&s);
    assert_eq!(lp.num_vars(), 30 + 6 + 400 + 6 + 6);
    assert_eq!(lp.num_constraints(), 240);
}

#[test]
fn f32_agrees_with_f64_on_fixture() {
    let s64 = scenario_file(2).into_scenario::<f64>().unwrap();
    let s32 = scenario_file(2).into_scenario::<f32>().unwrap();
    let a = solve_admission(&s64).unwrap();
    let b = solve_admission(&s32).unwrap();
    assert!((a.total_admitted() - b.total_admitted() as f64).abs() / a.total_admitted() < 1e-3);
    assert!((a.objective - b.objective as f64).abs() < 1e-3);
}

/// With the admission term divided by total demand, more demand at the same
/// weights can lower the optimum: the extra calls cannot be admitted, but they
/// dilute the value of the ones that are.
#[test]
fn normalised_objective_can_fall_when_demand_grows() {
    let small = single(10.0, 0.5, 512.0);
    let large = single(20.0, 0.5, 512.0);
    let a = solve_admission(&small).unwrap();
    let b = solve_admission(&large).unwrap();
    assert!((a.admitted(0, 0) - b.admitted(0, 0)).abs() < 1e-9);
    assert!(b.objective < a.objective);
}
