use lbcac::admission::{solve_admission, verify_plan};
use lbcac::flowpaths::{aggregate, decompose, round_plan};
use lbcac::instances::{random_scenario, InstanceSpec};
use lbcac::oracle::{solve_path_lp, DEFAULT_PATH_CAP};

const SEED: u64 = 0x5eed_0002;

#[test]
fn arc_and_path_models_agree() {
    let spec = InstanceSpec::default();
    for idx in 0..40 {
        let s = random_scenario(&spec, SEED, idx);
        let arc = solve_admission(&s).unwrap();
        let path = solve_path_lp(&s, s.n() - 1, DEFAULT_PATH_CAP).unwrap();
        assert!((arc.objective - path.objective).abs() <= 1e-6, "instance {idx}: {} vs {}", arc.objective, path.objective);
    }
}

#[test]
fn path_solutions_decompose_back_to_themselves() {
    let spec = InstanceSpec::default();
    for idx in 0..40 {
        let s = random_scenario(&spec, SEED, idx);
        let sol = solve_path_lp(&s, s.n() - 1, DEFAULT_PATH_CAP).unwrap();
        let plan = sol.to_plan(&s);
        assert!(verify_plan(&plan, &s, 1e-6).feasible, "instance {idx}");
        let d = decompose(&plan, &s.topology).unwrap();
        assert!(d.loops.residual_flow <= 1e-6);
        let before = aggregate(&sol.paths);
        let after = aggregate(&d.paths);
        for (key, &f) in before.iter().chain(after.iter()) {
            let other = if before.contains_key(key) { after.get(key) } else { before.get(key) };
            assert!((f - other.copied().unwrap_or(0.0)).abs() <= 1e-6, "instance {idx} arc {key:?}");
        }
        for i in 0..s.n() {
            for j in 0..s.n() {
                if i != j {
                    let total: f64 = d.commodity_paths(i, j).map(|p| p.flow).sum();
                    assert!((total - plan.admitted(i, j)).abs() <= 1e-6);
                }
            }
        }
    }
}

#[test]
fn rounded_optima_stay_feasible() {
    let spec = InstanceSpec::default();
    for idx in 0..40 {
        let s = random_scenario(&spec, SEED, idx);
        let rounded = round_plan(&solve_admission(&s).unwrap(), &s).unwrap();
        assert!(rounded.is_integral());
        let report = verify_plan(&rounded, &s, 1e-6);
        assert!(report.feasible, "instance {idx}: {:?}", report.violations);
    }
}
