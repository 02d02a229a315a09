//! Seeded random scenarios for equivalence sweeps.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{validate_scenario, CostCoefficients, DemandMatrix, ObjectiveWeights, ResourceCaps, Scenario, Topology};

/// Knobs for [`random_scenario`].
#[derive(Debug, Clone)]
pub struct InstanceSpec {
    pub sizes: Vec<usize>,
    pub max_demand: f64,
    pub gammas: Vec<f64>,
    pub phis: Vec<f64>,
    /// Probability of each non-tree edge.
    pub extra_edge_prob: f64,
    /// CPU and memory caps are drawn uniformly from these ranges.
    pub cpu_range: (f64, f64),
    pub mem_range: (f64, f64),
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            sizes: vec![3, 4, 5],
            max_demand: 50.0,
            gammas: vec![1.0, 10.0],
            phis: vec![0.1, 1.0],
            extra_edge_prob: 0.4,
            cpu_range: (5.0, 100.0),
            mem_range: (25.0, 512.0),
        }
    }
}

/// Random spanning tree plus independent extra edges; always connected.
pub fn random_connected_topology<R: Rng>(n: usize, extra_edge_prob: f64, rng: &mut R) -> Topology {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut m = vec![vec![0i64; n]; n];
    for idx in 1..n {
        let parent = order[rng.gen_range(0..idx)];
        let child = order[idx];
        m[parent][child] = 1;
        m[child][parent] = 1;
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if m[a][b] == 0 && rng.gen_bool(extra_edge_prob) {
                m[a][b] = 1;
                m[b][a] = 1;
            }
        }
    }
    crate::model::validate_topology(&m).expect("generated adjacency is valid")
}

/// Scenario number `index` of the sweep seeded by `seed`.
pub fn random_scenario(spec: &InstanceSpec, seed: u64, index: u64) -> Scenario<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let n = *spec.sizes.choose(&mut rng).expect("at least one size");
    let topology = random_connected_topology(n, spec.extra_edge_prob, &mut rng);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| (rng.gen_range(0.0..=spec.max_demand) * 10.0f64).round() / 10.0).collect())
        .collect();
    let demand = DemandMatrix::from_rows(&rows).expect("nonnegative demand");
    let cpu: Vec<f64> = (0..n).map(|_| rng.gen_range(spec.cpu_range.0..=spec.cpu_range.1)).collect();
    let mem: Vec<f64> = (0..n).map(|_| rng.gen_range(spec.mem_range.0..=spec.mem_range.1)).collect();
    let caps = ResourceCaps::new(cpu, mem).expect("nonnegative caps");
    let gamma = *spec.gammas.choose(&mut rng).expect("at least one gamma");
    let phi = *spec.phis.choose(&mut rng).expect("at least one phi");
    validate_scenario(
        topology,
        demand,
        caps,
        CostCoefficients::reference(),
        ObjectiveWeights::new(gamma, phi).expect("positive weights"),
    )
    .expect("generated scenario is consistent")
}
