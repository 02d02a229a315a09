//! Domain types shared by every stage of the controller, and the checks that
//! turn raw matrices into a validated [`Scenario`].
//!
//! Indices are 0-based in memory. Everything user-facing (errors, files,
//! reports) is 1-based.

mod file;
mod plan;

pub use file::{ScenarioFile, ScenarioFileError};
pub use plan::{AdmissionPlan, RelayKey};

use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("row {row} has {found} entries, expected {expected}")]
    NotSquare { row: usize, found: usize, expected: usize },
    #[error("adjacency is not symmetric at row {row}, column {col}")]
    NotSymmetric { row: usize, col: usize },
    #[error("adjacency diagonal entry at row {row} is non-zero")]
    NonZeroDiagonal { row: usize },
    #[error("adjacency entry {value} at row {row}, column {col} is not 0 or 1")]
    NonBinaryEntry { row: usize, col: usize, value: i64 },
    #[error("{what}: expected dimension {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("{what}: negative entry at row {row}, column {col}")]
    NegativeEntry { what: &'static str, row: usize, col: usize },
    #[error("{what}: non-finite entry at row {row}, column {col}")]
    NonFinite { what: &'static str, row: usize, col: usize },
    #[error("objective weights are degenerate (gamma + phi must be > 0)")]
    DegenerateWeights,
    #[error("cost coefficients are degenerate (alpha1 + alpha2 or beta1 + beta2 must be > 0)")]
    DegenerateCoefficients,
    #[error("duty cycle phases do not add up to the slot length")]
    InconsistentTiming,
}

fn check_value<T: Scalar>(what: &'static str, row: usize, col: usize, v: T) -> Result<(), ModelError> {
    if !v.is_finite() {
        return Err(ModelError::NonFinite { what, row: row + 1, col: col + 1 });
    }
    if v < T::zero() {
        return Err(ModelError::NegativeEntry { what, row: row + 1, col: col + 1 });
    }
    Ok(())
}

/// Undirected server connectivity (symmetric, zero diagonal, binary).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    adj: Vec<bool>,
}

/// Checks a raw 0/1 matrix and builds a [`Topology`] from it.
pub fn validate_topology(adj: &[Vec<i64>]) -> Result<Topology, ModelError> {
    let n = adj.len();
    if n == 0 {
        return Err(ModelError::EmptyMatrix);
    }
    for (r, row) in adj.iter().enumerate() {
        if row.len() != n {
            return Err(ModelError::NotSquare { row: r + 1, found: row.len(), expected: n });
        }
    }
    for (r, row) in adj.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            if v != 0 && v != 1 {
                return Err(ModelError::NonBinaryEntry { row: r + 1, col: c + 1, value: v });
            }
        }
    }
    for r in 0..n {
        if adj[r][r] != 0 {
            return Err(ModelError::NonZeroDiagonal { row: r + 1 });
        }
        for c in (r + 1)..n {
            if adj[r][c] != adj[c][r] {
                return Err(ModelError::NotSymmetric { row: r + 1, col: c + 1 });
            }
        }
    }
    Ok(Topology { n, adj: adj.iter().flatten().map(|&v| v == 1).collect() })
}

impl Topology {
    /// Builds a topology from an undirected edge list with 1-based endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, ModelError> {
        let mut m = vec![vec![0i64; n]; n];
        for &(a, b) in edges {
            if a == 0 || b == 0 || a > n || b > n {
                return Err(ModelError::DimensionMismatch { what: "edge endpoint", expected: n, found: a.max(b) });
            }
            m[a - 1][b - 1] = 1;
            m[b - 1][a - 1] = 1;
        }
        validate_topology(&m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn linked(&self, k: usize, l: usize) -> bool {
        self.adj[k * self.n + l]
    }

    /// Neighbors of `l` in increasing index order.
    pub fn neighbors(&self, l: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&k| self.linked(l, k))
    }

    pub fn degree(&self, l: usize) -> usize {
        self.neighbors(l).count()
    }

    /// Directed arcs (both orientations of every edge), lexicographic.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |k| self.neighbors(k).map(move |l| (k, l)))
    }

    pub fn edge_count(&self) -> usize {
        self.arcs().count() / 2
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Row-major 0/1 matrix, as written to scenario files.
    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.n).map(|k| (0..self.n).map(|l| self.linked(k, l) as i64).collect()).collect()
    }
}

/// Requested calls per slot: diagonal entries are local calls, off-diagonal
/// entries are outbound calls from the row server to the column server.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DemandMatrix<T> {
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, ModelError> {
        let n = rows.len();
        if n == 0 {
            return Err(ModelError::EmptyMatrix);
        }
        let mut data = Vec::with_capacity(n * n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::NotSquare { row: r + 1, found: row.len(), expected: n });
            }
            for (c, &v) in row.iter().enumerate() {
                check_value("demand", r, c, v)?;
                data.push(v);
            }
        }
        Ok(Self { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    /// Sets one entry; negative or non-finite values are rejected.
    pub fn set(&mut self, i: usize, j: usize, v: T) -> Result<(), ModelError> {
        check_value("demand", i, j, v)?;
        self.data[i * self.n + j] = v;
        Ok(())
    }

    pub fn total(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.n).map(<[T]>::to_vec).collect()
    }
}

/// Residual CPU (`cpu`) and memory (`mem`) available at each server.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceCaps<T> {
    pub cpu: Vec<T>,
    pub mem: Vec<T>,
}

impl<T: Scalar> ResourceCaps<T> {
    pub fn new(cpu: Vec<T>, mem: Vec<T>) -> Result<Self, ModelError> {
        if cpu.len() != mem.len() {
            return Err(ModelError::DimensionMismatch { what: "mem_caps", expected: cpu.len(), found: mem.len() });
        }
        for (l, &v) in cpu.iter().enumerate() {
            check_value("cpu_caps", 0, l, v)?;
        }
        for (l, &v) in mem.iter().enumerate() {
            check_value("mem_caps", 0, l, v)?;
        }
        Ok(Self { cpu, mem })
    }

    pub fn uniform(n: usize, cpu: T, mem: T) -> Result<Self, ModelError> {
        Self::new(vec![cpu; n], vec![mem; n])
    }

    pub fn n(&self) -> usize {
        self.cpu.len()
    }
}

/// Per-call resource prices: `alpha*` for CPU, `beta*` for memory. Index 1 is
/// a local call, index 2 one unit of relayed flow at one arc endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostCoefficients<T> {
    pub alpha1: T,
    pub alpha2: T,
    pub beta1: T,
    pub beta2: T,
}

impl<T: Scalar> CostCoefficients<T> {
    pub fn new(alpha1: T, alpha2: T, beta1: T, beta2: T) -> Result<Self, ModelError> {
        for (c, v) in [alpha1, alpha2, beta1, beta2].into_iter().enumerate() {
            check_value("coeffs", 0, c, v)?;
        }
        if alpha1 + alpha2 <= T::zero() && beta1 + beta2 <= T::zero() {
            return Err(ModelError::DegenerateCoefficients);
        }
        Ok(Self { alpha1, alpha2, beta1, beta2 })
    }

    /// Coefficients measured on the reference Asterisk testbed.
    pub fn reference() -> Self {
        Self {
            alpha1: T::lit(0.074104),
            alpha2: T::lit(0.025896),
            beta1: T::lit(0.327393),
            beta2: T::lit(0.184607),
        }
    }
}

/// Trade-off between admitting calls (`gamma`) and preserving resources (`phi`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights<T> {
    pub gamma: T,
    pub phi: T,
}

impl<T: Scalar> ObjectiveWeights<T> {
    pub fn new(gamma: T, phi: T) -> Result<Self, ModelError> {
        check_value("weights", 0, 0, gamma)?;
        check_value("weights", 0, 1, phi)?;
        if gamma + phi <= T::zero() {
            return Err(ModelError::DegenerateWeights);
        }
        Ok(Self { gamma, phi })
    }

    pub fn ratio(&self) -> T {
        self.gamma / self.phi
    }
}

impl<T: Scalar> fmt::Display for ObjectiveWeights<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.gamma, self.phi)
    }
}

/// Everything the admission model needs for one slot, cross-checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub topology: Topology,
    pub demand: DemandMatrix<T>,
    pub caps: ResourceCaps<T>,
    pub coeffs: CostCoefficients<T>,
    pub weights: ObjectiveWeights<T>,
}

pub fn validate_scenario<T: Scalar>(
    topology: Topology,
    demand: DemandMatrix<T>,
    caps: ResourceCaps<T>,
    coeffs: CostCoefficients<T>,
    weights: ObjectiveWeights<T>,
) -> Result<Scenario<T>, ModelError> {
    let n = topology.n();
    if demand.n() != n {
        return Err(ModelError::DimensionMismatch { what: "demand", expected: n, found: demand.n() });
    }
    if caps.cpu.len() != n {
        return Err(ModelError::DimensionMismatch { what: "cpu_caps", expected: n, found: caps.cpu.len() });
    }
    if caps.mem.len() != n {
        return Err(ModelError::DimensionMismatch { what: "mem_caps", expected: n, found: caps.mem.len() });
    }
    // the public constructors already enforce these; fields are public so recheck
    for i in 0..n {
        for j in 0..n {
            check_value("demand", i, j, demand.get(i, j))?;
        }
    }
    let caps = ResourceCaps::new(caps.cpu, caps.mem)?;
    let coeffs = CostCoefficients::new(coeffs.alpha1, coeffs.alpha2, coeffs.beta1, coeffs.beta2)?;
    let weights = ObjectiveWeights::new(weights.gamma, weights.phi)?;
    Ok(Scenario { topology, demand, caps, coeffs, weights })
}

impl<T: Scalar> Scenario<T> {
    pub fn n(&self) -> usize {
        self.topology.n()
    }

    pub fn with_weights(&self, weights: ObjectiveWeights<T>) -> Self {
        Self { weights, ..self.clone() }
    }

    pub fn with_demand(&self, demand: DemandMatrix<T>) -> Result<Self, ModelError> {
        validate_scenario(self.topology.clone(), demand, self.caps.clone(), self.coeffs, self.weights)
    }
}

/// One row of a calibration dataset, measured on a single server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSample<T> {
    pub local_calls: T,
    pub relayed_calls: T,
    pub cpu_used: T,
    pub mem_used: T,
}

impl<T: Scalar> MeasurementSample<T> {
    pub fn new(local_calls: T, relayed_calls: T, cpu_used: T, mem_used: T) -> Result<Self, ModelError> {
        for (c, v) in [local_calls, relayed_calls, cpu_used, mem_used].into_iter().enumerate() {
            check_value("sample", 0, c, v)?;
        }
        Ok(Self { local_calls, relayed_calls, cpu_used, mem_used })
    }
}

/// Phases of one controller slot, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyCycleTiming {
    pub tau: f64,
    pub t_gather: f64,
    pub t_compute: f64,
    pub t_notify: f64,
    pub t_idle: f64,
}

impl DutyCycleTiming {
    pub fn new(tau: f64, t_gather: f64, t_compute: f64, t_notify: f64, t_idle: f64) -> Result<Self, ModelError> {
        let parts = [tau, t_gather, t_compute, t_notify, t_idle];
        for (c, v) in parts.into_iter().enumerate() {
            check_value("timing", 0, c, v)?;
        }
        if (t_gather + t_compute + t_notify + t_idle - tau).abs() > 1e-9 {
            return Err(ModelError::InconsistentTiming);
        }
        Ok(Self { tau, t_gather, t_compute, t_notify, t_idle })
    }

    /// Fills in `t_idle` as whatever is left of the slot.
    pub fn with_idle_remainder(tau: f64, t_gather: f64, t_compute: f64, t_notify: f64) -> Result<Self, ModelError> {
        let idle = tau - t_gather - t_compute - t_notify;
        if idle < 0.0 {
            return Err(ModelError::InconsistentTiming);
        }
        Self::new(tau, t_gather, t_compute, t_notify, idle)
    }

    /// 3 s slots with 0.5 s gather and notify phases; compute time is filled per slot.
    pub fn default_slot() -> Self {
        Self { tau: 3.0, t_gather: 0.5, t_compute: 0.0, t_notify: 0.5, t_idle: 2.0 }
    }

    /// Time left for computing once gather and notify are paid for.
    pub fn compute_budget(&self) -> f64 {
        self.tau - self.t_gather - self.t_notify
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario_parts(n: usize) -> (Topology, DemandMatrix<f64>, ResourceCaps<f64>) {
        let topo = Topology::from_edges(n, &[(1, 2)]).unwrap();
        (topo, DemandMatrix::zeros(n), ResourceCaps::uniform(n, 100.0, 512.0).unwrap())
    }

    #[test]
    fn linked_pair_is_valid() {
        let t = validate_topology(&[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(t.n(), 2);
        assert_eq!(t.edge_count(), 1);
    }

    #[test]
    fn asymmetric_rejected() {
        assert_eq!(
            validate_topology(&[vec![0, 1], vec![0, 0]]),
            Err(ModelError::NotSymmetric { row: 1, col: 2 })
        );
    }

    #[test]
    fn topology_errors() {
        assert_eq!(validate_topology(&[]), Err(ModelError::EmptyMatrix));
        assert_eq!(validate_topology(&[vec![1]]), Err(ModelError::NonZeroDiagonal { row: 1 }));
        assert_eq!(
            validate_topology(&[vec![0, 2], vec![2, 0]]),
            Err(ModelError::NonBinaryEntry { row: 1, col: 2, value: 2 })
        );
        assert_eq!(
            validate_topology(&[vec![0, 1], vec![1]]),
            Err(ModelError::NotSquare { row: 2, found: 1, expected: 2 })
        );
    }

    #[test]
    fn negative_demand_rejected() {
        let err = DemandMatrix::from_rows(&[vec![0.0, -1.0], vec![0.0, 0.0]]).unwrap_err();
        assert_eq!(err, ModelError::NegativeEntry { what: "demand", row: 1, col: 2 });
    }

    #[test]
    fn degenerate_weights_rejected() {
        assert_eq!(ObjectiveWeights::new(0.0, 0.0), Err(ModelError::DegenerateWeights));
        let (topo, demand, caps) = scenario_parts(2);
        let bad = ObjectiveWeights { gamma: 0.0, phi: 0.0 };
        let err = validate_scenario(topo, demand, caps, CostCoefficients::reference(), bad).unwrap_err();
        assert_eq!(err, ModelError::DegenerateWeights);
    }

    #[test]
    fn dimension_mismatch() {
        let (topo, _, caps) = scenario_parts(2);
        let err = validate_scenario(
            topo,
            DemandMatrix::<f64>::zeros(3),
            caps,
            CostCoefficients::reference(),
            ObjectiveWeights::new(1.0, 1.0).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::DimensionMismatch { what: "demand", expected: 2, found: 3 }));
    }

    #[test]
    fn free_cost_model_rejected() {
        assert_eq!(CostCoefficients::new(0.0, 0.0, 0.0, 0.0), Err(ModelError::DegenerateCoefficients));
        assert!(CostCoefficients::new(0.0, 0.0, 0.1, 0.0).is_ok());
    }

    #[test]
    fn timing_must_add_up() {
        assert!(DutyCycleTiming::new(3.0, 0.5, 0.95, 0.5, 1.05).is_ok());
        assert_eq!(DutyCycleTiming::new(3.0, 0.5, 0.95, 0.5, 1.0), Err(ModelError::InconsistentTiming));
        assert_eq!(
            DutyCycleTiming::with_idle_remainder(3.0, 0.5, 2.5, 0.5),
            Err(ModelError::InconsistentTiming)
        );
    }
}
