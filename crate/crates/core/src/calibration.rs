//! Fitting per-call resource prices from server measurements.
//!
//! For CPU the model is
//!
//! ```text
//! min  sum_q x_q
//! s.t. cpu_q - (a1 * local_q + a2 * relayed_q) <= x_q
//!      a1 + a2 = max(cpu) / max(local)
//!      a1, a2, x_q >= 0
//! ```
//!
//! and memory is the same with `mem_q` and `b1`, `b2`. Only measurements
//! above the fitted line cost anything; points below it have zero slack.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, LinearProgram, LpError, LpStatus, Relation, Sense};
use crate::model::{CostCoefficients, MeasurementSample};
use crate::scalar::Scalar;

/// Largest local call count produced by [`generate_synthetic_dataset`].
pub const SYNTHETIC_MAX_CALLS: u32 = 100;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("no sample has local calls; the coefficient sum is undefined")]
    ZeroLocalCalls,
    #[error("noise level must be nonnegative")]
    InvalidNoise,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("dataset line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dataset io: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver failure: {0}")]
    Solver(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resource {
    Cpu,
    Mem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult<T> {
    pub resource: Resource,
    /// `(local, relayed)` price pair.
    pub coeffs: (T, T),
    /// Per-sample shortfall `x_q` (or `y_q`).
    pub residuals: Vec<T>,
    pub objective: T,
    /// Right-hand side of the sum constraint, `max(usage) / max(local)`.
    pub pinned_sum: T,
}

fn usage<T: Scalar>(s: &MeasurementSample<T>, resource: Resource) -> T {
    match resource {
        Resource::Cpu => s.cpu_used,
        Resource::Mem => s.mem_used,
    }
}

/// Solves the calibration LP for one resource.
pub fn estimate_coeffs<T: Scalar>(
    dataset: &[MeasurementSample<T>],
    resource: Resource,
) -> Result<CalibrationResult<T>, CalibrationError> {
    if dataset.is_empty() {
        return Err(CalibrationError::EmptyDataset);
    }
    let max_local = dataset.iter().map(|s| s.local_calls).fold(T::zero(), T::max);
    if max_local <= T::zero() {
        return Err(CalibrationError::ZeroLocalCalls);
    }
    let max_usage = dataset.iter().map(|s| usage(s, resource)).fold(T::zero(), T::max);
    let pinned_sum = max_usage / max_local;

    let mut lp = LinearProgram::new(Sense::Minimize);
    let local = lp.add_var("c_local", T::zero());
    let relayed = lp.add_var("c_relayed", T::zero());
    let slack: Vec<usize> = (0..dataset.len()).map(|q| lp.add_var(format!("x_{}", q + 1), T::one())).collect();
    for (q, s) in dataset.iter().enumerate() {
        lp.add_constraint(
            format!("fit_{}", q + 1),
            vec![(local, s.local_calls), (relayed, s.relayed_calls), (slack[q], T::one())],
            Relation::Ge,
            usage(s, resource),
        )?;
    }
    lp.add_constraint("sum", vec![(local, T::one()), (relayed, T::one())], Relation::Eq, pinned_sum)?;

    let sol = lp::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        // bounded, nonempty by construction
        return Err(LpError::NumericalFailure { iterations: sol.iterations }.into());
    }
    let residuals: Vec<T> = slack.iter().map(|&j| sol.x[j]).collect();
    Ok(CalibrationResult {
        resource,
        coeffs: (sol.x[local], sol.x[relayed]),
        objective: residuals.iter().copied().sum(),
        residuals,
        pinned_sum,
    })
}

pub fn estimate_cpu_coeffs<T: Scalar>(dataset: &[MeasurementSample<T>]) -> Result<CalibrationResult<T>, CalibrationError> {
    estimate_coeffs(dataset, Resource::Cpu)
}

pub fn estimate_mem_coeffs<T: Scalar>(dataset: &[MeasurementSample<T>]) -> Result<CalibrationResult<T>, CalibrationError> {
    estimate_coeffs(dataset, Resource::Mem)
}

/// Fits both resources and assembles a full coefficient set.
pub fn estimate_all<T: Scalar>(
    dataset: &[MeasurementSample<T>],
) -> Result<(CalibrationResult<T>, CalibrationResult<T>), CalibrationError> {
    Ok((estimate_cpu_coeffs(dataset)?, estimate_mem_coeffs(dataset)?))
}

/// Measurements drawn from known prices, standing in for a testbed run.
///
/// Sample 0 is the anchor with `local = relayed = SYNTHETIC_MAX_CALLS`, so the
/// largest usage over the largest local count is exactly the true price sum.
/// Samples 1 and 2 (when present) have `local > relayed` and `local <
/// relayed`, which makes the split between the two prices identifiable. The
/// rest are uniform call counts. Usage gets one-sided additive noise
/// `noise_level * U[0, 1)` on every sample except the anchor.
pub fn generate_synthetic_dataset<T: Scalar>(
    true_coeffs: &CostCoefficients<T>,
    h: usize,
    seed: u64,
    noise_level: T,
) -> Result<Vec<MeasurementSample<T>>, CalibrationError> {
    if h == 0 {
        return Err(CalibrationError::NoSamples);
    }
    if noise_level.is_nan() || noise_level < T::zero() {
        return Err(CalibrationError::InvalidNoise);
    }
    let max = SYNTHETIC_MAX_CALLS;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(h);
    for q in 0..h {
        let (local, relayed) = match q {
            0 => (max, max),
            1 => (max, max / 4),
            2 => (max / 4, max),
            _ => (rng.gen_range(0..=max), rng.gen_range(0..=max)),
        };
        let (noise_cpu, noise_mem) = if q == 0 {
            (T::zero(), T::zero())
        } else {
            (noise_level * T::lit(rng.gen::<f64>()), noise_level * T::lit(rng.gen::<f64>()))
        };
        let (c, r) = (T::lit(f64::from(local)), T::lit(f64::from(relayed)));
        let sample = MeasurementSample {
            local_calls: c,
            relayed_calls: r,
            cpu_used: true_coeffs.alpha1 * c + true_coeffs.alpha2 * r + noise_cpu,
            mem_used: true_coeffs.beta1 * c + true_coeffs.beta2 * r + noise_mem,
        };
        out.push(sample);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    local_calls: f64,
    relayed_calls: f64,
    cpu_used: f64,
    mem_used: f64,
}

/// Reads a `local_calls,relayed_calls,cpu_used,mem_used` CSV.
pub fn read_dataset<R: Read>(reader: R) -> Result<Vec<MeasurementSample<f64>>, CalibrationError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| CalibrationError::Parse { line: 1, message: e.to_string() })?.clone();
    let expected = ["local_calls", "relayed_calls", "cpu_used", "mem_used"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(CalibrationError::Parse { line: 1, message: format!("expected header {}", expected.join(",")) });
    }
    let mut out = Vec::new();
    for (idx, rec) in rdr.deserialize::<Row>().enumerate() {
        let line = idx + 2;
        let row = rec.map_err(|e| CalibrationError::Parse { line, message: e.to_string() })?;
        let s = MeasurementSample::new(row.local_calls, row.relayed_calls, row.cpu_used, row.mem_used)
            .map_err(|e| CalibrationError::Parse { line, message: e.to_string() })?;
        out.push(s);
    }
    Ok(out)
}

pub fn write_dataset<W: Write>(writer: W, dataset: &[MeasurementSample<f64>]) -> Result<(), CalibrationError> {
    let mut w = csv::Writer::from_writer(writer);
    for s in dataset {
        w.serialize(Row {
            local_calls: s.local_calls,
            relayed_calls: s.relayed_calls,
            cpu_used: s.cpu_used,
            mem_used: s.mem_used,
        })
        .map_err(|e| CalibrationError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(c: f64, r: f64, p: f64, m: f64) -> MeasurementSample<f64> {
        MeasurementSample::new(c, r, p, m).unwrap()
    }

    #[test]
    fn pure_local_line() {
        let data: Vec<_> = (1..=20).map(|c| sample(c as f64, 0.0, 0.1 * c as f64, 0.512 * c as f64)).collect();
        let cpu = estimate_cpu_coeffs(&data).unwrap();
        assert!((cpu.coeffs.0 - 0.1).abs() < 1e-12);
        assert!(cpu.coeffs.1.abs() < 1e-12);
        assert!(cpu.residuals.iter().all(|&x| x.abs() < 1e-12));
        let mem = estimate_mem_coeffs(&data).unwrap();
        assert!((mem.coeffs.0 - 0.512).abs() < 1e-12);
        assert!(mem.coeffs.1.abs() < 1e-12);
    }

    #[test]
    fn one_point_fit() {
        let r = estimate_cpu_coeffs(&[sample(10.0, 0.0, 1.0, 0.0)]).unwrap();
        assert!((r.coeffs.0 + r.coeffs.1 - 0.1).abs() < 1e-12);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn zero_usage() {
        let r = estimate_mem_coeffs(&[sample(10.0, 3.0, 1.0, 0.0), sample(4.0, 1.0, 0.5, 0.0)]).unwrap();
        assert_eq!(r.coeffs.0 + r.coeffs.1, 0.0);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(estimate_cpu_coeffs::<f64>(&[]), Err(CalibrationError::EmptyDataset)));
        assert!(matches!(
            estimate_cpu_coeffs(&[sample(0.0, 5.0, 1.0, 1.0)]),
            Err(CalibrationError::ZeroLocalCalls)
        ));
        let c = CostCoefficients::<f64>::reference();
        assert!(matches!(generate_synthetic_dataset(&c, 5, 1, -0.1), Err(CalibrationError::InvalidNoise)));
        assert!(matches!(generate_synthetic_dataset(&c, 0, 1, 0.0), Err(CalibrationError::NoSamples)));
    }

    #[test]
    fn reference_prices_round_trip() {
        let c = CostCoefficients::<f64>::reference();
        let data = generate_synthetic_dataset(&c, 100, 7, 0.0).unwrap();
        let (cpu, mem) = estimate_all(&data).unwrap();
        assert!((cpu.coeffs.0 - 0.074104).abs() < 1e-6 && (cpu.coeffs.1 - 0.025896).abs() < 1e-6);
        assert!((mem.coeffs.0 - 0.327393).abs() < 1e-6 && (mem.coeffs.1 - 0.184607).abs() < 1e-6);
        assert!((cpu.pinned_sum - 0.1).abs() < 1e-12);
        assert!((mem.pinned_sum - 0.512).abs() < 1e-12);
    }

    #[test]
    fn single_anchor() {
        let data = generate_synthetic_dataset(&CostCoefficients::<f64>::reference(), 1, 3, 0.5).unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(data[0].local_calls, data[0].relayed_calls);
    }

    #[test]
    fn generator_is_seeded() {
        let c = CostCoefficients::<f64>::reference();
        assert_eq!(
            generate_synthetic_dataset(&c, 50, 11, 0.3).unwrap(),
            generate_synthetic_dataset(&c, 50, 11, 0.3).unwrap()
        );
        assert_ne!(
            generate_synthetic_dataset(&c, 50, 11, 0.3).unwrap(),
            generate_synthetic_dataset(&c, 50, 12, 0.3).unwrap()
        );
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let data = generate_synthetic_dataset(&CostCoefficients::<f64>::reference(), 10, 5, 0.2).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        assert!(buf.starts_with(b"local_calls,relayed_calls,cpu_used,mem_used\n"));
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), data);

        let bad = "local_calls,relayed_calls,cpu_used,mem_used\n1,2,3,4\n1,x,3,4\n";
        match read_dataset(bad.as_bytes()) {
            Err(CalibrationError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(read_dataset("".as_bytes()), Err(CalibrationError::Parse { line: 1, .. })));
    }

    proptest! {
        #[test]
        fn noiseless_round_trip(a1 in 0.0f64..1.0, a2 in 0.0f64..1.0, seed in any::<u64>()) {
            prop_assume!(a1 + a2 > 1e-3);
            let c = CostCoefficients::new(a1, a2, a2, a1).unwrap();
            let data = generate_synthetic_dataset(&c, 40, seed, 0.0).unwrap();
            let cpu = estimate_cpu_coeffs(&data).unwrap();
            prop_assert!((cpu.coeffs.0 - a1).abs() < 1e-6 && (cpu.coeffs.1 - a2).abs() < 1e-6);
            prop_assert!(cpu.objective.abs() < 1e-9);
        }

        #[test]
        fn objective_is_one_sided_shortfall(seed in any::<u64>(), noise in 0.0f64..2.0) {
            let c = CostCoefficients::<f64>::reference();
            let data = generate_synthetic_dataset(&c, 30, seed, noise).unwrap();
            let r = estimate_cpu_coeffs(&data).unwrap();
            prop_assert!(r.residuals.iter().all(|&x| x >= 0.0));
            prop_assert!((r.coeffs.0 + r.coeffs.1 - r.pinned_sum).abs() < 1e-9);
            let shortfall: f64 = data
                .iter()
                .map(|s| (s.cpu_used - (r.coeffs.0 * s.local_calls + r.coeffs.1 * s.relayed_calls)).max(0.0))
                .sum();
            prop_assert!((shortfall - r.objective).abs() < 1e-7, "{} vs {}", shortfall, r.objective);
        }
    }
}
