use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use lbcac::calibration::{estimate_coeffs, generate_synthetic_dataset, read_dataset, write_dataset, Resource};
use lbcac::model::CostCoefficients;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};

pub fn calibrate(dataset: &Path, cpu: bool, mem: bool, out: Option<&Path>) -> CliResult {
    let file = File::open(dataset).map_err(|e| CliError::input(format!("{}: {e}", dataset.display())))?;
    let samples = read_dataset(file)?;
    let mut report = Map::new();
    for (wanted, resource, names) in [(cpu, Resource::Cpu, ["alpha1", "alpha2"]), (mem, Resource::Mem, ["beta1", "beta2"])] {
        if !wanted {
            continue;
        }
        let fit = estimate_coeffs(&samples, resource)?;
        println!(
            "{} = {:.6}, {} = {:.6} (sum {:.6}), residual sum {:.6}",
            names[0], fit.coeffs.0, names[1], fit.coeffs.1, fit.pinned_sum, fit.objective
        );
        report.insert(names[0].into(), json!(fit.coeffs.0));
        report.insert(names[1].into(), json!(fit.coeffs.1));
        let key = if resource == Resource::Cpu { "cpu_residual_sum" } else { "mem_residual_sum" };
        report.insert(key.into(), json!(fit.objective));
    }
    if let Some(out) = out {
        let mut text = serde_json::to_string_pretty(&Value::Object(report)).expect("json map serializes");
        text.push('\n');
        std::fs::write(out, text)?;
    }
    Ok(())
}

pub fn gen_dataset(out: &Path, samples: usize, seed: u64, noise: f64, coeffs: Option<&[f64]>) -> CliResult {
    let coeffs = match coeffs {
        None => CostCoefficients::reference(),
        Some(&[a1, a2, b1, b2]) => CostCoefficients::new(a1, a2, b1, b2)?,
        Some(_) => return Err(CliError::input("--coeffs takes alpha1,alpha2,beta1,beta2")),
    };
    let data = generate_synthetic_dataset(&coeffs, samples, seed, noise)?;
    write_dataset(BufWriter::new(File::create(out)?), &data)?;
    Ok(())
}
