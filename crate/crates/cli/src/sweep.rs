use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use lbcac::model::ObjectiveWeights;
use lbcac::report::{write_sweep_admission, write_sweep_resources};
use lbcac::sweep::{check_trend, default_cases, published, run_sweep, PublishedFigures, WeightCase};

use crate::error::{CliError, CliResult};
use crate::load_scenario;

/// Bundled scenarios are named `scenarioK ...`; anything else has no published figures.
fn published_for(name: &str) -> Option<PublishedFigures> {
    let k = name.strip_prefix("scenario")?.chars().next()?.to_digit(10)? as usize;
    (1..=3).contains(&k).then(|| published(k))
}

fn cases(weights: &[ObjectiveWeights<f64>]) -> CliResult<Vec<WeightCase>> {
    if weights.is_empty() {
        return Ok(default_cases());
    }
    for (a, w) in weights.iter().enumerate() {
        if weights[..a].contains(w) {
            return Err(CliError::input(format!("weight pair {w} is repeated")));
        }
    }
    if weights.len() < 2 {
        return Err(CliError::input("a sweep needs at least two distinct weight pairs"));
    }
    Ok(weights.iter().enumerate().map(|(k, &w)| WeightCase { label: format!("w{}", k + 1), weights: w }).collect())
}

pub fn sweep(scenario_path: &Path, out: &Path, weights: &[ObjectiveWeights<f64>]) -> CliResult {
    let cases = cases(weights)?;
    let (name, scenario) = load_scenario(scenario_path, &[])?;
    let rows = run_sweep(&scenario, &cases)?;

    fs::create_dir_all(out)?;
    write_sweep_admission(BufWriter::new(File::create(out.join("sweep_admission.csv"))?), &name, &rows)?;
    write_sweep_resources(BufWriter::new(File::create(out.join("sweep_resources.csv"))?), &name, &rows)?;

    let figures = if weights.is_empty() { published_for(&name) } else { None };
    println!("scenario: {name}");
    println!(
        "{:<5} {:>12} {:>10} {:>9} {:>10} {:>10} | {:>10} {:>10}",
        "case", "gamma:phi", "admitted", "rate", "cpu", "memory", "pub. adm.", "pub. serv."
    );
    for (k, r) in rows.iter().enumerate() {
        let pick = |v: Option<[u32; 4]>| v.map_or_else(|| "-".to_string(), |a| a[k].to_string());
        let (pa, ps) = figures.map_or(("-".into(), "-".into()), |f| (pick(f.admitted), pick(f.serviced)));
        println!(
            "{:<5} {:>12} {:>10.2} {:>8.2}% {:>10.4} {:>10.4} | {:>10} {:>10}",
            r.label,
            r.weights.to_string(),
            r.admitted,
            100.0 * r.admission_rate,
            r.cpu_total,
            r.mem_total,
            pa,
            ps
        );
    }
    if let Some(f) = figures {
        println!("published: {}", f.note);
        println!("(published figures come from a different topology and unknown weights; compare shape, not values)");
    }

    let trend = check_trend(&rows, 1e-6);
    if trend.holds() {
        println!("trend: admitted calls, cpu and memory are non-decreasing in gamma/phi");
        Ok(())
    } else {
        for v in &trend.violations {
            println!("trend violation: {v}");
        }
        Err(CliError::domain("sweep is not monotone in gamma/phi"))
    }
}
