use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cutter_core::{IterationRecord, SolveResult, StepPolicy};

pub const TRACE_HEADER: [&str; 6] = [
    "iter",
    "residual",
    "sigma",
    "lambda",
    "dist_to_ref",
    "stage_sq_sum",
];

fn field(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_trace(path: &Path, trace: &[IterationRecord]) -> Result<()> {
    let mut out =
        csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    out.write_record(TRACE_HEADER)?;
    for r in trace {
        out.write_record([
            r.k.to_string(),
            r.residual.to_string(),
            field(r.sigma),
            field(r.lambda),
            field(r.dist_to_ref),
            r.stage_sq_sum.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `runs/out.csv` becomes `runs/out-sigma-max.csv`.
pub fn policy_trace_path(base: &Path, policy: StepPolicy) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let tag = policy.to_string().replace(':', "-");
    base.with_file_name(format!("{stem}-{tag}.csv"))
}

pub fn print_table(policies: &[StepPolicy], results: &[SolveResult]) {
    println!(
        "{:<18} {:>10} {:>14} {:>12}  status",
        "policy", "iterations", "residual", "applications"
    );
    for (policy, r) in policies.iter().zip(results) {
        println!(
            "{:<18} {:>10} {:>14.6e} {:>12}  {}",
            policy.to_string(),
            r.iterations(),
            r.final_residual(),
            r.operator_applications(),
            r.status
        );
    }
}
