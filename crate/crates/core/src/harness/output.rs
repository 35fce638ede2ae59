use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use tempfile::NamedTempFile;

use crate::error::Result;
use crate::trace::{fmt_float, METRIC_COLUMNS};

use super::experiment::{AggregateRow, ExperimentReport};

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_else(|| "nan".into())
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from("t");
    for name in &METRIC_COLUMNS[1..] {
        for stat in ["mean", "std", "min", "max"] {
            write!(out, ",{name}_{stat}").unwrap();
        }
    }
    out.push('\n');
    for row in rows {
        write!(out, "{}", row.t).unwrap();
        for j in 0..6 {
            for v in [row.mean[j], row.std[j], row.min[j], row.max[j]] {
                write!(out, ",{}", fmt_float(v)).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

pub fn seeds_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("algorithm,rep,seed,status,iterations,grad_calls,noise_checksum\n");
    for c in &report.cells {
        let status = if c.ok() { "ok" } else { "failed" };
        writeln!(
            out,
            "{},{},{},{status},{},{},{:016x}",
            c.algorithm,
            c.rep,
            c.seed,
            c.trace.len(),
            c.trace.grad_calls,
            c.trace.noise_checksum
        )
        .unwrap();
    }
    out
}

pub fn constants_csv(report: &ExperimentReport) -> String {
    let c = &report.constants;
    let mut out = String::from("name,value\n");
    for (name, v) in [
        ("L", c.l_smooth),
        ("mu", c.mu),
        ("sigma_sq", c.sigma_sq),
        ("zeta_sq", c.zeta_sq),
        ("f_star", c.f_star.unwrap_or(f64::NAN)),
        ("lambda", report.lambda),
        ("zeta0_sq", report.zeta0_sq),
        ("f0_gap", report.f0_gap),
    ] {
        writeln!(out, "{name},{}", fmt_float(v)).unwrap();
    }
    out
}

pub fn bounds_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(
        "algorithm,alpha,beta,theorem1_bound,theorem1_lhs,theorem2_final,theorem2_floor,\
         max_step_nonconvex,max_step_pl,max_step_pl_literal\n",
    );
    for agg in &report.aggregates {
        let Some(b) = &agg.bounds else { continue };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            agg.algorithm,
            fmt_float(b.inputs.alpha),
            fmt_float(b.inputs.beta),
            fmt_float(b.theorem1),
            fmt_float(b.theorem1_lhs),
            opt(b.theorem2_final),
            opt(b.theorem2_floor),
            fmt_float(b.max_step_nonconvex),
            fmt_float(b.max_step_pl),
            fmt_float(b.max_step_pl_literal),
        )
        .unwrap();
    }
    out
}

/// One line per algorithm with the final aggregated metrics.
pub fn summary_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("algorithm,reps_ok,reps_failed");
    for name in &METRIC_COLUMNS[1..] {
        write!(out, ",final_{name}_mean,final_{name}_std").unwrap();
    }
    out.push('\n');
    for agg in &report.aggregates {
        write!(out, "{},{},{}", agg.algorithm, agg.reps_ok, agg.failed_reps.len()).unwrap();
        match agg.rows.last() {
            Some(row) => {
                for j in 0..6 {
                    write!(out, ",{},{}", fmt_float(row.mean[j]), fmt_float(row.std[j])).unwrap();
                }
            }
            None => out.push_str(&",nan".repeat(12)),
        }
        out.push('\n');
    }
    out
}

pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_atomic(&dir.join("config.toml"), &report.config.to_toml())?;
    write_atomic(&dir.join("version.txt"), &format!("{}\n", crate::VERSION))?;
    write_atomic(&dir.join("seeds.csv"), &seeds_csv(report))?;
    write_atomic(&dir.join("constants.csv"), &constants_csv(report))?;
    write_atomic(&dir.join("bounds.csv"), &bounds_csv(report))?;
    write_atomic(&dir.join("summary.csv"), &summary_csv(report))?;
    if report.config.wants("traces") {
        for c in &report.cells {
            let path = dir.join(c.algorithm.name()).join(format!("rep_{:03}.csv", c.rep));
            write_atomic(&path, &c.trace.to_csv())?;
        }
    }
    if report.config.wants("aggregate") {
        for agg in &report.aggregates {
            write_atomic(&dir.join(agg.algorithm.name()).join("aggregate.csv"), &aggregate_csv(&agg.rows))?;
        }
    }
    if let Some(dump) = &report.problem_dump {
        write_atomic(&dir.join("problem.txt"), dump)?;
    }
    if !report.warnings.is_empty() {
        write_atomic(&dir.join("warnings.txt"), &(report.warnings.join("\n") + "\n"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("a.csv");
        write_atomic(&path, "one\n").unwrap();
        write_atomic(&path, "two\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two\n");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn aggregate_header() {
        let csv = aggregate_csv(&[]);
        assert!(csv.starts_with("t,consensus_dev_mean,consensus_dev_std,consensus_dev_min,consensus_dev_max,"));
        assert_eq!(csv.trim().split(',').count(), 25);
    }
}
