use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::trace::fmt_float;

use super::config::{RunConfig, SweepPoint};
use super::experiment::{run_experiment, ExperimentReport};
use super::output::write_atomic;

#[derive(Debug)]
pub struct SweepReport {
    pub points: Vec<(SweepPoint, ExperimentReport)>,
}

impl SweepReport {
    pub fn failed(&self) -> bool {
        self.points.iter().any(|(_, r)| r.failed())
    }
}

pub fn point_dir(index: usize) -> String {
    format!("point_{index:03}")
}

/// Index of a sweep: one line per point with its scalar key values.
pub fn index_csv(points: &[(SweepPoint, ExperimentReport)]) -> String {
    let mut out = String::from("point,dir,c,sigma_h,alpha,beta,n,status\n");
    for (p, r) in points {
        let c = &p.config;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.index,
            point_dir(p.index),
            fmt_float(c.divisor().unwrap_or(f64::NAN)),
            fmt_float(c.spread().unwrap_or(f64::NAN)),
            fmt_float(c.alpha.values()[0]),
            fmt_float(c.beta.values()[0]),
            c.agents().unwrap_or(0),
            if r.failed() { "failed" } else { "ok" },
        )
        .unwrap();
    }
    out
}

/// Runs every point of the config's Cartesian product. The point count is
/// checked against `sweep_budget` before anything runs. With `out` set, each
/// point is written to `out/point_NNN/` as soon as it finishes, and
/// `out/index.csv` maps points to directories.
pub fn run_sweep(cfg: &RunConfig, jobs: usize, out: Option<&Path>) -> Result<SweepReport> {
    let points = cfg.points()?;
    let mut done = Vec::with_capacity(points.len());
    for point in points {
        let report = run_experiment(&point.config, jobs)?;
        if let Some(dir) = out {
            report.write(&dir.join(point_dir(point.index)))?;
        }
        done.push((point, report));
    }
    if let Some(dir) = out {
        write_atomic(&dir.join("config.toml"), &cfg.to_toml())?;
        write_atomic(&dir.join("version.txt"), &format!("{}\n", crate::VERSION))?;
        write_atomic(&dir.join("index.csv"), &index_csv(&done))?;
    }
    Ok(SweepReport { points: done })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn sweep_writes_index() {
        let text = "problem = \"quadratic\"\nn = 4\nd = 2\np = 3\nc = [1.0, 4.0]\nalpha = [0.01, 0.02]\n\
                    algorithm = \"edm\"\nT = 5\n";
        let cfg = RunConfig::parse(text, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let report = run_sweep(&cfg, 1, Some(dir.path())).unwrap();
        assert_eq!(report.points.len(), 4);
        let index = std::fs::read_to_string(dir.path().join("index.csv")).unwrap();
        let lines: Vec<&str> = index.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("1,point_001,1.0000000000000000e0,1.0000000000000000e0,2.0000000000000000e-2,"), "{}", lines[2]);
        assert!(dir.path().join("point_003/edm/rep_000.csv").is_file());
    }

    #[test]
    fn budget_checked_first() {
        let text = "problem = \"quadratic\"\nn = 4\nc = [1.0, 2.0, 3.0]\nalpha = [0.1, 0.2]\n\
                    algorithm = \"edm\"\nT = 100000000\nsweep_budget = 5\n";
        let cfg = RunConfig::parse(text, None).unwrap();
        let err = run_sweep(&cfg, 1, None).unwrap_err();
        assert!(matches!(err, Error::SweepBudget { points: 6, budget: 5 }));
    }
}
