//! Per-iteration run records and their CSV form.

use std::fmt::Write;

use crate::analysis::{LemmaMargins, MetricRow};
use crate::linalg::Matrix;

/// Column names of the metric block, in CSV order.
pub const METRIC_COLUMNS: [&str; 7] = [
    "t",
    "consensus_dev",
    "grad_avg_sq",
    "grad_bar_sq",
    "subopt",
    "dist_sq",
    "m_bar_sq",
];

pub const MONITOR_COLUMNS: [&str; 3] = ["monitor_lemma1_residual", "monitor_lemma2_residual", "shadow_gap"];

/// Monitor outputs for one iteration. Entries for monitors that were not
/// requested (or do not apply) are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRow {
    pub lemma1_residual: f64,
    pub lemma2_residual: f64,
    pub shadow_gap: f64,
}

/// Both sides of the summed momentum inequality at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl SumCheck {
    pub fn residual(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub rows: Vec<MetricRow>,
    pub monitors: Option<Vec<MonitorRow>>,
    pub grad_calls: u64,
    /// Fold of every gradient-noise word drawn during the run.
    pub noise_checksum: u64,
    pub lemma5: Option<SumCheck>,
    pub lemma_margins: Option<LemmaMargins>,
    /// Largest distance between the two shadow representations.
    pub shadow_repr_gap: Option<f64>,
    /// Iterate after the last completed step.
    pub final_x: Option<Matrix>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn header(&self) -> String {
        let mut cols: Vec<&str> = METRIC_COLUMNS.to_vec();
        if self.monitors.is_some() {
            cols.extend(MONITOR_COLUMNS);
        }
        cols.join(",")
    }

    /// CSV with a header row and 17 significant digits per float.
    pub fn to_csv(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for (k, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{}", row.t);
            for v in row.values() {
                let _ = write!(out, ",{}", fmt_float(v));
            }
            if let Some(mon) = &self.monitors {
                let m = mon[k];
                for v in [m.lemma1_residual, m.lemma2_residual, m.shadow_gap] {
                    let _ = write!(out, ",{}", fmt_float(v));
                }
            }
            out.push('\n');
        }
        out
    }

    /// Values of one metric column (without `t`).
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        if let Some(idx) = METRIC_COLUMNS[1..].iter().position(|c| *c == name) {
            return Some(self.rows.iter().map(|r| r.values()[idx]).collect());
        }
        let idx = MONITOR_COLUMNS.iter().position(|c| *c == name)?;
        let mon = self.monitors.as_ref()?;
        Some(
            mon.iter()
                .map(|m| [m.lemma1_residual, m.lemma2_residual, m.shadow_gap][idx])
                .collect(),
        )
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: usize) -> MetricRow {
        MetricRow {
            t,
            consensus_dev: 0.0,
            grad_avg_sq: 1.0 / 3.0,
            grad_bar_sq: 2.0,
            subopt: f64::NAN,
            dist_sq: 1e-300,
            m_bar_sq: 0.1,
        }
    }

    #[test]
    fn csv_layout() {
        let trace = Trace {
            rows: vec![row(0), row(1)],
            ..Trace::default()
        };
        let csv = trace.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,consensus_dev,grad_avg_sq,grad_bar_sq,subopt,dist_sq,m_bar_sq");
        assert_eq!(lines.len(), 3);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells[0], "0");
        assert_eq!(cells[2], "3.3333333333333331e-1");
        assert_eq!(cells[2].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(cells[4], "NaN");
    }

    #[test]
    fn monitor_columns_appear_when_present() {
        let trace = Trace {
            rows: vec![row(0)],
            monitors: Some(vec![MonitorRow {
                lemma1_residual: 1.0,
                lemma2_residual: f64::NAN,
                shadow_gap: 0.5,
            }]),
            ..Trace::default()
        };
        assert!(trace.header().ends_with("m_bar_sq,monitor_lemma1_residual,monitor_lemma2_residual,shadow_gap"));
        assert_eq!(trace.column("shadow_gap").unwrap(), vec![0.5]);
        assert_eq!(trace.column("grad_bar_sq").unwrap(), vec![2.0]);
        assert!(trace.column("nope").is_none());
    }
}
