//! Portable problem dumps.
//!
//! The format is plain text: `key = value` header lines, then named blocks
//! opened by `[name]` whose rows are comma-separated floats. Floats are
//! written in shortest round-trip form so reloading reproduces the data bit
//! for bit.
//!
//! ```text
//! # decent-opt problem
//! kind = quadratic
//! n = 2
//! ...
//! [A 0]
//! 1e0,0e0
//! ```

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

use super::{LogisticProblem, LossScale, Problem, QuadraticProblem, WelschProblem};

const MAGIC: &str = "# decent-opt problem";

pub fn write_problem(problem: &dyn Problem) -> String {
    problem.to_portable()
}

/// Parses a dump produced by [`write_problem`]. Reference minimizers are
/// recomputed on load.
pub fn read_problem(text: &str) -> Result<Box<dyn Problem>> {
    let doc = Document::parse(text)?;
    match doc.scalar("kind")? {
        "quadratic" => {
            let n = doc.usize("n")?;
            let scale = match doc.scalar("scale")? {
                "sum" => LossScale::Sum,
                "mean" => LossScale::Mean,
                other => return Err(Error::parse("scale", format!("unknown loss scale {other:?}"))),
            };
            let a = (0..n).map(|i| doc.matrix(&format!("A {i}"))).collect::<Result<Vec<_>>>()?;
            let u = doc.rows_as_vectors("u")?;
            Ok(Box::new(QuadraticProblem::from_parts(a, u, doc.f64("c")?, doc.f64("sigma")?, scale)?))
        }
        "logistic" => {
            let n = doc.usize("n")?;
            let u = (0..n).map(|i| doc.matrix(&format!("U {i}"))).collect::<Result<Vec<_>>>()?;
            let v = doc.rows_as_vectors("V")?;
            Ok(Box::new(LogisticProblem::from_data(
                u,
                v,
                doc.f64("sigma_h")?,
                doc.f64("mu_reg")?,
                doc.f64("sigma_s")?,
            )?))
        }
        "welsch" => {
            let n = doc.usize("n")?;
            let u = (0..n).map(|i| doc.matrix(&format!("U {i}"))).collect::<Result<Vec<_>>>()?;
            let v = doc.rows_as_vectors("V")?;
            Ok(Box::new(WelschProblem::from_data(
                u,
                v,
                doc.f64("sigma_h")?,
                doc.f64("sigma_s")?,
                doc.f64("response_noise")?,
            )?))
        }
        other => Err(Error::parse("kind", format!("unknown problem kind {other:?}"))),
    }
}

pub(super) fn write_quadratic(p: &QuadraticProblem) -> String {
    let q = p.params();
    let mut out = header("quadratic", &[
        ("n", q.n.to_string()),
        ("d", q.d.to_string()),
        ("p", q.p.to_string()),
        ("c", fmt_f64(q.c)),
        ("sigma", fmt_f64(q.sigma)),
        ("scale", q.scale.name().to_string()),
    ]);
    for i in 0..q.n {
        write_block(&mut out, &format!("A {i}"), p.design(i));
    }
    write_vectors(&mut out, "u", p.centers());
    out
}

pub(super) fn write_logistic(p: &LogisticProblem) -> String {
    let q = p.params();
    let mut out = header("logistic", &[
        ("n", q.n.to_string()),
        ("d", q.d.to_string()),
        ("m", q.m.to_string()),
        ("sigma_h", fmt_f64(q.sigma_h)),
        ("mu_reg", fmt_f64(q.mu_reg)),
        ("sigma_s", fmt_f64(q.sigma_s)),
    ]);
    for i in 0..q.n {
        write_block(&mut out, &format!("U {i}"), p.covariates(i));
    }
    let labels: Vec<Vector> = (0..q.n).map(|i| p.labels(i).clone()).collect();
    write_vectors(&mut out, "V", &labels);
    out
}

pub(super) fn write_welsch(p: &WelschProblem) -> String {
    let q = p.params();
    let mut out = header("welsch", &[
        ("n", q.n.to_string()),
        ("d", q.d.to_string()),
        ("m", q.m.to_string()),
        ("sigma_h", fmt_f64(q.sigma_h)),
        ("sigma_s", fmt_f64(q.sigma_s)),
        ("response_noise", fmt_f64(q.response_noise)),
    ]);
    for i in 0..q.n {
        write_block(&mut out, &format!("U {i}"), p.covariates(i));
    }
    let responses: Vec<Vector> = (0..q.n).map(|i| p.responses(i).clone()).collect();
    write_vectors(&mut out, "V", &responses);
    out
}

fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn header(kind: &str, scalars: &[(&str, String)]) -> String {
    let mut out = format!("{MAGIC}\nkind = {kind}\n");
    for (k, v) in scalars {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

fn write_block(out: &mut String, name: &str, m: &Matrix) {
    let _ = writeln!(out, "[{name}]");
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
}

fn write_vectors(out: &mut String, name: &str, rows: &[Vector]) {
    let _ = writeln!(out, "[{name}]");
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
}

struct Document {
    scalars: BTreeMap<String, String>,
    blocks: BTreeMap<String, Vec<Vec<f64>>>,
}

impl Document {
    fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, first)) if first.trim() == MAGIC => {}
            _ => return Err(Error::parse("line 1", "missing problem dump header")),
        }
        let mut scalars = BTreeMap::new();
        let mut blocks: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in lines {
            let line = raw.trim();
            let loc = || format!("line {}", idx + 1);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                if blocks.insert(name.to_string(), Vec::new()).is_some() {
                    return Err(Error::parse(loc(), format!("duplicate block [{name}]")));
                }
                current = Some(name.to_string());
                continue;
            }
            match &current {
                None => {
                    let (k, v) = line
                        .split_once('=')
                        .ok_or_else(|| Error::parse(loc(), "expected key = value"))?;
                    scalars.insert(k.trim().to_string(), v.trim().to_string());
                }
                Some(name) => {
                    let row = line
                        .split(',')
                        .map(|c| c.trim().parse::<f64>().map_err(|e| Error::parse(loc(), format!("{c:?}: {e}"))))
                        .collect::<Result<Vec<_>>>()?;
                    blocks.get_mut(name).expect("block registered").push(row);
                }
            }
        }
        Ok(Self { scalars, blocks })
    }

    fn scalar(&self, key: &str) -> Result<&str> {
        self.scalars
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::parse(key, "missing header field"))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        self.scalar(key)?.parse().map_err(|e| Error::parse(key, format!("{e}")))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        self.scalar(key)?.parse().map_err(|e| Error::parse(key, format!("{e}")))
    }

    fn block(&self, name: &str) -> Result<&Vec<Vec<f64>>> {
        let rows = self
            .blocks
            .get(name)
            .ok_or_else(|| Error::parse(format!("[{name}]"), "missing block"))?;
        let width = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || rows.iter().any(|r| r.len() != width) {
            return Err(Error::DimensionMismatch {
                expected: width,
                got: rows.iter().map(Vec::len).find(|&l| l != width).unwrap_or(0),
            });
        }
        Ok(rows)
    }

    fn matrix(&self, name: &str) -> Result<Matrix> {
        let rows = self.block(name)?;
        Ok(Matrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]))
    }

    fn rows_as_vectors(&self, name: &str) -> Result<Vec<Vector>> {
        Ok(self.block(name)?.iter().map(|r| Vector::from_vec(r.clone())).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gen_logistic, gen_quadratic, gen_welsch, QuadraticParams};

    fn assert_same(a: &dyn Problem, b: &dyn Problem) {
        assert_eq!(a.kind(), b.kind());
        assert_eq!(a.agents(), b.agents());
        assert_eq!(a.constants(), b.constants());
        assert_eq!(a.minimizer(), b.minimizer());
        let x = Vector::from_fn(a.dim(), |j, _| 0.1 * j as f64 - 0.3);
        for i in 0..a.agents() {
            assert_eq!(a.full_gradient(i, &x).unwrap(), b.full_gradient(i, &x).unwrap());
        }
    }

    #[test]
    fn quadratic_round_trip() {
        let p = gen_quadratic(3, 4, 6, 2.5, 0.3, 11).unwrap();
        let q = read_problem(&write_problem(&p)).unwrap();
        assert_same(&p, q.as_ref());
        let mean = QuadraticProblem::generate(
            &QuadraticParams { n: 2, d: 2, p: 3, c: 1.0, sigma: 0.0, scale: LossScale::Mean },
            1,
        )
        .unwrap();
        assert_same(&mean, read_problem(&mean.to_portable()).unwrap().as_ref());
    }

    #[test]
    fn logistic_round_trip() {
        let p = gen_logistic(3, 2, 30, 0.5, 0.1, 0.2, 12).unwrap();
        assert_same(&p, read_problem(&p.to_portable()).unwrap().as_ref());
    }

    #[test]
    fn welsch_round_trip() {
        let p = gen_welsch(2, 2, 25, 0.5, 0.1, 13).unwrap();
        assert_same(&p, read_problem(&p.to_portable()).unwrap().as_ref());
    }

    #[test]
    fn malformed_dumps_are_rejected() {
        assert!(read_problem("kind = quadratic").is_err());
        let text = gen_quadratic(2, 2, 2, 1.0, 0.0, 1).unwrap().to_portable();
        assert!(read_problem(&text.replace("[u]", "[w]")).is_err());
        assert!(read_problem(&text.replace("kind = quadratic", "kind = cubic")).is_err());
        let broken: String = text.lines().take(text.lines().count() - 1).collect::<Vec<_>>().join("\n");
        assert!(read_problem(&broken).is_err());
    }
}
