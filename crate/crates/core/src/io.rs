//! File formats: graphs (edge list and dense 0/1 matrix), dense probability
//! matrices, JSON reports and run configurations.
//!
//! Edge list:
//!
//! ```text
//! # optional comments
//! n 4
//! 0 1
//! 2 3
//! ```
//!
//! Vertex indices are 0-based; `#` starts a comment anywhere on a line.
//! A dense file holds `n` rows of `n` whitespace-separated `0`/`1` values
//! forming a symmetric matrix with zero diagonal.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::AdjMatrix;
use crate::harness::ExperimentSpec;
use crate::resampling::{NullSamples, TestReport};
use crate::scalar::Scalar;
use crate::symmat::SymMatrix;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Edgelist,
    Dense,
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Non-empty lines with comments stripped, paired with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Edge lists start with `n <count>`; anything else is read as dense.
pub fn detect_format(text: &str) -> GraphFormat {
    match content_lines(text).next() {
        Some((_, line)) if line.split_whitespace().next() == Some("n") => GraphFormat::Edgelist,
        _ => GraphFormat::Dense,
    }
}

fn parse_index(token: &str, path: &str, line: usize) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| parse_err(path, line, format!("`{token}` is not a vertex index")))
}

pub fn parse_edgelist(text: &str, path: &str) -> Result<AdjMatrix> {
    let mut lines = content_lines(text);
    let (first_line, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file; expected `n <count>`"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let n = match tokens.as_slice() {
        ["n", count] => parse_index(count, path, first_line)?,
        _ => return Err(parse_err(path, first_line, "first line must be `n <count>`")),
    };
    let mut g = AdjMatrix::empty(n);
    for (line, content) in lines {
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let [i, j] = tokens.as_slice() else {
            return Err(parse_err(path, line, "expected two vertex indices `i j`"));
        };
        let (i, j) = (parse_index(i, path, line)?, parse_index(j, path, line)?);
        g.add_edge(i, j).map_err(|e| match e {
            Error::Input(msg) => parse_err(path, line, msg),
            other => other,
        })?;
    }
    Ok(g)
}

pub fn parse_dense_adjacency(text: &str, path: &str) -> Result<AdjMatrix> {
    let mut rows: Vec<(usize, Vec<u8>)> = Vec::new();
    for (line, content) in content_lines(text) {
        let row = content
            .split_whitespace()
            .map(|tok| match tok {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(parse_err(path, line, format!("`{other}` is not 0 or 1"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        rows.push((line, row));
    }
    let n = rows.len();
    if n == 0 {
        return Err(parse_err(path, 1, "empty matrix"));
    }
    for (i, (line, row)) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(parse_err(
                path,
                *line,
                format!("row has {} entries, expected {n}", row.len()),
            ));
        }
        if row[i] != 0 {
            return Err(parse_err(path, *line, format!("nonzero diagonal entry at ({i}, {i})")));
        }
        for j in 0..i {
            if row[j] != rows[j].1[i] {
                return Err(parse_err(
                    path,
                    *line,
                    format!("matrix is not symmetric: entry ({i}, {j}) differs from ({j}, {i})"),
                ));
            }
        }
    }
    let mut bits = Vec::with_capacity(n * (n - 1) / 2);
    for (i, (_, row)) in rows.iter().enumerate() {
        bits.extend_from_slice(&row[i + 1..]);
    }
    AdjMatrix::from_upper(n, bits)
}

pub fn parse_graph(text: &str, path: &str) -> Result<AdjMatrix> {
    match detect_format(text) {
        GraphFormat::Edgelist => parse_edgelist(text, path),
        GraphFormat::Dense => parse_dense_adjacency(text, path),
    }
}

/// Reads a graph file, detecting the format from its first content line.
pub fn read_graph(path: impl AsRef<Path>) -> Result<AdjMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_graph(&text, &path.display().to_string())
}

/// Reads several graph files that must share a vertex count.
pub fn read_graphs<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<AdjMatrix>> {
    let graphs = paths.iter().map(read_graph).collect::<Result<Vec<_>>>()?;
    if let Some(first) = graphs.first() {
        if let Some((k, g)) = graphs.iter().enumerate().find(|(_, g)| g.n() != first.n()) {
            return Err(Error::Input(format!(
                "{} has {} vertices but {} has {}",
                paths[k].as_ref().display(),
                g.n(),
                paths[0].as_ref().display(),
                first.n()
            )));
        }
    }
    Ok(graphs)
}

pub fn write_edgelist<W: Write>(g: &AdjMatrix, mut out: W) -> Result<()> {
    writeln!(out, "n {}", g.n())?;
    for (i, j) in g.edges() {
        writeln!(out, "{i} {j}")?;
    }
    Ok(())
}

pub fn write_dense_adjacency<W: Write>(g: &AdjMatrix, mut out: W) -> Result<()> {
    let n = g.n();
    for i in 0..n {
        let row: Vec<&str> = (0..n).map(|j| if g.has_edge(i, j) { "1" } else { "0" }).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

/// `n` rows of `n` values with six decimals.
pub fn write_prob_matrix<T: Scalar, W: Write>(p: &SymMatrix<T>, mut out: W) -> Result<()> {
    let n = p.n();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:.6}", p.get(i, j).as_f64())).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Reads a dense real matrix such as the output of [`write_prob_matrix`].
pub fn parse_prob_matrix(text: &str, path: &str) -> Result<SymMatrix<f64>> {
    let mut rows = Vec::new();
    for (line, content) in content_lines(text) {
        let row = content
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| parse_err(path, line, format!("`{tok}` is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, row));
    }
    let n = rows.len();
    if let Some((line, row)) = rows.iter().find(|(_, r)| r.len() != n) {
        return Err(parse_err(path, *line, format!("row has {} entries, expected {n}", row.len())));
    }
    let dense: Vec<f64> = rows.into_iter().flat_map(|(_, r)| r).collect();
    SymMatrix::from_dense(n, &dense)
}

fn summary(values: &[f64]) -> Value {
    if values.is_empty() {
        return json!({ "count": 0 });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p).round() as usize];
    json!({
        "count": sorted.len(),
        "mean": sorted.iter().sum::<f64>() / sorted.len() as f64,
        "min": sorted[0],
        "q05": q(0.05),
        "median": q(0.5),
        "q95": q(0.95),
        "max": sorted[sorted.len() - 1],
    })
}

/// Versioned JSON form of a test report, including a summary of the null
/// samples and the samples themselves.
pub fn report_to_json(report: &TestReport) -> Value {
    let null_summary = match &report.null_samples {
        NullSamples::Single(v) => json!({ "t": summary(v) }),
        NullSamples::Paired { t_p, t_q } => json!({ "t_p": summary(t_p), "t_q": summary(t_q) }),
    };
    json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "method": report.method,
        "t": report.t_observed,
        "observed_degenerate": report.observed_degenerate,
        "p_value": report.p_value,
        "K_A": report.k_a,
        "K_B": report.k_b,
        "n": report.n,
        "n_reps": report.n_reps,
        "seed": report.seed,
        "settings": report.settings,
        "degenerate_replicates": report.degenerate_replicates,
        "null_summary": null_summary,
        "null_samples": report.null_samples,
    })
}

/// Configuration of the `simulate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentSpec,
    /// Worker threads; `None` uses the available parallelism.
    #[serde(default)]
    pub threads: Option<usize>,
}

/// Parses a run configuration. Errors name the JSON path of the offending
/// value, e.g. `experiment.n_list[1]`.
pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    cfg.experiment.validate().map_err(|e| Error::Config {
        path: "experiment".into(),
        message: e.to_string(),
    })?;
    Ok(cfg)
}

pub fn read_run_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    parse_run_config(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edgelist_with_comments() {
        let g = parse_edgelist("# toy\nn 4\n0 1 # first\n\n3 2\n", "g").unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (2, 3)]);
        assert_eq!(detect_format("# c\nn 3\n"), GraphFormat::Edgelist);
    }

    #[test]
    fn edgelist_errors_carry_line_numbers() {
        let err = parse_edgelist("n 3\n0 1\n1 1\n", "g.txt").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_edgelist("0 1\n", "g.txt").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_edgelist("n 3\n0 5\n", "g.txt").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_edgelist("n 3\n0 1 2\n", "g").is_err());
    }

    #[test]
    fn dense_validation() {
        let g = parse_dense_adjacency("0 1 0\n1 0 1\n0 1 0\n", "d").unwrap();
        assert_eq!(g.edge_count(), 2);
        let asym = parse_dense_adjacency("0 1 0\n0 0 1\n0 1 0\n", "d").unwrap_err();
        assert!(matches!(asym, Error::Parse { line: 2, .. }), "{asym}");
        let diag = parse_dense_adjacency("0 1\n1 1\n", "d").unwrap_err();
        assert!(matches!(diag, Error::Parse { line: 2, .. }));
        let nonbin = parse_dense_adjacency("0 2\n2 0\n", "d").unwrap_err();
        assert!(matches!(nonbin, Error::Parse { line: 1, .. }));
        assert!(parse_dense_adjacency("0 1 0\n1 0\n0 0 0\n", "d").is_err());
    }

    #[test]
    fn prob_matrix_six_decimals() {
        let p = SymMatrix::<f64>::from_fn(2, |i, j| if i == j { 0.0 } else { 1.0 / 3.0 });
        let mut buf = Vec::new();
        write_prob_matrix(&p, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0.000000 0.333333\n0.333333 0.000000\n");
    }

    #[test]
    fn config_errors_name_the_path() {
        let text = r#"{"experiment": {"setting": "M2", "n_list": [50, "x"], "eps_list": [0.1],
            "calibration": "bootstrap", "trials": 1, "estimator": {"rank": {"fixed": 3}}, "seed": 1}}"#;
        match parse_run_config(text).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "experiment.n_list[1]"),
            other => panic!("unexpected {other}"),
        }
        let unknown = text.replace(r#""seed": 1"#, r#""seed": 1, "sed": 2"#).replace(r#""x""#, "60");
        match parse_run_config(&unknown).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "experiment.sed"),
            other => panic!("unexpected {other}"),
        }
    }
}
