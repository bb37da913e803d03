//! Plain-text interchange formats.
//!
//! Statistics file:
//!
//! ```text
//! n
//! μ_1 … μ_n
//! Σ_11 … Σ_1n
//! …
//! Σ_n1 … Σ_nn
//! ```
//!
//! Sample file: `n` on the first line, the `n` sample values on the second.
//! Blank lines are ignored.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::types::{validate_statistics, Covariance, RfiStatistics, SampleSet, SquareMatrix};

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x}")
}

pub fn format_floats(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn next_nonblank(&mut self, what: &str) -> Result<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            if !line.trim().is_empty() {
                return Ok((i + 1, line));
            }
        }
        Err(Error::parse(
            self.last + 1,
            format!("unexpected end of file, expected {what}"),
        ))
    }

    fn expect_end(&mut self) -> Result<()> {
        for (i, line) in self.inner.by_ref() {
            if !line.trim().is_empty() {
                return Err(Error::parse(i + 1, "unexpected trailing content"));
            }
        }
        Ok(())
    }
}

fn parse_count(line_no: usize, line: &str) -> Result<usize> {
    let mut tokens = line.split_whitespace();
    let n = tokens
        .next()
        .and_then(|t| t.parse::<usize>().ok())
        .ok_or_else(|| Error::parse(line_no, "expected a non-negative integer count"))?;
    if tokens.next().is_some() {
        return Err(Error::parse(line_no, "expected a single integer"));
    }
    Ok(n)
}

fn parse_row(line_no: usize, line: &str, expected: usize) -> Result<Vec<f64>> {
    let values = line
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::parse(line_no, format!("bad number {t:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != expected {
        return Err(Error::parse(
            line_no,
            format!("expected {expected} values, found {}", values.len()),
        ));
    }
    Ok(values)
}

pub fn parse_statistics(text: &str) -> Result<RfiStatistics> {
    let mut lines = Lines::new(text);
    let (line_no, line) = lines.next_nonblank("dimension")?;
    let n = parse_count(line_no, line)?;
    if n == 0 {
        return Err(Error::parse(line_no, "dimension must be positive"));
    }
    let (line_no, line) = lines.next_nonblank("mean vector")?;
    let mean = parse_row(line_no, line, n)?;
    let mut data = Vec::with_capacity(n * n);
    for row in 0..n {
        let (line_no, line) = lines.next_nonblank(&format!("covariance row {}", row + 1))?;
        data.extend(parse_row(line_no, line, n)?);
    }
    lines.expect_end()?;
    validate_statistics(
        mean,
        Covariance::Dense(SquareMatrix::from_row_major(n, data)?),
    )
}

pub fn write_statistics(stats: &RfiStatistics) -> String {
    let n = stats.dim();
    let cov = stats.covariance();
    let mut out = String::new();
    let _ = writeln!(out, "{n}");
    let _ = writeln!(out, "{}", format_floats(stats.mean()));
    let mut row = vec![0.0; n];
    for (i, _) in stats.mean().iter().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = cov.get(i, j);
        }
        let _ = writeln!(out, "{}", format_floats(&row));
    }
    out
}

pub fn parse_samples(text: &str) -> Result<SampleSet> {
    let mut lines = Lines::new(text);
    let (line_no, line) = lines.next_nonblank("sample count")?;
    let n = parse_count(line_no, line)?;
    let (line_no, line) = lines.next_nonblank("sample values")?;
    let values = parse_row(line_no, line, n)?;
    lines.expect_end()?;
    SampleSet::new(values)
}

pub fn write_samples(samples: &SampleSet) -> String {
    format!("{}\n{}\n", samples.len(), format_floats(samples.values()))
}
