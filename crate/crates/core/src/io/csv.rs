//! Curve log: `qm,seed,x,performance,qm_time_s`, one row per (qm, seed, x).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::curve::{build_curve, CurvePoint, LearningCurve};
use crate::error::{Error, Result};

pub const HEADER: [&str; 5] = ["qm", "seed", "x", "performance", "qm_time_s"];

pub fn parse_curve_csv(path: &Path) -> Result<BTreeMap<String, LearningCurve>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curve_str(&text, path)
}

/// Parses the log held in `text`; `path` only labels error messages.
pub fn parse_curve_str(text: &str, path: &Path) -> Result<BTreeMap<String, LearningCurve>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let header_line = header.position().map_or(1, |p| p.line());
    let cols: Vec<&str> = header.iter().collect();
    let with_time = match cols.as_slice() {
        [a, b, c, d] if [*a, *b, *c, *d] == HEADER[..4] => false,
        [a, b, c, d, e] if [*a, *b, *c, *d, *e] == HEADER => true,
        _ => {
            return Err(parse_err(
                header_line,
                format!(
                    "expected header '{}', found '{}'",
                    HEADER.join(","),
                    cols.join(",")
                ),
            ))
        }
    };

    let mut by_qm: BTreeMap<String, Vec<CurvePoint>> = BTreeMap::new();
    let mut seen: HashSet<(String, u64, u64)> = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let expected = if with_time { 5 } else { 4 };
        if record.len() != expected {
            return Err(parse_err(
                line,
                format!("expected {expected} fields, found {}", record.len()),
            ));
        }
        let qm = record[0].to_string();
        if qm.is_empty() {
            return Err(parse_err(line, "empty query-method id".into()));
        }
        let seed: u64 = record[1]
            .parse()
            .map_err(|_| parse_err(line, format!("invalid seed '{}'", &record[1])))?;
        let x: f64 = record[2]
            .parse()
            .ok()
            .filter(|x: &f64| x.is_finite() && *x >= 0.0)
            .ok_or_else(|| parse_err(line, format!("invalid sample count '{}'", &record[2])))?;
        let performance: f64 = record[3]
            .parse()
            .ok()
            .filter(|p: &f64| (0.0..=1.0).contains(p))
            .ok_or_else(|| {
                parse_err(
                    line,
                    format!("performance '{}' is not in [0, 1]", &record[3]),
                )
            })?;
        let qm_time = if with_time && !record[4].is_empty() {
            Some(
                record[4]
                    .parse::<f64>()
                    .ok()
                    .filter(|t| t.is_finite() && *t >= 0.0)
                    .ok_or_else(|| {
                        parse_err(line, format!("invalid qm_time_s '{}'", &record[4]))
                    })?,
            )
        } else {
            None
        };
        if !seen.insert((qm.clone(), seed, x.to_bits())) {
            return Err(parse_err(
                line,
                format!("duplicate row for qm '{qm}', seed {seed}, x {x}"),
            ));
        }
        by_qm.entry(qm).or_default().push(CurvePoint {
            x,
            performance,
            seed,
            qm_time,
        });
    }
    if by_qm.is_empty() {
        return Err(Error::EmptyInput("curve log"));
    }

    let mut curves = BTreeMap::new();
    for (qm, points) in by_qm {
        let seeds: BTreeSet<u64> = points.iter().map(|p| p.seed).collect();
        for seed in seeds {
            if !points.iter().any(|p| p.seed == seed && p.x == 0.0) {
                return Err(Error::MissingInitialPoint { qm, seed });
            }
        }
        let curve = build_curve(&points, &qm)?;
        curves.insert(qm, curve);
    }
    Ok(curves)
}

/// Serialises curves to the log format; floats use their shortest exact representation.
pub fn curves_to_csv<'a>(curves: impl IntoIterator<Item = &'a LearningCurve>) -> String {
    let mut out = String::new();
    out.push_str(&HEADER.join(","));
    out.push('\n');
    for curve in curves {
        for p in curve.points() {
            let time = p.qm_time.map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                curve.qm_id(),
                p.seed,
                p.x,
                p.performance,
                time
            );
        }
    }
    out
}

pub fn write_curve_csv<'a>(
    path: &Path,
    curves: impl IntoIterator<Item = &'a LearningCurve>,
) -> Result<()> {
    fs::write(path, curves_to_csv(curves)).map_err(|e| Error::io(path, e))
}
