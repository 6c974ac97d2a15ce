//! CSV layouts shared by the subcommands.
//!
//! | file        | header                                        |
//! |-------------|-----------------------------------------------|
//! | stability   | `meaning,label,S,coverage`                    |
//! | rank        | `rank,meaning,label,S,fitted,residual`        |
//! | histogram   | `bin_lo,bin_hi,count`                         |
//! | fit         | `slope,intercept,lo,hi,ranked,undefined`      |
//! | overlap     | `n,m,p`                                       |
//! | matrix      | `language,<name 1>,…,<name N>`                |
//! | truth       | `label,rate`                                  |

use lexistab::family::{LanguageDistanceMatrix, MeaningStability, StabilityReport};
use lexistab::rank::{Histogram, LinearFit, OverlapCurve, RankCurve};

use crate::CliError;

pub const STABILITY_HEADER: [&str; 4] = ["meaning", "label", "S", "coverage"];
pub const RANK_HEADER: [&str; 6] = ["rank", "meaning", "label", "S", "fitted", "residual"];
pub const HISTOGRAM_HEADER: [&str; 3] = ["bin_lo", "bin_hi", "count"];
pub const FIT_HEADER: [&str; 6] = ["slope", "intercept", "lo", "hi", "ranked", "undefined"];
pub const OVERLAP_HEADER: [&str; 3] = ["n", "m", "p"];
pub const MATRIX_CORNER: &str = "language";

/// Number rendering for every table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    /// Six significant digits, trailing zeros dropped.
    Significant6,
    /// Shortest text that round-trips to the same `f64`.
    Full,
}

impl Precision {
    pub fn format(self, value: f64) -> String {
        if !value.is_finite() {
            return if value.is_nan() {
                "nan".into()
            } else if value > 0.0 {
                "inf".into()
            } else {
                "-inf".into()
            };
        }
        match self {
            Precision::Full => format!("{value}"),
            Precision::Significant6 => significant(value, 6),
        }
    }
}

fn significant(value: f64, digits: i32) -> String {
    if value == 0.0 {
        return "0".into();
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (digits - 1 - magnitude).max(0) as usize;
    let mut text = format!("{value:.decimals$}");
    if text.contains('.') {
        text = text.trim_end_matches('0').trim_end_matches('.').to_owned();
    }
    if text == "-0" {
        text = "0".into();
    }
    text
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Format(e.to_string()))
}

macro_rules! csv_try {
    ($e:expr) => {
        $e.map_err(|e| CliError::Format(e.to_string()))?
    };
}

pub fn write_stability(report: &StabilityReport, precision: Precision) -> Result<String, CliError> {
    let mut w = writer();
    csv_try!(w.write_record(STABILITY_HEADER));
    for m in &report.meanings {
        csv_try!(w.write_record([
            m.index.to_string(),
            m.label.clone(),
            m.stability.map(|s| precision.format(s)).unwrap_or_default(),
            m.pair_coverage.to_string(),
        ]));
    }
    finish(w)
}

fn parse_field<T: std::str::FromStr>(text: &str, what: &str, line: u64) -> Result<T, CliError> {
    text.trim()
        .parse()
        .map_err(|_| CliError::Format(format!("line {line}: bad {what} {text:?}")))
}

fn check_header(found: &csv::StringRecord, expected: &[&str], what: &str) -> Result<(), CliError> {
    if found.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(CliError::Format(format!(
            "{what} header must be {:?}, found {:?}",
            expected.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

/// Reads a stability table back into a report named `family`.
pub fn read_stability(source: &str, family: &str) -> Result<StabilityReport, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source.as_bytes());
    check_header(csv_try!(r.headers()), &STABILITY_HEADER, "stability")?;
    let mut meanings: Vec<MeaningStability> = Vec::new();
    for record in r.records() {
        let record = csv_try!(record);
        let line = record.position().map_or(0, |p| p.line());
        let s = record[2].trim();
        let stability = if s.is_empty() {
            None
        } else {
            Some(parse_field::<f64>(s, "stability", line)?)
        };
        let label = lexistab::lexicon::canonical_label(&record[1]);
        if meanings.iter().any(|m| m.label == label) {
            return Err(CliError::Format(format!("line {line}: duplicate label {label:?}")));
        }
        meanings.push(MeaningStability {
            index: parse_field(&record[0], "meaning index", line)?,
            label,
            stability,
            pair_coverage: parse_field(&record[3], "coverage", line)?,
        });
    }
    if meanings.is_empty() {
        return Err(CliError::Format("stability table has no rows".into()));
    }
    Ok(StabilityReport {
        family: family.to_owned(),
        n_languages: None,
        meanings,
    })
}

pub fn write_rank(curve: &RankCurve, fit: &LinearFit, precision: Precision) -> Result<String, CliError> {
    let mut w = writer();
    csv_try!(w.write_record(RANK_HEADER));
    for (entry, residual) in curve.entries.iter().zip(&fit.residuals) {
        csv_try!(w.write_record([
            entry.rank.to_string(),
            entry.meaning.to_string(),
            entry.label.clone(),
            precision.format(entry.stability),
            precision.format(fit.predict(entry.rank)),
            precision.format(*residual),
        ]));
    }
    finish(w)
}

pub fn write_histogram(histogram: &Histogram, precision: Precision) -> Result<String, CliError> {
    let mut w = writer();
    csv_try!(w.write_record(HISTOGRAM_HEADER));
    for (k, count) in histogram.counts.iter().enumerate() {
        csv_try!(w.write_record([
            precision.format(histogram.edges[k]),
            precision.format(histogram.edges[k + 1]),
            count.to_string(),
        ]));
    }
    finish(w)
}

pub fn write_fit(fit: &LinearFit, curve: &RankCurve, precision: Precision) -> Result<String, CliError> {
    let mut w = writer();
    csv_try!(w.write_record(FIT_HEADER));
    csv_try!(w.write_record([
        precision.format(fit.slope),
        precision.format(fit.intercept),
        fit.lo.to_string(),
        fit.hi.to_string(),
        curve.len().to_string(),
        curve.undefined.len().to_string(),
    ]));
    finish(w)
}

pub fn write_overlap(curve: &OverlapCurve, precision: Precision) -> Result<String, CliError> {
    let mut w = writer();
    csv_try!(w.write_record(OVERLAP_HEADER));
    for pt in &curve.points {
        csv_try!(w.write_record([pt.n.to_string(), pt.m.to_string(), precision.format(pt.p)]));
    }
    finish(w)
}

pub fn write_matrix(matrix: &LanguageDistanceMatrix, precision: Precision) -> Result<String, CliError> {
    let mut w = writer();
    let mut header = vec![MATRIX_CORNER.to_owned()];
    header.extend(matrix.names().iter().cloned());
    csv_try!(w.write_record(&header));
    for (i, name) in matrix.names().iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(matrix.row(i).iter().map(|&v| precision.format(v)));
        csv_try!(w.write_record(&row));
    }
    finish(w)
}

pub fn read_matrix(source: &str) -> Result<LanguageDistanceMatrix, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source.as_bytes());
    let header = csv_try!(r.headers()).clone();
    if header.get(0).map(str::trim) != Some(MATRIX_CORNER) {
        return Err(CliError::Format(format!(
            "matrix header must start with {MATRIX_CORNER:?}"
        )));
    }
    let names: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_owned()).collect();
    let mut values = Vec::with_capacity(names.len() * names.len());
    let mut rows = 0;
    for record in r.records() {
        let record = csv_try!(record);
        let line = record.position().map_or(0, |p| p.line());
        if rows >= names.len() || record[0].trim() != names[rows] {
            return Err(CliError::Format(format!(
                "line {line}: row label {:?} does not match column order",
                &record[0]
            )));
        }
        for cell in record.iter().skip(1) {
            values.push(parse_field::<f64>(cell, "distance", line)?);
        }
        rows += 1;
    }
    if rows != names.len() {
        return Err(CliError::Format(format!(
            "matrix has {rows} rows for {} columns",
            names.len()
        )));
    }
    LanguageDistanceMatrix::new(names, values).map_err(|e| CliError::Format(e.to_string()))
}
