//! Time series container and its CSV interchange format.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Result, TarmaError};

/// Ordered real-valued observations with optional ISO-8601 date labels.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_labels(values, None)
    }

    pub fn with_labels(values: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        if values.is_empty() {
            return Err(TarmaError::InvalidSpec("empty series".into()));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(TarmaError::InvalidSpec(format!(
                "non-finite value at position {bad}"
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != values.len() {
                return Err(TarmaError::InvalidSpec(
                    "label/value length mismatch".into(),
                ));
            }
            for w in labels.windows(2) {
                if w[1] <= w[0] {
                    return Err(TarmaError::InvalidSpec(format!(
                        "labels not strictly increasing: {:?} after {:?}",
                        w[1], w[0]
                    )));
                }
            }
        }
        Ok(Self { values, labels })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: non-empty
    }

    /// Elementwise negation; used for testing regulation from above.
    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Read a `date,value` or bare `value` CSV, optional header.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let mut values = Vec::new();
        let mut labels: Vec<String> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| TarmaError::Parse {
                    line: idx + 1,
                    msg: format!("expected a number, found {s:?}"),
                })
            };
            match fields.as_slice() {
                [v] => {
                    if idx == 0 && v.eq_ignore_ascii_case("value") {
                        continue;
                    }
                    values.push(parse(v)?);
                }
                [d, v] => {
                    if idx == 0 && d.eq_ignore_ascii_case("date") {
                        continue;
                    }
                    labels.push((*d).to_string());
                    values.push(parse(v)?);
                }
                _ => {
                    return Err(TarmaError::Parse {
                        line: idx + 1,
                        msg: format!("expected 1 or 2 fields, found {}", fields.len()),
                    })
                }
            }
        }
        let labels = if labels.is_empty() {
            None
        } else if labels.len() == values.len() {
            Some(labels)
        } else {
            return Err(TarmaError::Parse {
                line: 0,
                msg: "mixed labelled and unlabelled rows".into(),
            });
        };
        Self::with_labels(values, labels)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        match &self.labels {
            Some(labels) => {
                writeln!(out, "date,value")?;
                for (d, v) in labels.iter().zip(&self.values) {
                    writeln!(out, "{d},{v}")?;
                }
            }
            None => {
                writeln!(out, "value")?;
                for v in &self.values {
                    writeln!(out, "{v}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(TimeSeries::new(vec![]).is_err());
        assert!(TimeSeries::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn rejects_unsorted_labels() {
        let err = TimeSeries::with_labels(
            vec![1.0, 2.0],
            Some(vec!["2020-01-02".into(), "2020-01-01".into()]),
        );
        assert!(err.is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let ts = TimeSeries::with_labels(
            vec![1.5, -2.25],
            Some(vec!["2020-01-01".into(), "2020-01-02".into()]),
        )
        .unwrap();
        ts.write_csv(&path).unwrap();
        assert_eq!(TimeSeries::read_csv(&path).unwrap(), ts);

        let bare = TimeSeries::new(vec![0.25, 1.0, -3.5]).unwrap();
        bare.write_csv(&path).unwrap();
        assert_eq!(TimeSeries::read_csv(&path).unwrap(), bare);
    }

    #[test]
    fn csv_parse_error_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "value\n1.0\nnot-a-number\n").unwrap();
        match TimeSeries::read_csv(&path) {
            Err(TarmaError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
