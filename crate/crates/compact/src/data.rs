//! Examples, labels, and the CSV dataset format.
//!
//! A dataset file is plain CSV with header `id,label,f0,f1,...`; labels are
//! written as `1` / `-1` and every feature value must be finite.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label. Only the two valid values are representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "-1")]
    Negative,
    #[serde(rename = "1")]
    Positive,
}

impl Label {
    /// The label as a sign, `+1.0` or `-1.0`.
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn from_i64(v: i64) -> Result<Label> {
        match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(Error::InvalidInput(format!(
                "label must be 1 or -1, got {other}"
            ))),
        }
    }
}

/// One labelled example: a dense feature vector plus a stable id.
#[derive(Debug, Clone)]
pub struct Example {
    pub id: u64,
    pub label: Label,
    pub features: Vec<f64>,
}

/// An in-memory dataset. All examples share one feature count.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub feature_count: usize,
}

impl Dataset {
    pub fn new(examples: Vec<Example>, feature_count: usize) -> Result<Dataset> {
        if examples.is_empty() {
            return Err(Error::InvalidInput("dataset has no examples".into()));
        }
        for ex in &examples {
            if ex.features.len() != feature_count {
                return Err(Error::InvalidInput(format!(
                    "example {} has {} features, expected {feature_count}",
                    ex.id,
                    ex.features.len()
                )));
            }
            if let Some(j) = ex.features.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "example {} has a non-finite value in feature {j}",
                    ex.id
                )));
            }
        }
        Ok(Dataset {
            examples,
            feature_count,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.examples.iter().map(|e| e.label.sign()).collect()
    }

    /// Counts of (positives, negatives).
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self
            .examples
            .iter()
            .filter(|e| e.label == Label::Positive)
            .count();
        (pos, self.examples.len() - pos)
    }

    /// Training requires at least one example of each class.
    pub fn require_both_classes(&self) -> Result<()> {
        let (pos, neg) = self.class_counts();
        if pos == 0 || neg == 0 {
            return Err(Error::Config(format!(
                "training data must contain both classes (got {pos} positive, {neg} negative)"
            )));
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let mut header = vec!["id".to_string(), "label".to_string()];
            header.extend((0..self.feature_count).map(|j| format!("f{j}")));
            w.write_record(&header)?;
            for ex in &self.examples {
                let mut rec = vec![ex.id.to_string(), (ex.label.sign() as i64).to_string()];
                rec.extend(ex.features.iter().map(|v| format_float(*v)));
                w.write_record(&rec)?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        crate::util::write_atomic(path, &buf)
    }

    pub fn read_csv(path: &Path) -> Result<Dataset> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let headers = reader.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "id" || &headers[1] != "label" {
            return Err(Error::schema(
                format!("{}:header", path.display()),
                "expected columns id,label,f0,...",
            ));
        }
        let feature_count = headers.len() - 2;
        let mut examples = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let at = |msg: String| Error::schema(format!("{}:row[{row}]", path.display()), msg);
            if record.len() != headers.len() {
                return Err(at(format!(
                    "expected {} fields, got {}",
                    headers.len(),
                    record.len()
                )));
            }
            let id: u64 = record[0]
                .parse()
                .map_err(|_| at(format!("bad id {:?}", &record[0])))?;
            let raw: i64 = record[1]
                .parse()
                .map_err(|_| at(format!("bad label {:?}", &record[1])))?;
            let label = Label::from_i64(raw).map_err(|e| at(e.to_string()))?;
            let mut features = Vec::with_capacity(feature_count);
            for j in 0..feature_count {
                let v: f64 = record[j + 2]
                    .parse()
                    .map_err(|_| at(format!("bad value {:?} in f{j}", &record[j + 2])))?;
                if !v.is_finite() {
                    return Err(at(format!("non-finite value in f{j}")));
                }
                features.push(v);
            }
            examples.push(Example {
                id,
                label,
                features,
            });
        }
        Dataset::new(examples, feature_count)
    }
}

/// Shortest decimal string that round-trips the value exactly.
pub fn format_float(v: f64) -> String {
    let mut buf = ryu_format(v);
    // Keep integers readable without a trailing ".0" mismatch across writers.
    if buf.ends_with(".0") {
        buf.truncate(buf.len() - 2);
    }
    buf
}

fn ryu_format(v: f64) -> String {
    // serde_json already depends on ryu; going through a JSON number reuses
    // the exact same shortest-representation encoder everywhere.
    serde_json::Number::from_f64(v)
        .map(|n| n.to_string())
        .unwrap_or_else(|| v.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        Dataset::new(
            vec![
                Example {
                    id: 0,
                    label: Label::Positive,
                    features: vec![1.25, -3.5],
                },
                Example {
                    id: 1,
                    label: Label::Negative,
                    features: vec![0.1, 7.0],
                },
            ],
            2,
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let ds = sample();
        ds.write_csv(&path).unwrap();
        let back = Dataset::read_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.feature_count, 2);
        assert_eq!(back.examples[0].label, Label::Positive);
        assert_eq!(back.examples[0].features, vec![1.25, -3.5]);
        assert_eq!(back.examples[1].features, vec![0.1, 7.0]);
    }

    #[test]
    fn csv_write_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let ds = sample();
        ds.write_csv(&a).unwrap();
        ds.write_csv(&b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn rejects_bad_label() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "id,label,f0\n0,2,1.0\n").unwrap();
        let err = Dataset::read_csv(&path).unwrap_err();
        assert!(matches!(err, Error::Schema { .. }), "{err}");
    }

    #[test]
    fn rejects_ragged_features() {
        let err = Dataset::new(
            vec![Example {
                id: 0,
                label: Label::Positive,
                features: vec![1.0],
            }],
            2,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn label_sign() {
        assert_eq!(Label::Positive.sign(), 1.0);
        assert_eq!(Label::Negative.sign(), -1.0);
    }
}
