use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LabeledDataset, Row};
use crate::error::{Error, Result};

/// How a feature column is turned into numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    /// Numeric if every cell parses as a real, categorical otherwise.
    #[default]
    Auto,
    Numeric,
    /// One-hot encoded, one indicator per distinct value in first-appearance order.
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    #[serde(default)]
    pub kind: ColumnKind,
}

/// Column mapping for [`load_csv`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub label_column: String,
    /// Label cells equal to this value (after trimming) are positive; everything else is negative.
    pub positive_label_value: String,
    pub group_column: String,
    pub feature_columns: Vec<FeatureColumn>,
}

impl CsvSchema {
    /// Schema with every feature column auto-detected.
    pub fn new(label_column: &str, positive_label_value: &str, group_column: &str, features: &[&str]) -> Self {
        Self {
            label_column: label_column.to_owned(),
            positive_label_value: positive_label_value.to_owned(),
            group_column: group_column.to_owned(),
            feature_columns: features
                .iter()
                .map(|name| FeatureColumn {
                    name: (*name).to_owned(),
                    kind: ColumnKind::Auto,
                })
                .collect(),
        }
    }

    /// Schema matching the layout produced by [`write_csv`].
    pub fn for_written(dataset: &LabeledDataset) -> Self {
        Self {
            label_column: "label".into(),
            positive_label_value: "1".into(),
            group_column: "group".into(),
            feature_columns: dataset
                .feature_names()
                .iter()
                .map(|name| FeatureColumn {
                    name: name.clone(),
                    kind: ColumnKind::Numeric,
                })
                .collect(),
        }
    }
}

/// Loads a labelled dataset from a headered, comma-separated UTF-8 file.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// Trimmed header names of a CSV file.
pub fn csv_header(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = rdr.headers().map_err(|e| csv_error(e, 1))?;
    Ok(header.iter().map(|h| h.trim().to_owned()).collect())
}

/// Like [`load_csv`] but from any reader.
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    let index_of = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_owned(),
            })
    };
    let label_idx = index_of(&schema.label_column)?;
    let group_idx = index_of(&schema.group_column)?;
    let feature_idx = schema
        .feature_columns
        .iter()
        .map(|c| index_of(&c.name))
        .collect::<Result<Vec<_>>>()?;

    let mut group_names: Vec<String> = Vec::new();
    let mut labels = Vec::new();
    let mut groups = Vec::new();
    let mut line_numbers = Vec::new();
    // raw[feature][row]
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); feature_idx.len()];

    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            csv_error(e, line)
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let cell = |idx: usize, column: &str| -> Result<String> {
            let value = record.get(idx).unwrap_or("").trim();
            if value.is_empty() {
                return Err(Error::EmptyCell {
                    row: line,
                    column: column.to_owned(),
                });
            }
            Ok(value.to_owned())
        };

        let label = cell(label_idx, &schema.label_column)?;
        let group = cell(group_idx, &schema.group_column)?;
        let group_id = match group_names.iter().position(|g| *g == group) {
            Some(id) => id,
            None => {
                group_names.push(group);
                group_names.len() - 1
            }
        };
        for (f, (&idx, col)) in feature_idx.iter().zip(&schema.feature_columns).enumerate() {
            raw[f].push(cell(idx, &col.name)?);
        }
        labels.push(label == schema.positive_label_value.trim());
        groups.push(group_id);
        line_numbers.push(line);
    }

    if group_names.len() < 2 {
        return Err(Error::TooFewGroups {
            found: group_names.len(),
        });
    }

    let n = labels.len();
    let mut feature_names = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (col, values) in schema.feature_columns.iter().zip(&raw) {
        let numeric = match col.kind {
            ColumnKind::Numeric => true,
            ColumnKind::Categorical => false,
            ColumnKind::Auto => values.iter().all(|v| v.parse::<f64>().is_ok()),
        };
        if numeric {
            let mut parsed = Vec::with_capacity(n);
            for (v, &line) in values.iter().zip(&line_numbers) {
                let x: f64 = v.parse().map_err(|_| Error::Unparseable {
                    row: line,
                    column: col.name.clone(),
                    value: v.clone(),
                })?;
                if !x.is_finite() {
                    return Err(Error::Unparseable {
                        row: line,
                        column: col.name.clone(),
                        value: v.clone(),
                    });
                }
                parsed.push(x);
            }
            feature_names.push(col.name.clone());
            columns.push(parsed);
        } else {
            let mut categories: Vec<&str> = Vec::new();
            for v in values {
                if !categories.contains(&v.as_str()) {
                    categories.push(v);
                }
            }
            for cat in categories {
                feature_names.push(format!("{}={}", col.name, cat));
                columns.push(values.iter().map(|v| f64::from(u8::from(v == cat))).collect());
            }
        }
    }

    let rows = (0..n)
        .map(|i| Row {
            features: columns.iter().map(|c| c[i]).collect(),
            label: labels[i],
            group: groups[i],
        })
        .collect();
    LabeledDataset::new(rows, group_names, feature_names)
}

/// Writes the dataset as numeric feature columns followed by `label` (0/1)
/// and `group` (display name). [`CsvSchema::for_written`] reads it back.
pub fn write_csv<W: Write>(dataset: &LabeledDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = dataset.feature_names().iter().map(String::as_str).collect();
    header.push("label");
    header.push("group");
    w.write_record(&header).map_err(|e| csv_error(e, 0))?;
    for (i, row) in dataset.rows().iter().enumerate() {
        let mut record: Vec<String> = row.features.iter().map(|x| x.to_string()).collect();
        record.push(if row.label { "1" } else { "0" }.to_owned());
        record.push(dataset.group_names()[row.group].clone());
        w.write_record(&record).map_err(|e| csv_error(e, i + 2))?;
    }
    w.flush().map_err(|e| Error::Csv {
        row: 0,
        message: e.to_string(),
    })?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error, row: usize) -> Error {
    Error::Csv {
        row,
        message: e.to_string(),
    }
}
