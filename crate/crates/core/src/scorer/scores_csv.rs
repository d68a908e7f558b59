//! `score,label,group` CSV files, for scores produced elsewhere.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{ScoredDataset, ScoredRow};
use crate::error::{Error, Result};
use crate::ingest::csv_io::csv_error;

pub fn load_scores(path: impl AsRef<Path>) -> Result<ScoredDataset> {
    let path = path.as_ref();
    read_scores(File::open(path).map_err(|e| Error::io(path, e))?)
}

/// Reads a headered `score,label,group` CSV. Labels must be `0` or `1`;
/// groups are display names mapped to dense ids in first-appearance order.
pub fn read_scores<R: Read>(reader: R) -> Result<ScoredDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn { column: name.into() })
    };
    let (score_idx, label_idx, group_idx) = (col("score")?, col("label")?, col("group")?);

    let mut names: Vec<String> = Vec::new();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let get = |idx: usize, column: &str| -> Result<&str> {
            match record.get(idx).map(str::trim) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(Error::EmptyCell {
                    row: line,
                    column: column.into(),
                }),
            }
        };
        let raw = get(score_idx, "score")?;
        let score: f64 = raw.parse().map_err(|_| Error::Unparseable {
            row: line,
            column: "score".into(),
            value: raw.into(),
        })?;
        if !(score.is_finite() && (0.0..=1.0).contains(&score)) {
            return Err(Error::InvalidValue {
                row: line,
                column: "score".into(),
                message: format!("{score} outside [0, 1]"),
            });
        }
        let label = match get(label_idx, "label")? {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::InvalidValue {
                    row: line,
                    column: "label".into(),
                    message: format!("expected 0 or 1, got `{other}`"),
                })
            }
        };
        let group = get(group_idx, "group")?;
        let group = match names.iter().position(|g| g == group) {
            Some(id) => id,
            None => {
                names.push(group.to_owned());
                names.len() - 1
            }
        };
        rows.push(ScoredRow { score, label, group });
    }
    ScoredDataset::new(rows, names)
}

pub fn save_scores(scored: &ScoredDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_scores(scored, std::io::BufWriter::new(file))
}

pub fn write_scores<W: Write>(scored: &ScoredDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["score", "label", "group"])
        .map_err(|e| csv_error(e, 1))?;
    for (i, r) in scored.rows().iter().enumerate() {
        w.write_record([
            r.score.to_string().as_str(),
            if r.label { "1" } else { "0" },
            scored.group_names()[r.group].as_str(),
        ])
        .map_err(|e| csv_error(e, i + 2))?;
    }
    w.flush().map_err(|e| Error::Csv {
        row: 0,
        message: e.to_string(),
    })
}
