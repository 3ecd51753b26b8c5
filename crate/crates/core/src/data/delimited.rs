//! Header-less CSV: `label,v0,v1,...,v{D-1}` per row.

use std::path::Path;

use super::{ClassId, EmbeddingDataset};
use crate::error::{Error, Result};

pub fn read_csv(path: &Path) -> Result<EmbeddingDataset> {
    let reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;
    parse(reader)
}

fn parse<R: std::io::Read>(mut reader: csv::Reader<R>) -> Result<EmbeddingDataset> {
    let mut dataset: Option<EmbeddingDataset> = None;
    let mut row = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() < 2 {
            return Err(Error::FormatLine { line, message: "expected a label and at least one value".into() });
        }
        let dim = record.len() - 1;
        let ds = match &mut dataset {
            Some(ds) => ds,
            None => dataset.insert(EmbeddingDataset::new(dim)?),
        };
        if dim != ds.dim() {
            return Err(Error::FormatLine {
                line,
                message: format!("row has {dim} values, earlier rows have {}", ds.dim()),
            });
        }
        let label: u32 = record[0]
            .parse()
            .map_err(|_| Error::FormatLine { line, message: format!("invalid label {:?}", &record[0]) })?;
        row.clear();
        for (k, field) in record.iter().skip(1).enumerate() {
            let v: f32 = field
                .parse()
                .map_err(|_| Error::FormatLine { line, message: format!("invalid value {field:?} in column {}", k + 1) })?;
            row.push(v);
        }
        ds.push(&row, ClassId(label))?;
    }
    dataset.ok_or_else(|| Error::FormatLine { line: 1, message: "CSV file has no records, dimension unknown".into() })
}

pub fn write_csv(dataset: &EmbeddingDataset, path: &Path) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_error)?;
    let mut row: Vec<String> = Vec::with_capacity(dataset.dim() + 1);
    for i in 0..dataset.len() {
        row.clear();
        row.push(dataset.labels()[i].0.to_string());
        // Display for f32 prints the shortest string that parses back exactly.
        row.extend(dataset.embedding(i).iter().map(|v| v.to_string()));
        writer.write_record(&row).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::FormatLine { line, message: format!("{kind:?}") },
    }
}
