use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Quad;

pub const MANIFEST_COLUMNS: [&str; 11] = ["path", "x0", "y0", "x1", "y1", "x2", "y2", "x3", "y3", "part", "group"];

/// One manifest row: an image and its ground-truth document corners.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRecord {
    /// Image path relative to the data root.
    pub path: String,
    /// Corners in original-image pixels; may extend past the frame.
    pub quad: Quad,
    pub part: i64,
    pub group: String,
}

/// Parses a comma- or tab-separated manifest; the delimiter is taken from the
/// header line and columns are located by name.
pub fn parse_manifest(text: &str) -> Result<Vec<DatasetRecord>> {
    let header_line = text.lines().next().unwrap_or("");
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header_err = |msg: String| Error::Manifest { line: 1, msg };
    let headers = reader.headers().map_err(|e| header_err(e.to_string()))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(header_err("missing header row".into()));
    }
    let mut index = [0usize; 11];
    for (slot, name) in index.iter_mut().zip(MANIFEST_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| header_err(format!("missing column {name:?}")))?;
    }
    let width = headers.len();
    if width > MANIFEST_COLUMNS.len() + 1 || (width == MANIFEST_COLUMNS.len() + 1 && index.contains(&0)) {
        return Err(header_err(format!("unexpected columns in header ({width} fields)")));
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Manifest {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.iter().all(str::is_empty) {
            continue;
        }
        let bad = |msg: String| Error::Manifest { line, msg };
        if row.len() != width {
            return Err(bad(format!("expected {width} fields, found {}", row.len())));
        }
        let mut coords = [0.0f64; 8];
        for (k, c) in coords.iter_mut().enumerate() {
            let raw = &row[index[1 + k]];
            *c = raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("{} is not a finite number: {raw:?}", MANIFEST_COLUMNS[1 + k])))?;
        }
        let raw_part = &row[index[9]];
        let part = raw_part
            .parse::<i64>()
            .map_err(|_| bad(format!("part is not an integer: {raw_part:?}")))?;
        let path = row[index[0]].to_string();
        if path.is_empty() {
            return Err(bad("empty path".into()));
        }
        records.push(DatasetRecord { path, quad: Quad::from_coords(coords), part, group: row[index[10]].to_string() });
    }
    Ok(records)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<DatasetRecord>> {
    parse_manifest(&std::fs::read_to_string(path)?)
}

/// Writes records as a comma-separated manifest with a header row.
pub fn write_manifest<W: Write>(records: &[DatasetRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(MANIFEST_COLUMNS).map_err(io)?;
    for r in records {
        let mut fields = vec![r.path.clone()];
        fields.extend(r.quad.coords().iter().map(|v| v.to_string()));
        fields.push(r.part.to_string());
        fields.push(r.group.clone());
        w.write_record(&fields).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn manifest_to_string(records: &[DatasetRecord]) -> String {
    let mut buf = Vec::new();
    write_manifest(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("manifest is UTF-8")
}
