//! Dataset readers and writers: fvecs (little-endian f32 with a per-record
//! dimension header) and plain CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use bregpart_core::data::Matrix;

use crate::error::{Error, Result};

/// Reads an entire fvecs file. Every record must carry the same dimension
/// header and the file length must be an exact multiple of the record size.
pub fn read_fvecs(path: &Path) -> Result<Matrix> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.is_empty() {
        return Ok(Matrix::new(Vec::new(), 0, 0)?);
    }
    if bytes.len() < 4 {
        return Err(Error::ShortRead { path: path.into(), offset: 0 });
    }
    let d = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
    if d == 0 {
        return Err(Error::InconsistentDims { path: path.into(), record: 0, found: 0, expected: 1 });
    }
    let record_size = 4 + 4 * d;
    if bytes.len() % record_size != 0 {
        let offset = (bytes.len() / record_size * record_size) as u64;
        return Err(Error::ShortRead { path: path.into(), offset });
    }
    let n = bytes.len() / record_size;
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let base = i * record_size;
        let di = u32::from_le_bytes(bytes[base..base + 4].try_into().unwrap()) as usize;
        if di != d {
            return Err(Error::InconsistentDims { path: path.into(), record: i, found: di, expected: d });
        }
        for j in 0..d {
            let off = base + 4 + 4 * j;
            let v = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
            data.push(v as f64);
        }
    }
    Ok(Matrix::new(data, n, d)?)
}

pub fn write_fvecs(path: &Path, m: &Matrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for row in m.iter_rows() {
        w.write_all(&(m.cols() as u32).to_le_bytes()).map_err(|e| Error::io(path, e))?;
        for &v in row {
            w.write_all(&(v as f32).to_le_bytes()).map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a CSV of floats, one record per row. Blank lines are skipped.
/// `has_header` drops the first non-blank line unparsed.
pub fn read_csv(path: &Path, has_header: bool) -> Result<Matrix> {
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut data = Vec::new();
    let mut d = None;
    let mut n = 0usize;
    let mut skipped_header = !has_header;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if !skipped_header {
            skipped_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let expected = *d.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(Error::RaggedRow {
                path: path.into(),
                line: line_no,
                found: fields.len(),
                expected,
            });
        }
        for (col, cell) in fields.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::BadCell {
                path: path.into(),
                line: line_no,
                column: col + 1,
                cell: cell.to_string(),
            })?;
            data.push(v);
        }
        n += 1;
    }
    Ok(Matrix::new(data, n, d.unwrap_or(0))?)
}

pub fn write_csv(path: &Path, m: &Matrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for row in m.iter_rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Fvecs,
    Csv,
}

impl DataFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fvecs" => Ok(DataFormat::Fvecs),
            "csv" => Ok(DataFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown data format {other:?}"))),
        }
    }
}

pub fn read_dataset(path: &Path, format: DataFormat) -> Result<Matrix> {
    match format {
        DataFormat::Fvecs => read_fvecs(path),
        DataFormat::Csv => read_csv(path, false),
    }
}

pub fn write_dataset(path: &Path, format: DataFormat, m: &Matrix) -> Result<()> {
    match format {
        DataFormat::Fvecs => write_fvecs(path, m),
        DataFormat::Csv => write_csv(path, m),
    }
}
