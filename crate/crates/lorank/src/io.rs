//! Matrix files: headerless CSV and the little-endian LRFM binary format.
//!
//! LRFM layout: the magic bytes `LRFM`, a `u32` version (1), `u64` rows,
//! `u64` cols, then `rows × cols` `f64` values in row-major order, all
//! little-endian.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lorank_core::data::LabeledDataset;
use lorank_core::DenseMatrix;

pub const LRFM_MAGIC: &[u8; 4] = b"LRFM";
pub const LRFM_VERSION: u32 = 1;
const LRFM_HEADER_LEN: usize = 4 + 4 + 8 + 8;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Csv { path: PathBuf, line: u64, message: String },
    #[error("{}:{line}: column {col}: cannot parse {value:?} as a number", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        col: usize,
        value: String,
    },
    #[error("{}:{line}: non-finite value at row {row}, column {col}", path.display())]
    NonFinite {
        path: PathBuf,
        line: u64,
        row: usize,
        col: usize,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Lrfm,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Lrfm => "lrfm",
        }
    }
}

/// Reads a numeric CSV. With `header` the first line is skipped. Blank lines
/// are ignored; every remaining record must have the same number of fields.
pub fn read_csv(path: &Path, header: bool) -> Result<DenseMatrix, IoError> {
    let text = fs::read(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_reader(text.as_slice());
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| IoError::Csv {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if let Some(c) = cols {
            if record.len() != c {
                return Err(IoError::Csv {
                    path: path.to_path_buf(),
                    line,
                    message: format!("expected {c} fields, found {}", record.len()),
                });
            }
        }
        cols = Some(record.len());
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| IoError::Parse {
                path: path.to_path_buf(),
                line,
                col,
                value: field.to_string(),
            })?;
            if !value.is_finite() {
                return Err(IoError::NonFinite {
                    path: path.to_path_buf(),
                    line,
                    row: rows,
                    col,
                });
            }
            data.push(value);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    DenseMatrix::new(rows, cols, data).map_err(|e| IoError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes one row per line using the shortest round-trip representation.
pub fn write_csv(path: &Path, m: &DenseMatrix, header: Option<&[String]>) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| IoError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    if let Some(h) = header {
        writer.write_record(h).map_err(wrap)?;
    }
    for i in 0..m.rows() {
        writer
            .write_record(m.row(i).iter().map(|v| v.to_string()))
            .map_err(wrap)?;
    }
    let bytes = writer.into_inner().map_err(|e| IoError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn encode_lrfm(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(LRFM_HEADER_LEN + 8 * m.as_slice().len());
    out.extend_from_slice(LRFM_MAGIC);
    out.extend_from_slice(&LRFM_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_lrfm(bytes: &[u8]) -> Result<DenseMatrix, String> {
    if bytes.len() < LRFM_HEADER_LEN {
        return Err(format!("truncated header ({} bytes)", bytes.len()));
    }
    if &bytes[..4] != LRFM_MAGIC {
        return Err("missing LRFM magic".into());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != LRFM_VERSION {
        return Err(format!("unsupported LRFM version {version}"));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let cols = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes"));
    let count = rows
        .checked_mul(cols)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| format!("shape {rows}x{cols} too large"))?;
    let body = &bytes[LRFM_HEADER_LEN..];
    if Some(body.len()) != count.checked_mul(8) {
        return Err(format!(
            "expected {count} values for shape {rows}x{cols}, found {} bytes",
            body.len()
        ));
    }
    let data: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    DenseMatrix::new(rows as usize, cols as usize, data).map_err(|e| e.to_string())
}

pub fn read_lrfm(path: &Path) -> Result<DenseMatrix, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_lrfm(&bytes).map_err(|message| IoError::Format {
        path: path.to_path_buf(),
        message,
    })
}

pub fn write_lrfm(path: &Path, m: &DenseMatrix) -> Result<(), IoError> {
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(&encode_lrfm(m)).map_err(io_err(path))
}

pub fn read_matrix(path: &Path, format: Format, header: bool) -> Result<DenseMatrix, IoError> {
    match format {
        Format::Csv => read_csv(path, header),
        Format::Lrfm => read_lrfm(path),
    }
}

pub fn write_matrix(path: &Path, m: &DenseMatrix, format: Format) -> Result<(), IoError> {
    match format {
        Format::Csv => write_csv(path, m, None),
        Format::Lrfm => write_lrfm(path, m),
    }
}

/// Reads the class names from the first line of a CSV label file.
pub fn read_csv_header(path: &Path) -> Result<Vec<String>, IoError> {
    let text = fs::read(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_slice());
    let headers = reader.headers().map_err(|e| IoError::Csv {
        path: path.to_path_buf(),
        line: 1,
        message: e.to_string(),
    })?;
    Ok(headers.iter().map(str::to_string).collect())
}

/// Loads features and labels. With `header` set and CSV labels, the label
/// header row supplies the class names.
pub fn load_dataset(
    features: &Path,
    labels: &Path,
    format: Format,
    header: bool,
) -> Result<LabeledDataset, crate::CliError> {
    let x = read_matrix(features, format, header)?;
    let y = read_matrix(labels, format, header)?;
    let names = if header && format == Format::Csv {
        Some(read_csv_header(labels)?)
    } else {
        None
    };
    Ok(LabeledDataset::new(x, y, names)?)
}
