//! On-disk formats.
//!
//! Matrices are stored one sample per column, either as comma-separated text
//! (one feature per line, optional single `#` header line) or as a binary
//! `CMX1` file: the 4 magic bytes, three little-endian `u64` (rows, cols,
//! reserved = 0) and then `rows * cols` little-endian `f64` in row-major
//! order. Everything else (manifests, models, reports) is JSON.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{onehot_encode, ModalityMatrix, PairedDataset};
use crate::error::{Error, Result};
use crate::eval::FittedModel;

pub const MAGIC: &[u8; 4] = b"CMX1";
const HEADER_LEN: usize = 4 + 3 * 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Text,
    Binary,
}

impl MatrixFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Text => "csv",
            MatrixFormat::Binary => "cmx",
        }
    }
}

impl std::str::FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "csv" => Ok(MatrixFormat::Text),
            "binary" | "cmx" => Ok(MatrixFormat::Binary),
            _ => Err(Error::param("format", format!("unknown matrix format {s:?}"))),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn check_ingest(m: &DMatrix<f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn encode_binary(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    out.extend_from_slice(&0u64.to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<DMatrix<f64>> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing CMX1 header".into()));
    }
    let word = |k: usize| {
        let start = 4 + 8 * k;
        u64::from_le_bytes(bytes[start..start + 8].try_into().expect("8 bytes"))
    };
    let (rows, cols, reserved) = (word(0), word(1), word(2));
    if reserved != 0 {
        return Err(Error::Format(format!("reserved header word is {reserved}, expected 0")));
    }
    let count = rows
        .checked_mul(cols)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| Error::Format(format!("matrix size {rows}x{cols} overflows")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != count * 8 {
        return Err(Error::Format(format!(
            "{rows}x{cols} matrix needs {} payload bytes, file has {}",
            count * 8,
            payload.len()
        )));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let m = DMatrix::from_fn(rows, cols, |i, j| {
        let at = 8 * (i * cols + j);
        f64::from_le_bytes(payload[at..at + 8].try_into().expect("8 bytes"))
    });
    check_ingest(&m)?;
    Ok(m)
}

/// Shortest representation that parses back to the same bits.
pub fn encode_text(m: &DMatrix<f64>, header: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str("# ");
        out.push_str(&h.replace('\n', " "));
        out.push('\n');
    }
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:?}", m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn decode_text<R: BufRead>(reader: R) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut seen_data = false;
    let mut header_seen = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.starts_with('#') {
            if seen_data || header_seen {
                return Err(Error::Format(format!("line {}: only one header line is allowed, at the top", lineno + 1)));
            }
            header_seen = true;
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        seen_data = true;
        let r = rows.len();
        let mut row = Vec::new();
        for (c, field) in trimmed.split(',').enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("row {r}, column {c}: cannot parse {:?}", field.trim())))?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Format(format!(
                    "row {r} has {} values, row 0 has {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("matrix file has no data rows".into()));
    }
    let cols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>, format: MatrixFormat) -> Result<()> {
    let bytes = match format {
        MatrixFormat::Binary => encode_binary(m),
        MatrixFormat::Text => encode_text(m, None).into_bytes(),
    };
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Reads either format; binary is recognised by its magic bytes.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let located = |e: Error| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    };
    if bytes.starts_with(MAGIC) {
        decode_binary(&bytes).map_err(located)
    } else {
        decode_text(BufReader::new(bytes.as_slice())).map_err(located)
    }
}

/// Integer labels, one per line, optional `#` header.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v = t.parse::<usize>().map_err(|_| {
            Error::Format(format!("{}: line {}: not a class index: {t:?}", path.display(), lineno + 1))
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    /// Paths are relative to the manifest's directory unless absolute.
    pub x1: PathBuf,
    pub x2: PathBuf,
    pub labels: PathBuf,
    pub d1: usize,
    pub d2: usize,
    pub n: usize,
    pub num_classes: usize,
}

impl DatasetManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    /// Loads the referenced files and checks them against the declared sizes.
    pub fn load(&self, base_dir: &Path) -> Result<PairedDataset> {
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
        let x1 = read_matrix(&resolve(&self.x1))?;
        let x2 = read_matrix(&resolve(&self.x2))?;
        let labels = read_labels(&resolve(&self.labels))?;
        let checks = [
            ("modality-1 rows vs declared d1", self.d1, x1.nrows()),
            ("modality-2 rows vs declared d2", self.d2, x2.nrows()),
            ("modality-1 samples vs declared n", self.n, x1.ncols()),
            ("modality-2 samples vs declared n", self.n, x2.ncols()),
            ("label count vs declared n", self.n, labels.len()),
        ];
        for (what, expected, got) in checks {
            if expected != got {
                return Err(Error::DimensionMismatch { what, expected, got });
            }
        }
        let data = PairedDataset::new(
            ModalityMatrix::new(x1, 1)?,
            ModalityMatrix::new(x2, 2)?,
            onehot_encode(&labels, self.num_classes)?,
        )?;
        Ok(data)
    }
}

/// Reads a manifest and the dataset it points to.
pub fn load_dataset(manifest_path: &Path) -> Result<(DatasetManifest, PairedDataset)> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let data = manifest.load(base)?;
    Ok((manifest, data))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let mut text = String::new();
    fs::File::open(path)
        .map_err(|e| io_err(path, e))?
        .read_to_string(&mut text)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub model: FittedModel,
}

pub fn save_model(path: &Path, model: &FittedModel) -> Result<()> {
    write_json(
        path,
        &ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: model.clone(),
        },
    )
}

pub fn load_model(path: &Path) -> Result<FittedModel> {
    let file: ModelFile = read_json(path)?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: model format version {} is not supported",
            path.display(),
            file.format_version
        )));
    }
    Ok(file.model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_layout_is_row_major_little_endian() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.5]);
        let bytes = encode_binary(&m);
        assert_eq!(&bytes[..4], b"CMX1");
        assert_eq!(u64::from_le_bytes(bytes[4..12].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[20..28].try_into().unwrap()), 0);
        assert_eq!(f64::from_le_bytes(bytes[28..36].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(bytes[36..44].try_into().unwrap()), 2.0);
        assert_eq!(f64::from_le_bytes(bytes[68..76].try_into().unwrap()), 6.5);
        assert_eq!(bytes.len(), 28 + 48);
        assert_eq!(decode_binary(&bytes).unwrap(), m);
    }

    #[test]
    fn binary_rejects_bad_input() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let mut bytes = encode_binary(&m);
        assert!(decode_binary(&bytes[..bytes.len() - 1]).is_err());
        bytes[20] = 1;
        assert!(decode_binary(&bytes).is_err());
        let nan = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, f64::NAN]);
        assert_eq!(decode_binary(&encode_binary(&nan)), Err(Error::NonFinite { row: 1, col: 1 }));
        assert!(decode_binary(b"CMX0").is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let m = DMatrix::from_row_slice(2, 3, &[0.1, -1e-300, 3.0, 1.0 / 3.0, 2.5e17, -0.0]);
        let text = encode_text(&m, Some("features x samples"));
        assert!(text.starts_with("# features"));
        let back = decode_text(text.as_bytes()).unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn text_errors_carry_position() {
        assert_eq!(decode_text("1,2\n3,nan\n".as_bytes()), Err(Error::NonFinite { row: 1, col: 1 }));
        assert_eq!(decode_text("1,2\ninf,0\n".as_bytes()), Err(Error::NonFinite { row: 1, col: 0 }));
        assert!(decode_text("1,2\n3\n".as_bytes()).is_err());
        assert!(decode_text("1,x\n".as_bytes()).is_err());
        assert!(decode_text("# a\n# b\n1\n".as_bytes()).is_err());
        assert!(decode_text("# only\n".as_bytes()).is_err());
    }
}
