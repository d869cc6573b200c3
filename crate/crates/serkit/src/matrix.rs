//! Dense row-major matrix with CSV and EMAT readers/writers.
//!
//! EMAT is a minimal binary interchange format for embedding matrices:
//! magic bytes `EMAT`, row count as u32 little-endian, column count as u32
//! little-endian, then rows×cols IEEE-754 f32 values little-endian in
//! row-major order. CSV matrices are plain comma-separated numbers with an
//! optional header row of column names.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Dense matrix of finite real values, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    column_names: Option<Vec<String>>,
}

impl Matrix {
    /// Build from row-major values. Rejects shape mismatch and non-finite cells.
    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::contract(format!(
                "matrix shape {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!(
                "non-finite value at index {pos} ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Matrix { rows, cols, values, column_names: None })
    }

    /// Build from a slice of equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::contract(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Matrix::from_vec(n, cols, values)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, values: vec![0.0; rows * cols], column_names: None }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.values[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.values[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// Attach column names; length must equal the column count.
    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.cols {
            return Err(Error::contract(format!(
                "{} column names for {} columns",
                names.len(),
                self.cols
            )));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    /// Column mean vector.
    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        for row in self.iter_rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.rows.max(1) as f64;
        for m in &mut means {
            *m /= n;
        }
        means
    }

    /// Vertically stack matrices with identical column counts.
    pub fn vstack(parts: &[&Matrix]) -> Result<Matrix> {
        let cols = parts
            .first()
            .map(|m| m.cols)
            .ok_or_else(|| Error::contract("vstack of zero matrices"))?;
        let mut values = Vec::new();
        let mut rows = 0;
        for m in parts {
            if m.cols != cols {
                return Err(Error::contract(format!(
                    "vstack column mismatch: {} vs {cols}",
                    m.cols
                )));
            }
            values.extend_from_slice(&m.values);
            rows += m.rows;
        }
        Matrix::from_vec(rows, cols, values)
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.values)
    }
}

const EMAT_MAGIC: &[u8; 4] = b"EMAT";

/// Read a matrix, dispatching on file contents: EMAT when the magic bytes
/// match, CSV otherwise.
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 4];
    let n = read_up_to(&mut file, &mut magic).map_err(|e| Error::io(path, e))?;
    if n == 4 && &magic == EMAT_MAGIC {
        read_emat_body(&mut file, path)
    } else {
        drop(file);
        read_csv_matrix(path)
    }
}

fn read_up_to(reader: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = reader.read(&mut buf[filled..])?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    Ok(filled)
}

/// Read the binary EMAT format. Errors on magic mismatch, truncation, and
/// non-finite cells.
pub fn read_emat(path: &Path) -> Result<Matrix> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 4];
    let n = read_up_to(&mut file, &mut magic).map_err(|e| Error::io(path, e))?;
    if n < 4 || &magic != EMAT_MAGIC {
        return Err(Error::format("EMAT", format!("bad magic in {}", path.display())));
    }
    read_emat_body(&mut file, path)
}

fn read_emat_body(file: &mut File, path: &Path) -> Result<Matrix> {
    let mut header = [0u8; 8];
    let n = read_up_to(file, &mut header).map_err(|e| Error::io(path, e))?;
    if n < 8 {
        return Err(Error::format("EMAT", "truncated header"));
    }
    let rows = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let want = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::format("EMAT", "shape overflow"))?;
    let mut payload = Vec::new();
    file.read_to_end(&mut payload).map_err(|e| Error::io(path, e))?;
    if payload.len() != want {
        return Err(Error::format(
            "EMAT",
            format!("payload is {} bytes, expected {want} for {rows}x{cols}", payload.len()),
        ));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for chunk in payload.chunks_exact(4) {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format("EMAT", format!("non-finite cell at index {}", values.len())));
        }
        values.push(v as f64);
    }
    Matrix::from_vec(rows, cols, values)
}

/// Write the binary EMAT format. Values are narrowed to f32.
pub fn write_emat(matrix: &Matrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_emat_to(matrix, &mut w).map_err(|e| Error::io(path, e))
}

pub fn write_emat_to(matrix: &Matrix, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(EMAT_MAGIC)?;
    w.write_all(&(matrix.rows as u32).to_le_bytes())?;
    w.write_all(&(matrix.cols as u32).to_le_bytes())?;
    for v in &matrix.values {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    w.flush()
}

/// Read a CSV matrix. The first line is taken as a header when any of its
/// cells fails to parse as a number.
pub fn read_csv_matrix(path: &Path) -> Result<Matrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut names: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            cells.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(vals) => {
                if let Some(bad) = vals.iter().position(|v| !v.is_finite()) {
                    return Err(Error::format_at(
                        "CSV matrix",
                        idx + 1,
                        format!("non-finite cell in column {}", bad + 1),
                    ));
                }
                if let Some(first) = rows.first() {
                    if vals.len() != first.len() {
                        return Err(Error::format_at(
                            "CSV matrix",
                            idx + 1,
                            format!("{} cells, expected {}", vals.len(), first.len()),
                        ));
                    }
                }
                rows.push(vals);
            }
            Err(_) if rows.is_empty() && names.is_none() => {
                names = Some(cells.iter().map(|s| s.to_string()).collect());
            }
            Err(e) => {
                return Err(Error::format_at("CSV matrix", idx + 1, format!("non-numeric cell: {e}")));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::format("CSV matrix", "no data rows"));
    }
    let m = Matrix::from_rows(&rows)?;
    match names {
        Some(n) => {
            if n.len() != m.cols() {
                return Err(Error::format(
                    "CSV matrix",
                    format!("header has {} names for {} columns", n.len(), m.cols()),
                ));
            }
            m.with_column_names(n)
        }
        None => Ok(m),
    }
}

/// Write a CSV matrix. `{}` formatting of f64 round-trips exactly, so
/// `read_csv_matrix(write_csv_matrix(m))` reproduces the values bit-for-bit.
pub fn write_csv_matrix(matrix: &Matrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv_matrix_to(matrix, &mut w).map_err(|e| Error::io(path, e))
}

pub fn write_csv_matrix_to(matrix: &Matrix, w: &mut impl Write) -> std::io::Result<()> {
    if let Some(names) = &matrix.column_names {
        writeln!(w, "{}", names.join(","))?;
    }
    let mut line = String::new();
    for row in matrix.iter_rows() {
        line.clear();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v}"));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()
}
