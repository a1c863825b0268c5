//! Kernel container and CSV files.
//!
//! Container layout, all integers little-endian:
//!
//! | offset | size | field                           |
//! |--------|------|---------------------------------|
//! | 0      | 16   | magic `QKBKERN1` + 8 NUL bytes  |
//! | 16     | 4    | rows (u32)                      |
//! | 20     | 4    | cols (u32)                      |
//! | 24     | 1    | pathway code                    |
//! | 25     | 16   | config hash (u128)              |
//! | 41     | 8·rows·cols | f64 values, row-major    |
//!
//! The CSV fallback has no header row; one matrix row per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{check_finite, min_eigenvalue, KernelMatrix, Pathway, Provenance, INDEFINITE_TOL};
use crate::error::{Error, Result};
use crate::hash::ContentHash;

pub const MAGIC: [u8; 16] = *b"QKBKERN1\0\0\0\0\0\0\0\0";
pub const HEADER_LEN: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainerHeader {
    pub rows: u32,
    pub cols: u32,
    pub pathway: Pathway,
    pub config_hash: ContentHash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFormat {
    Container,
    Csv,
}

impl KernelFormat {
    /// `.csv` selects CSV; anything else the binary container.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => KernelFormat::Csv,
            _ => KernelFormat::Container,
        }
    }
}

pub fn write_container<W: Write>(w: &mut W, values: &DMatrix<f64>, pathway: Pathway, hash: ContentHash) -> Result<()> {
    let rows = u32::try_from(values.nrows()).map_err(|_| Error::InvalidArgument("too many rows".into()))?;
    let cols = u32::try_from(values.ncols()).map_err(|_| Error::InvalidArgument("too many columns".into()))?;
    w.write_all(&MAGIC)?;
    w.write_all(&rows.to_le_bytes())?;
    w.write_all(&cols.to_le_bytes())?;
    w.write_all(&[pathway.code()])?;
    w.write_all(&hash.to_le_bytes())?;
    for i in 0..values.nrows() {
        for j in 0..values.ncols() {
            w.write_all(&values[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_container<R: Read>(r: &mut R) -> Result<(ContainerHeader, DMatrix<f64>)> {
    let mut head = [0u8; HEADER_LEN];
    r.read_exact(&mut head).map_err(|_| Error::MalformedKernel("truncated header".into()))?;
    if head[..16] != MAGIC {
        return Err(Error::MalformedKernel("bad magic".into()));
    }
    let rows = u32::from_le_bytes(head[16..20].try_into().expect("4 bytes"));
    let cols = u32::from_le_bytes(head[20..24].try_into().expect("4 bytes"));
    let pathway =
        Pathway::from_code(head[24]).ok_or_else(|| Error::MalformedKernel(format!("unknown pathway code {}", head[24])))?;
    let config_hash = ContentHash::from_le_bytes(head[25..41].try_into().expect("16 bytes"));
    let n = rows as usize * cols as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != 8 * n {
        return Err(Error::MalformedKernel(format!("expected {} value bytes, found {}", 8 * n, body.len())));
    }
    let values = DMatrix::from_row_iterator(
        rows as usize,
        cols as usize,
        body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))),
    );
    check_finite(&values)?;
    Ok((ContainerHeader { rows, cols, pathway, config_hash }, values))
}

/// Values printed with the shortest representation that round-trips.
pub fn write_csv<W: Write>(w: &mut W, values: &DMatrix<f64>) -> Result<()> {
    for i in 0..values.nrows() {
        let line: Vec<String> = (0..values.ncols()).map(|j| values[(i, j)].to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<DMatrix<f64>> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::MalformedKernel(format!("line {}: {e}", lineno + 1)))?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::MalformedKernel(format!("line {} has {} fields, expected {c}", lineno + 1, row.len())))
            }
            _ => {}
        }
        data.extend(row);
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::MalformedKernel("empty CSV kernel".into()))?;
    let values = DMatrix::from_row_slice(rows, cols, &data);
    check_finite(&values)?;
    Ok(values)
}

pub fn export_kernel(path: &Path, k: &KernelMatrix, format: KernelFormat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        KernelFormat::Container => write_container(&mut w, &k.values, k.provenance.pathway, k.provenance.spec_hash)?,
        KernelFormat::Csv => write_csv(&mut w, &k.values)?,
    }
    w.flush()?;
    Ok(())
}

/// Load an externally produced kernel (container or CSV, detected by the
/// magic). The matrix is used raw; square matrices whose symmetric part has
/// an eigenvalue below −1e-9 are flagged indefinite.
pub fn import_kernel(path: &Path) -> Result<KernelMatrix> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let (values, hash) = if bytes.starts_with(&MAGIC[..8]) {
        let (h, v) = read_container(&mut bytes.as_slice())?;
        (v, h.config_hash)
    } else {
        (read_csv(BufReader::new(bytes.as_slice()))?, ContentHash::of_bytes(&bytes))
    };
    let mut provenance = Provenance::new(Pathway::Imported, hash, None, 0.0);
    if values.nrows() == values.ncols() {
        let lam = min_eigenvalue(&values);
        provenance.min_eigenvalue = Some(lam);
        provenance.indefinite = lam < INDEFINITE_TOL;
    }
    Ok(KernelMatrix { values, provenance })
}
