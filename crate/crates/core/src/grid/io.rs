//! Field serialization.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! offset  size  content
//!      0     4  magic "BLWP"
//!      4     4  u32 format version
//!      8     4  u32 dim
//!     12     4  u32 points per axis
//!     16     8  f64 half width L
//!     24     8  reserved, zero
//!     32   8*N  f64 values, row-major, last axis fastest
//! ```
//!
//! CSV: header `i0[,i1[,i2]],value`, one row per lattice point in storage order.

use std::io::{BufRead, Read, Write};

use super::{Field, Grid};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: [u8; 4] = *b"BLWP";
pub const BINARY_VERSION: u32 = 1;

pub fn write_binary<W: Write>(field: &Field, mut w: W) -> Result<()> {
    let g = field.grid();
    let mut header = [0u8; 32];
    header[0..4].copy_from_slice(&BINARY_MAGIC);
    header[4..8].copy_from_slice(&BINARY_VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&(g.dim() as u32).to_le_bytes());
    header[12..16].copy_from_slice(&(g.points() as u32).to_le_bytes());
    header[16..24].copy_from_slice(&g.half_width().to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Field> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if header[0..4] != BINARY_MAGIC {
        return Err(Error::Io("bad magic, not a BLWP field".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != BINARY_VERSION {
        return Err(Error::Io(format!("unsupported field format version {version}")));
    }
    let dim = word(8) as usize;
    let points = word(12) as usize;
    let half_width = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let grid = Grid::new(dim, points, half_width)?;
    let mut bytes = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut bytes)?;
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Field::from_values(&grid, values)
}

pub fn write_csv<W: Write>(field: &Field, mut w: W) -> Result<()> {
    let g = field.grid();
    let cols: Vec<String> = (0..g.dim()).map(|a| format!("i{a}")).collect();
    writeln!(w, "{},value", cols.join(","))?;
    for (flat, v) in field.values().iter().enumerate() {
        let idx = g.multi_index(flat);
        for i in &idx[..g.dim()] {
            write!(w, "{i},")?;
        }
        writeln!(w, "{v:e}")?;
    }
    Ok(())
}

/// Reads a CSV written by [`write_csv`] onto `grid`. Rows may come in any order.
pub fn read_csv<R: BufRead>(grid: &Grid, r: R) -> Result<Field> {
    let mut values = vec![f64::NAN; grid.len()];
    let mut seen = 0usize;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != grid.dim() + 1 {
            return Err(Error::Io(format!("line {}: expected {} columns", lineno + 1, grid.dim() + 1)));
        }
        let mut flat = 0usize;
        for p in &parts[..grid.dim()] {
            let i: usize = p.trim().parse().map_err(|e| Error::Io(format!("line {}: {e}", lineno + 1)))?;
            if i >= grid.points() {
                return Err(Error::Io(format!("line {}: index {i} out of range", lineno + 1)));
            }
            flat = flat * grid.points() + i;
        }
        values[flat] = parts[grid.dim()]
            .trim()
            .parse()
            .map_err(|e| Error::Io(format!("line {}: {e}", lineno + 1)))?;
        seen += 1;
    }
    if seen != grid.len() {
        return Err(Error::Io(format!("expected {} rows, read {seen}", grid.len())));
    }
    Field::from_values(grid, values)
}
