//! Measure file formats: CSV point clouds and PGM grid densities.
//!
//! CSV layout is `x1,...,xd,w` with a header row, one support point per
//! line, `.` as decimal separator.  PGM covers both P2 (ASCII) and P5
//! (binary) with max values up to 65535; pixel values are read as
//! non-negative densities and may be rescaled on load.  Output grids are
//! written as 16-bit binary PGM.

use super::DiscreteMeasure;
use crate::{Error, Result};
use ndarray::{Array1, Array2};
use std::fs;
use std::io::Write;
use std::path::Path;

/// How PGM pixel values are turned into measure weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PgmScale {
    /// Divide by the sum so the measure has unit mass (default for
    /// mass-comparable experiments).
    UnitMass,
    /// Divide by the format's max value, weights in [0, 1].
    MaxValue,
    /// Multiply raw pixel values by a fixed factor.
    Factor(f64),
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), message: message.into() }
}

impl DiscreteMeasure {
    /// Reads a point-cloud measure from a `x1,...,xd,w` CSV file.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| parse_err(path, "empty file"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols.last() != Some(&"w") {
            return Err(parse_err(path, "header must be x1,...,xd,w"));
        }
        let d = cols.len() - 1;
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != d + 1 {
                return Err(parse_err(path, format!("row {}: expected {} fields", i + 2, d + 1)));
            }
            for f in &fields[..d] {
                coords.push(
                    f.parse::<f64>()
                        .map_err(|e| parse_err(path, format!("row {}: {e}", i + 2)))?,
                );
            }
            weights.push(
                fields[d]
                    .parse::<f64>()
                    .map_err(|e| parse_err(path, format!("row {}: {e}", i + 2)))?,
            );
        }
        let n = weights.len();
        let points = Array2::from_shape_vec((n, d), coords)
            .map_err(|e| parse_err(path, e.to_string()))?;
        Self::new(points, Array1::from(weights))
    }

    /// Writes the measure as CSV.  Floats use shortest round-trip formatting,
    /// so identical data produces identical bytes.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::new();
        for j in 0..self.dim() {
            out.push_str(&format!("x{},", j + 1));
        }
        out.push_str("w\n");
        for k in 0..self.len() {
            for j in 0..self.dim() {
                out.push_str(&format!("{},", self.points()[[k, j]]));
            }
            out.push_str(&format!("{}\n", self.weights()[k]));
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Reads a PGM image as a grid measure on the unit square.
    pub fn read_pgm(path: impl AsRef<Path>, scale: PgmScale) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path)?;
        let (rows, cols, maxval, raw) =
            parse_pgm(&bytes).map_err(|m| parse_err(path, m))?;
        let factor = match scale {
            PgmScale::UnitMass => {
                let sum: f64 = raw.iter().sum();
                if sum > 0.0 {
                    1.0 / sum
                } else {
                    return Err(parse_err(path, "image has zero total intensity"));
                }
            }
            PgmScale::MaxValue => 1.0 / maxval as f64,
            PgmScale::Factor(f) => f,
        };
        let weights = Array1::from(raw.iter().map(|&v| v * factor).collect::<Vec<_>>());
        Self::grid(rows, cols, weights)
    }

    /// Writes a grid measure as 16-bit binary PGM.  Values are mapped
    /// linearly so `value_max` (default: the largest weight) hits 65535.
    pub fn write_pgm(&self, path: impl AsRef<Path>, value_max: Option<f64>) -> Result<()> {
        let (rows, cols) = self
            .grid_shape()
            .ok_or_else(|| Error::InvalidInput("measure has no grid shape".into()))?;
        let top = match value_max {
            Some(v) if v > 0.0 => v,
            Some(v) => return Err(Error::InvalidInput(format!("value_max {v} must be positive"))),
            None => self.weights().iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE),
        };
        let mut data = Vec::with_capacity(2 * rows * cols);
        for &w in self.weights() {
            let q = ((w / top) * 65535.0).round().clamp(0.0, 65535.0) as u16;
            data.extend_from_slice(&q.to_be_bytes());
        }
        let mut f = fs::File::create(path)?;
        write!(f, "P5\n{cols} {rows}\n65535\n")?;
        f.write_all(&data)?;
        Ok(())
    }
}

/// Parses P2/P5 PGM, returning (rows, cols, maxval, row-major values).
fn parse_pgm(bytes: &[u8]) -> std::result::Result<(usize, usize, u32, Vec<f64>), String> {
    let mut pos = 0usize;

    fn skip_ws_and_comments(bytes: &[u8], mut pos: usize) -> usize {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                return pos;
            }
        }
    }

    fn read_token(bytes: &[u8], pos: &mut usize) -> std::result::Result<u32, String> {
        *pos = skip_ws_and_comments(bytes, *pos);
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        if start == *pos {
            return Err("expected integer token".into());
        }
        std::str::from_utf8(&bytes[start..*pos])
            .map_err(|e| e.to_string())?
            .parse::<u32>()
            .map_err(|e| e.to_string())
    }

    if bytes.len() < 2 {
        return Err("truncated header".into());
    }
    let magic = &bytes[..2];
    pos += 2;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        _ => return Err("not a P2/P5 PGM file".into()),
    };
    let cols = read_token(bytes, &mut pos)? as usize;
    let rows = read_token(bytes, &mut pos)? as usize;
    let maxval = read_token(bytes, &mut pos)?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("max value {maxval} out of range"));
    }
    let n = rows * cols;
    let mut values = Vec::with_capacity(n);
    if binary {
        // Exactly one whitespace byte separates the header from raster data.
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err("missing separator before raster".into());
        }
        pos += 1;
        let wide = maxval > 255;
        let need = n * if wide { 2 } else { 1 };
        if bytes.len() < pos + need {
            return Err("truncated raster data".into());
        }
        for i in 0..n {
            let v = if wide {
                u16::from_be_bytes([bytes[pos + 2 * i], bytes[pos + 2 * i + 1]]) as u32
            } else {
                bytes[pos + i] as u32
            };
            values.push(v as f64);
        }
    } else {
        for _ in 0..n {
            values.push(read_token(bytes, &mut pos)? as f64);
        }
    }
    if values.iter().any(|&v| v > maxval as f64) {
        return Err("pixel value exceeds declared max".into());
    }
    Ok((rows, cols, maxval, values))
}
