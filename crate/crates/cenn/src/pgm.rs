//! PGM image I/O (ASCII `P2` and binary `P5`) with the bipolar convention
//! used throughout: black pixels map to +1.0, white pixels to -1.0.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{CennError, Result};
use crate::grid::CellGrid;

/// Output flavor for [`write_pgm_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmFormat {
    /// `P2`, ASCII decimal samples.
    Ascii,
    /// `P5`, raw samples (two bytes big-endian when maxval > 255).
    Binary,
}

fn format_err(msg: impl Into<String>) -> CennError {
    CennError::PgmFormat(msg.into())
}

/// Byte-level tokenizer for the header and ASCII raster: skips whitespace and
/// `#` comments, then reads one unsigned decimal token.
struct Tokens<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn skip_separators(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn next_uint(&mut self) -> Result<u32> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(format_err("expected an unsigned integer"));
        }
        let text = std::str::from_utf8(&self.data[start..self.pos]).expect("ascii digits");
        text.parse::<u32>()
            .map_err(|_| format_err(format!("integer out of range: {text}")))
    }
}

/// Parses a PGM image from memory.
pub fn read_pgm_bytes(data: &[u8]) -> Result<CellGrid> {
    if data.len() < 2 {
        return Err(format_err("file too short for a PGM header"));
    }
    let magic = &data[..2];
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        _ => {
            return Err(format_err(format!(
                "unsupported magic {:?} (expected P2 or P5)",
                String::from_utf8_lossy(magic)
            )))
        }
    };
    let mut tokens = Tokens::new(&data[2..]);
    let width = tokens.next_uint()? as usize;
    let height = tokens.next_uint()? as usize;
    let maxval = tokens.next_uint()?;
    if width == 0 || height == 0 {
        return Err(format_err("zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(format!("maxval {maxval} outside 1..=65535")));
    }
    let count = width * height;
    let mut samples = Vec::with_capacity(count);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        let raster_start = 2 + tokens.pos + 1;
        if raster_start > data.len() {
            return Err(format_err("missing raster data"));
        }
        let raster = &data[raster_start..];
        let wide = maxval > 255;
        let needed = count * if wide { 2 } else { 1 };
        if raster.len() < needed {
            return Err(format_err(format!(
                "raster truncated: need {needed} bytes, have {}",
                raster.len()
            )));
        }
        if wide {
            for pair in raster[..needed].chunks_exact(2) {
                samples.push(u16::from_be_bytes([pair[0], pair[1]]) as u32);
            }
        } else {
            samples.extend(raster[..needed].iter().map(|&b| b as u32));
        }
    } else {
        for _ in 0..count {
            samples.push(tokens.next_uint()?);
        }
    }
    let mut values = Vec::with_capacity(count);
    for s in samples {
        if s > maxval {
            return Err(format_err(format!("sample {s} exceeds maxval {maxval}")));
        }
        values.push(1.0 - 2.0 * (s as f64 / maxval as f64));
    }
    CellGrid::from_vec(width, height, values)
}

/// Reads a PGM file into a bipolar grid.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<CellGrid> {
    let data = fs::read(path)?;
    read_pgm_bytes(&data)
}

fn encode_sample(value: f64, maxval: u32) -> u32 {
    let clamped = value.clamp(-1.0, 1.0);
    let scaled = (1.0 - clamped) / 2.0 * maxval as f64;
    (scaled.round() as i64).clamp(0, maxval as i64) as u32
}

/// Serializes a grid as PGM bytes; cell values are clamped to [-1, 1] first.
pub fn write_pgm_bytes(grid: &CellGrid, format: PgmFormat, maxval: u32) -> Result<Vec<u8>> {
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(format!("maxval {maxval} outside 1..=65535")));
    }
    let mut out = Vec::new();
    match format {
        PgmFormat::Binary => {
            write!(out, "P5\n{} {}\n{}\n", grid.width(), grid.height(), maxval)?;
            if maxval > 255 {
                for &v in grid.as_slice() {
                    out.extend_from_slice(&(encode_sample(v, maxval) as u16).to_be_bytes());
                }
            } else {
                out.extend(grid.as_slice().iter().map(|&v| encode_sample(v, maxval) as u8));
            }
        }
        PgmFormat::Ascii => {
            write!(out, "P2\n{} {}\n{}\n", grid.width(), grid.height(), maxval)?;
            for y in 0..grid.height() {
                let row: Vec<String> = (0..grid.width())
                    .map(|x| encode_sample(grid.get(x, y), maxval).to_string())
                    .collect();
                writeln!(out, "{}", row.join(" "))?;
            }
        }
    }
    Ok(out)
}

/// Writes a grid as binary PGM with maxval 255.
pub fn write_pgm(path: impl AsRef<Path>, grid: &CellGrid) -> Result<()> {
    write_pgm_with(path, grid, PgmFormat::Binary, 255)
}

pub fn write_pgm_with(
    path: impl AsRef<Path>,
    grid: &CellGrid,
    format: PgmFormat,
    maxval: u32,
) -> Result<()> {
    let bytes = write_pgm_bytes(grid, format, maxval)?;
    fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_parse_with_comments() {
        let text = b"P2\n# test image\n3 2 # inline\n255\n0 128 255\n255 0 0\n";
        let g = read_pgm_bytes(text).unwrap();
        assert_eq!((g.width(), g.height()), (3, 2));
        assert_eq!(g.get(0, 0), 1.0);
        assert_eq!(g.get(2, 0), -1.0);
        assert_eq!(g.get(0, 1), -1.0);
        assert!((g.get(1, 0) - (1.0 - 256.0 / 255.0)).abs() < 1e-12);
    }

    #[test]
    fn binary_round_trip() {
        let g = CellGrid::from_vec(2, 2, vec![1.0, -1.0, 0.0, 0.5]).unwrap();
        let bytes = write_pgm_bytes(&g, PgmFormat::Binary, 255).unwrap();
        let once = read_pgm_bytes(&bytes).unwrap();
        // One write/read quantizes; a second pass must be lossless.
        let twice =
            read_pgm_bytes(&write_pgm_bytes(&once, PgmFormat::Binary, 255).unwrap()).unwrap();
        assert_eq!(once, twice);
        assert!(g.max_abs_diff(&once).unwrap() <= 1.0 / 255.0);
    }

    #[test]
    fn sixteen_bit_samples() {
        let g = CellGrid::from_vec(2, 1, vec![1.0, -1.0]).unwrap();
        let bytes = write_pgm_bytes(&g, PgmFormat::Binary, 65535).unwrap();
        let back = read_pgm_bytes(&bytes).unwrap();
        assert_eq!(back.as_slice(), &[1.0, -1.0]);
        let ascii = write_pgm_bytes(&g, PgmFormat::Ascii, 1000).unwrap();
        let back = read_pgm_bytes(&ascii).unwrap();
        assert_eq!(back.as_slice(), &[1.0, -1.0]);
    }

    #[test]
    fn ascii_and_binary_agree() {
        let g = CellGrid::from_vec(3, 1, vec![-0.25, 0.75, 0.1]).unwrap();
        let a = read_pgm_bytes(&write_pgm_bytes(&g, PgmFormat::Ascii, 255).unwrap()).unwrap();
        let b = read_pgm_bytes(&write_pgm_bytes(&g, PgmFormat::Binary, 255).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn malformed_inputs_rejected() {
        assert!(read_pgm_bytes(b"P3\n1 1\n255\n0").is_err());
        assert!(read_pgm_bytes(b"P2\n2 2\n255\n0 1 2").is_err());
        assert!(read_pgm_bytes(b"P5\n2 1\n255\n\x00").is_err());
        assert!(read_pgm_bytes(b"P2\n1 1\n0\n0").is_err());
        assert!(read_pgm_bytes(b"P2\n1 1\n255\n300").is_err());
        assert!(read_pgm_bytes(b"P2\n0 1\n255\n").is_err());
    }

    #[test]
    fn out_of_range_values_clamp_on_write() {
        let g = CellGrid::from_vec(2, 1, vec![3.0, -7.5]).unwrap();
        let back = read_pgm_bytes(&write_pgm_bytes(&g, PgmFormat::Binary, 255).unwrap()).unwrap();
        assert_eq!(back.as_slice(), &[1.0, -1.0]);
    }
}
