//! Minimal NPY (version 1.0) tensor writer for the dataset preview export.

use crate::error::Result;
use std::io::Write;
use std::path::Path;

fn header_for(descr: &str, shape: &[usize]) -> Vec<u8> {
    let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
    let shape_str = match dims.len() {
        1 => format!("({},)", dims[0]),
        _ => format!("({})", dims.join(", ")),
    };
    let mut dict = format!(
        "{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape_str}, }}"
    );
    // Pad so magic + version + length + header is a multiple of 64.
    let unpadded = 10 + dict.len() + 1;
    let pad = (64 - unpadded % 64) % 64;
    dict.push_str(&" ".repeat(pad));
    dict.push('\n');

    let mut out = Vec::with_capacity(10 + dict.len());
    out.extend_from_slice(b"\x93NUMPY\x01\x00");
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out
}

/// Write an f64 tensor as little-endian `<f8`.
pub fn write_f64(path: &Path, shape: &[usize], data: &[f64]) -> Result<()> {
    debug_assert_eq!(shape.iter().product::<usize>(), data.len());
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(&header_for("<f8", shape))?;
    for v in data {
        file.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Write an i64 tensor as little-endian `<i8`.
pub fn write_i64(path: &Path, shape: &[usize], data: &[i64]) -> Result<()> {
    debug_assert_eq!(shape.iter().product::<usize>(), data.len());
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(&header_for("<i8", shape))?;
    for v in data {
        file.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
