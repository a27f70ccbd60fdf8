//! Decoder input batches as flat little-endian f32 arrays.

use std::io::{Read, Write};
use std::path::Path;

use super::{create, open};
use crate::error::{LabError, LabResult};

pub fn write_llrs<W: Write>(llrs: &[f64], mut w: W) -> std::io::Result<()> {
    for &l in llrs {
        w.write_all(&(l as f32).to_le_bytes())?;
    }
    w.flush()
}

pub fn read_llrs<R: Read>(mut r: R, path: &Path) -> LabResult<Vec<f64>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| LabError::io(path, e))?;
    if buf.len() % 4 != 0 {
        return Err(LabError::format(path, "length is not a multiple of 4 bytes"));
    }
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect())
}

pub fn save_llrs(llrs: &[f64], path: &Path) -> LabResult<()> {
    write_llrs(llrs, create(path)?).map_err(|e| LabError::io(path, e))
}

pub fn load_llrs(path: &Path) -> LabResult<Vec<f64>> {
    read_llrs(open(path)?, path)
}
