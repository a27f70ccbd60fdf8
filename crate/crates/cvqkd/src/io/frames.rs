//! Flat binary frame files: a 16-byte header (`CVQKDFRM`, u32 version, u32
//! reserved) then 34-byte little-endian records
//! `{u64 index, f64 alice_q, f64 alice_p, u8 phi, f64 bob_value, u8 role}`.

use std::io::{Read, Write};
use std::path::Path;

use cvqkd_core::model::Quadrature;
use cvqkd_core::simulator::{PulseFrame, Role};

use super::{create, open};
use crate::error::{LabError, LabResult};

pub const MAGIC: &[u8; 8] = b"CVQKDFRM";
pub const VERSION: u32 = 1;
pub const RECORD_LEN: usize = 34;

pub fn encode_frame(f: &PulseFrame) -> [u8; RECORD_LEN] {
    let mut b = [0u8; RECORD_LEN];
    b[0..8].copy_from_slice(&f.index.to_le_bytes());
    b[8..16].copy_from_slice(&f.alice_q.to_le_bytes());
    b[16..24].copy_from_slice(&f.alice_p.to_le_bytes());
    b[24] = match f.phi {
        Quadrature::Q => 0,
        Quadrature::P => 1,
    };
    b[25..33].copy_from_slice(&f.bob_value.to_le_bytes());
    b[33] = f.role.to_u8();
    b
}

pub fn decode_frame(b: &[u8; RECORD_LEN]) -> Result<PulseFrame, &'static str> {
    let f64_at = |i: usize| f64::from_le_bytes(b[i..i + 8].try_into().expect("8 bytes"));
    let phi = match b[24] {
        0 => Quadrature::Q,
        1 => Quadrature::P,
        _ => return Err("invalid quadrature byte"),
    };
    Ok(PulseFrame {
        index: u64::from_le_bytes(b[0..8].try_into().expect("8 bytes")),
        alice_q: f64_at(8),
        alice_p: f64_at(16),
        phi,
        bob_value: f64_at(25),
        role: Role::from_u8(b[33]).ok_or("invalid role byte")?,
    })
}

pub fn write_frames<W: Write>(frames: &[PulseFrame], mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for f in frames {
        w.write_all(&encode_frame(f))?;
    }
    w.flush()
}

pub fn read_frames<R: Read>(mut r: R, path: &Path) -> LabResult<Vec<PulseFrame>> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|_| LabError::format(path, "truncated header"))?;
    if &header[..8] != MAGIC {
        return Err(LabError::format(path, "bad magic"));
    }
    let version = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(LabError::format(path, format!("unsupported version {version}")));
    }
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(|e| LabError::io(path, e))?;
    if body.len() % RECORD_LEN != 0 {
        return Err(LabError::format(path, "truncated record"));
    }
    body.chunks_exact(RECORD_LEN)
        .enumerate()
        .map(|(i, rec)| {
            decode_frame(rec.try_into().expect("record length"))
                .map_err(|msg| LabError::format(path, format!("record {i}: {msg}")))
        })
        .collect()
}

pub fn save_frames(frames: &[PulseFrame], path: &Path) -> LabResult<()> {
    write_frames(frames, create(path)?).map_err(|e| LabError::io(path, e))
}

pub fn load_frames(path: &Path) -> LabResult<Vec<PulseFrame>> {
    read_frames(open(path)?, path)
}
