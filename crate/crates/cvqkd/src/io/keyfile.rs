//! Final keys: raw bytes plus a `key = value` text sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::create;
use crate::error::{LabError, LabResult};

/// Metadata written next to a key file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeySidecar {
    pub session_id: String,
    pub l_out: u64,
    pub seed: u64,
    pub n_corrected: u64,
    pub leak_ec: u64,
    pub frames_used: u64,
    pub frames_discarded: u64,
}

impl KeySidecar {
    pub fn to_text(&self) -> String {
        format!(
            "session_id = {}\nl_out = {}\nseed = {}\nn_corrected = {}\nleak_ec = {}\nframes_used = {}\nframes_discarded = {}\n",
            self.session_id, self.l_out, self.seed, self.n_corrected, self.leak_ec, self.frames_used, self.frames_discarded
        )
    }
}

pub fn sidecar_path(key_path: &Path) -> PathBuf {
    let mut p = key_path.as_os_str().to_owned();
    p.push(".txt");
    PathBuf::from(p)
}

/// Writes `key` (bits packed LSB first) and its sidecar.
pub fn save_key(key: &[u8], sidecar: &KeySidecar, path: &Path) -> LabResult<()> {
    let mut w = create(path)?;
    w.write_all(key).and_then(|_| w.flush()).map_err(|e| LabError::io(path, e))?;
    let side = sidecar_path(path);
    let mut w = create(&side)?;
    w.write_all(sidecar.to_text().as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| LabError::io(&side, e))
}
