//! File formats: alist codes, frame records, LLR batches, catalog manifests, CSV
//! reports and final keys.

pub mod alist;
pub mod csv;
pub mod frames;
pub mod keyfile;
pub mod llr;
pub mod manifest;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{LabError, LabResult};

pub(crate) fn open(path: &Path) -> LabResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| LabError::io(path, e))
}

pub(crate) fn create(path: &Path) -> LabResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| LabError::io(path, e))
}
