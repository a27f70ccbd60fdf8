//! Reconciliation code catalogs: loaded from a manifest of alist files or generated
//! from the built-in multi-edge profiles.

use std::path::Path;
use std::sync::Arc;

use cvqkd_core::keyrate::CodeDescriptor;
use cvqkd_core::ldpc::{generate_code, MetEnsemble, SparseParityCheck};
use rayon::prelude::*;

use crate::error::{LabError, LabResult};
use crate::io::alist::{load_alist, save_alist};
use crate::io::manifest::{load_manifest, save_manifest, ManifestEntry};

/// Construction seed of the built-in catalog.
pub const BUILTIN_SEED: u64 = 1;

/// Block length the built-in thresholds were measured at.
pub const BUILTIN_LOG2_N: u32 = 16;

/// Lowest SNR with frame-error rate at most 10% for each built-in profile at
/// `n = 2^16`, seed [`BUILTIN_SEED`], 200 decoder iterations.
pub const BUILTIN_THRESHOLDS: [(&str, f64); 4] = [
    ("irr-r0.50", 1.3),
    ("irr-r0.25", 0.515),
    ("met-r0.10", 0.1685),
    ("met-r0.05", 0.109),
];

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub descriptor: CodeDescriptor,
    pub code: Arc<SparseParityCheck>,
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    pub entries: Vec<CatalogEntry>,
}

impl Catalog {
    /// Wraps codes with their thresholds; the rate is the design rate.
    pub fn from_codes(codes: Vec<(String, SparseParityCheck, f64)>) -> LabResult<Self> {
        let entries = codes
            .into_iter()
            .map(|(code_id, code, snr_threshold)| {
                let descriptor = CodeDescriptor {
                    code_id,
                    rate: code.design_rate(),
                    snr_threshold,
                    block_len: code.n(),
                };
                descriptor.validate()?;
                Ok(CatalogEntry {
                    descriptor,
                    code: Arc::new(code),
                })
            })
            .collect::<Result<Vec<_>, cvqkd_core::Error>>()?;
        Ok(Self { entries })
    }

    /// Generates the four built-in profiles at `n = 2^log2_n`.
    ///
    /// The thresholds are those measured at [`BUILTIN_LOG2_N`]; other lengths reuse them.
    pub fn builtin(log2_n: u32, seed: u64) -> LabResult<Self> {
        let ensembles = [
            MetEnsemble::rate_0_5(),
            MetEnsemble::rate_0_25(),
            MetEnsemble::rate_0_1(),
            MetEnsemble::rate_0_05(),
        ];
        let codes = ensembles
            .par_iter()
            .map(|ens| {
                let snr = BUILTIN_THRESHOLDS
                    .iter()
                    .find(|t| t.0 == ens.name)
                    .map(|t| t.1)
                    .expect("threshold for every built-in profile");
                let code = generate_code(ens, 1 << log2_n, seed)?;
                Ok((format!("{}-n{}", ens.name, 1usize << log2_n), code, snr))
            })
            .collect::<Result<Vec<_>, cvqkd_core::Error>>()?;
        Self::from_codes(codes)
    }

    /// Loads every code named in a manifest and checks the declared rate against
    /// the design rate.
    pub fn load(manifest: &Path) -> LabResult<Self> {
        let listed = load_manifest(manifest)?;
        let entries = listed
            .par_iter()
            .map(|e| {
                let code = load_alist(&e.path)?;
                if (code.design_rate() - e.rate).abs() > 1e-3 {
                    return Err(LabError::format(
                        manifest,
                        format!("{}: declared rate {} but design rate is {}", e.code_id, e.rate, code.design_rate()),
                    ));
                }
                Ok(CatalogEntry {
                    descriptor: CodeDescriptor {
                        code_id: e.code_id.clone(),
                        rate: code.design_rate(),
                        snr_threshold: e.snr_threshold,
                        block_len: code.n(),
                    },
                    code: Arc::new(code),
                })
            })
            .collect::<LabResult<Vec<_>>>()?;
        Ok(Self { entries })
    }

    /// Writes `<code_id>.alist` files and `catalog.txt` into `dir`.
    pub fn export(&self, dir: &Path) -> LabResult<()> {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        let mut listed = Vec::new();
        for e in &self.entries {
            let file = format!("{}.alist", e.descriptor.code_id);
            save_alist(&e.code, &dir.join(&file))?;
            listed.push(ManifestEntry {
                code_id: e.descriptor.code_id.clone(),
                path: file.into(),
                rate: e.descriptor.rate,
                snr_threshold: e.descriptor.snr_threshold,
            });
        }
        save_manifest(&listed, &dir.join("catalog.txt"))
    }

    pub fn descriptors(&self) -> Vec<CodeDescriptor> {
        self.entries.iter().map(|e| e.descriptor.clone()).collect()
    }

    pub fn find(&self, code_id: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.descriptor.code_id == code_id)
    }
}
