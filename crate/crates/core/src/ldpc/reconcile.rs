use alloc::vec::Vec;
use libm::{log2, sqrt};
use rand_core::RngCore;

use super::{compute_syndrome, BpConfig, BpDecoder, RateAdaptation, SparseParityCheck};
use crate::gf2::poly_hash64;
use crate::mdr::{encode_blocks, llrs_blocks};
use crate::rng::{standard_normal, stream};
use crate::{Error, Result};

/// Length of the verification hash exchanged per block.
pub const HASH_BITS: u64 = 64;

/// Bit budget of one reconciled block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockAccounting {
    pub n: u64,
    pub m_rows: u64,
    pub p_count: u64,
    pub s_count: u64,
}

impl BlockAccounting {
    pub fn new(code: &SparseParityCheck, adapt: &RateAdaptation) -> Self {
        Self {
            n: code.n() as u64,
            m_rows: code.m_rows() as u64,
            p_count: adapt.p_count() as u64,
            s_count: adapt.s_count() as u64,
        }
    }

    /// Symbols consumed from the quantum channel.
    pub fn channel_symbols(&self) -> u64 {
        self.n - self.p_count - self.s_count
    }

    /// Random bits Bob contributes: channel plus punctured positions.
    pub fn key_material(&self) -> u64 {
        self.n - self.s_count
    }

    /// Public disclosure: the syndrome plus the verification hash.
    pub fn leak(&self) -> u64 {
        self.m_rows + HASH_BITS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Discard,
}

/// Compares polynomial hashes of the two strings under the public `key`.
pub fn verify_blocks(alice_bits: &[u8], bob_bits: &[u8], key: u64) -> Result<Verdict> {
    if alice_bits.len() != bob_bits.len() {
        return Err(Error::LengthMismatch {
            expected: bob_bits.len(),
            got: alice_bits.len(),
        });
    }
    Ok(if poly_hash64(key, alice_bits) == poly_hash64(key, bob_bits) {
        Verdict::Pass
    } else {
        Verdict::Discard
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub success: bool,
    pub converged: bool,
    pub iterations: usize,
    pub bit_errors: usize,
}

/// One MDR + BP frame over a real AWGN channel at signal-to-noise ratio `snr`.
pub fn efficiency_trial(
    code: &SparseParityCheck,
    adapt: &RateAdaptation,
    snr: f64,
    cfg: &BpConfig,
    decoder: &mut BpDecoder,
    seed: u64,
    trial: u64,
) -> Result<TrialOutcome> {
    if adapt.n() != code.n() {
        return Err(Error::LengthMismatch {
            expected: code.n(),
            got: adapt.n(),
        });
    }
    let n_ch = adapt.channel_count();
    if n_ch % 8 != 0 {
        return Err(Error::Domain("channel positions must fill whole 8-blocks"));
    }
    let mut rng = stream(seed, trial);
    let sd = sqrt(snr);
    let x: Vec<f64> = (0..n_ch).map(|_| sd * standard_normal(&mut rng)).collect();
    let y: Vec<f64> = x.iter().map(|xi| xi + standard_normal(&mut rng)).collect();
    let u: Vec<u8> = (0..code.n())
        .map(|i| if adapt.is_shortened(i) { 0 } else { (rng.next_u32() & 1) as u8 })
        .collect();
    let u_ch: Vec<u8> = adapt.channel_positions().map(|i| u[i]).collect();
    let msgs = encode_blocks(&y, &u_ch)?;
    let syndrome = compute_syndrome(&u, code)?;
    let llr = adapt.expand_llrs(&llrs_blocks(&x, &msgs, 1.0, 1.0)?)?;
    let r = decoder.decode(code, &llr, &syndrome, cfg)?;
    let bit_errors = adapt.key_positions().filter(|&i| r.bits[i] != u[i]).count();
    Ok(TrialOutcome {
        success: r.converged && bit_errors == 0,
        converged: r.converged,
        iterations: r.iterations,
        bit_errors,
    })
}

/// Operating point of a code at one SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyReport {
    pub snr: f64,
    pub r_eff: f64,
    pub capacity: f64,
    pub beta: f64,
    pub trials: usize,
    pub frame_errors: usize,
    pub fer: f64,
    pub mean_iterations: f64,
}

impl EfficiencyReport {
    pub fn from_outcomes(r_eff: f64, snr: f64, outcomes: &[TrialOutcome]) -> Self {
        let capacity = 0.5 * log2(1.0 + snr);
        let frame_errors = outcomes.iter().filter(|o| !o.success).count();
        let trials = outcomes.len();
        Self {
            snr,
            r_eff,
            capacity,
            beta: r_eff / capacity,
            trials,
            frame_errors,
            fer: frame_errors as f64 / trials.max(1) as f64,
            mean_iterations: outcomes.iter().map(|o| o.iterations as f64).sum::<f64>() / trials.max(1) as f64,
        }
    }
}

/// Runs `trials` frames and reports `beta = R_eff / C(snr)` with the measured FER.
pub fn measure_efficiency(
    code: &SparseParityCheck,
    adapt: &RateAdaptation,
    snr: f64,
    trials: usize,
    cfg: &BpConfig,
    seed: u64,
) -> Result<EfficiencyReport> {
    if trials < 100 {
        return Err(Error::InsufficientData {
            needed: 100,
            got: trials,
        });
    }
    let mut dec = BpDecoder::new();
    let outcomes = (0..trials as u64)
        .map(|t| efficiency_trial(code, adapt, snr, cfg, &mut dec, seed, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(EfficiencyReport::from_outcomes(adapt.effective_rate(code), snr, &outcomes))
}
