//! Sum-product decoding in single precision.
//!
//! Each flooding iteration runs as a few flat passes over the edge array (gather,
//! `tanh`, leave-one-out products, `atanh`, scatter) so the transcendental passes
//! are branch-free loops the compiler can vectorize.

use alloc::vec::Vec;

use super::SparseParityCheck;
use crate::{Error, Result};

/// Magnitude bound applied to channel and message LLRs.
pub const LLR_CLAMP: f64 = 50.0;

/// `(e^x - 1, e^x)` for `|x| <= 80`, relative error near single-precision rounding.
#[inline(always)]
fn exp_m1_f32(x: f32) -> (f32, f32) {
    const SHIFTER: f32 = 12_582_912.0;
    const LN2_HI: f32 = 0.693_145_75;
    const LN2_LO: f32 = 1.428_606_8e-6;
    // Adding the shifter rounds to an integer held in the low mantissa bits.
    let y = x * core::f32::consts::LOG2_E + SHIFTER;
    let kf = y - SHIFTER;
    let ki = y.to_bits().wrapping_sub(SHIFTER.to_bits());
    let r = x - kf * LN2_HI - kf * LN2_LO;
    // e^r - 1 = r (1 + r/2 + r^2/6 + ...)
    let mut q = 1.0 / 40_320.0;
    for c in [1.0 / 5_040.0, 1.0 / 720.0, 1.0 / 120.0, 1.0 / 24.0, 1.0 / 6.0, 0.5, 1.0] {
        q = q * r + c;
    }
    let em1_r = r * q;
    let scale = f32::from_bits(ki.wrapping_add(127) << 23);
    (scale * em1_r + (scale - 1.0), scale * (em1_r + 1.0))
}

/// `ln(1 + u)` for `u > -1` and finite.
#[inline(always)]
fn ln_1p_f32(u: f32) -> f32 {
    let y = 1.0 + u;
    let bits = y.to_bits();
    let mut e = ((bits >> 23) & 0xff) as i32 - 127;
    let mut m = f32::from_bits((bits & 0x007f_ffff) | 0x3f80_0000);
    let big = m > core::f32::consts::SQRT_2;
    m = if big { 0.5 * m } else { m };
    e += big as i32;
    let s = (m - 1.0) / (m + 1.0);
    let s2 = s * s;
    let mut p = 1.0 / 11.0;
    for c in [1.0 / 9.0, 1.0 / 7.0, 1.0 / 5.0, 1.0 / 3.0, 1.0] {
        p = p * s2 + c;
    }
    // correct for the rounding of 1 + u
    let corr = (u - (y - 1.0)) / y;
    e as f32 * core::f32::consts::LN_2 + 2.0 * s * p + corr
}

/// `tanh(x / 2)` for `|x| <= 80`.
#[inline(always)]
fn tanh_half(x: f32) -> f32 {
    let (em1, _) = exp_m1_f32(x);
    em1 / (em1 + 2.0)
}

/// `2 atanh(p)` for `|p| <= 1`, clamped to `±clamp`.
#[inline(always)]
fn two_atanh(p: f32, clamp: f32) -> f32 {
    let a = p.abs();
    let inner = a < 1.0;
    let safe = if inner { a } else { 0.5 };
    let v = ln_1p_f32(2.0 * safe / (1.0 - safe));
    let mag = if inner { v.min(clamp) } else { clamp };
    f32::copysign(mag, p)
}

const STACK_DEGREE: usize = 32;

/// Replaces each entry by `sign` times the product of all the others.
#[inline(always)]
fn leave_one_out(t: &mut [f32], sign: f32, pre: &mut [f32]) {
    let mut acc = 1.0f32;
    for (p, &x) in pre.iter_mut().zip(t.iter()) {
        *p = acc;
        acc *= x;
    }
    let mut suffix = sign;
    for (x, &p) in t.iter_mut().zip(pre.iter()).rev() {
        let own = *x;
        *x = p * suffix;
        suffix *= own;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpConfig {
    pub max_iters: usize,
    pub llr_clamp: f64,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            llr_clamp: LLR_CLAMP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    /// Hard decisions over all `n` positions (shortened positions decode to 0).
    pub bits: Vec<u8>,
    /// The hard decision satisfied the syndrome before `max_iters` ran out.
    pub converged: bool,
    pub iterations: usize,
    pub syndrome_ok: bool,
}

/// Sum-product decoder with a flooding schedule. Buffers are reused across calls.
#[derive(Debug, Default, Clone)]
pub struct BpDecoder {
    ch: Vec<f32>,
    total: Vec<f32>,
    c2v: Vec<f32>,
    buf: Vec<f32>,
    prefix: Vec<f32>,
    hard: Vec<u8>,
}

impl BpDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Decodes toward the word whose syndrome is `syndrome`. Positive LLRs favour 0.
    pub fn decode(
        &mut self,
        code: &SparseParityCheck,
        llrs: &[f64],
        syndrome: &[u8],
        cfg: &BpConfig,
    ) -> Result<DecodeResult> {
        if llrs.len() != code.n() {
            return Err(Error::LengthMismatch {
                expected: code.n(),
                got: llrs.len(),
            });
        }
        if syndrome.len() != code.m_rows() {
            return Err(Error::LengthMismatch {
                expected: code.m_rows(),
                got: syndrome.len(),
            });
        }
        let clamp = cfg.llr_clamp as f32;
        self.ch.clear();
        self.ch.extend(llrs.iter().map(|&l| (l as f32).clamp(-clamp, clamp)));
        self.total.clear();
        self.total.extend_from_slice(&self.ch);
        self.c2v.clear();
        self.c2v.resize(code.edge_count(), 0.0);
        self.buf.clear();
        self.buf.resize(code.edge_count(), 0.0);
        self.hard.clear();
        self.hard.extend(self.ch.iter().map(|&l| (l < 0.0) as u8));
        if syndrome_matches(code, &self.hard, syndrome) {
            return Ok(self.result(true, 0));
        }

        let edge_vars = code.edge_vars();
        let row_ptr = code.row_ptr();
        for it in 1..=cfg.max_iters {
            // Variable-to-check messages from the previous totals, mapped to tanh(m/2).
            for ((b, &c), &v) in self.buf.iter_mut().zip(&self.c2v).zip(edge_vars) {
                *b = (self.total[v as usize] - c).clamp(-clamp, clamp);
            }
            for b in self.buf.iter_mut() {
                *b = tanh_half(*b);
            }
            // Leave-one-out products with the syndrome sign folded in.
            for c in 0..code.m_rows() {
                let (lo, hi) = (row_ptr[c] as usize, row_ptr[c + 1] as usize);
                let sign = if syndrome[c] & 1 == 1 { -1.0f32 } else { 1.0 };
                let t = &mut self.buf[lo..hi];
                if t.len() <= STACK_DEGREE {
                    let mut pre = [0.0f32; STACK_DEGREE];
                    leave_one_out(t, sign, &mut pre[..t.len()]);
                } else {
                    self.prefix.resize(t.len(), 0.0);
                    leave_one_out(t, sign, &mut self.prefix);
                }
            }
            for (c, &p) in self.c2v.iter_mut().zip(&self.buf) {
                *c = two_atanh(p, clamp);
            }
            self.total.copy_from_slice(&self.ch);
            for (&c, &v) in self.c2v.iter().zip(edge_vars) {
                self.total[v as usize] += c;
            }
            for (h, &t) in self.hard.iter_mut().zip(&self.total) {
                *h = (t < 0.0) as u8;
            }
            if syndrome_matches(code, &self.hard, syndrome) {
                return Ok(self.result(true, it));
            }
        }
        Ok(self.result(false, cfg.max_iters))
    }

    fn result(&self, ok: bool, iterations: usize) -> DecodeResult {
        DecodeResult {
            bits: self.hard.clone(),
            converged: ok,
            iterations,
            syndrome_ok: ok,
        }
    }
}

fn syndrome_matches(code: &SparseParityCheck, bits: &[u8], syndrome: &[u8]) -> bool {
    (0..code.m_rows()).all(|c| code.row(c).iter().fold(0u8, |a, &v| a ^ bits[v as usize]) == syndrome[c] & 1)
}

/// One-shot decode with a fresh [`BpDecoder`].
pub fn bp_decode(code: &SparseParityCheck, llrs: &[f64], syndrome: &[u8], cfg: &BpConfig) -> Result<DecodeResult> {
    BpDecoder::new().decode(code, llrs, syndrome, cfg)
}

#[cfg(test)]
mod tests {
    use super::super::compute_syndrome;
    use super::super::tests::hamming74;
    use super::*;

    #[test]
    fn fast_math_accuracy() {
        let mut x = -60.0f64;
        while x <= 60.0 {
            let (a, b) = (tanh_half(x as f32) as f64, libm::tanh(0.5 * x));
            assert!((a - b).abs() <= 2e-7 * b.abs() + 1e-30, "tanh {x}: {a} {b}");
            x += 0.0137;
        }
        for &x in &[1e-30, -1e-12, 3e-6, -0.01] {
            let (a, b) = (tanh_half(x as f32) as f64, libm::tanh(0.5 * x));
            assert!((a - b).abs() <= 2e-7 * b.abs(), "tanh {x}: {a} {b}");
        }
        let mut p = -0.999_99f64;
        while p < 1.0 {
            let (a, b) = (two_atanh(p as f32, 50.0) as f64, 2.0 * libm::atanh((p as f32) as f64));
            assert!((a - b).abs() <= 3e-7 * b.abs().max(1e-3), "atanh {p}: {a} {b}");
            p += 0.000_731;
        }
        for &p in &[1e-30f32, -1e-9, 2e-4] {
            let b = 2.0 * libm::atanh(p as f64);
            assert!((two_atanh(p, 50.0) as f64 - b).abs() <= 2e-7 * b.abs());
        }
        assert_eq!(two_atanh(1.0, 50.0), 50.0);
        assert_eq!(two_atanh(-1.0, 50.0), -50.0);
        assert_eq!(two_atanh(0.0, 50.0), 0.0);
    }

    #[test]
    fn noiseless_decode_is_immediate() {
        let h = hamming74();
        let u = [1u8, 0, 1, 1, 0, 0, 1];
        let s = compute_syndrome(&u, &h).unwrap();
        let llr: Vec<f64> = u.iter().map(|&b| if b == 0 { 50.0 } else { -50.0 }).collect();
        let r = bp_decode(&h, &llr, &s, &BpConfig::default()).unwrap();
        assert!(r.converged && r.syndrome_ok && r.iterations <= 2);
        assert_eq!(r.bits, u);
    }

    #[test]
    fn corrects_single_weak_error() {
        let h = hamming74();
        let u = [0u8, 1, 1, 0, 1, 0, 0];
        let s = compute_syndrome(&u, &h).unwrap();
        let mut llr: Vec<f64> = u.iter().map(|&b| if b == 0 { 4.0 } else { -4.0 }).collect();
        llr[2] = 0.5;
        let r = bp_decode(&h, &llr, &s, &BpConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.bits, u);
    }

    #[test]
    fn erasures_and_known_positions() {
        let h = hamming74();
        let u = [1u8, 1, 0, 0, 1, 0, 0];
        let s = compute_syndrome(&u, &h).unwrap();
        let mut llr: Vec<f64> = u.iter().map(|&b| if b == 0 { 3.0 } else { -3.0 }).collect();
        llr[0] = 0.0;
        llr[3] = f64::INFINITY;
        let r = bp_decode(&h, &llr, &s, &BpConfig::default()).unwrap();
        assert_eq!(r.bits, u);
        assert!(bp_decode(&h, &llr[..6], &s, &BpConfig::default()).is_err());
    }
}
