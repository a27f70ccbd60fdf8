use alloc::vec::Vec;
use libm::round;
use rand_core::RngCore;

use super::SparseParityCheck;
use crate::rng::stream;
use crate::{Error, Result};

/// Largest share of a block that may be punctured.
pub const MAX_PUNCTURE_FRACTION: f64 = 0.10;

/// Punctured (unknown to Alice) and shortened (known zero) positions of one code.
///
/// With `p + s` held at a constant `c`, the effective rate
/// `(k - s) / (n - p - s)` is linear in `p` and the number of channel positions
/// `n - c` does not depend on the setting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateAdaptation {
    n: usize,
    constant: usize,
    punctured: Vec<u32>,
    shortened: Vec<u32>,
    /// Per-position class: 0 channel, 1 punctured, 2 shortened.
    class: Vec<u8>,
}

const CHANNEL: u8 = 0;
const PUNCTURED: u8 = 1;
const SHORTENED: u8 = 2;

impl RateAdaptation {
    /// Chooses `p_count + s_count` distinct positions uniformly with a seeded shuffle.
    pub fn new(n: usize, p_count: usize, s_count: usize, seed: u64) -> Result<Self> {
        let cap = (MAX_PUNCTURE_FRACTION * n as f64) as usize;
        if p_count > cap {
            return Err(Error::Domain("puncturing exceeds 10% of the block"));
        }
        let c = p_count + s_count;
        if c >= n {
            return Err(Error::Domain("no channel positions left"));
        }
        let mut idx: Vec<u32> = (0..n as u32).collect();
        let mut rng = stream(seed, 0x5eed_0000);
        for i in 0..c {
            let j = i + (rng.next_u64() % (n - i) as u64) as usize;
            idx.swap(i, j);
        }
        let mut punctured = idx[..p_count].to_vec();
        let mut shortened = idx[p_count..c].to_vec();
        punctured.sort_unstable();
        shortened.sort_unstable();
        let mut class = alloc::vec![CHANNEL; n];
        for &p in &punctured {
            class[p as usize] = PUNCTURED;
        }
        for &s in &shortened {
            class[s as usize] = SHORTENED;
        }
        Ok(Self {
            n,
            constant: c,
            punctured,
            shortened,
            class,
        })
    }

    /// No puncturing or shortening.
    pub fn none(n: usize) -> Self {
        Self {
            n,
            constant: 0,
            punctured: Vec::new(),
            shortened: Vec::new(),
            class: alloc::vec![CHANNEL; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn constant(&self) -> usize {
        self.constant
    }

    pub fn punctured(&self) -> &[u32] {
        &self.punctured
    }

    pub fn shortened(&self) -> &[u32] {
        &self.shortened
    }

    pub fn p_count(&self) -> usize {
        self.punctured.len()
    }

    pub fn s_count(&self) -> usize {
        self.shortened.len()
    }

    /// Positions carried by MDR symbols, `n - p - s` of them.
    pub fn channel_count(&self) -> usize {
        self.n - self.constant
    }

    pub fn is_shortened(&self, i: usize) -> bool {
        self.class[i] == SHORTENED
    }

    /// `(k - s) / (n - p - s)`.
    pub fn effective_rate(&self, code: &SparseParityCheck) -> f64 {
        (code.k() as f64 - self.s_count() as f64) / self.channel_count() as f64
    }

    /// Indices of the channel positions in increasing order.
    pub fn channel_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.class.iter().enumerate().filter(|c| *c.1 == CHANNEL).map(|c| c.0)
    }

    /// Indices of the positions that carry key material (everything not shortened).
    pub fn key_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.class.iter().enumerate().filter(|c| *c.1 != SHORTENED).map(|c| c.0)
    }

    /// Spreads `channel_count()` channel LLRs over the block: punctured positions get
    /// 0 and shortened positions `+inf`.
    pub fn expand_llrs(&self, channel: &[f64]) -> Result<Vec<f64>> {
        if channel.len() != self.channel_count() {
            return Err(Error::LengthMismatch {
                expected: self.channel_count(),
                got: channel.len(),
            });
        }
        let mut it = channel.iter();
        Ok(self
            .class
            .iter()
            .map(|&c| match c {
                CHANNEL => *it.next().expect("channel count checked"),
                PUNCTURED => 0.0,
                _ => f64::INFINITY,
            })
            .collect())
    }

    /// Bits at the key positions.
    pub fn key_bits(&self, bits: &[u8]) -> Vec<u8> {
        self.key_positions().map(|i| bits[i]).collect()
    }
}

/// Splits `constant` into puncturing and shortening so the effective rate is as close
/// to `target_rate` as integer counts allow.
pub fn adapt_rate(code: &SparseParityCheck, target_rate: f64, constant: usize, seed: u64) -> Result<RateAdaptation> {
    let n = code.n();
    let k = code.k() as f64;
    if constant >= n {
        return Err(Error::Domain("constant must be smaller than the block"));
    }
    let denom = (n - constant) as f64;
    let p_max = constant.min((MAX_PUNCTURE_FRACTION * n as f64) as usize);
    let min = (k - constant as f64) / denom;
    let max = (k - constant as f64 + p_max as f64) / denom;
    let p = round(target_rate * denom - k + constant as f64);
    if !(p >= -0.5 && p <= p_max as f64 + 0.5) || !target_rate.is_finite() {
        return Err(Error::RateOutOfRange {
            requested: target_rate,
            min,
            max,
        });
    }
    let p = (p.max(0.0) as usize).min(p_max);
    RateAdaptation::new(n, p, constant - p, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dummy(n: usize, m: usize) -> SparseParityCheck {
        let edges: Vec<(u32, u32)> = (0..n as u32).map(|v| (v % m as u32, v)).collect();
        SparseParityCheck::from_edges(n, m, &edges).unwrap()
    }

    #[test]
    fn rate_examples() {
        let code = dummy(1 << 16, 1 << 15);
        let none = adapt_rate(&code, 0.5, 0, 1).unwrap();
        assert_eq!(none.effective_rate(&code), 0.5);
        let a = RateAdaptation::new(1 << 16, 0, 6554, 1).unwrap();
        assert!((a.effective_rate(&code) - 0.4445).abs() < 1e-4);
        assert_eq!(a.channel_count(), 58982);
        assert!(RateAdaptation::new(1 << 16, 6553, 0, 1).is_ok());
        assert!(RateAdaptation::new(1 << 16, 6554, 0, 1).is_err());
    }

    #[test]
    fn adapt_hits_target_and_reports_range() {
        let code = dummy(1 << 14, 1 << 13);
        let c = 1640;
        for &r in &[0.45, 0.5, 0.53] {
            let a = adapt_rate(&code, r, c, 3).unwrap();
            assert_eq!(a.p_count() + a.s_count(), c);
            assert!((a.effective_rate(&code) - r).abs() < 1.0 / a.channel_count() as f64);
        }
        match adapt_rate(&code, 0.9, c, 3) {
            Err(Error::RateOutOfRange { min, max, .. }) => assert!(min < 0.5 && max > 0.5 && max < 0.9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn positions_are_disjoint_and_llrs_expand() {
        let a = RateAdaptation::new(100, 7, 5, 9).unwrap();
        assert!(a.punctured().iter().all(|p| !a.shortened().contains(p)));
        let llr = a.expand_llrs(&alloc::vec![1.0; 88]).unwrap();
        assert_eq!(llr.iter().filter(|l| **l == 0.0).count(), 7);
        assert_eq!(llr.iter().filter(|l| l.is_infinite()).count(), 5);
        assert_eq!(a.key_positions().count(), 95);
        assert_eq!(a, RateAdaptation::new(100, 7, 5, 9).unwrap());
    }
}
