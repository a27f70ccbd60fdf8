//! Toeplitz-matrix privacy amplification.
//!
//! Output bit `j` is `XOR_i input_i & d[j - i + n_in - 1]`, which is coefficient
//! `j + n_in - 1` of the GF(2) product `D(z)·X(z)`. The input is cut into chunks and
//! each chunk contributes one windowed middle product, so memory stays proportional
//! to the chunk size and disjoint output segments can be computed independently.

use alloc::vec;
use alloc::vec::Vec;
use libm::floor;
use rand_core::RngCore;

use crate::gf2::{extract_bits, mask_tail, pack_bits, poly_mul, unpack_bits};
use crate::rng::strong_stream;
use crate::{Error, Result};

/// Public seed of one Toeplitz matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ToeplitzSeed {
    pub prng_seed: u64,
    pub n_in: usize,
    pub l_out: usize,
}

impl ToeplitzSeed {
    pub fn new(prng_seed: u64, n_in: usize, l_out: usize) -> Result<Self> {
        if l_out > n_in {
            return Err(Error::Domain("output longer than input"));
        }
        Ok(Self {
            prng_seed,
            n_in,
            l_out,
        })
    }

    /// Number of defining bits, `n_in + l_out - 1` (zero for an empty matrix).
    pub fn defining_len(&self) -> usize {
        if self.l_out == 0 {
            0
        } else {
            self.n_in + self.l_out - 1
        }
    }

    /// Defining bits drawn from ChaCha20 keyed by `prng_seed`, packed LSB first.
    pub fn defining_bits(&self) -> Vec<u64> {
        let len = self.defining_len();
        let mut rng = strong_stream(self.prng_seed, 0);
        let mut w: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect();
        mask_tail(&mut w, len);
        w
    }
}

/// Secret key length left after subtracting reconciliation leakage and the
/// adversary's worst-case information plus the finite-size penalty, clamped at zero.
pub fn compute_final_length(n_corrected: u64, leak_ec: u64, chi_be_worst: f64, delta: f64, n_symbols: u64) -> u64 {
    let l = n_corrected as f64 - leak_ec as f64 - n_symbols as f64 * (chi_be_worst + delta);
    if l > 0.0 {
        floor(l) as u64
    } else {
        0
    }
}

/// Chunk length in bits for an output segment of `seg_len` bits.
fn chunk_len(n_in: usize, seg_len: usize) -> usize {
    (seg_len.next_power_of_two() / 2).clamp(1 << 12, 1 << 20).min(n_in.max(1))
}

/// Output bits `[start, start + len)` of the hash of the packed `input`, given the
/// packed defining bits. Segments are independent, which allows parallel hashing.
pub fn toeplitz_segment(input: &[u64], defining: &[u64], n_in: usize, start: usize, len: usize) -> Vec<u64> {
    let mut out = vec![0u64; len.div_ceil(64)];
    if len == 0 || n_in == 0 {
        return out;
    }
    let l_chunk = chunk_len(n_in, len);
    let mut a = 0;
    while a < n_in {
        let l = l_chunk.min(n_in - a);
        let x = extract_bits(input, a, l);
        let w = extract_bits(defining, n_in - a - l + start, l + len - 1);
        let prod = poly_mul(&w, &x);
        let part = extract_bits(&prod, l - 1, len);
        for (o, p) in out.iter_mut().zip(&part) {
            *o ^= p;
        }
        a += l;
    }
    out
}

/// Hash of a packed input of `seed.n_in` bits; the result holds `seed.l_out` bits.
pub fn toeplitz_hash_packed(input: &[u64], seed: &ToeplitzSeed) -> Result<Vec<u64>> {
    if input.len() != seed.n_in.div_ceil(64) {
        return Err(Error::LengthMismatch {
            expected: seed.n_in.div_ceil(64),
            got: input.len(),
        });
    }
    let mut x = input.to_vec();
    mask_tail(&mut x, seed.n_in);
    Ok(toeplitz_segment(&x, &seed.defining_bits(), seed.n_in, 0, seed.l_out))
}

/// Hash of a 0/1 bit string.
pub fn toeplitz_hash(bits: &[u8], seed: &ToeplitzSeed) -> Result<Vec<u8>> {
    if bits.len() != seed.n_in {
        return Err(Error::LengthMismatch {
            expected: seed.n_in,
            got: bits.len(),
        });
    }
    let out = toeplitz_hash_packed(&pack_bits(bits), seed)?;
    Ok(unpack_bits(&out, seed.l_out))
}
