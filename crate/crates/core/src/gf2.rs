//! Polynomial arithmetic over GF(2) on packed 64-bit words (bit `i` of word `w` is the
//! coefficient of `z^(64w + i)`), and a universal polynomial hash over GF(2^64).
//!
//! With the `std` feature on x86-64 the carry-less base case uses PCLMULQDQ when the
//! CPU has it; otherwise a 4-bit windowed software multiply is used. Both give
//! identical results.

use alloc::vec;
use alloc::vec::Vec;

/// Software carry-less product of two 64-bit polynomials as `(low, high)` words.
pub fn clmul_soft(a: u64, b: u64) -> (u64, u64) {
    let mut tab = [0u128; 16];
    tab[1] = a as u128;
    for k in 2..16 {
        tab[k] = if k % 2 == 0 { tab[k / 2] << 1 } else { tab[k - 1] ^ tab[1] };
    }
    let mut r = 0u128;
    for i in (0..16).rev() {
        r = (r << 4) ^ tab[((b >> (4 * i)) & 15) as usize];
    }
    (r as u64, (r >> 64) as u64)
}

/// Carry-less product of two 64-bit polynomials as `(low, high)` words.
pub fn clmul(a: u64, b: u64) -> (u64, u64) {
    let mut out = [0u64; 2];
    backend().school(&[a], &[b], &mut out);
    (out[0], out[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Soft,
    #[cfg(all(feature = "std", target_arch = "x86_64"))]
    Pclmul,
}

/// Fastest backend available on this CPU.
pub fn backend() -> Backend {
    #[cfg(all(feature = "std", target_arch = "x86_64"))]
    {
        if std::is_x86_feature_detected!("pclmulqdq") {
            return Backend::Pclmul;
        }
    }
    Backend::Soft
}

#[cfg(all(feature = "std", target_arch = "x86_64"))]
mod hw {
    use core::arch::x86_64::*;

    #[target_feature(enable = "pclmulqdq,sse2")]
    pub fn school(a: &[u64], b: &[u64], out: &mut [u64]) {
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let xa = _mm_set_epi64x(0, x as i64);
            for (j, &y) in b.iter().enumerate() {
                let p = _mm_clmulepi64_si128(xa, _mm_set_epi64x(0, y as i64), 0x00);
                out[i + j] ^= _mm_cvtsi128_si64(p) as u64;
                out[i + j + 1] ^= _mm_cvtsi128_si64(_mm_unpackhi_epi64(p, p)) as u64;
            }
        }
    }
}

impl Backend {
    /// `out ^= a * b` by schoolbook multiplication; `out.len() >= a.len() + b.len()`.
    fn school(self, a: &[u64], b: &[u64], out: &mut [u64]) {
        match self {
            Backend::Soft => {
                for (i, &x) in a.iter().enumerate() {
                    if x == 0 {
                        continue;
                    }
                    for (j, &y) in b.iter().enumerate() {
                        let (lo, hi) = clmul_soft(x, y);
                        out[i + j] ^= lo;
                        out[i + j + 1] ^= hi;
                    }
                }
            }
            #[cfg(all(feature = "std", target_arch = "x86_64"))]
            // SAFETY: this variant is only constructed after runtime detection of pclmulqdq.
            Backend::Pclmul => unsafe { hw::school(a, b, out) },
        }
    }
}

const KARATSUBA_BASE: usize = 40;

/// `out ^= a * b` for equal-length operands; `out.len() >= 2 * a.len()`.
fn karatsuba(be: Backend, a: &[u64], b: &[u64], out: &mut [u64]) {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    if n <= KARATSUBA_BASE {
        be.school(a, b, out);
        return;
    }
    let h = n / 2;
    let hi_len = n - h;
    let (a0, a1) = a.split_at(h);
    let (b0, b1) = b.split_at(h);

    let mut z0 = vec![0u64; 2 * h];
    karatsuba(be, a0, b0, &mut z0);
    let mut z2 = vec![0u64; 2 * hi_len];
    karatsuba(be, a1, b1, &mut z2);

    let mut sa = a1.to_vec();
    let mut sb = b1.to_vec();
    for i in 0..h {
        sa[i] ^= a0[i];
        sb[i] ^= b0[i];
    }
    let mut z1 = vec![0u64; 2 * hi_len];
    karatsuba(be, &sa, &sb, &mut z1);
    for (i, v) in z0.iter().enumerate() {
        z1[i] ^= v;
    }
    for (i, v) in z2.iter().enumerate() {
        z1[i] ^= v;
    }

    for (i, v) in z0.iter().enumerate() {
        out[i] ^= v;
    }
    for (i, v) in z1.iter().enumerate() {
        out[h + i] ^= v;
    }
    for (i, v) in z2.iter().enumerate() {
        out[2 * h + i] ^= v;
    }
}

/// Product of two packed polynomials; the result has `a.len() + b.len()` words.
pub fn poly_mul(a: &[u64], b: &[u64]) -> Vec<u64> {
    poly_mul_with(backend(), a, b)
}

pub fn poly_mul_with(be: Backend, a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len()];
    mul_into(be, a, b, &mut out);
    out
}

/// `out ^= a * b` for operands of any lengths; `out.len() >= a.len() + b.len()`.
fn mul_into(be: Backend, a: &[u64], b: &[u64], out: &mut [u64]) {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let s = short.len();
    if s == 0 {
        return;
    }
    if s <= KARATSUBA_BASE {
        be.school(short, long, out);
        return;
    }
    let mut start = 0;
    while start < long.len() {
        let piece = &long[start..(start + s).min(long.len())];
        if piece.len() == s {
            karatsuba(be, short, piece, &mut out[start..start + 2 * s]);
        } else {
            mul_into(be, short, piece, &mut out[start..start + s + piece.len()]);
        }
        start += s;
    }
}

/// Bits `[start, start + len)` of a packed vector, repacked from bit 0. Bits past the
/// end of `words` read as zero.
pub fn extract_bits(words: &[u64], start: usize, len: usize) -> Vec<u64> {
    let n_words = len.div_ceil(64);
    let shift = start % 64;
    let base = start / 64;
    let at = |i: usize| words.get(i).copied().unwrap_or(0);
    let mut out: Vec<u64> = (0..n_words)
        .map(|w| {
            let lo = at(base + w) >> shift;
            if shift == 0 {
                lo
            } else {
                lo | (at(base + w + 1) << (64 - shift))
            }
        })
        .collect();
    mask_tail(&mut out, len);
    out
}

/// Clears bits at positions `>= len`.
pub fn mask_tail(words: &mut [u64], len: usize) {
    let full = len / 64;
    let rem = len % 64;
    if full < words.len() {
        if rem != 0 {
            words[full] &= (1u64 << rem) - 1;
            for w in &mut words[full + 1..] {
                *w = 0;
            }
        } else {
            for w in &mut words[full..] {
                *w = 0;
            }
        }
    }
}

/// Packs 0/1 bytes into words, least significant bit first.
pub fn pack_bits(bits: &[u8]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 64] |= ((b & 1) as u64) << (i % 64);
    }
    out
}

pub fn unpack_bits(words: &[u64], len: usize) -> Vec<u8> {
    (0..len).map(|i| ((words[i / 64] >> (i % 64)) & 1) as u8).collect()
}

/// Multiplication in GF(2^64) modulo `x^64 + x^4 + x^3 + x + 1`.
pub fn gf64_mul(a: u64, b: u64) -> u64 {
    let (lo, hi) = clmul(a, b);
    let fold = |h: u64| h ^ (h << 1) ^ (h << 3) ^ (h << 4);
    let over = (hi >> 63) ^ (hi >> 61) ^ (hi >> 60);
    lo ^ fold(hi) ^ fold(over)
}

/// Polynomial universal hash of a bit string under `key`: the packed words and the
/// bit length are the coefficients of a polynomial evaluated at `key`. Two distinct
/// strings of at most `L` bits collide for at most `L/64 + 2` of the `2^64` keys.
pub fn poly_hash64(key: u64, bits: &[u8]) -> u64 {
    let mut h = 0u64;
    for w in pack_bits(bits) {
        h = gf64_mul(h ^ w, key);
    }
    gf64_mul(h ^ bits.len() as u64, key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, RngCore};

    fn naive_mul(a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; a.len() + b.len()];
        for i in 0..64 * a.len() {
            if (a[i / 64] >> (i % 64)) & 1 == 0 {
                continue;
            }
            for j in 0..64 * b.len() {
                if (b[j / 64] >> (j % 64)) & 1 == 1 {
                    out[(i + j) / 64] ^= 1 << ((i + j) % 64);
                }
            }
        }
        out
    }

    #[test]
    fn clmul_small_cases() {
        assert_eq!(clmul_soft(0b11, 0b11), (0b101, 0));
        assert_eq!(clmul_soft(1 << 63, 1 << 63), (0, 1 << 62));
        let mut rng = stream(1, 0);
        for _ in 0..1000 {
            let (a, b) = (rng.next_u64(), rng.next_u64());
            assert_eq!(clmul(a, b), clmul_soft(a, b));
        }
    }

    #[test]
    fn karatsuba_matches_naive() {
        let mut rng = stream(2, 0);
        for &(la, lb) in &[(1, 1), (3, 70), (50, 50), (61, 17), (100, 130), (90, 250)] {
            let a: Vec<u64> = (0..la).map(|_| rng.next_u64()).collect();
            let b: Vec<u64> = (0..lb).map(|_| rng.next_u64()).collect();
            let expect = naive_mul(&a, &b);
            assert_eq!(poly_mul_with(Backend::Soft, &a, &b), expect);
            assert_eq!(poly_mul(&a, &b), expect);
        }
    }

    #[test]
    fn bit_packing_and_extraction() {
        let bits: Vec<u8> = (0..200).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
        let w = pack_bits(&bits);
        assert_eq!(unpack_bits(&w, 200), bits);
        for &(s, l) in &[(0, 200), (5, 64), (63, 100), (130, 70), (190, 30)] {
            let e = extract_bits(&w, s, l);
            let expect: Vec<u8> = (s..s + l).map(|i| bits.get(i).copied().unwrap_or(0)).collect();
            assert_eq!(unpack_bits(&e, l), expect);
        }
    }

    #[test]
    fn gf64_field_laws() {
        let mut rng = stream(3, 0);
        for _ in 0..200 {
            let (a, b, c) = (rng.next_u64(), rng.next_u64(), rng.next_u64());
            assert_eq!(gf64_mul(a, b), gf64_mul(b, a));
            assert_eq!(gf64_mul(gf64_mul(a, b), c), gf64_mul(a, gf64_mul(b, c)));
            assert_eq!(gf64_mul(a, b ^ c), gf64_mul(a, b) ^ gf64_mul(a, c));
            assert_eq!(gf64_mul(a, 1), a);
        }
        // x^63 * x = x^64 = x^4 + x^3 + x + 1
        assert_eq!(gf64_mul(1 << 63, 2), 0b11011);
    }

    #[test]
    fn hash_separates_strings() {
        let key = 0x9e37_79b9_7f4a_7c15;
        let a: Vec<u8> = (0..1000).map(|i| (i % 3 == 0) as u8).collect();
        let mut b = a.clone();
        assert_eq!(poly_hash64(key, &a), poly_hash64(key, &b));
        b[517] ^= 1;
        assert_ne!(poly_hash64(key, &a), poly_hash64(key, &b));
        assert_ne!(poly_hash64(key, &a), poly_hash64(key, &a[..999]));
    }
}
