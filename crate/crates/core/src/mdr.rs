//! Eight-dimensional reverse reconciliation over the octonions.
//!
//! Bob maps 8 random bits `u` to the unit octonion `û` with components
//! `(-1)^{u_i} / sqrt(8)` and publishes `r = (y/|y|)·û` together with `|y|`. Because
//! left multiplication by a unit octonion is orthogonal, Alice's
//! `v = (x′/|x′|)⁻¹·r` satisfies `|y|·v = |x′|·û + n` with `n` isotropic Gaussian of
//! the channel noise variance, i.e. a binary-input AWGN channel whose gain is known
//! per block.

use core::ops::{Mul, Neg};

use alloc::vec::Vec;
use libm::sqrt;

use crate::{Error, Result};

/// Real octonion with Cayley–Dickson doubling of quaternions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Octonion(pub [f64; 8]);

fn quat_mul(a: &[f64], b: &[f64]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn quat_conj(a: &[f64]) -> [f64; 4] {
    [a[0], -a[1], -a[2], -a[3]]
}

impl Octonion {
    pub const ONE: Octonion = Octonion([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

    /// Basis element `e_i`.
    pub fn basis(i: usize) -> Self {
        let mut c = [0.0; 8];
        c[i] = 1.0;
        Octonion(c)
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.norm_squared())
    }

    pub fn conj(&self) -> Self {
        let mut c = self.0;
        for v in &mut c[1..] {
            *v = -*v;
        }
        Octonion(c)
    }

    pub fn scale(&self, s: f64) -> Self {
        Octonion(self.0.map(|c| c * s))
    }

    pub fn inverse(&self) -> Result<Self> {
        octonion_inverse(self)
    }
}

impl Mul for Octonion {
    type Output = Octonion;

    fn mul(self, rhs: Octonion) -> Octonion {
        octonion_mul(&self, &rhs)
    }
}

impl Neg for Octonion {
    type Output = Octonion;

    fn neg(self) -> Octonion {
        self.scale(-1.0)
    }
}

/// `(a1, a2)·(b1, b2) = (a1 b1 − conj(b2) a2, b2 a1 + a2 conj(b1))`.
pub fn octonion_mul(a: &Octonion, b: &Octonion) -> Octonion {
    let (a1, a2) = a.0.split_at(4);
    let (b1, b2) = b.0.split_at(4);
    let b1c = quat_conj(b1);
    let b2c = quat_conj(b2);
    let p = quat_mul(a1, b1);
    let q = quat_mul(&b2c, a2);
    let r = quat_mul(b2, a1);
    let s = quat_mul(a2, &b1c);
    Octonion([
        p[0] - q[0],
        p[1] - q[1],
        p[2] - q[2],
        p[3] - q[3],
        r[0] + s[0],
        r[1] + s[1],
        r[2] + s[2],
        r[3] + s[3],
    ])
}

/// Smallest norm accepted by [`octonion_inverse`].
pub const INVERSE_NORM_FLOOR: f64 = 1e-12;

pub fn octonion_inverse(a: &Octonion) -> Result<Octonion> {
    let n2 = a.norm_squared();
    if !(sqrt(n2) > INVERSE_NORM_FLOOR) {
        return Err(Error::Singular(sqrt(n2)));
    }
    Ok(a.conj().scale(1.0 / n2))
}

/// Smallest data-vector norm accepted by encoding and decoding.
pub const VECTOR_NORM_FLOOR: f64 = 1e-9;

/// Unit octonion carrying the bits `u` (each 0 or 1).
pub fn bits_to_unit(u: &[u8; 8]) -> Octonion {
    let a = 1.0 / sqrt(8.0);
    Octonion(u.map(|b| if b & 1 == 0 { a } else { -a }))
}

fn unit_vector(v: &[f64; 8]) -> Result<(Octonion, f64)> {
    let o = Octonion(*v);
    let n = o.norm();
    if !(n > VECTOR_NORM_FLOOR) {
        return Err(Error::Singular(n));
    }
    Ok((o.scale(1.0 / n), n))
}

/// Public reconciliation message of one 8-dimensional block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdrMessage {
    /// Unit-norm rotation `ŷ·û`.
    pub r: Octonion,
    /// Norm of Bob's vector.
    pub y_norm: f64,
}

impl MdrMessage {
    /// Wire form `|y|·r`: 8 reals whose norm is `|y|` and direction is `r`.
    pub fn to_wire(&self) -> [f64; 8] {
        self.r.scale(self.y_norm).0
    }

    pub fn from_wire(w: &[f64; 8]) -> Result<Self> {
        let (r, y_norm) = unit_vector(w)?;
        Ok(Self { r, y_norm })
    }
}

/// Bob's side: encodes the bits `u` against his measurement vector `y`.
pub fn mdr_encode(y: &[f64; 8], u: &[u8; 8]) -> Result<MdrMessage> {
    let (y_hat, y_norm) = unit_vector(y)?;
    Ok(MdrMessage {
        r: y_hat * bits_to_unit(u),
        y_norm,
    })
}

/// Alice's side: per-bit log-likelihood ratios `ln P(u_i = 0) / P(u_i = 1)`.
///
/// `sigma2` is the total noise variance in Bob's frame and `t_slope` the estimated
/// gain `sqrt(eta T)` relating Alice's symbols to Bob's.
pub fn mdr_llrs(x: &[f64; 8], msg: &MdrMessage, sigma2: f64, t_slope: f64) -> Result<[f64; 8]> {
    if !(sigma2 > 0.0) {
        return Err(Error::Domain("noise variance must be positive"));
    }
    let x_prime = x.map(|c| c * t_slope);
    let (x_hat, x_norm) = unit_vector(&x_prime)?;
    let v = x_hat.conj() * msg.r;
    let scale = 2.0 / sqrt(8.0) * x_norm * msg.y_norm / sigma2;
    Ok(v.0.map(|c| c * scale))
}

fn chunks8(v: &[f64]) -> impl Iterator<Item = &[f64; 8]> {
    v.chunks_exact(8).map(|c| c.try_into().expect("chunk of 8"))
}

/// Encodes consecutive 8-blocks of `y` with the matching 8-blocks of `u`.
pub fn encode_blocks(y: &[f64], u: &[u8]) -> Result<Vec<MdrMessage>> {
    if y.len() % 8 != 0 {
        return Err(Error::Domain("vector length must be a multiple of 8"));
    }
    if u.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            got: u.len(),
        });
    }
    chunks8(y)
        .zip(u.chunks_exact(8))
        .map(|(yb, ub)| mdr_encode(yb, ub.try_into().expect("chunk of 8")))
        .collect()
}

/// LLRs for consecutive 8-blocks of `x` against the messages `msgs`.
pub fn llrs_blocks(x: &[f64], msgs: &[MdrMessage], sigma2: f64, t_slope: f64) -> Result<Vec<f64>> {
    if x.len() != 8 * msgs.len() {
        return Err(Error::LengthMismatch {
            expected: 8 * msgs.len(),
            got: x.len(),
        });
    }
    let mut out = Vec::with_capacity(x.len());
    for (xb, m) in chunks8(x).zip(msgs) {
        out.extend_from_slice(&mdr_llrs(xb, m, sigma2, t_slope)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, stream, RngCore};

    fn random_oct<R: RngCore>(rng: &mut R) -> Octonion {
        Octonion(core::array::from_fn(|_| standard_normal(rng)))
    }

    fn close(a: &Octonion, b: &Octonion, tol: f64) -> bool {
        a.0.iter().zip(&b.0).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn unit_and_basis_products() {
        let mut rng = stream(1, 0);
        let a = random_oct(&mut rng);
        assert_eq!(Octonion::ONE * a, a);
        assert_eq!(a * Octonion::ONE, a);
        assert_eq!(Octonion::basis(1) * Octonion::basis(2), Octonion::basis(3));
        for i in 1..8 {
            assert_eq!(Octonion::basis(i) * Octonion::basis(i), -Octonion::ONE);
        }
    }

    #[test]
    fn norm_is_multiplicative() {
        let mut rng = stream(2, 0);
        for _ in 0..1000 {
            let a = random_oct(&mut rng);
            let b = random_oct(&mut rng);
            let lhs = (a * b).norm();
            let rhs = a.norm() * b.norm();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }

    #[test]
    fn inverse_identities() {
        let mut rng = stream(3, 0);
        assert_eq!(Octonion::ONE.inverse().unwrap(), Octonion::ONE);
        for _ in 0..1000 {
            let a = random_oct(&mut rng);
            let inv = a.inverse().unwrap();
            assert!(close(&(a * inv), &Octonion::ONE, 1e-12));
            assert!((inv.norm() - 1.0 / a.norm()).abs() <= 1e-12 / a.norm());
        }
        assert!(matches!(Octonion::default().inverse(), Err(Error::Singular(_))));
    }

    #[test]
    fn encode_examples() {
        let m = mdr_encode(&[2.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], &[0; 8]).unwrap();
        let a = 1.0 / sqrt(8.0);
        assert!(close(&m.r, &Octonion([a; 8]), 1e-15));
        assert_eq!(m.y_norm, 2.5);
        let mut rng = stream(4, 0);
        for _ in 0..1000 {
            let y = random_oct(&mut rng).0;
            let u: [u8; 8] = core::array::from_fn(|_| (rng.next_u32() & 1) as u8);
            let m = mdr_encode(&y, &u).unwrap();
            assert!((m.r.norm() - 1.0).abs() < 1e-9);
            let back = MdrMessage::from_wire(&m.to_wire()).unwrap();
            assert!(close(&back.r, &m.r, 1e-12) && (back.y_norm - m.y_norm).abs() < 1e-12);
        }
        assert!(mdr_encode(&[0.0; 8], &[0; 8]).is_err());
    }

    #[test]
    fn noiseless_llr_signs_match_bits() {
        let mut rng = stream(5, 0);
        let t_slope = 0.3;
        for _ in 0..1000 {
            let x = random_oct(&mut rng).0;
            let y = x.map(|c| c * t_slope);
            let u: [u8; 8] = core::array::from_fn(|_| (rng.next_u32() & 1) as u8);
            let m = mdr_encode(&y, &u).unwrap();
            let llr = mdr_llrs(&x, &m, 1.0, t_slope).unwrap();
            for i in 0..8 {
                assert_eq!(llr[i] > 0.0, u[i] == 0);
            }
        }
        let m = mdr_encode(&[1.0; 8], &[0; 8]).unwrap();
        assert!(mdr_llrs(&[0.0; 8], &m, 1.0, 1.0).is_err());
    }

    #[test]
    fn llr_scales_with_inverse_noise() {
        let x = [0.3, -1.2, 0.5, 0.8, -0.1, 0.9, 1.1, -0.4];
        let m = mdr_encode(&[1.0, 0.2, -0.3, 0.5, 0.7, -1.0, 0.1, 0.4], &[1, 0, 1, 1, 0, 0, 1, 0]).unwrap();
        let a = mdr_llrs(&x, &m, 1.0, 1.0).unwrap();
        let b = mdr_llrs(&x, &m, 2.0, 1.0).unwrap();
        let c = mdr_llrs(&x, &m, 1.0, 2.0).unwrap();
        for i in 0..8 {
            assert!((a[i] - 2.0 * b[i]).abs() < 1e-12);
            assert!((c[i] - 2.0 * a[i]).abs() < 1e-12);
        }
    }
}
