//! Parameter conventions and Gaussian covariance-matrix mathematics.
//!
//! Shot-noise units (SNU) throughout: the vacuum quadrature variance is 1, so a
//! coherent state modulated with variance `v_a` has total variance `v_a + 1`.
//! Excess noise `xi` is referred to the channel input and electronic noise `v_el`
//! to Bob's detector output. Covariance matrices are ordered `(q1, p1, q2, p2, ...)`.

use alloc::vec;
use alloc::vec::Vec;
use libm::{log2, pow, sqrt};

use crate::linalg;
use crate::{Error, Result};

/// Attenuation of standard single-mode fibre at 1550 nm.
pub const DEFAULT_FIBER_LOSS_DB_PER_KM: f64 = 0.2;

/// Physical parameters of one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Modulation variance, SNU.
    pub v_a: f64,
    /// Channel transmittance.
    pub t: f64,
    /// Excess noise referred to the channel input, SNU.
    pub xi: f64,
    /// Homodyne detector efficiency.
    pub eta: f64,
    /// Electronic noise variance referred to the detector output, SNU.
    pub v_el: f64,
    /// Reconciliation efficiency.
    pub beta: f64,
}

impl ProtocolParams {
    /// Checks every range invariant, treating `xi` as a true physical parameter.
    pub fn validate(&self) -> Result<()> {
        if !(self.v_a >= 0.0) {
            return Err(Error::Domain("modulation variance must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.t) {
            return Err(Error::Domain("transmittance must lie in [0, 1]"));
        }
        if !(self.xi >= 0.0) {
            return Err(Error::Domain("excess noise must be non-negative"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Domain("detector efficiency must lie in (0, 1]"));
        }
        if !(self.v_el >= 0.0) {
            return Err(Error::Domain("electronic noise must be non-negative"));
        }
        if !(self.beta >= 0.0 && self.beta <= 1.0) {
            return Err(Error::Domain("reconciliation efficiency must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn with_xi(self, xi: f64) -> Self {
        Self { xi, ..self }
    }

    pub fn with_v_a(self, v_a: f64) -> Self {
        Self { v_a, ..self }
    }

    pub fn with_t(self, t: f64) -> Self {
        Self { t, ..self }
    }
}

/// Calibration uncertainty on the trusted detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceUncertainty {
    pub delta_eta: f64,
    pub delta_v_el: f64,
}

impl DeviceUncertainty {
    pub const NONE: Self = Self {
        delta_eta: 0.0,
        delta_v_el: 0.0,
    };

    pub fn validate(&self, eta: f64) -> Result<()> {
        if !(self.delta_eta >= 0.0 && self.delta_v_el >= 0.0) {
            return Err(Error::Domain("uncertainties must be non-negative"));
        }
        if !(eta - self.delta_eta > 0.0) {
            return Err(Error::Domain("efficiency uncertainty exceeds efficiency"));
        }
        Ok(())
    }
}

/// Which quadrature a homodyne detector measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    Q,
    P,
}

impl Quadrature {
    fn offset(self) -> usize {
        match self {
            Quadrature::Q => 0,
            Quadrature::P => 1,
        }
    }
}

/// Fibre loss in dB for a given length.
pub fn km_to_db(distance_km: f64, alpha_db_per_km: f64) -> Result<f64> {
    if !(distance_km >= 0.0) {
        return Err(Error::Domain("distance must be non-negative"));
    }
    if !(alpha_db_per_km > 0.0) {
        return Err(Error::Domain("attenuation must be positive"));
    }
    Ok(alpha_db_per_km * distance_km)
}

/// Power transmittance `10^(-loss/10)`.
pub fn db_to_transmittance(loss_db: f64) -> Result<f64> {
    if !(loss_db >= 0.0) {
        return Err(Error::Domain("loss must be non-negative"));
    }
    Ok(pow(10.0, -loss_db / 10.0))
}

/// Signal-to-noise ratio of Bob's homodyne data.
///
/// Signal `eta*t*v_a` over total noise `1 + v_el + eta*t*xi`.
pub fn snr(p: &ProtocolParams) -> f64 {
    let gain = p.eta * p.t;
    gain * p.v_a / (1.0 + p.v_el + gain * p.xi)
}

/// Von Neumann entropy in bits of a thermal mode with symplectic eigenvalue `x`.
pub fn g_function(x: f64) -> Result<f64> {
    if !(x >= 1.0 - 1e-9) {
        return Err(Error::Unphysical(x));
    }
    if x <= 1.0 {
        return Ok(0.0);
    }
    let a = (x + 1.0) / 2.0;
    let b = (x - 1.0) / 2.0;
    Ok(a * log2(a) - b * log2(b))
}

/// Real symmetric covariance matrix of a `k`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    modes: usize,
    entries: Vec<f64>,
}

impl CovarianceMatrix {
    /// Wraps row-major `entries` of a `2k x 2k` matrix, rejecting asymmetric input.
    pub fn new(modes: usize, entries: Vec<f64>) -> Result<Self> {
        let dim = 2 * modes;
        if modes == 0 || entries.len() != dim * dim {
            return Err(Error::Domain("covariance matrix must be 2k x 2k with k >= 1"));
        }
        let scale = entries.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (entries[i * dim + j] - entries[j * dim + i]).abs() > 1e-12 * scale {
                    return Err(Error::Domain("covariance matrix is not symmetric"));
                }
            }
        }
        Ok(Self { modes, entries })
    }

    /// Thermal (or vacuum, for `v = 1`) product state.
    pub fn thermal(modes: usize, v: f64) -> Self {
        let dim = 2 * modes;
        let mut entries = linalg::identity(dim);
        entries.iter_mut().for_each(|x| *x *= v);
        Self { modes, entries }
    }

    /// Two-mode state with diagonal blocks `a*I`, `b*I` and correlation block `c*Z`.
    pub fn two_mode(a: f64, b: f64, c: f64) -> Self {
        let entries = vec![
            a, 0.0, c, 0.0, //
            0.0, a, 0.0, -c, //
            c, 0.0, b, 0.0, //
            0.0, -c, 0.0, b,
        ];
        Self { modes: 2, entries }
    }

    /// Two-mode squeezed vacuum of local variance `v`.
    pub fn two_mode_squeezed(v: f64) -> Self {
        Self::two_mode(v, v, sqrt((v * v - 1.0).max(0.0)))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        2 * self.modes
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim() + j]
    }

    /// Direct sum of two states; `other`'s modes are appended.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (d1, d2) = (self.dim(), other.dim());
        let dim = d1 + d2;
        let mut entries = vec![0.0; dim * dim];
        for i in 0..d1 {
            entries[i * dim..i * dim + d1].copy_from_slice(&self.entries[i * d1..(i + 1) * d1]);
        }
        for i in 0..d2 {
            let row = (d1 + i) * dim + d1;
            entries[row..row + d2].copy_from_slice(&other.entries[i * d2..(i + 1) * d2]);
        }
        Self {
            modes: self.modes + other.modes,
            entries,
        }
    }

    /// `S gamma S^T` for a `2k x 2k` symplectic (or any) matrix `s`.
    pub fn transform(&self, s: &[f64]) -> Self {
        let dim = self.dim();
        let out = linalg::matmul(&linalg::matmul(s, &self.entries, dim), &linalg::transpose(s, dim), dim);
        let mut cm = Self {
            modes: self.modes,
            entries: out,
        };
        cm.symmetrize();
        cm
    }

    /// Mixes modes `a` and `b` on a beamsplitter of transmissivity `eta`:
    /// `a' = sqrt(eta) a + sqrt(1-eta) b`, `b' = -sqrt(1-eta) a + sqrt(eta) b`.
    pub fn beamsplitter(&self, a: usize, b: usize, eta: f64) -> Self {
        let dim = self.dim();
        let mut s = linalg::identity(dim);
        let (ct, st) = (sqrt(eta), sqrt(1.0 - eta));
        for k in 0..2 {
            let (ia, ib) = (2 * a + k, 2 * b + k);
            s[ia * dim + ia] = ct;
            s[ia * dim + ib] = st;
            s[ib * dim + ia] = -st;
            s[ib * dim + ib] = ct;
        }
        self.transform(&s)
    }

    /// Keeps only the listed modes, in the given order.
    pub fn select_modes(&self, keep: &[usize]) -> Self {
        let dim = self.dim();
        let idx: Vec<usize> = keep.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let nd = idx.len();
        let mut entries = vec![0.0; nd * nd];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                entries[r * nd + c] = self.entries[i * dim + j];
            }
        }
        Self {
            modes: keep.len(),
            entries,
        }
    }

    fn symmetrize(&mut self) {
        let dim = self.dim();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let m = 0.5 * (self.entries[i * dim + j] + self.entries[j * dim + i]);
                self.entries[i * dim + j] = m;
                self.entries[j * dim + i] = m;
            }
        }
    }
}

/// Symplectic spectrum of `gamma`, sorted descending.
///
/// Computed as the moduli of the eigenvalues of `i*Omega*gamma` through the
/// symmetric matrix `-(g Omega g)^2` with `g = gamma^(1/2)`, whose eigenvalues are
/// the squared symplectic eigenvalues, each twice.
pub fn symplectic_eigenvalues(gamma: &CovarianceMatrix) -> Result<Vec<f64>> {
    let dim = gamma.dim();
    let (w, v) = linalg::symmetric_eigen(gamma.entries(), dim);
    if w.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Unphysical(w.iter().cloned().fold(f64::INFINITY, f64::min)));
    }
    // g = V diag(sqrt w) V^T
    let mut root = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            root[i * dim + j] = (0..dim).map(|k| v[i * dim + k] * sqrt(w[k]) * v[j * dim + k]).sum();
        }
    }
    let mut omega = vec![0.0; dim * dim];
    for m in 0..gamma.modes() {
        omega[(2 * m) * dim + 2 * m + 1] = 1.0;
        omega[(2 * m + 1) * dim + 2 * m] = -1.0;
    }
    let a = linalg::matmul(&linalg::matmul(&root, &omega, dim), &root, dim);
    // A is antisymmetric, so A^T A = -A^2 is symmetric positive semi-definite.
    let ata = linalg::matmul(&linalg::transpose(&a, dim), &a, dim);
    let (mut sq, _) = linalg::symmetric_eigen(&ata, dim);
    sq.sort_by(|x, y| y.partial_cmp(x).unwrap_or(core::cmp::Ordering::Equal));
    let mut nu = Vec::with_capacity(gamma.modes());
    for pair in sq.chunks(2) {
        let x = sqrt(0.5 * (pair[0] + pair[1]).max(0.0));
        if x < 1.0 - 1e-6 {
            return Err(Error::Unphysical(x));
        }
        nu.push(if x < 1.0 { 1.0 } else { x });
    }
    Ok(nu)
}

/// Conditional state of the remaining modes after a homodyne measurement of
/// `quadrature` on `mode`.
pub fn homodyne_condition(
    gamma: &CovarianceMatrix,
    mode: usize,
    quadrature: Quadrature,
) -> Result<CovarianceMatrix> {
    let k = gamma.modes();
    if mode >= k {
        return Err(Error::Domain("measured mode out of range"));
    }
    if k < 2 {
        return Err(Error::Domain("cannot condition a single-mode state"));
    }
    let dim = gamma.dim();
    let measured = 2 * mode + quadrature.offset();
    let var = gamma.get(measured, measured);
    if !(var > 0.0) {
        return Err(Error::Domain("measured quadrature variance must be positive"));
    }
    let rest: Vec<usize> = (0..dim).filter(|&i| i / 2 != mode).collect();
    let nd = rest.len();
    let mut entries = vec![0.0; nd * nd];
    for (r, &i) in rest.iter().enumerate() {
        for (c, &j) in rest.iter().enumerate() {
            entries[r * nd + c] = gamma.get(i, j) - gamma.get(i, measured) * gamma.get(j, measured) / var;
        }
    }
    let mut out = CovarianceMatrix {
        modes: k - 1,
        entries,
    };
    out.symmetrize();
    Ok(out)
}
