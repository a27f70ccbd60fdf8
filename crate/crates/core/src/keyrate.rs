//! Mutual information, Holevo bound and secret-key rates under collective attacks.
//!
//! The detector is trusted: its inefficiency and electronic noise are modelled as a
//! beamsplitter of transmissivity `eta` whose other input carries one half of an EPR
//! pair of variance `1 + v_el / (1 - eta)`. The eavesdropper's information on Bob's
//! homodyne data is `S(AB) - S(AFG | x_B)`.

use alloc::string::String;
use alloc::vec::Vec;
use libm::{log2, sqrt};

use crate::estimation::{device_corners, worst_case_bounds, ChannelEstimate, WorstCaseBounds};
use crate::model::{
    g_function, homodyne_condition, snr, symplectic_eigenvalues, CovarianceMatrix, DeviceUncertainty,
    ProtocolParams, Quadrature,
};
use crate::{Error, Result};

/// Default total security parameter.
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Default constant of the leading finite-size penalty term.
pub const DEFAULT_DELTA_CONSTANT: f64 = 7.0;

/// Efficiency used in place of `eta = 1` when the detector still has electronic noise.
pub const DEGENERATE_ETA: f64 = 1.0 - 1e-6;

/// Allowed modulation-variance window, SNU.
pub const V_A_RANGE: (f64, f64) = (1.0, 10.0);

/// Gaussian-channel mutual information, bits per symbol.
pub fn mutual_information(snr: f64) -> f64 {
    0.5 * log2(1.0 + snr.max(0.0))
}

fn entropy(gamma: &CovarianceMatrix) -> Result<f64> {
    symplectic_eigenvalues(gamma)?
        .into_iter()
        .map(g_function)
        .sum()
}

/// Upper bound on Eve's information about Bob's data, bits per symbol.
pub fn holevo_bound(p: &ProtocolParams) -> Result<f64> {
    if !(p.t > 0.0 && p.t <= 1.0) {
        return Err(Error::Domain("Holevo bound needs 0 < t <= 1"));
    }
    if !(p.v_a >= 0.0 && p.xi >= 0.0 && p.eta > 0.0 && p.eta <= 1.0 && p.v_el >= 0.0) {
        return Err(Error::Domain("invalid protocol parameters"));
    }
    let v = p.v_a + 1.0;
    let bob = p.t * (v - 1.0 + p.xi) + 1.0;
    let corr = sqrt(p.t * (v * v - 1.0));
    let ab = CovarianceMatrix::two_mode(v, bob, corr);
    let s_ab = entropy(&ab)?;

    let eta = if p.eta >= 1.0 && p.v_el > 0.0 {
        DEGENERATE_ETA
    } else {
        p.eta
    };
    let v_d = if eta < 1.0 { 1.0 + p.v_el / (1.0 - eta) } else { 1.0 };
    // modes: A, B', F0, G
    let dilated = ab
        .direct_sum(&CovarianceMatrix::two_mode_squeezed(v_d))
        .beamsplitter(1, 2, eta);
    let conditioned = homodyne_condition(&dilated, 1, Quadrature::Q)?;
    let s_cond = entropy(&conditioned)?;
    Ok((s_ab - s_cond).max(0.0))
}

/// `beta * I_AB - chi_BE`, bits per symbol; negative values are returned as-is.
pub fn rate_asymptotic(p: &ProtocolParams) -> Result<f64> {
    Ok(p.beta * mutual_information(snr(p)) - holevo_bound(p)?)
}

/// Block sizes and failure probabilities of a finite-size evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteSizeParams {
    pub n_total: u64,
    pub n_key: u64,
    pub m_pe: u64,
    pub eps_pe: f64,
    pub eps_pa: f64,
    pub eps_bar: f64,
    pub eps_total: f64,
    pub delta_constant: f64,
}

impl FiniteSizeParams {
    /// Half of the block for key, half disclosed, every epsilon at `eps`.
    pub fn split_half(n_total: u64, eps: f64) -> Self {
        let n_key = n_total / 2;
        Self {
            n_total,
            n_key,
            m_pe: n_total - n_key,
            eps_pe: eps,
            eps_pa: eps,
            eps_bar: eps,
            eps_total: eps,
            delta_constant: DEFAULT_DELTA_CONSTANT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_key + self.m_pe != self.n_total || self.n_key == 0 || self.m_pe < 2 {
            return Err(Error::Domain("block split must satisfy n_key + m_pe = n_total"));
        }
        for e in [self.eps_pe, self.eps_pa, self.eps_bar] {
            if !(e > 0.0 && e <= self.eps_total && e < 1.0) {
                return Err(Error::Domain("epsilon components must lie in (0, eps_total]"));
            }
        }
        Ok(())
    }
}

/// Finite-size penalty with the default constant.
pub fn delta_n(n_key: u64, eps_bar: f64, eps_pa: f64) -> f64 {
    delta_n_with(DEFAULT_DELTA_CONSTANT, n_key, eps_bar, eps_pa)
}

pub fn delta_n_with(constant: f64, n_key: u64, eps_bar: f64, eps_pa: f64) -> f64 {
    let n = n_key as f64;
    constant * sqrt(log2(2.0 / eps_bar) / n) + 2.0 / n * log2(1.0 / eps_pa)
}

/// Nominal detector calibration plus its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    pub eta: f64,
    pub v_el: f64,
    pub uncertainty: DeviceUncertainty,
}

impl Detector {
    pub const fn exact(eta: f64, v_el: f64) -> Self {
        Self {
            eta,
            v_el,
            uncertainty: DeviceUncertainty::NONE,
        }
    }
}

/// Breakdown of one finite-size rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteRate {
    /// Bits per pulse entering post-processing.
    pub rate: f64,
    pub i_ab: f64,
    pub chi_worst: f64,
    pub delta: f64,
    /// Bounds at the corner that maximized the Holevo bound.
    pub bounds: WorstCaseBounds,
}

/// Finite-size secret-key rate against collective attacks.
pub fn rate_finite(
    est: &ChannelEstimate,
    fs: &FiniteSizeParams,
    detector: &Detector,
    v_a: f64,
    beta: f64,
) -> Result<FiniteRate> {
    fs.validate()?;
    let nominal = ProtocolParams {
        v_a,
        t: est.t_hat,
        xi: est.xi_physical(),
        eta: detector.eta,
        v_el: detector.v_el,
        beta,
    };
    let i_ab = mutual_information(snr(&nominal));
    let mut worst: Option<(f64, WorstCaseBounds)> = None;
    for corner in device_corners(detector.eta, detector.v_el, &detector.uncertainty)? {
        let e = est.recalibrated(corner.eta, corner.v_el);
        let b = worst_case_bounds(&e, v_a, corner.eta, corner.v_el, fs.eps_pe)?;
        let p = ProtocolParams {
            v_a,
            t: b.t_min.min(1.0),
            xi: b.xi_max.max(0.0),
            eta: corner.eta,
            v_el: corner.v_el,
            beta,
        };
        let chi = holevo_bound(&p)?;
        if worst.map_or(true, |(c, _)| chi > c) {
            worst = Some((chi, b));
        }
    }
    let (chi_worst, bounds) = worst.expect("four corners");
    let delta = delta_n_with(fs.delta_constant, fs.n_key, fs.eps_bar, fs.eps_pa);
    let frac = fs.n_key as f64 / fs.n_total as f64;
    Ok(FiniteRate {
        rate: frac * (beta * i_ab - chi_worst - delta),
        i_ab,
        chi_worst,
        delta,
        bounds,
    })
}

/// Which security analysis a rate refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateMode {
    Asymptotic,
    Finite(FiniteSizeParams),
}

/// Rate at true parameters `p` under `mode`; the finite mode assumes the estimator
/// returned the true values on a block of `m_pe` samples.
pub fn rate_at(p: &ProtocolParams, detector: &Detector, mode: &RateMode) -> Result<f64> {
    match mode {
        RateMode::Asymptotic => rate_asymptotic(&ProtocolParams {
            eta: detector.eta,
            v_el: detector.v_el,
            ..*p
        }),
        RateMode::Finite(fs) => {
            let est = ChannelEstimate::exact(p.t, p.xi, detector.eta, detector.v_el, fs.m_pe);
            match rate_finite(&est, fs, detector, p.v_a, p.beta) {
                Ok(r) => Ok(r.rate),
                Err(Error::EstimationFailure(_)) => Ok(f64::NEG_INFINITY),
                Err(e) => Err(e),
            }
        }
    }
}

/// Modulation variance used by [`xi_max_positive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VaChoice {
    Fixed(f64),
    /// Maximize the rate over [`V_A_RANGE`] at every evaluated excess noise.
    Optimize,
}

fn best_rate(p: &ProtocolParams, detector: &Detector, mode: &RateMode, va: VaChoice) -> Result<f64> {
    match va {
        VaChoice::Fixed(v) => rate_at(&p.with_v_a(v), detector, mode),
        VaChoice::Optimize => {
            let (lo, hi) = V_A_RANGE;
            let steps = 36;
            let mut best = (f64::NEG_INFINITY, lo);
            for i in 0..=steps {
                let v = lo + (hi - lo) * i as f64 / steps as f64;
                let r = rate_at(&p.with_v_a(v), detector, mode)?;
                if r > best.0 {
                    best = (r, v);
                }
            }
            // golden-section refinement around the best grid point
            let h = (hi - lo) / steps as f64;
            let (mut a, mut b) = ((best.1 - h).max(lo), (best.1 + h).min(hi));
            let g = 0.5 * (sqrt(5.0) - 1.0);
            for _ in 0..30 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if rate_at(&p.with_v_a(c), detector, mode)? > rate_at(&p.with_v_a(d), detector, mode)? {
                    b = d;
                } else {
                    a = c;
                }
            }
            let r = rate_at(&p.with_v_a(0.5 * (a + b)), detector, mode)?;
            Ok(r.max(best.0))
        }
    }
}

/// Largest excess noise with a positive rate, found by bisection to 1e-5 SNU.
///
/// Returns 0 when the rate is not positive even at `xi = 0`.
pub fn xi_max_positive(
    t: f64,
    detector: &Detector,
    beta: f64,
    va: VaChoice,
    mode: &RateMode,
) -> Result<f64> {
    let base = ProtocolParams {
        v_a: 1.0,
        t,
        xi: 0.0,
        eta: detector.eta,
        v_el: detector.v_el,
        beta,
    };
    let rate = |xi: f64| best_rate(&base.with_xi(xi), detector, mode, va);
    if !(rate(0.0)? > 0.0) {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 0.01;
    while rate(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 100.0 {
            return Ok(hi);
        }
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if rate(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One entry of a reconciliation code catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeDescriptor {
    pub code_id: String,
    /// Information rate at the code's default rate adaptation.
    pub rate: f64,
    /// Lowest SNR with frame-error rate at most 10% at `block_len`.
    pub snr_threshold: f64,
    pub block_len: usize,
}

impl CodeDescriptor {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate < 1.0) {
            return Err(Error::InvalidCode("rate must lie in (0, 1)"));
        }
        if !(self.snr_threshold > 0.0) {
            return Err(Error::InvalidCode("SNR threshold must be positive"));
        }
        Ok(())
    }

    /// Reconciliation efficiency when operated exactly at its threshold.
    pub fn efficiency(&self) -> f64 {
        self.rate / mutual_information(self.snr_threshold)
    }
}

/// Result of the code and modulation-variance selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeSelection {
    pub index: usize,
    pub v_a: f64,
    pub rate: f64,
}

/// Modulation variance that puts Bob's SNR exactly at `target_snr`.
pub fn v_a_for_snr(target_snr: f64, t: f64, xi: f64, eta: f64, v_el: f64) -> f64 {
    target_snr * (1.0 + v_el + eta * t * xi) / (eta * t)
}

/// Picks the catalog code (and the variance that operates it at threshold) with the
/// highest rate under `mode`, among codes whose variance falls inside [`V_A_RANGE`].
pub fn select_code_and_va(
    catalog: &[CodeDescriptor],
    t_hat: f64,
    xi_hat: f64,
    detector: &Detector,
    mode: &RateMode,
) -> Result<CodeSelection> {
    let xi = xi_hat.max(0.0);
    let mut candidates: Vec<CodeSelection> = Vec::new();
    for (index, code) in catalog.iter().enumerate() {
        code.validate()?;
        let v_a = v_a_for_snr(code.snr_threshold, t_hat, xi, detector.eta, detector.v_el);
        if !(v_a >= V_A_RANGE.0 && v_a <= V_A_RANGE.1) {
            continue;
        }
        let p = ProtocolParams {
            v_a,
            t: t_hat,
            xi,
            eta: detector.eta,
            v_el: detector.v_el,
            beta: code.efficiency().min(1.0),
        };
        candidates.push(CodeSelection {
            index,
            v_a,
            rate: rate_at(&p, detector, mode)?,
        });
    }
    candidates
        .into_iter()
        .reduce(|a, b| if b.rate > a.rate { b } else { a })
        .ok_or(Error::NoFeasibleCode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    const ETA: f64 = 0.552;
    const V_EL: f64 = 0.015;

    fn params(v_a: f64, t: f64, xi: f64) -> ProtocolParams {
        ProtocolParams {
            v_a,
            t,
            xi,
            eta: ETA,
            v_el: V_EL,
            beta: 0.95,
        }
    }

    #[test]
    fn mutual_information_examples() {
        assert_eq!(mutual_information(0.0), 0.0);
        assert!((mutual_information(1.1) - 0.5352).abs() < 1e-4);
        assert!((mutual_information(0.08) - 0.05552).abs() < 1e-5);
    }

    #[test]
    fn holevo_examples() {
        let ideal = ProtocolParams {
            v_a: 5.0,
            t: 1.0,
            xi: 0.0,
            eta: 1.0,
            v_el: 0.0,
            beta: 1.0,
        };
        assert!(holevo_bound(&ideal).unwrap().abs() < 1e-9);
        let c0 = holevo_bound(&params(3.59, 0.0871, 0.0)).unwrap();
        let c1 = holevo_bound(&params(3.59, 0.0871, 0.01)).unwrap();
        let c2 = holevo_bound(&params(3.59, 0.0871, 0.02)).unwrap();
        assert!(c2 > c1 && c1 > c0, "{c0} {c1} {c2}");
        assert!(holevo_bound(&params(1e-9, 0.0871, 0.0)).unwrap() < 1e-6);
        assert!(holevo_bound(&params(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn degenerate_detector_limit() {
        let p = ProtocolParams {
            eta: 1.0,
            v_el: 0.01,
            ..params(3.0, 0.3, 0.01)
        };
        let limit = holevo_bound(&p).unwrap();
        let near = holevo_bound(&ProtocolParams { eta: 0.99999, ..p }).unwrap();
        assert!((limit - near).abs() < 1e-4, "{limit} vs {near}");
    }

    #[test]
    fn asymptotic_rate_examples() {
        let t = 0.31623;
        let v_a = v_a_for_snr(1.1, t, 0.01, ETA, V_EL);
        assert!(rate_asymptotic(&params(v_a, t, 0.01)).unwrap() > 0.04);
        assert!(rate_asymptotic(&params(v_a, t, 0.5)).unwrap() < 0.0);
        let no_rec = ProtocolParams {
            beta: 0.0,
            ..params(3.0, 0.1, 0.01)
        };
        assert!(rate_asymptotic(&no_rec).unwrap() < 0.0);
    }

    #[test]
    fn delta_examples() {
        let d = delta_n(500_000_000, 1e-10, 1e-10);
        assert!((d - 1.83e-3).abs() < 1.83e-5, "{d}");
        assert!(delta_n(u64::MAX, 1e-10, 1e-10) < 1e-7);
        let e = |n| DEFAULT_DELTA_CONSTANT * sqrt(log2(2.0 / 1e-10) / n as f64);
        assert!((e(4_000_000) / e(1_000_000) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn finite_rate_examples() {
        let det = Detector::exact(ETA, V_EL);
        // 53 km, blocks of 1e6: no key.
        let t53 = 0.0871;
        let fs = FiniteSizeParams::split_half(1_000_000, 1e-10);
        let est = ChannelEstimate::exact(t53, 0.0, ETA, V_EL, fs.m_pe);
        assert!(rate_finite(&est, &fs, &det, 3.59, 0.95).unwrap().rate <= 0.0);
        // 80.5 km, blocks of 1e9: positive.
        let t80 = 0.024547;
        let fs = FiniteSizeParams::split_half(1_000_000_000, 1e-10);
        let est = ChannelEstimate::exact(t80, 0.002, ETA, V_EL, fs.m_pe);
        assert!(rate_finite(&est, &fs, &det, 6.0, 0.95).unwrap().rate > 0.0);
    }

    #[test]
    fn finite_rate_approaches_asymptotic() {
        let det = Detector::exact(ETA, V_EL);
        let p = params(3.59, 0.0871, 0.005);
        let asym = rate_asymptotic(&p).unwrap();
        let fs = FiniteSizeParams {
            n_key: u64::MAX / 4,
            m_pe: u64::MAX / 4,
            n_total: u64::MAX / 4 * 2,
            ..FiniteSizeParams::split_half(2, 1e-10)
        };
        let est = ChannelEstimate::exact(p.t, p.xi, ETA, V_EL, fs.m_pe);
        let r = rate_finite(&est, &fs, &det, p.v_a, p.beta).unwrap();
        // the block split halves the rate; the bracket converges to the asymptotic rate
        assert!((r.rate * 2.0 - asym).abs() < 1e-5, "{} vs {asym}", r.rate * 2.0);
    }

    #[test]
    fn xi_threshold_examples() {
        let det = Detector::exact(ETA, V_EL);
        let hopeless = xi_max_positive(0.0871, &det, 0.0, VaChoice::Fixed(3.0), &RateMode::Asymptotic).unwrap();
        assert_eq!(hopeless, 0.0);
        let ts = [0.31623, 0.0871, 0.024547];
        let th: Vec<f64> = ts
            .iter()
            .map(|&t| xi_max_positive(t, &det, 0.95, VaChoice::Optimize, &RateMode::Asymptotic).unwrap())
            .collect();
        assert!(th[0] > th[1] && th[1] > th[2], "{th:?}");
        let root = xi_max_positive(0.0871, &det, 0.95, VaChoice::Fixed(3.59), &RateMode::Asymptotic).unwrap();
        let r = rate_asymptotic(&params(3.59, 0.0871, root)).unwrap();
        assert!(r.abs() < 1e-5, "{r}");
    }

    fn catalog() -> Vec<CodeDescriptor> {
        // rates sit at 0.95 of capacity so every code shares one efficiency
        [1.1, 0.17, 0.08]
            .iter()
            .enumerate()
            .map(|(i, &snr_threshold)| CodeDescriptor {
                code_id: i.to_string(),
                rate: 0.95 * mutual_information(snr_threshold),
                snr_threshold,
                block_len: 1 << 16,
            })
            .collect()
    }

    #[test]
    fn selection_examples() {
        let det = Detector::exact(ETA, V_EL);
        let s = select_code_and_va(&catalog(), 0.0871, 0.0, &det, &RateMode::Asymptotic).unwrap();
        assert_eq!(s.index, 1);
        assert!((s.v_a - 3.59).abs() < 0.01);
        let s = select_code_and_va(&catalog(), 0.31623, 0.0, &det, &RateMode::Asymptotic).unwrap();
        assert_eq!(s.index, 0);
        assert!((s.v_a - 6.396).abs() < 0.01, "{}", s.v_a);
        assert_eq!(
            select_code_and_va(&catalog(), 1e-4, 0.0, &det, &RateMode::Asymptotic),
            Err(Error::NoFeasibleCode)
        );
    }
}
