//! Channel estimation from disclosed samples and worst-case finite-size bounds.
//!
//! Bob's homodyne data follow the linear model `y = t_slope * x + z` with
//! `t_slope = sqrt(eta * T)` and `Var(z) = 1 + v_el + eta * T * xi` (SNU). The
//! estimators below invert that model; the worst-case bounds widen slope and
//! residual variance by Gaussian confidence intervals of failure probability
//! `eps_pe / 2` each.

use libm::sqrt;

use crate::model::DeviceUncertainty;
use crate::rng::inverse_normal_cdf;
use crate::{Error, Result};

/// Minimum number of shot-noise frames for a shot-noise estimate.
pub const MIN_SHOT_NOISE_FRAMES: usize = 1000;

/// Point estimates from a parameter-estimation sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEstimate {
    /// Fitted slope `sum(xy) / sum(x^2)`, an estimate of `sqrt(eta * T)`.
    pub t_slope: f64,
    pub t_hat: f64,
    /// Excess-noise estimate, SNU. Not clamped: may be negative.
    pub xi_hat: f64,
    /// Residual (total noise) variance, SNU.
    pub sigma2_hat: f64,
    /// Number of samples used.
    pub m: u64,
    /// Shot-noise estimate used for normalization, SNU.
    pub n0_hat: f64,
}

impl ChannelEstimate {
    /// Estimate that a noiseless infinite sample would return; used for analytic
    /// finite-size evaluation where no simulation is run.
    pub fn exact(t: f64, xi: f64, eta: f64, v_el: f64, m: u64) -> Self {
        Self {
            t_slope: sqrt(eta * t),
            t_hat: t,
            xi_hat: xi,
            sigma2_hat: 1.0 + v_el + eta * t * xi,
            m,
            n0_hat: 1.0,
        }
    }

    /// Excess noise with the physical floor applied.
    pub fn xi_physical(&self) -> f64 {
        self.xi_hat.max(0.0)
    }

    /// Re-derives transmittance and excess noise for a different detector
    /// calibration; the fitted slope and residual variance do not change.
    pub fn recalibrated(&self, eta: f64, v_el: f64) -> Self {
        let t_hat = self.t_slope * self.t_slope / eta;
        Self {
            t_hat,
            xi_hat: (self.sigma2_hat - 1.0 - v_el) / (eta * t_hat),
            ..*self
        }
    }
}

/// Pessimal parameters compatible with the data up to probability `eps_pe`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCaseBounds {
    pub t_min: f64,
    pub xi_max: f64,
    pub eps_pe: f64,
    pub t_slope_min: f64,
    pub sigma2_max: f64,
}

/// Shot-noise variance from vacuum frames, with the calibrated electronic noise removed.
pub fn estimate_shot_noise(values: &[f64], v_el: f64) -> Result<f64> {
    if values.len() < MIN_SHOT_NOISE_FRAMES {
        return Err(Error::InsufficientData {
            needed: MIN_SHOT_NOISE_FRAMES,
            got: values.len(),
        });
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (m - 1.0);
    let n0 = var - v_el;
    if !(n0 > 0.0) {
        return Err(Error::Domain("shot-noise estimate is not positive"));
    }
    Ok(n0)
}

/// Least-squares fit of Bob's values `y` on Alice's matching symbols `x`, both in SNU.
pub fn estimate_channel(x: &[f64], y: &[f64], eta: f64, v_el: f64) -> Result<ChannelEstimate> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: x.len() });
    }
    let (sxx, sxy) = x
        .iter()
        .zip(y)
        .fold((0.0, 0.0), |(sxx, sxy), (&a, &b)| (sxx + a * a, sxy + a * b));
    if sxx == 0.0 {
        return Err(Error::DegenerateRegressor);
    }
    let t_slope = sxy / sxx;
    let m = x.len();
    let sigma2_hat = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - t_slope * a;
            r * r
        })
        .sum::<f64>()
        / m as f64;
    let t_hat = t_slope * t_slope / eta;
    if t_hat == 0.0 {
        return Err(Error::DegenerateRegressor);
    }
    Ok(ChannelEstimate {
        t_slope,
        t_hat,
        xi_hat: (sigma2_hat - 1.0 - v_el) / (eta * t_hat),
        sigma2_hat,
        m: m as u64,
        n0_hat: 1.0,
    })
}

/// Upper-tail standard normal quantile: `1 - Phi(z) = eps`.
pub fn z_quantile(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain("probability must lie in (0, 1)"));
    }
    Ok(-inverse_normal_cdf(eps))
}

/// Worst-case `(t_min, xi_max)` corner for a block of `est.m` disclosed samples.
pub fn worst_case_bounds(
    est: &ChannelEstimate,
    v_a: f64,
    eta: f64,
    v_el: f64,
    eps_pe: f64,
) -> Result<WorstCaseBounds> {
    if !(eps_pe > 0.0 && eps_pe < 1.0) {
        return Err(Error::Domain("eps_pe must lie in (0, 1)"));
    }
    if !(v_a > 0.0) {
        return Err(Error::Domain("modulation variance must be positive"));
    }
    let z = z_quantile(eps_pe / 2.0)?;
    let m = est.m as f64;
    let t_slope_min = est.t_slope.abs() - z * sqrt(est.sigma2_hat / (m * v_a));
    if !(t_slope_min > 0.0) {
        return Err(Error::EstimationFailure(t_slope_min));
    }
    let sigma2_max = est.sigma2_hat * (1.0 + z * sqrt(2.0 / m));
    let t_min = t_slope_min * t_slope_min / eta;
    Ok(WorstCaseBounds {
        t_min,
        xi_max: (sigma2_max - 1.0 - v_el) / (eta * t_min),
        eps_pe,
        t_slope_min,
        sigma2_max,
    })
}

/// One detector calibration consistent with the declared uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceCorner {
    pub eta: f64,
    pub v_el: f64,
}

/// The four corners `{eta +- d_eta} x {v_el +- d_v_el}`.
pub fn device_corners(eta: f64, v_el: f64, unc: &DeviceUncertainty) -> Result<[DeviceCorner; 4]> {
    unc.validate(eta)?;
    let e = [eta - unc.delta_eta, eta + unc.delta_eta];
    let v = [(v_el - unc.delta_v_el).max(0.0), v_el + unc.delta_v_el];
    Ok([
        DeviceCorner { eta: e[0], v_el: v[0] },
        DeviceCorner { eta: e[0], v_el: v[1] },
        DeviceCorner { eta: e[1].min(1.0), v_el: v[0] },
        DeviceCorner { eta: e[1].min(1.0), v_el: v[1] },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, stream};

    #[test]
    fn z_quantile_examples() {
        assert!(z_quantile(0.5).unwrap().abs() < 1e-12);
        assert!((z_quantile(0.025).unwrap() - 1.95996).abs() < 1e-4);
        assert!((z_quantile(1e-10).unwrap() - 6.3613).abs() < 1e-3);
        assert!(z_quantile(0.0).is_err());
        assert!(z_quantile(1.0).is_err());
    }

    #[test]
    fn shot_noise_examples() {
        let mut rng = stream(11, 0);
        let v_el = 0.015;
        let sd = sqrt(1.0 + v_el);
        let vals: alloc::vec::Vec<f64> = (0..1_000_000).map(|_| sd * standard_normal(&mut rng)).collect();
        let n0 = estimate_shot_noise(&vals, v_el).unwrap();
        assert!((n0 - 1.0).abs() < 0.005, "n0 = {n0}");

        let zeros = alloc::vec![0.0; 2000];
        assert!(estimate_shot_noise(&zeros, v_el).is_err());
        assert!(matches!(
            estimate_shot_noise(&vals[..10], v_el),
            Err(Error::InsufficientData { .. })
        ));

        let doubled: alloc::vec::Vec<f64> = vals.iter().map(|v| 2.0 * v).collect();
        let a = estimate_shot_noise(&vals, 0.0).unwrap();
        let b = estimate_shot_noise(&doubled, 0.0).unwrap();
        assert!((b / a - 4.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_line_exposes_convention() {
        let eta = 0.552;
        let v_el = 0.015;
        let slope = sqrt(eta * 0.0871);
        let x: alloc::vec::Vec<f64> = (1..=100).map(|i| (i as f64 - 50.5) / 10.0).collect();
        let y: alloc::vec::Vec<f64> = x.iter().map(|v| slope * v).collect();
        let est = estimate_channel(&x, &y, eta, v_el).unwrap();
        assert!((est.t_hat - 0.0871).abs() < 1e-12);
        assert!(est.sigma2_hat < 1e-20);
        assert!((est.xi_hat + (1.0 + v_el) / (eta * 0.0871)).abs() < 1e-9);
        assert!(est.xi_hat < 0.0);
    }

    #[test]
    fn degenerate_regressor() {
        assert_eq!(
            estimate_channel(&[0.0, 0.0], &[1.0, 2.0], 0.5, 0.0),
            Err(Error::DegenerateRegressor)
        );
        assert!(estimate_channel(&[1.0], &[1.0], 0.5, 0.0).is_err());
    }

    #[test]
    fn bounds_converge_for_huge_blocks() {
        let gap = |m: u64| {
            let est = ChannelEstimate::exact(0.0871, 0.005, 0.552, 0.015, m);
            let b = worst_case_bounds(&est, 3.59, 0.552, 0.015, 1e-10).unwrap();
            assert!(b.xi_max >= est.xi_hat && b.t_min <= est.t_hat);
            b.xi_max - est.xi_hat
        };
        let (g8, g12) = (gap(100_000_000), gap(1_000_000_000_000));
        assert!(g12 < 1e-3, "{g12}");
        assert!((g8 / g12 - 100.0).abs() < 5.0, "{}", g8 / g12);
    }

    #[test]
    fn bounds_shrink_with_eps() {
        let est = ChannelEstimate::exact(0.0871, 0.005, 0.552, 0.015, 1_000_000);
        let tight = worst_case_bounds(&est, 3.59, 0.552, 0.015, 0.5).unwrap();
        let loose = worst_case_bounds(&est, 3.59, 0.552, 0.015, 1e-10).unwrap();
        assert!(tight.xi_max - est.xi_hat < loose.xi_max - est.xi_hat);
        assert!(worst_case_bounds(&est, 3.59, 0.552, 0.015, 1.0).is_err());
    }

    #[test]
    fn estimation_failure_when_slope_bound_crosses_zero() {
        let est = ChannelEstimate::exact(1e-6, 0.0, 0.552, 0.015, 100);
        assert!(matches!(
            worst_case_bounds(&est, 1.0, 0.552, 0.015, 1e-10),
            Err(Error::EstimationFailure(_))
        ));
    }

    #[test]
    fn corners() {
        let same = device_corners(0.552, 0.015, &DeviceUncertainty::NONE).unwrap();
        assert!(same.iter().all(|c| *c == same[0]));
        let c = device_corners(
            0.552,
            0.015,
            &DeviceUncertainty {
                delta_eta: 0.025,
                delta_v_el: 0.002,
            },
        )
        .unwrap();
        let expect = [(0.527, 0.013), (0.527, 0.017), (0.577, 0.013), (0.577, 0.017)];
        for (got, want) in c.iter().zip(expect) {
            assert!((got.eta - want.0).abs() < 1e-12 && (got.v_el - want.1).abs() < 1e-12);
        }
        assert!(device_corners(
            0.01,
            0.0,
            &DeviceUncertainty {
                delta_eta: 0.02,
                delta_v_el: 0.0
            }
        )
        .is_err());
    }
}
