//! Parameter sweeps: key rate against distance, and excess-noise estimates with
//! their worst-case bounds against the positive-key frontier.

use cvqkd_core::estimation::{estimate_channel, worst_case_bounds, ChannelEstimate};
use cvqkd_core::keyrate::{
    holevo_bound, mutual_information, rate_at, xi_max_positive, FiniteSizeParams, RateMode, VaChoice, V_A_RANGE,
};
use cvqkd_core::model::{db_to_transmittance, km_to_db, snr, ProtocolParams, DEFAULT_FIBER_LOSS_DB_PER_KM};
use cvqkd_core::rng::{standard_normal, stream};
use rayon::prelude::*;

use crate::config::SessionConfig;
use crate::error::{LabError, LabResult};
use crate::io::csv::{num, CsvTable};
use crate::pipeline::{block_label, derive_seed};

/// Largest estimation block simulated sample by sample; larger blocks rescale the
/// simulated deviations by `sqrt(SIM_CAP / m)`.
pub const SIM_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepMode {
    Asymptotic,
    /// Finite-size analysis on blocks of this many pulses, split in half.
    Finite(u64),
}

impl SweepMode {
    pub fn column(&self) -> String {
        match self {
            Self::Asymptotic => "rate_asymptotic".into(),
            Self::Finite(n) => format!("rate_fin_{}", block_label(*n)),
        }
    }

    fn rate_mode(&self, eps: f64) -> RateMode {
        match self {
            Self::Asymptotic => RateMode::Asymptotic,
            Self::Finite(n) => RateMode::Finite(FiniteSizeParams::split_half(*n, eps)),
        }
    }
}

/// Modes of the distance figure: asymptotic, 10^9 and 10^8.
pub const FIGURE2_MODES: [SweepMode; 3] = [
    SweepMode::Asymptotic,
    SweepMode::Finite(1_000_000_000),
    SweepMode::Finite(100_000_000),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RateSweep {
    pub table: CsvTable,
    /// Rows whose rates are not ordered as the modes are listed.
    pub ordering_violations: Vec<usize>,
}

fn grid_v_a() -> impl Iterator<Item = f64> {
    let (lo, hi) = V_A_RANGE;
    (0..=180).map(move |i| lo + (hi - lo) * i as f64 / 180.0)
}

/// Rates over `distances_km` at the template's detector and `xi_true`.
///
/// The variance maximizes the rate of the last listed mode (the most restrictive
/// when modes are listed from least to most restrictive) on a 0.05 grid.
pub fn sweep_figure2(template: &SessionConfig, distances_km: &[f64], modes: &[SweepMode], beta: f64) -> LabResult<RateSweep> {
    let mut header: Vec<String> = ["distance_km", "loss_db", "v_a", "snr", "i_ab", "chi_be"].map(String::from).to_vec();
    header.extend(modes.iter().map(SweepMode::column));
    header.push("xi_assumed".into());
    let det = template.detector;
    let rows = distances_km
        .par_iter()
        .map(|&d| -> LabResult<(Vec<String>, bool)> {
            let loss = km_to_db(d, DEFAULT_FIBER_LOSS_DB_PER_KM)?;
            let base = ProtocolParams {
                v_a: 1.0,
                t: db_to_transmittance(loss)?,
                xi: template.xi_true,
                eta: det.eta,
                v_el: det.v_el,
                beta,
            };
            let target = modes.last().copied().unwrap_or(SweepMode::Asymptotic).rate_mode(template.eps);
            let mut best = (f64::NEG_INFINITY, 1.0);
            for v in grid_v_a() {
                let r = rate_at(&base.with_v_a(v), &det, &target)?;
                if r > best.0 {
                    best = (r, v);
                }
            }
            let p = base.with_v_a(best.1);
            let rates = modes
                .iter()
                .map(|m| rate_at(&p, &det, &m.rate_mode(template.eps)))
                .collect::<Result<Vec<_>, _>>()?;
            let ordered = rates.windows(2).all(|w| w[0] >= w[1]);
            let mut row = vec![
                num(d),
                num(loss),
                num(p.v_a),
                num(snr(&p)),
                num(mutual_information(snr(&p))),
                num(holevo_bound(&p)?),
            ];
            row.extend(rates.iter().map(|&r| num(r)));
            row.push(num(template.xi_true));
            Ok((row, ordered))
        })
        .collect::<LabResult<Vec<_>>>()?;
    let mut table = CsvTable::new(&header);
    let mut ordering_violations = Vec::new();
    for (i, (row, ordered)) in rows.into_iter().enumerate() {
        if !ordered {
            ordering_violations.push(i);
        }
        table.push(row);
    }
    Ok(RateSweep {
        table,
        ordering_violations,
    })
}

/// Largest excess noise with a positive rate at each distance, variance optimized.
pub fn frontier(template: &SessionConfig, distances_km: &[f64], mode: SweepMode, beta: f64) -> LabResult<CsvTable> {
    let rows = distances_km
        .par_iter()
        .map(|&d| -> LabResult<Vec<String>> {
            let t = db_to_transmittance(km_to_db(d, DEFAULT_FIBER_LOSS_DB_PER_KM)?)?;
            let xi = xi_max_positive(t, &template.detector, beta, VaChoice::Optimize, &mode.rate_mode(template.eps))?;
            Ok(vec![num(d), num(xi)])
        })
        .collect::<LabResult<Vec<_>>>()?;
    let mut table = CsvTable::new(&["distance_km", "xi_max"]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

/// One estimation block of the noise figure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePoint {
    pub m: u64,
    pub repetition: usize,
    pub t_hat: f64,
    pub xi_hat: f64,
    /// `None` when the slope bound is not positive.
    pub t_min: Option<f64>,
    pub xi_max: Option<f64>,
    pub xi_frontier: f64,
}

impl NoisePoint {
    /// Worst-case point lies below the frontier.
    pub fn positive(&self) -> bool {
        self.xi_max.is_some_and(|x| x < self.xi_frontier)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweep {
    pub points: Vec<NoisePoint>,
}

impl NoiseSweep {
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["m", "repetition", "t_hat", "xi_hat", "t_min", "xi_max", "xi_frontier", "positive"]);
        let opt = |x: Option<f64>| x.map_or(String::new(), num);
        for p in &self.points {
            t.push(vec![
                p.m.to_string(),
                p.repetition.to_string(),
                num(p.t_hat),
                num(p.xi_hat),
                opt(p.t_min),
                opt(p.xi_max),
                num(p.xi_frontier),
                p.positive().to_string(),
            ]);
        }
        t
    }

    pub fn at(&self, m: u64) -> impl Iterator<Item = &NoisePoint> {
        self.points.iter().filter(move |p| p.m == m)
    }

    /// Mean of `xi_max - xi_hat` over the blocks of size `m` with valid bounds.
    pub fn mean_gap(&self, m: u64) -> f64 {
        let gaps: Vec<f64> = self.at(m).filter_map(|p| p.xi_max.map(|x| x - p.xi_hat)).collect();
        gaps.iter().sum::<f64>() / gaps.len() as f64
    }
}

/// Estimation blocks of `m` disclosed pairs, `repetitions` per size, at variance
/// `v_a`; the frontier is evaluated for blocks of `2m` pulses split in half.
pub fn sweep_figure3(
    cfg: &SessionConfig,
    v_a: f64,
    block_sizes: &[u64],
    repetitions: usize,
    beta: f64,
) -> LabResult<NoiseSweep> {
    if repetitions < 10 {
        return Err(LabError::Config("at least 10 repetitions per block size".into()));
    }
    if block_sizes.iter().any(|&m| m < 2) {
        return Err(LabError::Config("block sizes must be at least 2".into()));
    }
    let det = cfg.detector;
    let t = cfg.transmittance();
    let frontiers = block_sizes
        .par_iter()
        .map(|&m| {
            let fs = FiniteSizeParams::split_half(2 * m, cfg.eps);
            xi_max_positive(t, &det, beta, VaChoice::Fixed(v_a), &RateMode::Finite(fs))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let gain = (det.eta * t).sqrt();
    let sigma2 = 1.0 + det.v_el + det.eta * t * cfg.xi_true;
    let jobs: Vec<(usize, usize)> = (0..block_sizes.len()).flat_map(|i| (0..repetitions).map(move |r| (i, r))).collect();
    let points = jobs
        .par_iter()
        .map(|&(i, r)| -> LabResult<NoisePoint> {
            let m = block_sizes[i];
            let m_sim = m.min(SIM_CAP);
            let mut rng = stream(derive_seed(cfg.seed, m, r as u64), 0);
            let sd_a = v_a.sqrt();
            let sd_n = sigma2.sqrt();
            let x: Vec<f64> = (0..m_sim).map(|_| sd_a * standard_normal(&mut rng)).collect();
            let y: Vec<f64> = x.iter().map(|&a| gain * a + sd_n * standard_normal(&mut rng)).collect();
            let sim = estimate_channel(&x, &y, det.eta, det.v_el)?;
            let shrink = (m_sim as f64 / m as f64).sqrt();
            let est = ChannelEstimate {
                t_slope: gain + (sim.t_slope - gain) * shrink,
                sigma2_hat: sigma2 + (sim.sigma2_hat - sigma2) * shrink,
                m,
                ..sim
            }
            .recalibrated(det.eta, det.v_el);
            let bounds = worst_case_bounds(&est, v_a, det.eta, det.v_el, cfg.eps).ok();
            Ok(NoisePoint {
                m,
                repetition: r,
                t_hat: est.t_hat,
                xi_hat: est.xi_hat,
                t_min: bounds.map(|b| b.t_min),
                xi_max: bounds.map(|b| b.xi_max),
                xi_frontier: frontiers[i],
            })
        })
        .collect::<LabResult<Vec<_>>>()?;
    Ok(NoiseSweep { points })
}
