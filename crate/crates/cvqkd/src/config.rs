//! Session configuration from flat `key = value` text.
//!
//! Keys: `loss_db`, `distance_km` (at 0.2 dB/km), `pulses`, `block_pulses`,
//! `rep_rate`, `eta`, `v_el`, `delta_eta`, `delta_v_el`, `xi_true`, `xi_prior`,
//! `eps`, `shot_noise_fraction`, `param_est_fraction`, `grid_truncation`,
//! `grid_bits`, `fer_target`, `adaptation_constant`, `catalog`, `pa_mode`,
//! `finite_blocks`, `max_iters`, `seed`, `session_id`. `#` starts a comment.

use std::io::BufRead;
use std::path::{Path, PathBuf};

use cvqkd_core::keyrate::{Detector, DEFAULT_EPSILON};
use cvqkd_core::model::{db_to_transmittance, km_to_db, DeviceUncertainty, DEFAULT_FIBER_LOSS_DB_PER_KM};
use cvqkd_core::simulator::{ModulationGrid, PartitionFractions};

use crate::error::{LabError, LabResult};
use crate::io::open;

/// Security analysis used to size the final key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaMode {
    Asymptotic,
    Finite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub loss_db: f64,
    pub pulses: usize,
    /// Pulses per estimation block; the modulation variance is re-solved between blocks.
    pub block_pulses: usize,
    pub rep_rate: f64,
    pub detector: Detector,
    pub xi_true: f64,
    /// Excess noise assumed when choosing the first block's variance.
    pub xi_prior: f64,
    pub eps: f64,
    pub fractions: PartitionFractions,
    pub grid: ModulationGrid,
    pub fer_target: f64,
    pub adaptation_constant: usize,
    /// Catalog manifest; the built-in catalog is generated when absent.
    pub catalog: Option<PathBuf>,
    pub pa_mode: PaMode,
    /// Block sizes of the finite-size rates reported next to the asymptotic one.
    pub finite_blocks: Vec<u64>,
    pub max_iters: usize,
    pub seed: u64,
    pub session_id: String,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            loss_db: 5.0,
            pulses: 1_000_000,
            block_pulses: 1 << 18,
            rep_rate: 1e6,
            detector: Detector::exact(0.552, 0.015),
            xi_true: 0.005,
            xi_prior: 0.0,
            eps: DEFAULT_EPSILON,
            fractions: PartitionFractions::default(),
            grid: ModulationGrid::default(),
            fer_target: 0.1,
            adaptation_constant: 0,
            catalog: None,
            pa_mode: PaMode::Asymptotic,
            finite_blocks: vec![1_000_000_000, 100_000_000],
            max_iters: 200,
            seed: 0,
            session_id: "session".to_string(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("bad value '{value}' for {key}"))
}

/// Accepts plain integers and scientific notation such as `1e6`.
fn parse_count(key: &str, value: &str) -> Result<u64, String> {
    if let Ok(v) = value.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = parse_num(key, value)?;
    if f >= 0.0 && f.fract() == 0.0 && f < 1.8e19 {
        Ok(f as u64)
    } else {
        Err(format!("{key} must be a non-negative integer, got '{value}'"))
    }
}

impl SessionConfig {
    /// Applies one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        match key {
            "loss_db" => self.loss_db = parse_num(key, value)?,
            "distance_km" => {
                self.loss_db = km_to_db(parse_num(key, value)?, DEFAULT_FIBER_LOSS_DB_PER_KM).map_err(|e| e.to_string())?
            }
            "pulses" => self.pulses = parse_count(key, value)? as usize,
            "block_pulses" => self.block_pulses = parse_count(key, value)? as usize,
            "rep_rate" => self.rep_rate = parse_num(key, value)?,
            "eta" => self.detector.eta = parse_num(key, value)?,
            "v_el" => self.detector.v_el = parse_num(key, value)?,
            "delta_eta" => self.detector.uncertainty.delta_eta = parse_num(key, value)?,
            "delta_v_el" => self.detector.uncertainty.delta_v_el = parse_num(key, value)?,
            "xi_true" => self.xi_true = parse_num(key, value)?,
            "xi_prior" => self.xi_prior = parse_num(key, value)?,
            "eps" => self.eps = parse_num(key, value)?,
            "shot_noise_fraction" => self.fractions.shot_noise = parse_num(key, value)?,
            "param_est_fraction" => self.fractions.param_est = parse_num(key, value)?,
            "grid_truncation" => self.grid.truncation = parse_num(key, value)?,
            "grid_bits" => self.grid.bits = parse_num(key, value)?,
            "fer_target" => self.fer_target = parse_num(key, value)?,
            "adaptation_constant" => self.adaptation_constant = parse_count(key, value)? as usize,
            "catalog" => self.catalog = (!value.is_empty()).then(|| PathBuf::from(value)),
            "pa_mode" => {
                self.pa_mode = match value {
                    "asymptotic" => PaMode::Asymptotic,
                    "finite" => PaMode::Finite,
                    _ => return Err(format!("pa_mode must be asymptotic or finite, got '{value}'")),
                }
            }
            "finite_blocks" => {
                self.finite_blocks = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_count(key, s))
                    .collect::<Result<_, _>>()?
            }
            "max_iters" => self.max_iters = parse_count(key, value)? as usize,
            "seed" => self.seed = parse_count(key, value)?,
            "session_id" => self.session_id = value.to_string(),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R, path: &Path) -> LabResult<Self> {
        let mut cfg = Self::default();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| LabError::io(path, e))?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| LabError::parse(path, i + 1, "expected key = value"))?;
            cfg.set(k.trim(), v).map_err(|msg| LabError::parse(path, i + 1, msg))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        Self::read(open(path)?, path)
    }

    pub fn transmittance(&self) -> f64 {
        db_to_transmittance(self.loss_db).unwrap_or(0.0)
    }

    pub fn validate(&self) -> LabResult<()> {
        let bad = |m: &str| Err(LabError::Config(m.to_string()));
        if !(self.loss_db >= 0.0 && self.loss_db.is_finite()) {
            return bad("loss_db must be non-negative");
        }
        if self.pulses == 0 || self.block_pulses == 0 {
            return bad("pulses and block_pulses must be positive");
        }
        if !(self.rep_rate > 0.0) {
            return bad("rep_rate must be positive");
        }
        if !(self.xi_true >= 0.0) || !(self.xi_prior >= 0.0) {
            return bad("excess noise must be non-negative");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad("eps must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.fer_target) {
            return bad("fer_target must lie in [0, 1)");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if self.finite_blocks.iter().any(|&n| n < 4) {
            return bad("finite block sizes must be at least 4");
        }
        let u: DeviceUncertainty = self.detector.uncertainty;
        u.validate(self.detector.eta).map_err(|e| LabError::Config(e.to_string()))?;
        if !(self.detector.eta > 0.0 && self.detector.eta <= 1.0 && self.detector.v_el >= 0.0) {
            return bad("detector requires 0 < eta <= 1 and v_el >= 0");
        }
        self.fractions.validate().map_err(|e| LabError::Config(e.to_string()))?;
        self.grid.validate().map_err(|e| LabError::Config(e.to_string()))?;
        if self.fractions.key_fraction() <= 0.0 {
            return bad("partition leaves no key pulses");
        }
        Ok(())
    }
}
