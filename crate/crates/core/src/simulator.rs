//! Gaussian-modulated coherent states through a lossy, noisy channel into a trusted
//! homodyne detector, plus the role bookkeeping that splits pulses into key,
//! parameter-estimation and shot-noise frames.
//!
//! Long streams are produced in chunks of [`CHUNK_LEN`] frames. Chunk `c` of an
//! operation seeded with `seed` draws from its own stream `(seed, domain, c)`, so
//! chunks can be generated in any order (or in parallel) with identical results.

use alloc::vec::Vec;
use libm::{round, sqrt};
use rand_core::RngCore;

use crate::model::{ProtocolParams, Quadrature};
use crate::rng::{fair_bit, standard_normal, stream, uniform_open};
use crate::{Error, Result};

/// Frames per independently seeded chunk.
pub const CHUNK_LEN: usize = 1 << 16;

const DOMAIN_MODULATION: u64 = 1 << 48;
const DOMAIN_CHANNEL: u64 = 2 << 48;
const DOMAIN_ROLES: u64 = 3 << 48;

/// What a pulse is used for after sifting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Key,
    ParamEst,
    ShotNoise,
}

impl Role {
    pub fn to_u8(self) -> u8 {
        match self {
            Role::Key => 0,
            Role::ParamEst => 1,
            Role::ShotNoise => 2,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Role::Key),
            1 => Some(Role::ParamEst),
            2 => Some(Role::ShotNoise),
            _ => None,
        }
    }
}

/// One simulated pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseFrame {
    pub index: u64,
    pub alice_q: f64,
    pub alice_p: f64,
    /// Quadrature Bob measured (relative phase 0 or pi/2).
    pub phi: Quadrature,
    pub bob_value: f64,
    pub role: Role,
}

impl PulseFrame {
    /// Alice's symbol on the quadrature Bob measured.
    pub fn alice_matching(&self) -> f64 {
        match self.phi {
            Quadrature::Q => self.alice_q,
            Quadrature::P => self.alice_p,
        }
    }
}

/// Truncated, discretized approximation of the Gaussian modulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationGrid {
    /// Half-width of the support, in standard deviations.
    pub truncation: f64,
    /// Quantization bits per quadrature.
    pub bits: u32,
}

impl Default for ModulationGrid {
    fn default() -> Self {
        Self {
            truncation: 7.0,
            bits: 8,
        }
    }
}

impl ModulationGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.truncation >= 5.0) {
            return Err(Error::Domain("truncation must be at least 5 standard deviations"));
        }
        if !(4..=30).contains(&self.bits) {
            return Err(Error::Domain("quantization needs 4 to 30 bits"));
        }
        Ok(())
    }

    /// Distance between adjacent levels for variance `v_a`.
    pub fn step(&self, v_a: f64) -> f64 {
        2.0 * self.truncation * sqrt(v_a) / ((1u64 << self.bits) - 1) as f64
    }

    /// Rounds `x` to the nearest of the `2^bits` uniform levels spanning
    /// `[-truncation * sd, truncation * sd]`.
    pub fn quantize(&self, x: f64, v_a: f64) -> f64 {
        let half = self.truncation * sqrt(v_a);
        let step = self.step(v_a);
        let top = ((1u64 << self.bits) - 1) as f64;
        let k = round((x + half) / step).clamp(0.0, top);
        -half + k * step
    }
}

fn truncated_normal<R: RngCore>(rng: &mut R, sd: f64, truncation: f64) -> f64 {
    loop {
        let z = standard_normal(rng);
        if z.abs() <= truncation {
            return sd * z;
        }
    }
}

fn chunk_bounds(n: usize, chunk: usize) -> (usize, usize) {
    let start = chunk * CHUNK_LEN;
    (start, (start + CHUNK_LEN).min(n))
}

fn chunk_count(n: usize) -> usize {
    n.div_ceil(CHUNK_LEN)
}

/// Modulation symbols `(q, p)` of chunk `chunk`, unquantized when `grid` is `None`
/// (truncation then defaults to the grid default).
pub fn modulation_chunk(
    n: usize,
    v_a: f64,
    grid: Option<&ModulationGrid>,
    seed: u64,
    chunk: usize,
) -> Vec<(f64, f64)> {
    let (start, end) = chunk_bounds(n, chunk);
    let truncation = grid.map_or(ModulationGrid::default().truncation, |g| g.truncation);
    let sd = sqrt(v_a);
    let mut rng = stream(seed, DOMAIN_MODULATION | chunk as u64);
    (start..end)
        .map(|_| {
            let q = truncated_normal(&mut rng, sd, truncation);
            let p = truncated_normal(&mut rng, sd, truncation);
            match grid {
                Some(g) => (g.quantize(q, v_a), g.quantize(p, v_a)),
                None => (q, p),
            }
        })
        .collect()
}

/// Alice's `n` modulation symbols, deterministic in `seed`.
pub fn generate_modulation(n: usize, v_a: f64, grid: &ModulationGrid, seed: u64) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::Domain("need at least one symbol"));
    }
    if !(v_a > 0.0) {
        return Err(Error::Domain("modulation variance must be positive"));
    }
    grid.validate()?;
    Ok((0..chunk_count(n))
        .flat_map(|c| modulation_chunk(n, v_a, Some(grid), seed, c))
        .collect())
}

/// Partition fractions: first the share of all pulses kept for shot-noise
/// calibration, then the share of the remaining signal pulses disclosed for
/// parameter estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionFractions {
    pub shot_noise: f64,
    pub param_est: f64,
}

impl Default for PartitionFractions {
    fn default() -> Self {
        Self {
            shot_noise: 0.5,
            param_est: 0.5,
        }
    }
}

impl PartitionFractions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.shot_noise) || !(0.0..=1.0).contains(&self.param_est) {
            return Err(Error::Domain("fractions must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Expected share of all pulses that end up in the key.
    pub fn key_fraction(&self) -> f64 {
        (1.0 - self.shot_noise) * (1.0 - self.param_est)
    }
}

/// Roles of the pulses in chunk `chunk`.
pub fn roles_chunk(n: usize, fractions: &PartitionFractions, seed: u64, chunk: usize) -> Vec<Role> {
    let (start, end) = chunk_bounds(n, chunk);
    let mut rng = stream(seed, DOMAIN_ROLES | chunk as u64);
    (start..end)
        .map(|_| {
            let a = uniform_open(&mut rng);
            let b = uniform_open(&mut rng);
            if a < fractions.shot_noise {
                Role::ShotNoise
            } else if b < fractions.param_est {
                Role::ParamEst
            } else {
                Role::Key
            }
        })
        .collect()
}

/// Random, value-independent role assignment of `n` pulses.
///
/// Shot-noise pulses must be known before transmission (Alice sends vacuum), so the
/// assignment is drawn up front and consumed by [`channel_and_detect`].
pub fn assign_roles(n: usize, fractions: &PartitionFractions, seed: u64) -> Result<Vec<Role>> {
    fractions.validate()?;
    Ok((0..chunk_count(n))
        .flat_map(|c| roles_chunk(n, fractions, seed, c))
        .collect())
}

/// Channel and detection for chunk `chunk` of the stream.
pub fn channel_chunk(
    symbols: &[(f64, f64)],
    roles: &[Role],
    params: &ProtocolParams,
    seed: u64,
    chunk: usize,
) -> Vec<PulseFrame> {
    let (start, end) = chunk_bounds(symbols.len(), chunk);
    let mut rng = stream(seed, DOMAIN_CHANNEL | chunk as u64);
    let gain = sqrt(params.eta * params.t);
    let signal_sd = sqrt(1.0 + params.v_el + params.eta * params.t * params.xi);
    let vacuum_sd = sqrt(1.0 + params.v_el);
    (start..end)
        .map(|i| {
            let phi = if fair_bit(&mut rng) { Quadrature::P } else { Quadrature::Q };
            let z = standard_normal(&mut rng);
            let role = roles[i];
            let (q, p) = if role == Role::ShotNoise { (0.0, 0.0) } else { symbols[i] };
            let x = match phi {
                Quadrature::Q => q,
                Quadrature::P => p,
            };
            let bob_value = if role == Role::ShotNoise {
                vacuum_sd * z
            } else {
                gain * x + signal_sd * z
            };
            PulseFrame {
                index: i as u64,
                alice_q: q,
                alice_p: p,
                phi,
                bob_value,
                role,
            }
        })
        .collect()
}

/// Sends `symbols` through the channel described by `params` and records Bob's
/// homodyne outcomes.
pub fn channel_and_detect(
    symbols: &[(f64, f64)],
    roles: &[Role],
    params: &ProtocolParams,
    seed: u64,
) -> Result<Vec<PulseFrame>> {
    if symbols.is_empty() {
        return Err(Error::Domain("need at least one symbol"));
    }
    if roles.len() != symbols.len() {
        return Err(Error::LengthMismatch {
            expected: symbols.len(),
            got: roles.len(),
        });
    }
    params.validate()?;
    Ok((0..chunk_count(symbols.len()))
        .flat_map(|c| channel_chunk(symbols, roles, params, seed, c))
        .collect())
}

/// Paired data of one role class after sifting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SiftedSet {
    pub index: Vec<u64>,
    /// Alice's symbol on the quadrature Bob disclosed.
    pub alice: Vec<f64>,
    pub bob: Vec<f64>,
}

impl SiftedSet {
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    fn push(&mut self, f: &PulseFrame) {
        self.index.push(f.index);
        self.alice.push(f.alice_matching());
        self.bob.push(f.bob_value);
    }
}

/// Output of sifting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sifted {
    pub key: SiftedSet,
    pub param_est: SiftedSet,
    /// Bob's outcomes on vacuum pulses.
    pub shot_noise: Vec<f64>,
    /// Bob's quadrature choices on every signal pulse, as announced publicly.
    pub disclosed_phi: Vec<(u64, Quadrature)>,
}

/// Groups frames by role and reduces Alice's record to the quadrature Bob measured.
pub fn sift_and_partition(frames: &[PulseFrame]) -> Sifted {
    let mut out = Sifted::default();
    for f in frames {
        match f.role {
            Role::ShotNoise => out.shot_noise.push(f.bob_value),
            Role::Key => {
                out.disclosed_phi.push((f.index, f.phi));
                out.key.push(f);
            }
            Role::ParamEst => {
                out.disclosed_phi.push((f.index, f.phi));
                out.param_est.push(f);
            }
        }
    }
    out
}
