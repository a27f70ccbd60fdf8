//! End-to-end sessions: simulate, sift, estimate, select a code and variance,
//! reconcile with MDR and BP, verify, and compress with a Toeplitz hash.
//!
//! Pulses are processed in estimation blocks. Block `b` is modulated with the
//! variance selected from the estimates of block `b - 1` (the first block uses the
//! nominal loss and `xi_prior`). Key symbols are pooled per code and cut into
//! frames; frames decode in parallel and are reduced in index order.

use cvqkd_core::estimation::{estimate_channel, estimate_shot_noise, worst_case_bounds, ChannelEstimate, WorstCaseBounds};
use cvqkd_core::gf2::pack_bits;
use cvqkd_core::keyrate::{
    delta_n_with, holevo_bound, rate_asymptotic, rate_finite, select_code_and_va, FiniteSizeParams, RateMode,
    DEFAULT_DELTA_CONSTANT, V_A_RANGE,
};
use cvqkd_core::ldpc::{
    adapt_rate, compute_syndrome, verify_blocks, BlockAccounting, BpConfig, BpDecoder, RateAdaptation,
    SparseParityCheck, Verdict, HASH_BITS, LLR_CLAMP,
};
use cvqkd_core::mdr::{encode_blocks, mdr_llrs, MdrMessage};
use cvqkd_core::model::ProtocolParams;
use cvqkd_core::privamp::{compute_final_length, toeplitz_hash_packed, ToeplitzSeed};
use cvqkd_core::rng::{fair_bit, stream};
use cvqkd_core::simulator::{channel_chunk, modulation_chunk, roles_chunk, sift_and_partition, PulseFrame, CHUNK_LEN};
use rayon::prelude::*;

use crate::catalog::Catalog;
use crate::config::{PaMode, SessionConfig};
use crate::error::{LabError, LabResult};
use crate::io::csv::{num, CsvTable};
use crate::io::keyfile::KeySidecar;

const D_MODULATION: u64 = 1;
const D_ROLES: u64 = 2;
const D_CHANNEL: u64 = 3;
const D_BITS: u64 = 4;
const D_VERIFY: u64 = 5;
const D_TOEPLITZ: u64 = 6;
const D_ADAPT: u64 = 7;

/// Independent 64-bit seed for `(domain, index)` under `seed` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(domain.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Simulates `n` pulses at variance `v_a`, chunks in parallel.
pub fn simulate_block(n: usize, v_a: f64, cfg: &SessionConfig, seed: u64) -> LabResult<Vec<PulseFrame>> {
    let params = ProtocolParams {
        v_a,
        t: cfg.transmittance(),
        xi: cfg.xi_true,
        eta: cfg.detector.eta,
        v_el: cfg.detector.v_el,
        beta: 1.0,
    };
    params.validate()?;
    cfg.grid.validate()?;
    cfg.fractions.validate()?;
    let (s_mod, s_roles, s_ch) = (
        derive_seed(seed, D_MODULATION, 0),
        derive_seed(seed, D_ROLES, 0),
        derive_seed(seed, D_CHANNEL, 0),
    );
    let chunks = n.div_ceil(CHUNK_LEN);
    let symbols: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| modulation_chunk(n, v_a, Some(&cfg.grid), s_mod, c))
        .collect();
    let roles: Vec<_> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| roles_chunk(n, &cfg.fractions, s_roles, c))
        .collect();
    Ok((0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| channel_chunk(&symbols, &roles, &params, s_ch, c))
        .collect())
}

/// Per-block estimation record.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRecord {
    pub block_id: usize,
    pub pulses: usize,
    pub v_a: f64,
    /// Catalog code reconciling this block's key symbols, if any was feasible.
    pub code_index: Option<usize>,
    pub key_symbols: usize,
    pub pe_symbols: usize,
    pub shot_noise_symbols: usize,
    pub n0_hat: Option<f64>,
    pub estimate: Option<ChannelEstimate>,
    pub bounds: Option<WorstCaseBounds>,
    /// Adversary information per symbol charged at privacy amplification.
    pub chi: Option<f64>,
}

/// Bit and symbol budget of a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Accounting {
    pub pulses: u64,
    pub shot_noise_pulses: u64,
    pub pe_pulses: u64,
    pub key_pulses: u64,
    /// Key symbols of blocks that failed estimation or had no feasible code.
    pub skipped_symbols: u64,
    /// Pooled symbols that did not fill a frame or an 8-block.
    pub tail_symbols: u64,
    pub reconciled_symbols: u64,
    pub punctured_bits: u64,
    /// Bob's random bits over all frames: channel plus punctured positions.
    pub key_material: u64,
    pub discarded_bits: u64,
    pub n_corrected: u64,
    pub leak_total: u64,
    /// Leak subtracted from the corrected bits, at most `n_corrected`.
    pub leak_charged: u64,
    /// Bits removed by privacy amplification beyond the leak.
    pub privacy_compressed: u64,
    pub final_key_bits: u64,
}

impl Accounting {
    /// Every pulse and bit is assigned to exactly one bucket.
    pub fn balanced(&self) -> bool {
        self.pulses == self.shot_noise_pulses + self.pe_pulses + self.key_pulses
            && self.key_pulses == self.skipped_symbols + self.tail_symbols + self.reconciled_symbols
            && self.key_material == self.reconciled_symbols + self.punctured_bits
            && self.key_material == self.discarded_bits + self.n_corrected
            && self.n_corrected == self.leak_charged + self.privacy_compressed + self.final_key_bits
    }
}

/// Classical-channel traffic in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassicalVolume {
    /// MDR messages, 8 little-endian f64 per 8 symbols.
    pub mdr_bytes: u64,
    pub syndrome_bytes: u64,
    pub hash_bytes: u64,
    /// Bob's quadrature choices, one bit per pulse.
    pub sifting_bytes: u64,
    /// Disclosed estimation pairs, two f64 each.
    pub pe_bytes: u64,
}

impl ClassicalVolume {
    pub fn total(&self) -> u64 {
        self.mdr_bytes + self.syndrome_bytes + self.hash_bytes + self.sifting_bytes + self.pe_bytes
    }
}

/// Rate of one security analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRate {
    pub label: String,
    /// Secret bits per sifted key symbol.
    pub bits_per_symbol: f64,
    /// `bits_per_symbol * key fraction * (1 - FER) * rep_rate`, floored at zero.
    pub bits_per_second: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionReport {
    pub session_id: String,
    pub seed: u64,
    pub loss_db: f64,
    pub pulses: usize,
    pub rep_rate: f64,
    pub blocks: Vec<BlockRecord>,
    pub estimation_failures: usize,
    pub diagnostics: Vec<String>,
    /// Estimate over the estimation pairs of all blocks.
    pub session_estimate: Option<ChannelEstimate>,
    pub frames: usize,
    pub frame_errors: usize,
    /// Measured FER, or the configured target when no frame was decoded.
    pub fer: f64,
    pub fer_measured: bool,
    pub mean_iterations: f64,
    pub accounting: Accounting,
    pub pa_mode: PaMode,
    pub chi_pa: f64,
    pub delta_pa: f64,
    pub toeplitz_seed: u64,
    pub final_key_len: u64,
    pub alice_key: Vec<u8>,
    pub bob_key: Vec<u8>,
    pub keys_identical: bool,
    pub key_fraction: f64,
    /// Share of pulses that ended up as key symbols.
    pub usable_fraction: f64,
    pub rates: Vec<ModeRate>,
    pub classical: ClassicalVolume,
}

impl SessionReport {
    pub fn rate(&self, label: &str) -> Option<&ModeRate> {
        self.rates.iter().find(|r| r.label == label)
    }

    /// Per-block estimation rows.
    pub fn estimates_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["block_id", "m", "t_hat", "sigma2_hat", "xi_hat", "t_min", "xi_max", "eps_pe"]);
        for b in &self.blocks {
            let (Some(e), Some(w)) = (b.estimate, b.bounds) else { continue };
            t.push(vec![
                b.block_id.to_string(),
                e.m.to_string(),
                num(e.t_hat),
                num(e.sigma2_hat),
                num(e.xi_hat),
                num(w.t_min),
                num(w.xi_max),
                num(w.eps_pe),
            ]);
        }
        t
    }

    pub fn sidecar(&self) -> KeySidecar {
        KeySidecar {
            session_id: self.session_id.clone(),
            l_out: self.final_key_len,
            seed: self.toeplitz_seed,
            n_corrected: self.accounting.n_corrected,
            leak_ec: self.accounting.leak_charged,
            frames_used: (self.frames - self.frame_errors) as u64,
            frames_discarded: self.frame_errors as u64,
        }
    }

    /// Flat `key = value` summary.
    pub fn to_text(&self) -> String {
        let a = &self.accounting;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s += &format!("{k} = {v}\n");
        kv("session_id", self.session_id.clone());
        kv("seed", self.seed.to_string());
        kv("loss_db", num(self.loss_db));
        kv("pulses", self.pulses.to_string());
        kv("rep_rate", num(self.rep_rate));
        kv("blocks", self.blocks.len().to_string());
        kv("estimation_failures", self.estimation_failures.to_string());
        if let Some(e) = self.session_estimate {
            kv("t_hat", num(e.t_hat));
            kv("xi_hat", num(e.xi_hat));
            kv("sigma2_hat", num(e.sigma2_hat));
        }
        let v_a: Vec<String> = self.blocks.iter().map(|b| format!("{:.4}", b.v_a)).collect();
        kv("v_a_trace", v_a.join(","));
        kv("frames", self.frames.to_string());
        kv("frame_errors", self.frame_errors.to_string());
        kv("fer", num(self.fer));
        kv("fer_measured", self.fer_measured.to_string());
        kv("mean_iterations", num(self.mean_iterations));
        kv("key_pulses", a.key_pulses.to_string());
        kv("reconciled_symbols", a.reconciled_symbols.to_string());
        kv("n_corrected", a.n_corrected.to_string());
        kv("leak_total", a.leak_total.to_string());
        kv("discarded_bits", a.discarded_bits.to_string());
        kv("privacy_compressed", a.privacy_compressed.to_string());
        kv("accounting_balanced", a.balanced().to_string());
        kv("pa_mode", format!("{:?}", self.pa_mode).to_lowercase());
        kv("chi_pa", num(self.chi_pa));
        kv("delta_pa", num(self.delta_pa));
        kv("toeplitz_seed", self.toeplitz_seed.to_string());
        kv("final_key_len", self.final_key_len.to_string());
        kv("keys_identical", self.keys_identical.to_string());
        kv("usable_fraction", num(self.usable_fraction));
        for r in &self.rates {
            kv(&format!("rate_{}_bits_per_symbol", r.label), num(r.bits_per_symbol));
            kv(&format!("rate_{}_bits_per_second", r.label), num(r.bits_per_second));
        }
        kv("classical_bytes", self.classical.total().to_string());
        for d in &self.diagnostics {
            kv("diagnostic", d.clone());
        }
        s
    }
}

/// Key symbols awaiting reconciliation with one code.
#[derive(Default)]
struct Pool {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Block of every 8-symbol group.
    group_block: Vec<usize>,
}

struct FrameJob<'a> {
    global: u64,
    code_index: usize,
    x: &'a [f64],
    y: &'a [f64],
    groups: &'a [usize],
}

struct FrameResult {
    code_index: usize,
    passed: bool,
    iterations: usize,
    alice: Vec<u8>,
    bob: Vec<u8>,
    chi_sum: f64,
    symbols: usize,
    llr: Vec<f64>,
}

/// Bob's encoding and Alice's decoding of one frame.
fn run_frame(
    job: &FrameJob,
    code: &SparseParityCheck,
    adapt: &RateAdaptation,
    blocks: &[BlockRecord],
    bp: &BpConfig,
    seed: u64,
    dec: &mut BpDecoder,
) -> LabResult<FrameResult> {
    let mut rng = stream(derive_seed(seed, D_BITS, job.global), 0);
    let u: Vec<u8> = (0..code.n())
        .map(|i| if adapt.is_shortened(i) { 0 } else { fair_bit(&mut rng) as u8 })
        .collect();
    let u_ch: Vec<u8> = adapt.channel_positions().map(|i| u[i]).collect();
    let msgs = encode_blocks(job.y, &u_ch)?;
    let wire: Vec<[f64; 8]> = msgs.iter().map(MdrMessage::to_wire).collect();
    let syndrome = compute_syndrome(&u, code)?;

    let mut llr = Vec::with_capacity(job.x.len());
    let mut chi_sum = 0.0;
    for ((xg, w), &b) in job.x.chunks_exact(8).zip(&wire).zip(job.groups) {
        let e = blocks[b].estimate.expect("pooled blocks carry estimates");
        let msg = MdrMessage::from_wire(w)?;
        llr.extend_from_slice(&mdr_llrs(xg.try_into().expect("8-block"), &msg, e.sigma2_hat, e.t_slope)?);
        chi_sum += 8.0 * blocks[b].chi.expect("pooled blocks carry chi");
    }
    let r = dec.decode(code, &adapt.expand_llrs(&llr)?, &syndrome, bp)?;
    let alice = adapt.key_bits(&r.bits);
    let bob = adapt.key_bits(&u);
    let verdict = verify_blocks(&alice, &bob, derive_seed(seed, D_VERIFY, job.global))?;
    Ok(FrameResult {
        code_index: job.code_index,
        passed: r.converged && verdict == Verdict::Pass,
        iterations: r.iterations,
        alice,
        bob,
        chi_sum,
        symbols: job.x.len(),
        llr,
    })
}

fn adaptation_for(code: &SparseParityCheck, constant: usize, seed: u64, index: usize) -> LabResult<RateAdaptation> {
    if constant == 0 {
        return Ok(RateAdaptation::none(code.n()));
    }
    Ok(adapt_rate(code, code.design_rate(), constant, derive_seed(seed, D_ADAPT, index as u64))?)
}

/// Adversary information per symbol for one block under the PA analysis.
fn block_chi(
    cfg: &SessionConfig,
    est: &ChannelEstimate,
    v_a: f64,
    beta: f64,
    key: usize,
    m: usize,
) -> LabResult<f64> {
    match cfg.pa_mode {
        PaMode::Asymptotic => Ok(holevo_bound(&ProtocolParams {
            v_a,
            t: est.t_hat.min(1.0),
            xi: est.xi_physical(),
            eta: cfg.detector.eta,
            v_el: cfg.detector.v_el,
            beta,
        })?),
        PaMode::Finite => {
            let fs = FiniteSizeParams {
                n_total: (key + m) as u64,
                n_key: key as u64,
                m_pe: m as u64,
                eps_pe: cfg.eps,
                eps_pa: cfg.eps,
                eps_bar: cfg.eps,
                eps_total: cfg.eps,
                delta_constant: DEFAULT_DELTA_CONSTANT,
            };
            Ok(rate_finite(est, &fs, &cfg.detector, v_a, beta)?.chi_worst)
        }
    }
}

/// Runs a full session against `catalog`.
pub fn run_session(cfg: &SessionConfig, catalog: &Catalog) -> LabResult<SessionReport> {
    cfg.validate()?;
    if catalog.entries.is_empty() {
        return Err(LabError::Config("empty code catalog".into()));
    }
    let descriptors = catalog.descriptors();
    let adapts = catalog
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| adaptation_for(&e.code, cfg.adaptation_constant, cfg.seed, i))
        .collect::<LabResult<Vec<_>>>()?;
    for a in &adapts {
        if a.channel_count() % 8 != 0 {
            return Err(LabError::Config("channel positions per frame must be a multiple of 8".into()));
        }
    }
    let select_mode = RateMode::Asymptotic;
    let mut diagnostics = Vec::new();
    let mut selection =
        match select_code_and_va(&descriptors, cfg.transmittance(), cfg.xi_prior, &cfg.detector, &select_mode) {
            Ok(s) => Some(s),
            Err(e) => {
                diagnostics.push(format!("block 0: {e}"));
                None
            }
        };

    let mut acc = Accounting {
        pulses: cfg.pulses as u64,
        ..Accounting::default()
    };
    let mut pools: Vec<Pool> = (0..catalog.entries.len()).map(|_| Pool::default()).collect();
    let mut blocks = Vec::new();
    let mut pe_x = Vec::new();
    let mut pe_y = Vec::new();
    let mut estimation_failures = 0;
    let mut va_weighted = (0.0, 0usize);

    let n_blocks = cfg.pulses.div_ceil(cfg.block_pulses);
    for b in 0..n_blocks {
        let n = cfg.block_pulses.min(cfg.pulses - b * cfg.block_pulses);
        let v_a = selection.map_or(V_A_RANGE.1, |s| s.v_a);
        let code_index = selection.map(|s| s.index);
        let frames = simulate_block(n, v_a, cfg, derive_seed(cfg.seed, 0, b as u64))?;
        let sifted = sift_and_partition(&frames);
        drop(frames);
        let (key, pe, sn) = (sifted.key.len(), sifted.param_est.len(), sifted.shot_noise.len());
        acc.key_pulses += key as u64;
        acc.pe_pulses += pe as u64;
        acc.shot_noise_pulses += sn as u64;

        let n0_hat = estimate_shot_noise(&sifted.shot_noise, cfg.detector.v_el).ok();
        let estimate = estimate_channel(&sifted.param_est.alice, &sifted.param_est.bob, cfg.detector.eta, cfg.detector.v_el);
        let mut record = BlockRecord {
            block_id: b,
            pulses: n,
            v_a,
            code_index,
            key_symbols: key,
            pe_symbols: pe,
            shot_noise_symbols: sn,
            n0_hat,
            estimate: None,
            bounds: None,
            chi: None,
        };
        match estimate {
            Ok(est) => {
                record.estimate = Some(est);
                record.bounds = worst_case_bounds(&est, v_a, cfg.detector.eta, cfg.detector.v_el, cfg.eps).ok();
                pe_x.extend_from_slice(&sifted.param_est.alice);
                pe_y.extend_from_slice(&sifted.param_est.bob);
                let beta = code_index.map_or(1.0, |i| descriptors[i].efficiency().min(1.0));
                match block_chi(cfg, &est, v_a, beta, key, pe) {
                    Ok(chi) => record.chi = Some(chi),
                    Err(e) => diagnostics.push(format!("block {b}: {e}")),
                }
                match select_code_and_va(&descriptors, est.t_hat, est.xi_hat, &cfg.detector, &select_mode) {
                    Ok(s) => selection = Some(s),
                    Err(e) => {
                        diagnostics.push(format!("block {}: {e}", b + 1));
                        selection = None;
                    }
                }
            }
            Err(e) => {
                estimation_failures += 1;
                diagnostics.push(format!("block {b}: {e}"));
            }
        }

        match (code_index, record.chi) {
            (Some(i), Some(_)) => {
                let usable = key - key % 8;
                let pool = &mut pools[i];
                pool.x.extend_from_slice(&sifted.key.alice[..usable]);
                pool.y.extend_from_slice(&sifted.key.bob[..usable]);
                pool.group_block.extend(std::iter::repeat(b).take(usable / 8));
                acc.tail_symbols += (key - usable) as u64;
                va_weighted.0 += v_a * usable as f64;
                va_weighted.1 += usable;
            }
            _ => acc.skipped_symbols += key as u64,
        }
        blocks.push(record);
    }

    // cut pools into frames
    let mut jobs = Vec::new();
    for (i, pool) in pools.iter().enumerate() {
        let ch = adapts[i].channel_count();
        let full = pool.x.len() / ch;
        for f in 0..full {
            let r = f * ch..(f + 1) * ch;
            jobs.push(FrameJob {
                global: jobs.len() as u64,
                code_index: i,
                x: &pool.x[r.clone()],
                y: &pool.y[r],
                groups: &pool.group_block[f * ch / 8..(f + 1) * ch / 8],
            });
        }
        acc.tail_symbols += (pool.x.len() - full * ch) as u64;
    }
    let bp = BpConfig {
        max_iters: cfg.max_iters,
        llr_clamp: LLR_CLAMP,
    };
    let results = jobs
        .par_iter()
        .map_init(BpDecoder::new, |dec, job| {
            let e = &catalog.entries[job.code_index];
            run_frame(job, &e.code, &adapts[job.code_index], &blocks, &bp, cfg.seed, dec)
        })
        .collect::<LabResult<Vec<_>>>()?;

    let mut classical = ClassicalVolume {
        sifting_bytes: (cfg.pulses as u64).div_ceil(8),
        pe_bytes: 16 * acc.pe_pulses,
        ..ClassicalVolume::default()
    };
    let mut alice_bits = Vec::new();
    let mut bob_bits = Vec::new();
    let (mut chi_sum, mut n_symbols, mut frame_errors, mut iterations) = (0.0, 0u64, 0usize, 0usize);
    for r in &results {
        let book = BlockAccounting::new(&catalog.entries[r.code_index].code, &adapts[r.code_index]);
        acc.reconciled_symbols += book.channel_symbols();
        acc.punctured_bits += book.p_count;
        acc.key_material += book.key_material();
        classical.mdr_bytes += 8 * r.symbols as u64;
        classical.syndrome_bytes += book.m_rows.div_ceil(8);
        classical.hash_bytes += HASH_BITS / 8;
        iterations += r.iterations;
        if r.passed {
            acc.n_corrected += book.key_material();
            acc.leak_total += book.leak();
            alice_bits.extend_from_slice(&r.alice);
            bob_bits.extend_from_slice(&r.bob);
            chi_sum += r.chi_sum;
            n_symbols += r.symbols as u64;
        } else {
            frame_errors += 1;
            acc.discarded_bits += book.key_material();
        }
    }

    let chi_pa = if n_symbols > 0 { chi_sum / n_symbols as f64 } else { 0.0 };
    let delta_pa = match cfg.pa_mode {
        PaMode::Asymptotic => 0.0,
        PaMode::Finite if n_symbols > 0 => delta_n_with(DEFAULT_DELTA_CONSTANT, n_symbols, cfg.eps, cfg.eps),
        PaMode::Finite => 0.0,
    };
    let l_out = compute_final_length(acc.n_corrected, acc.leak_total, chi_pa, delta_pa, n_symbols);
    acc.leak_charged = acc.leak_total.min(acc.n_corrected);
    acc.final_key_bits = l_out;
    acc.privacy_compressed = acc.n_corrected - acc.leak_charged - l_out;

    let toeplitz_seed = derive_seed(cfg.seed, D_TOEPLITZ, 0);
    let (alice_key, bob_key) = if l_out > 0 {
        let seed = ToeplitzSeed::new(toeplitz_seed, acc.n_corrected as usize, l_out as usize)?;
        let (a, b) = rayon::join(
            || toeplitz_hash_packed(&pack_bits(&alice_bits), &seed),
            || toeplitz_hash_packed(&pack_bits(&bob_bits), &seed),
        );
        (to_bytes(&a?, l_out as usize), to_bytes(&b?, l_out as usize))
    } else {
        (Vec::new(), Vec::new())
    };

    let frames = results.len();
    let fer_measured = frames > 0;
    let fer = if fer_measured { frame_errors as f64 / frames as f64 } else { cfg.fer_target };
    let mean_iterations = if frames > 0 { iterations as f64 / frames as f64 } else { 0.0 };
    let session_estimate = estimate_channel(&pe_x, &pe_y, cfg.detector.eta, cfg.detector.v_el).ok();
    let key_fraction = cfg.fractions.key_fraction();
    let v_a_mean = if va_weighted.1 > 0 { va_weighted.0 / va_weighted.1 as f64 } else { blocks.last().map_or(1.0, |b| b.v_a) };
    let dominant = dominant_code(&blocks);
    let beta = dominant.map_or(1.0, |i| descriptors[i].efficiency().min(1.0));
    let rates = match session_estimate {
        Some(est) => session_rates(cfg, &est, v_a_mean, beta, fer, key_fraction, &mut diagnostics),
        None => Vec::new(),
    };

    Ok(SessionReport {
        session_id: cfg.session_id.clone(),
        seed: cfg.seed,
        loss_db: cfg.loss_db,
        pulses: cfg.pulses,
        rep_rate: cfg.rep_rate,
        blocks,
        estimation_failures,
        diagnostics,
        session_estimate,
        frames,
        frame_errors,
        fer,
        fer_measured,
        mean_iterations,
        accounting: acc,
        pa_mode: cfg.pa_mode,
        chi_pa,
        delta_pa,
        toeplitz_seed,
        final_key_len: l_out,
        keys_identical: alice_key == bob_key,
        alice_key,
        bob_key,
        key_fraction,
        usable_fraction: acc.key_pulses as f64 / cfg.pulses as f64,
        rates,
        classical,
    })
}

fn dominant_code(blocks: &[BlockRecord]) -> Option<usize> {
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for b in blocks.iter().filter(|b| b.chi.is_some()) {
        if let Some(i) = b.code_index {
            match counts.iter_mut().find(|c| c.0 == i) {
                Some(c) => c.1 += b.key_symbols,
                None => counts.push((i, b.key_symbols)),
            }
        }
    }
    counts.into_iter().max_by_key(|c| c.1).map(|c| c.0)
}

/// Asymptotic and finite-size rates at the session estimate.
fn session_rates(
    cfg: &SessionConfig,
    est: &ChannelEstimate,
    v_a: f64,
    beta: f64,
    fer: f64,
    key_fraction: f64,
    diagnostics: &mut Vec<String>,
) -> Vec<ModeRate> {
    let scale = key_fraction * (1.0 - fer) * cfg.rep_rate;
    let mut out = Vec::new();
    let p = ProtocolParams {
        v_a,
        t: est.t_hat.min(1.0),
        xi: est.xi_physical(),
        eta: cfg.detector.eta,
        v_el: cfg.detector.v_el,
        beta,
    };
    match rate_asymptotic(&p) {
        Ok(r) => out.push(ModeRate {
            label: "asymptotic".into(),
            bits_per_symbol: r,
            bits_per_second: r.max(0.0) * scale,
        }),
        Err(e) => diagnostics.push(format!("asymptotic rate: {e}")),
    }
    for &n in &cfg.finite_blocks {
        let fs = FiniteSizeParams::split_half(n, cfg.eps);
        let scaled = ChannelEstimate { m: fs.m_pe, ..*est };
        let label = format!("fin_{}", block_label(n));
        match rate_finite(&scaled, &fs, &cfg.detector, v_a, beta) {
            Ok(r) => {
                let per_symbol = r.rate * fs.n_total as f64 / fs.n_key as f64;
                out.push(ModeRate {
                    label,
                    bits_per_symbol: per_symbol,
                    bits_per_second: per_symbol.max(0.0) * scale,
                });
            }
            Err(e) => diagnostics.push(format!("{label} rate: {e}")),
        }
    }
    out
}

/// `1e9` style label for powers of ten, the plain count otherwise.
pub fn block_label(n: u64) -> String {
    let mut e = 0;
    let mut m = n;
    while m >= 10 && m % 10 == 0 {
        m /= 10;
        e += 1;
    }
    if m == 1 && e > 0 {
        format!("1e{e}")
    } else {
        n.to_string()
    }
}

fn to_bytes(words: &[u64], bits: usize) -> Vec<u8> {
    let mut out: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
    out.truncate(bits.div_ceil(8));
    out
}

/// Outcome of reconciling the key frames of a saved pulse file with one code.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeSummary {
    pub estimate: ChannelEstimate,
    pub snr_hat: f64,
    pub frames: usize,
    pub frame_errors: usize,
    pub r_eff: f64,
    /// Alice's channel LLRs, frame after frame.
    pub llrs: Vec<f64>,
}

/// Standalone reconciliation of saved frames: sift, estimate, then MDR and BP over
/// as many full frames of `code_index` as the key symbols allow.
pub fn decode_saved(frames: &[PulseFrame], catalog: &Catalog, code_index: usize, cfg: &SessionConfig) -> LabResult<DecodeSummary> {
    let entry = catalog
        .entries
        .get(code_index)
        .ok_or_else(|| LabError::Config(format!("code index {code_index} out of range")))?;
    let sifted = sift_and_partition(frames);
    let est = estimate_channel(&sifted.param_est.alice, &sifted.param_est.bob, cfg.detector.eta, cfg.detector.v_el)
        .map_err(|e| LabError::Estimation(e.to_string()))?;
    let adapt = adaptation_for(&entry.code, cfg.adaptation_constant, cfg.seed, code_index)?;
    let ch = adapt.channel_count();
    let full = sifted.key.len() / ch;
    let blocks = vec![BlockRecord {
        block_id: 0,
        pulses: frames.len(),
        v_a: 0.0,
        code_index: Some(code_index),
        key_symbols: sifted.key.len(),
        pe_symbols: sifted.param_est.len(),
        shot_noise_symbols: sifted.shot_noise.len(),
        n0_hat: None,
        estimate: Some(est),
        bounds: None,
        chi: Some(0.0),
    }];
    let groups = vec![0usize; ch / 8];
    let bp = BpConfig {
        max_iters: cfg.max_iters,
        llr_clamp: LLR_CLAMP,
    };
    let results = (0..full)
        .into_par_iter()
        .map_init(BpDecoder::new, |dec, f| {
            let r = f * ch..(f + 1) * ch;
            let job = FrameJob {
                global: f as u64,
                code_index,
                x: &sifted.key.alice[r.clone()],
                y: &sifted.key.bob[r],
                groups: &groups,
            };
            run_frame(&job, &entry.code, &adapt, &blocks, &bp, cfg.seed, dec)
        })
        .collect::<LabResult<Vec<_>>>()?;
    Ok(DecodeSummary {
        estimate: est,
        snr_hat: est.t_slope * est.t_slope * variance(&sifted.param_est.alice) / est.sigma2_hat,
        frames: full,
        frame_errors: results.iter().filter(|r| !r.passed).count(),
        r_eff: adapt.effective_rate(&entry.code),
        llrs: results.into_iter().flat_map(|r| r.llr).collect(),
    })
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len().max(1) as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use cvqkd_core::simulator::{assign_roles, channel_and_detect, generate_modulation};

    #[test]
    fn parallel_simulation_matches_serial() {
        let cfg = SessionConfig::default();
        let n = 3 * CHUNK_LEN + 17;
        let par = simulate_block(n, 4.0, &cfg, 9).unwrap();
        let symbols = generate_modulation(n, 4.0, &cfg.grid, derive_seed(9, D_MODULATION, 0)).unwrap();
        let roles = assign_roles(n, &cfg.fractions, derive_seed(9, D_ROLES, 0)).unwrap();
        let params = ProtocolParams {
            v_a: 4.0,
            t: cfg.transmittance(),
            xi: cfg.xi_true,
            eta: cfg.detector.eta,
            v_el: cfg.detector.v_el,
            beta: 1.0,
        };
        let serial = channel_and_detect(&symbols, &roles, &params, derive_seed(9, D_CHANNEL, 0)).unwrap();
        assert_eq!(par, serial);
    }

    #[test]
    fn derived_seeds_differ() {
        let mut seen = std::collections::HashSet::new();
        for d in 0..8 {
            for i in 0..100 {
                assert!(seen.insert(derive_seed(5, d, i)));
            }
        }
    }

    #[test]
    fn block_labels() {
        assert_eq!(block_label(1_000_000_000), "1e9");
        assert_eq!(block_label(100_000_000), "1e8");
        assert_eq!(block_label(20_000), "20000");
    }

    #[test]
    fn accounting_balance_detects_leaks() {
        let a = Accounting {
            pulses: 10,
            shot_noise_pulses: 5,
            pe_pulses: 2,
            key_pulses: 3,
            skipped_symbols: 3,
            ..Accounting::default()
        };
        assert!(a.balanced());
        assert!(!Accounting { final_key_bits: 1, ..a }.balanced());
    }
}
