use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use cvqkd::catalog::{Catalog, BUILTIN_LOG2_N, BUILTIN_SEED};
use cvqkd::io::csv::CsvTable;
use cvqkd::io::frames::{load_frames, save_frames};
use cvqkd::io::keyfile::save_key;
use cvqkd::io::llr::save_llrs;
use cvqkd::pipeline::{decode_saved, run_session, simulate_block};
use cvqkd::sweep::{frontier, sweep_figure2, sweep_figure3, SweepMode, FIGURE2_MODES};
use cvqkd::{LabError, LabResult, SessionConfig};
use cvqkd_core::estimation::estimate_channel;
use cvqkd_core::gf2::{pack_bits, unpack_bits};
use cvqkd_core::keyrate::{select_code_and_va, RateMode};
use cvqkd_core::privamp::{toeplitz_hash_packed, ToeplitzSeed};
use cvqkd_core::simulator::sift_and_partition;

#[derive(Parser)]
#[command(name = "cvqkd", version, about = "CV-QKD post-processing laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed; every random draw derives from it.
    #[arg(long)]
    seed: u64,
    /// Flat `key = value` session configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set xi_true=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    distance_km: Option<f64>,
    #[arg(long)]
    loss_db: Option<f64>,
    #[arg(long)]
    pulses: Option<String>,
    #[arg(long)]
    xi_true: Option<f64>,
    /// Catalog manifest; the built-in catalog is generated when absent.
    #[arg(long)]
    catalog: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> LabResult<SessionConfig> {
        let mut cfg = match &self.config {
            Some(p) => SessionConfig::load(p)?,
            None => SessionConfig::default(),
        };
        let mut pairs: Vec<(String, String)> = Vec::new();
        if let Some(v) = self.distance_km {
            pairs.push(("distance_km".into(), v.to_string()));
        }
        if let Some(v) = self.loss_db {
            pairs.push(("loss_db".into(), v.to_string()));
        }
        if let Some(v) = &self.pulses {
            pairs.push(("pulses".into(), v.clone()));
        }
        if let Some(v) = self.xi_true {
            pairs.push(("xi_true".into(), v.to_string()));
        }
        if let Some(v) = &self.catalog {
            pairs.push(("catalog".into(), v.display().to_string()));
        }
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| LabError::Config(format!("override '{o}' is not KEY=VALUE")))?;
            pairs.push((k.trim().into(), v.into()));
        }
        pairs.push(("seed".into(), self.seed.to_string()));
        for (k, v) in pairs {
            cfg.set(&k, &v).map_err(LabError::Config)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn catalog_for(cfg: &SessionConfig) -> LabResult<Catalog> {
    match &cfg.catalog {
        Some(p) => Catalog::load(p),
        None => Catalog::builtin(BUILTIN_LOG2_N, BUILTIN_SEED),
    }
}

fn parse_list(s: &str) -> LabResult<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| LabError::Config(format!("bad number '{t}'"))))
        .collect()
}

fn parse_counts(s: &str) -> LabResult<Vec<u64>> {
    parse_list(s)?
        .into_iter()
        .map(|x| {
            if x >= 1.0 && x.fract() == 0.0 {
                Ok(x as u64)
            } else {
                Err(LabError::Config(format!("bad count {x}")))
            }
        })
        .collect()
}

fn write_or_print(table: &CsvTable, out: Option<&Path>) -> LabResult<()> {
    match out {
        Some(p) => table.save(p),
        None => {
            print!("{}", table.to_text());
            Ok(())
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one end-to-end session.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Directory for the report, estimates and keys.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Only simulate the pulses and write them as a frame file.
        #[arg(long)]
        frames_out: Option<PathBuf>,
    },
    /// Key rate against distance.
    SweepRates {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "25,53,80.5")]
        distances: String,
        /// Modes, e.g. `asymptotic,1e9,1e8`.
        #[arg(long, default_value = "asymptotic,1e9,1e8")]
        modes: String,
        #[arg(long, default_value_t = 0.95)]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the excess-noise frontier of the last mode.
        #[arg(long)]
        frontier_out: Option<PathBuf>,
    },
    /// Excess-noise estimates and worst-case bounds per block size.
    SweepNoise {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        v_a: f64,
        #[arg(long, default_value = "1e6,1e8")]
        block_sizes: String,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        #[arg(long, default_value_t = 0.95)]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect or export the code catalog.
    Codes {
        #[command(flatten)]
        common: Common,
        /// Write alist files and a manifest here.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Standalone Toeplitz privacy amplification of a raw bit file.
    Hash {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        input: PathBuf,
        /// Output length in bits.
        #[arg(long)]
        out_bits: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Standalone reconciliation of a saved frame file.
    Decode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        frames: PathBuf,
        /// Code to use; the catalog selection rule decides when absent.
        #[arg(long)]
        code: Option<String>,
        /// Write Alice's LLRs as f32.
        #[arg(long)]
        llr_out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> LabResult<()> {
    match cli.command {
        Command::Simulate { common, out, frames_out } => {
            let cfg = common.config()?;
            let catalog = catalog_for(&cfg)?;
            if let Some(path) = frames_out {
                let sel = select_code_and_va(
                    &catalog.descriptors(),
                    cfg.transmittance(),
                    cfg.xi_prior,
                    &cfg.detector,
                    &RateMode::Asymptotic,
                )?;
                let frames = simulate_block(cfg.pulses, sel.v_a, &cfg, cfg.seed)?;
                save_frames(&frames, &path)?;
                println!("frames = {}\nv_a = {}\ncode = {}", frames.len(), sel.v_a, catalog.entries[sel.index].descriptor.code_id);
                return Ok(());
            }
            let report = run_session(&cfg, &catalog)?;
            print!("{}", report.to_text());
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| LabError::io(&dir, e))?;
                std::fs::write(dir.join("report.txt"), report.to_text()).map_err(|e| LabError::io(&dir, e))?;
                report.estimates_csv().save(&dir.join("estimates.csv"))?;
                save_key(&report.alice_key, &report.sidecar(), &dir.join("key_alice.bin"))?;
                save_key(&report.bob_key, &report.sidecar(), &dir.join("key_bob.bin"))?;
            }
            if !report.blocks.is_empty() && report.estimation_failures == report.blocks.len() {
                return Err(LabError::Estimation("every block failed parameter estimation".into()));
            }
            Ok(())
        }
        Command::SweepRates {
            common,
            distances,
            modes,
            beta,
            out,
            frontier_out,
        } => {
            let cfg = common.config()?;
            let distances = parse_list(&distances)?;
            let modes = if modes.trim().is_empty() {
                FIGURE2_MODES.to_vec()
            } else {
                modes
                    .split(',')
                    .map(str::trim)
                    .map(|m| match m {
                        "asymptotic" => Ok(SweepMode::Asymptotic),
                        n => parse_counts(n).map(|v| SweepMode::Finite(v[0])),
                    })
                    .collect::<LabResult<Vec<_>>>()?
            };
            let sweep = sweep_figure2(&cfg, &distances, &modes, beta)?;
            write_or_print(&sweep.table, out.as_deref())?;
            for row in &sweep.ordering_violations {
                eprintln!("ordering violated at distance {}", distances[*row]);
            }
            if let Some(p) = frontier_out {
                let last = *modes.last().unwrap_or(&SweepMode::Asymptotic);
                frontier(&cfg, &distances, last, beta)?.save(&p)?;
            }
            Ok(())
        }
        Command::SweepNoise {
            common,
            v_a,
            block_sizes,
            reps,
            beta,
            out,
        } => {
            let cfg = common.config()?;
            let sweep = sweep_figure3(&cfg, v_a, &parse_counts(&block_sizes)?, reps, beta)?;
            write_or_print(&sweep.table(), out.as_deref())
        }
        Command::Codes { common, export } => {
            let cfg = common.config()?;
            let catalog = catalog_for(&cfg)?;
            let mut t = CsvTable::new(&["code_id", "n", "m_rows", "rate", "snr_threshold", "efficiency"]);
            for e in &catalog.entries {
                let d = &e.descriptor;
                t.push(vec![
                    d.code_id.clone(),
                    e.code.n().to_string(),
                    e.code.m_rows().to_string(),
                    format!("{:.6}", d.rate),
                    d.snr_threshold.to_string(),
                    format!("{:.4}", d.efficiency()),
                ]);
            }
            print!("{}", t.to_text());
            if let Some(dir) = export {
                catalog.export(&dir)?;
            }
            Ok(())
        }
        Command::Hash {
            seed,
            input,
            out_bits,
            output,
        } => {
            let bytes = std::fs::read(&input).map_err(|e| LabError::io(&input, e))?;
            let n_in = 8 * bytes.len();
            let bits: Vec<u8> = bytes.iter().flat_map(|b| (0..8).map(move |i| (b >> i) & 1)).collect();
            let ts = ToeplitzSeed::new(seed, n_in, out_bits)?;
            let start = Instant::now();
            let out = toeplitz_hash_packed(&pack_bits(&bits), &ts)?;
            let secs = start.elapsed().as_secs_f64();
            let key: Vec<u8> = unpack_bits(&out, out_bits)
                .chunks(8)
                .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (b << i)))
                .collect();
            std::fs::write(&output, key).map_err(|e| LabError::io(&output, e))?;
            println!("n_in = {n_in}\nl_out = {out_bits}\nthroughput_mbps = {:.1}", n_in as f64 / secs / 1e6);
            Ok(())
        }
        Command::Decode {
            common,
            frames,
            code,
            llr_out,
        } => {
            let cfg = common.config()?;
            let catalog = catalog_for(&cfg)?;
            let frames = load_frames(&frames)?;
            let index = match code {
                Some(id) => catalog
                    .entries
                    .iter()
                    .position(|e| e.descriptor.code_id == id)
                    .ok_or_else(|| LabError::Config(format!("unknown code '{id}'")))?,
                None => {
                    let pe = sift_and_partition(&frames).param_est;
                    let est = estimate_channel(&pe.alice, &pe.bob, cfg.detector.eta, cfg.detector.v_el)
                        .map_err(|e| LabError::Estimation(e.to_string()))?;
                    select_code_and_va(&catalog.descriptors(), est.t_hat, est.xi_hat, &cfg.detector, &RateMode::Asymptotic)?
                        .index
                }
            };
            let s = decode_saved(&frames, &catalog, index, &cfg)?;
            println!(
                "code = {}\nsnr_hat = {}\nt_hat = {}\nxi_hat = {}\nframes = {}\nframe_errors = {}\nr_eff = {}",
                catalog.entries[index].descriptor.code_id,
                s.snr_hat,
                s.estimate.t_hat,
                s.estimate.xi_hat,
                s.frames,
                s.frame_errors,
                s.r_eff
            );
            if let Some(p) = llr_out {
                save_llrs(&s.llrs, &p)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
