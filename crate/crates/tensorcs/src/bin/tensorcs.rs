//! Command-line front end.
//!
//! Subcommands take a TOML or JSON config file (chosen by extension). Exit
//! codes: 0 success, 2 invalid input, 3 numerical failure.
//!
//! Sweep CSV columns, in order: grid, trial, design, learner, recon, n,
//! n_hat, m, k, noise_var, t_train, seed, status, mse, psnr, are_final,
//! mse_se, psnr_se, wall_ms.

use clap::{Parser, Subcommand};
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};
use tensorcs::bench::{
    design_for_method, extract_patches, joint_optimize, run_sweep, DesignMethod, ExperimentConfig,
    ReconMethod,
};
use tensorcs::design::DesignConfig;
use tensorcs::dict::{learn, LearnConfig, TrainingSet};
use tensorcs::error::{Error, Result};
use tensorcs::io;
use tensorcs::recon::{debias_ls, fista_bpdn, kron_omp, KronOperator};
use tensorcs::Matrix;

#[derive(Parser)]
#[command(
    name = "tensorcs",
    about = "Tensor compressive sensing: sensing design, dictionary learning, reconstruction and benchmark sweeps",
    long_about = None,
    after_help = "Sweep CSV columns: grid, trial, design, learner, recon, n, n_hat, m, k, \
noise_var, t_train, seed, status, mse, psnr, are_final, mse_se, psnr_se, wall_ms. \
Set TENSORCS_THREADS to cap worker threads."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Path to a TOML (.toml) or JSON (.json) config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file or directory (subcommand-specific).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Design sensing factors for fixed dictionaries.
    Design(Common),
    /// Learn per-mode dictionaries from a training tensor.
    Learn(Common),
    /// Run the joint sensing-design / dictionary-learning driver.
    Joint(Common),
    /// Reconstruct a sparse coefficient tensor from measurements.
    Recon(Common),
    /// Run a Monte-Carlo sweep over a config grid and emit CSV.
    Sweep(Common),
}

fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => {
            toml::from_str(&text).map_err(|e| Error::Format(format!("config parse: {e}")))
        }
        Some("json") => {
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("config parse: {e}")))
        }
        other => Err(Error::invalid(format!(
            "config must be .toml or .json, got {other:?}"
        ))),
    }
}

fn load_matrices(paths: &[PathBuf]) -> Result<Vec<Matrix>> {
    paths.iter().map(|p| io::load_matrix_auto(p)).collect()
}

fn out_dir(out: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn save_factors(dir: &Path, stem: &str, mats: &[Matrix]) -> Result<()> {
    for (i, m) in mats.iter().enumerate() {
        io::save_matrix_auto(&dir.join(format!("{stem}_{i}.csv")), m)?;
    }
    Ok(())
}

fn save_trace(dir: &Path, name: &str, trace: &[f64]) -> Result<()> {
    let col = Matrix::from_fn(trace.len(), 1, |i, _| trace[i]);
    io::save_matrix_auto(&dir.join(format!("{name}.csv")), &col)
}

#[derive(Deserialize)]
struct DesignCmdConfig {
    #[serde(default)]
    method: DesignMethod,
    psis: Vec<PathBuf>,
    m: Vec<usize>,
    #[serde(default)]
    design_cfg: DesignConfig,
    #[serde(default)]
    seed: u64,
}

fn cmd_design(c: &Common) -> Result<()> {
    let mut cfg: DesignCmdConfig = load_config(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let psis = load_matrices(&cfg.psis)?;
    if psis.len() != cfg.m.len() {
        return Err(Error::invalid("design: psis and m must have equal length"));
    }
    // a Gaussian draw both seeds approach2 and serves as the gaussian method
    let n: Vec<usize> = psis.iter().map(|p| p.nrows()).collect();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.seed);
    let init = tensorcs::bench::synth::gaussian_sensing(&n, &cfg.m, &mut rng);
    let (phis, _) =
        design_for_method(cfg.method, &psis, &cfg.m, &init, &cfg.design_cfg, cfg.seed)?;
    let dir = out_dir(&c.out)?;
    save_factors(&dir, "phi", &phis)?;
    println!("wrote {} sensing factors to {}", phis.len(), dir.display());
    Ok(())
}

#[derive(Deserialize)]
struct LearnCmdConfig {
    /// Training tensor (TNSR), slices along the last mode.
    training: PathBuf,
    /// Sensing factors; required when learn_cfg.coupled is true.
    #[serde(default)]
    phis: Vec<PathBuf>,
    /// Initial dictionaries; overcomplete DCT of size n x n_hat when omitted.
    #[serde(default)]
    psis0: Vec<PathBuf>,
    #[serde(default)]
    n_hat: Vec<usize>,
    #[serde(default)]
    learn_cfg: LearnConfig,
}

fn cmd_learn(c: &Common) -> Result<()> {
    let mut cfg: LearnCmdConfig = load_config(&c.config)?;
    if let Some(s) = c.seed {
        cfg.learn_cfg.seed = s;
    }
    let train = TrainingSet::new(io::load_tensor(&cfg.training)?)?;
    let phis = load_matrices(&cfg.phis)?;
    let psis0 = if cfg.psis0.is_empty() {
        let shape = train.signals().shape();
        if cfg.n_hat.len() != train.n_modes() {
            return Err(Error::invalid(
                "learn: provide psis0 paths or n_hat sizes for the DCT init",
            ));
        }
        shape[..train.n_modes()]
            .iter()
            .zip(&cfg.n_hat)
            .map(|(&n, &nh)| tensorcs::bench::overcomplete_dct(n, nh))
            .collect::<Result<Vec<_>>>()?
    } else {
        load_matrices(&cfg.psis0)?
    };
    let res = learn(&train, &phis, &psis0, &cfg.learn_cfg)?;
    let dir = out_dir(&c.out)?;
    save_factors(&dir, "psi", &res.psis)?;
    save_trace(&dir, "are_trace", &res.are_trace)?;
    println!(
        "learned {} dictionaries, final ARE {:.6e}, {} slices skipped",
        res.psis.len(),
        res.are_trace.last().copied().unwrap_or(f64::NAN),
        res.skipped_slices
    );
    Ok(())
}

#[derive(Deserialize)]
struct JointCmdConfig {
    #[serde(flatten)]
    experiment: ExperimentConfig,
    /// Training tensor (TNSR); mutually exclusive with `images`.
    training: Option<PathBuf>,
    /// PGM corpus for patch extraction.
    #[serde(default)]
    images: Vec<PathBuf>,
    #[serde(default = "default_patch")]
    patch: usize,
    #[serde(default = "default_per_image")]
    per_image: usize,
}

fn default_patch() -> usize {
    8
}
fn default_per_image() -> usize {
    25
}

fn cmd_joint(c: &Common) -> Result<()> {
    let mut cfg: JointCmdConfig = load_config(&c.config)?;
    if let Some(s) = c.seed {
        cfg.experiment.seed = s;
    }
    let train = if let Some(path) = &cfg.training {
        TrainingSet::new(io::load_tensor(path)?)?
    } else if !cfg.images.is_empty() {
        extract_patches(&cfg.images, cfg.patch, cfg.per_image, cfg.experiment.seed)?
    } else {
        tensorcs::bench::gen_synthetic(&cfg.experiment, cfg.experiment.seed)?.train
    };
    let res = joint_optimize(&train, &cfg.experiment)?;
    let dir = out_dir(&c.out)?;
    save_factors(&dir, "phi", &res.phis)?;
    save_factors(&dir, "psi", &res.psis)?;
    save_trace(&dir, "psnr_trace", &res.psnr_trace)?;
    println!(
        "joint driver: {} iterations, {} design calls, final proxy PSNR {:.2} dB",
        res.iterations,
        res.design_calls,
        res.psnr_trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

#[derive(Deserialize)]
struct ReconCmdConfig {
    /// Per-mode equivalent sensing factors A_i = Phi_i * Psi_i.
    factors: Vec<PathBuf>,
    /// Measurement tensor (TNSR).
    y: PathBuf,
    #[serde(default)]
    method: ReconMethod,
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default = "default_lambda")]
    lambda: f64,
    #[serde(default = "default_iters")]
    iters: usize,
}

fn default_k() -> usize {
    4
}
fn default_tol() -> f64 {
    1e-9
}
fn default_lambda() -> f64 {
    1e-3
}
fn default_iters() -> usize {
    500
}

fn cmd_recon(c: &Common) -> Result<()> {
    let cfg: ReconCmdConfig = load_config(&c.config)?;
    let op = KronOperator::new(load_matrices(&cfg.factors)?)?;
    let y = io::load_tensor(&cfg.y)?;
    let s = match cfg.method {
        ReconMethod::KronOmp | ReconMethod::Omp => kron_omp(&op, &y, cfg.k, cfg.tol)?,
        ReconMethod::Fista => {
            let s0 = fista_bpdn(&op, &y, cfg.lambda, cfg.iters)?;
            debias_ls(&op, &y, &s0)?
        }
    };
    let out = c
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("coeffs.tnsr"));
    io::save_tensor(&out, &s.densify())?;
    println!("wrote {} nonzero coefficients to {}", s.nnz(), out.display());
    Ok(())
}

#[derive(Deserialize)]
struct SweepCmdConfig {
    configs: Vec<ExperimentConfig>,
    #[serde(default)]
    seed: u64,
}

fn cmd_sweep(c: &Common) -> Result<()> {
    let mut cfg: SweepCmdConfig = load_config(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    match &c.out {
        Some(path) => {
            let mut f = fs::File::create(path)?;
            run_sweep(&cfg.configs, cfg.seed, &mut f)?;
            println!("wrote sweep results to {}", path.display());
        }
        None => {
            let stdout = std::io::stdout();
            run_sweep(&cfg.configs, cfg.seed, &mut stdout.lock())?;
        }
    }
    Ok(())
}

fn run() -> Result<()> {
    if let Ok(threads) = std::env::var("TENSORCS_THREADS") {
        let n: usize = threads
            .parse()
            .map_err(|_| Error::invalid("TENSORCS_THREADS must be a positive integer"))?;
        if n == 0 {
            return Err(Error::invalid("TENSORCS_THREADS must be a positive integer"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    }
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Design(c) => cmd_design(c),
        Cmd::Learn(c) => cmd_learn(c),
        Cmd::Joint(c) => cmd_joint(c),
        Cmd::Recon(c) => cmd_recon(c),
        Cmd::Sweep(c) => cmd_sweep(c),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
