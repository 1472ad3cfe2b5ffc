//! Monte-Carlo sweep harness: reproducible SNR sweeps over any mix of
//! detectors, with CSV output.
//!
//! Every trial derives its RNG seed from the master seed and the
//! (SNR point, trial) indices alone — not from the detector — so all
//! detectors in a sweep face byte-identical data and noise and their error
//! counts are directly comparable, trial by trial. Trials run in parallel;
//! aggregation follows trial order, so repeated runs of the same config
//! produce byte-identical CSV.

use crate::channel::{
    add_awgn_with, gram_coefficients, matched_filter, transmit_noiseless, Channel, ChannelError,
    LambdaSet,
};
use crate::ldpc::{generate_regular, parse_alist, Encoder, LdpcError, ParityCheckMatrix};
use crate::lp::{lp_detect, DetectError};
use crate::mp::{init_llrs, run_message_passing, LlrMode, MpAlgorithm, MpConfig};
use crate::ml::viterbi_ml;
use crate::tanner::{attach_code_layer, build_pr_graph, GraphError, TannerGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config needs at least one trial per point")]
    ZeroTrials,
    #[error("config needs at least one SNR point")]
    NoSnrPoints,
    #[error("config needs at least one detector")]
    NoDetectors,
    #[error("code rate must lie in (0, 1], got {0}")]
    InvalidRate(f64),
    #[error("code length {code} does not match block length {block}")]
    CodeLengthMismatch { code: usize, block: usize },
    #[error("the sequence detector runs uncoded; drop `viterbi` or the code")]
    CodedViterbi,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Ldpc(#[from] LdpcError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error("reading code file: {0}")]
    Io(#[from] std::io::Error),
}

/// Detectors a sweep can run side by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Lp,
    Msa,
    Spa,
    MsaSelective,
    SpaSelective,
    Viterbi,
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DetectorKind::Lp => "lp",
            DetectorKind::Msa => "msa",
            DetectorKind::Spa => "spa",
            DetectorKind::MsaSelective => "msa_selective",
            DetectorKind::SpaSelective => "spa_selective",
            DetectorKind::Viterbi => "viterbi",
        })
    }
}

/// How the per-point dB values map to a noise level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrMode {
    /// Transmit power over noise variance: `sigma^2 = 10^(-dB/10)`.
    SnrDb,
    /// Energy per information bit over noise density with unit symbol
    /// power: `Eb = 1/R`, `N0 = 2 sigma^2`, so `sigma^2 = 1/(2R 10^(dB/10))`.
    Ebn0Db,
}

/// Code attached to a sweep: either a parity-check file or generator
/// parameters for a regular code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeSpec {
    Alist { alist: String },
    Regular { n: usize, dv: usize, dc: usize, #[serde(default)] seed: u64 },
}

fn default_max_iters() -> usize {
    50
}

/// Full description of one sweep; deserializable from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub taps: Vec<f64>,
    pub block_len: usize,
    pub detectors: Vec<DetectorKind>,
    pub snr_mode: SnrMode,
    pub snr_points: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub code: Option<CodeSpec>,
}

/// Aggregated outcome for one (SNR point, detector) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub snr_db: f64,
    pub detector: DetectorKind,
    pub trials: usize,
    pub bit_errors: u64,
    pub ber: f64,
    pub word_errors: u64,
    pub wer: f64,
    /// Trials whose output was fractional (possible for the LP only).
    pub fractional: u64,
    pub frac_rate: f64,
    pub mean_iters: f64,
    pub se_ber: f64,
    pub se_wer: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResults {
    /// One row per SNR point and detector, in config order.
    pub points: Vec<PointResult>,
}

pub const CSV_HEADER: &str =
    "snr_db,detector,trials,bit_errors,ber,word_errors,wer,fractional,frac_rate,mean_iters,se_ber,se_wer";

impl SweepResults {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                p.snr_db,
                p.detector,
                p.trials,
                p.bit_errors,
                p.ber,
                p.word_errors,
                p.wer,
                p.fractional,
                p.frac_rate,
                p.mean_iters,
                p.se_ber,
                p.se_wer,
            ));
        }
        out
    }
}

/// Converts a dB operating point to a noise standard deviation.
///
/// `rate` only enters in energy-per-bit mode; pass 1.0 for uncoded runs.
pub fn snr_to_sigma(value_db: f64, mode: SnrMode, rate: f64) -> Result<f64, SimError> {
    match mode {
        SnrMode::SnrDb => Ok(10f64.powf(-value_db / 20.0)),
        SnrMode::Ebn0Db => {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(SimError::InvalidRate(rate));
            }
            Ok((2.0 * rate * 10f64.powf(value_db / 10.0)).recip().sqrt())
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed: a function of the master seed and the indices only, so
/// every detector replays the same data and the schedule cannot matter.
pub fn derive_seed(master: u64, snr_idx: usize, trial: usize) -> u64 {
    let a = splitmix(master.wrapping_add(0x9E37_79B9_7F4A_7C15));
    let b = splitmix(a ^ snr_idx as u64);
    splitmix(b ^ trial as u64)
}

/// Draws a random channel with `mu + 1` i.i.d. Gaussian taps, normalized to
/// unit energy. Redraws the (vanishingly rare) tap vectors whose leading
/// tap is numerically negligible.
pub fn random_channel(mu: usize, seed: u64) -> Channel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let taps: Vec<f64> = (0..=mu)
            .map(|_| rand_distr::StandardNormal.sample(&mut rng))
            .collect();
        let energy: f64 = taps.iter().map(|h| h * h).sum();
        if taps[0].abs() < 1e-3 * energy.sqrt() {
            continue;
        }
        let scale = energy.sqrt().recip();
        return Channel::new(taps.into_iter().map(|h| h * scale).collect())
            .expect("normalized taps are finite with a nonzero lead");
    }
}

/// Everything a trial needs that is shared across the whole sweep.
struct Context {
    ch: Channel,
    lambda: LambdaSet,
    graph: TannerGraph,
    code: Option<ParityCheckMatrix>,
    encoder: Option<Encoder>,
    max_iters: usize,
}

/// Outcome of a single detection trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub bit_errors: u32,
    /// Any bit error or a fractional output.
    pub word_error: bool,
    pub fractional: bool,
    pub iterations: usize,
}

fn load_code(spec: &CodeSpec) -> Result<ParityCheckMatrix, SimError> {
    match spec {
        CodeSpec::Alist { alist } => Ok(parse_alist(&std::fs::read_to_string(alist)?)?),
        CodeSpec::Regular { n, dv, dc, seed } => Ok(generate_regular(*n, *dv, *dc, *seed)?),
    }
}

fn build_context(cfg: &SweepConfig) -> Result<Context, SimError> {
    if cfg.trials == 0 {
        return Err(SimError::ZeroTrials);
    }
    if cfg.snr_points.is_empty() {
        return Err(SimError::NoSnrPoints);
    }
    if cfg.detectors.is_empty() {
        return Err(SimError::NoDetectors);
    }
    let ch = Channel::new(cfg.taps.clone())?;
    let code = cfg.code.as_ref().map(load_code).transpose()?;
    if let Some(h) = &code {
        if h.len() != cfg.block_len {
            return Err(SimError::CodeLengthMismatch { code: h.len(), block: cfg.block_len });
        }
        if cfg.detectors.contains(&DetectorKind::Viterbi) {
            return Err(SimError::CodedViterbi);
        }
    }
    let lambda = gram_coefficients(&ch, cfg.block_len);
    let mut graph = build_pr_graph(&lambda);
    if let Some(h) = &code {
        graph = attach_code_layer(graph, h)?;
    }
    let encoder = code.as_ref().map(Encoder::from_matrix);
    Ok(Context { ch, lambda, graph, code, encoder, max_iters: cfg.max_iters })
}

fn trial_with_context(
    ctx: &Context,
    sigma: f64,
    seed: u64,
    detector: DetectorKind,
) -> Result<TrialRecord, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ctx.lambda.block_len();
    let bits: Vec<u8> = match &ctx.encoder {
        Some(enc) => {
            let info: Vec<u8> = (0..enc.info_len()).map(|_| rng.gen_range(0..2)).collect();
            enc.encode(&info)?
        }
        None => (0..n).map(|_| rng.gen_range(0..2)).collect(),
    };
    let y = transmit_noiseless(&bits, &ctx.ch);
    let r = add_awgn_with(&y, sigma, &mut rng);

    let (decided, fractional, iterations) = match detector {
        DetectorKind::Lp => {
            let out = lp_detect(&r, &ctx.ch, ctx.code.as_ref())?;
            (out.hard_bits, !out.integral, out.iterations)
        }
        DetectorKind::Viterbi => (viterbi_ml(&r, &ctx.ch), false, 0),
        _ => {
            let (algorithm, mode, selective) = match detector {
                DetectorKind::Msa => (MpAlgorithm::MinSum, LlrMode::MsaRaw, false),
                DetectorKind::MsaSelective => (MpAlgorithm::MinSum, LlrMode::MsaRaw, true),
                DetectorKind::Spa => (MpAlgorithm::SumProduct, LlrMode::SpaNormalized, false),
                DetectorKind::SpaSelective => {
                    (MpAlgorithm::SumProduct, LlrMode::SpaNormalized, true)
                }
                _ => unreachable!("lp and viterbi handled above"),
            };
            let q = matched_filter(&r, &ctx.ch)?;
            let llrs = init_llrs(&q, &ctx.lambda, sigma, mode)?;
            let cfg = MpConfig { algorithm, selective, max_iters: ctx.max_iters, ..MpConfig::default() };
            let out = run_message_passing(&ctx.graph, &llrs, &cfg);
            (out.hard_bits, false, out.iterations)
        }
    };

    let bit_errors = decided.iter().zip(&bits).filter(|(a, b)| a != b).count() as u32;
    Ok(TrialRecord {
        bit_errors,
        word_error: bit_errors > 0 || fractional,
        fractional,
        iterations,
    })
}

/// Runs a single trial exactly as [`run_sweep`] would schedule it.
pub fn run_trial(
    cfg: &SweepConfig,
    snr_idx: usize,
    detector: DetectorKind,
    trial: usize,
) -> Result<TrialRecord, SimError> {
    let ctx = build_context(cfg)?;
    let rate = ctx.encoder.as_ref().map_or(1.0, Encoder::effective_rate);
    let sigma = snr_to_sigma(cfg.snr_points[snr_idx], cfg.snr_mode, rate)?;
    trial_with_context(&ctx, sigma, derive_seed(cfg.seed, snr_idx, trial), detector)
}

/// Runs the whole sweep: every SNR point, every detector, `trials` trials
/// each, in parallel, aggregated in trial order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResults, SimError> {
    let ctx = build_context(cfg)?;
    let rate = ctx.encoder.as_ref().map_or(1.0, Encoder::effective_rate);
    let n = cfg.block_len;
    let mut points = Vec::with_capacity(cfg.snr_points.len() * cfg.detectors.len());
    for (snr_idx, &snr_db) in cfg.snr_points.iter().enumerate() {
        let sigma = snr_to_sigma(snr_db, cfg.snr_mode, rate)?;
        for &detector in &cfg.detectors {
            let records: Vec<TrialRecord> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| trial_with_context(&ctx, sigma, derive_seed(cfg.seed, snr_idx, t), detector))
                .collect::<Result<_, _>>()?;
            points.push(aggregate(snr_db, detector, n, &records));
        }
    }
    Ok(SweepResults { points })
}

fn aggregate(snr_db: f64, detector: DetectorKind, n: usize, records: &[TrialRecord]) -> PointResult {
    let trials = records.len();
    let tf = trials as f64;
    let bit_errors: u64 = records.iter().map(|r| u64::from(r.bit_errors)).sum();
    let word_errors = records.iter().filter(|r| r.word_error).count() as u64;
    let fractional = records.iter().filter(|r| r.fractional).count() as u64;
    let iter_sum: u64 = records.iter().map(|r| r.iterations as u64).sum();
    let ber = bit_errors as f64 / (tf * n as f64);
    let wer = word_errors as f64 / tf;
    // Spread of the per-trial bit error fraction.
    let se_ber = if trials > 1 {
        let var = records
            .iter()
            .map(|r| {
                let d = f64::from(r.bit_errors) / n as f64 - ber;
                d * d
            })
            .sum::<f64>()
            / (tf - 1.0);
        (var / tf).sqrt()
    } else {
        0.0
    };
    let se_wer = (wer * (1.0 - wer) / tf).sqrt();
    PointResult {
        snr_db,
        detector,
        trials,
        bit_errors,
        ber,
        word_errors,
        wer,
        fractional,
        frac_rate: fractional as f64 / tf,
        mean_iters: iter_sum as f64 / tf,
        se_ber,
        se_wer,
    }
}
