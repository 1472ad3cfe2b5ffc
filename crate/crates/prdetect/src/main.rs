//! Command-line front end: channel classification, error-event analysis,
//! one-shot detection, Monte-Carlo sweeps, code generation, and graph dumps.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use prdetect::analysis::{all_half_event, classify_channel, dominant_event};
use prdetect::channel::{
    add_awgn_with, gram_coefficients, matched_filter, transmit_noiseless, Channel,
};
use prdetect::ldpc::{generate_regular, parse_alist, write_alist, Encoder, ParityCheckMatrix};
use prdetect::lp::lp_detect;
use prdetect::ml::viterbi_ml;
use prdetect::mp::{init_llrs, run_message_passing, LlrMode, MpAlgorithm, MpConfig};
use prdetect::sim::{run_sweep, SweepConfig};
use prdetect::tanner::{attach_code_layer, build_pr_graph};
use prdetect::DetectorOutput;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "prdetect",
    about = "Graph-based detection for binary-input ISI channels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TapsArg {
    /// Channel taps h_0,h_1,...,h_mu (comma separated).
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    taps: Vec<f64>,
}

impl TapsArg {
    fn channel(&self) -> Result<Channel> {
        Channel::new(self.taps.clone()).context("invalid channel taps")
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify a channel: pair coefficients, structural tests, margins.
    Classify {
        #[command(flatten)]
        taps: TapsArg,
        /// Block length for the pair-graph test.
        #[arg(long, default_value_t = 32)]
        block_len: usize,
        /// Event-search window; defaults to 2(mu+1).
        #[arg(long)]
        window: Option<usize>,
    },
    /// Report the dominant error event and its Gaussian statistics.
    Analyze {
        #[command(flatten)]
        taps: TapsArg,
        /// Noise standard deviation for the probability estimates.
        #[arg(long)]
        sigma: f64,
        /// Event-search window; defaults to 2(mu+1).
        #[arg(long)]
        window: Option<usize>,
        /// Block length for the everything-at-1/2 statistics.
        #[arg(long, default_value_t = 100)]
        block_len: usize,
    },
    /// Run one detection, on a received block or a fresh random trial.
    Detect {
        #[command(flatten)]
        taps: TapsArg,
        #[arg(long, value_enum)]
        method: Method,
        /// Use the blocked-feedback message schedule.
        #[arg(long)]
        selective: bool,
        /// JSON file holding the received samples (n + mu floats).
        #[arg(long)]
        received: Option<String>,
        /// Noise level: generation noise, and the LLR normalizer for spa.
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        /// Block length when generating a random trial.
        #[arg(long, default_value_t = 16)]
        block_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional parity-check file (alist) to decode against.
        #[arg(long)]
        code: Option<String>,
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
    },
    /// Run the Monte-Carlo sweep described by a TOML config.
    Simulate {
        #[arg(long)]
        config: String,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<String>,
    },
    /// Generate a regular parity-check matrix and write it as alist.
    GenCode {
        #[arg(long)]
        code_len: usize,
        #[arg(long)]
        dv: usize,
        #[arg(long)]
        dc: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Alist destination; stdout when omitted.
        #[arg(long)]
        out: Option<String>,
    },
    /// Dump the detection graph in DOT format.
    Graph {
        #[command(flatten)]
        taps: TapsArg,
        #[arg(long, default_value_t = 8)]
        block_len: usize,
        /// Optional parity-check file (alist) to attach.
        #[arg(long)]
        code: Option<String>,
        /// DOT destination; stdout when omitted.
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Lp,
    Msa,
    Spa,
    Viterbi,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Classify { taps, block_len, window } => classify(&taps, block_len, window),
        Command::Analyze { taps, sigma, window, block_len } => {
            analyze(&taps, sigma, window, block_len)
        }
        Command::Detect {
            taps,
            method,
            selective,
            received,
            sigma,
            block_len,
            seed,
            code,
            max_iters,
        } => detect(
            &taps,
            method,
            selective,
            received.as_deref(),
            sigma,
            block_len,
            seed,
            code.as_deref(),
            max_iters,
        ),
        Command::Simulate { config, out } => simulate(&config, out.as_deref()),
        Command::GenCode { code_len, dv, dc, seed, out } => {
            gen_code(code_len, dv, dc, seed, out.as_deref())
        }
        Command::Graph { taps, block_len, code, out } => {
            graph(&taps, block_len, code.as_deref(), out.as_deref())
        }
    }
}

fn default_window(ch: &Channel) -> usize {
    2 * (ch.memory() + 1)
}

fn fmt_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", items.join(", "))
}

fn classify(taps: &TapsArg, block_len: usize, window: Option<usize>) -> Result<()> {
    let ch = taps.channel()?;
    if block_len <= ch.memory() {
        bail!("block length must exceed the channel memory {}", ch.memory());
    }
    let window = window.unwrap_or_else(|| default_window(&ch));
    let c = classify_channel(&ch, block_len, window);
    println!("taps:      {}", fmt_vec(ch.taps()));
    println!("memory:    {}", ch.memory());
    println!("lambda:    {}", fmt_vec(&c.lambda));
    println!("nc:        {}", c.nc);
    println!("wnc:       {}", c.wnc);
    println!("delta_inf: {}", c.delta_inf);
    match c.d_min {
        Some(d) => println!("d_min:     {d} (window {window})"),
        None => println!("d_min:     skipped"),
    }
    println!("label:     {}", c.label);
    Ok(())
}

fn analyze(taps: &TapsArg, sigma: f64, window: Option<usize>, block_len: usize) -> Result<()> {
    let ch = taps.channel()?;
    if sigma <= 0.0 {
        bail!("sigma must be positive, got {sigma}");
    }
    if block_len <= ch.memory() {
        bail!("block length must exceed the channel memory {}", ch.memory());
    }
    let window = window.unwrap_or_else(|| default_window(&ch));
    let event = dominant_event(&ch, window, sigma)?;
    let lambda = gram_coefficients(&ch, block_len);
    let half = all_half_event(lambda.stationary(), block_len, sigma, None);

    println!("taps:   {}", fmt_vec(ch.taps()));
    println!("lambda: {}", fmt_vec(lambda.stationary()));
    println!("dominant event (window {window}):");
    println!("  positions:   {:?}", event.positions);
    println!("  pattern:     {:?}", event.pattern);
    println!("  distance:    {}", event.distance);
    println!("  variance:    {}", event.variance);
    println!("  probability: {}", event.probability);
    println!("all-half event (block {block_len}, asymptotic):");
    println!("  distance: {}", half.delta);
    println!("  variance: {}", half.variance);
    println!("  ratio:    {}", half.ratio);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn detect(
    taps: &TapsArg,
    method: Method,
    selective: bool,
    received: Option<&str>,
    sigma: f64,
    block_len: usize,
    seed: u64,
    code: Option<&str>,
    max_iters: usize,
) -> Result<()> {
    let ch = taps.channel()?;
    let code: Option<ParityCheckMatrix> = code
        .map(|path| -> Result<ParityCheckMatrix> {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading code file {path}"))?;
            Ok(parse_alist(&text)?)
        })
        .transpose()?;

    // Either load the received block or synthesize one trial.
    let (r, sent): (Vec<f64>, Option<Vec<u8>>) = match received {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading received block {path}"))?;
            let r: Vec<f64> =
                serde_json::from_str(&text).context("received block must be a JSON float array")?;
            (r, None)
        }
        None => {
            if sigma < 0.0 {
                bail!("sigma must be nonnegative, got {sigma}");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bits: Vec<u8> = match &code {
                Some(h) => {
                    let enc = Encoder::from_matrix(h);
                    let info: Vec<u8> =
                        (0..enc.info_len()).map(|_| rng.gen_range(0..2)).collect();
                    enc.encode(&info)?
                }
                None => (0..block_len).map(|_| rng.gen_range(0..2)).collect(),
            };
            let y = transmit_noiseless(&bits, &ch);
            (add_awgn_with(&y, sigma, &mut rng), Some(bits))
        }
    };
    let n = r
        .len()
        .checked_sub(ch.memory())
        .filter(|&n| n > 0)
        .with_context(|| format!("received block too short: {} samples", r.len()))?;
    if let Some(h) = &code {
        if h.len() != n {
            bail!("code length {} does not match block length {n}", h.len());
        }
    }

    let out: DetectorOutput = match method {
        Method::Lp => lp_detect(&r, &ch, code.as_ref())?,
        Method::Viterbi => {
            if code.is_some() {
                bail!("the sequence detector runs uncoded; drop --code");
            }
            let bits = viterbi_ml(&r, &ch);
            DetectorOutput {
                x_values: bits.iter().map(|&b| f64::from(b)).collect(),
                z_values: vec![],
                integral: true,
                fractional_set: vec![],
                ml_certificate: true,
                hard_bits: bits,
                objective: None,
                iterations: 0,
                converged: true,
                snap_anomalies: 0,
            }
        }
        Method::Msa | Method::Spa => {
            let lambda = gram_coefficients(&ch, n);
            let mut g = build_pr_graph(&lambda);
            if let Some(h) = &code {
                g = attach_code_layer(g, h)?;
            }
            let (algorithm, mode) = match method {
                Method::Msa => (MpAlgorithm::MinSum, LlrMode::MsaRaw),
                _ => (MpAlgorithm::SumProduct, LlrMode::SpaNormalized),
            };
            let q = matched_filter(&r, &ch)?;
            let llrs = init_llrs(&q, &lambda, sigma, mode)?;
            let cfg = MpConfig { algorithm, selective, max_iters, ..MpConfig::default() };
            run_message_passing(&g, &llrs, &cfg)
        }
    };

    let bit_string: String = out.hard_bits.iter().map(|b| char::from(b'0' + b)).collect();
    println!("block_len:  {n}");
    println!("decided:    {bit_string}");
    println!("integral:   {}", out.integral);
    if !out.fractional_set.is_empty() {
        println!("fractional: {:?}", out.fractional_set);
    }
    println!("certificate: {}", out.ml_certificate);
    if let Some(obj) = out.objective {
        println!("objective:  {obj}");
    }
    println!("iterations: {}", out.iterations);
    println!("converged:  {}", out.converged);
    if let Some(bits) = sent {
        let sent_string: String = bits.iter().map(|b| char::from(b'0' + b)).collect();
        let errors = bits.iter().zip(&out.hard_bits).filter(|(a, b)| a != b).count();
        println!("sent:       {sent_string}");
        println!("bit_errors: {errors}");
    }
    Ok(())
}

fn simulate(config: &str, out: Option<&str>) -> Result<()> {
    let text = std::fs::read_to_string(config)
        .with_context(|| format!("reading sweep config {config}"))?;
    let cfg: SweepConfig = toml::from_str(&text).context("parsing sweep config")?;
    let results = run_sweep(&cfg)?;
    let csv = results.to_csv();
    match out {
        Some(path) => {
            std::fs::write(path, &csv).with_context(|| format!("writing {path}"))?;
            eprintln!("wrote {} rows to {path}", results.points.len());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn gen_code(code_len: usize, dv: usize, dc: usize, seed: u64, out: Option<&str>) -> Result<()> {
    let h = generate_regular(code_len, dv, dc, seed)?;
    let enc = Encoder::from_matrix(&h);
    let text = write_alist(&h);
    match out {
        Some(path) => {
            std::fs::write(path, &text).with_context(|| format!("writing {path}"))?;
            eprintln!(
                "wrote ({}, {}) code: {} checks, design rate {}, effective rate {}",
                code_len,
                dv,
                h.num_checks(),
                h.design_rate(),
                enc.effective_rate()
            );
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn graph(taps: &TapsArg, block_len: usize, code: Option<&str>, out: Option<&str>) -> Result<()> {
    let ch = taps.channel()?;
    if block_len <= ch.memory() {
        bail!("block length must exceed the channel memory {}", ch.memory());
    }
    let lambda = gram_coefficients(&ch, block_len);
    let mut g = build_pr_graph(&lambda);
    if let Some(path) = code {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading code file {path}"))?;
        g = attach_code_layer(g, &parse_alist(&text)?)?;
    }
    let dot = g.to_dot();
    match out {
        Some(path) => std::fs::write(path, &dot).with_context(|| format!("writing {path}"))?,
        None => print!("{dot}"),
    }
    Ok(())
}
