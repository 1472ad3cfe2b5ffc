//! Min-sum and sum-product message passing on the combined Tanner graph,
//! with flooding updates and an optional selective combining rule at the
//! information bits.
//!
//! The channel observations are the same coefficients the LP objective uses:
//! matched-filter outputs for information bits and the pair coefficients for
//! state bits, either raw (min-sum is scale-invariant) or normalized by
//! `2/sigma^2` into true log-likelihood ratios for the sum-product rule.
//! Positive values favor bit 0.

use crate::channel::LambdaSet;
use crate::lp::{DetectError, DetectorOutput};
use crate::tanner::TannerGraph;

/// How channel observations are scaled into node priors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlrMode {
    /// Coefficients used as-is; min-sum decisions are unchanged by scale.
    MsaRaw,
    /// Coefficients times `2/sigma^2`, the true LLRs absent interference.
    SpaNormalized,
}

/// Channel priors for every variable node of a PR(+code) graph.
#[derive(Debug, Clone)]
pub struct LlrAssignment {
    /// One prior per information bit.
    pub info: Vec<f64>,
    /// One prior per state bit, in pair order.
    pub state: Vec<f64>,
    pub mode: LlrMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpAlgorithm {
    MinSum,
    SumProduct,
}

/// Message-passing configuration.
#[derive(Debug, Clone, Copy)]
pub struct MpConfig {
    pub algorithm: MpAlgorithm,
    /// Block PR-layer feedback: messages into PR edges combine the channel
    /// prior with code-layer messages only.
    pub selective: bool,
    pub max_iters: usize,
    /// Magnitude cap for sum-product messages (min-sum runs unclipped so
    /// that its scale invariance stays bit-exact).
    pub clip: f64,
}

impl Default for MpConfig {
    fn default() -> Self {
        MpConfig { algorithm: MpAlgorithm::MinSum, selective: false, max_iters: 50, clip: 50.0 }
    }
}

/// Scales the matched-filter outputs and pair coefficients into node priors.
pub fn init_llrs(
    q: &[f64],
    lambda: &LambdaSet,
    sigma: f64,
    mode: LlrMode,
) -> Result<LlrAssignment, DetectError> {
    let scale = match mode {
        LlrMode::MsaRaw => 1.0,
        LlrMode::SpaNormalized => {
            if sigma <= 0.0 {
                return Err(DetectError::NonPositiveSigma(sigma));
            }
            2.0 / (sigma * sigma)
        }
    };
    Ok(LlrAssignment {
        info: q.iter().map(|&v| scale * v).collect(),
        state: lambda.pairs().map(|(_, _, l)| scale * l).collect(),
        mode,
    })
}

/// Combines `d - 1` extrinsic messages at a parity check into the outgoing
/// message on the remaining edge.
pub fn check_update(msgs: &[f64], algorithm: MpAlgorithm, clip: f64) -> f64 {
    debug_assert!(!msgs.is_empty(), "a check has degree at least 2");
    match algorithm {
        MpAlgorithm::MinSum => {
            let mut negative = false;
            let mut magnitude = f64::INFINITY;
            for &m in msgs {
                negative ^= m < 0.0;
                magnitude = magnitude.min(m.abs());
            }
            if negative { -magnitude } else { magnitude }
        }
        MpAlgorithm::SumProduct => {
            let t: f64 = msgs.iter().map(|&m| (m / 2.0).tanh()).product();
            if t >= 1.0 {
                clip
            } else if t <= -1.0 {
                -clip
            } else {
                (2.0 * t.atanh()).clamp(-clip, clip)
            }
        }
    }
}

/// Runs flooding message passing on `g` and returns hard decisions.
///
/// Each round sends variable-to-check extrinsics, applies the check rule,
/// then re-derives beliefs and hard decisions. The run stops early when the
/// decisions satisfy every check (PR checks as the XOR constraint, code
/// checks as even parity) or when the whole message state repeats exactly;
/// otherwise it runs `max_iters` rounds and reports `converged = false`.
pub fn run_message_passing(g: &TannerGraph, llrs: &LlrAssignment, cfg: &MpConfig) -> DetectorOutput {
    let n = g.num_info();
    let p = g.num_pairs();
    assert_eq!(llrs.info.len(), n, "one prior per information bit");
    assert_eq!(llrs.state.len(), p, "one prior per state bit");

    // Unified check list: PR checks first, then code checks; adjacency via
    // the graph's own node ids.
    let num_checks = p + g.num_code_checks();
    let check_vars: Vec<&[usize]> = (0..p)
        .map(|k| g.neighbors(g.pr_check_id(k)))
        .chain((0..g.num_code_checks()).map(|c| g.neighbors(g.code_check_id(c))))
        .collect();
    let prior = |v: usize| if v < n { llrs.info[v] } else { llrs.state[v - n] };

    // Per-variable gather lists (check index, slot), split by layer for the
    // selective rule.
    let mut var_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n + p];
    for (c, vars) in check_vars.iter().enumerate() {
        for (slot, &v) in vars.iter().enumerate() {
            var_edges[v].push((c, slot));
        }
    }

    let mut c2v: Vec<Vec<f64>> = check_vars.iter().map(|vars| vec![0.0; vars.len()]).collect();
    let mut v2c: Vec<Vec<f64>> = c2v.clone();
    let mut beliefs: Vec<f64> = (0..n + p).map(prior).collect();
    let mut bits: Vec<u8> = beliefs.iter().map(|&b| u8::from(b < 0.0)).collect();

    let satisfied = |bits: &[u8]| -> bool {
        (0..p).all(|k| {
            let (t, j, _) = g.pair(k);
            bits[t] ^ bits[t - j] == bits[n + k]
        }) && g.code_rows().iter().all(|row| row.iter().fold(0u8, |acc, &v| acc ^ bits[v]) == 0)
    };

    let mut iterations = 0;
    let mut converged = cfg.max_iters == 0 && satisfied(&bits);
    for round in 1..=cfg.max_iters {
        iterations = round;
        // Variable-to-check extrinsics.
        for v in 0..n + p {
            let total = beliefs[v];
            let code_only: f64 = if cfg.selective && v < n {
                prior(v)
                    + var_edges[v]
                        .iter()
                        .filter(|&&(c, _)| c >= p)
                        .map(|&(c, slot)| c2v[c][slot])
                        .sum::<f64>()
            } else {
                0.0
            };
            for &(c, slot) in &var_edges[v] {
                v2c[c][slot] = if cfg.selective && v < n && c < p {
                    code_only
                } else {
                    total - c2v[c][slot]
                };
            }
        }
        // Check-to-variable messages.
        let mut changed = false;
        let mut scratch = Vec::new();
        for c in 0..num_checks {
            for slot in 0..check_vars[c].len() {
                scratch.clear();
                scratch.extend(
                    v2c[c].iter().enumerate().filter(|&(s, _)| s != slot).map(|(_, &m)| m),
                );
                let msg = check_update(&scratch, cfg.algorithm, cfg.clip);
                if msg.to_bits() != c2v[c][slot].to_bits() {
                    changed = true;
                }
                c2v[c][slot] = msg;
            }
        }
        // Beliefs and decisions.
        for v in 0..n + p {
            beliefs[v] =
                prior(v) + var_edges[v].iter().map(|&(c, slot)| c2v[c][slot]).sum::<f64>();
        }
        for (v, b) in beliefs.iter().enumerate() {
            bits[v] = u8::from(*b < 0.0);
        }
        if satisfied(&bits) || !changed {
            converged = true;
            break;
        }
    }

    DetectorOutput {
        x_values: bits[..n].iter().map(|&b| f64::from(b)).collect(),
        z_values: bits[n..].iter().map(|&b| f64::from(b)).collect(),
        integral: true,
        fractional_set: Vec::new(),
        ml_certificate: false,
        hard_bits: bits[..n].to_vec(),
        objective: None,
        iterations,
        converged,
        snap_anomalies: 0,
    }
}
