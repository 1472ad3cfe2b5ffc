//! LP detection: relaxes the pairwise binary objective
//! `sum_t q_t x_t + sum lambda_j z_{t,j}` (with `z_{t,j} = x_t XOR x_{t-j}`)
//! into a linear program over `[0,1]` boxes, with four inequality rows tying
//! each state bit to its bit pair and, when a code layer is present, the
//! odd-subset rows relaxing each parity check. Solving the LP and snapping
//! the vertex gives the detector output; an integral vertex is certified
//! optimal for the binary problem.

use crate::channel::{gram_coefficients, matched_filter, Channel, LambdaSet};
use crate::ldpc::ParityCheckMatrix;
use crate::solver::{solve_lp, solve_lp_warm, LinearProgram, LpSolution, LpStatus, WarmBasis};
use thiserror::Error;

/// Values closer than this to 0, 1/2 or 1 snap exactly; anything farther is
/// kept raw and counted as a snap anomaly. Uncoded vertices are provably in
/// {0, 1/2, 1}, so anomalies there indicate solver trouble; coded polytopes
/// can have other vertex coordinates legitimately.
pub const SNAP_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error("received block has {got} samples, need more than the channel memory {mu}")]
    BlockTooShort { got: usize, mu: usize },
    #[error("code length {code} does not match block length {block}")]
    CodeLengthMismatch { code: usize, block: usize },
    #[error("relaxation came back {0:?}; detector LPs are always feasible and bounded")]
    SolverFailure(LpStatus),
    #[error("normalized LLRs need a positive noise level, got sigma = {0}")]
    NonPositiveSigma(f64),
}

/// Outcome of a detection run (shared by the LP and message-passing paths).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutput {
    /// Per-bit values in `[0,1]`, snapped to {0, 1/2, 1} where applicable.
    pub x_values: Vec<f64>,
    /// State-bit values in pair order (hard XOR decisions for MP runs).
    pub z_values: Vec<f64>,
    /// True iff every information bit is exactly 0 or 1.
    pub integral: bool,
    /// Information-bit positions with non-integral values.
    pub fractional_set: Vec<usize>,
    /// Integral LP optima are provably the exact binary optimum.
    pub ml_certificate: bool,
    /// Hard decisions: fractional positions resolve deterministically to 0.
    pub hard_bits: Vec<u8>,
    /// LP objective value at the solution (absent for message passing).
    pub objective: Option<f64>,
    /// Simplex iterations or message-passing rounds.
    pub iterations: usize,
    /// False only when message passing hit its iteration cap unsettled.
    pub converged: bool,
    /// Values that refused to snap to {0, 1/2, 1}.
    pub snap_anomalies: usize,
}

/// The binary objective the LP relaxes, evaluated at a bit block.
pub fn binary_objective(q: &[f64], lambda: &LambdaSet, bits: &[u8]) -> f64 {
    let mut total: f64 = q.iter().zip(bits).map(|(qt, &b)| qt * f64::from(b)).sum();
    for (t, j, lam) in lambda.pairs() {
        total += lam * f64::from(bits[t] ^ bits[t - j]);
    }
    total
}

/// The projected piecewise-linear objective over `[0,1]^n`: eliminating each
/// state bit at its optimal bound turns its cost into an absolute-value term,
/// `|lambda| |x_t - x_{t-j}|` for positive coefficients and
/// `|lambda| |x_t + x_{t-j} - 1|` for negative ones. Differs from the LP
/// objective by the constant `sum_{lambda<0} lambda`.
pub fn evaluate_projected_objective(x: &[f64], q: &[f64], lambda: &LambdaSet) -> f64 {
    assert_eq!(x.len(), q.len());
    let mut total: f64 = q.iter().zip(x).map(|(qt, xt)| qt * xt).sum();
    for (t, j, lam) in lambda.pairs() {
        if lam > 0.0 {
            total += lam * (x[t] - x[t - j]).abs();
        } else {
            total += -lam * (x[t] + x[t - j] - 1.0).abs();
        }
    }
    total
}

/// Builds the detection LP: variables are the `n` information bits followed
/// by one state bit per interacting pair (in pair order); each pair
/// contributes the four rows boxing the state bit between `|x_t - x_{t-j}|`
/// and `1 - |x_t + x_{t-j} - 1|`, and each code check of degree `d`
/// contributes its `2^{d-1}` odd-subset rows.
pub fn build_relaxation(
    q: &[f64],
    lambda: &LambdaSet,
    code: Option<&ParityCheckMatrix>,
) -> Result<LinearProgram, DetectError> {
    let n = q.len();
    assert_eq!(n, lambda.block_len(), "coefficients must match the block length");
    if let Some(h) = code {
        if h.len() != n {
            return Err(DetectError::CodeLengthMismatch { code: h.len(), block: n });
        }
    }
    let pairs: Vec<(usize, usize, f64)> = lambda.pairs().collect();
    let mut lp = LinearProgram::new(n + pairs.len());
    for (t, &qt) in q.iter().enumerate() {
        lp.objective[t] = qt;
    }
    for (k, &(t, j, lam)) in pairs.iter().enumerate() {
        let z = n + k;
        lp.objective[z] = lam;
        let (a, b) = (t, t - j);
        lp.add_row(vec![(a, 1.0), (b, -1.0), (z, -1.0)], 0.0);
        lp.add_row(vec![(b, 1.0), (a, -1.0), (z, -1.0)], 0.0);
        lp.add_row(vec![(z, 1.0), (a, -1.0), (b, -1.0)], 0.0);
        lp.add_row(vec![(z, 1.0), (a, 1.0), (b, 1.0)], 2.0);
    }
    if let Some(h) = code {
        for row in h.rows() {
            let d = row.len();
            assert!(d <= 16, "odd-subset expansion is exponential in the check degree");
            for subset in 0..1usize << d {
                if (subset as u32).count_ones() % 2 == 0 {
                    continue;
                }
                let coeffs: Vec<(usize, f64)> = row
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (v, if (subset >> i) & 1 == 1 { 1.0 } else { -1.0 }))
                    .collect();
                let rhs = (subset as u32).count_ones() as f64 - 1.0;
                lp.add_row(coeffs, rhs);
            }
        }
    }
    Ok(lp)
}

fn snap(v: f64, anomalies: &mut usize) -> f64 {
    for target in [0.0, 0.5, 1.0] {
        if (v - target).abs() < SNAP_TOL {
            return target;
        }
    }
    *anomalies += 1;
    v
}

/// Packages a solved relaxation: snap the vertex, split x from z, read off
/// the integrality certificate.
fn package(sol: &LpSolution, n: usize) -> Result<DetectorOutput, DetectError> {
    if sol.status != LpStatus::Optimal {
        return Err(DetectError::SolverFailure(sol.status));
    }
    let mut anomalies = 0;
    let x_values: Vec<f64> = sol.values[..n].iter().map(|&v| snap(v, &mut anomalies)).collect();
    let z_values: Vec<f64> = sol.values[n..].iter().map(|&v| snap(v, &mut anomalies)).collect();
    let fractional_set: Vec<usize> =
        (0..n).filter(|&t| x_values[t] != 0.0 && x_values[t] != 1.0).collect();
    let integral = fractional_set.is_empty();
    let hard_bits: Vec<u8> = x_values.iter().map(|&v| u8::from(v == 1.0)).collect();
    Ok(DetectorOutput {
        x_values,
        z_values,
        integral,
        fractional_set,
        ml_certificate: integral,
        hard_bits,
        objective: Some(sol.objective),
        iterations: sol.iterations,
        converged: true,
        snap_anomalies: anomalies,
    })
}

/// Runs LP detection on a received block: matched filter, relaxation, solve,
/// snap. Integrality of the snapped vertex certifies exact ML detection.
pub fn lp_detect(
    r: &[f64],
    ch: &Channel,
    code: Option<&ParityCheckMatrix>,
) -> Result<DetectorOutput, DetectError> {
    let mu = ch.memory();
    if r.len() <= mu {
        return Err(DetectError::BlockTooShort { got: r.len(), mu });
    }
    let n = r.len() - mu;
    let q = matched_filter(r, ch).expect("length checked above");
    let lambda = gram_coefficients(ch, n);
    let lp = build_relaxation(&q, &lambda, code)?;
    package(&solve_lp(&lp), n)
}

/// LP detection bound to one channel, block length and optional code.
///
/// The relaxation's rows depend only on those, so the detector builds them
/// once and re-solves under each block's matched-filter objective, warm-
/// starting from the previous optimal basis. Results match [`lp_detect`]
/// whenever the optimum is unique, which under continuous noise is almost
/// surely; only the pivot path (and so the iteration count) differs.
pub struct LpDetector {
    ch: Channel,
    n: usize,
    lp: LinearProgram,
    warm: Option<WarmBasis>,
}

impl LpDetector {
    pub fn new(
        ch: &Channel,
        n: usize,
        code: Option<&ParityCheckMatrix>,
    ) -> Result<Self, DetectError> {
        assert!(n > 0, "block length must be positive");
        let lambda = gram_coefficients(ch, n);
        let lp = build_relaxation(&vec![0.0; n], &lambda, code)?;
        Ok(LpDetector { ch: ch.clone(), n, lp, warm: None })
    }

    /// Detects one received block of exactly `n + memory` samples.
    pub fn detect(&mut self, r: &[f64]) -> Result<DetectorOutput, DetectError> {
        if r.len() != self.n + self.ch.memory() {
            return Err(DetectError::BlockTooShort { got: r.len(), mu: self.ch.memory() });
        }
        let q = matched_filter(r, &self.ch).expect("length checked above");
        self.lp.objective[..self.n].copy_from_slice(&q);
        package(&solve_lp_warm(&self.lp, &mut self.warm), self.n)
    }
}
