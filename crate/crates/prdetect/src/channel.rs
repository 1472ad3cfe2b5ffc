//! Partial-response channel model.
//!
//! A channel is a real FIR filter `h_0 + h_1 D + ... + h_mu D^mu` driven by
//! bipolar symbols. Transmitting an `n`-bit block produces `n + mu` noiseless
//! samples; the receiver adds white Gaussian noise and matched-filters back
//! to `n` sufficient statistics. The quadratic part of the block likelihood
//! is captured by the Gram coefficients ("lambda" values) of the filter,
//! which every detector in this crate consumes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

/// Coefficients with magnitude below this are treated as exact zeros when
/// deciding which bit pairs interact (graph edges, LP state variables).
pub const LAMBDA_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("channel needs at least one tap")]
    EmptyTaps,
    #[error("leading tap must be nonzero")]
    ZeroLeadingTap,
    #[error("channel taps must be finite")]
    NonFiniteTap,
    #[error("noise level must be nonnegative, got {0}")]
    NegativeSigma(f64),
    #[error("received block holds {got} samples but the channel needs more than {min}")]
    BlockTooShort { got: usize, min: usize },
}

/// A partial-response channel `h(D) = h_0 + h_1 D + ... + h_mu D^mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    taps: Vec<f64>,
}

impl Channel {
    /// Builds a channel from its tap vector `[h_0, ..., h_mu]`.
    pub fn new(taps: Vec<f64>) -> Result<Self, ChannelError> {
        if taps.is_empty() {
            return Err(ChannelError::EmptyTaps);
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(ChannelError::NonFiniteTap);
        }
        if taps[0] == 0.0 {
            return Err(ChannelError::ZeroLeadingTap);
        }
        Ok(Channel { taps })
    }

    /// Channel memory `mu` (number of taps minus one).
    pub fn memory(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Total tap energy `sum h_i^2`.
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|h| h * h).sum()
    }
}

/// Maps bits to bipolar symbols: 0 -> +1, 1 -> -1.
pub fn modulate(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| 1.0 - 2.0 * f64::from(b)).collect()
}

/// A transmitted block: the bit pattern together with its bipolar image.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub bits: Vec<u8>,
    pub bipolar: Vec<f64>,
}

impl Block {
    pub fn from_bits(bits: Vec<u8>) -> Self {
        let bipolar = modulate(&bits);
        Block { bits, bipolar }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Noiseless channel output for a bit block: the bipolar symbols convolved
/// with the taps, including the `mu`-sample tail (length `n + mu`).
pub fn transmit_noiseless(bits: &[u8], ch: &Channel) -> Vec<f64> {
    let x = modulate(bits);
    let n = x.len();
    let mu = ch.memory();
    let mut y = vec![0.0; n + mu];
    for (t, &sym) in x.iter().enumerate() {
        for (i, &h) in ch.taps().iter().enumerate() {
            y[t + i] += h * sym;
        }
    }
    y
}

/// Adds white Gaussian noise of standard deviation `sigma`, reproducibly
/// under `seed`. `sigma = 0` returns the input unchanged.
pub fn add_awgn(y: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>, ChannelError> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(ChannelError::NegativeSigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(y.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(add_awgn_with(y, sigma, &mut rng))
}

/// As [`add_awgn`] but drawing from a caller-supplied generator, so a
/// simulation trial can consume bits and noise from one seeded stream.
pub fn add_awgn_with(y: &[f64], sigma: f64, rng: &mut impl rand::Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, sigma).expect("sigma checked nonnegative");
    y.iter().map(|&v| v + normal.sample(rng)).collect()
}

/// Matched-filter front end: correlates the received block against the taps,
/// producing one statistic per transmitted bit,
/// `q_t = sum_i h_i r_{t+i}` for `t = 0..n` where `n = len(r) - mu`.
pub fn matched_filter(r: &[f64], ch: &Channel) -> Result<Vec<f64>, ChannelError> {
    let mu = ch.memory();
    if r.len() <= mu {
        return Err(ChannelError::BlockTooShort { got: r.len(), min: mu });
    }
    let n = r.len() - mu;
    let mut q = vec![0.0; n];
    for t in 0..n {
        q[t] = ch.taps().iter().enumerate().map(|(i, &h)| h * r[t + i]).sum();
    }
    Ok(q)
}

/// Gram coefficients of a channel for blocks of length `n`.
///
/// The stationary coefficient `lambda_j = -sum_i h_i h_{i+j}` weighs the
/// interaction between any bit pair at lag `j`; `lambda_0` is the negated tap
/// energy. Detectors built on the full `n + mu`-sample block use these
/// stationary values for every pair. The per-position table additionally
/// records the truncated variant `lambda_{t,j} = -sum_{i=0}^{min(mu-j, n-1-t)}
/// h_i h_{i+j}`, which is what the interaction at pair `(t, t-j)` shrinks to
/// when the tail samples past position `n-1` are discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSet {
    n: usize,
    mu: usize,
    stationary: Vec<f64>,
    /// `truncated[j - 1][t - j]` holds `lambda_{t,j}` for `t = j..n`.
    truncated: Vec<Vec<f64>>,
}

impl LambdaSet {
    /// Block length the set was built for.
    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn memory(&self) -> usize {
        self.mu
    }

    /// Stationary `[lambda_0, ..., lambda_mu]`.
    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Per-position `lambda_{t,j}`, `0 <= t < n`, `1 <= j <= min(t, mu)`.
    pub fn truncated(&self, t: usize, j: usize) -> f64 {
        assert!(j >= 1 && j <= self.mu && t >= j && t < self.n, "pair out of range");
        self.truncated[j - 1][t - j]
    }

    /// True when the stationary coefficient at lag `j` is treated as zero.
    pub fn lag_is_zero(&self, j: usize) -> bool {
        self.stationary[j].abs() < LAMBDA_ZERO_TOL
    }

    /// Interacting bit pairs under the stationary coefficients: yields
    /// `(t, j, lambda_j)` for every position `t` and lag `j >= 1` with
    /// `lambda_j` nonzero, in `(t, j)` lexicographic order. This fixed order
    /// is shared by the graph builder, the LP relaxation and the
    /// message-passing initializer, so state indices agree across all three.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (1..self.n).flat_map(move |t| {
            (1..=self.mu.min(t))
                .filter(move |&j| !self.lag_is_zero(j))
                .map(move |j| (t, j, self.stationary[j]))
        })
    }

    /// Number of interacting pairs.
    pub fn pair_count(&self) -> usize {
        (1..=self.mu)
            .filter(|&j| !self.lag_is_zero(j))
            .map(|j| self.n - j)
            .sum()
    }
}

/// Computes the Gram coefficients of `ch` for blocks of `n` bits.
pub fn gram_coefficients(ch: &Channel, n: usize) -> LambdaSet {
    assert!(n > 0, "block length must be positive");
    let h = ch.taps();
    let mu = ch.memory();
    let mut stationary = Vec::with_capacity(mu + 1);
    for j in 0..=mu {
        let s: f64 = (0..=mu - j).map(|i| h[i] * h[i + j]).sum();
        // `+ 0.0` turns a negated zero back into plain zero.
        stationary.push(-s + 0.0);
    }
    let mut truncated = Vec::with_capacity(mu);
    for j in 1..=mu {
        let mut col = Vec::new();
        for t in j..n {
            let limit = (mu - j).min(n - 1 - t);
            let s: f64 = (0..=limit).map(|i| h[i] * h[i + j]).sum();
            col.push(-s + 0.0);
        }
        truncated.push(col);
    }
    LambdaSet { n, mu, stationary, truncated }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn ch(taps: &[f64]) -> Channel {
        Channel::new(taps.to_vec()).unwrap()
    }

    #[test]
    fn build_rejects_bad_taps() {
        assert_eq!(Channel::new(vec![]).unwrap_err(), ChannelError::EmptyTaps);
        assert_eq!(Channel::new(vec![0.0, 1.0]).unwrap_err(), ChannelError::ZeroLeadingTap);
        assert_eq!(Channel::new(vec![1.0, f64::NAN]).unwrap_err(), ChannelError::NonFiniteTap);
        let c = ch(&[1.0, 1.0, -1.0, -1.0]);
        assert_eq!(c.memory(), 3);
        assert_eq!(c.energy(), 4.0);
    }

    #[test]
    fn modulate_maps_bits_to_signs() {
        assert_eq!(modulate(&[0, 1, 1, 0]), vec![1.0, -1.0, -1.0, 1.0]);
        let b = Block::from_bits(vec![1, 0]);
        assert_eq!(b.bipolar, vec![-1.0, 1.0]);
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn noiseless_transmit_matches_hand_convolution() {
        // h = [1, -1], bits [0,1,0] -> symbols [1,-1,1]:
        // y = [1, -1-1, 1+1, -1] = [1, -2, 2, -1]
        let y = transmit_noiseless(&[0, 1, 0], &ch(&[1.0, -1.0]));
        assert_eq!(y, vec![1.0, -2.0, 2.0, -1.0]);

        // Dicode-squared example with memory 2: h = [1, 0, -1], bits [0,0]
        // -> symbols [1,1]: y = [1, 1, -1, -1]
        let y = transmit_noiseless(&[0, 0], &ch(&[1.0, 0.0, -1.0]));
        assert_eq!(y, vec![1.0, 1.0, -1.0, -1.0]);

        // Memoryless channel: output is just the scaled symbols.
        let y = transmit_noiseless(&[1, 0], &ch(&[2.0]));
        assert_eq!(y, vec![-2.0, 2.0]);
    }

    #[test]
    fn transmit_is_linear_in_the_symbols() {
        // Superposing two blocks' symbol vectors superposes their outputs.
        let c = ch(&[1.0, 1.0, -1.0, -1.0]);
        let a = transmit_noiseless(&[0, 1, 1, 0, 1], &c);
        let b = transmit_noiseless(&[1, 0, 1, 1, 0], &c);
        // x_a + x_b as a direct convolution of the summed symbol vectors:
        let xa = modulate(&[0, 1, 1, 0, 1]);
        let xb = modulate(&[1, 0, 1, 1, 0]);
        let mut sum = vec![0.0; a.len()];
        for t in 0..xa.len() {
            for (i, &h) in c.taps().iter().enumerate() {
                sum[t + i] += h * (xa[t] + xb[t]);
            }
        }
        for t in 0..sum.len() {
            assert!((a[t] + b[t] - sum[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn awgn_is_reproducible_and_zero_sigma_is_exact() {
        let y = vec![1.0, -1.0, 0.5];
        let a = add_awgn(&y, 0.7, 42).unwrap();
        let b = add_awgn(&y, 0.7, 42).unwrap();
        assert_eq!(a, b);
        let c = add_awgn(&y, 0.7, 43).unwrap();
        assert_ne!(a, c);
        assert_eq!(add_awgn(&y, 0.0, 42).unwrap(), y);
        assert!(add_awgn(&y, -1.0, 0).is_err());
    }

    #[test]
    fn awgn_moments_match_the_nominal_level() {
        // Sample mean within 0.01 and variance within 2% of sigma^2 over 1e5
        // draws at sigma = 0.5.
        let sigma = 0.5;
        let noisy = add_awgn(&vec![0.0; 100_000], sigma, 7).unwrap();
        let mean: f64 = noisy.iter().sum::<f64>() / noisy.len() as f64;
        let var: f64 = noisy.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (noisy.len() - 1) as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn matched_filter_hand_example() {
        // h = [1, 1], r = [1, 0, -1]: q_t = r_t + r_{t+1} -> [1, -1]
        let q = matched_filter(&[1.0, 0.0, -1.0], &ch(&[1.0, 1.0])).unwrap();
        assert_eq!(q, vec![1.0, -1.0]);
        // Identity channel: statistics are the samples themselves.
        let q = matched_filter(&[0.3, -0.2], &ch(&[1.0])).unwrap();
        assert_eq!(q, vec![0.3, -0.2]);
        // Too-short block is rejected.
        assert!(matched_filter(&[1.0, 2.0], &ch(&[1.0, 0.0, -1.0])).is_err());
    }

    #[test]
    fn stationary_lambda_tables() {
        // h = [1, 1, -1, -1]: lambda = [-4, -1, 2, 1]
        let l = gram_coefficients(&ch(&[1.0, 1.0, -1.0, -1.0]), 10);
        assert_eq!(l.stationary(), &[-4.0, -1.0, 2.0, 1.0]);
        // h = [1, 0, -1]: lambda = [-2, 0, 1]
        let l = gram_coefficients(&ch(&[1.0, 0.0, -1.0]), 10);
        assert_eq!(l.stationary(), &[-2.0, 0.0, 1.0]);
        assert!(l.lag_is_zero(1));
        // h = [1, -1, -0.5, -0.5]: lambda = [-2.5, 0.25, 0, 0.5]
        let l = gram_coefficients(&ch(&[1.0, -1.0, -0.5, -0.5]), 10);
        assert_eq!(l.stationary(), &[-2.5, 0.25, 0.0, 0.5]);
        // h = [1, 1, -1, 1]: lambda = [-4, 1, 0, -1]
        let l = gram_coefficients(&ch(&[1.0, 1.0, -1.0, 1.0]), 10);
        assert_eq!(l.stationary(), &[-4.0, 1.0, 0.0, -1.0]);
    }

    #[test]
    fn truncated_lambda_drops_tail_terms() {
        // h = [1, 1], n = 2: the pair (t=1, j=1) keeps only i = 0:
        // lambda_{1,1} = -h_0 h_1 = -1 (equal to stationary here since mu=1).
        let l = gram_coefficients(&ch(&[1.0, 1.0]), 2);
        assert_eq!(l.truncated(1, 1), -1.0);
        assert_eq!(l.stationary(), &[-2.0, -1.0]);

        // h = [1, 1, 1], n = 3: last pair (t=2, j=1) truncates to
        // -(h_0 h_1) = -1, while the stationary value is -(h_0h_1 + h_1h_2) = -2.
        let l = gram_coefficients(&ch(&[1.0, 1.0, 1.0]), 3);
        assert_eq!(l.truncated(2, 1), -1.0);
        assert_eq!(l.truncated(1, 1), -2.0);
        assert_eq!(l.stationary()[1], -2.0);
    }

    #[test]
    fn pairs_iterate_nonzero_lags_in_fixed_order() {
        let l = gram_coefficients(&ch(&[1.0, 0.0, -1.0]), 4);
        // Lag 1 is zero and must be skipped entirely; lag 2 gives t = 2, 3.
        let got: Vec<_> = l.pairs().collect();
        assert_eq!(got, vec![(2, 2, 1.0), (3, 2, 1.0)]);
        assert_eq!(l.pair_count(), 2);

        let l = gram_coefficients(&ch(&[1.0, 1.0, -1.0, -1.0]), 10);
        assert_eq!(l.pair_count(), 9 + 8 + 7);
        let first: Vec<_> = l.pairs().take(4).collect();
        assert_eq!(
            first,
            vec![(1, 1, -1.0), (2, 1, -1.0), (2, 2, 2.0), (3, 1, -1.0)]
        );
        // Lexicographic in (t, j): the full list must be sorted.
        let all: Vec<_> = l.pairs().map(|(t, j, _)| (t, j)).collect();
        let mut sorted = all.clone();
        sorted.sort_unstable();
        assert_eq!(all, sorted);
    }

    #[test]
    fn matched_statistics_equal_gram_matrix_times_symbols() {
        // With the full n + mu samples and no noise, q = P xtilde where
        // P = H^T H and H is the (n + mu) x n convolution matrix. P's
        // diagonal is -lambda_0 and its off-diagonals are -lambda_{|t-s|}
        // (stationary), so q_t = -lambda_0 x_t - sum_{s != t} lambda_{|t-s|} x_s.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mu = rng.gen_range(0..=4);
            let n = rng.gen_range(1..=12);
            let taps: Vec<f64> = (0..=mu)
                .map(|i| {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    if i == 0 && v.abs() < 0.1 { 0.5 } else { v }
                })
                .collect();
            let c = Channel::new(taps).unwrap();
            let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let x = modulate(&bits);
            let y = transmit_noiseless(&bits, &c);
            let q = matched_filter(&y, &c).unwrap();
            let lam = gram_coefficients(&c, n).stationary().to_vec();
            for t in 0..n {
                let mut want = -lam[0] * x[t];
                for s in 0..n {
                    let d = t.abs_diff(s);
                    if s != t && d <= mu {
                        want -= lam[d] * x[s];
                    }
                }
                assert!((q[t] - want).abs() < 1e-9, "t={t} q={} want={}", q[t], want);
            }
        }
    }

    #[test]
    fn noise_enters_statistics_linearly() {
        // q(y + w) = q(y) + q(w): the front end is linear, so noisy
        // statistics are the noiseless ones plus filtered noise.
        let c = ch(&[1.0, 1.0, -1.0, -1.0]);
        let bits = [0, 1, 1, 0, 0, 1];
        let y = transmit_noiseless(&bits, &c);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w: Vec<f64> = (0..y.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let noisy: Vec<f64> = y.iter().zip(&w).map(|(a, b)| a + b).collect();
        let qn = matched_filter(&noisy, &c).unwrap();
        let qy = matched_filter(&y, &c).unwrap();
        let qw = matched_filter(&w, &c).unwrap();
        for t in 0..qy.len() {
            assert!((qn[t] - qy[t] - qw[t]).abs() < 1e-12);
        }
    }
}
