//! Exact maximum-likelihood references: a Viterbi detector for uncoded
//! blocks and exhaustive search over small codebooks. Both minimize the
//! squared Euclidean distance between the received block and a candidate's
//! noiseless channel output, so they serve as ground truth for the relaxed
//! detectors.

use crate::channel::{transmit_noiseless, Channel};

/// Squared distance between `r` and the noiseless output of `bits`.
pub fn sequence_metric(r: &[f64], bits: &[u8], ch: &Channel) -> f64 {
    let y = transmit_noiseless(bits, ch);
    assert_eq!(y.len(), r.len(), "received length must be n + mu");
    r.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Exact uncoded ML detection by dynamic programming over the channel
/// trellis.
///
/// States encode the last `mu` bits; the block starts from the all-padding
/// state and the final `mu` branch steps shift in padding symbols (signal
/// zero), so the path metric covers all `n + mu` received samples. Exact
/// metric ties are broken toward the lexicographically smallest bit block.
pub fn viterbi_ml(r: &[f64], ch: &Channel) -> Vec<u8> {
    let mu = ch.memory();
    assert!(r.len() > mu, "received block must exceed the channel memory");
    let n = r.len() - mu;
    let h = ch.taps();
    if mu == 0 {
        // Memoryless: minimize (r_t - h_0 xt)^2 per symbol; ties pick bit 0.
        return r
            .iter()
            .map(|&rt| {
                let d0 = (rt - h[0]) * (rt - h[0]);
                let d1 = (rt + h[0]) * (rt + h[0]);
                u8::from(d1 < d0)
            })
            .collect();
    }

    let num_states = 1usize << mu;
    let mask = num_states - 1;
    // State bit k holds x_{t-1-k}; slots older than the block start are never
    // read because the branch metric sums taps only down to time zero.
    let mut metric = vec![f64::INFINITY; num_states];
    let mut path: Vec<Vec<u8>> = vec![Vec::new(); num_states];
    metric[0] = 0.0;
    for t in 0..n {
        let mut next = vec![f64::INFINITY; num_states];
        let mut next_path: Vec<Vec<u8>> = vec![Vec::new(); num_states];
        for s in 0..num_states {
            if !metric[s].is_finite() {
                continue;
            }
            // Tail of the branch output shared by both input bits.
            let mut base = 0.0;
            for i in 1..=mu.min(t) {
                let bit = (s >> (i - 1)) & 1;
                base += h[i] * (1.0 - 2.0 * bit as f64);
            }
            for b in 0..2u8 {
                let y = base + h[0] * (1.0 - 2.0 * f64::from(b));
                let cand = metric[s] + (r[t] - y) * (r[t] - y);
                let ns = ((s << 1) | b as usize) & mask;
                let better = cand < next[ns]
                    || (cand == next[ns] && {
                        let mut p = path[s].clone();
                        p.push(b);
                        p < next_path[ns]
                    });
                if better {
                    next[ns] = cand;
                    next_path[ns] = path[s].clone();
                    next_path[ns].push(b);
                }
            }
        }
        metric = next;
        path = next_path;
    }
    // Padding tail: outputs at times n..n+mu depend only on the final state.
    let mut best: Option<(f64, usize)> = None;
    for s in 0..num_states {
        if !metric[s].is_finite() {
            continue;
        }
        let mut total = metric[s];
        for t in n..n + mu {
            let mut y = 0.0;
            for i in (t - n + 1)..=mu {
                // x_{t-i} sits k steps behind x_{n-1}; k >= n would reach
                // past the block start, where padding contributes nothing.
                let k = i - (t - n) - 1;
                if k < n {
                    let bit = (s >> k) & 1;
                    y += h[i] * (1.0 - 2.0 * bit as f64);
                }
            }
            total += (r[t] - y) * (r[t] - y);
        }
        let better = match best {
            None => true,
            Some((m, bs)) => total < m || (total == m && path[s] < path[bs]),
        };
        if better {
            best = Some((total, s));
        }
    }
    path[best.expect("at least one state is reachable").1].clone()
}

/// Exhaustive ML over an explicit codebook; the reference for coded
/// detection at tiny scales. Ties prefer the lexicographically smaller word.
pub fn exhaustive_ml_coded(r: &[f64], ch: &Channel, codebook: &[Vec<u8>]) -> Vec<u8> {
    assert!(!codebook.is_empty(), "codebook must be nonempty");
    let mut best = &codebook[0];
    let mut best_metric = sequence_metric(r, best, ch);
    for word in &codebook[1..] {
        let m = sequence_metric(r, word, ch);
        if m < best_metric || (m == best_metric && word < best) {
            best = word;
            best_metric = m;
        }
    }
    best.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{add_awgn, gram_coefficients, matched_filter, transmit_noiseless};
    use crate::lp::binary_objective;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ch(taps: &[f64]) -> Channel {
        Channel::new(taps.to_vec()).unwrap()
    }

    fn brute_force_ml(r: &[f64], c: &Channel) -> Vec<u8> {
        let n = r.len() - c.memory();
        let mut best: Option<(f64, Vec<u8>)> = None;
        for w in 0..1usize << n {
            let bits: Vec<u8> = (0..n).map(|t| ((w >> t) & 1) as u8).collect();
            let m = sequence_metric(r, &bits, c);
            let better = match &best {
                None => true,
                Some((bm, bb)) => m < *bm || (m == *bm && bits < *bb),
            };
            if better {
                best = Some((m, bits));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn memoryless_channel_reduces_to_sign_rule() {
        let c = ch(&[1.0]);
        assert_eq!(viterbi_ml(&[0.3, -0.2, 0.0, 1.4], &c), vec![0, 1, 0, 0]);
        // Negative leading tap flips the rule.
        let c = ch(&[-2.0]);
        assert_eq!(viterbi_ml(&[0.3, -0.2], &c), vec![1, 0]);
    }

    #[test]
    fn matches_brute_force_on_random_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..40 {
            let mu = rng.gen_range(0..=3);
            let n = rng.gen_range(1..=9);
            let taps: Vec<f64> = (0..=mu)
                .map(|i| {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    if i == 0 && v.abs() < 0.1 { 1.0 } else { v }
                })
                .collect();
            let c = ch(&taps);
            let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let y = transmit_noiseless(&bits, &c);
            let r = add_awgn(&y, 0.8, rng.gen()).unwrap();
            assert_eq!(viterbi_ml(&r, &c), brute_force_ml(&r, &c), "taps {taps:?}");
        }
    }

    #[test]
    fn noiseless_blocks_are_recovered_exactly() {
        let c = ch(&[1.0, 1.0, -1.0, -1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let bits: Vec<u8> = (0..20).map(|_| rng.gen_range(0..2)).collect();
            let y = transmit_noiseless(&bits, &c);
            assert_eq!(viterbi_ml(&y, &c), bits);
        }
    }

    #[test]
    fn exhaustive_coded_basics() {
        let c = ch(&[1.0]);
        // Sole codeword wins regardless of r.
        assert_eq!(exhaustive_ml_coded(&[9.0, -9.0], &c, &[vec![0, 0]]), vec![0, 0]);
        // Repetition code {00, 11}: r near +1,+1 decodes to 00.
        let book = vec![vec![0, 0], vec![1, 1]];
        assert_eq!(exhaustive_ml_coded(&[0.9, 0.8], &c, &book), vec![0, 0]);
        assert_eq!(exhaustive_ml_coded(&[-0.9, 0.2], &c, &book), vec![1, 1]);
    }

    #[test]
    fn uncoded_codebook_agrees_with_viterbi() {
        let c = ch(&[1.0, 0.5, -0.7]);
        let n = 7;
        let book: Vec<Vec<u8>> =
            (0..1usize << n).map(|w| (0..n).map(|t| ((w >> t) & 1) as u8).collect()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..15 {
            let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let y = transmit_noiseless(&bits, &c);
            let r = add_awgn(&y, 1.0, rng.gen()).unwrap();
            assert_eq!(exhaustive_ml_coded(&r, &c, &book), viterbi_ml(&r, &c));
        }
    }

    #[test]
    fn squared_distance_is_affine_in_the_pairwise_objective() {
        // ||r - y(x)||^2 = C(r) + 4 (sum_t q_t x_t + sum lambda_j z_{t,j})
        // with z the XOR of the paired bits: the two criteria share their
        // argmin, which is why the matched-filter objective drives detection.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let mu = rng.gen_range(0..=3);
            let n = rng.gen_range(2..=9);
            let taps: Vec<f64> = (0..=mu)
                .map(|i| {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    if i == 0 && v.abs() < 0.1 { -0.9 } else { v }
                })
                .collect();
            let c = ch(&taps);
            let lambda = gram_coefficients(&c, n);
            let r: Vec<f64> = (0..n + mu).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let q = matched_filter(&r, &c).unwrap();

            // The constant is fixed by evaluating one candidate.
            let zero = vec![0u8; n];
            let c0 = sequence_metric(&r, &zero, &c) - 4.0 * binary_objective(&q, &lambda, &zero);
            for _ in 0..12 {
                let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
                let lhs = sequence_metric(&r, &bits, &c);
                let rhs = c0 + 4.0 * binary_objective(&q, &lambda, &bits);
                assert!((lhs - rhs).abs() < 1e-9, "identity broke: {lhs} vs {rhs}");
            }

            // Shared argmin: Viterbi equals exhaustive minimization of the
            // pairwise objective.
            let mut best: Option<(f64, Vec<u8>)> = None;
            for w in 0..1usize << n {
                let bits: Vec<u8> = (0..n).map(|t| ((w >> t) & 1) as u8).collect();
                let obj = binary_objective(&q, &lambda, &bits);
                let better = match &best {
                    None => true,
                    Some((bm, bb)) => obj < *bm || (obj == *bm && bits < *bb),
                };
                if better {
                    best = Some((obj, bits));
                }
            }
            assert_eq!(viterbi_ml(&r, &c), best.unwrap().1);
        }
    }
}
