//! Channel classification and error-event analysis for the LP detector.
//!
//! The questions answered here are structural: does the relaxation recover
//! the exact block decision at high SNR (classification via the pair-edge
//! graph and the normalized distance margin), and when it fails, which
//! fractional patterns dominate and at what probability (event distance,
//! event noise variance, Gaussian tail).
//!
//! All quantities are built from the stationary Gram coefficients
//! `lambda_0..lambda_mu`; `lambda_0 = -sum h_i^2` is always negative.

use crate::channel::{gram_coefficients, Channel, LambdaSet, LAMBDA_ZERO_TOL};
use thiserror::Error;

/// Treat a computed margin this close to zero as zero.
pub const DELTA_INF_TOL: f64 = 1e-12;
/// An event distance below `-DISTANCE_TOL` counts as genuinely negative.
pub const DISTANCE_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("leading Gram coefficient is zero; the taps carry no energy")]
    ZeroLeadingCoefficient,
    #[error("noise level must be nonnegative, got {0}")]
    NegativeSigma(f64),
    #[error("failure probability needs a positive deviation, got {0}")]
    NonPositiveDeviation(f64),
}

/// High-SNR verdict for the relaxation on a given channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelClass {
    /// Fractional optima are impossible at zero noise: detection is exact.
    LpProper,
    /// Fractional optima win at zero noise for long blocks.
    LpImproper,
    /// Neither test fires; the margin `delta_inf` decides empirically.
    Undetermined,
}

impl std::fmt::Display for ChannelClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ChannelClass::LpProper => "lp-proper",
            ChannelClass::LpImproper => "lp-improper",
            ChannelClass::Undetermined => "undetermined",
        })
    }
}

/// Everything the classification pipeline computes for one channel.
#[derive(Debug, Clone)]
pub struct ChannelClassification {
    /// Stationary Gram coefficients `lambda_0..lambda_mu`.
    pub lambda: Vec<f64>,
    /// All pair coefficients nonnegative.
    pub nc: bool,
    /// Every negative pair edge is a bridge of the pair graph.
    pub wnc: bool,
    /// Normalized distance margin of the length-n fractional event, n -> inf.
    pub delta_inf: f64,
    /// Minimum event distance over the search window, if one was run.
    pub d_min: Option<f64>,
    pub label: ChannelClass,
}

/// A fractional-set error event together with its Gaussian statistics.
#[derive(Debug, Clone)]
pub struct ErrorEvent {
    /// Positions of the event (the bits the relaxation would leave at 1/2).
    pub positions: Vec<usize>,
    /// Transmitted bipolar values on those positions.
    pub pattern: Vec<i8>,
    /// Distance the noise must overcome for the event to win.
    pub distance: f64,
    /// Variance of the noise component aligned with the event.
    pub variance: f64,
    /// Gaussian tail estimate `Q(distance / sqrt(variance))`.
    pub probability: f64,
}

/// True iff every pair coefficient `lambda_1..lambda_mu` is nonnegative.
///
/// Nonnegative coefficients make each pair term of the relaxed objective
/// individually minimal at consistent XOR values, which rules out
/// fractional optima outright.
pub fn check_nc(lambda: &[f64]) -> bool {
    lambda.iter().skip(1).all(|&l| l >= 0.0)
}

/// True iff every negative pair edge is a bridge of the pair multigraph.
///
/// The graph has one vertex per information bit and one edge `(t, t-j)` per
/// nonzero pair coefficient. A negative edge on a cycle admits a fractional
/// assignment that beats both of its integral completions; negative bridges
/// do not.
pub fn check_wnc(lambda: &LambdaSet) -> bool {
    let n = lambda.block_len();
    let edges: Vec<(usize, usize, f64)> = lambda.pairs().collect();
    if edges.iter().all(|&(_, _, l)| l >= 0.0) {
        return true;
    }
    let bridge = bridges(n, &edges);
    edges.iter().zip(&bridge).all(|(&(_, _, l), &b)| l >= 0.0 || b)
}

/// Marks which edges of an undirected multigraph are bridges.
///
/// Iterative depth-first search over low-links; only the specific edge id
/// used to enter a vertex is skipped, so a parallel copy still provides the
/// back edge that keeps both copies off the bridge list.
fn bridges(n: usize, edges: &[(usize, usize, f64)]) -> Vec<bool> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    // Edges arrive as (t, j, lambda); the endpoint pair is (t, t - j).
    for (id, &(t, j, _)) in edges.iter().enumerate() {
        adj[t].push((t - j, id));
        adj[t - j].push((t, id));
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![usize::MAX; n];
    let mut is_bridge = vec![false; edges.len()];
    let mut timer = 0usize;
    // Stack frames: (vertex, edge id used to enter, next adjacency index).
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        stack.push((root, usize::MAX, 0));
        while let Some(frame) = stack.last_mut() {
            let (v, enter, idx) = *frame;
            if idx < adj[v].len() {
                frame.2 += 1;
                let (u, id) = adj[v][idx];
                if id == enter {
                    continue;
                }
                if disc[u] == usize::MAX {
                    disc[u] = timer;
                    low[u] = timer;
                    timer += 1;
                    stack.push((u, id, 0));
                } else {
                    low[v] = low[v].min(disc[u]);
                }
            } else {
                stack.pop();
                if let Some(&mut (p, _, _)) = stack.last_mut() {
                    low[p] = low[p].min(low[v]);
                    if low[v] > disc[p] {
                        is_bridge[enter] = true;
                    }
                }
            }
        }
    }
    is_bridge
}

/// Normalized margin `(|lambda_0| - sum_j |lambda_j|) / |lambda_0|`.
///
/// This is the per-bit distance of the everything-at-1/2 event in the long
/// block limit, in units of `|lambda_0|`; it is at most 1 and positive
/// margins are necessary for the relaxation to stay exact as blocks grow.
pub fn lp_distance(lambda: &[f64]) -> Result<f64, AnalysisError> {
    let l0 = lambda[0].abs();
    if l0 < LAMBDA_ZERO_TOL {
        return Err(AnalysisError::ZeroLeadingCoefficient);
    }
    let tail: f64 = lambda.iter().skip(1).map(|l| l.abs()).sum();
    Ok((l0 - tail) / l0)
}

/// Classifies a channel from its pair graph on `n` bits and, when
/// `window > 0`, a joint search for the minimum event distance.
pub fn classify_channel(ch: &Channel, n: usize, window: usize) -> ChannelClassification {
    let lambda_set = gram_coefficients(ch, n);
    let lambda = lambda_set.stationary().to_vec();
    let nc = check_nc(&lambda);
    let wnc = check_wnc(&lambda_set);
    let delta_inf = lp_distance(&lambda).expect("channel taps carry energy");
    let d_min = (window > 0).then(|| search_min_distance(ch, window).0);
    let label = if wnc {
        ChannelClass::LpProper
    } else if delta_inf <= DELTA_INF_TOL || d_min.is_some_and(|d| d < -DISTANCE_TOL) {
        ChannelClass::LpImproper
    } else {
        ChannelClass::Undetermined
    };
    ChannelClassification { lambda, nc, wnc, delta_inf, d_min, label }
}

/// Distance of the event that leaves `positions` fractional when the
/// transmitted bipolar values there are `pattern`.
///
/// `d = -|F| lambda_0 - sum_pairs |lambda_{t-s}| - sum_pairs lambda_{t-s}
/// xt xs`, both sums over position pairs at most `mu` apart. Moving the
/// event positions of a noiseless block to 1/2 changes the relaxed
/// objective by exactly `-d/2`, so negative distances mean the event beats
/// the transmitted word outright.
pub fn error_event_distance(positions: &[usize], pattern: &[i8], lambda: &[f64]) -> f64 {
    assert_eq!(positions.len(), pattern.len(), "one bipolar value per position");
    let mu = lambda.len() - 1;
    let mut d = -(positions.len() as f64) * lambda[0];
    for (a, (&t, &xt)) in positions.iter().zip(pattern).enumerate() {
        for (&s, &xs) in positions[..a].iter().zip(pattern) {
            debug_assert!(s < t, "positions must be strictly increasing");
            let gap = t - s;
            if gap <= mu {
                d -= lambda[gap].abs() + lambda[gap] * f64::from(xt) * f64::from(xs);
            }
        }
    }
    d
}

/// Variance of the noise component that drives the event on `positions`.
///
/// `sigma^2 sum_s (sum_{t in F} x_t h_{s-t})^2`: the matched-filter noise
/// projected onto the event direction. `x_tilde` is the full bipolar block;
/// only its values on `positions` enter.
pub fn error_event_variance(
    positions: &[usize],
    x_tilde: &[i8],
    ch: &Channel,
    sigma: f64,
) -> Result<f64, AnalysisError> {
    if sigma < 0.0 {
        return Err(AnalysisError::NegativeSigma(sigma));
    }
    let n = x_tilde.len();
    let mu = ch.memory();
    let h = ch.taps();
    let mut member = vec![false; n];
    for &t in positions {
        assert!(t < n, "event position {t} outside block of length {n}");
        member[t] = true;
    }
    let mut total = 0.0;
    for s in 0..n + mu {
        let mut a = 0.0;
        for (i, &hi) in h.iter().enumerate() {
            if let Some(t) = s.checked_sub(i) {
                if t < n && member[t] {
                    a += f64::from(x_tilde[t]) * hi;
                }
            }
        }
        total += a * a;
    }
    Ok(sigma * sigma * total)
}

/// Gaussian tail `Q(d / sigma_F)`: the chance the noise pushes the
/// fractional event past the transmitted word.
pub fn failure_probability(distance: f64, sigma_f: f64) -> Result<f64, AnalysisError> {
    if sigma_f <= 0.0 {
        return Err(AnalysisError::NonPositiveDeviation(sigma_f));
    }
    Ok(0.5 * libm::erfc(distance / sigma_f / std::f64::consts::SQRT_2))
}

/// Distance and noise statistics of the event that puts every bit at 1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllHalfEvent {
    pub delta: f64,
    pub variance: f64,
    /// `delta / sqrt(variance)`, the argument of the Gaussian tail.
    pub ratio: f64,
}

/// Statistics of the all-1/2 event on a length-`n` block.
///
/// With the transmitted bipolar word given, the exact forms use its
/// autocorrelations `rho_j = sum_t x_t x_{t+j}`:
/// `delta = -n lambda_0 - n sum_j |lambda_j| - sum_j lambda_j rho_j` and
/// `variance = -sigma^2 n lambda_0 - 2 sigma^2 sum_j lambda_j rho_j`.
/// Without it, the autocorrelation terms vanish in the almost-sure limit,
/// leaving `delta = n |lambda_0| delta_inf` and
/// `variance = sigma^2 n |lambda_0|`.
pub fn all_half_event(lambda: &[f64], n: usize, sigma: f64, x_tilde: Option<&[i8]>) -> AllHalfEvent {
    let mu = lambda.len() - 1;
    assert!(n > mu, "block must be longer than the channel memory");
    let nf = n as f64;
    let (delta, variance) = match x_tilde {
        Some(x) => {
            assert_eq!(x.len(), n, "bipolar word must cover the block");
            let rho: Vec<f64> = (1..=mu)
                .map(|j| (0..n - j).map(|t| f64::from(x[t]) * f64::from(x[t + j])).sum())
                .collect();
            let tail: f64 = lambda.iter().skip(1).map(|l| l.abs()).sum();
            let corr: f64 = lambda.iter().skip(1).zip(&rho).map(|(l, r)| l * r).sum();
            (-nf * lambda[0] - nf * tail - corr, -sigma * sigma * (nf * lambda[0] + 2.0 * corr))
        }
        None => {
            let delta_inf = lp_distance(lambda).expect("nonzero leading coefficient");
            let l0 = lambda[0].abs();
            (nf * l0 * delta_inf, sigma * sigma * nf * l0)
        }
    };
    AllHalfEvent { delta, variance, ratio: delta / variance.sqrt() }
}

/// Searches jointly over event positions and bipolar patterns within
/// `0..window` for the minimum event distance.
///
/// Dynamic program over a trellis whose per-position symbol is "inactive",
/// "+1" or "-1" (state = last `mu` symbols, so 3^mu states): the distance
/// is additive over windows of width `mu`. Returns the minimum together
/// with the positions and pattern attaining it.
pub fn search_min_distance(ch: &Channel, window: usize) -> (f64, Vec<usize>, Vec<i8>) {
    assert!(window >= 1, "search window must contain at least one position");
    let lambda = gram_coefficients(ch, window).stationary().to_vec();
    trellis_min_distance(&lambda, window, |_| [true, true, true])
}

/// Minimum event distance over bipolar patterns for a fixed position set.
///
/// Same trellis with the alphabet pinned per position, which collapses the
/// state space to at most 2^mu reachable states.
pub fn min_distance_for_set(ch: &Channel, positions: &[usize]) -> (f64, Vec<i8>) {
    let Some(&last) = positions.last() else {
        return (0.0, Vec::new());
    };
    let window = last + 1;
    let lambda = gram_coefficients(ch, window).stationary().to_vec();
    let mut member = vec![false; window];
    for &t in positions {
        member[t] = true;
    }
    let (d, found, pattern) =
        trellis_min_distance(&lambda, window, |t| if member[t] { [false, true, true] } else { [true, false, false] });
    debug_assert_eq!(found, positions, "trellis must activate exactly the given set");
    (d, pattern)
}

/// Runs the dominant-event search and attaches Gaussian statistics at noise
/// level `sigma`, assuming an all-zero transmitted block off the event.
pub fn dominant_event(ch: &Channel, window: usize, sigma: f64) -> Result<ErrorEvent, AnalysisError> {
    if sigma < 0.0 {
        return Err(AnalysisError::NegativeSigma(sigma));
    }
    let (distance, positions, pattern) = search_min_distance(ch, window);
    let mut x_tilde = vec![1i8; window];
    for (&t, &v) in positions.iter().zip(&pattern) {
        x_tilde[t] = v;
    }
    let variance = error_event_variance(&positions, &x_tilde, ch, sigma)?;
    let probability = failure_probability(distance, variance.sqrt())?;
    Ok(ErrorEvent { positions, pattern, distance, variance, probability })
}

/// Symbols: 0 inactive, 1 -> +1, 2 -> -1.
fn symbol_value(sym: usize) -> f64 {
    match sym {
        1 => 1.0,
        2 => -1.0,
        _ => 0.0,
    }
}

fn trellis_min_distance(
    lambda: &[f64],
    window: usize,
    allowed: impl Fn(usize) -> [bool; 3],
) -> (f64, Vec<usize>, Vec<i8>) {
    let mu = lambda.len() - 1;
    let states = 3usize.pow(mu as u32);
    // Cost layers indexed by (state, seen-an-active-symbol); parents record
    // (previous state, previous seen, symbol) for backtracking.
    let mut cost = vec![[f64::INFINITY; 2]; states];
    cost[0][0] = 0.0;
    let mut parents: Vec<Vec<[(usize, usize, usize); 2]>> = Vec::with_capacity(window);
    let shift = states / 3.max(1);
    for t in 0..window {
        let mask = allowed(t);
        let mut next = vec![[f64::INFINITY; 2]; states];
        let mut parent = vec![[(usize::MAX, 0, 0); 2]; states];
        for state in 0..states {
            for seen in 0..2 {
                let base = cost[state][seen];
                if base.is_infinite() {
                    continue;
                }
                for (sym, &ok) in mask.iter().enumerate() {
                    if !ok {
                        continue;
                    }
                    let step = if sym == 0 {
                        0.0
                    } else {
                        // Digit k of the state holds the symbol at lag
                        // mu - k, so the low digit pairs with lambda_mu.
                        let val = symbol_value(sym);
                        let mut c = -lambda[0];
                        let mut rest = state;
                        for lam in lambda.iter().skip(1).rev() {
                            let digit = rest % 3;
                            rest /= 3;
                            if digit != 0 {
                                c -= lam.abs() + lam * val * symbol_value(digit);
                            }
                        }
                        c
                    };
                    let new_state = if mu == 0 { 0 } else { sym * shift + state / 3 };
                    let new_seen = if sym != 0 { 1 } else { seen };
                    let total = base + step;
                    if total < next[new_state][new_seen] {
                        next[new_state][new_seen] = total;
                        parent[new_state][new_seen] = (state, seen, sym);
                    }
                }
            }
        }
        cost = next;
        parents.push(parent);
    }

    let (mut best_state, mut best) = (0, f64::INFINITY);
    for (state, c) in cost.iter().enumerate() {
        if c[1] < best {
            best = c[1];
            best_state = state;
        }
    }
    assert!(best.is_finite(), "no active assignment fits the alphabet restriction");

    let mut positions = Vec::new();
    let mut pattern = Vec::new();
    let (mut state, mut seen) = (best_state, 1);
    for t in (0..window).rev() {
        let (prev_state, prev_seen, sym) = parents[t][state][seen];
        if sym != 0 {
            positions.push(t);
            pattern.push(if sym == 1 { 1i8 } else { -1i8 });
        }
        state = prev_state;
        seen = prev_seen;
    }
    positions.reverse();
    pattern.reverse();
    (best, positions, pattern)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{matched_filter, transmit_noiseless};
    use crate::lp::evaluate_projected_objective;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn ch(taps: &[f64]) -> Channel {
        Channel::new(taps.to_vec()).unwrap()
    }

    fn random_taps(mu: usize, rng: &mut ChaCha8Rng) -> Channel {
        loop {
            let taps: Vec<f64> = (0..=mu).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if taps[0].abs() > 0.1 {
                return ch(&taps);
            }
        }
    }

    const EPR4: [f64; 4] = [1.0, 1.0, -1.0, -1.0];
    const PR4: [f64; 3] = [1.0, 0.0, -1.0];
    const CH1: [f64; 4] = [1.0, -1.0, -0.5, -0.5];
    const CH2: [f64; 4] = [1.0, 1.0, -1.0, 1.0];

    fn stationary(taps: &[f64]) -> Vec<f64> {
        gram_coefficients(&ch(taps), taps.len()).stationary().to_vec()
    }

    #[test]
    fn nonnegative_coefficient_examples() {
        let l = stationary(&CH1);
        assert!((l[1] - 0.25).abs() < 1e-12);
        assert!(l[2].abs() < 1e-12);
        assert!((l[3] - 0.5).abs() < 1e-12);
        assert!(check_nc(&l));
        assert!(!check_nc(&stationary(&EPR4)));
        assert!(check_nc(&stationary(&[2.0])));
    }

    #[test]
    fn bridge_condition_examples() {
        // Negative lag-1 edges of this channel sit on 1-1-2 triangles.
        assert!(!check_wnc(&gram_coefficients(&ch(&EPR4), 4)));
        // 1 + D - D^2 has lambda_1 = 0: only disjoint lag-2 chains remain.
        assert!(check_wnc(&gram_coefficients(&ch(&[1.0, 1.0, -1.0]), 8)));
        // Nonnegative coefficients make the condition vacuous.
        assert!(check_wnc(&gram_coefficients(&ch(&CH1), 8)));
        assert!(check_wnc(&gram_coefficients(&ch(&PR4), 8)));
        // Lag-3 negative edges close 4-cycles with three lag-1 hops.
        assert!(!check_wnc(&gram_coefficients(&ch(&CH2), 8)));
    }

    #[test]
    fn parallel_negative_edges_are_never_bridges() {
        // Two copies of the same edge form a 2-cycle; a lone copy is a
        // bridge.
        let single = bridges(2, &[(1, 1, -1.0)]);
        assert_eq!(single, vec![true]);
        let double = bridges(2, &[(1, 1, -1.0), (1, 1, -1.0)]);
        assert_eq!(double, vec![false, false]);
    }

    #[test]
    fn distance_margin_examples() {
        assert_eq!(lp_distance(&stationary(&EPR4)).unwrap(), 0.0);
        assert_eq!(lp_distance(&stationary(&PR4)).unwrap(), 0.5);
        assert!((lp_distance(&stationary(&CH2)).unwrap() - 0.5).abs() < 1e-12);
        assert!((lp_distance(&stationary(&CH1)).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(lp_distance(&[0.0, 1.0]), Err(AnalysisError::ZeroLeadingCoefficient));
        // Orthogonal shifts: margin 1 exactly when no pair couples.
        assert_eq!(lp_distance(&stationary(&[3.0])).unwrap(), 1.0);
        assert!(lp_distance(&stationary(&[1.0, 0.5])).unwrap() < 1.0);
    }

    #[test]
    fn classification_examples() {
        let c1 = classify_channel(&ch(&CH1), 16, 8);
        assert!(c1.nc && c1.wnc);
        assert_eq!(c1.label, ChannelClass::LpProper);

        let e = classify_channel(&ch(&EPR4), 16, 8);
        assert!(!e.nc && !e.wnc);
        assert_eq!(e.label, ChannelClass::LpImproper);
        assert_eq!(e.delta_inf, 0.0);

        let c2 = classify_channel(&ch(&CH2), 16, 8);
        assert_eq!(c2.label, ChannelClass::Undetermined);
        assert!((c2.delta_inf - 0.5).abs() < 1e-12);
        assert!(c2.d_min.unwrap() > 0.0);

        let p = classify_channel(&ch(&PR4), 16, 8);
        assert_eq!(p.label, ChannelClass::LpProper);

        // Skipping the search leaves d_min unset but still labels.
        assert!(classify_channel(&ch(&EPR4), 16, 0).d_min.is_none());
    }

    #[test]
    fn event_distance_hand_values() {
        let l = stationary(&[1.0, 1.0]);
        assert_eq!(error_event_distance(&[], &[], &l), 0.0);
        // Singletons pay the full bit energy.
        assert_eq!(error_event_distance(&[3], &[1], &l), 2.0);
        // Alternating neighbors leave weak matched-filter evidence on this
        // channel, so their joint event sits at half the distance.
        assert_eq!(error_event_distance(&[0, 1], &[1, 1], &l), 4.0);
        assert_eq!(error_event_distance(&[0, 1], &[1, -1], &l), 2.0);
        // Positions more than mu apart decouple into singletons.
        assert_eq!(error_event_distance(&[0, 5], &[1, -1], &l), 4.0);
    }

    #[test]
    fn event_variance_hand_values_and_errors() {
        let c = ch(&[1.0, 1.0]);
        assert_eq!(error_event_variance(&[0, 1], &[1, 1], &c, 1.0).unwrap(), 6.0);
        assert_eq!(error_event_variance(&[0, 1], &[1, 1], &c, 0.5).unwrap(), 1.5);
        assert_eq!(error_event_variance(&[], &[1, 1], &c, 1.0).unwrap(), 0.0);
        assert!(matches!(
            error_event_variance(&[0], &[1, 1], &c, -1.0),
            Err(AnalysisError::NegativeSigma(_))
        ));
    }

    #[test]
    fn event_variance_matches_sampled_noise() {
        // The event statistic is a fixed linear functional of the white
        // noise; its sample variance must match the closed form.
        let c = ch(&EPR4);
        let n = 12;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let positions = [0usize, 1, 3];
        let x_tilde: Vec<i8> = (0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect();
        let sigma = 0.7;
        let expected = error_event_variance(&positions, &x_tilde, &c, sigma).unwrap();

        let mu = c.memory();
        let h = c.taps();
        let normal = Normal::new(0.0, sigma).unwrap();
        let mut sum_sq = 0.0;
        let draws = 100_000;
        for _ in 0..draws {
            let mut stat = 0.0;
            for s in 0..n + mu {
                let mut a = 0.0;
                for &t in &positions {
                    if s >= t && s - t <= mu {
                        a += f64::from(x_tilde[t]) * h[s - t];
                    }
                }
                stat += a * normal.sample(&mut rng);
            }
            sum_sq += stat * stat;
        }
        let sampled = sum_sq / f64::from(draws);
        assert!(
            (sampled - expected).abs() < 0.05 * expected,
            "sampled {sampled} vs expected {expected}"
        );
    }

    #[test]
    fn gaussian_tail_values() {
        assert_eq!(failure_probability(0.0, 1.0).unwrap(), 0.5);
        assert!((failure_probability(1.0, 1.0).unwrap() - 0.158_655).abs() < 1e-6);
        assert!(failure_probability(-0.3, 1.0).unwrap() > 0.5);
        assert!((failure_probability(2.0, 2.0).unwrap()
            - failure_probability(1.0, 1.0).unwrap())
        .abs()
            < 1e-15);
        assert!(matches!(
            failure_probability(1.0, 0.0),
            Err(AnalysisError::NonPositiveDeviation(_))
        ));
    }

    #[test]
    fn all_half_event_hand_and_asymptotic_values() {
        let l = stationary(&[1.0, 1.0]);
        let exact = all_half_event(&l, 2, 1.0, Some(&[1, 1]));
        assert_eq!(exact.delta, 3.0);
        assert_eq!(exact.variance, 6.0);
        let scaled = all_half_event(&l, 2, 2.0, Some(&[1, 1]));
        assert_eq!(scaled.variance, 24.0);

        // Zero-margin channel: asymptotic distance collapses.
        let e = all_half_event(&stationary(&EPR4), 100, 1.0, None);
        assert_eq!(e.delta, 0.0);
        assert_eq!(e.variance, 400.0);

        // Exact and asymptotic forms agree to the autocorrelation
        // fluctuation, O(1/sqrt(n)) relative, for a random word.
        let n = 1000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let word: Vec<i8> = (0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect();
        let l4 = stationary(&PR4);
        let exact = all_half_event(&l4, n, 0.5, Some(&word));
        let asym = all_half_event(&l4, n, 0.5, None);
        assert!((exact.delta - asym.delta).abs() < 0.1 * asym.delta);
        assert!((exact.variance - asym.variance).abs() < 0.1 * asym.variance);
        assert!((exact.ratio - asym.ratio).abs() < 0.1 * asym.ratio);
    }

    #[test]
    fn half_substitution_changes_objective_by_half_the_distance() {
        // Replacing any subset of a transmitted block by 1/2 at zero noise
        // moves the relaxed objective by exactly minus half the event
        // distance, for every block and every subset.
        let c = ch(&[1.0, 1.0, -1.0]);
        let n = 6;
        let lambda = gram_coefficients(&c, n);
        let stat = lambda.stationary().to_vec();
        for word in 0u32..1 << n {
            let bits: Vec<u8> = (0..n).map(|t| ((word >> t) & 1) as u8).collect();
            let r = transmit_noiseless(&bits, &c);
            let q = matched_filter(&r, &c).unwrap();
            let x: Vec<f64> = bits.iter().map(|&b| f64::from(b)).collect();
            let f_x = evaluate_projected_objective(&x, &q, &lambda);
            for subset in 1u32..1 << n {
                let positions: Vec<usize> = (0..n).filter(|t| (subset >> t) & 1 == 1).collect();
                let pattern: Vec<i8> =
                    positions.iter().map(|&t| 1 - 2 * i8::try_from(bits[t]).unwrap()).collect();
                let mut hybrid = x.clone();
                for &t in &positions {
                    hybrid[t] = 0.5;
                }
                let f_h = evaluate_projected_objective(&hybrid, &q, &lambda);
                let d = error_event_distance(&positions, &pattern, &stat);
                assert!(
                    (f_x - f_h - (-d / 2.0)).abs() < 1e-9,
                    "word {word:b} subset {subset:b}: {} vs {}",
                    f_x - f_h,
                    -d / 2.0
                );
            }
        }
    }

    /// Exhaustive minimum over all nonempty position sets and patterns.
    fn brute_min_distance(lambda: &[f64], window: usize) -> f64 {
        let mut best = f64::INFINITY;
        for assign in 1..3usize.pow(window as u32) {
            let mut positions = Vec::new();
            let mut pattern = Vec::new();
            let mut rest = assign;
            for t in 0..window {
                let sym = rest % 3;
                rest /= 3;
                if sym != 0 {
                    positions.push(t);
                    pattern.push(if sym == 1 { 1i8 } else { -1 });
                }
            }
            if positions.is_empty() {
                continue;
            }
            best = best.min(error_event_distance(&positions, &pattern, lambda));
        }
        best
    }

    #[test]
    fn search_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut channels = vec![ch(&EPR4), ch(&PR4), ch(&CH1), ch(&CH2)];
        channels.extend((0..3).map(|_| random_taps(3, &mut rng)));
        for c in &channels {
            let window = 7;
            let lambda = gram_coefficients(c, window).stationary().to_vec();
            let (d, positions, pattern) = search_min_distance(c, window);
            let brute = brute_min_distance(&lambda, window);
            assert!((d - brute).abs() < 1e-9, "taps {:?}: {d} vs {brute}", c.taps());
            // The reported witness must reproduce the reported distance.
            assert!((error_event_distance(&positions, &pattern, &lambda) - d).abs() < 1e-12);
            assert!(!positions.is_empty());
        }
    }

    #[test]
    fn search_window_one_returns_the_singleton() {
        let (d, positions, pattern) = search_min_distance(&ch(&EPR4), 1);
        assert_eq!(d, 4.0);
        assert_eq!(positions, vec![0]);
        assert_eq!(pattern.len(), 1);
    }

    #[test]
    fn fixed_set_search_matches_restricted_brute_force() {
        let c = ch(&EPR4);
        let lambda = gram_coefficients(&c, 8).stationary().to_vec();
        let positions = [1usize, 2, 4, 7];
        let (d, pattern) = min_distance_for_set(&c, &positions);
        assert_eq!(pattern.len(), positions.len());
        let mut best = f64::INFINITY;
        for mask in 0u32..1 << positions.len() {
            let pat: Vec<i8> =
                (0..positions.len()).map(|i| if (mask >> i) & 1 == 1 { -1 } else { 1 }).collect();
            best = best.min(error_event_distance(&positions, &pat, &lambda));
        }
        assert!((d - best).abs() < 1e-12);
        assert!((error_event_distance(&positions, &pattern, &lambda) - d).abs() < 1e-12);
        assert_eq!(min_distance_for_set(&c, &[]), (0.0, vec![]));
    }

    #[test]
    fn dominant_event_carries_consistent_statistics() {
        let event = dominant_event(&ch(&EPR4), 10, 0.8).unwrap();
        assert!(!event.positions.is_empty());
        assert!(event.variance > 0.0);
        let p = failure_probability(event.distance, event.variance.sqrt()).unwrap();
        assert_eq!(event.probability, p);
        assert!(matches!(
            dominant_event(&ch(&EPR4), 10, -0.1),
            Err(AnalysisError::NegativeSigma(_))
        ));
    }

    #[test]
    fn structural_invariants_over_random_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut nc_seen = 0;
        for _ in 0..200 {
            let mu = rng.gen_range(1..=4);
            let c = random_taps(mu, &mut rng);
            let lambda = gram_coefficients(&c, 12);
            let stat = lambda.stationary().to_vec();
            let delta = lp_distance(&stat).unwrap();
            assert!(delta <= 1.0 + 1e-12);
            if check_nc(&stat) {
                nc_seen += 1;
                assert!(check_wnc(&lambda), "nonnegative coefficients, taps {:?}", c.taps());
                assert!(delta >= 0.5 - 1e-12, "margin {delta} below 1/2, taps {:?}", c.taps());
            }
        }
        assert!(nc_seen > 0, "sampler never produced a nonnegative-coefficient channel");
    }

    #[test]
    fn scaling_taps_scales_coefficients_but_not_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let c = random_taps(rng.gen_range(1..=3), &mut rng);
            let base = classify_channel(&c, 12, 6);
            for scale in [0.5, 3.0] {
                let scaled_ch =
                    Channel::new(c.taps().iter().map(|h| scale * h).collect()).unwrap();
                let scaled = classify_channel(&scaled_ch, 12, 6);
                for (a, b) in base.lambda.iter().zip(&scaled.lambda) {
                    assert!((scale * scale * a - b).abs() < 1e-9 * b.abs().max(1.0));
                }
                assert!((base.delta_inf - scaled.delta_inf).abs() < 1e-12);
                assert_eq!(base.label, scaled.label);
                assert_eq!(base.nc, scaled.nc);
                assert_eq!(base.wnc, scaled.wnc);
            }
        }
    }
}
