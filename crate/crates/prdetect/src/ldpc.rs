//! Parity-check matrices for the code layer: alist I/O, random regular
//! construction, GF(2) systematic encoding, and syndrome checking.
//!
//! The detector itself only needs the check rows (which variables participate
//! in each parity constraint); the encoder exists so simulations can transmit
//! valid codewords. Everything here is bit-oriented and small-scale — code
//! lengths in the hundreds — so the GF(2) algebra is plain dense elimination.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LdpcError {
    #[error("malformed alist: {0}")]
    MalformedAlist(String),
    #[error("variable index {index} out of range for code length {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("duplicate variable index {index} in check {check}")]
    DuplicateIndex { index: usize, check: usize },
    #[error("check {0} is empty")]
    EmptyCheck(usize),
    #[error("n*dv = {edges} is not divisible by dc = {dc}")]
    DegreeMismatch { edges: usize, dc: usize },
    #[error("info word has length {got}, encoder expects {expected}")]
    InfoLengthMismatch { got: usize, expected: usize },
}

/// Sparse parity-check matrix: `m` checks over `n` binary variables.
///
/// Rows hold sorted, duplicate-free 0-based variable indices. A word `w`
/// belongs to the code iff every row has even parity over its indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n: usize,
    rows: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from check rows, validating index ranges and
    /// rejecting duplicate entries and empty checks.
    pub fn new(n: usize, rows: Vec<Vec<usize>>) -> Result<Self, LdpcError> {
        let mut rows = rows;
        for (c, row) in rows.iter_mut().enumerate() {
            if row.is_empty() {
                return Err(LdpcError::EmptyCheck(c));
            }
            row.sort_unstable();
            for w in row.windows(2) {
                if w[0] == w[1] {
                    return Err(LdpcError::DuplicateIndex { index: w[0], check: c });
                }
            }
            if *row.last().unwrap() >= n {
                return Err(LdpcError::IndexOutOfRange { index: *row.last().unwrap(), n });
            }
        }
        Ok(ParityCheckMatrix { n, rows })
    }

    /// Code length (number of variables).
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of checks.
    pub fn num_checks(&self) -> usize {
        self.rows.len()
    }

    /// Sorted variable indices of check `c`.
    pub fn row(&self, c: usize) -> &[usize] {
        &self.rows[c]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// Design rate `1 - m/n` (the true rate is higher when rank-deficient).
    pub fn design_rate(&self) -> f64 {
        1.0 - self.rows.len() as f64 / self.n as f64
    }
}

/// True iff every check of `h` has even parity over `word`.
pub fn syndrome_check(word: &[u8], h: &ParityCheckMatrix) -> bool {
    assert_eq!(word.len(), h.len(), "word length must match code length");
    h.rows().iter().all(|row| row.iter().fold(0u8, |p, &i| p ^ (word[i] & 1)) == 0)
}

/// Parses the standard alist layout: `n m`, then `dv_max dc_max`, then the
/// `n` variable degrees, the `m` check degrees, and the 1-indexed adjacency
/// lists (variables first, then checks), each line padded with zeros to the
/// corresponding maximum degree.
pub fn parse_alist(text: &str) -> Result<ParityCheckMatrix, LdpcError> {
    let bad = |msg: &str| LdpcError::MalformedAlist(msg.to_string());
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut ints = |expect: &str| -> Result<Vec<usize>, LdpcError> {
        let line = lines.next().ok_or_else(|| bad(&format!("missing {expect} line")))?;
        line.split_whitespace()
            .map(|tok| tok.parse::<usize>().map_err(|_| bad(&format!("bad integer in {expect} line"))))
            .collect()
    };

    let head = ints("size")?;
    if head.len() != 2 {
        return Err(bad("size line must hold exactly `n m`"));
    }
    let (n, m) = (head[0], head[1]);
    let maxdeg = ints("max-degree")?;
    if maxdeg.len() != 2 {
        return Err(bad("max-degree line must hold exactly `dv_max dc_max`"));
    }
    let (dv_max, dc_max) = (maxdeg[0], maxdeg[1]);
    let var_deg = ints("variable-degree")?;
    if var_deg.len() != n {
        return Err(bad("variable-degree list length differs from n"));
    }
    let chk_deg = ints("check-degree")?;
    if chk_deg.len() != m {
        return Err(bad("check-degree list length differs from m"));
    }
    if var_deg.iter().sum::<usize>() != chk_deg.iter().sum::<usize>() {
        return Err(bad("degree sums disagree between variables and checks"));
    }
    if var_deg.iter().any(|&d| d > dv_max) || chk_deg.iter().any(|&d| d > dc_max) {
        return Err(bad("degree exceeds the declared maximum"));
    }

    // Adjacency lists with 0-padding: nonzero prefix must match the degree.
    let mut read_adj = |count: usize, deg: &[usize], what: &str| -> Result<Vec<Vec<usize>>, LdpcError> {
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let entries = ints(&format!("{what} adjacency"))?;
            let nonzero: Vec<usize> = entries.iter().copied().filter(|&e| e != 0).collect();
            if nonzero.len() != deg[i] {
                return Err(bad(&format!("{what} {} lists {} neighbors, degree says {}", i + 1, nonzero.len(), deg[i])));
            }
            out.push(nonzero);
        }
        Ok(out)
    };
    let var_adj = read_adj(n, &var_deg, "variable")?;
    let chk_adj = read_adj(m, &chk_deg, "check")?;

    // Cross-validate the two directions before dropping the variable lists.
    let mut rows = Vec::with_capacity(m);
    for (c, adj) in chk_adj.iter().enumerate() {
        let mut row = Vec::with_capacity(adj.len());
        for &v1 in adj {
            if v1 == 0 || v1 > n {
                return Err(LdpcError::IndexOutOfRange { index: v1, n });
            }
            row.push(v1 - 1);
        }
        for &v in &row {
            if !var_adj[v].contains(&(c + 1)) {
                return Err(bad(&format!("check {} lists variable {} but not vice versa", c + 1, v + 1)));
            }
        }
        rows.push(row);
    }
    for (v, adj) in var_adj.iter().enumerate() {
        for &c1 in adj {
            if c1 == 0 || c1 > m {
                return Err(bad(&format!("variable {} references check {} out of range", v + 1, c1)));
            }
            if !chk_adj[c1 - 1].contains(&(v + 1)) {
                return Err(bad(&format!("variable {} lists check {} but not vice versa", v + 1, c1)));
            }
        }
    }
    ParityCheckMatrix::new(n, rows)
}

/// Serializes to the alist layout accepted by [`parse_alist`], with 0-padded
/// adjacency lines.
pub fn write_alist(h: &ParityCheckMatrix) -> String {
    let n = h.len();
    let m = h.num_checks();
    let mut var_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, row) in h.rows().iter().enumerate() {
        for &v in row {
            var_adj[v].push(c + 1);
        }
    }
    let dv_max = var_adj.iter().map(Vec::len).max().unwrap_or(0);
    let dc_max = h.rows().iter().map(Vec::len).max().unwrap_or(0);

    let list = |vals: &[usize]| vals.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
    let padded = |vals: &[usize], width: usize| {
        let mut padded: Vec<usize> = vals.to_vec();
        padded.resize(width, 0);
        list(&padded)
    };

    let mut out = String::new();
    out.push_str(&format!("{n} {m}\n{dv_max} {dc_max}\n"));
    out.push_str(&list(&var_adj.iter().map(Vec::len).collect::<Vec<_>>()));
    out.push('\n');
    out.push_str(&list(&h.rows().iter().map(Vec::len).collect::<Vec<_>>()));
    out.push('\n');
    for adj in &var_adj {
        out.push_str(&padded(adj, dv_max));
        out.push('\n');
    }
    for row in h.rows() {
        let ones: Vec<usize> = row.iter().map(|&v| v + 1).collect();
        out.push_str(&padded(&ones, dc_max));
        out.push('\n');
    }
    out
}

/// Draws a random (dv, dc)-regular parity-check matrix on `n` variables via
/// the configuration model: variable sockets are shuffled and dealt to checks
/// `dc` at a time, then double edges are repaired by bounded random swaps
/// (resampling the whole permutation if repair stalls). A light local-swap
/// pass then tries to break 4-cycles; short cycles may survive. Deterministic
/// under `seed`.
pub fn generate_regular(n: usize, dv: usize, dc: usize, seed: u64) -> Result<ParityCheckMatrix, LdpcError> {
    assert!(n > 0 && dv > 0 && dc > 0, "degrees and length must be positive");
    let edges = n * dv;
    if edges % dc != 0 {
        return Err(LdpcError::DegreeMismatch { edges, dc });
    }
    let m = edges / dc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut sockets: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(dv)).collect();
    'attempt: loop {
        sockets.shuffle(&mut rng);
        // Repair duplicate variables within a check by swapping the offending
        // socket with a random socket of another check.
        let has_dup = |sockets: &[usize], c: usize, skip: usize| {
            let chunk = &sockets[c * dc..(c + 1) * dc];
            chunk.iter().enumerate().any(|(i, &v)| i != skip && v == chunk[skip])
        };
        let mut budget = 50 * edges;
        for c in 0..m {
            let mut i = 1;
            while i < dc {
                let p = c * dc + i;
                if has_dup(&sockets, c, i) {
                    if budget == 0 {
                        continue 'attempt;
                    }
                    budget -= 1;
                    let q = rng.gen_range(0..edges);
                    if q / dc == c {
                        continue;
                    }
                    sockets.swap(p, q);
                    // Accept only if neither side now holds a duplicate.
                    if has_dup(&sockets, c, i) || has_dup(&sockets, q / dc, q % dc) {
                        sockets.swap(p, q);
                    } else {
                        i = 1; // earlier slots of this check stay clean; recheck from start anyway
                    }
                    continue;
                }
                i += 1;
            }
        }

        // Best-effort 4-cycle breaking: if two checks share two variables,
        // swap one of the shared sockets elsewhere when that keeps all
        // involved checks duplicate-free.
        for _pass in 0..4 {
            let mut swapped = false;
            for c1 in 0..m {
                for c2 in c1 + 1..m {
                    let chunk1 = &sockets[c1 * dc..(c1 + 1) * dc];
                    let chunk2 = &sockets[c2 * dc..(c2 + 1) * dc];
                    let shared: Vec<usize> =
                        chunk1.iter().filter(|v| chunk2.contains(v)).copied().collect();
                    if shared.len() < 2 {
                        continue;
                    }
                    let p = c1 * dc + chunk1.iter().position(|&v| v == shared[0]).unwrap();
                    let q = rng.gen_range(0..edges);
                    let (cq, iq) = (q / dc, q % dc);
                    if cq == c1 || cq == c2 {
                        continue;
                    }
                    sockets.swap(p, q);
                    if has_dup(&sockets, c1, p % dc) || has_dup(&sockets, cq, iq) {
                        sockets.swap(p, q);
                    } else {
                        swapped = true;
                    }
                }
            }
            if !swapped {
                break;
            }
        }

        let rows: Vec<Vec<usize>> = (0..m).map(|c| sockets[c * dc..(c + 1) * dc].to_vec()).collect();
        if rows.iter().enumerate().any(|(c, _)| (1..dc).any(|i| has_dup(&sockets, c, i))) {
            continue 'attempt;
        }
        return ParityCheckMatrix::new(n, rows);
    }
}

/// Systematic GF(2) encoder derived from a parity-check matrix by
/// Gauss-Jordan elimination with column swaps.
///
/// After elimination, `rank` permuted positions carry parity bits and the
/// remaining `n - rank` carry the info word verbatim (in permuted space);
/// the recorded permutation maps positions back to original columns. Every
/// encoded word has zero syndrome against the source matrix.
#[derive(Debug, Clone)]
pub struct Encoder {
    n: usize,
    rank: usize,
    /// `perm[p]` = original column occupying permuted position `p`.
    perm: Vec<usize>,
    /// Reduced rows: `a[i]` holds, for parity position `i`, the info
    /// positions (0-based within the info block) whose XOR forms the bit.
    a: Vec<Vec<usize>>,
}

impl Encoder {
    pub fn from_matrix(h: &ParityCheckMatrix) -> Encoder {
        let n = h.len();
        let m = h.num_checks();
        let mut dense: Vec<Vec<u8>> = vec![vec![0; n]; m];
        for (c, row) in h.rows().iter().enumerate() {
            for &v in row {
                dense[c][v] = 1;
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rank = 0;
        for pos in 0..n {
            if rank == m {
                break;
            }
            // Find a pivot at or right of `pos` in some unreduced row.
            let pivot = (pos..n)
                .flat_map(|j| (rank..m).map(move |i| (i, j)))
                .find(|&(i, j)| dense[i][perm[j]] == 1);
            let Some((pi, pj)) = pivot else { break };
            dense.swap(rank, pi);
            perm.swap(pos, pj);
            for i in 0..m {
                if i != rank && dense[i][perm[pos]] == 1 {
                    let (head, tail) = dense.split_at_mut(rank.max(i));
                    let (src, dst) = if i < rank { (&tail[0], &mut head[i]) } else { (&head[rank], &mut tail[0]) };
                    for k in 0..n {
                        dst[k] ^= src[k];
                    }
                }
            }
            rank += 1;
        }
        // Row i of the reduced system reads: parity(i) = XOR of info bits it
        // still touches (columns at permuted positions >= rank).
        let a = (0..rank)
            .map(|i| (rank..n).filter(|&p| dense[i][perm[p]] == 1).map(|p| p - rank).collect())
            .collect();
        Encoder { n, rank, perm, a }
    }

    /// Number of free info bits: `n - rank(H)`.
    pub fn info_len(&self) -> usize {
        self.n - self.rank
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn code_len(&self) -> usize {
        self.n
    }

    /// True rate `(n - rank)/n`; exceeds the design rate iff H is
    /// rank-deficient.
    pub fn effective_rate(&self) -> f64 {
        self.info_len() as f64 / self.n as f64
    }

    /// Maps an info word to a codeword with zero syndrome.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>, LdpcError> {
        if info.len() != self.info_len() {
            return Err(LdpcError::InfoLengthMismatch { got: info.len(), expected: self.info_len() });
        }
        let mut word = vec![0u8; self.n];
        for (p, &bit) in info.iter().enumerate() {
            word[self.perm[self.rank + p]] = bit & 1;
        }
        for (i, deps) in self.a.iter().enumerate() {
            let parity = deps.iter().fold(0u8, |acc, &p| acc ^ (info[p] & 1));
            word[self.perm[i]] = parity;
        }
        Ok(word)
    }

    /// All `2^info_len` codewords, for tiny codes only (exhaustive ML).
    pub fn enumerate_codewords(&self) -> Vec<Vec<u8>> {
        let k = self.info_len();
        assert!(k <= 16, "codebook enumeration is for tiny codes (info_len <= 16)");
        (0..1usize << k)
            .map(|w| {
                let info: Vec<u8> = (0..k).map(|b| ((w >> b) & 1) as u8).collect();
                self.encode(&info).expect("length is correct by construction")
            })
            .collect()
    }
}
