//! Tanner-graph construction: the partial-response layer (one degree-3 check
//! per interacting bit pair, tying an auxiliary state bit to the XOR of two
//! information bits) and an optional code layer of parity checks over the
//! information bits only.
//!
//! Node identifiers are stable integers laid out as information bits, then
//! state bits, then PR checks, then code checks; state bit `k` and PR check
//! `k` both correspond to the `k`-th entry of [`LambdaSet::pairs`], so graph
//! indices line up with LP variables and message-passing buffers without any
//! translation tables.

use crate::channel::LambdaSet;
use crate::ldpc::ParityCheckMatrix;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("code has length {code} but the graph carries {graph} information bits")]
    CodeLengthMismatch { code: usize, graph: usize },
}

/// Role of a node id in the combined graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Information bit `x_t` (id = `t`).
    Info(usize),
    /// State bit for pair `k` in [`LambdaSet::pairs`] order.
    State(usize),
    /// PR check for pair `k`: adjacent to `x_t`, `x_{t-j}` and state `k`.
    PrCheck(usize),
    /// Code check `c`: adjacent to the information bits of row `c`.
    CodeCheck(usize),
}

/// Combined decoding graph: PR layer plus optional code layer.
#[derive(Debug, Clone)]
pub struct TannerGraph {
    n: usize,
    /// `(t, j, lambda_j)` per PR check, in pair order.
    pairs: Vec<(usize, usize, f64)>,
    /// Information-bit indices per code check.
    code_rows: Vec<Vec<usize>>,
    /// Symmetric adjacency lists over flat node ids.
    adj: Vec<Vec<usize>>,
}

impl TannerGraph {
    /// Information bits.
    pub fn num_info(&self) -> usize {
        self.n
    }

    /// State bits (equivalently PR checks).
    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn num_code_checks(&self) -> usize {
        self.code_rows.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn info_id(&self, t: usize) -> usize {
        debug_assert!(t < self.n);
        t
    }

    pub fn state_id(&self, k: usize) -> usize {
        debug_assert!(k < self.pairs.len());
        self.n + k
    }

    pub fn pr_check_id(&self, k: usize) -> usize {
        debug_assert!(k < self.pairs.len());
        self.n + self.pairs.len() + k
    }

    pub fn code_check_id(&self, c: usize) -> usize {
        debug_assert!(c < self.code_rows.len());
        self.n + 2 * self.pairs.len() + c
    }

    pub fn kind(&self, id: usize) -> NodeKind {
        let p = self.pairs.len();
        if id < self.n {
            NodeKind::Info(id)
        } else if id < self.n + p {
            NodeKind::State(id - self.n)
        } else if id < self.n + 2 * p {
            NodeKind::PrCheck(id - self.n - p)
        } else {
            NodeKind::CodeCheck(id - self.n - 2 * p)
        }
    }

    /// `(t, j, lambda_j)` of pair `k`.
    pub fn pair(&self, k: usize) -> (usize, usize, f64) {
        self.pairs[k]
    }

    pub fn pairs(&self) -> &[(usize, usize, f64)] {
        &self.pairs
    }

    pub fn code_rows(&self) -> &[Vec<usize>] {
        &self.code_rows
    }

    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.adj[id]
    }

    /// True when the PR layer contains no cycle, i.e. the multigraph on
    /// information bits with one edge per pair is a forest. Parallel edges
    /// (two lags joining the same bit pair) count as a cycle.
    pub fn pr_layer_is_acyclic(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for &(t, j, _) in &self.pairs {
            let (a, b) = (find(&mut parent, t), find(&mut parent, t - j));
            if a == b {
                return false;
            }
            parent[a] = b;
        }
        true
    }

    /// DOT rendering for inspection: circles for bit nodes, squares for
    /// checks.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph tanner {\n  node [shape=circle];\n");
        for t in 0..self.n {
            let _ = writeln!(s, "  x{t};");
        }
        for (k, &(t, j, _)) in self.pairs.iter().enumerate() {
            let _ = writeln!(s, "  z{k} [label=\"z({t},{j})\"];");
        }
        for (k, &(t, j, _)) in self.pairs.iter().enumerate() {
            let _ = writeln!(s, "  c{k} [shape=square, label=\"c({t},{j})\"];");
        }
        for c in 0..self.code_rows.len() {
            let _ = writeln!(s, "  C{c} [shape=square];");
        }
        for (k, &(t, j, _)) in self.pairs.iter().enumerate() {
            let _ = writeln!(s, "  c{k} -- x{t};\n  c{k} -- x{};\n  c{k} -- z{k};", t - j);
        }
        for (c, row) in self.code_rows.iter().enumerate() {
            for &v in row {
                let _ = writeln!(s, "  C{c} -- x{v};");
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Builds the PR layer for `lambda`: one state bit and one degree-3 check per
/// interacting pair; pairs whose stationary coefficient is zero are omitted
/// entirely, as they cannot influence any decision.
pub fn build_pr_graph(lambda: &LambdaSet) -> TannerGraph {
    let n = lambda.block_len();
    let pairs: Vec<(usize, usize, f64)> = lambda.pairs().collect();
    let p = pairs.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + 2 * p];
    for (k, &(t, j, _)) in pairs.iter().enumerate() {
        let check = n + p + k;
        let state = n + k;
        adj[check].extend([t, t - j, state]);
        adj[t].push(check);
        adj[t - j].push(check);
        adj[state].push(check);
    }
    TannerGraph { n, pairs, code_rows: Vec::new(), adj }
}

/// Appends the checks of `h` as a code layer over the information bits; the
/// PR layer is untouched. Code-check node ids continue past the PR checks.
pub fn attach_code_layer(g: TannerGraph, h: &ParityCheckMatrix) -> Result<TannerGraph, GraphError> {
    if h.len() != g.n {
        return Err(GraphError::CodeLengthMismatch { code: h.len(), graph: g.n });
    }
    let mut g = g;
    for row in h.rows() {
        let check = g.adj.len();
        g.adj.push(row.clone());
        for &v in row {
            g.adj[v].push(check);
        }
        g.code_rows.push(row.clone());
    }
    Ok(g)
}
