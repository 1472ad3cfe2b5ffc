//! Sparse linear programs over box-bounded variables.
//!
//! Solves `min c.x` subject to `A x <= b` and `lo <= x <= hi` with a
//! bounded-variable primal simplex. Inequalities are turned into equalities
//! with slack variables; a basis therefore always splits into "unit" basics
//! (slacks and phase-1 artificials, whose columns are signed unit vectors)
//! and structural basics. Only the square "kernel" coupling structural
//! basics to the rows not covered by a unit basic needs a maintained
//! inverse; it is stored densely and updated by rank-one formulas on each
//! pivot, with periodic refactorization to control drift. Entering
//! variables are picked by largest reduced-cost violation, falling back to
//! Bland's least-index rule after a run of degenerate steps so the method
//! cannot cycle.
//!
//! Two measures keep highly degenerate programs fast. On long degenerate
//! runs the entering variable is drawn at random (deterministically seeded)
//! from the eligible set, which breaks the adversarial shuffles that trap
//! fixed pivot rules at mass-degenerate vertices, and the pricing
//! tolerance escalates so that rounding noise in the duals cannot pose as
//! descent. And a solve may be warm-started from the optimal basis of a
//! previous solve over the same rows and bounds ([`solve_lp_warm`]), which
//! turns a sequence of solves differing only in the objective into short
//! pivot paths.
//!
//! The returned point is always a basic solution, i.e. a vertex of the
//! feasible polytope.

/// One inequality `sum coeffs.1 * x[coeffs.0] <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// A linear program in inequality form with per-variable box bounds.
///
/// Bounds may be infinite on one side, but every variable must have at
/// least one finite bound.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub rows: Vec<SparseRow>,
}

impl LinearProgram {
    /// An LP with `num_vars` variables, zero objective and `[0, 1]` boxes.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            bounds: vec![(0.0, 1.0); num_vars],
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(SparseRow { coeffs, rhs });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver result. `values` and `objective` are meaningful only when
/// `status` is [`LpStatus::Optimal`]; otherwise `values` is empty and
/// `objective` is NaN.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Smallest magnitude at which a column entry blocks the ratio test (and
/// may then enter the inverse as a divisor). Entries below it are treated
/// as zero, conceding feasibility drift of at most a step length times
/// this — far below [`FEAS_TOL`] — in exchange for bounded divisors.
const PIVOT_TOL: f64 = 1e-8;
/// Reduced-cost threshold below which a variable is not worth entering.
const DUAL_TOL: f64 = 1e-9;
/// Slack allowed when comparing ratio-test ties.
const RATIO_TOL: f64 = 1e-9;
/// Row violation below this counts as feasible.
const FEAS_TOL: f64 = 1e-7;
/// Rank-one kernel updates between refactorizations.
const REFACTOR_EVERY: usize = 120;
/// Degenerate steps tolerated before the entering choice is randomized.
const DEGEN_LIMIT: usize = 10_000;
/// Degenerate steps tolerated before falling back to Bland's rule, whose
/// termination argument does not lean on luck.
const BLAND_LIMIT: usize = 100_000;
/// Devex weights above this trigger a fresh reference framework.
const WEIGHT_RESET: f64 = 1e8;
/// Steps below this are bookkept as degenerate rather than progress.
const PROGRESS_STEP: f64 = 1e-9;
/// Degenerate iterations tolerated before the pricing tolerance escalates.
const STALL_WINDOW: usize = 300;
/// Ceiling for the escalated pricing tolerance. Candidates pruned at this
/// level concede an objective sliver of the same order.
const MAX_DUAL_TOL: f64 = 1e-6;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

/// Minimizes the program and returns a vertex of its feasible region.
///
/// # Panics
///
/// Panics if the program is malformed: inconsistent array lengths,
/// non-finite objective entries, `lo > hi`, a variable with no finite
/// bound, or a row index out of range.
pub fn solve_lp(lp: &LinearProgram) -> LpSolution {
    validate(lp);
    Simplex::new(lp).run()
}

/// Opaque basis snapshot for warm-starting later solves.
///
/// Valid to pass back only for a program with the same rows and bounds as
/// the one that produced it; such a basis stays primal feasible when only
/// the objective changes, so the next solve starts where the last ended.
#[derive(Debug, Clone)]
pub struct WarmBasis {
    num_vars: usize,
    num_rows: usize,
    status: Vec<VarStatus>,
}

/// Like [`solve_lp`], but carries the optimal basis across calls through
/// `warm`. A snapshot that does not fit the program is discarded and the
/// solve falls back to a cold start, so the result is exact either way;
/// warmth only shortens the pivot path.
pub fn solve_lp_warm(lp: &LinearProgram, warm: &mut Option<WarmBasis>) -> LpSolution {
    validate(lp);
    if let Some(w) = warm.take() {
        let mut s = Simplex::new(lp);
        if s.install(&w) {
            let sol = s.run_from_basis();
            if sol.status == LpStatus::Optimal {
                *warm = Some(s.snapshot());
            }
            return sol;
        }
    }
    let mut s = Simplex::new(lp);
    let sol = s.run();
    if sol.status == LpStatus::Optimal {
        *warm = Some(s.snapshot());
    }
    sol
}

fn validate(lp: &LinearProgram) {
    assert_eq!(lp.objective.len(), lp.num_vars, "objective length mismatch");
    assert_eq!(lp.bounds.len(), lp.num_vars, "bounds length mismatch");
    for (j, &c) in lp.objective.iter().enumerate() {
        assert!(c.is_finite(), "objective[{j}] not finite");
    }
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        assert!(!lo.is_nan() && !hi.is_nan(), "bounds[{j}] is NaN");
        assert!(lo <= hi, "bounds[{j}] has lo > hi");
        assert!(
            lo.is_finite() || hi.is_finite(),
            "variable {j} has no finite bound"
        );
    }
    for row in &lp.rows {
        assert!(row.rhs.is_finite(), "row rhs not finite");
        for &(j, a) in &row.coeffs {
            assert!(j < lp.num_vars, "row references variable {j}");
            assert!(a.is_finite(), "row coefficient not finite");
        }
    }
}

/// Outcome of one pricing + pivot round.
enum Step {
    Done,
    Unbounded,
}

/// Entering-variable rule, escalating with the length of a degenerate run.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Rule {
    /// Largest reduced cost scaled by the devex reference weight, an
    /// approximation of the steepest-edge criterion. Plain largest reduced
    /// cost drowns at the mass-degenerate vertices of detection polytopes,
    /// where improving a variable first requires assembling a whole group
    /// of coupled basics; weighting by an estimate of the edge norm steers
    /// the walk through the cheap assembly pivots first.
    Devex,
    /// Seeded random draw from the eligible set; breaks the repetitive
    /// shuffles a fixed rule can fall into.
    Random,
    /// Least eligible index; guarantees escape in exact arithmetic.
    Bland,
}

enum PivotOutcome {
    Progress,
    Degenerate,
    Unbounded,
    Stale,
}

struct Simplex {
    n: usize,
    m: usize,
    /// Structural columns, entries sorted by row.
    cols: Vec<Vec<(usize, f64)>>,
    /// Cleaned rows (duplicates merged, zeros dropped), for row gathers.
    rows: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    b: Vec<f64>,
    /// Bounds and state for all variables: structural, slack, artificial.
    lo: Vec<f64>,
    hi: Vec<f64>,
    status: Vec<VarStatus>,
    value: Vec<f64>,
    /// True while minimizing total infeasibility with artificial costs.
    phase_one: bool,
    /// Rows that received an artificial variable.
    art_rows: Vec<usize>,
    /// Set when an empty row is plainly unsatisfiable.
    infeasible_input: bool,

    // Basis partition.
    /// Per row: unit basic (slack or artificial) covering it, or NONE.
    unit_of_row: Vec<usize>,
    /// Kernel rows (not covered by a unit basic) and their positions.
    krows: Vec<usize>,
    krow_of_row: Vec<usize>,
    /// Basic structural variables and their kernel column positions.
    kcols: Vec<usize>,
    kcol_of_var: Vec<usize>,
    /// Dense kernel inverse, `kinv[j * cap + i] = (C^-1)[j][i]` where
    /// `C[i][j] = A[krows[i]][kcols[j]]`.
    kinv: Vec<f64>,
    cap: usize,

    updates: usize,
    iterations: usize,
    /// Working pricing tolerance; escalates during stalls.
    dual_tol: f64,
    /// State of the deterministic generator behind randomized pricing.
    rng_state: u64,
    /// Devex reference weights for all variables; meaningful while
    /// nonbasic.
    weights: Vec<f64>,
    /// Cached reduced costs, updated rank-one per pivot and recomputed
    /// from the duals at every refactorization; meaningful while nonbasic.
    dcache: Vec<f64>,

    // Scratch buffers reused across iterations.
    wk: Vec<f64>,
    wu: Vec<f64>,
    touched: Vec<usize>,
    row_mark: Vec<bool>,
    y: Vec<f64>,
    /// Pivot row of the basis inverse over row space, as a sparse scatter.
    rho: Vec<f64>,
    rho_rows: Vec<usize>,
    /// Pivot row of `B^-1 A` over structural columns, sparse scatter.
    alpha: Vec<f64>,
    alpha_cols: Vec<usize>,
}

impl Simplex {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.num_vars;
        // Clean rows: merge duplicate indices, drop zero coefficients and
        // empty rows.
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut b = Vec::new();
        let mut infeasible_input = false;
        for row in &lp.rows {
            let mut coeffs = row.coeffs.clone();
            coeffs.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
            for (j, a) in coeffs {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += a,
                    _ => merged.push((j, a)),
                }
            }
            merged.retain(|&(_, a)| a != 0.0);
            if merged.is_empty() {
                if row.rhs < -FEAS_TOL {
                    infeasible_input = true;
                }
                continue;
            }
            rows.push(merged);
            b.push(row.rhs);
        }
        let m = rows.len();

        let mut cols = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &(j, a) in row {
                cols[j].push((r, a));
            }
        }

        let mut lo = Vec::with_capacity(n + 2 * m);
        let mut hi = Vec::with_capacity(n + 2 * m);
        for &(l, h) in &lp.bounds {
            lo.push(l);
            hi.push(h);
        }
        for _ in 0..m {
            lo.push(0.0);
            hi.push(f64::INFINITY);
        }
        // Artificials stay frozen at zero until phase 1 opens them.
        for _ in 0..m {
            lo.push(0.0);
            hi.push(0.0);
        }

        let mut cost = vec![0.0; n + 2 * m];
        cost[..n].copy_from_slice(&lp.objective);

        Simplex {
            n,
            m,
            cols,
            rows,
            cost,
            b,
            lo,
            hi,
            status: vec![VarStatus::AtLower; n + 2 * m],
            value: vec![0.0; n + 2 * m],
            phase_one: false,
            art_rows: Vec::new(),
            infeasible_input,
            unit_of_row: vec![NONE; m],
            krows: Vec::new(),
            krow_of_row: vec![NONE; m],
            kcols: Vec::new(),
            kcol_of_var: vec![NONE; n],
            kinv: Vec::new(),
            cap: 0,
            updates: 0,
            iterations: 0,
            dual_tol: DUAL_TOL,
            rng_state: 0x9e37_79b9_7f4a_7c15,
            weights: vec![1.0; n + 2 * m],
            dcache: vec![0.0; n + 2 * m],
            wk: Vec::new(),
            wu: vec![0.0; m],
            touched: Vec::new(),
            row_mark: vec![false; m],
            y: vec![0.0; m],
            rho: vec![0.0; m],
            rho_rows: Vec::new(),
            alpha: vec![0.0; n],
            alpha_cols: Vec::new(),
        }
    }

    fn run(&mut self) -> LpSolution {
        if self.infeasible_input {
            return self.finish(LpStatus::Infeasible);
        }
        // Start every structural variable at a finite bound.
        for j in 0..self.n {
            if self.lo[j].is_finite() {
                self.status[j] = VarStatus::AtLower;
                self.value[j] = self.lo[j];
            } else {
                self.status[j] = VarStatus::AtUpper;
                self.value[j] = self.hi[j];
            }
        }
        // Slacks pick up the residual; violated rows get a phase-1
        // artificial (column -e_r) basic at the violation instead.
        let resid = self.residuals();
        for r in 0..self.m {
            let slack = self.var_slack(r);
            let art = self.var_art(r);
            if resid[r] >= 0.0 {
                self.make_unit_basic(slack, r, resid[r]);
            } else {
                self.status[slack] = VarStatus::AtLower;
                self.hi[art] = f64::INFINITY;
                self.make_unit_basic(art, r, -resid[r]);
                self.art_rows.push(r);
            }
        }

        if !self.art_rows.is_empty() {
            self.phase_one = true;
            self.refresh_dcache();
            if let Step::Unbounded = self.iterate() {
                // The infeasibility sum is bounded below by zero, so a
                // descending ray means numerical trouble, not a real ray.
                debug_assert!(false, "phase 1 reported an unbounded ray");
                return self.finish(LpStatus::Infeasible);
            }
            let infeas: f64 = self
                .art_rows
                .iter()
                .map(|&r| self.value[self.var_art(r)])
                .sum();
            if infeas > FEAS_TOL {
                return self.finish(LpStatus::Infeasible);
            }
            // Freeze artificials at zero for phase 2. Still-basic ones sit
            // degenerately at value 0 and leave on the first pivot that
            // tries to move them.
            self.phase_one = false;
            for i in 0..self.art_rows.len() {
                let a = self.var_art(self.art_rows[i]);
                self.hi[a] = 0.0;
            }
        }

        // Phase change (or no phase 1 at all): cached reduced costs must
        // reflect the real objective.
        self.refresh_dcache();
        if let Step::Unbounded = self.iterate() {
            return self.finish(LpStatus::Unbounded);
        }
        self.finish(LpStatus::Optimal)
    }

    /// Adopts a basis snapshot from a prior solve of the same constraint
    /// system and replays its values. Returns false when the snapshot does
    /// not fit; the solver state is then garbage and must be discarded.
    fn install(&mut self, w: &WarmBasis) -> bool {
        let total = self.n + 2 * self.m;
        if w.num_vars != self.n || w.num_rows != self.m || w.status.len() != total {
            return false;
        }
        self.status.copy_from_slice(&w.status);
        for v in 0..total {
            match self.status[v] {
                VarStatus::Basic => {}
                VarStatus::AtLower => {
                    if !self.lo[v].is_finite() {
                        return false;
                    }
                    self.value[v] = self.lo[v];
                }
                VarStatus::AtUpper => {
                    if !self.hi[v].is_finite() {
                        return false;
                    }
                    self.value[v] = self.hi[v];
                }
            }
        }
        for v in self.n..total {
            if self.status[v] == VarStatus::Basic {
                let r = self.row_of_unit(v);
                if self.unit_of_row[r] != NONE {
                    return false;
                }
                self.unit_of_row[r] = v;
            }
        }
        for v in 0..self.n {
            if self.status[v] == VarStatus::Basic {
                self.kcol_of_var[v] = self.kcols.len();
                self.kcols.push(v);
            }
        }
        for r in 0..self.m {
            if self.unit_of_row[r] == NONE {
                self.krow_of_row[r] = self.krows.len();
                self.krows.push(r);
            }
        }
        if self.kcols.len() != self.krows.len() || !self.try_refactor() {
            return false;
        }
        // A snapshot of this very system replays primal feasible exactly;
        // anything out of bounds means it came from somewhere else.
        for v in 0..total {
            if self.status[v] == VarStatus::Basic
                && (self.value[v] < self.lo[v] - FEAS_TOL || self.value[v] > self.hi[v] + FEAS_TOL)
            {
                return false;
            }
        }
        true
    }

    /// Snapshot for warm starts, purged of degenerate ballast.
    ///
    /// Pivoting accumulates degenerate basics: structural variables
    /// sitting exactly at a bound yet still basic, each dragging a kernel
    /// row along, so the kernel a solve ends with is often several times
    /// larger than the optimum needs. The snapshot instead rebuilds a
    /// minimal basis describing the same point: at-bound basics turn
    /// nonbasic, only interior structurals stay basic, hosted on a
    /// nonsingular subset of the current kernel rows (selected by
    /// column-wise elimination with row pivoting); every other row is
    /// covered by its slack. Solves warmed from it start with the smallest
    /// kernel the point admits, which is what their per-iteration cost
    /// scales with.
    fn snapshot(&self) -> WarmBasis {
        let evolved = || WarmBasis {
            num_vars: self.n,
            num_rows: self.m,
            status: self.status.clone(),
        };
        let mut status = Vec::with_capacity(self.status.len());
        let mut interior: Vec<usize> = Vec::new();
        for j in 0..self.n {
            let v = self.value[j];
            if self.status[j] != VarStatus::Basic {
                status.push(self.status[j]);
            } else if (v - self.lo[j]).abs() <= 1e-9 {
                status.push(VarStatus::AtLower);
            } else if (v - self.hi[j]).abs() <= 1e-9 {
                status.push(VarStatus::AtUpper);
            } else {
                status.push(VarStatus::Basic);
                interior.push(j);
            }
        }

        let k = self.krows.len();
        let ni = interior.len();
        let mut hosted = vec![false; k]; // kernel row positions kept
        if ni > 0 {
            // Column-major working copy of C restricted to the interior
            // columns.
            let mut work = vec![0.0; ni * k];
            for (c, &var) in interior.iter().enumerate() {
                for &(row, a) in &self.cols[var] {
                    let rpos = self.krow_of_row[row];
                    if rpos != NONE {
                        work[c * k + rpos] = a;
                    }
                }
            }
            let mut pivot_rows: Vec<usize> = Vec::with_capacity(ni);
            for c in 0..ni {
                for (t, &pr) in pivot_rows.iter().enumerate() {
                    let f = work[c * k + pr] / work[t * k + pr];
                    if f != 0.0 {
                        for r in 0..k {
                            let val = work[t * k + r];
                            if val != 0.0 {
                                work[c * k + r] -= f * val;
                            }
                        }
                    }
                }
                let mut best = NONE;
                let mut best_abs = 1e-9;
                for r in 0..k {
                    let v = work[c * k + r].abs();
                    if !hosted[r] && v > best_abs {
                        best = r;
                        best_abs = v;
                    }
                }
                if best == NONE {
                    // Numerically rank-deficient selection; keep the
                    // evolved basis rather than guess.
                    return evolved();
                }
                hosted[best] = true;
                pivot_rows.push(best);
            }
        }

        for r in 0..self.m {
            let rpos = self.krow_of_row[r];
            if rpos != NONE && hosted[rpos] {
                status.push(VarStatus::AtLower); // tight host row
            } else {
                status.push(VarStatus::Basic); // slack covers the row
            }
        }
        for _ in 0..self.m {
            status.push(VarStatus::AtLower); // artificials stay at zero
        }
        WarmBasis {
            num_vars: self.n,
            num_rows: self.m,
            status,
        }
    }

    /// Phase 2 from an installed basis.
    fn run_from_basis(&mut self) -> LpSolution {
        if self.infeasible_input {
            return self.finish(LpStatus::Infeasible);
        }
        if let Step::Unbounded = self.iterate() {
            return self.finish(LpStatus::Unbounded);
        }
        self.finish(LpStatus::Optimal)
    }

    fn var_slack(&self, r: usize) -> usize {
        self.n + r
    }

    fn var_art(&self, r: usize) -> usize {
        self.n + self.m + r
    }

    fn is_structural(&self, var: usize) -> bool {
        var < self.n
    }

    fn row_of_unit(&self, var: usize) -> usize {
        if var >= self.n + self.m {
            var - self.n - self.m
        } else {
            var - self.n
        }
    }

    /// Column sign of a slack (+1) or artificial (-1) variable.
    fn unit_sign(&self, var: usize) -> f64 {
        if var >= self.n + self.m {
            -1.0
        } else {
            1.0
        }
    }

    /// Objective coefficient for the current phase: phase 1 minimizes the
    /// sum of artificials, phase 2 the real objective.
    fn objective_coeff(&self, var: usize) -> f64 {
        if self.phase_one {
            if var >= self.n + self.m {
                1.0
            } else {
                0.0
            }
        } else if var >= self.n {
            0.0
        } else {
            self.cost[var]
        }
    }

    fn make_unit_basic(&mut self, var: usize, row: usize, val: f64) {
        self.status[var] = VarStatus::Basic;
        self.value[var] = val;
        self.unit_of_row[row] = var;
    }

    /// Row residuals `b - A x` over the nonbasic structural values.
    fn residuals(&self) -> Vec<f64> {
        let mut resid = self.b.clone();
        for j in 0..self.n {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let v = self.value[j];
            if v != 0.0 {
                for &(r, a) in &self.cols[j] {
                    resid[r] -= a * v;
                }
            }
        }
        resid
    }

    /// Main pivoting loop for the current phase.
    ///
    /// Detection polytopes are massively degenerate — whole families of
    /// rows sit tight at every vertex — so long runs of zero-length steps
    /// are the expected regime, and two escapes keep them short. The
    /// entering rule escalates with the run ([`Rule`]), and during a stall
    /// the pricing tolerance widens stepwise (on a fresh factorization each
    /// time) so rounding noise in the duals cannot pose as descent.
    /// Acceptance always requires pricing to come up empty; a stall alone
    /// never ends the solve.
    fn iterate(&mut self) -> Step {
        let iter_cap = 20_000 + 60 * (self.n + 2 * self.m);
        let mut degen_run = 0usize;
        let mut stall = 0usize;
        loop {
            assert!(
                self.iterations < iter_cap,
                "simplex failed to terminate within {iter_cap} iterations"
            );
            let rule = if degen_run > BLAND_LIMIT {
                Rule::Bland
            } else if degen_run > DEGEN_LIMIT {
                Rule::Random
            } else {
                Rule::Devex
            };
            let (q, dir) = match self.price(rule) {
                Some(e) => e,
                None => {
                    if self.updates == 0 {
                        return Step::Done;
                    }
                    // Confirm optimality on a fresh factorization.
                    self.refactor();
                    continue;
                }
            };
            self.iterations += 1;
            match self.pivot(q, dir, rule == Rule::Bland) {
                PivotOutcome::Unbounded => return Step::Unbounded,
                PivotOutcome::Degenerate => {
                    degen_run += 1;
                    stall += 1;
                    if stall > STALL_WINDOW {
                        stall = 0;
                        self.refactor();
                        if self.dual_tol < MAX_DUAL_TOL {
                            self.dual_tol *= 10.0;
                        }
                    }
                }
                PivotOutcome::Progress => {
                    degen_run = 0;
                    stall = 0;
                }
                PivotOutcome::Stale => {
                    // The chosen pivot element was marginal on a stale
                    // inverse; rebuild and redo the iteration.
                    self.iterations -= 1;
                    self.refactor();
                }
            }
            if self.updates >= REFACTOR_EVERY {
                self.refactor();
            }
        }
    }

    /// Picks an entering variable and its direction, or None when
    /// dual-feasible.
    fn price(&mut self, rule: Rule) -> Option<(usize, f64)> {
        let total = self.n + 2 * self.m;
        let mut best: Option<(usize, f64, f64)> = None; // (var, dir, score)
        let mut pool: Vec<(usize, f64)> = Vec::new();
        for v in 0..total {
            if self.status[v] == VarStatus::Basic || self.hi[v] - self.lo[v] <= 0.0 {
                continue;
            }
            let d = self.dcache[v];
            let (eligible, dir) = match self.status[v] {
                VarStatus::AtLower => (d < -self.dual_tol, 1.0),
                VarStatus::AtUpper => (d > self.dual_tol, -1.0),
                VarStatus::Basic => unreachable!(),
            };
            if !eligible {
                continue;
            }
            match rule {
                Rule::Bland => return Some((v, dir)), // least eligible index
                Rule::Random => pool.push((v, dir)),
                Rule::Devex => {
                    let score = d * d / self.weights[v];
                    if best.map_or(true, |(_, _, s)| score > s) {
                        best = Some((v, dir, score));
                    }
                }
            }
        }
        if !pool.is_empty() {
            let pick = (self.next_u64() % pool.len() as u64) as usize;
            return Some(pool[pick]);
        }
        best.map(|(v, dir, _)| (v, dir))
    }

    /// Splitmix64 step; deterministic across runs so repeated solves of the
    /// same program pivot identically.
    fn next_u64(&mut self) -> u64 {
        self.rng_state = self.rng_state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.rng_state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Fills `self.y` with the dual vector for the current basis and phase.
    /// Unit-covered rows carry `sign * cost` of their unit basic; kernel
    /// rows solve `C^T y_T = c_K - A[covered rows, K]^T y_covered`.
    fn compute_duals(&mut self) {
        for idx in 0..self.art_rows.len() {
            let r = self.art_rows[idx];
            let u = self.unit_of_row[r];
            if u != NONE {
                let c = self.objective_coeff(u);
                if c != 0.0 {
                    self.y[r] = self.unit_sign(u) * c;
                }
            }
        }
        let k = self.kcols.len();
        if k > 0 {
            let mut rhs = vec![0.0; k];
            for (jpos, &var) in self.kcols.iter().enumerate() {
                let mut acc = self.objective_coeff(var);
                for &(r, a) in &self.cols[var] {
                    if self.krow_of_row[r] == NONE {
                        acc -= a * self.y[r];
                    }
                }
                rhs[jpos] = acc;
            }
            for ipos in 0..k {
                let mut acc = 0.0;
                for (jpos, &rv) in rhs.iter().enumerate() {
                    acc += self.kinv[jpos * self.cap + ipos] * rv;
                }
                self.y[self.krows[ipos]] = acc;
            }
        }
    }

    fn clear_duals(&mut self) {
        for idx in 0..self.art_rows.len() {
            let r = self.art_rows[idx];
            self.y[r] = 0.0;
        }
        for ipos in 0..self.krows.len() {
            let r = self.krows[ipos];
            self.y[r] = 0.0;
        }
    }

    /// Recomputes every cached reduced cost from the duals of the current
    /// basis. Runs at every refactorization and phase change; between
    /// those the cache evolves by rank-one updates in
    /// [`Self::update_pricing_state`].
    fn refresh_dcache(&mut self) {
        self.compute_duals();
        let total = self.n + 2 * self.m;
        for v in 0..total {
            self.dcache[v] = if self.status[v] == VarStatus::Basic {
                0.0
            } else {
                self.reduced_cost(v)
            };
        }
        self.clear_duals();
    }

    fn reduced_cost(&self, v: usize) -> f64 {
        if v < self.n {
            let mut d = self.objective_coeff(v);
            for &(r, a) in &self.cols[v] {
                d -= a * self.y[r];
            }
            d
        } else if v < self.n + self.m {
            -self.y[v - self.n]
        } else {
            self.objective_coeff(v) + self.y[v - self.n - self.m]
        }
    }

    /// Computes the basis representation of the entering column, runs the
    /// ratio test and applies the resulting bound flip or basis exchange.
    fn pivot(&mut self, q: usize, dir: f64, bland: bool) -> PivotOutcome {
        let k = self.kcols.len();
        // FTRAN kernel part: wk = C^-1 a_T.
        let mut at = vec![0.0; k];
        self.gather_kernel_entries(q, &mut at);
        self.wk.clear();
        self.wk.resize(k, 0.0);
        for jpos in 0..k {
            let mut acc = 0.0;
            let base = jpos * self.cap;
            for (ipos, &av) in at.iter().enumerate() {
                acc += self.kinv[base + ipos] * av;
            }
            self.wk[jpos] = acc;
        }
        // FTRAN unit part: on covered rows,
        // w_u = sign_u * (a_q[r] - sum_j wk_j A[r, kcols_j]).
        self.touched.clear();
        for jpos in 0..k {
            let var = self.kcols[jpos];
            let w = self.wk[jpos];
            if w == 0.0 {
                continue;
            }
            for ei in 0..self.cols[var].len() {
                let (r, a) = self.cols[var][ei];
                if self.unit_of_row[r] != NONE {
                    if !self.row_mark[r] {
                        self.row_mark[r] = true;
                        self.touched.push(r);
                        self.wu[r] = 0.0;
                    }
                    self.wu[r] -= w * a;
                }
            }
        }
        if self.is_structural(q) {
            for ei in 0..self.cols[q].len() {
                let (r, a) = self.cols[q][ei];
                if self.unit_of_row[r] != NONE {
                    if !self.row_mark[r] {
                        self.row_mark[r] = true;
                        self.touched.push(r);
                        self.wu[r] = 0.0;
                    }
                    self.wu[r] += a;
                }
            }
        } else {
            let r = self.row_of_unit(q);
            if self.unit_of_row[r] != NONE {
                if !self.row_mark[r] {
                    self.row_mark[r] = true;
                    self.touched.push(r);
                    self.wu[r] = 0.0;
                }
                self.wu[r] += self.unit_sign(q);
            }
        }
        for idx in 0..self.touched.len() {
            let r = self.touched[idx];
            self.wu[r] *= self.unit_sign(self.unit_of_row[r]);
        }

        // Ratio test along x_B(t) = x_B(0) - t * dir * w with t >= 0. The
        // entering variable itself is capped by its opposite bound.
        let mut t_best = self.hi[q] - self.lo[q];
        let mut leaving: Option<(usize, f64, bool)> = None; // (var, w, to_upper)
        {
            let consider = |var: usize, w: f64, leaving: &mut Option<(usize, f64, bool)>, t_best: &mut f64| {
                let d = dir * w;
                let (t, to_upper) = if d > PIVOT_TOL {
                    if !self.lo[var].is_finite() {
                        return;
                    }
                    (((self.value[var] - self.lo[var]) / d).max(0.0), false)
                } else if d < -PIVOT_TOL {
                    if !self.hi[var].is_finite() {
                        return;
                    }
                    (((self.value[var] - self.hi[var]) / d).max(0.0), true)
                } else {
                    return;
                };
                let take = if bland {
                    t < *t_best || (t <= *t_best && leaving.map_or(true, |(lv, _, _)| var < lv))
                } else {
                    t < *t_best - RATIO_TOL
                        || (t < *t_best + RATIO_TOL
                            && leaving.map_or(true, |(_, lw, _)| w.abs() > lw.abs()))
                };
                if take {
                    *t_best = t.min(*t_best);
                    *leaving = Some((var, w, to_upper));
                }
            };
            for jpos in 0..k {
                let var = self.kcols[jpos];
                let w = self.wk[jpos];
                consider(var, w, &mut leaving, &mut t_best);
            }
            for idx in 0..self.touched.len() {
                let r = self.touched[idx];
                let var = self.unit_of_row[r];
                let w = self.wu[r];
                consider(var, w, &mut leaving, &mut t_best);
            }
        }

        if t_best.is_infinite() && leaving.is_none() {
            self.clear_touched();
            return PivotOutcome::Unbounded;
        }

        // A marginal pivot element off a stale inverse is better redone
        // after refactorization.
        if let Some((_, w_piv, _)) = leaving {
            if w_piv.abs() < 1e-7 && self.updates > 0 {
                self.clear_touched();
                return PivotOutcome::Stale;
            }
        }

        let t = t_best.max(0.0);
        let progress = t > PROGRESS_STEP;
        let step = dir * t;
        match leaving {
            None => {
                // Bound-to-bound flip; the basis is unchanged.
                self.apply_displacements(step);
                self.value[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                self.status[q] = if dir > 0.0 {
                    VarStatus::AtUpper
                } else {
                    VarStatus::AtLower
                };
                self.clear_touched();
            }
            Some((lvar, w_piv, to_upper)) => {
                self.apply_displacements(step);
                self.value[q] = match self.status[q] {
                    VarStatus::AtLower => self.lo[q] + step,
                    VarStatus::AtUpper => self.hi[q] + step,
                    VarStatus::Basic => unreachable!("entering variable is nonbasic"),
                };
                self.value[lvar] = if to_upper { self.hi[lvar] } else { self.lo[lvar] };
                self.status[lvar] = if to_upper {
                    VarStatus::AtUpper
                } else {
                    VarStatus::AtLower
                };
                self.status[q] = VarStatus::Basic;
                self.update_pricing_state(q, lvar, w_piv);
                self.exchange(q, lvar);
                self.clear_touched();
                self.updates += 1;
            }
        }
        if progress {
            PivotOutcome::Progress
        } else {
            PivotOutcome::Degenerate
        }
    }

    /// Entering column gathered on kernel rows.
    fn gather_kernel_entries(&self, q: usize, at: &mut [f64]) {
        if self.is_structural(q) {
            for &(r, a) in &self.cols[q] {
                let ipos = self.krow_of_row[r];
                if ipos != NONE {
                    at[ipos] = a;
                }
            }
        } else {
            let ipos = self.krow_of_row[self.row_of_unit(q)];
            if ipos != NONE {
                at[ipos] = self.unit_sign(q);
            }
        }
    }

    fn apply_displacements(&mut self, step: f64) {
        if step == 0.0 {
            return;
        }
        for jpos in 0..self.kcols.len() {
            let var = self.kcols[jpos];
            self.value[var] -= step * self.wk[jpos];
        }
        for idx in 0..self.touched.len() {
            let r = self.touched[idx];
            let var = self.unit_of_row[r];
            self.value[var] -= step * self.wu[r];
        }
    }

    fn clear_touched(&mut self) {
        for idx in 0..self.touched.len() {
            self.row_mark[self.touched[idx]] = false;
        }
        self.touched.clear();
    }

    /// Updates the basis partition and kernel inverse for the exchange of
    /// entering `q` against leaving `lvar`.
    fn exchange(&mut self, q: usize, lvar: usize) {
        let k = self.kcols.len();
        let q_structural = self.is_structural(q);
        let l_kernel = self.is_structural(lvar);

        if q_structural && !l_kernel {
            // Kernel grows: the leaving unit's row joins the kernel rows and
            // the entering column joins the kernel columns. Bordered-inverse
            // update with Schur complement S = alpha - v C^-1 u.
            let rl = self.row_of_unit(lvar);
            self.unit_of_row[rl] = NONE;
            let u_wk = self.wk.clone(); // C^-1 u from the FTRAN
            let vrow = self.gather_row_on_kernel_cols(rl);
            let alpha = self.coeff(rl, q);
            let mut vt = vec![0.0; k]; // v^T C^-1
            for jpos in 0..k {
                let vj = vrow[jpos];
                if vj == 0.0 {
                    continue;
                }
                let base = jpos * self.cap;
                for ipos in 0..k {
                    vt[ipos] += vj * self.kinv[base + ipos];
                }
            }
            let schur = alpha - dot(&vrow, &u_wk);
            debug_assert!(schur.abs() > 1e-12, "singular bordered update");
            self.ensure_cap(k + 1);
            let cap = self.cap;
            for jpos in 0..k {
                let base = jpos * cap;
                let f = u_wk[jpos] / schur;
                for ipos in 0..k {
                    self.kinv[base + ipos] += f * vt[ipos];
                }
                self.kinv[base + k] = -f;
            }
            let base = k * cap;
            for ipos in 0..k {
                self.kinv[base + ipos] = -vt[ipos] / schur;
            }
            self.kinv[base + k] = 1.0 / schur;
            self.krows.push(rl);
            self.krow_of_row[rl] = k;
            self.kcols.push(q);
            self.kcol_of_var[q] = k;
        } else if q_structural && l_kernel {
            // Column replacement at the leaving variable's position:
            // standard product-form update with pivot wk[p].
            let p = self.kcol_of_var[lvar];
            let piv = self.wk[p];
            debug_assert!(piv.abs() > 1e-12, "singular column replacement");
            let cap = self.cap;
            for jpos in 0..k {
                if jpos == p {
                    continue;
                }
                let f = self.wk[jpos] / piv;
                if f == 0.0 {
                    continue;
                }
                for ipos in 0..k {
                    let t = self.kinv[p * cap + ipos];
                    self.kinv[jpos * cap + ipos] -= f * t;
                }
            }
            for ipos in 0..k {
                self.kinv[p * cap + ipos] /= piv;
            }
            self.kcol_of_var[lvar] = NONE;
            self.kcols[p] = q;
            self.kcol_of_var[q] = p;
        } else if !q_structural && !l_kernel {
            // Unit for unit. Same row: plain cover swap. Different rows: the
            // kernel row of the entering unit is replaced by the leaving
            // unit's row (rank-one row update, pivot g[i0]).
            let rq = self.row_of_unit(q);
            let rl = self.row_of_unit(lvar);
            if rq == rl {
                self.unit_of_row[rq] = q;
                return;
            }
            let i0 = self.krow_of_row[rq];
            assert_ne!(i0, NONE, "entering unit's row must be a kernel row");
            let vnew = self.gather_row_on_kernel_cols(rl);
            let mut g = vec![0.0; k]; // v_new^T C^-1 over row positions
            for jpos in 0..k {
                let vj = vnew[jpos];
                if vj == 0.0 {
                    continue;
                }
                let base = jpos * self.cap;
                for ipos in 0..k {
                    g[ipos] += vj * self.kinv[base + ipos];
                }
            }
            let piv = g[i0];
            debug_assert!(piv.abs() > 1e-12, "singular row replacement");
            let cap = self.cap;
            for jpos in 0..k {
                let f = self.kinv[jpos * cap + i0] / piv;
                if f == 0.0 {
                    continue;
                }
                for ipos in 0..k {
                    let gi = if ipos == i0 { g[ipos] - 1.0 } else { g[ipos] };
                    self.kinv[jpos * cap + ipos] -= f * gi;
                }
            }
            self.unit_of_row[rl] = NONE;
            self.unit_of_row[rq] = q;
            self.krow_of_row[rq] = NONE;
            self.krows[i0] = rl;
            self.krow_of_row[rl] = i0;
        } else {
            // Entering unit, leaving structural: the kernel sheds the
            // entering unit's row and the leaving column. Pivot kinv[p][i0].
            let rq = self.row_of_unit(q);
            let i0 = self.krow_of_row[rq];
            assert_ne!(i0, NONE, "entering unit's row must be a kernel row");
            let p = self.kcol_of_var[lvar];
            let cap = self.cap;
            let piv = self.kinv[p * cap + i0];
            debug_assert!(piv.abs() > 1e-12, "singular kernel shrink");
            for jpos in 0..k {
                if jpos == p {
                    continue;
                }
                let f = self.kinv[jpos * cap + i0] / piv;
                if f == 0.0 {
                    continue;
                }
                for ipos in 0..k {
                    let t = self.kinv[p * cap + ipos];
                    self.kinv[jpos * cap + ipos] -= f * t;
                }
            }
            // Compact by moving the last column/row positions into the holes.
            let last = k - 1;
            if p != last {
                for ipos in 0..k {
                    self.kinv[p * cap + ipos] = self.kinv[last * cap + ipos];
                }
            }
            if i0 != last {
                for jpos in 0..k {
                    self.kinv[jpos * cap + i0] = self.kinv[jpos * cap + last];
                }
            }
            self.kcol_of_var[lvar] = NONE;
            self.kcols.swap_remove(p);
            if p < self.kcols.len() {
                self.kcol_of_var[self.kcols[p]] = p;
            }
            self.krow_of_row[rq] = NONE;
            self.krows.swap_remove(i0);
            if i0 < self.krows.len() {
                self.krow_of_row[self.krows[i0]] = i0;
            }
            self.unit_of_row[rq] = q;
        }
    }

    /// Pricing-state maintenance for the exchange of `q` against `lvar`:
    /// devex weights and cached reduced costs share one pivot row, so both
    /// are updated here. Runs before the kernel update so the pivot row can
    /// be read off the pre-pivot inverse. `alpha_q` is the signed pivot
    /// element.
    ///
    /// Each nonbasic `j` with pivot-row entry `alpha_j` gets
    /// `d_j -= (d_q / alpha_q) alpha_j` and
    /// `w_j = max(w_j, (alpha_j / alpha_q)^2 w_q)`; the leaving variable
    /// restarts at `d = -d_q / alpha_q` and `w = max(w_q / alpha_q^2, 1)`.
    /// Weights grown past [`WEIGHT_RESET`] reset the whole reference
    /// framework.
    fn update_pricing_state(&mut self, q: usize, lvar: usize, alpha_q: f64) {
        let k = self.kcols.len();
        // Pivot row of the basis inverse over row space. For a kernel
        // basic this is its row of the kernel inverse (zero on covered
        // rows); for a unit basic covering row rl it is
        // sign * (e_rl - A[rl, K] C^-1) spread over the kernel rows.
        self.rho_rows.clear();
        if self.is_structural(lvar) {
            let p = self.kcol_of_var[lvar];
            for ipos in 0..k {
                let val = self.kinv[p * self.cap + ipos];
                if val != 0.0 {
                    let r = self.krows[ipos];
                    self.rho[r] = val;
                    self.rho_rows.push(r);
                }
            }
        } else {
            let rl = self.row_of_unit(lvar);
            let sign = self.unit_sign(lvar);
            let vrow = self.gather_row_on_kernel_cols(rl);
            let mut vt = vec![0.0; k];
            for (jpos, &vj) in vrow.iter().enumerate() {
                if vj == 0.0 {
                    continue;
                }
                let base = jpos * self.cap;
                for ipos in 0..k {
                    vt[ipos] += vj * self.kinv[base + ipos];
                }
            }
            self.rho[rl] = sign;
            self.rho_rows.push(rl);
            for (ipos, &vi) in vt.iter().enumerate() {
                if vi != 0.0 {
                    let r = self.krows[ipos];
                    self.rho[r] = -sign * vi;
                    self.rho_rows.push(r);
                }
            }
        }

        // alpha = rho^T A over structural columns, scattered row-wise.
        self.alpha_cols.clear();
        for idx in 0..self.rho_rows.len() {
            let r = self.rho_rows[idx];
            let rv = self.rho[r];
            for ei in 0..self.rows[r].len() {
                let (j, a) = self.rows[r][ei];
                if self.alpha[j] == 0.0 {
                    self.alpha_cols.push(j);
                }
                self.alpha[j] += rv * a;
            }
        }

        let theta = self.dcache[q] / alpha_q;
        let ratio2 = self.weights[q] / (alpha_q * alpha_q);
        let mut wmax = 0.0f64;
        for idx in 0..self.alpha_cols.len() {
            let j = self.alpha_cols[idx];
            let aj = self.alpha[j];
            self.alpha[j] = 0.0;
            if j == q || self.status[j] == VarStatus::Basic {
                continue;
            }
            self.dcache[j] -= theta * aj;
            let cand = aj * aj * ratio2;
            if cand > self.weights[j] {
                self.weights[j] = cand;
                wmax = wmax.max(cand);
            }
        }
        // Slack and artificial columns are single unit entries (+/- e_r) on
        // their row, so their pivot-row entries are the rho values up to
        // sign.
        for idx in 0..self.rho_rows.len() {
            let r = self.rho_rows[idx];
            let rv = self.rho[r];
            self.rho[r] = 0.0;
            let cand = rv * rv * ratio2;
            for (v, aj) in [(self.var_slack(r), rv), (self.var_art(r), -rv)] {
                if v == q || self.status[v] == VarStatus::Basic {
                    continue;
                }
                self.dcache[v] -= theta * aj;
                if cand > self.weights[v] {
                    self.weights[v] = cand;
                    wmax = wmax.max(cand);
                }
            }
        }
        // The leaving variable's own pivot-row entry is exactly 1; pinning
        // its cached cost avoids the accumulated rounding of the scatter
        // pass. The entering variable turns basic.
        self.dcache[lvar] = -theta;
        self.dcache[q] = 0.0;
        self.weights[lvar] = ratio2.max(1.0);
        if wmax.max(self.weights[lvar]) > WEIGHT_RESET {
            for w in &mut self.weights {
                *w = 1.0;
            }
        }
    }

    fn coeff(&self, row: usize, var: usize) -> f64 {
        for &(j, a) in &self.rows[row] {
            if j == var {
                return a;
            }
        }
        0.0
    }

    /// Row `r` of the structural matrix restricted to kernel columns.
    fn gather_row_on_kernel_cols(&self, r: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.kcols.len()];
        for &(j, a) in &self.rows[r] {
            let p = self.kcol_of_var[j];
            if p != NONE {
                v[p] = a;
            }
        }
        v
    }

    fn ensure_cap(&mut self, need: usize) {
        if need <= self.cap {
            return;
        }
        let new_cap = (self.cap.max(8) * 2).max(need);
        let mut fresh = vec![0.0; new_cap * new_cap];
        // Nothing valid beyond the old capacity exists to copy (a freshly
        // installed basis refactors from scratch right after growing).
        let k = self.kcols.len().min(self.cap);
        for jpos in 0..k {
            for ipos in 0..k {
                fresh[jpos * new_cap + ipos] = self.kinv[jpos * self.cap + ipos];
            }
        }
        self.kinv = fresh;
        self.cap = new_cap;
    }

    /// Rebuilds the kernel inverse from scratch (dense Gauss-Jordan with
    /// partial pivoting) and recomputes every basic value.
    fn refactor(&mut self) {
        let t0 = std::time::Instant::now();
        assert!(self.try_refactor(), "kernel singular at refactorization");
        self.t_refactor += t0.elapsed();
        self.n_refactor += 1;
    }

    /// Fallible body of [`Self::refactor`]: false when the kernel is
    /// singular, which a basis evolved by pivoting never is.
    fn try_refactor(&mut self) -> bool {
        let k = self.kcols.len();
        self.ensure_cap(k.max(1));
        if k > 0 {
            let mut a = vec![0.0; k * k]; // a[i * k + j] = C[i][j]
            for (jpos, &var) in self.kcols.iter().enumerate() {
                for &(r, coef) in &self.cols[var] {
                    let ipos = self.krow_of_row[r];
                    if ipos != NONE {
                        a[ipos * k + jpos] = coef;
                    }
                }
            }
            let mut inv = vec![0.0; k * k];
            for d in 0..k {
                inv[d * k + d] = 1.0;
            }
            for col in 0..k {
                let mut best = col;
                let mut best_abs = a[col * k + col].abs();
                for r in col + 1..k {
                    let v = a[r * k + col].abs();
                    if v > best_abs {
                        best_abs = v;
                        best = r;
                    }
                }
                if best_abs <= 1e-13 {
                    return false;
                }
                if best != col {
                    for c in 0..k {
                        a.swap(col * k + c, best * k + c);
                        inv.swap(col * k + c, best * k + c);
                    }
                }
                let pinv = 1.0 / a[col * k + col];
                for c in 0..k {
                    a[col * k + c] *= pinv;
                    inv[col * k + c] *= pinv;
                }
                for r in 0..k {
                    if r == col {
                        continue;
                    }
                    let f = a[r * k + col];
                    if f == 0.0 {
                        continue;
                    }
                    for c in 0..k {
                        let t = a[col * k + c];
                        a[r * k + c] -= f * t;
                    }
                    for c in 0..k {
                        let t = inv[col * k + c];
                        inv[r * k + c] -= f * t;
                    }
                }
            }
            // inv is C^-1 in standard row-major layout; the kernel store
            // uses the same index order (column position first).
            for jpos in 0..k {
                for ipos in 0..k {
                    self.kinv[jpos * self.cap + ipos] = inv[jpos * k + ipos];
                }
            }
        }
        self.recompute_values();
        self.refresh_dcache();
        self.updates = 0;
        true
    }

    /// Recomputes basic values from the right-hand sides and the nonbasic
    /// bound values.
    fn recompute_values(&mut self) {
        let resid = self.residuals();
        let k = self.kcols.len();
        let mut xk = vec![0.0; k];
        for jpos in 0..k {
            let mut acc = 0.0;
            let base = jpos * self.cap;
            for ipos in 0..k {
                acc += self.kinv[base + ipos] * resid[self.krows[ipos]];
            }
            xk[jpos] = acc;
        }
        let mut covered_acc = vec![0.0; self.m];
        for (jpos, &var) in self.kcols.iter().enumerate() {
            let xv = xk[jpos];
            self.value[var] = xv;
            if xv == 0.0 {
                continue;
            }
            for &(r, a) in &self.cols[var] {
                if self.unit_of_row[r] != NONE {
                    covered_acc[r] += a * xv;
                }
            }
        }
        for r in 0..self.m {
            let u = self.unit_of_row[r];
            if u != NONE {
                self.value[u] = self.unit_sign(u) * (resid[r] - covered_acc[r]);
            }
        }
    }

    fn finish(&mut self, status: LpStatus) -> LpSolution {
        if self.trace {
            eprintln!(
                "finish: iters={} k={} price={:?} pivot={:?} refactor={:?}x{}",
                self.iterations,
                self.kcols.len(),
                self.t_price,
                self.t_pivot,
                self.t_refactor,
                self.n_refactor
            );
        }
        if status != LpStatus::Optimal {
            return LpSolution {
                status,
                values: Vec::new(),
                objective: f64::NAN,
                iterations: self.iterations,
            };
        }
        let mut values: Vec<f64> = self.value[..self.n].to_vec();
        // Absorb sub-tolerance drift into the boxes.
        for (j, v) in values.iter_mut().enumerate() {
            *v = v.clamp(self.lo[j], self.hi[j]);
        }
        let objective = values
            .iter()
            .zip(&self.cost[..self.n])
            .map(|(x, c)| x * c)
            .sum();
        LpSolution {
            status,
            values,
            objective,
            iterations: self.iterations,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
