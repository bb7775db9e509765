//! Exact linear programming over rationals.
//!
//! A dense two-phase simplex with Bland's anti-cycling rule. All pivots are
//! exact, so reported optima, primal solutions, and dual multipliers are free
//! of rounding; the solver doubles as the independent cross-check for the
//! structural coupling and hedging algorithms in this crate.
//!
//! [`build_primal`] and [`build_dual`] assemble the two transport programs:
//! the primal searches over couplings with prescribed marginals and zero
//! conditional drift, the dual over semi-static portfolios (static positions
//! in both maturities plus a forward position per first-period state).

use crate::measure::DiscreteMeasure;
use crate::payoff::PayoffGrid;
use crate::rational::Rational;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowKind {
    Eq,
    Ge,
    Le,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarBound {
    NonNeg,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("{what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

/// A linear program in row form. Every variable is either non-negative or
/// free; rows compare the lhs against `rhs` according to `row_kinds`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub constraint_matrix: Vec<Vec<Rational>>,
    pub rhs: Vec<Rational>,
    pub row_kinds: Vec<RowKind>,
    pub sense: Sense,
    pub variable_bounds: Vec<VarBound>,
}

impl LinearProgram {
    pub fn new(
        objective: Vec<Rational>,
        constraint_matrix: Vec<Vec<Rational>>,
        rhs: Vec<Rational>,
        row_kinds: Vec<RowKind>,
        sense: Sense,
        variable_bounds: Vec<VarBound>,
    ) -> Result<Self, LpError> {
        let n = objective.len();
        let m = constraint_matrix.len();
        if variable_bounds.len() != n {
            return Err(LpError::DimensionMismatch {
                what: "variable bounds",
                expected: n,
                got: variable_bounds.len(),
            });
        }
        if rhs.len() != m {
            return Err(LpError::DimensionMismatch {
                what: "rhs length",
                expected: m,
                got: rhs.len(),
            });
        }
        if row_kinds.len() != m {
            return Err(LpError::DimensionMismatch {
                what: "row kinds",
                expected: m,
                got: row_kinds.len(),
            });
        }
        if let Some(bad) = constraint_matrix.iter().find(|row| row.len() != n) {
            return Err(LpError::DimensionMismatch {
                what: "constraint row width",
                expected: n,
                got: bad.len(),
            });
        }
        Ok(LinearProgram {
            objective,
            constraint_matrix,
            rhs,
            row_kinds,
            sense,
            variable_bounds,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }
}

/// Solver outcome. `primal_values`, `objective_value`, and `dual_values`
/// (one multiplier per constraint row) are meaningful only when `status`
/// is `Optimal`; otherwise they are empty/zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal_values: Vec<Rational>,
    pub objective_value: Rational,
    pub dual_values: Vec<Rational>,
}

impl LpSolution {
    fn non_optimal(status: LpStatus) -> Self {
        LpSolution {
            status,
            primal_values: Vec::new(),
            objective_value: Rational::zero(),
            dual_values: Vec::new(),
        }
    }
}

enum ColMap {
    Single(usize),
    Split(usize, usize),
}

/// Standard-form image of the input program: minimization over non-negative
/// variables subject to equality rows with non-negative right-hand sides.
struct StdForm {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    c: Vec<Rational>,
    n_std: usize,
    row_negated: Vec<bool>,
    slack_col: Vec<Option<usize>>,
    col_map: Vec<ColMap>,
}

fn build_std(lp: &LinearProgram) -> StdForm {
    let m = lp.n_rows();
    let n = lp.n_vars();

    let mut col_map = Vec::with_capacity(n);
    let mut next = 0usize;
    for bound in &lp.variable_bounds {
        match bound {
            VarBound::NonNeg => {
                col_map.push(ColMap::Single(next));
                next += 1;
            }
            VarBound::Free => {
                col_map.push(ColMap::Split(next, next + 1));
                next += 2;
            }
        }
    }
    let mut slack_col = vec![None; m];
    for (r, kind) in lp.row_kinds.iter().enumerate() {
        if matches!(kind, RowKind::Ge | RowKind::Le) {
            slack_col[r] = Some(next);
            next += 1;
        }
    }
    let n_std = next;

    let zero = Rational::zero();
    let mut a = vec![vec![zero.clone(); n_std]; m];
    for (r, row) in lp.constraint_matrix.iter().enumerate() {
        for (v, coeff) in row.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            match col_map[v] {
                ColMap::Single(cpos) => a[r][cpos] = coeff.clone(),
                ColMap::Split(pos, neg) => {
                    a[r][pos] = coeff.clone();
                    a[r][neg] = -coeff;
                }
            }
        }
        if let Some(s) = slack_col[r] {
            a[r][s] = match lp.row_kinds[r] {
                RowKind::Le => Rational::one(),
                RowKind::Ge => -Rational::one(),
                RowKind::Eq => unreachable!(),
            };
        }
    }

    let mut c = vec![zero.clone(); n_std];
    for (v, coeff) in lp.objective.iter().enumerate() {
        let base = match lp.sense {
            Sense::Min => coeff.clone(),
            Sense::Max => -coeff,
        };
        match col_map[v] {
            ColMap::Single(cpos) => c[cpos] = base,
            ColMap::Split(pos, neg) => {
                c[pos] = base.clone();
                c[neg] = -base;
            }
        }
    }

    let mut b = lp.rhs.clone();
    let mut row_negated = vec![false; m];
    for r in 0..m {
        if b[r].is_negative() {
            row_negated[r] = true;
            b[r] = -&b[r];
            for entry in &mut a[r] {
                if !entry.is_zero() {
                    *entry = -&*entry;
                }
            }
        }
    }

    StdForm {
        a,
        b,
        c,
        n_std,
        row_negated,
        slack_col,
        col_map,
    }
}

struct Tableau {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    basis: Vec<usize>,
    n_total: usize,
}

impl Tableau {
    /// Reduced costs of `cost` relative to the current basis.
    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut reduced: Vec<Rational> = cost[..self.n_total].to_vec();
        for (i, row) in self.a.iter().enumerate() {
            let cb = &cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (j, entry) in row.iter().enumerate() {
                if !entry.is_zero() {
                    reduced[j] -= cb * entry;
                }
            }
        }
        reduced
    }

    fn pivot(&mut self, leave_row: usize, enter_col: usize, reduced: &mut [Rational]) {
        let piv = self.a[leave_row][enter_col].clone();
        for entry in &mut self.a[leave_row] {
            if !entry.is_zero() {
                *entry = &*entry / &piv;
            }
        }
        self.b[leave_row] = &self.b[leave_row] / &piv;

        let pivot_row = self.a[leave_row].clone();
        let pivot_b = self.b[leave_row].clone();
        for i in 0..self.a.len() {
            if i == leave_row {
                continue;
            }
            let factor = self.a[i][enter_col].clone();
            if factor.is_zero() {
                continue;
            }
            for (j, pr) in pivot_row.iter().enumerate() {
                if !pr.is_zero() {
                    let delta = &factor * pr;
                    self.a[i][j] -= delta;
                }
            }
            self.b[i] -= &factor * &pivot_b;
        }
        let factor = reduced[enter_col].clone();
        if !factor.is_zero() {
            for (j, pr) in pivot_row.iter().enumerate() {
                if !pr.is_zero() {
                    let delta = &factor * pr;
                    reduced[j] -= delta;
                }
            }
        }
        self.basis[leave_row] = enter_col;
    }

    /// Bland's rule: enter the lowest-index improving column; leave by the
    /// minimum-ratio row, ties broken by lowest basis index. Returns false
    /// when no improving column exists (current basis optimal).
    fn bland_step(&mut self, reduced: &mut [Rational], eligible_end: usize) -> Result<bool, ()> {
        let enter = match (0..eligible_end).find(|&j| reduced[j].is_negative()) {
            Some(j) => j,
            None => return Ok(false),
        };
        let mut leave: Option<usize> = None;
        for i in 0..self.a.len() {
            let coeff = &self.a[i][enter];
            if !coeff.is_positive() {
                continue;
            }
            leave = Some(match leave {
                None => i,
                Some(best) => {
                    // b[i]/a[i] < b[best]/a[best], cross-multiplied (both
                    // denominators positive); ties pick the lower basis index.
                    let lhs = &self.b[i] * &self.a[best][enter];
                    let rhs = &self.b[best] * coeff;
                    if lhs < rhs || (lhs == rhs && self.basis[i] < self.basis[best]) {
                        i
                    } else {
                        best
                    }
                }
            });
        }
        match leave {
            Some(row) => {
                self.pivot(row, enter, reduced);
                Ok(true)
            }
            None => Err(()),
        }
    }
}

/// Solves the program exactly. Panics only on internal invariant violations;
/// infeasibility and unboundedness are reported through the status.
pub fn solve_lp(lp: &LinearProgram) -> LpSolution {
    assert_eq!(lp.variable_bounds.len(), lp.n_vars(), "malformed program");
    assert_eq!(lp.row_kinds.len(), lp.n_rows(), "malformed program");
    assert!(
        lp.constraint_matrix.iter().all(|r| r.len() == lp.n_vars()),
        "malformed program"
    );

    let std_form = build_std(lp);
    let m = std_form.b.len();
    let n_std = std_form.n_std;
    let a0 = std_form.a.clone();

    // Phase 1: minimize the sum of artificial variables. Rows whose slack
    // column survived rhs sign-normalization with coefficient +1 start basic
    // without an artificial.
    let mut basis = vec![usize::MAX; m];
    let mut art_cols = 0usize;
    for (r, (slot, slack)) in basis.iter_mut().zip(&std_form.slack_col).enumerate() {
        if let Some(s) = *slack {
            if std_form.a[r][s] == Rational::one() {
                *slot = s;
                continue;
            }
        }
        art_cols += 1;
    }
    let n_total = n_std + art_cols;
    let mut a = std_form.a;
    let mut cost1 = vec![Rational::zero(); n_total];
    let mut art_row = Vec::with_capacity(art_cols);
    {
        let mut next_art = n_std;
        for r in 0..m {
            a[r].resize(n_total, Rational::zero());
            if basis[r] == usize::MAX {
                a[r][next_art] = Rational::one();
                cost1[next_art] = Rational::one();
                basis[r] = next_art;
                art_row.push(r);
                next_art += 1;
            }
        }
    }

    let mut tab = Tableau {
        a,
        b: std_form.b,
        basis,
        n_total,
    };

    if art_cols > 0 {
        let mut reduced = tab.reduced_costs(&cost1);
        loop {
            match tab.bland_step(&mut reduced, n_total) {
                Ok(true) => continue,
                Ok(false) => break,
                // Phase 1 is bounded below by zero; a missing leaving row
                // cannot happen.
                Err(()) => unreachable!("phase 1 unbounded"),
            }
        }
        let infeasibility: Rational = (0..m)
            .filter(|&i| tab.basis[i] >= n_std)
            .map(|i| tab.b[i].clone())
            .sum();
        if infeasibility.is_positive() {
            return LpSolution::non_optimal(LpStatus::Infeasible);
        }
        // Zero-level artificials leave the basis where possible. A row whose
        // tableau entries are zero on every real column is redundant: its
        // artificial stays basic at level zero, the row is inert from here on
        // (no real column can ever pivot on it), and its dual multiplier is
        // pinned to zero through the artificial's zero phase-2 cost.
        let mut reduced = vec![Rational::zero(); n_total];
        for i in 0..m {
            if tab.basis[i] >= n_std {
                if let Some(j) = (0..n_std).find(|&j| !tab.a[i][j].is_zero()) {
                    tab.pivot(i, j, &mut reduced);
                }
            }
        }
    }

    // Phase 2 on the real objective; artificial columns cost zero and are
    // never eligible to enter.
    let mut cost2 = std_form.c.clone();
    cost2.resize(n_total, Rational::zero());
    let mut reduced = tab.reduced_costs(&cost2);
    loop {
        match tab.bland_step(&mut reduced, n_std) {
            Ok(true) => continue,
            Ok(false) => break,
            Err(()) => return LpSolution::non_optimal(LpStatus::Unbounded),
        }
    }

    // Primal values through the variable mapping.
    let mut x_std = vec![Rational::zero(); n_std];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < n_std {
            x_std[bv] = tab.b[i].clone();
        } else {
            debug_assert!(tab.b[i].is_zero(), "artificial variable carries mass");
        }
    }
    let primal_values: Vec<Rational> = std_form
        .col_map
        .iter()
        .map(|cm| match cm {
            ColMap::Single(c) => x_std[*c].clone(),
            ColMap::Split(p, n) => &x_std[*p] - &x_std[*n],
        })
        .collect();
    let objective_value: Rational = lp
        .objective
        .iter()
        .zip(primal_values.iter())
        .map(|(c, x)| c * x)
        .sum();

    // Dual multipliers: solve Bᵀy = c_B over the pristine standard matrix
    // extended by the artificial unit columns (a nonsingular m×m basis is a
    // simplex invariant), then undo row negation and the max→min flip. Basic
    // artificials contribute rows y_i = 0, zeroing redundant multipliers.
    let mut bt = vec![vec![Rational::zero(); m]; m];
    let mut cb = vec![Rational::zero(); m];
    for (kk, &bv) in tab.basis.iter().enumerate() {
        cb[kk] = cost2[bv].clone();
        if bv < n_std {
            for (ri, row) in a0.iter().enumerate() {
                bt[kk][ri] = row[bv].clone();
            }
        } else {
            bt[kk][art_row[bv - n_std]] = Rational::one();
        }
    }
    let y = solve_square(bt, cb).expect("basis matrix is nonsingular");
    let mut dual_values = vec![Rational::zero(); m];
    for (ri, val) in y.into_iter().enumerate() {
        let mut val = val;
        if std_form.row_negated[ri] {
            val = -val;
        }
        if lp.sense == Sense::Max {
            val = -val;
        }
        dual_values[ri] = val;
    }

    LpSolution {
        status: LpStatus::Optimal,
        primal_values,
        objective_value,
        dual_values,
    }
}

/// Gauss-Jordan solve of a square exact system; `None` if singular.
fn solve_square(mut m: Vec<Vec<Rational>>, mut v: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = m.len();
    for col in 0..n {
        let pivot_row = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot_row);
        v.swap(col, pivot_row);
        let piv = m[col][col].clone();
        for entry in m[col].iter_mut().skip(col) {
            if !entry.is_zero() {
                *entry = &*entry / &piv;
            }
        }
        v[col] = &v[col] / &piv;
        let pivot_vals = m[col].clone();
        let pivot_rhs = v[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (entry, p) in row.iter_mut().zip(&pivot_vals).skip(col) {
                if !p.is_zero() {
                    *entry -= &factor * p;
                }
            }
            v[r] -= &factor * &pivot_rhs;
        }
    }
    Some(v)
}

/// Transport program over couplings q ≥ 0 of `mu` and `nu`: row sums match
/// the weights of `mu`, column sums those of `nu`, and each row has zero
/// conditional drift Σ_i q_{j,i}(y_i − x_j) = 0. Variables are laid out
/// row-major (q_{j,i} at j·M + i); rows are ordered first-marginal,
/// second-marginal, drift.
pub fn build_primal(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    grid: &PayoffGrid,
    sense: Sense,
) -> Result<LinearProgram, LpError> {
    let n = mu.len();
    let m = nu.len();
    if grid.n() != n {
        return Err(LpError::DimensionMismatch {
            what: "grid rows vs first marginal",
            expected: n,
            got: grid.n(),
        });
    }
    if grid.m() != m {
        return Err(LpError::DimensionMismatch {
            what: "grid cols vs second marginal",
            expected: m,
            got: grid.m(),
        });
    }

    let n_vars = n * m;
    let zero = Rational::zero();
    let mut objective = Vec::with_capacity(n_vars);
    for j in 0..n {
        for i in 0..m {
            objective.push(grid.value(j, i).clone());
        }
    }

    let mut matrix = Vec::with_capacity(2 * n + m);
    let mut rhs = Vec::with_capacity(2 * n + m);
    for j in 0..n {
        let mut row = vec![zero.clone(); n_vars];
        for i in 0..m {
            row[j * m + i] = Rational::one();
        }
        matrix.push(row);
        rhs.push(mu.weights()[j].clone());
    }
    for i in 0..m {
        let mut row = vec![zero.clone(); n_vars];
        for j in 0..n {
            row[j * m + i] = Rational::one();
        }
        matrix.push(row);
        rhs.push(nu.weights()[i].clone());
    }
    for j in 0..n {
        let mut row = vec![zero.clone(); n_vars];
        for i in 0..m {
            row[j * m + i] = &nu.atoms()[i] - &mu.atoms()[j];
        }
        matrix.push(row);
        rhs.push(zero.clone());
    }

    let rows = matrix.len();
    LinearProgram::new(
        objective,
        matrix,
        rhs,
        vec![RowKind::Eq; rows],
        sense,
        vec![VarBound::NonNeg; n_vars],
    )
}

/// Super-hedging program: free variables (φ_1..φ_N, h_1..h_N, ψ_1..ψ_M),
/// one GE row per support pair requiring
/// φ_j + ψ_i + h_j(y_i − x_j) ≥ c(x_j, y_i), minimizing the portfolio price
/// Σ_j ω_j φ_j + Σ_i ϑ_i ψ_i. Rows are laid out row-major matching
/// [`build_primal`] variables.
pub fn build_dual(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    grid: &PayoffGrid,
) -> Result<LinearProgram, LpError> {
    let n = mu.len();
    let m = nu.len();
    if grid.n() != n {
        return Err(LpError::DimensionMismatch {
            what: "grid rows vs first marginal",
            expected: n,
            got: grid.n(),
        });
    }
    if grid.m() != m {
        return Err(LpError::DimensionMismatch {
            what: "grid cols vs second marginal",
            expected: m,
            got: grid.m(),
        });
    }

    let n_vars = 2 * n + m;
    let zero = Rational::zero();
    let mut objective = vec![zero.clone(); n_vars];
    objective[..n].clone_from_slice(mu.weights());
    objective[2 * n..].clone_from_slice(nu.weights());

    let mut matrix = Vec::with_capacity(n * m);
    let mut rhs = Vec::with_capacity(n * m);
    for j in 0..n {
        for i in 0..m {
            let mut row = vec![zero.clone(); n_vars];
            row[j] = Rational::one();
            row[n + j] = &nu.atoms()[i] - &mu.atoms()[j];
            row[2 * n + i] = Rational::one();
            matrix.push(row);
            rhs.push(grid.value(j, i).clone());
        }
    }

    let rows = matrix.len();
    LinearProgram::new(
        objective,
        matrix,
        rhs,
        vec![RowKind::Ge; rows],
        Sense::Min,
        vec![VarBound::Free; n_vars],
    )
}
