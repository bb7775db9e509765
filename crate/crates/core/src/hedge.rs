//! Semi-static hedge portfolios certifying the price bounds.
//!
//! A super-hedge consists of positions φ (payoff written on the first
//! marginal), ψ (on the second) and a forward position h entered at the first
//! date, dominating the payoff in every state:
//!
//! ```text
//! φ(x) + ψ(y) + h(x)·(y − x) ≥ c(x, y)   for all supported (x, y).
//! ```
//!
//! Its price is Σ ω_j φ_j + Σ ϑ_i ψ_i (the forward leg costs nothing). The
//! cheapest super-hedge prices the upper bound; the mirror-image sub-hedge
//! (with ≤) prices the lower bound.
//!
//! [`build_dual_hedge`] replays the crossing steps of the left-monotone
//! construction. Each step pins one or two portfolio coordinates as an affine
//! function of coordinates not yet pinned; resolving the pins backwards
//! leaves a small set of genuinely free coordinates, which a linear program
//! then completes to a feasible portfolio of minimal price. If the completed
//! price matches the value of the constructed coupling, that coupling and the
//! portfolio certify each other optimal. Otherwise (the payoff lacks the
//! monotone structure) the portfolio is recomputed from scratch as the
//! optimum of the full pricing program, and the outcome is flagged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::lp::{build_dual, solve_lp, LinearProgram, LpStatus, RowKind, Sense, VarBound};
use crate::measure::DiscreteMeasure;
use crate::monotone::{
    build_left_monotone_traced, plan_value, MonotoneError, MonotoneOptions, MonotoneRun,
    StepEvent, TransportPlan,
};
use crate::payoff::PayoffGrid;
use crate::rational::Rational;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HedgeError {
    #[error("{side} marginal must have total mass 1")]
    NotProbability { side: &'static str },
    #[error("first marginal is not dominated by the second in convex order")]
    NotInConvexOrder,
    #[error("payoff grid is {rows}x{cols} but marginals have {n} and {m} atoms")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        n: usize,
        m: usize,
    },
    #[error("payoff grid supports differ from the marginal supports")]
    SupportMismatch,
    #[error("portfolio legs have lengths {phi}/{h}/{psi} but marginals have {n} and {m} atoms")]
    PortfolioMismatch {
        phi: usize,
        h: usize,
        psi: usize,
        n: usize,
        m: usize,
    },
    #[error("coupling marginals differ from the supplied marginals")]
    PlanMismatch,
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<MonotoneError> for HedgeError {
    fn from(err: MonotoneError) -> Self {
        match err {
            MonotoneError::NotProbability { side } => HedgeError::NotProbability { side },
            MonotoneError::NotInConvexOrder => HedgeError::NotInConvexOrder,
            MonotoneError::InvariantViolation(msg) => HedgeError::Internal(msg),
        }
    }
}

/// A portfolio coordinate: position in the φ, h or ψ leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    Phi(usize),
    H(usize),
    Psi(usize),
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarId::Phi(j) => write!(f, "phi[{j}]"),
            VarId::H(j) => write!(f, "h[{j}]"),
            VarId::Psi(i) => write!(f, "psi[{i}]"),
        }
    }
}

/// An affine combination `constant + Σ coeff·var` of portfolio coordinates.
/// Zero coefficients are never stored, so structural equality is canonical.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AffineExpr {
    constant: Rational,
    terms: BTreeMap<VarId, Rational>,
}

impl AffineExpr {
    pub fn constant(value: Rational) -> Self {
        AffineExpr {
            constant: value,
            terms: BTreeMap::new(),
        }
    }

    pub fn var(id: VarId) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(id, Rational::one());
        AffineExpr {
            constant: Rational::zero(),
            terms,
        }
    }

    pub fn constant_part(&self) -> &Rational {
        &self.constant
    }

    pub fn coeff(&self, id: VarId) -> Rational {
        self.terms.get(&id).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarId, &Rational)> {
        self.terms.iter().map(|(id, coeff)| (*id, coeff))
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert_term(&mut self, id: VarId, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(id).or_insert_with(Rational::zero);
        *entry += &coeff;
        if entry.is_zero() {
            self.terms.remove(&id);
        }
    }

    pub fn plus(&self, other: &AffineExpr) -> AffineExpr {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (id, coeff) in &other.terms {
            out.insert_term(*id, coeff.clone());
        }
        out
    }

    pub fn minus(&self, other: &AffineExpr) -> AffineExpr {
        self.plus(&other.times(&-Rational::one()))
    }

    pub fn times(&self, factor: &Rational) -> AffineExpr {
        if factor.is_zero() {
            return AffineExpr::default();
        }
        AffineExpr {
            constant: &self.constant * factor,
            terms: self
                .terms
                .iter()
                .map(|(id, coeff)| (*id, coeff * factor))
                .collect(),
        }
    }

    /// Replaces every variable present in `map` by its expression.
    pub fn substitute(&self, map: &BTreeMap<VarId, AffineExpr>) -> AffineExpr {
        let mut out = AffineExpr::constant(self.constant.clone());
        for (id, coeff) in &self.terms {
            match map.get(id) {
                Some(expr) => out = out.plus(&expr.times(coeff)),
                None => out.insert_term(*id, coeff.clone()),
            }
        }
        out
    }

    pub fn eval(&self, lookup: impl Fn(VarId) -> Rational) -> Rational {
        let mut value = self.constant.clone();
        for (id, coeff) in &self.terms {
            value += coeff * lookup(*id);
        }
        value
    }
}

/// The portfolio coordinates pinned by the crossing steps, each resolved to
/// an affine expression in the remaining free coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicHedge {
    pub assignments: BTreeMap<VarId, AffineExpr>,
    pub free: BTreeSet<VarId>,
}

/// Whether a portfolio must dominate the payoff (values an upper bound) or
/// be dominated by it (values a lower bound).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HedgeSide {
    Super,
    Sub,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HedgePortfolio {
    pub phi: Vec<Rational>,
    pub psi: Vec<Rational>,
    pub h: Vec<Rational>,
}

impl HedgePortfolio {
    /// Price of the portfolio: the forward leg h is costless.
    pub fn cost(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Rational {
        let phi_cost: Rational = self
            .phi
            .iter()
            .zip(mu.weights())
            .map(|(phi, w)| phi * w)
            .sum();
        let psi_cost: Rational = self
            .psi
            .iter()
            .zip(nu.weights())
            .map(|(psi, w)| psi * w)
            .sum();
        phi_cost + psi_cost
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualHedgeOutcome {
    pub portfolio: HedgePortfolio,
    /// True when the crossing-step portfolio could not be certified and the
    /// portfolio was recomputed as a full linear-program optimum instead.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HedgeReport {
    pub feasible: bool,
    /// First cell (j, i) in row-major order where domination fails.
    pub first_violation: Option<(usize, usize)>,
    pub cost: Rational,
    /// cost − coupling value for a super-hedge, coupling value − cost for a
    /// sub-hedge; zero certifies both sides optimal.
    pub duality_gap: Option<Rational>,
    /// Whether the hedge is tight on every cell the coupling charges.
    pub slackness_ok: Option<bool>,
}

fn validate_grid(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    grid: &PayoffGrid,
) -> Result<(), HedgeError> {
    if grid.n() != mu.len() || grid.m() != nu.len() {
        return Err(HedgeError::DimensionMismatch {
            rows: grid.n(),
            cols: grid.m(),
            n: mu.len(),
            m: nu.len(),
        });
    }
    if grid.xs() != mu.atoms() || grid.ys() != nu.atoms() {
        return Err(HedgeError::SupportMismatch);
    }
    Ok(())
}

/// Pins implied by one crossing step. Coordinates are pinned by the payoff
/// cells the step makes tight:
/// - a match pins the single coordinate of the exhausted side,
/// - a full split makes both bracket cells tight, pinning (φ_j, h_j),
/// - a partial split makes the drained neighbor's cell tight, pinning its ψ.
fn pins_for_event(event: &StepEvent, grid: &PayoffGrid) -> Vec<(VarId, AffineExpr)> {
    let xs = grid.xs();
    let ys = grid.ys();
    match *event {
        StepEvent::MatchMuExhausted { j, l } => {
            let expr = AffineExpr::constant(grid.value(j, l).clone())
                .minus(&AffineExpr::var(VarId::Psi(l)));
            vec![(VarId::Phi(j), expr)]
        }
        StepEvent::MatchNuExhausted { j, l } => {
            let expr = AffineExpr::constant(grid.value(j, l).clone())
                .minus(&AffineExpr::var(VarId::Phi(j)));
            vec![(VarId::Psi(l), expr)]
        }
        StepEvent::SplitMuExhausted { j, lo, hi } => {
            let gap = &ys[hi] - &ys[lo];
            let h = AffineExpr::constant(grid.value(j, hi) - grid.value(j, lo))
                .plus(&AffineExpr::var(VarId::Psi(lo)))
                .minus(&AffineExpr::var(VarId::Psi(hi)))
                .times(&gap.recip());
            let phi = AffineExpr::constant(grid.value(j, lo).clone())
                .minus(&AffineExpr::var(VarId::Psi(lo)))
                .minus(&h.times(&(&ys[lo] - &xs[j])));
            vec![(VarId::H(j), h), (VarId::Phi(j), phi)]
        }
        StepEvent::SplitNuLoExhausted { j, lo, hi: _ } => {
            let expr = AffineExpr::constant(grid.value(j, lo).clone())
                .minus(&AffineExpr::var(VarId::Phi(j)))
                .minus(&AffineExpr::var(VarId::H(j)).times(&(&ys[lo] - &xs[j])));
            vec![(VarId::Psi(lo), expr)]
        }
        StepEvent::SplitNuHiExhausted { j, lo: _, hi } => {
            let expr = AffineExpr::constant(grid.value(j, hi).clone())
                .minus(&AffineExpr::var(VarId::Phi(j)))
                .minus(&AffineExpr::var(VarId::H(j)).times(&(&ys[hi] - &xs[j])));
            vec![(VarId::Psi(hi), expr)]
        }
    }
}

fn symbolic_from_run(run: &MonotoneRun, grid: &PayoffGrid) -> Result<SymbolicHedge, HedgeError> {
    let mut pins: Vec<(VarId, AffineExpr)> = Vec::new();
    for event in &run.events {
        pins.extend(pins_for_event(event, grid));
    }

    // Every pin references only coordinates pinned by later steps (or never),
    // so resolving backwards eliminates all pinned coordinates.
    let mut assignments: BTreeMap<VarId, AffineExpr> = BTreeMap::new();
    for (id, expr) in pins.into_iter().rev() {
        let resolved = expr.substitute(&assignments);
        if assignments.insert(id, resolved).is_some() {
            return Err(HedgeError::Internal(format!(
                "coordinate {id} pinned twice"
            )));
        }
    }

    let n = run.plan.mu().len();
    let m = run.plan.nu().len();
    let mut free = BTreeSet::new();
    for j in 0..n {
        free.insert(VarId::Phi(j));
        free.insert(VarId::H(j));
    }
    for i in 0..m {
        free.insert(VarId::Psi(i));
    }
    for id in assignments.keys() {
        free.remove(id);
    }
    for expr in assignments.values() {
        if expr.terms().any(|(id, _)| !free.contains(&id)) {
            return Err(HedgeError::Internal(
                "pin resolution left a pinned coordinate unresolved".to_string(),
            ));
        }
    }
    Ok(SymbolicHedge { assignments, free })
}

/// Runs the left-monotone construction and reports which portfolio
/// coordinates it pins, as affine expressions in the free coordinates.
pub fn build_symbolic_hedge(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    grid: &PayoffGrid,
) -> Result<SymbolicHedge, HedgeError> {
    validate_grid(mu, nu, grid)?;
    let run = build_left_monotone_traced(mu, nu, MonotoneOptions::default())?;
    symbolic_from_run(&run, grid)
}

fn expr_of(assignments: &BTreeMap<VarId, AffineExpr>, id: VarId) -> AffineExpr {
    assignments
        .get(&id)
        .cloned()
        .unwrap_or_else(|| AffineExpr::var(id))
}

/// Cheapest super-hedge of the payoff. The portfolio prices the upper bound
/// exactly; `fallback` records whether the full linear program was needed.
pub fn build_dual_hedge(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    grid: &PayoffGrid,
) -> Result<DualHedgeOutcome, HedgeError> {
    validate_grid(mu, nu, grid)?;
    let run = build_left_monotone_traced(mu, nu, MonotoneOptions::default())?;
    let symbolic = symbolic_from_run(&run, grid)?;
    let target = plan_value(&run.plan, grid)
        .map_err(|e| HedgeError::Internal(e.to_string()))?;

    if let Some(portfolio) = complete_portfolio(mu, nu, grid, &symbolic) {
        if portfolio.cost(mu, nu) == target
            && feasibility_scan(&portfolio, grid, HedgeSide::Super).is_none()
        {
            return Ok(DualHedgeOutcome {
                portfolio,
                fallback: false,
            });
        }
    }

    // The payoff lacks the monotone structure: the constructed coupling is
    // not optimal and no completion can certify it. Solve the full program.
    let lp = build_dual(mu, nu, grid).map_err(|e| HedgeError::Internal(e.to_string()))?;
    let solution = solve_lp(&lp);
    if solution.status != LpStatus::Optimal {
        return Err(HedgeError::Internal(
            "pricing program has no optimum for ordered probability marginals".to_string(),
        ));
    }
    let n = mu.len();
    let m = nu.len();
    let v = &solution.primal_values;
    let portfolio = HedgePortfolio {
        phi: v[0..n].to_vec(),
        h: v[n..2 * n].to_vec(),
        psi: v[2 * n..2 * n + m].to_vec(),
    };
    Ok(DualHedgeOutcome {
        portfolio,
        fallback: true,
    })
}

/// Completes the pinned coordinates to a full portfolio of minimal price
/// subject to domination, or `None` when no completion is feasible.
fn complete_portfolio(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    grid: &PayoffGrid,
    symbolic: &SymbolicHedge,
) -> Option<HedgePortfolio> {
    let n = mu.len();
    let m = nu.len();
    let free: Vec<VarId> = symbolic.free.iter().copied().collect();
    let index: BTreeMap<VarId, usize> = free
        .iter()
        .enumerate()
        .map(|(k, id)| (*id, k))
        .collect();

    let mut objective_expr = AffineExpr::default();
    for j in 0..n {
        let phi = expr_of(&symbolic.assignments, VarId::Phi(j));
        objective_expr = objective_expr.plus(&phi.times(&mu.weights()[j]));
    }
    for i in 0..m {
        let psi = expr_of(&symbolic.assignments, VarId::Psi(i));
        objective_expr = objective_expr.plus(&psi.times(&nu.weights()[i]));
    }

    let mut objective = vec![Rational::zero(); free.len()];
    for (id, coeff) in objective_expr.terms() {
        objective[index[&id]] = coeff.clone();
    }

    let mut matrix = Vec::with_capacity(n * m);
    let mut rhs = Vec::with_capacity(n * m);
    for j in 0..n {
        let phi = expr_of(&symbolic.assignments, VarId::Phi(j));
        let h = expr_of(&symbolic.assignments, VarId::H(j));
        for i in 0..m {
            let psi = expr_of(&symbolic.assignments, VarId::Psi(i));
            let drift = &nu.atoms()[i] - &mu.atoms()[j];
            let row_expr = phi.plus(&psi).plus(&h.times(&drift));
            let mut row = vec![Rational::zero(); free.len()];
            for (id, coeff) in row_expr.terms() {
                row[index[&id]] = coeff.clone();
            }
            matrix.push(row);
            rhs.push(grid.value(j, i) - row_expr.constant_part());
        }
    }

    let lp = LinearProgram::new(
        objective,
        matrix,
        rhs,
        vec![RowKind::Ge; n * m],
        Sense::Min,
        vec![VarBound::Free; free.len()],
    )
    .expect("completion program dimensions are consistent by construction");
    let solution = solve_lp(&lp);
    if solution.status != LpStatus::Optimal {
        return None;
    }

    let value_of = |id: VarId| solution.primal_values[index[&id]].clone();
    let resolve = |id: VarId| {
        symbolic
            .assignments
            .get(&id)
            .map(|expr| expr.eval(value_of))
            .unwrap_or_else(|| value_of(id))
    };
    Some(HedgePortfolio {
        phi: (0..n).map(|j| resolve(VarId::Phi(j))).collect(),
        h: (0..n).map(|j| resolve(VarId::H(j))).collect(),
        psi: (0..m).map(|i| resolve(VarId::Psi(i))).collect(),
    })
}

/// Most expensive sub-hedge: the portfolio dominated by the payoff whose
/// price is maximal, pricing the lower bound exactly. Obtained by reflecting
/// the instance, super-hedging the reflected-negated payoff, and mapping the
/// portfolio back.
pub fn build_dual_subhedge(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    grid: &PayoffGrid,
) -> Result<DualHedgeOutcome, HedgeError> {
    validate_grid(mu, nu, grid)?;
    let n = mu.len();
    let m = nu.len();
    let mu_r = mu.reflect();
    let nu_r = nu.reflect();
    let values_r: Vec<Vec<Rational>> = (0..n)
        .map(|jr| {
            (0..m)
                .map(|ir| -grid.value(n - 1 - jr, m - 1 - ir).clone())
                .collect()
        })
        .collect();
    let grid_r = PayoffGrid::new(values_r, mu_r.atoms().to_vec(), nu_r.atoms().to_vec())
        .expect("reflected grid dimensions match by construction");
    let reflected = build_dual_hedge(&mu_r, &nu_r, &grid_r)?;
    let rp = &reflected.portfolio;
    Ok(DualHedgeOutcome {
        portfolio: HedgePortfolio {
            phi: (0..n).map(|j| -rp.phi[n - 1 - j].clone()).collect(),
            h: (0..n).map(|j| rp.h[n - 1 - j].clone()).collect(),
            psi: (0..m).map(|i| -rp.psi[m - 1 - i].clone()).collect(),
        },
        fallback: reflected.fallback,
    })
}

/// First cell where the side's domination inequality fails, if any.
fn feasibility_scan(
    portfolio: &HedgePortfolio,
    grid: &PayoffGrid,
    side: HedgeSide,
) -> Option<(usize, usize)> {
    for (j, x) in grid.xs().iter().enumerate() {
        for (i, y) in grid.ys().iter().enumerate() {
            let lhs = &portfolio.phi[j] + &portfolio.psi[i] + &portfolio.h[j] * (y - x);
            let ok = match side {
                HedgeSide::Super => lhs >= *grid.value(j, i),
                HedgeSide::Sub => lhs <= *grid.value(j, i),
            };
            if !ok {
                return Some((j, i));
            }
        }
    }
    None
}

/// Checks a portfolio against an instance: domination cell by cell, price,
/// and (when a coupling is supplied) the duality gap and tightness on the
/// coupling's support.
pub fn verify_hedge(
    portfolio: &HedgePortfolio,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    grid: &PayoffGrid,
    plan: Option<&TransportPlan>,
    side: HedgeSide,
) -> Result<HedgeReport, HedgeError> {
    validate_grid(mu, nu, grid)?;
    let n = mu.len();
    let m = nu.len();
    if portfolio.phi.len() != n || portfolio.h.len() != n || portfolio.psi.len() != m {
        return Err(HedgeError::PortfolioMismatch {
            phi: portfolio.phi.len(),
            h: portfolio.h.len(),
            psi: portfolio.psi.len(),
            n,
            m,
        });
    }
    if let Some(plan) = plan {
        if plan.mu() != mu || plan.nu() != nu {
            return Err(HedgeError::PlanMismatch);
        }
    }

    let first_violation = feasibility_scan(portfolio, grid, side);
    let cost = portfolio.cost(mu, nu);

    let mut duality_gap = None;
    let mut slackness_ok = None;
    if let Some(plan) = plan {
        let value = plan_value(plan, grid).map_err(|e| HedgeError::Internal(e.to_string()))?;
        duality_gap = Some(match side {
            HedgeSide::Super => &cost - &value,
            HedgeSide::Sub => &value - &cost,
        });
        let xs = grid.xs();
        let ys = grid.ys();
        let tight = plan.support().into_iter().all(|(j, i)| {
            let lhs =
                &portfolio.phi[j] + &portfolio.psi[i] + &portfolio.h[j] * (&ys[i] - &xs[j]);
            lhs == *grid.value(j, i)
        });
        slackness_ok = Some(tight);
    }

    Ok(HedgeReport {
        feasible: first_violation.is_none(),
        first_violation,
        cost,
        duality_gap,
        slackness_ok,
    })
}
