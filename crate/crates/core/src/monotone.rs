//! Direct construction of the left- and right-monotone martingale couplings.
//!
//! The construction walks the first marginal from its smallest remaining atom
//! upwards. At each step the atom either coincides with a remaining atom of
//! the second marginal (mass is matched in place) or sits strictly between
//! two adjacent remaining atoms (mass is split onto the bracketing pair in
//! the unique proportions with zero drift). Whichever atom is exhausted first
//! is crossed off, and the step repeats until all mass is placed. Each step
//! crosses off at least one atom, so at most N+M−1 steps occur.
//!
//! The run is recorded as a list of [`StepEvent`]s; the hedging module
//! replays them to assemble dual portfolios.

use crate::measure::{check_convex_order, DiscreteMeasure};
use crate::payoff::PayoffGrid;
use crate::rational::Rational;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("plan is {rows}x{cols} but marginals have {n} and {m} atoms")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        n: usize,
        m: usize,
    },
    #[error("negative mass at cell ({j},{i})")]
    NegativeMass { j: usize, i: usize },
    #[error("row {j} mass differs from first-marginal weight")]
    RowSumMismatch { j: usize },
    #[error("column {i} mass differs from second-marginal weight")]
    ColumnSumMismatch { i: usize },
    #[error("row {j} has nonzero conditional drift")]
    DriftMismatch { j: usize },
    #[error("payoff grid is {rows}x{cols} but plan is {n}x{m}")]
    GridMismatch {
        rows: usize,
        cols: usize,
        n: usize,
        m: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonotoneError {
    #[error("{side} marginal must have total mass 1")]
    NotProbability { side: &'static str },
    #[error("first marginal is not dominated by the second in convex order")]
    NotInConvexOrder,
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
}

/// A martingale coupling of two discrete measures: q[j][i] is the mass moved
/// from the j-th atom of `mu` to the i-th atom of `nu`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportPlan {
    q: Vec<Vec<Rational>>,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
}

impl TransportPlan {
    /// Validates all coupling invariants: non-negativity, both marginals, and
    /// zero conditional drift per row.
    pub fn new(
        mu: DiscreteMeasure,
        nu: DiscreteMeasure,
        q: Vec<Vec<Rational>>,
    ) -> Result<Self, PlanError> {
        let n = mu.len();
        let m = nu.len();
        if q.len() != n || q.iter().any(|row| row.len() != m) {
            return Err(PlanError::DimensionMismatch {
                rows: q.len(),
                cols: q.first().map_or(0, |r| r.len()),
                n,
                m,
            });
        }
        for (j, row) in q.iter().enumerate() {
            for (i, mass) in row.iter().enumerate() {
                if mass.is_negative() {
                    return Err(PlanError::NegativeMass { j, i });
                }
            }
        }
        for (j, row) in q.iter().enumerate() {
            let sum: Rational = row.iter().sum();
            if sum != mu.weights()[j] {
                return Err(PlanError::RowSumMismatch { j });
            }
        }
        for i in 0..m {
            let sum: Rational = q.iter().map(|row| &row[i]).sum();
            if sum != nu.weights()[i] {
                return Err(PlanError::ColumnSumMismatch { i });
            }
        }
        for (j, row) in q.iter().enumerate() {
            let drift: Rational = row
                .iter()
                .enumerate()
                .filter(|(_, mass)| !mass.is_zero())
                .map(|(i, mass)| mass * (&nu.atoms()[i] - &mu.atoms()[j]))
                .sum();
            if !drift.is_zero() {
                return Err(PlanError::DriftMismatch { j });
            }
        }
        Ok(TransportPlan { q, mu, nu })
    }

    pub fn q(&self) -> &[Vec<Rational>] {
        &self.q
    }

    pub fn mu(&self) -> &DiscreteMeasure {
        &self.mu
    }

    pub fn nu(&self) -> &DiscreteMeasure {
        &self.nu
    }

    pub fn entry(&self, j: usize, i: usize) -> &Rational {
        &self.q[j][i]
    }

    /// Cells carrying positive mass, in row-major order.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for (j, row) in self.q.iter().enumerate() {
            for (i, mass) in row.iter().enumerate() {
                if mass.is_positive() {
                    cells.push((j, i));
                }
            }
        }
        cells
    }
}

/// Expected payoff Σ q_{j,i} · c(x_j, y_i) of a coupling under a payoff grid.
pub fn plan_value(plan: &TransportPlan, grid: &PayoffGrid) -> Result<Rational, PlanError> {
    let n = plan.mu.len();
    let m = plan.nu.len();
    if grid.n() != n || grid.m() != m {
        return Err(PlanError::GridMismatch {
            rows: grid.n(),
            cols: grid.m(),
            n,
            m,
        });
    }
    let mut total = Rational::zero();
    for (j, row) in plan.q.iter().enumerate() {
        for (i, mass) in row.iter().enumerate() {
            if !mass.is_zero() {
                total += mass * grid.value(j, i);
            }
        }
    }
    Ok(total)
}

/// One crossing step of the construction, with true (original) atom indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEvent {
    /// x_j coincides with y_l and its remaining mass fits; x_j is crossed.
    MatchMuExhausted { j: usize, l: usize },
    /// x_j coincides with y_l and drains it; y_l is crossed, x_j keeps mass.
    MatchNuExhausted { j: usize, l: usize },
    /// x_j splits fully onto the bracketing pair (y_lo, y_hi); x_j is crossed.
    SplitMuExhausted { j: usize, lo: usize, hi: usize },
    /// The scaled split drains the lower neighbor; y_lo is crossed.
    SplitNuLoExhausted { j: usize, lo: usize, hi: usize },
    /// The scaled split drains the upper neighbor; y_hi is crossed.
    SplitNuHiExhausted { j: usize, lo: usize, hi: usize },
}

/// Which neighbor to drain when a split exhausts both at the same scale.
/// The resulting coupling is identical either way; the option exists so tests
/// can assert that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    LowerNeighbor,
    UpperNeighbor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MonotoneOptions {
    /// Re-verify after every step that the remaining masses are still in
    /// convex order. Costly; intended for debugging.
    pub recheck_convex_order: bool,
    pub tie_break: TieBreak,
}

/// A finished construction run: the coupling plus its step log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneRun {
    pub plan: TransportPlan,
    pub events: Vec<StepEvent>,
}

impl MonotoneRun {
    /// Number of crossing steps; bounded by N+M−1.
    pub fn steps(&self) -> usize {
        self.events.len()
    }
}

/// Location of the smallest remaining first-marginal atom relative to the
/// remaining second-marginal atoms.
enum Position {
    At(usize),
    Between(usize, usize),
}

pub fn build_left_monotone(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<TransportPlan, MonotoneError> {
    Ok(build_left_monotone_traced(mu, nu, MonotoneOptions::default())?.plan)
}

/// Left-monotone construction with step log and debug options.
pub fn build_left_monotone_traced(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    options: MonotoneOptions,
) -> Result<MonotoneRun, MonotoneError> {
    if !mu.is_probability() {
        return Err(MonotoneError::NotProbability { side: "first" });
    }
    if !nu.is_probability() {
        return Err(MonotoneError::NotProbability { side: "second" });
    }
    if !check_convex_order(mu, nu).ordered {
        return Err(MonotoneError::NotInConvexOrder);
    }

    let n = mu.len();
    let m = nu.len();
    let mut omega: Vec<Rational> = mu.weights().to_vec();
    let mut theta: Vec<Rational> = nu.weights().to_vec();
    let mut q = vec![vec![Rational::zero(); m]; n];
    let mut events: Vec<StepEvent> = Vec::new();

    // Atoms are sorted, so the first with remaining mass is the smallest.
    while let Some(j) = omega.iter().position(|w| w.is_positive()) {
        if events.len() >= n + m {
            return Err(MonotoneError::InvariantViolation(
                "crossing-step bound exceeded".to_string(),
            ));
        }
        let x = &mu.atoms()[j];
        let w = omega[j].clone();

        let position = locate(x, nu.atoms(), &theta)?;
        match position {
            Position::At(l) => {
                if w <= theta[l] {
                    q[j][l] += &w;
                    theta[l] -= &w;
                    omega[j] = Rational::zero();
                    events.push(StepEvent::MatchMuExhausted { j, l });
                } else {
                    let t = theta[l].clone();
                    q[j][l] += &t;
                    omega[j] -= &t;
                    theta[l] = Rational::zero();
                    events.push(StepEvent::MatchNuExhausted { j, l });
                }
            }
            Position::Between(lo, hi) => {
                let y_lo = &nu.atoms()[lo];
                let y_hi = &nu.atoms()[hi];
                let gap = y_hi - y_lo;
                // Unique zero-drift split of the full remaining mass w:
                // t_lo + t_hi = w and t_lo·y_lo + t_hi·y_hi = w·x.
                let t_lo = &w * (y_hi - x) / &gap;
                let t_hi = &w * (x - y_lo) / &gap;
                let fits_lo = t_lo <= theta[lo];
                let fits_hi = t_hi <= theta[hi];
                if fits_lo && fits_hi {
                    q[j][lo] += &t_lo;
                    q[j][hi] += &t_hi;
                    theta[lo] -= &t_lo;
                    theta[hi] -= &t_hi;
                    omega[j] = Rational::zero();
                    events.push(StepEvent::SplitMuExhausted { j, lo, hi });
                } else {
                    // Scale the split until the tighter neighbor drains.
                    let drain_lo = if !fits_lo && !fits_hi {
                        let k_lo = &theta[lo] / &t_lo;
                        let k_hi = &theta[hi] / &t_hi;
                        match k_lo.cmp(&k_hi) {
                            std::cmp::Ordering::Less => true,
                            std::cmp::Ordering::Greater => false,
                            std::cmp::Ordering::Equal => {
                                options.tie_break == TieBreak::LowerNeighbor
                            }
                        }
                    } else {
                        !fits_lo
                    };
                    if drain_lo {
                        let k = &theta[lo] / &t_lo;
                        let moved_hi = &k * &t_hi;
                        q[j][lo] += &theta[lo];
                        q[j][hi] += &moved_hi;
                        omega[j] -= &k * &w;
                        theta[hi] -= &moved_hi;
                        theta[lo] = Rational::zero();
                        events.push(StepEvent::SplitNuLoExhausted { j, lo, hi });
                    } else {
                        let k = &theta[hi] / &t_hi;
                        let moved_lo = &k * &t_lo;
                        q[j][lo] += &moved_lo;
                        q[j][hi] += &theta[hi];
                        omega[j] -= &k * &w;
                        theta[lo] -= &moved_lo;
                        theta[hi] = Rational::zero();
                        events.push(StepEvent::SplitNuHiExhausted { j, lo, hi });
                    }
                }
            }
        }

        if options.recheck_convex_order {
            recheck_remaining(mu, nu, &omega, &theta)?;
        }
    }

    if theta.iter().any(|t| !t.is_zero()) {
        return Err(MonotoneError::InvariantViolation(
            "second marginal not drained".to_string(),
        ));
    }

    let plan = TransportPlan::new(mu.clone(), nu.clone(), q)
        .map_err(|e| MonotoneError::InvariantViolation(e.to_string()))?;
    Ok(MonotoneRun { plan, events })
}

fn locate(
    x: &Rational,
    atoms: &[Rational],
    theta: &[Rational],
) -> Result<Position, MonotoneError> {
    let mut below: Option<usize> = None;
    for (i, y) in atoms.iter().enumerate() {
        if !theta[i].is_positive() {
            continue;
        }
        if y == x {
            return Ok(Position::At(i));
        }
        if y < x {
            below = Some(i);
        } else {
            return match below {
                Some(lo) => Ok(Position::Between(lo, i)),
                // Remaining masses in convex order always bracket the atom.
                None => Err(MonotoneError::InvariantViolation(
                    "smallest remaining atom below all remaining target atoms".to_string(),
                )),
            };
        }
    }
    Err(MonotoneError::InvariantViolation(
        "smallest remaining atom above all remaining target atoms".to_string(),
    ))
}

fn recheck_remaining(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    omega: &[Rational],
    theta: &[Rational],
) -> Result<(), MonotoneError> {
    let mu_rest: Vec<(Rational, Rational)> = mu
        .atoms()
        .iter()
        .zip(omega.iter())
        .filter(|(_, w)| w.is_positive())
        .map(|(x, w)| (x.clone(), w.clone()))
        .collect();
    let nu_rest: Vec<(Rational, Rational)> = nu
        .atoms()
        .iter()
        .zip(theta.iter())
        .filter(|(_, w)| w.is_positive())
        .map(|(x, w)| (x.clone(), w.clone()))
        .collect();
    if mu_rest.is_empty() && nu_rest.is_empty() {
        return Ok(());
    }
    let err = || MonotoneError::InvariantViolation(
        "remaining masses left convex order".to_string(),
    );
    let mu_rest = DiscreteMeasure::new(mu_rest).map_err(|_| err())?;
    let nu_rest = DiscreteMeasure::new(nu_rest).map_err(|_| err())?;
    if !check_convex_order(&mu_rest, &nu_rest).ordered {
        return Err(err());
    }
    Ok(())
}

/// Right-monotone coupling via reflection: build the left-monotone coupling
/// of the reflected marginals and map indices back.
pub fn build_right_monotone(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<TransportPlan, MonotoneError> {
    let mu_r = mu.reflect();
    let nu_r = nu.reflect();
    let reflected = build_left_monotone(&mu_r, &nu_r)?;
    let n = mu.len();
    let m = nu.len();
    let mut q = vec![vec![Rational::zero(); m]; n];
    for (jr, row) in reflected.q().iter().enumerate() {
        for (ir, mass) in row.iter().enumerate() {
            if !mass.is_zero() {
                q[n - 1 - jr][m - 1 - ir] = mass.clone();
            }
        }
    }
    TransportPlan::new(mu.clone(), nu.clone(), q)
        .map_err(|e| MonotoneError::InvariantViolation(e.to_string()))
}

/// A violation of left-monotonicity: a lower atom x spreads onto (y_lo, y_hi)
/// while a higher atom x' sends mass strictly inside that interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ForbiddenWitness {
    pub j: usize,
    pub j_prime: usize,
    pub i_lo: usize,
    pub i_mid: usize,
    pub i_hi: usize,
    pub x: Rational,
    pub x_prime: Rational,
    pub y_lo: Rational,
    pub y_mid: Rational,
    pub y_hi: Rational,
}

/// Scans for forbidden configurations; `None` means the plan is
/// left-monotone. The widest coupled pair (min, max) per row suffices as the
/// bracketing pair, so the scan is O(N²·M).
pub fn verify_left_monotone(plan: &TransportPlan) -> Option<ForbiddenWitness> {
    let ys = plan.nu().atoms();
    let xs = plan.mu().atoms();
    let n = plan.mu().len();

    let mut spans: Vec<Option<(usize, usize)>> = Vec::with_capacity(n);
    for row in plan.q() {
        let mut lo = None;
        let mut hi = None;
        for (i, mass) in row.iter().enumerate() {
            if mass.is_positive() {
                if lo.is_none() {
                    lo = Some(i);
                }
                hi = Some(i);
            }
        }
        spans.push(lo.zip(hi));
    }

    for j in 0..n {
        let (lo, hi) = match spans[j] {
            Some(span) if span.0 != span.1 => span,
            _ => continue,
        };
        for j_prime in (j + 1)..n {
            for (i, mass) in plan.q()[j_prime].iter().enumerate() {
                if mass.is_positive() && lo < i && i < hi {
                    return Some(ForbiddenWitness {
                        j,
                        j_prime,
                        i_lo: lo,
                        i_mid: i,
                        i_hi: hi,
                        x: xs[j].clone(),
                        x_prime: xs[j_prime].clone(),
                        y_lo: ys[lo].clone(),
                        y_mid: ys[i].clone(),
                        y_hi: ys[hi].clone(),
                    });
                }
            }
        }
    }
    None
}

/// Mirror scan: forbidden configurations with the roles of lower and higher
/// atoms exchanged (the x above spreads, the x below hits the inside).
pub fn verify_right_monotone(plan: &TransportPlan) -> Option<ForbiddenWitness> {
    let ys = plan.nu().atoms();
    let xs = plan.mu().atoms();
    let n = plan.mu().len();

    let mut spans: Vec<Option<(usize, usize)>> = Vec::with_capacity(n);
    for row in plan.q() {
        let mut lo = None;
        let mut hi = None;
        for (i, mass) in row.iter().enumerate() {
            if mass.is_positive() {
                if lo.is_none() {
                    lo = Some(i);
                }
                hi = Some(i);
            }
        }
        spans.push(lo.zip(hi));
    }

    for j in 0..n {
        let (lo, hi) = match spans[j] {
            Some(span) if span.0 != span.1 => span,
            _ => continue,
        };
        for j_prime in 0..j {
            for (i, mass) in plan.q()[j_prime].iter().enumerate() {
                if mass.is_positive() && lo < i && i < hi {
                    return Some(ForbiddenWitness {
                        j,
                        j_prime,
                        i_lo: lo,
                        i_mid: i,
                        i_hi: hi,
                        x: xs[j].clone(),
                        x_prime: xs[j_prime].clone(),
                        y_lo: ys[lo].clone(),
                        y_mid: ys[i].clone(),
                        y_hi: ys[hi].clone(),
                    });
                }
            }
        }
    }
    None
}
