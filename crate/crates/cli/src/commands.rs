//! Subcommand implementations. Each command prints one JSON report to stdout
//! and returns the process exit code; warnings go to stderr.

use std::path::Path;

use mot_core::hedge::{
    build_dual_hedge, build_dual_subhedge, verify_hedge, HedgeError, HedgePortfolio, HedgeSide,
};
use mot_core::lp::{build_primal, solve_lp, LpStatus, Sense};
use mot_core::measure::{check_convex_order, DiscreteMeasure, OrderReport};
use mot_core::monotone::{
    build_left_monotone_traced, build_right_monotone, plan_value, verify_left_monotone,
    verify_right_monotone, ForbiddenWitness, MonotoneError, MonotoneOptions, TransportPlan,
};
use mot_core::payoff::{check_smc, PayoffGrid};
use mot_core::rational::Rational;
use mot_core::market::{extract_marginal, CallQuoteSet, MarketError};
use serde::Serialize;

use crate::files::{load_instance, read_json, HedgeFile, PlanFile, QuoteFile};
use crate::{Bound, CliError, Method, OutputFormat};

fn emit<T: Serialize>(report: &T, format: OutputFormat) {
    let text = match format {
        OutputFormat::Pretty => serde_json::to_string_pretty(report),
        OutputFormat::Compact => serde_json::to_string(report),
    }
    .expect("reports serialize without error");
    println!("{text}");
}

fn domain_from_monotone(err: MonotoneError) -> CliError {
    CliError::Domain(err.to_string())
}

fn domain_from_hedge(err: HedgeError) -> CliError {
    CliError::Domain(err.to_string())
}

impl Bound {
    fn name(self) -> &'static str {
        match self {
            Bound::Upper => "upper",
            Bound::Lower => "lower",
        }
    }

    fn sense(self) -> Sense {
        match self {
            Bound::Upper => Sense::Max,
            Bound::Lower => Sense::Min,
        }
    }
}

pub fn cmd_check_order(instance: &Path, format: OutputFormat) -> Result<u8, CliError> {
    let (mu, nu, _grid) = load_instance(instance)?;
    let report: OrderReport = check_convex_order(&mu, &nu);
    let ordered = report.ordered;
    emit(&report, format);
    Ok(if ordered { 0 } else { 1 })
}

#[derive(Serialize)]
struct SolveReport {
    bound: &'static str,
    method: &'static str,
    /// The reported price bound (exact, as a rational string).
    value: Rational,
    value_decimal: f64,
    /// Whether `value` is certified to be the exact bound: the LP value
    /// always is; a monotone-coupling value is certified when the payoff
    /// satisfies the strict cross-difference criterion in the direction
    /// matching the requested bound.
    certified: bool,
    /// Which monotone coupling was used, when one was.
    #[serde(skip_serializing_if = "Option::is_none")]
    plan_side: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monotone_value: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lp_value: Option<Rational>,
    /// Present for --method both: whether the two values coincide.
    #[serde(skip_serializing_if = "Option::is_none")]
    agreement: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    plan: Option<Vec<Vec<Rational>>>,
}

/// Picks the monotone coupling whose value is the requested bound. The left
/// coupling maximizes (and the right minimizes) payoffs satisfying the
/// strict criterion; for payoffs satisfying it after negation the roles
/// swap. Otherwise the choice defaults by bound and is flagged uncertified.
fn monotone_bound(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    grid: &PayoffGrid,
    bound: Bound,
    debug_invariants: bool,
) -> Result<(Rational, TransportPlan, &'static str, bool), CliError> {
    let strict = check_smc(grid).holds_strict;
    let strict_negated = check_smc(&grid.negated()).holds_strict;
    let (use_left, certified) = match bound {
        Bound::Upper => {
            if strict {
                (true, true)
            } else if strict_negated {
                (false, true)
            } else {
                (true, false)
            }
        }
        Bound::Lower => {
            if strict {
                (false, true)
            } else if strict_negated {
                (true, true)
            } else {
                (false, false)
            }
        }
    };
    if !certified {
        eprintln!(
            "warning: the payoff does not satisfy the strict cross-difference \
             criterion in either direction; the monotone coupling's value may \
             differ from the exact {} bound (cross-check with --method lp or both)",
            bound.name()
        );
    }
    let options = MonotoneOptions {
        recheck_convex_order: debug_invariants,
        ..Default::default()
    };
    let plan = if use_left {
        build_left_monotone_traced(mu, nu, options)
            .map_err(domain_from_monotone)?
            .plan
    } else {
        if debug_invariants {
            // The right coupling is built by reflection; run the reflected
            // construction with per-step checks so violations surface.
            build_left_monotone_traced(&mu.reflect(), &nu.reflect(), options)
                .map_err(domain_from_monotone)?;
        }
        build_right_monotone(mu, nu).map_err(domain_from_monotone)?
    };
    let value = plan_value(&plan, grid).map_err(|e| CliError::Domain(e.to_string()))?;
    Ok((value, plan, if use_left { "left" } else { "right" }, certified))
}

fn lp_bound(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    grid: &PayoffGrid,
    bound: Bound,
) -> Result<(Rational, TransportPlan), CliError> {
    let lp = build_primal(mu, nu, grid, bound.sense())
        .map_err(|e| CliError::Domain(format!("internal error: {e}")))?;
    let solution = solve_lp(&lp);
    match solution.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(CliError::Domain(
                "the marginals admit no martingale coupling".to_string(),
            ))
        }
        LpStatus::Unbounded => {
            return Err(CliError::Domain(
                "internal error: the pricing program is unbounded".to_string(),
            ))
        }
    }
    let m = nu.len();
    let q: Vec<Vec<Rational>> = solution
        .primal_values
        .chunks(m)
        .map(|row| row.to_vec())
        .collect();
    let plan = TransportPlan::new(mu.clone(), nu.clone(), q)
        .map_err(|e| CliError::Domain(format!("internal error: {e}")))?;
    Ok((solution.objective_value, plan))
}

pub fn cmd_solve(
    instance: &Path,
    bound: Bound,
    method: Method,
    debug_invariants: bool,
    format: OutputFormat,
) -> Result<u8, CliError> {
    let (mu, nu, grid) = load_instance(instance)?;
    match method {
        Method::Monotone => {
            let (value, plan, side, certified) =
                monotone_bound(&mu, &nu, &grid, bound, debug_invariants)?;
            let report = SolveReport {
                bound: bound.name(),
                method: "monotone",
                value_decimal: value.to_f64(),
                value,
                certified,
                plan_side: Some(side),
                monotone_value: None,
                lp_value: None,
                agreement: None,
                plan: Some(plan.q().to_vec()),
            };
            emit(&report, format);
            Ok(0)
        }
        Method::Lp => {
            let (value, plan) = lp_bound(&mu, &nu, &grid, bound)?;
            let report = SolveReport {
                bound: bound.name(),
                method: "lp",
                value_decimal: value.to_f64(),
                value,
                certified: true,
                plan_side: None,
                monotone_value: None,
                lp_value: None,
                agreement: None,
                plan: Some(plan.q().to_vec()),
            };
            emit(&report, format);
            Ok(0)
        }
        Method::Both => {
            let (mono_value, plan, side, _certified) =
                monotone_bound(&mu, &nu, &grid, bound, debug_invariants)?;
            let (lp_value, _lp_plan) = lp_bound(&mu, &nu, &grid, bound)?;
            let agreement = mono_value == lp_value;
            let report = SolveReport {
                bound: bound.name(),
                method: "both",
                value: lp_value.clone(),
                value_decimal: lp_value.to_f64(),
                certified: true,
                plan_side: Some(side),
                monotone_value: Some(mono_value),
                lp_value: Some(lp_value),
                agreement: Some(agreement),
                plan: Some(plan.q().to_vec()),
            };
            emit(&report, format);
            if agreement {
                Ok(0)
            } else {
                eprintln!(
                    "warning: the monotone coupling's value differs from the \
                     exact bound; the reported value is the LP optimum"
                );
                Ok(1)
            }
        }
    }
}

#[derive(Serialize)]
struct HedgeCmdReport {
    bound: &'static str,
    /// Price of the portfolio; equals the exact bound on both paths.
    cost: Rational,
    cost_decimal: f64,
    /// True when the portfolio came from the full linear program because the
    /// crossing-step construction could not be certified optimal.
    fallback: bool,
    portfolio: HedgePortfolio,
}

pub fn cmd_hedge(instance: &Path, bound: Bound, format: OutputFormat) -> Result<u8, CliError> {
    let (mu, nu, grid) = load_instance(instance)?;
    let outcome = match bound {
        Bound::Upper => build_dual_hedge(&mu, &nu, &grid),
        Bound::Lower => build_dual_subhedge(&mu, &nu, &grid),
    }
    .map_err(domain_from_hedge)?;
    let cost = outcome.portfolio.cost(&mu, &nu);
    let report = HedgeCmdReport {
        bound: bound.name(),
        cost_decimal: cost.to_f64(),
        cost,
        fallback: outcome.fallback,
        portfolio: outcome.portfolio,
    };
    emit(&report, format);
    Ok(0)
}

#[derive(Serialize)]
struct AtomOut {
    x: Rational,
    w: Rational,
}

#[derive(Serialize)]
struct MaturityOut {
    label: String,
    forward: Rational,
    atoms: Vec<AtomOut>,
}

#[derive(Serialize)]
struct PairOrderOut {
    from: String,
    to: String,
    ordered: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_violation: Option<Rational>,
}

#[derive(Serialize)]
struct ExtractReport {
    maturities: Vec<MaturityOut>,
    /// Convex-order checks between consecutive maturities; a violation means
    /// the quote surface admits a calendar arbitrage.
    consecutive_order: Vec<PairOrderOut>,
}

fn market_error(label: &str, err: MarketError) -> CliError {
    match err {
        MarketError::Empty | MarketError::DuplicateStrike { .. } => {
            CliError::Usage(format!("maturity {label}: {err}"))
        }
        _ => CliError::Domain(format!("maturity {label}: {err}")),
    }
}

pub fn cmd_extract(quotes_path: &Path, format: OutputFormat) -> Result<u8, CliError> {
    let file: QuoteFile = read_json(quotes_path)?;
    if file.maturities.is_empty() {
        return Err(CliError::Usage("quote file lists no maturities".to_string()));
    }
    let mut measures: Vec<(String, DiscreteMeasure)> = Vec::new();
    let mut maturities = Vec::new();
    for maturity in &file.maturities {
        let pairs = maturity
            .quotes
            .iter()
            .map(|q| (q.strike.clone(), q.price.clone()));
        let quote_set = CallQuoteSet::new(maturity.forward.clone(), pairs)
            .map_err(|e| market_error(&maturity.label, e))?;
        let measure =
            extract_marginal(&quote_set).map_err(|e| market_error(&maturity.label, e))?;
        maturities.push(MaturityOut {
            label: maturity.label.clone(),
            forward: maturity.forward.clone(),
            atoms: measure
                .iter()
                .map(|(x, w)| AtomOut {
                    x: x.clone(),
                    w: w.clone(),
                })
                .collect(),
        });
        measures.push((maturity.label.clone(), measure));
    }

    let mut all_ordered = true;
    let mut consecutive_order = Vec::new();
    for pair in measures.windows(2) {
        let report = check_convex_order(&pair[0].1, &pair[1].1);
        all_ordered &= report.ordered;
        consecutive_order.push(PairOrderOut {
            from: pair[0].0.clone(),
            to: pair[1].0.clone(),
            ordered: report.ordered,
            first_violation: report.first_violation,
        });
    }

    emit(
        &ExtractReport {
            maturities,
            consecutive_order,
        },
        format,
    );
    if all_ordered {
        Ok(0)
    } else {
        eprintln!(
            "warning: consecutive maturities are not in convex order; the \
             quote surface admits a calendar arbitrage"
        );
        Ok(1)
    }
}

#[derive(Serialize)]
struct PlanCheckOut {
    valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    left_monotone: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    right_monotone: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    left_witness: Option<ForbiddenWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    right_witness: Option<ForbiddenWitness>,
}

#[derive(Serialize)]
struct HedgeCheckOut {
    side: &'static str,
    feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_violation: Option<(usize, usize)>,
    cost: Rational,
    /// Exact bound for the requested side, from the linear program.
    optimum: Rational,
    /// cost − optimum for a super-hedge, optimum − cost for a sub-hedge;
    /// zero means the portfolio is optimal.
    gap_to_optimum: Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    duality_gap_vs_plan: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slackness_vs_plan: Option<bool>,
}

#[derive(Serialize)]
struct VerifyReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    plan: Option<PlanCheckOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hedge: Option<HedgeCheckOut>,
}

pub fn cmd_verify(
    instance: &Path,
    plan_path: Option<&Path>,
    hedge_path: Option<&Path>,
    bound: Bound,
    format: OutputFormat,
) -> Result<u8, CliError> {
    if plan_path.is_none() && hedge_path.is_none() {
        return Err(CliError::Usage(
            "nothing to verify: pass --plan and/or --hedge".to_string(),
        ));
    }
    let (mu, nu, grid) = load_instance(instance)?;

    let mut exit = 0u8;
    let mut plan_out = None;
    let mut checked_plan: Option<TransportPlan> = None;
    if let Some(path) = plan_path {
        let file: PlanFile = read_json(path)?;
        match TransportPlan::new(mu.clone(), nu.clone(), file.q) {
            Ok(plan) => {
                let left = verify_left_monotone(&plan);
                let right = verify_right_monotone(&plan);
                plan_out = Some(PlanCheckOut {
                    valid: true,
                    error: None,
                    value: Some(
                        plan_value(&plan, &grid)
                            .map_err(|e| CliError::Domain(e.to_string()))?,
                    ),
                    left_monotone: Some(left.is_none()),
                    right_monotone: Some(right.is_none()),
                    left_witness: left,
                    right_witness: right,
                });
                checked_plan = Some(plan);
            }
            Err(e) => {
                exit = 1;
                plan_out = Some(PlanCheckOut {
                    valid: false,
                    error: Some(e.to_string()),
                    value: None,
                    left_monotone: None,
                    right_monotone: None,
                    left_witness: None,
                    right_witness: None,
                });
            }
        }
    }

    let mut hedge_out = None;
    if let Some(path) = hedge_path {
        let file: HedgeFile = read_json(path)?;
        let portfolio = HedgePortfolio {
            phi: file.phi,
            psi: file.psi,
            h: file.h,
        };
        let side = match bound {
            Bound::Upper => HedgeSide::Super,
            Bound::Lower => HedgeSide::Sub,
        };
        let report = verify_hedge(
            &portfolio,
            &mu,
            &nu,
            &grid,
            checked_plan.as_ref(),
            side,
        )
        .map_err(domain_from_hedge)?;
        let (optimum, _) = lp_bound(&mu, &nu, &grid, bound)?;
        let gap_to_optimum = match bound {
            Bound::Upper => &report.cost - &optimum,
            Bound::Lower => &optimum - &report.cost,
        };
        if !report.feasible {
            exit = 1;
        }
        hedge_out = Some(HedgeCheckOut {
            side: bound.name(),
            feasible: report.feasible,
            first_violation: report.first_violation,
            cost: report.cost,
            optimum,
            gap_to_optimum,
            duality_gap_vs_plan: report.duality_gap,
            slackness_vs_plan: report.slackness_ok,
        });
    }

    emit(
        &VerifyReport {
            plan: plan_out,
            hedge: hedge_out,
        },
        format,
    );
    Ok(exit)
}
