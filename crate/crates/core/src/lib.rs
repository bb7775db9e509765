//! Exact-arithmetic pricing bounds for two-period exotic payoffs given the
//! marginal laws of the underlying at both dates.
//!
//! Everything runs on arbitrary-precision rationals; there is no floating
//! point anywhere in the computational path, so equalities asserted by the
//! theory (strong duality, marginal sums, martingale balance) are checked
//! exactly rather than within tolerances.
//!
//! The pieces fit together as follows:
//!
//! * [`rational`] and [`measure`] provide the scalar type, discrete measures
//!   with canonical atom lists, call-price curves, and the convex-order test
//!   that decides whether a martingale coupling of two marginals exists.
//! * [`payoff`] holds payoff grids, a few builtin payoff families, and the
//!   cross-derivative-style criterion under which the monotone coupling below
//!   is the optimizer.
//! * [`lp`] is a self-contained exact simplex solver plus builders for the
//!   primal transport program and its dual; it serves as the independent
//!   cross-check for the structural algorithms.
//! * [`monotone`] constructs the left- and right-monotone martingale
//!   couplings directly, without solving a linear program.
//! * [`hedge`] turns the run of the monotone construction into a semi-static
//!   super-hedging portfolio and verifies portfolios against instances.
//! * [`market`] converts between discrete measures and call-quote curves.

pub mod hedge;
pub mod lp;
pub mod market;
pub mod measure;
pub mod monotone;
pub mod payoff;
pub mod rational;

pub use hedge::{
    build_dual_hedge, build_dual_subhedge, build_symbolic_hedge, verify_hedge, AffineExpr,
    DualHedgeOutcome, HedgeError, HedgePortfolio, HedgeReport, HedgeSide, SymbolicHedge, VarId,
};
pub use lp::{
    build_dual, build_primal, solve_lp, LinearProgram, LpError, LpSolution, LpStatus, RowKind,
    Sense, VarBound,
};
pub use market::{extract_marginal, quotes_from_measure, CallQuoteSet, MarketError};
pub use measure::{check_convex_order, CallCurve, DiscreteMeasure, MeasureError, OrderReport};
pub use monotone::{
    build_left_monotone, build_left_monotone_traced, build_right_monotone, plan_value,
    verify_left_monotone, verify_right_monotone, ForbiddenWitness, MonotoneError, MonotoneRun,
    MonotoneOptions, PlanError, StepEvent, TieBreak, TransportPlan,
};
pub use payoff::{check_smc, grid_from_builtin, BuiltinPayoff, PayoffError, PayoffGrid, SmcReport, SmcWitness};
pub use rational::{ParseRationalError, Rational};
