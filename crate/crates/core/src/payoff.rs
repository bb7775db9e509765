//! Payoff grids over product supports and the cross-difference criterion that
//! guarantees optimality of the monotone couplings.

use crate::rational::Rational;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PayoffError {
    #[error("unknown builtin payoff {0:?}")]
    UnknownPayoff(String),
    #[error("builtin payoff {name:?} takes {expected} parameter(s), got {got}")]
    ParamArity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("payoff grid is {rows}x{cols} but supports are {n}x{m}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        n: usize,
        m: usize,
    },
}

/// Payoff values c(x_j, y_i) tabulated over the product of two supports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayoffGrid {
    values: Vec<Vec<Rational>>,
    xs: Vec<Rational>,
    ys: Vec<Rational>,
}

impl PayoffGrid {
    pub fn new(
        values: Vec<Vec<Rational>>,
        xs: Vec<Rational>,
        ys: Vec<Rational>,
    ) -> Result<Self, PayoffError> {
        let rows = values.len();
        let cols = values.first().map_or(0, |row| row.len());
        if rows != xs.len() || values.iter().any(|row| row.len() != ys.len()) {
            return Err(PayoffError::DimensionMismatch {
                rows,
                cols,
                n: xs.len(),
                m: ys.len(),
            });
        }
        Ok(PayoffGrid { values, xs, ys })
    }

    pub fn from_fn(
        xs: Vec<Rational>,
        ys: Vec<Rational>,
        f: impl Fn(&Rational, &Rational) -> Rational,
    ) -> Self {
        let values = xs
            .iter()
            .map(|x| ys.iter().map(|y| f(x, y)).collect())
            .collect();
        PayoffGrid { values, xs, ys }
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn m(&self) -> usize {
        self.ys.len()
    }

    pub fn xs(&self) -> &[Rational] {
        &self.xs
    }

    pub fn ys(&self) -> &[Rational] {
        &self.ys
    }

    pub fn value(&self, j: usize, i: usize) -> &Rational {
        &self.values[j][i]
    }

    pub fn values(&self) -> &[Vec<Rational>] {
        &self.values
    }

    /// Grid of −c; swaps the roles of upper and lower bound.
    pub fn negated(&self) -> PayoffGrid {
        PayoffGrid {
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| -v).collect())
                .collect(),
            xs: self.xs.clone(),
            ys: self.ys.clone(),
        }
    }
}

/// Closed-form payoff families available by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuiltinPayoff {
    /// c(x,y) = x·y²; strictly satisfies the cross-difference criterion.
    XTimesYSquared,
    /// c(x,y) = −x·y²; the mirrored case, optimal roles swapped.
    NegXTimesYSquared,
    /// c(x,y) = (y − x − K)⁺ for a strike offset K.
    SpreadCall { strike: Rational },
    /// c(x,y) = |y − x|.
    ForwardStraddle,
}

impl BuiltinPayoff {
    pub fn parse(name: &str, params: &[Rational]) -> Result<Self, PayoffError> {
        let arity = |expected: usize| -> Result<(), PayoffError> {
            if params.len() != expected {
                Err(PayoffError::ParamArity {
                    name: name.to_string(),
                    expected,
                    got: params.len(),
                })
            } else {
                Ok(())
            }
        };
        match name {
            "x_times_y_squared" => {
                arity(0)?;
                Ok(BuiltinPayoff::XTimesYSquared)
            }
            "neg_x_times_y_squared" => {
                arity(0)?;
                Ok(BuiltinPayoff::NegXTimesYSquared)
            }
            "spread_call" => {
                arity(1)?;
                Ok(BuiltinPayoff::SpreadCall {
                    strike: params[0].clone(),
                })
            }
            "forward_straddle" => {
                arity(0)?;
                Ok(BuiltinPayoff::ForwardStraddle)
            }
            other => Err(PayoffError::UnknownPayoff(other.to_string())),
        }
    }

    pub fn eval(&self, x: &Rational, y: &Rational) -> Rational {
        match self {
            BuiltinPayoff::XTimesYSquared => x * y * y,
            BuiltinPayoff::NegXTimesYSquared => -(x * y * y),
            BuiltinPayoff::SpreadCall { strike } => {
                let v = y - x - strike;
                if v.is_positive() {
                    v
                } else {
                    Rational::zero()
                }
            }
            BuiltinPayoff::ForwardStraddle => (y - x).abs(),
        }
    }
}

/// Tabulates a named builtin payoff over the given supports.
pub fn grid_from_builtin(
    name: &str,
    params: &[Rational],
    xs: &[Rational],
    ys: &[Rational],
) -> Result<PayoffGrid, PayoffError> {
    let payoff = BuiltinPayoff::parse(name, params)?;
    Ok(PayoffGrid::from_fn(xs.to_vec(), ys.to_vec(), |x, y| {
        payoff.eval(x, y)
    }))
}

/// Indices (j, j', i⁻, i', i⁺) at which the cross-difference expression is
/// negative: x_j < x_{j'}, y_{i⁻} < y_{i'} < y_{i⁺}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmcWitness {
    pub j: usize,
    pub j_prime: usize,
    pub i_lo: usize,
    pub i_mid: usize,
    pub i_hi: usize,
}

/// Result of scanning all support pairs x < x' against all triples
/// y⁻ < y' < y⁺ for the expression
///
/// λ·[c(x',y⁺) − c(x,y⁺)] + (1−λ)·[c(x',y⁻) − c(x,y⁻)] − [c(x',y') − c(x,y')]
///
/// with λ = (y' − y⁻)/(y⁺ − y⁻).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmcReport {
    /// Expression > 0 everywhere; the left-monotone coupling maximizes and
    /// the right-monotone coupling minimizes, both uniquely among couplings.
    pub holds_strict: bool,
    /// Expression ≥ 0 everywhere.
    pub holds_weak: bool,
    /// First strict-negativity witness in lexicographic scan order;
    /// present iff `holds_weak` is false.
    pub first_violation: Option<SmcWitness>,
}

/// Exhaustive scan of the cross-difference criterion over the grid supports.
///
/// Vacuously strict when there are fewer than two x-atoms or three y-atoms.
/// The expression is evaluated multiplied through by y⁺ − y⁻ > 0, which
/// preserves its sign and avoids a division per triple.
pub fn check_smc(grid: &PayoffGrid) -> SmcReport {
    let xs = grid.xs();
    let ys = grid.ys();
    let n = xs.len();
    let m = ys.len();
    let mut holds_strict = true;
    let mut holds_weak = true;
    let mut first_violation = None;

    'scan: for j in 0..n {
        for jp in (j + 1)..n {
            for lo in 0..m {
                for mid in (lo + 1)..m {
                    for hi in (mid + 1)..m {
                        let lam_num = &ys[mid] - &ys[lo];
                        let lam_den = &ys[hi] - &ys[lo];
                        let d_hi = grid.value(jp, hi) - grid.value(j, hi);
                        let d_lo = grid.value(jp, lo) - grid.value(j, lo);
                        let d_mid = grid.value(jp, mid) - grid.value(j, mid);
                        let scaled =
                            &lam_num * d_hi + (&lam_den - &lam_num) * d_lo - &lam_den * d_mid;
                        if scaled.is_negative() {
                            holds_strict = false;
                            holds_weak = false;
                            first_violation = Some(SmcWitness {
                                j,
                                j_prime: jp,
                                i_lo: lo,
                                i_mid: mid,
                                i_hi: hi,
                            });
                            break 'scan;
                        }
                        if scaled.is_zero() {
                            holds_strict = false;
                        }
                    }
                }
            }
        }
    }

    SmcReport {
        holds_strict,
        holds_weak,
        first_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn rs(v: &[&str]) -> Vec<Rational> {
        v.iter().map(|s| r(s)).collect()
    }

    fn golden_supports() -> (Vec<Rational>, Vec<Rational>) {
        (rs(&["1", "3"]), rs(&["0", "2", "5"]))
    }

    #[test]
    fn builtin_x_times_y_squared_values() {
        let (xs, ys) = golden_supports();
        let grid = grid_from_builtin("x_times_y_squared", &[], &xs, &ys).unwrap();
        assert_eq!(grid.values()[0], rs(&["0", "4", "25"]));
        assert_eq!(grid.values()[1], rs(&["0", "12", "75"]));
        let neg = grid_from_builtin("neg_x_times_y_squared", &[], &xs, &ys).unwrap();
        assert_eq!(neg, grid.negated());
    }

    #[test]
    fn builtin_spread_call_and_straddle() {
        let zero = r("0");
        let call = BuiltinPayoff::parse("spread_call", &[zero]).unwrap();
        assert_eq!(call.eval(&r("1"), &r("0")), r("0"));
        assert_eq!(call.eval(&r("1"), &r("5")), r("4"));
        let straddle = BuiltinPayoff::parse("forward_straddle", &[]).unwrap();
        assert_eq!(straddle.eval(&r("2"), &r("2")), r("0"));
        assert_eq!(straddle.eval(&r("3"), &r("0")), r("3"));
        assert_eq!(straddle.eval(&r("1"), &r("5")), r("4"));
    }

    #[test]
    fn builtin_parse_errors() {
        assert!(matches!(
            BuiltinPayoff::parse("call_on_max", &[]),
            Err(PayoffError::UnknownPayoff(_))
        ));
        assert!(matches!(
            BuiltinPayoff::parse("spread_call", &[]),
            Err(PayoffError::ParamArity { expected: 1, got: 0, .. })
        ));
        assert!(matches!(
            BuiltinPayoff::parse("forward_straddle", &[r("1")]),
            Err(PayoffError::ParamArity { expected: 0, got: 1, .. })
        ));
    }

    #[test]
    fn grid_dimension_check() {
        let err = PayoffGrid::new(
            vec![rs(&["0", "1"])],
            rs(&["1", "3"]),
            rs(&["0", "1"]),
        );
        assert!(matches!(err, Err(PayoffError::DimensionMismatch { .. })));
        let err = PayoffGrid::new(
            vec![rs(&["0", "1"]), rs(&["0"])],
            rs(&["1", "3"]),
            rs(&["0", "1"]),
        );
        assert!(matches!(err, Err(PayoffError::DimensionMismatch { .. })));
    }

    #[test]
    fn smc_strict_for_x_times_y_squared() {
        let (xs, ys) = golden_supports();
        let grid = grid_from_builtin("x_times_y_squared", &[], &xs, &ys).unwrap();
        let report = check_smc(&grid);
        assert!(report.holds_strict);
        assert!(report.holds_weak);
        assert_eq!(report.first_violation, None);
    }

    #[test]
    fn smc_violated_for_negated_payoff() {
        let (xs, ys) = golden_supports();
        let grid = grid_from_builtin("neg_x_times_y_squared", &[], &xs, &ys).unwrap();
        let report = check_smc(&grid);
        assert!(!report.holds_strict);
        assert!(!report.holds_weak);
        assert_eq!(
            report.first_violation,
            Some(SmcWitness {
                j: 0,
                j_prime: 1,
                i_lo: 0,
                i_mid: 1,
                i_hi: 2
            })
        );
    }

    #[test]
    fn smc_vacuous_on_small_supports() {
        let grid = grid_from_builtin("x_times_y_squared", &[], &rs(&["1"]), &rs(&["0", "1", "2"]))
            .unwrap();
        assert!(check_smc(&grid).holds_strict);
        let grid =
            grid_from_builtin("x_times_y_squared", &[], &rs(&["1", "2"]), &rs(&["0", "1"])).unwrap();
        assert!(check_smc(&grid).holds_strict);
    }

    #[test]
    fn smc_weak_but_not_strict_for_affine_in_y() {
        // c(x,y) = x·y is affine in y, so every cross-difference expression
        // collapses to zero.
        let (xs, ys) = golden_supports();
        let grid = PayoffGrid::from_fn(xs, ys, |x, y| x * y);
        let report = check_smc(&grid);
        assert!(!report.holds_strict);
        assert!(report.holds_weak);
        assert_eq!(report.first_violation, None);
    }

    #[test]
    fn straddle_violates_smc_when_kink_is_straddled() {
        let xs = rs(&["0", "1"]);
        let ys = rs(&["-1", "0", "1", "2"]);
        let grid = PayoffGrid::from_fn(xs, ys, |x, y| (y - x).abs());
        let report = check_smc(&grid);
        assert!(!report.holds_weak);
        assert!(report.first_violation.is_some());
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-12i64..=12, 1i64..=3).prop_map(|(n, d)| Rational::new(n, d))
    }

    fn sorted_support(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Rational>> {
        prop::collection::btree_set(small_rational(), len)
            .prop_map(|set| set.into_iter().collect())
    }

    proptest! {
        #[test]
        fn x_times_y_squared_is_strict_on_any_support(
            xs in sorted_support(2..=5),
            ys in sorted_support(3..=6),
        ) {
            let grid = grid_from_builtin("x_times_y_squared", &[], &xs, &ys).unwrap();
            prop_assert!(check_smc(&grid).holds_strict);
            let report = check_smc(&grid.negated());
            prop_assert!(!report.holds_weak);
            prop_assert!(report.first_violation.is_some());
        }

        #[test]
        fn affine_in_y_is_weak_everywhere(
            xs in sorted_support(2..=5),
            ys in sorted_support(3..=6),
            a in small_rational(),
            b in small_rational(),
        ) {
            // c(x,y) = a·x + b·x·y + y.
            let grid = PayoffGrid::from_fn(xs, ys, |x, y| &a * x + &b * x * y + y);
            let report = check_smc(&grid);
            prop_assert!(report.holds_weak);
            prop_assert!(!report.holds_strict || grid.n() < 2 || grid.m() < 3);
        }
    }
}
