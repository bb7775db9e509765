//! Discrete measures on the real line, their call-price curves, and the
//! convex-order test that decides whether a martingale coupling exists.

use crate::rational::Rational;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("measure has no atoms with positive weight")]
    Empty,
    #[error("negative weight {weight} at atom {atom}")]
    NegativeWeight { atom: Rational, weight: Rational },
}

/// Finitely supported measure with positive weights.
///
/// Canonical form is enforced at construction: atoms strictly increasing,
/// duplicates merged by adding weights, zero-weight atoms dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteMeasure {
    atoms: Vec<Rational>,
    weights: Vec<Rational>,
}

impl DiscreteMeasure {
    pub fn new(pairs: impl IntoIterator<Item = (Rational, Rational)>) -> Result<Self, MeasureError> {
        let mut pairs: Vec<(Rational, Rational)> = pairs.into_iter().collect();
        for (atom, weight) in &pairs {
            if weight.is_negative() {
                return Err(MeasureError::NegativeWeight {
                    atom: atom.clone(),
                    weight: weight.clone(),
                });
            }
        }
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut atoms: Vec<Rational> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<Rational> = Vec::with_capacity(pairs.len());
        for (atom, weight) in pairs {
            if weight.is_zero() {
                continue;
            }
            if atoms.last() == Some(&atom) {
                let last = weights.last_mut().unwrap();
                *last += weight;
            } else {
                atoms.push(atom);
                weights.push(weight);
            }
        }
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        Ok(DiscreteMeasure { atoms, weights })
    }

    /// Unit mass at `x`.
    pub fn dirac(x: Rational) -> Self {
        DiscreteMeasure {
            atoms: vec![x],
            weights: vec![Rational::one()],
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn atoms(&self) -> &[Rational] {
        &self.atoms
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Rational, &Rational)> {
        self.atoms.iter().zip(self.weights.iter())
    }

    pub fn total_mass(&self) -> Rational {
        self.weights.iter().sum()
    }

    pub fn is_probability(&self) -> bool {
        self.total_mass() == Rational::one()
    }

    /// Barycenter Σ x·w / Σ w.
    pub fn mean(&self) -> Rational {
        let weighted: Rational = self.iter().map(|(x, w)| x * w).sum();
        weighted / self.total_mass()
    }

    /// Σ (x − k)⁺ · w, the undiscounted call price at strike `k`.
    pub fn call_price(&self, k: &Rational) -> Rational {
        self.iter()
            .filter(|(x, _)| *x > k)
            .map(|(x, w)| (x - k) * w)
            .sum()
    }

    /// Image under x ↦ −x; used to reduce right-monotone constructions to
    /// left-monotone ones.
    pub fn reflect(&self) -> Self {
        let mut atoms: Vec<Rational> = self.atoms.iter().map(|x| -x).collect();
        let mut weights = self.weights.clone();
        atoms.reverse();
        weights.reverse();
        DiscreteMeasure { atoms, weights }
    }

    /// Replace the atom at `index` by the pair (x−d, w/2), (x+d, w/2).
    ///
    /// Mass and mean are unchanged; the result dominates `self` in convex
    /// order, which makes repeated splits a generator of convex-ordered pairs.
    pub fn mean_preserving_split(&self, index: usize, d: &Rational) -> Result<Self, MeasureError> {
        assert!(index < self.len(), "atom index out of range");
        assert!(d.is_positive(), "split distance must be positive");
        let x = &self.atoms[index];
        let half = &self.weights[index] / Rational::from_int(2);
        let mut pairs: Vec<(Rational, Rational)> = Vec::with_capacity(self.len() + 1);
        for (i, (atom, weight)) in self.iter().enumerate() {
            if i == index {
                pairs.push((x - d, half.clone()));
                pairs.push((x + d, half.clone()));
            } else {
                pairs.push((atom.clone(), weight.clone()));
            }
        }
        DiscreteMeasure::new(pairs)
    }
}

/// Call-price curve k ↦ Σ (x − k)⁺ · w of a discrete measure.
///
/// The curve is convex, non-increasing, piecewise linear, and kinked exactly
/// at the atoms; it is evaluated on demand rather than tabulated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallCurve {
    measure: DiscreteMeasure,
}

impl CallCurve {
    pub fn new(measure: DiscreteMeasure) -> Self {
        CallCurve { measure }
    }

    pub fn measure(&self) -> &DiscreteMeasure {
        &self.measure
    }

    pub fn eval(&self, k: &Rational) -> Rational {
        self.measure.call_price(k)
    }
}

/// Outcome of the convex-order test, one flag per condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrderReport {
    pub mass_equal: bool,
    pub mean_equal: bool,
    pub call_dominated: bool,
    /// Conjunction of the three flags; a martingale coupling exists iff true.
    pub ordered: bool,
    /// First strike (in increasing support order) where domination fails.
    pub first_violation: Option<Rational>,
}

/// Tests whether `mu` is dominated by `nu` in convex order.
///
/// Domination of the call curves is checked only on the union of the two
/// supports: the difference of two piecewise-linear convex functions with
/// kinks at the atoms attains its extrema there, and when masses and means
/// agree the difference vanishes off the supports, so support strikes decide
/// global domination.
pub fn check_convex_order(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> OrderReport {
    let mass_equal = mu.total_mass() == nu.total_mass();
    let mean_equal = mu.mean() == nu.mean();

    let mut strikes: Vec<&Rational> = mu.atoms().iter().chain(nu.atoms().iter()).collect();
    strikes.sort();
    strikes.dedup();

    let mut call_dominated = true;
    let mut first_violation = None;
    for k in strikes {
        if mu.call_price(k) > nu.call_price(k) {
            call_dominated = false;
            first_violation = Some(k.clone());
            break;
        }
    }

    OrderReport {
        mass_equal,
        mean_equal,
        call_dominated,
        ordered: mass_equal && mean_equal && call_dominated,
        first_violation,
    }
}
