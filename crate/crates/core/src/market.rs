//! Recovering a marginal law from call prices.
//!
//! A finite strip of call quotes pins a discrete measure supported on the
//! quoted strikes: the jump of the price curve's slope at a strike is the
//! mass sitting there. The slope left of the lowest strike is −1 (the whole
//! distribution lies above it) and right of the highest strike it is 0,
//! provided the curve actually starts at the forward discount and ends
//! worthless; otherwise part of the distribution is invisible to the strip
//! and extraction refuses.

use crate::measure::DiscreteMeasure;
use crate::rational::Rational;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarketError {
    #[error("no quotes supplied")]
    Empty,
    #[error("duplicate strike {strike}")]
    DuplicateStrike { strike: Rational },
    #[error("negative call price at strike {strike}")]
    NegativePrice { strike: Rational },
    #[error("call price increases at strike {strike}")]
    IncreasingPrice { strike: Rational },
    #[error("call price drops faster than one-for-one at strike {strike}")]
    SlopeBelowMinusOne { strike: Rational },
    #[error("call prices are not convex at strike {strike}")]
    ConvexityViolation { strike: Rational },
    #[error("quotes do not pin the distribution: {detail}")]
    IncompleteCurve { detail: String },
    #[error("measure must have total mass 1 to be quoted")]
    NotProbability,
}

/// A statically arbitrage-free strip of call quotes at one maturity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallQuoteSet {
    /// (strike, price) pairs, strictly increasing in strike.
    quotes: Vec<(Rational, Rational)>,
    forward: Rational,
}

impl CallQuoteSet {
    /// Validates the strip: positive prices that decrease no faster than
    /// one-for-one, along a convex curve.
    pub fn new(
        forward: Rational,
        quotes: impl IntoIterator<Item = (Rational, Rational)>,
    ) -> Result<Self, MarketError> {
        let mut quotes: Vec<(Rational, Rational)> = quotes.into_iter().collect();
        if quotes.is_empty() {
            return Err(MarketError::Empty);
        }
        quotes.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in quotes.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(MarketError::DuplicateStrike {
                    strike: pair[0].0.clone(),
                });
            }
        }
        for (strike, price) in &quotes {
            if price.is_negative() {
                return Err(MarketError::NegativePrice {
                    strike: strike.clone(),
                });
            }
        }
        let slopes = slopes(&quotes);
        if let Some(first) = slopes.first() {
            if *first < -Rational::one() {
                return Err(MarketError::SlopeBelowMinusOne {
                    strike: quotes[1].0.clone(),
                });
            }
        }
        for (idx, slope) in slopes.iter().enumerate() {
            if slope.is_positive() {
                return Err(MarketError::IncreasingPrice {
                    strike: quotes[idx + 1].0.clone(),
                });
            }
        }
        for (idx, pair) in slopes.windows(2).enumerate() {
            if pair[1] < pair[0] {
                return Err(MarketError::ConvexityViolation {
                    strike: quotes[idx + 1].0.clone(),
                });
            }
        }
        Ok(CallQuoteSet { quotes, forward })
    }

    pub fn quotes(&self) -> &[(Rational, Rational)] {
        &self.quotes
    }

    pub fn forward(&self) -> &Rational {
        &self.forward
    }
}

fn slopes(quotes: &[(Rational, Rational)]) -> Vec<Rational> {
    quotes
        .windows(2)
        .map(|pair| (&pair[1].1 - &pair[0].1) / (&pair[1].0 - &pair[0].0))
        .collect()
}

/// Reads the distribution off the quote strip as the slope jumps of the
/// price curve. Fails if the strip does not already price the forward at its
/// low end and decay to zero at its high end, since mass outside the quoted
/// strikes would then be undetermined.
pub fn extract_marginal(quotes: &CallQuoteSet) -> Result<DiscreteMeasure, MarketError> {
    let pairs = quotes.quotes();
    let (first_strike, first_price) = &pairs[0];
    let expected = quotes.forward() - first_strike;
    if *first_price != expected {
        return Err(MarketError::IncompleteCurve {
            detail: format!(
                "price {first_price} at the lowest strike {first_strike} differs from \
                 forward − strike = {expected}, so mass below the strip is unresolved"
            ),
        });
    }
    let (last_strike, last_price) = &pairs[pairs.len() - 1];
    if !last_price.is_zero() {
        return Err(MarketError::IncompleteCurve {
            detail: format!(
                "price {last_price} at the highest strike {last_strike} is nonzero, \
                 so mass above the strip is unresolved"
            ),
        });
    }

    let interior = slopes(pairs);
    let mut atoms = Vec::with_capacity(pairs.len());
    for (idx, (strike, _)) in pairs.iter().enumerate() {
        let left = if idx == 0 {
            -Rational::one()
        } else {
            interior[idx - 1].clone()
        };
        let right = if idx == pairs.len() - 1 {
            Rational::zero()
        } else {
            interior[idx].clone()
        };
        let weight = right - left;
        if weight.is_positive() {
            atoms.push((strike.clone(), weight));
        }
    }
    let measure = DiscreteMeasure::new(atoms).map_err(|_| MarketError::IncompleteCurve {
        detail: "slope jumps carry no mass".to_string(),
    })?;
    debug_assert!(measure.is_probability());
    debug_assert_eq!(&measure.mean(), quotes.forward());
    Ok(measure)
}

/// Quotes a probability measure back out as a call strip: one strike per
/// atom plus one strike below the support so the strip determines the full
/// distribution.
pub fn quotes_from_measure(measure: &DiscreteMeasure) -> Result<CallQuoteSet, MarketError> {
    if !measure.is_probability() {
        return Err(MarketError::NotProbability);
    }
    let mut strikes = vec![&measure.atoms()[0] - Rational::one()];
    strikes.extend(measure.atoms().iter().cloned());
    let quotes: Vec<(Rational, Rational)> = strikes
        .into_iter()
        .map(|k| {
            let price = measure.call_price(&k);
            (k, price)
        })
        .collect();
    CallQuoteSet::new(measure.mean(), quotes)
}
