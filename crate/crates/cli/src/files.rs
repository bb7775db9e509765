//! On-disk JSON formats and their loaders.
//!
//! All numeric fields are exact rationals written as strings ("3/10", "0.25",
//! "-7"). Measures are canonicalized on load (atoms sorted, duplicates
//! merged); explicit payoff grids require the atom lists to be written in
//! canonical form already, since the grid rows and columns are matched to
//! them positionally.

use std::fs;
use std::path::Path;

use mot_core::measure::DiscreteMeasure;
use mot_core::payoff::{grid_from_builtin, PayoffGrid};
use mot_core::rational::Rational;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub mu: Vec<MuAtom>,
    pub nu: Vec<NuAtom>,
    pub payoff: PayoffSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuAtom {
    pub x: Rational,
    pub w: Rational,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuAtom {
    pub y: Rational,
    pub w: Rational,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffSpec {
    Builtin {
        name: String,
        #[serde(default)]
        params: Vec<Rational>,
    },
    /// Explicit value matrix, row j = mu atom j, column i = nu atom i.
    Grid { values: Vec<Vec<Rational>> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuoteFile {
    pub maturities: Vec<MaturityQuotes>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaturityQuotes {
    pub label: String,
    pub forward: Rational,
    pub quotes: Vec<QuotePair>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuotePair {
    pub strike: Rational,
    pub price: Rational,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub q: Vec<Vec<Rational>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HedgeFile {
    pub phi: Vec<Rational>,
    pub psi: Vec<Rational>,
    pub h: Vec<Rational>,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("cannot parse {}: {e}", path.display())))
}

/// Loads and validates an instance: canonical probability-measure candidates
/// plus the payoff evaluated on their supports.
pub fn load_instance(
    path: &Path,
) -> Result<(DiscreteMeasure, DiscreteMeasure, PayoffGrid), CliError> {
    let file: InstanceFile = read_json(path)?;
    let mu_pairs: Vec<(Rational, Rational)> =
        file.mu.iter().map(|a| (a.x.clone(), a.w.clone())).collect();
    let nu_pairs: Vec<(Rational, Rational)> =
        file.nu.iter().map(|a| (a.y.clone(), a.w.clone())).collect();
    let mu = DiscreteMeasure::new(mu_pairs.iter().cloned())
        .map_err(|e| CliError::Usage(format!("invalid mu in {}: {e}", path.display())))?;
    let nu = DiscreteMeasure::new(nu_pairs.iter().cloned())
        .map_err(|e| CliError::Usage(format!("invalid nu in {}: {e}", path.display())))?;

    let grid = match file.payoff {
        PayoffSpec::Builtin { name, params } => {
            grid_from_builtin(&name, &params, mu.atoms(), nu.atoms())
                .map_err(|e| CliError::Usage(format!("invalid payoff in {}: {e}", path.display())))?
        }
        PayoffSpec::Grid { values } => {
            // Grid rows and columns are positional, so the atom lists in the
            // file must already be in canonical form or the matrix would be
            // silently misaligned.
            let mu_canonical = mu_pairs
                .iter()
                .map(|(x, _)| x)
                .eq(mu.atoms().iter());
            let nu_canonical = nu_pairs
                .iter()
                .map(|(y, _)| y)
                .eq(nu.atoms().iter());
            if !mu_canonical || !nu_canonical {
                return Err(CliError::Usage(format!(
                    "grid payoff in {} requires mu and nu atoms to be listed \
                     sorted, without duplicates or zero weights",
                    path.display()
                )));
            }
            PayoffGrid::new(values, mu.atoms().to_vec(), nu.atoms().to_vec())
                .map_err(|e| CliError::Usage(format!("invalid payoff in {}: {e}", path.display())))?
        }
    };
    Ok((mu, nu, grid))
}
