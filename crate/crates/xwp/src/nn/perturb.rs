//! First-layer weight substitution between a trained network and its
//! untrained initialization.

use serde::{Deserialize, Serialize};

use super::{ModelPair, Network};
use crate::error::{Error, Result};

/// Which side of a feature selection has its first-layer rows reset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubstitutionMode {
    /// Reset the rows of the listed features.
    ResetListed,
    /// Reset the rows of every feature except the listed ones.
    ResetComplement,
}

/// Returns a copy of the trained network in which the first-layer weight
/// rows of the selected input features are replaced by their untrained
/// values. Feature `i` owns exactly row `i` of the first weight matrix;
/// biases and all deeper layers stay trained. Listing a feature twice is
/// the same as listing it once.
pub fn substitute_input_weights(
    pair: &ModelPair,
    features: &[usize],
    mode: SubstitutionMode,
) -> Result<Network> {
    pair.check_consistent()?;
    let n0 = pair.trained.input_dim();
    let mut listed = vec![false; n0];
    for &f in features {
        if f >= n0 {
            return Err(Error::Config(format!(
                "feature {f} out of range for {n0} inputs"
            )));
        }
        listed[f] = true;
    }
    let mut net = pair.trained.clone();
    for (i, &is_listed) in listed.iter().enumerate() {
        let reset = match mode {
            SubstitutionMode::ResetListed => is_listed,
            SubstitutionMode::ResetComplement => !is_listed,
        };
        if reset {
            net.weights[0]
                .row_mut(i)
                .assign(&pair.initial.weights[0].row(i));
        }
    }
    Ok(net)
}
