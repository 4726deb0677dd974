//! Attribution by resetting first-layer weight rows to their untrained
//! values.
//!
//! A feature's score is the signed output contrast between the trained
//! network and a copy in which part of the first weight matrix is replaced
//! by its initialization: the feature's own row for
//! [`weight_reset_scores`], every other row for
//! [`complement_reset_scores`]. Because feature `i` only enters the network
//! through row `i`, each substitution shifts the first pre-activation by a
//! rank-1 update, so one base pass plus one deep pass per feature covers the
//! whole input without rebuilding any network.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::{indicator_contrast, validate_inputs};
use crate::error::{Error, Result};
use crate::nn::{affine_into, ModelPair};

/// Sign convention for [`complement_reset_scores`].
///
/// The complement contrast tends to come out inverted relative to the
/// single-row reset, so benchmarks evaluate both readings side by side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Use the contrast exactly as computed.
    #[default]
    AsWritten,
    /// Flip the sign of every score.
    Negated,
}

impl Orientation {
    /// Both conventions, in report order.
    pub const ALL: [Orientation; 2] = [Orientation::AsWritten, Orientation::Negated];

    /// The stable command-line and report key for this convention.
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::AsWritten => "as_written",
            Orientation::Negated => "negated",
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Orientation::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown orientation {s:?} (expected as_written or negated)"
                ))
            })
    }
}

/// Scores every feature by resetting its own first-layer weight row.
///
/// Feature `i` gets the signed contrast between the trained outputs and the
/// outputs after `W[0]` row `i` reverts to its untrained value, with the
/// target class counted positively and all others negatively. A feature
/// whose input value is exactly zero cannot change the substituted pass and
/// scores exactly `0.0`.
pub fn weight_reset_scores(
    pair: &ModelPair,
    x: ArrayView1<f64>,
    target: usize,
) -> Result<Array1<f64>> {
    pair.check_consistent()?;
    validate_inputs(&pair.trained, x, target)?;
    let owned;
    let xs: &[f64] = match x.as_slice() {
        Some(s) => s,
        None => {
            owned = x.to_vec();
            &owned
        }
    };
    let net = &pair.trained;
    let mut scratch = net.scratch();
    let base = net.first_preactivation(xs);
    let p = net.probabilities_from_first(&base, &mut scratch).to_vec();

    let trained_w = &net.weights()[0];
    let initial_w = &pair.initial.weights()[0];
    let mut shifted = vec![0.0; base.len()];
    let mut scores = Array1::zeros(xs.len());
    for (i, &xi) in xs.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let trained_row = trained_w.row(i);
        let trained_row = trained_row.to_slice().expect("weights are row-major");
        let initial_row = initial_w.row(i);
        let initial_row = initial_row.to_slice().expect("weights are row-major");
        for (((s, &b), &wt), &w0) in shifted
            .iter_mut()
            .zip(&base)
            .zip(trained_row)
            .zip(initial_row)
        {
            *s = b + xi * (w0 - wt);
        }
        let perturbed = net.probabilities_from_first(&shifted, &mut scratch);
        scores[i] = indicator_contrast(target, &p, perturbed);
    }
    Ok(scores)
}

/// Scores every feature by resetting all first-layer rows except its own.
///
/// Feature `i` gets the signed contrast between the trained outputs and the
/// outputs of a network whose first weight matrix is untrained everywhere
/// but in row `i`. Starting from the fully reset pre-activation, keeping
/// row `i` trained is again a rank-1 shift, so the sweep costs one deep pass
/// per feature. `orientation` optionally flips the sign of every score.
pub fn complement_reset_scores(
    pair: &ModelPair,
    x: ArrayView1<f64>,
    target: usize,
    orientation: Orientation,
) -> Result<Array1<f64>> {
    pair.check_consistent()?;
    validate_inputs(&pair.trained, x, target)?;
    let owned;
    let xs: &[f64] = match x.as_slice() {
        Some(s) => s,
        None => {
            owned = x.to_vec();
            &owned
        }
    };
    let net = &pair.trained;
    let mut scratch = net.scratch();
    let p = {
        let base = net.first_preactivation(xs);
        net.probabilities_from_first(&base, &mut scratch).to_vec()
    };

    let trained_w = &net.weights()[0];
    let initial_w = &pair.initial.weights()[0];
    let mut reset_base = vec![0.0; net.specs()[0].out_dim];
    affine_into(initial_w, &net.biases()[0], xs, &mut reset_base);
    let all_reset_score = {
        let fully_reset = net.probabilities_from_first(&reset_base, &mut scratch);
        indicator_contrast(target, &p, fully_reset)
    };

    let sign = match orientation {
        Orientation::AsWritten => 1.0,
        Orientation::Negated => -1.0,
    };
    let mut shifted = vec![0.0; reset_base.len()];
    let mut scores = Array1::zeros(xs.len());
    for (i, &xi) in xs.iter().enumerate() {
        if xi == 0.0 {
            scores[i] = sign * all_reset_score;
            continue;
        }
        let trained_row = trained_w.row(i);
        let trained_row = trained_row.to_slice().expect("weights are row-major");
        let initial_row = initial_w.row(i);
        let initial_row = initial_row.to_slice().expect("weights are row-major");
        for (((s, &b), &wt), &w0) in shifted
            .iter_mut()
            .zip(&reset_base)
            .zip(trained_row)
            .zip(initial_row)
        {
            *s = b + xi * (wt - w0);
        }
        let perturbed = net.probabilities_from_first(&shifted, &mut scratch);
        scores[i] = sign * indicator_contrast(target, &p, perturbed);
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{
        init_network, substitute_input_weights, Activation, LayerSpec, PairMetadata,
        SubstitutionMode,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pair(in_dim: usize, seed: u64) -> ModelPair {
        let specs = vec![
            LayerSpec::new(in_dim, 6, Activation::Relu),
            LayerSpec::new(6, 4, Activation::Softmax),
        ];
        let initial = init_network(&specs, seed).unwrap();
        let trained = init_network(&specs, seed ^ 0x5eed).unwrap();
        let trained = crate::nn::Network::from_parts(
            specs,
            trained.weights().to_vec(),
            vec![
                ndarray::Array1::from_elem(6, 0.03),
                ndarray::Array1::from_elem(4, -0.02),
            ],
        )
        .unwrap();
        ModelPair::new(trained, initial, seed, demo_metadata()).unwrap()
    }

    fn demo_metadata() -> PairMetadata {
        PairMetadata {
            dataset: "demo".into(),
            epochs: 0,
            test_accuracy: 0.0,
        }
    }

    fn random_input(n: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
        Array1::from_iter((0..n).map(|_| {
            if rng.random::<f64>() < 0.25 {
                0.0
            } else {
                rng.random::<f64>()
            }
        }))
    }

    /// Scores recomputed through explicit row substitution and two full
    /// forward passes, with no shared intermediate state.
    fn naive_reset_score(pair: &ModelPair, x: ArrayView1<f64>, target: usize, i: usize) -> f64 {
        let substituted =
            substitute_input_weights(pair, &[i], SubstitutionMode::ResetListed).unwrap();
        let p = pair.trained.probabilities(x).unwrap();
        let q = substituted.probabilities(x).unwrap();
        indicator_contrast(target, p.as_slice().unwrap(), q.as_slice().unwrap())
    }

    fn naive_complement_score(
        pair: &ModelPair,
        x: ArrayView1<f64>,
        target: usize,
        i: usize,
    ) -> f64 {
        let substituted =
            substitute_input_weights(pair, &[i], SubstitutionMode::ResetComplement).unwrap();
        let p = pair.trained.probabilities(x).unwrap();
        let q = substituted.probabilities(x).unwrap();
        indicator_contrast(target, p.as_slice().unwrap(), q.as_slice().unwrap())
    }

    #[test]
    fn rank_one_sweep_matches_explicit_substitution_across_many_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for seed in 0..50u64 {
            let pair = random_pair(5, seed);
            let x = random_input(5, &mut rng);
            let target = (seed % 4) as usize;
            let fast = weight_reset_scores(&pair, x.view(), target).unwrap();
            for i in 0..5 {
                let slow = naive_reset_score(&pair, x.view(), target, i);
                assert!(
                    (fast[i] - slow).abs() <= 1e-10,
                    "seed {seed} feature {i}: fast {} vs naive {slow}",
                    fast[i]
                );
                assert!(fast[i].abs() <= 2.0 + 1e-12);
            }
        }
    }

    #[test]
    fn complement_sweep_matches_explicit_substitution_across_many_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for seed in 0..50u64 {
            let pair = random_pair(5, seed);
            let x = random_input(5, &mut rng);
            let target = (seed % 4) as usize;
            let fast =
                complement_reset_scores(&pair, x.view(), target, Orientation::AsWritten).unwrap();
            for i in 0..5 {
                let slow = naive_complement_score(&pair, x.view(), target, i);
                assert!(
                    (fast[i] - slow).abs() <= 1e-10,
                    "seed {seed} feature {i}: fast {} vs naive {slow}",
                    fast[i]
                );
            }
        }
    }

    #[test]
    fn score_equals_twice_the_target_probability_drop() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for seed in 100..110u64 {
            let pair = random_pair(6, seed);
            let x = random_input(6, &mut rng);
            let target = (seed % 4) as usize;
            let scores = weight_reset_scores(&pair, x.view(), target).unwrap();
            let p = pair.trained.probabilities(x.view()).unwrap();
            for i in 0..6 {
                let substituted =
                    substitute_input_weights(&pair, &[i], SubstitutionMode::ResetListed).unwrap();
                let q = substituted.probabilities(x.view()).unwrap();
                let twice_drop = 2.0 * (p[target] - q[target]);
                assert!(
                    (scores[i] - twice_drop).abs() <= 1e-12,
                    "seed {seed} feature {i}: {} vs {twice_drop}",
                    scores[i]
                );
            }
        }
    }

    #[test]
    fn untrained_pair_scores_exactly_zero_everywhere() {
        let specs = vec![
            LayerSpec::new(5, 6, Activation::Relu),
            LayerSpec::new(6, 3, Activation::Softmax),
        ];
        let net = init_network(&specs, 21).unwrap();
        let pair = ModelPair::new(net.clone(), net, 21, demo_metadata()).unwrap();
        let x = ndarray::array![0.4, -0.8, 0.0, 1.0, 0.3];
        let scores = weight_reset_scores(&pair, x.view(), 1).unwrap();
        for &s in &scores {
            assert!(s == 0.0, "expected exact zero, got {s}");
        }
    }

    #[test]
    fn zero_valued_features_score_exactly_zero() {
        let pair = random_pair(5, 77);
        let x = ndarray::array![0.5, 0.0, 0.9, 0.0, 0.2];
        let scores = weight_reset_scores(&pair, x.view(), 2).unwrap();
        assert!(scores[1] == 0.0);
        assert!(scores[3] == 0.0);
        assert!(scores[0] != 0.0);
    }

    #[test]
    fn negated_orientation_flips_every_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let pair = random_pair(5, 3);
        let x = random_input(5, &mut rng);
        let plain =
            complement_reset_scores(&pair, x.view(), 1, Orientation::AsWritten).unwrap();
        let flipped =
            complement_reset_scores(&pair, x.view(), 1, Orientation::Negated).unwrap();
        for i in 0..5 {
            assert_eq!(flipped[i], -plain[i]);
        }
    }

    #[test]
    fn orientation_names_round_trip() {
        for o in Orientation::ALL {
            assert_eq!(o.as_str().parse::<Orientation>().unwrap(), o);
        }
        assert!("upside_down".parse::<Orientation>().is_err());
    }

    #[test]
    fn non_contiguous_input_views_are_accepted() {
        let pair = random_pair(5, 13);
        let wide = ndarray::Array2::from_shape_fn((5, 2), |(i, j)| 0.1 * i as f64 + j as f64);
        let column = wide.column(1);
        assert!(column.as_slice().is_none());
        let scores = weight_reset_scores(&pair, column, 0).unwrap();
        let owned = column.to_owned();
        let again = weight_reset_scores(&pair, owned.view(), 0).unwrap();
        assert_eq!(scores, again);
    }
}
