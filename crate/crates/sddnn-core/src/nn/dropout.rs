//! Inverted input dropout.
//!
//! Components are zeroed independently with the configured probability and the
//! survivors are rescaled by `1/(1-rate)`, so the expected value of every
//! component is preserved and evaluation needs no compensation. Dropout applies
//! to the input layer only, and only during training.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input-layer dropout configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutSpec {
    rate: f64,
}

impl DropoutSpec {
    /// A dropout rate in `[0, 1)`. Rate 0 is the identity transform.
    pub fn new(rate: f64) -> Result<DropoutSpec> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::config(format!(
                "dropout rate must lie in [0, 1), got {rate}"
            )));
        }
        Ok(DropoutSpec { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Masks and rescales an input vector (inverted dropout).
pub fn apply_input_dropout<R: Rng>(input: &[f64], spec: DropoutSpec, rng: &mut R) -> Vec<f64> {
    if spec.rate == 0.0 {
        return input.to_vec();
    }
    let keep_scale = 1.0 / (1.0 - spec.rate);
    input
        .iter()
        .map(|&x| {
            if rng.gen::<f64>() < spec.rate {
                0.0
            } else {
                x * keep_scale
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rate_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let input = vec![0.5, -1.0, 3.25];
        let spec = DropoutSpec::new(0.0).unwrap();
        assert_eq!(apply_input_dropout(&input, spec, &mut rng), input);
    }

    #[test]
    fn rate_one_is_rejected() {
        assert!(DropoutSpec::new(1.0).is_err());
        assert!(DropoutSpec::new(1.5).is_err());
        assert!(DropoutSpec::new(-0.1).is_err());
    }

    #[test]
    fn masked_fraction_concentrates_around_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let input = vec![1.0; 100_000];
        let spec = DropoutSpec::new(0.5).unwrap();
        let out = apply_input_dropout(&input, spec, &mut rng);
        let masked = out.iter().filter(|&&x| x == 0.0).count() as f64 / input.len() as f64;
        assert!(
            (masked - 0.5).abs() < 0.01,
            "masked fraction {masked} strays from 0.5"
        );
    }

    #[test]
    fn zero_input_stays_zero_for_any_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let input = vec![0.0; 64];
        for rate in [0.0, 0.2, 0.5, 0.9] {
            let spec = DropoutSpec::new(rate).unwrap();
            assert!(apply_input_dropout(&input, spec, &mut rng)
                .iter()
                .all(|&x| x == 0.0));
        }
    }

    #[test]
    fn deterministic_given_rng_state() {
        let input: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        let spec = DropoutSpec::new(0.3).unwrap();
        let a = apply_input_dropout(&input, spec, &mut ChaCha8Rng::seed_from_u64(11));
        let b = apply_input_dropout(&input, spec, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
    }

    #[test]
    fn inverted_dropout_preserves_the_mean() {
        // 1e5 trials of a single component; the empirical mean should sit within
        // 2% of the raw value.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = DropoutSpec::new(0.4).unwrap();
        let value = 1.7;
        let trials = 100_000;
        let mut sum = 0.0;
        for _ in 0..trials {
            sum += apply_input_dropout(&[value], spec, &mut rng)[0];
        }
        let mean = sum / trials as f64;
        assert!(
            ((mean - value) / value).abs() < 0.02,
            "empirical mean {mean} deviates from {value}"
        );
    }
}
