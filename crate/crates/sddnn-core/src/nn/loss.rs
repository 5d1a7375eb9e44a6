//! Mean-squared-error objective.

use crate::error::{Error, Result};

/// Mean of squared componentwise differences.
pub fn mse(prediction: &[f64], target: &[f64]) -> Result<f64> {
    if prediction.len() != target.len() {
        return Err(Error::input(format!(
            "prediction has {} components, target has {}",
            prediction.len(),
            target.len()
        )));
    }
    if prediction.is_empty() {
        return Err(Error::input("cannot take the loss of empty vectors"));
    }
    let sum: f64 = prediction
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / prediction.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_have_zero_loss() {
        assert_eq!(mse(&[0.5], &[0.5]).unwrap(), 0.0);
    }

    #[test]
    fn unit_error() {
        assert_eq!(mse(&[1.0], &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn hand_arithmetic_example() {
        // (0.04 + 0.36) / 2 = 0.2
        let loss = mse(&[0.2, 0.4], &[0.0, 1.0]).unwrap();
        assert!((loss - 0.2).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_an_input_error() {
        assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(Error::Input(_))));
    }
}
