//! Path-loss channel gain and Shannon capacity, generic over the float type.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dimensionless gain `beta0 * distance^-theta`.
pub fn path_loss_gain<T: Scalar>(beta0: T, theta: T, distance: T) -> Result<T> {
    if !(distance > T::zero()) {
        return Err(Error::NonPositiveDistance(distance.to_f64_lossy()));
    }
    Ok(beta0 * distance.powf(-theta))
}

/// Shannon capacity in bit/s of a link with the given gain.
pub fn shannon_rate<T: Scalar>(bandwidth: T, tx_power: T, gain: T, noise_power: T) -> T {
    let snr = tx_power * gain / noise_power;
    bandwidth * snr.ln_1p() / T::lit(std::f64::consts::LN_2)
}

/// Signal-to-noise ratio of the same link.
pub fn snr<T: Scalar>(tx_power: T, gain: T, noise_power: T) -> T {
    tx_power * gain / noise_power
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gain_in_both_precisions() {
        assert_relative_eq!(path_loss_gain(1e-5f64, 4.0, 10.0).unwrap(), 1e-9, max_relative = 1e-12);
        assert_relative_eq!(path_loss_gain(1e-5f32, 4.0, 10.0).unwrap(), 1e-9, max_relative = 1e-6);
    }

    #[test]
    fn gain_rejects_non_positive() {
        assert!(path_loss_gain(1e-5f64, 4.0, 0.0).is_err());
        assert!(path_loss_gain(1e-5f64, 4.0, -3.0).is_err());
        assert!(path_loss_gain(1e-5f64, 4.0, f64::NAN).is_err());
    }

    #[test]
    fn rate_matches_log2_form() {
        let r: f64 = shannon_rate(2e7, 0.1, 1e-9, 1e-13);
        assert_relative_eq!(r, 2e7 * 1001f64.log2(), max_relative = 1e-12);
        let r32: f32 = shannon_rate(2e7, 0.1, 1e-9, 1e-13);
        assert_relative_eq!(r32 as f64, r, max_relative = 1e-5);
    }
}
