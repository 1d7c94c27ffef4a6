use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thbfit::localfit::ScatteredDataset;

use crate::error::Result;

/// Sharp Gaussian peak centred at `(0.3, -0.3)`.
pub fn peak(x: f64, y: f64) -> f64 {
    2.0 / (3.0 * ((10.0 * x - 3.0).powi(2) + (10.0 * y + 3.0).powi(2)).exp())
}

/// `n` uniform samples of [`peak`] on `[-1, 1]^2`.
pub fn peak_samples(n: usize, seed: u64) -> Result<ScatteredDataset<2>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)]).collect();
    let values = points.iter().map(|p| peak(p[0], p[1])).collect();
    Ok(ScatteredDataset::new(points, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_height_and_decay() {
        assert!((peak(0.3, -0.3) - 2.0 / 3.0).abs() < 1e-15);
        assert!(peak(-1.0, 1.0) < 1e-100);
        let d = peak_samples(100, 7).unwrap();
        assert_eq!(d, peak_samples(100, 7).unwrap());
        assert!(d.points().iter().all(|p| p.iter().all(|v| v.abs() <= 1.0)));
    }
}
