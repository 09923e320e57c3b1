//! Named initial interface profiles.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{GridFunction, PeriodicGrid};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Flat { level: f64 },
    Cosine { amplitude: f64, mode: u32 },
    Sine { amplitude: f64, mode: u32 },
    /// Symmetric tent `amplitude * (pi/2 - |x|)`, slope `amplitude`.
    Kink { amplitude: f64 },
    /// Periodic triangle rising on `[-pi, peak)` and falling on `[peak, pi)`.
    Sawtooth { amplitude: f64, peak: f64 },
    /// Sum of `a cos(k x + phase)` terms.
    Multimode { terms: Vec<(u32, f64, f64)> },
    /// Random Fourier series with `modes` terms and coefficients decaying like `k^-2`.
    Random { seed: u64, modes: u32, amplitude: f64 },
    Samples(Vec<f64>),
}

impl InitialData {
    pub fn sample(&self, grid: PeriodicGrid) -> Result<GridFunction> {
        match self {
            InitialData::Flat { level } => GridFunction::constant(grid, *level),
            InitialData::Cosine { amplitude, mode } => {
                let (a, k) = (*amplitude, *mode as f64);
                GridFunction::from_fn(grid, |x| a * (k * x).cos())
            }
            InitialData::Sine { amplitude, mode } => {
                let (a, k) = (*amplitude, *mode as f64);
                GridFunction::from_fn(grid, |x| a * (k * x).sin())
            }
            InitialData::Kink { amplitude } => {
                let a = *amplitude;
                GridFunction::from_fn(grid, |x| a * (0.5 * PI - x.abs()))
            }
            InitialData::Sawtooth { amplitude, peak } => {
                let p = *peak;
                if !(p > -PI && p < PI) {
                    return Err(Error::InvalidArgument(format!(
                        "sawtooth peak must lie in (-pi, pi), got {p}"
                    )));
                }
                let a = *amplitude;
                let rise = p + PI;
                let fall = PI - p;
                GridFunction::from_fn(grid, |x| {
                    let v = if x < p { (x + PI) / rise } else { (PI - x) / fall };
                    a * (v - 0.5)
                })
            }
            InitialData::Multimode { terms } => GridFunction::from_fn(grid, |x| {
                terms
                    .iter()
                    .map(|&(k, a, ph)| a * (k as f64 * x + ph).cos())
                    .sum()
            }),
            InitialData::Random {
                seed,
                modes,
                amplitude,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let terms: Vec<(f64, f64, f64)> = (1..=*modes)
                    .map(|k| {
                        let k = k as f64;
                        let a = rng.random_range(-1.0..1.0) / (k * k);
                        let ph = rng.random_range(0.0..2.0 * PI);
                        (k, a, ph)
                    })
                    .collect();
                let amp = *amplitude;
                GridFunction::from_fn(grid, |x| {
                    amp * terms.iter().map(|&(k, a, ph)| a * (k * x + ph).cos()).sum::<f64>()
                })
            }
            InitialData::Samples(v) => GridFunction::new(grid, v.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    #[test]
    fn kink_has_unit_slope_and_zero_mean() {
        let f = InitialData::Kink { amplitude: 1.0 }.sample(grid(256)).unwrap();
        assert!((f.lip_seminorm() - 1.0).abs() < 1e-12);
        assert!(f.mean().abs() < 1e-12);
        assert!((f.max() - 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn sawtooth_slopes() {
        let f = InitialData::Sawtooth { amplitude: 1.0, peak: PI / 2.0 }
            .sample(grid(256))
            .unwrap();
        // falling side is three times steeper than the rising side
        assert!((f.lip_seminorm() - 2.0 / PI).abs() < 1e-12);
        assert!((f.max() - 0.5).abs() < 1e-12);
        assert!(InitialData::Sawtooth { amplitude: 1.0, peak: PI }.sample(grid(16)).is_err());
    }

    #[test]
    fn random_profile_is_reproducible() {
        let d = InitialData::Random { seed: 11, modes: 6, amplitude: 0.3 };
        let a = d.sample(grid(64)).unwrap();
        let b = d.sample(grid(64)).unwrap();
        assert_eq!(a, b);
        let c = InitialData::Random { seed: 12, modes: 6, amplitude: 0.3 }.sample(grid(64)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn samples_must_match_grid() {
        assert!(InitialData::Samples(vec![0.0; 10]).sample(grid(16)).is_err());
        assert!(InitialData::Samples(vec![1.0; 16]).sample(grid(16)).is_ok());
    }
}
