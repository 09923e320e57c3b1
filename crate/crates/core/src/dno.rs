//! Dirichlet-Neumann operator `G(f)g` on the grid.
//!
//! With `theta = (1/2 I - K*[f])^{-1} g'` the operator is split as
//!
//! ```text
//! G(f)g = d/dx [ (1/4pi) int ln(1 + sinh^2(df/2)/sin^2(h/2)) theta(x') dx' ] + (1/2) H theta
//! ```
//!
//! The first integrand is continuous with diagonal value `ln(1 + f'^2)`, so the
//! trapezoid rule applies directly; the whole singularity sits in the Hilbert
//! transform, which is exact in Fourier space.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::bie::{solve_theta_curve, DensitySolution, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::kernels::{smooth_log_integrand, Curve};
use crate::spectral::{abs_derivative, dft_derivative, hilbert_transform, GridFunction};
use crate::FaultInjection;

/// Values of `G(f)g` with the density used to build them.
#[derive(Debug, Clone)]
pub struct DnoResult {
    pub gf: GridFunction,
    pub theta_used: DensitySolution,
    /// `dx * sum(g * G(f)g)`.
    pub pairing: f64,
}

pub fn apply_dno(f: &GridFunction, g: &GridFunction) -> Result<DnoResult> {
    apply_dno_curve(&Curve::new(f)?, g, DEFAULT_TOL, FaultInjection::default())
}

/// Like [`apply_dno`] with an explicit absolute tolerance for the density solve.
pub fn apply_dno_with_tol(f: &GridFunction, g: &GridFunction, tol: f64) -> Result<DnoResult> {
    apply_dno_curve(&Curve::new(f)?, g, tol, FaultInjection::default())
}

/// Residual tolerance scaled to the size of the right-hand side.
pub(crate) fn scaled_tol(tol: f64, rhs: &GridFunction) -> f64 {
    let l2 = rhs.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    tol * l2.max(1.0)
}

pub(crate) fn apply_dno_curve(
    curve: &Curve,
    g: &GridFunction,
    tol: f64,
    faults: FaultInjection,
) -> Result<DnoResult> {
    let grid = curve.grid();
    if g.grid() != grid {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: g.len(),
        });
    }
    let dg = dft_derivative(g)?;
    let theta_used = solve_theta_curve(curve, &dg, scaled_tol(tol, &dg), faults)?;
    let theta = theta_used.theta.values();
    let n = grid.len();
    let w = grid.spacing() / (4.0 * PI);

    let smooth: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for (j, t) in theta.iter().enumerate() {
                acc += smooth_log_integrand(curve, i, j)?.value * t;
            }
            Ok(w * acc)
        })
        .collect::<Result<_>>()?;
    let smooth = GridFunction::new(grid, smooth).map_err(|_| Error::NonFinite {
        stage: "smooth log quadrature",
        index: 0,
    })?;

    let d_smooth = dft_derivative(&smooth)?;
    let mut h_theta = hilbert_transform(&theta_used.theta)?;
    if faults.flip_hilbert_sign {
        h_theta = h_theta.map(|v| -v)?;
    }
    let gf = d_smooth.zip_map(&h_theta, |a, b| a + 0.5 * b)?;
    if let Some(index) = gf.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            stage: "dirichlet-neumann output",
            index,
        });
    }
    let pairing = g.pairing(&gf);
    Ok(DnoResult {
        gf,
        theta_used,
        pairing,
    })
}

/// `G(0)g = |D|g`.
pub fn dno_flat(g: &GridFunction) -> Result<GridFunction> {
    abs_derivative(g)
}

/// Checks `G(f + c)(g + c) = G(f)g` to `1e-8` in the sup norm.
pub fn dno_vertical_shift_invariance(f: &GridFunction, g: &GridFunction, c: f64) -> Result<bool> {
    if !c.is_finite() {
        return Err(Error::InvalidArgument(format!("shift must be finite, got {c}")));
    }
    let base = apply_dno(f, g)?;
    let shifted = apply_dno(&f.add_scalar(c)?, &g.add_scalar(c)?)?;
    Ok(shifted.gf.max_abs_diff(&base.gf) <= 1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::PeriodicGrid;

    fn gf(n: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(PeriodicGrid::new(n).unwrap(), f).unwrap()
    }

    #[test]
    fn flat_interface_reduces_to_abs_derivative() {
        let zero = gf(256, |_| 0.0);
        let g = gf(256, |x| (3.0 * x).cos());
        let r = apply_dno(&zero, &g).unwrap();
        let expect = gf(256, |x| 3.0 * (3.0 * x).cos());
        assert!(r.gf.max_abs_diff(&expect) <= 1e-8);
        assert!(r.gf.max_abs_diff(&dno_flat(&g).unwrap()) <= 1e-8);
    }

    #[test]
    fn constant_data_gives_zero() {
        let r = apply_dno(&gf(64, |x| 0.4 * x.sin()), &gf(64, |_| 2.0)).unwrap();
        assert!(r.gf.sup_norm() < 1e-14);
        assert_eq!(r.pairing, 0.0);
    }

    #[test]
    fn flat_fast_path_modes() {
        for k in 1..=5 {
            let kf = k as f64;
            let out = dno_flat(&gf(64, |x| (kf * x).cos())).unwrap();
            assert!(out.max_abs_diff(&gf(64, |x| kf * (kf * x).cos())) < 1e-12);
        }
        assert!(dno_flat(&gf(64, |_| 1.5)).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn translation_equivariance() {
        let f = gf(64, |x| 0.5 * x.cos() + 0.1 * (2.0 * x).sin());
        let g = gf(64, |x| (x + 0.3).sin());
        let base = apply_dno(&f, &g).unwrap();
        for s in [1isize, 5, -7] {
            let moved = apply_dno(&f.shift(s), &g.shift(s)).unwrap();
            assert!(moved.gf.max_abs_diff(&base.gf.shift(s)) < 1e-11);
        }
    }

    #[test]
    fn vertical_shift_invariance_cases() {
        let f = gf(128, |x| 0.3 * x.sin());
        assert!(dno_vertical_shift_invariance(&f, &f, 2.5).unwrap());
        assert!(dno_vertical_shift_invariance(&f, &f, 0.0).unwrap());
        let zero = gf(128, |_| 0.0);
        assert!(dno_vertical_shift_invariance(&zero, &gf(128, f64::cos), -1.0).unwrap());
        assert!(dno_vertical_shift_invariance(&f, &f, f64::NAN).is_err());
    }

    #[test]
    fn output_mean_and_positivity() {
        let f = gf(128, |x| 0.9 * x.cos() + 0.2 * (3.0 * x).sin());
        let r = apply_dno(&f, &f).unwrap();
        assert!(r.gf.mean().abs() < 1e-8);
        assert!(r.pairing >= -1e-8 * f.l2_norm().powi(2));
        assert!(r.pairing > 0.0);
    }
}
