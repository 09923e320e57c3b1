//! Periodic Newtonian kernel and the boundary integrands of `K`, `K*` and the
//! Dirichlet-Neumann operator, including their removable diagonal limits.
//!
//! All denominators use `cosh a - cos b = 2 sinh^2(a/2) + 2 sin^2(b/2)`, which
//! avoids cancellation near the diagonal. When `|f(x) - f(x')| > 30` the
//! hyperbolic quotients are rescaled by `2 exp(-|df|)` to avoid overflow.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{dft_derivative, dft_second_derivative, GridFunction, PeriodicGrid};

const FOUR_PI_INV: f64 = 1.0 / (4.0 * PI);
const LARGE_JUMP: f64 = 30.0;
const DENOMINATOR_FLOOR: f64 = 1e-300;

/// One kernel evaluation; `is_diagonal` marks use of the limit formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub value: f64,
    pub is_diagonal: bool,
}

impl KernelSample {
    fn off(value: f64) -> Self {
        Self {
            value,
            is_diagonal: false,
        }
    }

    fn diag(value: f64) -> Self {
        Self {
            value,
            is_diagonal: true,
        }
    }
}

/// Interface samples with the spectral first and second derivatives needed by
/// the diagonal limits.
#[derive(Debug, Clone)]
pub struct Curve {
    pub f: GridFunction,
    pub slope: GridFunction,
    pub curvature: GridFunction,
}

impl Curve {
    pub fn new(f: &GridFunction) -> Result<Self> {
        Ok(Self {
            f: f.clone(),
            slope: dft_derivative(f)?,
            curvature: dft_second_derivative(f)?,
        })
    }

    #[inline]
    pub fn grid(&self) -> PeriodicGrid {
        self.f.grid()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.f.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// `f(x_i) - f(x_j)` and the signed offset `x_i - x_j` in `(-pi, pi]`.
    #[inline]
    pub fn offsets(&self, i: usize, j: usize) -> (f64, f64) {
        let v = self.f.values();
        (v[i] - v[j], self.grid().signed_offset(i, j))
    }
}

/// `(1/4pi) ln(cosh y - cos x)`, the Newtonian kernel of `T x R`.
pub fn newtonian(x: f64, y: f64) -> Result<f64> {
    let ay = y.abs();
    if ay > LARGE_JUMP {
        let e = (-ay).exp();
        return Ok(FOUR_PI_INV * (ay - 2f64.ln() + (e * e - 2.0 * x.cos() * e).ln_1p()));
    }
    let s = (0.5 * x).sin();
    let d = 2.0 * (0.5 * y).sinh().powi(2) + 2.0 * s * s;
    if d <= 0.0 {
        return Err(Error::SingularPoint);
    }
    Ok(FOUR_PI_INV * d.ln())
}

/// `(sinh(df) * a + b) / (cosh(df) - cos(h))`, overflow-safe.
fn hyperbolic_ratio(df: f64, h: f64, a: f64, b: f64) -> Result<f64> {
    let ad = df.abs();
    if ad > LARGE_JUMP {
        let e = (-ad).exp();
        let num = df.signum() * (1.0 - e * e) * a + 2.0 * e * b;
        let den = 1.0 + e * e - 2.0 * h.cos() * e;
        return Ok(num / den);
    }
    let s = (0.5 * h).sin();
    let den = 2.0 * (0.5 * df).sinh().powi(2) + 2.0 * s * s;
    if den < DENOMINATOR_FLOOR {
        return Err(Error::CoincidentNodes { denominator: den });
    }
    Ok((df.sinh() * a + b) / den)
}

/// Off-diagonal `K*` integrand for `df = f(x) - f(x')`, `h = x - x'`, `slope = f'(x)`.
pub fn kstar_kernel(df: f64, h: f64, slope: f64) -> Result<f64> {
    Ok(FOUR_PI_INV * hyperbolic_ratio(df, h, 1.0, -h.sin() * slope)?)
}

/// Off-diagonal `K` integrand with `slope_src = f'(x')`.
pub fn k_kernel(df: f64, h: f64, slope_src: f64) -> Result<f64> {
    Ok(FOUR_PI_INV * hyperbolic_ratio(df, h, -1.0, h.sin() * slope_src)?)
}

/// Off-diagonal Dirichlet-Neumann integrand with `slope = f'(x)`.
pub fn dno_kernel(df: f64, h: f64, slope: f64) -> Result<f64> {
    Ok(FOUR_PI_INV * hyperbolic_ratio(df, h, slope, h.sin())?)
}

/// `ln(1 + sinh^2(df/2) / sin^2(h/2))`, off-diagonal.
pub fn smooth_log_kernel(df: f64, h: f64) -> Result<f64> {
    let s = (0.5 * h).sin().abs();
    if s == 0.0 {
        return Err(Error::CoincidentNodes { denominator: 0.0 });
    }
    let a = 0.5 * df.abs();
    if a > 0.5 * LARGE_JUMP {
        // ln sinh(a) = a - ln 2 + ln(1 - e^{-2a})
        let log_ratio = 2.0 * (a - 2f64.ln() + (-(-2.0 * a).exp()).ln_1p() - s.ln());
        return Ok(log_ratio + (-log_ratio).exp().ln_1p());
    }
    let r = a.sinh() / s;
    Ok((r * r).ln_1p())
}

/// Shared diagonal limit of the `K` and `K*` integrands, `-f''/(4pi(1 + f'^2))`.
#[inline]
pub fn double_layer_diagonal(slope: f64, curvature: f64) -> f64 {
    -FOUR_PI_INV * curvature / (1.0 + slope * slope)
}

/// Diagonal limit of the smooth-log integrand, `ln(1 + f'^2)`.
#[inline]
pub fn smooth_log_diagonal(slope: f64) -> f64 {
    (slope * slope).ln_1p()
}

/// `K*[f]` integrand at nodes `(x_i, x_j)`.
pub fn kstar_integrand(curve: &Curve, i: usize, j: usize) -> Result<KernelSample> {
    if i == j {
        return Ok(KernelSample::diag(double_layer_diagonal(
            curve.slope.values()[i],
            curve.curvature.values()[i],
        )));
    }
    let (df, h) = curve.offsets(i, j);
    kstar_kernel(df, h, curve.slope.values()[i]).map(KernelSample::off)
}

/// `K[f]` integrand at nodes `(x_i, x_j)`.
pub fn k_integrand(curve: &Curve, i: usize, j: usize) -> Result<KernelSample> {
    if i == j {
        return Ok(KernelSample::diag(double_layer_diagonal(
            curve.slope.values()[i],
            curve.curvature.values()[i],
        )));
    }
    let (df, h) = curve.offsets(i, j);
    k_kernel(df, h, curve.slope.values()[j]).map(KernelSample::off)
}

/// Dirichlet-Neumann integrand; the diagonal is a genuine singularity.
pub fn dno_integrand(curve: &Curve, i: usize, j: usize) -> Result<KernelSample> {
    if i == j {
        return Err(Error::SingularPoint);
    }
    let (df, h) = curve.offsets(i, j);
    dno_kernel(df, h, curve.slope.values()[i]).map(KernelSample::off)
}

/// Continuous remainder of the log split of the Dirichlet-Neumann kernel.
pub fn smooth_log_integrand(curve: &Curve, i: usize, j: usize) -> Result<KernelSample> {
    if i == j {
        return Ok(KernelSample::diag(smooth_log_diagonal(
            curve.slope.values()[i],
        )));
    }
    let (df, h) = curve.offsets(i, j);
    smooth_log_kernel(df, h).map(KernelSample::off)
}
