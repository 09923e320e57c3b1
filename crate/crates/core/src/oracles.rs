//! Reference computations used to check the solver: the Dirichlet-Neumann map
//! of the unit disk, the gradient of the Poisson integral, and pointwise
//! evaluation of the double layer field below a graph.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{
    dft_derivative, dft_second_derivative, interpolate, translate, upsample, GridFunction,
};

/// Interior evaluation points must sit at least this far below the graph.
pub const INTERIOR_MARGIN: f64 = 1e-6;
/// Points closer than this many grid spacings to the graph are flagged.
pub const NEAR_BOUNDARY_SPACINGS: f64 = 5.0;
const MAX_UPSAMPLE: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValue {
    pub value: f64,
    /// Set when the point is within [`NEAR_BOUNDARY_SPACINGS`] grid spacings of the graph.
    pub reduced_accuracy: bool,
}

fn check_finite_arg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite, got {v}")))
    }
}

/// `out[j] = g(x + j dx)`.
fn centered_samples(g: &GridFunction, x: f64) -> Result<GridFunction> {
    translate(g, x + PI)
}

/// Second differences `[g(x+h) + g(x-h) - 2g(x)] / h^2` at `h = dx, 2dx, 4dx`.
fn second_differences(u: &[f64], dx: f64) -> [f64; 3] {
    let n = u.len();
    let d = |m: usize| (u[m] + u[n - m] - 2.0 * u[0]) / (m as f64 * dx).powi(2);
    [d(1), d(2), d(4)]
}

/// Normal derivative at `e^{ix}` of the harmonic extension of `g` into the unit disk.
pub fn disk_dno(g: &GridFunction, x: f64) -> Result<f64> {
    check_finite_arg("x", x)?;
    let grid = g.grid();
    let n = grid.len();
    let dx = grid.spacing();
    let u = centered_samples(g, x)?;
    let u = u.values();

    let [d1, d2, d4] = second_differences(u, dx);
    let range = g.max() - g.min();
    if range > 0.0 && d1.abs() * dx >= 1e-3 * range && d1.abs() >= 1.5 * d2.abs() && d2.abs() >= 1.5 * d4.abs() {
        return Err(Error::InsufficientSmoothness { x });
    }

    let curvature = dft_second_derivative(&GridFunction::new(grid, u.to_vec())?)?;
    let mut acc = 4.0 * curvature.values()[0];
    for j in 1..n {
        let s = (0.5 * j as f64 * dx).sin();
        acc += (u[j] + u[n - j] - 2.0 * u[0]) / (s * s);
    }
    Ok(-dx * acc / (8.0 * PI))
}

/// `z . grad u(z)` at `z = r e^{ix}` for the Poisson extension `u` of `g`.
pub fn poisson_radial_derivative(g: &GridFunction, r: f64, x: f64) -> Result<f64> {
    check_finite_arg("x", x)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("radius must lie in (0, 1), got {r}")));
    }
    let n = g.len();
    let wanted = (64.0 / (1.0 - r)).ceil().min(MAX_UPSAMPLE as f64) as usize;
    let m = wanted.max(n).next_power_of_two();
    let fine = upsample(g, m)?;
    let u = centered_samples(&fine, x)?;
    let u = u.values();
    let dx = 2.0 * PI / m as f64;
    let r2 = r * r;
    // subtracting g(x) uses that z . grad K integrates to zero over the circle
    let mut acc = 0.0;
    for (j, &uj) in u.iter().enumerate().skip(1) {
        let c = (j as f64 * dx).cos();
        let dist2 = 1.0 + r2 - 2.0 * r * c;
        let dk = -r2 / dist2 - (1.0 - r2) * (r2 - r * c) / (dist2 * dist2);
        acc += dk * (uj - u[0]);
    }
    Ok(dx * acc / PI)
}

/// Double layer field `phi(p)` generated by the dipole density `theta_big`
/// (whose boundary trace solves `(1/2 I + K[f]) Theta = g`).
pub fn harmonic_eval(f: &GridFunction, theta_big: &GridFunction, p: FieldPoint) -> Result<FieldValue> {
    check_finite_arg("x", p.x)?;
    check_finite_arg("y", p.y)?;
    if theta_big.grid() != f.grid() {
        return Err(Error::LengthMismatch {
            expected: f.len(),
            got: theta_big.len(),
        });
    }
    let fx = interpolate(f, p.x);
    let depth = fx - p.y;
    if depth < INTERIOR_MARGIN {
        return Err(Error::NotInterior { x: p.x, y: p.y });
    }
    let n = f.len();
    let reduced_accuracy = depth < NEAR_BOUNDARY_SPACINGS * f.grid().spacing();
    let wanted = (200.0 / depth).ceil().min(MAX_UPSAMPLE as f64) as usize;
    let m = wanted.max(n).next_power_of_two();
    let ff = centered_samples(&upsample(f, m)?, p.x)?;
    let tf = centered_samples(&upsample(theta_big, m)?, p.x)?;
    let theta = dft_derivative(&tf)?;
    let dx = 2.0 * PI / m as f64;

    // The principal arctan jumps by pi at x' = x; removing the sawtooth
    // pi s(t), s(t) = (pi - t)/(2pi), leaves a smooth integrand and the
    // sawtooth integrates against theta to pi times the mean of Theta.
    let mut acc = 0.0;
    for (j, (&fj, &tj)) in ff.values().iter().zip(theta.values()).enumerate().skip(1) {
        let t = j as f64 * dx;
        let half = -0.5 * t;
        let a = (((p.y - fj) * 0.5).tanh() * half.cos() / half.sin()).atan();
        let saw = 0.5 * (PI - t);
        acc += (a - saw) * tj;
    }
    let value = 0.5 * tf.mean() + dx * acc / (2.0 * PI);
    if !value.is_finite() {
        return Err(Error::NonFinite {
            stage: "harmonic evaluation",
            index: 0,
        });
    }
    Ok(FieldValue {
        value,
        reduced_accuracy,
    })
}
