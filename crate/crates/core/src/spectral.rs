//! Periodic grids, grid functions and Fourier multipliers on the torus `[-pi, pi)`.
//!
//! Every multiplier is applied with one forward and one inverse transform.
//! Odd-order multipliers (derivative, Hilbert transform) zero the Nyquist mode;
//! `|D|` zeroes it as well so that `|D| = H d/dx` holds exactly on every input.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform sampling `x_j = -pi + j * 2pi/N` of the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PeriodicGrid {
    n_points: usize,
}

impl PeriodicGrid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < Self::MIN_POINTS || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= {}, got {n_points}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self { n_points })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n_points as f64
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        -PI + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    /// Signed wavenumber stored at FFT slot `j`. The Nyquist slot returns `N/2`.
    #[inline]
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.n_points as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    #[inline]
    pub fn nyquist(&self) -> usize {
        self.n_points / 2
    }

    /// Periodic node offset `(i - j) mod N` mapped to the signed distance in `(-pi, pi]`.
    #[inline]
    pub fn signed_offset(&self, i: usize, j: usize) -> f64 {
        let n = self.n_points as i64;
        let mut d = (i as i64 - j as i64).rem_euclid(n);
        if d > n / 2 {
            d -= n;
        }
        d as f64 * self.spacing()
    }
}

/// Real samples of a periodic function on a [`PeriodicGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                stage: "grid function",
                index,
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    #[inline]
    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `L^2(T)` norm with trapezoid weight `dx`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// `dx * sum(u * v)`, the trapezoid `L^2(T)` pairing.
    pub fn pairing(&self, other: &GridFunction) -> f64 {
        self.grid.spacing()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    /// Largest forward difference quotient, wrapping periodically.
    pub fn lip_seminorm(&self) -> f64 {
        let n = self.len();
        let dx = self.grid.spacing();
        (0..n)
            .map(|j| (self.values[(j + 1) % n] - self.values[j]).abs() / dx)
            .fold(0.0, f64::max)
    }

    /// Circular shift by `s` nodes: `out(x_j) = u(x_{j - s})`.
    pub fn shift(&self, s: isize) -> GridFunction {
        let n = self.len() as isize;
        let values = (0..n)
            .map(|j| self.values[(j - s).rem_euclid(n) as usize])
            .collect();
        GridFunction {
            grid: self.grid,
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
        GridFunction::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(
        &self,
        other: &GridFunction,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<GridFunction> {
        if other.grid != self.grid {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        GridFunction::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add_scalar(&self, c: f64) -> Result<GridFunction> {
        self.map(|v| v + c)
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite {
                stage: "spectral input",
                index,
            }),
            None => Ok(()),
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Unnormalized forward DFT of real samples.
pub fn forward(values: &[f64]) -> Vec<Complex64> {
    let (fwd, _) = plans(values.len());
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    buf
}

/// Inverse DFT including the `1/N` normalization; returns the real part.
pub fn inverse_real(mut coeffs: Vec<Complex64>) -> Vec<f64> {
    let n = coeffs.len();
    let (_, inv) = plans(n);
    inv.process(&mut coeffs);
    let scale = 1.0 / n as f64;
    coeffs.into_iter().map(|c| c.re * scale).collect()
}

/// Applies the symbol `m(k)` slot by slot; `m` receives the signed wavenumber and
/// a flag marking the Nyquist slot.
fn apply_multiplier(
    u: &GridFunction,
    m: impl Fn(i64, bool) -> Complex64,
) -> Result<GridFunction> {
    u.check_finite()?;
    let grid = u.grid();
    let nyq = grid.nyquist();
    let mut c = forward(u.values());
    for (j, cj) in c.iter_mut().enumerate() {
        *cj *= m(grid.wavenumber(j), j == nyq);
    }
    GridFunction::new(grid, inverse_real(c))
}

/// Spectral derivative, multiplier `i k`.
pub fn dft_derivative(u: &GridFunction) -> Result<GridFunction> {
    apply_multiplier(u, |k, nyq| {
        if nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k as f64)
        }
    })
}

/// Second spectral derivative, equal to two applications of [`dft_derivative`].
pub fn dft_second_derivative(u: &GridFunction) -> Result<GridFunction> {
    apply_multiplier(u, |k, nyq| {
        if nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(-((k * k) as f64), 0.0)
        }
    })
}

/// Periodic Hilbert transform `(1/2pi) pv int cot((x - x')/2) u(x') dx'`,
/// multiplier `-i sgn(k)`.
pub fn hilbert_transform(u: &GridFunction) -> Result<GridFunction> {
    apply_multiplier(u, |k, nyq| {
        if nyq || k == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -(k.signum() as f64))
        }
    })
}

/// Multiplier `|k|`; equals `hilbert_transform(dft_derivative(u))`.
pub fn abs_derivative(u: &GridFunction) -> Result<GridFunction> {
    apply_multiplier(u, |k, nyq| {
        if nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(k.abs() as f64, 0.0)
        }
    })
}

/// Exact heat propagator, multiplier `exp(-nu k^2)`.
pub fn heat_factor(u: &GridFunction, nu: f64) -> Result<GridFunction> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "heat factor requires finite nu >= 0, got {nu}"
        )));
    }
    if nu == 0.0 {
        u.check_finite()?;
        return Ok(u.clone());
    }
    apply_multiplier(u, |k, _| Complex64::new((-nu * (k * k) as f64).exp(), 0.0))
}

/// Periodic Gaussian mollification with standard deviation `width`.
pub fn mollify(u: &GridFunction, width: f64) -> Result<GridFunction> {
    heat_factor(u, 0.5 * width * width)
}

/// Two-thirds dealiasing mask: zeroes every mode with `|k| > N/3`.
pub fn dealias(u: &GridFunction) -> Result<GridFunction> {
    let cutoff = u.len() as i64 / 3;
    apply_multiplier(u, |k, _| {
        if k.abs() > cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// Complex amplitude `c_k` of `u = sum c_k e^{ik(x+pi)}`-style expansion, returned as
/// the real cosine/sine amplitude `2|u_hat(k)|/N` for `0 < k < N/2`.
pub fn mode_amplitude(u: &GridFunction, k: usize) -> f64 {
    let c = forward(u.values());
    let n = u.len() as f64;
    if k == 0 {
        c[0].norm() / n
    } else {
        2.0 * c[k].norm() / n
    }
}

/// Trigonometric interpolant of `u` evaluated at an arbitrary `x`.
pub fn interpolate(u: &GridFunction, x: f64) -> f64 {
    let grid = u.grid();
    let n = grid.len();
    let c = forward(u.values());
    let t = x + PI;
    let mut acc = c[0].re;
    for (j, cj) in c.iter().enumerate().take(grid.nyquist()).skip(1) {
        let e = Complex64::from_polar(1.0, j as f64 * t);
        acc += 2.0 * (cj * e).re;
    }
    acc += c[grid.nyquist()].re * ((grid.nyquist() as f64) * t).cos();
    acc / n as f64
}

/// Spectral translation: `out(x_j) = u(x_j + s)`. Integer multiples of the
/// spacing reduce to an exact index shift.
pub fn translate(u: &GridFunction, s: f64) -> Result<GridFunction> {
    let grid = u.grid();
    let steps = s / grid.spacing();
    if (steps - steps.round()).abs() < 1e-12 {
        return Ok(u.shift(-(steps.round() as isize)));
    }
    apply_multiplier(u, |k, nyq| {
        if nyq {
            // real part of the Nyquist phase keeps the output real
            Complex64::new((k as f64 * s).cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, k as f64 * s)
        }
    })
}

/// Band-limited resampling onto a finer grid of `m` points by zero padding.
pub fn upsample(u: &GridFunction, m: usize) -> Result<GridFunction> {
    let target = PeriodicGrid::new(m)?;
    let n = u.len();
    if m == n {
        return Ok(u.clone());
    }
    if m < n {
        return Err(Error::InvalidArgument(format!(
            "upsample target {m} smaller than source {n}"
        )));
    }
    let c = forward(u.values());
    let half = n / 2;
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    padded[0] = c[0];
    for j in 1..half {
        padded[j] = c[j];
        padded[m - j] = c[n - j];
    }
    // split the Nyquist coefficient symmetrically
    padded[half] = c[half] * 0.5;
    padded[m - half] = c[half] * 0.5;
    let scale = m as f64 / n as f64;
    let values = inverse_real(padded).into_iter().map(|v| v * scale).collect();
    GridFunction::new(target, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(PeriodicGrid::new(4).is_err());
        assert!(PeriodicGrid::new(48).is_err());
        let g = grid(16);
        assert_eq!(g.node(0), -PI);
        assert!((g.node(15) + g.spacing() - PI).abs() < 1e-15);
        let nodes = g.nodes();
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn derivative_of_cosine() {
        let g = grid(64);
        let u = GridFunction::from_fn(g, |x| (3.0 * x).cos()).unwrap();
        let du = dft_derivative(&u).unwrap();
        for (x, v) in g.nodes().iter().zip(du.values()) {
            assert!((v + 3.0 * (3.0 * x).sin()).abs() <= 1e-12);
        }
        assert!(du.mean().abs() < 1e-14);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let u = GridFunction::constant(grid(32), 5.0).unwrap();
        assert!(dft_derivative(&u).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let g = grid(8);
        assert!(GridFunction::new(g, vec![f64::NAN; 8]).is_err());
        assert!(GridFunction::new(g, vec![0.0; 7]).is_err());
    }

    #[test]
    fn hilbert_on_low_modes() {
        let g = grid(64);
        let u = GridFunction::from_fn(g, f64::cos).unwrap();
        let hu = hilbert_transform(&u).unwrap();
        for (x, v) in g.nodes().iter().zip(hu.values()) {
            assert!((v - x.sin()).abs() < 1e-13);
        }
        let u = GridFunction::from_fn(g, |x| (2.0 * x).sin()).unwrap();
        let hu = hilbert_transform(&u).unwrap();
        for (x, v) in g.nodes().iter().zip(hu.values()) {
            assert!((v + (2.0 * x).cos()).abs() < 1e-13);
        }
        let one = GridFunction::constant(g, 1.0).unwrap();
        assert!(hilbert_transform(&one).unwrap().sup_norm() < 1e-15);
    }

    #[test]
    fn abs_derivative_and_heat() {
        let g = grid(64);
        let u = GridFunction::from_fn(g, |x| (3.0 * x).cos()).unwrap();
        let a = abs_derivative(&u).unwrap();
        for (x, v) in g.nodes().iter().zip(a.values()) {
            assert!((v - 3.0 * (3.0 * x).cos()).abs() < 1e-12);
        }
        let c = GridFunction::from_fn(g, f64::cos).unwrap();
        let h = heat_factor(&c, 2f64.ln()).unwrap();
        for (x, v) in g.nodes().iter().zip(h.values()) {
            assert!((v - 0.5 * x.cos()).abs() < 1e-14);
        }
        assert!(heat_factor(&c, -1.0).is_err());
        assert_eq!(heat_factor(&c, 0.0).unwrap(), c);
    }

    #[test]
    fn interpolation_and_upsampling_are_exact_on_trig_polynomials() {
        let g = grid(32);
        let f = |x: f64| 0.3 * (2.0 * x).cos() - 0.1 * (5.0 * x).sin() + 0.7;
        let u = GridFunction::from_fn(g, f).unwrap();
        for &x in &[0.123, -2.9, 3.0] {
            assert!((interpolate(&u, x) - f(x)).abs() < 1e-13);
        }
        let fine = upsample(&u, 128).unwrap();
        for (x, v) in fine.grid().nodes().iter().zip(fine.values()) {
            assert!((v - f(*x)).abs() < 1e-13);
        }
    }

    #[test]
    fn translation_matches_closed_form() {
        let g = grid(32);
        let f = |x: f64| (2.0 * x).cos() + 0.4 * (3.0 * x).sin();
        let u = GridFunction::from_fn(g, f).unwrap();
        for &s in &[0.37, -1.2, 2.0 * PI / 32.0 * 3.0] {
            let t = translate(&u, s).unwrap();
            for (x, v) in g.nodes().iter().zip(t.values()) {
                assert!((v - f(x + s)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn shift_moves_samples() {
        let g = grid(8);
        let u = GridFunction::new(g, (0..8).map(|j| j as f64).collect()).unwrap();
        let s = u.shift(2);
        assert_eq!(s.values()[2], 0.0);
        assert_eq!(s.values()[0], 6.0);
    }
}
