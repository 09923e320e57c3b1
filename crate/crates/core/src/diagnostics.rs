//! Norms and monitors recorded along trajectories, modulus-of-continuity and
//! comparison checks, and discrete sup/inf convolutions.

use rayon::prelude::*;

use crate::dno::DnoResult;
use crate::error::{Error, Result};
use crate::spectral::GridFunction;
use crate::stepper::{InterfaceState, Trajectory};

/// Tolerance `1e-6 + 10 dx^2` used for maximum-principle style assertions.
pub fn default_tolerance(dx: f64) -> f64 {
    1e-6 + 10.0 * dx * dx
}

/// Floor for `sigma_min * (1 + ||f||_Lip)^{5/2}`, frozen from the smallest value over
/// `f = a cos x`, `a in {0.5, 1, 2, 4}` (measured 1.3686 at `a = 0.5`, independent of N).
pub const SIGMA_FLOOR_CAL: f64 = 1.36;

/// Constant in `kappa ||theta||_2 <= C (1 + ||f_0||_Lip)^{7/2}`, frozen from the
/// largest `t = 0` ratio over the acceptance trajectories (0.5112, kink mollified
/// at width 0.05 on N = 128). The ratio grows as the mollifier width shrinks.
pub const THETA_BOUND_CAL: f64 = 0.52;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub sup_norm: f64,
    pub lip_seminorm: f64,
    pub l2_norm: f64,
    /// `dx * sum(f * G(f)f)`.
    pub dn_pairing: f64,
    /// `kappa * ||theta||_2`, the L2 norm of the evolution density.
    pub theta_l2: f64,
    pub sigma_min: Option<f64>,
}

pub fn record(state: &InterfaceState, dno: &DnoResult) -> DiagnosticsRecord {
    let f = &state.f;
    DiagnosticsRecord {
        time: state.time,
        sup_norm: f.sup_norm(),
        lip_seminorm: f.lip_seminorm(),
        l2_norm: f.l2_norm(),
        dn_pairing: dno.pairing,
        theta_l2: state.kappa * dno.theta_used.theta.l2_norm(),
        sigma_min: None,
    }
}

/// Largest increase of a series over its running minimum; zero for a
/// nonincreasing series.
pub fn monotonicity_defect(series: &[f64]) -> f64 {
    let mut lowest = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for &s in series {
        worst = worst.max(s - lowest);
        lowest = lowest.min(s);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximumPrincipleReport {
    pub sup_defect: f64,
    pub lip_defect: f64,
    pub l2_defect: f64,
    pub tolerance: f64,
}

impl MaximumPrincipleReport {
    pub fn passed(&self) -> bool {
        self.sup_defect <= self.tolerance
            && self.lip_defect <= self.tolerance
            && self.l2_defect <= self.tolerance
    }
}

pub fn maximum_principle_report(traj: &Trajectory, tolerance: f64) -> MaximumPrincipleReport {
    let series = |sel: fn(&DiagnosticsRecord) -> f64| -> Vec<f64> {
        traj.diagnostics.iter().map(sel).collect()
    };
    MaximumPrincipleReport {
        sup_defect: monotonicity_defect(&series(|d| d.sup_norm)),
        lip_defect: monotonicity_defect(&series(|d| d.lip_seminorm)),
        l2_defect: monotonicity_defect(&series(|d| d.l2_norm)),
        tolerance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusReport {
    pub passed: bool,
    /// Largest `|f_i - f_j| - gamma(d_ij)` over all pairs.
    pub max_excess: f64,
    /// Pair with the largest ratio `|f_i - f_j| / gamma(d_ij)`.
    pub worst: (usize, usize),
    pub worst_ratio: f64,
}

/// Exhaustive check of `|f(x_i) - f(x_j)| <= gamma(d(x_i, x_j)) + tol` over all
/// pairs with the periodic distance.
pub fn modulus_check(f: &GridFunction, gamma: impl Fn(f64) -> f64 + Sync, tol: f64) -> ModulusReport {
    let grid = f.grid();
    let n = grid.len();
    let v = f.values();
    // (max excess, worst ratio, i, j)
    let init = || (f64::NEG_INFINITY, f64::NEG_INFINITY, 0usize, 0usize);
    let (max_excess, worst_ratio, i, j) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = init();
            for j in (0..n).filter(|&j| j != i) {
                let d = grid.signed_offset(i, j).abs();
                let jump = (v[i] - v[j]).abs();
                let g = gamma(d);
                acc.0 = acc.0.max(jump - g);
                let ratio = if g > 0.0 {
                    jump / g
                } else if jump > tol {
                    f64::INFINITY
                } else {
                    0.0
                };
                if ratio > acc.1 {
                    acc = (acc.0, ratio, i, j);
                }
            }
            acc
        })
        .reduce(init, |a, b| {
            let excess = a.0.max(b.0);
            if b.1 > a.1 {
                (excess, b.1, b.2, b.3)
            } else {
                (excess, a.1, a.2, a.3)
            }
        });
    ModulusReport {
        passed: max_excess <= tol,
        max_excess,
        worst: (i, j),
        worst_ratio,
    }
}

/// Sup-convolution in space: `max_j f_j - d(x_i, x_j)^2 / (2 delta)`.
pub fn sup_convolution(f: &GridFunction, delta: f64) -> Result<GridFunction> {
    check_delta(delta)?;
    let grid = f.grid();
    let n = grid.len();
    let v = f.values();
    let out = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = grid.signed_offset(i, j);
                    v[j] - d * d / (2.0 * delta)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    GridFunction::new(grid, out)
}

/// Inf-convolution in space, `-sup_convolution(-g, delta)`.
pub fn inf_convolution(g: &GridFunction, delta: f64) -> Result<GridFunction> {
    let neg = g.map(|v| -v)?;
    sup_convolution(&neg, delta)?.map(|v| -v)
}

/// Samples `values[m]` at `times[m]`, all on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub times: Vec<f64>,
    pub values: Vec<GridFunction>,
}

impl SpaceTimeField {
    pub fn new(times: Vec<f64>, values: Vec<GridFunction>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                got: values.len(),
            });
        }
        let grid = values[0].grid();
        if values.iter().any(|v| v.grid() != grid) {
            return Err(Error::Mismatch("space-time slices on different grids".into()));
        }
        Ok(Self { times, values })
    }

    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        Self::new(traj.times.clone(), traj.snapshots.clone())
    }

    fn map(&self, f: impl Fn(f64) -> f64 + Copy) -> Result<Self> {
        Ok(Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v.map(f)).collect::<Result<_>>()?,
        })
    }
}

/// Space-time sup-convolution with one `delta` for both variables:
/// `max_{j,m} f(x_j, t_m) - (d(x_i, x_j)^2 + (t_n - t_m)^2) / (2 delta)`.
pub fn sup_convolution_space_time(field: &SpaceTimeField, delta: f64) -> Result<SpaceTimeField> {
    check_delta(delta)?;
    let grid = field.values[0].grid();
    let n = grid.len();
    let slices: Vec<GridFunction> = field
        .times
        .par_iter()
        .map(|&tn| {
            let out = (0..n)
                .map(|i| {
                    let mut best = f64::NEG_INFINITY;
                    for (tm, slice) in field.times.iter().zip(&field.values) {
                        let dt2 = (tn - tm) * (tn - tm);
                        for (j, &v) in slice.values().iter().enumerate() {
                            let d = grid.signed_offset(i, j);
                            best = best.max(v - (d * d + dt2) / (2.0 * delta));
                        }
                    }
                    best
                })
                .collect();
            GridFunction::new(grid, out)
        })
        .collect::<Result<_>>()?;
    SpaceTimeField::new(field.times.clone(), slices)
}

pub fn inf_convolution_space_time(field: &SpaceTimeField, delta: f64) -> Result<SpaceTimeField> {
    sup_convolution_space_time(&field.map(|v| -v)?, delta)?.map(|v| -v)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    /// Signed pointwise differences `f1 - f2` at each output time.
    pub pointwise: Vec<Vec<f64>>,
    /// Per-time amount by which the initial ordering is violated (zero when
    /// the initial data are not ordered).
    pub ordering_defects: Vec<f64>,
    /// `||f1(t) - f2(t)||_inf - ||f1(0) - f2(0)||_inf`.
    pub contraction_defects: Vec<f64>,
    /// Largest increase of `||f1(t) - f2(t)||_inf` over its running minimum.
    pub contraction_monotonicity: f64,
    pub ordered_initially: bool,
    pub tolerance: f64,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        let tol = self.tolerance;
        self.ordering_defects.iter().all(|&d| d <= tol)
            && self.contraction_defects.iter().all(|&d| d <= tol)
            && self.contraction_monotonicity <= tol
    }
}

pub fn comparison_report(a: &Trajectory, b: &Trajectory, tolerance: f64) -> Result<ComparisonReport> {
    if a.grid() != b.grid()
        || a.kappa != b.kappa
        || a.epsilon != b.epsilon
        || a.times != b.times
    {
        return Err(Error::Mismatch(
            "comparison needs matching grids, output times, kappa and epsilon".into(),
        ));
    }
    if a.snapshots.is_empty() {
        return Err(Error::Mismatch("empty trajectories".into()));
    }
    let pointwise: Vec<Vec<f64>> = a
        .snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| x.values().iter().zip(y.values()).map(|(p, q)| p - q).collect())
        .collect();
    let max_of = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_of = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let first = &pointwise[0];
    // orientation: +1 when f1(0) <= f2(0), -1 when f1(0) >= f2(0)
    let orientation = if max_of(first) <= 0.0 {
        Some(1.0)
    } else if min_of(first) >= 0.0 {
        Some(-1.0)
    } else {
        None
    };
    let ordering_defects = pointwise
        .iter()
        .map(|d| match orientation {
            Some(s) => max_of(&d.iter().map(|v| s * v).collect::<Vec<_>>()).max(0.0),
            None => 0.0,
        })
        .collect();
    let gaps: Vec<f64> = pointwise
        .iter()
        .map(|d| d.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        .collect();
    Ok(ComparisonReport {
        times: a.times.clone(),
        contraction_defects: gaps.iter().map(|g| g - gaps[0]).collect(),
        contraction_monotonicity: monotonicity_defect(&gaps),
        pointwise,
        ordering_defects,
        ordered_initially: orientation.is_some(),
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::PeriodicGrid;
    use proptest::prelude::*;

    fn gf(n: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(PeriodicGrid::new(n).unwrap(), f).unwrap()
    }

    #[test]
    fn norms_of_simple_profiles() {
        let c = gf(64, |_| 3.0);
        assert_eq!(c.sup_norm(), 3.0);
        assert_eq!(c.lip_seminorm(), 0.0);
        let f = gf(256, f64::cos);
        assert!((f.l2_norm() - std::f64::consts::PI.sqrt()).abs() < 1e-10);
        let mut prev = f64::INFINITY;
        for n in [64, 128, 256, 512] {
            let err = (gf(n, f64::cos).lip_seminorm() - 1.0).abs();
            let dx = 2.0 * std::f64::consts::PI / n as f64;
            assert!(err <= dx);
            assert!(err <= prev);
            prev = err;
        }
    }

    #[test]
    fn monotonicity_defect_cases() {
        assert_eq!(monotonicity_defect(&[3.0, 2.0, 2.0, 1.0]), 0.0);
        assert_eq!(monotonicity_defect(&[3.0, 1.0, 1.5]), 0.5);
        assert_eq!(monotonicity_defect(&[]), 0.0);
    }

    #[test]
    fn modulus_examples() {
        let f = gf(128, |x| 0.5 * x.sin());
        assert!(modulus_check(&f, |z| z, 1e-12).passed);
        let g = gf(128, f64::sin);
        let r = modulus_check(&g, |z| 0.5 * z, 1e-12);
        assert!(!r.passed);
        // the steepest violation sits where |cos x| = 1
        let nodes = g.grid().nodes();
        let (i, j) = r.worst;
        assert!(nodes[i].cos().abs() > 0.99 && nodes[j].cos().abs() > 0.99, "{r:?}");
        assert!((r.worst_ratio - 2.0).abs() < 1e-2);
    }

    #[test]
    fn convolution_of_constant_and_flat_limit() {
        let c = gf(32, |_| 1.25);
        for d in [0.01, 1.0, 100.0] {
            assert!(sup_convolution(&c, d).unwrap().max_abs_diff(&c) == 0.0);
        }
        let f = gf(64, |x| x.sin() + 0.3 * (2.0 * x).cos());
        let big = sup_convolution(&f, 1e9).unwrap();
        for v in big.values() {
            assert!((v - f.max()).abs() < 1e-8);
        }
        assert!(sup_convolution(&f, 0.0).is_err());
    }

    #[test]
    fn inf_convolution_matches_fine_brute_force() {
        let n = 128;
        let g = gf(n, |x| x.sin().abs());
        let delta = 0.1;
        let coarse = inf_convolution(&g, delta).unwrap();
        let i0 = n / 2; // node at x = 0
        let m = 10 * n;
        let dx = 2.0 * std::f64::consts::PI / m as f64;
        let brute = (0..m)
            .map(|j| {
                let y = -std::f64::consts::PI + j as f64 * dx;
                y.sin().abs() + y * y / (2.0 * delta)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((coarse.values()[i0] - brute).abs() <= 2.0 * std::f64::consts::PI / n as f64);
    }

    #[test]
    fn space_time_convolution_dominates() {
        let times = vec![0.0, 0.1, 0.2];
        let values: Vec<GridFunction> = times
            .iter()
            .map(|&t| gf(32, move |x| (x + t).sin()))
            .collect();
        let field = SpaceTimeField::new(times, values).unwrap();
        let up = sup_convolution_space_time(&field, 0.05).unwrap();
        let down = inf_convolution_space_time(&field, 0.05).unwrap();
        for ((u, d), f) in up.values.iter().zip(&down.values).zip(&field.values) {
            for ((a, b), c) in u.values().iter().zip(d.values()).zip(f.values()) {
                assert!(a >= c && b <= c);
            }
        }
    }

    fn random_field() -> impl Strategy<Value = (Vec<f64>, f64)> {
        (prop::collection::vec(-2.0f64..2.0, 64), 0.01f64..5.0)
    }

    proptest! {
        #[test]
        fn sup_inf_convolution_properties((vals, delta) in random_field()) {
            let g = PeriodicGrid::new(64).unwrap();
            let f = GridFunction::new(g, vals).unwrap();
            let up = sup_convolution(&f, delta).unwrap();
            let down = inf_convolution(&f, delta).unwrap();
            let dual = sup_convolution(&f.map(|v| -v).unwrap(), delta).unwrap();
            let dx = g.spacing();
            for j in 0..64 {
                prop_assert!(up.values()[j] >= f.values()[j]);
                prop_assert!(down.values()[j] <= f.values()[j]);
                prop_assert_eq!(down.values()[j], -dual.values()[j]);
                let second = up.values()[(j + 1) % 64] + up.values()[(j + 63) % 64] - 2.0 * up.values()[j];
                prop_assert!(second >= -dx * dx / delta - 1e-12);
            }
            let smaller = sup_convolution(&f, 0.5 * delta).unwrap();
            for j in 0..64 {
                prop_assert!(smaller.values()[j] <= up.values()[j]);
            }
            prop_assert!(up.lip_seminorm() <= std::f64::consts::PI / delta + 1e-9);
        }
    }
}
