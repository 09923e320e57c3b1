//! Nyström discretization of the boundary double layer operators and the
//! second-kind density equations.
//!
//! `(1/2 I - K*) theta = rhs` is solved on the zero-mean subspace through the
//! bordered operator `P (1/2 I - A) P + J`, where `P` is the mean-zero projector
//! and `J = 11^T / N`. The operator is block diagonal over `1^perp (+) span(1)`,
//! so a mean-zero right-hand side produces a mean-zero density.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gmres::{gmres, GmresOutcome};
use crate::kernels::{double_layer_diagonal, k_integrand, kstar_integrand, Curve};
use crate::spectral::{GridFunction, PeriodicGrid};
use crate::FaultInjection;

/// Default absolute tolerance on the l2 residual.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Largest size solved with a dense factorization.
pub const DENSE_CAP: usize = 1024;
/// Largest size accepted by [`sigma_min_monitor`].
pub const SIGMA_MONITOR_CAP: usize = 512;
const MAX_KRYLOV: usize = 200;
const REFINEMENT_STEPS: usize = 4;
const POWER_STEPS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorTag {
    /// Adjoint double layer `K*[f]`.
    KStar,
    /// Boundary double layer `K[f]`.
    K,
}

/// Dense Nyström matrix with trapezoid weight folded into the entries.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub entries: DMatrix<f64>,
    pub grid: PeriodicGrid,
    pub tag: OperatorTag,
    pub weight: f64,
}

impl KernelMatrix {
    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.row_iter().map(|r| r.sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.entries.column_iter().map(|c| c.sum()).collect()
    }

    /// Defect of the identity `K[f]1 = 0` (rows of `K`, columns of `K*`).
    pub fn jump_defect(&self) -> f64 {
        let sums = match self.tag {
            OperatorTag::K => self.row_sums(),
            OperatorTag::KStar => self.column_sums(),
        };
        sums.into_iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// `(1/2 I + sign * A)` as a dense matrix.
    fn shifted(&self, sign: f64) -> DMatrix<f64> {
        let n = self.grid.len();
        let mut m = &self.entries * sign;
        for i in 0..n {
            m[(i, i)] += 0.5;
        }
        m
    }
}

/// Zero-mean density with solve diagnostics.
#[derive(Debug, Clone)]
pub struct DensitySolution {
    pub theta: GridFunction,
    pub residual_norm: f64,
    pub sigma_min_estimate: f64,
    pub iterations: usize,
}

pub fn assemble(f: &GridFunction, tag: OperatorTag) -> Result<KernelMatrix> {
    assemble_curve(&Curve::new(f)?, tag, FaultInjection::default())
}

pub(crate) fn assemble_curve(
    curve: &Curve,
    tag: OperatorTag,
    faults: FaultInjection,
) -> Result<KernelMatrix> {
    let grid = curve.grid();
    let n = grid.len();
    let dx = grid.spacing();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let s = match tag {
                        OperatorTag::KStar => {
                            if i == j && faults.corrupt_kstar_diagonal {
                                // canary: sign error in the diagonal limit
                                let v = -double_layer_diagonal(
                                    curve.slope.values()[i],
                                    curve.curvature.values()[i],
                                );
                                Ok(v)
                            } else {
                                kstar_integrand(curve, i, j).map(|s| s.value)
                            }
                        }
                        OperatorTag::K => k_integrand(curve, i, j).map(|s| s.value),
                    }?;
                    if !s.is_finite() {
                        return Err(Error::NonFiniteEntry { row: i, col: j });
                    }
                    Ok(s * dx)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(KernelMatrix {
        entries: DMatrix::from_row_slice(n, n, &flat),
        grid,
        tag,
        weight: dx,
    })
}

fn project_mean(v: &mut DVector<f64>) {
    let m = v.mean();
    v.add_scalar_mut(-m);
}

/// `P M P + J` for the zero-mean solve.
fn bordered(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let nf = n as f64;
    let col_means: Vec<f64> = m.column_iter().map(|c| c.sum() / nf).collect();
    let row_means: Vec<f64> = m.row_iter().map(|r| r.sum() / nf).collect();
    let total = col_means.iter().sum::<f64>() / nf;
    DMatrix::from_fn(n, n, |i, j| {
        m[(i, j)] - col_means[j] - row_means[i] + total + 1.0 / nf
    })
}

/// Dense LU with iterative refinement; returns solution, residual, refinement count.
type DenseSolve = (DVector<f64>, f64, usize, nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>);

fn dense_solve(
    m: &DMatrix<f64>,
    rhs: &DVector<f64>,
    tol: f64,
    mean_zero: bool,
) -> Result<DenseSolve> {
    let lu = m.clone().lu();
    let mut x = lu.solve(rhs).ok_or(Error::SolverStall {
        iterations: 0,
        best_residual: f64::INFINITY,
    })?;
    if mean_zero {
        project_mean(&mut x);
    }
    let mut res = (rhs - m * &x).norm();
    let mut steps = 0;
    while res > 0.25 * tol && steps < REFINEMENT_STEPS {
        let r = rhs - m * &x;
        if let Some(dx) = lu.solve(&r) {
            let mut trial = &x + dx;
            if mean_zero {
                project_mean(&mut trial);
            }
            let trial_res = (rhs - m * &trial).norm();
            steps += 1;
            if trial_res < res {
                x = trial;
                res = trial_res;
            } else {
                break;
            }
        } else {
            break;
        }
    }
    if !(res <= tol) {
        return Err(Error::SolverStall {
            iterations: steps,
            best_residual: res,
        });
    }
    Ok((x, res, steps, lu))
}

/// `1 / ||M^{-1}||` restricted to mean-zero vectors, by power iteration on
/// `M^{-T} M^{-1}` reusing the factorization.
fn sigma_estimate(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, n: usize) -> f64 {
    let l = lu.l();
    let u = lu.u();
    let p = lu.p();
    let solve_t = |b: &DVector<f64>| -> Option<DVector<f64>> {
        let z = u.tr_solve_upper_triangular(b)?;
        let mut w = l.tr_solve_lower_triangular(&z)?;
        p.inv_permute_rows(&mut w);
        Some(w)
    };
    let mut v = DVector::from_fn(n, |j, _| ((j as f64 + 1.0) * 0.618_033_988_749_895).fract() - 0.5);
    project_mean(&mut v);
    let nv = v.norm();
    if nv == 0.0 {
        return f64::NAN;
    }
    v /= nv;
    let mut growth = 0.0;
    for _ in 0..POWER_STEPS {
        let Some(mut y) = lu.solve(&v) else {
            return f64::NAN;
        };
        project_mean(&mut y);
        growth = y.norm();
        let Some(mut w) = solve_t(&y) else {
            return f64::NAN;
        };
        project_mean(&mut w);
        let nw = w.norm();
        if nw == 0.0 {
            break;
        }
        v = w / nw;
    }
    if growth > 0.0 {
        1.0 / growth
    } else {
        f64::NAN
    }
}

/// Solves `(1/2 I - K*[f]) theta = rhs` on the zero-mean subspace.
pub fn solve_theta(f: &GridFunction, rhs: &GridFunction, tol: f64) -> Result<DensitySolution> {
    solve_theta_curve(&Curve::new(f)?, rhs, tol, FaultInjection::default())
}

pub(crate) fn solve_theta_curve(
    curve: &Curve,
    rhs: &GridFunction,
    tol: f64,
    faults: FaultInjection,
) -> Result<DensitySolution> {
    let grid = curve.grid();
    if rhs.grid() != grid {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: rhs.len(),
        });
    }
    let mean = rhs.mean();
    if mean.abs() > 1e-10 * rhs.sup_norm().max(1.0) {
        return Err(Error::MeanViolation { mean });
    }
    let n = grid.len();
    let mut b = DVector::from_column_slice(rhs.values());
    project_mean(&mut b);
    if b.norm() == 0.0 {
        return Ok(DensitySolution {
            theta: GridFunction::zeros(grid),
            residual_norm: 0.0,
            sigma_min_estimate: f64::NAN,
            iterations: 0,
        });
    }
    let a = assemble_curve(curve, OperatorTag::KStar, faults)?;
    let m = a.shifted(-1.0);
    let (x, residual_norm, iterations, sigma_min_estimate) = if n <= DENSE_CAP {
        let mb = bordered(&m);
        let (x, res, steps, lu) = dense_solve(&mb, &b, tol, true)?;
        (x, res, steps, sigma_estimate(&lu, n))
    } else {
        let op = |v: &DVector<f64>| {
            let mut v0 = v.clone();
            let c = v0.mean();
            v0.add_scalar_mut(-c);
            let mut w = &m * v0;
            project_mean(&mut w);
            w.add_scalar_mut(c);
            w
        };
        let GmresOutcome {
            mut x,
            residual,
            iterations,
            sigma_estimate,
        } = gmres(op, &b, tol, MAX_KRYLOV)?;
        project_mean(&mut x);
        (x, residual, iterations, sigma_estimate)
    };
    Ok(DensitySolution {
        theta: GridFunction::new(grid, x.iter().copied().collect())?,
        residual_norm,
        sigma_min_estimate,
        iterations,
    })
}

/// Solves `(1/2 I + K[f]) Theta = g` on the full space.
pub fn solve_dipole_density(f: &GridFunction, g: &GridFunction, tol: f64) -> Result<GridFunction> {
    let curve = Curve::new(f)?;
    let grid = curve.grid();
    if g.grid() != grid {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: g.len(),
        });
    }
    let n = grid.len();
    let b = DVector::from_column_slice(g.values());
    if b.norm() == 0.0 {
        return Ok(GridFunction::zeros(grid));
    }
    let a = assemble_curve(&curve, OperatorTag::K, FaultInjection::default())?;
    let m = a.shifted(1.0);
    let x = if n <= DENSE_CAP {
        dense_solve(&m, &b, tol, false)?.0
    } else {
        gmres(|v: &DVector<f64>| &m * v, &b, tol, MAX_KRYLOV)?.x
    };
    GridFunction::new(grid, x.iter().copied().collect())
}

/// Smallest singular value of `1/2 I - K*[f]` restricted to mean-zero functions,
/// from a dense SVD.
pub fn sigma_min_monitor(f: &GridFunction) -> Result<f64> {
    sigma_min_monitor_capped(f, SIGMA_MONITOR_CAP)
}

pub fn sigma_min_monitor_capped(f: &GridFunction, cap: usize) -> Result<f64> {
    let n = f.len();
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    let a = assemble(f, OperatorTag::KStar)?;
    let m = a.shifted(-1.0);
    // Householder reflector sending 1/sqrt(N) to e_0; columns 1.. span 1^perp
    let nf = n as f64;
    let mut u = DVector::from_element(n, 1.0 / nf.sqrt());
    u[0] -= 1.0;
    let un = u.norm();
    u /= un;
    let mu = &m * &u;
    let mh = &m - 2.0 * &mu * u.transpose();
    let mut restricted = mh.columns(1, n - 1).into_owned();
    for mut c in restricted.column_iter_mut() {
        let mean = c.mean();
        c.add_scalar_mut(-mean);
    }
    let sv = restricted.singular_values();
    Ok(sv.iter().copied().fold(f64::INFINITY, f64::min))
}
