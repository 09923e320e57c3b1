//! Restart-free GMRES with modified Gram-Schmidt and Givens rotations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) struct GmresOutcome {
    pub x: DVector<f64>,
    /// True residual `||b - A x||_2`, recomputed after the solve.
    pub residual: f64,
    pub iterations: usize,
    /// Smallest singular value of the Arnoldi Hessenberg matrix.
    pub sigma_estimate: f64,
}

pub(crate) fn gmres<A>(apply: A, b: &DVector<f64>, tol: f64, max_iter: usize) -> Result<GmresOutcome>
where
    A: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = b.len();
    let beta = b.norm();
    if beta == 0.0 {
        return Ok(GmresOutcome {
            x: DVector::zeros(n),
            residual: 0.0,
            iterations: 0,
            sigma_estimate: f64::NAN,
        });
    }
    let m = max_iter.min(n);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m + 1);
    basis.push(b / beta);
    let mut h = DMatrix::<f64>::zeros(m + 1, m);
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = DVector::<f64>::zeros(m + 1);
    g[0] = beta;
    let mut k_used = 0;

    for k in 0..m {
        let mut w = apply(&basis[k]);
        for (i, v) in basis.iter().enumerate() {
            let hik = w.dot(v);
            h[(i, k)] = hik;
            w.axpy(-hik, v, 1.0);
        }
        let hnext = w.norm();
        h[(k + 1, k)] = hnext;

        // apply accumulated rotations to the new column
        let mut col: Vec<f64> = (0..=k + 1).map(|i| h[(i, k)]).collect();
        for i in 0..k {
            let t = cs[i] * col[i] + sn[i] * col[i + 1];
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
            col[i] = t;
        }
        let r = col[k].hypot(col[k + 1]);
        cs[k] = col[k] / r;
        sn[k] = col[k + 1] / r;
        g[k + 1] = -sn[k] * g[k];
        g[k] *= cs[k];
        k_used = k + 1;
        if hnext > 0.0 {
            basis.push(w / hnext);
        }
        if g[k + 1].abs() <= 0.1 * tol || hnext == 0.0 {
            break;
        }
    }

    // least squares on the unrotated Hessenberg for clarity
    let hk = h.view((0, 0), (k_used + 1, k_used)).into_owned();
    let mut rhs = DVector::<f64>::zeros(k_used + 1);
    rhs[0] = beta;
    let y = hk
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-300)
        .map_err(|_| Error::SolverStall {
            iterations: k_used,
            best_residual: f64::INFINITY,
        })?;
    let mut x = DVector::<f64>::zeros(n);
    for (j, yj) in y.iter().enumerate() {
        x.axpy(*yj, &basis[j], 1.0);
    }
    let residual = (b - apply(&x)).norm();
    let sigma_estimate = hk
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(residual <= tol) {
        return Err(Error::SolverStall {
            iterations: k_used,
            best_residual: residual,
        });
    }
    Ok(GmresOutcome {
        x,
        residual,
        iterations: k_used,
        sigma_estimate,
    })
}
