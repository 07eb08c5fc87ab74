use nalgebra::{DMatrix, DVector};

use super::StateSpaceParams;
use crate::error::{Error, Result};
use crate::linalg::{clip_eigenvalue_modulus, floor_eigenvalues};
use crate::panel::Panel;

/// Floor on idiosyncratic variances.
pub const OBS_VAR_FLOOR: f64 = 1e-4;
/// Floor on the eigenvalues of the factor innovation covariance.
pub const STATE_COV_FLOOR: f64 = 1e-6;
/// Largest eigenvalue modulus allowed for the initial transition matrix.
pub const MAX_INITIAL_MODULUS: f64 = 0.98;

/// Principal-components starting values for a `k`-factor model of a
/// standardized panel.
pub fn pca_init(panel: &Panel, k: usize) -> Result<StateSpaceParams> {
    pca_init_data(&panel.to_matrix(), k).map(|(p, _)| p)
}

/// As [`pca_init`] on a T×M matrix with `NaN` for missing entries; also
/// returns the T×K principal-component factors.
pub fn pca_init_data(data: &DMatrix<f64>, k: usize) -> Result<(StateSpaceParams, DMatrix<f64>)> {
    let (n, m) = data.shape();
    if k < 1 || k > m {
        return Err(Error::Parameter(format!(
            "factor count must lie in [1, {m}], got {k}"
        )));
    }
    if n < 2 {
        return Err(Error::Size(format!("need at least 2 periods, got {n}")));
    }
    let filled = data.map(|v| if v.is_nan() { 0.0 } else { v });
    let cov = filled.transpose() * &filled / n as f64;
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = &order[..k];
    if !(eig.eigenvalues[top[k - 1]] > 0.0) {
        return Err(Error::Degenerate(format!(
            "panel has fewer than {k} directions of positive variance"
        )));
    }

    let mut v = DMatrix::zeros(m, k);
    let mut lambda = DVector::zeros(k);
    for (j, &c) in top.iter().enumerate() {
        let mut col = eig.eigenvectors.column(c).into_owned();
        // Fix the sign so the largest-magnitude entry is positive.
        if col[col.iamax()] < 0.0 {
            col = -col;
        }
        v.set_column(j, &col);
        lambda[j] = eig.eigenvalues[c];
    }
    let sqrt_l = lambda.map(f64::sqrt);
    let loadings = DMatrix::from_fn(m, k, |i, j| v[(i, j)] * sqrt_l[j]);
    let factors = DMatrix::from_fn(n, k, |t, j| {
        filled.row(t).dot(&v.column(j).transpose()) / sqrt_l[j]
    });

    let fitted = &factors * loadings.transpose();
    let obs_var = DVector::from_fn(m, |i, _| {
        let (mut ss, mut cnt) = (0.0, 0usize);
        for t in 0..n {
            let x = data[(t, i)];
            if !x.is_nan() {
                ss += (x - fitted[(t, i)]).powi(2);
                cnt += 1;
            }
        }
        if cnt == 0 {
            1.0
        } else {
            (ss / cnt as f64).max(OBS_VAR_FLOOR)
        }
    });

    let lead = factors.rows(1, n - 1).into_owned();
    let lag = factors.rows(0, n - 1).into_owned();
    let s00 = lag.transpose() * &lag;
    let s10 = lead.transpose() * &lag;
    let s00_inv = s00
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::Degenerate(format!("factor VAR is singular: {e}")))?;
    let transition = clip_eigenvalue_modulus(&(s10 * s00_inv), MAX_INITIAL_MODULUS);
    let resid = &lead - &lag * transition.transpose();
    let state_cov = floor_eigenvalues(&(resid.transpose() * &resid / (n - 1) as f64), STATE_COV_FLOOR);

    let params = StateSpaceParams::new(loadings, transition, obs_var, state_cov)?;
    Ok((params, factors))
}
