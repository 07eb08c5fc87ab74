use super::StateSpaceParams;
use crate::error::{Error, Result};

/// `(AIC, BIC)` for a log-likelihood with `n_params` free parameters over
/// `t_obs` periods.
pub fn information_criteria(loglik: f64, n_params: usize, t_obs: usize) -> Result<(f64, f64)> {
    if t_obs < 2 {
        return Err(Error::Size(format!(
            "information criteria need T >= 2, got {t_obs}"
        )));
    }
    let k = n_params as f64;
    Ok((-2.0 * loglik + 2.0 * k, -2.0 * loglik + (t_obs as f64).ln() * k))
}

/// Free parameters of an M-series, K-factor model: loadings, transition,
/// diagonal `R` and symmetric `Q`, less the `K(K−1)/2` rotations fixed by
/// the identification step.
pub fn n_params(m: usize, k: usize) -> usize {
    m * k + k * k + m + k * (k + 1) / 2 - k * (k.saturating_sub(1)) / 2
}

/// Condition number of the model-implied covariance of the observations,
/// `Z Π Z' + R`.
pub fn condition_number(params: &StateSpaceParams) -> Result<f64> {
    Ok(crate::linalg::condition_number(&params.implied_obs_cov()?))
}
