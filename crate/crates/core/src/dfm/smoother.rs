use nalgebra::{DMatrix, DVector};

use super::{FilterOutput, StateSpaceParams};
use crate::error::{Error, Result};
use crate::linalg::symmetrize;

/// Fixed-interval smoothed moments of the factors given the whole sample.
#[derive(Debug, Clone)]
pub struct SmootherOutput {
    /// `E[F_t | X]`, T×K.
    pub means: DMatrix<f64>,
    /// `Var[F_t | X]`.
    pub covs: Vec<DMatrix<f64>>,
    /// `Cov[F_t, F_{t-1} | X]`; the first entry pairs `F_1` with `F_0`.
    pub lag_one: Vec<DMatrix<f64>>,
    pub initial_mean: DVector<f64>,
    pub initial_cov: DMatrix<f64>,
}

/// Rauch–Tung–Striebel backward pass over the output of [`super::kalman_filter`].
pub fn kalman_smoother(params: &StateSpaceParams, filter: &FilterOutput) -> Result<SmootherOutput> {
    let k = params.n_factors();
    let n = filter.steps.len();
    if filter.init.mean.len() != k || filter.steps.iter().any(|s| s.mean.len() != k) {
        return Err(Error::Consistency(format!(
            "filter output does not match a model with {k} factors"
        )));
    }
    let tm = &params.transition;

    let mut means = DMatrix::zeros(n, k);
    let mut covs = vec![DMatrix::zeros(k, k); n];
    let mut lag_one = vec![DMatrix::zeros(k, k); n];
    if n == 0 {
        return Ok(SmootherOutput {
            means,
            covs,
            lag_one,
            initial_mean: DVector::from_column_slice(&filter.init.mean),
            initial_cov: filter.init.cov.clone(),
        });
    }

    let last = &filter.steps[n - 1];
    let mut a_s = last.mean.clone();
    let mut p_s = last.cov.clone();
    means.set_row(n - 1, &a_s.transpose());
    covs[n - 1] = p_s.clone();

    // Walk t = n-1 .. 0 (step index), smoothing the state one period earlier;
    // index -1 is F_0.
    for t in (0..n).rev() {
        let next = &filter.steps[t];
        let (a_f, p_f) = if t == 0 {
            (
                DVector::from_column_slice(&filter.init.mean),
                filter.init.cov.clone(),
            )
        } else {
            (filter.steps[t - 1].mean.clone(), filter.steps[t - 1].cov.clone())
        };
        let pp = &next.predicted_cov;
        let chol = pp.clone().cholesky().ok_or_else(|| {
            Error::Consistency(format!("predicted covariance at t={t} is not positive definite"))
        })?;
        // J = P_f T' P_pred^{-1}
        let j = chol.solve(&(tm * &p_f)).transpose();
        lag_one[t] = &p_s * j.transpose();
        let a_prev = &a_f + &j * (&a_s - &next.predicted_mean);
        let p_prev = symmetrize(&(&p_f + &j * (&p_s - pp) * j.transpose()));
        a_s = a_prev;
        p_s = p_prev;
        if t > 0 {
            means.set_row(t - 1, &a_s.transpose());
            covs[t - 1] = p_s.clone();
        }
    }

    Ok(SmootherOutput {
        means,
        covs,
        lag_one,
        initial_mean: a_s,
        initial_cov: p_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfm::filter::{kalman_filter_data, InitialState};
    use crate::linalg::min_eigenvalue;

    fn params(t: f64) -> StateSpaceParams {
        StateSpaceParams::new(
            DMatrix::from_row_slice(3, 2, &[1.0, 0.2, 0.5, -0.7, -0.3, 0.9]),
            DMatrix::from_row_slice(2, 2, &[t, 0.1 * t, -0.2 * t, 0.4 * t]),
            DVector::from_vec(vec![0.5, 0.3, 0.8]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.7]),
        )
        .unwrap()
    }

    fn data() -> DMatrix<f64> {
        let mut d = DMatrix::from_fn(15, 3, |t, i| ((t * 3 + i * 11) as f64 * 0.7).cos());
        d[(4, 2)] = f64::NAN;
        d[(9, 0)] = f64::NAN;
        d[(9, 1)] = f64::NAN;
        d[(9, 2)] = f64::NAN;
        d
    }

    #[test]
    fn last_period_equals_filtered() {
        let p = params(1.0);
        let f = kalman_filter_data(&p, &data(), &InitialState::stationary(&p).unwrap()).unwrap();
        let s = kalman_smoother(&p, &f).unwrap();
        let last = f.steps.last().unwrap();
        assert_eq!(s.means.row(14).transpose(), last.mean);
        assert_eq!(s.covs[14], last.cov);
    }

    #[test]
    fn no_dynamics_means_no_smoothing_gain() {
        let p = params(0.0);
        let f = kalman_filter_data(&p, &data(), &InitialState::stationary(&p).unwrap()).unwrap();
        let s = kalman_smoother(&p, &f).unwrap();
        for t in 0..15 {
            assert!((s.means.row(t).transpose() - &f.steps[t].mean).amax() < 1e-14);
        }
    }

    #[test]
    fn smoothed_cov_below_filtered() {
        let p = params(0.9);
        let f = kalman_filter_data(&p, &data(), &InitialState::stationary(&p).unwrap()).unwrap();
        let s = kalman_smoother(&p, &f).unwrap();
        for t in 0..15 {
            assert!(min_eigenvalue(&(&f.steps[t].cov - &s.covs[t])) >= -1e-8);
        }
        assert!(min_eigenvalue(&(&f.init.cov - &s.initial_cov)) >= -1e-8);
    }

    #[test]
    fn mismatched_filter_is_rejected() {
        let p = params(0.5);
        let f = kalman_filter_data(&p, &data(), &InitialState::stationary(&p).unwrap()).unwrap();
        let one = StateSpaceParams::new(
            DMatrix::from_element(3, 1, 1.0),
            DMatrix::from_element(1, 1, 0.5),
            DVector::from_element(3, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        assert!(matches!(kalman_smoother(&one, &f), Err(Error::Consistency(_))));
    }
}
