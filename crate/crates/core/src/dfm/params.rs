use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, plain_vector, row_major, solve_discrete_lyapunov, spectral_radius};

/// Parameters of the state-space form
///
/// ```text
/// x_t = Z F_t + e_t,        e_t ~ N(0, R),  R diagonal
/// F_t = Tmat F_{t-1} + u_t, u_t ~ N(0, Q)
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceParams {
    /// `Z`, M×K.
    #[serde(with = "row_major")]
    pub loadings: DMatrix<f64>,
    /// `Tmat`, K×K.
    #[serde(with = "row_major")]
    pub transition: DMatrix<f64>,
    /// Diagonal of `R`.
    #[serde(with = "plain_vector")]
    pub obs_var: DVector<f64>,
    /// `Q`, K×K.
    #[serde(with = "row_major")]
    pub state_cov: DMatrix<f64>,
}

impl StateSpaceParams {
    /// Validated constructor: shapes agree, `R > 0`, `Q` symmetric positive
    /// definite and `Tmat` stable.
    pub fn new(
        loadings: DMatrix<f64>,
        transition: DMatrix<f64>,
        obs_var: DVector<f64>,
        state_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let p = Self::new_unchecked(loadings, transition, obs_var, state_cov)?;
        p.validate()?;
        Ok(p)
    }

    /// Checks shapes only.
    pub(crate) fn new_unchecked(
        loadings: DMatrix<f64>,
        transition: DMatrix<f64>,
        obs_var: DVector<f64>,
        state_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let (m, k) = loadings.shape();
        if k == 0 || m == 0 {
            return Err(Error::Size(
                "loadings must have at least one row and column".into(),
            ));
        }
        if transition.shape() != (k, k) || state_cov.shape() != (k, k) {
            return Err(Error::Size(format!(
                "with K={k}, transition is {:?} and state covariance is {:?}",
                transition.shape(),
                state_cov.shape()
            )));
        }
        if obs_var.len() != m {
            return Err(Error::Size(format!(
                "observation variance has {} entries, loadings have {m} rows",
                obs_var.len()
            )));
        }
        Ok(Self {
            loadings,
            transition,
            obs_var,
            state_cov,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let all = self
            .loadings
            .iter()
            .chain(self.transition.iter())
            .chain(self.obs_var.iter())
            .chain(self.state_cov.iter());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter(
                "state-space parameters contain non-finite values".into(),
            ));
        }
        if let Some(i) = self.obs_var.iter().position(|&r| !(r > 0.0)) {
            return Err(Error::Parameter(format!(
                "observation variance {i} is {} (must be positive)",
                self.obs_var[i]
            )));
        }
        let q = &self.state_cov;
        let asym = (q - q.transpose()).amax();
        if asym > 1e-10 * q.amax().max(1.0) {
            return Err(Error::Parameter(format!(
                "state covariance is not symmetric ({asym:.2e})"
            )));
        }
        let lmin = min_eigenvalue(q);
        if !(lmin > 0.0) {
            return Err(Error::Parameter(format!(
                "state covariance is not positive definite (min eigenvalue {lmin:.3e})"
            )));
        }
        let rho = spectral_radius(&self.transition);
        if rho >= 1.0 {
            return Err(Error::Stability(format!(
                "transition matrix has spectral radius {rho:.6} >= 1"
            )));
        }
        Ok(())
    }

    pub fn n_series(&self) -> usize {
        self.loadings.nrows()
    }

    pub fn n_factors(&self) -> usize {
        self.loadings.ncols()
    }

    pub fn obs_cov(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.obs_var)
    }

    /// Unconditional factor covariance `Π = Tmat Π Tmat' + Q`.
    pub fn stationary_cov(&self) -> Result<DMatrix<f64>> {
        solve_discrete_lyapunov(&self.transition, &self.state_cov)
    }

    /// Model-implied covariance of `x_t`, `Z Π Z' + R`.
    pub fn implied_obs_cov(&self) -> Result<DMatrix<f64>> {
        let pi = self.stationary_cov()?;
        let z = &self.loadings;
        Ok(z * pi * z.transpose() + self.obs_cov())
    }

    /// Parameters for the rotated factors `U F_t`, with `U` orthogonal.
    /// The likelihood is unchanged.
    pub fn rotate(&self, u: &DMatrix<f64>) -> Self {
        let ut = u.transpose();
        Self {
            loadings: &self.loadings * &ut,
            transition: u * &self.transition * &ut,
            obs_var: self.obs_var.clone(),
            state_cov: crate::linalg::symmetrize(&(u * &self.state_cov * &ut)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(t: f64) -> Result<StateSpaceParams> {
        StateSpaceParams::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, t),
            DVector::from_element(1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        )
    }

    #[test]
    fn validation() {
        assert!(scalar(0.5).is_ok());
        assert!(matches!(scalar(1.0), Err(Error::Stability(_))));
        assert!(matches!(
            StateSpaceParams::new(
                DMatrix::from_element(2, 1, 1.0),
                DMatrix::from_element(1, 1, 0.0),
                DVector::from_vec(vec![1.0, 0.0]),
                DMatrix::from_element(1, 1, 1.0),
            ),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            StateSpaceParams::new(
                DMatrix::from_element(2, 1, 1.0),
                DMatrix::from_element(1, 1, 0.0),
                DVector::from_element(3, 1.0),
                DMatrix::from_element(1, 1, 1.0),
            ),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn stationary_cov_of_ar1() {
        let p = scalar(0.5).unwrap();
        assert!((p.stationary_cov().unwrap()[(0, 0)] - 1.0 / 0.75).abs() < 1e-12);
    }

    #[test]
    fn json_is_row_major() {
        let p = StateSpaceParams::new(
            DMatrix::from_row_slice(2, 1, &[1.0, 2.0]),
            DMatrix::from_element(1, 1, 0.3),
            DVector::from_vec(vec![0.5, 0.25]),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let j = serde_json::to_value(&p).unwrap();
        assert_eq!(j["loadings"]["rows"], 2);
        assert_eq!(j["loadings"]["data"], serde_json::json!([1.0, 2.0]));
        let back: StateSpaceParams = serde_json::from_value(j).unwrap();
        assert_eq!(back, p);
    }
}
