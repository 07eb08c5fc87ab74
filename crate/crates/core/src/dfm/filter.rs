use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::StateSpaceParams;
use crate::error::{Error, Result};
use crate::linalg::{row_major, symmetrize, SpdFactor};
use crate::panel::Panel;

/// Innovation covariances with a condition number above this abort the filter.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

/// Distribution of the state before the first observation, `F_0 ~ N(mean, cov)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub mean: Vec<f64>,
    #[serde(with = "row_major")]
    pub cov: DMatrix<f64>,
}

impl InitialState {
    /// Zero mean and the unconditional covariance of the factor process.
    pub fn stationary(params: &StateSpaceParams) -> Result<Self> {
        Ok(Self {
            mean: vec![0.0; params.n_factors()],
            cov: params.stationary_cov()?,
        })
    }

    pub fn rotate(&self, u: &DMatrix<f64>) -> Self {
        let m = u * DVector::from_column_slice(&self.mean);
        Self {
            mean: m.as_slice().to_vec(),
            cov: symmetrize(&(u * &self.cov * u.transpose())),
        }
    }
}

/// One filtering step, for the observation at position `t` (0-based).
#[derive(Debug, Clone)]
pub struct FilterStep {
    /// `a_{t|t-1}`.
    pub predicted_mean: DVector<f64>,
    /// `P_{t|t-1}`.
    pub predicted_cov: DMatrix<f64>,
    /// `a_t`.
    pub mean: DVector<f64>,
    /// `P_t`.
    pub cov: DMatrix<f64>,
    /// Indices of the series observed at `t`.
    pub observed: Vec<usize>,
    /// Innovation over the observed series.
    pub innovation: DVector<f64>,
    pub innovation_cov: DMatrix<f64>,
    pub gain: DMatrix<f64>,
    pub loglik: f64,
}

#[derive(Debug, Clone)]
pub struct FilterOutput {
    pub init: InitialState,
    pub steps: Vec<FilterStep>,
    pub loglik: f64,
}

impl FilterOutput {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Filtered means as a T×K matrix.
    pub fn means(&self) -> DMatrix<f64> {
        let k = self.init.mean.len();
        DMatrix::from_fn(self.steps.len(), k, |t, j| self.steps[t].mean[j])
    }
}

/// Filter a panel starting from the stationary distribution of the factors.
pub fn kalman_filter(params: &StateSpaceParams, panel: &Panel) -> Result<FilterOutput> {
    params.validate()?;
    let init = InitialState::stationary(params)?;
    kalman_filter_data(params, &panel.to_matrix(), &init)
}

/// Filter a T×M data matrix in which `NaN` marks a missing entry.
pub fn kalman_filter_data(
    params: &StateSpaceParams,
    data: &DMatrix<f64>,
    init: &InitialState,
) -> Result<FilterOutput> {
    run(params, data, init, false)
}

pub(crate) fn run(
    params: &StateSpaceParams,
    data: &DMatrix<f64>,
    init: &InitialState,
    force_selection: bool,
) -> Result<FilterOutput> {
    let (m, k) = params.loadings.shape();
    if data.ncols() != m {
        return Err(Error::Size(format!(
            "panel has {} columns but the model has {m} series",
            data.ncols()
        )));
    }
    if init.mean.len() != k || init.cov.shape() != (k, k) {
        return Err(Error::Size(format!("initial state does not have dimension {k}")));
    }
    let z = &params.loadings;
    let tm = &params.transition;
    let ln2pi = (2.0 * PI).ln();

    let mut a = DVector::from_column_slice(&init.mean);
    let mut p = init.cov.clone();
    let mut steps = Vec::with_capacity(data.nrows());
    let mut total = 0.0;

    for t in 0..data.nrows() {
        let a_pred = tm * &a;
        let p_pred = symmetrize(&(tm * &p * tm.transpose() + &params.state_cov));

        let observed: Vec<usize> = (0..m).filter(|&i| !data[(t, i)].is_nan()).collect();
        if observed.is_empty() {
            a = a_pred.clone();
            p = p_pred.clone();
            steps.push(FilterStep {
                predicted_mean: a_pred,
                predicted_cov: p_pred,
                mean: a.clone(),
                cov: p.clone(),
                observed,
                innovation: DVector::zeros(0),
                innovation_cov: DMatrix::zeros(0, 0),
                gain: DMatrix::zeros(k, 0),
                loglik: 0.0,
            });
            continue;
        }

        let (innovation, zp, s) = if observed.len() == m && !force_selection {
            let v = data.row(t).transpose() - z * &a_pred;
            let zp = z * &p_pred;
            let s = &zp * z.transpose() + params.obs_cov();
            (v, zp, s)
        } else {
            let zo = z.select_rows(observed.iter());
            let x = DVector::from_iterator(observed.len(), observed.iter().map(|&i| data[(t, i)]));
            let r = DMatrix::from_diagonal(&params.obs_var.select_rows(observed.iter()));
            let v = x - &zo * &a_pred;
            let zp = &zo * &p_pred;
            let s = &zp * zo.transpose() + r;
            (v, zp, s)
        };
        let s = symmetrize(&s);
        let fac = SpdFactor::new(&s).ok_or_else(|| Error::Filter {
            t,
            message: "innovation covariance is not positive definite".into(),
        })?;
        if fac.condition() > MAX_INNOVATION_CONDITION {
            return Err(Error::Filter {
                t,
                message: format!(
                    "innovation covariance condition number {:.3e} exceeds {MAX_INNOVATION_CONDITION:.0e}",
                    fac.condition()
                ),
            });
        }
        // K = P Z' S^{-1} = (S^{-1} Z P)'
        let gain = fac.solve(&zp).transpose();
        let sinv_v = fac.solve_vec(&innovation);
        let step_ll = -0.5 * (fac.log_det() + innovation.dot(&sinv_v) + observed.len() as f64 * ln2pi);
        if !step_ll.is_finite() {
            return Err(Error::Filter {
                t,
                message: "log-likelihood contribution is not finite".into(),
            });
        }
        total += step_ll;
        a = &a_pred + &gain * &innovation;
        p = symmetrize(&(&p_pred - &gain * &zp));

        steps.push(FilterStep {
            predicted_mean: a_pred,
            predicted_cov: p_pred,
            mean: a.clone(),
            cov: p.clone(),
            observed,
            innovation,
            innovation_cov: s,
            gain,
            loglik: step_ll,
        });
    }

    Ok(FilterOutput {
        init: init.clone(),
        steps,
        loglik: total,
    })
}
