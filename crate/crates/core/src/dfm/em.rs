use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::criteria::{condition_number, information_criteria, n_params};
use super::filter::{kalman_filter_data, FilterOutput, InitialState};
use super::pca::{pca_init_data, OBS_VAR_FLOOR, STATE_COV_FLOOR};
use super::smoother::{kalman_smoother, SmootherOutput};
use super::StateSpaceParams;
use crate::error::{Error, Result};
use crate::linalg::{clip_eigenvalue_modulus, floor_eigenvalues, row_major, spectral_radius, symmetrize};
use crate::panel::{Month, Panel};

/// Transition matrices estimated at or beyond this spectral radius are shrunk back to it.
pub const MAX_FITTED_MODULUS: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Convergence threshold on the relative change in log-likelihood.
    pub tol: f64,
    /// Recorded with the fit; estimation itself is deterministic.
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-6,
            seed: 0,
        }
    }
}

/// A fitted dynamic factor model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfmFit {
    pub k: usize,
    pub params: StateSpaceParams,
    /// Log-likelihood with `F_0` drawn from the stationary distribution of `params`.
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_params: usize,
    pub t_obs: usize,
    pub condition_number: f64,
    /// Smoothed factors, T×K.
    #[serde(with = "row_major")]
    pub smoothed_factors: DMatrix<f64>,
    /// Log-likelihood at each EM iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Initial-state distribution held fixed during EM, in the reported rotation.
    pub em_initial_state: InitialState,
    pub options: FitOptions,
    pub warnings: Vec<String>,
}

impl DfmFit {
    /// Smoothed factors as CSV with a leading `date` column.
    pub fn factors_csv(&self, dates: &[Month]) -> Result<String> {
        if dates.len() != self.smoothed_factors.nrows() {
            return Err(Error::Size(format!(
                "{} dates for {} factor rows",
                dates.len(),
                self.smoothed_factors.nrows()
            )));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["date".to_string()];
        header.extend((1..=self.k).map(|j| format!("f{j}")));
        w.write_record(&header)?;
        for (t, d) in dates.iter().enumerate() {
            let mut rec = vec![d.to_string()];
            rec.extend(self.smoothed_factors.row(t).iter().map(|v| format!("{v:?}")));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Maximum-likelihood fit of a `k`-factor model to a standardized panel by EM
/// from principal-components starting values.
pub fn fit_mle(panel: &Panel, k: usize, opts: FitOptions) -> Result<DfmFit> {
    fit_mle_data(&panel.to_matrix(), k, opts)
}

/// As [`fit_mle`] on a T×M matrix with `NaN` for missing entries.
pub fn fit_mle_data(data: &DMatrix<f64>, k: usize, opts: FitOptions) -> Result<DfmFit> {
    if opts.max_iter == 0 || !(opts.tol > 0.0) {
        return Err(Error::Parameter("max_iter must be positive and tol > 0".into()));
    }
    let (params0, _) = pca_init_data(data, k)?;
    let init = InitialState::stationary(&params0)?;
    let mut params = params0;
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let e_step = |p: &StateSpaceParams, it: usize| -> Result<(FilterOutput, SmootherOutput)> {
        let estimation = |e: Error| Error::Estimation {
            iteration: it,
            message: e.to_string(),
        };
        let f = kalman_filter_data(p, data, &init).map_err(estimation)?;
        if !f.loglik.is_finite() {
            return Err(Error::Estimation {
                iteration: it,
                message: "log-likelihood is not finite".into(),
            });
        }
        let s = kalman_smoother(p, &f).map_err(estimation)?;
        Ok((f, s))
    };

    for it in 0..opts.max_iter {
        let (f, s) = e_step(&params, it)?;
        iterations = it + 1;
        if let Some(&prev) = trace.last() {
            let change = (f.loglik - prev).abs() / prev.abs().max(1.0);
            trace.push(f.loglik);
            if change < opts.tol {
                converged = true;
                break;
            }
        } else {
            trace.push(f.loglik);
        }
        params = m_step(&params, data, &s);
    }

    let mut warnings = Vec::new();
    if !converged {
        warnings.push(format!(
            "EM did not converge within {} iterations (K={k})",
            opts.max_iter
        ));
    }
    let rho = spectral_radius(&params.transition);
    if rho >= MAX_FITTED_MODULUS {
        params.transition = clip_eigenvalue_modulus(&params.transition, MAX_FITTED_MODULUS - 1e-9);
        warnings.push(format!(
            "fitted transition had spectral radius {rho:.6}; shrunk to {MAX_FITTED_MODULUS}"
        ));
    }

    let u = identification_rotation(&params.loadings);
    let params = params.rotate(&u);
    let em_initial_state = init.rotate(&u);
    params.validate()?;

    let stationary = InitialState::stationary(&params)?;
    let f = kalman_filter_data(&params, data, &stationary).map_err(|e| Error::Estimation {
        iteration: iterations,
        message: e.to_string(),
    })?;
    let s = kalman_smoother(&params, &f)?;

    let (t_obs, m) = data.shape();
    let n_params = n_params(m, k);
    let (aic, bic) = information_criteria(f.loglik, n_params, t_obs)?;
    Ok(DfmFit {
        k,
        condition_number: condition_number(&params)?,
        params,
        loglik: f.loglik,
        aic,
        bic,
        n_params,
        t_obs,
        smoothed_factors: s.means,
        trace,
        iterations,
        converged,
        em_initial_state,
        options: opts,
        warnings,
    })
}

/// Closed-form EM update. With a diagonal `R`, loadings and idiosyncratic
/// variances are updated row by row over the periods in which each series is
/// observed.
fn m_step(old: &StateSpaceParams, data: &DMatrix<f64>, s: &SmootherOutput) -> StateSpaceParams {
    let (n, m) = data.shape();
    let k = old.n_factors();
    let f = &s.means;
    let outer = |t: usize| {
        let ft = f.row(t).transpose();
        &ft * ft.transpose() + &s.covs[t]
    };

    let mut s11 = DMatrix::zeros(k, k);
    let mut s00 = DMatrix::zeros(k, k);
    let mut s10 = DMatrix::zeros(k, k);
    let mut prev_mean = s.initial_mean.clone();
    let mut prev_outer = &s.initial_mean * s.initial_mean.transpose() + &s.initial_cov;
    let mut moments = Vec::with_capacity(n);
    for t in 0..n {
        let ft = f.row(t).transpose();
        let ptt = outer(t);
        s11 += &ptt;
        s00 += &prev_outer;
        s10 += &ft * prev_mean.transpose() + &s.lag_one[t];
        prev_mean = ft;
        prev_outer = ptt.clone();
        moments.push(ptt);
    }

    let transition = match s00.clone().cholesky() {
        Some(c) => c.solve(&s10.transpose()).transpose(),
        None => old.transition.clone(),
    };
    let q = (&s11 - &transition * s10.transpose()) / n as f64;
    let state_cov = floor_eigenvalues(&symmetrize(&q), STATE_COV_FLOOR);

    let mut loadings = old.loadings.clone();
    let mut obs_var = old.obs_var.clone();
    let complete = !data.iter().any(|v| v.is_nan());
    let full_chol = if complete { s11.clone().cholesky() } else { None };
    for i in 0..m {
        let rows: Vec<usize> = (0..n).filter(|&t| !data[(t, i)].is_nan()).collect();
        if rows.is_empty() {
            continue;
        }
        let mut b = DVector::zeros(k);
        for &t in &rows {
            b += f.row(t).transpose() * data[(t, i)];
        }
        let zi = match &full_chol {
            Some(c) => c.solve(&b),
            None => {
                let mut a = DMatrix::zeros(k, k);
                for &t in &rows {
                    a += &moments[t];
                }
                match a.cholesky() {
                    Some(c) => c.solve(&b),
                    None => continue,
                }
            }
        };
        let mut ss = 0.0;
        for &t in &rows {
            let e = data[(t, i)] - f.row(t).dot(&zi.transpose());
            ss += e * e + (zi.transpose() * &s.covs[t] * &zi)[(0, 0)];
        }
        loadings.set_row(i, &zi.transpose());
        obs_var[i] = (ss / rows.len() as f64).max(OBS_VAR_FLOOR);
    }

    StateSpaceParams {
        loadings,
        transition,
        obs_var,
        state_cov,
    }
}

/// Orthogonal `U` such that the loadings `Z U'` have orthogonal columns of
/// decreasing norm, each with its largest-magnitude entry positive.
pub fn identification_rotation(loadings: &DMatrix<f64>) -> DMatrix<f64> {
    let k = loadings.ncols();
    let ztz = symmetrize(&(loadings.transpose() * loadings));
    let eig = ztz.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut v = DMatrix::zeros(k, k);
    for (j, &c) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(c).into_owned();
        let rotated = loadings * &col;
        if rotated[rotated.iamax()] < 0.0 {
            col = -col;
        }
        v.set_column(j, &col);
    }
    v.transpose()
}
