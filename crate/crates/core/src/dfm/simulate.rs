use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::StateSpaceParams;
use crate::error::{Error, Result};
use crate::linalg::symmetrize;
use crate::panel::{Month, Panel};

/// Draws from a factor model: observations (`NaN` where masked) and the
/// factor path that generated them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDfm {
    /// T×M.
    pub observations: DMatrix<f64>,
    /// T×K.
    pub factors: DMatrix<f64>,
}

impl SimulatedDfm {
    /// Wrap the observations as a panel with columns `x1 … xM` starting at `start`.
    pub fn to_panel(&self, start: Month) -> Result<Panel> {
        let names: Vec<String> = (1..=self.observations.ncols()).map(|i| format!("x{i}")).collect();
        Panel::from_matrix(&names, start, &self.observations)
    }
}

/// Symmetric square root through the eigen-decomposition, robust to
/// near-singular covariances.
fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Simulate `t_obs` periods, drawing `F_0` from the stationary distribution.
/// `mask[(t, i)] == true` marks an entry to blank out.
pub fn simulate_dfm(
    params: &StateSpaceParams,
    t_obs: usize,
    seed: u64,
    mask: Option<&DMatrix<bool>>,
) -> Result<SimulatedDfm> {
    params.validate()?;
    if t_obs < 1 {
        return Err(Error::Size("simulation needs at least one period".into()));
    }
    let (m, k) = params.loadings.shape();
    if let Some(mask) = mask {
        if mask.shape() != (t_obs, m) {
            return Err(Error::Size(format!(
                "mask is {:?}, expected ({t_obs}, {m})",
                mask.shape()
            )));
        }
    }
    let pi = params.stationary_cov()?;
    let pi_half = sqrt_psd(&pi);
    let q_half = sqrt_psd(&params.state_cov);
    let r_sd = params.obs_var.map(f64::sqrt);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));

    let mut f = &pi_half * draw(k);
    let mut factors = DMatrix::zeros(t_obs, k);
    let mut obs = DMatrix::zeros(t_obs, m);
    for t in 0..t_obs {
        f = &params.transition * f + &q_half * draw(k);
        let e = draw(m).component_mul(&r_sd);
        let x = &params.loadings * &f + e;
        factors.set_row(t, &f.transpose());
        obs.set_row(t, &x.transpose());
    }
    if let Some(mask) = mask {
        for (x, &hide) in obs.iter_mut().zip(mask.iter()) {
            if hide {
                *x = f64::NAN;
            }
        }
    }
    Ok(SimulatedDfm {
        observations: obs,
        factors,
    })
}
