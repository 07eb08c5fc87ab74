//! Independent reference computations shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use macroprice::dfm::{InitialState, StateSpaceParams};

/// Joint distribution of every observed entry and every state, built by
/// brute force from the model equations.
pub struct StackedGaussian {
    /// Mean and covariance of the observed entries, stacked period by period.
    pub obs_mean: DVector<f64>,
    pub obs_cov: DMatrix<f64>,
    /// Means of `F_1 … F_T` stacked, and their cross-covariance with the observed entries.
    pub state_mean: DVector<f64>,
    pub state_obs_cov: DMatrix<f64>,
    pub obs_values: DVector<f64>,
}

pub fn stacked_gaussian(p: &StateSpaceParams, data: &DMatrix<f64>, init: &InitialState) -> StackedGaussian {
    let (n, m) = data.shape();
    let k = p.n_factors();
    let tm = &p.transition;

    // Means and covariances of F_0 … F_n; cov[t][s] = Cov(F_t, F_s).
    let mut means = vec![DVector::from_column_slice(&init.mean)];
    let mut var = vec![init.cov.clone()];
    for t in 1..=n {
        means.push(tm * &means[t - 1]);
        var.push(tm * &var[t - 1] * tm.transpose() + &p.state_cov);
    }
    let mut powers = vec![DMatrix::<f64>::identity(k, k)];
    for j in 1..=n {
        powers.push(tm * &powers[j - 1]);
    }
    let cross = |t: usize, s: usize| -> DMatrix<f64> {
        if t >= s {
            &powers[t - s] * &var[s]
        } else {
            (&powers[s - t] * &var[t]).transpose()
        }
    };

    let obs: Vec<(usize, usize)> = (0..n)
        .flat_map(|t| (0..m).map(move |i| (t, i)))
        .filter(|&(t, i)| !data[(t, i)].is_nan())
        .collect();
    let d = obs.len();
    let z = &p.loadings;
    let mut obs_mean = DVector::zeros(d);
    let mut obs_cov = DMatrix::zeros(d, d);
    let mut obs_values = DVector::zeros(d);
    for (a, &(t, i)) in obs.iter().enumerate() {
        obs_values[a] = data[(t, i)];
        obs_mean[a] = z.row(i).dot(&means[t + 1].transpose());
        for (b, &(s, j)) in obs.iter().enumerate() {
            let c = z.row(i) * cross(t + 1, s + 1) * z.row(j).transpose();
            obs_cov[(a, b)] = c[(0, 0)] + if a == b { p.obs_var[i] } else { 0.0 };
        }
    }
    let mut state_mean = DVector::zeros(n * k);
    let mut state_obs_cov = DMatrix::zeros(n * k, d);
    for t in 0..n {
        state_mean.rows_mut(t * k, k).copy_from(&means[t + 1]);
        for (b, &(s, j)) in obs.iter().enumerate() {
            let c = cross(t + 1, s + 1) * z.row(j).transpose();
            state_obs_cov.view_mut((t * k, b), (k, 1)).copy_from(&c);
        }
    }
    StackedGaussian {
        obs_mean,
        obs_cov,
        state_mean,
        state_obs_cov,
        obs_values,
    }
}

impl StackedGaussian {
    pub fn log_density(&self) -> f64 {
        let d = self.obs_values.len();
        if d == 0 {
            return 0.0;
        }
        let chol = self.obs_cov.clone().cholesky().expect("oracle covariance is SPD");
        let r = &self.obs_values - &self.obs_mean;
        let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        -0.5 * (log_det + r.dot(&chol.solve(&r)) + d as f64 * (2.0 * PI).ln())
    }

    /// `E[F_t | observed]` as a T×K matrix.
    pub fn conditional_state_means(&self, k: usize) -> DMatrix<f64> {
        let n = self.state_mean.len() / k;
        let adj = if self.obs_values.is_empty() {
            DVector::zeros(n * k)
        } else {
            let chol = self.obs_cov.clone().cholesky().expect("oracle covariance is SPD");
            &self.state_obs_cov * chol.solve(&(&self.obs_values - &self.obs_mean))
        };
        let m = &self.state_mean + adj;
        DMatrix::from_fn(n, k, |t, j| m[t * k + j])
    }
}

/// Stationary covariance by fixed-point iteration of `Π ← TΠT' + Q`.
pub fn stationary_cov_by_iteration(p: &StateSpaceParams) -> DMatrix<f64> {
    let mut pi = p.state_cov.clone();
    for _ in 0..20_000 {
        let next = &p.transition * &pi * p.transition.transpose() + &p.state_cov;
        if (&next - &pi).amax() < 1e-15 {
            return next;
        }
        pi = next;
    }
    pi
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

/// Random stable system with `m` series and `k` factors.
pub fn random_system(rng: &mut ChaCha8Rng, m: usize, k: usize) -> StateSpaceParams {
    let z = gaussian_matrix(rng, m, k);
    let mut tm = gaussian_matrix(rng, k, k) * 0.5;
    let rho = tm
        .complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    if rho > 0.9 {
        tm *= 0.9 / rho;
    }
    let a = gaussian_matrix(rng, k, k);
    let q = &a * a.transpose() + DMatrix::identity(k, k) * 0.2;
    let r = DVector::from_fn(m, |_, _| rng.random_range(0.1..1.5));
    StateSpaceParams::new(z, tm, r, q).unwrap()
}

/// Random SPD initial state.
pub fn random_init(rng: &mut ChaCha8Rng, k: usize) -> InitialState {
    let a = gaussian_matrix(rng, k, k);
    InitialState {
        mean: (0..k).map(|_| rng.random_range(-1.0..1.0)).collect(),
        cov: &a * a.transpose() + DMatrix::identity(k, k) * 0.3,
    }
}

/// Random data with roughly `missing_rate` of the entries set to `NaN`.
pub fn random_data(rng: &mut ChaCha8Rng, n: usize, m: usize, missing_rate: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| {
        if rng.random::<f64>() < missing_rate {
            f64::NAN
        } else {
            StandardNormal.sample(rng)
        }
    })
}

/// Canonical correlations between the column spaces of two T×K matrices,
/// largest first.
pub fn canonical_correlations(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let center = |x: &DMatrix<f64>| {
        let mut c = x.clone();
        for j in 0..c.ncols() {
            let mu = c.column(j).mean();
            c.column_mut(j).add_scalar_mut(-mu);
        }
        c
    };
    let qa = center(a).qr().q();
    let qb = center(b).qr().q();
    let mut sv: Vec<f64> = (qa.transpose() * qb).singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// A 19-series, 3-factor system with well separated factors.
pub fn three_factor_truth() -> StateSpaceParams {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let m = 19;
    let z = DMatrix::from_fn(m, 3, |i, j| {
        let base: f64 = StandardNormal.sample(&mut rng);
        // Each factor loads mainly on its own block of series.
        if i % 3 == j {
            1.0 + 0.3 * base
        } else {
            0.3 * base
        }
    });
    let tm = DMatrix::from_row_slice(3, 3, &[0.7, 0.1, 0.0, 0.0, 0.5, 0.1, 0.0, 0.0, 0.3]);
    let r = DVector::from_fn(m, |_, _| rng.random_range(0.3..0.6));
    StateSpaceParams::new(z, tm, r, DMatrix::identity(3, 3)).unwrap()
}

/// Return panel of `n_assets` columns `a1 …` on a monthly axis from 2000-02.
pub fn return_panel(data: &DMatrix<f64>) -> macroprice::panel::Panel {
    let names: Vec<String> = (1..=data.ncols()).map(|i| format!("a{i}")).collect();
    macroprice::panel::Panel::from_matrix(&names, macroprice::panel::Month::new(2000, 2).unwrap(), data)
        .unwrap()
}

/// Premia used as design values for the pricing fixture.
pub const DESIGN_PREMIA: [f64; 4] = [0.3014, 0.1693, 0.1031, 0.0676];
pub const DESIGN_INTERCEPT: f64 = 0.002;

pub struct PricingFixture {
    pub returns: DMatrix<f64>,
    /// Factor shocks with zero sample mean, T×K.
    pub factors: DMatrix<f64>,
    pub betas: DMatrix<f64>,
    /// Standard deviation of each asset's non-factor return component.
    pub noise_sd: Vec<f64>,
}

/// Exact-pricing panel: `R_it = λ0 + β_i'(λ + f_t) + (Γ g_t)_i + ε_it`.
/// The unpriced shocks `g_t` load on an orthonormal basis `Γ` of the
/// complement of `[1, β]`, so they widen the cross-sectional dispersion the
/// betas cannot explain without biasing the premia.
pub fn pricing_fixture(
    seed: u64,
    n_assets: usize,
    t_obs: usize,
    factor_sd: f64,
    idio_sd: f64,
    unpriced_sd: f64,
) -> PricingFixture {
    let k = DESIGN_PREMIA.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let betas = DMatrix::from_fn(n_assets, k, |_, _| 1.0 + 0.5 * normal(&mut rng));
    let x = betas.clone().insert_column(0, 1.0);
    let q = x.qr().q();
    let resid = DMatrix::<f64>::identity(n_assets, n_assets) - &q * q.transpose();
    let eig = resid.symmetric_eigen();
    let cols: Vec<DVector<f64>> = (0..n_assets)
        .filter(|&j| eig.eigenvalues[j] > 0.5)
        .map(|j| eig.eigenvectors.column(j).clone_owned())
        .collect();
    let basis = DMatrix::from_columns(&cols);

    let lambda = DVector::from_row_slice(&DESIGN_PREMIA);
    let mut factors = DMatrix::from_fn(t_obs, k, |_, _| factor_sd * normal(&mut rng));
    // Centred shocks make the design premia the realised ones.
    for mut c in factors.column_iter_mut() {
        let m = c.mean();
        c.add_scalar_mut(-m);
    }
    let mut returns = DMatrix::zeros(t_obs, n_assets);
    for t in 0..t_obs {
        let g = DVector::from_fn(basis.ncols(), |_, _| unpriced_sd * normal(&mut rng));
        let common = &basis * g;
        let lt = &lambda + factors.row(t).transpose();
        for i in 0..n_assets {
            let e = idio_sd * normal(&mut rng);
            returns[(t, i)] = DESIGN_INTERCEPT + betas.row(i).dot(&lt.transpose()) + common[i] + e;
        }
    }
    let noise_sd = (0..n_assets)
        .map(|i| (basis.row(i).norm_squared() * unpriced_sd.powi(2) + idio_sd.powi(2)).sqrt())
        .collect();
    PricingFixture {
        returns,
        factors,
        betas,
        noise_sd,
    }
}

/// Market excess returns and one country with `beta` and population R² `r2`.
pub fn capm_fixture(seed: u64, t_obs: usize, beta: f64, r2: f64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let market_sd = 0.045;
    let idio_sd = beta * market_sd * (1.0 / r2 - 1.0).sqrt();
    let market: Vec<f64> = (0..t_obs).map(|_| 0.005 + market_sd * normal(&mut rng)).collect();
    let country = market
        .iter()
        .map(|m| beta * m + idio_sd * normal(&mut rng))
        .collect();
    (market, country)
}

/// AR(1) path started from its stationary distribution.
pub fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64) -> Vec<f64> {
    let mut x: f64 = normal(rng) / (1.0 - phi * phi).sqrt();
    (0..n)
        .map(|_| {
            x = phi * x + normal(rng);
            x
        })
        .collect()
}

pub fn random_walk(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            x += normal(rng);
            x
        })
        .collect()
}

pub fn white_noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Stationary AR(0.5) with a level shift of `shift` from index `at` on.
pub fn planted_break(seed: u64, n: usize, at: usize, shift: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ar1(&mut rng, n, 0.5)
        .into_iter()
        .enumerate()
        .map(|(t, v)| v + if t >= at { shift } else { 0.0 })
        .collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}
