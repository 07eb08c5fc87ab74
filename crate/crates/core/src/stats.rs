//! Small descriptive-statistics kernels.

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with the `n − 1` denominator. `None` for fewer than 2 values.
pub fn sample_variance(x: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let m = mean(x);
    Some(x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64)
}

pub fn sample_sd(x: &[f64]) -> Option<f64> {
    sample_variance(x).map(f64::sqrt)
}

/// Newey–West automatic bandwidth `⌊4 · (n/100)^{2/9}⌋`.
pub fn newey_west_bandwidth(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Bartlett-kernel long-run variance of an already-demeaned series:
/// `γ₀ + 2 Σ_{j=1}^{L} (1 − j/(L+1)) γ_j` with `γ_j = (1/n) Σ e_t e_{t−j}`.
pub fn bartlett_long_run_variance(resid: &[f64], lags: usize) -> f64 {
    let n = resid.len();
    let autocov =
        |j: usize| -> f64 { resid[j..].iter().zip(resid).map(|(a, b)| a * b).sum::<f64>() / n as f64 };
    let mut lrv = autocov(0);
    for j in 1..=lags.min(n.saturating_sub(1)) {
        let w = 1.0 - j as f64 / (lags as f64 + 1.0);
        lrv += 2.0 * w * autocov(j);
    }
    lrv
}
