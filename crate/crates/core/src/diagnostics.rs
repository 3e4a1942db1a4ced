//! Fixed-threshold graphical diagnostics: mean residual life and threshold
//! stability tables, ready to plot.

use serde::Serialize;

use crate::fit::{fit_gpd, OptimizerConfig, MIN_EXCEEDANCES};
use crate::stats::{empirical_quantile_sorted, mean, sample_sd, sorted};

/// Mean excess over a threshold with a normal-approximation interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MrlPoint {
    pub u: f64,
    pub mean_excess: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_exceed: usize,
}

/// Per-threshold GPD fit: shape and modified scale (sigma_u - u xi) with
/// delta-method intervals from the numeric Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityPoint {
    pub u: f64,
    pub xi_hat: f64,
    pub xi_low: f64,
    pub xi_high: f64,
    pub modified_scale: f64,
    pub scale_low: f64,
    pub scale_high: f64,
    pub n_exceed: usize,
}

/// A threshold that was dropped from a diagnostic, and why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedThreshold {
    pub u: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MrlReport {
    pub points: Vec<MrlPoint>,
    pub skipped: Vec<SkippedThreshold>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub points: Vec<StabilityPoint>,
    pub skipped: Vec<SkippedThreshold>,
}

/// Default diagnostic grid: 40 thresholds at empirical quantiles 0 to 0.975.
pub fn default_threshold_grid(data: &[f64]) -> Vec<f64> {
    let s = sorted(data);
    let count = 40;
    (0..count)
        .map(|i| empirical_quantile_sorted(&s, 0.975 * i as f64 / (count - 1) as f64))
        .collect()
}

/// Mean residual life: for each threshold, the average excess of the
/// observations above it, with mean +- 1.96 sd/sqrt(n) bounds. Grid points
/// keeping fewer than two exceedances are skipped and flagged.
pub fn mean_residual_life(data: &[f64], grid: &[f64]) -> MrlReport {
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    for &u in &grid {
        let excesses: Vec<f64> = data.iter().filter(|&&x| x > u).map(|&x| x - u).collect();
        if excesses.len() < 2 {
            skipped.push(SkippedThreshold {
                u,
                reason: format!("{} exceedances < 2", excesses.len()),
            });
            continue;
        }
        let m = mean(&excesses);
        let half = 1.96 * sample_sd(&excesses) / (excesses.len() as f64).sqrt();
        points.push(MrlPoint {
            u,
            mean_excess: m,
            ci_low: m - half,
            ci_high: m + half,
            n_exceed: excesses.len(),
        });
    }
    MrlReport { points, skipped }
}

/// Central-difference Hessian of the GPD negative log-likelihood at the
/// fitted (sigma, xi), inverted to a covariance matrix.
fn gpd_covariance(excesses: &[f64], sigma: f64, xi: f64) -> Option<[[f64; 2]; 2]> {
    let f = |s: f64, x: f64| crate::fit::gpd_nll_at(excesses, s, x);
    let hs = (1e-5 * sigma).max(1e-9);
    let hx = 1e-5;
    let f00 = f(sigma, xi);
    let dss = (f(sigma + hs, xi) - 2.0 * f00 + f(sigma - hs, xi)) / (hs * hs);
    let dxx = (f(sigma, xi + hx) - 2.0 * f00 + f(sigma, xi - hx)) / (hx * hx);
    let dsx = (f(sigma + hs, xi + hx) - f(sigma + hs, xi - hx) - f(sigma - hs, xi + hx)
        + f(sigma - hs, xi - hx))
        / (4.0 * hs * hx);
    if !dss.is_finite() || !dxx.is_finite() || !dsx.is_finite() {
        return None;
    }
    let det = dss * dxx - dsx * dsx;
    if !(det > 0.0) || !(dss > 0.0) {
        return None; // Hessian not positive definite
    }
    Some([[dxx / det, -dsx / det], [-dsx / det, dss / det]])
}

/// Threshold stability: fit a GPD above each grid point and report the
/// shape and the modified scale sigma_u - u xi. Fit failures are flagged,
/// not fatal.
pub fn threshold_stability(
    data: &[f64],
    grid: &[f64],
    min_exceedances: usize,
    opt: &OptimizerConfig,
) -> StabilityReport {
    let min_exceedances = min_exceedances.max(MIN_EXCEEDANCES);
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    for &u in &grid {
        let fit = match fit_gpd(data, u, min_exceedances, opt) {
            Ok(f) => f,
            Err(e) => {
                skipped.push(SkippedThreshold {
                    u,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let (params, _) = fit;
        let excesses: Vec<f64> = data.iter().filter(|&&x| x > u).map(|&x| x - u).collect();
        let cov = match gpd_covariance(&excesses, params.sigma_u, params.xi) {
            Some(c) => c,
            None => {
                skipped.push(SkippedThreshold {
                    u,
                    reason: "information matrix not positive definite".to_string(),
                });
                continue;
            }
        };
        let var_sigma = cov[0][0];
        let var_xi = cov[1][1];
        let cov_sx = cov[0][1];
        let modified_scale = params.sigma_u - u * params.xi;
        // delta method for g(sigma, xi) = sigma - u xi
        let var_mod = var_sigma - 2.0 * u * cov_sx + u * u * var_xi;
        let half_xi = 1.96 * var_xi.max(0.0).sqrt();
        let half_mod = 1.96 * var_mod.max(0.0).sqrt();
        points.push(StabilityPoint {
            u,
            xi_hat: params.xi,
            xi_low: params.xi - half_xi,
            xi_high: params.xi + half_xi,
            modified_scale,
            scale_low: modified_scale - half_mod,
            scale_high: modified_scale + half_mod,
            n_exceed: excesses.len(),
        });
    }
    StabilityReport { points, skipped }
}
