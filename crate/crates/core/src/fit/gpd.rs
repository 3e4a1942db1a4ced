//! GPD maximum likelihood on exceedances over a fixed threshold.

use crate::dist::GpdParams;
use crate::error::{Error, Result};
use crate::fit::{OptimizerConfig, XI_MAX, XI_MIN};
use crate::optim::nelder_mead_restarts;
use crate::stats::mean;

/// Negative log-likelihood of exceedances under GPD(sigma, xi).
pub(crate) fn gpd_nll(excesses: &[f64], sigma: f64, xi: f64) -> f64 {
    if !(sigma > 0.0) || !sigma.is_finite() || xi <= XI_MIN || xi > XI_MAX {
        return f64::INFINITY;
    }
    let n = excesses.len() as f64;
    let ln_sigma = sigma.ln();
    if xi.abs() < crate::dist::XI_ZERO_EPS {
        let sum: f64 = excesses.iter().sum();
        return n * ln_sigma + sum / sigma;
    }
    let mut nll = n * ln_sigma;
    let c = 1.0 / xi + 1.0;
    for &y in excesses {
        let t = 1.0 + xi * y / sigma;
        if t <= 0.0 {
            return f64::INFINITY;
        }
        nll += c * t.ln();
    }
    nll
}

/// Fit (sigma_u, xi) to the exceedances of `data` over `u` by maximum
/// likelihood, constrained to sigma_u > 0 and xi in (-1, 5].
///
/// Returns the fitted parameters and the attained log-likelihood.
pub fn fit_gpd(
    data: &[f64],
    u: f64,
    min_exceedances: usize,
    opt: &OptimizerConfig,
) -> Result<(GpdParams, f64)> {
    opt.validate()?;
    let excesses: Vec<f64> = data.iter().filter(|&&x| x > u).map(|&x| x - u).collect();
    if excesses.len() < min_exceedances.max(1) {
        return Err(Error::TooFewExceedances {
            threshold: u,
            found: excesses.len(),
            required: min_exceedances.max(1),
        });
    }
    // exponential-fit start
    let sigma0 = mean(&excesses).max(f64::MIN_POSITIVE);
    let x0 = [sigma0.ln(), 0.1];
    let steps = [0.3, 0.15];
    let mut obj = |p: &[f64]| {
        let sigma = p[0].clamp(-300.0, 300.0).exp();
        gpd_nll(&excesses, sigma, p[1])
    };
    let res = nelder_mead_restarts(&mut obj, &x0, &steps, &opt.simplex(), opt.restarts);
    if !res.converged || !res.fx.is_finite() {
        return Err(Error::NonConvergence(format!(
            "GPD fit above u={u} did not converge"
        )));
    }
    let params = GpdParams::new(u, res.x[0].exp(), res.x[1])?;
    Ok((params, -res.fx))
}
