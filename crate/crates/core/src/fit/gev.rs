//! GEV maximum likelihood on block maxima.

use crate::dist::GevParams;
use crate::error::{Error, Result};
use crate::fit::{OptimizerConfig, XI_MAX, XI_MIN};
use crate::optim::nelder_mead_restarts;
use crate::stats::{mean, sample_sd};

const MIN_BLOCKS: usize = 20;

fn gev_nll(maxima: &[f64], mu: f64, sigma: f64, xi: f64) -> f64 {
    if !(sigma > 0.0) || !sigma.is_finite() || xi <= XI_MIN || xi > XI_MAX {
        return f64::INFINITY;
    }
    let ln_sigma = sigma.ln();
    let mut nll = 0.0;
    if xi.abs() < crate::dist::XI_ZERO_EPS {
        for &x in maxima {
            let z = (x - mu) / sigma;
            nll += ln_sigma + z + (-z).exp();
        }
        return nll;
    }
    let c = 1.0 / xi + 1.0;
    for &x in maxima {
        let t = 1.0 + xi * (x - mu) / sigma;
        if t <= 0.0 {
            return f64::INFINITY;
        }
        let ln_t = t.ln();
        nll += ln_sigma + c * ln_t + (-ln_t / xi).exp();
    }
    nll
}

/// Split `data` into consecutive blocks of `block_size`, discard the partial
/// trailing block, and fit GEV(mu, sigma, xi) to the block maxima.
pub fn fit_gev_blocks(
    data: &[f64],
    block_size: usize,
    opt: &OptimizerConfig,
) -> Result<(GevParams, f64)> {
    opt.validate()?;
    if block_size == 0 {
        return Err(Error::InvalidParam("block size must be >= 1".to_string()));
    }
    let maxima: Vec<f64> = data
        .chunks_exact(block_size)
        .map(|b| b.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    if maxima.len() < MIN_BLOCKS {
        return Err(Error::TooFewBlocks {
            found: maxima.len(),
            required: MIN_BLOCKS,
        });
    }
    // Gumbel method-of-moments start
    let sd = sample_sd(&maxima).max(1e-10);
    let sigma0 = sd * 6.0_f64.sqrt() / std::f64::consts::PI;
    let mu0 = mean(&maxima) - 0.5772 * sigma0;
    let x0 = [mu0, sigma0.ln(), 0.1];
    let steps = [0.25 * sigma0.max(1e-3), 0.3, 0.15];
    let mut obj = |p: &[f64]| gev_nll(&maxima, p[0], p[1].clamp(-300.0, 300.0).exp(), p[2]);
    let res = nelder_mead_restarts(&mut obj, &x0, &steps, &opt.simplex(), opt.restarts);
    if !res.converged || !res.fx.is_finite() {
        return Err(Error::NonConvergence(
            "GEV block-maxima fit did not converge".to_string(),
        ));
    }
    let params = GevParams::new(res.x[0], res.x[1].exp(), res.x[2])?;
    Ok((params, -res.fx))
}
