//! Leave-one-out cross-validation bandwidth for the Gaussian kernel bulk.

use crate::error::{Error, Result};
use crate::optim::golden_section_min;
use crate::stats::sample_sd;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Negative leave-one-out log-likelihood at bandwidth `lambda`.
fn loo_nll(data: &[f64], lambda: f64) -> f64 {
    let n = data.len();
    let inv_l = 1.0 / lambda;
    let mut ll = 0.0;
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let z = (data[i] - data[j]) * inv_l;
            s += (-0.5 * z * z).exp();
        }
        if s <= 0.0 {
            return f64::INFINITY;
        }
        ll += s.ln() - LN_SQRT_2PI - lambda.ln() - ((n - 1) as f64).ln();
    }
    -ll
}

/// Bandwidth maximizing the leave-one-out cross-validation likelihood, found
/// by golden-section search on log(lambda) over [1e-3 s, 10 s] with s the
/// sample standard deviation.
pub fn kde_cv_bandwidth(data: &[f64]) -> Result<f64> {
    if data.len() < 10 {
        return Err(Error::InvalidParam(format!(
            "cross-validation bandwidth needs at least 10 points, got {}",
            data.len()
        )));
    }
    let s = sample_sd(data);
    if !(s > 0.0) {
        return Err(Error::DegenerateSample(
            "all observations are equal".to_string(),
        ));
    }
    let lo = (1e-3 * s).ln();
    let hi = (10.0 * s).ln();
    let mut obj = |t: f64| loo_nll(data, t.exp());
    let t = golden_section_min(&mut obj, lo, hi, 1e-10, 300);
    Ok(t.exp())
}
