//! Value-at-Risk and Expected Shortfall estimators.
//!
//! VaR at level alpha is the alpha-quantile of the loss distribution; ES is
//! the average loss beyond it, computed here as the quantile-function
//! integral (1/(1-alpha)) * int_alpha^1 VaR_g dg. The integral is evaluated
//! after the change of variable g = 1 - (1-alpha) e^{-t}, which turns the
//! endpoint singularity into an exponentially damped integrand for any tail
//! with shape xi < 1.

use serde::Serialize;

use crate::dist::{BulkFamily, GpdParams};
use crate::error::{Error, Result};
use crate::mixture::{FittedMixture, MixtureSpec};
use crate::quad::adaptive_simpson;
use crate::timeseries::GarchFit;

/// Confidence level in (0, 1), e.g. 0.99.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskLevel(f64);

impl RiskLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(Error::ProbabilityOutOfRange(alpha));
        }
        Ok(Self(alpha))
    }

    pub fn alpha(&self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RiskMethod {
    Empirical,
    Model,
    MonteCarlo,
    TwoStep,
}

/// A VaR/ES pair in loss units. ES >= VaR whenever both are finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskReport {
    pub var: f64,
    pub es: f64,
    pub method: RiskMethod,
    pub alpha: f64,
}

/// Anything with a quantile function and an inverse-CDF sampler can serve
/// as a loss model for VaR/ES.
pub trait RiskModel {
    fn quantile(&self, p: f64) -> Result<f64>;
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>>;
    /// Quantile from the survival probability `s = 1 - p`; models with an
    /// explicit tail override this so deep-tail evaluation stays exact.
    fn quantile_sf(&self, s: f64) -> Result<f64> {
        self.quantile(1.0 - s)
    }
    /// Shape of the upper tail, when the model has a GPD tail; used to
    /// refuse the ES integral for non-integrable tails.
    fn upper_tail_shape(&self) -> Option<f64> {
        None
    }
}

impl RiskModel for GpdParams {
    fn quantile(&self, p: f64) -> Result<f64> {
        GpdParams::quantile(self, p)
    }
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        GpdParams::sample(self, n, seed)
    }
    fn quantile_sf(&self, s: f64) -> Result<f64> {
        GpdParams::quantile_sf(self, s)
    }
    fn upper_tail_shape(&self) -> Option<f64> {
        Some(self.xi)
    }
}

impl RiskModel for BulkFamily {
    fn quantile(&self, p: f64) -> Result<f64> {
        BulkFamily::quantile(self, p)
    }
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        BulkFamily::sample(self, n, seed)
    }
}

impl RiskModel for MixtureSpec {
    fn quantile(&self, p: f64) -> Result<f64> {
        MixtureSpec::quantile(self, p)
    }
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        MixtureSpec::sample(self, n, seed)
    }
    fn quantile_sf(&self, s: f64) -> Result<f64> {
        MixtureSpec::quantile_sf(self, s)
    }
    fn upper_tail_shape(&self) -> Option<f64> {
        Some(self.upper_tail().xi)
    }
}

impl RiskModel for FittedMixture {
    fn quantile(&self, p: f64) -> Result<f64> {
        self.spec.quantile(p)
    }
    fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.spec.sample(n, seed)
    }
    fn quantile_sf(&self, s: f64) -> Result<f64> {
        self.spec.quantile_sf(s)
    }
    fn upper_tail_shape(&self) -> Option<f64> {
        Some(self.spec.upper_tail().xi)
    }
}

/// Order-statistic VaR: the ceil(n*alpha)-th smallest loss, no
/// interpolation, exact on ties.
pub fn var_empirical(losses: &[f64], alpha: RiskLevel) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::EmptySample);
    }
    if losses.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParam("losses must be finite".to_string()));
    }
    let sorted = crate::stats::sorted(losses);
    let n = sorted.len();
    let k = ((n as f64) * alpha.alpha()).ceil() as usize;
    let k = k.clamp(1, n);
    Ok(sorted[k - 1])
}

/// Mean of all losses at or above the empirical VaR.
pub fn es_empirical(losses: &[f64], alpha: RiskLevel) -> Result<f64> {
    let var = var_empirical(losses, alpha)?;
    let (sum, count) = losses
        .iter()
        .filter(|&&x| x >= var)
        .fold((0.0, 0usize), |(s, c), &x| (s + x, c + 1));
    if count == 0 {
        return Err(Error::EmptySample);
    }
    Ok(sum / count as f64)
}

/// Model VaR: the alpha-quantile of the fitted model.
pub fn var_model(model: &dyn RiskModel, alpha: RiskLevel) -> Result<f64> {
    model.quantile(alpha.alpha())
}

/// ES by adaptive quadrature of the quantile function.
///
/// Fails with a non-integrable-tail error when the model's GPD tail has
/// xi >= 1 (the mean of the exceedances diverges).
pub fn es_numeric(model: &dyn RiskModel, alpha: RiskLevel) -> Result<f64> {
    if let Some(xi) = model.upper_tail_shape() {
        if xi >= 1.0 {
            return Err(Error::NonIntegrableTail { xi });
        }
    }
    let a = alpha.alpha();
    // ES = int_0^inf Q(1 - (1-a) e^{-t}) e^{-t} dt, with the survival
    // probability s = (1-a) e^{-t} carried exactly
    let integrand = |t: f64| -> f64 {
        let s = ((1.0 - a) * (-t).exp()).max(1e-300);
        match model.quantile_sf(s) {
            Ok(q) => q * (-t).exp(),
            Err(_) => f64::NAN,
        }
    };
    let seg = 6.0;
    let mut total: f64 = 0.0;
    let mut t0 = 0.0;
    for k in 0..200 {
        let piece = adaptive_simpson(&integrand, t0, t0 + seg, 1e-11 * (1.0 + total.abs()));
        if piece.is_nan() {
            return Err(Error::NonConvergence(
                "expected-shortfall quadrature hit an unevaluable quantile".to_string(),
            ));
        }
        total += piece;
        t0 += seg;
        if k > 2 && piece.abs() <= 1e-12 * (1.0 + total.abs()) {
            return Ok(total);
        }
    }
    Err(Error::NonConvergence(
        "expected-shortfall quadrature did not settle".to_string(),
    ))
}

/// Empirical VaR over `n` model draws; deterministic per seed.
pub fn var_monte_carlo(
    model: &dyn RiskModel,
    alpha: RiskLevel,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if n < 100 {
        return Err(Error::InvalidParam(format!(
            "Monte Carlo VaR needs n >= 100 draws, got {n}"
        )));
    }
    let draws = model.sample(n, seed)?;
    var_empirical(&draws, alpha)
}

/// Conditional one-step VaR/ES from a fitted GARCH filter and a residual
/// model: VaR = mu_{T+1} + sigma_{T+1} z_alpha, ES likewise with the
/// residual ES.
pub fn two_step_var_es(
    garch: &GarchFit,
    residual_model: &FittedMixture,
    last_return: f64,
    alpha: RiskLevel,
) -> Result<RiskReport> {
    let (mu_next, sigma_next) = garch.forecast1(last_return);
    let z_var = residual_model.quantile(alpha.alpha())?;
    let z_es = es_numeric(residual_model, alpha)?;
    Ok(RiskReport {
        var: mu_next + sigma_next * z_var,
        es: mu_next + sigma_next * z_es,
        method: RiskMethod::TwoStep,
        alpha: alpha.alpha(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(a: f64) -> RiskLevel {
        RiskLevel::new(a).unwrap()
    }

    #[test]
    fn risk_level_validates() {
        assert!(RiskLevel::new(0.0).is_err());
        assert!(RiskLevel::new(1.0).is_err());
        assert!(RiskLevel::new(0.99).is_ok());
    }

    #[test]
    fn empirical_var_is_order_statistic() {
        let losses: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(var_empirical(&losses, level(0.95)).unwrap(), 95.0);
        assert_eq!(var_empirical(&[5.0], level(0.5)).unwrap(), 5.0);
        assert_eq!(var_empirical(&[5.0], level(0.999)).unwrap(), 5.0);
        assert!(matches!(
            var_empirical(&[], level(0.9)),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn empirical_es_averages_the_tail() {
        let losses: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let es = es_empirical(&losses, level(0.95)).unwrap();
        assert!((es - 97.5).abs() < 1e-12);
        assert_eq!(es_empirical(&[5.0], level(0.9)).unwrap(), 5.0);
    }

    #[test]
    fn translation_and_scale_equivariance() {
        let losses: Vec<f64> = vec![3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.3, 5.9];
        let a = level(0.9);
        let base = var_empirical(&losses, a).unwrap();
        let shifted: Vec<f64> = losses.iter().map(|x| x + 10.0).collect();
        assert_eq!(var_empirical(&shifted, a).unwrap(), base + 10.0);
        let scaled: Vec<f64> = losses.iter().map(|x| 2.5 * x).collect();
        assert_eq!(var_empirical(&scaled, a).unwrap(), 2.5 * base);
    }

    #[test]
    fn model_var_exponential_tail() {
        let g = GpdParams::new(0.0, 1.0, 0.0).unwrap();
        let v = var_model(&g, level(0.99)).unwrap();
        assert!((v - (-(0.01f64).ln())).abs() < 1e-10);

        let n = BulkFamily::normal(0.0, 4.0).unwrap();
        assert!(var_model(&n, level(0.5)).unwrap().abs() < 1e-9);
    }

    #[test]
    fn es_matches_memoryless_identity() {
        let g = GpdParams::new(0.0, 1.0, 0.0).unwrap();
        let a = level(0.99);
        let es = es_numeric(&g, a).unwrap();
        let var = var_model(&g, a).unwrap();
        assert!((es - (var + 1.0)).abs() < 1e-6, "es = {es}, var = {var}");
    }

    #[test]
    fn es_matches_mean_excess_identity() {
        for &xi in &[-0.3, 0.0, 0.2, 0.5] {
            for &a in &[0.9, 0.99] {
                let g = GpdParams::new(0.0, 1.0, xi).unwrap();
                let alpha = level(a);
                let var = var_model(&g, alpha).unwrap();
                let es = es_numeric(&g, alpha).unwrap();
                let expect = var + (1.0 + xi * (var - 0.0)) / (1.0 - xi);
                assert!(
                    (es - expect).abs() < 1e-6,
                    "xi={xi}, alpha={a}: es {es} vs {expect}"
                );
                assert!(es >= var);
            }
        }
    }

    #[test]
    fn es_refuses_non_integrable_tail() {
        let g = GpdParams::new(0.0, 1.0, 1.2).unwrap();
        assert!(matches!(
            es_numeric(&g, level(0.99)),
            Err(Error::NonIntegrableTail { .. })
        ));
    }

    #[test]
    fn monte_carlo_var_is_deterministic_and_close() {
        let g = GpdParams::new(0.0, 1.0, 0.0).unwrap();
        let a = level(0.99);
        let v1 = var_monte_carlo(&g, a, 200_000, 77).unwrap();
        let v2 = var_monte_carlo(&g, a, 200_000, 77).unwrap();
        assert_eq!(v1, v2);
        assert!((v1 - 4.60517).abs() < 0.05, "mc var {v1}");
        assert!(var_monte_carlo(&g, a, 10, 77).is_err());
    }

    #[test]
    fn two_step_reduces_to_residual_model_when_unit_variance() {
        use crate::dist::BulkFamily;
        use crate::mixture::{MixtureKind, MixtureSpec, TailFractionMode};
        use crate::timeseries::{GarchFit, GarchParams};

        let spec = MixtureSpec::single_tail(
            MixtureKind::NormGpd,
            BulkFamily::normal(0.0, 1.0).unwrap(),
            GpdParams::new(1.2816, 1.0, 0.1).unwrap(),
            TailFractionMode::BulkBased,
        )
        .unwrap();
        let fitted = FittedMixture {
            spec,
            log_likelihood: 0.0,
            n_exceed_upper: 0,
            n_exceed_lower: None,
            converged: true,
        };
        // alpha1 = beta1 = 0, alpha0 = 1 pins sigma_{T+1} = 1 and mu = 0
        let params = GarchParams::new(0.0, 1.0, 0.0, 0.0).unwrap();
        let garch = GarchFit {
            params,
            cond_sd: vec![1.0],
            residuals: vec![0.0],
            log_likelihood: 0.0,
        };
        let a = level(0.99);
        let r = two_step_var_es(&garch, &fitted, 0.37, a).unwrap();
        let var_z = fitted.quantile(0.99).unwrap();
        let es_z = es_numeric(&fitted, a).unwrap();
        assert!((r.var - var_z).abs() < 1e-12);
        assert!((r.es - es_z).abs() < 1e-12);
        assert!(r.es >= r.var);

        // doubling sigma doubles the centered risk numbers
        let params2 = GarchParams::new(0.0, 4.0, 0.0, 0.0).unwrap();
        let garch2 = GarchFit {
            params: params2,
            cond_sd: vec![2.0],
            residuals: vec![0.0],
            log_likelihood: 0.0,
        };
        let r2 = two_step_var_es(&garch2, &fitted, 0.37, a).unwrap();
        assert!((r2.var - 2.0 * r.var).abs() < 1e-9);
        assert!((r2.es - 2.0 * r.es).abs() < 1e-9);
    }
}
