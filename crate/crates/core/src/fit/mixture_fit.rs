//! Mixture-model fitting with the threshold treated as a parameter.
//!
//! The threshold is profiled over a grid of empirical quantiles: the
//! likelihood is piecewise in u (only n distinct exceedance sets exist), so
//! a data-quantile grid is exhaustive up to its resolution and keeps the
//! search reproducible. At each candidate threshold the remaining
//! parameters are maximized with the derivative-free simplex; the
//! full-sample log-likelihood (every observation, bulk and tail) is the
//! profile objective. Scales are searched in log space and tail fractions
//! through a logit so simplex iterates stay feasible.

use std::time::Instant;

use serde::Serialize;

use crate::dist::{BulkFamily, GpdParams};
use crate::error::{Error, Result};
use crate::fit::{
    kde_cv_bandwidth, FitReport, OptimizerConfig, ProfilePoint, ThresholdSearchConfig, XI_MAX,
    XI_MIN,
};
use crate::mixture::{FittedMixture, MixtureKind, MixtureSpec, TailFractionMode};
use crate::optim::nelder_mead_restarts;
use crate::stats::{empirical_quantile_sorted, mean, sample_sd, sorted};

/// Whether the tail fraction is taken from the bulk CDF or estimated as a
/// free parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitTailFraction {
    BulkBased,
    Parameterized,
}

/// What to fit: a mixture kind plus the tail-fraction and continuity
/// choices. `bandwidth` pins the kernel bulk bandwidth; when `None` it is
/// chosen per fit by cross-validation.
#[derive(Debug, Clone, Serialize)]
pub struct MixtureFitConfig {
    pub kind: MixtureKind,
    pub tail_fraction: FitTailFraction,
    pub continuity: bool,
    pub bandwidth: Option<f64>,
}

impl MixtureFitConfig {
    pub fn new(kind: MixtureKind) -> Self {
        Self {
            kind,
            tail_fraction: FitTailFraction::BulkBased,
            continuity: false,
            bandwidth: None,
        }
    }

    pub fn with_continuity(mut self, continuity: bool) -> Self {
        self.continuity = continuity;
        self
    }

    pub fn with_tail_fraction(mut self, mode: FitTailFraction) -> Self {
        self.tail_fraction = mode;
        self
    }

    pub fn with_bandwidth(mut self, bandwidth: f64) -> Self {
        self.bandwidth = Some(bandwidth);
        self
    }
}

/// Shift data onto strictly positive support: every value moves by
/// `sd(x) - min(x)`, so the minimum lands one standard deviation above
/// zero. Returns the shifted sample and the shift applied; quantiles of a
/// fit on the shifted data map back by subtracting the shift.
pub fn positive_shift(data: &[f64]) -> (Vec<f64>, f64) {
    let min = data.iter().copied().fold(f64::INFINITY, f64::min);
    let sd = sample_sd(data).max(f64::MIN_POSITIVE);
    let shift = sd - min;
    (data.iter().map(|x| x + shift).collect(), shift)
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t.clamp(-40.0, 40.0)).exp())
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-6, 1.0 - 1e-6);
    (p / (1.0 - p)).ln()
}

fn exp_clamped(t: f64) -> f64 {
    t.clamp(-300.0, 50.0).exp()
}

/// Builds a `MixtureSpec` from a packed parameter vector for one threshold
/// candidate. Parameter layout, in order:
/// bulk block, hybrid shape OR tail block(s) (upper then lower), then
/// tail-fraction logits (lower then upper for GNG).
struct SpecBuilder<'a> {
    cfg: &'a MixtureFitConfig,
    u_upper: f64,
    u_lower: Option<f64>,
    kernel_bulk: Option<&'a BulkFamily>,
}

impl SpecBuilder<'_> {
    fn start(&self, data: &[f64], sorted_data: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = mean(data);
        let sd = sample_sd(data).max(1e-12);
        let mut x0 = Vec::new();
        let mut steps = Vec::new();

        match self.cfg.kind {
            MixtureKind::NormGpd | MixtureKind::Gng => {
                x0.extend([m, sd.ln()]);
                steps.extend([0.25 * sd, 0.3]);
            }
            MixtureKind::HybridPareto => {
                x0.extend([m, sd.ln()]);
                steps.extend([0.25 * sd, 0.3]);
            }
            MixtureKind::GammaGpd => {
                let v = sd * sd;
                let shape = (m * m / v).clamp(1e-2, 1e4);
                let scale = (v / m).max(1e-12);
                x0.extend([shape.ln(), scale.ln()]);
                steps.extend([0.3, 0.3]);
            }
            MixtureKind::WeibullGpd => {
                let k = (sd / m).powf(-1.086).clamp(0.1, 50.0);
                let scale = (m / statrs::function::gamma::gamma(1.0 + 1.0 / k)).max(1e-12);
                x0.extend([k.ln(), scale.ln()]);
                steps.extend([0.3, 0.3]);
            }
            MixtureKind::LognormalGpd => {
                let logs: Vec<f64> = data.iter().map(|x| x.ln()).collect();
                let lm = mean(&logs);
                let lsd = sample_sd(&logs).max(1e-12);
                x0.extend([lm, lsd.ln()]);
                steps.extend([0.25 * lsd, 0.3]);
            }
            MixtureKind::KernelGpd => {}
        }

        if self.cfg.kind == MixtureKind::HybridPareto {
            x0.push(0.1);
            steps.push(0.15);
            return (x0, steps);
        }

        // upper tail start from the mean excess
        let n = sorted_data.len();
        let above = sorted_data.partition_point(|&x| x <= self.u_upper);
        let mean_excess = if above < n {
            mean(&sorted_data[above..]) - self.u_upper
        } else {
            sd
        };
        if self.cfg.continuity {
            x0.push(0.1);
            steps.push(0.15);
        } else {
            x0.extend([mean_excess.max(1e-8).ln(), 0.1]);
            steps.extend([0.3, 0.15]);
        }

        if let Some(u_l) = self.u_lower {
            let below = sorted_data.partition_point(|&x| x < u_l);
            let mean_deficit = if below > 0 {
                u_l - mean(&sorted_data[..below])
            } else {
                sd
            };
            if self.cfg.continuity {
                x0.push(0.1);
                steps.push(0.15);
            } else {
                x0.extend([mean_deficit.max(1e-8).ln(), 0.1]);
                steps.extend([0.3, 0.15]);
            }
        }

        if self.cfg.tail_fraction == FitTailFraction::Parameterized {
            if let Some(u_l) = self.u_lower {
                let below = sorted_data.partition_point(|&x| x < u_l) as f64;
                x0.push(logit(below / n as f64));
                steps.push(0.5);
            }
            x0.push(logit((n - above) as f64 / n as f64));
            steps.push(0.5);
        }

        (x0, steps)
    }

    fn build(&self, p: &[f64]) -> Result<MixtureSpec> {
        let mut i = 0;
        let mut next = || {
            let v = p[i];
            i += 1;
            v
        };

        if self.cfg.kind == MixtureKind::HybridPareto {
            let mu = next();
            let sigma = exp_clamped(next());
            let xi = next();
            if xi <= XI_MIN || xi > XI_MAX {
                return Err(Error::InvalidParam("shape out of range".to_string()));
            }
            return if self.cfg.continuity {
                MixtureSpec::hybrid_pareto_con(mu, sigma, self.u_upper, xi)
            } else {
                MixtureSpec::hybrid_pareto(mu, sigma, xi)
            };
        }

        let bulk = match self.cfg.kind {
            MixtureKind::NormGpd | MixtureKind::Gng => {
                let m = next();
                let sd = exp_clamped(next());
                BulkFamily::normal(m, sd)?
            }
            MixtureKind::GammaGpd => {
                let shape = exp_clamped(next());
                let scale = exp_clamped(next());
                BulkFamily::gamma(shape, scale)?
            }
            MixtureKind::WeibullGpd => {
                let shape = exp_clamped(next());
                let scale = exp_clamped(next());
                BulkFamily::weibull(shape, scale)?
            }
            MixtureKind::LognormalGpd => {
                let lm = next();
                let lsd = exp_clamped(next());
                BulkFamily::log_normal(lm, lsd)?
            }
            MixtureKind::KernelGpd => self.kernel_bulk.expect("kernel bulk prepared").clone(),
            MixtureKind::HybridPareto => unreachable!(),
        };

        let mut take_tail = |u: f64, continuity: bool| -> Result<GpdParams> {
            let sigma = if continuity { 1.0 } else { exp_clamped(next()) };
            let xi = next();
            if xi <= XI_MIN || xi > XI_MAX {
                return Err(Error::InvalidParam("shape out of range".to_string()));
            }
            GpdParams::new(u, sigma, xi)
        };

        let upper = take_tail(self.u_upper, self.cfg.continuity)?;
        let lower = match self.u_lower {
            Some(u_l) => Some(take_tail(u_l, self.cfg.continuity)?),
            None => None,
        };

        let spec = match self.cfg.kind {
            MixtureKind::Gng => {
                let lower = lower.expect("gng lower tail");
                let (lower_mode, upper_mode) = match self.cfg.tail_fraction {
                    FitTailFraction::BulkBased => {
                        (TailFractionMode::BulkBased, TailFractionMode::BulkBased)
                    }
                    FitTailFraction::Parameterized => {
                        let phi_l = sigmoid(next());
                        let phi_u = sigmoid(next());
                        (
                            TailFractionMode::Parameterized(phi_l),
                            TailFractionMode::Parameterized(phi_u),
                        )
                    }
                };
                MixtureSpec::gng(bulk, lower, lower_mode, upper, upper_mode)?
            }
            kind => {
                let mode = match self.cfg.tail_fraction {
                    FitTailFraction::BulkBased => TailFractionMode::BulkBased,
                    FitTailFraction::Parameterized => {
                        TailFractionMode::Parameterized(sigmoid(next()))
                    }
                };
                MixtureSpec::single_tail(kind, bulk, upper, mode)?
            }
        };

        if self.cfg.continuity {
            spec.solve_continuity()
        } else {
            Ok(spec)
        }
    }
}

fn full_sample_ll(spec: &MixtureSpec, data: &[f64]) -> f64 {
    let mut ll = 0.0;
    for &x in data {
        let lp = spec.ln_pdf(x);
        if lp == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        ll += lp;
    }
    ll
}

struct Candidate {
    spec: MixtureSpec,
    ll: f64,
    converged: bool,
    n_upper: usize,
    n_lower: Option<usize>,
    threshold: f64,
    lower_threshold: Option<f64>,
}

fn fit_candidate(
    data: &[f64],
    sorted_data: &[f64],
    cfg: &MixtureFitConfig,
    kernel_bulk: Option<&BulkFamily>,
    u_upper: f64,
    u_lower: Option<f64>,
    opt: &OptimizerConfig,
) -> Option<Candidate> {
    let builder = SpecBuilder {
        cfg,
        u_upper,
        u_lower,
        kernel_bulk,
    };
    let (x0, steps) = builder.start(data, sorted_data);
    let mut obj = |p: &[f64]| match builder.build(p) {
        Ok(spec) => {
            let ll = full_sample_ll(&spec, data);
            if ll.is_finite() {
                -ll
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    };
    let res = nelder_mead_restarts(&mut obj, &x0, &steps, &opt.simplex(), opt.restarts);
    if !res.fx.is_finite() {
        return None;
    }
    let spec = builder.build(&res.x).ok()?;
    let n = sorted_data.len();
    let n_upper = n - sorted_data.partition_point(|&x| x <= spec.upper_tail().u);
    let n_lower = spec
        .lower_tail()
        .map(|l| sorted_data.partition_point(|&x| x < l.u));
    Some(Candidate {
        threshold: spec.upper_tail().u,
        lower_threshold: spec.lower_tail().map(|l| l.u),
        spec,
        ll: -res.fx,
        converged: res.converged,
        n_upper,
        n_lower,
    })
}

/// Fit a mixture model by profile likelihood over the threshold grid.
///
/// The hybrid Pareto (without the continuity variant) has no free
/// threshold, so its "profile" is the single junction implied by the fitted
/// parameters. Candidates whose tail would keep fewer than
/// `grid.min_exceedances` observations are skipped; if every candidate is
/// skipped or infeasible the fit fails rather than inventing a result.
pub fn fit_mixture(
    data: &[f64],
    cfg: &MixtureFitConfig,
    grid: &ThresholdSearchConfig,
    opt: &OptimizerConfig,
) -> Result<FitReport> {
    let t_start = Instant::now();
    opt.validate()?;
    grid.validate()?;
    if data.len() < 50 {
        return Err(Error::InvalidParam(format!(
            "mixture fitting needs at least 50 observations, got {}",
            data.len()
        )));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParam("data must be finite".to_string()));
    }
    let needs_positive = matches!(
        cfg.kind,
        MixtureKind::GammaGpd | MixtureKind::WeibullGpd | MixtureKind::LognormalGpd
    );
    if needs_positive && data.iter().any(|&x| x <= 0.0) {
        return Err(Error::SupportViolation(format!(
            "{:?} requires strictly positive data",
            cfg.kind
        )));
    }
    let sorted_data = sorted(data);
    if sorted_data[0] == sorted_data[sorted_data.len() - 1] {
        return Err(Error::AllCandidatesInfeasible(
            "sample has zero variance".to_string(),
        ));
    }
    if let Some(bw) = cfg.bandwidth {
        if !(bw > 0.0) || !bw.is_finite() {
            return Err(Error::InvalidParam(format!("bad bandwidth {bw}")));
        }
    }

    let kernel_bulk = if cfg.kind == MixtureKind::KernelGpd {
        let bw = match cfg.bandwidth {
            Some(bw) => bw,
            None => kde_cv_bandwidth(data)?,
        };
        Some(BulkFamily::kernel(data.to_vec(), bw)?)
    } else {
        None
    };

    let n = sorted_data.len();
    let two_tailed = cfg.kind == MixtureKind::Gng;
    let free_threshold = !(cfg.kind == MixtureKind::HybridPareto && !cfg.continuity);

    let mut profile = Vec::new();
    let mut best: Option<Candidate> = None;
    let mut any_converged = false;

    if free_threshold {
        for &q in &grid.quantile_grid {
            let u_upper = empirical_quantile_sorted(&sorted_data, q);
            let n_upper = n - sorted_data.partition_point(|&x| x <= u_upper);
            if n_upper < grid.min_exceedances {
                continue;
            }
            let u_lower = if two_tailed {
                let u_l = empirical_quantile_sorted(&sorted_data, 1.0 - q);
                if u_l >= u_upper
                    || sorted_data.partition_point(|&x| x < u_l) < grid.min_exceedances
                {
                    continue;
                }
                Some(u_l)
            } else {
                None
            };
            let cand = match fit_candidate(
                data,
                &sorted_data,
                cfg,
                kernel_bulk.as_ref(),
                u_upper,
                u_lower,
                opt,
            ) {
                Some(c) => c,
                None => continue,
            };
            profile.push(ProfilePoint {
                threshold: cand.threshold,
                lower_threshold: cand.lower_threshold,
                log_likelihood: cand.ll,
            });
            any_converged |= cand.converged;
            if best.as_ref().map_or(true, |b| cand.ll > b.ll) {
                best = Some(cand);
            }
        }
    } else {
        // hybrid Pareto: the junction is implied, one optimization
        let cand = fit_candidate(data, &sorted_data, cfg, None, f64::NAN, None, opt);
        if let Some(cand) = cand {
            profile.push(ProfilePoint {
                threshold: cand.threshold,
                lower_threshold: None,
                log_likelihood: cand.ll,
            });
            any_converged |= cand.converged;
            best = Some(cand);
        }
    }

    let best = best.ok_or_else(|| {
        Error::AllCandidatesInfeasible(format!(
            "no threshold candidate admitted a feasible {:?} fit",
            cfg.kind
        ))
    })?;
    if !any_converged {
        return Err(Error::NonConvergence(format!(
            "no threshold candidate converged for {:?}",
            cfg.kind
        )));
    }

    Ok(FitReport {
        best: FittedMixture {
            spec: best.spec,
            log_likelihood: best.ll,
            n_exceed_upper: best.n_upper,
            n_exceed_lower: best.n_lower,
            converged: best.converged,
        },
        profile,
        wall_time: t_start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast_grid() -> ThresholdSearchConfig {
        ThresholdSearchConfig {
            quantile_grid: vec![0.6, 0.7, 0.8, 0.9],
            min_exceedances: 10,
        }
    }

    fn fast_opt() -> OptimizerConfig {
        OptimizerConfig {
            rel_tolerance: 1e-8,
            max_iterations: 1500,
            restarts: 1,
        }
    }

    #[test]
    fn rejects_tiny_and_degenerate_samples() {
        let cfg = MixtureFitConfig::new(MixtureKind::NormGpd);
        let small = vec![1.0; 10];
        assert!(matches!(
            fit_mixture(&small, &cfg, &fast_grid(), &fast_opt()),
            Err(Error::InvalidParam(_))
        ));
        let constant = vec![2.5; 200];
        assert!(matches!(
            fit_mixture(&constant, &cfg, &fast_grid(), &fast_opt()),
            Err(Error::AllCandidatesInfeasible(_))
        ));
    }

    #[test]
    fn rejects_support_violation() {
        let cfg = MixtureFitConfig::new(MixtureKind::GammaGpd);
        let data: Vec<f64> = (0..100).map(|i| i as f64 - 50.0).collect();
        assert!(matches!(
            fit_mixture(&data, &cfg, &fast_grid(), &fast_opt()),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn norm_gpd_report_invariants() {
        let bulk = BulkFamily::normal(0.0, 1.0).unwrap();
        let data = bulk.sample(500, 21).unwrap();
        let cfg = MixtureFitConfig::new(MixtureKind::NormGpd);
        let report = fit_mixture(&data, &cfg, &fast_grid(), &fast_opt()).unwrap();
        let max_profile = report
            .profile
            .iter()
            .map(|p| p.log_likelihood)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((report.best.log_likelihood - max_profile).abs() < 1e-9);
        assert!(report.profile.len() <= 4);
        assert!(report.best.n_exceed_upper >= 10);
        assert!(report.best.converged);
    }

    #[test]
    fn fit_is_deterministic() {
        let bulk = BulkFamily::normal(0.0, 1.0).unwrap();
        let data = bulk.sample(300, 4).unwrap();
        let cfg = MixtureFitConfig::new(MixtureKind::NormGpd);
        let a = fit_mixture(&data, &cfg, &fast_grid(), &fast_opt()).unwrap();
        let b = fit_mixture(&data, &cfg, &fast_grid(), &fast_opt()).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(a.profile.len(), b.profile.len());
        for (pa, pb) in a.profile.iter().zip(b.profile.iter()) {
            assert_eq!(pa.log_likelihood, pb.log_likelihood);
            assert_eq!(pa.threshold, pb.threshold);
        }
    }

    #[test]
    fn location_shift_equivariance() {
        let bulk = BulkFamily::normal(0.0, 1.0).unwrap();
        let data = bulk.sample(400, 17).unwrap();
        let shifted: Vec<f64> = data.iter().map(|x| x + 5.0).collect();
        let cfg = MixtureFitConfig::new(MixtureKind::NormGpd);
        let a = fit_mixture(&data, &cfg, &fast_grid(), &fast_opt()).unwrap();
        let b = fit_mixture(&shifted, &cfg, &fast_grid(), &fast_opt()).unwrap();
        let du = b.best.spec.upper_tail().u - a.best.spec.upper_tail().u;
        assert!((du - 5.0).abs() < 1e-9, "threshold shift {du}");
        let dxi = (b.best.spec.upper_tail().xi - a.best.spec.upper_tail().xi).abs();
        assert!(dxi < 1e-4, "xi drift {dxi}");
        assert!(
            (b.best.log_likelihood - a.best.log_likelihood).abs() < 1e-4,
            "log-likelihood drift"
        );
    }

    #[test]
    fn continuity_fit_has_no_density_jump() {
        let bulk = BulkFamily::normal(0.0, 1.0).unwrap();
        let data = bulk.sample(400, 9).unwrap();
        let cfg = MixtureFitConfig::new(MixtureKind::NormGpd).with_continuity(true);
        let report = fit_mixture(&data, &cfg, &fast_grid(), &fast_opt()).unwrap();
        let u = report.best.spec.upper_tail().u;
        let below = report.best.spec.pdf(u - 1e-9);
        let above = report.best.spec.pdf(u + 1e-9);
        assert!((below - above).abs() < 1e-7, "jump {}", (below - above).abs());
        assert!(report.best.spec.continuity());
    }

    #[test]
    fn positive_shift_moves_min_to_one_sd() {
        let data = vec![-3.0, -1.0, 0.0, 2.0];
        let (shifted, shift) = positive_shift(&data);
        let sd = sample_sd(&data);
        assert!((shifted[0] - sd).abs() < 1e-12);
        assert!((shift - (sd + 3.0)).abs() < 1e-12);
        assert!(shifted.iter().all(|&x| x > 0.0));
    }
}
