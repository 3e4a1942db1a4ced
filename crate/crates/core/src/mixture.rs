//! Extreme value mixture models: a bulk family spliced with GPD tail(s).
//!
//! Two tail-fraction conventions are supported. With a bulk-based fraction
//! the distribution below the threshold is the bulk CDF itself and the tail
//! carries the remaining mass `1 - H(u)`. With a parameterized fraction
//! `phi_u` the bulk is renormalized by `H(u)` below the threshold and the
//! tail carries exactly `phi_u`. The two coincide when `phi_u = 1 - H(u)`.
//!
//! The two-tailed GNG model reflects a second GPD below its lower threshold.
//! Its bulk-based form leaves the normal bulk unrenormalized between the
//! thresholds (mirroring the single-tail convention); the parameterized form
//! rescales the bulk to bridge `phi_l` to `1 - phi_u`.
//!
//! The hybrid Pareto splices an unnormalized normal density to a GPD where
//! both the density and its first derivative match, then renormalizes by
//! `gamma = 1 + Phi(z)`; the junction point is not a free parameter.

use serde::Serialize;

use crate::dist::{BulkFamily, GpdParams};
use crate::error::{Error, Result};
use crate::rng::{open01, rng_from_seed};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// How the mass above (or below) a threshold is determined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailFractionMode {
    /// Tail mass taken from the bulk CDF at the threshold.
    BulkBased,
    /// Tail mass is a free parameter in (0, 1).
    Parameterized(f64),
}

/// Mixture family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MixtureKind {
    NormGpd,
    GammaGpd,
    WeibullGpd,
    LognormalGpd,
    KernelGpd,
    HybridPareto,
    Gng,
}

impl MixtureKind {
    /// The bulk family class this kind expects.
    fn bulk_matches(&self, bulk: &BulkFamily) -> bool {
        matches!(
            (self, bulk),
            (MixtureKind::NormGpd, BulkFamily::Normal { .. })
                | (MixtureKind::GammaGpd, BulkFamily::Gamma { .. })
                | (MixtureKind::WeibullGpd, BulkFamily::Weibull { .. })
                | (MixtureKind::LognormalGpd, BulkFamily::LogNormal { .. })
                | (MixtureKind::KernelGpd, BulkFamily::Kernel { .. })
                | (MixtureKind::HybridPareto, BulkFamily::Normal { .. })
                | (MixtureKind::Gng, BulkFamily::Normal { .. })
        )
    }
}

/// Output of the hybrid Pareto junction conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HybridJunction {
    pub u: f64,
    pub sigma_u: f64,
    pub gamma: f64,
}

/// Solve the hybrid Pareto junction for a Normal(mu, sigma) bulk and GPD
/// shape `xi`: the point `u > mu` where the unnormalized normal density and
/// a GPD density agree in value and first derivative.
///
/// With `z = (u - mu)/sigma`, the conditions reduce to
/// `z * sqrt(2*pi) * exp(z^2/2) = 1 + xi`, solved by bisection on
/// `z in (0, 10]` in log form. Then `sigma_u = sigma / phi(z)` and the
/// normalizing constant is `gamma = 1 + Phi(z)`.
pub fn hybrid_junction(mu: f64, sigma: f64, xi: f64) -> Result<HybridJunction> {
    if !(sigma > 0.0) || !sigma.is_finite() || !mu.is_finite() || !xi.is_finite() {
        return Err(Error::InvalidParam(
            "hybrid junction needs finite mu, xi and positive sigma".to_string(),
        ));
    }
    if xi <= -1.0 {
        return Err(Error::NoJunction(format!(
            "no junction exists for xi = {xi} <= -1"
        )));
    }
    // monotone in z; log form avoids exp overflow near z = 10
    let r = |z: f64| z.ln() + SQRT_2PI.ln() + 0.5 * z * z - xi.ln_1p();
    let mut lo = 1e-12;
    let mut hi = 10.0;
    if r(lo) > 0.0 || r(hi) < 0.0 {
        return Err(Error::NoJunction(format!(
            "bracket failed for xi = {xi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if r(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let z = 0.5 * (lo + hi);
    let phi_z = (-0.5 * z * z).exp() / SQRT_2PI;
    let std_normal = BulkFamily::normal(0.0, 1.0).expect("unit normal");
    Ok(HybridJunction {
        u: mu + sigma * z,
        sigma_u: sigma / phi_z,
        gamma: 1.0 + std_normal.cdf(z),
    })
}

/// A fully specified extreme value mixture model.
///
/// Threshold-level CDF values are cached at construction, so evaluation in
/// likelihood loops does not recompute them per observation. Instances are
/// immutable; all evaluation methods are pure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureSpec {
    kind: MixtureKind,
    bulk: BulkFamily,
    upper: GpdParams,
    lower: Option<GpdParams>,
    upper_mode: TailFractionMode,
    lower_mode: Option<TailFractionMode>,
    continuity: bool,
    /// bulk CDF at the upper threshold
    #[serde(skip)]
    h_upper: f64,
    /// bulk CDF at the lower threshold (GNG only)
    #[serde(skip)]
    h_lower: f64,
    /// hybrid Pareto normalizing constant; 1 otherwise
    #[serde(skip)]
    gamma: f64,
}

impl MixtureSpec {
    /// Single-tail mixture (Eq.-1 or Eq.-2 form depending on `mode`).
    pub fn single_tail(
        kind: MixtureKind,
        bulk: BulkFamily,
        upper: GpdParams,
        mode: TailFractionMode,
    ) -> Result<Self> {
        if matches!(kind, MixtureKind::Gng | MixtureKind::HybridPareto) {
            return Err(Error::InvalidParam(
                "use the gng/hybrid constructors for two-tail and hybrid kinds".to_string(),
            ));
        }
        if !kind.bulk_matches(&bulk) {
            return Err(Error::InvalidParam(format!(
                "bulk family does not match mixture kind {kind:?}"
            )));
        }
        let h_upper = bulk.cdf(upper.u);
        if !(h_upper > 0.0 && h_upper < 1.0) {
            return Err(Error::InvalidParam(format!(
                "threshold {} is not strictly inside the bulk support (H = {h_upper})",
                upper.u
            )));
        }
        if let TailFractionMode::Parameterized(phi) = mode {
            if !(phi > 0.0 && phi < 1.0) {
                return Err(Error::InvalidParam(format!(
                    "tail fraction must lie in (0, 1), got {phi}"
                )));
            }
        }
        Ok(Self {
            kind,
            bulk,
            upper,
            lower: None,
            upper_mode: mode,
            lower_mode: None,
            continuity: false,
            h_upper,
            h_lower: 0.0,
            gamma: 1.0,
        })
    }

    /// Two-tailed GPD-Normal-GPD model.
    pub fn gng(
        bulk: BulkFamily,
        lower: GpdParams,
        lower_mode: TailFractionMode,
        upper: GpdParams,
        upper_mode: TailFractionMode,
    ) -> Result<Self> {
        if !matches!(bulk, BulkFamily::Normal { .. }) {
            return Err(Error::InvalidParam("GNG requires a normal bulk".to_string()));
        }
        if !(lower.u < upper.u) {
            return Err(Error::InvalidParam(format!(
                "GNG thresholds must satisfy lower < upper, got {} >= {}",
                lower.u, upper.u
            )));
        }
        let h_lower = bulk.cdf(lower.u);
        let h_upper = bulk.cdf(upper.u);
        if !(h_lower > 0.0 && h_upper < 1.0 && h_lower < h_upper) {
            return Err(Error::InvalidParam(
                "GNG thresholds are not strictly inside the bulk support".to_string(),
            ));
        }
        match (lower_mode, upper_mode) {
            (TailFractionMode::Parameterized(pl), TailFractionMode::Parameterized(pu)) => {
                if !(pl > 0.0 && pu > 0.0 && pl + pu < 1.0) {
                    return Err(Error::InvalidParam(format!(
                        "GNG tail fractions must be positive with phi_l + phi_u < 1, got {pl} + {pu}"
                    )));
                }
            }
            (TailFractionMode::BulkBased, TailFractionMode::BulkBased) => {}
            _ => {
                return Err(Error::InvalidParam(
                    "GNG tail fraction modes must match on both tails".to_string(),
                ))
            }
        }
        Ok(Self {
            kind: MixtureKind::Gng,
            bulk,
            upper,
            lower: Some(lower),
            upper_mode,
            lower_mode: Some(lower_mode),
            continuity: false,
            h_upper,
            h_lower,
            gamma: 1.0,
        })
    }

    /// Hybrid Pareto: junction point and GPD scale derived from
    /// (mu, sigma, xi), continuous in density and first derivative.
    pub fn hybrid_pareto(mu: f64, sigma: f64, xi: f64) -> Result<Self> {
        let j = hybrid_junction(mu, sigma, xi)?;
        let bulk = BulkFamily::normal(mu, sigma)?;
        let h_upper = bulk.cdf(j.u);
        Ok(Self {
            kind: MixtureKind::HybridPareto,
            upper: GpdParams::new(j.u, j.sigma_u, xi)?,
            lower: None,
            upper_mode: TailFractionMode::BulkBased,
            lower_mode: None,
            continuity: false,
            h_upper,
            h_lower: 0.0,
            gamma: j.gamma,
            bulk,
        })
    }

    /// Hybrid Pareto with a free threshold and a single continuity
    /// constraint: only the densities match at `u`, so
    /// `sigma_u = 1 / f_N(u)` with `gamma = 1 + Phi((u - mu)/sigma)`.
    pub fn hybrid_pareto_con(mu: f64, sigma: f64, u: f64, xi: f64) -> Result<Self> {
        let bulk = BulkFamily::normal(mu, sigma)?;
        let fu = bulk.pdf(u);
        if !(fu > 0.0) || !fu.is_finite() {
            return Err(Error::ContinuityUnsolvable(format!(
                "bulk density vanishes at threshold {u}"
            )));
        }
        let h_upper = bulk.cdf(u);
        let gamma = 1.0 + h_upper;
        Ok(Self {
            kind: MixtureKind::HybridPareto,
            upper: GpdParams::new(u, 1.0 / fu, xi)?,
            lower: None,
            upper_mode: TailFractionMode::BulkBased,
            lower_mode: None,
            continuity: true,
            h_upper,
            h_lower: 0.0,
            gamma,
            bulk,
        })
    }

    pub fn kind(&self) -> MixtureKind {
        self.kind
    }
    pub fn bulk(&self) -> &BulkFamily {
        &self.bulk
    }
    pub fn upper_tail(&self) -> &GpdParams {
        &self.upper
    }
    pub fn lower_tail(&self) -> Option<&GpdParams> {
        self.lower.as_ref()
    }
    pub fn upper_mode(&self) -> TailFractionMode {
        self.upper_mode
    }
    pub fn lower_mode(&self) -> Option<TailFractionMode> {
        self.lower_mode
    }
    pub fn continuity(&self) -> bool {
        self.continuity
    }
    /// Hybrid Pareto normalizing constant (1 for every other kind).
    pub fn normalizer(&self) -> f64 {
        self.gamma
    }

    /// Mass above the upper threshold.
    pub fn upper_fraction(&self) -> f64 {
        match self.kind {
            MixtureKind::HybridPareto => 1.0 / self.gamma,
            _ => match self.upper_mode {
                TailFractionMode::BulkBased => 1.0 - self.h_upper,
                TailFractionMode::Parameterized(phi) => phi,
            },
        }
    }

    /// Mass below the lower threshold (GNG only).
    pub fn lower_fraction(&self) -> Option<f64> {
        self.lower.as_ref()?;
        Some(match self.lower_mode.unwrap() {
            TailFractionMode::BulkBased => self.h_lower,
            TailFractionMode::Parameterized(phi) => phi,
        })
    }

    /// Support bounds of the mixture.
    pub fn support(&self) -> (f64, f64) {
        let hi = self.upper.upper_endpoint();
        let lo = match (self.kind, &self.lower) {
            (MixtureKind::Gng, Some(l)) => {
                let end = l.upper_endpoint();
                if end.is_finite() {
                    2.0 * l.u - end
                } else {
                    f64::NEG_INFINITY
                }
            }
            (MixtureKind::HybridPareto, _) => f64::NEG_INFINITY,
            _ => self.bulk.support().0,
        };
        (lo, hi)
    }

    /// Splice points, for quadrature that should not straddle a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(2);
        if let Some(l) = &self.lower {
            b.push(l.u);
        }
        b.push(self.upper.u);
        b
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.kind {
            MixtureKind::HybridPareto => {
                if x <= self.upper.u {
                    self.bulk.cdf(x) / self.gamma
                } else {
                    (self.h_upper + self.upper.cdf(x)) / self.gamma
                }
            }
            MixtureKind::Gng => {
                let lower = self.lower.as_ref().unwrap();
                let w_l = self.lower_fraction().unwrap();
                let w_u = self.upper_fraction();
                if x < lower.u {
                    w_l * (1.0 - lower.cdf(2.0 * lower.u - x))
                } else if x <= self.upper.u {
                    match self.upper_mode {
                        TailFractionMode::BulkBased => self.bulk.cdf(x),
                        TailFractionMode::Parameterized(_) => {
                            w_l + (1.0 - w_l - w_u) * (self.bulk.cdf(x) - self.h_lower)
                                / (self.h_upper - self.h_lower)
                        }
                    }
                } else {
                    (1.0 - w_u) + w_u * self.upper.cdf(x)
                }
            }
            _ => {
                let w_u = self.upper_fraction();
                if x <= self.upper.u {
                    match self.upper_mode {
                        TailFractionMode::BulkBased => self.bulk.cdf(x),
                        TailFractionMode::Parameterized(_) => {
                            (1.0 - w_u) * self.bulk.cdf(x) / self.h_upper
                        }
                    }
                } else {
                    (1.0 - w_u) + w_u * self.upper.cdf(x)
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let lp = self.ln_pdf(x);
        if lp == f64::NEG_INFINITY {
            0.0
        } else {
            lp.exp()
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self.kind {
            MixtureKind::HybridPareto => {
                let ln_gamma = self.gamma.ln();
                if x <= self.upper.u {
                    self.bulk.ln_pdf(x) - ln_gamma
                } else {
                    self.upper.ln_pdf(x) - ln_gamma
                }
            }
            MixtureKind::Gng => {
                let lower = self.lower.as_ref().unwrap();
                let w_l = self.lower_fraction().unwrap();
                let w_u = self.upper_fraction();
                if x < lower.u {
                    w_l.ln() + lower.ln_pdf(2.0 * lower.u - x)
                } else if x <= self.upper.u {
                    match self.upper_mode {
                        TailFractionMode::BulkBased => self.bulk.ln_pdf(x),
                        TailFractionMode::Parameterized(_) => {
                            (1.0 - w_l - w_u).ln() + self.bulk.ln_pdf(x)
                                - (self.h_upper - self.h_lower).ln()
                        }
                    }
                } else {
                    w_u.ln() + self.upper.ln_pdf(x)
                }
            }
            _ => {
                let w_u = self.upper_fraction();
                if x <= self.upper.u {
                    match self.upper_mode {
                        TailFractionMode::BulkBased => self.bulk.ln_pdf(x),
                        TailFractionMode::Parameterized(_) => {
                            (1.0 - w_u).ln() + self.bulk.ln_pdf(x) - self.h_upper.ln()
                        }
                    }
                } else {
                    w_u.ln() + self.upper.ln_pdf(x)
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0 < p && p < 1.0) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        let x = match self.kind {
            MixtureKind::HybridPareto => {
                let pg = p * self.gamma;
                if pg <= self.h_upper {
                    self.bulk.quantile(pg)?
                } else {
                    self.upper.quantile(pg - self.h_upper)?
                }
            }
            MixtureKind::Gng => {
                let lower = self.lower.as_ref().unwrap();
                let w_l = self.lower_fraction().unwrap();
                let w_u = self.upper_fraction();
                if p < w_l {
                    2.0 * lower.u - lower.quantile(1.0 - p / w_l)?
                } else if p <= 1.0 - w_u {
                    let target = match self.upper_mode {
                        TailFractionMode::BulkBased => p,
                        TailFractionMode::Parameterized(_) => {
                            self.h_lower
                                + (p - w_l) * (self.h_upper - self.h_lower) / (1.0 - w_l - w_u)
                        }
                    };
                    self.bulk
                        .quantile(target.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))?
                        .clamp(lower.u, self.upper.u)
                } else {
                    self.upper.quantile((p - (1.0 - w_u)) / w_u)?
                }
            }
            _ => {
                let w_u = self.upper_fraction();
                if p <= 1.0 - w_u {
                    let target = match self.upper_mode {
                        TailFractionMode::BulkBased => p,
                        TailFractionMode::Parameterized(_) => p * self.h_upper / (1.0 - w_u),
                    };
                    self.bulk
                        .quantile(target.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))?
                        .min(self.upper.u)
                } else {
                    self.upper.quantile((p - (1.0 - w_u)) / w_u)?
                }
            }
        };
        self.refine_quantile(p, x)
    }

    /// Bisection safeguard around a closed-form inversion, mostly for the
    /// kernel bulk whose own quantile is itself iterative.
    fn refine_quantile(&self, p: f64, x0: f64) -> Result<f64> {
        let c0 = self.cdf(x0);
        if (c0 - p).abs() <= 1e-11 {
            return Ok(x0);
        }
        let scale = x0.abs().max(1.0);
        let mut delta = 1e-9 * scale;
        let (mut lo, mut hi);
        if c0 < p {
            lo = x0;
            hi = x0 + delta;
            let mut guard = 0;
            while self.cdf(hi) < p {
                delta *= 4.0;
                hi = x0 + delta;
                guard += 1;
                if guard > 80 {
                    return Err(Error::InversionFailure(format!(
                        "no upper bracket for p={p}"
                    )));
                }
            }
        } else {
            hi = x0;
            lo = x0 - delta;
            let mut guard = 0;
            while self.cdf(lo) > p {
                delta *= 4.0;
                lo = x0 - delta;
                guard += 1;
                if guard > 80 {
                    return Err(Error::InversionFailure(format!(
                        "no lower bracket for p={p}"
                    )));
                }
            }
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let c = self.cdf(mid);
            if (c - p).abs() <= 1e-11 {
                return Ok(mid);
            }
            if c < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        if (self.cdf(mid) - p).abs() <= 1e-9 {
            Ok(mid)
        } else {
            Err(Error::InversionFailure(format!(
                "mixture quantile did not converge at p={p}"
            )))
        }
    }

    /// Quantile from the survival probability `s = 1 - p`, exact in the
    /// upper-tail region where `1 - p` itself would round away.
    pub fn quantile_sf(&self, s: f64) -> Result<f64> {
        if !(0.0 < s && s < 1.0) {
            return Err(Error::ProbabilityOutOfRange(1.0 - s));
        }
        match self.kind {
            MixtureKind::HybridPareto => {
                // tail region (s <= 1/gamma): mixture survival is (1 - G)/gamma
                let g_sf = s * self.gamma;
                if g_sf < 1.0 {
                    return self.upper.quantile_sf(g_sf);
                }
            }
            _ => {
                let w_u = self.upper_fraction();
                if s <= w_u {
                    return self.upper.quantile_sf(s / w_u);
                }
            }
        }
        self.quantile(1.0 - s)
    }

    /// Inverse-CDF sampling; deterministic for a given seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidParam("sample size must be >= 1".to_string()));
        }
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| self.quantile(open01(&mut rng))).collect()
    }

    /// Replace each tail scale with the value that removes the density jump
    /// at its threshold; the returned spec has `continuity = true`.
    ///
    /// Fails when the bulk density vanishes at a threshold, which signals a
    /// mis-specified threshold rather than something to silently patch.
    pub fn solve_continuity(&self) -> Result<Self> {
        let mut out = self.clone();
        match self.kind {
            MixtureKind::HybridPareto => {
                let fu = self.bulk.pdf(self.upper.u);
                if !(fu > 0.0) || !fu.is_finite() {
                    return Err(Error::ContinuityUnsolvable(format!(
                        "bulk density vanishes at threshold {}",
                        self.upper.u
                    )));
                }
                out.upper = GpdParams::new(self.upper.u, 1.0 / fu, self.upper.xi)?;
            }
            _ => {
                let fu = self.bulk_side_density(self.upper.u);
                if !(fu > 0.0) || !fu.is_finite() {
                    return Err(Error::ContinuityUnsolvable(format!(
                        "bulk density vanishes at threshold {}",
                        self.upper.u
                    )));
                }
                out.upper =
                    GpdParams::new(self.upper.u, self.upper_fraction() / fu, self.upper.xi)?;
                if let Some(lower) = &self.lower {
                    let fl = self.bulk_side_density(lower.u);
                    if !(fl > 0.0) || !fl.is_finite() {
                        return Err(Error::ContinuityUnsolvable(format!(
                            "bulk density vanishes at threshold {}",
                            lower.u
                        )));
                    }
                    out.lower = Some(GpdParams::new(
                        lower.u,
                        self.lower_fraction().unwrap() / fl,
                        lower.xi,
                    )?);
                }
            }
        }
        out.continuity = true;
        Ok(out)
    }

    /// Density of the bulk-side piece of the mixture at a point, i.e. the
    /// mixture pdf evaluated on the bulk branch.
    fn bulk_side_density(&self, x: f64) -> f64 {
        match self.kind {
            MixtureKind::HybridPareto => self.bulk.pdf(x) / self.gamma,
            MixtureKind::Gng => match self.upper_mode {
                TailFractionMode::BulkBased => self.bulk.pdf(x),
                TailFractionMode::Parameterized(_) => {
                    let w_l = self.lower_fraction().unwrap();
                    let w_u = self.upper_fraction();
                    (1.0 - w_l - w_u) * self.bulk.pdf(x) / (self.h_upper - self.h_lower)
                }
            },
            _ => match self.upper_mode {
                TailFractionMode::BulkBased => self.bulk.pdf(x),
                TailFractionMode::Parameterized(phi) => {
                    (1.0 - phi) * self.bulk.pdf(x) / self.h_upper
                }
            },
        }
    }
}

/// A mixture spec together with its fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedMixture {
    pub spec: MixtureSpec,
    pub log_likelihood: f64,
    pub n_exceed_upper: usize,
    pub n_exceed_lower: Option<usize>,
    pub converged: bool,
}
