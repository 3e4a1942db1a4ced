//! Maximum-likelihood fitting: GPD on exceedances, full mixture models with
//! the threshold profiled over an empirical-quantile grid, GEV block maxima,
//! and cross-validation bandwidth selection for the kernel bulk.

mod bandwidth;
mod gev;
mod gpd;
mod mixture_fit;

pub use bandwidth::kde_cv_bandwidth;
pub use gev::fit_gev_blocks;
pub use gpd::fit_gpd;
pub(crate) use gpd::gpd_nll as gpd_nll_at;
pub use mixture_fit::{fit_mixture, positive_shift, FitTailFraction, MixtureFitConfig};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixture::FittedMixture;

/// Shape values are constrained to this interval during every fit: the MLE
/// is non-regular at xi <= -1 and estimates past the cap indicate pathology.
pub const XI_MIN: f64 = -1.0;
pub const XI_MAX: f64 = 5.0;

/// Default minimum number of exceedances a tail must keep.
pub const MIN_EXCEEDANCES: usize = 10;

/// Inner-optimizer settings for all likelihood fits.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OptimizerConfig {
    pub rel_tolerance: f64,
    pub max_iterations: usize,
    pub restarts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-8,
            max_iterations: 2000,
            restarts: 3,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::InvalidParam(
                "rel_tolerance must be positive".to_string(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParam(
                "max_iterations must be >= 1".to_string(),
            ));
        }
        Ok(())
    }

    pub(crate) fn simplex(&self) -> crate::optim::SimplexOptions {
        crate::optim::SimplexOptions {
            rel_tol: self.rel_tolerance,
            max_iter: self.max_iterations,
        }
    }
}

/// Candidate thresholds for the profile likelihood, expressed as empirical
/// quantile levels of the data. For two-tailed models each upper level `q`
/// is paired with the mirrored lower level `1 - q`.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdSearchConfig {
    pub quantile_grid: Vec<f64>,
    pub min_exceedances: usize,
}

impl Default for ThresholdSearchConfig {
    fn default() -> Self {
        let mut grid = Vec::new();
        let mut q = 0.50;
        while q < 0.95 + 1e-9 {
            grid.push(q);
            q += 0.025;
        }
        Self {
            quantile_grid: grid,
            min_exceedances: MIN_EXCEEDANCES,
        }
    }
}

impl ThresholdSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.quantile_grid.is_empty() {
            return Err(Error::InvalidParam("empty threshold grid".to_string()));
        }
        for w in self.quantile_grid.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParam(
                    "threshold grid must be strictly increasing".to_string(),
                ));
            }
        }
        if self
            .quantile_grid
            .iter()
            .any(|&q| !(0.0 < q && q < 1.0))
        {
            return Err(Error::InvalidParam(
                "threshold grid levels must lie in (0, 1)".to_string(),
            ));
        }
        Ok(())
    }
}

/// One profile-likelihood evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfilePoint {
    pub threshold: f64,
    /// Lower threshold for two-tailed fits.
    pub lower_threshold: Option<f64>,
    pub log_likelihood: f64,
}

/// The outcome of a mixture fit: the best profile point plus the profile
/// itself. The result depends only on the data and configuration; the
/// recorded wall time is the one non-reproducible field and is excluded
/// from serialized output.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub best: FittedMixture,
    pub profile: Vec<ProfilePoint>,
    #[serde(skip)]
    pub wall_time: std::time::Duration,
}
