//! Tolerances, grids and caps shared by the numerical routines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every knob has a default; spec files may override any subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Atoms lighter than this are dropped from distributions.
    pub prune_threshold: f64,
    /// Absolute tolerance for merging equal atom values and equal log ratios.
    pub merge_tolerance: f64,
    /// Omitted upper-tail mass allowed when truncating a Poisson pmf.
    pub poisson_tail: f64,
    /// Uniform alpha grid step used by dualities, metrics and CSV output.
    pub grid_step: f64,
    /// Maximum atom count of a convolved LLR table before rebinning.
    pub atom_cap: usize,
    /// Product size above which convolution switches to a lattice.
    pub exact_work_limit: usize,
    /// Half-width, in standard deviations, of Gaussian discretizations.
    pub gaussian_span: f64,
    /// Cells per standard deviation in Gaussian discretizations.
    pub gaussian_cells_per_sigma: f64,
    /// Cells of the quantile grid used for continuous shift pairs.
    pub quantile_cells: usize,
    /// Bisection tolerance of the mixture waterfilling solver.
    pub waterfill_tolerance: f64,
    /// Joint tail mass beyond which bins of a shift family are lumped.
    pub bin_tail: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            prune_threshold: 1e-15,
            merge_tolerance: 1e-12,
            poisson_tail: 1e-12,
            grid_step: 1e-4,
            atom_cap: 200_000,
            exact_work_limit: 4_000_000,
            gaussian_span: 8.0,
            gaussian_cells_per_sigma: 8000.0,
            quantile_cells: 10_000,
            waterfill_tolerance: 1e-10,
            bin_tail: 1e-14,
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("merge_tolerance", self.merge_tolerance),
            ("poisson_tail", self.poisson_tail),
            ("grid_step", self.grid_step),
            ("gaussian_span", self.gaussian_span),
            ("gaussian_cells_per_sigma", self.gaussian_cells_per_sigma),
            ("waterfill_tolerance", self.waterfill_tolerance),
            ("bin_tail", self.bin_tail),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.prune_threshold >= 0.0 && self.prune_threshold < 1e-6) {
            return Err(Error::Config(format!(
                "prune_threshold must lie in [0, 1e-6), got {}",
                self.prune_threshold
            )));
        }
        if self.poisson_tail >= 1e-3 {
            return Err(Error::Config(format!(
                "poisson_tail must lie in (0, 1e-3), got {}",
                self.poisson_tail
            )));
        }
        if self.grid_step > 0.1 {
            return Err(Error::Config(format!("grid_step too coarse: {}", self.grid_step)));
        }
        if self.atom_cap < 16 || self.quantile_cells < 2 {
            return Err(Error::Config("atom_cap and quantile_cells too small".into()));
        }
        Ok(())
    }
}
