//! Stability measurements: ratios, subspace constants, worst-pair search
//! over priors, Hölder scans and Lipschitz certification.

mod certify;
mod checks;
mod engine;
mod holder;
mod ratio;
mod report;
mod search;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use certify::certify_lipschitz;
pub use checks::{holder_to_lip_check, orthogonal_reduction_check, ReductionResult};
pub use holder::{holder_fit, holder_scan, scan_csv, ScanRecord};
pub use ratio::{stability_ratio, RatioEval};
pub use report::{frame_id, prior_id, SigmaFit, StabilityReport, Verdict, Witness, SCHEMA_VERSION};
pub use search::{subspace_constant, worst_pair_search, SubspaceEstimate};

pub(crate) use engine::derived_rng;

/// Relative tolerance for verdicts.
pub const DEFAULT_TOL: f64 = 1e-3;

/// Ratios above this are treated as a failure of injectivity.
pub const INJECTIVITY_RATIO: f64 = 1e10;

/// Budget and seeding of the multi-start ascent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub restarts: usize,
    /// Sweeps per restart.
    pub max_iters: usize,
    pub step_init: f64,
    pub step_shrink: f64,
    /// A restart stops once its step falls below this.
    pub min_step: f64,
    /// Relative verdict tolerance.
    pub tol: f64,
    pub seed: u64,
    /// Independent prior pairs evaluated by certification before the ascent.
    pub sampled_pairs: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 32,
            max_iters: 200,
            step_init: 0.25,
            step_shrink: 0.5,
            min_step: 1e-12,
            tol: DEFAULT_TOL,
            seed: 0,
            sampled_pairs: 10_000,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::Spec("restarts and max_iters must be positive".into()));
        }
        if !(positive(self.step_init) && positive(self.min_step) && positive(self.tol)) {
            return Err(Error::Spec("step_init, min_step and tol must be positive".into()));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(Error::Spec(format!("step_shrink = {} not in (0, 1)", self.step_shrink)));
        }
        Ok(())
    }
}
