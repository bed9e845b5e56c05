//! Frame and sequence families: the gliding-hump counterexample, the
//! one-dimensional-core frames and the multidimensional frames, with their
//! priors and claimed constants.

mod counterexample;
mod flatness;
mod multidim;
mod onedim;
mod sequences;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::hilbert::ScalarField;
use crate::lab::SearchConfig;
use crate::priors::{envelope_from_growth, Growth, PriorSet};

pub use counterexample::{counterexample_frame, stable_parseval_family, CounterexampleSpec, PARSEVAL_TOL};
pub use flatness::{
    calibrate_flatness, flatness_check, flatness_density, rotated_bases_frame, FlatnessCalibration, FlatnessMode,
    FlatnessOutcome,
};
pub use multidim::{
    complex_md_frame, md_bound_window, md_claimed_bound, md_instance, real_md_frame, tail_coordinate, MdInstance,
    MdSetup, FLATNESS_SAMPLES, FLATNESS_SEED,
};
pub use onedim::{complex_onedim_frame, real_onedim_frame};
pub use sequences::{default_sequences, ConstraintKind, EnvelopeBudget, MDParams, SequenceEnvelope};

/// Claimed Lipschitz constant of the complex one-dimensional-core frame.
pub const COMPLEX_ONEDIM_BOUND: f64 = 5.0;

const DEFAULT_EPSILON: f64 = 0.1;
const DEFAULT_MD_EPSILON: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionKind {
    Counterexample,
    #[serde(rename = "real3_1")]
    Real31,
    #[serde(rename = "complex3_2")]
    Complex32,
    RealMd,
    ComplexMd,
}

impl ConstructionKind {
    pub fn is_randomized(self) -> bool {
        matches!(
            self,
            ConstructionKind::Counterexample | ConstructionKind::RealMd | ConstructionKind::ComplexMd
        )
    }
}

/// The construction block of an experiment file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionSpec {
    pub construction: ConstructionKind,
    #[serde(rename = "D")]
    pub dim: usize,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(rename = "R", default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Field of the counterexample (real by default).
    #[serde(default)]
    pub field: Option<ScalarField>,
    /// Vectors per dimension in each counterexample level.
    #[serde(default)]
    pub oversampling: Option<usize>,
    #[serde(default)]
    pub md: Option<MdSetup>,
    /// Search budget for per-level and `ψ` stability estimates.
    #[serde(default)]
    pub estimate: Option<SearchConfig>,
}

/// A constructed frame together with its prior and the constants the
/// theory attaches to it.
#[derive(Clone, Debug, PartialEq)]
pub struct Built {
    pub frame: Frame,
    pub prior: PriorSet,
    pub claimed_bound: Option<f64>,
    /// Window the frame bounds must fall in, if one is claimed.
    pub bound_window: Option<(f64, f64)>,
    pub growth: Option<Growth>,
    /// Uniform stability constant of the building blocks, if any.
    pub stability: Option<f64>,
    pub notes: Vec<String>,
}

/// Budget used to estimate the stability constant of each level family.
pub fn level_search_config(seed: u64) -> SearchConfig {
    SearchConfig {
        restarts: 4,
        max_iters: 60,
        seed,
        ..SearchConfig::default()
    }
}

impl ConstructionSpec {
    pub fn new(construction: ConstructionKind, dim: usize) -> Self {
        ConstructionSpec {
            construction,
            dim,
            gamma: None,
            r: None,
            epsilon: None,
            seed: None,
            field: None,
            oversampling: None,
            md: None,
            estimate: None,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(2.0)
    }

    pub fn r(&self) -> f64 {
        self.r.unwrap_or(1.0)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(match self.construction {
            ConstructionKind::RealMd | ConstructionKind::ComplexMd => DEFAULT_MD_EPSILON,
            _ => DEFAULT_EPSILON,
        })
    }

    fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::Spec(format!(
                "construction {:?} is randomized and needs a seed",
                self.construction
            ))
        })
    }

    pub fn build(&self) -> Result<Built> {
        let d = self.dim;
        if d < 2 {
            return Err(Error::Spec(format!("D = {d} must be at least 2")));
        }
        match self.construction {
            ConstructionKind::Counterexample => {
                let seed = self.seed()?;
                let field = self.field.unwrap_or(ScalarField::Real);
                let oversampling = self.oversampling.unwrap_or(4);
                let cfg = self.estimate.clone().unwrap_or_else(|| level_search_config(seed));
                let spec = CounterexampleSpec::generate(field, d, self.gamma(), self.r(), oversampling, seed, &cfg)?;
                let (frame, growth) = counterexample_frame(&spec)?;
                let prior = envelope_from_growth(&growth, spec.gamma, spec.r, d)?;
                Ok(Built {
                    frame,
                    prior,
                    claimed_bound: None,
                    bound_window: Some((1.0, 4.0 / 3.0)),
                    growth: Some(growth),
                    stability: Some(spec.stability),
                    notes: vec![format!(
                        "uniform level constant C = {} is the largest search estimate over the {d} levels",
                        spec.stability
                    )],
                })
            }
            ConstructionKind::Real31 => {
                let eps = self.epsilon();
                let env = default_sequences(ConstraintKind::Real3_1, eps, None, d - 1)?;
                Ok(Built {
                    frame: real_onedim_frame(d, &env)?,
                    prior: env.prior(d, 1)?,
                    claimed_bound: Some((1.0 - eps).powf(-0.5)),
                    bound_window: None,
                    growth: None,
                    stability: None,
                    notes: Vec::new(),
                })
            }
            ConstructionKind::Complex32 => {
                let env = default_sequences(ConstraintKind::Complex3_2, self.epsilon(), None, d - 1)?;
                Ok(Built {
                    frame: complex_onedim_frame(d, &env)?,
                    prior: env.prior(d, 1)?,
                    claimed_bound: Some(COMPLEX_ONEDIM_BOUND),
                    bound_window: None,
                    growth: None,
                    stability: None,
                    notes: Vec::new(),
                })
            }
            ConstructionKind::RealMd | ConstructionKind::ComplexMd => {
                let seed = self.seed()?;
                let field = if self.construction == ConstructionKind::RealMd {
                    ScalarField::Real
                } else {
                    ScalarField::Complex
                };
                let setup = self.md.clone().unwrap_or_default();
                if let Some(t) = setup.tail {
                    if setup.n + t != d {
                        return Err(Error::Spec(format!(
                            "D_tail = {t} with N = {} does not match D = {d}",
                            setup.n
                        )));
                    }
                }
                let cfg = self.estimate.clone().unwrap_or(SearchConfig {
                    seed,
                    ..SearchConfig::default()
                });
                let eps = self.epsilon();
                let inst = md_instance(field, &setup, d, eps, seed, &cfg)?;
                let mut notes = vec![format!(
                    "C = {} (search estimate for psi), c = {}, kappa = {}, flatness worst density {}",
                    inst.params.stability, inst.params.c, inst.params.kappa, inst.calibration.worst_density
                )];
                if field == ScalarField::Complex {
                    notes.push(
                        "the stability hypothesis on psi is applied as plain C-stable phase retrieval on V1 over its own index set"
                            .into(),
                    );
                }
                Ok(Built {
                    bound_window: Some(md_bound_window(&inst.params, eps)),
                    claimed_bound: Some(inst.claimed_bound),
                    stability: Some(inst.params.stability),
                    frame: inst.frame,
                    prior: inst.prior,
                    growth: None,
                    notes,
                })
            }
        }
    }
}
