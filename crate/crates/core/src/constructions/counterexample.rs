use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{frame_bounds, parsevalize, Frame};
use crate::hilbert::{ScalarField, Vector};
use crate::lab::{derived_rng, subspace_constant, SearchConfig};
use crate::priors::Growth;

const DRAW_ATTEMPTS: usize = 3;
const LEVEL_SALT: u64 = 0x1E7E_15EE_D000;

/// Tolerance on the frame bounds of a level family.
pub const PARSEVAL_TOL: f64 = 1e-8;

fn min_vectors(field: ScalarField, n: usize) -> usize {
    match field {
        ScalarField::Real => 2 * n - 1,
        ScalarField::Complex => 4 * n,
    }
}

/// Gaussian family of `oversampling·n` vectors in dimension `n`, made
/// Parseval, with a search estimate of its stability constant on the whole
/// space.
pub fn stable_parseval_family<R: Rng + ?Sized>(
    field: ScalarField,
    n: usize,
    oversampling: usize,
    cfg: &SearchConfig,
    rng: &mut R,
) -> Result<(Frame, f64)> {
    if n == 0 {
        return Err(Error::Range("family dimension must be positive".into()));
    }
    if oversampling * n < min_vectors(field, n) {
        return Err(Error::Spec(format!(
            "{} vectors cannot do phase retrieval in {field} dimension {n} (need {})",
            oversampling * n,
            min_vectors(field, n)
        )));
    }
    let count = oversampling * n;
    let mut last = Error::Rank { min_eigenvalue: 0.0 };
    for _ in 0..DRAW_ATTEMPTS {
        let entries = (0..count)
            .map(|j| {
                let coeffs = (0..n)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(rng);
                        let im: f64 = match field {
                            ScalarField::Real => 0.0,
                            ScalarField::Complex => StandardNormal.sample(rng),
                        };
                        Complex64::new(re, im)
                    })
                    .collect();
                Ok((Vector::new(field, coeffs)?, format!("psi:{}", j + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        let family = Frame::labeled(field, n, entries)?;
        match parsevalize(&family) {
            Ok(frame) => {
                let constant = if n == 1 {
                    1.0
                } else {
                    subspace_constant(&frame, n, cfg)?.constant
                };
                return Ok((frame, constant));
            }
            Err(e @ Error::Rank { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Per-level Parseval families `(x_{j,n})` for `V_n`, `n = 1, …, D`, and a
/// uniform stability constant `C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    #[serde(rename = "D")]
    pub dim: usize,
    #[serde(rename = "C")]
    pub stability: f64,
    pub gamma: f64,
    #[serde(rename = "R")]
    pub r: f64,
    /// `levels[n-1]` is the family for `V_n`, in dimension `n`.
    pub levels: Vec<Frame>,
}

impl CounterexampleSpec {
    /// Draws every level from `seed` (level `n` uses its own derived stream)
    /// and takes `C` as the largest level estimate, at least 1.
    pub fn generate(
        field: ScalarField,
        dim: usize,
        gamma: f64,
        r: f64,
        oversampling: usize,
        seed: u64,
        level_cfg: &SearchConfig,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Range("truncation dimension must be positive".into()));
        }
        let levels = (1..=dim)
            .into_par_iter()
            .map(|n| {
                let mut rng = derived_rng(seed ^ LEVEL_SALT, n as u64);
                let cfg = SearchConfig {
                    seed: seed ^ (n as u64).wrapping_mul(0xA24B_AED4_963E_E407),
                    ..level_cfg.clone()
                };
                stable_parseval_family(field, n, oversampling, &cfg, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let stability = levels.iter().map(|(_, c)| *c).fold(1.0, f64::max);
        let spec = CounterexampleSpec {
            dim,
            stability,
            gamma,
            r,
            levels: levels.into_iter().map(|(f, _)| f).collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.levels.len() != self.dim {
            return Err(Error::Spec(format!(
                "{} levels for D = {}",
                self.levels.len(),
                self.dim
            )));
        }
        if !(self.gamma > 1.0 && self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::Spec(format!(
                "need gamma > 1 and R > 0, got {} and {}",
                self.gamma, self.r
            )));
        }
        if !(self.stability >= 1.0 && self.stability.is_finite()) {
            return Err(Error::Spec(format!("C = {} must be at least 1", self.stability)));
        }
        let field = self.levels[0].field();
        for (i, level) in self.levels.iter().enumerate() {
            if level.dim() != i + 1 || level.field() != field {
                return Err(Error::Spec(format!("level {} has dimension {}", i + 1, level.dim())));
            }
            let b = frame_bounds(level)?;
            if (b.lower - 1.0).abs() > PARSEVAL_TOL || (b.upper - 1.0).abs() > PARSEVAL_TOL {
                return Err(Error::Spec(format!(
                    "level {} is not Parseval: bounds ({}, {})",
                    i + 1,
                    b.lower,
                    b.upper
                )));
            }
        }
        Ok(())
    }

    pub fn field(&self) -> ScalarField {
        self.levels[0].field()
    }

    /// `G(m) = 2^m C`.
    pub fn growth(&self) -> Growth {
        Growth::Geometric { c: self.stability }
    }
}

/// `{e_n : n ≤ D} ∪ {2^{-n} x_{j,n}}` and its growth function.
pub fn counterexample_frame(spec: &CounterexampleSpec) -> Result<(Frame, Growth)> {
    spec.validate()?;
    let field = spec.field();
    let d = spec.dim;
    let total = d + spec.levels.iter().map(Frame::len).sum::<usize>();
    let mut entries = Vec::with_capacity(total);
    for k in 0..d {
        entries.push((Vector::basis(field, d, k), format!("onb:{}", k + 1)));
    }
    for (i, level) in spec.levels.iter().enumerate() {
        let n = i + 1;
        let s = 0.5f64.powi(n as i32);
        for (j, x) in level.vectors().iter().enumerate() {
            entries.push((x.embed(d)?.scale_real(s), format!("level:{n}:{}", j + 1)));
        }
    }
    Ok((Frame::labeled(field, d, entries)?, spec.growth()))
}
