use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::PriorSet;

/// Which inequality system an envelope is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    Real3_1,
    Complex3_2,
    RealMD4_1,
    ComplexMD4_3,
}

/// Parameters of the multidimensional constructions.
///
/// `C` is always the Lipschitz-form constant of `ψ` on `V1`
/// (`dq ≤ C·dm`); the complex conditions use its square.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MDParams {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "C")]
    pub stability: f64,
    #[serde(rename = "A")]
    pub lower: f64,
    #[serde(rename = "B")]
    pub upper: f64,
    pub c: f64,
    pub kappa: f64,
    #[serde(rename = "J_size")]
    pub j_size: usize,
    #[serde(rename = "I_size")]
    pub i_size: usize,
}

impl MDParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.j_size == 0 || self.i_size == 0 {
            return Err(Error::Spec("N, |J| and |I| must be positive".into()));
        }
        if !(self.lower > 0.0 && self.lower <= self.upper && self.upper <= 1.0 + 1e-9) {
            return Err(Error::Spec(format!(
                "frame bounds A = {}, B = {} violate 0 < A ≤ B ≤ 1",
                self.lower, self.upper
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Spec(format!("flatness level c = {} must be positive", self.c)));
        }
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return Err(Error::Spec(format!("kappa = {} must be at least 1", self.kappa)));
        }
        if !(self.stability >= 1.0 && self.stability.is_finite()) {
            return Err(Error::Spec(format!("C = {} must be at least 1", self.stability)));
        }
        Ok(())
    }

    /// The squared-form constant of the complex hypothesis.
    pub fn squared_stability(&self) -> f64 {
        self.stability * self.stability
    }
}

/// Sequences `α_n`, `β_n` (`n ≥ 2`) and `ε`; `alpha[0]` is `α_2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceEnvelope {
    pub epsilon: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub kind: ConstraintKind,
    /// Present for the multidimensional kinds.
    pub params: Option<MDParams>,
}

/// Right-hand sides of the two inequality families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeBudget {
    /// Bound on `Σα_n` (or `Σα_n²` for `ComplexMD4_3`).
    pub alpha_sum: f64,
    /// Strict for every kind but `ComplexMD4_3`.
    pub alpha_sum_strict: bool,
}

impl ConstraintKind {
    fn needs_params(self) -> bool {
        matches!(self, ConstraintKind::RealMD4_1 | ConstraintKind::ComplexMD4_3)
    }

    fn squares_alpha(self) -> bool {
        self == ConstraintKind::ComplexMD4_3
    }
}

fn budget(kind: ConstraintKind, epsilon: f64, params: Option<&MDParams>) -> Result<EnvelopeBudget> {
    if !(epsilon > 0.0 && epsilon < 0.125) {
        return Err(Error::Constraint(format!("epsilon = {epsilon} outside (0, 1/8)")));
    }
    let p = match (kind.needs_params(), params) {
        (true, None) => return Err(Error::Spec(format!("{kind:?} needs MD parameters"))),
        (true, Some(p)) => {
            p.validate()?;
            Some(p)
        }
        (false, _) => None,
    };
    let (alpha_sum, alpha_sum_strict) = match kind {
        ConstraintKind::Real3_1 => (epsilon / 2.0, true),
        ConstraintKind::Complex3_2 => (1.0 / 200.0, true),
        ConstraintKind::RealMD4_1 => {
            let p = p.expect("checked");
            (0.25 / p.stability / (p.j_size as f64).sqrt() * epsilon, true)
        }
        ConstraintKind::ComplexMD4_3 => {
            let p = p.expect("checked");
            if epsilon >= p.lower {
                return Err(Error::Constraint(format!(
                    "epsilon = {epsilon} not below A = {}",
                    p.lower
                )));
            }
            let c2 = p.c * p.c;
            let m = (1.0 / p.squared_stability()).min(c2 / (64.0 * p.kappa));
            (epsilon * epsilon / 11.0 / p.j_size as f64 / c2 * m, false)
        }
    };
    Ok(EnvelopeBudget {
        alpha_sum,
        alpha_sum_strict,
    })
}

// strict bound on β_n given α_n
fn beta_bound(kind: ConstraintKind, alpha: f64, params: Option<&MDParams>) -> f64 {
    match kind {
        ConstraintKind::Real3_1 => alpha / 2.0,
        ConstraintKind::Complex3_2 => alpha * alpha / 2.0,
        ConstraintKind::RealMD4_1 => {
            let c = params.map_or(0.0, |p| p.c);
            c * c * alpha / 64.0
        }
        ConstraintKind::ComplexMD4_3 => {
            let p = params.expect("complex MD envelope carries parameters");
            p.c * p.c * alpha / 64.0 / (p.n as f64).sqrt()
        }
    }
}

impl SequenceEnvelope {
    /// Validated envelope.
    pub fn new(
        kind: ConstraintKind,
        epsilon: f64,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        params: Option<MDParams>,
    ) -> Result<Self> {
        let env = SequenceEnvelope {
            epsilon,
            alpha,
            beta,
            kind,
            params,
        };
        env.check()?;
        Ok(env)
    }

    /// Number of terms `α_2, …`.
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// `α_n` for one-based `n ≥ 2`.
    pub fn alpha_at(&self, n: usize) -> f64 {
        self.alpha[n - 2]
    }

    pub fn beta_at(&self, n: usize) -> f64 {
        self.beta[n - 2]
    }

    pub fn budget(&self) -> Result<EnvelopeBudget> {
        budget(self.kind, self.epsilon, self.params.as_ref())
    }

    /// Checks every hypothesis of the envelope's kind on the stored terms.
    pub fn check(&self) -> Result<()> {
        let b = self.budget()?;
        if self.alpha.is_empty() || self.alpha.len() != self.beta.len() {
            return Err(Error::Spec(format!(
                "{} alpha terms, {} beta terms",
                self.alpha.len(),
                self.beta.len()
            )));
        }
        for (name, seq) in [("alpha", &self.alpha), ("beta", &self.beta)] {
            for (i, &x) in seq.iter().enumerate() {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(Error::Constraint(format!("{name}_{} = {x} must be positive", i + 2)));
                }
                if i > 0 && x >= seq[i - 1] {
                    return Err(Error::Constraint(format!(
                        "{name} not strictly decreasing at n = {}",
                        i + 2
                    )));
                }
            }
        }
        let sum: f64 = if self.kind.squares_alpha() {
            self.alpha.iter().map(|a| a * a).sum()
        } else {
            self.alpha.iter().sum()
        };
        let ok = if b.alpha_sum_strict {
            sum < b.alpha_sum
        } else {
            sum <= b.alpha_sum
        };
        if !ok {
            return Err(Error::Constraint(format!(
                "alpha sum {sum:e} exceeds {:e}",
                b.alpha_sum
            )));
        }
        for (i, (&a, &beta)) in self.alpha.iter().zip(&self.beta).enumerate() {
            let bound = beta_bound(self.kind, a, self.params.as_ref());
            if beta >= bound {
                return Err(Error::Constraint(format!(
                    "beta_{} = {beta:e} not below {bound:e}",
                    i + 2
                )));
            }
        }
        Ok(())
    }

    /// Prior `{f : ‖f − P_m f‖ ≤ β_{m+1}‖f‖}` on `dim` coordinates with a
    /// head block of `head_dim`.
    pub fn prior(&self, dim: usize, head_dim: usize) -> Result<PriorSet> {
        PriorSet::direct(dim, head_dim, &self.beta)
    }
}

/// Geometric sequences (ratio 1/2) using half of every admissible budget.
///
/// `len` is the number of terms `α_2, …, α_{len+1}`.
pub fn default_sequences(
    kind: ConstraintKind,
    epsilon: f64,
    params: Option<MDParams>,
    len: usize,
) -> Result<SequenceEnvelope> {
    if len == 0 {
        return Err(Error::Spec("envelope needs at least one term".into()));
    }
    let b = budget(kind, epsilon, params.as_ref())?;
    let target = b.alpha_sum / 2.0;
    let alpha: Vec<f64> = if kind.squares_alpha() {
        let norm: f64 = (0..len).map(|k| 0.25f64.powi(k as i32)).sum();
        let a = (target / norm).sqrt();
        (0..len).map(|k| a * 0.5f64.powi(k as i32)).collect()
    } else {
        let norm: f64 = (0..len).map(|k| 0.5f64.powi(k as i32)).sum();
        (0..len).map(|k| target / norm * 0.5f64.powi(k as i32)).collect()
    };
    let beta = alpha
        .iter()
        .map(|&a| beta_bound(kind, a, params.as_ref()) / 2.0)
        .collect();
    SequenceEnvelope::new(kind, epsilon, alpha, beta, params)
}
