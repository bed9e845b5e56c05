//! Nonlinear prior sets defined by relative tail envelopes.
//!
//! A [`PriorSet`] over dimension `D` with a head block of size `h` is the cone
//!
//! ```text
//! { f : ‖f − P_m f‖ ≤ t_m ‖f‖  for m = 1, …, D − h }
//! ```
//!
//! where `P_m` projects onto the first `h + m − 1` coordinates (so `P_1` is
//! the head block `V_1`). With `h = 1` this is the familiar filtration
//! `V_m = span{e_1, …, e_m}`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{ScalarField, Vector};

/// Relative slack tolerated at the envelope boundary.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

// repair rescales only beyond this relative excess, which keeps it idempotent
const REPAIR_TRIGGER: f64 = 1e-14;

/// Increasing growth function `G(m)` of the subspace stability constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Growth {
    /// `G(m) = 2^m · c`.
    Geometric { c: f64 },
    /// `G(m) = values[m − 1]`.
    Table { values: Vec<f64> },
}

impl Growth {
    pub fn eval(&self, m: usize) -> f64 {
        match self {
            Growth::Geometric { c } => 2f64.powi(m as i32) * c,
            Growth::Table { values } => values.get(m.wrapping_sub(1)).copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "provenance", rename_all = "snake_case")]
pub enum Provenance {
    /// `t_m = G(m+1)^{-γ} R`.
    FromGrowth {
        gamma: f64,
        #[serde(rename = "R")]
        r: f64,
        growth: Growth,
    },
    /// `t_m = β_{m+1}` for a prescribed tail sequence.
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorRepr", into = "PriorRepr")]
pub struct PriorSet {
    dim: usize,
    head_dim: usize,
    envelope: Vec<f64>,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct PriorRepr {
    #[serde(flatten)]
    provenance: Provenance,
    #[serde(rename = "D")]
    dim: usize,
    head_dim: usize,
    envelope: Vec<f64>,
}

impl TryFrom<PriorRepr> for PriorSet {
    type Error = Error;

    fn try_from(r: PriorRepr) -> Result<Self> {
        PriorSet::new(r.dim, r.head_dim, r.envelope, r.provenance)
    }
}

impl From<PriorSet> for PriorRepr {
    fn from(p: PriorSet) -> Self {
        PriorRepr {
            provenance: p.provenance,
            dim: p.dim,
            head_dim: p.head_dim,
            envelope: p.envelope,
        }
    }
}

impl PriorSet {
    pub fn new(dim: usize, head_dim: usize, envelope: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if head_dim == 0 || head_dim > dim {
            return Err(Error::Spec(format!("head block {head_dim} outside 1..={dim}")));
        }
        if envelope.len() != dim - head_dim {
            return Err(Error::Spec(format!(
                "envelope has {} entries, expected {}",
                envelope.len(),
                dim - head_dim
            )));
        }
        for (i, &t) in envelope.iter().enumerate() {
            if !(t.is_finite() && (0.0..1.0).contains(&t)) {
                return Err(Error::Spec(format!("envelope t_{} = {t} not in [0, 1)", i + 1)));
            }
            if i > 0 && t > envelope[i - 1] {
                return Err(Error::Spec(format!("envelope increases at m = {}", i + 1)));
            }
        }
        Ok(PriorSet {
            dim,
            head_dim,
            envelope,
            provenance,
        })
    }

    /// Prior with envelope `t_m = β_{m+1}`; `beta[0]` is `β_2`.
    pub fn direct(dim: usize, head_dim: usize, beta: &[f64]) -> Result<Self> {
        let len = dim
            .checked_sub(head_dim)
            .ok_or_else(|| Error::Spec("head block larger than D".into()))?;
        if beta.len() < len {
            return Err(Error::Spec(format!(
                "need β_2..β_{} but only {} terms given",
                len + 1,
                beta.len()
            )));
        }
        PriorSet::new(dim, head_dim, beta[..len].to_vec(), Provenance::Direct)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn head_dim(&self) -> usize {
        self.head_dim
    }

    /// `t_1, …, t_{D−h}`.
    pub fn envelope(&self) -> &[f64] {
        &self.envelope
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// `t_m` with `t_m = 0` past the end of the envelope.
    pub fn t(&self, m: usize) -> f64 {
        assert!(m >= 1);
        self.envelope.get(m - 1).copied().unwrap_or(0.0)
    }

    /// Largest admissible modulus of the coefficient entering at depth `n`
    /// (coordinate `h + n − 2`), relative to the norm: `t_{n−1}`.
    pub(crate) fn coordinate_scale(&self, coord: usize) -> f64 {
        if coord < self.head_dim {
            1.0
        } else {
            self.t(coord - self.head_dim + 1)
        }
    }

    fn check(&self, f: &Vector) -> Result<()> {
        if f.dim() != self.dim {
            return Err(Error::Dimension {
                left: self.dim,
                right: f.dim(),
            });
        }
        Ok(())
    }
}

/// `t_m = G(m+1)^{-γ} R` for `m = 1, …, D−1`.
pub fn envelope_from_growth(growth: &Growth, gamma: f64, r: f64, dim: usize) -> Result<PriorSet> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::Spec(format!("gamma = {gamma} must exceed 1")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Spec(format!("R = {r} must be nonnegative")));
    }
    if dim == 0 {
        return Err(Error::Spec("D must be positive".into()));
    }
    let g: Vec<f64> = (1..=dim).map(|m| growth.eval(m)).collect();
    if g.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Spec("G must be positive and finite on 1..=D".into()));
    }
    if g.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Spec("G must be strictly increasing".into()));
    }
    let envelope = (1..dim).map(|m| g[m].powf(-gamma) * r).collect();
    PriorSet::new(
        dim,
        1,
        envelope,
        Provenance::FromGrowth {
            gamma,
            r,
            growth: growth.clone(),
        },
    )
}

/// Membership verdict and the worst relative margin `min_m (t_m‖f‖ − ‖f − P_m f‖)/‖f‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Membership {
    pub ok: bool,
    pub margin: f64,
}

fn tail_norms_sqr(prior: &PriorSet, coeffs: &[Complex64]) -> Vec<f64> {
    // entry m-1 holds ‖f − P_m f‖², m = 1..=D−h
    let len = prior.envelope.len();
    let mut out = vec![0.0; len];
    let mut acc = 0.0;
    for m in (1..=len).rev() {
        acc += coeffs[prior.head_dim + m - 1].norm_sqr();
        out[m - 1] = acc;
    }
    out
}

pub fn membership(prior: &PriorSet, f: &Vector) -> Result<Membership> {
    prior.check(f)?;
    if f.is_zero() {
        return Err(Error::Degenerate("the zero vector is excluded from every prior".into()));
    }
    let norm = f.norm();
    let mut ok = true;
    let mut margin = f64::INFINITY;
    for (m, tail_sq) in tail_norms_sqr(prior, f.coeffs()).into_iter().enumerate() {
        let tail = tail_sq.sqrt();
        let t = prior.envelope[m];
        if tail > t * norm * (1.0 + MEMBERSHIP_SLACK) {
            ok = false;
        }
        margin = margin.min((t * norm - tail) / norm);
    }
    Ok(Membership { ok, margin })
}

fn random_scalar<R: Rng + ?Sized>(field: ScalarField, rng: &mut R) -> Complex64 {
    match field {
        ScalarField::Real => Complex64::new(StandardNormal.sample(rng), 0.0),
        ScalarField::Complex => Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)),
    }
}

fn random_unimodular<R: Rng + ?Sized>(field: ScalarField, rng: &mut R) -> Complex64 {
    match field {
        ScalarField::Real => {
            if rng.random::<bool>() {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(-1.0, 0.0)
            }
        }
        ScalarField::Complex => Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)),
    }
}

/// Draws an element of the prior: unit head block, tail coefficients bounded
/// by the telescoping envelope `sqrt(t_{n−1}² − t_n²)`.
pub fn sample<R: Rng + ?Sized>(prior: &PriorSet, field: ScalarField, rng: &mut R) -> Vector {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); prior.dim];
    loop {
        for c in &mut coeffs[..prior.head_dim] {
            *c = random_scalar(field, rng);
        }
        let n: f64 = coeffs[..prior.head_dim]
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if n > 0.0 {
            for c in &mut coeffs[..prior.head_dim] {
                *c /= n;
            }
            break;
        }
    }
    let len = prior.envelope.len();
    for m in 1..=len {
        // coefficient entering at depth m+1
        let hi = prior.t(m);
        let lo = prior.t(m + 1);
        let bound = (hi * hi - lo * lo).max(0.0).sqrt();
        let u: f64 = rng.random();
        coeffs[prior.head_dim + m - 1] = random_unimodular(field, rng) * (u * bound);
    }
    let f = Vector::from_raw(field, coeffs);
    assert!(
        membership(prior, &f).map(|m| m.ok).unwrap_or(false),
        "sampler left the prior"
    );
    f
}

/// Maps `f` into the prior by shrinking tail blocks, deepest first, by the
/// minimal factor restoring each envelope constraint.
pub fn repair(prior: &PriorSet, f: &Vector) -> Result<Vector> {
    prior.check(f)?;
    let mut coeffs = f.coeffs().to_vec();
    repair_in_place(prior, &mut coeffs)?;
    Ok(Vector::from_raw(f.field(), coeffs))
}

pub(crate) fn repair_in_place(prior: &PriorSet, coeffs: &mut [Complex64]) -> Result<()> {
    let h = prior.head_dim;
    let head_sq: f64 = coeffs[..h].iter().map(|c| c.norm_sqr()).sum();
    if head_sq == 0.0 {
        return Err(Error::Degenerate("repair needs a nonzero head block".into()));
    }
    let len = prior.envelope.len();
    let mut prefix = Vec::with_capacity(len + 1);
    let mut acc = head_sq;
    prefix.push(acc);
    for c in &coeffs[h..] {
        acc += c.norm_sqr();
        prefix.push(acc);
    }
    // prefix[m-1] = ‖P_m f‖²
    let mut shrink = vec![1.0; len];
    let mut tail_sq = 0.0;
    for m in (1..=len).rev() {
        tail_sq += coeffs[h + m - 1].norm_sqr();
        let t = prior.envelope[m - 1];
        let head = prefix[m - 1].sqrt();
        let bound = t * head / (1.0 - t * t).sqrt();
        let tail = tail_sq.sqrt();
        if tail > bound * (1.0 + REPAIR_TRIGGER) {
            let s = bound / tail;
            shrink[m - 1] = s;
            tail_sq *= s * s;
        }
    }
    let mut mult = 1.0;
    for m in 1..=len {
        mult *= shrink[m - 1];
        if mult != 1.0 {
            coeffs[h + m - 1] *= mult;
        }
    }
    Ok(())
}

/// The witness pair `e_1 ± R G(m)^{-γ} e_m` for an arbitrary growth function.
pub fn growth_witness_pair(
    growth: &Growth,
    m: usize,
    gamma: f64,
    r: f64,
    dim: usize,
    field: ScalarField,
) -> Result<(Vector, Vector)> {
    let t = r * growth.eval(m).powf(-gamma);
    witness_from_amplitude(m, t, dim, field)
}

/// `x = e_1 + R/(2^{mγ}C^γ) e_m`, `y = e_1 − R/(2^{mγ}C^γ) e_m` (one-based `m`).
pub fn level_witness_pair(
    m: usize,
    gamma: f64,
    r: f64,
    c: f64,
    dim: usize,
    field: ScalarField,
) -> Result<(Vector, Vector)> {
    let t = r / (2f64.powf(m as f64 * gamma) * c.powf(gamma));
    witness_from_amplitude(m, t, dim, field)
}

fn witness_from_amplitude(m: usize, t: f64, dim: usize, field: ScalarField) -> Result<(Vector, Vector)> {
    if m < 2 || m > dim {
        return Err(Error::Range(format!("witness depth {m} outside 2..={dim}")));
    }
    if !t.is_finite() {
        return Err(Error::Numerical(format!("witness amplitude {t}")));
    }
    let mut x = Vector::basis(field, dim, 0);
    let mut y = x.clone();
    x.coeffs_mut()[m - 1] = Complex64::new(t, 0.0);
    y.coeffs_mut()[m - 1] = Complex64::new(-t, 0.0);
    Ok((x, y))
}
