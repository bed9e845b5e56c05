use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{analysis, Frame};
use crate::hilbert::{inner, ScalarField, Vector};

/// Which flatness condition to test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlatnessMode {
    /// `|⟨x, φ_j⟩| ≥ c‖x‖` for a fraction `≥ 1/κ` of `j`.
    Real,
    /// `c ≤ √N |⟨·, φ_j⟩| / ‖·‖ ≤ 1/c` for both `x` and `y`, fraction `≥ 1/κ`.
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessOutcome {
    pub pass: bool,
    pub worst_density: f64,
}

fn qualifies(mode: FlatnessMode, coeff: f64, norm: f64, c: f64, sqrt_n: f64) -> bool {
    match mode {
        FlatnessMode::Real => coeff >= c * norm,
        FlatnessMode::Complex => {
            let s = sqrt_n * coeff;
            s >= c * norm && s <= norm / c
        }
    }
}

/// Fraction of frame indices satisfying the condition at `x` (and `y` in
/// complex mode; `y = x` when omitted).
pub fn flatness_density(phi: &Frame, c: f64, mode: FlatnessMode, x: &Vector, y: Option<&Vector>) -> Result<f64> {
    if phi.is_empty() {
        return Err(Error::EmptyFrame);
    }
    let sqrt_n = (phi.dim() as f64).sqrt();
    let tx = analysis(phi, x)?;
    let nx = x.norm();
    if nx == 0.0 {
        return Err(Error::Degenerate("flatness density at the zero vector".into()));
    }
    let ty = match (mode, y) {
        (FlatnessMode::Complex, Some(y)) => Some((analysis(phi, y)?, y.norm())),
        _ => None,
    };
    let count = (0..phi.len())
        .filter(|&j| {
            qualifies(mode, tx[j].norm(), nx, c, sqrt_n)
                && ty
                    .as_ref()
                    .is_none_or(|(t, n)| qualifies(mode, t[j].norm(), *n, c, sqrt_n))
        })
        .count();
    Ok(count as f64 / phi.len() as f64)
}

fn gaussian<R: Rng + ?Sized>(field: ScalarField, dim: usize, rng: &mut R) -> Vec<Complex64> {
    (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = match field {
                ScalarField::Real => 0.0,
                ScalarField::Complex => StandardNormal.sample(rng),
            };
            Complex64::new(re, im)
        })
        .collect()
}

// random vector orthogonal to dim − 1 randomly chosen frame vectors; such
// points zero out as many coefficients as possible
fn adversarial_probe<R: Rng + ?Sized>(phi: &Frame, rng: &mut R) -> Result<Vector> {
    let field = phi.field();
    let dim = phi.dim();
    let mut basis: Vec<Vector> = Vec::new();
    for _ in 0..dim.saturating_sub(1) {
        let mut v = phi.vectors()[rng.random_range(0..phi.len())].clone();
        for b in &basis {
            v = v.sub(&b.scale(inner(&v, b)?)?)?;
        }
        let n = v.norm();
        if n > 1e-10 {
            basis.push(v.scale_real(1.0 / n));
        }
    }
    for _ in 0..8 {
        let mut x = Vector::new(field, gaussian(field, dim, rng))?;
        for b in &basis {
            x = x.sub(&b.scale(inner(&x, b)?)?)?;
        }
        if x.norm() > 1e-10 {
            return Ok(x);
        }
    }
    Err(Error::Numerical("could not draw an adversarial flatness probe".into()))
}

fn probe<R: Rng + ?Sized>(phi: &Frame, k: usize, rng: &mut R) -> Result<Vector> {
    if k % 2 == 1 && phi.dim() > 1 {
        adversarial_probe(phi, rng)
    } else {
        let field = phi.field();
        loop {
            let x = Vector::new(field, gaussian(field, phi.dim(), rng))?;
            if !x.is_zero() {
                return Ok(x);
            }
        }
    }
}

/// Sampled flatness test: the minimum density over `samples` probes (random
/// points, alternating with points orthogonal to `N − 1` frame vectors)
/// against the required `1/κ`.
pub fn flatness_check<R: Rng + ?Sized>(
    phi: &Frame,
    c: f64,
    kappa: f64,
    mode: FlatnessMode,
    samples: usize,
    rng: &mut R,
) -> Result<FlatnessOutcome> {
    if phi.is_empty() {
        return Err(Error::EmptyFrame);
    }
    if samples == 0 {
        return Err(Error::Spec("flatness check needs at least one sample".into()));
    }
    if !(c > 0.0 && kappa > 0.0) {
        return Err(Error::Spec(format!(
            "flatness parameters c = {c}, kappa = {kappa} must be positive"
        )));
    }
    let mut worst = f64::INFINITY;
    for k in 0..samples {
        let x = probe(phi, k, rng)?;
        let d = match mode {
            FlatnessMode::Real => flatness_density(phi, c, mode, &x, None)?,
            FlatnessMode::Complex => {
                let y = probe(phi, k / 2, rng)?;
                flatness_density(phi, c, mode, &x, Some(&y))?
            }
        };
        worst = worst.min(d);
    }
    Ok(FlatnessOutcome {
        pass: worst >= 1.0 / kappa,
        worst_density: worst,
    })
}

/// Union of `copies` random orthonormal bases of the `dim`-dimensional
/// space, scaled by `copies^{-1/2}` so the union is Parseval.
pub fn rotated_bases_frame<R: Rng + ?Sized>(
    field: ScalarField,
    dim: usize,
    copies: usize,
    rng: &mut R,
) -> Result<Frame> {
    if dim == 0 || copies == 0 {
        return Err(Error::Spec("rotated bases need positive dimension and copies".into()));
    }
    let s = 1.0 / (copies as f64).sqrt();
    let mut entries = Vec::with_capacity(dim * copies);
    for l in 0..copies {
        let mut onb: Vec<Vector> = Vec::with_capacity(dim);
        while onb.len() < dim {
            let mut v = Vector::new(field, gaussian(field, dim, rng))?;
            for b in &onb {
                v = v.sub(&b.scale(inner(&v, b)?)?)?;
            }
            let n = v.norm();
            if n > 1e-8 {
                onb.push(v.scale_real(1.0 / n));
            }
        }
        for (j, v) in onb.into_iter().enumerate() {
            entries.push((v.scale_real(s), format!("phi:{}", l * dim + j + 1)));
        }
    }
    Frame::labeled(field, dim, entries)
}

/// Flatness level and density constant chosen for a frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessCalibration {
    pub c: f64,
    pub kappa: f64,
    pub worst_density: f64,
}

const LADDER_STEPS: usize = 16;

/// Picks `(c, κ)` from the ladder `c_k = 2^{-k/2} c_0`, where `c_0` is the
/// largest level the condition can meet.
///
/// Real mode: `κ` is given (`required_kappa`) and the largest passing `c`
/// is returned. Complex mode: `κ = 2/worst_density` per rung and the rung
/// minimizing `κ/c²` wins. Every rung sees the same probes, drawn from
/// `seed`, so `flatness_check` with that seed reproduces the verdict.
pub fn calibrate_flatness(
    phi: &Frame,
    mode: FlatnessMode,
    required_kappa: Option<f64>,
    samples: usize,
    seed: u64,
) -> Result<FlatnessCalibration> {
    let longest = phi.vectors().iter().map(Vector::norm).fold(0.0, f64::max);
    let top = match mode {
        FlatnessMode::Real => longest,
        FlatnessMode::Complex => ((phi.dim() as f64).sqrt() * longest).min(1.0),
    };
    let mut best: Option<FlatnessCalibration> = None;
    let mut worst_seen = f64::NAN;
    for k in 0..LADDER_STEPS {
        let c = top * 2f64.powf(-(k as f64) / 2.0);
        let rng = &mut ChaCha8Rng::seed_from_u64(seed);
        match mode {
            FlatnessMode::Real => {
                let kappa = required_kappa.ok_or_else(|| Error::Spec("real flatness needs a required kappa".into()))?;
                let out = flatness_check(phi, c, kappa, mode, samples, rng)?;
                worst_seen = out.worst_density;
                if out.pass {
                    return Ok(FlatnessCalibration {
                        c,
                        kappa,
                        worst_density: out.worst_density,
                    });
                }
            }
            FlatnessMode::Complex => {
                let out = flatness_check(phi, c, 1.0, mode, samples, rng)?;
                worst_seen = out.worst_density;
                if out.worst_density > 0.0 {
                    let kappa = (2.0 / out.worst_density).max(1.0);
                    let cand = FlatnessCalibration {
                        c,
                        kappa,
                        worst_density: out.worst_density,
                    };
                    if best.is_none_or(|b| kappa / (c * c) < b.kappa / (b.c * b.c)) {
                        best = Some(cand);
                    }
                }
            }
        }
    }
    best.ok_or(Error::Flatness {
        worst_density: worst_seen,
        required: required_kappa.map_or(f64::NAN, |k| 1.0 / k),
    })
}
