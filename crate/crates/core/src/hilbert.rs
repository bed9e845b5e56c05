//! Finite truncation of a separable Hilbert space.
//!
//! A [`Vector`] is the coefficient sequence of an element against a fixed
//! orthonormal basis `e_1, e_2, ...`, cut off at a truncation dimension `D`.
//! Coefficients are always stored as complex pairs; the [`ScalarField`] tag
//! decides whether imaginary parts are admissible.
//!
//! Basis indices in this crate are zero-based: `e_1` of the mathematical
//! literature is `Vector::basis(field, dim, 0)`.

use std::fmt;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Scalar field of a vector or frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarField {
    Real,
    Complex,
}

impl ScalarField {
    pub fn ensure_same(self, other: ScalarField) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Field(format!("{self} vs {other}")))
        }
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Real => f.write_str("real"),
            ScalarField::Complex => f.write_str("complex"),
        }
    }
}

impl std::str::FromStr for ScalarField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(ScalarField::Real),
            "complex" => Ok(ScalarField::Complex),
            other => Err(Error::Spec(format!("unknown scalar field {other:?}"))),
        }
    }
}

/// A truncated coefficient sequence over a declared scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector {
    field: ScalarField,
    coeffs: Vec<Complex64>,
}

impl Vector {
    /// Validates finiteness, positivity of the dimension and, for the real
    /// field, that every imaginary part is zero.
    pub fn new(field: ScalarField, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Range("vector dimension must be positive".into()));
        }
        if let Some(k) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Numerical(format!("non-finite coefficient at index {k}")));
        }
        if field == ScalarField::Real {
            if let Some(k) = coeffs.iter().position(|c| c.im != 0.0) {
                return Err(Error::Field(format!("real vector has imaginary part at index {k}")));
            }
        }
        Ok(Vector { field, coeffs })
    }

    pub fn real(coeffs: &[f64]) -> Result<Self> {
        Vector::new(
            ScalarField::Real,
            coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn complex(coeffs: Vec<Complex64>) -> Result<Self> {
        Vector::new(ScalarField::Complex, coeffs)
    }

    pub fn zeros(field: ScalarField, dim: usize) -> Self {
        assert!(dim > 0, "vector dimension must be positive");
        Vector {
            field,
            coeffs: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// The basis vector with a one at zero-based position `k`.
    pub fn basis(field: ScalarField, dim: usize, k: usize) -> Self {
        let mut v = Vector::zeros(field, dim);
        v.coeffs[k] = Complex64::new(1.0, 0.0);
        v
    }

    pub(crate) fn from_raw(field: ScalarField, coeffs: Vec<Complex64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Vector { field, coeffs }
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Multiplies by a scalar. Real vectors only accept real scalars.
    pub fn scale(&self, s: Complex64) -> Result<Vector> {
        if self.field == ScalarField::Real && s.im != 0.0 {
            return Err(Error::Field("complex scalar applied to a real vector".into()));
        }
        Ok(Vector {
            field: self.field,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        })
    }

    pub fn scale_real(&self, s: f64) -> Vector {
        Vector {
            field: self.field,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        check_compatible(self, other)?;
        Ok(Vector {
            field: self.field,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        check_compatible(self, other)?;
        Ok(Vector {
            field: self.field,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    /// Re-embeds into a larger (or equal) dimension, padding with zeros.
    pub fn embed(&self, dim: usize) -> Result<Vector> {
        if dim < self.dim() {
            return Err(Error::Range(format!(
                "cannot embed dimension {} into {dim}",
                self.dim()
            )));
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(dim, Complex64::new(0.0, 0.0));
        Ok(Vector {
            field: self.field,
            coeffs,
        })
    }
}

pub(crate) fn check_compatible(f: &Vector, g: &Vector) -> Result<()> {
    if f.dim() != g.dim() {
        return Err(Error::Dimension {
            left: f.dim(),
            right: g.dim(),
        });
    }
    f.field.ensure_same(g.field)
}

/// `Σ f_n · conj(g_n)`: linear in `f`, conjugate-linear in `g`.
pub fn inner(f: &Vector, g: &Vector) -> Result<Complex64> {
    check_compatible(f, g)?;
    Ok(inner_unchecked(&f.coeffs, &g.coeffs))
}

#[inline]
pub(crate) fn inner_unchecked(f: &[Complex64], g: &[Complex64]) -> Complex64 {
    f.iter()
        .zip(g)
        .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b.conj())
}

/// Orthogonal projection `P_m` onto the span of the first `m` basis vectors.
pub fn project_head(f: &Vector, m: usize) -> Result<Vector> {
    if m == 0 || m > f.dim() {
        return Err(Error::Range(format!("head dimension {m} outside 1..={}", f.dim())));
    }
    let mut out = f.clone();
    for c in &mut out.coeffs[m..] {
        *c = Complex64::new(0.0, 0.0);
    }
    Ok(out)
}

/// Minimizing unimodular scalar for `‖f − α g‖`: the phase of `⟨f, g⟩`,
/// or `1` when `f ⊥ g`.
pub fn align_phase(f: &Vector, g: &Vector) -> Result<Complex64> {
    check_compatible(f, g)?;
    if g.is_zero() {
        return Err(Error::Degenerate("align_phase with g = 0".into()));
    }
    Ok(phase_of(inner_unchecked(&f.coeffs, &g.coeffs), f.field))
}

fn phase_of(z: Complex64, field: ScalarField) -> Complex64 {
    match field {
        ScalarField::Real => {
            if z.re < 0.0 {
                Complex64::new(-1.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        }
        ScalarField::Complex => {
            let r = z.norm();
            if r == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                z / r
            }
        }
    }
}

/// `inf_{|α|=1} ‖f − α g‖`.
///
/// Equal to `sqrt(‖f‖² + ‖g‖² − 2|⟨f,g⟩|)`, but evaluated as the norm of
/// `f − α* g` at the aligning phase so that nearly parallel pairs keep full
/// relative precision.
pub fn quotient_distance(f: &Vector, g: &Vector) -> Result<f64> {
    check_compatible(f, g)?;
    Ok(quotient_distance_raw(f.field, &f.coeffs, &g.coeffs))
}

pub(crate) fn quotient_distance_raw(field: ScalarField, f: &[Complex64], g: &[Complex64]) -> f64 {
    let alpha = phase_of(inner_unchecked(f, g), field);
    f.iter()
        .zip(g)
        .map(|(a, b)| (a - alpha * b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum CoeffRepr {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Serialize, Deserialize)]
struct VectorRepr {
    field: ScalarField,
    coeffs: Vec<CoeffRepr>,
}

pub(crate) fn coeffs_to_repr(field: ScalarField, coeffs: &[Complex64]) -> Vec<CoeffRepr> {
    coeffs
        .iter()
        .map(|c| match field {
            ScalarField::Real => CoeffRepr::Real(c.re),
            ScalarField::Complex => CoeffRepr::Complex([c.re, c.im]),
        })
        .collect()
}

pub(crate) fn coeffs_from_repr(field: ScalarField, repr: Vec<CoeffRepr>) -> Result<Vec<Complex64>> {
    repr.into_iter()
        .map(|c| match (field, c) {
            (ScalarField::Real, CoeffRepr::Real(x)) => Ok(Complex64::new(x, 0.0)),
            (ScalarField::Complex, CoeffRepr::Complex([re, im])) => Ok(Complex64::new(re, im)),
            (ScalarField::Complex, CoeffRepr::Real(x)) => Ok(Complex64::new(x, 0.0)),
            (ScalarField::Real, CoeffRepr::Complex(_)) => Err(Error::Field("[re, im] pair in a real vector".into())),
        })
        .collect()
}

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        VectorRepr {
            field: self.field,
            coeffs: coeffs_to_repr(self.field, &self.coeffs),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = VectorRepr::deserialize(deserializer)?;
        let coeffs = coeffs_from_repr(repr.field, repr.coeffs).map_err(D::Error::custom)?;
        Vector::new(repr.field, coeffs).map_err(D::Error::custom)
    }
}
