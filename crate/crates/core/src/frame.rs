//! Frames as finite vector families: analysis operator, magnitude
//! measurements, frame bounds and the canonical Parseval transform.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hilbert::{check_compatible, coeffs_from_repr, coeffs_to_repr, CoeffRepr, ScalarField, Vector};

/// Lower frame bounds at or below this value mark a family as not a frame.
pub const VALID_LOWER_BOUND: f64 = 1e-10;

/// Eigenvalue floor for the inverse square root of the frame operator.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Ordered family of vectors sharing one dimension and scalar field.
///
/// Labels are documentary only.
#[derive(Clone, Debug)]
pub struct Frame {
    field: ScalarField,
    dim: usize,
    vectors: Vec<Vector>,
    labels: Vec<Option<String>>,
    // indices of nonzero coefficients, per vector
    support: Vec<Vec<u32>>,
}

impl PartialEq for Frame {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
            && self.dim == other.dim
            && self.vectors == other.vectors
            && self.labels == other.labels
    }
}

impl Frame {
    pub fn new(field: ScalarField, dim: usize, vectors: Vec<Vector>, labels: Vec<Option<String>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Range("frame dimension must be positive".into()));
        }
        if labels.len() != vectors.len() {
            return Err(Error::Spec(format!(
                "{} labels for {} vectors",
                labels.len(),
                vectors.len()
            )));
        }
        for v in &vectors {
            if v.dim() != dim {
                return Err(Error::Dimension {
                    left: dim,
                    right: v.dim(),
                });
            }
            field.ensure_same(v.field())?;
        }
        let support = vectors
            .iter()
            .map(|v| {
                v.coeffs()
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
                    .map(|(k, _)| k as u32)
                    .collect()
            })
            .collect();
        Ok(Frame {
            field,
            dim,
            vectors,
            labels,
            support,
        })
    }

    /// Unlabeled frame; field and dimension taken from the first vector.
    pub fn from_vectors(vectors: Vec<Vector>) -> Result<Self> {
        let first = vectors.first().ok_or(Error::EmptyFrame)?;
        let (field, dim) = (first.field(), first.dim());
        let labels = vec![None; vectors.len()];
        Frame::new(field, dim, vectors, labels)
    }

    pub fn labeled(field: ScalarField, dim: usize, entries: Vec<(Vector, String)>) -> Result<Self> {
        let (vectors, labels): (Vec<_>, Vec<_>) = entries.into_iter().map(|(v, l)| (v, Some(l))).unzip();
        Frame::new(field, dim, vectors, labels)
    }

    /// The standard orthonormal basis, labeled `onb:n` with one-based `n`.
    pub fn orthonormal_basis(field: ScalarField, dim: usize) -> Self {
        let entries = (0..dim)
            .map(|k| (Vector::basis(field, dim, k), format!("onb:{}", k + 1)))
            .collect();
        Frame::labeled(field, dim, entries).expect("basis vectors are consistent")
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    /// Same family with every vector multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Frame {
        let vectors = self.vectors.iter().map(|v| v.scale_real(s)).collect();
        Frame::new(self.field, self.dim, vectors, self.labels.clone()).expect("scaling preserves shape")
    }

    fn check_vector(&self, f: &Vector) -> Result<()> {
        if f.dim() != self.dim {
            return Err(Error::Dimension {
                left: self.dim,
                right: f.dim(),
            });
        }
        self.field.ensure_same(f.field())
    }

    #[inline]
    fn coefficient(&self, k: usize, f: &[Complex64]) -> Complex64 {
        let phi = self.vectors[k].coeffs();
        self.support[k].iter().fold(Complex64::new(0.0, 0.0), |acc, &i| {
            acc + f[i as usize] * phi[i as usize].conj()
        })
    }

    /// Squared measurement gap `Σ_k (|⟨f,φ_k⟩| − |⟨g,φ_k⟩|)²` on raw
    /// coefficient slices of the right length and field.
    ///
    /// Each difference of moduli is evaluated as
    /// `Re(⟨f−g,φ⟩·conj⟨f+g,φ⟩) / (|⟨f,φ⟩| + |⟨g,φ⟩|)`, which stays accurate
    /// when `f` and `g` are nearly equal.
    pub(crate) fn measurement_gap_sqr(&self, f: &[Complex64], g: &[Complex64]) -> f64 {
        let diff: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| a - b).collect();
        let sum: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| a + b).collect();
        let mut acc = 0.0;
        for k in 0..self.vectors.len() {
            let p = self.coefficient(k, &diff);
            let q = self.coefficient(k, &sum);
            let u = (q + p) * 0.5;
            let v = (q - p) * 0.5;
            let denom = u.norm() + v.norm();
            if denom > 0.0 {
                let gap = (p * q.conj()).re / denom;
                acc += gap * gap;
            }
        }
        acc
    }
}

/// Entrywise moduli of the analysis coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementVector {
    pub values: Vec<f64>,
}

/// Optimal frame constants: extreme eigenvalues of the frame operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

impl FrameBounds {
    pub fn is_valid(&self) -> bool {
        self.lower > VALID_LOWER_BOUND
    }
}

/// `T_Φ(f) = (⟨f, φ_k⟩)_k`.
pub fn analysis(frame: &Frame, f: &Vector) -> Result<Vec<Complex64>> {
    frame.check_vector(f)?;
    Ok((0..frame.len()).map(|k| frame.coefficient(k, f.coeffs())).collect())
}

/// `A_Φ(f) = |T_Φ(f)|`.
pub fn measure(frame: &Frame, f: &Vector) -> Result<MeasurementVector> {
    Ok(MeasurementVector {
        values: analysis(frame, f)?.into_iter().map(|c| c.norm()).collect(),
    })
}

/// `‖A_Φ(f) − A_Φ(g)‖`.
pub fn measurement_distance(frame: &Frame, f: &Vector, g: &Vector) -> Result<f64> {
    frame.check_vector(f)?;
    check_compatible(f, g)?;
    Ok(frame.measurement_gap_sqr(f.coeffs(), g.coeffs()).sqrt())
}

trait Scalar: ComplexField<RealField = f64> + Copy {
    fn from_c(c: Complex64) -> Self;
    fn to_c(self) -> Complex64;
}

impl Scalar for f64 {
    fn from_c(c: Complex64) -> Self {
        c.re
    }
    fn to_c(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    fn from_c(c: Complex64) -> Self {
        c
    }
    fn to_c(self) -> Complex64 {
        self
    }
}

fn frame_operator_as<T: Scalar>(frame: &Frame) -> DMatrix<T> {
    let d = frame.dim;
    let mut s = DMatrix::<T>::zeros(d, d);
    for (v, supp) in frame.vectors.iter().zip(&frame.support) {
        let c = v.coeffs();
        for &a in supp {
            let ca = T::from_c(c[a as usize]);
            for &b in supp {
                let cb = T::from_c(c[b as usize]);
                s[(a as usize, b as usize)] += ca * cb.conjugate();
            }
        }
    }
    s
}

/// The frame operator `S = Σ_k φ_k φ_k*` as a dense Hermitian matrix.
pub fn frame_operator(frame: &Frame) -> DMatrix<Complex64> {
    frame_operator_as::<Complex64>(frame)
}

fn eigen<T: Scalar>(s: DMatrix<T>) -> Result<SymmetricEigen<T, nalgebra::Dyn>> {
    SymmetricEigen::try_new(s, 1e-15, 0)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))
}

fn bounds_as<T: Scalar>(frame: &Frame) -> Result<FrameBounds> {
    let eig = eigen(frame_operator_as::<T>(frame))?;
    let lower = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let upper = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(FrameBounds {
        lower: lower.max(0.0),
        upper,
    })
}

/// Smallest and largest eigenvalue of the frame operator.
pub fn frame_bounds(frame: &Frame) -> Result<FrameBounds> {
    if frame.is_empty() {
        return Err(Error::EmptyFrame);
    }
    match frame.field {
        ScalarField::Real => bounds_as::<f64>(frame),
        ScalarField::Complex => bounds_as::<Complex64>(frame),
    }
}

fn parsevalize_as<T: Scalar>(family: &Frame) -> Result<Frame> {
    let eig = eigen(frame_operator_as::<T>(family))?;
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < EIGENVALUE_FLOOR {
        return Err(Error::Rank { min_eigenvalue: min });
    }
    let d = family.dim;
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let w = T::from_real(lambda.sqrt().recip());
        for i in 0..d {
            scaled[(i, j)] *= w;
        }
    }
    let inv_sqrt = scaled * v.adjoint();
    let vectors = family
        .vectors
        .iter()
        .map(|phi| {
            let x = nalgebra::DVector::<T>::from_iterator(d, phi.coeffs().iter().map(|&c| T::from_c(c)));
            let y = &inv_sqrt * x;
            Vector::from_raw(family.field, y.iter().map(|t| t.to_c()).collect())
        })
        .collect();
    Frame::new(family.field, d, vectors, family.labels.clone())
}

/// Canonical tight frame `{S^{-1/2} φ_k}`; Parseval whenever the family spans.
pub fn parsevalize(family: &Frame) -> Result<Frame> {
    if family.is_empty() {
        return Err(Error::EmptyFrame);
    }
    match family.field {
        ScalarField::Real => parsevalize_as::<f64>(family),
        ScalarField::Complex => parsevalize_as::<Complex64>(family),
    }
}

#[derive(Serialize, Deserialize)]
struct FrameRepr {
    field: ScalarField,
    dim: usize,
    vectors: Vec<Vec<CoeffRepr>>,
    labels: Vec<Option<String>>,
}

impl Serialize for Frame {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        FrameRepr {
            field: self.field,
            dim: self.dim,
            vectors: self
                .vectors
                .iter()
                .map(|v| coeffs_to_repr(self.field, v.coeffs()))
                .collect(),
            labels: self.labels.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Frame {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = FrameRepr::deserialize(deserializer)?;
        let vectors = repr
            .vectors
            .into_iter()
            .map(|c| {
                let coeffs = coeffs_from_repr(repr.field, c)?;
                Vector::new(repr.field, coeffs)
            })
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        Frame::new(repr.field, repr.dim, vectors, repr.labels).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn real(v: &[f64]) -> Vector {
        Vector::real(v).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn analysis_examples() {
        let onb = Frame::orthonormal_basis(ScalarField::Real, 3);
        let f = real(&[1.0, -2.0, 0.5]);
        assert_eq!(analysis(&onb, &f).unwrap(), f.coeffs().to_vec());

        let fr = Frame::from_vectors(vec![real(&[1.0, 0.0]), real(&[1.0, 1.0])]).unwrap();
        let e2 = real(&[0.0, 1.0]);
        assert_eq!(analysis(&fr, &e2).unwrap(), vec![c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn measure_examples() {
        let onb = Frame::orthonormal_basis(ScalarField::Real, 2);
        let f = real(&[3.0, -4.0]);
        assert_eq!(measure(&onb, &f).unwrap().values, vec![3.0, 4.0]);
        assert_eq!(measure(&onb, &f.scale_real(-1.0)).unwrap(), measure(&onb, &f).unwrap());

        let e = Frame::orthonormal_basis(ScalarField::Complex, 1);
        let f = Vector::complex(vec![c(0.0, 2.0)]).unwrap();
        assert_eq!(measure(&e, &f).unwrap().values, vec![2.0]);
    }

    #[test]
    fn measurement_distance_is_phase_blind() {
        let fr = Frame::from_vectors(vec![
            Vector::complex(vec![c(1.0, 0.0), c(0.5, -0.25)]).unwrap(),
            Vector::complex(vec![c(0.0, 1.0), c(1.0, 0.0)]).unwrap(),
            Vector::complex(vec![c(0.3, 0.3), c(-1.0, 0.2)]).unwrap(),
        ])
        .unwrap();
        let f = Vector::complex(vec![c(0.2, -1.0), c(0.7, 0.1)]).unwrap();
        assert_eq!(measurement_distance(&fr, &f, &f).unwrap(), 0.0);
        let alpha = Complex64::from_polar(1.0, 0.9);
        let g = f.scale(alpha).unwrap();
        assert!(measurement_distance(&fr, &f, &g).unwrap() < 1e-15);
    }

    #[test]
    fn measurement_distance_matches_naive_difference() {
        let fr = Frame::from_vectors(vec![real(&[1.0, 2.0]), real(&[-1.0, 0.5]), real(&[0.0, 1.0])]).unwrap();
        let f = real(&[0.3, -0.7]);
        let g = real(&[1.1, 0.2]);
        let a = measure(&fr, &f).unwrap().values;
        let b = measure(&fr, &g).unwrap().values;
        let naive = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!((measurement_distance(&fr, &f, &g).unwrap() - naive).abs() < 1e-14);
    }

    #[test]
    fn frame_bounds_examples() {
        let b = frame_bounds(&Frame::orthonormal_basis(ScalarField::Complex, 5)).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-14 && (b.upper - 1.0).abs() < 1e-14);

        let fr = Frame::from_vectors(vec![real(&[1.0, 0.0]), real(&[1.0, 0.0]), real(&[0.0, 1.0])]).unwrap();
        let b = frame_bounds(&fr).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-14 && (b.upper - 2.0).abs() < 1e-14);

        let empty = Frame::new(ScalarField::Real, 2, vec![], vec![]).unwrap();
        assert!(matches!(frame_bounds(&empty), Err(Error::EmptyFrame)));
    }

    #[test]
    fn parsevalize_examples() {
        let onb = Frame::orthonormal_basis(ScalarField::Real, 3);
        let p = parsevalize(&onb).unwrap();
        for (a, b) in p.vectors().iter().zip(onb.vectors()) {
            assert!(a.sub(b).unwrap().norm() < 1e-14);
        }

        let fr = Frame::from_vectors(vec![real(&[2.0, 0.0]), real(&[0.0, 1.0])]).unwrap();
        let p = parsevalize(&fr).unwrap();
        assert!(p.vectors()[0].sub(&real(&[1.0, 0.0])).unwrap().norm() < 1e-14);
        assert!(p.vectors()[1].sub(&real(&[0.0, 1.0])).unwrap().norm() < 1e-14);

        let deficient = Frame::from_vectors(vec![real(&[1.0, 0.0]), real(&[2.0, 0.0])]).unwrap();
        assert!(matches!(parsevalize(&deficient), Err(Error::Rank { .. })));
    }

    #[test]
    fn parsevalize_gaussian_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for field in [ScalarField::Real, ScalarField::Complex] {
            for n in 1..=6 {
                let vectors = (0..2 * n - 1 + 1)
                    .map(|_| {
                        let coeffs = (0..n)
                            .map(|_| {
                                let re: f64 = StandardNormal.sample(&mut rng);
                                let im: f64 = match field {
                                    ScalarField::Real => 0.0,
                                    ScalarField::Complex => StandardNormal.sample(&mut rng),
                                };
                                c(re, im)
                            })
                            .collect();
                        Vector::new(field, coeffs).unwrap()
                    })
                    .collect();
                let p = parsevalize(&Frame::from_vectors(vectors).unwrap()).unwrap();
                let b = frame_bounds(&p).unwrap();
                assert!((b.lower - 1.0).abs() < 1e-8 && (b.upper - 1.0).abs() < 1e-8, "{b:?}");
            }
        }
    }

    #[test]
    fn json_round_trip_and_mismatch() {
        let fr = Frame::labeled(
            ScalarField::Complex,
            2,
            vec![
                (Vector::complex(vec![c(1.0, 0.0), c(0.0, -1.0)]).unwrap(), "a".into()),
                (Vector::complex(vec![c(0.0, 0.0), c(2.0, 0.5)]).unwrap(), "b".into()),
            ],
        )
        .unwrap();
        let s = serde_json::to_string(&fr).unwrap();
        let back: Frame = serde_json::from_str(&s).unwrap();
        assert_eq!(back, fr);

        let bad = r#"{"field":"real","dim":3,"vectors":[[1.0,2.0]],"labels":[null]}"#;
        assert!(serde_json::from_str::<Frame>(bad).is_err());
    }
}
