use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::hilbert::{ScalarField, Vector};

use super::sequences::{ConstraintKind, SequenceEnvelope};

fn check_envelope(env: &SequenceEnvelope, kind: ConstraintKind, dim: usize) -> Result<()> {
    if env.kind != kind {
        return Err(Error::Spec(format!(
            "{kind:?} frame needs a {kind:?} envelope, got {:?}",
            env.kind
        )));
    }
    if dim < 2 {
        return Err(Error::Range(format!("dimension {dim} leaves no perturbed vectors")));
    }
    if env.len() < dim - 1 {
        return Err(Error::Spec(format!(
            "envelope has {} terms, need {}",
            env.len(),
            dim - 1
        )));
    }
    Ok(())
}

fn perturbed(field: ScalarField, dim: usize, alpha: f64, n: usize, unit: Complex64) -> Vector {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); dim];
    coeffs[0] = Complex64::new(alpha, 0.0);
    coeffs[n - 1] = unit;
    Vector::new(field, coeffs).expect("finite coefficients")
}

/// `{e_1} ∪ {α_n e_1 + e_n : 2 ≤ n ≤ D}` over the reals.
pub fn real_onedim_frame(dim: usize, env: &SequenceEnvelope) -> Result<Frame> {
    check_envelope(env, ConstraintKind::Real3_1, dim)?;
    let field = ScalarField::Real;
    let mut entries = vec![(Vector::basis(field, dim, 0), "onb:1".to_string())];
    for n in 2..=dim {
        let v = perturbed(field, dim, env.alpha_at(n), n, Complex64::new(1.0, 0.0));
        entries.push((v, format!("phi:{n}")));
    }
    Frame::labeled(field, dim, entries)
}

/// `{e_1} ∪ {α_n e_1 + e_n} ∪ {α_n e_1 + i e_n}` over the complex numbers,
/// ordered `e_1, φ_{2,1}, φ_{2,i}, φ_{3,1}, …`.
pub fn complex_onedim_frame(dim: usize, env: &SequenceEnvelope) -> Result<Frame> {
    check_envelope(env, ConstraintKind::Complex3_2, dim)?;
    let field = ScalarField::Complex;
    let mut entries = vec![(Vector::basis(field, dim, 0), "onb:1".to_string())];
    for n in 2..=dim {
        let a = env.alpha_at(n);
        entries.push((
            perturbed(field, dim, a, n, Complex64::new(1.0, 0.0)),
            format!("phi:{n}:1"),
        ));
        entries.push((
            perturbed(field, dim, a, n, Complex64::new(0.0, 1.0)),
            format!("phi:{n}:i"),
        ));
    }
    Frame::labeled(field, dim, entries)
}
