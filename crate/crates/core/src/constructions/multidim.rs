use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{frame_bounds, Frame};
use crate::hilbert::{ScalarField, Vector};
use crate::lab::{derived_rng, SearchConfig};
use crate::priors::PriorSet;

use super::counterexample::stable_parseval_family;
use super::flatness::{calibrate_flatness, flatness_check, rotated_bases_frame, FlatnessCalibration, FlatnessMode};
use super::sequences::{default_sequences, ConstraintKind, MDParams, SequenceEnvelope};

/// Probes used by the flatness check of the multidimensional builders.
pub const FLATNESS_SAMPLES: usize = 10_000;
/// Seed of those probes; calibration reuses it so a calibrated level passes.
pub const FLATNESS_SEED: u64 = 0xF1A7_0000;

const PSI_SALT: u64 = 0x0051_0000;

/// Coordinate of the tail vector `e_n` (`n ≥ 2`) when `V1` occupies the
/// first `n_head` coordinates.
pub fn tail_coordinate(n_head: usize, n: usize) -> usize {
    n_head + n - 2
}

fn mode_of(field: ScalarField) -> FlatnessMode {
    match field {
        ScalarField::Real => FlatnessMode::Real,
        ScalarField::Complex => FlatnessMode::Complex,
    }
}

fn check_inputs(
    psi: &Frame,
    phi: &Frame,
    params: &MDParams,
    env: &SequenceEnvelope,
    kind: ConstraintKind,
    dim: usize,
) -> Result<()> {
    params.validate()?;
    if env.kind != kind {
        return Err(Error::Spec(format!(
            "{kind:?} frame needs a {kind:?} envelope, got {:?}",
            env.kind
        )));
    }
    let field = match kind {
        ConstraintKind::RealMD4_1 => ScalarField::Real,
        _ => ScalarField::Complex,
    };
    for (name, f) in [("psi", psi), ("phi", phi)] {
        if f.field() != field {
            return Err(Error::Field(format!("{name} is {}, expected {field}", f.field())));
        }
        if f.dim() != params.n {
            return Err(Error::Dimension {
                left: params.n,
                right: f.dim(),
            });
        }
    }
    if psi.len() != params.i_size || phi.len() != params.j_size {
        return Err(Error::Spec(format!(
            "|I| = {}, |J| = {} but families have {} and {} vectors",
            params.i_size,
            params.j_size,
            psi.len(),
            phi.len()
        )));
    }
    if dim <= params.n {
        return Err(Error::Range(format!(
            "dimension {dim} leaves no tail beyond N = {}",
            params.n
        )));
    }
    if env.len() < dim - params.n {
        return Err(Error::Spec(format!(
            "envelope has {} terms, need {}",
            env.len(),
            dim - params.n
        )));
    }
    if env.alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::Spec("alpha terms must be finite and nonnegative".into()));
    }
    let kappa = match field {
        ScalarField::Real => params.stability,
        ScalarField::Complex => params.kappa,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(FLATNESS_SEED);
    let out = flatness_check(phi, params.c, kappa, mode_of(field), FLATNESS_SAMPLES, &mut rng)?;
    if !out.pass {
        return Err(Error::Flatness {
            worst_density: out.worst_density,
            required: 1.0 / kappa,
        });
    }
    Ok(())
}

fn tail_vector(phi_j: &Vector, alpha: f64, dim: usize, coord: usize, tail: Complex64) -> Vector {
    let mut coeffs: Vec<Complex64> = phi_j.coeffs().iter().map(|c| c * alpha).collect();
    coeffs.resize(dim, Complex64::new(0.0, 0.0));
    coeffs[coord] = tail;
    Vector::new(phi_j.field(), coeffs).expect("finite coefficients")
}

fn psi_entries(psi: &Frame, dim: usize) -> Result<Vec<(Vector, String)>> {
    psi.vectors()
        .iter()
        .enumerate()
        .map(|(j, v)| Ok((v.embed(dim)?, format!("psi:{}", j + 1))))
        .collect()
}

/// `(ψ_j) ∪ {α_n φ_j + |J|^{-1/2} e_n : j ∈ J, 2 ≤ n ≤ D − N + 1}` in
/// dimension `dim = D`, with `V1` as the first `N` coordinates.
pub fn real_md_frame(psi: &Frame, phi: &Frame, params: &MDParams, env: &SequenceEnvelope, dim: usize) -> Result<Frame> {
    check_inputs(psi, phi, params, env, ConstraintKind::RealMD4_1, dim)?;
    let n_head = params.n;
    let s = Complex64::new(1.0 / (phi.len() as f64).sqrt(), 0.0);
    let mut entries = psi_entries(psi, dim)?;
    for n in 2..=dim - n_head + 1 {
        for (j, p) in phi.vectors().iter().enumerate() {
            let v = tail_vector(p, env.alpha_at(n), dim, tail_coordinate(n_head, n), s);
            entries.push((v, format!("phi:{}:{n}", j + 1)));
        }
    }
    Frame::labeled(ScalarField::Real, dim, entries)
}

/// `(ψ_j) ∪ {α_n φ_j + (2|J|)^{-1/2} e_n} ∪ {α_n φ_j − (2|J|)^{-1/2} i e_n}`.
pub fn complex_md_frame(
    psi: &Frame,
    phi: &Frame,
    params: &MDParams,
    env: &SequenceEnvelope,
    dim: usize,
) -> Result<Frame> {
    check_inputs(psi, phi, params, env, ConstraintKind::ComplexMD4_3, dim)?;
    if env.epsilon >= params.lower.min(0.125) {
        return Err(Error::Constraint(format!(
            "epsilon = {} not below min(1/8, A)",
            env.epsilon
        )));
    }
    let n_head = params.n;
    let s = 1.0 / (2.0 * phi.len() as f64).sqrt();
    let mut entries = psi_entries(psi, dim)?;
    for n in 2..=dim - n_head + 1 {
        let coord = tail_coordinate(n_head, n);
        for (j, p) in phi.vectors().iter().enumerate() {
            let a = env.alpha_at(n);
            entries.push((
                tail_vector(p, a, dim, coord, Complex64::new(s, 0.0)),
                format!("phi:{}:{n}:1", j + 1),
            ));
            entries.push((
                tail_vector(p, a, dim, coord, Complex64::new(0.0, -s)),
                format!("phi:{}:{n}:i", j + 1),
            ));
        }
    }
    Frame::labeled(ScalarField::Complex, dim, entries)
}

/// `[(1 − √(ε/A))² A, (1 + √ε)²]`.
pub fn md_bound_window(params: &MDParams, epsilon: f64) -> (f64, f64) {
    let a = params.lower;
    ((1.0 - (epsilon / a).sqrt()).powi(2) * a, (1.0 + epsilon.sqrt()).powi(2))
}

/// Lipschitz bound implied by the squared-distance conclusions:
/// `√((1−ε)^{-1}) C` (real) and `√((1−ε)^{-1} max(C², 64κc^{-2}))` (complex).
pub fn md_claimed_bound(field: ScalarField, params: &MDParams, epsilon: f64) -> f64 {
    let inv = 1.0 / (1.0 - epsilon);
    match field {
        ScalarField::Real => inv.sqrt() * params.stability,
        ScalarField::Complex => {
            let c2 = params.c * params.c;
            (inv * params.squared_stability().max(64.0 * params.kappa / c2)).sqrt()
        }
    }
}

/// Everything a multidimensional experiment needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdInstance {
    pub psi: Frame,
    pub phi: Frame,
    pub params: MDParams,
    pub calibration: FlatnessCalibration,
    pub envelope: SequenceEnvelope,
    pub frame: Frame,
    pub prior: PriorSet,
    pub claimed_bound: f64,
}

/// Knobs of [`md_instance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MdSetup {
    #[serde(rename = "N")]
    pub n: usize,
    /// `|I| = oversampling·N`.
    pub oversampling: Option<usize>,
    /// Number of rotated bases in `φ`.
    pub copies: usize,
    /// Tail coordinates; defaults to `D − N` and must agree with it.
    #[serde(rename = "D_tail")]
    pub tail: Option<usize>,
}

impl Default for MdSetup {
    fn default() -> Self {
        MdSetup {
            n: 4,
            oversampling: None,
            copies: 4,
            tail: None,
        }
    }
}

/// Draws `ψ` (Gaussian Parseval) and `φ` (rotated bases), estimates `C`,
/// calibrates flatness, and builds the frame with default sequences.
///
/// Default oversampling is 3 (real) and 4 (complex).
pub fn md_instance(
    field: ScalarField,
    setup: &MdSetup,
    dim: usize,
    epsilon: f64,
    seed: u64,
    cfg: &SearchConfig,
) -> Result<MdInstance> {
    let n = setup.n;
    let oversampling = setup.oversampling.unwrap_or(match field {
        ScalarField::Real => 3,
        ScalarField::Complex => 4,
    });
    let mut rng = derived_rng(seed ^ PSI_SALT, 0);
    let (psi, c_est) = stable_parseval_family(field, n, oversampling, cfg, &mut rng)?;
    if !c_est.is_finite() {
        return Err(Error::Spec("psi does not do phase retrieval on V1".into()));
    }
    let phi = rotated_bases_frame(field, n, setup.copies, &mut rng)?;
    let (bp, bf) = (frame_bounds(&psi)?, frame_bounds(&phi)?);
    let stability = c_est.max(1.0);
    let mode = mode_of(field);
    let required = (mode == FlatnessMode::Real).then_some(stability);
    let calibration = calibrate_flatness(&phi, mode, required, FLATNESS_SAMPLES, FLATNESS_SEED)?;
    let params = MDParams {
        n,
        stability,
        lower: bp.lower.min(bf.lower).min(1.0),
        upper: bp.upper.max(bf.upper).min(1.0),
        c: calibration.c,
        kappa: calibration.kappa.max(1.0),
        j_size: phi.len(),
        i_size: psi.len(),
    };
    let kind = match field {
        ScalarField::Real => ConstraintKind::RealMD4_1,
        ScalarField::Complex => ConstraintKind::ComplexMD4_3,
    };
    let envelope = default_sequences(kind, epsilon, Some(params), dim.saturating_sub(n).max(1))?;
    let frame = match field {
        ScalarField::Real => real_md_frame(&psi, &phi, &params, &envelope, dim)?,
        ScalarField::Complex => complex_md_frame(&psi, &phi, &params, &envelope, dim)?,
    };
    let prior = envelope.prior(dim, n)?;
    Ok(MdInstance {
        psi,
        phi,
        params,
        calibration,
        envelope,
        frame,
        prior,
        claimed_bound: md_claimed_bound(field, &params, epsilon),
    })
}
