use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frame::{analysis, measurement_distance, Frame};
use crate::hilbert::{inner, quotient_distance, ScalarField, Vector};

use super::report::Witness;
use super::DEFAULT_TOL;

const REFINE_CANDIDATES: usize = 8;
const REFINE_MIN_STEP: f64 = 1e-11;

/// Outcome of the search for an orthogonal pair in `span{f, g}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionResult {
    pub found: bool,
    pub f: Vector,
    pub g: Vector,
    pub dq: f64,
    pub dm: f64,
    /// Quotient and measurement distance of the input pair.
    pub target_dq: f64,
    pub target_dm: f64,
}

struct Span {
    field: ScalarField,
    w1: Vector,
    w2: Vector,
    t1: Vec<Complex64>,
    t2: Vec<Complex64>,
    radius: f64,
}

impl Span {
    // params: [θ, ρ] (real) or [θ, ρ, φ] (complex)
    fn coefficients(&self, p: &[f64]) -> ([Complex64; 2], [Complex64; 2]) {
        let (theta, rho) = (p[0], p[1]);
        let phase = if p.len() > 2 {
            Complex64::from_polar(1.0, p[2])
        } else {
            Complex64::new(1.0, 0.0)
        };
        let (s, c) = theta.sin_cos();
        let r1 = self.radius * rho.cos();
        let r2 = self.radius * rho.sin();
        let a = [Complex64::new(r1 * c, 0.0), phase * (r1 * s)];
        let b = [-phase.conj() * (r2 * s), Complex64::new(r2 * c, 0.0)];
        (a, b)
    }

    fn dm(&self, p: &[f64]) -> f64 {
        let (a, b) = self.coefficients(p);
        self.t1
            .iter()
            .zip(&self.t2)
            .map(|(x, y)| {
                let fa = (x * a[0] + y * a[1]).norm();
                let fb = (x * b[0] + y * b[1]).norm();
                (fa - fb).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    fn vectors(&self, p: &[f64]) -> (Vector, Vector) {
        let (a, b) = self.coefficients(p);
        let combine = |c: [Complex64; 2]| {
            let v: Vec<Complex64> = self
                .w1
                .coeffs()
                .iter()
                .zip(self.w2.coeffs())
                .map(|(x, y)| x * c[0] + y * c[1])
                .collect();
            Vector::from_raw(self.field, v)
        };
        (combine(a), combine(b))
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        match self.field {
            ScalarField::Real => vec![(0.0, PI), (0.0, FRAC_PI_2)],
            ScalarField::Complex => vec![(0.0, FRAC_PI_2), (0.0, FRAC_PI_2), (0.0, TAU)],
        }
    }
}

fn compass_refine(span: &Span, mut p: Vec<f64>, mut val: f64, mut step: f64) -> (Vec<f64>, f64) {
    let k = p.len();
    while step > REFINE_MIN_STEP {
        let mut improved = false;
        for i in 0..k {
            for sign in [1.0, -1.0] {
                let mut q = p.clone();
                q[i] += sign * step;
                let v = span.dm(&q);
                if v < val {
                    p = q;
                    val = v;
                    improved = true;
                }
            }
        }
        // diagonal moves get past kinks where coordinate moves stall
        if !improved {
            for mask in 1..(1u32 << k) {
                for sign in [1.0, -1.0] {
                    let mut q = p.clone();
                    for (i, x) in q.iter_mut().enumerate() {
                        if mask >> i & 1 == 1 {
                            *x += sign * step;
                        }
                    }
                    let v = span.dm(&q);
                    if v < val {
                        p = q;
                        val = v;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (p, val)
}

/// Searches `span{f, g}` for an orthogonal pair with the same quotient
/// distance and no larger measurement distance.
///
/// `grid_size` is the total number of grid points; the best grid points are
/// then refined locally. Orthogonal inputs are returned unchanged.
pub fn orthogonal_reduction_check(frame: &Frame, f: &Vector, g: &Vector, grid_size: usize) -> Result<ReductionResult> {
    let target_dq = quotient_distance(f, g)?;
    let target_dm = measurement_distance(frame, f, g)?;
    let (nf, ng) = (f.norm(), g.norm());
    if nf == 0.0 || ng == 0.0 {
        return Err(Error::Degenerate("orthogonal reduction needs nonzero vectors".into()));
    }
    let fg = inner(f, g)?;
    let w1 = f.scale_real(1.0 / nf);
    let mut w2 = g.sub(&w1.scale(inner(g, &w1)?)?)?;
    let residual = w2.norm();
    if residual <= 1e-10 * ng {
        return Err(Error::Degenerate(
            "orthogonal reduction needs linearly independent vectors".into(),
        ));
    }
    if fg.norm() <= 1e-12 * nf * ng {
        return Ok(ReductionResult {
            found: true,
            f: f.clone(),
            g: g.clone(),
            dq: target_dq,
            dm: target_dm,
            target_dq,
            target_dm,
        });
    }
    let field = f.field();
    w2 = w2.scale_real(1.0 / residual);
    let span = Span {
        field,
        t1: analysis(frame, &w1)?,
        t2: analysis(frame, &w2)?,
        w1,
        w2,
        radius: target_dq,
    };

    let bounds = span.bounds();
    let k = bounds.len();
    let per_axis = ((grid_size.max(1) as f64).powf(1.0 / k as f64).ceil() as usize).max(2);
    let mut grid: Vec<(f64, Vec<f64>)> = Vec::with_capacity(per_axis.pow(k as u32));
    let mut idx = vec![0usize; k];
    loop {
        let p: Vec<f64> = idx
            .iter()
            .zip(&bounds)
            .map(|(&i, &(lo, hi))| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64)
            .collect();
        grid.push((span.dm(&p), p));
        let mut d = 0;
        while d < k {
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == k {
            break;
        }
    }
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    let spacing = bounds
        .iter()
        .map(|(lo, hi)| (hi - lo) / (per_axis - 1) as f64)
        .fold(f64::INFINITY, f64::min);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for (val, p) in grid.into_iter().take(REFINE_CANDIDATES) {
        let (q, v) = compass_refine(&span, p, val, spacing);
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((q, v));
        }
    }
    let (p, _) = best.expect("grid is nonempty");
    let (fp, gp) = span.vectors(&p);
    let dq = quotient_distance(&fp, &gp)?;
    let dm = measurement_distance(frame, &fp, &gp)?;
    let found = (dq - target_dq).abs() <= DEFAULT_TOL * target_dq && dm <= target_dm * (1.0 + DEFAULT_TOL);
    Ok(ReductionResult {
        found,
        f: fp,
        g: gp,
        dq,
        dm,
        target_dq,
        target_dm,
    })
}

/// Sample-level check that Hölder stability of the witnesses implies the
/// Lipschitz bound `dq ≤ (4 C_σ)^{1/σ} dm` with
/// `C_σ = max dq / (dm^σ (‖f‖ + ‖g‖)^{1−σ})`.
pub fn holder_to_lip_check(witnesses: &[Witness], sigma: f64) -> Result<bool> {
    if witnesses.is_empty() {
        return Err(Error::Fit("no witnesses".into()));
    }
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::Range(format!("sigma = {sigma} outside (0, 1]")));
    }
    let mut c_holder: f64 = 0.0;
    for w in witnesses {
        if w.dq == 0.0 {
            continue;
        }
        if w.dm == 0.0 {
            return Ok(false);
        }
        let scale = (w.f.norm() + w.g.norm()).powf(1.0 - sigma);
        c_holder = c_holder.max(w.dq / (w.dm.powf(sigma) * scale));
    }
    let lip = (4.0 * c_holder).powf(1.0 / sigma);
    Ok(witnesses.iter().all(|w| w.dq <= lip * w.dm * (1.0 + DEFAULT_TOL)))
}
