//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use phaselip::{Frame, ScalarField, Vector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn random_vector<R: Rng>(field: ScalarField, dim: usize, rng: &mut R) -> Vector {
    let coeffs = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = match field {
                ScalarField::Real => 0.0,
                ScalarField::Complex => StandardNormal.sample(rng),
            };
            Complex64::new(re, im)
        })
        .collect();
    Vector::new(field, coeffs).unwrap()
}

/// Minimum of ‖f − αg‖ over `points` equally spaced unimodular α
/// (just ±1 over the reals).
pub fn grid_quotient(f: &Vector, g: &Vector, points: usize) -> f64 {
    let alphas: Vec<Complex64> = match f.field() {
        ScalarField::Real => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        ScalarField::Complex => (0..points)
            .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / points as f64))
            .collect(),
    };
    alphas
        .iter()
        .map(|a| {
            f.coeffs()
                .iter()
                .zip(g.coeffs())
                .map(|(x, y)| (x - a * y).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Cyclic Jacobi eigenvalues of a real symmetric matrix, ascending.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

// real symmetric embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix
fn realify(h: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
    let n = h.len();
    let mut r = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            r[i][j] = h[i][j].re;
            r[i + n][j + n] = h[i][j].re;
            r[i][j + n] = -h[i][j].im;
            r[i + n][j] = h[i][j].im;
        }
    }
    r
}

/// Eigenvalues of a Hermitian matrix, ascending (each once).
pub fn hermitian_eigenvalues(h: &[Vec<Complex64>], field: ScalarField) -> Vec<f64> {
    match field {
        ScalarField::Real => jacobi_eigenvalues(h.iter().map(|row| row.iter().map(|z| z.re).collect()).collect()),
        ScalarField::Complex => jacobi_eigenvalues(realify(h)).into_iter().step_by(2).collect(),
    }
}

/// Frame bounds from the spectrum of the Gram matrix `G_{kl} = ⟨φ_l, φ_k⟩`,
/// whose nonzero eigenvalues are those of the frame operator.
pub fn gram_bounds(frame: &Frame) -> (f64, f64) {
    let v = frame.vectors();
    let n = v.len();
    let gram: Vec<Vec<Complex64>> = (0..n)
        .map(|k| (0..n).map(|l| phaselip::inner(&v[l], &v[k]).unwrap()).collect())
        .collect();
    let ev = hermitian_eigenvalues(&gram, frame.field());
    let upper = *ev.last().unwrap();
    // the d largest Gram eigenvalues are the frame operator eigenvalues
    let lower = if n >= frame.dim() { ev[n - frame.dim()] } else { 0.0 };
    (lower.max(0.0), upper)
}

/// `Σ_{k∈S} φ_k φ_k^*` for the index mask `mask`.
pub fn partial_operator(frame: &Frame, mask: u64) -> Vec<Vec<Complex64>> {
    let d = frame.dim();
    let mut s = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    for (k, phi) in frame.vectors().iter().enumerate() {
        if mask >> k & 1 == 1 {
            let c = phi.coeffs();
            for i in 0..d {
                for j in 0..d {
                    s[i][j] += c[i] * c[j].conj();
                }
            }
        }
    }
    s
}

/// Exact Lipschitz constant of a real frame on its whole space:
/// `C^{-2} = min_S λ_min(S_S) + λ_min(S_{S^c})`, enumerating all subsets.
pub fn exact_real_constant(frame: &Frame) -> f64 {
    let n = frame.len();
    assert!(n <= 20 && frame.field() == ScalarField::Real);
    let full = (1u64 << n) - 1;
    let mut best = f64::INFINITY;
    for mask in 0..=full {
        if mask > full ^ mask {
            continue;
        }
        let a = hermitian_eigenvalues(&partial_operator(frame, mask), ScalarField::Real)[0];
        let b = hermitian_eigenvalues(&partial_operator(frame, full ^ mask), ScalarField::Real)[0];
        best = best.min(a.max(0.0) + b.max(0.0));
    }
    1.0 / best.sqrt()
}

/// Grid minimum over unimodular α refined by golden-section search on the
/// neighbouring grid cell.
pub fn refined_grid_quotient(f: &Vector, g: &Vector, points: usize) -> f64 {
    if f.field() == ScalarField::Real {
        return grid_quotient(f, g, points);
    }
    let at = |theta: f64| {
        let a = Complex64::from_polar(1.0, theta);
        f.coeffs()
            .iter()
            .zip(g.coeffs())
            .map(|(x, y)| (x - a * y).norm_sqr())
            .sum::<f64>()
    };
    let h = std::f64::consts::TAU / points as f64;
    let k = (0..points)
        .min_by(|&i, &j| at(i as f64 * h).total_cmp(&at(j as f64 * h)))
        .unwrap();
    let (mut lo, mut hi) = ((k as f64 - 1.0) * h, (k as f64 + 1.0) * h);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let (a, b) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if at(a) < at(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    at((lo + hi) / 2.0).sqrt()
}

/// Tail test straight from the definition: `‖f − P_{h+m−1} f‖ ≤ t_m ‖f‖`.
pub fn tail_ok(prior: &phaselip::PriorSet, f: &Vector) -> bool {
    let n = f.norm();
    (1..prior.dim() - prior.head_dim() + 1).all(|m| {
        let p = phaselip::project_head(f, prior.head_dim() + m - 1).unwrap();
        f.sub(&p).unwrap().norm() <= prior.t(m) * n * (1.0 + 1e-12) + 1e-300
    })
}
