mod common;

use approx::assert_relative_eq;
use common::{gram_bounds, grid_quotient, random_vector};
use num_complex::Complex64;
use phaselip::{
    align_phase, analysis, frame_bounds, inner, measure, parsevalize, project_head, quotient_distance, Error, Frame,
    ScalarField, Vector,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn inner_examples() {
    let e = |k| Vector::basis(ScalarField::Real, 3, k);
    assert_eq!(inner(&e(0), &e(0)).unwrap(), c(1.0, 0.0));
    assert_eq!(inner(&e(0), &e(1)).unwrap(), c(0.0, 0.0));
    let f = Vector::complex(vec![c(1.0, 0.0), I]).unwrap();
    let g = Vector::complex(vec![I, c(1.0, 0.0)]).unwrap();
    assert_eq!(inner(&f, &g).unwrap(), c(0.0, 0.0));
    let short = Vector::real(&[1.0, 0.0]).unwrap();
    assert!(matches!(inner(&e(0), &short), Err(Error::Dimension { .. })));
    let z = Vector::complex(vec![c(1.0, 0.0); 3]).unwrap();
    assert!(matches!(inner(&e(0), &z), Err(Error::Field(_))));
}

#[test]
fn project_head_examples() {
    let f = Vector::real(&[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(project_head(&f, 2).unwrap(), Vector::real(&[1.0, 2.0, 0.0]).unwrap());
    assert_eq!(project_head(&f, 3).unwrap(), f);
    assert!(matches!(project_head(&f, 0), Err(Error::Range(_))));
    assert!(matches!(project_head(&f, 4), Err(Error::Range(_))));
    let f = Vector::real(&[1.0, 0.1, 0.1]).unwrap();
    let tail = f.sub(&project_head(&f, 1).unwrap()).unwrap().norm();
    assert_relative_eq!(tail, 0.02f64.sqrt(), max_relative = 1e-15);
}

#[test]
fn quotient_and_alignment_examples() {
    let e1 = Vector::basis(ScalarField::Real, 2, 0);
    let e2 = Vector::basis(ScalarField::Real, 2, 1);
    assert_eq!(quotient_distance(&e1, &e1.scale_real(-1.0)).unwrap(), 0.0);
    assert_relative_eq!(quotient_distance(&e1, &e2).unwrap(), 2f64.sqrt(), max_relative = 1e-15);
    assert_eq!(align_phase(&e1, &e1).unwrap(), c(1.0, 0.0));
    assert_eq!(align_phase(&e1, &e1.scale_real(-1.0)).unwrap(), c(-1.0, 0.0));
    let f = Vector::complex(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let g = Vector::complex(vec![I, c(0.0, 0.0)]).unwrap();
    assert_eq!(quotient_distance(&f, &g).unwrap(), 0.0);
    let a = align_phase(&f, &g).unwrap();
    assert_relative_eq!((a - c(0.0, -1.0)).norm(), 0.0, epsilon = 1e-15);
    assert!(matches!(
        align_phase(&f, &Vector::zeros(ScalarField::Complex, 2)),
        Err(Error::Degenerate(_))
    ));
    // orthogonal inputs: any α is optimal, 1 is returned
    assert_eq!(align_phase(&e1, &e2).unwrap(), c(1.0, 0.0));
}

#[test]
fn quotient_matches_unimodular_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..400 {
        let field = if k % 2 == 0 {
            ScalarField::Real
        } else {
            ScalarField::Complex
        };
        let dim = 1 + k % 6;
        let f = random_vector(field, dim, &mut rng);
        let g = random_vector(field, dim, &mut rng);
        let exact = quotient_distance(&f, &g).unwrap();
        let grid = grid_quotient(&f, &g, 100_000);
        assert!((exact - grid).abs() < 1e-6, "{exact} vs {grid}");
        assert!(exact <= grid + 1e-12);
    }
}

#[test]
fn analysis_and_measure_examples() {
    let onb = Frame::orthonormal_basis(ScalarField::Real, 3);
    let f = Vector::real(&[1.0, -2.0, 0.5]).unwrap();
    assert_eq!(analysis(&onb, &f).unwrap(), f.coeffs().to_vec());
    assert_eq!(measure(&onb, &f).unwrap().values, vec![1.0, 2.0, 0.5]);
    let frame = Frame::from_vectors(vec![
        Vector::real(&[1.0, 0.0]).unwrap(),
        Vector::real(&[1.0, 1.0]).unwrap(),
    ])
    .unwrap();
    let e2 = Vector::basis(ScalarField::Real, 2, 1);
    assert_eq!(analysis(&frame, &e2).unwrap(), vec![c(0.0, 0.0), c(1.0, 0.0)]);
}

#[test]
fn frame_bounds_match_gram_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in 0..200 {
        let field = if k % 2 == 0 {
            ScalarField::Real
        } else {
            ScalarField::Complex
        };
        let dim = 1 + k % 4;
        let count = dim + (k / 2) % (9 - dim);
        let vectors = (0..count).map(|_| random_vector(field, dim, &mut rng)).collect();
        let frame = Frame::from_vectors(vectors).unwrap();
        let b = frame_bounds(&frame).unwrap();
        let (lo, hi) = gram_bounds(&frame);
        assert!((b.lower - lo).abs() < 1e-10 * hi.max(1.0), "{} vs {lo}", b.lower);
        assert!((b.upper - hi).abs() < 1e-10 * hi.max(1.0), "{} vs {hi}", b.upper);
    }
}

#[test]
fn parsevalize_gives_unit_bounds_and_rejects_rank_deficiency() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let vectors = (0..6)
        .map(|_| random_vector(ScalarField::Complex, 3, &mut rng))
        .collect();
    let p = parsevalize(&Frame::from_vectors(vectors).unwrap()).unwrap();
    let b = frame_bounds(&p).unwrap();
    assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-12);
    let flat = Frame::from_vectors(vec![
        Vector::real(&[1.0, 0.0]).unwrap(),
        Vector::real(&[2.0, 0.0]).unwrap(),
    ])
    .unwrap();
    assert!(matches!(parsevalize(&flat), Err(Error::Rank { .. })));
    assert!(!frame_bounds(&flat).unwrap().is_valid());
}

#[test]
fn vector_json_shape() {
    let v = Vector::complex(vec![c(1.0, -2.0), c(0.0, 0.5)]).unwrap();
    let s = serde_json::to_string(&v).unwrap();
    assert_eq!(s, r#"{"field":"complex","coeffs":[[1.0,-2.0],[0.0,0.5]]}"#);
    assert_eq!(serde_json::from_str::<Vector>(&s).unwrap(), v);
    let r = serde_json::to_string(&Vector::real(&[1.5, -1.0]).unwrap()).unwrap();
    assert_eq!(r, r#"{"field":"real","coeffs":[1.5,-1.0]}"#);
    assert!(serde_json::from_str::<Vector>(r#"{"field":"real","coeffs":[1.0, NaN]}"#).is_err());
}

fn field_strategy() -> impl Strategy<Value = ScalarField> {
    prop_oneof![Just(ScalarField::Real), Just(ScalarField::Complex)]
}

fn pair_strategy() -> impl Strategy<Value = (Vector, Vector)> {
    (field_strategy(), 1usize..7, any::<u64>()).prop_map(|(field, dim, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (random_vector(field, dim, &mut rng), random_vector(field, dim, &mut rng))
    })
}

proptest! {
    #[test]
    fn quotient_is_phase_invariant((f, g) in pair_strategy(), theta in 0.0..std::f64::consts::TAU) {
        let beta = match f.field() {
            ScalarField::Real => c(if theta < 3.0 { 1.0 } else { -1.0 }, 0.0),
            ScalarField::Complex => Complex64::from_polar(1.0, theta),
        };
        let d0 = quotient_distance(&f, &g).unwrap();
        let d1 = quotient_distance(&f, &g.scale(beta).unwrap()).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-12 * (f.norm() + g.norm()));
    }

    #[test]
    fn quotient_below_plain_distance((f, g) in pair_strategy()) {
        let d = quotient_distance(&f, &g).unwrap();
        prop_assert!(d <= f.sub(&g).unwrap().norm() * (1.0 + 1e-12));
        let a = align_phase(&f, &g).unwrap();
        prop_assert!((a.norm() - 1.0).abs() < 1e-12);
        let aligned = f.sub(&g.scale(a).unwrap()).unwrap().norm();
        prop_assert!((aligned - d).abs() <= 1e-12 * (f.norm() + g.norm()));
    }

    #[test]
    fn project_head_idempotent_and_contractive((f, _g) in pair_strategy(), m in 1usize..7) {
        let m = m.min(f.dim());
        let p = project_head(&f, m).unwrap();
        prop_assert_eq!(project_head(&p, m).unwrap(), p.clone());
        prop_assert!(p.norm() <= f.norm());
    }

    #[test]
    fn frame_inequality_holds((f, _g) in pair_strategy(), seed in any::<u64>(), extra in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vectors = (0..f.dim() + extra).map(|_| random_vector(f.field(), f.dim(), &mut rng)).collect();
        let frame = Frame::from_vectors(vectors).unwrap();
        let b = frame_bounds(&frame).unwrap();
        let energy: f64 = analysis(&frame, &f).unwrap().iter().map(|z| z.norm_sqr()).sum();
        let n2 = f.norm_sqr();
        prop_assert!(energy >= b.lower * n2 - 1e-10 * n2 * b.upper);
        prop_assert!(energy <= b.upper * n2 * (1.0 + 1e-10));
    }
}
