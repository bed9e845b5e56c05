mod common;

use common::{random_vector, tail_ok};
use phaselip::{
    envelope_from_growth, level_witness_pair, membership, project_head, repair, sample, Error, Growth, PriorSet,
    ScalarField, Vector,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// nonincreasing envelope in [0, 1) built from cumulative products
fn prior_strategy() -> impl Strategy<Value = PriorSet> {
    (
        2usize..10,
        1usize..4,
        prop::collection::vec(0.0f64..1.0, 10),
        0.0f64..0.999,
    )
        .prop_map(|(dim, head, factors, t1)| {
            let head = head.min(dim - 1);
            let mut t = t1;
            let env = (0..dim - head)
                .map(|i| {
                    if i > 0 {
                        t *= factors[i];
                    }
                    t
                })
                .collect();
            PriorSet::new(dim, head, env, phaselip::Provenance::Direct).unwrap()
        })
}

proptest! {
    #[test]
    fn samples_satisfy_every_tail_constraint(prior in prior_strategy(), seed in any::<u64>(), complex in any::<bool>()) {
        let field = if complex { ScalarField::Complex } else { ScalarField::Real };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let f = sample(&prior, field, &mut rng);
            prop_assert!(tail_ok(&prior, &f));
            prop_assert!(membership(&prior, &f).unwrap().ok);
        }
    }

    #[test]
    fn repair_projects_into_the_prior(prior in prior_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_vector(ScalarField::Complex, prior.dim(), &mut rng);
        let g = repair(&prior, &f).unwrap();
        prop_assert!(membership(&prior, &g).unwrap().ok);
        prop_assert!(tail_ok(&prior, &g));
        prop_assert_eq!(repair(&prior, &g).unwrap(), g.clone());
        // only tail mass is removed
        let head = project_head(&f, prior.head_dim()).unwrap();
        prop_assert_eq!(project_head(&g, prior.head_dim()).unwrap(), head.clone());
        let moved = f.sub(&g).unwrap().norm();
        prop_assert!(moved <= f.sub(&head).unwrap().norm() * (1.0 + 1e-12));
    }

    #[test]
    fn membership_margin_sign_matches_verdict(prior in prior_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_vector(ScalarField::Real, prior.dim(), &mut rng);
        let m = membership(&prior, &f).unwrap();
        if m.margin > 0.0 {
            prop_assert!(m.ok);
        }
        if !m.ok {
            prop_assert!(m.margin < 0.0);
        }
    }
}

#[test]
fn zero_and_headless_inputs_are_degenerate() {
    let prior = PriorSet::direct(4, 1, &[0.5, 0.25, 0.125]).unwrap();
    let zero = Vector::zeros(ScalarField::Real, 4);
    assert!(matches!(membership(&prior, &zero), Err(Error::Degenerate(_))));
    let headless = Vector::basis(ScalarField::Real, 4, 3);
    assert!(matches!(repair(&prior, &headless), Err(Error::Degenerate(_))));
    assert!(!membership(&prior, &headless).unwrap().ok);
}

#[test]
fn forced_truncation() {
    let prior = PriorSet::direct(5, 1, &[0.5, 0.25, 0.1, 0.0]).unwrap();
    let f = Vector::real(&[1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(repair(&prior, &f).unwrap(), Vector::basis(ScalarField::Real, 5, 0));
}

#[test]
fn counterexample_witnesses_lie_on_the_matching_prior() {
    for (gamma, c) in [(1.5, 1.0), (2.0, 3.0), (3.0, 6.5)] {
        let prior = envelope_from_growth(&Growth::Geometric { c }, gamma, 1.0, 30).unwrap();
        for m in 2..=30 {
            let (x, y) = level_witness_pair(m, gamma, 1.0, c, 30, ScalarField::Real).unwrap();
            assert!(membership(&prior, &x).unwrap().ok, "gamma {gamma} m {m}");
            assert!(membership(&prior, &y).unwrap().ok, "gamma {gamma} m {m}");
        }
    }
    assert!(matches!(
        level_witness_pair(31, 2.0, 1.0, 1.0, 30, ScalarField::Real),
        Err(Error::Range(_))
    ));
    assert!(matches!(
        level_witness_pair(1, 2.0, 1.0, 1.0, 30, ScalarField::Real),
        Err(Error::Range(_))
    ));
}

#[test]
fn envelope_rejects_bad_growth() {
    let g = Growth::Table {
        values: vec![1.0, 2.0, 2.0, 3.0],
    };
    assert!(envelope_from_growth(&g, 2.0, 1.0, 4).is_err());
    assert!(envelope_from_growth(&Growth::Geometric { c: 1.0 }, 1.0, 1.0, 4).is_err());
    assert!(envelope_from_growth(&Growth::Geometric { c: 1.0 }, 2.0, -1.0, 4).is_err());
}
