use super::*;
use crate::hilbert::vector;
use approx::assert_relative_eq;
use proptest::prelude::{prop, prop_assert, proptest, ProptestConfig, Strategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Case analysis for `0 ∈ y − x + λ∂|y|` in ℝ¹, independent of the
/// soft-threshold formula.
fn scalar_abs_prox_oracle(x: f64, lambda: f64) -> f64 {
    let candidates = [x - lambda, x + lambda, 0.0];
    for y in candidates {
        let ok = if y > 0.0 {
            (y - x + lambda).abs() < 1e-15
        } else if y < 0.0 {
            (y - x - lambda).abs() < 1e-15
        } else {
            x.abs() <= lambda
        };
        if ok {
            return y;
        }
    }
    unreachable!("inclusion always has a solution")
}

#[test]
fn resolvent_examples() {
    let nonneg = MonotoneOperator::normal_cone(ConvexSet::nonnegative(1));
    assert_eq!(nonneg.resolvent(1.0, &vector(&[-2.0])).unwrap(), vector(&[0.0]));

    let abs = MonotoneOperator::abs_value();
    let y = abs.resolvent(1.0, &vector(&[3.0])).unwrap();
    assert_eq!(y[0], scalar_abs_prox_oracle(3.0, 1.0));
    assert_eq!(y[0], 2.0);

    let zero = MonotoneOperator::zero();
    for lambda in [0.01, 1.0, 100.0] {
        assert_eq!(zero.resolvent(lambda, &vector(&[1.5, -2.0])).unwrap(), vector(&[1.5, -2.0]));
    }
}

#[test]
fn soft_threshold_matches_case_analysis() {
    let abs = MonotoneOperator::abs_value();
    for i in -50..=50 {
        let x = i as f64 * 0.13;
        for lambda in [0.1, 0.5, 2.0] {
            let y = abs.resolvent(lambda, &vector(&[x])).unwrap()[0];
            assert_relative_eq!(y, scalar_abs_prox_oracle(x, lambda), epsilon = 1e-15);
        }
    }
}

#[test]
fn resolvent_rejects_bad_step() {
    let id = MonotoneOperator::identity();
    assert!(matches!(id.resolvent(0.0, &vector(&[1.0])), Err(Error::Usage(_))));
    assert!(matches!(id.resolvent(-1.0, &vector(&[1.0])), Err(Error::Usage(_))));
}

#[test]
fn user_resolvent_contract() {
    let bad = MonotoneOperator::user_resolvent(2, Arc::new(|_, _| vector(&[1.0])));
    assert!(matches!(bad.resolvent(1.0, &vector(&[1.0, 2.0])), Err(Error::Contract(_))));
    let good = MonotoneOperator::user_resolvent(1, Arc::new(|l, x| x / (1.0 + l)));
    assert_eq!(good.resolvent(1.0, &vector(&[4.0])).unwrap(), vector(&[2.0]));
    assert!(matches!(good.resolvent(1.0, &vector(&[4.0, 1.0])), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn inverse_resolvent_examples() {
    let abs = MonotoneOperator::abs_value();
    // inner resolvent: J_{½∂|·|}(2.5) by case analysis
    let inner = scalar_abs_prox_oracle(2.5, 0.5);
    assert_eq!(inner, 2.0);
    let y = abs.inverse_resolvent(2.0, &vector(&[5.0])).unwrap();
    assert_relative_eq!(y[0], 5.0 - 2.0 * inner, epsilon = 1e-15);
    assert_relative_eq!(y[0], 1.0, epsilon = 1e-15);

    let id = MonotoneOperator::identity();
    let via_moreau = id.inverse_resolvent(1.0, &vector(&[4.0])).unwrap();
    let direct = id.inverse(1).unwrap().resolvent(1.0, &vector(&[4.0])).unwrap();
    assert_relative_eq!(via_moreau[0], 2.0, epsilon = 1e-15);
    assert_relative_eq!(direct[0], 2.0, epsilon = 1e-15);
}

#[test]
fn moreau_identity_with_direct_inverse_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for dim in [1, 3] {
        for op in representative_catalog(dim, &mut rng) {
            let total = op.dim().unwrap_or(dim);
            let inverse = op.inverse(total).ok();
            for gamma in [0.1, 1.0, 10.0] {
                for _ in 0..20 {
                    let x = Vector::from_fn(total, |_, _| rng.random_range(-5.0..5.0));
                    let j = op.resolvent(gamma, &x).unwrap();
                    let dual = match &inverse {
                        Some(inv) => inv.resolvent(1.0 / gamma, &(&x / gamma)).unwrap(),
                        None => op.inverse_resolvent(1.0 / gamma, &(&x / gamma)).unwrap(),
                    };
                    let err = (&j + dual * gamma - &x).norm();
                    assert!(err <= 1e-10, "{} γ={gamma}: {err}", op.kind_name());
                }
            }
        }
    }
}

#[test]
fn eval_examples() {
    let affine = MonotoneOperator::affine_gradient(DMatrix::identity(2, 2) * 2.0, vector(&[1.0, 0.0])).unwrap();
    assert_eq!(affine.eval(&vector(&[3.0, 0.0])).unwrap(), vector(&[4.0, 0.0]));
    let skew = MonotoneOperator::skew(LinearMap::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap()).unwrap();
    assert_eq!(skew.eval(&vector(&[1.0, 0.0])).unwrap(), vector(&[0.0, -1.0]));
    assert_eq!(MonotoneOperator::zero().eval(&vector(&[7.0])).unwrap(), vector(&[0.0]));
}

#[test]
fn eval_rejects_set_valued() {
    let err = MonotoneOperator::abs_value().eval(&vector(&[1.0])).unwrap_err();
    match err {
        Error::Usage(msg) => assert!(msg.contains("selection")),
        other => panic!("unexpected {other:?}"),
    }
    assert!(MonotoneOperator::normal_cone(ConvexSet::nonnegative(1)).eval(&vector(&[1.0])).is_err());
}

#[test]
fn selection_examples() {
    let abs = MonotoneOperator::abs_value();
    assert_eq!(abs.selection(&vector(&[0.0])).unwrap(), vector(&[0.0]));
    assert_eq!(abs.selection(&vector(&[-3.0])).unwrap(), vector(&[-1.0]));
    let unit = ConvexSet::boxed(vector(&[0.0]), vector(&[1.0])).unwrap();
    let cone = MonotoneOperator::normal_cone(unit);
    assert_eq!(cone.selection(&vector(&[1.0])).unwrap(), vector(&[0.0]));
    assert!(matches!(cone.selection(&vector(&[2.0])), Err(Error::Domain(_))));
}

#[test]
fn skew_constructor_validates() {
    assert!(MonotoneOperator::skew(LinearMap::from_rows(&[vec![1.0, 1.0], vec![-1.0, 0.0]]).unwrap()).is_err());
    assert!(MonotoneOperator::skew(LinearMap::from_rows(&[vec![0.0, 1.0]]).unwrap()).is_err());
}

#[test]
fn fitzpatrick_examples() {
    let id = MonotoneOperator::identity();
    // closed form (x+u)²/4 from maximizing ⟨x,y⟩ + ⟨y,u⟩ − y²; check the
    // maximization by a grid oracle as well
    let mut best = f64::NEG_INFINITY;
    for i in 0..=40_000 {
        let y = i as f64 * 1e-4;
        best = best.max(2.0 * y + y * 2.0 - y * y);
    }
    let phi = id.fitzpatrick(&vector(&[2.0]), &vector(&[2.0])).unwrap();
    assert_eq!(phi, ExtReal::Finite(4.0));
    assert_relative_eq!(best, 4.0, epsilon = 1e-8);

    let s = LinearMap::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
    let skew = MonotoneOperator::skew(s.clone()).unwrap();
    let x = vector(&[0.3, -1.1]);
    let sx = s.apply(&x).unwrap();
    assert_eq!(skew.fitzpatrick(&x, &sx).unwrap(), ExtReal::Finite(0.0));
    assert_eq!(skew.fitzpatrick(&x, &(sx + vector(&[0.1, 0.0]))).unwrap(), ExtReal::PosInf);

    let single = MonotoneOperator::normal_cone(ConvexSet::Singleton(vector(&[0.0])));
    assert_eq!(single.fitzpatrick(&vector(&[0.0]), &vector(&[9.0])).unwrap(), ExtReal::Finite(0.0));
    assert_eq!(single.fitzpatrick(&vector(&[1.0]), &vector(&[9.0])).unwrap(), ExtReal::PosInf);
}

#[test]
fn fitzpatrick_unsupported_kinds() {
    assert!(matches!(
        MonotoneOperator::abs_value().fitzpatrick(&vector(&[1.0]), &vector(&[1.0])),
        Err(Error::Unsupported(_))
    ));
    let box_cone = MonotoneOperator::normal_cone(ConvexSet::nonnegative(1));
    assert!(matches!(box_cone.fitzpatrick(&vector(&[1.0]), &vector(&[1.0])), Err(Error::Unsupported(_))));
}

#[test]
fn penalty_gap_examples() {
    let gap = penalty_gap(
        &MonotoneOperator::identity(),
        &ConvexSet::Singleton(vector(&[0.0])),
        &vector(&[1.0]),
        2.0,
    )
    .unwrap();
    assert!(gap.exact);
    assert_relative_eq!(gap.value.finite().unwrap(), 0.0625, epsilon = 1e-15);

    let l = LinearMap::from_rows(&[vec![1.0, 0.0]]).unwrap();
    let c = ConvexSet::null_space(l.clone());
    let psi = ConvexFunction::squared_norm_composed(l.clone());
    let bound = penalty_gap_bound(&psi, &c, &vector(&[4.0, 0.0]), 8.0).unwrap();
    assert!(!bound.exact);
    assert_relative_eq!(bound.value.finite().unwrap(), 0.0625, epsilon = 1e-14);

    // B = ∂Ψ represented as the quadratic subdifferential 2LᵀL
    let b = MonotoneOperator::quadratic(l.matrix().tr_mul(l.matrix()) * 2.0, vector(&[0.0, 0.0])).unwrap();
    let gap = penalty_gap(&b, &c, &vector(&[4.0, 0.0]), 8.0).unwrap();
    assert!(!gap.exact);
    assert_relative_eq!(gap.value.finite().unwrap(), 0.0625, epsilon = 1e-14);

    // The same operator as an affine gradient has an exact, tighter gap.
    let b_exact = MonotoneOperator::affine_gradient(l.matrix().tr_mul(l.matrix()) * 2.0, vector(&[0.0, 0.0])).unwrap();
    let exact = penalty_gap(&b_exact, &c, &vector(&[4.0, 0.0]), 8.0).unwrap();
    assert!(exact.exact);
    assert!(exact.value.finite().unwrap() <= 0.0625 + 1e-15);
    assert!(exact.value.finite().unwrap() >= 0.0);
}

#[test]
fn penalty_gap_zero_dual_vector() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let l = LinearMap::from_rows(&[vec![1.0, -1.0, 0.5]]).unwrap();
    let c = ConvexSet::null_space(l.clone());
    let b = MonotoneOperator::affine_gradient(l.matrix().tr_mul(l.matrix()) * 2.0, Vector::zeros(3)).unwrap();
    for _ in 0..10 {
        let beta: f64 = rng.random_range(0.1..100.0);
        let gap = penalty_gap(&b, &c, &Vector::zeros(3), beta).unwrap();
        assert_relative_eq!(gap.value.finite().unwrap(), 0.0, epsilon = 1e-14);
    }
}

#[test]
fn penalty_gap_rejects_dual_outside_normal_range() {
    let l = LinearMap::from_rows(&[vec![1.0, 0.0]]).unwrap();
    let c = ConvexSet::null_space(l.clone());
    let b = MonotoneOperator::affine_gradient(l.matrix().tr_mul(l.matrix()) * 2.0, Vector::zeros(2)).unwrap();
    assert!(matches!(penalty_gap(&b, &c, &vector(&[0.0, 1.0]), 1.0), Err(Error::Domain(_))));
}

#[test]
fn catalog_moduli_pass_audit() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for dim in [1, 2, 5] {
        for op in representative_catalog(dim, &mut rng) {
            if matches!(op.kind(), OperatorKind::Product { .. }) {
                continue;
            }
            op.audit_moduli(dim, 200, 5.0, &mut rng)
                .unwrap_or_else(|e| panic!("{}: {e}", op.kind_name()));
        }
    }
}

#[test]
fn audit_catches_false_cocoercivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let op = MonotoneOperator::scaled_identity(2.0).unwrap().with_cocoercivity(1.0);
    assert!(matches!(op.audit_moduli(2, 50, 1.0, &mut rng), Err(Error::Contract(_))));
}

#[test]
fn skew_is_orthogonal_to_its_argument() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cat = representative_catalog(4, &mut rng);
    let skew = cat.iter().find(|m| m.kind_name() == "skew_linear").unwrap();
    for _ in 0..100 {
        let x = Vector::from_fn(4, |_, _| rng.random_range(-3.0..3.0));
        assert!(x.dot(&skew.eval(&x).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn coupling_and_lift_evaluate_componentwise() {
    let k = LinearMap::from_rows(&[vec![1.0, 2.0]]).unwrap();
    let d = MonotoneOperator::identity();
    let coupling = MonotoneOperator::primal_dual_coupling(d, k).unwrap();
    let y = coupling.eval(&vector(&[1.0, 1.0, 3.0])).unwrap();
    assert_eq!(y, vector(&[4.0, 7.0, -3.0]));
    assert_relative_eq!(
        coupling.moduli().lipschitz.unwrap(),
        (2.0 * (1.0 + 5.0f64)).sqrt(),
        epsilon = 1e-12
    );
    let lift = MonotoneOperator::primal_lift(MonotoneOperator::scaled_identity(2.0).unwrap(), 1);
    assert_eq!(lift.eval(&vector(&[1.0, 1.0, 3.0])).unwrap(), vector(&[2.0, 2.0, 0.0]));
}

fn catalog_for(seed: u64, dim: usize) -> Vec<MonotoneOperator> {
    representative_catalog(dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resolvents_are_firmly_nonexpansive(
        seed in 0u64..1000, dim in 1usize..5, lambda in 0.05f64..20.0,
        a in vec_strategy(8), b in vec_strategy(8),
    ) {
        for op in catalog_for(seed, dim) {
            let n = op.dim().unwrap_or(dim);
            let x = Vector::from_iterator(n, a.iter().cycle().take(n).copied());
            let y = Vector::from_iterator(n, b.iter().cycle().take(n).copied());
            let jx = op.resolvent(lambda, &x).unwrap();
            let jy = op.resolvent(lambda, &y).unwrap();
            let lhs = (&jx - &jy).norm_squared();
            let rhs = (&x - &y).dot(&(&jx - &jy));
            prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()), "{}: {} > {}", op.kind_name(), lhs, rhs);
        }
    }

    #[test]
    fn resolvent_residual_lies_in_operator_image(
        seed in 0u64..1000, dim in 1usize..5, lambda in 0.05f64..20.0, a in vec_strategy(8),
    ) {
        // (x − J_{λM}x)/λ ∈ M(J_{λM}x): for single-valued kinds compare with
        // eval, for normal cones check the variational inequality over sampled
        // points of C, for ∂|·| check the subgradient conditions.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for op in catalog_for(seed, dim) {
            let n = op.dim().unwrap_or(dim);
            let x = Vector::from_iterator(n, a.iter().cycle().take(n).copied());
            let y = op.resolvent(lambda, &x).unwrap();
            let w = (&x - &y) / lambda;
            match op.kind() {
                OperatorKind::NormalCone(c) => {
                    prop_assert!(c.contains(&y));
                    for _ in 0..100 {
                        let probe = c.project(&Vector::from_fn(n, |_, _| rng.random_range(-20.0..20.0))).unwrap();
                        prop_assert!(w.dot(&(probe - &y)) <= 1e-9 * (1.0 + w.norm()));
                    }
                }
                OperatorKind::SubdifferentialAbsValue => {
                    for (wi, yi) in w.iter().zip(y.iter()) {
                        if *yi != 0.0 {
                            prop_assert!((wi - yi.signum()).abs() < 1e-12);
                        } else {
                            prop_assert!(wi.abs() <= 1.0 + 1e-12);
                        }
                    }
                }
                OperatorKind::Product { .. } | OperatorKind::UserResolvent { .. } => {}
                _ => {
                    let my = op.eval(&y).unwrap();
                    prop_assert!((&my - &w).norm() <= 1e-9 * (1.0 + w.norm()), "{}", op.kind_name());
                }
            }
        }
    }

    #[test]
    fn fitzpatrick_dominates_pairing(seed in 0u64..1000, dim in 1usize..5, a in vec_strategy(8), b in vec_strategy(8)) {
        for op in catalog_for(seed, dim) {
            let n = op.dim().unwrap_or(dim);
            let x = Vector::from_iterator(n, a.iter().cycle().take(n).copied());
            let u = Vector::from_iterator(n, b.iter().cycle().take(n).copied());
            if let Ok(phi) = op.fitzpatrick(&x, &u) {
                prop_assert!(phi.ge(x.dot(&u) - 1e-10), "{}", op.kind_name());
                // on the graph equality holds
                if op.is_single_valued() {
                    let mx = op.eval(&x).unwrap();
                    let on_graph = op.fitzpatrick(&x, &mx).unwrap().finite().unwrap();
                    prop_assert!((on_graph - x.dot(&mx)).abs() <= 1e-10 * (1.0 + x.dot(&mx).abs()), "{}", op.kind_name());
                }
            }
        }
    }

    #[test]
    fn selections_are_monotone(seed in 0u64..1000, dim in 1usize..5, a in vec_strategy(8), b in vec_strategy(8)) {
        for op in catalog_for(seed, dim) {
            let n = op.dim().unwrap_or(dim);
            let mut x = Vector::from_iterator(n, a.iter().cycle().take(n).copied());
            let mut y = Vector::from_iterator(n, b.iter().cycle().take(n).copied());
            if let Some(c) = op.domain() {
                x = c.project(&x).unwrap();
                y = c.project(&y).unwrap();
            }
            let (Ok(sx), Ok(sy)) = (op.selection(&x), op.selection(&y)) else { continue };
            prop_assert!((&x - &y).dot(&(sx - sy)) >= -1e-12 * (1.0 + (&x - &y).norm_squared()));
        }
    }
}
