//! Property tests for the exterior-calculus and bracket identities on
//! randomly generated polynomial-trigonometric fields and forms.

use liesys::geometry::{Chart, KForm, VectorField};
use liesys::symexpr::{Expr, SampleSpec, DEFAULT_ZERO_TOL};
use proptest::prelude::*;

const COORDS: [&str; 3] = ["x", "y", "z"];

fn chart() -> Chart {
    Chart::builder()
        .linear("x")
        .linear("y")
        .linear("z")
        .build()
        .unwrap()
}

fn sampler() -> SampleSpec {
    chart().sample_spec(2024).samples(25)
}

/// Shallow polynomial-trig expressions (depth <= 3) keep bracket and wedge
/// results well-scaled for tolerance checks.
fn arb_expr() -> BoxedStrategy<Expr> {
    let leaf = prop_oneof![
        (-1.5..1.5f64).prop_map(Expr::constant),
        proptest::sample::select(COORDS.to_vec()).prop_map(Expr::coord),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::cos),
            inner.prop_map(Expr::negate),
        ]
        .boxed()
    })
    .boxed()
}

prop_compose! {
    fn arb_field()(cx in arb_expr(), cy in arb_expr(), cz in arb_expr()) -> VectorField {
        VectorField::new(chart(), vec![cx, cy, cz]).unwrap()
    }
}

prop_compose! {
    fn arb_one_form()(cx in arb_expr(), cy in arb_expr(), cz in arb_expr()) -> KForm {
        KForm::one_form(chart(), vec![cx, cy, cz]).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracket_is_antisymmetric(a in arb_field(), b in arb_field()) {
        let ab = a.lie_bracket(&b).unwrap();
        let ba = b.lie_bracket(&a).unwrap();
        let sum = ab.add(&ba).unwrap();
        prop_assert!(sum.is_zero(&sampler(), 1e-7).unwrap());
    }

    #[test]
    fn bracket_satisfies_jacobi(a in arb_field(), b in arb_field(), c in arb_field()) {
        let abc = a.lie_bracket(&b.lie_bracket(&c).unwrap()).unwrap();
        let bca = b.lie_bracket(&c.lie_bracket(&a).unwrap()).unwrap();
        let cab = c.lie_bracket(&a.lie_bracket(&b).unwrap()).unwrap();
        let total = abc.add(&bca).unwrap().add(&cab).unwrap();
        prop_assert!(total.is_zero(&sampler(), 1e-6).unwrap());
    }

    #[test]
    fn exterior_derivative_squares_to_zero(omega in arb_one_form()) {
        let ddw = omega
            .exterior_derivative()
            .unwrap()
            .exterior_derivative()
            .unwrap();
        prop_assert!(ddw.is_zero(&sampler(), 1e-7).unwrap());
    }

    #[test]
    fn lie_derivative_is_a_wedge_derivation(
        y in arb_field(),
        omega in arb_one_form(),
        sigma in arb_one_form(),
    ) {
        let left = omega.wedge(&sigma).unwrap().lie_derivative(&y).unwrap();
        let right = omega
            .lie_derivative(&y)
            .unwrap()
            .wedge(&sigma)
            .unwrap()
            .add(&omega.wedge(&sigma.lie_derivative(&y).unwrap()).unwrap())
            .unwrap();
        let defect = left.sub(&right).unwrap();
        prop_assert!(defect.is_zero(&sampler(), 1e-6).unwrap());
    }

    #[test]
    fn pairing_commutes_with_evaluation(
        omega in arb_one_form(),
        f in arb_field(),
    ) {
        // <omega, f> evaluated pointwise equals the sum of coefficient
        // times component.
        let paired = omega.pair(&f).unwrap();
        for p in sampler().points(["x", "y", "z"]) {
            let direct = paired.evaluate(&p).unwrap();
            let mut acc = 0.0;
            for (idx, comp) in f.components().iter().enumerate() {
                acc += omega.coefficient(&[idx]).evaluate(&p).unwrap()
                    * comp.evaluate(&p).unwrap();
            }
            prop_assert!((direct - acc).abs() <= 1e-9 * acc.abs().max(1.0));
        }
    }

    #[test]
    fn wedge_is_graded_antisymmetric_on_one_forms(
        omega in arb_one_form(),
        sigma in arb_one_form(),
    ) {
        let ws = omega.wedge(&sigma).unwrap();
        let sw = sigma.wedge(&omega).unwrap();
        let sum = ws.add(&sw).unwrap();
        prop_assert!(sum.is_zero(&sampler(), 1e-7).unwrap());
    }
}

#[test]
fn dual_frame_pairings_on_the_sleigh_chart() {
    // alpha3(X_t) for the sleigh combination: -b1*xi1 + b2*sin(theta0).
    let chart = Chart::builder()
        .linear("xi1")
        .linear("xi2")
        .periodic("theta0")
        .build()
        .unwrap();
    let sampler = chart.sample_spec(31);
    let alpha3 = KForm::one_form(
        chart.clone(),
        vec![Expr::zero(), Expr::one(), Expr::negate(Expr::coord("xi1"))],
    )
    .unwrap();
    let x1 = VectorField::coordinate(chart.clone(), "theta0").unwrap();
    let x2 = VectorField::new(
        chart.clone(),
        vec![
            Expr::cos(Expr::coord("theta0")),
            Expr::sin(Expr::coord("theta0")),
            Expr::zero(),
        ],
    )
    .unwrap();
    // alpha3(X1) = -xi1 and alpha3(X2) = sin(theta0).
    let p1 = alpha3.pair(&x1).unwrap() + Expr::coord("xi1");
    assert!(p1.is_zero(&sampler, DEFAULT_ZERO_TOL).unwrap());
    let p2 = alpha3.pair(&x2).unwrap() - Expr::sin(Expr::coord("theta0"));
    assert!(p2.is_zero(&sampler, DEFAULT_ZERO_TOL).unwrap());
}
