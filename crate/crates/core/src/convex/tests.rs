use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::{expand, polytope_of};
use super::*;
use crate::opsys::MatrixStar;
use crate::seminorm::LinearMapNorm;

fn flattening(n: f64) -> SeminormSpec {
    SeminormSpec::linmap(LinearMapNorm::real(vec![vec![0.0, 0.5, -0.5], vec![0.0, 0.5 * n, 0.5 * n]], PNorm::Two, 1.0))
}

fn c3() -> OperatorSubsystem {
    OperatorSubsystem::full(MatrixStar::new(vec![1, 1, 1]).unwrap())
}

/// Random `p = ∞` seminorm killing the unit, capped by the sup norm.
fn random_polytope_ball(rng: &mut ChaCha8Rng, blocks: usize) -> (OperatorSubsystem, BallSpec) {
    let sys = OperatorSubsystem::full(MatrixStar::new(vec![1; blocks]).unwrap());
    let rows = (0..rng.gen_range(1..=3))
        .map(|_| {
            let mut r: Vec<f64> = (0..blocks).map(|_| rng.gen_range(-2.0..2.0)).collect();
            r[0] = 0.0;
            r
        })
        .collect();
    let spec = SeminormSpec::linmap(LinearMapNorm::real(rows, PNorm::Inf, rng.gen_range(0.5..2.0)));
    (sys, BallSpec::lip(spec, 1.0, rng.gen_range(0.5..2.0)))
}

#[test]
fn zero_functional_has_zero_support() {
    let sys = c3();
    let r = support(&Frame::of(&sys), &BallSpec::seminorm(flattening(1.0), 1.0), &Functional::herm(vec![0.0; 3]), SupportOpts::default(), &SolverConfig::default()).unwrap();
    assert_eq!(r.value, 0.0);
    assert_eq!(r.status, Status::Converged);
}

#[test]
fn ellipse_support_matches_boundary_sampling() {
    // a − c = x₁ on { ‖((x₁ − x₂)/2, (x₁ + x₂)/2)‖₂ ≤ 1 }: boundary x₁ = cos t + sin t, x₂ = sin t − cos t
    let sys = c3();
    let r = support(&Frame::of(&sys), &BallSpec::seminorm(flattening(1.0), 1.0), &Functional::herm(vec![0.0, 1.0, 0.0]), SupportOpts { pin: Some(0) }, &SolverConfig::default()).unwrap();
    let sampled = (0..200_000).map(|i| {
        let t = i as f64 * std::f64::consts::TAU / 200_000.0;
        t.cos() + t.sin()
    });
    let oracle = sampled.fold(f64::NEG_INFINITY, f64::max);
    assert_abs_diff_eq!(r.value, oracle, epsilon = 1e-9);
    assert_abs_diff_eq!(r.value, 2f64.sqrt(), epsilon = 1e-12);
}

#[test]
fn polytope_supports_agree_with_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = SolverConfig::default();
    for case in 0..20 {
        let (sys, ball) = random_polytope_ball(&mut rng, 3 + case % 2);
        let frame = Frame::of(&sys);
        let phi: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = support(&frame, &ball, &Functional::herm(phi.clone()), SupportOpts::default(), &cfg).unwrap();
        let poly = polytope_of(&frame, &ball, None).expect("polyhedral ball");
        let (best, x) = poly.max_over_vertices(|x| phi.iter().zip(x).map(|(a, b)| a * b).sum()).unwrap();
        let x = expand(&x, sys.dim(), None);
        assert!(frame.gauge_h(&ball, &x).unwrap() <= 1.0 + 1e-9);
        assert!((r.value - best).abs() <= 1e-6 * best.abs().max(1.0), "case {case}: {} vs {best}", r.value);
        assert!(r.upper() >= best - 1e-9);
    }
}

#[test]
fn projection_of_a_member_is_free() {
    let sys = c3();
    let ball = BallSpec::lip(flattening(2.0), 1.0, 1.0);
    let a = sys.element(&[0.1, 0.2, -0.1]);
    let p = project_to_ball(&Frame::of(&sys), &ball, &a, &SolverConfig::default()).unwrap();
    assert!(p.dist <= 1e-7, "{p:?}");
    assert!(p.lower <= p.dist);
}

#[test]
fn projection_distance_has_closed_form_on_a_norm_ball() {
    // distance from 2·e to the unit ball of ‖·‖ is 1
    let sys = c3();
    let p = project_to_ball(&Frame::of(&sys), &BallSpec::norm(1.0), &sys.element(&[2.0, 0.0, 0.0]), &SolverConfig::default()).unwrap();
    assert_abs_diff_eq!(p.dist, 1.0, epsilon = 1e-7);
    assert!(p.lower >= 1.0 - 1e-6);
}

#[test]
fn constant_objective_is_returned_exactly() {
    let r = max_nonconcave(|_| 3.5, |v| v.iter().map(|x| x.abs()).fold(0.0, f64::max), 3, &[], 3, 5, 1);
    assert_eq!(r.value, 3.5);
    assert_eq!(r.status, Status::GapOpen);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn support_is_symmetric_and_sublinear(f in prop::collection::vec(-1.0f64..1.0, 2), g in prop::collection::vec(-1.0f64..1.0, 2)) {
        let sys = c3();
        let frame = Frame::of(&sys);
        let ball = BallSpec::seminorm(flattening(3.0), 1.0);
        let cfg = SolverConfig::default();
        let h = |v: &[f64]| support(&frame, &ball, &Functional::herm(vec![0.0, v[0], v[1]]), SupportOpts { pin: Some(0) }, &cfg).unwrap();
        let neg: Vec<f64> = f.iter().map(|x| -x).collect();
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        // the ball is centrally symmetric
        prop_assert!((h(&f).value - h(&neg).value).abs() <= 1e-9);
        prop_assert!(h(&sum).value <= h(&f).upper() + h(&g).upper() + 1e-9);
    }
}
