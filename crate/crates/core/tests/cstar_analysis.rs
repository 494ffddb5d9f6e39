use lipopsys::catalog::{flattening_triangle, tail_weighted, two_by_two};
use lipopsys::convex::SolverConfig;
use lipopsys::cstar::{
    eps_distance, epsilon_curve, f_leibniz_equivalence_check, leibniz_constant_lower, limit_system, state_space_shape, Blowup, EpsCurve, EpsOptions,
    Growth, LimitOptions, SeminormFamily, Shape, EPS_ZERO,
};
use lipopsys::opsys::{MatrixStar, OperatorSubsystem};
use lipopsys::seminorm::{LinearMapNorm, LipNormedSystem, PNorm, SeminormSpec};
use nalgebra::DMatrix;

fn tail_opts() -> LimitOptions {
    LimitOptions { n_tail: Some(1e4), ..LimitOptions::default() }
}

/// Orthogonal projector onto the column span.
fn projector(m: &DMatrix<f64>) -> DMatrix<f64> {
    let q = m.clone().qr().q();
    &q * q.transpose()
}

fn is_monotone(c: &EpsCurve) -> bool {
    c.points.windows(2).all(|w| w[1].upper <= w[0].upper && w[1].lower <= w[0].lower) && c.points.iter().all(|p| p.lower <= p.upper)
}

#[test]
fn flattening_limit_is_the_midpoint_plane() {
    let cfg = SolverConfig::default();
    let v = limit_system(&flattening_triangle::family(vec![1.0, 10.0, 1e4]), &tail_opts(), &cfg).unwrap();
    assert_eq!(v.limit_subspace.dim(), 2);
    for b in v.limit_subspace.basis() {
        let [a, bb, c] = [0, 1, 2].map(|i| b.blocks[i][(0, 0)].re);
        assert!((c - (a + bb) / 2.0).abs() <= 1e-12, "{a} {bb} {c}");
    }
    assert!(!v.inherited);
    assert!(v.defect.defect > 0.1);
    assert!(v.eps_tail_lower >= 0.1, "{}", v.eps_tail_lower);
}

#[test]
fn limit_subspace_ignores_parameter_order_and_atom_scale() {
    let cfg = SolverConfig::default();
    let a = limit_system(&flattening_triangle::family(vec![1.0, 10.0, 100.0]), &tail_opts(), &cfg).unwrap();
    let b = limit_system(&flattening_triangle::family(vec![100.0, 1.0, 10.0]), &tail_opts(), &cfg).unwrap();
    let base = SeminormSpec::linmap(LinearMapNorm::real(vec![vec![0.0, 0.5, -0.5]], PNorm::Inf, 1.0));
    let blow = SeminormSpec::linmap(LinearMapNorm::real(vec![vec![0.0, 7.0, 7.0]], PNorm::Inf, 1.0));
    let sys = flattening_triangle::system();
    let fam = SeminormFamily::max_form(sys, base, vec![Blowup { atom: blow, growth: Growth::Linear }], vec![1.0, 10.0]);
    let c = limit_system(&fam, &tail_opts(), &cfg).unwrap();
    let pa = projector(&a.embedding);
    assert!((&pa - projector(&b.embedding)).amax() <= 1e-12);
    assert!((&pa - projector(&c.embedding)).amax() <= 1e-12);
    assert_eq!(a.inherited, c.inherited);
}

#[test]
fn two_by_two_limit_is_scalar_diagonal_with_disc_state_space() {
    let cfg = SolverConfig::default();
    let v = limit_system(&two_by_two::family(vec![1.0, 10.0, 1e4]), &tail_opts(), &cfg).unwrap();
    assert_eq!(v.limit_subspace.dim(), 3);
    for b in v.limit_subspace.basis() {
        let m = &b.blocks[0];
        assert!((m[(0, 0)] - m[(1, 1)]).norm() <= 1e-12);
    }
    assert!(!v.inherited);
    assert!(v.eps_tail_lower >= 0.1, "{}", v.eps_tail_lower);
    let plane = two_by_two::e12_plane();
    match state_space_shape(&v.limit_subspace, 64, Some(&plane)).unwrap().shape {
        Shape::Disc { radius, .. } => assert!((radius - 0.5).abs() <= 1e-6, "{radius}"),
        other => panic!("{other:?}"),
    }
    let c3 = OperatorSubsystem::full(MatrixStar::new(vec![1, 1, 1]).unwrap());
    match state_space_shape(&c3, 64, None).unwrap().shape {
        Shape::Polytope { vertices } => assert_eq!(vertices.len(), 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn tail_weighted_limit_inherits_the_product() {
    let cfg = SolverConfig::default();
    let v = limit_system(&tail_weighted::family(64, vec![2.0, 4.0, 8.0, 16.0]), &tail_opts(), &cfg).unwrap();
    assert_eq!(v.limit_subspace.dim(), 256);
    assert!(v.inherited);
    assert!(v.eps_tail <= 1e-6, "{}", v.eps_tail);
}

#[test]
fn tail_weighted_leibniz_ratio_tracks_the_parameter() {
    let cfg = SolverConfig::default();
    let k = 64;
    let pair = (tail_weighted::witness_adjoint(k), tail_weighted::witness(k));
    for n in [2.0, 4.0, 8.0, 16.0] {
        let x = LipNormedSystem::new(tail_weighted::system(k), tail_weighted::lip(k, n), &cfg).unwrap();
        let l = leibniz_constant_lower(&x, std::slice::from_ref(&pair), 0, 1).unwrap();
        assert!(l.value >= f64::max(1.0, n - 1.0) - 1e-8, "n = {n}: {}", l.value);
    }
}

#[test]
fn tail_weighted_fails_f_leibniz_below_the_square_norm() {
    let cfg = SolverConfig::default();
    let k = 64;
    let x = LipNormedSystem::new(tail_weighted::system(k), tail_weighted::lip(k, 8.0), &cfg).unwrap();
    let w = [tail_weighted::witness(k)];
    let v = f_leibniz_equivalence_check(&x, 6.0, &w, 0, &cfg).unwrap();
    assert_eq!(v.holds(), Some(false), "{v:?}");
}

#[test]
fn leibniz_lower_bound_grows_with_the_cutoff() {
    let cfg = SolverConfig::default();
    for k in [4, 8, 16, 32] {
        let x = LipNormedSystem::new(tail_weighted::system(k), tail_weighted::lip(k, f64::INFINITY), &cfg).unwrap();
        let pair = (tail_weighted::witness_adjoint(k), tail_weighted::witness(k));
        let l = leibniz_constant_lower(&x, &[pair], 0, 1).unwrap();
        assert!(l.value >= k as f64 - 1e-8, "K = {k}: {}", l.value);
    }
}

#[test]
fn epsilon_envelopes_are_monotone() {
    let cfg = SolverConfig::default();
    let grid = [0.25, 0.5, 1.0, 2.0, 4.0, 16.0];
    let runs = [
        ("flattening", LipNormedSystem::new(flattening_triangle::system(), flattening_triangle::lip(4.0), &cfg).unwrap(), vec![flattening_triangle::witness()]),
        ("two-by-two", LipNormedSystem::new(two_by_two::system(), two_by_two::lip(4.0), &cfg).unwrap(), vec![two_by_two::e12()]),
        ("tail-weighted", LipNormedSystem::new(tail_weighted::system(3), tail_weighted::lip(3, 2.0), &cfg).unwrap(), vec![tail_weighted::witness(3)]),
    ];
    for (id, x, w) in runs {
        let c = epsilon_curve(&x, id, &grid, &EpsOptions { witnesses: w, ..EpsOptions::default() }, &cfg).unwrap();
        assert!(is_monotone(&c), "{c:?}");
        assert!(c.points.iter().all(|p| p.lower >= 0.0));
    }
}

#[test]
fn two_point_algebra_curve_vanishes_from_one() {
    let cfg = SolverConfig::default();
    let sys = OperatorSubsystem::full(MatrixStar::new(vec![1, 1]).unwrap());
    let x = LipNormedSystem::new(sys, flattening_triangle::limit_lip(), &cfg).unwrap();
    let c = epsilon_curve(&x, "c2", &[1.0, 1.5, 2.0, 8.0], &EpsOptions::default(), &cfg).unwrap();
    assert!(c.points.iter().all(|p| p.upper <= EPS_ZERO), "{c:?}");
}

#[test]
fn eps_distance_is_a_bracketed_pseudometric() {
    let cfg = SolverConfig::default();
    let grid = [0.5, 1.0, 2.0, 4.0];
    let curve = |n: f64| {
        let x = LipNormedSystem::new(flattening_triangle::system(), flattening_triangle::lip(n), &cfg).unwrap();
        let opts = EpsOptions { witnesses: vec![flattening_triangle::witness()], ..EpsOptions::default() };
        epsilon_curve(&x, "f", &grid, &opts, &cfg).unwrap()
    };
    let (a, b, c) = (curve(1.0), curve(4.0), curve(64.0));
    assert_eq!(eps_distance(&a, &a).value, 0.0);
    let ab = eps_distance(&a, &b);
    let ba = eps_distance(&b, &a);
    assert_eq!(ab.value, ba.value);
    assert!(ab.lower <= ab.value + 1e-12 && ab.value <= ab.upper + 1e-12);
    assert!(eps_distance(&a, &c).value <= ab.value + eps_distance(&b, &c).value + 1e-12);
    // ε never exceeds R² = 1
    assert!(ab.upper <= 1.0 + 1e-9);
}

#[test]
fn limit_options_default_tail() {
    let o = LimitOptions::default();
    assert_eq!(o.r_tail, 256.0);
    assert!(o.n_tail.is_none() && o.eps.witnesses.is_empty());
}
