//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use lipopsys::catalog::{flattening_triangle, tail_weighted, two_by_two};
use lipopsys::convex::oracle::polytope_of;
use lipopsys::convex::{support, BallSpec, Frame, Functional, SolverConfig, SupportOpts};
use lipopsys::cstar::{
    epsilon_curve, f_leibniz_equivalence_check, leibniz_constant_lower, limit_system, state_space_shape, EpsCurve, EpsOptions, LimitOptions, Shape, EPS_ZERO,
};
use lipopsys::linalg::{herm_eigenvalues, BlockMatrix, CMat, C64};
use lipopsys::metric::{coupling_defect, rho_states, rho_ucp, MatrixState};
use lipopsys::opsys::{MatrixStar, OperatorSubsystem, State};
use lipopsys::seminorm::{random_pure, LinearMapNorm, LipNormedSystem, PNorm, SeminormSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OSC_TOL: f64 = 1e-9;
const DEFECT_TOL: f64 = 1e-6;
const RADIUS_TOL: f64 = 1e-4;
const EXACT_TOL: f64 = 1e-12;
const DISC_TOL: f64 = 1e-6;
const EVAL_TOL: f64 = 1e-8;
const TAIL_FLOOR: f64 = 0.1;
const TAIL_CEIL: f64 = 1e-6;
const SUPPORT_TOL: f64 = 1e-6;
const UCP_TOL: f64 = 1e-8;
const TRIANGLE_TOL: f64 = 1e-9;
const WEAK_STAR_END: f64 = 1e-4;
const K: usize = 64;
const N_TAIL: f64 = 1e4;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok { Ok(msg) } else { Err(msg) }
}

fn random_state(dims: &[usize], rng: &mut ChaCha8Rng) -> State {
    let a = random_pure(dims, rng);
    let b = random_pure(dims, rng);
    a.mix(&b, rng.gen_range(0.0..1.0))
}

fn tail_opts() -> LimitOptions {
    LimitOptions { n_tail: Some(N_TAIL), ..LimitOptions::default() }
}

fn c1_oscillation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let dims = loop {
            let d: Vec<usize> = (0..rng.gen_range(1..=4)).map(|_| rng.gen_range(1..=4)).collect();
            if d.iter().sum::<usize>() <= 12 {
                break d;
            }
        };
        let sys = OperatorSubsystem::full(MatrixStar::new(dims.clone()).unwrap());
        let blocks: Vec<CMat> = dims
            .iter()
            .map(|&d| {
                let g = CMat::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                (&g + g.adjoint()) * C64::new(0.5, 0.0)
            })
            .collect();
        let a = BlockMatrix::from_blocks(blocks);
        let x = sys.herm_coords_of(&a, 1e-10).map_err(|e| e.to_string())?;
        let eig: Vec<f64> = a.blocks.iter().flat_map(herm_eigenvalues).collect();
        let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
        worst = worst.max((sys.osc_seminorm(&x) - (hi - lo) / 2.0).abs());
    }
    check(worst <= OSC_TOL, format!("max |osc − spread/2| = {worst:.2e} over 50 elements (tol {OSC_TOL:.0e})"))
}

fn c2_flattening() -> Outcome {
    let cfg = SolverConfig::default();
    let mut notes = Vec::new();
    let mut ok = true;
    let (mut d_err, mut r_err): (f64, f64) = (0.0, 0.0);
    for n in [1.0, 2.0, 4.0, 8.0] {
        let b = flattening_triangle::bridge(n);
        let v = b.verify(20, 1e-6, &cfg).map_err(|e| e.to_string())?;
        ok &= v.holds && !v.inconclusive;
        let d = coupling_defect(&b, &cfg).map_err(|e| e.to_string())?;
        d_err = d_err.max((d.lower - 1.0 / n).abs()).max((d.upper - 1.0 / n).abs());
        let x = LipNormedSystem::new(flattening_triangle::system(), flattening_triangle::lip(n), &cfg).map_err(|e| e.to_string())?;
        r_err = r_err.max((x.radius().lower - 1.0).abs()).max((x.radius().upper - 1.0).abs());
    }
    ok &= d_err <= DEFECT_TOL && r_err <= RADIUS_TOL;
    notes.push(format!("bridges verified: {ok}, defect error {d_err:.1e}, radius error {r_err:.1e}"));
    let v = limit_system(&flattening_triangle::family(vec![1.0, 2.0, 4.0, 8.0]), &tail_opts(), &cfg).map_err(|e| e.to_string())?;
    let mid = v
        .limit_subspace
        .basis()
        .iter()
        .map(|b| {
            let [a, bb, c] = [0, 1, 2].map(|i| b.blocks[i][(0, 0)].re);
            (c - (a + bb) / 2.0).abs()
        })
        .fold(0.0, f64::max);
    let lim_ok = v.limit_subspace.dim() == 2 && mid <= EXACT_TOL && !v.inherited && v.defect.witness_residual > 0.0;
    notes.push(format!(
        "limit dim {}, midpoint error {mid:.1e}, inherited {}, witness pair {:?} residual {:.3}",
        v.limit_subspace.dim(),
        v.inherited,
        v.defect.witness_pair,
        v.defect.witness_residual
    ));
    check(ok && lim_ok, notes.join("; "))
}

fn c3_two_by_two() -> Outcome {
    let cfg = SolverConfig::default();
    let v = limit_system(&two_by_two::family(vec![1.0, 2.0, 4.0, 8.0]), &tail_opts(), &cfg).map_err(|e| e.to_string())?;
    let scalar_diag = v.limit_subspace.dim() == 3 && v.limit_subspace.basis().iter().all(|b| (b.blocks[0][(0, 0)] - b.blocks[0][(1, 1)]).norm() <= EXACT_TOL);
    let disc = match state_space_shape(&v.limit_subspace, 64, Some(&two_by_two::e12_plane())).map_err(|e| e.to_string())?.shape {
        Shape::Disc { radius, .. } => Some(radius),
        _ => None,
    };
    let c3 = OperatorSubsystem::full(MatrixStar::new(vec![1, 1, 1]).unwrap());
    let tri = match state_space_shape(&c3, 64, None).map_err(|e| e.to_string())?.shape {
        Shape::Polytope { vertices } => vertices.len(),
        _ => 0,
    };
    let mut defects = Vec::new();
    for n in [2.0, 4.0, 8.0] {
        let d = coupling_defect(&two_by_two::bridge(n), &cfg).map_err(|e| e.to_string())?;
        defects.push((n, d.upper));
    }
    let def_ok = defects.iter().all(|(n, u)| *u <= 3.0 / n);
    let disc_ok = disc.is_some_and(|r| (r - 0.5).abs() <= DISC_TOL);
    check(
        scalar_diag && !v.inherited && disc_ok && tri == 3 && def_ok,
        format!(
            "scalar-diagonal limit {scalar_diag}, inherited {}, disc radius {disc:?}, triangle vertices {tri}, n·defect {:?}",
            v.inherited,
            defects.iter().map(|(n, u)| format!("{:.4}", n * u)).collect::<Vec<_>>()
        ),
    )
}

fn c4_tail_weighted() -> Outcome {
    let cfg = SolverConfig::default();
    let sys = tail_weighted::system(K);
    let unit = sys.unit_coords();
    let a = tail_weighted::witness(K);
    let l_base = tail_weighted::lip_base(K).eval_general(&a, &unit).map_err(|e| e.to_string())?;
    let l_inf = tail_weighted::lip(K, f64::INFINITY).eval_general(&a, &unit).map_err(|e| e.to_string())?;
    let el = sys.element_c(&a);
    let sq = sys.herm_coords_of(&el.adjoint().mul(&el), 1e-12).map_err(|e| e.to_string())?;
    let mut ok = (l_base - 1.0).abs() <= EVAL_TOL && (l_inf - 1.0).abs() <= EVAL_TOL;
    let mut ratios = Vec::new();
    let mut verdicts = Vec::new();
    let pair = (tail_weighted::witness_adjoint(K), tail_weighted::witness(K));
    for n in [2.0, 4.0, 8.0, 16.0] {
        let want = f64::max(1.0, n - 1.0);
        let v = tail_weighted::lip(K, n).eval(&sq, &unit).map_err(|e| e.to_string())?;
        ok &= (v - want).abs() <= EVAL_TOL;
        let x = LipNormedSystem::new(sys.clone(), tail_weighted::lip(K, n), &cfg).map_err(|e| e.to_string())?;
        let l = leibniz_constant_lower(&x, std::slice::from_ref(&pair), 0, cfg.seed).map_err(|e| e.to_string())?;
        ok &= l.value >= want - EVAL_TOL;
        ratios.push(l.value);
        let r0 = want - 0.25;
        let f = f_leibniz_equivalence_check(&x, r0, std::slice::from_ref(&a), 0, &cfg).map_err(|e| e.to_string())?;
        ok &= f.holds() == Some(false);
        verdicts.push(f.holds());
    }
    let v = limit_system(&tail_weighted::family(K, vec![2.0, 4.0, 8.0, 16.0]), &tail_opts(), &cfg).map_err(|e| e.to_string())?;
    let full = v.limit_subspace.dim() == sys.dim();
    ok &= full && v.inherited;
    check(
        ok,
        format!(
            "K = {K}: L(A) = {l_base:.9}, L_inf(A) = {l_inf:.9}, Leibniz ratios {ratios:.4?}, f-Leibniz below n−1 {verdicts:?}, full limit {full}, inherited {}",
            v.inherited
        ),
    )
}

fn monotone(c: &EpsCurve) -> bool {
    c.points.windows(2).all(|w| w[1].upper <= w[0].upper && w[1].lower <= w[0].lower)
}

fn c5_epsilon() -> Outcome {
    let cfg = SolverConfig::default();
    let grid = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
    let runs: Vec<(&str, LipNormedSystem, Vec<Vec<C64>>)> = vec![
        ("flattening", LipNormedSystem::new(flattening_triangle::system(), flattening_triangle::lip(4.0), &cfg).unwrap(), vec![flattening_triangle::witness()]),
        ("two-by-two", LipNormedSystem::new(two_by_two::system(), two_by_two::lip(4.0), &cfg).unwrap(), vec![two_by_two::e12()]),
        ("tail-weighted", LipNormedSystem::new(tail_weighted::system(4), tail_weighted::lip(4, 2.0), &cfg).unwrap(), vec![tail_weighted::witness(4)]),
        ("c2", LipNormedSystem::new(flattening_triangle::limit_system(), flattening_triangle::limit_lip(), &cfg).unwrap(), vec![]),
    ];
    let mut ok = true;
    let mut c2_tail: f64 = 0.0;
    for (id, x, w) in &runs {
        let c = epsilon_curve(x, id, &grid, &EpsOptions { witnesses: w.clone(), ..EpsOptions::default() }, &cfg).map_err(|e| e.to_string())?;
        ok &= monotone(&c);
        if *id == "c2" {
            c2_tail = c.points.iter().filter(|p| p.r >= 1.0).map(|p| p.upper).fold(0.0, f64::max);
        }
    }
    ok &= c2_tail <= EPS_ZERO;
    let ex1 = limit_system(&two_by_two::family(vec![1.0, 2.0, 4.0, 8.0]), &tail_opts(), &cfg).map_err(|e| e.to_string())?;
    let ex2 = limit_system(&flattening_triangle::family(vec![1.0, 2.0, 4.0, 8.0]), &tail_opts(), &cfg).map_err(|e| e.to_string())?;
    let ex3 = limit_system(&tail_weighted::family(K, vec![2.0, 4.0, 8.0, 16.0]), &tail_opts(), &cfg).map_err(|e| e.to_string())?;
    ok &= ex1.eps_tail_lower >= TAIL_FLOOR && ex2.eps_tail_lower >= TAIL_FLOOR && ex3.eps_tail <= TAIL_CEIL;
    check(
        ok,
        format!(
            "envelopes monotone, c2 ε upper for r ≥ 1: {c2_tail:.1e}; eps_tail lower ex1 {:.3}, ex2 {:.3}; eps_tail upper ex3 {:.1e} at r = {}",
            ex1.eps_tail_lower, ex2.eps_tail_lower, ex3.eps_tail, ex3.r_tail
        ),
    )
}

fn c6_cross_validation() -> Outcome {
    let cfg = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let blocks = 3 + case % 2;
        let sys = OperatorSubsystem::full(MatrixStar::new(vec![1; blocks]).unwrap());
        let rows = (0..rng.gen_range(1..=3))
            .map(|_| {
                let mut r: Vec<f64> = (0..blocks).map(|_| rng.gen_range(-2.0..2.0)).collect();
                r[0] = 0.0;
                r
            })
            .collect();
        let spec = SeminormSpec::linmap(LinearMapNorm::real(rows, PNorm::Inf, rng.gen_range(0.5..2.0)));
        let ball = BallSpec::lip(spec, 1.0, rng.gen_range(0.5..2.0));
        let frame = Frame::of(&sys);
        let phi: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = support(&frame, &ball, &Functional::herm(phi.clone()), SupportOpts::default(), &cfg).map_err(|e| e.to_string())?;
        let poly = polytope_of(&frame, &ball, None).ok_or("ball is not polyhedral")?;
        let (best, _) = poly.max_over_vertices(|x| phi.iter().zip(x).map(|(a, b)| a * b).sum()).ok_or("no vertices")?;
        worst = worst.max((r.value - best).abs() / best.abs().max(1.0));
    }
    let x = LipNormedSystem::new(two_by_two::system(), two_by_two::lip(2.0), &cfg).map_err(|e| e.to_string())?;
    let mut ucp: f64 = 0.0;
    for _ in 0..20 {
        let (w1, w2) = (random_state(&[2], &mut rng), random_state(&[2], &mut rng));
        let a = rho_states(&x, &w1, &w2, &cfg).map_err(|e| e.to_string())?.value;
        let b = rho_ucp(&x, &MatrixState::from_state(&w1), &MatrixState::from_state(&w2), &cfg).map_err(|e| e.to_string())?;
        ucp = ucp.max((a - b.lower).abs());
    }
    check(
        worst <= SUPPORT_TOL && ucp <= UCP_TOL,
        format!("support vs vertex enumeration {worst:.1e} over 20 polytopes (tol {SUPPORT_TOL:.0e}); rho_ucp(p = 1) vs rho_states {ucp:.1e} (tol {UCP_TOL:.0e})"),
    )
}

fn c7_metric_axioms() -> Outcome {
    let cfg = SolverConfig::default();
    let systems = vec![
        ("flattening", LipNormedSystem::new(flattening_triangle::system(), flattening_triangle::lip(4.0), &cfg).unwrap()),
        ("two-by-two", LipNormedSystem::new(two_by_two::system(), two_by_two::lip(2.0), &cfg).unwrap()),
        ("tail-weighted", LipNormedSystem::new(tail_weighted::system(4), tail_weighted::lip(4, 2.0), &cfg).unwrap()),
    ];
    let mut asym: f64 = 0.0;
    let mut tri: f64 = 0.0;
    for (_, x) in &systems {
        let dims = x.system().ambient().block_dims.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let w: Vec<State> = (0..3).map(|_| random_state(&dims, &mut rng)).collect();
            let rho = |i: usize, j: usize| rho_states(x, &w[i], &w[j], &cfg).map_err(|e| e.to_string());
            let (ab, ba, bc, ac) = (rho(0, 1)?, rho(1, 0)?, rho(1, 2)?, rho(0, 2)?);
            asym = asym.max((ab.value - ba.value).abs());
            tri = tri.max(ac.value - ab.upper() - bc.upper());
        }
    }
    // ω_k = (1 − 1/k) ω + (1/k) ω′
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mono = true;
    let mut ends = Vec::new();
    for s in 0..5 {
        let x = &systems[s % systems.len()].1;
        let dims = x.system().ambient().block_dims.clone();
        let (w, far) = (random_state(&dims, &mut rng), random_state(&dims, &mut rng));
        let target = x.system().functional_of(&w);
        let mut prev = f64::INFINITY;
        for k in [1e3, 2e3, 4e3, 8e3, 1.6e4, 1e5] {
            let f: Vec<f64> = x.system().functional_of(&w.mix(&far, 1.0 / k)).iter().zip(&target).map(|(a, b)| a - b).collect();
            let d = x.dual_seminorm(&Functional::herm(f), &cfg).map_err(|e| e.to_string())?.upper();
            mono &= d <= prev;
            prev = d;
        }
        ends.push(prev);
    }
    let end = ends.iter().copied().fold(0.0, f64::max);
    check(
        asym == 0.0 && tri <= TRIANGLE_TOL && mono && end <= WEAK_STAR_END,
        format!("asymmetry {asym:.1e}, triangle violation {tri:.1e} (tol {TRIANGLE_TOL:.0e}) over 3×100 triples; weak* sequences monotone {mono}, final {end:.1e}"),
    )
}

fn files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap().map(|e| e.unwrap().path()) {
            if e.is_dir() {
                stack.push(e);
            } else {
                out.insert(e.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&e).unwrap());
            }
        }
    }
    out
}

fn c8_determinism() -> Outcome {
    let instance = Path::new(env!("CARGO_MANIFEST_DIR")).join("instances/two_point.json");
    let inst = instance.to_str().unwrap();
    let suite: Vec<Vec<&str>> = vec![
        vec!["example", "flattening-triangle"],
        vec!["example", "two-by-two"],
        vec!["example", "tail-weighted", "--cutoff", "8"],
        vec!["radius", "--config", inst],
        vec!["rho", "--config", inst],
        vec!["epsilon-curve", "--config", inst],
        vec!["leibniz", "--config", inst],
        vec!["shape", "--config", inst],
    ];
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outs = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        for args in &suite {
            let o = Command::new(env!("CARGO_BIN_EXE_lipopsys")).args(args).args(["--seed", "2024", "--out"]).arg(&dir).output().map_err(|e| e.to_string())?;
            if !o.status.success() {
                return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr)));
            }
        }
        outs.push(files(&dir));
    }
    let differing: Vec<String> = outs[0].iter().filter(|(k, v)| outs[1].get(*k) != Some(v)).map(|(k, _)| k.display().to_string()).collect();
    let same_set = outs[0].keys().eq(outs[1].keys());
    check(
        differing.is_empty() && same_set && !outs[0].is_empty(),
        format!("{} output files compared, {} differ {differing:?}", outs[0].len(), differing.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oscillation seminorm vs eigenvalue oracle", c1_oscillation),
        ("flattening triangle: bridges, defect 1/n, radius 1, midpoint limit", c2_flattening),
        ("two-by-two: scalar-diagonal limit, disc vs triangle, defect ≤ 3/n", c3_two_by_two),
        ("tail-weighted K = 64: witness values, Leibniz growth, inherited limit", c4_tail_weighted),
        ("epsilon curves: monotone envelopes, two-point zero tail, limit tails", c5_epsilon),
        ("solver cross-validation: vertex enumeration, rho_ucp at level 1", c6_cross_validation),
        ("metric axioms and weak* convergence", c7_metric_axioms),
        ("CLI determinism", c8_determinism),
    ];
    let mut failed = 0;
    let t0 = Instant::now();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let (tag, detail) = match r {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {}: {tag}: {name} [{detail}] ({:.1}s)", i + 1, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of 8 passed in {:.1}s", 8 - failed, t0.elapsed().as_secs_f64());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
