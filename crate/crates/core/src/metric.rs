//! Metrics on state and matrix-state spaces, Hausdorff bounds and bridge defects.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convex::bnb;
use crate::convex::conic::{image_matrix, Aff, CAff, Conic, ConicStatus};
use crate::convex::{self, coord_vars, read_coords, standard_normal, BallSpec, Frame, Functional, SolveResult, SolverConfig, Status, SupportOpts};
use crate::error::{Error, Result};
use crate::linalg::{herm_min_eigenvalue, pauli, top_singular_pair, BlockMatrix, CMat, C64, ONE, ZERO};
use crate::opsys::{OperatorSubsystem, State};
use crate::seminorm::{verify_bridge, BridgeCheck, LipNormedSystem, SeminormSpec, Weight};

/// Linear map `X → M_p` given by one Choi block per ambient block:
/// `C_i = Σ_jk E_jk ⊗ φ(E_jk)`, so `φ(a) = Σ_i Σ_jk (a_i)_jk C_i[j, k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixState {
    pub p: usize,
    pub choi: Vec<CMat>,
}

impl MatrixState {
    /// Validates complete positivity and unitality.
    pub fn new(p: usize, choi: Vec<CMat>) -> Result<Self> {
        let m = MatrixState { p, choi };
        for c in &m.choi {
            if c.nrows() % p != 0 || c.nrows() != c.ncols() {
                return Err(Error::InvalidState("Choi block has the wrong shape".into()));
            }
            let herm = (c - c.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if herm > 1e-9 || herm_min_eigenvalue(c) < -1e-9 {
                return Err(Error::InvalidState("Choi block is not positive semidefinite".into()));
            }
        }
        let dims: Vec<usize> = m.choi.iter().map(|c| c.nrows() / p).collect();
        let u = m.apply(&BlockMatrix::identity(&dims));
        if (u - CMat::identity(p, p)).iter().map(|z| z.norm()).fold(0.0, f64::max) > 1e-9 {
            return Err(Error::InvalidState("map is not unital".into()));
        }
        Ok(m)
    }

    /// The scalar state `a ↦ Σ tr(ρ_i a_i)`.
    pub fn from_state(w: &State) -> Self {
        MatrixState { p: 1, choi: w.rho.blocks.iter().map(|r| r.transpose()).collect() }
    }

    /// Identity map of a single `d × d` block.
    pub fn identity_map(d: usize) -> Self {
        Self::from_fn(d, |j, k| {
            let mut m = CMat::zeros(d, d);
            m[(j, k)] = ONE;
            m
        })
    }

    /// Transpose map of a single `d × d` block (positive, not completely positive).
    pub fn transpose_map(d: usize) -> Self {
        Self::from_fn(d, |j, k| {
            let mut m = CMat::zeros(d, d);
            m[(k, j)] = ONE;
            m
        })
    }

    fn from_fn<F: Fn(usize, usize) -> CMat>(d: usize, f: F) -> Self {
        let mut c = CMat::zeros(d * d, d * d);
        for j in 0..d {
            for k in 0..d {
                c.view_mut((j * d, k * d), (d, d)).copy_from(&f(j, k));
            }
        }
        MatrixState { p: d, choi: vec![c] }
    }

    /// Random unital completely positive map: Wishart Choi blocks rescaled by `N^{-1/2}`
    /// on the output side, where `N` is the image of the unit.
    pub fn random(dims: &[usize], p: usize, rng: &mut ChaCha8Rng) -> Self {
        let raw: Vec<CMat> = dims
            .iter()
            .map(|&d| {
                let g = CMat::from_fn(d * p, d * p, |_, _| C64::new(standard_normal(rng), standard_normal(rng)));
                &g * g.adjoint()
            })
            .collect();
        let m = MatrixState { p, choi: raw };
        let n = m.apply(&BlockMatrix::identity(dims));
        let eig = ((&n + n.adjoint()) * C64::new(0.5, 0.0)).symmetric_eigen();
        let inv_sqrt = {
            let d = CMat::from_diagonal(&eig.eigenvalues.map(|l| C64::new(1.0 / l.sqrt(), 0.0)));
            &eig.eigenvectors * d * eig.eigenvectors.adjoint()
        };
        let choi = m
            .choi
            .iter()
            .zip(dims)
            .map(|(c, &d)| {
                let mut k = CMat::zeros(d * p, d * p);
                for j in 0..d {
                    k.view_mut((j * p, j * p), (p, p)).copy_from(&inv_sqrt);
                }
                &k * c * &k
            })
            .collect();
        MatrixState { p, choi }
    }

    pub fn apply(&self, a: &BlockMatrix) -> CMat {
        let p = self.p;
        let mut out = CMat::zeros(p, p);
        for (c, blk) in self.choi.iter().zip(&a.blocks) {
            let d = blk.nrows();
            for j in 0..d {
                for k in 0..d {
                    let v = blk[(j, k)];
                    if v != ZERO {
                        out += c.view((j * p, k * p), (p, p)) * v;
                    }
                }
            }
        }
        out
    }
}

/// Certified interval with an optional witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HausdorffBound {
    pub lower: f64,
    pub upper: f64,
    pub witness: Option<Vec<f64>>,
    pub status: Status,
}

/// `ρ_L(ω₁, ω₂)` over hermitian elements.
pub fn rho_states(x: &LipNormedSystem, w1: &State, w2: &State, cfg: &SolverConfig) -> Result<SolveResult> {
    x.rho(w1, w2, cfg)
}

/// Whether `L(z + μe) = L(z)` for complex `μ`.
fn unit_invariant_general(spec: &SeminormSpec, unit: &[f64]) -> Result<bool> {
    let u: Vec<C64> = unit.iter().map(|&v| C64::new(v, 0.0)).collect();
    let ui: Vec<C64> = unit.iter().map(|&v| C64::new(0.0, v)).collect();
    Ok(spec.eval_general(&u, unit)? <= 1e-14 && spec.eval_general(&ui, unit)? <= 1e-14)
}

/// `sup { ‖φ(x) − ψ(x)‖ : L(x) ≤ 1 }` over general `x`.
///
/// Lower end by alternating between `x` and top singular vectors; upper end from the
/// entrywise supports, `sqrt(Σ_ab sup |Δ(x)_ab|²)`. At `p = 1` this is the scalar
/// support problem of [`rho_states`].
pub fn rho_ucp(x: &LipNormedSystem, phi: &MatrixState, psi: &MatrixState, cfg: &SolverConfig) -> Result<HausdorffBound> {
    if phi.p != psi.p {
        return Err(Error::Dimension(format!("matrix levels differ: {} vs {}", phi.p, psi.p)));
    }
    let p = phi.p;
    let sys = x.system();
    let delta: Vec<CMat> = sys.basis().iter().map(|b| phi.apply(b) - psi.apply(b)).collect();
    let n = sys.dim();
    if delta.iter().all(|d| d.iter().all(|z| z.norm() == 0.0)) {
        return Ok(HausdorffBound { lower: 0.0, upper: 0.0, witness: Some(vec![0.0; n]), status: Status::Converged });
    }
    let frame = x.frame();
    let ball = BallSpec::seminorm(x.spec().clone(), 1.0);
    let unit = sys.unit_coords();
    let scalar = p == 1 && delta.iter().all(|d| d[(0, 0)].im.abs() <= 1e-15);
    if scalar {
        let phi = Functional::herm(delta.iter().map(|d| d[(0, 0)].re).collect());
        let r = convex::support(&frame, &ball, &phi, SupportOpts { pin: Some(0) }, cfg)?;
        return Ok(HausdorffBound { lower: r.value, upper: r.upper(), witness: Some(r.certificate), status: r.status });
    }
    let pin = if unit_invariant_general(x.spec(), &unit)? { Some(0) } else { None };
    let opts = SupportOpts { pin };
    let entry_functional = |c: &dyn Fn(&CMat) -> C64| -> Functional {
        let cs: Vec<C64> = delta.iter().map(c).collect();
        Functional { re: cs.iter().map(|z| z.re).collect(), im: Some(cs.iter().map(|z| -z.im).collect()) }
    };
    let mut total = 0.0;
    let mut status = Status::Converged;
    let mut starts: Vec<Vec<C64>> = Vec::new();
    for a in 0..p {
        for b in 0..p {
            let f = entry_functional(&|d: &CMat| d[(a, b)]);
            if f.is_zero() {
                continue;
            }
            let r = convex::support(&frame, &ball, &f, opts, cfg)?;
            if r.status == Status::Unbounded {
                return Ok(HausdorffBound { lower: f64::INFINITY, upper: f64::INFINITY, witness: None, status: Status::Unbounded });
            }
            status = status.worst(r.status);
            total += r.upper() * r.upper();
            starts.push(convex::unpack(&r.certificate, n));
        }
    }
    let upper = total.sqrt();
    let image = |z: &[C64]| -> CMat {
        let mut m = CMat::zeros(p, p);
        for (d, c) in delta.iter().zip(z) {
            m += d * *c;
        }
        m
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0c9);
    let mut best = (0.0, vec![0.0; 2 * n]);
    for _ in 0..cfg.restarts.min(4) {
        let v: Vec<C64> = (0..n).map(|_| C64::new(standard_normal(&mut rng), standard_normal(&mut rng))).collect();
        starts.push(v);
    }
    for z0 in starts {
        let (_, mut u, mut v) = top_singular_pair(&image(&z0));
        let mut last = f64::NEG_INFINITY;
        for _ in 0..20 {
            let f = entry_functional(&|d: &CMat| (u.adjoint() * d * &v)[(0, 0)]);
            let r = convex::support(&frame, &ball, &f, opts, cfg)?;
            let z = convex::unpack(&r.certificate, n);
            let (s, u2, v2) = top_singular_pair(&image(&z));
            if s > best.0 {
                best = (s, r.certificate.clone());
            }
            if s <= last + 1e-12 {
                break;
            }
            last = s;
            u = u2;
            v = v2;
        }
    }
    let lower = best.0.min(upper);
    if upper - lower > 1e-4 * upper.max(1e-12) {
        status = status.worst(Status::GapOpen);
    }
    Ok(HausdorffBound { lower, upper, witness: Some(best.1), status })
}

/// Two Lip-normed systems joined by a bridge seminorm on `left ⊕ right`, with a
/// unital embedding `ι` of the left system into the right one given on hermitian
/// coordinates (`right.dim() × left.dim()`).
#[derive(Clone, Debug)]
pub struct BridgePair {
    pub left: OperatorSubsystem,
    pub right: OperatorSubsystem,
    pub left_spec: SeminormSpec,
    pub right_spec: SeminormSpec,
    pub bridge: SeminormSpec,
    pub embed: DMatrix<f64>,
}

impl BridgePair {
    pub fn frame(&self) -> Frame<'static> {
        Frame::direct_sum(&self.left, &self.right)
    }

    pub fn verify(&self, samples: usize, tol: f64, cfg: &SolverConfig) -> Result<BridgeCheck> {
        verify_bridge(&self.bridge, (&self.left, &self.left_spec), (&self.right, &self.right_spec), samples, tol, cfg)
    }

    /// Images of the coordinates of `left ⊕ right` under `(l, r) ↦ r − ι(l)`.
    pub fn defect_images(&self) -> Vec<BlockMatrix> {
        let rb = self.right.basis();
        let mut out = Vec::with_capacity(self.left.dim() + self.right.dim());
        for j in 0..self.left.dim() {
            let mut t = self.right.ambient().zeros();
            for (k, b) in rb.iter().enumerate() {
                let e = self.embed[(k, j)];
                if e != 0.0 {
                    t.axpy(C64::new(-e, 0.0), b);
                }
            }
            out.push(t);
        }
        out.extend(rb.iter().cloned());
        out
    }

    /// Functional `(l, r) ↦ f(r − ι(l))` for `f` given on the right basis.
    fn defect_functional(&self, f_right: &[f64]) -> Functional {
        let mut re: Vec<f64> = (0..self.left.dim())
            .map(|j| -(0..self.right.dim()).map(|k| self.embed[(k, j)] * f_right[k]).sum::<f64>())
            .collect();
        re.extend_from_slice(f_right);
        Functional::herm(re)
    }

    fn unit(&self) -> Vec<f64> {
        let mut u = self.left.unit_coords();
        u.extend(self.right.unit_coords());
        u
    }
}

/// Bound on `sup { ‖r − ι(l)‖ : bridge(l ⊕ r) ≤ 1 }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectBound {
    pub lower: f64,
    pub upper: f64,
    pub status: Status,
    pub method: String,
}

/// `sup { ‖r − ι(l)‖ : bridge(l ⊕ r) ≤ 1 }`.
///
/// Exact per-vertex supports on commutative targets, branch and bound over the Bloch
/// sphere on a single 2×2 block, and `1/w` when a coupling atom is `w‖r − ι(l)‖` itself.
/// A bridge without couplings is reported unbounded.
pub fn coupling_defect(pair: &BridgePair, cfg: &SolverConfig) -> Result<DefectBound> {
    let SeminormSpec::Bridge { couplings, .. } = &pair.bridge else {
        return Err(Error::InvalidSeminorm("not a bridge".into()));
    };
    let unbounded = DefectBound { lower: f64::INFINITY, upper: f64::INFINITY, status: Status::Unbounded, method: "decoupled".into() };
    if couplings.is_empty() {
        return Ok(unbounded);
    }
    let frame = pair.frame();
    let ball = BallSpec::seminorm(pair.bridge.clone(), 1.0);
    let unit = pair.unit();
    let shift_invariant = pair.bridge.eval(&unit, &unit)? <= 1e-14;
    let opts = SupportOpts { pin: shift_invariant.then_some(0) };
    let dims = pair.right.ambient().block_dims.clone();
    let rb = pair.right.basis();
    let state_fn = |w: &State| -> Functional { pair.defect_functional(&rb.iter().map(|b| w.eval(b).re).collect::<Vec<_>>()) };

    let mut lower: f64 = 0.0;
    let upper;
    let method: String;
    let mut status = Status::Converged;

    if let Some(w) = structural_weight(couplings, &pair.defect_images()) {
        upper = 1.0 / w;
        method = "coupling_atom".into();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xdef);
        let mut samples = vec![State::maximally_mixed(&dims)];
        for _ in 0..cfg.restarts.min(4) {
            samples.push(crate::seminorm::random_pure(&dims, &mut rng));
        }
        for w in samples {
            let r = convex::support(&frame, &ball, &state_fn(&w), opts, cfg)?;
            if r.status == Status::Unbounded {
                return Ok(unbounded);
            }
            lower = lower.max(r.value);
        }
    } else if pair.right.ambient().is_commutative() {
        let mut hi: f64 = 0.0;
        for k in 0..dims.len() {
            let r = convex::support(&frame, &ball, &state_fn(&State::vertex(&dims, k, 0)), opts, cfg)?;
            if r.status == Status::Unbounded {
                return Ok(unbounded);
            }
            status = status.worst(r.status);
            lower = lower.max(r.value);
            hi = hi.max(r.upper());
        }
        upper = hi;
        method = "vertices".into();
    } else if dims == [2] {
        let sig = pauli();
        let coeff: Vec<[f64; 4]> = rb
            .iter()
            .map(|b| {
                let m = &b.blocks[0];
                let t = |s: &CMat| (s * m).trace().re / 2.0;
                [m.trace().re / 2.0, t(&sig[0]), t(&sig[1]), t(&sig[2])]
            })
            .collect();
        let mut unb = false;
        let res = bnb::maximize(
            1,
            false,
            |u| {
                let f: Vec<f64> = coeff.iter().map(|c| c[0] + c[1] * u[0][0] + c[2] * u[0][1] + c[3] * u[0][2]).collect();
                let r = convex::support(&frame, &ball, &pair.defect_functional(&f), opts, cfg)?;
                if r.status == Status::Unbounded {
                    unb = true;
                    return Ok((f64::INFINITY, f64::INFINITY));
                }
                Ok((r.value, r.upper()))
            },
            cfg.bnb_rel_tol,
            cfg.bnb_max_evals,
        )?;
        if unb {
            return Ok(unbounded);
        }
        lower = res.lower;
        upper = res.upper;
        if !res.converged {
            status = Status::IterationCap;
        }
        method = "bloch_bnb".into();
    } else {
        // ‖D‖ ≤ ‖D‖_HS = sqrt(Σ_q ⟨q, D⟩²) over an orthonormal basis of the right ambient
        let full = OperatorSubsystem::full(pair.right.ambient().clone());
        let mut total = 0.0;
        for q in full.orthonormal_basis() {
            let f: Vec<f64> = rb.iter().map(|b| q.hs_inner(b).re).collect();
            let r = convex::support(&frame, &ball, &pair.defect_functional(&f), opts, cfg)?;
            if r.status == Status::Unbounded {
                return Ok(unbounded);
            }
            total += r.upper() * r.upper();
        }
        upper = total.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xdef);
        for _ in 0..cfg.restarts {
            let w = crate::seminorm::random_pure(&dims, &mut rng);
            let r = convex::support(&frame, &ball, &state_fn(&w), opts, cfg)?;
            lower = lower.max(r.value);
        }
        method = "hilbert_schmidt".into();
    }
    let upper = upper.max(lower);
    if upper - lower > cfg.bnb_rel_tol * upper.max(1e-12) && status == Status::Converged {
        status = Status::GapOpen;
    }
    Ok(DefectBound { lower, upper, status, method })
}

/// Largest `w·min_k w_k` over coupling atoms equal to `w‖r − ι(l)‖` (block-weighted).
fn structural_weight(couplings: &[SeminormSpec], images: &[BlockMatrix]) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut visit = |s: &SeminormSpec, scale: f64| {
        if let SeminormSpec::Opnorm(o) = s {
            let Weight::Finite(w) = o.weight else { return };
            let same = o.images.len() == images.len()
                && o.images.iter().zip(images).all(|(a, b)| a.same_shape(b) && a.max_abs_diff(b) <= 1e-14);
            if same && w > 0.0 {
                let m = (0..images[0].blocks.len()).map(|k| o.block_weight(k)).fold(f64::INFINITY, f64::min);
                if m > 0.0 {
                    let v = scale * w * m;
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
        }
    };
    fn walk(s: &SeminormSpec, scale: f64, f: &mut dyn FnMut(&SeminormSpec, f64)) {
        match s {
            SeminormSpec::Max { children } => children.iter().for_each(|c| walk(c, scale, f)),
            SeminormSpec::Scale { c, child } => walk(child, scale * c, f),
            other => f(other, scale),
        }
    }
    for c in couplings {
        walk(c, 1.0, &mut visit);
    }
    best
}

/// Bounds on the Hausdorff distance between the two state spaces inside the dual of
/// `left ⊕ right` under `ρ_bridge`.
///
/// The upper end is the coupling defect (every state on one side is matched through
/// `ι`). The lower end is `max_ω sup_{bridge ≤ 1} [ω(a) − λ_max(b)]` over sampled
/// extreme states `ω` of either side, a concave program per state.
pub fn hausdorff_states(pair: &BridgePair, mesh: usize, cfg: &SolverConfig) -> Result<HausdorffBound> {
    let defect = coupling_defect(pair, cfg)?;
    let mut lower: f64 = 0.0;
    let mut witness = None;
    let unit = pair.unit();
    let nl = pair.left.dim();
    let frame = pair.frame();
    for side_left in [true, false] {
        let (own, other_range) = if side_left { (&pair.left, nl..frame.dim()) } else { (&pair.right, 0..nl) };
        let dims = own.ambient().block_dims.clone();
        for w in extreme_states(&dims, mesh, cfg.seed) {
            let f = own.functional_of(&w);
            let mut c = Conic::new();
            let (coords, map) = coord_vars(&mut c, frame.dim(), Some(0), false);
            c.seminorm_le(&pair.bridge, &coords, &unit, &Aff::constant(1.0), false);
            let t = c.new_var();
            let other_basis: Vec<BlockMatrix> = other_range.clone().map(|j| frame.basis[j].clone()).collect();
            let other_coords: Vec<CAff> = other_range.clone().map(|j| coords[j].clone()).collect();
            for blk in image_matrix(&other_basis, &other_coords) {
                c.herm_le(&blk, &Aff::var(t), true);
            }
            let own_offset = if side_left { 0 } else { nl };
            let mut obj = Aff::var(t);
            for (j, fj) in f.iter().enumerate() {
                obj.axpy(-fj, &coords[own_offset + j].re);
            }
            let out = c.minimize(&obj.compact(), cfg.interior_tol, cfg.max_iter)?;
            if !matches!(out.status, ConicStatus::Solved | ConicStatus::Inaccurate) {
                continue;
            }
            let mut x: Vec<f64> = read_coords(&out.x, &map).iter().map(|z| z.re).collect();
            let g = pair.bridge.eval(&x, &unit)?;
            if g > 1.0 {
                x.iter_mut().for_each(|v| *v /= g);
            }
            let own_x = &x[own_offset..own_offset + own.dim()];
            let other_elem = frame.element(&x).blocks;
            let other_part = if side_left { &other_elem[pair.left.ambient().block_dims.len()..] } else { &other_elem[..pair.left.ambient().block_dims.len()] };
            let lmax = other_part.iter().map(|b| crate::linalg::herm_extremes(b).1).fold(f64::NEG_INFINITY, f64::max);
            let val = f.iter().zip(own_x).map(|(a, b)| a * b).sum::<f64>() - lmax;
            if val > lower {
                lower = val;
                witness = Some(w.rho.blocks.iter().flat_map(|b| b.iter().map(|z| z.re)).collect());
            }
        }
    }
    let upper = defect.upper.max(lower);
    let status = if defect.status == Status::Unbounded { Status::Unbounded } else { Status::GapOpen };
    Ok(HausdorffBound { lower, upper, witness, status })
}

/// Coupling-defect upper bounds for a sequence of bridges.
pub fn dist_upper(pairs: &[BridgePair], cfg: &SolverConfig) -> Result<Vec<DefectBound>> {
    pairs.iter().map(|p| coupling_defect(p, cfg)).collect()
}

/// `n` nearly uniform points on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            [z, r * th.cos(), r * th.sin()]
        })
        .collect()
}

/// Pure states: vertices of 1×1 blocks, a Fibonacci mesh on 2×2 blocks, basis vectors
/// plus random vectors on larger blocks.
pub fn extreme_states(dims: &[usize], mesh: usize, seed: u64) -> Vec<State> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5747);
    for (k, &d) in dims.iter().enumerate() {
        match d {
            1 => out.push(State::vertex(dims, k, 0)),
            2 => out.extend(fibonacci_sphere(mesh).into_iter().map(|u| State::bloch(dims, k, u))),
            _ => {
                out.extend((0..d).map(|i| State::vertex(dims, k, i)));
                for _ in 0..mesh {
                    let v: Vec<C64> = (0..d).map(|_| C64::new(standard_normal(&mut rng), standard_normal(&mut rng))).collect();
                    out.push(State::pure(dims, k, &v));
                }
            }
        }
    }
    out
}
