//! Lip-normed systems: kernel check, radius enclosure, Lip-norm, dual seminorm and
//! bridge verification.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spec::{SeminormSpec, Weight};
use crate::convex::bnb;
use crate::convex::conic::{Aff, CAff, Conic, ConicStatus};
use crate::convex::{self, standard_normal, BallSpec, Frame, Functional, SolveResult, SolverConfig, Status, SupportOpts};
use crate::error::{Error, Result};
use crate::linalg::{pauli, BlockMatrix, C64};
use crate::opsys::{OperatorSubsystem, State};

/// Enclosure `[lower, upper]` of the radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusBound {
    pub lower: f64,
    pub upper: f64,
    pub status: Status,
    /// Which upper bound was tightest.
    pub method: String,
}

impl RadiusBound {
    pub fn exact(r: f64) -> Self {
        RadiusBound { lower: r, upper: r, status: Status::Converged, method: "given".into() }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// A unital operator system with a Lip-seminorm and its radius.
#[derive(Clone, Debug)]
pub struct LipNormedSystem {
    system: OperatorSubsystem,
    spec: SeminormSpec,
    radius: RadiusBound,
}

impl LipNormedSystem {
    /// Validates the seminorm, checks its kernel and encloses the radius.
    pub fn new(system: OperatorSubsystem, spec: SeminormSpec, cfg: &SolverConfig) -> Result<Self> {
        spec.validate(system.dim())?;
        if !kernel_is_unit_line(&system, &spec) {
            return Err(Error::InvalidSeminorm("kernel is larger than the unit line".into()));
        }
        let radius = radius(&system, &spec, cfg)?;
        Ok(Self { system, spec, radius })
    }

    /// Uses a known radius instead of computing one.
    pub fn with_radius(system: OperatorSubsystem, spec: SeminormSpec, radius: RadiusBound) -> Result<Self> {
        spec.validate(system.dim())?;
        Ok(Self { system, spec, radius })
    }

    pub fn system(&self) -> &OperatorSubsystem {
        &self.system
    }

    pub fn spec(&self) -> &SeminormSpec {
        &self.spec
    }

    pub fn radius(&self) -> &RadiusBound {
        &self.radius
    }

    /// Upper end of the radius enclosure, used for unit balls.
    pub fn r_hi(&self) -> f64 {
        if self.radius.upper.is_finite() { self.radius.upper } else { self.radius.lower }
    }

    pub fn r_lo(&self) -> f64 {
        self.radius.lower
    }

    pub fn frame(&self) -> Frame<'_> {
        Frame::of(&self.system)
    }

    pub fn seminorm(&self, x: &[f64]) -> Result<f64> {
        self.spec.eval(x, &self.system.unit_coords())
    }

    pub fn seminorm_general(&self, z: &[C64]) -> Result<f64> {
        self.spec.eval_general(z, &self.system.unit_coords())
    }

    /// `max{‖a‖/R, L(a)}` with `R = r_hi`.
    pub fn lip_norm(&self, x: &[f64]) -> Result<f64> {
        self.lip_norm_with(x, self.r_hi())
    }

    pub fn lip_norm_with(&self, x: &[f64], r: f64) -> Result<f64> {
        Ok((self.system.order_norm(x) / r).max(self.seminorm(x)?))
    }

    /// Lip-norm of a general element (ambient operator norm).
    pub fn lip_norm_general(&self, z: &[C64]) -> Result<f64> {
        self.lip_norm_general_with(z, self.r_hi())
    }

    pub fn lip_norm_general_with(&self, z: &[C64], r: f64) -> Result<f64> {
        Ok((self.system.element_c(z).op_norm() / r).max(self.seminorm_general(z)?))
    }

    /// `{‖·‖_L ≤ t}` with `R = r_hi`.
    pub fn lip_ball(&self, t: f64) -> BallSpec {
        BallSpec::lip(self.spec.clone(), t, self.r_hi())
    }

    /// `sup { |φ(a)| : ‖a‖_L ≤ 1 }`.
    pub fn dual_seminorm(&self, phi: &Functional, cfg: &SolverConfig) -> Result<SolveResult> {
        convex::support(&self.frame(), &self.lip_ball(1.0), phi, SupportOpts::default(), cfg)
    }

    /// `ρ_L(ω₁, ω₂) = sup { ω₁(a) − ω₂(a) : L(a) ≤ 1 }`.
    pub fn rho(&self, w1: &State, w2: &State, cfg: &SolverConfig) -> Result<SolveResult> {
        rho_pair(&self.system, &self.spec, w1, w2, cfg)
    }
}

pub(crate) fn rho_pair(system: &OperatorSubsystem, spec: &SeminormSpec, w1: &State, w2: &State, cfg: &SolverConfig) -> Result<SolveResult> {
    let f1 = system.functional_of(w1);
    let f2 = system.functional_of(w2);
    let mut d: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| a - b).collect();
    // the ball is symmetric; solving for a sign-normalised functional makes ρ exactly symmetric
    let flip = d.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0);
    if flip {
        d.iter_mut().for_each(|v| *v = -*v);
    }
    let frame = Frame::of(system);
    let mut r = convex::support(&frame, &BallSpec::seminorm(spec.clone(), 1.0), &Functional::herm(d), SupportOpts { pin: Some(0) }, cfg)?;
    if flip {
        r.certificate.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(r)
}

// ---- kernels -------------------------------------------------------------------

const RANK_TOL: f64 = 1e-10;

/// Orthonormal basis of the null space of `rows` (columns).
pub fn nullspace(rows: &DMatrix<f64>) -> DMatrix<f64> {
    let n = rows.ncols();
    if rows.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // pad to at least n rows so the SVD exposes the full right basis
    let mut m = DMatrix::zeros(rows.nrows().max(n), n);
    m.view_mut((0, 0), (rows.nrows(), n)).copy_from(rows);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&i| svd.singular_values[i] <= RANK_TOL * smax.max(1.0))
        .map(|i| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&cols) }
}

/// Orthonormal basis of the column space.
pub fn column_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return m.clone();
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cols: Vec<DVector<f64>> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > RANK_TOL * smax.max(1.0))
        .map(|i| u.column(i).into_owned())
        .collect();
    if cols.is_empty() { DMatrix::zeros(m.nrows(), 0) } else { DMatrix::from_columns(&cols) }
}

fn intersect(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    if a.ncols() == 0 || b.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((0, a.ncols()), b.shape()).copy_from(&(-b));
    let ns = nullspace(&m);
    column_space(&(a * ns.rows(0, a.ncols())))
}

fn stack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    m
}

/// Real linear rows whose common zero set is the kernel of an atom on hermitian coordinates.
pub fn atom_rows(atom: &SeminormSpec, n: usize) -> DMatrix<f64> {
    match atom {
        SeminormSpec::Linmap(m) => {
            if m.weight == Weight::Finite(0.0) {
                return DMatrix::zeros(0, n);
            }
            let mut rows: Vec<&Vec<f64>> = m.rows.iter().collect();
            if let Some(im) = &m.imag {
                rows.extend(im.iter());
            }
            DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j])
        }
        SeminormSpec::Opnorm(o) => {
            if o.weight == Weight::Finite(0.0) {
                return DMatrix::zeros(0, n);
            }
            let mut rows: Vec<Vec<f64>> = Vec::new();
            for (k, blk) in o.images[0].blocks.iter().enumerate() {
                if o.block_weight(k) == 0.0 {
                    continue;
                }
                let d = blk.nrows();
                for r in 0..d {
                    for c in 0..d {
                        rows.push(o.images.iter().map(|t| t.blocks[k][(r, c)].re).collect());
                        rows.push(o.images.iter().map(|t| t.blocks[k][(r, c)].im).collect());
                    }
                }
            }
            DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j])
        }
        _ => panic!("atom_rows expects a leaf"),
    }
}

/// Kernel of a seminorm on hermitian coordinates, as orthonormal columns.
pub fn kernel_basis(spec: &SeminormSpec, unit: &[f64]) -> DMatrix<f64> {
    let n = unit.len();
    match spec {
        SeminormSpec::Linmap(_) | SeminormSpec::Opnorm(_) => nullspace(&atom_rows(spec, n)),
        SeminormSpec::Max { children } => {
            let mut k = DMatrix::identity(n, n);
            for c in children {
                k = intersect(&k, &kernel_basis(c, unit));
            }
            k
        }
        SeminormSpec::Scale { child, .. } => kernel_basis(child, unit),
        SeminormSpec::Quotient { child } => {
            let k = kernel_basis(child, unit);
            column_space(&stack(&k, &DMatrix::from_column_slice(n, 1, unit)))
        }
        SeminormSpec::Bridge { left, right, couplings, left_dim } => {
            let l = kernel_basis(left, &unit[..*left_dim]);
            let r = kernel_basis(right, &unit[*left_dim..]);
            let mut k = DMatrix::zeros(n, l.ncols() + r.ncols());
            k.view_mut((0, 0), l.shape()).copy_from(&l);
            k.view_mut((*left_dim, l.ncols()), r.shape()).copy_from(&r);
            for c in couplings {
                k = intersect(&k, &kernel_basis(c, unit));
            }
            k
        }
    }
}

/// Whether `L(a) = 0` exactly on the multiples of the unit.
pub fn kernel_is_unit_line(system: &OperatorSubsystem, spec: &SeminormSpec) -> bool {
    let unit = system.unit_coords();
    let k = kernel_basis(spec, &unit);
    if k.ncols() != 1 {
        return false;
    }
    let u = DVector::from_column_slice(&unit);
    let proj = &k * (k.transpose() * &u);
    (proj - &u).norm() <= 1e-9
}

// ---- radius --------------------------------------------------------------------

/// Largest `c` with `spec(a) ≥ c · osc(a)` that follows from the tree shape.
///
/// A quotient of a child dominating `c‖·‖` through an operator-norm atom whose images
/// are the frame basis qualifies.
pub fn osc_domination(spec: &SeminormSpec, basis: &[BlockMatrix]) -> Option<f64> {
    match spec {
        SeminormSpec::Quotient { child } => norm_domination(child, basis),
        SeminormSpec::Max { children } => children.iter().filter_map(|c| osc_domination(c, basis)).reduce(f64::max),
        SeminormSpec::Scale { c, child } => osc_domination(child, basis).map(|v| c * v),
        _ => None,
    }
}

fn norm_domination(spec: &SeminormSpec, basis: &[BlockMatrix]) -> Option<f64> {
    match spec {
        SeminormSpec::Opnorm(o) => {
            let Weight::Finite(w) = o.weight else { return None };
            let same = o.images.len() == basis.len()
                && o.images.iter().zip(basis).all(|(t, b)| t.same_shape(b) && t.max_abs_diff(b) <= 1e-14);
            if !same || w <= 0.0 {
                return None;
            }
            let nb = basis[0].blocks.len();
            let m = (0..nb).map(|k| o.block_weight(k)).fold(f64::INFINITY, f64::min);
            (m > 0.0).then_some(w * m)
        }
        SeminormSpec::Max { children } => children.iter().filter_map(|c| norm_domination(c, basis)).reduce(f64::max),
        SeminormSpec::Scale { c, child } => norm_domination(child, basis).map(|v| c * v),
        _ => None,
    }
}

/// Structured and random pairs of pure states used for radius lower bounds.
pub fn sample_state_pairs(dims: &[usize], random: usize, seed: u64) -> Vec<(State, State)> {
    let mut pairs = Vec::new();
    let ones: Vec<usize> = (0..dims.len()).filter(|&k| dims[k] == 1).collect();
    if ones.len() <= 6 {
        for (i, &a) in ones.iter().enumerate() {
            for &b in &ones[i + 1..] {
                pairs.push((State::vertex(dims, a, 0), State::vertex(dims, b, 0)));
            }
        }
    } else {
        for w in ones.windows(2) {
            pairs.push((State::vertex(dims, w[0], 0), State::vertex(dims, w[1], 0)));
        }
    }
    for (k, &d) in dims.iter().enumerate().filter(|(_, d)| **d >= 2).take(4) {
        if d == 2 {
            for axis in 0..3 {
                let mut u = [0.0; 3];
                u[axis] = 1.0;
                pairs.push((State::bloch(dims, k, u), State::bloch(dims, k, [-u[0], -u[1], -u[2]])));
            }
        } else {
            for i in 0..d {
                for j in i + 1..d {
                    pairs.push((State::vertex(dims, k, i), State::vertex(dims, k, j)));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        pairs.push((random_pure(dims, &mut rng), random_pure(dims, &mut rng)));
    }
    pairs
}

pub fn random_pure<R: Rng>(dims: &[usize], rng: &mut R) -> State {
    let k = rng.gen_range(0..dims.len());
    let v: Vec<C64> = (0..dims[k]).map(|_| C64::new(standard_normal(rng), standard_normal(rng))).collect();
    State::pure(dims, k, &v)
}

/// Radius `sup { osc(a) : L(a) ≤ 1 }` as a certified enclosure.
///
/// The lower end comes from sampled pure-state pairs. Upper ends: exact pair
/// enumeration on commutative ambients, branch and bound over the Bloch sphere for a
/// single 2×2 block, the domination bound of [`osc_domination`], and otherwise a
/// Hilbert–Schmidt relaxation.
pub fn radius(system: &OperatorSubsystem, spec: &SeminormSpec, cfg: &SolverConfig) -> Result<RadiusBound> {
    let dims = system.ambient().block_dims.clone();
    let frame = Frame::of(system);
    let ball = BallSpec::seminorm(spec.clone(), 1.0);
    let pin = SupportOpts { pin: Some(0) };
    let mut lower: f64 = 0.0;
    let mut upper = f64::INFINITY;
    let mut method = String::from("none");
    let mut status = Status::Converged;
    let check = |r: &SolveResult| -> Result<()> {
        if r.status == Status::Unbounded {
            return Err(Error::InvalidSeminorm("seminorm ball is unbounded modulo the unit".into()));
        }
        Ok(())
    };
    let commutative = system.ambient().is_commutative();
    if !commutative {
        for (w1, w2) in sample_state_pairs(&dims, cfg.restarts, cfg.seed) {
            let r = rho_pair(system, spec, &w1, &w2, cfg)?;
            check(&r)?;
            lower = lower.max(r.value / 2.0);
        }
    }
    if let Some(c) = osc_domination(spec, system.basis()) {
        upper = 1.0 / c;
        method = "domination".into();
    }
    if commutative {
        let m = dims.len();
        let mut best_hi: f64 = 0.0;
        for i in 0..m {
            for j in i + 1..m {
                let r = rho_pair(system, spec, &State::vertex(&dims, i, 0), &State::vertex(&dims, j, 0), cfg)?;
                check(&r)?;
                status = status.worst(if r.status == Status::Converged { Status::Converged } else { Status::GapOpen });
                lower = lower.max(r.value / 2.0);
                best_hi = best_hi.max(r.upper() / 2.0);
            }
        }
        if best_hi < upper {
            upper = best_hi;
            method = "vertex_pairs".into();
        }
    } else if dims == [2] {
        // osc(a) = |Bloch vector of a|, so R = max over unit u of the support of a ↦ u·v(a)
        let sig = pauli();
        let coeff: Vec<[f64; 3]> = system
            .basis()
            .iter()
            .map(|b| {
                let m = &b.blocks[0];
                let t = |s: &crate::linalg::CMat| (s * m).trace().re / 2.0;
                [t(&sig[0]), t(&sig[1]), t(&sig[2])]
            })
            .collect();
        let mut fail = None;
        let res = bnb::maximize(
            1,
            true,
            |u| {
                let phi = Functional::herm(coeff.iter().map(|c| c[0] * u[0][0] + c[1] * u[0][1] + c[2] * u[0][2]).collect());
                let r = convex::support(&frame, &ball, &phi, pin, cfg)?;
                if r.status == Status::Unbounded {
                    fail = Some(());
                }
                Ok((r.value, r.upper()))
            },
            cfg.radius_rel_tol / 2.0,
            cfg.bnb_max_evals,
        )?;
        if fail.is_some() {
            return Err(Error::InvalidSeminorm("seminorm ball is unbounded modulo the unit".into()));
        }
        lower = lower.max(res.lower);
        if res.upper < upper {
            upper = res.upper;
            method = "bloch_bnb".into();
        }
    }
    if !upper.is_finite() {
        // osc(a) ≤ ‖P⊥a‖_HS ≤ sqrt(Σ_j sup ⟨q_j, a⟩²) over an orthonormal basis of e⊥
        let q = system.orthonormal_basis();
        let mut total = 0.0;
        for qj in &q[1..] {
            let phi = Functional::herm(system.basis().iter().map(|b| qj.hs_inner(b).re).collect());
            let r = convex::support(&frame, &ball, &phi, pin, cfg)?;
            check(&r)?;
            total += r.upper() * r.upper();
        }
        upper = total.sqrt();
        method = "hilbert_schmidt".into();
    }
    let upper = upper.max(lower);
    if upper - lower > cfg.radius_rel_tol * upper {
        status = status.worst(Status::GapOpen);
    }
    Ok(RadiusBound { lower, upper, status, method })
}

// ---- bridges -------------------------------------------------------------------

/// Outcome of [`verify_bridge`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeCheck {
    pub holds: bool,
    /// Some inner minimisation could not certify either way.
    pub inconclusive: bool,
    pub max_violation: f64,
    pub samples: usize,
}

/// `inf_b bridge(a ⊕ b)` (or `inf_a bridge(a ⊕ b)` with `fixed_left = false`):
/// returns `(upper, lower, minimiser)`.
pub fn bridge_infimum(
    bridge: &SeminormSpec,
    left: &OperatorSubsystem,
    right: &OperatorSubsystem,
    fixed: &[f64],
    fixed_left: bool,
    cfg: &SolverConfig,
) -> Result<(f64, f64, Vec<f64>)> {
    let (nl, nr) = (left.dim(), right.dim());
    let mut unit = left.unit_coords();
    unit.extend(right.unit_coords());
    let mut c = Conic::new();
    let mut coords = Vec::with_capacity(nl + nr);
    let mut free = Vec::new();
    for j in 0..nl + nr {
        let on_fixed_side = (j < nl) == fixed_left;
        if on_fixed_side {
            let k = if fixed_left { j } else { j - nl };
            coords.push(CAff::real(Aff::constant(fixed[k])));
        } else {
            let v = c.new_var();
            free.push(v);
            coords.push(CAff::real(Aff::var(v)));
        }
    }
    let t = c.new_var();
    c.seminorm_le(bridge, &coords, &unit, &Aff::var(t), false);
    let out = c.minimize(&Aff::var(t), cfg.interior_tol, cfg.max_iter)?;
    if matches!(out.status, ConicStatus::Infeasible | ConicStatus::Unbounded) {
        return Err(Error::Solver("bridge infimum problem is not solvable".into()));
    }
    let other: Vec<f64> = free.iter().map(|&v| out.x[v]).collect();
    let mut full = Vec::with_capacity(nl + nr);
    if fixed_left {
        full.extend_from_slice(fixed);
        full.extend_from_slice(&other);
    } else {
        full.extend_from_slice(&other);
        full.extend_from_slice(fixed);
    }
    let upper = bridge.eval(&full, &unit)?;
    let lower = if matches!(out.status, ConicStatus::Solved | ConicStatus::Inaccurate) { out.dual.min(upper) } else { 0.0 };
    Ok((upper, lower, other))
}

/// Samples elements on both sides and checks that the bridge induces `l_left` and `l_right`.
pub fn verify_bridge(
    bridge: &SeminormSpec,
    left: (&OperatorSubsystem, &SeminormSpec),
    right: (&OperatorSubsystem, &SeminormSpec),
    samples: usize,
    tol: f64,
    cfg: &SolverConfig,
) -> Result<BridgeCheck> {
    let SeminormSpec::Bridge { left_dim, .. } = bridge else {
        return Err(Error::InvalidSeminorm("not a bridge".into()));
    };
    if *left_dim != left.0.dim() {
        return Err(Error::Dimension(format!("bridge splits at {left_dim}, left system has dimension {}", left.0.dim())));
    }
    bridge.validate(left.0.dim() + right.0.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xb1d9e);
    let mut worst: f64 = 0.0;
    let mut inconclusive = false;
    let mut holds = true;
    for side in [true, false] {
        let (sys, spec) = if side { left } else { right };
        let unit = sys.unit_coords();
        for _ in 0..samples {
            let a: Vec<f64> = (0..sys.dim()).map(|_| standard_normal(&mut rng)).collect();
            let target = spec.eval(&a, &unit)?;
            let (up, lo, _) = bridge_infimum(bridge, left.0, right.0, &a, side, cfg)?;
            let scale = target.max(1.0);
            // the bridge dominates each side, so only the excess over the target can fail
            let excess = (up - target) / scale;
            let below = (target - up) / scale;
            worst = worst.max(excess).max(below);
            if below > tol || (lo - target) / scale > tol {
                holds = false;
            } else if excess > tol {
                inconclusive = true;
            }
        }
    }
    Ok(BridgeCheck { holds: holds && !inconclusive, inconclusive: holds && inconclusive, max_violation: worst, samples: 2 * samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opsys::MatrixStar;
    use crate::seminorm::{LinearMapNorm, PNorm};

    fn c2_linf() -> (OperatorSubsystem, SeminormSpec) {
        let s = OperatorSubsystem::full(MatrixStar::new(vec![1, 1]).unwrap());
        // basis (e, δ₁): α − β = x₁
        let spec = SeminormSpec::linmap(LinearMapNorm::real(vec![vec![0.0, 0.5]], PNorm::Inf, 1.0));
        (s, spec)
    }

    #[test]
    fn kernel_of_zero_seminorm_is_everything() {
        let s = OperatorSubsystem::full(MatrixStar::new(vec![1, 1]).unwrap());
        assert!(!kernel_is_unit_line(&s, &SeminormSpec::zero(2)));
        let (s, l) = c2_linf();
        assert!(kernel_is_unit_line(&s, &l));
    }

    #[test]
    fn radius_of_two_point_space() {
        let (s, l) = c2_linf();
        let cfg = SolverConfig::default();
        let r = radius(&s, &l, &cfg).unwrap();
        assert!((r.lower - 1.0).abs() < 1e-7 && (r.upper - 1.0).abs() < 1e-7, "{r:?}");
        let r2 = radius(&s, &l.scaled(4.0), &cfg).unwrap();
        assert!((r2.upper - 0.25).abs() < 1e-7);
    }

    #[test]
    fn lip_norm_and_dual() {
        let (s, l) = c2_linf();
        let cfg = SolverConfig::default();
        let x = LipNormedSystem::new(s, l, &cfg).unwrap();
        assert!((x.lip_norm(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-7);
        // (1, −1) = −e + 2δ₁
        assert!((x.lip_norm(&[-1.0, 2.0]).unwrap() - 1.0).abs() < 1e-7);
        assert_eq!(x.lip_norm(&[0.0, 0.0]).unwrap(), 0.0);
        // δ₁ − δ₂ as a functional: (e ↦ 0, δ₁ ↦ 1)
        let d = x.dual_seminorm(&Functional::herm(vec![0.0, 1.0]), &cfg).unwrap();
        assert!((d.value - 2.0).abs() < 1e-7 && d.gap < 1e-6, "{d:?}");
    }

    #[test]
    fn nullspace_and_intersection() {
        let rows = DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 0.0]);
        let k = nullspace(&rows);
        assert_eq!(k.ncols(), 2);
        let other = nullspace(&DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]));
        let both = intersect(&k, &other);
        assert_eq!(both.ncols(), 1);
        assert!((both[(0, 0)].abs() - both[(1, 0)].abs()).abs() < 1e-12);
    }
}
