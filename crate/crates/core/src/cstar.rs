//! Defect function ε(r), Leibniz constants, limit systems of seminorm families and
//! state-space shapes.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convex::{self, max_nonconcave, project_to_ball, standard_normal, SolverConfig, Status};
use crate::error::{Error, Result};
use crate::linalg::{herm_top_eigenpair, BlockMatrix, C64};
use crate::metric::fibonacci_sphere;
use crate::opsys::{OperatorSubsystem, ProductDefect, PRODUCT_TOL};
use crate::seminorm::{atom_rows, column_space, nullspace, LipNormedSystem, PNorm, SeminormSpec, Weight};

/// Values of ε at or below this are reported as zero by [`f_leibniz_equivalence_check`];
/// it absorbs the width of the radius enclosure.
pub const EPS_ZERO: f64 = 1e-9;

/// One grid point of an ε-curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsPoint {
    pub r: f64,
    pub lower: f64,
    pub upper: f64,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsCurve {
    pub system_id: String,
    pub points: Vec<EpsPoint>,
}

impl EpsCurve {
    /// Upper ends become a running minimum, lower ends a running maximum from the right.
    pub fn envelope(&mut self) {
        let mut m = f64::INFINITY;
        for p in self.points.iter_mut() {
            m = m.min(p.upper);
            p.upper = m;
        }
        let mut m = f64::NEG_INFINITY;
        for p in self.points.iter_mut().rev() {
            m = m.max(p.lower);
            p.lower = m;
        }
        for p in self.points.iter_mut() {
            if p.upper - p.lower <= 1e-9 && p.status == Status::GapOpen {
                p.status = Status::Converged;
            }
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.r).collect()
    }

    /// Linear interpolation of both envelopes, constant beyond the grid.
    pub fn at(&self, r: f64) -> (f64, f64) {
        let pts = &self.points;
        if r <= pts[0].r {
            return (pts[0].lower, pts[0].upper);
        }
        for w in pts.windows(2) {
            if r <= w[1].r {
                let t = (r - w[0].r) / (w[1].r - w[0].r);
                return (w[0].lower + t * (w[1].lower - w[0].lower), w[0].upper + t * (w[1].upper - w[0].upper));
            }
        }
        let last = pts.last().unwrap();
        (last.lower, last.upper)
    }
}

/// Witnesses and local-search budget for ε lower bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsOptions {
    /// Complex coordinates of starting elements `x`.
    pub witnesses: Vec<Vec<C64>>,
    pub restarts: usize,
    pub steps: usize,
}

impl Default for EpsOptions {
    fn default() -> Self {
        EpsOptions { witnesses: vec![], restarts: 2, steps: 12 }
    }
}

/// Upper bound on `sup { L(y) : ‖y‖ ≤ 1 }` over the span, read off the tree.
///
/// Each coordinate functional is bounded by the trace norm of its Hilbert–Schmidt
/// representer; an operator-norm atom whose images are the frame basis contributes its
/// largest block weight directly.
pub fn norm_to_seminorm_bound(spec: &SeminormSpec, system: &OperatorSubsystem) -> f64 {
    let basis = system.basis();
    let n = basis.len();
    let gram = DMatrix::from_fn(n, n, |i, j| basis[i].hs_inner(&basis[j]).re);
    let ginv = gram.try_inverse().expect("basis Gram matrix is invertible");
    let dual: Vec<BlockMatrix> = (0..n)
        .map(|j| {
            let mut d = system.ambient().zeros();
            for (k, b) in basis.iter().enumerate() {
                d.axpy(C64::new(ginv[(j, k)], 0.0), b);
            }
            d
        })
        .collect();
    let functional = |row: &[C64]| -> f64 {
        let mut rep = system.ambient().zeros();
        for (c, d) in row.iter().zip(&dual) {
            rep.axpy(c.conj(), d);
        }
        rep.blocks.iter().map(|b| b.clone().singular_values().sum()).sum()
    };
    bound_rec(spec, basis, &functional)
}

fn bound_rec(spec: &SeminormSpec, basis: &[BlockMatrix], f: &dyn Fn(&[C64]) -> f64) -> f64 {
    match spec {
        SeminormSpec::Linmap(m) => {
            let per: Vec<f64> = (0..m.rows.len()).map(|j| f(&m.row(j))).collect();
            let norm = match m.p {
                PNorm::One => per.iter().sum(),
                PNorm::Two => per.iter().map(|v| v * v).sum::<f64>().sqrt(),
                PNorm::Inf => per.iter().copied().fold(0.0, f64::max),
            };
            match m.weight {
                Weight::Finite(w) => w * norm,
                Weight::Inf => {
                    if norm == 0.0 { 0.0 } else { f64::INFINITY }
                }
            }
        }
        SeminormSpec::Opnorm(o) => {
            let nb = o.images[0].blocks.len();
            let wmax = (0..nb).map(|k| o.block_weight(k)).fold(0.0, f64::max);
            let identity = o.images.len() == basis.len() && o.images.iter().zip(basis).all(|(a, b)| a.same_shape(b) && a.max_abs_diff(b) <= 1e-14);
            let norm = if identity {
                wmax
            } else {
                o.images
                    .iter()
                    .enumerate()
                    .map(|(j, t)| {
                        let mut e = vec![C64::new(0.0, 0.0); basis.len()];
                        e[j] = C64::new(1.0, 0.0);
                        f(&e) * (0..nb).map(|k| o.block_weight(k) * crate::linalg::op_norm_block(&t.blocks[k])).fold(0.0, f64::max)
                    })
                    .sum()
            };
            match o.weight {
                Weight::Finite(w) => w * norm,
                Weight::Inf => {
                    if norm == 0.0 { 0.0 } else { f64::INFINITY }
                }
            }
        }
        SeminormSpec::Max { children } => children.iter().map(|c| bound_rec(c, basis, f)).fold(0.0, f64::max),
        SeminormSpec::Scale { c, child } => c * bound_rec(child, basis, f),
        SeminormSpec::Quotient { child } => bound_rec(child, basis, f),
        SeminormSpec::Bridge { .. } => f64::INFINITY,
    }
}

/// `C` with `‖x*x‖_L ≤ C` whenever `‖x‖_L ≤ 1`, for systems closed under products.
pub fn leibniz_cap(x: &LipNormedSystem) -> f64 {
    let lam = norm_to_seminorm_bound(x.spec(), x.system());
    let (lo, hi) = (x.r_lo(), x.r_hi());
    (hi * hi / lo).max(lam * hi * hi)
}

/// Certified lower bound on `inf { ‖y − x*x‖ : ‖y‖_L ≤ r }` for one `x` normalised to
/// `‖x‖_L ≤ 1`.
fn eps_at(x: &LipNormedSystem, z: &[C64], r: f64, cfg: &SolverConfig) -> Result<f64> {
    let g = x.lip_norm_general_with(z, x.r_lo())?;
    if g == 0.0 || !g.is_finite() {
        return Ok(0.0);
    }
    let a = x.system().element_c(&z.iter().map(|c| c / g).collect::<Vec<_>>());
    let target = a.adjoint().mul(&a).hermitian_part();
    let p = project_to_ball(&x.frame(), &x.lip_ball(r), &target, cfg)?;
    Ok(p.lower)
}

/// `ε(r) = sup_{‖x‖_L ≤ 1} inf_{‖y‖_L ≤ r} ‖y − x*x‖` on a grid.
///
/// Lower ends come from witnesses and a local search, each value a dual bound of a
/// projection. Upper ends are `R²` in general and `(1 − r/C)₊ R²` when the span is an
/// algebra, with `C` from [`leibniz_cap`].
pub fn epsilon_curve(x: &LipNormedSystem, system_id: &str, r_grid: &[f64], opts: &EpsOptions, cfg: &SolverConfig) -> Result<EpsCurve> {
    if r_grid.is_empty() || r_grid.windows(2).any(|w| w[1] <= w[0]) || r_grid[0] <= 0.0 {
        return Err(Error::Dimension("r grid must be positive and strictly increasing".into()));
    }
    let n = x.system().dim();
    let r_hi = x.r_hi();
    let cap = x.system().is_subalgebra().then(|| leibniz_cap(x));
    let mut seeds: Vec<Vec<f64>> = opts.witnesses.iter().map(|w| convex::pack(w, true)).collect();
    let mut points = Vec::with_capacity(r_grid.len());
    for (i, &r) in r_grid.iter().enumerate() {
        let upper = match cap {
            Some(c) => (1.0 - r / c).max(0.0) * r_hi * r_hi,
            None => r_hi * r_hi,
        };
        let mut lower: f64 = 0.0;
        if upper > 0.0 {
            let best = max_nonconcave(
                |v| eps_at(x, &convex::unpack(v, n), r, cfg).unwrap_or(0.0),
                |v| x.lip_norm_general_with(&convex::unpack(v, n), x.r_lo()).unwrap_or(f64::INFINITY),
                2 * n,
                &seeds,
                opts.restarts,
                opts.steps,
                cfg.seed.wrapping_add(i as u64),
            );
            lower = best.value.max(0.0);
            if !seeds.iter().any(|s| s == &best.certificate) {
                seeds.push(best.certificate);
            }
        }
        let status = if upper - lower <= 1e-9 { Status::Converged } else { Status::GapOpen };
        points.push(EpsPoint { r, lower, upper, status });
    }
    let mut curve = EpsCurve { system_id: system_id.to_string(), points };
    curve.envelope();
    Ok(curve)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeibnizLower {
    pub value: f64,
    pub witness: Option<(Vec<C64>, Vec<C64>)>,
}

/// `‖ab‖_L / (‖a‖_L ‖b‖_L)` maximised over the given pairs and random samples; pairs
/// whose product leaves the span are skipped.
pub fn leibniz_constant_lower(x: &LipNormedSystem, pairs: &[(Vec<C64>, Vec<C64>)], samples: usize, seed: u64) -> Result<LeibnizLower> {
    let sys = x.system();
    let n = sys.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all: Vec<(Vec<C64>, Vec<C64>)> = pairs.to_vec();
    let rand_c = |rng: &mut ChaCha8Rng| -> Vec<C64> { (0..n).map(|_| C64::new(standard_normal(rng), standard_normal(rng))).collect() };
    for _ in 0..samples {
        let a = rand_c(&mut rng);
        let b = rand_c(&mut rng);
        all.push((a, b));
    }
    let mut best = LeibnizLower { value: 0.0, witness: None };
    for (a, b) in all {
        let na = x.lip_norm_general(&a)?;
        let nb = x.lip_norm_general(&b)?;
        if na == 0.0 || nb == 0.0 {
            continue;
        }
        let prod = sys.element_c(&a).mul(&sys.element_c(&b));
        let (c, resid) = sys.coords_of(&prod);
        if resid > 1e-9 * prod.hs_norm().max(1.0) {
            continue;
        }
        let ratio = x.lip_norm_general(&c)? / (na * nb);
        if ratio > best.value {
            best = LeibnizLower { value: ratio, witness: Some((a, b)) };
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LeibnizVerdict {
    /// `ε(r₀) ≤ EPS_ZERO` is certified and no sample has `‖x*x‖_L > r₀`.
    Holds { eps_upper: f64 },
    /// A sample with `‖x*x‖_L > r₀` and a certified `ε(r₀) > 0`.
    Fails { witness: Vec<C64>, square_norm: f64, eps_lower: f64 },
    Inconclusive { eps_lower: f64, eps_upper: f64, max_square_norm: f64 },
}

impl LeibnizVerdict {
    pub fn holds(&self) -> Option<bool> {
        match self {
            LeibnizVerdict::Holds { .. } => Some(true),
            LeibnizVerdict::Fails { .. } => Some(false),
            LeibnizVerdict::Inconclusive { .. } => None,
        }
    }
}

/// Tests "`ε(r₀) = 0` iff `‖x*x‖_L ≤ r₀` on the Lip-ball" on witnesses and samples.
pub fn f_leibniz_equivalence_check(x: &LipNormedSystem, r0: f64, witnesses: &[Vec<C64>], samples: usize, cfg: &SolverConfig) -> Result<LeibnizVerdict> {
    let sys = x.system();
    let n = sys.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x1e1b);
    let mut cands: Vec<Vec<C64>> = witnesses.to_vec();
    for _ in 0..samples {
        cands.push((0..n).map(|_| C64::new(standard_normal(&mut rng), standard_normal(&mut rng))).collect());
    }
    let mut worst: Option<(f64, Vec<C64>)> = None;
    for z in cands {
        let g = x.lip_norm_general(&z)?;
        if g == 0.0 {
            continue;
        }
        let z: Vec<C64> = z.iter().map(|c| c / g).collect();
        let a = sys.element_c(&z);
        let sq = a.adjoint().mul(&a).hermitian_part();
        let Ok(c) = sys.herm_coords_of(&sq, 1e-9) else { continue };
        let v = x.lip_norm(&c)?;
        if worst.as_ref().is_none_or(|w| v > w.0) {
            worst = Some((v, z));
        }
    }
    let curve = epsilon_curve(x, "check", &[r0], &EpsOptions { witnesses: vec![], restarts: 0, steps: 0 }, cfg)?;
    let eps_upper = curve.points[0].upper;
    let max_sq = worst.as_ref().map_or(0.0, |w| w.0);
    if let Some((v, z)) = worst
        && v > r0 * (1.0 + 1e-9) {
            // evaluated with the Lip-norm at R_hi, so the projection uses the same scale
            let eps_lower = eps_at(x, &z, r0, cfg)?;
            if eps_lower > 1e-9 {
                return Ok(LeibnizVerdict::Fails { witness: z, square_norm: v, eps_lower });
            }
            return Ok(LeibnizVerdict::Inconclusive { eps_lower, eps_upper, max_square_norm: v });
        }
    if eps_upper <= EPS_ZERO {
        Ok(LeibnizVerdict::Holds { eps_upper })
    } else {
        Ok(LeibnizVerdict::Inconclusive { eps_lower: 0.0, eps_upper, max_square_norm: max_sq })
    }
}

/// How a blow-up atom enters the family member at parameter `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// Scaled by `n`; finite in the limit only on its kernel.
    Linear,
    /// Switched on once `n > k`; present with fixed weight in the limit.
    StepAt(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Blowup {
    pub atom: SeminormSpec,
    pub growth: Growth,
}

/// Parameterised seminorms on a fixed system.
#[derive(Clone)]
pub struct SeminormFamily {
    pub system: OperatorSubsystem,
    pub base: SeminormSpec,
    pub blowups: Vec<Blowup>,
    /// Seminorm at parameter `n`.
    pub member: Arc<dyn Fn(f64) -> SeminormSpec + Send + Sync>,
    pub params: Vec<f64>,
    /// Elements used as ε witnesses.
    pub witnesses: Vec<Vec<C64>>,
}

impl std::fmt::Debug for SeminormFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeminormFamily").field("base", &self.base).field("blowups", &self.blowups).field("params", &self.params).finish()
    }
}

impl SeminormFamily {
    /// `max{base, n·linear atoms, step atoms with k < n}`.
    pub fn max_form(system: OperatorSubsystem, base: SeminormSpec, blowups: Vec<Blowup>, params: Vec<f64>) -> Self {
        let (b2, bl2) = (base.clone(), blowups.clone());
        let member = Arc::new(move |n: f64| {
            let mut children = vec![b2.clone()];
            for b in &bl2 {
                match b.growth {
                    Growth::Linear => children.push(b.atom.scaled(n)),
                    Growth::StepAt(k) if k < n => children.push(b.atom.clone()),
                    Growth::StepAt(_) => {}
                }
            }
            SeminormSpec::max(children)
        });
        SeminormFamily { system, base, blowups, member, params, witnesses: vec![] }
    }

    pub fn member(&self, n: f64) -> SeminormSpec {
        (self.member)(n)
    }

    /// Largest violation of `L_n ≤ L_m` (`n ≤ m`) over the parameters on random elements.
    pub fn monotonicity_violation(&self, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = self.system.unit_coords();
        let mut ps = self.params.clone();
        ps.sort_by(f64::total_cmp);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x: Vec<f64> = (0..self.system.dim()).map(|_| standard_normal(&mut rng)).collect();
            let vals: Vec<f64> = ps.iter().map(|&n| self.member(n).eval(&x, &unit)).collect::<Result<_>>()?;
            for w in vals.windows(2) {
                worst = worst.max(w[0] - w[1]);
            }
        }
        Ok(worst)
    }
}

/// Where the tail of the ε-curves is sampled.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitOptions {
    /// Smallest `r` at which the tail is read; raised to the Leibniz cap when that cap does
    /// not grow along the family.
    pub r_tail: f64,
    /// Parameter of the member used; defaults to the largest in the family.
    pub n_tail: Option<f64>,
    pub eps: EpsOptions,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions { r_tail: 256.0, n_tail: None, eps: EpsOptions::default() }
    }
}

#[derive(Clone, Debug)]
pub struct LimitVerdict {
    pub limit_subspace: OperatorSubsystem,
    /// Columns: coordinates of the limit basis in the family's system.
    pub embedding: DMatrix<f64>,
    pub limit_spec: SeminormSpec,
    pub inherited: bool,
    pub defect: ProductDefect,
    pub eps_tail: f64,
    pub eps_tail_lower: f64,
    pub r_tail: f64,
    pub n_tail: f64,
    pub warnings: Vec<String>,
}

/// Kernel of the linearly growing atoms, the limit seminorm on it, and the product test.
pub fn limit_system(f: &SeminormFamily, opts: &LimitOptions, cfg: &SolverConfig) -> Result<LimitVerdict> {
    let sys = &f.system;
    let n = sys.dim();
    let unit = DMatrix::from_column_slice(n, 1, &sys.unit_coords());
    let mut warnings = Vec::new();
    let linear: Vec<&Blowup> = f.blowups.iter().filter(|b| b.growth == Growth::Linear).collect();
    let kernel = if linear.is_empty() {
        DMatrix::identity(n, n)
    } else {
        let mut rows = DMatrix::zeros(0, n);
        for b in &linear {
            let r = atom_rows(&b.atom, n);
            let old = rows.nrows();
            rows = rows.insert_rows(old, r.nrows(), 0.0);
            rows.view_mut((old, 0), (r.nrows(), n)).copy_from(&r);
        }
        let sv = rows.clone().singular_values();
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let smin = sv.iter().copied().filter(|s| *s > 1e-10 * smax.max(1.0)).fold(f64::INFINITY, f64::min);
        if smax / smin > 1e12 {
            warnings.push(format!("blow-up maps are ill-conditioned (condition number {:.3e})", smax / smin));
        }
        if (&rows * &unit).amax() > 1e-10 {
            return Err(Error::InvalidSeminorm("a blow-up atom does not vanish on the unit".into()));
        }
        nullspace(&rows)
    };
    // unit first, then an orthonormal complement inside the kernel
    let uu = &unit / unit.norm();
    let comp = &kernel - &uu * (uu.transpose() * &kernel);
    let comp = column_space(&comp);
    let mut embedding = DMatrix::zeros(n, 1 + comp.ncols());
    embedding.set_column(0, &unit.column(0));
    for j in 0..comp.ncols() {
        embedding.set_column(j + 1, &comp.column(j));
    }
    let cols: Vec<Vec<f64>> = (0..embedding.ncols()).map(|j| embedding.column(j).iter().copied().collect()).collect();
    let limit_subspace = sys.subsystem(&cols)?;
    let mut children = vec![f.base.clone()];
    children.extend(f.blowups.iter().filter(|b| matches!(b.growth, Growth::StepAt(_))).map(|b| b.atom.clone()));
    let limit_spec = if children.len() == 1 { children.pop().unwrap() } else { SeminormSpec::max(children) }.pullback(&embedding)?;
    let defect = limit_subspace.product_defect();
    let inherited = defect.defect <= PRODUCT_TOL;
    let n_tail = opts.n_tail.unwrap_or_else(|| f.params.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let member = LipNormedSystem::new(sys.clone(), f.member(n_tail), cfg)?;
    let mut eps = opts.eps.clone();
    eps.witnesses.extend(f.witnesses.iter().cloned());
    // ε vanishes beyond the Leibniz cap; read the tail there only if the cap stays put further out
    let mut r_tail = opts.r_tail;
    if sys.is_subalgebra() {
        let cap = leibniz_cap(&member);
        let further = leibniz_cap(&LipNormedSystem::new(sys.clone(), f.member(2.0 * n_tail), cfg)?);
        if cap.is_finite() && (further - cap).abs() <= 1e-9 * cap {
            r_tail = r_tail.max(cap);
        }
    }
    let curve = epsilon_curve(&member, "tail", &[r_tail], &eps, cfg)?;
    Ok(LimitVerdict {
        limit_subspace,
        embedding,
        limit_spec,
        inherited,
        defect,
        eps_tail: curve.points[0].upper,
        eps_tail_lower: curve.points[0].lower,
        r_tail,
        n_tail,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsDistance {
    /// `sup_r |mid₁ − mid₂|`.
    pub value: f64,
    /// Largest combined half-width.
    pub radius: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Sup-distance between two ε-curves, resampled onto the union grid if needed.
pub fn eps_distance(c1: &EpsCurve, c2: &EpsCurve) -> EpsDistance {
    let mut grid = c1.grid();
    if grid != c2.grid() {
        grid.extend(c2.grid());
        grid.sort_by(f64::total_cmp);
        grid.dedup();
    }
    let mut out = EpsDistance { value: 0.0, radius: 0.0, lower: 0.0, upper: 0.0 };
    for r in grid {
        let (l1, u1) = c1.at(r);
        let (l2, u2) = c2.at(r);
        out.value = out.value.max((0.5 * (l1 + u1) - 0.5 * (l2 + u2)).abs());
        out.radius = out.radius.max(0.5 * (u1 - l1) + 0.5 * (u2 - l2));
        out.lower = out.lower.max((l1 - u2).max(l2 - u1)).max(0.0);
        out.upper = out.upper.max((u1 - l2).max(u2 - l1));
    }
    out
}

/// Classification of a projected state space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Segment { vertices: Vec<Vec<f64>> },
    Polytope { vertices: Vec<Vec<f64>> },
    Disc { centre: Vec<f64>, radius: f64 },
    Smooth,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub directions: Vec<Vec<f64>>,
    pub support: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub shape: Shape,
}

/// Support function of `{ (ω(h₁), …, ω(h_m)) : ω a state }` over a mesh of directions.
///
/// The `hᵢ` default to an orthonormal basis of the complement of the unit. Support
/// points are read off top eigenvectors; few distinct points mean a polytope, a support
/// function of the form `c·u + ρ` a disc.
pub fn state_space_shape(s: &OperatorSubsystem, directions: usize, coords: Option<&[BlockMatrix]>) -> Result<ShapeReport> {
    let h: Vec<BlockMatrix> = match coords {
        Some(c) => c.to_vec(),
        None => s.orthonormal_basis()[1..].to_vec(),
    };
    let m = h.len();
    if m == 0 || h.iter().any(|x| !x.is_hermitian(1e-12)) {
        return Err(Error::Dimension("projection needs at least one hermitian coordinate".into()));
    }
    let dirs: Vec<Vec<f64>> = match m {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..directions)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / directions as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => fibonacci_sphere(directions).into_iter().map(|p| p.to_vec()).collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(directions as u64);
            (0..directions)
                .map(|_| {
                    let v: Vec<f64> = (0..m).map(|_| standard_normal(&mut rng)).collect();
                    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    v.iter().map(|a| a / nv).collect()
                })
                .collect()
        }
    };
    let mut support = Vec::with_capacity(dirs.len());
    let mut points = Vec::with_capacity(dirs.len());
    for u in &dirs {
        let mut a = s.ambient().zeros();
        for (c, hi) in u.iter().zip(&h) {
            a.axpy(C64::new(*c, 0.0), hi);
        }
        let mut best = (f64::NEG_INFINITY, 0usize, None);
        for (k, blk) in a.blocks.iter().enumerate() {
            let (l, v) = herm_top_eigenpair(blk);
            if l > best.0 + 1e-13 {
                best = (l, k, Some(v));
            }
        }
        let (l, k, v) = best;
        let v = v.expect("at least one block");
        let pt: Vec<f64> = h.iter().map(|hi| (v.adjoint() * &hi.blocks[k] * &v)[(0, 0)].re).collect();
        support.push(l);
        points.push(pt);
    }
    let mut distinct: Vec<Vec<f64>> = Vec::new();
    for p in &points {
        if !distinct.iter().any(|q| q.iter().zip(p).all(|(a, b)| (a - b).abs() <= 1e-6)) {
            distinct.push(p.clone());
        }
    }
    let shape = if m == 1 {
        Shape::Segment { vertices: distinct }
    } else if distinct.len() * 4 <= dirs.len() {
        Shape::Polytope { vertices: distinct }
    } else {
        // fit h(u) = c·u + ρ
        let a = DMatrix::from_fn(dirs.len(), m + 1, |i, j| if j < m { dirs[i][j] } else { 1.0 });
        let b = nalgebra::DVector::from_column_slice(&support);
        let sol = a.clone().svd(true, true).solve(&b, 1e-14).map_err(|e| Error::Solver(e.to_string()))?;
        let resid = (&a * &sol - &b).amax();
        if resid <= 1e-6 {
            Shape::Disc { centre: sol.rows(0, m).iter().copied().collect(), radius: sol[m] }
        } else if distinct.len() * 2 >= dirs.len() {
            Shape::Smooth
        } else {
            Shape::Inconclusive
        }
    };
    Ok(ShapeReport { directions: dirs, support, points, shape })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opsys::MatrixStar;
    use crate::seminorm::LinearMapNorm;

    fn c2_inf() -> LipNormedSystem {
        let sys = OperatorSubsystem::full(MatrixStar::new(vec![1, 1]).unwrap());
        let spec = SeminormSpec::linmap(LinearMapNorm::real(vec![vec![0.0, 0.5]], PNorm::Inf, 1.0));
        LipNormedSystem::new(sys, spec, &SolverConfig::default()).unwrap()
    }

    #[test]
    fn envelope_is_monotone_and_idempotent() {
        let pts = [(1.0, 0.1, 0.5), (2.0, 0.3, 0.7), (3.0, 0.0, 0.2), (4.0, 0.05, 0.4)];
        let mut c = EpsCurve {
            system_id: "t".into(),
            points: pts.iter().map(|&(r, lower, upper)| EpsPoint { r, lower, upper, status: Status::GapOpen }).collect(),
        };
        c.envelope();
        let up: Vec<f64> = c.points.iter().map(|p| p.upper).collect();
        let lo: Vec<f64> = c.points.iter().map(|p| p.lower).collect();
        assert_eq!(up, vec![0.5, 0.5, 0.2, 0.2]);
        assert_eq!(lo, vec![0.3, 0.3, 0.05, 0.05]);
        let before = c.clone();
        c.envelope();
        assert_eq!(c, before);
        assert_eq!(eps_distance(&c, &before).value, 0.0);
    }

    #[test]
    fn abelian_two_point_curve_vanishes_from_one() {
        let x = c2_inf();
        assert!((norm_to_seminorm_bound(x.spec(), x.system()) - 1.0).abs() < 1e-12);
        let c = epsilon_curve(&x, "c2", &[0.5, 1.0, 2.0], &EpsOptions::default(), &SolverConfig::default()).unwrap();
        assert!(c.points[1].upper <= EPS_ZERO && c.points[2].upper <= EPS_ZERO, "{c:?}");
        assert!(c.points[0].lower > 0.0, "{c:?}");
        let v = f_leibniz_equivalence_check(&x, 1.0, &[], 30, &SolverConfig::default()).unwrap();
        assert_eq!(v.holds(), Some(true), "{v:?}");
    }

    #[test]
    fn abelian_two_point_leibniz_ratio() {
        let x = c2_inf();
        // a = b = (1, −1): coordinates (−1, 2) in the basis (e, δ₁)
        let a = vec![C64::new(-1.0, 0.0), C64::new(2.0, 0.0)];
        let l = leibniz_constant_lower(&x, &[(a.clone(), a)], 20, 1).unwrap();
        assert!(l.value >= 1.0 - 1e-12);
    }

    #[test]
    fn shapes_of_small_systems() {
        let c3 = OperatorSubsystem::full(MatrixStar::new(vec![1, 1, 1]).unwrap());
        let r = state_space_shape(&c3, 64, None).unwrap();
        match r.shape {
            Shape::Polytope { vertices } => assert_eq!(vertices.len(), 3),
            other => panic!("{other:?}"),
        }
        let c2 = OperatorSubsystem::full(MatrixStar::new(vec![1, 1]).unwrap());
        match state_space_shape(&c2, 64, None).unwrap().shape {
            Shape::Segment { vertices } => assert_eq!(vertices.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
