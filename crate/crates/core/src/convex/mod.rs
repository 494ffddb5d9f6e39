//! Certified convex solvers over seminorm balls.
//!
//! [`support`] and [`project_to_ball`] pose conic programs (see [`conic`]) and then
//! repair the returned point so that it is exactly feasible under direct evaluation;
//! the reported value is attained by that point and the dual objective bounds the
//! optimum from the other side. [`oracle`] enumerates polytope vertices and
//! [`bnb`] maximises convex functions over products of Bloch balls.

pub mod bnb;
pub mod conic;
pub mod oracle;

use std::borrow::Cow;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{BlockMatrix, C64};
use crate::opsys::OperatorSubsystem;
use crate::seminorm::{PNorm, SeminormSpec, Weight};
use conic::{image_matrix, Aff, CAff, Conic, ConicStatus};

/// Tolerances, caps and the random seed shared by every solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub support_tol: f64,
    pub projection_tol: f64,
    pub interior_tol: f64,
    pub max_iter: u32,
    pub seed: u64,
    pub restarts: usize,
    pub ascent_steps: usize,
    pub bnb_rel_tol: f64,
    pub bnb_max_evals: usize,
    pub radius_rel_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            support_tol: 1e-8,
            projection_tol: 1e-7,
            interior_tol: 1e-10,
            max_iter: 200,
            seed: 0x5eed_2024,
            restarts: 8,
            ascent_steps: 40,
            bnb_rel_tol: 2e-5,
            bnb_max_evals: 6000,
            radius_rel_tol: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    GapOpen,
    IterationCap,
    Unbounded,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::GapOpen => "gap_open",
            Status::IterationCap => "iteration_cap",
            Status::Unbounded => "unbounded",
        }
    }

    /// The weaker of two statuses.
    pub fn worst(self, other: Status) -> Status {
        let rank = |s: Status| match s {
            Status::Converged => 0,
            Status::GapOpen => 1,
            Status::IterationCap => 2,
            Status::Unbounded => 3,
        };
        if rank(other) > rank(self) { other } else { self }
    }
}

/// Optimisation output: `value` is attained by `certificate`, `value + gap` bounds the
/// optimum (for maximisation; mirrored for minimisation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub value: f64,
    pub certificate: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
    pub status: Status,
}

impl SolveResult {
    pub fn upper(&self) -> f64 {
        self.value + self.gap
    }

    fn unbounded() -> Self {
        SolveResult { value: f64::INFINITY, certificate: vec![], gap: 0.0, iterations: 0, status: Status::Unbounded }
    }
}

/// `{ spec ≤ radius } ∩ { ‖·‖ ≤ norm_cap }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub spec: Option<SeminormSpec>,
    pub radius: f64,
    pub norm_cap: Option<f64>,
}

impl BallSpec {
    pub fn seminorm(spec: SeminormSpec, radius: f64) -> Self {
        Self { spec: Some(spec), radius, norm_cap: None }
    }

    pub fn lip(spec: SeminormSpec, radius: f64, r_norm: f64) -> Self {
        Self { spec: Some(spec), radius, norm_cap: Some(radius * r_norm) }
    }

    pub fn norm(cap: f64) -> Self {
        Self { spec: None, radius: 1.0, norm_cap: Some(cap) }
    }
}

/// Coordinates in a frame: images of coordinate vectors in the ambient algebra plus
/// the coordinates of the unit.
#[derive(Clone, Debug)]
pub struct Frame<'a> {
    pub basis: Cow<'a, [BlockMatrix]>,
    pub unit: Cow<'a, [f64]>,
}

impl<'a> Frame<'a> {
    pub fn of(system: &'a OperatorSubsystem) -> Frame<'a> {
        Frame { basis: Cow::Borrowed(system.basis()), unit: Cow::Owned(system.unit_coords()) }
    }

    /// `X ⊕ Y` with concatenated coordinates and ambient blocks.
    pub fn direct_sum(x: &OperatorSubsystem, y: &OperatorSubsystem) -> Frame<'static> {
        let zx = x.ambient().zeros();
        let zy = y.ambient().zeros();
        let mut basis = Vec::with_capacity(x.dim() + y.dim());
        for b in x.basis() {
            basis.push(BlockMatrix::from_blocks(b.blocks.iter().chain(&zy.blocks).cloned().collect()));
        }
        for b in y.basis() {
            basis.push(BlockMatrix::from_blocks(zx.blocks.iter().chain(&b.blocks).cloned().collect()));
        }
        let mut unit = x.unit_coords();
        unit.extend(y.unit_coords());
        Frame { basis: Cow::Owned(basis), unit: Cow::Owned(unit) }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn element(&self, x: &[f64]) -> BlockMatrix {
        let mut out = BlockMatrix::zeros(&self.basis[0].dims());
        for (c, b) in x.iter().zip(self.basis.iter()) {
            if *c != 0.0 {
                out.axpy(C64::new(*c, 0.0), b);
            }
        }
        out
    }

    pub fn element_c(&self, z: &[C64]) -> BlockMatrix {
        let mut out = BlockMatrix::zeros(&self.basis[0].dims());
        for (c, b) in z.iter().zip(self.basis.iter()) {
            if c.re != 0.0 || c.im != 0.0 {
                out.axpy(*c, b);
            }
        }
        out
    }

    /// `max{spec/radius, ‖·‖/cap}` at general coordinates.
    pub fn gauge(&self, ball: &BallSpec, z: &[C64]) -> Result<f64> {
        let mut g: f64 = 0.0;
        if let Some(spec) = &ball.spec {
            g = g.max(spec.eval_general(z, &self.unit)? / ball.radius);
        }
        if let Some(cap) = ball.norm_cap {
            g = g.max(self.element_c(z).op_norm() / cap);
        }
        Ok(g)
    }

    pub fn gauge_h(&self, ball: &BallSpec, x: &[f64]) -> Result<f64> {
        let mut g: f64 = 0.0;
        if let Some(spec) = &ball.spec {
            g = g.max(spec.eval(x, &self.unit)? / ball.radius);
        }
        if let Some(cap) = ball.norm_cap {
            g = g.max(self.element(x).op_norm() / cap);
        }
        Ok(g)
    }
}

/// Real-linear functional `φ(z) = Σ reⱼ·Re zⱼ + imⱼ·Im zⱼ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

impl Functional {
    pub fn herm(re: Vec<f64>) -> Self {
        Self { re, im: None }
    }

    pub fn is_general(&self) -> bool {
        self.im.is_some()
    }

    pub fn apply(&self, z: &[C64]) -> f64 {
        let mut v: f64 = self.re.iter().zip(z).map(|(a, c)| a * c.re).sum();
        if let Some(im) = &self.im {
            v += im.iter().zip(z).map(|(a, c)| a * c.im).sum::<f64>();
        }
        v
    }

    pub fn apply_h(&self, x: &[f64]) -> f64 {
        self.re.iter().zip(x).map(|(a, c)| a * c).sum()
    }

    pub fn neg(&self) -> Self {
        Functional { re: self.re.iter().map(|v| -v).collect(), im: self.im.as_ref().map(|m| m.iter().map(|v| -v).collect()) }
    }

    pub fn is_zero(&self) -> bool {
        self.re.iter().all(|v| *v == 0.0) && self.im.as_ref().is_none_or(|m| m.iter().all(|v| *v == 0.0))
    }
}

/// Coordinates packed as `[re…, im…]` (general) or `[re…]` (hermitian).
pub fn pack(z: &[C64], general: bool) -> Vec<f64> {
    let mut v: Vec<f64> = z.iter().map(|c| c.re).collect();
    if general {
        v.extend(z.iter().map(|c| c.im));
    }
    v
}

pub fn unpack(v: &[f64], n: usize) -> Vec<C64> {
    (0..n).map(|i| C64::new(v[i], if v.len() >= 2 * n { v[n + i] } else { 0.0 })).collect()
}

/// Options for [`support`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SupportOpts {
    /// Coordinate fixed at zero (valid when the ball and the functional are invariant
    /// under shifts by the unit and this coordinate carries the unit).
    pub pin: Option<usize>,
}

/// Variables for the coordinates of a frame; pinned coordinates are the constant 0.
pub fn coord_vars(c: &mut Conic, n: usize, pin: Option<usize>, general: bool) -> (Vec<CAff>, Vec<Option<(usize, Option<usize>)>>) {
    let mut coords = Vec::with_capacity(n);
    let mut map = Vec::with_capacity(n);
    for j in 0..n {
        if Some(j) == pin {
            coords.push(CAff::default());
            map.push(None);
            continue;
        }
        let r = c.new_var();
        let i = general.then(|| c.new_var());
        coords.push(CAff { re: Aff::var(r), im: i.map(Aff::var).unwrap_or_default() });
        map.push(Some((r, i)));
    }
    (coords, map)
}

pub fn read_coords(x: &[f64], map: &[Option<(usize, Option<usize>)>]) -> Vec<C64> {
    map.iter()
        .map(|m| match m {
            None => C64::new(0.0, 0.0),
            Some((r, i)) => C64::new(x[*r], i.map_or(0.0, |i| x[i])),
        })
        .collect()
}

/// Adds `z ∈ ball` to a conic problem.
pub fn add_ball(c: &mut Conic, frame: &Frame, ball: &BallSpec, coords: &[CAff], general: bool) {
    if let Some(spec) = &ball.spec {
        c.seminorm_le(spec, coords, &frame.unit, &Aff::constant(ball.radius), general);
    }
    if let Some(cap) = ball.norm_cap {
        let img = image_matrix(&frame.basis, coords);
        for blk in &img {
            c.op_norm_le(blk, &Aff::constant(cap), !general);
        }
    }
}

/// `sup { φ(a) : a ∈ ball }` with a feasible certificate and a dual upper bound.
///
/// General functionals range over general (complex-coordinate) elements.
pub fn support(frame: &Frame, ball: &BallSpec, phi: &Functional, opts: SupportOpts, cfg: &SolverConfig) -> Result<SolveResult> {
    let n = frame.dim();
    if phi.re.len() != n {
        return Err(Error::Dimension(format!("functional has {} entries, frame has {n}", phi.re.len())));
    }
    let general = phi.is_general();
    if phi.is_zero() {
        return Ok(SolveResult { value: 0.0, certificate: vec![0.0; if general { 2 * n } else { n }], gap: 0.0, iterations: 0, status: Status::Converged });
    }
    if !general
        && let Some(r) = ellipsoid_support(frame, ball, phi, opts)? {
            return Ok(r);
        }
    let mut c = Conic::new();
    let (coords, map) = coord_vars(&mut c, n, opts.pin, general);
    add_ball(&mut c, frame, ball, &coords, general);
    let mut obj = Aff::default();
    for (j, m) in map.iter().enumerate() {
        if let Some((r, i)) = m {
            obj.terms.push((*r, -phi.re[j]));
            if let (Some(i), Some(im)) = (i, &phi.im) {
                obj.terms.push((*i, -im[j]));
            }
        }
    }
    let out = c.minimize(&obj.compact(), cfg.interior_tol, cfg.max_iter)?;
    if out.status == ConicStatus::Unbounded {
        return Ok(SolveResult::unbounded());
    }
    if out.status == ConicStatus::Infeasible {
        return Err(Error::Solver("support problem reported infeasible".into()));
    }
    let mut z = read_coords(&out.x, &map);
    let g = frame.gauge(ball, &z)?;
    if g > 1.0 {
        z.iter_mut().for_each(|v| *v /= g);
    }
    let value = phi.apply(&z);
    let upper = (-out.dual).max(value);
    let gap = upper - value;
    let status = if out.status == ConicStatus::Failed {
        Status::IterationCap
    } else if gap <= cfg.support_tol * value.abs().max(1.0) {
        Status::Converged
    } else {
        Status::GapOpen
    };
    Ok(SolveResult { value, certificate: pack(&z, general), gap, iterations: out.iterations as usize, status })
}

/// Closed form for `{ w‖Mx‖₂ ≤ r }` (optionally under one quotient) without a norm cap.
fn ellipsoid_support(frame: &Frame, ball: &BallSpec, phi: &Functional, opts: SupportOpts) -> Result<Option<SolveResult>> {
    if ball.norm_cap.is_some() {
        return Ok(None);
    }
    let Some(spec) = &ball.spec else { return Ok(None) };
    let (inner, quotient) = match spec {
        SeminormSpec::Quotient { child } => (child.as_ref(), true),
        s => (s, false),
    };
    let SeminormSpec::Linmap(m) = inner else { return Ok(None) };
    let (PNorm::Two, Weight::Finite(w)) = (m.p, m.weight) else { return Ok(None) };
    if w <= 0.0 {
        return Ok(None);
    }
    let n = frame.dim();
    // a quotient node is harmless when φ kills the unit: substitute y = x − λe over all coordinates
    let phi_unit = phi.apply_h(&frame.unit);
    let free: Vec<usize> = if quotient {
        if phi_unit.abs() > 1e-14 {
            return Ok(None);
        }
        (0..n).collect()
    } else {
        (0..n).filter(|j| Some(*j) != opts.pin).collect()
    };
    let rows = m.rows.len();
    let has_im = m.imag.is_some();
    let mrows = if has_im { 2 * rows } else { rows };
    let mat = DMatrix::from_fn(mrows, free.len(), |i, k| {
        let j = free[k];
        if i < rows { m.rows[i][j] } else { m.imag.as_ref().unwrap()[i - rows][j] }
    });
    let f = nalgebra::DVector::from_iterator(free.len(), free.iter().map(|&j| phi.re[j]));
    let svd = mat.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = 1e-12 * smax.max(1e-300);
    let smin = svd.singular_values.iter().copied().filter(|s| *s > cut).fold(f64::INFINITY, f64::min);
    let pinv = svd.pseudo_inverse(cut).map_err(|e| Error::Solver(e.to_string()))?;
    // φ must lie in the row space, otherwise the ball is unbounded in its direction
    let proj = mat.transpose() * (pinv.transpose() * &f);
    let tol = (1e-10 * (smax / smin).max(1.0)).min(1e-4) * f.norm().max(1.0);
    if (&proj - &f).norm() > tol {
        return Ok(Some(SolveResult::unbounded()));
    }
    let v = pinv.transpose() * &f;
    let vn = v.norm();
    let scale = ball.radius / w;
    let y = &pinv * (&v * (scale / vn));
    let mut x = vec![0.0; n];
    for (k, &j) in free.iter().enumerate() {
        x[j] = y[k];
    }
    let g = frame.gauge_h(ball, &x)?;
    if g > 1.0 {
        x.iter_mut().for_each(|v| *v /= g);
    }
    let value = phi.apply_h(&x);
    let exact = scale * vn;
    let gap = (exact - value).max(0.0);
    Ok(Some(SolveResult { value, certificate: x, gap, iterations: 0, status: Status::Converged }))
}

/// Result of [`project_to_ball`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// Hermitian coordinates of the feasible minimiser.
    pub y: Vec<f64>,
    /// Exact distance attained by `y` (an upper bound on the true distance).
    pub dist: f64,
    /// Dual lower bound on the distance.
    pub lower: f64,
    pub status: Status,
}

/// Operator-norm distance from a hermitian ambient element to a ball of hermitian elements.
pub fn project_to_ball(frame: &Frame, ball: &BallSpec, target: &BlockMatrix, cfg: &SolverConfig) -> Result<Projection> {
    let n = frame.dim();
    let mut c = Conic::new();
    let (coords, map) = coord_vars(&mut c, n, None, false);
    add_ball(&mut c, frame, ball, &coords, false);
    let t = c.new_var();
    let mut img = image_matrix(&frame.basis, &coords);
    for (blk, tb) in img.iter_mut().zip(&target.blocks) {
        for i in 0..blk.len() {
            for j in 0..blk.len() {
                blk[i][j].re.c -= tb[(i, j)].re;
                blk[i][j].im.c -= tb[(i, j)].im;
            }
        }
        c.op_norm_le(blk, &Aff::var(t), true);
    }
    let out = c.minimize(&Aff::var(t), cfg.interior_tol, cfg.max_iter)?;
    let mut x: Vec<f64> = read_coords(&out.x, &map).iter().map(|z| z.re).collect();
    if matches!(out.status, ConicStatus::Infeasible | ConicStatus::Unbounded) || x.iter().any(|v| !v.is_finite()) {
        x = vec![0.0; n];
    }
    let g = frame.gauge_h(ball, &x)?;
    if g > 1.0 {
        x.iter_mut().for_each(|v| *v /= g);
    }
    let zero_dist = target.op_norm();
    let mut dist = frame.element(&x).sub(target).op_norm();
    if zero_dist < dist {
        dist = zero_dist;
        x = vec![0.0; n];
    }
    let lower = if matches!(out.status, ConicStatus::Solved | ConicStatus::Inaccurate) { out.dual.clamp(0.0, dist) } else { 0.0 };
    let status = if out.status == ConicStatus::Failed {
        Status::IterationCap
    } else if dist - lower <= cfg.projection_tol * dist.max(1.0) {
        Status::Converged
    } else {
        Status::GapOpen
    };
    Ok(Projection { y: x, dist, lower, status })
}

/// Multistart local ascent of an arbitrary objective over a gauge ball.
///
/// Candidates are kept inside `{gauge ≤ 1}` by radial rescaling. The result is a lower
/// bound only (`gap = ∞`, status `gap_open`).
pub fn max_nonconcave<F, G>(objective: F, gauge: G, dim: usize, seeds: &[Vec<f64>], restarts: usize, steps: usize, seed: u64) -> SolveResult
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normalise = |mut v: Vec<f64>| -> Option<Vec<f64>> {
        let g = gauge(&v);
        if !g.is_finite() {
            return None;
        }
        if g > 1.0 {
            v.iter_mut().for_each(|x| *x /= g);
        }
        Some(v)
    };
    let mut starts: Vec<Vec<f64>> = seeds.iter().filter_map(|s| normalise(s.clone())).collect();
    for _ in 0..restarts {
        let v: Vec<f64> = (0..dim).map(|_| standard_normal(&mut rng)).collect();
        let g = gauge(&v);
        if g > 0.0 && g.is_finite() {
            starts.push(v.iter().map(|x| x / g).collect());
        }
    }
    let mut best = SolveResult { value: f64::NEG_INFINITY, certificate: vec![0.0; dim], gap: f64::INFINITY, iterations: 0, status: Status::GapOpen };
    let mut evals = 0;
    for s in starts {
        let mut x = s;
        let mut fx = objective(&x);
        evals += 1;
        let mut sigma = 0.3 * x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
        for _ in 0..steps {
            let prop: Vec<f64> = x.iter().map(|v| v + sigma * standard_normal(&mut rng)).collect();
            let Some(prop) = normalise(prop) else { continue };
            let fp = objective(&prop);
            evals += 1;
            if fp > fx {
                x = prop;
                fx = fp;
                sigma *= 1.2;
            } else {
                sigma *= 0.75;
            }
        }
        let better = fx > best.value + 1e-15
            || ((fx - best.value).abs() <= 1e-15 && lex_less(&x, &best.certificate));
        if better {
            best.value = fx;
            best.certificate = x;
        }
    }
    best.iterations = evals;
    best
}

pub(crate) fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[cfg(test)]
mod tests;
