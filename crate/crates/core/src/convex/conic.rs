//! Lifting of seminorm balls and operator-norm constraints into conic form.
//!
//! Constraints are collected as affine expressions that must lie in a cone, then
//! handed to Clarabel as `A x + s = b`, `s ∈ K`.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::error::{Error, Result};
use crate::linalg::BlockMatrix;
use crate::seminorm::{LinearMapNorm, OpNormAtom, PNorm, SeminormSpec, Weight};

/// `Σ cᵢ xᵢ + c₀`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Aff {
    pub terms: Vec<(usize, f64)>,
    pub c: f64,
}

impl Aff {
    pub fn var(i: usize) -> Self {
        Aff { terms: vec![(i, 1.0)], c: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        Aff { terms: vec![], c }
    }

    pub fn is_zero(&self) -> bool {
        self.c == 0.0 && self.terms.iter().all(|(_, v)| *v == 0.0)
    }

    pub fn scale(&self, s: f64) -> Aff {
        Aff { terms: self.terms.iter().map(|&(i, v)| (i, v * s)).collect(), c: self.c * s }
    }

    pub fn add(&self, o: &Aff) -> Aff {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&o.terms);
        Aff { terms, c: self.c + o.c }.compact()
    }

    pub fn sub(&self, o: &Aff) -> Aff {
        self.add(&o.scale(-1.0))
    }

    pub fn axpy(&mut self, s: f64, o: &Aff) {
        if s == 0.0 {
            return;
        }
        self.terms.extend(o.terms.iter().map(|&(i, v)| (i, v * s)));
        self.c += s * o.c;
    }

    pub fn compact(mut self) -> Aff {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (i, v) in self.terms {
            match out.last_mut() {
                Some((j, w)) if *j == i => *w += v,
                _ => out.push((i, v)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        Aff { terms: out, c: self.c }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.c + self.terms.iter().map(|&(i, v)| v * x[i]).sum::<f64>()
    }
}

/// Complex affine expression.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CAff {
    pub re: Aff,
    pub im: Aff,
}

impl CAff {
    pub fn real(re: Aff) -> Self {
        CAff { re, im: Aff::default() }
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// `self + (a + ib)·o`.
    pub fn axpy(&mut self, a: f64, b: f64, o: &CAff) {
        self.re.axpy(a, &o.re);
        self.re.axpy(-b, &o.im);
        self.im.axpy(a, &o.im);
        self.im.axpy(b, &o.re);
    }

    pub fn compact(self) -> Self {
        CAff { re: self.re.compact(), im: self.im.compact() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Zero,
    Nonneg,
    Soc,
    Psd(usize),
}

/// Outcome of a conic solve, in the sense of the minimisation that was posed.
#[derive(Clone, Debug)]
pub struct ConicOutcome {
    pub status: ConicStatus,
    pub x: Vec<f64>,
    pub primal: f64,
    pub dual: f64,
    pub iterations: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConicStatus {
    Solved,
    Inaccurate,
    Unbounded,
    Infeasible,
    Failed,
}

/// Conic problem under construction.
#[derive(Clone, Debug, Default)]
pub struct Conic {
    n: usize,
    cones: Vec<(Kind, Vec<Aff>)>,
}

impl Conic {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_var(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn eq_zero(&mut self, e: Aff) {
        if !e.is_zero() {
            self.cones.push((Kind::Zero, vec![e]));
        }
    }

    pub fn nonneg(&mut self, e: Aff) {
        self.cones.push((Kind::Nonneg, vec![e]));
    }

    /// `‖rest‖₂ ≤ head`.
    pub fn soc(&mut self, head: Aff, rest: Vec<Aff>) {
        let rest: Vec<Aff> = rest.into_iter().filter(|a| !a.is_zero()).collect();
        if rest.is_empty() {
            self.nonneg(head);
            return;
        }
        let mut v = vec![head];
        v.extend(rest);
        self.cones.push((Kind::Soc, v));
    }

    /// `|z| ≤ t` for a complex affine `z`.
    pub fn abs_le(&mut self, z: &CAff, t: &Aff) {
        if z.is_real() {
            self.nonneg(t.sub(&z.re));
            self.nonneg(t.add(&z.re));
        } else {
            self.soc(t.clone(), vec![z.re.clone(), z.im.clone()]);
        }
    }

    /// `H ⪰ 0` for a hermitian matrix of complex affine entries (upper triangle is read).
    pub fn psd_herm(&mut self, h: &[Vec<CAff>]) {
        let d = h.len();
        match d {
            0 => {}
            1 => self.nonneg(h[0][0].re.clone()),
            2 => {
                let mean = h[0][0].re.add(&h[1][1].re).scale(0.5);
                let delta = h[0][0].re.sub(&h[1][1].re).scale(0.5);
                self.soc(mean, vec![delta, h[0][1].re.clone(), h[0][1].im.clone()]);
            }
            _ => {
                let entry = |i: usize, j: usize| -> (Aff, Aff) {
                    if i <= j {
                        (h[i][j].re.clone(), h[i][j].im.clone())
                    } else {
                        (h[j][i].re.clone(), h[j][i].im.scale(-1.0))
                    }
                };
                // [[Re H, −Im H], [Im H, Re H]]
                let real = |i: usize, j: usize| -> Aff {
                    let (bi, ri) = (i / d, i % d);
                    let (bj, rj) = (j / d, j % d);
                    let (re, im) = entry(ri, rj);
                    match (bi, bj) {
                        (0, 0) | (1, 1) => re,
                        (0, 1) => im.scale(-1.0),
                        _ => im,
                    }
                };
                let m = 2 * d;
                let mut v = Vec::with_capacity(m * (m + 1) / 2);
                for j in 0..m {
                    for i in 0..=j {
                        let a = real(i, j);
                        v.push(if i == j { a } else { a.scale(std::f64::consts::SQRT_2) });
                    }
                }
                self.cones.push((Kind::Psd(m), v));
            }
        }
    }

    /// `‖M‖ ≤ s`; `hermitian` selects the two-sided form `−sI ⪯ M ⪯ sI`.
    pub fn op_norm_le(&mut self, m: &[Vec<CAff>], s: &Aff, hermitian: bool) {
        let d = m.len();
        if hermitian {
            self.herm_le(m, s, true);
            self.herm_le(m, s, false);
            return;
        }
        if d == 1 {
            self.abs_le(&m[0][0], s);
            return;
        }
        let mut big = vec![vec![CAff::default(); 2 * d]; 2 * d];
        for i in 0..d {
            big[i][i] = CAff::real(s.clone());
            big[d + i][d + i] = CAff::real(s.clone());
            for j in 0..d {
                big[i][d + j] = m[i][j].clone();
            }
        }
        self.psd_herm(&big);
    }

    /// `sI − M ⪰ 0` (upper) or `sI + M ⪰ 0` (lower) for hermitian `M`.
    pub fn herm_le(&mut self, m: &[Vec<CAff>], s: &Aff, upper: bool) {
        let d = m.len();
        let sign = if upper { -1.0 } else { 1.0 };
        let mut h = vec![vec![CAff::default(); d]; d];
        for i in 0..d {
            for j in i..d {
                let mut e = CAff::default();
                e.axpy(sign, 0.0, &m[i][j]);
                if i == j {
                    e.re.axpy(1.0, s);
                    e.im = Aff::default();
                }
                h[i][j] = e.compact();
            }
        }
        self.psd_herm(&h);
    }

    /// Constraint `spec(coords) ≤ t`.
    ///
    /// `unit` holds the coordinates of the unit; in general mode quotients get a complex λ.
    pub fn seminorm_le(&mut self, spec: &SeminormSpec, coords: &[CAff], unit: &[f64], t: &Aff, general: bool) {
        match spec {
            SeminormSpec::Linmap(m) => self.linmap_le(m, coords, t),
            SeminormSpec::Opnorm(o) => self.opnorm_le(o, coords, t, general),
            SeminormSpec::Max { children } => {
                for c in children {
                    self.seminorm_le(c, coords, unit, t, general);
                }
            }
            SeminormSpec::Scale { c, child } => self.seminorm_le(child, coords, unit, &t.scale(1.0 / c), general),
            SeminormSpec::Quotient { child } => {
                let lr = self.new_var();
                let li = general.then(|| self.new_var());
                let shifted: Vec<CAff> = coords
                    .iter()
                    .zip(unit)
                    .map(|(z, &u)| {
                        let mut z = z.clone();
                        if u != 0.0 {
                            z.re.axpy(-u, &Aff::var(lr));
                            if let Some(li) = li {
                                z.im.axpy(-u, &Aff::var(li));
                            }
                        }
                        z
                    })
                    .collect();
                self.seminorm_le(child, &shifted, unit, t, general);
            }
            SeminormSpec::Bridge { left, right, couplings, left_dim } => {
                let (cl, cr) = coords.split_at(*left_dim);
                let (ul, ur) = unit.split_at(*left_dim);
                self.seminorm_le(left, cl, ul, t, general);
                self.seminorm_le(right, cr, ur, t, general);
                for c in couplings {
                    self.seminorm_le(c, coords, unit, t, general);
                }
            }
        }
    }

    fn linmap_le(&mut self, m: &LinearMapNorm, coords: &[CAff], t: &Aff) {
        let outs: Vec<CAff> = (0..m.rows.len())
            .map(|j| {
                let mut acc = CAff::default();
                for (k, z) in coords.iter().enumerate() {
                    let a = m.rows[j][k];
                    let b = m.imag.as_ref().map_or(0.0, |im| im[j][k]);
                    if a != 0.0 || b != 0.0 {
                        acc.axpy(a, b, z);
                    }
                }
                acc.compact()
            })
            .collect();
        let w = match m.weight {
            Weight::Inf => {
                for o in outs {
                    self.eq_zero(o.re);
                    self.eq_zero(o.im);
                }
                return;
            }
            Weight::Finite(w) => w,
        };
        if w == 0.0 {
            return;
        }
        let tw = t.scale(1.0 / w);
        match m.p {
            PNorm::Inf => {
                for o in &outs {
                    self.abs_le(o, &tw);
                }
            }
            PNorm::Two => {
                let mut rest = Vec::new();
                for o in outs {
                    rest.push(o.re);
                    rest.push(o.im);
                }
                self.soc(tw, rest);
            }
            PNorm::One => {
                let mut sum = Aff::default();
                for o in &outs {
                    let s = self.new_var();
                    self.abs_le(o, &Aff::var(s));
                    sum.axpy(1.0, &Aff::var(s));
                }
                self.nonneg(tw.sub(&sum));
            }
        }
    }

    fn opnorm_le(&mut self, o: &OpNormAtom, coords: &[CAff], t: &Aff, general: bool) {
        let img = image_matrix(&o.images, coords);
        let herm = !general && o.images.iter().all(|b| b.is_hermitian(1e-12));
        for (k, blk) in img.iter().enumerate() {
            let bw = o.block_weight(k);
            match o.weight {
                Weight::Inf => {
                    for row in blk {
                        for e in row {
                            self.eq_zero(e.re.clone());
                            self.eq_zero(e.im.clone());
                        }
                    }
                }
                Weight::Finite(w) => {
                    if w * bw == 0.0 {
                        continue;
                    }
                    self.op_norm_le(blk, &t.scale(1.0 / (w * bw)), herm);
                }
            }
        }
    }

    /// Minimise `objective`; `tol` feeds the solver's gap and feasibility tolerances.
    pub fn minimize(&self, objective: &Aff, tol: f64, max_iter: u32) -> Result<ConicOutcome> {
        let n = self.n.max(1);
        let mut q = vec![0.0; n];
        for &(i, v) in &objective.terms {
            q[i] += v;
        }
        let mut ri = Vec::new();
        let mut ci = Vec::new();
        let mut vals = Vec::new();
        let mut b = Vec::new();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        let mut row = 0usize;
        for (kind, exprs) in &self.cones {
            for e in exprs {
                for &(i, v) in &e.terms {
                    ri.push(row);
                    ci.push(i);
                    vals.push(-v);
                }
                b.push(e.c);
                row += 1;
            }
            let len = exprs.len();
            match (kind, cones.last_mut()) {
                (Kind::Zero, Some(SupportedConeT::ZeroConeT(k))) => *k += len,
                (Kind::Nonneg, Some(SupportedConeT::NonnegativeConeT(k))) => *k += len,
                (Kind::Zero, _) => cones.push(SupportedConeT::ZeroConeT(len)),
                (Kind::Nonneg, _) => cones.push(SupportedConeT::NonnegativeConeT(len)),
                (Kind::Soc, _) => cones.push(SupportedConeT::SecondOrderConeT(len)),
                (Kind::Psd(m), _) => cones.push(SupportedConeT::PSDTriangleConeT(*m)),
            }
        }
        let a = CscMatrix::new_from_triplets(row, n, ri, ci, vals);
        let p = CscMatrix::<f64>::zeros((n, n));
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(max_iter)
            .tol_gap_abs(tol)
            .tol_gap_rel(tol)
            .tol_feas(tol)
            .max_threads(1)
            .presolve_enable(false)
            .build()
            .map_err(|e| Error::Solver(format!("settings: {e:?}")))?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| Error::Solver(format!("setup: {e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved => ConicStatus::Solved,
            SolverStatus::AlmostSolved => ConicStatus::Inaccurate,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => ConicStatus::Unbounded,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => ConicStatus::Infeasible,
            _ => ConicStatus::Failed,
        };
        let mut x = sol.x.clone();
        x.truncate(self.n);
        Ok(ConicOutcome {
            status,
            x,
            primal: sol.obj_val + objective.c,
            dual: sol.obj_val_dual + objective.c,
            iterations: sol.iterations,
        })
    }
}

/// Blocks of `Σⱼ zⱼ Tⱼ` as complex affine matrices.
pub fn image_matrix(images: &[BlockMatrix], coords: &[CAff]) -> Vec<Vec<Vec<CAff>>> {
    let dims = images[0].dims();
    let mut out: Vec<Vec<Vec<CAff>>> = dims.iter().map(|&d| vec![vec![CAff::default(); d]; d]).collect();
    for (t, z) in images.iter().zip(coords) {
        if z.re.is_zero() && z.im.is_zero() {
            continue;
        }
        for (k, blk) in t.blocks.iter().enumerate() {
            let d = blk.nrows();
            for i in 0..d {
                for j in 0..d {
                    let c = blk[(i, j)];
                    if c.re != 0.0 || c.im != 0.0 {
                        out[k][i][j].axpy(c.re, c.im, z);
                    }
                }
            }
        }
    }
    for blk in out.iter_mut() {
        for row in blk.iter_mut() {
            for e in row.iter_mut() {
                *e = std::mem::take(e).compact();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_embedding_bounds_offdiagonal() {
        // maximise Re h01 subject to [[1, h01, 0],[h01*, 1, 0],[0, 0, 1]] ⪰ 0 → 1
        let mut c = Conic::new();
        let r = c.new_var();
        let i = c.new_var();
        let one = CAff::real(Aff::constant(1.0));
        let z = CAff::default();
        let off = CAff { re: Aff::var(r), im: Aff::var(i) };
        let h = vec![
            vec![one.clone(), off, z.clone()],
            vec![z.clone(), one.clone(), z.clone()],
            vec![z.clone(), z.clone(), one],
        ];
        c.psd_herm(&h);
        let out = c.minimize(&Aff { terms: vec![(r, -1.0)], c: 0.0 }, 1e-10, 200).unwrap();
        assert_eq!(out.status, ConicStatus::Solved);
        assert!((out.primal + 1.0).abs() < 1e-7);
    }

    #[test]
    fn general_op_norm_of_nilpotent() {
        // ‖[[0, x],[0, 0]]‖ ≤ 2 → max x = 2
        let mut c = Conic::new();
        let x = c.new_var();
        let z = CAff::default();
        let m = vec![vec![z.clone(), CAff::real(Aff::var(x))], vec![z.clone(), z]];
        c.op_norm_le(&m, &Aff::constant(2.0), false);
        let out = c.minimize(&Aff { terms: vec![(x, -1.0)], c: 0.0 }, 1e-10, 200).unwrap();
        assert!((out.primal + 2.0).abs() < 1e-7);
    }
}
