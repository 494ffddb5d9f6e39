//! Brute-force vertex enumeration for polytope balls.
//!
//! Balls built only from real `p = 1` / `p = ∞` atoms, quotients, bridges and norm caps on
//! commutative ambients are polytopes in the space of coordinates and quotient
//! multipliers. Every vertex is found by solving each square subsystem of the
//! inequalities; linear (and, more generally, convex) objectives are then maximised by
//! checking every vertex. Meant for small validation instances only.

use nalgebra::{DMatrix, DVector};

use super::{lex_less, BallSpec, Frame};
use crate::seminorm::{PNorm, SeminormSpec, Weight};

/// `{ v : A v ≤ b }`; the first `n_coords` variables are the frame coordinates.
#[derive(Clone, Debug)]
pub struct Polytope {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub n_coords: usize,
    pub n_vars: usize,
}

struct Builder {
    rows: Vec<(Vec<f64>, f64)>,
    n_vars: usize,
}

impl Builder {
    fn le(&mut self, coef: Vec<f64>, rhs: f64) {
        self.rows.push((coef, rhs));
    }
}

const MAX_SIGN_ROWS: usize = 12;

/// Polytope description of a ball, or `None` if some piece is not polyhedral.
///
/// `pin` removes one coordinate (fixed at 0), as in [`super::SupportOpts`].
pub fn polytope_of(frame: &Frame, ball: &BallSpec, pin: Option<usize>) -> Option<Polytope> {
    let n = frame.dim();
    let free: Vec<usize> = (0..n).filter(|j| Some(*j) != pin).collect();
    let mut b = Builder { rows: vec![], n_vars: free.len() };
    // coordinate j as a linear form in the variables
    let coords: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut v = vec![0.0; free.len()];
            if let Some(k) = free.iter().position(|&f| f == j) {
                v[k] = 1.0;
            }
            v
        })
        .collect();
    if let Some(spec) = &ball.spec {
        compile(spec, &coords, &frame.unit, ball.radius, &mut b)?;
    }
    if let Some(cap) = ball.norm_cap {
        for blk in frame.basis[0].blocks.iter() {
            if blk.nrows() != 1 {
                return None;
            }
        }
        let nb = frame.basis[0].blocks.len();
        for k in 0..nb {
            let mut form = vec![0.0; b.n_vars];
            for (j, bj) in frame.basis.iter().enumerate() {
                let c = bj.blocks[k][(0, 0)];
                if c.im != 0.0 {
                    return None;
                }
                axpy(&mut form, c.re, &coords[j]);
            }
            b.le(form.clone(), cap);
            b.le(form.iter().map(|v| -v).collect(), cap);
        }
    }
    let nv = b.n_vars;
    let a = b.rows.iter().map(|(c, _)| {
        let mut c = c.clone();
        c.resize(nv, 0.0);
        c
    });
    Some(Polytope { a: a.collect(), b: b.rows.iter().map(|r| r.1).collect(), n_coords: free.len(), n_vars: nv })
}

fn axpy(y: &mut Vec<f64>, s: f64, x: &[f64]) {
    if y.len() < x.len() {
        y.resize(x.len(), 0.0);
    }
    for (a, b) in y.iter_mut().zip(x) {
        *a += s * b;
    }
}

fn compile(spec: &SeminormSpec, coords: &[Vec<f64>], unit: &[f64], t: f64, b: &mut Builder) -> Option<()> {
    match spec {
        SeminormSpec::Linmap(m) => {
            if m.imag.as_ref().is_some_and(|im| im.iter().flatten().any(|v| *v != 0.0)) {
                return None;
            }
            let forms: Vec<Vec<f64>> = m
                .rows
                .iter()
                .map(|r| {
                    let mut f = vec![0.0; b.n_vars];
                    for (k, c) in r.iter().enumerate() {
                        if *c != 0.0 {
                            axpy(&mut f, *c, &coords[k]);
                        }
                    }
                    f
                })
                .collect();
            let w = match m.weight {
                Weight::Inf => {
                    for f in forms {
                        b.le(f.clone(), 0.0);
                        b.le(f.iter().map(|v| -v).collect(), 0.0);
                    }
                    return Some(());
                }
                Weight::Finite(0.0) => return Some(()),
                Weight::Finite(w) => w,
            };
            match m.p {
                PNorm::Inf => {
                    for f in forms {
                        b.le(f.clone(), t / w);
                        b.le(f.iter().map(|v| -v).collect(), t / w);
                    }
                }
                PNorm::One => {
                    if forms.len() > MAX_SIGN_ROWS {
                        return None;
                    }
                    for mask in 0..(1usize << forms.len()) {
                        let mut f = vec![0.0; b.n_vars];
                        for (i, g) in forms.iter().enumerate() {
                            let s = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                            axpy(&mut f, s, g);
                        }
                        b.le(f, t / w);
                    }
                }
                PNorm::Two => {
                    if forms.len() > 1 {
                        return None;
                    }
                    b.le(forms[0].clone(), t / w);
                    b.le(forms[0].iter().map(|v| -v).collect(), t / w);
                }
            }
            Some(())
        }
        SeminormSpec::Opnorm(o) => {
            if o.images[0].blocks.iter().any(|blk| blk.nrows() != 1) {
                return None;
            }
            let w = match o.weight {
                Weight::Inf => 0.0,
                Weight::Finite(w) => w,
            };
            for k in 0..o.images[0].blocks.len() {
                let mut f = vec![0.0; b.n_vars];
                for (j, tj) in o.images.iter().enumerate() {
                    let c = tj.blocks[k][(0, 0)];
                    if c.im != 0.0 {
                        return None;
                    }
                    axpy(&mut f, c.re, &coords[j]);
                }
                let scale = w * o.block_weight(k);
                let rhs = if o.weight == Weight::Inf || scale == 0.0 {
                    if o.weight == Weight::Inf { 0.0 } else { continue }
                } else {
                    t / scale
                };
                b.le(f.clone(), rhs);
                b.le(f.iter().map(|v| -v).collect(), rhs);
            }
            Some(())
        }
        SeminormSpec::Max { children } => {
            for c in children {
                compile(c, coords, unit, t, b)?;
            }
            Some(())
        }
        SeminormSpec::Scale { c, child } => compile(child, coords, unit, t / c, b),
        SeminormSpec::Quotient { child } => {
            let lam = b.n_vars;
            b.n_vars += 1;
            let shifted: Vec<Vec<f64>> = coords
                .iter()
                .zip(unit)
                .map(|(f, &u)| {
                    let mut f = f.clone();
                    f.resize(b.n_vars, 0.0);
                    f[lam] -= u;
                    f
                })
                .collect();
            compile(child, &shifted, unit, t, b)
        }
        SeminormSpec::Bridge { left, right, couplings, left_dim } => {
            compile(left, &coords[..*left_dim], &unit[..*left_dim], t, b)?;
            compile(right, &coords[*left_dim..], &unit[*left_dim..], t, b)?;
            for c in couplings {
                compile(c, coords, unit, t, b)?;
            }
            Some(())
        }
    }
}

impl Polytope {
    /// All vertices, deduplicated, in lexicographic order.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let d = self.n_vars;
        let m = self.a.len();
        let mut out: Vec<Vec<f64>> = Vec::new();
        if d == 0 {
            return vec![vec![]];
        }
        if m < d {
            return out;
        }
        let scale = self.b.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let mut idx: Vec<usize> = (0..d).collect();
        loop {
            let mat = DMatrix::from_fn(d, d, |i, j| self.a[idx[i]][j]);
            let rhs = DVector::from_iterator(d, idx.iter().map(|&i| self.b[i]));
            let lu = mat.clone().lu();
            if let Some(v) = lu.solve(&rhs) {
                let resid = (&mat * &v - &rhs).amax();
                let feasible = resid <= 1e-9 * scale
                    && self.a.iter().zip(&self.b).all(|(row, bi)| {
                        row.iter().zip(v.iter()).map(|(x, y)| x * y).sum::<f64>() <= bi + 1e-9 * scale
                    });
                if feasible && v.iter().all(|x| x.is_finite()) {
                    let v: Vec<f64> = v.iter().copied().collect();
                    if !out.iter().any(|w| w.iter().zip(&v).all(|(a, b)| (a - b).abs() <= 1e-9 * scale)) {
                        out.push(v);
                    }
                }
            }
            // next combination
            let mut i = d;
            loop {
                if i == 0 {
                    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                    return out;
                }
                i -= 1;
                if idx[i] < m - d + i {
                    idx[i] += 1;
                    for k in i + 1..d {
                        idx[k] = idx[k - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Maximum of `f` over the vertices (exact for convex `f` on a bounded polytope),
    /// with lexicographic tie-breaking. `f` receives the frame coordinates only.
    pub fn max_over_vertices<F: Fn(&[f64]) -> f64>(&self, f: F) -> Option<(f64, Vec<f64>)> {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for v in self.vertices() {
            let x = &v[..self.n_coords];
            let fx = f(x);
            let take = match &best {
                None => true,
                Some((bv, bx)) => fx > bv + 1e-12 || ((fx - bv).abs() <= 1e-12 && lex_less(x, bx)),
            };
            if take {
                best = Some((fx, x.to_vec()));
            }
        }
        best
    }
}

/// Expands polytope coordinates (without the pinned one) back to frame coordinates.
pub fn expand(x: &[f64], n: usize, pin: Option<usize>) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut it = x.iter();
    for j in 0..n {
        if Some(j) == pin {
            out.push(0.0);
        } else {
            out.push(*it.next().unwrap());
        }
    }
    out
}
