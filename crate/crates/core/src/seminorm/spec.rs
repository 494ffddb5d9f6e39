//! Seminorm expression trees over coordinate vectors.
//!
//! Leaves are norms of linear images of the coordinates; inner nodes take maxima,
//! rescale, quotient by the unit, or join two systems into a bridge on a direct sum.
//! Evaluation works on complex coordinates so that general (non-hermitian)
//! elements are covered; on hermitian input the quotient uses a real λ.

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::line::golden_min;
use crate::linalg::{op_norm_block, BlockMatrix, C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PNorm {
    One,
    Two,
    Inf,
}

impl Serialize for PNorm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PNorm::One => s.serialize_u8(1),
            PNorm::Two => s.serialize_u8(2),
            PNorm::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PNorm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match &v {
            serde_json::Value::Number(n) if n.as_f64() == Some(1.0) => Ok(PNorm::One),
            serde_json::Value::Number(n) if n.as_f64() == Some(2.0) => Ok(PNorm::Two),
            serde_json::Value::String(s) if s == "inf" => Ok(PNorm::Inf),
            serde_json::Value::String(s) if s == "1" => Ok(PNorm::One),
            serde_json::Value::String(s) if s == "2" => Ok(PNorm::Two),
            _ => Err(serde::de::Error::custom(format!("p must be 1, 2 or \"inf\", found {v}"))),
        }
    }
}

/// Positive weight; `Inf` turns the atom into the constraint "image = 0".
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    Finite(f64),
    Inf,
}

impl Weight {
    pub fn value(self) -> f64 {
        match self {
            Weight::Finite(w) => w,
            Weight::Inf => f64::INFINITY,
        }
    }

    fn scaled(self, c: f64) -> Weight {
        match self {
            Weight::Finite(w) => Weight::Finite(w * c),
            Weight::Inf => Weight::Inf,
        }
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Weight::Finite(w) => s.serialize_f64(*w),
            Weight::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match &v {
            serde_json::Value::Number(n) => {
                let w = n.as_f64().ok_or_else(|| serde::de::Error::custom("weight is not a float"))?;
                if w < 0.0 {
                    return Err(serde::de::Error::custom("weight must be nonnegative"));
                }
                Ok(Weight::Finite(w))
            }
            serde_json::Value::String(s) if s == "inf" => Ok(Weight::Inf),
            _ => Err(serde::de::Error::custom(format!("weight must be a number or \"inf\", found {v}"))),
        }
    }
}

/// `weight · ‖(M z)‖_p` with `M = rows + i·imag`, moduli taken entrywise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearMapNorm {
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag: Option<Vec<Vec<f64>>>,
    pub p: PNorm,
    pub weight: Weight,
}

/// `weight · maxₖ wₖ ‖(Σⱼ zⱼ Tⱼ)ₖ‖`: operator norm of a linear image, block-weighted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpNormAtom {
    pub images: Vec<BlockMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_weights: Option<Vec<f64>>,
    pub weight: Weight,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SeminormSpec {
    Linmap(LinearMapNorm),
    Opnorm(OpNormAtom),
    Max { children: Vec<SeminormSpec> },
    Scale { c: f64, child: Box<SeminormSpec> },
    Quotient { child: Box<SeminormSpec> },
    Bridge { left: Box<SeminormSpec>, right: Box<SeminormSpec>, couplings: Vec<SeminormSpec>, left_dim: usize },
}

/// Iteration cap for the quotient line searches.
pub const QUOTIENT_CAP: usize = 400;

impl LinearMapNorm {
    pub fn real(rows: Vec<Vec<f64>>, p: PNorm, weight: f64) -> Self {
        Self { rows, imag: None, p, weight: Weight::Finite(weight) }
    }

    pub fn complex(rows: Vec<Vec<C64>>, p: PNorm, weight: f64) -> Self {
        let re = rows.iter().map(|r| r.iter().map(|z| z.re).collect()).collect();
        let any_im = rows.iter().flatten().any(|z| z.im != 0.0);
        let im = any_im.then(|| rows.iter().map(|r| r.iter().map(|z| z.im).collect()).collect());
        Self { rows: re, imag: im, p, weight: Weight::Finite(weight) }
    }

    pub fn row(&self, j: usize) -> Vec<C64> {
        let im = self.imag.as_ref().map(|m| &m[j]);
        self.rows[j]
            .iter()
            .enumerate()
            .map(|(k, &r)| C64::new(r, im.map_or(0.0, |v| v[k])))
            .collect()
    }

    pub fn outputs(&self, z: &[C64]) -> Vec<C64> {
        (0..self.rows.len())
            .map(|j| {
                let mut acc = ZERO;
                for (k, zk) in z.iter().enumerate() {
                    let m = C64::new(self.rows[j][k], self.imag.as_ref().map_or(0.0, |v| v[j][k]));
                    acc += m * zk;
                }
                acc
            })
            .collect()
    }

    fn eval(&self, z: &[C64]) -> f64 {
        let out = self.outputs(z);
        let mods = out.iter().map(|c| c.norm());
        let norm = match self.p {
            PNorm::One => mods.sum(),
            PNorm::Two => mods.map(|m| m * m).sum::<f64>().sqrt(),
            PNorm::Inf => mods.fold(0.0, f64::max),
        };
        match self.weight {
            Weight::Finite(w) => w * norm,
            Weight::Inf => {
                let scale = z.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
                if norm <= 1e-12 * scale { 0.0 } else { f64::INFINITY }
            }
        }
    }
}

impl OpNormAtom {
    pub fn image(&self, z: &[C64]) -> BlockMatrix {
        let mut out = BlockMatrix::zeros(&self.images[0].dims());
        for (c, t) in z.iter().zip(&self.images) {
            if *c != ZERO {
                out.axpy(*c, t);
            }
        }
        out
    }

    pub fn block_weight(&self, k: usize) -> f64 {
        self.block_weights.as_ref().map_or(1.0, |w| w[k])
    }

    fn eval(&self, z: &[C64]) -> f64 {
        let img = self.image(z);
        let norm = img
            .blocks
            .iter()
            .enumerate()
            .map(|(k, b)| self.block_weight(k) * op_norm_block(b))
            .fold(0.0, f64::max);
        match self.weight {
            Weight::Finite(w) => w * norm,
            Weight::Inf => {
                let scale = z.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
                if norm <= 1e-12 * scale { 0.0 } else { f64::INFINITY }
            }
        }
    }
}

impl SeminormSpec {
    pub fn max(children: Vec<SeminormSpec>) -> Self {
        SeminormSpec::Max { children }
    }

    pub fn scale(c: f64, child: SeminormSpec) -> Self {
        SeminormSpec::Scale { c, child: Box::new(child) }
    }

    pub fn quotient(child: SeminormSpec) -> Self {
        SeminormSpec::Quotient { child: Box::new(child) }
    }

    pub fn linmap(m: LinearMapNorm) -> Self {
        SeminormSpec::Linmap(m)
    }

    /// The zero seminorm on `n` coordinates.
    pub fn zero(n: usize) -> Self {
        SeminormSpec::Linmap(LinearMapNorm::real(vec![vec![0.0; n]], PNorm::Inf, 1.0))
    }

    /// Checks that every linear map acts on `n` coordinates.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.validate_at(n, "$")
    }

    fn validate_at(&self, n: usize, path: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSeminorm(format!("{path}: {msg}")));
        match self {
            SeminormSpec::Linmap(m) => {
                if m.rows.is_empty() {
                    return bad("linear map has no rows".into());
                }
                for (j, r) in m.rows.iter().enumerate() {
                    if r.len() != n {
                        return bad(format!("row {j} has {} entries, expected {n}", r.len()));
                    }
                }
                if let Some(im) = &m.imag
                    && (im.len() != m.rows.len() || im.iter().any(|r| r.len() != n)) {
                        return bad("imag part does not match rows".into());
                    }
                if let Weight::Finite(w) = m.weight
                    && !(w >= 0.0 && w.is_finite()) {
                        return bad(format!("invalid weight {w}"));
                    }
                Ok(())
            }
            SeminormSpec::Opnorm(o) => {
                if o.images.len() != n {
                    return bad(format!("{} images, expected {n}", o.images.len()));
                }
                let dims = o.images[0].dims();
                if o.images.iter().any(|t| t.dims() != dims) {
                    return bad("images have inconsistent block sizes".into());
                }
                if let Some(w) = &o.block_weights
                    && (w.len() != dims.len() || w.iter().any(|v| !(*v >= 0.0))) {
                        return bad("block_weights must be nonnegative, one per block".into());
                    }
                Ok(())
            }
            SeminormSpec::Max { children } => {
                if children.is_empty() {
                    return bad("max has no children".into());
                }
                for (i, c) in children.iter().enumerate() {
                    c.validate_at(n, &format!("{path}.children[{i}]"))?;
                }
                Ok(())
            }
            SeminormSpec::Scale { c, child } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return bad(format!("scale factor {c} must be positive"));
                }
                child.validate_at(n, &format!("{path}.child"))
            }
            SeminormSpec::Quotient { child } => child.validate_at(n, &format!("{path}.child")),
            SeminormSpec::Bridge { left, right, couplings, left_dim } => {
                if *left_dim > n {
                    return bad(format!("left_dim {left_dim} exceeds {n}"));
                }
                left.validate_at(*left_dim, &format!("{path}.left"))?;
                right.validate_at(n - left_dim, &format!("{path}.right"))?;
                for (i, c) in couplings.iter().enumerate() {
                    c.validate_at(n, &format!("{path}.couplings[{i}]"))?;
                }
                Ok(())
            }
        }
    }

    /// Value at hermitian coordinates; `unit` gives the coordinates of `e`.
    pub fn eval(&self, x: &[f64], unit: &[f64]) -> Result<f64> {
        let z: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.eval_inner(&z, unit, true)
    }

    /// Value at general coordinates; quotients use a complex λ.
    pub fn eval_general(&self, z: &[C64], unit: &[f64]) -> Result<f64> {
        let herm = z.iter().all(|c| c.im == 0.0);
        self.eval_inner(z, unit, herm)
    }

    fn eval_inner(&self, z: &[C64], unit: &[f64], herm: bool) -> Result<f64> {
        match self {
            SeminormSpec::Linmap(m) => Ok(m.eval(z)),
            SeminormSpec::Opnorm(o) => Ok(o.eval(z)),
            SeminormSpec::Max { children } => {
                let mut best: f64 = 0.0;
                for c in children {
                    best = best.max(c.eval_inner(z, unit, herm)?);
                }
                Ok(best)
            }
            SeminormSpec::Scale { c, child } => Ok(c * child.eval_inner(z, unit, herm)?),
            SeminormSpec::Quotient { child } => quotient_min(child, z, unit, herm).map(|(_, v)| v),
            SeminormSpec::Bridge { left, right, couplings, left_dim } => {
                let (zl, zr) = z.split_at(*left_dim);
                let (ul, ur) = unit.split_at(*left_dim);
                let mut best = left.eval_inner(zl, ul, herm)?.max(right.eval_inner(zr, ur, herm)?);
                for c in couplings {
                    best = best.max(c.eval_inner(z, unit, herm)?);
                }
                Ok(best)
            }
        }
    }

    /// Minimiser λ of `child(z − λe)` for a quotient node (real λ for hermitian input).
    pub fn quotient_argmin(&self, z: &[C64], unit: &[f64]) -> Result<(C64, f64)> {
        match self {
            SeminormSpec::Quotient { child } => {
                let herm = z.iter().all(|c| c.im == 0.0);
                quotient_min(child, z, unit, herm)
            }
            _ => Err(Error::InvalidSeminorm("not a quotient node".into())),
        }
    }

    /// Multiplies the whole seminorm by `c > 0`.
    pub fn scaled(&self, c: f64) -> SeminormSpec {
        SeminormSpec::scale(c, self.clone())
    }

    /// Composition with a real linear change of coordinates `x_full = P x_sub`.
    pub fn pullback(&self, p: &DMatrix<f64>) -> Result<SeminormSpec> {
        let mul_rows = |rows: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|r| (0..p.ncols()).map(|j| (0..p.nrows()).map(|i| r[i] * p[(i, j)]).sum()).collect())
                .collect()
        };
        Ok(match self {
            SeminormSpec::Linmap(m) => SeminormSpec::Linmap(LinearMapNorm {
                rows: mul_rows(&m.rows),
                imag: m.imag.as_ref().map(mul_rows),
                p: m.p,
                weight: m.weight,
            }),
            SeminormSpec::Opnorm(o) => {
                let dims = o.images[0].dims();
                let images = (0..p.ncols())
                    .map(|j| {
                        let mut t = BlockMatrix::zeros(&dims);
                        for i in 0..p.nrows() {
                            if p[(i, j)] != 0.0 {
                                t.axpy(C64::new(p[(i, j)], 0.0), &o.images[i]);
                            }
                        }
                        t
                    })
                    .collect();
                SeminormSpec::Opnorm(OpNormAtom { images, block_weights: o.block_weights.clone(), weight: o.weight })
            }
            SeminormSpec::Max { children } => {
                SeminormSpec::Max { children: children.iter().map(|c| c.pullback(p)).collect::<Result<_>>()? }
            }
            SeminormSpec::Scale { c, child } => SeminormSpec::scale(*c, child.pullback(p)?),
            SeminormSpec::Quotient { child } => SeminormSpec::quotient(child.pullback(p)?),
            SeminormSpec::Bridge { .. } => {
                return Err(Error::InvalidSeminorm("bridges cannot be pulled back".into()));
            }
        })
    }

    /// Copy with every atom weight multiplied by `c` (same as [`scaled`](Self::scaled) in value).
    pub fn with_weights_scaled(&self, c: f64) -> SeminormSpec {
        match self {
            SeminormSpec::Linmap(m) => {
                SeminormSpec::Linmap(LinearMapNorm { weight: m.weight.scaled(c), ..m.clone() })
            }
            SeminormSpec::Opnorm(o) => SeminormSpec::Opnorm(OpNormAtom { weight: o.weight.scaled(c), ..o.clone() }),
            SeminormSpec::Max { children } => {
                SeminormSpec::Max { children: children.iter().map(|ch| ch.with_weights_scaled(c)).collect() }
            }
            SeminormSpec::Scale { c: s, child } => SeminormSpec::scale(*s, child.with_weights_scaled(c)),
            SeminormSpec::Quotient { child } => SeminormSpec::quotient(child.with_weights_scaled(c)),
            SeminormSpec::Bridge { left, right, couplings, left_dim } => SeminormSpec::Bridge {
                left: Box::new(left.with_weights_scaled(c)),
                right: Box::new(right.with_weights_scaled(c)),
                couplings: couplings.iter().map(|ch| ch.with_weights_scaled(c)).collect(),
                left_dim: *left_dim,
            },
        }
    }

    /// All leaves, in tree order.
    pub fn atoms(&self) -> Vec<&SeminormSpec> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a SeminormSpec>) {
        match self {
            SeminormSpec::Linmap(_) | SeminormSpec::Opnorm(_) => out.push(self),
            SeminormSpec::Max { children } => children.iter().for_each(|c| c.collect_atoms(out)),
            SeminormSpec::Scale { child, .. } | SeminormSpec::Quotient { child } => child.collect_atoms(out),
            SeminormSpec::Bridge { left, right, couplings, .. } => {
                left.collect_atoms(out);
                right.collect_atoms(out);
                couplings.iter().for_each(|c| c.collect_atoms(out));
            }
        }
    }

    pub fn is_bridge(&self) -> bool {
        matches!(self, SeminormSpec::Bridge { .. })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("seminorm serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn shifted(z: &[C64], unit: &[f64], lam: C64) -> Vec<C64> {
    z.iter().zip(unit).map(|(c, u)| c - lam * u).collect()
}

/// A seminorm tree with the linear images of `z` and of the unit precomputed, so that
/// `child(z − λe)` costs one norm per leaf.
enum Shifted {
    Lin { v: Vec<C64>, u: Vec<C64>, p: PNorm, w: f64 },
    Op { a: BlockMatrix, u: BlockMatrix, bw: Vec<f64>, w: f64 },
    Max(Vec<Shifted>),
    Scale(f64, Box<Shifted>),
}

impl Shifted {
    fn prepare(spec: &SeminormSpec, z: &[C64], unit: &[C64]) -> Option<Shifted> {
        Some(match spec {
            SeminormSpec::Linmap(m) => {
                let Weight::Finite(w) = m.weight else { return None };
                Shifted::Lin { v: m.outputs(z), u: m.outputs(unit), p: m.p, w }
            }
            SeminormSpec::Opnorm(o) => {
                let Weight::Finite(w) = o.weight else { return None };
                let a = o.image(z);
                let bw = (0..a.blocks.len()).map(|k| o.block_weight(k)).collect();
                Shifted::Op { a, u: o.image(unit), bw, w }
            }
            SeminormSpec::Max { children } => {
                Shifted::Max(children.iter().map(|c| Shifted::prepare(c, z, unit)).collect::<Option<_>>()?)
            }
            SeminormSpec::Scale { c, child } => Shifted::Scale(*c, Box::new(Shifted::prepare(child, z, unit)?)),
            _ => return None,
        })
    }

    fn eval(&self, lam: C64) -> f64 {
        match self {
            Shifted::Lin { v, u, p, w } => {
                let mods = v.iter().zip(u).map(|(a, b)| (a - lam * b).norm());
                w * match p {
                    PNorm::One => mods.sum(),
                    PNorm::Two => mods.map(|m| m * m).sum::<f64>().sqrt(),
                    PNorm::Inf => mods.fold(0.0, f64::max),
                }
            }
            Shifted::Op { a, u, bw, w } => {
                let mut best: f64 = 0.0;
                for ((ak, uk), b) in a.blocks.iter().zip(&u.blocks).zip(bw) {
                    best = best.max(b * op_norm_block(&(ak - uk * lam)));
                }
                w * best
            }
            Shifted::Max(cs) => cs.iter().map(|c| c.eval(lam)).fold(0.0, f64::max),
            Shifted::Scale(c, child) => c * child.eval(lam),
        }
    }
}

fn quotient_min(child: &SeminormSpec, z: &[C64], unit: &[f64], herm: bool) -> Result<(C64, f64)> {
    let at_zero = child.eval_inner(z, unit, herm)?;
    let unit_c: Vec<C64> = unit.iter().map(|&u| C64::new(u, 0.0)).collect();
    let ce = child.eval_inner(&unit_c, unit, herm)?;
    if !(ce > 0.0) || !at_zero.is_finite() || at_zero == 0.0 {
        return Ok((ZERO, at_zero));
    }
    // child(z − λe) ≥ |λ|·child(e) − child(z) exceeds child(z) once |λ| > 2 child(z)/child(e)
    let bound = 2.0 * at_zero / ce * (1.0 + 1e-9);
    let tol = 1e-13 * bound.max(1e-300);
    let prepared = Shifted::prepare(child, z, &unit_c);
    let f = |lam: C64| match &prepared {
        Some(p) => p.eval(lam),
        None => child.eval_inner(&shifted(z, unit, lam), unit, herm).unwrap_or(f64::INFINITY),
    };
    if herm {
        let (l, v) = golden_min(|t| f(C64::new(t, 0.0)), -bound, bound, tol, QUOTIENT_CAP)?;
        let (l, v) = if v <= at_zero { (l, v) } else { (0.0, at_zero) };
        return Ok((C64::new(l, 0.0), v));
    }
    let mut inner_err = None;
    let g = |re: f64| match golden_min(|im| f(C64::new(re, im)), -bound, bound, tol, QUOTIENT_CAP) {
        Ok((_, v)) => v,
        Err(e) => {
            inner_err.get_or_insert(e);
            f64::INFINITY
        }
    };
    let (re, _) = golden_min(g, -bound, bound, tol, QUOTIENT_CAP)?;
    if let Some(e) = inner_err {
        return Err(e);
    }
    let (im, v) = golden_min(|im| f(C64::new(re, im)), -bound, bound, tol, QUOTIENT_CAP)?;
    if v <= at_zero { Ok((C64::new(re, im), v)) } else { Ok((ZERO, at_zero)) }
}
