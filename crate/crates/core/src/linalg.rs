//! Block-diagonal complex matrices and the spectral helpers built on them.
//!
//! Blocks of size one and two use closed forms; larger blocks go through
//! nalgebra's hermitian eigensolver and SVD.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Element of a finite direct sum of full matrix algebras.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    pub blocks: Vec<CMat>,
}

impl BlockMatrix {
    pub fn zeros(dims: &[usize]) -> Self {
        Self { blocks: dims.iter().map(|&d| CMat::zeros(d, d)).collect() }
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self { blocks: dims.iter().map(|&d| CMat::identity(d, d)).collect() }
    }

    /// Diagonal element of a commutative algebra `C^m`.
    pub fn diag(values: &[f64]) -> Self {
        Self {
            blocks: values.iter().map(|&v| CMat::from_element(1, 1, C64::new(v, 0.0))).collect(),
        }
    }

    pub fn from_blocks(blocks: Vec<CMat>) -> Self {
        Self { blocks }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.blocks.len() == other.blocks.len()
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| a.shape() == b.shape())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { blocks: self.blocks.iter().map(|a| a * c).collect() }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn axpy(&mut self, c: C64, x: &Self) {
        for (a, b) in self.blocks.iter_mut().zip(&x.blocks) {
            *a += b * c;
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self { blocks: self.blocks.iter().map(|a| a.adjoint()).collect() }
    }

    pub fn hermitian_part(&self) -> Self {
        self.add(&self.adjoint()).scale_re(0.5)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.blocks.iter().all(|a| (a - a.adjoint()).iter().all(|z| z.norm() <= tol))
    }

    /// Hilbert–Schmidt inner product `tr(self* other)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum::<C64>())
            .sum()
    }

    pub fn hs_norm(&self) -> f64 {
        self.blocks.iter().map(|a| a.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>().sqrt()
    }

    pub fn op_norm(&self) -> f64 {
        self.blocks.iter().map(op_norm_block).fold(0.0, f64::max)
    }

    /// Smallest and largest eigenvalue over all blocks of a hermitian element.
    pub fn spectral_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for b in &self.blocks {
            let (l, h) = herm_extremes(b);
            lo = lo.min(l);
            hi = hi.max(h);
        }
        (lo, hi)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    /// Embedding of a complex hermitian block-diagonal matrix as a full dense matrix.
    pub fn to_dense(&self) -> CMat {
        let n: usize = self.dims().iter().sum();
        let mut out = CMat::zeros(n, n);
        let mut off = 0;
        for b in &self.blocks {
            let d = b.nrows();
            out.view_mut((off, off), (d, d)).copy_from(b);
            off += d;
        }
        out
    }
}

/// Eigenvalues of a hermitian block, ascending.
pub fn herm_eigenvalues(m: &CMat) -> Vec<f64> {
    match m.nrows() {
        0 => vec![],
        1 => vec![m[(0, 0)].re],
        2 => {
            let (lo, hi) = herm2_extremes(m);
            vec![lo, hi]
        }
        _ => {
            let h = hermitize(m);
            let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
            ev.sort_by(|a, b| a.total_cmp(b));
            ev
        }
    }
}

fn herm2_extremes(m: &CMat) -> (f64, f64) {
    let mean = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
    let delta = 0.5 * (m[(0, 0)].re - m[(1, 1)].re);
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let r = (delta * delta + off.norm_sqr()).sqrt();
    (mean - r, mean + r)
}

pub fn herm_extremes(m: &CMat) -> (f64, f64) {
    match m.nrows() {
        1 => (m[(0, 0)].re, m[(0, 0)].re),
        2 => herm2_extremes(m),
        _ => {
            let ev = herm_eigenvalues(m);
            (ev[0], ev[ev.len() - 1])
        }
    }
}

/// Largest eigenvalue of a hermitian block with a unit eigenvector.
pub fn herm_top_eigenpair(m: &CMat) -> (f64, nalgebra::DVector<C64>) {
    let d = m.nrows();
    if d == 1 {
        return (m[(0, 0)].re, nalgebra::DVector::from_element(1, ONE));
    }
    let h = hermitize(m);
    let eig = h.symmetric_eigen();
    let mut best = 0;
    for i in 1..d {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    (eig.eigenvalues[best], eig.eigenvectors.column(best).into_owned())
}

fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Largest singular value of a square block.
pub fn op_norm_block(m: &CMat) -> f64 {
    match m.nrows() {
        0 => 0.0,
        1 => m[(0, 0)].norm(),
        2 => {
            let f: f64 = m.iter().map(|z| z.norm_sqr()).sum();
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = (f * f - 4.0 * det.norm_sqr()).max(0.0).sqrt();
            (0.5 * (f + disc)).sqrt()
        }
        _ => m.clone().singular_values().iter().copied().fold(0.0, f64::max),
    }
}

/// Top singular triple `(s, u, v)` with `m v = s u`.
pub fn top_singular_pair(m: &CMat) -> (f64, nalgebra::DVector<C64>, nalgebra::DVector<C64>) {
    let svd = m.clone().svd(true, true);
    let mut best = 0;
    for i in 1..svd.singular_values.len() {
        if svd.singular_values[i] > svd.singular_values[best] {
            best = i;
        }
    }
    let u = svd.u.as_ref().unwrap().column(best).into_owned();
    let v = svd.v_t.as_ref().unwrap().row(best).adjoint();
    (svd.singular_values[best], u, v)
}

/// Minimum eigenvalue of a hermitian block, used for PSD checks.
pub fn herm_min_eigenvalue(m: &CMat) -> f64 {
    herm_extremes(m).0
}

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct RawBlocks(Vec<Vec<Vec<[f64; 2]>>>);

impl Serialize for BlockMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = RawBlocks(
            self.blocks
                .iter()
                .map(|b| {
                    (0..b.nrows())
                        .map(|i| (0..b.ncols()).map(|j| [b[(i, j)].re, b[(i, j)].im]).collect())
                        .collect()
                })
                .collect(),
        );
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawBlocks::deserialize(d)?;
        let mut blocks = Vec::with_capacity(raw.0.len());
        for (bi, rows) in raw.0.into_iter().enumerate() {
            let n = rows.len();
            if n == 0 {
                return Err(serde::de::Error::custom(format!("block {bi}: empty block")));
            }
            let mut m = CMat::zeros(n, n);
            for (i, row) in rows.into_iter().enumerate() {
                if row.len() != n {
                    return Err(serde::de::Error::custom(format!(
                        "block {bi}, row {i}: expected {n} entries, found {}",
                        row.len()
                    )));
                }
                for (j, [re, im]) in row.into_iter().enumerate() {
                    m[(i, j)] = C64::new(re, im);
                }
            }
            blocks.push(m);
        }
        Ok(BlockMatrix { blocks })
    }
}

/// Pauli matrices `(σz, σx, σy)` as 2×2 blocks.
pub fn pauli() -> [CMat; 3] {
    let z = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    let x = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let y = CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
    [z, x, y]
}
