//! Operator systems realised inside finite direct sums of matrix algebras.
//!
//! An [`OperatorSubsystem`] is a real span of hermitian block matrices whose first
//! basis vector is the identity. Hermitian elements are real coordinate vectors over
//! that basis, general elements complex ones.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::line::golden_min;
use crate::linalg::{pauli, BlockMatrix, CMat, C64, ONE, ZERO};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixStar {
    pub block_dims: Vec<usize>,
}

impl MatrixStar {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(Error::InvalidSystem("block sizes must be positive and non-empty".into()));
        }
        Ok(Self { block_dims })
    }

    pub fn identity(&self) -> BlockMatrix {
        BlockMatrix::identity(&self.block_dims)
    }

    pub fn zeros(&self) -> BlockMatrix {
        BlockMatrix::zeros(&self.block_dims)
    }

    /// Real dimension of the hermitian part, `Σ dᵢ²`.
    pub fn real_dim(&self) -> usize {
        self.block_dims.iter().map(|d| d * d).sum()
    }

    pub fn is_commutative(&self) -> bool {
        self.block_dims.iter().all(|&d| d == 1)
    }

    pub fn check(&self, a: &BlockMatrix) -> Result<()> {
        if a.dims() != self.block_dims {
            return Err(Error::Dimension(format!(
                "element has blocks {:?}, ambient has {:?}",
                a.dims(),
                self.block_dims
            )));
        }
        Ok(())
    }

    /// Hermitian basis of the whole algebra: identity, diagonal units (all but the last),
    /// then symmetric and antisymmetric off-diagonal pairs. 2×2 blocks use Pauli matrices.
    pub fn standard_basis(&self) -> Vec<BlockMatrix> {
        let dims = &self.block_dims;
        let mut basis = vec![self.identity()];
        let single_m2 = dims.len() == 1 && dims[0] == 2;
        if single_m2 {
            for p in pauli() {
                basis.push(BlockMatrix::from_blocks(vec![p]));
            }
            return basis;
        }
        let unit = |blk: usize, i: usize, j: usize, z: C64| {
            let mut m = self.zeros();
            m.blocks[blk][(i, j)] = z;
            m
        };
        let total_diag: usize = dims.iter().sum();
        let mut seen = 0;
        for (blk, &d) in dims.iter().enumerate() {
            for i in 0..d {
                seen += 1;
                if seen < total_diag {
                    basis.push(unit(blk, i, i, ONE));
                }
            }
        }
        for (blk, &d) in dims.iter().enumerate() {
            for i in 0..d {
                for j in (i + 1)..d {
                    basis.push(unit(blk, i, j, ONE).add(&unit(blk, j, i, ONE)));
                    basis.push(unit(blk, i, j, -crate::linalg::I).add(&unit(blk, j, i, crate::linalg::I)));
                }
            }
        }
        basis
    }
}

/// Unital self-adjoint subspace with a hermitian basis `b₀ = e, b₁, …`.
#[derive(Clone, Debug)]
pub struct OperatorSubsystem {
    ambient: MatrixStar,
    basis: Vec<BlockMatrix>,
    gram_chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

#[derive(Serialize, Deserialize)]
struct RawSystem {
    blocks: Vec<usize>,
    basis: Vec<BlockMatrix>,
}

impl Serialize for OperatorSubsystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawSystem { blocks: self.ambient.block_dims.clone(), basis: self.basis.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperatorSubsystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSystem::deserialize(d)?;
        let ambient = MatrixStar::new(raw.blocks).map_err(serde::de::Error::custom)?;
        OperatorSubsystem::new(ambient, raw.basis).map_err(serde::de::Error::custom)
    }
}

const HERM_TOL: f64 = 1e-12;

impl OperatorSubsystem {
    pub fn new(ambient: MatrixStar, basis: Vec<BlockMatrix>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::InvalidSystem("basis is empty".into()));
        }
        for (k, b) in basis.iter().enumerate() {
            ambient.check(b).map_err(|e| Error::InvalidSystem(format!("basis[{k}]: {e}")))?;
            if !b.is_hermitian(HERM_TOL) {
                return Err(Error::InvalidSystem(format!("basis[{k}] is not hermitian")));
            }
        }
        if basis[0].max_abs_diff(&ambient.identity()) > HERM_TOL {
            return Err(Error::InvalidSystem("basis[0] must be the identity".into()));
        }
        let n = basis.len();
        let gram = DMatrix::from_fn(n, n, |i, j| basis[i].hs_inner(&basis[j]).re);
        let ev = gram.clone().symmetric_eigen().eigenvalues;
        let max = ev.iter().copied().fold(0.0, f64::max);
        let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= 1e-12 * max.max(1.0) {
            return Err(Error::InvalidSystem("basis is linearly dependent".into()));
        }
        let gram_chol = gram.cholesky().ok_or_else(|| Error::InvalidSystem("singular Gram matrix".into()))?;
        Ok(Self { ambient, basis, gram_chol })
    }

    /// The whole ambient algebra with its standard hermitian basis.
    pub fn full(ambient: MatrixStar) -> Self {
        let basis = ambient.standard_basis();
        Self::new(ambient, basis).expect("standard basis is valid")
    }

    pub fn ambient(&self) -> &MatrixStar {
        &self.ambient
    }

    pub fn basis(&self) -> &[BlockMatrix] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn unit_coords(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.dim()];
        u[0] = 1.0;
        u
    }

    pub fn element(&self, x: &[f64]) -> BlockMatrix {
        debug_assert_eq!(x.len(), self.dim());
        let mut out = self.ambient.zeros();
        for (c, b) in x.iter().zip(&self.basis) {
            if *c != 0.0 {
                out.axpy(C64::new(*c, 0.0), b);
            }
        }
        out
    }

    pub fn element_c(&self, z: &[C64]) -> BlockMatrix {
        debug_assert_eq!(z.len(), self.dim());
        let mut out = self.ambient.zeros();
        for (c, b) in z.iter().zip(&self.basis) {
            if *c != ZERO {
                out.axpy(*c, b);
            }
        }
        out
    }

    /// Least-squares complex coordinates of `a` and the Hilbert–Schmidt residual.
    pub fn coords_of(&self, a: &BlockMatrix) -> (Vec<C64>, f64) {
        let rhs: Vec<C64> = self.basis.iter().map(|b| b.hs_inner(a)).collect();
        let re = self.gram_chol.solve(&DVector::from_iterator(rhs.len(), rhs.iter().map(|z| z.re)));
        let im = self.gram_chol.solve(&DVector::from_iterator(rhs.len(), rhs.iter().map(|z| z.im)));
        let z: Vec<C64> = re.iter().zip(im.iter()).map(|(r, i)| C64::new(*r, *i)).collect();
        let resid = a.sub(&self.element_c(&z)).hs_norm();
        (z, resid)
    }

    /// Real coordinates of a hermitian element, or an error if it is not in the span.
    pub fn herm_coords_of(&self, a: &BlockMatrix, tol: f64) -> Result<Vec<f64>> {
        let (z, resid) = self.coords_of(a);
        let scale = a.hs_norm().max(1.0);
        if resid > tol * scale || z.iter().any(|c| c.im.abs() > tol * scale) {
            return Err(Error::Dimension(format!("element is not a hermitian member of the span (residual {resid:.3e})")));
        }
        Ok(z.iter().map(|c| c.re).collect())
    }

    pub fn contains(&self, a: &BlockMatrix, tol: f64) -> bool {
        self.ambient.check(a).is_ok() && self.coords_of(a).1 <= tol * a.hs_norm().max(1.0)
    }

    /// Hilbert–Schmidt orthonormal hermitian basis of the span (Gram–Schmidt from `e`).
    pub fn orthonormal_basis(&self) -> Vec<BlockMatrix> {
        let mut out: Vec<BlockMatrix> = Vec::with_capacity(self.dim());
        for b in &self.basis {
            let mut v = b.clone();
            for _ in 0..2 {
                for q in &out {
                    let c = q.hs_inner(&v).re;
                    v.axpy(C64::new(-c, 0.0), q);
                }
            }
            let n = v.hs_norm();
            out.push(v.scale_re(1.0 / n));
        }
        out
    }

    /// `inf { r : −r e ≤ a ≤ r e }` for hermitian coordinates.
    pub fn order_norm(&self, x: &[f64]) -> f64 {
        let (lo, hi) = self.element(x).spectral_range();
        lo.abs().max(hi.abs())
    }

    /// Order-unit norm for general coordinates; falls back to the operator norm for
    /// non-hermitian elements and flags it.
    pub fn order_norm_general(&self, z: &[C64]) -> NormValue {
        let a = self.element_c(z);
        if a.is_hermitian(1e-12 * a.hs_norm().max(1.0)) {
            let (lo, hi) = a.spectral_range();
            NormValue { value: lo.abs().max(hi.abs()), general: false }
        } else {
            NormValue { value: a.op_norm(), general: true }
        }
    }

    /// `inf_λ ‖a − λe‖` over real λ, by golden-section search.
    pub fn osc_seminorm(&self, x: &[f64]) -> f64 {
        let a = self.element(x);
        let norm = {
            let (lo, hi) = a.spectral_range();
            lo.abs().max(hi.abs())
        };
        if norm == 0.0 {
            return 0.0;
        }
        let e = self.ambient.identity();
        let f = |lam: f64| {
            let (lo, hi) = a.sub(&e.scale_re(lam)).spectral_range();
            lo.abs().max(hi.abs())
        };
        let tol = 1e-13 * norm;
        golden_min(f, -norm, norm, tol, 400).map(|(_, v)| v).unwrap_or(norm)
    }

    /// `ω(a)` for hermitian coordinates; errors if `ω` is not unital.
    pub fn kadison_hat(&self, x: &[f64], omega: &State) -> Result<f64> {
        self.ambient.check(&omega.rho)?;
        let tr = omega.trace();
        if (tr - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("state has trace {tr}, expected 1")));
        }
        Ok(omega.eval(&self.element(x)).re)
    }

    /// Coordinates of a state as a real functional on the hermitian basis.
    pub fn functional_of(&self, omega: &State) -> Vec<f64> {
        self.basis.iter().map(|b| omega.eval(b).re).collect()
    }

    /// Distance of products of basis elements from the span.
    ///
    /// Uses an orthonormal basis `qᵢ`; the defect is the Hilbert–Schmidt norm of the
    /// bilinear map `(a, b) ↦ P⊥(ab)`, i.e. `sqrt(Σᵢⱼ ‖P⊥(qᵢqⱼ)‖²)`, which does not depend on
    /// the basis chosen. The witness is the pair with the largest residual.
    pub fn product_defect(&self) -> ProductDefect {
        if self.dim() == self.ambient.real_dim() {
            return ProductDefect { defect: 0.0, witness_pair: (0, 0), witness_residual: 0.0 };
        }
        let q = self.orthonormal_basis();
        let mut total = 0.0;
        let mut best = (0.0, (0, 0));
        for i in 0..q.len() {
            for j in 0..q.len() {
                let p = q[i].mul(&q[j]);
                let mut r = p.clone();
                for qk in &q {
                    let c = qk.hs_inner(&p);
                    r.axpy(-c, qk);
                }
                let res = r.hs_norm();
                total += res * res;
                if res > best.0 + 1e-15 {
                    best = (res, (i, j));
                }
            }
        }
        let defect = total.sqrt();
        let defect = if defect <= PRODUCT_TOL { 0.0 } else { defect };
        ProductDefect { defect, witness_pair: best.1, witness_residual: best.0 }
    }

    pub fn is_subalgebra(&self) -> bool {
        self.product_defect().defect <= PRODUCT_TOL
    }

    /// Subsystem spanned by hermitian coordinate vectors (the first must be the unit).
    pub fn subsystem(&self, coords: &[Vec<f64>]) -> Result<OperatorSubsystem> {
        let basis = coords.iter().map(|x| self.element(x)).collect();
        OperatorSubsystem::new(self.ambient.clone(), basis)
    }
}

/// Membership tolerance for products in the span.
pub const PRODUCT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormValue {
    pub value: f64,
    pub general: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductDefect {
    pub defect: f64,
    /// Indices into the orthonormalised basis.
    pub witness_pair: (usize, usize),
    pub witness_residual: f64,
}

/// A state given by density blocks, one per ambient block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State {
    pub rho: BlockMatrix,
}

impl State {
    /// Validates positivity and unit trace.
    pub fn new(rho: BlockMatrix) -> Result<Self> {
        if !rho.is_hermitian(1e-10) {
            return Err(Error::InvalidState("density is not hermitian".into()));
        }
        let min = rho.blocks.iter().map(crate::linalg::herm_min_eigenvalue).fold(f64::INFINITY, f64::min);
        if min < -1e-9 {
            return Err(Error::InvalidState(format!("density has eigenvalue {min}")));
        }
        let s = State { rho };
        if (s.trace() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("trace {} differs from 1", s.trace())));
        }
        Ok(s)
    }

    /// Vector state `⟨v, · v⟩` on one block; `v` is normalised here.
    pub fn pure(dims: &[usize], block: usize, v: &[C64]) -> Self {
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut rho = BlockMatrix::zeros(dims);
        let d = dims[block];
        rho.blocks[block] = CMat::from_fn(d, d, |i, j| v[i] * v[j].conj() / (n * n));
        State { rho }
    }

    /// Point evaluation at basis vector `i` of `block`.
    pub fn vertex(dims: &[usize], block: usize, i: usize) -> Self {
        let mut v = vec![ZERO; dims[block]];
        v[i] = ONE;
        Self::pure(dims, block, &v)
    }

    /// `(I + u·σ)/2` on a 2×2 block, for `|u| ≤ 1`; Pauli order `(σz, σx, σy)`.
    pub fn bloch(dims: &[usize], block: usize, u: [f64; 3]) -> Self {
        let [z, x, y] = pauli();
        let m = (CMat::identity(2, 2) + z * C64::new(u[0], 0.0) + x * C64::new(u[1], 0.0) + y * C64::new(u[2], 0.0))
            * C64::new(0.5, 0.0);
        let mut rho = BlockMatrix::zeros(dims);
        rho.blocks[block] = m;
        State { rho }
    }

    pub fn maximally_mixed(dims: &[usize]) -> Self {
        let n: usize = dims.iter().sum();
        State { rho: BlockMatrix::identity(dims).scale_re(1.0 / n as f64) }
    }

    pub fn trace(&self) -> f64 {
        self.rho.blocks.iter().map(|b| b.trace().re).sum()
    }

    /// `Σᵢ tr(ρᵢ aᵢ)`.
    pub fn eval(&self, a: &BlockMatrix) -> C64 {
        self.rho
            .blocks
            .iter()
            .zip(&a.blocks)
            .map(|(r, b)| r.iter().zip(b.transpose().iter()).map(|(x, y)| x * y).sum::<C64>())
            .sum()
    }

    /// Convex combination `(1 − t)·self + t·other`.
    pub fn mix(&self, other: &State, t: f64) -> State {
        State { rho: self.rho.scale_re(1.0 - t).add(&other.rho.scale_re(t)) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c3() -> OperatorSubsystem {
        OperatorSubsystem::full(MatrixStar::new(vec![1, 1, 1]).unwrap())
    }

    fn m2() -> OperatorSubsystem {
        OperatorSubsystem::full(MatrixStar::new(vec![2]).unwrap())
    }

    fn coords(s: &OperatorSubsystem, a: &BlockMatrix) -> Vec<f64> {
        s.herm_coords_of(a, 1e-12).unwrap()
    }

    #[test]
    fn order_norm_examples() {
        let s = c3();
        assert_eq!(s.order_norm(&s.unit_coords()), 1.0);
        let c2 = OperatorSubsystem::full(MatrixStar::new(vec![1, 1]).unwrap());
        assert!((c2.order_norm(&coords(&c2, &BlockMatrix::diag(&[2.0, -1.0]))) - 2.0).abs() < 1e-14);
        let m = m2();
        let x = [0.0, 0.0, 0.5, 0.0];
        assert!((m.order_norm(&x) - 0.5).abs() < 1e-14);
        let ev = crate::linalg::herm_eigenvalues(&m.element(&x).blocks[0]);
        assert!((ev[0] + 0.5).abs() < 1e-14 && (ev[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn osc_examples() {
        let s = c3();
        assert!(s.osc_seminorm(&s.unit_coords()).abs() < 1e-12);
        let c2 = OperatorSubsystem::full(MatrixStar::new(vec![1, 1]).unwrap());
        assert!((c2.osc_seminorm(&coords(&c2, &BlockMatrix::diag(&[1.0, 0.0]))) - 0.5).abs() < 1e-12);
        assert!((s.osc_seminorm(&coords(&s, &BlockMatrix::diag(&[3.0, 1.0, -1.0]))) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn general_element_is_flagged() {
        let m = m2();
        let z = [ZERO, ZERO, C64::new(0.5, 0.0), C64::new(0.0, 0.5)];
        let n = m.order_norm_general(&z);
        assert!(n.general);
        assert!((n.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kadison_examples() {
        let s = c3();
        let dims = [1, 1, 1];
        let w = State::vertex(&dims, 0, 0);
        assert!((s.kadison_hat(&s.unit_coords(), &w).unwrap() - 1.0).abs() < 1e-14);
        let a = coords(&s, &BlockMatrix::diag(&[5.0, 0.0, 0.0]));
        assert!((s.kadison_hat(&a, &w).unwrap() - 5.0).abs() < 1e-12);
        let m = m2();
        let mix = State::maximally_mixed(&[2]);
        let e11 = BlockMatrix::from_blocks(vec![CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO])]);
        assert!((m.kadison_hat(&coords(&m, &e11), &mix).unwrap() - 0.5).abs() < 1e-14);
        let bad = State { rho: BlockMatrix::diag(&[0.5, 0.0, 0.0]) };
        assert!(s.kadison_hat(&a, &bad).is_err());
    }

    #[test]
    fn product_defect_examples() {
        assert_eq!(m2().product_defect().defect, 0.0);
        let s = c3();
        let a0 = s
            .subsystem(&[s.unit_coords(), coords(&s, &BlockMatrix::diag(&[1.0, -1.0, 0.0]))])
            .unwrap();
        assert!(a0.product_defect().defect > 1e-3);
        let m = m2();
        let c0 = m.subsystem(&[m.unit_coords(), vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]]).unwrap();
        let d = c0.product_defect();
        assert!(d.defect > 1e-3);
        let (i, j) = d.witness_pair;
        assert!(i != 0 && j != 0 && i != j);
        let e12 = BlockMatrix::from_blocks(vec![CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])]);
        let e11 = e12.mul(&e12.adjoint());
        assert!(!c0.contains(&e11, 1e-10));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = m2();
        let txt = serde_json::to_string(&s).unwrap();
        let back: OperatorSubsystem = serde_json::from_str(&txt).unwrap();
        assert_eq!(back.basis(), s.basis());
        let bad = r#"{"blocks":[1,1],"basis":[[[[[1,0]]],[[[0,0]]]]]}"#;
        assert!(serde_json::from_str::<OperatorSubsystem>(bad).is_err());
    }
}
