//! Built-in instances: 2×2 matrices with a blown-up diagonal, the flattening triangle
//! on ℂ³, and tail-weighted sequences of 2×2 matrices.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::cstar::{Blowup, Growth, SeminormFamily};
use crate::linalg::{pauli, BlockMatrix, CMat, C64};
use crate::metric::BridgePair;
use crate::opsys::{MatrixStar, OperatorSubsystem};
use crate::seminorm::{LinearMapNorm, OpNormAtom, PNorm, SeminormSpec, Weight};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `M₂` with coordinates `(z₀, z₁, z₂, z₃)` in the basis `(I, σz, σx, σy)`.
pub mod two_by_two {
    use super::*;

    pub fn system() -> OperatorSubsystem {
        OperatorSubsystem::full(MatrixStar::new(vec![2]).expect("valid block"))
    }

    /// `max{|(a+d)/2|, n|(a−d)/2|, |b|, |c|}`.
    pub fn norm(n: f64) -> SeminormSpec {
        let rows = vec![
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(n, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)],
        ];
        SeminormSpec::linmap(LinearMapNorm::complex(rows, PNorm::Inf, 1.0))
    }

    /// `Lⁿ(A) = inf_λ ‖A − λ‖_n`.
    pub fn lip(n: f64) -> SeminormSpec {
        SeminormSpec::quotient(norm(n))
    }

    /// Matrices whose diagonal is a multiple of the identity, basis `(I, σx, σy)`.
    pub fn scalar_diagonal() -> OperatorSubsystem {
        let [_, sx, sy] = pauli();
        let amb = MatrixStar::new(vec![2]).expect("valid block");
        let basis = vec![amb.identity(), BlockMatrix::from_blocks(vec![sx]), BlockMatrix::from_blocks(vec![sy])];
        OperatorSubsystem::new(amb, basis).expect("valid basis")
    }

    /// Coordinates of the scalar-diagonal basis inside [`system`].
    pub fn embedding() -> DMatrix<f64> {
        DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
    }

    /// `L¹` restricted to the scalar-diagonal subspace.
    pub fn limit_lip() -> SeminormSpec {
        lip(1.0).pullback(&embedding()).expect("linear atoms pull back")
    }

    /// `max{L¹(A₀), Lⁿ(A), n‖A − A₀‖₁}` on `A₀ ⊕ A`.
    pub fn bridge(n: f64) -> BridgePair {
        let left = scalar_diagonal();
        let right = system();
        let e = embedding();
        let SeminormSpec::Linmap(m1) = norm(1.0) else { unreachable!() };
        let rows: Vec<Vec<C64>> = (0..4)
            .map(|i| {
                let r = m1.row(i);
                let mut out: Vec<C64> = (0..3).map(|j| -(0..4).map(|k| r[k] * e[(k, j)]).sum::<C64>()).collect();
                out.extend(r);
                out
            })
            .collect();
        let coupling = SeminormSpec::linmap(LinearMapNorm::complex(rows, PNorm::Inf, n));
        let bridge = SeminormSpec::Bridge { left: Box::new(limit_lip()), right: Box::new(lip(n)), couplings: vec![coupling], left_dim: 3 };
        BridgePair { left, right, left_spec: limit_lip(), right_spec: lip(n), bridge, embed: e }
    }

    /// `Lⁿ = max{L¹, n|z₁|}` over the parameters.
    pub fn family(params: Vec<f64>) -> SeminormFamily {
        let blow = SeminormSpec::linmap(LinearMapNorm::real(vec![vec![0.0, 1.0, 0.0, 0.0]], PNorm::Inf, 1.0));
        let mut f = SeminormFamily::max_form(system(), lip(1.0), vec![Blowup { atom: blow, growth: Growth::Linear }], params);
        f.member = Arc::new(lip);
        f.witnesses = vec![e12()];
        f
    }

    /// Coordinates of the matrix unit `e₁₂ = (σx + iσy)/2`.
    pub fn e12() -> Vec<C64> {
        vec![c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.5)]
    }

    /// `(Re ω(e₁₂), Im ω(e₁₂))` as hermitian coordinates `σx/2`, `σy/2`.
    pub fn e12_plane() -> Vec<BlockMatrix> {
        let [_, sx, sy] = pauli();
        vec![BlockMatrix::from_blocks(vec![sx * c(0.5, 0.0)]), BlockMatrix::from_blocks(vec![sy * c(0.5, 0.0)])]
    }
}

/// `ℂ³` with coordinates `(x₀, x₁, x₂)`, `(a, b, c) = (x₀ + x₁, x₀ + x₂, x₀)`.
pub mod flattening_triangle {
    use super::*;

    pub fn system() -> OperatorSubsystem {
        OperatorSubsystem::full(MatrixStar::new(vec![1, 1, 1]).expect("valid blocks"))
    }

    /// `L_n = ‖((a − b)/2, n((a + b)/2 − c))‖₂`.
    pub fn lip(n: f64) -> SeminormSpec {
        SeminormSpec::linmap(LinearMapNorm::real(vec![vec![0.0, 0.5, -0.5], vec![0.0, 0.5 * n, 0.5 * n]], PNorm::Two, 1.0))
    }

    /// `ℂ²` with coordinates `(y₀, y₁)`, `(α, β) = (y₀ + y₁, y₀)`.
    pub fn limit_system() -> OperatorSubsystem {
        OperatorSubsystem::full(MatrixStar::new(vec![1, 1]).expect("valid blocks"))
    }

    /// `L_∞(α, β) = |α − β|/2`.
    pub fn limit_lip() -> SeminormSpec {
        SeminormSpec::linmap(LinearMapNorm::real(vec![vec![0.0, 0.5]], PNorm::Inf, 1.0))
    }

    /// `(α, β) ↦ (α, β, (α + β)/2)` on coordinates.
    pub fn embedding() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 0.0, 0.5, 0.0, -0.5])
    }

    /// `max{L_∞(α, β), L_n(a, b, c), n|a − α|, n|b − β|, n|c − (α + β)/2|}`.
    pub fn bridge(n: f64) -> BridgePair {
        let rows = vec![vec![-1.0, -1.0, 1.0, 1.0, 0.0], vec![-1.0, 0.0, 1.0, 0.0, 1.0], vec![-1.0, -0.5, 1.0, 0.0, 0.0]];
        let coupling = SeminormSpec::linmap(LinearMapNorm::real(rows, PNorm::Inf, n));
        let bridge = SeminormSpec::Bridge { left: Box::new(limit_lip()), right: Box::new(lip(n)), couplings: vec![coupling], left_dim: 2 };
        BridgePair { left: limit_system(), right: system(), left_spec: limit_lip(), right_spec: lip(n), bridge, embed: embedding() }
    }

    pub fn family(params: Vec<f64>) -> SeminormFamily {
        let base = SeminormSpec::linmap(LinearMapNorm::real(vec![vec![0.0, 0.5, -0.5]], PNorm::Inf, 1.0));
        let blow = SeminormSpec::linmap(LinearMapNorm::real(vec![vec![0.0, 0.5, 0.5]], PNorm::Inf, 1.0));
        let mut f = SeminormFamily::max_form(system(), base, vec![Blowup { atom: blow, growth: Growth::Linear }], params);
        f.member = Arc::new(lip);
        f.witnesses = vec![witness()];
        f
    }

    /// `(a, b, c) = (1, −1, 0)`.
    pub fn witness() -> Vec<C64> {
        vec![c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]
    }
}

/// `K`-tuples of 2×2 matrices with `|||A||| = maxₖ k‖Aₖ‖`.
///
/// Basis: `I`, then `σz, σx, σy` in block `k` for each `k`, then the block units
/// `I_k` for `k ≥ 2`; `4K` coordinates in all.
pub mod tail_weighted {
    use super::*;

    pub fn system(cutoff: usize) -> OperatorSubsystem {
        let amb = MatrixStar::new(vec![2; cutoff]).expect("valid blocks");
        let at = |k: usize, m: &CMat| {
            let mut b = amb.zeros();
            b.blocks[k] = m.clone();
            b
        };
        let mut basis = vec![amb.identity()];
        for k in 0..cutoff {
            for p in pauli() {
                basis.push(at(k, &p));
            }
        }
        for k in 1..cutoff {
            basis.push(at(k, &CMat::identity(2, 2)));
        }
        OperatorSubsystem::new(amb, basis).expect("valid basis")
    }

    /// Index of the `σz` coordinate of block `k` (1-based).
    pub fn sigma_z(k: usize) -> usize {
        1 + 3 * (k - 1)
    }

    pub fn triple_norm(cutoff: usize) -> SeminormSpec {
        let sys = system(cutoff);
        SeminormSpec::Opnorm(OpNormAtom {
            images: sys.basis().to_vec(),
            block_weights: Some((1..=cutoff).map(|k| k as f64).collect()),
            weight: Weight::Finite(1.0),
        })
    }

    /// `L(A) = min_λ |||A − λ|||`.
    pub fn lip_base(cutoff: usize) -> SeminormSpec {
        SeminormSpec::quotient(triple_norm(cutoff))
    }

    /// `ℓ_k(A) = k³|a_k − d_k|` (1-based `k`).
    pub fn ell(cutoff: usize, k: usize) -> SeminormSpec {
        let mut row = vec![0.0; 4 * cutoff];
        row[sigma_z(k)] = 2.0;
        SeminormSpec::linmap(LinearMapNorm::real(vec![row], PNorm::Inf, (k as f64).powi(3)))
    }

    /// `L_n = max{L, ℓ_k : k < n}`; `n = ∞` keeps every `ℓ_k`.
    pub fn lip(cutoff: usize, n: f64) -> SeminormSpec {
        let mut children = vec![lip_base(cutoff)];
        children.extend((1..=cutoff).filter(|&k| (k as f64) < n).map(|k| ell(cutoff, k)));
        if children.len() == 1 { children.pop().unwrap() } else { SeminormSpec::max(children) }
    }

    /// `max{L_∞(A), L_n(B), n‖A − B‖}` on `A ⊕ B`.
    pub fn bridge(cutoff: usize, n: f64) -> BridgePair {
        let sys = system(cutoff);
        let mut images: Vec<BlockMatrix> = sys.basis().iter().map(|b| b.scale_re(-1.0)).collect();
        images.extend(sys.basis().iter().cloned());
        let coupling = SeminormSpec::Opnorm(OpNormAtom { images, block_weights: None, weight: Weight::Finite(n) });
        let (ls, rs) = (lip(cutoff, f64::INFINITY), lip(cutoff, n));
        let bridge = SeminormSpec::Bridge { left: Box::new(ls.clone()), right: Box::new(rs.clone()), couplings: vec![coupling], left_dim: sys.dim() };
        let d = sys.dim();
        BridgePair { left: sys.clone(), right: sys, left_spec: ls, right_spec: rs, bridge, embed: DMatrix::identity(d, d) }
    }

    pub fn family(cutoff: usize, params: Vec<f64>) -> SeminormFamily {
        let blowups = (1..=cutoff).map(|k| Blowup { atom: ell(cutoff, k), growth: Growth::StepAt(k as f64) }).collect();
        let mut f = SeminormFamily::max_form(system(cutoff), lip_base(cutoff), blowups, params);
        f.member = Arc::new(move |n| lip(cutoff, n));
        f.witnesses = vec![witness(cutoff)];
        f
    }

    /// `A_k = e₁₂/k`.
    pub fn witness(cutoff: usize) -> Vec<C64> {
        let mut z = vec![c(0.0, 0.0); 4 * cutoff];
        for k in 1..=cutoff {
            let s = sigma_z(k);
            z[s + 1] = c(0.5 / k as f64, 0.0);
            z[s + 2] = c(0.0, 0.5 / k as f64);
        }
        z
    }

    pub fn witness_adjoint(cutoff: usize) -> Vec<C64> {
        witness(cutoff).iter().map(|z| z.conj()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witnesses_are_matrix_units() {
        let s = two_by_two::system();
        let a = s.element_c(&two_by_two::e12());
        assert!((a.blocks[0][(0, 1)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(a.blocks[0][(1, 0)].norm() < 1e-15);
        let k = 5;
        let t = tail_weighted::system(k);
        let a = t.element_c(&tail_weighted::witness(k));
        for (i, b) in a.blocks.iter().enumerate() {
            assert!((b[(0, 1)] - c(1.0 / (i + 1) as f64, 0.0)).norm() < 1e-15);
            assert!(b[(1, 0)].norm() + b[(0, 0)].norm() + b[(1, 1)].norm() < 1e-15);
        }
    }

    #[test]
    fn flattening_embedding_matches_coordinates() {
        // ι(α, β) = (α, β, (α+β)/2) with α = y₀ + y₁, β = y₀
        let (y0, y1) = (0.3, -1.1);
        let x = flattening_triangle::embedding() * nalgebra::DVector::from_vec(vec![y0, y1]);
        let (a, b, cc) = (x[0] + x[1], x[0] + x[2], x[0]);
        assert!((a - (y0 + y1)).abs() < 1e-15 && (b - y0).abs() < 1e-15 && (cc - (a + b) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn blown_up_norm_matches_matrix_entries() {
        // ‖A‖_n for A = [[a, b], [c, d]] from its entries
        let s = two_by_two::system();
        let z = vec![c(0.7, 0.1), c(-0.2, 0.3), c(0.4, -0.5), c(0.9, 0.2)];
        let m = &s.element_c(&z).blocks[0];
        let n = 3.0;
        let want = ((m[(0, 0)] + m[(1, 1)]) / 2.0)
            .norm()
            .max(n * ((m[(0, 0)] - m[(1, 1)]) / 2.0).norm())
            .max(m[(0, 1)].norm())
            .max(m[(1, 0)].norm());
        let got = two_by_two::norm(n).eval_general(&z, &s.unit_coords()).unwrap();
        assert!((got - want).abs() < 1e-14);
    }
}
