//! Finite-dimensional C*-algebras realized as direct sums of full matrix
//! blocks `M_{m_0} ⊕ … ⊕ M_{m_k}`.
//!
//! Elements carry one square complex matrix per block. Everything here is
//! immutable value arithmetic; seminorms and projections built on top live in
//! [`crate::chain`] and [`crate::cxa`].

pub mod eigen;
pub mod matrix;

use crate::error::{Error, Result};
pub use eigen::{hermitian_eigen, hermitian_eigenvalues, HermitianEigen};
pub use matrix::CMatrix;
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// Absolute per-entry tolerance for the self-adjointness predicate.
pub const SELF_ADJOINT_TOL: f64 = 1e-12;

/// Ordered list of block sizes of a direct sum of matrix algebras.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BlockAlgebra {
    sizes: Arc<[usize]>,
}

impl fmt::Debug for BlockAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BlockAlgebra{:?}", &*self.sizes)
    }
}

impl BlockAlgebra {
    pub fn new(sizes: impl Into<Vec<usize>>) -> Result<Self> {
        let sizes: Vec<usize> = sizes.into();
        if sizes.is_empty() {
            return Err(Error::Validation("block list is empty".into()));
        }
        if let Some(pos) = sizes.iter().position(|&m| m == 0) {
            return Err(Error::Validation(format!("block {pos} has size 0")));
        }
        Ok(BlockAlgebra {
            sizes: sizes.into(),
        })
    }

    /// The scalars `C = M_1`.
    pub fn scalars() -> Self {
        BlockAlgebra {
            sizes: Arc::new([1]),
        }
    }

    pub fn full_matrix(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    /// Complex dimension `Σ m_l²`; also the real dimension of the self-adjoint part.
    pub fn dimension(&self) -> usize {
        self.sizes.iter().map(|m| m * m).sum()
    }

    /// Size of the ambient matrix the blocks sit diagonally in, `Σ m_l`.
    pub fn matrix_size(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn is_commutative(&self) -> bool {
        self.sizes.iter().all(|&m| m == 1)
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.sizes.iter().map(|&m| CMatrix::zeros(m)).collect(),
        }
    }

    pub fn unit(&self) -> AlgebraElement {
        self.scalar(1.0)
    }

    pub fn scalar(&self, r: f64) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self
                .sizes
                .iter()
                .map(|&m| CMatrix::identity(m).scale(Complex64::new(r, 0.0)))
                .collect(),
        }
    }

    /// Matrix unit `e_{ij}` inside block `block`.
    pub fn matrix_unit(&self, block: usize, i: usize, j: usize) -> Result<AlgebraElement> {
        let m = *self
            .sizes
            .get(block)
            .ok_or_else(|| Error::Range(format!("block {block} out of range")))?;
        if i >= m || j >= m {
            return Err(Error::Range(format!(
                "entry ({i},{j}) outside block of size {m}"
            )));
        }
        let mut e = self.zero();
        e.blocks[block][(i, j)] = Complex64::new(1.0, 0.0);
        Ok(e)
    }

    pub fn element(&self, blocks: Vec<CMatrix>) -> Result<AlgebraElement> {
        if blocks.len() != self.sizes.len() {
            return Err(Error::Shape(format!(
                "expected {} blocks, got {}",
                self.sizes.len(),
                blocks.len()
            )));
        }
        for (l, (b, &m)) in blocks.iter().zip(self.sizes.iter()).enumerate() {
            if b.size() != m {
                return Err(Error::Shape(format!(
                    "block {l} has size {}, expected {m}",
                    b.size()
                )));
            }
        }
        Ok(AlgebraElement {
            algebra: self.clone(),
            blocks,
        })
    }

    /// Diagonal element from one real vector per block.
    pub fn diagonal(&self, diags: &[&[f64]]) -> Result<AlgebraElement> {
        self.element(
            diags
                .iter()
                .map(|d| CMatrix::from_real_diagonal(d))
                .collect(),
        )
    }

    /// Self-adjoint element from real coordinates, see [`AlgebraElement::sa_coordinates`].
    pub fn from_sa_coordinates(&self, coords: &[f64]) -> Result<AlgebraElement> {
        if coords.len() != self.dimension() {
            return Err(Error::Shape(format!(
                "expected {} coordinates, got {}",
                self.dimension(),
                coords.len()
            )));
        }
        let mut it = coords.iter().copied();
        let mut blocks = Vec::with_capacity(self.num_blocks());
        for &m in self.sizes.iter() {
            let mut b = CMatrix::zeros(m);
            for i in 0..m {
                b[(i, i)] = Complex64::new(it.next().unwrap(), 0.0);
            }
            for i in 0..m {
                for j in (i + 1)..m {
                    let re = it.next().unwrap();
                    let im = it.next().unwrap();
                    b[(i, j)] = Complex64::new(re, im);
                    b[(j, i)] = Complex64::new(re, -im);
                }
            }
            blocks.push(b);
        }
        Ok(AlgebraElement {
            algebra: self.clone(),
            blocks,
        })
    }

    /// Coefficients `c` with `Re Tr(w · a) = c · a.sa_coordinates()` for all self-adjoint `a`,
    /// where `w` is Hermitian and the trace is the unweighted block trace.
    pub fn trace_functional(&self, w: &AlgebraElement) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dimension());
        for b in &w.blocks {
            let m = b.size();
            for i in 0..m {
                out.push(b[(i, i)].re);
            }
            for i in 0..m {
                for j in (i + 1)..m {
                    let wij = (b[(i, j)] + b[(j, i)].conj()) * 0.5;
                    out.push(2.0 * wij.re);
                    out.push(2.0 * wij.im);
                }
            }
        }
        out
    }
}

/// An element of a [`BlockAlgebra`]: one complex matrix per block.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    algebra: BlockAlgebra,
    blocks: Vec<CMatrix>,
}

impl AlgebraElement {
    pub fn algebra(&self) -> &BlockAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, l: usize) -> &CMatrix {
        &self.blocks[l]
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    fn check_same(&self, other: &AlgebraElement) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(Error::Shape(format!(
                "{:?} vs {:?}",
                self.algebra, other.algebra
            )));
        }
        Ok(())
    }

    fn zip(
        &self,
        other: &AlgebraElement,
        f: impl Fn(&CMatrix, &CMatrix) -> CMatrix,
    ) -> Result<Self> {
        self.check_same(other)?;
        Ok(AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<Self> {
        self.zip(other, CMatrix::add)
    }

    pub fn sub(&self, other: &AlgebraElement) -> Result<Self> {
        self.zip(other, CMatrix::sub)
    }

    pub fn mul(&self, other: &AlgebraElement) -> Result<Self> {
        self.zip(other, CMatrix::mul)
    }

    pub fn scale(&self, r: f64) -> Self {
        self.scale_complex(Complex64::new(r, 0.0))
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        self.map(|b| b.scale(s))
    }

    pub fn adjoint(&self) -> Self {
        self.map(CMatrix::adjoint)
    }

    /// Jordan product `(ab + ba)/2`.
    pub fn jordan(&self, other: &AlgebraElement) -> Result<Self> {
        self.zip(other, |a, b| {
            a.mul(b).add(&b.mul(a)).scale(Complex64::new(0.5, 0.0))
        })
    }

    /// Lie product `(ab - ba)/(2i)`.
    pub fn lie(&self, other: &AlgebraElement) -> Result<Self> {
        self.zip(other, |a, b| {
            a.mul(b).sub(&b.mul(a)).scale(Complex64::new(0.0, -0.5))
        })
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(CMatrix::hermitian_defect)
            .fold(0.0, f64::max)
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.hermitian_defect() <= SELF_ADJOINT_TOL
    }

    /// `(a + a*)/2`; the only place elements are symmetrized.
    pub fn self_adjoint_part(&self) -> Self {
        self.map(|b| b.add(&b.adjoint()).scale(Complex64::new(0.5, 0.0)))
    }

    pub fn require_self_adjoint(&self, what: &str) -> Result<()> {
        let d = self.hermitian_defect();
        if d > SELF_ADJOINT_TOL {
            return Err(Error::Domain(format!(
                "{what} is not self-adjoint (defect {d:e})"
            )));
        }
        Ok(())
    }

    /// Per-block spectra with eigenvectors, for self-adjoint elements.
    pub fn spectrum(&self) -> Result<Vec<HermitianEigen>> {
        self.require_self_adjoint("element")?;
        Ok(self.blocks.iter().map(hermitian_eigen).collect())
    }

    /// C*-norm: maximum over blocks of the spectral norm.
    pub fn operator_norm(&self) -> f64 {
        if self.is_self_adjoint() {
            return self
                .blocks
                .iter()
                .map(|b| {
                    hermitian_eigenvalues(b)
                        .iter()
                        .fold(0.0f64, |acc, x| acc.max(x.abs()))
                })
                .fold(0.0, f64::max);
        }
        self.blocks
            .iter()
            .map(|b| {
                let g = b.adjoint().mul(b);
                let top = hermitian_eigenvalues(&g).last().copied().unwrap_or(0.0);
                top.max(0.0).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Real coordinates of the self-adjoint part: per block the diagonal, then
    /// `(Re a_ij, Im a_ij)` for `i < j`.
    pub fn sa_coordinates(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.algebra.dimension());
        for b in &self.blocks {
            let m = b.size();
            for i in 0..m {
                out.push(b[(i, i)].re);
            }
            for i in 0..m {
                for j in (i + 1)..m {
                    let z = (b[(i, j)] + b[(j, i)].conj()) * 0.5;
                    out.push(z.re);
                    out.push(z.im);
                }
            }
        }
        out
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &AlgebraElement) -> Result<f64> {
        Ok(self
            .sub(other)?
            .blocks
            .iter()
            .map(CMatrix::max_abs)
            .fold(0.0, f64::max))
    }

    /// Unweighted sum of block traces.
    pub fn full_trace(&self) -> Complex64 {
        self.blocks.iter().map(CMatrix::trace).sum()
    }

    /// Whether the element is `r·1` for a real `r`, within `tol` per entry.
    pub fn is_real_scalar(&self, tol: f64) -> bool {
        let Some(r) = self.blocks.first().map(|b| b[(0, 0)]) else {
            return true;
        };
        if r.im.abs() > tol {
            return false;
        }
        let s = self.algebra.scalar(r.re);
        self.max_abs_diff(&s).map(|d| d <= tol).unwrap_or(false)
    }
}

/// Tracial state `a ↦ Σ_l t_l Tr(a_l)` with positive block weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceState {
    algebra: BlockAlgebra,
    weights: Vec<f64>,
}

impl TraceState {
    /// Validates positivity and `Σ t_l m_l = 1` within `1e-12`.
    pub fn new(algebra: BlockAlgebra, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != algebra.num_blocks() {
            return Err(Error::Shape(format!(
                "{} trace weights for {} blocks",
                weights.len(),
                algebra.num_blocks()
            )));
        }
        if let Some(l) = weights.iter().position(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::Validation(format!(
                "trace weight {l} is not strictly positive (faithfulness)"
            )));
        }
        let total: f64 = weights
            .iter()
            .zip(algebra.block_sizes())
            .map(|(t, &m)| t * m as f64)
            .sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "trace is not normalized: sum t_l m_l = {total}"
            )));
        }
        Ok(TraceState { algebra, weights })
    }

    /// The normalized trace of the ambient `Σ m_l`-square matrix.
    pub fn uniform(algebra: BlockAlgebra) -> Self {
        let w = 1.0 / algebra.matrix_size() as f64;
        let weights = vec![w; algebra.num_blocks()];
        TraceState { algebra, weights }
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        &self.algebra
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply(&self, a: &AlgebraElement) -> Result<Complex64> {
        if a.algebra() != &self.algebra {
            return Err(Error::Shape(
                "trace and element live on different algebras".into(),
            ));
        }
        Ok(self
            .weights
            .iter()
            .zip(a.blocks())
            .map(|(&t, b)| b.trace() * t)
            .sum())
    }

    /// GNS inner product `⟨a, b⟩ = τ(b* a)`, linear in `a`.
    pub fn gns_inner(&self, a: &AlgebraElement, b: &AlgebraElement) -> Result<Complex64> {
        if a.algebra() != &self.algebra || b.algebra() != &self.algebra {
            return Err(Error::Shape(
                "GNS operands live on different algebras".into(),
            ));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for ((&t, ab), bb) in self.weights.iter().zip(a.blocks()).zip(b.blocks()) {
            let s: Complex64 = ab
                .as_slice()
                .iter()
                .zip(bb.as_slice())
                .map(|(x, y)| y.conj() * x)
                .sum();
            acc += s * t;
        }
        Ok(acc)
    }

    /// The diagonal density `⊕ t_l·1` representing this trace.
    pub fn density(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.algebra.clone(),
            blocks: self
                .weights
                .iter()
                .zip(self.algebra.block_sizes())
                .map(|(&t, &m)| CMatrix::identity(m).scale(Complex64::new(t, 0.0)))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c2() -> BlockAlgebra {
        BlockAlgebra::new(vec![1, 1]).unwrap()
    }

    fn m2() -> BlockAlgebra {
        BlockAlgebra::full_matrix(2).unwrap()
    }

    fn flip() -> AlgebraElement {
        m2().element(vec![CMatrix::from_fn(2, |i, j| {
            Complex64::new(if i != j { 1.0 } else { 0.0 }, 0.0)
        })])
        .unwrap()
    }

    #[test]
    fn rejects_empty_and_zero_blocks() {
        assert!(BlockAlgebra::new(Vec::<usize>::new()).is_err());
        assert!(BlockAlgebra::new(vec![2, 0]).is_err());
        assert_eq!(BlockAlgebra::new(vec![2, 3]).unwrap().dimension(), 13);
    }

    #[test]
    fn unit_is_jordan_neutral() {
        let a = flip().add(&m2().matrix_unit(0, 0, 0).unwrap()).unwrap();
        let j = m2().unit().jordan(&a).unwrap();
        assert!(j.max_abs_diff(&a).unwrap() < 1e-15);
    }

    #[test]
    fn lie_of_element_with_itself_vanishes() {
        let a = flip();
        let l = a.lie(&a).unwrap();
        assert_eq!(l.max_abs_diff(&m2().zero()).unwrap(), 0.0);
    }

    #[test]
    fn diagonal_product_in_c2() {
        let a = c2().diagonal(&[&[1.0], &[2.0]]).unwrap();
        let b = c2().diagonal(&[&[3.0], &[4.0]]).unwrap();
        let p = a.mul(&b).unwrap();
        assert_eq!(p, c2().diagonal(&[&[3.0], &[8.0]]).unwrap());
    }

    #[test]
    fn mismatched_algebras_give_shape_error() {
        let err = c2().unit().add(&m2().unit()).unwrap_err();
        assert_eq!(err.code(), "shape");
    }

    #[test]
    fn jordan_and_lie_keep_self_adjointness() {
        let a = flip();
        let mut b = m2().zero().into_blocks();
        b[0][(0, 1)] = Complex64::new(0.0, 2.0);
        b[0][(1, 0)] = Complex64::new(0.0, -2.0);
        b[0][(1, 1)] = Complex64::new(3.0, 0.0);
        let b = m2().element(b).unwrap();
        assert!(a.jordan(&b).unwrap().is_self_adjoint());
        assert!(a.lie(&b).unwrap().is_self_adjoint());
    }

    #[test]
    fn spectra_of_basic_elements() {
        let id = m2().unit().spectrum().unwrap();
        assert_eq!(id[0].values, vec![1.0, 1.0]);
        let f = flip().spectrum().unwrap();
        assert!((f[0].values[0] + 1.0).abs() < 1e-14 && (f[0].values[1] - 1.0).abs() < 1e-14);
        let d = c2()
            .diagonal(&[&[3.0], &[-4.0]])
            .unwrap()
            .spectrum()
            .unwrap();
        assert_eq!(d[0].values, vec![3.0]);
        assert_eq!(d[1].values, vec![-4.0]);
    }

    #[test]
    fn spectrum_rejects_non_self_adjoint() {
        let e12 = m2().matrix_unit(0, 0, 1).unwrap();
        assert_eq!(e12.spectrum().unwrap_err().code(), "domain");
    }

    #[test]
    fn operator_norms() {
        assert!((m2().unit().operator_norm() - 1.0).abs() < 1e-14);
        let d = c2().diagonal(&[&[3.0], &[-4.0]]).unwrap();
        assert!((d.operator_norm() - 4.0).abs() < 1e-14);
        let n = m2().matrix_unit(0, 0, 1).unwrap().scale(2.0);
        assert!((n.operator_norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn trace_examples() {
        let tau = TraceState::uniform(m2());
        assert_eq!(tau.weights(), &[0.5]);
        let a = m2().diagonal(&[&[1.0, 3.0]]).unwrap();
        assert!((tau.apply(&a).unwrap() - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((tau.apply(&m2().unit()).unwrap().re - 1.0).abs() < 1e-15);
        assert_eq!(
            tau.apply(&m2().matrix_unit(0, 0, 1).unwrap())
                .unwrap()
                .norm(),
            0.0
        );
    }

    #[test]
    fn gns_examples() {
        let tau = TraceState::uniform(m2());
        let one = m2().unit();
        let e11 = m2().matrix_unit(0, 0, 0).unwrap();
        let e22 = m2().matrix_unit(0, 1, 1).unwrap();
        assert!((tau.gns_inner(&one, &one).unwrap().re - 1.0).abs() < 1e-15);
        assert_eq!(tau.gns_inner(&e11, &e22).unwrap().norm(), 0.0);
        assert!((tau.gns_inner(&e11, &e11).unwrap().re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn trace_weights_are_validated() {
        assert!(TraceState::new(c2(), vec![0.5, 0.5]).is_ok());
        assert_eq!(
            TraceState::new(c2(), vec![1.0, 0.0]).unwrap_err().code(),
            "validation"
        );
        assert_eq!(
            TraceState::new(c2(), vec![0.5, 0.6]).unwrap_err().code(),
            "validation"
        );
    }

    #[test]
    fn sa_coordinates_round_trip_and_functional() {
        let alg = BlockAlgebra::new(vec![2, 1]).unwrap();
        let coords = [1.0, -2.0, 0.5, 0.25, 3.0];
        let a = alg.from_sa_coordinates(&coords).unwrap();
        assert!(a.is_self_adjoint());
        assert_eq!(a.sa_coordinates(), coords.to_vec());
        let w = alg
            .from_sa_coordinates(&[0.3, 0.1, -0.7, 0.9, 2.0])
            .unwrap();
        let direct: f64 = w
            .blocks()
            .iter()
            .zip(a.blocks())
            .map(|(x, y)| x.re_trace_product(y))
            .sum();
        let via: f64 = alg
            .trace_functional(&w)
            .iter()
            .zip(&coords)
            .map(|(c, x)| c * x)
            .sum();
        assert!((direct - via).abs() < 1e-14);
    }
}
