//! Functions from a finite metric space into the top algebra of an AF chain,
//! i.e. elements of `C(X, A_T)`, together with the seminorms that make
//! `C(X, A)` a quantum metric space.
//!
//! The norm on `C(X, A)` is always the sup over points of the C*-norm.

use crate::algebra::AlgebraElement;
use crate::chain::AfChain;
use crate::error::{Error, Result};
use crate::spaces::{product_1_metric, FiniteMetricSpace};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct CxaElement {
    space: Arc<FiniteMetricSpace>,
    chain: Arc<AfChain>,
    values: Vec<AlgebraElement>,
}

impl PartialEq for CxaElement {
    fn eq(&self, other: &Self) -> bool {
        same_context(&self.space, &self.chain, &other.space, &other.chain)
            && self.values == other.values
    }
}

pub(crate) fn same_context(
    s1: &Arc<FiniteMetricSpace>,
    c1: &Arc<AfChain>,
    s2: &Arc<FiniteMetricSpace>,
    c2: &Arc<AfChain>,
) -> bool {
    (Arc::ptr_eq(s1, s2) || s1 == s2) && (Arc::ptr_eq(c1, c2) || c1 == c2)
}

impl CxaElement {
    pub fn new(
        space: Arc<FiniteMetricSpace>,
        chain: Arc<AfChain>,
        values: Vec<AlgebraElement>,
    ) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Shape(format!(
                "{} values for {} points",
                values.len(),
                space.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| v.algebra() != chain.top()) {
            return Err(Error::Shape(format!(
                "value at point {} does not live on the top algebra",
                space.labels()[i]
            )));
        }
        Ok(CxaElement {
            space,
            chain,
            values,
        })
    }

    pub fn constant(
        space: Arc<FiniteMetricSpace>,
        chain: Arc<AfChain>,
        a: &AlgebraElement,
    ) -> Result<Self> {
        let values = vec![a.clone(); space.len()];
        Self::new(space, chain, values)
    }

    pub fn unit(space: Arc<FiniteMetricSpace>, chain: Arc<AfChain>) -> Self {
        let one = chain.top().unit();
        let values = vec![one; space.len()];
        CxaElement {
            space,
            chain,
            values,
        }
    }

    /// `x ↦ f(x)·1`.
    pub fn scalar_function(
        space: Arc<FiniteMetricSpace>,
        chain: Arc<AfChain>,
        f: &[f64],
    ) -> Result<Self> {
        let one = chain.top().unit();
        construct_tensor(space, chain, f, &one)
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn chain(&self) -> &Arc<AfChain> {
        &self.chain
    }

    pub fn values(&self) -> &[AlgebraElement] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &AlgebraElement {
        &self.values[i]
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.values.iter().all(AlgebraElement::is_self_adjoint)
    }

    fn require_self_adjoint(&self) -> Result<()> {
        for (v, label) in self.values.iter().zip(self.space.labels()) {
            v.require_self_adjoint(&format!("value at point {label}"))?;
        }
        Ok(())
    }

    fn check_same(&self, other: &CxaElement) -> Result<()> {
        if !same_context(&self.space, &self.chain, &other.space, &other.chain) {
            return Err(Error::Shape("elements of different C(X, A)".into()));
        }
        Ok(())
    }

    fn zip(
        &self,
        other: &CxaElement,
        f: impl Fn(&AlgebraElement, &AlgebraElement) -> Result<AlgebraElement>,
    ) -> Result<Self> {
        self.check_same(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.with_values(values))
    }

    fn with_values(&self, values: Vec<AlgebraElement>) -> Self {
        CxaElement {
            space: self.space.clone(),
            chain: self.chain.clone(),
            values,
        }
    }

    pub fn add(&self, other: &CxaElement) -> Result<Self> {
        self.zip(other, AlgebraElement::add)
    }

    pub fn sub(&self, other: &CxaElement) -> Result<Self> {
        self.zip(other, AlgebraElement::sub)
    }

    pub fn mul(&self, other: &CxaElement) -> Result<Self> {
        self.zip(other, AlgebraElement::mul)
    }

    pub fn jordan(&self, other: &CxaElement) -> Result<Self> {
        self.zip(other, AlgebraElement::jordan)
    }

    pub fn lie(&self, other: &CxaElement) -> Result<Self> {
        self.zip(other, AlgebraElement::lie)
    }

    pub fn scale(&self, r: f64) -> Self {
        self.with_values(self.values.iter().map(|v| v.scale(r)).collect())
    }

    /// `max_x ‖g(x)‖`.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .map(AlgebraElement::operator_norm)
            .fold(0.0, f64::max)
    }

    /// True when every value equals the same real scalar, within `tol` per entry.
    pub fn is_real_scalar(&self, tol: f64) -> bool {
        let first = &self.values[0];
        first.is_real_scalar(tol)
            && self
                .values
                .iter()
                .all(|v| v.max_abs_diff(first).map(|d| d <= tol).unwrap_or(false))
    }
}

/// `E^X_n(g)(x) = E_n(g(x))`.
pub fn ex_conditional_expectation(g: &CxaElement, n: usize) -> Result<CxaElement> {
    let values = g
        .values
        .iter()
        .map(|v| g.chain.conditional_expectation(n, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(g.with_values(values))
}

/// `max_{x≠y} ‖g(x) − g(y)‖ / d(x, y)`; coincident points are skipped (`0/0 = 0`).
pub fn slope_seminorm(g: &CxaElement) -> Result<f64> {
    g.require_self_adjoint()?;
    let n = g.space.len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = g.values[i].sub(&g.values[j])?.operator_norm();
            best = best.max(diff / g.space.d(i, j));
        }
    }
    Ok(best)
}

/// `max_n ‖g − E^X_n g‖_∞ / β(n)` over `n = 0..=T`.
pub fn beta_seminorm(g: &CxaElement) -> Result<f64> {
    g.require_self_adjoint()?;
    let beta = g.chain.beta();
    let mut best = 0.0f64;
    for n in 0..g.chain.depth() {
        best = best.max(expectation_gap(g, n)? / beta[n]);
    }
    Ok(best)
}

/// `‖g − E^X_n g‖_∞`.
pub fn expectation_gap(g: &CxaElement, n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for v in &g.values {
        let e = g.chain.conditional_expectation(n, v)?;
        worst = worst.max(v.sub(&e)?.operator_norm());
    }
    Ok(worst)
}

/// The Lip-norm `slope + β-seminorm` on `sa C(X, A)`.
pub fn total_lip(g: &CxaElement) -> Result<f64> {
    Ok(slope_seminorm(g)? + beta_seminorm(g)?)
}

/// `slope(g) + ‖g − E^X_n g‖_∞ / r`.
pub fn finite_r_lip(g: &CxaElement, n: usize, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    g.require_self_adjoint()?;
    Ok(slope_seminorm(g)? + expectation_gap(g, n)? / r)
}

/// `x ↦ f(x)·a`.
pub fn construct_tensor(
    space: Arc<FiniteMetricSpace>,
    chain: Arc<AfChain>,
    f: &[f64],
    a: &AlgebraElement,
) -> Result<CxaElement> {
    if f.len() != space.len() {
        return Err(Error::Shape(format!(
            "scalar function has {} values for {} points",
            f.len(),
            space.len()
        )));
    }
    let values = f.iter().map(|&s| a.scale(s)).collect();
    CxaElement::new(space, chain, values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeibnizCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl LeibnizCheck {
    /// `|lhs − rhs| ≤ tol·(1 + rhs)`.
    pub fn holds(&self, tol: f64) -> bool {
        (self.lhs - self.rhs).abs() <= tol * (1.0 + self.rhs)
    }
}

/// Both sides of the elementary-tensor Leibniz identity
/// `L(f⊗a) = l(f)‖a‖ + L^β(a)‖f‖_∞`.
pub fn leibniz_check(
    space: Arc<FiniteMetricSpace>,
    chain: Arc<AfChain>,
    f: &[f64],
    a: &AlgebraElement,
) -> Result<LeibnizCheck> {
    a.require_self_adjoint("tensor factor")?;
    let tensor = construct_tensor(space.clone(), chain.clone(), f, a)?;
    let lhs = total_lip(&tensor)?;
    let scalar = CxaElement::scalar_function(space, chain.clone(), f)?;
    let f_sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rhs = slope_seminorm(&scalar)? * a.operator_norm() + chain.af_lip_norm(a)? * f_sup;
    Ok(LeibnizCheck { lhs, rhs })
}

/// Both sides of `l_{X×Y}(f⊗g) ≤ l(f)‖g‖ + l(g)‖f‖` for real functions,
/// the left side over the product 1-metric.
pub fn commutative_product_slope_check(
    x: &FiniteMetricSpace,
    f: &[f64],
    y: &FiniteMetricSpace,
    g: &[f64],
) -> Result<LeibnizCheck> {
    if f.len() != x.len() || g.len() != y.len() {
        return Err(Error::Shape(
            "function length does not match its space".into(),
        ));
    }
    let prod = product_1_metric(x, y);
    let fg: Vec<f64> = f
        .iter()
        .flat_map(|a| g.iter().map(move |b| a * b))
        .collect();
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    Ok(LeibnizCheck {
        lhs: prod.lipschitz_constant(&fg),
        rhs: x.lipschitz_constant(f) * sup(g) + y.lipschitz_constant(g) * sup(f),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BlockAlgebra;
    use crate::chain::{scalars_in_matrix, ChainData};

    fn m2_diag(a: f64, b: f64) -> AlgebraElement {
        BlockAlgebra::full_matrix(2)
            .unwrap()
            .diagonal(&[&[a, b]])
            .unwrap()
    }

    fn scalar_chain() -> Arc<AfChain> {
        Arc::new(
            AfChain::new(ChainData {
                levels: vec![vec![1]],
                mult: vec![],
                trace_weights: vec![1.0],
                beta: vec![1.0],
            })
            .unwrap(),
        )
    }

    fn pq(d: f64) -> Arc<FiniteMetricSpace> {
        Arc::new(FiniteMetricSpace::two_point(d).unwrap())
    }

    #[test]
    fn expectation_examples() {
        let chain = Arc::new(scalars_in_matrix(2, [1.0, 0.5]).unwrap());
        let g = CxaElement::constant(pq(1.0), chain.clone(), &m2_diag(1.0, 3.0)).unwrap();
        let e = ex_conditional_expectation(&g, 0).unwrap();
        for v in e.values() {
            assert!(v.max_abs_diff(&chain.top().scalar(2.0)).unwrap() < 1e-14);
        }
        assert_eq!(ex_conditional_expectation(&g, 1).unwrap(), g);
        assert_eq!(
            ex_conditional_expectation(&g, 2).unwrap_err().code(),
            "range"
        );
    }

    #[test]
    fn slope_examples() {
        let chain = Arc::new(scalars_in_matrix(2, [1.0, 0.5]).unwrap());
        let c = CxaElement::constant(pq(1.0), chain.clone(), &m2_diag(1.0, 3.0)).unwrap();
        assert_eq!(slope_seminorm(&c).unwrap(), 0.0);
        let scalars = scalar_chain();
        let g = CxaElement::scalar_function(pq(1.0), scalars, &[0.0, 1.0]).unwrap();
        assert_eq!(slope_seminorm(&g).unwrap(), 1.0);
        let h =
            CxaElement::new(pq(2.0), chain, vec![m2_diag(0.0, 0.0), m2_diag(4.0, -4.0)]).unwrap();
        assert!((slope_seminorm(&h).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn beta_and_total_examples() {
        let chain = Arc::new(scalars_in_matrix(2, [1.0, 0.5]).unwrap());
        let one = CxaElement::unit(pq(1.0), chain.clone());
        assert_eq!(beta_seminorm(&one).unwrap(), 0.0);
        assert_eq!(total_lip(&one).unwrap(), 0.0);
        let g = CxaElement::constant(pq(1.0), chain.clone(), &m2_diag(1.0, -1.0)).unwrap();
        assert!((beta_seminorm(&g).unwrap() - 1.0).abs() < 1e-14);
        let single = Arc::new(FiniteMetricSpace::single_point());
        let s = CxaElement::constant(single, chain.clone(), &m2_diag(2.0, -0.5)).unwrap();
        assert_eq!(
            beta_seminorm(&s).unwrap(),
            chain.af_lip_norm(&m2_diag(2.0, -0.5)).unwrap()
        );
    }

    #[test]
    fn witness_function_has_unit_lip() {
        let chain = Arc::new(scalars_in_matrix(2, [1.0, 0.5]).unwrap());
        let y = CxaElement::scalar_function(pq(1.0), chain, &[1.0, 0.0]).unwrap();
        assert!((total_lip(&y).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn seminorms_reject_non_self_adjoint() {
        let chain = Arc::new(scalars_in_matrix(2, [1.0, 0.5]).unwrap());
        let e12 = chain.top().matrix_unit(0, 0, 1).unwrap();
        let g = CxaElement::constant(pq(1.0), chain, &e12).unwrap();
        assert_eq!(slope_seminorm(&g).unwrap_err().code(), "domain");
        assert_eq!(total_lip(&g).unwrap_err().code(), "domain");
    }

    #[test]
    fn finite_r_examples() {
        let chain = Arc::new(scalars_in_matrix(2, [1.0, 0.5]).unwrap());
        let one = CxaElement::unit(pq(1.0), chain.clone());
        assert_eq!(finite_r_lip(&one, 0, 0.7).unwrap(), 0.0);
        let g = CxaElement::new(
            pq(1.0),
            chain.clone(),
            vec![m2_diag(1.0, 2.0), m2_diag(-1.0, 0.5)],
        )
        .unwrap();
        let a = finite_r_lip(&g, 0, 1.0).unwrap();
        let b = finite_r_lip(&g, 0, 3.0).unwrap();
        assert!(b < a);
        // Constant chain A_0 = C, A_1 = M_2 = A with β(0) = r.
        let r = 0.8;
        let constant = Arc::new(scalars_in_matrix(2, [r, r]).unwrap());
        let h = CxaElement::new(pq(1.0), constant, g.values().to_vec()).unwrap();
        assert_eq!(finite_r_lip(&h, 0, r).unwrap(), total_lip(&h).unwrap());
    }

    #[test]
    fn tensor_examples() {
        let chain = Arc::new(scalars_in_matrix(2, [1.0, 0.5]).unwrap());
        let a = m2_diag(1.0, -1.0);
        let t = construct_tensor(pq(1.0), chain.clone(), &[1.0, 1.0], &a).unwrap();
        assert_eq!(t, CxaElement::constant(pq(1.0), chain.clone(), &a).unwrap());
        let s = construct_tensor(pq(1.0), chain.clone(), &[0.0, 1.0], &a).unwrap();
        assert_eq!(s.value(0), &chain.top().zero());
        assert_eq!(s.value(1), &a);
    }

    #[test]
    fn leibniz_examples() {
        let chain = Arc::new(scalars_in_matrix(2, [1.0, 0.5]).unwrap());
        let a = m2_diag(1.0, -1.0);
        let c = leibniz_check(pq(1.0), chain.clone(), &[0.0, 1.0], &a).unwrap();
        assert!((c.lhs - 2.0).abs() < 1e-12 && (c.rhs - 2.0).abs() < 1e-12);
        let ones = leibniz_check(pq(1.0), chain.clone(), &[1.0, 1.0], &a).unwrap();
        assert!((ones.lhs - chain.af_lip_norm(&a).unwrap()).abs() < 1e-12);
        assert!(ones.holds(1e-9));
        let unit = leibniz_check(pq(2.0), chain.clone(), &[0.0, 1.0], &chain.top().unit()).unwrap();
        assert!((unit.lhs - 0.5).abs() < 1e-12 && unit.holds(1e-9));
    }

    #[test]
    fn product_slope_examples() {
        let x = FiniteMetricSpace::two_point(1.0).unwrap();
        let c = commutative_product_slope_check(&x, &[0.0, 1.0], &x, &[0.0, 1.0]).unwrap();
        assert_eq!((c.lhs, c.rhs), (1.0, 2.0));
        let z = commutative_product_slope_check(&x, &[0.0, 0.0], &x, &[0.0, 0.0]).unwrap();
        assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
        let one = commutative_product_slope_check(&x, &[1.0, 1.0], &x, &[0.5, 2.0]).unwrap();
        assert_eq!(one.lhs, 1.5);
        assert!(one.rhs >= one.lhs);
    }
}
