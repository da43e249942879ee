//! Properties of finite metric spaces and the Lip-norm on `C(X, A)`.

use propinq::chain::AfChain;
use propinq::cxa::{
    beta_seminorm, ex_conditional_expectation, slope_seminorm, total_lip, CxaElement,
};
use propinq::sampling::{random_chain, random_cxa_sa, random_space, rng, ChainShape, SampleRng};
use propinq::spaces::{gh_bruteforce, hausdorff_subset, product_1_metric, FiniteMetricSpace};
use proptest::prelude::*;
use rand::Rng;
use std::sync::Arc;

fn small_space(r: &mut SampleRng) -> FiniteMetricSpace {
    let n = r.random_range(1..=3);
    random_space(r, n).unwrap()
}

fn instance(seed: u64) -> (SampleRng, Arc<FiniteMetricSpace>, Arc<AfChain>) {
    let mut r = rng(seed);
    let n = r.random_range(1..=4);
    let space = Arc::new(random_space(&mut r, n).unwrap());
    let chain = Arc::new(random_chain(&mut r, ChainShape::default()).unwrap());
    (r, space, chain)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gh_is_a_pseudometric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (x, y, z) = (small_space(&mut r), small_space(&mut r), small_space(&mut r));
        let xy = gh_bruteforce(&x, &y).unwrap();
        prop_assert_eq!(xy, gh_bruteforce(&y, &x).unwrap());
        prop_assert_eq!(gh_bruteforce(&x, &x).unwrap(), 0.0);
        let xz = gh_bruteforce(&x, &z).unwrap();
        let yz = gh_bruteforce(&y, &z).unwrap();
        prop_assert!(xz <= xy + yz + 1e-12, "{xz} > {xy} + {yz}");
    }

    #[test]
    fn hausdorff_dominates_gh(seed in any::<u64>(), mask in 1u32..16) {
        let mut r = rng(seed);
        let x = random_space(&mut r, 4).unwrap();
        let subset: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
        let h = hausdorff_subset(&x, &subset).unwrap();
        let gh = gh_bruteforce(&x, &x.restrict(&subset).unwrap()).unwrap();
        prop_assert!(gh <= h + 1e-12, "gh {gh} > hausdorff {h}");
    }

    #[test]
    fn product_metric_is_valid(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (x, y) = (small_space(&mut r), small_space(&mut r));
        let p = product_1_metric(&x, &y);
        let rebuilt = FiniteMetricSpace::new(p.labels().to_vec(), p.distances().to_vec());
        prop_assert!(rebuilt.is_ok());
        prop_assert_eq!(p.len(), x.len() * y.len());
    }

    #[test]
    fn lip_kernel_is_constant_scalars(seed in any::<u64>(), c in -5.0f64..5.0) {
        let (mut r, space, chain) = instance(seed);
        let scalar = CxaElement::unit(space.clone(), chain.clone()).scale(c);
        let l0 = total_lip(&scalar).unwrap();
        prop_assert!(l0 <= 1e-12 * (1.0 + c.abs()), "{l0}");
        let g = random_cxa_sa(&mut r, &space, &chain);
        if space.len() > 1 || chain.top().dimension() > 1 {
            prop_assert!(total_lip(&g).unwrap() >= 1e-8);
        }
    }

    #[test]
    fn expectation_contracts_lip(seed in any::<u64>()) {
        let (mut r, space, chain) = instance(seed);
        let g = random_cxa_sa(&mut r, &space, &chain);
        let l = total_lip(&g).unwrap();
        for n in 0..=chain.depth() {
            let e = ex_conditional_expectation(&g, n).unwrap();
            prop_assert!(total_lip(&e).unwrap() <= l + 1e-9);
            let tau = chain.top_trace();
            for x in 0..space.len() {
                let d = tau.apply(g.value(x)).unwrap() - tau.apply(e.value(x)).unwrap();
                prop_assert!(d.norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn total_lip_is_two_quasi_leibniz(seed in any::<u64>()) {
        let (mut r, space, chain) = instance(seed);
        let a = random_cxa_sa(&mut r, &space, &chain);
        let b = random_cxa_sa(&mut r, &space, &chain);
        let (la, lb) = (total_lip(&a).unwrap(), total_lip(&b).unwrap());
        let bound = 2.0 * (la * b.sup_norm() + lb * a.sup_norm()) + 1e-9;
        prop_assert!(total_lip(&a.jordan(&b).unwrap()).unwrap() <= bound);
        prop_assert!(total_lip(&a.lie(&b).unwrap()).unwrap() <= bound);
    }

    #[test]
    fn lip_splits_into_slope_and_beta_parts(seed in any::<u64>()) {
        let (mut r, space, chain) = instance(seed);
        let g = random_cxa_sa(&mut r, &space, &chain);
        let l = total_lip(&g).unwrap();
        prop_assert_eq!(l, slope_seminorm(&g).unwrap() + beta_seminorm(&g).unwrap());
    }
}
