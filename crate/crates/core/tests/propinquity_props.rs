//! Properties of the level bounds, reach witnesses and UHF bounds.

use propinq::cxa::total_lip;
use propinq::propinquity::{
    chain_level_bound, level_bound_table, reach_witness_check, uhf_propinquity_bound,
    InclusionBridge,
};
use propinq::sampling::{random_chain, random_cxa_sa, random_space, rng, ChainShape};
use propinq::spaces::BaireSeq;
use proptest::prelude::*;
use rand::Rng;
use std::sync::Arc;

fn seq() -> impl Strategy<Value = BaireSeq> {
    prop::collection::vec(1u64..=3, 1..=6).prop_map(|v| BaireSeq::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn level_bounds_refine(seed in any::<u64>()) {
        let chain = Arc::new(random_chain(&mut rng(seed), ChainShape::default()).unwrap());
        let table = level_bound_table(&chain);
        prop_assert!(table.windows(2).all(|w| w[1].bound <= w[0].bound));
        prop_assert_eq!(table.last().unwrap().bound, chain.beta()[chain.depth()]);
        for (n, row) in table.iter().enumerate() {
            prop_assert_eq!(row.height, 0.0);
            prop_assert_eq!(*row, chain_level_bound(&chain, n).unwrap());
            let bridge = InclusionBridge::new(chain.clone(), n).unwrap();
            prop_assert_eq!(bridge.height(), 0.0);
        }
    }

    #[test]
    fn reach_witnesses_exist(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let space = Arc::new(random_space(&mut r, n).unwrap());
        let chain = Arc::new(random_chain(&mut r, ChainShape::default()).unwrap());
        let g = random_cxa_sa(&mut r, &space, &chain);
        let l = total_lip(&g).unwrap();
        prop_assume!(l > 0.0);
        let f = g.scale(1.0 / l);
        for level in 0..=chain.depth() {
            let w = reach_witness_check(&f, level).unwrap();
            prop_assert!(w.holds(1e-9), "{w:?}");
        }
    }

    #[test]
    fn uhf_bound_is_a_metric(a in seq(), b in seq(), c in seq()) {
        let k = a.len().min(b.len()).min(c.len());
        let cut = |s: &BaireSeq| BaireSeq::new(s.entries()[..k].to_vec()).unwrap();
        let (a, b, c) = (cut(&a), cut(&b), cut(&c));
        let ab = uhf_propinquity_bound(&a, &b).unwrap();
        prop_assert_eq!(ab, uhf_propinquity_bound(&b, &a).unwrap());
        prop_assert_eq!(uhf_propinquity_bound(&a, &a).unwrap(), 0.0);
        let ac = uhf_propinquity_bound(&a, &c).unwrap();
        let cb = uhf_propinquity_bound(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb);
    }
}
