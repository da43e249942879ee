//! Certified upper bounds for the quantum propinquity.
//!
//! Only inclusion bridges with the unit as pivot are represented. Their
//! height is zero and their reach is a norm gap controlled by the
//! conditional expectations of the chain, so every bound here is either a
//! value of β or simple arithmetic on Gromov–Hausdorff estimates. The UHF
//! family is built from Baire sequences with element-level checks of the
//! truncated isometry between two sequences sharing a prefix.

use crate::algebra::{AlgebraElement, BlockAlgebra};
use crate::chain::{AfChain, ChainData};
use crate::cxa::{ex_conditional_expectation, total_lip, CxaElement};
use crate::error::{Error, Result};
use crate::sampling::{random_sa_element, rng_stream};
use crate::spaces::{baire_distance, gh_bruteforce, hausdorff_subset, BaireSeq, FiniteMetricSpace};
use rayon::prelude::*;
use std::sync::Arc;

/// Largest matrix size for which UHF truncations are materialized.
pub const UHF_MAX_DIM: usize = 64;
/// Slack on the constraint `total_lip ≤ 1` for reach witnesses.
pub const LIP_TOL: f64 = 1e-9;

/// The bridge `(C(X, A_T), ι_n, id, 1)` from level `n` into the top.
#[derive(Debug, Clone)]
pub struct InclusionBridge {
    chain: Arc<AfChain>,
    level: usize,
}

impl InclusionBridge {
    pub fn new(chain: Arc<AfChain>, level: usize) -> Result<Self> {
        if level > chain.depth() {
            return Err(Error::Range(format!(
                "bridge level {level} exceeds depth {}",
                chain.depth()
            )));
        }
        Ok(InclusionBridge { chain, level })
    }

    pub fn chain(&self) -> &Arc<AfChain> {
        &self.chain
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Always 0: the unit pivot is fixed by every state.
    pub fn height(&self) -> f64 {
        0.0
    }

    /// Reach bound `β(n)`.
    pub fn reach_bound(&self) -> f64 {
        self.chain.beta()[self.level]
    }

    /// Length `max(height, reach)`.
    pub fn length(&self) -> f64 {
        self.height().max(self.reach_bound())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelBound {
    pub level: usize,
    pub beta: f64,
    pub bound: f64,
    pub height: f64,
}

/// Upper bound between `C(X, A_n)` and `C(X, A_T)`, both with the Lip-norm of
/// the chain. The bound does not depend on `X`.
pub fn chain_level_bound(chain: &Arc<AfChain>, n: usize) -> Result<LevelBound> {
    let bridge = InclusionBridge::new(chain.clone(), n)?;
    Ok(LevelBound {
        level: n,
        beta: chain.beta()[n],
        bound: bridge.length(),
        height: bridge.height(),
    })
}

/// [`chain_level_bound`] for every level `0..=T`.
pub fn level_bound_table(chain: &Arc<AfChain>) -> Vec<LevelBound> {
    (0..=chain.depth())
        .map(|n| chain_level_bound(chain, n).expect("level within depth"))
        .collect()
}

#[derive(Debug, Clone)]
pub struct ReachWitness {
    /// `E^X_n(f)`, an element of `C(X, A_n)` viewed on the top level.
    pub partner: CxaElement,
    pub partner_lip: f64,
    /// `‖f − partner‖_∞`.
    pub seminorm_gap: f64,
    pub beta: f64,
}

impl ReachWitness {
    pub fn holds(&self, tol: f64) -> bool {
        self.partner_lip <= 1.0 + tol && self.seminorm_gap <= self.beta + tol
    }
}

/// Builds the partner of `f` on level `n` and measures the gap.
pub fn reach_witness_check(f: &CxaElement, n: usize) -> Result<ReachWitness> {
    let chain = f.chain();
    if n > chain.depth() {
        return Err(Error::Range(format!(
            "level {n} exceeds depth {}",
            chain.depth()
        )));
    }
    let lip = total_lip(f)?;
    if lip > 1.0 + LIP_TOL {
        return Err(Error::Domain(format!(
            "reach witness needs total_lip ≤ 1, got {lip}"
        )));
    }
    let partner = ex_conditional_expectation(f, n)?;
    let partner_lip = total_lip(&partner)?;
    let seminorm_gap = f.sub(&partner)?.sup_norm();
    Ok(ReachWitness {
        partner,
        partner_lip,
        seminorm_gap,
        beta: chain.beta()[n],
    })
}

/// What the chain-valued space is compared with.
#[derive(Debug, Clone, Copy)]
pub enum Comparison<'a> {
    /// Another finite space; GH is computed exactly.
    Space(&'a FiniteMetricSpace),
    /// A subset of `X` given by indices; GH is bounded by the Hausdorff distance.
    Net(&'a [usize]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdApproxBounds {
    pub beta0: f64,
    /// Exact GH distance, or an upper bound for a net.
    pub gh: f64,
    /// Bound towards `C(Y)` with its slope seminorm.
    pub to_commutative: f64,
    /// Bound towards `C(Y) ⊗ A` with the same chain.
    pub between_tensors: f64,
    /// Bound towards `C(net)`; present for nets only.
    pub net_bound: Option<f64>,
}

impl FdApproxBounds {
    pub fn from_parts(beta0: f64, gh: f64, is_net: bool) -> Self {
        FdApproxBounds {
            beta0,
            gh,
            to_commutative: beta0 + gh,
            between_tensors: 2.0 * beta0 + gh,
            net_bound: is_net.then_some(beta0 + gh),
        }
    }
}

pub fn fd_approx_bounds(
    x: &FiniteMetricSpace,
    other: Comparison<'_>,
    chain: &AfChain,
) -> Result<FdApproxBounds> {
    let beta0 = chain.beta()[0];
    match other {
        Comparison::Space(y) => {
            let gh = gh_bruteforce(x, y).map_err(|e| match e {
                Error::Capacity(msg) => Error::Capacity(format!(
                    "{msg}; for a subset of X pass it as a net to get a Hausdorff bound"
                )),
                other => other,
            })?;
            Ok(FdApproxBounds::from_parts(beta0, gh, false))
        }
        Comparison::Net(net) => Ok(FdApproxBounds::from_parts(
            beta0,
            hausdorff_subset(x, net)?,
            true,
        )),
    }
}

/// `⊠β(n) = Π_{j<n} (β(j) + 1)` for `n = 0..=depth`; `None` on overflow.
pub fn uhf_sizes(seq: &BaireSeq, depth: usize) -> Result<Option<Vec<usize>>> {
    if depth > seq.len() {
        return Err(Error::Range(format!(
            "depth {depth} exceeds sequence length {}",
            seq.len()
        )));
    }
    let mut sizes = vec![1usize];
    for &e in &seq.entries()[..depth] {
        let step = usize::try_from(e).ok().and_then(|e| e.checked_add(1));
        match step.and_then(|s| sizes.last().unwrap().checked_mul(s)) {
            Some(next) => sizes.push(next),
            None => return Ok(None),
        }
    }
    Ok(Some(sizes))
}

/// UHF tower truncated at `depth`: single blocks of size `⊠β(n)`,
/// multiplicities `β(n) + 1`, normalized trace and `β_chain(n) = 1/⊠β(n)`.
#[derive(Debug, Clone)]
pub struct UhfTruncation {
    pub seq: BaireSeq,
    pub depth: usize,
    pub sizes: Vec<usize>,
    pub chain: Arc<AfChain>,
}

pub fn uhf_build(seq: &BaireSeq, depth: usize) -> Result<UhfTruncation> {
    let sizes = uhf_sizes(seq, depth)?
        .ok_or_else(|| Error::Capacity(format!("UHF matrix size overflows at depth {depth}")))?;
    let top = *sizes.last().unwrap();
    if top > UHF_MAX_DIM {
        return Err(Error::Capacity(format!(
            "UHF matrix size {top} at depth {depth} exceeds {UHF_MAX_DIM}"
        )));
    }
    let data = ChainData {
        levels: sizes.iter().map(|&s| vec![s]).collect(),
        mult: seq.entries()[..depth]
            .iter()
            .map(|&e| vec![vec![e as usize + 1]])
            .collect(),
        trace_weights: vec![1.0 / top as f64],
        beta: sizes.iter().map(|&s| 1.0 / s as f64).collect(),
    };
    Ok(UhfTruncation {
        seq: seq.clone(),
        depth,
        sizes,
        chain: Arc::new(AfChain::new(data)?),
    })
}

/// `2 · d_Baire(a, b)`, the same for every base space `X`.
pub fn uhf_propinquity_bound(a: &BaireSeq, b: &BaireSeq) -> Result<f64> {
    Ok(2.0 * baire_distance(a, b)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UhfRow {
    pub a: BaireSeq,
    pub b: BaireSeq,
    /// Length of the common prefix.
    pub prefix_agree: usize,
    pub baire: f64,
    pub bound: f64,
}

/// One row per unordered pair of distinct positions in `seqs`.
pub fn uhf_continuity_table(seqs: &[BaireSeq]) -> Result<Vec<UhfRow>> {
    let mut rows = Vec::new();
    for (i, a) in seqs.iter().enumerate() {
        for b in &seqs[i + 1..] {
            let prefix_agree = a.first_disagreement(b)?.unwrap_or(a.len());
            rows.push(UhfRow {
                a: a.clone(),
                b: b.clone(),
                prefix_agree,
                baire: baire_distance(a, b)?,
                bound: uhf_propinquity_bound(a, b)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy)]
pub struct UhfCheckOptions {
    pub samples: usize,
    pub seed: u64,
    /// Also run every self-adjoint basis element of level `N`, placed at each point.
    pub full_basis: bool,
}

impl Default for UhfCheckOptions {
    fn default() -> Self {
        UhfCheckOptions {
            samples: 50,
            seed: 0,
            full_basis: false,
        }
    }
}

/// Identifies level `N` of both towers through their matrix units and
/// returns `max |L_a(g) − L_b(F(g))|` over sampled `g ∈ sa C(X, M_{⊠(N)})`.
///
/// Each tower is built one level past `N` when the sequences allow it, so
/// the two Lip-norms are evaluated on genuinely different top algebras.
pub fn uhf_isometry_check(
    a: &BaireSeq,
    b: &BaireSeq,
    space: &Arc<FiniteMetricSpace>,
    n: usize,
    opts: UhfCheckOptions,
) -> Result<f64> {
    if n > a.len() || n > b.len() {
        return Err(Error::Range(format!(
            "prefix length {n} exceeds the sequences"
        )));
    }
    if a.entries()[..n] != b.entries()[..n] {
        return Err(Error::Domain(format!("sequences disagree below index {n}")));
    }
    let depth = |s: &BaireSeq| if s.len() > n { n + 1 } else { n };
    let ua = uhf_build(a, depth(a))?;
    let ub = uhf_build(b, depth(b))?;
    let level = BlockAlgebra::full_matrix(ua.sizes[n])?;

    let lift = |u: &UhfTruncation, vals: &[AlgebraElement]| -> Result<CxaElement> {
        let top = vals
            .iter()
            .map(|v| u.chain.embed_element(n, v))
            .collect::<Result<Vec<_>>>()?;
        CxaElement::new(space.clone(), u.chain.clone(), top)
    };
    let discrepancy = |vals: &[AlgebraElement]| -> Result<f64> {
        let la = total_lip(&lift(&ua, vals)?)?;
        let lb = total_lip(&lift(&ub, vals)?)?;
        Ok((la - lb).abs())
    };

    let mut inputs: Vec<Vec<AlgebraElement>> = (0..opts.samples)
        .map(|k| {
            let mut rng = rng_stream(opts.seed, k as u64);
            (0..space.len())
                .map(|_| random_sa_element(&mut rng, &level))
                .collect()
        })
        .collect();
    if opts.full_basis {
        let d = level.dimension();
        for x in 0..space.len() {
            for k in 0..d {
                let mut coords = vec![0.0; d];
                coords[k] = 1.0;
                let e = level.from_sa_coordinates(&coords)?;
                inputs.push(
                    (0..space.len())
                        .map(|y| if y == x { e.clone() } else { level.zero() })
                        .collect(),
                );
            }
        }
    }
    let worst = inputs
        .par_iter()
        .map(|vals| discrepancy(vals))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(worst)
}
