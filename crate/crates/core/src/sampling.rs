//! Seeded random instances: metric spaces, chains, self-adjoint elements and
//! states. Everything is driven by `ChaCha8Rng` so results are reproducible
//! from a 64-bit seed.

use crate::algebra::{AlgebraElement, BlockAlgebra, CMatrix};
use crate::chain::{AfChain, ChainData};
use crate::cxa::CxaElement;
use crate::error::Result;
use crate::mk::CxaState;
use crate::spaces::FiniteMetricSpace;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for sub-task `stream` of a seeded run.
pub fn rng_stream(seed: u64, stream: u64) -> SampleRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn gaussian_complex(rng: &mut SampleRng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `n` points in the plane, Euclidean distances, labels `x0, x1, …`.
pub fn random_space(rng: &mut SampleRng, n: usize) -> Result<FiniteMetricSpace> {
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)))
        .collect();
    let dist = pts
        .iter()
        .map(|a| {
            pts.iter()
                .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                .collect()
        })
        .collect();
    FiniteMetricSpace::new((0..n).map(|i| format!("x{i}")).collect(), dist)
}

/// Size limits for [`random_chain`].
#[derive(Debug, Clone, Copy)]
pub struct ChainShape {
    pub max_depth: usize,
    pub max_blocks: usize,
    pub max_block_size: usize,
    /// Restrict to chains whose top algebra is commutative.
    pub commutative: bool,
}

impl Default for ChainShape {
    fn default() -> Self {
        ChainShape {
            max_depth: 3,
            max_blocks: 3,
            max_block_size: 3,
            commutative: false,
        }
    }
}

/// A random valid chain with depth in `1..=max_depth` (0 allowed when
/// `max_depth == 0`), strictly decreasing β and a random faithful top trace.
pub fn random_chain(rng: &mut SampleRng, shape: ChainShape) -> Result<AfChain> {
    let depth = if shape.max_depth == 0 {
        0
    } else {
        rng.random_range(1..=shape.max_depth)
    };
    let mut levels = vec![vec![1usize]];
    let mut mult = Vec::with_capacity(depth);
    for _ in 0..depth {
        let src = levels.last().unwrap().clone();
        loop {
            let nb = rng.random_range(1..=shape.max_blocks);
            let max_k = if shape.commutative { 1 } else { 2 };
            let m: Vec<Vec<usize>> = (0..src.len())
                .map(|_| (0..nb).map(|_| rng.random_range(0..=max_k)).collect())
                .collect();
            let rows_ok = m.iter().all(|r| r.iter().any(|&k| k > 0));
            let sizes: Vec<usize> = (0..nb)
                .map(|j| (0..src.len()).map(|i| m[i][j] * src[i]).sum())
                .collect();
            let cols_ok = sizes.iter().all(|&s| s > 0);
            let cap = if shape.commutative {
                1
            } else {
                shape.max_block_size
            };
            if rows_ok && cols_ok && sizes.iter().all(|&s| s <= cap) {
                levels.push(sizes);
                mult.push(m);
                break;
            }
        }
    }
    let top = levels.last().unwrap();
    let raw: Vec<f64> = top.iter().map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().zip(top).map(|(t, &m)| t * m as f64).sum();
    let trace_weights = raw.iter().map(|t| t / total).collect();
    let mut beta = vec![rng.random_range(0.5..2.0)];
    for _ in 0..depth {
        let last = *beta.last().unwrap();
        beta.push(last * rng.random_range(0.3..0.9));
    }
    AfChain::new(ChainData {
        levels,
        mult,
        trace_weights,
        beta,
    })
}

/// Hermitian matrix with independent Gaussian entries.
pub fn random_hermitian(rng: &mut SampleRng, m: usize) -> CMatrix {
    let g = CMatrix::from_fn(m, |_, _| gaussian_complex(rng));
    g.add(&g.adjoint()).scale(Complex64::new(0.5, 0.0))
}

pub fn random_sa_element(rng: &mut SampleRng, alg: &BlockAlgebra) -> AlgebraElement {
    let blocks = alg
        .block_sizes()
        .iter()
        .map(|&m| random_hermitian(rng, m))
        .collect();
    alg.element(blocks).expect("block sizes match")
}

/// Arbitrary (generally non-self-adjoint) element with Gaussian entries.
pub fn random_element(rng: &mut SampleRng, alg: &BlockAlgebra) -> AlgebraElement {
    let blocks = alg
        .block_sizes()
        .iter()
        .map(|&m| CMatrix::from_fn(m, |_, _| gaussian_complex(rng)))
        .collect();
    alg.element(blocks).expect("block sizes match")
}

pub fn random_cxa_sa(
    rng: &mut SampleRng,
    space: &Arc<FiniteMetricSpace>,
    chain: &Arc<AfChain>,
) -> CxaElement {
    let values = (0..space.len())
        .map(|_| random_sa_element(rng, chain.top()))
        .collect();
    CxaElement::new(space.clone(), chain.clone(), values).expect("values on top algebra")
}

/// Mixed state: `B*B` per block per point with Gaussian `B`, normalized to
/// total trace one.
pub fn random_mixed_state(
    rng: &mut SampleRng,
    space: &Arc<FiniteMetricSpace>,
    chain: &Arc<AfChain>,
) -> Result<CxaState> {
    let top = chain.top();
    let mut densities = Vec::with_capacity(space.len());
    let mut total = 0.0;
    for _ in 0..space.len() {
        let blocks: Vec<CMatrix> = top
            .block_sizes()
            .iter()
            .map(|&m| {
                let b = CMatrix::from_fn(m, |_, _| gaussian_complex(rng));
                b.adjoint().mul(&b)
            })
            .collect();
        let elt = top.element(blocks)?;
        total += elt.full_trace().re;
        densities.push(elt);
    }
    let densities = densities.iter().map(|d| d.scale(1.0 / total)).collect();
    CxaState::new(space.clone(), chain.clone(), densities)
}

/// Vector state `a ↦ ⟨w, a(x) w⟩` for a random point, block and unit vector.
pub fn random_pure_state(
    rng: &mut SampleRng,
    space: &Arc<FiniteMetricSpace>,
    chain: &Arc<AfChain>,
) -> Result<CxaState> {
    let top = chain.top();
    let x = rng.random_range(0..space.len());
    let l = rng.random_range(0..top.num_blocks());
    let m = top.block_sizes()[l];
    let mut w: Vec<Complex64> = (0..m).map(|_| gaussian_complex(rng)).collect();
    let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    w.iter_mut().for_each(|z| *z /= norm);
    let densities = (0..space.len())
        .map(|i| {
            let blocks = top
                .block_sizes()
                .iter()
                .enumerate()
                .map(|(b, &s)| {
                    if i == x && b == l {
                        CMatrix::outer(&w)
                    } else {
                        CMatrix::zeros(s)
                    }
                })
                .collect();
            top.element(blocks)
        })
        .collect::<Result<Vec<_>>>()?;
    CxaState::new(space.clone(), chain.clone(), densities)
}
