//! States on `C(X, A_T)` and the Monge–Kantorovich distance of the Lip-norm
//! `L = slope + β-seminorm`.
//!
//! `mk(φ, ψ) = sup{ φ(a) − ψ(a) : a self-adjoint, L(a) ≤ 1 }` is computed by
//! a cutting-plane loop. Variables are the self-adjoint coordinates of
//! `a(x)` at every point plus two auxiliaries `u, v` with `u + v ≤ 1`,
//! `‖a(x) − a(y)‖ ≤ u·d(x, y)` and `‖a(x) − E_n a(x)‖ ≤ v·β(n)`. The
//! spectral constraints are enforced through eigenvector cuts
//! `±w*Mw ≤ rhs`. The anchor `ψ(a) = 0` removes the scalar direction.
//!
//! Each LP relaxation gives an upper bound; rescaling its solution by its
//! true Lip-norm gives a feasible point and hence a lower bound. The loop
//! stops once the two are within `tol`.
//!
//! The LP is solved in its dual form, where each cut is a column; adding
//! cuts warm-starts from the previous basis.

use crate::algebra::{hermitian_eigen, AlgebraElement, BlockAlgebra, CMatrix};
use crate::chain::AfChain;
use crate::cxa::{same_context, total_lip, CxaElement};
use crate::error::{Error, Result};
use crate::lp::{
    simplex_solve, AntiCycling, LinearProgram, LpStatus, RowKind, StandardLp, VarBound,
};
use crate::sampling::{random_mixed_state, random_pure_state, rng_stream};
use crate::spaces::FiniteMetricSpace;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

/// Eigenvalue slack for positive semidefiniteness of densities.
pub const PSD_TOL: f64 = 1e-10;
/// Slack on the total trace of a state.
pub const STATE_TRACE_TOL: f64 = 1e-10;

/// A state `φ(g) = Σ_x Re Tr(ρ_x g(x))` given by blockwise densities.
#[derive(Debug, Clone)]
pub struct CxaState {
    space: Arc<FiniteMetricSpace>,
    chain: Arc<AfChain>,
    densities: Vec<AlgebraElement>,
}

impl CxaState {
    pub fn new(
        space: Arc<FiniteMetricSpace>,
        chain: Arc<AfChain>,
        densities: Vec<AlgebraElement>,
    ) -> Result<Self> {
        if densities.len() != space.len() {
            return Err(Error::Shape(format!(
                "{} densities for {} points",
                densities.len(),
                space.len()
            )));
        }
        let mut total = 0.0;
        for (x, rho) in densities.iter().enumerate() {
            let label = &space.labels()[x];
            if rho.algebra() != chain.top() {
                return Err(Error::Shape(format!(
                    "density at {label} is not on the top algebra"
                )));
            }
            if !rho.is_self_adjoint() {
                return Err(Error::Validation(format!(
                    "density at {label} is not Hermitian"
                )));
            }
            for eig in rho.spectrum()? {
                if let Some(&low) = eig.values.first() {
                    if low < -PSD_TOL {
                        return Err(Error::Validation(format!(
                            "density at {label} has negative eigenvalue {low:e}"
                        )));
                    }
                }
            }
            total += rho.full_trace().re;
        }
        if (total - 1.0).abs() > STATE_TRACE_TOL {
            return Err(Error::Validation(format!(
                "densities have total trace {total}, expected 1"
            )));
        }
        Ok(CxaState {
            space,
            chain,
            densities,
        })
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn chain(&self) -> &Arc<AfChain> {
        &self.chain
    }

    pub fn densities(&self) -> &[AlgebraElement] {
        &self.densities
    }

    fn coordinate_functional(&self) -> Vec<f64> {
        let top = self.chain.top();
        self.densities
            .iter()
            .flat_map(|rho| top.trace_functional(rho))
            .collect()
    }
}

/// `τ_x : g ↦ τ(g(x))` for the top trace `τ`.
pub fn point_state(
    space: Arc<FiniteMetricSpace>,
    chain: Arc<AfChain>,
    x: usize,
) -> Result<CxaState> {
    if x >= space.len() {
        return Err(Error::Domain(format!(
            "point {x} not in a space of {} points",
            space.len()
        )));
    }
    let top = chain.top();
    let densities = (0..space.len())
        .map(|i| {
            if i == x {
                chain.top_trace().density()
            } else {
                top.zero()
            }
        })
        .collect();
    Ok(CxaState {
        space,
        chain,
        densities,
    })
}

/// `φ(g) = Σ_x Re Tr(ρ_x g(x))`.
pub fn state_apply(phi: &CxaState, g: &CxaElement) -> Result<f64> {
    if !same_context(&phi.space, &phi.chain, g.space(), g.chain()) {
        return Err(Error::Shape(
            "state and element live on different spaces or chains".into(),
        ));
    }
    if !g.is_self_adjoint() {
        return Err(Error::Domain(
            "states are evaluated on self-adjoint elements".into(),
        ));
    }
    Ok(phi
        .densities
        .iter()
        .zip(g.values())
        .map(|(rho, a)| {
            rho.blocks()
                .iter()
                .zip(a.blocks())
                .map(|(r, b)| r.re_trace_product(b))
                .sum::<f64>()
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MkOptions {
    /// Target gap between the certified lower and upper bounds.
    pub tol: f64,
    /// Cap on cuts added by separation (seed cuts are not counted).
    pub max_cuts: usize,
}

impl Default for MkOptions {
    fn default() -> Self {
        MkOptions {
            tol: 1e-6,
            max_cuts: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MkResult {
    /// Certified lower bound, attained by `witness`.
    pub value: f64,
    /// Value of the final LP relaxation.
    pub upper_bound: f64,
    /// Self-adjoint element with `L(witness) ≤ 1` and `φ(witness) − ψ(witness) = value`.
    pub witness: CxaElement,
    /// Total cuts in the final LP, seeds included.
    pub cuts_used: usize,
    /// LP solves performed.
    pub rounds: usize,
}

/// Geometry shared by cut generation.
struct Layout {
    points: usize,
    dim: usize,
    /// `(offset into coordinates, block size)` per block of `A_T`.
    blocks: Vec<(usize, usize)>,
    top: BlockAlgebra,
    /// `(I − P_n)^T` per level `n < T`, row-major `dim x dim`.
    complement_t: Vec<Vec<f64>>,
}

impl Layout {
    fn new(space: &FiniteMetricSpace, chain: &AfChain) -> Result<Self> {
        let top = chain.top().clone();
        let dim = top.dimension();
        let mut blocks = Vec::new();
        let mut off = 0;
        for &m in top.block_sizes() {
            blocks.push((off, m));
            off += m * m;
        }
        let mut complement_t = Vec::with_capacity(chain.depth());
        for n in 0..chain.depth() {
            let p = chain.sa_expectation_matrix(n)?;
            let mut q = vec![0.0; dim * dim];
            for i in 0..dim {
                for j in 0..dim {
                    q[j * dim + i] = if i == j { 1.0 } else { 0.0 } - p[i * dim + j];
                }
            }
            complement_t.push(q);
        }
        Ok(Layout {
            points: space.len(),
            dim,
            blocks,
            top,
            complement_t,
        })
    }

    fn num_vars(&self) -> usize {
        self.points * self.dim + 2
    }

    fn u(&self) -> usize {
        self.points * self.dim
    }

    fn v(&self) -> usize {
        self.points * self.dim + 1
    }

    /// Coordinates `c` with `w* a_l w = c · coords(a)`, `w` supported on block `l`.
    fn vector_functional(&self, l: usize, w: &[Complex64]) -> Vec<f64> {
        let blocks = self
            .top
            .block_sizes()
            .iter()
            .enumerate()
            .map(|(b, &m)| {
                if b == l {
                    CMatrix::outer(w)
                } else {
                    CMatrix::zeros(m)
                }
            })
            .collect();
        let elt = self.top.element(blocks).expect("block layout");
        self.top.trace_functional(&elt)
    }

    fn pair_cut(&self, x: usize, y: usize, d: f64, sign: f64, t: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.num_vars()];
        for (k, &c) in t.iter().enumerate() {
            g[x * self.dim + k] += sign * c;
            g[y * self.dim + k] -= sign * c;
        }
        g[self.u()] = -d;
        g
    }

    fn level_cut(&self, x: usize, n: usize, beta: f64, sign: f64, t: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.num_vars()];
        let q = &self.complement_t[n];
        for i in 0..self.dim {
            let s: f64 = (0..self.dim).map(|j| q[i * self.dim + j] * t[j]).sum();
            g[x * self.dim + i] = sign * s;
        }
        g[self.v()] = -beta;
        g
    }

    fn point_values(&self, coords: &[f64]) -> Result<Vec<AlgebraElement>> {
        (0..self.points)
            .map(|x| {
                self.top
                    .from_sa_coordinates(&coords[x * self.dim..(x + 1) * self.dim])
            })
            .collect()
    }
}

fn unit(m: usize, entries: &[(usize, Complex64)]) -> Vec<Complex64> {
    let mut w = vec![Complex64::new(0.0, 0.0); m];
    for &(i, z) in entries {
        w[i] = z;
    }
    w
}

/// Seed vectors per block: standard basis, `(e_i ± e_j)/√2`, `(e_i ± i e_j)/√2`,
/// and eigenvectors of the state densities.
fn seed_vectors(layout: &Layout, states: &[&CxaState]) -> Vec<Vec<Vec<Complex64>>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let one = Complex64::new(h, 0.0);
    let im = Complex64::new(0.0, h);
    let mut out = Vec::with_capacity(layout.blocks.len());
    for (l, &(_, m)) in layout.blocks.iter().enumerate() {
        let mut vs = Vec::new();
        for i in 0..m {
            vs.push(unit(m, &[(i, Complex64::new(1.0, 0.0))]));
            for j in (i + 1)..m {
                vs.push(unit(m, &[(i, one), (j, one)]));
                vs.push(unit(m, &[(i, one), (j, -one)]));
                vs.push(unit(m, &[(i, one), (j, im)]));
                vs.push(unit(m, &[(i, one), (j, -im)]));
            }
        }
        if m > 1 {
            for st in states {
                for rho in &st.densities {
                    let eig = hermitian_eigen(rho.block(l));
                    vs.extend(eig.vectors);
                }
            }
        }
        out.push(vs);
    }
    out
}

struct CutLp {
    lp: StandardLp,
    cuts: usize,
}

impl CutLp {
    /// Adds `g·x ≤ 0` unless an equivalent cut is already present.
    fn add_cut(&mut self, g: Vec<f64>) -> bool {
        let scale = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return false;
        }
        let col: Vec<f64> = g.iter().map(|x| x / scale).collect();
        if self.lp.has_column_near(&col, 0.0, DUPLICATE_CUT_TOL) {
            return false;
        }
        self.lp.add_column(col, 0.0);
        self.cuts += 1;
        true
    }
}

/// Normalized cuts closer than this to an existing one are dropped.
const DUPLICATE_CUT_TOL: f64 = 1e-7;

/// Cut violations below this (relative) level are ignored by separation.
const VIOLATION_TOL: f64 = 1e-12;

/// The Monge–Kantorovich distance between two states.
pub fn mk_distance(phi: &CxaState, psi: &CxaState, opts: MkOptions) -> Result<MkResult> {
    if !same_context(&phi.space, &phi.chain, &psi.space, &psi.chain) {
        return Err(Error::Shape(
            "states live on different spaces or chains".into(),
        ));
    }
    if !(opts.tol >= 1e-9) || !opts.tol.is_finite() {
        return Err(Error::Domain(format!(
            "tolerance must be at least 1e-9, got {}",
            opts.tol
        )));
    }
    let space = phi.space.clone();
    let chain = phi.chain.clone();
    let layout = Layout::new(&space, &chain)?;
    let nv = layout.num_vars();
    let beta = chain.beta().to_vec();
    let depth = chain.depth();

    let fphi = phi.coordinate_functional();
    let fpsi = psi.coordinate_functional();
    let mut objective: Vec<f64> = fphi.iter().zip(&fpsi).map(|(a, b)| a - b).collect();
    objective.extend([0.0, 0.0]);

    let mut cut_lp = CutLp {
        lp: StandardLp::new(objective.clone(), AntiCycling::Perturb),
        cuts: 0,
    };
    // u + v ≤ 1, u ≥ 0, v ≥ 0
    let mut uv = vec![0.0; nv];
    uv[layout.u()] = 1.0;
    uv[layout.v()] = 1.0;
    cut_lp.lp.add_column(uv, 1.0);
    for k in [layout.u(), layout.v()] {
        let mut g = vec![0.0; nv];
        g[k] = -1.0;
        cut_lp.lp.add_column(g, 0.0);
    }
    // ψ(a) = 0 as two inequalities
    let mut anchor = fpsi.clone();
    anchor.extend([0.0, 0.0]);
    let amax = anchor.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    cut_lp
        .lp
        .add_column(anchor.iter().map(|x| x / amax).collect(), 0.0);
    cut_lp
        .lp
        .add_column(anchor.iter().map(|x| -x / amax).collect(), 0.0);

    let seeds = seed_vectors(&layout, &[phi, psi]);
    let functionals: Vec<Vec<Vec<f64>>> = seeds
        .iter()
        .enumerate()
        .map(|(l, vs)| vs.iter().map(|w| layout.vector_functional(l, w)).collect())
        .collect();
    for x in 0..layout.points {
        for y in (x + 1)..layout.points {
            let d = space.d(x, y);
            for ts in &functionals {
                for t in ts {
                    for s in [1.0, -1.0] {
                        cut_lp.add_cut(layout.pair_cut(x, y, d, s, t));
                    }
                }
            }
        }
        for n in 0..depth {
            for ts in &functionals {
                for t in ts {
                    for s in [1.0, -1.0] {
                        cut_lp.add_cut(layout.level_cut(x, n, beta[n], s, t));
                    }
                }
            }
        }
    }

    let zero = CxaElement::new(
        space.clone(),
        chain.clone(),
        vec![layout.top.zero(); layout.points],
    )?;
    let mut best_lb = 0.0;
    let mut best_witness = zero;
    let mut separated = 0usize;
    let mut rounds = 0usize;
    let mut center: Option<CxaElement> = None;
    loop {
        rounds += 1;
        match cut_lp.lp.solve()? {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return Err(Error::Internal("cut relaxation is unbounded".into()));
            }
            LpStatus::Unbounded => {
                return Err(Error::Internal("cut relaxation is infeasible".into()));
            }
        }
        let ub = cut_lp.lp.objective();
        let x = cut_lp.lp.duals();
        let a = CxaElement::new(space.clone(), chain.clone(), layout.point_values(&x)?)?;

        // Feasible point on the segment from the incumbent towards the LP point.
        let z = boundary_point(&best_witness, &a)?;
        let lip = total_lip(&a)?;
        let radial = if lip > 1.0 {
            a.scale(1.0 / lip)
        } else {
            a.clone()
        };
        center = match center {
            None => a.clone(),
            Some(c) => c.scale(0.5).add(&a.scale(0.5))?,
        }
        .into();
        let cz = boundary_point(&best_witness, center.as_ref().unwrap())?;
        for cand in [&z, &radial, &cz] {
            let gain = state_apply(phi, cand)? - state_apply(psi, cand)?;
            if gain > best_lb {
                best_lb = gain;
                best_witness = cand.clone();
            }
        }
        if ub - best_lb <= opts.tol {
            return Ok(MkResult {
                value: best_lb,
                upper_bound: ub,
                witness: best_witness,
                cuts_used: cut_lp.cuts,
                rounds,
            });
        }

        // Eigenvector cuts taken at the LP point and at the boundary point,
        // kept when the LP point violates them.
        let scale = 1.0 + x.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let mut fresh: Vec<Vec<f64>> = Vec::new();
        for p in [&a, &z, &cz] {
            for cut in candidate_cuts(&layout, &chain, &space, p)? {
                let viol: f64 = cut.iter().zip(&x).map(|(g, t)| g * t).sum();
                let dup = fresh
                    .iter()
                    .any(|f| f.iter().zip(&cut).all(|(p, q)| (p - q).abs() < 1e-10));
                if viol > VIOLATION_TOL * scale && !dup {
                    fresh.push(cut);
                }
            }
        }
        let mut added = 0;
        for cut in fresh {
            if cut_lp.add_cut(cut) {
                added += 1;
            }
        }
        separated += added;
        if added == 0 {
            return Err(Error::Convergence {
                message: "no violated cut found but bounds have not met".into(),
                lower: best_lb,
                upper: ub,
            });
        }
        if separated > opts.max_cuts {
            return Err(Error::Convergence {
                message: format!("cut cap of {} exceeded", opts.max_cuts),
                lower: best_lb,
                upper: ub,
            });
        }
    }
}

/// Largest point of the segment `[w, a]` with `L ≤ 1`, assuming `L(w) ≤ 1`.
fn boundary_point(w: &CxaElement, a: &CxaElement) -> Result<CxaElement> {
    if total_lip(a)? <= 1.0 {
        return Ok(a.clone());
    }
    let dir = a.sub(w)?;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if total_lip(&w.add(&dir.scale(mid))?)? <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    w.add(&dir.scale(lo))
}

/// Extremal eigenvector cuts of every spectral constraint, evaluated at `p`.
fn candidate_cuts(
    layout: &Layout,
    chain: &AfChain,
    space: &FiniteMetricSpace,
    p: &CxaElement,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    let mut extremes = |m: &CMatrix, l: usize, make: &dyn Fn(f64, &[f64]) -> Vec<f64>| {
        let eig = hermitian_eigen(m);
        let last = eig.vectors.len() - 1;
        out.push(make(1.0, &layout.vector_functional(l, &eig.vectors[last])));
        out.push(make(-1.0, &layout.vector_functional(l, &eig.vectors[0])));
    };
    let beta = chain.beta();
    for i in 0..layout.points {
        for j in (i + 1)..layout.points {
            let d = space.d(i, j);
            let diff = p.value(i).sub(p.value(j))?;
            for (l, blk) in diff.blocks().iter().enumerate() {
                extremes(blk, l, &|s, t| layout.pair_cut(i, j, d, s, t));
            }
        }
        for n in 0..chain.depth() {
            let e = chain.conditional_expectation(n, p.value(i))?;
            let diff = p.value(i).sub(&e)?.self_adjoint_part();
            for (l, blk) in diff.blocks().iter().enumerate() {
                extremes(blk, l, &|s, t| layout.level_cut(i, n, beta[n], s, t));
            }
        }
    }
    Ok(out)
}

/// Exact MK distance for commutative top algebras, as one LP with every
/// absolute-value constraint expanded into two rows. Conditional
/// expectations are trace-weighted averages over the atoms below each
/// atom of level `n`.
pub fn mk_bruteforce_commutative(phi: &CxaState, psi: &CxaState) -> Result<f64> {
    if !same_context(&phi.space, &phi.chain, &psi.space, &psi.chain) {
        return Err(Error::Shape(
            "states live on different spaces or chains".into(),
        ));
    }
    let chain = &phi.chain;
    let space = &phi.space;
    let top = chain.top();
    if !top.is_commutative() {
        return Err(Error::Domain(
            "commutative oracle needs every top block of size 1".into(),
        ));
    }
    let k = top.num_blocks();
    let p = space.len();
    let nv = p * k + 2;
    let (u, v) = (p * k, p * k + 1);
    let diag = |st: &CxaState| -> Vec<f64> {
        st.densities
            .iter()
            .flat_map(|rho| rho.blocks().iter().map(|b| b[(0, 0)].re))
            .collect()
    };
    let (dphi, dpsi) = (diag(phi), diag(psi));
    let mut objective: Vec<f64> = dphi.iter().zip(&dpsi).map(|(a, b)| a - b).collect();
    objective.extend([0.0, 0.0]);
    let mut bounds = vec![VarBound::Free; p * k];
    bounds.extend([VarBound::NonNegative, VarBound::NonNegative]);
    let mut lp = LinearProgram::new(objective, bounds);

    let mut anchor = dpsi.clone();
    anchor.extend([0.0, 0.0]);
    lp.push(anchor, RowKind::Eq, 0.0);
    let mut uv = vec![0.0; nv];
    uv[u] = 1.0;
    uv[v] = 1.0;
    lp.push(uv, RowKind::Le, 1.0);

    for x in 0..p {
        for y in (x + 1)..p {
            for j in 0..k {
                for s in [1.0, -1.0] {
                    let mut row = vec![0.0; nv];
                    row[x * k + j] = s;
                    row[y * k + j] = -s;
                    row[u] = -space.d(x, y);
                    lp.push(row, RowKind::Le, 0.0);
                }
            }
        }
    }

    let weights = chain.top_trace().weights();
    let t = chain.depth();
    for n in 0..t {
        // composite multiplicities from level n to the top
        let mut comp: Vec<Vec<usize>> = chain.data().mult[n].clone();
        for m in &chain.data().mult[n + 1..] {
            comp = comp
                .iter()
                .map(|row| {
                    (0..m[0].len())
                        .map(|j| row.iter().zip(m).map(|(&a, r)| a * r[j]).sum())
                        .collect()
                })
                .collect();
        }
        let owner: Vec<usize> = (0..k)
            .map(|j| {
                comp.iter()
                    .position(|row| row[j] > 0)
                    .expect("every atom has a source")
            })
            .collect();
        for x in 0..p {
            for j in 0..k {
                let group: Vec<usize> = (0..k).filter(|&i| owner[i] == owner[j]).collect();
                let mass: f64 = group.iter().map(|&i| weights[i]).sum();
                for s in [1.0, -1.0] {
                    let mut row = vec![0.0; nv];
                    row[x * k + j] += s;
                    for &i in &group {
                        row[x * k + i] -= s * weights[i] / mass;
                    }
                    row[v] = -chain.beta()[n];
                    lp.push(row, RowKind::Le, 0.0);
                }
            }
        }
    }

    let sol = simplex_solve(&lp)?;
    match (sol.status, sol.optimum) {
        (LpStatus::Optimal, Some(val)) => Ok(val),
        (status, _) => Err(Error::Internal(format!(
            "commutative MK program ended {status:?}"
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct DiameterProbe {
    pub max_observed: f64,
    /// `diam(X) + 2β(0)`.
    pub bound: f64,
    /// MK value of each sampled pair, in sample order.
    pub values: Vec<f64>,
}

/// Largest MK distance over `samples` random state pairs. Even samples pair
/// two mixed states, odd samples two vector states. Sample `k` draws from
/// its own stream of `seed`, so the result does not depend on scheduling.
pub fn diameter_probe(
    space: Arc<FiniteMetricSpace>,
    chain: Arc<AfChain>,
    samples: usize,
    seed: u64,
    opts: MkOptions,
) -> Result<DiameterProbe> {
    if samples == 0 {
        return Err(Error::Domain(
            "diameter probe needs at least one sample".into(),
        ));
    }
    let bound = space.diameter() + 2.0 * chain.beta()[0];
    let values = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_stream(seed, k as u64);
            let (phi, psi) = if k % 2 == 0 {
                (
                    random_mixed_state(&mut rng, &space, &chain)?,
                    random_mixed_state(&mut rng, &space, &chain)?,
                )
            } else {
                (
                    random_pure_state(&mut rng, &space, &chain)?,
                    random_pure_state(&mut rng, &space, &chain)?,
                )
            };
            Ok(mk_distance(&phi, &psi, opts)?.value)
        })
        .collect::<Vec<Result<f64>>>()
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let max_observed = values.iter().copied().fold(0.0, f64::max);
    Ok(DiameterProbe {
        max_observed,
        bound,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{scalars_in_matrix, ChainData};
    use crate::cxa::ex_conditional_expectation;

    fn c_in_c2() -> Arc<AfChain> {
        Arc::new(
            AfChain::new(ChainData {
                levels: vec![vec![1], vec![1, 1]],
                mult: vec![vec![vec![1, 1]]],
                trace_weights: vec![0.5, 0.5],
                beta: vec![1.0, 0.5],
            })
            .unwrap(),
        )
    }

    #[test]
    fn apply_to_unit_and_point_state() {
        let space = Arc::new(FiniteMetricSpace::two_point(1.5).unwrap());
        let chain = Arc::new(scalars_in_matrix(2, [1.0, 0.5]).unwrap());
        let one = CxaElement::unit(space.clone(), chain.clone());
        let p = point_state(space.clone(), chain.clone(), 0).unwrap();
        assert!((state_apply(&p, &one).unwrap() - 1.0).abs() < 1e-15);
        let g = CxaElement::new(
            space.clone(),
            chain.clone(),
            vec![
                chain.top().diagonal(&[&[1.0, 3.0]]).unwrap(),
                chain.top().zero(),
            ],
        )
        .unwrap();
        assert!((state_apply(&p, &g).unwrap() - 2.0).abs() < 1e-15);
        let q = point_state(space.clone(), chain.clone(), 1).unwrap();
        assert_eq!(state_apply(&q, &g).unwrap(), 0.0);
        assert_eq!(point_state(space, chain, 2).unwrap_err().code(), "domain");
    }

    #[test]
    fn point_state_ignores_expectation() {
        let mut rng = crate::sampling::rng(5);
        let space = Arc::new(FiniteMetricSpace::on_line(&[0.0, 1.0, 2.5]).unwrap());
        let chain = Arc::new(crate::sampling::random_chain(&mut rng, Default::default()).unwrap());
        let g = crate::sampling::random_cxa_sa(&mut rng, &space, &chain);
        for x in 0..3 {
            let p = point_state(space.clone(), chain.clone(), x).unwrap();
            for n in 0..=chain.depth() {
                let e = ex_conditional_expectation(&g, n).unwrap();
                assert!(
                    (state_apply(&p, &e).unwrap() - state_apply(&p, &g).unwrap()).abs() < 1e-10
                );
            }
        }
    }

    #[test]
    fn equal_states_are_at_distance_zero() {
        let space = Arc::new(FiniteMetricSpace::two_point(1.0).unwrap());
        let chain = c_in_c2();
        let p = point_state(space.clone(), chain.clone(), 0).unwrap();
        let r = mk_distance(&p, &p, MkOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(mk_bruteforce_commutative(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn two_point_isometry() {
        let space = Arc::new(FiniteMetricSpace::two_point(1.5).unwrap());
        for chain in [
            c_in_c2(),
            Arc::new(scalars_in_matrix(3, [0.7, 0.2]).unwrap()),
        ] {
            let p = point_state(space.clone(), chain.clone(), 0).unwrap();
            let q = point_state(space.clone(), chain.clone(), 1).unwrap();
            let r = mk_distance(&p, &q, MkOptions::default()).unwrap();
            assert!((r.value - 1.5).abs() < 1e-9, "{}", r.value);
            assert!(total_lip(&r.witness).unwrap() <= 1.0 + 1e-9);
        }
        let chain = c_in_c2();
        let p = point_state(space.clone(), chain.clone(), 0).unwrap();
        let q = point_state(space.clone(), chain.clone(), 1).unwrap();
        assert!((mk_bruteforce_commutative(&p, &q).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn vector_states_on_c2() {
        let space = Arc::new(FiniteMetricSpace::single_point());
        let chain = c_in_c2();
        let top = chain.top();
        let s1 = CxaState::new(
            space.clone(),
            chain.clone(),
            vec![top.diagonal(&[&[1.0], &[0.0]]).unwrap()],
        )
        .unwrap();
        let s2 = CxaState::new(
            space.clone(),
            chain.clone(),
            vec![top.diagonal(&[&[0.0], &[1.0]]).unwrap()],
        )
        .unwrap();
        let r = mk_distance(&s1, &s2, MkOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
        assert!((mk_bruteforce_commutative(&s1, &s2).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_rejects_noncommutative() {
        let space = Arc::new(FiniteMetricSpace::single_point());
        let chain = Arc::new(scalars_in_matrix(2, [1.0, 0.5]).unwrap());
        let p = point_state(space, chain, 0).unwrap();
        assert_eq!(
            mk_bruteforce_commutative(&p, &p).unwrap_err().code(),
            "domain"
        );
    }

    #[test]
    fn invalid_densities() {
        let space = Arc::new(FiniteMetricSpace::single_point());
        let chain = c_in_c2();
        let top = chain.top();
        let neg = top.diagonal(&[&[1.5], &[-0.5]]).unwrap();
        assert_eq!(
            CxaState::new(space.clone(), chain.clone(), vec![neg])
                .unwrap_err()
                .code(),
            "validation"
        );
        let half = top.diagonal(&[&[0.25], &[0.25]]).unwrap();
        assert_eq!(
            CxaState::new(space, chain, vec![half]).unwrap_err().code(),
            "validation"
        );
    }

    #[test]
    fn probe_on_trivial_chain() {
        let space = Arc::new(FiniteMetricSpace::single_point());
        let chain = Arc::new(
            AfChain::new(ChainData {
                levels: vec![vec![1]],
                mult: vec![],
                trace_weights: vec![1.0],
                beta: vec![0.8],
            })
            .unwrap(),
        );
        let p = diameter_probe(space, chain, 4, 1, MkOptions::default()).unwrap();
        assert_eq!(p.max_observed, 0.0);
        assert!((p.bound - 1.6).abs() < 1e-15);
    }
}
