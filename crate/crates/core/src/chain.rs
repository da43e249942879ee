//! Truncated AF towers `C1 = A_0 ⊂ A_1 ⊂ … ⊂ A_T`.
//!
//! Each inclusion is given as Bratteli multiplicity data. Inside each target
//! block the source copies are laid out block-diagonally, ordered by
//! `(source block, copy)`. The trace is fixed on `A_T` and pulled back to
//! every level; the trace-preserving conditional expectation onto level `n`
//! is the GNS-orthogonal projection onto the image of `A_n`, computed from a
//! Cholesky-factored Gram matrix of the pushed-forward matrix units.

use crate::algebra::{AlgebraElement, BlockAlgebra, CMatrix, TraceState};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::HashMap;
use std::fmt;

/// Raw chain description, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainData {
    /// Block sizes of `A_0, …, A_T`.
    pub levels: Vec<Vec<usize>>,
    /// `mult[n][i][j]`: copies of block `i` of `A_n` inside block `j` of `A_{n+1}`.
    pub mult: Vec<Vec<Vec<usize>>>,
    /// Trace weights on the blocks of `A_T`.
    pub trace_weights: Vec<f64>,
    /// `β(0), …, β(T)`.
    pub beta: Vec<f64>,
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainIssue {
    pub level: Option<usize>,
    pub message: String,
}

impl fmt::Display for ChainIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            Some(n) => write!(f, "level {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ChainIssue>,
    /// Block sizes per level, as given.
    pub block_sizes: Vec<Vec<usize>>,
    /// Complex dimension `Σ m_l²` per level.
    pub dimensions: Vec<usize>,
    /// Ambient matrix size `Σ m_l` per level.
    pub matrix_sizes: Vec<usize>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, level: Option<usize>, message: impl Into<String>) {
        self.issues.push(ChainIssue {
            level,
            message: message.into(),
        });
    }
}

/// Unital inclusion given by multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityEmbedding {
    source: BlockAlgebra,
    target: BlockAlgebra,
    mult: Vec<Vec<usize>>,
}

impl MultiplicityEmbedding {
    /// Checks shape, unitality and that every source block maps somewhere.
    pub fn new(source: BlockAlgebra, target: BlockAlgebra, mult: Vec<Vec<usize>>) -> Result<Self> {
        let issues = Self::check(&source, &target, &mult, 0);
        if let Some(first) = issues.first() {
            return Err(Error::Validation(first.message.clone()));
        }
        Ok(MultiplicityEmbedding {
            source,
            target,
            mult,
        })
    }

    fn check(
        source: &BlockAlgebra,
        target: &BlockAlgebra,
        mult: &[Vec<usize>],
        level: usize,
    ) -> Vec<ChainIssue> {
        let mut out = Vec::new();
        let issue = |m: String| ChainIssue {
            level: Some(level),
            message: m,
        };
        if mult.len() != source.num_blocks() || mult.iter().any(|r| r.len() != target.num_blocks())
        {
            out.push(issue(format!(
                "multiplicity matrix must be {}x{}",
                source.num_blocks(),
                target.num_blocks()
            )));
            return out;
        }
        for (j, &mj) in target.block_sizes().iter().enumerate() {
            let s: usize = (0..source.num_blocks())
                .map(|i| mult[i][j] * source.block_sizes()[i])
                .sum();
            if s != mj {
                out.push(issue(format!(
                    "unitality violated at level {level}: target block {j} has size {mj} but receives {s}"
                )));
            }
        }
        for (i, row) in mult.iter().enumerate() {
            if row.iter().sum::<usize>() == 0 {
                out.push(issue(format!(
                    "source block {i} at level {level} maps nowhere"
                )));
            }
        }
        out
    }

    pub fn source(&self) -> &BlockAlgebra {
        &self.source
    }

    pub fn target(&self) -> &BlockAlgebra {
        &self.target
    }

    pub fn multiplicities(&self) -> &[Vec<usize>] {
        &self.mult
    }

    /// Image of `a` under the canonical block-diagonal realization.
    pub fn apply(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        if a.algebra() != &self.source {
            return Err(Error::Shape(
                "element does not live on the embedding source".into(),
            ));
        }
        let mut blocks = Vec::with_capacity(self.target.num_blocks());
        for (j, &mj) in self.target.block_sizes().iter().enumerate() {
            let mut out = CMatrix::zeros(mj);
            let mut offset = 0;
            for (i, &mi) in self.source.block_sizes().iter().enumerate() {
                for _ in 0..self.mult[i][j] {
                    let src = a.block(i);
                    for r in 0..mi {
                        for c in 0..mi {
                            out[(offset + r, offset + c)] = src[(r, c)];
                        }
                    }
                    offset += mi;
                }
            }
            blocks.push(out);
        }
        self.target.element(blocks)
    }
}

/// Entry of a pushed-forward matrix unit: (block, row, col, value).
type SparseEntry = (usize, usize, usize, Complex64);

#[derive(Debug, Clone)]
struct LevelProjection {
    images: Vec<Vec<SparseEntry>>,
    /// Lower Cholesky factor of the Gram matrix, row-major.
    chol: Vec<Complex64>,
}

/// Validated AF chain with cached projection data.
#[derive(Clone)]
pub struct AfChain {
    data: ChainData,
    levels: Vec<BlockAlgebra>,
    embeddings: Vec<MultiplicityEmbedding>,
    traces: Vec<TraceState>,
    projections: Vec<LevelProjection>,
}

impl fmt::Debug for AfChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AfChain")
            .field("levels", &self.data.levels)
            .field("beta", &self.data.beta)
            .finish()
    }
}

impl PartialEq for AfChain {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data
    }
}

/// Checks every chain invariant without building projections.
pub fn validate_chain(data: &ChainData) -> ValidationReport {
    let mut report = ValidationReport {
        issues: vec![],
        block_sizes: data.levels.clone(),
        dimensions: data
            .levels
            .iter()
            .map(|l| l.iter().map(|m| m * m).sum())
            .collect(),
        matrix_sizes: data.levels.iter().map(|l| l.iter().sum()).collect(),
    };
    if data.levels.is_empty() {
        report.push(None, "chain has no levels");
        return report;
    }
    if data.levels[0] != [1] {
        report.push(Some(0), "level 0 must be the scalars (one block of size 1)");
    }
    let mut algebras = Vec::with_capacity(data.levels.len());
    for (n, sizes) in data.levels.iter().enumerate() {
        match BlockAlgebra::new(sizes.clone()) {
            Ok(a) => algebras.push(a),
            Err(e) => report.push(Some(n), e.to_string()),
        }
    }
    let depth = data.levels.len() - 1;
    if data.mult.len() != depth {
        report.push(
            None,
            format!(
                "expected {depth} multiplicity matrices, got {}",
                data.mult.len()
            ),
        );
    }
    if algebras.len() == data.levels.len() {
        for (n, m) in data.mult.iter().enumerate().take(depth) {
            for issue in MultiplicityEmbedding::check(&algebras[n], &algebras[n + 1], m, n) {
                report.issues.push(issue);
            }
        }
    }

    if data.beta.len() != depth + 1 {
        report.push(
            None,
            format!(
                "expected {} beta values, got {}",
                depth + 1,
                data.beta.len()
            ),
        );
    }
    if let Some(n) = data.beta.iter().position(|&b| !(b > 0.0) || !b.is_finite()) {
        report.push(Some(n), "beta must be strictly positive");
    }
    if let Some(n) = data.beta.windows(2).position(|w| w[1] > w[0]) {
        report.push(Some(n + 1), "beta not nonincreasing");
    }

    if let Some(top) = algebras
        .get(depth)
        .filter(|_| algebras.len() == data.levels.len())
    {
        if let Err(e) = TraceState::new(top.clone(), data.trace_weights.clone()) {
            report.push(Some(depth), e.to_string());
        }
    }

    if report.is_valid() {
        // Pulled-back traces evaluated on diagonal matrix units of every level.
        let chain = ChainSkeleton::new(data);
        for n in 0..=depth {
            let alg = &chain.levels[n];
            let mut unit_val = Complex64::new(0.0, 0.0);
            for (l, &m) in alg.block_sizes().iter().enumerate() {
                for i in 0..m {
                    let e = alg.matrix_unit(l, i, i).expect("in range");
                    let v = chain
                        .embed(n, &e)
                        .and_then(|img| chain.top_trace.apply(&img))
                        .expect("validated shapes");
                    if !(v.re > 0.0) {
                        report.push(
                            Some(n),
                            format!("pulled-back trace not faithful on block {l}"),
                        );
                    }
                    unit_val += v;
                }
            }
            if (unit_val.re - 1.0).abs() > 1e-12 {
                report.push(Some(n), "pulled-back trace is not unital");
            }
        }
    }
    report
}

/// Levels, embeddings and top trace, used before projections exist.
struct ChainSkeleton {
    levels: Vec<BlockAlgebra>,
    embeddings: Vec<MultiplicityEmbedding>,
    top_trace: TraceState,
}

impl ChainSkeleton {
    fn new(data: &ChainData) -> Self {
        let levels: Vec<BlockAlgebra> = data
            .levels
            .iter()
            .map(|l| BlockAlgebra::new(l.clone()).expect("validated"))
            .collect();
        let embeddings = data
            .mult
            .iter()
            .enumerate()
            .map(|(n, m)| MultiplicityEmbedding {
                source: levels[n].clone(),
                target: levels[n + 1].clone(),
                mult: m.clone(),
            })
            .collect();
        let top_trace = TraceState::new(levels.last().unwrap().clone(), data.trace_weights.clone())
            .expect("validated");
        ChainSkeleton {
            levels,
            embeddings,
            top_trace,
        }
    }

    fn embed(&self, n: usize, a: &AlgebraElement) -> Result<AlgebraElement> {
        let mut cur = a.clone();
        for e in &self.embeddings[n..] {
            cur = e.apply(&cur)?;
        }
        Ok(cur)
    }
}

impl AfChain {
    /// Validates `data` and precomputes the Gram factorizations.
    pub fn new(data: ChainData) -> Result<Self> {
        let report = validate_chain(&data);
        if !report.is_valid() {
            let msg = report
                .issues
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            return Err(Error::Validation(msg));
        }
        let sk = ChainSkeleton::new(&data);
        let depth = sk.levels.len() - 1;

        let mut traces = vec![sk.top_trace.clone(); depth + 1];
        for n in (0..depth).rev() {
            let upper = traces[n + 1].weights().to_vec();
            let w: Vec<f64> = data.mult[n]
                .iter()
                .map(|row| row.iter().zip(&upper).map(|(&k, &t)| k as f64 * t).sum())
                .collect();
            traces[n] = TraceState::new(sk.levels[n].clone(), w)?;
        }

        let mut projections = Vec::with_capacity(depth);
        for n in 0..depth {
            projections.push(Self::build_projection(&sk, n)?);
        }

        Ok(AfChain {
            data,
            levels: sk.levels,
            embeddings: sk.embeddings,
            traces,
            projections,
        })
    }

    fn build_projection(sk: &ChainSkeleton, n: usize) -> Result<LevelProjection> {
        let alg = &sk.levels[n];
        let mut images = Vec::with_capacity(alg.dimension());
        for (l, &m) in alg.block_sizes().iter().enumerate() {
            for i in 0..m {
                for j in 0..m {
                    let img = sk.embed(n, &alg.matrix_unit(l, i, j)?)?;
                    let mut entries = Vec::new();
                    for (b, blk) in img.blocks().iter().enumerate() {
                        let s = blk.size();
                        for (k, z) in blk.as_slice().iter().enumerate() {
                            if *z != Complex64::new(0.0, 0.0) {
                                entries.push((b, k / s, k % s, *z));
                            }
                        }
                    }
                    images.push(entries);
                }
            }
        }

        let dim = images.len();
        let weights = sk.top_trace.weights();
        let mut by_pos: HashMap<(usize, usize, usize), Vec<(usize, Complex64)>> = HashMap::new();
        for (a, img) in images.iter().enumerate() {
            for &(b, r, c, z) in img {
                by_pos.entry((b, r, c)).or_default().push((a, z));
            }
        }
        let mut gram = vec![Complex64::new(0.0, 0.0); dim * dim];
        for ((b, _, _), list) in &by_pos {
            let t = weights[*b];
            for &(a, za) in list {
                for &(c, zc) in list {
                    gram[a * dim + c] += za.conj() * zc * t;
                }
            }
        }
        let chol = cholesky(dim, &gram).ok_or_else(|| {
            Error::Internal(format!("Gram matrix of level {n} is not positive definite"))
        })?;
        Ok(LevelProjection { images, chol })
    }

    pub fn data(&self) -> &ChainData {
        &self.data
    }

    /// Top level index `T`.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> Result<&BlockAlgebra> {
        self.levels
            .get(n)
            .ok_or_else(|| Error::Range(format!("level {n} exceeds depth {}", self.depth())))
    }

    pub fn levels(&self) -> &[BlockAlgebra] {
        &self.levels
    }

    pub fn top(&self) -> &BlockAlgebra {
        self.levels.last().unwrap()
    }

    pub fn embeddings(&self) -> &[MultiplicityEmbedding] {
        &self.embeddings
    }

    pub fn top_trace(&self) -> &TraceState {
        self.traces.last().unwrap()
    }

    /// Pulled-back trace on level `n`.
    pub fn level_trace(&self, n: usize) -> Result<&TraceState> {
        self.check_level(n)?;
        Ok(&self.traces[n])
    }

    pub fn beta(&self) -> &[f64] {
        &self.data.beta
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n > self.depth() {
            return Err(Error::Range(format!(
                "level {n} exceeds depth {}",
                self.depth()
            )));
        }
        Ok(())
    }

    /// `ι_{n→T}(a)` for `a` on level `n`.
    pub fn embed_element(&self, n: usize, a: &AlgebraElement) -> Result<AlgebraElement> {
        self.embed_between(n, self.depth(), a)
    }

    /// `ι_{n→m}(a)` for `n ≤ m`.
    pub fn embed_between(&self, n: usize, m: usize, a: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_level(m)?;
        if n > m {
            return Err(Error::Range(format!(
                "cannot embed level {n} into lower level {m}"
            )));
        }
        if a.algebra() != &self.levels[n] {
            return Err(Error::Shape(format!("element does not live on level {n}")));
        }
        let mut cur = a.clone();
        for e in &self.embeddings[n..m] {
            cur = e.apply(&cur)?;
        }
        Ok(cur)
    }

    /// Trace-preserving conditional expectation `E_n` on `A_T`.
    pub fn conditional_expectation(&self, n: usize, f: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_level(n)?;
        if f.algebra() != self.top() {
            return Err(Error::Shape(
                "element does not live on the top level".into(),
            ));
        }
        if n == self.depth() {
            return Ok(f.clone());
        }
        let proj = &self.projections[n];
        let weights = self.top_trace().weights();
        let rhs: Vec<Complex64> = proj
            .images
            .iter()
            .map(|img| {
                img.iter()
                    .map(|&(b, r, c, z)| z.conj() * f.block(b)[(r, c)] * weights[b])
                    .sum()
            })
            .collect();
        let coef = cholesky_solve(proj.images.len(), &proj.chol, &rhs);
        let mut blocks: Vec<CMatrix> = self
            .top()
            .block_sizes()
            .iter()
            .map(|&m| CMatrix::zeros(m))
            .collect();
        for (img, &c) in proj.images.iter().zip(&coef) {
            for &(b, r, col, z) in img {
                blocks[b][(r, col)] += z * c;
            }
        }
        self.top().element(blocks)
    }

    /// `max_n ‖f − E_n f‖ / β(n)` over `n = 0..=T`.
    pub fn af_lip_norm(&self, f: &AlgebraElement) -> Result<f64> {
        f.require_self_adjoint("argument of the AF Lip-norm")?;
        let mut best = 0.0f64;
        for n in 0..self.depth() {
            let gap = f.sub(&self.conditional_expectation(n, f)?)?.operator_norm();
            best = best.max(gap / self.data.beta[n]);
        }
        Ok(best)
    }

    /// Real matrix of `E_n` acting on self-adjoint coordinates of `A_T`,
    /// row-major, `D x D` with `D = dim A_T`.
    pub fn sa_expectation_matrix(&self, n: usize) -> Result<Vec<f64>> {
        self.check_level(n)?;
        let top = self.top();
        let d = top.dimension();
        let mut out = vec![0.0; d * d];
        let mut basis = vec![0.0; d];
        for k in 0..d {
            basis.iter_mut().for_each(|x| *x = 0.0);
            basis[k] = 1.0;
            let e = top.from_sa_coordinates(&basis)?;
            let img = self.conditional_expectation(n, &e)?.sa_coordinates();
            for (row, v) in img.iter().enumerate() {
                out[row * d + k] = *v;
            }
        }
        Ok(out)
    }
}

/// Complex Cholesky `G = L L*`; `None` if a pivot is not positive.
fn cholesky(n: usize, g: &[Complex64]) -> Option<Vec<Complex64>> {
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    let scale = (0..n).map(|i| g[i * n + i].re.abs()).fold(0.0, f64::max);
    for j in 0..n {
        let mut d = g[j * n + j].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 1e-14 * scale) {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = Complex64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut s = g[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

fn cholesky_solve(n: usize, l: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i].conj() * y[k];
        }
        y[i] = s / l[i * n + i].conj();
    }
    y
}

/// Chain `C ⊂ M_n` with the normalized trace and the given β.
pub fn scalars_in_matrix(n: usize, beta: [f64; 2]) -> Result<AfChain> {
    AfChain::new(ChainData {
        levels: vec![vec![1], vec![n]],
        mult: vec![vec![vec![n]]],
        trace_weights: vec![1.0 / n as f64],
        beta: beta.to_vec(),
    })
}
