//! JSON documents for chains, spaces, elements and states.
//!
//! Complex entries are `[re, im]` pairs and reals are written in shortest
//! round-trip form, so `parse(serialize(x)) == x` bit for bit. Syntax errors
//! carry line and column; structural errors name the offending field.
//!
//! ```text
//! chain:   {"blocks": [[1], [1, 1]], "mult": [[[1, 1]]], "trace_weights": [0.5, 0.5], "beta": [1, 0.5]}
//! space:   {"labels": ["a", "b"], "distances": [[0, 1], [1, 0]]}
//! element: {"values":    [point][block][row][col] = [re, im]}
//! state:   {"densities": [point][block][row][col] = [re, im]}
//! ```

use crate::algebra::{AlgebraElement, BlockAlgebra, CMatrix};
use crate::chain::{validate_chain, AfChain, ChainData};
use crate::cxa::CxaElement;
use crate::error::{Error, Result};
use crate::mk::CxaState;
use crate::spaces::FiniteMetricSpace;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

type BlockRows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    blocks: Vec<Vec<usize>>,
    #[serde(default)]
    mult: Vec<Vec<Vec<usize>>>,
    trace_weights: Vec<f64>,
    beta: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    distances: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementFile {
    values: Vec<Vec<BlockRows>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    densities: Vec<Vec<BlockRows>>,
}

fn from_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("finite documents serialize");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn chain_from_str(text: &str) -> Result<AfChain> {
    let f: ChainFile = from_json(text, "chain")?;
    let data = ChainData {
        levels: f.blocks,
        mult: f.mult,
        trace_weights: f.trace_weights,
        beta: f.beta,
    };
    let report = validate_chain(&data);
    if let Some(issue) = report.issues.first() {
        let field = match issue.level {
            Some(n) => format!("chain level {n}"),
            None => "chain".to_string(),
        };
        let all: Vec<String> = report.issues.iter().map(|i| i.to_string()).collect();
        return Err(Error::Validation(format!("{field}: {}", all.join("; "))));
    }
    AfChain::new(data)
}

pub fn chain_to_string(chain: &AfChain) -> String {
    let d = chain.data();
    to_json(&ChainFile {
        blocks: d.levels.clone(),
        mult: d.mult.clone(),
        trace_weights: d.trace_weights.clone(),
        beta: d.beta.clone(),
    })
}

pub fn parse_chain(path: impl AsRef<Path>) -> Result<AfChain> {
    let path = path.as_ref();
    chain_from_str(&read(path)?).map_err(|e| in_file(path, e))
}

pub fn space_from_str(text: &str) -> Result<FiniteMetricSpace> {
    let f: SpaceFile = from_json(text, "space")?;
    let n = f.distances.len();
    let labels = match f.labels {
        Some(l) => l,
        None => (0..n).map(|i| format!("x{i}")).collect(),
    };
    FiniteMetricSpace::new(labels, f.distances)
}

pub fn space_to_string(space: &FiniteMetricSpace) -> String {
    to_json(&SpaceFile {
        labels: Some(space.labels().to_vec()),
        distances: space.distances().to_vec(),
    })
}

pub fn parse_space(path: impl AsRef<Path>) -> Result<FiniteMetricSpace> {
    let path = path.as_ref();
    space_from_str(&read(path)?).map_err(|e| in_file(path, e))
}

fn in_file(path: &Path, e: Error) -> Error {
    let at = |m: String| format!("{}: {m}", path.display());
    match e {
        Error::Parse(m) => Error::Parse(at(m)),
        Error::Validation(m) => Error::Validation(at(m)),
        Error::Shape(m) => Error::Shape(at(m)),
        Error::Domain(m) => Error::Domain(at(m)),
        other => other,
    }
}

fn decode_point(
    field: &str,
    x: usize,
    blocks: Vec<BlockRows>,
    top: &BlockAlgebra,
) -> Result<AlgebraElement> {
    let sizes = top.block_sizes();
    if blocks.len() != sizes.len() {
        return Err(Error::Shape(format!(
            "{field}[{x}]: {} blocks, top level has {}",
            blocks.len(),
            sizes.len()
        )));
    }
    let mats = blocks
        .into_iter()
        .zip(sizes)
        .enumerate()
        .map(|(l, (rows, &m))| {
            if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                return Err(Error::Shape(format!(
                    "{field}[{x}][{l}]: expected a {m}x{m} block"
                )));
            }
            let data = rows
                .into_iter()
                .flatten()
                .map(|[re, im]| Complex64::new(re, im))
                .collect();
            Ok(CMatrix::from_row_major(m, data).expect("square"))
        })
        .collect::<Result<Vec<_>>>()?;
    top.element(mats)
}

fn decode_values(
    field: &str,
    points: Vec<Vec<BlockRows>>,
    space: &FiniteMetricSpace,
    chain: &AfChain,
) -> Result<Vec<AlgebraElement>> {
    if points.len() != space.len() {
        return Err(Error::Shape(format!(
            "{field}: {} points, space has {}",
            points.len(),
            space.len()
        )));
    }
    points
        .into_iter()
        .enumerate()
        .map(|(x, b)| decode_point(field, x, b, chain.top()))
        .collect()
}

fn encode_values(values: &[AlgebraElement]) -> Vec<Vec<BlockRows>> {
    values
        .iter()
        .map(|v| {
            v.blocks()
                .iter()
                .map(|b| {
                    b.as_slice()
                        .chunks(b.size())
                        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
                        .collect()
                })
                .collect()
        })
        .collect()
}

pub fn element_from_str(
    text: &str,
    space: Arc<FiniteMetricSpace>,
    chain: Arc<AfChain>,
) -> Result<CxaElement> {
    let f: ElementFile = from_json(text, "element")?;
    let values = decode_values("values", f.values, &space, &chain)?;
    CxaElement::new(space, chain, values)
}

pub fn element_to_string(g: &CxaElement) -> String {
    to_json(&ElementFile {
        values: encode_values(g.values()),
    })
}

pub fn parse_element(
    path: impl AsRef<Path>,
    space: Arc<FiniteMetricSpace>,
    chain: Arc<AfChain>,
) -> Result<CxaElement> {
    let path = path.as_ref();
    element_from_str(&read(path)?, space, chain).map_err(|e| in_file(path, e))
}

pub fn state_from_str(
    text: &str,
    space: Arc<FiniteMetricSpace>,
    chain: Arc<AfChain>,
) -> Result<CxaState> {
    let f: StateFile = from_json(text, "state")?;
    let densities = decode_values("densities", f.densities, &space, &chain)?;
    CxaState::new(space, chain, densities)
}

pub fn state_to_string(s: &CxaState) -> String {
    to_json(&StateFile {
        densities: encode_values(s.densities()),
    })
}

pub fn parse_state(
    path: impl AsRef<Path>,
    space: Arc<FiniteMetricSpace>,
    chain: Arc<AfChain>,
) -> Result<CxaState> {
    let path = path.as_ref();
    state_from_str(&read(path)?, space, chain).map_err(|e| in_file(path, e))
}
